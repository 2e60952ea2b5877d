//! Diffusion curvature: the average t-step transition probability from a
//! point (or region) into its diffusion ball.
//!
//! For a point `x` with ball `B(x, r)` at diffusion time `t`,
//!
//! ```text
//! C(x) = sum_{y in B(x, r)} P^t[x, y] / |B(x, r)|
//! ```
//!
//! so `0 <= C(x) <= 1 / |B(x, r)|`. Higher values mean a lazier walk, which
//! corresponds to more positive curvature. Ball radii are measured in
//! diffusion distance at the same `t`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiffusionOperator, PoweredOperator};
use crate::io::fmt_f64;
use crate::stats;

pub const DEFAULT_TIME: u32 = 8;
pub const DEFAULT_QUANTILE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusRule {
    /// Per point: the q-quantile (nearest rank) of its diffusion distances to all other points.
    Quantile(f64),
    /// One radius shared by every point.
    Fixed(f64),
}

impl Default for RadiusRule {
    fn default() -> Self {
        RadiusRule::Quantile(DEFAULT_QUANTILE)
    }
}

impl RadiusRule {
    fn validate(&self) -> Result<()> {
        match *self {
            RadiusRule::Quantile(q) if !(0.0..=1.0).contains(&q) => Err(Error::InvalidConfig(
                format!("radius quantile {q} outside [0, 1]"),
            )),
            RadiusRule::Fixed(r) if !(r >= 0.0) => Err(Error::InvalidConfig(format!(
                "radius {r} must be nonnegative"
            ))),
            _ => Ok(()),
        }
    }

    /// Radius for `center` given its distance row.
    pub fn resolve(&self, center: usize, distances: &[f64]) -> f64 {
        match *self {
            RadiusRule::Fixed(r) => r,
            RadiusRule::Quantile(q) => {
                let mut others: Vec<f64> = distances
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != center)
                    .map(|(_, &d)| d)
                    .collect();
                if others.is_empty() {
                    return 0.0;
                }
                let m = others.len();
                let rank = ((q * m as f64).ceil() as usize).clamp(1, m);
                let (_, v, _) = others.select_nth_unstable_by(rank - 1, f64::total_cmp);
                *v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionBall {
    pub center: usize,
    pub radius: f64,
    /// Sorted; always contains `center`.
    pub members: Vec<usize>,
}

impl DiffusionBall {
    fn from_distances(center: usize, radius: f64, distances: &[f64]) -> Self {
        let members = distances
            .iter()
            .enumerate()
            .filter(|&(j, &d)| j == center || d <= radius)
            .map(|(j, _)| j)
            .collect();
        Self {
            center,
            radius,
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Points within diffusion distance `r` of `center` at time `t`.
pub fn diffusion_ball(
    op: &DiffusionOperator,
    t: u32,
    center: usize,
    r: f64,
) -> Result<DiffusionBall> {
    if center >= op.len() {
        return Err(Error::InvalidConfig(format!(
            "center {center} out of range"
        )));
    }
    RadiusRule::Fixed(r).validate()?;
    let powered = PoweredOperator::new(op, t)?;
    Ok(DiffusionBall::from_distances(
        center,
        r,
        &powered.distance_row(center),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub t: u32,
    pub radius_rule: RadiusRule,
    pub ball_sizes: Vec<usize>,
    pub radii: Vec<f64>,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `point_id,curvature,ball_size`, one row per point.
    pub fn write_csv<W: Write>(&self, mut w: W, ids: Option<&[String]>) -> Result<()> {
        writeln!(w, "point_id,curvature,ball_size")?;
        for (i, (c, b)) in self.values.iter().zip(&self.ball_sizes).enumerate() {
            match ids {
                Some(ids) => writeln!(w, "{},{},{}", ids[i], fmt_f64(*c), b)?,
                None => writeln!(w, "{},{},{}", i, fmt_f64(*c), b)?,
            }
        }
        Ok(())
    }
}

/// Parameters recorded next to a curvature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSidecar {
    pub t: u32,
    pub radius_rule: RadiusRule,
    pub sigma: f64,
    pub alpha: f64,
    pub seed: u64,
}

/// Curvature of every point from an already powered operator.
pub fn curvature_from_powered(
    powered: &PoweredOperator,
    rule: RadiusRule,
) -> Result<CurvatureField> {
    rule.validate()?;
    let pt = powered.matrix();
    let distances = powered.distance_matrix();
    let per_point: Vec<(f64, usize, f64)> = (0..powered.len())
        .into_par_iter()
        .map(|i| {
            let dist = distances.row(i).to_vec();
            let r = rule.resolve(i, &dist);
            let ball = DiffusionBall::from_distances(i, r, &dist);
            let mass: f64 = ball.members.iter().map(|&y| pt[[i, y]]).sum();
            (mass / ball.len() as f64, ball.len(), r)
        })
        .collect();
    Ok(CurvatureField {
        values: per_point.iter().map(|p| p.0).collect(),
        ball_sizes: per_point.iter().map(|p| p.1).collect(),
        radii: per_point.iter().map(|p| p.2).collect(),
        t: powered.t,
        radius_rule: rule,
    })
}

pub fn pointwise_curvature(
    op: &DiffusionOperator,
    t: u32,
    rule: RadiusRule,
) -> Result<CurvatureField> {
    curvature_from_powered(&PoweredOperator::new(op, t)?, rule)
}

/// Curvature of a region: the uniform distribution on `region` is diffused for
/// `t` steps and its mass over the union of the members' balls is averaged
/// over that union.
pub fn region_curvature(
    op: &DiffusionOperator,
    t: u32,
    region: &[usize],
    rule: RadiusRule,
) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    rule.validate()?;
    let n = op.len();
    if let Some(&bad) = region.iter().find(|&&u| u >= n) {
        return Err(Error::InvalidConfig(format!(
            "region index {bad} out of range"
        )));
    }
    let powered = PoweredOperator::new(op, t)?;
    let pt = powered.matrix();
    let weight = 1.0 / region.len() as f64;
    let mut mass = vec![0.0; n];
    let mut in_union = vec![false; n];
    for &u in region {
        for (m, &p) in mass.iter_mut().zip(pt.row(u)) {
            *m += weight * p;
        }
        let dist = powered.distance_row(u);
        let r = rule.resolve(u, &dist);
        for y in DiffusionBall::from_distances(u, r, &dist).members {
            in_union[y] = true;
        }
    }
    let size = in_union.iter().filter(|&&b| b).count();
    let total: f64 = (0..n).filter(|&y| in_union[y]).map(|y| mass[y]).sum();
    Ok(total / size as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
    pub n: usize,
}

/// Pearson and Spearman correlation between curvature and a reference over the masked points.
pub fn curvature_correlation(
    field: &CurvatureField,
    reference: &[f64],
    interior_mask: &[bool],
) -> Result<Correlation> {
    let n = field.len();
    if reference.len() != n || interior_mask.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} reference values and mask entries"),
            got: format!("{} and {}", reference.len(), interior_mask.len()),
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = (0..n)
        .filter(|&i| interior_mask[i])
        .map(|i| (field.values[i], reference[i]))
        .unzip();
    if x.len() < 10 {
        return Err(Error::InvalidConfig(format!(
            "mask selects {} points, need 10",
            x.len()
        )));
    }
    Ok(Correlation {
        pearson: stats::pearson(&x, &y)?,
        spearman: stats::spearman(&x, &y)?,
        n: x.len(),
    })
}

/// Mean curvature over masked points.
pub fn masked_mean(field: &CurvatureField, mask: &[bool]) -> f64 {
    let picked: Vec<f64> = field
        .values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .collect();
    stats::mean(&picked)
}
