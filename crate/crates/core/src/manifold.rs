//! Seeded synthetic surfaces and random quadrics with analytic curvature.
//!
//! Surface samples are uniform with respect to area, drawn by rejection from a
//! parametrization. Open patches (graphs over a disk, the one-sheet
//! hyperboloid) carry an interior mask: points whose ambient distance to the
//! patch boundary exceeds [`INTERIOR_FRACTION`] of the patch diameter.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub const INTERIOR_FRACTION: f64 = 0.1;
const BOUNDARY_SAMPLES: usize = 1440;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child seed for `stream` under `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surface {
    Sphere {
        radius: f64,
    },
    /// Tube of radius `minor` around a circle of radius `major`.
    Torus {
        major: f64,
        minor: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `z = scale (x^2 - y^2)` over the disk of the given radius.
    HyperbolicParaboloid {
        scale: f64,
        radius: f64,
    },
    /// One sheet `(x^2 + y^2)/a^2 - z^2/c^2 = 1` cut at `|z| <= height`.
    Hyperboloid {
        a: f64,
        c: f64,
        height: f64,
    },
    /// Flat disk in the z = 0 plane.
    Plane {
        radius: f64,
    },
    /// `z = [x y] Q [x y]^T` over the disk of the given radius.
    QuadricGraph {
        q: [[f64; 2]; 2],
        radius: f64,
    },
}

impl Surface {
    pub fn name(&self) -> &'static str {
        match self {
            Surface::Sphere { .. } => "sphere",
            Surface::Torus { .. } => "torus",
            Surface::Ellipsoid { .. } => "ellipsoid",
            Surface::HyperbolicParaboloid { .. } => "hyperbolic_paraboloid",
            Surface::Hyperboloid { .. } => "hyperboloid",
            Surface::Plane { .. } => "plane",
            Surface::QuadricGraph { .. } => "quadric_graph",
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSurfaceParams(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match *self {
            Surface::Sphere { radius } => positive("radius", radius),
            Surface::Torus { major, minor } => {
                positive("major radius", major)?;
                positive("minor radius", minor)?;
                if minor >= major {
                    return Err(Error::InvalidSurfaceParams(format!(
                        "torus needs minor < major, got minor {minor} >= major {major}"
                    )));
                }
                Ok(())
            }
            Surface::Ellipsoid { a, b, c } => {
                positive("a", a)?;
                positive("b", b)?;
                positive("c", c)
            }
            Surface::HyperbolicParaboloid { scale, radius } => {
                if !scale.is_finite() {
                    return Err(Error::InvalidSurfaceParams("scale must be finite".into()));
                }
                positive("radius", radius)
            }
            Surface::Hyperboloid { a, c, height } => {
                positive("a", a)?;
                positive("c", c)?;
                positive("height", height)
            }
            Surface::Plane { radius } => positive("radius", radius),
            Surface::QuadricGraph { q, radius } => {
                if q[0][1] != q[1][0] || q.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSurfaceParams(
                        "Q must be finite and symmetric".into(),
                    ));
                }
                positive("radius", radius)
            }
        }
    }

    /// The 2x2 symmetric matrix of a graph surface `z = [x y] Q [x y]^T`.
    fn graph_matrix(&self) -> Option<([[f64; 2]; 2], f64)> {
        match *self {
            Surface::HyperbolicParaboloid { scale, radius } => {
                Some(([[scale, 0.0], [0.0, -scale]], radius))
            }
            Surface::Plane { radius } => Some(([[0.0; 2]; 2], radius)),
            Surface::QuadricGraph { q, radius } => Some((q, radius)),
            _ => None,
        }
    }
}

/// A seeded sample of a surface with per-point analytic Gaussian curvature.
#[derive(Debug, Clone)]
pub struct SurfaceSample {
    pub cloud: PointCloud,
    pub gauss_curvature: Vec<f64>,
    pub surface: Surface,
    pub seed: u64,
    /// `true` for points far enough from the patch boundary (always `true` on closed surfaces).
    pub interior: Vec<bool>,
    /// Noiseless parameter-domain coordinates of each sample (surface specific).
    pub params: Array2<f64>,
}

/// `det(H) / (1 + |grad f|^2)^2` for the graph of `f` over the plane.
pub fn gaussian_curvature_of_graph(hessian: [[f64; 2]; 2], gradient: [f64; 2]) -> f64 {
    let det = hessian[0][0] * hessian[1][1] - hessian[0][1] * hessian[1][0];
    let g2 = gradient[0] * gradient[0] + gradient[1] * gradient[1];
    det / ((1.0 + g2) * (1.0 + g2))
}

fn sym2_spectral_norm(q: [[f64; 2]; 2]) -> f64 {
    let (a, b, d) = (q[0][0], q[0][1], q[1][1]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid + rad).abs().max((mid - rad).abs())
}

fn uniform_in_disk<R: Rng>(rng: &mut R, radius: f64) -> [f64; 2] {
    loop {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let y: f64 = rng.gen_range(-1.0..1.0);
        if x * x + y * y <= 1.0 {
            return [x * radius, y * radius];
        }
    }
}

fn unit_normal3<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

struct RawSample {
    point: [f64; 3],
    curvature: f64,
    params: [f64; 2],
}

fn sample_graph<R: Rng>(q: [[f64; 2]; 2], radius: f64, rng: &mut R) -> RawSample {
    let max_grad = 2.0 * radius * sym2_spectral_norm(q);
    let max_area = (1.0 + max_grad * max_grad).sqrt();
    loop {
        let [x, y] = uniform_in_disk(rng, radius);
        let gx = 2.0 * (q[0][0] * x + q[0][1] * y);
        let gy = 2.0 * (q[1][0] * x + q[1][1] * y);
        let area = (1.0 + gx * gx + gy * gy).sqrt();
        if rng.gen::<f64>() * max_area <= area {
            let z = q[0][0] * x * x + 2.0 * q[0][1] * x * y + q[1][1] * y * y;
            let hessian = [
                [2.0 * q[0][0], 2.0 * q[0][1]],
                [2.0 * q[1][0], 2.0 * q[1][1]],
            ];
            return RawSample {
                point: [x, y, z],
                curvature: gaussian_curvature_of_graph(hessian, [gx, gy]),
                params: [x, y],
            };
        }
    }
}

fn sample_one<R: Rng>(surface: &Surface, rng: &mut R) -> RawSample {
    use std::f64::consts::PI;
    match *surface {
        Surface::Sphere { radius } => {
            let u = unit_normal3(rng);
            RawSample {
                point: [radius * u[0], radius * u[1], radius * u[2]],
                curvature: 1.0 / (radius * radius),
                params: [u[2].acos(), u[1].atan2(u[0])],
            }
        }
        Surface::Torus { major, minor } => loop {
            let u = rng.gen_range(0.0..2.0 * PI);
            let v = rng.gen_range(0.0..2.0 * PI);
            let ring = major + minor * v.cos();
            if rng.gen::<f64>() * (major + minor) <= ring {
                return RawSample {
                    point: [ring * u.cos(), ring * u.sin(), minor * v.sin()],
                    curvature: v.cos() / (minor * ring),
                    params: [u, v],
                };
            }
        },
        Surface::Ellipsoid { a, b, c } => {
            let max_area = (b * c).max(a * c).max(a * b);
            loop {
                let u = unit_normal3(rng);
                let area =
                    ((b * c * u[0]).powi(2) + (a * c * u[1]).powi(2) + (a * b * u[2]).powi(2))
                        .sqrt();
                if rng.gen::<f64>() * max_area <= area {
                    let (x, y, z) = (a * u[0], b * u[1], c * u[2]);
                    let s = x * x / a.powi(4) + y * y / b.powi(4) + z * z / c.powi(4);
                    return RawSample {
                        point: [x, y, z],
                        curvature: 1.0 / (a * a * b * b * c * c * s * s),
                        params: [u[2].acos(), u[1].atan2(u[0])],
                    };
                }
            }
        }
        Surface::Hyperboloid { a, c, height } => {
            let smax = height / c;
            let max_area = a * (c * c * (1.0 + smax * smax) + a * a * smax * smax).sqrt();
            loop {
                let u = rng.gen_range(0.0..2.0 * PI);
                let s = rng.gen_range(-smax..=smax);
                let area = a * (c * c * (1.0 + s * s) + a * a * s * s).sqrt();
                if rng.gen::<f64>() * max_area <= area {
                    let rho = a * (1.0 + s * s).sqrt();
                    let (x, y, z) = (rho * u.cos(), rho * u.sin(), c * s);
                    let w = (x * x + y * y) / a.powi(4) + z * z / c.powi(4);
                    return RawSample {
                        point: [x, y, z],
                        curvature: -1.0 / (a.powi(4) * c * c * w * w),
                        params: [u, s],
                    };
                }
            }
        }
        _ => {
            let (q, radius) = surface.graph_matrix().expect("graph surface");
            sample_graph(q, radius, rng)
        }
    }
}

/// Boundary curve(s) of an open patch, densely sampled.
fn boundary_points(surface: &Surface) -> Option<Vec<[f64; 3]>> {
    use std::f64::consts::PI;
    let angles = (0..BOUNDARY_SAMPLES).map(|i| 2.0 * PI * i as f64 / BOUNDARY_SAMPLES as f64);
    if let Some((q, radius)) = surface.graph_matrix() {
        return Some(
            angles
                .map(|th| {
                    let (x, y) = (radius * th.cos(), radius * th.sin());
                    [
                        x,
                        y,
                        q[0][0] * x * x + 2.0 * q[0][1] * x * y + q[1][1] * y * y,
                    ]
                })
                .collect(),
        );
    }
    if let Surface::Hyperboloid { a, c, height } = *surface {
        let s = height / c;
        let rho = a * (1.0 + s * s).sqrt();
        let mut pts = Vec::with_capacity(2 * BOUNDARY_SAMPLES);
        for th in angles {
            pts.push([rho * th.cos(), rho * th.sin(), height]);
            pts.push([rho * th.cos(), rho * th.sin(), -height]);
        }
        return Some(pts);
    }
    None
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn interior_mask(surface: &Surface, points: &[[f64; 3]]) -> Vec<bool> {
    let Some(boundary) = boundary_points(surface) else {
        return vec![true; points.len()];
    };
    // the patches here are bounded by their boundary curves, so the diameter is
    // attained between boundary points
    let mut diameter: f64 = 0.0;
    for (i, a) in boundary.iter().enumerate() {
        for b in &boundary[i + 1..] {
            diameter = diameter.max(dist3(a, b));
        }
    }
    let threshold = INTERIOR_FRACTION * diameter;
    points
        .iter()
        .map(|p| {
            boundary
                .iter()
                .map(|b| dist3(p, b))
                .fold(f64::INFINITY, f64::min)
                > threshold
        })
        .collect()
}

/// Area-uniform seeded sample of `surface` with analytic curvature at each
/// noiseless location; isotropic Gaussian noise of `noise_sd` is added afterwards.
pub fn sample_surface(
    surface: &Surface,
    n_points: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<SurfaceSample> {
    surface.validate()?;
    if n_points < 10 {
        return Err(Error::InvalidConfig(format!(
            "need at least 10 points, got {n_points}"
        )));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise_sd must be nonnegative, got {noise_sd}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let raw: Vec<RawSample> = (0..n_points)
        .map(|_| sample_one(surface, &mut rng))
        .collect();
    let clean: Vec<[f64; 3]> = raw.iter().map(|s| s.point).collect();
    let interior = interior_mask(surface, &clean);
    let mut points = Array2::zeros((n_points, 3));
    for (i, p) in clean.iter().enumerate() {
        for k in 0..3 {
            let noise: f64 = if noise_sd > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                noise_sd * z
            } else {
                0.0
            };
            points[[i, k]] = p[k] + noise;
        }
    }
    let params = Array2::from_shape_fn((n_points, 2), |(i, k)| raw[i].params[k]);
    Ok(SurfaceSample {
        cloud: PointCloud::new(points)?,
        gauss_curvature: raw.iter().map(|s| s.curvature).collect(),
        surface: surface.clone(),
        seed,
        interior,
        params,
    })
}

/// Symmetric `K x K` matrix whose nonzero entries live in the leading `k x k` block.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadric {
    pub q: Array2<f64>,
    pub intrinsic_dim: usize,
}

/// Number of upper-triangular entries of a `k x k` matrix.
pub fn n_coefficients(k: usize) -> usize {
    k * (k + 1) / 2
}

impl Quadric {
    pub fn new(q: Array2<f64>, intrinsic_dim: usize) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n || intrinsic_dim > n {
            return Err(Error::ShapeMismatch {
                expected: format!("square matrix of size >= {intrinsic_dim}"),
                got: format!("{:?}", q.dim()),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if q[[i, j]] != q[[j, i]] {
                    return Err(Error::InvalidConfig(
                        "quadric matrix is not symmetric".into(),
                    ));
                }
                if (i >= intrinsic_dim || j >= intrinsic_dim) && q[[i, j]] != 0.0 {
                    return Err(Error::InvalidConfig("padding block must be zero".into()));
                }
            }
        }
        Ok(Self { q, intrinsic_dim })
    }

    pub fn size(&self) -> usize {
        self.q.nrows()
    }

    /// Upper triangle in row-major order, length `K(K+1)/2`.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.size();
        let mut out = Vec::with_capacity(n_coefficients(n));
        for i in 0..n {
            for j in i..n {
                out.push(self.q[[i, j]]);
            }
        }
        out
    }

    /// Rebuilds the symmetric matrix from its row-major upper triangle.
    pub fn from_upper_triangle(values: &[f64], size: usize) -> Result<Self> {
        if values.len() != n_coefficients(size) {
            return Err(Error::ShapeMismatch {
                expected: format!("{} coefficients", n_coefficients(size)),
                got: values.len().to_string(),
            });
        }
        let mut q = Array2::zeros((size, size));
        let mut it = values.iter();
        for i in 0..size {
            for j in i..size {
                let v = *it.next().expect("length checked");
                q[[i, j]] = v;
                q[[j, i]] = v;
            }
        }
        let intrinsic_dim = (0..size)
            .rev()
            .find(|&i| q.row(i).iter().any(|&v| v != 0.0))
            .map_or(0, |i| i + 1);
        Ok(Self { q, intrinsic_dim })
    }

    /// `x^T Q_k x` using the active block.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let k = self.intrinsic_dim.min(x.len());
        let mut acc = 0.0;
        for a in 0..k {
            let mut row = 0.0;
            for b in 0..k {
                row += self.q[[a, b]] * x[b];
            }
            acc += x[a] * row;
        }
        acc
    }
}

/// Random quadric: upper triangle of the `k x k` block i.i.d. uniform on
/// `[-coeff_range, coeff_range]`, mirrored, zero-padded to `size x size`.
pub fn random_quadric(k: usize, size: usize, coeff_range: f64, seed: u64) -> Result<Quadric> {
    if k < 2 || k > size {
        return Err(Error::InvalidConfig(format!(
            "need 2 <= k <= K, got k = {k}, K = {size}"
        )));
    }
    if !(coeff_range > 0.0 && coeff_range.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "coefficient range must be positive, got {coeff_range}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut q = Array2::zeros((size, size));
    for i in 0..k {
        for j in i..k {
            let v = rng.gen_range(-coeff_range..=coeff_range);
            q[[i, j]] = v;
            q[[j, i]] = v;
        }
    }
    Ok(Quadric {
        q,
        intrinsic_dim: k,
    })
}

/// Inputs uniform in the `k`-ball of radius `domain_radius` and their quadric values.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricSample {
    pub xs: Array2<f64>,
    pub ys: Array1<f64>,
}

/// Uniform point in the `k`-ball of the given radius.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, k: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let r = radius * rng.gen::<f64>().powf(1.0 / k as f64);
    v.iter_mut().for_each(|x| *x *= r / norm);
    v
}

pub fn sample_quadric(
    quadric: &Quadric,
    n_points: usize,
    domain_radius: f64,
    seed: u64,
) -> Result<QuadricSample> {
    let k = quadric.intrinsic_dim;
    if n_points < n_coefficients(k) + 1 {
        return Err(Error::InvalidConfig(format!(
            "need at least {} points for a {k}-dimensional quadric",
            n_coefficients(k) + 1
        )));
    }
    if !(domain_radius > 0.0) {
        return Err(Error::InvalidConfig(
            "domain radius must be positive".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut xs = Array2::zeros((n_points, k));
    let mut ys = Array1::zeros(n_points);
    for i in 0..n_points {
        let x = uniform_in_ball(&mut rng, k, domain_radius);
        ys[i] = quadric.evaluate(&x);
        xs.row_mut(i).assign(&Array1::from(x));
    }
    Ok(QuadricSample { xs, ys })
}
