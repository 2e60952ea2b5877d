//! Point clouds: the input to every pipeline stage.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::io::{self, fmt_f64};

/// `N` points in ambient dimension `n`, stored row-major, with optional
/// unique string labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Array2<f64>,
    ids: Option<Vec<String>>,
}

impl PointCloud {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        Self::with_ids(points, None)
    }

    pub fn with_ids(points: Array2<f64>, ids: Option<Vec<String>>) -> Result<Self> {
        let (n_points, dim) = points.dim();
        if n_points < 2 {
            return Err(Error::InvalidCloud(format!(
                "need at least 2 points, got {n_points}"
            )));
        }
        if dim < 1 {
            return Err(Error::InvalidCloud(
                "ambient dimension must be at least 1".into(),
            ));
        }
        if let Some((i, _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "non-finite coordinate at {i:?}"
            )));
        }
        if let Some(ids) = &ids {
            if ids.len() != n_points {
                return Err(Error::InvalidCloud(format!(
                    "{} ids for {n_points} points",
                    ids.len()
                )));
            }
            let mut seen = HashSet::with_capacity(ids.len());
            for id in ids {
                if !seen.insert(id.as_str()) {
                    return Err(Error::InvalidCloud(format!("duplicate id {id:?}")));
                }
            }
        }
        Ok(Self { points, ids })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    /// Label of point `i`: its id when present, otherwise the index.
    pub fn label(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    /// Reads a cloud from CSV. A first row whose coordinate fields are not all
    /// numeric is treated as a header; a non-numeric first field in the data
    /// rows marks a leading id column.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            records.push(rec);
        }
        if records.is_empty() {
            return Err(Error::InvalidCloud("empty CSV".into()));
        }
        let numeric = |s: &str| s.parse::<f64>().is_ok();
        let is_header = {
            let first = &records[0];
            first.iter().skip(1).any(|f| !numeric(f)) || first.iter().all(|f| !numeric(f))
        };
        let data = if is_header {
            &records[1..]
        } else {
            &records[..]
        };
        if data.is_empty() {
            return Err(Error::InvalidCloud(
                "CSV has a header but no data rows".into(),
            ));
        }
        let has_ids = !numeric(&data[0][0]);
        let offset = usize::from(has_ids);
        let dim = data[0].len() - offset;
        let mut flat = Vec::with_capacity(data.len() * dim);
        let mut ids = Vec::new();
        for (row, rec) in data.iter().enumerate() {
            if has_ids {
                ids.push(rec[0].to_string());
            }
            for field in rec.iter().skip(offset) {
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidCloud(format!("row {row}: cannot parse {field:?} as a number"))
                })?;
                flat.push(v);
            }
        }
        let points = Array2::from_shape_vec((data.len(), dim), flat)
            .map_err(|e| Error::InvalidCloud(e.to_string()))?;
        Self::with_ids(points, has_ids.then_some(ids))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header: Vec<String> = Vec::new();
        if self.ids.is_some() {
            header.push("id".into());
        }
        header.extend((0..self.dim()).map(|j| format!("x{j}")));
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in self.points.rows().into_iter().enumerate() {
            let mut fields: Vec<String> = Vec::with_capacity(row.len() + 1);
            if let Some(ids) = &self.ids {
                fields.push(ids[i].clone());
            }
            fields.extend(row.iter().map(|&v| fmt_f64(v)));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Little-endian "DCPC" container: magic, u32 N, u32 n, N*n f64 row-major.
    /// Ids are not carried by the binary format.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        io::write_magic(&mut w, io::MAGIC_CLOUD)?;
        io::write_u32(&mut w, self.len())?;
        io::write_u32(&mut w, self.dim())?;
        io::write_f64s(&mut w, self.points.iter().copied())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        io::expect_magic(&mut r, io::MAGIC_CLOUD)?;
        let n_points = io::read_u32(&mut r)? as usize;
        let dim = io::read_u32(&mut r)? as usize;
        let flat = io::read_f64s(&mut r, n_points * dim)?;
        let points = Array2::from_shape_vec((n_points, dim), flat)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::new(points)
    }

    /// Loads by extension: `.bin`/`.dcpc` as binary, anything else as CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("dcpc") => {
                Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
            }
            _ => Self::load_csv(path),
        }
    }
}
