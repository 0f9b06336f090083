//! Classical ground truth: grid discretization, dataset ingestion and
//! brute-force neighbor enumeration.

use std::io::Read;

use serde::Serialize;

use crate::circuits::OracleKind;
use crate::{Error, Result};

/// Particles with labels `0..N` and integer grid coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleDataset {
    dim: usize,
    coords: Vec<u64>,
    raw: Option<Vec<f64>>,
    dx: Option<f64>,
}

impl ParticleDataset {
    /// One-dimensional dataset; particle `i` sits at `positions[i]`.
    pub fn new(positions: Vec<u64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::arg("dataset is empty"));
        }
        Ok(Self { dim: 1, coords: positions, raw: None, dx: None })
    }

    pub fn with_dim(dim: usize, points: &[Vec<u64>]) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return Err(Error::arg("dataset needs at least one particle and one axis"));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::arg(format!("particle {i} has {} coordinates, expected {dim}", p.len())));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords, raw: None, dx: None })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[u64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Positions of a one-dimensional dataset.
    pub fn positions(&self) -> Result<&[u64]> {
        if self.dim != 1 {
            return Err(Error::arg(format!("circuits need a 1-D dataset, got {} axes", self.dim)));
        }
        Ok(&self.coords)
    }

    pub fn max_coordinate(&self) -> u64 {
        self.coords.iter().copied().max().unwrap_or(0)
    }

    /// Continuous coordinates the grid positions were derived from, if any.
    pub fn raw(&self) -> Option<(&[f64], f64)> {
        self.raw.as_deref().zip(self.dx)
    }

    /// Check that every coordinate fits a `2^q1` grid.
    pub fn check_fits(&self, q1: usize) -> Result<()> {
        let max = self.max_coordinate();
        if q1 < 64 && max >> q1 != 0 {
            return Err(Error::arg(format!("position {max} does not fit {q1} bits")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dx: f64,
    pub extent: f64,
    pub dim: usize,
}

/// Which integer radius stands for a real radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Inequality {
    /// `d <= xi`, radius `ceil(xi / dx)`.
    #[default]
    Inclusive,
    /// `d < xi`, radius `floor(xi / dx)`.
    Strict,
}

/// Integer radius for a real radius `xi` on spacing `dx`.
///
/// Ratios within `1e-9` of an integer are snapped to it first so that exact
/// divisions survive floating-point noise.
pub fn integer_radius(xi: f64, dx: f64, mode: Inequality) -> Result<u64> {
    if !(dx > 0.0 && dx.is_finite()) || !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::arg(format!("need dx > 0 and xi >= 0, got dx={dx} xi={xi}")));
    }
    let r = xi / dx;
    let r = if (r - r.round()).abs() < 1e-9 { r.round() } else { r };
    Ok(match mode {
        Inequality::Inclusive => r.ceil(),
        Inequality::Strict => r.floor(),
    } as u64)
}

/// Snap real coordinates to the grid and convert the radius.
/// `raw[i]` holds the `grid.dim` coordinates of particle `i`.
pub fn discretize(raw: &[Vec<f64>], grid: &GridSpec, xi: f64, mode: Inequality) -> Result<(ParticleDataset, u64)> {
    if !(grid.extent > 0.0) {
        return Err(Error::arg("grid extent must be positive"));
    }
    let h = integer_radius(xi, grid.dx, mode)?;
    let mut points = Vec::with_capacity(raw.len());
    for (i, p) in raw.iter().enumerate() {
        if p.len() != grid.dim {
            return Err(Error::arg(format!("particle {i} has {} coordinates, expected {}", p.len(), grid.dim)));
        }
        let mut q = Vec::with_capacity(grid.dim);
        for &c in p {
            if !(0.0..grid.extent).contains(&c) {
                return Err(Error::arg(format!("coordinate {c} of particle {i} outside [0, {})", grid.extent)));
            }
            q.push((c / grid.dx).round() as u64);
        }
        points.push(q);
    }
    let mut ds = ParticleDataset::with_dim(grid.dim, &points)?;
    ds.raw = Some(raw.iter().flatten().copied().collect());
    ds.dx = Some(grid.dx);
    Ok((ds, h))
}

/// A neighbor pair. For 1-D data `d = x_i - x_j` (the value the distance
/// register holds); for more axes it is the sum of per-axis differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NeighborPair {
    pub i: usize,
    pub j: usize,
    pub d: i64,
}

fn l1(a: &[u64], b: &[u64]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| (x as i64 - y as i64).abs()).sum()
}

/// Every pair within inclusive radius `h`, sorted by `(i, j)`.
///
/// In 1-D the ordered pairs with `x_i - x_j` in `[1, h]` (`ExcludeZero`) or
/// `[0, h]` (`IncludeZero`) are returned, so each separated neighbor pair
/// appears once. With more axes the unordered pairs `i < j` at distance
/// `1..=h` are returned, plus every ordered distance-zero pair under
/// `IncludeZero`.
pub fn brute_force_pairs(ds: &ParticleDataset, h: u64, kind: OracleKind) -> Vec<NeighborPair> {
    let n = ds.len();
    let h = h as i64;
    let lo = match kind {
        OracleKind::IncludeZero => 0,
        OracleKind::ExcludeZero => 1,
    };
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if ds.dim == 1 {
                let d = ds.coords[i] as i64 - ds.coords[j] as i64;
                if (lo..=h).contains(&d) {
                    out.push(NeighborPair { i, j, d });
                }
            } else {
                let d = l1(ds.point(i), ds.point(j));
                if (d >= 1 && d <= h && i < j) || (d == 0 && lo == 0) {
                    out.push(NeighborPair { i, j, d });
                }
            }
        }
    }
    out
}

pub fn count_m(ds: &ParticleDataset, h: u64, kind: OracleKind) -> usize {
    brute_force_pairs(ds, h, kind).len()
}

/// A dataset file: integer grid positions or real coordinates still to be
/// discretized.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetFile {
    Grid(ParticleDataset),
    Real(Vec<Vec<f64>>),
}

/// Parse `label,position` (integers) or `label,x[,y,z]` (reals).
/// Labels must be exactly `0..N` in some order.
pub fn read_dataset<R: Read>(reader: R) -> Result<DatasetFile> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::DataFormat { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let integer = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["label", "position"] => true,
        ["label", "x"] | ["label", "x", "y"] | ["label", "x", "y", "z"] => false,
        _ => {
            return Err(Error::DataFormat {
                line: 1,
                message: format!("header must be `label,position` or `label,x[,y,z]`, got `{}`", header.join(",")),
            })
        }
    };
    let dim = header.len() - 1;
    let mut rows: Vec<(usize, Vec<f64>, Vec<u64>)> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| Error::DataFormat { line, message: e.to_string() })?;
        if rec.len() != header.len() {
            return Err(Error::DataFormat { line, message: format!("expected {} fields, got {}", header.len(), rec.len()) });
        }
        let label: usize =
            rec[0].parse().map_err(|_| Error::DataFormat { line, message: format!("bad label `{}`", &rec[0]) })?;
        let mut real = Vec::new();
        let mut int = Vec::new();
        for f in rec.iter().skip(1) {
            if integer {
                int.push(f.parse().map_err(|_| Error::DataFormat { line, message: format!("bad position `{f}`") })?);
            } else {
                let v: f64 = f.parse().map_err(|_| Error::DataFormat { line, message: format!("bad coordinate `{f}`") })?;
                if !v.is_finite() {
                    return Err(Error::DataFormat { line, message: format!("non-finite coordinate `{f}`") });
                }
                real.push(v);
            }
        }
        rows.push((label, real, int));
    }
    if rows.is_empty() {
        return Err(Error::DataFormat { line: 2, message: "no particles".into() });
    }
    let n = rows.len();
    let mut seen = vec![false; n];
    for (idx, (label, _, _)) in rows.iter().enumerate() {
        if *label >= n || seen[*label] {
            return Err(Error::DataFormat { line: idx + 2, message: format!("labels must be 0..{n} without repeats") });
        }
        seen[*label] = true;
    }
    rows.sort_by_key(|r| r.0);
    Ok(if integer {
        DatasetFile::Grid(ParticleDataset::new(rows.into_iter().map(|r| r.2[0]).collect())?)
    } else {
        debug_assert!(dim >= 1);
        DatasetFile::Real(rows.into_iter().map(|r| r.1).collect())
    })
}
