//! Stored pattern sets, their pairwise geometry and generators.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::in_support;
use crate::rng::{stream_rng, streams};

/// `M` distinct patterns in `d` dimensions, stored row-major.
#[derive(Debug, Clone)]
pub struct PatternSet {
    data: Vec<f64>,
    m: usize,
    d: usize,
    geometry: OnceLock<GeometrySummary>,
}

/// Exact pairwise Euclidean distances and their off-diagonal minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySummary {
    pub r_min: f64,
    pub distances: Vec<f64>,
    m: usize,
}

impl GeometrySummary {
    pub fn distance(&self, mu: usize, nu: usize) -> f64 {
        self.distances[mu * self.m + nu]
    }

    pub fn row(&self, mu: usize) -> &[f64] {
        &self.distances[mu * self.m..(mu + 1) * self.m]
    }

    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl PatternSet {
    /// Builds a pattern set from row-major data, rejecting non-finite
    /// coordinates and duplicate rows.
    pub fn new(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: data.len() % d,
            });
        }
        let m = data.len() / d;
        if m == 0 {
            return Err(Error::TooFewPatterns { needed: 1, got: 0 });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i / d,
                col: i % d,
            });
        }
        // +0.0 folds negative zero into positive zero before hashing bits.
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(m);
        for (row, chunk) in data.chunks_exact(d).enumerate() {
            let key: Vec<u64> = chunk.iter().map(|v| (v + 0.0).to_bits()).collect();
            if let Some(&first) = seen.get(&key) {
                return Err(Error::DuplicatePattern(first, row));
            }
            seen.insert(key, row);
        }
        Ok(PatternSet {
            data,
            m,
            d,
            geometry: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        Self::new(rows.concat(), d)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn pattern(&self, mu: usize) -> &[f64] {
        &self.data[mu * self.d..(mu + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Pattern set with row `mu` removed.
    pub fn without(&self, mu: usize) -> Result<PatternSet> {
        let data = self
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != mu)
            .flat_map(|(_, row)| row.iter().copied())
            .collect();
        PatternSet::new(data, self.d)
    }

    /// Centroid of the patterns in `subset`, summed in the given order.
    pub fn centroid(&self, subset: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for &mu in subset {
            for (ci, xi) in c.iter_mut().zip(self.pattern(mu)) {
                *ci += xi;
            }
        }
        let n = subset.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Pairwise geometry, computed once per set.
    pub fn geometry(&self) -> Result<&GeometrySummary> {
        if self.m < 2 {
            return Err(Error::TooFewPatterns {
                needed: 2,
                got: self.m,
            });
        }
        Ok(self.geometry.get_or_init(|| {
            let m = self.m;
            let mut distances = vec![0.0; m * m];
            let mut r_min = f64::INFINITY;
            for mu in 0..m {
                for nu in mu + 1..m {
                    let dist = sqdist(self.pattern(mu), self.pattern(nu)).sqrt();
                    distances[mu * m + nu] = dist;
                    distances[nu * m + mu] = dist;
                    r_min = r_min.min(dist);
                }
            }
            GeometrySummary {
                r_min,
                distances,
                m,
            }
        }))
    }

    /// Inverse-temperature sweep range `(2/d, 2/r_min^2)`: from support balls
    /// that cover the unit hypercube to balls that exclude every other pattern.
    pub fn critical_beta_range(&self) -> Result<(f64, f64)> {
        self.geometry()?;
        let mut d2 = f64::INFINITY;
        for mu in 0..self.m {
            for nu in mu + 1..self.m {
                d2 = d2.min(sqdist(self.pattern(mu), self.pattern(nu)));
            }
        }
        let mut high = 2.0 / d2;
        // Rounding can leave the closest pair a hair inside each other's ball.
        while in_support(high, d2) {
            high = high.next_up();
        }
        Ok((2.0 / self.d as f64, high))
    }

    /// Reads patterns from a headerless CSV file, one pattern per row.
    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv_from(std::fs::File::open(path)?)
    }

    pub fn read_csv_from<R: Read>(reader: R) -> Result<Self> {
        let rows = read_points_csv_from(reader)?;
        if rows.is_empty() {
            return Err(Error::TooFewPatterns { needed: 1, got: 0 });
        }
        Self::from_rows(&rows)
    }

    /// Writes the patterns as headerless CSV with round-trip precision.
    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for row in self.iter() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }
}

/// Reads headerless CSV rows of equal length, e.g. query points. Unlike
/// [`PatternSet::read_csv`], duplicates are allowed.
pub fn read_points_csv<P: AsRef<Path>>(path: P) -> Result<Vec<Vec<f64>>> {
    read_points_csv_from(std::fs::File::open(path)?)
}

pub fn read_points_csv_from<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if let Some(first) = rows.first() {
            if first.len() != record.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: record.len(),
                });
            }
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(Error::NonFinite { row, col }),
                Err(_) => Err(Error::InvalidParameter(format!(
                    "row {row}, column {col}: `{field}` is not a number"
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok(rows)
}

/// `m` i.i.d. uniform points in `[0, 1]^d`.
pub fn generate_uniform(m: usize, d: usize, seed: u64) -> Result<PatternSet> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter("m and d must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, streams::PATTERNS);
    let data = (0..m * d).map(|_| rng.random::<f64>()).collect();
    PatternSet::new(data, d)
}

/// Where grid points sit inside their cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridPlacement {
    #[default]
    Centers,
    Corners,
}

/// `points_per_dim^d` points on the regular grid over `[0, 1]^d` with
/// spacing `1 / points_per_dim`, placed at cell centers.
pub fn generate_grid(points_per_dim: usize, d: usize) -> Result<PatternSet> {
    generate_grid_with(points_per_dim, d, GridPlacement::Centers)
}

pub fn generate_grid_with(
    points_per_dim: usize,
    d: usize,
    placement: GridPlacement,
) -> Result<PatternSet> {
    if points_per_dim < 2 || d == 0 {
        return Err(Error::InvalidParameter(
            "grid needs at least 2 points per dimension and d >= 1".into(),
        ));
    }
    let overflow = Error::GridOverflow { points_per_dim, d };
    let m = u32::try_from(d)
        .ok()
        .and_then(|e| points_per_dim.checked_pow(e))
        .and_then(|m| m.checked_mul(d).map(|_| m))
        .ok_or(overflow)?;
    let k = points_per_dim as f64;
    let offset = match placement {
        GridPlacement::Centers => 0.5,
        GridPlacement::Corners => 0.0,
    };
    let mut data = Vec::with_capacity(m * d);
    for idx in 0..m {
        let mut rest = idx;
        let mut row = vec![0.0; d];
        // Last coordinate varies fastest.
        for slot in row.iter_mut().rev() {
            *slot = ((rest % points_per_dim) as f64 + offset) / k;
            rest /= points_per_dim;
        }
        data.extend(row);
    }
    PatternSet::new(data, d)
}
