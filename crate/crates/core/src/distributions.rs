//! Binned arrival-time distributions and direction-indexed families of them.
//!
//! A [`BinnedDistribution`] carries one weight per time bin plus a censored
//! mass for "no arrival before the horizon". The censored mass is treated as
//! one more coordinate everywhere, including the total-variation distance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::Direction;

/// Tolerance on `Σ weights + censored = 1` for normalized distributions.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Two directions closer than this are the same direction.
pub const DIRECTION_MATCH_TOL: f64 = 1e-9;
/// Distinct listed directions must be at least this far apart.
pub const DUPLICATE_TOL: f64 = 1e-6;

/// A uniform grid of `bin_count` bins of width `bin_width` starting at
/// `t_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub bin_width: f64,
    pub bin_count: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, bin_width: f64, bin_count: usize) -> Result<Self> {
        let grid = TimeGrid {
            t_start,
            bin_width,
            bin_count,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_start.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "t_start must be finite, got {}",
                self.t_start
            )));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "bin_width must be positive, got {}",
                self.bin_width
            )));
        }
        if self.bin_count == 0 {
            return Err(Error::InvalidGrid("bin_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.bin_width * self.bin_count as f64
    }

    /// `[lo, hi)` edges of bin `k`.
    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let lo = self.t_start + self.bin_width * k as f64;
        (lo, lo + self.bin_width)
    }

    /// Index of the bin containing `t`, if `t` lies inside the grid.
    pub fn bin_of(&self, t: f64) -> Option<usize> {
        if !(t >= self.t_start) {
            return None;
        }
        let k = ((t - self.t_start) / self.bin_width).floor() as usize;
        (k < self.bin_count).then_some(k)
    }
}

/// Mass per time bin plus censored (never-arrived) mass.
///
/// Distributions flagged `normalized` are nonnegative and sum to one.
/// Unnormalized ones are signed measures produced by [`combine`] for defect
/// arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDistribution {
    grid: TimeGrid,
    weights: Vec<f64>,
    censored: f64,
    normalized: bool,
}

impl BinnedDistribution {
    /// A probability distribution. Weights and censored mass must be
    /// nonnegative and sum to one within [`NORMALIZATION_TOL`].
    pub fn normalized(grid: TimeGrid, weights: Vec<f64>, censored: f64) -> Result<Self> {
        let d = Self::unnormalized(grid, weights, censored)?;
        if let Some(k) = d.weights.iter().position(|w| *w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weight {} at bin {k} is negative",
                d.weights[k]
            )));
        }
        if d.censored < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "censored mass {} is negative",
                d.censored
            )));
        }
        let total = d.total_mass();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} differs from 1 by more than {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(BinnedDistribution {
            normalized: true,
            ..d
        })
    }

    /// A finite signed measure on the grid (no sign or mass constraints).
    pub fn unnormalized(grid: TimeGrid, weights: Vec<f64>, censored: f64) -> Result<Self> {
        grid.validate()?;
        if weights.len() != grid.bin_count {
            return Err(Error::InvalidDistribution(format!(
                "{} weights for a grid of {} bins",
                weights.len(),
                grid.bin_count
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) || !censored.is_finite() {
            return Err(Error::InvalidDistribution("non-finite mass".into()));
        }
        Ok(BinnedDistribution {
            grid,
            weights,
            censored,
            normalized: false,
        })
    }

    /// Unit mass in bin `k`.
    pub fn point_mass(grid: TimeGrid, k: usize) -> Result<Self> {
        if k >= grid.bin_count {
            return Err(Error::InvalidDistribution(format!(
                "bin {k} outside a grid of {} bins",
                grid.bin_count
            )));
        }
        let mut w = vec![0.0; grid.bin_count];
        w[k] = 1.0;
        Self::normalized(grid, w, 0.0)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn censored(&self) -> f64 {
        self.censored
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Bin masses followed by the censored mass.
    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .copied()
            .chain(std::iter::once(self.censored))
    }

    /// Mass of outcome `j`, where `j == bin_count` is the censored outcome.
    pub fn mass(&self, j: usize) -> f64 {
        if j == self.grid.bin_count {
            self.censored
        } else {
            self.weights[j]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.censored
    }
}

/// Total variation distance as an L¹ norm: `Σ_k |p_k − q_k| + |p_c − q_c|`.
/// Distinct unit point masses are at distance 2.
pub fn tv_distance(p: &BinnedDistribution, q: &BinnedDistribution) -> Result<f64> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch);
    }
    Ok(p.masses().zip(q.masses()).map(|(a, b)| (a - b).abs()).sum())
}

/// `scale_p·p + scale_q·q`, censored masses included. The result is flagged
/// unnormalized.
pub fn combine(
    p: &BinnedDistribution,
    q: &BinnedDistribution,
    scale_p: f64,
    scale_q: f64,
) -> Result<BinnedDistribution> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch);
    }
    let weights = p
        .weights
        .iter()
        .zip(&q.weights)
        .map(|(a, b)| scale_p * a + scale_q * b)
        .collect();
    BinnedDistribution::unnormalized(p.grid, weights, scale_p * p.censored + scale_q * q.censored)
}

/// The map `n ↦ 𝒫_n` over a finite, antipodally closed set of directions.
///
/// Entries are stored with antipodes adjacent: `entries[2i]` and
/// `entries[2i + 1]` are always `n` and `−n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionFamily {
    grid: TimeGrid,
    entries: Vec<(Direction, BinnedDistribution)>,
    axis: Option<Direction>,
    trajectories: Option<u64>,
}

impl DirectionFamily {
    /// Validates a shared grid, antipodal closure, and distinctness, then
    /// reorders the entries into adjacent antipodal pairs.
    pub fn new(
        grid: TimeGrid,
        entries: Vec<(Direction, BinnedDistribution)>,
        axis: Option<Direction>,
    ) -> Result<Self> {
        grid.validate()?;
        if entries.is_empty() {
            return Err(Error::InvalidFamily("family has no entries".into()));
        }
        for (n, d) in &entries {
            if *d.grid() != grid {
                return Err(Error::InvalidFamily(format!(
                    "distribution for {n} uses a different grid"
                )));
            }
        }
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                if entries[i].0.distance(&entries[j].0) < DUPLICATE_TOL {
                    return Err(Error::InvalidFamily(format!(
                        "directions {} and {} are duplicates",
                        entries[i].0, entries[j].0
                    )));
                }
            }
        }

        let mut slots: Vec<Option<(Direction, BinnedDistribution)>> =
            entries.into_iter().map(Some).collect();
        let mut ordered = Vec::with_capacity(slots.len());
        for i in 0..slots.len() {
            let Some((n, d)) = slots[i].take() else {
                continue;
            };
            let anti = -n;
            let j = slots
                .iter()
                .position(|s| matches!(s, Some((m, _)) if m.approx_eq(&anti, DIRECTION_MATCH_TOL)))
                .ok_or_else(|| {
                    Error::InvalidFamily(format!("direction {n} has no antipode in the family"))
                })?;
            let partner = slots[j].take().expect("position found a filled slot");
            ordered.push((n, d));
            ordered.push(partner);
        }

        Ok(DirectionFamily {
            grid,
            entries: ordered,
            axis,
            trajectories: None,
        })
    }

    /// Records the Monte Carlo sample size the family was estimated from.
    pub fn with_trajectories(mut self, n: Option<u64>) -> Self {
        self.trajectories = n;
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn axis(&self) -> Option<Direction> {
        self.axis
    }

    pub fn set_axis(&mut self, axis: Option<Direction>) {
        self.axis = axis;
    }

    pub fn trajectories(&self) -> Option<u64> {
        self.trajectories
    }

    pub fn entries(&self) -> &[(Direction, BinnedDistribution)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }

    pub fn pair_count(&self) -> usize {
        self.entries.len() / 2
    }

    /// Antipodal pairs `((n, 𝒫_n), (−n, 𝒫_{−n}))`.
    pub fn pairs(
        &self,
    ) -> impl Iterator<
        Item = (
            &(Direction, BinnedDistribution),
            &(Direction, BinnedDistribution),
        ),
    > {
        self.entries.chunks_exact(2).map(|c| (&c[0], &c[1]))
    }

    pub fn is_normalized(&self) -> bool {
        self.entries.iter().all(|(_, d)| d.is_normalized())
    }

    pub fn find(&self, n: &Direction) -> Option<usize> {
        self.entries
            .iter()
            .position(|(m, _)| m.approx_eq(n, DIRECTION_MATCH_TOL))
    }

    pub fn get(&self, n: &Direction) -> Result<&BinnedDistribution> {
        self.find(n)
            .map(|i| &self.entries[i].1)
            .ok_or(Error::DirectionNotFound(n.as_array()))
    }

    /// `(𝒫_n, 𝒫_{−n})`.
    pub fn antipode_lookup(
        &self,
        n: &Direction,
    ) -> Result<(&BinnedDistribution, &BinnedDistribution)> {
        let i = self.find(n).ok_or(Error::DirectionNotFound(n.as_array()))?;
        let partner = i ^ 1;
        Ok((&self.entries[i].1, &self.entries[partner].1))
    }

    /// The direction average `(1/|N|) Σ_n 𝒫_n`.
    pub fn direction_average(&self) -> BinnedDistribution {
        let k = self.grid.bin_count;
        let scale = 1.0 / self.entries.len() as f64;
        let mut w = vec![0.0; k];
        let mut c = 0.0;
        for (_, d) in &self.entries {
            for (acc, x) in w.iter_mut().zip(d.weights()) {
                *acc += scale * x;
            }
            c += scale * d.censored();
        }
        BinnedDistribution::unnormalized(self.grid, w, c).expect("averaging preserves shape")
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, FamilyParseError> {
        let file: FamilyFile = serde_json::from_str(s).map_err(FamilyParseError::Json)?;
        file.into_family().map_err(FamilyParseError::Invalid)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        DirectionFamily::from_json_str(&text).map_err(|e| match e {
            FamilyParseError::Json(source) => Error::Json {
                path: path.display().to_string(),
                source,
            },
            FamilyParseError::Invalid(e) => e,
        })
    }

    pub fn to_file(&self, manifest: Option<serde_json::Value>) -> FamilyFile {
        FamilyFile {
            grid: self.grid,
            axis: self.axis,
            entries: self
                .entries
                .iter()
                .map(|(n, d)| FamilyEntry {
                    direction: *n,
                    weights: d.weights.clone(),
                    censored: d.censored,
                })
                .collect(),
            normalized: self.is_normalized(),
            trajectories: self.trajectories,
            manifest,
        }
    }

    pub fn to_json_string(&self, manifest: Option<serde_json::Value>) -> String {
        serde_json::to_string_pretty(&self.to_file(manifest)).expect("family serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FamilyParseError {
    #[error(transparent)]
    Json(serde_json::Error),
    #[error(transparent)]
    Invalid(Error),
}

/// On-disk family layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub grid: TimeGrid,
    pub axis: Option<Direction>,
    pub entries: Vec<FamilyEntry>,
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub direction: Direction,
    pub weights: Vec<f64>,
    pub censored: f64,
}

impl FamilyFile {
    pub fn into_family(self) -> Result<DirectionFamily> {
        let grid = self.grid;
        grid.validate()?;
        let entries = self
            .entries
            .into_iter()
            .map(|e| {
                let d = if self.normalized {
                    BinnedDistribution::normalized(grid, e.weights, e.censored)
                } else {
                    BinnedDistribution::unnormalized(grid, e.weights, e.censored)
                };
                d.map(|d| (e.direction, d))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DirectionFamily::new(grid, entries, self.axis)?.with_trajectories(self.trajectories))
    }
}
