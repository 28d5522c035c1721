//! Prevalence grids and the per-point optima behind the planning figures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{Multiplicity, Prevalence};
use crate::error::{PoolError, Result};
use crate::optimizer::{integer_optimum, SearchBounds};

pub const DEFAULT_P_MIN: f64 = 0.001;
pub const DEFAULT_P_MAX: f64 = 0.2;
pub const DEFAULT_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Lin,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub p_min: f64,
    pub p_max: f64,
    pub points: usize,
    pub kind: GridKind,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            p_min: DEFAULT_P_MIN,
            p_max: DEFAULT_P_MAX,
            points: DEFAULT_POINTS,
            kind: GridKind::Log,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_min > 0.0 && self.p_min < self.p_max && self.p_max < 1.0) {
            return Err(PoolError::InvalidBounds(format!(
                "grid needs 0 < p_min < p_max < 1, got [{}, {}]",
                self.p_min, self.p_max
            )));
        }
        if self.points < 2 {
            return Err(PoolError::InvalidBounds(format!("grid needs at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    /// Ascending grid points; the endpoints are exactly `p_min` and `p_max`.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let last = self.points - 1;
        let (a, b) = match self.kind {
            GridKind::Lin => (self.p_min, self.p_max),
            GridKind::Log => (self.p_min.ln(), self.p_max.ln()),
        };
        Ok((0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.p_min;
                }
                if i == last {
                    return self.p_max;
                }
                let t = a + (b - a) * (i as f64 / last as f64);
                match self.kind {
                    GridKind::Lin => t,
                    GridKind::Log => t.exp(),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: u32,
    pub s_opt: u32,
    pub cost: f64,
}

/// Optima for each requested `k` at one prevalence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub entries: Vec<SweepEntry>,
    /// Double over single pooling, in percent.
    pub savings_percent: f64,
}

impl SweepRow {
    pub fn entry(&self, k: u32) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.k == k)
    }
}

/// Sorted, deduplicated multiplicities, always including 1 and 2 (savings needs both).
pub fn normalize_ks(ks: &[u32]) -> Result<Vec<Multiplicity>> {
    let mut all: Vec<u32> = ks.iter().copied().chain([1, 2]).collect();
    all.sort_unstable();
    all.dedup();
    all.into_iter().map(Multiplicity::new).collect()
}

pub fn sweep_point(p: f64, ks: &[Multiplicity], bounds: &SearchBounds) -> Result<SweepRow> {
    let prevalence = Prevalence::new(p)?;
    let entries = ks
        .iter()
        .map(|&k| {
            let plan = integer_optimum(prevalence, k, bounds)?;
            Ok(SweepEntry { k: k.get(), s_opt: plan.s_integer, cost: plan.expected_cost })
        })
        .collect::<Result<Vec<_>>>()?;
    let c = |k: u32| entries.iter().find(|e| e.k == k).map(|e| e.cost);
    let (c1, c2) = match (c(1), c(2)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(PoolError::InvalidBounds("sweep requires k = 1 and k = 2".into())),
    };
    Ok(SweepRow { p, entries, savings_percent: 100.0 * (c1 - c2) / c1 })
}

/// Evaluates the grid in parallel; rows come back in ascending `p`.
pub fn sweep(grid: &GridSpec, ks: &[u32], bounds: &SearchBounds) -> Result<Vec<SweepRow>> {
    bounds.validate()?;
    let ks = normalize_ks(ks)?;
    grid.points()?
        .into_par_iter()
        .map(|p| sweep_point(p, &ks, bounds))
        .collect()
}
