//! Five categorical sales bins from nearest-rank percentiles.

use serde::{Deserialize, Serialize};

use super::{DailySalesRecord, IngestError};

pub const BIN_COUNT: usize = 5;

/// Upper-inclusive thresholds for bins 0..3; anything above the last boundary
/// lands in bin 4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningModel {
    pub k: usize,
    pub boundaries: [u64; BIN_COUNT - 1],
    pub fitted_on: usize,
    /// Set when the data had too few distinct values and boundaries were padded.
    pub degenerate: bool,
}

/// Nearest-rank percentile of an ascending slice, `pct` in 1..=100.
fn nearest_rank(sorted: &[u64], pct: usize) -> u64 {
    let rank = (pct * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

pub fn fit_bins_units(units: &[u64]) -> Result<BinningModel, IngestError> {
    if units.is_empty() {
        return Err(IngestError::EmptySeries);
    }
    let mut sorted = units.to_vec();
    sorted.sort_unstable();

    let mut cuts: Vec<u64> = [20, 40, 60, 80]
        .into_iter()
        .map(|p| nearest_rank(&sorted, p))
        .collect();
    cuts.dedup();
    let degenerate = cuts.len() < BIN_COUNT - 1;
    while cuts.len() < BIN_COUNT - 1 {
        let top = *cuts.last().expect("at least one cut");
        cuts.push(top + 1);
    }

    Ok(BinningModel {
        k: BIN_COUNT,
        boundaries: cuts.try_into().expect("four cuts"),
        fitted_on: units.len(),
        degenerate,
    })
}

pub fn fit_bins(series: &[DailySalesRecord]) -> Result<BinningModel, IngestError> {
    let units: Vec<u64> = series.iter().map(|r| r.units_sold).collect();
    fit_bins_units(&units)
}

/// Smallest bin whose boundary is at or above `units`; 4 above every boundary.
pub fn assign_bin(model: &BinningModel, units: u64) -> usize {
    model.boundaries.partition_point(|&b| b < units)
}
