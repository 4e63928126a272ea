//! Turns per-item view/conversion counts into an arm pool: drop outliers,
//! take conversion rates as second-level means and min-max scaled view
//! counts as first-level means.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::{open_csv, rows};
use crate::types::ArmPool;

pub const RAW_HEADER: [&str; 3] = ["item_id", "views", "conversions"];
pub const DEFAULT_MAX_VIEWS: u64 = 2000;
pub const DEFAULT_MIN_CONVERSIONS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RawItemRow {
    pub item_id: String,
    pub views: u64,
    pub conversions: u64,
}

pub fn read_raw_items(path: impl AsRef<Path>) -> Result<Vec<RawItemRow>> {
    let path = path.as_ref();
    let mut rdr = open_csv(path, &RAW_HEADER)?;
    Ok(rows(path, &mut rdr)?.into_iter().map(|(_, r)| r).collect())
}

/// Keeps rows with `views <= max_views` and `conversions >= min_conversions`.
pub fn filter_items(rows: &[RawItemRow], max_views: u64, min_conversions: u64) -> Vec<RawItemRow> {
    rows.iter()
        .filter(|r| r.views <= max_views && r.conversions >= min_conversions)
        .cloned()
        .collect()
}

/// `mean_revenue = clamp(conversions / views, 0, 1)` (0 when there are no
/// views) and `mean_ctr = (views - min) / (max - min)`. Arm ids follow row
/// order.
pub fn compute_rates_and_scale(rows: &[RawItemRow]) -> Result<ArmPool> {
    if rows.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "need at least two items, got {}",
            rows.len()
        )));
    }
    let min = rows.iter().map(|r| r.views).min().unwrap_or(0);
    let max = rows.iter().map(|r| r.views).max().unwrap_or(0);
    if min == max {
        return Err(Error::DegenerateRange);
    }
    let span = (max - min) as f64;
    let ctr = rows.iter().map(|r| (r.views - min) as f64 / span).collect();
    let revenue = rows
        .iter()
        .map(|r| {
            if r.views == 0 {
                0.0
            } else {
                (r.conversions as f64 / r.views as f64).clamp(0.0, 1.0)
            }
        })
        .collect();
    ArmPool::new(ctr, revenue)
}

/// Summary of an ingest run.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub pool: ArmPool,
    pub kept: usize,
    pub dropped: usize,
}

/// Filter, then rates, then scaling.
pub fn ingest(rows: &[RawItemRow], max_views: u64, min_conversions: u64) -> Result<IngestReport> {
    let kept = filter_items(rows, max_views, min_conversions);
    if kept.is_empty() {
        return Err(Error::EmptyInput("no items survive the filter".into()));
    }
    let pool = compute_rates_and_scale(&kept)?;
    Ok(IngestReport {
        kept: kept.len(),
        dropped: rows.len() - kept.len(),
        pool,
    })
}
