//! Endogenous hotspot thresholding.
//!
//! The quantile threshold is `F = 1 - mean/max` over the valid cells of a
//! city; the top `max(1, floor(N·(1-F)))` cells by luminosity are hotspots.
//! The fractional count `Ct = Σ ρ_i/ρ_max` is reported alongside, and
//! satisfies `Ct/N = mean/max = 1 - F`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid_io::{CellPoint, CellPoints, LuminosityGrid, Projection};
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridStats {
    pub n_valid: usize,
    pub mean: f64,
    pub max: f64,
    pub total: f64,
}

pub fn grid_stats(values: &[f64]) -> Result<GridStats> {
    if values.is_empty() {
        return Err(Error::NoValidCells);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max <= 0.0 {
        return Err(Error::DegenerateCity);
    }
    let total = compensated_sum(values.iter().copied());
    Ok(GridStats {
        n_valid: values.len(),
        mean: total / values.len() as f64,
        max,
        total,
    })
}

/// `N(1 - F)` within this relative distance of an integer counts as that
/// integer, so the count does not depend on the rounding of rescaled values.
const COUNT_SNAP: f64 = 1e-12;

struct Loubar {
    stats: GridStats,
    f: f64,
    ct: f64,
    uniform: bool,
}

impl Loubar {
    fn new(values: &[f64]) -> Result<Self> {
        let stats = grid_stats(values)?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let uniform = min == stats.max;
        let f = if uniform {
            0.0
        } else {
            (1.0 - stats.mean / stats.max).max(0.0)
        };
        let ct = if uniform {
            values.len() as f64
        } else {
            compensated_sum(values.iter().map(|v| v / stats.max))
        };
        Ok(Loubar {
            stats,
            f,
            ct,
            uniform,
        })
    }

    fn count(&self) -> usize {
        let n = self.stats.n_valid;
        if self.uniform {
            return n;
        }
        let x = self.stats.total / self.stats.max;
        let nearest = x.round();
        let k = if (x - nearest).abs() <= COUNT_SNAP * x {
            nearest
        } else {
            x.floor()
        } as usize;
        k.clamp(1, n.saturating_sub(1).max(1))
    }
}

/// Quantile threshold `F = 1 - mean/max`, in `[0, 1)`.
pub fn loubar_threshold(values: &[f64]) -> Result<f64> {
    Loubar::new(values).map(|l| l.f)
}

/// Fractional hotspot count `Σ ρ_i/ρ_max`, in `[1, N]`.
pub fn fractional_count(values: &[f64]) -> Result<f64> {
    Loubar::new(values).map(|l| l.ct)
}

/// Number of hotspots selected from `values`.
pub fn hotspot_count(values: &[f64]) -> Result<usize> {
    Loubar::new(values).map(|l| l.count())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HotspotSet {
    pub f_threshold: f64,
    /// Value of the k-th brightest cell.
    pub density_cutoff: f64,
    /// Hotspot cells, brightest first; ties in row-major order.
    pub cells: Vec<CellPoint>,
    pub count: usize,
    pub fractional_count: f64,
    pub cell_area: f64,
    pub stats: GridStats,
}

impl HotspotSet {
    pub fn summary(&self, city_id: &str) -> HotspotSummary {
        HotspotSummary {
            city_id: city_id.to_owned(),
            f: self.f_threshold,
            cutoff: self.density_cutoff,
            count: self.count,
            fractional_count: self.fractional_count,
            n_valid: self.stats.n_valid,
        }
    }

    /// Hotspot cells as CSV: `row,col,x_m,y_m,value`.
    pub fn write_cells_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row", "col", "x_m", "y_m", "value"])?;
        for c in &self.cells {
            w.write_record(&[
                c.row.to_string(),
                c.col.to_string(),
                c.x.to_string(),
                c.y.to_string(),
                c.value.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub struct HotspotSummary {
    pub city_id: String,
    #[serde(rename = "F")]
    pub f: f64,
    pub cutoff: f64,
    pub count: usize,
    pub fractional_count: f64,
    pub n_valid: usize,
}

/// Indices (into `values`) of the `k` largest values, brightest first, ties
/// broken by smaller index.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let order = |&a: &usize, &b: &usize| -> Ordering {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_unstable_by(order);
    idx
}

fn select(values: &[f64]) -> Result<(Loubar, Vec<usize>)> {
    let loubar = Loubar::new(values)?;
    let picked = top_k(values, loubar.count());
    Ok((loubar, picked))
}

fn build(loubar: Loubar, picked: &[usize], cells: Vec<CellPoint>, cell_area: f64) -> HotspotSet {
    HotspotSet {
        f_threshold: loubar.f,
        density_cutoff: cells.last().map_or(0.0, |c| c.value),
        count: picked.len(),
        cells,
        fractional_count: loubar.ct,
        cell_area,
        stats: loubar.stats,
    }
}

/// Extracts hotspots from a grid whose valid cells have already been
/// projected by [`crate::grid_io::cell_points`].
pub fn extract_hotspots(grid: &LuminosityGrid, points: &CellPoints) -> Result<HotspotSet> {
    grid.ensure_valid_cells()?;
    if points.points.len() != grid.n_valid() {
        return Err(Error::invalid(format!(
            "{} points supplied for {} valid cells",
            points.points.len(),
            grid.n_valid()
        )));
    }
    let values: Vec<f64> = points.points.iter().map(|p| p.value).collect();
    let (loubar, picked) = select(&values)?;
    let cells = picked.iter().map(|&i| points.points[i]).collect();
    Ok(build(loubar, &picked, cells, points.cell_area_m2))
}

/// Same result as projecting every valid cell and calling
/// [`extract_hotspots`], but only the selected cells are projected.
pub fn extract_hotspots_from_grid(grid: &LuminosityGrid) -> Result<HotspotSet> {
    grid.ensure_valid_cells()?;
    let proj = Projection::new(grid.header())?;
    let ncols = grid.header().ncols;
    let (flat, values): (Vec<usize>, Vec<f64>) = grid
        .valid_mask()
        .iter()
        .zip(grid.values())
        .enumerate()
        .filter(|(_, (&ok, _))| ok)
        .map(|(i, (_, &v))| (i, v))
        .unzip();
    let (loubar, picked) = select(&values)?;
    let cells = picked
        .iter()
        .map(|&i| proj.point(flat[i] / ncols, flat[i] % ncols, values[i]))
        .collect();
    Ok(build(loubar, &picked, cells, proj.cell_area_m2()))
}
