//! Proximity and agglomeration indices of a hotspot set.
//!
//! Both compare the hotspot set against a disk of the same total area:
//!
//! * PI = Dd / Dm, the equal-area diameter over the largest distance between
//!   two hotspot centres;
//! * AI = De / Dh, the mean centre distance within the equal-area disk
//!   (`2R/3` for a uniform disk of radius `R`) over the mean distance of
//!   hotspot centres to their centroid.
//!
//! Values near 1 mean compact, near 0 dispersed. Small discrete sets can
//! exceed 1, so both indices are clamped and the raw ratios kept.

use std::f64::consts::PI;

use serde::Serialize;

use crate::geometry::{max_pairwise_distance, Point};
use crate::hotspot::HotspotSet;
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateFlag {
    /// Fewer than two hotspots; both indices set to 1.
    SingleHotspot,
    /// All hotspot centres coincide; both indices set to 1.
    CoincidentHotspots,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessIndices {
    pub pi: f64,
    pub ai: f64,
    pub pi_raw: f64,
    pub ai_raw: f64,
    /// Equal-area disk diameter, m.
    pub dd: f64,
    /// Largest hotspot-to-hotspot distance, m.
    pub dm: f64,
    /// Mean centre distance in the equal-area disk, m.
    pub de: f64,
    /// Mean hotspot distance to the hotspot centroid, m.
    pub dh: f64,
    pub hotspot_area: f64,
    pub degenerate_flags: Vec<DegenerateFlag>,
}

impl CompactnessIndices {
    pub fn report(&self, city_id: &str) -> CompactnessReport {
        CompactnessReport {
            city_id: city_id.to_owned(),
            pi: self.pi,
            ai: self.ai,
            pi_raw: self.pi_raw,
            ai_raw: self.ai_raw,
            dd_m: self.dd,
            dm_m: self.dm,
            de_m: self.de,
            dh_m: self.dh,
            degenerate_flags: self.degenerate_flags.clone(),
        }
    }
}

/// Per-city compactness record as exported to JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessReport {
    pub city_id: String,
    pub pi: f64,
    pub ai: f64,
    pub pi_raw: f64,
    pub ai_raw: f64,
    pub dd_m: f64,
    pub dm_m: f64,
    pub de_m: f64,
    pub dh_m: f64,
    pub degenerate_flags: Vec<DegenerateFlag>,
}

/// Radius of the disk with the hotspot set's area.
fn equal_area_radius(count: usize, cell_area: f64) -> f64 {
    (count as f64 * cell_area / PI).sqrt()
}

struct ProximityPart {
    pi_raw: f64,
    dd: f64,
    dm: f64,
    flag: Option<DegenerateFlag>,
}

fn proximity(points: &[Point], cell_area: f64) -> ProximityPart {
    let dd = 2.0 * equal_area_radius(points.len(), cell_area);
    match max_pairwise_distance(points) {
        None => ProximityPart {
            pi_raw: 1.0,
            dd,
            dm: 0.0,
            flag: Some(DegenerateFlag::SingleHotspot),
        },
        Some(dm) if dm == 0.0 => ProximityPart {
            pi_raw: 1.0,
            dd,
            dm,
            flag: Some(DegenerateFlag::CoincidentHotspots),
        },
        Some(dm) => ProximityPart {
            pi_raw: dd / dm,
            dd,
            dm,
            flag: None,
        },
    }
}

struct AgglomerationPart {
    ai_raw: f64,
    de: f64,
    dh: f64,
    flag: Option<DegenerateFlag>,
}

fn agglomeration(points: &[Point], cell_area: f64) -> AgglomerationPart {
    let de = 2.0 * equal_area_radius(points.len(), cell_area) / 3.0;
    if points.len() < 2 {
        return AgglomerationPart {
            ai_raw: 1.0,
            de,
            dh: 0.0,
            flag: Some(DegenerateFlag::SingleHotspot),
        };
    }
    let n = points.len() as f64;
    let cx = compensated_sum(points.iter().map(|p| p.x)) / n;
    let cy = compensated_sum(points.iter().map(|p| p.y)) / n;
    let dh = compensated_sum(points.iter().map(|p| (p.x - cx).hypot(p.y - cy))) / n;
    if dh == 0.0 {
        return AgglomerationPart {
            ai_raw: 1.0,
            de,
            dh,
            flag: Some(DegenerateFlag::CoincidentHotspots),
        };
    }
    AgglomerationPart {
        ai_raw: de / dh,
        de,
        dh,
        flag: None,
    }
}

/// Proximity index of the hotspot set: `(pi, pi_raw, dd, dm)`.
pub fn proximity_index(hotspots: &HotspotSet) -> (f64, f64, f64, f64) {
    let p = proximity(&hotspot_points(hotspots), hotspots.cell_area);
    (p.pi_raw.min(1.0), p.pi_raw, p.dd, p.dm)
}

/// Agglomeration index of the hotspot set: `(ai, ai_raw, de, dh)`.
pub fn agglomeration_index(hotspots: &HotspotSet) -> (f64, f64, f64, f64) {
    let a = agglomeration(&hotspot_points(hotspots), hotspots.cell_area);
    (a.ai_raw.min(1.0), a.ai_raw, a.de, a.dh)
}

fn hotspot_points(hotspots: &HotspotSet) -> Vec<Point> {
    hotspots.cells.iter().map(|c| Point::new(c.x, c.y)).collect()
}

/// Both indices for hotspot centres `points`, each hotspot covering
/// `cell_area` square metres.
pub fn compactness(points: &[Point], cell_area: f64) -> CompactnessIndices {
    let p = proximity(points, cell_area);
    let a = agglomeration(points, cell_area);
    let mut degenerate_flags: Vec<DegenerateFlag> = p.flag.into_iter().chain(a.flag).collect();
    degenerate_flags.dedup();
    CompactnessIndices {
        pi: p.pi_raw.min(1.0),
        ai: a.ai_raw.min(1.0),
        pi_raw: p.pi_raw,
        ai_raw: a.ai_raw,
        dd: p.dd,
        dm: p.dm,
        de: a.de,
        dh: a.dh,
        hotspot_area: points.len() as f64 * cell_area,
        degenerate_flags,
    }
}

pub fn hotspot_compactness(hotspots: &HotspotSet) -> CompactnessIndices {
    compactness(&hotspot_points(hotspots), hotspots.cell_area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().copied().map(Point::from).collect()
    }

    #[test]
    fn two_cells_three_metres_apart() {
        let c = compactness(&pts(&[(0.0, 0.0), (3.0, 0.0)]), 1.0);
        let dd = 2.0 * (2.0 / PI).sqrt();
        assert!((c.dd - dd).abs() < 1e-15);
        assert!((c.dd - 1.5958).abs() < 1e-4);
        assert!((c.pi - 0.5319).abs() < 1e-4);
        assert!(c.degenerate_flags.is_empty());
    }

    #[test]
    fn adjacent_cells_clamp_to_one() {
        let c = compactness(&pts(&[(0.0, 0.0), (1.0, 0.0)]), 1.0);
        assert!((c.pi_raw - 1.596).abs() < 1e-3);
        assert_eq!(c.pi, 1.0);
    }

    #[test]
    fn two_cells_agglomeration() {
        let c = compactness(&pts(&[(0.0, 0.0), (2.0, 0.0)]), 1.0);
        assert_eq!(c.dh, 1.0);
        let de = 2.0 / 3.0 * (2.0 / PI).sqrt();
        assert!((c.de - de).abs() < 1e-15);
        assert!((c.ai - 0.5319).abs() < 1e-4);
    }

    #[test]
    fn de_is_a_third_of_dd() {
        for n in 1..50 {
            let v: Vec<Point> = (0..n).map(|i| Point::new(i as f64, (i * i) as f64)).collect();
            let c = compactness(&v, 0.37 * n as f64);
            assert!((c.de - c.dd / 3.0).abs() <= 1e-15 * c.dd);
            assert!((c.dd - 2.0 * (c.hotspot_area / PI).sqrt()).abs() <= 1e-15 * c.dd);
        }
    }

    #[test]
    fn single_hotspot_is_maximally_compact() {
        let c = compactness(&pts(&[(5.0, 5.0)]), 1.0);
        assert_eq!((c.pi, c.ai), (1.0, 1.0));
        assert_eq!(c.degenerate_flags, vec![DegenerateFlag::SingleHotspot]);
    }

    #[test]
    fn coincident_hotspots_are_flagged() {
        let c = compactness(&pts(&[(5.0, 5.0), (5.0, 5.0)]), 1.0);
        assert_eq!((c.pi, c.ai), (1.0, 1.0));
        assert_eq!(c.degenerate_flags, vec![DegenerateFlag::CoincidentHotspots]);
    }

    #[test]
    fn long_line_is_dispersed() {
        // n (even) unit cells in a row: mean distance to the centre is n/4,
        // the discrete form of L/4.
        let n = 2000;
        let v: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
        let c = compactness(&v, 1.0);
        let expected_dh = n as f64 / 4.0;
        assert!((c.dh - expected_dh).abs() < 1e-9 * expected_dh);
        assert!(c.ai < 0.05, "ai={}", c.ai);
        assert!(c.pi < 0.03, "pi={}", c.pi);
    }

    #[test]
    fn raw_indices_grow_with_cell_area() {
        let v = pts(&[(0.0, 0.0), (4.0, 1.0), (2.0, 7.0), (9.0, 3.0)]);
        let mut prev = compactness(&v, 0.5);
        for area in [0.6, 1.0, 2.5, 10.0] {
            let c = compactness(&v, area);
            assert!(c.pi_raw > prev.pi_raw && c.ai_raw > prev.ai_raw);
            prev = c;
        }
    }

    fn rel_close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
    }

    proptest! {
        #[test]
        fn rigid_motion_invariance(
            v in prop::collection::vec((-500f64..500., -500f64..500.), 2..150),
            theta in 0.0f64..std::f64::consts::TAU,
            tx in -1e5f64..1e5,
            ty in -1e5f64..1e5,
            area in 0.1f64..100.0,
        ) {
            let v = pts(&v);
            let (s, c) = theta.sin_cos();
            let moved: Vec<Point> = v.iter().map(|p| Point::new(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty)).collect();
            let a = compactness(&v, area);
            let b = compactness(&moved, area);
            prop_assume!(a.degenerate_flags.is_empty());
            prop_assert!(rel_close(a.pi_raw, b.pi_raw), "{} vs {}", a.pi_raw, b.pi_raw);
            prop_assert!(rel_close(a.ai_raw, b.ai_raw), "{} vs {}", a.ai_raw, b.ai_raw);
        }

        #[test]
        fn uniform_scale_covariance(
            v in prop::collection::vec((-500f64..500., -500f64..500.), 2..150),
            s in 0.01f64..100.0,
            area in 0.1f64..100.0,
        ) {
            let v = pts(&v);
            let scaled: Vec<Point> = v.iter().map(|p| Point::new(s * p.x, s * p.y)).collect();
            let a = compactness(&v, area);
            let b = compactness(&scaled, area * s * s);
            prop_assume!(a.degenerate_flags.is_empty());
            prop_assert!(rel_close(a.pi_raw, b.pi_raw));
            prop_assert!(rel_close(a.ai_raw, b.ai_raw));
        }
    }
}
