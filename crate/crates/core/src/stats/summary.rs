//! Per-region distribution summaries of the compactness indices.

use serde::Serialize;

use super::growth::CompactnessIndex;
use crate::grid_io::Region;

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSummary {
    pub region: Region,
    pub index: CompactnessIndex,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Counts over `[0, 0.05), [0.05, 0.1), …, [0.95, 1]`.
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryWarning {
    pub region: Region,
    pub message: String,
}

/// Median with the midpoint rule for even counts. `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

pub fn histogram(values: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; HISTOGRAM_BINS];
    for &v in values {
        let b = (v.clamp(0.0, 1.0) / HISTOGRAM_BIN_WIDTH + 1e-9).floor() as usize;
        bins[b.min(HISTOGRAM_BINS - 1)] += 1;
    }
    bins
}

fn summarize(region: Region, index: CompactnessIndex, values: &[f64]) -> IndexSummary {
    IndexSummary {
        region,
        index,
        n: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: median(values).unwrap_or(f64::NAN),
        histogram: histogram(values),
    }
}

/// PI and AI summaries for each requested region. Regions without cities
/// produce a warning instead of a summary.
pub fn summarize_index(
    cities: &[(Region, f64, f64)],
    regions: &[Region],
) -> (Vec<IndexSummary>, Vec<SummaryWarning>) {
    let mut summaries = Vec::new();
    let mut warnings = Vec::new();
    for &region in regions {
        let (pis, ais): (Vec<f64>, Vec<f64>) = cities
            .iter()
            .filter(|(r, _, _)| *r == region)
            .map(|&(_, pi, ai)| (pi, ai))
            .unzip();
        if pis.is_empty() {
            warnings.push(SummaryWarning {
                region,
                message: format!("no cities in region {region}; summary omitted"),
            });
            continue;
        }
        summaries.push(summarize(region, CompactnessIndex::Proximity, &pis));
        summaries.push(summarize(region, CompactnessIndex::Agglomeration, &ais));
    }
    (summaries, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SplitMix64;

    #[test]
    fn single_city() {
        let (s, w) = summarize_index(&[(Region::US, 0.5, 0.7)], &[Region::US]);
        assert!(w.is_empty());
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].mean, s[0].median), (0.5, 0.5));
        assert_eq!(s[0].histogram[10], 1);
        assert_eq!(s[1].median, 0.7);
    }

    #[test]
    fn even_count_midpoint() {
        assert_eq!(median(&[0.8, 0.2, 0.6, 0.4]), Some(0.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.05, 0.15, 0.999, 1.0]);
        assert_eq!(h[0], 1);
        assert_eq!(h[1], 1);
        assert_eq!(h[3], 1);
        assert_eq!(h[19], 2);
        assert_eq!(h.iter().sum::<usize>(), 5);
    }

    #[test]
    fn empty_region_warns() {
        let (s, w) = summarize_index(&[(Region::US, 0.5, 0.7)], &[Region::US, Region::EU]);
        assert_eq!(s.len(), 2);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].region, Region::EU);
    }

    #[test]
    fn beta_sample_median() {
        // Beta(2, 5) is the 2nd order statistic of 6 uniforms. Its CDF is
        // 1 - (1-x)^6 - 6x(1-x)^5; bisect for the median.
        let cdf = |x: f64| 1.0 - (1.0 - x).powi(6) - 6.0 * x * (1.0 - x).powi(5);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = (lo + hi) / 2.0;
            if cdf(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut rng = SplitMix64::new(2024);
        let cities: Vec<(Region, f64, f64)> = (0..1000)
            .map(|_| {
                let mut u: Vec<f64> = (0..6).map(|_| rng.next_f64()).collect();
                u.sort_by(f64::total_cmp);
                (Region::CN, u[1], 1.0 - u[1])
            })
            .collect();
        let (s, _) = summarize_index(&cities, &[Region::CN]);
        assert!((s[0].median - lo).abs() < 0.02, "{} vs {lo}", s[0].median);
        assert_eq!(s[0].histogram.iter().sum::<usize>(), 1000);
    }
}
