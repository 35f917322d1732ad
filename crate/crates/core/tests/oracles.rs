//! Independent numerical oracles for the statistics and geometry kernels.

use std::f64::consts::PI;

use nightgrid::compactness::compactness;
use nightgrid::geometry::{brute_force_diameter, max_pairwise_distance, Point};
use nightgrid::stats::t_pvalue;
use nightgrid::synth::SplitMix64;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
}

impl Panel {
    fn new(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64) -> Self {
        Panel {
            a,
            b,
            fa,
            fm: f((a + b) / 2.0),
            fb,
        }
    }

    fn estimate(&self) -> f64 {
        (self.b - self.a) / 6.0 * (self.fa + 4.0 * self.fm + self.fb)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, panel: Panel, tol: f64, depth: u32) -> f64 {
    let m = (panel.a + panel.b) / 2.0;
    let left = Panel::new(f, panel.a, m, panel.fa, panel.fm);
    let right = Panel::new(f, m, panel.b, panel.fm, panel.fb);
    let (whole, halves) = (panel.estimate(), left.estimate() + right.estimate());
    if depth == 0 || (halves - whole).abs() <= 15.0 * tol {
        return halves + (halves - whole) / 15.0;
    }
    simpson(f, left, tol / 2.0, depth - 1) + simpson(f, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    simpson(f, Panel::new(f, a, b, f(a), f(b)), 1e-14, 50)
}

#[test]
fn t_pvalue_matches_quadrature_of_the_density() {
    // Student t density with 10 degrees of freedom; Γ(11/2) = (945/32)√π and
    // Γ(5) = 24 give the normalizer 945 / (32 · 24 · √10).
    let norm = 945.0 / (32.0 * 24.0 * 10f64.sqrt());
    let density = |x: f64| norm * (1.0 + x * x / 10.0).powf(-5.5);
    let oracle = 1.0 - 2.0 * integrate(&density, 0.0, 2.0);
    let p = t_pvalue(2.0, 10.0);
    assert!((p - oracle).abs() <= 1e-6, "{p} vs {oracle}");
    assert!((p - oracle).abs() <= 1e-10, "{p} vs {oracle}");
}

#[test]
fn t_pvalue_normal_limit() {
    let p = t_pvalue(1.96, 1e7);
    assert!((p - 0.05).abs() <= 0.001, "{p}");
    // Normal tail by quadrature: P(|Z| > 1.96).
    let phi = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
    let oracle = 1.0 - 2.0 * integrate(&phi, 0.0, 1.96);
    assert!((p - oracle).abs() <= 1e-6, "{p} vs {oracle}");
    assert_eq!(t_pvalue(0.0, 7.0), 1.0);
}

#[test]
fn uniform_disk_has_agglomeration_one() {
    let mut rng = SplitMix64::new(10_000);
    let r = 5000.0;
    let n = 10_000;
    let pts: Vec<Point> = (0..n)
        .map(|_| {
            let rho = r * rng.next_f64().sqrt();
            let theta = 2.0 * PI * rng.next_f64();
            Point::new(rho * theta.cos(), rho * theta.sin())
        })
        .collect();
    let c = compactness(&pts, PI * r * r / n as f64);
    assert!((c.ai_raw - 1.0).abs() <= 0.02, "ai = {}", c.ai_raw);
    assert!((c.de - 2.0 * r / 3.0).abs() < 1e-6);
}

#[test]
fn random_points_diameter_equals_brute_force() {
    let mut rng = SplitMix64::new(200);
    for _ in 0..20 {
        let pts: Vec<Point> = (0..200)
            .map(|_| Point::new(rng.next_f64(), rng.next_f64()))
            .collect();
        assert_eq!(max_pairwise_distance(&pts), brute_force_diameter(&pts));
    }
}
