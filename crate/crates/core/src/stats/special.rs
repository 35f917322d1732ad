//! Log-gamma, regularized incomplete beta, and the Student-t / F tail
//! probabilities built on it.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 50_000;

/// Continued fraction for `I_x(a, b)`, modified Lentz evaluation.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x ∈ [0, 1]`.
pub fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b).clamp(0.0, 1.0)
    }
}

/// Two-sided p-value `P(|T| ≥ |t|)` for Student's t with `dof` degrees of
/// freedom.
pub fn t_pvalue(t: f64, dof: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    regularized_beta(dof / 2.0, 0.5, x)
}

/// Upper tail `P(F ≥ f)` of the F distribution with `(d1, d2)` degrees of
/// freedom.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    regularized_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

/// Significance stars at the 0.1 / 0.05 / 0.01 levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(2.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        // ln(10!) = ln 3628800
        assert!((ln_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x, I_x(a, 1) = x^a, I_x(1, b) = 1 - (1-x)^b.
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.999] {
            assert!((regularized_beta(1.0, 1.0, x) - x).abs() < 1e-14);
            assert!((regularized_beta(3.5, 1.0, x) - x.powf(3.5)).abs() < 1e-13);
            assert!((regularized_beta(1.0, 4.0, x) - (1.0 - (1.0 - x).powi(4))).abs() < 1e-13);
            // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
            let lhs = regularized_beta(2.3, 7.1, x);
            let rhs = 1.0 - regularized_beta(7.1, 2.3, 1.0 - x);
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn t_pvalue_cauchy_case() {
        // dof = 1 is Cauchy: P(|T| > t) = 1 - 2 atan(t)/π.
        for &t in &[0.1, 1.0, 3.0, 25.0] {
            let exact = 1.0 - 2.0 * f64::atan(t) / PI;
            assert!((t_pvalue(t, 1.0) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn t_pvalue_symmetry_and_zero() {
        assert_eq!(t_pvalue(0.0, 7.0), 1.0);
        assert_eq!(t_pvalue(-2.5, 12.0), t_pvalue(2.5, 12.0));
        assert_eq!(t_pvalue(f64::INFINITY, 3.0), 0.0);
    }

    #[test]
    fn f_sf_matches_t_squared() {
        // F(1, ν) is T² for T ~ t(ν).
        for &t in &[0.5, 1.7, 4.0] {
            assert!((f_sf(t * t, 1.0, 20.0) - t_pvalue(t, 20.0)).abs() < 1e-12);
        }
        assert_eq!(f_sf(0.0, 3.0, 10.0), 1.0);
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.049), "**");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.1), "");
    }
}
