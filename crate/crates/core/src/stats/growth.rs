//! Growth regressions `ln Y = β₁ + β₂ ln Pop + β₃ Com + β₄ Com² + e` in five
//! nested variants, with information-criterion selection.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ols::{ols, Design};
use super::special::{f_sf, stars, t_pvalue};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompactnessIndex {
    #[serde(rename = "PI")]
    Proximity,
    #[serde(rename = "AI")]
    Agglomeration,
}

impl CompactnessIndex {
    pub fn name(&self) -> &'static str {
        match self {
            CompactnessIndex::Proximity => "pi",
            CompactnessIndex::Agglomeration => "ai",
        }
    }
}

impl FromStr for CompactnessIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pi" => Ok(CompactnessIndex::Proximity),
            "ai" => Ok(CompactnessIndex::Agglomeration),
            _ => Err(Error::invalid(format!("unknown compactness index {s:?} (pi or ai)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelSpec {
    #[serde(rename = "M1_pop_only")]
    M1PopOnly,
    #[serde(rename = "M2_pop_pi")]
    M2PopPi,
    #[serde(rename = "M3_pop_pi_sq")]
    M3PopPiSq,
    #[serde(rename = "M4_pop_ai")]
    M4PopAi,
    #[serde(rename = "M5_pop_ai_sq")]
    M5PopAiSq,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 5] = [
        ModelSpec::M1PopOnly,
        ModelSpec::M2PopPi,
        ModelSpec::M3PopPiSq,
        ModelSpec::M4PopAi,
        ModelSpec::M5PopAiSq,
    ];

    pub fn from_number(n: u8) -> Result<Self> {
        Self::ALL
            .get(usize::from(n).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::invalid(format!("model number must be 1..5, got {n}")))
    }

    pub fn number(&self) -> u8 {
        *self as u8 + 1
    }

    pub fn index(&self) -> Option<CompactnessIndex> {
        match self {
            ModelSpec::M1PopOnly => None,
            ModelSpec::M2PopPi | ModelSpec::M3PopPiSq => Some(CompactnessIndex::Proximity),
            ModelSpec::M4PopAi | ModelSpec::M5PopAiSq => Some(CompactnessIndex::Agglomeration),
        }
    }

    pub fn quadratic(&self) -> bool {
        matches!(self, ModelSpec::M3PopPiSq | ModelSpec::M5PopAiSq)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::M1PopOnly => "M1_pop_only",
            ModelSpec::M2PopPi => "M2_pop_pi",
            ModelSpec::M3PopPiSq => "M3_pop_pi_sq",
            ModelSpec::M4PopAi => "M4_pop_ai",
            ModelSpec::M5PopAiSq => "M5_pop_ai_sq",
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(n) = s.trim_start_matches(['M', 'm']).parse::<u8>() {
            return Self::from_number(n);
        }
        Self::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthObservation {
    pub city_id: String,
    pub gdp_per_km2: f64,
    pub population: f64,
    pub pi: f64,
    pub ai: f64,
}

impl GrowthObservation {
    fn compactness(&self, index: CompactnessIndex) -> f64 {
        match index {
            CompactnessIndex::Proximity => self.pi,
            CompactnessIndex::Agglomeration => self.ai,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub model: ModelSpec,
    pub coefficients: Vec<Coefficient>,
    pub r2: f64,
    pub adj_r2: f64,
    pub aic: f64,
    pub rss: f64,
    pub f_statistic: f64,
    pub f_pvalue: f64,
    pub n_obs: usize,
    pub optimal_compactness: Option<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }
}

/// `n ln(rss/n) + 2(p + 1)`, counting the error variance as a parameter.
pub fn aic(rss: f64, n: usize, p: usize) -> Result<f64> {
    if rss == 0.0 {
        return Err(Error::PerfectFit("AIC undefined under Gaussian likelihood"));
    }
    if rss.is_nan() || rss < 0.0 || n <= p || p < 1 {
        return Err(Error::invalid(format!("aic needs rss > 0 and n > p >= 1 (rss={rss}, n={n}, p={p})")));
    }
    let n_f = n as f64;
    Ok(n_f * (rss / n_f).ln() + 2.0 * (p as f64 + 1.0))
}

/// Overall F test for `k` slopes: returns `(F, p)`.
pub fn f_statistic(r2: f64, n: usize, k: usize) -> Result<(f64, f64)> {
    if r2 >= 1.0 {
        return Err(Error::PerfectFit("F statistic undefined"));
    }
    if !(0.0..1.0).contains(&r2) || k < 1 || n < k + 2 {
        return Err(Error::invalid(format!("f_statistic needs 0 <= r2 < 1 and n > k + 1 >= 2 (r2={r2}, n={n}, k={k})")));
    }
    let d2 = (n - k - 1) as f64;
    let f = (r2 / k as f64) / ((1.0 - r2) / d2);
    Ok((f, f_sf(f, k as f64, d2)))
}

/// Vertex `-β₃ / (2β₄)` of a concave quadratic; `None` unless `β₄ < 0`.
pub fn optimal_compactness(linear: f64, quadratic: f64) -> Option<f64> {
    (quadratic < 0.0).then(|| -linear / (2.0 * quadratic))
}

pub fn fit_growth_model(cities: &[GrowthObservation], spec: ModelSpec) -> Result<RegressionFit> {
    for c in cities {
        if !(c.gdp_per_km2 > 0.0 && c.gdp_per_km2.is_finite()) {
            return Err(Error::invalid(format!("city {}: GDP per km² must be positive", c.city_id)));
        }
        if !(c.population > 0.0 && c.population.is_finite()) {
            return Err(Error::invalid(format!("city {}: population must be positive", c.city_id)));
        }
        if let Some(index) = spec.index() {
            let v = c.compactness(index);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "city {}: {} = {v} outside [0, 1]",
                    c.city_id,
                    index.name()
                )));
            }
        }
    }

    let mut names = vec!["constant".to_owned(), "ln_pop".to_owned()];
    let mut covariates = vec![cities.iter().map(|c| c.population.ln()).collect::<Vec<_>>()];
    if let Some(index) = spec.index() {
        let com: Vec<f64> = cities.iter().map(|c| c.compactness(index)).collect();
        names.push(index.name().to_owned());
        if spec.quadratic() {
            names.push(format!("{}_sq", index.name()));
            covariates.push(com.clone());
            covariates.push(com.iter().map(|v| v * v).collect());
        } else {
            covariates.push(com);
        }
    }
    let p = names.len();
    if cities.len() < p + 2 {
        return Err(Error::invalid(format!(
            "model {} needs at least {} cities, got {}",
            spec.label(),
            p + 2,
            cities.len()
        )));
    }
    let response: Vec<f64> = cities.iter().map(|c| c.gdp_per_km2.ln()).collect();
    let fit = ols(&Design::with_intercept(&covariates)?, &response)?;

    let n = cities.len();
    let dof = (n - p) as f64;
    let coefficients: Vec<Coefficient> = names
        .into_iter()
        .zip(fit.coefficients.iter().zip(&fit.std_errors))
        .map(|(name, (&estimate, &std_error))| {
            let t_value = estimate / std_error;
            let p_value = t_pvalue(t_value, dof);
            Coefficient {
                name,
                estimate,
                std_error,
                t_value,
                p_value,
                stars: stars(p_value),
            }
        })
        .collect();
    let (f_statistic, f_pvalue) = f_statistic(fit.r2, n, p - 1)?;
    let optimal = if spec.quadratic() {
        optimal_compactness(fit.coefficients[2], fit.coefficients[3])
    } else {
        None
    };
    Ok(RegressionFit {
        model: spec,
        coefficients,
        r2: fit.r2,
        adj_r2: 1.0 - (1.0 - fit.r2) * (n - 1) as f64 / dof,
        aic: aic(fit.rss, n, p)?,
        rss: fit.rss,
        f_statistic,
        f_pvalue,
        n_obs: n,
        optimal_compactness: optimal,
    })
}

/// The fit with the smallest AIC; ties go to the earlier model.
pub fn select_by_aic(fits: &[RegressionFit]) -> Option<&RegressionFit> {
    fits.iter().fold(None, |best: Option<&RegressionFit>, f| match best {
        Some(b) if b.aic <= f.aic => Some(b),
        _ => Some(f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SplitMix64;

    #[test]
    fn aic_examples() {
        assert!((aic(100.0, 100, 2).unwrap() - 6.0).abs() < 1e-12);
        let a = aic(3.7, 50, 3).unwrap();
        let b = aic(7.4, 50, 3).unwrap();
        assert!((b - a - 50.0 * 2f64.ln()).abs() < 1e-10);
        assert!((aic(3.7, 50, 4).unwrap() - a - 2.0).abs() < 1e-12);
        assert_eq!(
            aic(0.0, 10, 2).unwrap_err().to_string(),
            "perfect fit: AIC undefined under Gaussian likelihood"
        );
    }

    #[test]
    fn f_statistic_examples() {
        assert_eq!(f_statistic(0.0, 30, 2).unwrap(), (0.0, 1.0));
        assert!(matches!(f_statistic(1.0, 30, 2), Err(Error::PerfectFit(_))));
        let (f, p) = f_statistic(0.461, 349, 1).unwrap();
        assert!((f - 296.8).abs() < 1.0, "{f}");
        assert!(p < 1e-40);
        let (f, _) = f_statistic(0.528, 349, 3).unwrap();
        assert!((f - 128.6).abs() < 1.0, "{f}");
    }

    #[test]
    fn vertex_rule() {
        assert!((optimal_compactness(6.340, -5.068).unwrap() - 0.6255).abs() < 1e-4);
        assert!((optimal_compactness(7.618, -5.235).unwrap() - 0.7276).abs() < 1e-4);
        assert_eq!(optimal_compactness(1.0, 0.0), None);
        assert_eq!(optimal_compactness(1.0, 2.0), None);
    }

    #[test]
    fn model_parsing() {
        assert_eq!("3".parse::<ModelSpec>().unwrap(), ModelSpec::M3PopPiSq);
        assert_eq!("M5".parse::<ModelSpec>().unwrap(), ModelSpec::M5PopAiSq);
        assert_eq!("m4_pop_ai".parse::<ModelSpec>().unwrap(), ModelSpec::M4PopAi);
        assert!("6".parse::<ModelSpec>().is_err());
        assert!("0".parse::<ModelSpec>().is_err());
        for m in ModelSpec::ALL {
            assert_eq!(ModelSpec::from_number(m.number()).unwrap(), m);
        }
    }

    fn simulated(n: usize, seed: u64, beta: [f64; 4], sigma: f64) -> Vec<GrowthObservation> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|i| {
                let ln_pop = (1e4f64).ln() + rng.next_f64() * (1e3f64).ln();
                let c = rng.next_f64();
                let other = rng.next_f64();
                let ln_y = beta[0] + beta[1] * ln_pop + beta[2] * c + beta[3] * c * c
                    + sigma * rng.next_gaussian();
                GrowthObservation {
                    city_id: format!("c{i}"),
                    gdp_per_km2: ln_y.exp(),
                    population: ln_pop.exp(),
                    pi: c,
                    ai: other,
                }
            })
            .collect()
    }

    #[test]
    fn convex_fit_has_no_vertex() {
        let data = simulated(200, 3, [1.0, 0.5, -4.0, 5.0], 0.1);
        let fit = fit_growth_model(&data, ModelSpec::M3PopPiSq).unwrap();
        assert!(fit.coefficient("pi_sq").unwrap().estimate > 0.0);
        assert_eq!(fit.optimal_compactness, None);
    }

    #[test]
    fn nesting_and_vertex() {
        let data = simulated(349, 11, [5.3, 0.6, 6.3, -5.1], 0.3);
        let fits: Vec<RegressionFit> = ModelSpec::ALL
            .iter()
            .map(|&m| fit_growth_model(&data, m).unwrap())
            .collect();
        assert!(fits[0].r2 <= fits[1].r2 && fits[1].r2 <= fits[2].r2);
        assert!(fits[0].r2 <= fits[3].r2 && fits[3].r2 <= fits[4].r2);
        let b3 = fits[2].coefficient("pi").unwrap().estimate;
        let b4 = fits[2].coefficient("pi_sq").unwrap().estimate;
        let v = fits[2].optimal_compactness.unwrap();
        // The quadratic part peaks at the reported vertex.
        let q = |c: f64| b3 * c + b4 * c * c;
        for k in 0..=1000 {
            assert!(q(k as f64 / 1000.0) <= q(v) + 1e-12);
        }
        assert_eq!(select_by_aic(&fits).unwrap().model, ModelSpec::M3PopPiSq);
        assert_eq!(fits[2].coefficients.len(), 4);
        assert_eq!(fits[0].coefficients.len(), 2);
    }

    #[test]
    fn constant_compactness_is_collinear() {
        let mut data = simulated(30, 5, [1.0, 0.5, 1.0, -1.0], 0.1);
        for c in &mut data {
            c.pi = 0.4;
        }
        assert!(matches!(fit_growth_model(&data, ModelSpec::M3PopPiSq), Err(Error::Collinear)));
        assert!(matches!(fit_growth_model(&data, ModelSpec::M2PopPi), Err(Error::Collinear)));
        assert!(fit_growth_model(&data, ModelSpec::M1PopOnly).is_ok());
    }

    #[test]
    fn validates_inputs() {
        let mut data = simulated(30, 5, [1.0, 0.5, 1.0, -1.0], 0.1);
        data[3].pi = 1.2;
        assert!(fit_growth_model(&data, ModelSpec::M2PopPi).is_err());
        assert!(fit_growth_model(&data, ModelSpec::M4PopAi).is_ok());
        assert!(fit_growth_model(&data[..5], ModelSpec::M3PopPiSq).is_err());
    }
}
