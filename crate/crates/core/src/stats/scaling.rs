//! Power-law fit `N = α P^β` of hotspot counts on population, with
//! standardized-residual outlier flags.

use serde::{Deserialize, Serialize};

use super::ols::{ols, Design};
use crate::error::{Error, Result};

/// Residuals are considered numerically exact (and no city is flagged) when
/// their standard deviation in log space falls below this.
const EXACT_FIT_SD: f64 = 1e-9;

/// Cities whose standardized residual exceeds this in magnitude are outliers.
pub const OUTLIER_Z: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingObservation {
    pub city_id: String,
    pub population: f64,
    pub hotspot_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub alpha: f64,
    pub beta: f64,
    pub log_intercept: f64,
    pub log_intercept_se: f64,
    pub beta_se: f64,
    pub r2: f64,
    pub n: usize,
    pub city_ids: Vec<String>,
    /// `ln N - (ln α + β ln P)`, in input order.
    pub residuals: Vec<f64>,
    pub std_residuals: Vec<f64>,
    /// Sorted.
    pub outlier_ids: Vec<String>,
}

impl ScalingFit {
    pub fn predict(&self, population: f64) -> f64 {
        self.alpha * population.powf(self.beta)
    }
}

/// Sample standard deviation (n - 1 denominator).
fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn fit_scaling(cities: &[ScalingObservation]) -> Result<ScalingFit> {
    if cities.len() < 3 {
        return Err(Error::invalid(format!(
            "scaling fit needs at least 3 cities, got {}",
            cities.len()
        )));
    }
    for c in cities {
        if !(c.population > 0.0 && c.population.is_finite()) {
            return Err(Error::invalid(format!("city {}: population must be positive", c.city_id)));
        }
        if !(c.hotspot_count > 0.0 && c.hotspot_count.is_finite()) {
            return Err(Error::invalid(format!(
                "city {}: hotspot count must be positive",
                c.city_id
            )));
        }
    }
    let ln_p: Vec<f64> = cities.iter().map(|c| c.population.ln()).collect();
    let ln_n: Vec<f64> = cities.iter().map(|c| c.hotspot_count.ln()).collect();
    let fit = ols(&Design::with_intercept(&[ln_p])?, &ln_n)?;

    let sd = sample_sd(&fit.residuals);
    let std_residuals: Vec<f64> = if sd > EXACT_FIT_SD {
        fit.residuals.iter().map(|e| e / sd).collect()
    } else {
        vec![0.0; fit.residuals.len()]
    };
    let mut outlier_ids: Vec<String> = cities
        .iter()
        .zip(&std_residuals)
        .filter(|(_, z)| z.abs() > OUTLIER_Z)
        .map(|(c, _)| c.city_id.clone())
        .collect();
    outlier_ids.sort();

    Ok(ScalingFit {
        alpha: fit.coefficients[0].exp(),
        beta: fit.coefficients[1],
        log_intercept: fit.coefficients[0],
        log_intercept_se: fit.std_errors[0],
        beta_se: fit.std_errors[1],
        r2: fit.r2,
        n: cities.len(),
        city_ids: cities.iter().map(|c| c.city_id.clone()).collect(),
        residuals: fit.residuals,
        std_residuals,
        outlier_ids,
    })
}
