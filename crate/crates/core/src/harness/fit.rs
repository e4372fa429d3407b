//! Power-law fits on log–log axes.

use serde::Serialize;

use crate::{Error, Result};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of `ln y` from the fitted line.
    pub residual: f64,
}

pub fn fit_rate(abscissae: &[f64], ordinates: &[f64]) -> Result<RateFit> {
    if abscissae.len() != ordinates.len() {
        return Err(Error::RateFit(format!("{} abscissae but {} ordinates", abscissae.len(), ordinates.len())));
    }
    if abscissae.len() < 3 {
        return Err(Error::RateFit(format!("need at least 3 points, got {}", abscissae.len())));
    }
    if let Some(y) = ordinates.iter().find(|y| !(**y > 0.0) || !y.is_finite()) {
        return Err(Error::RateFit(format!("ordinate {y} is not positive")));
    }
    if let Some(x) = abscissae.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::RateFit(format!("abscissa {x} is not positive")));
    }
    let lx: Vec<f64> = abscissae.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ordinates.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("abscissae are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit { abscissae: abscissae.to_vec(), ordinates: ordinates.to_vec(), slope, intercept, residual })
}

/// Whether `y[i+1] < y[i] − tol` for all consecutive pairs.
pub fn strictly_decreasing(y: &[f64], tol: f64) -> bool {
    y.windows(2).all(|w| w[1] < w[0] - tol)
}
