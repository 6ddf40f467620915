use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// Least-squares line through `(log n, log value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Regression standard error of the slope; zero with only two points.
    pub stderr: f64,
}

struct Design {
    xs: Vec<f64>,
    ys: Vec<f64>,
    mean_x: f64,
    sxx: f64,
}

fn design(points: &[(f64, f64)]) -> Result<Design, ExperimentError> {
    if points.len() < 2 {
        return Err(ExperimentError::TooFewPoints(points.len()));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, v) in points {
        if !(n > 0.0) || !(v > 0.0) {
            return Err(ExperimentError::NonPositiveValue { n, value: v });
        }
        xs.push(n.ln());
        ys.push(v.ln());
    }
    let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(ExperimentError::TooFewPoints(1));
    }
    Ok(Design { xs, ys, mean_x, sxx })
}

pub fn fit_exponent(points: &[(f64, f64)]) -> Result<Fit, ExperimentError> {
    let Design { xs, ys, mean_x, sxx } = design(points)?;
    let k = xs.len();
    let mean_y = ys.iter().sum::<f64>() / k as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let stderr = if k > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (ssr / (k - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Fit {
        slope,
        intercept,
        stderr,
    })
}

/// Monte Carlo standard error of the slope when each value is a sample mean
/// with standard error `se`: `sqrt(Σ wᵢ² (seᵢ/vᵢ)²)`, `wᵢ = (xᵢ - x̄)/Sxx`.
pub fn slope_sampling_error(points: &[(f64, f64, f64)]) -> Result<f64, ExperimentError> {
    let pv: Vec<(f64, f64)> = points.iter().map(|&(n, v, _)| (n, v)).collect();
    let Design { xs, mean_x, sxx, .. } = design(&pv)?;
    Ok(xs
        .iter()
        .zip(points)
        .map(|(x, &(_, v, se))| ((x - mean_x) / sxx * se / v).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// The grid used for fitting: all points, minus the smallest `n` when there
/// are at least four.
pub fn fit_window<T: Copy>(points: &[T]) -> &[T] {
    if points.len() >= 4 {
        &points[1..]
    } else {
        points
    }
}

/// An exponent fit as it appears in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub label: String,
    pub d: usize,
    pub n_used: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// Larger of the regression and sampling standard errors.
    pub stderr: f64,
    pub stderr_regression: f64,
    pub stderr_sampling: f64,
    pub ci95: (f64, f64),
}

impl FitReport {
    /// Fits `(n, mean, stderr)` triples after applying [`fit_window`].
    pub fn from_means(label: &str, d: usize, points: &[(usize, f64, f64)]) -> Result<Self, ExperimentError> {
        let used = fit_window(points);
        let fit = fit_exponent(&used.iter().map(|&(n, v, _)| (n as f64, v)).collect::<Vec<_>>())?;
        let sampling = slope_sampling_error(
            &used
                .iter()
                .map(|&(n, v, se)| (n as f64, v, if se.is_finite() { se } else { 0.0 }))
                .collect::<Vec<_>>(),
        )?;
        let stderr = fit.stderr.max(sampling);
        Ok(Self {
            label: label.to_string(),
            d,
            n_used: used.iter().map(|p| p.0).collect(),
            slope: fit.slope,
            intercept: fit.intercept,
            stderr,
            stderr_regression: fit.stderr,
            stderr_sampling: sampling,
            ci95: (fit.slope - 1.96 * stderr, fit.slope + 1.96 * stderr),
        })
    }
}
