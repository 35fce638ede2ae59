use crate::error::{Error, Result};
use crate::trace::Trace;

/// Log-linear fit of the transient and mean of the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Least-squares slope of `log(subopt)` against `t` over the first window.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Mean of the last window.
    pub floor: f64,
    /// Set when nonpositive values were clipped to `1e-300` before the log.
    pub clipped: bool,
    pub window: usize,
}

const CLIP: f64 = 1e-300;

pub fn default_window(t_steps: usize) -> usize {
    (t_steps / 10).max(50)
}

/// Fits the `subopt` column of a trace.
pub fn empirical_rate(trace: &Trace, window: usize) -> Result<RateFit> {
    let series = trace.column("subopt").expect("subopt is a metric column");
    fit_rate(&series, window)
}

pub fn fit_rate(series: &[f64], window: usize) -> Result<RateFit> {
    if window < 2 || series.len() < 2 * window {
        return Err(Error::InvalidInput(format!(
            "rate fit needs window >= 2 and at least {} entries, got {}",
            2 * window,
            series.len()
        )));
    }
    if series.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("rate fit needs a known suboptimality".into()));
    }
    let mut clipped = false;
    let logs: Vec<f64> = series[..window]
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                clipped = true;
                CLIP.ln()
            } else {
                v.ln()
            }
        })
        .collect();
    let k = window as f64;
    let t_mean = (k - 1.0) / 2.0;
    let y_mean = logs.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in logs.iter().enumerate() {
        let dt = t as f64 - t_mean;
        let dy = y - y_mean;
        sxy += dt * dy;
        sxx += dt * dt;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let tail = &series[series.len() - window..];
    Ok(RateFit {
        slope,
        intercept: y_mean - slope * t_mean,
        r_squared,
        floor: tail.iter().sum::<f64>() / k,
        clipped,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_geometric_rate() {
        let series: Vec<f64> = (0..400).map(|t| 3.0 * 0.9f64.powi(t)).collect();
        let fit = fit_rate(&series, 100).unwrap();
        assert!((fit.slope - 0.9f64.ln()).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(!fit.clipped);
    }

    #[test]
    fn floor_is_tail_mean() {
        let mut series = vec![1.0; 50];
        series.extend([2.0, 4.0].repeat(25));
        let fit = fit_rate(&series, 50).unwrap();
        assert_eq!(fit.floor, 3.0);
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn clips_nonpositive_values() {
        let series = vec![0.0; 10];
        assert!(fit_rate(&series, 5).unwrap().clipped);
        assert!(fit_rate(&series, 6).is_err());
        assert_eq!(default_window(100), 50);
        assert_eq!(default_window(5000), 500);
    }
}
