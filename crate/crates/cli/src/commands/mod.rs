pub mod fidelity;
pub mod reconstruct;
pub mod render;
pub mod report;
pub mod simulate_fiber;
pub mod simulate_pdc;
pub mod synth;

use modekit::Error;

/// Exponential fit of `ln w` against mode index over the first `count`
/// weights: returns (decay rate per mode, R^2 of the linear fit).
pub fn exponential_decay_fit(weights: &[f64], count: usize) -> Option<(f64, f64)> {
    let m = count.min(weights.len());
    if m < 3 || weights[..m].iter().any(|&w| !(w > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = (0..m).map(|i| i as f64).collect();
    let ys: Vec<f64> = weights[..m].iter().map(|w| w.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m as f64;
    let my = ys.iter().sum::<f64>() / m as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) || !(syy > 0.0) {
        return None;
    }
    Some((-sxy / sxx, sxy * sxy / (sxx * syy)))
}

pub fn parse_denoise(spec: &str) -> Result<modekit::NoiseFilter, Error> {
    if let Some(level) = spec.strip_prefix("threshold:") {
        let level: f64 = level.parse().map_err(|_| {
            Error::InvalidParameter(format!("bad threshold level {level:?}"))
        })?;
        return Ok(modekit::NoiseFilter::Threshold(level));
    }
    if let Some(path) = spec.strip_prefix("dark:") {
        let stack = modekit::io::read_frame_stack(std::path::Path::new(path))?;
        return Ok(modekit::NoiseFilter::DarkCov(stack));
    }
    Err(Error::InvalidParameter(format!(
        "denoise spec {spec:?} must be `threshold:LEVEL` or `dark:PATH`"
    )))
}
