//! Least-squares line fits.

/// Slope and intercept of the least-squares line through (x, y).
pub fn line(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Exponent of a power law y ~ C x^p fitted in log-log coordinates.
pub fn power_law(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    line(&lx, &ly).0
}

/// Root-mean-square deviation from the fitted line.
pub fn line_rms(x: &[f64], y: &[f64]) -> f64 {
    let (s, c) = line(x, y);
    let n = x.len() as f64;
    (x.iter().zip(y).map(|(a, b)| (b - s * a - c).powi(2)).sum::<f64>() / n).sqrt()
}
