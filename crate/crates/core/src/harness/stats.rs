/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// 95% Wilson score interval for `errors` successes out of `bits` trials.
pub fn ber_confidence(errors: u64, bits: u64) -> (f64, f64) {
    assert!(bits >= 1, "at least one bit is required");
    assert!(errors <= bits, "more errors than bits");
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if errors == 0 {
        0.0
    } else {
        (centre - half).clamp(0.0, p)
    };
    let high = if errors == bits {
        1.0
    } else {
        (centre + half).clamp(p, 1.0)
    };
    (low, high)
}
