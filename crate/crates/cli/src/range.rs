//! Sweep value lists: `8..15` (inclusive), `70..130:10`, `2,10,11`, or a single value.

pub fn parse_values(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty range".into());
    }
    if let Some((start, rest)) = spec.split_once("..") {
        let (end, step) = match rest.split_once(':') {
            Some((e, s)) => (e, num(s)?),
            None => (rest, 1.0),
        };
        let (start, end) = (num(start)?, num(end)?);
        if step <= 0.0 {
            return Err(format!("step must be positive in {spec:?}"));
        }
        if end < start {
            return Err(format!("range {spec:?} is empty"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    spec.split(',').map(num).collect()
}

pub fn parse_mcs(spec: &str) -> Result<Vec<u8>, String> {
    parse_values(spec)?
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && (0.0..=15.0).contains(&v) {
                Ok(v as u8)
            } else {
                Err(format!("{v} is not an MCS index in 0..=15"))
            }
        })
        .collect()
}

fn num(s: &str) -> Result<f64, String> {
    let s = s.trim();
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{s:?} is not a number"))
}
