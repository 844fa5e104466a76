use super::PreprocessError;

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when the input had (numerically) zero spread; values are then all 0.
    pub degenerate: bool,
}

/// `(x - mean) / std` with the population standard deviation.
pub fn zero_mean_normalize(x: &[f64]) -> Result<Normalized, PreprocessError> {
    if x.len() < 2 {
        return Err(PreprocessError::Domain(format!(
            "normalisation needs >= 2 values, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std >= 1e-12) {
        return Ok(Normalized {
            values: vec![0.0; x.len()],
            degenerate: true,
        });
    }
    Ok(Normalized {
        values: x.iter().map(|v| (v - mean) / std).collect(),
        degenerate: false,
    })
}
