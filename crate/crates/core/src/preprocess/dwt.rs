use super::PreprocessError;

/// Daubechies-4 (8 tap) decomposition low-pass filter.
pub const DB4_LOWPASS: [f64; 8] = [
    -0.010_597_401_784_997_278,
    0.032_883_011_666_982_945,
    0.030_841_381_835_986_965,
    -0.187_034_811_718_881_14,
    -0.027_983_769_416_983_85,
    0.630_880_767_929_590_4,
    0.714_846_570_552_541_5,
    0.230_377_813_308_855_23,
];

fn highpass() -> [f64; 8] {
    let n = DB4_LOWPASS.len();
    let mut g = [0.0; 8];
    for (k, gk) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *gk = sign * DB4_LOWPASS[n - 1 - k];
    }
    g
}

/// Multi-level periodic wavelet decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<f64>>,
    pub approximation: Vec<f64>,
}

impl Decomposition {
    pub fn energy(&self) -> f64 {
        self.details
            .iter()
            .chain(std::iter::once(&self.approximation))
            .flatten()
            .map(|c| c * c)
            .sum()
    }
}

fn analyse(x: &[f64], h: &[f64; 8], g: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..h.len() {
            let v = x[(2 * k + j) % n];
            sa += h[j] * v;
            sd += g[j] * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

fn synthesise(a: &[f64], d: &[f64], h: &[f64; 8], g: &[f64; 8]) -> Vec<f64> {
    let n = a.len() * 2;
    let mut x = vec![0.0; n];
    for k in 0..a.len() {
        for j in 0..h.len() {
            x[(2 * k + j) % n] += h[j] * a[k] + g[j] * d[k];
        }
    }
    x
}

/// Decomposes `x` into `levels` detail bands plus the final approximation.
///
/// The length must be a multiple of `2^levels`.
pub fn dwt_decompose(x: &[f64], levels: usize) -> Result<Decomposition, PreprocessError> {
    if levels == 0 {
        return Err(PreprocessError::Domain(
            "wavelet levels must be >= 1".into(),
        ));
    }
    let block = 1usize.checked_shl(levels as u32).unwrap_or(usize::MAX);
    if x.len() < block || !x.len().is_multiple_of(block) {
        return Err(PreprocessError::Domain(format!(
            "series of length {} cannot be split into {levels} wavelet levels (need a multiple of {block})",
            x.len()
        )));
    }
    let g = highpass();
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analyse(&approx, &DB4_LOWPASS, &g);
        details.push(d);
        approx = a;
    }
    Ok(Decomposition {
        details,
        approximation: approx,
    })
}

/// Inverse of [`dwt_decompose`].
pub fn dwt_reconstruct(dec: &Decomposition) -> Vec<f64> {
    let g = highpass();
    let mut approx = dec.approximation.clone();
    for d in dec.details.iter().rev() {
        approx = synthesise(&approx, d, &DB4_LOWPASS, &g);
    }
    approx
}

fn resample(src: &[f64], out: &mut [f64]) {
    let n = src.len();
    let r = out.len();
    if n == 1 || r == 1 {
        out.iter_mut().for_each(|o| *o = src[0]);
        return;
    }
    for (c, o) in out.iter_mut().enumerate() {
        let pos = c as f64 * (n - 1) as f64 / (r - 1) as f64;
        let i = (pos.floor() as usize).min(n - 2);
        let f = pos - i as f64;
        *o = src[i] * (1.0 - f) + src[i + 1] * f;
    }
}

/// `side x side` scalogram image, row-major.
///
/// Bands run finest detail first and the approximation last; image row `i`
/// shows band `i * (levels + 1) / side`. Each band's magnitudes are linearly
/// resampled to `side` columns and the image is scaled so its maximum is 1.
pub fn dwt_spectrum(x: &[f64], levels: usize, side: usize) -> Result<Vec<f64>, PreprocessError> {
    if side == 0 {
        return Err(PreprocessError::Domain(
            "image side must be positive".into(),
        ));
    }
    let dec = dwt_decompose(x, levels)?;
    let bands: Vec<Vec<f64>> = dec
        .details
        .iter()
        .chain(std::iter::once(&dec.approximation))
        .map(|b| b.iter().map(|c| c.abs()).collect())
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(bands.len());
    for b in &bands {
        let mut row = vec![0.0; side];
        resample(b, &mut row);
        rows.push(row);
    }
    let mut img = vec![0.0; side * side];
    for i in 0..side {
        let band = i * bands.len() / side;
        img[i * side..(i + 1) * side].copy_from_slice(&rows[band]);
    }
    let max = img.iter().cloned().fold(0.0f64, f64::max);
    if max > 0.0 {
        img.iter_mut().for_each(|v| *v /= max);
    }
    Ok(img)
}
