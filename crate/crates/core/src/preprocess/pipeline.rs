use super::{
    amplitude_matrix, dwt_spectrum, pca_second_component, phase_difference, zero_mean_normalize,
    CsiLink, Matrix, PreprocessError, Window,
};

pub const DEFAULT_DWT_LEVELS: usize = 5;
pub const DEFAULT_IMAGE_SIDE: usize = 32;

/// The two behaviour streams of one link over one window.
///
/// Index 0 is the phase-difference stream, index 1 the amplitude stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPair {
    pub link: usize,
    pub start: usize,
    pub x: [Vec<f64>; 2],
    pub o: [Vec<f64>; 2],
    /// Stream carried no usable variation; `x` and `o` are zero.
    pub degenerate: [bool; 2],
}

impl StreamPair {
    pub fn len(&self) -> usize {
        self.x[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn reduce(m: &Matrix) -> Result<(Vec<f64>, Vec<f64>, bool), PreprocessError> {
    match pca_second_component(m) {
        Ok(x) => {
            let n = zero_mean_normalize(&x)?;
            Ok((x, n.values, n.degenerate))
        }
        Err(PreprocessError::Degenerate(_)) => Ok((vec![0.0; m.cols], vec![0.0; m.cols], true)),
        Err(e) => Err(e),
    }
}

/// Phase-difference and amplitude streams of `link` over `window`.
pub fn preprocess_link(
    csi: &CsiLink<'_>,
    link: usize,
    window: Window,
) -> Result<StreamPair, PreprocessError> {
    let wrap = |e: PreprocessError| PreprocessError::Context {
        link,
        start: window.start,
        source: Box::new(e),
    };
    let phase = phase_difference(csi, window).map_err(wrap)?;
    let amp = amplitude_matrix(csi, window).map_err(wrap)?;
    streams_from_matrices(&phase, &amp, link, window.start)
}

/// Streams from precomputed phase-difference and amplitude matrices, which
/// lets callers extract several windows from one full-length pass.
pub fn streams_from_matrices(
    phase: &Matrix,
    amp: &Matrix,
    link: usize,
    start: usize,
) -> Result<StreamPair, PreprocessError> {
    let wrap = |e: PreprocessError| PreprocessError::Context {
        link,
        start,
        source: Box::new(e),
    };
    if phase.cols != amp.cols {
        return Err(wrap(PreprocessError::Domain(format!(
            "phase has {} columns, amplitude {}",
            phase.cols, amp.cols
        ))));
    }
    let (x0, o0, d0) = reduce(phase).map_err(wrap)?;
    let (x1, o1, d1) = reduce(amp).map_err(wrap)?;
    Ok(StreamPair {
        link,
        start,
        x: [x0, x1],
        o: [o0, o1],
        degenerate: [d0, d1],
    })
}

/// Two-channel scalogram, `[2][side][side]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DwtImage {
    pub side: usize,
    pub data: Vec<f32>,
}

impl DwtImage {
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.side * self.side;
        &self.data[c * n..(c + 1) * n]
    }
}

/// Scalogram images of both normalised streams.
pub fn dwt_image(
    pair: &StreamPair,
    levels: usize,
    side: usize,
) -> Result<DwtImage, PreprocessError> {
    let mut data = Vec::with_capacity(2 * side * side);
    for o in &pair.o {
        let img = dwt_spectrum(o, levels, side).map_err(|e| PreprocessError::Context {
            link: pair.link,
            start: pair.start,
            source: Box::new(e),
        })?;
        data.extend(img.iter().map(|&v| v as f32));
    }
    Ok(DwtImage { side, data })
}
