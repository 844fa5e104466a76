//! Per-link signal preprocessing: adjacent-antenna phase differences,
//! principal-component reduction, zero-mean normalisation and discrete
//! wavelet spectrum images.

mod dwt;
mod normalize;
mod pca;
mod phase;
mod pipeline;

pub use dwt::{dwt_decompose, dwt_reconstruct, dwt_spectrum, Decomposition, DB4_LOWPASS};
pub use normalize::{zero_mean_normalize, Normalized};
pub use pca::{pca, pca_second_component, Pca};
pub use phase::{amplitude_matrix, phase_difference, wrap_phase};
pub use pipeline::{
    dwt_image, preprocess_link, streams_from_matrices, DwtImage, StreamPair, DEFAULT_DWT_LEVELS,
    DEFAULT_IMAGE_SIDE,
};

use num_complex::Complex32;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("phase differences need at least 2 antenna pairs, got {0}")]
    TooFewAntennas(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Domain(String),
    #[error("link {link}, window at {start}: {source}")]
    Context {
        link: usize,
        start: usize,
        #[source]
        source: Box<PreprocessError>,
    },
}

/// Row-major real matrix, features by time.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy of columns `[start, start + len)`.
    pub fn columns(&self, start: usize, len: usize) -> Matrix {
        assert!(
            start + len <= self.cols,
            "column range {start}+{len} exceeds {}",
            self.cols
        );
        let mut data = Vec::with_capacity(self.rows * len);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..start + len]);
        }
        Matrix {
            rows: self.rows,
            cols: len,
            data,
        }
    }
}

/// Time window `[start, start + len)` inside a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub fn new(start: usize, len: usize) -> Self {
        Window { start, len }
    }

    /// Sliding windows of `len` at `stride` covering a series of `total`.
    pub fn sliding(total: usize, len: usize, stride: usize) -> Vec<Window> {
        if len == 0 || stride == 0 || total < len {
            return Vec::new();
        }
        (0..=(total - len) / stride)
            .map(|i| Window::new(i * stride, len))
            .collect()
    }
}

/// Borrowed `[A][S][T]` CSI block of one link.
#[derive(Debug, Clone, Copy)]
pub struct CsiLink<'a> {
    pub data: &'a [Complex32],
    pub antenna_pairs: usize,
    pub subcarriers: usize,
    pub len: usize,
}

impl<'a> CsiLink<'a> {
    pub fn new(
        data: &'a [Complex32],
        antenna_pairs: usize,
        subcarriers: usize,
        len: usize,
    ) -> Self {
        assert_eq!(
            data.len(),
            antenna_pairs * subcarriers * len,
            "CSI block size mismatch"
        );
        CsiLink {
            data,
            antenna_pairs,
            subcarriers,
            len,
        }
    }

    pub fn from_sample(sample: &'a crate::sim::CsiSample, link: usize) -> Self {
        let [_, a, s, t] = sample.shape;
        CsiLink::new(sample.link(link), a, s, t)
    }

    pub(crate) fn series(&self, pair: usize, sub: usize, window: Window) -> &'a [Complex32] {
        let base = (pair * self.subcarriers + sub) * self.len + window.start;
        &self.data[base..base + window.len]
    }

    pub(crate) fn check_window(&self, window: Window) -> Result<(), PreprocessError> {
        if window.len == 0 || window.start + window.len > self.len {
            return Err(PreprocessError::Domain(format!(
                "window [{}, {}) outside sample of length {}",
                window.start,
                window.start + window.len,
                self.len
            )));
        }
        Ok(())
    }
}
