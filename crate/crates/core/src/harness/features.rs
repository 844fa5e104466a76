use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nn::Tensor;
use crate::preprocess::{
    amplitude_matrix, dwt_image, phase_difference, streams_from_matrices, CsiLink, DwtImage, Window,
};
use crate::sim::{Activity, CsiSample, Dataset, Environment, SampleMeta, Split};
use crate::{Error, Result};

/// Windowing and image parameters shared by training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub window_len: usize,
    pub window_stride: usize,
    pub dwt_levels: usize,
    pub image_side: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            window_len: 256,
            window_stride: 128,
            dwt_levels: 5,
            image_side: 32,
        }
    }
}

/// Model inputs derived from one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFeatures {
    pub split: Split,
    pub index: usize,
    pub activity: Activity,
    pub location: usize,
    /// Planted informative-link mask.
    pub mask: Vec<bool>,
    /// Agent observations, one `[2 * links][window_len]` tensor per window;
    /// channel `2 * link + stream` (stream 0 phase difference, 1 amplitude).
    pub windows: Vec<Tensor<f32>>,
    /// Per-link scalogram of the whole sample.
    pub images: Vec<DwtImage>,
    /// Streams that carried no variation (window or image level).
    pub degenerate_streams: usize,
}

impl SampleFeatures {
    pub fn label(&self) -> usize {
        self.activity.id()
    }

    pub fn num_links(&self) -> usize {
        self.images.len()
    }
}

/// Computes observation windows and link images of `sample`.
///
/// Images use the longest prefix whose length is a multiple of
/// `2^dwt_levels`.
pub fn sample_features(
    sample: &CsiSample,
    meta: &SampleMeta,
    spec: &FeatureSpec,
) -> Result<SampleFeatures> {
    let [links, _, _, t] = sample.shape;
    let windows = Window::sliding(t, spec.window_len, spec.window_stride);
    if windows.is_empty() {
        return Err(Error::Data(format!(
            "sample of length {t} is shorter than one {}-sample window",
            spec.window_len
        )));
    }
    let block = 1usize << spec.dwt_levels;
    let usable = t / block * block;
    if usable == 0 {
        return Err(Error::Data(format!(
            "sample of length {t} too short for {} wavelet levels",
            spec.dwt_levels
        )));
    }
    let mut degenerate = 0;
    let mut per_link = Vec::with_capacity(links);
    let mut images = Vec::with_capacity(links);
    for l in 0..links {
        let csi = CsiLink::from_sample(sample, l);
        let full = Window::new(0, t);
        let phase = phase_difference(&csi, full)?;
        let amp = amplitude_matrix(&csi, full)?;
        let mut pairs = Vec::with_capacity(windows.len());
        for w in &windows {
            pairs.push(streams_from_matrices(
                &phase.columns(w.start, w.len),
                &amp.columns(w.start, w.len),
                l,
                w.start,
            )?);
        }
        let pair = streams_from_matrices(&phase.columns(0, usable), &amp.columns(0, usable), l, 0)?;
        images.push(dwt_image(&pair, spec.dwt_levels, spec.image_side)?);
        degenerate += pairs
            .iter()
            .chain([&pair])
            .flat_map(|p| p.degenerate)
            .filter(|&d| d)
            .count();
        per_link.push(pairs);
    }
    let obs = (0..windows.len())
        .map(|wi| {
            let data: Vec<f32> = per_link
                .iter()
                .flat_map(|pairs| pairs[wi].o.iter().flatten().map(|&v| v as f32))
                .collect();
            Tensor::from_vec(&[2 * links, windows[wi].len], data)
        })
        .collect();
    Ok(SampleFeatures {
        split: meta.split,
        index: meta.index,
        activity: meta.activity,
        location: meta.location,
        mask: meta.mask.clone(),
        windows: obs,
        images,
        degenerate_streams: degenerate,
    })
}

/// Features of a whole split, regenerating each sample from its recipe.
/// Work is spread over the rayon pool; output order follows the split.
pub fn split_features(
    env: &Environment,
    dataset: &Dataset,
    split: Split,
    spec: &FeatureSpec,
) -> Result<Vec<SampleFeatures>> {
    dataset
        .split(split)
        .par_iter()
        .map(|meta| {
            let sample = dataset.materialize(env, meta)?;
            sample_features(&sample, meta, spec)
        })
        .collect()
}

/// Train and test features of a dataset.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub spec: FeatureSpec,
    pub train: Vec<SampleFeatures>,
    pub test: Vec<SampleFeatures>,
}

impl FeatureSet {
    pub fn from_dataset(env: &Environment, dataset: &Dataset, spec: FeatureSpec) -> Result<Self> {
        Ok(FeatureSet {
            spec,
            train: split_features(env, dataset, Split::Train, &spec)?,
            test: split_features(env, dataset, Split::Test, &spec)?,
        })
    }
}
