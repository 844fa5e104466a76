use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Activity, ActivityProfile, Environment, Point, SimError, SPEED_OF_LIGHT};

/// One labelled CSI recording: all links, antenna pairs, subcarriers and time
/// samples, stored row-major as `[L][A][S][T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiSample {
    pub csi: Vec<Complex32>,
    pub shape: [usize; 4],
    pub activity: Activity,
    pub location: usize,
    pub informative_mask: Vec<bool>,
    pub seed: u64,
}

impl CsiSample {
    pub fn num_links(&self) -> usize {
        self.shape[0]
    }

    pub fn len(&self) -> usize {
        self.shape[3]
    }

    pub fn is_empty(&self) -> bool {
        self.shape[3] == 0
    }

    /// `[A][S][T]` block of one link.
    pub fn link(&self, link: usize) -> &[Complex32] {
        let [_, a, s, t] = self.shape;
        let block = a * s * t;
        &self.csi[link * block..(link + 1) * block]
    }

    pub fn at(&self, link: usize, pair: usize, sub: usize, t: usize) -> Complex32 {
        let [_, a, s, n] = self.shape;
        self.csi[((link * a + pair) * s + sub) * n + t]
    }

    pub fn mask_bits(&self) -> u8 {
        mask_to_bits(&self.informative_mask)
    }
}

pub(crate) fn mask_to_bits(mask: &[bool]) -> u8 {
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .fold(0u8, |b, (i, _)| b | (1 << i))
}

fn clamp_distance(d: f64) -> f64 {
    d.max(0.1)
}

/// Human-path amplitude of every link for a body at `location` performing
/// `activity`: `reflection_gain * scatter_gain / (d(ap, body) * d(body, rx))`.
pub fn human_path_amplitudes(
    env: &Environment,
    location: usize,
    activity: &ActivityProfile,
) -> Result<Vec<f64>, SimError> {
    let body = env.location(location)?;
    Ok(env
        .links
        .iter()
        .map(|l| {
            let d1 = clamp_distance(l.ap_pos.distance(&body));
            let d2 = clamp_distance(body.distance(&l.rx_pos));
            env.config.reflection_gain * activity.scatter_gain / (d1 * d2)
        })
        .collect())
}

/// Human-path amplitude over the noise floor, per link.
pub fn relevance_ratios(
    env: &Environment,
    location: usize,
    activity: &ActivityProfile,
) -> Result<Vec<f64>, SimError> {
    Ok(human_path_amplitudes(env, location, activity)?
        .into_iter()
        .map(|a| a / env.config.noise_floor)
        .collect())
}

/// Planted relevance mask. Links whose ratio reaches the threshold are set;
/// if none does, the single highest-ratio link (lowest index on ties) is.
pub fn informative_links(
    env: &Environment,
    location: usize,
    activity: &ActivityProfile,
) -> Result<Vec<bool>, SimError> {
    let ratios = relevance_ratios(env, location, activity)?;
    let threshold = env.config.relevance_threshold;
    let mut mask: Vec<bool> = ratios.iter().map(|&r| r >= threshold).collect();
    if !mask.iter().any(|&m| m) {
        let mut best = 0;
        for (i, &r) in ratios.iter().enumerate() {
            if r > ratios[best] {
                best = i;
            }
        }
        mask[best] = true;
    }
    Ok(mask)
}

// Constant per-antenna hardware phase offsets (radians).
fn hardware_offset(tx: usize, rx: usize) -> f64 {
    0.3 * (1.3 * rx as f64).sin() + 0.2 * (0.7 * tx as f64).sin()
}

fn unit(from: &Point, to: &Point) -> (f64, f64) {
    let d = from.distance(to).max(1e-12);
    ((to.x - from.x) / d, (to.y - from.y) / d)
}

/// Per-antenna-pair phase of a plane wave leaving `tx_node` towards `tx_aim`
/// and arriving at `rx_node` from `rx_from`, for half-wavelength arrays.
fn array_phases(
    env: &Environment,
    tx_node: &Point,
    tx_aim: &Point,
    rx_node: &Point,
    rx_from: &Point,
) -> Vec<f64> {
    let ntx = env.config.tx_antennas;
    let nrx = env.config.rx_antennas;
    let tx_axis = env.array_axis(tx_node);
    let rx_axis = env.array_axis(rx_node);
    let u_tx = unit(tx_node, tx_aim);
    let u_rx = unit(rx_node, rx_from);
    let cos_tx = u_tx.0 * tx_axis.0 + u_tx.1 * tx_axis.1;
    let cos_rx = u_rx.0 * rx_axis.0 + u_rx.1 * rx_axis.1;
    let mut out = Vec::with_capacity(ntx * nrx);
    for i in 0..ntx {
        let ti = i as f64 - (ntx as f64 - 1.0) / 2.0;
        for r in 0..nrx {
            let ri = r as f64 - (nrx as f64 - 1.0) / 2.0;
            out.push(PI * (ti * cos_tx + ri * cos_rx));
        }
    }
    out
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Synthesises one sample. Identical arguments give bit-identical output.
pub fn generate_sample(
    env: &Environment,
    activity: &ActivityProfile,
    location: usize,
    seed: u64,
) -> Result<CsiSample, SimError> {
    let body = env.location(location)?;
    let informative_mask = informative_links(env, location, activity)?;
    let alphas = human_path_amplitudes(env, location, activity)?;

    let cfg = &env.config;
    let [nl, na, ns, nt] = env.csi_shape();
    let ntx = cfg.tx_antennas;
    let nrx = cfg.rx_antennas;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let track = activity.draw_track(&mut rng, cfg.sample_rate, nt);

    let mut csi = vec![Complex32::new(0.0, 0.0); nl * na * ns * nt];
    let mut human = vec![Complex64::new(0.0, 0.0); nt];

    for (li, link) in env.links.iter().enumerate() {
        let d_los = clamp_distance(link.los_length());
        let d_path = clamp_distance(link.ap_pos.distance(&body))
            + clamp_distance(body.distance(&link.rx_pos));
        let static_amp = cfg.static_gain / d_los;
        let static_arr = array_phases(env, &link.ap_pos, &link.rx_pos, &link.rx_pos, &link.ap_pos);
        let human_arr = array_phases(env, &link.ap_pos, &body, &link.rx_pos, &body);
        let hw: Vec<Complex64> = (0..ntx)
            .flat_map(|i| (0..nrx).map(move |r| Complex64::from_polar(1.0, hardware_offset(i, r))))
            .collect();

        // coherent interference: AR(1) in time, fixed random spatial pattern
        let pole: f64 = rng.gen_range(0.0..0.9);
        let pattern: Vec<Complex64> = (0..na * ns)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let innov = (1.0 - pole * pole).sqrt();
        let mut interference = Vec::with_capacity(nt);
        let mut z = complex_normal(&mut rng);
        for _ in 0..nt {
            interference.push(z);
            z = z * pole + complex_normal(&mut rng) * innov;
        }
        let interference_scale = cfg.noise_floor * cfg.interference_level;

        for s in 0..ns {
            let f = env.subcarrier_freqs[s];
            let k = 2.0 * PI * f / SPEED_OF_LIGHT;
            let static_base = Complex64::from_polar(static_amp, -k * d_los);
            for (t, h) in human.iter_mut().enumerate() {
                *h = Complex64::from_polar(alphas[li], -k * (d_path + track.modulation[t]));
            }
            for a in 0..na {
                let st = static_base * Complex64::from_polar(1.0, static_arr[a]) * hw[a];
                let hu = Complex64::from_polar(1.0, human_arr[a]) * hw[a];
                let g = pattern[a * ns + s] * interference_scale;
                let base = ((li * na + a) * ns + s) * nt;
                for t in 0..nt {
                    let v = st + human[t] * hu + g * interference[t];
                    csi[base + t] = Complex32::new(v.re as f32, v.im as f32);
                }
            }
        }

        // white receiver noise, drawn in storage order
        let block = na * ns * nt;
        for v in &mut csi[li * block..(li + 1) * block] {
            let n = complex_normal(&mut rng) * cfg.noise_floor;
            *v += Complex32::new(n.re as f32, n.im as f32);
        }
    }

    Ok(CsiSample {
        csi,
        shape: [nl, na, ns, nt],
        activity: activity.label,
        location,
        informative_mask,
        seed,
    })
}
