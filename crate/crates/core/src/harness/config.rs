use crate::sim::{DatasetSpec, EnvironmentConfig, Point};
use crate::{Error, Result};

/// Everything `gen` needs besides the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub env: EnvironmentConfig,
    pub train: usize,
    pub test: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        let d = DatasetSpec::default();
        GenConfig {
            env: EnvironmentConfig::default(),
            train: d.train,
            test: d.test,
        }
    }
}

impl GenConfig {
    pub fn dataset_spec(&self, seed: u64) -> DatasetSpec {
        DatasetSpec {
            train: self.train,
            test: self.test,
            seed,
        }
    }
}

fn parse_points(v: &str) -> std::result::Result<Vec<Point>, String> {
    v.split(';')
        .map(|p| {
            let xy: Vec<&str> = p.split(',').map(str::trim).collect();
            match xy.as_slice() {
                [x, y] => Ok(Point::new(
                    x.parse().map_err(|_| format!("bad coordinate {x:?}"))?,
                    y.parse().map_err(|_| format!("bad coordinate {y:?}"))?,
                )),
                _ => Err(format!("expected `x, y`, got {p:?}")),
            }
        })
        .collect()
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped; unknown or repeated keys are rejected. Positions are written as
/// `x, y; x, y`. Setting `num_aps`/`num_rxs` without explicit positions
/// places the transceivers around a square of side `side` (default 6 m).
pub fn parse_gen_config(text: &str) -> Result<GenConfig> {
    let mut cfg = GenConfig::default();
    let mut seen = std::collections::HashSet::new();
    let mut side = 6.0;
    let mut explicit_positions = false;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Usage(format!("config line {}: {msg}", n + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key {key:?}")));
        }
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| err(format!("{key}: expected an integer, got {value:?}")))
        };
        let float = || {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("{key}: expected a number, got {value:?}")))
        };
        let e = &mut cfg.env;
        match key {
            "num_aps" => e.num_aps = int()?,
            "num_rxs" => e.num_rxs = int()?,
            "tx_antennas" => e.tx_antennas = int()?,
            "rx_antennas" => e.rx_antennas = int()?,
            "num_subcarriers" => e.num_subcarriers = int()?,
            "side" => side = float()?,
            "ap_positions" => {
                e.ap_positions = parse_points(value).map_err(|m| err(format!("{key}: {m}")))?;
                explicit_positions = true;
            }
            "rx_positions" => {
                e.rx_positions = parse_points(value).map_err(|m| err(format!("{key}: {m}")))?;
                explicit_positions = true;
            }
            "carrier_freq" => e.carrier_freq = float()?,
            "bandwidth" => e.bandwidth = float()?,
            "sample_rate" => e.sample_rate = float()?,
            "sample_duration" => e.sample_duration = float()?,
            "noise_floor" => e.noise_floor = float()?,
            "interference_level" => e.interference_level = float()?,
            "static_gain" => e.static_gain = float()?,
            "reflection_gain" => e.reflection_gain = float()?,
            "relevance_threshold" => e.relevance_threshold = float()?,
            "train" => cfg.train = int()?,
            "test" => cfg.test = int()?,
            _ => return Err(err(format!("unknown key {key:?}"))),
        }
    }
    let layout_keys = ["num_aps", "num_rxs", "side"];
    if !explicit_positions && layout_keys.iter().any(|k| seen.contains(*k)) {
        let (aps, rxs) = EnvironmentConfig::square_layout(cfg.env.num_aps, cfg.env.num_rxs, side);
        cfg.env.ap_positions = aps;
        cfg.env.rx_positions = rxs;
    }
    cfg.env.validate()?;
    Ok(cfg)
}
