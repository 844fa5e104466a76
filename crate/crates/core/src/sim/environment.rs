use serde::{Deserialize, Serialize};

use super::{SimError, NUM_LOCATIONS};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Deployment and radio parameters.
///
/// Positions are in meters, frequencies in Hz. `noise_floor` is the standard
/// deviation (complex, linear amplitude) of the white receiver noise; the
/// coherent interference process has standard deviation
/// `interference_level * noise_floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub num_aps: usize,
    pub num_rxs: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub ap_positions: Vec<Point>,
    pub rx_positions: Vec<Point>,
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub num_subcarriers: usize,
    pub sample_rate: f64,
    pub sample_duration: f64,
    pub noise_floor: f64,
    pub interference_level: f64,
    pub static_gain: f64,
    pub reflection_gain: f64,
    pub relevance_threshold: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        let side = 6.0;
        EnvironmentConfig {
            num_aps: 2,
            num_rxs: 2,
            tx_antennas: 1,
            rx_antennas: 3,
            ap_positions: vec![Point::new(0.0, 0.0), Point::new(side, side)],
            rx_positions: vec![Point::new(side, 0.0), Point::new(0.0, side)],
            carrier_freq: 5.280e9,
            bandwidth: 20e6,
            num_subcarriers: 30,
            sample_rate: 200.0,
            sample_duration: 4.0,
            noise_floor: 1.5e-3,
            interference_level: 2.2,
            static_gain: 1.0,
            reflection_gain: 0.075,
            relevance_threshold: 3.0,
        }
    }
}

impl EnvironmentConfig {
    /// Square layout: APs and receivers alternate around the perimeter of a
    /// `side` x `side` square, starting at the origin corner.
    pub fn square_layout(num_aps: usize, num_rxs: usize, side: f64) -> (Vec<Point>, Vec<Point>) {
        let n = num_aps + num_rxs;
        let perimeter = 4.0 * side;
        let at = |k: usize| {
            let s = perimeter * k as f64 / n as f64;
            let edge = (s / side).floor() as usize;
            let u = s - edge as f64 * side;
            match edge {
                0 => Point::new(u, 0.0),
                1 => Point::new(side, u),
                2 => Point::new(side - u, side),
                _ => Point::new(0.0, side - u),
            }
        };
        let mut aps = Vec::with_capacity(num_aps);
        let mut rxs = Vec::with_capacity(num_rxs);
        // alternate while both kinds remain, then fill with the rest
        let mut k = 0;
        while aps.len() < num_aps || rxs.len() < num_rxs {
            let want_ap = (k % 2 == 0 && aps.len() < num_aps) || rxs.len() == num_rxs;
            if want_ap {
                aps.push(at(k));
            } else {
                rxs.push(at(k));
            }
            k += 1;
        }
        (aps, rxs)
    }

    pub fn num_samples(&self) -> usize {
        (self.sample_rate * self.sample_duration).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &'static str, reason: &str| {
            Err(SimError::Config {
                field,
                reason: reason.to_string(),
            })
        };
        if self.num_aps < 1 {
            return bad("num_aps", "must be >= 1");
        }
        if self.num_rxs < 1 {
            return bad("num_rxs", "must be >= 1");
        }
        if self.tx_antennas < 1 {
            return bad("tx_antennas", "must be >= 1");
        }
        if self.rx_antennas < 1 {
            return bad("rx_antennas", "must be >= 1");
        }
        if self.num_subcarriers < 1 {
            return bad("num_subcarriers", "must be >= 1");
        }
        if self.ap_positions.len() != self.num_aps {
            return bad("ap_positions", "length must equal num_aps");
        }
        if self.rx_positions.len() != self.num_rxs {
            return bad("rx_positions", "length must equal num_rxs");
        }
        if !self.ap_positions.iter().all(Point::is_finite) {
            return bad("ap_positions", "positions must be finite");
        }
        if !self.rx_positions.iter().all(Point::is_finite) {
            return bad("rx_positions", "positions must be finite");
        }
        if !(self.carrier_freq.is_finite() && self.carrier_freq > 0.0) {
            return bad("carrier_freq", "must be finite and > 0");
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return bad("bandwidth", "must be finite and > 0");
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad("sample_rate", "must be finite and > 0");
        }
        if !(self.sample_duration.is_finite() && self.sample_duration > 0.0) {
            return bad("sample_duration", "must be finite and > 0");
        }
        let t = self.sample_rate * self.sample_duration;
        if (t - t.round()).abs() > 1e-9 * t.max(1.0) {
            return bad(
                "sample_duration",
                "sample_rate * sample_duration must be an integer",
            );
        }
        if t.round() < 2.0 {
            return bad(
                "sample_duration",
                "sample_rate * sample_duration must be >= 2",
            );
        }
        if !(self.noise_floor.is_finite() && self.noise_floor > 0.0) {
            return bad("noise_floor", "must be finite and > 0");
        }
        if !(self.interference_level.is_finite() && self.interference_level >= 0.0) {
            return bad("interference_level", "must be finite and >= 0");
        }
        if !(self.static_gain.is_finite() && self.static_gain >= 0.0) {
            return bad("static_gain", "must be finite and >= 0");
        }
        if !(self.reflection_gain.is_finite() && self.reflection_gain >= 0.0) {
            return bad("reflection_gain", "must be finite and >= 0");
        }
        if !(self.relevance_threshold.is_finite() && self.relevance_threshold > 0.0) {
            return bad("relevance_threshold", "must be finite and > 0");
        }
        Ok(())
    }
}

/// One (AP, receiver) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub ap: usize,
    pub rx: usize,
    pub ap_pos: Point,
    pub rx_pos: Point,
}

impl Link {
    pub fn los_length(&self) -> f64 {
        self.ap_pos.distance(&self.rx_pos)
    }

    /// Unit direction of the line of sight, AP towards receiver.
    pub fn direction(&self) -> (f64, f64) {
        let d = self.los_length().max(1e-12);
        (
            (self.rx_pos.x - self.ap_pos.x) / d,
            (self.rx_pos.y - self.ap_pos.y) / d,
        )
    }

    /// Shortest distance from `p` to the line-of-sight segment.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let (ax, ay) = (self.ap_pos.x, self.ap_pos.y);
        let (bx, by) = (self.rx_pos.x - ax, self.rx_pos.y - ay);
        let len2 = bx * bx + by * by;
        if len2 == 0.0 {
            return p.distance(&self.ap_pos);
        }
        let u = (((p.x - ax) * bx + (p.y - ay) * by) / len2).clamp(0.0, 1.0);
        p.distance(&Point::new(ax + u * bx, ay + u * by))
    }
}

/// Validated, immutable deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub config: EnvironmentConfig,
    pub links: Vec<Link>,
    pub locations: Vec<Point>,
    pub num_samples: usize,
    pub wavelength: f64,
    pub subcarrier_freqs: Vec<f64>,
}

pub fn build_environment(config: EnvironmentConfig) -> Result<Environment, SimError> {
    config.validate()?;
    let mut links = Vec::with_capacity(config.num_aps * config.num_rxs);
    for (m, ap) in config.ap_positions.iter().enumerate() {
        for (q, rx) in config.rx_positions.iter().enumerate() {
            links.push(Link {
                ap: m,
                rx: q,
                ap_pos: *ap,
                rx_pos: *rx,
            });
        }
    }

    // 4x4 grid of cell centres inside the bounding box of the transceivers
    let all = config.ap_positions.iter().chain(&config.rx_positions);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in all {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let mut locations = Vec::with_capacity(NUM_LOCATIONS);
    for iy in 0..4 {
        for ix in 0..4 {
            locations.push(Point::new(
                x0 + (ix as f64 + 0.5) * (x1 - x0) / 4.0,
                y0 + (iy as f64 + 0.5) * (y1 - y0) / 4.0,
            ));
        }
    }

    let s = config.num_subcarriers;
    let spacing = config.bandwidth / s as f64;
    let subcarrier_freqs = (0..s)
        .map(|k| config.carrier_freq + (k as f64 - (s as f64 - 1.0) / 2.0) * spacing)
        .collect();

    Ok(Environment {
        num_samples: config.num_samples(),
        wavelength: SPEED_OF_LIGHT / config.carrier_freq,
        subcarrier_freqs,
        links,
        locations,
        config,
    })
}

impl Environment {
    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// Antenna pairs per link (N_Tx x N_Rx).
    pub fn num_antenna_pairs(&self) -> usize {
        self.config.tx_antennas * self.config.rx_antennas
    }

    pub fn num_subcarriers(&self) -> usize {
        self.config.num_subcarriers
    }

    /// `[L, A, S, T]`.
    pub fn csi_shape(&self) -> [usize; 4] {
        [
            self.num_links(),
            self.num_antenna_pairs(),
            self.num_subcarriers(),
            self.num_samples,
        ]
    }

    pub fn location(&self, index: usize) -> Result<Point, SimError> {
        if (1..=NUM_LOCATIONS).contains(&index) {
            Ok(self.locations[index - 1])
        } else {
            Err(SimError::Location(index))
        }
    }

    fn centroid(&self) -> Point {
        let n = self.locations.len() as f64;
        let (sx, sy) = self
            .locations
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + p.x, a.1 + p.y));
        Point::new(sx / n, sy / n)
    }

    /// Unit axis of a node's linear antenna array: perpendicular to the
    /// direction towards the room centre, so the array faces the room.
    pub(crate) fn array_axis(&self, node: &Point) -> (f64, f64) {
        let c = self.centroid();
        let (dx, dy) = (c.x - node.x, c.y - node.y);
        let d = dx.hypot(dy);
        if d < 1e-12 {
            (1.0, 0.0)
        } else {
            (-dy / d, dx / d)
        }
    }

    /// The pair of links whose line-of-sight segments are closest to
    /// perpendicular, ties broken by the summed distance of both segments to
    /// `location`, then by the lowest indices. Single-link deployments return
    /// that link twice.
    pub fn orthogonal_pair(&self, location: usize) -> Result<(usize, usize), SimError> {
        let p = self.location(location)?;
        let n = self.num_links();
        if n == 1 {
            return Ok((0, 0));
        }
        let mut best: Option<(f64, f64, usize, usize)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let (ax, ay) = self.links[i].direction();
                let (bx, by) = self.links[j].direction();
                let cos = (ax * bx + ay * by).abs();
                let dist = self.links[i].distance_to(&p) + self.links[j].distance_to(&p);
                let better = match best {
                    None => true,
                    Some((bc, bd, _, _)) => {
                        cos < bc - 1e-9 || ((cos - bc).abs() <= 1e-9 && dist < bd - 1e-9)
                    }
                };
                if better {
                    best = Some((cos, dist, i, j));
                }
            }
        }
        let (_, _, i, j) = best.expect("at least one pair");
        Ok((i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_has_four_links_in_row_major_order() {
        let env = build_environment(EnvironmentConfig::default()).unwrap();
        assert_eq!(env.num_links(), 4);
        let pairs: Vec<_> = env.links.iter().map(|l| (l.ap, l.rx)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(env.csi_shape(), [4, 3, 30, 800]);
        assert_eq!(env.locations.len(), 16);
    }

    #[test]
    fn link_count_is_product_of_aps_and_rxs() {
        for (m, q) in [(1, 1), (3, 3), (2, 3)] {
            let (aps, rxs) = EnvironmentConfig::square_layout(m, q, 6.0);
            let cfg = EnvironmentConfig {
                num_aps: m,
                num_rxs: q,
                ap_positions: aps,
                rx_positions: rxs,
                ..Default::default()
            };
            let env = build_environment(cfg).unwrap();
            assert_eq!(env.num_links(), m * q);
        }
    }

    #[test]
    fn square_layout_reproduces_default_corners() {
        let (aps, rxs) = EnvironmentConfig::square_layout(2, 2, 6.0);
        let d = EnvironmentConfig::default();
        assert_eq!(aps, d.ap_positions);
        assert_eq!(rxs, d.rx_positions);
    }

    #[test]
    fn wavelength_matches_carrier() {
        let env = build_environment(EnvironmentConfig::default()).unwrap();
        let expected = 299_792_458.0 / 5.28e9;
        assert!((env.wavelength - expected).abs() < 1e-9);
        assert!((env.wavelength - 0.0568).abs() < 1e-4);
    }

    #[test]
    fn invalid_config_names_field() {
        let cases: Vec<(EnvironmentConfig, &str)> = vec![
            (
                EnvironmentConfig {
                    num_aps: 0,
                    ..Default::default()
                },
                "num_aps",
            ),
            (
                EnvironmentConfig {
                    num_subcarriers: 0,
                    ..Default::default()
                },
                "num_subcarriers",
            ),
            (
                EnvironmentConfig {
                    relevance_threshold: 0.0,
                    ..Default::default()
                },
                "relevance_threshold",
            ),
            (
                EnvironmentConfig {
                    sample_duration: 4.0025,
                    ..Default::default()
                },
                "sample_duration",
            ),
            (
                EnvironmentConfig {
                    sample_duration: 0.005,
                    ..Default::default()
                },
                "sample_duration",
            ),
            (
                EnvironmentConfig {
                    ap_positions: vec![Point::new(f64::NAN, 0.0), Point::new(1.0, 1.0)],
                    ..Default::default()
                },
                "ap_positions",
            ),
        ];
        for (cfg, field) in cases {
            match build_environment(cfg) {
                Err(SimError::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected config error for {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn orthogonal_pair_picks_adjacent_sides_near_location() {
        let env = build_environment(EnvironmentConfig::default()).unwrap();
        // location 1 sits in the corner at the first AP: bottom and left sides
        assert_eq!(env.orthogonal_pair(1).unwrap(), (0, 1));
        // location 16 sits in the corner at the second AP
        assert_eq!(env.orthogonal_pair(16).unwrap(), (2, 3));
        for l in 1..=16 {
            let (i, j) = env.orthogonal_pair(l).unwrap();
            let (ax, ay) = env.links[i].direction();
            let (bx, by) = env.links[j].direction();
            assert!((ax * bx + ay * by).abs() < 1e-9);
        }
    }
}
