use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// The five activity classes, in label-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Activity {
    Walk = 0,
    Run = 1,
    Stand = 2,
    Sit = 3,
    Bend = 4,
}

impl Activity {
    pub const ALL: [Activity; 5] = [
        Activity::Walk,
        Activity::Run,
        Activity::Stand,
        Activity::Sit,
        Activity::Bend,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Activity> {
        Self::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Activity::Walk => "Walk",
            Activity::Run => "Run",
            Activity::Stand => "Stand",
            Activity::Sit => "Sit",
            Activity::Bend => "Bend",
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, Activity::Walk | Activity::Run)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationShape {
    /// Motion lasts the whole sample.
    Sustained,
    /// A single event of `motion_period` seconds somewhere in the sample.
    Transient,
}

/// Kinematic description of one activity.
///
/// `motion_amplitude` is a one-way body displacement in meters; the reflected
/// path length changes by twice that. `scatter_gain` scales the reflected
/// amplitude: larger body motions sweep a larger scattering area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub label: Activity,
    pub body_speed: f64,
    pub motion_period: f64,
    pub motion_amplitude: f64,
    pub duration_shape: DurationShape,
    pub scatter_gain: f64,
}

impl ActivityProfile {
    pub fn standard(label: Activity) -> Self {
        use DurationShape::*;
        let (body_speed, motion_period, motion_amplitude, duration_shape, scatter_gain) =
            match label {
                Activity::Walk => (1.0, 1.0, 0.02, Sustained, 1.6),
                Activity::Run => (2.0, 0.6, 0.02, Sustained, 1.6),
                Activity::Stand => (0.0, 2.0, 0.02, Sustained, 1.0),
                Activity::Sit => (0.0, 1.2, 0.45, Transient, 1.0),
                Activity::Bend => (0.0, 0.7, 0.30, Transient, 1.0),
            };
        ActivityProfile {
            label,
            body_speed,
            motion_period,
            motion_amplitude,
            duration_shape,
            scatter_gain,
        }
    }

    pub fn all_standard() -> [ActivityProfile; 5] {
        Activity::ALL.map(Self::standard)
    }

    /// Draws the two-way path-length modulation (meters) for one sample.
    ///
    /// Walk/Run: constant-speed drift with a gait oscillation. Stand: slow
    /// two-tone sway. Sit: one raised-cosine step down. Bend: one raised-cosine
    /// bump (down and back up).
    pub fn draw_track<R: Rng>(&self, rng: &mut R, sample_rate: f64, len: usize) -> MotionTrack {
        let duration = len as f64 / sample_rate;
        let time = |t: usize| t as f64 / sample_rate;
        let amp = self.motion_amplitude;
        let period = self.motion_period.max(1e-9);
        let modulation = match (self.label, self.duration_shape) {
            (_, DurationShape::Sustained) if self.body_speed > 0.0 => {
                let speed = self.body_speed * rng.gen_range(0.92..1.08);
                let dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let gait = period * rng.gen_range(0.9..1.1);
                let phase = rng.gen_range(0.0..2.0 * PI);
                (0..len)
                    .map(|t| {
                        let s = time(t);
                        dir * 2.0 * speed * s + 2.0 * amp * (2.0 * PI * s / gait + phase).sin()
                    })
                    .collect()
            }
            (_, DurationShape::Sustained) => {
                let f1 = rng.gen_range(0.6..1.4) / period;
                let f2 = rng.gen_range(1.5..3.0) / period;
                let (p1, p2) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
                (0..len)
                    .map(|t| {
                        let s = time(t);
                        2.0 * amp
                            * (0.6 * (2.0 * PI * f1 * s + p1).sin()
                                + 0.4 * (2.0 * PI * f2 * s + p2).sin())
                    })
                    .collect()
            }
            (label, DurationShape::Transient) => {
                let event = period * rng.gen_range(0.9..1.1);
                let latest = (duration - event - 0.3).max(0.3);
                let onset = if latest > 0.3 {
                    rng.gen_range(0.3..latest)
                } else {
                    0.0
                };
                let bump = label == Activity::Bend;
                let sway_phase = rng.gen_range(0.0..2.0 * PI);
                (0..len)
                    .map(|t| {
                        let s = time(t);
                        let u = ((s - onset) / event).clamp(0.0, 1.0);
                        let shape = if bump {
                            0.5 * (1.0 - (2.0 * PI * u).cos())
                        } else {
                            0.5 * (1.0 - (PI * u).cos())
                        };
                        let sway = 0.02 * amp * (2.0 * PI * 0.4 * s + sway_phase).sin();
                        2.0 * amp * shape + sway
                    })
                    .collect()
            }
        };
        MotionTrack { modulation }
    }
}

/// Two-way path-length modulation of the human reflection, one value per CSI
/// time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTrack {
    pub modulation: Vec<f64>,
}
