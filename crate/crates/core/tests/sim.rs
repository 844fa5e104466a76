use num_complex::Complex64;
use proptest::prelude::*;
use sha2::{Digest, Sha256};
use wilink::harness::write_csd;
use wilink::sim::*;

fn default_env() -> Environment {
    build_environment(EnvironmentConfig::default()).unwrap()
}

#[test]
fn location_nine_mask_matches_distance_products() {
    let env = default_env();
    let cfg = &env.config;
    for profile in ActivityProfile::all_standard() {
        let body = env.locations[8];
        let mut expect: Vec<bool> = env
            .links
            .iter()
            .map(|l| {
                let d1 = ((l.ap_pos.x - body.x).powi(2) + (l.ap_pos.y - body.y).powi(2))
                    .sqrt()
                    .max(0.1);
                let d2 = ((l.rx_pos.x - body.x).powi(2) + (l.rx_pos.y - body.y).powi(2))
                    .sqrt()
                    .max(0.1);
                cfg.reflection_gain * profile.scatter_gain / (d1 * d2) / cfg.noise_floor
                    >= cfg.relevance_threshold
            })
            .collect();
        if !expect.contains(&true) {
            let ratios = relevance_ratios(&env, 9, &profile).unwrap();
            let best = (0..ratios.len()).fold(0, |b, i| if ratios[i] > ratios[b] { i } else { b });
            expect[best] = true;
        }
        assert_eq!(
            informative_links(&env, 9, &profile).unwrap(),
            expect,
            "{:?}",
            profile.label
        );
    }
}

#[test]
fn body_near_a_link_midpoint_favours_that_link() {
    let env = default_env();
    for (li, link) in env.links.iter().enumerate() {
        let mid = Point::new(
            (link.ap_pos.x + link.rx_pos.x) / 2.0,
            (link.ap_pos.y + link.rx_pos.y) / 2.0,
        );
        let loc = (1..=16)
            .min_by(|&a, &b| {
                env.location(a)
                    .unwrap()
                    .distance(&mid)
                    .total_cmp(&env.location(b).unwrap().distance(&mid))
            })
            .unwrap();
        for profile in ActivityProfile::all_standard() {
            let r = relevance_ratios(&env, loc, &profile).unwrap();
            let best = (0..r.len()).fold(0, |b, i| if r[i] > r[b] { i } else { b });
            assert_eq!(best, li, "location {loc}: ratios {r:?}");
            assert!(informative_links(&env, loc, &profile).unwrap()[li]);
        }
    }
}

proptest! {
    #[test]
    fn moving_closer_never_weakens_the_reflection(x in 0.5f64..5.5, y in 0.5f64..5.5, step in 0.01f64..0.5) {
        let env = default_env();
        let link = env.links[0];
        let alpha = |p: Point| 1.0 / (link.ap_pos.distance(&p).max(0.1) * p.distance(&link.rx_pos).max(0.1));
        let p = Point::new(x, y);
        // step towards both endpoints: along the sum of unit vectors when
        // it shortens both distances
        let to_ap = ((link.ap_pos.x - x), (link.ap_pos.y - y));
        let to_rx = ((link.rx_pos.x - x), (link.rx_pos.y - y));
        let n1 = to_ap.0.hypot(to_ap.1);
        let n2 = to_rx.0.hypot(to_rx.1);
        let dir = (to_ap.0 / n1 + to_rx.0 / n2, to_ap.1 / n1 + to_rx.1 / n2);
        let q = Point::new(x + step * dir.0 * 0.1, y + step * dir.1 * 0.1);
        if q.distance(&link.ap_pos) < p.distance(&link.ap_pos) && q.distance(&link.rx_pos) < p.distance(&link.rx_pos) {
            prop_assert!(alpha(q) >= alpha(p));
        }
    }
}

fn dominant_frequency(series: &[Complex64], rate: f64) -> f64 {
    let n = series.len();
    let mean = series.iter().sum::<Complex64>() / n as f64;
    let mut best = (0.0, 0.0);
    for k in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, v) in series.iter().enumerate() {
            acc += (v - mean)
                * Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64,
                );
        }
        let f = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        } * rate
            / n as f64;
        if acc.norm() > best.0 {
            best = (acc.norm(), f.abs());
        }
    }
    best.1
}

#[test]
fn moving_body_doppler_matches_speed() {
    let env = default_env();
    for activity in [Activity::Walk, Activity::Run] {
        let profile = ActivityProfile::standard(activity);
        let expect = 2.0 * profile.body_speed / env.wavelength;
        for seed in 0..3 {
            let s = generate_sample(&env, &profile, 6, seed).unwrap();
            let link = s.informative_mask.iter().position(|&m| m).unwrap();
            let series: Vec<Complex64> = (0..s.len())
                .map(|t| {
                    let v = s.at(link, 0, 15, t);
                    Complex64::new(v.re as f64, v.im as f64)
                })
                .collect();
            let f = dominant_frequency(&series, env.config.sample_rate);
            assert!(
                (f - expect).abs() <= 0.25 * expect,
                "{activity:?} seed {seed}: {f:.2} Hz vs {expect:.2} Hz"
            );
        }
    }
}

#[test]
fn uninformative_links_stay_near_the_noise_level() {
    let env = default_env();
    let nf2 = env.config.noise_floor.powi(2);
    let noise_var = nf2 * (1.0 + env.config.interference_level.powi(2));
    let mut checked = 0;
    for profile in ActivityProfile::all_standard() {
        for loc in [1, 6, 11, 16] {
            let s = generate_sample(&env, &profile, loc, 42).unwrap();
            for link in (0..s.num_links()).filter(|&l| !s.informative_mask[l]) {
                for sub in [0, 29] {
                    let amp: Vec<f64> = (0..s.len())
                        .map(|t| s.at(link, 1, sub, t).norm() as f64)
                        .collect();
                    let m = amp.iter().sum::<f64>() / amp.len() as f64;
                    let var = amp.iter().map(|a| (a - m).powi(2)).sum::<f64>() / amp.len() as f64;
                    assert!(
                        var <= 10.0 * noise_var,
                        "{:?} loc {loc} link {link}: {var:.3e}",
                        profile.label
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn splits_are_balanced_and_seed_disjoint() {
    let env = default_env();
    let ds = generate_dataset(&env, &DatasetSpec::default()).unwrap();
    let mut per_loc = [0usize; 16];
    for m in &ds.test {
        per_loc[m.location - 1] += 1;
    }
    assert!(per_loc.iter().all(|&c| c == 50));
    let train: std::collections::HashSet<u64> = ds.train.iter().map(|m| m.seed).collect();
    assert!(ds.test.iter().all(|m| !train.contains(&m.seed)));
    for m in ds.train.iter().take(40) {
        let expect =
            informative_links(&env, m.location, &ActivityProfile::standard(m.activity)).unwrap();
        assert_eq!(m.mask, expect);
    }
}

fn csd_digest(env: &Environment, ds: &Dataset, parallel: bool) -> String {
    let hasher = write_csd(env, ds, Sha256::new(), parallel).unwrap();
    hex::encode(hasher.finalize())
}

#[test]
fn serial_and_parallel_generation_write_identical_bytes() {
    let env = default_env();
    let ds = generate_dataset(
        &env,
        &DatasetSpec {
            train: 37,
            test: 80,
            seed: 5,
        },
    )
    .unwrap();
    let a = csd_digest(&env, &ds, false);
    assert_eq!(a, csd_digest(&env, &ds, true));
    let again = generate_dataset(
        &env,
        &DatasetSpec {
            train: 37,
            test: 80,
            seed: 5,
        },
    )
    .unwrap();
    assert_eq!(a, csd_digest(&env, &again, true));
    let other = generate_dataset(
        &env,
        &DatasetSpec {
            train: 37,
            test: 80,
            seed: 6,
        },
    )
    .unwrap();
    assert_ne!(a, csd_digest(&env, &other, true));
}

#[test]
fn csd_file_roundtrips_through_reader() {
    let env = default_env();
    let ds = generate_dataset(
        &env,
        &DatasetSpec {
            train: 3,
            test: 80,
            seed: 1,
        },
    )
    .unwrap();
    let bytes = write_csd(&env, &ds, Vec::new(), false).unwrap();
    let mut reader = CsdReader::new(bytes.as_slice()).unwrap();
    assert_eq!(reader.header().shape(), env.csi_shape());
    assert_eq!(reader.header().sample_count, 83);
    assert_eq!(bytes.len() as u64, reader.header().file_len());
    for meta in ds.train.iter().chain(&ds.test) {
        let s = reader.next_sample().unwrap().unwrap();
        assert_eq!(s, ds.materialize(&env, meta).unwrap());
    }
    assert!(reader.next_sample().unwrap().is_none());
}
