use irsopt::channel::{rayleigh_channels, synthesize_channels, ChannelParams, ChannelSet, GeometryConfig};
use irsopt::manifolds::ObliquePoint;
use irsopt::maxmin::*;
use irsopt::rates::{sinr, weighted_min_rate};
use irsopt::{BeamformerMatrix, CMat, Error, OuterTermination, SystemConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn instance(seed: u64, k: usize) -> (ChannelSet, SystemConfig, BeamformerMatrix, ObliquePoint) {
    let ch = rayleigh_channels(4, &[2, 2], k, false, seed).unwrap();
    let mut sys = SystemConfig::uniform(4, 2, 2, k, 1.0, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 77);
    sys.weights = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
    sys.noise_power = (0..k).map(|_| 0.1 + rng.random::<f64>()).collect();
    let v = BeamformerMatrix(CMat::from_fn(4, k, |_, _| gauss(&mut rng)));
    let p: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    (ch, sys, v, ObliquePoint::from_phases(&p))
}

/// Per-user received powers by explicit summation over `h_k^H v_j`.
fn powers(ch: &ChannelSet, v: &BeamformerMatrix, u: &ObliquePoint, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            // `effective_channel` holds the entries of the row vector `h_k^H`.
            let h = irsopt::rates::effective_channel(i, u, ch).unwrap();
            (0..k)
                .map(|j| {
                    let s: Complex64 = h.iter().zip(v.0.column(j).iter()).map(|(a, b)| a * b).sum();
                    s.norm_sqr()
                })
                .collect()
        })
        .collect()
}

fn brute_g3(p: &[Vec<f64>], sys: &SystemConfig, tau: f64) -> f64 {
    (0..p.len())
        .map(|k| {
            let interf: f64 = (0..p.len()).filter(|&j| j != k).map(|j| p[k][j]).sum();
            sys.weights[k] * p[k][k] - tau * (interf + sys.noise_power[k])
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn g3_matches_brute_force_minimum() {
    for seed in 0..5 {
        let (ch, sys, v, u) = instance(seed, 3);
        let p = powers(&ch, &v, &u, 3);
        for tau in [0.0, 0.3, 2.0] {
            let got = g3(&v, &u, tau, &ch, &sys).unwrap();
            let want = brute_g3(&p, &sys, tau);
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}

#[test]
fn g3_special_cases() {
    let (ch, sys, v, u) = instance(1, 3);
    assert!(g3(&v, &u, 0.0, &ch, &sys).unwrap() >= 0.0);
    let eq = SystemConfig::uniform(4, 2, 2, 3, 1.0, 0.3);
    let zero = BeamformerMatrix::zeros(4, 3);
    assert!((g3(&zero, &u, 0.7, &ch, &eq).unwrap() + 0.7 * 0.3).abs() < 1e-15);
    assert_eq!(update_tau(&zero, &u, &ch, &eq).unwrap(), 0.0);
}

#[test]
fn smooth_g3_is_exact_for_one_user() {
    let (ch, sys, v, u) = instance(2, 1);
    for mu in [1e-6, 0.1, 10.0] {
        let a = smooth_g3(&v, &u, 0.4, mu, &ch, &sys).unwrap();
        let b = g3(&v, &u, 0.4, &ch, &sys).unwrap();
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn smooth_g3_close_at_small_mu() {
    let (ch, sys, v, u) = instance(3, 4);
    let mu = 1e-3;
    let a = smooth_g3(&v, &u, 0.2, mu, &ch, &sys).unwrap();
    let b = g3(&v, &u, 0.2, &ch, &sys).unwrap();
    assert!((a - b).abs() <= mu * 4f64.ln());
}

#[test]
fn smoothing_parameter_must_be_positive() {
    let (ch, sys, v, u) = instance(3, 2);
    assert!(matches!(smooth_g3(&v, &u, 0.2, 0.0, &ch, &sys), Err(Error::InvalidParameter(_))));
    assert!(smooth_g3(&v, &u, 0.2, -1.0, &ch, &sys).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn smooth_g3_sandwich(seed in 0u64..10_000, tau in 0.0f64..3.0, log_mu in -8.0f64..2.0) {
        let (ch, sys, v, u) = instance(seed, 3);
        let mu = 10f64.powf(log_mu);
        let s = smooth_g3(&v, &u, tau, mu, &ch, &sys).unwrap();
        let h = g3(&v, &u, tau, &ch, &sys).unwrap();
        let slack = 1e-12 * h.abs().max(1.0);
        prop_assert!(s <= h + slack);
        prop_assert!(h <= s + mu * 3f64.ln() + slack);
    }
}

#[test]
fn tau_is_weighted_minimum_sinr() {
    for seed in 0..5 {
        let (ch, sys, v, u) = instance(seed, 3);
        let want = (0..3)
            .map(|k| sys.weights[k] * sinr(k, &v, &u, &ch, &sys).unwrap())
            .fold(f64::INFINITY, f64::min);
        let got = update_tau(&v, &u, &ch, &sys).unwrap();
        assert!((got - want).abs() < 1e-12 * want.max(1.0));
    }
    let (ch, sys, v, u) = instance(9, 1);
    let want = sys.weights[0] * sinr(0, &v, &u, &ch, &sys).unwrap();
    assert_eq!(update_tau(&v, &u, &ch, &sys).unwrap(), want);
}

fn scenario(seed: u64) -> (ChannelSet, SystemConfig) {
    let sys = SystemConfig::uniform(10, 10, 2, 4, 1.0, 1e-11);
    let ch = synthesize_channels(&sys, &GeometryConfig::default(), &ChannelParams::default(), seed).unwrap();
    (ch, sys)
}

#[test]
fn sdomalo_tau_is_monotone_and_matches_min_rate() {
    for seed in 0..3 {
        let (ch, sys) = scenario(seed);
        let opts = SdomaloOptions {
            max_outer: 10,
            record_iterates: true,
            ..Default::default()
        };
        let s = run_sdomalo(&ch, &sys, &opts, None).unwrap();
        let r = &s.report;
        for w in r.tau_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for t in 0..r.tau_trace.len() {
            assert!(r.tau_beam[t] <= r.tau_phase[t]);
            if t > 0 {
                assert!(r.tau_phase[t - 1] <= r.tau_beam[t]);
            }
        }
        for w in r.mu_v_trace.windows(2).chain(r.mu_u_trace.windows(2)) {
            assert!(w[1] <= w[0]);
        }
        let tau = *r.tau_trace.last().unwrap();
        assert!((r.final_objective - (1.0 + tau).log2()).abs() < 1e-8);
        let direct = weighted_min_rate(&s.beamformer, &s.reflection, &ch, &sys).unwrap();
        assert!((direct - r.final_objective).abs() < 1e-9);
        assert!(s.beamformer.power() <= sys.power_budget + 1e-9);
        for it in &r.iterates {
            let v = BeamformerMatrix(it.beamformer.clone());
            let u = ObliquePoint::new(it.reflection.clone()).unwrap();
            let h = g3(&v, &u, it.tau, &ch, &sys).unwrap();
            for mu in [it.mu_v, it.mu_u] {
                let sm = smooth_g3(&v, &u, it.tau, mu, &ch, &sys).unwrap();
                let slack = 1e-12 * h.abs().max(sys.noise_power[0]);
                assert!(sm <= h + slack && h <= sm + mu * 4f64.ln() + slack);
            }
        }
    }
}

#[test]
fn smoothing_floor_returns_initial_point() {
    let (ch, sys) = scenario(4);
    let init = irsopt::InitialPoint::standard(&ch, irsopt::LinkModel::Direct).unwrap();
    let opts = SdomaloOptions {
        mu_v_init: Some(1e-3),
        mu_u_init: Some(1e-3),
        mu_floor: Some(1e-3),
        ..Default::default()
    };
    let s = run_sdomalo(&ch, &sys, &opts, Some(init.clone())).unwrap();
    assert_eq!(s.report.termination, OuterTermination::MuFloor);
    assert_eq!(s.lifted.as_ref(), Some(&init.vhat));
    assert_eq!(s.reflection, init.u);
}

#[test]
fn invalid_shrink_is_rejected() {
    let (ch, sys) = scenario(0);
    for shrink in [0.0, 1.0, 1.5] {
        let opts = SdomaloOptions { shrink, ..Default::default() };
        assert!(matches!(run_sdomalo(&ch, &sys, &opts, None), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn sdomalo_inter_irs_without_cascade_matches_direct_link() {
    let (ch, sys) = scenario(5);
    let ch0 = ch.with_zero_inter_irs().unwrap();
    let opts = SdomaloOptions { max_outer: 5, ..Default::default() };
    let a = run_sdomalo(&ch0, &sys, &opts, None).unwrap();
    let b = run_sdomalo_inter_irs(&ch0, &sys, &opts, None).unwrap();
    for (x, y) in a.report.objective_trace.iter().zip(&b.report.objective_trace) {
        assert!((x - y).abs() <= 1e-8);
    }
    let one = rayleigh_channels(3, &[4], 2, false, 0).unwrap();
    let sys1 = SystemConfig::uniform(3, 4, 1, 2, 1.0, 0.1);
    assert!(matches!(
        run_sdomalo_inter_irs(&one, &sys1, &opts, None),
        Err(Error::Unsupported(_))
    ));
}
