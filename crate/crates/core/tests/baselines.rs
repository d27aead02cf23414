use irsopt::baselines::*;
use irsopt::channel::{rayleigh_channels, synthesize_channels, ChannelParams, GeometryConfig};
use irsopt::manifolds::ObliquePoint;
use irsopt::rates::{effective_channel, sinr};
use irsopt::sumrate::{run_domalo, DomaloOptions};
use irsopt::{CMat, Error, SystemConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_heff(seed: u64, k: usize, n: usize) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMat::from_fn(k, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn normalized_columns(m: &CMat) -> CMat {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        c /= Complex64::from(n);
    }
    out
}

#[test]
fn effective_channel_matrix_stacks_user_rows() {
    let ch = rayleigh_channels(4, &[3, 3], 3, false, 2).unwrap();
    let u = random_reflection(6, 11);
    let h = effective_channel_matrix(&u, &ch).unwrap();
    assert_eq!(h.shape(), (3, 4));
    for k in 0..3 {
        let row = effective_channel(k, &u, &ch).unwrap();
        for i in 0..4 {
            assert_eq!(h[(k, i)], row[i]);
        }
    }
}

#[test]
fn closed_forms_use_full_power() {
    for seed in 0..10 {
        let h = random_heff(seed, 3, 5);
        let p = 0.5 + seed as f64;
        for v in [
            mrt_from_channel(&h, p).unwrap(),
            zf_from_channel(&h, p).unwrap(),
            mmse_from_channel(&h, p, 0.2).unwrap(),
        ] {
            assert!((v.power() - p).abs() < 1e-9 * p.max(1.0));
        }
    }
}

#[test]
fn mrt_single_user_snr() {
    let ch = rayleigh_channels(4, &[2, 2], 1, false, 3).unwrap();
    let sys = SystemConfig::uniform(4, 2, 2, 1, 2.5, 0.4);
    let u = ObliquePoint::ones(4);
    let v = mrt_beamformer(&u, &ch, &sys).unwrap();
    let h = effective_channel(0, &u, &ch).unwrap();
    let want = 2.5 * h.norm_squared() / 0.4;
    let got = sinr(0, &v, &u, &ch, &sys).unwrap();
    assert!((got - want).abs() < 1e-10 * want);
    // Beamformer is the conjugate of the row h^H up to a positive scale.
    let dir = v.0.column(0).into_owned() / Complex64::from(v.0.norm());
    let want_dir = h.map(|z| z.conj()) / Complex64::from(h.norm());
    assert!((dir - want_dir).norm() < 1e-12);
}

#[test]
fn mrt_is_scale_invariant() {
    let h = random_heff(4, 3, 4);
    let a = mrt_from_channel(&h, 1.0).unwrap();
    let b = mrt_from_channel(&(&h * Complex64::from(7.5)), 1.0).unwrap();
    assert!((a.0 - b.0).norm() < 1e-12);
    assert!(matches!(mrt_from_channel(&CMat::zeros(2, 3), 1.0), Err(Error::DegenerateChannel(_))));
}

#[test]
fn zero_forcing_nulls_interference() {
    for seed in 0..10 {
        let h = random_heff(seed + 20, 4, 6);
        let v = zf_from_channel(&h, 1.0).unwrap();
        let z = &h * &v.0;
        for k in 0..4 {
            for j in 0..4 {
                if j != k {
                    assert!(z[(k, j)].norm() <= 1e-8 * z[(k, k)].norm());
                }
            }
        }
    }
}

#[test]
fn zero_forcing_on_orthogonal_rows_matches_matched_filter() {
    // Rows scaled from an orthonormal set: HH^H is diagonal, so ZF reduces
    // to conjugate rows divided by their squared norms.
    let q = random_heff(31, 4, 4).qr().q();
    let scales = [1.0, 2.0, 0.5, 3.0];
    let h = CMat::from_fn(3, 4, |k, i| q[(i, k)].conj() * scales[k]);
    let v = zf_from_channel(&h, 1.0).unwrap();
    let mut want = h.adjoint();
    for k in 0..3 {
        let s = scales[k] * scales[k];
        want.column_mut(k).apply(|z| *z /= s);
    }
    let want = &want * Complex64::from(1.0 / want.norm());
    assert!((v.0 - want).norm() < 1e-12);
}

#[test]
fn zero_forcing_rejects_rank_deficient_channels() {
    let row = random_heff(5, 1, 4);
    let h = CMat::from_fn(2, 4, |_, i| row[(0, i)]);
    assert!(matches!(zf_from_channel(&h, 1.0), Err(Error::Singular(_))));
}

#[test]
fn zero_forcing_rank_limit_at_default_dimensions() {
    let geo = GeometryConfig::default();
    let p = ChannelParams::default();
    let u = ObliquePoint::ones(40);
    for seed in 0..5 {
        let sys8 = SystemConfig::uniform(20, 20, 2, 8, 1.0, 1e-11);
        let ch8 = synthesize_channels(&sys8, &geo, &p, seed).unwrap();
        assert!(zf_beamformer(&u, &ch8, &sys8).is_ok());
        let sys9 = sys8.with_users(9);
        let ch9 = synthesize_channels(&sys9, &geo, &p, seed).unwrap();
        assert!(matches!(zf_beamformer(&u, &ch9, &sys9), Err(Error::Singular(_))));
        let opts = BaselineOptions { max_outer: 2, ..Default::default() };
        assert!(matches!(
            run_baseline(BaselineKind::ZfAlt, &ch9, &sys9, &opts, seed),
            Err(Error::Singular(_))
        ));
    }
}

#[test]
fn mmse_limits() {
    let h = random_heff(6, 3, 5);
    let zf = zf_from_channel(&h, 1.0).unwrap();
    let low = mmse_from_channel(&h, 1.0, 1e-12).unwrap();
    assert!((normalized_columns(&low.0) - normalized_columns(&zf.0)).norm() < 1e-8);
    let mrt = mrt_from_channel(&h, 1.0).unwrap();
    let high = mmse_from_channel(&h, 1.0, 1e12).unwrap();
    assert!((normalized_columns(&high.0) - normalized_columns(&mrt.0)).norm() < 1e-8);
}

#[test]
fn random_phi_is_deterministic() {
    let sys = SystemConfig::uniform(10, 10, 2, 3, 1.0, 1e-11);
    let ch = synthesize_channels(&sys, &GeometryConfig::default(), &ChannelParams::default(), 1).unwrap();
    let opts = BaselineOptions { max_outer: 4, ..Default::default() };
    let a = run_baseline(BaselineKind::RandomPhi, &ch, &sys, &opts, 9).unwrap();
    let b = run_baseline(BaselineKind::RandomPhi, &ch, &sys, &opts, 9).unwrap();
    assert_eq!(a.beamformer, b.beamformer);
    assert_eq!(a.reflection, b.reflection);
    assert_eq!(a.report.objective_trace, b.report.objective_trace);
    assert_eq!(a.reflection, random_reflection(20, 9));
    let c = run_baseline(BaselineKind::RandomPhi, &ch, &sys, &opts, 10).unwrap();
    assert_ne!(a.reflection, c.reflection);
}

#[test]
fn random_reflection_is_unit_modulus() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..5 {
        let u = random_reflection(12, rng.random());
        assert!(u.entries().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }
}

#[test]
fn mrt_alternation_is_near_optimal_for_one_user() {
    let geo = GeometryConfig::default();
    let p = ChannelParams::default();
    let sys = SystemConfig::uniform(10, 10, 2, 1, 1.0, 1e-11);
    let (mut mrt, mut dom) = (0.0, 0.0);
    for seed in 0..20 {
        let ch = synthesize_channels(&sys, &geo, &p, seed).unwrap();
        dom += run_domalo(&ch, &sys, &DomaloOptions::default(), None).unwrap().report.final_objective;
        let o = BaselineOptions::default();
        mrt += run_baseline(BaselineKind::MrtAlt, &ch, &sys, &o, seed).unwrap().report.final_objective;
    }
    assert!(mrt >= 0.95 * dom, "mrt {} domalo {}", mrt / 20.0, dom / 20.0);
}

#[test]
fn baseline_names_are_distinct() {
    let names: Vec<_> = BaselineKind::ALL.iter().map(|k| k.name()).collect();
    assert_eq!(names, ["random_phi", "mrt_alt", "zf_alt", "mmse_alt"]);
}
