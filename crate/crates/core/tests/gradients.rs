use irsopt::channel::{rayleigh_channels, ChannelSet};
use irsopt::manifolds::{
    project_oblique, project_sphere, real_inner, retract_oblique, retract_sphere, ObliquePoint, SpherePoint,
};
use irsopt::maxmin::{maxmin_egrad_u_with, maxmin_egrad_v_with, smooth_g3_with};
use irsopt::sumrate::{sumrate_cost_u_with, sumrate_cost_v_with, sumrate_egrad_u_with, sumrate_egrad_v_with};
use irsopt::{physical_beamformer, BeamformerMatrix, CMat, CVec, LinkModel, SystemConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const N: usize = 4;
const M: usize = 4;
const K: usize = 2;
const STEP: f64 = 1e-6;
const RTOL: f64 = 1e-5;

fn gauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn setup(seed: u64, m: usize, n: usize, inter: bool) -> (ChannelSet, SystemConfig, ChaCha8Rng) {
    let ch = rayleigh_channels(n, &[m, m], K, inter, seed).unwrap();
    let mut sys = SystemConfig::uniform(n, m, 2, K, 2.0, 0.5);
    sys.weights = vec![1.0, 1.7];
    sys.noise_power = vec![0.5, 0.8];
    (ch, sys, ChaCha8Rng::seed_from_u64(seed + 1000))
}

fn random_sphere(rng: &mut ChaCha8Rng, n: usize) -> SpherePoint {
    SpherePoint::from_unnormalized(CMat::from_fn(n + 1, K, |_, _| gauss(rng))).unwrap()
}

fn random_oblique(rng: &mut ChaCha8Rng, len: usize) -> ObliquePoint {
    let p: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    ObliquePoint::from_phases(&p)
}

fn check(fd: f64, analytic: f64, scale: f64, what: &str) {
    let err = (fd - analytic).abs();
    assert!(err <= RTOL * analytic.abs().max(scale), "{what}: fd {fd} vs analytic {analytic}");
}

/// Central differences of `f ∘ R` along 10 random unit tangent directions.
fn sphere_check(x: &SpherePoint, egrad: &CMat, f: impl Fn(&SpherePoint) -> f64, rng: &mut ChaCha8Rng, what: &str) {
    let rgrad = project_sphere(x, egrad).unwrap();
    for _ in 0..10 {
        let raw = CMat::from_fn(x.shape().0, x.shape().1, |_, _| gauss(rng));
        let mut xi = project_sphere(x, &raw).unwrap();
        xi /= Complex64::from(xi.norm());
        let fp = f(&retract_sphere(x, &(&xi * Complex64::from(STEP))).unwrap());
        let fm = f(&retract_sphere(x, &(&xi * Complex64::from(-STEP))).unwrap());
        check((fp - fm) / (2.0 * STEP), real_inner(&rgrad, &xi), rgrad.norm(), what);
    }
}

fn oblique_check(x: &ObliquePoint, egrad: &CVec, f: impl Fn(&ObliquePoint) -> f64, rng: &mut ChaCha8Rng, what: &str) {
    let rgrad = project_oblique(x, egrad).unwrap();
    for _ in 0..10 {
        let raw = CVec::from_fn(x.len(), |_, _| gauss(rng));
        let mut xi = project_oblique(x, &raw).unwrap();
        xi /= Complex64::from(xi.norm());
        let fp = f(&retract_oblique(x, &(&xi * Complex64::from(STEP))).unwrap());
        let fm = f(&retract_oblique(x, &(&xi * Complex64::from(-STEP))).unwrap());
        check((fp - fm) / (2.0 * STEP), rgrad.dotc(&xi).re, rgrad.norm(), what);
    }
}

fn sumrate_v(model: LinkModel, m: usize, n: usize, seed: u64) {
    let (ch, sys, mut rng) = setup(seed, m, n, model == LinkModel::InterIrs);
    let x = random_sphere(&mut rng, n);
    let u = random_oblique(&mut rng, 2 * m);
    let zeta = vec![0.7, 2.3];
    let g = sumrate_egrad_v_with(model, &x, &u, &zeta, &ch, &sys).unwrap();
    sphere_check(
        &x,
        &g,
        |p| sumrate_cost_v_with(model, p, &u, &zeta, &ch, &sys).unwrap(),
        &mut rng,
        "sum-rate V",
    );
}

fn sumrate_u(model: LinkModel, m: usize, n: usize, seed: u64) {
    let (ch, sys, mut rng) = setup(seed, m, n, model == LinkModel::InterIrs);
    let v = BeamformerMatrix(CMat::from_fn(n, K, |_, _| gauss(&mut rng)));
    let u = random_oblique(&mut rng, 2 * m);
    let zeta = vec![1.1, 0.4];
    let g = sumrate_egrad_u_with(model, &u, &v, &zeta, &ch, &sys).unwrap();
    oblique_check(
        &u,
        &g,
        |p| sumrate_cost_u_with(model, p, &v, &zeta, &ch, &sys).unwrap(),
        &mut rng,
        "sum-rate u",
    );
}

fn maxmin_v(model: LinkModel, m: usize, n: usize, seed: u64) {
    let (ch, sys, mut rng) = setup(seed, m, n, model == LinkModel::InterIrs);
    let x = random_sphere(&mut rng, n);
    let u = random_oblique(&mut rng, 2 * m);
    let (tau, mu) = (0.3, 0.2);
    let g = maxmin_egrad_v_with(model, &x, &u, tau, mu, &ch, &sys).unwrap();
    sphere_check(
        &x,
        &g,
        |p| {
            let v = BeamformerMatrix(physical_beamformer(p, sys.power_budget));
            smooth_g3_with(model, &v, &u, tau, mu, &ch, &sys).unwrap()
        },
        &mut rng,
        "max-min V",
    );
}

fn maxmin_u(model: LinkModel, m: usize, n: usize, seed: u64) {
    let (ch, sys, mut rng) = setup(seed, m, n, model == LinkModel::InterIrs);
    let v = BeamformerMatrix(CMat::from_fn(n, K, |_, _| gauss(&mut rng)));
    let u = random_oblique(&mut rng, 2 * m);
    let (tau, mu) = (0.25, 0.3);
    let g = maxmin_egrad_u_with(model, &u, &v, tau, mu, &ch, &sys).unwrap();
    oblique_check(
        &u,
        &g,
        |p| smooth_g3_with(model, &v, p, tau, mu, &ch, &sys).unwrap(),
        &mut rng,
        "max-min u",
    );
}

#[test]
fn sumrate_beamformer_gradient() {
    for seed in 0..3 {
        sumrate_v(LinkModel::Direct, M, N, seed);
    }
}

#[test]
fn sumrate_phase_gradient() {
    for seed in 0..3 {
        sumrate_u(LinkModel::Direct, M, N, seed);
    }
}

#[test]
fn maxmin_beamformer_gradient() {
    for seed in 0..3 {
        maxmin_v(LinkModel::Direct, M, N, seed);
    }
}

#[test]
fn maxmin_phase_gradient() {
    for seed in 0..3 {
        maxmin_u(LinkModel::Direct, M, N, seed);
    }
}

#[test]
fn inter_irs_gradients() {
    for (m, n) in [(2, 2), (M, N)] {
        for seed in 0..2 {
            sumrate_v(LinkModel::InterIrs, m, n, seed);
            sumrate_u(LinkModel::InterIrs, m, n, seed);
            maxmin_v(LinkModel::InterIrs, m, n, seed);
            maxmin_u(LinkModel::InterIrs, m, n, seed);
        }
    }
}

#[test]
fn single_user_gradients_match_hand_derivation() {
    // K = 1: f = ζ̃ a/(a + σ²) with a = |h̃^H v̂|², so ∇ = 2ζ̃σ²/(a+σ²)² (h̃^H v̂) h̃.
    let ch = rayleigh_channels(3, &[2, 2], 1, false, 5).unwrap();
    let sys = SystemConfig::uniform(3, 2, 2, 1, 1.5, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = SpherePoint::from_unnormalized(CMat::from_fn(4, 1, |_, _| gauss(&mut rng))).unwrap();
    let u = random_oblique(&mut rng, 4);
    let zeta = [0.9];
    let h = irsopt::rates::effective_channel(0, &u, &ch).unwrap();
    let mut ht = CVec::zeros(4);
    for i in 0..3 {
        ht[i] = h[i] * Complex64::from(1.5f64.sqrt());
    }
    // Row vector h̃^H has entries `ht`; the column vector h̃ holds their conjugates.
    let s: Complex64 = ht.iter().zip(x.entries().column(0).iter()).map(|(a, b)| a * b).sum();
    let a = s.norm_sqr();
    let zt = 1.9;
    let coef = 2.0 * zt * 0.4 / (a + 0.4).powi(2);
    let want = ht.map(|z| z.conj()) * (s * coef);
    let got = sumrate_egrad_v_with(LinkModel::Direct, &x, &u, &zeta, &ch, &sys).unwrap();
    assert!((got.column(0) - &want).norm() < 1e-12 * want.norm());

    // τ = 0, K = 1 max-min: ∇ of ω|h̃^H v̂|² is 2ω (h̃^H v̂) h̃.
    let mut sys_w = sys.clone();
    sys_w.weights = vec![1.3];
    let got = maxmin_egrad_v_with(LinkModel::Direct, &x, &u, 0.0, 0.1, &ch, &sys_w).unwrap();
    let want = ht.map(|z| z.conj()) * (s * 2.0 * 1.3);
    assert!((got.column(0) - &want).norm() < 1e-12 * want.norm());
}

#[test]
fn identical_users_give_uniform_softmin_average() {
    // Two users with identical channels and a symmetric beamformer share
    // the same surplus, so the weights are 1/2 each.
    let base = rayleigh_channels(2, &[2, 2], 1, false, 9).unwrap();
    let g = |_k: usize| (0..2).map(|s| base.irs_to_user(s, 0).clone()).collect::<Vec<_>>();
    let ch = ChannelSet::new(base.bs_to_irs().to_vec(), vec![g(0), g(1)], None).unwrap();
    let sys = SystemConfig::uniform(2, 2, 2, 2, 1.0, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let col = CVec::from_fn(2, |_, _| gauss(&mut rng));
    let v = BeamformerMatrix(CMat::from_columns(&[col.clone(), col]));
    let u = random_oblique(&mut rng, 4);
    let (tau, mu) = (0.2, 0.05);
    let got = maxmin_egrad_u_with(LinkModel::Direct, &u, &v, tau, mu, &ch, &sys).unwrap();
    // Per-user term gradients computed with a single user each and averaged.
    let one = |k: usize| {
        let ch1 = ChannelSet::new(base.bs_to_irs().to_vec(), vec![g(k)], None).unwrap();
        let sys1 = SystemConfig::uniform(2, 2, 2, 1, 1.0, 0.3);
        let vk = BeamformerMatrix(CMat::from_columns(&[v.0.column(k).into_owned()]));
        let interf = BeamformerMatrix(CMat::from_columns(&[v.0.column(1 - k).into_owned()]));
        // ω|h^H v_k|² part minus τ|h^H v_j|² part, each a single-user K = 1 gradient.
        let sig = maxmin_egrad_u_with(LinkModel::Direct, &u, &vk, 0.0, mu, &ch1, &sys1).unwrap();
        let int = maxmin_egrad_u_with(LinkModel::Direct, &u, &interf, 0.0, mu, &ch1, &sys1).unwrap();
        sig - int * Complex64::from(tau)
    };
    let want = (one(0) + one(1)) * Complex64::from(0.5);
    assert!((got - &want).norm() < 1e-10 * want.norm());
}
