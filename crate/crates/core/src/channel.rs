//! Channel synthesis: UPA steering vectors, free-space path loss, the
//! Saleh-Valenzuela multipath model and per-link random blocking.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_check, Error, Result};
use crate::system::SystemConfig;
use crate::{CMat, CVec};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Positions (metres) of the BS, the IRS panels and the user disc.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub bs_position: [f64; 2],
    pub irs_positions: Vec<[f64; 2]>,
    pub user_center: [f64; 2],
    pub user_radius: f64,
    pub carrier_freq: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            bs_position: [0.0, 0.0],
            irs_positions: vec![[10.0, 24.0], [24.0, 10.0]],
            user_center: [20.0, 0.0],
            user_radius: 2.0,
            carrier_freq: 3e9,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self, num_irs: usize) -> Result<()> {
        if !(self.user_radius > 0.0) {
            return Err(Error::Config("user_radius must be positive".into()));
        }
        if !(self.carrier_freq > 0.0) {
            return Err(Error::Config("carrier_freq must be positive".into()));
        }
        if self.irs_positions.len() != num_irs {
            return Err(Error::Config(format!(
                "{} IRS positions given for {} IRS panels",
                self.irs_positions.len(),
                num_irs
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Number of NLoS paths per link, in addition to the LoS path.
    pub num_nlos_paths: usize,
    pub los_gain_var: f64,
    pub nlos_gain_var: f64,
    /// Antennas per row of every planar array; columns are `size / rows`.
    pub rows_per_panel: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            num_nlos_paths: 3,
            los_gain_var: 2.0,
            nlos_gain_var: 0.4,
            rows_per_panel: 5,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.los_gain_var >= 0.0) || !(self.nlos_gain_var >= 0.0) {
            return Err(Error::Config("path gain variances must be non-negative".into()));
        }
        if self.rows_per_panel == 0 {
            return Err(Error::Config("rows_per_panel must be at least 1".into()));
        }
        Ok(())
    }

    fn columns(&self, size: usize, what: &str) -> Result<usize> {
        if size == 0 || size % self.rows_per_panel != 0 {
            return Err(Error::Config(format!(
                "{what} = {size} is not a positive multiple of the {} antennas per row",
                self.rows_per_panel
            )));
        }
        Ok(size / self.rows_per_panel)
    }
}

/// Per-distance blocking probabilities for the double-IRS layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockingConfig {
    /// Applies to BS→IRS1 and IRS1→IRS2.
    pub p1: f64,
    /// Applies to BS→IRS2 and every IRS→user link.
    pub p2: f64,
}

impl BlockingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p1) || !(0.0..=1.0).contains(&self.p2) {
            return Err(Error::Config("blocking probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Probability that a link of length `distance` is blocked when each 10 m
/// segment is blocked with probability `p`.
pub fn block_probability(p: f64, distance: f64) -> f64 {
    1.0 - (1.0 - p).powf(distance / 10.0)
}

/// All channels of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    panels: Vec<usize>,
    bs_to_irs: Vec<CMat>,
    /// `irs_to_user[k][s]` holds the entries of the row `g_{s,k}^H`.
    irs_to_user: Vec<Vec<CVec>>,
    inter_irs: Option<CMat>,
    stacked_h: CMat,
    stacked_g: CMat,
}

impl ChannelSet {
    /// Assembles a channel set from its per-panel parts.
    ///
    /// `bs_to_irs[s]` is `M_s × N`; `irs_to_user[k][s]` has length `M_s`;
    /// `inter_irs`, when given, is the `M_2 × M_1` IRS1→IRS2 channel.
    pub fn new(bs_to_irs: Vec<CMat>, irs_to_user: Vec<Vec<CVec>>, inter_irs: Option<CMat>) -> Result<Self> {
        dim_check(!bs_to_irs.is_empty(), || "at least one IRS panel is required".into())?;
        let n = bs_to_irs[0].ncols();
        let panels: Vec<usize> = bs_to_irs.iter().map(|h| h.nrows()).collect();
        for (s, h) in bs_to_irs.iter().enumerate() {
            dim_check(h.ncols() == n, || format!("H_{s} has {} columns, expected {n}", h.ncols()))?;
        }
        dim_check(!irs_to_user.is_empty(), || "at least one user is required".into())?;
        for (k, row) in irs_to_user.iter().enumerate() {
            dim_check(row.len() == panels.len(), || {
                format!("user {k} has {} panel links, expected {}", row.len(), panels.len())
            })?;
            for (s, g) in row.iter().enumerate() {
                dim_check(g.len() == panels[s], || {
                    format!("g_({s},{k}) has length {}, expected {}", g.len(), panels[s])
                })?;
            }
        }
        if let Some(l) = &inter_irs {
            dim_check(panels.len() == 2, || "inter-IRS channel needs exactly two panels".into())?;
            dim_check(l.shape() == (panels[1], panels[0]), || {
                format!("inter-IRS channel is {:?}, expected {:?}", l.shape(), (panels[1], panels[0]))
            })?;
        }
        let mut set = Self {
            panels,
            bs_to_irs,
            irs_to_user,
            inter_irs,
            stacked_h: CMat::zeros(0, 0),
            stacked_g: CMat::zeros(0, 0),
        };
        set.restack();
        Ok(set)
    }

    fn restack(&mut self) {
        let total: usize = self.panels.iter().sum();
        let n = self.num_bs_antennas();
        let mut h = CMat::zeros(total, n);
        let mut offset = 0;
        for hs in &self.bs_to_irs {
            h.rows_mut(offset, hs.nrows()).copy_from(hs);
            offset += hs.nrows();
        }
        let k = self.irs_to_user.len();
        let mut g = CMat::zeros(k, total);
        for (ki, row) in self.irs_to_user.iter().enumerate() {
            let mut offset = 0;
            for gs in row {
                for (i, z) in gs.iter().enumerate() {
                    g[(ki, offset + i)] = *z;
                }
                offset += gs.len();
            }
        }
        self.stacked_h = h;
        self.stacked_g = g;
    }

    pub fn num_bs_antennas(&self) -> usize {
        self.bs_to_irs[0].ncols()
    }

    pub fn num_users(&self) -> usize {
        self.irs_to_user.len()
    }

    pub fn num_panels(&self) -> usize {
        self.panels.len()
    }

    pub fn panel_sizes(&self) -> &[usize] {
        &self.panels
    }

    pub fn total_elements(&self) -> usize {
        self.panels.iter().sum()
    }

    pub fn bs_to_irs(&self) -> &[CMat] {
        &self.bs_to_irs
    }

    /// Entries of the row `g_{s,k}^H`.
    pub fn irs_to_user(&self, s: usize, k: usize) -> &CVec {
        &self.irs_to_user[k][s]
    }

    pub fn inter_irs(&self) -> Option<&CMat> {
        self.inter_irs.as_ref()
    }

    /// Vertical stack `[H_1; …; H_S]`, `SM × N`.
    pub fn stacked_h(&self) -> &CMat {
        &self.stacked_h
    }

    /// Row `k` is `g_k^H = [g_{1,k}^H, …, g_{S,k}^H]`, `K × SM`.
    pub fn stacked_g(&self) -> &CMat {
        &self.stacked_g
    }

    pub fn with_inter_irs(&self, inter: Option<CMat>) -> Result<Self> {
        Self::new(self.bs_to_irs.clone(), self.irs_to_user.clone(), inter)
    }

    /// Copy with the inter-IRS channel replaced by an all-zero matrix.
    pub fn with_zero_inter_irs(&self) -> Result<Self> {
        dim_check(self.panels.len() == 2, || "inter-IRS channel needs exactly two panels".into())?;
        self.with_inter_irs(Some(CMat::zeros(self.panels[1], self.panels[0])))
    }

    /// Serializes to the plain-text exchange format.
    ///
    /// ```text
    /// # irsopt-channels v1
    /// seed <seed>
    /// dims <N> <K> <M_1>[,<M_2>…] <inter 0|1>
    /// <re> <im>            one line per complex entry
    /// ```
    ///
    /// Entries follow in this order: each `H_s` row-major, then for each user
    /// `k` and panel `s` the entries of `g_{s,k}^H`, then `Λ` row-major.
    pub fn to_text(&self, seed: u64) -> String {
        let mut out = String::new();
        out.push_str("# irsopt-channels v1\n");
        let _ = writeln!(out, "seed {seed}");
        let panels: Vec<String> = self.panels.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(
            out,
            "dims {} {} {} {}",
            self.num_bs_antennas(),
            self.num_users(),
            panels.join(","),
            u8::from(self.inter_irs.is_some())
        );
        let mut push = |z: &Complex64| {
            let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
        };
        for h in &self.bs_to_irs {
            for i in 0..h.nrows() {
                for j in 0..h.ncols() {
                    push(&h[(i, j)]);
                }
            }
        }
        for row in &self.irs_to_user {
            for g in row {
                g.iter().for_each(&mut push);
            }
        }
        if let Some(l) = &self.inter_irs {
            for i in 0..l.nrows() {
                for j in 0..l.ncols() {
                    push(&l[(i, j)]);
                }
            }
        }
        out
    }

    /// Parses [`ChannelSet::to_text`] output, returning the set and its seed.
    pub fn from_text(text: &str) -> Result<(Self, u64)> {
        let bad = |m: String| Error::Config(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let seed_line = lines.next().ok_or_else(|| bad("missing seed line".into()))?;
        let seed = seed_line
            .strip_prefix("seed ")
            .and_then(|s| s.trim().parse::<u64>().ok())
            .ok_or_else(|| bad(format!("malformed seed line: {seed_line}")))?;
        let dims_line = lines.next().ok_or_else(|| bad("missing dims line".into()))?;
        let fields: Vec<&str> = dims_line.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "dims" {
            return Err(bad(format!("malformed dims line: {dims_line}")));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer {s}")));
        let n = parse(fields[1])?;
        let k = parse(fields[2])?;
        let panels = fields[3].split(',').map(parse).collect::<Result<Vec<_>>>()?;
        let has_inter = fields[4] == "1";

        let mut next = || -> Result<Complex64> {
            let line = lines.next().ok_or_else(|| bad("unexpected end of entries".into()))?;
            let mut it = line.split_whitespace();
            let re = it.next().and_then(|x| x.parse::<f64>().ok());
            let im = it.next().and_then(|x| x.parse::<f64>().ok());
            match (re, im) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => Err(bad(format!("malformed entry: {line}"))),
            }
        };
        let mut read_mat = |r: usize, c: usize| -> Result<CMat> {
            let mut m = CMat::zeros(r, c);
            for i in 0..r {
                for j in 0..c {
                    m[(i, j)] = next()?;
                }
            }
            Ok(m)
        };
        let mut h = Vec::new();
        for &m in &panels {
            h.push(read_mat(m, n)?);
        }
        let mut g = Vec::new();
        for _ in 0..k {
            let mut row = Vec::new();
            for &m in &panels {
                row.push(read_mat(m, 1)?.column(0).into_owned());
            }
            g.push(row);
        }
        let inter = if has_inter {
            if panels.len() != 2 {
                return Err(bad("inter-IRS channel requires two panels".into()));
            }
            Some(read_mat(panels[1], panels[0])?)
        } else {
            None
        };
        Ok((Self::new(h, g, inter)?, seed))
    }
}

/// UPA steering vector with half-wavelength spacing.
///
/// Row factor phases `π r sinφ sinθ` (r < rows), column factor phases
/// `π c cosθ` (c < cols); the Kronecker product is scaled to unit norm.
pub fn steering_vector(azimuth: f64, elevation: f64, rows: usize, cols: usize) -> Result<CVec> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "steering vector needs positive dimensions, got {rows}×{cols}"
        )));
    }
    let row_phase = PI * azimuth.sin() * elevation.sin();
    let col_phase = PI * elevation.cos();
    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    Ok(CVec::from_fn(rows * cols, |idx, _| {
        let (r, c) = (idx / cols, idx % cols);
        Complex64::from_polar(scale, row_phase * r as f64 + col_phase * c as f64)
    }))
}

/// Free-space path loss `(4π f D / c)²`.
pub fn path_loss(distance: f64, freq: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::InvalidParameter(format!("distance must be positive, got {distance}")));
    }
    Ok((4.0 * PI * freq * distance / SPEED_OF_LIGHT).powi(2))
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn complex_gaussian(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    params: &'a ChannelParams,
}

impl Sampler<'_> {
    fn angles(&mut self) -> (f64, f64) {
        let az = self.rng.random::<f64>() * TAU;
        let el = self.rng.random::<f64>() * PI;
        (az, el)
    }

    fn gain(&mut self, path: usize) -> Complex64 {
        let var = if path == 0 {
            self.params.los_gain_var
        } else {
            self.params.nlos_gain_var
        };
        complex_gaussian(&mut self.rng, var)
    }

    /// `Σ_l β_l a_rx(·) a_tx(·)^H` over the LoS and NLoS paths.
    fn multipath(&mut self, rx: (usize, usize), tx: (usize, usize)) -> Result<CMat> {
        let mut out = CMat::zeros(rx.0 * rx.1, tx.0 * tx.1);
        for l in 0..=self.params.num_nlos_paths {
            let beta = self.gain(l);
            let (az_r, el_r) = self.angles();
            let (az_t, el_t) = self.angles();
            let a_rx = steering_vector(az_r, el_r, rx.0, rx.1)?;
            let a_tx = steering_vector(az_t, el_t, tx.0, tx.1)?;
            out += (a_rx * beta) * a_tx.adjoint();
        }
        Ok(out)
    }

    /// Entries of the row `Σ_l β_l a(·)^H`.
    fn multipath_row(&mut self, shape: (usize, usize)) -> Result<CVec> {
        let mut out = CVec::zeros(shape.0 * shape.1);
        for l in 0..=self.params.num_nlos_paths {
            let beta = self.gain(l);
            let (az, el) = self.angles();
            let a = steering_vector(az, el, shape.0, shape.1)?;
            out += a.map(|z| z.conj()) * beta;
        }
        Ok(out)
    }
}

/// Draws `count` user positions uniformly over the disc.
fn place_users(rng: &mut ChaCha8Rng, geo: &GeometryConfig, count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| {
            let r = geo.user_radius * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * TAU;
            [geo.user_center[0] + r * a.cos(), geo.user_center[1] + r * a.sin()]
        })
        .collect()
}

/// Synthesizes a channel set with `sys.num_irs` equal panels of
/// `sys.elements_per_irs` elements. Deterministic in `seed`.
pub fn synthesize_channels(
    sys: &SystemConfig,
    geo: &GeometryConfig,
    params: &ChannelParams,
    seed: u64,
) -> Result<ChannelSet> {
    sys.validate()?;
    geo.validate(sys.num_irs)?;
    let sizes = vec![sys.elements_per_irs; sys.num_irs];
    synthesize_channels_with_panels(sys, geo, params, &sizes, seed)
}

/// Like [`synthesize_channels`] with per-panel element counts.
///
/// `panel_sizes[s]` pairs with `geo.irs_positions[s]`; zero-sized panels are
/// dropped, so `(M_1, 0)` is a single IRS at the first position. The
/// IRS1→IRS2 channel is generated whenever exactly two panels remain.
pub fn synthesize_channels_with_panels(
    sys: &SystemConfig,
    geo: &GeometryConfig,
    params: &ChannelParams,
    panel_sizes: &[usize],
    seed: u64,
) -> Result<ChannelSet> {
    params.validate()?;
    geo.validate(panel_sizes.len())?;
    let n = sys.num_bs_antennas;
    let k = sys.num_users;
    if k == 0 {
        return Err(Error::Config("num_users must be at least 1".into()));
    }
    let bs_shape = (params.rows_per_panel, params.columns(n, "num_bs_antennas")?);
    let active: Vec<([f64; 2], usize)> = geo
        .irs_positions
        .iter()
        .zip(panel_sizes)
        .filter(|(_, &m)| m > 0)
        .map(|(&p, &m)| (p, m))
        .collect();
    if active.is_empty() {
        return Err(Error::Config("at least one IRS panel must have elements".into()));
    }
    let shapes = active
        .iter()
        .map(|&(_, m)| Ok((params.rows_per_panel, params.columns(m, "elements_per_irs")?)))
        .collect::<Result<Vec<_>>>()?;

    let mut sampler = Sampler {
        rng: ChaCha8Rng::seed_from_u64(seed),
        params,
    };
    let users = place_users(&mut sampler.rng, geo, k);
    let f = geo.carrier_freq;

    let mut h = Vec::with_capacity(active.len());
    for (&(pos, m), &shape) in active.iter().zip(&shapes) {
        let loss = path_loss(distance(geo.bs_position, pos), f)?;
        let scale = ((n * m) as f64 / loss).sqrt();
        h.push(sampler.multipath(shape, bs_shape)? * Complex64::from(scale));
    }

    let mut g = Vec::with_capacity(k);
    for user in &users {
        let mut row = Vec::with_capacity(active.len());
        for (&(pos, m), &shape) in active.iter().zip(&shapes) {
            let loss = path_loss(distance(pos, *user), f)?;
            let scale = (m as f64 / loss).sqrt();
            row.push(sampler.multipath_row(shape)? * Complex64::from(scale));
        }
        g.push(row);
    }

    let inter = if active.len() == 2 {
        let loss = path_loss(distance(active[0].0, active[1].0), f)?;
        let scale = ((active[0].1 * active[1].1) as f64 / loss).sqrt();
        Some(sampler.multipath(shapes[1], shapes[0])? * Complex64::from(scale))
    } else {
        None
    };

    ChannelSet::new(h, g, inter)
}

/// Channels with i.i.d. `CN(0, 1)` entries and no array geometry, for
/// small randomized checks. `with_inter` adds an `M_2 × M_1` inter-IRS
/// channel and requires two panels.
pub fn rayleigh_channels(n: usize, panels: &[usize], k: usize, with_inter: bool, seed: u64) -> Result<ChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize, c: usize| CMat::from_fn(r, c, |_, _| complex_gaussian(&mut rng, 1.0));
    let h = panels.iter().map(|&m| draw(m, n)).collect();
    let g = (0..k)
        .map(|_| panels.iter().map(|&m| draw(m, 1).column(0).into_owned()).collect())
        .collect();
    let inter = if with_inter {
        if panels.len() != 2 {
            return Err(Error::Config("inter-IRS channel needs exactly two panels".into()));
        }
        Some(draw(panels[1], panels[0]))
    } else {
        None
    };
    ChannelSet::new(h, g, inter)
}

/// Zeroes each link independently with probability `1 − (1 − p_i)^{d/10}`.
///
/// Distances: BS→IRS_s for `H_s`, IRS1→IRS2 for `Λ`, IRS_s→user-disc centre
/// for every `g_{s,k}`. Only the two-panel layout is supported.
pub fn apply_blocking(
    ch: &ChannelSet,
    geo: &GeometryConfig,
    blk: &BlockingConfig,
    seed: u64,
) -> Result<ChannelSet> {
    blk.validate()?;
    if ch.num_panels() != 2 || geo.irs_positions.len() != 2 {
        return Err(Error::Unsupported(format!(
            "blocking is defined for exactly two IRS panels, got {}",
            ch.num_panels()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocked = |p: f64, d: f64| rng.random::<f64>() < block_probability(p, d);
    let irs = &geo.irs_positions;

    let mut h = ch.bs_to_irs.clone();
    let probs = [blk.p1, blk.p2];
    for (s, hs) in h.iter_mut().enumerate() {
        if blocked(probs[s], distance(geo.bs_position, irs[s])) {
            hs.fill(Complex64::new(0.0, 0.0));
        }
    }
    let mut inter = ch.inter_irs.clone();
    let inter_blocked = blocked(blk.p1, distance(irs[0], irs[1]));
    if inter_blocked {
        if let Some(l) = inter.as_mut() {
            l.fill(Complex64::new(0.0, 0.0));
        }
    }
    let mut g = ch.irs_to_user.clone();
    for row in g.iter_mut() {
        for (s, gs) in row.iter_mut().enumerate() {
            if blocked(blk.p2, distance(irs[s], geo.user_center)) {
                gs.fill(Complex64::new(0.0, 0.0));
            }
        }
    }
    ChannelSet::new(h, g, inter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_sys(n: usize, m: usize, k: usize) -> SystemConfig {
        SystemConfig::uniform(n, m, 2, k, 1.0, 1e-11)
    }

    #[test]
    fn steering_zero_phase_case() {
        let a = steering_vector(0.0, PI / 2.0, 2, 2).unwrap();
        for z in a.iter() {
            assert_relative_eq!(z.re, 0.5, epsilon = 1e-15);
            assert!(z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn steering_half_wave_phase() {
        let a = steering_vector(PI / 2.0, PI / 2.0, 2, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_unit_norm_and_errors() {
        for (az, el) in [(0.3, 1.2), (5.0, 0.1), (2.0, 3.0)] {
            let a = steering_vector(az, el, 5, 4).unwrap();
            assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-12);
        }
        assert!(steering_vector(0.0, 0.0, 0, 3).is_err());
    }

    #[test]
    fn path_loss_values() {
        let f = 3e9;
        assert_relative_eq!(path_loss(SPEED_OF_LIGHT / (4.0 * PI * f), f).unwrap(), 1.0, epsilon = 1e-12);
        let a = path_loss(7.0, f).unwrap();
        assert_relative_eq!(path_loss(14.0, f).unwrap(), 4.0 * a, max_relative = 1e-12);
        // 4π·3e9·10/c with c = 299 792 458 m/s.
        let expected = (4.0 * PI * 3e10 / 299_792_458.0f64).powi(2);
        assert_relative_eq!(path_loss(10.0, f).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 1.5791e6, max_relative = 2e-3);
        assert!(path_loss(0.0, f).is_err());
    }

    #[test]
    fn synthesis_is_deterministic_and_consistent() {
        let sys = small_sys(10, 10, 3);
        let geo = GeometryConfig::default();
        let p = ChannelParams::default();
        let a = synthesize_channels(&sys, &geo, &p, 42).unwrap();
        let b = synthesize_channels(&sys, &geo, &p, 42).unwrap();
        assert_eq!(a, b);
        let c = synthesize_channels(&sys, &geo, &p, 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.stacked_h().shape(), (20, 10));
        assert_eq!(a.stacked_g().shape(), (3, 20));
        assert_eq!(a.inter_irs().unwrap().shape(), (10, 10));
        let rebuilt = ChannelSet::new(
            a.bs_to_irs().to_vec(),
            (0..3).map(|k| (0..2).map(|s| a.irs_to_user(s, k).clone()).collect()).collect(),
            a.inter_irs().cloned(),
        )
        .unwrap();
        assert_eq!(rebuilt.stacked_h(), a.stacked_h());
        assert_eq!(rebuilt.stacked_g(), a.stacked_g());
        assert_eq!(a.stacked_h().rows(10, 10), a.bs_to_irs()[1].rows(0, 10));
        assert_eq!(a.stacked_g()[(2, 13)], a.irs_to_user(1, 2)[3]);
    }

    #[test]
    fn single_path_channel_has_rank_one() {
        let sys = small_sys(10, 10, 1);
        let p = ChannelParams {
            num_nlos_paths: 0,
            ..Default::default()
        };
        let ch = synthesize_channels(&sys, &GeometryConfig::default(), &p, 5).unwrap();
        for h in ch.bs_to_irs() {
            let sv = h.clone().svd(false, false).singular_values;
            assert!(sv[0] > 0.0);
            assert!(sv[1] / sv[0] < 1e-12);
        }
    }

    #[test]
    fn panel_shape_must_divide_rows() {
        let sys = small_sys(12, 10, 1);
        let err = synthesize_channels(&sys, &GeometryConfig::default(), &ChannelParams::default(), 1).unwrap_err();
        assert!(err.to_string().contains("num_bs_antennas"));
    }

    #[test]
    fn expected_bs_irs_energy() {
        // E‖H_s‖² = N M / ϱ · (σ²_LoS + L σ²_NLoS): unit-norm steering outer
        // products and independent zero-mean gains.
        let sys = SystemConfig::uniform(5, 5, 1, 1, 1.0, 1.0);
        let geo = GeometryConfig {
            irs_positions: vec![[10.0, 24.0]],
            ..Default::default()
        };
        let p = ChannelParams::default();
        let draws = 10_000;
        let mut acc = 0.0;
        for seed in 0..draws {
            let ch = synthesize_channels(&sys, &geo, &p, seed).unwrap();
            acc += ch.bs_to_irs()[0].norm_squared();
        }
        let mean = acc / draws as f64;
        let loss = path_loss(26.0, 3e9).unwrap();
        let expected = 25.0 / loss * (2.0 + 3.0 * 0.4);
        assert!((mean / expected - 1.0).abs() < 0.05, "{mean} vs {expected}");
    }

    #[test]
    fn split_panels_drop_empty_irs() {
        let sys = small_sys(10, 15, 2);
        let geo = GeometryConfig::default();
        let ch = synthesize_channels_with_panels(&sys, &geo, &ChannelParams::default(), &[30, 0], 3).unwrap();
        assert_eq!(ch.panel_sizes(), &[30]);
        assert!(ch.inter_irs().is_none());
        let ch = synthesize_channels_with_panels(&sys, &geo, &ChannelParams::default(), &[10, 20], 3).unwrap();
        assert_eq!(ch.panel_sizes(), &[10, 20]);
        assert_eq!(ch.inter_irs().unwrap().shape(), (20, 10));
    }

    #[test]
    fn blocking_extremes() {
        let sys = small_sys(5, 5, 2);
        let geo = GeometryConfig::default();
        let ch = synthesize_channels(&sys, &geo, &ChannelParams::default(), 9).unwrap();
        let same = apply_blocking(&ch, &geo, &BlockingConfig { p1: 0.0, p2: 0.0 }, 1).unwrap();
        assert_eq!(same, ch);
        let none = apply_blocking(&ch, &geo, &BlockingConfig { p1: 1.0, p2: 1.0 }, 1).unwrap();
        assert_eq!(none.stacked_h().norm(), 0.0);
        assert_eq!(none.stacked_g().norm(), 0.0);
        assert_eq!(none.inter_irs().unwrap().norm(), 0.0);
    }

    #[test]
    fn blocking_needs_two_panels() {
        let sys = SystemConfig::uniform(5, 5, 1, 1, 1.0, 1.0);
        let geo = GeometryConfig {
            irs_positions: vec![[10.0, 24.0]],
            ..Default::default()
        };
        let ch = synthesize_channels(&sys, &geo, &ChannelParams::default(), 1).unwrap();
        let err = apply_blocking(&ch, &geo, &BlockingConfig { p1: 0.1, p2: 0.1 }, 1).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn blocking_rate_matches_bernoulli_probability() {
        // BS at the origin, IRS1 at 20 m: H_1 blocked with 1 − 0.9² = 0.19.
        assert_relative_eq!(block_probability(0.1, 20.0), 0.19, epsilon = 1e-12);
        let geo = GeometryConfig {
            irs_positions: vec![[20.0, 0.0], [0.0, 30.0]],
            ..Default::default()
        };
        let h = vec![CMat::from_element(1, 1, Complex64::new(1.0, 0.0)); 2];
        let g = vec![vec![CVec::from_element(1, Complex64::new(1.0, 0.0)); 2]];
        let ch = ChannelSet::new(h, g, None).unwrap();
        let blk = BlockingConfig { p1: 0.1, p2: 0.0 };
        let trials = 100_000u64;
        let hits = (0..trials)
            .filter(|&s| apply_blocking(&ch, &geo, &blk, s).unwrap().bs_to_irs()[0][(0, 0)].norm() == 0.0)
            .count();
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.19).abs() < 0.01, "{rate}");
    }

    #[test]
    fn text_format_round_trip() {
        let sys = small_sys(5, 5, 2);
        let ch = synthesize_channels(&sys, &GeometryConfig::default(), &ChannelParams::default(), 77).unwrap();
        let text = ch.to_text(77);
        assert!(text.starts_with("# irsopt-channels v1\nseed 77\ndims 5 2 5,5 1\n"));
        let (back, seed) = ChannelSet::from_text(&text).unwrap();
        assert_eq!(seed, 77);
        assert_eq!(back, ch);
        assert!(ChannelSet::from_text("seed 1\ndims 1 1 1 0\n0 0\n").is_err());
    }
}
