//! Flat `key = value` experiment configuration.
//!
//! Every key is optional; omitted keys take the default simulation setup
//! (N = 20, M = 20, S = 2, K = 4, P = 30 dBm, σ² = −80 dBm, unit weights).
//! `#` starts a comment. Lists are comma separated, points are `x, y` and
//! point lists separate points with `;`. Optional values accept `none`.

use std::fmt::Write as _;
use std::path::Path;

use irsopt::baselines::{BaselineKind, Objective};
use irsopt::channel::{BlockingConfig, ChannelParams, GeometryConfig};
use irsopt::system::dbm_to_watts;
use irsopt::SystemConfig;

use crate::error::{io_err, HarnessError, Result};

/// Which quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Sweep values are outer-iteration indices of a single solve.
    Convergence,
    VsBsAntennas,
    VsIrsElements,
    VsUsers,
    /// Sweep values are transmit powers in dBm.
    VsPower,
    /// Sweep values are quantizer levels; `inf` means continuous phases.
    VsQuantization,
    /// Sweep values are the IRS1 element count; IRS2 gets `split_total − M₁`.
    IrsSplit,
    /// Sweep values are elements per IRS; every inter-IRS scheme is run.
    BlockingSchemes,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Convergence,
        Family::VsBsAntennas,
        Family::VsIrsElements,
        Family::VsUsers,
        Family::VsPower,
        Family::VsQuantization,
        Family::IrsSplit,
        Family::BlockingSchemes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Convergence => "convergence",
            Family::VsBsAntennas => "vs_bs_antennas",
            Family::VsIrsElements => "vs_irs_elements",
            Family::VsUsers => "vs_users",
            Family::VsPower => "vs_power",
            Family::VsQuantization => "vs_quantization",
            Family::IrsSplit => "irs_split",
            Family::BlockingSchemes => "blocking_schemes",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Sweep used when the config gives none.
    pub fn default_sweep(self) -> Vec<f64> {
        let v: &[f64] = match self {
            Family::Convergence => return (0..=30).map(f64::from).collect(),
            Family::VsBsAntennas | Family::VsIrsElements => &[10.0, 20.0, 30.0, 40.0, 50.0],
            Family::VsUsers => &[2.0, 4.0, 6.0, 8.0],
            Family::VsPower => &[20.0, 25.0, 30.0, 35.0, 40.0],
            Family::VsQuantization => &[2.0, 4.0, 8.0, f64::INFINITY],
            Family::IrsSplit => &[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            Family::BlockingSchemes => &[10.0, 20.0, 30.0, 40.0],
        };
        v.to_vec()
    }
}

/// How the IRS1→IRS2 cascade enters optimization and verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterIrsScheme {
    /// Cascade ignored in both stages.
    Scheme1,
    /// Optimized without the cascade, evaluated with it.
    Scheme2,
    /// Cascade included in both stages.
    Scheme3,
}

impl InterIrsScheme {
    pub const ALL: [InterIrsScheme; 3] = [InterIrsScheme::Scheme1, InterIrsScheme::Scheme2, InterIrsScheme::Scheme3];

    pub fn name(self) -> &'static str {
        match self {
            InterIrsScheme::Scheme1 => "scheme1",
            InterIrsScheme::Scheme2 => "scheme2",
            InterIrsScheme::Scheme3 => "scheme3",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

/// Algorithm identifiers accepted in `schemes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Domalo,
    Sdomalo,
    Baseline(BaselineKind),
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Domalo => "domalo",
            Scheme::Sdomalo => "sdomalo",
            Scheme::Baseline(k) => k.name(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "domalo" => Some(Scheme::Domalo),
            "sdomalo" => Some(Scheme::Sdomalo),
            _ => BaselineKind::ALL.into_iter().find(|k| k.name() == s).map(Scheme::Baseline),
        }
    }

    /// The proposed solver followed by every baseline.
    pub fn defaults(objective: Objective) -> Vec<Scheme> {
        let first = match objective {
            Objective::SumRate => Scheme::Domalo,
            Objective::MinRate => Scheme::Sdomalo,
        };
        std::iter::once(first).chain(BaselineKind::ALL.map(Scheme::Baseline)).collect()
    }
}

pub fn objective_name(o: Objective) -> &'static str {
    match o {
        Objective::SumRate => "sum_rate",
        Objective::MinRate => "min_rate",
    }
}

fn parse_objective(s: &str) -> Option<Objective> {
    match s {
        "sum_rate" => Some(Objective::SumRate),
        "min_rate" => Some(Objective::MinRate),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub family: Family,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub objective: Objective,
    pub schemes: Vec<Scheme>,
    pub blocking: Option<BlockingConfig>,
    /// `None` runs scheme 1, or all three schemes for `blocking_schemes`.
    pub inter_irs_scheme: Option<InterIrsScheme>,
    /// Total element count split between the two panels in `irs_split`.
    pub split_total: usize,
    pub max_outer: usize,
    pub outer_tol: f64,
}

impl ExperimentSpec {
    /// Inter-IRS schemes each sweep point is run under.
    pub fn link_schemes(&self) -> Vec<InterIrsScheme> {
        match (self.inter_irs_scheme, self.family) {
            (Some(s), _) => vec![s],
            (None, Family::BlockingSchemes) => InterIrsScheme::ALL.to_vec(),
            (None, _) => vec![InterIrsScheme::Scheme1],
        }
    }
}

/// Complete experiment description. Powers stay in dBm here and are
/// converted once by [`Config::system`].
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub num_bs_antennas: usize,
    pub elements_per_irs: usize,
    pub num_irs: usize,
    pub num_users: usize,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    /// `None` means unit weights.
    pub weights: Option<Vec<f64>>,
    pub quantizer_levels: Option<usize>,
    pub geometry: GeometryConfig,
    pub channel: ChannelParams,
    pub experiment: ExperimentSpec,
}

impl Default for Config {
    fn default() -> Self {
        let family = Family::Convergence;
        Self {
            num_bs_antennas: 20,
            elements_per_irs: 20,
            num_irs: 2,
            num_users: 4,
            power_dbm: 30.0,
            noise_dbm: -80.0,
            weights: None,
            quantizer_levels: None,
            geometry: GeometryConfig::default(),
            channel: ChannelParams::default(),
            experiment: ExperimentSpec {
                family,
                sweep_values: family.default_sweep(),
                trials: 20,
                base_seed: 0,
                objective: Objective::SumRate,
                schemes: Scheme::defaults(Objective::SumRate),
                blocking: None,
                inter_irs_scheme: None,
                split_total: 30,
                max_outer: 30,
                outer_tol: 1e-4,
            },
        }
    }
}

const KEYS: [&str; 29] = [
    "family",
    "sweep",
    "trials",
    "base_seed",
    "objective",
    "schemes",
    "inter_irs_scheme",
    "blocking_p1",
    "blocking_p2",
    "split_total",
    "max_outer",
    "outer_tol",
    "num_bs_antennas",
    "elements_per_irs",
    "num_irs",
    "num_users",
    "power_dbm",
    "noise_dbm",
    "weights",
    "quantizer_levels",
    "bs_position",
    "irs_positions",
    "user_center",
    "user_radius",
    "carrier_freq_hz",
    "num_nlos_paths",
    "los_gain_var",
    "nlos_gain_var",
    "rows_per_panel",
];

fn bad(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse { line, msg: msg.into() }
}

fn scalar<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(line, format!("{key}: cannot parse {v:?}")))
}

fn float(line: usize, key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" => Ok(f64::INFINITY),
        _ => scalar(line, key, v),
    }
}

fn floats(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| float(line, key, x.trim())).collect()
}

fn point(line: usize, key: &str, v: &str) -> Result<[f64; 2]> {
    match floats(line, key, v)?.as_slice() {
        &[x, y] => Ok([x, y]),
        _ => Err(bad(line, format!("{key}: expected two coordinates, got {v:?}"))),
    }
}

fn optional<'a>(v: &'a str) -> Option<&'a str> {
    (v != "none").then_some(v)
}

impl Config {
    /// Parses configuration text; see the module docs for the format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut sweep: Option<Vec<f64>> = None;
        let mut schemes: Option<Vec<Scheme>> = None;
        let mut p1: Option<f64> = None;
        let mut p2: Option<f64> = None;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected `key = value`, got {content:?}")))?;
            let (key, v) = (key.trim(), value.trim());
            let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
                return Err(bad(line, format!("unknown key {key:?}")));
            };
            if seen.contains(&key) {
                return Err(bad(line, format!("duplicate key {key:?}")));
            }
            seen.push(key);
            if v.is_empty() {
                return Err(bad(line, format!("{key}: missing value")));
            }

            let e = &mut c.experiment;
            match key {
                "family" => e.family = Family::parse(v).ok_or_else(|| bad(line, format!("unknown family {v:?}")))?,
                "sweep" => sweep = Some(floats(line, key, v)?),
                "trials" => e.trials = scalar(line, key, v)?,
                "base_seed" => e.base_seed = scalar(line, key, v)?,
                "objective" => {
                    e.objective = parse_objective(v).ok_or_else(|| bad(line, format!("unknown objective {v:?}")))?
                }
                "schemes" => {
                    let list = v
                        .split(',')
                        .map(|s| {
                            let s = s.trim();
                            Scheme::parse(s).ok_or_else(|| bad(line, format!("unknown scheme {s:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    schemes = Some(list);
                }
                "inter_irs_scheme" => {
                    e.inter_irs_scheme = match optional(v) {
                        None => None,
                        Some(s) => Some(
                            InterIrsScheme::parse(s).ok_or_else(|| bad(line, format!("unknown inter-IRS scheme {s:?}")))?,
                        ),
                    }
                }
                "blocking_p1" => p1 = optional(v).map(|s| float(line, key, s)).transpose()?,
                "blocking_p2" => p2 = optional(v).map(|s| float(line, key, s)).transpose()?,
                "split_total" => e.split_total = scalar(line, key, v)?,
                "max_outer" => e.max_outer = scalar(line, key, v)?,
                "outer_tol" => e.outer_tol = float(line, key, v)?,
                "num_bs_antennas" => c.num_bs_antennas = scalar(line, key, v)?,
                "elements_per_irs" => c.elements_per_irs = scalar(line, key, v)?,
                "num_irs" => c.num_irs = scalar(line, key, v)?,
                "num_users" => c.num_users = scalar(line, key, v)?,
                "power_dbm" => c.power_dbm = float(line, key, v)?,
                "noise_dbm" => c.noise_dbm = float(line, key, v)?,
                "weights" => c.weights = optional(v).map(|s| floats(line, key, s)).transpose()?,
                "quantizer_levels" => c.quantizer_levels = optional(v).map(|s| scalar(line, key, s)).transpose()?,
                "bs_position" => c.geometry.bs_position = point(line, key, v)?,
                "irs_positions" => {
                    c.geometry.irs_positions = v.split(';').map(|p| point(line, key, p.trim())).collect::<Result<_>>()?
                }
                "user_center" => c.geometry.user_center = point(line, key, v)?,
                "user_radius" => c.geometry.user_radius = float(line, key, v)?,
                "carrier_freq_hz" => c.geometry.carrier_freq = float(line, key, v)?,
                "num_nlos_paths" => c.channel.num_nlos_paths = scalar(line, key, v)?,
                "los_gain_var" => c.channel.los_gain_var = float(line, key, v)?,
                "nlos_gain_var" => c.channel.nlos_gain_var = float(line, key, v)?,
                "rows_per_panel" => c.channel.rows_per_panel = scalar(line, key, v)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }

        let e = &mut c.experiment;
        e.sweep_values = sweep.unwrap_or_else(|| e.family.default_sweep());
        e.schemes = schemes.unwrap_or_else(|| Scheme::defaults(e.objective));
        if p1.is_some() || p2.is_some() {
            e.blocking = Some(BlockingConfig {
                p1: p1.unwrap_or(0.0),
                p2: p2.unwrap_or(0.0),
            });
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    /// Linear-unit system description for the configured dimensions.
    pub fn system(&self) -> SystemConfig {
        let mut s = SystemConfig::uniform(
            self.num_bs_antennas,
            self.elements_per_irs,
            self.num_irs,
            self.num_users,
            dbm_to_watts(self.power_dbm),
            dbm_to_watts(self.noise_dbm),
        );
        if let Some(w) = &self.weights {
            s.weights = w.clone();
        }
        s.quantizer_levels = self.quantizer_levels;
        s
    }

    /// `(system, geometry, channel parameters, experiment)`.
    pub fn into_parts(self) -> (SystemConfig, GeometryConfig, ChannelParams, ExperimentSpec) {
        (self.system(), self.geometry, self.channel, self.experiment)
    }

    fn check_multiple(&self, key: &str, value: usize) -> Result<()> {
        let rows = self.channel.rows_per_panel;
        if value == 0 || value % rows != 0 {
            return Err(HarnessError::Invalid(format!(
                "{key} = {value} must be a positive multiple of rows_per_panel = {rows}"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(HarnessError::Invalid(m));
        let e = &self.experiment;
        self.system().validate()?;
        self.channel.validate()?;
        self.geometry.validate(self.num_irs)?;
        self.check_multiple("num_bs_antennas", self.num_bs_antennas)?;
        self.check_multiple("elements_per_irs", self.elements_per_irs)?;
        if !self.power_dbm.is_finite() || !self.noise_dbm.is_finite() {
            return invalid("power_dbm and noise_dbm must be finite".into());
        }
        if e.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        if e.sweep_values.is_empty() {
            return invalid("sweep must not be empty".into());
        }
        if e.schemes.is_empty() {
            return invalid("schemes must not be empty".into());
        }
        for s in &e.schemes {
            match (s, e.objective) {
                (Scheme::Domalo, Objective::MinRate) => return invalid("domalo needs objective = sum_rate".into()),
                (Scheme::Sdomalo, Objective::SumRate) => return invalid("sdomalo needs objective = min_rate".into()),
                _ => {}
            }
        }
        if !(e.outer_tol >= 0.0) {
            return invalid("outer_tol must be non-negative".into());
        }
        if let Some(b) = &e.blocking {
            b.validate()?;
        }
        let two_panel = e.blocking.is_some() || e.inter_irs_scheme.is_some() || e.family == Family::BlockingSchemes;
        if (two_panel || e.family == Family::IrsSplit) && self.num_irs != 2 {
            return invalid(format!("family {} with these options needs num_irs = 2", e.family.name()));
        }
        if e.family == Family::IrsSplit && e.blocking.is_some() {
            return invalid("blocking is not defined for irs_split, whose panels may be empty".into());
        }
        for &v in &e.sweep_values {
            self.check_sweep_value(v)?;
        }
        Ok(())
    }

    fn check_sweep_value(&self, v: f64) -> Result<()> {
        let family = self.experiment.family;
        if family == Family::VsPower {
            return if v.is_finite() {
                Ok(())
            } else {
                Err(HarnessError::Invalid(format!("power {v} dBm is not finite")))
            };
        }
        if family == Family::VsQuantization && v == f64::INFINITY {
            return Ok(());
        }
        if !(v >= 0.0) || v.fract() != 0.0 || !v.is_finite() {
            return Err(HarnessError::Invalid(format!(
                "sweep value {v} of family {} must be a non-negative integer",
                family.name()
            )));
        }
        let n = v as usize;
        match family {
            Family::Convergence | Family::VsPower => Ok(()),
            Family::VsBsAntennas => self.check_multiple("num_bs_antennas", n),
            Family::VsIrsElements | Family::BlockingSchemes => self.check_multiple("elements_per_irs", n),
            Family::VsUsers | Family::VsQuantization => {
                if n == 0 {
                    Err(HarnessError::Invalid(format!("sweep value {v} must be at least 1")))
                } else {
                    Ok(())
                }
            }
            Family::IrsSplit => {
                let total = self.experiment.split_total;
                if n > total {
                    return Err(HarnessError::Invalid(format!("IRS1 size {n} exceeds split_total = {total}")));
                }
                if total == 0 {
                    return Err(HarnessError::Invalid("split_total must be positive".into()));
                }
                for m in [n, total - n] {
                    if m > 0 {
                        self.check_multiple("panel size", m)?;
                    }
                }
                Ok(())
            }
        }
    }

    /// Canonical text form: every key, fixed order, one per line.
    pub fn to_text(&self) -> String {
        fn list(v: &[f64]) -> String {
            v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
        }
        fn num(x: f64) -> String {
            if x == f64::INFINITY {
                "inf".into()
            } else {
                format!("{x}")
            }
        }
        fn pt(p: [f64; 2]) -> String {
            format!("{}, {}", num(p[0]), num(p[1]))
        }
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(|| "none".into(), |x| x.to_string())
        }

        let e = &self.experiment;
        let g = &self.geometry;
        let ch = &self.channel;
        let values: [String; 29] = [
            e.family.name().into(),
            list(&e.sweep_values),
            e.trials.to_string(),
            e.base_seed.to_string(),
            objective_name(e.objective).into(),
            e.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "),
            opt(e.inter_irs_scheme.map(InterIrsScheme::name)),
            opt(e.blocking.map(|b| num(b.p1))),
            opt(e.blocking.map(|b| num(b.p2))),
            e.split_total.to_string(),
            e.max_outer.to_string(),
            num(e.outer_tol),
            self.num_bs_antennas.to_string(),
            self.elements_per_irs.to_string(),
            self.num_irs.to_string(),
            self.num_users.to_string(),
            num(self.power_dbm),
            num(self.noise_dbm),
            opt(self.weights.as_deref().map(list)),
            opt(self.quantizer_levels),
            pt(g.bs_position),
            g.irs_positions.iter().map(|p| pt(*p)).collect::<Vec<_>>().join("; "),
            pt(g.user_center),
            num(g.user_radius),
            num(g.carrier_freq),
            ch.num_nlos_paths.to_string(),
            num(ch.los_gain_var),
            num(ch.nlos_gain_var),
            ch.rows_per_panel.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
