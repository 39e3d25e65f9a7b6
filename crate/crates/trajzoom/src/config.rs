//! Flat `key=value` run configuration.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored. Unknown
//! and repeated keys are errors. Keys that a mode does not use are accepted
//! and echoed in the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use trajzoom_core::discrete::EffectiveTimeNorm;
use trajzoom_core::limit::{Boundaries, LimitOptions, ReflectionScheme};
use trajzoom_core::{Gamma, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Discrete,
    Sde,
    Limit,
    StatsExcursions,
    StatsLevy,
    StatsSpikes,
    StatsEntropy,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Discrete,
        Mode::Sde,
        Mode::Limit,
        Mode::StatsExcursions,
        Mode::StatsLevy,
        Mode::StatsSpikes,
        Mode::StatsEntropy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Discrete => "discrete",
            Mode::Sde => "sde",
            Mode::Limit => "limit",
            Mode::StatsExcursions => "stats-excursions",
            Mode::StatsLevy => "stats-levy",
            Mode::StatsSpikes => "stats-spikes",
            Mode::StatsEntropy => "stats-entropy",
        }
    }

    /// Modes driven by the γ → ∞ limit engine.
    pub fn uses_limit_engine(self) -> bool {
        matches!(
            self,
            Mode::Limit | Mode::StatsExcursions | Mode::StatsLevy | Mode::StatsEntropy
        )
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Parse(String),
    UnknownKey(String),
    OutOfRange { field: String, reason: String },
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub kind: ConfigErrorKind,
}

impl ConfigError {
    fn at(line: Option<usize>, kind: ConfigErrorKind) -> Self {
        ConfigError { line, kind }
    }

    fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        Self::at(line, ConfigErrorKind::Parse(msg.into()))
    }

    fn range(line: Option<usize>, field: &str, reason: impl Into<String>) -> Self {
        Self::at(
            line,
            ConfigErrorKind::OutOfRange {
                field: field.to_string(),
                reason: reason.into(),
            },
        )
    }

    pub fn code(&self) -> &'static str {
        match self.kind {
            ConfigErrorKind::Parse(_) => "PARSE_ERROR",
            ConfigErrorKind::UnknownKey(_) => "UNKNOWN_KEY",
            ConfigErrorKind::OutOfRange { .. } => "OUT_OF_RANGE",
            ConfigErrorKind::Inconsistent(_) => "INCONSISTENT",
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ConfigErrorKind::OutOfRange { field, .. } => write!(f, "OUT_OF_RANGE({field})")?,
            _ => f.write_str(self.code())?,
        }
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        match &self.kind {
            ConfigErrorKind::Parse(msg) | ConfigErrorKind::Inconsistent(msg) => write!(f, ": {msg}"),
            ConfigErrorKind::UnknownKey(key) => write!(f, ": `{key}`"),
            ConfigErrorKind::OutOfRange { reason, .. } => write!(f, ": {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Settings of the statistics modes. Engines ignore them.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsSettings {
    /// Smallest excursion height kept by the detector.
    pub floor: f64,
    /// Apex band of the excursions entering the Laplace table.
    pub band: (f64, f64),
    pub sigmas: Vec<f64>,
    /// Physical-time levels at which the inverse time change is recorded.
    pub s_levels: Vec<f64>,
    /// Effective-time budget per inverse-time increment.
    pub t_cap: f64,
    /// Spike threshold `m`.
    pub spike_m: f64,
    /// Bottom-plateau time per spike-count window.
    pub window: f64,
    /// Half-width of the plateau bands at 0 and 1.
    pub plateau_delta: f64,
    /// Steps between two plateau samples of `Q`.
    pub sample_stride: usize,
    /// Bulk band of `Q` for the entropy drift.
    pub bulk: (f64, f64),
}

impl Default for StatsSettings {
    fn default() -> Self {
        StatsSettings {
            floor: trajzoom_core::stats::excursions::DEFAULT_FLOOR,
            band: (0.45, 0.55),
            sigmas: vec![0.5, 1.0, 2.0],
            s_levels: vec![0.5, 1.0],
            t_cap: 10.0,
            spike_m: 0.5,
            window: 10.0,
            plateau_delta: 0.05,
            sample_stride: 100,
            bulk: (0.2, 0.8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: ModelParams,
    pub n_traj: usize,
    /// Real time for `discrete`, `sde` and `stats-spikes`; effective time
    /// for the limit modes.
    pub horizon: f64,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub effective_time_normalization: EffectiveTimeNorm,
    pub limit: LimitOptions,
    pub stats: StatsSettings,
}

impl RunConfig {
    /// Defaults of `mode` before any key is applied.
    pub fn defaults(mode: Mode) -> Self {
        let mut params = ModelParams::default();
        let mut limit = LimitOptions::default();
        let mut stats = StatsSettings::default();
        if mode.uses_limit_engine() {
            params.gamma = Gamma::Infinite;
        }
        match mode {
            Mode::StatsExcursions | Mode::StatsEntropy => limit.scheme = ReflectionScheme::Bridge,
            Mode::StatsLevy => {
                limit.scheme = ReflectionScheme::Bridge;
                limit.boundaries = Boundaries::LowerOnly;
                params.q0 = 0.0;
                params.dt = 1e-3;
                stats.sigmas = vec![2.0];
            }
            Mode::StatsSpikes => {
                params.gamma = Gamma::Finite(800.0);
                params.q0 = 0.0;
            }
            _ => {}
        }
        RunConfig {
            mode,
            params,
            n_traj: 1,
            horizon: 1.0,
            output_dir: PathBuf::from("out"),
            master_seed: 0,
            effective_time_normalization: EffectiveTimeNorm::default(),
            limit,
            stats,
        }
    }

    /// Canonical `key=value` lines of the configuration, in key order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let gamma = match p.gamma {
            Gamma::Finite(g) => fmt_f64(g),
            Gamma::Infinite => "inf".to_string(),
        };
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("mode", self.mode.to_string()),
            ("lambda", fmt_f64(p.lambda)),
            ("p", fmt_f64(p.p)),
            ("gamma", gamma),
            ("epsilon", fmt_f64(p.epsilon)),
            ("ds", fmt_f64(p.ds)),
            ("dt", fmt_f64(p.dt)),
            ("q0", fmt_f64(p.q0)),
            ("n_traj", self.n_traj.to_string()),
            ("horizon", fmt_f64(self.horizon)),
            ("output_dir", self.output_dir.display().to_string()),
            ("master_seed", self.master_seed.to_string()),
            (
                "effective_time_normalization",
                (self.effective_time_normalization.constant() as u8).to_string(),
            ),
            (
                "scheme",
                match self.limit.scheme {
                    ReflectionScheme::Clamp => "clamp",
                    ReflectionScheme::Bridge => "bridge",
                }
                .to_string(),
            ),
            (
                "boundaries",
                match self.limit.boundaries {
                    Boundaries::Both => "both",
                    Boundaries::LowerOnly => "lower",
                }
                .to_string(),
            ),
            ("floor", fmt_f64(self.stats.floor)),
            ("band_lo", fmt_f64(self.stats.band.0)),
            ("band_hi", fmt_f64(self.stats.band.1)),
            ("sigmas", list(&self.stats.sigmas)),
            ("s_levels", list(&self.stats.s_levels)),
            ("t_cap", fmt_f64(self.stats.t_cap)),
            ("spike_m", fmt_f64(self.stats.spike_m)),
            ("window", fmt_f64(self.stats.window)),
            ("plateau_delta", fmt_f64(self.stats.plateau_delta)),
            ("sample_stride", self.stats.sample_stride.to_string()),
            ("bulk_lo", fmt_f64(self.stats.bulk.0)),
            ("bulk_hi", fmt_f64(self.stats.bulk.1)),
        ];
        out.sort_by(|a, b| a.0.cmp(b.0));
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Shortest decimal that round-trips.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

const KEYS: [&str; 27] = [
    "mode",
    "lambda",
    "p",
    "gamma",
    "epsilon",
    "ds",
    "dt",
    "q0",
    "n_traj",
    "horizon",
    "output_dir",
    "master_seed",
    "effective_time_normalization",
    "scheme",
    "boundaries",
    "floor",
    "band_lo",
    "band_hi",
    "sigmas",
    "s_levels",
    "t_cap",
    "spike_m",
    "window",
    "plateau_delta",
    "sample_stride",
    "bulk_lo",
    "bulk_hi",
];

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::parse(Some(line), format!("`{key}` expects a finite number, got `{value}`")))
}

fn integer<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| {
        ConfigError::parse(
            Some(line),
            format!("`{key}` expects a non-negative integer, got `{value}`"),
        )
    })
}

fn number_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| number(line, key, v.trim())).collect()
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::parse(
                Some(line),
                format!("expected key=value, got `{content}`"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::at(
                Some(line),
                ConfigErrorKind::UnknownKey(key.to_string()),
            ));
        }
        if value.is_empty() {
            return Err(ConfigError::parse(Some(line), format!("`{key}` has no value")));
        }
        if entries.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(ConfigError::parse(Some(line), format!("`{key}` is given twice")));
        }
    }

    let Some((mode_line, mode_text)) = entries.get("mode").cloned() else {
        return Err(ConfigError::parse(None, "missing mode"));
    };
    let mode: Mode = mode_text.parse().map_err(|e| ConfigError::parse(Some(mode_line), e))?;
    let mut cfg = RunConfig::defaults(mode);
    let line_of = |key: &str| entries.get(key).map(|(l, _)| *l);

    for (key, (line, value)) in &entries {
        let (line, value) = (*line, value.as_str());
        match key.as_str() {
            "mode" => {}
            "lambda" => cfg.params.lambda = number(line, key, value)?,
            "p" => cfg.params.p = number(line, key, value)?,
            "gamma" => {
                cfg.params.gamma = match value {
                    "inf" | "infinite" | "INFINITE" => Gamma::Infinite,
                    _ => Gamma::Finite(number(line, key, value)?),
                }
            }
            "epsilon" => cfg.params.epsilon = number(line, key, value)?,
            "ds" => cfg.params.ds = number(line, key, value)?,
            "dt" => cfg.params.dt = number(line, key, value)?,
            "q0" => cfg.params.q0 = number(line, key, value)?,
            "n_traj" => cfg.n_traj = integer(line, key, value)?,
            "horizon" => cfg.horizon = number(line, key, value)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "master_seed" => cfg.master_seed = integer(line, key, value)?,
            "effective_time_normalization" => {
                cfg.effective_time_normalization = integer::<u8>(line, key, value)
                    .ok()
                    .and_then(EffectiveTimeNorm::from_constant)
                    .ok_or_else(|| ConfigError::range(Some(line), key, "must be 1 or 2"))?
            }
            "scheme" => {
                cfg.limit.scheme = match value {
                    "clamp" => ReflectionScheme::Clamp,
                    "bridge" => ReflectionScheme::Bridge,
                    _ => return Err(ConfigError::parse(Some(line), "`scheme` expects clamp or bridge")),
                }
            }
            "boundaries" => {
                cfg.limit.boundaries = match value {
                    "both" => Boundaries::Both,
                    "lower" => Boundaries::LowerOnly,
                    _ => return Err(ConfigError::parse(Some(line), "`boundaries` expects both or lower")),
                }
            }
            "floor" => cfg.stats.floor = number(line, key, value)?,
            "band_lo" => cfg.stats.band.0 = number(line, key, value)?,
            "band_hi" => cfg.stats.band.1 = number(line, key, value)?,
            "sigmas" => cfg.stats.sigmas = number_list(line, key, value)?,
            "s_levels" => cfg.stats.s_levels = number_list(line, key, value)?,
            "t_cap" => cfg.stats.t_cap = number(line, key, value)?,
            "spike_m" => cfg.stats.spike_m = number(line, key, value)?,
            "window" => cfg.stats.window = number(line, key, value)?,
            "plateau_delta" => cfg.stats.plateau_delta = number(line, key, value)?,
            "sample_stride" => cfg.stats.sample_stride = integer(line, key, value)?,
            "bulk_lo" => cfg.stats.bulk.0 = number(line, key, value)?,
            "bulk_hi" => cfg.stats.bulk.1 = number(line, key, value)?,
            _ => unreachable!("key list and match arms differ"),
        }
    }

    cfg.params = cfg.params.validate().map_err(|e| match e {
        trajzoom_core::Error::OutOfRange { field, reason } => ConfigError::range(line_of(field), field, reason),
        other => ConfigError::parse(None, other.to_string()),
    })?;
    match (mode.uses_limit_engine(), cfg.params.gamma) {
        (true, Gamma::Finite(_)) => {
            return Err(ConfigError::at(
                line_of("gamma"),
                ConfigErrorKind::Inconsistent(format!("mode {mode} needs gamma=inf")),
            ))
        }
        (false, Gamma::Infinite) => {
            return Err(ConfigError::at(
                line_of("gamma"),
                ConfigErrorKind::Inconsistent(format!("mode {mode} needs a finite gamma")),
            ))
        }
        _ => {}
    }
    if let Gamma::Finite(g) = cfg.params.gamma {
        if mode != Mode::Discrete && g * cfg.params.ds > trajzoom_core::sde::MAX_GAMMA_DS {
            return Err(ConfigError::range(line_of("ds"), "ds", "must satisfy gamma*ds <= 0.1"));
        }
    }
    if cfg.n_traj == 0 {
        return Err(ConfigError::range(line_of("n_traj"), "n_traj", "must be >= 1"));
    }
    if !(cfg.horizon > 0.0) {
        return Err(ConfigError::range(line_of("horizon"), "horizon", "must be > 0"));
    }
    let st = &cfg.stats;
    if !(st.floor > 0.0 && st.floor < 0.5) {
        return Err(ConfigError::range(line_of("floor"), "floor", "must lie in (0, 0.5)"));
    }
    if !(0.0 < st.band.0 && st.band.0 < st.band.1 && st.band.1 <= 1.0) {
        return Err(ConfigError::range(
            line_of("band_hi").or(line_of("band_lo")),
            "band",
            "need 0 < band_lo < band_hi <= 1",
        ));
    }
    if st.sigmas.iter().any(|s| *s < 0.0) {
        return Err(ConfigError::range(line_of("sigmas"), "sigmas", "must be >= 0"));
    }
    if st.s_levels.is_empty() || st.s_levels[0] <= 0.0 || st.s_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::range(
            line_of("s_levels"),
            "s_levels",
            "must be positive and strictly increasing",
        ));
    }
    if !(st.t_cap > 0.0) {
        return Err(ConfigError::range(line_of("t_cap"), "t_cap", "must be > 0"));
    }
    if !(st.plateau_delta > 0.0 && st.plateau_delta < st.spike_m && st.spike_m < 1.0 - st.plateau_delta) {
        return Err(ConfigError::range(
            line_of("spike_m").or(line_of("plateau_delta")),
            "spike_m",
            "need 0 < plateau_delta < spike_m < 1 - plateau_delta",
        ));
    }
    if !(st.window > 0.0) {
        return Err(ConfigError::range(line_of("window"), "window", "must be > 0"));
    }
    if st.sample_stride == 0 {
        return Err(ConfigError::range(
            line_of("sample_stride"),
            "sample_stride",
            "must be >= 1",
        ));
    }
    if !(0.0 <= st.bulk.0 && st.bulk.0 < st.bulk.1 && st.bulk.1 <= 1.0) {
        return Err(ConfigError::range(
            line_of("bulk_hi").or(line_of("bulk_lo")),
            "bulk",
            "need 0 <= bulk_lo < bulk_hi <= 1",
        ));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str =
        "mode=sde\ngamma=200\nlambda=1\np=0.5\nds=1e-5\nhorizon=8\nn_traj=1\nmaster_seed=42\noutput_dir=out";

    #[test]
    fn continuous_figure_config() {
        let cfg = parse_config(FIG2).unwrap();
        assert_eq!(cfg.mode, Mode::Sde);
        assert_eq!(cfg.params.gamma, Gamma::Finite(200.0));
        assert_eq!((cfg.params.lambda, cfg.params.p, cfg.params.ds), (1.0, 0.5, 1e-5));
        assert_eq!((cfg.horizon, cfg.n_traj, cfg.master_seed), (8.0, 1, 42));
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn empty_file_misses_mode() {
        let err = parse_config("").unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
        assert_eq!(err.to_string(), "PARSE_ERROR: missing mode");
        assert_eq!(parse_config("# nothing\n\n").unwrap_err(), err);
    }

    #[test]
    fn negative_gamma_names_field_and_line() {
        let err = parse_config("gamma=-1\nmode=sde").unwrap_err();
        assert_eq!(
            err.kind,
            ConfigErrorKind::OutOfRange {
                field: "gamma".into(),
                reason: "must be finite and > 0".into()
            }
        );
        assert_eq!(err.line, Some(1));
        assert!(err.to_string().starts_with("OUT_OF_RANGE(gamma) at line 1"));
    }

    #[test]
    fn unknown_and_malformed_lines() {
        let err = parse_config("mode=sde\ncolour=blue").unwrap_err();
        assert_eq!((err.code(), err.line), ("UNKNOWN_KEY", Some(2)));
        let err = parse_config("mode=sde\n\njust text").unwrap_err();
        assert_eq!((err.code(), err.line), ("PARSE_ERROR", Some(3)));
        let err = parse_config("mode=sde\nlambda=fast").unwrap_err();
        assert_eq!((err.code(), err.line), ("PARSE_ERROR", Some(2)));
        let err = parse_config("mode=sde\np=0.2\np=0.3").unwrap_err();
        assert_eq!(err.line, Some(3));
        let err = parse_config("mode=walk").unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
    }

    #[test]
    fn comments_and_whitespace() {
        let cfg = parse_config("# header\n mode = limit  # trailing\n\ndt = 1e-4\n").unwrap();
        assert_eq!(cfg.mode, Mode::Limit);
        assert_eq!(cfg.params.gamma, Gamma::Infinite);
    }

    #[test]
    fn gamma_must_match_the_engine() {
        let err = parse_config("mode=limit\ngamma=200").unwrap_err();
        assert_eq!((err.code(), err.line), ("INCONSISTENT", Some(2)));
        let err = parse_config("mode=sde\ngamma=inf").unwrap_err();
        assert_eq!(err.code(), "INCONSISTENT");
        let err = parse_config("mode=sde\ngamma=20000\nds=1e-5").unwrap_err();
        assert_eq!((err.code(), err.line), ("OUT_OF_RANGE", Some(3)));
    }

    #[test]
    fn range_checks_point_at_lines() {
        for (text, field, line) in [
            ("mode=discrete\np=0", "p", 2),
            ("mode=discrete\nlambda=-1", "lambda", 2),
            ("mode=limit\n\nn_traj=0", "n_traj", 3),
            ("mode=limit\nhorizon=0", "horizon", 2),
            (
                "mode=discrete\neffective_time_normalization=3",
                "effective_time_normalization",
                2,
            ),
        ] {
            let err = parse_config(text).unwrap_err();
            assert_eq!(err.line, Some(line), "{text}");
            assert!(
                matches!(&err.kind, ConfigErrorKind::OutOfRange { field: f, .. } if f == field),
                "{err}"
            );
        }
    }

    #[test]
    fn mode_defaults() {
        let levy = parse_config("mode=stats-levy").unwrap();
        assert_eq!(levy.limit.boundaries, Boundaries::LowerOnly);
        assert_eq!(levy.params.q0, 0.0);
        let spikes = parse_config("mode=stats-spikes").unwrap();
        assert_eq!(spikes.params.gamma, Gamma::Finite(800.0));
        let norm = parse_config("mode=discrete\neffective_time_normalization=1").unwrap();
        assert_eq!(norm.effective_time_normalization.constant(), 1.0);
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_config("mode=stats-excursions\nsigmas=0.5,1,2\nmaster_seed=7").unwrap();
        let text: String = cfg.echo().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
