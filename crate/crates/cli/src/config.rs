//! Experiment configuration: flat `key = value` files overridable by
//! command-line flags, with validation and defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Se,
    Threshold,
    Chart,
    Selftest,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Simulate => "simulate",
            Mode::Se => "se",
            Mode::Threshold => "threshold",
            Mode::Chart => "chart",
            Mode::Selftest => "selftest",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Linear,
    OneBit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    Gaussian,
    Constant,
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Goamp,
    Oamp,
    GampAblation,
    Fista,
    Omp,
    Biht,
    Glasso,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Goamp => "goamp",
            Algorithm::Oamp => "oamp",
            Algorithm::GampAblation => "gamp-ablation",
            Algorithm::Fista => "fista",
            Algorithm::Omp => "omp",
            Algorithm::Biht => "biht",
            Algorithm::Glasso => "glasso",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "goamp" => Ok(Algorithm::Goamp),
            "oamp" => Ok(Algorithm::Oamp),
            "gamp-ablation" => Ok(Algorithm::GampAblation),
            "fista" => Ok(Algorithm::Fista),
            "omp" => Ok(Algorithm::Omp),
            "biht" => Ok(Algorithm::Biht),
            "glasso" => Ok(Algorithm::Glasso),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }

    /// Paper-matched default iteration budgets.
    pub fn default_iterations(&self, k: usize) -> usize {
        match self {
            Algorithm::Goamp | Algorithm::Oamp | Algorithm::GampAblation => 20,
            Algorithm::Fista => 1000,
            Algorithm::Omp => k,
            Algorithm::Biht => 20,
            Algorithm::Glasso => 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub channel: ChannelKind,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub deltas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub sigma2: f64,
    pub law: LawKind,
    pub power: f64,
    pub algorithms: Vec<Algorithm>,
    /// Per-algorithm iteration overrides (`iters_<algo>` keys).
    pub iteration_overrides: BTreeMap<Algorithm, usize>,
    pub se_iterations: usize,
    pub trials: usize,
    pub theta_x: f64,
    pub theta_z: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub trace: bool,
    pub quantiles: Vec<f64>,
    /// Spectrum atoms for SE modes (defaults to `m`).
    pub atoms: usize,
    /// Lambda grid size for the FISTA/GLasso pilot search.
    pub lambda_grid: usize,
    /// Pilot trials used to pick lambda per grid point.
    pub lambda_pilots: usize,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn iterations_for(&self, algo: Algorithm) -> usize {
        self.iteration_overrides
            .get(&algo)
            .copied()
            .unwrap_or_else(|| algo.default_iterations(self.k))
    }

    pub fn delta(&self) -> f64 {
        goamp_core::model::delta_of(self.n, self.k, self.m).unwrap_or(f64::NAN)
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parse a subcommand plus `--key value` flags (and optional `--config FILE`)
/// into a validated configuration.
pub fn parse_config(mode: Mode, args: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut pairs: Vec<(String, String, String)> = Vec::new(); // (key, value, origin)

    // collect flags first to find --config
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let Some(stripped) = arg.strip_prefix("--") else {
            return Err(ConfigError(format!("unexpected positional argument '{arg}'")));
        };
        let (key, value) = if let Some((k, v)) = stripped.split_once('=') {
            (k.to_string(), v.to_string())
        } else if stripped == "trace" {
            (stripped.to_string(), "true".to_string())
        } else {
            i += 1;
            let v = args
                .get(i)
                .ok_or_else(|| ConfigError(format!("flag --{stripped} needs a value")))?;
            (stripped.to_string(), v.clone())
        };
        flags.push((key, value));
        i += 1;
    }

    for (key, value) in &flags {
        if key == "config" {
            let text = std::fs::read_to_string(value)
                .map_err(|e| ConfigError(format!("cannot read config file {value}: {e}")))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    ConfigError(format!("{value}:{}: expected 'key = value'", lineno + 1))
                })?;
                pairs.push((
                    k.trim().to_string(),
                    v.trim().to_string(),
                    format!("{value}:{}", lineno + 1),
                ));
            }
        }
    }
    // flags override file entries
    for (key, value) in flags {
        if key != "config" {
            pairs.push((key.clone(), value, format!("flag --{key}")));
        }
    }

    build(mode, pairs)
}

fn build(
    mode: Mode,
    pairs: Vec<(String, String, String)>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig {
        mode,
        channel: ChannelKind::Linear,
        n: 1 << 16,
        k: 16,
        m: 200,
        deltas: vec![],
        kappas: vec![1.0],
        sigma2: f64::NAN,
        law: LawKind::Gaussian,
        power: 1.0,
        algorithms: vec![],
        iteration_overrides: BTreeMap::new(),
        se_iterations: 50,
        trials: 0,
        theta_x: 1.0,
        theta_z: 1.0,
        seed: 0,
        out: None,
        workers: None,
        trace: false,
        quantiles: vec![0.5],
        atoms: 0,
        lambda_grid: 15,
        lambda_pilots: 2,
        warnings: vec![],
    };
    let mut snr_db: Option<f64> = None;
    let mut sigma2: Option<f64> = None;
    let mut trials_set = false;
    let mut algos_set = false;

    let err = |origin: &str, msg: String| ConfigError(format!("{origin}: {msg}"));
    let parse_f64 = |v: &str, origin: &str| {
        v.parse::<f64>().map_err(|_| err(origin, format!("'{v}' is not a number")))
    };
    let parse_usize = |v: &str, origin: &str| {
        v.parse::<usize>().map_err(|_| err(origin, format!("'{v}' is not a count")))
    };

    for (key, value, origin) in &pairs {
        let origin = origin.as_str();
        match key.as_str() {
            "channel" => {
                cfg.channel = match value.as_str() {
                    "linear" => ChannelKind::Linear,
                    "onebit" | "one-bit" | "1bit" => ChannelKind::OneBit,
                    other => return Err(err(origin, format!("unknown channel '{other}'"))),
                }
            }
            "n" => cfg.n = parse_usize(value, origin)?,
            "k" => cfg.k = parse_usize(value, origin)?,
            "m" => cfg.m = parse_usize(value, origin)?,
            "delta" | "deltas" => {
                cfg.deltas = parse_list(value).map_err(|e| err(origin, e))?;
            }
            "kappa" | "kappas" => {
                cfg.kappas = parse_list(value).map_err(|e| err(origin, e))?;
            }
            "snr_db" => snr_db = Some(parse_f64(value, origin)?),
            "sigma2" => sigma2 = Some(parse_f64(value, origin)?),
            "law" => {
                cfg.law = match value.as_str() {
                    "gaussian" => LawKind::Gaussian,
                    "constant" => LawKind::Constant,
                    "twopoint" | "two-point" => LawKind::TwoPoint,
                    other => return Err(err(origin, format!("unknown law '{other}'"))),
                }
            }
            "power" => cfg.power = parse_f64(value, origin)?,
            "algorithms" => {
                algos_set = true;
                cfg.algorithms.clear();
                for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    cfg.algorithms.push(Algorithm::parse(part).map_err(|e| err(origin, e))?);
                }
            }
            "se_iterations" => cfg.se_iterations = parse_usize(value, origin)?,
            "trials" => {
                cfg.trials = parse_usize(value, origin)?;
                trials_set = true;
            }
            "theta_x" => cfg.theta_x = parse_f64(value, origin)?,
            "theta_z" => cfg.theta_z = parse_f64(value, origin)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| err(origin, format!("'{value}' is not a seed")))?
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            "workers" => cfg.workers = Some(parse_usize(value, origin)?),
            "trace" => {
                cfg.trace = value == "true" || value == "1";
            }
            "quantiles" => {
                cfg.quantiles = parse_list(value).map_err(|e| err(origin, e))?;
            }
            "atoms" => cfg.atoms = parse_usize(value, origin)?,
            "lambda_grid" => cfg.lambda_grid = parse_usize(value, origin)?,
            "lambda_pilots" => cfg.lambda_pilots = parse_usize(value, origin)?,
            other => {
                if let Some(algo) = other.strip_prefix("iters_") {
                    let algo = Algorithm::parse(algo).map_err(|e| err(origin, e))?;
                    cfg.iteration_overrides.insert(algo, parse_usize(value, origin)?);
                } else {
                    return Err(err(origin, format!("unknown key '{other}'")));
                }
            }
        }
    }

    // SNR and sigma2 are mutually exclusive; default is 40 dB.
    cfg.sigma2 = match (snr_db, sigma2) {
        (Some(_), Some(_)) => {
            return Err(ConfigError("snr_db and sigma2 are mutually exclusive".into()))
        }
        (Some(db), None) => cfg.power * 10f64.powf(-db / 10.0),
        (None, Some(s2)) => s2,
        (None, None) => cfg.power * 1e-4,
    };
    if cfg.sigma2 < 0.0 {
        return Err(ConfigError("sigma2 must be nonnegative".into()));
    }

    if !trials_set {
        cfg.trials = 100;
        cfg.warnings.push("trials not set; defaulting to 100".into());
    }
    if cfg.trials == 0 {
        return Err(ConfigError("trials must be at least 1".into()));
    }
    if !algos_set {
        cfg.algorithms = vec![Algorithm::Goamp];
    }
    if mode == Mode::Simulate && cfg.algorithms.is_empty() {
        return Err(ConfigError("at least one algorithm required".into()));
    }
    if cfg.k == 0 || cfg.k >= cfg.n {
        return Err(ConfigError(format!("need 1 <= k < n, got k={}, n={}", cfg.k, cfg.n)));
    }
    if cfg.m == 0 || cfg.m > cfg.n {
        return Err(ConfigError(format!("need 1 <= m <= n, got m={}, n={}", cfg.m, cfg.n)));
    }
    if cfg.kappas.is_empty() || cfg.kappas.iter().any(|&k| k < 1.0) {
        return Err(ConfigError("kappa list must be nonempty with values >= 1".into()));
    }
    if !(0.0 < cfg.theta_x && cfg.theta_x <= 1.0 && 0.0 < cfg.theta_z && cfg.theta_z <= 1.0) {
        return Err(ConfigError("damping factors must lie in (0, 1]".into()));
    }
    if cfg.quantiles.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(ConfigError("quantiles must lie in [0, 1]".into()));
    }
    if cfg.atoms == 0 {
        cfg.atoms = cfg.m;
    }
    if mode == Mode::Simulate
        && cfg.channel == ChannelKind::OneBit
        && cfg.algorithms.iter().any(|a| matches!(a, Algorithm::Oamp))
    {
        return Err(ConfigError("oamp requires the linear channel".into()));
    }
    if mode == Mode::Threshold && cfg.law == LawKind::Gaussian {
        return Err(ConfigError(
            "threshold mode needs a law with positive essential minimum (u_min > 0); \
             the Gaussian law has u_min = 0, so the threshold is undefined"
                .into(),
        ));
    }
    if (mode == Mode::Se || mode == Mode::Chart) && cfg.deltas.is_empty() {
        cfg.deltas = vec![cfg.delta()];
    }
    Ok(cfg)
}

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(part.parse::<f64>().map_err(|_| format!("'{part}' is not a number"))?);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

pub fn channel_of(cfg: &ExperimentConfig) -> goamp_core::MeasurementChannel {
    match cfg.channel {
        ChannelKind::Linear => goamp_core::MeasurementChannel::Linear { sigma2: cfg.sigma2 },
        ChannelKind::OneBit => goamp_core::MeasurementChannel::OneBitSign { sigma2: cfg.sigma2 },
    }
}

pub fn law_of(cfg: &ExperimentConfig) -> goamp_core::NonzeroLaw {
    match cfg.law {
        LawKind::Gaussian => goamp_core::NonzeroLaw::Gaussian { power: cfg.power },
        LawKind::Constant => goamp_core::NonzeroLaw::Constant { power: cfg.power },
        LawKind::TwoPoint => goamp_core::NonzeroLaw::TwoPoint { power: cfg.power },
    }
}
