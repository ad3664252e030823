//! Flat `key = value` experiment files.
//!
//! One assignment per line, dotted keys, `#` starts a comment. Lists are
//! comma separated. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crossing_core::arrivals::{matern_rate_for_intensity, ArrivalKind};
use crossing_core::baseline::LightConfig;
use crossing_core::coordinator::{LaneArrivals, ScenarioConfig};
use crossing_core::motion::{Planner, DEFAULT_GRID};
use crossing_core::polling::PollingPolicy;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {key}: {msg}")]
    Field { line: usize, key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// Keys accepted in a config file; `sweep.param` must name a numeric one.
pub const KEYS: &[&str] = &[
    "params.l",
    "params.w",
    "params.v_m",
    "params.a_m",
    "params.road_len",
    "arrivals.kind",
    "arrivals.lambda",
    "arrivals.intensity",
    "arrivals.b",
    "sim.horizon",
    "sim.dt",
    "sim.seed",
    "sim.policy",
    "sim.k",
    "sim.collision_check",
    "sim.assumption_override",
    "sim.planner",
    "sim.grid",
    "sim.check_truncation",
    "light.green",
    "light.yellow",
    "sweep.param",
    "sweep.values",
    "sweep.seeds",
    "output.dir",
];

const SWEEPABLE: &[&str] = &[
    "params.l",
    "params.w",
    "params.v_m",
    "params.a_m",
    "params.road_len",
    "arrivals.lambda",
    "arrivals.intensity",
    "arrivals.b",
    "sim.horizon",
    "sim.k",
];

#[derive(Debug, Clone)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Raw assignments (key -> (line, value)).
    entries: BTreeMap<String, (usize, String)>,
    pub scenario: ScenarioConfig,
    pub greens: Vec<f64>,
    pub yellow: Option<f64>,
    pub sweep: Option<Sweep>,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, msg: format!("expected `key = value`, got `{body}`") });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::Syntax { line, msg: format!("unknown key `{key}`") });
            }
            if value.is_empty() {
                return Err(ConfigError::Field { line, key: key.into(), msg: "missing value".into() });
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line, value.to_string())) {
                return Err(ConfigError::Field { line, key: key.into(), msg: format!("already set on line {first}") });
            }
        }
        Self::build(entries)
    }

    fn build(entries: BTreeMap<String, (usize, String)>) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig {
            scenario: ScenarioConfig::default(),
            greens: Vec::new(),
            yellow: None,
            sweep: None,
            seeds: Vec::new(),
            out_dir: None,
            entries,
        };
        let entries = cfg.entries.clone();
        let get = |k: &str| entries.get(k).map(|(l, v)| (*l, v.as_str()));
        apply_scenario(&mut cfg.scenario, &entries, None)?;

        if let Some((line, v)) = get("light.green") {
            cfg.greens = list(line, "light.green", v, number)?;
            if let Some(&g) = cfg.greens.iter().find(|&&g| !(g > 0.0 && g.is_finite())) {
                return Err(field(line, "light.green", format!("green time must be positive, got {g}")));
            }
        }
        if let Some((line, v)) = get("light.yellow") {
            let y = number(line, "light.yellow", v)?;
            let green = cfg.greens.first().copied().unwrap_or(1.0);
            LightConfig::with_yellow(green, y, &cfg.scenario.params)
                .map_err(|e| field(line, "light.yellow", e.to_string()))?;
            cfg.yellow = Some(y);
        }
        match (get("sweep.param"), get("sweep.values")) {
            (Some((line, p)), Some((vline, vals))) => {
                if !SWEEPABLE.contains(&p) {
                    return Err(field(
                        line,
                        "sweep.param",
                        format!("`{p}` cannot be swept; use one of {}", SWEEPABLE.join(", ")),
                    ));
                }
                let rival = match p {
                    "arrivals.lambda" => Some("arrivals.intensity"),
                    "arrivals.intensity" => Some("arrivals.lambda"),
                    _ => None,
                };
                if let Some(other) = rival.filter(|o| entries.contains_key(*o)) {
                    return Err(field(line, "sweep.param", format!("`{p}` conflicts with `{other}` set in the file")));
                }
                let values = list(vline, "sweep.values", vals, number)?;
                if values.is_empty() {
                    return Err(field(vline, "sweep.values", "empty list".into()));
                }
                for &v in &values {
                    let mut probe = cfg.scenario.clone();
                    apply_scenario(&mut probe, &entries, Some((p, v))).map_err(|e| match e {
                        ConfigError::Field { msg, .. } => field(vline, "sweep.values", format!("value {v}: {msg}")),
                        other => other,
                    })?;
                    probe.validate().map_err(|e| field(vline, "sweep.values", format!("value {v}: {e}")))?;
                }
                cfg.sweep = Some(Sweep { param: p.to_string(), values });
            }
            (Some((line, _)), None) => return Err(field(line, "sweep.param", "needs sweep.values".into())),
            (None, Some((line, _))) => return Err(field(line, "sweep.values", "needs sweep.param".into())),
            (None, None) => {}
        }
        if let Some((line, v)) = get("sweep.seeds") {
            cfg.seeds = list(line, "sweep.seeds", v, integer)?;
            let mut sorted = cfg.seeds.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(field(line, "sweep.seeds", "seeds must be distinct".into()));
            }
        } else {
            cfg.seeds = vec![cfg.scenario.seed];
        }
        if let Some((_, v)) = get("output.dir") {
            cfg.out_dir = Some(PathBuf::from(v));
        }
        if cfg.sweep.is_none() {
            cfg.scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Replaces the seed everywhere it is used.
    pub fn override_seed(&mut self, seed: u64) {
        self.scenario.seed = seed;
        self.seeds = vec![seed];
    }

    /// Scenario with one sweep value applied.
    pub fn scenario_for(&self, value: Option<f64>, seed: u64) -> ScenarioConfig {
        let mut sc = self.scenario.clone();
        if let (Some(sw), Some(v)) = (&self.sweep, value) {
            apply_scenario(&mut sc, &self.entries, Some((&sw.param, v))).expect("sweep values were validated");
        }
        sc.seed = seed;
        sc
    }

    pub fn light(&self, green: f64) -> LightConfig {
        match self.yellow {
            Some(y) => LightConfig { green, yellow: y },
            None => LightConfig::new(green, &self.scenario.params),
        }
    }

    /// Short digest of the effective scenario, stable across runs.
    pub fn hash(&self, scenario: &ScenarioConfig) -> String {
        let mut h = Sha256::new();
        h.update(canonical(scenario).as_bytes());
        for g in &self.greens {
            h.update(format!("light.green={g}\n").as_bytes());
        }
        if let Some(y) = self.yellow {
            h.update(format!("light.yellow={y}\n").as_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Every field of the scenario in a fixed order.
pub fn canonical(sc: &ScenarioConfig) -> String {
    let p = &sc.params;
    let lane = |a: &LaneArrivals| match a.kind {
        ArrivalKind::Poisson => format!("poisson lambda={:?}", a.lambda),
        ArrivalKind::Matern { b } => format!("matern lambda={:?} b={b:?}", a.lambda),
    };
    format!(
        "l={:?}\nw={:?}\nv_m={:?}\na_m={:?}\nroad_len={:?}\nlane1={}\nlane2={}\npolicy={}\nhorizon={:?}\ndt={:?}\nseed={}\ncollision_check={}\noverride={}\nplanner={:?}\ntruncation={}\n",
        p.l,
        p.w,
        p.v_m,
        p.a_m,
        p.road_len,
        lane(&sc.arrivals[0]),
        lane(&sc.arrivals[1]),
        sc.policy,
        sc.horizon,
        sc.dt_sim,
        sc.seed,
        sc.collision_check,
        sc.assumption_override,
        sc.planner,
        sc.check_truncation,
    )
}

fn field(line: usize, key: &str, msg: String) -> ConfigError {
    ConfigError::Field { line, key: key.into(), msg }
}

fn number(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(field(line, key, format!("expected a number, got `{v}`"))),
    }
}

fn integer(line: usize, key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse::<u64>().map_err(|_| field(line, key, format!("expected a non-negative integer, got `{v}`")))
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(field(line, key, format!("expected true or false, got `{v}`"))),
    }
}

fn list<T>(
    line: usize,
    key: &str,
    v: &str,
    item: impl Fn(usize, &str, &str) -> Result<T, ConfigError>,
) -> Result<Vec<T>, ConfigError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| item(line, key, s)).collect()
}

/// Applies the scenario keys, with `swept` replacing one numeric key.
fn apply_scenario(
    sc: &mut ScenarioConfig,
    entries: &BTreeMap<String, (usize, String)>,
    swept: Option<(&str, f64)>,
) -> Result<(), ConfigError> {
    let sweep_line = 0;
    let num = |key: &str| -> Result<Option<(usize, f64)>, ConfigError> {
        if let Some((k, v)) = swept {
            if k == key {
                return Ok(Some((sweep_line, v)));
            }
        }
        match entries.get(key) {
            Some((line, v)) => Ok(Some((*line, number(*line, key, v)?))),
            None => Ok(None),
        }
    };
    let text = |key: &str| entries.get(key).map(|(l, v)| (*l, v.as_str()));

    let p = &mut sc.params;
    if let Some((_, v)) = num("params.l")? {
        p.l = v;
    }
    if let Some((_, v)) = num("params.w")? {
        p.w = v;
    }
    if let Some((_, v)) = num("params.v_m")? {
        p.v_m = v;
    }
    if let Some((_, v)) = num("params.a_m")? {
        p.a_m = v;
    }
    if let Some((_, v)) = num("params.road_len")? {
        p.road_len = v;
    }
    if let Err(e) = p.validate() {
        let line = entries
            .keys()
            .filter(|k| k.starts_with("params."))
            .filter_map(|k| entries.get(k))
            .map(|e| e.0)
            .max()
            .unwrap_or(0);
        return Err(field(line, "params", e.to_string()));
    }

    let kind = match text("arrivals.kind") {
        None | Some((_, "matern")) => "matern",
        Some((_, "poisson")) => "poisson",
        Some((line, other)) => {
            return Err(field(line, "arrivals.kind", format!("expected matern or poisson, got `{other}`")))
        }
    };
    let b = match num("arrivals.b")? {
        Some((line, b)) if !(b > 0.0) => return Err(field(line, "arrivals.b", format!("must be positive, got {b}"))),
        Some((_, b)) => b,
        None => p.service_time(),
    };
    let lambda = match (num("arrivals.lambda")?, num("arrivals.intensity")?) {
        (Some((line, _)), Some(_)) => {
            return Err(field(
                line,
                "arrivals.lambda",
                "set either arrivals.lambda or arrivals.intensity, not both".into(),
            ))
        }
        (Some((line, l)), None) => nonneg(line, "arrivals.lambda", l)?,
        (None, Some((line, i))) => {
            let i = nonneg(line, "arrivals.intensity", i)?;
            if kind == "poisson" {
                i
            } else {
                matern_rate_for_intensity(i, b).map_err(|e| field(line, "arrivals.intensity", e.to_string()))?
            }
        }
        (None, None) => sc.arrivals[0].lambda,
    };
    let lane = if kind == "poisson" { LaneArrivals::poisson(lambda) } else { LaneArrivals::matern(lambda, b) };
    sc.arrivals = [lane; 2];

    if let Some((line, v)) = num("sim.horizon")? {
        sc.horizon = nonneg(line, "sim.horizon", v)?;
    }
    if let Some((line, v)) = num("sim.dt")? {
        if !(v > 0.0) {
            return Err(field(line, "sim.dt", format!("must be positive, got {v}")));
        }
        sc.dt_sim = v;
    }
    if let Some((line, v)) = text("sim.seed") {
        sc.seed = integer(line, "sim.seed", v)?;
    }
    let k = match num("sim.k")? {
        Some((line, k)) if k < 1.0 || k.fract() != 0.0 => {
            return Err(field(line, "sim.k", format!("must be a positive integer, got {k}")))
        }
        Some((_, k)) => Some(k as u32),
        None => None,
    };
    sc.policy = match text("sim.policy") {
        None | Some((_, "exhaustive")) => PollingPolicy::Exhaustive,
        Some((_, "gated")) => PollingPolicy::Gated,
        Some((line, "k_limited")) => {
            PollingPolicy::KLimited(k.ok_or_else(|| field(line, "sim.policy", "k_limited needs sim.k".into()))?)
        }
        Some((line, other)) => {
            return Err(field(line, "sim.policy", format!("expected exhaustive, gated or k_limited, got `{other}`")))
        }
    };
    if let Some((line, v)) = text("sim.collision_check") {
        sc.collision_check = boolean(line, "sim.collision_check", v)?;
    }
    if let Some((line, v)) = text("sim.assumption_override") {
        sc.assumption_override = boolean(line, "sim.assumption_override", v)?;
    }
    if let Some((line, v)) = text("sim.check_truncation") {
        sc.check_truncation = boolean(line, "sim.check_truncation", v)?;
    }
    let grid = match text("sim.grid") {
        Some((line, v)) => match integer(line, "sim.grid", v)? {
            0 => return Err(field(line, "sim.grid", "must be positive".into())),
            g => g as usize,
        },
        None => DEFAULT_GRID,
    };
    sc.planner = match text("sim.planner") {
        None | Some((_, "envelope")) => Planner::Envelope,
        Some((_, "lp")) => Planner::Lp { grid },
        Some((line, other)) => {
            return Err(field(line, "sim.planner", format!("expected envelope or lp, got `{other}`")))
        }
    };
    Ok(())
}

fn nonneg(line: usize, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(field(line, key, format!("must be non-negative, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_vehicle() {
        let cfg = ExperimentConfig::parse("").unwrap();
        let p = cfg.scenario.params;
        assert_eq!((p.l, p.w, p.v_m, p.a_m, p.road_len), (2.0, 1.0, 10.0, 4.0, 50.0));
        assert_eq!(cfg.seeds, vec![0]);
    }

    #[test]
    fn parses_a_full_file() {
        let text = "\
# scenario
params.road_len = 65   # metres
arrivals.kind = matern
arrivals.intensity = 1.5
sim.horizon = 300
sim.policy = k_limited
sim.k = 4
light.green = 5, 10, 15
sweep.param = params.road_len
sweep.values = 50, 65, 80
sweep.seeds = 1, 2, 3
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.scenario.params.road_len, 65.0);
        assert_eq!(cfg.scenario.policy, PollingPolicy::KLimited(4));
        assert_eq!(cfg.greens, vec![5.0, 10.0, 15.0]);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        let sc = cfg.scenario_for(Some(80.0), 2);
        assert_eq!((sc.params.road_len, sc.seed), (80.0, 2));
        let rate = sc.arrivals[0].spec(1.0, 0).intensity();
        assert!((rate - 1.5).abs() < 1e-12);
    }

    #[test]
    fn errors_name_the_line_and_key() {
        let e = ExperimentConfig::parse("sim.horizon = 10\nparams.v_m = fast\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: params.v_m: expected a number, got `fast`");
        let e = ExperimentConfig::parse("bogus = 1\n").unwrap_err();
        assert!(e.to_string().starts_with("line 1: unknown key"));
        let e = ExperimentConfig::parse("sim.seed = 1\nsim.seed = 2\n").unwrap_err();
        assert!(e.to_string().contains("already set on line 1"));
        let e = ExperimentConfig::parse("sweep.param = sim.policy\nsweep.values = 1\n").unwrap_err();
        assert!(e.to_string().contains("cannot be swept"));
        let e = ExperimentConfig::parse("sweep.seeds = 1, 1\n").unwrap_err();
        assert!(e.to_string().contains("distinct"));
        let e = ExperimentConfig::parse("arrivals.intensity = 3\n").unwrap_err();
        assert!(e.to_string().starts_with("line 1: arrivals.intensity"));
    }

    #[test]
    fn short_road_needs_the_override() {
        assert!(matches!(ExperimentConfig::parse("params.road_len = 30\n"), Err(ConfigError::Invalid(_))));
        assert!(ExperimentConfig::parse("params.road_len = 30\nsim.assumption_override = true\n").is_ok());
    }

    #[test]
    fn bad_sweep_values_are_caught_up_front() {
        let e = ExperimentConfig::parse("sweep.param = params.road_len\nsweep.values = 50, 20\n").unwrap_err();
        assert!(e.to_string().starts_with("line 2: sweep.values: value 20"), "{e}");
    }

    #[test]
    fn hash_tracks_the_effective_scenario() {
        let a = ExperimentConfig::parse("sim.seed = 1\n").unwrap();
        let b = ExperimentConfig::parse("sim.seed = 1\n# same\n").unwrap();
        let c = ExperimentConfig::parse("sim.seed = 2\n").unwrap();
        assert_eq!(a.hash(&a.scenario), b.hash(&b.scenario));
        assert_ne!(a.hash(&a.scenario), c.hash(&c.scenario));
        assert_eq!(a.hash(&a.scenario).len(), 16);
    }
}
