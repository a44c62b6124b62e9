//! Config-driven runs for the `ctrw` binary.
//!
//! A run is described by a TOML document:
//!
//! ```toml
//! command = "simulate"        # simulate | solve-forward | solve-backward | validate
//!
//! [model]
//! preset = "subdiffusion"     # subdiffusion | variable-order | levy-walk
//! beta = 0.5
//! drift = 0.0
//!
//! [start]
//! x0 = 0.0
//! s0 = 0.0
//!
//! [probe]
//! times = [1.0, 2.0]
//!
//! [ensemble]
//! n_paths = 1000
//! seed = 7
//! ```
//!
//! Every artifact name carries the first 16 hex digits of the config hash,
//! and every JSON artifact carries the full hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backward::{terminal_expectation, DEFAULT_BUMP_WIDTHS};
use crate::error::{Error, Result};
use crate::forward::{solution_moments, solve_fpe, suggested_half_width, InitialMeasure};
use crate::grid::Grid1d;
use crate::limit_sampler::DEFAULT_DR;
use crate::model::{
    levy_walk_preset, subdiffusion_preset, variable_order_preset, DirectionWeights, ModelSpec, ScalarField,
};
use crate::validation::{mc_law_estimate, subdiffusion_suite, Engine, Ensemble, SuiteConfig};

/// Default padding of the time window around `[s0, horizon]`.
pub const DEFAULT_PADDING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    SolveForward,
    SolveBackward,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Subdiffusion,
    VariableOrder,
    LevyWalk,
}

/// Model block; keys of other presets are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub preset: Preset,
    /// Order for `subdiffusion` and `levy-walk`.
    pub beta: Option<f64>,
    /// Constant drift (`subdiffusion`, `levy-walk`).
    #[serde(default)]
    pub drift: f64,
    /// `beta(x) = beta_max - (beta_max - beta_min) exp(-((x - center) / width)^2)`.
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    #[serde(default)]
    pub center: f64,
    pub width: Option<f64>,
    /// Probability of the `+1` direction for `levy-walk`.
    pub p_plus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StartBlock {
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub s0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeBlock {
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridBlock {
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    /// Spatial half-width around `x0`; derived from the model when absent.
    pub extent: Option<f64>,
    /// `[a, b)`; `s0` and the horizon padded by `padding` when absent.
    pub window: Option<[f64; 2]>,
    pub padding: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    #[default]
    Limit,
    Chain,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnsembleBlock {
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub engine: EngineKind,
    pub dr: Option<f64>,
    /// Chain scale for `engine = "chain"`.
    pub c: Option<f64>,
    #[serde(default)]
    pub octrw: bool,
}

/// Terminal profile `f` for `solve-backward`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    One,
    Gaussian { center: f64, scale: f64 },
    Indicator { lo: f64, hi: f64 },
}

impl Profile {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Profile::One => 1.0,
            Profile::Gaussian { center, scale } => (-0.5 * ((y - center) / scale).powi(2)).exp(),
            Profile::Indicator { lo, hi } => f64::from(u8::from((lo..=hi).contains(&y))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardBlock {
    pub f: Profile,
    pub widths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBlock {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Validated run description with defaults filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelBlock,
    #[serde(default)]
    pub start: StartBlock,
    pub probe: Option<ProbeBlock>,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub ensemble: EnsembleBlock,
    pub backward: Option<BackwardBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Unknown-key policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Lenient,
}

/// Parsed config together with non-fatal findings.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

/// Parses and validates a config. Unknown keys are errors in strict mode
/// and warnings in lenient mode.
pub fn parse_config(text: &str, mode: Mode) -> Result<Parsed> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config(format!("malformed config: {e}")))?;
    let mut unknown = Vec::new();
    let config: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| Error::config(format!("schema violation: {e}")))?;
    let mut warnings = Vec::new();
    if !unknown.is_empty() {
        let msg = format!("unknown keys: {}", unknown.join(", "));
        match mode {
            Mode::Strict => return Err(Error::config(msg)),
            Mode::Lenient => warnings.push(msg),
        }
    }
    let config = fill_defaults(config)?;
    validate(&config)?;
    Ok(Parsed { config, warnings })
}

fn fill_defaults(mut c: RunConfig) -> Result<RunConfig> {
    let padding = *c.grid.padding.get_or_insert(DEFAULT_PADDING);
    if !(padding >= 0.0) {
        return Err(Error::config("grid.padding must be nonnegative"));
    }
    c.ensemble.dr.get_or_insert(DEFAULT_DR);
    if let Some(p) = &c.probe {
        if let Some(&top) = p.times.iter().max_by(|a, b| a.total_cmp(b)) {
            if c.grid.window.is_none() {
                let span = (top - c.start.s0).max(0.0);
                let mut hi = top + padding * span;
                if c.command == Command::SolveBackward {
                    let widths = c.backward.as_ref().and_then(|b| b.widths.clone());
                    let widest = widths
                        .unwrap_or(DEFAULT_BUMP_WIDTHS.to_vec())
                        .into_iter()
                        .fold(0.0, f64::max);
                    hi = hi.max(top + widest + padding * widest + c.grid.dt.unwrap_or(0.0) * 2.0);
                }
                c.grid.window = Some([c.start.s0 - padding * span, hi]);
            }
        }
    }
    Ok(c)
}

fn need<T: Copy>(v: Option<T>, key: &str, why: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(format!("missing key `{key}` ({why})")))
}

fn validate(c: &RunConfig) -> Result<()> {
    let m = &c.model;
    let order_ok = |b: f64| b > 0.0 && b < 1.0;
    match m.preset {
        Preset::Subdiffusion | Preset::LevyWalk => {
            let beta = need(m.beta, "model.beta", "order of the waiting-time tail")?;
            if !order_ok(beta) {
                return Err(Error::config(format!(
                    "model.beta = {beta} must lie in the range (0, 1)"
                )));
            }
        }
        Preset::VariableOrder => {
            let lo = need(m.beta_min, "model.beta_min", "minimum of beta(x)")?;
            let hi = need(m.beta_max, "model.beta_max", "maximum of beta(x)")?;
            let w = need(m.width, "model.width", "length scale of beta(x)")?;
            if !(order_ok(lo) && order_ok(hi) && lo <= hi) {
                return Err(Error::config(format!(
                    "model.beta_min = {lo}, model.beta_max = {hi} must satisfy 0 < beta_min <= beta_max < 1"
                )));
            }
            if !(w > 0.0) {
                return Err(Error::config("model.width must be positive"));
            }
        }
    }
    if let Some(p) = m.p_plus {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config("model.p_plus must lie in [0, 1]"));
        }
    }
    if !m.drift.is_finite() || !c.start.x0.is_finite() || !c.start.s0.is_finite() {
        return Err(Error::config("model.drift, start.x0 and start.s0 must be finite"));
    }
    for (key, v) in [
        ("grid.dx", c.grid.dx),
        ("grid.dt", c.grid.dt),
        ("grid.extent", c.grid.extent),
        ("ensemble.dr", c.ensemble.dr),
    ] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{key} = {v} must be positive")));
            }
        }
    }
    let stochastic = matches!(c.command, Command::Simulate | Command::Validate);
    if stochastic {
        need(c.ensemble.seed, "ensemble.seed", "required for stochastic commands")?;
        let n = need(c.ensemble.n_paths, "ensemble.n_paths", "ensemble size")?;
        if n == 0 {
            return Err(Error::config("ensemble.n_paths must be at least 1"));
        }
    }
    if c.ensemble.engine == EngineKind::Chain {
        let cc = need(c.ensemble.c, "ensemble.c", "chain scale for engine = \"chain\"")?;
        if !(cc > 0.0) {
            return Err(Error::config("ensemble.c must be positive"));
        }
    }
    if c.command != Command::Validate {
        let probe = c
            .probe
            .as_ref()
            .ok_or_else(|| Error::config("missing block `[probe]` with `times`"))?;
        if probe.times.is_empty() || probe.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("probe.times must be nonempty and strictly increasing"));
        }
        let [a, b] = c.grid.window.expect("window filled from probe times");
        let (s0, top) = (c.start.s0, *probe.times.last().unwrap());
        if !(top > s0) {
            return Err(Error::config(format!("probe.times must exceed start.s0 = {s0}")));
        }
        if !(a <= s0 && s0 < top && top < b) {
            return Err(Error::config(format!(
                "grid.window [{a}, {b}) must satisfy a <= s0 < horizon < b (s0 = {s0}, horizon = {top})"
            )));
        }
    }
    match c.command {
        Command::SolveForward => {
            need(c.grid.dx, "grid.dx", "spatial step of the forward grid")?;
            need(c.grid.dt, "grid.dt", "time step of the forward grid")?;
        }
        Command::SolveBackward => {
            need(c.grid.dx, "grid.dx", "spatial step of the backward grid")?;
            need(c.grid.dt, "grid.dt", "time step of the backward grid")?;
            let bw = c
                .backward
                .as_ref()
                .ok_or_else(|| Error::config("missing block `[backward]` with profile `f`"))?;
            if let Some(w) = &bw.widths {
                if w.len() < 2 || w.windows(2).any(|p| !(p[1] < p[0])) || w.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::config(
                        "backward.widths must be positive and strictly decreasing",
                    ));
                }
            }
        }
        _ => {}
    }
    Ok(())
}

/// Builds the model of a config.
pub fn build_model(m: &ModelBlock) -> Result<ModelSpec> {
    match m.preset {
        Preset::Subdiffusion => subdiffusion_preset(m.beta.unwrap(), ScalarField::constant(m.drift)),
        Preset::LevyWalk => {
            let p = m.p_plus.unwrap_or(0.5);
            levy_walk_preset(
                m.beta.unwrap(),
                vec![ScalarField::constant(m.drift)],
                DirectionWeights::signs(p, 1.0 - p)?,
            )
        }
        Preset::VariableOrder => {
            let (lo, hi, c, w) = (m.beta_min.unwrap(), m.beta_max.unwrap(), m.center, m.width.unwrap());
            let field = ScalarField::spatial(move |x| hi - (hi - lo) * (-((x[0] - c) / w).powi(2)).exp());
            // max |d/dx| of the Gaussian well is sqrt(2/e) (hi - lo) / w
            let lipschitz = (hi - lo) * (2.0 / std::f64::consts::E).sqrt() / w * (1.0 + 1e-9);
            variable_order_preset(field, lipschitz)
        }
    }
}

/// SHA-256 of the canonical config, excluding the worker count and the
/// output directory (neither changes any result).
pub fn config_hash(c: &RunConfig) -> String {
    let mut canon = c.clone();
    canon.ensemble.workers = None;
    canon.output = OutputBlock::default();
    let json = serde_json::to_string(&canon).expect("config serializes");
    Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Outcome of a run: artifact paths and warnings.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub hash: String,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// False when a `validate` check failed.
    pub passed: bool,
}

#[derive(Serialize)]
struct Metadata<'a> {
    config_hash: &'a str,
    config: &'a RunConfig,
    crate_version: &'static str,
    seed: Option<u64>,
    elapsed_seconds: f64,
    warnings: &'a [String],
    extra: BTreeMap<String, serde_json::Value>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

/// Shortest round-trip decimal form, identical on every platform.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Executes a validated config, writing artifacts into `config.output.dir`.
pub fn run(config: &RunConfig, warnings: Vec<String>) -> Result<RunReport> {
    let started = Instant::now();
    let hash = config_hash(config);
    let tag = &hash[..16];
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut report = RunReport {
        hash: hash.clone(),
        artifacts: Vec::new(),
        warnings,
        passed: true,
    };
    let mut extra = BTreeMap::new();
    let spec = build_model(&config.model)?;
    let (x0, s0) = (config.start.x0, config.start.s0);
    let workers = config.ensemble.workers;

    match config.command {
        Command::Simulate => {
            let times = &config.probe.as_ref().unwrap().times;
            let engine = match config.ensemble.engine {
                EngineKind::Limit => Engine::Limit {
                    dr: config.ensemble.dr.unwrap(),
                },
                EngineKind::Chain => Engine::Chain {
                    c: config.ensemble.c.unwrap(),
                },
            };
            let ens = Ensemble {
                n_paths: config.ensemble.n_paths.unwrap(),
                seed: config.ensemble.seed.unwrap(),
                workers,
                engine,
                octrw: config.ensemble.octrw,
            };
            let law = mc_law_estimate(&spec, &[x0], s0, times, &ens)?;
            extra.insert("dropped_paths".into(), law.dropped.into());
            extra.insert("retried_paths".into(), law.retried.into());
            let path = dir.join(format!("simulate-{tag}.csv"));
            let mut w = csv_writer(&path)?;
            let mut header = vec!["path_id", "t", "x"];
            if law.y.is_some() {
                header.push("y_octrw");
            }
            w.write_record(&header)?;
            let n = law.x[0].len();
            for p in 0..n {
                for (k, t) in times.iter().enumerate() {
                    let mut row = vec![p.to_string(), num(*t), num(law.x[k].values[p])];
                    if let Some(y) = &law.y {
                        row.push(num(y[k].values[p]));
                    }
                    w.write_record(&row)?;
                }
            }
            w.flush().map_err(io_err(&path))?;
            report.artifacts.push(path);
        }
        Command::SolveForward => {
            let times = &config.probe.as_ref().unwrap().times;
            let top = *times.last().unwrap();
            let (dx, dt) = (config.grid.dx.unwrap(), config.grid.dt.unwrap());
            let half = config
                .grid
                .extent
                .unwrap_or_else(|| suggested_half_width(&spec, top - s0));
            let nx = (2.0 * half / dx).round() as usize + 1;
            let x = Grid1d::with_step(x0 - dx * (nx / 2) as f64, dx, nx)?;
            let nt = ((top - s0) / dt).round() as usize + 1;
            let t = Grid1d::with_step(s0, (top - s0) / (nt - 1) as f64, nt)?;
            let sol = solve_fpe(&spec, &InitialMeasure::Point(x0), s0, x, t, &Default::default())?;
            report.warnings.extend(sol.warnings.iter().cloned());
            let worst_leak = sol.leakage.iter().cloned().fold(0.0, f64::max);
            extra.insert("max_boundary_leakage".into(), worst_leak.into());
            extra.insert("min_density".into(), sol.min_value.into());
            let path = dir.join(format!("forward-{tag}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(["x", "t", "value"])?;
            for j in 0..t.n {
                for i in 0..x.n {
                    w.write_record([num(x.point(i)), num(t.point(j)), num(sol.measure.density[[i, j]])])?;
                }
            }
            w.flush().map_err(io_err(&path))?;
            report.artifacts.push(path);
            let path = dir.join(format!("moments-{tag}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(["t", "mean", "variance", "mass"])?;
            for j in 1..t.n {
                let m = solution_moments(&sol, t.point(j))?;
                w.write_record([num(t.point(j)), num(m.mean), num(m.variance), num(m.mass)])?;
            }
            w.flush().map_err(io_err(&path))?;
            report.artifacts.push(path);
        }
        Command::SolveBackward => {
            let times = &config.probe.as_ref().unwrap().times;
            let t_probe = times[0];
            let bw = config.backward.as_ref().unwrap();
            let widths = bw.widths.clone().unwrap_or(DEFAULT_BUMP_WIDTHS.to_vec());
            let (dx, dt) = (config.grid.dx.unwrap(), config.grid.dt.unwrap());
            let [_, b] = config.grid.window.unwrap();
            let half = config
                .grid
                .extent
                .unwrap_or_else(|| suggested_half_width(&spec, b - s0));
            let nx = (2.0 * half / dx).round() as usize + 1;
            let x = Grid1d::with_step(x0 - dx * (nx / 2) as f64, dx, nx)?;
            let ns = ((b - s0) / dt).floor() as usize + 1;
            let s = Grid1d::with_step(s0, dt, ns)?;
            let f = |y: f64| bw.f.eval(y);
            let te = terminal_expectation(&spec, &f, t_probe, x, s, &widths)?;
            report.warnings.extend(te.warnings.iter().cloned());
            extra.insert("value_at_start".into(), te.value_at(x0, s0)?.into());
            extra.insert("sweep_at_start".into(), serde_json::to_value(te.sweep_at(x0, s0)?)?);
            extra.insert("bump_widths".into(), serde_json::to_value(&widths)?);
            let path = dir.join(format!("backward-{tag}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(["x", "t", "value"])?;
            let stop = s.nearest(t_probe).unwrap_or(s.n - 1);
            for j in 0..=stop {
                for i in 0..x.n {
                    w.write_record([num(x.point(i)), num(s.point(j)), num(te.extrapolated.at(i, j))])?;
                }
            }
            w.flush().map_err(io_err(&path))?;
            report.artifacts.push(path);
        }
        Command::Validate => {
            if config.model.preset != Preset::Subdiffusion
                || config.model.beta != Some(0.5)
                || config.model.drift != 0.0
            {
                return Err(Error::unsupported(
                    "the validation suite covers driftless subdiffusion with beta = 0.5",
                ));
            }
            let suite = SuiteConfig {
                n_paths: config.ensemble.n_paths.unwrap(),
                seed: config.ensemble.seed.unwrap(),
                workers,
                dr: config.ensemble.dr.unwrap(),
                ..SuiteConfig::default()
            };
            let verdicts = subdiffusion_suite(&suite)?;
            report.passed = verdicts.iter().all(|v| v.pass);
            let path = dir.join(format!("verdicts-{tag}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(["check_id", "statistic", "threshold", "verdict"])?;
            for v in &verdicts {
                let verdict = if v.pass { "pass" } else { "fail" };
                w.write_record([v.check_id.clone(), num(v.statistic), num(v.threshold), verdict.into()])?;
            }
            w.flush().map_err(io_err(&path))?;
            report.artifacts.push(path);
            let path = dir.join(format!("verdicts-{tag}.json"));
            let body = serde_json::json!({ "config_hash": hash, "passed": report.passed, "checks": verdicts });
            fs::write(&path, serde_json::to_string_pretty(&body)?).map_err(io_err(&path))?;
            report.artifacts.push(path);
        }
    }

    let meta = Metadata {
        config_hash: &hash,
        config,
        crate_version: env!("CARGO_PKG_VERSION"),
        seed: config.ensemble.seed,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        warnings: &report.warnings,
        extra,
    };
    let path = dir.join(format!("meta-{tag}.json"));
    fs::write(&path, serde_json::to_string_pretty(&meta)?).map_err(io_err(&path))?;
    report.artifacts.push(path);
    Ok(report)
}

/// Machine-readable error record written next to the artifacts.
pub fn write_error(dir: &Path, hash: Option<&str>, err: &Error) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("error.json");
    let mut body = serde_json::json!({ "kind": err.kind(), "message": err.to_string(), "config_hash": hash });
    if let Error::Stability { suggested_dt, .. } = err {
        body["suggested_dt"] = (*suggested_dt).into();
    }
    fs::write(&path, serde_json::to_string_pretty(&body)?).map_err(io_err(&path))?;
    Ok(path)
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Reads, overrides and validates a config file.
pub fn load_config(path: &Path, mode: Mode, o: &Overrides) -> Result<Parsed> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut value: toml::Table = toml::from_str(&text).map_err(|e| Error::config(format!("malformed config: {e}")))?;
    let ens = value
        .entry("ensemble")
        .or_insert_with(|| toml::Value::Table(Default::default()));
    if let toml::Value::Table(t) = ens {
        if let Some(seed) = o.seed {
            let seed = i64::try_from(seed).map_err(|_| Error::config("seed must fit in 63 bits"))?;
            t.insert("seed".into(), seed.into());
        }
        if let Some(w) = o.workers {
            t.insert("workers".into(), (w as i64).into());
        }
    }
    if let Some(out) = &o.out {
        let mut t = toml::Table::new();
        t.insert("dir".into(), out.display().to_string().into());
        value.insert("output".into(), toml::Value::Table(t));
    }
    let text = toml::to_string(&value).map_err(|e| Error::config(format!("cannot re-serialize config: {e}")))?;
    parse_config(&text, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
command = "simulate"
[model]
preset = "subdiffusion"
beta = 0.5
[probe]
times = [1.0]
[ensemble]
n_paths = 10
seed = 3
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let p = parse_config(MINIMAL, Mode::Strict).unwrap();
        assert_eq!(p.config.ensemble.dr, Some(1e-3));
        assert_eq!(p.config.grid.padding, Some(0.1));
        assert_eq!(p.config.grid.window, Some([-0.1, 1.1]));
    }

    #[test]
    fn out_of_range_beta_is_rejected() {
        let text = MINIMAL.replace("beta = 0.5", "beta = 1.5");
        let err = parse_config(&text, Mode::Strict).unwrap_err().to_string();
        assert!(err.contains("model.beta") && err.contains("(0, 1)"), "{err}");
    }

    #[test]
    fn missing_seed_is_rejected() {
        let text = MINIMAL.replace("seed = 3", "");
        let err = parse_config(&text, Mode::Strict).unwrap_err().to_string();
        assert!(err.contains("ensemble.seed"), "{err}");
    }

    #[test]
    fn unknown_keys_depend_on_mode() {
        let text = MINIMAL.replace("beta = 0.5", "beta = 0.5\nbetta = 0.4");
        assert!(parse_config(&text, Mode::Strict)
            .unwrap_err()
            .to_string()
            .contains("model.betta"));
        assert_eq!(parse_config(&text, Mode::Lenient).unwrap().warnings.len(), 1);
        let text = MINIMAL.replace("seed = 3", "seed = 3\nsed = 4");
        assert!(parse_config(&text, Mode::Strict)
            .unwrap_err()
            .to_string()
            .contains("ensemble.sed"));
        let p = parse_config(&text, Mode::Lenient).unwrap();
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let mut a = parse_config(MINIMAL, Mode::Strict).unwrap().config;
        let h = config_hash(&a);
        a.ensemble.workers = Some(4);
        a.output.dir = "elsewhere".into();
        assert_eq!(config_hash(&a), h);
        a.ensemble.seed = Some(4);
        assert_ne!(config_hash(&a), h);
    }
}
