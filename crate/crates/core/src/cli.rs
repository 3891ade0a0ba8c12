//! The `degenchain` command line: key-value run configs, command dispatch,
//! checkpointed sweeps and file output.
//!
//! A run reads `key = value` lines from an optional config file, applies
//! `key=value` overrides from the command line, and writes into
//! `$DEGENCHAIN_OUT/<command>-<hash>` (or `out_dir` under the root). Every file
//! starts with a header naming the tool version and the config hash, and the
//! same config always produces the same bytes.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{detect_crossover, fit_powerlaw, local_exponents, oscillation_metric};
use crate::error::{Error, Result};
use crate::evolve::Method;
use crate::floquet::{special_frequencies, AverageWindow, DriveConfig, FloquetSetup, FloquetSummary, STROBOSCOPIC_DRIFT_TOL};
use crate::fpt::{fpt_report, FptReport};
use crate::hilbert::{count_blockaded, SpinBasis, DEFAULT_MAX_SITES};
use crate::models::ChainModel;
use crate::ramp::{log_grid, run_ramp, RampKind, RampOptions, RampProtocol, SweepContext, SweepRow};
use crate::spectra::{linear_grid, spectrum_scan};

pub const TOOL: &str = "degenchain";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable holding the output root.
pub const OUT_ENV: &str = "DEGENCHAIN_OUT";
pub const DEFAULT_OUT: &str = "degenchain-out";
/// Norm drift allowed on a ramp trajectory.
pub const RAMP_NORM_TOL: f64 = 1e-8;

/// Keys that steer how a run executes but not what it computes; they are
/// left out of the config hash.
const RUNTIME_KEYS: &[&str] = &["out_dir", "workers", "stop_after"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Ramp,
    RampSweep,
    Floquet,
    FloquetSweep,
    FptCheck,
    Fit,
}

const RAMP_KEYS: &[&str] = &[
    "model", "l", "v0", "w", "kind", "amplitude", "method", "dt", "dt_max", "tol", "symmetric",
];
const DRIVE_KEYS: &[&str] = &[
    "l", "v0", "omega", "p", "h0_over_omega", "m_max", "m0", "avg_window", "stride", "symmetric", "l_max",
    "p_table",
];

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::Ramp,
        Command::RampSweep,
        Command::Floquet,
        Command::FloquetSweep,
        Command::FptCheck,
        Command::Fit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Ramp => "ramp",
            Command::RampSweep => "ramp-sweep",
            Command::Floquet => "floquet",
            Command::FloquetSweep => "floquet-sweep",
            Command::FptCheck => "fpt-check",
            Command::Fit => "fit",
        }
    }

    fn keys(self) -> Vec<&'static str> {
        let own: &[&str] = match self {
            Command::Spectrum => &["l", "v0", "h_min", "h_max", "n_h", "l_max"],
            Command::Ramp => &["tau", "window", "n_samples"],
            Command::RampSweep => &["window", "tau_list", "tau_min", "tau_max", "n_tau"],
            Command::Floquet => &["h0", "theta"],
            Command::FloquetSweep => &["h0_list", "h0_min", "h0_max", "n_h0", "theta", "theta_list"],
            Command::FptCheck => &["l", "points", "l_max"],
            Command::Fit => &["input", "x_column", "y_column", "fit_min", "fit_max", "candidates", "anchor"],
        };
        let shared: &[&str] = match self {
            Command::Ramp | Command::RampSweep => RAMP_KEYS,
            Command::Floquet | Command::FloquetSweep => DRIVE_KEYS,
            _ => &[],
        };
        own.iter().chain(shared).chain(RUNTIME_KEYS).copied().collect()
    }
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command '{s}'")))
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

/// Numbers print in shortest round-trip form so that `5`, `5.0` and `5e0`
/// hash alike; lists are split on `,` and point tuples on `:`.
fn normalize_value(v: &str) -> String {
    v.split(',')
        .map(|item| {
            item.trim()
                .split(':')
                .map(|tok| {
                    let tok = tok.trim();
                    match tok.parse::<f64>() {
                        Ok(x) if x.is_finite() => format!("{x:?}"),
                        _ => tok.to_string(),
                    }
                })
                .collect::<Vec<_>>()
                .join(":")
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// A validated set of `key = value` settings for one command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            entries: BTreeMap::new(),
        }
    }

    /// Parses config-file text: one `key = value` per line, `#` comments.
    pub fn parse(command: Command, text: &str) -> Result<Self> {
        let mut cfg = Self::new(command);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", n + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(command: Command, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(command, &text)
    }

    /// Sets `key` (case-insensitive); unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        let key = key.trim().to_ascii_lowercase();
        if !self.command.keys().contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key '{key}' for command {}", self.command)));
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Config(format!("empty value for '{key}'")));
        }
        self.entries.insert(key, normalize_value(value));
        Ok(self)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, item: &str) -> Result<&mut Self> {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{item}' is not key=value")))?;
        self.set(k, v)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn bad(key: &str, v: &str, what: &str) -> Error {
        Error::Config(format!("'{key}' must be {what}, got '{v}'"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Self::bad(key, v, "a finite number")),
        }
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        if !self.has(key) {
            return Err(Error::Config(format!("missing required key '{key}'")));
        }
        self.f64_or(key, 0.0)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x < 1e15)
                .map(|x| x as usize)
                .ok_or_else(|| Self::bad(key, v, "a nonnegative integer")),
        }
    }

    pub fn usize_req(&self, key: &str) -> Result<usize> {
        if !self.has(key) {
            return Err(Error::Config(format!("missing required key '{key}'")));
        }
        self.usize_or(key, 0)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1.0") => Ok(true),
            Some("false" | "no" | "0.0") => Ok(false),
            Some(v) => Err(Self::bad(key, v, "true or false")),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .map(Some)
            .ok_or_else(|| Self::bad(key, v, "a comma-separated list of numbers"))
    }

    /// Sorted `key=value` lines of the hashed keys, prefixed by the command.
    pub fn canonical(&self) -> String {
        let mut s = format!("command={}\n", self.command);
        for (k, v) in &self.entries {
            if !RUNTIME_KEYS.contains(&k.as_str()) {
                s.push_str(&format!("{k}={v}\n"));
            }
        }
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }

    /// The hashed entries.
    pub fn hashed_entries(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .filter(|(k, _)| !RUNTIME_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// `root/out_dir`, or `root/<command>-<first 12 hex digits>`.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        match self.get("out_dir") {
            Some(d) => root.join(d),
            None => root.join(format!("{}-{}", self.command, &self.hash()[..12])),
        }
    }

    pub fn workers(&self) -> Result<usize> {
        let n = self.usize_or("workers", 1)?;
        if n == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(n)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The `# degenchain <version> command=<c> config=<hash>` line.
pub fn header_line(cfg: &RunConfig) -> String {
    format!("# {TOOL} {VERSION} command={} config={}", cfg.command, cfg.hash())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            tol,
            passed: residual <= tol,
        }
    }
}

/// The `record.json` written by every run.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub command: Command,
    pub config: BTreeMap<String, String>,
    pub complete: bool,
    pub outputs: serde_json::Value,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

/// What a run left on disk.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    /// False when a sweep stopped early (`stop_after`); rerunning resumes it.
    pub complete: bool,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// `2` for configuration and I/O problems, `1` for numerical failures.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::DimensionCap { .. }
        | Error::SiteOutOfRange { .. }
        | Error::TimeOutOfRange { .. }
        | Error::Fit(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::DimensionMismatch { .. }
        | Error::NotHermitian { .. }
        | Error::Integration { .. }
        | Error::NonUnitary { .. }
        | Error::Quadrature { .. }
        | Error::Tolerance { .. } => 1,
    }
}

struct Output<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    files: Vec<PathBuf>,
    checks: Vec<Check>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig, root: &Path) -> Result<Self> {
        let dir = cfg.output_dir(root);
        fs::create_dir_all(&dir)?;
        Ok(Output {
            cfg,
            dir,
            files: Vec::new(),
            checks: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    /// A CSV body behind the header comment line.
    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = format!("{}\n", header_line(self.cfg)).into_bytes();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn recipe(&mut self, text: &str) -> Result<()> {
        let body = format!("{}\n{}", header_line(self.cfg), text);
        self.write("plot.txt", body.as_bytes())
    }

    fn finish(mut self, outputs: serde_json::Value, complete: bool) -> Result<RunOutcome> {
        let mut names: Vec<String> = self
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        names.push("record.json".into());
        let record = ResultRecord {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_hash: self.cfg.hash(),
            command: self.cfg.command,
            config: self.cfg.hashed_entries(),
            complete,
            outputs,
            checks: self.checks.clone(),
            files: names,
        };
        let mut body = serde_json::to_vec_pretty(&record)?;
        body.push(b'\n');
        self.write("record.json", &body)?;
        Ok(RunOutcome {
            dir: self.dir,
            files: self.files,
            checks: self.checks,
            complete,
        })
    }
}

/// Sweep results that can be checkpointed; failed points are recomputed on
/// resume.
pub trait SweepPoint: Serialize + DeserializeOwned + Send {
    fn is_ok(&self) -> bool;
}

impl SweepPoint for SweepRow {
    fn is_ok(&self) -> bool {
        SweepRow::is_ok(self)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointLine<T> {
    key: String,
    result: T,
}

/// Evaluates `f` on every parameter point on a pool of `workers` threads,
/// appending each finished point to `checkpoint.jsonl`. Points already in the
/// checkpoint are not recomputed. Returns `None` when `stop_after` cut the
/// run short.
fn run_checkpointed<P, T, F>(
    cfg: &RunConfig,
    dir: &Path,
    points: &[P],
    f: F,
) -> Result<Option<Vec<T>>>
where
    P: Serialize + Sync,
    T: SweepPoint,
    F: Fn(&P) -> T + Sync,
{
    let hash = cfg.hash();
    let keys = points
        .iter()
        .map(|p| {
            let mut h = Sha256::new();
            h.update(hash.as_bytes());
            h.update(serde_json::to_vec(p)?);
            Ok(hex(&h.finalize())[..16].to_string())
        })
        .collect::<Result<Vec<String>>>()?;

    let path = dir.join("checkpoint.jsonl");
    let mut done: BTreeMap<String, T> = BTreeMap::new();
    if path.exists() {
        for line in BufReader::new(File::open(&path)?).lines() {
            // a line cut off by an interruption simply fails to parse
            if let Ok(rec) = serde_json::from_str::<CheckpointLine<T>>(&line?) {
                done.insert(rec.key, rec.result);
            }
        }
    }
    let fresh = !path.exists();
    let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
    if fresh {
        writeln!(file, "{{\"tool\":\"{TOOL}\",\"version\":\"{VERSION}\",\"config\":\"{hash}\"}}")?;
    }
    let sink = Mutex::new(file);

    let mut pending: Vec<usize> = (0..points.len()).filter(|&i| !done.contains_key(&keys[i])).collect();
    let mut complete = true;
    if let Some(n) = cfg.get("stop_after").map(|_| cfg.usize_or("stop_after", 0)).transpose()? {
        if n < pending.len() {
            pending.truncate(n);
            complete = false;
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let computed: Vec<(usize, T)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&i| {
                let r = f(&points[i]);
                if r.is_ok() {
                    let line = serde_json::to_string(&CheckpointLine {
                        key: keys[i].clone(),
                        result: &r,
                    })?;
                    let mut w = sink.lock().expect("checkpoint writer poisoned");
                    writeln!(w, "{line}")?;
                    w.flush()?;
                }
                Ok((i, r))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    if !complete {
        return Ok(None);
    }
    let mut fresh_results: BTreeMap<usize, T> = computed.into_iter().collect();
    let mut out = Vec::with_capacity(points.len());
    for (i, key) in keys.iter().enumerate() {
        let r = match fresh_results.remove(&i) {
            Some(r) => r,
            None => done.remove(key).expect("every point is either done or computed"),
        };
        out.push(r);
    }
    Ok(Some(out))
}

fn sites(cfg: &RunConfig, default_cap: usize) -> Result<usize> {
    let l = cfg.usize_req("l")?;
    let cap = cfg.usize_or("l_max", default_cap)?.min(DEFAULT_MAX_SITES);
    if !(3..=cap).contains(&l) {
        return Err(Error::Config(format!("L must lie in 3..={cap}, got {l}")));
    }
    Ok(l)
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Config(format!("'{key}' must be positive, got {x}")));
    }
    Ok(x)
}

fn cmd_spectrum(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let l = sites(cfg, 12)?;
    let v0 = positive("v0", cfg.f64_or("v0", 1.0)?)?;
    let (lo, hi) = (cfg.f64_or("h_min", -1.0)?, cfg.f64_or("h_max", 1.0)?);
    let n = cfg.usize_or("n_h", 101)?;
    if n == 0 || !(hi >= lo) {
        return Err(Error::Config(format!("need n_h >= 1 and h_min <= h_max (got {n}, [{lo}, {hi}])")));
    }
    let basis = SpinBasis::new(l)?;
    let mut out = Output::new(cfg, root)?;
    let table = spectrum_scan(&basis, v0, &linear_grid(lo * v0, hi * v0, n))?;
    out.csv("spectrum.csv", |w| table.write_csv(w))?;

    // Tr H = V0 L 2^(L-2), since Σσˣ is traceless
    let trace = v0 * l as f64 * (1u64 << (l - 2)) as f64;
    let trace_defect = table
        .rows
        .iter()
        .map(|r| (r.energies.iter().sum::<f64>() - trace).abs() / trace)
        .fold(0.0, f64::max);
    out.checks.push(Check::new("eigenvalue_sum_equals_trace", trace_defect, 1e-8));
    let mut zero_modes = None;
    if let Some(row) = table.rows.iter().find(|r| r.h == 0.0) {
        let count = row.energies.iter().filter(|e| e.abs() <= 1e-10).count();
        let expected = count_blockaded(l) as usize;
        out.checks.push(Check::new("zero_modes_at_h0", count.abs_diff(expected) as f64, 0.0));
        zero_modes = Some(count);
    }
    out.recipe(
        "spectrum.csv: x = h / V0 (column h divided by V0), y = energy / V0; \
         one line per level index n.\n",
    )?;
    out.finish(
        serde_json::json!({
            "sites": l,
            "dim": basis.dim(),
            "v0": v0,
            "n_h": n,
            "zero_modes_at_h0": zero_modes,
            "blockaded_states": count_blockaded(l),
        }),
        true,
    )
}

struct RampSetup {
    model: ChainModel,
    kind: RampKind,
    amplitude: f64,
    opts: RampOptions,
}

fn ramp_setup(cfg: &RunConfig) -> Result<RampSetup> {
    let l = sites(cfg, DEFAULT_MAX_SITES)?;
    let shape = cfg.str_or("kind", "linear");
    let (model, kind) = match (cfg.str_or("model", "degenerate"), shape) {
        ("degenerate", "linear") => (ChainModel::degenerate(l, cfg.f64_or("v0", 1.0)?)?, RampKind::LinearDegen),
        ("degenerate", "cosine") => (ChainModel::degenerate(l, cfg.f64_or("v0", 1.0)?)?, RampKind::CosineDegen),
        ("pxp", "linear") => (ChainModel::pxp(l, cfg.f64_or("w", 1.0)?)?, RampKind::LinearPxp),
        ("pxp", "cosine") => (ChainModel::pxp(l, cfg.f64_or("w", 1.0)?)?, RampKind::CosinePxp),
        (m, k) => {
            return Err(Error::Config(format!(
                "model must be degenerate or pxp and kind linear or cosine, got {m}/{k}"
            )))
        }
    };
    let symmetric = cfg.bool_or("symmetric", true)?;
    if !symmetric && model.dim() > 4096 {
        return Err(Error::DimensionCap {
            dim: model.dim(),
            cap: 4096,
        });
    }
    let defaults = RampOptions::default();
    let opts = RampOptions {
        n_samples: cfg.usize_or("n_samples", defaults.n_samples)?,
        method: cfg.str_or("method", "eigenbasis-ode").parse::<Method>()?,
        dt: cfg.get("dt").map(|_| cfg.f64_or("dt", 0.0)).transpose()?,
        dt_max: positive("dt_max", cfg.f64_or("dt_max", defaults.dt_max)?)?,
        tol: positive("tol", cfg.f64_or("tol", defaults.tol)?)?,
        symmetric,
    };
    Ok(RampSetup {
        model,
        kind,
        amplitude: positive("amplitude", cfg.f64_or("amplitude", 5.0)?)?,
        opts,
    })
}

fn endpoint(cfg: &RunConfig) -> Result<f64> {
    match cfg.str_or("window", "full") {
        "full" => Ok(1.0),
        "half" => Ok(0.5),
        w => Err(Error::Config(format!("window must be full or half, got '{w}'"))),
    }
}

fn cmd_ramp(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let s = ramp_setup(cfg)?;
    let tau = positive("tau", cfg.f64_req("tau")?)?;
    let full = RampProtocol::for_model(&s.model, s.kind, s.amplitude, tau)?;
    let p = full.with_window(0.0, endpoint(cfg)? * tau)?;
    let trace = run_ramp(&s.model, &p, &s.opts)?;
    let mut out = Output::new(cfg, root)?;
    out.csv("trace.csv", |w| trace.write_csv(w))?;
    out.checks.push(Check::new("norm_drift", trace.max_norm_drift, RAMP_NORM_TOL));
    out.recipe(
        "trace.csv: x = t_over_tau; panels y = F (log ground-state fidelity), \
         y = Q_over_scale (residual energy over V0 or w).\n",
    )?;
    let last = trace.times.len() - 1;
    out.finish(
        serde_json::json!({
            "model": s.model.name(),
            "sites": s.model.sites(),
            "protocol": p,
            "final_f": trace.f[last],
            "final_q": trace.q[last],
            "max_norm_drift": trace.max_norm_drift,
        }),
        true,
    )
}

fn tau_list(cfg: &RunConfig) -> Result<Vec<f64>> {
    let taus = match cfg.list_f64("tau_list")? {
        Some(t) => t,
        None => {
            let lo = positive("tau_min", cfg.f64_req("tau_min")?)?;
            let hi = cfg.f64_req("tau_max")?;
            let n = cfg.usize_or("n_tau", 40)?;
            if !(hi >= lo) || n == 0 {
                return Err(Error::Config("need tau_min <= tau_max and n_tau >= 1".into()));
            }
            if n == 1 {
                vec![lo]
            } else {
                log_grid(lo, hi, n)
            }
        }
    };
    if taus.is_empty() || taus.windows(2).any(|w| !(w[1] > w[0])) || !(taus[0] > 0.0) {
        return Err(Error::Config("τ list must be positive and strictly ascending".into()));
    }
    Ok(taus)
}

fn cmd_ramp_sweep(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let s = ramp_setup(cfg)?;
    let taus = tau_list(cfg)?;
    let ctx = SweepContext::new(&s.model, s.kind, s.amplitude, endpoint(cfg)?, &s.opts)?;
    let mut out = Output::new(cfg, root)?;
    let Some(rows) = run_checkpointed(cfg, &out.dir, &taus, |&tau| ctx.point(tau))? else {
        return out.finish(serde_json::json!({ "points": taus.len() }), false);
    };
    let table = ctx.table(rows);
    out.csv("sweep.csv", |w| table.write_csv(w))?;
    for r in &table.rows {
        match &r.error {
            None => out.checks.push(Check::new(format!("norm_drift@tau={}", r.tau), r.max_norm_drift, RAMP_NORM_TOL)),
            Some(_) => out.checks.push(Check::new(format!("point@tau={}", r.tau), f64::INFINITY, 0.0)),
        }
    }
    out.recipe(
        "sweep.csv: log-log, x = tau, y = Q (or Q_over_L for collapse across L); \
         second panel y = F.\n",
    )?;
    out.finish(
        serde_json::json!({
            "model": table.model,
            "sites": table.sites,
            "kind": table.kind,
            "amplitude": table.amplitude,
            "endpoint": table.endpoint,
            "dim": ctx.dim(),
            "points": table.rows.len(),
            "failed": table.rows.iter().filter(|r| !r.is_ok()).count(),
        }),
        true,
    )
}

/// Builds the drive from `h0` and one of `omega`, `p` (`ω = h0/p`, the
/// default with `p = 1`) or `h0_over_omega`.
fn drive_for(cfg: &RunConfig, h0: f64) -> Result<DriveConfig> {
    let v0 = cfg.f64_or("v0", 1.0)?;
    let given = ["omega", "p", "h0_over_omega"].iter().filter(|k| cfg.has(k)).count();
    if given > 1 {
        return Err(Error::Config("give at most one of omega, p, h0_over_omega".into()));
    }
    if cfg.has("omega") {
        DriveConfig::new(h0, cfg.f64_or("omega", 0.0)?, v0)
    } else if cfg.has("h0_over_omega") {
        DriveConfig::with_ratio(h0, cfg.f64_or("h0_over_omega", 0.0)?, v0)
    } else {
        let p = cfg.usize_or("p", 1)?;
        DriveConfig::special(h0, v0, u32::try_from(p).map_err(|_| Error::Config("p is too large".into()))?)
    }
}

struct DriveRun {
    l: usize,
    symmetric: bool,
    m_max: usize,
    window: AverageWindow,
}

fn drive_run(cfg: &RunConfig) -> Result<DriveRun> {
    let symmetric = cfg.bool_or("symmetric", true)?;
    let l = sites(cfg, if symmetric { DEFAULT_MAX_SITES } else { 12 })?;
    let window = AverageWindow {
        m0: cfg.usize_or("m0", 1500)?,
        window: cfg.usize_or("avg_window", 1000)?,
        stride: cfg.usize_or("stride", 5)?,
    };
    let m_max = cfg.usize_or("m_max", window.end().max(2500))?;
    if window.stride == 0 || window.window < window.stride || window.end() > m_max {
        return Err(Error::Config(format!(
            "averaging window m0={} avg_window={} stride={} must have samples and end by m_max={m_max}",
            window.m0, window.window, window.stride
        )));
    }
    Ok(DriveRun {
        l,
        symmetric,
        m_max,
        window,
    })
}

fn theta_of(cfg: &RunConfig) -> Result<f64> {
    let theta = cfg.f64_or("theta", 0.0)?;
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::Config(format!("theta must lie in [0, π/2], got {theta}")));
    }
    Ok(theta)
}

fn special_table(out: &mut Output, cfg: &RunConfig, h0: f64) -> Result<()> {
    let p_max = cfg.usize_or("p_table", 4)? as u32;
    let table = special_frequencies(h0, p_max);
    out.csv("special_frequencies.csv", |w| {
        writeln!(w, "p,omega")?;
        for (p, om) in &table {
            writeln!(w, "{p},{om}")?;
        }
        Ok(())
    })
}

fn cmd_floquet(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let run = drive_run(cfg)?;
    let h0 = positive("h0", cfg.f64_req("h0")?)?;
    let drive = drive_for(cfg, h0)?;
    let theta = theta_of(cfg)?;
    let setup = FloquetSetup::new(run.l, drive, run.symmetric)?;
    let trace = setup.run(theta, run.m_max)?;
    let summary = FloquetSummary::new(&setup, theta, &trace, run.window)?;
    let mut out = Output::new(cfg, root)?;
    out.csv("trace.csv", |w| trace.write_csv(w))?;
    special_table(&mut out, cfg, h0)?;
    out.checks.push(Check::new("norm_drift", trace.max_norm_drift, STROBOSCOPIC_DRIFT_TOL));
    out.recipe(
        "trace.csv: x = m (stroboscopic period index), y = delta_c; \
         the record gives the long-time average over the sampled window.\n",
    )?;
    out.finish(
        serde_json::json!({ "drive": drive, "period": drive.period(), "summary": summary }),
        true,
    )
}

/// One point of a Floquet sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetSweepRow {
    pub h0: f64,
    pub omega_d: f64,
    pub theta: f64,
    pub delta_c_bar: f64,
    pub band: f64,
    pub peak_to_peak: f64,
    pub max_norm_drift: f64,
    pub error: Option<String>,
}

impl SweepPoint for FloquetSweepRow {
    fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

fn cmd_floquet_sweep(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let run = drive_run(cfg)?;
    let h0s = match cfg.list_f64("h0_list")? {
        Some(v) => v,
        None => {
            let lo = positive("h0_min", cfg.f64_req("h0_min")?)?;
            linear_grid(lo, cfg.f64_req("h0_max")?, cfg.usize_or("n_h0", 10)?)
        }
    };
    if h0s.is_empty() || h0s.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Config("h0 values must be positive and nonempty".into()));
    }
    let thetas = match cfg.list_f64("theta_list")? {
        Some(v) => v,
        None => vec![theta_of(cfg)?],
    };
    if thetas.iter().any(|t| !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(t)) {
        return Err(Error::Config("theta values must lie in [0, π/2]".into()));
    }
    // validate every drive before any compute
    for &h0 in &h0s {
        drive_for(cfg, h0)?;
    }
    let points: Vec<(f64, f64)> = h0s.iter().flat_map(|&h| thetas.iter().map(move |&t| (h, t))).collect();
    let mut out = Output::new(cfg, root)?;
    let point = |&(h0, theta): &(f64, f64)| {
        let drive = drive_for(cfg, h0);
        let omega_d = drive.as_ref().map(|d| d.omega_d).unwrap_or(f64::NAN);
        let res = drive.and_then(|d| {
            let setup = FloquetSetup::new(run.l, d, run.symmetric)?;
            let trace = setup.run(theta, run.m_max)?;
            FloquetSummary::new(&setup, theta, &trace, run.window)
        });
        match res {
            Ok(s) => FloquetSweepRow {
                h0,
                omega_d,
                theta,
                delta_c_bar: s.delta_c_bar,
                band: s.band,
                peak_to_peak: s.peak_to_peak,
                max_norm_drift: s.max_norm_drift,
                error: None,
            },
            Err(e) => FloquetSweepRow {
                h0,
                omega_d,
                theta,
                delta_c_bar: f64::NAN,
                band: f64::NAN,
                peak_to_peak: f64::NAN,
                max_norm_drift: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    };
    let Some(rows) = run_checkpointed(cfg, &out.dir, &points, point)? else {
        return out.finish(serde_json::json!({ "points": points.len() }), false);
    };
    out.csv("sweep.csv", |w| {
        writeln!(w, "h0,omega_d,theta,delta_c_bar,band,peak_to_peak,max_norm_drift,error")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.h0,
                r.omega_d,
                r.theta,
                r.delta_c_bar,
                r.band,
                r.peak_to_peak,
                r.max_norm_drift,
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            )?;
        }
        Ok(())
    })?;
    for r in &rows {
        let name = format!("point@h0={},theta={}", r.h0, r.theta);
        match &r.error {
            None => out.checks.push(Check::new(name, r.max_norm_drift, STROBOSCOPIC_DRIFT_TOL)),
            Some(_) => out.checks.push(Check::new(name, f64::INFINITY, 0.0)),
        }
    }
    out.recipe("sweep.csv: x = h0 (over V0), y = delta_c_bar; one line per theta.\n")?;
    out.finish(
        serde_json::json!({
            "sites": run.l,
            "window": run.window,
            "m_max": run.m_max,
            "points": rows.len(),
            "failed": rows.iter().filter(|r| r.error.is_some()).count(),
        }),
        true,
    )
}

/// `v0:h0:T` triples; `T` may be `pN` for the special period `2πN/h0`.
fn fpt_points(cfg: &RunConfig) -> Result<Vec<(f64, f64, f64)>> {
    let spec = cfg.str_or("points", "0.3:1.0:1.3,0.2:2.0:p1,0.5:1.5:0.7");
    spec.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let bad = || Error::Config(format!("fpt point '{item}' is not v0:h0:T"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let v0: f64 = parts[0].parse().map_err(|_| bad())?;
            let h0: f64 = parts[1].parse().map_err(|_| bad())?;
            positive("h0", h0)?;
            let t = match parts[2].strip_prefix('p') {
                Some(p) => {
                    let p: f64 = p.parse().map_err(|_| bad())?;
                    if !(p >= 1.0 && p.fract() == 0.0) {
                        return Err(bad());
                    }
                    2.0 * std::f64::consts::PI * p / h0
                }
                None => positive("T", parts[2].parse().map_err(|_| bad())?)?,
            };
            Ok((v0, h0, t))
        })
        .collect()
}

fn cmd_fpt_check(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let l = sites(cfg, 8)?;
    let points = fpt_points(cfg)?;
    let basis = SpinBasis::new(l)?;
    let reports = points
        .iter()
        .map(|&(v0, h0, t)| fpt_report(&basis, v0, h0, t))
        .collect::<Result<Vec<FptReport>>>()?;
    let mut out = Output::new(cfg, root)?;
    out.csv("residuals.csv", |w| {
        writeln!(w, "point,v0,h0,period,check,residual,tol,passed")?;
        for (k, r) in reports.iter().enumerate() {
            for c in r.checks.iter().chain(r.published_block.iter()) {
                writeln!(
                    w,
                    "{k},{},{},{},{},{:e},{:e},{}",
                    r.v0,
                    r.h0,
                    r.period,
                    c.name,
                    c.residual,
                    c.tol,
                    u8::from(c.passed)
                )?;
            }
        }
        Ok(())
    })?;
    for (k, r) in reports.iter().enumerate() {
        for c in &r.checks {
            out.checks.push(Check::new(format!("{k}:{}", c.name), c.residual, c.tol));
        }
    }
    out.recipe("residuals.csv: one bar per (point, check) on a log axis, residual against tol.\n")?;
    let warnings = reports.iter().filter(|r| r.branch_warning).count();
    out.finish(
        serde_json::json!({ "sites": l, "branch_warnings": warnings, "reports": reports }),
        true,
    )
}

/// Reads two named columns of a CSV, skipping `#` lines and rows where
/// either value is not a finite number.
pub fn read_columns(path: &Path, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{} has no header row", path.display())))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("{} has no column '{name}'", path.display())))
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let mut pts = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| f.get(i).and_then(|s| s.trim().parse::<f64>().ok()).filter(|v| v.is_finite());
        if let (Some(a), Some(b)) = (parse(ix), parse(iy)) {
            pts.push((a, b));
        }
    }
    Ok(pts)
}

fn cmd_fit(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let input = PathBuf::from(
        cfg.get("input")
            .ok_or_else(|| Error::Config("missing required key 'input'".into()))?,
    );
    let pts = read_columns(&input, cfg.str_or("x_column", "tau"), cfg.str_or("y_column", "Q"))?;
    if pts.len() < 4 {
        return Err(Error::Config(format!("{} holds {} usable points, need 4", input.display(), pts.len())));
    }
    let input_hash = hex(&Sha256::digest(fs::read(&input)?));
    let lo = cfg.f64_or("fit_min", pts[0].0)?;
    let hi = cfg.f64_or("fit_max", pts[pts.len() - 1].0)?;
    let fit = fit_powerlaw(&pts, (lo, hi))?;
    let candidates = cfg.list_f64("candidates")?.unwrap_or_else(|| vec![0.0, 1.0, 2.0]);
    let seg = detect_crossover(&pts, &candidates, cfg.f64_or("anchor", 1.0)?).ok();
    let osc = oscillation_metric(&pts).ok();
    let slopes = local_exponents(&pts);

    let mut out = Output::new(cfg, root)?;
    out.csv("local_exponents.csv", |w| {
        writeln!(w, "tau,b_local")?;
        for (t, b) in &slopes {
            writeln!(w, "{t},{b}")?;
        }
        Ok(())
    })?;
    if let Some(s) = &seg {
        out.csv("segmentation.csv", |w| s.write_csv(w))?;
    }
    out.recipe(
        "local_exponents.csv: x = tau (log), y = b_local, with reference lines at the candidate exponents.\n\
         segmentation.csv: one horizontal segment per decade at height b.\n",
    )?;
    out.finish(
        serde_json::json!({
            "input": input.display().to_string(),
            "input_sha256": input_hash,
            "points": pts.len(),
            "fit": fit,
            "segmentation": seg,
            "oscillation": osc,
        }),
        true,
    )
}

/// Runs `cfg` with outputs under `root`.
pub fn run(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    match cfg.command {
        Command::Spectrum => cmd_spectrum(cfg, root),
        Command::Ramp => cmd_ramp(cfg, root),
        Command::RampSweep => cmd_ramp_sweep(cfg, root),
        Command::Floquet => cmd_floquet(cfg, root),
        Command::FloquetSweep => cmd_floquet_sweep(cfg, root),
        Command::FptCheck => cmd_fpt_check(cfg, root),
        Command::Fit => cmd_fit(cfg, root),
    }
}

#[derive(Parser, Debug)]
#[command(name = "degenchain", version, about = "Ramp and Floquet dynamics of a spin chain with an extensively degenerate point")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(clap::Args, Debug)]
pub struct RunArgs {
    /// Key-value config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// `key=value` overrides, applied after the file.
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Spectrum of H(h) on a grid of transverse fields.
    Spectrum(RunArgs),
    /// One ramp with F(t), Q(t) traces.
    Ramp(RunArgs),
    /// Terminal Q and F over a list of ramp times.
    RampSweep(RunArgs),
    /// Stroboscopic ΔC(mT) under the square-pulse drive.
    Floquet(RunArgs),
    /// Long-time ΔC averages over a grid of h0 and θ.
    FloquetSweep(RunArgs),
    /// Residuals of the Floquet perturbation theory identities.
    FptCheck(RunArgs),
    /// Power-law fit and regime segmentation of a Q(τ) table.
    Fit(RunArgs),
}

impl CliCommand {
    fn split(&self) -> (Command, &RunArgs) {
        match self {
            CliCommand::Spectrum(a) => (Command::Spectrum, a),
            CliCommand::Ramp(a) => (Command::Ramp, a),
            CliCommand::RampSweep(a) => (Command::RampSweep, a),
            CliCommand::Floquet(a) => (Command::Floquet, a),
            CliCommand::FloquetSweep(a) => (Command::FloquetSweep, a),
            CliCommand::FptCheck(a) => (Command::FptCheck, a),
            CliCommand::Fit(a) => (Command::Fit, a),
        }
    }

    pub fn config(&self) -> Result<RunConfig> {
        let (cmd, args) = self.split();
        let mut cfg = match &args.config {
            Some(p) => RunConfig::from_file(cmd, p)?,
            None => RunConfig::new(cmd),
        };
        for o in &args.overrides {
            cfg.apply_override(o)?;
        }
        Ok(cfg)
    }
}

/// Parses `args`, runs, reports on stderr and returns the exit status.
pub fn main_with<I, T>(args: I, root: &Path) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = std::time::Instant::now();
    let result = cli.command.config().and_then(|cfg| run(&cfg, root));
    match result {
        Ok(outcome) => {
            for c in outcome.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}: residual {:e} > tol {:e}", c.name, c.residual, c.tol);
            }
            if !outcome.complete {
                eprintln!("stopped early; rerun the same config to resume");
            }
            eprintln!(
                "{} ({:.2} s, {} checks, {} failed)",
                outcome.dir.display(),
                started.elapsed().as_secs_f64(),
                outcome.checks.len(),
                outcome.checks.iter().filter(|c| !c.passed).count()
            );
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

/// The output root: `$DEGENCHAIN_OUT`, else `./degenchain-out`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}
