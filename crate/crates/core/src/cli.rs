//! Command-line front end: flag and config-file resolution, the on-disk
//! census and family caches, and the subcommands of the `modcount` binary.
//!
//! Every flag may also be given as a `key=value` line in a `--config` file
//! (keys are the flag names without dashes); flags win over the file.
//! Reports carry the library version and a hash of the resolved
//! configuration, so two runs with equal hashes must agree byte for byte.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::analytic_harness::{required_primes, s1_s2_empirical, FamilyMoments};
use crate::arith::{gcd, is_prime};
use crate::cusp_census::{cusp_rows, write_cusp_csv};
use crate::error::{Error, Result};
use crate::ff_curves::{
    build_census, census_file_name, read_census_jsonl, write_census_jsonl, CurveCensus, PrimeField,
};
use crate::level_fibers::{
    h_gamma, moment, moment_identity, write_hgamma_csv, write_moments_csv, LevelSpec,
};
use crate::torsion_families::{
    builtin_parametrization, gamma1_5_scan, generate_family_with, local_statistics, predictions,
    read_family_jsonl, sample_family, write_curves_jsonl, write_family_jsonl, write_stats_csv,
    FamilyParametrization, GenerationOptions, GlobalCurve, LocalStatistics,
};
use crate::trace_formula::{solve_trace, write_trace_csv};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest parameter box the CLI enumerates before switching to sampling.
const ENUMERATION_CEILING: u128 = 1 << 28;
/// Largest height the `Gamma1(5)` streaming scan accepts.
const SCAN_CEILING: u64 = 1_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "modcount",
    version,
    about = "Counting experiments for elliptic curves with level structure"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Build and cache curve censuses over F_q.
    Census,
    /// Cusp orbits and F_q-rational cusp counts.
    Cusps,
    /// Weighted Hurwitz class numbers H_Gamma(a, q).
    Hgamma,
    /// Moments sum a^R H_Gamma(a, q), checked against the group-lattice identity.
    Moments,
    /// Curves over Q with level structure up to a height bound.
    Family,
    /// Reduction statistics of a family at given primes, with predictions.
    LocalStats,
    /// Hecke traces solved from finite-field expectations.
    Trace,
    /// S1, S2 and the average-rank estimate for a family.
    RankBound,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Census => "census",
            Command::Cusps => "cusps",
            Command::Hgamma => "hgamma",
            Command::Moments => "moments",
            Command::Family => "family",
            Command::LocalStats => "local-stats",
            Command::Trace => "trace",
            Command::RankBound => "rank-bound",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Raw flags; every one is optional so a config file can supply it.
#[derive(clap::Args, Debug, Default)]
pub struct Flags {
    /// Level tokens G1-<N>, G-<N> or G1-<M>-<N>, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub level: Vec<String>,
    /// Primes or prime powers, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Vec<u64>,
    /// Inclusive range `a..b`.
    #[arg(long = "q-range", global = true)]
    pub q_range: Option<String>,
    /// Height bound for family subcommands.
    #[arg(long = "B", global = true, value_parser = parse_count)]
    pub b: Option<u64>,
    /// Height bound for rank-bound.
    #[arg(long = "X", global = true)]
    pub x: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Largest moment exponent.
    #[arg(long = "R", global = true)]
    pub r: Option<u32>,
    /// Weight for trace.
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// Report file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample size when a family is too large to enumerate.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long = "cache-dir", global = true)]
    pub cache_dir: Option<PathBuf>,
    /// `key=value` file with defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Accepts `10000`, `1e4` or `1_000`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let t = s.replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    match t.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("{s:?} is not a nonnegative integer")),
    }
}

/// Flags and config file merged, with defaults applied.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub levels: Vec<LevelSpec>,
    /// Explicit values and the range, sorted and deduplicated.
    pub qs: Vec<u64>,
    pub b: Option<u64>,
    pub x: Option<f64>,
    pub sigma: f64,
    pub r: u32,
    pub k: u32,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub samples: usize,
    pub cache_dir: PathBuf,
}

fn parse_range(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::BadInput(format!("cannot parse range {s:?} (expected a..b)"));
    let (a, b) = s
        .split_once("..")
        .or_else(|| s.split_once('-'))
        .ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(Error::BadInput(format!("empty range {s:?}")));
    }
    if b - a > 10_000_000 {
        return Err(Error::Resource(format!("range {s:?} is longer than 10^7")));
    }
    Ok((a, b))
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::BadInput(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::BadInput(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn take<T>(
    flag: Option<T>,
    map: &mut BTreeMap<String, String>,
    key: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Option<T>> {
    let from_file = map.remove(key);
    match (flag, from_file) {
        (Some(v), _) => Ok(Some(v)),
        (None, None) => Ok(None),
        (None, Some(s)) => parse(&s)
            .map(Some)
            .ok_or_else(|| Error::BadInput(format!("config value {key}={s} does not parse"))),
    }
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    if v.is_empty() {
        None
    } else {
        Some(v)
    }
}

fn list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|t| t.trim().parse().ok()).collect()
}

impl RunConfig {
    pub fn resolve(command: Command, f: Flags) -> Result<Self> {
        let mut map = match &f.config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        let m = &mut map;
        let level_tokens = take(nonempty(f.level), m, "level", list::<String>)?.unwrap_or_default();
        let q_list = take(nonempty(f.q), m, "q", list::<u64>)?.unwrap_or_default();
        let q_range = take(f.q_range, m, "q-range", |s| Some(s.to_string()))?;
        let b = take(f.b, m, "B", |s| parse_count(s).ok())?;
        let x = take(f.x, m, "X", |s| s.parse().ok())?;
        let sigma = take(f.sigma, m, "sigma", |s| s.parse().ok())?;
        let r = take(f.r, m, "R", |s| s.parse().ok())?;
        let k = take(f.k, m, "k", |s| s.parse().ok())?;
        let out = take(f.out, m, "out", |s| Some(PathBuf::from(s)))?;
        let format = take(f.format, m, "format", |s| Format::from_str(s, true).ok())?;
        let jobs = take(f.jobs, m, "jobs", |s| s.parse().ok())?;
        let seed = take(f.seed, m, "seed", |s| s.parse().ok())?;
        let samples = take(f.samples, m, "samples", |s| s.parse().ok())?;
        let cache_dir = take(f.cache_dir, m, "cache-dir", |s| Some(PathBuf::from(s)))?;
        if let Some(key) = map.keys().next() {
            return Err(Error::BadInput(format!("unknown config key {key:?}")));
        }
        let levels = level_tokens
            .iter()
            .map(|t| LevelSpec::parse(t))
            .collect::<Result<Vec<_>>>()?;
        let mut qs = q_list;
        if let Some(s) = q_range {
            let (a, b) = parse_range(&s)?;
            qs.extend(a..=b);
        }
        qs.sort_unstable();
        qs.dedup();
        if let Some(s) = sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::BadInput(format!(
                    "--sigma must be positive, got {s}"
                )));
            }
        }
        if jobs == Some(0) {
            return Err(Error::BadInput("--jobs must be at least 1".into()));
        }
        Ok(RunConfig {
            command,
            levels,
            qs,
            b,
            x,
            sigma: sigma.unwrap_or(0.6),
            r: r.unwrap_or(2),
            k: k.unwrap_or(2),
            out,
            format: format.unwrap_or(Format::Csv),
            jobs,
            seed: seed.unwrap_or(0),
            samples: samples.unwrap_or(20_000),
            cache_dir: cache_dir.unwrap_or_else(|| PathBuf::from("modcount-cache")),
        })
    }

    /// Hash of everything that can change report contents. Output path,
    /// format, worker count and cache location are excluded.
    pub fn hash(&self) -> String {
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        let qs: Vec<String> = self.qs.iter().map(|q| q.to_string()).collect();
        let canon = format!(
            "command={}\nlevel={}\nq={}\nB={:?}\nX={:?}\nsigma={}\nR={}\nk={}\nseed={}\nsamples={}\n",
            self.command.name(),
            levels.join(","),
            qs.join(","),
            self.b,
            self.x,
            self.sigma,
            self.r,
            self.k,
            self.seed,
            self.samples
        );
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn single_level(&self) -> Result<LevelSpec> {
        match self.levels.as_slice() {
            [l] => Ok(*l),
            [] => Err(Error::BadInput(format!(
                "{} needs --level",
                self.command.name()
            ))),
            _ => Err(Error::BadInput(format!(
                "{} takes exactly one --level",
                self.command.name()
            ))),
        }
    }

    fn need_qs(&self) -> Result<&[u64]> {
        if self.qs.is_empty() {
            return Err(Error::BadInput(format!(
                "{} needs --q or --q-range",
                self.command.name()
            )));
        }
        Ok(&self.qs)
    }

    fn need_b(&self) -> Result<u64> {
        self.b
            .ok_or_else(|| Error::BadInput(format!("{} needs --B", self.command.name())))
    }
}

/// A tabular report plus footer notes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<(String, String)>,
}

impl Table {
    fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let columns = r
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Table {
            columns,
            rows,
            notes: Vec::new(),
        })
    }

    fn append(&mut self, other: Table) -> Result<()> {
        if self.columns.is_empty() {
            self.columns = other.columns;
        } else if self.columns != other.columns {
            return Err(Error::Invariant("tables with different columns".into()));
        }
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
        Ok(())
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Table(Table),
    /// Rendered as JSON, or as `key,value` rows of its scalar leaves in CSV.
    Object(Value),
}

fn cell(s: &str) -> Value {
    match s {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => match s.parse::<serde_json::Number>() {
            Ok(n) => Value::Number(n),
            Err(_) => Value::String(s.to_string()),
        },
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_bytes(columns: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(columns).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

impl Report {
    /// CSV reports open with a `#` line carrying version and config hash
    /// and close with `# key: value` notes.
    pub fn render(&self, cfg: &RunConfig) -> Result<Vec<u8>> {
        let hash = cfg.hash();
        let cmd = cfg.command.name();
        match (self, cfg.format) {
            (Report::Table(t), Format::Csv) => {
                let mut out = format!("# modcount {VERSION} {cmd} config={hash}\n").into_bytes();
                out.extend(csv_bytes(&t.columns, &t.rows)?);
                for (k, v) in &t.notes {
                    out.extend(format!("# {k}: {v}\n").into_bytes());
                }
                Ok(out)
            }
            (Report::Table(t), Format::Json) => {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            t.columns
                                .iter()
                                .cloned()
                                .zip(r.iter().map(|s| cell(s)))
                                .collect(),
                        )
                    })
                    .collect();
                let notes: Map<String, Value> =
                    t.notes.iter().map(|(k, v)| (k.clone(), cell(v))).collect();
                let v = json!({"modcount": VERSION, "command": cmd, "config_hash": hash, "rows": rows, "notes": notes});
                let mut s =
                    serde_json::to_vec_pretty(&v).map_err(|e| Error::Parse(e.to_string()))?;
                s.push(b'\n');
                Ok(s)
            }
            (Report::Object(v), Format::Json) => {
                let mut v = v.clone();
                if let Value::Object(m) = &mut v {
                    m.insert("modcount".into(), json!(VERSION));
                    m.insert("command".into(), json!(cmd));
                    m.insert("config_hash".into(), json!(hash));
                }
                let mut s =
                    serde_json::to_vec_pretty(&v).map_err(|e| Error::Parse(e.to_string()))?;
                s.push(b'\n');
                Ok(s)
            }
            (Report::Object(v), Format::Csv) => {
                let mut pairs = Vec::new();
                flatten("", v, &mut pairs);
                let rows: Vec<Vec<String>> = pairs.into_iter().map(|(k, v)| vec![k, v]).collect();
                let mut out = format!("# modcount {VERSION} {cmd} config={hash}\n").into_bytes();
                out.extend(csv_bytes(&["key".into(), "value".into()], &rows)?);
                Ok(out)
            }
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Built,
    Cached,
    /// A cache file existed but failed validation and was replaced.
    Rebuilt,
}

impl CacheStatus {
    fn as_str(self) -> &'static str {
        match self {
            CacheStatus::Built => "built",
            CacheStatus::Cached => "cached",
            CacheStatus::Rebuilt => "rebuilt",
        }
    }
}

/// Loads the census at `p` from `dir`, re-checking its invariants, or
/// builds and caches it.
pub fn load_or_build_census(dir: &Path, p: u64) -> Result<(CurveCensus, CacheStatus)> {
    let path = dir.join(census_file_name(p));
    let mut status = CacheStatus::Built;
    if path.exists() {
        let loaded = File::open(&path)
            .map_err(Error::from)
            .and_then(|f| read_census_jsonl(BufReader::new(f)));
        match loaded {
            Ok(c) if c.p() == p => return Ok((c, CacheStatus::Cached)),
            Ok(c) => eprintln!("warning: {} holds p={}, rebuilding", path.display(), c.p()),
            Err(e) => eprintln!("warning: {} is invalid ({e}), rebuilding", path.display()),
        }
        status = CacheStatus::Rebuilt;
    }
    let census = build_census(PrimeField::new(p)?).map_err(|e| match e {
        Error::Resource(m) => Error::Resource(format!("census at p={p}: {m}")),
        other => other,
    })?;
    let mut bytes = Vec::new();
    write_census_jsonl(&census, &mut bytes)?;
    atomic_write(&path, &bytes)?;
    Ok((census, status))
}

fn prime_at_least_5(q: u64) -> bool {
    q >= 5 && is_prime(q)
}

/// Primes `>= 5` coprime to the level; everything else goes into `skipped`.
fn census_primes(qs: &[u64], level: Option<&LevelSpec>, skipped: &mut Vec<u64>) -> Vec<u64> {
    qs.iter()
        .copied()
        .filter(|&q| {
            let ok = prime_at_least_5(q) && level.map_or(true, |l| gcd(q, l.level()) == 1);
            if !ok {
                skipped.push(q);
            }
            ok
        })
        .collect()
}

fn joined(v: &[u64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn run_census(cfg: &RunConfig) -> Result<Report> {
    let mut rejected = Vec::new();
    let primes = census_primes(cfg.need_qs()?, None, &mut rejected);
    if !rejected.is_empty() {
        eprintln!("skipping {}: not primes >= 5", joined(&rejected));
    }
    let mut t = Table {
        columns: ["p", "classes", "orbit_total", "mass", "status"]
            .map(String::from)
            .to_vec(),
        ..Default::default()
    };
    for p in primes {
        let (c, status) = load_or_build_census(&cfg.cache_dir, p)?;
        t.rows.push(vec![
            p.to_string(),
            c.classes.len().to_string(),
            c.orbit_total().to_string(),
            c.mass().to_string(),
            status.as_str().to_string(),
        ]);
    }
    if !rejected.is_empty() {
        t.note("rejected", joined(&rejected));
    }
    Ok(Report::Table(t))
}

fn run_cusps(cfg: &RunConfig) -> Result<Report> {
    if cfg.levels.is_empty() {
        return Err(Error::BadInput("cusps needs --level".into()));
    }
    let mut t = Table::default();
    for level in &cfg.levels {
        let (qs, skipped): (Vec<u64>, Vec<u64>) = cfg
            .need_qs()?
            .iter()
            .partition(|&&q| q >= 2 && gcd(q, level.level()) == 1);
        let mut buf = Vec::new();
        write_cusp_csv(&cusp_rows(level, &qs)?, &mut buf)?;
        t.append(Table::from_csv(&buf)?)?;
        if !skipped.is_empty() {
            t.note(format!("skipped for {level}"), joined(&skipped));
        }
    }
    Ok(Report::Table(t))
}

fn run_hgamma(cfg: &RunConfig) -> Result<Report> {
    let level = cfg.single_level()?;
    let mut skipped = Vec::new();
    let primes = census_primes(cfg.need_qs()?, Some(&level), &mut skipped);
    let mut t = Table::default();
    for q in primes {
        let (c, _) = load_or_build_census(&cfg.cache_dir, q)?;
        let table = h_gamma(&level, &c)?;
        let mut buf = Vec::new();
        write_hgamma_csv(&table, &mut buf)?;
        t.append(Table::from_csv(&buf)?)?;
        t.note(format!("sum H q={q}"), moment(&table, 0));
    }
    if !skipped.is_empty() {
        t.note("skipped", joined(&skipped));
    }
    Ok(Report::Table(t))
}

fn run_moments(cfg: &RunConfig) -> Result<Report> {
    let level = cfg.single_level()?;
    let mut skipped = Vec::new();
    let primes = census_primes(cfg.need_qs()?, Some(&level), &mut skipped);
    let mut tables = Vec::new();
    for &q in &primes {
        let (c, _) = load_or_build_census(&cfg.cache_dir, q)?;
        for r in 0..=cfg.r {
            let (lhs, rhs) = moment_identity(&level, &c, r)?;
            if lhs != rhs {
                return Err(Error::Invariant(format!(
                    "moment identity fails for {level}, q={q}, R={r}: {lhs} != {rhs}"
                )));
            }
        }
        tables.push(h_gamma(&level, &c)?);
    }
    let mut buf = Vec::new();
    write_moments_csv(&tables, cfg.r, &mut buf)?;
    let mut t = Table::from_csv(&buf)?;
    t.note(
        "identity",
        format!(
            "q/(q-1) sum a^R H = sum omega E_q(a^R Phi) holds for R=0..{} at q in {}",
            cfg.r,
            joined(&primes)
        ),
    );
    if !skipped.is_empty() {
        t.note("skipped", joined(&skipped));
    }
    Ok(Report::Table(t))
}

fn family_cache_path(cfg: &RunConfig, level: &LevelSpec, bound: u64) -> PathBuf {
    cfg.cache_dir.join(format!("family_{level}_B{bound}.jsonl"))
}

/// A complete family from the cache or by enumeration. Errors with
/// `Resource` when the parameter box is above the CLI's enumeration ceiling.
fn load_or_generate_family(
    cfg: &RunConfig,
    param: &FamilyParametrization,
    bound: u64,
) -> Result<Vec<GlobalCurve>> {
    let path = family_cache_path(cfg, &param.level, bound);
    if path.exists() {
        match File::open(&path)
            .map_err(Error::from)
            .and_then(|f| read_family_jsonl(BufReader::new(f)))
        {
            Ok(curves) => return Ok(curves),
            Err(e) => eprintln!("warning: {} is invalid ({e}), regenerating", path.display()),
        }
    }
    let opts = GenerationOptions {
        ceiling: ENUMERATION_CEILING,
        ..Default::default()
    };
    let fam = generate_family_with(param, bound, opts)?;
    if !fam.complete {
        return Err(Error::Invariant(format!(
            "{} family at B={bound} is not provably complete (content bound unproven or the wider rescan found more curves)",
            param.level
        )));
    }
    let mut bytes = Vec::new();
    write_family_jsonl(&fam, &mut bytes)?;
    atomic_write(&path, &bytes)?;
    Ok(fam.curves)
}

fn run_family(cfg: &RunConfig) -> Result<Report> {
    let level = cfg.single_level()?;
    let bound = cfg.need_b()?;
    let param = builtin_parametrization(&level)?;
    let curves = load_or_generate_family(cfg, &param, bound)?;
    let mut lines = Vec::new();
    write_curves_jsonl(&curves, &mut lines)?;
    let parsed: Vec<Value> = lines
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_slice(l).map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    match cfg.format {
        Format::Json => Ok(Report::Object(json!({
            "level": level.to_string(),
            "B": bound,
            "count": curves.len(),
            "curves": parsed,
        }))),
        Format::Csv => {
            let mut t = Table {
                columns: ["t0", "t1", "A", "B", "height12"]
                    .map(String::from)
                    .to_vec(),
                ..Default::default()
            };
            for v in &parsed {
                let s = |x: &Value| x.to_string();
                t.rows.push(vec![
                    s(&v["t"][0]),
                    s(&v["t"][1]),
                    s(&v["A"]),
                    s(&v["B"]),
                    s(&v["height12"]),
                ]);
            }
            t.note("count", curves.len());
            Ok(Report::Table(t))
        }
    }
}

enum FamilySource {
    Scan,
    Enumerated(Vec<GlobalCurve>),
    Sampled(Vec<GlobalCurve>),
}

fn family_source(
    cfg: &RunConfig,
    param: &FamilyParametrization,
    bound: u64,
) -> Result<FamilySource> {
    if param.level == LevelSpec::gamma1(5) && bound <= SCAN_CEILING {
        return Ok(FamilySource::Scan);
    }
    match load_or_generate_family(cfg, param, bound) {
        Ok(c) => Ok(FamilySource::Enumerated(c)),
        Err(Error::Resource(why)) => {
            eprintln!(
                "note: {why}; sampling {} curves with seed {}",
                cfg.samples, cfg.seed
            );
            Ok(FamilySource::Sampled(
                sample_family(param, bound, cfg.samples, cfg.seed)?.curves,
            ))
        }
        Err(e) => Err(e),
    }
}

/// Statistics at each prime, the number of curves they describe and the method.
fn family_statistics(
    cfg: &RunConfig,
    param: &FamilyParametrization,
    bound: u64,
    censuses: &[CurveCensus],
) -> Result<(Vec<LocalStatistics>, u64, &'static str)> {
    match family_source(cfg, param, bound)? {
        FamilySource::Scan => {
            let rep = gamma1_5_scan(&[bound], censuses)?;
            let stats = censuses
                .iter()
                .enumerate()
                .map(|(i, c)| rep.statistics(0, i, c))
                .collect();
            Ok((stats, rep.totals[0], "scan"))
        }
        FamilySource::Enumerated(curves) | FamilySource::Sampled(curves) if curves.is_empty() => {
            Err(Error::BadInput(format!(
                "no {} curves of height <= {bound}",
                param.level
            )))
        }
        FamilySource::Enumerated(curves) => {
            let stats = censuses
                .iter()
                .map(|c| local_statistics(&param.level, &curves, c))
                .collect::<Result<_>>()?;
            Ok((stats, curves.len() as u64, "enumeration"))
        }
        FamilySource::Sampled(curves) => {
            let stats = censuses
                .iter()
                .map(|c| local_statistics(&param.level, &curves, c))
                .collect::<Result<_>>()?;
            Ok((stats, curves.len() as u64, "sample"))
        }
    }
}

fn run_local_stats(cfg: &RunConfig) -> Result<Report> {
    let level = cfg.single_level()?;
    let bound = cfg.need_b()?;
    let param = builtin_parametrization(&level)?;
    let mut skipped = Vec::new();
    let primes = census_primes(cfg.need_qs()?, Some(&level), &mut skipped);
    let censuses = primes
        .iter()
        .map(|&q| load_or_build_census(&cfg.cache_dir, q).map(|c| c.0))
        .collect::<Result<Vec<_>>>()?;
    let (stats, count, method) = family_statistics(cfg, &param, bound, &censuses)?;
    let rows = stats
        .into_iter()
        .zip(&censuses)
        .map(|(s, c)| Ok((s, predictions(&param, c)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_stats_csv(&rows, &mut buf)?;
    let mut t = Table::from_csv(&buf)?;
    t.note("level", level);
    t.note("B", bound);
    t.note("method", method);
    t.note("curves", count);
    if method == "sample" {
        t.note("seed", cfg.seed);
    }
    if !skipped.is_empty() {
        t.note("skipped", joined(&skipped));
    }
    Ok(Report::Table(t))
}

fn run_trace(cfg: &RunConfig) -> Result<Report> {
    let level = cfg.single_level()?;
    let group = level.torsion_group();
    let mut skipped = Vec::new();
    let mut reports = Vec::new();
    for q in census_primes(cfg.need_qs()?, Some(&level), &mut skipped) {
        if (q - 1) % group.m2 != 0 || gcd(q - 1, group.m1) != group.m2 {
            skipped.push(q);
            continue;
        }
        let (c, _) = load_or_build_census(&cfg.cache_dir, q)?;
        reports.push(solve_trace(cfg.k, &c, group)?);
    }
    let mut buf = Vec::new();
    write_trace_csv(&reports, &mut buf)?;
    let mut t = Table::from_csv(&buf)?;
    skipped.sort_unstable();
    if !skipped.is_empty() {
        t.note(
            "skipped (not prime, not coprime, or several nu terms)",
            joined(&skipped),
        );
    }
    if let Some(r) = reports
        .iter()
        .find(|r| !r.integer_verdict || !r.deligne_verdict)
    {
        let bytes = Report::Table(t).render(cfg)?;
        emit(cfg, &bytes)?;
        return Err(Error::Invariant(format!(
            "solved trace {} at q={} fails the {} check",
            r.solved_trace,
            r.params.q,
            if r.integer_verdict {
                "Deligne"
            } else {
                "integrality"
            }
        )));
    }
    Ok(Report::Table(t))
}

fn run_rank_bound(cfg: &RunConfig) -> Result<Report> {
    let level = cfg.single_level()?;
    let x = cfg
        .x
        .ok_or_else(|| Error::BadInput("rank-bound needs --X".into()))?;
    if !(x >= 2.0 && x.fract() == 0.0 && x <= 1e12) {
        return Err(Error::BadInput(format!(
            "--X must be an integer height bound >= 2, got {x}"
        )));
    }
    let param = builtin_parametrization(&level)?;
    let primes = required_primes(&level, x, cfg.sigma)?;
    if primes.is_empty() {
        return Err(Error::BadInput(format!(
            "no admissible primes below X^sigma = {}",
            x.powf(cfg.sigma)
        )));
    }
    let censuses = primes
        .iter()
        .map(|&q| load_or_build_census(&cfg.cache_dir, q).map(|c| c.0))
        .collect::<Result<Vec<_>>>()?;
    let (stats, count, method) = family_statistics(cfg, &param, x as u64, &censuses)?;
    let moments = FamilyMoments::from_statistics(level, x, count, &stats)?;
    let report = s1_s2_empirical(&moments, cfg.sigma)?;
    let mut v = serde_json::to_value(&report).map_err(|e| Error::Parse(e.to_string()))?;
    v["method"] = json!(method);
    Ok(Report::Object(v))
}

/// Runs one resolved configuration and returns its report.
pub fn execute(cfg: &RunConfig) -> Result<Report> {
    let go = || match cfg.command {
        Command::Census => run_census(cfg),
        Command::Cusps => run_cusps(cfg),
        Command::Hgamma => run_hgamma(cfg),
        Command::Moments => run_moments(cfg),
        Command::Family => run_family(cfg),
        Command::LocalStats => run_local_stats(cfg),
        Command::Trace => run_trace(cfg),
        Command::RankBound => run_rank_bound(cfg),
    };
    match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Resource(format!("cannot start {j} workers: {e}")))?
            .install(go),
        None => go(),
    }
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &cfg.out {
        Some(p) => atomic_write(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::resolve(cli.command, cli.flags).and_then(|cfg| {
        execute(&cfg)
            .and_then(|r| r.render(&cfg))
            .and_then(|b| emit(&cfg, &b))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        let cli =
            Cli::try_parse_from(std::iter::once("modcount").chain(args.iter().copied())).unwrap();
        RunConfig::resolve(cli.command, cli.flags).unwrap()
    }

    #[test]
    fn flags_parse_and_ranges_merge() {
        let c = cfg(&[
            "hgamma",
            "--level",
            "G1-5",
            "--q",
            "11,7",
            "--q-range",
            "5..7",
            "--B",
            "1e4",
        ]);
        assert_eq!(c.levels, vec![LevelSpec::gamma1(5)]);
        assert_eq!(c.qs, vec![5, 6, 7, 11]);
        assert_eq!(c.b, Some(10_000));
        assert_eq!(c.format, Format::Csv);
    }

    #[test]
    fn hash_ignores_plumbing_flags() {
        let a = cfg(&["cusps", "--level", "G1-5", "--q", "7", "--jobs", "1"]);
        let b = cfg(&[
            "cusps", "--level", "G1-5", "--q", "7", "--format", "json", "--out", "x.csv",
        ]);
        let c = cfg(&["cusps", "--level", "G1-6", "--q", "7"]);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn config_file_fills_missing_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        fs::write(&p, "# defaults\nlevel=G1-7\nq=11,13\nsigma=0.5\n").unwrap();
        let c = cfg(&["moments", "--config", p.to_str().unwrap(), "--q", "5"]);
        assert_eq!(c.levels, vec![LevelSpec::gamma1(7)]);
        assert_eq!(c.qs, vec![5]);
        assert_eq!(c.sigma, 0.5);
        fs::write(&p, "colour=blue\n").unwrap();
        let cli =
            Cli::try_parse_from(["modcount", "census", "--config", p.to_str().unwrap()]).unwrap();
        assert!(matches!(
            RunConfig::resolve(cli.command, cli.flags),
            Err(Error::BadInput(_))
        ));
    }

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e5"), Ok(100_000));
        assert_eq!(parse_count("2_000"), Ok(2000));
        assert!(parse_count("1.5").is_err());
    }
}
