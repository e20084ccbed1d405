//! Scenario harness: key-value scenario files, the verification checklist
//! over a real quadratic field at a split prime, a content-addressed result
//! cache, and deterministic JSON reports.
//!
//! A scenario file is plain `key = value` text with `#` comments. Field
//! scenarios name a discriminant and a split prime:
//!
//! ```text
//! kind = field
//! disc = 229
//! p = 3
//! precision = 12
//! checks = lvalue, b0, lambda-model, lemma-cyc, unit-index, prime-class, cohomology
//! ```
//!
//! Synthetic tower scenarios (`kind = lambda`) sweep relation polynomials
//! T - u p^e over lists of scales, base levels and cohomology degrees.
//!
//! Reports split into a deterministic `body` (no floats, no timestamps,
//! residues as decimal strings tagged with p and certified precision) whose
//! serialization is hashed into `body_sha256`, and a `meta` block holding
//! wall-clock data and cache statistics. Two runs over the same scenarios
//! produce byte-identical bodies.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::characters::quadratic_character;
use crate::cohomology::{
    eigenspace_cohomology_commutes, herbrand_check, sample_module, tate_cohomology,
    FiniteAbelianGroup, GroupModule,
};
use crate::cyclotomic::b0_order;
use crate::iwasawa::{b0_model, bn_model_cohomology, IwasawaPoly};
use crate::lfunction::{lp_at_one_interpolate, lp_at_one_log};
use crate::padic::is_small_prime;
use crate::quadratic::{unit_index_comparison, ClassGroup};
use crate::{Error, Result};

/// Schema identifier embedded in every report body.
pub const REPORT_SCHEMA: &str = "cyclounits-report-v1";

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "CYCLOUNITS_CACHE_DIR";

/// Cache entries key on this constant besides the operation and its inputs,
/// so bumping the trailing revision invalidates every stored result.
const CACHE_VERSION: &str = concat!("cyclounits-", env!("CARGO_PKG_VERSION"), "-r1");

const MAX_PRECISION: u32 = 24;
const MAX_BASE_LEVEL: u32 = 6;
const MAX_LEVEL: u32 = 12;
const MAX_EXPONENT: u32 = 6;
const MAX_CASES: u32 = 100_000;
const MAX_DISC: i64 = 1_000_000;

// ---------------------------------------------------------------------------
// cache

/// Counters for one run. Spot checks recompute a sampled fraction of cache
/// hits and evict on mismatch, so nonzero evictions flag a corrupt store.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub spot_checks: u64,
    pub evictions: u64,
}

/// Where cached results live for a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum CacheMode {
    /// Compute everything in-process.
    Disabled,
    /// `CYCLOUNITS_CACHE_DIR` if set, else `$HOME/.cache/cyclounits`, else a
    /// directory under the system temp path.
    #[default]
    FromEnv,
    /// An explicit directory.
    Dir(PathBuf),
}

fn default_cache_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_DIR_ENV) {
        return PathBuf::from(d);
    }
    if let Some(h) = std::env::var_os("HOME") {
        return PathBuf::from(h).join(".cache").join("cyclounits");
    }
    std::env::temp_dir().join("cyclounits-cache")
}

/// Content-addressed store of expensive results, keyed on the operation
/// name, a canonical input encoding and the code version. Entries are
/// written to a temporary name and renamed into place, so concurrent
/// scenarios never observe partial files. Unreadable entries are evicted
/// and recomputed.
struct Cache {
    dir: Option<PathBuf>,
    version: String,
    /// A hit is re-verified against recomputation with probability
    /// 1/spot_rate; zero disables spot checks.
    spot_rate: u32,
    stats: Mutex<CacheStats>,
    tmp_counter: AtomicU64,
}

impl Cache {
    fn new(mode: &CacheMode) -> Cache {
        Cache::with_version(mode, CACHE_VERSION, 8)
    }

    fn with_version(mode: &CacheMode, version: &str, spot_rate: u32) -> Cache {
        let dir = match mode {
            CacheMode::Disabled => None,
            CacheMode::FromEnv => Some(default_cache_dir()),
            CacheMode::Dir(d) => Some(d.clone()),
        };
        Cache {
            dir,
            version: version.to_string(),
            spot_rate,
            stats: Mutex::new(CacheStats::default()),
            tmp_counter: AtomicU64::new(0),
        }
    }

    fn stats(&self) -> CacheStats {
        self.stats.lock().expect("cache stats lock").clone()
    }

    fn bump(&self, f: impl FnOnce(&mut CacheStats)) {
        f(&mut self.stats.lock().expect("cache stats lock"));
    }

    fn entry_path(&self, op: &str, input: &str) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let mut h = Sha256::new();
        h.update(op.as_bytes());
        h.update([0x1f]);
        h.update(input.as_bytes());
        h.update([0x1f]);
        h.update(self.version.as_bytes());
        Some(dir.join(format!("{}.json", hex_digest(&h.finalize()))))
    }

    fn store<T: Serialize>(&self, path: &Path, value: &T) {
        let Some(dir) = path.parent() else { return };
        if fs::create_dir_all(dir).is_err() {
            return;
        }
        let tmp = dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            self.tmp_counter.fetch_add(1, Ordering::Relaxed)
        ));
        let Ok(bytes) = serde_json::to_vec(value) else {
            return;
        };
        if fs::write(&tmp, &bytes).is_ok() {
            let _ = fs::rename(&tmp, path);
        } else {
            let _ = fs::remove_file(&tmp);
        }
    }

    /// Fetch a stored result or compute and store it. Errors from the
    /// computation are never cached.
    fn get_or_compute<T, F>(&self, op: &str, input: &str, f: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned + PartialEq,
        F: FnOnce() -> Result<T>,
    {
        let Some(path) = self.entry_path(op, input) else {
            return f();
        };
        if let Ok(bytes) = fs::read(&path) {
            if let Ok(stored) = serde_json::from_slice::<T>(&bytes) {
                let spot =
                    self.spot_rate > 0 && rand::thread_rng().gen_ratio(1, self.spot_rate);
                self.bump(|s| s.hits += 1);
                if !spot {
                    return Ok(stored);
                }
                self.bump(|s| s.spot_checks += 1);
                let fresh = f()?;
                if fresh == stored {
                    return Ok(stored);
                }
                let _ = fs::remove_file(&path);
                self.bump(|s| s.evictions += 1);
                self.store(&path, &fresh);
                return Ok(fresh);
            }
            let _ = fs::remove_file(&path);
            self.bump(|s| s.evictions += 1);
        }
        let value = f()?;
        self.bump(|s| s.misses += 1);
        self.store(&path, &value);
        Ok(value)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

// ---------------------------------------------------------------------------
// scenarios

/// The parameter block of a parsed scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    /// A real quadratic field with a split odd prime.
    Field {
        disc: i64,
        p: u64,
        /// Working precision K: computations run modulo p^K.
        precision: u32,
        /// Interpolation node count for the series construction.
        points: u32,
        /// Lower tower level m.
        base_level: u32,
        /// Optional upper level override; derived from the margin rule
        /// n = m + v + 1 when absent.
        level: Option<u32>,
        /// Standing assumption that the tower has no growing free part.
        /// When false, closed-form tower checks are reported informational.
        lambda_zero: bool,
        /// Randomized cases per cohomology property suite.
        cases: u32,
    },
    /// Synthetic tower modules for relation polynomials T - u p^e.
    Lambda {
        p: u64,
        precision: u32,
        /// Valuation e of the constant term.
        exponent: u32,
        /// Scale factors u, each coprime to p.
        scales: Vec<u64>,
        /// Lower levels m; the upper level is always m + e + 2.
        base_levels: Vec<u32>,
        /// Cohomology degrees q.
        degrees: Vec<i64>,
    },
}

/// One verification check selectable in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// The p-adic L-value computed by two independent methods agrees.
    Lvalue,
    /// The bottom-layer unit index order equals the L-value p-part.
    B0Order,
    /// Tower module cohomology matches the closed form Z_p / f(0).
    LambdaModel,
    /// Trivial and relative-unit modules over a cyclic layer have the
    /// pinned cohomology orders.
    LemmaCyc,
    /// Class number p-part equals the circular unit index p-part.
    UnitIndex,
    /// Order of the class of a prime above p, reported informationally.
    PrimeClass,
    /// Randomized cohomology property suites.
    Cohomology,
}

impl CheckKind {
    const FIELD_DEFAULT: [CheckKind; 7] = [
        CheckKind::Lvalue,
        CheckKind::B0Order,
        CheckKind::LambdaModel,
        CheckKind::LemmaCyc,
        CheckKind::UnitIndex,
        CheckKind::PrimeClass,
        CheckKind::Cohomology,
    ];

    /// Stable slug used in scenario files and reports.
    pub fn slug(self) -> &'static str {
        match self {
            CheckKind::Lvalue => "lvalue",
            CheckKind::B0Order => "b0",
            CheckKind::LambdaModel => "lambda-model",
            CheckKind::LemmaCyc => "lemma-cyc",
            CheckKind::UnitIndex => "unit-index",
            CheckKind::PrimeClass => "prime-class",
            CheckKind::Cohomology => "cohomology",
        }
    }

    fn from_slug(s: &str) -> Option<CheckKind> {
        CheckKind::FIELD_DEFAULT
            .iter()
            .copied()
            .find(|k| k.slug() == s)
    }

    fn title(self) -> &'static str {
        match self {
            CheckKind::Lvalue => "p-adic L-value by two methods",
            CheckKind::B0Order => "bottom layer order against the L-value",
            CheckKind::LambdaModel => "tower module closed form",
            CheckKind::LemmaCyc => "cyclic layer cohomology orders",
            CheckKind::UnitIndex => "class number p-part against the unit index",
            CheckKind::PrimeClass => "split prime class order",
            CheckKind::Cohomology => "randomized cohomology property suites",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// A validated scenario: parameters plus the ordered check selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    spec: ScenarioSpec,
    checks: Vec<CheckKind>,
}

impl Scenario {
    /// Parse and validate the key-value format. `fallback_name` names the
    /// scenario when the text has no `name` key.
    pub fn parse(text: &str, fallback_name: &str) -> Result<Scenario> {
        let mut keys = parse_kv(text)?;
        let name = keys
            .take("name")
            .unwrap_or_else(|| fallback_name.to_string());
        if name.is_empty() {
            return Err(Error::Input("scenario name is empty".into()));
        }
        let kind = keys.take("kind").unwrap_or_else(|| "field".to_string());
        let scenario = match kind.as_str() {
            "field" => parse_field_scenario(name, &mut keys)?,
            "lambda" => parse_lambda_scenario(name, &mut keys)?,
            other => {
                return Err(Error::Input(format!(
                    "unknown scenario kind {other:?}, expected field or lambda"
                )))
            }
        };
        keys.finish()?;
        Ok(scenario)
    }

    /// Load a scenario file; the file stem is the fallback name.
    pub fn from_file(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        Scenario::parse(&text, &stem)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn checks(&self) -> &[CheckKind] {
        &self.checks
    }
}

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                Error::Input(format!("key {key}: cannot parse value {v:?}"))
            }),
        }
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.0.remove(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in v.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            out.push(part.parse::<T>().map_err(|_| {
                Error::Input(format!("key {key}: cannot parse list entry {part:?}"))
            })?);
        }
        if out.is_empty() {
            return Err(Error::Input(format!("key {key}: empty list")));
        }
        Ok(Some(out))
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.0.keys().next() {
            return Err(Error::Input(format!("unknown scenario key {k:?}")));
        }
        Ok(())
    }
}

fn parse_kv(text: &str) -> Result<Keys> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Input(format!(
                "line {}: expected key = value, got {line:?}",
                idx + 1
            )));
        };
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Input(format!(
                "line {}: duplicate key {key:?}",
                idx + 1
            )));
        }
    }
    Ok(Keys(map))
}

fn parse_checks(keys: &mut Keys, allowed: &[CheckKind]) -> Result<Vec<CheckKind>> {
    let Some(raw) = keys.take("checks") else {
        return Ok(allowed.to_vec());
    };
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let kind = CheckKind::from_slug(part)
            .ok_or_else(|| Error::Input(format!("unknown check {part:?}")))?;
        if !allowed.contains(&kind) {
            return Err(Error::Input(format!(
                "check {part:?} does not apply to this scenario kind"
            )));
        }
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(Error::Input("empty check selection".into()));
    }
    Ok(out)
}

fn require_odd_prime(p: u64) -> Result<()> {
    if p < 3 || p % 2 == 0 || !is_small_prime(p) {
        return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
    }
    Ok(())
}

fn range_check<T: PartialOrd + fmt::Display + Copy>(
    key: &str,
    value: T,
    lo: T,
    hi: T,
) -> Result<()> {
    if value < lo || value > hi {
        return Err(Error::Input(format!(
            "key {key}: value {value} outside [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn parse_field_scenario(name: String, keys: &mut Keys) -> Result<Scenario> {
    let disc: i64 = keys
        .take_parse("disc")?
        .ok_or_else(|| Error::Input("field scenario needs a disc key".into()))?;
    let p: u64 = keys
        .take_parse("p")?
        .ok_or_else(|| Error::Input("field scenario needs a p key".into()))?;
    let precision: u32 = keys.take_parse("precision")?.unwrap_or(12);
    let points: u32 = keys.take_parse("points")?.unwrap_or(8);
    let base_level: u32 = keys.take_parse("m")?.unwrap_or(0);
    let level: Option<u32> = keys.take_parse("n")?;
    let lambda_zero: bool = keys.take_parse("lambda_zero")?.unwrap_or(true);
    let cases: u32 = keys.take_parse("cases")?.unwrap_or(200);
    let checks = parse_checks(keys, &CheckKind::FIELD_DEFAULT)?;

    require_odd_prime(p)?;
    if disc <= 0 {
        return Err(Error::Hypothesis(format!(
            "disc = {disc}: real quadratic fields need a positive discriminant"
        )));
    }
    range_check("disc", disc, 5, MAX_DISC)?;
    let chi = quadratic_character(disc)?;
    match chi.value_quadratic(p) {
        1 => {}
        0 => {
            return Err(Error::Hypothesis(format!(
                "p = {p} ramifies in discriminant {disc}"
            )))
        }
        _ => {
            return Err(Error::Hypothesis(format!(
                "p = {p} is inert in discriminant {disc}, the split hypothesis fails"
            )))
        }
    }
    range_check("precision", precision, 4, MAX_PRECISION)?;
    range_check("points", points, 2, 24)?;
    range_check("m", base_level, 0, MAX_BASE_LEVEL)?;
    if let Some(n) = level {
        if n <= base_level {
            return Err(Error::Input(format!(
                "key n: level {n} must exceed the base level {base_level}"
            )));
        }
        range_check("n", n, base_level + 1, MAX_LEVEL)?;
    }
    range_check("cases", cases, 1, MAX_CASES)?;

    Ok(Scenario {
        name,
        spec: ScenarioSpec::Field {
            disc,
            p,
            precision,
            points,
            base_level,
            level,
            lambda_zero,
            cases,
        },
        checks,
    })
}

fn parse_lambda_scenario(name: String, keys: &mut Keys) -> Result<Scenario> {
    let exponent: u32 = keys
        .take_parse("e")?
        .ok_or_else(|| Error::Input("lambda scenario needs an e key".into()))?;
    let p: u64 = keys.take_parse("p")?.unwrap_or(3);
    let precision: u32 = keys
        .take_parse("precision")?
        .unwrap_or_else(|| 12.max(exponent + 6));
    let scales: Vec<u64> = keys.take_list("u")?.unwrap_or_else(|| vec![1, 2]);
    let base_levels: Vec<u32> = keys.take_list("m")?.unwrap_or_else(|| vec![0, 1]);
    let degrees: Vec<i64> = keys.take_list("q")?.unwrap_or_else(|| vec![0, -1]);
    let checks = parse_checks(keys, &[CheckKind::LambdaModel])?;

    require_odd_prime(p)?;
    range_check("e", exponent, 0, MAX_EXPONENT)?;
    range_check("precision", precision, exponent + 4, MAX_PRECISION)?;
    for list in [
        ("u", scales.len()),
        ("m", base_levels.len()),
        ("q", degrees.len()),
    ] {
        range_check(list.0, list.1, 1, 16)?;
    }
    for &u in &scales {
        range_check("u", u, 1, 10_000)?;
        if u % p == 0 {
            return Err(Error::Input(format!(
                "key u: scale {u} must be coprime to p = {p}"
            )));
        }
    }
    for &m in &base_levels {
        range_check("m", m, 0, 4)?;
        if m + exponent + 4 > precision {
            return Err(Error::Input(format!(
                "key m: level {m} needs precision at least {}",
                m + exponent + 4
            )));
        }
    }
    for &q in &degrees {
        range_check("q", q, -3, 3)?;
    }

    Ok(Scenario {
        name,
        spec: ScenarioSpec::Lambda {
            p,
            precision,
            exponent,
            scales,
            base_levels,
            degrees,
        },
        checks,
    })
}

// ---------------------------------------------------------------------------
// reports

/// Outcome of one check. Indeterminate marks precision exhaustion: the
/// computation refused to certify a digit the comparison needed, which is
/// never counted as a pass. Info records a comparison that does not gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Indeterminate,
    Info,
}

impl CheckStatus {
    /// True when this status blocks a clean exit.
    pub fn gates(self) -> bool {
        matches!(self, CheckStatus::Fail | CheckStatus::Indeterminate)
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Indeterminate => "indeterminate",
            CheckStatus::Info => "info",
        })
    }
}

/// One reported quantity: a decimal string, the method that produced it,
/// and for p-adic residues the prime and certified precision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueRecord {
    pub label: String,
    pub value: String,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
}

impl ValueRecord {
    fn plain(label: &str, value: impl fmt::Display, method: &str) -> ValueRecord {
        ValueRecord {
            label: label.to_string(),
            value: value.to_string(),
            method: method.to_string(),
            p: None,
            precision: None,
        }
    }

    fn padic(
        label: &str,
        value: impl fmt::Display,
        method: &str,
        p: u64,
        precision: u32,
    ) -> ValueRecord {
        ValueRecord {
            label: label.to_string(),
            value: value.to_string(),
            method: method.to_string(),
            p: Some(p),
            precision: Some(precision),
        }
    }
}

/// Result of one check inside a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    /// Stable slug, matching the scenario file selection.
    pub check: String,
    pub title: String,
    pub status: CheckStatus,
    pub inputs: BTreeMap<String, String>,
    pub values: Vec<ValueRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// All check results for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub spec: ScenarioSpec,
    pub checks: Vec<CheckReport>,
}

impl Report {
    /// True when no check failed or came back indeterminate.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| !c.status.gates())
    }
}

/// Deterministic part of a suite run; hashed into `body_sha256`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteBody {
    pub schema: String,
    pub reports: Vec<Report>,
}

/// Nondeterministic run data, kept out of the hashed body.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMeta {
    pub generated_unix_ms: u128,
    /// Wall-clock milliseconds keyed by "scenario/check".
    pub runtimes_ms: BTreeMap<String, u128>,
    pub cache: CacheStats,
}

/// A full run: deterministic body, its hash, and run metadata.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub body: SuiteBody,
    pub body_sha256: String,
    pub meta: RunMeta,
}

impl SuiteReport {
    /// True when every check in every scenario passed or was informational.
    pub fn all_passed(&self) -> bool {
        self.body.reports.iter().all(Report::all_passed)
    }

    /// Canonical serialization of the body, the bytes behind `body_sha256`.
    pub fn body_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.body).expect("report body serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Execution knobs for a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for scenario parallelism; default uses the global pool.
    pub jobs: Option<usize>,
    pub cache: CacheMode,
}

// ---------------------------------------------------------------------------
// cached operations

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SeriesDto {
    residues: Vec<u64>,
    precision: u32,
    bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LpDto {
    residue: String,
    precision: u32,
    degraded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<SeriesDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct UnitIndexDto {
    class_number: u64,
    unit_exponent: i64,
    class_valuation: u32,
    exponent_valuation: u32,
    matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GroupDto {
    order: String,
    /// Invariant factors as decimal strings, ascending; empty when trivial.
    divisors: Vec<String>,
}

impl GroupDto {
    fn of(g: &FiniteAbelianGroup) -> GroupDto {
        GroupDto {
            order: g.order().to_string(),
            divisors: g.divisors().iter().map(|d| d.to_string()).collect(),
        }
    }

    fn is_cyclic_p_power(&self, p: u64, e: u32) -> bool {
        if e == 0 {
            self.divisors.is_empty()
        } else {
            self.divisors == [p_power(p, e).to_string()]
        }
    }
}

fn lp_log_cached(cache: &Cache, disc: i64, p: u64, precision: u32) -> Result<LpDto> {
    cache.get_or_compute("lp-log", &format!("D={disc};p={p};K={precision}"), || {
        let chi = quadratic_character(disc)?;
        let value = lp_at_one_log(&chi, p, precision)?;
        Ok(LpDto {
            residue: value.value().residue()?.to_string(),
            precision: value.precision(),
            degraded: value.is_degraded(),
            series: None,
        })
    })
}

fn lp_interp_cached(
    cache: &Cache,
    disc: i64,
    p: u64,
    precision: u32,
    points: u32,
) -> Result<LpDto> {
    cache.get_or_compute(
        "lp-interp",
        &format!("D={disc};p={p};K={precision};J={points}"),
        || {
            let chi = quadratic_character(disc)?;
            let (value, series) = lp_at_one_interpolate(&chi, p, precision, points)?;
            Ok(LpDto {
                residue: value.value().residue()?.to_string(),
                precision: value.precision(),
                degraded: value.is_degraded(),
                series: Some(SeriesDto {
                    residues: series.coeffs().to_vec(),
                    precision: series.precision(),
                    bound: series.degree_bound(),
                }),
            })
        },
    )
}

fn b0_order_cached(cache: &Cache, disc: i64, p: u64, precision: u32) -> Result<String> {
    cache.get_or_compute("b0-order", &format!("D={disc};p={p};K={precision}"), || {
        Ok(b0_order(disc, p, precision)?.to_string())
    })
}

fn unit_index_cached(cache: &Cache, disc: i64, p: u64) -> Result<UnitIndexDto> {
    cache.get_or_compute("unit-index", &format!("D={disc};p={p}"), || {
        let c = unit_index_comparison(disc, p)?;
        Ok(UnitIndexDto {
            class_number: c.class_number,
            unit_exponent: c.unit_exponent,
            class_valuation: c.class_valuation,
            exponent_valuation: c.exponent_valuation,
            matched: c.matched,
        })
    })
}

fn prime_class_cached(cache: &Cache, disc: i64, p: u64) -> Result<u64> {
    cache.get_or_compute("prime-class", &format!("D={disc};p={p}"), || {
        ClassGroup::compute(disc)?.prime_class_order(p)
    })
}

/// Tower cohomology is the dominant cost at deep levels, so its group
/// structure is cached keyed on the polynomial and the layer data.
fn tower_order_cached<F>(
    cache: &Cache,
    input: &str,
    build: F,
    n: u32,
    m: u32,
    q: i64,
) -> Result<GroupDto>
where
    F: FnOnce() -> Result<IwasawaPoly>,
{
    cache.get_or_compute("tower-order", &format!("{input};n={n};m={m};q={q}"), || {
        Ok(GroupDto::of(&bn_model_cohomology(&build()?, n, m, q)?))
    })
}

// ---------------------------------------------------------------------------
// checks

#[derive(Debug, Clone, Copy)]
struct FieldCase {
    disc: i64,
    p: u64,
    precision: u32,
    points: u32,
    base_level: u32,
    level: Option<u32>,
    lambda_zero: bool,
    cases: u32,
}

fn parse_residue(s: &str) -> Result<BigUint> {
    BigUint::parse_bytes(s.as_bytes(), 10)
        .ok_or_else(|| Error::Internal(format!("malformed cached residue {s:?}")))
}

/// Certified valuation of a nonzero residue mod p^k. A vanishing residue
/// only bounds the valuation from below, so it cannot be certified.
fn residue_valuation(residue: &BigUint, p: u64, precision: u32) -> Result<u32> {
    if residue.is_zero() {
        return Err(Error::PrecisionExhausted(format!(
            "value vanishes to working precision {precision}"
        )));
    }
    let p = BigUint::from(p);
    let mut v = 0;
    let mut rest = residue.clone();
    while (&rest % &p).is_zero() {
        rest /= &p;
        v += 1;
    }
    Ok(v)
}

fn p_power(p: u64, e: u32) -> BigUint {
    BigUint::from(p).pow(e)
}

fn is_cyclic_p_power(g: &FiniteAbelianGroup, p: u64, e: u32) -> bool {
    if e == 0 {
        g.is_trivial()
    } else {
        g.is_cyclic_of(&p_power(p, e))
    }
}

/// Error-to-status mapping shared by every check.
fn status_of_err(e: &Error) -> (CheckStatus, String) {
    match e {
        Error::PrecisionExhausted(_) => (CheckStatus::Indeterminate, e.to_string()),
        _ => (CheckStatus::Fail, e.to_string()),
    }
}

fn check_report(
    kind: CheckKind,
    status: CheckStatus,
    inputs: BTreeMap<String, String>,
    values: Vec<ValueRecord>,
    note: Option<String>,
) -> CheckReport {
    CheckReport {
        check: kind.slug().to_string(),
        title: kind.title().to_string(),
        status,
        inputs,
        values,
        note,
    }
}

fn field_inputs(fc: &FieldCase) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("disc".to_string(), fc.disc.to_string());
    m.insert("p".to_string(), fc.p.to_string());
    m.insert("precision".to_string(), fc.precision.to_string());
    m
}

/// Shared L-value context: the interpolated series, the certified valuation
/// of the value, and the resolved tower levels n > m obeying the margin rule
/// n - m >= v + 1.
struct LContext {
    interp: LpDto,
    valuation: u32,
    level: u32,
    base_level: u32,
}

fn l_context(fc: &FieldCase, cache: &Cache) -> Result<LContext> {
    let log = lp_log_cached(cache, fc.disc, fc.p, fc.precision)?;
    let interp = lp_interp_cached(cache, fc.disc, fc.p, fc.precision, fc.points)?;
    let valuation = residue_valuation(&parse_residue(&log.residue)?, fc.p, log.precision)?;
    let level = match fc.level {
        Some(n) => {
            if n < fc.base_level + valuation + 1 {
                return Err(Error::Input(format!(
                    "level n = {n} is below the margin m + v + 1 = {}",
                    fc.base_level + valuation + 1
                )));
            }
            n
        }
        None => fc.base_level + valuation + 1,
    };
    if level + 2 > fc.precision {
        return Err(Error::PrecisionExhausted(format!(
            "tower level {level} needs precision at least {}",
            level + 2
        )));
    }
    Ok(LContext {
        interp,
        valuation,
        level,
        base_level: fc.base_level,
    })
}

fn check_lvalue(fc: &FieldCase, cache: &Cache) -> CheckReport {
    let kind = CheckKind::Lvalue;
    let mut inputs = field_inputs(fc);
    inputs.insert("points".to_string(), fc.points.to_string());
    let log = match lp_log_cached(cache, fc.disc, fc.p, fc.precision) {
        Ok(v) => v,
        Err(e) => {
            let (status, note) = status_of_err(&e);
            return check_report(kind, status, inputs, vec![], Some(note));
        }
    };
    let interp = match lp_interp_cached(cache, fc.disc, fc.p, fc.precision, fc.points) {
        Ok(v) => v,
        Err(e) => {
            let (status, note) = status_of_err(&e);
            return check_report(kind, status, inputs, vec![], Some(note));
        }
    };
    let values = vec![
        ValueRecord::padic(
            "L-value residue",
            &log.residue,
            "log-derivative",
            fc.p,
            log.precision,
        ),
        ValueRecord::padic(
            "L-value residue",
            &interp.residue,
            "interpolation",
            fc.p,
            interp.precision,
        ),
    ];
    let shared = log.precision.min(interp.precision);
    let modulus = p_power(fc.p, shared);
    let congruent = match (parse_residue(&log.residue), parse_residue(&interp.residue)) {
        (Ok(a), Ok(b)) => a % &modulus == b % &modulus,
        _ => false,
    };
    let mut values = values;
    values.push(ValueRecord::plain(
        "certified agreement digits",
        shared,
        "comparison",
    ));
    let (status, note) = if !congruent {
        (
            CheckStatus::Fail,
            Some(format!("methods disagree modulo {}^{}", fc.p, shared)),
        )
    } else if shared < 6 {
        (
            CheckStatus::Indeterminate,
            Some(format!(
                "agreement certified to only {shared} digits, need 6"
            )),
        )
    } else {
        (CheckStatus::Pass, None)
    };
    check_report(kind, status, inputs, values, note)
}

fn check_b0_order(fc: &FieldCase, cache: &Cache) -> CheckReport {
    let kind = CheckKind::B0Order;
    let inputs = field_inputs(fc);
    let ctx = match l_context(fc, cache) {
        Ok(c) => c,
        Err(e) => {
            let (status, note) = status_of_err(&e);
            return check_report(kind, status, inputs, vec![], Some(note));
        }
    };
    let b0 = match b0_order_cached(cache, fc.disc, fc.p, fc.precision) {
        Ok(v) => v,
        Err(e) => {
            let (status, note) = status_of_err(&e);
            return check_report(kind, status, inputs, vec![], Some(note));
        }
    };
    let expected = p_power(fc.p, ctx.valuation).to_string();
    let values = vec![
        ValueRecord::plain("bottom layer order", &b0, "circular-unit logarithm"),
        ValueRecord::plain("L-value p-part", &expected, "log-derivative valuation"),
    ];
    let status = if b0 == expected {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    check_report(kind, status, inputs, values, None)
}

fn check_lambda_model_field(fc: &FieldCase, cache: &Cache) -> CheckReport {
    let kind = CheckKind::LambdaModel;
    let mut inputs = field_inputs(fc);
    inputs.insert("points".to_string(), fc.points.to_string());
    let ctx = match l_context(fc, cache) {
        Ok(c) => c,
        Err(e) => {
            let (status, note) = status_of_err(&e);
            return check_report(kind, status, inputs, vec![], Some(note));
        }
    };
    inputs.insert("n".to_string(), ctx.level.to_string());
    inputs.insert("m".to_string(), ctx.base_level.to_string());
    let series = match &ctx.interp.series {
        Some(s) => s,
        None => {
            return check_report(
                kind,
                CheckStatus::Fail,
                inputs,
                vec![],
                Some("interpolation produced no series".into()),
            )
        }
    };
    let run = || -> Result<(Vec<ValueRecord>, bool)> {
        let build = || {
            IwasawaPoly::from_residues(fc.p, series.precision, series.bound, &series.residues)
        };
        let fhat = build()?;
        let v = ctx.valuation;
        if fhat.constant_term_valuation() != v {
            return Ok((
                vec![ValueRecord::plain(
                    "series constant term valuation",
                    fhat.constant_term_valuation(),
                    "interpolation",
                )],
                false,
            ));
        }
        let expected = p_power(fc.p, v);
        let mut values = vec![ValueRecord::plain(
            "expected order",
            &expected,
            "closed-form",
        )];
        let mut ok = true;
        let coeffs: Vec<String> = series.residues.iter().map(u64::to_string).collect();
        let input = format!(
            "p={};K={};B={};c={}",
            fc.p,
            series.precision,
            series.bound,
            coeffs.join(",")
        );
        for q in [0i64, -1] {
            let h = tower_order_cached(cache, &input, build, ctx.level, ctx.base_level, q)?;
            ok &= h.is_cyclic_p_power(fc.p, v);
            values.push(ValueRecord::plain(
                &format!("tower cohomology order, q = {q}"),
                &h.order,
                "module-cohomology",
            ));
        }
        let b0m = b0_model(&fhat)?;
        ok &= b0m.order() == expected;
        values.push(ValueRecord::plain(
            "series bottom layer order",
            b0m.order(),
            "closed-form",
        ));
        Ok((values, ok))
    };
    match run() {
        Ok((values, ok)) => {
            let status = if !ok {
                CheckStatus::Fail
            } else if fc.lambda_zero {
                CheckStatus::Pass
            } else {
                CheckStatus::Info
            };
            let note = if !fc.lambda_zero {
                Some("recorded without the vanishing free-part assumption".into())
            } else {
                None
            };
            check_report(kind, status, inputs, values, note)
        }
        Err(e) => {
            let (status, note) = status_of_err(&e);
            check_report(kind, status, inputs, vec![], Some(note))
        }
    }
}

fn check_lemma_cyc(fc: &FieldCase, cache: &Cache) -> CheckReport {
    let kind = CheckKind::LemmaCyc;
    let mut inputs = field_inputs(fc);
    let ctx = match l_context(fc, cache) {
        Ok(c) => c,
        Err(e) => {
            let (status, note) = status_of_err(&e);
            return check_report(kind, status, inputs, vec![], Some(note));
        }
    };
    inputs.insert("n".to_string(), ctx.level.to_string());
    inputs.insert("m".to_string(), ctx.base_level.to_string());
    let gap = ctx.level - ctx.base_level;
    let run = || -> Result<(Vec<ValueRecord>, bool)> {
        let triv = GroupModule::trivial(fc.p, fc.precision, ctx.level)?;
        let aug = GroupModule::augmentation_ideal(fc.p, fc.precision, ctx.level)?;
        let h0_triv = tate_cohomology(0, &triv, ctx.base_level)?;
        let hm1_triv = tate_cohomology(-1, &triv, ctx.base_level)?;
        let h0_aug = tate_cohomology(0, &aug, ctx.base_level)?;
        let hm1_aug = tate_cohomology(-1, &aug, ctx.base_level)?;
        let ok = is_cyclic_p_power(&h0_triv, fc.p, gap)
            && hm1_triv.is_trivial()
            && h0_aug.is_trivial()
            && is_cyclic_p_power(&hm1_aug, fc.p, gap);
        let values = vec![
            ValueRecord::plain("expected order", p_power(fc.p, gap), "closed-form"),
            ValueRecord::plain(
                "fixed line, degree 0 order",
                h0_triv.order(),
                "module-cohomology",
            ),
            ValueRecord::plain(
                "fixed line, degree -1 order",
                hm1_triv.order(),
                "module-cohomology",
            ),
            ValueRecord::plain(
                "relative units, degree 0 order",
                h0_aug.order(),
                "module-cohomology",
            ),
            ValueRecord::plain(
                "relative units, degree -1 order",
                hm1_aug.order(),
                "module-cohomology",
            ),
        ];
        Ok((values, ok))
    };
    match run() {
        Ok((values, ok)) => {
            let status = if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            check_report(kind, status, inputs, values, None)
        }
        Err(e) => {
            let (status, note) = status_of_err(&e);
            check_report(kind, status, inputs, vec![], Some(note))
        }
    }
}

fn check_unit_index(fc: &FieldCase, cache: &Cache) -> CheckReport {
    let kind = CheckKind::UnitIndex;
    let mut inputs = field_inputs(fc);
    inputs.remove("precision");
    match unit_index_cached(cache, fc.disc, fc.p) {
        Ok(dto) => {
            let values = vec![
                ValueRecord::plain("class number", dto.class_number, "form-reduction"),
                ValueRecord::plain(
                    "circular unit exponent",
                    dto.unit_exponent,
                    "continued-fraction",
                ),
                ValueRecord::plain(
                    "class number p-part exponent",
                    dto.class_valuation,
                    "form-reduction",
                ),
                ValueRecord::plain(
                    "unit index p-part exponent",
                    dto.exponent_valuation,
                    "continued-fraction",
                ),
            ];
            let status = if dto.matched {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            check_report(kind, status, inputs, values, None)
        }
        Err(e) => {
            let (status, note) = status_of_err(&e);
            check_report(kind, status, inputs, vec![], Some(note))
        }
    }
}

fn check_prime_class(fc: &FieldCase, cache: &Cache) -> CheckReport {
    let kind = CheckKind::PrimeClass;
    let mut inputs = field_inputs(fc);
    inputs.remove("precision");
    let result = prime_class_cached(cache, fc.disc, fc.p).and_then(|ord| {
        let ctx = l_context(fc, cache)?;
        Ok((ord, ctx.valuation))
    });
    match result {
        Ok((ord, v)) => {
            let expected = p_power(fc.p, v);
            let note = if BigUint::from(ord) == expected {
                "matches the L-value p-part".to_string()
            } else {
                "differs from the L-value p-part".to_string()
            };
            let values = vec![
                ValueRecord::plain("prime class order p-part", ord, "form-reduction"),
                ValueRecord::plain("L-value p-part", expected, "log-derivative valuation"),
            ];
            check_report(kind, CheckStatus::Info, inputs, values, Some(note))
        }
        Err(e) => check_report(
            kind,
            CheckStatus::Info,
            inputs,
            vec![],
            Some(format!("comparison unavailable: {e}")),
        ),
    }
}

/// Randomized property suites over deterministic seeds. Group orders stay
/// at most 27 and module ranks at most 4, so each case is small.
fn check_cohomology(fc: &FieldCase) -> CheckReport {
    let kind = CheckKind::Cohomology;
    let mut inputs = field_inputs(fc);
    inputs.remove("disc");
    inputs.insert("cases".to_string(), fc.cases.to_string());
    let p = fc.p;
    let max_level = match p {
        3 => 3,
        5 => 2,
        _ => 1,
    };
    let mut values = Vec::new();
    let mut failures = 0u64;
    let mut exhausted = false;
    let mut first_note: Option<String> = None;
    let mut record = |label: &str, fails: u64, cases: u32| {
        values.push(ValueRecord::plain(
            label,
            format!("{fails}/{cases}"),
            "property-suite",
        ));
    };
    let mut run_suite = |suite: u32, body: &mut dyn FnMut(u64) -> Result<bool>| -> u64 {
        let mut fails = 0;
        for i in 0..fc.cases {
            let seed = ((suite as u64) << 32) | i as u64;
            match body(seed) {
                Ok(true) => {}
                Ok(false) => fails += 1,
                Err(e) => {
                    fails += 1;
                    if matches!(e, Error::PrecisionExhausted(_)) {
                        exhausted = true;
                    }
                    if first_note.is_none() {
                        first_note = Some(format!("seed {seed}: {e}"));
                    }
                }
            }
        }
        fails
    };

    let f = run_suite(1, &mut |seed| {
        let m = sample_module(p, 8, max_level, 4, false, seed)?;
        for q in [-2i64, -1] {
            for lev in 0..=m.group_exponent() {
                if tate_cohomology(q, &m, lev)? != tate_cohomology(q + 2, &m, lev)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    });
    record("two-periodicity failures", f, fc.cases);
    failures += f;

    let f = run_suite(2, &mut |seed| {
        let m = sample_module(p, 8, max_level, 4, false, seed)?;
        if m.is_finite() {
            Ok(herbrand_check(&m, 0)?.0)
        } else {
            Ok(matches!(herbrand_check(&m, 0), Err(Error::Hypothesis(_))))
        }
    });
    record("herbrand quotient failures", f, fc.cases);
    failures += f;

    let f = run_suite(3, &mut |seed| {
        let t = 1 + (seed % max_level as u64) as u32;
        let reg = GroupModule::regular(p, 8, t)?;
        for q in [-2i64, -1, 0, 1] {
            for lev in 0..t {
                if !tate_cohomology(q, &reg, lev)?.is_trivial() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    });
    record("group-ring acyclicity failures", f, fc.cases);
    failures += f;

    let f = run_suite(4, &mut |seed| {
        let m = sample_module(p, 9, 2, 4, true, seed)?;
        for c in [0u64, 1] {
            for q in [0i64, -1] {
                if !eigenspace_cohomology_commutes(&m, c, q)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    });
    record("eigenspace commutation failures", f, fc.cases);
    failures += f;

    let status = if failures == 0 {
        CheckStatus::Pass
    } else if exhausted {
        CheckStatus::Indeterminate
    } else {
        CheckStatus::Fail
    };
    check_report(kind, status, inputs, values, first_note)
}

#[derive(Debug, Clone)]
struct LambdaCase {
    p: u64,
    precision: u32,
    exponent: u32,
    scales: Vec<u64>,
    base_levels: Vec<u32>,
    degrees: Vec<i64>,
}

/// Closed-form sweep for synthetic relation polynomials f = T - u p^e: at
/// every swept layer pair the tower cohomology and the bottom layer model
/// are cyclic of order exactly p^e.
fn check_lambda_synthetic(lc: &LambdaCase, cache: &Cache) -> CheckReport {
    let kind = CheckKind::LambdaModel;
    let mut inputs = BTreeMap::new();
    inputs.insert("p".to_string(), lc.p.to_string());
    inputs.insert("precision".to_string(), lc.precision.to_string());
    inputs.insert("e".to_string(), lc.exponent.to_string());
    let expected = p_power(lc.p, lc.exponent);
    let mut values = vec![ValueRecord::plain(
        "expected order",
        &expected,
        "closed-form",
    )];
    let run = |values: &mut Vec<ValueRecord>| -> Result<bool> {
        let mut ok = true;
        for &u in &lc.scales {
            let c0 = -((u as i64) * (lc.p as i64).pow(lc.exponent));
            let build = || IwasawaPoly::from_i64(lc.p, lc.precision, 1 << 12, &[c0, 1]);
            let b0m = b0_model(&build()?)?;
            ok &= is_cyclic_p_power(&b0m, lc.p, lc.exponent);
            values.push(ValueRecord::plain(
                &format!("bottom layer order, u = {u}"),
                b0m.order(),
                "closed-form",
            ));
            let input = format!("p={};K={};f=T{c0:+}", lc.p, lc.precision);
            for &m in &lc.base_levels {
                let n = m + lc.exponent + 2;
                for &q in &lc.degrees {
                    let h = tower_order_cached(cache, &input, build, n, m, q)?;
                    ok &= h.is_cyclic_p_power(lc.p, lc.exponent);
                    values.push(ValueRecord::plain(
                        &format!("tower order, u = {u}, m = {m}, q = {q}"),
                        &h.order,
                        "module-cohomology",
                    ));
                }
            }
        }
        Ok(ok)
    };
    match run(&mut values) {
        Ok(true) => check_report(kind, CheckStatus::Pass, inputs, values, None),
        Ok(false) => check_report(kind, CheckStatus::Fail, inputs, values, None),
        Err(e) => {
            let (status, note) = status_of_err(&e);
            check_report(kind, status, inputs, values, Some(note))
        }
    }
}

// ---------------------------------------------------------------------------
// runners

fn run_scenario_inner(s: &Scenario, cache: &Cache) -> (Report, Vec<(String, u128)>) {
    let mut checks = Vec::with_capacity(s.checks.len());
    let mut times = Vec::with_capacity(s.checks.len());
    for &kind in &s.checks {
        let start = Instant::now();
        let rep = match &s.spec {
            ScenarioSpec::Field {
                disc,
                p,
                precision,
                points,
                base_level,
                level,
                lambda_zero,
                cases,
            } => {
                let fc = FieldCase {
                    disc: *disc,
                    p: *p,
                    precision: *precision,
                    points: *points,
                    base_level: *base_level,
                    level: *level,
                    lambda_zero: *lambda_zero,
                    cases: *cases,
                };
                match kind {
                    CheckKind::Lvalue => check_lvalue(&fc, cache),
                    CheckKind::B0Order => check_b0_order(&fc, cache),
                    CheckKind::LambdaModel => check_lambda_model_field(&fc, cache),
                    CheckKind::LemmaCyc => check_lemma_cyc(&fc, cache),
                    CheckKind::UnitIndex => check_unit_index(&fc, cache),
                    CheckKind::PrimeClass => check_prime_class(&fc, cache),
                    CheckKind::Cohomology => check_cohomology(&fc),
                }
            }
            ScenarioSpec::Lambda {
                p,
                precision,
                exponent,
                scales,
                base_levels,
                degrees,
            } => {
                let lc = LambdaCase {
                    p: *p,
                    precision: *precision,
                    exponent: *exponent,
                    scales: scales.clone(),
                    base_levels: base_levels.clone(),
                    degrees: degrees.clone(),
                };
                check_lambda_synthetic(&lc, cache)
            }
        };
        times.push((
            format!("{}/{}", s.name, kind.slug()),
            start.elapsed().as_millis(),
        ));
        checks.push(rep);
    }
    (
        Report {
            scenario: s.name.clone(),
            spec: s.spec.clone(),
            checks,
        },
        times,
    )
}

/// Run one scenario with a private cache per the options.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Report {
    let cache = Cache::new(&opts.cache);
    run_scenario_inner(s, &cache).0
}

fn run_suite_with(scenarios: &[Scenario], opts: &RunOptions, cache: &Cache) -> SuiteReport {
    let run = || -> Vec<(Report, Vec<(String, u128)>)> {
        scenarios
            .par_iter()
            .map(|s| run_scenario_inner(s, cache))
            .collect()
    };
    let results = match opts.jobs {
        Some(jobs) if jobs >= 1 => match rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
        {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        _ => run(),
    };
    let mut runtimes_ms = BTreeMap::new();
    let mut reports = Vec::with_capacity(results.len());
    for (report, times) in results {
        for (key, ms) in times {
            runtimes_ms.insert(key, ms);
        }
        reports.push(report);
    }
    let body = SuiteBody {
        schema: REPORT_SCHEMA.to_string(),
        reports,
    };
    let body_bytes = serde_json::to_vec(&body).expect("report body serializes");
    let mut hasher = Sha256::new();
    hasher.update(&body_bytes);
    let body_sha256 = hex_digest(&hasher.finalize());
    let generated_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_millis();
    SuiteReport {
        body,
        body_sha256,
        meta: RunMeta {
            generated_unix_ms,
            runtimes_ms,
            cache: cache.stats(),
        },
    }
}

/// Run scenarios in parallel up to the worker budget, sharing one cache.
/// Report bodies depend only on the scenarios, not on scheduling.
pub fn run_suite(scenarios: &[Scenario], opts: &RunOptions) -> SuiteReport {
    let cache = Cache::new(&opts.cache);
    run_suite_with(scenarios, opts, &cache)
}
