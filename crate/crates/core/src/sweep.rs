//! Parameter sweeps over the `(a, b)` grid, region comparison and output
//! files.
//!
//! Configs are TOML:
//!
//! ```toml
//! tests = ["I", "II", "III", "IV"]
//! parallelism = 4
//! seed = 0
//! failure_threshold = 0.05
//!
//! [model]
//! kind = "paper"            # or "inline"
//!
//! [grid]
//! a_min = -2.0
//! a_max = 2.0
//! a_steps = 41
//! b_min = -10.0
//! b_max = 10.0
//! b_steps = 41
//!
//! [solver]
//! tolerance = 1e-8
//!
//! [output]
//! records_path = "records.csv"
//! regions_path = "regions.csv"
//! image_path = "regions.svg"
//! ```
//!
//! Inline models give `lambda`, `win`, `wout` either as row lists or as a
//! path to a headerless CSV file, plus optional `a_entry` / `b_entry`
//! (1-based `[row, col]` of `W_in`) receiving the grid parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{run_test, CertifyOptions, Status, TestId};
use crate::dynamics::{rows_to_matrix, RnnModel};
use crate::error::{Error, Result};
use crate::solver::SolverOptions;

pub const DEFAULT_STEPS: usize = 41;
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.05;
pub const RECORDS_HEADER: &str = "a,b,test,status,verified,margin,solve_ms";
pub const REGIONS_HEADER: &str = "a,b,class";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Rows(Vec<Vec<f64>>),
    Csv(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Paper,
    Inline {
        lambda: DMatrix<f64>,
        win: DMatrix<f64>,
        wout: DMatrix<f64>,
        /// 0-based entries of `W_in` receiving `a` and `b`.
        a_entry: Option<(usize, usize)>,
        b_entry: Option<(usize, usize)>,
    },
}

impl ModelSpec {
    pub fn instantiate(&self, a: f64, b: f64) -> Result<RnnModel> {
        match self {
            ModelSpec::Paper => Ok(RnnModel::paper_example(a, b)),
            ModelSpec::Inline {
                lambda,
                win,
                wout,
                a_entry,
                b_entry,
            } => {
                let mut w = win.clone();
                if let Some(e) = a_entry {
                    w[*e] += a;
                }
                if let Some(e) = b_entry {
                    w[*e] += b;
                }
                RnnModel::new(lambda.clone(), w, wout.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub b_steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            a_min: -2.0,
            a_max: 2.0,
            a_steps: DEFAULT_STEPS,
            b_min: -10.0,
            b_max: 10.0,
            b_steps: DEFAULT_STEPS,
        }
    }
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

impl Grid {
    pub fn a_values(&self) -> Vec<f64> {
        linspace(self.a_min, self.a_max, self.a_steps)
    }

    pub fn b_values(&self) -> Vec<f64> {
        linspace(self.b_min, self.b_max, self.b_steps)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let bs = self.b_values();
        self.a_values()
            .into_iter()
            .flat_map(|a| bs.iter().map(move |&b| (a, b)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.a_steps * self.b_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct OutputPaths {
    pub records_path: Option<PathBuf>,
    pub regions_path: Option<PathBuf>,
    pub image_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub grid: Grid,
    pub tests: Vec<TestId>,
    pub certify: CertifyOptions,
    pub output: OutputPaths,
    /// Worker count; 0 means one per available core.
    pub parallelism: usize,
    pub seed: u64,
    pub failure_threshold: f64,
}

impl SweepConfig {
    /// Paper model, default grid, given tests, no output files.
    pub fn paper(tests: Vec<TestId>) -> Self {
        Self {
            model: ModelSpec::Paper,
            grid: Grid::default(),
            tests,
            certify: CertifyOptions::default(),
            output: OutputPaths::default(),
            parallelism: 0,
            seed: 0,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.a_steps < 1 {
            return Err(Error::key("grid.a_steps", "must be at least 1"));
        }
        if g.b_steps < 1 {
            return Err(Error::key("grid.b_steps", "must be at least 1"));
        }
        for (k, v) in [("grid.a_min", g.a_min), ("grid.a_max", g.a_max), ("grid.b_min", g.b_min), ("grid.b_max", g.b_max)] {
            if !v.is_finite() {
                return Err(Error::key(k, "must be finite"));
            }
        }
        if g.a_min > g.a_max {
            return Err(Error::key("grid.a_max", "must not be below grid.a_min"));
        }
        if g.b_min > g.b_max {
            return Err(Error::key("grid.b_max", "must not be below grid.b_min"));
        }
        if self.tests.is_empty() {
            return Err(Error::key("tests", "must list at least one test"));
        }
        if let Some(eps) = self.certify.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::key("solver.eps", "must be positive"));
            }
        }
        let s_min = self.certify.s_min;
        if !(s_min > 0.0 && s_min < 1.0) {
            return Err(Error::key("solver.s_min", "must lie in (0, 1)"));
        }
        let tol = self.certify.solver.tolerance;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::key("solver.tolerance", "must lie in (0, 1)"));
        }
        if self.certify.solver.max_iter == 0 {
            return Err(Error::key("solver.max_iter", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return Err(Error::key("failure_threshold", "must lie in [0, 1]"));
        }
        if let ModelSpec::Inline { win, a_entry, b_entry, .. } = &self.model {
            for (k, e) in [("model.a_entry", a_entry), ("model.b_entry", b_entry)] {
                if let Some((r, c)) = e {
                    if *r >= win.nrows() || *c >= win.ncols() {
                        return Err(Error::key(k, "outside of win"));
                    }
                }
            }
        }
        // fail early on an unusable model rather than once per grid point
        self.model
            .instantiate(self.grid.a_min, self.grid.b_min)
            .map_err(|e| Error::key("model", e.to_string()))?;
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    tests: Option<Vec<String>>,
    parallelism: Option<usize>,
    seed: Option<u64>,
    failure_threshold: Option<f64>,
    model: Option<RawModel>,
    grid: Option<RawGrid>,
    solver: Option<RawSolver>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Option<String>,
    lambda: Option<MatrixSource>,
    win: Option<MatrixSource>,
    wout: Option<MatrixSource>,
    a_entry: Option<[usize; 2]>,
    b_entry: Option<[usize; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    a_min: Option<f64>,
    a_max: Option<f64>,
    a_steps: Option<usize>,
    b_min: Option<f64>,
    b_max: Option<f64>,
    b_steps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    eps: Option<f64>,
    s_min: Option<f64>,
    tolerance: Option<f64>,
    max_iter: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    records_path: Option<PathBuf>,
    regions_path: Option<PathBuf>,
    image_path: Option<PathBuf>,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn load_matrix(src: MatrixSource, base: &Path, key: &str) -> Result<DMatrix<f64>> {
    let rows = match src {
        MatrixSource::Rows(r) => r,
        MatrixSource::Csv(p) => {
            let path = resolve(base, p);
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_path(&path)
                .map_err(|e| Error::key(key, format!("{}: {e}", path.display())))?;
            let mut rows = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::key(key, format!("{}: {e}", path.display())))?;
                let row = rec
                    .iter()
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::key(key, format!("{}: {e}", path.display())))?;
                rows.push(row);
            }
            rows
        }
    };
    rows_to_matrix(&rows, key).map_err(|e| Error::key(key, e.to_string()))
}

fn entry(e: Option<[usize; 2]>, key: &str) -> Result<Option<(usize, usize)>> {
    match e {
        None => Ok(None),
        Some([r, c]) if r >= 1 && c >= 1 => Ok(Some((r - 1, c - 1))),
        Some(_) => Err(Error::key(key, "indices are 1-based")),
    }
}

/// Parses TOML text. Relative file references resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<SweepConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;

    let tests = raw
        .tests
        .ok_or_else(|| Error::key("tests", "missing"))?
        .iter()
        .map(|s| s.parse::<TestId>().map_err(|e| Error::key("tests", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut tests_dedup = tests.clone();
    tests_dedup.sort();
    tests_dedup.dedup();

    let model = match raw.model {
        None => ModelSpec::Paper,
        Some(m) => match m.kind.as_deref().unwrap_or("paper") {
            "paper" => {
                if m.lambda.is_some() || m.win.is_some() || m.wout.is_some() {
                    return Err(Error::key("model.kind", "paper model takes no matrices"));
                }
                ModelSpec::Paper
            }
            "inline" => {
                let get = |s: Option<MatrixSource>, k: &str| {
                    s.ok_or_else(|| Error::key(k, "missing for inline model"))
                        .and_then(|s| load_matrix(s, base, k))
                };
                ModelSpec::Inline {
                    lambda: get(m.lambda, "model.lambda")?,
                    win: get(m.win, "model.win")?,
                    wout: get(m.wout, "model.wout")?,
                    a_entry: entry(m.a_entry, "model.a_entry")?,
                    b_entry: entry(m.b_entry, "model.b_entry")?,
                }
            }
            other => {
                return Err(Error::key(
                    "model.kind",
                    format!("expected \"paper\" or \"inline\", got \"{other}\""),
                ))
            }
        },
    };

    let d = Grid::default();
    let grid = match raw.grid {
        None => d,
        Some(g) => Grid {
            a_min: g.a_min.unwrap_or(d.a_min),
            a_max: g.a_max.unwrap_or(d.a_max),
            a_steps: g.a_steps.unwrap_or(d.a_steps),
            b_min: g.b_min.unwrap_or(d.b_min),
            b_max: g.b_max.unwrap_or(d.b_max),
            b_steps: g.b_steps.unwrap_or(d.b_steps),
        },
    };

    let mut certify = CertifyOptions::default();
    if let Some(s) = raw.solver {
        certify.eps = s.eps;
        certify.s_min = s.s_min.unwrap_or(certify.s_min);
        certify.solver = SolverOptions {
            tolerance: s.tolerance.unwrap_or(certify.solver.tolerance),
            max_iter: s.max_iter.unwrap_or(certify.solver.max_iter),
            ..certify.solver
        };
    }

    let output = match raw.output {
        None => OutputPaths::default(),
        Some(o) => OutputPaths {
            records_path: o.records_path.map(|p| resolve(base, p)),
            regions_path: o.regions_path.map(|p| resolve(base, p)),
            image_path: o.image_path.map(|p| resolve(base, p)),
        },
    };

    let cfg = SweepConfig {
        model,
        grid,
        tests: tests_dedup,
        certify,
        output,
        parallelism: raw.parallelism.unwrap_or(0),
        seed: raw.seed.unwrap_or(0),
        failure_threshold: raw.failure_threshold.unwrap_or(DEFAULT_FAILURE_THRESHOLD),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SweepConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| match e {
        Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub a: f64,
    pub b: f64,
    pub test: TestId,
    pub status: Status,
    pub verified: bool,
    pub margin: Option<f64>,
    pub solve_ms: f64,
}

impl SweepRecord {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3}",
            self.a,
            self.b,
            self.test.name(),
            self.status.name(),
            self.verified,
            self.margin.map(|m| format!("{m:e}")).unwrap_or_default(),
            self.solve_ms
        )
    }
}

fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(|x, y| {
        x.a.total_cmp(&y.a)
            .then(x.b.total_cmp(&y.b))
            .then(x.test.cmp(&y.test))
    });
}

/// Evaluates every selected test at every grid point on a pool of
/// `config.parallelism` workers. Each record is appended to `records_path`
/// as it completes; the returned list is sorted by `(a, b, test)`.
/// A model that cannot be built at some point (e.g. an unstable `Λ`) yields
/// `SolverFailure` records there rather than aborting.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let sink = match &config.output.records_path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let mut f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            writeln!(f, "{RECORDS_HEADER}").map_err(|e| Error::io(p, e))?;
            Some((p.clone(), Mutex::new(f)))
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;

    let jobs: Vec<(f64, f64, TestId)> = config
        .grid
        .points()
        .into_iter()
        .flat_map(|(a, b)| config.tests.iter().map(move |&t| (a, b, t)))
        .collect();

    let results: Vec<Result<SweepRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, b, test)| {
                let rec = evaluate_point(config, a, b, test);
                if let Some((path, f)) = &sink {
                    let mut f = f.lock().expect("record sink poisoned");
                    writeln!(f, "{}", rec.csv_line()).map_err(|e| Error::io(path, e))?;
                }
                Ok(rec)
            })
            .collect()
    });
    let mut records = results.into_iter().collect::<Result<Vec<_>>>()?;
    sort_records(&mut records);
    if let Some((path, _)) = &sink {
        write_records_csv(path, &records)?;
    }
    Ok(records)
}

fn evaluate_point(config: &SweepConfig, a: f64, b: f64, test: TestId) -> SweepRecord {
    let failure = |ms: f64| SweepRecord {
        a,
        b,
        test,
        status: Status::SolverFailure,
        verified: false,
        margin: None,
        solve_ms: ms,
    };
    let model = match config.model.instantiate(a, b) {
        Ok(m) => m,
        Err(_) => return failure(0.0),
    };
    match run_test(&model, test, &config.certify) {
        Ok(r) => SweepRecord {
            a,
            b,
            test,
            status: r.outcome,
            verified: r.verified,
            margin: r.margin,
            solve_ms: r.solve_time.as_secs_f64() * 1e3,
        },
        Err(_) => failure(0.0),
    }
}

pub fn failure_fraction(records: &[SweepRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let n = records.iter().filter(|r| r.status == Status::SolverFailure).count();
    n as f64 / records.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum RegionClass {
    both,
    only_A,
    only_B,
    neither,
    failure,
}

impl RegionClass {
    pub const ALL: [RegionClass; 5] = [
        RegionClass::both,
        RegionClass::only_A,
        RegionClass::only_B,
        RegionClass::neither,
        RegionClass::failure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionClass::both => "both",
            RegionClass::only_A => "only_A",
            RegionClass::only_B => "only_B",
            RegionClass::neither => "neither",
            RegionClass::failure => "failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub test_a: TestId,
    pub test_b: TestId,
    /// `(a, b, class)` sorted by `(a, b)`.
    pub points: Vec<(f64, f64, RegionClass)>,
}

impl RegionMap {
    pub fn count(&self, class: RegionClass) -> usize {
        self.points.iter().filter(|p| p.2 == class).count()
    }

    pub fn counts(&self) -> BTreeMap<RegionClass, usize> {
        RegionClass::ALL.iter().map(|&c| (c, self.count(c))).collect()
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} vs {}:", self.test_a, self.test_b);
        for (c, n) in self.counts() {
            let _ = write!(s, " {}={n}", c.name());
        }
        s
    }
}

/// Classifies every grid point against the pair. A point where either test
/// is missing, failed, or was feasible but unverified is `failure`.
pub fn compare_regions(records: &[SweepRecord], test_a: TestId, test_b: TestId) -> RegionMap {
    #[derive(Default)]
    struct Slot {
        a: Option<(Status, bool)>,
        b: Option<(Status, bool)>,
    }
    let mut slots: BTreeMap<(u64, u64), (f64, f64, Slot)> = BTreeMap::new();
    // keys order finite floats like total_cmp for the sign-aware bit trick
    let key = |v: f64| {
        let bits = v.to_bits();
        if bits >> 63 == 1 {
            !bits
        } else {
            bits | (1 << 63)
        }
    };
    for r in records {
        let e = slots
            .entry((key(r.a), key(r.b)))
            .or_insert_with(|| (r.a, r.b, Slot::default()));
        if r.test == test_a {
            e.2.a = Some((r.status, r.verified));
        }
        if r.test == test_b {
            e.2.b = Some((r.status, r.verified));
        }
    }
    let points = slots
        .into_values()
        .map(|(a, b, slot)| {
            let feas = |x: Option<(Status, bool)>| match x {
                Some((Status::Feasible, true)) => Some(true),
                Some((Status::Infeasible, _)) => Some(false),
                _ => None,
            };
            let class = match (feas(slot.a), feas(slot.b)) {
                (Some(true), Some(true)) => RegionClass::both,
                (Some(true), Some(false)) => RegionClass::only_A,
                (Some(false), Some(true)) => RegionClass::only_B,
                (Some(false), Some(false)) => RegionClass::neither,
                _ => RegionClass::failure,
            };
            (a, b, class)
        })
        .collect();
    RegionMap { test_a, test_b, points }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub pair: (TestId, TestId),
    /// Points where the weaker test holds but the stronger one does not.
    pub violations: Vec<(f64, f64)>,
    /// Points excluded because a test failed or was missing.
    pub excluded: Vec<(f64, f64)>,
}

/// Checks every guaranteed inclusion whose two tests were both run.
pub fn inclusion_audit(records: &[SweepRecord], tests: &[TestId]) -> Vec<AuditReport> {
    TestId::INCLUSIONS
        .iter()
        .filter(|(w, s)| tests.contains(w) && tests.contains(s))
        .map(|&(w, s)| {
            let map = compare_regions(records, w, s);
            let pick = |c: RegionClass| {
                map.points
                    .iter()
                    .filter(|p| p.2 == c)
                    .map(|p| (p.0, p.1))
                    .collect::<Vec<_>>()
            };
            AuditReport {
                pair: (w, s),
                violations: pick(RegionClass::only_A),
                excluded: pick(RegionClass::failure),
            }
        })
        .collect()
}

pub fn records_csv(records: &[SweepRecord]) -> String {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut s = String::from(RECORDS_HEADER);
    s.push('\n');
    for r in &sorted {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

pub fn regions_csv(map: &RegionMap) -> String {
    let mut s = String::from(REGIONS_HEADER);
    s.push('\n');
    for (a, b, c) in &map.points {
        let _ = writeln!(s, "{a},{b},{}", c.name());
    }
    s
}

/// Parses a records CSV written by [`records_csv`].
pub fn parse_records_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::ConfigParse(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != RECORDS_HEADER {
        return Err(Error::ConfigParse(format!("unexpected header `{header}`")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::ConfigParse(format!("line {line}: {e}")))?;
        let bad = |what: &str| Error::ConfigParse(format!("line {line}: bad {what}"));
        let num = |k: usize, what: &str| rec[k].parse::<f64>().map_err(|_| bad(what));
        out.push(SweepRecord {
            a: num(0, "a")?,
            b: num(1, "b")?,
            test: rec[2].parse().map_err(|_| bad("test"))?,
            status: rec[3].parse().map_err(|_| bad("status"))?,
            verified: rec[4].parse().map_err(|_| bad("verified"))?,
            margin: if rec[5].is_empty() { None } else { Some(num(5, "margin")?) },
            solve_ms: num(6, "solve_ms")?,
        });
    }
    Ok(out)
}

/// `regions.csv` + `(I, II)` → `regions_SSG_vs_L2P_SSG.csv`.
pub fn tagged_path(path: &Path, a: TestId, b: TestId) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{a}_vs_{b}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{a}_vs_{b}"),
    };
    path.with_file_name(name)
}

/// Region pairs reported for a test set: the figure pairs first, then the
/// remaining guaranteed inclusions.
pub fn region_pairs(tests: &[TestId]) -> Vec<(TestId, TestId)> {
    let mut pairs = vec![
        (TestId::SSG, TestId::L2P_SSG),
        (TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP),
        (TestId::SSG, TestId::SSG_ZF_POL),
    ];
    pairs.retain(|(a, b)| tests.contains(a) && tests.contains(b));
    pairs
}

const COLOR_FAILURE: &str = "#9e9e9e";

/// Two side-by-side panels: `(I, II)` and `(III, IV)`. Green marks points
/// where I and II both hold, magenta only II, red III and IV both, blue only
/// IV, gray any failure. Missing pairs leave their panel empty.
pub fn scatter_svg(records: &[SweepRecord], grid: &Grid) -> String {
    let panels = [
        ((TestId::SSG, TestId::L2P_SSG), "#2e7d32", "#d81b9f", "Test I vs Test II"),
        ((TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP), "#c62828", "#1565c0", "Test III vs Test IV"),
    ];
    let (w, h, pad) = (360.0, 360.0, 40.0);
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sa, sb) = (span(grid.a_min, grid.a_max), span(grid.b_min, grid.b_max));
    let r = (w / (grid.a_steps.max(grid.b_steps) as f64) / 2.5).clamp(1.0, 6.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        2.0 * (w + 2.0 * pad),
        h + 2.0 * pad
    );
    for (k, ((ta, tb), c_both, c_only_b, title)) in panels.iter().enumerate() {
        let ox = k as f64 * (w + 2.0 * pad) + pad;
        let _ = writeln!(
            s,
            r#"<rect x="{ox}" y="{pad}" width="{w}" height="{h}" fill="white" stroke="black"/>"#
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{title}</text>"#, ox + w / 2.0, pad - 12.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">a</text>"#, ox + w / 2.0, pad + h + 28.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">b</text>"#, ox - 28.0, pad + h / 2.0);
        let _ = writeln!(s, r#"<text x="{ox}" y="{}">{}</text>"#, pad + h + 14.0, grid.a_min);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, ox + w, pad + h + 14.0, grid.a_max);
        let map = compare_regions(records, *ta, *tb);
        for (a, b, class) in &map.points {
            let color = match class {
                RegionClass::both => *c_both,
                RegionClass::only_B => *c_only_b,
                RegionClass::failure => COLOR_FAILURE,
                // only_A would be an audit violation; draw it black
                RegionClass::only_A => "#000000",
                RegionClass::neither => continue,
            };
            let x = ox + (a - grid.a_min) / sa * w;
            let y = pad + h - (b - grid.b_min) / sb * h;
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{color}"/>"#);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_records_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    write_file(path, &records_csv(records))
}

/// Writes the records CSV, one regions CSV per map (tagged with the pair
/// names) and, when configured, the scatter SVG. Returns the paths written.
pub fn emit_outputs(records: &[SweepRecord], maps: &[RegionMap], config: &SweepConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(p) = &config.output.records_path {
        write_records_csv(p, records)?;
        written.push(p.clone());
    }
    if let Some(p) = &config.output.regions_path {
        for m in maps {
            let tp = tagged_path(p, m.test_a, m.test_b);
            write_file(&tp, &regions_csv(m))?;
            written.push(tp);
        }
    }
    if let Some(p) = &config.output.image_path {
        write_file(p, &scatter_svg(records, &config.grid))?;
        written.push(p.clone());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{PAPER_A_ENTRY, PAPER_B_ENTRY};

    fn rec(a: f64, b: f64, test: TestId, status: Status) -> SweepRecord {
        SweepRecord {
            a,
            b,
            test,
            status,
            verified: status == Status::Feasible,
            margin: (status == Status::Feasible).then_some(1e-3),
            solve_ms: 1.0,
        }
    }

    #[test]
    fn paper_config_first_row() {
        let cfg = parse_config("tests = [\"SG\"]\n[model]\nkind = \"paper\"\n", Path::new(".")).unwrap();
        let m = cfg.model.instantiate(0.0, 0.0).unwrap();
        let row: Vec<f64> = (0..6).map(|j| m.win()[(0, j)]).collect();
        assert_eq!(row, vec![0.29, -0.04, 0.02, -0.35, -0.05, -0.12]);
        assert_eq!(PAPER_A_ENTRY, (0, 2));
        assert_eq!(PAPER_B_ENTRY, (2, 1));
    }

    #[test]
    fn missing_tests_key_names_key() {
        match parse_config("[grid]\na_steps = 3\n", Path::new(".")) {
            Err(Error::ConfigKey { key, .. }) => assert_eq!(key, "tests"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_error_has_line_info() {
        let err = parse_config("tests = [\"I\"]\n[grid]\na_steps = = 3\n", Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn validation_names_keys() {
        for (text, key) in [
            ("tests = [\"I\"]\n[grid]\na_steps = 0\n", "grid.a_steps"),
            ("tests = [\"I\"]\n[grid]\nb_min = 1.0\nb_max = 0.0\n", "grid.b_max"),
            ("tests = []\n", "tests"),
            ("tests = [\"I\"]\n[solver]\ns_min = 2.0\n", "solver.s_min"),
            ("tests = [\"V\"]\n", "tests"),
        ] {
            match parse_config(text, Path::new(".")) {
                Err(Error::ConfigKey { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            parse_config("tests = [\"I\"]\nbogus = 1\n", Path::new(".")),
            Err(Error::ConfigParse(_))
        ));
    }

    #[test]
    fn single_step_grid() {
        let g = Grid {
            a_min: 0.5,
            a_max: 1.0,
            a_steps: 1,
            b_min: -1.0,
            b_max: 1.0,
            b_steps: 1,
        };
        assert_eq!(g.points(), vec![(0.5, -1.0)]);
        let g = Grid::default();
        assert_eq!(g.a_values().first(), Some(&-2.0));
        assert_eq!(g.a_values().last(), Some(&2.0));
        assert_eq!(g.len(), 41 * 41);
    }

    #[test]
    fn region_classes() {
        let rs = vec![
            rec(0.0, 0.0, TestId::SSG, Status::Feasible),
            rec(0.0, 0.0, TestId::L2P_SSG, Status::Feasible),
            rec(0.0, 1.0, TestId::SSG, Status::Infeasible),
            rec(0.0, 1.0, TestId::L2P_SSG, Status::Feasible),
            rec(1.0, 0.0, TestId::SSG, Status::Infeasible),
            rec(1.0, 0.0, TestId::L2P_SSG, Status::Infeasible),
            rec(1.0, 1.0, TestId::SSG, Status::SolverFailure),
            rec(1.0, 1.0, TestId::L2P_SSG, Status::Feasible),
            rec(2.0, 0.0, TestId::SSG, Status::Feasible),
        ];
        let m = compare_regions(&rs, TestId::SSG, TestId::L2P_SSG);
        let classes: Vec<_> = m.points.iter().map(|p| p.2).collect();
        assert_eq!(
            classes,
            vec![
                RegionClass::both,
                RegionClass::only_B,
                RegionClass::neither,
                RegionClass::failure,
                RegionClass::failure
            ]
        );
        let same = compare_regions(&rs, TestId::SSG, TestId::SSG);
        assert_eq!(same.count(RegionClass::only_A) + same.count(RegionClass::only_B), 0);
    }

    #[test]
    fn audit_flags_violation() {
        let rs = vec![
            rec(0.0, 0.0, TestId::SSG, Status::Feasible),
            rec(0.0, 0.0, TestId::L2P_SSG, Status::Infeasible),
        ];
        let audits = inclusion_audit(&rs, &[TestId::SSG, TestId::L2P_SSG]);
        assert_eq!(audits.len(), 1);
        assert_eq!(audits[0].violations, vec![(0.0, 0.0)]);
    }

    #[test]
    fn csv_roundtrip_and_header_only() {
        assert_eq!(records_csv(&[]), format!("{RECORDS_HEADER}\n"));
        let rs = vec![
            rec(0.5, -1.0, TestId::SSG_ZF_POL, Status::Infeasible),
            rec(-0.5, 2.0, TestId::SSG, Status::Feasible),
        ];
        let text = records_csv(&rs);
        assert_eq!(text, records_csv(&rs));
        let back = parse_records_csv(&text).unwrap();
        assert_eq!(back[0].a, -0.5);
        assert_eq!(back[0].margin, Some(1e-3));
        assert_eq!(back[1].margin, None);
        assert!(text.lines().nth(2).unwrap().contains("Infeasible,false,,"));
    }

    #[test]
    fn tagged_region_paths() {
        let p = tagged_path(Path::new("out/regions.csv"), TestId::SSG, TestId::L2P_SSG);
        assert_eq!(p, PathBuf::from("out/regions_SSG_vs_L2P_SSG.csv"));
    }

    #[test]
    fn svg_colors() {
        let rs = vec![
            rec(0.0, 0.0, TestId::SSG, Status::Infeasible),
            rec(0.0, 0.0, TestId::L2P_SSG, Status::Feasible),
        ];
        let svg = scatter_svg(&rs, &Grid::default());
        assert!(svg.contains("#d81b9f"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
