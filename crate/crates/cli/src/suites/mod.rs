//! Verification suites, one per library module.

use std::collections::BTreeMap;
use std::sync::Arc;

use polymet_core::cone::MetricField;
use polymet_core::grid::Chart;
use polymet_core::models;
use polymet_core::rng::CounterRng;

use crate::config::{Suite, SuiteConfig};
use crate::error::CliResult;
use crate::report::{timestamp, CheckRecord, Provenance, SuiteReport, Table, SCHEMA};

mod chern;
mod cone;
mod curvature;
mod gauge;
mod geodesic;
mod index;
mod scales;

pub(crate) type Values = Vec<(&'static str, f64)>;
pub(crate) type Outcome = polymet_core::Result<(Values, bool)>;

/// Tables and chart resolutions produced while running checks.
#[derive(Default)]
pub(crate) struct Extras {
    tables: Vec<Table>,
    resolutions: BTreeMap<String, Vec<usize>>,
    prefix: String,
}

impl Extras {
    pub fn table(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<f64>>) {
        self.tables.push(Table {
            name: format!("{}.{name}", self.prefix),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        });
    }

    pub fn resolution(&mut self, name: &str, res: &[usize]) {
        self.resolutions.insert(format!("{}.{name}", self.prefix), res.to_vec());
    }
}

pub(crate) struct Ctx<'a> {
    pub cfg: &'a SuiteConfig,
    /// Generator of this suite; checks split their own sub-streams.
    pub rng: CounterRng,
    suite: Suite,
    checks: Vec<CheckRecord>,
    extras: Extras,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a SuiteConfig, suite: Suite) -> Ctx<'a> {
        let stream = suite as u64;
        Ctx {
            cfg,
            rng: CounterRng::new(cfg.seed.unwrap_or(0)).split(stream),
            suite,
            checks: Vec::new(),
            extras: Extras { prefix: suite.name().to_string(), ..Extras::default() },
        }
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.cfg.tolerance(name)
    }

    /// Runs one check; errors become failed records.
    pub fn check(&mut self, name: &str, tolerance: Option<f64>, f: impl FnOnce(&mut Extras) -> Outcome) {
        let full = format!("{}.{name}", self.suite.name());
        let record = match f(&mut self.extras) {
            Ok((values, pass)) => {
                let values: BTreeMap<String, f64> = values.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
                let finite = values.values().all(|v| v.is_finite());
                CheckRecord { name: full, values, tolerance, pass: pass && finite, error: None }
            }
            Err(e) => CheckRecord {
                name: full,
                values: BTreeMap::new(),
                tolerance,
                pass: false,
                error: Some(e.to_string().replace('\n', " ")),
            },
        };
        self.checks.push(record);
    }
}

pub(crate) fn torus(n: usize) -> polymet_core::Result<Arc<Chart>> {
    Ok(Arc::new(Chart::torus(2, n)?))
}

/// Draws a metric from the configured generator.
pub(crate) fn random_metric(cfg: &SuiteConfig, chart: &Arc<Chart>, rng: &mut CounterRng) -> polymet_core::Result<MetricField> {
    // `random_riemannian` is the only generator; config validation rejects others.
    debug_assert_eq!(cfg.generator, "random_riemannian");
    models::random_riemannian(chart, rng, cfg.modes, cfg.amplitude)
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Parallelism cap from `POLYMET_THREADS`, defaulting to the machine.
pub fn thread_cap() -> usize {
    std::env::var("POLYMET_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

struct Partial {
    checks: Vec<CheckRecord>,
    extras: Extras,
}

fn run_member(cfg: &SuiteConfig, suite: Suite) -> Partial {
    let mut ctx = Ctx::new(cfg, suite);
    match suite {
        Suite::Cone => cone::run(&mut ctx),
        Suite::Curvature => curvature::run(&mut ctx),
        Suite::Gauge => gauge::run(&mut ctx),
        Suite::Geodesic => geodesic::run(&mut ctx),
        Suite::Chern => chern::run(&mut ctx),
        Suite::Index => index::run(&mut ctx),
        Suite::Scales => scales::run(&mut ctx),
        Suite::All => unreachable!("`all` is expanded into its members"),
    }
    Partial { checks: ctx.checks, extras: ctx.extras }
}

/// Runs the configured suite. Members of `all` run on up to
/// `POLYMET_THREADS` threads; results are merged in a fixed order, so the
/// report does not depend on scheduling.
pub fn run_suite(cfg: &SuiteConfig) -> CliResult<SuiteReport> {
    cfg.validate()?;
    let members = cfg.suite.members();
    let threads = thread_cap().min(members.len()).max(1);
    let mut partials: Vec<Option<Partial>> = (0..members.len()).map(|_| None).collect();
    if threads == 1 {
        for (slot, &m) in partials.iter_mut().zip(&members) {
            *slot = Some(run_member(cfg, m));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let results = std::sync::Mutex::new(&mut partials);
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= members.len() {
                        break;
                    }
                    let p = run_member(cfg, members[i]);
                    results.lock().expect("a suite thread panicked")[i] = Some(p);
                });
            }
        });
    }
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let mut resolutions = BTreeMap::new();
    for p in partials.into_iter().flatten() {
        checks.extend(p.checks);
        tables.extend(p.extras.tables);
        resolutions.extend(p.extras.resolutions);
    }
    let mut report = SuiteReport {
        schema: SCHEMA.to_string(),
        suite: cfg.suite.name().to_string(),
        generated_at: timestamp(),
        overall_pass: false,
        checks,
        tables,
        provenance: Provenance {
            config: cfg.echo(),
            seed: cfg.seed,
            resolutions,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    report.recompute_pass();
    Ok(report)
}
