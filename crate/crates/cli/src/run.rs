//! Dispatch from a parsed instance to the engine, invariants, cohomology
//! and property checks.

use std::time::{Duration, Instant};

use log::{info, warn};

use secat_core::cohomology::{dimension_bound, weighted_cup_length};
use secat_core::instance::{Instance, Problem};
use secat_core::invariants::{
    cat_cospan, distance_cospan, distance_direct, mw_secat_cospan, secat_cospan, subspace_tc_cospan, tc_cospan,
    tc_mixed_cospan, tc_mw_cospan, tc_pair_cospan, tc_scott_cospan,
};
use secat_core::poset::diagonal;
use secat_core::propcheck::{run_suite, GeneratorConfig};
use secat_core::{Cospan, Engine, EngineConfig, Error, Mode, Subset};

use crate::cache::DiskCache;
use crate::report::{AdvisoryUpper, Bounds, BudgetUsage, CertificateReport, CrossCheck, FuzzReport, ResultReport, Timing};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub generalized: bool,
    pub max_level: Option<usize>,
    pub budget: Option<usize>,
    pub timeout: Option<Duration>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub use_cache: bool,
    pub jobs: usize,
}

#[derive(Debug)]
pub enum RunError {
    Input(String),
    Budget(String),
    CrossCheck(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Input(_) => 2,
            RunError::Budget(_) => 3,
            RunError::CrossCheck(_) => 4,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Input(m) => write!(f, "invalid input: {m}"),
            RunError::Budget(m) => write!(f, "budget exhausted: {m}"),
            RunError::CrossCheck(m) => write!(f, "internal cross-check failed: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_budget() => RunError::Budget(e.to_string()),
            Error::CrossCheckMismatch(_) => RunError::CrossCheck(e.to_string()),
            e => RunError::Input(e.to_string()),
        }
    }
}

/// Options from the instance file, overridden by command-line flags.
pub fn effective_options(inst: &Instance, flags: &RunOptions) -> RunOptions {
    let o = &inst.file.options;
    RunOptions {
        generalized: flags.generalized || o.generalized || matches!(inst.file.problem, Problem::Generalized { .. }),
        max_level: flags.max_level.or(o.max_level),
        budget: flags.budget.or(o.budget),
        timeout: flags.timeout.or(o.timeout.map(Duration::from_secs_f64)),
        ..flags.clone()
    }
}

pub fn engine_config(opts: &RunOptions) -> EngineConfig {
    let mut cfg = EngineConfig {
        max_level: opts.max_level,
        timeout: opts.timeout,
        ..EngineConfig::default()
    };
    if let Some(b) = opts.budget {
        cfg.max_maps = b;
    }
    cfg
}

/// The cospan a value problem reduces to; `None` for `fuzz`.
pub fn problem_cospan(inst: &Instance) -> Result<Option<Cospan>, Error> {
    let m = |name: &String| inst.map(name);
    let c = match &inst.file.problem {
        Problem::RelativeSecat { phi, p } | Problem::Generalized { phi, p } | Problem::Bounds { phi, p, .. } => {
            Cospan::new(m(phi).clone(), m(p).clone(), "relative_secat")?
        }
        Problem::Secat { p } => secat_cospan(m(p))?,
        Problem::Cat { phi } => cat_cospan(m(phi))?,
        Problem::Tc { space } => tc_cospan(inst.space(space))?,
        Problem::SubspaceTc { space, subset } => {
            let x = inst.space(space);
            let (prod, _) = diagonal(x)?;
            let names: Vec<String> = subset.iter().map(|(a, b)| format!("({a},{b})")).collect();
            subspace_tc_cospan(x, &Subset::from_names(&prod.space, &names)?)?
        }
        Problem::TcPair { space, subset } => {
            let x = inst.space(space);
            tc_pair_cospan(x, &Subset::from_names(x, subset)?)?
        }
        Problem::TcScott { f } => tc_scott_cospan(m(f))?,
        Problem::TcMixed { f } => tc_mixed_cospan(m(f))?,
        Problem::MwSecat { p, f } => mw_secat_cospan(m(p), m(f))?,
        Problem::TcMw { f } => tc_mw_cospan(m(f))?,
        Problem::Distance { phi, psi } => distance_cospan(m(phi), m(psi))?,
        Problem::Fuzz { .. } => return Ok(None),
    };
    Ok(Some(c))
}

fn bounds(c: &Cospan, mode: Mode, r: usize) -> Bounds {
    let lower = match mode {
        Mode::Open => weighted_cup_length(c)
            .map_err(|e| warn!("no cup-length bound: {e}"))
            .ok(),
        Mode::Generalized => None,
    };
    let up = dimension_bound(c, r);
    Bounds {
        lower,
        upper: AdvisoryUpper {
            value: up.value,
            r: up.r,
            dimension: up.dimension,
            caveat: up.caveat.to_owned(),
        },
    }
}

pub fn run(inst: &Instance, flags: &RunOptions) -> Result<ResultReport, RunError> {
    let opts = effective_options(inst, flags);
    let problem = &inst.file.problem;
    let mut report = ResultReport::new(problem.kind());
    if let Problem::Fuzz {
        seed,
        count,
        max_points,
        density,
        experimental,
    } = problem
    {
        let cfg = GeneratorConfig {
            seed: opts.seed.unwrap_or(*seed),
            count: opts.count.unwrap_or(*count),
            max_points: *max_points,
            density: *density,
            max_maps: opts.budget.unwrap_or(GeneratorConfig::default().max_maps),
            max_level: opts.max_level,
            experimental: *experimental,
            ..GeneratorConfig::default()
        };
        let checks = run_suite(&cfg, opts.jobs)?;
        report.fuzz = Some(FuzzReport {
            hard_failures: checks.hard_failures(),
            skip_rate: checks.skip_rate(),
            config: cfg,
            checks,
        });
        return Ok(report);
    }

    let c = problem_cospan(inst)?.expect("value problem");
    let mode = if opts.generalized { Mode::Generalized } else { Mode::Open };
    if let Problem::Bounds { r, .. } = problem {
        report.bounds = Some(bounds(&c, Mode::Open, *r));
        return Ok(report);
    }

    let start = Instant::now();
    let cfg = engine_config(&opts);
    let engine = Engine::new(c.clone(), cfg.clone());
    let cache = if opts.use_cache {
        DiskCache::open_default()
            .map_err(|e| warn!("cache unavailable: {e}"))
            .ok()
    } else {
        None
    };
    let mut cache_hits = 0;
    if let Some(cache) = &cache {
        let entries = cache.load(&c);
        cache_hits = entries.len();
        engine.preload(entries);
    }
    let outcome = engine.solve(mode);
    if let Some(cache) = &cache {
        if let Err(e) = cache.store(&c, &engine.memo_entries()) {
            warn!("could not write cache: {e}");
        }
    }
    let value = outcome?;
    info!("{} = {} ({:?})", problem.kind(), value.value, start.elapsed());

    if let Problem::Distance { phi, psi } = problem {
        let direct = distance_direct(inst.map(phi), inst.map(psi), &cfg)?;
        if mode == Mode::Open && direct != value.value {
            return Err(RunError::CrossCheck(format!(
                "homotopic distance: engine gives {}, direct definition gives {direct}",
                value.value
            )));
        }
        report.cross_check = Some(CrossCheck {
            method: "direct cover definition".into(),
            value: direct,
        });
    }

    if let Some(cert) = &value.certificate {
        let named = CertificateReport::from_certificate(cert);
        named
            .validate(&c, mode)
            .map_err(|e| RunError::CrossCheck(format!("certificate failed re-validation: {e}")))?;
        report.certificate = Some(named);
    }
    report.mode = Some(mode);
    report.value = Some(value.value);
    report.lower_evidence = value.lower_evidence.clone();
    report.bounds = Some(bounds(&c, mode, 0));
    report.timing = Some(Timing {
        seconds: start.elapsed().as_secs_f64(),
    });
    report.budget = Some(BudgetUsage {
        max_maps: cfg.max_maps,
        stats: engine.stats(),
        cache_hits,
    });
    Ok(report)
}
