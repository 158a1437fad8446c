use anyhow::{anyhow, bail, Result};
use serde::Serialize;

use ergodic_core::averages::{self, SeriesPoint};
use ergodic_core::covering::{self, Segment, StringDecomposition};
use ergodic_core::io::{DecompositionExport, Envelope, LoadedSystem, SystemDescription};
use ergodic_core::rational::{format_decimal, format_rational, to_f64};
use ergodic_core::verify::{self, IntervalLambda, VerificationReport};
use ergodic_core::{FiniteSystem, Horizon, IntervalObservable, IntervalPoint, IntervalSystem, Observable, Rational, SamplePlan};

use crate::input::{self, Position};
use crate::{CheckKind, CheckParams, Cli, Command, Format, PlanKind};

pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

const DIGITS: usize = 12;

pub fn run(cli: &Cli) -> Result<Outcome> {
    let format = cli.format.unwrap_or(match cli.command {
        Command::Converge { .. } => Format::Csv,
        _ => Format::Json,
    });
    match &cli.command {
        Command::Validate { system } => validate(system, format),
        Command::Average { system, x, k } => average(system, x, *k, format),
        Command::Maximal { system, x, horizon } => maximal(system, x, *horizon, format),
        Command::Decompose {
            system,
            x,
            n,
            m,
            lambda,
            trace,
        } => decompose(system, x, *n, *m, lambda, *trace, format),
        Command::Check { kind, system, params } => {
            let (_, loaded) = input::read_system(system)?;
            let report = check(*kind, &loaded, params, cli.seed)?;
            report_outcome(&report, format)
        }
        Command::Fuzz {
            trials,
            size_bound,
            inject,
        } => {
            if *size_bound == 0 {
                bail!("--size-bound must be at least 1");
            }
            let report = verify::fuzz_maximal(*trials, *size_bound, cli.seed, (*inject).into());
            report_outcome(&report, format)
        }
        Command::Converge { system, x, k, stride } => converge(system, x, *k, *stride, format),
        Command::Report { system, params } => report(system, params, cli.seed, format),
    }
}

fn json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    text
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut out = csv::Writer::from_writer(Vec::new());
    for row in rows {
        out.serialize(row)?;
    }
    Ok(String::from_utf8(out.into_inner()?)?)
}

fn render<T: Serialize>(value: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(json(value)),
        Format::Csv => csv_rows(std::slice::from_ref(value)),
    }
}

fn report_outcome(report: &VerificationReport, format: Format) -> Result<Outcome> {
    let text = match format {
        Format::Json => {
            let mut text = report.to_json();
            text.push('\n');
            text
        }
        Format::Csv => report.to_csv()?,
    };
    Ok(Outcome {
        text,
        passed: report.passed(),
    })
}

fn require_finite(loaded: &LoadedSystem, what: &str) -> Result<(FiniteSystem, Observable)> {
    loaded.finite_view().ok_or_else(|| {
        anyhow!("{what} needs a finite system (or doubling with an odd `denominator` grid)")
    })
}

fn validated(sys: &FiniteSystem) -> Result<()> {
    sys.validate()
        .map_err(|v| anyhow!("system is not measure preserving: {v}"))
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Validation {
    check: &'static str,
    system: String,
    verdict: &'static str,
    points: Option<usize>,
    positive_weight_points: Option<usize>,
    periodic_points: Option<usize>,
}

fn validate(source: &str, format: Format) -> Result<Outcome> {
    let (_, loaded) = input::read_system(source)?;
    let summary = match (&loaded, loaded.finite_view()) {
        (_, Some((sys, _))) => {
            validated(&sys)?;
            Validation {
                check: "validate",
                system: sys.descriptor(),
                verdict: "pass",
                points: Some(sys.len()),
                positive_weight_points: Some(sys.support().count()),
                periodic_points: Some(sys.periodic_mask().iter().filter(|&&p| p).count()),
            }
        }
        (LoadedSystem::Interval { system, .. }, None) => Validation {
            check: "validate",
            system: system.descriptor(),
            verdict: "pass",
            points: None,
            positive_weight_points: None,
            periodic_points: None,
        },
        (LoadedSystem::Finite { .. }, None) => unreachable!("finite systems have a finite view"),
    };
    Ok(Outcome {
        text: render(&summary, format)?,
        passed: true,
    })
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PointValue {
    system: String,
    x: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    horizon: Option<String>,
    value: String,
    decimal: String,
    /// `Ā f(x)`, for averages on finite systems.
    #[serde(skip_serializing_if = "Option::is_none")]
    limit: Option<String>,
    /// First `k` with `A_k f(x) = f*(x)`, or `never`.
    #[serde(skip_serializing_if = "Option::is_none")]
    attained_at: Option<String>,
}

fn exact_value(v: &Rational) -> (String, String) {
    (format_rational(v), format_decimal(to_f64(v), DIGITS))
}

fn float_value(v: f64) -> (String, String) {
    (v.to_string(), format_decimal(v, DIGITS))
}

fn interval_parts(loaded: &LoadedSystem) -> Option<(&IntervalSystem, &IntervalObservable)> {
    match loaded {
        LoadedSystem::Interval {
            system, observable, ..
        } => Some((system, observable)),
        LoadedSystem::Finite { .. } => None,
    }
}

/// `A_1 .. A_K` along an interval orbit, exact when `x` is `p/q`.
fn interval_series(
    sys: &IntervalSystem,
    f: &IntervalObservable,
    x: &Position,
    k: usize,
) -> Result<Vec<(String, String, Option<String>)>> {
    Ok(match x {
        Position::Exact(x) => averages::interval_averages_exact(f, sys, x, k)?
            .iter()
            .map(|v| {
                let (p, d) = exact_value(v);
                (d.clone(), d, Some(p))
            })
            .collect(),
        Position::Float(x) => averages::interval_averages(f, sys, &IntervalPoint::Float(*x), k)?
            .into_iter()
            .map(|v| {
                let (p, d) = float_value(v);
                (p, d, None)
            })
            .collect(),
    })
}

fn average(source: &str, x: &str, k: usize, format: Format) -> Result<Outcome> {
    let (_, loaded) = input::read_system(source)?;
    let row = match &loaded {
        LoadedSystem::Finite { system, observable } => {
            let point = input::point_index(x, system.len())?;
            let value = averages::birkhoff_average(observable, system, point, k)?;
            let limit = averages::limit_statistics(observable, system, point)?;
            let (value, decimal) = exact_value(&value);
            PointValue {
                system: system.descriptor(),
                x: point.to_string(),
                k: Some(k),
                horizon: None,
                value,
                decimal,
                limit: Some(format_rational(&limit.limsup)),
                attained_at: None,
            }
        }
        LoadedSystem::Interval {
            system, observable, ..
        } => {
            let series = interval_series(system, observable, &input::position(x)?, k)?;
            let (plain, decimal, exact) = series.last().cloned().expect("k >= 1");
            PointValue {
                system: system.descriptor(),
                x: x.to_string(),
                k: Some(k),
                horizon: None,
                value: exact.unwrap_or(plain),
                decimal,
                limit: None,
                attained_at: None,
            }
        }
    };
    Ok(Outcome {
        text: render(&row, format)?,
        passed: true,
    })
}

fn maximal(source: &str, x: &str, horizon: Horizon, format: Format) -> Result<Outcome> {
    let (_, loaded) = input::read_system(source)?;
    let row = match &loaded {
        LoadedSystem::Finite { system, observable } => {
            let point = input::point_index(x, system.len())?;
            let (value, attained_at) = match horizon {
                Horizon::Finite(n) => (averages::maximal_function(observable, system, point, n)?, None),
                Horizon::Infinite => {
                    let sup = averages::sup_average(observable, system, point)?;
                    let at = sup.attained_at.map_or("never".to_string(), |k| k.to_string());
                    (sup.value, Some(at))
                }
            };
            let (value, decimal) = exact_value(&value);
            PointValue {
                system: system.descriptor(),
                x: point.to_string(),
                k: None,
                horizon: Some(horizon.to_string()),
                value,
                decimal,
                limit: None,
                attained_at,
            }
        }
        LoadedSystem::Interval {
            system, observable, ..
        } => {
            let n = horizon
                .finite()
                .ok_or_else(|| anyhow!("interval systems need a finite --N"))?;
            let position = input::position(x)?;
            let (value, decimal) = match &position {
                Position::Exact(p) => {
                    let all = averages::interval_averages_exact(observable, system, p, n)?;
                    exact_value(all.iter().max().expect("n >= 1"))
                }
                Position::Float(p) => {
                    let all = averages::interval_averages(observable, system, &IntervalPoint::Float(*p), n)?;
                    float_value(all.into_iter().fold(f64::NEG_INFINITY, f64::max))
                }
            };
            PointValue {
                system: system.descriptor(),
                x: x.to_string(),
                k: None,
                horizon: Some(horizon.to_string()),
                value,
                decimal,
                limit: None,
                attained_at: None,
            }
        }
    };
    Ok(Outcome {
        text: render(&row, format)?,
        passed: true,
    })
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SegmentRow {
    kind: &'static str,
    start: usize,
    length: usize,
    block_sum: Option<String>,
}

fn segment_rows<V>(dec: &StringDecomposition<V>, sum: impl Fn(&V) -> String) -> Vec<SegmentRow> {
    dec.segments
        .iter()
        .map(|s| match s {
            Segment::ZeroRun { start, length } => SegmentRow {
                kind: "zero_run",
                start: *start,
                length: *length,
                block_sum: None,
            },
            Segment::PositiveBlock {
                start,
                length,
                block_sum,
            } => SegmentRow {
                kind: "positive_block",
                start: *start,
                length: *length,
                block_sum: Some(sum(block_sum)),
            },
        })
        .collect()
}

#[derive(Serialize)]
struct FloatDecomposition {
    x: f64,
    #[serde(rename = "N")]
    n: usize,
    m: usize,
    lambda: f64,
    guard_band: f64,
    tail_start: usize,
    tail_sum: f64,
    total_sum: f64,
    segments: Vec<SegmentRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<Vec<bool>>,
    structure: &'static str,
}

#[allow(clippy::too_many_arguments)]
fn decompose(
    source: &str,
    x: &str,
    n: usize,
    m: usize,
    lambda: &str,
    trace: bool,
    format: Format,
) -> Result<Outcome> {
    let (_, loaded) = input::read_system(source)?;
    if let Some((sys, f)) = loaded.finite_view() {
        validated(&sys)?;
        let point = match &loaded {
            LoadedSystem::Finite { .. } => input::point_index(x, sys.len())?,
            LoadedSystem::Interval { grid, .. } => {
                let target = input::rational(x)?;
                grid.iter()
                    .flatten()
                    .position(|p| *p == target)
                    .ok_or_else(|| anyhow!("{x} is not on the system's grid"))?
            }
        };
        let lambda = input::finite_lambda(Some(lambda), sys.len())?;
        let dec = covering::decompose(&f, &sys, &lambda, point, n, m)?;
        let certificate =
            covering::verify_decomposition(&dec, &f, &sys, &lambda, point).map_err(|e| e.to_string());
        let tail = covering::tail_bound_check(&dec, &f, &lambda, point, n);
        let passed = certificate.is_ok() && tail.passed();
        let text = match format {
            Format::Json => json(&DecompositionExport::new(&dec, certificate, tail, trace)),
            Format::Csv => csv_rows(&segment_rows(&dec, format_rational))?,
        };
        return Ok(Outcome { text, passed });
    }
    let (system, observable) = interval_parts(&loaded).expect("non-finite views are interval systems");
    let IntervalLambda::Constant(level) = input::interval_lambda(Some(lambda))? else {
        bail!("a decomposition needs a finite λ");
    };
    let Position::Float(start) = input::position(x)? else {
        bail!("interval decompositions iterate in floating point; give x as a decimal");
    };
    let dec = covering::decompose_interval(observable, system, level, start, n, m)?;
    let structure = covering::check_structure(&dec);
    let text = match format {
        Format::Json => json(&FloatDecomposition {
            x: start,
            n,
            m,
            lambda: level,
            guard_band: covering::GUARD_BAND,
            tail_start: dec.tail_start,
            tail_sum: dec.tail_sum(),
            total_sum: dec.total_sum(),
            segments: segment_rows(&dec, |v| v.to_string()),
            terms: trace.then(|| dec.terms.clone()),
            members: trace.then(|| dec.members.clone()),
            structure: if structure { "pass" } else { "fail" },
        }),
        Format::Csv => csv_rows(&segment_rows(&dec, |v| v.to_string()))?,
    };
    Ok(Outcome {
        text,
        passed: structure,
    })
}

// ---------------------------------------------------------------------------

fn plan(params: &CheckParams, seed: u64) -> Result<SamplePlan> {
    Ok(match params.plan {
        PlanKind::Grid => SamplePlan::grid(params.samples)?,
        PlanKind::Random => SamplePlan::random(params.samples, seed)?,
    })
}

fn check(
    kind: CheckKind,
    loaded: &LoadedSystem,
    params: &CheckParams,
    seed: u64,
) -> Result<VerificationReport> {
    let lambda = params.lambda.as_deref();
    Ok(match kind {
        CheckKind::Maximal => match loaded.finite_view() {
            Some((sys, f)) => {
                let lambda = input::finite_lambda(lambda, sys.len())?;
                verify::check_maximal_inequality(&sys, &f, &lambda, params.horizon)?
            }
            None => {
                let (system, observable) = interval_parts(loaded).expect("interval system");
                let lambda = input::interval_lambda(lambda)?;
                if lambda != IntervalLambda::NonIntegrable && params.horizon == Horizon::Infinite {
                    bail!("Monte Carlo checks need a finite --N");
                }
                let plan = plan(params, seed)?;
                verify::check_maximal_inequality_mc(system, observable, lambda, params.horizon, Some(&plan))?
            }
        },
        CheckKind::ErgodicLimit => {
            let (sys, f) = require_finite(loaded, "ergodic-limit")?;
            verify::check_ergodic_limit(&sys, &f)?
        }
        CheckKind::Duality => {
            let (sys, f) = require_finite(loaded, "duality")?;
            verify::check_duality(&sys, &f)?
        }
        CheckKind::CorollaryLambda => {
            let (sys, f) = require_finite(loaded, "corollary-lambda")?;
            match input::index_list(&params.n)?.as_slice() {
                [n] => verify::check_corollary_lambda(&sys, &f, *n)?,
                ns => verify::corollary_lambda_sweep(&sys, &f, ns.iter().copied())?,
            }
        }
        CheckKind::Final => {
            let (sys, f) = require_finite(loaded, "final")?;
            let epsilon = params
                .epsilon
                .as_deref()
                .ok_or_else(|| anyhow!("--epsilon is required"))?;
            verify::check_final_application(&sys, &f, &input::rational(epsilon)?)?
        }
        CheckKind::Truncation => {
            let (sys, f) = require_finite(loaded, "truncation")?;
            let lambda = input::finite_lambda(lambda, sys.len())?;
            let schedule = match params.s.as_deref() {
                Some(text) => input::rationals(text)?,
                None => verify::truncation_schedule(&f),
            };
            verify::check_truncation(&sys, &f, &lambda, params.horizon, &schedule)?
        }
        CheckKind::Rotation => {
            let Some((IntervalSystem::Rotation(rotation), _)) = interval_parts(loaded) else {
                bail!("the rotation check needs a rotation system");
            };
            if params.k == 0 {
                bail!("--K must be at least 1");
            }
            verify::check_rotation_equidistribution(rotation.alpha(), params.x0, params.k)?
        }
    })
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SeriesRow {
    k: usize,
    average: String,
    exact: Option<String>,
}

fn converge(source: &str, x: &str, k: usize, stride: usize, format: Format) -> Result<Outcome> {
    if k == 0 || stride == 0 {
        bail!("--K and --stride must be at least 1");
    }
    let (_, loaded) = input::read_system(source)?;
    let rows: Vec<SeriesRow> = match &loaded {
        LoadedSystem::Finite { system, observable } => {
            let point = input::point_index(x, system.len())?;
            averages::convergence_series(observable, system, point, k, stride)?
                .into_iter()
                .map(|SeriesPoint { k, value, exact }| SeriesRow {
                    k,
                    average: format_decimal(value, DIGITS),
                    exact: exact.as_ref().map(format_rational),
                })
                .collect()
        }
        LoadedSystem::Interval {
            system, observable, ..
        } => {
            let series = interval_series(system, observable, &input::position(x)?, k)?;
            (stride..=k)
                .step_by(stride)
                .map(|i| {
                    let (_, decimal, exact) = series[i - 1].clone();
                    SeriesRow {
                        k: i,
                        average: decimal,
                        exact,
                    }
                })
                .collect()
        }
    };
    let text = match format {
        Format::Csv => csv_rows(&rows)?,
        Format::Json => json(&rows),
    };
    Ok(Outcome { text, passed: true })
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ReportSummary<'a> {
    check: &'a str,
    verdict: &'static str,
    value: String,
}

fn report(source: &str, params: &CheckParams, seed: u64, format: Format) -> Result<Outcome> {
    let (description, loaded) = input::read_system(source)?;
    let mut reports = Vec::new();
    if let Some((sys, f)) = loaded.finite_view() {
        validated(&sys)?;
        reports.push(verify::check_ergodic_limit(&sys, &f)?);
        reports.push(verify::check_duality(&sys, &f)?);
        reports.push(verify::corollary_lambda_sweep(&sys, &f, input::index_list(&params.n)?)?);
        let epsilon = input::rational(params.epsilon.as_deref().unwrap_or("1/10"))?;
        reports.push(verify::check_final_application(&sys, &f, &epsilon)?);
        if params.lambda.is_some() {
            for kind in [CheckKind::Maximal, CheckKind::Truncation] {
                reports.push(check(kind, &loaded, params, seed)?);
            }
        }
    } else if let Some((IntervalSystem::Rotation(_), _)) = interval_parts(&loaded) {
        reports.push(check(CheckKind::Rotation, &loaded, params, seed)?);
        if params.lambda.is_some() {
            reports.push(check(CheckKind::Maximal, &loaded, params, seed)?);
        }
    } else if params.lambda.is_some() {
        reports.push(check(CheckKind::Maximal, &loaded, params, seed)?);
    }
    let passed = reports.iter().all(VerificationReport::passed);
    let text = match format {
        Format::Json => json(&Envelope::<SystemDescription> {
            system: description,
            reports,
        }),
        Format::Csv => {
            let rows: Vec<_> = reports
                .iter()
                .map(|r| ReportSummary {
                    check: &r.check,
                    verdict: if r.passed() { "pass" } else { "fail" },
                    value: r.value.to_string(),
                })
                .collect();
            csv_rows(&rows)?
        }
    };
    Ok(Outcome { text, passed })
}
