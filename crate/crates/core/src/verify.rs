//! Executable checks of the maximal inequality and the ergodic theorem.
//!
//! Finite-system checks compare exact rationals with zero tolerance. Interval
//! checks are Monte Carlo estimates that pass when `estimate >= -3 stderr`.

use indexmap::IndexMap;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averages::{self, AverageError, Horizon, LevelSet};
use crate::dynamics::{
    DynamicsError, FiniteSystem, IntervalObservable, IntervalPoint, IntervalSystem, Observable,
    SamplePlan, Violation,
};
use crate::rational::{format_rational, int, ratio, Rational};

/// Rule used by Monte Carlo checks.
pub const STATISTICAL_RULE: &str = "estimate >= -3 * stderr";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("system is not measure preserving: {0}")]
    InvalidSystem(#[from] Violation),
    #[error("lambda is not invariant under the map")]
    NonInvariantLambda,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("n must be at least 1")]
    ZeroIndex,
    #[error("truncation schedule must be nondecreasing")]
    UnsortedSchedule,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Average(AverageError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl From<AverageError> for VerifyError {
    fn from(e: AverageError) -> Self {
        match e {
            AverageError::NonInvariantLambda => VerifyError::NonInvariantLambda,
            AverageError::Dynamics(d) => VerifyError::Dynamics(d),
            other => VerifyError::Average(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exact rational comparisons, zero tolerance.
    Exact,
    /// Sample estimates judged by a stated confidence rule.
    Statistical,
    /// Deterministic float computation against an analytic bound.
    FloatBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReportValue {
    Exact { value: String },
    Estimate { mean: f64, stderr: f64, samples: usize },
    Float { value: f64, bound: f64 },
    /// Non-integrable λ: the integral is `+∞ >= 0` and nothing is computed.
    VacuousInfinite,
    Count { passed: usize, failed: usize, rejected: usize },
}

/// Outcome of one check. Serializes to one JSON object; `rows` carries
/// per-trial or per-sweep data for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub system: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_rule: Option<String>,
    pub parameters: IndexMap<String, String>,
    pub value: ReportValue,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<IndexMap<String, String>>,
}

impl VerificationReport {
    fn new(check: &str, system: String, mode: Mode) -> Self {
        Self {
            check: check.to_string(),
            system,
            mode,
            confidence_rule: (mode == Mode::Statistical).then(|| STATISTICAL_RULE.to_string()),
            parameters: IndexMap::new(),
            value: ReportValue::Exact {
                value: "0".to_string(),
            },
            verdict: Verdict::Pass,
            failures: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    fn exact(mut self, value: &Rational) -> Self {
        self.value = ReportValue::Exact {
            value: format_rational(value),
        };
        self
    }

    fn require(&mut self, holds: bool, what: impl FnOnce() -> String) {
        if !holds {
            self.failures.push(what());
        }
    }

    fn finish(mut self) -> Self {
        self.verdict = if self.failures.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// One CSV row per entry of `rows`, or a single summary row.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut out = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            out.write_record(["check", "system", "mode", "verdict", "value", "parameters"])?;
            let params = self
                .parameters
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            out.write_record([
                self.check.as_str(),
                self.system.as_str(),
                mode_name(self.mode),
                verdict_name(self.verdict),
                &self.value.to_string(),
                &params,
            ])?;
        } else {
            let mut header = vec!["check".to_string()];
            header.extend(self.rows[0].keys().cloned());
            out.write_record(&header)?;
            for row in &self.rows {
                let mut record = vec![self.check.clone()];
                record.extend(header[1..].iter().map(|k| row.get(k).cloned().unwrap_or_default()));
                out.write_record(&record)?;
            }
        }
        let bytes = out.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Exact => "exact",
        Mode::Statistical => "statistical",
        Mode::FloatBound => "float-bound",
    }
}

fn verdict_name(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    }
}

/// Single-cell text: `p/q`, `mean+-stderr`, `value<=bound`, `VACUOUS-INFINITE`
/// or `passed/failed/rejected`.
impl std::fmt::Display for ReportValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReportValue::Exact { value } => write!(f, "{value}"),
            ReportValue::Estimate { mean, stderr, .. } => write!(f, "{mean}+-{stderr}"),
            ReportValue::Float { value, bound } => write!(f, "{value}<={bound}"),
            ReportValue::VacuousInfinite => write!(f, "VACUOUS-INFINITE"),
            ReportValue::Count {
                passed,
                failed,
                rejected,
            } => write!(f, "{passed}/{failed}/{rejected}"),
        }
    }
}

/// Compact text for an observable: the constant itself or a bracketed list.
pub fn describe_observable(f: &Observable) -> String {
    if f.is_constant() && !f.is_empty() {
        format_rational(f.value(0))
    } else {
        let parts: Vec<String> = f.values().iter().map(format_rational).collect();
        format!("[{}]", parts.join(","))
    }
}

fn indices_text(set: &LevelSet) -> String {
    let parts: Vec<String> = set.indices().iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn prepare(sys: &FiniteSystem, observables: &[&Observable]) -> Result<(), VerifyError> {
    sys.validate()?;
    for f in observables {
        sys.check_observable(f)?;
    }
    Ok(())
}

fn covers_support(set: &LevelSet, sys: &FiniteSystem) -> bool {
    sys.support().all(|x| set.contains(x))
}

// ---------------------------------------------------------------------------
// Maximal inequality

/// Exact `∫_{f*_N > λ} (f - λ) >= 0`.
pub fn check_maximal_inequality(
    sys: &FiniteSystem,
    f: &Observable,
    lambda: &Observable,
    horizon: Horizon,
) -> Result<VerificationReport, VerifyError> {
    prepare(sys, &[f, lambda])?;
    if !sys.is_invariant(lambda) {
        return Err(VerifyError::NonInvariantLambda);
    }
    let set = averages::level_set(f, sys, lambda, horizon)?;
    let value = averages::integrate(&f.sub(lambda), sys, Some(&set))?;
    let mut report = VerificationReport::new("maximal-inequality", sys.descriptor(), Mode::Exact)
        .param("f", describe_observable(f))
        .param("lambda", describe_observable(lambda))
        .param("N", horizon)
        .param("level_set", indices_text(&set))
        .param("level_set_measure", format_rational(&set.measure(sys)))
        .exact(&value);
    report.require(!value.is_negative(), || {
        format!("integral over the level set is {value} < 0")
    });
    Ok(report.finish())
}

/// Integrability status of a user-supplied λ on an interval system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalLambda {
    Constant(f64),
    /// Declared non-integrable: the integral is `+∞` and the check is vacuous.
    NonIntegrable,
}

/// Monte Carlo `∫_{f*_N > λ} (f - λ) >= 0` on an interval system.
pub fn check_maximal_inequality_mc(
    sys: &IntervalSystem,
    f: &IntervalObservable,
    lambda: IntervalLambda,
    horizon: Horizon,
    plan: Option<&SamplePlan>,
) -> Result<VerificationReport, VerifyError> {
    let report = VerificationReport::new(
        "maximal-inequality-mc",
        sys.descriptor(),
        Mode::Statistical,
    )
    .param("f", format!("{f:?}"))
    .param("N", horizon);
    let level = match lambda {
        IntervalLambda::NonIntegrable => {
            let mut report = report.param("lambda", "non-integrable");
            report.value = ReportValue::VacuousInfinite;
            return Ok(report.finish());
        }
        IntervalLambda::Constant(level) => level,
    };
    let plan = plan.ok_or(AverageError::MissingPlan)?;
    if let IntervalSystem::Doubling = sys {
        return Err(VerifyError::Unsupported(
            "doubling has no float orbits; check its finite image on an odd-denominator grid"
                .into(),
        ));
    }
    let set = averages::sampled_level_set(f, sys, level, horizon, plan)?;
    let estimate = averages::integrate_sampled(|x| f.eval_f64(x) - level, Some(plan), Some(&set))?;
    let mut report = report
        .param("lambda", level)
        .param("plan", serde_json::to_string(plan).expect("plan serializes"))
        .param(
            "members",
            set.members.iter().filter(|&&m| m).count(),
        );
    report.value = ReportValue::Estimate {
        mean: estimate.mean,
        stderr: estimate.stderr,
        samples: estimate.samples,
    };
    report.require(estimate.mean >= -3.0 * estimate.stderr, || {
        format!(
            "estimate {} is below -3 stderr ({})",
            estimate.mean,
            -3.0 * estimate.stderr
        )
    });
    Ok(report.finish())
}

// ---------------------------------------------------------------------------
// Fuzzing

/// Deliberate defects used to exercise the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    #[default]
    None,
    /// Level sets use `>=` instead of `>`; the inequality still holds.
    NonStrictLevelSet,
    /// Weights are doubled; the validator must reject every system.
    UnnormalizedWeights,
}

/// One random `(system, f, λ, N)` tuple plus decomposition parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzInstance {
    pub seed: u64,
    pub trial: u64,
    pub system: FiniteSystem,
    pub f: Observable,
    pub lambda: Observable,
    pub lambda_kind: &'static str,
    pub horizon: Horizon,
    /// Start point and window for decomposition traces.
    pub x: usize,
    pub window: usize,
    pub m: usize,
}

impl FuzzInstance {
    /// Instance `trial` of the stream `seed`; independent of every other trial.
    pub fn generate(seed: u64, trial: u64, size_bound: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let n = rng.gen_range(1..=size_bound.max(1));
        let system = FiniteSystem::random_preserving(n, rng.gen())
            .expect("n >= 1 always yields a system");
        let f = Observable::random(&mut rng, n, 8);
        let (lambda, lambda_kind) = match rng.gen_range(0..3) {
            0 => (system.random_invariant(rng.gen()), "invariant"),
            1 => {
                let at = rng.gen_range(0..n);
                (Observable::constant(f.value(at).clone(), n), "tie")
            }
            _ => (
                Observable::constant(crate::dynamics::random_rational(&mut rng, 8), n),
                "constant",
            ),
        };
        let horizon = match rng.gen_range(1..=9) {
            9 => Horizon::Infinite,
            k => Horizon::Finite(k),
        };
        Self {
            seed,
            trial,
            x: rng.gen_range(0..n),
            window: rng.gen_range(1..=8),
            m: rng.gen_range(1..=512),
            system,
            f,
            lambda,
            lambda_kind,
            horizon,
        }
    }

    /// Replay data: enough to regenerate or inspect the instance.
    pub fn describe(&self) -> String {
        let weights: Vec<String> = self.system.weights().iter().map(format_rational).collect();
        format!(
            "seed={} trial={} weights=[{}] map={:?} f={} lambda={} N={}",
            self.seed,
            self.trial,
            weights.join(","),
            self.system.map(),
            describe_observable(&self.f),
            describe_observable(&self.lambda),
            self.horizon
        )
    }
}

enum TrialOutcome {
    Pass(Rational),
    Fail(Rational),
    Rejected(String),
}

fn run_trial(instance: &FuzzInstance, fault: Fault) -> TrialOutcome {
    let system = match fault {
        Fault::UnnormalizedWeights => {
            let doubled = instance.system.weights().iter().map(|w| w * int(2)).collect();
            FiniteSystem::new(doubled, instance.system.map().to_vec()).expect("same structure")
        }
        _ => instance.system.clone(),
    };
    if let Err(v) = system.validate() {
        return TrialOutcome::Rejected(v.to_string());
    }
    let value = match fault {
        Fault::NonStrictLevelSet => {
            let set = averages::level_set(&instance.f, &system, &instance.lambda, instance.horizon)
                .expect("fuzzed lambda is invariant");
            let g = instance.f.sub(&instance.lambda);
            (0..system.len())
                .filter(|&x| set.maximal[x] >= *instance.lambda.value(x))
                .map(|x| g.value(x) * system.weight(x))
                .sum()
        }
        _ => match check_maximal_inequality(&system, &instance.f, &instance.lambda, instance.horizon)
        {
            Ok(report) => match report.value {
                ReportValue::Exact { value } => {
                    crate::rational::parse_rational(&value).expect("own output parses")
                }
                _ => unreachable!("exact check"),
            },
            Err(e) => return TrialOutcome::Rejected(e.to_string()),
        },
    };
    if value.is_negative() {
        TrialOutcome::Fail(value)
    } else {
        TrialOutcome::Pass(value)
    }
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send>(trials: u64, op: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(op).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T: Send>(trials: u64, op: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..trials).map(op).collect()
}

/// Runs the exact maximal inequality on `trials` random instances.
pub fn fuzz_maximal(trials: u64, size_bound: usize, seed: u64, fault: Fault) -> VerificationReport {
    let outcomes = map_trials(trials, |t| {
        let instance = FuzzInstance::generate(seed, t, size_bound);
        let outcome = run_trial(&instance, fault);
        (instance, outcome)
    });
    let mut report = VerificationReport::new("fuzz-maximal", "random-finite".into(), Mode::Exact)
        .param("trials", trials)
        .param("size_bound", size_bound)
        .param("seed", seed)
        .param(
            "fault",
            serde_json::to_value(fault)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        );
    let (mut passed, mut failed, mut rejected) = (0, 0, 0);
    for (instance, outcome) in &outcomes {
        let (verdict, value) = match outcome {
            TrialOutcome::Pass(v) => {
                passed += 1;
                ("pass", format_rational(v))
            }
            TrialOutcome::Fail(v) => {
                failed += 1;
                report
                    .failures
                    .push(format!("negative integral {v}: {}", instance.describe()));
                ("fail", format_rational(v))
            }
            TrialOutcome::Rejected(why) => {
                rejected += 1;
                if fault == Fault::None {
                    report
                        .failures
                        .push(format!("rejected ({why}): {}", instance.describe()));
                }
                ("rejected", String::new())
            }
        };
        let mut row = IndexMap::new();
        row.insert("trial".into(), instance.trial.to_string());
        row.insert("n".into(), instance.system.len().to_string());
        row.insert("N".into(), instance.horizon.to_string());
        row.insert("lambda_kind".into(), instance.lambda_kind.to_string());
        row.insert("value".into(), value);
        row.insert("verdict".into(), verdict.to_string());
        report.rows.push(row);
    }
    report.value = ReportValue::Count {
        passed,
        failed,
        rejected,
    };
    if fault == Fault::UnnormalizedWeights && rejected as u64 != trials {
        report
            .failures
            .push(format!("validator accepted {} unnormalized systems", trials - rejected as u64));
    }
    report.finish()
}

// ---------------------------------------------------------------------------
// Ergodic theorem on finite systems

/// `∫ Ā <= ∫ f`, with equality asserted as well.
pub fn check_ergodic_limit(
    sys: &FiniteSystem,
    f: &Observable,
) -> Result<VerificationReport, VerifyError> {
    prepare(sys, &[f])?;
    let limsup = averages::limsup_observable(f, sys)?;
    let int_limsup = averages::integrate(&limsup, sys, None)?;
    let int_f = averages::integrate(f, sys, None)?;
    let mut report = VerificationReport::new("ergodic-limit", sys.descriptor(), Mode::Exact)
        .param("f", describe_observable(f))
        .param("integral_f", format_rational(&int_f))
        .exact(&int_limsup);
    report.require(int_limsup <= int_f, || {
        format!("integral of limsup {int_limsup} exceeds integral of f {int_f}")
    });
    report.require(int_limsup == int_f, || {
        format!("integral of limsup {int_limsup} differs from integral of f {int_f}")
    });
    Ok(report.finish())
}

/// `A̲(f) = -Ā(-f)` and `Ā = A̲` at every positive-weight point.
pub fn check_duality(sys: &FiniteSystem, f: &Observable) -> Result<VerificationReport, VerifyError> {
    prepare(sys, &[f])?;
    let neg = f.neg();
    let mut report = VerificationReport::new("duality", sys.descriptor(), Mode::Exact)
        .param("f", describe_observable(f));
    let mut int_limsup = Rational::zero();
    let mut int_liminf = Rational::zero();
    for x in sys.support() {
        let direct = averages::limit_statistics(f, sys, x)?;
        let mirrored = averages::limit_statistics(&neg, sys, x)?;
        report.require(direct.liminf == -&mirrored.limsup, || {
            format!(
                "point {x}: liminf {} differs from -limsup(-f) {}",
                direct.liminf, -&mirrored.limsup
            )
        });
        report.require(direct.limsup == direct.liminf, || {
            format!("point {x}: limsup {} != liminf {}", direct.limsup, direct.liminf)
        });
        int_limsup += &direct.limsup * sys.weight(x);
        int_liminf -= &mirrored.limsup * sys.weight(x);
    }
    let int_f = averages::integrate(f, sys, None)?;
    report.require(
        int_limsup <= int_f && int_f <= int_liminf && int_liminf <= int_limsup,
        || format!("chain fails: {int_limsup} <= {int_f} <= {int_liminf} <= {int_limsup}"),
    );
    let gap = &int_limsup - &int_liminf;
    report.require(gap.is_zero(), || format!("integral of limsup - liminf is {gap}"));
    Ok(report
        .param("integral_limsup", format_rational(&int_limsup))
        .param("integral_liminf", format_rational(&int_liminf))
        .exact(&gap)
        .finish())
}

/// `λ = min(Ā(f⁺), n) - 1/n`: invariant, `{(f⁺)* > λ}` is everything, and
/// `∫ f⁺ >= ∫ λ`.
pub fn check_corollary_lambda(
    sys: &FiniteSystem,
    f: &Observable,
    n: u64,
) -> Result<VerificationReport, VerifyError> {
    if n == 0 {
        return Err(VerifyError::ZeroIndex);
    }
    prepare(sys, &[f])?;
    corollary_lambda(sys, f, &PositivePart::new(sys, f)?, n)
}

/// `f⁺` with its limit `Ā(f⁺)` and supremum `(f⁺)*`; neither depends on `n`.
struct PositivePart {
    f_plus: Observable,
    limsup: Observable,
    sup: Vec<Rational>,
}

impl PositivePart {
    fn new(sys: &FiniteSystem, f: &Observable) -> Result<Self, VerifyError> {
        let f_plus = f.positive_part();
        let limsup = averages::limsup_observable(&f_plus, sys)?;
        let zero = Observable::constant(Rational::zero(), sys.len());
        let sup = averages::level_set(&f_plus, sys, &zero, Horizon::Infinite)?.maximal;
        Ok(Self { f_plus, limsup, sup })
    }
}

fn corollary_lambda(
    sys: &FiniteSystem,
    f: &Observable,
    plus: &PositivePart,
    n: u64,
) -> Result<VerificationReport, VerifyError> {
    let n_rat = int(n as i64);
    let lambda = plus.limsup.map(|a| a.min(&n_rat).clone() - ratio(1, n as i64));
    let mut report = VerificationReport::new("corollary-lambda", sys.descriptor(), Mode::Exact)
        .param("f", describe_observable(f))
        .param("n", n)
        .param("lambda", describe_observable(&lambda));

    let invariant = sys.is_invariant(&lambda);
    report.require(invariant, || "lambda is not invariant".into());
    if !invariant {
        return Ok(report.finish());
    }
    let set = LevelSet {
        members: plus.sup.iter().zip(lambda.values()).map(|(s, l)| s > l).collect(),
        maximal: plus.sup.clone(),
        horizon: Horizon::Infinite,
    };
    report.require(covers_support(&set, sys), || {
        format!("level set {} misses positive-weight points", indices_text(&set))
    });
    let int_f_plus = averages::integrate(&plus.f_plus, sys, None)?;
    let int_lambda = averages::integrate(&lambda, sys, None)?;
    report.require(int_f_plus >= int_lambda, || {
        format!("integral of f+ {int_f_plus} is below integral of lambda {int_lambda}")
    });
    let int_limsup_plus = averages::integrate(&plus.limsup, sys, None)?;
    let max_limsup = plus.limsup.values().iter().max().cloned().unwrap_or_else(Rational::zero);
    if n_rat >= max_limsup {
        report.require(&int_lambda + ratio(1, n as i64) == int_limsup_plus, || {
            format!("integral of lambda + 1/n does not reach {int_limsup_plus}")
        });
    }
    Ok(report
        .param("integral_f_plus", format_rational(&int_f_plus))
        .param("integral_limsup_f_plus", format_rational(&int_limsup_plus))
        .exact(&int_lambda)
        .finish())
}

/// Runs [`check_corollary_lambda`] for each `n` and checks that `∫ λ` is
/// nondecreasing in `n`.
pub fn corollary_lambda_sweep(
    sys: &FiniteSystem,
    f: &Observable,
    ns: impl IntoIterator<Item = u64>,
) -> Result<VerificationReport, VerifyError> {
    let mut report = VerificationReport::new("corollary-lambda-sweep", sys.descriptor(), Mode::Exact)
        .param("f", describe_observable(f));
    prepare(sys, &[f])?;
    let plus = PositivePart::new(sys, f)?;
    let mut previous: Option<Rational> = None;
    for n in ns {
        if n == 0 {
            return Err(VerifyError::ZeroIndex);
        }
        let single = corollary_lambda(sys, f, &plus, n)?;
        let ReportValue::Exact { value } = &single.value else {
            unreachable!("exact check")
        };
        let int_lambda = crate::rational::parse_rational(value).expect("own output parses");
        report.failures.extend(single.failures.iter().map(|m| format!("n={n}: {m}")));
        if let Some(prev) = &previous {
            report.require(int_lambda >= *prev, || {
                format!("integral of lambda drops from {prev} to {int_lambda} at n={n}")
            });
        }
        let mut row = IndexMap::new();
        row.insert("n".into(), n.to_string());
        row.insert("integral_lambda".into(), value.clone());
        row.insert("verdict".into(), verdict_name(single.verdict).to_string());
        report.rows.push(row);
        previous = Some(int_lambda);
    }
    if let Some(last) = &previous {
        report = report.exact(last);
    }
    Ok(report.finish())
}

/// `λ = Ā - ε`: `{f* > λ}` is everything and `∫ f >= ∫ λ = ∫ Ā - ε`.
pub fn check_final_application(
    sys: &FiniteSystem,
    f: &Observable,
    epsilon: &Rational,
) -> Result<VerificationReport, VerifyError> {
    if !epsilon.is_positive() {
        return Err(VerifyError::NonPositiveEpsilon);
    }
    prepare(sys, &[f])?;
    let limsup = averages::limsup_observable(f, sys)?;
    let lambda = limsup.map(|a| a - epsilon);
    let mut report = VerificationReport::new("final-application", sys.descriptor(), Mode::Exact)
        .param("f", describe_observable(f))
        .param("epsilon", format_rational(epsilon))
        .param("lambda", describe_observable(&lambda));
    let set = averages::level_set(f, sys, &lambda, Horizon::Infinite)?;
    report.require(covers_support(&set, sys), || {
        format!("level set {} misses positive-weight points", indices_text(&set))
    });
    let int_f = averages::integrate(f, sys, None)?;
    let int_lambda = averages::integrate(&lambda, sys, None)?;
    let int_limsup = averages::integrate(&limsup, sys, None)?;
    report.require(int_f >= int_lambda, || {
        format!("integral of f {int_f} is below integral of lambda {int_lambda}")
    });
    report.require(int_lambda == &int_limsup - epsilon, || {
        format!("integral of lambda {int_lambda} != {int_limsup} - epsilon")
    });
    Ok(report
        .param("integral_f", format_rational(&int_f))
        .param("integral_limsup", format_rational(&int_limsup))
        .exact(&int_lambda)
        .finish())
}

/// Sorted distinct values of `|f|`.
pub fn truncation_schedule(f: &Observable) -> Vec<Rational> {
    let mut levels: Vec<Rational> = f.values().iter().map(|v| v.abs()).collect();
    levels.sort();
    levels.dedup();
    levels
}

/// Sweeps `s` and compares `(φ_s)*_N` with `f*_N`.
///
/// Each row reports `μ({(φ_s)*_N > λ} △ {f*_N > λ})`, `‖(φ_s)*_N - f*_N‖₁`
/// and `∫_{(φ_s)*_N > λ} (φ_s - λ)`.
pub fn check_truncation(
    sys: &FiniteSystem,
    f: &Observable,
    lambda: &Observable,
    horizon: Horizon,
    s_schedule: &[Rational],
) -> Result<VerificationReport, VerifyError> {
    if s_schedule.windows(2).any(|w| w[0] > w[1]) {
        return Err(VerifyError::UnsortedSchedule);
    }
    prepare(sys, &[f, lambda])?;
    if !sys.is_invariant(lambda) {
        return Err(VerifyError::NonInvariantLambda);
    }
    let full = averages::level_set(f, sys, lambda, horizon)?;
    let full_integral = averages::integrate(&f.sub(lambda), sys, Some(&full))?;
    let max_abs = f.values().iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
    let mut report = VerificationReport::new("truncation", sys.descriptor(), Mode::Exact)
        .param("f", describe_observable(f))
        .param("lambda", describe_observable(lambda))
        .param("N", horizon)
        .param("limit_integral", format_rational(&full_integral));

    let mut previous: Option<(Rational, Rational)> = None;
    let mut monotone_symdiff = true;
    for s in s_schedule {
        let phi = averages::truncate(f, s)?;
        let set = averages::level_set(&phi, sys, lambda, horizon)?;
        let symdiff = set.symmetric_difference_measure(&full, sys);
        let l1: Rational = (0..sys.len())
            .map(|x| (&set.maximal[x] - &full.maximal[x]).abs() * sys.weight(x))
            .sum();
        let integral = averages::integrate(&phi.sub(lambda), sys, Some(&set))?;
        report.require(!integral.is_negative(), || {
            format!("s={s}: truncated integral {integral} < 0")
        });
        if let Some((prev_symdiff, prev_l1)) = &previous {
            report.require(l1 <= *prev_l1, || {
                format!("s={s}: L1 distance rises from {prev_l1} to {l1}")
            });
            monotone_symdiff &= symdiff <= *prev_symdiff;
        }
        if *s >= max_abs {
            report.require(symdiff.is_zero() && l1.is_zero() && integral == full_integral, || {
                format!("s={s} >= max|f| but the truncation has not reached its limit")
            });
        }
        let mut row = IndexMap::new();
        row.insert("s".into(), format_rational(s));
        row.insert("symmetric_difference".into(), format_rational(&symdiff));
        row.insert("l1_distance".into(), format_rational(&l1));
        row.insert("integral".into(), format_rational(&integral));
        report.rows.push(row);
        previous = Some((symdiff, l1));
    }
    let last_integral = report
        .rows
        .last()
        .map(|r| r["integral"].clone())
        .unwrap_or_else(|| format_rational(&full_integral));
    report.value = ReportValue::Exact {
        value: last_integral,
    };
    Ok(report
        .param("symmetric_difference_monotone", monotone_symdiff)
        .finish())
}

// ---------------------------------------------------------------------------
// Rotations

/// Float slack for `K` rotation steps: position drift is at most one
/// half-ulp of 1 per step, and `cos 2πx` is `2π`-Lipschitz.
pub fn rotation_slack(k: usize) -> f64 {
    1e-15 * k as f64
}

/// `|A_K cos 2πx (x₀)| <= 1 / (K sin πα) + slack(K)` for the rotation by `α`.
pub fn check_rotation_equidistribution(
    alpha: f64,
    x0: f64,
    k: usize,
) -> Result<VerificationReport, VerifyError> {
    let sys = IntervalSystem::rotation(alpha)?;
    if !(0.0..1.0).contains(&x0) {
        return Err(DynamicsError::OutsideUnitInterval(x0.to_string()).into());
    }
    let averages =
        averages::interval_averages(&IntervalObservable::Cosine, &sys, &IntervalPoint::Float(x0), k)?;
    let value = averages[k - 1];
    let bound = 1.0 / (k as f64 * (std::f64::consts::PI * alpha).sin()) + rotation_slack(k);
    let mut report = VerificationReport::new("rotation-equidistribution", sys.descriptor(), Mode::FloatBound)
        .param("alpha", alpha)
        .param("x0", x0)
        .param("K", k)
        .param("f", "cos 2 pi x");
    report.value = ReportValue::Float { value, bound };
    report.require(value.abs() <= bound, || format!("|A_K| = {} exceeds {bound}", value.abs()));
    Ok(report.finish())
}
