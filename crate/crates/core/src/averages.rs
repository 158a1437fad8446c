//! Birkhoff averages, maximal functions, level sets, limit statistics,
//! truncations and integrals.
//!
//! On a [`FiniteSystem`] every value is an exact [`Rational`]. On an
//! [`IntervalSystem`] averages are computed along float (or exact) orbits and
//! integrals are sample means with a standard error.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{
    DynamicsError, FiniteSystem, IntervalObservable, IntervalPoint, IntervalSystem, Observable,
    OrbitShape, SamplePlan,
};
use crate::rational::{int, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AverageError {
    #[error("averages need k >= 1")]
    ZeroLength,
    #[error("lambda is not invariant under the map")]
    NonInvariantLambda,
    #[error("truncation level must be nonnegative")]
    NegativeTruncation,
    #[error("interval integrals need a sample plan")]
    MissingPlan,
    #[error("restriction was sampled with a different plan")]
    PlanMismatch,
    #[error("an infinite horizon is only available on finite systems")]
    InfiniteHorizon,
    #[error("observable has no exact value at {0}")]
    NotExact(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Window length bound `N` for `f*_N`, or `N = ∞` for `f*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Option<usize> {
        match self {
            Horizon::Finite(n) => Some(n),
            Horizon::Infinite => None,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(n) => write!(f, "{n}"),
            Horizon::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` is not a horizon (a positive integer or `inf`)")]
pub struct ParseHorizonError(String);

impl FromStr for Horizon {
    type Err = ParseHorizonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Horizon::Infinite),
            t => match t.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(Horizon::Finite(n)),
                _ => Err(ParseHorizonError(s.to_string())),
            },
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

fn check_inputs(f: &Observable, sys: &FiniteSystem, x: usize) -> Result<(), AverageError> {
    sys.check_observable(f)?;
    sys.check_point(x)?;
    Ok(())
}

/// Partial sums `S_1, ..., S_K` of `f` along the orbit of `x`.
fn orbit_sums(f: &Observable, sys: &FiniteSystem, x: usize, k_max: usize) -> Vec<Rational> {
    let mut sums = Vec::with_capacity(k_max);
    let mut acc = Rational::zero();
    let mut y = x;
    for _ in 0..k_max {
        acc += f.value(y);
        sums.push(acc.clone());
        y = sys.apply(y);
    }
    sums
}

fn divide(sum: &Rational, k: usize) -> Rational {
    sum / int(k as i64)
}

/// `A_k f(x) = (1/k) Σ_{j<k} f(T^j x)`.
pub fn birkhoff_average(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
    k: usize,
) -> Result<Rational, AverageError> {
    if k == 0 {
        return Err(AverageError::ZeroLength);
    }
    check_inputs(f, sys, x)?;
    let sums = orbit_sums(f, sys, x, k);
    Ok(divide(&sums[k - 1], k))
}

/// `A_1 f(x), ..., A_K f(x)` from one running sum.
pub fn birkhoff_averages(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
    k_max: usize,
) -> Result<Vec<Rational>, AverageError> {
    if k_max == 0 {
        return Err(AverageError::ZeroLength);
    }
    check_inputs(f, sys, x)?;
    Ok(orbit_sums(f, sys, x, k_max)
        .iter()
        .enumerate()
        .map(|(i, s)| divide(s, i + 1))
        .collect())
}

/// Index (1-based) of the first maximum of `S_k / k`, and that maximum.
/// First `k` maximizing `S_k / k`, and that maximum. Compares
/// `S_k / k > S_b / b` as `p_k q_b b > p_b q_k k` to skip the gcd of each quotient.
fn running_max(sums: &[Rational]) -> (usize, Rational) {
    let mut best_k = 1;
    for (i, s) in sums.iter().enumerate().skip(1) {
        let k = i + 1;
        let best = &sums[best_k - 1];
        if s.numer() * best.denom() * BigInt::from(best_k) > best.numer() * s.denom() * BigInt::from(k) {
            best_k = k;
        }
    }
    (best_k, divide(&sums[best_k - 1], best_k))
}

/// `f*_N(x) = max_{1<=k<=N} A_k f(x)`.
pub fn maximal_function(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
    n: usize,
) -> Result<Rational, AverageError> {
    if n == 0 {
        return Err(AverageError::ZeroLength);
    }
    check_inputs(f, sys, x)?;
    Ok(running_max(&orbit_sums(f, sys, x, n)).1)
}

/// `f*(x) = sup_k A_k f(x)` on a finite system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupAverage {
    #[serde(with = "crate::rational::serde_text")]
    pub value: Rational,
    /// Smallest `k` with `A_k f(x) = f*(x)`; `None` when the supremum is
    /// only approached along the terminal cycle.
    pub attained_at: Option<usize>,
    #[serde(with = "crate::rational::serde_text")]
    pub cycle_average: Rational,
    pub shape: OrbitShape,
}

/// Exact `f*(x)`.
///
/// For `k = t + q p + r` with `q >= 1` the average `A_k` is a mediant of
/// `A_{t+r}` and the cycle average `c`, so `f* = max(f*_{t+p}, c)`.
pub fn sup_average(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
) -> Result<SupAverage, AverageError> {
    check_inputs(f, sys, x)?;
    let shape = sys.orbit_shape(x);
    Ok(sup_average_with_shape(f, sys, x, shape))
}

fn sup_average_with_shape(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
    shape: OrbitShape,
) -> SupAverage {
    let sums = orbit_sums(f, sys, x, shape.span());
    let cycle_sum = &sums[shape.span() - 1]
        - if shape.preperiod > 0 {
            sums[shape.preperiod - 1].clone()
        } else {
            Rational::zero()
        };
    let cycle_average = divide(&cycle_sum, shape.period);
    let (k, best) = running_max(&sums);
    if best >= cycle_average {
        SupAverage {
            value: best,
            attained_at: Some(k),
            cycle_average,
            shape,
        }
    } else {
        SupAverage {
            value: cycle_average.clone(),
            attained_at: None,
            cycle_average,
            shape,
        }
    }
}

/// `f*_N(x)` for finite `N`, or `f*(x)` for `N = ∞`.
pub fn maximal_value(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
    horizon: Horizon,
) -> Result<Rational, AverageError> {
    match horizon {
        Horizon::Finite(n) => maximal_function(f, sys, x, n),
        Horizon::Infinite => sup_average(f, sys, x).map(|s| s.value),
    }
}

/// Smallest `k` with `A_k f(x) > level`, or `None` if no such `k` exists.
///
/// Beyond the first `t + p` terms the answer is found in closed form by
/// solving `S_{t+r} + q P > level (t + r + q p)` for the cycle count `q`.
pub fn first_exceedance(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
    level: &Rational,
) -> Result<Option<usize>, AverageError> {
    check_inputs(f, sys, x)?;
    let shape = sys.orbit_shape(x);
    let (t, p) = (shape.preperiod, shape.period);
    let sums = orbit_sums(f, sys, x, t + p);
    if let Some(i) = sums
        .iter()
        .enumerate()
        .position(|(i, s)| divide(s, i + 1) > *level)
    {
        return Ok(Some(i + 1));
    }
    let head = |j: usize| {
        if j == 0 {
            Rational::zero()
        } else {
            sums[j - 1].clone()
        }
    };
    let cycle_sum = &sums[t + p - 1] - head(t);
    // gain per extra cycle
    let gain = &cycle_sum - level * int(p as i64);
    if !gain.is_positive() {
        return Ok(None);
    }
    let mut best: Option<usize> = None;
    for r in 0..p {
        let len = t + r;
        // need q * gain > level * len - S_len, smallest q >= 1
        let deficit = level * int(len as i64) - head(len);
        let q = if deficit.is_negative() {
            BigInt::from(1)
        } else {
            (deficit / &gain).floor().to_integer() + 1
        };
        let q = q.max(BigInt::from(1));
        let k = q * BigInt::from(p) + BigInt::from(len);
        if let Some(k) = k.to_usize() {
            best = Some(best.map_or(k, |b| b.min(k)));
        }
    }
    Ok(best)
}

/// Membership flags of `{f*_N > λ}` with the maximal values that decided them.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub members: Vec<bool>,
    pub maximal: Vec<Rational>,
    pub horizon: Horizon,
}

impl LevelSet {
    pub fn contains(&self, x: usize) -> bool {
        self.members[x]
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&x| self.members[x]).collect()
    }

    /// Mass of the level set.
    pub fn measure(&self, sys: &FiniteSystem) -> Rational {
        sys.weights()
            .iter()
            .zip(&self.members)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum()
    }

    /// `μ(self △ other)`.
    pub fn symmetric_difference_measure(&self, other: &LevelSet, sys: &FiniteSystem) -> Rational {
        sys.weights()
            .iter()
            .zip(self.members.iter().zip(&other.members))
            .filter(|(_, (a, b))| a != b)
            .map(|(w, _)| w)
            .sum()
    }

    pub fn is_subset_of(&self, other: &LevelSet) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(&a, &b)| !a || b)
    }
}

/// `E_N = {f*_N > λ}` (strict), or `{f* > λ}` for `N = ∞`.
pub fn level_set(
    f: &Observable,
    sys: &FiniteSystem,
    lambda: &Observable,
    horizon: Horizon,
) -> Result<LevelSet, AverageError> {
    sys.check_observable(f)?;
    sys.check_observable(lambda)?;
    if !sys.is_invariant(lambda) {
        return Err(AverageError::NonInvariantLambda);
    }
    if let Horizon::Finite(0) = horizon {
        return Err(AverageError::ZeroLength);
    }
    let shapes = match horizon {
        Horizon::Infinite => Some(sys.orbit_shapes()),
        Horizon::Finite(_) => None,
    };
    let mut members = Vec::with_capacity(sys.len());
    let mut maximal = Vec::with_capacity(sys.len());
    for x in 0..sys.len() {
        let value = match (horizon, &shapes) {
            (Horizon::Finite(n), _) => running_max(&orbit_sums(f, sys, x, n)).1,
            (Horizon::Infinite, Some(shapes)) => sup_average_with_shape(f, sys, x, shapes[x]).value,
            (Horizon::Infinite, None) => unreachable!(),
        };
        members.push(value > *lambda.value(x));
        maximal.push(value);
    }
    Ok(LevelSet {
        members,
        maximal,
        horizon,
    })
}

/// `{f* > λ}` as the increasing union of the `E_N`.
///
/// Returns the set together with the smallest `N` at which the union
/// stabilizes (`E_N = E_∞`), computed from [`first_exceedance`].
pub fn level_set_by_union(
    f: &Observable,
    sys: &FiniteSystem,
    lambda: &Observable,
) -> Result<(LevelSet, usize), AverageError> {
    sys.check_observable(f)?;
    sys.check_observable(lambda)?;
    if !sys.is_invariant(lambda) {
        return Err(AverageError::NonInvariantLambda);
    }
    let mut needed = 1;
    for x in 0..sys.len() {
        if let Some(k) = first_exceedance(f, sys, x, lambda.value(x))? {
            needed = needed.max(k);
        }
    }
    let set = level_set(f, sys, lambda, Horizon::Finite(needed))?;
    Ok((set, needed))
}

/// `Ā(x)` and `A̲(x)`; on a finite system both equal the terminal-cycle average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStatistics {
    #[serde(with = "crate::rational::serde_text")]
    pub limsup: Rational,
    #[serde(with = "crate::rational::serde_text")]
    pub liminf: Rational,
    pub shape: OrbitShape,
}

pub fn limit_statistics(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
) -> Result<LimitStatistics, AverageError> {
    check_inputs(f, sys, x)?;
    let shape = sys.orbit_shape(x);
    let entry = sys.orbit(x, shape.preperiod + 1)[shape.preperiod];
    let cycle: Rational = sys
        .orbit(entry, shape.period)
        .iter()
        .map(|&y| f.value(y))
        .sum();
    let average = divide(&cycle, shape.period);
    Ok(LimitStatistics {
        limsup: average.clone(),
        liminf: average,
        shape,
    })
}

/// `Ā` at every point, as an observable (invariant by construction).
pub fn limsup_observable(f: &Observable, sys: &FiniteSystem) -> Result<Observable, AverageError> {
    sys.check_observable(f)?;
    let values = (0..sys.len())
        .map(|x| limit_statistics(f, sys, x).map(|s| s.limsup))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Observable::new(values))
}

/// `φ_s = f · χ_{|f| <= s}`; the declared bound becomes `min(s, B)`.
pub fn truncate(f: &Observable, s: &Rational) -> Result<Observable, AverageError> {
    if s.is_negative() {
        return Err(AverageError::NegativeTruncation);
    }
    let values = f
        .values()
        .iter()
        .map(|v| if v.abs() <= *s { v.clone() } else { Rational::zero() })
        .collect();
    let bound = s.min(f.sup_bound()).clone();
    Ok(Observable::with_sup_bound(values, bound)?)
}

/// Exact `∫ g dμ`, optionally over a level set.
pub fn integrate(
    g: &Observable,
    sys: &FiniteSystem,
    restriction: Option<&LevelSet>,
) -> Result<Rational, AverageError> {
    sys.check_observable(g)?;
    Ok((0..sys.len())
        .filter(|&x| restriction.is_none_or(|set| set.contains(x)))
        .map(|x| g.value(x) * sys.weight(x))
        .sum())
}

// ---------------------------------------------------------------------------
// Interval systems

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `A_1 f(x), ..., A_K f(x)` along an interval orbit.
pub fn interval_averages(
    f: &IntervalObservable,
    sys: &IntervalSystem,
    x: &IntervalPoint,
    k_max: usize,
) -> Result<Vec<f64>, AverageError> {
    if k_max == 0 {
        return Err(AverageError::ZeroLength);
    }
    sys.check_state(x)?;
    let mut out = Vec::with_capacity(k_max);
    let mut acc = KahanSum::default();
    let mut y = x.clone();
    for k in 1..=k_max {
        acc.add(f.eval(&y));
        out.push(acc.value() / k as f64);
        if k < k_max {
            y = sys.step(&y)?;
        }
    }
    Ok(out)
}

/// Exact `A_1 f(x), ..., A_K f(x)` for exact states and exactly evaluable `f`.
pub fn interval_averages_exact(
    f: &IntervalObservable,
    sys: &IntervalSystem,
    x: &Rational,
    k_max: usize,
) -> Result<Vec<Rational>, AverageError> {
    if k_max == 0 {
        return Err(AverageError::ZeroLength);
    }
    let orbit = sys.orbit(&IntervalPoint::Exact(x.clone()), k_max)?;
    let mut acc = Rational::zero();
    let mut out = Vec::with_capacity(k_max);
    for (i, point) in orbit.iter().enumerate() {
        let IntervalPoint::Exact(r) = point else {
            unreachable!("exact orbits stay exact")
        };
        acc += f
            .eval_exact(r)
            .ok_or_else(|| AverageError::NotExact(r.to_string()))?;
        out.push(divide(&acc, i + 1));
    }
    Ok(out)
}

/// Finite-horizon proxies for `Ā(x)` and `A̲(x)` on an interval system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub limsup_proxy: f64,
    pub liminf_proxy: f64,
    pub horizon: usize,
    /// Inclusive window `[K/2, K]` over which the proxies are taken.
    pub window: (usize, usize),
    pub final_average: f64,
    /// `(k, A_k f(x))` at powers of two and at `K`.
    pub trend: Vec<(usize, f64)>,
}

pub fn limit_statistics_estimate(
    f: &IntervalObservable,
    sys: &IntervalSystem,
    x: &IntervalPoint,
    horizon: usize,
) -> Result<LimitEstimate, AverageError> {
    let averages = interval_averages(f, sys, x, horizon)?;
    let start = (horizon / 2).max(1);
    let window = &averages[start - 1..];
    let limsup_proxy = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let liminf_proxy = window.iter().copied().fold(f64::INFINITY, f64::min);
    let mut trend: Vec<(usize, f64)> = std::iter::successors(Some(1usize), |k| k.checked_mul(2))
        .take_while(|&k| k < horizon)
        .map(|k| (k, averages[k - 1]))
        .collect();
    trend.push((horizon, averages[horizon - 1]));
    Ok(LimitEstimate {
        limsup_proxy,
        liminf_proxy,
        horizon,
        window: (start, horizon),
        final_average: averages[horizon - 1],
        trend,
    })
}

/// `f*_N` at float states.
fn interval_maximal(
    f: &IntervalObservable,
    sys: &IntervalSystem,
    x: f64,
    n: usize,
) -> Result<f64, AverageError> {
    let mut acc = KahanSum::default();
    let mut best = f64::NEG_INFINITY;
    let mut y = x;
    for k in 1..=n {
        acc.add(f.eval_f64(y));
        best = best.max(acc.value() / k as f64);
        if k < n {
            y = sys.step_f64(y)?;
        }
    }
    Ok(best)
}

/// `E_N = {f*_N > λ}` evaluated on the points of a sample plan, `λ` constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLevelSet {
    pub plan: SamplePlan,
    pub lambda: f64,
    pub horizon: usize,
    pub points: Vec<f64>,
    pub maximal: Vec<f64>,
    pub members: Vec<bool>,
}

pub fn sampled_level_set(
    f: &IntervalObservable,
    sys: &IntervalSystem,
    lambda: f64,
    horizon: Horizon,
    plan: &SamplePlan,
) -> Result<SampledLevelSet, AverageError> {
    let n = horizon.finite().ok_or(AverageError::InfiniteHorizon)?;
    if n == 0 {
        return Err(AverageError::ZeroLength);
    }
    sys.step_f64(0.0)?;
    let points = plan.points();
    let maximal = par_map(&points, |&x| interval_maximal(f, sys, x, n))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let members = maximal.iter().map(|&m| m > lambda).collect();
    Ok(SampledLevelSet {
        plan: *plan,
        lambda,
        horizon: n,
        points,
        maximal,
        members,
    })
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], op: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(op).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, U: Send>(items: &[T], op: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(op).collect()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        let mut acc = KahanSum::default();
        values.iter().for_each(|&v| acc.add(v));
        let mean = acc.value() / count as f64;
        let mut sq = KahanSum::default();
        values.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
        let variance = if count > 1 {
            sq.value() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (variance / count as f64).sqrt(),
            samples: count,
        }
    }
}

/// Monte Carlo `∫ g`, or `∫_E g` when restricted to a sampled level set.
///
/// Non-members contribute zero, so the estimator is the plain mean of
/// `g · χ_E` over every sample of the plan.
pub fn integrate_sampled(
    g: impl Fn(f64) -> f64 + Sync + Send,
    plan: Option<&SamplePlan>,
    restriction: Option<&SampledLevelSet>,
) -> Result<Estimate, AverageError> {
    let plan = plan.ok_or(AverageError::MissingPlan)?;
    let values: Vec<f64> = match restriction {
        Some(set) => {
            if set.plan != *plan {
                return Err(AverageError::PlanMismatch);
            }
            set.points
                .iter()
                .zip(&set.members)
                .map(|(&x, &m)| if m { g(x) } else { 0.0 })
                .collect()
        }
        None => par_map(&plan.points(), |&x| g(x)),
    };
    Ok(Estimate::from_values(&values))
}

/// One row of a Cesàro trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub k: usize,
    pub value: f64,
    pub exact: Option<Rational>,
}

/// `A_k f(x)` at `k = stride, 2 stride, ...` up to `K`.
pub fn convergence_series(
    f: &Observable,
    sys: &FiniteSystem,
    x: usize,
    k_max: usize,
    stride: usize,
) -> Result<Vec<SeriesPoint>, AverageError> {
    if stride == 0 {
        return Err(AverageError::ZeroLength);
    }
    let averages = birkhoff_averages(f, sys, x, k_max)?;
    Ok((stride..=k_max)
        .step_by(stride)
        .map(|k| SeriesPoint {
            k,
            value: to_f64(&averages[k - 1]),
            exact: Some(averages[k - 1].clone()),
        })
        .collect())
}

pub fn interval_convergence_series(
    f: &IntervalObservable,
    sys: &IntervalSystem,
    x: &IntervalPoint,
    k_max: usize,
    stride: usize,
) -> Result<Vec<SeriesPoint>, AverageError> {
    if stride == 0 {
        return Err(AverageError::ZeroLength);
    }
    let averages = interval_averages(f, sys, x, k_max)?;
    Ok((stride..=k_max)
        .step_by(stride)
        .map(|k| SeriesPoint {
            k,
            value: averages[k - 1],
            exact: None,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::doubling_grid;
    use crate::rational::{parse_rational, ratio};

    fn swap() -> FiniteSystem {
        FiniteSystem::cycle(2).unwrap()
    }

    fn f10() -> Observable {
        Observable::from_ints(&[1, 0])
    }

    fn constant(value: Rational, n: usize) -> Observable {
        Observable::constant(value, n)
    }

    #[test]
    fn first_average_is_f() {
        let sys = FiniteSystem::random_preserving(9, 3).unwrap();
        let f = Observable::new((0..9).map(|i| ratio(i, 3)).collect());
        for x in 0..9 {
            assert_eq!(birkhoff_average(&f, &sys, x, 1).unwrap(), *f.value(x));
        }
    }

    #[test]
    fn swap_averages() {
        assert_eq!(birkhoff_average(&f10(), &swap(), 0, 2).unwrap(), ratio(1, 2));
        assert_eq!(birkhoff_average(&f10(), &swap(), 0, 3).unwrap(), ratio(2, 3));
        assert_eq!(
            birkhoff_average(&f10(), &swap(), 0, 0),
            Err(AverageError::ZeroLength)
        );
    }

    #[test]
    fn identity_averages_are_constant() {
        let id = FiniteSystem::identity(2).unwrap();
        let f = Observable::new(vec![ratio(3, 7), int(-2)]);
        for k in 1..10 {
            assert_eq!(birkhoff_average(&f, &id, 1, k).unwrap(), int(-2));
        }
    }

    #[test]
    fn maximal_function_examples() {
        assert_eq!(maximal_function(&f10(), &swap(), 0, 2).unwrap(), int(1));
        assert_eq!(maximal_function(&f10(), &swap(), 1, 2).unwrap(), ratio(1, 2));
        assert_eq!(maximal_function(&f10(), &swap(), 1, 1).unwrap(), int(0));
        let c = constant(ratio(5, 3), 3);
        let sys = FiniteSystem::cycle(3).unwrap();
        assert_eq!(maximal_function(&c, &sys, 2, 7).unwrap(), ratio(5, 3));
    }

    #[test]
    fn sup_average_on_swap() {
        let at0 = sup_average(&f10(), &swap(), 0).unwrap();
        assert_eq!((at0.value, at0.attained_at), (int(1), Some(1)));
        let at1 = sup_average(&f10(), &swap(), 1).unwrap();
        assert_eq!((at1.value, at1.attained_at), (ratio(1, 2), Some(2)));
    }

    #[test]
    fn sup_not_attained_on_rising_tail() {
        // 0 -> 1 -> 1, all mass on the fixed point; f = (0, 1)
        let sys = FiniteSystem::new(vec![int(0), int(1)], vec![1, 1]).unwrap();
        let f = Observable::from_ints(&[0, 1]);
        let s = sup_average(&f, &sys, 0).unwrap();
        assert_eq!(s.value, int(1));
        assert_eq!(s.attained_at, None);
        assert_eq!(s.shape, OrbitShape { preperiod: 1, period: 1 });
    }

    #[test]
    fn level_set_examples() {
        let f = f10();
        let huge = constant(f.sup_bound() + int(1), 2);
        assert!(level_set(&f, &swap(), &huge, Horizon::Finite(3))
            .unwrap()
            .indices()
            .is_empty());
        let l = constant(ratio(2, 5), 2);
        assert_eq!(
            level_set(&f, &swap(), &l, Horizon::Finite(2)).unwrap().indices(),
            vec![0, 1]
        );
        let l = constant(ratio(3, 5), 2);
        assert_eq!(
            level_set(&f, &swap(), &l, Horizon::Infinite).unwrap().indices(),
            vec![0]
        );
    }

    #[test]
    fn level_set_rejects_non_invariant_lambda() {
        let err = level_set(&f10(), &swap(), &f10(), Horizon::Finite(1)).unwrap_err();
        assert_eq!(err, AverageError::NonInvariantLambda);
    }

    #[test]
    fn level_set_boundary_is_excluded() {
        let l = constant(ratio(1, 2), 2);
        let set = level_set(&f10(), &swap(), &l, Horizon::Finite(2)).unwrap();
        assert_eq!(set.indices(), vec![0]);
    }

    #[test]
    fn union_matches_closed_form() {
        for seed in 0..60 {
            let sys = FiniteSystem::random_preserving(12, seed).unwrap();
            let f = Observable::random(&mut rand_chacha_rng(seed), 12, 8);
            let lambda = sys.random_invariant(seed ^ 0x55);
            let closed = level_set(&f, &sys, &lambda, Horizon::Infinite).unwrap();
            let (union, needed) = level_set_by_union(&f, &sys, &lambda).unwrap();
            assert_eq!(closed.members, union.members, "seed {seed}, N = {needed}");
            if needed > 1 {
                let before = level_set(&f, &sys, &lambda, Horizon::Finite(needed - 1)).unwrap();
                assert!(before.is_subset_of(&closed));
            }
        }
    }

    #[test]
    fn first_exceedance_slow_climb() {
        // 0 -> 1 -> 1 with f = (-10, 1): A_k = (k - 11) / k > 1/2 needs k > 22
        let sys = FiniteSystem::new(vec![int(0), int(1)], vec![1, 1]).unwrap();
        let f = Observable::from_ints(&[-10, 1]);
        assert_eq!(first_exceedance(&f, &sys, 0, &ratio(1, 2)).unwrap(), Some(23));
        assert_eq!(first_exceedance(&f, &sys, 0, &int(1)).unwrap(), None);
        let brute = (1..=40)
            .find(|&k| birkhoff_average(&f, &sys, 0, k).unwrap() > ratio(1, 2))
            .unwrap();
        assert_eq!(brute, 23);
    }

    #[test]
    fn limit_statistics_examples() {
        let s = limit_statistics(&f10(), &swap(), 1).unwrap();
        assert_eq!((s.limsup.clone(), s.liminf), (ratio(1, 2), ratio(1, 2)));
        let id = FiniteSystem::identity(2).unwrap();
        let f = Observable::new(vec![ratio(3, 7), int(-2)]);
        assert_eq!(limit_statistics(&f, &id, 0).unwrap().limsup, ratio(3, 7));
        let three = FiniteSystem::cycle(3).unwrap();
        let f = Observable::from_ints(&[3, 0, 0]);
        for x in 0..3 {
            assert_eq!(limit_statistics(&f, &three, x).unwrap().limsup, int(1));
        }
    }

    #[test]
    fn interval_identity_proxy_is_f() {
        let f = IntervalObservable::Cosine;
        let est = limit_statistics_estimate(
            &f,
            &IntervalSystem::Identity,
            &IntervalPoint::Float(0.1),
            64,
        )
        .unwrap();
        let v = f.eval_f64(0.1);
        assert!((est.limsup_proxy - v).abs() < 1e-15);
        assert!((est.liminf_proxy - v).abs() < 1e-15);
        assert_eq!(est.window, (32, 64));
    }

    #[test]
    fn golden_rotation_proxy_is_small() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let sys = IntervalSystem::rotation(alpha).unwrap();
        let est = limit_statistics_estimate(
            &IntervalObservable::Cosine,
            &sys,
            &IntervalPoint::Float(0.0),
            1_000_000,
        )
        .unwrap();
        assert!(est.final_average.abs() <= 2e-6, "{}", est.final_average);
    }

    #[test]
    fn doubling_indicator_average_is_half() {
        let f = IntervalObservable::Indicator {
            lo: int(0),
            hi: ratio(1, 2),
        };
        let exact = interval_averages_exact(&f, &IntervalSystem::Doubling, &ratio(1, 11), 10).unwrap();
        assert_eq!(exact[9], ratio(1, 2));
        let est = limit_statistics_estimate(
            &f,
            &IntervalSystem::Doubling,
            &IntervalPoint::Exact(ratio(1, 11)),
            10,
        )
        .unwrap();
        assert_eq!(est.final_average, 0.5);
    }

    #[test]
    fn truncation_examples() {
        let f = Observable::from_ints(&[3, -5]);
        assert_eq!(truncate(&f, &int(4)).unwrap().values(), &[int(3), int(0)]);
        assert_eq!(truncate(&f, &int(4)).unwrap().sup_bound(), &int(4));
        assert_eq!(truncate(&f, &int(9)).unwrap(), f);
        let g = Observable::from_ints(&[0, 2, 0]);
        assert_eq!(truncate(&g, &int(0)).unwrap().values(), &[int(0), int(0), int(0)]);
        assert_eq!(truncate(&f, &int(-1)), Err(AverageError::NegativeTruncation));
    }

    #[test]
    fn integrals() {
        let sys = swap();
        assert_eq!(integrate(&constant(int(1), 2), &sys, None).unwrap(), int(1));
        assert_eq!(integrate(&f10(), &sys, None).unwrap(), ratio(1, 2));
        let lambda = constant(ratio(3, 5), 2);
        let set = level_set(&f10(), &sys, &lambda, Horizon::Infinite).unwrap();
        let g = f10().sub(&lambda);
        assert_eq!(integrate(&g, &sys, Some(&set)).unwrap(), ratio(1, 5));
    }

    #[test]
    fn sampled_integral_needs_plan() {
        assert_eq!(
            integrate_sampled(|x| x, None, None),
            Err(AverageError::MissingPlan)
        );
        let plan = SamplePlan::grid(1000).unwrap();
        let est = integrate_sampled(|x| x, Some(&plan), None).unwrap();
        assert!((est.mean - 0.5).abs() < 1e-12);
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn sampled_restriction_must_share_plan() {
        let sys = IntervalSystem::rotation(0.3).unwrap();
        let plan = SamplePlan::random(50, 1).unwrap();
        let set =
            sampled_level_set(&IntervalObservable::Cosine, &sys, 0.0, Horizon::Finite(3), &plan)
                .unwrap();
        let other = SamplePlan::random(50, 2).unwrap();
        assert_eq!(
            integrate_sampled(|x| x, Some(&other), Some(&set)),
            Err(AverageError::PlanMismatch)
        );
        assert_eq!(
            sampled_level_set(&IntervalObservable::Cosine, &sys, 0.0, Horizon::Infinite, &plan),
            Err(AverageError::InfiniteHorizon)
        );
    }

    #[test]
    fn convergence_series_on_swap() {
        let rows = convergence_series(&f10(), &swap(), 0, 6, 1).unwrap();
        let exact: Vec<Rational> = rows.iter().map(|r| r.exact.clone().unwrap()).collect();
        let expected: Vec<Rational> = ["1", "1/2", "2/3", "1/2", "3/5", "1/2"]
            .iter()
            .map(|t| parse_rational(t).unwrap())
            .collect();
        assert_eq!(exact, expected);
    }

    #[test]
    fn doubling_grid_finite_image_average() {
        let points = doubling_grid(11);
        let sys = IntervalSystem::Doubling.finite_image(&points).unwrap();
        let f = IntervalObservable::Indicator {
            lo: int(0),
            hi: ratio(1, 2),
        }
        .restrict(&points)
        .unwrap();
        assert_eq!(birkhoff_average(&f, &sys, 0, 10).unwrap(), ratio(1, 2));
    }

    fn rand_chacha_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }
}
