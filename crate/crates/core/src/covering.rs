//! Greedy decomposition of an orbit sum into zero runs and positive blocks.
//!
//! For `t_k = (f - λ) χ_{E_N}(T^k x)` the scan walks `k = 0, 1, ...`:
//! a point outside `E_N` contributes a zero term; a point inside `E_N` opens
//! a block whose length is the smallest `n <= N` with `A_n f(T^k x) > λ(x)`.
//! Such a block has positive raw sum, and the χ-weighted sum dominates it.
//! The scan stops at the first block that would run past `m`; what is left is
//! a tail of fewer than `N` terms whose sum is at least `-N (B + λ⁺(x))`.

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::averages::{self, AverageError, Horizon};
use crate::dynamics::{DynamicsError, FiniteSystem, IntervalObservable, IntervalSystem, Observable};
use crate::rational::{int, positive_part, Rational};

/// Sign decisions closer than this to zero abort float decompositions.
pub const GUARD_BAND: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoveringError {
    #[error("decompositions need N >= 1 and m >= 1")]
    ZeroLength,
    #[error("lambda is not invariant under the map")]
    NonInvariantLambda,
    #[error("lambda changes along the orbit of {x} at step {step}")]
    LambdaNotConstantOnOrbit { x: usize, step: usize },
    #[error("point at step {step} is in E_N but no n <= N has A_n > lambda")]
    MissingWitness { step: usize },
    #[error("sign of {quantity} at step {step} is within the 2^-40 guard band ({value:e})")]
    Precision {
        quantity: &'static str,
        step: usize,
        value: f64,
    },
    #[error(transparent)]
    Average(#[from] AverageError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment<V> {
    ZeroRun {
        start: usize,
        length: usize,
    },
    PositiveBlock {
        start: usize,
        length: usize,
        block_sum: V,
    },
}

impl<V> Segment<V> {
    pub fn start(&self) -> usize {
        match self {
            Segment::ZeroRun { start, .. } | Segment::PositiveBlock { start, .. } => *start,
        }
    }

    pub fn length(&self) -> usize {
        match self {
            Segment::ZeroRun { length, .. } | Segment::PositiveBlock { length, .. } => *length,
        }
    }

    pub fn end(&self) -> usize {
        self.start() + self.length()
    }
}

/// Certificate for `Σ_{k<m} t_k >= Σ_{k>=j} t_k`.
///
/// Fields are public so that certificates can be inspected, exported and
/// tampered with in tests; [`verify_decomposition`] recomputes everything.
#[derive(Debug, Clone, PartialEq)]
pub struct StringDecomposition<V> {
    pub segments: Vec<Segment<V>>,
    /// `j`: the tail is `[j, m)`.
    pub tail_start: usize,
    pub m: usize,
    pub n: usize,
    pub x: usize,
    pub lambda_x: V,
    /// `t_k` for `k < m`.
    pub terms: Vec<V>,
    pub members: Vec<bool>,
}

impl<V: Clone + Zero> StringDecomposition<V> {
    pub fn tail_sum(&self) -> V {
        self.terms[self.tail_start..]
            .iter()
            .fold(V::zero(), |acc, t| acc + t.clone())
    }

    pub fn total_sum(&self) -> V {
        self.terms.iter().fold(V::zero(), |acc, t| acc + t.clone())
    }

    pub fn block_count(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| matches!(s, Segment::PositiveBlock { .. }))
            .count()
    }
}

fn push_zero<V>(segments: &mut Vec<Segment<V>>, k: usize) {
    if let Some(Segment::ZeroRun { start, length }) = segments.last_mut() {
        if *start + *length == k {
            *length += 1;
            return;
        }
    }
    segments.push(Segment::ZeroRun {
        start: k,
        length: 1,
    });
}

/// Exact greedy decomposition on a finite system.
pub fn decompose(
    f: &Observable,
    sys: &FiniteSystem,
    lambda: &Observable,
    x: usize,
    n: usize,
    m: usize,
) -> Result<StringDecomposition<Rational>, CoveringError> {
    if n == 0 || m == 0 {
        return Err(CoveringError::ZeroLength);
    }
    sys.check_point(x)?;
    let level = averages::level_set(f, sys, lambda, Horizon::Finite(n)).map_err(|e| match e {
        AverageError::NonInvariantLambda => CoveringError::NonInvariantLambda,
        other => other.into(),
    })?;
    // the orbit is extended by N so every block start can look ahead
    let orbit = sys.orbit(x, m + n);
    let lambda_x = lambda.value(x).clone();
    if let Some(step) = orbit.iter().position(|&y| *lambda.value(y) != lambda_x) {
        return Err(CoveringError::LambdaNotConstantOnOrbit { x, step });
    }

    let members: Vec<bool> = orbit[..m].iter().map(|&y| level.contains(y)).collect();
    let terms: Vec<Rational> = orbit[..m]
        .iter()
        .zip(&members)
        .map(|(&y, &inside)| {
            if inside {
                f.value(y) - &lambda_x
            } else {
                Rational::zero()
            }
        })
        .collect();

    let mut segments = Vec::new();
    let mut k = 0;
    while k < m {
        if !members[k] {
            push_zero(&mut segments, k);
            k += 1;
            continue;
        }
        let witness = smallest_witness(f, &orbit[k..k + n], &lambda_x)
            .ok_or(CoveringError::MissingWitness { step: k })?;
        if k + witness > m {
            break;
        }
        let block_sum: Rational = terms[k..k + witness].iter().sum();
        segments.push(Segment::PositiveBlock {
            start: k,
            length: witness,
            block_sum,
        });
        k += witness;
    }
    Ok(StringDecomposition {
        segments,
        tail_start: k,
        m,
        n,
        x,
        lambda_x,
        terms,
        members,
    })
}

/// Smallest `n` with `Σ_{i<n} f(orbit[i]) > n λ`.
fn smallest_witness(f: &Observable, orbit: &[usize], lambda: &Rational) -> Option<usize> {
    let mut excess = Rational::zero();
    for (i, &y) in orbit.iter().enumerate() {
        excess += f.value(y) - lambda;
        if excess.is_positive() {
            return Some(i + 1);
        }
    }
    None
}

/// Why a certificate was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateFailure {
    #[error("certificate parameters do not match the inputs")]
    ParameterMismatch,
    #[error("tail [{tail_start}, {m}) is outside the allowed range for N = {n}")]
    TailOutOfRange { tail_start: usize, m: usize, n: usize },
    #[error("block {index} has non-positive sum {sum}")]
    NonPositiveBlock { index: usize, sum: String },
    #[error("block {index} has length {length} > N")]
    BlockTooLong { index: usize, length: usize },
    #[error("segment {index} does not start where the previous one ended")]
    Gap { index: usize },
    #[error("segments end at {end}, tail starts at {tail_start}")]
    TailMisaligned { end: usize, tail_start: usize },
    #[error("term {k} differs from the recomputed value")]
    TermMismatch { k: usize },
    #[error("zero run {index} covers a point of E_N at step {k}")]
    MemberInZeroRun { index: usize, k: usize },
    #[error("block {index} does not start at a point of E_N")]
    BlockOutsideLevelSet { index: usize },
    #[error("block {index} records sum {recorded} but its terms sum to {actual}")]
    BlockSumMismatch {
        index: usize,
        recorded: String,
        actual: String,
    },
    #[error("raw sum of block {index} is {raw}, not positive")]
    RawSumNotPositive { index: usize, raw: String },
    #[error("block {index}: χ-weighted sum does not dominate the raw sum")]
    NotDominated { index: usize },
}

/// Independent re-check of every certificate invariant.
///
/// Terms and membership are recomputed from the definitions with naive
/// averages, not taken from the certificate.
pub fn verify_decomposition(
    dec: &StringDecomposition<Rational>,
    f: &Observable,
    sys: &FiniteSystem,
    lambda: &Observable,
    x: usize,
) -> Result<(), CertificateFailure> {
    let (m, n) = (dec.m, dec.n);
    if dec.x != x || n == 0 || m == 0 || dec.terms.len() != m || x >= sys.len() {
        return Err(CertificateFailure::ParameterMismatch);
    }
    if dec.tail_start > m || m - dec.tail_start > n - 1 {
        return Err(CertificateFailure::TailOutOfRange {
            tail_start: dec.tail_start,
            m,
            n,
        });
    }
    for (index, seg) in dec.segments.iter().enumerate() {
        if let Segment::PositiveBlock {
            length, block_sum, ..
        } = seg
        {
            if !block_sum.is_positive() {
                return Err(CertificateFailure::NonPositiveBlock {
                    index,
                    sum: block_sum.to_string(),
                });
            }
            if *length > n {
                return Err(CertificateFailure::BlockTooLong {
                    index,
                    length: *length,
                });
            }
        }
    }
    let mut cursor = 0;
    for (index, seg) in dec.segments.iter().enumerate() {
        if seg.start() != cursor || seg.length() == 0 {
            return Err(CertificateFailure::Gap { index });
        }
        cursor = seg.end();
    }
    if cursor != dec.tail_start {
        return Err(CertificateFailure::TailMisaligned {
            end: cursor,
            tail_start: dec.tail_start,
        });
    }

    // recompute t_k from the definitions
    let lambda_x = lambda.value(x);
    let mut point = x;
    let mut orbit = Vec::with_capacity(m);
    let mut member = Vec::with_capacity(m);
    for k in 0..m {
        orbit.push(point);
        let inside = naive_maximal(f, sys, point, n) > *lambda.value(point);
        member.push(inside);
        let expected = if inside {
            f.value(point) - lambda_x
        } else {
            Rational::zero()
        };
        if dec.terms[k] != expected {
            return Err(CertificateFailure::TermMismatch { k });
        }
        point = sys.apply(point);
    }

    for (index, seg) in dec.segments.iter().enumerate() {
        match seg {
            Segment::ZeroRun { start, length } => {
                if let Some(k) = (*start..start + length).find(|&k| member[k]) {
                    return Err(CertificateFailure::MemberInZeroRun { index, k });
                }
            }
            Segment::PositiveBlock {
                start,
                length,
                block_sum,
            } => {
                if !member[*start] {
                    return Err(CertificateFailure::BlockOutsideLevelSet { index });
                }
                let actual: Rational = dec.terms[*start..start + length].iter().sum();
                if actual != *block_sum {
                    return Err(CertificateFailure::BlockSumMismatch {
                        index,
                        recorded: block_sum.to_string(),
                        actual: actual.to_string(),
                    });
                }
                let raw: Rational = orbit[*start..start + length]
                    .iter()
                    .map(|&y| f.value(y) - lambda_x)
                    .sum();
                if !raw.is_positive() {
                    return Err(CertificateFailure::RawSumNotPositive {
                        index,
                        raw: raw.to_string(),
                    });
                }
                if actual < raw {
                    return Err(CertificateFailure::NotDominated { index });
                }
            }
        }
    }
    Ok(())
}

/// `max_{k<=N} (1/k) Σ_{j<k} f(T^j x)` with each average summed from scratch.
fn naive_maximal(f: &Observable, sys: &FiniteSystem, x: usize, n: usize) -> Rational {
    (1..=n)
        .map(|k| {
            let sum: Rational = sys.orbit(x, k).iter().map(|&y| f.value(y)).sum();
            sum / int(k as i64)
        })
        .max()
        .expect("n >= 1")
}

/// Values of the chained inequality `Σ t_k >= tail >= -N (B + λ⁺(x))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBound {
    #[serde(with = "crate::rational::serde_text")]
    pub total_sum: Rational,
    #[serde(with = "crate::rational::serde_text")]
    pub tail_sum: Rational,
    #[serde(with = "crate::rational::serde_text")]
    pub bound: Rational,
    pub chain_holds: bool,
    pub bound_holds: bool,
}

impl TailBound {
    pub fn passed(&self) -> bool {
        self.chain_holds && self.bound_holds
    }
}

pub fn tail_bound_check(
    dec: &StringDecomposition<Rational>,
    f: &Observable,
    lambda: &Observable,
    x: usize,
    n: usize,
) -> TailBound {
    let tail_sum = dec.tail_sum();
    let total_sum = dec.total_sum();
    let bound = -(int(n as i64) * (f.sup_bound() + positive_part(lambda.value(x))));
    TailBound {
        chain_holds: total_sum >= tail_sum,
        bound_holds: tail_sum >= bound,
        total_sum,
        tail_sum,
        bound,
    }
}

/// One row of the integrated inequality `∫_{E_N} (f - λ) >= -(N/m)(B + ∫λ⁺)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub m: usize,
    #[serde(with = "crate::rational::serde_text")]
    pub lower_bound: Rational,
    #[serde(with = "crate::rational::serde_text")]
    pub integral: Rational,
}

pub fn integrated_inequality_trace(
    f: &Observable,
    sys: &FiniteSystem,
    lambda: &Observable,
    n: usize,
    m_schedule: &[usize],
) -> Result<Vec<TraceRow>, CoveringError> {
    if n == 0 || m_schedule.contains(&0) {
        return Err(CoveringError::ZeroLength);
    }
    let level = averages::level_set(f, sys, lambda, Horizon::Finite(n))?;
    let integral = averages::integrate(&f.sub(lambda), sys, Some(&level))?;
    let lambda_plus = averages::integrate(&lambda.positive_part(), sys, None)?;
    let scale = f.sup_bound() + lambda_plus;
    Ok(m_schedule
        .iter()
        .map(|&m| TraceRow {
            m,
            lower_bound: -(int(n as i64) * &scale) / int(m as i64),
            integral: integral.clone(),
        })
        .collect())
}

/// Float decomposition on an interval system with a constant `λ`.
///
/// Every sign decision is certified to lie outside [`GUARD_BAND`]; any
/// decision inside it aborts with [`CoveringError::Precision`].
pub fn decompose_interval(
    f: &IntervalObservable,
    sys: &IntervalSystem,
    lambda: f64,
    x: f64,
    n: usize,
    m: usize,
) -> Result<StringDecomposition<f64>, CoveringError> {
    if n == 0 || m == 0 {
        return Err(CoveringError::ZeroLength);
    }
    let mut orbit = Vec::with_capacity(m + n);
    let mut y = x;
    for i in 0..m + n {
        orbit.push(y);
        if i + 1 < m + n {
            y = sys.step_f64(y)?;
        }
    }
    let values: Vec<f64> = orbit.iter().map(|&p| f.eval_f64(p)).collect();

    // witness[k] = smallest n with A_n f(T^k x) > λ, certified
    let mut witness = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = averages::KahanSum::default();
        let mut found = None;
        for i in 0..n {
            acc.add(values[k + i]);
            let margin = acc.value() / (i + 1) as f64 - lambda;
            if margin.abs() < GUARD_BAND {
                return Err(CoveringError::Precision {
                    quantity: "A_n f - lambda",
                    step: k,
                    value: margin,
                });
            }
            if margin > 0.0 {
                found = Some(i + 1);
                break;
            }
        }
        witness.push(found);
    }
    let members: Vec<bool> = witness.iter().map(Option::is_some).collect();
    let terms: Vec<f64> = (0..m)
        .map(|k| if members[k] { values[k] - lambda } else { 0.0 })
        .collect();

    let mut segments = Vec::new();
    let mut k = 0;
    while k < m {
        match witness[k] {
            None => {
                push_zero(&mut segments, k);
                k += 1;
            }
            Some(len) if k + len <= m => {
                let mut acc = averages::KahanSum::default();
                terms[k..k + len].iter().for_each(|&t| acc.add(t));
                let block_sum = acc.value();
                if block_sum < GUARD_BAND {
                    return Err(CoveringError::Precision {
                        quantity: "block sum",
                        step: k,
                        value: block_sum,
                    });
                }
                segments.push(Segment::PositiveBlock {
                    start: k,
                    length: len,
                    block_sum,
                });
                k += len;
            }
            Some(_) => break,
        }
    }
    Ok(StringDecomposition {
        segments,
        tail_start: k,
        m,
        n,
        x: 0,
        lambda_x: lambda,
        terms,
        members,
    })
}

/// Structural invariants shared by exact and float certificates.
pub fn check_structure<V: PartialOrd + Zero>(dec: &StringDecomposition<V>) -> bool {
    let mut cursor = 0;
    for seg in &dec.segments {
        if seg.start() != cursor || seg.length() == 0 {
            return false;
        }
        if let Segment::PositiveBlock {
            length, block_sum, ..
        } = seg
        {
            if *length > dec.n || block_sum.partial_cmp(&V::zero()) != Some(std::cmp::Ordering::Greater) {
                return false;
            }
        }
        if let Segment::ZeroRun { start, length } = seg {
            if dec.members[*start..start + length].iter().any(|&b| b) {
                return false;
            }
        }
        cursor = seg.end();
    }
    cursor == dec.tail_start && dec.tail_start <= dec.m && dec.m - dec.tail_start < dec.n
}
