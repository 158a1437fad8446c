//! Measure-preserving systems.
//!
//! Two concrete models are provided. [`FiniteSystem`] is a finite weighted
//! point set with a self-map; every quantity on it is an exact rational.
//! [`IntervalSystem`] is one of the classical Lebesgue-preserving maps of
//! `[0, 1)`, iterated in `f64` where the map is an isometry and in exact
//! rationals where it is expanding (doubling).

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{format_rational, int, ratio, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("a system needs at least one point")]
    Empty,
    #[error("{weights} weights given for a map on {map} points")]
    LengthMismatch { weights: usize, map: usize },
    #[error("map sends point {point} to {image}, outside 0..{n}")]
    ImageOutOfRange { point: usize, image: usize, n: usize },
    #[error("point {point} is outside 0..{n}")]
    PointOutOfRange { point: usize, n: usize },
    #[error("observable has {got} values but the system has {expected} points")]
    ObservableLength { got: usize, expected: usize },
    #[error("declared sup bound {bound} is below |f| = {value} at point {point}")]
    SupBoundViolated {
        bound: String,
        value: String,
        point: usize,
    },
    #[error("rotation angle must lie in (0, 1), got {0}")]
    InvalidAngle(f64),
    #[error("invalid interval exchange: {0}")]
    InvalidExchange(String),
    #[error("{0} cannot be iterated in floating point")]
    NoFloatState(&'static str),
    #[error("{0} has no exact rational state")]
    NoExactState(&'static str),
    #[error("doubling needs a state p/q in [0, 1) with q odd, got {0}")]
    DoublingState(String),
    #[error("point {0} lies outside [0, 1)")]
    OutsideUnitInterval(String),
    #[error("point set is not closed under the map: {from} maps to {to}")]
    NotClosed { from: String, to: String },
    #[error("sample plans need at least one point")]
    EmptyPlan,
}

// ---------------------------------------------------------------------------
// Finite systems

/// Finite probability space with a self-map.
///
/// Construction only checks the structure (lengths and map range); the
/// measure-preservation property is checked by [`FiniteSystem::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSystem {
    weights: Vec<Rational>,
    map: Vec<usize>,
}

/// First violated invariant found by [`FiniteSystem::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("point {point} has negative weight {weight}")]
    NegativeWeight { point: usize, weight: String },
    #[error("weights sum to {total}, not 1")]
    WeightSum { total: String },
    #[error("point {point} has weight {expected} but its preimages carry {found}")]
    PreimageMass {
        point: usize,
        expected: String,
        found: String,
    },
}

impl Violation {
    /// Index of the offending point, when the violation is local.
    pub fn point(&self) -> Option<usize> {
        match self {
            Violation::NegativeWeight { point, .. } | Violation::PreimageMass { point, .. } => {
                Some(*point)
            }
            Violation::WeightSum { .. } => None,
        }
    }
}

/// Pre-period `t` and period `p` of an eventually periodic orbit:
/// `T^{t+p} x = T^t x` with both minimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrbitShape {
    pub preperiod: usize,
    pub period: usize,
}

impl OrbitShape {
    pub fn span(&self) -> usize {
        self.preperiod + self.period
    }
}

impl FiniteSystem {
    pub fn new(weights: Vec<Rational>, map: Vec<usize>) -> Result<Self, DynamicsError> {
        if map.is_empty() {
            return Err(DynamicsError::Empty);
        }
        if weights.len() != map.len() {
            return Err(DynamicsError::LengthMismatch {
                weights: weights.len(),
                map: map.len(),
            });
        }
        let n = map.len();
        if let Some((point, &image)) = map.iter().enumerate().find(|(_, &y)| y >= n) {
            return Err(DynamicsError::ImageOutOfRange { point, image, n });
        }
        Ok(Self { weights, map })
    }

    /// `i -> i + 1 mod n` with uniform weights.
    pub fn cycle(n: usize) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::Empty);
        }
        let w = ratio(1, n as i64);
        Self::new(vec![w; n], (0..n).map(|i| (i + 1) % n).collect())
    }

    /// Identity on `n` points with uniform weights.
    pub fn identity(n: usize) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::Empty);
        }
        let w = ratio(1, n as i64);
        Self::new(vec![w; n], (0..n).collect())
    }

    /// Deterministic random measure-preserving system on `n` points.
    ///
    /// Periodic points are split into random cycles with a random integer
    /// mass per cycle over a common denominator (at most `16 n`). When
    /// `n >= 2` about half of the systems also get zero-weight transient
    /// points feeding into the cycles, which makes the map non-invertible.
    pub fn random_preserving(n: usize, seed: u64) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::Empty);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let transient = if n >= 2 && rng.gen_bool(0.5) {
            rng.gen_range(1..=n / 2)
        } else {
            0
        };
        let periodic = n - transient;

        let mut labels: Vec<usize> = (0..n).collect();
        labels.shuffle(&mut rng);
        let (cyclic, feeders) = labels.split_at(periodic);

        let mut map = vec![0usize; n];
        let mut numerators = vec![0i64; n];
        let mut rest = cyclic;
        let mut cycles: Vec<&[usize]> = Vec::new();
        while !rest.is_empty() {
            let len = rng.gen_range(1..=rest.len());
            let (head, tail) = rest.split_at(len);
            cycles.push(head);
            rest = tail;
        }
        loop {
            for cycle in &cycles {
                let mass = if rng.gen_bool(0.1) {
                    0
                } else {
                    rng.gen_range(1..=16)
                };
                for (i, &point) in cycle.iter().enumerate() {
                    map[point] = cycle[(i + 1) % cycle.len()];
                    numerators[point] = mass;
                }
            }
            if numerators.iter().any(|&m| m > 0) {
                break;
            }
        }
        // each feeder maps to a cyclic point or to an earlier feeder, so no new cycles appear
        for (i, &point) in feeders.iter().enumerate() {
            let choice = rng.gen_range(0..cyclic.len() + i);
            map[point] = if choice < cyclic.len() {
                cyclic[choice]
            } else {
                feeders[choice - cyclic.len()]
            };
        }
        let total: i64 = numerators.iter().sum();
        let weights = numerators.iter().map(|&m| ratio(m, total)).collect();
        Self::new(weights, map)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> &Rational {
        &self.weights[x]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn check_point(&self, x: usize) -> Result<(), DynamicsError> {
        if x < self.len() {
            Ok(())
        } else {
            Err(DynamicsError::PointOutOfRange {
                point: x,
                n: self.len(),
            })
        }
    }

    pub fn check_observable(&self, f: &Observable) -> Result<(), DynamicsError> {
        if f.len() == self.len() {
            Ok(())
        } else {
            Err(DynamicsError::ObservableLength {
                got: f.len(),
                expected: self.len(),
            })
        }
    }

    /// Points of positive mass; "almost everywhere" statements are checked here.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_positive())
            .map(|(i, _)| i)
    }

    /// Checks weights and exact preservation of mass under preimages.
    pub fn validate(&self) -> Result<(), Violation> {
        if let Some((point, w)) = self.weights.iter().enumerate().find(|(_, w)| w.is_negative())
        {
            return Err(Violation::NegativeWeight {
                point,
                weight: format_rational(w),
            });
        }
        let total: Rational = self.weights.iter().sum();
        if !total.is_one() {
            return Err(Violation::WeightSum {
                total: format_rational(&total),
            });
        }
        let mut incoming = vec![Rational::zero(); self.len()];
        for (x, &y) in self.map.iter().enumerate() {
            incoming[y] += &self.weights[x];
        }
        for (point, (found, expected)) in incoming.iter().zip(&self.weights).enumerate() {
            if found != expected {
                return Err(Violation::PreimageMass {
                    point,
                    expected: format_rational(expected),
                    found: format_rational(found),
                });
            }
        }
        // forced by preservation: mass never sits on a transient point
        let periodic = self.periodic_mask();
        for (x, w) in self.weights.iter().enumerate() {
            assert!(
                periodic[x] || w.is_zero(),
                "validated system carries mass {w} on transient point {x}"
            );
        }
        Ok(())
    }

    /// `(x, T x, ..., T^{m-1} x)`.
    pub fn orbit(&self, x: usize, m: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(m);
        let mut y = x;
        for _ in 0..m {
            out.push(y);
            y = self.map[y];
        }
        out
    }

    /// Marks the points lying on a cycle of the functional graph.
    pub fn periodic_mask(&self) -> Vec<bool> {
        let n = self.len();
        // 0 = unseen, 1 = on current walk, 2 = done
        let mut state = vec![0u8; n];
        let mut periodic = vec![false; n];
        let mut walk = Vec::new();
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            walk.clear();
            let mut y = start;
            while state[y] == 0 {
                state[y] = 1;
                walk.push(y);
                y = self.map[y];
            }
            if state[y] == 1 {
                let mut z = y;
                loop {
                    periodic[z] = true;
                    z = self.map[z];
                    if z == y {
                        break;
                    }
                }
            }
            for &w in &walk {
                state[w] = 2;
            }
        }
        periodic
    }

    /// Orbit shapes of all points in one linear pass.
    pub fn orbit_shapes(&self) -> Vec<OrbitShape> {
        let n = self.len();
        let periodic = self.periodic_mask();
        let mut shapes: Vec<Option<OrbitShape>> = vec![None; n];
        for start in 0..n {
            if !periodic[start] || shapes[start].is_some() {
                continue;
            }
            let mut cycle = vec![start];
            let mut y = self.map[start];
            while y != start {
                cycle.push(y);
                y = self.map[y];
            }
            for &c in &cycle {
                shapes[c] = Some(OrbitShape {
                    preperiod: 0,
                    period: cycle.len(),
                });
            }
        }
        let mut walk = Vec::new();
        for start in 0..n {
            walk.clear();
            let mut y = start;
            while shapes[y].is_none() {
                walk.push(y);
                y = self.map[y];
            }
            let mut known = shapes[y].expect("walk ends on a known point");
            for &w in walk.iter().rev() {
                known = OrbitShape {
                    preperiod: known.preperiod + 1,
                    period: known.period,
                };
                shapes[w] = Some(known);
            }
        }
        shapes.into_iter().map(|s| s.expect("all shapes set")).collect()
    }

    pub fn orbit_shape(&self, x: usize) -> OrbitShape {
        let mut seen = vec![usize::MAX; self.len()];
        let mut y = x;
        let mut k = 0;
        while seen[y] == usize::MAX {
            seen[y] = k;
            y = self.map[y];
            k += 1;
        }
        OrbitShape {
            preperiod: seen[y],
            period: k - seen[y],
        }
    }

    /// Component label of each point in the functional graph (grand orbits).
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for x in 0..n {
            let a = find(&mut parent, x);
            let b = find(&mut parent, self.map[x]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = vec![0; n];
        for (x, slot) in out.iter_mut().enumerate() {
            let root = find(&mut parent, x);
            if label[root] == usize::MAX {
                label[root] = next;
                next += 1;
            }
            *slot = label[root];
        }
        out
    }

    /// `λ(T x) = λ(x)` at every positive-weight point, exactly.
    pub fn is_invariant(&self, lambda: &Observable) -> bool {
        lambda.len() == self.len()
            && self
                .support()
                .all(|x| lambda.value(self.map[x]) == lambda.value(x))
    }

    /// Random invariant function: one random rational per grand orbit.
    pub fn random_invariant(&self, seed: u64) -> Observable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = self.components();
        let count = labels.iter().copied().max().map_or(0, |m| m + 1);
        let per_component: Vec<Rational> = (0..count).map(|_| random_rational(&mut rng, 8)).collect();
        Observable::new(labels.iter().map(|&c| per_component[c].clone()).collect())
    }

    pub fn descriptor(&self) -> String {
        format!("finite(n={})", self.len())
    }
}

/// Uniform random rational in `[-bound, bound]` with denominator at most 6.
pub fn random_rational<R: Rng>(rng: &mut R, bound: i64) -> Rational {
    let den = rng.gen_range(1..=6);
    let num = rng.gen_range(-bound * den..=bound * den);
    ratio(num, den)
}

// ---------------------------------------------------------------------------
// Observables

/// Exact real function on a finite system with a declared bound `|f| <= B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    values: Vec<Rational>,
    sup_bound: Rational,
}

impl Observable {
    /// Uses the exact `max |f|` as the declared bound.
    pub fn new(values: Vec<Rational>) -> Self {
        let sup_bound = values
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Rational::zero);
        Self { values, sup_bound }
    }

    pub fn with_sup_bound(values: Vec<Rational>, sup_bound: Rational) -> Result<Self, DynamicsError> {
        if let Some((point, value)) = values.iter().enumerate().find(|(_, v)| v.abs() > sup_bound) {
            return Err(DynamicsError::SupBoundViolated {
                bound: format_rational(&sup_bound),
                value: format_rational(value),
                point,
            });
        }
        Ok(Self { values, sup_bound })
    }

    pub fn constant(value: Rational, n: usize) -> Self {
        Self::new(vec![value; n])
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| int(v)).collect())
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize, bound: i64) -> Self {
        Self::new((0..n).map(|_| random_rational(rng, bound)).collect())
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    #[inline]
    pub fn value(&self, x: usize) -> &Rational {
        &self.values[x]
    }

    pub fn sup_bound(&self) -> &Rational {
        &self.sup_bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise image; the bound is recomputed exactly.
    pub fn map(&self, op: impl Fn(&Rational) -> Rational) -> Self {
        Self::new(self.values.iter().map(op).collect())
    }

    pub fn neg(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            sup_bound: self.sup_bound.clone(),
        }
    }

    pub fn positive_part(&self) -> Self {
        self.map(crate::rational::positive_part)
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &Observable) -> Self {
        assert_eq!(self.len(), other.len(), "observable lengths differ");
        Self::new(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Observable) -> Self {
        assert_eq!(self.len(), other.len(), "observable lengths differ");
        Self::new(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        self.map(|v| v * factor)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }
}

// ---------------------------------------------------------------------------
// Interval systems

/// State of an interval map: a float for isometries, an exact rational for
/// expanding maps.
#[derive(Debug, Clone, PartialEq)]
pub enum IntervalPoint {
    Float(f64),
    Exact(Rational),
}

impl IntervalPoint {
    pub fn as_f64(&self) -> f64 {
        match self {
            IntervalPoint::Float(x) => *x,
            IntervalPoint::Exact(r) => to_f64(r),
        }
    }
}

impl fmt::Display for IntervalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalPoint::Float(x) => write!(f, "{x}"),
            IntervalPoint::Exact(r) => write!(f, "{r}"),
        }
    }
}

/// Rotation `x -> x + alpha mod 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    alpha: f64,
}

impl Rotation {
    pub fn new(alpha: f64) -> Result<Self, DynamicsError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self { alpha })
        } else {
            Err(DynamicsError::InvalidAngle(alpha))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn step(&self, x: f64) -> f64 {
        let y = x + self.alpha;
        // y in [1, 2) makes the subtraction exact
        if y >= 1.0 {
            y - 1.0
        } else {
            y
        }
    }
}

/// Interval exchange: `[0, 1)` is cut into intervals of the given lengths,
/// and interval `i` is moved to slot `permutation[i]` of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalExchange {
    lengths: Vec<Rational>,
    permutation: Vec<usize>,
    starts: Vec<Rational>,
    image_starts: Vec<Rational>,
    starts_f64: Vec<f64>,
    image_starts_f64: Vec<f64>,
}

impl IntervalExchange {
    pub fn new(lengths: Vec<Rational>, permutation: Vec<usize>) -> Result<Self, DynamicsError> {
        let d = lengths.len();
        if d == 0 {
            return Err(DynamicsError::InvalidExchange("no intervals".into()));
        }
        if permutation.len() != d {
            return Err(DynamicsError::InvalidExchange(format!(
                "{d} lengths but a permutation of {}",
                permutation.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !l.is_positive()) {
            return Err(DynamicsError::InvalidExchange(format!(
                "length {l} is not positive"
            )));
        }
        let total: Rational = lengths.iter().sum();
        if !total.is_one() {
            return Err(DynamicsError::InvalidExchange(format!(
                "lengths sum to {total}, not 1"
            )));
        }
        let mut seen = vec![false; d];
        for &p in &permutation {
            if p >= d || seen[p] {
                return Err(DynamicsError::InvalidExchange(
                    "permutation is not a bijection".into(),
                ));
            }
            seen[p] = true;
        }
        let mut starts = Vec::with_capacity(d);
        let mut acc = Rational::zero();
        for l in &lengths {
            starts.push(acc.clone());
            acc += l;
        }
        // slot s of the image holds interval inverse[s]
        let mut inverse = vec![0; d];
        for (i, &p) in permutation.iter().enumerate() {
            inverse[p] = i;
        }
        let mut image_starts = vec![Rational::zero(); d];
        let mut acc = Rational::zero();
        for &i in &inverse {
            image_starts[i] = acc.clone();
            acc += &lengths[i];
        }
        let starts_f64 = starts.iter().map(to_f64).collect();
        let image_starts_f64 = image_starts.iter().map(to_f64).collect();
        Ok(Self {
            lengths,
            permutation,
            starts,
            image_starts,
            starts_f64,
            image_starts_f64,
        })
    }

    pub fn lengths(&self) -> &[Rational] {
        &self.lengths
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn step_f64(&self, x: f64) -> f64 {
        let i = self.starts_f64.partition_point(|&s| s <= x).saturating_sub(1);
        let y = x - self.starts_f64[i] + self.image_starts_f64[i];
        y.clamp(0.0, 1.0 - f64::EPSILON / 2.0)
    }

    pub fn step_exact(&self, x: &Rational) -> Rational {
        let i = self.starts.partition_point(|s| s <= x).saturating_sub(1);
        x - &self.starts[i] + &self.image_starts[i]
    }
}

/// Lebesgue-preserving map of `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum IntervalSystem {
    Identity,
    Rotation(Rotation),
    /// `x -> 2x mod 1`, on rationals with odd denominator only.
    Doubling,
    Exchange(IntervalExchange),
}

/// Which state representation a map supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateRepresentation {
    Float64,
    ExactRational,
    Both,
}

fn unit_interval(x: &Rational) -> Result<(), DynamicsError> {
    if x.is_negative() || *x >= Rational::one() {
        Err(DynamicsError::OutsideUnitInterval(format_rational(x)))
    } else {
        Ok(())
    }
}

impl IntervalSystem {
    pub fn rotation(alpha: f64) -> Result<Self, DynamicsError> {
        Rotation::new(alpha).map(Self::Rotation)
    }

    pub fn exchange(lengths: Vec<Rational>, permutation: Vec<usize>) -> Result<Self, DynamicsError> {
        IntervalExchange::new(lengths, permutation).map(Self::Exchange)
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntervalSystem::Identity => "identity",
            IntervalSystem::Rotation(_) => "rotation",
            IntervalSystem::Doubling => "doubling",
            IntervalSystem::Exchange(_) => "interval-exchange",
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            IntervalSystem::Rotation(r) => format!("rotation(alpha={})", r.alpha()),
            IntervalSystem::Exchange(e) => format!("interval-exchange(d={})", e.lengths().len()),
            other => other.name().to_string(),
        }
    }

    pub fn representation(&self) -> StateRepresentation {
        match self {
            IntervalSystem::Identity | IntervalSystem::Exchange(_) => StateRepresentation::Both,
            IntervalSystem::Rotation(_) => StateRepresentation::Float64,
            IntervalSystem::Doubling => StateRepresentation::ExactRational,
        }
    }

    pub fn step_f64(&self, x: f64) -> Result<f64, DynamicsError> {
        match self {
            IntervalSystem::Identity => Ok(x),
            IntervalSystem::Rotation(r) => Ok(r.step(x)),
            IntervalSystem::Exchange(e) => Ok(e.step_f64(x)),
            IntervalSystem::Doubling => Err(DynamicsError::NoFloatState("doubling")),
        }
    }

    pub fn step_exact(&self, x: &Rational) -> Result<Rational, DynamicsError> {
        unit_interval(x)?;
        match self {
            IntervalSystem::Identity => Ok(x.clone()),
            IntervalSystem::Exchange(e) => Ok(e.step_exact(x)),
            IntervalSystem::Doubling => {
                if !x.denom().bit(0) {
                    return Err(DynamicsError::DoublingState(format_rational(x)));
                }
                let y = x * int(2);
                Ok(if y >= Rational::one() { y - int(1) } else { y })
            }
            IntervalSystem::Rotation(_) => Err(DynamicsError::NoExactState("rotation")),
        }
    }

    pub fn step(&self, x: &IntervalPoint) -> Result<IntervalPoint, DynamicsError> {
        match x {
            IntervalPoint::Float(v) => self.step_f64(*v).map(IntervalPoint::Float),
            IntervalPoint::Exact(r) => self.step_exact(r).map(IntervalPoint::Exact),
        }
    }

    /// One application of the map on a float, exact for doubling as well.
    ///
    /// Only used for single-step checks such as invariance; long float
    /// orbits of the doubling map are not produced.
    pub(crate) fn single_step_f64(&self, x: f64) -> f64 {
        match self {
            IntervalSystem::Doubling => (2.0 * x).fract(),
            other => other.step_f64(x).expect("float-capable map"),
        }
    }

    /// Checks that `x` is a state this map can iterate.
    pub fn check_state(&self, x: &IntervalPoint) -> Result<(), DynamicsError> {
        self.step(x).map(|_| ())
    }

    pub fn orbit(&self, x: &IntervalPoint, m: usize) -> Result<Vec<IntervalPoint>, DynamicsError> {
        self.check_state(x)?;
        let mut out = Vec::with_capacity(m);
        let mut y = x.clone();
        for k in 0..m {
            if k + 1 == m {
                out.push(y);
                break;
            }
            let next = self.step(&y)?;
            out.push(std::mem::replace(&mut y, next));
        }
        Ok(out)
    }

    /// Finite system on an exact point set closed under the map, with
    /// uniform weights. The map restricted to such a set is a permutation
    /// for all kinds provided here, so the uniform measure is preserved.
    pub fn finite_image(&self, points: &[Rational]) -> Result<FiniteSystem, DynamicsError> {
        if points.is_empty() {
            return Err(DynamicsError::Empty);
        }
        let mut sorted: Vec<(Rational, usize)> =
            points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        sorted.sort();
        let mut map = Vec::with_capacity(points.len());
        for p in points {
            let image = self.step_exact(p)?;
            let idx = sorted
                .binary_search_by(|(q, _)| q.cmp(&image))
                .map_err(|_| DynamicsError::NotClosed {
                    from: format_rational(p),
                    to: format_rational(&image),
                })?;
            map.push(sorted[idx].1);
        }
        let w = ratio(1, points.len() as i64);
        FiniteSystem::new(vec![w; points.len()], map)
    }

    /// `is_invariant` on sampled points: `|λ(T x) - λ(x)| <= tol` everywhere.
    pub fn is_invariant_sampled(
        &self,
        lambda: &IntervalObservable,
        plan: &SamplePlan,
        tolerance: f64,
    ) -> bool {
        (0..plan.count()).all(|i| {
            let x = plan.point(i);
            (lambda.eval_f64(self.single_step_f64(x)) - lambda.eval_f64(x)).abs() <= tolerance
        })
    }
}

/// `{1/q, 2/q, ..., (q-1)/q}`: closed under doubling when `q` is odd.
pub fn doubling_grid(q: u64) -> Vec<Rational> {
    (1..q).map(|p| ratio(p as i64, q as i64)).collect()
}

// ---------------------------------------------------------------------------
// Interval observables

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Real observable on `[0, 1)`.
#[derive(Clone)]
pub enum IntervalObservable {
    /// `cos 2πx`.
    Cosine,
    /// Indicator of `[lo, hi)`.
    Indicator { lo: Rational, hi: Rational },
    Constant(Rational),
    /// Arbitrary callable with a trusted sup bound.
    Custom {
        name: String,
        func: RealFn,
        sup_bound: f64,
    },
}

impl fmt::Debug for IntervalObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalObservable::Cosine => write!(f, "Cosine"),
            IntervalObservable::Indicator { lo, hi } => write!(f, "Indicator[{lo}, {hi})"),
            IntervalObservable::Constant(c) => write!(f, "Constant({c})"),
            IntervalObservable::Custom { name, sup_bound, .. } => {
                write!(f, "Custom({name}, |f| <= {sup_bound})")
            }
        }
    }
}

impl IntervalObservable {
    pub fn custom(
        name: impl Into<String>,
        sup_bound: f64,
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        IntervalObservable::Custom {
            name: name.into(),
            func: Arc::new(func),
            sup_bound,
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        match self {
            IntervalObservable::Cosine => (std::f64::consts::TAU * x).cos(),
            IntervalObservable::Indicator { lo, hi } => {
                if x >= to_f64(lo) && x < to_f64(hi) {
                    1.0
                } else {
                    0.0
                }
            }
            IntervalObservable::Constant(c) => to_f64(c),
            IntervalObservable::Custom { func, .. } => func(x),
        }
    }

    /// Exact value at a rational point, when the observable has one.
    pub fn eval_exact(&self, x: &Rational) -> Option<Rational> {
        match self {
            IntervalObservable::Indicator { lo, hi } => Some(if x >= lo && x < hi {
                Rational::one()
            } else {
                Rational::zero()
            }),
            IntervalObservable::Constant(c) => Some(c.clone()),
            IntervalObservable::Cosine | IntervalObservable::Custom { .. } => None,
        }
    }

    pub fn eval(&self, x: &IntervalPoint) -> f64 {
        match x {
            IntervalPoint::Float(v) => self.eval_f64(*v),
            IntervalPoint::Exact(r) => self
                .eval_exact(r)
                .map(|v| to_f64(&v))
                .unwrap_or_else(|| self.eval_f64(to_f64(r))),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            IntervalObservable::Cosine => 1.0,
            IntervalObservable::Indicator { .. } => 1.0,
            IntervalObservable::Constant(c) => to_f64(c).abs(),
            IntervalObservable::Custom { sup_bound, .. } => *sup_bound,
        }
    }

    /// Values on an exact point set, for use with [`IntervalSystem::finite_image`].
    pub fn restrict(&self, points: &[Rational]) -> Option<Observable> {
        points
            .iter()
            .map(|p| self.eval_exact(p))
            .collect::<Option<Vec<_>>>()
            .map(Observable::new)
    }
}

// ---------------------------------------------------------------------------
// Sampling

/// Quadrature points for integrals on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SamplePlan {
    /// Midpoints `(i + 1/2) / count`.
    Grid { count: usize },
    /// Uniform points; point `i` comes from its own ChaCha stream.
    Random { count: usize, seed: u64 },
}

impl SamplePlan {
    pub fn grid(count: usize) -> Result<Self, DynamicsError> {
        if count == 0 {
            return Err(DynamicsError::EmptyPlan);
        }
        Ok(SamplePlan::Grid { count })
    }

    pub fn random(count: usize, seed: u64) -> Result<Self, DynamicsError> {
        if count == 0 {
            return Err(DynamicsError::EmptyPlan);
        }
        Ok(SamplePlan::Random { count, seed })
    }

    pub fn count(&self) -> usize {
        match *self {
            SamplePlan::Grid { count } | SamplePlan::Random { count, .. } => count,
        }
    }

    /// The `i`-th sample, independent of the order in which samples are drawn.
    pub fn point(&self, i: usize) -> f64 {
        match *self {
            SamplePlan::Grid { count } => (i as f64 + 0.5) / count as f64,
            SamplePlan::Random { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng.gen::<f64>()
            }
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count()).map(|i| self.point(i)).collect()
    }
}
