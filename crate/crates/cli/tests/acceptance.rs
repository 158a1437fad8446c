//! Acceptance suite. Every criterion prints one `criterion N: PASS|FAIL` line
//! (run with `--nocapture` to see them) and asserts its own conditions.
//! Values are cross-checked against the brute-force oracles in `oracle`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};

use ergodic_core::averages::{self, interval_averages, interval_averages_exact, sup_average};
use ergodic_core::covering::{self, Segment};
use ergodic_core::rational::{format_rational, int, parse_rational, ratio};
use ergodic_core::verify::{self, FuzzInstance, ReportValue, VerificationReport};
use ergodic_core::{
    FiniteSystem, Horizon, IntervalObservable, IntervalPoint, IntervalSystem, Observable, Rational,
    SamplePlan,
};

const SEED: u64 = 20_240_601;
const GOLDEN_ALPHA: f64 = 0.618_033_988_749_894_9;

fn verdict(criterion: u32, ok: bool, detail: impl AsRef<str>) -> bool {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {tag}  {}", detail.as_ref());
    ok
}

fn exact(report: &VerificationReport) -> Rational {
    match &report.value {
        ReportValue::Exact { value } => parse_rational(value).unwrap(),
        other => panic!("expected an exact value, got {other:?}"),
    }
}

/// Brute-force reference computations on raw weights, map and values.
mod oracle {
    use super::*;

    pub struct Raw<'a> {
        pub weights: &'a [Rational],
        pub map: &'a [usize],
    }

    impl<'a> Raw<'a> {
        pub fn of(sys: &'a FiniteSystem) -> Self {
            Raw {
                weights: sys.weights(),
                map: sys.map(),
            }
        }

        /// Pre-period and period of the orbit of `x`, by first-visit times.
        pub fn shape(&self, x: usize) -> (usize, usize) {
            let mut seen = vec![usize::MAX; self.map.len()];
            let (mut y, mut i) = (x, 0);
            while seen[y] == usize::MAX {
                seen[y] = i;
                y = self.map[y];
                i += 1;
            }
            (seen[y], i - seen[y])
        }

        pub fn averages(&self, f: &[Rational], x: usize, k: usize) -> Vec<Rational> {
            let mut out = Vec::with_capacity(k);
            let mut sum = Rational::zero();
            let mut y = x;
            for j in 1..=k {
                sum += &f[y];
                out.push(&sum / int(j as i64));
                y = self.map[y];
            }
            out
        }

        pub fn max_average(&self, f: &[Rational], x: usize, n: usize) -> Rational {
            self.averages(f, x, n).into_iter().max().unwrap()
        }

        pub fn cycle_average(&self, f: &[Rational], x: usize) -> Rational {
            let (t, p) = self.shape(x);
            let mut y = x;
            for _ in 0..t {
                y = self.map[y];
            }
            let mut sum = Rational::zero();
            for _ in 0..p {
                sum += &f[y];
                y = self.map[y];
            }
            sum / int(p as i64)
        }

        /// `max(f*_M, cycle average)` with `M = factor (t + p)`.
        pub fn sup_average(&self, f: &[Rational], x: usize, factor: usize) -> Rational {
            let (t, p) = self.shape(x);
            self.max_average(f, x, factor * (t + p))
                .max(self.cycle_average(f, x))
        }

        pub fn maximal(&self, f: &[Rational], x: usize, horizon: Horizon) -> Rational {
            match horizon {
                Horizon::Finite(n) => self.max_average(f, x, n),
                Horizon::Infinite => self.sup_average(f, x, 2),
            }
        }

        /// `f*_N` at positive-weight points; `None` elsewhere.
        pub fn maximal_all(&self, f: &[Rational], horizon: Horizon) -> Vec<Option<Rational>> {
            (0..self.map.len())
                .map(|x| self.weights[x].is_positive().then(|| self.maximal(f, x, horizon)))
                .collect()
        }

        pub fn level_set(&self, maximal: &[Option<Rational>], lambda: &[Rational]) -> Vec<bool> {
            maximal
                .iter()
                .zip(lambda)
                .map(|(m, l)| m.as_ref().is_some_and(|m| m > l))
                .collect()
        }

        pub fn integral_over(&self, g: &[Rational], set: &[bool]) -> Rational {
            (0..g.len())
                .filter(|&x| set[x])
                .map(|x| &g[x] * &self.weights[x])
                .sum()
        }

        pub fn integral(&self, g: &[Rational]) -> Rational {
            self.integral_over(g, &vec![true; g.len()])
        }
    }

    pub fn minus(f: &[Rational], g: &[Rational]) -> Vec<Rational> {
        f.iter().zip(g).map(|(a, b)| a - b).collect()
    }
}

use oracle::Raw;

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_exact_maximal_inequality_fuzz() {
    let trials = 1000;
    let mut elapsed = Duration::ZERO;
    let (mut nonneg, mut agree) = (0, 0);
    let (mut invertible, mut non_invertible, mut infinite, mut invariant_kind) = (0, 0, 0, 0);
    let mut max_n = 0;
    for trial in 0..trials {
        let inst = FuzzInstance::generate(SEED, trial, 64);
        let start = Instant::now();
        let report =
            verify::check_maximal_inequality(&inst.system, &inst.f, &inst.lambda, inst.horizon).unwrap();
        elapsed += start.elapsed();
        let value = exact(&report);

        let raw = Raw::of(&inst.system);
        let maximal = raw.maximal_all(inst.f.values(), inst.horizon);
        let set = raw.level_set(&maximal, inst.lambda.values());
        let expected = raw.integral_over(&oracle::minus(inst.f.values(), inst.lambda.values()), &set);

        nonneg += usize::from(!value.is_negative() && report.passed());
        agree += usize::from(value == expected);
        let mut image = inst.system.map().to_vec();
        image.sort_unstable();
        image.dedup();
        if image.len() == inst.system.len() {
            invertible += 1;
        } else {
            non_invertible += 1;
        }
        infinite += usize::from(inst.horizon == Horizon::Infinite);
        invariant_kind += usize::from(inst.lambda_kind == "invariant");
        max_n = max_n.max(inst.system.len());
    }
    let ok = nonneg == trials as usize
        && agree == trials as usize
        && invertible > 0
        && non_invertible > 0
        && infinite > 0
        && invariant_kind > 0
        && max_n <= 64
        && elapsed < Duration::from_secs(60);
    assert!(verdict(
        1,
        ok,
        format!(
            "{nonneg}/{trials} >= 0, {agree}/{trials} equal to oracle, \
             {invertible} invertible / {non_invertible} non-invertible, {infinite} with N=inf, \
             {invariant_kind} lambdas from random_invariant, max n {max_n}, {elapsed:.2?} (< 60 s)"
        )
    ));
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_02_decomposition_certificates() {
    let trials = 1000;
    let (mut certified, mut tail_ok, mut chain_ok) = (0, 0, 0);
    let (mut fault_sum_caught, mut fault_zero_caught, mut applicable) = (0, 0, 0);
    let mut max_m = 0;
    for trial in 0..trials {
        let inst = FuzzInstance::generate(SEED ^ 0xdec0, trial, 64);
        let (sys, f, lambda, x, n, m) = (&inst.system, &inst.f, &inst.lambda, inst.x, inst.window, inst.m);
        max_m = max_m.max(m);
        let dec = covering::decompose(f, sys, lambda, x, n, m).unwrap();
        certified += usize::from(covering::verify_decomposition(&dec, f, sys, lambda, x).is_ok());
        let tail = covering::tail_bound_check(&dec, f, lambda, x, n);
        tail_ok += usize::from(tail.passed());

        // oracle: t_k = (f(T^k x) - λ(x)) χ_{f*_N > λ}(T^k x), naive
        let raw = Raw::of(sys);
        let lx = lambda.value(x);
        let mut y = x;
        let mut terms = Vec::with_capacity(m);
        for _ in 0..m {
            let member = raw.max_average(f.values(), y, n) > *lx;
            terms.push(if member { f.value(y) - lx } else { Rational::zero() });
            y = sys.apply(y);
        }
        let total: Rational = terms.iter().sum();
        let tail_sum: Rational = terms[dec.tail_start..].iter().sum();
        let lambda_plus = if lx.is_positive() { lx.clone() } else { Rational::zero() };
        let bound = -(int(n as i64) * (f.sup_bound() + lambda_plus));
        chain_ok += usize::from(
            total == dec.total_sum() && tail_sum == dec.tail_sum() && total >= tail_sum && tail_sum >= bound,
        );

        // injected faults on the first positive block
        let Some(first) = dec
            .segments
            .iter()
            .position(|s| matches!(s, Segment::PositiveBlock { .. }))
        else {
            continue;
        };
        applicable += 1;
        let mut bad_sum = dec.clone();
        if let Segment::PositiveBlock { block_sum, .. } = &mut bad_sum.segments[first] {
            *block_sum = -block_sum.clone();
        }
        fault_sum_caught += usize::from(covering::verify_decomposition(&bad_sum, f, sys, lambda, x).is_err());
        let mut bad_run = dec.clone();
        let (start, length) = (bad_run.segments[first].start(), bad_run.segments[first].length());
        bad_run.segments[first] = Segment::ZeroRun { start, length };
        fault_zero_caught += usize::from(covering::verify_decomposition(&bad_run, f, sys, lambda, x).is_err());
    }
    let all = trials as usize;
    let ok = certified == all
        && tail_ok == all
        && chain_ok == all
        && applicable > 0
        && fault_sum_caught == applicable
        && fault_zero_caught == applicable
        && max_m <= 512;
    assert!(verdict(
        2,
        ok,
        format!(
            "certificates {certified}/{all}, tail bound {tail_ok}/{all}, oracle chain {chain_ok}/{all}; \
             faults caught: negated block sum {fault_sum_caught}/{applicable}, \
             block relabelled as zero run {fault_zero_caught}/{applicable}"
        )
    ));
}

// ---------------------------------------------------------------------------

fn segment_list(dec: &covering::StringDecomposition<Rational>) -> Vec<(&'static str, usize, usize, String)> {
    dec.segments
        .iter()
        .map(|s| match s {
            Segment::ZeroRun { start, length } => ("zero", *start, *length, String::new()),
            Segment::PositiveBlock {
                start,
                length,
                block_sum,
            } => ("block", *start, *length, format_rational(block_sum)),
        })
        .collect()
}

#[test]
fn criterion_03_hand_traced_decompositions() {
    let swap = FiniteSystem::cycle(2).unwrap();
    let half = Observable::constant(ratio(1, 2), 2);

    let f = Observable::from_ints(&[1, 0]);
    let first = covering::decompose(&f, &swap, &half, 0, 2, 7).unwrap();
    let expected_first = vec![
        ("block", 0, 1, "1/2".to_string()),
        ("zero", 1, 1, String::new()),
        ("block", 2, 1, "1/2".to_string()),
        ("zero", 3, 1, String::new()),
        ("block", 4, 1, "1/2".to_string()),
        ("zero", 5, 1, String::new()),
        ("block", 6, 1, "1/2".to_string()),
    ];
    let first_ok = segment_list(&first) == expected_first
        && first.tail_start == 7
        && first.tail_sum().is_zero()
        && covering::verify_decomposition(&first, &f, &swap, &half, 0).is_ok();

    let g = Observable::new(vec![ratio(2, 5), ratio(4, 5)]);
    let second = covering::decompose(&g, &swap, &half, 0, 2, 5).unwrap();
    let expected_second = vec![("block", 0, 2, "1/5".to_string()), ("block", 2, 2, "1/5".to_string())];
    let second_ok = segment_list(&second) == expected_second
        && second.tail_start == 4
        && second.tail_sum() == ratio(-1, 10)
        && covering::verify_decomposition(&second, &g, &swap, &half, 0).is_ok();

    assert!(verdict(
        3,
        first_ok && second_ok,
        format!(
            "f=(1,0) m=7: {:?} tail {}; f=(2/5,4/5) m=5: {:?} tail {}",
            segment_list(&first).iter().filter(|s| s.0 == "block").map(|s| s.3.as_str()).collect::<Vec<_>>(),
            first.tail_sum(),
            segment_list(&second).iter().map(|s| s.3.as_str()).collect::<Vec<_>>(),
            second.tail_sum(),
        )
    ));
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_04_corollary_suite() {
    let systems = 500;
    let epsilons = [int(1), ratio(1, 10), ratio(1, 100)];
    let mut elapsed = Duration::ZERO;
    let mut timed = |op: &mut dyn FnMut()| {
        let start = Instant::now();
        op();
        elapsed += start.elapsed();
    };
    let mut failures = Vec::new();
    for trial in 0..systems {
        let inst = FuzzInstance::generate(SEED ^ 0xc0, trial, 64);
        let (sys, f) = (&inst.system, &inst.f);
        let raw = Raw::of(sys);
        let limits: Vec<Rational> = (0..sys.len()).map(|x| raw.cycle_average(f.values(), x)).collect();
        let int_limit = raw.integral(&limits);
        let int_f = raw.integral(f.values());

        let (mut ergodic, mut duality, mut sweep, mut finals) = (None, None, None, Vec::new());
        timed(&mut || {
            ergodic = Some(verify::check_ergodic_limit(sys, f).unwrap());
            duality = Some(verify::check_duality(sys, f).unwrap());
            sweep = Some(verify::corollary_lambda_sweep(sys, f, 1..=16).unwrap());
            finals = epsilons
                .iter()
                .map(|eps| verify::check_final_application(sys, f, eps).unwrap())
                .collect();
        });
        let (ergodic, duality, sweep) = (ergodic.unwrap(), duality.unwrap(), sweep.unwrap());

        if !ergodic.passed() || exact(&ergodic) != int_limit || int_limit != int_f {
            failures.push(format!("trial {trial}: ergodic-limit"));
        }
        if !duality.passed() || !exact(&duality).is_zero() {
            failures.push(format!("trial {trial}: duality"));
        }

        let f_plus: Vec<Rational> = f.values().iter().map(|v| v.clone().max(Rational::zero())).collect();
        let limits_plus: Vec<Rational> = (0..sys.len()).map(|x| raw.cycle_average(&f_plus, x)).collect();
        let mut previous: Option<Rational> = None;
        for (row, n) in sweep.rows.iter().zip(1..=16i64) {
            let lambda: Vec<Rational> = limits_plus.iter().map(|a| a.clone().min(int(n)) - ratio(1, n)).collect();
            let expected = raw.integral(&lambda);
            let reported = parse_rational(&row["integral_lambda"]).unwrap();
            let monotone = previous.as_ref().is_none_or(|p| reported >= *p);
            if reported != expected || !monotone || raw.integral(&f_plus) < expected {
                failures.push(format!("trial {trial}: corollary-lambda n={n}"));
            }
            previous = Some(reported);
        }
        if !sweep.passed() || sweep.rows.len() != 16 {
            failures.push(format!("trial {trial}: corollary-lambda sweep"));
        }

        for (eps, report) in epsilons.iter().zip(&finals) {
            if !report.passed() || exact(report) != &int_limit - eps || int_f < exact(report) {
                failures.push(format!("trial {trial}: final eps={eps}"));
            }
        }
    }
    let ok = failures.is_empty() && elapsed < Duration::from_secs(30);
    assert!(verdict(
        4,
        ok,
        format!(
            "{systems} systems x (ergodic-limit, duality, corollary-lambda n=1..16, final eps in {{1, 1/10, 1/100}}): \
             {} failures, {elapsed:.2?} (< 30 s){}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        )
    ));
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_05_truncation_suite() {
    let systems = 200;
    let (mut symdiff_monotone, mut l1_monotone, mut reach_zero, mut integrals_nonneg, mut match_oracle) =
        (0, 0, 0, 0, 0);
    let mut first_counterexample = None;
    for trial in 0..systems {
        let inst = FuzzInstance::generate(SEED ^ 0x75, trial, 64);
        let (sys, f, lambda, horizon) = (&inst.system, &inst.f, &inst.lambda, inst.horizon);
        let schedule = verify::truncation_schedule(f);
        let report = verify::check_truncation(sys, f, lambda, horizon, &schedule).unwrap();

        let raw = Raw::of(sys);
        let full_max = raw.maximal_all(f.values(), horizon);
        let full_set = raw.level_set(&full_max, lambda.values());
        let mut rows = Vec::new();
        for s in &schedule {
            let phi: Vec<Rational> = f
                .values()
                .iter()
                .map(|v| if v.abs() <= *s { v.clone() } else { Rational::zero() })
                .collect();
            let phi_max = raw.maximal_all(&phi, horizon);
            let set = raw.level_set(&phi_max, lambda.values());
            let symdiff: Rational = (0..sys.len())
                .filter(|&x| set[x] != full_set[x])
                .map(|x| sys.weight(x).clone())
                .sum();
            let l1: Rational = (0..sys.len())
                .filter_map(|x| Some((phi_max[x].as_ref()? - full_max[x].as_ref()?).abs() * sys.weight(x)))
                .sum();
            let integral = raw.integral_over(&oracle::minus(&phi, lambda.values()), &set);
            rows.push((symdiff, l1, integral));
        }
        let reported: Vec<(Rational, Rational, Rational)> = report
            .rows
            .iter()
            .map(|r| {
                (
                    parse_rational(&r["symmetric_difference"]).unwrap(),
                    parse_rational(&r["l1_distance"]).unwrap(),
                    parse_rational(&r["integral"]).unwrap(),
                )
            })
            .collect();
        match_oracle += usize::from(reported == rows);

        let sd_mono = rows.windows(2).all(|w| w[1].0 <= w[0].0);
        let l1_mono = rows.windows(2).all(|w| w[1].1 <= w[0].1);
        let last = rows.last().unwrap();
        symdiff_monotone += usize::from(sd_mono);
        l1_monotone += usize::from(l1_mono);
        reach_zero += usize::from(last.0.is_zero() && last.1.is_zero());
        integrals_nonneg += usize::from(rows.iter().all(|r| !r.2.is_negative()));
        if (!sd_mono || !l1_mono) && first_counterexample.is_none() {
            first_counterexample = Some(format!(
                "trial {trial} (n={}, N={horizon}): symdiff {:?}, L1 {:?}",
                sys.len(),
                rows.iter().map(|r| r.0.to_string()).collect::<Vec<_>>(),
                rows.iter().map(|r| r.1.to_string()).collect::<Vec<_>>(),
            ));
        }
    }
    let all = systems as usize;
    println!(
        "criterion 5 parts: integrals >= 0 {integrals_nonneg}/{all}; exact 0 at s = max|f| {reach_zero}/{all}; \
         symmetric difference nonincreasing {symdiff_monotone}/{all}; L1 nonincreasing {l1_monotone}/{all}; \
         library rows equal oracle {match_oracle}/{all}"
    );
    if let Some(example) = &first_counterexample {
        println!("criterion 5 first non-monotone sweep: {example}");
    }
    let ok = integrals_nonneg == all
        && reach_zero == all
        && symdiff_monotone == all
        && l1_monotone == all
        && match_oracle == all;
    assert!(verdict(
        5,
        ok,
        "monotone symmetric difference and L1 distance, exact limits, nonnegative integrals"
    ));
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_06_sup_average_oracle() {
    let systems = 500;
    let (mut points, mut agree) = (0, 0);
    for trial in 0..systems {
        let inst = FuzzInstance::generate(SEED ^ 0x5a, trial, 64);
        let raw = Raw::of(&inst.system);
        for x in inst.system.support() {
            points += 1;
            let value = sup_average(&inst.f, &inst.system, x).unwrap().value;
            agree += usize::from(value == raw.sup_average(inst.f.values(), x, 10));
        }
    }
    assert!(verdict(
        6,
        agree == points && points > 0,
        format!("{agree}/{points} positive-weight points equal max(f*_M, cycle average), M = 10(t+p), over {systems} systems")
    ));
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_07_rotation_equidistribution() {
    let k = 1_000_000;
    let start = Instant::now();
    let report = verify::check_rotation_equidistribution(GOLDEN_ALPHA, 0.0, k).unwrap();
    let elapsed = start.elapsed();
    let ReportValue::Float { value, bound } = report.value else {
        panic!("float report expected")
    };
    let oracle_bound = 1.0 / (k as f64 * (std::f64::consts::PI * GOLDEN_ALPHA).sin()) + 1e-15 * k as f64;
    let golden_ok = report.passed() && value.abs() <= oracle_bound && bound == oracle_bound && elapsed < Duration::from_secs(1);

    let third = IntervalSystem::rotation(1.0 / 3.0).unwrap();
    let mut worst: f64 = 0.0;
    for x0 in [0.0, 0.1, 0.25, 0.7] {
        let series = interval_averages(&IntervalObservable::Cosine, &third, &IntervalPoint::Float(x0), 999_999).unwrap();
        for kk in [3, 300, 30_000, 999_999] {
            worst = worst.max(series[kk - 1].abs());
        }
    }
    let third_ok = worst <= 1e-9;
    assert!(verdict(
        7,
        golden_ok && third_ok,
        format!(
            "golden |A_K| = {:.3e} <= {oracle_bound:.3e} in {elapsed:.2?} (< 1 s); alpha = 1/3 max |A_K| over K = 0 mod 3: {worst:.3e} (<= 1e-9)",
            value.abs()
        )
    ));
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_08_doubling_exact_orbit() {
    let x = ratio(1, 11);
    let f = IntervalObservable::Indicator {
        lo: int(0),
        hi: ratio(1, 2),
    };
    let orbit = IntervalSystem::Doubling.orbit(&IntervalPoint::Exact(x.clone()), 11).unwrap();
    let period = (1..orbit.len()).find(|&i| orbit[i] == orbit[0]);
    let a10 = interval_averages_exact(&f, &IntervalSystem::Doubling, &x, 10).unwrap()[9].clone();

    // oracle: T^k(1/11) = (2^k mod 11)/11, and [0, 1/2) holds residues 0..=5
    let mut residue = 1u32;
    let mut hits = 0;
    let mut oracle_period = None;
    for k in 1..=10 {
        hits += u32::from(residue <= 5);
        residue = residue * 2 % 11;
        if residue == 1 && oracle_period.is_none() {
            oracle_period = Some(k);
        }
    }
    let ok = period == Some(10) && oracle_period == Some(10) && a10 == ratio(1, 2) && a10 == ratio(hits as i64, 10);
    assert!(verdict(8, ok, format!("period {period:?}, A_10 f(1/11) = {a10}")));
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_09_monte_carlo_inequality() {
    let system = IntervalSystem::rotation(GOLDEN_ALPHA).unwrap();
    let plan = SamplePlan::random(100_000, SEED).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                verify::check_maximal_inequality_mc(
                    &system,
                    &IntervalObservable::Cosine,
                    verify::IntervalLambda::Constant(0.0),
                    Horizon::Finite(50),
                    Some(&plan),
                )
                .unwrap()
            })
    };
    let single = run(1);
    let multi = run(4);
    let ReportValue::Estimate { mean, stderr, samples } = single.value else {
        panic!("estimate expected")
    };
    let ReportValue::Estimate {
        mean: mean4,
        stderr: stderr4,
        ..
    } = multi.value
    else {
        panic!("estimate expected")
    };
    let deterministic = mean.to_bits() == mean4.to_bits() && stderr.to_bits() == stderr4.to_bits() && single == multi;
    let rerun = run(4);
    let ok = single.passed() && mean >= -3.0 * stderr && samples == 100_000 && deterministic && rerun == multi;
    assert!(verdict(
        9,
        ok,
        format!("estimate {mean:.6} +- {stderr:.6} over {samples} samples; bit-identical with 1 and 4 threads: {deterministic}")
    ));
}

// ---------------------------------------------------------------------------

fn golden_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run_cli(args: &[&str]) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ergodic"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn criterion_10_cli_golden_files_and_exit_codes() {
    let dir = golden_dir();
    let swap = dir.join("swap.json").display().to_string();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let data = |name: &str| data.join(name).display().to_string();
    let cases: [(&[&str], &str); 3] = [
        (&["validate", &swap], "validate.json"),
        (&["check", "maximal", &swap, "--lambda", "3/5", "--N", "inf"], "check_maximal.json"),
        (
            &["decompose", &swap, "--x", "0", "--N", "2", "--m", "7", "--lambda", "1/2", "--trace"],
            "decompose_trace.json",
        ),
    ];
    let mut matched = 0;
    for (args, file) in cases {
        let expected = std::fs::read_to_string(dir.join(file)).unwrap();
        let (code, out) = run_cli(args);
        matched += usize::from(code == Some(0) && out == expected);
    }
    let (pass_code, _) = run_cli(&["validate", &swap]);
    let (fail_code, _) = run_cli(&[
        "check", "truncation", &data("swap_53.json"), "--lambda", "-1", "--N", "2", "--s", "1,3,5",
    ]);
    let (bad_code, _) = run_cli(&["validate", &data("malformed.json")]);
    let (invalid_code, _) = run_cli(&["validate", &data("unbalanced.json")]);
    let codes = [pass_code, fail_code, bad_code, invalid_code];
    let ok = matched == 3 && codes == [Some(0), Some(1), Some(2), Some(2)];
    assert!(verdict(
        10,
        ok,
        format!("{matched}/3 golden files byte-identical; exit codes pass/fail/malformed/invalid = {codes:?}")
    ));
}

#[test]
fn library_average_matches_oracle_on_swap() {
    let swap = FiniteSystem::cycle(2).unwrap();
    let f = Observable::from_ints(&[1, 0]);
    let raw = Raw::of(&swap);
    assert_eq!(averages::birkhoff_averages(&f, &swap, 0, 6).unwrap(), raw.averages(f.values(), 0, 6));
}
