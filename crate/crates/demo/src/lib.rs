//! Browser bindings. Each export takes plain numbers or JSON text and returns
//! JSON text, so the page needs no generated type definitions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ergodic_core::averages::interval_averages;
use ergodic_core::covering;
use ergodic_core::io::{load_system, DecompositionExport};
use ergodic_core::rational::parse_rational;
use ergodic_core::verify::{self, IntervalLambda};
use ergodic_core::{Horizon, IntervalObservable, IntervalPoint, IntervalSystem, Observable, SamplePlan};

#[derive(Serialize)]
struct SeriesPoint {
    k: usize,
    average: f64,
    bound: f64,
}

#[derive(Serialize)]
struct Series {
    alpha: f64,
    x0: f64,
    points: Vec<SeriesPoint>,
}

fn text(err: impl std::fmt::Display) -> String {
    err.to_string()
}

/// `A_k cos 2πx (x0)` for the rotation by `alpha`, sampled at up to `points`
/// log-spaced `k`, with the envelope `1 / (k sin πα)`.
#[wasm_bindgen]
pub fn rotation_series(alpha: f64, x0: f64, k_max: usize, points: usize) -> Result<String, String> {
    if k_max == 0 || points == 0 {
        return Err("k_max and points must be positive".into());
    }
    let system = IntervalSystem::rotation(alpha).map_err(text)?;
    let averages = interval_averages(&IntervalObservable::Cosine, &system, &IntervalPoint::Float(x0), k_max)
        .map_err(text)?;
    let scale = (std::f64::consts::PI * alpha).sin();
    let mut ks: Vec<usize> = (0..points)
        .map(|i| {
            let t = if points == 1 { 1.0 } else { i as f64 / (points - 1) as f64 };
            ((k_max as f64).powf(t).round() as usize).clamp(1, k_max)
        })
        .collect();
    ks.dedup();
    let series = Series {
        alpha,
        x0,
        points: ks
            .into_iter()
            .map(|k| SeriesPoint {
                k,
                average: averages[k - 1],
                bound: 1.0 / (k as f64 * scale),
            })
            .collect(),
    };
    Ok(serde_json::to_string(&series).expect("series serializes"))
}

/// Greedy decomposition of the orbit of point `x` of a finite system file,
/// with its certificate and tail bound. `lambda` is one rational or a comma list.
#[wasm_bindgen]
pub fn decompose_system(system_json: &str, x: usize, n: usize, m: usize, lambda: &str) -> Result<String, String> {
    let loaded = load_system(system_json).map_err(text)?;
    let (sys, f) = loaded
        .finite_view()
        .ok_or("decompositions need a finite system")?;
    sys.validate().map_err(|v| format!("system is not measure preserving: {v}"))?;
    let values = lambda
        .split(',')
        .map(|t| parse_rational(t.trim()).map_err(text))
        .collect::<Result<Vec<_>, _>>()?;
    let lambda = match values.len() {
        1 => Observable::constant(values[0].clone(), sys.len()),
        len if len == sys.len() => Observable::new(values),
        len => return Err(format!("lambda has {len} values for {} points", sys.len())),
    };
    let dec = covering::decompose(&f, &sys, &lambda, x, n, m).map_err(text)?;
    let certificate = covering::verify_decomposition(&dec, &f, &sys, &lambda, x).map_err(text);
    let tail = covering::tail_bound_check(&dec, &f, &lambda, x, n);
    let export = DecompositionExport::new(&dec, certificate, tail, true);
    Ok(serde_json::to_string(&export).expect("export serializes"))
}

/// Monte Carlo `∫_{f*_N > λ} (f - λ)` for `cos 2πx` under the rotation by `alpha`.
#[wasm_bindgen]
pub fn maximal_mc(alpha: f64, lambda: f64, n: usize, samples: usize, seed: u64) -> Result<String, String> {
    if n == 0 {
        return Err("N must be positive".into());
    }
    let system = IntervalSystem::rotation(alpha).map_err(text)?;
    let plan = SamplePlan::random(samples, seed).map_err(text)?;
    let report = verify::check_maximal_inequality_mc(
        &system,
        &IntervalObservable::Cosine,
        IntervalLambda::Constant(lambda),
        Horizon::Finite(n),
        Some(&plan),
    )
    .map_err(text)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}
