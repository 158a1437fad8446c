//! System-description files and certificate export.
//!
//! A system file is a JSON object tagged by `"type"`:
//!
//! ```json
//! {"type":"finite","weights":["1/2","1/2"],"map":[1,0],"observable":["1","0"]}
//! {"type":"rotation","alpha":0.6180339887,"observable":{"kind":"cos2pi"}}
//! {"type":"doubling","denominator":11,"observable":{"kind":"indicator","lo":"0","hi":"1/2"}}
//! {"type":"interval-exchange","lengths":["1/3","2/3"],"permutation":[1,0]}
//! {"type":"identity"}
//! ```
//!
//! Rationals are `"p/q"` strings. A file may also be an envelope
//! `{"system": {...}, "reports": [...]}` as written by the `report` command.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covering::{Segment, StringDecomposition, TailBound};
use crate::dynamics::{
    doubling_grid, DynamicsError, FiniteSystem, IntervalObservable, IntervalSystem, Observable,
};
use crate::rational::{format_rational, serde_text, Rational};
use crate::verify::VerificationReport;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableSpec {
    #[default]
    Cos2pi,
    Indicator {
        #[serde(with = "serde_text")]
        lo: Rational,
        #[serde(with = "serde_text")]
        hi: Rational,
    },
    Constant {
        #[serde(with = "serde_text")]
        value: Rational,
    },
}

impl ObservableSpec {
    pub fn build(&self) -> IntervalObservable {
        match self {
            ObservableSpec::Cos2pi => IntervalObservable::Cosine,
            ObservableSpec::Indicator { lo, hi } => IntervalObservable::Indicator {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            ObservableSpec::Constant { value } => IntervalObservable::Constant(value.clone()),
        }
    }
}

fn is_default_observable(spec: &ObservableSpec) -> bool {
    *spec == ObservableSpec::Cos2pi
}

/// On-disk form of a system together with its observable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SystemDescription {
    Finite(FiniteDescription),
    Rotation(RotationDescription),
    Doubling(DoublingDescription),
    IntervalExchange(ExchangeDescription),
    Identity(IdentityDescription),
}

// Each variant is decoded on its own (after reading the tag) so that errors
// keep their line and column.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteDescription {
    #[serde(rename = "type", default, skip_serializing)]
    tag: String,
    #[serde(with = "serde_text::vec")]
    pub weights: Vec<Rational>,
    pub map: Vec<usize>,
    #[serde(with = "serde_text::vec")]
    pub observable: Vec<Rational>,
    #[serde(default, with = "serde_text::option", skip_serializing_if = "Option::is_none")]
    pub sup_bound: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationDescription {
    #[serde(rename = "type", default, skip_serializing)]
    tag: String,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "is_default_observable")]
    pub observable: ObservableSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingDescription {
    #[serde(rename = "type", default, skip_serializing)]
    tag: String,
    /// Odd `q`: the system is the exact orbit grid `{1/q, ..., (q-1)/q}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<u64>,
    #[serde(default, skip_serializing_if = "is_default_observable")]
    pub observable: ObservableSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeDescription {
    #[serde(rename = "type", default, skip_serializing)]
    tag: String,
    #[serde(with = "serde_text::vec")]
    pub lengths: Vec<Rational>,
    pub permutation: Vec<usize>,
    #[serde(default, skip_serializing_if = "is_default_observable")]
    pub observable: ObservableSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityDescription {
    #[serde(rename = "type", default, skip_serializing)]
    tag: String,
    #[serde(default, skip_serializing_if = "is_default_observable")]
    pub observable: ObservableSpec,
}

/// `{"system": ..., "reports": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<S = SystemDescription> {
    pub system: S,
    #[serde(default)]
    pub reports: Vec<VerificationReport>,
}

/// A loaded, constructed system.
#[derive(Debug, Clone)]
pub enum LoadedSystem {
    Finite {
        system: FiniteSystem,
        observable: Observable,
    },
    Interval {
        system: IntervalSystem,
        observable: IntervalObservable,
        /// Exact point grid (doubling with a denominator).
        grid: Option<Vec<Rational>>,
    },
}

impl LoadedSystem {
    /// The exact finite model: the system itself, or the finite image of an
    /// interval map on its declared grid.
    pub fn finite_view(&self) -> Option<(FiniteSystem, Observable)> {
        match self {
            LoadedSystem::Finite { system, observable } => {
                Some((system.clone(), observable.clone()))
            }
            LoadedSystem::Interval {
                system,
                observable,
                grid: Some(points),
            } => {
                let finite = system.finite_image(points).ok()?;
                let f = observable.restrict(points)?;
                Some((finite, f))
            }
            LoadedSystem::Interval { .. } => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}, column {column}, at `{path}`: {message}")]
    Syntax {
        line: usize,
        column: usize,
        path: String,
        message: String,
    },
    #[error("invalid system: {0}")]
    Invalid(#[from] DynamicsError),
    #[error("doubling grid denominator must be odd and at least 3, got {0}")]
    EvenDenominator(u64),
}

impl SystemDescription {
    pub fn from_finite(system: &FiniteSystem, f: &Observable) -> Self {
        let bound = f.sup_bound().clone();
        let tight = f.values().iter().map(num_traits::Signed::abs).max();
        SystemDescription::Finite(FiniteDescription {
            tag: String::new(),
            weights: system.weights().to_vec(),
            map: system.map().to_vec(),
            observable: f.values().to_vec(),
            sup_bound: (tight.as_ref() != Some(&bound)).then_some(bound),
        })
    }

    pub fn rotation(alpha: f64, observable: ObservableSpec) -> Self {
        SystemDescription::Rotation(RotationDescription {
            tag: String::new(),
            alpha,
            observable,
        })
    }

    pub fn build(&self) -> Result<LoadedSystem, LoadError> {
        Ok(match self {
            SystemDescription::Finite(FiniteDescription {
                weights,
                map,
                observable,
                sup_bound,
                ..
            }) => {
                let system = FiniteSystem::new(weights.clone(), map.clone())?;
                let observable = match sup_bound {
                    Some(b) => Observable::with_sup_bound(observable.clone(), b.clone())?,
                    None => Observable::new(observable.clone()),
                };
                system.check_observable(&observable)?;
                LoadedSystem::Finite { system, observable }
            }
            SystemDescription::Rotation(RotationDescription {
                alpha, observable, ..
            }) => LoadedSystem::Interval {
                system: IntervalSystem::rotation(*alpha)?,
                observable: observable.build(),
                grid: None,
            },
            SystemDescription::Doubling(DoublingDescription {
                denominator,
                observable,
                ..
            }) => {
                if let Some(q) = denominator {
                    if q % 2 == 0 || *q < 3 {
                        return Err(LoadError::EvenDenominator(*q));
                    }
                }
                LoadedSystem::Interval {
                    system: IntervalSystem::Doubling,
                    observable: observable.build(),
                    grid: denominator.map(doubling_grid),
                }
            }
            SystemDescription::IntervalExchange(ExchangeDescription {
                lengths,
                permutation,
                observable,
                ..
            }) => LoadedSystem::Interval {
                system: IntervalSystem::exchange(lengths.clone(), permutation.clone())?,
                observable: observable.build(),
                grid: None,
            },
            SystemDescription::Identity(IdentityDescription { observable, .. }) => {
                LoadedSystem::Interval {
                    system: IntervalSystem::Identity,
                    observable: observable.build(),
                    grid: None,
                }
            }
        })
    }
}

fn syntax_error(err: serde_path_to_error::Error<serde_json::Error>) -> LoadError {
    let path = err.path().to_string();
    let inner = err.into_inner();
    let (line, column) = (inner.line(), inner.column());
    let message = inner.to_string();
    let suffix = format!(" at line {line} column {column}");
    LoadError::Syntax {
        line,
        column,
        path,
        message: message.strip_suffix(&suffix).unwrap_or(&message).to_string(),
    }
}

fn decode<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, LoadError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(syntax_error)
}

fn decode_variant<T: serde::de::DeserializeOwned>(
    text: &str,
    envelope: bool,
) -> Result<T, LoadError> {
    if envelope {
        decode::<Envelope<T>>(text).map(|e| e.system)
    } else {
        decode(text)
    }
}

/// Parses a system file (bare description or envelope).
pub fn parse_description(text: &str) -> Result<SystemDescription, LoadError> {
    let value: serde_json::Value = decode(text)?;
    let envelope = value.get("system").is_some();
    let body = if envelope { &value["system"] } else { &value };
    let tag = body.get("type").and_then(|t| t.as_str()).unwrap_or_default();
    let path = if envelope { "system.type" } else { "type" };
    Ok(match tag {
        "finite" => SystemDescription::Finite(decode_variant(text, envelope)?),
        "rotation" => SystemDescription::Rotation(decode_variant(text, envelope)?),
        "doubling" => SystemDescription::Doubling(decode_variant(text, envelope)?),
        "interval-exchange" => SystemDescription::IntervalExchange(decode_variant(text, envelope)?),
        "identity" => SystemDescription::Identity(decode_variant(text, envelope)?),
        other => {
            return Err(LoadError::Syntax {
                line: 1,
                column: 1,
                path: path.to_string(),
                message: format!(
                    "unknown system type `{other}`, expected one of finite, rotation, doubling, interval-exchange, identity"
                ),
            })
        }
    })
}

pub fn load_system(text: &str) -> Result<LoadedSystem, LoadError> {
    parse_description(text)?.build()
}

pub fn to_json(description: &SystemDescription) -> String {
    serde_json::to_string(description).expect("descriptions always serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentExport {
    pub kind: &'static str,
    pub start: usize,
    pub length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_sum: Option<String>,
}

/// JSON form of a decomposition certificate; sums are `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionExport {
    pub x: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub lambda: String,
    pub tail_start: usize,
    pub tail_sum: String,
    pub total_sum: String,
    pub segments: Vec<SegmentExport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<bool>>,
    pub certificate: String,
    pub tail_bound: TailBound,
}

impl DecompositionExport {
    pub fn new(
        dec: &StringDecomposition<Rational>,
        certificate: Result<(), String>,
        tail_bound: TailBound,
        trace: bool,
    ) -> Self {
        let segments = dec
            .segments
            .iter()
            .map(|s| match s {
                Segment::ZeroRun { start, length } => SegmentExport {
                    kind: "zero_run",
                    start: *start,
                    length: *length,
                    block_sum: None,
                },
                Segment::PositiveBlock {
                    start,
                    length,
                    block_sum,
                } => SegmentExport {
                    kind: "positive_block",
                    start: *start,
                    length: *length,
                    block_sum: Some(format_rational(block_sum)),
                },
            })
            .collect();
        Self {
            x: dec.x,
            n: dec.n,
            m: dec.m,
            lambda: format_rational(&dec.lambda_x),
            tail_start: dec.tail_start,
            tail_sum: format_rational(&dec.tail_sum()),
            total_sum: format_rational(&dec.total_sum()),
            segments,
            terms: trace.then(|| dec.terms.iter().map(format_rational).collect()),
            members: trace.then(|| dec.members.clone()),
            certificate: match certificate {
                Ok(()) => "pass".to_string(),
                Err(why) => format!("fail: {why}"),
            },
            tail_bound,
        }
    }
}
