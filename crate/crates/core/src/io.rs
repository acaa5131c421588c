//! JSON and CSV formats.
//!
//! Behavior files look like
//! `{"scenario":{"nA":2,"nB":2,"nX":2,"nY":2},"kind":"conditional","values":[...]}`.
//! A value may be a decimal or `"p/q"` string, a JSON number, or
//! `{"num": p, "den": q}`. Integers and fractions are exact; anything with a
//! decimal point or exponent is a float. One file must not mix the two.
//!
//! Output JSON has sorted keys and floats printed with 17 significant digits.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{Map, Number, Value};

use crate::behavior::{Behavior, BehaviorKind, BellScenario};
use crate::error::{BellError, Result};
use crate::numeric::{format_sig, Num, Policy, Rational, Scalar};
use crate::randomness::GuessCurvePoint;

/// A behavior whose policy is only known at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyBehavior {
    Exact(Behavior<Rational>),
    Float(Behavior<f64>),
}

impl AnyBehavior {
    pub fn policy(&self) -> Policy {
        match self {
            AnyBehavior::Exact(_) => Policy::Exact,
            AnyBehavior::Float(_) => Policy::Float,
        }
    }

    pub fn kind(&self) -> BehaviorKind {
        match self {
            AnyBehavior::Exact(b) => b.kind(),
            AnyBehavior::Float(b) => b.kind(),
        }
    }

    /// Float view; exact values are rounded.
    pub fn to_float(&self) -> Behavior<f64> {
        match self {
            AnyBehavior::Exact(b) => b.map(Num::to_f64).expect("rounding keeps a valid table"),
            AnyBehavior::Float(b) => b.clone(),
        }
    }
}

pub fn parse_scalar(v: &Value) -> Result<Scalar> {
    match v {
        Value::String(s) => s.parse(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Scalar::Exact(Rational::from_integer(BigInt::from(i))))
            } else if let Some(u) = n.as_u64() {
                Ok(Scalar::Exact(Rational::from_integer(BigInt::from(u))))
            } else {
                Ok(Scalar::Float(n.as_f64().ok_or_else(|| BellError::Parse(format!("bad number {n}")))?))
            }
        }
        Value::Object(m) => {
            let part = |k: &str| -> Result<BigInt> {
                match m.get(k) {
                    Some(Value::Number(n)) if n.is_i64() || n.is_u64() => Ok(n.to_string().parse().expect("integer")),
                    Some(Value::String(s)) => s.trim().parse().map_err(|_| BellError::Parse(format!("bad {k}: `{s}`"))),
                    _ => Err(BellError::Parse(format!("rational object needs integer `{k}`"))),
                }
            };
            let (n, d) = (part("num")?, part("den")?);
            if d == BigInt::from(0) {
                return Err(BellError::Parse("zero denominator".into()));
            }
            Ok(Scalar::Exact(Rational::new(n, d)))
        }
        other => Err(BellError::Parse(format!("not a number: {other}"))),
    }
}

pub fn parse_behavior_value(v: &Value) -> Result<AnyBehavior> {
    let obj = v.as_object().ok_or_else(|| BellError::Parse("behavior must be a JSON object".into()))?;
    let scenario: BellScenario = serde_json::from_value(
        obj.get("scenario").cloned().ok_or_else(|| BellError::Parse("missing `scenario`".into()))?,
    )?;
    let kind: BehaviorKind =
        serde_json::from_value(obj.get("kind").cloned().ok_or_else(|| BellError::Parse("missing `kind`".into()))?)?;
    let values = obj
        .get("values")
        .and_then(Value::as_array)
        .ok_or_else(|| BellError::Parse("missing `values` array".into()))?
        .iter()
        .map(parse_scalar)
        .collect::<Result<Vec<_>>>()?;
    match Scalar::common_policy(&values)? {
        Some(Policy::Float) => {
            Ok(AnyBehavior::Float(Behavior::new(scenario, kind, values.iter().map(Scalar::to_f64).collect())?))
        }
        _ => Ok(AnyBehavior::Exact(Behavior::new(
            scenario,
            kind,
            values.iter().map(Rational::from_scalar).collect::<Result<_>>()?,
        )?)),
    }
}

pub fn parse_behavior(text: &str) -> Result<AnyBehavior> {
    parse_behavior_value(&serde_json::from_str(text)?)
}

/// JSON for one number: `{"num","den"}` for rationals, a float otherwise.
pub fn scalar_to_json(s: &Scalar) -> Value {
    match s {
        Scalar::Exact(r) => match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => {
                let mut m = Map::new();
                m.insert("num".into(), Value::from(n));
                m.insert("den".into(), Value::from(d));
                Value::Object(m)
            }
            _ => Value::String(s.to_string()),
        },
        Scalar::Float(x) => float_json(*x),
    }
}

pub fn float_json(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn num_to_json<T: Num>(v: &T) -> Value {
    scalar_to_json(&v.to_scalar())
}

pub fn values_to_json<T: Num>(values: &[T]) -> Value {
    Value::Array(values.iter().map(num_to_json).collect())
}

pub fn table_to_json<T: Num>(scenario: BellScenario, kind: BehaviorKind, values: &[T]) -> Value {
    let mut m = Map::new();
    m.insert("scenario".into(), serde_json::to_value(scenario).expect("scenario serialises"));
    m.insert("kind".into(), Value::String(kind.to_string()));
    m.insert("values".into(), values_to_json(values));
    Value::Object(m)
}

pub fn behavior_to_json<T: Num>(b: &Behavior<T>) -> Value {
    table_to_json(b.scenario(), b.kind(), b.values())
}

/// Compact JSON with sorted keys, floats at 17 significant digits, and a
/// trailing newline.
pub fn to_canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                out.push_str(&float_text(n.as_f64().expect("finite")));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialises")),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serialises"));
                out.push(':');
                write_value(&m[k], out);
            }
            out.push('}');
        }
    }
}

/// 17 significant digits, always recognisable as a float on re-read.
fn float_text(x: f64) -> String {
    let s = format_sig(x, 17);
    if s.contains(['.', 'e', 'n', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

pub const CURVE_HEADER: &str = "beta,kappa,pg,hmin";

/// CSV with header `beta,kappa,pg,hmin`, 12 significant digits, LF endings.
pub fn curve_to_csv(points: &[GuessCurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        let row = [p.beta_obs, p.kappa, p.pg, p.hmin].map(|x| format_sig(x, 12)).join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn curve_point_to_json(p: &GuessCurvePoint) -> Value {
    let mut m = Map::new();
    m.insert("beta".into(), float_json(p.beta_obs));
    m.insert("kappa".into(), float_json(p.kappa));
    m.insert("pg".into(), float_json(p.pg));
    m.insert("hmin".into(), float_json(p.hmin));
    m.insert("label".into(), Value::String("analytic bound".into()));
    Value::Object(m)
}
