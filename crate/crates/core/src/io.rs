//! JSON forms of twisted polygons.
//!
//! `{"d", "n", "coeffs", "backend", "precision"}` with `coeffs[j][k − 1]`
//! holding `a_{j,k}` as text: `p/q` for rationals, round-trippable decimal
//! strings (or `"(re im)"`) for floats. An optional `"tag"` names the
//! operation that produced the file.

use rug::{Complex, Rational};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::Scalar;
use crate::error::{Error, Result};
use crate::polygon::TwistedCoords;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rational,
    Float,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(Backend::Rational),
            "float" => Ok(Backend::Float),
            _ => Err(Error::Parse(format!("unknown backend {s:?}"))),
        }
    }
}

/// The wire layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonFile {
    pub d: usize,
    pub n: usize,
    pub coeffs: Vec<Vec<String>>,
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

/// Coordinates on either backend.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCoords {
    Rational(TwistedCoords<Rational>),
    Float(TwistedCoords<Complex>),
}

impl AnyCoords {
    pub fn d(&self) -> usize {
        match self {
            AnyCoords::Rational(c) => c.d(),
            AnyCoords::Float(c) => c.d(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnyCoords::Rational(c) => c.n(),
            AnyCoords::Float(c) => c.n(),
        }
    }

    /// Float coordinates at `precision`; rationals are rounded.
    pub fn into_float(self, precision: u32) -> Result<TwistedCoords<Complex>> {
        match self {
            AnyCoords::Float(c) => Ok(c),
            AnyCoords::Rational(c) => {
                let rows = c
                    .rows()
                    .iter()
                    .map(|r| r.iter().map(|x| Complex::from_rational(x, &precision)).collect())
                    .collect();
                TwistedCoords::new(c.d(), rows)
            }
        }
    }
}

/// Scalars with a wire form.
pub trait WireScalar: Scalar {
    fn wrap(c: TwistedCoords<Self>) -> AnyCoords;
}

impl WireScalar for Rational {
    fn wrap(c: TwistedCoords<Self>) -> AnyCoords {
        AnyCoords::Rational(c)
    }
}

impl WireScalar for Complex {
    fn wrap(c: TwistedCoords<Self>) -> AnyCoords {
        AnyCoords::Float(c)
    }
}

fn to_file<S: Scalar>(c: &TwistedCoords<S>, backend: Backend, precision: Option<u32>, tag: Option<&str>) -> PolygonFile {
    PolygonFile {
        d: c.d(),
        n: c.n(),
        coeffs: c.rows().iter().map(|r| r.iter().map(Scalar::to_text).collect()).collect(),
        backend,
        precision,
        tag: tag.map(str::to_string),
    }
}

impl PolygonFile {
    pub fn from_rational(c: &TwistedCoords<Rational>, tag: Option<&str>) -> Self {
        to_file(c, Backend::Rational, None, tag)
    }

    pub fn from_float(c: &TwistedCoords<Complex>, tag: Option<&str>) -> Self {
        to_file(c, Backend::Float, Some(*c.ctx()), tag)
    }

    pub fn from_any(c: &AnyCoords, tag: Option<&str>) -> Self {
        match c {
            AnyCoords::Rational(c) => Self::from_rational(c, tag),
            AnyCoords::Float(c) => Self::from_float(c, tag),
        }
    }

    fn parse_rows<S: Scalar>(&self, ctx: &S::Ctx) -> Result<TwistedCoords<S>> {
        if self.coeffs.len() != self.n {
            return Err(Error::Parse(format!("expected {} coefficient rows, found {}", self.n, self.coeffs.len())));
        }
        let rows = self
            .coeffs
            .iter()
            .map(|r| {
                if r.len() != self.d {
                    return Err(Error::Parse(format!("expected {} coefficients per row, found {}", self.d, r.len())));
                }
                r.iter().map(|s| S::parse_text(s, ctx)).collect()
            })
            .collect::<Result<Vec<Vec<S>>>>()?;
        TwistedCoords::new(self.d, rows)
    }

    /// Float files without a precision use `default_precision`.
    pub fn into_coords(&self, default_precision: u32) -> Result<AnyCoords> {
        match self.backend {
            Backend::Rational => Ok(AnyCoords::Rational(self.parse_rows(&())?)),
            Backend::Float => {
                let prec = self.precision.unwrap_or(default_precision);
                if prec < 2 {
                    return Err(Error::contract(format!("precision {prec} is too small")));
                }
                Ok(AnyCoords::Float(self.parse_rows(&prec)?))
            }
        }
    }
}

/// Parses a single polygon object, or the first polygon of an orbit array.
pub fn parse_polygon(text: &str, default_precision: u32) -> Result<AnyCoords> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = match v {
        Value::Array(mut items) if !items.is_empty() => items.swap_remove(0),
        Value::Array(_) => return Err(Error::Parse("empty orbit".into())),
        other => other,
    };
    let file: PolygonFile = serde_json::from_value(obj).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_coords(default_precision)
}
