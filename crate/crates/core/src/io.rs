//! Canonical JSON for points:
//! `{"kind": "P"|"Q"|"B", "field": {p, e, D, modulus}, "data": ...}`.
//!
//! Elements are coefficient arrays of length `D` over the power basis. `data`
//! holds `n_plus_1` and one of `l` (P), `r` (Q, keyed by vector string) or
//! `family` (B, keyed by subspace string).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{rejected, Result};
use crate::field::{Element, FieldCtx};
use crate::linalg::{parse_vector_key, vector_key, Subspace, Vector};
use crate::points::{BPoint, PPoint, Point, QPoint, Variety};
use crate::space::Space;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldJson {
    pub p: u32,
    pub e: u32,
    #[serde(rename = "D")]
    pub degree: usize,
    pub modulus: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointJson {
    pub kind: String,
    pub field: FieldJson,
    pub data: Value,
}

#[derive(Serialize, Deserialize)]
struct PData {
    n_plus_1: usize,
    l: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct QData {
    n_plus_1: usize,
    r: BTreeMap<String, Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct BData {
    n_plus_1: usize,
    family: BTreeMap<String, Vec<Vec<u32>>>,
}

/// A point as read from JSON, before validation.
#[derive(Clone, Debug)]
pub enum RawPoint {
    P(Vector),
    /// values on [`Space::nonzero_vectors`]
    Q(Vec<Element>),
    /// functionals aligned with [`Space::subspaces`]
    B(Vec<Vector>),
}

impl RawPoint {
    pub fn variety(&self) -> Variety {
        match self {
            RawPoint::P(_) => Variety::P,
            RawPoint::Q(_) => Variety::Q,
            RawPoint::B(_) => Variety::B,
        }
    }

    /// Checks the defining axioms and normalizes.
    pub fn validate(self, space: &Space) -> Result<Point> {
        Ok(match self {
            RawPoint::P(l) => Point::P(PPoint::new(space, l)?),
            RawPoint::Q(r) => Point::Q(QPoint::new(space, r)?),
            RawPoint::B(f) => Point::B(BPoint::new(space, f)?),
        })
    }
}

pub fn field_json(field: &FieldCtx) -> FieldJson {
    FieldJson { p: field.p(), e: field.e(), degree: field.degree(), modulus: field.modulus().to_vec() }
}

pub fn field_from_json(f: &FieldJson) -> Result<FieldCtx> {
    if f.modulus.len() != f.degree + 1 {
        return rejected(format!("modulus has degree {}, but D = {}", f.modulus.len().saturating_sub(1), f.degree));
    }
    FieldCtx::with_modulus(f.p, f.e, f.modulus.clone())
}

fn enc(field: &FieldCtx, v: &[Element]) -> Vec<Vec<u32>> {
    v.iter().map(|&x| field.coeff_vec(x)).collect()
}

fn dec(field: &FieldCtx, v: &[Vec<u32>]) -> Result<Vector> {
    v.iter()
        .map(|c| {
            if c.len() != field.degree() {
                return rejected(format!("element has {} coefficients, expected D = {}", c.len(), field.degree()));
            }
            field.from_coeffs(c)
        })
        .collect()
}

pub fn point_to_json(space: &Space, x: &Point) -> Result<PointJson> {
    let f = space.field();
    let n_plus_1 = space.dim();
    let data = match x {
        Point::P(p) => serde_json::to_value(PData { n_plus_1, l: enc(f, p.coords()) })?,
        Point::Q(q) => {
            let r = space
                .nonzero_vectors()
                .iter()
                .zip(q.values())
                .map(|(v, &x)| (vector_key(v), f.coeff_vec(x)))
                .collect();
            serde_json::to_value(QData { n_plus_1, r })?
        }
        Point::B(b) => {
            let family = space
                .subspaces()
                .iter()
                .zip(b.family())
                .map(|(w, l)| (w.key(), enc(f, l.coords())))
                .collect();
            serde_json::to_value(BData { n_plus_1, family })?
        }
    };
    Ok(PointJson { kind: x.variety().name().to_string(), field: field_json(f), data })
}

pub fn point_to_string(space: &Space, x: &Point) -> Result<String> {
    Ok(serde_json::to_string_pretty(&point_to_json(space, x)?)? + "\n")
}

/// Parses the JSON envelope; returns the space it lives in and the unvalidated
/// point.
pub fn point_from_json(doc: &PointJson) -> Result<(Space, RawPoint)> {
    let field = field_from_json(&doc.field)?;
    let kind: Variety = doc.kind.parse()?;
    let n_plus_1 = doc
        .data
        .get("n_plus_1")
        .and_then(Value::as_u64)
        .ok_or_else(|| crate::Error::Rejected("data.n_plus_1 missing".into()))? as usize;
    let space = Space::with_field(field, n_plus_1)?;
    let f = space.field();
    let raw = match kind {
        Variety::P => {
            let d: PData = serde_json::from_value(doc.data.clone())?;
            RawPoint::P(dec(f, &d.l)?)
        }
        Variety::Q => {
            let d: QData = serde_json::from_value(doc.data.clone())?;
            let mut table = vec![None; space.nonzero_vectors().len()];
            for (k, c) in &d.r {
                let v = parse_vector_key(f, k)?;
                let i = match space.vector_index(&v) {
                    Some(i) if i > 0 && v.len() == n_plus_1 => i - 1,
                    _ => return rejected(format!("{k:?} is not a nonzero rational vector")),
                };
                table[i] = Some(dec(f, std::slice::from_ref(c))?[0]);
            }
            let table = table
                .into_iter()
                .zip(space.nonzero_vectors())
                .map(|(x, v)| x.ok_or_else(|| crate::Error::Rejected(format!("missing value for vector {}", vector_key(v)))))
                .collect::<Result<_>>()?;
            RawPoint::Q(table)
        }
        Variety::B => {
            let d: BData = serde_json::from_value(doc.data.clone())?;
            let mut family = vec![None; space.subspaces().len()];
            for (k, l) in &d.family {
                let w = Subspace::parse_key(f, n_plus_1, k)?;
                let i = match space.subspace_index(&w) {
                    Some(i) => i,
                    None => return rejected(format!("{k:?} is not a nonzero rational subspace")),
                };
                family[i] = Some(dec(f, l)?);
            }
            let family = family
                .into_iter()
                .zip(space.subspaces())
                .map(|(x, w)| x.ok_or_else(|| crate::Error::Rejected(format!("missing subspace key {}", w.key()))))
                .collect::<Result<_>>()?;
            RawPoint::B(family)
        }
    };
    Ok((space, raw))
}

pub fn point_from_str(text: &str) -> Result<(Space, RawPoint)> {
    let doc: PointJson = serde_json::from_str(text)?;
    point_from_json(&doc)
}
