//! Text and JSON formats: the signature mini-language, rationals, structure
//! files, action bundles and point lists.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tamealt_core::action::{ActionError, Perm};
use tamealt_core::algebra::{AlgebraError, AlgebraStructure};
use tamealt_core::ffield::{FieldError, PrimeField};
use tamealt_core::operad::{OperadError, Operation, Signature};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad signature token `{0}` (expected b2, t3 or a<d>)")]
    SignatureToken(String),
    #[error("bad rational `{0}`")]
    Rational(String),
    #[error("bad vector list `{0}`")]
    Vectors(String),
    #[error("structure file: {0}")]
    Structure(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Operad(#[from] OperadError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

/// `b2,t3,a4` → operations `s0, s1, s2` of arities 2, 3, 4.
pub fn parse_signature(src: &str) -> Result<Signature, FormatError> {
    let arities = src
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|tok| {
            let bad = || FormatError::SignatureToken(tok.to_owned());
            match tok {
                "b2" => Ok(2),
                "t3" => Ok(3),
                _ => tok
                    .strip_prefix('a')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&d| d > 0)
                    .ok_or_else(bad),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Signature::with_arities(&arities)?)
}

/// Inverse of [`parse_signature`] up to operation names.
pub fn signature_spec(sig: &Signature) -> String {
    sig.ops()
        .iter()
        .map(|o| match o.arity {
            2 => "b2".to_owned(),
            3 => "t3".to_owned(),
            d => format!("a{d}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// `a/b`, an integer, or a finite decimal, read exactly.
pub fn parse_rational(src: &str) -> Result<BigRational, FormatError> {
    let s = src.trim();
    let bad = || FormatError::Rational(src.to_owned());
    let int = |t: &str| t.parse::<BigInt>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once('/') {
        let den = int(b)?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(int(a)?, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole = if whole.is_empty() || whole == "-" { "0" } else { whole };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let w = int(whole)?;
        let f = int(frac)?;
        let num = if negative { w * &scale - f } else { w * &scale + f };
        return Ok(BigRational::new(num, scale));
    }
    Ok(BigRational::from_integer(int(s)?))
}

pub fn rational_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `1,2;0,1` → `[[1,2],[0,1]]`.
pub fn parse_vectors(src: &str) -> Result<Vec<Vec<u32>>, FormatError> {
    src.split(';')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.split(',')
                .map(|x| x.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| FormatError::Vectors(src.to_owned()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct OperationJson {
    name: String,
    arity: usize,
}

fn nest(flat: &[u32], k: usize, depth: usize) -> Value {
    if depth == 0 {
        return Value::Array(flat.iter().map(|&x| Value::from(x)).collect());
    }
    let chunk = flat.len() / k;
    Value::Array(flat.chunks(chunk).map(|c| nest(c, k, depth - 1)).collect())
}

fn flatten(v: &Value, k: usize, depth: usize, out: &mut Vec<u32>) -> Result<(), FormatError> {
    let bad = |m: &str| FormatError::Structure(m.to_owned());
    let arr = v.as_array().ok_or_else(|| bad("tensor entries must be arrays"))?;
    if arr.len() != k {
        return Err(bad("tensor array has the wrong length"));
    }
    for x in arr {
        if depth == 0 {
            let n = x.as_u64().ok_or_else(|| bad("tensor entries must be nonnegative integers"))?;
            out.push(u32::try_from(n).map_err(|_| bad("tensor entry too large"))?);
        } else {
            flatten(x, k, depth - 1, out)?;
        }
    }
    Ok(())
}

/// `{p, k, signature, tensors}`, tensors nested by input index and then
/// output coordinate, listed in signature order.
pub fn structure_to_json(alg: &AlgebraStructure) -> Value {
    let sig = alg.signature();
    let mut tensors = Map::new();
    for (op, o) in sig.ops().iter().enumerate() {
        tensors.insert(o.name.clone(), nest(alg.tensor(op), alg.k(), o.arity));
    }
    let ops: Vec<OperationJson> = sig
        .ops()
        .iter()
        .map(|o| OperationJson {
            name: o.name.clone(),
            arity: o.arity,
        })
        .collect();
    let mut m = Map::new();
    m.insert("p".into(), alg.p().into());
    m.insert("k".into(), alg.k().into());
    m.insert("signature".into(), serde_json::to_value(ops).expect("plain data"));
    m.insert("tensors".into(), Value::Object(tensors));
    Value::Object(m)
}

pub fn structure_from_json(v: &Value) -> Result<AlgebraStructure, FormatError> {
    let bad = |m: &str| FormatError::Structure(m.to_owned());
    let p = v["p"].as_u64().ok_or_else(|| bad("missing p"))?;
    let k = v["k"].as_u64().ok_or_else(|| bad("missing k"))? as usize;
    let ops: Vec<OperationJson> = serde_json::from_value(v["signature"].clone())?;
    let sig = Signature::new(
        ops.into_iter()
            .map(|o| Operation {
                name: o.name,
                arity: o.arity,
            })
            .collect(),
    )?;
    let field = PrimeField::new(u32::try_from(p).map_err(|_| bad("p too large"))?)?;
    let tensors = v["tensors"].as_object().ok_or_else(|| bad("missing tensors"))?;
    let mut flat = Vec::new();
    for o in sig.ops() {
        let t = tensors
            .get(&o.name)
            .ok_or_else(|| FormatError::Structure(format!("missing tensor `{}`", o.name)))?;
        flatten(t, k, o.arity, &mut flat)?;
    }
    if tensors.len() != sig.len() {
        return Err(bad("tensor for an unknown operation"));
    }
    Ok(AlgebraStructure::from_flat(&sig, k, field, &flat)?)
}

/// `{degree, generators: {name: images}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionBundle {
    pub degree: usize,
    pub generators: BTreeMap<String, Vec<u32>>,
}

impl ActionBundle {
    pub fn from_perms<'a>(perms: impl IntoIterator<Item = (String, &'a Perm)>) -> Self {
        let generators: BTreeMap<String, Vec<u32>> = perms
            .into_iter()
            .map(|(name, p)| (name, p.images().to_vec()))
            .collect();
        let degree = generators.values().next().map_or(0, Vec::len);
        Self { degree, generators }
    }

    pub fn perms(&self) -> Result<BTreeMap<String, Perm>, FormatError> {
        self.generators
            .iter()
            .map(|(name, img)| {
                if img.len() != self.degree {
                    return Err(ActionError::DegreeMismatch {
                        expected: self.degree,
                        found: img.len(),
                    }
                    .into());
                }
                Ok((name.clone(), Perm::from_images(img.clone())?))
            })
            .collect()
    }
}
