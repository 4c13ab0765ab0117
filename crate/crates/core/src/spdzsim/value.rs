use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::sfix::SFixValue;
use crate::pyexec::PyValue;

/// Element type of a simulated container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElemKind {
    Sint,
    Sfix,
    Cint,
    Cfix,
}

impl ElemKind {
    pub fn name(self) -> &'static str {
        match self {
            ElemKind::Sint => "sint",
            ElemKind::Sfix => "sfix",
            ElemKind::Cint => "cint",
            ElemKind::Cfix => "cfix",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sint" => ElemKind::Sint,
            "sfix" => ElemKind::Sfix,
            "cint" => ElemKind::Cint,
            "cfix" => ElemKind::Cfix,
            _ => return None,
        })
    }

    pub fn is_secret(self) -> bool {
        matches!(self, ElemKind::Sint | ElemKind::Sfix)
    }
}

impl fmt::Display for ElemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A value produced by the simulator. A secret bit is an `SInt` holding 0
/// or 1.
#[derive(Debug, Clone, PartialEq)]
pub enum SecretValue {
    SInt(i128),
    SFix(SFixValue),
    ClearInt(i128),
    ClearReal(f64),
    ClearBool(bool),
    Array { kind: ElemKind, items: Vec<SecretValue> },
    Matrix { kind: ElemKind, rows: Vec<Vec<SecretValue>> },
    List(Vec<SecretValue>),
    None,
}

impl SecretValue {
    /// The value as the reference interpreter would print it.
    pub fn to_py(&self) -> PyValue {
        match self {
            SecretValue::SInt(v) | SecretValue::ClearInt(v) => PyValue::Int(BigInt::from(*v)),
            SecretValue::SFix(x) => PyValue::Real(x.to_f64()),
            SecretValue::ClearReal(x) => PyValue::Real(*x),
            SecretValue::ClearBool(b) => PyValue::Bool(*b),
            SecretValue::Array { items, .. } | SecretValue::List(items) => PyValue::List(items.iter().map(|v| v.to_py()).collect()),
            SecretValue::Matrix { rows, .. } => {
                PyValue::List(rows.iter().map(|r| PyValue::List(r.iter().map(|v| v.to_py()).collect())).collect())
            }
            SecretValue::None => PyValue::None,
        }
    }
}

impl fmt::Display for SecretValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_py())
    }
}
