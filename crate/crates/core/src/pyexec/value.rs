//! Public interchange values and the interpreter's internal aliasing values.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value as Json};

/// Element type of a numeric array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Bool,
    Int,
    Float,
}

impl DType {
    pub fn name(self) -> &'static str {
        match self {
            DType::Bool => "bool",
            DType::Int => "int64",
            DType::Float => "float64",
        }
    }

    fn parse(s: &str) -> Option<DType> {
        match s {
            "bool" => Some(DType::Bool),
            "int" | "int64" | "int32" => Some(DType::Int),
            "float" | "float64" | "float32" => Some(DType::Float),
            _ => None,
        }
    }

    /// Casts a value stored in an array of this dtype (numpy truncates
    /// floats toward zero when writing into integer arrays).
    pub fn cast(self, v: f64) -> f64 {
        match self {
            DType::Bool => {
                if v != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DType::Int => v.trunc(),
            DType::Float => v,
        }
    }
}

/// Rectangular 1-D or 2-D numeric array in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct NdArray {
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NdArray {
    pub fn from_vec(dtype: DType, data: Vec<f64>) -> Self {
        Self {
            dtype,
            shape: vec![data.len()],
            data,
        }
    }
}

/// A value crossing the interpreter boundary: function inputs, outputs and
/// expected results in test cases.
#[derive(Debug, Clone, PartialEq)]
pub enum PyValue {
    Int(BigInt),
    Real(f64),
    Bool(bool),
    List(Vec<PyValue>),
    Array(NdArray),
    None,
}

impl PyValue {
    pub fn int(v: i64) -> Self {
        PyValue::Int(BigInt::from(v))
    }

    pub fn real(v: f64) -> Self {
        PyValue::Real(v)
    }

    pub fn list(items: impl IntoIterator<Item = PyValue>) -> Self {
        PyValue::List(items.into_iter().collect())
    }

    pub fn ints(items: &[i64]) -> Self {
        PyValue::List(items.iter().map(|v| PyValue::int(*v)).collect())
    }

    pub fn reals(items: &[f64]) -> Self {
        PyValue::List(items.iter().map(|v| PyValue::Real(*v)).collect())
    }

    /// Numeric value of a scalar.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            PyValue::Int(i) => i.to_f64(),
            PyValue::Real(r) => Some(*r),
            PyValue::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, PyValue::Int(_) | PyValue::Real(_) | PyValue::Bool(_))
    }

    /// Flattened scalar leaves with the container shape, or `None` for a
    /// ragged or non-numeric value.
    pub fn flatten(&self) -> Option<(Vec<usize>, Vec<f64>)> {
        match self {
            PyValue::Array(a) => Some((a.shape.clone(), a.data.clone())),
            PyValue::List(items) => {
                let mut data = Vec::new();
                let mut inner: Option<Vec<usize>> = None;
                for it in items {
                    let (s, d) = if it.is_scalar() {
                        (vec![], vec![it.as_f64()?])
                    } else {
                        it.flatten()?
                    };
                    match &inner {
                        None => inner = Some(s),
                        Some(prev) if *prev != s => return None,
                        _ => {}
                    }
                    data.extend(d);
                }
                let mut shape = vec![items.len()];
                shape.extend(inner.unwrap_or_default());
                Some((shape, data))
            }
            _ if self.is_scalar() => Some((vec![], vec![self.as_f64()?])),
            _ => None,
        }
    }

    pub fn from_json(v: &Json) -> Result<PyValue, String> {
        Ok(match v {
            Json::Null => PyValue::None,
            Json::Bool(b) => PyValue::Bool(*b),
            Json::Number(n) => {
                if let Some(i) = n.as_i64() {
                    PyValue::int(i)
                } else if let Some(u) = n.as_u64() {
                    PyValue::Int(BigInt::from(u))
                } else {
                    PyValue::Real(n.as_f64().ok_or("unrepresentable number")?)
                }
            }
            Json::Array(items) => PyValue::List(
                items
                    .iter()
                    .map(PyValue::from_json)
                    .collect::<Result<_, _>>()?,
            ),
            Json::Object(map) => {
                if let Some(Json::String(digits)) = map.get("bigint") {
                    let i: BigInt = digits.parse().map_err(|_| format!("bad bigint `{digits}`"))?;
                    return Ok(PyValue::Int(i));
                }
                if let Some(Json::String(s)) = map.get("float") {
                    let r = match s.as_str() {
                        "nan" => f64::NAN,
                        "inf" => f64::INFINITY,
                        "-inf" => f64::NEG_INFINITY,
                        _ => return Err(format!("bad float `{s}`")),
                    };
                    return Ok(PyValue::Real(r));
                }
                let data = map.get("ndarray").ok_or("object values must be {\"ndarray\": ...}")?;
                let dtype = match map.get("dtype") {
                    Some(Json::String(s)) => DType::parse(s).ok_or(format!("unknown dtype `{s}`"))?,
                    None => DType::Float,
                    _ => return Err("dtype must be a string".into()),
                };
                let nested = PyValue::from_json(data)?;
                let (shape, data) = nested.flatten().ok_or("ndarray must be rectangular")?;
                if shape.is_empty() || shape.len() > 2 {
                    return Err("ndarray must be 1-D or 2-D".into());
                }
                PyValue::Array(NdArray {
                    dtype,
                    shape,
                    data: data.into_iter().map(|x| dtype.cast(x)).collect(),
                })
            }
            Json::String(s) => return Err(format!("strings are not values: `{s}`")),
        })
    }

    pub fn to_json(&self) -> Json {
        match self {
            PyValue::None => Json::Null,
            PyValue::Bool(b) => Json::Bool(*b),
            PyValue::Int(i) => match i.to_i64() {
                Some(v) => json!(v),
                None => json!({ "bigint": i.to_string() }),
            },
            PyValue::Real(r) => {
                if r.is_nan() {
                    json!({"float": "nan"})
                } else if r.is_infinite() {
                    json!({"float": if *r > 0.0 { "inf" } else { "-inf" }})
                } else {
                    json!(r)
                }
            }
            PyValue::List(items) => Json::Array(items.iter().map(|v| v.to_json()).collect()),
            PyValue::Array(a) => {
                let scalar = |x: f64| match a.dtype {
                    DType::Bool => Json::Bool(x != 0.0),
                    DType::Int => json!(x as i64),
                    DType::Float => json!(x),
                };
                let data = if a.shape.len() == 2 {
                    let cols = a.shape[1];
                    Json::Array(
                        (0..a.shape[0])
                            .map(|r| Json::Array(a.data[r * cols..(r + 1) * cols].iter().map(|x| scalar(*x)).collect()))
                            .collect(),
                    )
                } else {
                    Json::Array(a.data.iter().map(|x| scalar(*x)).collect())
                };
                json!({"ndarray": data, "dtype": a.dtype.name()})
            }
        }
    }
}

impl Serialize for PyValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PyValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Json::deserialize(d)?;
        PyValue::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PyValue::Int(i) => write!(f, "{i}"),
            PyValue::Real(r) => write!(f, "{r:?}"),
            PyValue::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            PyValue::None => write!(f, "None"),
            PyValue::List(items) => {
                write!(f, "[")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, "]")
            }
            PyValue::Array(a) => write!(f, "array({})", PyValue::Array(a.clone()).to_json()),
        }
    }
}

/// Shared, mutable array storage with a view offset (rows of a 2-D array
/// are views into the parent).
#[derive(Debug, Clone)]
pub(crate) struct Arr {
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub data: Rc<RefCell<Vec<f64>>>,
    pub offset: usize,
}

impl Arr {
    pub fn new(dtype: DType, shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self {
            dtype,
            shape,
            data: Rc::new(RefCell::new(data)),
            offset: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.shape[0]
    }

    pub fn size(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn values(&self) -> Vec<f64> {
        let d = self.data.borrow();
        d[self.offset..self.offset + self.size()].to_vec()
    }

    pub fn row_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn scalar(&self, x: f64) -> Value {
        match self.dtype {
            DType::Bool => Value::Bool(x != 0.0),
            DType::Int => Value::Int(BigInt::from(x as i64)),
            DType::Float => Value::Real(x),
        }
    }

    /// Element or row view at a normalized index.
    pub fn get(&self, i: usize) -> Value {
        if self.shape.len() == 1 {
            let x = self.data.borrow()[self.offset + i];
            self.scalar(x)
        } else {
            let rl = self.row_len();
            Value::Array(Arr {
                dtype: self.dtype,
                shape: self.shape[1..].to_vec(),
                data: Rc::clone(&self.data),
                offset: self.offset + i * rl,
            })
        }
    }

    pub fn set_flat(&self, i: usize, x: f64) {
        self.data.borrow_mut()[self.offset + i] = self.dtype.cast(x);
    }

    pub fn to_py(&self) -> NdArray {
        NdArray {
            dtype: self.dtype,
            shape: self.shape.clone(),
            data: self.values(),
        }
    }
}

pub(crate) type ListRef = Rc<RefCell<Vec<Value>>>;

/// Interpreter value; lists and arrays alias like Python objects.
#[derive(Debug, Clone)]
pub(crate) enum Value {
    Int(BigInt),
    Real(f64),
    Bool(bool),
    None,
    List(ListRef),
    Array(Arr),
    Range(i64, i64, i64),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Int(BigInt::from(v))
    }

    pub fn new_list(items: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Real(_) => "float",
            Value::Bool(_) => "bool",
            Value::None => "NoneType",
            Value::List(_) => "list",
            Value::Array(_) => "ndarray",
            Value::Range(..) => "range",
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Real(_) | Value::Bool(_))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => i.to_f64(),
            Value::Real(r) => Some(*r),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    pub fn as_bigint(&self) -> Option<BigInt> {
        match self {
            Value::Int(i) => Some(i.clone()),
            Value::Bool(b) => Some(BigInt::from(*b as i64)),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_bigint().and_then(|i| i.to_i64())
    }

    pub fn from_py(v: &PyValue) -> Value {
        match v {
            PyValue::Int(i) => Value::Int(i.clone()),
            PyValue::Real(r) => Value::Real(*r),
            PyValue::Bool(b) => Value::Bool(*b),
            PyValue::None => Value::None,
            PyValue::List(items) => Value::new_list(items.iter().map(Value::from_py).collect()),
            PyValue::Array(a) => Value::Array(Arr::new(a.dtype, a.shape.clone(), a.data.clone())),
        }
    }

    pub fn to_py(&self) -> PyValue {
        match self {
            Value::Int(i) => PyValue::Int(i.clone()),
            Value::Real(r) => PyValue::Real(*r),
            Value::Bool(b) => PyValue::Bool(*b),
            Value::None => PyValue::None,
            Value::List(items) => PyValue::List(items.borrow().iter().map(|v| v.to_py()).collect()),
            Value::Array(a) => PyValue::Array(a.to_py()),
            Value::Range(start, stop, step) => PyValue::List(
                range_values(*start, *stop, *step)
                    .into_iter()
                    .map(PyValue::int)
                    .collect(),
            ),
        }
    }

    pub fn truthy(&self) -> Result<bool, String> {
        Ok(match self {
            Value::Int(i) => !i.is_zero(),
            Value::Real(r) => *r != 0.0,
            Value::Bool(b) => *b,
            Value::None => false,
            Value::List(l) => !l.borrow().is_empty(),
            Value::Range(a, b, s) => !range_values(*a, *b, *s).is_empty(),
            Value::Array(a) => {
                if a.size() == 1 {
                    a.values()[0] != 0.0
                } else {
                    return Err("truth value of an array with more than one element is ambiguous".into());
                }
            }
        })
    }
}

pub(crate) fn range_values(start: i64, stop: i64, step: i64) -> Vec<i64> {
    let mut out = Vec::new();
    if step > 0 {
        let mut i = start;
        while i < stop {
            out.push(i);
            i += step;
        }
    } else if step < 0 {
        let mut i = start;
        while i > stop {
            out.push(i);
            i += step;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_scalars_keep_int_float_distinction() {
        let v: PyValue = serde_json::from_str("[1, 2.0, true]").unwrap();
        assert_eq!(v, PyValue::list([PyValue::int(1), PyValue::Real(2.0), PyValue::Bool(true)]));
    }

    #[test]
    fn ndarray_json() {
        let v: PyValue = serde_json::from_str(r#"{"ndarray": [[1, 2], [3, 4]], "dtype": "int64"}"#).unwrap();
        let PyValue::Array(a) = &v else { panic!() };
        assert_eq!(a.shape, vec![2, 2]);
        assert_eq!(a.data, vec![1.0, 2.0, 3.0, 4.0]);
        let back: PyValue = serde_json::from_value(v.to_json()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn ragged_array_rejected() {
        assert!(serde_json::from_str::<PyValue>(r#"{"ndarray": [[1], [2, 3]]}"#).is_err());
    }
}
