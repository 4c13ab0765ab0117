//! Python arithmetic and comparison on interpreter values.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::value::{Arr, DType, Value};
use super::FaultKind;
use crate::frontend::{BinOp, CmpOp};

pub(crate) type OpResult = Result<Value, (FaultKind, String)>;

fn type_err(msg: impl Into<String>) -> (FaultKind, String) {
    (FaultKind::TypeError, msg.into())
}

fn zero_div(msg: &str) -> (FaultKind, String) {
    (FaultKind::ZeroDivision, msg.to_string())
}

/// Float floor division and modulo with CPython's exact algorithm.
pub(crate) fn float_divmod(vx: f64, wx: f64) -> (f64, f64) {
    let mut m = vx % wx;
    let mut div = (vx - m) / wx;
    if m != 0.0 {
        if (wx < 0.0) != (m < 0.0) {
            m += wx;
            div -= 1.0;
        }
    } else {
        m = 0.0f64.copysign(wx);
    }
    let floordiv = if div != 0.0 {
        let mut fd = div.floor();
        if div - fd > 0.5 {
            fd += 1.0;
        }
        fd
    } else {
        0.0f64.copysign(vx / wx)
    };
    (floordiv, m)
}

const MAX_INT_BITS: u64 = 1 << 16;

pub(crate) fn binop(op: BinOp, l: &Value, r: &Value) -> OpResult {
    if let (Value::Array(_), _) | (_, Value::Array(_)) = (l, r) {
        return array_binop(op, l, r);
    }
    match (l, r) {
        (Value::List(a), Value::List(b)) if op == BinOp::Add => {
            let mut out = a.borrow().clone();
            out.extend(b.borrow().iter().cloned());
            return Ok(Value::new_list(out));
        }
        (Value::List(a), n) | (n, Value::List(a)) if op == BinOp::Mul && matches!(n, Value::Int(_) | Value::Bool(_)) => {
            let times = n.as_i64().unwrap_or(0).max(0) as usize;
            let src = a.borrow();
            let mut out = Vec::with_capacity(src.len() * times);
            for _ in 0..times {
                out.extend(src.iter().cloned());
            }
            return Ok(Value::new_list(out));
        }
        _ => {}
    }
    if !l.is_number() || !r.is_number() {
        return Err(type_err(format!(
            "unsupported operand types for {}: {} and {}",
            op.symbol(),
            l.type_name(),
            r.type_name()
        )));
    }
    let both_int = !matches!(l, Value::Real(_)) && !matches!(r, Value::Real(_));
    if both_int {
        let a = l.as_bigint().unwrap_or_default();
        let b = r.as_bigint().unwrap_or_default();
        return int_binop(op, a, b);
    }
    let a = l.as_f64().unwrap_or(f64::NAN);
    let b = r.as_f64().unwrap_or(f64::NAN);
    float_binop(op, a, b).map(Value::Real)
}

fn int_binop(op: BinOp, a: BigInt, b: BigInt) -> OpResult {
    Ok(match op {
        BinOp::Add => Value::Int(a + b),
        BinOp::Sub => Value::Int(a - b),
        BinOp::Mul => Value::Int(a * b),
        BinOp::Div => {
            if b.is_zero() {
                return Err(zero_div("division by zero"));
            }
            Value::Real(int_true_div(&a, &b))
        }
        BinOp::FloorDiv => {
            if b.is_zero() {
                return Err(zero_div("integer division or modulo by zero"));
            }
            Value::Int(a.div_floor(&b))
        }
        BinOp::Mod => {
            if b.is_zero() {
                return Err(zero_div("integer division or modulo by zero"));
            }
            Value::Int(a.mod_floor(&b))
        }
        BinOp::Pow => {
            if b.is_negative() {
                let fa = a.to_f64().unwrap_or(f64::NAN);
                let fb = b.to_f64().unwrap_or(f64::NAN);
                return float_binop(BinOp::Pow, fa, fb).map(Value::Real);
            }
            let e = b.to_u64().unwrap_or(u64::MAX);
            if a.bits().saturating_mul(e) > MAX_INT_BITS {
                return Err((FaultKind::DomainError, "integer power too large".into()));
            }
            Value::Int(num_traits::pow(a, e as usize))
        }
        _ => return Err(type_err(format!("operator {} is outside the subset", op.symbol()))),
    })
}

fn int_true_div(a: &BigInt, b: &BigInt) -> f64 {
    match (a.to_i64(), b.to_i64()) {
        (Some(x), Some(y)) if x.unsigned_abs() < (1 << 53) && y.unsigned_abs() < (1 << 53) => {
            x as f64 / y as f64
        }
        _ => a.to_f64().unwrap_or(f64::NAN) / b.to_f64().unwrap_or(f64::NAN),
    }
}

pub(crate) fn float_binop(op: BinOp, a: f64, b: f64) -> Result<f64, (FaultKind, String)> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(zero_div("float division by zero"));
            }
            a / b
        }
        BinOp::FloorDiv => {
            if b == 0.0 {
                return Err(zero_div("float floor division by zero"));
            }
            float_divmod(a, b).0
        }
        BinOp::Mod => {
            if b == 0.0 {
                return Err(zero_div("float modulo"));
            }
            float_divmod(a, b).1
        }
        BinOp::Pow => {
            if a == 0.0 && b < 0.0 {
                return Err(zero_div("0.0 cannot be raised to a negative power"));
            }
            if a < 0.0 && b.fract() != 0.0 && b.is_finite() {
                return Err((FaultKind::DomainError, "negative number raised to a fractional power".into()));
            }
            let r = a.powf(b);
            if r.is_infinite() && a.is_finite() && b.is_finite() {
                return Err((FaultKind::DomainError, "numerical result out of range".into()));
            }
            r
        }
        _ => return Err(type_err(format!("operator {} is outside the subset", op.symbol()))),
    })
}

/// Elementwise numpy-style arithmetic with scalar broadcasting.
fn array_binop(op: BinOp, l: &Value, r: &Value) -> OpResult {
    let (ls, ld, lt) = array_operand(l)?;
    let (rs, rd, rt) = array_operand(r)?;
    let shape = broadcast_shape(&ls, &rs)?;
    let n: usize = shape.iter().product();
    let dtype = match op {
        BinOp::Div => DType::Float,
        _ => promote(lt, rt),
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = ld[if ld.len() == 1 { 0 } else { i % ld.len().max(1) }];
        let b = rd[if rd.len() == 1 { 0 } else { i % rd.len().max(1) }];
        let v = if dtype == DType::Int || dtype == DType::Bool {
            match op {
                BinOp::FloorDiv | BinOp::Mod if b == 0.0 => 0.0,
                BinOp::FloorDiv => (a / b).floor(),
                BinOp::Mod => a - b * (a / b).floor(),
                BinOp::Pow if b < 0.0 => {
                    return Err((FaultKind::DomainError, "integers to negative integer powers are not allowed".into()))
                }
                _ => float_binop(op, a, b)?,
            }
        } else {
            match op {
                BinOp::Div if b == 0.0 => a / b,
                BinOp::FloorDiv if b == 0.0 => f64::NAN,
                BinOp::Mod if b == 0.0 => f64::NAN,
                BinOp::Pow => a.powf(b),
                _ => float_binop(op, a, b)?,
            }
        };
        out.push(v);
    }
    let dtype = if dtype == DType::Bool && !matches!(op, BinOp::BitAnd | BinOp::BitOr) {
        DType::Int
    } else {
        dtype
    };
    Ok(Value::Array(Arr::new(dtype, shape, out.into_iter().map(|x| dtype.cast(x)).collect())))
}

fn promote(a: DType, b: DType) -> DType {
    match (a, b) {
        (DType::Float, _) | (_, DType::Float) => DType::Float,
        (DType::Int, _) | (_, DType::Int) => DType::Int,
        _ => DType::Bool,
    }
}

fn broadcast_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>, (FaultKind, String)> {
    if a.is_empty() {
        return Ok(b.to_vec());
    }
    if b.is_empty() || a == b {
        return Ok(a.to_vec());
    }
    // row broadcasting: (r, c) with (c,)
    if a.len() == 2 && b.len() == 1 && a[1] == b[0] {
        return Ok(a.to_vec());
    }
    if b.len() == 2 && a.len() == 1 && b[1] == a[0] {
        return Ok(b.to_vec());
    }
    Err(type_err(format!("operands could not be broadcast together with shapes {a:?} {b:?}")))
}

pub(crate) type ArrayParts = (Vec<usize>, Vec<f64>, DType);

/// Shape, flat data and dtype of an array-like operand (scalars have empty
/// shape).
pub(crate) fn array_operand(v: &Value) -> Result<ArrayParts, (FaultKind, String)> {
    match v {
        Value::Array(a) => Ok((a.shape.clone(), a.values(), a.dtype)),
        Value::Int(_) => Ok((vec![], vec![v.as_f64().unwrap_or(f64::NAN)], DType::Int)),
        Value::Bool(_) => Ok((vec![], vec![v.as_f64().unwrap_or(0.0)], DType::Bool)),
        Value::Real(r) => Ok((vec![], vec![*r], DType::Float)),
        Value::List(_) | Value::Range(..) => {
            let arr = to_array(v)?;
            Ok((arr.shape.clone(), arr.values(), arr.dtype))
        }
        Value::None => Err(type_err("None is not numeric")),
    }
}

/// `numpy.array(v)` conversion.
pub(crate) fn to_array(v: &Value) -> Result<Arr, (FaultKind, String)> {
    match v {
        Value::Array(a) => Ok(Arr::new(a.dtype, a.shape.clone(), a.values())),
        Value::Range(a, b, s) => {
            let data: Vec<f64> = super::value::range_values(*a, *b, *s).into_iter().map(|x| x as f64).collect();
            Ok(Arr::new(DType::Int, vec![data.len()], data))
        }
        Value::List(items) => {
            let items = items.borrow();
            let mut dtype = DType::Bool;
            let mut inner: Option<Vec<usize>> = None;
            let mut data = Vec::new();
            for it in items.iter() {
                let (s, d, t) = array_operand(it)?;
                if s.len() > 1 {
                    return Err(type_err("arrays deeper than 2-D are outside the subset"));
                }
                match &inner {
                    None => inner = Some(s),
                    Some(p) if *p != s => return Err(type_err("inhomogeneous array shape")),
                    _ => {}
                }
                dtype = promote(dtype, t);
                data.extend(d);
            }
            if items.is_empty() {
                dtype = DType::Float;
            }
            let mut shape = vec![items.len()];
            shape.extend(inner.unwrap_or_default());
            Ok(Arr::new(dtype, shape, data))
        }
        _ => {
            let (_, d, t) = array_operand(v)?;
            Ok(Arr::new(t, vec![1], d))
        }
    }
}

/// Numeric comparison across int, float and bool.
pub(crate) fn compare_numbers(a: &Value, b: &Value) -> Option<Ordering> {
    match (a.as_bigint(), b.as_bigint()) {
        (Some(x), Some(y)) => Some(x.cmp(&y)),
        _ => {
            let x = a.as_f64()?;
            let y = b.as_f64()?;
            x.partial_cmp(&y)
        }
    }
}

pub(crate) fn values_equal(a: &Value, b: &Value) -> bool {
    if a.is_number() && b.is_number() {
        return compare_numbers(a, b) == Some(Ordering::Equal);
    }
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::List(x), Value::List(y)) => {
            let x = x.borrow();
            let y = y.borrow();
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| values_equal(p, q))
        }
        _ => false,
    }
}

pub(crate) fn compare(op: CmpOp, a: &Value, b: &Value) -> OpResult {
    if let (Value::Array(_), _) | (_, Value::Array(_)) = (a, b) {
        let (ls, ld, _) = array_operand(a)?;
        let (rs, rd, _) = array_operand(b)?;
        let shape = broadcast_shape(&ls, &rs)?;
        let n: usize = shape.iter().product();
        let out = (0..n)
            .map(|i| {
                let x = ld[if ld.len() == 1 { 0 } else { i % ld.len() }];
                let y = rd[if rd.len() == 1 { 0 } else { i % rd.len() }];
                if cmp_f64(op, x, y) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        return Ok(Value::Array(Arr::new(DType::Bool, shape, out)));
    }
    match op {
        CmpOp::Eq => return Ok(Value::Bool(values_equal(a, b))),
        CmpOp::NotEq => return Ok(Value::Bool(!values_equal(a, b))),
        _ => {}
    }
    if !a.is_number() || !b.is_number() {
        return Err(type_err(format!(
            "'{}' not supported between {} and {}",
            op.symbol(),
            a.type_name(),
            b.type_name()
        )));
    }
    let ord = compare_numbers(a, b);
    Ok(Value::Bool(match ord {
        None => false,
        Some(o) => match op {
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::LtE => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::GtE => o != Ordering::Less,
            CmpOp::Eq => o == Ordering::Equal,
            CmpOp::NotEq => o != Ordering::Equal,
        },
    }))
}

fn cmp_f64(op: CmpOp, x: f64, y: f64) -> bool {
    match op {
        CmpOp::Lt => x < y,
        CmpOp::LtE => x <= y,
        CmpOp::Gt => x > y,
        CmpOp::GtE => x >= y,
        CmpOp::Eq => x == y,
        CmpOp::NotEq => x != y,
    }
}

pub(crate) fn negate(v: &Value) -> OpResult {
    match v {
        Value::Int(i) => Ok(Value::Int(-i.clone())),
        Value::Bool(b) => Ok(Value::int(-(*b as i64))),
        Value::Real(r) => Ok(Value::Real(-r)),
        Value::Array(a) => {
            let dtype = if a.dtype == DType::Bool { DType::Int } else { a.dtype };
            Ok(Value::Array(Arr::new(dtype, a.shape.clone(), a.values().into_iter().map(|x| -x).collect())))
        }
        _ => Err(type_err(format!("bad operand type for unary -: {}", v.type_name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floored_division_matches_python() {
        let cases = [
            (7.5, 2.0, 3.0, 1.5),
            (-7.5, 2.0, -4.0, 0.5),
            (7.5, -2.0, -4.0, -0.5),
            (-7.5, -2.0, 3.0, -1.5),
            (1.0, 0.1, 9.0, 0.09999999999999995),
        ];
        for (a, b, q, m) in cases {
            assert_eq!(float_divmod(a, b), (q, m), "{a} divmod {b}");
        }
    }

    #[test]
    fn int_floor_semantics() {
        let r = binop(BinOp::FloorDiv, &Value::int(-7), &Value::int(2)).unwrap();
        assert_eq!(r.as_i64(), Some(-4));
        let r = binop(BinOp::Mod, &Value::int(-7), &Value::int(2)).unwrap();
        assert_eq!(r.as_i64(), Some(1));
    }

    #[test]
    fn bool_arithmetic_is_int() {
        let r = binop(BinOp::Add, &Value::Bool(true), &Value::Bool(true)).unwrap();
        assert!(matches!(r, Value::Int(_)));
        let r = binop(BinOp::Mul, &Value::Bool(true), &Value::Real(2.5)).unwrap();
        assert!(matches!(r, Value::Real(x) if x == 2.5));
    }

    #[test]
    fn zero_division_kinds() {
        assert_eq!(binop(BinOp::Div, &Value::int(1), &Value::int(0)).unwrap_err().0, FaultKind::ZeroDivision);
        assert_eq!(binop(BinOp::Mod, &Value::Real(1.0), &Value::Real(0.0)).unwrap_err().0, FaultKind::ZeroDivision);
    }
}
