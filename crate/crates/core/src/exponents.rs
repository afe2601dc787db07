//! Extended-real exponent arithmetic.
//!
//! Exponents live in `(0, ∞]`. Finite values are carried either as exact
//! rationals or as `f64`; mixing the two degrades to `f64`. Infinity is a
//! distinct variant with `1/∞ = 0`, and any operation whose result would be
//! indeterminate (`∞/∞`, a finite value divided by `∞`) returns an error.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExponentError {
    #[error("exponent {value} is outside the domain {domain}")]
    Domain { value: String, domain: &'static str },
    #[error("empty exponent tuple")]
    Empty,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("indeterminate form: {0}")]
    Indeterminate(&'static str),
    #[error("cannot parse exponent {0:?}")]
    Parse(String),
    #[error("not a permutation of 1..={len}: {detail}")]
    NotAPermutation { len: usize, detail: String },
    #[error("reciprocal sum {sum} is >= 1; the reduction needs it strictly below 1")]
    SecondCase { sum: String },
    #[error("reduction needs at least two spaces")]
    TooShort,
}

pub type Result<T> = std::result::Result<T, ExponentError>;

/// A finite non-negative number, exact or floating.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(BigRational),
    Approx(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => ratio_to_f64(r),
            Scalar::Approx(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Approx(x) => *x == 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    fn combine(
        &self,
        other: &Scalar,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational,
        approx: impl Fn(f64, f64) -> f64,
    ) -> Scalar {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(exact(a, b)),
            _ => Scalar::Approx(approx(self.to_f64(), other.to_f64())),
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.combine(other, |a, b| a * b, |a, b| a * b)
    }

    /// `self - other`, which must not be negative.
    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar> {
        if self < other {
            return Err(ExponentError::Domain {
                value: format!("{self} - {other}"),
                domain: "[0, inf)",
            });
        }
        Ok(self.combine(other, |a, b| a - b, |a, b| (a - b).max(0.0)))
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        if other.is_zero() {
            return Err(ExponentError::Indeterminate("division by zero"));
        }
        Ok(self.combine(other, |a, b| a / b, |a, b| a / b))
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Scalar::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Approx(x) => write!(f, "{x}"),
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator and denominator both overflow f64; fall back to logs
        let sign = if r.is_negative() { -1.0 } else { 1.0 };
        let ln = big_ln(r.numer()) - big_ln(r.denom());
        sign * ln.exp()
    })
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// A value in `(0, ∞]`.
#[derive(Debug, Clone)]
pub enum ExtReal {
    Finite(Scalar),
    Infinity,
}

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal::Infinity;

    pub fn integer(n: i64) -> Result<Self> {
        Self::from_scalar(Scalar::Exact(BigRational::from_integer(BigInt::from(n))))
    }

    pub fn rational(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(ExponentError::Indeterminate("zero denominator"));
        }
        Self::from_scalar(Scalar::Exact(BigRational::new(
            BigInt::from(numer),
            BigInt::from(denom),
        )))
    }

    pub fn from_ratio(r: BigRational) -> Result<Self> {
        Self::from_scalar(Scalar::Exact(r))
    }

    /// Floating-point exponent; `f64::INFINITY` maps to [`ExtReal::Infinity`].
    pub fn float(x: f64) -> Result<Self> {
        if x == f64::INFINITY {
            return Ok(ExtReal::Infinity);
        }
        Self::from_scalar(Scalar::Approx(x))
    }

    fn from_scalar(s: Scalar) -> Result<Self> {
        let positive = match &s {
            Scalar::Exact(r) => r.is_positive(),
            Scalar::Approx(x) => x.is_finite() && *x > 0.0,
        };
        if positive {
            Ok(ExtReal::Finite(s))
        } else {
            Err(ExponentError::Domain {
                value: s.to_string(),
                domain: "(0, inf]",
            })
        }
    }

    /// `1/x` for `x ∈ [0, ∞)`, with `1/0 = ∞`.
    pub fn from_reciprocal(s: &Scalar) -> Result<Self> {
        if s.is_zero() {
            return Ok(ExtReal::Infinity);
        }
        Self::from_scalar(Scalar::one().checked_div(s)?)
    }

    /// `1/self`, with `1/∞ = 0`.
    pub fn reciprocal(&self) -> Scalar {
        match self {
            ExtReal::Infinity => Scalar::zero(),
            ExtReal::Finite(s) => Scalar::one()
                .checked_div(s)
                .expect("finite exponents are positive"),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    pub fn is_exact(&self) -> bool {
        match self {
            ExtReal::Infinity => true,
            ExtReal::Finite(s) => s.is_exact(),
        }
    }

    /// Floating view; `∞` becomes `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Infinity => f64::INFINITY,
            ExtReal::Finite(s) => s.to_f64(),
        }
    }

    pub fn as_ratio(&self) -> Option<&BigRational> {
        match self {
            ExtReal::Finite(Scalar::Exact(r)) => Some(r),
            _ => None,
        }
    }

    /// `self / other`. `∞/finite = ∞`; `∞/∞` and `finite/∞` are errors.
    pub fn checked_div(&self, other: &ExtReal) -> Result<ExtReal> {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => {
                Err(ExponentError::Indeterminate("inf / inf"))
            }
            (ExtReal::Finite(_), ExtReal::Infinity) => {
                Err(ExponentError::Indeterminate("finite / inf leaves (0, inf]"))
            }
            (ExtReal::Infinity, ExtReal::Finite(_)) => Ok(ExtReal::Infinity),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Self::from_scalar(a.checked_div(b)?),
        }
    }

    pub fn checked_mul(&self, other: &ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.mul(b)),
            _ => ExtReal::Infinity,
        }
    }

    fn one() -> ExtReal {
        ExtReal::Finite(Scalar::one())
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => Ordering::Equal,
            (ExtReal::Infinity, _) => Ordering::Greater,
            (_, ExtReal::Infinity) => Ordering::Less,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Infinity => f.write_str("inf"),
            ExtReal::Finite(s) => s.fmt(f),
        }
    }
}

impl FromStr for ExtReal {
    type Err = ExponentError;

    /// Accepts integers, decimals (parsed exactly), `a/b` and `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if matches!(lower.as_str(), "inf" | "+inf" | "infinity" | "∞") {
            return Ok(ExtReal::Infinity);
        }
        let parse_err = || ExponentError::Parse(s.to_string());
        if let Some((n, d)) = t.split_once('/') {
            let n = parse_decimal(n.trim()).ok_or_else(parse_err)?;
            let d = parse_decimal(d.trim()).ok_or_else(parse_err)?;
            if d.is_zero() {
                return Err(parse_err());
            }
            return Self::from_ratio(n / d);
        }
        Self::from_ratio(parse_decimal(t).ok_or_else(parse_err)?)
    }
}

/// Exact value of a decimal literal such as `1.9`, `-2`, `3e-2`.
fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all.parse::<BigInt>().ok()?);
    let scale = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if neg { -value } else { value })
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Infinity => ser.serialize_str("inf"),
            ExtReal::Finite(Scalar::Approx(x)) => ser.serialize_f64(*x),
            ExtReal::Finite(Scalar::Exact(r)) => match (r.is_integer(), r.numer().to_u64()) {
                (true, Some(n)) => ser.serialize_u64(n),
                _ => ser.serialize_str(&format!("{}/{}", r.numer(), r.denom())),
            },
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number, an \"a/b\" string or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                ExtReal::from_ratio(BigRational::from_integer(BigInt::from(v))).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                ExtReal::integer(v).map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                // shortest round-trip text of the literal, read back exactly
                format!("{v}").parse().map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }

        de.deserialize_any(ExtVisitor)
    }
}

fn sum_reciprocals<'a>(values: impl IntoIterator<Item = &'a ExtReal>) -> Scalar {
    values
        .into_iter()
        .fold(Scalar::zero(), |acc, v| acc.add(&v.reciprocal()))
}

fn require_at_least_one(p: &ExtReal) -> Result<()> {
    if *p < ExtReal::one() {
        return Err(ExponentError::Domain {
            value: p.to_string(),
            domain: "[1, inf]",
        });
    }
    Ok(())
}

/// Conjugate exponent: `1/p + 1/p* = 1`.
pub fn conjugate(p: &ExtReal) -> Result<ExtReal> {
    require_at_least_one(p)?;
    ExtReal::from_reciprocal(&Scalar::one().checked_sub(&p.reciprocal())?)
}

/// `δ^{s_1,…,s_k} = 1/(1 − Σ 1/s_i)`, or `∞` when the reciprocal sum reaches 1.
pub fn delta(s: &[ExtReal]) -> Result<ExtReal> {
    if s.is_empty() {
        return Err(ExponentError::Empty);
    }
    for v in s {
        require_at_least_one(v)?;
    }
    let sum = sum_reciprocals(s);
    if sum >= Scalar::one() {
        return Ok(ExtReal::Infinity);
    }
    ExtReal::from_reciprocal(&Scalar::one().checked_sub(&sum)?)
}

/// Source-space exponents `p_1,…,p_m ∈ [1,∞]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Spaces(Vec<ExtReal>);

impl Spaces {
    pub fn new(p: Vec<ExtReal>) -> Result<Self> {
        if p.is_empty() {
            return Err(ExponentError::Empty);
        }
        for v in &p {
            require_at_least_one(v)?;
        }
        Ok(Spaces(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ExtReal] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ExtReal> {
        self.0.iter()
    }

    pub fn reciprocal_sum(&self) -> Scalar {
        sum_reciprocals(&self.0)
    }

    /// `Σ 1/p_i < 1`.
    pub fn is_first_case(&self) -> bool {
        self.reciprocal_sum() < Scalar::one()
    }

    /// The tuple reordered as `(p_{σ(1)},…,p_{σ(m)})`.
    pub fn permuted(&self, sigma: &Perm) -> Result<Spaces> {
        check_len(self.len(), sigma.len())?;
        Ok(Spaces(sigma.iter().map(|&i| self.0[i].clone()).collect()))
    }
}

impl<'de> Deserialize<'de> for Spaces {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Spaces::new(Vec::deserialize(de)?).map_err(de::Error::custom)
    }
}

/// Mixed-norm exponents `q_1,…,q_m ∈ (0,∞]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Exponents(Vec<ExtReal>);

impl Exponents {
    pub fn new(q: Vec<ExtReal>) -> Result<Self> {
        if q.is_empty() {
            return Err(ExponentError::Empty);
        }
        Ok(Exponents(q))
    }

    pub fn uniform(value: ExtReal, m: usize) -> Result<Self> {
        Self::new(vec![value; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ExtReal] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ExtReal> {
        self.0.iter()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(ExtReal::to_f64).collect()
    }
}

impl<'de> Deserialize<'de> for Exponents {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Exponents::new(Vec::deserialize(de)?).map_err(de::Error::custom)
    }
}

/// A bijection on `{0,…,m−1}`; `perm[k]` is the axis placed at nesting level `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let len = indices.len();
        let mut seen = vec![false; len];
        for &i in &indices {
            if i >= len || seen[i] {
                return Err(ExponentError::NotAPermutation {
                    len,
                    detail: format!("{:?}", indices.iter().map(|i| i + 1).collect::<Vec<_>>()),
                });
            }
            seen[i] = true;
        }
        Ok(Perm(indices))
    }

    /// From the 1-based notation `σ(1),…,σ(m)`.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        let len = indices.len();
        let zero_based = indices
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| ExponentError::NotAPermutation {
                        len,
                        detail: "index 0 in 1-based permutation".into(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero_based)
    }

    pub fn identity(m: usize) -> Self {
        Perm((0..m).collect())
    }

    pub fn reversal(m: usize) -> Self {
        Perm((0..m).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(k, &i)| k == i)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (k, &i) in self.0.iter().enumerate() {
            inv[i] = k;
        }
        Perm(inv)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl Serialize for Perm {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Perm {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(de)?;
        Perm::from_one_based(&v).map_err(de::Error::custom)
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(ExponentError::LengthMismatch { expected, got });
    }
    Ok(())
}

/// Componentwise-minimal admissible tuple: `q_k = δ(p_{σ(k)},…,p_{σ(m)})`.
pub fn critical_exponents(p: &Spaces, sigma: &Perm) -> Result<Exponents> {
    let ordered = p.permuted(sigma)?;
    let q = (0..ordered.len())
        .map(|k| delta(&ordered.as_slice()[k..]))
        .collect::<Result<Vec<_>>>()?;
    Exponents::new(q)
}

/// Outcome of an admissibility check. `level` is the 0-based nesting level
/// of the first violated condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "admissible")]
pub enum Admissibility {
    #[serde(rename = "true")]
    Admissible,
    #[serde(rename = "false")]
    Fails { level: usize },
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Admissibility::Admissible)
    }

    pub fn failing_level(&self) -> Option<usize> {
        match self {
            Admissibility::Admissible => None,
            Admissibility::Fails { level } => Some(*level),
        }
    }
}

impl fmt::Display for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Admissibility::Admissible => f.write_str("true"),
            Admissibility::Fails { level } => write!(f, "false (k={})", level + 1),
        }
    }
}

/// Checks `q_k ≥ δ(p_{σ(k)},…,p_{σ(m)})` for every level. Against `δ = ∞`
/// only `q_k = ∞` passes.
pub fn admissible(p: &Spaces, sigma: &Perm, q: &Exponents) -> Result<Admissibility> {
    check_len(p.len(), q.len())?;
    let critical = critical_exponents(p, sigma)?;
    Ok(critical
        .iter()
        .zip(q.iter())
        .position(|(c, q)| q < c)
        .map_or(Admissibility::Admissible, |level| Admissibility::Fails {
            level,
        }))
}

/// Smallest 0-based `i` with `Σ_{k≥i} 1/p_k < 1`, if any.
pub fn i0_index(p: &Spaces) -> Option<usize> {
    let one = Scalar::one();
    let mut suffix = Scalar::zero();
    let mut found = None;
    // suffix sums grow towards the front, so the qualifying indices form a tail
    for i in (0..p.len()).rev() {
        suffix = suffix.add(&p.as_slice()[i].reciprocal());
        if suffix < one {
            found = Some(i);
        } else {
            break;
        }
    }
    found
}

/// `r_i = p_i / δ(p_m)` for `i < m`; defined only when `Σ 1/p < 1`.
pub fn reduced_spaces(p: &Spaces) -> Result<Spaces> {
    if p.len() < 2 {
        return Err(ExponentError::TooShort);
    }
    if !p.is_first_case() {
        return Err(ExponentError::SecondCase {
            sum: p.reciprocal_sum().to_string(),
        });
    }
    let (last, head) = p.as_slice().split_last().expect("len >= 2");
    let dm = delta(std::slice::from_ref(last))?;
    let r = head
        .iter()
        .map(|pi| pi.checked_div(&dm))
        .collect::<Result<Vec<_>>>()?;
    Spaces::new(r)
}
