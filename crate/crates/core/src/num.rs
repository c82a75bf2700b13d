//! Exact scalars: arbitrary-precision rationals and quadratic surds `a + b√d`.
//!
//! Every real number the engine touches is an element of some quadratic field
//! `Q(√d)`. Arithmetic is closed inside one field; comparison works across
//! fields, so membership against rational or surd endpoints is always exact.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| Error::Parse {
        line: 0,
        col: 0,
        msg: format!("bad rational literal `{s}`"),
    })?;
    let d = BigInt::from_str(den).map_err(|_| Error::Parse {
        line: 0,
        col: 0,
        msg: format!("bad rational literal `{s}`"),
    })?;
    if d.is_zero() {
        return Err(Error::Parse { line: 0, col: 0, msg: format!("zero denominator in `{s}`") });
    }
    Ok(Rational::new(n, d))
}

pub fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn is_squarefree(d: u64) -> bool {
    if d < 2 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= d {
        if d % (p * p) == 0 {
            return false;
        }
        p += 1;
    }
    true
}

/// An element `a + b√d` of the quadratic field `Q(√d)`.
///
/// Normal form: when `b = 0` the radicand is stored as 1, otherwise `d` is
/// square-free and at least 2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Surd {
    a: Rational,
    b: Rational,
    d: u64,
}

impl Surd {
    pub fn new(a: Rational, b: Rational, d: u64) -> Result<Self> {
        if b.is_zero() {
            return Ok(Surd::from(a));
        }
        if !is_squarefree(d) {
            return Err(Error::Domain(format!("radicand {d} is not square-free")));
        }
        Ok(Surd { a, b, d })
    }

    pub fn zero() -> Self {
        Surd::from(Rational::zero())
    }

    pub fn one() -> Self {
        Surd::from(Rational::one())
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.a)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn field(&self, other: &Surd) -> Result<u64> {
        match (self.d, other.d) {
            (1, d) | (d, 1) => Ok(d),
            (d, e) if d == e => Ok(d),
            (d, e) => Err(Error::Domain(format!(
                "values in Q(√{d}) and Q(√{e}) do not share a quadratic field"
            ))),
        }
    }

    fn normalized(a: Rational, b: Rational, d: u64) -> Self {
        if b.is_zero() {
            Surd { a, b, d: 1 }
        } else {
            Surd { a, b, d }
        }
    }

    pub fn add(&self, o: &Surd) -> Result<Surd> {
        let d = self.field(o)?;
        Ok(Surd::normalized(&self.a + &o.a, &self.b + &o.b, d))
    }

    pub fn sub(&self, o: &Surd) -> Result<Surd> {
        let d = self.field(o)?;
        Ok(Surd::normalized(&self.a - &o.a, &self.b - &o.b, d))
    }

    pub fn mul(&self, o: &Surd) -> Result<Surd> {
        let d = self.field(o)?;
        let dq = Rational::from_integer(BigInt::from(d));
        let a = &self.a * &o.a + &self.b * &o.b * dq;
        let b = &self.a * &o.b + &self.b * &o.a;
        Ok(Surd::normalized(a, b, d))
    }

    pub fn recip(&self) -> Result<Surd> {
        if self.is_zero() {
            return Err(Error::Singularity("division by zero".into()));
        }
        // (a - b√d) / (a² - b²d)
        let dq = Rational::from_integer(BigInt::from(self.d));
        let norm = &self.a * &self.a - &self.b * &self.b * dq;
        Ok(Surd::normalized(&self.a / &norm, -&self.b / &norm, self.d))
    }

    pub fn div(&self, o: &Surd) -> Result<Surd> {
        self.field(o)?;
        self.mul(&o.recip()?)
    }

    pub fn neg(&self) -> Surd {
        Surd::normalized(-&self.a, -&self.b, self.d)
    }

    pub fn scale(&self, q: &Rational) -> Surd {
        Surd::normalized(&self.a * q, &self.b * q, self.d)
    }

    pub fn signum(&self) -> Ordering {
        sign_of(&self.a, &self.b, self.d)
    }

    pub fn abs(&self) -> Surd {
        if self.signum() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn floor(&self) -> BigInt {
        let approx = self.to_f64().floor();
        let mut k = if approx.is_finite() {
            BigInt::from(approx as i64)
        } else {
            self.a.floor().to_integer()
        };
        loop {
            let kq = Surd::from(Rational::from_integer(k.clone()));
            if kq > *self {
                k -= 1;
                continue;
            }
            let k1 = Surd::from(Rational::from_integer(&k + 1));
            if k1 <= *self {
                k += 1;
                continue;
            }
            return k;
        }
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * (self.d as f64).sqrt()
    }

    pub fn min<'a>(&'a self, o: &'a Surd) -> &'a Surd {
        if o < self {
            o
        } else {
            self
        }
    }

    pub fn max<'a>(&'a self, o: &'a Surd) -> &'a Surd {
        if o > self {
            o
        } else {
            self
        }
    }
}

/// Sign of `a + b√d` for square-free `d`.
fn sign_of(a: &Rational, b: &Rational, d: u64) -> Ordering {
    let sa = a.cmp(&Rational::zero());
    let sb = b.cmp(&Rational::zero());
    if sb == Ordering::Equal {
        return sa;
    }
    if sa == Ordering::Equal || sa == sb {
        return sb;
    }
    if abs_cmp(a, b, d) == Ordering::Greater {
        sa
    } else {
        sb
    }
}

/// Compares `a²` with `b²·d` by cross multiplication, skipping the gcd
/// reductions of rational products.
fn abs_cmp(a: &Rational, b: &Rational, d: u64) -> Ordering {
    let lhs = a.numer() * b.denom();
    let rhs = b.numer() * a.denom();
    (&lhs * &lhs).cmp(&(&rhs * &rhs * BigInt::from(d)))
}

impl From<Rational> for Surd {
    fn from(a: Rational) -> Self {
        Surd { a, b: Rational::zero(), d: 1 }
    }
}

impl From<i64> for Surd {
    fn from(n: i64) -> Self {
        Surd::from(int(n))
    }
}

impl Ord for Surd {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.d == other.d || self.d == 1 || other.d == 1 {
            let d = self.d.max(other.d);
            let sa = self.a.cmp(&other.a);
            let sb = self.b.cmp(&other.b);
            if sb == Ordering::Equal {
                return sa;
            }
            if sa == Ordering::Equal || sa == sb {
                return sb;
            }
            return if abs_cmp(&(&self.a - &other.a), &(&self.b - &other.b), d) == Ordering::Greater { sa } else { sb };
        }
        // Different fields: compare u = (a1 - a2) + b1√d1 against w = b2√d2.
        let u_a = &self.a - &other.a;
        let su = sign_of(&u_a, &self.b, self.d);
        let sw = other.b.cmp(&Rational::zero());
        if su != sw {
            return su.cmp(&sw);
        }
        if su == Ordering::Equal {
            return Ordering::Equal;
        }
        let d1 = Rational::from_integer(BigInt::from(self.d));
        let d2 = Rational::from_integer(BigInt::from(other.d));
        let sq_a = &u_a * &u_a + &self.b * &self.b * d1 - &other.b * &other.b * d2;
        let sq_b = Rational::from_integer(BigInt::from(2)) * &u_a * &self.b;
        let by_square = sign_of(&sq_a, &sq_b, self.d);
        if su == Ordering::Greater {
            by_square
        } else {
            by_square.reverse()
        }
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            write!(f, "{}", fmt_rational(&self.a))
        } else {
            write!(f, "surd({}, {}, {})", fmt_rational(&self.a), fmt_rational(&self.b), self.d)
        }
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Euler's totient, used by the rational enumeration.
pub fn totient(n: u64) -> u64 {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// The `index`-th rational of `[0, 1]` in the order
/// `0, 1, 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...` (by denominator, then numerator).
pub fn rational_at(index: u64) -> Rational {
    if index == 0 {
        return int(0);
    }
    if index == 1 {
        return int(1);
    }
    let mut base = 2u64;
    let mut q = 2u64;
    loop {
        let count = totient(q);
        if index < base + count {
            let mut rank = index - base;
            for p in 1..q {
                if p.gcd(&q) == 1 {
                    if rank == 0 {
                        return rat(p as i64, q as i64);
                    }
                    rank -= 1;
                }
            }
            unreachable!("totient count mismatch");
        }
        base += count;
        q += 1;
    }
}

/// Inverse of [`rational_at`]; `None` outside `[0, 1]` or for huge denominators.
pub fn rational_index(q: &Rational) -> Option<u64> {
    if q.is_negative() || *q > int(1) {
        return None;
    }
    if q.is_zero() {
        return Some(0);
    }
    if q.is_one() {
        return Some(1);
    }
    let den = q.denom().to_u64()?;
    let num = q.numer().to_u64()?;
    let mut base = 2u64;
    for k in 2..den {
        base += totient(k);
    }
    let rank = (1..num).filter(|p| p.gcd(&den) == 1).count() as u64;
    Some(base + rank)
}

pub fn bigint_to_i64(n: &BigInt) -> Option<i64> {
    match n.sign() {
        Sign::NoSign => Some(0),
        _ => n.to_i64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: Rational, b: Rational, d: u64) -> Surd {
        Surd::new(a, b, d).unwrap()
    }

    #[test]
    fn surd_ordering_against_rationals() {
        let half_sqrt2 = s(int(0), rat(1, 2), 2);
        assert!(half_sqrt2 > Surd::from(rat(7, 10)));
        assert!(half_sqrt2 < Surd::from(rat(71, 100)));
        assert!(half_sqrt2.neg() < Surd::from(int(0)));
    }

    #[test]
    fn cross_field_comparison_matches_floats() {
        let xs = [
            s(int(0), int(1), 2),
            s(int(0), int(1), 3),
            s(rat(1, 3), rat(1, 5), 7),
            s(rat(-1, 2), int(1), 5),
            s(int(1), rat(-1, 4), 3),
        ];
        for x in &xs {
            for y in &xs {
                let by_float = x.to_f64().partial_cmp(&y.to_f64()).unwrap();
                assert_eq!(x.cmp(y), by_float, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn field_arithmetic_is_exact() {
        let r2 = s(int(0), int(1), 2);
        assert_eq!(r2.mul(&r2).unwrap(), Surd::from(int(2)));
        let x = s(int(1), int(1), 2);
        let inv = x.recip().unwrap();
        assert_eq!(x.mul(&inv).unwrap(), Surd::one());
        assert!(r2.add(&s(int(0), int(1), 3)).is_err());
    }

    #[test]
    fn floor_of_surds() {
        assert_eq!(s(int(0), int(10), 2).floor(), BigInt::from(14));
        assert_eq!(s(int(0), int(-1), 2).floor(), BigInt::from(-2));
        assert_eq!(Surd::from(int(3)).floor(), BigInt::from(3));
    }

    #[test]
    fn rational_enumeration_round_trips() {
        let first: Vec<_> = (0..8).map(rational_at).collect();
        let expected = [int(0), int(1), rat(1, 2), rat(1, 3), rat(2, 3), rat(1, 4), rat(3, 4), rat(1, 5)];
        assert_eq!(first, expected);
        for i in 0..500 {
            assert_eq!(rational_index(&rational_at(i)), Some(i));
        }
    }
}
