//! Points of the base spaces, which double as values of target spaces.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::num::{fmt_rational, parse_rational, Rational, Surd};

/// An infinite binary word: a finite prefix followed by a constant tail.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CantorPoint {
    prefix: Vec<bool>,
    tail: bool,
}

impl CantorPoint {
    pub fn new(mut prefix: Vec<bool>, tail: bool) -> Self {
        while prefix.last() == Some(&tail) {
            prefix.pop();
        }
        CantorPoint { prefix, tail }
    }

    pub fn bit(&self, i: usize) -> bool {
        self.prefix.get(i).copied().unwrap_or(self.tail)
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn tail(&self) -> bool {
        self.tail
    }

    /// Index of the first differing bit, `None` if the words are equal.
    pub fn first_difference(&self, other: &CantorPoint) -> Option<usize> {
        let n = self.prefix.len().max(other.prefix.len());
        (0..n).find(|&i| self.bit(i) != other.bit(i)).or_else(|| {
            (self.tail != other.tail).then_some(n)
        })
    }

    /// The usual ultrametric `2^{-k}` where `k` is the first differing index.
    pub fn distance(&self, other: &CantorPoint) -> Rational {
        match self.first_difference(other) {
            None => Rational::from_integer(BigInt::from(0)),
            Some(k) => Rational::new(BigInt::one(), BigInt::one() << k),
        }
    }

    pub fn has_prefix(&self, word: &[bool]) -> bool {
        word.iter().enumerate().all(|(i, b)| self.bit(i) == *b)
    }
}

pub fn word_to_string(w: &[bool]) -> String {
    w.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

pub fn parse_word(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse { line: 0, col: 0, msg: format!("bad binary word `{s}`") }),
        })
        .collect()
}

impl fmt::Display for CantorPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cantor({}, {})", word_to_string(&self.prefix), u8::from(self.tail))
    }
}

impl fmt::Debug for CantorPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Point {
    Real(Surd),
    Cantor(CantorPoint),
    Finite(u32),
}

impl Point {
    pub fn rational(q: Rational) -> Self {
        Point::Real(Surd::from(q))
    }

    pub fn as_real(&self) -> Result<&Surd> {
        match self {
            Point::Real(s) => Ok(s),
            other => Err(Error::Domain(format!("{other} is not a real number"))),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Point::Real(_) => "real",
            Point::Cantor(_) => "cantor",
            Point::Finite(_) => "finite",
        }
    }

    /// Metric on values of the same kind; finite points use the discrete metric.
    pub fn distance(&self, other: &Point) -> Result<Surd> {
        match (self, other) {
            (Point::Real(a), Point::Real(b)) => Ok(a.sub(b)?.abs()),
            (Point::Cantor(a), Point::Cantor(b)) => Ok(Surd::from(a.distance(b))),
            (Point::Finite(a), Point::Finite(b)) => Ok(Surd::from(if a == b { 0 } else { 1 })),
            (a, b) => Err(Error::Domain(format!("no distance between {a} and {b}"))),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Point::Real(s) => surd_to_json(s),
            Point::Cantor(c) => json!({ "prefix": word_to_string(c.prefix()), "tail": u8::from(c.tail()) }),
            Point::Finite(i) => json!({ "finite": i }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Point> {
        if let Some(obj) = v.as_object() {
            if let Some(i) = obj.get("finite") {
                let i = i.as_u64().ok_or_else(|| json_err("finite point id"))?;
                return Ok(Point::Finite(i as u32));
            }
            if let Some(p) = obj.get("prefix") {
                let prefix = parse_word(p.as_str().ok_or_else(|| json_err("cantor prefix"))?)?;
                let tail = obj.get("tail").and_then(Value::as_u64).unwrap_or(0) == 1;
                return Ok(Point::Cantor(CantorPoint::new(prefix, tail)));
            }
        }
        Ok(Point::Real(surd_from_json(v)?))
    }
}

pub fn surd_to_json(s: &Surd) -> Value {
    if s.is_rational() {
        Value::String(fmt_rational(s.a()))
    } else {
        json!({ "a": fmt_rational(s.a()), "b": fmt_rational(s.b()), "d": s.radicand() })
    }
}

pub fn surd_from_json(v: &Value) -> Result<Surd> {
    match v {
        Value::String(s) => Ok(Surd::from(parse_rational(s)?)),
        Value::Number(n) => Ok(Surd::from(parse_rational(&n.to_string())?)),
        Value::Object(o) => {
            let a = parse_rational(o.get("a").and_then(Value::as_str).ok_or_else(|| json_err("surd a"))?)?;
            let b = parse_rational(o.get("b").and_then(Value::as_str).ok_or_else(|| json_err("surd b"))?)?;
            let d = o.get("d").and_then(Value::as_u64).ok_or_else(|| json_err("surd d"))?;
            Surd::new(a, b, d)
        }
        _ => Err(json_err("real value")),
    }
}

pub(crate) fn json_err(what: &str) -> Error {
    Error::Parse { line: 0, col: 0, msg: format!("invalid JSON for {what}") }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Real(s) => write!(f, "{s}"),
            Point::Cantor(c) => write!(f, "{c}"),
            Point::Finite(i) => write!(f, "pt({i})"),
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Point::Real(a), Point::Real(b)) => Some(a.cmp(b)),
            (Point::Finite(a), Point::Finite(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn cantor_normal_form_and_metric() {
        let a = CantorPoint::new(vec![true, false, false, false], false);
        assert_eq!(a.prefix(), &[true]);
        let b = CantorPoint::new(vec![true, false, true], false);
        assert_eq!(a.first_difference(&b), Some(2));
        assert_eq!(a.distance(&b), rat(1, 4));
        let c = CantorPoint::new(vec![true], true);
        assert_eq!(a.first_difference(&c), Some(1));
    }

    #[test]
    fn json_round_trip_of_points() {
        let pts = [
            Point::rational(rat(-3, 7)),
            Point::Real(Surd::new(rat(1, 2), rat(-1, 3), 2).unwrap()),
            Point::Cantor(CantorPoint::new(vec![false, true], true)),
            Point::Finite(4),
        ];
        for p in pts {
            assert_eq!(Point::from_json(&p.to_json()).unwrap(), p);
        }
    }
}
