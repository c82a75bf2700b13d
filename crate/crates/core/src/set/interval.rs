use std::fmt;

use serde_json::{json, Value};

use crate::error::Result;
use crate::num::Surd;
use crate::point::{surd_from_json, surd_to_json};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Endpoint {
    Unbounded,
    Closed(Surd),
    Open(Surd),
}

impl Endpoint {
    pub fn value(&self) -> Option<&Surd> {
        match self {
            Endpoint::Unbounded => None,
            Endpoint::Closed(v) | Endpoint::Open(v) => Some(v),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Endpoint::Closed(_))
    }
}

/// A real interval with exact endpoints, possibly unbounded or degenerate.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Interval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl Interval {
    pub fn new(lo: Endpoint, hi: Endpoint) -> Self {
        Interval { lo, hi }
    }

    pub fn open(a: impl Into<Surd>, b: impl Into<Surd>) -> Self {
        Interval::new(Endpoint::Open(a.into()), Endpoint::Open(b.into()))
    }

    pub fn closed(a: impl Into<Surd>, b: impl Into<Surd>) -> Self {
        Interval::new(Endpoint::Closed(a.into()), Endpoint::Closed(b.into()))
    }

    pub fn point(a: impl Into<Surd>) -> Self {
        let a = a.into();
        Interval::closed(a.clone(), a)
    }

    pub fn everything() -> Self {
        Interval::new(Endpoint::Unbounded, Endpoint::Unbounded)
    }

    pub fn contains(&self, x: &Surd) -> bool {
        let above = match &self.lo {
            Endpoint::Unbounded => true,
            Endpoint::Closed(a) => x >= a,
            Endpoint::Open(a) => x > a,
        };
        above
            && match &self.hi {
                Endpoint::Unbounded => true,
                Endpoint::Closed(b) => x <= b,
                Endpoint::Open(b) => x < b,
            }
    }

    pub fn is_empty(&self) -> bool {
        match (self.lo.value(), self.hi.value()) {
            (Some(a), Some(b)) => {
                a > b || (a == b && !(self.lo.is_closed() && self.hi.is_closed()))
            }
            _ => false,
        }
    }

    pub fn is_open(&self) -> bool {
        !self.lo.is_closed() && !self.hi.is_closed()
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self.lo, Endpoint::Open(_)) && !matches!(self.hi, Endpoint::Open(_))
    }

    /// Exact distance from `x` to this (closed) interval.
    pub fn distance(&self, x: &Surd) -> Result<Surd> {
        if let Some(a) = self.lo.value() {
            if x < a {
                return a.sub(x);
            }
        }
        if let Some(b) = self.hi.value() {
            if x > b {
                return x.sub(b);
            }
        }
        Ok(Surd::zero())
    }

    /// The closed interval `[lo - r, hi + r]`.
    pub fn inflate(&self, r: &Surd) -> Result<Interval> {
        let lo = match self.lo.value() {
            None => Endpoint::Unbounded,
            Some(a) => Endpoint::Closed(a.sub(r)?),
        };
        let hi = match self.hi.value() {
            None => Endpoint::Unbounded,
            Some(b) => Endpoint::Closed(b.add(r)?),
        };
        Ok(Interval::new(lo, hi))
    }

    pub fn to_json(&self) -> Value {
        let end = |e: &Endpoint| match e {
            Endpoint::Unbounded => Value::Null,
            Endpoint::Closed(v) | Endpoint::Open(v) => surd_to_json(v),
        };
        json!({
            "lo": end(&self.lo),
            "lo_closed": self.lo.is_closed(),
            "hi": end(&self.hi),
            "hi_closed": self.hi.is_closed(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Interval> {
        let end = |key: &str, closed_key: &str| -> Result<Endpoint> {
            let raw = v.get(key).ok_or_else(|| crate::point::json_err("interval"))?;
            if raw.is_null() {
                return Ok(Endpoint::Unbounded);
            }
            let s = surd_from_json(raw)?;
            Ok(if v.get(closed_key).and_then(Value::as_bool).unwrap_or(false) {
                Endpoint::Closed(s)
            } else {
                Endpoint::Open(s)
            })
        };
        Ok(Interval::new(end("lo", "lo_closed")?, end("hi", "hi_closed")?))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lo {
            Endpoint::Unbounded => write!(f, "(-inf")?,
            Endpoint::Closed(a) => write!(f, "[{a}")?,
            Endpoint::Open(a) => write!(f, "({a}")?,
        }
        write!(f, ",")?;
        match &self.hi {
            Endpoint::Unbounded => write!(f, "inf)"),
            Endpoint::Closed(b) => write!(f, "{b}]"),
            Endpoint::Open(b) => write!(f, "{b})"),
        }
    }
}
