//! Target spaces, their grid nets, and countably-valued approximation.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};

use super::eval::apply_post;
use super::{function_class, ArithOp, FuncExpr, FuncKind, PartitionCode, PostMap, Region};
use crate::class::ClassTag;
use crate::construct::refine_cover;
use crate::error::{Error, Result};
use crate::num::{fmt_rational, int, parse_rational, Rational, Surd};
use crate::point::{json_err, CantorPoint, Point};
use crate::set::classify;
use crate::space::shortlex_word;

/// Complete metric target of a function code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    /// The real line; nets are grids over the given bounding interval.
    Real { lo: Rational, hi: Rational },
    /// A closed interval `[lo, hi]`.
    Interval { lo: Rational, hi: Rational },
    Cantor,
    /// Discrete space `{0, …, k-1}`.
    Finite(u32),
}

impl Target {
    /// Net points with mesh `< 1/n`.
    pub fn net(&self, n: usize) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::Domain("net stage must be at least 1".into()));
        }
        let nn = Rational::from_integer(BigInt::from(n));
        Ok(match self {
            Target::Real { lo, hi } => {
                if lo > hi {
                    return Err(Error::Domain(format!("empty bounding interval [{lo}, {hi}]")));
                }
                let from = (lo * &nn).floor().to_integer();
                let to = (hi * &nn).ceil().to_integer();
                num_iter(from, to).map(|k| Point::rational(Rational::new(k, BigInt::from(n)))).collect()
            }
            Target::Interval { lo, hi } => {
                let from = (lo * &nn).ceil().to_integer();
                let to = (hi * &nn).floor().to_integer();
                let mut out = vec![Point::rational(lo.clone())];
                for k in num_iter(from, to) {
                    let y = Rational::new(k, BigInt::from(n));
                    if y != *lo && y != *hi {
                        out.push(Point::rational(y));
                    }
                }
                if hi != lo {
                    out.push(Point::rational(hi.clone()));
                }
                out
            }
            Target::Cantor => {
                let len = cylinder_len(n);
                let first = (1u64 << len) - 1;
                (first..first + (1u64 << len)).map(|i| Point::Cantor(CantorPoint::new(shortlex_word(i), false))).collect()
            }
            Target::Finite(k) => (0..*k).map(Point::Finite).collect(),
        })
    }

    /// The open ball of radius `1/n` around a net point.
    pub fn ball(&self, y: &Point, n: usize) -> Result<Region> {
        Ok(match (self, y) {
            (Target::Real { .. } | Target::Interval { .. }, Point::Real(s)) => {
                let r = Surd::from(Rational::new(BigInt::one(), BigInt::from(n)));
                Region::Interval(Some(s.sub(&r)?), Some(s.add(&r)?))
            }
            (Target::Cantor, Point::Cantor(c)) => {
                let len = cylinder_len(n);
                Region::Cylinder((0..len).map(|i| c.bit(i)).collect())
            }
            (Target::Finite(_), Point::Finite(i)) => Region::Points(1 << i),
            (t, y) => return Err(Error::Domain(format!("{y} is not a point of the target {t}"))),
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            Target::Real { lo, hi } => json!({ "target": "real", "lo": fmt_rational(lo), "hi": fmt_rational(hi) }),
            Target::Interval { lo, hi } => {
                json!({ "target": "interval", "lo": fmt_rational(lo), "hi": fmt_rational(hi) })
            }
            Target::Cantor => json!({ "target": "cantor" }),
            Target::Finite(k) => json!({ "target": "finite", "points": k }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Target> {
        let q = |key: &str| -> Result<Rational> {
            parse_rational(v.get(key).and_then(Value::as_str).ok_or_else(|| json_err(key))?)
        };
        match v.get("target").and_then(Value::as_str) {
            Some("real") => Ok(Target::Real { lo: q("lo")?, hi: q("hi")? }),
            Some("interval") => Ok(Target::Interval { lo: q("lo")?, hi: q("hi")? }),
            Some("cantor") => Ok(Target::Cantor),
            Some("finite") => Ok(Target::Finite(
                v.get("points").and_then(Value::as_u64).ok_or_else(|| json_err("points"))? as u32,
            )),
            _ => Err(json_err("target")),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Real { lo, hi } => write!(f, "[{}, {}]", fmt_rational(lo), fmt_rational(hi)),
            Target::Interval { lo, hi } => write!(f, "interval {} {}", fmt_rational(lo), fmt_rational(hi)),
            Target::Cantor => write!(f, "cantor"),
            Target::Finite(k) => write!(f, "finite {k}"),
        }
    }
}

/// Least `L` with `2^-L < 1/n`.
fn cylinder_len(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

fn num_iter(from: BigInt, to: BigInt) -> impl Iterator<Item = BigInt> {
    let mut k = from;
    std::iter::from_fn(move || {
        if k > to {
            return None;
        }
        let out = k.clone();
        k += 1;
        Some(out)
    })
}

/// Known range bound of a real-valued code, used to catch nets that miss
/// values and to skip net points far from every value.
fn range_hint(f: &FuncExpr) -> Option<(Surd, Surd)> {
    match f.kind() {
        FuncKind::Step { values, .. } => {
            let reals: Option<Vec<&Surd>> = values.iter().map(|v| v.as_real().ok()).collect();
            let reals = reals?;
            let lo = reals.iter().min()?;
            let hi = reals.iter().max()?;
            Some(((*lo).clone(), (*hi).clone()))
        }
        FuncKind::ZeroSet(_) => Some((Surd::zero(), Surd::one())),
        FuncKind::Post(PostMap::Clamp { lo, hi }, _) => Some((lo.clone().into(), hi.clone().into())),
        FuncKind::Post(PostMap::Phi, c) => match range_hint(c) {
            // φ is increasing.
            Some((a, b)) => Some((apply_post(&PostMap::Phi, &a).ok()?, apply_post(&PostMap::Phi, &b).ok()?)),
            None => Some((int(-1).into(), int(1).into())),
        },
        FuncKind::Post(map @ PostMap::Affine { .. }, c) => {
            let (a, b) = range_hint(c)?;
            let (a, b) = (apply_post(map, &a).ok()?, apply_post(map, &b).ok()?);
            Some(if a <= b { (a, b) } else { (b, a) })
        }
        FuncKind::Arith(ArithOp::Sum, cs) => cs.iter().try_fold((Surd::zero(), Surd::zero()), |(lo, hi), c| {
            let (a, b) = range_hint(c)?;
            Some((lo.add(&a).ok()?, hi.add(&b).ok()?))
        }),
        FuncKind::Arith(ArithOp::Product, cs) => cs.iter().try_fold((Surd::one(), Surd::one()), |(lo, hi), c| {
            let (a, b) = range_hint(c)?;
            let corners = [lo.mul(&a).ok()?, lo.mul(&b).ok()?, hi.mul(&a).ok()?, hi.mul(&b).ok()?];
            Some((corners.iter().min()?.clone(), corners.iter().max()?.clone()))
        }),
        // u / (u + v) with u, v ≥ 0, the shape of separating functions.
        FuncKind::Arith(ArithOp::Quotient, cs) => match (cs.first()?.kind(), cs.get(1)?.kind()) {
            (_, FuncKind::Arith(ArithOp::Sum, parts)) if parts.iter().any(|p| p.id() == cs[0].id()) => {
                let nonneg = parts.iter().all(|p| range_hint(p).is_some_and(|(a, _)| a.signum() != Ordering::Less));
                nonneg.then(|| (Surd::zero(), Surd::one()))
            }
            _ => None,
        },
        FuncKind::Restriction(c, _) => range_hint(c),
        _ => None,
    }
}

/// Step code within `1/n` of `f`: pieces refine the preimages of the net's
/// `1/n`-balls and carry the ball centers as values.
pub fn approximate(f: &FuncExpr, n: usize, target: &Target) -> Result<FuncExpr> {
    let mut net = target.net(n)?;
    if let (Target::Real { lo, hi } | Target::Interval { lo, hi }, Some((a, b))) = (target, range_hint(f)) {
        if a < Surd::from(lo.clone()) || b > Surd::from(hi.clone()) {
            return Err(Error::Coverage {
                what: format!("values of {f} range over [{a}, {b}], outside the bounding interval [{lo}, {hi}]"),
                witness: None,
            });
        }
        // Balls are open with radius 1/n; keep the centers within 1/n of [a, b].
        let r = Surd::from(Rational::new(BigInt::one(), BigInt::from(n)));
        let (a, b) = (a.sub(&r)?, b.add(&r)?);
        net.retain(|y| y.as_real().is_ok_and(|y| *y > a && *y < b));
    }
    let mut cover = Vec::with_capacity(net.len());
    for y in &net {
        cover.push(crate::func::preimage(f, &target.ball(y, n)?)?);
    }
    let clopen = cover.iter().map(classify).collect::<Result<Vec<_>>>()?.iter().all(|t| t.le(ClassTag::ambiguous(0)));
    let alpha = if clopen { 0 } else { function_class(f).max(1) };
    let refined = refine_cover(&cover, alpha)?;
    let mut pieces = Vec::new();
    let mut values = Vec::new();
    for (p, y) in refined.pieces.into_iter().zip(net) {
        if !p.is_empty_code() {
            pieces.push(p);
            values.push(y);
        }
    }
    if pieces.is_empty() {
        return Err(Error::Coverage { what: format!("no net ball of stage {n} meets the range of {f}"), witness: None });
    }
    FuncExpr::step_on(PartitionCode { pieces, certified_disjoint: true, certified_cover: false }, values)
}
