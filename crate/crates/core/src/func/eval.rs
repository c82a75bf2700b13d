use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{ArithOp, FuncExpr, FuncKind, PostMap, UniformLimit};
use crate::error::{Error, Result};
use crate::num::{int, Rational, Surd};
use crate::point::Point;
use crate::set::MemberCx;

/// A value together with a bound on its distance to the true value.
#[derive(Clone, Debug, PartialEq)]
pub struct Approx {
    pub value: Point,
    pub bound: Rational,
}

impl Approx {
    fn exact(value: Point) -> Self {
        Approx { value, bound: Rational::zero() }
    }

    pub fn is_exact(&self) -> bool {
        self.bound.is_zero()
    }
}

/// Value of `f` at `x` within `eps`.
pub fn evaluate(f: &FuncExpr, x: &Point, eps: &Rational) -> Result<(Point, Rational)> {
    if !eps.is_positive() {
        return Err(Error::Domain(format!("precision must be positive, got {eps}")));
    }
    let a = eval_in(f, &mut MemberCx::new(x), eps)?;
    if a.bound > *eps {
        return Err(Error::Precision(format!("precision {eps} at {x} needs a limit stage beyond the cap")));
    }
    Ok((a.value, a.bound))
}

/// Value of `f` at `x`, failing unless evaluation is exact.
pub fn evaluate_exact(f: &FuncExpr, x: &Point) -> Result<Point> {
    exact_in(f, &mut MemberCx::new(x))
}

pub(crate) fn exact_in(f: &FuncExpr, cx: &mut MemberCx<'_>) -> Result<Point> {
    if let Some(v) = cx.values.get(&f.id()) {
        return Ok(v.clone());
    }
    let a = eval_in(f, cx, &Rational::new(BigInt::one(), BigInt::from(1u64 << 40)))?;
    if !a.is_exact() {
        return Err(Error::Precision(format!("{f} has no exact value at {}", cx.point())));
    }
    cx.values.insert(f.id(), a.value.clone());
    Ok(a.value)
}

const RETRIES: usize = 24;

pub(crate) fn eval_in(f: &FuncExpr, cx: &mut MemberCx<'_>, eps: &Rational) -> Result<Approx> {
    match f.kind() {
        FuncKind::Identity => Ok(Approx::exact(cx.point().clone())),
        FuncKind::Distance(shape) => {
            let x = cx.point().as_real()?;
            let mut best: Option<Surd> = None;
            for i in shape {
                let d = i.distance(x)?;
                best = Some(match best {
                    Some(b) if b <= d => b,
                    _ => d,
                });
            }
            Ok(Approx::exact(Point::Real(best.expect("distance shapes are nonempty"))))
        }
        FuncKind::Step { partition, values } => {
            for (p, v) in partition.pieces.iter().zip(values) {
                if cx.member(p)? {
                    return Ok(Approx::exact(v.clone()));
                }
            }
            Err(Error::Coverage {
                what: "step pieces miss the point".into(),
                witness: Some(cx.point().clone()),
            })
        }
        FuncKind::ZeroSet(z) => {
            let v = match z.pieces.first_index(cx)? {
                None => Rational::zero(),
                Some(n) => Rational::new(BigInt::one(), BigInt::from(n + 1)),
            };
            Ok(Approx::exact(Point::rational(v)))
        }
        FuncKind::Arith(op, cs) => eval_arith(*op, cs, cx, eps),
        FuncKind::Post(map, c) => eval_post(map, c, cx, eps),
        FuncKind::Limit(l) => eval_limit(l, cx, eps),
        FuncKind::Restriction(c, e) => {
            if !cx.member(&e.carrier)? {
                return Err(Error::Domain(format!("{} lies outside the restriction domain {}", cx.point(), e.carrier)));
            }
            eval_in(c, cx, eps)
        }
    }
}

fn real(a: &Approx) -> Result<&Surd> {
    a.value.as_real()
}

/// Rational `r ≥ |s|`, tight to `2^-30`.
pub(crate) fn upper_abs(s: &Surd) -> Rational {
    match s.as_rational() {
        Some(q) => q.abs(),
        None => {
            let scale = Rational::from_integer(BigInt::one() << 30);
            (Rational::from_integer(s.abs().scale(&scale).floor()) + int(1)) / scale
        }
    }
}

/// Rational `r ≤ |s|`, tight to `2^-30`.
pub(crate) fn lower_abs(s: &Surd) -> Rational {
    match s.as_rational() {
        Some(q) => q.abs(),
        None => {
            let scale = Rational::from_integer(BigInt::one() << 30);
            Rational::from_integer(s.abs().scale(&scale).floor()) / scale
        }
    }
}

pub(crate) fn apply_arith(op: ArithOp, vals: &[Surd]) -> Result<Surd> {
    match op {
        ArithOp::Sum => vals.iter().skip(1).try_fold(vals[0].clone(), |acc, v| acc.add(v)),
        ArithOp::Product => vals.iter().skip(1).try_fold(vals[0].clone(), |acc, v| acc.mul(v)),
        ArithOp::Quotient => {
            if vals[1].is_zero() {
                return Err(Error::Singularity(format!("quotient denominator vanishes (numerator {})", vals[0])));
            }
            vals[0].div(&vals[1])
        }
    }
}

pub(crate) fn apply_post(map: &PostMap, y: &Surd) -> Result<Surd> {
    match map {
        PostMap::Clamp { lo, hi } => {
            let lo = Surd::from(lo.clone());
            let hi = Surd::from(hi.clone());
            Ok(y.max(&lo).min(&hi).clone())
        }
        PostMap::Affine { a, b } => y.scale(a).add(&Surd::from(b.clone())),
        PostMap::Phi => y.div(&Surd::one().add(&y.abs())?),
        PostMap::PhiInv => {
            let den = Surd::one().sub(&y.abs())?;
            if den.signum() != Ordering::Greater {
                return Err(Error::Singularity(format!("phi_inv is undefined at {y}")));
            }
            y.div(&den)
        }
        PostMap::Reciprocal => {
            if y.signum() != Ordering::Greater {
                return Err(Error::Singularity(format!("reciprocal of non-positive value {y}")));
            }
            y.recip()
        }
    }
}

fn eval_arith(op: ArithOp, cs: &[FuncExpr], cx: &mut MemberCx<'_>, eps: &Rational) -> Result<Approx> {
    let mut inner = eps / int(2 * cs.len() as i64);
    let mut best: Option<Approx> = None;
    for _ in 0..RETRIES {
        let parts = cs.iter().map(|c| eval_in(c, cx, &inner)).collect::<Result<Vec<_>>>()?;
        let vals = parts.iter().map(real).collect::<Result<Vec<_>>>()?;
        let vals: Vec<Surd> = vals.into_iter().cloned().collect();
        let exact = parts.iter().all(Approx::is_exact);
        if exact {
            return Ok(Approx::exact(Point::Real(apply_arith(op, &vals)?)));
        }
        let bound = match op {
            ArithOp::Sum => parts.iter().map(|p| p.bound.clone()).sum(),
            ArithOp::Product => {
                // Running product error: |uv − u'v'| ≤ |u|b_v + |v|b_u + b_u b_v.
                let mut acc_v = vals[0].clone();
                let mut acc_b = parts[0].bound.clone();
                for (v, p) in vals.iter().zip(&parts).skip(1) {
                    let bu = &acc_b;
                    let bv = &p.bound;
                    acc_b = upper_abs(&acc_v) * bv + upper_abs(v) * bu + bu * bv;
                    acc_v = acc_v.mul(v)?;
                }
                acc_b
            }
            ArithOp::Quotient => {
                let (bu, bv) = (&parts[0].bound, &parts[1].bound);
                let vlo = lower_abs(&vals[1]) - bv;
                if !vlo.is_positive() {
                    inner /= int(4);
                    continue;
                }
                let q = vals[0].div(&vals[1])?;
                (bu + upper_abs(&q) * bv) / vlo
            }
        };
        let a = Approx { value: Point::Real(apply_arith(op, &vals)?), bound };
        if a.bound <= *eps || best.as_ref().is_some_and(|b| b.bound <= a.bound) {
            return Ok(a);
        }
        best = Some(a);
        inner /= int(4);
    }
    if let Some(a) = best {
        return Ok(a);
    }
    match op {
        ArithOp::Quotient => Err(Error::Singularity(format!("denominator cannot be separated from 0 at {}", cx.point()))),
        _ => Err(Error::Precision(format!("{op:?} did not reach precision {eps} at {}", cx.point()))),
    }
}

fn eval_post(map: &PostMap, c: &FuncExpr, cx: &mut MemberCx<'_>, eps: &Rational) -> Result<Approx> {
    // Clamp and φ are 1-Lipschitz.
    let mut inner = match map {
        PostMap::Clamp { .. } | PostMap::Phi => eps.clone(),
        _ => eps / int(2),
    };
    let mut best: Option<Approx> = None;
    for _ in 0..RETRIES {
        let a = eval_in(c, cx, &inner)?;
        let y = real(&a)?.clone();
        if a.is_exact() {
            return Ok(Approx::exact(Point::Real(apply_post(map, &y)?)));
        }
        let b = &a.bound;
        let bound = match map {
            PostMap::Clamp { .. } | PostMap::Phi => Some(b.clone()),
            PostMap::Affine { a, .. } => Some(a.abs() * b),
            PostMap::PhiInv => {
                let m = upper_abs(&y) + b;
                (m < int(1)).then(|| {
                    let gap = int(1) - m;
                    b / (&gap * &gap)
                })
            }
            PostMap::Reciprocal => {
                let lo = if y.signum() == Ordering::Greater { lower_abs(&y) - b } else { int(0) };
                lo.is_positive().then(|| b / (&lo * &lo))
            }
        };
        if let Some(bound) = bound {
            let a = Approx { value: Point::Real(apply_post(map, &y)?), bound };
            // A child stuck at its last limit stage cannot improve.
            if a.bound <= *eps || best.as_ref().is_some_and(|b| b.bound <= a.bound) {
                return Ok(a);
            }
            best = Some(a);
        }
        inner /= int(4);
    }
    if let Some(a) = best {
        return Ok(a);
    }
    match map {
        PostMap::PhiInv | PostMap::Reciprocal => {
            Err(Error::Singularity(format!("{map:?} cannot be certified at {}", cx.point())))
        }
        _ => Err(Error::Precision(format!("{map:?} did not reach precision {eps} at {}", cx.point()))),
    }
}

/// Smallest stage whose modulus is within the budget, capped at the last
/// stage; callers compare the returned bound with what they need.
fn stage_for(l: &UniformLimit, budget: &Rational) -> usize {
    let n = (&l.modulus / budget).ceil().to_integer();
    n.try_into().unwrap_or(usize::MAX).clamp(1, l.cap)
}

fn eval_limit(l: &UniformLimit, cx: &mut MemberCx<'_>, eps: &Rational) -> Result<Approx> {
    let n = stage_for(l, eps);
    let err = l.error_at(n);
    let rest = eps - &err;
    if rest.is_positive() {
        let a = eval_in(&l.stage(n)?, cx, &rest)?;
        return Ok(Approx { value: a.value, bound: err + a.bound });
    }
    // The modulus uses the whole budget; only an exact stage value fits.
    let a = eval_in(&l.stage(n)?, cx, eps)?;
    if a.is_exact() || n == l.cap {
        return Ok(Approx { value: a.value, bound: err + a.bound });
    }
    let half = eps / int(2);
    let n = stage_for(l, &half);
    let a = eval_in(&l.stage(n)?, cx, &half)?;
    Ok(Approx { value: a.value, bound: l.error_at(n) + a.bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::PartitionCode;
    use crate::num::rat;
    use crate::set::{Interval, SetExpr};

    fn q(n: i64, d: i64) -> Point {
        Point::rational(rat(n, d))
    }

    #[test]
    fn step_evaluates_exactly() {
        let a = SetExpr::closed_interval(Interval::closed(rat(0, 1), rat(1, 2)));
        let f = FuncExpr::step(vec![a.clone(), SetExpr::complement(a)], vec![q(0, 1), q(1, 1)]).unwrap();
        assert_eq!(evaluate(&f, &q(1, 4), &rat(1, 100)).unwrap(), (q(0, 1), rat(0, 1)));
        assert_eq!(evaluate(&f, &q(3, 4), &rat(1, 100)).unwrap(), (q(1, 1), rat(0, 1)));
        let gap = FuncExpr::step_on(PartitionCode::new(vec![SetExpr::empty()]), vec![q(0, 1)]).unwrap();
        assert!(matches!(evaluate(&gap, &q(1, 2), &rat(1, 2)), Err(Error::Coverage { .. })));
    }

    #[test]
    fn separation_quotient_endpoints() {
        let f1 = FuncExpr::identity();
        let f2 = FuncExpr::post(PostMap::Affine { a: rat(-1, 1), b: rat(1, 1) }, FuncExpr::identity()).unwrap();
        let f = FuncExpr::quotient(f1.clone(), FuncExpr::sum(f1, f2));
        assert_eq!(evaluate(&f, &q(0, 1), &rat(1, 10)).unwrap(), (q(0, 1), rat(0, 1)));
        let zero = FuncExpr::quotient(FuncExpr::identity(), FuncExpr::identity());
        assert!(matches!(evaluate(&zero, &q(0, 1), &rat(1, 10)), Err(Error::Singularity(_))));
    }

    #[test]
    fn post_maps_are_exact_on_rationals() {
        let phi = FuncExpr::post(PostMap::Phi, FuncExpr::identity()).unwrap();
        assert_eq!(evaluate(&phi, &q(-3, 1), &rat(1, 2)).unwrap().0, q(-3, 4));
        let back = FuncExpr::post(PostMap::PhiInv, phi).unwrap();
        let x = Point::Real(Surd::new(rat(1, 3), rat(1, 5), 2).unwrap());
        assert_eq!(evaluate(&back, &x, &rat(1, 2)).unwrap().0, x);
        let r = FuncExpr::post(PostMap::Reciprocal, FuncExpr::identity()).unwrap();
        assert!(matches!(evaluate(&r, &q(0, 1), &rat(1, 2)), Err(Error::Singularity(_))));
    }

    #[test]
    fn rational_abs_bounds_bracket_surds() {
        let s = Surd::new(rat(-1, 1), rat(1, 1), 2).unwrap();
        let (lo, hi) = (lower_abs(&s), upper_abs(&s));
        assert!(Surd::from(lo) <= s && s <= Surd::from(hi.clone()));
        assert!(hi - lower_abs(&s) <= rat(1, 1 << 29));
    }
}
