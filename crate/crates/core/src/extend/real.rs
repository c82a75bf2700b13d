//! Bounded and unbounded real extensions, and the round trip between
//! extending sets and extending functions.

use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};

use super::polish::relative_core;
use super::{extend_polish, strip_carrier, EmbeddingContext, Extension};
use crate::class::ClassTag;
use crate::construct::{insert_ambiguous, SeparationWitness};
use crate::error::{Error, Result};
use crate::func::{evaluate, preimage, FuncExpr, PostMap, Region, Target};
use crate::num::{fmt_rational, int, Rational, Surd};
use crate::point::Point;
use crate::set::{classify, member, SetExpr};

/// Extension into `[lo, hi]`: the limit extension clamped to the interval.
pub fn extend_bounded(
    ctx: &EmbeddingContext,
    f: &FuncExpr,
    lo: &Rational,
    hi: &Rational,
    stages: usize,
    tol: &Rational,
) -> Result<Extension> {
    if lo > hi {
        return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
    }
    let fine = tol / Rational::from_integer(BigInt::from(1000));
    let (a, b) = (Surd::from(lo.clone()), Surd::from(hi.clone()));
    for x in &ctx.e_samples {
        let (y, err) = evaluate(f, x, &fine)?;
        let y = y.as_real()?.clone();
        let slack = Surd::from(err);
        if y.add(&slack)? < a || y.sub(&slack)? > b {
            return Err(Error::hypothesis_at(format!("value {y} lies outside [{lo}, {hi}]"), x));
        }
    }
    let ext = extend_polish(ctx, f, &Target::Interval { lo: lo.clone(), hi: hi.clone() }, stages, tol)?;
    let g = FuncExpr::post(PostMap::Clamp { lo: lo.clone(), hi: hi.clone() }, ext.g)?;
    Ok(Extension { g, certificate: ext.certificate })
}

/// Real extension through the homeomorphism `φ(y) = y/(1+|y|)`:
/// `g = φ⁻¹(h·ψ)` with `h` a bounded extension of `φ∘f` into `[−1, 1]` and
/// `ψ` vanishing where `|h| = 1` and equal to `1` on `E`.
pub struct RealExtension {
    pub g: FuncExpr,
    pub bounded: Extension,
    pub separation: SeparationWitness,
    /// Tolerance used for `h`, small enough that `φ⁻¹` stretches it to at
    /// most the requested tolerance over the sampled range.
    pub inner_tolerance: Rational,
}

impl RealExtension {
    pub fn to_json(&self) -> Value {
        json!({
            "inner_tolerance": fmt_rational(&self.inner_tolerance),
            "bounded": self.bounded.certificate.to_json(),
            "separation_class": self.separation.class,
        })
    }
}

pub fn extend_real(ctx: &EmbeddingContext, f: &FuncExpr, stages: usize, tol: &Rational) -> Result<RealExtension> {
    let phi_f = FuncExpr::post(PostMap::Phi, relative_core(ctx, f))?;
    let fine = tol / Rational::from_integer(BigInt::from(1000));
    let mut top = Rational::from_integer(0.into());
    for x in &ctx.e_samples {
        let (y, err) = evaluate(&phi_f, x, &fine)?;
        let v = y.as_real()?.abs();
        let v = upper_rational(&v) + err;
        if v > top {
            top = v;
        }
    }
    if top >= Rational::one() {
        return Err(Error::Singularity(format!("sampled values of {f} are too large to compress")));
    }
    // φ⁻¹ has slope 1/(1−|u|)² at u.
    let gap = Rational::one() - &top;
    let mut inner = tol * &gap * &gap;
    while &inner / ((&gap - &inner) * (&gap - &inner)) > *tol {
        inner /= int(2);
    }
    let bounded = extend_polish(ctx, &phi_f, &Target::Interval { lo: int(-1), hi: int(1) }, stages, &inner)?;
    let limit = bounded.g.clone();
    let h = FuncExpr::post(PostMap::Clamp { lo: int(-1), hi: int(1) }, limit.clone())?;
    let above = preimage(&limit, &Region::Interval(Some(Surd::from(int(-1))), None))?;
    let below = preimage(&limit, &Region::Interval(None, Some(Surd::from(int(1)))))?;
    let ends = SetExpr::complement_of(SetExpr::intersection_of(vec![above, below]));
    let separation = ctx.separate(&ends)?;
    let g = FuncExpr::post(PostMap::PhiInv, FuncExpr::product(h, separation.f.clone()))?;
    Ok(RealExtension { g, bounded, separation, inner_tolerance: inner })
}

fn upper_rational(s: &Surd) -> Rational {
    // Dyadic upper bound, exact for rationals.
    if let Some(q) = s.as_rational() {
        return q.clone();
    }
    let k = BigInt::from(1u64 << 40);
    Rational::new(s.scale(&Rational::from_integer(k.clone())).floor() + 1, k)
}

/// Outcome of one round trip in [`verify_embedding_equivalences`].
#[derive(Clone, Debug)]
pub struct VerificationItem {
    pub set: String,
    pub ok: bool,
    pub checked: usize,
    pub detail: String,
}

impl VerificationItem {
    pub fn to_json(&self) -> Value {
        json!({ "set": self.set, "ok": self.ok, "checked": self.checked, "detail": self.detail })
    }
}

/// For each relatively ambiguous set `A`, extends `χ_A` into `[0, 1]`,
/// reads the multiplicative fibers `g ≥ 1` and `g ≤ 0`, inserts an
/// ambiguous set between them and compares its trace with `A`.
pub fn verify_embedding_equivalences(
    ctx: &EmbeddingContext,
    suite: &[SetExpr],
    stages: usize,
    tol: &Rational,
) -> Vec<VerificationItem> {
    suite
        .iter()
        .map(|a| {
            let mut checked = 0;
            let outcome = round_trip(ctx, a, stages, tol, &mut checked);
            let (ok, detail) = match outcome {
                Ok(None) => (true, "trace recovered".to_string()),
                Ok(Some(x)) => (false, format!("trace differs at {x}")),
                Err(e) => (false, e.to_string()),
            };
            VerificationItem { set: a.to_string(), ok, checked, detail }
        })
        .collect()
}

fn round_trip(
    ctx: &EmbeddingContext,
    a: &SetExpr,
    stages: usize,
    tol: &Rational,
    checked: &mut usize,
) -> Result<Option<Point>> {
    let core = strip_carrier(a, ctx.carrier());
    let tag = classify(&core)?;
    if !tag.le(ClassTag::ambiguous(ctx.alpha)) {
        return Err(Error::hypothesis(format!("{a} has class {} above ambiguous {}", tag.symbol(), ctx.alpha)));
    }
    let one = Point::rational(int(1));
    let zero = Point::rational(int(0));
    let chi = FuncExpr::step(vec![core.clone(), SetExpr::complement_of(core)], vec![one, zero])?;
    let chi = FuncExpr::restrict(chi, ctx.e.clone());
    let ext = extend_polish(ctx, &chi, &Target::Interval { lo: int(0), hi: int(1) }, stages, tol)?;
    let high = SetExpr::complement_of(preimage(&ext.g, &Region::Interval(None, Some(Surd::one())))?);
    let low = SetExpr::complement_of(preimage(&ext.g, &Region::Interval(Some(Surd::zero()), None))?);
    let d = insert_ambiguous(&high, &low, ctx.alpha, &ctx.check_points())?;
    for x in ctx.points_in_e()? {
        *checked += 1;
        if member(&x, &d)? != member(&x, a)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}
