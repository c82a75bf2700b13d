//! Extension of relatively defined sets and functions from a subspace `E`
//! to the ambient space, keeping the class.

mod polish;
mod real;

use std::collections::HashSet;

use crate::class::ClassTag;
use crate::construct::{
    complement_decomposition, insert_ambiguous, multiplicative_trace_extend, separating_function, SeparationWitness,
};
use crate::error::{Error, Result};
use crate::func::PartitionCode;
use crate::num::{int, rat, Surd};
use crate::point::Point;
use crate::sample::{witness_pool, Sampler};
use crate::set::{classify, member, Atom, MemberCx, SetExpr, SetKind};
use crate::space::{BaseSpace, TraceSubspace};

pub use polish::{extend_polish, Extension, ExtensionCertificate, SampleRow, StageCheck};
pub use real::{extend_bounded, extend_real, verify_embedding_equivalences, RealExtension, VerificationItem};

/// A subspace `E` of class `α` together with the points used to verify
/// every set handed out by its oracles.
#[derive(Clone, Debug)]
pub struct EmbeddingContext {
    pub e: TraceSubspace,
    pub alpha: u32,
    pub pool: Vec<Point>,
    /// Ambient samples.
    pub samples: Vec<Point>,
    /// Samples of `E`.
    pub e_samples: Vec<Point>,
}

impl EmbeddingContext {
    /// `E` must be multiplicative of class `α` in the ambient space.
    pub fn new(e: TraceSubspace, alpha: u32, seed: u64) -> Result<Self> {
        Self::with_sizes(e, alpha, seed, 200, 200)
    }

    pub fn with_sizes(e: TraceSubspace, alpha: u32, seed: u64, ambient: usize, inside: usize) -> Result<Self> {
        if !e.carrier_class.le(ClassTag::multiplicative(alpha)) {
            return Err(Error::hypothesis(format!(
                "subspace {} has class {} and is not multiplicative of class {alpha}",
                e.carrier,
                e.carrier_class.symbol()
            )));
        }
        let mut sampler = Sampler::new(seed);
        let samples = sampler.points(&e.ambient, ambient);
        let e_samples = sampler.subspace_points(&e, inside)?;
        let pool = witness_pool(&e.ambient, 256);
        Ok(EmbeddingContext { e, alpha, pool, samples, e_samples })
    }

    pub fn ambient(&self) -> &BaseSpace {
        &self.e.ambient
    }

    pub fn carrier(&self) -> &SetExpr {
        &self.e.carrier
    }

    /// Pool and sample points lying in `E`.
    pub fn points_in_e(&self) -> Result<Vec<Point>> {
        let mut out = self.e_samples.clone();
        for x in self.pool.iter().chain(&self.samples) {
            if self.e.contains(x)? {
                out.push(x.clone());
            }
        }
        Ok(out)
    }

    /// Ambient points used by sample checks.
    pub fn check_points(&self) -> Vec<Point> {
        self.samples.iter().chain(&self.pool).chain(&self.e_samples).cloned().collect()
    }

    /// Trace oracle: an ambient ambiguous code with the same trace as `rel`.
    pub fn trace_extend(&self, rel: &SetExpr) -> Result<SetExpr> {
        let out = ambiguous_extension(self, rel)?;
        self.verify_trace(rel, &out)?;
        Ok(out)
    }

    /// [`Self::trace_extend`] for several sets, verified together.
    pub fn trace_extend_all(&self, rels: &[SetExpr]) -> Result<Vec<SetExpr>> {
        let outs = rels.iter().map(|r| ambiguous_extension(self, r)).collect::<Result<Vec<_>>>()?;
        let changed: Vec<usize> = (0..rels.len()).filter(|&i| rels[i].id() != outs[i].id()).collect();
        if !changed.is_empty() {
            for x in self.points_in_e()? {
                let mut cx = MemberCx::new(&x);
                for &i in &changed {
                    if cx.member(&rels[i])? != cx.member(&outs[i])? {
                        return Err(Error::Oracle(format!("trace of {} differs from {} at {x}", outs[i], rels[i])));
                    }
                }
            }
        }
        Ok(outs)
    }

    fn verify_trace(&self, rel: &SetExpr, out: &SetExpr) -> Result<()> {
        if rel.id() == out.id() {
            return Ok(());
        }
        for x in self.points_in_e()? {
            if member(&x, rel)? != member(&x, out)? {
                return Err(Error::Oracle(format!("trace of {out} differs from {rel} at {x}")));
            }
        }
        Ok(())
    }

    /// Separation oracle: a function vanishing on `a` and equal to `1` on `E`.
    pub fn separate(&self, a: &SetExpr) -> Result<SeparationWitness> {
        separating_function(a, self.carrier(), self.alpha, &self.pool)
    }
}

/// Ambient ambiguous extension of a relatively ambiguous set, given ambient
/// multiplicative codes `inside` and `outside` whose traces are the set and
/// its relative complement.
pub fn ambiguous_trace_extend(ctx: &EmbeddingContext, inside: &SetExpr, outside: &SetExpr) -> Result<SetExpr> {
    let c1 = multiplicative_trace_extend(&ctx.e, inside, ctx.alpha)?;
    let c2 = multiplicative_trace_extend(&ctx.e, outside, ctx.alpha)?;
    for x in ctx.points_in_e()? {
        let mut cx = MemberCx::new(&x);
        if cx.member(&c1)? == cx.member(&c2)? {
            return Err(Error::hypothesis_at("the two codes do not split E into complementary traces", &x));
        }
    }
    let d = insert_ambiguous(&c1, &c2, ctx.alpha, &ctx.check_points())?;
    ctx.verify_trace(&c1, &d)?;
    Ok(d)
}

/// Ambient ambiguous code with the trace of `rel`. Intersections with the
/// carrier are dropped first, since they do not change the trace.
pub fn ambiguous_extension(ctx: &EmbeddingContext, rel: &SetExpr) -> Result<SetExpr> {
    let s = strip_carrier(rel, ctx.carrier());
    let tag = classify(&s)?;
    if tag.le(ClassTag::ambiguous(ctx.alpha)) {
        return Ok(s);
    }
    Err(Error::Oracle(format!(
        "{rel} has ambient class {} above ambiguous {}; give it as a pair of multiplicative codes",
        tag.symbol(),
        ctx.alpha
    )))
}

fn strip_carrier(s: &SetExpr, carrier: &SetExpr) -> SetExpr {
    if s.id() == carrier.id() {
        return SetExpr::full();
    }
    match s.kind() {
        SetKind::Intersection(cs) if cs.iter().any(|c| c.id() == carrier.id()) => {
            SetExpr::intersection_of(cs.iter().filter(|c| c.id() != carrier.id()).cloned().collect())
        }
        _ => s.clone(),
    }
}

/// Extends a finite partition `(A_n)` of `E` (ambient codes read through
/// their traces) to a partition `(B_n)` of the ambient space with
/// `E ∩ B_n = E ∩ A_n`.
///
/// `D_n` extends `A_n`; the separation of `E` has zero set `E` itself, and
/// `X ∖ E = ⋃ E_k` with disjoint ambiguous `E_k`. Then `C_n = E_n ∪ D_n`
/// and `B_n = C_n ∖ ⋃_{k<n} C_k`; the last piece takes every remaining `E_k`.
pub fn extend_partition(ctx: &EmbeddingContext, rel_parts: &[SetExpr]) -> Result<PartitionCode> {
    if rel_parts.is_empty() {
        return Err(Error::hypothesis("a partition needs at least one piece"));
    }
    let amb = ClassTag::ambiguous(ctx.alpha);
    let ds = ctx.trace_extend_all(rel_parts)?;
    let outside = complement_decomposition(ctx.carrier(), ctx.alpha)?.disjointify(amb);
    let last = rel_parts.len() - 1;
    let mut cs: Vec<SetExpr> = Vec::with_capacity(rel_parts.len());
    for (n, d) in ds.iter().enumerate().take(last) {
        let en = match outside.len() {
            Some(len) if n >= len => SetExpr::empty(),
            _ => outside.piece(n)?,
        };
        cs.push(SetExpr::union_of(vec![en, d.clone()]));
    }
    let mut pieces = Vec::with_capacity(rel_parts.len());
    let mut earlier = SetExpr::empty();
    for c in cs {
        pieces.push(SetExpr::minus(&c, &earlier));
        earlier = SetExpr::union_of(vec![earlier, c]);
    }
    pieces.push(SetExpr::complement_of(earlier));
    Ok(PartitionCode::certified(pieces))
}

/// Points of `E` meeting every nonempty trace of a Boolean combination of
/// the given codes, and whether that is exact.
pub(crate) struct EWitnesses {
    pub points: Vec<Point>,
    pub exact: bool,
}

/// On a real base space, codes built from interval atoms and the rationals
/// are constant on the rational and on the irrational points of each cell
/// between consecutive endpoints, so endpoints plus one point of each kind
/// per cell meet every nonempty combination. Otherwise the pool is used.
pub(crate) fn e_witnesses(ctx: &EmbeddingContext, codes: &[SetExpr]) -> Result<EWitnesses> {
    let mut candidates = match ctx.ambient() {
        BaseSpace::Finite(f) => Some((0..f.size()).map(Point::Finite).collect()),
        space if space.is_real() => cell_points(space, codes),
        _ => None,
    };
    let exact = candidates.is_some();
    let mut points = Vec::new();
    let mut seen = HashSet::new();
    let all = candidates.take().unwrap_or_default().into_iter().chain(ctx.points_in_e()?);
    for x in all {
        if ctx.e.contains(&x)? && seen.insert(x.clone()) {
            points.push(x);
        }
    }
    Ok(EWitnesses { points, exact })
}

fn cell_points(space: &BaseSpace, codes: &[SetExpr]) -> Option<Vec<Point>> {
    let mut ends: Vec<Surd> = Vec::new();
    let mut seen = HashSet::new();
    let mut stack: Vec<SetExpr> = codes.to_vec();
    while let Some(s) = stack.pop() {
        if !seen.insert(s.id()) {
            continue;
        }
        match s.kind() {
            SetKind::Open(Atom::Interval(i)) | SetKind::Closed(Atom::Interval(i)) => {
                ends.extend(i.lo.value().cloned());
                ends.extend(i.hi.value().cloned());
            }
            SetKind::Union(cs) | SetKind::Intersection(cs) => stack.extend(cs.iter().cloned()),
            SetKind::Complement(c) => stack.push(c.clone()),
            SetKind::Family(f) if f.id() == "rationals" => {}
            SetKind::Empty | SetKind::Full => {}
            _ => return None,
        }
    }
    match space {
        BaseSpace::UnitInterval => ends.extend([Surd::zero(), Surd::one()]),
        _ => {
            let lo = ends.iter().min().cloned().unwrap_or_else(Surd::zero);
            let hi = ends.iter().max().cloned().unwrap_or_else(Surd::zero);
            ends.push(lo.sub(&Surd::one()).ok()?);
            ends.push(hi.add(&Surd::one()).ok()?);
        }
    }
    ends.sort();
    ends.dedup();
    let t1 = Surd::new(int(-1), int(1), 2).ok()?;
    let t2 = Surd::new(int(2), int(-1), 2).ok()?;
    let mut out = Vec::with_capacity(ends.len() * 3);
    for w in ends.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let len = b.sub(a).ok()?;
        let mid = a.add(&len.scale(&rat(1, 2))).ok()?;
        out.push(a.clone());
        out.push(mid);
        // One of these two is irrational whenever b − a ≠ 0.
        out.push(a.add(&len.mul(&t1).ok()?).ok()?);
        out.push(a.add(&len.mul(&t2).ok()?).ok()?);
        if let Some(q) = rational_inside(a, b) {
            out.push(q);
        }
    }
    out.extend(ends.last().cloned());
    Some(out.into_iter().map(Point::Real).filter(|x| space.contains(x)).collect())
}

/// A rational strictly between two surds, by bisection on a dyadic grid.
fn rational_inside(a: &Surd, b: &Surd) -> Option<Surd> {
    if a.is_rational() && b.is_rational() {
        return None;
    }
    let mut k = 1i64;
    while k < 1 << 40 {
        let scale = rat(1, k);
        let lo = a.scale(&int(k)).floor() + 1;
        let q = Surd::from(crate::num::Rational::from_integer(lo) * &scale);
        if q > *a && q < *b {
            return Some(q);
        }
        k *= 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::{Interval, Rationals};
    use std::sync::Arc;

    fn closed(a: (i64, i64), b: (i64, i64)) -> SetExpr {
        SetExpr::closed_interval(Interval::closed(rat(a.0, a.1), rat(b.0, b.1)))
    }

    fn half_ctx() -> EmbeddingContext {
        let e = TraceSubspace::new(BaseSpace::UnitInterval, closed((0, 1), (1, 2))).unwrap();
        EmbeddingContext::new(e, 1, 11).unwrap()
    }

    fn irrationals_ctx() -> EmbeddingContext {
        let irr = SetExpr::complement(SetExpr::family(Arc::new(Rationals)));
        EmbeddingContext::new(TraceSubspace::new(BaseSpace::UnitInterval, irr).unwrap(), 1, 5).unwrap()
    }

    fn assert_extends(ctx: &EmbeddingContext, rel: &[SetExpr], out: &PartitionCode) {
        for x in ctx.check_points() {
            let mut cx = MemberCx::new(&x);
            let inside: Vec<usize> = (0..out.pieces.len()).filter(|&i| cx.member(&out.pieces[i]).unwrap()).collect();
            assert_eq!(inside.len(), 1, "{x}: {inside:?}");
            if ctx.e.contains(&x).unwrap() {
                assert!(cx.member(&rel[inside[0]]).unwrap(), "{x} lands in piece {}", inside[0]);
            }
        }
        for p in &out.pieces {
            assert!(classify(p).unwrap().le(ClassTag::ambiguous(ctx.alpha)), "{p}");
        }
    }

    #[test]
    fn half_interval_partition_extends() {
        let ctx = half_ctx();
        let lo = closed((0, 1), (1, 4));
        let hi = SetExpr::open_interval(Interval::new(
            crate::set::Endpoint::Open(rat(1, 4).into()),
            crate::set::Endpoint::Closed(rat(1, 2).into()),
        ));
        let rel = [lo, hi];
        let out = extend_partition(&ctx, &rel).unwrap();
        assert_extends(&ctx, &rel, &out);
    }

    #[test]
    fn whole_subspace_gives_whole_space() {
        let ctx = half_ctx();
        let out = extend_partition(&ctx, &[ctx.carrier().clone()]).unwrap();
        assert!(out.pieces[0].is_full_code());
    }

    #[test]
    fn empty_relative_piece_has_empty_trace() {
        let ctx = irrationals_ctx();
        let rel = [SetExpr::empty(), SetExpr::full()];
        let out = extend_partition(&ctx, &rel).unwrap();
        assert_extends(&ctx, &rel, &out);
        assert!(member(&Point::rational(rational_at(0)), &out.pieces[0]).unwrap());
    }

    #[test]
    fn irrational_trace_of_an_open_set_is_stripped() {
        let ctx = irrationals_ctx();
        let half = SetExpr::open_interval(Interval::open(rat(0, 1), rat(1, 2)));
        let rel = SetExpr::intersection(vec![half.clone(), ctx.carrier().clone()]);
        assert_eq!(ctx.trace_extend(&rel).unwrap().id(), half.id());
        let bad = SetExpr::intersection(vec![ctx.carrier().clone(), SetExpr::complement(ctx.carrier().clone())]);
        assert!(matches!(ctx.trace_extend(&SetExpr::union(vec![bad, ctx.carrier().clone()])), Err(Error::Oracle(_))));
    }

    #[test]
    fn multiplicative_pair_gives_ambiguous_extension() {
        let ctx = irrationals_ctx();
        let d = ambiguous_trace_extend(&ctx, &closed((0, 1), (1, 2)), &closed((1, 2), (1, 1))).unwrap();
        assert!(classify(&d).unwrap().le(ClassTag::ambiguous(1)));
        let mut s = Sampler::new(8);
        for x in s.surds(&rat(0, 1), &rat(1, 1), 100) {
            assert_eq!(member(&x, &d).unwrap(), x.as_real().unwrap() < &Surd::from(rat(1, 2)), "{x}");
        }
        let overlap = ambiguous_trace_extend(&ctx, &closed((0, 1), (3, 4)), &closed((1, 2), (1, 1)));
        assert!(overlap.is_err());
    }

    #[test]
    fn cell_witnesses_find_thin_traces() {
        let ctx = irrationals_ctx();
        let a = SetExpr::open_interval(Interval::open(rat(1, 3), rat(1, 3) + rat(1, 1000)));
        let w = e_witnesses(&ctx, &[a.clone()]).unwrap();
        assert!(w.exact);
        assert!(w.points.iter().any(|x| member(x, &a).unwrap()));
        assert!(w.points.iter().all(|x| ctx.e.contains(x).unwrap()));
    }

    use crate::num::rational_at;
}
