//! Splitting a first-category space into two disjoint dense pieces, and
//! multiplicative trace extension.

use serde_json::{json, Value};

use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::set::{classify, Atom, MemberCx, SetExpr, SetKind};
use crate::space::TraceSubspace;

/// Ambient multiplicative code of class `α` whose trace on `E` is `a_rel`.
/// Relative sets are ambient codes, so this is `a_rel ∩ E` once both are
/// multiplicative of class `α`.
pub fn multiplicative_trace_extend(e: &TraceSubspace, a_rel: &SetExpr, alpha: u32) -> Result<SetExpr> {
    let mult = ClassTag::multiplicative(alpha);
    if !e.carrier_class.le(mult) {
        return Err(Error::hypothesis(format!(
            "carrier {} has class {} and is not multiplicative of class {alpha}",
            e.carrier,
            e.carrier_class.symbol()
        )));
    }
    let tag = classify(a_rel)?;
    if !tag.le(mult) {
        return Err(Error::hypothesis(format!(
            "{a_rel} has class {} and is not multiplicative of class {alpha}",
            tag.symbol()
        )));
    }
    if a_rel.id() == e.carrier.id() {
        return Ok(e.carrier.clone());
    }
    Ok(SetExpr::intersection_of(vec![a_rel.clone(), e.carrier.clone()]))
}

/// Result of [`split_first_category`].
#[derive(Clone, Debug)]
pub struct Split {
    pub a: SetExpr,
    pub b: SetExpr,
    /// Block ends `n_1 < m_1 < n_2 < …` as 1-based piece counts.
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    /// Witnesses of `A ∩ V_k` and `B ∩ V_k`.
    pub witnesses: Vec<(Point, Point)>,
    pub pieces_a: Vec<usize>,
    pub pieces_b: Vec<usize>,
}

impl Split {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "m": self.m,
            "witnesses": self.witnesses.iter().map(|(a, b)| json!([a.to_json(), b.to_json()])).collect::<Vec<_>>(),
            "pieces_a": self.pieces_a,
            "pieces_b": self.pieces_b,
        })
    }
}

/// Splits `⋃ X_n` (closed nowhere dense pieces of `E`) into disjoint `A`, `B`
/// meeting each of the first `k` π-base sets. With `E_i = X_i ∖ ⋃_{j<i} X_j`,
/// blocks `E_{m_{k-1}+1..n_k}` go to `A` and `E_{n_k+1..m_k}` to `B`, each
/// chosen as short as possible. Pieces after the last block go to `A`.
/// Meeting is decided by witness points: the point of a singleton piece,
/// otherwise points of `pool`.
pub fn split_first_category(e: &TraceSubspace, xs: &[SetExpr], k: usize, pool: &[Point]) -> Result<Split> {
    let in_e: Vec<Point> =
        pool.iter().filter(|x| e.contains(x).unwrap_or(false)).cloned().collect();
    let vs = e.ambient.pi_base(k);
    for (i, x) in xs.iter().enumerate() {
        if !is_closed(x)? {
            return Err(Error::hypothesis(format!("piece {i} ({x}) is not closed")));
        }
        for (j, v) in vs.iter().enumerate() {
            let mut inside = in_e.iter().filter(|p| crate::set::member(p, v).unwrap_or(false)).peekable();
            if inside.peek().is_some() && inside.all(|p| crate::set::member(p, x).unwrap_or(true)) {
                return Err(Error::hypothesis(format!(
                    "piece {i} ({x}) contains every sampled point of pi-base set {j} and looks somewhere dense"
                )));
            }
        }
    }
    let es: Vec<SetExpr> = (0..xs.len())
        .map(|i| if i == 0 { xs[0].clone() } else { SetExpr::minus(&xs[i], &SetExpr::union_of(xs[..i].to_vec())) })
        .collect();
    // Candidate witnesses of each E_i.
    let mut cands: Vec<Vec<Point>> = Vec::with_capacity(xs.len());
    for (i, x) in xs.iter().enumerate() {
        let mut c: Vec<Point> = singleton(x).into_iter().filter(|p| e.contains(p).unwrap_or(false)).collect();
        c.extend(in_e.iter().filter(|p| crate::set::member(p, x).unwrap_or(false)).cloned());
        let mut kept = Vec::new();
        for p in c {
            if crate::set::member(&p, &es[i])? {
                kept.push(p);
            }
        }
        cands.push(kept);
    }
    let hit = |i: usize, v: &SetExpr| -> Result<Option<Point>> {
        for p in &cands[i] {
            if MemberCx::new(p).member(v)? {
                return Ok(Some(p.clone()));
            }
        }
        Ok(None)
    };
    let mut next = 0usize;
    let (mut ns, mut ms, mut witnesses) = (Vec::new(), Vec::new(), Vec::new());
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    for (j, v) in vs.iter().enumerate() {
        let mut wa = None;
        while wa.is_none() {
            if next >= xs.len() {
                return Err(Error::DepthExhausted { k: j, what: format!("no piece left for A to meet {v}") });
            }
            wa = hit(next, v)?;
            pa.push(next);
            next += 1;
        }
        ns.push(next);
        let mut wb = None;
        while wb.is_none() {
            if next >= xs.len() {
                return Err(Error::DepthExhausted { k: j, what: format!("no piece left for B to meet {v}") });
            }
            wb = hit(next, v)?;
            pb.push(next);
            next += 1;
        }
        ms.push(next);
        witnesses.push((wa.unwrap(), wb.unwrap()));
    }
    pa.extend(next..xs.len());
    let union = |idx: &[usize]| SetExpr::union_of(idx.iter().map(|&i| es[i].clone()).collect());
    Ok(Split { a: union(&pa), b: union(&pb), n: ns, m: ms, witnesses, pieces_a: pa, pieces_b: pb })
}

fn is_closed(x: &SetExpr) -> Result<bool> {
    Ok(classify(x)?.le(ClassTag::multiplicative(0))
        || matches!(x.kind(), SetKind::Union(cs) if cs.iter().all(|c| classify(c).is_ok_and(|t| t.le(ClassTag::multiplicative(0))))))
}

fn singleton(x: &SetExpr) -> Option<Point> {
    match x.kind() {
        SetKind::Closed(Atom::Interval(i)) if i.lo == i.hi => i.lo.value().map(|v| Point::Real(v.clone())),
        SetKind::Closed(Atom::Finite { mask, .. }) if mask.count_ones() == 1 => Some(Point::Finite(mask.trailing_zeros())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rational_at};
    use crate::sample::witness_pool;
    use crate::set::{member, Interval, Rationals};
    use crate::space::BaseSpace;
    use std::sync::Arc;

    fn rationals_subspace() -> TraceSubspace {
        TraceSubspace::new(BaseSpace::UnitInterval, SetExpr::family(Arc::new(Rationals))).unwrap()
    }

    fn singletons(n: u64) -> Vec<SetExpr> {
        (0..n).map(|i| SetExpr::closed_interval(Interval::point(rational_at(i)))).collect()
    }

    #[test]
    fn rationals_split_meets_each_pi_base_set() {
        let e = rationals_subspace();
        let pool = witness_pool(&BaseSpace::UnitInterval, 300);
        let s = split_first_category(&e, &singletons(64), 5, &pool).unwrap();
        let vs = BaseSpace::UnitInterval.pi_base(5);
        for (j, (wa, wb)) in s.witnesses.iter().enumerate() {
            assert!(member(wa, &s.a).unwrap() && member(wa, &vs[j]).unwrap());
            assert!(member(wb, &s.b).unwrap() && member(wb, &vs[j]).unwrap());
        }
        for i in 0..64 {
            let x = crate::point::Point::rational(rational_at(i));
            assert!(member(&x, &s.a).unwrap() != member(&x, &s.b).unwrap(), "{x}");
        }
    }

    #[test]
    fn degenerate_depth_puts_everything_in_a() {
        let e = rationals_subspace();
        let s = split_first_category(&e, &singletons(1), 0, &[]).unwrap();
        assert_eq!(s.pieces_a, vec![0]);
        assert!(s.b.is_empty_code());
    }

    #[test]
    fn two_pieces_inside_the_first_set() {
        let e = rationals_subspace();
        let xs = vec![
            SetExpr::closed_interval(Interval::point(rat(1, 3))),
            SetExpr::closed_interval(Interval::point(rat(2, 3))),
        ];
        let s = split_first_category(&e, &xs, 1, &[]).unwrap();
        assert_eq!((s.n.clone(), s.m.clone()), (vec![1], vec![2]));
        let err = split_first_category(&e, &xs, 2, &[]).unwrap_err();
        assert!(matches!(err, Error::DepthExhausted { k: 1, .. }));
    }

    #[test]
    fn multiplicative_trace_of_irrationals() {
        let irr = SetExpr::complement(SetExpr::family(Arc::new(Rationals)));
        let e = TraceSubspace::new(BaseSpace::UnitInterval, irr).unwrap();
        let half = SetExpr::closed_interval(Interval::closed(rat(0, 1), rat(1, 2)));
        let t = multiplicative_trace_extend(&e, &half, 1).unwrap();
        assert!(classify(&t).unwrap().le(ClassTag::multiplicative(1)));
        let mut s = crate::sample::Sampler::new(3);
        for x in s.surds(&rat(0, 1), &rat(1, 1), 100) {
            assert_eq!(member(&x, &t).unwrap(), e.trace_member(&x, &half).unwrap());
        }
        assert!(multiplicative_trace_extend(&e, &SetExpr::empty(), 1).unwrap().is_empty_code());
        let q = rationals_subspace();
        assert!(multiplicative_trace_extend(&q, &half, 1).is_err());
    }
}
