//! Countable decompositions of additive sets into ambiguous pieces.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::set::{
    classify, ComplementMembers, Decomposition, Family, FamilyMode, Interleave, MemberCx, Restricted, SetExpr,
    SetKind,
};
use crate::space::{pair, unpair};

/// Writes an additive set of class `α` as a countable union of sets
/// ambiguous of class `α`.
pub fn additive_decomposition(s: &SetExpr, alpha: u32) -> Result<Decomposition> {
    let tag = classify(s)?;
    if tag.le(ClassTag::ambiguous(alpha)) {
        return Ok(if s.is_empty_code() { Decomposition::Finite(vec![]) } else { Decomposition::Finite(vec![s.clone()]) });
    }
    if !tag.le(ClassTag::additive(alpha)) || alpha == 0 {
        return Err(Error::hypothesis(format!(
            "{s} has class {} and is not a countable union of ambiguous sets of class {alpha}",
            tag.symbol()
        )));
    }
    let amb = ClassTag::ambiguous(alpha);
    match s.kind() {
        SetKind::Union(cs) => {
            let parts = cs.iter().map(|c| additive_decomposition(c, alpha)).collect::<Result<Vec<_>>>()?;
            Ok(interleave(parts, ClassTag::additive(alpha), amb))
        }
        SetKind::Family(f) if f.mode() == FamilyMode::Union && f.member_class().le(amb) => {
            Ok(Decomposition::Family(f.clone()))
        }
        SetKind::Family(f) if f.mode() == FamilyMode::Union => Err(Error::Unsupported(format!(
            "members of {} have class {} above the ambiguous class {alpha}",
            f.text(),
            f.member_class().symbol()
        ))),
        SetKind::Complement(c) => complement_decomposition(c, alpha),
        SetKind::Intersection(cs) => {
            let mut plain = Vec::new();
            let mut additive = Vec::new();
            for c in cs {
                if classify(c)?.le(amb) {
                    plain.push(c.clone());
                } else {
                    additive.push(additive_decomposition(c, alpha)?);
                }
            }
            let rest = SetExpr::intersection_of(plain);
            let core = if additive.len() == 1 { additive.pop().unwrap() } else { meet(additive, alpha) };
            Ok(restrict(core, rest, alpha))
        }
        _ => Err(Error::Unsupported(format!("no additive decomposition rule for {s}"))),
    }
}

/// Writes `X ∖ c`, for `c` multiplicative of class `α`, as a countable union
/// of sets ambiguous of class `α`.
pub fn complement_decomposition(c: &SetExpr, alpha: u32) -> Result<Decomposition> {
    let tag = classify(c)?.complement();
    let amb = ClassTag::ambiguous(alpha);
    if tag.le(amb) {
        let rest = SetExpr::complement_of(c.clone());
        return Ok(if rest.is_empty_code() { Decomposition::Finite(vec![]) } else { Decomposition::Finite(vec![rest]) });
    }
    if !tag.le(ClassTag::additive(alpha)) || alpha == 0 {
        return Err(Error::hypothesis(format!(
            "the complement of {c} has class {} and is not a countable union of ambiguous sets of class {alpha}",
            tag.symbol()
        )));
    }
    match c.kind() {
        SetKind::Intersection(cs) => {
            let parts = cs.iter().map(|d| complement_decomposition(d, alpha)).collect::<Result<Vec<_>>>()?;
            Ok(interleave(parts, ClassTag::additive(alpha), amb))
        }
        SetKind::Union(cs) => {
            let parts = cs.iter().map(|d| complement_decomposition(d, alpha)).collect::<Result<Vec<_>>>()?;
            Ok(meet(parts, alpha))
        }
        SetKind::Complement(d) => additive_decomposition(d, alpha),
        SetKind::Family(f) if f.mode() == FamilyMode::Intersection && f.member_class().complement().le(amb) => {
            Ok(Decomposition::Family(Arc::new(ComplementMembers::new(f.clone())?)))
        }
        _ => Err(Error::Unsupported(format!("no decomposition rule for the complement of {c}"))),
    }
}

fn interleave(parts: Vec<Decomposition>, class: ClassTag, member_class: ClassTag) -> Decomposition {
    if parts.iter().all(|p| p.len().is_some() && matches!(p, Decomposition::Finite(_))) {
        let mut out = Vec::new();
        for p in parts {
            if let Decomposition::Finite(ps) = p {
                out.extend(ps);
            }
        }
        return Decomposition::Finite(out);
    }
    Decomposition::Family(Arc::new(Interleave::new(parts, class, member_class)))
}

fn restrict(d: Decomposition, to: SetExpr, alpha: u32) -> Decomposition {
    if to.is_full_code() {
        return d;
    }
    match d {
        Decomposition::Finite(ps) => {
            Decomposition::Finite(ps.into_iter().map(|p| SetExpr::intersection_of(vec![p, to.clone()])).collect())
        }
        Decomposition::Family(f) => Decomposition::Family(Arc::new(Restricted::new(f, to, ClassTag::ambiguous(alpha)))),
    }
}

/// Pieces of `⋂_t D_t`: all intersections `P_{1,j_1} ∩ … ∩ P_{r,j_r}`.
fn meet(parts: Vec<Decomposition>, alpha: u32) -> Decomposition {
    if parts.iter().all(|p| matches!(p, Decomposition::Finite(_))) {
        let mut acc: Vec<SetExpr> = vec![SetExpr::full()];
        for p in &parts {
            let Decomposition::Finite(ps) = p else { unreachable!() };
            let mut next = Vec::with_capacity(acc.len() * ps.len());
            for a in &acc {
                for q in ps {
                    next.push(SetExpr::intersection_of(vec![a.clone(), q.clone()]));
                }
            }
            acc = next;
        }
        return Decomposition::Finite(acc);
    }
    Decomposition::Family(Arc::new(Meet { parts, alpha }))
}

/// Product family over several decompositions, indexed by iterated pairing
/// `⟨…⟨⟨j_1, j_2⟩, j_3⟩…⟩`, which is monotone in every coordinate.
pub struct Meet {
    parts: Vec<Decomposition>,
    alpha: u32,
}

impl Meet {
    fn encode(js: &[u64]) -> u64 {
        js[1..].iter().fold(js[0], |acc, &j| pair(acc, j))
    }

    fn decode(mut n: u64, r: usize) -> Vec<u64> {
        let mut out = vec![0; r];
        for t in (1..r).rev() {
            let (rest, j) = unpair(n);
            out[t] = j;
            n = rest;
        }
        out[0] = n;
        out
    }
}

impl Family for Meet {
    fn id(&self) -> &'static str {
        "meet"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::additive(self.alpha)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::ambiguous(self.alpha)
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        let js = Meet::decode(n as u64, self.parts.len());
        let pieces = self.parts.iter().zip(js).map(|(p, j)| p.piece(j as usize)).collect::<Result<Vec<_>>>()?;
        Ok(SetExpr::intersection_of(pieces))
    }

    fn len(&self) -> Option<usize> {
        None
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        let mut js = Vec::with_capacity(self.parts.len());
        for p in &self.parts {
            match p.first_index(cx)? {
                Some(j) => js.push(j as u64),
                None => return Ok(None),
            }
        }
        Ok(Some(Meet::encode(&js) as usize))
    }

    fn params(&self) -> Value {
        json!({ "parts": self.parts.iter().map(|p| p.as_set().to_json()).collect::<Vec<_>>(), "alpha": self.alpha })
    }

    fn text(&self) -> String {
        let parts: Vec<String> = self.parts.iter().map(|p| format!("{p:?}")).collect();
        format!("meet({})", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::point::Point;
    use crate::sample::Sampler;
    use crate::set::{member, Interval, Rationals, Shells};
    use crate::space::BaseSpace;

    fn check_decomposition(s: &SetExpr, d: &Decomposition, alpha: u32) {
        assert!(d.piece_class().unwrap().le(ClassTag::ambiguous(alpha)));
        for x in Sampler::new(5).points(&BaseSpace::UnitInterval, 300) {
            let idx = d.first_index_of(&x).unwrap();
            assert_eq!(idx.is_some(), member(&x, s).unwrap(), "{x}");
            if let Some(i) = idx {
                assert!(member(&x, &d.piece(i).unwrap()).unwrap(), "{x} not in piece {i}");
                for k in 0..i.min(64) {
                    assert!(!member(&x, &d.piece(k).unwrap()).unwrap(), "{x} already in piece {k}");
                }
            }
        }
    }

    #[test]
    fn meet_codes_are_monotone_bijections() {
        for n in 0..500u64 {
            assert_eq!(Meet::encode(&Meet::decode(n, 3)), n);
        }
        assert!(Meet::encode(&[1, 2, 3]) < Meet::encode(&[1, 3, 3]));
    }

    #[test]
    fn rationals_intersected_with_irrational_complement_shells() {
        let q = SetExpr::family(Arc::new(Rationals));
        let sh = SetExpr::family(Arc::new(Shells::new(Interval::closed(rat(1, 4), rat(1, 2))).unwrap()));
        let s = SetExpr::intersection(vec![q.clone(), sh.clone()]);
        let d = additive_decomposition(&s, 1).unwrap();
        check_decomposition(&s, &d, 1);
        let u = SetExpr::union(vec![q.clone(), SetExpr::open_interval(Interval::open(rat(1, 3), rat(2, 3)))]);
        check_decomposition(&u, &additive_decomposition(&u, 1).unwrap(), 1);
        let irr = SetExpr::complement(q);
        let c = complement_decomposition(&irr, 1).unwrap();
        check_decomposition(&SetExpr::complement(irr), &c, 1);
    }

    #[test]
    fn additive_class_two_is_rejected_at_one() {
        let q = SetExpr::family(Arc::new(Rationals));
        let bad = SetExpr::union(vec![SetExpr::complement(q), SetExpr::closed_interval(Interval::point(rat(1, 2)))]);
        assert!(matches!(additive_decomposition(&bad, 1), Err(Error::Hypothesis { .. })));
        let open = SetExpr::open_interval(Interval::open(rat(0, 1), rat(1, 2)));
        assert!(additive_decomposition(&open, 0).is_err());
        let _ = Point::rational(rat(0, 1));
    }
}
