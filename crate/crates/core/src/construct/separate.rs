//! Zero-set functions, separation of multiplicative sets and insertion of
//! ambiguous sets between them.

use std::sync::Arc;

use serde_json::{json, Value};

use super::{check_disjoint, complement_decomposition, refine_cover};
use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::func::{evaluate_exact, function_class, FuncExpr, ZeroSetFn};
use crate::num::rat;
use crate::point::Point;
use crate::set::{
    classify, Atom, Decomposition, Endpoint, Family, FamilyMode, Interleave, Interval, MemberCx, SetExpr, SetKind,
    Shells,
};

/// A function that is `0` on `zero_side` and `1` on `one_side`.
#[derive(Clone, Debug)]
pub struct SeparationWitness {
    pub f: FuncExpr,
    pub zero_side: SetExpr,
    pub one_side: SetExpr,
    pub class: u32,
}

impl SeparationWitness {
    pub fn to_json(&self) -> Value {
        json!({
            "f": self.f.to_json(),
            "zero_side": self.zero_side.to_json(),
            "one_side": self.one_side.to_json(),
            "class": self.class,
        })
    }
}

fn require_multiplicative(s: &SetExpr, alpha: u32) -> Result<()> {
    let tag = classify(s)?;
    if tag.le(ClassTag::multiplicative(alpha)) || (alpha == 0 && is_closed_code(s)) {
        Ok(())
    } else {
        Err(Error::hypothesis(format!("{s} has class {} and is not multiplicative of class {alpha}", tag.symbol())))
    }
}

/// Closed by construction: finite unions and intersections of closed atoms
/// and complements of open atoms. The class tag of such a union is only an
/// upper bound.
fn is_closed_code(s: &SetExpr) -> bool {
    match s.kind() {
        SetKind::Closed(_) | SetKind::Empty | SetKind::Full => true,
        SetKind::Union(cs) | SetKind::Intersection(cs) => cs.iter().all(is_closed_code),
        SetKind::Complement(c) => matches!(c.kind(), SetKind::Open(_)),
        _ => false,
    }
}

/// A function of class `α` with values in `[0, 1]` whose zero set is
/// exactly `a`: `1/(n+1)` on the `n`-th piece of a disjoint decomposition
/// of `X ∖ a`. At `α = 0` distance functions are used instead.
pub fn zero_set_function(a: &SetExpr, alpha: u32) -> Result<FuncExpr> {
    require_multiplicative(a, alpha)?;
    if alpha == 0 {
        return continuous_zero_set(a);
    }
    let pieces = match a.kind() {
        SetKind::Closed(Atom::Interval(i)) if !i.is_empty() => Decomposition::Family(Arc::new(Shells::new(i.clone())?)),
        _ => complement_decomposition(a, alpha)?.disjointify(ClassTag::ambiguous(alpha)),
    };
    Ok(FuncExpr::zero_set(ZeroSetFn { zero: a.clone(), pieces, alpha }))
}

fn continuous_zero_set(a: &SetExpr) -> Result<FuncExpr> {
    let zero = || Point::rational(rat(0, 1));
    let one = || Point::rational(rat(1, 1));
    match a.kind() {
        SetKind::Empty => return Ok(FuncExpr::constant(one())),
        SetKind::Full => return Ok(FuncExpr::constant(zero())),
        SetKind::Closed(Atom::Interval(i)) if !i.is_empty() => return FuncExpr::distance(vec![i.clone()]),
        SetKind::Union(cs) => {
            let fs = cs.iter().map(continuous_zero_set).collect::<Result<Vec<_>>>()?;
            return combine(crate::func::ArithOp::Product, fs, one);
        }
        SetKind::Intersection(cs) => {
            let fs = cs.iter().map(continuous_zero_set).collect::<Result<Vec<_>>>()?;
            return combine(crate::func::ArithOp::Sum, fs, zero);
        }
        SetKind::Complement(c) => {
            if let SetKind::Open(Atom::Interval(i)) = c.kind() {
                if let Some(rays) = complement_rays(i) {
                    return if rays.is_empty() { Ok(FuncExpr::constant(one())) } else { FuncExpr::distance(rays) };
                }
            }
        }
        _ => {}
    }
    if classify(a)?.le(ClassTag::ambiguous(0)) {
        return FuncExpr::step(vec![a.clone(), SetExpr::complement(a.clone())], vec![zero(), one()]);
    }
    Err(Error::Unsupported(format!("no continuous zero-set function for {a}")))
}

/// `op` over `fs`; an empty list gives `unit` and a single operand itself.
fn combine(op: crate::func::ArithOp, mut fs: Vec<FuncExpr>, unit: impl Fn() -> Point) -> Result<FuncExpr> {
    match fs.len() {
        0 => Ok(FuncExpr::constant(unit())),
        1 => Ok(fs.pop().expect("one operand")),
        _ => FuncExpr::arith(op, fs),
    }
}

/// Closed rays making up `ℝ ∖ I` for an interval with open or missing ends.
fn complement_rays(i: &Interval) -> Option<Vec<Interval>> {
    let mut out = Vec::new();
    match &i.lo {
        Endpoint::Unbounded => {}
        Endpoint::Open(a) => out.push(Interval::new(Endpoint::Unbounded, Endpoint::Closed(a.clone()))),
        Endpoint::Closed(_) => return None,
    }
    match &i.hi {
        Endpoint::Unbounded => {}
        Endpoint::Open(b) => out.push(Interval::new(Endpoint::Closed(b.clone()), Endpoint::Unbounded)),
        Endpoint::Closed(_) => return None,
    }
    Some(out)
}

/// `f = f_a / (f_a + f_b)` for disjoint multiplicative sets of class `α`.
/// Disjointness is checked on `points`.
pub fn separating_function(a: &SetExpr, b: &SetExpr, alpha: u32, points: &[Point]) -> Result<SeparationWitness> {
    require_multiplicative(a, alpha)?;
    require_multiplicative(b, alpha)?;
    check_disjoint(a, b, points)?;
    let fa = zero_set_function(a, alpha)?;
    let fb = zero_set_function(b, alpha)?;
    let f = FuncExpr::quotient(fa.clone(), FuncExpr::sum(fa, fb));
    let class = function_class(&f);
    Ok(SeparationWitness { f, zero_side: a.clone(), one_side: b.clone(), class })
}

/// An ambiguous set `C` of class `α` with `a ⊆ C ⊆ X ∖ b`: the second piece
/// of the refinement of the cover `{X ∖ a, X ∖ b}`.
pub fn insert_ambiguous(a: &SetExpr, b: &SetExpr, alpha: u32, points: &[Point]) -> Result<SetExpr> {
    require_multiplicative(a, alpha)?;
    require_multiplicative(b, alpha)?;
    check_disjoint(a, b, points)?;
    let cover = [SetExpr::complement_of(a.clone()), SetExpr::complement_of(b.clone())];
    let mut refined = refine_cover(&cover, alpha)?;
    Ok(refined.pieces.swap_remove(1))
}

/// Pieces of a countable union that are multiplicative of class `α`.
pub fn multiplicative_pieces(s: &SetExpr, alpha: u32) -> Result<Decomposition> {
    let mult = ClassTag::multiplicative(alpha);
    if s.is_empty_code() {
        return Ok(Decomposition::Finite(vec![]));
    }
    if classify(s)?.le(mult) {
        return Ok(Decomposition::Finite(vec![s.clone()]));
    }
    match s.kind() {
        SetKind::Union(cs) => {
            let parts = cs.iter().map(|c| multiplicative_pieces(c, alpha)).collect::<Result<Vec<_>>>()?;
            if parts.iter().all(|p| matches!(p, Decomposition::Finite(_))) {
                let mut out = Vec::new();
                for p in parts {
                    if let Decomposition::Finite(ps) = p {
                        out.extend(ps);
                    }
                }
                return Ok(Decomposition::Finite(out));
            }
            Ok(Decomposition::Family(Arc::new(Interleave::new(parts, ClassTag::additive(alpha + 1), mult))))
        }
        SetKind::Family(f) if f.mode() == FamilyMode::Union && f.member_class().le(mult) => {
            Ok(Decomposition::Family(f.clone()))
        }
        _ => Err(Error::hypothesis(format!(
            "no decomposition of {s} into multiplicative sets of class {alpha} is available"
        ))),
    }
}

/// A multiplicative set `C` of class `α+1` with `a ⊆ C ⊆ X ∖ b`, built as
/// `⋂_n ⋃_m {f_{n,m} > 0}` where `f_{n,m}` separates `B_n` (value 0) from
/// `A_m` (value 1).
pub fn insert_next_class(a: &Decomposition, b: &Decomposition, alpha: u32) -> Result<SetExpr> {
    for d in [a, b] {
        if !d.piece_class()?.le(ClassTag::multiplicative(alpha)) {
            return Err(Error::hypothesis(format!(
                "decomposition {d:?} has pieces above the multiplicative class {alpha}"
            )));
        }
    }
    if b.is_empty() {
        return Ok(SetExpr::full());
    }
    if a.is_empty() {
        return Ok(SetExpr::empty());
    }
    Ok(SetExpr::family(Arc::new(SeparationGrid { a: a.clone(), b: b.clone(), alpha })))
}

struct SeparationGrid {
    a: Decomposition,
    b: Decomposition,
    alpha: u32,
}

impl SeparationGrid {
    fn cell(&self, n: usize, m: usize) -> Result<FuncExpr> {
        let bn = self.b.piece(n)?;
        let am = self.a.piece(m)?;
        let fb = zero_set_function(&bn, self.alpha)?;
        let fa = zero_set_function(&am, self.alpha)?;
        Ok(FuncExpr::quotient(fb.clone(), FuncExpr::sum(fb, fa)))
    }
}

impl Family for SeparationGrid {
    fn id(&self) -> &'static str {
        "separation-grid"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Intersection
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::multiplicative(self.alpha + 1)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::additive(self.alpha + 1)
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        Ok(SetExpr::family(Arc::new(GridRow { grid: SeparationGrid { a: self.a.clone(), b: self.b.clone(), alpha: self.alpha }, n })))
    }

    fn len(&self) -> Option<usize> {
        self.b.len()
    }

    /// Row `n` misses `x` iff every `f_{n,m}(x) = 0`, which happens iff
    /// `x ∈ B_n` since the zero set of `f_{n,m}` is exactly `B_n`.
    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        let Some(n) = self.b.first_index(cx)? else { return Ok(None) };
        let v = evaluate_exact(&self.cell(n, 0)?, cx.point())?;
        if !v.as_real()?.is_zero() {
            return Err(Error::Construction {
                check: "separation grid".into(),
                multi_index: vec![n, 0],
                witness: Some(cx.point().clone()),
            });
        }
        Ok(Some(n))
    }

    fn params(&self) -> Value {
        json!({ "a": self.a.as_set().to_json(), "b": self.b.as_set().to_json(), "alpha": self.alpha })
    }

    fn text(&self) -> String {
        format!("separation-grid({:?}, {:?}, {})", self.a, self.b, self.alpha)
    }
}

/// `⋃_m {f_{n,m} > 0}`.
struct GridRow {
    grid: SeparationGrid,
    n: usize,
}

impl Family for GridRow {
    fn id(&self) -> &'static str {
        "separation-row"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::additive(self.grid.alpha + 1)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::additive(self.grid.alpha + 1)
    }

    fn member(&self, m: usize) -> Result<SetExpr> {
        let f = self.grid.cell(self.n, m)?;
        crate::func::preimage(&f, &crate::func::Region::Interval(Some(rat(0, 1).into()), None))
    }

    fn len(&self) -> Option<usize> {
        self.grid.a.len()
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        // Off B_n the first cell is already positive.
        let v = evaluate_exact(&self.grid.cell(self.n, 0)?, cx.point())?;
        Ok(if v.as_real()?.is_zero() { None } else { Some(0) })
    }

    fn text(&self) -> String {
        format!("separation-row({})", self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::evaluate;
    use crate::num::Surd;
    use crate::sample::{witness_pool, Sampler};
    use crate::set::{member, Rationals};
    use crate::space::BaseSpace;

    fn q(n: i64, d: i64) -> Point {
        Point::rational(rat(n, d))
    }

    fn value(f: &FuncExpr, x: &Point) -> Point {
        evaluate(f, x, &rat(1, 1000)).unwrap().0
    }

    fn pt(v: i64) -> SetExpr {
        SetExpr::closed_interval(Interval::point(rat(v, 1)))
    }

    #[test]
    fn one_member_union_is_its_member() {
        let a = SetExpr::union(vec![SetExpr::closed_interval(Interval::closed(rat(0, 1), rat(1, 4)))]);
        let f = zero_set_function(&a, 0).unwrap();
        assert_eq!(value(&f, &q(1, 8)), q(0, 1));
        assert_eq!(value(&f, &q(1, 2)), q(1, 4));
    }

    #[test]
    fn zero_set_of_a_point_uses_shells() {
        let f = zero_set_function(&pt(0), 1).unwrap();
        assert_eq!(value(&f, &q(1, 1)), q(1, 1));
        assert_eq!(value(&f, &q(3, 10)), q(1, 3));
        assert_eq!(value(&f, &q(0, 1)), q(0, 1));
        assert_eq!(function_class(&f), 1);
        assert_eq!(value(&zero_set_function(&SetExpr::full(), 1).unwrap(), &q(1, 2)), q(0, 1));
        assert_eq!(value(&zero_set_function(&SetExpr::empty(), 1).unwrap(), &q(1, 2)), q(1, 1));
    }

    #[test]
    fn zero_set_is_exact_on_samples() {
        let irr = SetExpr::complement(SetExpr::family(Arc::new(Rationals)));
        let a = SetExpr::intersection(vec![irr, SetExpr::closed_interval(Interval::closed(rat(1, 4), rat(3, 4)))]);
        let f = zero_set_function(&a, 1).unwrap();
        for x in Sampler::new(4).points(&BaseSpace::UnitInterval, 400) {
            let zero = value(&f, &x).as_real().unwrap().is_zero();
            assert_eq!(zero, member(&x, &a).unwrap(), "{x}");
        }
    }

    #[test]
    fn continuous_zero_sets() {
        let a = SetExpr::union(vec![pt(0), SetExpr::closed_interval(Interval::closed(rat(1, 2), rat(3, 4)))]);
        let f = zero_set_function(&a, 0).unwrap();
        assert_eq!(function_class(&f), 0);
        for x in Sampler::new(8).points(&BaseSpace::UnitInterval, 300) {
            let zero = value(&f, &x).as_real().unwrap().is_zero();
            assert_eq!(zero, member(&x, &a).unwrap(), "{x}");
        }
        let open = SetExpr::open_interval(Interval::open(rat(1, 3), rat(2, 3)));
        let g = zero_set_function(&SetExpr::complement(open), 0).unwrap();
        assert_eq!(value(&g, &q(1, 2)), q(1, 6));
        assert_eq!(value(&g, &q(1, 3)), q(0, 1));
    }

    #[test]
    fn separation_of_two_points() {
        let pool = witness_pool(&BaseSpace::UnitInterval, 200);
        let w = separating_function(&pt(0), &pt(1), 1, &pool).unwrap();
        assert_eq!(value(&w.f, &q(0, 1)), q(0, 1));
        assert_eq!(value(&w.f, &q(1, 1)), q(1, 1));
        for x in Sampler::new(1).points(&BaseSpace::UnitInterval, 300) {
            let y = value(&w.f, &x).as_real().unwrap().clone();
            assert!(y >= Surd::zero() && y <= Surd::one(), "{x} -> {y}");
        }
        let swapped = separating_function(&pt(1), &pt(0), 1, &pool).unwrap();
        for x in Sampler::new(2).points(&BaseSpace::UnitInterval, 100) {
            let s = value(&w.f, &x).as_real().unwrap().add(value(&swapped.f, &x).as_real().unwrap()).unwrap();
            assert_eq!(s, Surd::one(), "{x}");
        }
        let overlap = SetExpr::closed_interval(Interval::closed(rat(1, 2), rat(1, 1)));
        assert!(matches!(separating_function(&overlap, &pt(1), 1, &pool), Err(Error::Disjointness { .. })));
    }

    #[test]
    fn ambiguous_insertion_between_points() {
        let pool = witness_pool(&BaseSpace::UnitInterval, 200);
        let c = insert_ambiguous(&pt(0), &pt(1), 1, &pool).unwrap();
        assert!(classify(&c).unwrap().le(ClassTag::ambiguous(1)));
        assert!(member(&q(0, 1), &c).unwrap());
        assert!(!member(&q(1, 1), &c).unwrap());
        let empty = insert_ambiguous(&SetExpr::empty(), &pt(1), 1, &pool).unwrap();
        assert!(pool.iter().all(|x| !member(x, &empty).unwrap()));
        let whole = insert_ambiguous(&pt(0), &SetExpr::empty(), 1, &pool).unwrap();
        assert!(member(&q(0, 1), &whole).unwrap());
    }

    #[test]
    fn next_class_insertion_between_rationals_and_a_surd() {
        let a = multiplicative_pieces(&SetExpr::family(Arc::new(Rationals)), 0).unwrap();
        let s = Surd::new(rat(0, 1), rat(1, 2), 2).unwrap();
        let b = multiplicative_pieces(&SetExpr::closed_interval(Interval::point(s.clone())), 0).unwrap();
        let c = insert_next_class(&a, &b, 0).unwrap();
        assert_eq!(classify(&c).unwrap(), ClassTag::multiplicative(1));
        assert!(!member(&Point::Real(s), &c).unwrap());
        for x in Sampler::new(6).points(&BaseSpace::UnitInterval, 200) {
            if x.as_real().unwrap().is_rational() {
                assert!(member(&x, &c).unwrap(), "{x}");
            }
        }
        assert!(insert_next_class(&Decomposition::Finite(vec![]), &b, 0).unwrap().is_empty_code());
        assert!(insert_next_class(&a, &Decomposition::Finite(vec![]), 0).unwrap().is_full_code());
    }
}
