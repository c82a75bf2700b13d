//! Symbolic preimages of basic open sets.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use super::eval::{apply_post, eval_in, exact_in, lower_abs, upper_abs};
use super::{function_class, is_cellular, ArithOp, FuncExpr, FuncKind, PostMap, UniformLimit};
use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::num::{int, Rational, Surd};
use crate::point::{word_to_string, Point};
use crate::set::{Atom, Endpoint, Family, FamilyMode, Interval, MemberCx, SetExpr};

/// A basic open set of a target space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    /// Open interval, either end possibly unbounded.
    Interval(Option<Surd>, Option<Surd>),
    Cylinder(Vec<bool>),
    /// Subset of a finite discrete target.
    Points(u64),
}

impl Region {
    pub fn open(lo: impl Into<Surd>, hi: impl Into<Surd>) -> Self {
        Region::Interval(Some(lo.into()), Some(hi.into()))
    }

    pub fn contains(&self, y: &Point) -> bool {
        match (self, y) {
            (Region::Interval(lo, hi), Point::Real(s)) => {
                lo.as_ref().is_none_or(|a| s > a) && hi.as_ref().is_none_or(|b| s < b)
            }
            (Region::Cylinder(w), Point::Cantor(c)) => c.has_prefix(w),
            (Region::Points(m), Point::Finite(i)) => *i < 64 && m >> i & 1 == 1,
            _ => false,
        }
    }

    fn as_interval(&self) -> Interval {
        match self {
            Region::Interval(lo, hi) => Interval::new(open_end(lo), open_end(hi)),
            _ => unreachable!("only called on interval regions"),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Region::Interval(..) => json!({ "interval": self.as_interval().to_json() }),
            Region::Cylinder(w) => json!({ "cylinder": word_to_string(w) }),
            Region::Points(m) => json!({ "points": m }),
        }
    }
}

fn open_end(e: &Option<Surd>) -> Endpoint {
    match e {
        None => Endpoint::Unbounded,
        Some(v) => Endpoint::Open(v.clone()),
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Interval(..) => write!(f, "{}", self.as_interval()),
            Region::Cylinder(w) => write!(f, "cyl({})", word_to_string(w)),
            Region::Points(m) => write!(f, "pts({m:#b})"),
        }
    }
}

/// `f^{-1}(v)` as a set code.
pub fn preimage(f: &FuncExpr, v: &Region) -> Result<SetExpr> {
    match f.kind() {
        FuncKind::Identity => Ok(match v {
            Region::Interval(None, None) => SetExpr::full(),
            Region::Interval(..) => SetExpr::open_interval(v.as_interval()),
            Region::Cylinder(w) => SetExpr::open(Atom::Cylinder(w.clone())),
            Region::Points(_) => {
                return Err(Error::Unsupported("preimage of the identity on a finite space".into()));
            }
        }),
        FuncKind::Step { partition, values } => Ok(SetExpr::union_of(
            partition.pieces.iter().zip(values).filter(|(_, y)| v.contains(y)).map(|(p, _)| p.clone()).collect(),
        )),
        FuncKind::Restriction(c, e) => Ok(SetExpr::intersection_of(vec![preimage(c, v)?, e.carrier.clone()])),
        FuncKind::Limit(l) => limit_preimage(f, l, v),
        _ => {
            let Region::Interval(lo, hi) = v else {
                return Err(Error::Domain(format!("{f} is real-valued, region {v} is not")));
            };
            real_preimage(f, lo, hi)
        }
    }
}

/// `f^{-1}([lo, hi])` for a real-valued `f`; either end may be unbounded.
pub fn closed_preimage(f: &FuncExpr, lo: &Option<Surd>, hi: &Option<Surd>) -> Result<SetExpr> {
    if let FuncKind::Step { partition, values } = f.kind() {
        let inside = |y: &Point| match y {
            Point::Real(s) => lo.as_ref().is_none_or(|a| s >= a) && hi.as_ref().is_none_or(|b| s <= b),
            _ => false,
        };
        return Ok(SetExpr::union_of(
            partition.pieces.iter().zip(values).filter(|(_, y)| inside(y)).map(|(p, _)| p.clone()).collect(),
        ));
    }
    let below = match lo {
        None => SetExpr::empty(),
        Some(a) => preimage(f, &Region::Interval(None, Some(a.clone())))?,
    };
    let above = match hi {
        None => SetExpr::empty(),
        Some(b) => preimage(f, &Region::Interval(Some(b.clone()), None))?,
    };
    Ok(SetExpr::complement_of(SetExpr::union_of(vec![below, above])))
}

fn real_preimage(f: &FuncExpr, lo: &Option<Surd>, hi: &Option<Surd>) -> Result<SetExpr> {
    if let (Some(a), Some(b)) = (lo, hi) {
        if a >= b {
            return Ok(SetExpr::empty());
        }
    }
    match f.kind() {
        FuncKind::Distance(shape) => distance_preimage(shape, lo, hi),
        FuncKind::ZeroSet(z) => {
            let v = Region::Interval(lo.clone(), hi.clone());
            let value = |n: usize| Point::rational(Rational::new(BigInt::one(), BigInt::from(n + 1)));
            let piece_cut = |b: &Surd| -> Result<usize> {
                // n ≥ ⌊1/b⌋ gives 1/(n+1) < b.
                let k = b.recip()?.floor();
                Ok(usize::try_from(k).unwrap_or(usize::MAX))
            };
            if v.contains(&Point::rational(Rational::zero())) {
                let cut = match hi {
                    None => 0,
                    Some(b) => piece_cut(b)?,
                };
                let excluded = (0..cut)
                    .filter(|&n| !v.contains(&value(n)))
                    .map(|n| z.pieces.piece(n))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(SetExpr::complement_of(SetExpr::union_of(excluded)));
            }
            let Some(a) = lo.as_ref().filter(|a| a.signum() != std::cmp::Ordering::Less) else {
                return Ok(SetExpr::empty());
            };
            if a.is_zero() {
                // Pieces with 1/(n+1) < b, all but finitely many.
                let cut = match hi {
                    None => 0,
                    Some(b) => piece_cut(b)?,
                };
                let mut dropped = vec![z.zero.clone()];
                for n in 0..cut {
                    if !v.contains(&value(n)) {
                        dropped.push(z.pieces.piece(n)?);
                    }
                }
                return Ok(SetExpr::complement_of(SetExpr::union_of(dropped)));
            }
            // 1/(n+1) > a only for n + 1 < 1/a.
            let top = usize::try_from(a.recip()?.floor()).unwrap_or(usize::MAX);
            let kept = (0..top).filter(|&n| v.contains(&value(n))).map(|n| z.pieces.piece(n)).collect::<Result<Vec<_>>>()?;
            Ok(SetExpr::union_of(kept))
        }
        FuncKind::Post(map, c) => match pullback(map, lo, hi)? {
            None => Ok(SetExpr::empty()),
            Some((l, h)) => preimage(c, &Region::Interval(l, h)),
        },
        FuncKind::Arith(..) if is_cellular(f) => {
            Ok(SetExpr::family(Arc::new(CellPreimage::new(f.clone(), lo.clone(), hi.clone())?)))
        }
        FuncKind::Arith(..) if function_class(f) == 0 => {
            Ok(SetExpr::family(Arc::new(EvalPreimage::new(f.clone(), lo.clone(), hi.clone()))))
        }
        _ => Err(Error::Unsupported(format!("symbolic preimage of {f}"))),
    }
}

fn distance_preimage(shape: &[Interval], lo: &Option<Surd>, hi: &Option<Surd>) -> Result<SetExpr> {
    let near = match hi {
        None => SetExpr::full(),
        Some(b) if b.signum() != std::cmp::Ordering::Greater => SetExpr::empty(),
        Some(b) => {
            let mut parts = Vec::new();
            for i in shape {
                let lo = match i.lo.value() {
                    None => Endpoint::Unbounded,
                    Some(x) => Endpoint::Open(x.sub(b)?),
                };
                let hi = match i.hi.value() {
                    None => Endpoint::Unbounded,
                    Some(x) => Endpoint::Open(x.add(b)?),
                };
                parts.push(SetExpr::open_interval(Interval::new(lo, hi)));
            }
            SetExpr::union_of(parts)
        }
    };
    let far = match lo {
        Some(a) if a.signum() != std::cmp::Ordering::Less => {
            let parts = shape.iter().map(|i| Ok(SetExpr::closed_interval(i.inflate(a)?))).collect::<Result<Vec<_>>>()?;
            SetExpr::complement_of(SetExpr::union_of(parts))
        }
        _ => SetExpr::full(),
    };
    Ok(SetExpr::intersection_of(vec![near, far]))
}

type Ends = (Option<Surd>, Option<Surd>);

/// Preimage of an open interval under a monotone post-map, `None` if empty.
fn pullback(map: &PostMap, lo: &Option<Surd>, hi: &Option<Surd>) -> Result<Option<Ends>> {
    let one = Surd::one();
    let minus_one = one.neg();
    Ok(match map {
        PostMap::Affine { a, b } => {
            let b = Surd::from(b.clone());
            if a.is_zero() {
                let inside = lo.as_ref().is_none_or(|l| b > *l) && hi.as_ref().is_none_or(|h| b < *h);
                return Ok(inside.then_some((None, None)));
            }
            let inv = |e: &Option<Surd>| -> Result<Option<Surd>> {
                e.as_ref().map(|e| Ok(e.sub(&b)?.scale(&a.recip()))).transpose()
            };
            if *a > int(0) {
                Some((inv(lo)?, inv(hi)?))
            } else {
                Some((inv(hi)?, inv(lo)?))
            }
        }
        PostMap::Clamp { lo: cl, hi: ch } => {
            let (cl, ch) = (Surd::from(cl.clone()), Surd::from(ch.clone()));
            if lo.as_ref().is_some_and(|l| *l >= ch) || hi.as_ref().is_some_and(|h| *h <= cl) {
                return Ok(None);
            }
            let l = lo.clone().filter(|l| *l >= cl);
            let h = hi.clone().filter(|h| *h <= ch);
            Some((l, h))
        }
        PostMap::Phi => {
            if lo.as_ref().is_some_and(|l| *l >= one) || hi.as_ref().is_some_and(|h| *h <= minus_one) {
                return Ok(None);
            }
            let l = lo.as_ref().filter(|l| **l > minus_one).map(|l| apply_post(&PostMap::PhiInv, l)).transpose()?;
            let h = hi.as_ref().filter(|h| **h < one).map(|h| apply_post(&PostMap::PhiInv, h)).transpose()?;
            Some((l, h))
        }
        PostMap::PhiInv => {
            let l = match lo {
                None => minus_one,
                Some(l) => apply_post(&PostMap::Phi, l)?,
            };
            let h = match hi {
                None => one,
                Some(h) => apply_post(&PostMap::Phi, h)?,
            };
            Some((Some(l), Some(h)))
        }
        PostMap::Reciprocal => {
            if hi.as_ref().is_some_and(|h| h.signum() != std::cmp::Ordering::Greater) {
                return Ok(None);
            }
            let l = match hi {
                None => Surd::zero(),
                Some(h) => h.recip()?,
            };
            let h = lo.as_ref().filter(|c| c.signum() == std::cmp::Ordering::Greater).map(Surd::recip).transpose()?;
            Some((Some(l), h))
        }
    })
}

fn limit_preimage(f: &FuncExpr, l: &UniformLimit, v: &Region) -> Result<SetExpr> {
    let radius = match v {
        Region::Interval(lo, hi) => {
            return Ok(SetExpr::family(Arc::new(LimitPreimage::new(f.clone(), lo.clone(), hi.clone())?)));
        }
        Region::Cylinder(w) => Rational::new(BigInt::one(), BigInt::one() << w.len()),
        Region::Points(_) => int(1),
    };
    // Past this stage every stage value shares the region with the limit.
    let n = (&l.modulus / &radius).floor().to_integer() + BigInt::one();
    let n: usize = n.try_into().unwrap_or(usize::MAX);
    if n > l.cap {
        return Err(Error::Precision(format!("preimage of {v} needs stage {n}, beyond the cap {}", l.cap)));
    }
    preimage(&l.stage(n)?, v)
}

/// Closed rational enclosure of a set of reals.
#[derive(Clone, Debug)]
struct Enclosure {
    lo: Rational,
    hi: Rational,
}

impl Enclosure {
    fn point(s: &Surd) -> Self {
        match s.as_rational() {
            Some(q) => Enclosure { lo: q.clone(), hi: q.clone() },
            None => {
                let (l, u) = (lower_abs(s), upper_abs(s));
                if s.signum() == std::cmp::Ordering::Less {
                    Enclosure { lo: -u, hi: -l }
                } else {
                    Enclosure { lo: l, hi: u }
                }
            }
        }
    }

    fn within(&self, lo: &Option<Surd>, hi: &Option<Surd>) -> bool {
        lo.as_ref().is_none_or(|a| Surd::from(self.lo.clone()) > *a)
            && hi.as_ref().is_none_or(|b| Surd::from(self.hi.clone()) < *b)
    }

    fn monotone(&self, g: impl Fn(&Rational) -> Result<Rational>) -> Result<Enclosure> {
        let (a, b) = (g(&self.lo)?, g(&self.hi)?);
        Ok(if a <= b { Enclosure { lo: a, hi: b } } else { Enclosure { lo: b, hi: a } })
    }
}

fn post_rational(map: &PostMap, y: &Rational) -> Result<Rational> {
    let s = apply_post(map, &Surd::from(y.clone()))?;
    Ok(s.as_rational().cloned().expect("post maps keep rationals rational"))
}

/// Preimage of an open interval under an arithmetic combination of step
/// and zero-set codes, as the union of index boxes whose value enclosure
/// lies inside the interval.
///
/// At level `N` a zero-set leaf is either on a single piece `n < N` or on
/// its tail `{f ≤ 1/(N+1)}` (the complement of the first `N` pieces); a step
/// leaf is always on a single piece. Every box is a finite intersection of
/// ambiguous sets of the leaf class.
pub struct CellPreimage {
    f: FuncExpr,
    leaves: Vec<FuncExpr>,
    lo: Option<Surd>,
    hi: Option<Surd>,
    alpha: u32,
}

const MAX_LEVEL: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Coord {
    Piece(usize),
    Tail,
}

impl CellPreimage {
    pub fn new(f: FuncExpr, lo: Option<Surd>, hi: Option<Surd>) -> Result<Self> {
        let mut leaves = Vec::new();
        collect_leaves(&f, &mut leaves);
        let alpha = function_class(&f);
        Ok(CellPreimage { f, leaves, lo, hi, alpha })
    }

    fn radix(&self, leaf: &FuncExpr, level: usize) -> usize {
        match leaf.kind() {
            FuncKind::Step { values, .. } => values.len(),
            _ => level + 1,
        }
    }

    fn box_count(&self, level: usize) -> Option<usize> {
        self.leaves.iter().try_fold(1usize, |acc, l| acc.checked_mul(self.radix(l, level)))
    }

    fn offset(&self, level: usize) -> Result<usize> {
        (1..level)
            .try_fold(0usize, |acc, n| acc.checked_add(self.box_count(n)?))
            .ok_or_else(|| Error::Precision("box index overflow".into()))
    }

    fn encode(&self, level: usize, coords: &[Coord]) -> Result<usize> {
        let mut code = 0usize;
        for (leaf, c) in self.leaves.iter().zip(coords) {
            let r = self.radix(leaf, level);
            let digit = match c {
                Coord::Piece(n) => *n,
                Coord::Tail => level,
            };
            code = code.checked_mul(r).and_then(|v| v.checked_add(digit)).ok_or_else(|| Error::Precision("box index overflow".into()))?;
        }
        Ok(self.offset(level)? + code)
    }

    fn decode(&self, mut m: usize) -> Option<(usize, Vec<Coord>)> {
        let mut level = 1;
        loop {
            let count = self.box_count(level)?;
            if m < count {
                break;
            }
            m -= count;
            level += 1;
            if level > MAX_LEVEL {
                return None;
            }
        }
        let mut coords = vec![Coord::Tail; self.leaves.len()];
        for (i, leaf) in self.leaves.iter().enumerate().rev() {
            let r = self.radix(leaf, level);
            let digit = m % r;
            m /= r;
            coords[i] = match leaf.kind() {
                FuncKind::Step { .. } => Coord::Piece(digit),
                _ if digit == level => Coord::Tail,
                _ => Coord::Piece(digit),
            };
        }
        Some((level, coords))
    }

    fn leaf_enclosure(&self, leaf: &FuncExpr, c: Coord, level: usize) -> Result<Enclosure> {
        match (leaf.kind(), c) {
            (FuncKind::Step { values, .. }, Coord::Piece(i)) => Ok(Enclosure::point(values[i].as_real()?)),
            (FuncKind::ZeroSet(_), Coord::Piece(n)) => {
                let v = Rational::new(BigInt::one(), BigInt::from(n + 1));
                Ok(Enclosure { lo: v.clone(), hi: v })
            }
            (FuncKind::ZeroSet(_), Coord::Tail) => {
                Ok(Enclosure { lo: Rational::zero(), hi: Rational::new(BigInt::one(), BigInt::from(level + 1)) })
            }
            _ => Err(Error::Structural("tail coordinate on a step leaf".into())),
        }
    }

    /// Enclosure of `f` over a box, `None` when it cannot be bounded.
    fn enclose(&self, g: &FuncExpr, coords: &[Coord], level: usize) -> Result<Option<Enclosure>> {
        if let Some(i) = self.leaves.iter().position(|l| l.id() == g.id()) {
            return self.leaf_enclosure(g, coords[i], level).map(Some);
        }
        match g.kind() {
            FuncKind::Arith(op, cs) => {
                let mut parts = Vec::new();
                for c in cs {
                    match self.enclose(c, coords, level)? {
                        Some(e) => parts.push(e),
                        None => return Ok(None),
                    }
                }
                let mut acc = parts[0].clone();
                for p in &parts[1..] {
                    acc = match op {
                        ArithOp::Sum => Enclosure { lo: &acc.lo + &p.lo, hi: &acc.hi + &p.hi },
                        ArithOp::Product => corners(&acc, p, |a, b| a * b),
                        ArithOp::Quotient => {
                            if p.lo <= Rational::zero() && p.hi >= Rational::zero() {
                                return Ok(None);
                            }
                            corners(&acc, p, |a, b| a / b)
                        }
                    };
                }
                Ok(Some(acc))
            }
            FuncKind::Post(map, c) => {
                let Some(e) = self.enclose(c, coords, level)? else { return Ok(None) };
                let ok = match map {
                    PostMap::PhiInv => e.lo > int(-1) && e.hi < int(1),
                    PostMap::Reciprocal => e.lo > Rational::zero(),
                    _ => true,
                };
                if !ok {
                    return Ok(None);
                }
                Ok(Some(e.monotone(|y| post_rational(map, y))?))
            }
            _ => Err(Error::Structural(format!("{g} is not a cellular code"))),
        }
    }

    fn certified(&self, coords: &[Coord], level: usize) -> Result<bool> {
        Ok(self.enclose(&self.f, coords, level)?.is_some_and(|e| e.within(&self.lo, &self.hi)))
    }

    fn leaf_index(&self, leaf: &FuncExpr, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        if let Some(&i) = cx.leaf_indices.get(&leaf.id()) {
            return Ok(i);
        }
        let i = Self::leaf_index_uncached(leaf, cx)?;
        cx.leaf_indices.insert(leaf.id(), i);
        Ok(i)
    }

    fn leaf_index_uncached(leaf: &FuncExpr, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        match leaf.kind() {
            FuncKind::Step { partition, .. } => {
                for (i, p) in partition.pieces.iter().enumerate() {
                    if cx.member(p)? {
                        return Ok(Some(i));
                    }
                }
                Err(Error::Coverage { what: "step pieces miss the point".into(), witness: Some(cx.point().clone()) })
            }
            FuncKind::ZeroSet(z) => z.pieces.first_index(cx),
            _ => unreachable!("leaves are steps or zero-set codes"),
        }
    }

    fn coords_at(&self, idx: &[Option<usize>], level: usize) -> Vec<Coord> {
        idx.iter()
            .zip(&self.leaves)
            .map(|(i, leaf)| match (leaf.kind(), i) {
                (FuncKind::Step { .. }, Some(i)) => Coord::Piece(*i),
                (_, Some(n)) if *n < level => Coord::Piece(*n),
                _ => Coord::Tail,
            })
            .collect()
    }
}

fn corners(a: &Enclosure, b: &Enclosure, op: impl Fn(&Rational, &Rational) -> Rational) -> Enclosure {
    let c = [op(&a.lo, &b.lo), op(&a.lo, &b.hi), op(&a.hi, &b.lo), op(&a.hi, &b.hi)];
    let lo = c.iter().min().unwrap().clone();
    let hi = c.iter().max().unwrap().clone();
    Enclosure { lo, hi }
}

fn collect_leaves(f: &FuncExpr, out: &mut Vec<FuncExpr>) {
    match f.kind() {
        FuncKind::Step { .. } | FuncKind::ZeroSet(_) => {
            if !out.iter().any(|l| l.id() == f.id()) {
                out.push(f.clone());
            }
        }
        FuncKind::Arith(_, cs) => cs.iter().for_each(|c| collect_leaves(c, out)),
        FuncKind::Post(_, c) => collect_leaves(c, out),
        _ => {}
    }
}

impl Family for CellPreimage {
    fn id(&self) -> &'static str {
        "cell-preimage"
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

    fn member(&self, m: usize) -> Result<SetExpr> {
        let Some((level, coords)) = self.decode(m) else { return Ok(SetExpr::empty()) };
        if !self.certified(&coords, level)? {
            return Ok(SetExpr::empty());
        }
        let mut parts = Vec::new();
        for (leaf, c) in self.leaves.iter().zip(&coords) {
            parts.push(match (leaf.kind(), c) {
                (FuncKind::Step { partition, .. }, Coord::Piece(i)) => partition.pieces[*i].clone(),
                (FuncKind::ZeroSet(z), Coord::Piece(n)) => z.pieces.piece(*n)?,
                (FuncKind::ZeroSet(z), Coord::Tail) => {
                    let first = (0..level).map(|n| z.pieces.piece(n)).collect::<Result<Vec<_>>>()?;
                    SetExpr::complement_of(SetExpr::union_of(first))
                }
                _ => unreachable!("step leaves never take tail coordinates"),
            });
        }
        Ok(SetExpr::intersection_of(parts))
    }

    fn len(&self) -> Option<usize> {
        None
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        let value = exact_in(&self.f, cx)?;
        if !Region::Interval(self.lo.clone(), self.hi.clone()).contains(&value) {
            return Ok(None);
        }
        let idx = self.leaves.iter().map(|l| self.leaf_index(l, cx)).collect::<Result<Vec<_>>>()?;
        // Certification is monotone in the level: search by doubling, then bisect.
        let mut hi = 1usize;
        while !self.certified(&self.coords_at(&idx, hi), hi)? {
            hi *= 2;
            if hi > MAX_LEVEL {
                return Err(Error::Precision(format!("no certified box around {} within level {MAX_LEVEL}", cx.point())));
            }
        }
        let mut lo = hi / 2 + 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.certified(&self.coords_at(&idx, mid), mid)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.encode(hi, &self.coords_at(&idx, hi)).map(Some)
    }

    fn text(&self) -> String {
        format!("preimage({}, {})", self.f, Region::Interval(self.lo.clone(), self.hi.clone()))
    }
}

fn band_of(m: usize, lo: &Option<Surd>, hi: &Option<Surd>) -> Result<Ends> {
    let shrink = Surd::from(Rational::new(BigInt::one(), BigInt::from(m + 1)));
    Ok((lo.as_ref().map(|a| a.add(&shrink)).transpose()?, hi.as_ref().map(|b| b.sub(&shrink)).transpose()?))
}

fn in_closed(y: &Surd, lo: &Option<Surd>, hi: &Option<Surd>) -> bool {
    lo.as_ref().is_none_or(|a| y >= a) && hi.as_ref().is_none_or(|b| y <= b)
}

/// `f^{-1}((a,b)) = ⋃_m f^{-1}([a + 1/(m+1), b − 1/(m+1)])` for a continuous,
/// exactly evaluable `f`.
pub struct EvalPreimage {
    f: FuncExpr,
    lo: Option<Surd>,
    hi: Option<Surd>,
}

impl EvalPreimage {
    pub fn new(f: FuncExpr, lo: Option<Surd>, hi: Option<Surd>) -> Self {
        EvalPreimage { f, lo, hi }
    }
}

impl Family for EvalPreimage {
    fn id(&self) -> &'static str {
        "eval-preimage"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::additive(0)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::multiplicative(0)
    }

    fn member(&self, m: usize) -> Result<SetExpr> {
        let (lo, hi) = band_of(m, &self.lo, &self.hi)?;
        Ok(SetExpr::family(Arc::new(EvalBand::new(self.f.clone(), lo, hi))))
    }

    fn len(&self) -> Option<usize> {
        None
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        let y = exact_in(&self.f, cx)?;
        let y = y.as_real()?;
        if !Region::Interval(self.lo.clone(), self.hi.clone()).contains(&Point::Real(y.clone())) {
            return Ok(None);
        }
        // Distance to the nearest finite end decides the first band.
        let mut gap: Option<Rational> = None;
        for e in [&self.lo, &self.hi].into_iter().flatten() {
            let d = lower_abs(&y.sub(e)?);
            gap = Some(match gap {
                Some(g) if g <= d => g,
                _ => d,
            });
        }
        let Some(gap) = gap else { return Ok(Some(0)) };
        let mut m = if gap.is_zero() { 0 } else { usize::try_from((gap.recip()).floor().to_integer()).unwrap_or(0).saturating_sub(1) };
        m = m.min(1 << 30);
        loop {
            let (lo, hi) = band_of(m, &self.lo, &self.hi)?;
            if in_closed(y, &lo, &hi) {
                // Step back to the least band that holds.
                while m > 0 {
                    let (l, h) = band_of(m - 1, &self.lo, &self.hi)?;
                    if !in_closed(y, &l, &h) {
                        break;
                    }
                    m -= 1;
                }
                return Ok(Some(m));
            }
            m += 1;
        }
    }

    fn text(&self) -> String {
        format!("preimage({}, {})", self.f, Region::Interval(self.lo.clone(), self.hi.clone()))
    }
}

/// `f^{-1}([c,d]) = ⋂_k f^{-1}((c − 1/(k+1), d + 1/(k+1)))` for a continuous `f`.
pub struct EvalBand {
    f: FuncExpr,
    lo: Option<Surd>,
    hi: Option<Surd>,
}

impl EvalBand {
    pub fn new(f: FuncExpr, lo: Option<Surd>, hi: Option<Surd>) -> Self {
        EvalBand { f, lo, hi }
    }
}

impl Family for EvalBand {
    fn id(&self) -> &'static str {
        "eval-band"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Intersection
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::multiplicative(0)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::additive(0)
    }

    fn member(&self, k: usize) -> Result<SetExpr> {
        let grow = Surd::from(Rational::new(BigInt::one(), BigInt::from(k + 1)));
        let lo = self.lo.as_ref().map(|a| a.sub(&grow)).transpose()?;
        let hi = self.hi.as_ref().map(|b| b.add(&grow)).transpose()?;
        Ok(SetExpr::family(Arc::new(EvalPreimage::new(self.f.clone(), lo, hi))))
    }

    fn len(&self) -> Option<usize> {
        None
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        let y = exact_in(&self.f, cx)?;
        let y = y.as_real()?;
        if in_closed(y, &self.lo, &self.hi) {
            return Ok(None);
        }
        let mut k = 0usize;
        loop {
            let grow = Surd::from(Rational::new(BigInt::one(), BigInt::from(k + 1)));
            let lo = self.lo.as_ref().map(|a| a.sub(&grow)).transpose()?;
            let hi = self.hi.as_ref().map(|b| b.add(&grow)).transpose()?;
            if !Region::Interval(lo, hi).contains(&Point::Real(y.clone())) {
                return Ok(Some(k));
            }
            k += 1;
        }
    }

    fn text(&self) -> String {
        let lo = self.lo.as_ref().map_or("-inf".into(), |a| a.to_string());
        let hi = self.hi.as_ref().map_or("inf".into(), |b| b.to_string());
        format!("preimage({}, [{lo},{hi}])", self.f)
    }
}

/// Preimage of `(a, b)` under a uniform limit `f = lim f_n` with error
/// `c/n`, truncated at the stage cap:
/// `⋃_m ⋂_{N_m ≤ n ≤ cap} f_n^{-1}([a + 1/m, b − 1/m])`, `N_m = ⌊c·m⌋ + 1`.
///
/// Only bands `m` with `N_m ≤ cap` exist, so the family is finite and each
/// member is a finite intersection of stage preimages.
pub struct LimitPreimage {
    f: FuncExpr,
    lo: Option<Surd>,
    hi: Option<Surd>,
    bands: usize,
    alpha: u32,
    member_class: ClassTag,
}

impl LimitPreimage {
    pub fn new(f: FuncExpr, lo: Option<Surd>, hi: Option<Surd>) -> Result<Self> {
        let l = f.as_limit().ok_or_else(|| Error::Structural(format!("{f} is not a uniform limit")))?;
        let mut bands = 0;
        while Self::start(l, bands + 1) <= l.cap {
            bands += 1;
        }
        let alpha = l.rule.class_bound();
        let member_class = if l.rule.step_stages() { ClassTag::ambiguous(alpha) } else { ClassTag::multiplicative(alpha) };
        Ok(LimitPreimage { f, lo, hi, bands, alpha, member_class })
    }

    fn start(l: &UniformLimit, m: usize) -> usize {
        let n = (&l.modulus * Rational::from_integer(BigInt::from(m))).floor().to_integer() + BigInt::one();
        n.try_into().unwrap_or(usize::MAX)
    }

    fn limit(&self) -> &UniformLimit {
        self.f.as_limit().expect("checked at construction")
    }

    fn band(&self, m: usize) -> Result<Ends> {
        let shrink = Surd::from(Rational::new(BigInt::one(), BigInt::from(m)));
        Ok((self.lo.as_ref().map(|a| a.add(&shrink)).transpose()?, self.hi.as_ref().map(|b| b.sub(&shrink)).transpose()?))
    }
}

impl Family for LimitPreimage {
    fn id(&self) -> &'static str {
        "limit-preimage"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::additive(self.alpha)
    }

    fn member_class(&self) -> ClassTag {
        self.member_class
    }

    fn member(&self, i: usize) -> Result<SetExpr> {
        let m = i + 1;
        if m > self.bands {
            return Ok(SetExpr::empty());
        }
        let l = self.limit();
        let (lo, hi) = self.band(m)?;
        let parts = (Self::start(l, m)..=l.cap).map(|n| closed_preimage(&l.stage(n)?, &lo, &hi)).collect::<Result<Vec<_>>>()?;
        Ok(SetExpr::intersection_of(parts))
    }

    fn len(&self) -> Option<usize> {
        Some(self.bands)
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        if self.bands == 0 {
            return Ok(None);
        }
        let l = self.limit();
        let first = Self::start(l, 1);
        let mut values = Vec::with_capacity(l.cap + 1 - first);
        let tiny = Rational::new(BigInt::one(), BigInt::from(1u64 << 40));
        for n in first..=l.cap {
            let a = eval_in(&l.stage(n)?, cx, &tiny)?;
            if !a.is_exact() {
                return Err(Error::Precision(format!("stage {n} is not exact at {}", cx.point())));
            }
            values.push(a.value.as_real()?.clone());
        }
        for m in 1..=self.bands {
            let (lo, hi) = self.band(m)?;
            let from = Self::start(l, m) - first;
            if values[from..].iter().all(|y| in_closed(y, &lo, &hi)) {
                return Ok(Some(m - 1));
            }
        }
        Ok(None)
    }

    fn text(&self) -> String {
        format!("preimage({}, {})", self.f, Region::Interval(self.lo.clone(), self.hi.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{evaluate, ZeroSetFn};
    use crate::num::rat;
    use crate::sample::Sampler;
    use crate::set::{member, Decomposition, Shells};
    use crate::space::BaseSpace;

    fn q(n: i64, d: i64) -> Point {
        Point::rational(rat(n, d))
    }

    fn check_coherent(f: &FuncExpr, v: &Region, n: usize) {
        let s = preimage(f, v).unwrap();
        let mut sampler = Sampler::new(5);
        for x in sampler.points(&BaseSpace::UnitInterval, n) {
            let y = match evaluate(f, &x, &rat(1, 1000)) {
                Ok((y, _)) => y,
                Err(_) => continue,
            };
            assert_eq!(member(&x, &s).unwrap(), v.contains(&y), "{f} at {x}, value {y}, region {v}");
        }
    }

    fn zero_fn_of_half() -> FuncExpr {
        // Zero exactly on [0,1/2], shells outside.
        let i = Interval::closed(rat(0, 1), rat(1, 2));
        FuncExpr::zero_set(ZeroSetFn {
            zero: SetExpr::closed_interval(i.clone()),
            pieces: Decomposition::Family(Arc::new(Shells::new(i).unwrap())),
            alpha: 1,
        })
    }

    #[test]
    fn identity_and_step_preimages() {
        let s = preimage(&FuncExpr::identity(), &Region::open(rat(1, 3), rat(2, 3))).unwrap();
        assert_eq!(s.to_string(), "open((1/3,2/3))");
        let a = SetExpr::closed_interval(Interval::closed(rat(0, 1), rat(1, 2)));
        let f = FuncExpr::step(vec![a.clone(), SetExpr::complement(a)], vec![q(0, 1), q(1, 1)]).unwrap();
        let p = preimage(&f, &Region::open(rat(1, 2), rat(3, 2))).unwrap();
        assert!(member(&q(3, 4), &p).unwrap());
        assert!(!member(&q(1, 2), &p).unwrap());
    }

    #[test]
    fn zero_set_preimage_near_zero_is_cofinite() {
        let f = zero_fn_of_half();
        let p = preimage(&f, &Region::open(rat(-1, 4), rat(1, 4))).unwrap();
        // Only pieces with value ≥ 1/4 (n ≤ 3) are removed.
        assert!(matches!(p.kind(), crate::set::SetKind::Complement(_)));
        assert_eq!(crate::set::classify(&p).unwrap(), ClassTag::ambiguous(1));
        check_coherent(&f, &Region::open(rat(-1, 4), rat(1, 4)), 400);
        check_coherent(&f, &Region::open(rat(0, 1), rat(1, 3)), 400);
        check_coherent(&f, &Region::open(rat(1, 5), rat(2, 3)), 400);
    }

    #[test]
    fn post_map_pullbacks() {
        let id = FuncExpr::identity();
        for map in [
            PostMap::Clamp { lo: rat(1, 4), hi: rat(3, 4) },
            PostMap::Affine { a: rat(-2, 1), b: rat(1, 1) },
            PostMap::Phi,
            PostMap::PhiInv,
        ] {
            let f = FuncExpr::post(map, id.clone()).unwrap();
            for (a, b) in [(rat(-1, 2), rat(1, 2)), (rat(1, 3), rat(2, 3)), (rat(1, 5), rat(7, 2))] {
                check_coherent(&f, &Region::open(a, b), 200);
            }
        }
    }

    #[test]
    fn cellular_quotient_preimage() {
        let f1 = zero_fn_of_half();
        let j = Interval::closed(rat(3, 4), rat(1, 1));
        let f2 = FuncExpr::zero_set(ZeroSetFn {
            zero: SetExpr::closed_interval(j.clone()),
            pieces: Decomposition::Family(Arc::new(Shells::new(j).unwrap())),
            alpha: 1,
        });
        let f = FuncExpr::quotient(f1.clone(), FuncExpr::sum(f1, f2));
        for (a, b) in [(rat(-1, 3), rat(1, 3)), (rat(1, 3), rat(2, 3)), (rat(1, 2), rat(3, 2))] {
            check_coherent(&f, &Region::open(a, b), 300);
        }
        let fam = CellPreimage::new(f.clone(), Some(rat(-1, 3).into()), Some(rat(1, 3).into())).unwrap();
        // The member picked by first_index contains the point.
        for x in Sampler::new(9).points(&BaseSpace::UnitInterval, 100) {
            if let Some(m) = fam.first_index(&mut MemberCx::new(&x)).unwrap() {
                assert!(member(&x, &fam.member(m).unwrap()).unwrap(), "{x}");
            }
        }
    }

    #[test]
    fn continuous_quotient_uses_eval_preimage() {
        let a = FuncExpr::distance(vec![Interval::closed(rat(0, 1), rat(1, 4))]).unwrap();
        let b = FuncExpr::distance(vec![Interval::closed(rat(3, 4), rat(1, 1))]).unwrap();
        let f = FuncExpr::quotient(a.clone(), FuncExpr::sum(a, b));
        check_coherent(&f, &Region::open(rat(1, 4), rat(3, 4)), 300);
        check_coherent(&f, &Region::open(rat(-1, 1), rat(1, 10)), 300);
    }
}
