//! Shared generators and a membership oracle that never calls the engine's
//! own evaluator. Real atoms are compared with `Surd` ordering only.

#![allow(dead_code)]

use std::sync::Arc;

use borel_core::num::{rat, Rational};
use borel_core::point::CantorPoint;
use borel_core::set::{Atom, Endpoint, Interval, Rationals};
use borel_core::space::{BaseSpace, FiniteSpace};
use borel_core::{Point, SetExpr, Surd};
use rand::seq::SliceRandom;
use rand::Rng;

/// Plain description of a set, mirrored into a `SetExpr`.
#[derive(Clone, Debug)]
pub enum T {
    /// Real interval: `(lo, lo_closed, hi, hi_closed)`, `None` for unbounded.
    Iv(Option<Rational>, bool, Option<Rational>, bool),
    Cyl(Vec<bool>),
    Mask(u64),
    /// Rational reals.
    Rat,
    Union(Vec<T>),
    Inter(Vec<T>),
    Not(Box<T>),
}

impl T {
    pub fn holds(&self, x: &Point) -> bool {
        match (self, x) {
            (T::Iv(lo, lc, hi, hc), Point::Real(s)) => {
                let above = lo.as_ref().is_none_or(|l| {
                    let l = Surd::from(l.clone());
                    if *lc { *s >= l } else { *s > l }
                });
                let below = hi.as_ref().is_none_or(|h| {
                    let h = Surd::from(h.clone());
                    if *hc { *s <= h } else { *s < h }
                });
                above && below
            }
            (T::Cyl(w), Point::Cantor(c)) => w.iter().enumerate().all(|(i, b)| c.bit(i) == *b),
            (T::Mask(m), Point::Finite(i)) => m >> i & 1 == 1,
            (T::Rat, Point::Real(s)) => s.is_rational(),
            (T::Union(cs), _) => cs.iter().any(|c| c.holds(x)),
            (T::Inter(cs), _) => cs.iter().all(|c| c.holds(x)),
            (T::Not(c), _) => !c.holds(x),
            _ => panic!("point {x} does not belong to the space of {self:?}"),
        }
    }

    pub fn closed(lo: Rational, hi: Rational) -> T {
        T::Iv(Some(lo), true, Some(hi), true)
    }

    pub fn open(lo: Rational, hi: Rational) -> T {
        T::Iv(Some(lo), false, Some(hi), false)
    }

    pub fn not(t: T) -> T {
        T::Not(Box::new(t))
    }

    pub fn to_expr(&self, space: &BaseSpace) -> SetExpr {
        match self {
            T::Iv(lo, lc, hi, hc) => {
                let end = |v: &Option<Rational>, closed: bool| match v {
                    None => Endpoint::Unbounded,
                    Some(q) if closed => Endpoint::Closed(q.clone().into()),
                    Some(q) => Endpoint::Open(q.clone().into()),
                };
                let iv = Interval::new(end(lo, *lc), end(hi, *hc));
                if *lc || *hc {
                    SetExpr::closed(Atom::Interval(iv))
                } else {
                    SetExpr::open(Atom::Interval(iv))
                }
            }
            T::Cyl(w) => SetExpr::open(Atom::Cylinder(w.clone())),
            T::Rat => SetExpr::family(Arc::new(Rationals)),
            T::Mask(m) => match space {
                BaseSpace::Finite(f) => SetExpr::open(f.atom(*m)),
                _ => unreachable!(),
            },
            T::Union(cs) => SetExpr::union(cs.iter().map(|c| c.to_expr(space)).collect()),
            T::Inter(cs) => SetExpr::intersection(cs.iter().map(|c| c.to_expr(space)).collect()),
            T::Not(c) => SetExpr::complement(c.to_expr(space)),
        }
    }
}

/// Six points with components `{0,1}`, `{2}`, `{3,4}`, `{5}`; point 1 is
/// not open, so the topology is not discrete.
pub fn finite_space() -> BaseSpace {
    BaseSpace::finite(FiniteSpace::generated(6, &[0b000001, 0b000011, 0b000100, 0b001000, 0b011000, 0b100000]).unwrap())
}

pub fn spaces() -> Vec<BaseSpace> {
    vec![BaseSpace::UnitInterval, BaseSpace::RealLine, BaseSpace::Cantor, finite_space()]
}

fn endpoint<R: Rng>(rng: &mut R, space: &BaseSpace) -> Rational {
    let d = *[2i64, 3, 4, 5, 8].choose(rng).unwrap();
    match space {
        BaseSpace::RealLine => rat(rng.gen_range(-4 * d..=4 * d), d),
        _ => rat(rng.gen_range(0..=d), d),
    }
}

/// A random atom: open or closed interval, cylinder, or union of components.
pub fn atom<R: Rng>(rng: &mut R, space: &BaseSpace) -> T {
    match space {
        BaseSpace::UnitInterval | BaseSpace::RealLine => {
            let (mut a, mut b) = (endpoint(rng, space), endpoint(rng, space));
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let closed = rng.gen_bool(0.5);
            let unbounded = matches!(space, BaseSpace::RealLine) && rng.gen_bool(0.2);
            let (lo, hi) = match (unbounded, rng.gen_bool(0.5)) {
                (true, true) => (None, Some(b)),
                (true, false) => (Some(a), None),
                _ => (Some(a), Some(b)),
            };
            T::Iv(lo, closed, hi, closed)
        }
        BaseSpace::Cantor => {
            let len = rng.gen_range(0..=4);
            T::Cyl((0..len).map(|_| rng.gen_bool(0.5)).collect())
        }
        BaseSpace::Finite(f) => {
            let comps = f.components();
            T::Mask(comps.iter().filter(|_| rng.gen_bool(0.5)).fold(0, |m, c| m | c))
        }
    }
}

/// A Boolean combination of atoms of depth at most `depth`; ambiguous of
/// class 1 in every base space.
pub fn boolean<R: Rng>(rng: &mut R, space: &BaseSpace, depth: u32) -> T {
    if depth == 0 || rng.gen_bool(0.4) {
        return atom(rng, space);
    }
    let k = rng.gen_range(1..=3);
    match rng.gen_range(0..3) {
        0 => T::Union((0..k).map(|_| boolean(rng, space, depth - 1)).collect()),
        1 => T::Inter((0..k).map(|_| boolean(rng, space, depth - 1)).collect()),
        _ => T::Not(Box::new(boolean(rng, space, depth - 1))),
    }
}

/// A finite union of atoms; additive of class 1.
pub fn atom_union<R: Rng>(rng: &mut R, space: &BaseSpace) -> T {
    T::Union((0..rng.gen_range(1..=3)).map(|_| atom(rng, space)).collect())
}

/// Points that sit on the boundaries of `ts`, where membership is most
/// likely to go wrong.
pub fn boundary_points(ts: &[T]) -> Vec<Point> {
    fn walk(t: &T, out: &mut Vec<Point>) {
        match t {
            T::Iv(lo, _, hi, _) => out.extend(lo.iter().chain(hi.iter()).map(|q| Point::rational(q.clone()))),
            T::Cyl(w) => {
                for tail in [false, true] {
                    out.push(Point::Cantor(CantorPoint::new(w.clone(), tail)));
                }
            }
            T::Mask(_) | T::Rat => {}
            T::Union(cs) | T::Inter(cs) => cs.iter().for_each(|c| walk(c, out)),
            T::Not(c) => walk(c, out),
        }
    }
    let mut out = Vec::new();
    ts.iter().for_each(|t| walk(t, &mut out));
    out
}
