//! Concrete base spaces and subspaces given by a carrier set.

use std::fmt;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde_json::{json, Value};

use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::num::{int, rat, rational_at, Surd};
use crate::point::{json_err, CantorPoint, Point};
use crate::set::{classify, Atom, Interval, MemberCx, SetExpr};

/// A finite topological space on points `0..n`, stored as its full lattice
/// of open sets (bitmasks).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSpace {
    n: u32,
    opens: Vec<u64>,
    components: Vec<u64>,
}

impl FiniteSpace {
    /// The topology generated by `subbase` (closed under finite unions and
    /// intersections, with `∅` and the whole space added).
    pub fn generated(n: u32, subbase: &[u64]) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::Unsupported(format!("finite spaces need 1..=16 points, got {n}")));
        }
        let full = (1u64 << n) - 1;
        if let Some(bad) = subbase.iter().find(|m| **m & !full != 0) {
            return Err(Error::Structural(format!("open set {bad:#b} mentions points beyond {n}")));
        }
        let mut opens: Vec<u64> = vec![0, full];
        opens.extend(subbase.iter().copied());
        opens.sort_unstable();
        opens.dedup();
        loop {
            let mut added = Vec::new();
            for (i, &a) in opens.iter().enumerate() {
                for &b in &opens[i + 1..] {
                    for c in [a | b, a & b] {
                        if opens.binary_search(&c).is_err() && !added.contains(&c) {
                            added.push(c);
                        }
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            opens.extend(added);
            opens.sort_unstable();
        }
        Ok(Self::from_topology(n, opens))
    }

    /// Builds from a list already known to be a topology.
    pub fn from_topology(n: u32, mut opens: Vec<u64>) -> Self {
        opens.sort_unstable();
        opens.dedup();
        let components = connected_components(n, &opens);
        FiniteSpace { n, opens, components }
    }

    pub fn size(&self) -> u32 {
        self.n
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    pub fn opens(&self) -> &[u64] {
        &self.opens
    }

    pub fn is_open(&self, mask: u64) -> bool {
        self.opens.binary_search(&mask).is_ok()
    }

    pub fn is_closed(&self, mask: u64) -> bool {
        self.is_open(self.full_mask() & !mask)
    }

    /// Connected components as bitmasks, ordered by lowest point.
    pub fn components(&self) -> &[u64] {
        &self.components
    }

    /// Functionally open sets coincide with unions of components here.
    pub fn is_functional(&self, mask: u64) -> bool {
        self.components.iter().all(|c| c & mask == 0 || c & mask == *c)
    }

    /// Smallest open set containing `i`.
    pub fn neighbourhood(&self, i: u32) -> u64 {
        self.opens.iter().filter(|o| *o >> i & 1 == 1).fold(self.full_mask(), |acc, o| acc & o)
    }

    pub fn atom(&self, mask: u64) -> Atom {
        Atom::Finite { mask, functional: self.is_functional(mask) }
    }
}

/// Components of the specialization preorder's comparability graph.
pub fn connected_components(n: u32, opens: &[u64]) -> Vec<u64> {
    let full = (1u64 << n) - 1;
    let nbhd = |i: u32| opens.iter().filter(|o| *o >> i & 1 == 1).fold(full, |acc, o| acc & o);
    let mut uf = UnionFind::<usize>::new(n as usize);
    for i in 0..n {
        let u = nbhd(i);
        for j in 0..n {
            if u >> j & 1 == 1 {
                uf.union(i as usize, j as usize);
            }
        }
    }
    let mut comps: Vec<u64> = Vec::new();
    let mut root_mask: Vec<(usize, u64)> = Vec::new();
    for i in 0..n as usize {
        let r = uf.find(i);
        match root_mask.iter_mut().find(|(root, _)| *root == r) {
            Some((_, m)) => *m |= 1 << i,
            None => root_mask.push((r, 1 << i)),
        }
    }
    comps.extend(root_mask.into_iter().map(|(_, m)| m));
    comps
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseSpace {
    UnitInterval,
    RealLine,
    Cantor,
    Finite(Arc<FiniteSpace>),
}

impl BaseSpace {
    pub fn finite(space: FiniteSpace) -> Self {
        BaseSpace::Finite(Arc::new(space))
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseSpace::UnitInterval => "unit_interval",
            BaseSpace::RealLine => "real_line",
            BaseSpace::Cantor => "cantor",
            BaseSpace::Finite(_) => "finite",
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, BaseSpace::UnitInterval | BaseSpace::RealLine)
    }

    /// Whether the point is representable in, and lies in, this space.
    pub fn contains(&self, x: &Point) -> bool {
        match (self, x) {
            (BaseSpace::UnitInterval, Point::Real(s)) => *s >= Surd::zero() && *s <= Surd::one(),
            (BaseSpace::RealLine, Point::Real(_)) => true,
            (BaseSpace::Cantor, Point::Cantor(_)) => true,
            (BaseSpace::Finite(f), Point::Finite(i)) => *i < f.size(),
            _ => false,
        }
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{x} is not a point of {self}")))
        }
    }

    /// Whether the atom belongs to this space's catalog.
    pub fn check_atom(&self, a: &Atom) -> Result<()> {
        let ok = matches!(
            (self, a),
            (BaseSpace::UnitInterval | BaseSpace::RealLine, Atom::Interval(_)) | (BaseSpace::Cantor, Atom::Cylinder(_))
        ) || match (self, a) {
            (BaseSpace::Finite(f), Atom::Finite { mask, .. }) => mask & !f.full_mask() == 0,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!("atom {a} does not belong to {self}")))
        }
    }

    /// The `n`-th point of a fixed dense sequence.
    pub fn dense_point(&self, n: u64) -> Point {
        match self {
            BaseSpace::UnitInterval => Point::rational(rational_at(n)),
            BaseSpace::RealLine => {
                let (i, j) = unpair(n);
                let z = if i % 2 == 0 { (i / 2) as i64 } else { -((i / 2) as i64) - 1 };
                Point::rational(int(z) + rational_at(j))
            }
            BaseSpace::Cantor => Point::Cantor(CantorPoint::new(shortlex_word(n), false)),
            BaseSpace::Finite(f) => Point::Finite((n % f.size() as u64) as u32),
        }
    }

    /// The first `k` members of a countable π-base, as open codes.
    pub fn pi_base(&self, k: usize) -> Vec<SetExpr> {
        match self {
            BaseSpace::UnitInterval => {
                let mut out = Vec::with_capacity(k);
                let mut q = 1i64;
                while out.len() < k {
                    for p in 0..q {
                        if out.len() == k {
                            break;
                        }
                        out.push(SetExpr::open_interval(Interval::open(rat(p, q), rat(p + 1, q))));
                    }
                    q += 1;
                }
                out
            }
            BaseSpace::RealLine => {
                let mut out = Vec::with_capacity(k);
                let mut q = 1i64;
                while out.len() < k {
                    for p in -q * q..q * q {
                        if out.len() == k {
                            break;
                        }
                        out.push(SetExpr::open_interval(Interval::open(rat(p, q), rat(p + 1, q))));
                    }
                    q += 1;
                }
                out
            }
            BaseSpace::Cantor => {
                (0..k as u64).map(|n| SetExpr::open(Atom::Cylinder(shortlex_word(n)))).collect()
            }
            BaseSpace::Finite(f) => f
                .opens()
                .iter()
                .filter(|m| **m != 0)
                .take(k)
                .map(|m| SetExpr::open(f.atom(*m)))
                .collect(),
        }
    }

    /// A point inside a π-base element, used as its witness of nonemptiness.
    pub fn pi_base_center(&self, k: usize) -> Point {
        match self {
            BaseSpace::UnitInterval | BaseSpace::RealLine => {
                let atom = self.pi_base(k + 1).pop().unwrap();
                match atom.kind() {
                    crate::set::SetKind::Open(Atom::Interval(i)) => {
                        let a = i.lo.value().unwrap();
                        let b = i.hi.value().unwrap();
                        Point::Real(a.add(b).unwrap().scale(&rat(1, 2)))
                    }
                    _ => unreachable!("real pi-base elements are open intervals"),
                }
            }
            BaseSpace::Cantor => Point::Cantor(CantorPoint::new(shortlex_word(k as u64), false)),
            BaseSpace::Finite(f) => {
                let m = f.opens().iter().filter(|m| **m != 0).nth(k).copied().unwrap_or(1);
                Point::Finite(m.trailing_zeros())
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            BaseSpace::Finite(f) => json!({ "space": "finite", "points": f.size(), "opens": f.opens() }),
            other => json!({ "space": other.name() }),
        }
    }

    pub fn from_json(v: &Value) -> Result<BaseSpace> {
        match v.get("space").and_then(Value::as_str) {
            Some("unit_interval") => Ok(BaseSpace::UnitInterval),
            Some("real_line") => Ok(BaseSpace::RealLine),
            Some("cantor") => Ok(BaseSpace::Cantor),
            Some("finite") => {
                let n = v.get("points").and_then(Value::as_u64).ok_or_else(|| json_err("points"))?;
                let opens = v
                    .get("opens")
                    .and_then(Value::as_array)
                    .ok_or_else(|| json_err("opens"))?
                    .iter()
                    .map(|m| m.as_u64().ok_or_else(|| json_err("open mask")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BaseSpace::finite(FiniteSpace::generated(n as u32, &opens)?))
            }
            _ => Err(json_err("space")),
        }
    }
}

impl fmt::Display for BaseSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseSpace::Finite(s) => {
                let opens: Vec<String> = s.opens().iter().map(u64::to_string).collect();
                write!(f, "finite {{points: {}, opens: [{}]}}", s.size(), opens.join(", "))
            }
            other => write!(f, "{}", other.name()),
        }
    }
}

/// Inverse Cantor pairing.
pub fn unpair(n: u64) -> (u64, u64) {
    let w = (((8 * n + 1) as f64).sqrt() as u64 - 1) / 2;
    let mut w = w;
    while w * (w + 1) / 2 > n {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= n {
        w += 1;
    }
    let t = w * (w + 1) / 2;
    let j = n - t;
    (w - j, j)
}

pub fn pair(i: u64, j: u64) -> u64 {
    (i + j) * (i + j + 1) / 2 + j
}

/// The `n`-th binary word in shortlex order (`ε, 0, 1, 00, 01, ...`).
pub fn shortlex_word(n: u64) -> Vec<bool> {
    let m = n + 1;
    let bits = 64 - m.leading_zeros();
    (0..bits - 1).rev().map(|i| m >> i & 1 == 1).collect()
}

/// A subspace `E ⊆ X` given by an ambient code; relative sets are ambient
/// codes read through the trace `s ∩ E`.
#[derive(Clone, Debug)]
pub struct TraceSubspace {
    pub ambient: BaseSpace,
    pub carrier: SetExpr,
    pub carrier_class: ClassTag,
}

impl TraceSubspace {
    pub fn new(ambient: BaseSpace, carrier: SetExpr) -> Result<Self> {
        let carrier_class = classify(&carrier)?;
        Ok(TraceSubspace { ambient, carrier, carrier_class })
    }

    pub fn whole(ambient: BaseSpace) -> Self {
        TraceSubspace { ambient, carrier: SetExpr::full(), carrier_class: ClassTag::ambiguous(0) }
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        Ok(self.ambient.contains(x) && crate::set::member(x, &self.carrier)?)
    }

    /// `x ∈ s ∩ E`.
    pub fn trace_member(&self, x: &Point, s: &SetExpr) -> Result<bool> {
        let mut cx = MemberCx::new(x);
        Ok(cx.member(s)? && cx.member(&self.carrier)?)
    }
}

/// Relative class of `s ∩ E` in `E`, bounded by the ambient class of `s`.
pub fn trace_classify(_e: &TraceSubspace, s: &SetExpr) -> Result<ClassTag> {
    classify(s)
}

/// Ambient functionally open code whose trace on a functionally open `E` is
/// the given relatively open set.
pub fn zero_embed_open_trace(e: &TraceSubspace, g_rel: &SetExpr) -> Result<SetExpr> {
    if !e.carrier_class.le(ClassTag::additive(0)) {
        return Err(Error::hypothesis(format!(
            "carrier {} has class {}, not functionally open",
            e.carrier, e.carrier_class
        )));
    }
    let g = classify(g_rel)?;
    if !g.le(ClassTag::additive(0)) {
        return Err(Error::hypothesis(format!("{g_rel} is not the trace of a functionally open code")));
    }
    if g_rel.id() == e.carrier.id() {
        return Ok(e.carrier.clone());
    }
    Ok(SetExpr::intersection_of(vec![g_rel.clone(), e.carrier.clone()]))
}

/// First `k` π-base elements.
pub fn enumerate_pi_base(space: &BaseSpace, k: usize) -> Vec<SetExpr> {
    space.pi_base(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational_index;
    use crate::set::member;

    #[test]
    fn generated_topology_and_components() {
        // Sierpinski space plus an isolated point.
        let s = FiniteSpace::generated(3, &[0b001, 0b100]).unwrap();
        assert_eq!(s.opens(), &[0, 0b001, 0b100, 0b101, 0b111]);
        assert!(s.is_open(0b101));
        assert_eq!(s.neighbourhood(1), 0b111);
        let mut comps = s.components().to_vec();
        comps.sort();
        // 1 specializes to both 0 and 2, so everything is one component.
        assert_eq!(comps, vec![0b111]);
        let t = FiniteSpace::generated(3, &[0b011, 0b100]).unwrap();
        assert_eq!(t.components(), &[0b011, 0b100]);
        assert!(t.is_functional(0b100));
        assert!(!t.is_functional(0b001));
    }

    #[test]
    fn pi_base_examples() {
        let u = BaseSpace::UnitInterval.pi_base(3);
        assert_eq!(u.len(), 3);
        assert_eq!(u[1].to_string(), "open((0,1/2))");
        let c = BaseSpace::Cantor.pi_base(4);
        let texts: Vec<String> = c.iter().map(|s| s.to_string()).collect();
        assert_eq!(texts, ["open(cyl())", "open(cyl(0))", "open(cyl(1))", "open(cyl(00))"]);
        let f = BaseSpace::finite(FiniteSpace::generated(3, &[0b001, 0b010]).unwrap());
        // Oracle: nonempty opens of the generated topology {1,2,3,7} listed exhaustively.
        assert_eq!(f.pi_base(100).len(), 4);
        for k in 0..10 {
            let x = BaseSpace::UnitInterval.pi_base_center(k);
            assert!(member(&x, &BaseSpace::UnitInterval.pi_base(k + 1)[k]).unwrap());
        }
    }

    #[test]
    fn dense_sequence_hits_rationals_at_their_index() {
        for n in 0..200 {
            let Point::Real(x) = BaseSpace::UnitInterval.dense_point(n) else { panic!() };
            assert_eq!(rational_index(x.as_rational().unwrap()), Some(n));
        }
        for n in 0..500 {
            assert!(BaseSpace::RealLine.contains(&BaseSpace::RealLine.dense_point(n)));
            let (i, j) = unpair(n);
            assert_eq!(pair(i, j), n);
        }
    }

    #[test]
    fn open_trace_extension() {
        let e = TraceSubspace::new(BaseSpace::UnitInterval, SetExpr::open_interval(Interval::open(rat(0, 1), rat(1, 1)))).unwrap();
        let g = SetExpr::open_interval(Interval::open(rat(0, 1), rat(1, 2)));
        let b = zero_embed_open_trace(&e, &g).unwrap();
        for n in 0..100 {
            let x = BaseSpace::UnitInterval.dense_point(n);
            assert_eq!(e.trace_member(&x, &b).unwrap(), e.trace_member(&x, &g).unwrap());
        }
        assert!(zero_embed_open_trace(&e, &SetExpr::empty()).unwrap().is_empty_code());
        let closed = TraceSubspace::new(BaseSpace::UnitInterval, SetExpr::closed_interval(Interval::closed(rat(0, 1), rat(1, 2)))).unwrap();
        assert!(matches!(zero_embed_open_trace(&closed, &g), Err(Error::Hypothesis { .. })));
    }
}
