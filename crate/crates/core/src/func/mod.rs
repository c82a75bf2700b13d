//! Function codes for `K_α(X, Y)` mappings: exact step functions, zero-set
//! functions, arithmetic, post-composition and uniform limits.

mod approx;
mod eval;
mod preimage;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use serde_json::{json, Value};

use crate::class::{ClassTag, Kind};
use crate::error::{Error, Result};
use crate::num::{fmt_rational, Rational};
use crate::point::Point;
use crate::set::{classify, Decomposition, Interval, SetExpr};
use crate::space::TraceSubspace;

pub use approx::{approximate, Target};
pub use eval::{evaluate, evaluate_exact, Approx};
pub use preimage::{closed_preimage, preimage, CellPreimage, EvalBand, EvalPreimage, LimitPreimage, Region};


/// Finite ordered list of pieces meant to be a disjoint cover.
#[derive(Clone, Debug)]
pub struct PartitionCode {
    pub pieces: Vec<SetExpr>,
    pub certified_disjoint: bool,
    pub certified_cover: bool,
}

impl PartitionCode {
    pub fn new(pieces: Vec<SetExpr>) -> Self {
        PartitionCode { pieces, certified_disjoint: false, certified_cover: false }
    }

    pub fn certified(pieces: Vec<SetExpr>) -> Self {
        PartitionCode { pieces, certified_disjoint: true, certified_cover: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Sum,
    Product,
    Quotient,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PostMap {
    Clamp { lo: Rational, hi: Rational },
    /// `a·y + b`.
    Affine { a: Rational, b: Rational },
    /// `y / (1 + |y|)`, a homeomorphism `ℝ → (−1, 1)`.
    Phi,
    /// `y / (1 − |y|)`, its inverse.
    PhiInv,
    /// `1 / y` on positive reals.
    Reciprocal,
}

/// `1/(n+1)` on the `n`-th piece, `0` off all pieces: a function of class
/// `alpha` vanishing exactly on `zero`.
#[derive(Clone, Debug)]
pub struct ZeroSetFn {
    pub zero: SetExpr,
    /// Disjoint pieces covering the complement of `zero`.
    pub pieces: Decomposition,
    pub alpha: u32,
}

/// Rule producing the `n`-th stage of a uniform limit (`n ≥ 1`).
pub trait StageRule: Send + Sync {
    fn stage(&self, n: usize) -> Result<FuncExpr>;

    /// Class bound shared by all stages.
    fn class_bound(&self) -> u32;

    /// Whether every stage is a step code.
    fn step_stages(&self) -> bool {
        false
    }

    /// Whether the sequence stops at the cap, so the limit is the last stage.
    fn terminal(&self) -> bool {
        false
    }

    fn to_json(&self) -> Value;

    fn text(&self) -> String;
}

/// Stages listed explicitly; stage `n` is `table[n-1]`.
pub struct TableRule(pub Vec<FuncExpr>);

impl StageRule for TableRule {
    fn stage(&self, n: usize) -> Result<FuncExpr> {
        n.checked_sub(1)
            .and_then(|i| self.0.get(i))
            .cloned()
            .ok_or_else(|| Error::Precision(format!("stage {n} is beyond the table of {} stages", self.0.len())))
    }

    fn class_bound(&self) -> u32 {
        self.0.iter().map(function_class).max().unwrap_or(0)
    }

    fn step_stages(&self) -> bool {
        self.0.iter().all(|f| matches!(f.kind(), FuncKind::Step { .. }))
    }

    fn terminal(&self) -> bool {
        true
    }

    fn to_json(&self) -> Value {
        json!({ "rule": "table", "stages": self.0.iter().map(FuncExpr::to_json).collect::<Vec<_>>() })
    }

    fn text(&self) -> String {
        format!("table({} stages)", self.0.len())
    }
}

/// Stage `n` is the countably-valued approximation of `f` with mesh `1/n`.
pub struct ApproximateRule {
    pub f: FuncExpr,
    pub target: Target,
}

impl StageRule for ApproximateRule {
    fn stage(&self, n: usize) -> Result<FuncExpr> {
        approximate(&self.f, n, &self.target)
    }

    fn class_bound(&self) -> u32 {
        function_class(&self.f).max(1)
    }

    fn step_stages(&self) -> bool {
        true
    }

    fn to_json(&self) -> Value {
        json!({ "rule": "approx", "f": self.f.to_json(), "target": self.target.to_json() })
    }

    fn text(&self) -> String {
        format!("approx({}, {})", self.f, self.target)
    }
}

pub struct UniformLimit {
    pub rule: Arc<dyn StageRule>,
    /// Stage `n` is within `modulus / n` of the limit.
    pub modulus: Rational,
    pub cap: usize,
    cache: Mutex<HashMap<usize, FuncExpr>>,
}

impl UniformLimit {
    pub fn new(rule: Arc<dyn StageRule>, modulus: Rational, cap: usize) -> Self {
        UniformLimit { rule, modulus, cap, cache: Mutex::new(HashMap::new()) }
    }

    pub fn stage(&self, n: usize) -> Result<FuncExpr> {
        if n == 0 || n > self.cap {
            return Err(Error::Precision(format!("stage {n} outside 1..={}", self.cap)));
        }
        if let Some(f) = self.cache.lock().expect("stage cache poisoned").get(&n) {
            return Ok(f.clone());
        }
        let f = self.rule.stage(n)?;
        self.cache.lock().expect("stage cache poisoned").insert(n, f.clone());
        Ok(f)
    }

    /// `modulus / n`, or `0` at the cap of a terminal rule.
    pub fn error_at(&self, n: usize) -> Rational {
        if n >= self.cap && self.rule.terminal() {
            return Rational::zero();
        }
        &self.modulus / Rational::from_integer(n.into())
    }
}

pub enum FuncKind {
    Identity,
    /// Distance to a finite union of closed intervals.
    Distance(Vec<Interval>),
    Step { partition: PartitionCode, values: Vec<Point> },
    ZeroSet(ZeroSetFn),
    Arith(ArithOp, Vec<FuncExpr>),
    Post(PostMap, FuncExpr),
    Limit(UniformLimit),
    Restriction(FuncExpr, TraceSubspace),
}

struct FuncNode {
    id: u64,
    kind: FuncKind,
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone)]
pub struct FuncExpr(Arc<FuncNode>);

impl FuncExpr {
    pub fn from_kind(kind: FuncKind) -> Self {
        FuncExpr(Arc::new(FuncNode { id: NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed), kind }))
    }

    pub fn kind(&self) -> &FuncKind {
        &self.0.kind
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn identity() -> Self {
        FuncExpr::from_kind(FuncKind::Identity)
    }

    pub fn distance(shape: Vec<Interval>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Structural("distance to an empty union".into()));
        }
        if let Some(i) = shape.iter().find(|i| !i.is_closed() || i.is_empty()) {
            return Err(Error::Structural(format!("distance needs nonempty closed intervals, got {i}")));
        }
        Ok(FuncExpr::from_kind(FuncKind::Distance(shape)))
    }

    pub fn step(pieces: Vec<SetExpr>, values: Vec<Point>) -> Result<Self> {
        FuncExpr::step_on(PartitionCode::new(pieces), values)
    }

    pub fn step_on(partition: PartitionCode, values: Vec<Point>) -> Result<Self> {
        if partition.pieces.len() != values.len() {
            return Err(Error::Structural(format!(
                "step has {} pieces but {} values",
                partition.pieces.len(),
                values.len()
            )));
        }
        if partition.pieces.is_empty() {
            return Err(Error::Structural("step with no pieces".into()));
        }
        Ok(FuncExpr::from_kind(FuncKind::Step { partition, values }))
    }

    /// Constant function.
    pub fn constant(y: Point) -> Self {
        FuncExpr::from_kind(FuncKind::Step { partition: PartitionCode::certified(vec![SetExpr::full()]), values: vec![y] })
    }

    pub fn zero_set(z: ZeroSetFn) -> Self {
        FuncExpr::from_kind(FuncKind::ZeroSet(z))
    }

    pub fn arith(op: ArithOp, children: Vec<FuncExpr>) -> Result<Self> {
        if children.len() < 2 {
            return Err(Error::Structural(format!("{op:?} needs at least two operands")));
        }
        if op == ArithOp::Quotient && children.len() != 2 {
            return Err(Error::Structural("quotient takes exactly two operands".into()));
        }
        Ok(FuncExpr::from_kind(FuncKind::Arith(op, children)))
    }

    pub fn sum(a: FuncExpr, b: FuncExpr) -> Self {
        FuncExpr::from_kind(FuncKind::Arith(ArithOp::Sum, vec![a, b]))
    }

    pub fn product(a: FuncExpr, b: FuncExpr) -> Self {
        FuncExpr::from_kind(FuncKind::Arith(ArithOp::Product, vec![a, b]))
    }

    pub fn quotient(a: FuncExpr, b: FuncExpr) -> Self {
        FuncExpr::from_kind(FuncKind::Arith(ArithOp::Quotient, vec![a, b]))
    }

    pub fn post(map: PostMap, child: FuncExpr) -> Result<Self> {
        if let PostMap::Clamp { lo, hi } = &map {
            if lo > hi {
                return Err(Error::Structural(format!("empty clamp range [{lo}, {hi}]")));
            }
        }
        Ok(FuncExpr::from_kind(FuncKind::Post(map, child)))
    }

    pub fn limit(rule: Arc<dyn StageRule>, modulus: Rational, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Structural("uniform limit with stage cap 0".into()));
        }
        Ok(FuncExpr::from_kind(FuncKind::Limit(UniformLimit::new(rule, modulus, cap))))
    }

    pub fn restrict(child: FuncExpr, to: TraceSubspace) -> Self {
        FuncExpr::from_kind(FuncKind::Restriction(child, to))
    }

    pub fn as_limit(&self) -> Option<&UniformLimit> {
        match self.kind() {
            FuncKind::Limit(l) => Some(l),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self.kind() {
            FuncKind::Identity => json!({ "kind": "identity" }),
            FuncKind::Distance(shape) => {
                json!({ "kind": "distance", "shape": shape.iter().map(Interval::to_json).collect::<Vec<_>>() })
            }
            FuncKind::Step { partition, values } => json!({
                "kind": "step",
                "pieces": partition.pieces.iter().map(SetExpr::to_json).collect::<Vec<_>>(),
                "values": values.iter().map(Point::to_json).collect::<Vec<_>>(),
                "certified_disjoint": partition.certified_disjoint,
                "certified_cover": partition.certified_cover,
            }),
            FuncKind::ZeroSet(z) => json!({
                "kind": "zeroset",
                "zero": z.zero.to_json(),
                "pieces": z.pieces.as_set().to_json(),
                "alpha": z.alpha,
            }),
            FuncKind::Arith(op, cs) => json!({
                "kind": "arith",
                "op": format!("{op:?}").to_lowercase(),
                "children": cs.iter().map(FuncExpr::to_json).collect::<Vec<_>>(),
            }),
            FuncKind::Post(map, c) => json!({ "kind": "post", "map": post_json(map), "child": c.to_json() }),
            FuncKind::Limit(l) => json!({
                "kind": "limit",
                "rule": l.rule.to_json(),
                "modulus": fmt_rational(&l.modulus),
                "cap": l.cap,
            }),
            FuncKind::Restriction(c, e) => json!({
                "kind": "restriction",
                "child": c.to_json(),
                "space": e.ambient.to_json(),
                "carrier": e.carrier.to_json(),
            }),
        }
    }
}

fn post_json(m: &PostMap) -> Value {
    match m {
        PostMap::Clamp { lo, hi } => json!({ "map": "clamp", "lo": fmt_rational(lo), "hi": fmt_rational(hi) }),
        PostMap::Affine { a, b } => json!({ "map": "affine", "a": fmt_rational(a), "b": fmt_rational(b) }),
        PostMap::Phi => json!({ "map": "phi" }),
        PostMap::PhiInv => json!({ "map": "phi_inv" }),
        PostMap::Reciprocal => json!({ "map": "recip" }),
    }
}

impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            FuncKind::Identity => write!(f, "identity"),
            FuncKind::Distance(shape) => {
                let parts: Vec<String> = shape.iter().map(|i| i.to_string()).collect();
                write!(f, "dist({})", parts.join(", "))
            }
            FuncKind::Step { partition, values } => {
                write!(f, "step {{ ")?;
                for (i, (p, v)) in partition.pieces.iter().zip(values).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p} -> {v}")?;
                }
                write!(f, " }}")
            }
            FuncKind::ZeroSet(z) => write!(f, "zeroset_fn({}, {})", z.zero, z.alpha),
            FuncKind::Arith(op, cs) => {
                let name = match op {
                    ArithOp::Sum => "sum",
                    ArithOp::Product => "product",
                    ArithOp::Quotient => "quotient",
                };
                let parts: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                write!(f, "{name}({})", parts.join(", "))
            }
            FuncKind::Post(map, c) => match map {
                PostMap::Clamp { lo, hi } => write!(f, "clamp({c}, {}, {})", fmt_rational(lo), fmt_rational(hi)),
                PostMap::Affine { a, b } => write!(f, "affine({c}, {}, {})", fmt_rational(a), fmt_rational(b)),
                PostMap::Phi => write!(f, "phi({c})"),
                PostMap::PhiInv => write!(f, "phi_inv({c})"),
                PostMap::Reciprocal => write!(f, "recip({c})"),
            },
            FuncKind::Limit(l) => write!(f, "limit({}, {}, {})", l.rule.text(), fmt_rational(&l.modulus), l.cap),
            FuncKind::Restriction(c, e) => write!(f, "restrict({c}, {})", e.carrier),
        }
    }
}

impl fmt::Debug for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Syntactic `α` with every preimage of a basic open set of class `(α, additive)`.
pub fn function_class(f: &FuncExpr) -> u32 {
    match f.kind() {
        FuncKind::Identity | FuncKind::Distance(_) => 0,
        FuncKind::Step { partition, .. } => step_class(&partition.pieces),
        FuncKind::ZeroSet(z) => z.alpha,
        FuncKind::Arith(_, cs) => cs.iter().map(function_class).max().unwrap_or(0),
        FuncKind::Post(_, c) | FuncKind::Restriction(c, _) => function_class(c),
        FuncKind::Limit(l) => l.rule.class_bound(),
    }
}

/// In a finite partition every piece is the complement of the union of the
/// others, so additive and multiplicative pieces of the top level both turn
/// ambiguous unless the two kinds are mixed.
fn step_class(pieces: &[SetExpr]) -> u32 {
    let tags: Vec<ClassTag> = pieces.iter().map(|p| classify(p).unwrap_or(ClassTag::ambiguous(u32::MAX - 1))).collect();
    let top = tags.iter().map(|t| t.alpha).max().unwrap_or(0);
    let has = |k: Kind| tags.iter().any(|t| t.alpha == top && t.kind == k);
    if has(Kind::Additive) && has(Kind::Multiplicative) {
        top + 1
    } else {
        top
    }
}

/// Leaves of a function tree that are neither step nor zero-set codes.
pub(crate) fn is_cellular(f: &FuncExpr) -> bool {
    match f.kind() {
        FuncKind::Step { .. } | FuncKind::ZeroSet(_) => true,
        FuncKind::Arith(_, cs) => cs.iter().all(is_cellular),
        FuncKind::Post(_, c) => is_cellular(c),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    fn half_split() -> FuncExpr {
        let a = SetExpr::closed_interval(Interval::closed(rat(0, 1), rat(1, 2)));
        FuncExpr::step(vec![a.clone(), SetExpr::complement(a)], vec![Point::rational(rat(0, 1)), Point::rational(rat(1, 1))]).unwrap()
    }

    #[test]
    fn classes_of_basic_codes() {
        assert_eq!(function_class(&FuncExpr::identity()), 0);
        // [0,1/2] closed and its complement open: both kinds at level 0.
        assert_eq!(function_class(&half_split()), 1);
        let c = FuncExpr::post(PostMap::Clamp { lo: rat(0, 1), hi: rat(1, 2) }, half_split()).unwrap();
        assert_eq!(function_class(&c), 1);
        let cyl = SetExpr::open(crate::set::Atom::Cylinder(vec![true]));
        let s = FuncExpr::step(vec![cyl.clone(), SetExpr::complement(cyl)], vec![Point::Finite(0), Point::Finite(1)]).unwrap();
        assert_eq!(function_class(&s), 0);
    }

    #[test]
    fn malformed_codes_are_rejected() {
        assert!(FuncExpr::step(vec![SetExpr::full()], vec![]).is_err());
        assert!(FuncExpr::arith(ArithOp::Quotient, vec![FuncExpr::identity()]).is_err());
        assert!(FuncExpr::post(PostMap::Clamp { lo: rat(1, 1), hi: rat(0, 1) }, FuncExpr::identity()).is_err());
        assert!(FuncExpr::distance(vec![Interval::open(rat(0, 1), rat(1, 1))]).is_err());
    }
}
