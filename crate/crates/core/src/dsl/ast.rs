//! Syntax tree of scripts. `Display` prints the canonical source form,
//! which parses back to an equal tree.

use std::fmt;

use crate::num::{fmt_rational, Rational};
use crate::oracle::Check;

use super::lexer::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Num {
    Rat(Rational),
    /// `a + b√d`.
    Surd(Rational, Rational, u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    NegInf,
    PosInf,
    At(Num),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalLit {
    pub lo_closed: bool,
    pub lo: Bound,
    pub hi: Bound,
    pub hi_closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomLit {
    Interval(IntervalLit),
    /// Cantor cylinder over a binary word.
    Cyl(String),
    /// Points of a declared finite space.
    Pts { space: String, points: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointLit {
    Num(Num),
    /// Cantor point: a finite word followed by a constant tail bit.
    Word { prefix: String, tail: bool },
    Fin(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetDef {
    Name(String),
    Empty,
    Full,
    Rationals,
    Irrationals,
    Open(AtomLit),
    Closed(AtomLit),
    Singleton(Num),
    Union(Vec<SetDef>),
    Intersection(Vec<SetDef>),
    Complement(Box<SetDef>),
    Difference(Box<SetDef>, Box<SetDef>),
    Shells(IntervalLit),
    Preimage(Box<FuncDef>, IntervalLit),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FuncDef {
    Name(String),
    Identity,
    Const(PointLit),
    Step(Vec<(SetDef, PointLit)>),
    Indicator(SetDef),
    Dist(Vec<IntervalLit>),
    Sum(Box<FuncDef>, Box<FuncDef>),
    Product(Box<FuncDef>, Box<FuncDef>),
    Quotient(Box<FuncDef>, Box<FuncDef>),
    Clamp(Box<FuncDef>, Num, Num),
    Affine(Box<FuncDef>, Num, Num),
    Phi(Box<FuncDef>),
    PhiInv(Box<FuncDef>),
    Recip(Box<FuncDef>),
    ZeroFn(SetDef, u32),
    Separator(SetDef, SetDef, u32),
    Restrict(Box<FuncDef>, Subspace),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceDef {
    Unit,
    Real,
    Cantor,
    Finite { n: u32, opens: Vec<Vec<u32>> },
}

/// `E in X`: a carrier set inside a declared space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    pub carrier: SetDef,
    pub space: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetLit {
    Real,
    Interval(Num, Num),
    Cantor,
    Finite(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Context(String),
    Subspace { sub: Subspace, alpha: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitItem {
    Set(SetDef),
    /// Singletons of the first `n` rationals of `[0, 1]` in enumeration order.
    RationalPoints(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Classify(SetDef),
    Disjointify { sets: Vec<SetDef>, alpha: u32, space: Option<String> },
    Refine { sets: Vec<SetDef>, alpha: u32, space: Option<String> },
    Separate { a: SetDef, b: SetDef, alpha: u32, space: Option<String> },
    Insert { a: SetDef, b: SetDef, alpha: u32, space: Option<String> },
    Zeroset { set: SetDef, alpha: u32, space: Option<String> },
    Split { items: Vec<SplitItem>, sub: Subspace, k: usize },
    Approximate { f: FuncDef, n: usize, target: TargetLit, space: Option<String> },
    Extend { f: FuncDef, from: Source, stages: usize, tol: Rational, target: Option<TargetLit> },
    Verify { sets: Vec<SetDef>, from: Source, stages: usize, tol: Rational },
    Oracle { n: u32, check: Check },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Space { name: String, def: SpaceDef },
    Set { name: String, def: SetDef },
    Func { name: String, def: FuncDef },
    Context { name: String, sub: Subspace, alpha: u32 },
    Command(Command),
}

#[derive(Clone, Debug, Default)]
pub struct Script {
    pub items: Vec<Item>,
    /// Source position of each item, for runtime diagnostics.
    pub positions: Vec<Pos>,
}

impl PartialEq for Script {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Script {
    pub fn push(&mut self, item: Item) {
        self.items.push(item);
        self.positions.push(Pos::default());
    }

    pub fn contexts(&self) -> usize {
        self.items.iter().filter(|i| matches!(i, Item::Context { .. })).count()
    }

    pub fn commands(&self) -> impl Iterator<Item = &Command> {
        self.items.iter().filter_map(|i| match i {
            Item::Command(c) => Some(c),
            _ => None,
        })
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn rat(q: &Rational) -> String {
    fmt_rational(q)
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Rat(q) => write!(f, "{}", rat(q)),
            Num::Surd(a, b, d) => write!(f, "surd({}, {}, {d})", rat(a), rat(b)),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-inf"),
            Bound::PosInf => write!(f, "inf"),
            Bound::At(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for IntervalLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

impl fmt::Display for AtomLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomLit::Interval(i) => write!(f, "{i}"),
            AtomLit::Cyl(w) => write!(f, "cyl({w})"),
            AtomLit::Pts { space, points } => {
                write!(f, "pts({space}")?;
                for p in points {
                    write!(f, ", {p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for PointLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLit::Num(n) => write!(f, "{n}"),
            PointLit::Word { prefix, tail } => write!(f, "word({prefix}, {})", u8::from(*tail)),
            PointLit::Fin(i) => write!(f, "pt({i})"),
        }
    }
}

impl fmt::Display for SetDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetDef::Name(n) => write!(f, "{n}"),
            SetDef::Empty => write!(f, "empty"),
            SetDef::Full => write!(f, "full"),
            SetDef::Rationals => write!(f, "rationals"),
            SetDef::Irrationals => write!(f, "irrationals"),
            SetDef::Open(a) => write!(f, "open({a})"),
            SetDef::Closed(a) => write!(f, "closed({a})"),
            SetDef::Singleton(x) => write!(f, "singleton({x})"),
            SetDef::Union(cs) => write!(f, "union({})", join(cs)),
            SetDef::Intersection(cs) => write!(f, "intersection({})", join(cs)),
            SetDef::Complement(c) => write!(f, "complement({c})"),
            SetDef::Difference(a, b) => write!(f, "difference({a}, {b})"),
            SetDef::Shells(i) => write!(f, "shells({i})"),
            SetDef::Preimage(g, i) => write!(f, "preimage({g}, {i})"),
        }
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {}", self.carrier, self.space)
    }
}

impl fmt::Display for FuncDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncDef::Name(n) => write!(f, "{n}"),
            FuncDef::Identity => write!(f, "id"),
            FuncDef::Const(p) => write!(f, "const({p})"),
            FuncDef::Step(arms) => {
                let arms: Vec<String> = arms.iter().map(|(s, v)| format!("{s} -> {v}")).collect();
                write!(f, "step {{ {} }}", arms.join(", "))
            }
            FuncDef::Indicator(s) => write!(f, "indicator({s})"),
            FuncDef::Dist(is) => write!(f, "dist({})", join(is)),
            FuncDef::Sum(a, b) => write!(f, "sum({a}, {b})"),
            FuncDef::Product(a, b) => write!(f, "product({a}, {b})"),
            FuncDef::Quotient(a, b) => write!(f, "quotient({a}, {b})"),
            FuncDef::Clamp(g, a, b) => write!(f, "clamp({g}, {a}, {b})"),
            FuncDef::Affine(g, a, b) => write!(f, "affine({g}, {a}, {b})"),
            FuncDef::Phi(g) => write!(f, "phi({g})"),
            FuncDef::PhiInv(g) => write!(f, "phiinv({g})"),
            FuncDef::Recip(g) => write!(f, "recip({g})"),
            FuncDef::ZeroFn(s, a) => write!(f, "zerofn({s}, {a})"),
            FuncDef::Separator(a, b, al) => write!(f, "separator({a}, {b}, {al})"),
            FuncDef::Restrict(g, sub) => write!(f, "restrict({g}, {sub})"),
        }
    }
}

impl fmt::Display for SpaceDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDef::Unit => write!(f, "unit"),
            SpaceDef::Real => write!(f, "real"),
            SpaceDef::Cantor => write!(f, "cantor"),
            SpaceDef::Finite { n, opens } => {
                let opens: Vec<String> = opens.iter().map(|o| format!("{{{}}}", join(o))).collect();
                write!(f, "finite({n}, [{}])", opens.join(", "))
            }
        }
    }
}

impl fmt::Display for TargetLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetLit::Real => write!(f, "real"),
            TargetLit::Interval(a, b) => write!(f, "interval {a} {b}"),
            TargetLit::Cantor => write!(f, "cantor"),
            TargetLit::Finite(k) => write!(f, "finite {k}"),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Context(c) => write!(f, "from {c}"),
            Source::Subspace { sub, alpha } => write!(f, "from {sub} alpha {alpha}"),
        }
    }
}

impl fmt::Display for SplitItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitItem::Set(s) => write!(f, "{s}"),
            SplitItem::RationalPoints(n) => write!(f, "rational_points({n})"),
        }
    }
}

fn in_space(space: &Option<String>) -> String {
    space.as_ref().map(|s| format!(" in {s}")).unwrap_or_default()
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Classify(s) => write!(f, "classify {s}"),
            Command::Disjointify { sets, alpha, space } => {
                write!(f, "disjointify {} alpha {alpha}{}", join(sets), in_space(space))
            }
            Command::Refine { sets, alpha, space } => write!(f, "refine {} alpha {alpha}{}", join(sets), in_space(space)),
            Command::Separate { a, b, alpha, space } => write!(f, "separate {a}, {b} alpha {alpha}{}", in_space(space)),
            Command::Insert { a, b, alpha, space } => write!(f, "insert {a}, {b} alpha {alpha}{}", in_space(space)),
            Command::Zeroset { set, alpha, space } => write!(f, "zeroset {set} alpha {alpha}{}", in_space(space)),
            Command::Split { items, sub, k } => write!(f, "split {} from {sub} k {k}", join(items)),
            Command::Approximate { f: g, n, target, space } => {
                write!(f, "approximate {g} n {n} target {target}{}", in_space(space))
            }
            Command::Extend { f: g, from, stages, tol, target } => {
                write!(f, "extend {g} {from} stages {stages} tol {}", rat(tol))?;
                if let Some(t) = target {
                    write!(f, " target {t}")?;
                }
                Ok(())
            }
            Command::Verify { sets, from, stages, tol } => {
                write!(f, "verify {} {from} stages {stages} tol {}", join(sets), rat(tol))
            }
            Command::Oracle { n, check } => write!(f, "oracle n {n} check {check}"),
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Space { name, def } => write!(f, "space {name} = {def};"),
            Item::Set { name, def } => write!(f, "set {name} = {def};"),
            Item::Func { name, def } => write!(f, "func {name} = {def};"),
            Item::Context { name, sub, alpha } => write!(f, "context {name} = {sub} alpha {alpha};"),
            Item::Command(c) => write!(f, "{c};"),
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        Ok(())
    }
}
