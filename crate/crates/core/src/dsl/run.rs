//! Executes scripts: resolves declarations and runs each command into one
//! [`Report`]. Engine errors become failed checks; only undeclared names
//! and space mismatches in declarations abort a command early.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

use super::ast::*;
use crate::class::ClassTag;
use crate::construct::{
    disjointify, insert_ambiguous, insert_next_class, multiplicative_pieces, refine_cover, separating_function,
    split_first_category, zero_set_function,
};
use crate::error::{Error, Result};
use crate::extend::{extend_bounded, extend_polish, extend_real, verify_embedding_equivalences, EmbeddingContext, Extension};
use crate::func::{approximate, closed_preimage, evaluate, evaluate_exact, function_class, preimage, FuncExpr, PostMap, Region, Target};
use crate::num::{fmt_rational, int, rat, rational_at, Rational, Surd};
use crate::oracle::run_check;
use crate::point::{parse_word, CantorPoint, Point};
use crate::report::Report;
use crate::sample::{witness_pool, Sampler};
use crate::set::{classify, Atom, Endpoint, Interval, MemberCx, Rationals, SetExpr, SetKind, Shells};
use crate::space::{BaseSpace, FiniteSpace, TraceSubspace};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    /// Ambient sample points per check.
    pub samples: usize,
    /// Truncation bound for enumerations.
    pub nmax: usize,
    /// Ambient and subspace samples held by extension contexts.
    pub context_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 0, samples: 1000, nmax: 64, context_samples: 200 }
    }
}

struct Ctx {
    sub: TraceSubspace,
    alpha: u32,
}

pub struct Runner {
    cfg: RunConfig,
    spaces: HashMap<String, BaseSpace>,
    last_space: Option<BaseSpace>,
    sets: HashMap<String, SetExpr>,
    funcs: HashMap<String, FuncExpr>,
    contexts: HashMap<String, Ctx>,
}

/// Runs a whole script; one report per command, plus one failed report per
/// declaration that could not be resolved.
pub fn run(script: &Script, cfg: &RunConfig) -> Vec<Report> {
    let mut r = Runner::new(cfg.clone());
    let mut out = Vec::new();
    for (k, item) in script.items.iter().enumerate() {
        let pos = script.positions.get(k).copied().unwrap_or_default();
        match item {
            Item::Command(c) => out.push(r.command(c)),
            decl => {
                if let Err(e) = r.declare(decl) {
                    let mut rep = Report::new(format!("{decl}"));
                    rep.error(format!("declaration at {}:{}", pos.line, pos.col), &e);
                    out.push(rep);
                }
            }
        }
    }
    out
}

fn num_to_surd(n: &Num) -> Result<Surd> {
    match n {
        Num::Rat(q) => Ok(Surd::from(q.clone())),
        Num::Surd(a, b, d) => Surd::new(a.clone(), b.clone(), *d),
    }
}

fn num_to_rational(n: &Num) -> Result<Rational> {
    match n {
        Num::Rat(q) => Ok(q.clone()),
        Num::Surd(..) => Err(Error::Domain(format!("{n} must be rational here"))),
    }
}

fn interval(i: &IntervalLit) -> Result<Interval> {
    let end = |b: &Bound, closed: bool| -> Result<Endpoint> {
        Ok(match b {
            Bound::NegInf | Bound::PosInf => Endpoint::Unbounded,
            Bound::At(n) if closed => Endpoint::Closed(num_to_surd(n)?),
            Bound::At(n) => Endpoint::Open(num_to_surd(n)?),
        })
    };
    Ok(Interval::new(end(&i.lo, i.lo_closed)?, end(&i.hi, i.hi_closed)?))
}

fn bound_value(b: &Bound) -> Result<Option<Surd>> {
    match b {
        Bound::At(n) => Ok(Some(num_to_surd(n)?)),
        _ => Ok(None),
    }
}

fn point(p: &PointLit) -> Result<Point> {
    Ok(match p {
        PointLit::Num(n) => Point::Real(num_to_surd(n)?),
        PointLit::Word { prefix, tail } => Point::Cantor(CantorPoint::new(parse_word(prefix)?, *tail)),
        PointLit::Fin(i) => Point::Finite(*i),
    })
}

/// Checks that every atom of `s` belongs to `space`.
pub fn check_space(s: &SetExpr, space: &BaseSpace) -> Result<()> {
    let mut seen = HashSet::new();
    walk(s, space, &mut seen)
}

fn walk(s: &SetExpr, space: &BaseSpace, seen: &mut HashSet<u64>) -> Result<()> {
    if !seen.insert(s.id()) {
        return Ok(());
    }
    match s.kind() {
        SetKind::Open(a) | SetKind::Closed(a) => {
            space.check_atom(a).map_err(|_| Error::SpaceMismatch(format!("{a} is not an atom of the {} space", space.name())))
        }
        SetKind::Union(cs) | SetKind::Intersection(cs) => cs.iter().try_for_each(|c| walk(c, space, seen)),
        SetKind::Complement(c) => walk(c, space, seen),
        SetKind::Family(f) if matches!(f.id(), "rationals" | "shells") && !space.is_real() => {
            Err(Error::SpaceMismatch(format!("{} lives on the real line, not the {} space", f.text(), space.name())))
        }
        _ => Ok(()),
    }
}

impl Runner {
    pub fn new(cfg: RunConfig) -> Self {
        Runner {
            cfg,
            spaces: HashMap::new(),
            last_space: None,
            sets: HashMap::new(),
            funcs: HashMap::new(),
            contexts: HashMap::new(),
        }
    }

    pub fn declare(&mut self, item: &Item) -> Result<()> {
        match item {
            Item::Space { name, def } => {
                let sp = match def {
                    SpaceDef::Unit => BaseSpace::UnitInterval,
                    SpaceDef::Real => BaseSpace::RealLine,
                    SpaceDef::Cantor => BaseSpace::Cantor,
                    SpaceDef::Finite { n, opens } => {
                        let masks: Vec<u64> = opens.iter().map(|o| o.iter().fold(0u64, |m, i| m | 1u64 << (*i).min(63))).collect();
                        BaseSpace::finite(FiniteSpace::generated(*n, &masks)?)
                    }
                };
                self.last_space = Some(sp.clone());
                self.spaces.insert(name.clone(), sp);
            }
            Item::Set { name, def } => {
                let s = self.set(def)?;
                self.sets.insert(name.clone(), s);
            }
            Item::Func { name, def } => {
                let f = self.func(def)?;
                self.funcs.insert(name.clone(), f);
            }
            Item::Context { name, sub, alpha } => {
                let sub = self.subspace(sub)?;
                self.contexts.insert(name.clone(), Ctx { sub, alpha: *alpha });
            }
            Item::Command(_) => unreachable!("commands are not declarations"),
        }
        Ok(())
    }

    fn space(&self, name: &str) -> Result<BaseSpace> {
        self.spaces.get(name).cloned().ok_or_else(|| Error::Undeclared(name.to_string()))
    }

    /// The named space, or the most recently declared one, or `[0, 1]`.
    fn space_or_default(&self, name: &Option<String>) -> Result<BaseSpace> {
        match name {
            Some(n) => self.space(n),
            None => Ok(self.last_space.clone().unwrap_or(BaseSpace::UnitInterval)),
        }
    }

    fn points(&self, space: &BaseSpace) -> Vec<Point> {
        let mut pts = Sampler::new(self.cfg.seed).points(space, self.cfg.samples);
        pts.extend(witness_pool(space, 256));
        pts
    }

    pub fn set(&self, d: &SetDef) -> Result<SetExpr> {
        Ok(match d {
            SetDef::Name(n) => self.sets.get(n).cloned().ok_or_else(|| Error::Undeclared(n.clone()))?,
            SetDef::Empty => SetExpr::empty(),
            SetDef::Full => SetExpr::full(),
            SetDef::Rationals => SetExpr::family(Arc::new(Rationals)),
            SetDef::Irrationals => SetExpr::complement(SetExpr::family(Arc::new(Rationals))),
            SetDef::Open(a) => SetExpr::open(self.atom(a)?),
            SetDef::Closed(a) => SetExpr::closed(self.atom(a)?),
            SetDef::Singleton(x) => SetExpr::closed_interval(Interval::point(num_to_surd(x)?)),
            SetDef::Union(cs) => SetExpr::union(cs.iter().map(|c| self.set(c)).collect::<Result<_>>()?),
            SetDef::Intersection(cs) => SetExpr::intersection(cs.iter().map(|c| self.set(c)).collect::<Result<_>>()?),
            SetDef::Complement(c) => SetExpr::complement(self.set(c)?),
            SetDef::Difference(a, b) => SetExpr::minus(&self.set(a)?, &self.set(b)?),
            SetDef::Shells(i) => SetExpr::family(Arc::new(Shells::new(interval(i)?)?)),
            SetDef::Preimage(f, i) => {
                let f = self.func(f)?;
                let (lo, hi) = (bound_value(&i.lo)?, bound_value(&i.hi)?);
                if i.lo_closed || i.hi_closed {
                    if (i.lo_closed || lo.is_none()) && (i.hi_closed || hi.is_none()) {
                        closed_preimage(&f, &lo, &hi)?
                    } else {
                        return Err(Error::Unsupported(format!("preimage of the half-open interval {i}")));
                    }
                } else {
                    preimage(&f, &Region::Interval(lo, hi))?
                }
            }
        })
    }

    fn atom(&self, a: &AtomLit) -> Result<Atom> {
        Ok(match a {
            AtomLit::Interval(i) => Atom::Interval(interval(i)?),
            AtomLit::Cyl(w) => Atom::Cylinder(parse_word(w)?),
            AtomLit::Pts { space, points } => match self.space(space)? {
                BaseSpace::Finite(f) => {
                    if let Some(p) = points.iter().find(|p| **p >= f.size()) {
                        return Err(Error::SpaceMismatch(format!("point {p} is not in the {}-point space {space}", f.size())));
                    }
                    f.atom(points.iter().fold(0, |m, p| m | 1 << p))
                }
                other => return Err(Error::SpaceMismatch(format!("{space} is the {} space, not a finite one", other.name()))),
            },
        })
    }

    fn subspace(&self, sub: &Subspace) -> Result<TraceSubspace> {
        let space = self.space(&sub.space)?;
        let carrier = self.set(&sub.carrier)?;
        check_space(&carrier, &space)?;
        TraceSubspace::new(space, carrier)
    }

    pub fn func(&self, d: &FuncDef) -> Result<FuncExpr> {
        let one = || Point::rational(int(1));
        let zero = || Point::rational(int(0));
        Ok(match d {
            FuncDef::Name(n) => self.funcs.get(n).cloned().ok_or_else(|| Error::Undeclared(n.clone()))?,
            FuncDef::Identity => FuncExpr::identity(),
            FuncDef::Const(p) => FuncExpr::constant(point(p)?),
            FuncDef::Step(arms) => {
                let sets = arms.iter().map(|(s, _)| self.set(s)).collect::<Result<Vec<_>>>()?;
                let values = arms.iter().map(|(_, v)| point(v)).collect::<Result<Vec<_>>>()?;
                FuncExpr::step(sets, values)?
            }
            FuncDef::Indicator(s) => {
                let s = self.set(s)?;
                FuncExpr::step(vec![s.clone(), SetExpr::complement_of(s)], vec![one(), zero()])?
            }
            FuncDef::Dist(is) => FuncExpr::distance(is.iter().map(interval).collect::<Result<_>>()?)?,
            FuncDef::Sum(a, b) => FuncExpr::sum(self.func(a)?, self.func(b)?),
            FuncDef::Product(a, b) => FuncExpr::product(self.func(a)?, self.func(b)?),
            FuncDef::Quotient(a, b) => FuncExpr::quotient(self.func(a)?, self.func(b)?),
            FuncDef::Clamp(g, a, b) => {
                FuncExpr::post(PostMap::Clamp { lo: num_to_rational(a)?, hi: num_to_rational(b)? }, self.func(g)?)?
            }
            FuncDef::Affine(g, a, b) => {
                FuncExpr::post(PostMap::Affine { a: num_to_rational(a)?, b: num_to_rational(b)? }, self.func(g)?)?
            }
            FuncDef::Phi(g) => FuncExpr::post(PostMap::Phi, self.func(g)?)?,
            FuncDef::PhiInv(g) => FuncExpr::post(PostMap::PhiInv, self.func(g)?)?,
            FuncDef::Recip(g) => FuncExpr::post(PostMap::Reciprocal, self.func(g)?)?,
            FuncDef::ZeroFn(s, alpha) => zero_set_function(&self.set(s)?, *alpha)?,
            FuncDef::Separator(a, b, alpha) => {
                let space = self.space_or_default(&None)?;
                separating_function(&self.set(a)?, &self.set(b)?, *alpha, &self.points(&space))?.f
            }
            FuncDef::Restrict(g, sub) => FuncExpr::restrict(self.func(g)?, self.subspace(sub)?),
        })
    }

    fn sets_in(&self, defs: &[SetDef], space: &BaseSpace) -> Result<Vec<SetExpr>> {
        defs.iter()
            .map(|d| {
                let s = self.set(d)?;
                check_space(&s, space)?;
                Ok(s)
            })
            .collect()
    }

    fn context(&self, from: &Source) -> Result<EmbeddingContext> {
        let (sub, alpha) = match from {
            Source::Context(name) => {
                let c = self.contexts.get(name).ok_or_else(|| Error::Undeclared(name.clone()))?;
                (c.sub.clone(), c.alpha)
            }
            Source::Subspace { sub, alpha } => (self.subspace(sub)?, *alpha),
        };
        let n = self.cfg.context_samples;
        EmbeddingContext::with_sizes(sub, alpha, self.cfg.seed, n, n)
    }

    pub fn command(&mut self, c: &Command) -> Report {
        let mut rep = Report::new(c.to_string());
        let name = c.to_string().split_whitespace().next().unwrap_or("command").to_string();
        if let Err(e) = self.command_into(c, &mut rep) {
            rep.error(name, &e);
        }
        rep
    }

    fn command_into(&self, c: &Command, rep: &mut Report) -> Result<()> {
        match c {
            Command::Classify(d) => {
                let s = self.set(d)?;
                let tag = classify(&s)?;
                rep.check("classify", true, tag.to_string());
                rep.set("class", json!({ "alpha": tag.alpha, "kind": tag.kind, "symbol": tag.symbol() }));
            }
            Command::Disjointify { sets, alpha, space } => {
                let sp = self.space_or_default(space)?;
                let parts = self.sets_in(sets, &sp)?;
                let pieces = disjointify(&parts, *alpha)?;
                self.partition_checks(rep, &parts, &pieces, &sp, *alpha, true)?;
            }
            Command::Refine { sets, alpha, space } => {
                let sp = self.space_or_default(space)?;
                let parts = self.sets_in(sets, &sp)?;
                let code = refine_cover(&parts, *alpha)?;
                self.partition_checks(rep, &parts, &code.pieces, &sp, *alpha, false)?;
            }
            Command::Separate { a, b, alpha, space } => {
                let sp = self.space_or_default(space)?;
                let ab = self.sets_in(&[a.clone(), b.clone()], &sp)?;
                let pts = self.points(&sp);
                let w = separating_function(&ab[0], &ab[1], *alpha, &pts)?;
                self.separation_checks(rep, &w.f, &ab[0], Some(&ab[1]), &pts)?;
                rep.check("class", w.class <= *alpha, format!("function class {}", w.class));
                rep.set("function", json!(w.f.to_string()));
            }
            Command::Zeroset { set, alpha, space } => {
                let sp = self.space_or_default(space)?;
                let a = self.sets_in(std::slice::from_ref(set), &sp)?.remove(0);
                let pts = self.points(&sp);
                let f = zero_set_function(&a, *alpha)?;
                self.separation_checks(rep, &f, &a, None, &pts)?;
                let class = function_class(&f);
                rep.check("class", class <= *alpha, format!("function class {class}"));
                rep.set("function", json!(f.to_string()));
            }
            Command::Insert { a, b, alpha, space } => {
                let sp = self.space_or_default(space)?;
                let ab = self.sets_in(&[a.clone(), b.clone()], &sp)?;
                let pts = self.points(&sp);
                let mult = ClassTag::multiplicative(*alpha);
                let both_mult = classify(&ab[0])?.le(mult) && classify(&ab[1])?.le(mult);
                let (d, bound, how) = if both_mult {
                    (insert_ambiguous(&ab[0], &ab[1], *alpha, &pts)?, ClassTag::ambiguous(*alpha), "ambiguous")
                } else {
                    let da = multiplicative_pieces(&ab[0], *alpha)?;
                    let db = multiplicative_pieces(&ab[1], *alpha)?;
                    (insert_next_class(&da, &db, *alpha)?, ClassTag::multiplicative(*alpha + 1), "next class")
                };
                let mut contains = None;
                let mut misses = None;
                for x in &pts {
                    let mut cx = MemberCx::new(x);
                    let in_d = cx.member(&d)?;
                    if contains.is_none() && cx.member(&ab[0])? && !in_d {
                        contains = Some(x.clone());
                    }
                    if misses.is_none() && in_d && cx.member(&ab[1])? {
                        misses = Some(x.clone());
                    }
                }
                witness_check(rep, "contains A", contains);
                witness_check(rep, "misses B", misses);
                let tag = classify(&d)?;
                rep.check("class", tag.le(bound), format!("{tag} within {bound}"));
                rep.set("construction", json!(how));
                rep.set("set", json!(d.to_string()));
            }
            Command::Split { items, sub, k } => self.split(rep, items, sub, *k)?,
            Command::Approximate { f, n, target, space } => {
                let sp = self.space_or_default(space)?;
                let f = self.func(f)?;
                let pts = self.points(&sp);
                let target = self.target(target, &f, &pts)?;
                let g = approximate(&f, *n, &target)?;
                let bound = rat(1, *n as i64);
                let fine = rat(1, 1 << 20);
                let mut worst = Surd::zero();
                let mut bad = None;
                for x in &pts {
                    let (fx, e1) = evaluate(&f, x, &fine)?;
                    let (gx, e2) = evaluate(&g, x, &fine)?;
                    let d = fx.distance(&gx)?;
                    if d > worst {
                        worst = d.clone();
                    }
                    if bad.is_none() && d.add(&Surd::from(e1 + e2))? >= Surd::from(bound.clone()) {
                        bad = Some(x.clone());
                    }
                }
                witness_check(rep, "deviation below 1/n", bad);
                rep.set("max_deviation", json!(worst.to_string()));
                rep.set("points", json!(pts.len()));
            }
            Command::Extend { f, from, stages, tol, target } => {
                let ctx = self.context(from)?;
                let f = self.func(f)?;
                self.extend(rep, &ctx, &f, *stages, tol, target.as_ref().unwrap_or(&TargetLit::Real))?;
            }
            Command::Verify { sets, from, stages, tol } => {
                let ctx = self.context(from)?;
                let suite = self.sets_in(sets, ctx.ambient())?;
                for it in verify_embedding_equivalences(&ctx, &suite, *stages, tol) {
                    rep.check(format!("round trip {}", it.set), it.ok, format!("{} ({} points)", it.detail, it.checked));
                }
            }
            Command::Oracle { n, check } => {
                let r = run_check(*check, *n)?;
                rep.check(
                    "recount",
                    r.recount.agrees(),
                    format!("{} topologies, {} preorders", r.recount.enumerated, r.recount.preorders),
                );
                rep.check(check.to_string(), r.passed == r.cases && r.mismatches.is_empty(), format!("{}/{}", r.passed, r.cases));
                rep.data = r.to_json();
            }
        }
        Ok(())
    }

    fn partition_checks(
        &self,
        rep: &mut Report,
        parts: &[SetExpr],
        pieces: &[SetExpr],
        space: &BaseSpace,
        alpha: u32,
        exact_union: bool,
    ) -> Result<()> {
        let pts = self.points(space);
        let (mut overlap, mut outside, mut lost) = (None, None, None);
        for x in &pts {
            let mut cx = MemberCx::new(x);
            let ins: Vec<bool> = pieces.iter().map(|p| cx.member(p)).collect::<Result<_>>()?;
            let inp: Vec<bool> = parts.iter().map(|p| cx.member(p)).collect::<Result<_>>()?;
            if overlap.is_none() && ins.iter().filter(|b| **b).count() > 1 {
                overlap = Some(x.clone());
            }
            if outside.is_none() && ins.iter().zip(&inp).any(|(p, q)| *p && !*q) {
                outside = Some(x.clone());
            }
            let covered = inp.iter().any(|b| *b);
            let hit = ins.iter().any(|b| *b);
            if lost.is_none() && (covered != hit) && (exact_union || covered) {
                lost = Some(x.clone());
            }
        }
        witness_check(rep, "pairwise disjoint", overlap);
        witness_check(rep, "pieces inside parts", outside);
        witness_check(rep, "union preserved", lost);
        let bound = ClassTag::ambiguous(alpha);
        rep.check("class", pieces.iter().all(|p| classify(p).map(|t| t.le(bound)).unwrap_or(false)), format!("within {bound}"));
        rep.set("pieces", json!(pieces.iter().map(|p| p.to_string()).collect::<Vec<_>>()));
        rep.set("points", json!(pts.len()));
        Ok(())
    }

    /// `f = 0` exactly on `a`, `f = 1` on `b`, values in `[0, 1]`.
    fn separation_checks(&self, rep: &mut Report, f: &FuncExpr, a: &SetExpr, b: Option<&SetExpr>, pts: &[Point]) -> Result<()> {
        let (mut zero, mut one, mut range) = (None, None, None);
        let (lo, hi) = (Surd::zero(), Surd::one());
        let (mut in_a, mut in_b) = (0usize, 0usize);
        for x in pts {
            let y = evaluate_exact(f, x)?;
            let y = y.as_real()?;
            let mut cx = MemberCx::new(x);
            let xa = cx.member(a)?;
            in_a += usize::from(xa);
            if zero.is_none() && xa != y.is_zero() {
                zero = Some(x.clone());
            }
            if let Some(b) = b {
                let xb = cx.member(b)?;
                in_b += usize::from(xb);
                if one.is_none() && xb && *y != hi {
                    one = Some(x.clone());
                }
            }
            if range.is_none() && (*y < lo || *y > hi) {
                range = Some(x.clone());
            }
        }
        witness_check(rep, "zero set is A", zero);
        if b.is_some() {
            witness_check(rep, "one on B", one);
        }
        witness_check(rep, "values in [0, 1]", range);
        rep.set("points", json!({ "total": pts.len(), "in_a": in_a, "in_b": in_b }));
        Ok(())
    }

    fn target(&self, t: &TargetLit, f: &FuncExpr, pts: &[Point]) -> Result<Target> {
        Ok(match t {
            TargetLit::Interval(a, b) => Target::Interval { lo: num_to_rational(a)?, hi: num_to_rational(b)? },
            TargetLit::Cantor => Target::Cantor,
            TargetLit::Finite(k) => Target::Finite(*k),
            TargetLit::Real => {
                // Grid window from the sampled range.
                let (mut lo, mut hi) = (BigInt::zero(), BigInt::zero());
                for x in pts {
                    let (y, _) = evaluate(f, x, &rat(1, 1 << 10))?;
                    let fl = y.as_real()?.floor();
                    lo = lo.min(fl.clone() - 1);
                    hi = hi.max(fl + 2);
                }
                Target::Real { lo: Rational::from_integer(lo), hi: Rational::from_integer(hi) }
            }
        })
    }

    fn extend(&self, rep: &mut Report, ctx: &EmbeddingContext, f: &FuncExpr, stages: usize, tol: &Rational, t: &TargetLit) -> Result<()> {
        let report_cert = |rep: &mut Report, ext: &Extension| {
            let cert = &ext.certificate;
            for c in &cert.checks {
                let ok = c.trace && c.partition && c.empty && c.nested;
                rep.check(format!("stage {} (A)-(D)", c.stage), ok, format!("{} chains, {} points", c.chains, c.points));
            }
            rep.check("cauchy modulus", cert.cauchy_ratio <= 1.0, format!("ratio {:.4}", cert.cauchy_ratio));
        };
        let g = match t {
            TargetLit::Real => {
                let ext = extend_real(ctx, f, stages, tol)?;
                report_cert(rep, &ext.bounded);
                rep.set("extension", ext.to_json());
                ext.g
            }
            TargetLit::Interval(a, b) => {
                let ext = extend_bounded(ctx, f, &num_to_rational(a)?, &num_to_rational(b)?, stages, tol)?;
                report_cert(rep, &ext);
                rep.set("certificate", ext.certificate.to_json());
                ext.g
            }
            _ => {
                let target = self.target(t, f, &ctx.e_samples)?;
                let ext = extend_polish(ctx, f, &target, stages, tol)?;
                report_cert(rep, &ext);
                rep.set("certificate", ext.certificate.to_json());
                ext.g
            }
        };
        // Deviation on E and finiteness everywhere sampled, recomputed from g.
        let fine = tol / Rational::from_integer(BigInt::from(1000));
        let mut worst = Surd::zero();
        let mut bad = None;
        for x in &ctx.e_samples {
            let (fx, e1) = evaluate(f, x, &fine)?;
            let (gx, e2) = evaluate(&g, x, &fine)?;
            let d = fx.distance(&gx)?;
            if bad.is_none() && d > Surd::from(tol + e1 + e2) {
                bad = Some(x.clone());
            }
            if d > worst {
                worst = d;
            }
        }
        witness_check(rep, "deviation on E within tolerance", bad);
        let mut undefined = None;
        for x in &ctx.samples {
            if let Err(e) = evaluate(&g, x, &fine) {
                undefined = Some((x.clone(), e.to_string()));
                break;
            }
        }
        match undefined {
            None => rep.check("g defined at ambient samples", true, ""),
            Some((x, e)) => rep.fail_with("g defined at ambient samples", Some(x.to_string()), e),
        };
        let class = function_class(&g);
        rep.check("class", class <= ctx.alpha, format!("function class {class}"));
        rep.set("max_deviation", json!(worst.to_string()));
        rep.set("tolerance", json!(fmt_rational(tol)));
        rep.set("function", json!(g.to_string()));
        Ok(())
    }

    fn split(&self, rep: &mut Report, items: &[SplitItem], sub: &Subspace, k: usize) -> Result<()> {
        let e = self.subspace(sub)?;
        let mut xs = Vec::new();
        let mut enumerated = Vec::new();
        for it in items {
            match it {
                SplitItem::Set(d) => {
                    let s = self.set(d)?;
                    check_space(&s, &e.ambient)?;
                    xs.push(s);
                }
                SplitItem::RationalPoints(n) => {
                    for i in 0..*n {
                        let q = rational_at(i as u64);
                        enumerated.push(Point::rational(q.clone()));
                        xs.push(SetExpr::closed_interval(Interval::point(q)));
                    }
                }
            }
        }
        let pool = witness_pool(&e.ambient, 4 * self.cfg.nmax.max(64));
        let s = split_first_category(&e, &xs, k, &pool)?;
        let mut pts = self.points(&e.ambient);
        pts.extend(enumerated.iter().cloned());
        let mut both = None;
        for x in &pts {
            let mut cx = MemberCx::new(x);
            if both.is_none() && cx.member(&s.a)? && cx.member(&s.b)? {
                both = Some(x.clone());
            }
        }
        witness_check(rep, "A and B disjoint", both);
        let mut uncovered = None;
        for x in &enumerated {
            let mut cx = MemberCx::new(x);
            if uncovered.is_none() && !(cx.member(&s.a)? || cx.member(&s.b)?) {
                uncovered = Some(x.clone());
            }
        }
        witness_check(rep, "enumerated points covered", uncovered);
        let base = e.ambient.pi_base(k);
        for (i, v) in base.iter().enumerate() {
            let ok = match s.witnesses.get(i) {
                Some((wa, wb)) => {
                    let mut ok = true;
                    for (w, side) in [(wa, &s.a), (wb, &s.b)] {
                        let mut cx = MemberCx::new(w);
                        ok &= cx.member(side)? && cx.member(v)? && cx.member(&e.carrier)?;
                    }
                    ok
                }
                None => false,
            };
            let detail = s.witnesses.get(i).map(|(a, b)| format!("{a} / {b} in {v}")).unwrap_or_default();
            rep.check(format!("witnesses in pi-base set {}", i + 1), ok, detail);
        }
        rep.set("split", s.to_json());
        rep.set("pieces", json!(xs.len()));
        Ok(())
    }
}

fn witness_check(rep: &mut Report, name: &str, witness: Option<Point>) {
    match witness {
        None => {
            rep.check(name, true, "");
        }
        Some(x) => {
            rep.fail_with(name, Some(x.to_string()), "");
        }
    }
}

/// Parses and runs a script in one go.
pub fn run_source(src: &str, cfg: &RunConfig) -> Result<Vec<Report>> {
    Ok(run(&super::parse(src)?, cfg))
}

/// All reports as one JSON array.
pub fn reports_json(reports: &[Report]) -> Value {
    Value::Array(reports.iter().map(Report::to_json).collect())
}
