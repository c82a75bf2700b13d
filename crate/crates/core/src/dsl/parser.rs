//! Recursive-descent parser, one token of lookahead.

use num_bigint::BigInt;
use num_traits::Zero;

use super::ast::*;
use super::lexer::{lex, Pos, Tok, Token};
use crate::error::{Error, Result};
use crate::num::Rational;

pub fn parse(src: &str) -> Result<Script> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    let mut script = Script::default();
    while p.peek() != &Tok::Eof {
        let pos = p.pos();
        let item = p.item()?;
        script.items.push(item);
        script.positions.push(pos);
    }
    Ok(script)
}

/// Parses a single set expression, e.g. from a command-line flag.
pub fn parse_set(src: &str) -> Result<SetDef> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    let s = p.set()?;
    p.expect_eof()?;
    Ok(s)
}

pub fn parse_func(src: &str) -> Result<FuncDef> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    let f = p.func()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses `real`, `interval c d`, `cantor` or `finite k`.
pub fn parse_target(src: &str) -> Result<TargetLit> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    let t = p.target()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_rational_lit(src: &str) -> Result<Rational> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    let q = p.rational()?;
    p.expect_eof()?;
    Ok(q)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

const COMMANDS: [&str; 11] =
    ["classify", "disjointify", "refine", "separate", "insert", "zeroset", "split", "approximate", "extend", "verify", "oracle"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let p = self.pos();
        Err(Error::Parse { line: p.line, col: p.col, msg: msg.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<()> {
        if self.peek() == &Tok::Sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_eof(&self) -> Result<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.err(format!("unexpected {}", self.describe()))
        }
    }

    fn eat_sym(&mut self, s: &'static str) -> bool {
        if self.peek() == &Tok::Sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err(format!("expected a name, found {}", self.describe())),
        }
    }

    fn digits(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Int(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err(format!("expected a number, found {}", self.describe())),
        }
    }

    fn uint<T: std::str::FromStr>(&mut self) -> Result<T> {
        let s = self.digits()?;
        match s.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.i -= 1;
                self.err(format!("number `{s}` out of range"))
            }
        }
    }

    fn rational(&mut self) -> Result<Rational> {
        let neg = self.eat_sym("-");
        let n: BigInt = self.digits()?.parse().expect("digits");
        let d: BigInt = if self.eat_sym("/") { self.digits()?.parse().expect("digits") } else { BigInt::from(1) };
        if d.is_zero() {
            self.i -= 1;
            return self.err("zero denominator");
        }
        let q = Rational::new(n, d);
        Ok(if neg { -q } else { q })
    }

    fn num(&mut self) -> Result<Num> {
        if self.eat_kw("surd") {
            self.expect_sym("(")?;
            let a = self.rational()?;
            self.expect_sym(",")?;
            let b = self.rational()?;
            self.expect_sym(",")?;
            let d = self.uint()?;
            self.expect_sym(")")?;
            return Ok(Num::Surd(a, b, d));
        }
        Ok(Num::Rat(self.rational()?))
    }

    fn bound(&mut self) -> Result<Bound> {
        if self.eat_kw("inf") {
            return Ok(Bound::PosInf);
        }
        if self.peek() == &Tok::Sym("-") && matches!(&self.toks[self.i + 1].tok, Tok::Ident(s) if s == "inf") {
            self.bump();
            self.bump();
            return Ok(Bound::NegInf);
        }
        Ok(Bound::At(self.num()?))
    }

    fn interval(&mut self) -> Result<IntervalLit> {
        let lo_closed = match self.peek() {
            Tok::Sym("[") => true,
            Tok::Sym("(") => false,
            _ => return self.err(format!("expected an interval, found {}", self.describe())),
        };
        self.bump();
        let lo = self.bound()?;
        self.expect_sym(",")?;
        let hi = self.bound()?;
        let hi_closed = match self.peek() {
            Tok::Sym("]") => true,
            Tok::Sym(")") => false,
            _ => return self.err(format!("expected `]` or `)`, found {}", self.describe())),
        };
        self.bump();
        Ok(IntervalLit { lo_closed, lo, hi, hi_closed })
    }

    fn atom(&mut self) -> Result<AtomLit> {
        if self.eat_kw("cyl") {
            self.expect_sym("(")?;
            let w = if let Tok::Int(_) = self.peek() { self.digits()? } else { String::new() };
            if w.chars().any(|c| c != '0' && c != '1') {
                self.i -= 1;
                return self.err(format!("cylinder word `{w}` is not binary"));
            }
            self.expect_sym(")")?;
            return Ok(AtomLit::Cyl(w));
        }
        if self.eat_kw("pts") {
            self.expect_sym("(")?;
            let space = self.ident()?;
            let mut points = Vec::new();
            while self.eat_sym(",") {
                points.push(self.uint()?);
            }
            self.expect_sym(")")?;
            return Ok(AtomLit::Pts { space, points });
        }
        Ok(AtomLit::Interval(self.interval()?))
    }

    fn point(&mut self) -> Result<PointLit> {
        if self.eat_kw("word") {
            self.expect_sym("(")?;
            let prefix = if let Tok::Int(_) = self.peek() { self.digits()? } else { String::new() };
            if prefix.chars().any(|c| c != '0' && c != '1') {
                self.i -= 1;
                return self.err(format!("word `{prefix}` is not binary"));
            }
            self.expect_sym(",")?;
            let tail: u8 = self.uint()?;
            if tail > 1 {
                return self.err("tail bit must be 0 or 1");
            }
            self.expect_sym(")")?;
            return Ok(PointLit::Word { prefix, tail: tail == 1 });
        }
        if self.eat_kw("pt") {
            self.expect_sym("(")?;
            let i = self.uint()?;
            self.expect_sym(")")?;
            return Ok(PointLit::Fin(i));
        }
        Ok(PointLit::Num(self.num()?))
    }

    fn set_list(&mut self) -> Result<Vec<SetDef>> {
        let mut out = vec![self.set()?];
        while self.eat_sym(",") {
            out.push(self.set()?);
        }
        Ok(out)
    }

    fn set(&mut self) -> Result<SetDef> {
        let name = self.ident()?;
        let call = |p: &mut Parser| p.expect_sym("(");
        let s = match name.as_str() {
            "empty" => SetDef::Empty,
            "full" => SetDef::Full,
            "rationals" => SetDef::Rationals,
            "irrationals" => SetDef::Irrationals,
            "open" | "closed" => {
                call(self)?;
                let a = self.atom()?;
                self.expect_sym(")")?;
                if name == "open" {
                    SetDef::Open(a)
                } else {
                    SetDef::Closed(a)
                }
            }
            "singleton" => {
                call(self)?;
                let x = self.num()?;
                self.expect_sym(")")?;
                SetDef::Singleton(x)
            }
            "union" | "intersection" => {
                call(self)?;
                let cs = if self.peek() == &Tok::Sym(")") { Vec::new() } else { self.set_list()? };
                self.expect_sym(")")?;
                if name == "union" {
                    SetDef::Union(cs)
                } else {
                    SetDef::Intersection(cs)
                }
            }
            "complement" => {
                call(self)?;
                let c = self.set()?;
                self.expect_sym(")")?;
                SetDef::Complement(Box::new(c))
            }
            "difference" => {
                call(self)?;
                let a = self.set()?;
                self.expect_sym(",")?;
                let b = self.set()?;
                self.expect_sym(")")?;
                SetDef::Difference(Box::new(a), Box::new(b))
            }
            "shells" => {
                call(self)?;
                let i = self.interval()?;
                self.expect_sym(")")?;
                SetDef::Shells(i)
            }
            "preimage" => {
                call(self)?;
                let f = self.func()?;
                self.expect_sym(",")?;
                let i = self.interval()?;
                self.expect_sym(")")?;
                SetDef::Preimage(Box::new(f), i)
            }
            _ => SetDef::Name(name),
        };
        Ok(s)
    }

    fn subspace(&mut self) -> Result<Subspace> {
        let carrier = self.set()?;
        self.expect_kw("in")?;
        let space = self.ident()?;
        Ok(Subspace { carrier, space })
    }

    fn func(&mut self) -> Result<FuncDef> {
        let name = self.ident()?;
        let unary = |p: &mut Parser| -> Result<Box<FuncDef>> {
            p.expect_sym("(")?;
            let g = p.func()?;
            p.expect_sym(")")?;
            Ok(Box::new(g))
        };
        let binary = |p: &mut Parser| -> Result<(Box<FuncDef>, Box<FuncDef>)> {
            p.expect_sym("(")?;
            let a = p.func()?;
            p.expect_sym(",")?;
            let b = p.func()?;
            p.expect_sym(")")?;
            Ok((Box::new(a), Box::new(b)))
        };
        let with_nums = |p: &mut Parser| -> Result<(Box<FuncDef>, Num, Num)> {
            p.expect_sym("(")?;
            let g = p.func()?;
            p.expect_sym(",")?;
            let a = p.num()?;
            p.expect_sym(",")?;
            let b = p.num()?;
            p.expect_sym(")")?;
            Ok((Box::new(g), a, b))
        };
        let f = match name.as_str() {
            "id" => FuncDef::Identity,
            "const" => {
                self.expect_sym("(")?;
                let y = self.point()?;
                self.expect_sym(")")?;
                FuncDef::Const(y)
            }
            "step" => {
                self.expect_sym("{")?;
                let mut arms = Vec::new();
                loop {
                    let s = self.set()?;
                    self.expect_sym("->")?;
                    arms.push((s, self.point()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym("}")?;
                FuncDef::Step(arms)
            }
            "indicator" => {
                self.expect_sym("(")?;
                let s = self.set()?;
                self.expect_sym(")")?;
                FuncDef::Indicator(s)
            }
            "dist" => {
                self.expect_sym("(")?;
                let mut is = vec![self.interval()?];
                while self.eat_sym(",") {
                    is.push(self.interval()?);
                }
                self.expect_sym(")")?;
                FuncDef::Dist(is)
            }
            "sum" => {
                let (a, b) = binary(self)?;
                FuncDef::Sum(a, b)
            }
            "product" => {
                let (a, b) = binary(self)?;
                FuncDef::Product(a, b)
            }
            "quotient" => {
                let (a, b) = binary(self)?;
                FuncDef::Quotient(a, b)
            }
            "clamp" => {
                let (g, a, b) = with_nums(self)?;
                FuncDef::Clamp(g, a, b)
            }
            "affine" => {
                let (g, a, b) = with_nums(self)?;
                FuncDef::Affine(g, a, b)
            }
            "phi" => FuncDef::Phi(unary(self)?),
            "phiinv" => FuncDef::PhiInv(unary(self)?),
            "recip" => FuncDef::Recip(unary(self)?),
            "zerofn" => {
                self.expect_sym("(")?;
                let s = self.set()?;
                self.expect_sym(",")?;
                let a = self.uint()?;
                self.expect_sym(")")?;
                FuncDef::ZeroFn(s, a)
            }
            "separator" => {
                self.expect_sym("(")?;
                let a = self.set()?;
                self.expect_sym(",")?;
                let b = self.set()?;
                self.expect_sym(",")?;
                let al = self.uint()?;
                self.expect_sym(")")?;
                FuncDef::Separator(a, b, al)
            }
            "restrict" => {
                self.expect_sym("(")?;
                let g = self.func()?;
                self.expect_sym(",")?;
                let sub = self.subspace()?;
                self.expect_sym(")")?;
                FuncDef::Restrict(Box::new(g), sub)
            }
            _ => FuncDef::Name(name),
        };
        Ok(f)
    }

    fn space(&mut self) -> Result<SpaceDef> {
        let name = self.ident()?;
        match name.as_str() {
            "unit" => Ok(SpaceDef::Unit),
            "real" => Ok(SpaceDef::Real),
            "cantor" => Ok(SpaceDef::Cantor),
            "finite" => {
                self.expect_sym("(")?;
                let n = self.uint()?;
                self.expect_sym(",")?;
                self.expect_sym("[")?;
                let mut opens = Vec::new();
                if self.peek() != &Tok::Sym("]") {
                    loop {
                        self.expect_sym("{")?;
                        let mut pts = Vec::new();
                        if self.peek() != &Tok::Sym("}") {
                            pts.push(self.uint()?);
                            while self.eat_sym(",") {
                                pts.push(self.uint()?);
                            }
                        }
                        self.expect_sym("}")?;
                        opens.push(pts);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym("]")?;
                self.expect_sym(")")?;
                Ok(SpaceDef::Finite { n, opens })
            }
            _ => {
                self.i -= 1;
                self.err(format!("unknown space `{name}` (unit, real, cantor, finite)"))
            }
        }
    }

    fn target(&mut self) -> Result<TargetLit> {
        let name = self.ident()?;
        match name.as_str() {
            "real" => Ok(TargetLit::Real),
            "cantor" => Ok(TargetLit::Cantor),
            "interval" => {
                let a = self.num()?;
                let b = self.num()?;
                Ok(TargetLit::Interval(a, b))
            }
            "finite" => Ok(TargetLit::Finite(self.uint()?)),
            _ => {
                self.i -= 1;
                self.err(format!("unknown target `{name}` (real, interval, cantor, finite)"))
            }
        }
    }

    fn alpha(&mut self) -> Result<u32> {
        self.expect_kw("alpha")?;
        self.uint()
    }

    fn opt_space(&mut self) -> Result<Option<String>> {
        Ok(if self.eat_kw("in") { Some(self.ident()?) } else { None })
    }

    fn source(&mut self) -> Result<Source> {
        self.expect_kw("from")?;
        // `from C` names a context; `from E in X alpha a` builds one.
        let save = self.i;
        if let Tok::Ident(name) = self.peek().clone() {
            self.bump();
            if !self.at_kw("in") && self.peek() != &Tok::Sym("(") {
                return Ok(Source::Context(name));
            }
            self.i = save;
        }
        let sub = self.subspace()?;
        let alpha = self.alpha()?;
        Ok(Source::Subspace { sub, alpha })
    }

    fn stages_tol(&mut self) -> Result<(usize, Rational)> {
        self.expect_kw("stages")?;
        let stages = self.uint()?;
        self.expect_kw("tol")?;
        let tol = self.rational()?;
        Ok((stages, tol))
    }

    fn two_sets(&mut self) -> Result<(SetDef, SetDef)> {
        let a = self.set()?;
        self.expect_sym(",")?;
        let b = self.set()?;
        Ok((a, b))
    }

    fn command(&mut self, kw: &str) -> Result<Command> {
        let c = match kw {
            "classify" => Command::Classify(self.set()?),
            "disjointify" | "refine" => {
                let sets = self.set_list()?;
                let alpha = self.alpha()?;
                let space = self.opt_space()?;
                if kw == "refine" {
                    Command::Refine { sets, alpha, space }
                } else {
                    Command::Disjointify { sets, alpha, space }
                }
            }
            "separate" | "insert" => {
                let (a, b) = self.two_sets()?;
                let alpha = self.alpha()?;
                let space = self.opt_space()?;
                if kw == "separate" {
                    Command::Separate { a, b, alpha, space }
                } else {
                    Command::Insert { a, b, alpha, space }
                }
            }
            "zeroset" => {
                let set = self.set()?;
                let alpha = self.alpha()?;
                Command::Zeroset { set, alpha, space: self.opt_space()? }
            }
            "split" => {
                let mut items = Vec::new();
                loop {
                    if self.eat_kw("rational_points") {
                        self.expect_sym("(")?;
                        items.push(SplitItem::RationalPoints(self.uint()?));
                        self.expect_sym(")")?;
                    } else {
                        items.push(SplitItem::Set(self.set()?));
                    }
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_kw("from")?;
                let sub = self.subspace()?;
                self.expect_kw("k")?;
                Command::Split { items, sub, k: self.uint()? }
            }
            "approximate" => {
                let f = self.func()?;
                self.expect_kw("n")?;
                let n = self.uint()?;
                self.expect_kw("target")?;
                let target = self.target()?;
                Command::Approximate { f, n, target, space: self.opt_space()? }
            }
            "extend" => {
                let f = self.func()?;
                let from = self.source()?;
                let (stages, tol) = self.stages_tol()?;
                let target = if self.eat_kw("target") { Some(self.target()?) } else { None };
                Command::Extend { f, from, stages, tol, target }
            }
            "verify" => {
                let sets = self.set_list()?;
                let from = self.source()?;
                let (stages, tol) = self.stages_tol()?;
                Command::Verify { sets, from, stages, tol }
            }
            "oracle" => {
                self.expect_kw("n")?;
                let n = self.uint()?;
                self.expect_kw("check")?;
                let at = self.i;
                let name = self.ident()?;
                let check = match name.parse::<crate::oracle::Check>() {
                    Ok(c) => c,
                    Err(e) => {
                        self.i = at;
                        return self.err(e.to_string());
                    }
                };
                Command::Oracle { n, check }
            }
            _ => unreachable!("checked by caller"),
        };
        Ok(c)
    }

    fn item(&mut self) -> Result<Item> {
        let kw = self.ident()?;
        let item = match kw.as_str() {
            "space" | "set" | "func" | "context" => {
                let name = self.ident()?;
                self.expect_sym("=")?;
                match kw.as_str() {
                    "space" => Item::Space { name, def: self.space()? },
                    "set" => Item::Set { name, def: self.set()? },
                    "func" => Item::Func { name, def: self.func()? },
                    _ => {
                        let sub = self.subspace()?;
                        let alpha = self.alpha()?;
                        Item::Context { name, sub, alpha }
                    }
                }
            }
            k if COMMANDS.contains(&k) => Item::Command(self.command(k)?),
            _ => {
                self.i -= 1;
                return self.err(format!("expected a declaration or command, found `{kw}`"));
            }
        };
        self.expect_sym(";")?;
        Ok(item)
    }
}
