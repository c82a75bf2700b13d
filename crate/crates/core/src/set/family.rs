//! Named countable families with a direct membership rule.

use std::sync::Arc;

use serde_json::{json, Value};

use super::{Interval, MemberCx, SetExpr};
use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::num::{rat, rational_at, rational_index, Surd};
use crate::point::{json_err, Point};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FamilyMode {
    Union,
    Intersection,
}

impl FamilyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyMode::Union => "union",
            FamilyMode::Intersection => "intersection",
        }
    }
}

/// A countable union or intersection `⋃_n M_n` / `⋂_n M_n` whose membership
/// is decided by locating the first relevant index instead of searching.
pub trait Family: Send + Sync {
    fn id(&self) -> &'static str;

    fn mode(&self) -> FamilyMode;

    /// Trusted class of the whole union/intersection.
    fn declared_class(&self) -> ClassTag;

    /// Class bound of every single member.
    fn member_class(&self) -> ClassTag;

    /// The `n`-th member (0-based).
    fn member(&self, n: usize) -> Result<SetExpr>;

    /// Number of members, `None` when infinite.
    fn len(&self) -> Option<usize>;

    /// Union mode: least `n` with `x ∈ M_n`. Intersection mode: least `n`
    /// with `x ∉ M_n`. `None` if there is no such index.
    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>>;

    fn params(&self) -> Value {
        Value::Null
    }

    fn text(&self) -> String {
        format!("family({})", self.id())
    }
}

/// Rebuilds a family node from its serialized parameters.
pub fn family_from_json(id: &str, params: &Value) -> Result<Arc<dyn Family>> {
    let sub = |key: &str| -> Result<SetExpr> {
        SetExpr::from_json(params.get(key).ok_or_else(|| json_err(key))?)
    };
    let class = |key: &str| -> Result<ClassTag> {
        serde_json::from_value(params.get(key).cloned().unwrap_or(Value::Null)).map_err(|_| json_err(key))
    };
    let union_family = |s: SetExpr| -> Result<Arc<dyn Family>> {
        match s.kind() {
            super::SetKind::Family(f) => Ok(f.clone()),
            _ => Err(json_err("nested family")),
        }
    };
    match id {
        "rationals" => Ok(Arc::new(Rationals)),
        "shells" => {
            let i = Interval::from_json(params.get("interval").ok_or_else(|| json_err("interval"))?)?;
            Ok(Arc::new(Shells::new(i)?))
        }
        "disjointified" => Ok(Arc::new(Disjointified::new(union_family(sub("inner")?)?, class("class")?))),
        "restricted" => Ok(Arc::new(Restricted::new(union_family(sub("inner")?)?, sub("to")?, class("class")?))),
        "complement-members" => Ok(Arc::new(ComplementMembers::new(union_family(sub("inner")?)?)?)),
        "interleave" => {
            let arr = params.get("sources").and_then(Value::as_array).ok_or_else(|| json_err("sources"))?;
            let mut sources = Vec::new();
            for s in arr {
                let set = SetExpr::from_json(s.get("set").ok_or_else(|| json_err("source"))?)?;
                sources.push(if s.get("finite").and_then(Value::as_bool).unwrap_or(false) {
                    match set.kind() {
                        super::SetKind::Union(cs) => Decomposition::Finite(cs.clone()),
                        _ => Decomposition::Finite(vec![set]),
                    }
                } else {
                    Decomposition::Family(union_family(set)?)
                });
            }
            Ok(Arc::new(Interleave::new(sources, class("class")?, class("member_class")?)))
        }
        other => Err(Error::Unsupported(format!(
            "family `{other}` carries function codes and cannot be rebuilt from JSON"
        ))),
    }
}

/// `ℚ ∩ [0,1]` as the union of its closed singletons in enumeration order.
pub struct Rationals;

impl Family for Rationals {
    fn id(&self) -> &'static str {
        "rationals"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::additive(1)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::multiplicative(0)
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        Ok(SetExpr::closed_interval(Interval::point(rational_at(n as u64))))
    }

    fn len(&self) -> Option<usize> {
        None
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        let x = cx.point().as_real()?;
        Ok(x.as_rational().and_then(rational_index).map(|i| i as usize))
    }

    fn text(&self) -> String {
        "rationals".into()
    }
}

/// Complement of a closed interval `I`, cut into distance shells:
/// `M_0 = {d(x,I) > 1/2}`, `M_n = {1/(n+2) < d(x,I) ≤ 1/(n+1)}`.
pub struct Shells {
    interval: Interval,
}

impl Shells {
    pub fn new(interval: Interval) -> Result<Self> {
        if !interval.is_closed() || interval.is_empty() {
            return Err(Error::hypothesis(format!("shells need a nonempty closed interval, got {interval}")));
        }
        Ok(Shells { interval })
    }

    fn far(&self, r: &Surd) -> Result<SetExpr> {
        let grown = self.interval.inflate(r)?;
        Ok(SetExpr::complement(SetExpr::closed_interval(grown)))
    }

    fn near(&self, r: &Surd) -> Result<SetExpr> {
        Ok(SetExpr::closed_interval(self.interval.inflate(r)?))
    }
}

impl Family for Shells {
    fn id(&self) -> &'static str {
        "shells"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::additive(0)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::ambiguous(1)
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        let r = |k: usize| Surd::from(rat(1, k as i64));
        if n == 0 {
            return self.far(&r(2));
        }
        Ok(SetExpr::intersection(vec![self.far(&r(n + 2))?, self.near(&r(n + 1))?]))
    }

    fn len(&self) -> Option<usize> {
        None
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        let x = cx.point().as_real()?;
        let d = self.interval.distance(x)?;
        if d.is_zero() {
            return Ok(None);
        }
        if d > Surd::from(rat(1, 2)) {
            return Ok(Some(0));
        }
        let k = d.recip()?.floor();
        let k: usize = k.try_into().map_err(|_| Error::Precision(format!("shell index of {x} overflows")))?;
        Ok(Some(k - 1))
    }

    fn params(&self) -> Value {
        json!({ "interval": self.interval.to_json() })
    }

    fn text(&self) -> String {
        format!("shells({})", self.interval)
    }
}

/// `M'_n = M_n ∖ ⋃_{k<n} M_k` over a union-mode family.
pub struct Disjointified {
    inner: Arc<dyn Family>,
    class: ClassTag,
}

impl Disjointified {
    pub fn new(inner: Arc<dyn Family>, class: ClassTag) -> Self {
        Disjointified { inner, class }
    }
}

impl Family for Disjointified {
    fn id(&self) -> &'static str {
        "disjointified"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        self.inner.declared_class()
    }

    fn member_class(&self) -> ClassTag {
        self.class
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        let earlier = (0..n).map(|k| self.inner.member(k)).collect::<Result<Vec<_>>>()?;
        Ok(SetExpr::minus(&self.inner.member(n)?, &SetExpr::union_of(earlier)))
    }

    fn len(&self) -> Option<usize> {
        self.inner.len()
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        self.inner.first_index(cx)
    }

    fn params(&self) -> Value {
        json!({ "inner": SetExpr::family(self.inner.clone()).to_json(), "class": self.class })
    }

    fn text(&self) -> String {
        format!("disjointified({})", self.inner.text())
    }
}

/// A union-mode family restricted to a fixed set: members `M_n ∩ S`.
pub struct Restricted {
    inner: Arc<dyn Family>,
    to: SetExpr,
    class: ClassTag,
}

impl Restricted {
    pub fn new(inner: Arc<dyn Family>, to: SetExpr, class: ClassTag) -> Self {
        Restricted { inner, to, class }
    }
}

impl Family for Restricted {
    fn id(&self) -> &'static str {
        "restricted"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        self.class
    }

    fn member_class(&self) -> ClassTag {
        self.class
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        Ok(SetExpr::intersection_of(vec![self.inner.member(n)?, self.to.clone()]))
    }

    fn len(&self) -> Option<usize> {
        self.inner.len()
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        if !cx.member(&self.to)? {
            return Ok(None);
        }
        self.inner.first_index(cx)
    }

    fn params(&self) -> Value {
        json!({
            "inner": SetExpr::family(self.inner.clone()).to_json(),
            "to": self.to.to_json(),
            "class": self.class,
        })
    }

    fn text(&self) -> String {
        format!("restricted({}, {})", self.inner.text(), self.to)
    }
}

/// Union-mode view `⋃_n (X ∖ M_n)` of an intersection-mode family.
pub struct ComplementMembers {
    inner: Arc<dyn Family>,
}

impl ComplementMembers {
    pub fn new(inner: Arc<dyn Family>) -> Result<Self> {
        if inner.mode() != FamilyMode::Intersection {
            return Err(Error::Structural("complement-members needs an intersection family".into()));
        }
        Ok(ComplementMembers { inner })
    }
}

impl Family for ComplementMembers {
    fn id(&self) -> &'static str {
        "complement-members"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        self.inner.declared_class().complement()
    }

    fn member_class(&self) -> ClassTag {
        self.inner.member_class().complement()
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        Ok(SetExpr::complement(self.inner.member(n)?))
    }

    fn len(&self) -> Option<usize> {
        self.inner.len()
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        self.inner.first_index(cx)
    }

    fn params(&self) -> Value {
        json!({ "inner": SetExpr::family(self.inner.clone()).to_json() })
    }

    fn text(&self) -> String {
        format!("complement-members({})", self.inner.text())
    }
}

/// Merges several decompositions into one sequence: pieces of finite
/// sources come first, then infinite sources round-robin.
pub struct Interleave {
    finite: Vec<SetExpr>,
    infinite: Vec<Arc<dyn Family>>,
    sources: Vec<Decomposition>,
    class: ClassTag,
    member_class: ClassTag,
}

impl Interleave {
    pub fn new(sources: Vec<Decomposition>, class: ClassTag, member_class: ClassTag) -> Self {
        let mut finite = Vec::new();
        let mut infinite = Vec::new();
        for s in &sources {
            match s {
                Decomposition::Finite(ps) => finite.extend(ps.iter().cloned()),
                Decomposition::Family(f) => match f.len() {
                    Some(n) => {
                        for k in 0..n {
                            finite.push(SetExpr::family_member(f, k));
                        }
                    }
                    None => infinite.push(f.clone()),
                },
            }
        }
        Interleave { finite, infinite, sources, class, member_class }
    }
}

impl SetExpr {
    /// Member `k` of a finite family; members of known length never fail to build.
    fn family_member(f: &Arc<dyn Family>, k: usize) -> SetExpr {
        f.member(k).unwrap_or_else(|_| SetExpr::empty())
    }
}

impl Family for Interleave {
    fn id(&self) -> &'static str {
        "interleave"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        self.class
    }

    fn member_class(&self) -> ClassTag {
        self.member_class
    }

    fn member(&self, n: usize) -> Result<SetExpr> {
        if n < self.finite.len() {
            return Ok(self.finite[n].clone());
        }
        let k = self.infinite.len();
        if k == 0 {
            return Ok(SetExpr::empty());
        }
        let m = n - self.finite.len();
        self.infinite[m % k].member(m / k)
    }

    fn len(&self) -> Option<usize> {
        if self.infinite.is_empty() {
            Some(self.finite.len())
        } else {
            None
        }
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        for (n, p) in self.finite.iter().enumerate() {
            if cx.member(p)? {
                return Ok(Some(n));
            }
        }
        let k = self.infinite.len();
        let mut best: Option<usize> = None;
        for (j, f) in self.infinite.iter().enumerate() {
            if let Some(i) = f.first_index(cx)? {
                let n = self.finite.len() + i * k + j;
                best = Some(best.map_or(n, |b| b.min(n)));
            }
        }
        Ok(best)
    }

    fn params(&self) -> Value {
        let sources: Vec<Value> = self
            .sources
            .iter()
            .map(|s| match s {
                Decomposition::Finite(ps) => {
                    json!({ "finite": true, "set": SetExpr::union(ps.clone()).to_json() })
                }
                Decomposition::Family(f) => json!({ "finite": false, "set": SetExpr::family(f.clone()).to_json() }),
            })
            .collect();
        json!({ "sources": sources, "class": self.class, "member_class": self.member_class })
    }
}

/// A set written as a countable union of pieces, each of a known class.
#[derive(Clone)]
pub enum Decomposition {
    Finite(Vec<SetExpr>),
    /// A union-mode family.
    Family(Arc<dyn Family>),
}

impl Decomposition {
    pub fn len(&self) -> Option<usize> {
        match self {
            Decomposition::Finite(ps) => Some(ps.len()),
            Decomposition::Family(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn piece(&self, n: usize) -> Result<SetExpr> {
        match self {
            Decomposition::Finite(ps) => Ok(ps.get(n).cloned().unwrap_or_else(SetExpr::empty)),
            Decomposition::Family(f) => match f.len() {
                Some(len) if n >= len => Ok(SetExpr::empty()),
                _ => f.member(n),
            },
        }
    }

    /// Least index of a piece containing the point.
    pub fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        match self {
            Decomposition::Finite(ps) => {
                for (n, p) in ps.iter().enumerate() {
                    if cx.member(p)? {
                        return Ok(Some(n));
                    }
                }
                Ok(None)
            }
            Decomposition::Family(f) => f.first_index(cx),
        }
    }

    pub fn first_index_of(&self, x: &Point) -> Result<Option<usize>> {
        self.first_index(&mut MemberCx::new(x))
    }

    /// Pairwise disjoint pieces with the same union, `P_n ∖ ⋃_{k<n} P_k`.
    pub fn disjointify(&self, class: ClassTag) -> Decomposition {
        match self {
            Decomposition::Finite(ps) => {
                let mut out = Vec::with_capacity(ps.len());
                for (n, p) in ps.iter().enumerate() {
                    if n == 0 {
                        out.push(p.clone());
                    } else {
                        out.push(SetExpr::minus(p, &SetExpr::union_of(ps[..n].to_vec())));
                    }
                }
                Decomposition::Finite(out)
            }
            Decomposition::Family(f) => Decomposition::Family(Arc::new(Disjointified::new(f.clone(), class))),
        }
    }

    pub fn as_set(&self) -> SetExpr {
        match self {
            Decomposition::Finite(ps) => SetExpr::union_of(ps.clone()),
            Decomposition::Family(f) => SetExpr::family(f.clone()),
        }
    }

    /// Class bound shared by all pieces.
    pub fn piece_class(&self) -> Result<ClassTag> {
        match self {
            Decomposition::Finite(ps) => {
                let mut worst = ClassTag::ambiguous(0);
                for p in ps {
                    let t = super::classify(p)?;
                    if !t.le(worst) {
                        worst = if worst.le(t) { t } else { ClassTag::ambiguous(t.alpha.max(worst.alpha) + 1) };
                    }
                }
                Ok(worst)
            }
            Decomposition::Family(f) => Ok(f.member_class()),
        }
    }
}

impl std::fmt::Debug for Decomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decomposition::Finite(ps) => f.debug_list().entries(ps).finish(),
            Decomposition::Family(fam) => write!(f, "{}", fam.text()),
        }
    }
}
