//! Set codes over a base space: syntax trees with decidable point membership
//! and a syntactic upper bound on their functional Borel class.

mod family;
mod interval;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::class::{ClassTag, Kind};
use crate::error::{Error, Result};
use crate::point::{json_err, parse_word, word_to_string, Point};

pub use family::{
    family_from_json, ComplementMembers, Decomposition, Disjointified, Family, FamilyMode,
    Interleave, Rationals, Restricted, Shells,
};
pub use interval::{Endpoint, Interval};

/// Primitive open/closed descriptors of the concrete base spaces.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Atom {
    Interval(Interval),
    /// Cantor-space cylinder: all words starting with the prefix.
    Cylinder(Vec<bool>),
    /// Subset of a finite space; `functional` marks unions of connected
    /// components, the only functionally open (and closed) sets there.
    Finite { mask: u64, functional: bool },
}

impl Atom {
    pub fn contains(&self, x: &Point) -> Result<bool> {
        match (self, x) {
            (Atom::Interval(i), Point::Real(s)) => Ok(i.contains(s)),
            (Atom::Cylinder(w), Point::Cantor(c)) => Ok(c.has_prefix(w)),
            (Atom::Finite { mask, .. }, Point::Finite(i)) => Ok(*i < 64 && mask >> i & 1 == 1),
            (atom, p) => Err(Error::Domain(format!(
                "{} point {p} is not representable in the space of atom {atom}",
                p.kind_name()
            ))),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Atom::Interval(i) => json!({ "interval": i.to_json() }),
            Atom::Cylinder(w) => json!({ "cylinder": word_to_string(w) }),
            Atom::Finite { mask, functional } => json!({ "points": mask, "functional": functional }),
        }
    }

    fn from_json(v: &Value) -> Result<Atom> {
        if let Some(i) = v.get("interval") {
            return Ok(Atom::Interval(Interval::from_json(i)?));
        }
        if let Some(w) = v.get("cylinder") {
            return Ok(Atom::Cylinder(parse_word(w.as_str().ok_or_else(|| json_err("cylinder"))?)?));
        }
        if let Some(m) = v.get("points") {
            let mask = m.as_u64().ok_or_else(|| json_err("finite mask"))?;
            let functional = v.get("functional").and_then(Value::as_bool).unwrap_or(false);
            return Ok(Atom::Finite { mask, functional });
        }
        Err(json_err("atom"))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Interval(i) => write!(f, "{i}"),
            Atom::Cylinder(w) => write!(f, "cyl({})", word_to_string(w)),
            Atom::Finite { mask, functional } => {
                let ids: Vec<String> =
                    (0..64).filter(|i| mask >> i & 1 == 1).map(|i: u32| i.to_string()).collect();
                let tag = if *functional { "fpts" } else { "pts" };
                write!(f, "{tag}({})", ids.join(","))
            }
        }
    }
}

pub enum SetKind {
    Open(Atom),
    Closed(Atom),
    Union(Vec<SetExpr>),
    Intersection(Vec<SetExpr>),
    Complement(SetExpr),
    Family(Arc<dyn Family>),
    Empty,
    Full,
}

struct SetNode {
    id: u64,
    kind: SetKind,
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// A key distinct from every node id, for caches owned by families.
pub fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed)
}

/// Immutable, cheaply clonable set code.
#[derive(Clone)]
pub struct SetExpr(Arc<SetNode>);

impl SetExpr {
    pub fn from_kind(kind: SetKind) -> Self {
        SetExpr(Arc::new(SetNode { id: NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed), kind }))
    }

    pub fn kind(&self) -> &SetKind {
        &self.0.kind
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn empty() -> Self {
        SetExpr::from_kind(SetKind::Empty)
    }

    pub fn full() -> Self {
        SetExpr::from_kind(SetKind::Full)
    }

    pub fn open(atom: Atom) -> Self {
        SetExpr::from_kind(SetKind::Open(atom))
    }

    pub fn closed(atom: Atom) -> Self {
        SetExpr::from_kind(SetKind::Closed(atom))
    }

    pub fn open_interval(i: Interval) -> Self {
        SetExpr::open(Atom::Interval(i))
    }

    pub fn closed_interval(i: Interval) -> Self {
        SetExpr::closed(Atom::Interval(i))
    }

    pub fn union(children: Vec<SetExpr>) -> Self {
        SetExpr::from_kind(SetKind::Union(children))
    }

    pub fn intersection(children: Vec<SetExpr>) -> Self {
        SetExpr::from_kind(SetKind::Intersection(children))
    }

    pub fn complement(child: SetExpr) -> Self {
        SetExpr::from_kind(SetKind::Complement(child))
    }

    pub fn family(f: Arc<dyn Family>) -> Self {
        SetExpr::from_kind(SetKind::Family(f))
    }

    pub fn is_empty_code(&self) -> bool {
        matches!(self.kind(), SetKind::Empty)
    }

    pub fn is_full_code(&self) -> bool {
        matches!(self.kind(), SetKind::Full)
    }

    /// Union that folds `Empty`/`Full` constants; no structural error on an
    /// empty list (it becomes `Empty`).
    pub fn union_of(children: Vec<SetExpr>) -> Self {
        let mut kept = Vec::new();
        for c in children {
            match c.kind() {
                SetKind::Empty => {}
                SetKind::Full => return SetExpr::full(),
                _ => kept.push(c),
            }
        }
        match kept.len() {
            0 => SetExpr::empty(),
            1 => kept.pop().unwrap(),
            _ => SetExpr::union(kept),
        }
    }

    pub fn intersection_of(children: Vec<SetExpr>) -> Self {
        let mut kept = Vec::new();
        for c in children {
            match c.kind() {
                SetKind::Full => {}
                SetKind::Empty => return SetExpr::empty(),
                _ => kept.push(c),
            }
        }
        match kept.len() {
            0 => SetExpr::full(),
            1 => kept.pop().unwrap(),
            _ => SetExpr::intersection(kept),
        }
    }

    pub fn complement_of(child: SetExpr) -> Self {
        match child.kind() {
            SetKind::Empty => SetExpr::full(),
            SetKind::Full => SetExpr::empty(),
            SetKind::Complement(inner) => inner.clone(),
            _ => SetExpr::complement(child),
        }
    }

    /// `a ∖ b` with constant folding.
    pub fn minus(a: &SetExpr, b: &SetExpr) -> Self {
        SetExpr::intersection_of(vec![a.clone(), SetExpr::complement_of(b.clone())])
    }

    pub fn to_json(&self) -> Value {
        match self.kind() {
            SetKind::Open(a) => json!({ "kind": "open", "atom": a.to_json() }),
            SetKind::Closed(a) => json!({ "kind": "closed", "atom": a.to_json() }),
            SetKind::Union(cs) => {
                json!({ "kind": "union", "children": cs.iter().map(SetExpr::to_json).collect::<Vec<_>>() })
            }
            SetKind::Intersection(cs) => json!({
                "kind": "intersection",
                "children": cs.iter().map(SetExpr::to_json).collect::<Vec<_>>()
            }),
            SetKind::Complement(c) => json!({ "kind": "complement", "child": c.to_json() }),
            SetKind::Family(f) => json!({
                "kind": "family",
                "id": f.id(),
                "mode": f.mode().as_str(),
                "class": f.declared_class(),
                "params": f.params(),
            }),
            SetKind::Empty => json!({ "kind": "empty" }),
            SetKind::Full => json!({ "kind": "full" }),
        }
    }

    pub fn from_json(v: &Value) -> Result<SetExpr> {
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| json_err("set node"))?;
        let children = || -> Result<Vec<SetExpr>> {
            v.get("children")
                .and_then(Value::as_array)
                .ok_or_else(|| json_err("children"))?
                .iter()
                .map(SetExpr::from_json)
                .collect()
        };
        Ok(match kind {
            "open" => SetExpr::open(Atom::from_json(v.get("atom").ok_or_else(|| json_err("atom"))?)?),
            "closed" => SetExpr::closed(Atom::from_json(v.get("atom").ok_or_else(|| json_err("atom"))?)?),
            "union" => SetExpr::union(children()?),
            "intersection" => SetExpr::intersection(children()?),
            "complement" => {
                SetExpr::complement(SetExpr::from_json(v.get("child").ok_or_else(|| json_err("child"))?)?)
            }
            "family" => {
                let id = v.get("id").and_then(Value::as_str).ok_or_else(|| json_err("family id"))?;
                SetExpr::family(family_from_json(id, v.get("params").unwrap_or(&Value::Null))?)
            }
            "empty" => SetExpr::empty(),
            "full" => SetExpr::full(),
            other => return Err(json_err(&format!("set node kind `{other}`"))),
        })
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, cs: &[SetExpr]| -> fmt::Result {
            write!(f, "{name}(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        };
        match self.kind() {
            SetKind::Open(a) => write!(f, "open({a})"),
            SetKind::Closed(a) => write!(f, "closed({a})"),
            SetKind::Union(cs) => list(f, "union", cs),
            SetKind::Intersection(cs) => list(f, "intersection", cs),
            SetKind::Complement(c) => write!(f, "complement({c})"),
            SetKind::Family(fam) => write!(f, "{}", fam.text()),
            SetKind::Empty => write!(f, "empty"),
            SetKind::Full => write!(f, "full"),
        }
    }
}

impl fmt::Debug for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Membership evaluator for one point, memoized over shared subterms.
pub struct MemberCx<'p> {
    point: &'p Point,
    memo: HashMap<u64, bool>,
    indices: HashMap<u64, Option<u64>>,
    /// Exact function values and leaf piece indices, keyed by function id.
    pub(crate) values: HashMap<u64, Point>,
    pub(crate) leaf_indices: HashMap<u64, Option<usize>>,
}

impl<'p> MemberCx<'p> {
    pub fn new(point: &'p Point) -> Self {
        MemberCx { point, memo: HashMap::new(), indices: HashMap::new(), values: HashMap::new(), leaf_indices: HashMap::new() }
    }

    /// Index lookups shared between sibling families, keyed by [`fresh_id`].
    pub fn cached_index(
        &mut self,
        key: u64,
        compute: impl FnOnce(&mut Self) -> Result<Option<u64>>,
    ) -> Result<Option<u64>> {
        if let Some(&v) = self.indices.get(&key) {
            return Ok(v);
        }
        let v = compute(self)?;
        self.indices.insert(key, v);
        Ok(v)
    }

    pub fn point(&self) -> &'p Point {
        self.point
    }

    pub fn member(&mut self, s: &SetExpr) -> Result<bool> {
        if let Some(&b) = self.memo.get(&s.id()) {
            return Ok(b);
        }
        let b = match s.kind() {
            SetKind::Open(a) | SetKind::Closed(a) => a.contains(self.point)?,
            SetKind::Union(cs) => {
                if cs.is_empty() {
                    return Err(Error::Structural("union with no children".into()));
                }
                let mut any = false;
                for c in cs {
                    if self.member(c)? {
                        any = true;
                        break;
                    }
                }
                any
            }
            SetKind::Intersection(cs) => {
                if cs.is_empty() {
                    return Err(Error::Structural("intersection with no children".into()));
                }
                let mut all = true;
                for c in cs {
                    if !self.member(c)? {
                        all = false;
                        break;
                    }
                }
                all
            }
            SetKind::Complement(c) => !self.member(c)?,
            SetKind::Family(f) => {
                let hit = f.first_index(self)?.is_some();
                match f.mode() {
                    FamilyMode::Union => hit,
                    FamilyMode::Intersection => !hit,
                }
            }
            SetKind::Empty => false,
            SetKind::Full => true,
        };
        self.memo.insert(s.id(), b);
        Ok(b)
    }
}

/// Point membership in a coded set.
pub fn member(x: &Point, s: &SetExpr) -> Result<bool> {
    MemberCx::new(x).member(s)
}

/// Syntactic upper bound on the class of the coded set.
pub fn classify(s: &SetExpr) -> Result<ClassTag> {
    classify_memo(s, &mut HashMap::new())
}

fn classify_memo(s: &SetExpr, memo: &mut HashMap<u64, ClassTag>) -> Result<ClassTag> {
    if let Some(t) = memo.get(&s.id()) {
        return Ok(*t);
    }
    let tag = match s.kind() {
        SetKind::Open(a) => atom_class(a, Kind::Additive)?,
        SetKind::Closed(a) => atom_class(a, Kind::Multiplicative)?,
        SetKind::Empty | SetKind::Full => ClassTag::ambiguous(0),
        SetKind::Complement(c) => classify_memo(c, memo)?.complement(),
        SetKind::Family(f) => f.declared_class(),
        SetKind::Union(cs) => {
            if cs.is_empty() {
                return Err(Error::Structural("union with no children".into()));
            }
            let tags = cs.iter().map(|c| classify_memo(c, memo)).collect::<Result<Vec<_>>>()?;
            let add = tags.iter().map(|t| t.additive_level()).max().unwrap();
            // Finite unions keep both the additive and the multiplicative level.
            let mult = tags.iter().map(|t| t.multiplicative_level()).max().unwrap();
            if tags.iter().all(|t| t.kind == Kind::Ambiguous) || mult == add {
                ClassTag::ambiguous(mult.max(add))
            } else if mult < add {
                ClassTag::multiplicative(mult)
            } else {
                ClassTag::additive(add)
            }
        }
        SetKind::Intersection(cs) => {
            if cs.is_empty() {
                return Err(Error::Structural("intersection with no children".into()));
            }
            let tags = cs.iter().map(|c| classify_memo(c, memo)).collect::<Result<Vec<_>>>()?;
            let mult = tags.iter().map(|t| t.multiplicative_level()).max().unwrap();
            // Finite intersections of additive sets stay additive.
            let add = tags.iter().map(|t| t.additive_level()).max().unwrap();
            if tags.iter().all(|t| t.kind == Kind::Ambiguous) || mult == add {
                ClassTag::ambiguous(mult.max(add))
            } else if add < mult {
                ClassTag::additive(add)
            } else {
                ClassTag::multiplicative(mult)
            }
        }
    };
    memo.insert(s.id(), tag);
    Ok(tag)
}

fn atom_class(a: &Atom, kind: Kind) -> Result<ClassTag> {
    match a {
        Atom::Interval(i) if i.lo == Endpoint::Unbounded && i.hi == Endpoint::Unbounded => {
            Ok(ClassTag::ambiguous(0))
        }
        Atom::Interval(_) => Ok(ClassTag::new(0, kind)),
        Atom::Cylinder(_) => Ok(ClassTag::ambiguous(0)),
        Atom::Finite { functional: true, .. } => Ok(ClassTag::ambiguous(0)),
        Atom::Finite { mask, .. } => Err(Error::Structural(format!(
            "finite atom {mask:#b} is not a union of connected components, so it is not functionally measurable"
        ))),
    }
}

/// `Intersection([a, Complement(b)])`, literally.
pub fn difference(a: &SetExpr, b: &SetExpr) -> SetExpr {
    SetExpr::intersection(vec![a.clone(), SetExpr::complement(b.clone())])
}

/// Flattens nested unions/intersections and removes double complements.
pub fn normalize(s: &SetExpr) -> SetExpr {
    match s.kind() {
        SetKind::Union(cs) => {
            let mut out = Vec::new();
            for c in cs {
                let n = normalize(c);
                match n.kind() {
                    SetKind::Union(inner) => out.extend(inner.iter().cloned()),
                    _ => out.push(n),
                }
            }
            SetExpr::union(out)
        }
        SetKind::Intersection(cs) => {
            let mut out = Vec::new();
            for c in cs {
                let n = normalize(c);
                match n.kind() {
                    SetKind::Intersection(inner) => out.extend(inner.iter().cloned()),
                    _ => out.push(n),
                }
            }
            SetExpr::intersection(out)
        }
        SetKind::Complement(c) => match c.kind() {
            SetKind::Complement(inner) => normalize(inner),
            _ => SetExpr::complement(normalize(c)),
        },
        _ => s.clone(),
    }
}
