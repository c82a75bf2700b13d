//! Brute-force checks on all topologies of a small labeled point set.
//!
//! Subset families of an `n`-point space are bitsets over the `2^n`
//! subsets, so `n ≤ 5` keeps every family in one `u64`. In a finite space
//! a continuous real function is constant on connected components, so every
//! functional class collapses to the algebra of component unions; the
//! `algebra` check verifies that claim by enumerating three-valued
//! continuous functions.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::set::{classify, SetExpr};
use crate::space::FiniteSpace;

pub const MAX_POINTS: u32 = 5;

/// A family of subsets of `0..n`, bit `s` standing for subset `s`.
type Fam = u64;

fn has(f: Fam, s: u64) -> bool {
    f >> s & 1 == 1
}

fn members(f: Fam) -> impl Iterator<Item = u64> {
    (0..64).filter(move |s| has(f, *s))
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 || n > MAX_POINTS {
        return Err(Error::Unsupported(format!("the oracle handles 1..={MAX_POINTS} points, got {n}")));
    }
    Ok(())
}

/// Closes a family under pairwise unions and intersections.
fn lattice_closure(mut f: Fam) -> Fam {
    loop {
        let mut g = f;
        for a in members(f) {
            for b in members(f) {
                g |= 1 << (a | b);
                g |= 1 << (a & b);
            }
        }
        if g == f {
            return f;
        }
        f = g;
    }
}

fn closure_under(mut f: Fam, op: fn(u64, u64) -> u64) -> Fam {
    loop {
        let mut g = f;
        for a in members(f) {
            for b in members(f) {
                g |= 1 << op(a, b);
            }
        }
        if g == f {
            return f;
        }
        f = g;
    }
}

/// Every topology on `n` labeled points, each exactly once, ordered by the
/// search below (deterministic).
///
/// A topology is reached by adding, in increasing order, each open set not
/// already generated by the smaller ones; a step is allowed only if its
/// closure adds no set below the one just added, which makes the path to
/// each topology unique.
pub fn enumerate_topologies(n: u32) -> Result<Vec<FiniteSpace>> {
    check_n(n)?;
    let full = (1u64 << n) - 1;
    let base: Fam = 1 | 1 << full;
    let mut out = vec![base];
    let mut stack = vec![(base, 0u64)];
    while let Some((fam, last)) = stack.pop() {
        for s in last + 1..full {
            if has(fam, s) {
                continue;
            }
            let t = lattice_closure(fam | 1 << s);
            let below = (1u64 << s) - 1;
            if t & below == fam & below {
                out.push(t);
                stack.push((t, s));
            }
        }
    }
    out.sort_unstable();
    Ok(out.into_iter().map(|f| FiniteSpace::from_topology(n, members(f).collect())).collect())
}

/// Independent count of topologies on `n` points: topologies on a finite
/// set correspond to preorders, counted here by testing every relation.
pub fn count_preorders(n: u32) -> Result<u64> {
    check_n(n)?;
    let pairs: Vec<(u32, u32)> = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).collect();
    let mut count = 0;
    for r in 0u64..1 << pairs.len() {
        let mut rel = vec![vec![false; n as usize]; n as usize];
        for (k, (i, j)) in pairs.iter().enumerate() {
            rel[*i as usize][*j as usize] = r >> k & 1 == 1;
        }
        for (i, row) in rel.iter_mut().enumerate() {
            row[i] = true;
        }
        let n = n as usize;
        let transitive = (0..n).all(|i| (0..n).all(|j| !rel[i][j] || (0..n).all(|k| !rel[j][k] || rel[i][k])));
        if transitive {
            count += 1;
        }
    }
    Ok(count)
}

/// Specialization preorder as a bitset over ordered pairs: `i ≤ j` when
/// every open set holding `i` also holds `j`.
fn specialization(sp: &FiniteSpace) -> u64 {
    let n = sp.size();
    let mut bits = 0u64;
    for i in 0..n {
        let u = sp.neighbourhood(i);
        for j in 0..n {
            if u >> j & 1 == 1 {
                bits |= 1 << (i * n + j);
            }
        }
    }
    bits
}

/// Recount result: the preorder count and whether the enumerated families
/// are valid topologies with pairwise distinct specialization preorders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recount {
    pub enumerated: usize,
    pub preorders: u64,
    pub all_closed: bool,
    pub distinct_preorders: bool,
}

impl Recount {
    pub fn agrees(&self) -> bool {
        self.all_closed && self.distinct_preorders && self.enumerated as u64 == self.preorders
    }
}

pub fn recount(n: u32) -> Result<Recount> {
    let spaces = enumerate_topologies(n)?;
    let full = (1u64 << n) - 1;
    let all_closed = spaces.iter().all(|sp| {
        let f: Fam = sp.opens().iter().fold(0, |acc, o| acc | 1 << o);
        has(f, 0) && has(f, full) && lattice_closure(f) == f
    });
    let distinct: BTreeSet<u64> = spaces.iter().map(specialization).collect();
    Ok(Recount {
        enumerated: spaces.len(),
        preorders: count_preorders(n)?,
        all_closed,
        distinct_preorders: distinct.len() == spaces.len(),
    })
}

/// All unions of connected components, as masks in increasing order.
pub fn functional_algebra(sp: &FiniteSpace) -> Vec<u64> {
    let comps = sp.components();
    let mut out: Vec<u64> = (0u64..1 << comps.len())
        .map(|pick| comps.iter().enumerate().filter(|(k, _)| pick >> k & 1 == 1).fold(0, |acc, (_, c)| acc | c))
        .collect();
    out.sort_unstable();
    out
}

fn fam_of(masks: &[u64]) -> Fam {
    masks.iter().fold(0, |acc, m| acc | 1 << m)
}

/// Zero sets and cozero sets of all continuous `f: X → {0, 1/2, 1}`. A map
/// into a finite subset of the reals is continuous exactly when each fiber
/// is open.
pub fn three_valued_sets(sp: &FiniteSpace) -> (Vec<u64>, Vec<u64>) {
    let n = sp.size();
    let mut zeros = BTreeSet::new();
    let mut cozeros = BTreeSet::new();
    for code in 0..3u64.pow(n) {
        let mut fibers = [0u64; 3];
        let mut c = code;
        for i in 0..n {
            fibers[(c % 3) as usize] |= 1 << i;
            c /= 3;
        }
        if fibers.iter().all(|m| sp.is_open(*m)) {
            zeros.insert(fibers[0]);
            cozeros.insert(fibers[1] | fibers[2]);
        }
    }
    (zeros.into_iter().collect(), cozeros.into_iter().collect())
}

/// Functional additive and multiplicative classes `0..=alpha`, built from
/// class 0 by alternating countable (here finite) unions and intersections.
fn classes(sp: &FiniteSpace, alpha: u32) -> Vec<(Fam, Fam)> {
    let (zeros, cozeros) = three_valued_sets(sp);
    let mut out = vec![(fam_of(&cozeros), fam_of(&zeros))];
    for _ in 1..=alpha {
        let (below_add, below_mult) = out.iter().fold((0, 0), |(a, m), (x, y)| (a | x, m | y));
        let add = closure_under(below_mult, |a, b| a | b);
        let mult = closure_under(below_add, |a, b| a & b);
        out.push((add, mult));
    }
    out
}

/// The subspace on `e`, relabeled to points `0..|e|`.
pub fn subspace(sp: &FiniteSpace, e: u64) -> FiniteSpace {
    let k = e.count_ones();
    let opens: Vec<u64> = sp.opens().iter().map(|o| compress(o & e, e)).collect();
    FiniteSpace::from_topology(k, opens)
}

fn compress(mask: u64, e: u64) -> u64 {
    let mut out = 0;
    let mut k = 0;
    for i in 0..64 {
        if e >> i & 1 == 1 {
            out |= (mask >> i & 1) << k;
            k += 1;
        }
    }
    out
}

/// Whether every additive and every multiplicative class-`alpha` set of
/// the subspace `e` is the trace of one of the same class in `sp`.
pub fn is_embedded(sp: &FiniteSpace, e: u64, alpha: u32) -> bool {
    let ambient = classes(sp, alpha)[alpha as usize];
    let sub = classes(&subspace(sp, e), alpha)[alpha as usize];
    let traces = |f: Fam| members(f).fold(0, |acc: Fam, m| acc | 1 << compress(m & e, e));
    sub.0 & !traces(ambient.0) == 0 && sub.1 & !traces(ambient.1) == 0
}

/// Disjoint closed sets have disjoint open neighbourhoods. The least open
/// set around `A` is the union of the points' minimal neighbourhoods.
pub fn is_normal(sp: &FiniteSpace) -> bool {
    let hull = |a: u64| (0..sp.size()).filter(|i| a >> i & 1 == 1).fold(0, |acc, i| acc | sp.neighbourhood(i));
    let full = sp.full_mask();
    let closed: Vec<u64> = sp.opens().iter().map(|o| full & !o).collect();
    closed.iter().all(|a| closed.iter().all(|b| a & b != 0 || hull(*a) & hull(*b) == 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Norm,
    Monotone,
    Algebra,
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(Check::Norm),
            "monotone" => Ok(Check::Monotone),
            "algebra" => Ok(Check::Algebra),
            _ => Err(Error::Unsupported(format!("unknown oracle check `{s}` (norm, monotone, algebra)"))),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::Norm => "norm",
            Check::Monotone => "monotone",
            Check::Algebra => "algebra",
        })
    }
}

/// Tally of one oracle check over all topologies on `n` points.
#[derive(Clone, Debug)]
pub struct OracleReport {
    pub check: Check,
    pub n: u32,
    pub topologies: usize,
    pub cases: usize,
    pub passed: usize,
    pub recount: Recount,
    /// Failing cases, each with its topology (open sets) and details.
    pub mismatches: Vec<Value>,
    pub extra: Value,
}

impl OracleReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty() && self.passed == self.cases && self.recount.agrees()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "check": self.check.to_string(),
            "n": self.n,
            "topologies": self.topologies,
            "cases": self.cases,
            "passed": self.passed,
            "recount": {
                "enumerated": self.recount.enumerated,
                "preorders": self.recount.preorders,
                "all_closed": self.recount.all_closed,
                "distinct_preorders": self.recount.distinct_preorders,
            },
            "mismatches": self.mismatches,
            "extra": self.extra,
            "ok": self.ok(),
        })
    }
}

pub fn run_check(check: Check, n: u32) -> Result<OracleReport> {
    let spaces = enumerate_topologies(n)?;
    let recount = recount(n)?;
    let mut cases = 0;
    let mut passed = 0;
    let mut mismatches = Vec::new();
    let mut extra = json!({});
    match check {
        Check::Norm => {
            let mut normal = 0;
            for sp in &spaces {
                cases += 1;
                let norm = is_normal(sp);
                let full = sp.full_mask();
                let embedded = sp.opens().iter().all(|o| is_embedded(sp, full & !o, 0));
                normal += usize::from(norm);
                if norm == embedded {
                    passed += 1;
                } else {
                    mismatches.push(json!({ "opens": sp.opens(), "normal": norm, "closed_sets_embedded": embedded }));
                }
            }
            extra = json!({ "normal": normal });
        }
        Check::Monotone => {
            let mut embedded = [0usize; 3];
            for sp in &spaces {
                for e in 1..=sp.full_mask() {
                    cases += 1;
                    let verdicts: Vec<bool> = (0..3).map(|a| is_embedded(sp, e, a)).collect();
                    for (k, v) in verdicts.iter().enumerate() {
                        embedded[k] += usize::from(*v);
                    }
                    if verdicts.iter().all(|v| *v == verdicts[0]) {
                        passed += 1;
                    } else {
                        mismatches.push(json!({ "opens": sp.opens(), "subset": e, "verdicts": verdicts }));
                    }
                }
            }
            extra = json!({ "embedded_by_alpha": embedded });
        }
        Check::Algebra => {
            for sp in &spaces {
                cases += 1;
                match algebra_case(sp) {
                    Ok(()) => passed += 1,
                    Err(why) => mismatches.push(json!({ "opens": sp.opens(), "detail": why })),
                }
            }
        }
    }
    Ok(OracleReport { check, n, topologies: spaces.len(), cases, passed, recount, mismatches, extra })
}

/// Component unions form a Boolean algebra, equal to both the zero sets
/// and the cozero sets of three-valued continuous maps, and each union
/// classifies as ambiguous of class 0.
fn algebra_case(sp: &FiniteSpace) -> std::result::Result<(), String> {
    let alg = functional_algebra(sp);
    let fam = fam_of(&alg);
    let full = sp.full_mask();
    for &a in &alg {
        if !has(fam, full & !a) {
            return Err(format!("complement of {a:#b} missing"));
        }
        for &b in &alg {
            if !has(fam, a | b) {
                return Err(format!("union of {a:#b} and {b:#b} missing"));
            }
        }
    }
    let (zeros, cozeros) = three_valued_sets(sp);
    if zeros != alg || cozeros != alg {
        return Err(format!("continuous maps give zero sets {zeros:?} and cozero sets {cozeros:?}, components give {alg:?}"));
    }
    for &a in &alg {
        let code = SetExpr::closed(sp.atom(a));
        match classify(&code) {
            Ok(tag) if tag == ClassTag::ambiguous(0) => {}
            other => return Err(format!("{a:#b} classifies as {other:?}")),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: u32, subbase: &[u64]) -> FiniteSpace {
        FiniteSpace::generated(n, subbase).unwrap()
    }

    #[test]
    fn topology_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| enumerate_topologies(n).unwrap().len()).collect();
        assert_eq!(counts, [1, 4, 29, 355]);
        assert!(enumerate_topologies(0).is_err());
        assert!(enumerate_topologies(6).is_err());
    }

    #[test]
    fn recount_agrees_up_to_four() {
        for n in 1..=4 {
            let r = recount(n).unwrap();
            assert!(r.agrees(), "{r:?}");
        }
    }

    #[test]
    fn two_point_topologies_are_the_expected_four() {
        let got: BTreeSet<Vec<u64>> = enumerate_topologies(2).unwrap().iter().map(|s| s.opens().to_vec()).collect();
        let want: BTreeSet<Vec<u64>> =
            [vec![0, 3], vec![0, 1, 2, 3], vec![0, 1, 3], vec![0, 2, 3]].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn algebras_of_standard_spaces() {
        let sierpinski = space(2, &[0b01]);
        assert_eq!(functional_algebra(&sierpinski), [0, 0b11]);
        let discrete = space(3, &[0b001, 0b010, 0b100]);
        assert_eq!(functional_algebra(&discrete), (0..8).collect::<Vec<_>>());
        let indiscrete = space(3, &[]);
        assert_eq!(functional_algebra(&indiscrete), [0, 0b111]);
        assert_eq!(three_valued_sets(&sierpinski), (vec![0, 3], vec![0, 3]));
    }

    #[test]
    fn sierpinski_closed_point_is_embedded_at_every_level() {
        let sp = space(2, &[0b01]);
        // Point 1 is closed; its subspace is a single point.
        let verdicts: Vec<bool> = (0..3).map(|a| is_embedded(&sp, 0b10, a)).collect();
        assert!(verdicts.iter().all(|v| *v == verdicts[0]));
        assert!(verdicts[0]);
    }

    #[test]
    fn a_disconnecting_subspace_is_not_embedded() {
        // Opens ∅, {0}, {2}, {0,2}, X: connected through 1, but {0,2} is discrete.
        let sp = space(3, &[0b001, 0b100]);
        assert_eq!(sp.components().len(), 1);
        assert!(!is_embedded(&sp, 0b101, 0));
        assert!(!is_embedded(&sp, 0b101, 2));
    }

    #[test]
    fn discrete_spaces_embed_everything() {
        let sp = space(3, &[0b001, 0b010, 0b100]);
        assert!(is_normal(&sp));
        for e in 1..8 {
            assert!((0..3).all(|a| is_embedded(&sp, e, a)));
        }
    }

    #[test]
    fn indiscrete_four_points_is_normal_and_embeds_closed_sets() {
        let sp = space(4, &[]);
        assert!(is_normal(&sp));
        assert!(is_embedded(&sp, sp.full_mask(), 0));
    }

    #[test]
    fn checks_pass_at_three_points() {
        for check in [Check::Norm, Check::Monotone, Check::Algebra] {
            let r = run_check(check, 3).unwrap();
            assert!(r.ok(), "{}", r.to_json());
            assert_eq!(r.topologies, 29);
        }
        assert_eq!(run_check(Check::Norm, 2).unwrap().passed, 4);
    }

    #[test]
    fn check_names_parse() {
        assert_eq!("monotone".parse::<Check>().unwrap(), Check::Monotone);
        assert!("normal".parse::<Check>().is_err());
    }
}
