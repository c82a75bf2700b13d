//! Stage recursion extending a function into a complete separable metric
//! target: step approximations on `E` are extended stage by stage to nested
//! ambient partitions, and the extension is their uniform limit.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde_json::{json, Value};

use super::{e_witnesses, extend_partition, EmbeddingContext};
use crate::class::ClassTag;
use crate::construct::additive_decomposition;
use crate::error::{Error, Result};
use crate::func::{approximate, evaluate, function_class, FuncExpr, FuncKind, PartitionCode, Target, TableRule};
use crate::num::{fmt_rational, rat, Rational, Surd};
use crate::point::Point;
use crate::set::{MemberCx, SetExpr};

/// One node of stage `n`: a chain `(i_1, …, i_n)` of approximation pieces
/// whose trace `B` on `E` is nonempty, and its ambient piece `C`.
#[derive(Clone, Debug)]
struct Node {
    chain: Vec<usize>,
    /// Ambient code whose trace is `B`.
    rel: SetExpr,
    c: SetExpr,
    value: Point,
}

#[derive(Clone, Debug)]
pub struct StageCheck {
    pub stage: usize,
    pub mesh: Rational,
    pub chains: usize,
    /// Points checked for (A), (B) and (D).
    pub points: usize,
    pub trace: bool,
    pub partition: bool,
    pub empty: bool,
    pub nested: bool,
}

#[derive(Clone, Debug)]
pub struct SampleRow {
    pub x: Point,
    pub f: Point,
    pub g: Point,
    pub deviation: Surd,
}

#[derive(Clone, Debug)]
pub struct ExtensionCertificate {
    pub input_digest: String,
    pub output_digest: String,
    pub stages: usize,
    pub tolerance: Rational,
    /// Stage `n` approximates `f` within `1/(scale·2^n)`.
    pub scale: u64,
    pub modulus: Rational,
    pub class_bound: u32,
    pub exact_emptiness: bool,
    pub checks: Vec<StageCheck>,
    pub samples: Vec<SampleRow>,
    pub max_deviation: Surd,
    /// Largest observed `d(g_m, g_n) / (3/(scale·2^m))` over sampled points.
    pub cauchy_ratio: f64,
}

impl ExtensionCertificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.trace && c.partition && c.empty && c.nested)
            && self.max_deviation <= Surd::from(self.tolerance.clone())
            && self.cauchy_ratio <= 1.0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "input_digest": self.input_digest,
            "output_digest": self.output_digest,
            "stages": self.stages,
            "tolerance": fmt_rational(&self.tolerance),
            "scale": self.scale,
            "modulus": fmt_rational(&self.modulus),
            "class_bound": self.class_bound,
            "exact_emptiness": self.exact_emptiness,
            "checks": self.checks.iter().map(|c| json!({
                "stage": c.stage,
                "mesh": fmt_rational(&c.mesh),
                "chains": c.chains,
                "points": c.points,
                "A": c.trace, "B": c.partition, "C": c.empty, "D": c.nested,
            })).collect::<Vec<_>>(),
            "samples": self.samples.iter().map(|r| json!({
                "x": r.x.to_string(), "f": r.f.to_string(), "g": r.g.to_string(), "deviation": r.deviation.to_string(),
            })).collect::<Vec<_>>(),
            "max_deviation": self.max_deviation.to_string(),
            "cauchy_ratio": self.cauchy_ratio,
            "passed": self.passed(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Extension {
    pub g: FuncExpr,
    pub certificate: ExtensionCertificate,
}

/// Extends `f`, read on `E`, to the ambient space. Stage `n` approximates
/// `f` within `r_n = 1/(s·2^n)`; consecutive stage values along a chain are
/// then within `r_n + r_{n+1}`, so `d(g_m, g) ≤ 3/(s·2^m) ≤ (3/(2s))/m`.
/// The scale `s` is the least making stage `N` reach the tolerance.
pub fn extend_polish(ctx: &EmbeddingContext, f: &FuncExpr, target: &Target, stages: usize, tol: &Rational) -> Result<Extension> {
    if stages == 0 || !tol.is_positive() {
        return Err(Error::Domain("need at least one stage and a positive tolerance".into()));
    }
    let class = function_class(f);
    if class > ctx.alpha {
        return Err(Error::hypothesis(format!("{f} has class {class} above {}", ctx.alpha)));
    }
    let core = relative_core(ctx, f);
    let scale = (rat(3, 2) / (tol * Rational::from_integer(stages.into()))).ceil().to_integer();
    let scale: u64 = scale.try_into().map_err(|_| Error::Domain("tolerance too small".into()))?;
    let modulus = rat(3, 2) / Rational::from_integer(scale.into());
    let meshes: Vec<usize> = (1..=stages).map(|n| scale as usize * (1usize << n)).collect();
    let approx = meshes.iter().map(|&m| approximate(&core, m, target)).collect::<Result<Vec<_>>>()?;
    let parts: Vec<(&PartitionCode, &Vec<Point>)> = approx
        .iter()
        .map(|a| match a.kind() {
            FuncKind::Step { partition, values } => (partition, values),
            _ => unreachable!("approximations are step codes"),
        })
        .collect();

    let mut codes: Vec<SetExpr> = parts.iter().flat_map(|(p, _)| p.pieces.iter().cloned()).collect();
    codes.push(ctx.carrier().clone());
    let witnesses = e_witnesses(ctx, &codes)?;
    let chains = witness_chains(&parts, &witnesses.points)?;

    let mut levels: Vec<Vec<Node>> = Vec::with_capacity(stages);
    for n in 0..stages {
        let prefixes: BTreeSet<Vec<usize>> = chains.iter().map(|c| c[..=n].to_vec()).collect();
        let mut nodes: Vec<Node> = prefixes
            .into_iter()
            .map(|chain| {
                let j = chain[n];
                let piece = parts[n].0.pieces[j].clone();
                let rel = match n {
                    0 => piece,
                    _ => {
                        let parent = levels[n - 1].iter().find(|p| p.chain[..] == chain[..n]).expect("prefix exists");
                        SetExpr::intersection_of(vec![parent.rel.clone(), piece])
                    }
                };
                Node { chain, rel, c: SetExpr::empty(), value: parts[n].1[j].clone() }
            })
            .collect();
        let rels: Vec<SetExpr> = nodes.iter().map(|x| x.rel.clone()).collect();
        let d = extend_partition(ctx, &rels)?.pieces;
        if n == 0 {
            for (node, c) in nodes.iter_mut().zip(d) {
                node.c = c;
            }
        } else {
            refine_children(ctx, &levels[n - 1], &mut nodes, &d)?;
        }
        levels.push(nodes);
    }

    let steps = levels
        .iter()
        .map(|nodes| {
            FuncExpr::step_on(
                PartitionCode::certified(nodes.iter().map(|x| x.c.clone()).collect()),
                nodes.iter().map(|x| x.value.clone()).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let g = FuncExpr::limit(Arc::new(TableRule(steps.clone())), modulus.clone(), stages)?;
    let class_bound = function_class(&g);
    if class_bound > ctx.alpha.max(1) {
        return Err(Error::Construction { check: format!("class {class_bound}"), multi_index: vec![], witness: None });
    }

    let checks = check_stages(ctx, &levels, &meshes, &parts, &chains)?;
    let (samples, max_deviation) = sample_table(ctx, f, &g, tol)?;
    let cauchy_ratio = cauchy(ctx, &steps, scale)?;
    let certificate = ExtensionCertificate {
        input_digest: digest(&f.to_json().to_string()),
        output_digest: digest(&levels_text(&levels)),
        stages,
        tolerance: tol.clone(),
        scale,
        modulus,
        class_bound,
        exact_emptiness: witnesses.exact,
        checks,
        samples,
        max_deviation,
        cauchy_ratio,
    };
    Ok(Extension { g, certificate })
}

/// A function given as a restriction to `E` is read through its ambient
/// formula: relative preimages are traces of the formula's preimages.
pub(super) fn relative_core(ctx: &EmbeddingContext, f: &FuncExpr) -> FuncExpr {
    match f.kind() {
        FuncKind::Restriction(c, e) if e.carrier.id() == ctx.carrier().id() => c.clone(),
        _ => f.clone(),
    }
}

/// The chain of approximation pieces through each witness of `E`.
fn witness_chains(parts: &[(&PartitionCode, &Vec<Point>)], points: &[Point]) -> Result<BTreeSet<Vec<usize>>> {
    let mut out = BTreeSet::new();
    for x in points {
        let mut cx = MemberCx::new(x);
        let mut chain = Vec::with_capacity(parts.len());
        for (n, (p, _)) in parts.iter().enumerate() {
            let mut hit = None;
            for (j, piece) in p.pieces.iter().enumerate() {
                if cx.member(piece)? {
                    hit = Some(j);
                    break;
                }
            }
            match hit {
                Some(j) => chain.push(j),
                None => {
                    return Err(Error::Coverage {
                        what: format!("stage {} approximation misses a point of E", n + 1),
                        witness: Some(x.clone()),
                    })
                }
            }
        }
        out.insert(chain);
    }
    Ok(out)
}

/// Splits each parent `C` among its children:
/// `M_k = (A_k ∪ D_k) ∩ C`, `C_k = M_k ∖ ⋃_{j<k} M_j`, where `(A_k)` are
/// disjoint ambiguous pieces of `C ∖ E`; the last child takes the rest of `C`.
fn refine_children(ctx: &EmbeddingContext, parents: &[Node], nodes: &mut [Node], d: &[SetExpr]) -> Result<()> {
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        groups.entry(node.chain[..node.chain.len() - 1].to_vec()).or_default().push(i);
    }
    let amb = ClassTag::ambiguous(ctx.alpha);
    for parent in parents {
        let kids = groups.get(&parent.chain).ok_or_else(|| Error::Construction {
            check: "D".into(),
            multi_index: parent.chain.clone(),
            witness: None,
        })?;
        let outside = SetExpr::minus(&parent.c, ctx.carrier());
        let a = if outside.is_empty_code() {
            None
        } else {
            Some(additive_decomposition(&outside, ctx.alpha)?.disjointify(amb))
        };
        let mut earlier = SetExpr::empty();
        for (k, &i) in kids.iter().enumerate() {
            if k + 1 == kids.len() {
                nodes[i].c = SetExpr::minus(&parent.c, &earlier);
                break;
            }
            let ak = match &a {
                Some(a) if a.len().is_none_or(|len| k < len) => a.piece(k)?,
                _ => SetExpr::empty(),
            };
            let m = SetExpr::intersection_of(vec![SetExpr::union_of(vec![ak, d[i].clone()]), parent.c.clone()]);
            nodes[i].c = SetExpr::minus(&m, &earlier);
            earlier = SetExpr::union_of(vec![earlier, m]);
        }
    }
    Ok(())
}

fn check_stages(
    ctx: &EmbeddingContext,
    levels: &[Vec<Node>],
    meshes: &[usize],
    parts: &[(&PartitionCode, &Vec<Point>)],
    chains: &BTreeSet<Vec<usize>>,
) -> Result<Vec<StageCheck>> {
    let points = ctx.check_points();
    let out: Vec<StageCheck> = levels
        .iter()
        .zip(meshes)
        .enumerate()
        .map(|(n, (nodes, &m))| StageCheck {
            stage: n + 1,
            mesh: rat(1, m as i64),
            chains: nodes.len(),
            points: points.len(),
            trace: true,
            partition: true,
            empty: true,
            nested: true,
        })
        .collect();
    let fail = |check: &str, chain: &[usize], x: &Point| Error::Construction {
        check: check.into(),
        multi_index: chain.to_vec(),
        witness: Some(x.clone()),
    };
    for x in &points {
        let mut cx = MemberCx::new(x);
        let in_e = cx.member(ctx.carrier())?;
        let mut prev: Option<&Node> = None;
        for nodes in levels {
            let mut hit: Option<&Node> = None;
            for node in nodes {
                let in_c = cx.member(&node.c)?;
                if in_e && in_c != cx.member(&node.rel)? {
                    return Err(fail("A", &node.chain, x));
                }
                if in_c {
                    if hit.is_some() {
                        return Err(fail("B", &node.chain, x));
                    }
                    hit = Some(node);
                }
            }
            let node = hit.ok_or_else(|| fail("B", &[], x))?;
            if let Some(p) = prev {
                if node.chain[..p.chain.len()] != p.chain[..] {
                    return Err(fail("D", &node.chain, x));
                }
            }
            prev = Some(node);
        }
        // A sampled point of E whose chain was pruned would mean a nonempty
        // trace was given an empty piece.
        if in_e {
            let own = witness_chains(parts, std::slice::from_ref(x))?;
            if !own.is_subset(chains) {
                return Err(fail("C", own.first().map(Vec::as_slice).unwrap_or_default(), x));
            }
        }
    }
    Ok(out)
}

fn sample_table(ctx: &EmbeddingContext, f: &FuncExpr, g: &FuncExpr, tol: &Rational) -> Result<(Vec<SampleRow>, Surd)> {
    let mut rows = Vec::with_capacity(ctx.e_samples.len());
    let mut worst = Surd::zero();
    let fine = tol / Rational::from_integer(BigInt::from(1000));
    for x in &ctx.e_samples {
        let (fy, ferr) = evaluate(f, x, &fine)?;
        let (gy, _) = evaluate(g, x, tol)?;
        let raw = gy.distance(&fy)?.sub(&Surd::from(ferr))?;
        let dev = if raw.signum() == std::cmp::Ordering::Less { Surd::zero() } else { raw };
        if dev > worst {
            worst = dev.clone();
        }
        rows.push(SampleRow { x: x.clone(), f: fy, g: gy, deviation: dev });
    }
    Ok((rows, worst))
}

fn cauchy(ctx: &EmbeddingContext, steps: &[FuncExpr], scale: u64) -> Result<f64> {
    let mut worst = 0f64;
    for x in ctx.samples.iter().chain(&ctx.e_samples) {
        let ys = steps.iter().map(|s| evaluate(s, x, &Rational::one()).map(|(y, _)| y)).collect::<Result<Vec<_>>>()?;
        for m in 0..ys.len() {
            let bound = 3.0 / (scale as f64 * f64::from(1u32 << (m + 1)));
            for y in &ys[m + 1..] {
                let d = ys[m].distance(y)?.to_f64();
                worst = worst.max(d / bound);
            }
        }
    }
    Ok(worst)
}

fn levels_text(levels: &[Vec<Node>]) -> String {
    let mut s = String::new();
    for (n, nodes) in levels.iter().enumerate() {
        for node in nodes {
            s.push_str(&format!("{n}:{:?}={};", node.chain, node.value));
        }
    }
    s
}

/// FNV-1a over the text, in hex.
pub(crate) fn digest(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
