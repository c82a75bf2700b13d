//! Constructions on set codes: disjointification, cover refinement,
//! ambiguous insertion, zero-set and separating functions, trace
//! extension and first-category splitting.

mod decompose;
mod separate;
mod split;

use std::sync::Arc;

use serde_json::{json, Value};

use crate::class::ClassTag;
use crate::error::{Error, Result};
use crate::func::PartitionCode;
use crate::point::Point;
use crate::set::{classify, fresh_id, member, Decomposition, Family, FamilyMode, MemberCx, SetExpr};
use crate::space::{pair, unpair};

pub use decompose::{additive_decomposition, complement_decomposition, Meet};
pub use separate::{
    insert_ambiguous, insert_next_class, multiplicative_pieces, separating_function, zero_set_function,
    SeparationWitness,
};
pub use split::{multiplicative_trace_extend, split_first_category, Split};

/// `A_1 = B_1`, `A_n = B_n ∖ ⋃_{k<n} B_k` for inputs ambiguous of class `α`.
pub fn disjointify(parts: &[SetExpr], alpha: u32) -> Result<Vec<SetExpr>> {
    for p in parts {
        let tag = classify(p)?;
        if !tag.le(ClassTag::ambiguous(alpha)) {
            return Err(Error::hypothesis(format!("{p} has class {} and is not ambiguous of class {alpha}", tag.symbol())));
        }
    }
    Ok(Decomposition::Finite(parts.to_vec()).disjointify(ClassTag::ambiguous(alpha)).into_finite())
}

impl Decomposition {
    fn into_finite(self) -> Vec<SetExpr> {
        match self {
            Decomposition::Finite(ps) => ps,
            Decomposition::Family(_) => unreachable!("finite input"),
        }
    }
}

/// Refines a cover `(A_i)` by additive sets of class `α` into a partition
/// `(B_i)` by ambiguous sets with `B_i ⊆ A_i`. Each `A_i = ⋃_j F_{i,j}`;
/// `C_{i,j} = F_{i,j} ∖ ⋃_{⟨p,s⟩<⟨i,j⟩} F_{p,s}` and `B_i = ⋃_j C_{i,j}`.
///
/// The cover hypothesis is not checked here; see [`check_cover`]. Points
/// outside every `A_i` land in no piece.
pub fn refine_cover(parts: &[SetExpr], alpha: u32) -> Result<PartitionCode> {
    let decomps = parts.iter().map(|p| additive_decomposition(p, alpha)).collect::<Result<Vec<_>>>()?;
    if decomps.iter().all(|d| matches!(d, Decomposition::Finite(_))) {
        let mut cells: Vec<(u64, usize, SetExpr)> = Vec::new();
        for (i, d) in decomps.iter().enumerate() {
            if let Decomposition::Finite(ps) = d {
                for (j, p) in ps.iter().enumerate() {
                    cells.push((pair(i as u64, j as u64), i, p.clone()));
                }
            }
        }
        cells.sort_by_key(|c| c.0);
        let mut pieces: Vec<Vec<SetExpr>> = vec![Vec::new(); parts.len()];
        // Earlier cells as a left-nested union chain, so membership of all
        // pieces at one point costs linear time through the shared nodes.
        let mut earlier = SetExpr::empty();
        for (_, i, f) in cells {
            pieces[i].push(SetExpr::minus(&f, &earlier));
            earlier = SetExpr::union_of(vec![earlier, f]);
        }
        let pieces = pieces.into_iter().map(SetExpr::union_of).collect();
        return Ok(PartitionCode { pieces, certified_disjoint: true, certified_cover: false });
    }
    let core = Arc::new(RefineCore { decomps, key: fresh_id(), alpha });
    let pieces = (0..parts.len()).map(|i| SetExpr::family(Arc::new(RefinedPiece { core: core.clone(), i }))).collect();
    Ok(PartitionCode { pieces, certified_disjoint: true, certified_cover: false })
}

/// Samples-level check that `parts` cover the given points.
pub fn check_cover(parts: &[SetExpr], points: &[Point]) -> Result<()> {
    for x in points {
        let mut cx = MemberCx::new(x);
        let mut hit = false;
        for p in parts {
            if cx.member(p)? {
                hit = true;
                break;
            }
        }
        if !hit {
            return Err(Error::hypothesis_at("the sets do not cover the space", x));
        }
    }
    Ok(())
}

/// Samples-level check that two sets are disjoint.
pub fn check_disjoint(a: &SetExpr, b: &SetExpr, points: &[Point]) -> Result<()> {
    for x in points {
        if member(x, a)? && member(x, b)? {
            return Err(Error::Disjointness { what: format!("{a} and {b} share a point"), witness: Some(x.clone()) });
        }
    }
    Ok(())
}

struct RefineCore {
    decomps: Vec<Decomposition>,
    key: u64,
    alpha: u32,
}

impl RefineCore {
    /// The cell `(i, j)` of least pairing code containing the point. Pairing
    /// codes are compared in `u128`: near a boundary `j` can be huge. The
    /// cached index stores `j·L + i` for `L` decompositions.
    fn winner(&self, cx: &mut MemberCx<'_>) -> Result<Option<(usize, usize)>> {
        let l = self.decomps.len() as u64;
        let code = cx.cached_index(self.key, |cx| {
            let mut best: Option<(u128, u64)> = None;
            for (i, d) in self.decomps.iter().enumerate() {
                if let Some(j) = d.first_index(cx)? {
                    let (i, j) = (i as u64, j as u64);
                    let key = pair_wide(i, j);
                    if best.is_none_or(|(b, _)| key < b) {
                        let code = j.checked_mul(l).and_then(|c| c.checked_add(i)).ok_or_else(|| {
                            Error::Precision(format!("cell index {j} of cover member {i} overflows"))
                        })?;
                        best = Some((key, code));
                    }
                }
            }
            Ok(best.map(|(_, code)| code))
        })?;
        Ok(code.map(|c| ((c % l) as usize, (c / l) as usize)))
    }
}

fn pair_wide(i: u64, j: u64) -> u128 {
    let (i, j) = (i as u128, j as u128);
    (i + j) * (i + j + 1) / 2 + j
}

/// The piece `B_i = ⋃_j C_{i,j}` of a refined cover.
struct RefinedPiece {
    core: Arc<RefineCore>,
    i: usize,
}

impl Family for RefinedPiece {
    fn id(&self) -> &'static str {
        "refined"
    }

    fn mode(&self) -> FamilyMode {
        FamilyMode::Union
    }

    fn declared_class(&self) -> ClassTag {
        ClassTag::ambiguous(self.core.alpha)
    }

    fn member_class(&self) -> ClassTag {
        ClassTag::ambiguous(self.core.alpha)
    }

    fn member(&self, m: usize) -> Result<SetExpr> {
        let k = pair(self.i as u64, m as u64);
        let mut earlier = Vec::new();
        for code in 0..k {
            let (p, s) = unpair(code);
            if let Some(d) = self.core.decomps.get(p as usize) {
                earlier.push(d.piece(s as usize)?);
            }
        }
        let f = self.core.decomps[self.i].piece(m)?;
        Ok(SetExpr::minus(&f, &SetExpr::union_of(earlier)))
    }

    fn len(&self) -> Option<usize> {
        self.core.decomps[self.i].len()
    }

    fn first_index(&self, cx: &mut MemberCx<'_>) -> Result<Option<usize>> {
        Ok(match self.core.winner(cx)? {
            Some((i, j)) if i == self.i => Some(j),
            _ => None,
        })
    }

    fn params(&self) -> Value {
        json!({ "index": self.i, "alpha": self.core.alpha })
    }

    fn text(&self) -> String {
        format!("refined({}, {:?})", self.i, self.core.decomps[self.i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::sample::Sampler;
    use crate::set::{Interval, Rationals};
    use crate::space::BaseSpace;

    fn closed(a: (i64, i64), b: (i64, i64)) -> SetExpr {
        SetExpr::closed_interval(Interval::closed(rat(a.0, a.1), rat(b.0, b.1)))
    }

    fn q(n: i64, d: i64) -> Point {
        Point::rational(rat(n, d))
    }

    fn assert_partition(parts: &[SetExpr], pieces: &[SetExpr], samples: &[Point]) {
        for x in samples {
            let inside: Vec<usize> = (0..pieces.len()).filter(|&i| member(x, &pieces[i]).unwrap()).collect();
            let covered = parts.iter().any(|p| member(x, p).unwrap());
            assert_eq!(inside.len(), usize::from(covered), "{x}: {inside:?}");
            for &i in &inside {
                assert!(member(x, &parts[i]).unwrap(), "{x} in piece {i} but not in part {i}");
            }
        }
    }

    #[test]
    fn disjointify_closed_intervals() {
        let parts = [closed((0, 1), (1, 2)), closed((1, 4), (1, 1))];
        let out = disjointify(&parts, 1).unwrap();
        assert!(member(&q(1, 2), &out[0]).unwrap());
        assert!(!member(&q(1, 2), &out[1]).unwrap());
        assert!(member(&q(3, 4), &out[1]).unwrap());
        for p in &out {
            assert!(classify(p).unwrap().le(ClassTag::ambiguous(1)));
        }
        let single = disjointify(&parts[..1], 1).unwrap();
        assert_eq!(single[0].id(), parts[0].id());
        let with_empty = disjointify(&[SetExpr::empty(), parts[1].clone()], 1).unwrap();
        assert!(with_empty[0].is_empty_code());
        assert_eq!(with_empty[1].id(), parts[1].id());
    }

    #[test]
    fn disjointify_rejects_additive_inputs_at_their_level() {
        let open = SetExpr::open_interval(Interval::open(rat(0, 1), rat(1, 2)));
        assert!(matches!(disjointify(&[open], 0), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn refine_overlapping_open_cover() {
        let a1 = SetExpr::open_interval(Interval::new(
            crate::set::Endpoint::Closed(rat(0, 1).into()),
            crate::set::Endpoint::Open(rat(2, 3).into()),
        ));
        let a2 = SetExpr::open_interval(Interval::new(
            crate::set::Endpoint::Open(rat(1, 3).into()),
            crate::set::Endpoint::Closed(rat(1, 1).into()),
        ));
        let parts = [a1, a2];
        let out = refine_cover(&parts, 1).unwrap();
        assert!(member(&q(2, 3), &out.pieces[1]).unwrap());
        assert!(member(&q(1, 2), &out.pieces[0]).unwrap());
        let samples = Sampler::new(9).points(&BaseSpace::UnitInterval, 500);
        assert_partition(&parts, &out.pieces, &samples);
    }

    #[test]
    fn refine_with_infinite_decompositions() {
        let rationals = SetExpr::family(Arc::new(Rationals));
        let parts = [rationals, SetExpr::open_interval(Interval::open(rat(0, 1), rat(1, 2))), SetExpr::full()];
        let out = refine_cover(&parts, 1).unwrap();
        for p in &out.pieces {
            assert!(classify(p).unwrap().le(ClassTag::ambiguous(1)));
        }
        let samples = Sampler::new(2).points(&BaseSpace::UnitInterval, 400);
        assert_partition(&parts, &out.pieces, &samples);
        check_cover(&parts, &samples).unwrap();
    }

    #[test]
    fn whole_space_first_takes_everything() {
        let parts = [SetExpr::full(), closed((0, 1), (1, 2))];
        let out = refine_cover(&parts, 1).unwrap();
        assert!(out.pieces[0].is_full_code());
        assert!(out.pieces[1].is_empty_code());
    }

    #[test]
    fn cover_gap_reports_witness() {
        let parts = [closed((0, 1), (1, 3)), closed((1, 2), (1, 1))];
        let err = check_cover(&parts, &[q(0, 1), q(2, 5)]).unwrap_err();
        assert!(matches!(err, Error::Hypothesis { witness: Some(ref w), .. } if *w == q(2, 5)));
    }
}
