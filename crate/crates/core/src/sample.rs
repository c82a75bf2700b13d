//! Seeded sample points and the deterministic witness pool.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::{int, rat, Rational, Surd};
use crate::point::{CantorPoint, Point};
use crate::space::{BaseSpace, TraceSubspace};

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub seed: u64,
    pub max_denominator: i64,
    /// Square-free radicands used for irrational samples.
    pub radicands: Vec<u64>,
    /// Window used for the real line.
    pub real_window: (i64, i64),
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { seed: 0, max_denominator: 1000, radicands: vec![2], real_window: (-4, 4) }
    }
}

pub struct Sampler {
    rng: ChaCha8Rng,
    cfg: SampleConfig,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler::with_config(SampleConfig { seed, ..SampleConfig::default() })
    }

    pub fn with_config(cfg: SampleConfig) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(cfg.seed), cfg }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A rational in `[lo, hi]` with a random denominator.
    pub fn rational_in(&mut self, lo: &Rational, hi: &Rational) -> Rational {
        let q = self.rng.gen_range(1..=self.cfg.max_denominator);
        let p = self.rng.gen_range(0..=q);
        lo + (hi - lo) * rat(p, q)
    }

    /// An irrational quadratic surd strictly inside `(lo, hi)`.
    pub fn surd_in(&mut self, lo: &Rational, hi: &Rational) -> Surd {
        let d = self.cfg.radicands[self.rng.gen_range(0..self.cfg.radicands.len())];
        let root_floor = int((d as f64).sqrt().floor() as i64);
        loop {
            let u = self.rational_in(lo, hi);
            let k = self.rng.gen_range(2..=self.cfg.max_denominator.max(2));
            let sign = if self.rng.gen_bool(0.5) { 1 } else { -1 };
            let b = rat(sign, k) * (hi - lo);
            // x = u + b(√d − ⌊√d⌋), within |b| of u.
            let x = Surd::new(&u - &b * &root_floor, b, d).expect("radicands are square-free");
            if x > Surd::from(lo.clone()) && x < Surd::from(hi.clone()) {
                return x;
            }
        }
    }

    /// Uniformly mixed rational and surd samples of a base space.
    pub fn point(&mut self, space: &BaseSpace) -> Point {
        match space {
            BaseSpace::UnitInterval => self.real_point(&int(0), &int(1)),
            BaseSpace::RealLine => {
                let (a, b) = self.cfg.real_window;
                self.real_point(&int(a), &int(b))
            }
            BaseSpace::Cantor => {
                let len = self.rng.gen_range(0..=40);
                let prefix: Vec<bool> = (0..len).map(|_| self.rng.gen_bool(0.5)).collect();
                Point::Cantor(CantorPoint::new(prefix, self.rng.gen_bool(0.5)))
            }
            BaseSpace::Finite(f) => Point::Finite(self.rng.gen_range(0..f.size())),
        }
    }

    fn real_point(&mut self, lo: &Rational, hi: &Rational) -> Point {
        if self.rng.gen_bool(0.5) {
            Point::rational(self.rational_in(lo, hi))
        } else {
            Point::Real(self.surd_in(lo, hi))
        }
    }

    pub fn points(&mut self, space: &BaseSpace, n: usize) -> Vec<Point> {
        (0..n).map(|_| self.point(space)).collect()
    }

    pub fn surds(&mut self, lo: &Rational, hi: &Rational, n: usize) -> Vec<Point> {
        (0..n).map(|_| Point::Real(self.surd_in(lo, hi))).collect()
    }

    /// `n` samples of the subspace `E` by rejection.
    pub fn subspace_points(&mut self, e: &TraceSubspace, n: usize) -> Result<Vec<Point>> {
        let mut out = Vec::with_capacity(n);
        let mut tries = 0usize;
        while out.len() < n {
            tries += 1;
            if tries > 200 * n.max(1) {
                return Err(Error::hypothesis(format!(
                    "subspace {} looks empty: no sample landed in it after {} tries",
                    e.carrier,
                    tries - 1
                )));
            }
            let x = self.point(&e.ambient);
            if crate::set::member(&x, &e.carrier)? {
                out.push(x);
            }
        }
        Ok(out)
    }
}

/// Deterministic points used to decide emptiness of pieces: a prefix of the
/// dense sequence plus one irrational point in each interval `(p/q, (p+1)/q)`.
pub fn witness_pool(space: &BaseSpace, size: usize) -> Vec<Point> {
    match space {
        BaseSpace::UnitInterval | BaseSpace::RealLine => {
            let half = size / 2;
            let mut out: Vec<Point> = (0..(size - half) as u64).map(|n| space.dense_point(n)).collect();
            let frac = Surd::new(int(-1), int(1), 2).expect("2 is square-free");
            let (shift, width) = match space {
                BaseSpace::RealLine => (-4i64, 8i64),
                _ => (0, 1),
            };
            let mut q = 1i64;
            'outer: loop {
                for p in 0..q {
                    if out.len() >= size {
                        break 'outer;
                    }
                    // (p + √2 − 1)/q rescaled into the window.
                    let x = frac.add(&Surd::from(int(p))).unwrap().scale(&rat(width, q)).add(&Surd::from(int(shift))).unwrap();
                    out.push(Point::Real(x));
                }
                q += 1;
            }
            out
        }
        BaseSpace::Cantor => {
            let mut out = Vec::with_capacity(size);
            let mut n = 0u64;
            while out.len() < size {
                let w = crate::space::shortlex_word(n);
                out.push(Point::Cantor(CantorPoint::new(w.clone(), false)));
                if out.len() < size {
                    out.push(Point::Cantor(CantorPoint::new(w, true)));
                }
                n += 1;
            }
            out
        }
        BaseSpace::Finite(f) => (0..f.size()).map(Point::Finite).collect(),
    }
}

/// Exact stable fingerprint of a point list, for determinism checks.
pub fn fingerprint(points: &[Point]) -> String {
    let mut h = BigInt::from(0);
    for p in points {
        for b in p.to_string().bytes() {
            h = (h * 131 + b) % BigInt::from(1_000_000_007u64);
        }
    }
    h.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::{Interval, SetExpr};

    #[test]
    fn samples_stay_in_range_and_surds_are_irrational() {
        let mut s = Sampler::new(7);
        for _ in 0..500 {
            let x = s.point(&BaseSpace::UnitInterval);
            assert!(BaseSpace::UnitInterval.contains(&x));
            let y = s.surd_in(&rat(1, 3), &rat(1, 2));
            assert!(!y.is_rational());
            assert!(y > Surd::from(rat(1, 3)) && y < Surd::from(rat(1, 2)));
        }
    }

    #[test]
    fn same_seed_same_points() {
        let a = Sampler::new(42).points(&BaseSpace::UnitInterval, 100);
        let b = Sampler::new(42).points(&BaseSpace::UnitInterval, 100);
        assert_eq!(a, b);
        assert_eq!(fingerprint(&a), fingerprint(&b));
        let c = Sampler::new(43).points(&BaseSpace::UnitInterval, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn irrational_subspace_sampling() {
        let e = TraceSubspace::new(
            BaseSpace::UnitInterval,
            SetExpr::complement(SetExpr::family(std::sync::Arc::new(crate::set::Rationals))),
        )
        .unwrap();
        let pts = Sampler::new(1).subspace_points(&e, 50).unwrap();
        assert!(pts.iter().all(|p| !p.as_real().unwrap().is_rational()));
        let empty = TraceSubspace::new(BaseSpace::UnitInterval, SetExpr::open_interval(Interval::open(rat(2, 1), rat(3, 1)))).unwrap();
        assert!(Sampler::new(1).subspace_points(&empty, 5).is_err());
    }

    #[test]
    fn witness_pool_meets_every_small_pi_base_interval() {
        let pool = witness_pool(&BaseSpace::UnitInterval, 400);
        for atom in BaseSpace::UnitInterval.pi_base(60) {
            let hit_rational = pool.iter().any(|x| x.as_real().unwrap().is_rational() && crate::set::member(x, &atom).unwrap());
            let hit_surd = pool.iter().any(|x| !x.as_real().unwrap().is_rational() && crate::set::member(x, &atom).unwrap());
            assert!(hit_rational && hit_surd, "{atom}");
        }
    }
}
