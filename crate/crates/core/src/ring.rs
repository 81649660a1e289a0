//! Truncated cyclotomic `p`-adic arithmetic and the semidirect product
//! `A ⋊ C_p` built on it.
//!
//! `A = Z_p[ξ]` with `ξ` a root of `x^{p-1} + … + x + 1` is free of rank
//! `p - 1` over `Z_p`; modulo `p^k` an element is a `(p-1)`-tuple of residues
//! in the power basis `1, ξ, …, ξ^{p-2}`. Multiplication by `ξ` is the
//! companion matrix of that polynomial.

use alloc::vec::Vec;

use num_rational::Ratio;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2
        && (2..)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

/// `Z[ξ] / p^k Z[ξ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclotomicRing {
    p: u64,
    k: u32,
    modulus: u64,
}

pub type RingElem = Vec<u64>;

impl CyclotomicRing {
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Precondition(alloc::format!("{p} is not prime")));
        }
        if k == 0 {
            return Err(Error::Precondition(
                "truncation exponent must be >= 1".into(),
            ));
        }
        let modulus = p.checked_pow(k).ok_or(Error::Overflow("p^k"))?;
        Ok(CyclotomicRing { p, k, modulus })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn exponent(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Additive rank `p - 1`.
    pub fn rank(&self) -> usize {
        (self.p - 1) as usize
    }

    pub fn zero(&self) -> RingElem {
        alloc::vec![0; self.rank()]
    }

    pub fn one(&self) -> RingElem {
        let mut x = self.zero();
        x[0] = 1 % self.modulus;
        x
    }

    pub fn add(&self, x: &[u64], y: &[u64]) -> RingElem {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a + b) % self.modulus)
            .collect()
    }

    pub fn neg(&self, x: &[u64]) -> RingElem {
        x.iter()
            .map(|a| (self.modulus - a) % self.modulus)
            .collect()
    }

    /// `n · x` for an integer `n ≥ 0`.
    pub fn scale(&self, n: u64, x: &[u64]) -> RingElem {
        let n = (n % self.modulus) as u128;
        x.iter()
            .map(|&a| ((a as u128 * n) % self.modulus as u128) as u64)
            .collect()
    }

    /// `ξ · x`: shift up and fold `ξ^{p-1} = -(1 + ξ + … + ξ^{p-2})`.
    pub fn mul_xi(&self, x: &[u64]) -> RingElem {
        let r = self.rank();
        let top = x[r - 1];
        let mut out = self.zero();
        for i in 0..r {
            let shifted = if i == 0 { 0 } else { x[i - 1] };
            out[i] = (shifted + self.modulus - top) % self.modulus;
        }
        out
    }

    /// `ξ^y · x`.
    pub fn mul_xi_pow(&self, y: u64, x: &[u64]) -> RingElem {
        let mut out = x.to_vec();
        for _ in 0..(y % self.p) {
            out = self.mul_xi(&out);
        }
        out
    }

    pub fn is_zero(&self, x: &[u64]) -> bool {
        x.iter().all(|&a| a == 0)
    }

    /// `Σ_{j<p} ξ^{yj} · x`.
    pub fn root_sum(&self, y: u64, x: &[u64]) -> RingElem {
        let mut acc = self.zero();
        let mut term = x.to_vec();
        for _ in 0..self.p {
            acc = self.add(&acc, &term);
            term = self.mul_xi_pow(y, &term);
        }
        acc
    }

    /// Checks `ξ^p = 1` and `Σ_j ξ^{yj} = 0` (for `y ≢ 0`) on the power basis.
    pub fn check_root_of_unity(&self) -> bool {
        let basis: Vec<RingElem> = (0..self.rank())
            .map(|i| {
                let mut e = self.zero();
                e[i] = 1 % self.modulus;
                e
            })
            .collect();
        basis.iter().all(|e| {
            self.mul_xi_pow(0, &self.mul_xi_pow(self.p - 1, &self.mul_xi(e))) == *e
                && (1..self.p).all(|y| self.is_zero(&self.root_sum(y, e)))
        })
    }
}

/// An element `(x, y)` of `A/p^k A ⋊ C_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemidirectElem {
    pub x: RingElem,
    pub y: u64,
}

/// The finite quotient `A/p^k A ⋊ C_p` with `C_p` acting through `ξ`.
#[derive(Clone, Debug)]
pub struct AbstractSemidirectQuotient {
    ring: CyclotomicRing,
}

impl AbstractSemidirectQuotient {
    /// Fails if the group would exceed `cap` elements.
    pub fn new(p: u64, k: u32, cap: u64) -> Result<Self> {
        let ring = CyclotomicRing::new(p, k)?;
        let q = AbstractSemidirectQuotient { ring };
        let order = q.order();
        if order > cap as u128 {
            return Err(Error::Capacity {
                reached: order,
                cap,
            });
        }
        Ok(q)
    }

    pub fn ring(&self) -> &CyclotomicRing {
        &self.ring
    }

    pub fn prime(&self) -> u64 {
        self.ring.p
    }

    /// `p^{k(p-1)} · p`, saturating.
    pub fn order(&self) -> u128 {
        let p = self.ring.p as u128;
        let exp = self.ring.k * (self.ring.p as u32 - 1) + 1;
        p.checked_pow(exp).unwrap_or(u128::MAX)
    }

    pub fn identity(&self) -> SemidirectElem {
        SemidirectElem {
            x: self.ring.zero(),
            y: 0,
        }
    }

    pub fn is_identity(&self, g: &SemidirectElem) -> bool {
        g.y == 0 && self.ring.is_zero(&g.x)
    }

    /// `(x, y) · (z, w) = (x + ξ^y z, y + w)`.
    pub fn mul(&self, a: &SemidirectElem, b: &SemidirectElem) -> SemidirectElem {
        SemidirectElem {
            x: self.ring.add(&a.x, &self.ring.mul_xi_pow(a.y, &b.x)),
            y: (a.y + b.y) % self.ring.p,
        }
    }

    /// `g^n` by repeated multiplication.
    pub fn pow(&self, g: &SemidirectElem, n: u64) -> SemidirectElem {
        let mut acc = self.identity();
        for _ in 0..n {
            acc = self.mul(&acc, g);
        }
        acc
    }

    /// `(x + ξ^y x + … + ξ^{y(n-1)} x, n y)`.
    pub fn pow_closed_form(&self, g: &SemidirectElem, n: u64) -> SemidirectElem {
        let mut x = self.ring.zero();
        let mut term = g.x.clone();
        for _ in 0..n {
            x = self.ring.add(&x, &term);
            term = self.ring.mul_xi_pow(g.y, &term);
        }
        SemidirectElem {
            x,
            y: (n % self.ring.p) * g.y % self.ring.p,
        }
    }

    pub fn element_order(&self, g: &SemidirectElem) -> u64 {
        let mut acc = g.clone();
        let mut n = 1;
        while !self.is_identity(&acc) {
            acc = self.mul(&acc, g);
            n += 1;
        }
        n
    }

    /// Every element, in lexicographic order of `(y, x)`.
    pub fn elements(&self) -> impl Iterator<Item = SemidirectElem> + '_ {
        let m = self.ring.modulus;
        let rank = self.ring.rank();
        let per_y = m.pow(rank as u32);
        (0..self.ring.p).flat_map(move |y| {
            (0..per_y).map(move |mut idx| {
                let mut x = alloc::vec![0u64; rank];
                for slot in x.iter_mut().rev() {
                    *slot = idx % m;
                    idx /= m;
                }
                SemidirectElem { x, y }
            })
        })
    }

    /// Fraction of elements with `g^p = 1`, by enumeration.
    pub fn torsion_fraction(&self) -> Ratio<u128> {
        let p = self.ring.p;
        let hits = self
            .elements()
            .filter(|g| self.is_identity(&self.pow(g, p)))
            .count();
        Ratio::new(hits as u128, self.order())
    }

    /// Fraction of elements of order at most `cap`, by enumeration.
    pub fn capped_fraction(&self, cap: u64) -> (u64, Ratio<u128>) {
        let hits = self
            .elements()
            .filter(|g| self.element_order(g) <= cap)
            .count() as u64;
        (hits, Ratio::new(hits as u128, self.order()))
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> SemidirectElem {
        SemidirectElem {
            x: (0..self.ring.rank())
                .map(|_| rng.gen_range(0..self.ring.modulus))
                .collect(),
            y: rng.gen_range(0..self.ring.p),
        }
    }

    /// Checks the closed form for `g^n` on random `g` and `1 ≤ n ≤ p²`.
    pub fn verify_power_identity(&self, trials: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.ring.p;
        (0..trials).all(|_| {
            let g = self.random_element(&mut rng);
            let n = rng.gen_range(1..=p * p);
            self.pow(&g, n) == self.pow_closed_form(&g, n)
        })
    }
}
