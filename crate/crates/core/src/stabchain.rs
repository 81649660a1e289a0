//! Base and strong generating set for a permutation group, built with the
//! deterministic Schreier–Sims algorithm.
//!
//! Base points are chosen as the least point moved by the first generator
//! that needs a new level, which on a leaf action follows the canonical leaf
//! order. The chain supports exact order, membership by sifting, and exactly
//! uniform sampling by choosing one coset representative per level.

use alloc::vec::Vec;

use rand::Rng;

use crate::perm::Perm;

struct Level {
    base: usize,
    /// Strong generators fixing all earlier base points.
    gens: Vec<Perm>,
    /// `transversal[β]` maps the base point to `β`.
    transversal: Vec<Option<Perm>>,
    orbit: Vec<usize>,
}

impl Level {
    fn new(base: usize, degree: usize) -> Level {
        let mut transversal = alloc::vec![None; degree];
        transversal[base] = Some(Perm::identity(degree));
        Level {
            base,
            gens: Vec::new(),
            transversal,
            orbit: alloc::vec![base],
        }
    }

    /// Recomputes the orbit of the base point and its transversal.
    fn rebuild_orbit(&mut self) {
        let degree = self.transversal.len();
        self.transversal.iter_mut().for_each(|t| *t = None);
        self.transversal[self.base] = Some(Perm::identity(degree));
        self.orbit.clear();
        self.orbit.push(self.base);
        let mut i = 0;
        while i < self.orbit.len() {
            let beta = self.orbit[i];
            let u = self.transversal[beta].clone().unwrap();
            for s in &self.gens {
                let gamma = s.apply(beta);
                if self.transversal[gamma].is_none() {
                    self.transversal[gamma] = Some(s.compose(&u));
                    self.orbit.push(gamma);
                }
            }
            i += 1;
        }
    }
}

pub struct StabChain {
    degree: usize,
    levels: Vec<Level>,
}

impl StabChain {
    /// Builds the chain for the group generated by `generators`, all of
    /// degree `degree`.
    pub fn new(degree: usize, generators: &[Perm]) -> StabChain {
        let mut chain = StabChain {
            degree,
            levels: Vec::new(),
        };
        for g in generators {
            assert_eq!(g.degree(), degree, "generator degree mismatch");
            if let Some((residue, j)) = chain.sift_from(g, 0) {
                chain.add_strong_generator(residue, j);
            }
        }
        chain.complete();
        chain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base).collect()
    }

    pub fn orbit_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    /// Group order, saturating at `u128::MAX`.
    pub fn order(&self) -> u128 {
        self.levels
            .iter()
            .try_fold(1u128, |acc, l| acc.checked_mul(l.orbit.len() as u128))
            .unwrap_or(u128::MAX)
    }

    pub fn contains(&self, g: &Perm) -> bool {
        g.degree() == self.degree && self.sift_from(g, 0).is_none()
    }

    /// A uniformly distributed element: `u_1 u_2 ⋯ u_m` with each `u_i` a
    /// uniformly chosen coset representative of level `i`.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Perm {
        let mut g = Perm::identity(self.degree);
        for level in &self.levels {
            let beta = level.orbit[rng.gen_range(0..level.orbit.len())];
            let u = level.transversal[beta].as_ref().unwrap();
            g = g.compose(u);
        }
        g
    }

    /// Sifts `g` through levels `start..`. Returns `None` when it reduces to
    /// the identity, else the residue and the level at which it got stuck.
    fn sift_from(&self, g: &Perm, start: usize) -> Option<(Perm, usize)> {
        let mut h = g.clone();
        for (i, level) in self.levels.iter().enumerate().skip(start) {
            let beta = h.apply(level.base);
            match &level.transversal[beta] {
                Some(u) => h = u.inverse().compose(&h),
                None => return Some((h, i)),
            }
        }
        if h.is_identity() {
            None
        } else {
            Some((h, self.levels.len()))
        }
    }

    /// Adds `h` (which fixes the base points of levels `< j`) as a strong
    /// generator at every level up to and including `j`.
    fn add_strong_generator(&mut self, h: Perm, j: usize) {
        if j == self.levels.len() {
            let moved = (0..self.degree)
                .find(|&x| h.apply(x) != x)
                .expect("residue is not the identity");
            self.levels.push(Level::new(moved, self.degree));
        }
        for level in &mut self.levels[..=j] {
            level.gens.push(h.clone());
        }
        for level in &mut self.levels[..=j] {
            level.rebuild_orbit();
        }
    }

    /// Runs until every Schreier generator of every level sifts through the
    /// levels below it.
    fn complete(&mut self) {
        let mut i = self.levels.len();
        while i > 0 {
            let level_idx = i - 1;
            match self.find_failing_schreier(level_idx) {
                Some((residue, j)) => {
                    self.add_strong_generator(residue, j);
                    // Levels level_idx+1..=j changed; recheck from the lowest
                    // changed level upward.
                    i = j + 1;
                }
                None => i -= 1,
            }
        }
    }

    fn find_failing_schreier(&self, i: usize) -> Option<(Perm, usize)> {
        let level = &self.levels[i];
        for &beta in &level.orbit {
            let u = level.transversal[beta].as_ref().unwrap();
            for s in &level.gens {
                let gamma = s.apply(beta);
                let u_gamma = level.transversal[gamma].as_ref().unwrap();
                let schreier = u_gamma.inverse().compose(&s.compose(u));
                if schreier.is_identity() {
                    continue;
                }
                if let Some(found) = self.sift_from(&schreier, i + 1) {
                    return Some(found);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cyc(text: &str, n: usize) -> Perm {
        Perm::parse_cycles(text, n).unwrap()
    }

    /// Oracle: brute-force closure.
    fn closure(n: usize, gens: &[Perm]) -> BTreeSet<Perm> {
        let mut seen = BTreeSet::new();
        let mut queue = vec![Perm::identity(n)];
        seen.insert(Perm::identity(n));
        while let Some(x) = queue.pop() {
            for g in gens {
                let y = g.compose(&x);
                if seen.insert(y.clone()) {
                    queue.push(y);
                }
            }
        }
        seen
    }

    #[test]
    fn symmetric_and_alternating_orders() {
        let s5 = StabChain::new(5, &[cyc("(0 1 2 3 4)", 5), cyc("(0 1)", 5)]);
        assert_eq!(s5.order(), 120);
        let a5 = StabChain::new(5, &[cyc("(0 1 2 3 4)", 5), cyc("(0 1 2)", 5)]);
        assert_eq!(a5.order(), 60);
        assert!(!a5.contains(&cyc("(0 1)", 5)));
        assert!(a5.contains(&cyc("(0 1)(2 3)", 5)));
        let trivial = StabChain::new(4, &[]);
        assert_eq!(trivial.order(), 1);
        assert!(trivial
            .random_element(&mut ChaCha8Rng::seed_from_u64(0))
            .is_identity());
    }

    #[test]
    fn matches_closure_on_mixed_groups() {
        let cases: Vec<(usize, Vec<Perm>)> = vec![
            (6, vec![cyc("(0 1)(2 3)", 6), cyc("(1 2)(4 5)", 6)]),
            (
                8,
                vec![
                    cyc("(0 4)(1 5)(2 6)(3 7)", 8),
                    cyc("(0 2)(1 3)", 8),
                    cyc("(0 1)", 8),
                ],
            ),
            (7, vec![cyc("(0 1 2 3 4 5 6)", 7), cyc("(1 2 4)(3 6 5)", 7)]),
        ];
        for (n, gens) in cases {
            let chain = StabChain::new(n, &gens);
            let elements = closure(n, &gens);
            assert_eq!(chain.order(), elements.len() as u128);
            for e in &elements {
                assert!(chain.contains(e));
            }
        }
    }

    #[test]
    fn samples_are_members_and_seeded() {
        let gens = [
            cyc("(0 4)(1 5)(2 6)(3 7)", 8),
            cyc("(0 2)(1 3)", 8),
            cyc("(0 1)", 8),
        ];
        let chain = StabChain::new(8, &gens);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| chain.random_element(&mut rng))
                .collect::<Vec<_>>()
        };
        let a = draw(7);
        assert_eq!(a, draw(7));
        assert!(a.iter().all(|g| chain.contains(g)));
    }
}
