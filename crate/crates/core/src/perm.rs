//! Permutations of `{0, …, n-1}` in one-line notation.
//!
//! Composition follows the crate-wide convention: `a.compose(&b)` is `a ∘ b`,
//! so `b` acts first.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Vec<u32>);

impl Perm {
    pub fn new(images: Vec<u32>) -> Result<Self> {
        let n = images.len();
        let mut seen = alloc::vec![false; n];
        for &x in &images {
            let x = x as usize;
            if x >= n || seen[x] {
                return Err(Error::InvalidPermutation(alloc::format!(
                    "{images:?} is not a bijection of 0..{n}"
                )));
            }
            seen[x] = true;
        }
        Ok(Perm(images))
    }

    pub fn identity(degree: usize) -> Self {
        Perm((0..degree as u32).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.0[x] as usize
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Perm) -> Perm {
        assert_eq!(self.degree(), other.degree(), "degree mismatch");
        Perm(other.0.iter().map(|&x| self.0[x as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = alloc::vec![0u32; self.degree()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x as usize] = i as u32;
        }
        Perm(inv)
    }

    /// Nontrivial cycles, each starting at its least point, sorted by that point.
    pub fn cycles(&self) -> Vec<Vec<u32>> {
        let mut seen = alloc::vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x as u32);
                x = self.0[x] as usize;
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }

    /// Lengths of all cycles, fixed points included.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = alloc::vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                len += 1;
                x = self.0[x] as usize;
            }
            if len > 0 {
                out.push(len);
            }
        }
        out
    }

    /// Least common multiple of the cycle lengths.
    pub fn order(&self) -> u64 {
        self.cycle_lengths()
            .into_iter()
            .fold(1u64, |acc, len| acc.lcm(&(len as u64)))
    }

    /// Parses cycle notation such as `(0 1 2)(3 4)` or `id` into a
    /// permutation of the given degree. Points are separated by spaces or
    /// commas.
    pub fn parse_cycles(text: &str, degree: usize) -> Result<Perm> {
        let text = text.trim();
        let bad = |msg: &str| Error::InvalidPermutation(alloc::format!("`{text}`: {msg}"));
        let mut images: Vec<u32> = (0..degree as u32).collect();
        if text == "id" || text.is_empty() {
            return Ok(Perm(images));
        }
        let mut seen = alloc::vec![false; degree];
        let mut rest = text;
        while !rest.is_empty() {
            let Some(body) = rest.strip_prefix('(') else {
                return Err(bad("expected `(`"));
            };
            let close = body.find(')').ok_or_else(|| bad("unclosed cycle"))?;
            let points = body[..close]
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| bad("non-numeric point")))
                .collect::<Result<Vec<usize>>>()?;
            for &x in &points {
                if x >= degree {
                    return Err(bad("point out of range"));
                }
                if seen[x] {
                    return Err(bad("point repeated"));
                }
                seen[x] = true;
            }
            for (i, &x) in points.iter().enumerate() {
                images[x] = points[(i + 1) % points.len()] as u32;
            }
            rest = body[close + 1..].trim_start();
        }
        Ok(Perm(images))
    }

    pub fn to_cycle_string(&self) -> String {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return String::from("id");
        }
        let mut s = String::new();
        for c in cycles {
            s.push('(');
            for (i, x) in c.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                s.push_str(&alloc::format!("{x}"));
            }
            s.push(')');
        }
        s
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_cycle_string())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.0)
    }
}
