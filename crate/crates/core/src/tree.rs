//! Addressing for spherically homogeneous rooted trees.
//!
//! A [`TreeShape`] lists the number of children at every level; a [`Vertex`]
//! is a word of letters read from the root. Vertices of a level are ordered
//! lexicographically, and that order is the coordinate order used by every
//! other module (section tuples, leaf permutations, encodings).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Largest arity a shape may carry; portraits store letters as bytes.
pub const MAX_ARITY: usize = 255;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeShape {
    arities: Vec<usize>,
}

impl TreeShape {
    pub fn new(arities: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = arities.iter().find(|&&m| m == 0 || m > MAX_ARITY) {
            return Err(Error::InvalidShape(alloc::format!(
                "arity {bad} not in 1..={MAX_ARITY}"
            )));
        }
        Ok(TreeShape { arities })
    }

    /// The `depth`-level truncation of the `arity`-regular tree.
    pub fn constant(arity: usize, depth: usize) -> Result<Self> {
        TreeShape::new(alloc::vec![arity; depth])
    }

    pub fn depth(&self) -> usize {
        self.arities.len()
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    /// Number of children of a vertex sitting at `level` (`level < depth`).
    pub fn arity(&self, level: usize) -> usize {
        self.arities[level]
    }

    /// `#L_n`, the number of vertices at distance `n` from the root.
    pub fn level_size(&self, n: usize) -> Result<usize> {
        self.check_level(n)?;
        self.arities[..n]
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .ok_or(Error::Overflow("level size"))
    }

    pub fn leaf_count(&self) -> Result<usize> {
        self.level_size(self.depth())
    }

    /// All vertices at level `n` in canonical (lexicographic) order.
    pub fn vertices_at_level(&self, n: usize) -> Result<Vec<Vertex>> {
        let size = self.level_size(n)?;
        Ok((0..size).map(|i| self.vertex_at(n, i)).collect())
    }

    /// The vertex of rank `index` in the canonical order of level `n`.
    pub fn vertex_at(&self, n: usize, mut index: usize) -> Vertex {
        let mut letters = alloc::vec![0u8; n];
        for j in (0..n).rev() {
            let m = self.arities[j];
            letters[j] = (index % m) as u8;
            index /= m;
        }
        Vertex(letters)
    }

    /// Rank of `v` among the vertices of its level.
    pub fn rank(&self, v: &Vertex) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(v.0
            .iter()
            .zip(&self.arities)
            .fold(0usize, |acc, (&x, &m)| acc * m + x as usize))
    }

    /// Shape of the subtree hanging from `v`.
    pub fn subtree_shape(&self, v: &Vertex) -> Result<TreeShape> {
        self.check_vertex(v)?;
        Ok(TreeShape {
            arities: self.arities[v.level()..].to_vec(),
        })
    }

    /// The first `depth` levels of this shape.
    pub fn truncate(&self, depth: usize) -> Result<TreeShape> {
        self.check_level(depth)?;
        Ok(TreeShape {
            arities: self.arities[..depth].to_vec(),
        })
    }

    /// Shape obtained by hanging a copy of `below` from every leaf.
    pub fn extend(&self, below: &TreeShape) -> TreeShape {
        let mut arities = self.arities.clone();
        arities.extend_from_slice(&below.arities);
        TreeShape { arities }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.level() <= self.depth()
            && v.0
                .iter()
                .zip(&self.arities)
                .all(|(&x, &m)| (x as usize) < m)
    }

    pub fn check_vertex(&self, v: &Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex(alloc::format!("{v} in shape {self}")))
        }
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.depth() {
            return Err(Error::OutOfRange {
                what: "level",
                value: n,
                max: self.depth(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, m) in self.arities.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreeShape{self}")
    }
}

/// A vertex, i.e. a finite word over the level alphabets. The empty word is
/// the root.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(Vec<u8>);

impl Vertex {
    pub fn root() -> Self {
        Vertex(Vec::new())
    }

    pub fn from_letters(letters: impl Into<Vec<u8>>) -> Self {
        Vertex(letters.into())
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, letter: u8) -> Vertex {
        let mut letters = self.0.clone();
        letters.push(letter);
        Vertex(letters)
    }

    /// The word `self` followed by `other`.
    pub fn concat(&self, other: &Vertex) -> Vertex {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Vertex(letters)
    }

    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.0.starts_with(&self.0)
    }

    /// First `level` letters.
    pub fn prefix(&self, level: usize) -> Vertex {
        Vertex(self.0[..level].to_vec())
    }
}

/// Root prints as `e`; letters print as digits, dot-separated once any
/// letter needs two digits.
impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        let dotted = self.0.iter().any(|&x| x >= 10);
        for (i, x) in self.0.iter().enumerate() {
            if dotted && i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({self})")
    }
}

impl FromStr for Vertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidVertex(s.to_string());
        if s == "e" || s.is_empty() {
            return Ok(Vertex::root());
        }
        let letters: Option<Vec<u8>> = if s.contains('.') {
            s.split('.').map(|t| t.parse::<u8>().ok()).collect()
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as u8)).collect()
        };
        letters.map(Vertex).ok_or_else(bad)
    }
}

impl From<&Vertex> for String {
    fn from(v: &Vertex) -> String {
        v.to_string()
    }
}
