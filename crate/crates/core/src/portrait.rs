//! Finite-depth tree automorphisms.
//!
//! A [`Portrait`] of depth `k` stores one permutation per internal vertex of
//! `T^k`. The permutation at `v` says where `g` sends the children of `v`
//! relative to `g(v)`, i.e. it is the root permutation of the section `g|_v`,
//! so `g(vxw) = g(v) · perm_v(x) · g|_{vx}(w)`.
//!
//! The canonical encoding is the byte string obtained by visiting internal
//! vertices depth-first in lexicographic order and writing each
//! permutation's one-line images. Two portraits over the same shape are
//! equal iff their encodings are equal.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::tree::{TreeShape, Vertex};

/// Precomputed addressing for one shape: byte offsets of every internal
/// vertex and the child table used by the traversal kernels.
pub(crate) struct Layout {
    shape: TreeShape,
    /// Byte offset of each internal vertex, in preorder.
    offset: Vec<u32>,
    level: Vec<u32>,
    /// Parallel to the encoding: entry `offset[v] + x` is the preorder index of
    /// child `x` of `v`, or its leaf rank when that child is a leaf.
    child: Vec<u32>,
    /// Leaf rank of the first leaf below each internal vertex.
    leaf_start: Vec<u32>,
    /// `leaves_below[l]` = number of leaves below a vertex at level `l`.
    leaves_below: Vec<usize>,
    /// Vertices renumbered level by level: offsets, and for each byte the
    /// renumbered child. Level `l` occupies `level_start[l]..level_start[l + 1]`.
    bfs_offset: Vec<u32>,
    bfs_child: Vec<u32>,
    level_start: Vec<u32>,
    len: usize,
    leaves: usize,
}

impl Layout {
    pub(crate) fn new(shape: &TreeShape) -> Result<Arc<Layout>> {
        let depth = shape.depth();
        let leaves = shape.leaf_count()?;
        if leaves > u32::MAX as usize {
            return Err(Error::Overflow("leaf count"));
        }
        let mut leaves_below = alloc::vec![1usize; depth + 1];
        for l in (0..depth).rev() {
            leaves_below[l] = leaves_below[l + 1] * shape.arity(l);
        }
        let mut layout = Layout {
            shape: shape.clone(),
            offset: Vec::new(),
            level: Vec::new(),
            child: Vec::new(),
            leaf_start: Vec::new(),
            leaves_below,
            bfs_offset: Vec::new(),
            bfs_child: Vec::new(),
            level_start: Vec::new(),
            len: 0,
            leaves,
        };
        if depth > 0 {
            let mut next_leaf = 0u32;
            layout.build(0, &mut next_leaf);
        }
        layout.len = layout.child.len();
        layout.build_levels();
        Ok(Arc::new(layout))
    }

    fn build_levels(&mut self) {
        let depth = self.depth();
        let mut order: Vec<u32> = (0..self.offset.len() as u32).collect();
        order.sort_by_key(|&v| self.level[v as usize]);
        let mut rank = alloc::vec![0u32; order.len()];
        for (i, &v) in order.iter().enumerate() {
            rank[v as usize] = i as u32;
        }
        self.bfs_offset = order.iter().map(|&v| self.offset[v as usize]).collect();
        self.bfs_child = alloc::vec![0; self.len];
        for (v, &off) in self.offset.iter().enumerate() {
            if self.level[v] as usize + 1 < depth {
                let m = self.shape.arity(self.level[v] as usize);
                for x in 0..m {
                    let p = off as usize + x;
                    self.bfs_child[p] = rank[self.child[p] as usize];
                }
            }
        }
        self.level_start = alloc::vec![0u32; depth + 1];
        for l in 0..depth {
            self.level_start[l + 1] = self.level_start[l]
                + order
                    .iter()
                    .filter(|&&v| self.level[v as usize] as usize == l)
                    .count() as u32;
        }
    }

    fn build(&mut self, level: usize, next_leaf: &mut u32) -> u32 {
        let idx = self.offset.len() as u32;
        let m = self.shape.arity(level);
        let base = self.child.len();
        self.offset.push(base as u32);
        self.level.push(level as u32);
        self.leaf_start.push(*next_leaf);
        self.child.resize(base + m, 0);
        for x in 0..m {
            let c = if level + 1 == self.shape.depth() {
                let leaf = *next_leaf;
                *next_leaf += 1;
                leaf
            } else {
                self.build(level + 1, next_leaf)
            };
            self.child[base + x] = c;
        }
        idx
    }

    pub(crate) fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub(crate) fn encoded_len(&self) -> usize {
        self.len
    }

    pub(crate) fn leaf_count(&self) -> usize {
        self.leaves
    }

    /// For each byte of the encoding, the arity of the vertex it belongs to.
    pub(crate) fn byte_arities(&self) -> Vec<usize> {
        let mut out = alloc::vec![0usize; self.len];
        for (v, &off) in self.offset.iter().enumerate() {
            let m = self.shape.arity(self.level[v] as usize);
            out[off as usize..off as usize + m].fill(m);
        }
        out
    }

    fn depth(&self) -> usize {
        self.shape.depth()
    }

    #[inline]
    fn is_bottom(&self, v: u32) -> bool {
        self.level[v as usize] as usize + 1 == self.depth()
    }

    pub(crate) fn identity_bytes(&self) -> Vec<u8> {
        let mut out = alloc::vec![0u8; self.len];
        for (v, &off) in self.offset.iter().enumerate() {
            let m = self.shape.arity(self.level[v] as usize);
            for x in 0..m {
                out[off as usize + x] = x as u8;
            }
        }
        out
    }

    pub(crate) fn is_identity_bytes(&self, g: &[u8]) -> bool {
        self.offset.iter().enumerate().all(|(v, &off)| {
            let m = self.shape.arity(self.level[v] as usize);
            (0..m).all(|x| g[off as usize + x] == x as u8)
        })
    }

    /// `out = g ∘ h`.
    pub(crate) fn compose_raw(&self, g: &[u8], h: &[u8], out: &mut [u8]) {
        let mut scratch = Vec::new();
        self.compose_with(g, h, out, &mut scratch);
    }

    /// `out = g ∘ h`, reusing `scratch` for the table of image offsets.
    /// Vertices are visited level by level, so the image of a vertex is
    /// known before its children are reached.
    pub(crate) fn compose_with(&self, g: &[u8], h: &[u8], out: &mut [u8], scratch: &mut Vec<u32>) {
        let depth = self.depth();
        if depth == 0 {
            return;
        }
        scratch.clear();
        scratch.resize(self.bfs_offset.len(), 0);
        let img = &mut scratch[..];
        for l in 0..depth {
            let m = self.shape.arity(l);
            let range = self.level_start[l] as usize..self.level_start[l + 1] as usize;
            if l + 1 < depth {
                for v in range {
                    let off = self.bfs_offset[v] as usize;
                    let oi = img[v] as usize;
                    for x in 0..m {
                        let y = h[off + x] as usize;
                        out[off + x] = g[oi + y];
                        img[self.bfs_child[off + x] as usize] =
                            self.bfs_offset[self.bfs_child[oi + y] as usize];
                    }
                }
            } else {
                for v in range {
                    let off = self.bfs_offset[v] as usize;
                    let oi = img[v] as usize;
                    for x in 0..m {
                        out[off + x] = g[oi + h[off + x] as usize];
                    }
                }
            }
        }
    }

    pub(crate) fn inverse_raw(&self, g: &[u8], out: &mut [u8]) {
        if self.len > 0 {
            self.inverse_rec(g, out, 0, 0);
        }
    }

    fn inverse_rec(&self, g: &[u8], out: &mut [u8], v: u32, gv: u32) {
        let off_v = self.offset[v as usize] as usize;
        let off_gv = self.offset[gv as usize] as usize;
        let m = self.shape.arity(self.level[v as usize] as usize);
        let bottom = self.is_bottom(v);
        for x in 0..m {
            let y = g[off_v + x] as usize;
            out[off_gv + y] = x as u8;
            if !bottom {
                self.inverse_rec(g, out, self.child[off_v + x], self.child[off_gv + y]);
            }
        }
    }

    /// Writes the image of every leaf rank into `out` (length `leaf_count`).
    pub(crate) fn leaf_images_raw(&self, g: &[u8], out: &mut [u32]) {
        if self.len == 0 {
            out[0] = 0;
        } else {
            self.leaf_rec(g, out, 0, 0);
        }
    }

    fn leaf_rec(&self, g: &[u8], out: &mut [u32], v: u32, gv: u32) {
        let off_v = self.offset[v as usize] as usize;
        let off_gv = self.offset[gv as usize] as usize;
        let m = self.shape.arity(self.level[v as usize] as usize);
        let bottom = self.is_bottom(v);
        for x in 0..m {
            let y = g[off_v + x] as usize;
            let (c, gc) = (self.child[off_v + x], self.child[off_gv + y]);
            if bottom {
                out[c as usize] = gc;
            } else {
                self.leaf_rec(g, out, c, gc);
            }
        }
    }

    /// Order of `g`, as the lcm of its leaf cycle lengths. `scratch` is
    /// resized as needed.
    pub(crate) fn order_raw(&self, g: &[u8], scratch: &mut Vec<u32>) -> u64 {
        let depth = self.depth();
        if depth == 0 {
            return 1;
        }
        scratch.clear();
        scratch.resize(self.leaves + self.bfs_offset.len(), 0);
        let (leaf, img) = scratch.split_at_mut(self.leaves);
        for l in 0..depth {
            let m = self.shape.arity(l);
            let range = self.level_start[l] as usize..self.level_start[l + 1] as usize;
            if l + 1 < depth {
                for v in range {
                    let off = self.bfs_offset[v] as usize;
                    let oi = img[v] as usize;
                    for x in 0..m {
                        img[self.bfs_child[off + x] as usize] =
                            self.bfs_offset[self.bfs_child[oi + g[off + x] as usize] as usize];
                    }
                }
            } else {
                for v in range {
                    let off = self.bfs_offset[v] as usize;
                    let oi = img[v] as usize;
                    for x in 0..m {
                        leaf[self.child[off + x] as usize] = self.child[oi + g[off + x] as usize];
                    }
                }
            }
        }
        let mut order = 1u64;
        for start in 0..self.leaves {
            if leaf[start] == u32::MAX {
                continue;
            }
            let mut len = 0u64;
            let mut x = start;
            while leaf[x] != u32::MAX {
                let next = leaf[x] as usize;
                leaf[x] = u32::MAX;
                x = next;
                len += 1;
            }
            if !order.is_multiple_of(len) {
                order = num_integer::lcm(order, len);
            }
        }
        order
    }

    /// Preorder index of an internal vertex, or `None` if `v` is a leaf.
    fn internal_index(&self, v: &Vertex) -> Option<u32> {
        if v.level() >= self.depth() {
            return None;
        }
        let mut idx = 0u32;
        for &x in v.letters() {
            idx = self.child[self.offset[idx as usize] as usize + x as usize];
        }
        Some(idx)
    }

    /// Byte positions, in the section's canonical order, of the depth-`j`
    /// section at `v`.
    pub(crate) fn section_positions(&self, v: &Vertex, j: usize) -> Result<Vec<u32>> {
        self.shape.check_vertex(v)?;
        if v.level() + j > self.depth() {
            return Err(Error::OutOfRange {
                what: "section depth",
                value: v.level() + j,
                max: self.depth(),
            });
        }
        let mut out = Vec::new();
        if j > 0 {
            let idx = self.internal_index(v).expect("internal vertex");
            self.collect_positions(idx, v.level() + j, &mut out);
        }
        Ok(out)
    }

    fn collect_positions(&self, v: u32, stop_level: usize, out: &mut Vec<u32>) {
        let off = self.offset[v as usize];
        let level = self.level[v as usize] as usize;
        let m = self.shape.arity(level);
        out.extend(off..off + m as u32);
        if level + 1 < stop_level {
            for x in 0..m {
                self.collect_positions(self.child[off as usize + x], stop_level, out);
            }
        }
    }

    /// Byte positions of every internal vertex that is not `v` or below it.
    pub(crate) fn outside_positions(&self, v: &Vertex) -> Result<Vec<u32>> {
        let inside = self.section_positions(v, self.depth() - v.level())?;
        let mut mask = alloc::vec![false; self.len];
        for p in inside {
            mask[p as usize] = true;
        }
        Ok((0..self.len as u32)
            .filter(|&p| !mask[p as usize])
            .collect())
    }

    fn apply(&self, g: &[u8], v: &Vertex) -> Vertex {
        let mut out = Vec::with_capacity(v.level());
        let mut idx = 0u32;
        for (j, &x) in v.letters().iter().enumerate() {
            let off = self.offset[idx as usize] as usize;
            out.push(g[off + x as usize]);
            if j + 1 < self.depth() {
                idx = self.child[off + x as usize];
            }
        }
        Vertex::from_letters(out)
    }

    fn validate(&self, bytes: &[u8]) -> Result<()> {
        if bytes.len() != self.len {
            return Err(Error::ShapeMismatch(alloc::format!(
                "encoding has {} bytes, shape {} needs {}",
                bytes.len(),
                self.shape,
                self.len
            )));
        }
        for (v, &off) in self.offset.iter().enumerate() {
            let m = self.shape.arity(self.level[v] as usize);
            let images = bytes[off as usize..off as usize + m]
                .iter()
                .map(|&b| b as u32)
                .collect();
            Perm::new(images)?;
        }
        Ok(())
    }
}

/// Positions-based extraction of sections from raw encodings.
pub(crate) fn gather(bytes: &[u8], positions: &[u32], out: &mut Vec<u8>) {
    out.clear();
    out.extend(positions.iter().map(|&p| bytes[p as usize]));
}

#[derive(Clone)]
pub struct Portrait {
    layout: Arc<Layout>,
    perms: Vec<u8>,
}

impl Portrait {
    pub fn identity(shape: &TreeShape) -> Portrait {
        let layout = Layout::new(shape).expect("shape too large for a portrait");
        let perms = layout.identity_bytes();
        Portrait { layout, perms }
    }

    /// Decodes a canonical encoding.
    pub fn from_encoding(shape: &TreeShape, bytes: &[u8]) -> Result<Portrait> {
        let layout = Layout::new(shape)?;
        layout.validate(bytes)?;
        Ok(Portrait {
            layout,
            perms: bytes.to_vec(),
        })
    }

    pub(crate) fn from_raw(layout: Arc<Layout>, perms: Vec<u8>) -> Portrait {
        debug_assert_eq!(perms.len(), layout.encoded_len());
        Portrait { layout, perms }
    }

    /// Builds a portrait by asking for the permutation at each internal vertex.
    pub fn from_vertex_perms(
        shape: &TreeShape,
        mut perm_at: impl FnMut(&Vertex) -> Perm,
    ) -> Result<Portrait> {
        let layout = Layout::new(shape)?;
        let mut perms = Vec::with_capacity(layout.encoded_len());
        fn walk(
            shape: &TreeShape,
            v: Vertex,
            perm_at: &mut dyn FnMut(&Vertex) -> Perm,
            out: &mut Vec<u8>,
        ) -> Result<()> {
            if v.level() == shape.depth() {
                return Ok(());
            }
            let m = shape.arity(v.level());
            let p = perm_at(&v);
            if p.degree() != m {
                return Err(Error::InvalidPermutation(alloc::format!(
                    "permutation at {v} has degree {}, expected {m}",
                    p.degree()
                )));
            }
            out.extend(p.images().iter().map(|&x| x as u8));
            for x in 0..m {
                walk(shape, v.child(x as u8), perm_at, out)?;
            }
            Ok(())
        }
        walk(shape, Vertex::root(), &mut perm_at, &mut perms)?;
        Ok(Portrait { layout, perms })
    }

    /// A uniformly random element of `Aut T^k` for the given shape.
    pub fn random<R: Rng + ?Sized>(shape: &TreeShape, rng: &mut R) -> Portrait {
        let mut p = Portrait::identity(shape);
        let layout = p.layout.clone();
        for (v, &off) in layout.offset.iter().enumerate() {
            let m = shape.arity(layout.level[v] as usize);
            p.perms[off as usize..off as usize + m].shuffle(rng);
        }
        p
    }

    pub fn shape(&self) -> &TreeShape {
        self.layout.shape()
    }

    pub fn depth(&self) -> usize {
        self.shape().depth()
    }

    /// Canonical byte encoding.
    pub fn encoding(&self) -> &[u8] {
        &self.perms
    }

    pub fn is_identity(&self) -> bool {
        self.layout.is_identity_bytes(&self.perms)
    }

    /// Permutation carried by the internal vertex `v`.
    pub fn perm_at(&self, v: &Vertex) -> Result<Perm> {
        self.shape().check_vertex(v)?;
        let idx = self
            .layout
            .internal_index(v)
            .ok_or_else(|| Error::InvalidVertex(alloc::format!("{v} is a leaf")))?;
        let off = self.layout.offset[idx as usize] as usize;
        let m = self.shape().arity(v.level());
        Perm::new(self.perms[off..off + m].iter().map(|&b| b as u32).collect())
    }

    pub fn apply(&self, v: &Vertex) -> Result<Vertex> {
        self.shape().check_vertex(v)?;
        Ok(self.layout.apply(&self.perms, v))
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Portrait) -> Result<Portrait> {
        self.check_same_shape(other)?;
        let mut out = alloc::vec![0u8; self.perms.len()];
        self.layout.compose_raw(&self.perms, &other.perms, &mut out);
        Ok(Portrait {
            layout: self.layout.clone(),
            perms: out,
        })
    }

    pub fn inverse(&self) -> Portrait {
        let mut out = alloc::vec![0u8; self.perms.len()];
        self.layout.inverse_raw(&self.perms, &mut out);
        Portrait {
            layout: self.layout.clone(),
            perms: out,
        }
    }

    /// `self^e` for `e ≥ 0`, by repeated squaring.
    pub fn pow(&self, mut e: u64) -> Portrait {
        let mut acc = Portrait {
            layout: self.layout.clone(),
            perms: self.layout.identity_bytes(),
        };
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base).unwrap();
            }
            base = base.compose(&base).unwrap();
            e >>= 1;
        }
        acc
    }

    /// The depth-`depth` section `g|_v`, an automorphism of the subtree at
    /// `v` truncated to `depth` levels.
    pub fn section(&self, v: &Vertex, depth: usize) -> Result<Portrait> {
        let positions = self.layout.section_positions(v, depth)?;
        let shape = self.shape().subtree_shape(v)?.truncate(depth)?;
        let layout = Layout::new(&shape)?;
        let mut perms = Vec::new();
        gather(&self.perms, &positions, &mut perms);
        Ok(Portrait { layout, perms })
    }

    /// Restriction to the first `depth` levels, `g|_∅^depth`.
    pub fn truncate(&self, depth: usize) -> Result<Portrait> {
        self.section(&Vertex::root(), depth)
    }

    pub fn order(&self) -> u64 {
        let mut scratch = Vec::new();
        self.layout.order_raw(&self.perms, &mut scratch)
    }

    /// Action on the leaves in canonical order; a faithful representation of
    /// `Aut T^k` in the symmetric group on `#L_k` points.
    pub fn leaf_permutation(&self) -> Perm {
        let mut out = alloc::vec![0u32; self.layout.leaf_count()];
        self.layout.leaf_images_raw(&self.perms, &mut out);
        Perm::new(out).expect("leaf action is a bijection")
    }

    /// Inverse of [`Portrait::leaf_permutation`]; fails if `perm` does not
    /// preserve the tree structure.
    pub fn from_leaf_permutation(shape: &TreeShape, perm: &Perm) -> Result<Portrait> {
        let layout = Layout::new(shape)?;
        if perm.degree() != layout.leaf_count() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "permutation of degree {} on a tree with {} leaves",
                perm.degree(),
                layout.leaf_count()
            )));
        }
        let mut perms = alloc::vec![0u8; layout.encoded_len()];
        for (v, &off) in layout.offset.iter().enumerate() {
            let level = layout.level[v] as usize;
            let m = shape.arity(level);
            let per_child = layout.leaves_below[level + 1];
            for x in 0..m {
                let first = layout.leaf_start[v] as usize + x * per_child;
                let image = perm.apply(first);
                perms[off as usize + x] = ((image / per_child) % m) as u8;
            }
        }
        layout.validate(&perms)?;
        let g = Portrait { layout, perms };
        if g.leaf_permutation() != *perm {
            return Err(Error::InvalidPermutation(
                "leaf permutation does not preserve the tree".into(),
            ));
        }
        Ok(g)
    }

    /// `ψ_n^k`: the sections at every level-`n` vertex (canonical order) at
    /// depth `k - n`, and the top action `g|_∅^n`.
    pub fn psi_decompose(&self, n: usize) -> Result<(Vec<Portrait>, Portrait)> {
        if n == 0 || n > self.depth() {
            return Err(Error::OutOfRange {
                what: "decomposition level",
                value: n,
                max: self.depth(),
            });
        }
        let rest = self.depth() - n;
        let sections = self
            .shape()
            .vertices_at_level(n)?
            .iter()
            .map(|v| self.section(v, rest))
            .collect::<Result<Vec<_>>>()?;
        Ok((sections, self.truncate(n)?))
    }

    /// Inverse of [`Portrait::psi_decompose`].
    pub fn psi_compose(sections: &[Portrait], top: &Portrait) -> Result<Portrait> {
        let top_shape = top.shape();
        let n = top_shape.depth();
        let count = top_shape.level_size(n)?;
        if sections.len() != count {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} sections for {count} vertices at level {n}",
                sections.len()
            )));
        }
        let below = match sections.first() {
            Some(s) => s.shape().clone(),
            None => TreeShape::new(Vec::new())?,
        };
        if let Some(s) = sections.iter().find(|s| *s.shape() != below) {
            return Err(Error::ShapeMismatch(alloc::format!(
                "sections of shapes {below} and {}",
                s.shape()
            )));
        }
        let ambient = top_shape.extend(&below);
        let layout = Layout::new(&ambient)?;
        let mut perms = alloc::vec![0u8; layout.encoded_len()];
        let scatter = |positions: Vec<u32>, src: &[u8], dst: &mut [u8]| {
            for (&p, &b) in positions.iter().zip(src) {
                dst[p as usize] = b;
            }
        };
        scatter(
            layout.section_positions(&Vertex::root(), n)?,
            &top.perms,
            &mut perms,
        );
        for (v, s) in top_shape.vertices_at_level(n)?.iter().zip(sections) {
            scatter(
                layout.section_positions(v, below.depth())?,
                &s.perms,
                &mut perms,
            );
        }
        Ok(Portrait { layout, perms })
    }

    fn check_same_shape(&self, other: &Portrait) -> Result<()> {
        if Arc::ptr_eq(&self.layout, &other.layout) || self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(alloc::format!(
                "{} vs {}",
                self.shape(),
                other.shape()
            )))
        }
    }
}

impl PartialEq for Portrait {
    fn eq(&self, other: &Self) -> bool {
        self.perms == other.perms && self.shape() == other.shape()
    }
}

impl Eq for Portrait {}

impl Hash for Portrait {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.shape().hash(state);
        self.perms.hash(state);
    }
}

impl PartialOrd for Portrait {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Portrait {
    fn cmp(&self, other: &Self) -> Ordering {
        self.shape()
            .cmp(other.shape())
            .then_with(|| self.perms.cmp(&other.perms))
    }
}

impl fmt::Debug for Portrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Portrait{}{:?}", self.shape(), self.perms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(s: &str) -> Vertex {
        s.parse().unwrap()
    }

    fn binary(k: usize) -> TreeShape {
        TreeShape::constant(2, k).unwrap()
    }

    fn swap() -> Perm {
        Perm::parse_cycles("(0 1)", 2).unwrap()
    }

    /// Grigorchuk's `a = (1,1)σ` at depth k.
    fn grig_a(k: usize) -> Portrait {
        Portrait::from_vertex_perms(&binary(k), |u| {
            if u.is_root() {
                swap()
            } else {
                Perm::identity(2)
            }
        })
        .unwrap()
    }

    /// Odometer `g = (1, g)σ`: swaps at the root and along the path 1, 11, ...
    fn odometer(k: usize) -> Portrait {
        Portrait::from_vertex_perms(&binary(k), |u| {
            if u.letters().iter().all(|&x| x == 1) {
                swap()
            } else {
                Perm::identity(2)
            }
        })
        .unwrap()
    }

    /// Leaf word, first letter least significant.
    fn leaf_value(w: &Vertex) -> usize {
        w.letters()
            .iter()
            .enumerate()
            .map(|(i, &x)| (x as usize) << i)
            .sum()
    }

    fn leaf_word(value: usize, k: usize) -> Vertex {
        Vertex::from_letters((0..k).map(|i| ((value >> i) & 1) as u8).collect::<Vec<_>>())
    }

    #[test]
    fn identity_basics() {
        let id = Portrait::identity(&binary(2));
        assert_eq!(id.encoding(), &[0, 1, 0, 1, 0, 1]);
        assert_eq!(id.apply(&v("01")).unwrap(), v("01"));
        assert!(id.is_identity());
        assert_eq!(id.order(), 1);
    }

    #[test]
    fn grigorchuk_a_action() {
        let a = grig_a(2);
        assert_eq!(a.apply(&v("01")).unwrap(), v("11"));
        assert_eq!(a.apply(&v("1")).unwrap(), v("0"));
        assert!(a.compose(&a).unwrap().is_identity());
        assert_eq!(a.inverse(), a);
        assert_eq!(
            a.leaf_permutation(),
            Perm::parse_cycles("(0 2)(1 3)", 4).unwrap()
        );
        for k in 1..6 {
            assert_eq!(grig_a(k).order(), 2);
        }
    }

    #[test]
    fn odometer_adds_one() {
        let g = odometer(3);
        assert_eq!(g.apply(&v("111")).unwrap(), v("000"));
        for x in 0..8 {
            let image = g.apply(&leaf_word(x, 3)).unwrap();
            assert_eq!(leaf_value(&image), (x + 1) % 8);
        }
        let g2 = g.compose(&g).unwrap();
        assert_eq!(g2.apply(&v("000")).unwrap(), v("010"));
        let inv = g.inverse();
        for x in 0..8 {
            let image = inv.apply(&leaf_word(x, 3)).unwrap();
            assert_eq!(leaf_value(&image), (x + 7) % 8);
        }
    }

    /// Oracle: repeated composition until the identity is reached.
    fn order_by_iteration(g: &Portrait) -> u64 {
        let mut acc = g.clone();
        let mut r = 1;
        while !acc.is_identity() {
            acc = acc.compose(g).unwrap();
            r += 1;
        }
        r
    }

    #[test]
    fn odometer_order() {
        for k in 1..=6 {
            let g = odometer(k);
            assert_eq!(order_by_iteration(&g), 1 << k);
            assert_eq!(g.order(), 1 << k);
        }
    }

    #[test]
    fn sections_of_wreath_elements() {
        // b = (a, c) with c's root trivial: section at 0 is a, at 1 is trivial at depth 1.
        let shape = binary(3);
        let b = Portrait::from_vertex_perms(&shape, |u| {
            if *u == v("0") {
                swap()
            } else {
                Perm::identity(2)
            }
        })
        .unwrap();
        assert_eq!(b.section(&v("0"), 2).unwrap(), grig_a(2));
        let (parts, top) = b.psi_decompose(1).unwrap();
        assert_eq!(parts[0], grig_a(2));
        assert!(top.is_identity());
        assert_eq!(Portrait::psi_compose(&parts, &top).unwrap(), b);
        assert!(b.section(&v("0"), 3).is_err());
    }

    #[test]
    fn psi_compose_builds_a() {
        let top = grig_a(1);
        let ids = vec![Portrait::identity(&binary(2)); 2];
        assert_eq!(Portrait::psi_compose(&ids, &top).unwrap(), grig_a(3));
        assert!(Portrait::psi_compose(&ids[..1], &top).is_err());
    }

    #[test]
    fn leaf_permutation_rejects_non_tree_maps() {
        let p = Perm::parse_cycles("(0 1 2 3)", 4).unwrap();
        // (0 1 2 3) sends 00->01 and 01->10: splits the subtree at 0.
        assert!(Portrait::from_leaf_permutation(&binary(2), &p).is_err());
    }

    #[test]
    fn encoding_round_trip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shape = TreeShape::new(vec![3, 2, 2]).unwrap();
        let g = Portrait::random(&shape, &mut rng);
        assert_eq!(Portrait::from_encoding(&shape, g.encoding()).unwrap(), g);
        assert!(Portrait::from_encoding(&shape, &[0, 0, 1]).is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = Portrait::identity(&binary(2));
        let h = Portrait::identity(&binary(3));
        assert!(matches!(g.compose(&h), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn pow_matches_repeated_compose() {
        let g = odometer(4);
        let mut acc = Portrait::identity(&binary(4));
        for e in 0..20 {
            assert_eq!(g.pow(e), acc);
            acc = acc.compose(&g).unwrap();
        }
    }
}
