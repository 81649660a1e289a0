//! Realized finite quotients `π_k(G)` and the subgroups the censuses need.
//!
//! A [`FiniteQuotient`] is built from the depth-`k` projections of a
//! definition's generators. It carries a stabilizer chain over the leaf
//! action when the tree is small enough, and the full element set when it
//! was enumerated. Set-level operations (stabilizers, sections, censuses)
//! need the element set and fail with [`Error::Unsupported`] otherwise.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::hash::BuildHasher;

use hashbrown::{DefaultHashBuilder, HashTable};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::portrait::{gather, Layout, Portrait};
use crate::recursion::{GroupDef, Projector};
use crate::stabchain::StabChain;
use crate::tree::{TreeShape, Vertex};

/// Stabilizer chains are only built for leaf actions up to this degree.
const CHAIN_MAX_LEAVES: usize = 4096;

/// A set of portraits over one shape, stored as sorted canonical encodings
/// in a single flat buffer.
#[derive(Clone)]
pub struct ElementSet {
    layout: Arc<Layout>,
    data: Vec<u8>,
    len: usize,
}

impl ElementSet {
    fn stride(&self) -> usize {
        self.layout.encoded_len()
    }

    /// Sorts and deduplicates `len` encodings packed in `data`.
    pub(crate) fn from_unsorted(layout: Arc<Layout>, data: Vec<u8>, len: usize) -> ElementSet {
        let stride = layout.encoded_len();
        if stride == 0 {
            return ElementSet {
                layout,
                data: Vec::new(),
                len: len.min(1),
            };
        }
        if let Some(packer) = Packer::new(&layout) {
            let mut keys: Vec<u128> = data.chunks_exact(stride).map(|x| packer.pack(x)).collect();
            keys.sort_unstable();
            keys.dedup();
            return ElementSet::from_sorted_keys(layout, &packer, &keys);
        }
        let raw = |i: u32| &data[i as usize * stride..(i as usize + 1) * stride];
        let mut order: Vec<u32> = (0..len as u32).collect();
        order.sort_unstable_by(|&a, &b| raw(a).cmp(raw(b)));
        order.dedup_by(|a, b| raw(*a) == raw(*b));
        let mut sorted = Vec::with_capacity(order.len() * stride);
        for &i in &order {
            sorted.extend_from_slice(raw(i));
        }
        ElementSet {
            layout,
            data: sorted,
            len: order.len(),
        }
    }

    fn from_sorted_keys(layout: Arc<Layout>, packer: &Packer, keys: &[u128]) -> ElementSet {
        let stride = layout.encoded_len();
        let mut data = alloc::vec![0u8; keys.len() * stride];
        for (key, out) in keys.iter().zip(data.chunks_exact_mut(stride)) {
            packer.unpack(*key, out);
        }
        ElementSet {
            layout,
            data,
            len: keys.len(),
        }
    }

    pub fn from_portraits(shape: &TreeShape, items: &[Portrait]) -> Result<ElementSet> {
        let layout = Layout::new(shape)?;
        let mut data = Vec::with_capacity(items.len() * layout.encoded_len());
        for p in items {
            if p.shape() != shape {
                return Err(Error::ShapeMismatch(format!("{} vs {shape}", p.shape())));
            }
            data.extend_from_slice(p.encoding());
        }
        Ok(ElementSet::from_unsorted(layout, data, items.len()))
    }

    pub(crate) fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn shape(&self) -> &TreeShape {
        self.layout.shape()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub(crate) fn raw(&self, i: usize) -> &[u8] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }

    pub(crate) fn raw_iter(&self) -> impl Iterator<Item = &[u8]> + '_ {
        (0..self.len).map(move |i| self.raw(i))
    }

    pub fn get(&self, i: usize) -> Portrait {
        Portrait::from_raw(self.layout.clone(), self.raw(i).to_vec())
    }

    /// Elements in canonical (sorted encoding) order.
    pub fn iter(&self) -> impl Iterator<Item = Portrait> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub(crate) fn index_of_raw(&self, bytes: &[u8]) -> Option<usize> {
        if bytes.len() != self.stride() {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.raw(mid).cmp(bytes) {
                core::cmp::Ordering::Less => lo = mid + 1,
                core::cmp::Ordering::Greater => hi = mid,
                core::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, g: &Portrait) -> bool {
        g.shape() == self.shape() && self.index_of_raw(g.encoding()).is_some()
    }

    pub fn is_subset_of(&self, other: &ElementSet) -> bool {
        self.shape() == other.shape() && self.raw_iter().all(|x| other.index_of_raw(x).is_some())
    }

    /// The elements satisfying `keep`, in the same order.
    pub(crate) fn filter(&self, mut keep: impl FnMut(&[u8]) -> bool) -> ElementSet {
        let mut data = Vec::new();
        let mut len = 0;
        for x in self.raw_iter() {
            if keep(x) {
                data.extend_from_slice(x);
                len += 1;
            }
        }
        ElementSet {
            layout: self.layout.clone(),
            data,
            len,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.len == 1 && self.layout.is_identity_bytes(self.raw(0))
    }
}

impl core::fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "ElementSet{}[{}]", self.shape(), self.len)
    }
}

impl PartialEq for ElementSet {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.len == other.len && self.data == other.data
    }
}

impl Eq for ElementSet {}

/// Order-preserving packing of an encoding into a `u128`: byte `i` gets
/// `⌈log₂ m_i⌉` bits, most significant first. Only available when the whole
/// encoding fits.
struct Packer {
    widths: Vec<u32>,
    /// Set when every byte has the same width.
    uniform: Option<u32>,
}

impl Packer {
    fn new(layout: &Layout) -> Option<Packer> {
        let widths: Vec<u32> = layout
            .byte_arities()
            .into_iter()
            .map(|m| usize::BITS - (m - 1).leading_zeros())
            .collect();
        let uniform = widths
            .first()
            .copied()
            .filter(|&w| widths.iter().all(|&x| x == w));
        (widths.iter().sum::<u32>() <= 128).then_some(Packer { widths, uniform })
    }

    #[inline]
    fn pack(&self, bytes: &[u8]) -> u128 {
        if let Some(w) = self.uniform {
            if w <= 4 && bytes.len() * w as usize <= 64 {
                return bytes.iter().fold(0u64, |key, &b| (key << w) | b as u64) as u128;
            }
            return bytes.iter().fold(0u128, |key, &b| (key << w) | b as u128);
        }
        let mut key = 0u128;
        for (&b, &w) in bytes.iter().zip(&self.widths) {
            key = (key << w) | b as u128;
        }
        key
    }

    #[inline]
    fn unpack(&self, mut key: u128, out: &mut [u8]) {
        for (b, &w) in out.iter_mut().zip(&self.widths).rev() {
            *b = (key & ((1u128 << w) - 1)) as u8;
            key >>= w;
        }
    }
}

/// Breadth-first closure of `gens` under right multiplication, starting
/// from the identity. For a finite group this is the generated subgroup.
/// `hint` is the expected size, if known.
pub(crate) fn generate(
    layout: &Arc<Layout>,
    gens: &[Vec<u8>],
    cap: u64,
    hint: Option<usize>,
) -> Result<ElementSet> {
    let stride = layout.encoded_len();
    let mut gens: Vec<&Vec<u8>> = gens
        .iter()
        .filter(|g| !layout.is_identity_bytes(g))
        .collect();
    gens.sort();
    gens.dedup();
    if stride == 0 || gens.is_empty() {
        return Ok(ElementSet {
            layout: layout.clone(),
            data: layout.identity_bytes(),
            len: 1,
        });
    }
    let capacity_error = |count: usize| Error::Capacity {
        reached: count as u128 + 1,
        cap,
    };
    let hint = hint.unwrap_or(0).min(cap as usize);
    let hasher = DefaultHashBuilder::default();
    let mut current = alloc::vec![0u8; stride];
    let mut product = alloc::vec![0u8; stride];
    let mut scratch = Vec::new();

    if let Some(packer) = Packer::new(layout) {
        let mut seen: hashbrown::HashSet<u128, DefaultHashBuilder> =
            hashbrown::HashSet::with_capacity_and_hasher(hint, hasher);
        let mut queue: Vec<u128> = Vec::with_capacity(hint);
        let id = packer.pack(&layout.identity_bytes());
        seen.insert(id);
        queue.push(id);
        let mut i = 0;
        while i < queue.len() {
            packer.unpack(queue[i], &mut current);
            for g in &gens {
                layout.compose_with(&current, g, &mut product, &mut scratch);
                let key = packer.pack(&product);
                if !seen.insert(key) {
                    continue;
                }
                if queue.len() as u64 >= cap {
                    return Err(capacity_error(queue.len()));
                }
                queue.push(key);
            }
            i += 1;
        }
        drop(seen);
        queue.sort_unstable();
        return Ok(ElementSet::from_sorted_keys(
            layout.clone(),
            &packer,
            &queue,
        ));
    }

    let mut arena = layout.identity_bytes();
    arena.reserve(hint * stride);
    let mut table: HashTable<u32> = HashTable::with_capacity(hint);
    table.insert_unique(hasher.hash_one(&arena[..]), 0, |_| unreachable!());
    let mut count = 1usize;
    let mut i = 0;
    while i < count {
        current.copy_from_slice(&arena[i * stride..(i + 1) * stride]);
        for g in &gens {
            layout.compose_with(&current, g, &mut product, &mut scratch);
            let hash = hasher.hash_one(&product[..]);
            let found = table
                .find(hash, |&j| {
                    arena[j as usize * stride..(j as usize + 1) * stride] == product[..]
                })
                .is_some();
            if found {
                continue;
            }
            if count as u64 >= cap {
                return Err(capacity_error(count));
            }
            arena.extend_from_slice(&product);
            let arena_ref = &arena;
            table.insert_unique(hash, count as u32, |&j| {
                hasher.hash_one(&arena_ref[j as usize * stride..(j as usize + 1) * stride])
            });
            count += 1;
        }
        i += 1;
    }
    drop(table);
    Ok(ElementSet::from_unsorted(layout.clone(), arena, count))
}

/// Where a rigid stabilizer came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RistSource {
    /// Filtered out of the finite quotient `π_k(G)`.
    FiniteQuotient,
    /// Generated by the projections of words declared in the definition,
    /// i.e. a subgroup of `π_k(rist_G(v))`.
    Metadata,
}

impl RistSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RistSource::FiniteQuotient => "finite-quotient",
            RistSource::Metadata => "metadata",
        }
    }
}

/// A subgroup of a realized quotient, held as its full element set.
#[derive(Clone, Debug)]
pub struct Subgroup {
    label: String,
    source: Option<RistSource>,
    elements: ElementSet,
}

impl Subgroup {
    pub fn new(label: impl Into<String>, elements: ElementSet) -> Subgroup {
        Subgroup {
            label: label.into(),
            source: None,
            elements,
        }
    }

    /// The subgroup generated by `gens`.
    pub fn generated(
        label: impl Into<String>,
        shape: &TreeShape,
        gens: &[Portrait],
        cap: u64,
    ) -> Result<Subgroup> {
        let layout = Layout::new(shape)?;
        let raw: Vec<Vec<u8>> = gens
            .iter()
            .map(|g| {
                if g.shape() == shape {
                    Ok(g.encoding().to_vec())
                } else {
                    Err(Error::ShapeMismatch(format!("{} vs {shape}", g.shape())))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Subgroup::new(label, generate(&layout, &raw, cap, None)?))
    }

    pub fn with_source(mut self, source: RistSource) -> Subgroup {
        self.source = Some(source);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> Option<RistSource> {
        self.source
    }

    pub fn elements(&self) -> &ElementSet {
        &self.elements
    }

    pub fn order(&self) -> u128 {
        self.elements.len() as u128
    }

    pub fn contains(&self, g: &Portrait) -> bool {
        self.elements.contains(g)
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.is_trivial()
    }

    /// Orbits of this subgroup on level `n`.
    pub fn orbits(&self, n: usize) -> Result<Vec<Vec<Vertex>>> {
        let gens: Vec<Portrait> = self.elements.iter().collect();
        orbits_of(self.elements.shape(), &gens, n)
    }
}

/// `{ g|_v^j : g ∈ set }`, deduplicated.
pub fn section_set(set: &ElementSet, v: &Vertex, j: usize) -> Result<ElementSet> {
    let positions = set.layout.section_positions(v, j)?;
    let shape = set.shape().subtree_shape(v)?.truncate(j)?;
    let layout = Layout::new(&shape)?;
    let mut data = Vec::with_capacity(set.len() * positions.len());
    let mut buf = Vec::with_capacity(positions.len());
    for x in set.raw_iter() {
        gather(x, &positions, &mut buf);
        data.extend_from_slice(&buf);
    }
    Ok(ElementSet::from_unsorted(layout, data, set.len()))
}

/// Orbit partition of level `n` under the group generated by `gens`. Orbits
/// are sorted, and listed by their least vertex.
pub fn orbits_of(shape: &TreeShape, gens: &[Portrait], n: usize) -> Result<Vec<Vec<Vertex>>> {
    let vertices = shape.vertices_at_level(n)?;
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in gens {
        if g.shape() != shape {
            return Err(Error::ShapeMismatch(format!("{} vs {shape}", g.shape())));
        }
        for (i, v) in vertices.iter().enumerate() {
            let j = shape.rank(&g.apply(v)?)?;
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<Vertex>> = Vec::new();
    let mut slot = alloc::vec![usize::MAX; vertices.len()];
    for (i, v) in vertices.into_iter().enumerate() {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(v);
    }
    Ok(groups)
}

/// `π_k(G)`, realized from projected generators.
pub struct FiniteQuotient {
    label: String,
    generators: Vec<Portrait>,
    layout: Arc<Layout>,
    elements: Option<ElementSet>,
    chain: Option<StabChain>,
}

impl FiniteQuotient {
    /// Enumerates `π_k(G)` by breadth-first closure. Fails with
    /// [`Error::Capacity`] as soon as the group is known to exceed `cap`.
    pub fn enumerate(def: &GroupDef, k: usize, cap: u64) -> Result<FiniteQuotient> {
        let gens = project_generators(def, k);
        FiniteQuotient::from_generators(def.name(), &def.shape(k), gens, cap)
    }

    /// Builds only the stabilizer chain of `π_k(G)` over the leaf action.
    pub fn stab_chain(def: &GroupDef, k: usize) -> Result<FiniteQuotient> {
        let shape = def.shape(k);
        let layout = Layout::new(&shape)?;
        let generators = project_generators(def, k);
        let chain = build_chain(&layout, &generators);
        Ok(FiniteQuotient {
            label: def.name().to_string(),
            generators,
            layout,
            elements: None,
            chain: Some(chain),
        })
    }

    /// Enumerates the group generated by `generators`.
    pub fn from_generators(
        label: &str,
        shape: &TreeShape,
        generators: Vec<Portrait>,
        cap: u64,
    ) -> Result<FiniteQuotient> {
        if cap == 0 {
            return Err(Error::Precondition("element cap must be at least 1".into()));
        }
        let layout = Layout::new(shape)?;
        for g in &generators {
            if g.shape() != shape {
                return Err(Error::ShapeMismatch(format!("{} vs {shape}", g.shape())));
            }
        }
        let chain =
            (layout.leaf_count() <= CHAIN_MAX_LEAVES).then(|| build_chain(&layout, &generators));
        if let Some(chain) = &chain {
            if chain.order() > cap as u128 {
                return Err(Error::Capacity {
                    reached: chain.order(),
                    cap,
                });
            }
        }
        let raw: Vec<Vec<u8>> = generators.iter().map(|g| g.encoding().to_vec()).collect();
        let hint = chain.as_ref().map(|c| c.order().min(cap as u128) as usize);
        let elements = generate(&layout, &raw, cap, hint)?;
        if let Some(chain) = &chain {
            if chain.order() != elements.len() as u128 {
                return Err(Error::InvariantViolation(format!(
                    "stabilizer chain order {} differs from enumeration {}",
                    chain.order(),
                    elements.len()
                )));
            }
        }
        Ok(FiniteQuotient {
            label: label.to_string(),
            generators,
            layout,
            elements: Some(elements),
            chain,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> &TreeShape {
        self.layout.shape()
    }

    pub fn depth(&self) -> usize {
        self.shape().depth()
    }

    pub fn generators(&self) -> &[Portrait] {
        &self.generators
    }

    /// `"enumerated"` or `"stab-chain"`.
    pub fn representation(&self) -> &'static str {
        if self.elements.is_some() {
            "enumerated"
        } else {
            "stab-chain"
        }
    }

    pub fn order(&self) -> u128 {
        match (&self.elements, &self.chain) {
            (Some(e), _) => e.len() as u128,
            (None, Some(c)) => c.order(),
            (None, None) => unreachable!("quotient without a representation"),
        }
    }

    pub fn chain(&self) -> Option<&StabChain> {
        self.chain.as_ref()
    }

    pub fn elements(&self) -> Result<&ElementSet> {
        self.elements.as_ref().ok_or_else(|| {
            Error::Unsupported(format!(
                "{} at depth {} is not enumerated",
                self.label,
                self.depth()
            ))
        })
    }

    pub fn contains(&self, g: &Portrait) -> bool {
        if g.shape() != self.shape() {
            return false;
        }
        match (&self.elements, &self.chain) {
            (Some(e), _) => e.contains(g),
            (None, Some(c)) => c.contains(&g.leaf_permutation()),
            (None, None) => false,
        }
    }

    /// The whole quotient as a subgroup.
    pub fn as_subgroup(&self) -> Result<Subgroup> {
        Ok(Subgroup::new(
            format!("pi_{}", self.depth()),
            self.elements()?.clone(),
        ))
    }

    /// `count` exactly uniform elements, reproducible from `seed`.
    pub fn sample_uniform(&self, count: usize, seed: u64) -> Result<Vec<Portrait>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match (&self.chain, &self.elements) {
            (Some(chain), _) => (0..count)
                .map(|_| {
                    Portrait::from_leaf_permutation(self.shape(), &chain.random_element(&mut rng))
                })
                .collect(),
            (None, Some(e)) => Ok((0..count)
                .map(|_| e.get(rng.gen_range(0..e.len())))
                .collect()),
            (None, None) => unreachable!("quotient without a representation"),
        }
    }

    /// `St(n)`: elements acting trivially on level `n`.
    pub fn level_stabilizer(&self, n: usize) -> Result<Subgroup> {
        self.check_level(n, 1)?;
        let set = self.elements()?;
        let positions = self.layout.section_positions(&Vertex::root(), n)?;
        let id = self.layout.identity_bytes();
        let st = set.filter(|x| positions.iter().all(|&p| x[p as usize] == id[p as usize]));
        Ok(Subgroup::new(format!("St({n})"), st))
    }

    /// Rigid stabilizer of `v` in the finite quotient: elements fixing every
    /// vertex outside the subtree at `v`.
    pub fn rigid_stabilizer(&self, v: &Vertex) -> Result<Subgroup> {
        self.shape().check_vertex(v)?;
        if v.level() == 0 || v.level() >= self.depth() {
            return Err(Error::OutOfRange {
                what: "rigid stabilizer level",
                value: v.level(),
                max: self.depth().saturating_sub(1),
            });
        }
        let set = self.elements()?;
        let positions = self.layout.outside_positions(v)?;
        let id = self.layout.identity_bytes();
        let rist = set.filter(|x| positions.iter().all(|&p| x[p as usize] == id[p as usize]));
        Ok(Subgroup::new(format!("rist({v})"), rist).with_source(RistSource::FiniteQuotient))
    }

    /// `RiSt(n)`, the product of the rigid stabilizers of level `n`.
    /// Its order is checked against the product of the factor orders.
    pub fn rigid_level_stabilizer(&self, n: usize) -> Result<Subgroup> {
        self.check_level(n, 1)?;
        if n >= self.depth() {
            return Err(Error::OutOfRange {
                what: "rigid stabilizer level",
                value: n,
                max: self.depth().saturating_sub(1),
            });
        }
        let rest = self.depth() - n;
        let vertices = self.shape().vertices_at_level(n)?;
        let mut factor_sections = Vec::with_capacity(vertices.len());
        let mut expected: u128 = 1;
        for v in &vertices {
            let rist = self.rigid_stabilizer(v)?;
            expected = expected
                .checked_mul(rist.order())
                .ok_or(Error::Overflow("rigid level stabilizer order"))?;
            let secs = section_set(rist.elements(), v, rest)?;
            factor_sections.push((self.layout.section_positions(v, rest)?, secs));
        }
        let st = self.level_stabilizer(n)?;
        let mut buf = Vec::new();
        let product = st.elements().filter(|x| {
            factor_sections.iter().all(|(positions, secs)| {
                gather(x, positions, &mut buf);
                secs.index_of_raw(&buf).is_some()
            })
        });
        if product.len() as u128 != expected {
            return Err(Error::InvariantViolation(format!(
                "RiSt({n}) has {} elements, factors multiply to {expected}",
                product.len()
            )));
        }
        Ok(Subgroup::new(format!("RiSt({n})"), product).with_source(RistSource::FiniteQuotient))
    }

    /// Orbits of the generators on level `n`.
    pub fn orbits(&self, n: usize) -> Result<Vec<Vec<Vertex>>> {
        self.check_level(n, 0)?;
        orbits_of(self.shape(), &self.generators, n)
    }

    /// A single orbit on every level `1..=k`.
    pub fn is_level_transitive(&self) -> bool {
        (1..=self.depth()).all(|n| self.orbits(n).map(|o| o.len() == 1).unwrap_or(false))
    }

    /// `RiSt(n)` is nontrivial.
    pub fn is_weakly_branch_at(&self, n: usize) -> Result<bool> {
        Ok(!self.rigid_level_stabilizer(n)?.is_trivial())
    }

    /// Level-transitive with nontrivial `RiSt(n)`, together with the index
    /// `|π_k(G) : RiSt(n)|`.
    pub fn is_branch_at(&self, n: usize) -> Result<(bool, u128)> {
        let rist = self.rigid_level_stabilizer(n)?;
        let index = self.index(&rist)?;
        Ok((self.is_level_transitive() && !rist.is_trivial(), index))
    }

    /// `|Q : H|`, after checking that `H ⊆ Q` and that the orders divide.
    pub fn index(&self, h: &Subgroup) -> Result<u128> {
        let set = self.elements()?;
        if !h.elements().is_subset_of(set) {
            return Err(Error::InvariantViolation(format!(
                "{} is not contained in {}",
                h.label(),
                self.label
            )));
        }
        let (q, o) = (self.order(), h.order());
        if o == 0 || q % o != 0 {
            return Err(Error::InvariantViolation(format!(
                "|{}| = {o} does not divide {q}",
                h.label()
            )));
        }
        Ok(q / o)
    }

    /// Smallest normal subgroup of `Q` containing `H`.
    pub fn normal_closure(&self, h: &Subgroup, cap: u64) -> Result<Subgroup> {
        let mut gens: Vec<Vec<u8>> = Vec::new();
        let mut current = generate(&self.layout, &gens, cap, None)?;
        let stride = self.layout.encoded_len();
        let inverses: Vec<Portrait> = self.generators.iter().map(|g| g.inverse()).collect();
        let mut pending: Vec<Vec<u8>> = h.elements().raw_iter().map(|x| x.to_vec()).collect();
        let mut tmp = alloc::vec![0u8; stride];
        let mut conj = alloc::vec![0u8; stride];
        while let Some(x) = pending.pop() {
            if current.index_of_raw(&x).is_some() {
                continue;
            }
            gens.push(x);
            current = generate(&self.layout, &gens, cap, None)?;
            for y in current.raw_iter() {
                for (g, gi) in self.generators.iter().zip(&inverses) {
                    self.layout.compose_raw(g.encoding(), y, &mut tmp);
                    self.layout.compose_raw(&tmp, gi.encoding(), &mut conj);
                    if current.index_of_raw(&conj).is_none() {
                        pending.push(conj.clone());
                    }
                }
            }
        }
        Ok(Subgroup::new(format!("ncl({})", h.label()), current))
    }

    fn check_level(&self, n: usize, min: usize) -> Result<()> {
        if n < min || n > self.depth() {
            return Err(Error::OutOfRange {
                what: "level",
                value: n,
                max: self.depth(),
            });
        }
        Ok(())
    }
}

impl core::fmt::Debug for FiniteQuotient {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "FiniteQuotient({}, k={}, {}, order {})",
            self.label,
            self.depth(),
            self.representation(),
            self.order()
        )
    }
}

fn project_generators(def: &GroupDef, k: usize) -> Vec<Portrait> {
    let mut projector = Projector::new(def);
    (0..def.generators().len())
        .map(|i| projector.project(i, k))
        .collect()
}

fn build_chain(layout: &Layout, generators: &[Portrait]) -> StabChain {
    let perms: Vec<_> = generators.iter().map(|g| g.leaf_permutation()).collect();
    StabChain::new(layout.leaf_count(), &perms)
}

/// Projections of the words declared for `rist_G(v)`, each checked to act
/// trivially outside the subtree at `v`: rigid elements of `G` stay rigid in
/// every quotient.
fn rist_generators(
    def: &GroupDef,
    projector: &mut Projector,
    layout: &Layout,
    v: &Vertex,
    k: usize,
) -> Result<Vec<Portrait>> {
    let words = def.rist_words(v).ok_or_else(|| {
        Error::Unsupported(format!(
            "{} declares no rigid stabilizer words for {v}",
            def.name()
        ))
    })?;
    let outside = if v.level() < k {
        layout.outside_positions(v)?
    } else {
        Vec::new()
    };
    let id = layout.identity_bytes();
    words
        .iter()
        .map(|w| {
            let g = projector.evaluate(w, k);
            let bytes = g.encoding();
            if outside.iter().any(|&p| bytes[p as usize] != id[p as usize]) {
                return Err(Error::InvariantViolation(format!(
                    "declared rist({v}) word {} moves vertices outside {v} at depth {k}",
                    def.format_word(w)
                )));
            }
            Ok(g)
        })
        .collect()
}

/// The subgroup of `π_k(G)` generated by the projections of the words the
/// definition declares for `rist_G(v)`.
pub fn profinite_rist_projection(
    def: &GroupDef,
    v: &Vertex,
    k: usize,
    cap: u64,
) -> Result<Subgroup> {
    let shape = def.shape(k);
    let layout = Layout::new(&shape)?;
    let gens = rist_generators(def, &mut Projector::new(def), &layout, v, k)?;
    Ok(
        Subgroup::generated(format!("rist({v})"), &shape, &gens, cap)?
            .with_source(RistSource::Metadata),
    )
}

/// `RiSt(n)` generated from declared rigid stabilizer words at every vertex
/// of level `n`.
pub fn profinite_rist_level_projection(
    def: &GroupDef,
    n: usize,
    k: usize,
    cap: u64,
) -> Result<Subgroup> {
    let shape = def.shape(k);
    let layout = Layout::new(&shape)?;
    let mut projector = Projector::new(def);
    let mut gens = Vec::new();
    for v in shape.vertices_at_level(n)? {
        gens.extend(rist_generators(def, &mut projector, &layout, &v, k)?);
    }
    Ok(
        Subgroup::generated(format!("RiSt({n})"), &shape, &gens, cap)?
            .with_source(RistSource::Metadata),
    )
}
