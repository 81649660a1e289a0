//! Haar measure on finite quotients: cylinder measures, torsion censuses,
//! density curves, the counting bounds behind them, and Monte-Carlo
//! estimates.
//!
//! Every measure is an exact [`Rational`]; floats only appear in sampling
//! estimates and in the convenience column of reports.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::portrait::{gather, Layout, Portrait};
use crate::quotient::{
    profinite_rist_level_projection, section_set, ElementSet, FiniteQuotient, RistSource, Subgroup,
};
use crate::recursion::GroupDef;
use crate::ring::AbstractSemidirectQuotient;
use crate::tree::Vertex;

pub type Rational = Ratio<u128>;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

pub fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// What a [`DensityRecord`] counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusKind {
    /// `#P_{r,n}(k)`: order `r` at depth `k` and already at depth `n`.
    Exact,
    /// Elements of order at most `r`.
    Capped,
}

impl CensusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CensusKind::Exact => "P",
            CensusKind::Capped => "capped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityRecord {
    pub kind: CensusKind,
    pub r: u64,
    /// Truncation level; `0` for capped censuses.
    pub n: usize,
    pub k: usize,
    pub count: u128,
    pub group_order: u128,
    pub ratio: Rational,
    /// Upper bound on `count`, divided by `group_order`.
    pub bound_upper: Option<Rational>,
    /// `α(n) / |π_{k-n}(RiSt(n)_{v₀})|`.
    pub bound_alpha: Option<Rational>,
    pub rist_source: Option<RistSource>,
}

impl DensityRecord {
    pub fn new(
        kind: CensusKind,
        r: u64,
        n: usize,
        k: usize,
        count: u128,
        group_order: u128,
    ) -> Self {
        DensityRecord {
            kind,
            r,
            n,
            k,
            count,
            group_order,
            ratio: Ratio::new(count, group_order),
            bound_upper: None,
            bound_alpha: None,
            rist_source: None,
        }
    }
}

/// Histogram of element orders over `π_k(G)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionProfile {
    pub depth: usize,
    pub counts: BTreeMap<u64, u64>,
}

impl TorsionProfile {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Exponent of the group: the lcm of all orders.
    pub fn exponent(&self) -> u64 {
        self.counts.keys().fold(1, |acc, &o| acc.lcm(&o))
    }
}

/// Runs `f` over every element with a per-worker scratch buffer and folds
/// the results with `merge`. Parallel under the `parallel` feature; the
/// result does not depend on the schedule as long as `merge` is
/// commutative and associative.
fn fold_elements<T, F, M>(set: &ElementSet, init: fn() -> T, f: F, merge: M) -> T
where
    T: Send,
    F: Fn(&mut T, &[u8], &mut Vec<u32>) + Sync,
    M: Fn(T, T) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..set.len())
            .into_par_iter()
            .fold(
                || (init(), Vec::new()),
                |(mut acc, mut scratch), i| {
                    f(&mut acc, set.raw(i), &mut scratch);
                    (acc, scratch)
                },
            )
            .map(|(acc, _)| acc)
            .reduce(init, &merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &merge;
        let mut acc = init();
        let mut scratch = Vec::new();
        for x in set.raw_iter() {
            f(&mut acc, x, &mut scratch);
        }
        acc
    }
}

pub fn torsion_profile(q: &FiniteQuotient) -> Result<TorsionProfile> {
    let set = q.elements()?;
    let layout = set.layout().clone();
    let counts = fold_elements(
        set,
        BTreeMap::new,
        |acc: &mut BTreeMap<u64, u64>, x, scratch| {
            *acc.entry(layout.order_raw(x, scratch)).or_insert(0) += 1;
        },
        |mut a, b| {
            for (o, c) in b {
                *a.entry(o).or_insert(0) += c;
            }
            a
        },
    );
    Ok(TorsionProfile {
        depth: q.depth(),
        counts,
    })
}

/// `#P_{r,n}(k)`: elements whose order is `r` and whose depth-`n`
/// truncation also has order `r`.
pub fn census_p(q: &FiniteQuotient, r: u64, n: usize) -> Result<u128> {
    if n == 0 || n > q.depth() {
        return Err(Error::OutOfRange {
            what: "census level",
            value: n,
            max: q.depth(),
        });
    }
    let set = q.elements()?;
    let layout = set.layout().clone();
    let top = Layout::new(&q.shape().truncate(n)?)?;
    let positions = layout.section_positions(&Vertex::root(), n)?;
    let count = fold_elements(
        set,
        || (0u128, Vec::new()),
        |acc: &mut (u128, Vec<u8>), x, scratch| {
            if layout.order_raw(x, scratch) == r {
                gather(x, &positions, &mut acc.1);
                if top.order_raw(&acc.1, scratch) == r {
                    acc.0 += 1;
                }
            }
        },
        |a, b| (a.0 + b.0, a.1),
    );
    Ok(count.0)
}

/// Number of elements of order at most `order_cap`.
pub fn census_capped(q: &FiniteQuotient, order_cap: u64) -> Result<u128> {
    let set = q.elements()?;
    let layout = set.layout().clone();
    Ok(fold_elements(
        set,
        || 0u128,
        |acc: &mut u128, x, scratch| {
            if layout.order_raw(x, scratch) <= order_cap {
                *acc += 1;
            }
        },
        |a, b| a + b,
    ))
}

/// Sizes of the fibers of `π_k(G) → π_j(G)`, in the order of the image.
pub fn fiber_sizes(q: &FiniteQuotient, j: usize) -> Result<Vec<u64>> {
    let set = q.elements()?;
    let image = section_set(set, &Vertex::root(), j)?;
    let positions = set.layout().section_positions(&Vertex::root(), j)?;
    let mut sizes = alloc::vec![0u64; image.len()];
    let mut buf = Vec::new();
    for x in set.raw_iter() {
        gather(x, &positions, &mut buf);
        let i = image
            .index_of_raw(&buf)
            .expect("truncation lies in the image");
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Haar measure of the cylinder over `x ⊆ π_j(G)`, computed in `π_k(G)`.
/// Checks that the preimage of `x` has `#x · |π_k| / |π_j|` elements.
pub fn haar_of_cylinder(q: &FiniteQuotient, x: &ElementSet, j: usize) -> Result<Rational> {
    let set = q.elements()?;
    let image = section_set(set, &Vertex::root(), j)?;
    if !x.is_subset_of(&image) {
        return Err(Error::Precondition(format!(
            "cylinder base is not contained in the depth-{j} image"
        )));
    }
    let positions = set.layout().section_positions(&Vertex::root(), j)?;
    let mut buf = Vec::new();
    let preimage = set
        .raw_iter()
        .filter(|g| {
            gather(g, &positions, &mut buf);
            x.index_of_raw(&buf).is_some()
        })
        .count() as u128;
    let (qk, qj) = (set.len() as u128, image.len() as u128);
    if preimage * qj != x.len() as u128 * qk {
        return Err(Error::InvariantViolation(format!(
            "preimage has {preimage} elements, expected {} * {qk} / {qj}",
            x.len()
        )));
    }
    Ok(Ratio::new(x.len() as u128, qj))
}

/// `#P_{r,n}(k) / |π_k|` for each `k` in `ks`. Fails with an invariant
/// violation if the ratios ever increase.
pub fn density_curve(
    def: &GroupDef,
    r: u64,
    n: usize,
    ks: RangeInclusive<usize>,
    cap: u64,
) -> Result<Vec<DensityRecord>> {
    if r == 0 {
        return Err(Error::Precondition("order must be at least 1".into()));
    }
    let mut out: Vec<DensityRecord> = Vec::new();
    for k in ks {
        if k < n {
            return Err(Error::Precondition(format!("depth {k} is below level {n}")));
        }
        let q = FiniteQuotient::enumerate(def, k, cap)?;
        let count = census_p(&q, r, n)?;
        out.push(DensityRecord::new(
            CensusKind::Exact,
            r,
            n,
            k,
            count,
            q.order(),
        ));
    }
    check_monotone(&out)?;
    Ok(out)
}

/// Fraction of elements of order at most `order_cap` for each `k`.
pub fn capped_density_curve(
    def: &GroupDef,
    order_cap: u64,
    ks: RangeInclusive<usize>,
    cap: u64,
) -> Result<Vec<DensityRecord>> {
    let mut out = Vec::new();
    for k in ks {
        let q = FiniteQuotient::enumerate(def, k, cap)?;
        let count = census_capped(&q, order_cap)?;
        out.push(DensityRecord::new(
            CensusKind::Capped,
            order_cap,
            0,
            k,
            count,
            q.order(),
        ));
    }
    check_monotone(&out)?;
    Ok(out)
}

/// Capped censuses of the semidirect quotients `A/p^k A ⋊ C_p`.
pub fn abstract_density_curve(
    p: u64,
    order_cap: u64,
    ks: RangeInclusive<usize>,
    cap: u64,
) -> Result<Vec<DensityRecord>> {
    let mut out = Vec::new();
    for k in ks {
        let q = AbstractSemidirectQuotient::new(p, k as u32, cap)?;
        let (hits, _) = q.capped_fraction(order_cap);
        out.push(DensityRecord::new(
            CensusKind::Capped,
            order_cap,
            0,
            k,
            hits as u128,
            q.order(),
        ));
    }
    check_monotone(&out)?;
    Ok(out)
}

/// Fails with an invariant violation if the ratios ever increase.
pub fn check_monotone(records: &[DensityRecord]) -> Result<()> {
    for w in records.windows(2) {
        if w[1].ratio > w[0].ratio {
            return Err(Error::InvariantViolation(format!(
                "density rose from {} at k={} to {} at k={}",
                w[0].ratio, w[0].k, w[1].ratio, w[1].k
            )));
        }
    }
    Ok(())
}

/// All quantities of the counting argument for one `(r, n, k)`.
#[derive(Clone, Debug)]
pub struct BoundLedger {
    pub record: DensityRecord,
    /// `|π_n(G)|`.
    pub top_order: u128,
    pub level_size: usize,
    /// `|π_{k-n}(G_v)|` for each level-`n` vertex, in canonical order.
    pub section_sizes: Vec<u128>,
    /// `|π_n| · max_{v₀} Π_{v≠v₀} |π_{k-n}(G_v)|`.
    pub upper: u128,
    pub upper_holds: bool,
    pub rist_label: alloc::string::String,
    pub rist_order: u128,
    /// `|π_{k-n}(RiSt(n)_w)|` for each level-`n` vertex.
    pub rist_section_sizes: Vec<u128>,
    /// `Π_w |π_{k-n}(RiSt(n)_w)|`.
    pub lower: u128,
    pub lower_holds: bool,
    pub index: u128,
    /// `|π_n| · (N_n · index)^(N_n - 1)`.
    pub alpha: u128,
    /// Vertex minimizing the rigid section size, used for the final bound.
    pub alpha_vertex: Vertex,
    pub alpha_holds: bool,
    /// The final bound is only enforced for the metadata source.
    pub alpha_asserted: bool,
}

fn checked_product(values: impl IntoIterator<Item = u128>, what: &'static str) -> Result<u128> {
    values.into_iter().try_fold(1u128, |acc, x| {
        acc.checked_mul(x).ok_or(Error::Overflow(what))
    })
}

fn rigid_level(
    def: &GroupDef,
    q: &FiniteQuotient,
    n: usize,
    source: RistSource,
    cap: u64,
) -> Result<Subgroup> {
    if n == q.depth() {
        let trivial = ElementSet::from_portraits(q.shape(), &[Portrait::identity(q.shape())])?;
        return Ok(Subgroup::new(format!("RiSt({n})"), trivial).with_source(source));
    }
    match source {
        RistSource::FiniteQuotient => q.rigid_level_stabilizer(n),
        RistSource::Metadata => profinite_rist_level_projection(def, n, q.depth(), cap),
    }
}

/// Computes the upper bound, the lower bound and the `α(n)` bound for
/// `#P_{r,n}(k)` in `q = π_k(G)`, using the given rigid stabilizer source.
/// A failing upper or lower bound, or a failing `α(n)` bound with the
/// metadata source, is an invariant violation.
pub fn bound_ledger(
    def: &GroupDef,
    q: &FiniteQuotient,
    r: u64,
    n: usize,
    source: RistSource,
    cap: u64,
) -> Result<BoundLedger> {
    let k = q.depth();
    let count = census_p(q, r, n)?;
    let set = q.elements()?;
    let rest = k - n;
    let vertices = q.shape().vertices_at_level(n)?;
    let level_size = vertices.len();
    let top_order = section_set(set, &Vertex::root(), n)?.len() as u128;
    let section_sizes = vertices
        .iter()
        .map(|v| Ok(section_set(set, v, rest)?.len() as u128))
        .collect::<Result<Vec<u128>>>()?;

    let mut best = 0u128;
    for skip in 0..level_size {
        let others = section_sizes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &s)| s);
        best = best.max(checked_product(others, "upper bound")?);
    }
    let upper = top_order
        .checked_mul(best)
        .ok_or(Error::Overflow("upper bound"))?;
    let upper_holds = count <= upper;
    if !upper_holds {
        return Err(Error::InvariantViolation(format!(
            "#P_{{{r},{n}}}({k}) = {count} exceeds the upper bound {upper}"
        )));
    }

    let h = rigid_level(def, q, n, source, cap)?;
    let rist_section_sizes = vertices
        .iter()
        .map(|v| Ok(section_set(h.elements(), v, rest)?.len() as u128))
        .collect::<Result<Vec<u128>>>()?;
    let lower = checked_product(rist_section_sizes.iter().copied(), "lower bound")?;
    let lower_holds = q.order() >= lower;
    if !lower_holds {
        return Err(Error::InvariantViolation(format!(
            "|pi_{k}| = {} is below the rigid section product {lower}",
            q.order()
        )));
    }

    let index = q.index(&h)?;
    let base = (level_size as u128)
        .checked_mul(index)
        .ok_or(Error::Overflow("alpha"))?;
    let power = checked_product(core::iter::repeat_n(base, level_size - 1), "alpha")?;
    let alpha = top_order
        .checked_mul(power)
        .ok_or(Error::Overflow("alpha"))?;
    let (min_pos, &min_size) = rist_section_sizes
        .iter()
        .enumerate()
        .min_by_key(|&(_, s)| *s)
        .expect("levels are nonempty");
    let bound_alpha = Ratio::new(alpha, min_size);
    let mut record = DensityRecord::new(CensusKind::Exact, r, n, k, count, q.order());
    let alpha_holds = record.ratio <= bound_alpha;
    let alpha_asserted = source == RistSource::Metadata;
    if alpha_asserted && !alpha_holds {
        return Err(Error::InvariantViolation(format!(
            "density {} exceeds alpha bound {bound_alpha}",
            record.ratio
        )));
    }
    record.bound_upper = Some(Ratio::new(upper, q.order()));
    record.bound_alpha = Some(bound_alpha);
    record.rist_source = Some(source);
    Ok(BoundLedger {
        record,
        top_order,
        level_size,
        section_sizes,
        upper,
        upper_holds,
        rist_label: h.label().into(),
        rist_order: h.order(),
        rist_section_sizes,
        lower,
        lower_holds,
        index,
        alpha,
        alpha_vertex: vertices[min_pos].clone(),
        alpha_holds,
        alpha_asserted,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitSpectrum {
    /// Orbit sizes on the bottom level, orbits listed by least vertex.
    pub sizes: Vec<u64>,
    pub max: u64,
    pub lcm: u64,
    /// Least vertex of the first orbit of maximal size.
    pub witness: Vertex,
}

/// Orbits of `⟨τ⟩` on the bottom level of `τ`'s tree. When every orbit has
/// prime-power length for one prime, the maximum, the lcm and `o(τ)` must
/// agree, and this is checked.
pub fn orbit_spectrum(tau: &Portrait) -> Result<OrbitSpectrum> {
    let perm = tau.leaf_permutation();
    let shape = tau.shape();
    let mut sizes = Vec::new();
    let mut firsts = Vec::new();
    let mut seen = alloc::vec![false; perm.degree()];
    for start in 0..perm.degree() {
        if seen[start] {
            continue;
        }
        let mut len = 0u64;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = perm.apply(x);
            len += 1;
        }
        sizes.push(len);
        firsts.push(start);
    }
    let max = sizes.iter().copied().max().unwrap_or(1);
    let lcm = sizes.iter().fold(1u64, |acc, &s| acc.lcm(&s));
    let pos = sizes.iter().position(|&s| s == max).unwrap_or(0);
    let witness = shape.vertex_at(shape.depth(), firsts.get(pos).copied().unwrap_or(0));
    if common_prime(&sizes).is_some() && !(max == lcm && lcm == tau.order()) {
        return Err(Error::InvariantViolation(format!(
            "orbit sizes {sizes:?} of a p-element: max {max}, lcm {lcm}, order {}",
            tau.order()
        )));
    }
    Ok(OrbitSpectrum {
        sizes,
        max,
        lcm,
        witness,
    })
}

/// The prime `p` if every value is a power of `p` (1 included). `Some(1)`
/// when all values are 1.
fn common_prime(values: &[u64]) -> Option<u64> {
    let mut prime = 1;
    for &v in values {
        if v <= 1 {
            continue;
        }
        let p = (2..=v).find(|d| v % d == 0).expect("v > 1 has a factor");
        let mut w = v;
        while w % p == 0 {
            w /= p;
        }
        if w != 1 || (prime != 1 && prime != p) {
            return None;
        }
        prime = p;
    }
    Some(prime)
}

/// For `h` of order `r`, checks that for every `v ∈ L_n` the product
/// `h|_{τ^{r-1}(v)} ⋯ h|_{τ(v)} h|_v` is trivial, where `τ = h|_∅^n`.
pub fn section_product_check(h: &Portrait, r: u64, n: usize) -> Result<bool> {
    if h.order() != r {
        return Err(Error::Precondition(format!(
            "element has order {}, not {r}",
            h.order()
        )));
    }
    let (sections, top) = h.psi_decompose(n)?;
    section_product_check_parts(&sections, &top, r)
}

/// Same check on an explicit decomposition `(h|_{v_1}, …, h|_{v_N}) τ`.
pub fn section_product_check_parts(sections: &[Portrait], top: &Portrait, r: u64) -> Result<bool> {
    let tau = top.leaf_permutation();
    if tau.degree() != sections.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} sections for {} vertices",
            sections.len(),
            tau.degree()
        )));
    }
    for start in 0..sections.len() {
        let mut acc = sections[start].clone();
        let mut u = start;
        for _ in 1..r {
            u = tau.apply(u);
            acc = sections[u].compose(&acc)?;
        }
        if !acc.is_identity() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A Monte-Carlo estimate of the fraction of elements of order at most
/// `order_cap`, with a 95% Wilson score interval.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionEstimate {
    pub k: usize,
    pub order_cap: u64,
    pub samples: u64,
    pub hits: u64,
    pub seed: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TorsionEstimate {
    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Samples `π_k(G)` uniformly through its stabilizer chain and counts
/// elements of order at most `order_cap`.
pub fn estimate_torsion_density(
    def: &GroupDef,
    k: usize,
    order_cap: u64,
    samples: u64,
    seed: u64,
) -> Result<TorsionEstimate> {
    let q = FiniteQuotient::stab_chain(def, k)?;
    let chain = q.chain().expect("stab_chain builds a chain");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| chain.random_element(&mut rng).order() <= order_cap)
        .count() as u64;
    let (ci_low, ci_high) = wilson_interval(hits, samples, Z_95);
    Ok(TorsionEstimate {
        k,
        order_cap,
        samples,
        hits,
        seed,
        estimate: if samples == 0 {
            0.0
        } else {
            hits as f64 / samples as f64
        },
        ci_low,
        ci_high,
    })
}

/// The same estimate for `A/p^k A ⋊ C_p`, drawing `(x, y)` uniformly.
pub fn estimate_abstract_torsion_density(
    q: &AbstractSemidirectQuotient,
    k: usize,
    order_cap: u64,
    samples: u64,
    seed: u64,
) -> TorsionEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| q.element_order(&q.random_element(&mut rng)) <= order_cap)
        .count() as u64;
    let (ci_low, ci_high) = wilson_interval(hits, samples, Z_95);
    TorsionEstimate {
        k,
        order_cap,
        samples,
        hits,
        seed,
        estimate: if samples == 0 {
            0.0
        } else {
            hits as f64 / samples as f64
        },
        ci_low,
        ci_high,
    }
}
