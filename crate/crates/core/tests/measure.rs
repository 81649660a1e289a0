use std::collections::BTreeMap;

use arbor_core::catalog::{self, full_aut, grigorchuk, gupta_sidki, odometer, paper_realization};
use arbor_core::measure::{
    abstract_density_curve, bound_ledger, census_capped, census_p, density_curve,
    estimate_torsion_density, fiber_sizes, haar_of_cylinder, orbit_spectrum, section_product_check,
    section_product_check_parts, to_f64, torsion_profile,
};
use arbor_core::quotient::{ElementSet, RistSource};
use arbor_core::recursion::project;
use arbor_core::ring::AbstractSemidirectQuotient;
use arbor_core::{Error, FiniteQuotient, GroupDef, Perm, Portrait, Rational, TreeShape, Vertex};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const CAP: u64 = 10_000_000;

fn q(def: &GroupDef, k: usize) -> FiniteQuotient {
    FiniteQuotient::enumerate(def, k, CAP).unwrap()
}

fn ratio(a: u128, b: u128) -> Rational {
    Rational::new(a, b)
}

#[test]
fn profiles() {
    let prof = torsion_profile(&q(&full_aut(2, 2).unwrap(), 2)).unwrap();
    assert_eq!(prof.counts, BTreeMap::from([(1, 1), (2, 5), (4, 2)]));
    assert_eq!(prof.exponent(), 4);

    let trivial = FiniteQuotient::from_generators(
        "trivial",
        &TreeShape::constant(2, 2).unwrap(),
        Vec::new(),
        CAP,
    )
    .unwrap();
    assert_eq!(
        torsion_profile(&trivial).unwrap().counts,
        BTreeMap::from([(1, 1)])
    );

    for k in 1..=4 {
        let g = q(&grigorchuk(), k);
        let prof = torsion_profile(&g).unwrap();
        assert_eq!(prof.total() as u128, g.order());
        assert!(prof
            .counts
            .keys()
            .all(|o| prof.exponent().is_multiple_of(*o)));
    }
}

#[test]
fn census_against_two_pass_filter() {
    let g = q(&grigorchuk(), 3);
    let elements: Vec<Portrait> = g.elements().unwrap().iter().collect();
    for r in [1, 2, 4, 8] {
        for n in 1..=3 {
            let order_r: Vec<&Portrait> = elements.iter().filter(|h| h.order() == r).collect();
            let expected = order_r
                .iter()
                .filter(|h| h.truncate(n).unwrap().order() == r)
                .count() as u128;
            assert_eq!(census_p(&g, r, n).unwrap(), expected, "r={r} n={n}");
        }
    }
    assert_eq!(census_p(&g, 1, 2).unwrap(), 1);
    assert!(census_p(&g, 2, 0).is_err());
    assert!(census_p(&g, 2, 4).is_err());

    let capped = elements.iter().filter(|h| h.order() <= 2).count() as u128;
    assert_eq!(census_capped(&g, 2).unwrap(), capped);
}

#[test]
fn cylinders() {
    let g = q(&grigorchuk(), 3);
    let shape2 = g.shape().truncate(2).unwrap();
    let id = ElementSet::from_portraits(&shape2, &[Portrait::identity(&shape2)]).unwrap();
    assert_eq!(haar_of_cylinder(&g, &id, 2).unwrap(), ratio(1, 8));

    let image =
        arbor_core::quotient::section_set(g.elements().unwrap(), &Vertex::root(), 2).unwrap();
    assert_eq!(haar_of_cylinder(&g, &image, 2).unwrap(), ratio(1, 1));

    assert_eq!(fiber_sizes(&g, 1).unwrap(), vec![64, 64]);
    for j in 0..=3 {
        let sizes = fiber_sizes(&g, j).unwrap();
        assert!(sizes.iter().all(|&s| s == sizes[0]));
    }

    // π_3(G) is all of Aut T^3; depth 4 is the first proper level.
    let g4 = q(&grigorchuk(), 4);
    let mut single_swaps = (0..4).flat_map(|level| {
        let shape = g4.shape().clone();
        shape
            .vertices_at_level(level)
            .unwrap()
            .into_iter()
            .map(move |v| {
                Portrait::from_vertex_perms(&shape, |u| {
                    if *u == v {
                        Perm::parse_cycles("(0 1)", 2).unwrap()
                    } else {
                        Perm::identity(2)
                    }
                })
                .unwrap()
            })
    });
    let x = single_swaps.find(|x| !g4.contains(x)).unwrap();
    assert!(!g4.contains(&x));
    let bad = ElementSet::from_portraits(g4.shape(), &[x]).unwrap();
    assert!(matches!(
        haar_of_cylinder(&g4, &bad, 4),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn density_curves() {
    let curve = density_curve(&grigorchuk(), 2, 1, 1..=4, CAP).unwrap();
    assert_eq!(curve[0].ratio, ratio(1, 2));
    assert!(curve.windows(2).all(|w| w[1].ratio <= w[0].ratio));

    // The unique involution of the cyclic quotient lies in St(1) once
    // k >= 2, so P_{2,1} is empty there; the order-2 fraction halves.
    let odometer2 = odometer(2).unwrap();
    let odo = density_curve(&odometer2, 2, 1, 1..=6, CAP).unwrap();
    assert_eq!(odo[0].ratio, ratio(1, 2));
    assert!(odo[1..].iter().all(|rec| rec.count == 0));
    for k in 1..=6 {
        let prof = torsion_profile(&q(&odometer2, k)).unwrap();
        assert_eq!(ratio(prof.counts[&2] as u128, 1 << k), ratio(1, 1 << k));
    }

    let ones = density_curve(&gupta_sidki(3).unwrap(), 1, 1, 1..=2, CAP).unwrap();
    for rec in &ones {
        assert_eq!(rec.ratio, ratio(1, rec.group_order));
    }
    assert!(ones[1].ratio < ones[0].ratio);

    assert!(density_curve(&grigorchuk(), 0, 1, 1..=2, CAP).is_err());
    assert!(density_curve(&grigorchuk(), 2, 3, 1..=3, CAP).is_err());
}

#[test]
fn bound_ledgers() {
    let def = grigorchuk();
    for k in 1..=4 {
        let g = q(&def, k);
        for n in 1..=k.min(2) {
            for r in [1, 2, 4, 8, 16] {
                if census_p(&g, r, n).unwrap() == 0 {
                    continue;
                }
                for source in [RistSource::FiniteQuotient, RistSource::Metadata] {
                    let ledger = bound_ledger(&def, &g, r, n, source, CAP).unwrap();
                    assert!(ledger.upper_holds && ledger.lower_holds);
                    assert!(ledger.record.count <= ledger.upper);
                    assert!(ledger.lower <= g.order());
                    assert_eq!(ledger.alpha_asserted, source == RistSource::Metadata);
                    if source == RistSource::Metadata {
                        assert!(ledger.alpha_holds);
                    }
                    assert_eq!(ledger.record.rist_source, Some(source));
                }
            }
        }
    }

    // n = k: sections are trivial and the bounds collapse.
    let g = q(&def, 2);
    let ledger = bound_ledger(&def, &g, 2, 2, RistSource::FiniteQuotient, CAP).unwrap();
    assert_eq!(ledger.upper, 8);
    assert_eq!(ledger.lower, 1);
}

#[test]
fn orbit_spectra() {
    let shape = TreeShape::constant(2, 2).unwrap();
    let id = orbit_spectrum(&Portrait::identity(&shape)).unwrap();
    assert_eq!(id.sizes, vec![1, 1, 1, 1]);
    assert_eq!(id.max, 1);

    let s3 = TreeShape::constant(3, 1).unwrap();
    let sigma =
        Portrait::from_leaf_permutation(&s3, &Perm::parse_cycles("(0 1 2)", 3).unwrap()).unwrap();
    assert_eq!(orbit_spectrum(&sigma).unwrap().sizes, vec![3]);

    let a = project(&grigorchuk(), "a", 2).unwrap();
    let spec = orbit_spectrum(&a).unwrap();
    assert_eq!(spec.sizes, vec![2, 2]);
    assert_eq!((spec.max, spec.lcm), (2, a.order()));
    assert_eq!(spec.witness, Vertex::from_letters(vec![0u8, 0]));

    for h in q(&grigorchuk(), 3).elements().unwrap().iter() {
        let s = orbit_spectrum(&h).unwrap();
        assert_eq!(s.max, h.order());
    }
}

#[test]
fn section_products() {
    for (def, k) in [(grigorchuk(), 3), (gupta_sidki(3).unwrap(), 2)] {
        for h in q(&def, k).elements().unwrap().iter() {
            assert!(section_product_check(&h, h.order(), 1).unwrap());
        }
    }
    let g = q(&grigorchuk(), 3);
    let h = g
        .elements()
        .unwrap()
        .iter()
        .find(|h| h.order() == 4)
        .unwrap();
    assert!(section_product_check(&h, 2, 1).is_err());

    // Corrupt one section: the orbit product is no longer trivial.
    let id = Portrait::identity(g.shape());
    let (mut sections, top) = id.psi_decompose(1).unwrap();
    assert!(section_product_check_parts(&sections, &top, 1).unwrap());
    sections[0] = project(&grigorchuk(), "b", 2).unwrap();
    assert!(!section_product_check_parts(&sections, &top, 1).unwrap());

    let id = Portrait::identity(g.shape());
    assert!(section_product_check(&id, 1, 2).unwrap());
}

/// Chi-squared goodness of fit of the sampler against the uniform law.
fn chi_squared_p(group: &FiniteQuotient, draws: usize, seed: u64) -> f64 {
    let elements = group.elements().unwrap();
    let mut counts = vec![0u64; elements.len()];
    for s in group.sample_uniform(draws, seed).unwrap() {
        let i = (0..elements.len()).find(|&i| elements.get(i) == s).unwrap();
        counts[i] += 1;
    }
    let expected = draws as f64 / elements.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((elements.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn sampler_is_uniform_at_depth_two() {
    for name in [
        "grigorchuk",
        "gupta-sidki-3",
        "odometer-2",
        "odometer-3",
        "paper-realization-2",
        "full-aut-2",
    ] {
        let catalog::CatalogGroup::Tree(def) = catalog::lookup(name).unwrap() else {
            unreachable!()
        };
        let group = q(&def, 2);
        let p = chi_squared_p(&group, 100_000, 0);
        assert!(p > 0.001, "{name}: p = {p}");
    }
}

#[test]
fn identity_frequency() {
    let group = q(&grigorchuk(), 2);
    let draws = 100_000usize;
    let hits = group
        .sample_uniform(draws, 0)
        .unwrap()
        .iter()
        .filter(|s| s.is_identity())
        .count() as f64;
    let p = 1.0 / 8.0;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    assert!((hits - draws as f64 * p).abs() < 5.0 * sigma);
}

#[test]
fn monte_carlo_estimates() {
    let def = grigorchuk();
    for k in [3, 4] {
        let exact = census_capped(&q(&def, k), 2).unwrap();
        let exact = to_f64(&ratio(exact, q(&def, k).order()));
        let est = estimate_torsion_density(&def, k, 2, 10_000, 0).unwrap();
        assert!(est.covers(exact), "k={k}: {est:?} vs {exact}");
        assert_eq!(
            est,
            estimate_torsion_density(&def, k, 2, 10_000, 0).unwrap()
        );
    }
}

#[test]
fn realization_identities() {
    let def = paper_realization(2).unwrap();
    for k in 1..=6 {
        let a = project(&def, "a", k).unwrap();
        let g = project(&def, "g", k).unwrap();
        let h = project(&def, "h", k).unwrap();
        assert!(a.pow(2).is_identity());
        assert_eq!(a.compose(&h).unwrap(), g);
        assert_eq!(
            h.compose(&a).unwrap(),
            a.inverse().compose(&g).unwrap().compose(&a).unwrap()
        );
        assert_eq!(g.order(), 1 << k);
        if k >= 2 {
            let gk1 = project(&def, "g", k - 1).unwrap();
            let (sections, top) = g.pow(2).psi_decompose(1).unwrap();
            assert!(top.is_identity());
            assert!(sections.iter().all(|s| *s == gk1));
        }
        if k <= 4 {
            let conj = a.compose(&h).unwrap().compose(&a.inverse()).unwrap();
            assert_eq!(h.compose(&conj).unwrap(), conj.compose(&h).unwrap());
        }
    }
    let def3 = paper_realization(3).unwrap();
    for k in 1..=4 {
        let a = project(&def3, "a", k).unwrap();
        assert_eq!(a.order(), 3);
        let h = project(&def3, "h", k).unwrap();
        for i in 0..3 {
            let ai = a.pow(i);
            let conj = ai.compose(&h).unwrap().compose(&ai.inverse()).unwrap();
            assert_eq!(h.compose(&conj).unwrap(), conj.compose(&h).unwrap());
        }
    }
}

#[test]
fn realization_density_probe() {
    let curve = density_curve(&paper_realization(2).unwrap(), 2, 1, 1..=6, CAP).unwrap();
    assert_eq!(curve.len(), 6);
    assert!(curve.windows(2).all(|w| w[1].ratio <= w[0].ratio));
}

fn closed_form(p: u64, k: u32) -> Rational {
    let p = p as u128;
    let n = p.pow(k * (p as u32 - 1));
    ratio(p - 1, p) + ratio(p.pow(p as u32 - 1), p * n)
}

#[test]
fn abstract_torsion_fractions() {
    assert_eq!(
        AbstractSemidirectQuotient::new(2, 4, CAP)
            .unwrap()
            .torsion_fraction(),
        ratio(9, 16)
    );
    assert_eq!(
        AbstractSemidirectQuotient::new(3, 2, CAP)
            .unwrap()
            .torsion_fraction(),
        ratio(19, 27)
    );
    for (p, ks) in [(2u64, 1..=6u32), (3, 1..=2)] {
        let mut last = Rational::from_integer(1);
        for k in ks {
            let f = AbstractSemidirectQuotient::new(p, k, CAP)
                .unwrap()
                .torsion_fraction();
            assert_eq!(f, closed_form(p, k));
            assert!(f <= last && f > ratio(p as u128 - 1, p as u128));
            last = f;
        }
    }
    let curve = abstract_density_curve(2, 2, 1..=6, CAP).unwrap();
    for rec in &curve {
        assert_eq!(rec.ratio, ratio(1, 2) + ratio(1, 1 << rec.k));
    }
    assert!(matches!(
        AbstractSemidirectQuotient::new(5, 6, CAP),
        Err(Error::Capacity { .. })
    ));
}
