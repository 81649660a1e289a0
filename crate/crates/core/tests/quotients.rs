use arbor_core::catalog::{full_aut, grigorchuk, gupta_sidki, odometer};
use arbor_core::quotient::{
    orbits_of, profinite_rist_level_projection, profinite_rist_projection, section_set, ElementSet,
    RistSource,
};
use arbor_core::recursion::project;
use arbor_core::{Error, FiniteQuotient, GroupDef, Portrait, Subgroup, TreeShape, Vertex};

const CAP: u64 = 10_000_000;

fn v(s: &str) -> Vertex {
    s.parse().unwrap()
}

fn q(def: &GroupDef, k: usize) -> FiniteQuotient {
    FiniteQuotient::enumerate(def, k, CAP).unwrap()
}

#[test]
fn grigorchuk_orders() {
    let def = grigorchuk();
    for (k, order) in [(1, 2u128), (2, 8), (3, 128), (4, 4096), (5, 1 << 22)] {
        let enumerated = q(&def, k);
        assert_eq!(enumerated.order(), order, "k={k}");
        assert_eq!(enumerated.representation(), "enumerated");
        let chain = FiniteQuotient::stab_chain(&def, k).unwrap();
        assert_eq!(chain.representation(), "stab-chain");
        assert_eq!(chain.order(), order);
    }
}

#[test]
fn grigorchuk_depth_six_exceeds_default_cap() {
    let err = FiniteQuotient::enumerate(&grigorchuk(), 6, CAP).unwrap_err();
    assert_eq!(
        err,
        Error::Capacity {
            reached: 1 << 42,
            cap: CAP
        }
    );
    let err = FiniteQuotient::enumerate(&grigorchuk(), 7, CAP).unwrap_err();
    assert!(matches!(err, Error::Capacity { .. }));
}

#[test]
fn other_catalog_orders() {
    let odo = odometer(2).unwrap();
    for k in 1..=6 {
        assert_eq!(q(&odo, k).order(), 1 << k);
        assert_eq!(FiniteQuotient::stab_chain(&odo, k).unwrap().order(), 1 << k);
    }
    let full = full_aut(2, 6).unwrap();
    for (k, order) in [(1, 2u128), (2, 8), (3, 128)] {
        assert_eq!(q(&full, k).order(), order);
        assert_eq!(FiniteQuotient::stab_chain(&full, k).unwrap().order(), order);
    }
    let gs = gupta_sidki(3).unwrap();
    for k in 1..=3 {
        let chain = FiniteQuotient::stab_chain(&gs, k).unwrap();
        assert_eq!(q(&gs, k).order(), chain.order());
    }
}

#[test]
fn membership_in_both_representations() {
    let def = grigorchuk();
    let enumerated = q(&def, 4);
    let chain = FiniteQuotient::stab_chain(&def, 4).unwrap();
    let w = def.parse_word("a*b*a*d*c*a*b").unwrap();
    let g = arbor_core::recursion::evaluate_word(&def, &w, 4);
    assert!(enumerated.contains(&g));
    assert!(chain.contains(&g));
    // A bottom-level swap under 000 is not in the group.
    let shape = def.shape(4);
    let outsider = Portrait::from_vertex_perms(&shape, |u| {
        if *u == v("000") {
            arbor_core::Perm::parse_cycles("(0 1)", 2).unwrap()
        } else {
            arbor_core::Perm::identity(2)
        }
    })
    .unwrap();
    assert!(!enumerated.contains(&outsider));
    assert!(!chain.contains(&outsider));
}

#[test]
fn level_stabilizers() {
    let def = grigorchuk();
    for k in 1..=4 {
        let quo = q(&def, k);
        assert!(quo.level_stabilizer(k).unwrap().is_trivial());
    }
    let quo = q(&def, 2);
    let st = quo.level_stabilizer(1).unwrap();
    assert_eq!(quo.index(&st).unwrap(), 2);
    let full = q(&full_aut(2, 6).unwrap(), 2);
    assert_eq!(full.level_stabilizer(1).unwrap().order(), 4);
    assert!(matches!(
        FiniteQuotient::stab_chain(&def, 3)
            .unwrap()
            .level_stabilizer(1),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn rigid_stabilizers() {
    let full = q(&full_aut(2, 6).unwrap(), 2);
    assert_eq!(full.rigid_stabilizer(&v("0")).unwrap().order(), 2);
    let rist = full.rigid_level_stabilizer(1).unwrap();
    assert_eq!(rist.order(), 4);
    assert_eq!(
        rist.elements(),
        full.level_stabilizer(1).unwrap().elements()
    );
    assert_eq!(full.index(&rist).unwrap(), 2);

    let odo = q(&odometer(2).unwrap(), 3);
    assert!(odo.rigid_stabilizer(&v("0")).unwrap().is_trivial());

    let grig = q(&grigorchuk(), 3);
    let r0 = grig.rigid_stabilizer(&v("0")).unwrap();
    let r1 = grig.rigid_stabilizer(&v("1")).unwrap();
    assert_eq!(r0.order(), r1.order());
    let level = grig.rigid_level_stabilizer(1).unwrap();
    assert_eq!(level.order(), r0.order() * r1.order());
    assert_eq!(level.source(), Some(RistSource::FiniteQuotient));
    assert!(grig.rigid_stabilizer(&v("")).is_err());
    assert!(grig.rigid_stabilizer(&v("000")).is_err());
}

fn assert_commuting_disjoint(a: &Subgroup, b: &Subgroup) {
    let mut common = 0;
    for x in a.elements().iter() {
        if b.contains(&x) {
            common += 1;
        }
        for y in b.elements().iter() {
            assert_eq!(x.compose(&y).unwrap(), y.compose(&x).unwrap());
        }
    }
    assert_eq!(common, 1, "only the identity is shared");
}

#[test]
fn same_level_rigid_stabilizers_commute() {
    for (def, k) in [
        (grigorchuk(), 3),
        (grigorchuk(), 4),
        (full_aut(2, 6).unwrap(), 3),
    ] {
        let quo = q(&def, k);
        for n in 1..k.min(3) {
            let vertices = quo.shape().vertices_at_level(n).unwrap();
            let rists: Vec<Subgroup> = vertices
                .iter()
                .map(|u| quo.rigid_stabilizer(u).unwrap())
                .collect();
            for i in 0..rists.len() {
                for j in i + 1..rists.len() {
                    assert_commuting_disjoint(&rists[i], &rists[j]);
                }
            }
        }
    }
}

#[test]
fn normal_closure_of_vertex_rist_is_level_rist() {
    for (def, k) in [
        (grigorchuk(), 3),
        (grigorchuk(), 4),
        (full_aut(2, 6).unwrap(), 3),
    ] {
        let quo = q(&def, k);
        assert!(quo.is_level_transitive());
        for n in 1..k.min(3) {
            let level = quo.rigid_level_stabilizer(n).unwrap();
            for u in quo.shape().vertices_at_level(n).unwrap() {
                let rist = quo.rigid_stabilizer(&u).unwrap();
                let closure = quo.normal_closure(&rist, CAP).unwrap();
                assert_eq!(closure.elements(), level.elements(), "k={k} v={u}");
            }
        }
    }
}

#[test]
fn metadata_rists_are_contained_and_nontrivial() {
    for def in [
        grigorchuk(),
        full_aut(2, 6).unwrap(),
        full_aut(3, 4).unwrap(),
    ] {
        for k in 2..=4 {
            let shape = def.shape(k);
            let quo = FiniteQuotient::enumerate(&def, k, CAP);
            let Ok(quo) = quo else { continue };
            for n in 1..k.min(3) {
                for u in shape.vertices_at_level(n).unwrap() {
                    let meta = profinite_rist_projection(&def, &u, k, CAP).unwrap();
                    assert_eq!(meta.source(), Some(RistSource::Metadata));
                    let finite = quo.rigid_stabilizer(&u).unwrap();
                    assert!(
                        meta.elements().is_subset_of(finite.elements()),
                        "{} k={k} v={u}",
                        def.name()
                    );
                }
            }
        }
    }
    let def = grigorchuk();
    for k in 3..=5 {
        for u in ["0", "1"] {
            let meta = profinite_rist_projection(&def, &v(u), k, CAP).unwrap();
            assert!(!meta.is_trivial(), "rist({u}) at k={k}");
        }
    }
    for u in ["00", "01", "10", "11"] {
        let meta = profinite_rist_projection(&def, &v(u), 5, CAP).unwrap();
        assert!(!meta.is_trivial(), "rist({u}) at k=5");
    }
    let odo = odometer(2).unwrap();
    assert!(matches!(
        profinite_rist_projection(&odo, &v("0"), 3, CAP),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn orbits_and_transitivity() {
    let def = grigorchuk();
    for k in 1..=5 {
        let quo = FiniteQuotient::stab_chain(&def, k).unwrap();
        for n in 0..=k {
            assert_eq!(quo.orbits(n).unwrap().len(), 1, "k={k} n={n}");
        }
    }
    let shape = def.shape(2);
    let b = project(&def, "b", 2).unwrap();
    let orbits = orbits_of(&shape, &[b], 1).unwrap();
    assert_eq!(orbits, vec![vec![v("0")], vec![v("1")]]);
    let trivial = FiniteQuotient::from_generators("trivial", &shape, vec![], CAP).unwrap();
    assert_eq!(trivial.orbits(2).unwrap().len(), 4);
    assert!(!trivial.is_level_transitive());

    let grig = q(&def, 4);
    assert!(grig.is_level_transitive());
    assert!(grig.is_weakly_branch_at(1).unwrap());
    let (branch, index) = grig.is_branch_at(1).unwrap();
    assert!(branch);
    assert_eq!(
        index,
        grig.order() / grig.rigid_level_stabilizer(1).unwrap().order()
    );

    let odo = q(&odometer(2).unwrap(), 4);
    assert!(odo.is_level_transitive());
    assert!(!odo.is_weakly_branch_at(1).unwrap());

    let gs = FiniteQuotient::stab_chain(&gupta_sidki(3).unwrap(), 3).unwrap();
    assert!(gs.is_level_transitive());
}

#[test]
fn section_sets_and_indices() {
    let shape = TreeShape::constant(2, 3).unwrap();
    let id = ElementSet::from_portraits(&shape, &[Portrait::identity(&shape)]).unwrap();
    assert!(section_set(&id, &v("0"), 2).unwrap().is_trivial());

    let def = grigorchuk();
    for k in 2..=4 {
        let quo = q(&def, k);
        let s0 = section_set(quo.elements().unwrap(), &v("0"), k - 1).unwrap();
        let s1 = section_set(quo.elements().unwrap(), &v("1"), k - 1).unwrap();
        assert_eq!(s0.len(), s1.len());
        assert!(section_set(quo.elements().unwrap(), &v("0"), k).is_err());
        let whole = quo.as_subgroup().unwrap();
        assert_eq!(quo.index(&whole).unwrap(), 1);
    }

    // A subset that is not inside the quotient is rejected.
    let quo = q(&odometer(2).unwrap(), 2);
    let foreign = Subgroup::new(
        "foreign",
        q(&full_aut(2, 6).unwrap(), 2).elements().unwrap().clone(),
    );
    assert!(matches!(
        quo.index(&foreign),
        Err(Error::InvariantViolation(_))
    ));
}

/// Section-set identities of rigid stabilizers and the section index
/// inequality on the finite quotient.
fn lemma_suite(def: &GroupDef) {
    for k in 1..=4 {
        let quo = q(def, k);
        let set = quo.elements().unwrap();
        for n in 1..=2.min(k) {
            let rest = k - n;
            let vertices = quo.shape().vertices_at_level(n).unwrap();
            if n < k {
                let mut sources = vec![quo.rigid_level_stabilizer(n).unwrap()];
                if let Ok(meta) = profinite_rist_level_projection(def, n, k, CAP) {
                    sources.push(meta);
                }
                for level in &sources {
                    let mut product = 1u128;
                    for u in &vertices {
                        let rist = match level.source() {
                            Some(RistSource::Metadata) => {
                                profinite_rist_projection(def, u, k, CAP).unwrap()
                            }
                            _ => quo.rigid_stabilizer(u).unwrap(),
                        };
                        // (i) sections of RiSt(n) at v are those of rist(v).
                        let from_level = section_set(level.elements(), u, rest).unwrap();
                        let from_vertex = section_set(rist.elements(), u, rest).unwrap();
                        assert_eq!(from_level, from_vertex);
                        // (iii) rist(v) is determined by its section at v.
                        assert_eq!(rist.order(), from_vertex.len() as u128);
                        product *= from_level.len() as u128;
                    }
                    // (ii) RiSt(n) is the full product of its section sets.
                    assert_eq!(level.order(), product, "{} k={k} n={n}", def.name());
                }
            }
            let mut subgroups = vec![quo.level_stabilizer(1).unwrap()];
            if k > 1 {
                subgroups.push(quo.rigid_level_stabilizer(1).unwrap());
            }
            for h in &subgroups {
                let index = quo.index(h).unwrap();
                for u in &vertices {
                    let lhs = section_set(set, u, rest).unwrap().len() as u128;
                    let secs = section_set(h.elements(), u, rest).unwrap().len() as u128;
                    assert!(lhs <= vertices.len() as u128 * index * secs);
                }
            }
        }
    }
}

#[test]
fn lemmas_on_grigorchuk() {
    lemma_suite(&grigorchuk());
}

#[test]
fn lemmas_on_full_aut() {
    lemma_suite(&full_aut(2, 6).unwrap());
}

#[test]
fn sampling_is_seeded_and_in_group() {
    let def = grigorchuk();
    let quo = q(&def, 3);
    let a = quo.sample_uniform(200, 0).unwrap();
    assert_eq!(a, quo.sample_uniform(200, 0).unwrap());
    assert_ne!(a, quo.sample_uniform(200, 1).unwrap());
    assert!(a.iter().all(|g| quo.contains(g)));
    let trivial = FiniteQuotient::from_generators("trivial", &def.shape(3), vec![], CAP).unwrap();
    assert!(trivial
        .sample_uniform(50, 0)
        .unwrap()
        .iter()
        .all(|g| g.is_identity()));
}
