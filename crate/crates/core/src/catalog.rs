//! Built-in groups.
//!
//! Tree groups are generated as `.ssg` text and parsed, so every catalog
//! entry round-trips through the same parser as user files and can be
//! exported verbatim.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::recursion::{parse_group, GroupDef};
use crate::ring::{is_prime, AbstractSemidirectQuotient};

/// `x1 = [t, d]` with `t = abab`; its section at `0` is trivial.
const GRIG_X1: &str = "b*a*b*a*d*a*b*a*b*d";

/// `w = [u, c]` with `u = (acad)²`, so that `w = (1, x1)`.
const GRIG_W: &str = "d*a*c*a*d*a*c*a*c*a*c*a*d*a*c*a*d*c";

pub fn grigorchuk() -> GroupDef {
    let x1 = GRIG_X1;
    let w = GRIG_W;
    let text = format!(
        "# Grigorchuk group
group grigorchuk arity 2
gen a = perm (0 1) sections [1, 1]
gen b = perm id sections [a, c]
gen c = perm id sections [a, d]
gen d = perm id sections [1, b]
rist 0 = [a*{x1}*a]
rist 1 = [{x1}, b*{x1}*b, c*{x1}*c]
rist 00 = [b*a*{w}*a*b]
rist 01 = [a*{w}*a]
rist 10 = [a*b*a*{w}*a*b*a]
rist 11 = [{w}]
expect level-transitive
expect weakly-branch
expect branch
"
    );
    parse_group(&text).expect("catalog definition parses")
}

fn check_prime(p: u64) -> Result<usize> {
    if !is_prime(p) || p > 255 {
        return Err(Error::Precondition(format!("{p} is not a prime below 256")));
    }
    Ok(p as usize)
}

fn cycle(p: usize) -> String {
    let points: Vec<String> = (0..p).map(|i| format!("{i}")).collect();
    format!("({})", points.join(" "))
}

fn sections(p: usize, mut at: impl FnMut(usize) -> String) -> String {
    let words: Vec<String> = (0..p).map(&mut at).collect();
    format!("[{}]", words.join(", "))
}

/// Gupta–Sidki group: `a = σ`, `t = (a, a⁻¹, 1, …, 1, t)`.
pub fn gupta_sidki(p: u64) -> Result<GroupDef> {
    let m = check_prime(p)?;
    if m == 2 {
        return Err(Error::Precondition(
            "Gupta-Sidki groups need an odd prime".into(),
        ));
    }
    let t_sections = sections(m, |i| match i {
        0 => "a".into(),
        1 => "a^-1".into(),
        i if i == m - 1 => "t".into(),
        _ => "1".into(),
    });
    let text = format!(
        "group gupta-sidki-{p} arity {p}
gen a = perm {} sections {}
gen t = perm id sections {t_sections}
expect level-transitive
expect weakly-branch
expect branch
",
        cycle(m),
        sections(m, |_| "1".into()),
    );
    parse_group(&text)
}

/// The adding machine `g = (1, …, 1, g)σ`.
pub fn odometer(p: u64) -> Result<GroupDef> {
    let m = check_prime(p)?;
    let text = format!(
        "group odometer-{p} arity {p}
gen g = perm {} sections {}
expect level-transitive
expect not-weakly-branch
expect not-branch
",
        cycle(m),
        sections(m, |i| if i == m - 1 { "g".into() } else { "1".into() }),
    );
    parse_group(&text)
}

/// Generators `x_0 = σ` and `x_j = (x_{j-1}, 1, …, 1)` for `j < k`. Their
/// depth-`k` projections generate the iterated wreath product
/// `C_p ≀ ⋯ ≀ C_p`, which for `p = 2` is all of `Aut T^k`; deeper
/// projections are proper subgroups.
pub fn full_aut(p: u64, k: usize) -> Result<GroupDef> {
    let m = check_prime(p)?;
    if k == 0 {
        return Err(Error::Precondition("full_aut needs k >= 1".into()));
    }
    let mut text = format!("group full-aut-{p} arity {p}\n");
    text.push_str(&format!(
        "gen x0 = perm {} sections {}\n",
        cycle(m),
        sections(m, |_| "1".into())
    ));
    for j in 1..k {
        text.push_str(&format!(
            "gen x{j} = perm id sections {}\n",
            sections(m, |i| if i == 0 {
                format!("x{}", j - 1)
            } else {
                "1".into()
            })
        ));
    }
    let conj = |prefix: &[(usize, usize)], word: &str| {
        let mut left = String::new();
        let mut right = String::new();
        for &(g, e) in prefix {
            if e > 0 {
                left.push_str(&format!("x{g}^{e}*"));
                right.insert_str(0, &format!("*x{g}^-{e}"));
            }
        }
        format!("{left}{word}{right}")
    };
    for i in 0..m {
        let words: Vec<String> = (1..k).map(|j| conj(&[(0, i)], &format!("x{j}"))).collect();
        if !words.is_empty() {
            text.push_str(&format!("rist {i} = [{}]\n", words.join(", ")));
        }
    }
    for i in 0..m {
        for l in 0..m {
            let words: Vec<String> = (2..k)
                .map(|j| conj(&[(0, i), (1, l)], &format!("x{j}")))
                .collect();
            if !words.is_empty() {
                let v = if m > 10 {
                    format!("{i}.{l}")
                } else {
                    format!("{i}{l}")
                };
                text.push_str(&format!("rist {v} = [{}]\n", words.join(", ")));
            }
        }
    }
    text.push_str("expect level-transitive\nexpect weakly-branch\nexpect branch\n");
    parse_group(&text)
}

/// Depth up to which the catalog's `full-aut-<p>` entry is exact.
pub const FULL_AUT_DEPTH: usize = 6;

/// The tree realization `a = (1, …, 1)σ`, `g = (1, …, 1, g)σ`,
/// `h = (1, …, 1, g)`. Since `g = a·h`, the generated group is `⟨a, h⟩`.
pub fn paper_realization(p: u64) -> Result<GroupDef> {
    let m = check_prime(p)?;
    let last_g = |i: usize| {
        if i == m - 1 {
            String::from("g")
        } else {
            String::from("1")
        }
    };
    let text = format!(
        "group paper-realization-{p} arity {p}
gen a = perm {c} sections {ones}
gen g = perm {c} sections {gs}
gen h = perm id sections {gs}
expect level-transitive
",
        c = cycle(m),
        ones = sections(m, |_| "1".into()),
        gs = sections(m, last_g),
    );
    parse_group(&text)
}

/// `A/p^k A ⋊ C_p` under the default element cap.
pub fn abstract_quotient(p: u64, k: u32) -> Result<AbstractSemidirectQuotient> {
    AbstractSemidirectQuotient::new(p, k, crate::DEFAULT_ELEMENT_CAP)
}

/// The two additive ranks of `A`: `p - 1` from its defining polynomial, and
/// `p` as stated for its isomorphism type. Both are reported.
pub fn ring_ranks(p: u64) -> (u64, u64) {
    (p - 1, p)
}

/// A catalog entry resolved from its name.
#[derive(Clone, Debug)]
pub enum CatalogGroup {
    Tree(GroupDef),
    Abstract { p: u64 },
}

/// Catalog names, with `<p>` standing for a prime.
pub const NAMES: &[&str] = &[
    "grigorchuk",
    "gupta-sidki-<p>",
    "odometer-<p>",
    "paper-realization-<p>",
    "abstract-semidirect-<p>",
    "full-aut-<p>",
];

pub fn lookup(name: &str) -> Result<CatalogGroup> {
    if name == "grigorchuk" {
        return Ok(CatalogGroup::Tree(grigorchuk()));
    }
    let prime = |prefix: &str| -> Option<u64> { name.strip_prefix(prefix)?.parse().ok() };
    if let Some(p) = prime("gupta-sidki-") {
        return gupta_sidki(p).map(CatalogGroup::Tree);
    }
    if let Some(p) = prime("odometer-") {
        return odometer(p).map(CatalogGroup::Tree);
    }
    if let Some(p) = prime("paper-realization-") {
        return paper_realization(p).map(CatalogGroup::Tree);
    }
    if let Some(p) = prime("full-aut-") {
        return full_aut(p, FULL_AUT_DEPTH).map(CatalogGroup::Tree);
    }
    if let Some(p) = prime("abstract-semidirect-") {
        check_prime(p)?;
        return Ok(CatalogGroup::Abstract { p });
    }
    Err(Error::Unsupported(format!(
        "unknown catalog group `{name}` (known: {})",
        NAMES.join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion::project;
    use crate::tree::TreeShape;
    use crate::Perm;
    use crate::Portrait;

    #[test]
    fn entries_parse() {
        assert_eq!(grigorchuk().generators().len(), 4);
        assert_eq!(gupta_sidki(3).unwrap().generators().len(), 2);
        assert_eq!(full_aut(2, 4).unwrap().generators().len(), 4);
        assert_eq!(paper_realization(3).unwrap().generators().len(), 3);
        assert!(gupta_sidki(2).is_err());
        assert!(odometer(6).is_err());
    }

    #[test]
    fn grigorchuk_a_is_sigma() {
        let a = project(&grigorchuk(), "a", 1).unwrap();
        let shape = TreeShape::constant(2, 1).unwrap();
        let sigma =
            Portrait::from_leaf_permutation(&shape, &Perm::parse_cycles("(0 1)", 2).unwrap())
                .unwrap();
        assert_eq!(a, sigma);
    }

    #[test]
    fn lookup_names() {
        assert!(matches!(lookup("grigorchuk"), Ok(CatalogGroup::Tree(_))));
        assert!(matches!(
            lookup("abstract-semidirect-3"),
            Ok(CatalogGroup::Abstract { p: 3 })
        ));
        assert!(lookup("abstract-semidirect-4").is_err());
        assert!(lookup("nope").is_err());
        for name in [
            "gupta-sidki-3",
            "odometer-2",
            "paper-realization-2",
            "full-aut-2",
        ] {
            match lookup(name).unwrap() {
                CatalogGroup::Tree(def) => assert_eq!(def.name(), name),
                CatalogGroup::Abstract { .. } => panic!("{name}"),
            }
        }
    }

    #[test]
    fn definitions_round_trip() {
        for def in [
            grigorchuk(),
            full_aut(3, 4).unwrap(),
            paper_realization(5).unwrap(),
        ] {
            assert_eq!(parse_group(&def.to_text()).unwrap(), def);
        }
    }
}
