use std::sync::OnceLock;

use proptest::prelude::*;

use toeplitz_lab::array::{SymbolPatch, ToeplitzArray, Window};
use toeplitz_lab::config::Deck;
use toeplitz_lab::homomorphism::HomSpec;
use toeplitz_lab::independence::{check_certificate, Certificate};
use toeplitz_lab::lattice::{GroupElement, GroupSpec};
use toeplitz_lab::suites::williams_pair_certificate;
use toeplitz_lab::toeplitz_z::WilliamsArray;

fn deck(name: &str) -> &'static Deck {
    static DECKS: OnceLock<Vec<Deck>> = OnceLock::new();
    DECKS
        .get_or_init(|| ["z2-m2", "dihedral-m2", "swap-m2", "williams-m2"].iter().map(|n| Deck::load_bundled(n).unwrap()).collect())
        .iter()
        .find(|d| d.name() == name)
        .unwrap()
}

fn pair() -> &'static (WilliamsArray, SymbolPatch, Certificate) {
    static PAIR: OnceLock<(WilliamsArray, SymbolPatch, Certificate)> = OnceLock::new();
    PAIR.get_or_init(|| williams_pair_certificate().unwrap())
}

fn group(name: &str) -> &'static GroupSpec {
    &deck(name).array().chain().group
}

fn element(rank: usize, order: usize) -> impl Strategy<Value = GroupElement> + Clone {
    (prop::collection::vec(-1000i64..1000, rank), 0..order).prop_map(|(v, f)| GroupElement::new(&v, f))
}

fn triple(name: &'static str) -> impl Strategy<Value = (GroupElement, GroupElement, GroupElement)> {
    let g = group(name);
    let e = element(g.rank(), g.finite_order());
    (e.clone(), e.clone(), e)
}

proptest! {
    #[test]
    fn dihedral_group_laws((a, b, c) in triple("dihedral-m2")) {
        let g = group("dihedral-m2");
        prop_assert_eq!(g.op(&g.op(&a, &b), &c), g.op(&a, &g.op(&b, &c)));
        prop_assert_eq!(g.op(&a, &g.inv(&a)), g.identity());
        prop_assert_eq!(g.op(&g.identity(), &b), b);
        prop_assert_eq!(g.inv(&g.op(&a, &b)), g.op(&g.inv(&b), &g.inv(&a)));
    }

    #[test]
    fn swap_group_laws((a, b, c) in triple("swap-m2")) {
        let g = group("swap-m2");
        prop_assert_eq!(g.op(&g.op(&a, &b), &c), g.op(&a, &g.op(&b, &c)));
        prop_assert_eq!(g.op(&g.inv(&a), &a), g.identity());
        prop_assert_eq!(g.conjugate(&a, &g.op(&b, &c)), g.op(&g.conjugate(&a, &b), &g.conjugate(&a, &c)));
    }

    #[test]
    fn window_index_roundtrip(r in 1usize..=3, n in 0i64..4, sheets in 1usize..=2, k in 0usize..1000) {
        let w = Window::ball(r, n, sheets);
        let k = k % w.len();
        let g = w.element(k);
        prop_assert_eq!(w.index(&g), Some(k));
        prop_assert!(g.max_norm() <= n);
    }

    #[test]
    fn group_eta_is_periodic_at_its_level(v in prop::collection::vec(-3000i64..3000, 2), f in 0usize..2, t in prop::collection::vec(-4i64..4, 2), name in prop::sample::select(vec!["z2-m2", "dihedral-m2", "swap-m2"])) {
        let d = deck(name);
        let chain = d.array().chain();
        let g = GroupElement::new(&v[..chain.rank()], f % chain.finite_order());
        if let Some(cell) = d.array().cell(&g) {
            let p = chain.subgroups.moduli(cell.level as usize).unwrap();
            let shift: Vec<i64> = t.iter().zip(p).map(|(a, b)| a * b).collect();
            let gamma = GroupElement::new(&shift[..chain.rank()], 0);
            let moved = d.array().cell(&chain.group.op(&gamma, &g)).map(|c| c.symbol);
            prop_assert_eq!(moved, Some(cell.symbol));
        }
    }

    #[test]
    fn williams_eta_is_periodic_at_its_level(n in -1_000_000i64..1_000_000, t in -5i64..5) {
        let d = deck("williams-m2");
        let x = GroupElement::lattice(&[n]);
        if let Some(cell) = d.array().cell(&x) {
            let p = d.config.williams.as_ref().unwrap().periods[cell.level as usize - 1];
            prop_assert_eq!(d.array().cell(&GroupElement::lattice(&[n + t * p])), Some(cell));
        }
    }

    #[test]
    fn section_hits_every_integer(w in prop::collection::vec(-30i64..30, 2..=4), h in -500i64..500) {
        let spec = HomSpec::new(w);
        if let Ok(u) = spec.section_vector() {
            prop_assert_eq!(spec.apply(&spec.section(&u, h)), h);
        }
    }

    #[test]
    fn restricted_certificates_verify(drop_j in 0usize..3, keep_c in prop::sample::subsequence(vec![0usize, 1], 1..=2)) {
        let (w, patch, cert) = pair();
        let g = &w.chain().group;
        let keep_j: Vec<usize> = (0..cert.size()).filter(|&i| i != drop_j).collect();
        let sub = cert.restrict(&keep_j, &keep_c).unwrap();
        prop_assert_eq!(sub.size(), keep_j.len());
        prop_assert!(check_certificate(&sub, g, patch).unwrap());
    }
}

#[test]
fn padded_certificate_verifies() {
    let (w, patch, cert) = pair();
    let padded = cert.pad();
    assert_eq!(padded.k(), cert.k() + 1);
    assert!(check_certificate(&padded, &w.chain().group, patch).unwrap());
}

#[test]
fn tampered_certificate_is_rejected() {
    let (w, patch, cert) = pair();
    let mut bad = cert.clone();
    bad.cylinders[0] = bad.cylinders[1].clone();
    assert!(!check_certificate(&bad, &w.chain().group, patch).unwrap());
}
