mod common;

use common::*;
use domino_hydro::height::{phi_from_profile, Profile};
use domino_hydro::lattice::{parity_residue, Face, Rect};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn meet_and_join_stay_admissible(p in field_spec(), q in field_spec()) {
        meet_join_closure(p, q)?;
    }

    #[test]
    fn every_field_follows_the_parity_residue(p in field_spec()) {
        residues_match(p)?;
    }

    #[test]
    fn fields_vanishing_at_origin_dominate_the_pyramid(p in field_spec()) {
        pyramid_is_minimal(p)?;
    }

    #[test]
    fn initial_field_is_sandwiched(w in wave(), n in prop::sample::select(vec![1u32, 4, 8, 16, 64])) {
        sandwich(w, n)?;
    }
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn local_formula_matches_bruteforce(w in wave(), n in prop::sample::select(vec![4u32, 8, 16])) {
        oracle_equivalence(w, n)?;
    }

    #[test]
    fn initial_field_is_monotone_in_profile(w in wave(), dc in 0.0f64..1.0) {
        let window = Rect::centered(Face::ORIGIN, 6);
        let lo = phi_from_profile(&w.profile(), 8, window).unwrap();
        let hi = phi_from_profile(&w.shifted(dc).profile(), 8, window).unwrap();
        for (x, h) in lo.iter_valid() {
            prop_assert!(h <= hi.get(x).unwrap());
        }
    }
}

#[test]
fn pyramid_table_invariants_up_to_radius_16() {
    pyramid_invariants(16).unwrap();
}

#[test]
fn residues_agree_with_exhaustive_enumeration() {
    for (face, residues) in enumerated_residues() {
        assert_eq!(residues, vec![parity_residue(face)], "{face:?}");
    }
}

#[test]
fn flat_profile_is_even_translation_invariant() {
    let window = Rect::centered(Face::ORIGIN, 8);
    let phi = phi_from_profile(&Profile::affine([0.0, 0.0]), 8, window).unwrap();
    for x in window.shrink(2).unwrap().faces() {
        for by in [Face::new(2, 0), Face::new(0, 2)] {
            assert_eq!(phi.get(x), phi.get(x - by));
        }
    }
    assert!(phi.iter_valid().all(|(_, h)| -4 < h && h <= 1));
}
