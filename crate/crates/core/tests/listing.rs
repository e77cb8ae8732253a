use promo_gym_core::mdp::{format_listing, TransitionTable};
use promo_gym_core::promo::{build_promo_mdp, PromoGridSpec};

const SPEC: &str = include_str!("../../../fixtures/promo/listing_spec.json");
const GOLDEN: &str = include_str!("../../../fixtures/promo/listing_35_36.txt");

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn table() -> TransitionTable {
    build_promo_mdp(&PromoGridSpec::from_json(SPEC).unwrap()).unwrap()
}

#[test]
fn states_35_and_36_match_golden_listing() {
    let rendered = format_listing(&table(), &[35, 36]);
    assert_eq!(squash(&rendered), squash(GOLDEN), "\n{rendered}");
}

#[test]
fn golden_tokens_present_in_document() {
    let doc = table().to_json();
    assert!(doc.contains("0.14285714285714285"));
    assert!(doc.contains("-10"));
}

#[test]
fn document_round_trip_preserves_listing() {
    let t = table();
    let back = TransitionTable::from_json(&t.to_json()).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.to_json(), t.to_json());
    assert_eq!(
        format_listing(&back, &[35, 36]),
        format_listing(&t, &[35, 36])
    );
}

#[test]
fn spec_document_round_trip() {
    let spec = PromoGridSpec::from_json(SPEC).unwrap();
    assert_eq!(PromoGridSpec::from_json(&spec.to_json()).unwrap(), spec);
}
