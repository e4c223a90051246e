//! Property-based checks, 1000 random cases each.

mod support;

macro_rules! property_tests {
    ($($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = support::$name() {
                    panic!("{e}");
                }
            }
        )*
    };
}

property_tests!(
    count_conservation_and_order_invariance,
    average_onto_idempotent,
    l1_is_a_metric,
    predictive_bounds,
    refinement_ratio,
    stirling_rate,
    beta_concentration,
    adding_data_never_increases_z,
    exact_z_bounds,
    shift_invariance,
    likelihood_identity,
    thinning_raises_z_star,
    concavity_gap_bounds,
    entropy_continuity,
    filter_matches_path_enumeration,
    filter_is_a_distribution,
    mixing_bound,
);

#[test]
fn suite_lists_every_property() {
    assert_eq!(support::suite().len(), 17);
}
