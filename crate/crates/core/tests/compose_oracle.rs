mod common;

use ctmc_core::{build_state_space, parse_model, BuildOptions, Ctmc64};

#[test]
fn random_products_match_brute_force() {
    let mut checked = 0;
    for seed in 0..300 {
        let model = common::random_model(&mut common::rng(seed));
        let src = model.source();
        let ast = parse_model(&src).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
        let c: Ctmc64 = build_state_space(&ast, &BuildOptions::default()).unwrap();
        let (states, edges) = common::chain_as_product(&c, &model);
        let (want_states, want_edges) = model.flat_product();
        assert_eq!(states, want_states, "seed {seed}\n{src}");
        assert_eq!(edges, want_edges, "seed {seed}\n{src}");
        assert_eq!(c.num_transitions(), want_edges.len());
        checked += 1;
    }
    assert!(checked >= 200);
}

#[test]
fn initial_state_is_index_zero() {
    for seed in 0..50 {
        let model = common::random_model(&mut common::rng(seed));
        let c: Ctmc64 = build_state_space(&parse_model(&model.source()).unwrap(), &BuildOptions::default()).unwrap();
        let init: Vec<i64> = model.vars.iter().map(|v| v.1).collect();
        let (states, _) = common::chain_as_product(&c, &model);
        assert_eq!(c.initial_state(), 0);
        assert!(states.contains(&init));
    }
}
