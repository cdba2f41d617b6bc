use super::*;
use crate::lang::ast::{BinOp, Expr};
use crate::lang::parse_model;

fn build(src: &str) -> Ctmc<f64> {
    build_state_space(&parse_model(src).unwrap(), &BuildOptions::default()).unwrap()
}

const SYNC_PAIR: &str = "
module A
  a : [0..1] init 0;
  [go] a=0 -> 2 : (a'=1);
endmodule
module B
  b : [0..1] init 0;
  [go] b=0 -> 3 : (b'=1);
endmodule
";

#[test]
fn synchronised_rates_multiply() {
    let c = build(SYNC_PAIR);
    assert_eq!(c.num_states(), 2);
    assert_eq!(c.num_transitions(), 1);
    assert_eq!(c.state(1), &[1, 1]);
    assert_eq!(c.rate(0, 1), 6.0);
    assert_eq!(c.exit_rate(0), 6.0);
    assert!(c.is_absorbing(1));
}

#[test]
fn module_without_commands_has_one_state() {
    let c = build("module M x : [0..1] init 0; endmodule");
    assert_eq!(c.num_states(), 1);
    assert_eq!(c.num_transitions(), 0);
    assert_eq!(c.exit_rate(0), 0.0);
    assert_eq!(c.deadlocks(), vec![0]);
}

#[test]
fn jump_probabilities() {
    let c = Ctmc::<f64>::from_rates(3, 0, vec![vec![(1, 2.0), (2, 3.0)], vec![(0, 1.0)], vec![]]);
    assert!((c.jump_probability(0, 1).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(c.jump_probability(1, 0).unwrap(), 1.0);
    assert_eq!(c.jump_probability(2, 0), Err(ComposeError::Absorbing(2)));

    let fan = Ctmc::<f64>::from_rates(5, 0, vec![(1..5).map(|t| (t, 1.0)).collect(), vec![], vec![], vec![], vec![]]);
    let total: f64 = (0..5).map(|t| fan.jump_probability(0, t).unwrap()).sum();
    assert_eq!(fan.jump_probability(0, 3).unwrap(), 0.25);
    assert!((total - 1.0).abs() < 1e-15);
}

#[test]
fn sat_sets() {
    let c = build(SYNC_PAIR);
    let parse = |s: &str| match crate::lang::parse_property(s, None).unwrap() {
        crate::lang::property::StateFormula::Atom(e) => e,
        crate::lang::property::StateFormula::True => Expr::Bool(true),
        other => panic!("{other:?}"),
    };
    assert!(c.sat_set(&parse("true")).unwrap().is_full());
    assert_eq!(c.sat_set(&parse("a=1")).unwrap().iter().collect::<Vec<_>>(), vec![1]);
    let contradiction = Expr::binary(BinOp::And, Expr::var_eq("a", 1), Expr::var_eq("a", 0));
    assert!(c.sat_set(&contradiction).unwrap().is_empty());
    assert!(matches!(
        c.sat_set(&parse("nope=1")),
        Err(ComposeError::Eval(EvalError::UnknownIdentifier(_)))
    ));
}

#[test]
fn duplicated_command_doubles_rate() {
    let once = build("module M x : [0..1] init 0; [] x=0 -> 0.5 : (x'=1); endmodule");
    let twice = build("module M x : [0..1] init 0; [] x=0 -> 0.5 : (x'=1); [] x=0 -> 0.5 : (x'=1); endmodule");
    assert_eq!(twice.rate(0, 1), 2.0 * once.rate(0, 1));
}

#[test]
fn self_loops_are_dropped_but_keep_transition_reward() {
    let c = build(
        "module M x : [0..1] init 0;
           [tick] x=0 -> 4 : (x'=0);
           [] x=0 -> 1 : (x'=1);
         endmodule
         rewards \"r\" [tick] true : 2; endrewards",
    );
    assert_eq!(c.num_transitions(), 1);
    assert_eq!(c.exit_rate(0), 1.0);
    let r = c.reward("r").unwrap();
    assert_eq!(r.self_loop[0], 8.0);
    assert_eq!(c.reward_rate(r), vec![8.0, 0.0]);
}

#[test]
fn transition_rewards_follow_labels() {
    let c = build(
        "module M x : [0..2] init 0;
           [up] x=0 -> 2 : (x'=1);
           [] x=0 -> 2 : (x'=1);
           [] x=1 -> 1 : (x'=2);
         endmodule
         rewards \"r\" [up] true : 3; [] x=1 : 1; x=2 : 5; endrewards",
    );
    let r = c.reward("r").unwrap();
    // merged entry 0 -> 1: rate 4, half of which pays 3 per firing
    assert_eq!(c.rate(0, 1), 4.0);
    assert_eq!(r.transition[0], 1.5);
    assert_eq!(c.reward_rate(r), vec![6.0, 1.0, 5.0]);
    assert_eq!(r.state, vec![0.0, 0.0, 5.0]);
}

#[test]
fn multiple_commands_per_label_form_a_product() {
    let c = build(
        "module A a : [0..2] init 0;
           [s] a=0 -> 1 : (a'=1);
           [s] a=0 -> 2 : (a'=2);
         endmodule
         module B b : [0..2] init 0;
           [s] b=0 -> 3 : (b'=1);
           [s] b=0 -> 5 : (b'=2);
         endmodule",
    );
    assert_eq!(c.num_states(), 5);
    assert_eq!(c.num_transitions(), 4);
    let idx = |a, b| c.find_state(&[a, b]).unwrap();
    assert_eq!(c.rate(0, idx(1, 1)), 3.0);
    assert_eq!(c.rate(0, idx(2, 2)), 10.0);
    assert_eq!(c.exit_rate(0), 3.0 + 5.0 + 6.0 + 10.0);
}

#[test]
fn label_blocks_when_a_partner_is_disabled() {
    let c = build(
        "module A a : [0..1] init 0; [s] a=0 -> 1 : (a'=1); endmodule
         module B b : [0..1] init 1; [s] b=0 -> 1 : (b'=1); endmodule",
    );
    assert_eq!(c.num_states(), 1);
}

#[test]
fn bfs_order_is_deterministic() {
    let src = "module A a : [0..3] init 0;
                 [] a<3 -> 1 : (a'=a+1);
                 [] a>0 -> 2 : (a'=a-1);
               endmodule
               module B b : [0..1] init 0; [] b=0 -> 1 : (b'=1); endmodule";
    let c1 = build(src);
    let c2 = build(src);
    assert_eq!(c1.states, c2.states);
    assert_eq!(c1.rates, c2.rates);
    // first successor of the initial state is from the first command
    assert_eq!(c1.state(1), &[1, 0]);
    assert_eq!(c1.state(2), &[0, 1]);
}

#[test]
fn state_cap_aborts() {
    let ast = parse_model("module A a : [0..9] init 0; [] a<9 -> 1 : (a'=a+1); endmodule").unwrap();
    let err = build_state_space::<f64>(&ast, &BuildOptions { max_states: 5 }).unwrap_err();
    assert_eq!(err, ComposeError::TooManyStates { limit: 5 });
}

#[test]
fn update_out_of_range_is_an_error() {
    let ast = parse_model("module A a : [0..1] init 1; [] true -> 1 : (a'=a+1); endmodule").unwrap();
    assert!(matches!(
        build_state_space::<f64>(&ast, &BuildOptions::default()),
        Err(ComposeError::OutOfRange { value: 2, .. })
    ));
}

#[test]
fn export_formats() {
    let c = build(SYNC_PAIR);
    let mut tra = Vec::new();
    export::write_tra(&c, &mut tra).unwrap();
    assert_eq!(String::from_utf8(tra).unwrap(), "2 1\n0 1 6\n");
    let mut sta = Vec::new();
    export::write_sta(&c, &mut sta).unwrap();
    assert_eq!(String::from_utf8(sta).unwrap(), "(a,b)\n0:(0,0)\n1:(1,1)\n");
    let mut lab = Vec::new();
    export::write_lab(&c, &mut lab).unwrap();
    assert_eq!(String::from_utf8(lab).unwrap(), "0=\"init\" 1=\"deadlock\"\n0: 0\n1: 1\n");
}

#[test]
fn f32_chain_builds() {
    let c: Ctmc<f32> = build_state_space(&parse_model(SYNC_PAIR).unwrap(), &BuildOptions::default()).unwrap();
    assert_eq!(c.rate(0, 1), 6.0f32);
}
