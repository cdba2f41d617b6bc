//! Random model ASTs for print/parse round-trips.

use ctmc_core::lang::ast::{
    BinOp, Command, ConstType, Constant, Expr, ModelAst, ModuleDef, RewardBlock, StateRewardItem, TransRewardItem,
    UnOp, Update, Value, VarDecl,
};
use ctmc_core::Rational;
use proptest::prelude::*;

fn num() -> impl Strategy<Value = Expr> {
    (0i64..40, prop::sample::select(vec![1i64, 2, 4, 5, 10, 100])).prop_map(|(n, d)| Expr::Num(Rational::new(n, d)))
}

fn int_lit() -> impl Strategy<Value = Expr> {
    (0i64..40).prop_map(Expr::int)
}

fn arith(vars: Vec<String>) -> impl Strategy<Value = Expr> {
    arith_from(num().boxed(), vars)
}

/// Integer-valued: updates must produce integers.
fn int_arith(vars: Vec<String>) -> impl Strategy<Value = Expr> {
    arith_from(int_lit().boxed(), vars)
}

fn arith_from(lit: BoxedStrategy<Expr>, vars: Vec<String>) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![lit, prop::sample::select(vars).prop_map(Expr::Ident)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Unary(UnOp::Neg, Box::new(e))),
            (prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul]), inner.clone(), inner)
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

fn boolean(vars: Vec<String>, flags: Vec<String>) -> impl Strategy<Value = Expr> {
    let rel = (
        prop::sample::select(vec![BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge]),
        arith(vars.clone()),
        arith(vars),
    )
        .prop_map(|(op, a, b)| Expr::binary(op, a, b));
    let leaf = prop_oneof![
        any::<bool>().prop_map(Expr::Bool),
        prop::sample::select(flags).prop_map(Expr::Ident),
        rel,
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            (prop::sample::select(vec![BinOp::And, BinOp::Or]), inner.clone(), inner)
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

/// Positive constant expression over the numeric constants.
fn rate() -> impl Strategy<Value = Expr> {
    let pos = prop_oneof![
        (1i64..40, prop::sample::select(vec![1i64, 2, 10])).prop_map(|(n, d)| Expr::Num(Rational::new(n, d))),
        prop::sample::select(vec!["ka", "kb"]).prop_map(Expr::ident),
    ];
    pos.prop_recursive(2, 4, 2, |inner| {
        (prop::sample::select(vec![BinOp::Add, BinOp::Mul]), inner.clone(), inner).prop_map(|(op, a, b)| Expr::binary(op, a, b))
    })
}

fn command(vars: Vec<String>, own: Vec<String>) -> impl Strategy<Value = Command> {
    let mut ints: Vec<String> = vars.iter().filter(|v| *v != "ka").cloned().collect();
    ints.push("kb".into());
    (
        prop::option::of(prop::sample::select(vec!["go", "stop"])),
        boolean(vars.clone(), vec!["flag".into()]),
        prop::option::of(rate()),
        prop::collection::vec((prop::sample::select(own), int_arith(ints)), 0..3),
        prop::option::of(1u32..50),
    )
        .prop_map(|(action, guard, rate, ups, reaction)| {
            let rate = if action.is_none() && rate.is_none() { Some(Expr::int(1)) } else { rate };
            let mut updates: Vec<Update> = Vec::new();
            for (var, value) in ups {
                if !updates.iter().any(|u| u.var == var) {
                    updates.push(Update { var, value });
                }
            }
            Command {
                action: action.map(String::from),
                guard,
                rate,
                updates,
                reaction: reaction.map(|r| r.to_string()),
            }
        })
}

pub fn model() -> impl Strategy<Value = ModelAst> {
    (1usize..4, prop::collection::vec(1usize..3, 3)).prop_flat_map(|(n_mod, widths)| {
        let names: Vec<Vec<String>> =
            (0..n_mod).map(|m| (0..widths[m]).map(|v| format!("m{m}v{v}")).collect()).collect();
        let all: Vec<String> = names.iter().flatten().cloned().collect();
        let mut vars = all.clone();
        vars.push("ka".into());
        let modules: Vec<_> = names
            .iter()
            .enumerate()
            .map(|(m, own)| {
                let decls = prop::collection::vec((0i64..3, 0i64..3), own.len()).prop_map({
                    let own = own.clone();
                    move |r| {
                        own.iter()
                            .zip(r)
                            .map(|(n, (hi, init))| VarDecl {
                                name: n.clone(),
                                lo: 0,
                                hi: hi + 1,
                                init: init.min(hi + 1),
                            })
                            .collect::<Vec<_>>()
                    }
                });
                (decls, prop::collection::vec(command(vars.clone(), own.clone()), 0..4)).prop_map(
                    move |(variables, commands)| ModuleDef {
                        name: format!("M{m}"),
                        variables,
                        commands,
                    },
                )
            })
            .collect();
        let rewards = prop::collection::vec(
            (
                prop::collection::vec((boolean(vars.clone(), vec!["flag".into()]), rate()), 0..3),
                prop::collection::vec(
                    (prop::option::of(prop::sample::select(vec!["go", "stop"])), boolean(vars.clone(), vec!["flag".into()]), rate()),
                    0..2,
                ),
            ),
            0..3,
        );
        (modules, rewards).prop_map(|(modules, rewards)| ModelAst {
            constants: vec![
                Constant {
                    name: "ka".into(),
                    ty: ConstType::Double,
                    value: Value::Num(Rational::new(3, 4)),
                },
                Constant {
                    name: "kb".into(),
                    ty: ConstType::Int,
                    value: Value::Num(Rational::from_integer(2)),
                },
                Constant {
                    name: "flag".into(),
                    ty: ConstType::Bool,
                    value: Value::Bool(true),
                },
            ],
            modules,
            rewards: rewards
                .into_iter()
                .enumerate()
                .map(|(i, (st, tr))| RewardBlock {
                    name: format!("r{i}"),
                    state_items: st.into_iter().map(|(guard, value)| StateRewardItem { guard, value }).collect(),
                    trans_items: tr
                        .into_iter()
                        .map(|(action, guard, value)| TransRewardItem {
                            action: action.map(String::from),
                            guard,
                            value,
                        })
                        .collect(),
                })
                .collect(),
        })
    })
}

