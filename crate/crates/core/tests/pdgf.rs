//! Structural checks on the shipped signalling model.

mod common;

use ctmc_core::harness::{
    knockout_scan, load_model, make_variant, run_experiment, steady_state_table, Edit, ExperimentSpec, HarnessConfig,
    Quadrant, ReactionIndex,
};
use ctmc_core::lang::ast::Expr;
use ctmc_core::{build_state_space, check, parse_property, CheckConfig, Ctmc64, ModelAst, StateFormula};

fn pdgf() -> ModelAst {
    load_model(&common::workspace_path("models/pdgf.gcm"), None).unwrap()
}

fn steady(ast: &ModelAst, var: &str) -> f64 {
    let c: Ctmc64 = build_state_space(ast, &Default::default()).unwrap();
    let f = parse_property(&format!("S=? [ {var}=1 ]"), Some(ast)).unwrap();
    check(&c, &f, &CheckConfig::default()).unwrap().scalar().unwrap()
}

#[test]
fn shape() {
    let ast = pdgf();
    assert_eq!(ast.modules.len(), 14);
    assert_eq!(ast.variables().count(), 14);
    let index = ReactionIndex::build(&ast).unwrap();
    assert_eq!(index.len(), 40);
    let names = ["PDGFL", "bPTEN", "bPDK"];
    assert!(names.iter().all(|n| ast.constants.iter().any(|c| c.name == *n)));
    let c: Ctmc64 = build_state_space(&ast, &Default::default()).unwrap();
    assert!(c.deadlocks().is_empty());
}

#[test]
fn receptor_mutants_shrink_the_chain() {
    let ast = pdgf();
    let wild: Ctmc64 = build_state_space(&ast, &Default::default()).unwrap();
    // 7: SHP2, 8: PI3K, 6: cCbl recruitment by the receptor
    for (id, target) in [("7", "SHP2"), ("8", "PI3K"), ("6", "cCbl")] {
        let (v, _) = make_variant(&ast, &[Edit::RemoveReaction(id.into())]).unwrap();
        let c: Ctmc64 = build_state_space(&v, &Default::default()).unwrap();
        assert!(c.num_states() <= wild.num_states(), "{id}");
        if target != "PI3K" {
            // no other route activates SHP2 or cCbl
            assert_eq!(steady(&v, target), 0.0, "{id}");
            assert!(c.num_states() < wild.num_states());
        }
    }
}

#[test]
fn inputs_off_silence_the_pathway() {
    let ast = pdgf();
    let mut off = ast.clone();
    for c in off.constants.iter_mut().filter(|c| c.name == "PDGFL") {
        c.value = ctmc_core::lang::ast::Value::Bool(false);
    }
    assert_eq!(steady(&off, "PDGFR"), 0.0);
    assert_eq!(steady(&off, "MEK12"), 0.0);
    // basal PDK keeps some Akt activity without ligand
    assert!(steady(&off, "Akt") > 0.0);
}

#[test]
fn basal_pdk_knockout_lowers_akt() {
    let ast = pdgf();
    let akt = StateFormula::Atom(Expr::var_eq("Akt", 1));
    let mek = StateFormula::Atom(Expr::var_eq("MEK12", 1));
    let scan = knockout_scan(&ast, &akt, &mek, &HarnessConfig::default()).unwrap();
    assert_eq!(scan.rows.len(), 41);
    let wild = &scan.rows[0];
    let row = scan.rows.iter().find(|r| r.reaction_id == "24").unwrap();
    assert!(row.a.unwrap() < wild.a.unwrap());
    assert!(matches!(row.quadrant, Quadrant::Area1 | Quadrant::Area2), "{:?}", row.quadrant);
    // removing Akt's inhibition of cRaf raises MEK12
    let row = scan.rows.iter().find(|r| r.reaction_id == "27").unwrap();
    assert!(row.b.unwrap() > wild.b.unwrap());
}

#[test]
fn steady_table_reports_ppx_zero() {
    let ast = pdgf();
    let rows = steady_state_table(&ast, &["PPX".into(), "MTOR".into()], &HarnessConfig::default()).unwrap();
    assert_eq!(rows[0].value.clone().unwrap(), 0.0);
    assert!(rows[1].value.clone().unwrap() > 0.0);
}

#[test]
fn shipped_experiments_run() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["mutants", "crosstalk"] {
        let path = common::workspace_path(&format!("experiments/{name}.toml"));
        let mut spec = ExperimentSpec::load(&path).unwrap();
        spec.outputs = spec.outputs.iter().map(|p| dir.path().join(p.file_name().unwrap())).collect();
        let tables = run_experiment(&spec, path.parent().unwrap(), &HarnessConfig::default()).unwrap();
        assert_eq!(tables.len(), spec.queries.len());
        for t in &tables {
            assert_eq!(t.columns.len(), spec.variants.len() + 1, "{name}");
            assert_eq!(t.times.len(), 41);
            assert!(t.values.iter().flatten().all(|v| (0.0..=1.0 + 1e-9).contains(v)));
        }
        for out in &spec.outputs {
            assert!(out.exists());
        }
    }
}
