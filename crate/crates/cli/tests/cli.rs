use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TOY: &str = "
module A
  a : [0..1] init 0;
  [] a=0 -> 1 : (a'=1); //@reaction 1
  [] a=1 -> 0.5 : (a'=0); //@reaction 2
endmodule
module B
  b : [0..1] init 0;
  [] b=0 & a=1 -> 2 : (b'=1); //@reaction 3
  [] b=1 -> 1 : (b'=0); //@reaction 4
endmodule
rewards \"one\"
  true : 1;
endrewards
";

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ctmc-check"));
    cmd.args(args).env_remove("CTMC_CHECK_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Exit status 1 with a single `error[<class>]:` line.
fn assert_error(o: &Output, class: &str) {
    assert_eq!(o.status.code(), Some(1), "expected error[{class}], stdout: {}", stdout(o));
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error[")).collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with(&format!("error[{class}]: ")), "{err}");
}

fn toy(dir: &Path) -> String {
    let p = dir.join("toy.gcm");
    std::fs::write(&p, TOY).unwrap();
    p.display().to_string()
}

fn pdgf() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models/pdgf.gcm").display().to_string()
}

#[test]
fn build_stats_table() {
    let o = run(&["build", &pdgf(), "--stats"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<Vec<&str>> = out.lines().map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(lines[0], vec!["Model", "statistics"]);
    assert_eq!(lines[1], vec!["Model", "States", "Transitions"]);
    assert_eq!(lines[2][0], "pdgf");
    assert!(lines[2][1].parse::<usize>().unwrap() > 0);
}

#[test]
fn check_prints_values() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let o = run(&["check", &m, "-p", "P=? [ F[1,1] a=1 ]", "-p", "R{\"one\"}=? [ C<=2 ]", "-p", "a=0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    let p: f64 = lines[0].rsplit(' ').next().unwrap().parse().unwrap();
    assert!((p - (1.0 - (-1.5f64).exp()) / 1.5).abs() < 1e-9);
    assert_eq!(lines[1], "R{\"one\"}=? [ C<=2 ]: 2");
    assert!(lines[2].starts_with("a=0: true"));

    let o = run(&["check", &pdgf(), "-p", "S=? [ PPX=1 ]"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(v.abs() < 0.005);
}

#[test]
fn property_file_and_all_states() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let props = dir.path().join("p.props");
    std::fs::write(&props, "# comment\nS=? [ b=1 ]\n\nP>0.1 [ F<=1 b=1 ]\n").unwrap();
    let o = run(&["--json", "check", &m, "--props", props.to_str().unwrap(), "--all-states"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["states"], 4);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["values"].as_array().unwrap().len(), 4);
    assert!(results[1]["states"].is_array());
    assert!(results[0]["diagnostics"]["solver_iterations"].is_number());

    std::fs::write(&props, "S=? [ b=1 ]\nP=? [ F[2,1] a=1 ]\n").unwrap();
    let o = run(&["check", &m, "--props", props.to_str().unwrap()]);
    assert_error(&o, "validation");
    assert!(stderr(&o).contains("p.props: 2:11:"), "{}", stderr(&o));
}

#[test]
fn error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let write = |name: &str, src: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, src).unwrap();
        p.display().to_string()
    };

    assert_error(&run(&["check", "missing.gcm", "-p", "a=1"]), "io");
    let lex = write("lex.gcm", "module M x : [0..1] init 0; [] x=0 -> $ : (x'=1); endmodule");
    assert_error(&run(&["build", &lex]), "lex");
    let syn = write("syn.gcm", "module M x : [0..1] init 0 endmodule");
    assert_error(&run(&["build", &syn]), "syntax");
    let val = write("val.gcm", "module M x : [0..1] init 0; [] y=0 -> 1 : (x'=1); endmodule");
    assert_error(&run(&["build", &val]), "validation");
    assert_error(&run(&["check", &m, "-p", "P=? [ F nope=1 ]"]), "validation");
    assert_error(&run(&["check", &m, "-p", "P=? [ F a=1"]), "syntax");
    assert_error(&run(&["build", &pdgf(), "--max-states", "10"]), "build");
    assert_error(&run(&["steady", &pdgf(), "--max-iters", "1"]), "solve");
    assert_error(&run(&["steady", &m, "--molecules", "zz"]), "check");
    assert_error(&run(&["sweep", &m, "-p", "P=? [ F[{t},{t}] a=1 ]", "--times", "1", "--variant", "x=9"]), "spec");
    assert_error(&run(&["knockout-scan", &m, "--a", "S=? [ a=1 ]", "--b", "b=1"]), "spec");
    let rates = write("bad_rates.gcm", "const double k = ;");
    assert_error(&run(&["build", &m, "--rates", &rates]), "syntax");
    let spec = write("exp.toml", "model = \"toy.gcm\"\nqueries = []\nbogus = 1\n");
    assert_error(&run(&["sweep", "--spec", &spec]), "spec");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    for args in [
        vec!["frobnicate"],
        vec!["check", m.as_str()],
        vec!["check", m.as_str(), "-p", "a=1", "--solver", "sor"],
        vec!["check", m.as_str(), "-p", "a=1", "--epsilon", "0"],
        vec!["check", m.as_str(), "-p", "a=1", "--unif-factor", "0.5"],
        vec!["rewards", m.as_str(), "--times", "3,1"],
        vec!["simulate", m.as_str(), "--estimate", "a=1"],
        vec!["simulate", m.as_str(), "--horizon", "-1"],
        vec![],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = run_env(&["build", &m], &[("CTMC_CHECK_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn help_lists_defaults() {
    let out = stdout(&run(&["check", "--help"]));
    for flag in ["--epsilon", "--max-iters", "--solver", "--unif-factor", "--max-states"] {
        let line = out.lines().find(|l| l.contains(flag)).unwrap_or_else(|| panic!("{flag} missing"));
        let rest: String = out.lines().skip_while(|l| *l != line).take(3).collect();
        assert!(rest.contains("[default:"), "{flag}: {rest}");
    }
}

#[test]
fn read_only_commands_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec!["check", &m, "-p", "S=? [ b=1 ]", "--all-states"],
        vec!["steady", &m],
        vec!["rewards", &m, "--times", "0:4:0.5"],
        vec!["knockout-scan", &m, "--a", "a=1", "--b", "b=1"],
        vec!["simulate", &m, "--seed", "9", "--horizon", "20"],
        vec!["simulate", &m, "--seed", "9", "--estimate", "b=1", "--time", "2", "--runs", "500"],
    ];
    for args in cases {
        let a = run(&args);
        let b = run_env(&args, &[("CTMC_CHECK_THREADS", "3")]);
        assert!(a.status.success(), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn sweep_from_experiment_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let spec = dir.path().join("exp.toml");
    std::fs::write(
        &spec,
        "model = \"toy.gcm\"\ntimes = [0, 1]\nqueries = [\"P=? [ F[{t},{t}] a=1 ]\"]\noutputs = [\"out/a.csv\"]\n\
         [[variant]]\nname = \"noA\"\nremove_reactions = [\"1\"]\n",
    )
    .unwrap();
    let o = run(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/a.csv")).unwrap();
    assert!(csv.starts_with("time,wildtype,noA\n0,0,0\n1,0.517913"), "{csv}");

    let out = dir.path().join("b.csv");
    let o = run(&["sweep", "--spec", spec.to_str().unwrap(), "--times", "2", "--no-wildtype", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv, "time,noA\n2,0\n");
}

#[test]
fn sweep_json_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let o = run(&["sweep", &m, "-p", "P=? [ F[{t},{t}] b=1 ]", "--times", "0:1:0.5", "--variant", "noB=3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("time,wildtype,noB\n0,0,0\n0.5,"));
    let o = run(&["sweep", &m, "-p", "P=? [ F[{t},{t}] b=1 ]", "--times", "1", "--variant", "noB=label:x,3"]);
    assert_error(&o, "spec");
    let o = run(&["--json", "sweep", &m, "-p", "P=? [ F[{t},{t}] b=1 ]", "--times", "1", "--variant", "noB=3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["query"], "P=? [ F[{t},{t}] b=1 ]");
}

#[test]
fn export_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let prefix = dir.path().join("x/toy");
    let o = run(&["export", &m, "-o", prefix.to_str().unwrap()]);
    assert!(o.status.success());
    let tra = std::fs::read_to_string(dir.path().join("x/toy.tra")).unwrap();
    assert_eq!(tra.lines().next(), Some("4 7"));
    assert_eq!(tra.lines().count(), 8);
    assert!(dir.path().join("x/toy.sta").exists() && dir.path().join("x/toy.lab").exists());
}
