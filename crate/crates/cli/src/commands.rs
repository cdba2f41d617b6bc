use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use ctmc_core::checker::Outcome;
use ctmc_core::compose::export::{write_lab, write_sta, write_tra};
use ctmc_core::harness::{
    format_g12, knockout_scan, load_model, reward_curves, run_experiment, steady_json, steady_state_table,
    write_steady_csv, ExperimentSpec, VariantSpec,
};
use ctmc_core::lang::parse_property_file;
use ctmc_core::numerics::Quantity;
use ctmc_core::sim::{estimate_transient, simulate_run, write_trajectory_csv};
use ctmc_core::{build_state_space, parse_property, CheckResult64, Checker, Ctmc64, Error, ModelAst, StateFormula};
use serde_json::{json, Value as Json};

use crate::{build_options, harness_config, Cli, Command, ModelArgs, NumArgs};

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn stdout_err(e: io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        msg: e.to_string(),
    }
}

/// Run `write` against `path`, or stdout when `path` is `None`.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Error> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            let mut w = BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?);
            write(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(p, e))
        }
        None => {
            let mut out = io::stdout().lock();
            write(&mut out).and_then(|_| out.flush()).map_err(stdout_err)
        }
    }
}

fn print_json(v: &Json) -> Result<(), Error> {
    emit(None, |w| writeln!(w, "{}", serde_json::to_string_pretty(v).expect("JSON values serialise")))
}

fn load(m: &ModelArgs) -> Result<ModelAst, Error> {
    load_model(&m.model, m.rates.as_deref())
}

fn build(m: &ModelArgs, ast: &ModelAst) -> Result<Ctmc64, Error> {
    let ctmc = build_state_space(ast, &build_options(m))?;
    log::info!("{}: {} states, {} transitions", m.model.display(), ctmc.num_states(), ctmc.num_transitions());
    Ok(ctmc)
}

fn model_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn absolute(p: &Path) -> Result<PathBuf, Error> {
    if p.is_absolute() {
        return Ok(p.to_path_buf());
    }
    let cwd = std::env::current_dir().map_err(|e| io_err(Path::new("."), e))?;
    Ok(cwd.join(p))
}

fn quantity_text(q: Quantity<f64>) -> String {
    match q {
        Quantity::Finite(v) => format_g12(v),
        Quantity::Infinite => "inf".into(),
    }
}

pub fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Build { model, stats } => cmd_build(cli, model, *stats),
        Command::Check {
            model,
            properties,
            props,
            all_states,
            num,
        } => cmd_check(cli, model, properties, props.as_deref(), *all_states, num),
        Command::Sweep {
            model,
            spec,
            rates,
            properties,
            times,
            variants,
            no_wildtype,
            max_states,
            output,
            num,
        } => {
            let mut exp = match spec {
                Some(path) => ExperimentSpec::load(path)?,
                None => ExperimentSpec {
                    wildtype: true,
                    ..Default::default()
                },
            };
            let base_dir = match spec {
                Some(path) => path.parent().map(Path::to_path_buf).unwrap_or_default(),
                None => PathBuf::new(),
            };
            match model {
                Some(m) => exp.model = absolute(m)?,
                None if spec.is_none() => return Err(Error::Spec("sweep needs a model file or --spec".into())),
                None => {}
            }
            if let Some(r) = rates {
                exp.rates = Some(absolute(r)?);
            }
            if let Some(t) = times {
                exp.times = t.clone();
            }
            if !properties.is_empty() {
                exp.queries = properties.clone();
            }
            if !output.is_empty() {
                exp.outputs = output.iter().map(|p| absolute(p)).collect::<Result<_, _>>()?;
            }
            if !variants.is_empty() {
                exp.variants = variants
                    .iter()
                    .map(|v| VariantSpec {
                        name: v.name.clone(),
                        remove_reactions: v.reactions.clone(),
                        remove_labels: v.labels.clone(),
                    })
                    .collect();
            }
            if *no_wildtype {
                exp.wildtype = false;
            }
            let cfg = harness_config(
                &ModelArgs {
                    model: exp.model.clone(),
                    rates: None,
                    max_states: *max_states,
                },
                num,
            );
            let tables = run_experiment(&exp, &base_dir, &cfg)?;
            if cli.json {
                let arr: Vec<Json> = exp
                    .queries
                    .iter()
                    .zip(&tables)
                    .map(|(q, t)| json!({ "query": q, "table": t.to_json() }))
                    .collect();
                return print_json(&Json::Array(arr));
            }
            for table in tables.iter().skip(exp.outputs.len()) {
                emit(None, |w| table.write_csv(w))?;
            }
            for (path, q) in exp.outputs.iter().zip(&exp.queries) {
                log::info!("{q} -> {}", path.display());
            }
            Ok(())
        }
        Command::Steady {
            model,
            molecules,
            output,
            num,
        } => {
            let ast = load(model)?;
            let names: Vec<String> = if molecules.is_empty() {
                ast.variables().map(|(_, v)| v.name.clone()).collect()
            } else {
                molecules.clone()
            };
            let rows = steady_state_table(&ast, &names, &harness_config(model, num))?;
            if cli.json {
                print_json(&steady_json(&rows))?;
            } else {
                emit(output.as_deref(), |w| write_steady_csv(&rows, w))?;
            }
            // the table is written in full; the exit status reports the first failed row
            match rows.into_iter().find_map(|r| r.value.err()) {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Rewards {
            model,
            times,
            blocks,
            output,
            num,
        } => {
            let ast = load(model)?;
            let names: Vec<String> = if blocks.is_empty() {
                ast.rewards.iter().map(|r| r.name.clone()).collect()
            } else {
                blocks.clone()
            };
            if names.is_empty() {
                return Err(Error::Spec("model has no reward structures".into()));
            }
            let curves = reward_curves(&ast, &names, &times.instants()?, &harness_config(model, num))?;
            if cli.json {
                return print_json(&curves.to_json());
            }
            emit(output.as_deref(), |w| curves.write_csv(w))
        }
        Command::KnockoutScan {
            model,
            formula_a,
            formula_b,
            output,
            num,
        } => {
            let ast = load(model)?;
            let a = state_formula(formula_a, &ast)?;
            let b = state_formula(formula_b, &ast)?;
            let table = knockout_scan(&ast, &a, &b, &harness_config(model, num))?;
            if cli.json {
                return print_json(&table.to_json());
            }
            emit(output.as_deref(), |w| table.write_csv(w))
        }
        Command::Simulate {
            model,
            seed,
            horizon,
            run,
            estimate,
            time,
            runs,
            output,
        } => {
            let ast = load(model)?;
            let ctmc = build(model, &ast)?;
            if let Some(text) = estimate {
                let expr = match state_formula(text, &ast)? {
                    StateFormula::Atom(e) => e,
                    _ => return Err(Error::Spec(format!("--estimate takes a state expression, got `{text}`"))),
                };
                let t = time.expect("clap requires --time with --estimate");
                let est = estimate_transient(&ctmc, &expr, t, *runs as usize, *seed)?;
                if cli.json {
                    return print_json(&json!({
                        "expression": text,
                        "time": t,
                        "seed": seed,
                        "runs": est.runs,
                        "estimate": est.estimate,
                        "half_width": est.half_width,
                    }));
                }
                return emit(None, |w| {
                    writeln!(
                        w,
                        "{} +/- {} (95% CI, {} runs)",
                        format_g12(est.estimate),
                        format_g12(est.half_width),
                        est.runs
                    )
                });
            }
            let traj = simulate_run(&ctmc, *seed, *run, *horizon)?;
            if cli.json {
                let mut clock = 0.0;
                let segments: Vec<Json> = traj
                    .segments
                    .iter()
                    .map(|&(s, d)| {
                        let seg = json!({ "time": clock, "state": s, "values": ctmc.state(s) });
                        clock += d;
                        seg
                    })
                    .collect();
                return print_json(&json!({
                    "seed": traj.seed,
                    "run": traj.run,
                    "horizon": traj.horizon,
                    "variables": ctmc.variables().iter().map(|v| v.name.clone()).collect::<Vec<_>>(),
                    "segments": segments,
                }));
            }
            emit(output.as_deref(), |w| write_trajectory_csv(&ctmc, &traj, w))
        }
        Command::Export { model, output } => {
            let ast = load(model)?;
            let ctmc = build(model, &ast)?;
            let mut files = Vec::new();
            for ext in ["tra", "sta", "lab"] {
                let mut name = output.clone().into_os_string();
                name.push(format!(".{ext}"));
                let path = PathBuf::from(name);
                emit(Some(&path), |w| match ext {
                    "tra" => write_tra(&ctmc, w),
                    "sta" => write_sta(&ctmc, w),
                    _ => write_lab(&ctmc, w),
                })?;
                files.push(path.display().to_string());
            }
            if cli.json {
                return print_json(&json!({ "files": files }));
            }
            emit(None, |w| files.iter().try_for_each(|f| writeln!(w, "{f}")))
        }
    }
}

fn state_formula(text: &str, ast: &ModelAst) -> Result<StateFormula, Error> {
    let f = parse_property(text, Some(ast))?;
    if f.is_query() {
        return Err(Error::Spec(format!("`{text}` is a query; a state formula is expected")));
    }
    Ok(f)
}

fn cmd_build(cli: &Cli, model: &ModelArgs, stats: bool) -> Result<(), Error> {
    let ast = load(model)?;
    let ctmc = build(model, &ast)?;
    let name = model_name(&model.model);
    let deadlocks = ctmc.deadlocks().len();
    if cli.json {
        return print_json(&json!({
            "model": name,
            "states": ctmc.num_states(),
            "transitions": ctmc.num_transitions(),
            "deadlocks": deadlocks,
        }));
    }
    emit(None, |w| {
        if stats {
            writeln!(w, "Model statistics")?;
            writeln!(w, "{:<16} {:>12} {:>14}", "Model", "States", "Transitions")?;
            writeln!(w, "{:<16} {:>12} {:>14}", name, ctmc.num_states(), ctmc.num_transitions())
        } else {
            writeln!(
                w,
                "{name}: {} states, {} transitions, {deadlocks} absorbing",
                ctmc.num_states(),
                ctmc.num_transitions()
            )
        }
    })
}

fn cmd_check(
    cli: &Cli,
    model: &ModelArgs,
    properties: &[String],
    props: Option<&Path>,
    all_states: bool,
    num: &NumArgs,
) -> Result<(), Error> {
    let ast = load(model)?;
    let mut formulas = Vec::new();
    for p in properties {
        formulas.push(parse_property(p, Some(&ast))?);
    }
    if let Some(path) = props {
        let src = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let parsed = parse_property_file(&src, Some(&ast)).map_err(|e| Error::in_file(path, e))?;
        formulas.extend(parsed.into_iter().map(|(_, f)| f));
    }
    if formulas.is_empty() {
        return Err(Error::Spec("no properties to check".into()));
    }
    let ctmc = build(model, &ast)?;
    let checker = Checker::new(&ctmc, num.check_config());
    let results: Vec<CheckResult64> = formulas.iter().map(|f| checker.check(f)).collect::<Result<_, _>>()?;
    if cli.json {
        let arr: Vec<Json> = results.iter().map(|r| r.to_json(all_states)).collect();
        return print_json(&json!({
            "model": model_name(&model.model),
            "states": ctmc.num_states(),
            "transitions": ctmc.num_transitions(),
            "results": arr,
        }));
    }
    emit(None, |w| {
        for r in &results {
            match &r.outcome {
                Outcome::Value { initial, per_state } => {
                    writeln!(w, "{}: {}", r.formula, quantity_text(*initial))?;
                    if all_states {
                        for (s, q) in per_state.iter().enumerate() {
                            writeln!(w, "  {s} {:?} {}", ctmc.state(s), quantity_text(*q))?;
                        }
                    }
                }
                Outcome::Satisfied { set, initial } => {
                    writeln!(w, "{}: {initial} ({} of {} states)", r.formula, set.count(), ctmc.num_states())?;
                    if all_states {
                        for s in set.iter() {
                            writeln!(w, "  {s} {:?}", ctmc.state(s))?;
                        }
                    }
                }
            }
        }
        Ok(())
    })
}
