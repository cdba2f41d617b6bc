//! Experiment designs over a base model: knockout variants, transient
//! sweeps, steady-state tables, reward curves and the single-reaction
//! knockout scan. Results are plain tables written as CSV.

mod spec;
mod variant;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::checker::{CheckConfig, Checker};
use crate::compose::{build_state_space, BuildOptions, Ctmc};
use crate::error::Error;
use crate::lang::ast::{Expr, ModelAst};
use crate::lang::property::{Bound, Interval, PathFormula, RewardKind, StateFormula};
use crate::lang::{parse_constants, parse_model_with_constants, parse_property};
use crate::numerics::Quantity;
use crate::Rational;

pub use spec::{ExperimentSpec, TimeGrid, VariantSpec};
pub use variant::{describe_reaction, make_variant, CommandRef, Edit, ReactionIndex};

/// Format like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (11 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Rate file paired with `model`: `<stem>_rates.gcm` next to it, if present.
pub fn companion_rates(model: &Path) -> Option<PathBuf> {
    let stem = model.file_stem()?.to_str()?;
    let p = model.with_file_name(format!("{stem}_rates.gcm"));
    p.is_file().then_some(p)
}

/// Load a model, prepending the constants of `rates` (or of the companion
/// rate file when `rates` is `None`).
pub fn load_model(path: &Path, rates: Option<&Path>) -> Result<ModelAst, Error> {
    let src = read_file(path)?;
    let rates = rates.map(Path::to_path_buf).or_else(|| companion_rates(path));
    let base = match &rates {
        Some(r) => parse_constants(&read_file(r)?).map_err(|e| Error::in_file(r, e))?,
        None => Vec::new(),
    };
    parse_model_with_constants(&src, &base).map_err(|e| Error::in_file(path, e))
}

/// Checker and builder settings shared by all experiments.
#[derive(Debug, Clone, Copy, Default)]
pub struct HarnessConfig {
    pub check: CheckConfig,
    pub build: BuildOptions,
}

/// A named knockout: the base model with `edits` applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub name: String,
    pub edits: Vec<Edit>,
}

impl Variant {
    pub fn wildtype() -> Self {
        Variant {
            name: "wildtype".into(),
            edits: Vec::new(),
        }
    }

    pub fn new(name: impl Into<String>, edits: Vec<Edit>) -> Self {
        Variant {
            name: name.into(),
            edits,
        }
    }
}

/// Time instants must be finite, non-negative and strictly increasing.
pub fn check_time_grid(times: &[f64]) -> Result<(), Error> {
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Spec(format!("time {t} must be finite and >= 0")));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Spec(format!("time grid is not strictly increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

fn rational_time(t: f64) -> Result<Rational, Error> {
    Rational::approximate_float(t).ok_or_else(|| Error::Spec(format!("time {t} is not representable")))
}

/// Rows indexed by time, one column per series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// `values[i][j]`: column `j` at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |row| row[j])
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(std::iter::once("time").chain(self.columns.iter().map(String::as_str)))?;
        for (t, row) in self.times.iter().zip(&self.values) {
            out.write_record(std::iter::once(format_g12(*t)).chain(row.iter().map(|v| format_g12(*v))))?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let f = fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_csv(io::BufWriter::new(f)).map_err(|e| io_err(path, e))
    }

    pub fn to_json(&self) -> Json {
        json!({ "columns": self.columns, "times": self.times, "values": self.values })
    }
}

fn quantity(q: Quantity<f64>) -> f64 {
    q.finite().unwrap_or(f64::INFINITY)
}

fn build(ast: &ModelAst, cfg: &HarnessConfig) -> Result<Ctmc<f64>, Error> {
    Ok(build_state_space(ast, &cfg.build)?)
}

/// Evaluate `query(t)` for every variant at every time. Variants are built
/// and checked in parallel; columns keep the order of `variants`.
pub fn sweep_queries<F>(
    base: &ModelAst,
    variants: &[Variant],
    times: &[f64],
    cfg: &HarnessConfig,
    query: F,
) -> Result<TimeSeries, Error>
where
    F: Fn(&ModelAst, f64) -> Result<StateFormula, Error> + Sync,
{
    check_time_grid(times)?;
    let columns: Vec<Vec<f64>> = variants
        .par_iter()
        .map(|v| {
            let run = || -> Result<Vec<f64>, Error> {
                let (ast, _) = make_variant(base, &v.edits)?;
                let ctmc = build(&ast, cfg)?;
                let checker = Checker::new(&ctmc, cfg.check);
                times
                    .iter()
                    .map(|&t| {
                        let f = query(&ast, t)?;
                        let r = checker.check(&f)?;
                        r.value()
                            .map(quantity)
                            .ok_or_else(|| Error::Spec(format!("`{}` is not a `=?` query", r.formula)))
                    })
                    .collect()
            };
            run().map_err(|e| e.in_variant(&v.name))
        })
        .collect::<Result<_, _>>()?;
    Ok(TimeSeries {
        columns: variants.iter().map(|v| v.name.clone()).collect(),
        times: times.to_vec(),
        values: (0..times.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect(),
    })
}

/// `P=? [ F[t,t] target ]` across `times` for each variant.
pub fn sweep_transient(
    base: &ModelAst,
    variants: &[Variant],
    target: &StateFormula,
    times: &[f64],
    cfg: &HarnessConfig,
) -> Result<TimeSeries, Error> {
    sweep_queries(base, variants, times, cfg, |_, t| {
        Ok(StateFormula::Prob {
            bound: Bound::Query,
            path: PathFormula::eventually(Interval::point(rational_time(t)?), target.clone()),
        })
    })
}

/// Evaluate a property template in which `{t}` stands for the time.
pub fn sweep_template(
    base: &ModelAst,
    variants: &[Variant],
    template: &str,
    times: &[f64],
    cfg: &HarnessConfig,
) -> Result<TimeSeries, Error> {
    sweep_queries(base, variants, times, cfg, |ast, t| {
        let src = template.replace("{t}", &format_g12(t));
        Ok(parse_property(&src, Some(ast))?)
    })
}

/// `R{block}=? [ C<=t ]` for each block across `times`.
pub fn reward_curves(ast: &ModelAst, blocks: &[String], times: &[f64], cfg: &HarnessConfig) -> Result<TimeSeries, Error> {
    check_time_grid(times)?;
    for b in blocks {
        if ast.reward_block(b).is_none() {
            return Err(Error::Spec(format!("unknown reward structure \"{b}\"")));
        }
    }
    let ctmc = build(ast, cfg)?;
    let checker = Checker::new(&ctmc, cfg.check);
    let columns: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|b| {
            times
                .iter()
                .map(|&t| {
                    let f = StateFormula::Reward {
                        structure: b.clone(),
                        bound: Bound::Query,
                        kind: RewardKind::Cumulative(rational_time(t)?),
                    };
                    let r = checker.check(&f)?;
                    Ok(r.value().map_or(f64::NAN, quantity))
                })
                .collect::<Result<Vec<f64>, Error>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(TimeSeries {
        columns: blocks.to_vec(),
        times: times.to_vec(),
        values: (0..times.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyRow {
    pub molecule: String,
    /// `S=? [ molecule=1 ]`, or the solver error for this row.
    pub value: Result<f64, Error>,
}

/// Long-run probability of each molecule being active (`m=1`).
pub fn steady_state_table(ast: &ModelAst, molecules: &[String], cfg: &HarnessConfig) -> Result<Vec<SteadyRow>, Error> {
    let ctmc = build(ast, cfg)?;
    let checker = Checker::new(&ctmc, cfg.check);
    Ok(molecules
        .iter()
        .map(|m| {
            let f = StateFormula::Steady {
                bound: Bound::Query,
                inner: Box::new(StateFormula::Atom(Expr::var_eq(m, 1))),
            };
            let value = checker
                .check(&f)
                .map(|r| r.value().map_or(f64::NAN, quantity))
                .map_err(Error::from);
            SteadyRow {
                molecule: m.clone(),
                value,
            }
        })
        .collect())
}

/// Table as CSV with values rounded to two decimals; failed rows carry
/// `error` and the message.
pub fn write_steady_csv<W: Write>(rows: &[SteadyRow], w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["molecule", "steady", "error"])?;
    for r in rows {
        match &r.value {
            Ok(v) => out.write_record([r.molecule.as_str(), &format!("{v:.2}"), ""])?,
            Err(e) => out.write_record([r.molecule.as_str(), "error", &e.to_string()])?,
        }
    }
    out.flush()
}

pub fn steady_json(rows: &[SteadyRow]) -> Json {
    Json::Array(
        rows.iter()
            .map(|r| match &r.value {
                Ok(v) => json!({ "molecule": r.molecule, "value": v }),
                Err(e) => json!({ "molecule": r.molecule, "error": e.to_string(), "class": e.class().as_str() }),
            })
            .collect(),
    )
}

/// Position of a knockout relative to the wildtype point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    Origin,
    /// Both values decrease.
    Area1,
    /// A decreases, B increases.
    Area2,
    /// Both increase.
    Area3,
    /// A increases, B decreases.
    Area4,
    /// Only A moves.
    AxisA,
    /// Only B moves.
    AxisB,
    Unchanged,
    Error,
}

impl Quadrant {
    pub fn label(self) -> &'static str {
        match self {
            Quadrant::Origin => "origin",
            Quadrant::Area1 => "area1",
            Quadrant::Area2 => "area2",
            Quadrant::Area3 => "area3",
            Quadrant::Area4 => "area4",
            Quadrant::AxisA => "axis-a",
            Quadrant::AxisB => "axis-b",
            Quadrant::Unchanged => "unchanged",
            Quadrant::Error => "error",
        }
    }

    /// Classify `(a, b)` against the wildtype `(a0, b0)`; differences below
    /// `tol` count as no change.
    pub fn classify(a: f64, b: f64, a0: f64, b0: f64, tol: f64) -> Self {
        let sign = |d: f64| {
            if d > tol {
                1
            } else if d < -tol {
                -1
            } else {
                0
            }
        };
        match (sign(a - a0), sign(b - b0)) {
            (0, 0) => Quadrant::Unchanged,
            (-1, -1) => Quadrant::Area1,
            (-1, 1) => Quadrant::Area2,
            (1, 1) => Quadrant::Area3,
            (1, -1) => Quadrant::Area4,
            (_, 0) => Quadrant::AxisA,
            _ => Quadrant::AxisB,
        }
    }
}

pub const SCAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// Removed reaction, `-` for the wildtype.
    pub reaction_id: String,
    pub removed_name: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub quadrant: Quadrant,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub formula_a: String,
    pub formula_b: String,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["reactionId", "removedName", &self.formula_a, &self.formula_b, "quadrant", "error"])?;
        let cell = |v: Option<f64>| v.map(format_g12).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                r.reaction_id.clone(),
                r.removed_name.clone(),
                cell(r.a),
                cell(r.b),
                r.quadrant.label().to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        out.flush()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "formula_a": self.formula_a,
            "formula_b": self.formula_b,
            "rows": self.rows.iter().map(|r| json!({
                "reactionId": r.reaction_id,
                "removedName": r.removed_name,
                "a": r.a,
                "b": r.b,
                "quadrant": r.quadrant.label(),
                "error": r.error,
            })).collect::<Vec<_>>(),
        })
    }
}

fn steady_pair(ast: &ModelAst, fa: &StateFormula, fb: &StateFormula, cfg: &HarnessConfig) -> Result<(f64, f64), Error> {
    let ctmc = build(ast, cfg)?;
    let checker = Checker::new(&ctmc, cfg.check);
    let value = |f: &StateFormula| -> Result<f64, Error> {
        let q = StateFormula::Steady {
            bound: Bound::Query,
            inner: Box::new(f.clone()),
        };
        Ok(checker.check(&q)?.value().map_or(f64::NAN, quantity))
    };
    Ok((value(fa)?, value(fb)?))
}

/// Wildtype plus one variant per reaction: long-run probabilities of
/// `formula_a` and `formula_b` and the quadrant each knockout falls in.
/// A wildtype failure is an error; a failing variant becomes an `error` row.
pub fn knockout_scan(
    ast: &ModelAst,
    formula_a: &StateFormula,
    formula_b: &StateFormula,
    cfg: &HarnessConfig,
) -> Result<ScanTable, Error> {
    let index = ReactionIndex::build(ast)?;
    let (a0, b0) = steady_pair(ast, formula_a, formula_b, cfg).map_err(|e| e.in_variant("wildtype"))?;
    let ids: Vec<&str> = index.ids().collect();
    let mut rows = vec![ScanRow {
        reaction_id: "-".into(),
        removed_name: "wildtype".into(),
        a: Some(a0),
        b: Some(b0),
        quadrant: Quadrant::Origin,
        error: None,
    }];
    rows.par_extend(ids.par_iter().map(|id| {
        let removed_name = describe_reaction(ast, index.commands(id).expect("indexed id"));
        let result = make_variant(ast, &[Edit::RemoveReaction(id.to_string())])
            .and_then(|(v, _)| steady_pair(&v, formula_a, formula_b, cfg));
        match result {
            Ok((a, b)) => ScanRow {
                reaction_id: id.to_string(),
                removed_name,
                a: Some(a),
                b: Some(b),
                quadrant: Quadrant::classify(a, b, a0, b0, SCAN_TOLERANCE),
                error: None,
            },
            Err(e) => {
                log::warn!("knockout of reaction {id} failed: {e}");
                ScanRow {
                    reaction_id: id.to_string(),
                    removed_name,
                    a: None,
                    b: None,
                    quadrant: Quadrant::Error,
                    error: Some(e.to_string()),
                }
            }
        }
    }));
    Ok(ScanTable {
        formula_a: crate::lang::print_formula(formula_a),
        formula_b: crate::lang::print_formula(formula_b),
        rows,
    })
}

/// Run every query of an experiment, writing each table to its output
/// (paths relative to `base_dir`). Returns the tables in query order.
pub fn run_experiment(spec: &ExperimentSpec, base_dir: &Path, cfg: &HarnessConfig) -> Result<Vec<TimeSeries>, Error> {
    spec.check()?;
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
    let model = resolve(&spec.model);
    let rates = spec.rates.as_deref().map(resolve);
    let ast = load_model(&model, rates.as_deref())?;
    let variants = spec.variants();
    let times = spec.times.instants()?;
    let mut tables = Vec::new();
    for (i, q) in spec.queries.iter().enumerate() {
        let table = sweep_template(&ast, &variants, q, &times, cfg)?;
        if let Some(out) = spec.outputs.get(i) {
            let path = resolve(out);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            table.save(&path)?;
        }
        tables.push(table);
    }
    Ok(tables)
}

/// Secant slope of a series between the rows nearest `t0` and `t1`.
pub fn secant_slope(times: &[f64], values: impl Iterator<Item = f64>, t0: f64, t1: f64) -> Option<f64> {
    let vals: Vec<f64> = values.collect();
    let nearest = |t: f64| {
        times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    };
    let (i, j) = (nearest(t0)?, nearest(t1)?);
    (times[j] != times[i]).then(|| (vals[j] - vals[i]) / (times[j] - times[i]))
}
