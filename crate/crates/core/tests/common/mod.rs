//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

pub mod ast_gen;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use ctmc_core::Ctmc64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn workspace_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

// ------------------------------------------------------------ random chains

/// Random chain with `n` states, each with 1..=3 successors and rates in
/// `[lo, hi]`. Returns the chain and its dense generator.
pub fn random_chain(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> (Ctmc64, Vec<Vec<f64>>) {
    let mut rows = vec![Vec::new(); n];
    let mut q = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        if n == 1 {
            break;
        }
        let k = rng.random_range(1..=3.min(n - 1));
        let mut targets = BTreeSet::new();
        while targets.len() < k {
            let j = rng.random_range(0..n);
            if j != i {
                targets.insert(j);
            }
        }
        for j in targets {
            let r = rng.random_range(lo..=hi);
            row.push((j, r));
            q[i][j] += r;
            q[i][i] -= r;
        }
    }
    (Ctmc64::from_rates(n, 0, rows), q)
}

/// Dense generator of a built chain.
pub fn dense_generator(c: &Ctmc64) -> Vec<Vec<f64>> {
    let n = c.num_states();
    let mut q = vec![vec![0.0; n]; n];
    for (i, row) in q.iter_mut().enumerate() {
        for (j, r) in c.successors(i) {
            row[j] += r;
            row[i] -= r;
        }
    }
    q
}

// ------------------------------------------------------- matrix exponential

type Dense = Vec<Vec<f64>>;

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i][k];
            if x != 0.0 {
                for j in 0..n {
                    c[i][j] += x * b[k][j];
                }
            }
        }
    }
    c
}

/// Solve `a x = b` for a matrix right-hand side (partial pivoting).
fn solve(mut a: Dense, mut b: Dense) -> Dense {
    let n = a.len();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                for c in 0..n {
                    b[r][c] -= f * b[col][c];
                }
            }
        }
    }
    for col in (0..n).rev() {
        for c in 0..n {
            let mut s = b[col][c];
            for k in col + 1..n {
                s -= a[col][k] * b[k][c];
            }
            b[col][c] = s / a[col][col];
        }
    }
    b
}

/// `exp(q t)` by diagonal Padé(8,8) with scaling and squaring.
pub fn expm_pade(q: &Dense, t: f64) -> Dense {
    let n = q.len();
    let norm = q.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * t;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = t / 2f64.powi(s);
    let a: Dense = q.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    // c_k = (2m-k)! m! / ((2m)! k! (m-k)!)
    let m = 8usize;
    let mut c = vec![1.0; m + 1];
    for k in 1..=m {
        c[k] = c[k - 1] * (m + 1 - k) as f64 / (k * (2 * m + 1 - k)) as f64;
    }
    let mut num = vec![vec![0.0; n]; n];
    let mut den = vec![vec![0.0; n]; n];
    let mut power: Dense = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for (k, ck) in c.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..n {
            for j in 0..n {
                num[i][j] += ck * power[i][j];
                den[i][j] += sign * ck * power[i][j];
            }
        }
        power = matmul(&power, &a);
    }
    let mut r = solve(den, num);
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}

/// Row `init` of `exp(q t)`, i.e. the distribution at time `t`.
pub fn distribution_at(q: &Dense, init: &[f64], t: f64) -> Vec<f64> {
    let e = expm_pade(q, t);
    (0..q.len()).map(|j| (0..q.len()).map(|i| init[i] * e[i][j]).sum()).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// -------------------------------------------------- random modular models

#[derive(Debug, Clone)]
pub struct GenCommand {
    pub label: Option<usize>,
    /// `(global variable, value)` equalities, all required.
    pub guard: Vec<(usize, i64)>,
    /// Dyadic so sums and products are exact in binary floating point.
    pub rate: Option<f64>,
    /// `(global variable, new value)`.
    pub updates: Vec<(usize, i64)>,
}

#[derive(Debug, Clone)]
pub struct GenModule {
    /// Global indices of the variables this module owns.
    pub vars: Vec<usize>,
    pub commands: Vec<GenCommand>,
}

#[derive(Debug, Clone)]
pub struct GenModel {
    /// `(hi, init)` per global variable; every range starts at 0.
    pub vars: Vec<(i64, i64)>,
    pub modules: Vec<GenModule>,
}

const RATES: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];

/// Random model with 2–3 modules of 1–2 variables each.
pub fn random_model(rng: &mut ChaCha8Rng) -> GenModel {
    let n_modules = rng.random_range(2..=3);
    let mut vars = Vec::new();
    let mut modules = Vec::new();
    for _ in 0..n_modules {
        let owned: Vec<usize> = (0..rng.random_range(1..=2))
            .map(|_| {
                let hi = rng.random_range(1..=2);
                vars.push((hi, rng.random_range(0..=hi)));
                vars.len() - 1
            })
            .collect();
        modules.push(GenModule {
            vars: owned,
            commands: Vec::new(),
        });
    }
    let n_vars = vars.len();
    for m in &mut modules {
        for _ in 0..rng.random_range(1..=4) {
            let label = rng.random_bool(0.4).then(|| rng.random_range(0..2));
            let mut guard = Vec::new();
            for _ in 0..rng.random_range(0..=2) {
                let v = rng.random_range(0..n_vars);
                guard.push((v, rng.random_range(0..=vars[v].0)));
            }
            let rate = if label.is_some() && rng.random_bool(0.5) {
                None
            } else {
                Some(RATES[rng.random_range(0..RATES.len())])
            };
            let mut updates = Vec::new();
            for &v in &m.vars {
                if rng.random_bool(0.6) {
                    updates.push((v, rng.random_range(0..=vars[v].0)));
                }
            }
            m.commands.push(GenCommand {
                label,
                guard,
                rate,
                updates,
            });
        }
    }
    GenModel { vars, modules }
}

impl GenModel {
    pub fn source(&self) -> String {
        let mut s = String::new();
        for (mi, m) in self.modules.iter().enumerate() {
            s += &format!("module M{mi}\n");
            for &v in &m.vars {
                s += &format!("  v{v} : [0..{}] init {};\n", self.vars[v].0, self.vars[v].1);
            }
            for c in &m.commands {
                let label = c.label.map_or(String::new(), |l| format!("l{l}"));
                let guard = if c.guard.is_empty() {
                    "true".to_string()
                } else {
                    c.guard.iter().map(|(v, x)| format!("v{v}={x}")).collect::<Vec<_>>().join(" & ")
                };
                let rate = c.rate.map_or(String::new(), |r| format!("{r} : "));
                let upd = if c.updates.is_empty() {
                    "true".to_string()
                } else {
                    c.updates.iter().map(|(v, x)| format!("(v{v}'={x})")).collect::<Vec<_>>().join(" & ")
                };
                s += &format!("  [{label}] {guard} -> {rate}{upd};\n");
            }
            s += "endmodule\n";
        }
        s
    }

    fn enabled(&self, c: &GenCommand, s: &[i64]) -> bool {
        c.guard.iter().all(|&(v, x)| s[v] == x)
    }

    /// Flat product: successor state -> summed rate, self-loops dropped.
    pub fn flat_successors(&self, s: &[i64]) -> BTreeMap<Vec<i64>, f64> {
        let mut out: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        let mut add = |t: Vec<i64>, r: f64| {
            if t != s {
                *out.entry(t).or_default() += r;
            }
        };
        for m in &self.modules {
            for c in m.commands.iter().filter(|c| c.label.is_none()) {
                if self.enabled(c, s) {
                    let mut t = s.to_vec();
                    for &(v, x) in &c.updates {
                        t[v] = x;
                    }
                    add(t, c.rate.unwrap());
                }
            }
        }
        for label in 0..2 {
            let parts: Vec<Vec<&GenCommand>> = self
                .modules
                .iter()
                .filter(|m| m.commands.iter().any(|c| c.label == Some(label)))
                .map(|m| {
                    m.commands
                        .iter()
                        .filter(|c| c.label == Some(label) && self.enabled(c, s))
                        .collect()
                })
                .collect();
            if parts.is_empty() || parts.iter().any(Vec::is_empty) {
                continue;
            }
            // every combination of one enabled command per participating module
            let mut combos: Vec<(Vec<i64>, f64)> = vec![(s.to_vec(), 1.0)];
            for p in &parts {
                let mut next = Vec::new();
                for (t, r) in &combos {
                    for c in p {
                        let mut u = t.clone();
                        for &(v, x) in &c.updates {
                            u[v] = x;
                        }
                        next.push((u, r * c.rate.unwrap_or(1.0)));
                    }
                }
                combos = next;
            }
            for (t, r) in combos {
                add(t, r);
            }
        }
        out
    }

    /// Reachable states and edges of the flat product, by BFS.
    pub fn flat_product(&self) -> (BTreeSet<Vec<i64>>, BTreeMap<(Vec<i64>, Vec<i64>), f64>) {
        let init: Vec<i64> = self.vars.iter().map(|v| v.1).collect();
        let mut seen = BTreeSet::from([init.clone()]);
        let mut edges = BTreeMap::new();
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            for (t, r) in self.flat_successors(&s) {
                if seen.insert(t.clone()) {
                    queue.push_back(t.clone());
                }
                edges.insert((s.clone(), t), r);
            }
        }
        (seen, edges)
    }
}

/// The built chain in the same shape as [`GenModel::flat_product`], with
/// states reordered to the generator's global variable order.
pub fn chain_as_product(c: &Ctmc64, model: &GenModel) -> (BTreeSet<Vec<i64>>, BTreeMap<(Vec<i64>, Vec<i64>), f64>) {
    let names: Vec<String> = c.variables().iter().map(|v| v.name.clone()).collect();
    let order: Vec<usize> = (0..model.vars.len())
        .map(|g| names.iter().position(|n| *n == format!("v{g}")).unwrap())
        .collect();
    let state = |i: usize| -> Vec<i64> { order.iter().map(|&k| c.state(i)[k]).collect() };
    let states = (0..c.num_states()).map(state).collect();
    let mut edges = BTreeMap::new();
    for i in 0..c.num_states() {
        for (j, r) in c.successors(i) {
            edges.insert((state(i), state(j)), r);
        }
    }
    (states, edges)
}
