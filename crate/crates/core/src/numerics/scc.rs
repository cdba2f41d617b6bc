//! Strongly connected components and bottom SCCs of the transition graph.

use super::SparseMatrix;
use crate::compose::Ctmc;
use crate::Scalar;

const UNVISITED: u32 = u32::MAX;

/// SCCs in reverse topological order (every edge leaving a component
/// points to one listed earlier). States inside a component are sorted.
pub fn strongly_connected_components<T: Scalar>(m: &SparseMatrix<T>) -> Vec<Vec<usize>> {
    let n = m.rows();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, usize)> = Vec::new();
    let mut next_index = 0u32;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root as u32);
        on_stack[root] = true;
        call.push((root as u32, 0));
        while let Some(frame) = call.last_mut() {
            let v = frame.0 as usize;
            let (cols, _) = m.row(v);
            if frame.1 < cols.len() {
                let w = cols[frame.1] as usize;
                frame.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    call.push((w as u32, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                let u = u as usize;
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack") as usize;
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsccDecomposition {
    /// Bottom SCCs ordered by their smallest state.
    pub bsccs: Vec<Vec<usize>>,
    /// States outside every BSCC, ascending.
    pub transient: Vec<usize>,
    /// For each state, the index of its BSCC.
    pub bscc_of: Vec<Option<usize>>,
}

pub fn bscc_decompose<T: Scalar>(ctmc: &Ctmc<T>) -> BsccDecomposition {
    let m = ctmc.rate_matrix();
    let n = m.rows();
    let sccs = strongly_connected_components(m);
    let mut comp_of = vec![0usize; n];
    for (c, states) in sccs.iter().enumerate() {
        for &s in states {
            comp_of[s] = c;
        }
    }
    let mut bsccs: Vec<Vec<usize>> = sccs
        .into_iter()
        .enumerate()
        .filter(|(c, states)| {
            states
                .iter()
                .all(|&s| m.row(s).0.iter().all(|&t| comp_of[t as usize] == *c))
        })
        .map(|(_, states)| states)
        .collect();
    bsccs.sort_by_key(|b| b[0]);
    let mut bscc_of = vec![None; n];
    for (b, states) in bsccs.iter().enumerate() {
        for &s in states {
            bscc_of[s] = Some(b);
        }
    }
    let transient = (0..n).filter(|&s| bscc_of[s].is_none()).collect();
    BsccDecomposition {
        bsccs,
        transient,
        bscc_of,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(n: usize, edges: &[(usize, usize)]) -> Ctmc<f64> {
        let mut rows = vec![Vec::new(); n];
        for &(a, b) in edges {
            rows[a].push((b, 1.0));
        }
        Ctmc::from_rates(n, 0, rows)
    }

    #[test]
    fn cycle_is_one_bscc() {
        let d = bscc_decompose(&chain(3, &[(0, 1), (1, 2), (2, 0)]));
        assert_eq!(d.bsccs, vec![vec![0, 1, 2]]);
        assert!(d.transient.is_empty());
    }

    #[test]
    fn line_has_absorbing_end() {
        let d = bscc_decompose(&chain(3, &[(0, 1), (1, 2)]));
        assert_eq!(d.bsccs, vec![vec![2]]);
        assert_eq!(d.transient, vec![0, 1]);
    }

    #[test]
    fn deep_chain_does_not_overflow_the_stack() {
        let n = 200_000;
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let d = bscc_decompose(&chain(n, &edges));
        assert_eq!(d.bsccs, vec![vec![n - 1]]);
    }

    /// Reachability closure by repeated graph search.
    fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
        }
        (0..n)
            .map(|s| {
                let mut seen = vec![false; n];
                seen[s] = true;
                let mut todo = vec![s];
                while let Some(v) = todo.pop() {
                    for &w in &adj[v] {
                        if !seen[w] {
                            seen[w] = true;
                            todo.push(w);
                        }
                    }
                }
                seen
            })
            .collect()
    }

    fn oracle_bsccs(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let reach = closure(n, edges);
        let mut out: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            // s is in a BSCC iff everything it reaches reaches back
            if (0..n).all(|t| !reach[s][t] || reach[t][s]) {
                let comp: Vec<usize> = (0..n).filter(|&t| reach[s][t]).collect();
                if !out.contains(&comp) {
                    out.push(comp);
                }
            }
        }
        out.sort_by_key(|b| b[0]);
        out
    }

    fn dag_of_cliques() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..=10, proptest::collection::vec(1usize..=10, 10), any::<u64>()).prop_map(|(k, sizes, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let sizes = &sizes[..k];
            let mut start = vec![0];
            for s in sizes {
                start.push(start.last().unwrap() + s);
            }
            let n = *start.last().unwrap();
            let mut edges = Vec::new();
            for (c, &sz) in sizes.iter().enumerate() {
                for i in 0..sz {
                    edges.push((start[c] + i, start[c] + (i + 1) % sz));
                }
                for d in c + 1..k {
                    if rng.random_bool(0.3) {
                        edges.push((start[c] + rng.random_range(0..sz), start[d] + rng.random_range(0..sizes[d])));
                    }
                }
            }
            (n, edges)
        })
    }

    proptest! {
        #[test]
        fn matches_reachability_oracle((n, edges) in dag_of_cliques()) {
            let d = bscc_decompose(&chain(n, &edges));
            prop_assert_eq!(d.bsccs, oracle_bsccs(n, &edges));
        }

        #[test]
        fn random_graphs_match_oracle(n in 1usize..30, raw in proptest::collection::vec((0usize..30, 0usize..30), 0..80)) {
            let edges: Vec<_> = raw.into_iter().filter(|&(a, b)| a < n && b < n).collect();
            let d = bscc_decompose(&chain(n, &edges));
            prop_assert_eq!(d.bsccs, oracle_bsccs(n, &edges));
        }
    }
}
