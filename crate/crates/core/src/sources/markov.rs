//! Context chain of a finite-order Markov source.
//!
//! States are the length-k contexts present in the transition map; the chain
//! moves from context `c` to `(c[1..], j)` with probability `P(j|c)`. The
//! stationary distribution over contexts is solved directly (LU on the
//! balance equations) for state spaces up to [`DIRECT_SOLVE_MAX`] and by
//! power iteration on the lazy chain `(P + I)/2` above that; the lazy mix
//! removes periodicity without changing the fixed point.

use std::collections::BTreeMap;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::SourceError;

/// Largest context space solved by direct LU factorization.
pub const DIRECT_SOLVE_MAX: usize = 4096;

/// Convergence tolerance for power iteration (L-infinity on successive
/// iterates).
pub const POWER_TOLERANCE: f64 = 1e-12;

/// Iteration cap for power iteration.
pub const POWER_MAX_ITERS: usize = 1_000_000;

/// The context-indexed view of a Markov source.
#[derive(Debug, Clone)]
pub struct ContextChain {
    contexts: Vec<Vec<u32>>,
    rows: Vec<Vec<f64>>,
    index: HashMap<Vec<u32>, usize>,
}

impl ContextChain {
    pub(crate) fn new(_vocab: usize, transitions: BTreeMap<Vec<u32>, Vec<f64>>) -> Self {
        let mut contexts = Vec::with_capacity(transitions.len());
        let mut rows = Vec::with_capacity(transitions.len());
        let mut index = HashMap::with_capacity(transitions.len());
        for (ctx, row) in transitions {
            index.insert(ctx.clone(), contexts.len());
            contexts.push(ctx);
            rows.push(row);
        }
        ContextChain {
            contexts,
            rows,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Context at state `i` (states follow the sorted transition-map order).
    pub fn context(&self, i: usize) -> &[u32] {
        &self.contexts[i]
    }

    /// Next-token distribution at state `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn state_of(&self, context: &[u32]) -> Option<usize> {
        self.index.get(context).copied()
    }

    /// Successor state of `state` on `token`, when that transition has
    /// positive probability.
    fn successor(&self, state: usize, token: usize) -> Option<usize> {
        let mut next = self.contexts[state][1..].to_vec();
        next.push(token as u32);
        self.index.get(&next).copied()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for s in 0..self.len() {
            for (token, &p) in self.rows[s].iter().enumerate() {
                if p > 0.0 {
                    // Validation guarantees the successor exists.
                    if let Some(t) = self.successor(s, token) {
                        if !adj[s].contains(&t) {
                            adj[s].push(t);
                        }
                    }
                }
            }
        }
        adj
    }

    /// Stationary distribution over all states; transient states get 0.
    ///
    /// Errors when the chain has more than one closed communicating class
    /// (no unique stationary distribution), naming the offending classes.
    pub fn stationary(&self) -> Result<Vec<f64>, SourceError> {
        let n = self.len();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let adj = self.adjacency();
        let sccs = tarjan_sccs(n, &adj);
        let mut scc_id = vec![0usize; n];
        for (id, scc) in sccs.iter().enumerate() {
            for &v in scc {
                scc_id[v] = id;
            }
        }
        let closed: Vec<&Vec<usize>> = sccs
            .iter()
            .filter(|scc| {
                scc.iter()
                    .all(|&v| adj[v].iter().all(|&w| scc_id[w] == scc_id[v]))
            })
            .collect();
        if closed.len() != 1 {
            let classes = closed
                .iter()
                .map(|scc| {
                    let mut members: Vec<&Vec<u32>> =
                        scc.iter().map(|&v| &self.contexts[v]).collect();
                    members.sort();
                    let shown = members
                        .iter()
                        .take(4)
                        .map(|ctx| format_context(ctx))
                        .collect::<Vec<_>>()
                        .join(" ");
                    if members.len() > 4 {
                        format!("{{{shown} ... {} contexts}}", members.len())
                    } else {
                        format!("{{{shown}}}")
                    }
                })
                .collect::<Vec<_>>()
                .join(", ");
            return Err(SourceError::MultipleClosedClasses {
                count: closed.len(),
                classes,
            });
        }

        let class = closed[0];
        let mut local_of = HashMap::new();
        for (local, &v) in class.iter().enumerate() {
            local_of.insert(v, local);
        }
        let m = class.len();
        // Row-stochastic transition matrix restricted to the closed class;
        // closedness means no probability leaks out.
        let mut p = vec![vec![0.0f64; m]; m];
        for (local, &v) in class.iter().enumerate() {
            for (token, &prob) in self.rows[v].iter().enumerate() {
                if prob > 0.0 {
                    let w = self.successor(v, token).expect("validated successor");
                    p[local][local_of[&w]] += prob;
                }
            }
        }
        let direct = if m <= DIRECT_SOLVE_MAX {
            solve_stationary_direct(&p)
        } else {
            None
        };
        let pi_local = match direct {
            Some(pi) => pi,
            None => power_iterate_stationary(&p)?,
        };
        let mut pi = vec![0.0; n];
        for (local, &v) in class.iter().enumerate() {
            pi[v] = pi_local[local];
        }
        Ok(pi)
    }
}

fn format_context(ctx: &[u32]) -> String {
    let inner = ctx
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!("[{inner}]")
}

/// Solve `pi P = pi, sum pi = 1` by LU on `(P^T - I)` with the last balance
/// row replaced by the normalization constraint.
fn solve_stationary_direct(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = p.len();
    let a = DMatrix::from_fn(m, m, |r, c| {
        if r == m - 1 {
            1.0
        } else {
            p[c][r] - if r == c { 1.0 } else { 0.0 }
        }
    });
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    let pi = a.lu().solve(&b)?;
    let mut out: Vec<f64> = pi.iter().copied().collect();
    // Tiny negative components are numerical noise on transient-free
    // classes; anything materially negative means the solve went bad.
    if out.iter().any(|&x| x < -1e-9) {
        return None;
    }
    for x in &mut out {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = out.iter().sum();
    if !(total.is_finite()) || total <= 0.0 {
        return None;
    }
    for x in &mut out {
        *x /= total;
    }
    Some(out)
}

/// Power iteration on the lazy chain `(P + I)/2`.
fn power_iterate_stationary(p: &[Vec<f64>]) -> Result<Vec<f64>, SourceError> {
    let m = p.len();
    let mut x = vec![1.0 / m as f64; m];
    let mut next = vec![0.0f64; m];
    for _ in 0..POWER_MAX_ITERS {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (j, &pij) in p[i].iter().enumerate() {
                if pij > 0.0 {
                    next[j] += xi * pij;
                }
            }
        }
        let mut delta = 0.0f64;
        for i in 0..m {
            next[i] = 0.5 * (next[i] + x[i]);
            delta = delta.max((next[i] - x[i]).abs());
        }
        let total: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= total;
        }
        std::mem::swap(&mut x, &mut next);
        if delta <= POWER_TOLERANCE {
            return Ok(x);
        }
    }
    Err(SourceError::StationaryDiverged {
        max_iters: POWER_MAX_ITERS,
    })
}

/// Iterative Tarjan strongly-connected components.
fn tarjan_sccs(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let mut order = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut sccs: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;

    for start in 0..n {
        if order[start] != UNVISITED {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child == 0 {
                order[v] = counter;
                lowlink[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if order[w] == UNVISITED {
                    call.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(order[w]);
                }
            } else {
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == order[v] {
                    let mut scc = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        scc.push(w);
                        if w == v {
                            break;
                        }
                    }
                    sccs.push(scc);
                }
            }
        }
    }
    sccs
}
