use serde::{Deserialize, Serialize};

use super::{Network, ResistanceError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target `‖b - Lv‖ / ‖b‖`.
    pub tol: f64,
    /// Defaults to `20·sqrt(nodes) + 1000` on the reduced system.
    pub max_iter: Option<usize>,
    /// Prune dangling nodes and contract series chains before solving.
    pub reduce: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            reduce: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Terminals coincide; no solve needed.
    Trivial,
    Cg,
    Dense,
    FlowOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceResult {
    pub value: f64,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    /// Unknowns left after reduction.
    pub system_size: usize,
}

impl ResistanceResult {
    fn trivial() -> Self {
        Self {
            value: 0.0,
            method: Method::Trivial,
            iterations: 0,
            residual: 0.0,
            system_size: 0,
        }
    }
}

/// Effective resistance between `a` and `z`: the potential at `a` when a
/// unit current enters at `a` and `z` is grounded.
pub fn effective_resistance(
    net: &Network,
    a: u32,
    z: u32,
    opts: &SolverOptions,
) -> Result<ResistanceResult, ResistanceError> {
    net.check_node(a)?;
    net.check_node(z)?;
    if a == z {
        return Ok(ResistanceResult::trivial());
    }
    let labels = net.components();
    if labels[a as usize] != labels[z as usize] {
        return Err(ResistanceError::Disconnected { a, z });
    }
    let comp = labels[a as usize];
    let mut local = vec![u32::MAX; net.num_nodes()];
    let mut count = 0u32;
    for (v, &l) in labels.iter().enumerate() {
        if l == comp {
            local[v] = count;
            count += 1;
        }
    }
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); count as usize];
    for (v, &l) in local.iter().enumerate() {
        if l != u32::MAX {
            adj[l as usize] = net
                .neighbors(v as u32)
                .iter()
                .map(|&(u, c)| (local[u as usize], c))
                .collect();
        }
    }
    let (la, lz) = (local[a as usize], local[z as usize]);
    if opts.reduce {
        reduce(&mut adj, &[la, lz]);
    }
    solve_grounded(&adj, la, lz, opts)
}

/// Resistance from `a` to the set `terminals` shorted into one node.
pub fn shorted_resistance(
    net: &Network,
    a: u32,
    terminals: &[u32],
    opts: &SolverOptions,
) -> Result<ResistanceResult, ResistanceError> {
    net.check_node(a)?;
    if terminals.contains(&a) {
        return Err(ResistanceError::SourceInTerminalSet(a));
    }
    let (merged, t) = net.identify(terminals)?;
    effective_resistance(&merged, a, t, opts)
}

fn remove_neighbor(list: &mut Vec<(u32, f64)>, v: u32) {
    if let Some(pos) = list.iter().position(|e| e.0 == v) {
        list.swap_remove(pos);
    }
}

fn add_conductance(list: &mut Vec<(u32, f64)>, v: u32, c: f64) {
    match list.iter_mut().find(|e| e.0 == v) {
        Some(e) => e.1 += c,
        None => list.push((v, c)),
    }
}

/// Removes degree-1 non-terminals and replaces degree-2 non-terminals by a
/// single series conductor, repeatedly. Resistances between terminals are
/// unchanged. Removed nodes end with an empty list.
fn reduce(adj: &mut [Vec<(u32, f64)>], terminals: &[u32]) {
    let is_terminal = |v: u32| terminals.contains(&v);
    let mut queue: Vec<u32> = (0..adj.len() as u32)
        .filter(|&v| !is_terminal(v) && adj[v as usize].len() <= 2)
        .collect();
    while let Some(v) = queue.pop() {
        let vi = v as usize;
        match adj[vi].len() {
            1 => {
                let (u, _) = adj[vi][0];
                adj[vi].clear();
                remove_neighbor(&mut adj[u as usize], v);
                if !is_terminal(u) && adj[u as usize].len() <= 2 {
                    queue.push(u);
                }
            }
            2 => {
                let (u, cu) = adj[vi][0];
                let (w, cw) = adj[vi][1];
                adj[vi].clear();
                remove_neighbor(&mut adj[u as usize], v);
                remove_neighbor(&mut adj[w as usize], v);
                let c = cu * cw / (cu + cw);
                add_conductance(&mut adj[u as usize], w, c);
                add_conductance(&mut adj[w as usize], u, c);
                for x in [u, w] {
                    if !is_terminal(x) && adj[x as usize].len() <= 2 {
                        queue.push(x);
                    }
                }
            }
            _ => {}
        }
    }
}

/// Jacobi-preconditioned conjugate gradient on the Laplacian with `z`
/// grounded. Nodes with empty adjacency (other than the terminals) are
/// skipped.
fn solve_grounded(
    adj: &[Vec<(u32, f64)>],
    a: u32,
    z: u32,
    opts: &SolverOptions,
) -> Result<ResistanceResult, ResistanceError> {
    let mut index = vec![u32::MAX; adj.len()];
    let mut n = 0usize;
    for (v, list) in adj.iter().enumerate() {
        if v as u32 != z && (!list.is_empty() || v as u32 == a) {
            index[v] = n as u32;
            n += 1;
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut diag = Vec::with_capacity(n);
    offsets.push(0);
    for (v, list) in adj.iter().enumerate() {
        if index[v] == u32::MAX {
            continue;
        }
        let mut d = 0.0;
        for &(u, c) in list {
            d += c;
            if index[u as usize] != u32::MAX {
                cols.push(index[u as usize]);
                vals.push(c);
            }
        }
        diag.push(d);
        offsets.push(cols.len());
    }
    let matvec = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut s = diag[i] * x[i];
            for k in offsets[i]..offsets[i + 1] {
                s -= vals[k] * x[cols[k] as usize];
            }
            out[i] = s;
        }
    };
    let ia = index[a as usize] as usize;
    let cap = opts
        .max_iter
        .unwrap_or_else(|| (20.0 * (n as f64).sqrt()) as usize + 1000);

    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    r[ia] = 1.0;
    let mut zv: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = zv.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&zv).map(|(a, b)| a * b).sum();
    let mut iterations = 0;
    let mut residual = 1.0;
    while iterations < cap {
        iterations += 1;
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if residual <= opts.tol {
            break;
        }
        for i in 0..n {
            zv[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&zv).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zv[i] + beta * p[i];
        }
    }
    // report the true residual rather than the recurrence
    matvec(&x, &mut ap);
    ap[ia] -= 1.0;
    let true_residual = ap.iter().map(|v| v * v).sum::<f64>().sqrt();
    if residual > opts.tol {
        return Err(ResistanceError::NotConverged {
            iterations,
            residual: true_residual,
        });
    }
    Ok(ResistanceResult {
        value: x[ia].max(0.0),
        method: Method::Cg,
        iterations,
        residual: true_residual,
        system_size: n,
    })
}
