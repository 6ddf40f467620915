//! Independent exact resistance computations for small networks.

use nalgebra::{DMatrix, DVector};

use super::{Network, ResistanceError};

const DENSE_MAX_NODES: usize = 200;
const FLOW_MAX_EDGES: usize = 12;

/// Both oracle values; each is absent when the network exceeds its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForce {
    pub dense: Option<f64>,
    pub flow: Option<f64>,
}

/// Nodes of the component containing `a`, failing if `z` lies elsewhere.
fn component(net: &Network, a: u32, z: u32) -> Result<Vec<u32>, ResistanceError> {
    net.check_node(a)?;
    net.check_node(z)?;
    let labels = net.components();
    if labels[a as usize] != labels[z as usize] {
        return Err(ResistanceError::Disconnected { a, z });
    }
    Ok((0..net.num_nodes() as u32)
        .filter(|&v| labels[v as usize] == labels[a as usize])
        .collect())
}

/// `R = L⁺_aa + L⁺_zz - 2L⁺_az`, with `L⁺ = (L + J/n)⁻¹ - J/n` on the
/// component of `a`.
pub fn dense_resistance(net: &Network, a: u32, z: u32) -> Result<f64, ResistanceError> {
    let nodes = component(net, a, z)?;
    let n = nodes.len();
    if n > DENSE_MAX_NODES {
        return Err(ResistanceError::TooLarge(format!(
            "{n} nodes, dense oracle handles at most {DENSE_MAX_NODES}"
        )));
    }
    if a == z {
        return Ok(0.0);
    }
    let mut local = vec![usize::MAX; net.num_nodes()];
    for (i, &v) in nodes.iter().enumerate() {
        local[v as usize] = i;
    }
    let mut m = DMatrix::from_element(n, n, 1.0 / n as f64);
    for &(u, v, c) in net.edges() {
        let (i, j) = (local[u as usize], local[v as usize]);
        if i == usize::MAX {
            continue;
        }
        m[(i, i)] += c;
        m[(j, j)] += c;
        m[(i, j)] -= c;
        m[(j, i)] -= c;
    }
    let inv = m
        .try_inverse()
        .ok_or_else(|| ResistanceError::TooLarge("singular Laplacian".into()))?;
    let (i, j) = (local[a as usize], local[z as usize]);
    // the J/n corrections cancel in the difference
    Ok(inv[(i, i)] + inv[(j, j)] - 2.0 * inv[(i, j)])
}

/// Thomson's principle: minimum energy `Σ θ_e² / c_e` over unit flows from
/// `a` to `z`, parametrised as a tree flow plus fundamental cycles.
pub fn flow_resistance(net: &Network, a: u32, z: u32) -> Result<f64, ResistanceError> {
    let nodes = component(net, a, z)?;
    let mut in_comp = vec![false; net.num_nodes()];
    for &v in &nodes {
        in_comp[v as usize] = true;
    }
    let edges: Vec<(u32, u32, f64)> = net
        .edges()
        .iter()
        .copied()
        .filter(|e| in_comp[e.0 as usize])
        .collect();
    if edges.len() > FLOW_MAX_EDGES {
        return Err(ResistanceError::TooLarge(format!(
            "{} edges, flow oracle handles at most {FLOW_MAX_EDGES}",
            edges.len()
        )));
    }
    if a == z {
        return Ok(0.0);
    }
    // BFS spanning tree from a; parent edge index and orientation per node
    let mut parent_edge: Vec<Option<(usize, f64)>> = vec![None; net.num_nodes()];
    let mut seen = vec![false; net.num_nodes()];
    let mut tree_edge = vec![false; edges.len()];
    seen[a as usize] = true;
    let mut queue = std::collections::VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        for (k, &(x, y, _)) in edges.iter().enumerate() {
            let (other, sign) = if x == v {
                (y, 1.0)
            } else if y == v {
                (x, -1.0)
            } else {
                continue;
            };
            if !seen[other as usize] {
                seen[other as usize] = true;
                // flow along x→y counts positive; this edge carries v→other
                parent_edge[other as usize] = Some((k, sign));
                tree_edge[k] = true;
                queue.push_back(other);
            }
        }
    }
    // signed edge vector of the tree path a → v
    let tree_path = |mut v: u32| {
        let mut vec = vec![0.0; edges.len()];
        while let Some((k, sign)) = parent_edge[v as usize] {
            vec[k] += sign;
            let (x, y, _) = edges[k];
            v = if sign > 0.0 { x } else { y };
        }
        vec
    };
    let base = tree_path(z);
    let cycles: Vec<Vec<f64>> = (0..edges.len())
        .filter(|&k| !tree_edge[k])
        .map(|k| {
            let (x, y, _) = edges[k];
            // a → x, then x → y, then back y → a
            let px = tree_path(x);
            let py = tree_path(y);
            let mut c: Vec<f64> = px.iter().zip(&py).map(|(p, q)| p - q).collect();
            c[k] += 1.0;
            c
        })
        .collect();
    let r: Vec<f64> = edges.iter().map(|e| 1.0 / e.2).collect();
    let energy = |flow: &[f64]| flow.iter().zip(&r).map(|(f, r)| f * f * r).sum::<f64>();
    if cycles.is_empty() {
        return Ok(energy(&base));
    }
    let m = cycles.len();
    let e = edges.len();
    let c = DMatrix::from_fn(e, m, |i, j| cycles[j][i]);
    let rd = DMatrix::from_diagonal(&DVector::from_vec(r.clone()));
    let lhs = c.transpose() * &rd * &c;
    let rhs = -(c.transpose() * &rd * DVector::from_vec(base.clone()));
    let t = lhs
        .cholesky()
        .ok_or_else(|| ResistanceError::TooLarge("degenerate cycle space".into()))?
        .solve(&rhs);
    let flow = DVector::from_vec(base) + c * t;
    Ok(energy(flow.as_slice()))
}

/// Runs whichever oracles fit the network size.
pub fn brute_force_resistance(net: &Network, a: u32, z: u32) -> Result<BruteForce, ResistanceError> {
    let dense = match dense_resistance(net, a, z) {
        Ok(v) => Some(v),
        Err(ResistanceError::TooLarge(_)) => None,
        Err(e) => return Err(e),
    };
    let flow = match flow_resistance(net, a, z) {
        Ok(v) => Some(v),
        Err(ResistanceError::TooLarge(_)) => None,
        Err(e) => return Err(e),
    };
    if dense.is_none() && flow.is_none() {
        return Err(ResistanceError::TooLarge(format!(
            "{} nodes and {} edges",
            net.num_nodes(),
            net.num_edges()
        )));
    }
    Ok(BruteForce { dense, flow })
}
