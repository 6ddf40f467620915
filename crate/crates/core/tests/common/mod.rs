//! Exact reference values shared by the integration tests.

#![allow(dead_code)]

pub mod blocks;
pub mod intersect;

use rustc_hash::FxHashMap;

/// Bracket `[lo, hi]` for `γ(n, 0)` at `d = 1` with the simple walk and the
/// binary offspring law, side trees conditioned below height `m`.
#[derive(Debug, Clone, Copy)]
pub struct GammaOracle {
    pub lo: f64,
    pub hi: f64,
    /// Probability mass of the configurations that were cut off.
    pub dropped: f64,
    pub final_states: usize,
}

impl GammaOracle {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// `θ(0..=len)` for the binary law by iterating `f(s) = (1 + s²)/2`.
pub fn binary_theta(len: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut s = 0.0f64;
    for _ in 0..len {
        s = 0.5 * (1.0 + s * s);
        out.push(1.0 - s);
    }
    out
}

/// Partial outcomes are cut at `eps * PARTIAL_CUT`, well below the state
/// cut, since many of them merge into heavier states.
const PARTIAL_CUT: f64 = 1e-2;

/// Sites occupied on one level never exceed the level width below height 8.
const MAX_SITES: usize = 8;

/// Edge counts per site: towards `x - 1` in the first half, `x + 1` in the second.
type Moves = [u16; 2 * MAX_SITES];

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Dense symmetric Laplacian.
#[derive(Debug, Clone)]
struct Lap {
    n: usize,
    a: Vec<f64>,
}

impl Lap {
    fn new(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    fn add_edge(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            return;
        }
        let n = self.n;
        self.a[i * n + i] += c;
        self.a[j * n + j] += c;
        self.a[i * n + j] -= c;
        self.a[j * n + i] -= c;
    }

    /// Schur complement onto the nodes in `keep`, in that order.
    fn reduce(&self, keep: &[usize]) -> Self {
        let mut a = self.a.clone();
        let n = self.n;
        let mut alive = vec![true; n];
        let mut gone: Vec<usize> = (0..n).collect();
        gone.retain(|v| !keep.contains(v));
        for &e in &gone {
            alive[e] = false;
            let pivot = a[e * n + e];
            if pivot <= 0.0 {
                continue;
            }
            let nbrs: Vec<usize> = (0..n).filter(|&i| alive[i] && a[i * n + e] != 0.0).collect();
            for &i in &nbrs {
                let f = a[i * n + e] / pivot;
                for &j in &nbrs {
                    a[i * n + j] -= f * a[e * n + j];
                }
            }
        }
        let mut out = Self::new(keep.len());
        for (p, &i) in keep.iter().enumerate() {
            for (q, &j) in keep.iter().enumerate() {
                out.a[p * keep.len() + q] = a[i * n + j];
            }
        }
        out
    }

    fn resistance(&self, a: usize, z: usize) -> f64 {
        if a == z {
            return 0.0;
        }
        let two = self.reduce(&[a, z]);
        -1.0 / two.a[1]
    }
}

/// Electrical state after all edges up to level `h`: the trace reduced onto
/// the root, the target once it exists, and the occupied sites of level `h`.
#[derive(Debug, Clone)]
struct State {
    /// Occupied positions at level `h`, increasing.
    sites: Vec<i32>,
    /// Node of each site in `lap`.
    node: Vec<usize>,
    /// Live side particles at each site.
    counts: Vec<u16>,
    /// Nodes 0 (root) and 1 (target, once reached) are never eliminated.
    fixed: usize,
    lap: Lap,
}

impl State {
    fn key(&self) -> (Vec<i32>, Vec<u16>, Vec<i64>) {
        let n = self.lap.n;
        let mut q = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                q.push((self.lap.a[i * n + j] * 1e9).round() as i64);
            }
        }
        (self.sites.clone(), self.counts.clone(), q)
    }
}

/// Upper bound on the final resistance of every completion of `s` at level
/// `h`: later edges only add conductance, except that the backbone must still
/// reach the target.
fn upper(s: &State, h: usize, path: &[i32]) -> f64 {
    let n = path.len() - 1;
    if h < n {
        let bb = s.node[s.sites.binary_search(&path[h]).expect("backbone site")];
        s.lap.resistance(0, bb) + (n - h) as f64
    } else {
        s.lap.resistance(0, 1)
    }
}

/// Lower bound on `E[R]` over completions of `s` at level `h`. Effective
/// conductance is concave in the edge conductances, so by Jensen
/// `E[R] >= 1/E[C] >=` the resistance of the network with every later edge at
/// its expected multiplicity. `first`, when given, holds the expected edge
/// counts out of level `h` (laid out as [`Moves`]) under whatever sub-event
/// is being bounded; beyond that level expectations are linear in the
/// particle counts.
fn mean_field_lower(s: &State, h: usize, m: usize, path: &[i32], split: &[f64], first: Option<&[f64]>) -> f64 {
    let n = path.len() - 1;
    let base = s.lap.n;
    // future site (x, j) for h < j < m
    let offset = |x: i32, j: usize| base + (j * (j + 1) / 2 - (h + 1) * (h + 2) / 2) + ((x + j as i32) / 2) as usize;
    let total = base + (m * (m + 1) / 2 - (h + 1) * (h + 2) / 2);
    let mut lap = Lap::new(total);
    for i in 0..base {
        for j in 0..base {
            lap.a[i * total + j] = s.lap.a[i * base + j];
        }
    }
    let node = |x: i32, j: usize| -> usize {
        if j == h {
            s.node[s.sites.binary_search(&x).expect("occupied site")]
        } else {
            offset(x, j)
        }
    };
    let mut mass: Vec<(i32, f64)> = s
        .sites
        .iter()
        .zip(&s.counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&x, &c)| (x, c as f64))
        .collect();
    let mut from = h;
    if let Some(du) = first {
        let mut next: FxHashMap<i32, f64> = FxHashMap::default();
        for (i, &x) in s.sites.iter().enumerate() {
            for (dx, c) in [(-1, du[i]), (1, du[MAX_SITES + i])] {
                if c > 0.0 {
                    lap.add_edge(node(x, h), node(x + dx, h + 1), c);
                    *next.entry(x + dx).or_insert(0.0) += c;
                }
            }
        }
        if h < n {
            // the backbone's own edge carries no side particle
            *next.get_mut(&path[h + 1]).expect("backbone edge") -= 1.0;
        }
        mass = next.into_iter().collect();
        from = h + 1;
    }
    for j in from..m - 1 {
        let mut next: FxHashMap<i32, f64> = FxHashMap::default();
        for &(x, e) in &mass {
            let flow = e * split[j];
            if flow > 0.0 {
                for dx in [-1, 1] {
                    lap.add_edge(node(x, j), node(x + dx, j + 1), flow);
                    *next.entry(x + dx).or_insert(0.0) += flow;
                }
            }
        }
        if j < n {
            let x = path[j];
            lap.add_edge(node(x, j), node(path[j + 1], j + 1), 1.0);
            for dx in [-1, 1] {
                lap.add_edge(node(x, j), node(x + dx, j + 1), 0.5);
                *next.entry(x + dx).or_insert(0.0) += 0.5;
            }
        }
        mass = next.into_iter().collect();
    }
    let target = if h < n { offset(path[n], n) } else { 1 };
    lap.resistance(0, target)
}

/// Next state after one outcome at level `h`. `down[i]` and `up[i]` are the
/// edge counts from site `i` towards `x - 1` and `x + 1`. Every edge brings a
/// side particle except the backbone's own.
fn advance(s: &State, h: usize, path: &[i32], down: &[u16], up: &[u16]) -> State {
    let n = path.len() - 1;
    let mut sites: Vec<i32> = Vec::new();
    for (i, &x) in s.sites.iter().enumerate() {
        if down[i] > 0 {
            sites.push(x - 1);
        }
        if up[i] > 0 {
            sites.push(x + 1);
        }
    }
    sites.sort_unstable();
    sites.dedup();
    let fixed = if h + 1 >= n { 2 } else { 1 };
    let old = s.lap.n;
    // old nodes keep their indices; the target (if new) and fresh sites follow
    let mut total = old;
    let target_new = h + 1 == n;
    if target_new {
        total += 1;
    }
    let mut node = Vec::with_capacity(sites.len());
    for &x in &sites {
        if target_new && x == path[n] {
            node.push(old);
        } else {
            node.push(total);
            total += 1;
        }
    }
    let mut big = Lap::new(total);
    for i in 0..old {
        for j in 0..old {
            big.a[i * total + j] = s.lap.a[i * old + j];
        }
    }
    let at = |x: i32| node[sites.binary_search(&x).expect("new site")];
    for (i, &x) in s.sites.iter().enumerate() {
        if down[i] > 0 {
            big.add_edge(s.node[i], at(x - 1), down[i] as f64);
        }
        if up[i] > 0 {
            big.add_edge(s.node[i], at(x + 1), up[i] as f64);
        }
    }
    let mut keep = vec![0];
    if fixed == 2 {
        keep.push(if target_new { old } else { 1 });
    }
    let mut order: Vec<usize> = node.clone();
    order.retain(|v| !keep.contains(v));
    let mut remap = vec![usize::MAX; total];
    for (p, &v) in keep.iter().chain(&order).enumerate() {
        remap[v] = p;
    }
    let all: Vec<usize> = keep.iter().chain(&order).copied().collect();
    let mut counts = vec![0u16; sites.len()];
    for (i, &x) in s.sites.iter().enumerate() {
        if down[i] > 0 {
            counts[sites.binary_search(&(x - 1)).expect("new site")] += down[i];
        }
        if up[i] > 0 {
            counts[sites.binary_search(&(x + 1)).expect("new site")] += up[i];
        }
    }
    if h < n {
        counts[sites.binary_search(&path[h + 1]).expect("backbone site")] -= 1;
    }
    State {
        counts,
        node: node.iter().map(|&v| remap[v]).collect(),
        sites,
        fixed,
        lap: big.reduce(&all),
    }
}

/// Level-by-level enumeration of the law of the trace, for the simple walk
/// bridge of `n` steps to `0`. Particles at one level are exchangeable, so
/// states with electrically equivalent histories (reduced Laplacians equal to
/// 1e-9) merge. States lighter than `eps`, and partial outcomes lighter than
/// `eps * PARTIAL_CUT`, are cut off and charged with bounds on their
/// conditional mean.
pub fn gamma_oracle(n: usize, m: usize, eps: f64) -> GammaOracle {
    assert!(m >= 2 * n && n % 2 == 0 && n >= 2);
    let theta = binary_theta(m);
    // P(two children) for a side node at height h
    let split: Vec<f64> = (0..m)
        .map(|h| {
            let keep = (1.0 - theta[m - h - 1]).powi(2);
            0.5 * keep / (0.5 + 0.5 * keep)
        })
        .collect();

    let mut bridges = Vec::new();
    for code in 0u32..(1 << n) {
        if code.count_ones() as usize * 2 == n {
            let mut path = vec![0i32];
            for i in 0..n {
                path.push(path[i] + if code >> i & 1 == 1 { 1 } else { -1 });
            }
            bridges.push(path);
        }
    }
    // every bridge path is equally likely
    let weight = 1.0 / bridges.len() as f64;

    let mut out = GammaOracle {
        lo: 0.0,
        hi: 0.0,
        dropped: 0.0,
        final_states: 0,
    };
    for path in &bridges {
        let start = State {
            sites: vec![0],
            node: vec![0],
            counts: vec![0],
            fixed: 1,
            lap: Lap::new(1),
        };
        let mut states = vec![(start, weight)];
        for h in 0..m - 1 {
            let mut next: FxHashMap<(Vec<i32>, Vec<u16>, Vec<i64>), (State, f64)> = FxHashMap::default();
            for (s, p) in states {
                let k = s.sites.len();
                // partial outcomes: edge counts (down for each site, then up) and weight
                assert!(k <= MAX_SITES);
                let mut partial: Vec<(Moves, f64)> = vec![([0; 2 * MAX_SITES], p)];
                if h < n {
                    let i = s.sites.binary_search(&path[h]).expect("backbone site");
                    let mut base = [0; 2 * MAX_SITES];
                    base[if path[h + 1] > path[h] { MAX_SITES + i } else { i }] += 1;
                    let mut left = base;
                    left[i] += 1;
                    base[MAX_SITES + i] += 1;
                    partial = vec![(left, 0.5 * p), (base, 0.5 * p)];
                }
                let (ps, pd) = (split[h], 1.0 - split[h]);
                // cut partial outcomes: total weight and weighted expected moves
                let mut lost = 0.0;
                let mut lost_moves = [0.0f64; 2 * MAX_SITES];
                let expected: Vec<f64> = s.counts.iter().map(|&c| c as f64 * ps).collect();
                for i in 0..k {
                    let c = s.counts[i] as usize;
                    if c == 0 {
                        continue;
                    }
                    // law of (edges towards x - 1, edges towards x + 1)
                    let mut moves: FxHashMap<(u16, u16), f64> = FxHashMap::default();
                    for die in 0..=c {
                        for ll in 0..=c - die {
                            for rr in 0..=c - die - ll {
                                let lr = c - die - ll - rr;
                                let prob = binom(c, die)
                                    * binom(c - die, ll)
                                    * binom(c - die - ll, rr)
                                    * pd.powi(die as i32)
                                    * (ps * 0.25).powi((ll + rr) as i32)
                                    * (ps * 0.5).powi(lr as i32);
                                if prob > 0.0 {
                                    *moves.entry(((2 * ll + lr) as u16, (2 * rr + lr) as u16)).or_insert(0.0) += prob;
                                }
                            }
                        }
                    }
                    let mut grown: FxHashMap<Moves, f64> = FxHashMap::default();
                    for (du, w) in partial {
                        for (&(left, right), &prob) in &moves {
                            let mut next = du;
                            next[i] += left;
                            next[MAX_SITES + i] += right;
                            let wp = w * prob;
                            if wp < eps * PARTIAL_CUT {
                                lost += wp;
                                for j in 0..k {
                                    let tail = if j > i { expected[j] } else { 0.0 };
                                    lost_moves[j] += wp * (next[j] as f64 + tail);
                                    lost_moves[MAX_SITES + j] += wp * (next[MAX_SITES + j] as f64 + tail);
                                }
                                continue;
                            }
                            *grown.entry(next).or_insert(0.0) += w * prob;
                        }
                    }
                    partial = grown.into_iter().collect();
                }
                if lost > 0.0 {
                    let mean: Vec<f64> = lost_moves.iter().map(|v| v / lost).collect();
                    let (l, u) = (mean_field_lower(&s, h, m, path, &split, Some(&mean)), upper(&s, h, path));
                    out.dropped += lost;
                    out.lo += lost * l;
                    out.hi += lost * u;
                }
                for (du, w) in partial {
                    let t = advance(&s, h, path, &du[..k], &du[MAX_SITES..MAX_SITES + k]);
                    next.entry(t.key()).or_insert((t, 0.0)).1 += w;
                }
            }
            states = Vec::with_capacity(next.len());
            for (_, (s, p)) in next {
                if p < eps {
                    let (l, u) = (mean_field_lower(&s, h + 1, m, path, &split, None), upper(&s, h + 1, path));
                    out.dropped += p;
                    out.lo += p * l;
                    out.hi += p * u;
                } else {
                    states.push((s, p));
                }
            }
        }
        // particles on the last level are leaves
        out.final_states += states.len();
        for (s, p) in states {
            let r = s.lap.resistance(0, 1);
            out.lo += p * r;
            out.hi += p * r;
        }
    }
    out
}

/// Binary tree shapes of height at most `depth`, as parent arrays with the
/// root first.
fn shapes(depth: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![usize::MAX]];
    if depth > 0 {
        let subs = shapes(depth - 1);
        for a in &subs {
            for b in &subs {
                let mut t = vec![usize::MAX];
                for sub in [a, b] {
                    let shift = t.len();
                    t.extend(sub.iter().map(|&p| if p == usize::MAX { 0 } else { p + shift }));
                }
                out.push(t);
            }
        }
    }
    out
}

/// `γ(n, 0)` by listing every tree and every embedding: each side tree
/// shape with its conditioned probability `2^{-size} / (1 - θ)`, each bridge
/// path, and each sign of every side step.
pub fn gamma_brute(n: usize, m: usize) -> f64 {
    use brw_core::resistance::{dense_resistance, Network};

    let theta = binary_theta(m);
    // side tree of V_i starts at height i + 1 and stays below m
    let options: Vec<Vec<(Vec<usize>, f64)>> = (0..n)
        .map(|i| {
            let norm = 1.0 - theta[m - i - 1];
            shapes(m - i - 2)
                .into_iter()
                .map(|t| {
                    let w = 0.5f64.powi(t.len() as i32) / norm;
                    (t, w)
                })
                .collect()
        })
        .collect();
    let mut paths = Vec::new();
    for code in 0u32..(1 << n) {
        if code.count_ones() as usize * 2 == n {
            let mut path = vec![0i32];
            for i in 0..n {
                path.push(path[i] + if code >> i & 1 == 1 { 1 } else { -1 });
            }
            paths.push(path);
        }
    }
    let mut total = 0.0;
    let mut pick = vec![0usize; n];
    loop {
        // side nodes as (parent: Err(backbone index) or Ok(side index), height)
        let mut parent: Vec<Result<usize, usize>> = Vec::new();
        let mut height = Vec::new();
        let mut weight = 1.0;
        for (i, &c) in pick.iter().enumerate() {
            let (t, w) = &options[i][c];
            weight *= w;
            let shift = parent.len();
            let mut depth = vec![0usize; t.len()];
            for (v, &p) in t.iter().enumerate() {
                if p == usize::MAX {
                    parent.push(Err(i));
                    height.push(i + 1);
                } else {
                    depth[v] = depth[p] + 1;
                    parent.push(Ok(p + shift));
                    height.push(i + 1 + depth[v]);
                }
            }
        }
        let k = parent.len();
        for path in &paths {
            for signs in 0u64..(1 << k) {
                let mut x = vec![0i32; k];
                let mut edges: FxHashMap<((i32, usize), (i32, usize)), f64> = FxHashMap::default();
                for i in 0..n {
                    *edges.entry(((path[i], i), (path[i + 1], i + 1))).or_insert(0.0) += 1.0;
                }
                for v in 0..k {
                    let (px, ph) = match parent[v] {
                        Err(i) => (path[i], i),
                        Ok(p) => (x[p], height[p]),
                    };
                    x[v] = px + if signs >> v & 1 == 1 { 1 } else { -1 };
                    *edges.entry(((px, ph), (x[v], height[v]))).or_insert(0.0) += 1.0;
                }
                let mut ids: FxHashMap<(i32, usize), u32> = FxHashMap::default();
                let mut id = |s: (i32, usize)| {
                    let next = ids.len() as u32;
                    *ids.entry(s).or_insert(next)
                };
                let (root, target) = (id((0, 0)), id((path[n], n)));
                let list: Vec<(u32, u32, f64)> = edges.iter().map(|(&(a, b), &c)| (id(a), id(b), c)).collect();
                let net = Network::from_edges(ids.len(), list).expect("valid trace");
                let r = dense_resistance(&net, root, target).expect("connected trace");
                total += weight * r / (paths.len() as f64 * (1u64 << k) as f64);
            }
        }
        // next combination of shapes
        let mut i = 0;
        loop {
            if i == n {
                return total;
            }
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}
