use std::fmt::Write as _;

use rustc_hash::FxHashMap;

use super::ResistanceError;

/// Undirected weighted graph in CSR form. Parallel edges are merged by adding
/// conductances.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: usize,
    edges: Vec<(u32, u32, f64)>,
    offsets: Vec<usize>,
    adj: Vec<(u32, f64)>,
    weighted_degree: Vec<f64>,
}

impl Network {
    pub fn from_edges<I>(nodes: usize, edges: I) -> Result<Self, ResistanceError>
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        let mut merged: FxHashMap<(u32, u32), f64> = FxHashMap::default();
        let mut order = Vec::new();
        for (a, b, c) in edges {
            for v in [a, b] {
                if v as usize >= nodes {
                    return Err(ResistanceError::NodeOutOfRange { node: v, nodes });
                }
            }
            if !(c.is_finite() && c > 0.0) {
                return Err(ResistanceError::InvalidConductance(c));
            }
            if a == b {
                return Err(ResistanceError::SelfLoop(a));
            }
            let key = (a.min(b), a.max(b));
            let slot = merged.entry(key).or_insert_with(|| {
                order.push(key);
                0.0
            });
            *slot += c;
        }
        let edges: Vec<(u32, u32, f64)> = order.iter().map(|&(a, b)| (a, b, merged[&(a, b)])).collect();
        Ok(Self::from_merged(nodes, edges))
    }

    fn from_merged(nodes: usize, edges: Vec<(u32, u32, f64)>) -> Self {
        let mut offsets = vec![0usize; nodes + 1];
        for &(a, b, _) in &edges {
            offsets[a as usize + 1] += 1;
            offsets[b as usize + 1] += 1;
        }
        for i in 1..=nodes {
            offsets[i] += offsets[i - 1];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0u32, 0.0); 2 * edges.len()];
        let mut weighted_degree = vec![0.0; nodes];
        for &(a, b, c) in &edges {
            adj[fill[a as usize]] = (b, c);
            fill[a as usize] += 1;
            adj[fill[b as usize]] = (a, c);
            fill[b as usize] += 1;
            weighted_degree[a as usize] += c;
            weighted_degree[b as usize] += c;
        }
        Self {
            nodes,
            edges,
            offsets,
            adj,
            weighted_degree,
        }
    }

    /// Graph file: header `nodes E`, then `a b conductance` per line.
    pub fn parse(text: &str) -> Result<Self, ResistanceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| ResistanceError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(err(hl, "header must be `nodes edges`"));
        }
        let nodes: usize = head[0].parse().map_err(|_| err(hl, "bad node count"))?;
        let count: usize = head[1].parse().map_err(|_| err(hl, "bad edge count"))?;
        let mut edges = Vec::with_capacity(count);
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, "expected `a b conductance`"));
            }
            let a: u32 = f[0].parse().map_err(|_| err(ln, "bad node id"))?;
            let b: u32 = f[1].parse().map_err(|_| err(ln, "bad node id"))?;
            let c: f64 = f[2].parse().map_err(|_| err(ln, "bad conductance"))?;
            edges.push((a, b, c));
        }
        if edges.len() != count {
            return Err(err(0, &format!("header declares {count} edges, found {}", edges.len())));
        }
        Self::from_edges(nodes, edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.nodes, self.edges.len());
        for &(a, b, c) in &self.edges {
            let _ = writeln!(out, "{a} {b} {c}");
        }
        out
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Merged edges `(a, b, conductance)` with `a < b`.
    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> &[(u32, f64)] {
        &self.adj[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn weighted_degree(&self, v: u32) -> f64 {
        self.weighted_degree[v as usize]
    }

    pub fn total_conductance(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub(crate) fn check_node(&self, v: u32) -> Result<(), ResistanceError> {
        if (v as usize) < self.nodes {
            Ok(())
        } else {
            Err(ResistanceError::NodeOutOfRange {
                node: v,
                nodes: self.nodes,
            })
        }
    }

    /// Component label per node.
    pub fn components(&self) -> Vec<u32> {
        let mut uf = UnionFind::new(self.nodes);
        for &(a, b, _) in &self.edges {
            uf.union(a, b);
        }
        (0..self.nodes as u32).map(|v| uf.find(v)).collect()
    }

    pub fn connected(&self, a: u32, z: u32) -> bool {
        let mut uf = UnionFind::new(self.nodes);
        for &(x, y, _) in &self.edges {
            uf.union(x, y);
        }
        uf.find(a) == uf.find(z)
    }

    /// Copy with one more conductor.
    pub fn with_edge(&self, a: u32, b: u32, c: f64) -> Result<Self, ResistanceError> {
        Self::from_edges(self.nodes, self.edges.iter().copied().chain([(a, b, c)]))
    }

    /// Identifies `set` into a single node. Returns the new network and the
    /// id of the merged node; edges inside the set disappear.
    pub fn identify(&self, set: &[u32]) -> Result<(Self, u32), ResistanceError> {
        if set.is_empty() {
            return Err(ResistanceError::EmptyTerminalSet);
        }
        for &v in set {
            self.check_node(v)?;
        }
        let target = set[0];
        let mut map: Vec<u32> = (0..self.nodes as u32).collect();
        for &v in set {
            map[v as usize] = target;
        }
        let edges = self
            .edges
            .iter()
            .map(|&(a, b, c)| (map[a as usize], map[b as usize], c))
            .filter(|(a, b, _)| a != b);
        Ok((Self::from_edges(self.nodes, edges)?, target))
    }
}

pub(crate) struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let p = self.parent[v as usize];
            self.parent[v as usize] = self.parent[p as usize];
            v = p;
        }
        v
    }

    pub(crate) fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (lo, hi) = if self.rank[ra as usize] < self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo as usize] = hi;
        if self.rank[lo as usize] == self.rank[hi as usize] {
            self.rank[hi as usize] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_edges_merge() {
        let n = Network::from_edges(3, [(0, 1, 1.0), (1, 0, 2.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(n.num_edges(), 2);
        assert_eq!(n.edges()[0], (0, 1, 3.0));
        assert_eq!(n.weighted_degree(1), 3.5);
        assert_eq!(n.degree(1), 2);
        assert!(n.connected(0, 2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Network::from_edges(2, [(0, 2, 1.0)]),
            Err(ResistanceError::NodeOutOfRange { .. })
        ));
        assert_eq!(
            Network::from_edges(2, [(0, 1, 0.0)]),
            Err(ResistanceError::InvalidConductance(0.0))
        );
        assert_eq!(Network::from_edges(2, [(1, 1, 1.0)]), Err(ResistanceError::SelfLoop(1)));
        assert!(matches!(Network::parse("3 2\n0 1 1\n"), Err(ResistanceError::Parse { .. })));
    }

    #[test]
    fn text_round_trip_and_identify() {
        let n = Network::from_edges(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5), (1, 3, 1.0)]).unwrap();
        assert_eq!(Network::parse(&n.to_text()).unwrap(), n);
        let (m, t) = n.identify(&[2, 3]).unwrap();
        assert_eq!(t, 2);
        // 1-2 and 1-3 merge, 2-3 vanishes
        assert_eq!(m.num_edges(), 2);
        assert_eq!(m.neighbors(2), &[(1, 3.0)]);
        assert!(!m.connected(0, 3));
    }
}
