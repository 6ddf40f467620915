use std::fmt::Write as _;

use rand::Rng;
use rustc_hash::FxHashMap;

use super::lattice::pack_site;
use super::{EmbeddingError, StepDistribution};
use crate::branching::Tree;
use crate::resistance::Network;

/// Spatial location of every tree node; the height coordinate is the tree
/// height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    dim: usize,
    coords: Vec<i32>,
}

impl Embedding {
    /// Each child sits at its parent's location plus an independent step.
    pub fn random_walk<R: Rng + ?Sized>(
        tree: &Tree,
        step: &StepDistribution,
        root: &[i32],
        rng: &mut R,
    ) -> Self {
        let d = step.dim();
        assert_eq!(root.len(), d, "root site dimension");
        let mut coords = vec![0i32; tree.len() * d];
        coords[..d].copy_from_slice(root);
        for (v, &p) in tree.parents().iter().enumerate().skip(1) {
            let y = step.step(step.sample_index(rng));
            let (head, tail) = coords.split_at_mut(v * d);
            let parent = &head[p as usize * d..p as usize * d + d];
            for i in 0..d {
                tail[i] = parent[i] + y[i];
            }
        }
        Self { dim: d, coords }
    }

    /// Backbone nodes are pinned to `path` (flat, `d` coordinates per
    /// backbone vertex); everything else steps freely.
    pub fn with_backbone_path<R: Rng + ?Sized>(
        tree: &Tree,
        step: &StepDistribution,
        path: &[i32],
        rng: &mut R,
    ) -> Self {
        let d = step.dim();
        assert!(path.len() >= tree.backbone().len() * d, "backbone path too short");
        let mut coords = vec![0i32; tree.len() * d];
        for (i, &v) in tree.backbone().iter().enumerate() {
            let v = v as usize;
            coords[v * d..v * d + d].copy_from_slice(&path[i * d..i * d + d]);
        }
        for (v, &p) in tree.parents().iter().enumerate().skip(1) {
            if tree.is_backbone(v as u32) {
                continue;
            }
            let y = step.step(step.sample_index(rng));
            let (head, tail) = coords.split_at_mut(v * d);
            let parent = &head[p as usize * d..p as usize * d + d];
            for i in 0..d {
                tail[i] = parent[i] + y[i];
            }
        }
        Self { dim: d, coords }
    }

    pub fn from_coords(dim: usize, coords: Vec<i32>) -> Self {
        assert_eq!(coords.len() % dim, 0);
        Self { dim, coords }
    }

    /// Every node at the origin.
    pub fn zero(tree: &Tree, dim: usize) -> Self {
        Self {
            dim,
            coords: vec![0; tree.len() * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn site(&self, v: u32) -> &[i32] {
        let v = v as usize;
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords
    }
}

/// Edge of the trace multigraph; `lower` sits one level below `upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEdge {
    pub lower: u32,
    pub upper: u32,
    pub multiplicity: u32,
}

/// Image of a tree under its embedding: sites of `Z^d × Z_+` with edge
/// multiplicities.
#[derive(Debug, Clone)]
pub struct Trace {
    dim: usize,
    index: FxHashMap<(u128, u32), u32>,
    site_coords: Vec<i32>,
    site_heights: Vec<u32>,
    edges: Vec<TraceEdge>,
    node_map: Vec<u32>,
    backbone_sites: Vec<u32>,
}

impl Trace {
    pub fn build(tree: &Tree, embedding: &Embedding) -> Result<Self, EmbeddingError> {
        let d = embedding.dim();
        let mut index: FxHashMap<(u128, u32), u32> = FxHashMap::default();
        let mut site_coords = Vec::new();
        let mut site_heights = Vec::new();
        let mut node_map = Vec::with_capacity(tree.len());
        for v in 0..tree.len() as u32 {
            let x = embedding.site(v);
            let h = tree.height(v);
            let key = (pack_site(x)?, h);
            let next = site_heights.len() as u32;
            let id = *index.entry(key).or_insert_with(|| {
                site_coords.extend_from_slice(x);
                site_heights.push(h);
                next
            });
            node_map.push(id);
        }
        let mut edge_index: FxHashMap<(u32, u32), u32> = FxHashMap::default();
        let mut edges: Vec<TraceEdge> = Vec::new();
        for (v, &p) in tree.parents().iter().enumerate().skip(1) {
            let (lower, upper) = (node_map[p as usize], node_map[v]);
            let next = edges.len() as u32;
            let e = *edge_index.entry((lower, upper)).or_insert(next);
            if e == next {
                edges.push(TraceEdge {
                    lower,
                    upper,
                    multiplicity: 0,
                });
            }
            edges[e as usize].multiplicity += 1;
        }
        let backbone_sites = tree.backbone().iter().map(|&v| node_map[v as usize]).collect();
        Ok(Self {
            dim: d,
            index,
            site_coords,
            site_heights,
            edges,
            node_map,
            backbone_sites,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_sites(&self) -> usize {
        self.site_heights.len()
    }

    pub fn site_coords(&self, s: u32) -> &[i32] {
        let s = s as usize;
        &self.site_coords[s * self.dim..(s + 1) * self.dim]
    }

    pub fn site_height(&self, s: u32) -> u32 {
        self.site_heights[s as usize]
    }

    pub fn lookup(&self, x: &[i32], h: u32) -> Option<u32> {
        pack_site(x).ok().and_then(|k| self.index.get(&(k, h)).copied())
    }

    pub fn edges(&self) -> &[TraceEdge] {
        &self.edges
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|e| e.multiplicity as u64).sum()
    }

    /// Site of each tree node.
    pub fn node_map(&self) -> &[u32] {
        &self.node_map
    }

    pub fn backbone_sites(&self) -> &[u32] {
        &self.backbone_sites
    }

    /// Unit-resistance network with one conductor per tree edge, so an edge
    /// of multiplicity `k` has conductance `k`.
    pub fn to_network(&self) -> Network {
        self.to_network_up_to(u32::MAX)
    }

    /// As [`Trace::to_network`], dropping edges that reach above `max_height`.
    pub fn to_network_up_to(&self, max_height: u32) -> Network {
        Network::from_edges(
            self.num_sites(),
            self.edges
                .iter()
                .filter(|e| self.site_heights[e.upper as usize] <= max_height)
                .map(|e| (e.lower, e.upper, e.multiplicity as f64)),
        )
        .expect("trace sites index the network")
    }

    /// Edge list `x_a h_a x_b h_b multiplicity`, one edge per line.
    pub fn export_edges(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            for s in [e.lower, e.upper] {
                for c in self.site_coords(s) {
                    let _ = write!(out, "{c} ");
                }
                let _ = write!(out, "{} ", self.site_height(s));
            }
            let _ = writeln!(out, "{}", e.multiplicity);
        }
        out
    }
}

/// Random-walk embedding of `tree` rooted at `(root, 0)`, reduced to its trace.
pub fn embed<R: Rng + ?Sized>(
    tree: &Tree,
    step: &StepDistribution,
    root: &[i32],
    rng: &mut R,
) -> Result<Trace, EmbeddingError> {
    if root.len() != step.dim() {
        return Err(EmbeddingError::DimensionMismatch(root.to_vec(), root.len(), step.dim()));
    }
    Trace::build(tree, &Embedding::random_walk(tree, step, root, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::{TreeBuilder, TreeKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_edge() {
        let mut b = TreeBuilder::new(false);
        b.add_child(0, false);
        let t = b.build(TreeKind::GaltonWatson).unwrap();
        let s = StepDistribution::srw(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tr = embed(&t, &s, &[0, 0], &mut rng).unwrap();
        assert_eq!(tr.num_sites(), 2);
        assert_eq!(tr.edges().len(), 1);
        assert_eq!(tr.site_coords(0), &[0, 0]);
        assert_eq!(tr.site_height(tr.node_map()[1]), 1);
    }

    #[test]
    fn siblings_on_same_site_merge() {
        let mut b = TreeBuilder::new(false);
        for _ in 0..4 {
            b.add_child(0, false);
        }
        let t = b.build(TreeKind::GaltonWatson).unwrap();
        let e = Embedding::from_coords(1, vec![0, 1, 1, 1, 1]);
        let tr = Trace::build(&t, &e).unwrap();
        assert_eq!(tr.edges().len(), 1);
        assert_eq!(tr.edges()[0].multiplicity, 4);
        assert_eq!(tr.export_edges(), "0 0 1 1 4\n");
    }

    #[test]
    fn backbone_trace_and_first_step_law() {
        let s = StepDistribution::lazy_srw(2).unwrap();
        let mut b = TreeBuilder::new(true);
        let mut v = 0;
        for _ in 0..7 {
            v = b.add_child(v, true);
        }
        let t = b.build(TreeKind::Backbone { n: 7, m: None }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tr = embed(&t, &s, &[3, -1], &mut rng).unwrap();
        assert_eq!(tr.total_multiplicity(), 7);
        assert_eq!(tr.backbone_sites().len(), 8);
        assert_eq!(tr.site_coords(tr.backbone_sites()[0]), &[3, -1]);

        let mut counts = vec![0usize; s.len()];
        let n = 100_000;
        let mut b = TreeBuilder::new(true);
        b.add_child(0, true);
        let one = b.build(TreeKind::Backbone { n: 1, m: None }).unwrap();
        for _ in 0..n {
            let e = Embedding::random_walk(&one, &s, &[0, 0], &mut rng);
            let i = (0..s.len()).find(|&i| s.step(i) == e.site(1)).unwrap();
            counts[i] += 1;
        }
        // Kolmogorov-Smirnov distance over the atom order
        let (mut emp, mut exact, mut ks) = (0.0, 0.0, 0.0f64);
        for (i, c) in counts.iter().enumerate() {
            emp += *c as f64 / n as f64;
            exact += s.probability(i);
            ks = ks.max((emp - exact).abs());
        }
        // 1.63/sqrt(n) is the 1% critical value
        assert!(ks < 1.63 / (n as f64).sqrt(), "ks = {ks}");
    }

    #[test]
    fn overflow_is_reported() {
        let mut b = TreeBuilder::new(false);
        b.add_child(0, false);
        let t = b.build(TreeKind::GaltonWatson).unwrap();
        let e = Embedding::from_coords(1, vec![0, 1 << 16]);
        assert!(matches!(Trace::build(&t, &e), Err(EmbeddingError::CoordinateOverflow(_))));
    }
}
