use std::fmt::Write as _;

use super::BranchingError;

/// Parent id of the root.
pub const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    /// A plain Galton-Watson tree without a marked backbone.
    GaltonWatson,
    /// A backbone of nominal length `n`; `m` is the conditioning level
    /// (`None` for the incipient infinite process).
    Backbone { n: usize, m: Option<usize> },
}

/// Rooted tree in a flat arena. Node ids are topological (`parent(v) < v`), the
/// root is node 0, and children of a node are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    parent: Vec<u32>,
    height: Vec<u32>,
    on_backbone: Vec<bool>,
    child_offsets: Vec<u32>,
    children: Vec<u32>,
    side_reach: Vec<u32>,
    backbone: Vec<u32>,
    kind: TreeKind,
    cut_height: Option<u32>,
    truncated: bool,
}

impl Tree {
    /// Assembles a tree from a parent array. `parent[0]` must be [`NO_PARENT`] and
    /// every other entry must point to a smaller id. Backbone nodes must form a
    /// path starting at the root.
    pub fn from_parents(
        parent: Vec<u32>,
        on_backbone: Vec<bool>,
        kind: TreeKind,
    ) -> Result<Self, BranchingError> {
        let n = parent.len();
        if n == 0 {
            return Err(BranchingError::MalformedTree("empty tree".into()));
        }
        if on_backbone.len() != n {
            return Err(BranchingError::MalformedTree("flag length mismatch".into()));
        }
        if parent[0] != NO_PARENT {
            return Err(BranchingError::MalformedTree("node 0 must be the root".into()));
        }
        let mut height = vec![0u32; n];
        let mut counts = vec![0u32; n + 1];
        for v in 1..n {
            let p = parent[v];
            if p as usize >= v {
                return Err(BranchingError::MalformedTree(format!(
                    "node {v} has parent {p}; ids must be topological"
                )));
            }
            height[v] = height[p as usize] + 1;
            counts[p as usize + 1] += 1;
        }
        let mut child_offsets = counts;
        for i in 1..=n {
            child_offsets[i] += child_offsets[i - 1];
        }
        let mut fill = child_offsets.clone();
        let mut children = vec![0u32; n - 1];
        for v in 1..n {
            let p = parent[v] as usize;
            children[fill[p] as usize] = v as u32;
            fill[p] += 1;
        }

        let mut backbone = Vec::new();
        for v in 0..n {
            if on_backbone[v] {
                if v > 0 && !on_backbone[parent[v] as usize] {
                    return Err(BranchingError::MalformedTree(format!(
                        "backbone node {v} has a non-backbone parent"
                    )));
                }
                if height[v] as usize != backbone.len() {
                    return Err(BranchingError::MalformedTree(
                        "backbone must have exactly one node per height".into(),
                    ));
                }
                backbone.push(v as u32);
            }
        }
        if !backbone.is_empty() && backbone[0] != 0 {
            return Err(BranchingError::MalformedTree("backbone must start at the root".into()));
        }

        let mut side_reach = height.clone();
        for v in (1..n).rev() {
            if !on_backbone[v] {
                let p = parent[v] as usize;
                side_reach[p] = side_reach[p].max(side_reach[v]);
            }
        }

        Ok(Self {
            parent,
            height,
            on_backbone,
            child_offsets,
            children,
            side_reach,
            backbone,
            kind,
            cut_height: None,
            truncated: false,
        })
    }

    pub(crate) fn with_cut(mut self, cut_height: Option<u32>, truncated: bool) -> Self {
        self.cut_height = cut_height;
        self.truncated = truncated;
        self
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        let p = self.parent[v as usize];
        (p != NO_PARENT).then_some(p)
    }

    pub fn parents(&self) -> &[u32] {
        &self.parent
    }

    #[inline]
    pub fn height(&self, v: u32) -> u32 {
        self.height[v as usize]
    }

    pub fn heights(&self) -> &[u32] {
        &self.height
    }

    pub fn children(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.children[self.child_offsets[v] as usize..self.child_offsets[v + 1] as usize]
    }

    #[inline]
    pub fn is_backbone(&self, v: u32) -> bool {
        self.on_backbone[v as usize]
    }

    /// Materialised backbone vertices `V_0, V_1, ...`.
    pub fn backbone(&self) -> &[u32] {
        &self.backbone
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    /// Nominal backbone length `n` (0 for plain Galton-Watson trees).
    pub fn backbone_len(&self) -> usize {
        match self.kind {
            TreeKind::Backbone { n, .. } => n,
            TreeKind::GaltonWatson => 0,
        }
    }

    pub fn conditioning_level(&self) -> Option<usize> {
        match self.kind {
            TreeKind::Backbone { m, .. } => m,
            TreeKind::GaltonWatson => None,
        }
    }

    /// Largest node height present.
    pub fn max_height(&self) -> u32 {
        // ids are topological and generated level by level, but hand-built trees need not be
        self.height.iter().copied().max().unwrap_or(0)
    }

    /// Nodes above this height were not materialised.
    pub fn cut_height(&self) -> Option<u32> {
        self.cut_height
    }

    /// Whether some node at the cut height would have had children.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Largest height reached in the subtree of `v`, not following the backbone.
    #[inline]
    pub fn side_reach(&self, v: u32) -> u32 {
        self.side_reach[v as usize]
    }

    /// The ancestor of `v` at height `h <= height(v)`.
    pub fn ancestor_at_height(&self, mut v: u32, h: u32) -> u32 {
        while self.height[v as usize] > h {
            v = self.parent[v as usize];
        }
        v
    }

    /// Whether `w` is a strict descendant of `u`.
    pub fn is_strict_ancestor(&self, u: u32, w: u32) -> bool {
        self.height(w) > self.height(u) && self.ancestor_at_height(w, self.height(u)) == u
    }

    /// Number of nodes at each height.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.max_height() as usize + 1];
        for &h in &self.height {
            sizes[h as usize] += 1;
        }
        sizes
    }

    /// Line format `id parent height backbone_flag`, root parent `-1`.
    pub fn to_parent_array(&self) -> String {
        let mut out = String::with_capacity(self.len() * 16);
        for v in 0..self.len() {
            let parent = match self.parent[v] {
                NO_PARENT => -1,
                p => p as i64,
            };
            let _ = writeln!(
                out,
                "{v} {parent} {} {}",
                self.height[v],
                u8::from(self.on_backbone[v])
            );
        }
        out
    }

    /// Reads the format written by [`Tree::to_parent_array`]. Heights are
    /// re-derived and must agree with the file.
    pub fn from_parent_array(text: &str) -> Result<Self, BranchingError> {
        let mut parent = Vec::new();
        let mut flags = Vec::new();
        let mut heights = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| BranchingError::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<i64> = line
                .split_whitespace()
                .map(|s| s.parse::<i64>())
                .collect::<Result<_, _>>()
                .map_err(|_| err("expected integers"))?;
            let [id, p, h, flag] = fields[..] else {
                return Err(err("expected 4 fields"));
            };
            if id as usize != parent.len() {
                return Err(err("ids must be consecutive from 0"));
            }
            parent.push(if p < 0 { NO_PARENT } else { p as u32 });
            heights.push(h as u32);
            flags.push(flag != 0);
        }
        let backbone_nodes = flags.iter().filter(|&&b| b).count();
        let kind = if backbone_nodes > 0 {
            TreeKind::Backbone {
                n: backbone_nodes - 1,
                m: None,
            }
        } else {
            TreeKind::GaltonWatson
        };
        let tree = Self::from_parents(parent, flags, kind)?;
        if tree.height != heights {
            return Err(BranchingError::MalformedTree("heights disagree with parents".into()));
        }
        Ok(tree)
    }
}

/// Incremental construction of small trees, mostly for hand-built fixtures.
#[derive(Debug, Default, Clone)]
pub struct TreeBuilder {
    parent: Vec<u32>,
    on_backbone: Vec<bool>,
}

impl TreeBuilder {
    /// Starts a tree whose root is (or is not) a backbone vertex.
    pub fn new(root_on_backbone: bool) -> Self {
        Self {
            parent: vec![NO_PARENT],
            on_backbone: vec![root_on_backbone],
        }
    }

    pub fn add_child(&mut self, parent: u32, on_backbone: bool) -> u32 {
        self.parent.push(parent);
        self.on_backbone.push(on_backbone);
        (self.parent.len() - 1) as u32
    }

    /// Adds a chain of `len` non-backbone nodes below `from`; returns the last.
    pub fn add_path(&mut self, from: u32, len: usize) -> u32 {
        (0..len).fold(from, |v, _| self.add_child(v, false))
    }

    pub fn build(self, kind: TreeKind) -> Result<Tree, BranchingError> {
        Tree::from_parents(self.parent, self.on_backbone, kind)
    }
}
