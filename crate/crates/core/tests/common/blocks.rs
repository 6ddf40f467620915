//! Hand-built blocks on a backbone of length 70, `δ = 1/7`, `K = 2`, `δn = 10`.

use brw_core::branching::{Tree, TreeBuilder, TreeKind};
use brw_core::events::BlockConfig;

pub const DN: usize = 10;

pub fn config() -> BlockConfig {
    BlockConfig::new(70, 1.0 / 7.0, 2, 0, 0.05).unwrap()
}

fn backbone() -> (TreeBuilder, Vec<u32>) {
    let mut b = TreeBuilder::new(true);
    let mut bb = vec![0u32];
    for _ in 0..70 {
        let v = b.add_child(*bb.last().unwrap(), true);
        bb.push(v);
    }
    (b, bb)
}

/// Side paths from `V_{ℓ1}` and `V_{ℓ2}` up to height `4δn`, plus extra
/// side paths `(attach, top)`.
pub fn good_tree(ell1: usize, ell2: usize, extra: &[(usize, usize)]) -> Tree {
    let (mut b, bb) = backbone();
    let top = 4 * DN;
    b.add_path(bb[ell1], top - ell1);
    b.add_path(bb[ell2], top - ell2);
    for &(at, to) in extra {
        b.add_path(bb[at], to - at);
    }
    b.build(TreeKind::Backbone { n: 70, m: Some(140) }).unwrap()
}

/// The `ℓ1` side tree forks below `δn` and both branches reach `2δn`.
pub fn forked_tree() -> Tree {
    let (mut b, bb) = backbone();
    let fork = b.add_path(bb[5], 3);
    b.add_path(fork, 40 - 8);
    b.add_path(fork, 20 - 8);
    b.add_path(bb[15], 25);
    b.build(TreeKind::Backbone { n: 70, m: Some(140) }).unwrap()
}
