//! The looptree `Loop(tau)`: each vertex with `k >= 1` children spans a cycle
//! of length `k + 1` through itself and its children in order.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::scaling::ScalingConstants;
use crate::tree::PlaneTree;

#[derive(Debug, Clone)]
pub struct LooptreeGraph {
    child_counts: Vec<u64>,
    parents: Vec<usize>,
    offsets: Vec<usize>,
    children: Vec<usize>,
    /// Position of each non-root vertex among its siblings.
    sibling_pos: Vec<usize>,
}

pub fn build_looptree(tree: &PlaneTree) -> LooptreeGraph {
    let (offsets, children) = tree.children();
    let mut sibling_pos = vec![0usize; tree.size()];
    for u in 0..tree.size() {
        for (i, &c) in children[offsets[u]..offsets[u + 1]].iter().enumerate() {
            sibling_pos[c] = i;
        }
    }
    LooptreeGraph {
        child_counts: tree.child_counts().to_vec(),
        parents: tree.parents(),
        offsets,
        children,
        sibling_pos,
    }
}

impl LooptreeGraph {
    pub fn vertex_count(&self) -> usize {
        self.child_counts.len()
    }

    /// Edges with multiplicity: `sum over internal u of (k_u + 1)`.
    pub fn edge_count(&self) -> u64 {
        self.child_counts.iter().filter(|&&k| k > 0).map(|&k| k + 1).sum()
    }

    pub fn cycle_count(&self) -> usize {
        self.child_counts.iter().filter(|&&k| k > 0).count()
    }

    /// The cycle of `u` as `(u, child_1, ..., child_k)`, empty for a leaf.
    pub fn cycle(&self, u: usize) -> Vec<usize> {
        if self.child_counts[u] == 0 {
            return Vec::new();
        }
        std::iter::once(u).chain(self.kids(u).iter().copied()).collect()
    }

    pub fn cycle_len(&self, u: usize) -> u64 {
        match self.child_counts[u] {
            0 => 0,
            k => k + 1,
        }
    }

    fn kids(&self, u: usize) -> &[usize] {
        &self.children[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Neighbours of `v` with multiplicity, skipping the edges of the cycle
    /// of `cut` if given.
    fn for_each_neighbor(&self, v: usize, cut: Option<usize>, mut f: impl FnMut(usize)) {
        if v != 0 {
            let p = self.parents[v];
            if cut != Some(p) {
                let sib = self.kids(p);
                let i = self.sibling_pos[v];
                f(if i == 0 { p } else { sib[i - 1] });
                f(if i + 1 == sib.len() { p } else { sib[i + 1] });
            }
        }
        if cut != Some(v) {
            let kids = self.kids(v);
            if let (Some(&first), Some(&last)) = (kids.first(), kids.last()) {
                f(first);
                f(last);
            }
        }
    }

    /// Neighbour lists with multiplicity.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.vertex_count())
            .map(|v| {
                let mut out = Vec::new();
                self.for_each_neighbor(v, None, |w| out.push(w));
                out
            })
            .collect()
    }

    /// Graph distances from `source`.
    pub fn distances_from(&self, source: usize) -> Vec<u64> {
        let (dist, _) = self.bfs(&[source], None);
        dist
    }

    /// Largest distance from the root.
    pub fn radius(&self) -> u64 {
        self.distances_from(0).into_iter().max().unwrap_or(0)
    }

    /// Multi-source BFS. Returns distances and, for each vertex, the index
    /// in `sources` of the source it was reached from. Unreached vertices get
    /// `u64::MAX`.
    fn bfs(&self, sources: &[usize], cut: Option<usize>) -> (Vec<u64>, Vec<usize>) {
        let n = self.vertex_count();
        let mut dist = vec![u64::MAX; n];
        let mut label = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for (i, &s) in sources.iter().enumerate() {
            dist[s] = 0;
            label[s] = i;
            queue.push_back(s);
        }
        while let Some(v) = queue.pop_front() {
            let (d, l) = (dist[v] + 1, label[v]);
            self.for_each_neighbor(v, cut, |w| {
                if dist[w] == u64::MAX {
                    dist[w] = d;
                    label[w] = l;
                    queue.push_back(w);
                }
            });
        }
        (dist, label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub center: usize,
    pub cycle_len: u64,
    /// Radius of `Loop(tau)` seen from the root.
    pub radius: u64,
    /// Radii of the components hanging off the center's cycle, measured from
    /// their attachment vertex. Entry 0 is the component at the center
    /// itself, entry `i` the one at its `i`-th child.
    pub graft_radii: Vec<u64>,
}

pub fn radius_and_decomposition(lt: &LooptreeGraph, center: usize) -> Decomposition {
    let cycle = lt.cycle(center);
    let sources = if cycle.is_empty() { vec![center] } else { cycle };
    let (dist, label) = lt.bfs(&sources, Some(center));
    let mut graft_radii = vec![0u64; sources.len()];
    for (d, l) in dist.into_iter().zip(label) {
        graft_radii[l] = graft_radii[l].max(d);
    }
    Decomposition { center, cycle_len: lt.cycle_len(center), radius: lt.radius(), graft_radii }
}

/// Upper-bound certificate for the distance between `Loop(tau) / |b_n|` and
/// a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleProximity {
    pub cycle_len_ratio: f64,
    pub max_graft_radius_ratio: f64,
    /// Bound on the Gromov-Hausdorff distance to the circle of circumference
    /// `cycle_len_ratio`: collapse every graft onto its attachment vertex,
    /// then pass from the discrete cycle to the continuous one.
    pub gh_upper_bound: f64,
    /// Same, against the circle of circumference 1.
    pub gh_unit_circle_bound: f64,
}

pub fn circle_proximity(decomp: &Decomposition, constants: &ScalingConstants) -> CircleProximity {
    let b = constants.abs_b_n();
    let max_graft = decomp.graft_radii.iter().copied().max().unwrap_or(0) as f64;
    let cycle_len_ratio = decomp.cycle_len as f64 / b;
    let gh_upper_bound = (max_graft + 0.5) / b;
    CircleProximity {
        cycle_len_ratio,
        max_graft_radius_ratio: max_graft / b,
        gh_upper_bound,
        gh_unit_circle_bound: gh_upper_bound + (cycle_len_ratio - 1.0).abs() / 4.0,
    }
}

/// Looptree summary of one tree around its first maximal-degree vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopAnalysis {
    pub size: u64,
    pub max_degree: u64,
    pub u_star: u64,
    pub decomposition: Decomposition,
    pub proximity: CircleProximity,
}

pub fn analyze_tree(tree: &PlaneTree, constants: &ScalingConstants) -> LoopAnalysis {
    let cc = tree.child_counts();
    let max_degree = *cc.iter().max().expect("nonempty tree");
    let u_star = cc.iter().position(|&k| k == max_degree).expect("max exists");
    let lt = build_looptree(tree);
    let decomposition = radius_and_decomposition(&lt, u_star);
    let proximity = circle_proximity(&decomposition, constants);
    LoopAnalysis { size: tree.size() as u64, max_degree, u_star: u_star as u64, decomposition, proximity }
}
