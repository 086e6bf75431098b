//! Ego-net splitting: one persona per local cluster of each node's ego-net.

use rayon::prelude::*;

use crate::graph::Graph;

/// Splits the ego-net of a node (its neighbourhood with the node removed).
///
/// Returns a local cluster index for each neighbour of `u`, in the order of
/// `g.neighbors(u)`, plus the number of local clusters.
pub trait LocalClusterer: Sync {
    fn split(&self, g: &Graph, u: usize, scratch: &mut Vec<usize>) -> (Vec<usize>, usize);
}

/// Connected components of the ego-net minus the ego.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConnectedComponents;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl LocalClusterer for ConnectedComponents {
    fn split(&self, g: &Graph, u: usize, pos: &mut Vec<usize>) -> (Vec<usize>, usize) {
        let nbrs = g.neighbors(u);
        if pos.len() < g.num_nodes() {
            pos.resize(g.num_nodes(), 0);
        }
        for (a, &v) in nbrs.iter().enumerate() {
            pos[v] = a + 1;
        }
        let mut parent: Vec<usize> = (0..nbrs.len()).collect();
        for (a, &v) in nbrs.iter().enumerate() {
            for &w in g.neighbors(v) {
                let b = pos[w];
                if b > 0 && w != u {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b - 1));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        for &v in nbrs {
            pos[v] = 0;
        }
        // Components numbered by first appearance in neighbour order.
        let mut label = vec![usize::MAX; nbrs.len()];
        let mut count = 0;
        let comps = (0..nbrs.len())
            .map(|a| {
                let r = find(&mut parent, a);
                if label[r] == usize::MAX {
                    label[r] = count;
                    count += 1;
                }
                label[r]
            })
            .collect();
        (comps, count)
    }
}

/// Persona graph produced by ego-splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonaGraph {
    /// Original node of each persona.
    pub persona_node: Vec<usize>,
    /// Personas of node `u` are `persona_offsets[u]..persona_offsets[u + 1]`.
    pub persona_offsets: Vec<usize>,
    /// Persona edges `(p, q)` with `p < q`, one per original edge, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl PersonaGraph {
    pub fn num_personas(&self) -> usize {
        self.persona_node.len()
    }

    pub fn personas_of(&self, u: usize) -> std::ops::Range<usize> {
        self.persona_offsets[u]..self.persona_offsets[u + 1]
    }
}

pub fn ego_split(g: &Graph) -> PersonaGraph {
    ego_split_with(g, &ConnectedComponents)
}

/// Ego-splitting with a custom local clusterer. Output is identical regardless
/// of the worker count.
pub fn ego_split_with(g: &Graph, local: &dyn LocalClusterer) -> PersonaGraph {
    let n = g.num_nodes();
    let splits: Vec<(Vec<usize>, usize)> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |scratch, u| local.split(g, u, scratch))
        .collect();
    let mut persona_offsets = Vec::with_capacity(n + 1);
    persona_offsets.push(0);
    let mut persona_node = Vec::new();
    for (u, (_, count)) in splits.iter().enumerate() {
        let k = (*count).max(1);
        persona_node.extend(std::iter::repeat_n(u, k));
        persona_offsets.push(persona_node.len());
    }
    let mut edges = Vec::with_capacity(g.num_edges());
    for (u, v) in g.edges() {
        let a = g.neighbors(u).binary_search(&v).expect("symmetric adjacency");
        let b = g.neighbors(v).binary_search(&u).expect("symmetric adjacency");
        let pu = persona_offsets[u] + splits[u].0[a];
        let pv = persona_offsets[v] + splits[v].0[b];
        edges.push((pu.min(pv), pu.max(pv)));
    }
    edges.sort_unstable();
    PersonaGraph {
        persona_node,
        persona_offsets,
        edges,
    }
}
