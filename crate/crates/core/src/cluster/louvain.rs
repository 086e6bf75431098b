//! Multilevel Louvain modularity maximisation with a resolution parameter.
//!
//! Deterministic for a fixed seed: the node sweep order is one seeded shuffle
//! per level, and among moves with equal gain the lowest community id wins.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::seed;

/// Minimum modularity gain (in edge-weight units) that counts as an improvement.
const MIN_GAIN: f64 = 1e-12;

/// Weighted symmetric graph; a self-loop entry `(i, w)` carries `A_ii = w`.
#[derive(Debug, Clone)]
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            adj[u].push((v, 1.0));
            adj[v].push((u, 1.0));
        }
        Self::from_adj(adj)
    }

    fn from_adj(mut adj: Vec<Vec<(usize, f64)>>) -> Self {
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        let degree: Vec<f64> = adj.iter().map(|l| l.iter().map(|&(_, w)| w).sum()).collect();
        let two_m = degree.iter().sum();
        Level { adj, degree, two_m }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Local moving phase. Returns the community of each node (renumbered by
    /// first appearance) and whether any node changed community.
    fn local_moves(&self, resolution: f64, rng: &mut seed::Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut weight_to = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ki = self.degree[i];
                let old = comm[i];
                for &(j, w) in &self.adj[i] {
                    if j == i {
                        continue;
                    }
                    let c = comm[j];
                    if weight_to[c] == 0.0 {
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }
                tot[old] -= ki;
                let gain = |c: usize, w: f64| w - resolution * tot[c] * ki / self.two_m;
                let stay = gain(old, weight_to[old]);
                let mut best = old;
                let mut best_gain = stay + MIN_GAIN;
                touched.sort_unstable();
                for &c in &touched {
                    if c == old {
                        continue;
                    }
                    let g = gain(c, weight_to[c]);
                    if g > best_gain {
                        best_gain = g;
                        best = c;
                    }
                }
                for &c in &touched {
                    weight_to[c] = 0.0;
                }
                touched.clear();
                tot[best] += ki;
                comm[i] = best;
                if best != old {
                    moved = true;
                }
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        (renumber(&comm), any_move)
    }

    fn aggregate(&self, comm: &[usize], k: usize) -> Level {
        let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); k];
        for i in 0..self.len() {
            let ci = comm[i];
            for &(j, w) in &self.adj[i] {
                *maps[ci].entry(comm[j]).or_insert(0.0) += w;
            }
        }
        let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        Level::from_adj(adj)
    }
}

fn renumber(comm: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    comm.iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// Partitions an unweighted undirected graph; returns a community id per node,
/// numbered by first appearance in node order.
pub fn louvain(num_nodes: usize, edges: &[(usize, usize)], resolution: f64, seed: u64) -> Vec<usize> {
    assert!(resolution > 0.0, "resolution must be positive");
    let mut level = Level::from_edges(num_nodes, edges);
    let mut partition: Vec<usize> = (0..num_nodes).collect();
    if level.two_m == 0.0 {
        return partition;
    }
    let mut rng = seed::rng(seed);
    loop {
        let (comm, moved) = level.local_moves(resolution, &mut rng);
        if !moved {
            break;
        }
        for p in partition.iter_mut() {
            *p = comm[*p];
        }
        let k = comm.iter().max().map_or(0, |m| m + 1);
        level = level.aggregate(&comm, k);
    }
    renumber(&partition)
}

/// Resolution-scaled Newman modularity of `partition` on an unweighted graph.
pub fn modularity(num_nodes: usize, edges: &[(usize, usize)], partition: &[usize], resolution: f64) -> f64 {
    assert_eq!(partition.len(), num_nodes);
    let k = partition.iter().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0f64; k];
    let mut tot = vec![0.0f64; k];
    let mut two_m = 0.0f64;
    for &(u, v) in edges {
        if u == v {
            continue;
        }
        two_m += 2.0;
        tot[partition[u]] += 1.0;
        tot[partition[v]] += 1.0;
        if partition[u] == partition[v] {
            inside[partition[u]] += 2.0;
        }
    }
    if two_m == 0.0 {
        return 0.0;
    }
    (0..k)
        .map(|c| inside[c] / two_m - resolution * (tot[c] / two_m).powi(2))
        .sum()
}
