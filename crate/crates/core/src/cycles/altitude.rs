use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::{CostGraph, CycleHierarchy};
use crate::error::{Error, Result};

/// Pairwise and per-cycle communication altitudes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AltitudeTable {
    /// `pairs[x][y] = A_c(x, y)`; the diagonal holds `phi(x)`.
    pub pairs: Vec<Vec<f64>>,
    /// `A_c(Pi)` by cycle id, `None` for singletons.
    pub cycles: Vec<Option<f64>>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Best bottleneck of `phi(u) - V(u, v)` over paths from `x` to every state.
/// Unreachable states get `-inf`.
fn widest_from(graph: &CostGraph, x: usize) -> Vec<f64> {
    let mut best = vec![f64::NEG_INFINITY; graph.len()];
    let mut done = vec![false; graph.len()];
    best[x] = f64::INFINITY;
    let mut heap = BinaryHeap::from([Entry(f64::INFINITY, x)]);
    while let Some(Entry(b, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, c) in graph.out(u) {
            let nb = b.min(graph.phi()[u] - c);
            if nb > best[v] {
                best[v] = nb;
                heap.push(Entry(nb, v));
            }
        }
    }
    best
}

/// `A_c(x, y)`: the largest, over paths from `x` to `y`, of the smallest
/// `phi(w_k) - V(w_k, w_{k+1})` along consecutive steps.
pub fn communication_altitude(graph: &CostGraph, x: usize, y: usize) -> Result<f64> {
    if x >= graph.len() || y >= graph.len() {
        return Err(Error::arg("state outside the cost graph"));
    }
    if x == y {
        return Err(Error::arg("altitude needs two distinct states"));
    }
    let a = widest_from(graph, x)[y];
    if a == f64::NEG_INFINITY {
        return Err(Error::Precondition(format!(
            "{} cannot reach {}",
            graph.names()[x],
            graph.names()[y]
        )));
    }
    Ok(a)
}

impl AltitudeTable {
    pub fn compute(h: &CycleHierarchy) -> Result<Self> {
        let g = h.graph();
        let n = g.len();
        let mut pairs = Vec::with_capacity(n);
        for x in 0..n {
            let mut row = widest_from(g, x);
            row[x] = g.phi()[x];
            if row.contains(&f64::NEG_INFINITY) {
                return Err(Error::Precondition("cost graph is not irreducible".into()));
            }
            pairs.push(row);
        }
        let cycles = h
            .cycles()
            .iter()
            .map(|c| {
                if c.is_trivial() {
                    return None;
                }
                let mut m = f64::INFINITY;
                for &x in &c.members {
                    for &y in &c.members {
                        if x != y {
                            m = m.min(pairs[x][y]);
                        }
                    }
                }
                Some(m)
            })
            .collect();
        Ok(AltitudeTable { pairs, cycles })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pairs[x][y]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::decompose;
    use crate::dynamics::{build_transition_model, Kernel};
    use crate::fixtures::{g3, random_game_set};
    use crate::game::DEFAULT_PROFILE_CAP;

    fn brute_force(g: &CostGraph, x: usize, y: usize) -> f64 {
        fn go(g: &CostGraph, u: usize, y: usize, seen: &mut Vec<bool>, floor: f64, best: &mut f64) {
            if u == y {
                *best = best.max(floor);
                return;
            }
            for &(v, c) in g.out(u) {
                if !seen[v] {
                    seen[v] = true;
                    go(g, v, y, seen, floor.min(g.phi()[u] - c), best);
                    seen[v] = false;
                }
            }
        }
        let mut seen = vec![false; g.len()];
        seen[x] = true;
        let mut best = f64::NEG_INFINITY;
        go(g, x, y, &mut seen, f64::INFINITY, &mut best);
        best
    }

    fn graph(game: &crate::TableGame, k: Kernel) -> CostGraph {
        CostGraph::from_model(&build_transition_model(game, k, 1.0, DEFAULT_PROFILE_CAP).unwrap())
    }

    #[test]
    fn g3_metropolis_values() {
        let g = graph(&g3(), Kernel::Metropolis);
        assert_eq!(communication_altitude(&g, 1, 2).unwrap(), 1.0);
        assert_eq!(communication_altitude(&g, 2, 1).unwrap(), 1.0);
        assert_eq!(communication_altitude(&g, 2, 0).unwrap(), 0.0);
        assert!(communication_altitude(&g, 1, 1).is_err());
    }

    #[test]
    fn widest_path_matches_enumeration() {
        for game in random_game_set(12, 40) {
            if game.space().len() > 8 {
                continue;
            }
            for k in Kernel::BOTH {
                let g = graph(&game, k);
                for x in 0..g.len() {
                    for y in 0..g.len() {
                        if x != y {
                            assert_eq!(communication_altitude(&g, x, y).unwrap(), brute_force(&g, x, y));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cycle_altitude_is_min_over_member_pairs() {
        let g = graph(&g3(), Kernel::Metropolis);
        let h = decompose(&g).unwrap();
        let t = AltitudeTable::compute(&h).unwrap();
        assert_eq!(t.cycles[h.find(&[1, 2]).unwrap().id], Some(1.0));
        assert_eq!(t.cycles[0], None);
    }
}
