//! Cycle decomposition of cost-labeled, weakly reversible chains.
//!
//! Starting from singletons, each level computes the exit cost `H_e` of
//! every set, subtracts it from the set's outgoing costs (`V_* = V - H_e`),
//! and merges the closed strongly connected components of the zero-`V_*`
//! graph into new cycles. Sets outside closed components are carried over
//! unchanged. The process stops when one cycle covers the whole space.

mod altitude;
mod dot;
mod exit;
mod verify;

use std::collections::{BTreeMap, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::dynamics::{Kernel, TransitionModel, ZERO_COST_TOLERANCE};
use crate::error::{Error, Result};

pub use altitude::{communication_altitude, AltitudeTable};
pub use dot::{export_dot, level_dot, to_dot};
pub use exit::{empirical_exit_validation, ExitPoint, ExitValidation, ExitValidationPlan};
pub use verify::{
    compare_hierarchies, verify_structure, ExitHeightDiagnostic, HierarchyComparison, SharedCycle, StructureReport,
};

/// Tolerance for weak reversibility and identity checks on real-valued costs.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

pub type CycleId = usize;

/// Finite transition costs and a potential over a finite state set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostGraph {
    phi: Vec<f64>,
    names: Vec<String>,
    /// finite off-diagonal costs, sorted by target
    out: Vec<Vec<(usize, f64)>>,
    kernel: Option<Kernel>,
}

impl CostGraph {
    /// Edges with infinite cost and self-loops are dropped.
    pub fn new(phi: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let n = phi.len();
        if n == 0 {
            return Err(Error::arg("cost graph needs at least one state"));
        }
        let mut out = vec![BTreeMap::new(); n];
        for (x, y, v) in edges {
            if x >= n || y >= n {
                return Err(Error::arg(format!("edge ({x},{y}) outside {n} states")));
            }
            if v.is_nan() || v < 0.0 {
                return Err(Error::arg(format!("edge ({x},{y}) has invalid cost {v}")));
            }
            if x != y && v.is_finite() {
                out[x].insert(y, v);
            }
        }
        Ok(CostGraph {
            names: (0..n).map(|x| x.to_string()).collect(),
            phi,
            out: out.into_iter().map(|m| m.into_iter().collect()).collect(),
            kernel: None,
        })
    }

    pub fn from_model(model: &TransitionModel) -> Self {
        let space = model.space();
        CostGraph {
            phi: model.potential().to_vec(),
            names: (0..model.len()).map(|x| space.profile(x).to_string()).collect(),
            out: (0..model.len())
                .map(|x| model.moves(x).iter().map(|m| (m.target, m.cost)).collect())
                .collect(),
            kernel: Some(model.kernel()),
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.phi.len() {
            return Err(Error::arg("one name per state required"));
        }
        self.names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kernel(&self) -> Option<Kernel> {
        self.kernel
    }

    pub fn out(&self, x: usize) -> &[(usize, f64)] {
        &self.out[x]
    }

    pub fn cost(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        match self.out[x].binary_search_by_key(&y, |e| e.0) {
            Ok(k) => self.out[x][k].1,
            Err(_) => f64::INFINITY,
        }
    }

    fn check_irreducible(&self) -> Result<()> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.len(), 0);
        let nodes: Vec<_> = (0..self.len()).map(|_| g.add_node(())).collect();
        for (x, row) in self.out.iter().enumerate() {
            for &(y, _) in row {
                g.add_edge(nodes[x], nodes[y], ());
            }
        }
        if tarjan_scc(&g).len() != 1 {
            return Err(Error::Precondition("cost graph is not irreducible".into()));
        }
        Ok(())
    }

    fn check_weak_reversibility(&self) -> Result<()> {
        for (x, row) in self.out.iter().enumerate() {
            for &(y, v) in row {
                let back = self.cost(y, x);
                let lhs = self.phi[x] - v;
                let rhs = self.phi[y] - back;
                if !((lhs - rhs).abs() <= IDENTITY_TOLERANCE) {
                    return Err(Error::Precondition(format!(
                        "weak reversibility fails on {} -> {}: {lhs} != {rhs}",
                        self.names[x], self.names[y]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleNode {
    pub id: CycleId,
    pub members: Vec<usize>,
    /// level at which the cycle first appears
    pub order: usize,
    /// `+inf` for the whole space
    pub exit_height: f64,
    pub mixing_height: f64,
    pub potential: f64,
    pub children: Vec<CycleId>,
    pub parent: Option<CycleId>,
}

impl CycleNode {
    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }

    pub fn min_member(&self) -> usize {
        self.members[0]
    }
}

/// One partition `E^k` with its inter-set costs and exit costs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Level {
    pub cycles: Vec<CycleId>,
    /// `V^k` by position in `cycles`, finite entries only, sorted by target
    pub costs: Vec<Vec<(usize, f64)>>,
    /// `H_e^k` by position
    pub exit: Vec<f64>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        match self.costs[i].binary_search_by_key(&j, |e| e.0) {
            Ok(k) => self.costs[i][k].1,
            Err(_) => f64::INFINITY,
        }
    }

    /// `V_*^k(i, j) = V^k(i, j) - H_e^k(i)`.
    pub fn reduced_cost(&self, i: usize, j: usize) -> f64 {
        self.cost(i, j) - self.exit[i]
    }

    pub fn position(&self, id: CycleId) -> Option<usize> {
        self.cycles.iter().position(|&c| c == id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleHierarchy {
    graph: CostGraph,
    nodes: Vec<CycleNode>,
    levels: Vec<Level>,
    #[serde(skip)]
    by_members: HashMap<Vec<usize>, CycleId>,
}

impl CycleHierarchy {
    pub fn graph(&self) -> &CostGraph {
        &self.graph
    }

    pub fn kernel(&self) -> Option<Kernel> {
        self.graph.kernel
    }

    pub fn states(&self) -> usize {
        self.graph.len()
    }

    pub fn cycles(&self) -> &[CycleNode] {
        &self.nodes
    }

    pub fn cycle(&self, id: CycleId) -> &CycleNode {
        &self.nodes[id]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Index of the final level `{S}`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn root(&self) -> &CycleNode {
        &self.nodes[self.levels.last().expect("nonempty")[0]]
    }

    pub fn find(&self, members: &[usize]) -> Option<&CycleNode> {
        let mut key = members.to_vec();
        key.sort_unstable();
        key.dedup();
        self.by_members.get(&key).map(|&id| &self.nodes[id])
    }

    /// Member sets of `E^k`, in canonical order.
    pub fn partition(&self, k: usize) -> Vec<Vec<usize>> {
        self.levels[k].cycles.iter().map(|&c| self.nodes[c].members.clone()).collect()
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &CycleNode> {
        self.nodes.iter().filter(|c| !c.is_trivial())
    }

    /// Smallest cycle containing both states.
    pub fn smallest_common(&self, x: usize, y: usize) -> &CycleNode {
        let mut c = &self.nodes[x];
        while c.members.binary_search(&y).is_err() {
            c = &self.nodes[c.parent.expect("root contains every state")];
        }
        c
    }

    pub fn altitudes(&self) -> Result<AltitudeTable> {
        AltitudeTable::compute(self)
    }

    /// `V^k` between two member sets of level `k`.
    pub fn level_cost(&self, k: usize, from: &[usize], to: &[usize]) -> Option<f64> {
        let level = &self.levels[k];
        let i = level.position(self.find(from)?.id)?;
        let j = level.position(self.find(to)?.id)?;
        Some(level.cost(i, j))
    }
}

impl std::ops::Index<usize> for Level {
    type Output = CycleId;
    fn index(&self, i: usize) -> &CycleId {
        &self.cycles[i]
    }
}

/// Runs the decomposition on a model's cost table.
pub fn decompose_model(model: &TransitionModel) -> Result<CycleHierarchy> {
    decompose(&CostGraph::from_model(model))
}

/// Full cycle hierarchy of an irreducible, weakly reversible cost graph.
pub fn decompose(graph: &CostGraph) -> Result<CycleHierarchy> {
    graph.check_irreducible()?;
    graph.check_weak_reversibility()?;
    let n = graph.len();
    let tol = ZERO_COST_TOLERANCE;

    let mut nodes: Vec<CycleNode> = (0..n)
        .map(|x| CycleNode {
            id: x,
            members: vec![x],
            order: 0,
            exit_height: f64::NAN,
            mixing_height: 0.0,
            potential: graph.phi[x],
            children: Vec::new(),
            parent: None,
        })
        .collect();
    let mut current: Vec<CycleId> = (0..n).collect();
    let mut costs: Vec<BTreeMap<usize, f64>> = graph.out.iter().map(|r| r.iter().copied().collect()).collect();
    let mut levels = Vec::new();

    loop {
        let m = current.len();
        let k = levels.len();
        if m == 1 {
            nodes[current[0]].exit_height = f64::INFINITY;
            levels.push(Level {
                cycles: current,
                costs: vec![Vec::new()],
                exit: vec![f64::INFINITY],
            });
            break;
        }
        if k >= n.saturating_sub(1).max(1) {
            return Err(Error::Invariant(format!(
                "decomposition exceeded {} coarsening levels",
                n - 1
            )));
        }

        let mut exit = Vec::with_capacity(m);
        for (i, row) in costs.iter().enumerate() {
            let h = row.values().cloned().fold(f64::INFINITY, f64::min);
            if !h.is_finite() {
                return Err(Error::Precondition(format!(
                    "set {:?} has no finite exit",
                    nodes[current[i]].members
                )));
            }
            let node = &mut nodes[current[i]];
            if node.exit_height.is_nan() {
                node.exit_height = h;
            } else if (node.exit_height - h).abs() > IDENTITY_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "carried cycle {:?} changed exit cost from {} to {h}",
                    node.members, node.exit_height
                )));
            }
            exit.push(h);
        }

        let mut g = DiGraph::<(), ()>::with_capacity(m, 0);
        let idx: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
        for (i, row) in costs.iter().enumerate() {
            for (&j, &v) in row {
                if v - exit[i] <= tol {
                    g.add_edge(idx[i], idx[j], ());
                }
            }
        }
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0usize; m];
        for (c, scc) in sccs.iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        let closed: Vec<bool> = sccs
            .iter()
            .enumerate()
            .map(|(c, scc)| {
                scc.iter().all(|v| {
                    let i = v.index();
                    costs[i].iter().all(|(&j, &val)| comp[j] == c || val - exit[i] > tol)
                })
            })
            .collect();

        // groups of positions forming E^{k+1}; merged groups come from closed components
        let mut groups: Vec<(bool, Vec<usize>)> = Vec::new();
        for (c, scc) in sccs.iter().enumerate() {
            let mut pos: Vec<usize> = scc.iter().map(|v| v.index()).collect();
            pos.sort_by_key(|&i| nodes[current[i]].min_member());
            if closed[c] {
                if pos.len() < 2 {
                    return Err(Error::Invariant(format!(
                        "closed singleton component {:?}",
                        nodes[current[pos[0]]].members
                    )));
                }
                groups.push((true, pos));
            } else {
                groups.extend(pos.into_iter().map(|i| (false, vec![i])));
            }
        }
        if groups.iter().all(|(merged, _)| !merged) {
            return Err(Error::Invariant(format!("no closed component at level {k}")));
        }
        groups.sort_by_key(|(_, pos)| nodes[current[pos[0]]].min_member());

        let mut next = Vec::with_capacity(groups.len());
        let mut group_of = vec![0usize; m];
        let mut mixing = Vec::with_capacity(groups.len());
        for (g_idx, (merged, pos)) in groups.iter().enumerate() {
            for &i in pos {
                group_of[i] = g_idx;
            }
            if *merged {
                let id = nodes.len();
                let children: Vec<CycleId> = pos.iter().map(|&i| current[i]).collect();
                let mut members: Vec<usize> = children.iter().flat_map(|&c| nodes[c].members.clone()).collect();
                members.sort_unstable();
                let h_m = pos.iter().map(|&i| exit[i]).fold(f64::NEG_INFINITY, f64::max);
                let potential = children.iter().map(|&c| nodes[c].potential).fold(f64::NEG_INFINITY, f64::max);
                for &c in &children {
                    nodes[c].parent = Some(id);
                }
                nodes.push(CycleNode {
                    id,
                    members,
                    order: k + 1,
                    exit_height: f64::NAN,
                    mixing_height: h_m,
                    potential,
                    children,
                    parent: None,
                });
                next.push(id);
                mixing.push(h_m);
            } else {
                next.push(current[pos[0]]);
                // carried over: the new mixing term equals the old exit cost
                mixing.push(exit[pos[0]]);
            }
        }

        let mut next_costs: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); next.len()];
        for (i, row) in costs.iter().enumerate() {
            let gi = group_of[i];
            for (&j, &v) in row {
                let gj = group_of[j];
                if gi == gj {
                    continue;
                }
                let val = mixing[gi] + (v - exit[i]);
                let e = next_costs[gi].entry(gj).or_insert(f64::INFINITY);
                if val < *e {
                    *e = val;
                }
            }
        }

        levels.push(Level {
            cycles: current,
            costs: costs.into_iter().map(|r| r.into_iter().collect()).collect(),
            exit,
        });
        current = next;
        costs = next_costs;
    }

    let by_members = nodes.iter().map(|c| (c.members.clone(), c.id)).collect();
    Ok(CycleHierarchy {
        graph: graph.clone(),
        nodes,
        levels,
        by_members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::build_transition_model;
    use crate::fixtures::{g2, g3, random_game_set};
    use crate::game::DEFAULT_PROFILE_CAP;

    fn hierarchy(game: &crate::TableGame, k: Kernel) -> CycleHierarchy {
        decompose_model(&build_transition_model(game, k, 1.0, DEFAULT_PROFILE_CAP).unwrap()).unwrap()
    }

    #[test]
    fn g3_metropolis_by_hand() {
        let h = hierarchy(&g3(), Kernel::Metropolis);
        assert_eq!(h.partition(1), vec![vec![0], vec![1, 2]]);
        let c = h.find(&[1, 2]).unwrap();
        assert_eq!((c.exit_height, c.mixing_height, c.potential), (3.0, 2.0, 3.0));
        assert_eq!(h.level_cost(1, &[1, 2], &[0]), Some(3.0));
        assert_eq!(h.depth(), 2);
        assert_eq!(h.root().exit_height, f64::INFINITY);
        assert_eq!(h.cycle(0).exit_height, 0.0);
    }

    #[test]
    fn g3_log_linear_by_hand() {
        let h = hierarchy(&g3(), Kernel::LogLinear);
        assert_eq!(h.partition(1), vec![vec![0], vec![1, 2]]);
        assert_eq!(h.find(&[1, 2]).unwrap().exit_height, 3.0);
    }

    #[test]
    fn strongly_connected_zero_graph_collapses_at_once() {
        // flat potential, equal costs everywhere
        let g = CostGraph::new(vec![0.0; 3], (0..3).flat_map(|x| (0..3).map(move |y| (x, y, 1.0)))).unwrap();
        let h = decompose(&g).unwrap();
        assert_eq!(h.depth(), 1);
        assert_eq!(h.root().members, vec![0, 1, 2]);
        assert_eq!(h.root().mixing_height, 1.0);
    }

    #[test]
    fn rejects_reducible_and_irreversible_graphs() {
        let g = CostGraph::new(vec![0.0, 1.0], [(0, 1, 0.0)]).unwrap();
        assert!(matches!(decompose(&g), Err(Error::Precondition(_))));
        let g = CostGraph::new(vec![0.0, 1.0], [(0, 1, 0.0), (1, 0, 5.0)]).unwrap();
        assert!(matches!(decompose(&g), Err(Error::Precondition(_))));
    }

    #[test]
    fn levels_refine_and_children_partition() {
        let mut games = vec![g2(), g3()];
        games.extend(random_game_set(10, 3));
        for g in &games {
            for k in Kernel::BOTH {
                let h = hierarchy(g, k);
                assert_eq!(h.levels()[0].len(), h.states());
                for w in h.levels().windows(2) {
                    for &c in &w[1].cycles {
                        let node = h.cycle(c);
                        if node.children.is_empty() {
                            assert!(w[0].cycles.contains(&c));
                        } else {
                            let mut all: Vec<usize> =
                                node.children.iter().flat_map(|&ch| h.cycle(ch).members.clone()).collect();
                            all.sort_unstable();
                            assert_eq!(all, node.members);
                            assert!(node.children.iter().all(|&ch| h.cycle(ch).order < node.order));
                        }
                    }
                }
                assert_eq!(h.root().members.len(), h.states());
            }
        }
    }
}
