//! Log-linear learning (LLL) and Metropolis learning (ML) as exact Markov
//! chains over joint action profiles.
//!
//! Both kernels activate one player uniformly at random. Under LLL the
//! player resamples its action from a Boltzmann distribution over its own
//! utilities; under ML it proposes a uniformly random action and accepts it
//! with probability `min(1, exp(-(U_i(a) - U_i(a'))^+ / T))`.
//!
//! Each model also carries its transition cost `V` and constant `Gamma`
//! satisfying `Gamma e^{-V/T} <= P <= e^{-V/T} / Gamma` on every feasible
//! off-diagonal move. Probabilities are stored alongside their natural logs
//! so that these bounds remain checkable when `P` underflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{action_utilities, Game, ProfileSpace, TableGame, DEFAULT_PROFILE_CAP};

/// `|V| <= ZERO_COST_TOLERANCE` classifies a move as zero-cost.
pub const ZERO_COST_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kernel {
    #[serde(rename = "lll")]
    LogLinear,
    #[serde(rename = "ml")]
    Metropolis,
}

impl Kernel {
    pub const BOTH: [Kernel; 2] = [Kernel::LogLinear, Kernel::Metropolis];

    pub fn tag(self) -> &'static str {
        match self {
            Kernel::LogLinear => "lll",
            Kernel::Metropolis => "ml",
        }
    }

    pub fn parse(s: &str) -> Option<Kernel> {
        match s.to_ascii_lowercase().as_str() {
            "lll" | "log-linear" | "loglinear" => Some(Kernel::LogLinear),
            "ml" | "metropolis" => Some(Kernel::Metropolis),
            _ => None,
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::LogLinear => "LLL",
            Kernel::Metropolis => "ML",
        })
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("temperature must be positive and finite, got {t}")))
    }
}

/// Log-weights `-(U* - U(alpha))/T` and `ln Z` for one LLL revision.
fn lll_log_weights(utils: &[f64], t: f64) -> (Vec<f64>, f64) {
    let best = utils.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let logw: Vec<f64> = utils.iter().map(|u| -(best - u) / t).collect();
    // the best response contributes exp(0) = 1, so Z >= 1 and the sum is stable
    let z: f64 = logw.iter().map(|w| w.exp()).sum();
    (logw, z.ln())
}

/// Probability that an activated player `i` picks each of its actions under LLL.
pub fn lll_step_distribution<G: Game + ?Sized>(game: &G, i: usize, a: &[usize], t: f64) -> Result<Vec<f64>> {
    check_temperature(t)?;
    crate::game::utility(game, i, a)?;
    let (logw, ln_z) = lll_log_weights(&action_utilities(game, i, a), t);
    Ok(logw.iter().map(|w| (w - ln_z).exp()).collect())
}

/// ML acceptance probability for player `i` switching from `a_i` to `proposed`.
pub fn ml_accept_probability<G: Game + ?Sized>(
    game: &G,
    i: usize,
    a: &[usize],
    proposed: usize,
    t: f64,
) -> Result<f64> {
    check_temperature(t)?;
    let current = crate::game::utility(game, i, a)?;
    if proposed >= game.action_sizes()[i] {
        return Err(Error::arg(format!("player {i} has no action {proposed}")));
    }
    let mut b = a.to_vec();
    b[i] = proposed;
    let loss = (current - game.payoff(i, &b)).max(0.0);
    Ok((-loss / t).exp())
}

/// One feasible off-diagonal transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub target: usize,
    pub player: usize,
    pub action: usize,
    pub prob: f64,
    pub ln_prob: f64,
    pub cost: f64,
}

/// `Z_max` for LLL and whether it came from exact enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaConstant {
    pub gamma: f64,
    pub z_max: f64,
    pub exact: bool,
}

/// `Gamma^LLL_T = 1 / (n Z_max)`. Above `cap` profiles the enumeration is
/// skipped and the bound `Z_max <= |A|_max` is used instead.
pub fn lll_gamma<G: Game + ?Sized>(game: &G, t: f64, cap: usize) -> Result<GammaConstant> {
    check_temperature(t)?;
    let sizes = game.action_sizes();
    let n = sizes.len() as f64;
    let space = match ProfileSpace::with_cap(sizes, cap) {
        Ok(s) => s,
        Err(Error::Capacity { .. }) => {
            let amax = *sizes.iter().max().unwrap_or(&1) as f64;
            return Ok(GammaConstant {
                gamma: 1.0 / (n * amax),
                z_max: amax,
                exact: false,
            });
        }
        Err(e) => return Err(e),
    };
    let mut z_max: f64 = 1.0;
    let mut a = Vec::new();
    for k in 0..space.len() {
        space.decode_into(k, &mut a);
        for i in 0..space.players() {
            // visit each a_{-i} once, at a_i = 0
            if a[i] != 0 {
                continue;
            }
            let (_, ln_z) = lll_log_weights(&action_utilities(game, i, &a), t);
            z_max = z_max.max(ln_z.exp());
        }
    }
    Ok(GammaConstant {
        gamma: 1.0 / (n * z_max),
        z_max,
        exact: true,
    })
}

pub fn ml_gamma(sizes: &[usize]) -> f64 {
    let amax = *sizes.iter().max().unwrap_or(&1) as f64;
    1.0 / (sizes.len() as f64 * amax)
}

/// Full transition structure of one kernel at one temperature.
#[derive(Clone, Debug)]
pub struct TransitionModel {
    kernel: Kernel,
    temperature: f64,
    game: TableGame,
    space: ProfileSpace,
    potential: Vec<f64>,
    rows: Vec<Vec<Move>>,
    stay: Vec<f64>,
    gamma: GammaConstant,
}

/// Builds the exact chain. Fails when the game lacks a potential, when two
/// Hamming-1 neighbors share a potential value, or when the state space
/// exceeds `cap`.
pub fn build_transition_model<G: Game + ?Sized>(
    game: &G,
    kernel: Kernel,
    t: f64,
    cap: usize,
) -> Result<TransitionModel> {
    check_temperature(t)?;
    if !game.has_potential() {
        return Err(Error::Precondition(
            "transition models need a potential function".into(),
        ));
    }
    let table = TableGame::tabulate(game, cap)?;
    TransitionModel::from_table(table, kernel, t)
}

impl TransitionModel {
    pub fn from_table(game: TableGame, kernel: Kernel, t: f64) -> Result<Self> {
        check_temperature(t)?;
        let space = game.space();
        let potential = game
            .potential_table()
            .ok_or_else(|| Error::Precondition("transition models need a potential function".into()))?
            .to_vec();
        reject_equal_potential_edges(&space, &potential)?;

        let n = space.players();
        let ln_n = (n as f64).ln();
        let mut rows = Vec::with_capacity(space.len());
        let mut stay = Vec::with_capacity(space.len());
        let mut z_max: f64 = 1.0;

        for k in 0..space.len() {
            let mut row = Vec::new();
            let mut self_mass = 0.0;
            for i in 0..n {
                let m = space.sizes()[i];
                let current = space.action_of(k, i);
                let utils: Vec<f64> = (0..m)
                    .map(|alpha| game.utility_at(space.switch(k, i, alpha), i))
                    .collect();
                match kernel {
                    Kernel::LogLinear => {
                        let (logw, ln_z) = lll_log_weights(&utils, t);
                        z_max = z_max.max(ln_z.exp());
                        let best = utils.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        for alpha in 0..m {
                            let ln_p = logw[alpha] - ln_z - ln_n;
                            if alpha == current {
                                self_mass += ln_p.exp();
                                continue;
                            }
                            row.push(Move {
                                target: space.switch(k, i, alpha),
                                player: i,
                                action: alpha,
                                prob: ln_p.exp(),
                                ln_prob: ln_p,
                                cost: best - utils[alpha],
                            });
                        }
                    }
                    Kernel::Metropolis => {
                        let ln_q = -ln_n - (m as f64).ln();
                        let q = ln_q.exp();
                        // self-proposal
                        self_mass += q;
                        for alpha in 0..m {
                            if alpha == current {
                                continue;
                            }
                            let cost = (utils[current] - utils[alpha]).max(0.0);
                            let ln_p = ln_q - cost / t;
                            // rejected proposals stay put: q * (1 - e^{-cost/T})
                            self_mass += q * -(-cost / t).exp_m1();
                            row.push(Move {
                                target: space.switch(k, i, alpha),
                                player: i,
                                action: alpha,
                                prob: ln_p.exp(),
                                ln_prob: ln_p,
                                cost,
                            });
                        }
                    }
                }
            }
            row.sort_by_key(|mv| mv.target);
            rows.push(row);
            stay.push(self_mass);
        }

        let gamma = match kernel {
            Kernel::LogLinear => GammaConstant {
                gamma: 1.0 / (n as f64 * z_max),
                z_max,
                exact: true,
            },
            Kernel::Metropolis => {
                let amax = *space.sizes().iter().max().unwrap() as f64;
                GammaConstant {
                    gamma: ml_gamma(space.sizes()),
                    z_max: amax,
                    exact: true,
                }
            }
        };

        Ok(TransitionModel {
            kernel,
            temperature: t,
            game,
            space,
            potential,
            rows,
            stay,
            gamma,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn game(&self) -> &TableGame {
        &self.game
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `Gamma_T` for this kernel.
    pub fn gamma(&self) -> f64 {
        self.gamma.gamma
    }

    pub fn gamma_constant(&self) -> GammaConstant {
        self.gamma
    }

    /// Off-diagonal moves out of `state`, sorted by target.
    pub fn moves(&self, state: usize) -> &[Move] {
        &self.rows[state]
    }

    pub fn stay_probability(&self, state: usize) -> f64 {
        self.stay[state]
    }

    /// Total probability of leaving `state` in one step, summed without cancellation.
    pub fn leave_probability(&self, state: usize) -> f64 {
        self.rows[state].iter().map(|m| m.prob).sum()
    }

    fn find(&self, x: usize, y: usize) -> Option<&Move> {
        let row = &self.rows[x];
        row.binary_search_by_key(&y, |m| m.target).ok().map(|k| &row[k])
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.stay[x];
        }
        self.find(x, y).map_or(0.0, |m| m.prob)
    }

    pub fn ln_prob(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.stay[x].ln();
        }
        self.find(x, y).map_or(f64::NEG_INFINITY, |m| m.ln_prob)
    }

    /// Transition cost `V(x, y)`: `+inf` for moves changing more than one
    /// coordinate, and `0` on the diagonal.
    pub fn cost(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        self.find(x, y).map_or(f64::INFINITY, |m| m.cost)
    }

    pub fn row_sum(&self, state: usize) -> f64 {
        self.stay[state] + self.leave_probability(state)
    }

    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|x| {
                let mut row = vec![0.0; self.len()];
                row[x] = self.stay[x];
                for m in &self.rows[x] {
                    row[m.target] = m.prob;
                }
                row
            })
            .collect()
    }

    pub fn is_zero_cost(&self, x: usize, y: usize) -> bool {
        x != y && self.cost(x, y).abs() <= ZERO_COST_TOLERANCE
    }

    pub fn simulate(&self, a0: &[usize], steps: usize, seed: u64) -> Result<crate::simulate::Trace> {
        crate::simulate::simulate(&self.game, self.kernel, self.temperature, a0, steps, seed)
    }
}

fn reject_equal_potential_edges(space: &ProfileSpace, phi: &[f64]) -> Result<()> {
    for k in 0..space.len() {
        for i in 0..space.players() {
            for alpha in (space.action_of(k, i) + 1)..space.sizes()[i] {
                let j = space.switch(k, i, alpha);
                if (phi[j] - phi[k]).abs() <= ZERO_COST_TOLERANCE {
                    return Err(Error::EqualPotentialEdge {
                        from: space.profile(k).into_inner(),
                        to: space.profile(j).into_inner(),
                        potential: phi[k],
                    });
                }
            }
        }
    }
    Ok(())
}

/// `V(a, a')` of a built model.
pub fn edge_cost(model: &TransitionModel, a: &[usize], b: &[usize]) -> Result<f64> {
    model.space.validate(a)?;
    model.space.validate(b)?;
    Ok(model.cost(model.space.index(a), model.space.index(b)))
}

/// Outcome of one family of checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub violations: usize,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    pub(crate) fn new() -> Self {
        Check {
            passed: true,
            ..Default::default()
        }
    }

    pub(crate) fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            self.passed = false;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub kernel: Kernel,
    pub temperature: f64,
    pub gamma: f64,
    pub rows_stochastic: Check,
    pub gamma_sandwich: Check,
    pub weak_reversibility: Check,
    pub infinite_cost_iff_zero_prob: Check,
    /// Present when a model of the other kernel was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross: Option<KernelDominance>,
    pub passed: bool,
}

/// LLL-versus-ML checks on the same game and temperature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelDominance {
    pub gamma_lll: f64,
    pub gamma_ml: f64,
    /// `V^LLL >= V^ML` on every feasible move.
    pub cost_dominance: Check,
    /// zero-cost LLL moves are zero-cost under ML
    pub zero_edge_inclusion: Check,
    pub gamma_order: Check,
}

const ROW_SUM_TOLERANCE: f64 = 1e-12;
const REVERSIBILITY_TOLERANCE: f64 = 1e-9;
const LOG_SANDWICH_TOLERANCE: f64 = 1e-9;

/// Verifies that a model satisfies the cost/Gamma sandwich, weak
/// reversibility against its potential, and (given the other kernel's model)
/// the LLL-versus-ML orderings.
pub fn verify_regularity(model: &TransitionModel, counterpart: Option<&TransitionModel>) -> Result<RegularityReport> {
    let sp = &model.space;
    let name = |k: usize| sp.profile(k).to_string();
    let ln_gamma = model.gamma().ln();
    let t = model.temperature;

    let mut rows = Check::new();
    let mut sandwich = Check::new();
    let mut reversible = Check::new();
    let mut inf_iff = Check::new();

    for x in 0..model.len() {
        let s = model.row_sum(x);
        rows.record((s - 1.0).abs() <= ROW_SUM_TOLERANCE, || format!("row {} sums to {s}", name(x)));
        for mv in &model.rows[x] {
            let y = mv.target;
            let lo = ln_gamma - mv.cost / t;
            let hi = -ln_gamma - mv.cost / t;
            sandwich.record(
                mv.ln_prob >= lo - LOG_SANDWICH_TOLERANCE && mv.ln_prob <= hi + LOG_SANDWICH_TOLERANCE,
                || format!("{} -> {}: ln P = {} outside [{lo}, {hi}]", name(x), name(y), mv.ln_prob),
            );
            let back = model.cost(y, x);
            let lhs = model.potential[x] - mv.cost;
            let rhs = model.potential[y] - back;
            reversible.record((lhs - rhs).abs() <= REVERSIBILITY_TOLERANCE, || {
                format!("{} <-> {}: {lhs} != {rhs}", name(x), name(y))
            });
            inf_iff.record(mv.cost.is_finite() && mv.ln_prob.is_finite(), || {
                format!("{} -> {} feasible but V = {}", name(x), name(y), mv.cost)
            });
        }
        // structurally impossible moves are absent from the row and cost +inf
        let feasible: usize = sp.sizes().iter().map(|m| m - 1).sum();
        inf_iff.record(model.rows[x].len() == feasible, || {
            format!("row {} lists {} moves, expected {feasible}", name(x), model.rows[x].len())
        });
    }

    let cross = match counterpart {
        None => None,
        Some(other) => Some(kernel_dominance(model, other)?),
    };
    let passed = rows.passed
        && sandwich.passed
        && reversible.passed
        && inf_iff.passed
        && cross.as_ref().is_none_or(|c| c.cost_dominance.passed && c.zero_edge_inclusion.passed && c.gamma_order.passed);
    Ok(RegularityReport {
        kernel: model.kernel,
        temperature: t,
        gamma: model.gamma(),
        rows_stochastic: rows,
        gamma_sandwich: sandwich,
        weak_reversibility: reversible,
        infinite_cost_iff_zero_prob: inf_iff,
        cross,
        passed,
    })
}

fn kernel_dominance(a: &TransitionModel, b: &TransitionModel) -> Result<KernelDominance> {
    let (lll, ml) = match (a.kernel, b.kernel) {
        (Kernel::LogLinear, Kernel::Metropolis) => (a, b),
        (Kernel::Metropolis, Kernel::LogLinear) => (b, a),
        _ => return Err(Error::arg("counterpart model must use the other kernel")),
    };
    if lll.space != ml.space {
        return Err(Error::arg("models are over different state spaces"));
    }
    let name = |k: usize| lll.space.profile(k).to_string();
    let mut dom = Check::new();
    let mut incl = Check::new();
    for x in 0..lll.len() {
        for mv in &lll.rows[x] {
            let v_ml = ml.cost(x, mv.target);
            dom.record(mv.cost >= v_ml - REVERSIBILITY_TOLERANCE, || {
                format!("{} -> {}: V^LLL = {} < V^ML = {v_ml}", name(x), name(mv.target), mv.cost)
            });
            if mv.cost.abs() <= ZERO_COST_TOLERANCE {
                incl.record(v_ml.abs() <= ZERO_COST_TOLERANCE, || {
                    format!("{} -> {} is zero-cost under LLL only", name(x), name(mv.target))
                });
            }
        }
    }
    let mut order = Check::new();
    order.record(lll.gamma() >= ml.gamma(), || {
        format!("Gamma^LLL = {} < Gamma^ML = {}", lll.gamma(), ml.gamma())
    });
    Ok(KernelDominance {
        gamma_lll: lll.gamma(),
        gamma_ml: ml.gamma(),
        cost_dominance: dom,
        zero_edge_inclusion: incl,
        gamma_order: order,
    })
}

/// Builds both kernels' models for one game and temperature.
pub fn build_pair<G: Game + ?Sized>(game: &G, t: f64) -> Result<(TransitionModel, TransitionModel)> {
    let table = TableGame::tabulate(game, DEFAULT_PROFILE_CAP)?;
    let lll = TransitionModel::from_table(table.clone(), Kernel::LogLinear, t)?;
    let ml = TransitionModel::from_table(table, Kernel::Metropolis, t)?;
    Ok((lll, ml))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g2, g3, random_game_set};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lll_distribution_limits() {
        let g = g3();
        let cold = lll_step_distribution(&g, 0, &[0], 1e-4).unwrap();
        assert!(cold[2] >= 1.0 - 1e-6);
        let hot = lll_step_distribution(&g, 0, &[0], 1e6).unwrap();
        assert!(hot.iter().all(|p| close(*p, 1.0 / 3.0, 1e-5)));
        let tie = TableGame::identical_interest(vec![3], vec![0.0, 2.0, 2.0]).unwrap();
        let d = lll_step_distribution(&tie, 0, &[0], 0.5).unwrap();
        assert_eq!(d[1], d[2]);
        assert!(lll_step_distribution(&g, 0, &[0], 0.0).is_err());
        assert!(lll_step_distribution(&g, 0, &[0], -1.0).is_err());
    }

    #[test]
    fn ml_acceptance() {
        let g = g3();
        assert_eq!(ml_accept_probability(&g, 0, &[0], 2, 1.0).unwrap(), 1.0);
        assert!(close(ml_accept_probability(&g, 0, &[2], 1, 1.0).unwrap(), (-2.0f64).exp(), 1e-15));
        assert!(close(ml_accept_probability(&g, 0, &[2], 1, 1.0).unwrap(), 0.1353, 1e-4));
        assert_eq!(ml_accept_probability(&g, 0, &[1], 1, 1.0).unwrap(), 1.0);
        assert!(ml_accept_probability(&g, 0, &[1], 1, 0.0).is_err());
    }

    #[test]
    fn g3_metropolis_entries() {
        let m = build_transition_model(&g3(), Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        assert!(close(m.prob(0, 1), 1.0 / 3.0, 1e-15));
        assert!(close(m.prob(0, 2), 1.0 / 3.0, 1e-15));
        assert!(close(m.prob(2, 0), (-3.0f64).exp() / 3.0, 1e-15));
        assert!(close(m.prob(2, 0), 0.0166, 1e-4));
        let m2 = build_transition_model(&g2(), Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(m2.gamma(), 0.25);
    }

    #[test]
    fn costs_of_both_kernels() {
        let lll = build_transition_model(&g3(), Kernel::LogLinear, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        let ml = build_transition_model(&g3(), Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(edge_cost(&lll, &[0], &[1]).unwrap(), 2.0);
        assert_eq!(edge_cost(&ml, &[0], &[1]).unwrap(), 0.0);
        let ml2 = build_transition_model(&g2(), Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(edge_cost(&ml2, &[1, 1], &[0, 1]).unwrap(), 2.0);
        assert_eq!(edge_cost(&ml2, &[0, 0], &[1, 1]).unwrap(), f64::INFINITY);
        assert_eq!(ml2.prob(0, 3), 0.0);
    }

    #[test]
    fn rows_are_stochastic() {
        for g in random_game_set(10, 99) {
            for k in Kernel::BOTH {
                for t in [0.05, 0.3, 2.0] {
                    let m = build_transition_model(&g, k, t, DEFAULT_PROFILE_CAP).unwrap();
                    for x in 0..m.len() {
                        assert!((m.row_sum(x) - 1.0).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn regularity_on_small_games() {
        let mut games = vec![g2(), g3()];
        games.extend(random_game_set(20, 1234));
        for g in &games {
            for t in [0.1, 1.0] {
                let (lll, ml) = build_pair(g, t).unwrap();
                let r = verify_regularity(&lll, Some(&ml)).unwrap();
                assert!(r.passed, "{r:#?}");
                let r = verify_regularity(&ml, Some(&lll)).unwrap();
                assert!(r.passed, "{r:#?}");
            }
        }
    }

    #[test]
    fn rejects_equal_potential_neighbors() {
        let g = TableGame::identical_interest(vec![2, 2], vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        // (1,0) and (0,1) are not neighbors, so this one is fine
        assert!(build_transition_model(&g, Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).is_ok());
        let bad = TableGame::identical_interest(vec![2, 2], vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        match build_transition_model(&bad, Kernel::LogLinear, 1.0, DEFAULT_PROFILE_CAP) {
            Err(Error::EqualPotentialEdge { from, to, .. }) => {
                assert_eq!(from, vec![0, 0]);
                assert_eq!(to, vec![1, 0]);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn lll_gamma_matches_model_and_limit() {
        let g = g2();
        let m = build_transition_model(&g, Kernel::LogLinear, 0.7, DEFAULT_PROFILE_CAP).unwrap();
        let standalone = lll_gamma(&g, 0.7, DEFAULT_PROFILE_CAP).unwrap();
        assert!(close(m.gamma(), standalone.gamma, 1e-15));
        let cold = lll_gamma(&g, 1e-3, DEFAULT_PROFILE_CAP).unwrap();
        assert!(close(cold.gamma, 0.5, 1e-12));
        let fallback = lll_gamma(&g, 0.7, 2).unwrap();
        assert!(!fallback.exact);
        assert_eq!(fallback.gamma, 0.25);
    }
}
