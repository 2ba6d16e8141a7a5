//! Stationary distributions, hitting times to the Nash set, zero-cost path
//! statistics and the hitting-time bound built on them.

use std::collections::VecDeque;

use serde::Serialize;

use crate::dynamics::{build_pair, Kernel, TransitionModel};
use crate::error::{Error, Result};
use crate::game::{enumerate_nash, Game, NashSet, ProfileSpace, DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE};
use crate::simulate::{first_hitting_step, rng_for, stream_seed, Learner};

/// Largest state space solved by direct elimination; larger chains use
/// iterative methods.
pub const DENSE_LIMIT: usize = 4096;
pub const STATIONARY_RESIDUAL_TARGET: f64 = 1e-10;
pub const HITTING_RESIDUAL_TARGET: f64 = 1e-9;
pub const DEFAULT_ITERATION_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub probabilities: Vec<f64>,
    pub temperature: f64,
    /// `None` for the closed-form Gibbs measure.
    pub kernel: Option<Kernel>,
    /// `||pi P - pi||_1`, when obtained from a chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl StationaryDistribution {
    pub fn total_variation(&self, other: &StationaryDistribution) -> f64 {
        total_variation(&self.probabilities, &other.probabilities)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different spaces");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `pi(a) = exp(phi(a)/T) / Z`, shifted by `max phi` before exponentiation.
pub fn gibbs<G: Game + ?Sized>(game: &G, t: f64) -> Result<StationaryDistribution> {
    gibbs_with_cap(game, t, DEFAULT_PROFILE_CAP)
}

pub fn gibbs_with_cap<G: Game + ?Sized>(game: &G, t: f64, cap: usize) -> Result<StationaryDistribution> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("temperature must be positive and finite, got {t}")));
    }
    if !game.has_potential() {
        return Err(Error::Precondition("the Gibbs measure needs a potential function".into()));
    }
    let space = ProfileSpace::with_cap(game.action_sizes(), cap)?;
    let mut a = Vec::new();
    let phi: Vec<f64> = (0..space.len())
        .map(|k| {
            space.decode_into(k, &mut a);
            game.potential_value(&a).expect("potential present")
        })
        .collect();
    let top = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = phi.iter().map(|p| ((p - top) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(StationaryDistribution {
        probabilities: w.iter().map(|x| x / z).collect(),
        temperature: t,
        kernel: None,
        residual: None,
    })
}

fn stationary_residual(model: &TransitionModel, pi: &[f64]) -> f64 {
    let mut next: Vec<f64> = (0..model.len()).map(|x| pi[x] * model.stay_probability(x)).collect();
    for x in 0..model.len() {
        for mv in model.moves(x) {
            next[mv.target] += pi[x] * mv.prob;
        }
    }
    next.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

/// Left fixed point of the chain. Uses the Grassmann-Taksar-Heyman state
/// reduction (subtraction-free) up to [`DENSE_LIMIT`] states and power
/// iteration above.
pub fn stationary_solve(model: &TransitionModel) -> Result<StationaryDistribution> {
    stationary_solve_with(model, DEFAULT_ITERATION_CAP)
}

pub fn stationary_solve_with(model: &TransitionModel, iteration_cap: usize) -> Result<StationaryDistribution> {
    let pi = if model.len() <= DENSE_LIMIT {
        gth_stationary(model)
    } else {
        power_stationary(model, iteration_cap)?
    };
    let residual = stationary_residual(model, &pi);
    if !(residual <= STATIONARY_RESIDUAL_TARGET) {
        return Err(Error::Numeric(format!(
            "stationary residual {residual:e} above {STATIONARY_RESIDUAL_TARGET:e}"
        )));
    }
    Ok(StationaryDistribution {
        probabilities: pi,
        temperature: model.temperature(),
        kernel: Some(model.kernel()),
        residual: Some(residual),
    })
}

fn dense_off_diagonal(model: &TransitionModel) -> Vec<Vec<f64>> {
    let n = model.len();
    let mut p = vec![vec![0.0; n]; n];
    for (x, row) in p.iter_mut().enumerate() {
        for mv in model.moves(x) {
            row[mv.target] = mv.prob;
        }
    }
    p
}

fn gth_stationary(model: &TransitionModel) -> Vec<f64> {
    let n = model.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut p = dense_off_diagonal(model);
    let mut outflow = vec![0.0; n];
    for k in (1..n).rev() {
        let s: f64 = p[k][..k].iter().sum();
        outflow[k] = s;
        let into: Vec<usize> = (0..k).filter(|&i| p[i][k] != 0.0).collect();
        let from: Vec<usize> = (0..k).filter(|&j| p[k][j] != 0.0).collect();
        for &i in &into {
            let f = p[i][k] / s;
            for &j in &from {
                if i != j {
                    p[i][j] += f * p[k][j];
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        let inflow: f64 = (0..k).map(|i| pi[i] * p[i][k]).sum();
        pi[k] = inflow / outflow[k];
    }
    let z: f64 = pi.iter().sum();
    pi.iter().map(|x| x / z).collect()
}

fn power_stationary(model: &TransitionModel, iteration_cap: usize) -> Result<Vec<f64>> {
    let n = model.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..iteration_cap {
        for x in 0..n {
            next[x] = pi[x] * model.stay_probability(x);
        }
        for x in 0..n {
            for mv in model.moves(x) {
                next[mv.target] += pi[x] * mv.prob;
            }
        }
        let z: f64 = next.iter().sum();
        let mut change = 0.0;
        for x in 0..n {
            let v = next[x] / z;
            change += (v - pi[x]).abs();
            pi[x] = v;
        }
        if change <= STATIONARY_RESIDUAL_TARGET * 0.1 {
            return Ok(pi);
        }
    }
    Err(Error::Numeric(format!(
        "power iteration did not converge in {iteration_cap} iterations"
    )))
}

/// Expected number of steps to reach `target` from every state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingTimes {
    pub times: Vec<f64>,
    /// `max |(I - P)h - 1|` over non-target states, divided by `max(1, max h)`.
    pub residual: f64,
}

impl HittingTimes {
    pub fn max(&self) -> f64 {
        self.times.iter().cloned().fold(0.0, f64::max)
    }
}

/// Solves `h = 0` on `target` and `h(a) = 1 + sum_a' P(a,a') h(a')` elsewhere.
/// Small chains use subtraction-free elimination; large chains use
/// Gauss-Seidel sweeps.
pub fn exact_hitting_times(model: &TransitionModel, target: &[usize]) -> Result<HittingTimes> {
    exact_hitting_times_with(model, target, DEFAULT_ITERATION_CAP)
}

pub fn exact_hitting_times_with(model: &TransitionModel, target: &[usize], iteration_cap: usize) -> Result<HittingTimes> {
    if target.is_empty() {
        return Err(Error::arg("hitting target must be nonempty"));
    }
    let n = model.len();
    let mut in_target = vec![false; n];
    for &x in target {
        if x >= n {
            return Err(Error::arg(format!("target state {x} outside the space of {n}")));
        }
        in_target[x] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&x| !in_target[x]).collect();
    let times = if rest.len() <= DENSE_LIMIT {
        eliminate_hitting(model, &in_target, &rest)?
    } else {
        gauss_seidel_hitting(model, &in_target, &rest, iteration_cap)?
    };
    let residual = hitting_residual(model, &in_target, &times);
    if !(residual <= HITTING_RESIDUAL_TARGET) {
        return Err(Error::Numeric(format!(
            "hitting-time residual {residual:e} above {HITTING_RESIDUAL_TARGET:e}"
        )));
    }
    Ok(HittingTimes { times, residual })
}

fn hitting_residual(model: &TransitionModel, in_target: &[bool], h: &[f64]) -> f64 {
    let scale = h.iter().cloned().fold(1.0, f64::max);
    let mut worst: f64 = 0.0;
    for x in 0..model.len() {
        if in_target[x] {
            continue;
        }
        let mut lhs = model.leave_probability(x) * h[x];
        for mv in model.moves(x) {
            lhs -= mv.prob * h[mv.target];
        }
        worst = worst.max((lhs - 1.0).abs());
    }
    worst / scale
}

fn eliminate_hitting(model: &TransitionModel, in_target: &[bool], rest: &[usize]) -> Result<Vec<f64>> {
    let n = model.len();
    let m = rest.len();
    let mut local = vec![usize::MAX; n];
    for (k, &x) in rest.iter().enumerate() {
        local[x] = k;
    }
    // p: flow among non-target states; absorb: flow into the target set
    let mut p = vec![vec![0.0; m]; m];
    let mut absorb = vec![0.0; m];
    for (k, &x) in rest.iter().enumerate() {
        for mv in model.moves(x) {
            if in_target[mv.target] {
                absorb[k] += mv.prob;
            } else {
                p[k][local[mv.target]] += mv.prob;
            }
        }
    }
    let mut b = vec![1.0; m];
    let mut out = vec![0.0; m];
    // eliminate the last state first; row k is frozen once eliminated
    for k in (0..m).rev() {
        let d = absorb[k] + p[k][..k].iter().sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::Numeric(format!(
                "state {} cannot reach the target",
                model.space().profile(rest[k])
            )));
        }
        out[k] = d;
        let into: Vec<usize> = (0..k).filter(|&i| p[i][k] != 0.0).collect();
        let from: Vec<usize> = (0..k).filter(|&j| p[k][j] != 0.0).collect();
        for &i in &into {
            let f = p[i][k] / d;
            for &j in &from {
                if i != j {
                    p[i][j] += f * p[k][j];
                }
            }
            absorb[i] += f * absorb[k];
            b[i] += f * b[k];
        }
    }
    let mut h_local = vec![0.0; m];
    for k in 0..m {
        let s: f64 = (0..k).map(|j| p[k][j] * h_local[j]).sum();
        h_local[k] = (b[k] + s) / out[k];
    }
    let mut h = vec![0.0; n];
    for (k, &x) in rest.iter().enumerate() {
        h[x] = h_local[k];
    }
    Ok(h)
}

fn gauss_seidel_hitting(model: &TransitionModel, in_target: &[bool], rest: &[usize], cap: usize) -> Result<Vec<f64>> {
    let mut h = vec![0.0; model.len()];
    let leave: Vec<f64> = (0..model.len()).map(|x| model.leave_probability(x)).collect();
    for _ in 0..cap {
        let mut change: f64 = 0.0;
        for &x in rest {
            let mut s = 1.0;
            for mv in model.moves(x) {
                if !in_target[mv.target] {
                    s += mv.prob * h[mv.target];
                }
            }
            let v = s / leave[x];
            change = change.max((v - h[x]).abs() / v.max(1.0));
            h[x] = v;
        }
        if change <= HITTING_RESIDUAL_TARGET * 1e-2 {
            return Ok(h);
        }
    }
    Err(Error::Numeric(format!("hitting-time iteration did not converge in {cap} sweeps")))
}

/// Monte-Carlo first-hit statistics from one initial state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub start: usize,
    pub traces: usize,
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    /// traces that did not hit within the step cap (excluded from the mean)
    pub truncated: usize,
}

/// Sample mean and standard error.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Welch two-sample t statistic for `H1: mean(a) < mean(b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// One-sided Welch test from sample means, standard errors and sizes.
pub fn welch_less_from_summary(mean_a: f64, se_a: f64, n_a: usize, mean_b: f64, se_b: f64, n_b: usize) -> WelchTest {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let (va, vb) = (se_a * se_a, se_b * se_b);
    let t = (mean_b - mean_a) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (n_a as f64 - 1.0) + vb * vb / (n_b as f64 - 1.0));
    let p_value = match StudentsT::new(0.0, 1.0, df) {
        Ok(dist) => 1.0 - dist.cdf(t),
        Err(_) => f64::NAN,
    };
    WelchTest { t, df, p_value }
}

pub fn welch_less(a: &[f64], b: &[f64]) -> WelchTest {
    let (ma, sa) = mean_and_se(a);
    let (mb, sb) = mean_and_se(b);
    welch_less_from_summary(ma, sa, a.len(), mb, sb, b.len())
}

/// Runs `traces` independent chains from `start` until they enter `target`.
/// Trace `k` uses the stream seed `seed ^ splitmix64(k)`.
pub fn monte_carlo_hitting(
    model: &TransitionModel,
    start: usize,
    target: &[usize],
    traces: usize,
    max_steps: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if start >= model.len() {
        return Err(Error::arg(format!("start state {start} outside the space")));
    }
    let mut in_target = vec![false; model.len()];
    for &x in target {
        in_target[x] = true;
    }
    let space = model.space();
    let learner = Learner::new(model.game(), model.kernel(), model.temperature())?;
    let a0 = space.profile(start).into_inner();
    let mut samples = Vec::with_capacity(traces);
    let mut truncated = 0;
    for k in 0..traces as u64 {
        let mut rng = rng_for(stream_seed(seed, k));
        match first_hitting_step(&learner, &a0, |a| in_target[space.index(a)], max_steps, &mut rng) {
            Some(t) => samples.push(t as f64),
            None => truncated += 1,
        }
    }
    let (mean, se) = mean_and_se(&samples);
    Ok(MonteCarloEstimate {
        start,
        traces,
        mean,
        std_error: se,
        ci95: (mean - 1.96 * se, mean + 1.96 * se),
        truncated,
    })
}

/// Zero-cost moves of one kernel with shortest (`sigma`) and longest (`xi`)
/// zero-cost path lengths to the Nash set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroCostGraph {
    pub kernel: Kernel,
    pub edges: Vec<(usize, usize)>,
    pub sigma: Vec<usize>,
    pub xi: Vec<usize>,
    pub nash: Vec<usize>,
}

impl ZeroCostGraph {
    pub fn sigma_max(&self) -> usize {
        self.sigma.iter().copied().max().unwrap_or(0)
    }

    pub fn xi_max(&self) -> usize {
        self.xi.iter().copied().max().unwrap_or(0)
    }
}

pub fn nash_set(model: &TransitionModel) -> Result<NashSet> {
    enumerate_nash(model.game(), usize::MAX, DEFAULT_TIE_TOLERANCE)
}

/// Builds the zero-cost graph and its path statistics towards `nash`.
pub fn zero_cost_stats(model: &TransitionModel, nash: &NashSet) -> Result<ZeroCostGraph> {
    let n = model.len();
    let space = model.space();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for x in 0..n {
        for mv in model.moves(x) {
            if model.is_zero_cost(x, mv.target) {
                succ[x].push(mv.target);
                pred[mv.target].push(x);
                edges.push((x, mv.target));
            }
        }
    }
    let is_ne = |x: usize| nash.contains_index(x);
    for x in 0..n {
        if is_ne(x) && !succ[x].is_empty() {
            return Err(Error::Invariant(format!(
                "equilibrium {} has an outgoing zero-cost move",
                space.profile(x)
            )));
        }
    }

    // sigma: backwards BFS from the equilibria
    let mut sigma = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &x in nash.indices() {
        sigma[x] = 0;
        queue.push_back(x);
    }
    while let Some(y) = queue.pop_front() {
        for &x in &pred[y] {
            if sigma[x] == usize::MAX {
                sigma[x] = sigma[y] + 1;
                queue.push_back(x);
            }
        }
    }

    // xi: zero-cost moves strictly raise phi, so decreasing phi is a reverse topological order
    let phi = model.potential();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    let mut xi = vec![0usize; n];
    for &x in &order {
        if is_ne(x) {
            continue;
        }
        for &y in &succ[x] {
            if phi[y] <= phi[x] {
                return Err(Error::Invariant(format!(
                    "zero-cost move {} -> {} does not raise the potential",
                    space.profile(x),
                    space.profile(y)
                )));
            }
        }
        xi[x] = succ[x].iter().map(|&y| xi[y] + 1).max().unwrap_or(0);
    }
    for x in 0..n {
        if sigma[x] == usize::MAX {
            return Err(Error::Invariant(format!(
                "{} has no zero-cost path to an equilibrium",
                space.profile(x)
            )));
        }
    }
    Ok(ZeroCostGraph {
        kernel: model.kernel(),
        edges,
        sigma,
        xi,
        nash: nash.indices().to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingBound {
    pub kernel: Kernel,
    pub eta: usize,
    pub gamma: f64,
    /// `eta / gamma^eta`, the closed form of `int_0^inf (1 - gamma^eta)^{floor(t/eta)} dt`
    pub bound: f64,
    /// set when `eta >= |A|`, outside the range the theory states
    pub eta_out_of_range: bool,
}

impl HittingBound {
    /// Whether an expected hitting time respects the bound. The bound is
    /// attained with equality on some chains, so a relative round-off slack
    /// of `1e-12` is allowed.
    pub fn admits(&self, hitting_time: f64) -> bool {
        hitting_time <= self.bound * (1.0 + 1e-12)
    }
}

pub fn hitting_bound(model: &TransitionModel, zero_cost: &ZeroCostGraph) -> HittingBound {
    let eta = zero_cost.sigma_max();
    let gamma = model.gamma();
    let bound = if eta == 0 {
        0.0
    } else {
        eta as f64 / gamma.powi(eta as i32)
    };
    HittingBound {
        kernel: model.kernel(),
        eta,
        gamma,
        bound,
        eta_out_of_range: eta >= model.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MplrVerdict {
    pub temperature: f64,
    /// `None` when every profile is an equilibrium.
    pub mplr: Option<f64>,
    pub argmax: Option<Vec<usize>>,
    /// `|A|_min`
    pub lhs: f64,
    /// `(1/n) (1/Gamma^LLL)^MPLR`
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
}

/// `MPLR = max_{a not in M} xi^LLL(a) / sigma^ML(a)` and the condition
/// `|A|_min >= (1/n)(1/Gamma^LLL)^MPLR`.
pub fn mplr_from_stats(lll: &TransitionModel, zc_lll: &ZeroCostGraph, zc_ml: &ZeroCostGraph) -> MplrVerdict {
    let space = lll.space();
    let mut best: Option<(f64, usize)> = None;
    for x in 0..space.len() {
        if zc_ml.nash.binary_search(&x).is_ok() {
            continue;
        }
        let r = zc_lll.xi[x] as f64 / zc_ml.sigma[x] as f64;
        if best.is_none_or(|(b, _)| r > b) {
            best = Some((r, x));
        }
    }
    let lhs = *space.sizes().iter().min().unwrap() as f64;
    let n = space.players() as f64;
    match best {
        None => MplrVerdict {
            temperature: lll.temperature(),
            mplr: None,
            argmax: None,
            lhs,
            rhs: None,
            holds: None,
        },
        Some((r, x)) => {
            let rhs = (1.0 / lll.gamma()).powf(r) / n;
            MplrVerdict {
                temperature: lll.temperature(),
                mplr: Some(r),
                argmax: Some(space.profile(x).into_inner()),
                lhs,
                rhs: Some(rhs),
                holds: Some(lhs >= rhs),
            }
        }
    }
}

pub fn mplr_condition<G: Game + ?Sized>(game: &G, t: f64) -> Result<MplrVerdict> {
    let (lll, ml) = build_pair(game, t)?;
    let ne = nash_set(&lll)?;
    let zl = zero_cost_stats(&lll, &ne)?;
    let zm = zero_cost_stats(&ml, &ne)?;
    Ok(mplr_from_stats(&lll, &zl, &zm))
}

/// Everything hitting-related for one kernel at one temperature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelHitting {
    pub kernel: Kernel,
    pub gamma: f64,
    pub exact: HittingTimes,
    pub max_exact: f64,
    pub bound: HittingBound,
    pub bound_holds: bool,
    pub sigma: Vec<usize>,
    pub xi: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub monte_carlo: Vec<MonteCarloEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingReport {
    pub temperature: f64,
    pub nash: Vec<Vec<usize>>,
    pub kernels: Vec<KernelHitting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mplr: Option<MplrVerdict>,
}

/// Monte-Carlo settings for [`hitting_report`].
#[derive(Clone, Copy, Debug)]
pub struct MonteCarloPlan {
    pub traces: usize,
    pub max_steps: u64,
    pub seed: u64,
}

pub fn hitting_report(models: &[&TransitionModel], mc: Option<MonteCarloPlan>) -> Result<HittingReport> {
    let first = models.first().ok_or_else(|| Error::arg("no models given"))?;
    let ne = nash_set(first)?;
    let mut kernels = Vec::new();
    let mut stats = Vec::new();
    for m in models {
        let zc = zero_cost_stats(m, &ne)?;
        let exact = exact_hitting_times(m, ne.indices())?;
        let bound = hitting_bound(m, &zc);
        let max_exact = exact.max();
        let mut monte_carlo = Vec::new();
        if let Some(plan) = mc {
            for x in 0..m.len() {
                monte_carlo.push(monte_carlo_hitting(m, x, ne.indices(), plan.traces, plan.max_steps, plan.seed)?);
            }
        }
        kernels.push(KernelHitting {
            kernel: m.kernel(),
            gamma: m.gamma(),
            bound_holds: bound.admits(max_exact),
            max_exact,
            bound,
            sigma: zc.sigma.clone(),
            xi: zc.xi.clone(),
            exact,
            monte_carlo,
        });
        stats.push((*m, zc));
    }
    let lll = stats.iter().find(|(m, _)| m.kernel() == Kernel::LogLinear);
    let ml = stats.iter().find(|(m, _)| m.kernel() == Kernel::Metropolis);
    let mplr = match (lll, ml) {
        (Some((l, zl)), Some((_, zm))) => Some(mplr_from_stats(l, zl, zm)),
        _ => None,
    };
    Ok(HittingReport {
        temperature: first.temperature(),
        nash: ne.members().iter().map(|p| p.actions().to_vec()).collect(),
        kernels,
        mplr,
    })
}

impl HittingReport {
    /// Per-state table: `state_index,profile,` then `hitting_<kernel>,sigma_<kernel>,xi_<kernel>` per kernel.
    pub fn to_csv(&self, space: &ProfileSpace) -> String {
        let mut out = String::from("state_index,profile");
        for k in &self.kernels {
            let t = k.kernel.tag();
            out.push_str(&format!(",hitting_{t},sigma_{t},xi_{t}"));
        }
        out.push('\n');
        for x in 0..space.len() {
            let p = space.profile(x);
            let joined: Vec<String> = p.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!("{x},{}", joined.join(" ")));
            for k in &self.kernels {
                out.push_str(&format!(
                    ",{},{},{}",
                    crate::simulate::format_real(k.exact.times[x]),
                    k.sigma[x],
                    k.xi[x]
                ));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::build_transition_model;
    use crate::fixtures::{g2, g3, random_game_set};
    use crate::game::TableGame;

    #[test]
    fn gibbs_closed_form_g2() {
        let pi = gibbs(&g2(), 1.0).unwrap();
        let e = std::f64::consts::E;
        let expect = e.powi(4) / (1.0 + e + e * e + e.powi(4));
        assert!((pi.probabilities[3] - expect).abs() < 1e-15);
        assert!((pi.probabilities[3] - 0.8309).abs() < 1e-4);
        let cold = gibbs(&g2(), 1e-3).unwrap();
        assert!(cold.probabilities[3] >= 1.0 - 1e-9);
        let flat = TableGame::identical_interest(vec![3], vec![5.0; 3]).unwrap();
        assert!(gibbs(&flat, 0.3).unwrap().probabilities.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn stationary_matches_gibbs() {
        let mut games = vec![g2(), g3()];
        games.extend(random_game_set(5, 77));
        for g in &games {
            for k in Kernel::BOTH {
                let m = build_transition_model(g, k, 0.5, DEFAULT_PROFILE_CAP).unwrap();
                let pi = stationary_solve(&m).unwrap();
                assert!(pi.total_variation(&gibbs(g, 0.5).unwrap()) < 1e-12);
            }
        }
        let single = TableGame::identical_interest(vec![1], vec![0.0]).unwrap();
        let m = build_transition_model(&single, Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(stationary_solve(&m).unwrap().probabilities, vec![1.0]);
    }

    #[test]
    fn power_iteration_agrees_with_elimination() {
        let g = g2();
        let m = build_transition_model(&g, Kernel::LogLinear, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        let a = gth_stationary(&m);
        let b = power_stationary(&m, 100_000).unwrap();
        assert!(total_variation(&a, &b) < 1e-10);
    }

    #[test]
    fn g3_hitting_hand_solution() {
        let m = build_transition_model(&g3(), Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        let h = exact_hitting_times(&m, &[2]).unwrap();
        assert_eq!(h.times[2], 0.0);
        // h1 = 1 + (1/3)(e^-1 h0) + (1 - 1/3 - e^-1/3) h1 with h0 = 3/2 + h1/2
        let q = (-1.0f64).exp() / 3.0;
        let h1 = (1.0 + 1.5 * q) / (1.0 / 3.0 + q - 0.5 * q);
        assert!((h.times[1] - h1).abs() < 1e-12);
        assert!((h.times[0] - (1.5 + h1 / 2.0)).abs() < 1e-12);
        // the detour through (0) returns at the same rate, so h1 is exactly 3
        assert!((h.times[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_hitting_agrees_with_elimination() {
        for g in random_game_set(5, 5) {
            let m = build_transition_model(&g, Kernel::Metropolis, 0.5, DEFAULT_PROFILE_CAP).unwrap();
            let ne = nash_set(&m).unwrap();
            let mut in_target = vec![false; m.len()];
            for &x in ne.indices() {
                in_target[x] = true;
            }
            let rest: Vec<usize> = (0..m.len()).filter(|&x| !in_target[x]).collect();
            let a = eliminate_hitting(&m, &in_target, &rest).unwrap();
            let b = gauss_seidel_hitting(&m, &in_target, &rest, 1_000_000).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-8 * x.max(1.0));
            }
        }
    }

    #[test]
    fn g2_zero_cost_and_bound() {
        for k in Kernel::BOTH {
            let m = build_transition_model(&g2(), k, 1e-3, DEFAULT_PROFILE_CAP).unwrap();
            let ne = nash_set(&m).unwrap();
            assert_eq!(ne.indices(), &[3]);
            let zc = zero_cost_stats(&m, &ne).unwrap();
            assert_eq!((zc.sigma[0], zc.xi[0]), (2, 2));
            assert_eq!((zc.sigma[3], zc.xi[3]), (0, 0));
            let b = hitting_bound(&m, &zc);
            let expect = match k {
                Kernel::Metropolis => 32.0,
                Kernel::LogLinear => 8.0,
            };
            assert!((b.bound - expect).abs() < 1e-6, "{k}: {}", b.bound);
        }
        let ml = build_transition_model(&g2(), Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        let zc = zero_cost_stats(&ml, &nash_set(&ml).unwrap()).unwrap();
        assert_eq!(hitting_bound(&ml, &zc).bound, 32.0);
    }

    #[test]
    fn g2_mplr() {
        let v = mplr_condition(&g2(), 1e-3).unwrap();
        assert_eq!(v.mplr, Some(1.0));
        assert_eq!(v.holds, Some(true));
        let single = mplr_condition(&g3(), 1.0).unwrap();
        assert!(single.mplr.unwrap() <= 1.0);
    }

    #[test]
    fn welch_direction() {
        let a: Vec<f64> = (0..50).map(|k| (k % 7) as f64).collect();
        let b: Vec<f64> = (0..50).map(|k| 2.0 + (k % 5) as f64).collect();
        let w = welch_less(&a, &b);
        assert!(w.t > 0.0 && w.p_value < 0.05);
        let r = welch_less(&b, &a);
        assert!(r.p_value > 0.95);
        // equal variances and sizes: df = 2(n-1)
        let w = welch_less_from_summary(0.0, 1.0, 11, 1.0, 1.0, 11);
        assert!((w.df - 20.0).abs() < 1e-12);
        assert!((w.p_value - 0.243829).abs() < 1e-5);
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let m = build_transition_model(&g3(), Kernel::Metropolis, 1.0, DEFAULT_PROFILE_CAP).unwrap();
        let exact = exact_hitting_times(&m, &[2]).unwrap();
        let est = monte_carlo_hitting(&m, 0, &[2], 10_000, 100_000, 3).unwrap();
        assert_eq!(est.truncated, 0);
        assert!((est.mean - exact.times[0]).abs() <= 3.0 * est.std_error);
    }
}
