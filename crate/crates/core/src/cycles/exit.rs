use rand::Rng;
use serde::Serialize;

use super::decompose_model;
use crate::analysis::mean_and_se;
use crate::dynamics::{Kernel, TransitionModel};
use crate::error::{Error, Result};
use crate::game::{Game, TableGame, DEFAULT_PROFILE_CAP};
use crate::simulate::{rng_for, stream_seed};

#[derive(Clone, Debug)]
pub struct ExitValidationPlan {
    /// strictly decreasing
    pub temperatures: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// per-trial cap on the number of state changes
    pub max_jumps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitPoint {
    pub temperature: f64,
    pub mean_exit: f64,
    pub std_error: f64,
    /// fraction of completed trials that visited every member before leaving
    pub visited_all_fraction: f64,
    pub completed: usize,
    pub truncated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitValidation {
    pub kernel: Kernel,
    pub members: Vec<usize>,
    pub start: usize,
    pub exit_height: f64,
    pub points: Vec<ExitPoint>,
    /// least-squares fit of `ln(mean exit)` against `1/T`
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub truncated: bool,
}

/// Ordinary least squares `y = a + b x`, returning `(b, a, R^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// One exit from `members` simulated on the jump chain: holding times are
/// geometric in the leave probability, so long stays cost one draw.
/// Returns `(steps, visited_all)` or `None` when `max_jumps` is exhausted.
fn sample_exit<R: Rng + ?Sized>(
    model: &TransitionModel,
    inside: &[bool],
    start: usize,
    size: usize,
    max_jumps: u64,
    rng: &mut R,
) -> Option<(f64, bool)> {
    let mut x = start;
    let mut seen = vec![false; model.len()];
    seen[x] = true;
    let mut distinct = 1;
    let mut steps = 0.0;
    for _ in 0..max_jumps {
        let leave = model.leave_probability(x);
        let u = 1.0 - rng.random::<f64>();
        let hold = if leave >= 1.0 {
            1.0
        } else {
            1.0 + (u.ln() / (-leave).ln_1p()).floor()
        };
        steps += hold;
        let mut target = rng.random::<f64>() * leave;
        let moves = model.moves(x);
        let mut next = moves.last().expect("irreducible chain").target;
        for mv in moves {
            if target < mv.prob {
                next = mv.target;
                break;
            }
            target -= mv.prob;
        }
        if !inside[next] {
            return Some((steps, distinct == size));
        }
        if !seen[next] {
            seen[next] = true;
            distinct += 1;
        }
        x = next;
    }
    None
}

/// Mean exit time from a cycle at each temperature, started from its member
/// of lowest potential, and the slope of `ln(mean)` against `1/T`.
pub fn empirical_exit_validation<G: Game + ?Sized>(
    game: &G,
    kernel: Kernel,
    members: &[usize],
    plan: &ExitValidationPlan,
) -> Result<ExitValidation> {
    let temps = &plan.temperatures;
    if temps.len() < 2 {
        return Err(Error::arg("need at least two temperatures"));
    }
    if temps.windows(2).any(|w| w[1] >= w[0]) || temps.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::arg("temperatures must be positive and strictly decreasing"));
    }
    if plan.trials == 0 {
        return Err(Error::arg("trials must be positive"));
    }
    let table = TableGame::tabulate(game, DEFAULT_PROFILE_CAP)?;
    let first = TransitionModel::from_table(table.clone(), kernel, temps[0])?;
    let hierarchy = decompose_model(&first)?;
    let cycle = hierarchy
        .find(members)
        .ok_or_else(|| Error::arg(format!("{members:?} is not a cycle of the {kernel} hierarchy")))?;
    if cycle.members.len() == hierarchy.states() {
        return Err(Error::arg("the whole space has no exit"));
    }
    let phi = first.potential();
    let start = *cycle
        .members
        .iter()
        .min_by(|&&a, &&b| phi[a].total_cmp(&phi[b]).then(a.cmp(&b)))
        .expect("nonempty");
    let mut inside = vec![false; first.len()];
    for &x in &cycle.members {
        inside[x] = true;
    }

    let mut points = Vec::new();
    for (ti, &t) in temps.iter().enumerate() {
        let model = if ti == 0 {
            first.clone()
        } else {
            TransitionModel::from_table(table.clone(), kernel, t)?
        };
        let mut times = Vec::with_capacity(plan.trials);
        let mut all = 0usize;
        let mut truncated = 0usize;
        for k in 0..plan.trials {
            let mut rng = rng_for(stream_seed(plan.seed, (ti * plan.trials + k) as u64));
            match sample_exit(&model, &inside, start, cycle.members.len(), plan.max_jumps, &mut rng) {
                Some((s, v)) => {
                    times.push(s);
                    all += v as usize;
                }
                None => truncated += 1,
            }
        }
        let (mean, se) = mean_and_se(&times);
        points.push(ExitPoint {
            temperature: t,
            mean_exit: mean,
            std_error: se,
            visited_all_fraction: if times.is_empty() { f64::NAN } else { all as f64 / times.len() as f64 },
            completed: times.len(),
            truncated,
        });
    }
    let fitted: Vec<&ExitPoint> = points.iter().filter(|p| p.completed > 0).collect();
    let xs: Vec<f64> = fitted.iter().map(|p| 1.0 / p.temperature).collect();
    let ys: Vec<f64> = fitted.iter().map(|p| p.mean_exit.ln()).collect();
    let (slope, intercept, r_squared) = if fitted.len() >= 2 {
        linear_fit(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(ExitValidation {
        kernel,
        members: cycle.members.clone(),
        start,
        exit_height: cycle.exit_height,
        truncated: points.iter().any(|p| p.truncated > 0),
        points,
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::g3;

    #[test]
    fn fit_recovers_a_line() {
        let (b, a, r2) = linear_fit(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]);
        assert!((b - 2.0).abs() < 1e-12 && (a + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_exit_matches_geometric_mean() {
        // state (0) leaves with probability 2/3 at every temperature
        let plan = ExitValidationPlan {
            temperatures: vec![1.0, 0.5],
            trials: 4000,
            seed: 1,
            max_jumps: 1000,
        };
        let v = empirical_exit_validation(&g3(), Kernel::Metropolis, &[0], &plan).unwrap();
        assert_eq!(v.exit_height, 0.0);
        for p in &v.points {
            assert!((p.mean_exit - 1.5).abs() < 4.0 * p.std_error);
            assert_eq!(p.visited_all_fraction, 1.0);
        }
        assert!(v.slope.abs() < 0.15);
    }

    #[test]
    fn rejects_non_cycles_and_bad_grids() {
        let plan = ExitValidationPlan {
            temperatures: vec![1.0, 0.5],
            trials: 10,
            seed: 1,
            max_jumps: 10,
        };
        assert!(empirical_exit_validation(&g3(), Kernel::Metropolis, &[0, 1], &plan).is_err());
        let bad = ExitValidationPlan {
            temperatures: vec![0.5, 1.0],
            ..plan
        };
        assert!(empirical_exit_validation(&g3(), Kernel::Metropolis, &[1, 2], &bad).is_err());
    }
}
