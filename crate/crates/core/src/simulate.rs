//! Seeded sample paths of the two learning dynamics.
//!
//! RNG protocol per step, on a `ChaCha8Rng` seeded with `seed_from_u64`:
//! 1. player `i = random_range(0..n)`;
//! 2. LLL: one uniform `u in [0,1)` selects the action by inverse CDF over
//!    `A_i` in index order; ML: proposal `random_range(0..|A_i|)`;
//! 3. ML only: one uniform accept coin, drawn even when acceptance is certain.
//!
//! Independent traces use the stream seed `seed ^ splitmix64(k)` for trace `k`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::Kernel;
use crate::error::{Error, Result};
use crate::game::{action_utilities, is_nash_unchecked, Game, ProfileSpace, DEFAULT_TIE_TOLERANCE};

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the `k`-th independent trace derived from `seed`.
pub fn stream_seed(seed: u64, k: u64) -> u64 {
    seed ^ splitmix64(k)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub player: usize,
    pub proposed: usize,
    pub accepted: bool,
}

/// One revision step of either dynamic, borrowing the game.
#[derive(Clone, Copy, Debug)]
pub struct Learner<'g, G: Game + ?Sized> {
    game: &'g G,
    kernel: Kernel,
    temperature: f64,
}

impl<'g, G: Game + ?Sized> Learner<'g, G> {
    pub fn new(game: &'g G, kernel: Kernel, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::arg(format!("temperature must be positive and finite, got {temperature}")));
        }
        Ok(Learner {
            game,
            kernel,
            temperature,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Applies one revision to `a` in place.
    pub fn step<R: Rng + ?Sized>(&self, a: &mut [usize], rng: &mut R) -> StepRecord {
        let sizes = self.game.action_sizes();
        let i = rng.random_range(0..sizes.len());
        let m = sizes[i];
        let t = self.temperature;
        match self.kernel {
            Kernel::LogLinear => {
                let utils = action_utilities(self.game, i, a);
                let best = utils.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = utils.iter().map(|u| (-(best - u) / t).exp()).collect();
                let total: f64 = weights.iter().sum();
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut choice = m - 1;
                for (alpha, w) in weights.iter().enumerate() {
                    acc += w;
                    if target < acc {
                        choice = alpha;
                        break;
                    }
                }
                a[i] = choice;
                StepRecord {
                    player: i,
                    proposed: choice,
                    accepted: true,
                }
            }
            Kernel::Metropolis => {
                let proposed = rng.random_range(0..m);
                let coin = rng.random::<f64>();
                let current = a[i];
                let accepted = if proposed == current {
                    true
                } else {
                    let here = self.game.payoff(i, a);
                    a[i] = proposed;
                    let there = self.game.payoff(i, a);
                    a[i] = current;
                    let loss = (here - there).max(0.0);
                    coin < (-loss / t).exp()
                };
                if accepted {
                    a[i] = proposed;
                }
                StepRecord {
                    player: i,
                    proposed,
                    accepted,
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub seed: u64,
    pub kernel: Kernel,
    pub temperature: f64,
    pub initial: Vec<usize>,
    /// Profile index at each time, starting with the initial profile.
    pub states: Vec<usize>,
    /// Metadata of the step leading into `states[t + 1]`.
    pub steps: Vec<StepRecord>,
    /// Potential at each entry of `states`, when the game has one.
    pub potentials: Option<Vec<f64>>,
}

impl Trace {
    pub fn final_state(&self) -> usize {
        *self.states.last().expect("trace holds at least the initial state")
    }

    /// CSV with one row per time: `step,state_index,player,proposed_action,accepted,potential`.
    /// Row 0 is the initial state and leaves the step columns empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,state_index,player,proposed_action,accepted,potential")?;
        for (t, state) in self.states.iter().enumerate() {
            let phi = match &self.potentials {
                Some(p) => format_real(p[t]),
                None => String::new(),
            };
            if t == 0 {
                writeln!(out, "0,{state},,,,{phi}")?;
            } else {
                let s = &self.steps[t - 1];
                writeln!(out, "{t},{state},{},{},{},{phi}", s.player, s.proposed, s.accepted)?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Shortest round-trip decimal form, so CSV output is stable across runs.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Runs `steps` revisions from `a0` with the RNG seeded by `seed`.
pub fn simulate<G: Game + ?Sized>(
    game: &G,
    kernel: Kernel,
    temperature: f64,
    a0: &[usize],
    steps: usize,
    seed: u64,
) -> Result<Trace> {
    let space = ProfileSpace::with_cap(game.action_sizes(), usize::MAX)?;
    space.validate(a0)?;
    let learner = Learner::new(game, kernel, temperature)?;
    let mut rng = rng_for(seed);
    let mut a = a0.to_vec();
    let mut states = Vec::with_capacity(steps + 1);
    let mut records = Vec::with_capacity(steps);
    let mut potentials = game.has_potential().then(|| Vec::with_capacity(steps + 1));
    states.push(space.index(&a));
    if let Some(p) = potentials.as_mut() {
        p.push(game.potential_value(&a).unwrap_or(f64::NAN));
    }
    for _ in 0..steps {
        records.push(learner.step(&mut a, &mut rng));
        states.push(space.index(&a));
        if let Some(p) = potentials.as_mut() {
            p.push(game.potential_value(&a).unwrap_or(f64::NAN));
        }
    }
    Ok(Trace {
        seed,
        kernel,
        temperature,
        initial: a0.to_vec(),
        states,
        steps: records,
        potentials,
    })
}

/// Number of revisions until `hit` first holds, or `None` if it does not
/// within `max_steps`. Returns `Some(0)` when `a0` already satisfies it.
pub fn first_hitting_step<G, R, F>(
    learner: &Learner<'_, G>,
    a0: &[usize],
    mut hit: F,
    max_steps: u64,
    rng: &mut R,
) -> Option<u64>
where
    G: Game + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> bool,
{
    let mut a = a0.to_vec();
    if hit(&a) {
        return Some(0);
    }
    for t in 1..=max_steps {
        learner.step(&mut a, rng);
        if hit(&a) {
            return Some(t);
        }
    }
    None
}

/// Revisions until the dynamic first reaches any Nash equilibrium.
pub fn first_nash_step<G: Game + ?Sized>(
    game: &G,
    kernel: Kernel,
    temperature: f64,
    a0: &[usize],
    max_steps: u64,
    seed: u64,
) -> Result<Option<u64>> {
    ProfileSpace::with_cap(game.action_sizes(), usize::MAX)?.validate(a0)?;
    let learner = Learner::new(game, kernel, temperature)?;
    let mut rng = rng_for(seed);
    Ok(first_hitting_step(
        &learner,
        a0,
        |a| is_nash_unchecked(game, a, DEFAULT_TIE_TOLERANCE),
        max_steps,
        &mut rng,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g2, g3};
    use crate::game::hamming_distance;

    #[test]
    fn zero_steps_is_initial_state() {
        let t = simulate(&g2(), Kernel::Metropolis, 1.0, &[1, 0], 0, 5).unwrap();
        assert_eq!(t.states, vec![1]);
        assert!(t.steps.is_empty());
    }

    #[test]
    fn metropolis_concentrates_on_g3_peak() {
        let t = simulate(&g3(), Kernel::Metropolis, 0.05, &[0], 10_000, 11).unwrap();
        assert_eq!(t.final_state(), 2);
        let tail = &t.states[5_000..];
        let freq = tail.iter().filter(|&&s| s == 2).count() as f64 / tail.len() as f64;
        assert!(freq > 0.95, "{freq}");
    }

    #[test]
    fn same_seed_same_trace_and_unit_moves() {
        for k in Kernel::BOTH {
            let a = simulate(&g2(), k, 0.7, &[0, 0], 500, 42).unwrap();
            let b = simulate(&g2(), k, 0.7, &[0, 0], 500, 42).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.to_csv_string(), b.to_csv_string());
            let sp = g2().space();
            for w in a.states.windows(2) {
                assert!(hamming_distance(&sp.profile(w[0]), &sp.profile(w[1])) <= 1);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let t = simulate(&g3(), Kernel::Metropolis, 1.0, &[0], 2, 1).unwrap();
        let csv = t.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,state_index,player,proposed_action,accepted,potential");
        assert_eq!(lines[1], "0,0,,,,0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn stream_seeds_differ() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|k| stream_seed(9, k)).collect();
        assert_eq!(s.len(), 1000);
    }

    #[test]
    fn first_nash_from_equilibrium_is_zero() {
        assert_eq!(first_nash_step(&g2(), Kernel::LogLinear, 0.1, &[1, 1], 10, 0).unwrap(), Some(0));
        let hit = first_nash_step(&g2(), Kernel::Metropolis, 0.1, &[0, 0], 10_000, 0).unwrap();
        assert!(hit.unwrap() >= 2);
    }
}
