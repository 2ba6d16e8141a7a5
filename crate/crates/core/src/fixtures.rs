//! Small hand-checkable games and a seeded generator of random potential games.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{ProfileSpace, TableGame};

/// Two players, two actions each, identical interest with
/// `phi(0,0)=0, phi(1,0)=1, phi(0,1)=2, phi(1,1)=4`.
pub fn g2() -> TableGame {
    TableGame::identical_interest(vec![2, 2], vec![0.0, 1.0, 2.0, 4.0]).expect("valid fixture")
}

/// One player with utilities `U(0)=0, U(1)=1, U(2)=3`.
pub fn g3() -> TableGame {
    TableGame::identical_interest(vec![3], vec![0.0, 1.0, 3.0]).expect("valid fixture")
}

/// Random exact potential game with integer payoffs.
///
/// Player count is drawn from `2..=max_players` and each action-set size
/// from `2..=max_actions`. Utilities take the general potential-game form
/// `U_i(a) = phi(a) + h_i(a_{-i})`. The potential is resampled until no two
/// Hamming-1 neighbors share a value, so the result is always admissible
/// for transition-model construction.
pub fn random_potential_game(seed: u64, max_players: usize, max_actions: usize) -> TableGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_players.max(2));
    let sizes: Vec<usize> = (0..n)
        .map(|_| rng.random_range(2..=max_actions.max(2)))
        .collect();
    let space = ProfileSpace::new(&sizes).expect("nonempty sizes");
    let range = 3 * space.len() as i64;

    let phi = loop {
        let phi: Vec<f64> = (0..space.len())
            .map(|_| rng.random_range(0..=range) as f64)
            .collect();
        if distinct_on_edges(&space, &phi) {
            break phi;
        }
    };

    // h_i depends only on a_{-i}: key it by the index with a_i zeroed.
    let offsets: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..space.len())
                .map(|_| rng.random_range(-5i64..=5) as f64)
                .collect()
        })
        .collect();
    let utilities = (0..space.len())
        .map(|k| {
            (0..n)
                .map(|i| {
                    let base = space.switch(k, i, 0);
                    phi[k] + offsets[i][base]
                })
                .collect()
        })
        .collect();
    TableGame::new(sizes, utilities, Some(phi)).expect("consistent tables")
}

fn distinct_on_edges(space: &ProfileSpace, phi: &[f64]) -> bool {
    for k in 0..space.len() {
        for i in 0..space.players() {
            for alpha in 0..space.sizes()[i] {
                let j = space.switch(k, i, alpha);
                if j != k && phi[j] == phi[k] {
                    return false;
                }
            }
        }
    }
    true
}

/// The seeded random games used throughout the test suites.
pub fn random_game_set(count: usize, base_seed: u64) -> Vec<TableGame> {
    (0..count as u64)
        .map(|k| random_potential_game(base_seed.wrapping_add(k), 3, 3))
        .collect()
}
