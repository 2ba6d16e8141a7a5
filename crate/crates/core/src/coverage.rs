//! Sensor coverage as a potential game.
//!
//! Sensors sit at fixed points in `[0,d]^2` and pick a sensing radius from a
//! finite list whose first entry is `0` (off). The global payoff is the
//! number of covered lattice points in `{0..d}^2` minus the summed sensor
//! costs, and each sensor's utility is its marginal contribution relative to
//! being off, which makes the global payoff an exact potential.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    enumerate_nash, Game, ProfileSpace, DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE,
};

/// Slack subtracted before `ceil` so that products like `0.2 * 5` that land
/// a hair above an integer are not rounded up.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub x: f64,
    pub y: f64,
    /// Available radii; the first one must be `0` (off).
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Grid extent: lattice points are `{0..d} x {0..d}`.
    pub d: u32,
    /// Cost coefficient in `(0, 1]`.
    pub alpha: f64,
    /// Communication range. Recorded only; the dynamics never read it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_c: Option<f64>,
    #[serde(rename = "sensor")]
    pub sensors: Vec<Sensor>,
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::arg("coverage game needs at least one sensor"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::arg(format!("alpha = {} is outside (0, 1]", self.alpha)));
        }
        let d = self.d as f64;
        for (i, s) in self.sensors.iter().enumerate() {
            if !(0.0..=d).contains(&s.x) || !(0.0..=d).contains(&s.y) {
                return Err(Error::arg(format!(
                    "sensor {i} at ({}, {}) lies outside [0, {d}]^2",
                    s.x, s.y
                )));
            }
            if s.radii.first() != Some(&0.0) {
                return Err(Error::arg(format!("sensor {i}: first radius must be 0 (off)")));
            }
            if s.radii[1..].iter().any(|&r| !(r > 0.0)) {
                return Err(Error::arg(format!("sensor {i}: on-radii must be positive")));
            }
            if s.radii.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::arg(format!("sensor {i}: radii must be strictly increasing")));
            }
        }
        Ok(())
    }

    pub fn grid_points(&self) -> usize {
        let side = self.d as usize + 1;
        side * side
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SensorConfig =
            toml::from_str(text).map_err(|e| Error::config("fixture", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("sensor config serializes")
    }
}

/// Number of integer offsets `(dx, dy)` with `dx^2 + dy^2 <= r^2`, ignoring
/// the grid boundary.
pub fn r_max_points(r: f64) -> u64 {
    if !(r >= 0.0) {
        return 0;
    }
    let reach = r.floor() as i64;
    let r2 = r * r;
    let mut count = 0;
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            if ((dx * dx + dy * dy) as f64) <= r2 {
                count += 1;
            }
        }
    }
    count
}

fn in_footprint(sx: f64, sy: f64, r: f64, px: f64, py: f64) -> bool {
    let (dx, dy) = (px - sx, py - sy);
    dx * dx + dy * dy <= r * r
}

/// True iff some powered-on sensor's closed disk contains the grid point.
pub fn covered(config: &SensorConfig, point: (u32, u32), a: &[usize]) -> bool {
    let (px, py) = (point.0 as f64, point.1 as f64);
    config.sensors.iter().zip(a).any(|(s, &act)| {
        act != 0 && in_footprint(s.x, s.y, s.radii[act], px, py)
    })
}

pub fn total_coverage(config: &SensorConfig, a: &[usize]) -> u64 {
    let side = config.d + 1;
    let mut n = 0;
    for x in 0..side {
        for y in 0..side {
            if covered(config, (x, y), a) {
                n += 1;
            }
        }
    }
    n
}

/// `C_i(a_i) = ceil(alpha * R_max(a_i))`, zero when off.
pub fn sensor_cost(config: &SensorConfig, i: usize, action: usize) -> Result<u64> {
    let sensor = config
        .sensors
        .get(i)
        .ok_or_else(|| Error::arg(format!("sensor {i} does not exist")))?;
    let r = *sensor
        .radii
        .get(action)
        .ok_or_else(|| Error::arg(format!("sensor {i} has no action {action}")))?;
    Ok(cost_of_radius(config.alpha, r))
}

fn cost_of_radius(alpha: f64, r: f64) -> u64 {
    if r == 0.0 {
        0
    } else {
        (alpha * r_max_points(r) as f64 - CEIL_SLACK).ceil().max(0.0) as u64
    }
}

pub fn global_payoff(config: &SensorConfig, a: &[usize]) -> f64 {
    let cost: u64 = a
        .iter()
        .enumerate()
        .map(|(i, &act)| cost_of_radius(config.alpha, config.sensors[i].radii[act]))
        .sum();
    total_coverage(config, a) as f64 - cost as f64
}

/// Coverage gained by sensor `i` over being off, minus its cost.
pub fn marginal_utility(config: &SensorConfig, i: usize, a: &[usize]) -> f64 {
    let mut off = a.to_vec();
    off[i] = 0;
    let gained = total_coverage(config, a) as f64 - total_coverage(config, &off) as f64;
    gained - cost_of_radius(config.alpha, config.sensors[i].radii[a[i]]) as f64
}

/// A coverage game with per-(sensor, radius) footprints precomputed as bitsets
/// over the lattice.
#[derive(Clone, Debug)]
pub struct CoverageGame {
    config: SensorConfig,
    sizes: Vec<usize>,
    words: usize,
    /// `footprints[i][action]`, one bit per grid point.
    footprints: Vec<Vec<Vec<u64>>>,
    costs: Vec<Vec<f64>>,
}

impl CoverageGame {
    pub fn new(config: SensorConfig) -> Result<Self> {
        config.validate()?;
        let side = config.d + 1;
        let points = config.grid_points();
        let words = points.div_ceil(64);
        let footprints = config
            .sensors
            .iter()
            .map(|s| {
                s.radii
                    .iter()
                    .map(|&r| {
                        let mut bits = vec![0u64; words];
                        if r > 0.0 {
                            for x in 0..side {
                                for y in 0..side {
                                    if in_footprint(s.x, s.y, r, x as f64, y as f64) {
                                        let k = (x * side + y) as usize;
                                        bits[k / 64] |= 1 << (k % 64);
                                    }
                                }
                            }
                        }
                        bits
                    })
                    .collect()
            })
            .collect();
        let costs = config
            .sensors
            .iter()
            .map(|s| s.radii.iter().map(|&r| cost_of_radius(config.alpha, r) as f64).collect())
            .collect();
        let sizes = config.sensors.iter().map(|s| s.radii.len()).collect();
        Ok(CoverageGame {
            config,
            sizes,
            words,
            footprints,
            costs,
        })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    fn union_excluding(&self, a: &[usize], skip: Option<usize>, out: &mut [u64]) {
        out.iter_mut().for_each(|w| *w = 0);
        for (i, &act) in a.iter().enumerate() {
            if Some(i) == skip || act == 0 {
                continue;
            }
            for (o, f) in out.iter_mut().zip(&self.footprints[i][act]) {
                *o |= f;
            }
        }
    }

    pub fn coverage(&self, a: &[usize]) -> u64 {
        let mut u = vec![0u64; self.words];
        self.union_excluding(a, None, &mut u);
        u.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn total_cost(&self, a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &act)| self.costs[i][act]).sum()
    }
}

impl Game for CoverageGame {
    fn action_sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn payoff(&self, player: usize, actions: &[usize]) -> f64 {
        let act = actions[player];
        if act == 0 {
            return 0.0;
        }
        let mut others = vec![0u64; self.words];
        self.union_excluding(actions, Some(player), &mut others);
        let exclusive: u64 = self.footprints[player][act]
            .iter()
            .zip(&others)
            .map(|(f, o)| (f & !o).count_ones() as u64)
            .sum();
        exclusive as f64 - self.costs[player][act]
    }

    fn potential_value(&self, actions: &[usize]) -> Option<f64> {
        Some(self.coverage(actions) as f64 - self.total_cost(actions))
    }

    fn has_potential(&self) -> bool {
        true
    }
}

/// Where sensors come from in [`build_coverage_game`].
#[derive(Clone, Debug)]
pub enum Placement {
    /// Uniform over `[0,d]^2`, drawn x then y per sensor in ascending sensor order.
    Random { n: usize, seed: u64 },
    Explicit(Vec<(f64, f64)>),
}

/// Builds a coverage game where every sensor shares the same radius list.
pub fn build_coverage_game(d: u32, radii: &[f64], alpha: f64, placement: Placement) -> Result<CoverageGame> {
    CoverageGame::new(coverage_config(d, radii, alpha, placement))
}

pub fn coverage_config(d: u32, radii: &[f64], alpha: f64, placement: Placement) -> SensorConfig {
    let locations = match placement {
        Placement::Explicit(v) => v,
        Placement::Random { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| {
                    let x = rng.random_range(0.0..=d as f64);
                    let y = rng.random_range(0.0..=d as f64);
                    (x, y)
                })
                .collect()
        }
    };
    SensorConfig {
        d,
        alpha,
        r_c: None,
        sensors: locations
            .into_iter()
            .map(|(x, y)| Sensor {
                x,
                y,
                radii: radii.to_vec(),
            })
            .collect(),
    }
}

/// Sensor locations of the three-sensor case study.
pub const CASE_STUDY_LOCATIONS: [(f64, f64); 3] = [(9.03, 3.98), (8.4, 1.4), (1.96, 6.35)];
pub const CASE_STUDY_D: u32 = 10;
pub const CASE_STUDY_ALPHA: f64 = 0.2;

/// Calibrated three-sensor fixture (on/off sensors; radius recorded in the file).
pub const CASE_STUDY_TOML: &str = include_str!("../fixtures/case_study.toml");

pub fn case_study_config() -> SensorConfig {
    SensorConfig::from_toml_str(CASE_STUDY_TOML).expect("bundled fixture parses")
}

pub fn case_study_game() -> CoverageGame {
    CoverageGame::new(case_study_config()).expect("bundled fixture is valid")
}

/// Smallest integer radius in `candidates` for which the on/off three-sensor
/// game has NE set exactly `{(0,1,1), (1,0,1)}`, `(1,0,1)` is the strict
/// potential maximizer, and no two Hamming-1 neighbors tie in potential.
pub fn calibrate_case_study_radius(candidates: impl IntoIterator<Item = u32>) -> Option<u32> {
    let want = [vec![0usize, 1, 1], vec![1, 0, 1]];
    candidates.into_iter().find(|&r| {
        let Ok(game) = build_coverage_game(
            CASE_STUDY_D,
            &[0.0, r as f64],
            CASE_STUDY_ALPHA,
            Placement::Explicit(CASE_STUDY_LOCATIONS.to_vec()),
        ) else {
            return false;
        };
        let Ok(ne) = enumerate_nash(&game, DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE) else {
            return false;
        };
        let members: Vec<Vec<usize>> = ne.members().iter().map(|m| m.to_vec()).collect();
        if members.len() != 2 || !want.iter().all(|w| members.contains(w)) {
            return false;
        }
        let space = ProfileSpace::new(game.action_sizes()).unwrap();
        let phi: Vec<f64> = (0..space.len())
            .map(|k| game.potential_value(&space.profile(k)).unwrap())
            .collect();
        let top = space.index(&want[1]);
        let strict_max = (0..space.len()).all(|k| k == top || phi[k] < phi[top]);
        let no_ties = (0..space.len()).all(|k| {
            (0..space.players()).all(|i| {
                let j = space.switch(k, i, 1 - space.action_of(k, i));
                phi[j] != phi[k]
            })
        });
        strict_max && no_ties
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::verify_potential;

    fn single(x: f64, y: f64, r: f64, d: u32, alpha: f64) -> SensorConfig {
        coverage_config(d, &[0.0, r], alpha, Placement::Explicit(vec![(x, y)]))
    }

    #[test]
    fn coverage_indicator() {
        let cfg = single(5.0, 5.0, 1.0, 10, 0.2);
        assert!(!covered(&cfg, (5, 5), &[0]));
        assert!(covered(&cfg, (5, 6), &[1]));
        assert!(!covered(&cfg, (7, 5), &[1]));
        // boundary of the closed disk
        assert!(covered(&cfg, (6, 5), &[1]));
    }

    #[test]
    fn lattice_disk_counts() {
        assert_eq!(r_max_points(0.0), 1);
        assert_eq!(r_max_points(1.0), 5);
        assert_eq!(r_max_points(2.0), 13);
    }

    #[test]
    fn costs() {
        let cfg = coverage_config(10, &[0.0, 1.0, 2.0], 0.2, Placement::Explicit(vec![(1.0, 1.0)]));
        assert_eq!(sensor_cost(&cfg, 0, 0).unwrap(), 0);
        assert_eq!(sensor_cost(&cfg, 0, 2).unwrap(), 3);
        assert_eq!(sensor_cost(&cfg, 0, 1).unwrap(), 1);
        assert!(sensor_cost(&cfg, 0, 3).is_err());
        let cfg1 = single(1.0, 1.0, 1.0, 10, 1.0);
        assert_eq!(sensor_cost(&cfg1, 0, 1).unwrap(), 5);
    }

    #[test]
    fn totals_and_marginals() {
        let cfg = single(5.0, 5.0, 1.0, 10, 0.2);
        assert_eq!(total_coverage(&cfg, &[0]), 0);
        assert_eq!(total_coverage(&cfg, &[1]), 5);
        assert_eq!(global_payoff(&cfg, &[0]), 0.0);
        assert_eq!(marginal_utility(&cfg, 0, &[0]), 0.0);
        assert_eq!(marginal_utility(&cfg, 0, &[1]), 4.0);

        // second sensor on the same spot is fully overlapped
        let two = coverage_config(10, &[0.0, 1.0], 0.2, Placement::Explicit(vec![(5.0, 5.0), (5.0, 5.0)]));
        assert_eq!(marginal_utility(&two, 1, &[1, 1]), -1.0);
    }

    #[test]
    fn bitset_game_matches_direct_formulas() {
        let cfg = coverage_config(12, &[0.0, 2.0, 3.5], 0.3, Placement::Random { n: 4, seed: 11 });
        let game = CoverageGame::new(cfg.clone()).unwrap();
        let space = ProfileSpace::new(game.action_sizes()).unwrap();
        for k in 0..space.len() {
            let a = space.profile(k);
            assert_eq!(game.potential_value(&a).unwrap(), global_payoff(&cfg, &a));
            for i in 0..4 {
                assert_eq!(game.payoff(i, &a), marginal_utility(&cfg, i, &a));
            }
        }
        assert!(verify_potential(&game, 0.0, DEFAULT_PROFILE_CAP).unwrap().holds);
    }

    #[test]
    fn seeded_placement_is_deterministic_and_in_range() {
        let a = coverage_config(20, &[0.0, 15.0], 0.2, Placement::Random { n: 15, seed: 5 });
        let b = coverage_config(20, &[0.0, 15.0], 0.2, Placement::Random { n: 15, seed: 5 });
        assert_eq!(a, b);
        assert!(a.validate().is_ok());
    }

    #[test]
    fn case_study_fixture_records_the_calibrated_radius() {
        let cfg = case_study_config();
        assert_eq!(cfg.sensors.len(), 3);
        let r = calibrate_case_study_radius(1..=6).expect("some radius qualifies");
        assert!(cfg.sensors.iter().all(|s| s.radii == vec![0.0, r as f64]));
        let game = case_study_game();
        let ne = enumerate_nash(&game, DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE).unwrap();
        let members: Vec<Vec<usize>> = ne.members().iter().map(|m| m.to_vec()).collect();
        assert_eq!(members.len(), 2);
        assert!(members.contains(&vec![0, 1, 1]) && members.contains(&vec![1, 0, 1]));
        assert!(global_payoff(&cfg, &[1, 0, 1]) > global_payoff(&cfg, &[0, 1, 1]));
    }

    #[test]
    fn validation_errors() {
        let mut cfg = single(5.0, 5.0, 1.0, 10, 0.2);
        cfg.alpha = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = single(5.0, 5.0, 1.0, 10, 0.2);
        cfg.sensors[0].x = 11.0;
        assert!(cfg.validate().is_err());
        let mut cfg = single(5.0, 5.0, 1.0, 10, 0.2);
        cfg.sensors[0].radii = vec![1.0];
        assert!(cfg.validate().is_err());
    }
}
