use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coverage::{build_coverage_game, case_study_game, CoverageGame, Placement, SensorConfig};
use crate::dynamics::Kernel;
use crate::error::{Error, Result};
use crate::fixtures::{g2, g3, random_potential_game};
use crate::game::{Game, TableGame, DEFAULT_PROFILE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Simulate,
    Stationary,
    Zerocost,
    Hitting,
    Validate,
    Cda,
    Compare,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Simulate => "simulate",
            Operation::Stationary => "stationary",
            Operation::Zerocost => "zerocost",
            Operation::Hitting => "hitting",
            Operation::Validate => "validate",
            Operation::Cda => "cda",
            Operation::Compare => "compare",
        }
    }
}

/// Where the game comes from: a built-in family or a TOML fixture file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    /// `g2`, `g3`, `case-study`, `random-potential` or `coverage`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSettings {
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// defaults to the all-zero profile
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<usize>>,
    /// independent runs per (kernel, T, seed) measuring the first step at a Nash equilibrium
    #[serde(default)]
    pub first_nash_trials: usize,
    #[serde(default = "default_first_nash_cap")]
    pub first_nash_max_steps: u64,
}

fn default_steps() -> usize {
    1000
}

fn default_first_nash_cap() -> u64 {
    10_000_000
}

impl Default for SimulateSettings {
    fn default() -> Self {
        SimulateSettings {
            steps: default_steps(),
            initial: None,
            first_nash_trials: 0,
            first_nash_max_steps: default_first_nash_cap(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingSettings {
    /// Monte-Carlo traces per start state; `0` disables sampling
    #[serde(default)]
    pub mc_traces: usize,
    #[serde(default = "default_mc_cap")]
    pub mc_max_steps: u64,
}

fn default_mc_cap() -> u64 {
    1_000_000
}

impl Default for HittingSettings {
    fn default() -> Self {
        HittingSettings {
            mc_traces: 0,
            mc_max_steps: default_mc_cap(),
        }
    }
}

/// Empirical exit-time regression run by the `validate` operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitSettings {
    pub cycle: Vec<usize>,
    pub temperatures: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_max_jumps")]
    pub max_jumps: u64,
}

fn default_max_jumps() -> u64 {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    #[serde(default = "both_kernels")]
    pub kernels: Vec<Kernel>,
    #[serde(default)]
    pub temperatures: Vec<f64>,
    #[serde(default)]
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub simulate: SimulateSettings,
    #[serde(default)]
    pub hitting: HittingSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<ExitSettings>,
}

fn both_kernels() -> Vec<Kernel> {
    Kernel::BOTH.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_cap() -> usize {
    DEFAULT_PROFILE_CAP
}

impl ExperimentConfig {
    /// An otherwise empty config over `game`.
    pub fn for_game(game: GameSpec) -> Self {
        ExperimentConfig {
            game,
            kernels: both_kernels(),
            temperatures: Vec::new(),
            operations: Vec::new(),
            seeds: Vec::new(),
            output: default_output(),
            cap: default_cap(),
            simulate: SimulateSettings::default(),
            hitting: HittingSettings::default(),
            exit: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string().trim_end()))
    }

    /// Reads a config file; a relative fixture path is taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(p), Some(dir)) = (cfg.game.path.as_ref(), path.parent()) {
            if p.is_relative() {
                cfg.game.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn needs_seed(&self) -> bool {
        self.operations.iter().any(|op| match op {
            Operation::Simulate => true,
            Operation::Hitting => self.hitting.mc_traces > 0,
            Operation::Validate => self.exit.is_some(),
            _ => false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.operations.is_empty() {
            return Err(Error::config("operations", "at least one operation is required"));
        }
        if self.kernels.is_empty() {
            return Err(Error::config("kernels", "at least one kernel is required"));
        }
        if self.temperatures.is_empty() {
            return Err(Error::config("temperatures", "at least one temperature is required"));
        }
        if let Some(t) = self.temperatures.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::config("temperatures", format!("{t} is not a positive temperature")));
        }
        if self.needs_seed() && self.seeds.is_empty() {
            return Err(Error::config("seeds", "simulation operations need an explicit seed"));
        }
        if self.operations.contains(&Operation::Compare) {
            let mut k = self.kernels.clone();
            k.sort();
            k.dedup();
            if k.len() < 2 {
                return Err(Error::config("kernels", "compare needs both kernels"));
            }
        }
        if let Some(e) = &self.exit {
            if e.temperatures.len() < 2 || e.temperatures.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::config(
                    "exit.temperatures",
                    "need at least two strictly decreasing temperatures",
                ));
            }
            if e.trials == 0 {
                return Err(Error::config("exit.trials", "must be positive"));
            }
        }
        self.game.validate()
    }
}

impl GameSpec {
    pub fn builtin(name: &str) -> Self {
        GameSpec {
            builtin: Some(name.into()),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        match (&self.builtin, &self.path) {
            (Some(_), Some(_)) => Err(Error::config("game", "give either `builtin` or `path`, not both")),
            (None, None) => Err(Error::config("game", "one of `builtin` or `path` is required")),
            (Some(b), None) => match b.as_str() {
                "g2" | "g3" | "case-study" => Ok(()),
                "random-potential" => {
                    if self.seed.is_none() {
                        return Err(Error::config("game.seed", "random-potential needs a seed"));
                    }
                    Ok(())
                }
                "coverage" => {
                    for (field, present) in [
                        ("game.d", self.d.is_some()),
                        ("game.n", self.n.is_some()),
                        ("game.alpha", self.alpha.is_some()),
                        ("game.radii", self.radii.is_some()),
                        ("game.seed", self.seed.is_some()),
                    ] {
                        if !present {
                            return Err(Error::config(field, "required for the coverage family"));
                        }
                    }
                    Ok(())
                }
                other => Err(Error::config("game.builtin", format!("unknown game `{other}`"))),
            },
            (None, Some(_)) => Ok(()),
        }
    }

    pub fn load(&self) -> Result<LoadedGame> {
        self.validate()?;
        if let Some(path) = &self.path {
            return load_fixture(path);
        }
        let name = self.builtin.as_deref().expect("validated");
        Ok(match name {
            "g2" => LoadedGame::Table(g2()),
            "g3" => LoadedGame::Table(g3()),
            "case-study" => LoadedGame::Coverage(Box::new(case_study_game())),
            "random-potential" => LoadedGame::Table(random_potential_game(
                self.seed.expect("validated"),
                self.players.unwrap_or(3),
                self.actions.unwrap_or(3),
            )),
            "coverage" => LoadedGame::Coverage(Box::new(
                build_coverage_game(
                    self.d.expect("validated"),
                    self.radii.as_ref().expect("validated"),
                    self.alpha.expect("validated"),
                    Placement::Random {
                        n: self.n.expect("validated"),
                        seed: self.seed.expect("validated"),
                    },
                )
                .map_err(|e| Error::config("game", e.to_string()))?,
            )),
            _ => unreachable!("validated"),
        })
    }
}

/// Table-game fixture: `sizes`, a `potential` by profile index (player 0
/// varies fastest) and optional `utilities[profile][player]`; without
/// utilities the game is identical-interest.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFixture {
    sizes: Vec<usize>,
    potential: Vec<f64>,
    #[serde(default)]
    utilities: Option<Vec<Vec<f64>>>,
}

/// Loads a TOML fixture: a coverage game if it lists `[[sensor]]` entries,
/// otherwise a table game.
pub fn load_fixture(path: &Path) -> Result<LoadedGame> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("game.path", format!("{}: {e}", path.display())))?;
    let value: toml::Table = toml::from_str(&text).map_err(|e| Error::config("game.path", e.to_string()))?;
    if value.contains_key("sensor") {
        let cfg = SensorConfig::from_toml_str(&text)?;
        return Ok(LoadedGame::Coverage(Box::new(CoverageGame::new(cfg)?)));
    }
    let t: TableFixture = toml::from_str(&text).map_err(|e| Error::config("game.path", e.to_string()))?;
    let game = match t.utilities {
        Some(u) => TableGame::new(t.sizes, u, Some(t.potential)),
        None => TableGame::identical_interest(t.sizes, t.potential),
    }
    .map_err(|e| Error::config("game.path", e.to_string()))?;
    Ok(LoadedGame::Table(game))
}

#[derive(Clone, Debug)]
pub enum LoadedGame {
    Table(TableGame),
    Coverage(Box<CoverageGame>),
}

impl Game for LoadedGame {
    fn action_sizes(&self) -> &[usize] {
        match self {
            LoadedGame::Table(g) => g.action_sizes(),
            LoadedGame::Coverage(g) => g.action_sizes(),
        }
    }

    fn payoff(&self, player: usize, actions: &[usize]) -> f64 {
        match self {
            LoadedGame::Table(g) => g.payoff(player, actions),
            LoadedGame::Coverage(g) => g.payoff(player, actions),
        }
    }

    fn potential_value(&self, actions: &[usize]) -> Option<f64> {
        match self {
            LoadedGame::Table(g) => g.potential_value(actions),
            LoadedGame::Coverage(g) => g.potential_value(actions),
        }
    }

    fn has_potential(&self) -> bool {
        match self {
            LoadedGame::Table(g) => g.has_potential(),
            LoadedGame::Coverage(g) => g.has_potential(),
        }
    }
}
