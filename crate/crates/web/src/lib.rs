//! Browser bindings. Each operation has a native function returning plain
//! Rust data (tested natively) and a thin `wasm_bindgen` wrapper.

use std::fmt::Write as _;

use wasm_bindgen::prelude::*;

use stochlearn::analysis::gibbs;
use stochlearn::coverage::{build_coverage_game, case_study_game, covered, Placement};
use stochlearn::cycles::{decompose_model, to_dot};
use stochlearn::fixtures::{g2, g3, random_potential_game};
use stochlearn::game::{enumerate_nash, DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE};
use stochlearn::simulate::simulate;
use stochlearn::{build_transition_model, Game, Kernel, ProfileSpace, TableGame};

/// Small games selectable from the page. `random:<seed>` draws a 2–3 player
/// potential game.
pub fn named_game(name: &str) -> Result<TableGame, String> {
    match name {
        "g2" => Ok(g2()),
        "g3" => Ok(g3()),
        "case-study" => TableGame::tabulate(&case_study_game(), DEFAULT_PROFILE_CAP).map_err(|e| e.to_string()),
        other => match other.strip_prefix("random:").map(str::parse::<u64>) {
            Some(Ok(seed)) => Ok(random_potential_game(seed, 3, 3)),
            _ => Err(format!("unknown game `{other}`")),
        },
    }
}

fn kernel(name: &str) -> Result<Kernel, String> {
    Kernel::parse(name).ok_or_else(|| format!("unknown kernel `{name}`"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelRun {
    /// Row-major `(d+1) x (d+1)` coverage of the final profile, `y` as row.
    pub covered: Vec<bool>,
    pub potentials: Vec<f64>,
    pub final_actions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageRace {
    pub side: usize,
    pub sensors: Vec<(f64, f64)>,
    pub lll: KernelRun,
    pub ml: KernelRun,
}

#[derive(Clone, Copy, Debug)]
pub struct RaceParams {
    pub d: u32,
    pub n: usize,
    pub radius: f64,
    pub alpha: f64,
    pub temperature: f64,
    pub steps: usize,
    pub seed: u64,
}

/// Runs LLL and ML on the same random sensor field from all-off.
pub fn coverage_race(p: RaceParams) -> Result<CoverageRace, String> {
    let game = build_coverage_game(p.d, &[0.0, p.radius], p.alpha, Placement::Random { n: p.n, seed: p.seed })
        .map_err(|e| e.to_string())?;
    let space = ProfileSpace::new(game.action_sizes()).map_err(|e| e.to_string())?;
    let a0 = vec![0; p.n];
    let side = p.d as usize + 1;
    let run = |k: Kernel| -> Result<KernelRun, String> {
        let trace = simulate(&game, k, p.temperature, &a0, p.steps, p.seed).map_err(|e| e.to_string())?;
        let final_actions = space.profile(trace.final_state()).into_inner();
        let covered = (0..side * side)
            .map(|c| covered(game.config(), ((c % side) as u32, (c / side) as u32), &final_actions))
            .collect();
        Ok(KernelRun {
            covered,
            potentials: trace.potentials.unwrap_or_default(),
            final_actions,
        })
    };
    Ok(CoverageRace {
        side,
        sensors: game.config().sensors.iter().map(|s| (s.x, s.y)).collect(),
        lll: run(Kernel::LogLinear)?,
        ml: run(Kernel::Metropolis)?,
    })
}

/// Gibbs mass on the Nash set at each temperature. Both kernels share this
/// stationary law, so one curve describes either.
pub fn nash_mass_curve(game: &str, temperatures: &[f64]) -> Result<Vec<f64>, String> {
    let g = named_game(game)?;
    let ne = enumerate_nash(&g, DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE).map_err(|e| e.to_string())?;
    temperatures
        .iter()
        .map(|&t| {
            let pi = gibbs(&g, t).map_err(|e| e.to_string())?;
            Ok(ne.indices().iter().map(|&k| pi.probabilities[k]).sum())
        })
        .collect()
}

/// Text listing of every nontrivial cycle followed by the DOT rendering.
pub fn hierarchy_text(game: &str, kernel_name: &str, temperature: f64) -> Result<(String, String), String> {
    let g = named_game(game)?;
    let space = g.space();
    let model =
        build_transition_model(&g, kernel(kernel_name)?, temperature, DEFAULT_PROFILE_CAP).map_err(|e| e.to_string())?;
    let h = decompose_model(&model).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for c in h.nontrivial() {
        let members: Vec<String> = c
            .members
            .iter()
            .map(|&x| format!("{:?}", space.profile(x).actions()))
            .collect();
        let _ = writeln!(
            out,
            "Π_{} order {}: H_e={} H_m={} φ={} {{{}}}",
            c.id,
            c.order,
            c.exit_height,
            c.mixing_height,
            c.potential,
            members.join(", ")
        );
    }
    Ok((out, to_dot(&h)))
}

#[wasm_bindgen]
pub struct RaceView(CoverageRace);

#[wasm_bindgen]
impl RaceView {
    pub fn side(&self) -> usize {
        self.0.side
    }

    pub fn sensor_xy(&self) -> Vec<f64> {
        self.0.sensors.iter().flat_map(|&(x, y)| [x, y]).collect()
    }

    fn pick(&self, kernel: &str) -> &KernelRun {
        if kernel == "ml" {
            &self.0.ml
        } else {
            &self.0.lll
        }
    }

    pub fn covered(&self, kernel: &str) -> Vec<u8> {
        self.pick(kernel).covered.iter().map(|&b| b as u8).collect()
    }

    pub fn potentials(&self, kernel: &str) -> Vec<f64> {
        self.pick(kernel).potentials.clone()
    }

    pub fn actions(&self, kernel: &str) -> Vec<u32> {
        self.pick(kernel).final_actions.iter().map(|&a| a as u32).collect()
    }
}

#[wasm_bindgen(js_name = coverageRace)]
#[allow(clippy::too_many_arguments)]
pub fn coverage_race_js(
    d: u32,
    n: usize,
    radius: f64,
    alpha: f64,
    temperature: f64,
    steps: usize,
    seed: u32,
) -> Result<RaceView, JsValue> {
    let p = RaceParams { d, n, radius, alpha, temperature, steps, seed: seed.into() };
    coverage_race(p).map(RaceView).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = nashMassCurve)]
pub fn nash_mass_curve_js(game: &str, temperatures: Vec<f64>) -> Result<Vec<f64>, JsValue> {
    nash_mass_curve(game, &temperatures).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = hierarchy)]
pub fn hierarchy_js(game: &str, kernel: &str, temperature: f64) -> Result<String, JsValue> {
    hierarchy_text(game, kernel, temperature)
        .map(|(listing, dot)| format!("{listing}\n{dot}"))
        .map_err(|e| JsValue::from_str(&e))
}
