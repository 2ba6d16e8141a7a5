use stochlearn_web::{coverage_race, hierarchy_text, named_game, nash_mass_curve, RaceParams};

fn params() -> RaceParams {
    RaceParams { d: 12, n: 6, radius: 4.0, alpha: 0.2, temperature: 0.05, steps: 400, seed: 9 }
}

#[test]
fn race_is_deterministic_and_shaped() {
    let a = coverage_race(params()).unwrap();
    assert_eq!(a, coverage_race(params()).unwrap());
    assert_eq!(a.side, 13);
    assert_eq!(a.sensors.len(), 6);
    for run in [&a.lll, &a.ml] {
        assert_eq!(run.covered.len(), 169);
        assert_eq!(run.potentials.len(), 401);
        assert_eq!(run.potentials[0], 0.0);
        assert_eq!(run.final_actions.len(), 6);
        assert_eq!(run.covered.iter().any(|&c| c), run.final_actions.contains(&1));
    }
}

#[test]
fn nash_mass_rises_as_temperature_falls() {
    let curve = nash_mass_curve("g2", &[10.0, 1.0, 0.1]).unwrap();
    // phi = [0,1,2,4], NE is the index-3 profile
    let z = |t: f64| [0.0f64, 1.0, 2.0, 4.0].iter().map(|p| (p / t).exp()).sum::<f64>();
    for (m, t) in curve.iter().zip([10.0, 1.0, 0.1]) {
        assert!((m - (4.0f64 / t).exp() / z(t)).abs() < 1e-12);
    }
    assert!(curve.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn hierarchy_lists_the_g3_cycle() {
    let (listing, dot) = hierarchy_text("g3", "ml", 1.0).unwrap();
    assert!(listing.contains("H_e=3 H_m=2 φ=3 {[1], [2]}"), "{listing}");
    assert!(dot.starts_with("digraph"));
    assert!(hierarchy_text("g3", "xx", 1.0).is_err());
}

#[test]
fn named_games_resolve() {
    assert_eq!(named_game("case-study").unwrap().space().len(), 8);
    assert!(named_game("random:4").is_ok());
    assert!(named_game("nope").is_err());
}
