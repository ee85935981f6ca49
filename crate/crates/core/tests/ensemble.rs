//! Ensemble-level properties of entwined pairs.

use chessboard_core::analysis::{
    compare_windows, grid_slice, grid_slice_standard_error, history_slice, reference_window, ChannelMap,
    Combination, Window,
};
use chessboard_core::dirac::{dirac_propagator, EvolutionMode};
use chessboard_core::entwined::{run_ensemble, ChannelLayout, EnsembleConfig, StutterPhase};
use chessboard_core::{Component, Direction, LatticeSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn spec() -> LatticeSpec {
    LatticeSpec::new(0.1, 0.1, 1.0, 1.0, 30.0, 300).unwrap()
}

fn config(n_pairs: u64, phase: StutterPhase) -> EnsembleConfig {
    EnsembleConfig {
        seed: 2024,
        n_pairs,
        t_reversal: 1.5,
        n_max: 300,
        stutter_phase: phase,
        initial_direction: Direction::Plus,
        layout: ChannelLayout::Envelope,
    }
}

#[test]
fn every_covered_slice_is_neutral() {
    let s = spec();
    for phase in [StutterPhase::TurnFirst, StutterPhase::MarkFirst] {
        let run = run_ensemble(&s, &config(10_000, phase), Some(4)).unwrap();
        assert_eq!(run.grid.n_pairs, 10_000);
        for t in 0..s.n_slices() {
            assert_eq!(run.grid.slice_total(t), 0, "slice {t}");
        }
        assert!(run.grid.visits(Component::Phi4, s.origin(), 0) > 0);
    }
}

#[test]
fn worker_count_does_not_change_the_grid() {
    let s = spec();
    let cfg = config(20_000, StutterPhase::MarkFirst);
    let one = run_ensemble(&s, &cfg, Some(1)).unwrap();
    let eight = run_ensemble(&s, &cfg, Some(8)).unwrap();
    assert_eq!(one.grid, eight.grid);
    assert_eq!(one.stats, eight.stats);
}

#[test]
fn turn_first_right_envelope_has_the_propagator_as_mean() {
    // Within 5 standard errors on |z| <= 7 at t = 15.
    let s = spec();
    let run = run_ensemble(&s, &config(200_000, StutterPhase::TurnFirst), None).unwrap();
    let reference = dirac_propagator(&s, 15, Component::Phi1, EvolutionMode::Raw).unwrap();
    for (channel, component) in [(Component::Phi4, Component::Phi1), (Component::Phi3, Component::Phi2)] {
        let combo = Combination::single(channel);
        let sampled = grid_slice(&run.grid, &s, 15, &combo, false).unwrap();
        let se = grid_slice_standard_error(&run.grid, &s, 15, &combo, false).unwrap();
        let exact = history_slice(&reference, 15, &Combination::single(component)).unwrap();
        for site in s.origin() - 7..=s.origin() + 7 {
            let dev = (sampled[site] - exact[site]).abs();
            assert!(
                dev <= 5.0 * se[site] + 1e-12,
                "{channel:?} site {site}: |{} - {}| > 5 * {}",
                sampled[site],
                exact[site],
                se[site]
            );
        }
    }
}

#[test]
fn shuffled_reference_is_uncorrelated() {
    let s = spec();
    let reference = dirac_propagator(&s, 60, Component::Phi1, EvolutionMode::Raw).unwrap();
    let window = Window {
        radius: 30,
        t_start: 1,
        t_end: 60,
    };
    let a = reference_window(&reference, &s, &ChannelMap::identity(), window).unwrap();
    let mut b = a.clone();
    b.values.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7));
    let metrics = compare_windows(&a, &b).unwrap();
    let bound = 3.0 / (a.values.len() as f64).sqrt();
    assert!(metrics.correlation.abs() < bound, "{} vs {bound}", metrics.correlation);
}
