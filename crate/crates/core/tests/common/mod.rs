//! Independent oracles and the invariant checks shared by the property
//! tests and the acceptance gate.

#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swarm_spsa::config::Settings;
use swarm_spsa::harness::{run_single, summarize, ExperimentSpec};
use swarm_spsa::hybrid::{agb_step, form_agb};
use swarm_spsa::method::MethodId;
use swarm_spsa::objective::{FunctionId, Measure, Objective};
use swarm_spsa::swarm::{
    constriction_coefficient, init_swarm, velocity_from_draws, Particle, PsoParams, UpdateRule,
};

pub const CASES: u32 = 1000;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn oracle_value(f: FunctionId, x: &[f64]) -> f64 {
    match f {
        FunctionId::Sphere => x.iter().map(|v| v * v).sum(),
        FunctionId::Rastrigin => x
            .iter()
            .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos() + 10.0)
            .sum(),
        FunctionId::Rosenbrock => {
            let n = x.len();
            let mut s = 0.0;
            for i in 0..n - 1 {
                s += 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (x[i] - 1.0).powi(2);
            }
            s + (x[n - 1] - 1.0).powi(2)
        }
    }
}

/// Mean, then squared deviations.
pub fn oracle_summary(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn oracle_chi(kappa: f64, phi1: f64, phi2: f64) -> f64 {
    let phi = phi1 + phi2;
    2.0 * kappa / (phi - 2.0 + (phi * phi - 4.0 * phi).sqrt())
}

pub fn function_strategy() -> impl Strategy<Value = FunctionId> {
    prop_oneof![
        Just(FunctionId::Sphere),
        Just(FunctionId::Rosenbrock),
        Just(FunctionId::Rastrigin)
    ]
}

fn rule_strategy() -> impl Strategy<Value = UpdateRule> {
    prop_oneof![
        (-1.0..1.5f64, 0.0..4.0f64, 0.0..4.0f64).prop_map(|(omega, c1, c2)| UpdateRule::Inertia {
            omega,
            c1,
            c2
        }),
        (0.0..=1.0f64, 2.05..3.5f64, 2.05..3.5f64).prop_map(|(kappa, phi1, phi2)| {
            UpdateRule::Constriction {
                chi: constriction_coefficient(kappa, phi1, phi2).unwrap(),
                phi1,
                phi2,
            }
        }),
    ]
}

/// |v_j| ≤ v_max after every velocity update, for arbitrary states, draws
/// and coefficients.
pub fn velocity_clamp(cases: u32) -> Result<(), String> {
    let strategy = (1usize..8).prop_flat_map(|d| {
        (
            vec(-1e4..1e4f64, d),
            vec(-1e4..1e4f64, d),
            vec(-1e4..1e4f64, d),
            vec(-1e4..1e4f64, d),
            vec(0.0..1.0f64, d),
            vec(0.0..1.0f64, d),
            rule_strategy(),
            1e-3..1e3f64,
        )
    });
    runner(cases)
        .run(&strategy, |(x, v, p, g, r1, r2, rule, v_max)| {
            let particle = Particle {
                position: x,
                velocity: v,
                pbest_position: p,
                pbest_fitness: 0.0,
            };
            let out = velocity_from_draws(&particle, &g, &rule, v_max, &r1, &r2).unwrap();
            for vj in out {
                prop_assert!(vj.abs() <= v_max, "|{vj}| > {v_max}");
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// The reported best-so-far never increases, for every method and noise
/// level, and trace eval counts strictly increase.
pub fn best_ever_monotone(cases: u32) -> Result<(), String> {
    let strategy = (
        any::<u64>(),
        function_strategy(),
        2usize..6,
        0usize..MethodId::ALL.len(),
        prop_oneof![Just(0.0), Just(1.0)],
    );
    runner(cases)
        .run(&strategy, |(seed, function, dim, m, sigma)| {
            let settings = Settings {
                swarm_size: 6,
                max_iter: 15,
                noise_sigma: sigma,
                runs: 1,
                ..Settings::default()
            };
            let spec =
                ExperimentSpec::from_settings(MethodId::ALL[m], function, dim, &settings).unwrap();
            let record = run_single(&spec, seed).unwrap();
            for w in record.trace.windows(2) {
                prop_assert!(w[1].best_fitness <= w[0].best_fitness);
                prop_assert!(w[1].eval_count > w[0].eval_count);
            }
            if let Some(last) = record.trace.last() {
                prop_assert_eq!(last.best_fitness, record.final_true_fitness);
            }
            let obj = Objective::new(function, dim).unwrap();
            prop_assert_eq!(
                obj.true_value(&record.final_position).unwrap(),
                record.final_true_fitness
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// An aGB step never worsens the measured gbest and leaves it untouched
/// unless the candidate is strictly better.
pub fn agb_guard(cases: u32) -> Result<(), String> {
    let strategy = (
        any::<u64>(),
        function_strategy(),
        2usize..6,
        1usize..8,
        prop_oneof![Just(0.0), Just(1.0)],
    );
    runner(cases)
        .run(&strategy, |(seed, function, dim, swarm_size, sigma)| {
            let mut obj = Objective::new(function, dim)
                .unwrap()
                .with_noise(sigma, seed)
                .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = PsoParams {
                swarm_size,
                ..PsoParams::default()
            };
            let spsa = Settings::default().spsa_params(function);
            let mut state = init_swarm(&params, &mut obj, &mut rng).unwrap();
            for _ in 0..3 {
                let before_fitness = state.gbest_fitness;
                let before_position = state.gbest_position.clone();
                let evals = obj.eval_count();
                let replaced = agb_step(&mut state, &spsa, &mut obj, &mut rng).unwrap();
                prop_assert_eq!(obj.eval_count() - evals, 2 * spsa.refine_steps as u64 + 1);
                prop_assert!(state.gbest_fitness <= before_fitness);
                if replaced {
                    prop_assert!(state.gbest_fitness < before_fitness);
                } else {
                    prop_assert_eq!(state.gbest_fitness, before_fitness);
                    prop_assert_eq!(&state.gbest_position, &before_position);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Dimensional scores sum to the function value; the aGB's selected scores
/// are dominated by every personal best's scores.
pub fn score_sum_identity(cases: u32) -> Result<(), String> {
    let strategy = (function_strategy(), 2usize..10).prop_flat_map(|(f, d)| {
        let b = f.default_bounds();
        (Just(f), vec(vec(b.lower()..b.upper(), d), 1..6))
    });
    runner(cases)
        .run(&strategy, |(function, points)| {
            let dim = points[0].len();
            let obj = Objective::new(function, dim).unwrap();
            let score_sum = |x: &[f64]| -> f64 {
                (0..dim)
                    .map(|d| obj.dimensional_score(d, x[d], x).unwrap())
                    .sum()
            };
            for x in &points {
                let value = obj.true_value(x).unwrap();
                let oracle = oracle_value(function, x);
                prop_assert!(
                    (value - oracle).abs() <= 1e-12 * oracle.max(1.0),
                    "{value} vs {oracle}"
                );
                prop_assert!((score_sum(x) - value).abs() <= 1e-9 * value.max(1.0));
                prop_assert!(value >= 0.0);
            }

            let mut state = {
                let params = PsoParams {
                    swarm_size: points.len(),
                    ..PsoParams::default()
                };
                let mut probe = Objective::new(function, dim).unwrap();
                init_swarm(&params, &mut probe, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
            };
            for (p, x) in state.particles.iter_mut().zip(&points) {
                p.pbest_position = x.clone();
            }
            state.gbest_position = points[0].clone();
            let agb = form_agb(&state, &obj).unwrap();
            let selected: f64 = (0..dim)
                .map(|d| {
                    points
                        .iter()
                        .map(|x| obj.dimensional_score(d, x[d], x).unwrap())
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            for x in &points {
                prop_assert!(selected <= score_sum(x) + 1e-9 * score_sum(x).max(1.0));
            }
            if function != FunctionId::Rosenbrock {
                let best = points
                    .iter()
                    .map(|x| oracle_value(function, x))
                    .fold(f64::INFINITY, f64::min);
                let v = oracle_value(function, &agb);
                prop_assert!(v <= best + 1e-9 * best.max(1.0), "{v} > {best}");
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn mixed_magnitude() -> impl Strategy<Value = f64> {
    (0.5..1.0f64, -8i32..9).prop_map(|(m, e)| m * 10f64.powi(e))
}

pub fn summarize_matches_oracle(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&vec(mixed_magnitude(), 1..400), |xs| {
            let (mu, sigma) = summarize(&xs).unwrap();
            let (omu, osigma) = oracle_summary(&xs);
            prop_assert!((mu - omu).abs() <= 1e-12 * omu.abs(), "{mu} vs {omu}");
            prop_assert!(
                (sigma - osigma).abs() <= 1e-12 * osigma.abs().max(1e-300) || sigma == osigma,
                "{sigma} vs {osigma}"
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Every invariant of the suite, by name.
pub fn invariant_suite(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("velocity clamp", velocity_clamp(cases)),
        ("best-ever monotone", best_ever_monotone(cases)),
        ("aGB guard", agb_guard(cases)),
        ("score-sum identity", score_sum_identity(cases)),
        ("summarize vs oracle", summarize_matches_oracle(cases)),
    ]
}
