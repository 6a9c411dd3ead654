mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarm_spsa::config::Settings;
use swarm_spsa::harness::{run_single, ExperimentSpec};
use swarm_spsa::hybrid::{refine_particles, run_hybrid, HybridKind, HybridVariant, RefineScope};
use swarm_spsa::method::MethodId;
use swarm_spsa::objective::{FunctionId, Measure, Objective};
use swarm_spsa::spsa::{estimate_gradient, run_spsa, sample_perturbation, SpsaParams};
use swarm_spsa::swarm::{init_swarm, run_pso, InertiaMode, PsoParams, Termination, VelocityLimit};

fn small_pso(swarm_size: usize, max_iter: usize) -> PsoParams {
    PsoParams {
        swarm_size,
        max_iter,
        ..PsoParams::default()
    }
}

#[test]
fn pso_solves_small_sphere() {
    let params = small_pso(20, 200);
    let hits = (0..20u64)
        .filter(|&seed| {
            let mut obj = Objective::new(FunctionId::Sphere, 2).unwrap();
            let r = run_pso(&params, &mut obj, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            r.final_true_fitness <= 1e-4
        })
        .count();
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn disabled_cutoff_runs_to_max_iter() {
    let params = PsoParams {
        cutoff_error: f64::INFINITY,
        ..small_pso(10, 40)
    };
    let mut obj = Objective::new(FunctionId::Sphere, 2).unwrap();
    let r = run_pso(&params, &mut obj, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(r.terminated_by, Termination::MaxIter);
    assert_eq!(r.trace.len(), 40);
    assert_eq!(r.total_evals, 10 * 41);
}

#[test]
fn spsa_solves_sphere_from_far_start() {
    let params = SpsaParams {
        a: 10.0,
        c: 1.0,
        steps: 5000,
        ..SpsaParams::default()
    };
    let hits = (0..20u64)
        .filter(|&seed| {
            let mut obj = Objective::new(FunctionId::Sphere, 10).unwrap();
            let r = run_spsa(
                &[50.0; 10],
                &params,
                0.0,
                &mut obj,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap();
            assert_eq!(r.total_evals, 2 * 5000);
            r.final_true_fitness <= 1e-2
        })
        .count();
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn gradient_estimate_is_unbiased_on_sphere() {
    let mut obj = Objective::new(FunctionId::Sphere, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000;
    let mut mean = [0.0; 5];
    for _ in 0..n {
        let delta = sample_perturbation(5, &mut rng);
        let g = estimate_gradient(&mut obj, &[1.0; 5], 0.01, &delta).unwrap();
        for (m, gi) in mean.iter_mut().zip(g) {
            *m += gi / n as f64;
        }
    }
    assert_eq!(obj.eval_count(), 2 * n as u64);
    for m in mean {
        assert!((m - 2.0).abs() < 0.1, "{m}");
    }
}

#[test]
fn noisy_mean_converges_to_true_value() {
    let x = [0.3, -1.2, 2.5];
    let mut obj = Objective::new(FunctionId::Rastrigin, 3)
        .unwrap()
        .with_noise(1.0, 99)
        .unwrap();
    let n = 10_000;
    let mean = (0..n).map(|_| obj.measure(&x).unwrap()).sum::<f64>() / n as f64;
    let truth = common::oracle_value(FunctionId::Rastrigin, &x);
    assert!(
        (mean - truth).abs() < 5.0 / (n as f64).sqrt(),
        "{mean} vs {truth}"
    );
}

#[test]
fn swarm_refinement_does_not_worsen_sphere_on_average() {
    let params = SpsaParams {
        a: 0.25,
        ..SpsaParams::default()
    };
    let mut total_change = 0.0;
    let mut count = 0usize;
    for seed in 0..1000u64 {
        let mut obj = Objective::new(FunctionId::Sphere, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = init_swarm(&small_pso(1, 1), &mut obj, &mut rng).unwrap();
        let before = obj.true_value(&state.particles[0].position).unwrap();
        refine_particles(&mut state, &params, RefineScope::All, &mut obj, &mut rng).unwrap();
        let after = obj.true_value(&state.particles[0].position).unwrap();
        total_change += after - before;
        count += 1;
    }
    assert!(
        total_change / count as f64 <= 0.0,
        "{}",
        total_change / count as f64
    );
}

#[test]
fn constriction_matches_equivalent_inertia_form() {
    let chi = common::oracle_chi(1.0, 2.05, 2.05);
    let constricted = PsoParams {
        v_max: VelocityLimit::Fixed(30.0),
        cutoff_error: f64::INFINITY,
        ..PsoParams::constricted()
    };
    let standard = PsoParams {
        c1: chi * 2.05,
        c2: chi * 2.05,
        inertia: InertiaMode::Fixed { omega: chi },
        ..constricted.clone()
    };
    for seed in 0..5u64 {
        let params_a = PsoParams {
            max_iter: 25,
            swarm_size: 10,
            ..constricted.clone()
        };
        let params_b = PsoParams {
            max_iter: 25,
            swarm_size: 10,
            ..standard.clone()
        };
        let mut oa = Objective::new(FunctionId::Sphere, 3).unwrap();
        let mut ob = Objective::new(FunctionId::Sphere, 3).unwrap();
        let a = run_pso(&params_a, &mut oa, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = run_pso(&params_b, &mut ob, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for (ta, tb) in a.trace.iter().zip(&b.trace) {
            let scale = ta.best_fitness.abs().max(1e-300);
            assert!((ta.best_fitness - tb.best_fitness).abs() <= 1e-9 * scale);
        }
    }
}

#[test]
fn hybrids_without_refinement_equal_plain_pso() {
    for kind in [
        HybridKind::GbestRefine,
        HybridKind::AgbFgbf,
        HybridKind::SwarmRefine,
    ] {
        for constricted in [false, true] {
            let pso = PsoParams {
                cutoff_error: f64::INFINITY,
                ..if constricted {
                    PsoParams::constricted()
                } else {
                    PsoParams::default()
                }
            };
            let pso = PsoParams {
                swarm_size: 8,
                max_iter: 30,
                ..pso
            };
            let variant = HybridVariant {
                kind,
                pso: pso.clone(),
                spsa: SpsaParams {
                    refine_steps: 0,
                    ..SpsaParams::default()
                },
                refine_scope: RefineScope::All,
            };
            let mut oa = Objective::new(FunctionId::Rastrigin, 4).unwrap();
            let mut ob = Objective::new(FunctionId::Rastrigin, 4).unwrap();
            let a = run_hybrid(&variant, &mut oa, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let b = run_pso(&pso, &mut ob, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert_eq!(a, b, "{kind:?} constricted={constricted}");
        }
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let settings = Settings {
        swarm_size: 10,
        max_iter: 50,
        noise_sigma: 1.0,
        runs: 1,
        ..Settings::default()
    };
    for method in MethodId::ALL {
        let spec =
            ExperimentSpec::from_settings(method, FunctionId::Rosenbrock, 5, &settings).unwrap();
        let a = run_single(&spec, 42).unwrap();
        let b = run_single(&spec, 42).unwrap();
        let bits = |r: &swarm_spsa::swarm::RunRecord| {
            r.trace
                .iter()
                .map(|t| (t.iteration, t.best_fitness.to_bits(), t.eval_count))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b), "{method}");
        assert_eq!(a, b);
        let c = run_single(&spec, 43).unwrap();
        assert_ne!(bits(&a), bits(&c), "{method}");
    }
}
