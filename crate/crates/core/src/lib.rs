//! Derivative-free stochastic optimization: particle swarm optimization
//! (inertia-weight and constricted), simultaneous perturbation stochastic
//! approximation (SPSA), and three SPSA-PSO hybrids.
//!
//! The crate also ships the noisy benchmark suite (Sphere, Rosenbrock,
//! Rastrigin) and a multi-run harness that reports per-method mean and
//! standard deviation of the final (noiseless) fitness.
//!
//! ```
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//! use swarm_spsa::{objective::{FunctionId, Objective}, swarm::{run_pso, PsoParams}};
//!
//! let mut obj = Objective::new(FunctionId::Sphere, 2).unwrap();
//! let params = PsoParams { swarm_size: 20, max_iter: 200, ..PsoParams::default() };
//! let mut rng = ChaCha8Rng::seed_from_u64(7);
//! let record = run_pso(&params, &mut obj, &mut rng).unwrap();
//! assert!(record.final_true_fitness < 1.0);
//! ```

pub mod config;
pub mod error;
pub mod harness;
pub mod hybrid;
pub mod method;
pub mod objective;
pub mod spsa;
pub mod swarm;

pub use error::{Error, Result};
