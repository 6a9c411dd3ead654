//! Benchmark objectives with additive measurement noise and evaluation counting.
//!
//! An [`Objective`] owns its own noise stream, separate from any optimizer
//! RNG, so the noise realisation depends only on the noise seed and the
//! sequence of measurement calls.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stream index used for the noise generator, distinct from the default
/// stream an optimizer RNG built from the same seed would use.
const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// Noise level used for the "+ noise" benchmark rows.
pub const DEFAULT_NOISE_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionId {
    Sphere,
    Rosenbrock,
    Rastrigin,
}

impl FunctionId {
    pub const ALL: [FunctionId; 3] = [
        FunctionId::Sphere,
        FunctionId::Rosenbrock,
        FunctionId::Rastrigin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionId::Sphere => "sphere",
            FunctionId::Rosenbrock => "rosenbrock",
            FunctionId::Rastrigin => "rastrigin",
        }
    }

    /// Search range used by the benchmark suite.
    pub fn default_bounds(self) -> Bounds {
        match self {
            FunctionId::Sphere | FunctionId::Rastrigin => Bounds {
                lower: -150.0,
                upper: 150.0,
            },
            FunctionId::Rosenbrock => Bounds {
                lower: -50.0,
                upper: 25.0,
            },
        }
    }

    pub fn min_dimension(self) -> usize {
        match self {
            FunctionId::Rosenbrock => 2,
            _ => 1,
        }
    }

    /// Location of the global minimum (value 0) in the given dimension.
    pub fn optimum(self, dimension: usize) -> Vec<f64> {
        match self {
            FunctionId::Rosenbrock => vec![1.0; dimension],
            _ => vec![0.0; dimension],
        }
    }

    /// Noiseless function value. Callers guarantee `x` has a valid length.
    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            FunctionId::Sphere => x.iter().map(|v| v * v).sum(),
            FunctionId::Rosenbrock => {
                // Summed over all d terms; the last one has no successor to
                // couple with and keeps only (x_d - 1)^2.
                let coupled: f64 = x
                    .windows(2)
                    .map(|w| {
                        let t = w[1] - w[0] * w[0];
                        let u = w[0] - 1.0;
                        100.0 * t * t + u * u
                    })
                    .sum();
                let last = x[x.len() - 1] - 1.0;
                coupled + last * last
            }
            FunctionId::Rastrigin => x.iter().map(|&v| rastrigin_term(v)).sum(),
        }
    }
}

#[inline]
fn rastrigin_term(v: f64) -> f64 {
    10.0 + v * v - 10.0 * (2.0 * PI * v).cos()
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

/// A box `[lower, upper]^d`, identical in every dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    lower: f64,
    upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_finite() && upper.is_finite() && lower < upper {
            Ok(Self { lower, upper })
        } else {
            Err(Error::InvalidBounds { lower, upper })
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lower..=self.upper).contains(&v)
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }
}

/// Draws a position with every component independently uniform in `bounds`.
pub fn sample_uniform_position<R: Rng + ?Sized>(
    bounds: Bounds,
    dimension: usize,
    rng: &mut R,
) -> Vec<f64> {
    (0..dimension)
        .map(|_| rng.random_range(bounds.lower..=bounds.upper))
        .collect()
}

/// Anything an optimizer can take noisy measurements of.
pub trait Measure {
    fn dimension(&self) -> usize;

    fn bounds(&self) -> Bounds;

    /// One (possibly noisy) measurement. Increments the evaluation counter.
    fn measure(&mut self, x: &[f64]) -> Result<f64>;

    /// Noiseless value, for reporting only. Does not count as an evaluation.
    fn true_value(&self, x: &[f64]) -> Result<f64>;

    fn eval_count(&self) -> u64;
}

/// A benchmark function with bounds, optional Gaussian measurement noise
/// and an evaluation counter.
#[derive(Debug, Clone)]
pub struct Objective {
    function: FunctionId,
    dimension: usize,
    bounds: Bounds,
    noise_sigma: f64,
    eval_count: u64,
    noise: ChaCha8Rng,
}

impl Objective {
    /// Noiseless objective over the function's standard range.
    pub fn new(function: FunctionId, dimension: usize) -> Result<Self> {
        if dimension < function.min_dimension() {
            return Err(Error::InvalidDimension {
                function: function.as_str(),
                min: function.min_dimension(),
                actual: dimension,
            });
        }
        Ok(Self {
            function,
            dimension,
            bounds: function.default_bounds(),
            noise_sigma: 0.0,
            eval_count: 0,
            noise: noise_rng(0),
        })
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    /// Adds zero-mean Gaussian noise with standard deviation `sigma` to every
    /// measurement, drawn from a stream seeded by `seed`.
    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be finite and non-negative, got {sigma}"
            )));
        }
        self.noise_sigma = sigma;
        self.noise = noise_rng(seed);
        Ok(self)
    }

    pub fn function(&self) -> FunctionId {
        self.function
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        let value = self.true_value(x)?;
        self.eval_count += 1;
        if self.noise_sigma > 0.0 {
            let eps: f64 = self.noise.sample(StandardNormal);
            Ok(value + self.noise_sigma * eps)
        } else {
            Ok(value)
        }
    }

    pub fn true_value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.function.value(x))
    }

    /// Additive contribution of `component`, placed at `dim_index`, to the
    /// noiseless objective. `context` supplies the coupled neighbour for
    /// Rosenbrock; it is ignored by the separable functions.
    ///
    /// Rosenbrock term `i` is charged to dimension `i`, so the last
    /// dimension only contributes `(x_d - 1)^2`. Summing the scores of a
    /// full position reproduces the objective value for all three functions.
    pub fn dimensional_score(
        &self,
        dim_index: usize,
        component: f64,
        context: &[f64],
    ) -> Result<f64> {
        if dim_index >= self.dimension {
            return Err(Error::IndexOutOfRange {
                index: dim_index,
                dimension: self.dimension,
            });
        }
        Ok(match self.function {
            FunctionId::Sphere => component * component,
            FunctionId::Rastrigin => rastrigin_term(component),
            FunctionId::Rosenbrock => {
                let u = component - 1.0;
                if dim_index + 1 < self.dimension {
                    if context.len() != self.dimension {
                        return Err(Error::DimensionMismatch {
                            expected: self.dimension,
                            actual: context.len(),
                        });
                    }
                    let t = context[dim_index + 1] - component * component;
                    100.0 * t * t + u * u
                } else {
                    u * u
                }
            }
        })
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(())
    }
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

impl Measure for Objective {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn measure(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluate(x)
    }

    fn true_value(&self, x: &[f64]) -> Result<f64> {
        Objective::true_value(self, x)
    }

    fn eval_count(&self) -> u64 {
        self.eval_count
    }
}
