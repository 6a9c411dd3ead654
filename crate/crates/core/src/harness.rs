//! Multi-run experiments: seeded independent runs, mean/standard deviation
//! of the final true fitness, and CSV/JSON export.
//!
//! Run `i` of an experiment uses seed `base_seed + i` for both its optimizer
//! RNG and its noise stream, so any run can be reproduced on its own.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MethodParams, Settings};
use crate::error::{Error, Result};
use crate::hybrid::run_hybrid;
use crate::method::MethodId;
use crate::objective::{sample_uniform_position, FunctionId, Objective};
use crate::spsa::run_spsa;
use crate::swarm::{run_pso, RunRecord, Termination, TracePoint};

/// Maximum trace rows kept per run.
pub const MAX_TRACE_ROWS: usize = 1000;

pub const SUMMARY_HEADER: &str =
    "method,function,dimension,noise_sigma,runs,mu,sigma,mean_evals,cutoff_hits";
pub const TRACE_HEADER: &str = "run,iteration,best_fitness,eval_count";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub method: MethodId,
    pub function: FunctionId,
    pub dimension: usize,
    pub noise_sigma: f64,
    pub runs: usize,
    pub base_seed: u64,
    pub params: MethodParams,
}

impl ExperimentSpec {
    /// Builds and validates a spec from resolved settings (which supply the
    /// noise level, run count and base seed).
    pub fn from_settings(
        method: MethodId,
        function: FunctionId,
        dimension: usize,
        settings: &Settings,
    ) -> Result<Self> {
        // Surfaces dimension errors before any run starts.
        Objective::new(function, dimension)?;
        Ok(Self {
            method,
            function,
            dimension,
            noise_sigma: settings.noise_sigma,
            runs: settings.runs,
            base_seed: settings.seed,
            params: settings.method_params(method, function)?,
        })
    }

    pub fn seed_for(&self, run_index: usize) -> u64 {
        self.base_seed.wrapping_add(run_index as u64)
    }
}

/// Executes one run of `spec` with the given seed.
pub fn run_single(spec: &ExperimentSpec, seed: u64) -> Result<RunRecord> {
    let mut obj =
        Objective::new(spec.function, spec.dimension)?.with_noise(spec.noise_sigma, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = match &spec.params {
        MethodParams::Pso(p) => run_pso(p, &mut obj, &mut rng)?,
        MethodParams::Hybrid(v) => run_hybrid(v, &mut obj, &mut rng)?,
        MethodParams::Spsa { spsa, cutoff_error } => {
            let theta0 =
                sample_uniform_position(obj.function().default_bounds(), spec.dimension, &mut rng);
            run_spsa(&theta0, spsa, *cutoff_error, &mut obj, &mut rng)?
        }
    };
    record.seed = Some(seed);
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// Final true fitness of each run, by run index.
    pub finals: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub evals: Vec<u64>,
    pub terminated_by: Vec<Termination>,
    /// Downsampled convergence trace of each run.
    pub traces: Vec<Vec<TracePoint>>,
}

impl ExperimentResult {
    pub fn mean_evals(&self) -> f64 {
        if self.evals.is_empty() {
            return 0.0;
        }
        self.evals.iter().map(|&e| e as f64).sum::<f64>() / self.evals.len() as f64
    }

    pub fn cutoff_hits(&self) -> usize {
        self.terminated_by
            .iter()
            .filter(|&&t| t == Termination::Cutoff)
            .count()
    }
}

/// Mean and sample standard deviation (divisor `n − 1`, zero for a single
/// value), accumulated in one pass.
pub fn summarize(finals: &[f64]) -> Result<(f64, f64)> {
    if finals.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in finals.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = finals.len();
    let sigma = if n > 1 {
        (m2 / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, sigma))
}

/// Evenly spaced subset of at most `max_rows` points, always keeping the
/// first and last.
pub fn downsample(trace: &[TracePoint], max_rows: usize) -> Vec<TracePoint> {
    let n = trace.len();
    if n <= max_rows {
        return trace.to_vec();
    }
    if max_rows < 2 {
        return trace[..max_rows].to_vec();
    }
    (0..max_rows)
        .map(|i| trace[i * (n - 1) / (max_rows - 1)])
        .collect()
}

/// Runs every repetition of `spec` (in parallel on the current rayon pool)
/// and aggregates them. The result depends only on `spec`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.runs == 0 {
        return Err(Error::InvalidParameter("runs must be positive".into()));
    }
    let records = (0..spec.runs)
        .into_par_iter()
        .map(|i| run_single(spec, spec.seed_for(i)))
        .collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = records.iter().map(|r| r.final_true_fitness).collect();
    let (mu, sigma) = summarize(&finals)?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        mu,
        sigma,
        evals: records.iter().map(|r| r.total_evals).collect(),
        terminated_by: records.iter().map(|r| r.terminated_by).collect(),
        traces: records
            .iter()
            .map(|r| downsample(&r.trace, MAX_TRACE_ROWS))
            .collect(),
        finals,
    })
}

/// Floating-point rendering used in every CSV: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn summary_row(result: &ExperimentResult) -> String {
    let s = &result.spec;
    format!(
        "{},{},{},{},{},{},{},{},{}",
        s.method,
        s.function,
        s.dimension,
        fmt_float(s.noise_sigma),
        s.runs,
        fmt_float(result.mu),
        fmt_float(result.sigma),
        fmt_float(result.mean_evals()),
        result.cutoff_hits()
    )
}

/// Provenance comment for a result: the full spec (parameters and base
/// seed) as one JSON line.
pub fn spec_comment(result: &ExperimentResult) -> String {
    format!(
        "spec: {}",
        serde_json::to_string(&result.spec).expect("spec serializes")
    )
}

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> io::Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

/// Summary CSV: `#`-prefixed provenance comments, the header, one row per
/// result in the given order.
pub fn write_summary_csv<W: Write>(
    w: &mut W,
    results: &[ExperimentResult],
    comments: &[String],
) -> io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in results {
        writeln!(w, "{}", summary_row(r))?;
    }
    Ok(())
}

/// Trace CSV for every run of one result, ordered by run then iteration.
pub fn write_trace_csv<W: Write>(
    w: &mut W,
    result: &ExperimentResult,
    comments: &[String],
) -> io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "{TRACE_HEADER}")?;
    let mut line = String::new();
    for (run, trace) in result.traces.iter().enumerate() {
        for p in trace {
            line.clear();
            let _ = write!(
                line,
                "{run},{},{},{}",
                p.iteration,
                fmt_float(p.best_fitness),
                p.eval_count
            );
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

fn write_file(
    destination: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<()> {
    let file = File::create(destination).map_err(|e| Error::io(destination, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(destination, e))
}

/// Writes the summary of `result` as CSV (one row, spec embedded as a
/// comment) or the whole result as pretty JSON.
pub fn export_results(
    result: &ExperimentResult,
    format: ExportFormat,
    destination: &Path,
) -> Result<()> {
    match format {
        ExportFormat::Csv => write_file(destination, |w| {
            write_summary_csv(w, std::slice::from_ref(result), &[spec_comment(result)])
        }),
        ExportFormat::Json => write_file(destination, |w| {
            serde_json::to_writer_pretty(&mut *w, result).map_err(io::Error::other)?;
            writeln!(w)
        }),
    }
}

/// Writes the per-run traces of `result` as CSV.
pub fn export_trace(result: &ExperimentResult, destination: &Path) -> Result<()> {
    write_file(destination, |w| {
        write_trace_csv(w, result, &[spec_comment(result)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(iteration: usize) -> TracePoint {
        TracePoint {
            iteration,
            best_fitness: 1.0 / iteration as f64,
            eval_count: 10 * iteration as u64,
        }
    }

    #[test]
    fn summarize_examples() {
        assert_eq!(summarize(&[1.0, 2.0, 3.0]).unwrap(), (2.0, 1.0));
        assert_eq!(summarize(&[5.0]).unwrap(), (5.0, 0.0));
        assert_eq!(summarize(&[0.25; 7]).unwrap(), (0.25, 0.0));
        assert!(matches!(summarize(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn downsample_keeps_ends_and_limit() {
        let trace: Vec<_> = (1..=10_000).map(tp).collect();
        let d = downsample(&trace, MAX_TRACE_ROWS);
        assert_eq!(d.len(), MAX_TRACE_ROWS);
        assert_eq!(d[0].iteration, 1);
        assert_eq!(d.last().unwrap().iteration, 10_000);
        assert!(d.windows(2).all(|w| w[0].iteration < w[1].iteration));

        let short: Vec<_> = (1..=5).map(tp).collect();
        assert_eq!(downsample(&short, MAX_TRACE_ROWS), short);
        assert!(downsample(&[], MAX_TRACE_ROWS).is_empty());

        let d = downsample(&trace[..1001], MAX_TRACE_ROWS);
        assert_eq!(d.len(), MAX_TRACE_ROWS);
        assert_eq!(d.last().unwrap().iteration, 1001);
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(2.0), "2.0000000000000000e0");
        let x = 123.456_789_012_345_67_f64;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }
}
