//! Monte-Carlo runner for [`SimulationPlan`]s.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::plan::{SimulationPlan, SourceFamily};
use crate::codes::Code;
use crate::error::Result;
use crate::hypothesis::{
    homogeneity_test, identity_test, independence_test, serial_independence_test,
    serialize_real, KnownSource, TestKind, TestReport,
};
use crate::sample::{Alphabet, ProductAlphabet, Sample, Symbol};
use crate::sources::{parity_markov_with, replicate_rng, MarkovSpec};

/// Tally of one (parameter, length) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub param: f64,
    pub length: usize,
    pub rejections: usize,
    pub replicates: usize,
    pub rejection_rate: f64,
    #[serde(serialize_with = "serialize_real")]
    pub mean_statistic_bits: f64,
    #[serde(serialize_with = "serialize_real")]
    pub mean_threshold_bits: f64,
    /// First error met in the cell; failed replicates count as neither
    /// rejections nor acceptances.
    pub error: Option<String>,
}

impl CellResult {
    /// Majority decision of the cell.
    pub fn majority_rejects(&self) -> bool {
        2 * self.rejections > self.replicates
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub source: SourceFamily,
    pub test: TestKind,
    pub code: String,
    pub alpha: f64,
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
    pub params: Vec<f64>,
    pub lengths: Vec<usize>,
    /// Row-major: all lengths of the first parameter, then the next.
    pub cells: Vec<CellResult>,
}

impl GridResult {
    pub fn cell(&self, param_index: usize, length_index: usize) -> &CellResult {
        &self.cells[param_index * self.lengths.len() + length_index]
    }
}

fn bernoulli(p0: f64, length: usize, rng: &mut ChaCha8Rng) -> Vec<Symbol> {
    (0..length)
        .map(|_| if rng.random::<f64>() < p0 { 0 } else { 1 })
        .collect()
}

fn draw_binary(plan: &SimulationPlan, param: f64, length: usize, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let symbols = match plan.source {
        SourceFamily::Bernoulli => bernoulli(param, length, rng),
        SourceFamily::Markov1 => MarkovSpec::binary_first_order(param, plan.p0_given_1, 0)?
            .sample_with(length, rng),
        SourceFamily::Parity => parity_markov_with(param, length, rng),
        SourceFamily::CoupledPair => {
            let product = ProductAlphabet::from_sizes(&[2, 2])?;
            let joint = (0..length)
                .map(|_| {
                    let first: Symbol = rng.random_range(0..2);
                    let second = if rng.random::<f64>() < param {
                        first
                    } else {
                        rng.random_range(0..2)
                    };
                    2 * first + second
                })
                .collect();
            return Sample::over_product(product, vec![joint]);
        }
    };
    Sample::single(Alphabet::binary(), symbols)
}

/// One replicate: draws the data from `rng` and runs the plan's test.
pub fn run_replicate(
    plan: &SimulationPlan,
    code: &dyn Code,
    param: f64,
    length: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TestReport> {
    match plan.test {
        TestKind::Identity => {
            let null = match plan.null_p0 {
                Some(p) => KnownSource::iid(vec![p, 1.0 - p])?,
                None => KnownSource::uniform(2)?,
            };
            identity_test(&draw_binary(plan, param, length, rng)?, &null, code, plan.alpha)
        }
        TestKind::Serial => serial_independence_test(
            &draw_binary(plan, param, length, rng)?,
            plan.order,
            code,
            plan.alpha,
        ),
        TestKind::Independence => independence_test(
            &draw_binary(plan, param, length, rng)?,
            plan.order,
            code,
            plan.alpha,
        ),
        TestKind::Homogeneity | TestKind::Partition => {
            let samples = (0..plan.samples)
                .map(|i| {
                    let p = match plan.alt_param {
                        Some(alt) if i + 1 == plan.samples => alt,
                        _ => param,
                    };
                    draw_binary(plan, p, length, rng)
                })
                .collect::<Result<Vec<_>>>()?;
            homogeneity_test(&samples, plan.order, code, plan.alpha)
        }
    }
}

/// Stream id of replicate `replicate` in grid cell `cell`.
pub fn stream_id(cell: usize, replicate: usize) -> u64 {
    ((cell as u64) << 32) | replicate as u64
}

/// Runs every replicate of every cell in parallel.
///
/// Replicate `k` of cell `c` draws from its own ChaCha stream
/// [`stream_id`]`(c, k)` under the plan seed, and results are reduced in a
/// fixed order, so the output does not depend on the thread count.
pub fn run_simulation(plan: &SimulationPlan) -> Result<GridResult> {
    plan.validate()?;
    let code = plan.code.build(None)?;
    let cells: Vec<(f64, usize)> = plan
        .params
        .iter()
        .flat_map(|&p| plan.lengths.iter().map(move |&t| (p, t)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..plan.replicates).map(move |k| (c, k)))
        .collect();
    let outcomes: Vec<Result<TestReport>> = jobs
        .par_iter()
        .map(|&(c, k)| {
            let (param, length) = cells[c];
            let mut rng = replicate_rng(plan.seed, stream_id(c, k));
            run_replicate(plan, code.as_ref(), param, length, &mut rng)
        })
        .collect();

    let results = cells
        .iter()
        .zip(outcomes.chunks(plan.replicates))
        .map(|(&(param, length), reps)| {
            let mut error = None;
            let (mut rejections, mut ok, mut stat, mut thr) = (0, 0, 0.0, 0.0);
            for rep in reps {
                match rep {
                    Ok(r) => {
                        ok += 1;
                        rejections += r.is_reject() as usize;
                        stat += r.statistic_bits;
                        thr += r.threshold_bits;
                    }
                    Err(e) => {
                        error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            CellResult {
                param,
                length,
                rejections,
                replicates: plan.replicates,
                rejection_rate: rejections as f64 / plan.replicates as f64,
                mean_statistic_bits: stat / ok as f64,
                mean_threshold_bits: thr / ok as f64,
                error,
            }
        })
        .collect();

    Ok(GridResult {
        source: plan.source,
        test: plan.test,
        code: code.id(),
        alpha: plan.alpha,
        m: plan.order,
        replicates: plan.replicates,
        seed: plan.seed,
        params: plan.params.clone(),
        lengths: plan.lengths.clone(),
        cells: results,
    })
}
