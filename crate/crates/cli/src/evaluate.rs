//! Fit-and-score workflows shared by the commands and the test suites.

use hebart_core::data::holdout_split;
use hebart_core::predict::{mean_ci, predict_rows, rmse};
use hebart_core::sampler::ChainConfig;
use hebart_core::{fit, Dataset, FittedModel, Mode, Prediction, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{Interval, Rmse, Summary};
use crate::error::{CliError, CliResult};
use crate::settings::RunConfig;

// Stream ids: 0 drives a single fit, 1 the holdout split, 2 the fold
// shuffle; fold chains start at FOLD_STREAM_BASE.
const FIT_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;
const FOLD_SHUFFLE_STREAM: u64 = 2;
const FOLD_STREAM_BASE: u64 = 16;

pub struct Evaluation {
    pub predictions: Vec<Prediction>,
    pub rmse: Rmse,
}

/// Predict every row of `dataset` (groups without training rows fall back
/// to node means) and score against its response.
pub fn evaluate(model: &FittedModel, dataset: &Dataset, level: f64) -> CliResult<Evaluation> {
    let rows: Vec<Vec<f64>> = (0..dataset.n_rows()).map(|i| dataset.row(i)).collect();
    let groups: Vec<Option<usize>> = dataset
        .groups()
        .iter()
        .map(|&g| model.group_index(dataset.labels().label(g)))
        .collect();
    let predictions = predict_rows(model, &rows, &groups, level, model.hyperparams.rng_seed)?;
    let rmse = score(model, dataset, &predictions)?;
    Ok(Evaluation { predictions, rmse })
}

fn score(model: &FittedModel, dataset: &Dataset, predictions: &[Prediction]) -> CliResult<Rmse> {
    let t = model.transform;
    let points: Vec<f64> = predictions.iter().map(|p| p.point).collect();
    let truth = dataset.raw_response();
    let standardized: Vec<f64> = points.iter().map(|&p| t.apply(p)).collect();
    let truth_std: Vec<f64> = truth.iter().map(|&y| t.apply(y)).collect();
    Ok(Rmse {
        standardized: rmse(&standardized, &truth_std)?,
        raw: rmse(&points, &truth)?,
    })
}

pub struct FitReport {
    pub model: FittedModel,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub train: Evaluation,
    pub test: Option<Evaluation>,
    pub summary: Summary,
}

/// Fit on the rows left after holding out `holdout_groups` and a further
/// `holdout_fraction` of the remaining rows, then score both parts.
pub fn fit_split(
    dataset: &Dataset,
    config: &RunConfig,
    holdout_groups: &[usize],
    holdout_fraction: f64,
    level: f64,
) -> CliResult<FitReport> {
    let seed = config.hyperparams.rng_seed;
    let (train_rows, test_rows) = if holdout_groups.is_empty() && holdout_fraction == 0.0 {
        ((0..dataset.n_rows()).collect(), Vec::new())
    } else {
        holdout_split(
            dataset,
            holdout_groups,
            holdout_fraction,
            &mut RngStream::new(seed, SPLIT_STREAM),
        )?
    };
    let train_set = dataset.subset(&train_rows)?;
    let chain = ChainConfig::new(config.hyperparams.clone(), config.mode);
    let model = fit(&train_set, &chain, &mut RngStream::new(seed, FIT_STREAM))?;
    let train = evaluate(&model, &train_set, level)?;
    let test = if test_rows.is_empty() {
        None
    } else {
        Some(evaluate(&model, &dataset.subset(&test_rows)?, level)?)
    };
    let summary = summarize(&model, train_rows.len(), &train, test.as_ref());
    Ok(FitReport {
        model,
        train_rows,
        test_rows,
        train,
        test,
        summary,
    })
}

pub fn summarize(
    model: &FittedModel,
    n_train: usize,
    train: &Evaluation,
    test: Option<&Evaluation>,
) -> Summary {
    let d = &model.draws;
    let trace = &d.trace;
    let moves: usize = trace.iter().map(|r| r.tree_accepted.len()).sum();
    let accepted: usize = trace
        .iter()
        .map(|r| r.tree_accepted.iter().filter(|&&a| a).count())
        .sum();
    let k1_steps: Vec<bool> = trace.iter().filter_map(|r| r.k1_accepted).collect();
    let hierarchical = model.mode == Mode::Hierarchical;
    Summary {
        mode: model.mode.label().to_string(),
        n_train,
        n_test: test.map_or(0, |t| t.predictions.len()),
        draws: d.draw_count(),
        response_center: model.transform.center,
        response_scale: model.transform.scale,
        tau: Interval::of(&d.taus),
        k1: if hierarchical { Interval::of(&d.k1s) } else { None },
        intra_group_sd: if hierarchical {
            Interval::of(&d.intra_group_sd(model.transform.scale))
        } else {
            None
        },
        tree_acceptance_rate: if moves == 0 {
            0.0
        } else {
            accepted as f64 / moves as f64
        },
        k1_acceptance_rate: (!k1_steps.is_empty())
            .then(|| k1_steps.iter().filter(|&&a| a).count() as f64 / k1_steps.len() as f64),
        train_rmse: train.rmse,
        test_rmse: test.map(|t| t.rmse),
    }
}

/// Seeded shuffle of `0..n` cut into `k` contiguous blocks; the first
/// `n % k` blocks hold one extra row. Each block is sorted.
pub fn fold_partition(n: usize, k: usize, seed: u64) -> CliResult<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(CliError::Usage(format!(
            "folds must lie in [2, {n}] for {n} rows, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    hebart_core::data::shuffle(&mut order, &mut RngStream::new(seed, FOLD_SHUFFLE_STREAM));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut block = order[start..start + len].to_vec();
        block.sort_unstable();
        folds.push(block);
        start += len;
    }
    Ok(folds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub method: String,
    pub n_train: usize,
    pub n_test: usize,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub train_mean: f64,
    pub train_ci: [f64; 2],
    pub test_mean: f64,
    pub test_ci: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub folds: Vec<FoldResult>,
    pub summaries: Vec<MethodSummary>,
}

impl CrossvalReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Per-fold rows followed by one `mean [lower, upper]` line per method.
    pub fn to_table(&self) -> String {
        let mut out = String::from("fold,method,n_train,n_test,train_rmse,test_rmse\n");
        for f in &self.folds {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6}\n",
                f.fold, f.method, f.n_train, f.n_test, f.train_rmse, f.test_rmse
            ));
        }
        out.push('\n');
        for s in &self.summaries {
            out.push_str(&format!(
                "{:<8} test {:.3} [{:.3},{:.3}]  train {:.3} [{:.3},{:.3}]\n",
                s.method,
                s.test_mean,
                s.test_ci[0],
                s.test_ci[1],
                s.train_mean,
                s.train_ci[0],
                s.train_ci[1]
            ));
        }
        out
    }
}

/// k-fold cross-validation of `config.mode`, plus standard BART when
/// `baseline` is set. RMSEs are on the standardized scale. Folds run on a
/// pool of `jobs` threads; results do not depend on the pool size.
pub fn crossval(
    dataset: &Dataset,
    config: &RunConfig,
    folds: usize,
    baseline: bool,
    jobs: usize,
) -> CliResult<CrossvalReport> {
    let seed = config.hyperparams.rng_seed;
    let blocks = fold_partition(dataset.n_rows(), folds, seed)?;
    let mut modes = vec![config.mode];
    if baseline && config.mode != Mode::Bart {
        modes.push(Mode::Bart);
    }
    let tasks: Vec<(usize, usize, Mode)> = (0..folds)
        .flat_map(|f| modes.iter().enumerate().map(move |(m, &mode)| (f, m, mode)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<CliResult<FoldResult>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(f, m, mode)| {
                let test_rows = &blocks[f];
                let train_rows: Vec<usize> =
                    (0..dataset.n_rows()).filter(|i| test_rows.binary_search(i).is_err()).collect();
                let train_set = dataset.subset(&train_rows)?;
                let test_set = dataset.subset(test_rows)?;
                let chain = ChainConfig::new(config.hyperparams.clone(), mode);
                let stream = FOLD_STREAM_BASE + (f * modes.len() + m) as u64;
                let model = fit(&train_set, &chain, &mut RngStream::new(seed, stream))?;
                let train = evaluate(&model, &train_set, 0.95)?;
                let test = evaluate(&model, &test_set, 0.95)?;
                log::info!(
                    "fold {} {}: test rmse {:.4}",
                    f + 1,
                    mode.label(),
                    test.rmse.standardized
                );
                Ok(FoldResult {
                    fold: f + 1,
                    method: mode.label().to_string(),
                    n_train: train_rows.len(),
                    n_test: test_rows.len(),
                    train_rmse: train.rmse.standardized,
                    test_rmse: test.rmse.standardized,
                })
            })
            .collect()
    });
    let folds: Vec<FoldResult> = results.into_iter().collect::<CliResult<_>>()?;
    let summaries = modes
        .iter()
        .map(|mode| {
            let label = mode.label();
            let mine: Vec<&FoldResult> = folds.iter().filter(|f| f.method == label).collect();
            let train: Vec<f64> = mine.iter().map(|f| f.train_rmse).collect();
            let test: Vec<f64> = mine.iter().map(|f| f.test_rmse).collect();
            let (tm, th) = mean_ci(&train);
            let (sm, sh) = mean_ci(&test);
            MethodSummary {
                method: label.to_string(),
                train_mean: tm,
                train_ci: [tm - th, tm + th],
                test_mean: sm,
                test_ci: [sm - sh, sm + sh],
            }
        })
        .collect();
    Ok(CrossvalReport { folds, summaries })
}
