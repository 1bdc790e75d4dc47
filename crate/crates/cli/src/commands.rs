use std::path::{Path, PathBuf};

use hebart_core::data::CsvTable;
use hebart_core::predict::rmse;
use hebart_core::{ingest_csv, predict_rows, simulate_eq8, Dataset, RngStream};

use crate::args::{CrossvalArgs, DataArgs, FitArgs, PredictArgs, SimulateArgs};
use crate::artifacts::{
    read_model, write_draws, write_json, write_model, write_predictions, CONFIG_FILE, DRAWS_FILE,
    MODEL_FILE, SUMMARY_FILE,
};
use crate::error::{CliError, CliResult};
use crate::evaluate::{crossval, fit_split};
use crate::settings::RunConfig;

pub const TEST_PREDICTIONS_FILE: &str = "test_predictions.csv";

fn load(data: &DataArgs) -> CliResult<Dataset> {
    Ok(ingest_csv(&data.data, &data.response, &data.group, &data.covariates)?)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let config = RunConfig::resolve(args.model.config.as_deref(), &args.model.overrides())?;
    let dataset = load(&args.data)?;
    let holdout = args
        .holdout_groups
        .iter()
        .map(|label| {
            dataset
                .labels()
                .index_of(label)
                .ok_or_else(|| CliError::Usage(format!("holdout group `{label}` not found in the data")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = fit_split(&dataset, &config, &holdout, args.holdout_fraction, args.level)?;

    create_dir(&args.out)?;
    config.save(&args.out.join(CONFIG_FILE))?;
    write_draws(&report.model.draws.trace, &args.out.join(DRAWS_FILE))?;
    write_model(&report.model, &args.out.join(MODEL_FILE))?;
    write_json(&report.summary, &args.out.join(SUMMARY_FILE))?;
    if let Some(test) = &report.test {
        let labels: Vec<Option<String>> = report
            .test_rows
            .iter()
            .map(|&i| Some(dataset.labels().label(dataset.groups()[i]).to_string()))
            .collect();
        write_predictions(&test.predictions, &labels, &args.out.join(TEST_PREDICTIONS_FILE))?;
    }
    let s = &report.summary;
    println!(
        "{}: {} train rows, {} draws, train rmse {:.4} (raw {:.4})",
        s.mode, s.n_train, s.draws, s.train_rmse.standardized, s.train_rmse.raw
    );
    if let Some(t) = s.test_rmse {
        println!("test rmse {:.4} (raw {:.4}) on {} rows", t.standardized, t.raw, s.n_test);
    }
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult<()> {
    let model = read_model(&args.model.join(MODEL_FILE))?;
    let table = CsvTable::read(&args.data)?;
    let columns = model
        .covariate_names
        .iter()
        .map(|c| table.numbers(c))
        .collect::<hebart_core::Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = (0..table.n_rows())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let labels: Vec<Option<String>> = match &args.group {
        Some(col) => table.strings(col)?.into_iter().map(Some).collect(),
        None => vec![None; table.n_rows()],
    };
    let groups: Vec<Option<usize>> = labels
        .iter()
        .map(|l| l.as_deref().and_then(|l| model.group_index(l)))
        .collect();
    let seed = args.seed.unwrap_or(model.hyperparams.rng_seed);
    let predictions = predict_rows(&model, &rows, &groups, args.level, seed)?;
    write_predictions(&predictions, &labels, &args.out)?;
    if let Some(col) = &args.response {
        let truth = table.numbers(col)?;
        let points: Vec<f64> = predictions.iter().map(|p| p.point).collect();
        let t = model.transform;
        let std_points: Vec<f64> = points.iter().map(|&p| t.apply(p)).collect();
        let std_truth: Vec<f64> = truth.iter().map(|&y| t.apply(y)).collect();
        println!(
            "rmse {} (raw {})",
            rmse(&std_points, &std_truth)?,
            rmse(&points, &truth)?
        );
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let (dataset, truth) = simulate_eq8(
        args.n,
        args.groups,
        args.trees,
        args.k1,
        args.k2,
        (args.tau_shape, args.tau_rate),
        &mut RngStream::new(args.seed, 0),
    )
    .map_err(|e| match e {
        hebart_core::Error::InvalidParameter(m) => CliError::Usage(m),
        e => e.into(),
    })?;
    dataset.write_csv(&args.out, hebart_core::simulate::GROUP)?;
    let truth_path = args.truth.clone().unwrap_or_else(|| sidecar_path(&args.out));
    truth.write(&truth_path)?;
    println!(
        "wrote {} rows to {}, truth to {}",
        dataset.n_rows(),
        args.out.display(),
        truth_path.display()
    );
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".truth");
    PathBuf::from(s)
}

pub fn cmd_crossval(args: &CrossvalArgs) -> CliResult<()> {
    let config = RunConfig::resolve(args.model.config.as_deref(), &args.model.overrides())?;
    let dataset = load(&args.data)?;
    if args.folds > dataset.n_rows() {
        return Err(CliError::Usage(format!(
            "{} folds requested for {} rows",
            args.folds,
            dataset.n_rows()
        )));
    }
    let jobs = args.jobs.unwrap_or(0);
    let report = crossval(&dataset, &config, args.folds, args.baseline.is_some(), jobs)?;
    let table = report.to_table();
    print!("{table}");
    if let Some(out) = &args.out {
        std::fs::write(out, &table).map_err(CliError::io(out))?;
    }
    Ok(())
}
