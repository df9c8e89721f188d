use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sparse_autolog::analysis::{
    aggregate_table, classify_effects, PairSignificance, SignificanceTable, DEFAULT_TOLERANCE,
};
use sparse_autolog::io::{self, Dimensions};
use sparse_autolog::network::pairs;
use sparse_autolog::prediction::{rolling_evaluation, score_blocks, LambdaChoice};
use sparse_autolog::report::{self, CoefficientFile, FitSummary, GroundTruthFile};
use sparse_autolog::selection::{bic_path, lambda_max};
use sparse_autolog::simulate::{simulate, SimDesign};
use sparse_autolog::{
    predict_next, CoefficientBlock, DyadDesign, FitConfig, LambdaGrid, NetworkSeries,
};

use crate::args::{
    Cli, Command, EvaluateArgs, FitArgs, GridArgs, InputArgs, PredictArgs, ReportArgs,
    SimulateArgs, SolverArgs,
};
use crate::output::{hash_input, require_dir, InputHash, Manifest, Outputs};
use crate::CliError;

const DEFAULT_GRID: (f64, f64, usize) = (3.5, 25.0, 29);
const DEFAULT_HOLDOUT: usize = 10;

/// Settings read from `--config`; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    simulate: Option<SimDesign>,
    fit: Option<FitConfig>,
    lambda: Option<f64>,
    grid: Option<Vec<f64>>,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_count: Option<usize>,
    holdout: Option<usize>,
    workers: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = load_config(cli.config.as_deref())?;
    let workers = cli.workers.or(file.workers);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w as usize);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => cmd_simulate(a, &file),
        Command::Fit(a) => cmd_fit(a, &file),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a, &file),
        Command::Report(a) => cmd_report(a),
    })
}

fn finish<C: Serialize>(
    mut out: Outputs,
    dir: &Path,
    command: &'static str,
    config: C,
    inputs: Vec<InputHash>,
) -> Result<(), CliError> {
    let mut names = out.names();
    names.push("manifest.json".into());
    let manifest = Manifest {
        tool: "autolog",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs,
        outputs: names,
    };
    out.add("manifest.json", manifest.to_json()?);
    out.commit(dir)
}

fn cmd_simulate(a: SimulateArgs, file: &FileConfig) -> Result<(), CliError> {
    require_dir(&a.out)?;
    let mut design = file.simulate.clone().unwrap_or_default();
    if let Some(n) = a.n {
        design.n = n;
    }
    if let Some(t) = a.slices {
        design.slices = t;
    }
    if let Some(s) = a.seed {
        design.seed = s;
    }
    if let Some(g) = a.groups {
        if g != design.groups
            && design
                .xi_magnitudes
                .iter()
                .all(|&m| m == design.xi_magnitudes[0])
        {
            let m = design.xi_magnitudes.first().copied().unwrap_or(1.0);
            design.xi_magnitudes = vec![m; g];
        }
        design.groups = g;
    }
    let (series, truth) = simulate(&design)?;
    log::info!(
        "simulated {} slices over {} nodes, mean links {:.1}",
        series.len(),
        series.n(),
        series.mean_links()
    );
    let mut out = Outputs::default();
    let mut edges = Vec::new();
    io::write_edge_list(&series, &mut edges)?;
    out.add("edges.csv", edges);
    out.add(
        "truth.json",
        report::ground_truth_json(&GroundTruthFile::new(&design, &truth)?)?,
    );
    if a.dense {
        for t in 0..series.len() {
            let text: String = series
                .dense_slice(t)
                .iter()
                .map(|row| {
                    let cells: Vec<String> = row.iter().map(u8::to_string).collect();
                    cells.join(",") + "\n"
                })
                .collect();
            out.add(format!("dense/slice_{:04}.csv", t + 1), text);
        }
    }
    finish(out, &a.out, "simulate", &design, Vec::new())
}

fn load_series(input: &InputArgs) -> Result<NetworkSeries, CliError> {
    let path = &input.input;
    if !path.exists() {
        return Err(CliError::Data(format!(
            "input {} does not exist",
            path.display()
        )));
    }
    let series = if path.is_dir() {
        io::load_dense_dir(path)?
    } else if input.labeled {
        io::read_labeled_edge_list(
            fs::File::open(path).map_err(|e| CliError::Data(e.to_string()))?,
            input.slices,
        )?
    } else {
        io::load_edge_list(
            path,
            Dimensions {
                nodes: input.nodes,
                slices: input.slices,
            },
        )?
    };
    if let Some(n) = input.nodes {
        if n != series.n() {
            return Err(CliError::Data(format!(
                "series has {} nodes, expected {n}",
                series.n()
            )));
        }
    }
    Ok(series)
}

fn fit_config(solver: &SolverArgs, file: &FileConfig) -> Result<FitConfig, CliError> {
    let mut cfg = file.fit.clone().unwrap_or_default();
    if let Some(v) = solver.max_sweeps {
        cfg.max_sweeps = v;
    }
    if let Some(v) = solver.objective_tolerance {
        cfg.objective_tolerance = v;
    }
    if let Some(v) = solver.coefficient_cap {
        cfg.coefficient_cap = v;
    }
    if let Some(v) = solver.kkt_tolerance {
        cfg.kkt_tolerance = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn lambda_grid(g: &GridArgs, file: &FileConfig) -> Result<LambdaGrid, CliError> {
    if let Some(l) = g.lambda.or(file.lambda) {
        return Ok(LambdaGrid::new(vec![l])?);
    }
    if let Some(values) = g.grid.clone().or_else(|| file.grid.clone()) {
        let mut values = values;
        values.sort_by(f64::total_cmp);
        return Ok(LambdaGrid::new(values)?);
    }
    let lo = g.grid_min.or(file.grid_min).unwrap_or(DEFAULT_GRID.0);
    let hi = g.grid_max.or(file.grid_max).unwrap_or(DEFAULT_GRID.1);
    let count = g.grid_count.or(file.grid_count).unwrap_or(DEFAULT_GRID.2);
    Ok(LambdaGrid::log_spaced(lo, hi, count)?)
}

fn classify_all(
    series: &NetworkSeries,
    blocks: &[CoefficientBlock],
) -> Result<Vec<PairSignificance>, CliError> {
    let all: Vec<(usize, (usize, usize))> = pairs(series.n()).enumerate().collect();
    let reports: Result<Vec<_>, sparse_autolog::Error> = all
        .par_iter()
        .map(|&(p, (i, j))| {
            let design = DyadDesign::build(series, i, j)?;
            classify_effects(&design, &blocks[p], DEFAULT_TOLERANCE)
        })
        .collect();
    Ok(reports?)
}

fn significance_outputs(
    out: &mut Outputs,
    series: &NetworkSeries,
    blocks: &[CoefficientBlock],
) -> Result<SignificanceTable, CliError> {
    let reports = classify_all(series, blocks)?;
    let table = aggregate_table(&reports, series.n())?;
    out.add("table.csv", report::table_csv(&table)?);
    out.add(
        "significance.json",
        report::significance_json(&table, &reports)?,
    );
    Ok(table)
}

#[derive(Serialize)]
struct FitEcho<'a> {
    input: &'a Path,
    labeled: bool,
    grid: &'a [f64],
    fit: &'a FitConfig,
}

fn cmd_fit(a: FitArgs, file: &FileConfig) -> Result<(), CliError> {
    require_dir(&a.out)?;
    let series = load_series(&a.input)?;
    let cfg = fit_config(&a.solver, file)?;
    let grid = lambda_grid(&a.grid, file)?;
    let path = bic_path(&series, &grid, &cfg)?;
    for p in path.points.iter().filter(|p| !p.is_valid()) {
        log::warn!("lambda {} invalidated: {}", p.lambda, p.failures.join("; "));
    }
    let top = lambda_max(&series, &cfg)?;
    let best = path.selected_point();
    let blocks = best.blocks();

    let mut out = Outputs::default();
    out.add("path.csv", report::path_csv(&path)?);
    let coefficients = CoefficientFile {
        labels: series.labels().map(<[String]>::to_vec),
        ..CoefficientFile::from_blocks(series.n(), Some(best.lambda), &blocks)?
    };
    out.add(
        "coefficients.json",
        report::coefficients_json(&coefficients)?,
    );
    out.add("diagnostics.jsonl", report::diagnostics_jsonl(&best.fits)?);
    let table = significance_outputs(&mut out, &series, &blocks)?;
    let summary = FitSummary::new(series.n(), series.len(), &path, top, &table);
    out.add(
        "summary.json",
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?,
    );
    println!(
        "selected lambda {} (BIC {}), {} of {} pairs with nonzero slopes",
        summary.selected_lambda, summary.selected_bic, table.qualifying_pairs, table.total_pairs
    );
    let echo = FitEcho {
        input: &a.input.input,
        labeled: a.input.labeled,
        grid: grid.values(),
        fit: &cfg,
    };
    finish(out, &a.out, "fit", echo, hash_input(&a.input.input)?)
}

fn load_blocks(path: &Path, series: &NetworkSeries) -> Result<Vec<CoefficientBlock>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file = report::parse_coefficients(&text)?;
    if file.n != series.n() {
        return Err(CliError::Data(format!(
            "coefficients are for {} nodes, series has {}",
            file.n,
            series.n()
        )));
    }
    Ok(file.to_blocks()?)
}

#[derive(Serialize)]
struct PredictEcho<'a> {
    input: &'a Path,
    coefficients: &'a Path,
}

fn cmd_predict(a: PredictArgs) -> Result<(), CliError> {
    require_dir(&a.out)?;
    let series = load_series(&a.input)?;
    let blocks = load_blocks(&a.coefficients, &series)?;
    let pred = predict_next(&series, &blocks)?;
    let mut out = Outputs::default();
    out.add("predictions.csv", report::predictions_csv(&pred)?);
    let mut inputs = hash_input(&a.input.input)?;
    inputs.extend(hash_input(&a.coefficients)?);
    let echo = PredictEcho {
        input: &a.input.input,
        coefficients: &a.coefficients,
    };
    finish(out, &a.out, "predict", echo, inputs)
}

#[derive(Serialize)]
struct EvaluateEcho<'a> {
    input: &'a Path,
    holdout: usize,
    lambda: Option<f64>,
    grid: Option<&'a [f64]>,
    fit: &'a FitConfig,
    truth: Option<&'a Path>,
}

#[derive(Serialize)]
struct OriginSummary {
    origin: usize,
    train_slices: usize,
    auc: Option<f64>,
    truth_auc: Option<f64>,
}

#[derive(Serialize)]
struct EvaluationSummary {
    lambda: f64,
    mean_auc: Option<f64>,
    degenerate_origins: Vec<usize>,
    origins: Vec<OriginSummary>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn cmd_evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<(), CliError> {
    require_dir(&a.out)?;
    let holdout = a.holdout.or(file.holdout).unwrap_or(DEFAULT_HOLDOUT);
    if holdout == 0 {
        return Err(CliError::Usage("--holdout must be at least 1".into()));
    }
    let series = load_series(&a.input)?;
    if holdout + 2 > series.len() {
        return Err(CliError::Usage(format!(
            "--holdout {holdout} leaves fewer than two training slices of {}",
            series.len()
        )));
    }
    let cfg = fit_config(&a.solver, file)?;
    let fixed = a.grid.lambda.or(file.lambda);
    let grid = lambda_grid(&a.grid, file)?;
    let choice = match fixed {
        Some(l) => LambdaChoice::Fixed(l),
        None => LambdaChoice::Grid(grid.clone()),
    };
    let truth = a
        .truth
        .as_ref()
        .map(|p| -> Result<_, CliError> {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let truth = report::parse_ground_truth(&text)?.to_truth()?;
            if truth.n != series.n() {
                return Err(CliError::Data(
                    "ground truth does not match the series".into(),
                ));
            }
            Ok(truth)
        })
        .transpose()?;

    let result = rolling_evaluation(&series, &choice, &cfg, holdout)?;
    let truth_aucs: Option<Vec<Option<f64>>> = truth
        .as_ref()
        .map(|t| {
            result
                .origins
                .iter()
                .map(|o| {
                    Ok(score_blocks(&series, o.train_len, &t.blocks)?
                        .1
                        .map(|r| r.auc))
                })
                .collect::<Result<_, CliError>>()
        })
        .transpose()?;

    let mut out = Outputs::default();
    let mut degenerate = Vec::new();
    for o in &result.origins {
        let origin = o.predictions.horizon + 1;
        match &o.roc {
            Some(roc) => out.add(format!("roc_{origin:04}.csv"), report::roc_csv(roc)?),
            None => {
                log::warn!("held-out slice {origin} has a single class; no ROC written");
                degenerate.push(origin);
            }
        }
    }
    out.add("auc.csv", report::auc_csv(&result, truth_aucs.as_deref())?);
    let summary = EvaluationSummary {
        lambda: result.lambda,
        mean_auc: mean(result.origins.iter().map(|o| o.auc())),
        degenerate_origins: degenerate,
        origins: result
            .origins
            .iter()
            .enumerate()
            .map(|(g, o)| OriginSummary {
                origin: o.predictions.horizon + 1,
                train_slices: o.train_len,
                auc: o.auc(),
                truth_auc: truth_aucs.as_ref().and_then(|t| t[g]),
            })
            .collect(),
    };
    out.add(
        "evaluation.json",
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?,
    );
    match summary.mean_auc {
        Some(m) => println!(
            "lambda {}, mean AUC {m:.4} over {holdout} held-out slices",
            result.lambda
        ),
        None => println!("lambda {}, no scorable held-out slice", result.lambda),
    }
    let mut inputs = hash_input(&a.input.input)?;
    if let Some(p) = &a.truth {
        inputs.extend(hash_input(p)?);
    }
    let echo = EvaluateEcho {
        input: &a.input.input,
        holdout,
        lambda: fixed,
        grid: fixed.is_none().then(|| grid.values()),
        fit: &cfg,
        truth: a.truth.as_deref(),
    };
    finish(out, &a.out, "evaluate", echo, inputs)
}

#[derive(Serialize)]
struct ReportEcho<'a> {
    input: &'a Path,
    coefficients: &'a Path,
    tolerance: f64,
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    require_dir(&a.out)?;
    let series = load_series(&a.input)?;
    let blocks = load_blocks(&a.coefficients, &series)?;
    let mut out = Outputs::default();
    let table = significance_outputs(&mut out, &series, &blocks)?;
    println!(
        "{} of {} pairs with nonzero slopes",
        table.qualifying_pairs, table.total_pairs
    );
    for row in &table.rows {
        let pct = row
            .percent_non_present()
            .map_or_else(|| "-".to_string(), |p| format!("{p:.1}%"));
        println!(
            "{:<30} {:>6} effects  {:>7} non-present",
            row.category.name(),
            row.effects,
            pct
        );
    }
    let mut inputs = hash_input(&a.input.input)?;
    inputs.extend(hash_input(&a.coefficients)?);
    let echo = ReportEcho {
        input: &a.input.input,
        coefficients: &a.coefficients,
        tolerance: DEFAULT_TOLERANCE,
    };
    finish(out, &a.out, "report", echo, inputs)
}
