//! The four subcommands. Each writes its outputs plus `manifest.json` into
//! the output directory.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Config, Source};
use super::manifest::{digest_file, RunManifest};
use super::report::aggregate;
use crate::completion::{build_semisynthetic, GroundTruth};
use crate::dataset::{parse_item_groups, parse_ratings, GroupMapping, RatingDataset};
use crate::error::{Error, Result};
use crate::factorization::{init_model, train};
use crate::metrics::TraceTable;
use crate::seed::{self, stream};
use crate::simulation::{assemble_trace, simulate_runs, NoObserver};
use crate::stats::{ranking_assumption_test, RankingTestReport};
use crate::synthetic::planted_world;

pub const GROUND_TRUTH_FILE: &str = "ground_truth.bin";
pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

/// Dataset, groups and (for synthetic sources) the planted ground truth.
pub struct LoadedData {
    pub dataset: RatingDataset,
    pub mapping: GroupMapping,
    pub planted_truth: Option<GroundTruth>,
    pub inputs: Vec<PathBuf>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn load_data(config: &Config) -> Result<LoadedData> {
    match &config.source {
        Source::MovieLens { ratings, movies } => {
            let dataset = parse_ratings(open(ratings)?)?;
            let mapping = parse_item_groups(open(movies)?, dataset.item_ids())?;
            log::info!(
                "loaded {} ratings, {} users, {} items, {} groups",
                dataset.observations().len(),
                dataset.num_users(),
                dataset.num_items(),
                mapping.num_groups()
            );
            Ok(LoadedData {
                dataset,
                mapping,
                planted_truth: None,
                inputs: vec![ratings.clone(), movies.clone()],
            })
        }
        Source::Synthetic(params) => {
            let w = planted_world(params)?;
            Ok(LoadedData {
                dataset: w.dataset,
                mapping: w.mapping,
                planted_truth: Some(w.truth),
                inputs: Vec::new(),
            })
        }
    }
}

/// Ground truth for `data`: loaded from `config.ground_truth`, the planted
/// one for synthetic sources, or built by matrix completion.
pub fn ground_truth(config: &Config, data: &LoadedData) -> Result<GroundTruth> {
    let truth = if let Some(path) = &config.ground_truth {
        GroundTruth::read_from(open(path)?)?
    } else if let Some(t) = &data.planted_truth {
        t.clone()
    } else {
        let hp = config
            .simulation
            .hyperparams
            .with_seed(seed::derive(config.simulation.master_seed, stream::COMPLETION));
        log::info!("completing {}x{} matrix", data.dataset.num_users(), data.dataset.num_items());
        build_semisynthetic(&data.dataset, &hp)?
    };
    if truth.num_users() != data.dataset.num_users() || truth.num_items() != data.dataset.num_items() {
        return Err(Error::Data(format!(
            "ground truth is {}x{} but the dataset is {}x{}",
            truth.num_users(),
            truth.num_items(),
            data.dataset.num_users(),
            data.dataset.num_items()
        )));
    }
    Ok(truth)
}

fn finish(mut manifest: RunManifest, inputs: &[PathBuf], outputs: &[PathBuf], out: &Path, start: Instant) -> Result<()> {
    for p in inputs {
        manifest.inputs.push(digest_file(p)?);
    }
    for p in outputs {
        manifest.outputs.push(digest_file(p)?);
    }
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&out.join(MANIFEST_FILE))
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

pub fn cmd_complete(config: &Config, out: &Path) -> Result<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    let data = load_data(config)?;
    let truth = ground_truth(config, &data)?;
    let path = out.join(GROUND_TRUTH_FILE);
    let mut w = create(&path)?;
    truth.write_to(&mut w).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    let mut inputs = data.inputs.clone();
    inputs.extend(config.ground_truth.clone());
    let manifest = RunManifest::new("complete", config.to_text(), config.simulation.master_seed, vec![truth.seed]);
    finish(manifest, &inputs, &[path], out, start)
}

/// Runs the simulation and writes the trace. When a run fails, the rows of
/// the runs before it are still written, followed by a truncation marker,
/// and the error is returned.
pub fn cmd_simulate(config: &Config, out: &Path) -> Result<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    let data = load_data(config)?;
    let truth = ground_truth(config, &data)?;
    let sim = &config.simulation;
    log::info!("simulating {} runs x {} iterations", sim.runs, sim.iterations);
    let results = simulate_runs(sim, &data.dataset, &data.mapping, &truth, &NoObserver);
    let (trace, failure) = assemble_trace(sim, results);
    let path = out.join(TRACE_FILE);
    let mut w = create(&path)?;
    trace.table.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    for e in trace.runs.iter().flat_map(|r| &r.exhausted) {
        log::info!("run {} iteration {}: user {} exhausted", e.run, e.iteration, e.user);
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let run_seeds = (0..sim.runs).map(|r| sim.run_seed(r)).collect();
    let mut inputs = data.inputs.clone();
    inputs.extend(config.ground_truth.clone());
    let manifest = RunManifest::new("simulate", config.to_text(), sim.master_seed, run_seeds);
    finish(manifest, &inputs, &[path], out, start)
}

/// One ranking test per repetition, each on a freshly trained model.
pub fn ranking_reports(config: &Config, data: &LoadedData) -> Result<Vec<RankingTestReport>> {
    let sim = &config.simulation;
    (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed::derive_path(sim.master_seed, &[stream::RANKING, r as u64]);
            let hp = sim.hyperparams.with_seed(seed::derive(rep_seed, stream::TRAINING));
            let model = init_model(data.dataset.num_users(), data.dataset.num_items(), &hp)?;
            let (model, _) = train(model, &data.dataset, &hp)?;
            let mut rng = seed::rng(seed::derive(rep_seed, stream::SAMPLING));
            ranking_assumption_test(&model, &data.dataset, &data.mapping, config.sample_users, &mut rng)
        })
        .collect()
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "repetition",
    "mean_seen",
    "mean_unseen",
    "var_seen",
    "var_unseen",
    "t_stat",
    "df",
    "p_value",
    "n_seen",
    "n_unseen",
    "resampled",
];

fn report_record(label: String, r: &RankingTestReport) -> Vec<String> {
    vec![
        label,
        r.mean_seen.to_string(),
        r.mean_unseen.to_string(),
        r.var_seen.to_string(),
        r.var_unseen.to_string(),
        r.t_stat.to_string(),
        r.df.to_string(),
        r.p_value.to_string(),
        r.sample_sizes.0.to_string(),
        r.sample_sizes.1.to_string(),
        r.resampled.to_string(),
    ]
}

pub fn cmd_validate_ranking(config: &Config, out: &Path) -> Result<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    let data = load_data(config)?;
    let reports = ranking_reports(config, &data)?;
    let pooled = RankingTestReport::pooled(&reports)?;

    let csv_path = out.join(REPORT_CSV);
    {
        let err = |e: csv::Error| Error::Data(e.to_string());
        let mut csv = csv::Writer::from_writer(create(&csv_path)?);
        csv.write_record(REPORT_COLUMNS).map_err(err)?;
        for (k, r) in reports.iter().enumerate() {
            csv.write_record(report_record(k.to_string(), r)).map_err(err)?;
        }
        csv.write_record(report_record("pooled".into(), &pooled)).map_err(err)?;
        csv.flush().map_err(|e| Error::io(&csv_path, e))?;
    }

    let mut txt = String::new();
    let _ = writeln!(txt, "ranking assumption test: seen-group vs unseen-group predicted ratings");
    let _ = writeln!(txt, "users per repetition: {}", config.sample_users);
    let _ = writeln!(txt, "repetitions: {}", reports.len());
    for (k, r) in reports.iter().enumerate() {
        let _ = writeln!(
            txt,
            "  {k:>3}: mean_seen {:.6} mean_unseen {:.6} t {:.4} p {:.3e}",
            r.mean_seen, r.mean_unseen, r.t_stat, r.p_value
        );
    }
    let _ = writeln!(
        txt,
        "pooled: mean_seen {:.6} (var {:.6}) mean_unseen {:.6} (var {:.6}) t {:.4} df {:.2} p {:.3e}",
        pooled.mean_seen, pooled.var_seen, pooled.mean_unseen, pooled.var_unseen, pooled.t_stat, pooled.df, pooled.p_value
    );
    let verdict = if pooled.supports_ranking_assumption(0.01) {
        "seen-group items are ranked higher (p < 0.01)"
    } else {
        "no significant preference for seen-group items at p < 0.01"
    };
    let _ = writeln!(txt, "{verdict}");
    let txt_path = out.join(REPORT_TXT);
    std::fs::write(&txt_path, txt).map_err(|e| Error::io(&txt_path, e))?;

    let sim = &config.simulation;
    let rep_seeds = (0..config.repetitions)
        .map(|r| seed::derive_path(sim.master_seed, &[stream::RANKING, r as u64]))
        .collect();
    let manifest = RunManifest::new("validate-ranking", config.to_text(), sim.master_seed, rep_seeds);
    finish(manifest, &data.inputs, &[csv_path, txt_path], out, start)
}

pub fn cmd_report(traces: &[PathBuf], out: &Path) -> Result<()> {
    let start = Instant::now();
    if traces.is_empty() {
        return Err(Error::Argument("report needs at least one trace file".into()));
    }
    ensure_dir(out)?;
    let inputs: Vec<PathBuf> = traces
        .iter()
        .map(|p| std::path::absolute(p).map_err(|e| Error::io(p, e)))
        .collect::<Result<_>>()?;
    let mut tables = Vec::with_capacity(inputs.len());
    for p in &inputs {
        let table = TraceTable::read_csv(open(p)?).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("{}: {m}", p.display())),
            other => other,
        })?;
        tables.push((p.display().to_string(), table));
    }
    let agg = aggregate(&tables)?;
    let csv_path = out.join(AGGREGATE_CSV);
    let mut w = create(&csv_path)?;
    agg.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    drop(w);
    let names: Vec<String> = tables.iter().map(|(n, _)| n.clone()).collect();
    let summary_path = out.join(SUMMARY_TXT);
    std::fs::write(&summary_path, agg.summary(&names)).map_err(|e| Error::io(&summary_path, e))?;
    let manifest = RunManifest::new("report", String::new(), 0, Vec::new());
    finish(manifest, &inputs, &[csv_path, summary_path], out, start)
}
