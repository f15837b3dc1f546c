use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gsnna_core::data::{gen_bars, gen_eggbox, load_csv, load_csv_with_classes, split, standardize, write_csv, SamplingScheme};
use gsnna_core::model::{Evaluation, ModelError};
use gsnna_core::search::{layer_sweep_csv, layer_sweep_report, SearchKind};
use gsnna_core::space::Family;
use gsnna_core::{
    gsnna_search, random_search, DataError, Dataset, SavedModel, SearchConfig, SearchError, SearchOutcome, SearchReport, SearchSpace,
    SplitData, Task, TrialResult,
};

use crate::config::{DataSource, DatasetConfig, RunConfig};

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const LAYERS_FILE: &str = "layers.csv";
pub const MODEL_FILE: &str = "model.json";
pub const TEST_SPLIT_FILE: &str = "test_split.csv";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Data(String),
    AllTrialsFailed(String),
}

impl CliError {
    /// Process exit status; 2 is left to argument parsing.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 3,
            Self::Data(_) => 4,
            Self::AllTrialsFailed(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Data(m) => write!(f, "data error: {m}"),
            Self::AllTrialsFailed(m) => write!(f, "search failed: {m}"),
        }
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn data_error(e: DataError) -> CliError {
    match e {
        DataError::Io { path, source } => io_error(&path, source),
        other => CliError::Data(other.to_string()),
    }
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(|e| io_error(&tmp, e))?;
    f.write_all(contents).and_then(|_| f.sync_all()).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

pub fn gen_eggbox_csv(count: usize, seed: u64, grid: bool, out: &Path) -> Result<(), CliError> {
    let scheme = if grid { SamplingScheme::Grid } else { SamplingScheme::Uniform };
    let ds = gen_eggbox(count, seed, scheme).map_err(data_error)?;
    write_csv(&ds, out).map_err(data_error)
}

pub fn load_dataset(cfg: &DatasetConfig) -> Result<Dataset, CliError> {
    match cfg.source {
        DataSource::Eggbox => {
            let scheme = if cfg.grid { SamplingScheme::Grid } else { SamplingScheme::Uniform };
            gen_eggbox(cfg.count.unwrap_or(gsnna_core::data::EGGBOX_DEFAULT_COUNT), cfg.seed, scheme).map_err(data_error)
        }
        DataSource::Bars => gen_bars(cfg.count.unwrap_or(2000), cfg.side, cfg.noise, cfg.seed).map_err(data_error),
        DataSource::Csv => {
            let path = cfg.path.as_ref().ok_or_else(|| CliError::Config("csv source needs dataset.path".into()))?;
            let task = cfg.task.ok_or_else(|| CliError::Config("csv source needs dataset.task".into()))?;
            let ds = load_csv(path, &cfg.targets, task).map_err(data_error)?;
            match cfg.image_shape {
                Some([h, w, c]) => ds.with_image_shape((h, w, c)).map_err(data_error),
                None => Ok(ds),
            }
        }
    }
}

pub fn search_config(cfg: &RunConfig, data: &SplitData) -> Result<SearchConfig, CliError> {
    let s = &cfg.search;
    let n = data.train.rows();
    let mut space = match s.family {
        Family::Mlp => SearchSpace::mlp(n),
        Family::Cnn => SearchSpace::cnn(n),
    };
    if let Some(shape) = data.train.image_shape {
        space = space.with_image_shape(shape);
    }
    space.depth_cap = s.depth_cap;
    if let Some(units) = s.max_units {
        space.max_units = units;
    }
    if let Some(acts) = &s.activations {
        space.activations = acts.clone();
    }
    if let Some([lo, hi]) = s.batch_range {
        space.batch_min = lo;
        space.batch_max = hi;
    }
    let mut sc = SearchConfig::new(space);
    sc.evals_per_iteration = s.evals_per_iteration;
    sc.score_threshold = s.score_threshold;
    sc.master_seed = s.master_seed;
    if let Some(k) = s.max_concurrency {
        sc.max_concurrency = k;
    }
    sc.training = cfg.training;
    sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(sc)
}

/// Runs the configured search and writes every artifact into the output directory.
pub fn search(cfg: &RunConfig) -> Result<SearchOutcome, CliError> {
    cfg.validate().map_err(CliError::Config)?;
    let raw = load_dataset(&cfg.dataset)?;
    let parts = split(&raw, &cfg.split).map_err(data_error)?;
    let (data, standardizer) = standardize(&parts, cfg.dataset.standardize_features, cfg.dataset.standardize_targets);
    let search_cfg = search_config(cfg, &data)?;

    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    write_atomic(&dir.join(CONFIG_FILE), cfg.to_toml().as_bytes())?;
    write_csv(&parts.test, &dir.join(TEST_SPLIT_FILE)).map_err(data_error)?;

    let trials_path = dir.join(TRIALS_FILE);
    let mut log = BufWriter::new(File::create(&trials_path).map_err(|e| io_error(&trials_path, e))?);
    let mut log_error = None;
    let mut observer = |r: &TrialResult| {
        if log_error.is_some() {
            return;
        }
        let line = serde_json::to_string(r).expect("trial serialises");
        if let Err(e) = writeln!(log, "{line}").and_then(|_| log.flush()) {
            log_error = Some(e);
        }
    };
    let result = match cfg.search.kind {
        SearchKind::Gsnna => gsnna_search(&search_cfg, &data, &mut observer),
        SearchKind::Random => random_search(&search_cfg, &data, &mut observer),
    };
    if let Some(e) = log_error {
        return Err(io_error(&trials_path, e));
    }

    let outcome = match result {
        Ok(o) => o,
        Err(SearchError::AllTrialsFailed { iteration, count, partial }) => {
            if let Some(report) = partial {
                write_atomic(&dir.join(REPORT_FILE), report.to_json().as_bytes())?;
            }
            return Err(CliError::AllTrialsFailed(format!("all {count} trials of iteration {iteration} failed")));
        }
        Err(e @ SearchError::Config(_)) => return Err(CliError::Config(e.to_string())),
        Err(e @ SearchError::Pool(_)) => return Err(CliError::Io(e.to_string())),
        Err(e) => return Err(CliError::Data(e.to_string())),
    };

    write_atomic(&dir.join(REPORT_FILE), outcome.report.to_json().as_bytes())?;
    let rows = layer_sweep_report(&outcome.report);
    write_atomic(&dir.join(LAYERS_FILE), layer_sweep_csv(&rows).as_bytes())?;
    if let Some(model) = &outcome.paper_best_model {
        SavedModel::new(model, standardizer, &raw).save(&dir.join(MODEL_FILE)).map_err(|e| io_error(&dir.join(MODEL_FILE), e))?;
    }
    Ok(outcome)
}

pub fn print_summary(report: &SearchReport, dir: &Path) {
    let kind = match report.kind {
        SearchKind::Gsnna => "gsnna",
        SearchKind::Random => "random",
    };
    println!(
        "{kind} search: {} iteration(s), {} model(s) trained, stop: {:?}",
        report.iterations_run, report.models_trained, report.stop_reason
    );
    for (name, best) in [("paper_best", &report.paper_best), ("global_best", &report.global_best)] {
        let test = best.test_score.map_or("n/a".to_string(), |t| format!("{t:.6}"));
        println!(
            "{name}: depth {} (iteration {}, trial {}), val {} {:.6}, test {test}",
            best.depth, best.iteration, best.trial_index, report.metric, best.val_score
        );
    }
    println!(
        "time: {:.1}s total, {:.1}s training, {:.3}s coordination",
        report.timing.total_seconds, report.timing.training_seconds, report.timing.coordination_seconds
    );
    println!("artifacts: {}", dir.display());
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Io { path, source } => CliError::Io(format!("{path}: {source}")),
        other => CliError::Data(other.to_string()),
    }
}

pub fn eval(model_path: &Path, data_path: &Path) -> Result<(SavedModel, Evaluation), CliError> {
    let model = SavedModel::load(model_path).map_err(model_error)?;
    let ds = load_csv_with_classes(data_path, &model.target_names, model.task, model.classes.as_deref()).map_err(|e| match e {
        DataError::NotNumeric { column, .. } if model.task == Task::Regression && model.target_names.contains(&column) => {
            CliError::Data(format!("task mismatch: regression model, but target column '{column}' holds class labels"))
        }
        other => data_error(other),
    })?;
    let eval = model.evaluate(&ds).map_err(model_error)?;
    Ok((model, eval))
}

pub fn sweep_report(report_path: &Path, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = fs::read_to_string(report_path).map_err(|e| io_error(report_path, e))?;
    let report: SearchReport = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", report_path.display())))?;
    let csv = layer_sweep_csv(&layer_sweep_report(&report));
    match out {
        Some(path) => write_atomic(path, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
