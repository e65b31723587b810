//! One function per subcommand. Each reads its inputs from, and writes its
//! outputs to, the working directory.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use flightdelay::eval::{
    analyze_schedule, cross_validate, evaluate_cell, feature_importance, grid_plot_rows, run_comparison,
    sweep_plot_rows, sweep_window_gap, temporal_holdout, temporal_kfold, write_grid_csv, write_importance_csv,
    write_plot_data, write_sweep_csv, EvalConfig, EvalSet, FeatureCombo, Manifest, ManifestEntry, SweepSpec,
};
use flightdelay::features::{Dataset, FeatureConfig, WeatherEncoder};
use flightdelay::ingest::{
    parse_gps, parse_schedule, parse_weather, reconstruct_trajectories, segment_trajectories, write_gps,
    write_schedule, write_weather, CleaningConfig, CleaningReport, FlightRecord, GpsPoint, WeatherRecord,
};
use flightdelay::learn::{FitLog, ModelKind, TrainedModel};
use flightdelay::prepare::Traffic;
use flightdelay::raster::{read_tensor, write_tensor, TensorIndex};
use flightdelay::synth::{generate_scenario, validate_scenario, ScenarioConfig, ScenarioReport};
use flightdelay::zones::ZoneMap;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self as a, create, open, read_json, require, write_json};

/// Share of the most recent rows held out for testing (two weeks of seven).
pub const DEFAULT_TEST_FRACTION: f64 = 2.0 / 7.0;

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthOutput {
    pub config: ScenarioConfig,
    pub report: ScenarioReport,
}

pub fn synth(out: &Path, config: Option<&Path>, seed: Option<u64>) -> Result<SynthOutput> {
    let mut config = match config {
        Some(p) => ScenarioConfig::from_json(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    generate(out, config)
}

pub fn generate(out: &Path, config: ScenarioConfig) -> Result<SynthOutput> {
    let map = ZoneMap::default_layout();
    let scenario = generate_scenario(&config, &map)?;
    scenario.write(out)?;
    std::fs::write(out.join(a::ZONES), map.to_json() + "\n")?;
    let report = validate_scenario(&scenario, &config.airport, &map);
    tracing::info!(
        departures = report.departures,
        gps_points = report.gps_points,
        mean_delay = report.delay.mean,
        std_delay = report.delay.std,
        "scenario written to {}",
        out.display()
    );
    let output = SynthOutput { config, report };
    write_json(&out.join(a::SYNTH_REPORT), &output)?;
    Ok(output)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkippedRows {
    pub gps: usize,
    pub schedule: usize,
    pub weather: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub cleaning: CleaningConfig,
    pub report: CleaningReport,
    pub skipped: SkippedRows,
}

fn read_schedule(dir: &Path) -> Result<(Vec<FlightRecord>, usize)> {
    let p = parse_schedule(open(&require(dir, a::SCHEDULE, "synth")?)?)?;
    Ok((p.records, p.skipped))
}

fn read_weather(dir: &Path) -> Result<(Vec<WeatherRecord>, usize)> {
    let p = parse_weather(open(&require(dir, a::WEATHER, "synth")?)?)?;
    Ok((p.records, p.skipped))
}

fn read_zones(dir: &Path) -> Result<ZoneMap> {
    let path = require(dir, a::ZONES, "ingest")?;
    Ok(ZoneMap::from_json(&std::fs::read_to_string(&path)?).with_context(|| format!("parsing {}", path.display()))?)
}

pub fn ingest(input: &Path, out: &Path, zones: Option<&Path>, config: Option<&Path>) -> Result<()> {
    let cleaning: CleaningConfig = a::load_config(config)?;
    let zones = match zones {
        Some(p) => Some(ZoneMap::from_json(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?),
        None => None,
    };
    ingest_with(input, out, zones, cleaning)
}

/// `zones` overrides the map found in `input`.
pub fn ingest_with(input: &Path, out: &Path, zones: Option<ZoneMap>, cleaning: CleaningConfig) -> Result<()> {
    let explicit_zones = zones.is_some();
    let map = match zones {
        Some(m) => m,
        None if input.join(a::ZONES).is_file() => read_zones(input)?,
        None => ZoneMap::default_layout(),
    };
    let gps = parse_gps(open(&require(input, a::GPS, "synth")?)?)?;
    let (schedule, schedule_skipped) = read_schedule(input)?;
    let (weather, weather_skipped) = read_weather(input)?;
    let (trajectories, report) = reconstruct_trajectories(gps.records, &map.bbox, &cleaning)?;
    std::fs::create_dir_all(out)?;
    let points: Vec<GpsPoint> = trajectories.into_iter().flat_map(|t| t.points).collect();
    write_gps(create(&out.join(a::CLEAN_GPS))?, &points)?;
    if !same_dir(input, out) {
        write_schedule(create(&out.join(a::SCHEDULE))?, &schedule)?;
        write_weather(create(&out.join(a::WEATHER))?, &weather)?;
    }
    if explicit_zones || !same_dir(input, out) {
        std::fs::write(out.join(a::ZONES), map.to_json() + "\n")?;
    }
    tracing::info!(
        retained = report.retained_points,
        trajectories = report.trajectories,
        removed_speed = report.removed_speed_outliers,
        removed_outside = report.removed_outside_bbox,
        "cleaned GPS tracks"
    );
    let ingest = IngestReport {
        cleaning,
        report,
        skipped: SkippedRows {
            gps: gps.skipped,
            schedule: schedule_skipped,
            weather: weather_skipped,
        },
    };
    write_json(&out.join(a::INGEST_REPORT), &ingest)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Cleaned inputs of the feature stage, read back from the working directory.
struct Inputs {
    schedule: Vec<FlightRecord>,
    weather: Vec<WeatherRecord>,
    map: ZoneMap,
    traffic: Traffic,
}

fn load_inputs(dir: &Path, features: &FeatureConfig) -> Result<Inputs> {
    let (schedule, _) = read_schedule(dir)?;
    let (weather, _) = read_weather(dir)?;
    let ingest: IngestReport = read_json(&require(dir, a::INGEST_REPORT, "ingest")?)?;
    let clean = parse_gps(open(&require(dir, a::CLEAN_GPS, "ingest")?)?)?;
    if clean.skipped > 0 {
        bail!("{} has {} unreadable rows; rerun `flightdelay ingest`", a::CLEAN_GPS, clean.skipped);
    }
    let map = read_zones(dir)?;
    let trajectories = segment_trajectories(clean.records, ingest.cleaning.gap_threshold_s);
    let traffic = Traffic::from_trajectories(trajectories, ingest.report, &schedule, &map, features);
    Ok(Inputs {
        schedule,
        weather,
        map,
        traffic,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeaturizeReport {
    pub features: FeatureConfig,
    pub rows: usize,
    pub columns: Vec<String>,
    pub weather: WeatherEncoder,
}

pub fn featurize(out: &Path, config: Option<&Path>, window_min: Option<i64>, gap_min: Option<i64>) -> Result<FeaturizeReport> {
    let mut features: FeatureConfig = a::load_config(config)?;
    if let Some(w) = window_min {
        features.observation_min = w;
    }
    if let Some(g) = gap_min {
        features.gap_min = g;
    }
    featurize_with(out, features)
}

pub fn featurize_with(out: &Path, features: FeatureConfig) -> Result<FeaturizeReport> {
    let inputs = load_inputs(out, &features)?;
    let prepared = inputs
        .traffic
        .prepare(&inputs.schedule, &inputs.weather, &inputs.map, &features)?;
    let ds = &prepared.assembled.dataset;
    ds.write(&out.join(a::FEATURES), &out.join(a::FEATURES_SCHEMA))?;
    write_tensor(create(&out.join(a::IMAGES))?, &prepared.images)?;
    write_json(&out.join(a::IMAGES_INDEX), &TensorIndex::new(&prepared.images, None))?;
    tracing::info!(
        rows = ds.len(),
        columns = ds.columns.len(),
        observation_min = features.observation_min,
        gap_min = features.gap_min,
        "feature table written"
    );
    let report = FeaturizeReport {
        rows: ds.len(),
        columns: ds.columns.iter().map(|c| c.name.clone()).collect(),
        weather: prepared.assembled.weather.clone(),
        features,
    };
    write_json(&out.join(a::FEATURIZE_REPORT), &report)?;
    Ok(report)
}

fn load_eval_set(dir: &Path, need_images: bool) -> Result<EvalSet> {
    let csv = require(dir, a::FEATURES, "featurize")?;
    let schema = require(dir, a::FEATURES_SCHEMA, "featurize")?;
    let ds = Dataset::read(&csv, &schema).with_context(|| format!("reading {}", csv.display()))?;
    let set = EvalSet::new(ds);
    if !need_images {
        return Ok(set);
    }
    let images = read_tensor(open(&require(dir, a::IMAGES, "featurize")?)?, &set.dataset.flight_ids)?;
    Ok(set.with_images(images)?)
}

pub fn load_eval_config(path: Option<&Path>, seed: Option<u64>) -> Result<EvalConfig> {
    let mut config: EvalConfig = a::load_config(path)?;
    config.train.validate()?;
    if let Some(s) = seed {
        config.train.seed = s;
    }
    Ok(config)
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    model: ModelKind,
    features: FeatureCombo,
    seed: u64,
    rmse: f64,
    mae: f64,
    n_train: usize,
    n_test: usize,
    /// Boosting rounds or epochs kept after early stopping.
    kept_iterations: Option<usize>,
}

pub fn train(out: &Path, config: Option<&Path>, seed: Option<u64>, model: ModelKind, combo: FeatureCombo) -> Result<()> {
    let config = load_eval_config(config, seed)?;
    let set = load_eval_set(out, combo.uses_images())?;
    let plan = temporal_holdout(&set.dataset.timestamps, DEFAULT_TEST_FRACTION)?;
    let tc = config.cell_config(model, combo);
    let cell = evaluate_cell(&set, &plan.folds[0], &tc, combo, config.inner_valid_fraction)?;
    let path = a::model_path(out, model, combo);
    std::fs::create_dir_all(path.parent().expect("models dir"))?;
    cell.model.save(&path)?;
    let kept_iterations = match &cell.log {
        FitLog::Closed => None,
        FitLog::Neural(l) => Some(l.best_epoch),
        FitLog::Boosting(l) => Some(l.best_rounds),
    };
    tracing::info!(%model, features = %combo, rmse = cell.rmse, mae = cell.mae, "model saved to {}", path.display());
    let summary = TrainSummary {
        model,
        features: combo,
        seed: tc.seed,
        rmse: cell.rmse,
        mae: cell.mae,
        n_train: cell.n_train,
        n_test: cell.n_test,
        kept_iterations,
    };
    write_json(&out.join(format!("train_{model}_{combo}.json")), &summary)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub models: Vec<ModelKind>,
    pub combos: Vec<FeatureCombo>,
    pub cv: Option<usize>,
    pub plot_data: bool,
    pub test_fraction: f64,
}

pub fn eval(out: &Path, config: &EvalConfig, opts: &EvalOptions) -> Result<()> {
    if opts.models.is_empty() || opts.combos.is_empty() {
        bail!("eval needs at least one model and one feature combination");
    }
    let need_images = opts.models.contains(&ModelKind::TrajCnn) && opts.combos.iter().any(|c| c.uses_images());
    let set = load_eval_set(out, need_images)?;
    let plan = temporal_holdout(&set.dataset.timestamps, opts.test_fraction)?;
    let (grid, files) = run_comparison(&set, &plan.folds[0], &opts.models, &opts.combos, config)?;
    write_grid_csv(create(&out.join(a::GRID))?, &grid)?;
    let mut manifest = Manifest::new("eval", config.train.seed, config)?;
    for (cell, file) in grid.cells.iter().zip(&files) {
        let mut outputs = vec![a::GRID.to_string()];
        if let Some(file) = file {
            let path = a::model_path(out, cell.model, cell.features);
            std::fs::create_dir_all(path.parent().expect("models dir"))?;
            file.save(&path)?;
            outputs.push(format!("{}/{}", a::MODELS_DIR, path.file_name().expect("file name").to_string_lossy()));
        }
        manifest.entries.push(ManifestEntry {
            job: format!("{}/{}", cell.model, cell.features),
            seed: cell.seed,
            config_hash: cell.config_hash.clone(),
            runtime_s: cell.runtime_s,
            outputs,
        });
    }
    for c in grid.cells.iter().filter(|c| c.rmse.is_some()) {
        tracing::info!(model = %c.model, features = %c.features, rmse = c.rmse, "test RMSE");
    }
    if opts.plot_data {
        let f: FeaturizeReport = read_json(&require(out, a::FEATURIZE_REPORT, "featurize")?)?;
        let rows = grid_plot_rows(&grid, f.features.observation_min, f.features.gap_min);
        write_plot_data(create(&out.join(a::PLOT_DATA))?, &rows)?;
    }
    if let Some(k) = opts.cv {
        let cv_plan = temporal_kfold(&set.dataset.timestamps, k, false)?;
        let mut text = String::from("model,features,fold,rmse,mae\n");
        for &m in &opts.models {
            for &c in opts.combos.iter().filter(|c| c.applies_to(m)) {
                let r = cross_validate(&set, &cv_plan, m, c, config)?;
                for (i, (rmse, mae)) in r.fold_rmse.iter().zip(&r.fold_mae).enumerate() {
                    writeln!(text, "{m},{c},{},{rmse},{mae}", i + 1)?;
                }
                writeln!(text, "{m},{c},mean,{},{}", r.mean_rmse, r.mean_mae)?;
            }
        }
        std::fs::write(out.join(a::CV), text)?;
    }
    std::fs::write(out.join(a::MANIFEST), manifest.to_json()?)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub lengths: Vec<i64>,
    pub gaps: Vec<i64>,
    pub model: ModelKind,
    pub features: FeatureCombo,
    pub plot_data: bool,
}

pub fn sweep(out: &Path, config: &EvalConfig, opts: &SweepOptions) -> Result<()> {
    let base: FeatureConfig = match out.join(a::FEATURIZE_REPORT) {
        p if p.is_file() => read_json::<FeaturizeReport>(&p)?.features,
        _ => FeatureConfig::default(),
    };
    let inputs = load_inputs(out, &base)?;
    let spec = SweepSpec {
        model: opts.model,
        features: opts.features,
        ..Default::default()
    };
    let build = |observation_min: i64, gap_min: i64| {
        let features = FeatureConfig {
            observation_min,
            gap_min,
            ..base.clone()
        };
        inputs
            .traffic
            .prepare(&inputs.schedule, &inputs.weather, &inputs.map, &features)?
            .eval_set()
    };
    let cells = sweep_window_gap(&opts.lengths, &opts.gaps, build, &spec, config)?;
    write_sweep_csv(create(&out.join(a::SWEEP))?, &cells)?;
    if opts.plot_data {
        let rows = sweep_plot_rows(&cells, opts.model.as_str(), opts.features.as_str());
        write_plot_data(create(&out.join(a::SWEEP_PLOT_DATA))?, &rows)?;
    }
    Ok(())
}

pub fn importance(out: &Path, model_file: Option<&Path>, combo: FeatureCombo) -> Result<()> {
    let path = match model_file {
        Some(p) => p.to_path_buf(),
        None => {
            let p = a::model_path(out, ModelKind::Gbdt, combo);
            if !p.is_file() {
                bail!("missing artifact {} (run `flightdelay eval` or `flightdelay train` first)", p.display());
            }
            p
        }
    };
    let file = flightdelay::learn::ModelFile::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let TrainedModel::Gbdt(model) = &file.model else {
        bail!("{} holds a {} model; split-count importance needs gbdt", path.display(), file.config.model);
    };
    let ranked = feature_importance(model, &file.feature_names);
    write_importance_csv(create(&out.join(a::IMPORTANCE))?, &ranked)?;
    for (rank, i) in ranked.iter().take(5).enumerate() {
        tracing::info!(rank = rank + 1, feature = %i.feature, splits = i.splits, "importance");
    }
    Ok(())
}

pub fn analyze(out: &Path, airport: &str) -> Result<()> {
    let (schedule, _) = read_schedule(out)?;
    let analysis = analyze_schedule(&schedule, airport)?;
    let mut text = String::from("attribute,kind,classes,rmse\n");
    for r in &analysis.attributes {
        writeln!(text, "{},{},{},{}", r.attribute, r.kind, r.classes, r.rmse)?;
    }
    std::fs::write(out.join(a::EXPLAIN), text)?;
    write_json(&out.join(a::ANALYSIS), &analysis)?;
    tracing::info!(
        departures = analysis.stats.n,
        mean = analysis.stats.mean,
        std = analysis.stats.std,
        "delay analysis written"
    );
    Ok(())
}
