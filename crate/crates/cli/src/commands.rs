use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ews_core::dataset::{
    generate_dataset, read_dataset_csv, simulate_test_series, DatasetConfig, DatasetGroup, DegeneratePolicy,
};
use ews_core::empirical::{
    discretize_serial_interval, estimate_re, read_re_csv, slice_subseries, write_re_csv, CaseSeries, RE_WINDOW,
    SERIAL_INTERVAL_MEAN, SERIAL_INTERVAL_SD,
};
use ews_core::evaluation::{expanding_tau, favored_class_frequencies, last_k_scores, roc_auc, Ewi, RocSummary};
use ews_core::indicators::{
    detrend, kendall_tau_missing, read_series_csv, rolling_lag1_ac, rolling_variance, write_indicator_csv,
    DEFAULT_WINDOW,
};
use ews_core::learned::{expanding_predictions, train, Architecture, Classifier, TrainConfig, MIN_PREFIX};
use ews_core::scenario::{Class, ModelKind, RunSettings};
use ews_core::sde::{integrate_ode, BetaSchedule, Simulation};
use ews_core::{Error, Result};
use serde_json::json;

use crate::manifest::Manifest;
use crate::settings::Settings;
use crate::{Cli, Command};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn path_flag(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}

pub fn run(cli: Cli) -> Result<()> {
    let globals = vec![
        ("seed", cli.seed),
        ("workers", cli.workers),
        ("out", path_flag(cli.out)),
    ];
    let config = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => {
            let mut flags = globals;
            flags.extend([
                ("model", a.model),
                ("sigma", a.sigma),
                ("beta0", a.beta0),
                ("beta1", a.beta1),
                ("init", a.init),
                ("t_end", a.t_end),
                ("dt", a.dt),
                ("stride", a.stride),
                ("noise_scale", a.noise_scale),
            ]);
            simulate(Settings::resolve(config, SIMULATE_KEYS, flags)?)
        }
        Command::Ode(a) => {
            let mut flags = globals;
            flags.extend([
                ("model", a.model),
                ("beta0", a.beta0),
                ("beta1", a.beta1),
                ("init", a.init),
                ("t_end", a.t_end),
                ("dt", a.dt),
                ("stride", a.stride),
            ]);
            ode(Settings::resolve(config, ODE_KEYS, flags)?)
        }
        Command::Dataset(a) => {
            let mut flags = globals;
            flags.extend([
                ("groups", a.groups),
                ("window", a.window),
                ("degenerate", a.degenerate),
                ("max_attempts", a.max_attempts),
                ("dt", a.dt),
                ("span", a.span),
            ]);
            dataset(Settings::resolve(config, DATASET_KEYS, flags)?)
        }
        Command::Indicators(a) => {
            let mut flags = globals;
            flags.extend([
                ("input", path_flag(a.input)),
                ("column", a.column),
                ("span", a.span),
                ("window_frac", a.window_frac),
            ]);
            indicators(Settings::resolve(config, INDICATOR_KEYS, flags)?)
        }
        Command::Train(a) => {
            let mut flags = globals;
            flags.extend([
                ("dataset", path_flag(a.dataset)),
                ("architecture", a.architecture),
                ("filters", a.filters),
                ("width", a.width),
                ("epochs", a.epochs),
                ("learning_rate", a.learning_rate),
                ("batch_size", a.batch_size),
                ("weight_decay", a.weight_decay),
                ("test_frac", a.test_frac),
                ("validation_frac", a.validation_frac),
                ("name", a.name),
            ]);
            train_cmd(Settings::resolve(config, TRAIN_KEYS, flags)?)
        }
        Command::Eval(a) => {
            let models = if a.models.is_empty() {
                None
            } else {
                Some(
                    a.models
                        .iter()
                        .map(|p| p.display().to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                )
            };
            let mut flags = globals;
            flags.extend([
                ("model", models),
                ("dataset", path_flag(a.dataset)),
                ("scenarios", a.scenarios),
                ("scenario_model", a.scenario_model),
                ("last_k", a.last_k),
            ]);
            eval(Settings::resolve(config, EVAL_KEYS, flags)?)
        }
        Command::Re(a) => {
            let mut flags = globals;
            flags.extend([
                ("input", path_flag(a.input)),
                ("window", a.window),
                ("si_mean", a.si_mean),
                ("si_sd", a.si_sd),
            ]);
            re(Settings::resolve(config, RE_KEYS, flags)?)
        }
        Command::Slice(a) => {
            let mut flags = globals;
            flags.extend([
                ("input", path_flag(a.input)),
                ("re", path_flag(a.re)),
                ("window", a.window),
                ("si_mean", a.si_mean),
                ("si_sd", a.si_sd),
            ]);
            slice(Settings::resolve(config, SLICE_KEYS, flags)?)
        }
    }
}

type Keys = &'static [(&'static str, Option<&'static str>)];

const SIMULATE_KEYS: Keys = &[
    ("model", Some("sir-white")),
    ("sigma", Some("0.5")),
    ("beta0", None),
    ("beta1", Some("0")),
    ("init", None),
    ("t_end", Some("100")),
    ("dt", Some("0.01")),
    ("stride", None),
    ("noise_scale", Some("1")),
];

const ODE_KEYS: Keys = &[
    ("model", Some("sir-white")),
    ("beta0", None),
    ("beta1", Some("0")),
    ("init", None),
    ("t_end", Some("100")),
    ("dt", Some("0.01")),
    ("stride", None),
];

const DATASET_KEYS: Keys = &[
    ("groups", Some("sir-white:50:50")),
    ("window", Some("500")),
    ("degenerate", Some("resample")),
    ("max_attempts", Some("100")),
    ("dt", Some("0.01")),
    ("span", Some("0.2")),
];

const INDICATOR_KEYS: Keys = &[
    ("input", None),
    ("column", Some("I")),
    ("span", Some("0.2")),
    ("window_frac", Some("0.25")),
];

const TRAIN_KEYS: Keys = &[
    ("dataset", None),
    ("architecture", Some("softmax")),
    ("filters", Some("8")),
    ("width", Some("5")),
    ("epochs", Some("1500")),
    ("learning_rate", Some("0.0005")),
    ("batch_size", Some("32")),
    ("weight_decay", Some("0.0001")),
    ("test_frac", Some("0.01")),
    ("validation_frac", Some("0.04")),
    ("name", Some("model.json")),
];

const EVAL_KEYS: Keys = &[
    ("model", None),
    ("dataset", None),
    ("scenarios", Some("0")),
    ("scenario_model", Some("sir-white")),
    ("last_k", Some("5")),
];

const RE_KEYS: Keys = &[
    ("input", None),
    ("window", Some("14")),
    ("si_mean", Some("6.3")),
    ("si_sd", Some("4.2")),
];

const SLICE_KEYS: Keys = &[
    ("input", None),
    ("re", None),
    ("window", Some("14")),
    ("si_mean", Some("6.3")),
    ("si_sd", Some("4.2")),
];

/// Model kind, β schedule and initial state shared by `simulate` and `ode`.
fn path_setup(s: &Settings) -> Result<(ModelKind, BetaSchedule, Vec<f64>, f64, f64, usize)> {
    let kind: ModelKind = s.get("model")?;
    let model = kind.model();
    let beta0 = match s.opt("beta0")? {
        Some(b) => b,
        None => 0.5 * model.critical_beta(),
    };
    let beta = BetaSchedule::linear(beta0, s.get("beta1")?);
    let init = s.list("init")?.unwrap_or_else(|| kind.initial_state());
    let t_end: f64 = s.get("t_end")?;
    let dt: f64 = s.get("dt")?;
    let stride = match s.opt("stride")? {
        Some(n) => n,
        None => ((1.0 / dt).round() as usize).max(1),
    };
    Ok((kind, beta, init, t_end, dt, stride))
}

fn simulate(s: Settings) -> Result<()> {
    let (kind, beta, init, t_end, dt, stride) = path_setup(&s)?;
    let mut scale: f64 = s.get("noise_scale")?;
    let sigmas: Vec<f64> = s.list("sigma")?.unwrap_or_default();
    let noise = if kind == ModelKind::SirDemographic {
        // Demographic noise has no free intensity; `sigma = 0` switches it off.
        if sigmas.iter().all(|v| *v == 0.0) && !sigmas.is_empty() {
            scale = 0.0;
        }
        kind.noise(Vec::new())?
    } else {
        let sigmas = match sigmas.as_slice() {
            [one] => vec![*one; kind.noise_dim()],
            _ => sigmas,
        };
        kind.noise(sigmas)?
    };
    let sim = Simulation::new(kind.model(), noise, beta, init)
        .span(0.0, t_end)
        .dt(dt)
        .stride(stride)
        .diffusion_scale(scale);
    let seed = s.seed()?;
    let traj = sim.run(seed)?;
    let dir = s.out_dir()?;
    let mut m = Manifest::new("simulate", &s)?;
    let path = dir.join("trajectory.csv");
    traj.write_csv(create(&path)?)?;
    m.output(&path);
    m.extra(json!({ "records": traj.len(), "critical_beta": kind.model().critical_beta() }));
    m.write(&s, &dir)?;
    println!("wrote {} records to {}", traj.len(), path.display());
    Ok(())
}

fn ode(s: Settings) -> Result<()> {
    let (kind, beta, init, t_end, dt, stride) = path_setup(&s)?;
    let traj = integrate_ode(&kind.model(), &beta, &init, 0.0, t_end, dt, stride)?;
    let dir = s.out_dir()?;
    let mut m = Manifest::new("ode", &s)?;
    let path = dir.join("ode.csv");
    traj.write_csv(create(&path)?)?;
    m.output(&path);
    m.write(&s, &dir)?;
    println!("wrote {} records to {}", traj.len(), path.display());
    Ok(())
}

fn dataset(s: Settings) -> Result<()> {
    let groups: Vec<DatasetGroup> = s.list("groups")?.unwrap_or_default();
    let mut config = DatasetConfig::new(groups, s.get("window")?, s.seed()?);
    config.degenerate = s.get::<DegeneratePolicy>("degenerate")?;
    config.max_attempts = s.get("max_attempts")?;
    config.span = s.get("span")?;
    config.settings = RunSettings {
        dt: s.get("dt")?,
        ..RunSettings::default()
    };
    let data = generate_dataset(&config, s.workers()?)?;
    let dir = s.out_dir()?;
    let mut m = Manifest::new("dataset", &s)?;
    let rows = dir.join("dataset.csv");
    data.write_csv(create(&rows)?)?;
    let scenarios = dir.join("scenarios.csv");
    data.write_scenarios_csv(create(&scenarios)?)?;
    m.output(&rows);
    m.output(&scenarios);
    let summary = data.manifest();
    m.extra(serde_json::to_value(&summary).expect("dataset manifest serializes"));
    m.write(&s, &dir)?;
    println!(
        "wrote {} windows ({} degenerate, {} resampled draws) to {}",
        summary.row_count,
        summary.degenerate_rows,
        summary.resampled_draws,
        rows.display()
    );
    Ok(())
}

fn indicators(s: Settings) -> Result<()> {
    let input: PathBuf = s.get("input")?;
    let column: String = s.get("column")?;
    let series = read_series_csv(open(&input)?, &column)?;
    let span: f64 = s.get("span")?;
    let frac: f64 = s.get("window_frac")?;
    let residuals = detrend(&series.values, span)?.residuals;
    let variance = rolling_variance(&residuals, frac)?;
    let ac = rolling_lag1_ac(&residuals, frac)?;
    let dir = s.out_dir()?;
    let mut m = Manifest::new("indicators", &s)?;
    m.input(&input)?;
    let path = dir.join("indicators.csv");
    write_indicator_csv(&series.times, &variance, &ac, create(&path)?)?;
    m.output(&path);
    let taus = json!({
        "variance_tau": kendall_tau_missing(&variance.values)?,
        "lag1_ac_tau": kendall_tau_missing(&ac.values)?,
    });
    println!("{taus}");
    m.extra(taus);
    m.write(&s, &dir)?;
    Ok(())
}

fn train_cmd(s: Settings) -> Result<()> {
    let path: PathBuf = s.get("dataset")?;
    let rows = read_dataset_csv(open(&path)?)?;
    let architecture = match s.get::<String>("architecture")?.as_str() {
        "softmax" => Architecture::Softmax,
        "conv1d" => Architecture::Conv1d {
            filters: s.get("filters")?,
            width: s.get("width")?,
        },
        other => {
            return Err(Error::InvalidValue {
                key: "architecture".into(),
                message: format!("`{other}` (expected softmax or conv1d)"),
            })
        }
    };
    let config = TrainConfig {
        architecture,
        epochs: s.get("epochs")?,
        learning_rate: s.get("learning_rate")?,
        batch_size: s.get("batch_size")?,
        weight_decay: s.get("weight_decay")?,
        seed: s.seed()?,
        test_frac: s.get("test_frac")?,
        validation_frac: s.get("validation_frac")?,
    };
    let windows: Vec<_> = rows.into_iter().map(|r| r.window).collect();
    let model = train(&windows, &config)?;
    let dir = s.out_dir()?;
    let mut m = Manifest::new("train", &s)?;
    m.input(&path)?;
    let out = dir.join(s.get::<String>("name")?);
    model.save(&out)?;
    m.output(&out);
    let metrics = model.training.as_ref().map(|t| &t.held_out);
    m.extra(json!({ "held_out": metrics }));
    m.write(&s, &dir)?;
    if let Some(h) = metrics {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
        println!("held-out n={} auc={} accuracy={}", h.n, fmt(h.auc), fmt(h.accuracy));
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Kendall τ of a rolling indicator over a window's observed values;
/// 0 when too short or undefined.
fn window_tau(observed: &[f64], ewi: Ewi) -> Result<f64> {
    if observed.len() < MIN_PREFIX {
        return Ok(0.0);
    }
    let series = match ewi {
        Ewi::Variance => rolling_variance(observed, DEFAULT_WINDOW)?,
        Ewi::Lag1Ac => rolling_lag1_ac(observed, DEFAULT_WINDOW)?,
    };
    Ok(kendall_tau_missing(&series.values)?.unwrap_or(0.0))
}

fn write_roc(
    dir: &Path,
    name: &str,
    scores: &[f64],
    positive: &[bool],
    m: &mut Manifest,
) -> Result<Option<RocSummary>> {
    let roc = match roc_auc(scores, positive) {
        Ok(r) => r,
        Err(Error::Contract(msg)) => {
            eprintln!("ews: skipping {name} ROC: {msg}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let path = dir.join(format!("roc_{name}.csv"));
    roc.write_csv(create(&path)?)?;
    m.output(&path);
    println!("{name} auc {:.4}", roc.auc);
    Ok(Some(roc.summary(name, "")))
}

fn eval(s: Settings) -> Result<()> {
    let model_paths: Vec<PathBuf> = s.list("model")?.unwrap_or_default();
    if model_paths.is_empty() {
        return Err(Error::InvalidValue {
            key: "model".into(),
            message: "at least one model file is required".into(),
        });
    }
    let models = model_paths
        .iter()
        .map(|p| Classifier::load(p))
        .collect::<Result<Vec<_>>>()?;
    let dataset: Option<PathBuf> = s.opt("dataset")?;
    let per_class: usize = s.get("scenarios")?;
    if dataset.is_none() && per_class == 0 {
        return Err(Error::InvalidValue {
            key: "dataset".into(),
            message: "give a dataset, a scenario count, or both".into(),
        });
    }
    let last_k: usize = s.get("last_k")?;
    let dir = s.out_dir()?;
    let mut m = Manifest::new("eval", &s)?;
    for p in &model_paths {
        m.input(p)?;
    }
    let model_label = model_paths
        .iter()
        .map(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join("+");
    let mut summaries = Vec::new();

    if let Some(path) = &dataset {
        m.input(path)?;
        let rows = read_dataset_csv(open(path)?)?;
        let positive: Vec<bool> = rows.iter().map(|r| r.window.label == Class::Transcritical).collect();
        let mut learned = Vec::with_capacity(rows.len());
        for r in &rows {
            learned.push(ews_core::learned::ensemble_predict(&models, &r.window)?[0]);
        }
        summaries.extend(write_roc(&dir, "learned", &learned, &positive, &mut m)?);
        for ewi in Ewi::ALL {
            let scores = rows
                .iter()
                .map(|r| window_tau(r.window.observed(), ewi))
                .collect::<Result<Vec<_>>>()?;
            summaries.extend(write_roc(&dir, ewi.as_str(), &scores, &positive, &mut m)?);
        }
    }

    if per_class > 0 {
        let kind: ModelKind = s.get("scenario_model")?;
        let len = models[0].window;
        let tests = simulate_test_series(
            kind,
            per_class,
            1.0,
            len,
            s.seed()?,
            &RunSettings::default(),
            s.workers()?,
        )?;
        let traces_dir = dir.join("traces");
        std::fs::create_dir_all(&traces_dir).map_err(|e| Error::Io {
            path: traces_dir.clone(),
            source: e,
        })?;
        let mut traces = Vec::new();
        let (mut learned, mut positive) = (Vec::new(), Vec::new());
        let mut generic = vec![Vec::new(); Ewi::ALL.len()];
        for t in &tests {
            let trace = expanding_predictions(&models, &t.series, len)?;
            let path = traces_dir.join(format!("{}_{}.csv", t.scenario.id, t.scenario.class.as_str()));
            trace.write_csv(create(&path)?)?;
            let tail = last_k_scores(&trace.scores(), last_k);
            positive.extend(std::iter::repeat_n(
                t.scenario.class == Class::Transcritical,
                tail.len(),
            ));
            learned.extend(tail);
            for (slot, ewi) in generic.iter_mut().zip(Ewi::ALL) {
                let taus: Vec<f64> = expanding_tau(&t.series, ewi)?
                    .taus
                    .iter()
                    .map(|v| v.unwrap_or(0.0))
                    .collect();
                slot.extend(last_k_scores(&taus, last_k));
            }
            traces.push((t.scenario.class, trace));
        }
        m.output(&traces_dir);
        summaries.extend(write_roc(&dir, "learned_last_k", &learned, &positive, &mut m)?);
        for (scores, ewi) in generic.iter().zip(Ewi::ALL) {
            let name = format!("{}_last_k", ewi.as_str());
            summaries.extend(write_roc(&dir, &name, scores, &positive, &mut m)?);
        }
        let table = favored_class_frequencies(traces.iter().map(|(c, t)| (*c, t)), last_k);
        let path = dir.join("frequencies.csv");
        table.write_csv(create(&path)?)?;
        m.output(&path);
    }

    for summary in &mut summaries {
        summary.model = model_label.clone();
    }
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summaries).expect("summaries serialize");
    std::fs::write(&path, text + "\n").map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    m.output(&path);
    m.write(&s, &dir)?;
    Ok(())
}

fn serial_interval(s: &Settings) -> Result<ews_core::empirical::SerialInterval> {
    discretize_serial_interval(
        s.opt("si_mean")?.unwrap_or(SERIAL_INTERVAL_MEAN),
        s.opt("si_sd")?.unwrap_or(SERIAL_INTERVAL_SD),
    )
}

fn re(s: Settings) -> Result<()> {
    let input: PathBuf = s.get("input")?;
    let cases = CaseSeries::load(&input)?;
    let si = serial_interval(&s)?;
    let values = estimate_re(&cases, &si, s.opt("window")?.unwrap_or(RE_WINDOW))?;
    let dir = s.out_dir()?;
    let mut m = Manifest::new("re", &s)?;
    m.input(&input)?;
    let path = dir.join("re.csv");
    write_re_csv(&cases, &values, create(&path)?)?;
    m.output(&path);
    m.extra(json!({ "serial_interval": si }));
    m.write(&s, &dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn slice(s: Settings) -> Result<()> {
    let input: PathBuf = s.get("input")?;
    let cases = CaseSeries::load(&input)?;
    let mut m = Manifest::new("slice", &s)?;
    m.input(&input)?;
    let values = match s.opt::<PathBuf>("re")? {
        Some(path) => {
            m.input(&path)?;
            let (start, values) = read_re_csv(open(&path)?)?;
            if start != cases.start || values.len() != cases.len() {
                return Err(Error::Schema {
                    column: "date".into(),
                    message: format!("{} does not cover the same days as {}", path.display(), input.display()),
                });
            }
            values
        }
        None => estimate_re(&cases, &serial_interval(&s)?, s.opt("window")?.unwrap_or(RE_WINDOW))?,
    };
    let subs = slice_subseries(&cases, &values)?;
    let dir = s.out_dir()?;
    for sub in &subs {
        let path = dir.join(sub.file_name());
        sub.cases.write_csv(create(&path)?)?;
        m.output(&path);
        println!("{}", path.display());
    }
    m.extra(json!({ "subseries": subs.len() }));
    m.write(&s, &dir)?;
    Ok(())
}
