//! Batch generation of labeled training windows.
//!
//! Row `k` of a dataset depends only on `(master seed, k)`: it draws its
//! scenario from stream `k`, so the file is identical for any worker
//! count.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::DEFAULT_SPAN;
use crate::scenario::{
    extract_window, make_residuals, normalize_window, run_scenario, sample_scenario, Class, ModelKind, RunSettings,
    Scenario, Window,
};
use crate::sde::csv_err;
use crate::stream::stream;

/// Scenarios requested from one model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetGroup {
    pub kind: ModelKind,
    pub transcritical: usize,
    pub null: usize,
    /// Upper limit of the noise-intensity distribution (1 by default, 2 for
    /// the doubled-intensity white-noise batch).
    pub sigma_upper: f64,
}

impl DatasetGroup {
    pub fn new(kind: ModelKind, transcritical: usize, null: usize) -> Self {
        DatasetGroup {
            kind,
            transcritical,
            null,
            sigma_upper: 1.0,
        }
    }

    pub fn sigma_upper(mut self, upper: f64) -> Self {
        self.sigma_upper = upper;
        self
    }
}

/// `kind:transcritical:null[:sigma_upper]`.
impl FromStr for DatasetGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidValue {
            key: "groups".into(),
            message: format!("`{s}`: {m} (expected kind:transcritical:null[:sigma_upper])"),
        };
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad("wrong number of fields"));
        }
        let kind: ModelKind = parts[0].parse()?;
        let transcritical = parts[1].parse().map_err(|_| bad("bad transcritical count"))?;
        let null = parts[2].parse().map_err(|_| bad("bad null count"))?;
        let sigma_upper = match parts.get(3) {
            Some(v) => v.parse().map_err(|_| bad("bad sigma upper limit"))?,
            None => 1.0,
        };
        Ok(DatasetGroup {
            kind,
            transcritical,
            null,
            sigma_upper,
        })
    }
}

/// What to do with a scenario whose residual window is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneratePolicy {
    /// Draw a fresh scenario for the row, up to `max_attempts` times.
    Resample,
    /// Keep the all-zero window unnormalized.
    Keep,
}

impl FromStr for DegeneratePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resample" => Ok(DegeneratePolicy::Resample),
            "keep" => Ok(DegeneratePolicy::Keep),
            other => Err(Error::InvalidValue {
                key: "degenerate".into(),
                message: format!("`{other}` (expected resample or keep)"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub groups: Vec<DatasetGroup>,
    pub window: usize,
    pub seed: u64,
    pub settings: RunSettings,
    pub span: f64,
    pub degenerate: DegeneratePolicy,
    pub max_attempts: usize,
}

impl DatasetConfig {
    pub fn new(groups: Vec<DatasetGroup>, window: usize, seed: u64) -> Self {
        DatasetConfig {
            groups,
            window,
            seed,
            settings: RunSettings::default(),
            span: DEFAULT_SPAN,
            degenerate: DegeneratePolicy::Resample,
            max_attempts: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window != 100 && self.window != 500 {
            return Err(Error::contract(format!(
                "window length must be 100 or 500, got {}",
                self.window
            )));
        }
        self.settings.steps_per_unit()?;
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(Error::contract("lowess span must lie in (0, 1]"));
        }
        if self.max_attempts == 0 {
            return Err(Error::contract("max_attempts must be >= 1"));
        }
        if self.rows() == 0 {
            return Err(Error::contract("dataset requests no scenarios"));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.groups.iter().map(|g| g.transcritical + g.null).sum()
    }

    /// `(kind, class, sigma_upper)` for every row in file order.
    fn plan(&self) -> Vec<(ModelKind, Class, f64)> {
        let mut plan = Vec::with_capacity(self.rows());
        for g in &self.groups {
            plan.extend(std::iter::repeat_n(
                (g.kind, Class::Transcritical, g.sigma_upper),
                g.transcritical,
            ));
            plan.extend(std::iter::repeat_n((g.kind, Class::Null, g.sigma_upper), g.null));
        }
        plan
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub window: Window,
    pub scenario: Scenario,
    /// Scenario draws spent on this row (1 unless resampled).
    pub attempts: usize,
    /// The window is all zeros and was not normalized.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub rows: Vec<DatasetRow>,
}

fn build_row(config: &DatasetConfig, index: usize, kind: ModelKind, class: Class, upper: f64) -> Result<DatasetRow> {
    let id = index as u64;
    let mut rng = stream(config.seed, id);
    for attempt in 1..=config.max_attempts {
        let scenario = sample_scenario(&mut rng, id, class, kind, upper)?;
        let traj = run_scenario(&scenario, &config.settings)?;
        let series = traj.infected();
        let residuals = make_residuals(&series, config.span).map_err(|e| Error::Scenario {
            scenario: id,
            source: Box::new(e),
        })?;
        let raw = extract_window(&residuals, class, config.window, id)?;
        match normalize_window(&raw) {
            Ok(window) => {
                return Ok(DatasetRow {
                    window,
                    scenario,
                    attempts: attempt,
                    degenerate: false,
                })
            }
            Err(Error::DegenerateWindow) if config.degenerate == DegeneratePolicy::Keep => {
                return Ok(DatasetRow {
                    window: raw,
                    scenario,
                    attempts: attempt,
                    degenerate: true,
                })
            }
            Err(Error::DegenerateWindow) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Scenario {
        scenario: id,
        source: Box::new(Error::contract(format!(
            "{kind} {class}: every one of {} scenario draws produced an all-zero window",
            config.max_attempts
        ))),
    })
}

/// Raw infected series of an unseen scenario, cut to its final points.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSeries {
    pub scenario: Scenario,
    pub series: Vec<f64>,
}

/// `per_class` transcritical then `per_class` null scenarios of `kind`,
/// each keeping the last `len` unit-time points of I. Row `i` uses
/// stream `i` of `seed`, so results do not depend on `workers`.
pub fn simulate_test_series(
    kind: ModelKind,
    per_class: usize,
    sigma_upper: f64,
    len: usize,
    seed: u64,
    settings: &RunSettings,
    workers: usize,
) -> Result<Vec<TestSeries>> {
    if len == 0 {
        return Err(Error::contract("test series length must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..2 * per_class)
            .into_par_iter()
            .map(|i| {
                let class = if i < per_class {
                    Class::Transcritical
                } else {
                    Class::Null
                };
                let id = i as u64;
                let scenario = sample_scenario(&mut stream(seed, id), id, class, kind, sigma_upper)?;
                let series = run_scenario(&scenario, settings)?.infected();
                let series = series[series.len().saturating_sub(len)..].to_vec();
                Ok(TestSeries { scenario, series })
            })
            .collect()
    })
}

/// Simulates every requested scenario on `workers` threads.
pub fn generate_dataset(config: &DatasetConfig, workers: usize) -> Result<Dataset> {
    config.validate()?;
    let plan = config.plan();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        plan.par_iter()
            .enumerate()
            .map(|(i, &(kind, class, upper))| build_row(config, i, kind, class, upper))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Dataset {
        config: config.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: DatasetConfig,
    pub master_seed: u64,
    pub row_count: usize,
    pub rows_per_class: BTreeMap<String, usize>,
    pub resampled_draws: usize,
    pub degenerate_rows: usize,
}

impl Dataset {
    pub fn manifest(&self) -> DatasetManifest {
        let mut rows_per_class = BTreeMap::new();
        for r in &self.rows {
            *rows_per_class.entry(r.window.label.to_string()).or_insert(0) += 1;
        }
        DatasetManifest {
            config: self.config.clone(),
            master_seed: self.config.seed,
            row_count: self.rows.len(),
            rows_per_class,
            resampled_draws: self.rows.iter().map(|r| r.attempts - 1).sum(),
            degenerate_rows: self.rows.iter().filter(|r| r.degenerate).count(),
        }
    }

    /// `scenario_id,model,class,pad_count,v0,…,v{L−1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows: Vec<LabeledWindow> = self
            .rows
            .iter()
            .map(|r| LabeledWindow {
                scenario_id: r.scenario.id,
                kind: r.scenario.kind,
                window: r.window.clone(),
            })
            .collect();
        write_dataset_csv(&rows, self.config.window, out)
    }

    /// Per-row provenance: the sampled scenario behind each window.
    pub fn write_scenarios_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scenario_id",
            "model",
            "class",
            "seed",
            "beta0",
            "beta1",
            "beta_c",
            "sigmas",
            "transition_time",
            "pad_count",
            "attempts",
            "degenerate",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            let s = &r.scenario;
            let sigmas: Vec<String> = s.sigmas.iter().map(f64::to_string).collect();
            w.write_record([
                s.id.to_string(),
                s.kind.to_string(),
                s.class.to_string(),
                s.seed.to_string(),
                s.beta.beta0.to_string(),
                s.beta.beta1.to_string(),
                s.beta_c.to_string(),
                sigmas.join(";"),
                s.transition_time.map(|t| t.to_string()).unwrap_or_default(),
                r.window.pad_count.to_string(),
                r.attempts.to_string(),
                r.degenerate.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<scenarios>", e))?;
        Ok(())
    }
}

/// One dataset row as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub scenario_id: u64,
    pub kind: ModelKind,
    pub window: Window,
}

pub fn write_dataset_csv<W: Write>(rows: &[LabeledWindow], len: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["scenario_id", "model", "class", "pad_count"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..len).map(|i| format!("v{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        if r.window.len() != len {
            return Err(Error::contract("window length differs from dataset length"));
        }
        let mut rec = vec![
            r.scenario_id.to_string(),
            r.kind.to_string(),
            r.window.label.to_string(),
            r.window.pad_count.to_string(),
        ];
        rec.extend(r.window.values.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

/// Parses a dataset CSV, checking the header and every cell.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<LabeledWindow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let fixed = ["scenario_id", "model", "class", "pad_count"];
    for (i, name) in fixed.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == *name => {}
            other => {
                return Err(Error::Schema {
                    column: other.unwrap_or("<missing>").to_string(),
                    message: format!("expected column {} to be `{name}`", i + 1),
                })
            }
        }
    }
    let len = header.len() - fixed.len();
    if len == 0 {
        return Err(Error::Schema {
            column: "v0".into(),
            message: "dataset has no value columns".into(),
        });
    }
    for (k, h) in header.iter().skip(fixed.len()).enumerate() {
        if h != format!("v{k}") {
            return Err(Error::Schema {
                column: h.to_string(),
                message: format!("expected `v{k}`"),
            });
        }
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let parse_err = |col: &str, v: &str| Error::Parse {
            line,
            message: format!("column `{col}`: cannot parse `{v}`"),
        };
        let scenario_id = rec[0].parse().map_err(|_| parse_err("scenario_id", &rec[0]))?;
        let kind: ModelKind = rec[1].parse().map_err(|_| parse_err("model", &rec[1]))?;
        let label: Class = rec[2].parse().map_err(|_| parse_err("class", &rec[2]))?;
        let pad_count: usize = rec[3].parse().map_err(|_| parse_err("pad_count", &rec[3]))?;
        if pad_count >= len {
            return Err(Error::Parse {
                line,
                message: format!("pad_count {pad_count} leaves no observed values"),
            });
        }
        let mut values = Vec::with_capacity(len);
        for (k, cell) in rec.iter().skip(fixed.len()).enumerate() {
            let v: f64 = cell.parse().map_err(|_| parse_err(&format!("v{k}"), cell))?;
            if !v.is_finite() {
                return Err(parse_err(&format!("v{k}"), cell));
            }
            values.push(v);
        }
        if values[len - pad_count..].iter().any(|v| *v != 0.0) {
            return Err(Error::Parse {
                line,
                message: "padded tail is not zero".into(),
            });
        }
        rows.push(LabeledWindow {
            scenario_id,
            kind,
            window: Window {
                values,
                label,
                pad_count,
                source: scenario_id,
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_parsing() {
        let g: DatasetGroup = "sir-white:10:12".parse().unwrap();
        assert_eq!(g, DatasetGroup::new(ModelKind::SirWhite, 10, 12));
        let g: DatasetGroup = "sir-white:1:1:2".parse().unwrap();
        assert_eq!(g.sigma_upper, 2.0);
        assert!("sir-white:1".parse::<DatasetGroup>().is_err());
        assert!("foo:1:1".parse::<DatasetGroup>().is_err());
        assert!("sir-white:x:1".parse::<DatasetGroup>().is_err());
    }

    #[test]
    fn small_dataset_is_balanced_and_reproducible() {
        let cfg = DatasetConfig::new(vec![DatasetGroup::new(ModelKind::SirWhite, 3, 3)], 100, 11);
        let a = generate_dataset(&cfg, 1).unwrap();
        assert_eq!(a.rows.len(), 6);
        let m = a.manifest();
        assert_eq!(m.rows_per_class["transcritical"], 3);
        assert_eq!(m.rows_per_class["null"], 3);
        for r in &a.rows {
            assert_eq!(r.window.len(), 100);
            assert_eq!(r.window.label, r.scenario.class);
            if let Some(t) = r.scenario.transition_time {
                assert!(t <= 1500.0);
            }
        }
        let b = generate_dataset(&cfg, 2).unwrap();
        let (mut fa, mut fb) = (Vec::new(), Vec::new());
        a.write_csv(&mut fa).unwrap();
        b.write_csv(&mut fb).unwrap();
        assert_eq!(fa, fb);
        let back = read_dataset_csv(&fa[..]).unwrap();
        assert_eq!(back.len(), 6);
        assert_eq!(back[4].window, a.rows[4].window);
    }

    #[test]
    fn demographic_rows_cannot_be_resampled_into_shape() {
        let mut cfg = DatasetConfig::new(vec![DatasetGroup::new(ModelKind::SirDemographic, 1, 0)], 100, 1);
        cfg.max_attempts = 2;
        let err = generate_dataset(&cfg, 1).unwrap_err();
        assert!(err.to_string().contains("all-zero"), "{err}");
        cfg.degenerate = DegeneratePolicy::Keep;
        let ds = generate_dataset(&cfg, 1).unwrap();
        assert!(ds.rows[0].degenerate);
        assert!(ds.rows[0].window.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = DatasetConfig::new(vec![DatasetGroup::new(ModelKind::SirWhite, 1, 1)], 250, 1);
        assert!(generate_dataset(&cfg, 1).is_err());
        let empty = DatasetConfig::new(vec![], 100, 1);
        assert!(generate_dataset(&empty, 1).is_err());
    }

    #[test]
    fn reader_reports_schema_errors() {
        let bad_header = "scenario_id,kind,class,pad_count,v0\n";
        match read_dataset_csv(bad_header.as_bytes()) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "kind"),
            other => panic!("{other:?}"),
        }
        let gap = "scenario_id,model,class,pad_count,v0,v2\n";
        assert!(matches!(read_dataset_csv(gap.as_bytes()), Err(Error::Schema { .. })));
        let bad_cell = "scenario_id,model,class,pad_count,v0,v1\n0,sir-white,null,0,1.0,abc\n";
        assert!(matches!(
            read_dataset_csv(bad_cell.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad_pad = "scenario_id,model,class,pad_count,v0,v1\n0,sir-white,null,1,1.0,2.0\n";
        assert!(read_dataset_csv(bad_pad.as_bytes()).is_err());
    }
}
