//! Multi-seed experiment campaigns: per-seed split/normalize/train/
//! evaluate pipelines and their aggregation.
//!
//! Seed runs are independent and may execute on parallel workers; the
//! report content depends only on the inputs and seed list, never on
//! scheduling. Wall-clock timings are recorded per seed but kept out
//! of the report serializations so report files are byte-reproducible.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{split, zscore_fit_apply, RawTable};
use crate::error::{Error, Result};
use crate::inference::predict;
use crate::metrics::{aggregate, picp, pinaw, rmse, MetricAggregate};
use crate::params::{constrain, ModelSpec};
use crate::train::{train, TrainConfig};

/// Everything a campaign needs besides the table and the seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSettings {
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub split_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeedOutcome {
    Ok { rmse: f64, picp: f64, pinaw: f64, epochs: usize },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: SeedOutcome,
    pub wall_time_ms: u64,
}

impl SeedRecord {
    pub fn is_ok(&self) -> bool {
        matches!(self.outcome, SeedOutcome::Ok { .. })
    }
}

/// Per-seed records (sorted by seed) plus aggregates over the
/// successful ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub records: Vec<SeedRecord>,
    pub failed_seeds: Vec<u64>,
    pub rmse: Option<MetricAggregate>,
    pub picp: Option<MetricAggregate>,
    pub pinaw: Option<MetricAggregate>,
}

impl ExperimentReport {
    pub fn from_records(mut records: Vec<SeedRecord>) -> Result<ExperimentReport> {
        if records.is_empty() {
            return Err(Error::config("a campaign needs at least one seed".to_string()));
        }
        records.sort_by_key(|r| r.seed);
        let mut rmses = Vec::new();
        let mut picps = Vec::new();
        let mut pinaws = Vec::new();
        let mut failed_seeds = Vec::new();
        for r in &records {
            match &r.outcome {
                SeedOutcome::Ok { rmse, picp, pinaw, .. } => {
                    rmses.push(*rmse);
                    picps.push(*picp);
                    pinaws.push(*pinaw);
                }
                SeedOutcome::Failed { .. } => failed_seeds.push(r.seed),
            }
        }
        let agg = |v: &[f64]| -> Option<MetricAggregate> {
            if v.is_empty() {
                None
            } else {
                Some(aggregate(v).expect("non-empty"))
            }
        };
        Ok(ExperimentReport {
            failed_seeds,
            rmse: agg(&rmses),
            picp: agg(&picps),
            pinaw: agg(&pinaws),
            records,
        })
    }

    pub fn all_failed(&self) -> bool {
        self.records.iter().all(|r| !r.is_ok())
    }

    /// Per-seed rows as CSV. Timing is intentionally absent so the
    /// bytes depend only on inputs.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["seed", "rmse", "picp", "pinaw", "epochs", "status"]).unwrap();
        for r in &self.records {
            match &r.outcome {
                SeedOutcome::Ok { rmse, picp, pinaw, epochs } => {
                    w.write_record([
                        r.seed.to_string(),
                        format!("{rmse}"),
                        format!("{picp}"),
                        format!("{pinaw}"),
                        epochs.to_string(),
                        "ok".to_string(),
                    ])
                    .unwrap();
                }
                SeedOutcome::Failed { error } => {
                    w.write_record([
                        r.seed.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("failed: {error}"),
                    ])
                    .unwrap();
                }
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Aggregates plus a config echo as a JSON document. Raw metric
    /// values and the x100 presentation scaling are both included.
    pub fn to_summary_json(&self, config_echo: &serde_json::Value, tool_version: &str) -> String {
        #[derive(Serialize)]
        struct Scaled {
            raw: MetricAggregate,
            mean_x100: f64,
            std_x100: f64,
        }
        let scaled = |a: &Option<MetricAggregate>| {
            a.map(|a| Scaled { raw: a, mean_x100: a.mean * 100.0, std_x100: a.std * 100.0 })
        };
        let doc = serde_json::json!({
            "tool_version": tool_version,
            "config": config_echo,
            "seeds": self.records.iter().map(|r| r.seed).collect::<Vec<_>>(),
            "failed_seeds": self.failed_seeds,
            "rmse": scaled(&self.rmse),
            "picp": self.picp.as_ref(),
            "pinaw": scaled(&self.pinaw),
        });
        serde_json::to_string_pretty(&doc).expect("serializable")
    }
}

/// Runs one seed end to end: split, fit normalization on the train
/// part, init, train, evaluate on the test part (normalized units).
pub fn run_seed(table: &RawTable, settings: &CampaignSettings, seed: u64) -> Result<SeedOutcome> {
    let (train_raw, test_raw) = split(table, settings.split_ratio, seed)?;
    if test_raw.is_empty() {
        return Err(Error::data("split left the test set empty".to_string()));
    }
    let (train_ds, test_ds, _dropped) = zscore_fit_apply(&train_raw, &test_raw)?;
    let model_cfg = settings.model.with_inputs(train_ds.input_dim())?;
    let train_cfg = TrainConfig { seed, ..settings.train.clone() };

    let (best, _trace) = train(&train_ds, &model_cfg, &train_cfg)?;
    let params = constrain(&best, &model_cfg)?;

    let mut points = Vec::with_capacity(test_ds.len());
    let mut lows = Vec::with_capacity(test_ds.len());
    let mut highs = Vec::with_capacity(test_ds.len());
    for x in &test_ds.features {
        let pred = predict(x, &params, &model_cfg)?;
        points.push(pred.point);
        lows.push(pred.lower);
        highs.push(pred.upper);
    }
    Ok(SeedOutcome::Ok {
        rmse: rmse(&test_ds.targets, &points)?,
        picp: picp(&test_ds.targets, &lows, &highs)?,
        pinaw: pinaw(&test_ds.targets, &lows, &highs)?,
        epochs: train_cfg.epochs,
    })
}

/// [`run_seed`] with errors folded into a failed record and the wall
/// time attached.
pub fn run_seed_record(table: &RawTable, settings: &CampaignSettings, seed: u64) -> SeedRecord {
    let started = Instant::now();
    let outcome = match run_seed(table, settings, seed) {
        Ok(outcome) => outcome,
        Err(e) => SeedOutcome::Failed { error: e.to_string() },
    };
    SeedRecord { seed, outcome, wall_time_ms: started.elapsed().as_millis() as u64 }
}

/// Runs the given seeds on up to `workers` threads. `on_record` fires
/// once per finished seed (completion order); the returned records are
/// sorted by seed and independent of the worker count.
pub fn run_seeds_parallel(
    table: &RawTable,
    settings: &CampaignSettings,
    seeds: &[u64],
    workers: usize,
    mut on_record: impl FnMut(&SeedRecord),
) -> Vec<SeedRecord> {
    let workers = workers.max(1).min(seeds.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<SeedRecord>();
    let mut records = Vec::with_capacity(seeds.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let record = run_seed_record(table, settings, seeds[i]);
                if tx.send(record).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        while let Ok(record) = rx.recv() {
            on_record(&record);
            records.push(record);
        }
    });

    records.sort_by_key(|r| r.seed);
    records
}

/// Full campaign over seeds `1..=n_seeds`.
pub fn run_campaign(
    table: &RawTable,
    settings: &CampaignSettings,
    n_seeds: usize,
    workers: usize,
) -> Result<ExperimentReport> {
    if n_seeds < 1 {
        return Err(Error::config("campaign needs at least one seed".to_string()));
    }
    let seeds: Vec<u64> = (1..=n_seeds as u64).collect();
    let records = run_seeds_parallel(table, settings, &seeds, workers, |_| {});
    ExperimentReport::from_records(records)
}
