//! One-axis parameter sweeps over the pipeline.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use recc_core::{FeatureCombo, LossMask};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::pipeline::{self, RunError};
use crate::report::RunReport;

pub const SAMPLE_COUNT_RANGE: std::ops::RangeInclusive<usize> = 1..=5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    KPos,
    KNeg,
    Combo,
    LossMask,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            Self::KPos => "k_p",
            Self::KNeg => "k_n",
            Self::Combo => "combo",
            Self::LossMask => "loss_mask",
        }
    }

    /// The full value set of the axis.
    pub fn default_values(self) -> Vec<String> {
        match self {
            Self::KPos | Self::KNeg => SAMPLE_COUNT_RANGE.map(|v| v.to_string()).collect(),
            Self::Combo => FeatureCombo::ALL.iter().map(|c| c.to_string()).collect(),
            Self::LossMask => [LossMask::BOTH, LossMask::CON_ONLY, LossMask::KL_ONLY].iter().map(|m| m.to_string()).collect(),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepAxis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "k_p" | "kp" => Ok(Self::KPos),
            "k_n" | "kn" => Ok(Self::KNeg),
            "combo" => Ok(Self::Combo),
            "loss_mask" | "loss" => Ok(Self::LossMask),
            other => Err(SweepError::UnknownAxis(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown sweep axis `{0}` (expected k_p, k_n, combo or loss_mask)")]
    UnknownAxis(String),
    #[error("{axis} value `{value}` is invalid: {reason}")]
    InvalidValue { axis: SweepAxis, value: String, reason: String },
    #[error("sweep has no values")]
    Empty,
}

/// One sweep point; a failed run keeps its error message.
#[derive(Debug)]
pub struct SweepRun {
    pub value: String,
    pub result: Result<RunReport, RunError>,
}

/// Builds the per-value config, writing into `<out_dir>/sweep/<axis>=<value>`.
pub fn point_config(base: &PipelineConfig, axis: SweepAxis, value: &str) -> Result<PipelineConfig, SweepError> {
    let invalid = |reason: String| SweepError::InvalidValue { axis, value: value.to_string(), reason };
    let mut cfg = base.clone();
    cfg.set(axis.key(), value).map_err(|e| invalid(e.to_string()))?;
    if matches!(axis, SweepAxis::KPos | SweepAxis::KNeg) {
        let v: usize = value.parse().map_err(|_| invalid("not an integer".into()))?;
        if !SAMPLE_COUNT_RANGE.contains(&v) {
            return Err(invalid(format!("outside [{}, {}]", SAMPLE_COUNT_RANGE.start(), SAMPLE_COUNT_RANGE.end())));
        }
    }
    let dir_value = cfg.get(axis.key()).unwrap_or_default().replace('+', "_");
    cfg.out_dir = base.out_dir.join("sweep").join(format!("{}={dir_value}", axis.key()));
    Ok(cfg)
}

/// Runs every value of the axis, `jobs` at a time. Runs share only the
/// similarity cache under `<out_dir>/cache`.
pub fn run_sweep(base: &PipelineConfig, axis: SweepAxis, values: &[String], jobs: usize) -> Result<Vec<SweepRun>, SweepError> {
    if values.is_empty() {
        return Err(SweepError::Empty);
    }
    let configs = values.iter().map(|v| point_config(base, axis, v)).collect::<Result<Vec<_>, _>>()?;
    let cache = pipeline::cache_dir(&base.out_dir);
    let slots: Vec<Mutex<Option<SweepRun>>> = values.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, values.len()) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("sweep counter");
                    let i = *n;
                    *n += 1;
                    i
                };
                if i >= values.len() {
                    break;
                }
                log::info!("sweep {axis} = {}", values[i]);
                let result = pipeline::run_pipeline_in(&configs[i], &cache).map(|r| r.report);
                if let Err(e) = &result {
                    log::error!("sweep {axis} = {}: {e}", values[i]);
                }
                *slots[i].lock().expect("sweep slot") = Some(SweepRun { value: values[i].clone(), result });
            });
        }
    });
    Ok(slots.into_iter().map(|s| s.into_inner().expect("sweep slot").expect("every slot filled")).collect())
}

/// One row per sweep point; failed runs carry the error and empty metrics.
pub fn sweep_csv(axis: SweepAxis, runs: &[SweepRun]) -> String {
    let mut out = String::from(
        "axis,value,status,acc,nmi,ari,last_l_re,last_l_con,last_l_kl,inertia,n_influential,finetune_seconds,error\n",
    );
    for run in runs {
        match &run.result {
            Ok(r) => {
                let m = &r.metrics;
                let (acc, nmi, ari) = m.eval.map_or((String::new(), String::new(), String::new()), |e| {
                    (e.acc.to_string(), e.nmi.to_string(), e.ari.to_string())
                });
                out.push_str(&format!(
                    "{axis},{},ok,{acc},{nmi},{ari},{},{},{},{},{},{},\n",
                    run.value,
                    m.pretrain.last_l_re,
                    m.finetune.last_l_con,
                    m.finetune.last_l_kl,
                    m.clustering.inertia,
                    m.clustering.n_influential,
                    r.timings.stages.finetune,
                ));
            }
            Err(e) => {
                let msg = e.to_string().replace(['"', '\n'], " ");
                out.push_str(&format!("{axis},{},error,,,,,,,,,,\"{msg}\"\n", run.value));
            }
        }
    }
    out
}
