//! Back end of the `ehmmse` command line: frontier tables, campaigns,
//! heatmaps and the verification suites, rendered as CSV or JSON.
//!
//! CSV files always carry a header row; floats use 17 significant digits and
//! an empty cell means "not applicable". Identical `(config, seed)` inputs give
//! identical bytes.

mod config;
mod verify;

pub use config::{
    BasisSpec, BoundSpec, ExperimentConfig, Format, HeatmapSpec, OutputSpec, SignalSpec,
    VerifySpec, PRESETS,
};
pub use verify::{run_verify, Check, VerifyReport};

use std::fmt::Write as _;

use serde::Serialize;

use crate::bounds::tightest_frontier;
use crate::energy::ArrivalModel;
use crate::error::Result;
use crate::estimation::run_campaign;
use crate::VERSION;

/// Float cell with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub q: usize,
    pub p_mse: f64,
    /// `err_bound / P_x`, in `(0, 1]`.
    pub err_bound_normalized: f64,
    /// `I`, `II`, `I_equidistant` or `none` when no family reaches the target.
    pub family: String,
    pub r: Option<f64>,
    /// `r` on the normalized `(0, 1]` scale (`eta_U r` for Bounds I/II).
    pub r_normalized: Option<f64>,
    pub gamma: Option<f64>,
    pub tail: Option<String>,
    pub prob_lower: Option<f64>,
    pub vacuous: bool,
}

pub const BOUND_HEADER: &str =
    "q,p_MSE,err_bound_normalized,family,r,r_normalized,gamma,tail,prob_lower,vacuous";

/// Frontier for every configured slot length.
pub fn run_bound(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    cfg.validate()?;
    let model = cfg.signal.build()?;
    let arrivals = cfg.arrival_model()?;
    let opts = cfg.bound.frontier_options();
    let mut rows = Vec::new();
    for &q in &cfg.q {
        let frontier = tightest_frontier(&model, &arrivals, q, &cfg.bound.prob_grid, &opts)?;
        for fp in frontier {
            let p = fp.point;
            rows.push(BoundRow {
                q,
                p_mse: fp.target,
                err_bound_normalized: fp.err_bound / model.power(),
                family: p.map_or("none".into(), |p| p.family.name().into()),
                r: p.map(|p| p.r),
                r_normalized: p.map(|p| match p.family {
                    crate::bounds::Family::IEquidistant => p.r,
                    _ => p.r * model.eta_upper(),
                }),
                gamma: p.and_then(|p| p.gamma),
                tail: p.map(|p| p.tail.name().into()),
                prob_lower: p.map(|p| p.prob_lower),
                vacuous: fp.vacuous,
            });
        }
    }
    Ok(rows)
}

pub fn bound_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from(BOUND_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.q,
            fmt_f64(r.p_mse),
            fmt_f64(r.err_bound_normalized),
            r.family,
            fmt_opt(r.r),
            fmt_opt(r.r_normalized),
            fmt_opt(r.gamma),
            r.tail.as_deref().unwrap_or(""),
            fmt_opt(r.prob_lower),
            r.vacuous
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub q: usize,
    pub trial: usize,
    pub seed: u64,
    pub mmse: f64,
    pub mmse_normalized: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub q: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_probability: f64,
    pub mean_mmse_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub q: usize,
    pub s: usize,
    pub p: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SimulateOutput {
    Campaigns {
        summaries: Vec<CampaignSummary>,
        trials: Vec<TrialRow>,
    },
    Heatmap {
        cells: Vec<HeatmapRow>,
    },
}

pub const TRIAL_HEADER: &str = "q,trial,seed,mmse,mmse_normalized,success";
pub const HEATMAP_HEADER: &str = "q,s,p,trials,successes,success_probability";

/// Campaigns for each slot length, or the `(p, s)` heatmap if configured.
///
/// Heatmap cells share the master seed, so every cell sees the same uniform
/// draws; with Bernoulli arrivals (`u < p`) the energy of every packet is then
/// monotone in `p` across cells.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    let threshold = cfg.threshold * cfg.signal.power;
    if let Some(h) = &cfg.heatmap {
        let mut cells = Vec::new();
        for &q in &cfg.q {
            for &s in &h.s_values {
                let model = cfg.signal.build_with_s(s)?;
                let tx = cfg.transmission(model.n(), q)?;
                for &p in &h.p_values {
                    let arrivals = ArrivalModel::bernoulli(p, h.e0)?;
                    let c = run_campaign(&model, &tx, &arrivals, cfg.trials, threshold, cfg.seed)?;
                    let successes = c.records.iter().filter(|r| r.success).count();
                    cells.push(HeatmapRow {
                        q,
                        s,
                        p,
                        trials: cfg.trials,
                        successes,
                        success_probability: c.success_probability,
                    });
                }
            }
        }
        return Ok(SimulateOutput::Heatmap { cells });
    }
    let model = cfg.signal.build()?;
    let arrivals = cfg.arrival_model()?;
    let mut summaries = Vec::new();
    let mut trials = Vec::new();
    for &q in &cfg.q {
        let tx = cfg.transmission(model.n(), q)?;
        let c = run_campaign(&model, &tx, &arrivals, cfg.trials, threshold, cfg.seed)?;
        let successes = c.records.iter().filter(|r| r.success).count();
        summaries.push(CampaignSummary {
            q,
            trials: cfg.trials,
            successes,
            success_probability: c.success_probability,
            mean_mmse_normalized: c.mean_error() / model.power(),
        });
        trials.extend(c.records.iter().map(|r| TrialRow {
            q,
            trial: r.index,
            seed: r.seed,
            mmse: r.mmse,
            mmse_normalized: r.mmse / model.power(),
            success: r.success,
        }));
    }
    Ok(SimulateOutput::Campaigns { summaries, trials })
}

pub fn simulate_csv(out: &SimulateOutput) -> String {
    let mut s = String::new();
    match out {
        SimulateOutput::Campaigns { trials, .. } => {
            s.push_str(TRIAL_HEADER);
            s.push('\n');
            for t in trials {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    t.q,
                    t.trial,
                    t.seed,
                    fmt_f64(t.mmse),
                    fmt_f64(t.mmse_normalized),
                    t.success
                );
            }
        }
        SimulateOutput::Heatmap { cells } => {
            s.push_str(HEATMAP_HEADER);
            s.push('\n');
            for c in cells {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    c.q,
                    c.s,
                    fmt_f64(c.p),
                    c.trials,
                    c.successes,
                    fmt_f64(c.success_probability)
                );
            }
        }
    }
    s
}

/// Provenance record written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: &'a ExperimentConfig,
    pub summary: T,
}

impl<'a, T: Serialize> Sidecar<'a, T> {
    pub fn new(command: &'static str, config: &'a ExperimentConfig, summary: T) -> Self {
        Self {
            tool: "ehmmse",
            version: VERSION,
            command,
            seed: config.seed,
            config,
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sidecar is serializable");
        s.push('\n');
        s
    }
}

/// JSON document with provenance and the full result.
pub fn json_document<T: Serialize>(command: &'static str, cfg: &ExperimentConfig, data: T) -> String {
    Sidecar::new(command, cfg, data).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.signal.n = 16;
        cfg.signal.power = 16.0;
        cfg.trials = 20;
        cfg.q = vec![1, 4];
        cfg.bound.prob_grid = vec![0.1, 0.5];
        cfg.bound.r_grid = 50;
        cfg.bound.gamma_grid = 20;
        cfg
    }

    #[test]
    fn float_cells_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0).parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn bound_table_shape() {
        let rows = run_bound(&small()).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.err_bound_normalized > 0.0 && r.err_bound_normalized <= 1.0);
        }
        let csv = bound_csv(&rows);
        assert!(csv.starts_with(BOUND_HEADER));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn single_trial_smoke_run() {
        let mut cfg = small();
        cfg.trials = 1;
        cfg.q = vec![4];
        match run_simulate(&cfg).unwrap() {
            SimulateOutput::Campaigns { trials, summaries } => {
                assert_eq!(trials.len(), 1);
                assert_eq!(summaries[0].trials, 1);
            }
            _ => panic!("expected campaigns"),
        }
    }

    #[test]
    fn heatmap_rows() {
        let mut cfg = small();
        cfg.heatmap = Some(HeatmapSpec {
            p_values: vec![0.2, 0.8],
            s_values: vec![2, 4],
            e0: 1.0,
        });
        let out = run_simulate(&cfg).unwrap();
        let csv = simulate_csv(&out);
        assert!(csv.starts_with(HEATMAP_HEADER));
        assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
        assert_eq!(csv, simulate_csv(&run_simulate(&cfg).unwrap()));
    }
}
