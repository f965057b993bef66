//! Experiment configuration (TOML) and the named presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{FrontierOptions, Tail};
use crate::energy::{ArrivalKind, ArrivalModel};
use crate::error::{Error, Result};
use crate::estimation::{Scheme, TransmissionConfig};
use crate::signal::SignalModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSpec {
    LowPassDft,
    Hadamard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub n: usize,
    pub s: usize,
    pub power: f64,
    pub noise_var: f64,
    pub basis: BasisSpec,
}

impl SignalSpec {
    pub fn build(&self) -> Result<SignalModel> {
        self.build_with_s(self.s)
    }

    pub fn build_with_s(&self, s: usize) -> Result<SignalModel> {
        match self.basis {
            BasisSpec::LowPassDft => SignalModel::build_lowpass_cwss(self.n, s, self.power, self.noise_var),
            BasisSpec::Hadamard => SignalModel::build_hadamard(self.n, s, self.power, self.noise_var),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSpec {
    pub prob_grid: Vec<f64>,
    pub r_grid: usize,
    pub gamma_grid: usize,
    pub refine_iters: usize,
    pub tails: Vec<Tail>,
}

impl Default for BoundSpec {
    fn default() -> Self {
        let d = FrontierOptions::default();
        Self {
            prob_grid: (1..=19).map(|i| i as f64 / 20.0).collect(),
            r_grid: d.r_grid,
            gamma_grid: d.gamma_grid,
            refine_iters: d.refine_iters,
            tails: d.tails,
        }
    }
}

impl BoundSpec {
    pub fn frontier_options(&self) -> FrontierOptions {
        FrontierOptions {
            r_grid: self.r_grid,
            gamma_grid: self.gamma_grid,
            refine_iters: self.refine_iters,
            tails: self.tails.clone(),
            ..FrontierOptions::default()
        }
    }
}

/// Bernoulli `(p, s)` sweep for the success-probability heatmaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSpec {
    pub p_values: Vec<f64>,
    pub s_values: Vec<usize>,
    pub e0: f64,
}

/// Scale knobs of the `verify` suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub mmse_instances: usize,
    pub estimator_samples: usize,
    pub r_points: usize,
    pub gamma_points: usize,
    pub t_points: usize,
    pub allocations: usize,
    pub equivalence_points: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            mmse_instances: 100,
            estimator_samples: 100_000,
            r_points: 10,
            gamma_points: 5,
            t_points: 20,
            allocations: 1000,
            equivalence_points: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Slot lengths to run.
    pub q: Vec<usize>,
    /// Success threshold on `eps / P_x`.
    pub threshold: f64,
    pub signal: SignalSpec,
    pub arrivals: ArrivalKind,
    pub scheme: Scheme,
    #[serde(default)]
    pub bound: BoundSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<HeatmapSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    /// Desk-scale setup: `N = 64`, `s = 4`, Bernoulli(0.4, 1) arrivals.
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 2000,
            q: vec![1, 2, 4, 8],
            threshold: 1e-2,
            signal: SignalSpec {
                n: 64,
                s: 4,
                power: 64.0,
                noise_var: 1e-4 * 64.0,
                basis: BasisSpec::LowPassDft,
            },
            arrivals: ArrivalKind::Bernoulli { p: 0.4, e0: 1.0 },
            scheme: Scheme::Block,
            bound: BoundSpec::default(),
            heatmap: None,
            verify: VerifySpec::default(),
            output: OutputSpec::default(),
        }
    }
}

pub const PRESETS: [&str; 6] = [
    "fig-bernoulli-s4",
    "fig-bernoulli-s16",
    "fig-uniform-s4",
    "fig-uniform-s16",
    "heatmap-q1",
    "heatmap-q32",
];

fn full_scale(s: usize, arrivals: ArrivalKind) -> ExperimentConfig {
    let n = 256;
    ExperimentConfig {
        trials: 500,
        signal: SignalSpec {
            n,
            s,
            power: n as f64,
            noise_var: 1e-4 * n as f64,
            basis: BasisSpec::LowPassDft,
        },
        arrivals,
        ..ExperimentConfig::default()
    }
}

impl ExperimentConfig {
    /// Named setups: `N = 256` frontiers and the `(p, s)` success heatmaps.
    pub fn preset(name: &str) -> Result<Self> {
        let bernoulli = ArrivalKind::Bernoulli { p: 0.4, e0: 1.0 };
        let uniform = ArrivalKind::Uniform { e_u: 0.8 };
        let heatmap = |q: usize| {
            let mut c = full_scale(4, bernoulli.clone());
            c.q = vec![q];
            c.heatmap = Some(HeatmapSpec {
                p_values: (1..=9).map(|i| i as f64 / 10.0).collect(),
                s_values: vec![2, 4, 8, 16, 32],
                e0: 1.0,
            });
            c
        };
        Ok(match name {
            "fig-bernoulli-s4" => full_scale(4, bernoulli),
            "fig-bernoulli-s16" => full_scale(16, bernoulli),
            "fig-uniform-s4" => full_scale(4, uniform),
            "fig-uniform-s16" => full_scale(16, uniform),
            "heatmap-q1" => heatmap(1),
            "heatmap-q32" => heatmap(32),
            other => {
                return Err(Error::invalid(
                    "preset",
                    format!("unknown preset `{other}`; expected one of {}", PRESETS.join(", ")),
                ))
            }
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Numerical(format!("config serialization: {e}")))
    }

    pub fn arrival_model(&self) -> Result<ArrivalModel> {
        ArrivalModel::new(self.arrivals.clone())
    }

    pub fn transmission(&self, n: usize, q: usize) -> Result<TransmissionConfig> {
        TransmissionConfig::new(n, q, self.scheme)
    }

    /// Checks every field against the module preconditions; errors name the field.
    pub fn validate(&self) -> Result<()> {
        let model = self.signal.build().map_err(|e| rename(e, "signal"))?;
        let arrivals = self.arrival_model().map_err(|e| rename(e, "arrivals"))?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.q.is_empty() {
            return Err(Error::invalid("q", "need at least one slot length"));
        }
        for &q in &self.q {
            self.transmission(model.n(), q).map_err(|e| rename(e, "q"))?;
            if let Scheme::Equidistant { .. } = self.scheme {
                if !model.is_stationary() {
                    return Err(Error::invalid("scheme", "equidistant transmission needs a stationary basis"));
                }
            }
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::invalid("threshold", format!("must be positive, got {}", self.threshold)));
        }
        if !(arrivals.mean() > 0.0) {
            return Err(Error::invalid("arrivals", "mean arrival energy must be positive"));
        }
        let b = &self.bound;
        if let Some(p) = b.prob_grid.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::invalid("bound.prob_grid", format!("targets must lie in (0, 1), got {p}")));
        }
        if b.prob_grid.is_empty() {
            return Err(Error::invalid("bound.prob_grid", "must not be empty"));
        }
        if b.r_grid == 0 || b.gamma_grid == 0 {
            return Err(Error::invalid("bound", "grid sizes must be at least 1"));
        }
        if b.tails.is_empty() {
            return Err(Error::invalid("bound.tails", "need at least one tail"));
        }
        if let Some(h) = &self.heatmap {
            if h.p_values.is_empty() || h.s_values.is_empty() {
                return Err(Error::invalid("heatmap", "p_values and s_values must not be empty"));
            }
            if let Some(p) = h.p_values.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
                return Err(Error::invalid("heatmap.p_values", format!("must lie in (0, 1], got {p}")));
            }
            ArrivalModel::bernoulli(0.5, h.e0).map_err(|e| rename(e, "heatmap.e0"))?;
            for &s in &h.s_values {
                self.signal.build_with_s(s).map_err(|e| rename(e, "heatmap.s_values"))?;
            }
        }
        let v = &self.verify;
        if v.mmse_instances == 0 || v.estimator_samples < 2 || v.r_points == 0 || v.t_points == 0 {
            return Err(Error::invalid("verify", "suite sizes must be positive"));
        }
        Ok(())
    }
}

/// Prefixes the offending field with its config section.
fn rename(err: Error, section: &'static str) -> Error {
    match err {
        Error::InvalidParameter { name, reason } => Error::InvalidParameter {
            name: section,
            reason: format!("{name}: {reason}"),
        },
        other => other,
    }
}
