//! Monte-Carlo checks of the concentration step and of the final bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bound_i, bound_i_parameters, bound_ii_with_tail, f_bt, BoundPoint, Tail};
use crate::energy::{ArrivalModel, SlotTail};
use crate::error::{Error, Result};
use crate::estimation::{run_campaign, slot_variance_sums, TransmissionConfig};
use crate::linalg::{min_eigenvalue, spectral_norm, spectral_norm_power};
use crate::rng::{stream, trial_seed};
use crate::signal::SignalModel;

/// Trials whose spectral norm is also computed by power iteration.
const NORM_CROSSCHECK_TRIALS: usize = 256;

fn binomial_se(p: f64, n: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

fn check_common(model: &SignalModel, arrivals: &ArrivalModel, q: usize, n_trials: usize) -> Result<()> {
    if q == 0 || !model.n().is_multiple_of(q) {
        return Err(Error::invalid("q", format!("slot length must divide N = {}, got {q}", model.n())));
    }
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "must be at least 1"));
    }
    if !(arrivals.mean() > 0.0) {
        return Err(Error::invalid("arrivals", "mean arrival energy must be positive"));
    }
    Ok(())
}

/// Per-trial diagonal of `G` under block transmission.
fn block_gain_diagonal(
    arrivals: &ArrivalModel,
    sums: &[f64],
    q: usize,
    seed: u64,
    centered: bool,
) -> Vec<f64> {
    let mut rng = stream(seed);
    let mut energies = vec![0.0; sums.len()];
    arrivals.fill_slot_energies(&mut rng, q, &mut energies);
    let mean = q as f64 * arrivals.mean();
    let mut d = Vec::with_capacity(sums.len() * q);
    for (e, s) in energies.iter().zip(sums) {
        let g = if centered { (e - mean) / s } else { e / s };
        d.extend(std::iter::repeat_n(g, q));
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinPoint {
    pub t: f64,
    /// Empirical `P(||sum_k Z_k|| >= t)`.
    pub empirical: f64,
    pub std_error: f64,
    /// `f_bt(mu_bar, rho_bar, t)`.
    pub bound: f64,
}

impl BernsteinPoint {
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub trials: usize,
    pub mu_bar: f64,
    pub rho_bar: f64,
    pub points: Vec<BernsteinPoint>,
    /// Largest relative disagreement between the eigensolver and the power
    /// iteration spectral norms over the cross-checked trials.
    pub norm_route_gap: f64,
}

impl BernsteinReport {
    pub fn holds(&self) -> bool {
        self.points.iter().all(BernsteinPoint::holds)
    }
}

/// `t` grid spanning `(0, mu_E s / (P_x eta_U)]`, the scale of the deviations
/// that matter for the error bounds.
pub fn default_t_grid(model: &SignalModel, arrivals: &ArrivalModel, points: usize) -> Vec<f64> {
    let t_max = arrivals.mean() * model.s() as f64 / (model.power() * model.eta_upper());
    (1..=points).map(|i| t_max * i as f64 / points as f64).collect()
}

/// Empirical tail of `||U^H (G - E[G]) U||` against the Bennett-type bound
/// with the unnormalized parameters `mu_bar = mu_E (s/P_x) mu_I` and
/// `rho_bar = (mu_E s / P_x)^2 rho_I`.
pub fn bernstein_oracle(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    q: usize,
    n_trials: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<BernsteinReport> {
    check_common(model, arrivals, q, n_trials)?;
    let scale = arrivals.mean() * model.s() as f64 / model.power();
    let (mu_i, rho_i) = bound_i_parameters(model, arrivals, q);
    let mu_bar = scale * mu_i;
    let rho_bar = scale * scale * rho_i;
    let sums = slot_variance_sums(model, q);
    let norms: Vec<(f64, f64)> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let d = block_gain_diagonal(arrivals, &sums, q, trial_seed(seed, i as u64), true);
            let m = model.information_matrix(&d);
            let eig = spectral_norm(&m);
            let gap = if i < NORM_CROSSCHECK_TRIALS {
                let pw = spectral_norm_power(&m, 1e-15, 20_000);
                let denom = eig.max(pw);
                if denom > 0.0 { (eig - pw).abs() / denom } else { 0.0 }
            } else {
                0.0
            };
            (eig, gap)
        })
        .collect();
    let norm_route_gap = norms.iter().fold(0.0_f64, |a, (_, g)| a.max(*g));
    let points = t_grid
        .iter()
        .map(|&t| {
            let bound = f_bt(mu_bar, rho_bar, t, model.s())?;
            let hits = norms.iter().filter(|(v, _)| *v >= t).count();
            Ok(BernsteinPoint {
                t,
                empirical: hits as f64 / n_trials as f64,
                std_error: binomial_se(bound.min(1.0), n_trials),
                bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BernsteinReport {
        trials: n_trials,
        mu_bar,
        rho_bar,
        points,
        norm_route_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenCheck {
    pub r: f64,
    /// `mu_E (s/P_x)(1/eta_U - r)`.
    pub threshold: f64,
    /// Empirical `P(lambda_min(U^H G U) > threshold)`.
    pub frequency: f64,
    /// `1 - f_bt(mu_I, rho_I, r)`, possibly negative.
    pub lower_bound: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl EigenCheck {
    pub fn holds(&self) -> bool {
        self.frequency >= self.lower_bound - 3.0 * self.std_error
    }
}

/// Checks the minimum-eigenvalue event behind Bound I at a given `r`.
pub fn min_eigen_lower_bound_check(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    q: usize,
    r: f64,
    n_trials: usize,
    seed: u64,
) -> Result<EigenCheck> {
    check_common(model, arrivals, q, n_trials)?;
    let bp = bound_i(model, arrivals, q, r, Tail::Bt)?;
    let threshold = arrivals.mean() * model.s() as f64 / model.power() * (1.0 / model.eta_upper() - bp.r);
    let sums = slot_variance_sums(model, q);
    let hits = (0..n_trials)
        .into_par_iter()
        .filter(|&i| {
            let d = block_gain_diagonal(arrivals, &sums, q, trial_seed(seed, i as u64), false);
            min_eigenvalue(&model.information_matrix(&d)) > threshold
        })
        .count();
    Ok(EigenCheck {
        r: bp.r,
        threshold,
        frequency: hits as f64 / n_trials as f64,
        lower_bound: bp.raw_prob,
        std_error: binomial_se(bp.raw_prob, n_trials),
        trials: n_trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub point: BoundPoint,
    /// Empirical `P(eps < err_bound)`.
    pub empirical: f64,
    pub std_error: f64,
    pub passes: bool,
}

/// Simulates block transmission and compares every non-trivial Bound I/II
/// point on an `r` x `gamma` grid with the empirical coverage.
#[allow(clippy::too_many_arguments)]
pub fn bound_validity_sweep(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    q: usize,
    n_trials: usize,
    r_points: usize,
    gamma_points: usize,
    tails: &[Tail],
    seed: u64,
) -> Result<Vec<ValidityCheck>> {
    check_common(model, arrivals, q, n_trials)?;
    let cfg = TransmissionConfig::block(model.n(), q)?;
    let campaign = run_campaign(model, &cfg, arrivals, n_trials, model.power(), seed)?;
    let slot_tail = SlotTail::new(arrivals, q)?;
    let r_max = 1.0 / model.eta_upper();
    let gamma_max = q as f64 * arrivals.peak_ratio();
    let mut points = Vec::new();
    for &tail in tails {
        for i in 1..=r_points {
            let r = r_max * i as f64 / r_points as f64;
            points.push(bound_i(model, arrivals, q, r, tail)?);
            for j in 1..=gamma_points {
                let gamma = gamma_max * j as f64 / (gamma_points + 1) as f64;
                points.push(bound_ii_with_tail(model, arrivals, &slot_tail, q, r, gamma, tail)?);
            }
        }
    }
    Ok(points
        .into_iter()
        .filter(|p| !p.degenerate && p.prob_lower > 0.0)
        .map(|point| {
            let empirical = campaign.fraction_below(point.err_bound);
            let std_error = binomial_se(point.prob_lower, n_trials);
            ValidityCheck {
                point,
                empirical,
                std_error,
                passes: empirical >= point.prob_lower - 3.0 * std_error,
            }
        })
        .collect())
}
