//! Energy-neutral transmit gains, MMSE distortion and Monte-Carlo campaigns.
//!
//! Each slot spends exactly the energy it harvested: the block scheme
//! amplifies all `Q` buffered samples with `p_k = E_bar_k / S_k`,
//! `S_k = sum_{t in slot k} sigma_t^2`; the equidistant scheme sends only
//! sample `(k-1)Q + t_d` with `p_k = E_bar_k N / P_x`. Conditioned on the gains
//! the distortion is
//!
//! ```text
//! eps = tr[ ((s/P_x) I_s + U_s^H G U_s / sigma_w^2)^{-1} ]
//! ```
//!
//! which campaigns evaluate directly. Noise is simulated only by
//! [`mmse_empirical`], which serves as a validation oracle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::ArrivalModel;
use crate::error::{Error, Result};
use crate::linalg::{trace_of_inverse_hpd, CMatrix, CVector};
use crate::rng::{complex_normal, stream, substream, trial_seed};
use crate::signal::SignalModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Scheme {
    Block,
    /// Sends sample `Q (k-1) + offset` (zero-based) of every slot.
    Equidistant { offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmissionConfig {
    n: usize,
    slot_len: usize,
    scheme: Scheme,
}

impl TransmissionConfig {
    pub fn new(n: usize, slot_len: usize, scheme: Scheme) -> Result<Self> {
        if slot_len == 0 || n == 0 || !n.is_multiple_of(slot_len) {
            return Err(Error::invalid(
                "q",
                format!("slot length must divide N = {n}, got {slot_len}"),
            ));
        }
        if let Scheme::Equidistant { offset } = scheme {
            if offset >= slot_len {
                return Err(Error::invalid(
                    "offset",
                    format!("must lie in [0, Q-1] = [0, {}], got {offset}", slot_len - 1),
                ));
            }
        }
        Ok(Self {
            n,
            slot_len,
            scheme,
        })
    }

    pub fn block(n: usize, slot_len: usize) -> Result<Self> {
        Self::new(n, slot_len, Scheme::Block)
    }

    pub fn equidistant(n: usize, slot_len: usize, offset: usize) -> Result<Self> {
        Self::new(n, slot_len, Scheme::Equidistant { offset })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Q`
    pub fn slot_len(&self) -> usize {
        self.slot_len
    }

    /// `N_T = N / Q`
    pub fn slots(&self) -> usize {
        self.n / self.slot_len
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn check_model(&self, model: &SignalModel) -> Result<()> {
        if model.n() != self.n {
            return Err(Error::invalid(
                "n",
                format!("config has N = {}, model has N = {}", self.n, model.n()),
            ));
        }
        Ok(())
    }
}

/// `S_k`, the total signal variance buffered in each slot.
pub fn slot_variance_sums(model: &SignalModel, slot_len: usize) -> Vec<f64> {
    model
        .component_variances()
        .chunks(slot_len)
        .map(|c| c.iter().sum())
        .collect()
}

fn check_energies(cfg: &TransmissionConfig, energies: &[f64]) -> Result<()> {
    if energies.len() != cfg.slots() {
        return Err(Error::invalid(
            "slot_energies",
            format!("expected {} slots, got {}", cfg.slots(), energies.len()),
        ));
    }
    if energies.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::invalid("slot_energies", "energies must be finite and >= 0"));
    }
    Ok(())
}

/// Per-slot block gains `p_k = E_bar_k / S_k`.
pub fn gains_block(
    model: &SignalModel,
    cfg: &TransmissionConfig,
    energies: &[f64],
) -> Result<Vec<f64>> {
    cfg.check_model(model)?;
    check_energies(cfg, energies)?;
    let sums = slot_variance_sums(model, cfg.slot_len());
    energies
        .iter()
        .zip(&sums)
        .enumerate()
        .map(|(slot, (e, s))| {
            if *s <= 0.0 {
                Err(Error::ZeroSlotVariance { slot })
            } else {
                Ok(e / s)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistantGains {
    /// Zero-based sample indices `Q k + offset`.
    pub indices: Vec<usize>,
    pub gains: Vec<f64>,
}

impl EquidistantGains {
    pub fn to_diagonal(&self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for (&i, &g) in self.indices.iter().zip(&self.gains) {
            d[i] = g;
        }
        d
    }
}

/// One sample per slot with `p_k = E_bar_k N / P_x`; stationary signals only.
pub fn gains_equidistant(
    model: &SignalModel,
    cfg: &TransmissionConfig,
    energies: &[f64],
) -> Result<EquidistantGains> {
    cfg.check_model(model)?;
    check_energies(cfg, energies)?;
    let offset = match cfg.scheme() {
        Scheme::Equidistant { offset } => offset,
        Scheme::Block => 0,
    };
    if !model.is_stationary() {
        return Err(Error::NotStationary("equidistant transmission"));
    }
    let scale = model.n() as f64 / model.power();
    Ok(EquidistantGains {
        indices: (0..cfg.slots()).map(|k| k * cfg.slot_len() + offset).collect(),
        gains: energies.iter().map(|e| e * scale).collect(),
    })
}

/// Per-slot gains for the configured scheme.
pub fn slot_gains(
    model: &SignalModel,
    cfg: &TransmissionConfig,
    energies: &[f64],
) -> Result<Vec<f64>> {
    match cfg.scheme() {
        Scheme::Block => gains_block(model, cfg, energies),
        Scheme::Equidistant { .. } => Ok(gains_equidistant(model, cfg, energies)?.gains),
    }
}

/// Expands per-slot gains into the length-`N` diagonal of `G`.
pub fn expand_gains(cfg: &TransmissionConfig, gains: &[f64]) -> Vec<f64> {
    let q = cfg.slot_len();
    let mut d = vec![0.0; cfg.n()];
    match cfg.scheme() {
        Scheme::Block => {
            for (chunk, &g) in d.chunks_mut(q).zip(gains) {
                chunk.fill(g);
            }
        }
        Scheme::Equidistant { offset } => {
            for (k, &g) in gains.iter().enumerate() {
                d[k * q + offset] = g;
            }
        }
    }
    d
}

/// Energy spent in each slot, `J_k = sum_{t in slot k} g_t sigma_t^2`.
pub fn slot_costs(model: &SignalModel, cfg: &TransmissionConfig, diag: &[f64]) -> Vec<f64> {
    diag.chunks(cfg.slot_len())
        .zip(model.component_variances().chunks(cfg.slot_len()))
        .map(|(g, v)| g.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn check_diag(model: &SignalModel, diag: &[f64]) -> Result<()> {
    if diag.len() != model.n() {
        return Err(Error::invalid(
            "gains",
            format!("expected {} entries, got {}", model.n(), diag.len()),
        ));
    }
    if diag.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("gains", "gains must be finite and >= 0"));
    }
    Ok(())
}

/// `(s/P_x) I_s + U_s^H diag(g) U_s / sigma_w^2`
pub fn posterior_precision(model: &SignalModel, diag: &[f64]) -> CMatrix {
    let mut m = model.information_matrix(diag) / Complex64::new(model.noise_var(), 0.0);
    let prior = model.s() as f64 / model.power();
    for i in 0..model.s() {
        m[(i, i)] += prior;
    }
    m
}

/// Closed-form MMSE on the `s x s` posterior precision.
pub fn mmse_closed_form(model: &SignalModel, diag: &[f64]) -> Result<f64> {
    check_diag(model, diag)?;
    trace_of_inverse_hpd(&posterior_precision(model, diag))
}

/// `tr[K_x - K_x G^{1/2} (G^{1/2} K_x G^{1/2} + sigma_w^2 I)^{-1} G^{1/2} K_x]`,
/// the `N x N` covariance form of the same distortion.
pub fn mmse_full_covariance(model: &SignalModel, diag: &[f64]) -> Result<f64> {
    check_diag(model, diag)?;
    let (k_x, k_xy, chol) = observation_factors(model, diag)?;
    let solved = chol.solve(&k_xy.adjoint());
    let reduction = &k_xy * solved;
    Ok((0..model.n()).map(|i| (k_x[(i, i)] - reduction[(i, i)]).re).sum())
}

type Factors = (CMatrix, CMatrix, nalgebra::Cholesky<Complex64, nalgebra::Dyn>);

// K_x, K_xy = K_x G^{1/2}, and the Cholesky factor of K_y
fn observation_factors(model: &SignalModel, diag: &[f64]) -> Result<Factors> {
    let n = model.n();
    let k_x = model.covariance();
    let root: Vec<f64> = diag.iter().map(|g| g.sqrt()).collect();
    let k_xy = CMatrix::from_fn(n, n, |i, j| k_x[(i, j)] * root[j]);
    let mut k_y = CMatrix::from_fn(n, n, |i, j| k_x[(i, j)] * root[i] * root[j]);
    for i in 0..n {
        k_y[(i, i)] += model.noise_var();
    }
    let chol = k_y
        .cholesky()
        .ok_or_else(|| Error::Numerical("observation covariance is not positive definite".into()))?;
    Ok((k_x, k_xy, chol))
}

/// Simulates `y = G^{1/2} x + w` and the linear MMSE estimator
/// `x_hat = K_xy K_y^{-1} y`; returns the average of `||x - x_hat||^2`.
pub fn mmse_empirical(model: &SignalModel, diag: &[f64], n_samples: usize, seed: u64) -> Result<f64> {
    check_diag(model, diag)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let n = model.n();
    let (_, k_xy, chol) = observation_factors(model, diag)?;
    // estimator matrix W = K_xy K_y^{-1} = (K_y^{-1} K_xy^H)^H
    let w = chol.solve(&k_xy.adjoint()).adjoint();
    let root: Vec<f64> = diag.iter().map(|g| g.sqrt()).collect();
    let sigma = model.noise_var().sqrt();
    let mut signal_rng = stream(substream(seed, 1));
    let mut noise_rng = stream(substream(seed, 2));
    let mut total = 0.0;
    let mut y = CVector::zeros(n);
    for _ in 0..n_samples {
        let x = model.sample_with(&mut signal_rng);
        for t in 0..n {
            y[t] = x[t] * root[t] + complex_normal(&mut noise_rng) * sigma;
        }
        let x_hat = &w * &y;
        total += (&x - x_hat).norm_squared();
    }
    Ok(total / n_samples as f64)
}

/// Diagonal of `E[G]` under the given arrivals.
pub fn expected_gain_diagonal(
    model: &SignalModel,
    cfg: &TransmissionConfig,
    arrivals: &ArrivalModel,
) -> Result<Vec<f64>> {
    let slot_mean = cfg.slot_len() as f64 * arrivals.mean();
    let energies = vec![slot_mean; cfg.slots()];
    let gains = slot_gains(model, cfg, &energies)?;
    Ok(expand_gains(cfg, &gains))
}

/// Jensen lower bound `E_E[eps] >= tr[((s/P_x) I + U^H E[G] U / sigma^2)^{-1}]`.
pub fn average_error_lower_bound(
    model: &SignalModel,
    cfg: &TransmissionConfig,
    arrivals: &ArrivalModel,
) -> Result<f64> {
    let diag = expected_gain_diagonal(model, cfg, arrivals)?;
    mmse_closed_form(model, &diag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub slot_energies: Vec<f64>,
    /// Per-slot gains `p_k`.
    pub gains: Vec<f64>,
    pub mmse: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub threshold: f64,
    /// Sorted by trial index.
    pub records: Vec<TrialRecord>,
    pub success_probability: f64,
}

impl Campaign {
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mmse).collect()
    }

    /// Fraction of trials with `eps < bound` (strict).
    pub fn fraction_below(&self, bound: f64) -> f64 {
        let hits = self.records.iter().filter(|r| r.mmse < bound).count();
        hits as f64 / self.records.len() as f64
    }

    pub fn mean_error(&self) -> f64 {
        self.records.iter().map(|r| r.mmse).sum::<f64>() / self.records.len() as f64
    }
}

/// Runs one trial with the given seed.
pub fn run_trial(
    model: &SignalModel,
    cfg: &TransmissionConfig,
    arrivals: &ArrivalModel,
    index: usize,
    seed: u64,
    threshold: f64,
) -> Result<TrialRecord> {
    let mut rng = stream(seed);
    let mut energies = vec![0.0; cfg.slots()];
    arrivals.fill_slot_energies(&mut rng, cfg.slot_len(), &mut energies);
    let gains = slot_gains(model, cfg, &energies)?;
    let mmse = mmse_closed_form(model, &expand_gains(cfg, &gains))?;
    Ok(TrialRecord {
        index,
        seed,
        slot_energies: energies,
        gains,
        mmse,
        success: mmse <= threshold,
    })
}

/// Independent energy realizations, trial `i` seeded with
/// [`trial_seed`]`(seed, i)`. Trials run in parallel; output order is by index.
pub fn run_campaign(
    model: &SignalModel,
    cfg: &TransmissionConfig,
    arrivals: &ArrivalModel,
    n_trials: usize,
    threshold: f64,
    seed: u64,
) -> Result<Campaign> {
    cfg.check_model(model)?;
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "must be at least 1"));
    }
    if let Scheme::Equidistant { .. } = cfg.scheme() {
        if !model.is_stationary() {
            return Err(Error::NotStationary("equidistant transmission"));
        }
    }
    let records = (0..n_trials)
        .into_par_iter()
        .map(|i| run_trial(model, cfg, arrivals, i, trial_seed(seed, i as u64), threshold))
        .collect::<Result<Vec<_>>>()?;
    let successes = records.iter().filter(|r| r.success).count();
    Ok(Campaign {
        threshold,
        success_probability: successes as f64 / n_trials as f64,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cwss(n: usize, s: usize) -> SignalModel {
        SignalModel::build_lowpass_cwss(n, s, n as f64, 1e-4 * n as f64).unwrap()
    }

    #[test]
    fn block_gain_from_slot_variance() {
        let m = cwss(256, 4);
        let cfg = TransmissionConfig::block(256, 8).unwrap();
        let mut e = vec![0.0; 32];
        e[0] = 3.0;
        let g = gains_block(&m, &cfg, &e).unwrap();
        assert!((g[0] - 0.375).abs() < 1e-15);
        assert!(g[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_energy_gives_prior_error() {
        let m = cwss(16, 4);
        for scheme in [Scheme::Block, Scheme::Equidistant { offset: 1 }] {
            let cfg = TransmissionConfig::new(16, 4, scheme).unwrap();
            let g = slot_gains(&m, &cfg, &[0.0; 4]).unwrap();
            assert!(g.iter().all(|&v| v == 0.0));
            let eps = mmse_closed_form(&m, &expand_gains(&cfg, &g)).unwrap();
            assert!((eps - 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equidistant_positions_and_gains() {
        let m = SignalModel::build_lowpass_cwss(8, 2, 8.0, 1.0).unwrap();
        let cfg = TransmissionConfig::equidistant(8, 4, 0).unwrap();
        let g = gains_equidistant(&m, &cfg, &[2.0, 2.0]).unwrap();
        assert_eq!(g.indices, vec![0, 4]);
        assert_eq!(g.gains, vec![2.0, 2.0]);
        // J_k = p_k P_x / N reproduces the slot energy
        let costs = slot_costs(&m, &cfg, &g.to_diagonal(8));
        assert_eq!(costs, vec![2.0, 2.0]);
    }

    #[test]
    fn equidistant_offset_does_not_change_error_for_lowpass() {
        let m = cwss(32, 4);
        let energies = [0.7, 2.1, 0.0, 1.3];
        let base = {
            let cfg = TransmissionConfig::equidistant(32, 8, 0).unwrap();
            let g = gains_equidistant(&m, &cfg, &energies).unwrap();
            mmse_closed_form(&m, &g.to_diagonal(32)).unwrap()
        };
        for offset in 1..8 {
            let cfg = TransmissionConfig::equidistant(32, 8, offset).unwrap();
            let g = gains_equidistant(&m, &cfg, &energies).unwrap();
            let eps = mmse_closed_form(&m, &g.to_diagonal(32)).unwrap();
            assert!((eps - base).abs() < 1e-10 * base, "offset {offset}");
        }
    }

    #[test]
    fn equidistant_rejects_nonstationary_basis() {
        // Gram-Schmidt on a skewed matrix gives unequal row norms
        let raw = CMatrix::from_fn(4, 2, |t, k| Complex64::new((1 + t * (k + 1)) as f64, 0.0));
        let q = raw.qr().q();
        let m = SignalModel::from_unitary_columns(q, 4.0, 1.0).unwrap();
        assert!(!m.is_stationary());
        let cfg = TransmissionConfig::equidistant(4, 2, 0).unwrap();
        assert!(matches!(
            gains_equidistant(&m, &cfg, &[1.0, 1.0]),
            Err(Error::NotStationary(_))
        ));
    }

    #[test]
    fn uniform_gain_collapses_the_trace() {
        let m = cwss(16, 4);
        let c = 0.3;
        let eps = mmse_closed_form(&m, &[c; 16]).unwrap();
        let expected = 16.0 / (1.0 + (16.0 / 4.0) * c / m.noise_var());
        assert!((eps - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn config_validation() {
        assert!(TransmissionConfig::block(16, 3).is_err());
        assert!(TransmissionConfig::equidistant(16, 4, 4).is_err());
        assert!(TransmissionConfig::block(16, 0).is_err());
        let m = cwss(16, 4);
        let cfg = TransmissionConfig::block(16, 4).unwrap();
        assert!(gains_block(&m, &cfg, &[1.0; 3]).is_err());
        assert!(gains_block(&m, &cfg, &[1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(mmse_closed_form(&m, &[-1.0; 16]).is_err());
    }

    #[test]
    fn campaign_is_reproducible_and_ordered() {
        let m = cwss(32, 4);
        let cfg = TransmissionConfig::block(32, 4).unwrap();
        let a = ArrivalModel::bernoulli(0.4, 1.0).unwrap();
        let c1 = run_campaign(&m, &cfg, &a, 64, 1.0, 5).unwrap();
        let c2 = run_campaign(&m, &cfg, &a, 64, 1.0, 5).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.records.iter().enumerate().all(|(i, r)| r.index == i));
        let single = run_campaign(&m, &cfg, &a, 1, 1.0, 5).unwrap();
        assert_eq!(single.records.len(), 1);
        assert!(single.success_probability == 0.0 || single.success_probability == 1.0);
    }

    #[test]
    fn deterministic_campaign_is_constant() {
        let m = cwss(32, 4);
        let cfg = TransmissionConfig::block(32, 4).unwrap();
        let a = ArrivalModel::deterministic(0.4).unwrap();
        let c = run_campaign(&m, &cfg, &a, 20, 1.0, 1).unwrap();
        let e0 = c.records[0].mmse;
        assert!(c.records.iter().all(|r| r.mmse == e0));
        assert!(c.success_probability == 0.0 || c.success_probability == 1.0);
    }

    #[test]
    fn empirical_mmse_is_deterministic_and_prior_without_gain() {
        let m = cwss(8, 2);
        let a = mmse_empirical(&m, &[0.0; 8], 20_000, 3).unwrap();
        assert_eq!(a, mmse_empirical(&m, &[0.0; 8], 20_000, 3).unwrap());
        assert!((a - 8.0).abs() < 0.03 * 8.0, "{a}");
    }
}
