//! High-probability bounds on the MMSE distortion.
//!
//! Every bound has the shape `P(eps < err) >= 1 - f(mu, rho, r)` where `f` is
//! one of the matrix-Bernstein tails
//!
//! ```text
//! f_bt(mu, rho, r) = 2 s exp(-(rho / mu^2) h(mu r / rho)),   h(a) = (1+a) ln(1+a) - a
//! f_bn(mu, rho, r) = 2 s exp(-(r^2 / 2) / (mu r / 3 + rho))
//! ```
//!
//! and `(mu, rho)` summarize the arrival statistics and the basis coherence.
//! Both tails are invariant under `(mu, rho, r) -> (c mu, c^2 rho, c r)`, which
//! is how the c.w.s.s. forms relate to the general ones: a Bound I point at
//! `r` equals the normalized point at `r_tilde = eta_U r` (see
//! [`BoundPoint::rescaled`]).

mod frontier;
mod oracle;

pub use frontier::{tightest_frontier, FrontierOptions, FrontierPoint};
pub use oracle::{
    bernstein_oracle, bound_validity_sweep, default_t_grid, min_eigen_lower_bound_check,
    BernsteinPoint, BernsteinReport, EigenCheck, ValidityCheck,
};

use serde::{Deserialize, Serialize};

use crate::energy::{ArrivalModel, SlotTail};
use crate::error::{Error, Result};
use crate::signal::SignalModel;

// admissible-range slack for r at its upper end
const R_RTOL: f64 = 1e-12;

/// `h(a) = (1 + a) ln(1 + a) - a` for `a >= 0`.
pub fn h(a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::invalid("a", format!("h is defined for a >= 0, got {a}")));
    }
    Ok(h_stable(a))
}

fn h_stable(a: f64) -> f64 {
    if a < 1e-4 {
        // series; the direct form cancels catastrophically near zero
        a * a * (0.5 - a / 6.0 + a * a / 12.0)
    } else {
        (1.0 + a) * a.ln_1p() - a
    }
}

fn check_tail_args(mu: f64, rho: f64, r: f64, s: usize) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::invalid("rho", format!("must be >= 0, got {rho}")));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid("r", format!("must be >= 0, got {r}")));
    }
    if s == 0 {
        return Err(Error::invalid("s", "must be at least 1"));
    }
    Ok(())
}

/// Exponent `(rho/mu^2) h(mu r/rho)`; `+inf` in the `rho -> 0` limit.
fn bennett_exponent(mu: f64, rho: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    if rho == 0.0 {
        return f64::INFINITY;
    }
    let a = mu * r / rho;
    if a < 1.0 {
        rho / (mu * mu) * h_stable(a)
    } else {
        // (rho/mu^2) h(a) = (r/mu) [ (1 + 1/a) ln(1+a) - 1 ], stable as rho -> 0
        r / mu * ((1.0 + 1.0 / a) * a.ln_1p() - 1.0)
    }
}

/// Bennett-type matrix Bernstein tail. With `rho = 0` the exponent diverges
/// for every `r > 0` and the tail is exactly 0.
pub fn f_bt(mu: f64, rho: f64, r: f64, s: usize) -> Result<f64> {
    check_tail_args(mu, rho, r, s)?;
    Ok(2.0 * s as f64 * (-bennett_exponent(mu, rho, r)).exp())
}

/// Bernstein (sub-gamma) matrix tail; never smaller than [`f_bt`].
pub fn f_bn(mu: f64, rho: f64, r: f64, s: usize) -> Result<f64> {
    check_tail_args(mu, rho, r, s)?;
    if r == 0.0 {
        return Ok(2.0 * s as f64);
    }
    Ok(2.0 * s as f64 * (-(r * r / 2.0) / (mu * r / 3.0 + rho)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Bt,
    Bn,
}

impl Tail {
    pub fn eval(self, mu: f64, rho: f64, r: f64, s: usize) -> Result<f64> {
        match self {
            Tail::Bt => f_bt(mu, rho, r, s),
            Tail::Bn => f_bn(mu, rho, r, s),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tail::Bt => "bt",
            Tail::Bn => "bn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    I,
    II,
    #[serde(rename = "I_equidistant")]
    IEquidistant,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::I => "I",
            Family::II => "II",
            Family::IEquidistant => "I_equidistant",
        }
    }
}

/// An `(error bound, probability lower bound)` pair and what produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub family: Family,
    pub tail: Tail,
    pub err_bound: f64,
    /// `raw_prob` clamped to `[0, 1]`.
    pub prob_lower: f64,
    /// `1 - f(mu, rho, r)`; negative when the bound is vacuous.
    pub raw_prob: f64,
    pub r: f64,
    /// Bound II only.
    pub gamma: Option<f64>,
    pub mu: f64,
    pub rho: f64,
    /// Bound II only: the slot thinning probability actually used.
    pub p_bar: Option<f64>,
    /// Set when Bound II is undefined (`p_bar = 0`); the point then carries
    /// `err_bound = P_x`, zero probability and zero `mu`/`rho`.
    pub degenerate: bool,
}

impl BoundPoint {
    /// Rescales `(r, mu, rho)` by `(c, c, c^2)`; probabilities are unchanged.
    pub fn rescaled(mut self, c: f64) -> Self {
        self.r *= c;
        self.mu *= c;
        self.rho *= c * c;
        self
    }
}

fn check_arrivals(arrivals: &ArrivalModel) -> Result<()> {
    if !(arrivals.mean() > 0.0) {
        return Err(Error::invalid("arrivals", "mean arrival energy must be positive"));
    }
    Ok(())
}

fn check_slot(model: &SignalModel, q: usize) -> Result<()> {
    if q == 0 || !model.n().is_multiple_of(q) {
        return Err(Error::invalid(
            "q",
            format!("slot length must divide N = {}, got {q}", model.n()),
        ));
    }
    Ok(())
}

fn check_r(r: f64, r_max: f64) -> Result<f64> {
    if !(r > 0.0 && r <= r_max * (1.0 + R_RTOL)) {
        return Err(Error::invalid("r", format!("must lie in (0, {r_max}], got {r}")));
    }
    Ok(r.min(r_max))
}

fn point(
    family: Family,
    tail: Tail,
    err_bound: f64,
    r: f64,
    mu: f64,
    rho: f64,
    s: usize,
) -> Result<BoundPoint> {
    let raw_prob = 1.0 - tail.eval(mu, rho, r, s)?;
    Ok(BoundPoint {
        family,
        tail,
        err_bound,
        prob_lower: raw_prob.clamp(0.0, 1.0),
        raw_prob,
        r,
        gamma: None,
        mu,
        rho,
        p_bar: None,
        degenerate: false,
    })
}

/// `min{Q eta_U, 1}`, the bound on each slot Gram matrix norm.
fn slot_gram_bound(model: &SignalModel, q: usize) -> f64 {
    (q as f64 * model.eta_upper()).min(1.0)
}

/// `(mu_I, rho_I)` of Bound I in the general parameterization.
pub fn bound_i_parameters(model: &SignalModel, arrivals: &ArrivalModel, q: usize) -> (f64, f64) {
    let eta_l = model.eta_lower();
    let w = slot_gram_bound(model, q);
    let mu_e = arrivals.mean();
    let mu = (arrivals.peak_ratio() - 1.0).max(1.0) * w / eta_l;
    let rho = arrivals.variance() / (mu_e * mu_e) / (eta_l * eta_l) / q as f64 * w;
    (mu, rho)
}

/// Bound I for block transmission, `r in (0, 1/eta_U]`.
pub fn bound_i(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    q: usize,
    r: f64,
    tail: Tail,
) -> Result<BoundPoint> {
    check_slot(model, q)?;
    check_arrivals(arrivals)?;
    let r_max = 1.0 / model.eta_upper();
    let r = check_r(r, r_max)?;
    let (mu, rho) = bound_i_parameters(model, arrivals, q);
    let snr = arrivals.mean() * (r_max - r) / model.noise_var();
    let err = model.power() / (1.0 + snr);
    point(Family::I, tail, err, r, mu, rho, model.s())
}

/// Bound II for block transmission, `r in (0, 1/eta_U]`, `gamma in [0, Q r_E]`.
pub fn bound_ii(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    q: usize,
    r: f64,
    gamma: f64,
    tail: Tail,
) -> Result<BoundPoint> {
    check_slot(model, q)?;
    let slot_tail = SlotTail::new(arrivals, q)?;
    bound_ii_with_tail(model, arrivals, &slot_tail, q, r, gamma, tail)
}

/// Same as [`bound_ii`] with a precomputed slot-tail evaluator. Empirical
/// tails enter through their lower confidence value.
pub fn bound_ii_with_tail(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    slot_tail: &SlotTail,
    q: usize,
    r: f64,
    gamma: f64,
    tail: Tail,
) -> Result<BoundPoint> {
    check_slot(model, q)?;
    check_arrivals(arrivals)?;
    let r_max = 1.0 / model.eta_upper();
    let r = check_r(r, r_max)?;
    let gamma_max = q as f64 * arrivals.peak_ratio();
    if !(gamma >= 0.0 && gamma <= gamma_max * (1.0 + R_RTOL)) {
        return Err(Error::invalid(
            "gamma",
            format!("must lie in [0, {gamma_max}], got {gamma}"),
        ));
    }
    let mu_e = arrivals.mean();
    let p_bar = slot_tail.at(gamma * mu_e)?.conservative();
    if p_bar <= 0.0 {
        return Ok(BoundPoint {
            family: Family::II,
            tail,
            err_bound: model.power(),
            prob_lower: 0.0,
            raw_prob: 0.0,
            r,
            gamma: Some(gamma),
            mu: 0.0,
            rho: 0.0,
            p_bar: Some(0.0),
            degenerate: true,
        });
    }
    let eta_l = model.eta_lower();
    let w = slot_gram_bound(model, q);
    let odds = 1.0 / p_bar - 1.0;
    let mu = odds.max(1.0) * w / eta_l;
    let rho = odds * w / (eta_l * eta_l);
    let snr = p_bar * gamma * mu_e / q as f64 * (r_max - r) / model.noise_var();
    let err = model.power() / (1.0 + snr);
    let mut bp = point(Family::II, tail, err, r, mu, rho, model.s())?;
    bp.gamma = Some(gamma);
    bp.p_bar = Some(p_bar);
    Ok(bp)
}

/// Bound for equidistant transmission of a low-pass c.w.s.s. signal with
/// `Q = N/s`, in the normalized parameterization `r in (0, 1]`.
pub fn bound_equidistant(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    r: f64,
    tail: Tail,
) -> Result<BoundPoint> {
    if !model.is_lowpass_dft() {
        return Err(Error::NotStationary("the equidistant bound (low-pass DFT basis)"));
    }
    if !model.n().is_multiple_of(model.s()) {
        return Err(Error::invalid(
            "s",
            format!("equidistant sampling needs s | N, got s = {}, N = {}", model.s(), model.n()),
        ));
    }
    check_arrivals(arrivals)?;
    let r = check_r(r, 1.0)?;
    let mu_e = arrivals.mean();
    let ratio = model.s() as f64 / model.n() as f64;
    let mu = (arrivals.peak_ratio() - 1.0).max(1.0);
    let rho = arrivals.variance() / (mu_e * mu_e) * ratio;
    let snr = mu_e / ratio * (1.0 - r) / model.noise_var();
    let err = model.power() / (1.0 + snr);
    point(Family::IEquidistant, tail, err, r, mu, rho, model.s())
}

/// Offline optimum under a total energy budget:
/// `eps_d = P_x / (1 + E_tot / (s sigma_w^2))`, attained by uniform allocation.
pub fn offline_benchmark(model: &SignalModel, e_tot: f64) -> Result<f64> {
    if !(e_tot.is_finite() && e_tot >= 0.0) {
        return Err(Error::invalid("e_tot", format!("must be finite and >= 0, got {e_tot}")));
    }
    Ok(model.power() / (1.0 + e_tot / (model.s() as f64 * model.noise_var())))
}

/// [`offline_benchmark`] at the average budget `E_tot = mu_E N`.
pub fn average_benchmark(model: &SignalModel, arrivals: &ArrivalModel) -> f64 {
    model.power() / (1.0 + arrivals.mean() * model.n() as f64 / (model.s() as f64 * model.noise_var()))
}
