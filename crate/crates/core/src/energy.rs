//! I.i.d. energy-arrival processes.
//!
//! A slot of length `Q` accumulates `E_bar_k = sum_{t=1..Q} E_{(k-1)Q+t}`. The
//! bounds only consume the moments `(mu_E, var_E)`, the support bound `E_max`
//! and `r_E = E_max / mu_E`; the thinning probability of Bound II also needs
//! the slot tail `P(E_bar_k >= threshold)`, computed exactly where that is
//! numerically safe and by Monte Carlo otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::rng::{mix64, stream};

/// Largest `Q` for which the Irwin-Hall alternating sum is used.
pub const IRWIN_HALL_MAX_Q: usize = 30;
/// Largest `Q` for exhaustive convolution of a finite table.
pub const TABLE_CONVOLUTION_MAX_Q: usize = 12;
/// Sample size of the Monte-Carlo tail fallback.
pub const EMPIRICAL_TAIL_SAMPLES: usize = 1_000_000;

const EMPIRICAL_TAIL_SEED: u64 = 0x7A11_5EED;
// thresholds within this relative distance of an atom count as hitting it
const ATOM_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalKind {
    /// `E = E0` with probability `p`, else 0.
    Bernoulli { p: f64, e0: f64 },
    /// `E ~ Uniform[0, e_u]`.
    Uniform { e_u: f64 },
    /// `E = e` always.
    Deterministic { e: f64 },
    /// Finite support `values[i]` with probability `probabilities[i]`.
    EmpiricalTable {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalModel {
    kind: ArrivalKind,
    mean: f64,
    variance: f64,
    e_max: f64,
    peak_ratio: f64,
    // cumulative probabilities for table sampling
    cdf: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Exact,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    pub value: f64,
    pub method: TailMethod,
    /// Zero for exact results.
    pub std_error: f64,
}

impl TailProbability {
    fn exact(value: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            method: TailMethod::Exact,
            std_error: 0.0,
        }
    }

    /// Lower confidence value `value - 3 se` (clamped at 0). Equals `value`
    /// for exact results.
    pub fn conservative(&self) -> f64 {
        (self.value - 3.0 * self.std_error).max(0.0)
    }
}

impl ArrivalModel {
    pub fn new(kind: ArrivalKind) -> Result<Self> {
        let finite_nonneg = |name: &'static str, v: f64| -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        let (mean, variance, e_max, cdf) = match &kind {
            ArrivalKind::Bernoulli { p, e0 } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
                }
                if !(e0.is_finite() && *e0 > 0.0) {
                    return Err(Error::invalid("e0", format!("must be positive, got {e0}")));
                }
                (p * e0, p * (1.0 - p) * e0 * e0, *e0, Vec::new())
            }
            ArrivalKind::Uniform { e_u } => {
                if !(e_u.is_finite() && *e_u > 0.0) {
                    return Err(Error::invalid("e_u", format!("must be positive, got {e_u}")));
                }
                (e_u / 2.0, e_u * e_u / 12.0, *e_u, Vec::new())
            }
            ArrivalKind::Deterministic { e } => {
                finite_nonneg("e", *e)?;
                (*e, 0.0, *e, Vec::new())
            }
            ArrivalKind::EmpiricalTable {
                values,
                probabilities,
            } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return Err(Error::invalid(
                        "probabilities",
                        "table needs matching, non-empty value and probability lists",
                    ));
                }
                for &v in values {
                    finite_nonneg("values", v)?;
                }
                for &q in probabilities {
                    finite_nonneg("probabilities", q)?;
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(
                        "probabilities",
                        format!("must sum to 1, got {total}"),
                    ));
                }
                let mean: f64 = values.iter().zip(probabilities).map(|(v, q)| v * q).sum();
                let second: f64 = values
                    .iter()
                    .zip(probabilities)
                    .map(|(v, q)| (v - mean) * (v - mean) * q)
                    .sum();
                let e_max = values
                    .iter()
                    .zip(probabilities)
                    .filter(|(_, &q)| q > 0.0)
                    .map(|(&v, _)| v)
                    .fold(0.0, f64::max);
                let mut acc = 0.0;
                let cdf = probabilities
                    .iter()
                    .map(|q| {
                        acc += q / total;
                        acc
                    })
                    .collect();
                (mean, second, e_max, cdf)
            }
        };
        let peak_ratio = if mean > 0.0 { e_max / mean } else { 1.0 };
        Ok(Self {
            kind,
            mean,
            variance,
            e_max,
            peak_ratio,
            cdf,
        })
    }

    pub fn bernoulli(p: f64, e0: f64) -> Result<Self> {
        Self::new(ArrivalKind::Bernoulli { p, e0 })
    }

    pub fn uniform(e_u: f64) -> Result<Self> {
        Self::new(ArrivalKind::Uniform { e_u })
    }

    pub fn deterministic(e: f64) -> Result<Self> {
        Self::new(ArrivalKind::Deterministic { e })
    }

    pub fn table(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        Self::new(ArrivalKind::EmpiricalTable {
            values,
            probabilities,
        })
    }

    pub fn kind(&self) -> &ArrivalKind {
        &self.kind
    }

    /// `mu_E`
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `var_E`
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Almost-sure bound on one packet.
    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// `r_E = E_max / mu_E` (1 for the all-zero process).
    pub fn peak_ratio(&self) -> f64 {
        self.peak_ratio
    }

    pub fn sample_packet<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            // one uniform per packet for every kind, so streams stay aligned
            // and Bernoulli draws are monotone in p under a shared seed
            ArrivalKind::Bernoulli { p, e0 } => {
                if rng.random::<f64>() < *p {
                    *e0
                } else {
                    0.0
                }
            }
            ArrivalKind::Uniform { e_u } => rng.random::<f64>() * e_u,
            ArrivalKind::Deterministic { e } => {
                let _: f64 = rng.random();
                *e
            }
            ArrivalKind::EmpiricalTable { values, .. } => {
                let u: f64 = rng.random();
                let idx = self.cdf.partition_point(|&c| c <= u).min(values.len() - 1);
                values[idx]
            }
        }
    }

    /// Fills `out[k]` with the energy of slot `k` (sum of `q` packets).
    pub fn fill_slot_energies<R: Rng + ?Sized>(&self, rng: &mut R, q: usize, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = (0..q).map(|_| self.sample_packet(rng)).sum();
        }
    }

    pub fn sample_slot_energies(&self, q: usize, n_slots: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed);
        let mut out = vec![0.0; n_slots];
        self.fill_slot_energies(&mut rng, q, &mut out);
        out
    }

    /// `P(E_bar >= threshold)` for a slot of `q` packets.
    pub fn slot_tail_probability(&self, q: usize, threshold: f64) -> Result<TailProbability> {
        SlotTail::new(self, q)?.at(threshold)
    }
}

/// Slot-sum tail evaluator. The Monte-Carlo fallback draws its sample once,
/// so repeated queries (frontier search) stay cheap and mutually consistent.
#[derive(Debug, Clone)]
pub struct SlotTail {
    model: ArrivalModel,
    q: usize,
    support: Option<Vec<(f64, f64)>>,
    sorted_sample: Option<Vec<f64>>,
}

impl SlotTail {
    pub fn new(model: &ArrivalModel, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("q", "slot length must be at least 1"));
        }
        let mut tail = Self {
            model: model.clone(),
            q,
            support: None,
            sorted_sample: None,
        };
        match &model.kind {
            ArrivalKind::Uniform { .. } if q > IRWIN_HALL_MAX_Q => {
                tail.sorted_sample = Some(tail.draw_sample());
            }
            ArrivalKind::EmpiricalTable {
                values,
                probabilities,
            } => {
                if q <= TABLE_CONVOLUTION_MAX_Q {
                    tail.support = Some(convolve_table(values, probabilities, q));
                } else {
                    tail.sorted_sample = Some(tail.draw_sample());
                }
            }
            _ => {}
        }
        Ok(tail)
    }

    fn draw_sample(&self) -> Vec<f64> {
        let mut rng = stream(mix64(EMPIRICAL_TAIL_SEED ^ self.q as u64));
        let mut sample = vec![0.0; EMPIRICAL_TAIL_SAMPLES];
        self.model.fill_slot_energies(&mut rng, self.q, &mut sample);
        sample.sort_by(|a, b| a.total_cmp(b));
        sample
    }

    /// Atoms of the slot-sum distribution when it is known to be discrete
    /// with a small support (Bernoulli, deterministic, convolved tables).
    pub fn atoms(&self) -> Option<Vec<f64>> {
        let q = self.q;
        match &self.model.kind {
            ArrivalKind::Bernoulli { e0, .. } => Some((0..=q).map(|k| k as f64 * e0).collect()),
            ArrivalKind::Deterministic { e } => Some(vec![q as f64 * e]),
            ArrivalKind::EmpiricalTable { .. } => {
                self.support.as_ref().map(|s| s.iter().map(|(v, _)| *v).collect())
            }
            ArrivalKind::Uniform { .. } => None,
        }
    }

    pub fn at(&self, threshold: f64) -> Result<TailProbability> {
        if !(threshold >= 0.0) || threshold.is_infinite() {
            return Err(Error::invalid(
                "threshold",
                format!("must be finite and >= 0, got {threshold}"),
            ));
        }
        let q = self.q;
        let qf = q as f64;
        if threshold == 0.0 {
            return Ok(TailProbability::exact(1.0));
        }
        if threshold > qf * self.model.e_max * (1.0 + ATOM_RTOL) {
            return Ok(TailProbability::exact(0.0));
        }
        if let Some(sample) = &self.sorted_sample {
            let n = sample.len();
            let below = sample.partition_point(|&v| v < threshold);
            let p = (n - below) as f64 / n as f64;
            return Ok(TailProbability {
                value: p,
                method: TailMethod::Empirical,
                std_error: (p * (1.0 - p) / n as f64).sqrt(),
            });
        }
        let value = match &self.model.kind {
            ArrivalKind::Bernoulli { p, e0 } => {
                let needed = (threshold / e0 * (1.0 - ATOM_RTOL)).ceil();
                binomial_upper_tail(q as u64, *p, needed)
            }
            ArrivalKind::Uniform { e_u } => irwin_hall_upper_tail(q, threshold / e_u),
            ArrivalKind::Deterministic { e } => {
                if qf * e >= threshold * (1.0 - ATOM_RTOL) {
                    1.0
                } else {
                    0.0
                }
            }
            ArrivalKind::EmpiricalTable { .. } => {
                let support = self.support.as_ref().expect("table support");
                let cut = threshold * (1.0 - ATOM_RTOL);
                support
                    .iter()
                    .filter(|(v, _)| *v >= cut)
                    .map(|(_, w)| w)
                    .sum()
            }
        };
        Ok(TailProbability::exact(value))
    }
}

/// `P(Bin(n, p) >= k)`.
fn binomial_upper_tail(n: u64, p: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return 1.0;
    }
    if k > n as f64 {
        return 0.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let k = k as u64;
    let dist = Binomial::new(p, n).expect("validated binomial parameters");
    dist.sf(k - 1)
}

/// `P(U_1 + ... + U_q >= x)` for i.i.d. standard uniforms.
fn irwin_hall_upper_tail(q: usize, x: f64) -> f64 {
    let qf = q as f64;
    if x <= 0.0 {
        return 1.0;
    }
    if x >= qf {
        return 0.0;
    }
    // evaluate the CDF on the half closer to zero; the law is symmetric about q/2
    if x >= qf / 2.0 {
        irwin_hall_cdf(q, qf - x)
    } else {
        1.0 - irwin_hall_cdf(q, x)
    }
    .clamp(0.0, 1.0)
}

fn irwin_hall_cdf(q: usize, y: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0; // C(q, k)
    let ln_fact: f64 = (1..=q).map(|i| (i as f64).ln()).sum();
    for k in 0..=(y.floor() as usize).min(q) {
        let base = y - k as f64;
        if base > 0.0 {
            let term = binom * (q as f64 * base.ln() - ln_fact).exp();
            if k % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        binom = binom * (q - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// Distribution of a sum of `q` i.i.d. draws from a finite table, as sorted
/// `(value, probability)` pairs with numerically equal sums merged.
fn convolve_table(values: &[f64], probabilities: &[f64], q: usize) -> Vec<(f64, f64)> {
    let mut dist = vec![(0.0, 1.0)];
    for _ in 0..q {
        let mut next = Vec::with_capacity(dist.len() * values.len());
        for &(v, w) in &dist {
            for (&x, &px) in values.iter().zip(probabilities) {
                if px > 0.0 {
                    next.push((v + x, w * px));
                }
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (v, w) in next {
            match merged.last_mut() {
                Some(last) if (v - last.0).abs() <= 1e-12 * v.abs().max(1.0) => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        dist = merged;
    }
    dist
}
