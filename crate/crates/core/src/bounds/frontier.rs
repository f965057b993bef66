//! Tightest `(p_MSE, err_bound)` frontier over all bound families.
//!
//! For a fixed family, tail and `(mu, rho)`, the probability bound increases
//! with `r` while the error bound also increases, so the best point for a
//! target probability is the smallest feasible `r`. It is bracketed on a
//! uniform grid and then bisected. Bound II has an extra free `gamma`, searched on a
//! grid augmented with the lattice points of discrete arrivals and refined by
//! golden section around the best grid value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bound_equidistant, bound_i, bound_ii_with_tail, BoundPoint, Family, Tail};
use crate::energy::{ArrivalModel, SlotTail};
use crate::error::{Error, Result};
use crate::signal::SignalModel;

const BISECTION_MAX_ITER: usize = 200;
const R_FLOOR: f64 = 1e-12;
// err within this relative distance of P_x counts as vacuous
const VACUOUS_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierOptions {
    pub r_grid: usize,
    pub gamma_grid: usize,
    pub refine_iters: usize,
    pub tails: Vec<Tail>,
    /// Families to consider; the equidistant one only applies to low-pass
    /// c.w.s.s. models with `Q s = N` and is skipped otherwise.
    pub families: Vec<Family>,
}

impl Default for FrontierOptions {
    fn default() -> Self {
        Self {
            r_grid: 400,
            gamma_grid: 200,
            refine_iters: 60,
            tails: vec![Tail::Bt, Tail::Bn],
            families: vec![Family::I, Family::II, Family::IEquidistant],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub target: f64,
    /// Smallest certified error, `P_x` when vacuous.
    pub err_bound: f64,
    /// Witness achieving `err_bound`, if any family reaches the target.
    pub point: Option<BoundPoint>,
    pub vacuous: bool,
}

/// Smallest `r in (0, r_max]` with `1 - f(mu, rho, r) >= target`.
fn min_feasible_r(
    tail: Tail,
    mu: f64,
    rho: f64,
    s: usize,
    r_max: f64,
    target: f64,
    r_grid: usize,
) -> Result<Option<f64>> {
    let feasible = |r: f64| -> Result<bool> { Ok(1.0 - tail.eval(mu, rho, r, s)? >= target) };
    let floor = r_max * R_FLOOR;
    if feasible(floor)? {
        return Ok(Some(floor));
    }
    if !feasible(r_max)? {
        return Ok(None);
    }
    let grid = r_grid.max(1);
    let at = |i: usize| if i == grid { r_max } else { r_max * i as f64 / grid as f64 };
    // first feasible grid index; feasibility is monotone in r
    let (mut lo_i, mut hi_i) = (0usize, grid);
    while hi_i - lo_i > 1 {
        let mid = (lo_i + hi_i) / 2;
        if feasible(at(mid))? {
            hi_i = mid;
        } else {
            lo_i = mid;
        }
    }
    let mut lo = if lo_i == 0 { floor } else { at(lo_i) };
    let mut hi = at(hi_i);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

fn better(a: Option<BoundPoint>, b: Option<BoundPoint>) -> Option<BoundPoint> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.err_bound < x.err_bound { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

struct Search<'a> {
    model: &'a SignalModel,
    arrivals: &'a ArrivalModel,
    slot_tail: &'a SlotTail,
    q: usize,
    opts: &'a FrontierOptions,
}

impl Search<'_> {
    fn family_i(&self, tail: Tail, target: f64) -> Result<Option<BoundPoint>> {
        let r_max = 1.0 / self.model.eta_upper();
        let probe = bound_i(self.model, self.arrivals, self.q, r_max, tail)?;
        match min_feasible_r(tail, probe.mu, probe.rho, self.model.s(), r_max, target, self.opts.r_grid)? {
            Some(r) => Ok(Some(bound_i(self.model, self.arrivals, self.q, r, tail)?)),
            None => Ok(None),
        }
    }

    fn equidistant(&self, tail: Tail, target: f64) -> Result<Option<BoundPoint>> {
        let probe = bound_equidistant(self.model, self.arrivals, 1.0, tail)?;
        match min_feasible_r(tail, probe.mu, probe.rho, self.model.s(), 1.0, target, self.opts.r_grid)? {
            Some(r) => Ok(Some(bound_equidistant(self.model, self.arrivals, r, tail)?)),
            None => Ok(None),
        }
    }

    fn family_ii_at(&self, tail: Tail, gamma: f64, target: f64) -> Result<Option<BoundPoint>> {
        let r_max = 1.0 / self.model.eta_upper();
        let probe =
            bound_ii_with_tail(self.model, self.arrivals, self.slot_tail, self.q, r_max, gamma, tail)?;
        if probe.degenerate || gamma == 0.0 {
            return Ok(None);
        }
        match min_feasible_r(tail, probe.mu, probe.rho, self.model.s(), r_max, target, self.opts.r_grid)? {
            Some(r) => Ok(Some(bound_ii_with_tail(
                self.model,
                self.arrivals,
                self.slot_tail,
                self.q,
                r,
                gamma,
                tail,
            )?)),
            None => Ok(None),
        }
    }

    fn gamma_candidates(&self) -> Vec<f64> {
        let gamma_max = self.q as f64 * self.arrivals.peak_ratio();
        let g = self.opts.gamma_grid.max(1);
        let mut cands: Vec<f64> = (1..=g).map(|j| gamma_max * j as f64 / g as f64).collect();
        if let Some(atoms) = self.slot_tail.atoms() {
            let mu_e = self.arrivals.mean();
            cands.extend(
                atoms
                    .into_iter()
                    .map(|a| a / mu_e)
                    .filter(|&x| x > 0.0 && x <= gamma_max),
            );
        }
        cands.sort_by(|a, b| a.total_cmp(b));
        cands.dedup();
        cands
    }

    fn family_ii(&self, tail: Tail, target: f64, gammas: &[f64]) -> Result<Option<BoundPoint>> {
        let evaluated = gammas
            .iter()
            .map(|&g| self.family_ii_at(tail, g, target))
            .collect::<Result<Vec<_>>>()?;
        let best_idx = evaluated
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i, p.err_bound)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        let Some(i) = best_idx else {
            return Ok(None);
        };
        let mut best = evaluated[i];
        let mut lo = if i == 0 { 0.0 } else { gammas[i - 1] };
        let mut hi = gammas[(i + 1).min(gammas.len() - 1)];
        let objective = |g: f64| -> Result<(f64, Option<BoundPoint>)> {
            let p = self.family_ii_at(tail, g, target)?;
            Ok((p.map_or(f64::INFINITY, |p| p.err_bound), p))
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - inv_phi * (hi - lo);
        let mut b = lo + inv_phi * (hi - lo);
        let (mut fa, pa) = objective(a)?;
        let (mut fb, pb) = objective(b)?;
        best = better(better(best, pa), pb);
        for _ in 0..self.opts.refine_iters {
            if fa <= fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - inv_phi * (hi - lo);
                let (f, p) = objective(a)?;
                fa = f;
                best = better(best, p);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + inv_phi * (hi - lo);
                let (f, p) = objective(b)?;
                fb = f;
                best = better(best, p);
            }
        }
        Ok(best)
    }
}

/// For each target in `prob_grid` (each in `(0, 1)`), the smallest error bound
/// certified with probability at least the target by any enabled family and
/// tail. The result is monotone: a higher target never gets a smaller bound.
pub fn tightest_frontier(
    model: &SignalModel,
    arrivals: &ArrivalModel,
    q: usize,
    prob_grid: &[f64],
    opts: &FrontierOptions,
) -> Result<Vec<FrontierPoint>> {
    if let Some(&bad) = prob_grid.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::invalid("prob_grid", format!("targets must lie in (0, 1), got {bad}")));
    }
    if opts.tails.is_empty() || opts.families.is_empty() {
        return Err(Error::invalid("opts", "need at least one tail and one family"));
    }
    if q == 0 || !model.n().is_multiple_of(q) {
        return Err(Error::invalid("q", format!("slot length must divide N = {}, got {q}", model.n())));
    }
    let slot_tail = SlotTail::new(arrivals, q)?;
    let search = Search {
        model,
        arrivals,
        slot_tail: &slot_tail,
        q,
        opts,
    };
    let use_eq = opts.families.contains(&Family::IEquidistant)
        && model.is_lowpass_dft()
        && q * model.s() == model.n();
    let gammas = search.gamma_candidates();

    let raw = prob_grid
        .par_iter()
        .map(|&target| {
            let mut best = None;
            for &tail in &opts.tails {
                if opts.families.contains(&Family::I) {
                    best = better(best, search.family_i(tail, target)?);
                }
                if opts.families.contains(&Family::II) {
                    best = better(best, search.family_ii(tail, target, &gammas)?);
                }
                if use_eq {
                    best = better(best, search.equidistant(tail, target)?);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;

    // a witness for a higher target also serves every lower one
    let mut order: Vec<usize> = (0..prob_grid.len()).collect();
    order.sort_by(|&a, &b| prob_grid[b].total_cmp(&prob_grid[a]));
    let mut out = vec![None; prob_grid.len()];
    let mut carry: Option<BoundPoint> = None;
    for idx in order {
        carry = better(carry, raw[idx]);
        let px = model.power();
        let (err, vacuous) = match carry {
            Some(p) if p.err_bound < px * (1.0 - VACUOUS_RTOL) => (p.err_bound, false),
            _ => (px, true),
        };
        out[idx] = Some(FrontierPoint {
            target: prob_grid[idx],
            err_bound: err,
            point: carry,
            vacuous,
        });
    }
    Ok(out.into_iter().map(|p| p.expect("every index filled")).collect())
}
