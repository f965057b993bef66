//! Self-check suites behind `ehmmse verify`.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::{fmt_f64, ExperimentConfig};
use crate::bounds::{
    average_benchmark, bernstein_oracle, bound_equidistant, bound_i, bound_validity_sweep,
    default_t_grid, min_eigen_lower_bound_check, offline_benchmark, Tail,
};
use crate::energy::ArrivalModel;
use crate::error::Result;
use crate::estimation::{
    mmse_closed_form, mmse_empirical, mmse_full_covariance, run_campaign,
    TransmissionConfig,
};
use crate::linalg::CMatrix;
use crate::rng::{complex_normal, stream, substream};
use crate::signal::SignalModel;

/// Largest `N` for which the concentration oracle runs.
const ORACLE_MAX_N: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    /// Observed quantity (error, margin or frequency, see `detail`).
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// `suite/name` of every failed check.
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,passed,measured,limit,detail\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.suite,
                c.name,
                c.passed,
                fmt_f64(c.measured),
                fmt_f64(c.limit),
                c.detail.replace(',', ";")
            );
        }
        out
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_model<R: Rng>(rng: &mut R) -> Result<SignalModel> {
    let n = rng.random_range(2..=16);
    let s = rng.random_range(1..=n);
    let power = 0.5 + 10.0 * rng.random::<f64>();
    let noise = 10f64.powf(rng.random_range(-3.0..0.0));
    if rng.random::<bool>() {
        return SignalModel::build_lowpass_cwss(n, s, power, noise);
    }
    // QR of a complex Gaussian matrix; retry the rare near-degenerate draw
    loop {
        let g = CMatrix::from_fn(n, s, |_, _| complex_normal(rng));
        let q = g.qr().q();
        if let Ok(m) = SignalModel::from_unitary_columns(q, power, noise) {
            return Ok(m);
        }
    }
}

fn random_gains<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.2 {
                0.0
            } else {
                let e: f64 = Exp1.sample(rng);
                5.0 * e
            }
        })
        .collect()
}

fn suite_mmse_oracle(cfg: &ExperimentConfig, out: &mut Vec<Check>) -> Result<()> {
    let mut rng = stream(substream(cfg.seed, 1));
    let mut worst = 0.0_f64;
    for _ in 0..cfg.verify.mmse_instances {
        let m = random_model(&mut rng)?;
        let d = random_gains(&mut rng, m.n());
        worst = worst.max(rel_err(mmse_closed_form(&m, &d)?, mmse_full_covariance(&m, &d)?));
    }
    out.push(Check {
        suite: "mmse",
        name: "closed_form_vs_full_covariance".into(),
        passed: worst <= 1e-10,
        measured: worst,
        limit: 1e-10,
        detail: format!("max relative error over {} instances", cfg.verify.mmse_instances),
    });
    let m = SignalModel::build_lowpass_cwss(16, 4, 16.0, 0.1)?;
    let d: Vec<f64> = (0..16).map(|t| 0.2 + 0.1 * (t % 5) as f64).collect();
    let closed = mmse_closed_form(&m, &d)?;
    let emp = mmse_empirical(&m, &d, cfg.verify.estimator_samples, substream(cfg.seed, 2))?;
    let e = rel_err(emp, closed);
    out.push(Check {
        suite: "mmse",
        name: "closed_form_vs_estimator".into(),
        passed: e <= 0.02,
        measured: e,
        limit: 0.02,
        detail: format!("N=16 s=4; {} samples", cfg.verify.estimator_samples),
    });
    Ok(())
}

fn suite_equivalence(cfg: &ExperimentConfig, model: &SignalModel, arrivals: &ArrivalModel, out: &mut Vec<Check>) -> Result<()> {
    if !model.is_lowpass_dft() || !model.n().is_multiple_of(model.s()) {
        return Ok(());
    }
    let q = model.n() / model.s();
    let eta = model.eta_upper();
    let mut worst = 0.0_f64;
    let k = cfg.verify.equivalence_points.max(1);
    for tail in [Tail::Bt, Tail::Bn] {
        for i in 1..=k {
            let r = i as f64 / (k + 1) as f64;
            let a = bound_equidistant(model, arrivals, r, tail)?;
            let b = bound_i(model, arrivals, q, r / eta, tail)?.rescaled(eta);
            for (x, y) in [(a.err_bound, b.err_bound), (a.mu, b.mu), (a.rho, b.rho), (a.r, b.r)] {
                worst = worst.max(if x == y { 0.0 } else { rel_err(x, y) });
            }
        }
    }
    out.push(Check {
        suite: "equivalence",
        name: format!("equidistant_vs_bound_i_q{q}"),
        passed: worst <= 1e-12,
        measured: worst,
        limit: 1e-12,
        detail: "max relative gap of (err; mu; rho; r)".into(),
    });
    Ok(())
}

fn suite_schur(cfg: &ExperimentConfig, model: &SignalModel, arrivals: &ArrivalModel, out: &mut Vec<Check>) -> Result<()> {
    let mut rng = stream(substream(cfg.seed, 3));
    let e_tot = arrivals.mean() * model.n() as f64;
    let bench = offline_benchmark(model, e_tot)?;
    let var = model.component_variances();
    let mut worst = f64::INFINITY;
    for _ in 0..cfg.verify.allocations {
        let mut w = random_gains(&mut rng, model.n());
        if w.iter().all(|x| *x == 0.0) {
            w[0] = 1.0;
        }
        let cost: f64 = w.iter().zip(var).map(|(b, v)| b * v).sum();
        let b: Vec<f64> = w.iter().map(|x| x * e_tot / cost).collect();
        worst = worst.min((mmse_closed_form(model, &b)? - bench) / bench);
    }
    out.push(Check {
        suite: "schur",
        name: "random_allocations_vs_offline_optimum".into(),
        passed: worst >= -1e-9,
        measured: worst,
        limit: -1e-9,
        detail: format!("min (eps - eps_d)/eps_d over {} allocations", cfg.verify.allocations),
    });
    Ok(())
}

fn suite_concentration(
    cfg: &ExperimentConfig,
    model: &SignalModel,
    arrivals: &ArrivalModel,
    out: &mut Vec<Check>,
) -> Result<()> {
    let tails = [Tail::Bt, Tail::Bn];
    for &q in &cfg.q {
        let seed = substream(cfg.seed, 100 + q as u64);
        let checks = bound_validity_sweep(
            model,
            arrivals,
            q,
            cfg.trials,
            cfg.verify.r_points,
            cfg.verify.gamma_points,
            &tails,
            seed,
        )?;
        let margin = checks
            .iter()
            .map(|c| c.empirical - (c.point.prob_lower - 3.0 * c.std_error))
            .fold(f64::INFINITY, f64::min);
        out.push(Check {
            suite: "bound_validity",
            name: format!("q{q}"),
            passed: checks.iter().all(|c| c.passes),
            measured: if checks.is_empty() { 0.0 } else { margin },
            limit: 0.0,
            detail: format!("min coverage margin over {} informative points", checks.len()),
        });

        if model.n() <= ORACLE_MAX_N {
            let grid = default_t_grid(model, arrivals, cfg.verify.t_points);
            let rep = bernstein_oracle(model, arrivals, q, cfg.trials, &grid, seed ^ 1)?;
            let margin = rep
                .points
                .iter()
                .map(|p| p.bound + 3.0 * p.std_error - p.empirical)
                .fold(f64::INFINITY, f64::min);
            out.push(Check {
                suite: "bernstein",
                name: format!("tail_q{q}"),
                passed: rep.holds(),
                measured: margin,
                limit: 0.0,
                detail: format!("min (bound + 3SE - empirical) over {} t values", grid.len()),
            });
            out.push(Check {
                suite: "bernstein",
                name: format!("norm_routes_q{q}"),
                passed: rep.norm_route_gap <= 1e-8,
                measured: rep.norm_route_gap,
                limit: 1e-8,
                detail: "eigensolver vs power iteration, relative".into(),
            });
        }

        let r = 0.5 / model.eta_upper();
        let eig = min_eigen_lower_bound_check(model, arrivals, q, r, cfg.trials, seed ^ 2)?;
        out.push(Check {
            suite: "min_eigen",
            name: format!("q{q}"),
            passed: eig.holds(),
            measured: eig.frequency - (eig.lower_bound - 3.0 * eig.std_error),
            limit: 0.0,
            detail: format!("frequency {} vs lower bound {}", eig.frequency, eig.lower_bound),
        });

        if model.is_stationary() {
            let tx = TransmissionConfig::block(model.n(), q)?;
            let c = run_campaign(model, &tx, arrivals, cfg.trials, model.power(), seed ^ 3)?;
            let errs = c.errors();
            let n = errs.len() as f64;
            let mean = c.mean_error();
            let sd = if errs.len() > 1 {
                (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let lb = average_benchmark(model, arrivals);
            let margin = mean - (lb - 3.0 * sd / n.sqrt());
            out.push(Check {
                suite: "jensen",
                name: format!("q{q}"),
                passed: margin >= -1e-12 * lb,
                measured: margin,
                limit: 0.0,
                detail: format!("campaign mean {mean} vs benchmark {lb}"),
            });
        }
    }
    Ok(())
}

/// Runs every suite at the configured scale.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let model = cfg.signal.build()?;
    let arrivals = cfg.arrival_model()?;
    let mut checks = Vec::new();
    suite_mmse_oracle(cfg, &mut checks)?;
    suite_equivalence(cfg, &model, &arrivals, &mut checks)?;
    suite_schur(cfg, &model, &arrivals, &mut checks)?;
    suite_concentration(cfg, &model, &arrivals, &mut checks)?;
    let failures = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}/{}", c.suite, c.name))
        .collect();
    Ok(VerifyReport { checks, failures })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::ArrivalKind;

    fn quick() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.signal.n = 16;
        cfg.signal.power = 16.0;
        cfg.q = vec![1, 4];
        cfg.trials = 300;
        cfg.verify.mmse_instances = 10;
        cfg.verify.estimator_samples = 20_000;
        cfg.verify.allocations = 50;
        cfg
    }

    #[test]
    fn quick_verify_passes() {
        let rep = run_verify(&quick()).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
        assert!(rep.to_csv().lines().count() > 5);
    }

    #[test]
    fn deterministic_arrivals_pass_trivially() {
        let mut cfg = quick();
        cfg.arrivals = ArrivalKind::Deterministic { e: 0.4 };
        let rep = run_verify(&cfg).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    #[test]
    fn oversized_s_is_rejected_up_front() {
        let mut cfg = quick();
        cfg.signal.s = 17;
        assert!(run_verify(&cfg).is_err());
    }
}
