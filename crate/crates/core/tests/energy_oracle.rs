//! Exact slot tails against brute-force enumeration and sampling.

use ehmmse::{ArrivalModel, TailMethod};

fn binomial_tail(q: usize, p: f64, k_min: usize) -> f64 {
    // direct enumeration with exact binomial coefficients
    (k_min..=q)
        .map(|k| {
            let mut c = 1.0;
            for i in 0..k {
                c *= (q - i) as f64 / (i + 1) as f64;
            }
            c * p.powi(k as i32) * (1.0 - p).powi((q - k) as i32)
        })
        .sum()
}

#[test]
fn bernoulli_tail_matches_enumeration() {
    for q in 1..=16 {
        for p in [0.1, 0.4, 0.73] {
            let a = ArrivalModel::bernoulli(p, 1.0).unwrap();
            for k in 0..=q + 1 {
                let got = a.slot_tail_probability(q, k as f64).unwrap();
                let want = if k > q { 0.0 } else { binomial_tail(q, p, k) };
                assert!((got.value - want).abs() < 1e-12, "q={q} p={p} k={k}");
                // just above an atom drops to the next count
                if k <= q {
                    let above = a.slot_tail_probability(q, k as f64 + 1e-6).unwrap().value;
                    let want_above = if k + 1 > q { 0.0 } else { binomial_tail(q, p, k + 1) };
                    assert!((above - want_above).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn uniform_two_slot_tail_by_convolution_integral() {
    // density of the sum of two U[0, e] is triangular on [0, 2e]
    let e = 0.8;
    let a = ArrivalModel::uniform(e).unwrap();
    for i in 0..=20 {
        let t = 2.0 * e * i as f64 / 20.0;
        let want = if t <= e {
            1.0 - t * t / (2.0 * e * e)
        } else {
            (2.0 * e - t).powi(2) / (2.0 * e * e)
        };
        let got = a.slot_tail_probability(2, t).unwrap();
        assert_eq!(got.method, TailMethod::Exact);
        assert!((got.value - want).abs() < 1e-12, "t={t}: {} vs {want}", got.value);
    }
    assert!((a.slot_tail_probability(2, 0.8).unwrap().value - 0.5).abs() < 1e-15);
}

/// Exact tails agree with a 1e6-sample estimate. 320 comparisons are made, so
/// the per-comparison limit is Bonferroni-corrected to a family-wise level of
/// 1e-3 (two-sided, z = 4.66) instead of a bare 3 SE, which would flag ~1 false alarm per run.
#[test]
fn exact_tails_agree_with_sampling() {
    const SAMPLES: usize = 1_000_000;
    const Z: f64 = 4.66;
    let models = [
        ArrivalModel::bernoulli(0.4, 1.0).unwrap(),
        ArrivalModel::uniform(0.8).unwrap(),
    ];
    for (mi, a) in models.iter().enumerate() {
        for q in 1..=8 {
            let mut sums = a.sample_slot_energies(q, SAMPLES, 1000 + (mi * 10 + q) as u64);
            sums.sort_by(|x, y| x.total_cmp(y));
            for i in 0..20 {
                let t = q as f64 * a.e_max() * (i as f64 + 0.5) / 20.0;
                let exact = a.slot_tail_probability(q, t).unwrap().value;
                let hits = SAMPLES - sums.partition_point(|v| *v < t);
                let emp = hits as f64 / SAMPLES as f64;
                let se = (exact * (1.0 - exact) / SAMPLES as f64).sqrt().max(1e-7);
                assert!((emp - exact).abs() <= Z * se + 1e-12, "model {mi} q={q} t={t}: {emp} vs {exact}");
            }
        }
    }
}

#[test]
fn slot_moments_at_scale() {
    const SLOTS: usize = 100_000;
    for (a, q) in [
        (ArrivalModel::bernoulli(0.4, 1.0).unwrap(), 8),
        (ArrivalModel::uniform(0.8).unwrap(), 1),
        (ArrivalModel::uniform(0.8).unwrap(), 5),
    ] {
        let x = a.sample_slot_energies(q, SLOTS, 77);
        let mean = x.iter().sum::<f64>() / SLOTS as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (SLOTS - 1) as f64;
        let qm = q as f64 * a.mean();
        let qv = q as f64 * a.variance();
        assert!((mean - qm).abs() <= 0.01 * qm, "mean {mean} vs {qm}");
        assert!((var - qv).abs() <= 0.01 * qv * 3.0, "var {var} vs {qv}");
        assert!(x.iter().all(|v| *v >= 0.0 && *v <= q as f64 * a.e_max()));
    }
}
