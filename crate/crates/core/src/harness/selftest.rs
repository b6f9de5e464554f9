//! Built-in oracle and invariant checks, runnable from the CLI.
//!
//! Each check is small enough to re-derive its expected value here,
//! independently of the implementation it exercises.

use ndarray::{array, Array1, Array2};

use crate::causal::{fit_logistic, LogisticSettings};
use crate::collaboration::{
    build_collaborative_dataset, fit_collaboration, generate_anchor, make_intermediate_share,
    IntermediateShare, ShareEnvelope,
};
use crate::metrics::{gap, histogram, jeffreys, masmd, smd, SmdKind};
use crate::reduction::{random_orthogonal, LinearReducer, MethodTag, Reducer};
use crate::tabular::{egfr, Sex};

pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

/// Run every self-test; the report is printable line by line.
pub fn run_selftest() -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    // Reference cohort SMD values, reproduced from summary statistics.
    {
        let treated: Vec<f64> = (0..1000).map(|i| if i < 65 { 1.0 } else { 0.0 }).collect();
        let control: Vec<f64> = (0..1000).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect();
        let binary = smd(&treated, &control, SmdKind::Binary)
            .ok()
            .flatten()
            .unwrap_or(f64::NAN);
        out.push(check(
            "smd-binary-cohort",
            (binary - 0.346).abs() <= 0.005,
            format!("0.065 vs 0.003 -> {binary:.4} (want 0.346 +- 0.005)"),
        ));
        let continuous = continuous_smd_from_summary(46.719, 28.571, 86.603, 49.982);
        out.push(check(
            "smd-continuous-cohort",
            (continuous - (-0.98)).abs() <= 0.01,
            format!("46.719/28.571 vs 86.603/49.982 -> {continuous:.4} (want -0.98 +- 0.01)"),
        ));
    }

    // Metric identities.
    {
        let zero_gap = gap(&[1.5, -0.25, 3.0], &[1.5, -0.25, 3.0]).unwrap_or(f64::NAN);
        let p = vec![0.5, 0.5];
        let q = vec![0.25, 0.75];
        let sym = (jeffreys(&p, &q).unwrap_or(f64::NAN) - jeffreys(&q, &p).unwrap_or(f64::NAN)).abs();
        let h = histogram(&[0.3, 0.31, 0.95], 20, (0.0, 1.0), 1e-9).unwrap_or_default();
        let norm_err = (h.iter().sum::<f64>() - 1.0).abs();
        let masmd_skip = masmd(&[Some(0.5), None]).unwrap_or(f64::NAN);
        let ok = zero_gap <= 1e-9 && sym == 0.0 && norm_err <= 1e-12 && (masmd_skip - 0.5).abs() < 1e-15;
        out.push(check(
            "metric-identities",
            ok,
            format!("gap0={zero_gap:.1e} jeffreys-sym={sym:.1e} hist-norm-err={norm_err:.1e}"),
        ));
    }

    // eGFR formula at the reference points.
    {
        let a = egfr(60.0, 1.0, Sex::Male).unwrap_or(f64::NAN);
        let b = egfr(60.0, 1.0, Sex::Female).unwrap_or(f64::NAN);
        let ok = (a - 59.91).abs() <= 0.01 && (b - 44.27).abs() <= 0.01;
        out.push(check("egfr-reference", ok, format!("male {a:.3}, female {b:.3}")));
    }

    // Logistic fit against an independent Newton solve.
    {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]];
        let labels = [false, false, false, true, true, true];
        let settings = LogisticSettings {
            ridge: 0.1,
            tol: 1e-10,
            max_iter: 200,
        };
        let model = fit_logistic(&x, &labels, &settings);
        let outcome = match model {
            Ok(model) => {
                let (oi, oc) = newton_reference(&x, &labels, 0.1);
                let err = (model.intercept - oi).abs().max((model.coefficients[0] - oc).abs());
                let grad = model
                    .penalized_gradient(&x, &labels)
                    .map(|g| g.dot(&g).sqrt())
                    .unwrap_or(f64::NAN);
                check(
                    "logistic-newton-oracle",
                    err <= 1e-6 && grad <= 1e-8,
                    format!("coef err {err:.2e}, gradient norm {grad:.2e}"),
                )
            }
            Err(e) => check("logistic-newton-oracle", false, e.to_string()),
        };
        out.push(outcome);
    }

    // Random orthogonal mixers are orthogonal.
    {
        let e = random_orthogonal(6, 2024);
        let ete = e.t().dot(&e);
        let mut err = 0.0f64;
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                err = err.max((ete[[i, j]] - expect).abs());
            }
        }
        out.push(check(
            "orthogonal-mixer",
            err <= 1e-10,
            format!("max |E^T E - I| = {err:.2e}"),
        ));
    }

    // Exact recovery: one shared invertible reducer, zero residuals.
    {
        let outcome = exact_recovery_check();
        out.push(outcome);
    }

    // Share envelope carries no reducer slot: reduce all-zero data with
    // a sentinel-valued reducer and confirm nothing of the reducer
    // reaches the serialized bytes.
    {
        let sentinel = 12345.678901234567;
        let reducer = Reducer::Linear(
            LinearReducer::new(
                Array2::from_elem((2, 2), sentinel),
                Array1::zeros(2),
                MethodTag::Custom,
            )
            .expect("sentinel reducer"),
        );
        let reduced = reducer.apply(&Array2::zeros((2, 2))).expect("apply");
        let share = IntermediateShare {
            party_id: 0,
            reduced: reduced.clone(),
            reduced_anchor: reduced,
            treatment: vec![true, false],
            outcome: array![0.0, 0.0],
            ids: vec![0, 1],
        };
        let text = ShareEnvelope::from_share(&share).to_json().unwrap_or_default();
        let ok = !text.contains("12345.6789") && !text.contains("projection") && !text.contains("reducer");
        out.push(check(
            "share-envelope-privacy",
            ok,
            format!("{} bytes, no reducer fields", text.len()),
        ));
    }

    out
}

fn continuous_smd_from_summary(mean_t: f64, sd_t: f64, mean_c: f64, sd_c: f64) -> f64 {
    (mean_t - mean_c) / ((sd_t * sd_t + sd_c * sd_c) / 2.0).sqrt()
}

fn newton_reference(x: &Array2<f64>, labels: &[bool], ridge: f64) -> (f64, f64) {
    let n = x.nrows();
    let mut b0 = 0.0f64;
    let mut b1 = 0.0f64;
    for _ in 0..200 {
        let mut g = [0.0f64; 2];
        let mut h = [[0.0f64; 2]; 2];
        for i in 0..n {
            let eta = b0 + b1 * x[[i, 0]];
            let p = 1.0 / (1.0 + (-eta).exp());
            let r = (if labels[i] { 1.0 } else { 0.0 }) - p;
            let w = p * (1.0 - p);
            let row = [1.0, x[[i, 0]]];
            for a in 0..2 {
                g[a] += row[a] * r;
                for b in 0..2 {
                    h[a][b] += row[a] * w * row[b];
                }
            }
        }
        g[1] -= ridge * b1;
        h[1][1] += ridge;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let s0 = (g[0] * h[1][1] - g[1] * h[0][1]) / det;
        let s1 = (g[1] * h[0][0] - g[0] * h[1][0]) / det;
        b0 += s0;
        b1 += s1;
        if (g[0] * g[0] + g[1] * g[1]).sqrt() < 1e-14 {
            break;
        }
    }
    (b0, b1)
}

fn exact_recovery_check() -> CheckOutcome {
    use crate::tabular::{partition, PartitionScheme, PartitionSpec};
    let cfg = crate::tabular::SyntheticConfig {
        n: 150,
        schema: crate::tabular::CovariateSchema::new(vec![
            crate::tabular::Covariate::continuous("a", None),
            crate::tabular::Covariate::continuous("b", None),
            crate::tabular::Covariate::continuous("c", None),
        ])
        .expect("schema"),
        treatment_coefficients: vec![0.0, 0.7, -0.4, 0.2],
        true_att: 1.0,
        outcome_coefficients: vec![0.5, 0.5, 0.5],
        noise_sd: 0.1,
        seed: 77,
    };
    let pop = match crate::tabular::generate_synthetic(&cfg) {
        Ok(p) => p,
        Err(e) => return check("collaboration-exact-recovery", false, e.to_string()),
    };
    let parties = match partition(
        &pop,
        &PartitionSpec {
            scheme: PartitionScheme::Iid { parts: 3 },
            seed: 5,
        },
    ) {
        Ok(p) => p,
        Err(e) => return check("collaboration-exact-recovery", false, e.to_string()),
    };
    let reducer = Reducer::Linear(
        LinearReducer::new(random_orthogonal(3, 9), Array1::zeros(3), MethodTag::Custom)
            .expect("reducer"),
    );
    let anchor = match generate_anchor(&pop.column_bounds(), pop.n(), 3) {
        Ok(a) => a,
        Err(e) => return check("collaboration-exact-recovery", false, e.to_string()),
    };
    let shares: Vec<_> = parties
        .iter()
        .map(|p| make_intermediate_share(p, &reducer, &anchor).expect("share"))
        .collect();
    match fit_collaboration(&shares, 3).and_then(|maps| {
        let max_resid = maps
            .anchor_residuals()
            .values()
            .cloned()
            .fold(0.0f64, f64::max);
        build_collaborative_dataset(&shares, &maps).map(|d| (max_resid, d))
    }) {
        Ok((max_resid, dataset)) => check(
            "collaboration-exact-recovery",
            max_resid <= 1e-9 && dataset.n() == pop.n(),
            format!("max anchor residual {max_resid:.2e}"),
        ),
        Err(e) => check("collaboration-exact-recovery", false, e.to_string()),
    }
}
