//! Derived clinical features: estimated glomerular filtration rate,
//! kidney-disease staging, and median imputation of missing values.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sex {
    Male,
    Female,
}

/// Estimated GFR (mL/min/1.73m^2) from age, serum creatinine, and sex.
pub fn egfr(age_years: f64, serum_creatinine: f64, sex: Sex) -> Result<f64> {
    if !(age_years > 0.0) || !(serum_creatinine > 0.0) {
        return Err(Error::Domain(format!(
            "egfr needs positive age and creatinine, got age={age_years}, scr={serum_creatinine}"
        )));
    }
    let sex_factor = match sex {
        Sex::Male => 1.0,
        Sex::Female => 0.739,
    };
    Ok(194.0 * serum_creatinine.powf(-1.094) * age_years.powf(-0.287) * sex_factor)
}

/// CKD stage 1..=5 from an eGFR value. Interval boundaries at 90, 60,
/// 30, and 15 are left-closed downward: a boundary value belongs to the
/// healthier stage.
pub fn ckd_stage(egfr: f64) -> Result<u8> {
    if !(egfr >= 0.0) {
        return Err(Error::Domain(format!("egfr must be non-negative, got {egfr}")));
    }
    Ok(if egfr >= 90.0 {
        1
    } else if egfr >= 60.0 {
        2
    } else if egfr >= 30.0 {
        3
    } else if egfr >= 15.0 {
        4
    } else {
        5
    })
}

/// Replace every NaN cell by the median of its column's observed values.
///
/// Even-count medians average the two middle values. A column with no
/// observed value cannot be imputed and is reported by index.
pub fn impute_median(x: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = x.clone();
    for j in 0..x.ncols() {
        let mut observed: Vec<f64> = x.column(j).iter().copied().filter(|v| !v.is_nan()).collect();
        if observed.is_empty() {
            return Err(Error::Domain(format!(
                "column {j} has no observed values to impute from"
            )));
        }
        if observed.len() == x.nrows() {
            continue;
        }
        observed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = observed.len() / 2;
        let median = if observed.len() % 2 == 1 {
            observed[mid]
        } else {
            (observed[mid - 1] + observed[mid]) / 2.0
        };
        for v in out.column_mut(j).iter_mut() {
            if v.is_nan() {
                *v = median;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn egfr_reference_values() {
        assert_abs_diff_eq!(egfr(60.0, 1.0, Sex::Male).unwrap(), 59.91, epsilon = 0.01);
        assert_abs_diff_eq!(egfr(60.0, 1.0, Sex::Female).unwrap(), 44.27, epsilon = 0.01);
        assert_abs_diff_eq!(egfr(60.0, 2.0, Sex::Male).unwrap(), 28.06, epsilon = 0.01);
    }

    #[test]
    fn egfr_rejects_non_positive_inputs() {
        assert!(egfr(0.0, 1.0, Sex::Male).is_err());
        assert!(egfr(60.0, -1.0, Sex::Female).is_err());
        assert!(egfr(f64::NAN, 1.0, Sex::Male).is_err());
    }

    #[test]
    fn ckd_stage_intervals_and_boundaries() {
        assert_eq!(ckd_stage(95.0).unwrap(), 1);
        assert_eq!(ckd_stage(45.0).unwrap(), 3);
        assert_eq!(ckd_stage(10.0).unwrap(), 5);
        assert_eq!(ckd_stage(90.0).unwrap(), 1);
        assert_eq!(ckd_stage(15.0).unwrap(), 4);
        assert!(ckd_stage(-1.0).is_err());
    }

    #[test]
    fn impute_fills_median_and_leaves_observed() {
        let x = array![[1.0], [f64::NAN], [3.0]];
        let out = impute_median(&x).unwrap();
        assert_eq!(out, array![[1.0], [2.0], [3.0]]);
    }

    #[test]
    fn impute_no_missing_is_identity() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(impute_median(&x).unwrap(), x);
    }

    #[test]
    fn impute_rejects_fully_missing_column() {
        let x = array![[f64::NAN], [f64::NAN]];
        let err = impute_median(&x).unwrap_err();
        assert!(err.to_string().contains("column 0"));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn egfr_decreases_in_scr_and_age(
                age in 1.0f64..100.0,
                scr in 0.1f64..10.0,
                bump in 0.01f64..5.0,
            ) {
                let base = egfr(age, scr, Sex::Male).unwrap();
                prop_assert!(egfr(age, scr + bump, Sex::Male).unwrap() < base);
                prop_assert!(egfr(age + bump, scr, Sex::Male).unwrap() < base);
            }

            #[test]
            fn stage_non_increasing_in_egfr(a in 0.0f64..200.0, b in 0.0f64..200.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(ckd_stage(lo).unwrap() >= ckd_stage(hi).unwrap());
            }
        }
    }
}
