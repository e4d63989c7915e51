use serde::{Deserialize, Serialize};

use crate::corpus_io::{mean, variance, VariableMatrix};
use crate::error::{Error, Result};

/// The transform actually applied by [`log_shift`], for reports.
pub const LOG_SHIFT_FORMULA: &str = "x' = ln(x - min(x) + 1)";

/// Replaces each target column `x` by `ln(x - min(x) + 1)`. The smallest
/// value of every transformed column maps to exactly 0.
pub fn log_shift(m: &VariableMatrix, targets: &[&str]) -> Result<VariableMatrix> {
    let mut out = m.clone();
    for &name in targets {
        let col = out
            .column_mut(name)
            .ok_or_else(|| Error::Prep(format!("log-shift target {name:?} is not a variable")))?;
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        for x in col.iter_mut() {
            *x = (*x - min + 1.0).ln();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierCount {
    pub variable: String,
    pub replaced: usize,
}

/// Single-pass z-score rule: values with `|x - mean| > z * sd` become the
/// mean. Mean and sd (divisor n−1) are taken before any replacement.
/// Zero-variance columns are left alone.
pub fn outliers_to_mean(
    m: &VariableMatrix,
    z_threshold: f64,
) -> Result<(VariableMatrix, Vec<OutlierCount>)> {
    if !(z_threshold > 0.0) {
        return Err(Error::Prep(format!(
            "outlier threshold must be positive, got {z_threshold}"
        )));
    }
    if m.n() < 2 {
        return Err(Error::Prep("outlier detection needs at least 2 rows".into()));
    }
    let mut out = m.clone();
    let mut counts = Vec::with_capacity(m.names().len());
    for name in m.names() {
        let col = out.column_mut(name).expect("column exists");
        let mu = mean(col);
        let sd = variance(col).sqrt();
        let mut replaced = 0;
        if sd > 0.0 {
            for x in col.iter_mut() {
                if (*x - mu).abs() > z_threshold * sd {
                    *x = mu;
                    replaced += 1;
                }
            }
        }
        counts.push(OutlierCount {
            variable: name.clone(),
            replaced,
        });
    }
    Ok((out, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(values: Vec<f64>) -> VariableMatrix {
        VariableMatrix::from_pairs(vec![("x", values)]).unwrap()
    }

    #[test]
    fn log_shift_examples() {
        let e = std::f64::consts::E;
        let out = log_shift(&single(vec![0.0, e - 1.0]), &["x"]).unwrap();
        let x = out.column("x").unwrap();
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 1.0).abs() < 1e-15);

        let out = log_shift(&single(vec![-2.0, -1.0]), &["x"]).unwrap();
        assert_eq!(out.column("x").unwrap(), &[0.0, 2f64.ln()]);

        let out = log_shift(&single(vec![5.0, 5.0]), &["x"]).unwrap();
        assert_eq!(out.column("x").unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn log_shift_leaves_other_columns() {
        let m = VariableMatrix::from_pairs(vec![("a", vec![1.0, 2.0]), ("b", vec![3.0, 9.0])])
            .unwrap();
        let out = log_shift(&m, &["a"]).unwrap();
        assert_eq!(out.column("b").unwrap(), &[3.0, 9.0]);
        assert!(log_shift(&m, &["zzz"]).is_err());
    }

    #[test]
    fn outlier_hand_example() {
        // mean 1, sd 2, |4 - 1| / 2 = 1.5 > 1
        let (out, counts) = outliers_to_mean(&single(vec![0.0, 0.0, 0.0, 4.0]), 1.0).unwrap();
        assert_eq!(out.column("x").unwrap(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(counts[0].replaced, 1);
    }

    #[test]
    fn outlier_none_beyond_three_sd() {
        let (out, counts) = outliers_to_mean(&single(vec![1.0, 2.0, 3.0]), 3.0).unwrap();
        assert_eq!(out.column("x").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(counts[0].replaced, 0);
    }

    #[test]
    fn outlier_constant_column_untouched() {
        let (out, counts) = outliers_to_mean(&single(vec![2.0; 5]), 0.5).unwrap();
        assert_eq!(out.column("x").unwrap(), &[2.0; 5]);
        assert_eq!(counts[0].replaced, 0);
    }

    proptest! {
        #[test]
        fn log_shift_min_is_zero(xs in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let out = log_shift(&single(xs), &["x"]).unwrap();
            let min = out.column("x").unwrap().iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(min, 0.0);
        }

        #[test]
        fn outliers_never_increase_variance(
            xs in prop::collection::vec(-1e3f64..1e3, 2..60),
            z in 0.1f64..4.0,
        ) {
            let before = variance(&xs);
            let (out, _) = outliers_to_mean(&single(xs), z).unwrap();
            let after = variance(out.column("x").unwrap());
            prop_assert!(after <= before * (1.0 + 1e-12) + 1e-12);
        }
    }
}
