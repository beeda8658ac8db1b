//! Unweighted ordinary least squares for a single regressor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fit y = intercept + slope·x using centered sums.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "regression inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("regression inputs must be finite"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        sxx += dx * dx;
        sxy += dx * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression("all abscissae are identical".into()));
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        n_points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = ols(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.intercept, 1.0, epsilon = 1e-14);
        assert_eq!(f.n_points, 4);
        assert_abs_diff_eq!(f.eval(10.0), 21.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_and_errors() {
        let f = ols(&[1.0, 2.0, 5.0], &[0.7, 0.7, 0.7]).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0, epsilon = 1e-15);
        assert!(matches!(
            ols(&[2.0, 2.0], &[1.0, 3.0]),
            Err(Error::DegenerateRegression(_))
        ));
        assert!(ols(&[1.0], &[1.0]).is_err());
        assert!(ols(&[1.0, 2.0], &[1.0]).is_err());
        assert!(ols(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_noiseless_lines(a in -5.0f64..5.0, b in -2.0f64..2.0, n in 2usize..200) {
            let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let y: Vec<f64> = x.iter().map(|&xi| a + b * xi).collect();
            let f = ols(&x, &y).unwrap();
            prop_assert!((f.slope - b).abs() < 1e-10);
            prop_assert!((f.intercept - a).abs() < 1e-10);
        }
    }
}
