// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// One-sided paired t-test of `mean(a - b) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p_value: f64,
}

pub fn paired_t_test_greater(a: &[f64], b: &[f64]) -> PairedTest {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_diff = diffs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return PairedTest {
            n,
            mean_diff,
            t: f64::NAN,
            p_value: 1.0,
        };
    }
    let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    if se == 0.0 {
        let (t, p_value) = if mean_diff > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        };
        return PairedTest {
            n,
            mean_diff,
            t,
            p_value,
        };
    }
    let t = mean_diff / se;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("dof >= 1");
    PairedTest {
        n,
        mean_diff,
        t,
        p_value: 1.0 - dist.cdf(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.predict(10.0), 21.0);
    }

    #[test]
    fn noisy_line_r2_below_one() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [1.0, 3.0, 2.0, 5.0, 4.0];
        let f = linear_fit(&xs, &ys);
        assert!((f.r_squared - 0.64).abs() < 1e-12);
    }

    #[test]
    fn t_test_against_reference() {
        // Diffs 1..=5: mean 3, sd sqrt(2.5), t = 3 / sqrt(0.5) = 4.2426, 4 dof.
        let a = [2.0, 4.0, 6.0, 8.0, 10.0];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = paired_t_test_greater(&a, &b);
        assert!((r.t - 4.242_640_687).abs() < 1e-6);
        // Upper tail of t with 4 dof at 4.2426 is 0.0066178.
        assert!((r.p_value - 0.006_617_8).abs() < 1e-6, "{}", r.p_value);
        let flipped = paired_t_test_greater(&b, &a);
        assert!(flipped.p_value > 0.99);
    }

    #[test]
    fn constant_differences() {
        assert_eq!(paired_t_test_greater(&[2.0, 2.0], &[1.0, 1.0]).p_value, 0.0);
        assert_eq!(paired_t_test_greater(&[1.0, 1.0], &[1.0, 1.0]).p_value, 1.0);
    }
}
