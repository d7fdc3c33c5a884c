use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DspError;

/// Transfer function `B(z)/A(z)` of a digital low-pass filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub order: usize,
    /// Hz.
    pub cutoff: f64,
    /// Hz.
    pub sample_rate: f64,
    /// Numerator coefficients, `order + 1` of them.
    pub b: Vec<f64>,
    /// Denominator coefficients, `order + 1` of them, `a[0] == 1`.
    pub a: Vec<f64>,
}

/// Coefficients of `prod (z - r)` in descending powers of `z`.
fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Digital Butterworth low-pass via the bilinear transform with prewarping.
///
/// The analog prototype poles sit evenly on the left half of a circle of
/// radius `2 fs tan(pi fc / fs)`; the bilinear map sends them inside the unit
/// circle and all zeros to `z = -1`. The gain is fixed so that `H(1) = 1`.
pub fn design_butterworth_lowpass(order: usize, cutoff: f64, sample_rate: f64) -> Result<FilterSpec, DspError> {
    if order == 0 {
        return Err(DspError::InvalidOrder(order));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0 && cutoff > 0.0 && cutoff < sample_rate / 2.0) {
        return Err(DspError::InvalidCutoff { cutoff, sample_rate });
    }
    let n = order as f64;
    let fs2 = 2.0 * sample_rate;
    let warped = fs2 * (PI * cutoff / sample_rate).tan();

    let poles: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            let s = Complex64::from_polar(warped, theta);
            (fs2 + s) / (fs2 - s)
        })
        .collect();

    let a: Vec<f64> = poly_from_roots(&poles).iter().map(|c| c.re).collect();
    let zeros = vec![Complex64::new(-1.0, 0.0); order];
    let binom: Vec<f64> = poly_from_roots(&zeros).iter().map(|c| c.re).collect();
    let gain = a.iter().sum::<f64>() / binom.iter().sum::<f64>();
    let b = binom.iter().map(|c| c * gain).collect();

    Ok(FilterSpec {
        order,
        cutoff,
        sample_rate,
        b,
        a,
    })
}

impl FilterSpec {
    /// Complex response at frequency `f` (Hz).
    pub fn response(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f / self.sample_rate;
        let zinv = Complex64::from_polar(1.0, -w);
        let eval = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &x| acc * zinv + x)
        };
        eval(&self.b) / eval(&self.a)
    }

    /// `|H(e^{j 2 pi f / fs})|` of a single pass.
    pub fn magnitude(&self, f: f64) -> f64 {
        self.response(f).norm()
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Roots of the denominator, from the eigenvalues of its companion matrix.
    pub fn poles(&self) -> Vec<Complex64> {
        let n = self.a.len() - 1;
        if n == 0 {
            return Vec::new();
        }
        let mut c = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            c[(0, j)] = -self.a[j + 1] / self.a[0];
        }
        for i in 1..n {
            c[(i, i - 1)] = 1.0;
        }
        c.complex_eigenvalues().iter().copied().collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Checks the structural invariants of a low-pass spec.
    pub fn check(&self) -> Result<(), DspError> {
        let bad = |what: &str| Err(DspError::InvalidSpec(what.to_owned()));
        if self.b.len() != self.order + 1 || self.a.len() != self.order + 1 {
            return bad("coefficient count must be order + 1");
        }
        if self.a[0] != 1.0 {
            return bad("a[0] must be 1");
        }
        if !(self.cutoff > 0.0 && self.cutoff < self.sample_rate / 2.0) {
            return bad("cutoff must lie in (0, fs/2)");
        }
        if (self.dc_gain() - 1.0).abs() > 1e-9 {
            return bad("DC gain must be 1");
        }
        if !self.is_stable() {
            return bad("poles must lie inside the unit circle");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: cascade of second-order sections, each from the
    /// textbook bilinear biquad formulas with Q_k = 1 / (2 sin((2k-1) pi / 2n)).
    fn biquad_cascade(order: usize, cutoff: f64, fs: f64) -> (Vec<f64>, Vec<f64>) {
        assert!(order % 2 == 0);
        let k = (PI * cutoff / fs).tan();
        let mut b = vec![1.0];
        let mut a = vec![1.0];
        let conv = |p: &[f64], q: &[f64]| {
            let mut r = vec![0.0; p.len() + q.len() - 1];
            for (i, x) in p.iter().enumerate() {
                for (j, y) in q.iter().enumerate() {
                    r[i + j] += x * y;
                }
            }
            r
        };
        for s in 1..=order / 2 {
            let q = 1.0 / (2.0 * ((2 * s - 1) as f64 * PI / (2 * order) as f64).sin());
            let norm = 1.0 / (1.0 + k / q + k * k);
            let b0 = k * k * norm;
            b = conv(&b, &[b0, 2.0 * b0, b0]);
            a = conv(&a, &[1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm]);
        }
        (b, a)
    }

    #[test]
    fn fourth_order_has_five_coefficients() {
        let f = design_butterworth_lowpass(4, 5.0, 100.0).unwrap();
        assert_eq!(f.b.len(), 5);
        assert_eq!(f.a.len(), 5);
        assert_eq!(f.a[0], 1.0);
        f.check().unwrap();
    }

    #[test]
    fn matches_biquad_cascade() {
        for &(order, fc, fs) in &[(4, 5.0, 100.0), (2, 10.0, 250.0), (6, 5.0, 12.0), (4, 10.0, 100.0)] {
            let f = design_butterworth_lowpass(order, fc, fs).unwrap();
            let (b, a) = biquad_cascade(order, fc, fs);
            for (x, y) in f.b.iter().zip(&b).chain(f.a.iter().zip(&a)) {
                assert!((x - y).abs() < 1e-9, "{order} {fc} {fs}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn matches_reference_values() {
        // scipy.signal.butter(4, 5, fs=100)
        let b = [
            0.0004165992044066,
            0.0016663968176264,
            0.0024995952264396,
            0.0016663968176264,
            0.0004165992044066,
        ];
        let a = [1.0, -3.180638548874719, 3.8611943489942133, -2.112155355110969, 0.43826514226197977];
        let f = design_butterworth_lowpass(4, 5.0, 100.0).unwrap();
        for (x, y) in f.b.iter().zip(&b).chain(f.a.iter().zip(&a)) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn half_power_at_cutoff() {
        for order in 1..=8 {
            let f = design_butterworth_lowpass(order, 5.0, 100.0).unwrap();
            assert!((f.magnitude(5.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
            assert!((f.dc_gain() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn magnitude_is_monotone() {
        let f = design_butterworth_lowpass(4, 5.0, 12.0).unwrap();
        let mags: Vec<f64> = (0..=600).map(|i| f.magnitude(i as f64 * 0.01)).collect();
        assert!(mags.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn odd_orders_are_stable() {
        for order in [1, 3, 5, 7] {
            let f = design_butterworth_lowpass(order, 3.0, 50.0).unwrap();
            assert!(f.is_stable());
            assert_eq!(f.poles().len(), order);
        }
    }

    #[test]
    fn cutoff_must_be_below_nyquist() {
        assert!(matches!(
            design_butterworth_lowpass(4, 10.0, 12.0),
            Err(DspError::InvalidCutoff { .. })
        ));
        assert!(matches!(
            design_butterworth_lowpass(4, 0.0, 12.0),
            Err(DspError::InvalidCutoff { .. })
        ));
        assert!(matches!(design_butterworth_lowpass(0, 1.0, 12.0), Err(DspError::InvalidOrder(0))));
    }
}
