use nalgebra::{DMatrix, DVector};

use super::{DspError, FilterSpec};

/// Direct form II transposed IIR filter with initial state `zi`.
pub fn lfilter(b: &[f64], a: &[f64], x: &[f64], zi: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    let mut z = zi.to_vec();
    let mut y = Vec::with_capacity(x.len());
    for &xi in x {
        let yi = b[0] * xi + z.first().copied().unwrap_or(0.0);
        for i in 1..n {
            z[i - 1] = b[i] * xi + z[i] - a[i] * yi;
        }
        if n > 0 {
            z[n - 1] = b[n] * xi - a[n] * yi;
        }
        y.push(yi);
    }
    y
}

/// Filter state for a unit step already at steady state.
///
/// Solves `(I - A^T) zi = b[1..] - a[1..] b[0]` with `A` the companion matrix of `a`.
pub fn lfilter_zi(b: &[f64], a: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        // (companion)^T has -a[1..] down its first column and ones above the diagonal
        m[(i, 0)] += a[i + 1];
        if i + 1 < n {
            m[(i, i + 1)] -= 1.0;
        }
    }
    let rhs = DVector::from_iterator(n, (1..=n).map(|i| b[i] - a[i] * b[0]));
    m.lu()
        .solve(&rhs)
        .expect("I - A^T is invertible for a stable filter")
        .iter()
        .copied()
        .collect()
}

pub fn pad_len(order: usize, len: usize) -> usize {
    (3 * (order + 1)).min(len.saturating_sub(1))
}

/// Odd reflection about both end samples.
fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let (first, last) = (x[0], x[n - 1]);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));
    ext
}

/// One forward pass then one backward pass over the padded signal, each
/// started from the steady state of its first input sample.
fn forward_backward(spec: &FilterSpec, x: &[f64], zi: &[f64]) -> Vec<f64> {
    let pad = pad_len(spec.order, x.len());
    let ext = odd_extend(x, pad);
    let scaled = |s: f64| zi.iter().map(|z| z * s).collect::<Vec<_>>();
    let mut y = lfilter(&spec.b, &spec.a, &ext, &scaled(ext[0]));
    y.reverse();
    let mut y = lfilter(&spec.b, &spec.a, &y, &scaled(y[0]));
    y.reverse();
    y[pad..pad + x.len()].to_vec()
}

/// Zero-phase filtering.
///
/// The signal is odd-reflected by `min(3 (order + 1), len - 1)` samples at
/// both ends and run forward and backward through the filter. The result is
/// the mean of that pass and the same pass applied to the time-reversed
/// signal (reversed back), which makes the output exactly symmetric under
/// time reversal. Steady-state magnitude response is `|H|^2`.
pub fn filtfilt(spec: &FilterSpec, x: &[f64]) -> Result<Vec<f64>, DspError> {
    let min_len = 3 * spec.order + 1;
    if x.len() < min_len {
        return Err(DspError::SignalTooShort { len: x.len(), min: min_len });
    }
    let zi = lfilter_zi(&spec.b, &spec.a);
    let fwd = forward_backward(spec, x, &zi);
    let mut rev_in = x.to_vec();
    rev_in.reverse();
    let mut rev = forward_backward(spec, &rev_in, &zi);
    rev.reverse();
    Ok(fwd.iter().zip(&rev).map(|(p, q)| 0.5 * (p + q)).collect())
}
