//! Unitary DFT helpers on top of `rustfft`, plus a pruned transform that
//! computes only a contiguous band of output bins.
//!
//! Convention: the forward matrix is `[F]_pq = exp(-j 2π p q / M) / sqrt(M)`,
//! so both directions are unitary and `F^H` inverts `F`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Mutex;

static PLANNER: Mutex<Option<FftPlanner<f64>>> = Mutex::new(None);

fn with_planner<R>(f: impl FnOnce(&mut FftPlanner<f64>) -> R) -> R {
    let mut guard = PLANNER.lock().unwrap();
    f(guard.get_or_insert_with(FftPlanner::new))
}

/// Forward unitary DFT in place: `x <- F x`.
pub fn unitary_dft_inplace(x: &mut [Complex64]) {
    let n = x.len();
    let fft = with_planner(|p| p.plan_fft_forward(n));
    fft.process(x);
    let scale = 1.0 / (n as f64).sqrt();
    for v in x.iter_mut() {
        *v *= scale;
    }
}

/// Inverse unitary DFT in place: `x <- F^H x`.
pub fn unitary_idft_inplace(x: &mut [Complex64]) {
    let n = x.len();
    let fft = with_planner(|p| p.plan_fft_inverse(n));
    fft.process(x);
    let scale = 1.0 / (n as f64).sqrt();
    for v in x.iter_mut() {
        *v *= scale;
    }
}

pub fn unitary_dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    unitary_dft_inplace(&mut buf);
    buf
}

pub fn unitary_idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    unitary_idft_inplace(&mut buf);
    buf
}

/// Unitary DFT restricted to the circular output band
/// `band_start, band_start+1, ..., band_start+band_len-1 (mod n)`.
///
/// Uses decimation-in-time with output pruning: each halving level only
/// carries the band, so the cost is about `n log2(band_len)` instead of
/// `n log2(n)` when `band_len << n`. Falls back to a full transform for odd
/// sizes or wide bands. Agreement with the full transform is at the level of
/// f64 rounding (well inside 1e-12 relative).
pub fn unitary_partial_dft(x: &[Complex64], band_start: usize, band_len: usize) -> Vec<Complex64> {
    let n = x.len();
    assert!(band_len >= 1 && band_len <= n, "band must be non-empty and fit");
    let mut out = band_dft(x, 0, 1, n, band_start % n, band_len);
    let scale = 1.0 / (n as f64).sqrt();
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

fn band_dft(
    x: &[Complex64],
    offset: usize,
    stride: usize,
    n: usize,
    band_start: usize,
    band_len: usize,
) -> Vec<Complex64> {
    // Recursion needs an even size and a band no wider than half, otherwise
    // the child bands would wrap onto themselves.
    if n % 2 != 0 || 2 * band_len > n || n <= 32 {
        let mut buf: Vec<Complex64> = (0..n).map(|i| x[offset + i * stride]).collect();
        let fft = with_planner(|p| p.plan_fft_forward(n));
        fft.process(&mut buf);
        return (0..band_len).map(|i| buf[(band_start + i) % n]).collect();
    }
    let half = n / 2;
    let child_start = band_start % half;
    let even = band_dft(x, offset, stride * 2, half, child_start, band_len);
    let odd = band_dft(x, offset + stride, stride * 2, half, child_start, band_len);
    (0..band_len)
        .map(|i| {
            let k = (band_start + i) % n;
            let tw = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64);
            even[i] + tw * odd[i]
        })
        .collect()
}
