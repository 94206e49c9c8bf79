//! Beamspace transforms, spatial rotation, power-concentration sets,
//! spatial-signature search and the angle-reciprocity index map.
//!
//! The beamspace of a channel vector is its unitary DFT, optionally preceded
//! by a per-antenna progressive phase shift `Φ(φ) = diag(1, e^{jφ}, ...)`
//! (spatial rotation). Rotation slides the DFT sampling grid by up to half a
//! bin and can concentrate almost all channel power of a narrow-spread user
//! into a handful of adjacent bins.

use crate::array::{steering_vector, ArrayConfig, ChannelVector, LinkDirection, UserProfile};
use crate::error::{Error, Result};
use crate::fft::{unitary_dft_inplace, unitary_idft_inplace, unitary_partial_dft};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Channel vector expressed in the (rotated) DFT basis.
#[derive(Debug, Clone)]
pub struct BeamspaceVector {
    pub entries: Vec<Complex64>,
    /// Rotation shift used to produce it, radians in `[-pi/M, pi/M]`.
    pub shift: f64,
}

impl BeamspaceVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.entries.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// A contiguous (circular) window of beam indices plus the rotation shift
/// that aligns it; the sparse support assigned to one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialSignature {
    /// First beam index of the window.
    pub start: usize,
    /// Window length τ.
    pub len: usize,
    /// Rotation shift φ, radians in `[-pi/M, pi/M]`.
    pub shift: f64,
    /// Ring size M (total number of beams).
    pub num_beams: usize,
}

impl SpatialSignature {
    pub fn new(start: usize, len: usize, shift: f64, num_beams: usize) -> Result<Self> {
        if len == 0 || len > num_beams {
            return Err(Error::domain(format!(
                "window length {len} outside 1..={num_beams}"
            )));
        }
        Ok(Self {
            start: start % num_beams,
            len,
            shift,
            num_beams,
        })
    }

    /// Beam indices of the window in ring order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        let m = self.num_beams;
        (0..self.len).map(move |i| (self.start + i) % m)
    }

    pub fn contains(&self, q: usize) -> bool {
        (q + self.num_beams - self.start) % self.num_beams < self.len
    }

    pub fn overlaps(&self, other: &SpatialSignature) -> bool {
        let m = self.num_beams;
        (other.start + m - self.start) % m < self.len
            || (self.start + m - other.start) % m < other.len
    }

    /// Circular gap between the two windows: the number of beam indices
    /// strictly between them (0 if they overlap or touch).
    pub fn ring_distance(&self, other: &SpatialSignature) -> usize {
        if self.overlaps(other) {
            return 0;
        }
        let m = self.num_beams;
        let end_a = (self.start + self.len - 1) % m;
        let end_b = (other.start + other.len - 1) % m;
        let gap_ab = (other.start + m - end_a - 1) % m;
        let gap_ba = (self.start + m - end_b - 1) % m;
        gap_ab.min(gap_ba)
    }

    /// Grouping criterion: disjoint windows separated by at least `omega`.
    pub fn compatible(&self, other: &SpatialSignature, omega: usize) -> bool {
        !self.overlaps(other) && self.ring_distance(other) >= omega
    }
}

/// Minimal-cardinality set of beam indices holding a target power fraction.
#[derive(Debug, Clone)]
pub struct ConcentrationSet {
    /// Selected beam indices, in descending power order.
    pub indices: Vec<usize>,
    /// Requested power fraction η.
    pub power_fraction: f64,
    /// Fraction actually captured by `indices`.
    pub captured_fraction: f64,
}

impl ConcentrationSet {
    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }
}

fn check_shift(m: usize, shift: f64) -> Result<()> {
    let lim = PI / m as f64;
    if shift.abs() > lim * (1.0 + 1e-9) {
        return Err(Error::domain(format!(
            "rotation shift {shift} outside [-pi/{m}, pi/{m}]"
        )));
    }
    Ok(())
}

/// `F Φ(φ) h`: rotate, then take the unitary DFT.
pub fn to_beamspace(h: &ChannelVector, shift: f64) -> Result<BeamspaceVector> {
    let m = h.len();
    check_shift(m, shift)?;
    let mut entries: Vec<Complex64> = h
        .entries
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, shift * i as f64))
        .collect();
    unitary_dft_inplace(&mut entries);
    Ok(BeamspaceVector { entries, shift })
}

/// Exact inverse of [`to_beamspace`]: `Φ(φ)^H F^H h̃`.
pub fn from_beamspace(hb: &BeamspaceVector, link: LinkDirection) -> Result<ChannelVector> {
    let m = hb.len();
    check_shift(m, hb.shift)?;
    let mut entries = hb.entries.clone();
    unitary_idft_inplace(&mut entries);
    for (i, v) in entries.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, -hb.shift * i as f64);
    }
    Ok(ChannelVector { entries, link })
}

/// The τ window entries of `F Φ(φ) h` without computing the other bins.
/// Bit-level agreement with the full transform (within 1e-12).
pub fn partial_beamspace(
    h: &ChannelVector,
    shift: f64,
    window: &SpatialSignature,
) -> Result<Vec<Complex64>> {
    let m = h.len();
    check_shift(m, shift)?;
    if window.num_beams != m {
        return Err(Error::dimension(format!(
            "window ring {} != vector length {m}",
            window.num_beams
        )));
    }
    let rotated: Vec<Complex64> = h
        .entries
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, shift * i as f64))
        .collect();
    Ok(unitary_partial_dft(&rotated, window.start, window.len))
}

/// Smallest set of bins (any positions) whose power sums to at least
/// `eta * total`. Greedy descending-power selection is optimal here.
pub fn min_concentration_set(hb: &BeamspaceVector, eta: f64) -> Result<ConcentrationSet> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!("eta {eta} outside (0, 1)")));
    }
    let powers = hb.powers();
    let total: f64 = powers.iter().sum();
    let mut order: Vec<usize> = (0..powers.len()).collect();
    order.sort_by(|&a, &b| {
        powers[b]
            .partial_cmp(&powers[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let target = eta * total * (1.0 - 1e-12);
    let mut captured = 0.0;
    let mut indices = Vec::new();
    for q in order {
        indices.push(q);
        captured += powers[q];
        if captured >= target {
            break;
        }
    }
    Ok(ConcentrationSet {
        indices,
        power_fraction: eta,
        captured_fraction: if total > 0.0 { captured / total } else { 1.0 },
    })
}

fn circular_window_sum(prefix: &[f64], start: usize, len: usize, m: usize) -> f64 {
    if start + len <= m {
        prefix[start + len] - prefix[start]
    } else {
        (prefix[m] - prefix[start]) + prefix[start + len - m]
    }
}

/// Smallest contiguous circular window reaching `eta * total`; returns
/// `(start, len)`. Ties go to the smallest start index.
pub fn min_contiguous_set(hb: &BeamspaceVector, eta: f64) -> Result<(usize, usize)> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!("eta {eta} outside (0, 1)")));
    }
    let powers = hb.powers();
    let m = powers.len();
    let mut prefix = vec![0.0; m + 1];
    for (i, p) in powers.iter().enumerate() {
        prefix[i + 1] = prefix[i] + p;
    }
    let target = eta * prefix[m] * (1.0 - 1e-12);
    for len in 1..=m {
        let mut best: Option<usize> = None;
        let mut best_sum = f64::NEG_INFINITY;
        for start in 0..m {
            let s = circular_window_sum(&prefix, start, len, m);
            if s > best_sum {
                best_sum = s;
                best = Some(start);
            }
        }
        if best_sum >= target {
            return Ok((best.unwrap(), len));
        }
    }
    Ok((0, m))
}

/// Cardinality bound for the contiguous concentration window of a
/// narrow-spread multiray channel:
/// `ceil(2 M (d/λ) |cos θ| Δθ + 1) + c_max`, with `c_max` the worst
/// single-ray cardinality over the profile's angular range.
pub fn leakage_bound(cfg: &ArrayConfig, profile: &UserProfile, c_max: usize) -> usize {
    let span = 2.0
        * cfg.num_antennas as f64
        * cfg.spacing_over_wavelength_ul
        * profile.mean_doa.cos().abs()
        * profile.angular_spread;
    (span + 1.0).ceil() as usize + c_max
}

/// Per-angle single-ray concentration cardinality, the offline lookup used to
/// bound multiray leakage. Deterministic in the grid.
pub fn build_offline_table(
    cfg: &ArrayConfig,
    eta: f64,
    angle_grid: &[f64],
) -> Result<Vec<(f64, usize)>> {
    angle_grid
        .iter()
        .map(|&angle| {
            let a = steering_vector(cfg, angle, LinkDirection::Uplink)?;
            let bs = to_beamspace(&a, 0.0)?;
            Ok((angle, min_concentration_set(&bs, eta)?.cardinality()))
        })
        .collect()
}

/// Largest tabulated cardinality for angles inside `[lo, hi]`.
pub fn c_max_in_range(table: &[(f64, usize)], lo: f64, hi: f64) -> usize {
    table
        .iter()
        .filter(|(a, _)| *a >= lo && *a <= hi)
        .map(|(_, c)| *c)
        .max()
        .unwrap_or(0)
}

/// Uniform grid of rotation shifts on `[-pi/M, pi/M]`; a single point means
/// "no rotation" (φ = 0).
pub fn shift_grid(m: usize, size: usize) -> Vec<f64> {
    let lim = PI / m as f64;
    if size <= 1 {
        return vec![0.0];
    }
    (0..size)
        .map(|i| -lim + 2.0 * lim * i as f64 / (size - 1) as f64)
        .collect()
}

/// Search all rotation shifts on the grid and all circular windows of length
/// τ for the placement capturing maximum power. Ties break toward the
/// smallest shift, then the smallest start index.
pub fn find_signature(
    h: &ChannelVector,
    tau: usize,
    shift_grid_size: usize,
) -> Result<SpatialSignature> {
    let m = h.len();
    if tau == 0 || tau > m {
        return Err(Error::domain(format!("tau {tau} outside 1..={m}")));
    }
    let mut best_sum = f64::NEG_INFINITY;
    let mut best = (0.0, 0usize);
    for phi in shift_grid(m, shift_grid_size) {
        let bs = to_beamspace(h, phi)?;
        let powers = bs.powers();
        let mut prefix = vec![0.0; m + 1];
        for (i, p) in powers.iter().enumerate() {
            prefix[i + 1] = prefix[i] + p;
        }
        for start in 0..m {
            let s = circular_window_sum(&prefix, start, tau, m);
            if s > best_sum {
                best_sum = s;
                best = (phi, start);
            }
        }
    }
    SpatialSignature::new(best.1, tau, best.0, m)
}

/// Rotation shift on the grid that minimizes the contiguous concentration
/// window; returns `(shift, start, len)`. This is the dynamic-cardinality
/// counterpart of [`find_signature`].
pub fn best_rotation_contiguous(
    h: &ChannelVector,
    eta: f64,
    shift_grid_size: usize,
) -> Result<(f64, usize, usize)> {
    let m = h.len();
    let mut best: Option<(usize, f64, usize)> = None;
    for phi in shift_grid(m, shift_grid_size) {
        let bs = to_beamspace(h, phi)?;
        let (start, len) = min_contiguous_set(&bs, eta)?;
        if best.map_or(true, |(blen, _, _)| len < blen) {
            best = Some((len, phi, start));
        }
    }
    let (len, phi, start) = best.unwrap();
    Ok((phi, start, len))
}

/// Map an uplink signature to the downlink carrier through angle
/// reciprocity: window bounds scale by λ₁/λ₂ with floor/ceil widening, and
/// the shift scales by the same ratio. The result may be wider than the
/// uplink window; callers re-fit it to their configured τ.
pub fn reciprocal_signature(
    sig: &SpatialSignature,
    cfg: &ArrayConfig,
) -> Result<SpatialSignature> {
    let m = sig.num_beams as i64;
    let half = m / 2;
    let start = sig.start as i64;
    // Signed beam index: bins at or above M/2 stand for negative sin(θ).
    let q_min = if start < half { start } else { start - m };
    let q_max = q_min + sig.len as i64 - 1;
    if q_max > half - 1 {
        return Err(Error::domain(
            "uplink window straddles the sin(θ) = ±1 boundary".to_string(),
        ));
    }
    let ratio = cfg.carrier_ratio();
    let q_min_dl = (ratio * q_min as f64).floor() as i64;
    let q_max_dl = (ratio * q_max as f64).ceil() as i64;
    if q_min_dl < -half || q_max_dl > half - 1 {
        return Err(Error::domain(format!(
            "scaled window [{q_min_dl}, {q_max_dl}] leaves the representable ring"
        )));
    }
    let mut start_dl = q_min_dl.rem_euclid(m) as usize;
    let len_dl = (q_max_dl - q_min_dl + 1) as usize;
    // Scale the shift; fold it back into [-pi/M, pi/M] using the exact
    // equivalence (q, φ) == (q - 1, φ - 2π/M) of the rotated beams.
    let lim = PI / m as f64;
    let mut shift_dl = ratio * sig.shift;
    while shift_dl > lim {
        shift_dl -= 2.0 * lim;
        start_dl = (start_dl + sig.num_beams - 1) % sig.num_beams;
    }
    while shift_dl < -lim {
        shift_dl += 2.0 * lim;
        start_dl = (start_dl + 1) % sig.num_beams;
    }
    SpatialSignature::new(start_dl, len_dl, shift_dl, sig.num_beams)
}
