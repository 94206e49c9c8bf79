//! Uplink preamble estimation, signature-based user grouping, grouped uplink
//! training with pilot reuse, and the training-error decomposition.
//!
//! Users whose signature windows are disjoint (with a guard interval) share a
//! single pilot sequence; the base station separates them afterwards in
//! beamspace by extracting each user's window. Pilot contamination then only
//! enters through the small leakage of groupmates onto the window.

use crate::array::{ChannelVector, LinkDirection};
use crate::beamspace::{from_beamspace, to_beamspace, BeamspaceVector, SpatialSignature};
use crate::error::{Error, Result};
use crate::array::complex_gaussian;
use num_complex::Complex64;
use rand::Rng;

/// Family used to build the orthogonal pilot matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PilotFamily {
    #[default]
    Dft,
    Hadamard,
}

/// L×τ pilot matrix with mutually orthogonal columns,
/// `s_i^H s_j = L σ_p² δ(i-j)`.
#[derive(Debug, Clone)]
pub struct PilotSet {
    /// Column i is the pilot sequence of index i, length L.
    columns: Vec<Vec<Complex64>>,
    pub pilot_power: f64,
    pub len: usize,
}

impl PilotSet {
    pub fn new(family: PilotFamily, len: usize, count: usize, pilot_power: f64) -> Result<Self> {
        if count == 0 || count > len {
            return Err(Error::config(format!(
                "pilot count {count} must be in 1..={len}"
            )));
        }
        if !(pilot_power > 0.0) {
            return Err(Error::config("pilot power must be positive"));
        }
        let amp = pilot_power.sqrt();
        let columns = match family {
            PilotFamily::Dft => (0..count)
                .map(|i| {
                    (0..len)
                        .map(|t| {
                            Complex64::from_polar(
                                amp,
                                -2.0 * std::f64::consts::PI * (t * i) as f64 / len as f64,
                            )
                        })
                        .collect()
                })
                .collect(),
            PilotFamily::Hadamard => {
                if !len.is_power_of_two() {
                    return Err(Error::config(format!(
                        "hadamard pilots need a power-of-two length, got {len}"
                    )));
                }
                (0..count)
                    .map(|i| {
                        (0..len)
                            .map(|t| {
                                let sign = if (t & i).count_ones() % 2 == 0 {
                                    1.0
                                } else {
                                    -1.0
                                };
                                Complex64::new(amp * sign, 0.0)
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        Ok(Self {
            columns,
            pilot_power,
            len,
        })
    }

    pub fn count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[Complex64] {
        &self.columns[i]
    }

    /// `L σ_p²`, the squared norm of every column.
    pub fn column_energy(&self) -> f64 {
        self.len as f64 * self.pilot_power
    }
}

/// Per-user uplink training parameters.
#[derive(Debug, Clone, Copy)]
pub struct UplinkTrainingConfig {
    /// Signature width τ (number of reusable pilot sequences).
    pub tau: usize,
    /// Guard interval Ω, circular bin distance between co-grouped windows.
    pub guard: usize,
    /// Training energy P^ut per user.
    pub train_energy: f64,
    /// Noise power σ_n².
    pub noise_power: f64,
    /// Train groups in consecutive rounds of τ when more than τ groups exist.
    pub allow_sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupPurpose {
    UplinkTraining,
    DownlinkTraining,
    Data,
}

/// Partition of user indices into pilot-sharing groups.
#[derive(Debug, Clone)]
pub struct GroupAssignment {
    pub groups: Vec<Vec<usize>>,
    pub purpose: GroupPurpose,
}

impl GroupAssignment {
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Check the grouping criterion on every member pair. Users sharing an
    /// identical signature (downlink clusters trained by one transmission)
    /// are permitted for the downlink purpose; distinct windows must always
    /// be disjoint and separated by the guard.
    pub fn validate(&self, signatures: &[SpatialSignature], omega: usize) -> Result<()> {
        for (gi, group) in self.groups.iter().enumerate() {
            for (i, &a) in group.iter().enumerate() {
                for &b in &group[i + 1..] {
                    let sa = &signatures[a];
                    let sb = &signatures[b];
                    let identical = sa.start == sb.start && sa.len == sb.len;
                    if identical && self.purpose == GroupPurpose::DownlinkTraining {
                        continue;
                    }
                    if !sa.compatible(sb, omega) {
                        return Err(Error::config(format!(
                            "group {gi}: users {a} and {b} violate the guard criterion"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Received block of `num_symbols` symbol periods over `num_antennas`
/// antennas, stored column-per-symbol.
#[derive(Debug, Clone)]
pub struct RxMatrix {
    pub num_antennas: usize,
    pub cols: Vec<Vec<Complex64>>,
}

impl RxMatrix {
    pub fn zeros(num_antennas: usize, num_symbols: usize) -> Self {
        Self {
            num_antennas,
            cols: vec![vec![Complex64::new(0.0, 0.0); num_antennas]; num_symbols],
        }
    }

    pub fn num_symbols(&self) -> usize {
        self.cols.len()
    }

    /// `Y += amp · h · s^H`
    pub fn add_rank_one(&mut self, amp: f64, h: &[Complex64], s: &[Complex64]) {
        debug_assert_eq!(h.len(), self.num_antennas);
        debug_assert_eq!(s.len(), self.cols.len());
        for (col, st) in self.cols.iter_mut().zip(s) {
            let w = st.conj() * amp;
            for (c, hv) in col.iter_mut().zip(h) {
                *c += hv * w;
            }
        }
    }

    /// Add i.i.d. CN(0, σ²) noise to every entry.
    pub fn add_noise<R: Rng>(&mut self, noise_power: f64, rng: &mut R) {
        let amp = noise_power.sqrt();
        for col in self.cols.iter_mut() {
            for c in col.iter_mut() {
                *c += complex_gaussian(rng) * amp;
            }
        }
    }

    /// `Y · s`
    pub fn correlate(&self, s: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(s.len(), self.cols.len());
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_antennas];
        for (col, st) in self.cols.iter().zip(s) {
            for (o, c) in out.iter_mut().zip(col) {
                *o += c * st;
            }
        }
        out
    }
}

/// Simulate one preamble slot: users `0..n` transmit distinct pilots with
/// energies `user_powers`; returns the received block.
pub fn preamble_receive<R: Rng>(
    channels: &[&ChannelVector],
    pilots: &PilotSet,
    user_powers: &[f64],
    noise_power: f64,
    rng: &mut R,
) -> Result<RxMatrix> {
    if channels.len() > pilots.count() {
        return Err(Error::dimension(format!(
            "{} users but only {} pilots",
            channels.len(),
            pilots.count()
        )));
    }
    if channels.len() != user_powers.len() {
        return Err(Error::dimension("one power per user required"));
    }
    let m = channels[0].len();
    let mut y = RxMatrix::zeros(m, pilots.len);
    for (k, h) in channels.iter().enumerate() {
        let d = user_powers[k] / pilots.column_energy();
        y.add_rank_one(d.sqrt(), &h.entries, pilots.column(k));
    }
    y.add_noise(noise_power, rng);
    Ok(y)
}

/// Least-squares preamble estimates: `ĥ_k = Y s_k / (√d_k L σ_p²)`.
pub fn preamble_estimate(
    y: &RxMatrix,
    pilots: &PilotSet,
    user_powers: &[f64],
) -> Result<Vec<ChannelVector>> {
    if y.num_symbols() != pilots.len {
        return Err(Error::dimension(format!(
            "received block has {} symbols, pilots {}",
            y.num_symbols(),
            pilots.len
        )));
    }
    if user_powers.len() > pilots.count() {
        return Err(Error::dimension("more powers than pilots"));
    }
    let energy = pilots.column_energy();
    user_powers
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let d = p / energy;
            let mut entries = y.correlate(pilots.column(k));
            let scale = 1.0 / (d.sqrt() * energy);
            for e in entries.iter_mut() {
                *e *= scale;
            }
            Ok(ChannelVector {
                entries,
                link: LinkDirection::Uplink,
            })
        })
        .collect()
}

/// Greedy first-fit partition: users in index order join the first group in
/// which they satisfy the guard criterion against every member.
pub fn group_users(signatures: &[SpatialSignature], omega: usize) -> GroupAssignment {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, sig) in signatures.iter().enumerate() {
        let slot = groups
            .iter_mut()
            .find(|g| g.iter().all(|&m| sig.compatible(&signatures[m], omega)));
        match slot {
            Some(g) => g.push(k),
            None => groups.push(vec![k]),
        }
    }
    GroupAssignment {
        groups,
        purpose: GroupPurpose::UplinkTraining,
    }
}

/// Split the largest groups (round-robin over member positions) until the
/// partition has `target` groups, so every pilot sequence is used and
/// within-group contamination drops. No-op if already at or above `target`.
pub fn rebalance_groups(assignment: &GroupAssignment, target: usize) -> GroupAssignment {
    let mut groups = assignment.groups.clone();
    while groups.len() < target {
        let (largest, len) = groups
            .iter()
            .enumerate()
            .map(|(i, g)| (i, g.len()))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .unwrap();
        if len < 2 {
            break;
        }
        let g = std::mem::take(&mut groups[largest]);
        let (stay, moved): (Vec<_>, Vec<_>) =
            g.iter().enumerate().partition(|(i, _)| i % 2 == 0);
        groups[largest] = stay.into_iter().map(|(_, u)| *u).collect();
        groups.push(moved.into_iter().map(|(_, u)| *u).collect());
    }
    GroupAssignment {
        groups,
        purpose: assignment.purpose,
    }
}

/// Grouped uplink training: group g shares pilot `s_g`; the estimate of each
/// member keeps only its signature window in rotated beamspace.
///
/// When the partition has more than τ groups they are trained in consecutive
/// rounds of τ (requires `allow_sequential`).
pub fn uplink_train<R: Rng>(
    channels: &[ChannelVector],
    signatures: &[SpatialSignature],
    assignment: &GroupAssignment,
    pilots: &PilotSet,
    cfg: &UplinkTrainingConfig,
    rng: &mut R,
) -> Result<Vec<ChannelVector>> {
    if channels.len() != signatures.len() {
        return Err(Error::dimension("one signature per channel required"));
    }
    let n_groups = assignment.num_groups();
    if n_groups > pilots.count() && !cfg.allow_sequential {
        return Err(Error::config(format!(
            "{n_groups} groups exceed {} pilots and sequential training is disabled",
            pilots.count()
        )));
    }
    let m = channels[0].len();
    let energy = pilots.column_energy();
    let d = cfg.train_energy / energy;
    let mut estimates: Vec<Option<ChannelVector>> = vec![None; channels.len()];

    for batch in assignment.groups.chunks(pilots.count()) {
        let mut y = RxMatrix::zeros(m, pilots.len);
        for (slot, group) in batch.iter().enumerate() {
            for &k in group {
                y.add_rank_one(d.sqrt(), &channels[k].entries, pilots.column(slot));
            }
        }
        y.add_noise(cfg.noise_power, rng);

        for (slot, group) in batch.iter().enumerate() {
            let mut yg = y.correlate(pilots.column(slot));
            for v in yg.iter_mut() {
                *v /= energy;
            }
            for &k in group {
                let sig = &signatures[k];
                let scaled: Vec<Complex64> = yg.iter().map(|v| v / d.sqrt()).collect();
                let obs = ChannelVector {
                    entries: scaled,
                    link: LinkDirection::Uplink,
                };
                let bs = to_beamspace(&obs, sig.shift)?;
                let mut kept = vec![Complex64::new(0.0, 0.0); m];
                for q in sig.indices() {
                    kept[q] = bs.entries[q];
                }
                let est = from_beamspace(
                    &BeamspaceVector {
                        entries: kept,
                        shift: sig.shift,
                    },
                    LinkDirection::Uplink,
                )?;
                estimates[k] = Some(est);
            }
        }
    }
    estimates
        .into_iter()
        .enumerate()
        .map(|(k, e)| e.ok_or_else(|| Error::config(format!("user {k} missing from assignment"))))
        .collect()
}

/// The three uplink error terms: window truncation, remaining pilot
/// contamination from groupmates, and the noise expectation `τ σ_n² / P^ut`.
#[derive(Debug, Clone, Copy)]
pub struct UplinkMse {
    pub truncation: f64,
    pub contamination: f64,
    pub noise: f64,
}

impl UplinkMse {
    pub fn total(&self) -> f64 {
        self.truncation + self.contamination + self.noise
    }
}

/// Evaluate the error decomposition for one user. `power_ratios[i]` is
/// `d_l / d_k` for groupmate i (1 for equal training energies).
pub fn uplink_mse_decomposition(
    h: &ChannelVector,
    groupmates: &[&ChannelVector],
    power_ratios: &[f64],
    sig: &SpatialSignature,
    cfg: &UplinkTrainingConfig,
) -> Result<UplinkMse> {
    if groupmates.len() != power_ratios.len() {
        return Err(Error::dimension("one power ratio per groupmate"));
    }
    let bs = to_beamspace(h, sig.shift)?;
    let truncation: f64 = bs
        .entries
        .iter()
        .enumerate()
        .filter(|(q, _)| !sig.contains(*q))
        .map(|(_, v)| v.norm_sqr())
        .sum();

    let mut leak = vec![Complex64::new(0.0, 0.0); sig.len];
    for (mate, &ratio) in groupmates.iter().zip(power_ratios) {
        let mb = to_beamspace(mate, sig.shift)?;
        for (i, q) in sig.indices().enumerate() {
            leak[i] += mb.entries[q] * ratio.sqrt();
        }
    }
    let contamination: f64 = leak.iter().map(|v| v.norm_sqr()).sum();
    let noise = sig.len as f64 * cfg.noise_power / cfg.train_energy;
    Ok(UplinkMse {
        truncation,
        contamination,
        noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{generate_channel, ArrayConfig, UserProfile};
    use crate::beamspace::find_signature;
    use crate::rng::derive_rng;

    fn cfg() -> UplinkTrainingConfig {
        UplinkTrainingConfig {
            tau: 16,
            guard: 4,
            train_energy: 32.0,
            noise_power: 1.0,
            allow_sequential: true,
        }
    }

    fn synthetic_on_window(sig: &SpatialSignature, seed: u64) -> ChannelVector {
        // Channel exactly supported on the signature window.
        let mut rng = derive_rng(seed, 0);
        let mut entries = vec![Complex64::new(0.0, 0.0); sig.num_beams];
        for q in sig.indices() {
            entries[q] = complex_gaussian(&mut rng) * 3.0;
        }
        from_beamspace(
            &BeamspaceVector {
                entries,
                shift: sig.shift,
            },
            LinkDirection::Uplink,
        )
        .unwrap()
    }

    #[test]
    fn pilot_columns_are_orthogonal() {
        for family in [PilotFamily::Dft, PilotFamily::Hadamard] {
            let p = PilotSet::new(family, 32, 16, 2.5).unwrap();
            for i in 0..16 {
                for j in 0..16 {
                    let g: Complex64 = p
                        .column(i)
                        .iter()
                        .zip(p.column(j))
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let want = if i == j { 32.0 * 2.5 } else { 0.0 };
                    assert!(
                        (g - Complex64::new(want, 0.0)).norm() < 1e-10 * 32.0 * 2.5,
                        "{family:?} gram[{i}][{j}] = {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn preamble_exact_without_noise() {
        let acfg = ArrayConfig::half_wavelength(64).unwrap();
        let profile = UserProfile::new(0.3, 0.02, 5).unwrap();
        let mut rng = derive_rng(10, 0);
        let h1 = generate_channel(&acfg, &profile, &mut rng, LinkDirection::Uplink).unwrap();
        let h2 = generate_channel(&acfg, &profile, &mut rng, LinkDirection::Uplink).unwrap();
        let pilots = PilotSet::new(PilotFamily::Dft, 16, 4, 1.0).unwrap();
        let y = preamble_receive(&[&h1, &h2], &pilots, &[16.0, 4.0], 0.0, &mut rng).unwrap();
        let est = preamble_estimate(&y, &pilots, &[16.0, 4.0]).unwrap();
        assert!(h1.dist_sqr(&est[0]) / h1.norm_sqr() < 1e-20);
        assert!(h2.dist_sqr(&est[1]) / h2.norm_sqr() < 1e-20);
    }

    #[test]
    fn preamble_noise_variance_matches_ls() {
        // E ||h_hat - h||^2 = M σ_n² / P^ut.
        let acfg = ArrayConfig::half_wavelength(32).unwrap();
        let profile = UserProfile::new(-0.2, 0.02, 4).unwrap();
        let mut rng = derive_rng(11, 0);
        let h = generate_channel(&acfg, &profile, &mut rng, LinkDirection::Uplink).unwrap();
        let pilots = PilotSet::new(PilotFamily::Dft, 8, 2, 3.0).unwrap();
        let p_ut = 6.0;
        let trials = 10_000;
        let mut acc = 0.0;
        for t in 0..trials {
            let mut nrng = derive_rng(12, t);
            let y = preamble_receive(&[&h], &pilots, &[p_ut], 1.0, &mut nrng).unwrap();
            let est = preamble_estimate(&y, &pilots, &[p_ut]).unwrap();
            acc += h.dist_sqr(&est[0]);
        }
        let want = 32.0 / p_ut;
        let got = acc / trials as f64;
        assert!(
            (got - want).abs() / want < 0.03,
            "noise mse {got} vs {want}"
        );
    }

    #[test]
    fn identical_windows_get_separate_groups() {
        let s = SpatialSignature::new(10, 16, 0.0, 128).unwrap();
        let a = group_users(&[s, s], 4);
        assert_eq!(a.num_groups(), 2);
    }

    #[test]
    fn gap_of_omega_allows_sharing() {
        let s1 = SpatialSignature::new(0, 16, 0.0, 128).unwrap();
        let s2 = SpatialSignature::new(20, 16, 0.0, 128).unwrap();
        let a = group_users(&[s1, s2], 4);
        assert_eq!(a.num_groups(), 1);
        a.validate(&[s1, s2], 4).unwrap();
        // One bin closer and they must split.
        let s3 = SpatialSignature::new(19, 16, 0.0, 128).unwrap();
        assert_eq!(group_users(&[s1, s3], 4).num_groups(), 2);
    }

    #[test]
    fn rebalance_splits_largest_round_robin() {
        let a = GroupAssignment {
            groups: vec![vec![0, 1, 2, 3], vec![4, 5]],
            purpose: GroupPurpose::UplinkTraining,
        };
        let b = rebalance_groups(&a, 4);
        assert_eq!(b.num_groups(), 4);
        // First split: [0,1,2,3] -> [0,2] + [1,3]; second splits a size-2 group.
        assert_eq!(b.groups[2], vec![1, 3]);
        let mut all: Vec<usize> = b.groups.concat();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3, 4, 5]);
        assert!(b.groups.iter().all(|g| !g.is_empty()));
    }

    #[test]
    fn extraction_cancels_other_groups_exactly() {
        let m = 128;
        let sig_a = SpatialSignature::new(8, 16, 0.0, m).unwrap();
        let sig_b = SpatialSignature::new(40, 16, 0.0, m).unwrap();
        let ha = synthetic_on_window(&sig_a, 21);
        let hb = synthetic_on_window(&sig_b, 22);
        let pilots = PilotSet::new(PilotFamily::Dft, 16, 2, 1.0).unwrap();
        let c = cfg();
        let mut y = RxMatrix::zeros(m, 16);
        let d = (c.train_energy / pilots.column_energy()).sqrt();
        y.add_rank_one(d, &ha.entries, pilots.column(0));
        y.add_rank_one(d, &hb.entries, pilots.column(1));
        // Correlating with pilot 0 must be independent of hb.
        let y0 = y.correlate(pilots.column(0));
        let expect: Vec<Complex64> = ha
            .entries
            .iter()
            .map(|v| v * d * pilots.column_energy())
            .collect();
        let err: f64 = y0
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / ha.norm_sqr();
        assert!(err < 1e-20, "cross-group leakage {err}");
    }

    #[test]
    fn train_recovers_window_supported_users_exactly() {
        let m = 128;
        let sig_a = SpatialSignature::new(8, 16, 0.0, m).unwrap();
        let sig_b = SpatialSignature::new(40, 16, 0.0, m).unwrap();
        let ha = synthetic_on_window(&sig_a, 31);
        let hb = synthetic_on_window(&sig_b, 32);
        let pilots = PilotSet::new(PilotFamily::Dft, 16, 16, 1.0).unwrap();
        let mut c = cfg();
        c.noise_power = 0.0;
        let assignment = GroupAssignment {
            groups: vec![vec![0, 1]],
            purpose: GroupPurpose::UplinkTraining,
        };
        let mut rng = derive_rng(33, 0);
        let est = uplink_train(
            &[ha.clone(), hb.clone()],
            &[sig_a, sig_b],
            &assignment,
            &pilots,
            &c,
            &mut rng,
        )
        .unwrap();
        assert!(ha.dist_sqr(&est[0]) / ha.norm_sqr() < 1e-20);
        assert!(hb.dist_sqr(&est[1]) / hb.norm_sqr() < 1e-20);
    }

    #[test]
    fn estimate_stays_in_window_span() {
        let acfg = ArrayConfig::half_wavelength(128).unwrap();
        let profile = UserProfile::new(0.25, 0.035, 20).unwrap();
        let mut rng = derive_rng(34, 0);
        let h = generate_channel(&acfg, &profile, &mut rng, LinkDirection::Uplink).unwrap();
        let sig = find_signature(&h, 16, 33).unwrap();
        let pilots = PilotSet::new(PilotFamily::Dft, 16, 16, 1.0).unwrap();
        let assignment = GroupAssignment {
            groups: vec![vec![0]],
            purpose: GroupPurpose::UplinkTraining,
        };
        let est = uplink_train(&[h], &[sig], &assignment, &pilots, &cfg(), &mut rng).unwrap();
        let bs = to_beamspace(&est[0], sig.shift).unwrap();
        let off: f64 = bs
            .entries
            .iter()
            .enumerate()
            .filter(|(q, _)| !sig.contains(*q))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        assert!(off / est[0].norm_sqr() < 1e-10);
    }

    #[test]
    fn noise_term_matches_monte_carlo() {
        // Leakage-free channel, single user: the only error is noise and its
        // expectation is τ σ_n² / P^ut.
        let sig = SpatialSignature::new(50, 16, 0.0, 128).unwrap();
        let h = synthetic_on_window(&sig, 41);
        let pilots = PilotSet::new(PilotFamily::Dft, 16, 16, 1.0).unwrap();
        let c = cfg();
        let assignment = GroupAssignment {
            groups: vec![vec![0]],
            purpose: GroupPurpose::UplinkTraining,
        };
        let trials = 10_000;
        let mut acc = 0.0;
        for t in 0..trials {
            let mut rng = derive_rng(42, t);
            let est =
                uplink_train(&[h.clone()], &[sig], &assignment, &pilots, &c, &mut rng).unwrap();
            acc += h.dist_sqr(&est[0]);
        }
        let want = 16.0 * c.noise_power / c.train_energy;
        let got = acc / trials as f64;
        assert!((got - want).abs() / want < 0.03, "noise term {got} vs {want}");
        // And the decomposition reports exactly that with no other terms.
        let mse = uplink_mse_decomposition(&h, &[], &[], &sig, &c).unwrap();
        assert!(mse.truncation < 1e-20);
        assert_eq!(mse.contamination, 0.0);
        assert!((mse.noise - want).abs() < 1e-12);
    }

    #[test]
    fn decomposition_matches_empirical_total() {
        // Random multiray users sharing a group: expected squared error over
        // noise draws equals truncation + contamination + noise within 5%.
        let acfg = ArrayConfig::half_wavelength(128).unwrap();
        let mut rng = derive_rng(55, 0);
        let pa = UserProfile::new(0.25, 0.03, 30).unwrap();
        let pb = UserProfile::new(-0.9, 0.03, 30).unwrap();
        let ha = generate_channel(&acfg, &pa, &mut rng, LinkDirection::Uplink).unwrap();
        let hb = generate_channel(&acfg, &pb, &mut rng, LinkDirection::Uplink).unwrap();
        let sa = find_signature(&ha, 16, 33).unwrap();
        let sb = find_signature(&hb, 16, 33).unwrap();
        assert!(sa.compatible(&sb, 4));
        let pilots = PilotSet::new(PilotFamily::Dft, 16, 16, 1.0).unwrap();
        let c = cfg();
        let assignment = GroupAssignment {
            groups: vec![vec![0, 1]],
            purpose: GroupPurpose::UplinkTraining,
        };
        let trials = 10_000;
        let mut acc = 0.0;
        for t in 0..trials {
            let mut nrng = derive_rng(56, t);
            let est = uplink_train(
                &[ha.clone(), hb.clone()],
                &[sa, sb],
                &assignment,
                &pilots,
                &c,
                &mut nrng,
            )
            .unwrap();
            acc += ha.dist_sqr(&est[0]);
        }
        let got = acc / trials as f64;
        let mse = uplink_mse_decomposition(&ha, &[&hb], &[1.0], &sa, &c).unwrap();
        let want = mse.total();
        assert!(
            (got - want).abs() / want < 0.05,
            "empirical {got} vs decomposition {want}"
        );
    }

    #[test]
    fn doubling_energy_halves_only_noise() {
        let sig = SpatialSignature::new(30, 16, 0.005, 128).unwrap();
        let h = synthetic_on_window(&sig, 61);
        let mate = synthetic_on_window(&SpatialSignature::new(70, 16, 0.005, 128).unwrap(), 62);
        let c1 = cfg();
        let mut c2 = cfg();
        c2.train_energy *= 2.0;
        let m1 = uplink_mse_decomposition(&h, &[&mate], &[1.0], &sig, &c1).unwrap();
        let m2 = uplink_mse_decomposition(&h, &[&mate], &[1.0], &sig, &c2).unwrap();
        assert_eq!(m1.truncation, m2.truncation);
        assert_eq!(m1.contamination, m2.contamination);
        assert!((m1.noise - 2.0 * m2.noise).abs() < 1e-12);
    }

    #[test]
    fn sequential_mode_gates_excess_groups() {
        let sigs: Vec<SpatialSignature> = (0..3)
            .map(|i| SpatialSignature::new(i * 40, 16, 0.0, 128).unwrap())
            .collect();
        let channels: Vec<ChannelVector> = (0..3)
            .map(|i| synthetic_on_window(&sigs[i], 70 + i as u64))
            .collect();
        let pilots = PilotSet::new(PilotFamily::Dft, 16, 2, 1.0).unwrap();
        let assignment = GroupAssignment {
            groups: vec![vec![0], vec![1], vec![2]],
            purpose: GroupPurpose::UplinkTraining,
        };
        let mut c = cfg();
        c.allow_sequential = false;
        let mut rng = derive_rng(71, 0);
        assert!(
            uplink_train(&channels, &sigs, &assignment, &pilots, &c, &mut rng).is_err()
        );
        c.allow_sequential = true;
        c.noise_power = 0.0;
        let est = uplink_train(&channels, &sigs, &assignment, &pilots, &c, &mut rng).unwrap();
        for (h, e) in channels.iter().zip(&est) {
            assert!(h.dist_sqr(e) / h.norm_sqr() < 1e-20);
        }
    }
}
