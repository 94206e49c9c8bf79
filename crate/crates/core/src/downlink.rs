//! Angle-reciprocal downlink training with pilot reuse across signatures,
//! per-user LS estimation, the feedback model and the downlink error
//! decomposition.
//!
//! The base station predicts each user's downlink window from its uplink
//! signature, gathers users with an identical predicted signature into a
//! cluster served by a single pilot transmission, and trains every cluster of
//! a group simultaneously over the shared τ-column pilot matrix. The user
//! side needs neither the window nor the shift: it correlates its received
//! block against the pilot matrix and feeds the τ coefficients back.

use crate::array::{ChannelVector, LinkDirection};
use crate::array::complex_gaussian;
use crate::beamspace::{from_beamspace, to_beamspace, BeamspaceVector, SpatialSignature};
use crate::error::{Error, Result};
use crate::uplink::{GroupAssignment, GroupPurpose, PilotSet};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Downlink training parameters; `train_energy` is the energy of one
/// signature transmission (`tr{S_k S_k^H} <= P^dt`).
#[derive(Debug, Clone, Copy)]
pub struct DownlinkTrainingConfig {
    pub tau: usize,
    pub train_energy: f64,
    pub noise_power: f64,
    pub guard: usize,
}

impl DownlinkTrainingConfig {
    /// Pilot scaling `ϖ = sqrt(P^dt / (τ L σ_p²))`.
    pub fn pilot_scale(&self, pilots: &PilotSet) -> f64 {
        (self.train_energy / (self.tau as f64 * pilots.column_energy())).sqrt()
    }
}

/// τ beamspace coefficients a user reports back to the base station.
#[derive(Debug, Clone)]
pub struct FeedbackReport {
    pub user: usize,
    pub coefficients: Vec<Complex64>,
}

/// Trim or widen a window to exactly `tau` bins, dropping (or annexing) the
/// edge bin with less power in the given beamspace power profile.
pub fn fit_signature_to_tau(
    sig: &SpatialSignature,
    tau: usize,
    powers: &[f64],
) -> Result<SpatialSignature> {
    let m = sig.num_beams;
    if powers.len() != m {
        return Err(Error::dimension(format!(
            "power profile has {} bins, ring has {m}",
            powers.len()
        )));
    }
    if tau == 0 || tau > m {
        return Err(Error::domain(format!("tau {tau} outside 1..={m}")));
    }
    let mut start = sig.start;
    let mut len = sig.len;
    while len > tau {
        let head = powers[start];
        let tail = powers[(start + len - 1) % m];
        if head < tail {
            start = (start + 1) % m;
        }
        len -= 1;
    }
    while len < tau {
        let before = powers[(start + m - 1) % m];
        let after = powers[(start + len) % m];
        if before > after {
            start = (start + m - 1) % m;
        }
        len += 1;
    }
    SpatialSignature::new(start, tau, sig.shift, m)
}

/// Users grouped by identical downlink signature; each cluster is served by
/// one pilot transmission over its consensus window.
#[derive(Debug, Clone)]
pub struct SignatureClusters {
    /// User indices per cluster.
    pub clusters: Vec<Vec<usize>>,
    /// Consensus signature per cluster.
    pub consensus: Vec<SpatialSignature>,
    /// Cluster index of each user.
    pub user_cluster: Vec<usize>,
}

impl SignatureClusters {
    /// Per-user signature after canonicalization.
    pub fn user_signatures(&self) -> Vec<SpatialSignature> {
        self.user_cluster
            .iter()
            .map(|&c| self.consensus[c])
            .collect()
    }
}

/// Merge users whose windows overlap into clusters and give every cluster
/// one consensus signature (rounded mean start, mean shift). Users of the
/// same physical scattering cluster end up sharing a window even when their
/// individual estimates differ by a bin or two.
pub fn cluster_signatures(signatures: &[SpatialSignature]) -> Result<SignatureClusters> {
    let n = signatures.len();
    if n == 0 {
        return Ok(SignatureClusters {
            clusters: vec![],
            consensus: vec![],
            user_cluster: vec![],
        });
    }
    let len = signatures[0].len;
    let m = signatures[0].num_beams;
    if signatures.iter().any(|s| s.len != len || s.num_beams != m) {
        return Err(Error::dimension(
            "clustering expects equal-size signatures on one ring".to_string(),
        ));
    }

    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            if signatures[a].overlaps(&signatures[b]) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_cluster: Vec<Option<usize>> = vec![None; n];
    let mut user_cluster = vec![0usize; n];
    for u in 0..n {
        let r = find(&mut parent, u);
        let c = match root_cluster[r] {
            Some(c) => c,
            None => {
                clusters.push(Vec::new());
                root_cluster[r] = Some(clusters.len() - 1);
                clusters.len() - 1
            }
        };
        clusters[c].push(u);
        user_cluster[u] = c;
    }

    let consensus = clusters
        .iter()
        .map(|members| {
            let anchor = signatures[members[0]].start as i64;
            let half = m as i64 / 2;
            let mean_rel: f64 = members
                .iter()
                .map(|&u| {
                    let d = (signatures[u].start as i64 - anchor).rem_euclid(m as i64);
                    (if d >= half { d - m as i64 } else { d }) as f64
                })
                .sum::<f64>()
                / members.len() as f64;
            let start = (anchor + mean_rel.round() as i64).rem_euclid(m as i64) as usize;
            let shift =
                members.iter().map(|&u| signatures[u].shift).sum::<f64>() / members.len() as f64;
            SpatialSignature::new(start, len, shift, m)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SignatureClusters {
        clusters,
        consensus,
        user_cluster,
    })
}

/// First-fit grouping for downlink training: users with an identical
/// (consensus) signature always share a group; distinct signatures must be
/// disjoint and guard-separated.
pub fn group_users_downlink(signatures: &[SpatialSignature], omega: usize) -> GroupAssignment {
    let fits = |sig: &SpatialSignature, other: &SpatialSignature| {
        (sig.start == other.start && sig.len == other.len) || sig.compatible(other, omega)
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, sig) in signatures.iter().enumerate() {
        let slot = groups
            .iter_mut()
            .find(|g| g.iter().all(|&u| fits(sig, &signatures[u])));
        match slot {
            Some(g) => g.push(k),
            None => groups.push(vec![k]),
        }
    }
    GroupAssignment {
        groups,
        purpose: GroupPurpose::DownlinkTraining,
    }
}

/// Beam vector `Φ(φ)^H f_q`, entry m = `exp(j (2π q / M - φ) m) / sqrt(M)`.
fn rotated_beam(q: usize, shift: f64, m: usize) -> Vec<Complex64> {
    let step = 2.0 * PI * q as f64 / m as f64 - shift;
    let scale = 1.0 / (m as f64).sqrt();
    (0..m)
        .map(|i| Complex64::from_polar(scale, step * i as f64))
        .collect()
}

/// User-side LS estimate: correlate the received row against the shared
/// pilot matrix. Takes no signature information — the user does not need to
/// know its window or shift.
pub fn user_ls_estimate(
    received: &[Complex64],
    pilots: &PilotSet,
    tau: usize,
    pilot_scale: f64,
) -> Vec<Complex64> {
    let norm = pilot_scale * pilots.column_energy();
    (0..tau)
        .map(|i| {
            let acc: Complex64 = received
                .iter()
                .zip(pilots.column(i))
                .map(|(y, s)| y * s)
                .sum();
            (acc / norm).conj()
        })
        .collect()
}

/// Simulate downlink training for every group of the assignment. Each
/// distinct signature in a group is transmitted once; all users listed in
/// the group receive the superposition and run the signature-free LS
/// estimator with their own noise.
pub fn downlink_train<R: Rng>(
    channels_dl: &[ChannelVector],
    assignment: &GroupAssignment,
    dl_signatures: &[SpatialSignature],
    pilots: &PilotSet,
    cfg: &DownlinkTrainingConfig,
    rng: &mut R,
) -> Result<Vec<FeedbackReport>> {
    if channels_dl.len() != dl_signatures.len() {
        return Err(Error::dimension(
            "one signature per channel required".to_string(),
        ));
    }
    if cfg.tau > pilots.count() {
        return Err(Error::dimension(format!(
            "tau {} exceeds {} pilot columns",
            cfg.tau,
            pilots.count()
        )));
    }
    let m = channels_dl[0].len();
    let l = pilots.len;
    let varpi = cfg.pilot_scale(pilots);
    let mut reports: Vec<Option<FeedbackReport>> = vec![None; channels_dl.len()];

    for group in &assignment.groups {
        // One transmission per distinct signature in the group.
        let mut distinct: Vec<SpatialSignature> = Vec::new();
        for &u in group {
            let s = dl_signatures[u];
            if !distinct
                .iter()
                .any(|d| d.start == s.start && d.len == s.len)
            {
                distinct.push(s);
            }
        }
        if distinct.iter().any(|d| d.len != cfg.tau) {
            return Err(Error::dimension(
                "downlink windows must have exactly tau bins".to_string(),
            ));
        }
        // X = Σ_c Φ(φ̄_c)^H [F^H]_{:, B̄_c} (ϖ S^H), an M x L block.
        let mut x = vec![vec![Complex64::new(0.0, 0.0); l]; m];
        for sig in &distinct {
            for (i, q) in sig.indices().enumerate() {
                let beam = rotated_beam(q, sig.shift, m);
                for t in 0..l {
                    let w = pilots.column(i)[t].conj() * varpi;
                    for (row, b) in x.iter_mut().zip(&beam) {
                        row[t] += b * w;
                    }
                }
            }
        }
        for &u in group {
            let g = &channels_dl[u];
            let mut y = vec![Complex64::new(0.0, 0.0); l];
            for (t, yt) in y.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (gm, row) in g.entries.iter().zip(&x) {
                    acc += gm.conj() * row[t];
                }
                *yt = acc + complex_gaussian(rng) * cfg.noise_power.sqrt();
            }
            let coefficients = user_ls_estimate(&y, pilots, cfg.tau, varpi);
            reports[u] = Some(FeedbackReport {
                user: u,
                coefficients,
            });
        }
    }
    reports
        .into_iter()
        .enumerate()
        .map(|(u, r)| r.ok_or_else(|| Error::config(format!("user {u} missing from assignment"))))
        .collect()
}

/// Rebuild the M-dimensional channel estimate from a feedback report:
/// zero-pad the coefficients onto the window and invert the rotated DFT.
pub fn reconstruct_downlink(
    report: &FeedbackReport,
    sig: &SpatialSignature,
) -> Result<ChannelVector> {
    if report.coefficients.len() != sig.len {
        return Err(Error::dimension(format!(
            "report has {} coefficients, window {}",
            report.coefficients.len(),
            sig.len
        )));
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); sig.num_beams];
    for (i, q) in sig.indices().enumerate() {
        entries[q] = report.coefficients[i];
    }
    from_beamspace(
        &BeamspaceVector {
            entries,
            shift: sig.shift,
        },
        LinkDirection::Downlink,
    )
}

/// The three downlink error terms: window truncation, self-interference from
/// the other signatures trained in the same group, and the noise expectation
/// `τ² σ_n² / P^dt`.
#[derive(Debug, Clone, Copy)]
pub struct DownlinkMse {
    pub truncation: f64,
    pub self_interference: f64,
    pub noise: f64,
}

impl DownlinkMse {
    pub fn total(&self) -> f64 {
        self.truncation + self.self_interference + self.noise
    }
}

/// Evaluate the decomposition for one user. `mates` are the other distinct
/// signatures of the group with their pilot-scale ratios `ϖ_l / ϖ_k`.
pub fn downlink_mse_decomposition(
    g: &ChannelVector,
    own: &SpatialSignature,
    mates: &[(SpatialSignature, f64)],
    cfg: &DownlinkTrainingConfig,
) -> Result<DownlinkMse> {
    let bs = to_beamspace(g, own.shift)?;
    let truncation: f64 = bs
        .entries
        .iter()
        .enumerate()
        .filter(|(q, _)| !own.contains(*q))
        .map(|(_, v)| v.norm_sqr())
        .sum();

    // Interference adds coherently in the τ-dimensional pilot domain.
    let mut leak = vec![Complex64::new(0.0, 0.0); own.len];
    for (sig, ratio) in mates {
        let mb = to_beamspace(g, sig.shift)?;
        for (i, q) in sig.indices().enumerate() {
            leak[i] += mb.entries[q] * *ratio;
        }
    }
    let self_interference: f64 = leak.iter().map(|v| v.norm_sqr()).sum();
    let noise = (own.len * own.len) as f64 * cfg.noise_power / cfg.train_energy;
    Ok(DownlinkMse {
        truncation,
        self_interference,
        noise,
    })
}
