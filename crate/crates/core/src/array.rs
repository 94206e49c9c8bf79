//! ULA steering vectors and one-ring multipath channel synthesis.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_PI_2, PI};

/// Which carrier a vector lives on. Uplink and downlink may use different
/// wavelengths (FDD); the spacing-over-wavelength ratio is stored per link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    Uplink,
    Downlink,
}

/// Base-station array geometry.
#[derive(Debug, Clone, Copy)]
pub struct ArrayConfig {
    /// Number of ULA elements M.
    pub num_antennas: usize,
    /// d / λ₁ for the uplink carrier.
    pub spacing_over_wavelength_ul: f64,
    /// d / λ₂ for the downlink carrier.
    pub spacing_over_wavelength_dl: f64,
}

impl ArrayConfig {
    pub fn new(num_antennas: usize, ul: f64, dl: f64) -> Result<Self> {
        if num_antennas < 2 {
            return Err(Error::config("array needs at least 2 antennas"));
        }
        for (name, v) in [("uplink", ul), ("downlink", dl)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!(
                    "{name} spacing ratio {v} outside (0, 1]"
                )));
            }
        }
        Ok(Self {
            num_antennas,
            spacing_over_wavelength_ul: ul,
            spacing_over_wavelength_dl: dl,
        })
    }

    /// Half-wavelength spacing on both carriers.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, 0.5, 0.5)
    }

    pub fn spacing(&self, link: LinkDirection) -> f64 {
        match link {
            LinkDirection::Uplink => self.spacing_over_wavelength_ul,
            LinkDirection::Downlink => self.spacing_over_wavelength_dl,
        }
    }

    /// λ₁ / λ₂ expressed through the stored spacing ratios.
    pub fn carrier_ratio(&self) -> f64 {
        self.spacing_over_wavelength_dl / self.spacing_over_wavelength_ul
    }
}

/// Narrow angular-spread user: rays arrive uniformly inside
/// `[mean_doa - angular_spread, mean_doa + angular_spread]`.
#[derive(Debug, Clone, Copy)]
pub struct UserProfile {
    /// Mean direction of arrival, radians.
    pub mean_doa: f64,
    /// Angular spread (half-width of the ray range), radians.
    pub angular_spread: f64,
    /// Number of rays P.
    pub num_rays: usize,
}

impl UserProfile {
    pub fn new(mean_doa: f64, angular_spread: f64, num_rays: usize) -> Result<Self> {
        if num_rays == 0 {
            return Err(Error::config("profile needs at least one ray"));
        }
        if !(angular_spread >= 0.0) {
            return Err(Error::config("angular spread must be >= 0"));
        }
        if mean_doa - angular_spread <= -FRAC_PI_2 || mean_doa + angular_spread >= FRAC_PI_2 {
            return Err(Error::config(format!(
                "ray range {:.4} +/- {:.4} rad leaves (-pi/2, pi/2)",
                mean_doa, angular_spread
            )));
        }
        Ok(Self {
            mean_doa,
            angular_spread,
            num_rays,
        })
    }
}

/// Complex M-vector channel realization of one user (uplink h or downlink g).
#[derive(Debug, Clone)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
    pub link: LinkDirection,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Squared distance to another vector of the same length.
    pub fn dist_sqr(&self, other: &ChannelVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }
}

/// Array manifold vector: entry m is `exp(j 2π (d/λ) m sin(angle))`.
pub fn steering_vector(cfg: &ArrayConfig, angle: f64, link: LinkDirection) -> Result<ChannelVector> {
    if !(angle > -FRAC_PI_2 && angle < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "steering angle {angle} outside (-pi/2, pi/2)"
        )));
    }
    let step = 2.0 * PI * cfg.spacing(link) * angle.sin();
    let entries = (0..cfg.num_antennas)
        .map(|m| Complex64::from_polar(1.0, step * m as f64))
        .collect();
    Ok(ChannelVector { entries, link })
}

/// Ray directions sampled once per user; uplink and downlink channels of the
/// same user share these angles (angle reciprocity) while their complex gains
/// are drawn independently per link.
#[derive(Debug, Clone)]
pub struct RayGeometry {
    pub angles: Vec<f64>,
}

pub fn sample_rays<R: Rng>(profile: &UserProfile, rng: &mut R) -> RayGeometry {
    let angles = (0..profile.num_rays)
        .map(|_| {
            let u: f64 = rng.random();
            profile.mean_doa + profile.angular_spread * (2.0 * u - 1.0)
        })
        .collect();
    RayGeometry { angles }
}

/// Standard circular complex Gaussian CN(0, 1).
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel for fixed ray angles with fresh unit-variance gains:
/// `(1/sqrt(P)) Σ_p α_p a(θ_p)`.
pub fn channel_from_rays<R: Rng>(
    cfg: &ArrayConfig,
    rays: &RayGeometry,
    rng: &mut R,
    link: LinkDirection,
) -> Result<ChannelVector> {
    let m = cfg.num_antennas;
    let mut entries = vec![Complex64::new(0.0, 0.0); m];
    for &theta in &rays.angles {
        let alpha = complex_gaussian(rng);
        let a = steering_vector(cfg, theta, link)?;
        for (e, s) in entries.iter_mut().zip(&a.entries) {
            *e += alpha * s;
        }
    }
    let scale = 1.0 / (rays.angles.len() as f64).sqrt();
    for e in entries.iter_mut() {
        *e *= scale;
    }
    Ok(ChannelVector { entries, link })
}

/// One-ring multipath realization: rays uniform in the profile's angular
/// range, i.i.d. CN(0,1) gains.
pub fn generate_channel<R: Rng>(
    cfg: &ArrayConfig,
    profile: &UserProfile,
    rng: &mut R,
    link: LinkDirection,
) -> Result<ChannelVector> {
    let rays = sample_rays(profile, rng);
    channel_from_rays(cfg, &rays, rng, link)
}
