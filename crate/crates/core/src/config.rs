//! Network, channel, and experiment configuration.
//!
//! A network is a list of AP tiers over a shared unlicensed band. Tiers
//! before the last are dual-band (licensed downlink plus opportunistic
//! unlicensed access); the last tier is unlicensed-only (WiFi-like). The
//! degenerate single-tier network (unlicensed-only, no licensed tiers) is
//! valid and exercised by the baseline scenarios.

use crate::error::{Error, Result};
use crate::quad::sigma_db_to_ln;

// ======================================================================
// Defaults
// ======================================================================

/// Default path-loss exponent.
pub const DEFAULT_PATHLOSS_EXPONENT: f64 = 4.0;
/// Default shadowing standard deviation in dB.
pub const DEFAULT_SHADOWING_SIGMA_DB: f64 = 1.732_050_807_568_877_2; // sqrt(3)
/// Default clear-channel gain threshold for opportunistic access.
pub const DEFAULT_GAIN_THRESHOLD: f64 = 4.481;
/// Default SIR decoding threshold.
pub const DEFAULT_SIR_THRESHOLD: f64 = 0.5;
/// Default carrier-sensing radius in meters.
pub const DEFAULT_SENSING_RADIUS: f64 = 30.0;

// ======================================================================
// Tiers
// ======================================================================

/// Radio access technology of a tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rat {
    /// Dual-band: licensed downlink plus opportunistic unlicensed access.
    DualBand,
    /// Unlicensed-only (WiFi-like); always the last tier.
    UnlicensedOnly,
}

/// One AP tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierSpec {
    /// AP intensity in points per square meter (> 0).
    pub intensity: f64,
    /// Transmit power in watts (> 0); sets the association weight scale.
    pub power: f64,
    /// Maximum contention backoff. `None` means the tier never contends for
    /// the unlicensed channel (its backoff is effectively infinite).
    pub max_backoff: Option<f64>,
    /// Carrier-sensing radius in meters for this tier's APs.
    pub sensing_radius: f64,
    /// Radio access technology.
    pub rat: Rat,
}

impl TierSpec {
    /// A dual-band tier with the default sensing radius.
    pub fn dual_band(intensity: f64, power: f64, max_backoff: Option<f64>) -> Self {
        TierSpec {
            intensity,
            power,
            max_backoff,
            sensing_radius: DEFAULT_SENSING_RADIUS,
            rat: Rat::DualBand,
        }
    }

    /// An unlicensed-only tier with the default sensing radius.
    pub fn unlicensed_only(intensity: f64, power: f64, max_backoff: f64) -> Self {
        TierSpec {
            intensity,
            power,
            max_backoff: Some(max_backoff),
            sensing_radius: DEFAULT_SENSING_RADIUS,
            rat: Rat::UnlicensedOnly,
        }
    }

    /// Whether this tier ever contends for the unlicensed channel.
    pub fn contends(&self) -> bool {
        self.max_backoff.is_some()
    }
}

// ======================================================================
// Channel
// ======================================================================

/// Propagation and access-control parameters shared by every tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Path-loss exponent alpha (> 2).
    pub pathloss_exponent: f64,
    /// Shadowing standard deviation in dB (>= 0; 0 disables shadowing).
    pub shadowing_sigma_db: f64,
    /// Clear-channel gain threshold: an AP contends only when its own-link
    /// composite gain H/G exceeds this value.
    pub gain_threshold: f64,
    /// SIR threshold used by coverage metrics.
    pub sir_threshold: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            pathloss_exponent: DEFAULT_PATHLOSS_EXPONENT,
            shadowing_sigma_db: DEFAULT_SHADOWING_SIGMA_DB,
            gain_threshold: DEFAULT_GAIN_THRESHOLD,
            sir_threshold: DEFAULT_SIR_THRESHOLD,
        }
    }
}

impl ChannelParams {
    /// Shadowing standard deviation in the natural-log domain.
    pub fn sigma_ln(&self) -> f64 {
        sigma_db_to_ln(self.shadowing_sigma_db)
    }

    /// 2 / alpha, the exponent that shows up in every stable-distribution
    /// style expectation.
    pub fn two_over_alpha(&self) -> f64 {
        2.0 / self.pathloss_exponent
    }
}

// ======================================================================
// Network
// ======================================================================

/// A K-tier network: tiers 0..K-2 dual-band, tier K-1 unlicensed-only.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub tiers: Vec<TierSpec>,
    pub channel: ChannelParams,
    /// User intensity on the licensed band (users per square meter).
    pub user_intensity_licensed: f64,
    /// User intensity on the unlicensed band.
    pub user_intensity_unlicensed: f64,
}

impl NetworkConfig {
    /// Validate every structural constraint; call before any experiment.
    pub fn validate(&self) -> Result<()> {
        if self.tiers.is_empty() {
            return Err(Error::config("at least one tier is required"));
        }
        let k = self.tiers.len();
        for (i, t) in self.tiers.iter().enumerate() {
            if !(t.intensity > 0.0) || !t.intensity.is_finite() {
                return Err(Error::config(format!(
                    "tier {i}: intensity must be positive and finite"
                )));
            }
            if !(t.power > 0.0) || !t.power.is_finite() {
                return Err(Error::config(format!(
                    "tier {i}: power must be positive and finite"
                )));
            }
            if let Some(tau) = t.max_backoff {
                if !(tau > 0.0) || !tau.is_finite() {
                    return Err(Error::config(format!(
                        "tier {i}: max backoff must be positive and finite (omit it for a non-contending tier)"
                    )));
                }
            }
            if !(t.sensing_radius > 0.0) || !t.sensing_radius.is_finite() {
                return Err(Error::config(format!(
                    "tier {i}: sensing radius must be positive and finite"
                )));
            }
            let expect_unlicensed = i == k - 1;
            match (t.rat, expect_unlicensed) {
                (Rat::UnlicensedOnly, true) | (Rat::DualBand, false) => {}
                (Rat::UnlicensedOnly, false) => {
                    return Err(Error::config(format!(
                        "tier {i}: only the last tier may be unlicensed-only"
                    )));
                }
                (Rat::DualBand, true) => {
                    return Err(Error::config(
                        "the last tier must be unlicensed-only",
                    ));
                }
            }
        }
        if self.tiers[k - 1].max_backoff.is_none() {
            return Err(Error::config(
                "the unlicensed-only tier must contend (it has no licensed fallback)",
            ));
        }
        // contention priority: among contending tiers, max backoff must be
        // non-increasing from the first tier to the last (the unlicensed-only
        // tier has the shortest backoff window)
        let mut prev = f64::INFINITY;
        for (i, t) in self.tiers.iter().enumerate() {
            if let Some(tau) = t.max_backoff {
                if tau > prev {
                    return Err(Error::config(format!(
                        "tier {i}: max backoff must not exceed an earlier contending tier's"
                    )));
                }
                prev = tau;
            }
        }
        let ch = &self.channel;
        if !(ch.pathloss_exponent > 2.0) || !ch.pathloss_exponent.is_finite() {
            return Err(Error::config("path-loss exponent must exceed 2"));
        }
        if !(ch.shadowing_sigma_db >= 0.0) || !ch.shadowing_sigma_db.is_finite() {
            return Err(Error::config("shadowing sigma must be >= 0 dB"));
        }
        if !(ch.gain_threshold > 0.0) || !ch.gain_threshold.is_finite() {
            return Err(Error::config("gain threshold must be positive"));
        }
        if !(ch.sir_threshold > 0.0) || !ch.sir_threshold.is_finite() {
            return Err(Error::config("SIR threshold must be positive"));
        }
        for (name, v) in [
            ("licensed", self.user_intensity_licensed),
            ("unlicensed", self.user_intensity_unlicensed),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!(
                    "{name} user intensity must be >= 0 and finite"
                )));
            }
        }
        Ok(())
    }

    /// Number of tiers K.
    pub fn num_tiers(&self) -> usize {
        self.tiers.len()
    }

    /// Index of the unlicensed-only tier (always the last).
    pub fn unlicensed_tier(&self) -> usize {
        self.tiers.len() - 1
    }

    /// Indices of the dual-band (licensed) tiers.
    pub fn licensed_tiers(&self) -> std::ops::Range<usize> {
        0..self.tiers.len() - 1
    }

    /// True when there are no licensed tiers at all.
    pub fn is_unlicensed_only_network(&self) -> bool {
        self.tiers.len() == 1
    }
}

// ======================================================================
// Association policy
// ======================================================================

/// How association weights are formed.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// Constant per-tier weights (biased nearest-AP association). The
    /// natural default sets each weight to the tier transmit power.
    PerTier(Vec<f64>),
    /// Weight each AP by tier power divided by its own shadowing gain, so
    /// users compensate the shadowing they would experience toward it.
    PowerOverShadow,
}

/// Whether users on one band may associate with APs serving the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationMode {
    /// Licensed-band users pick among dual-band tiers only; unlicensed-band
    /// users pick the unlicensed-only tier.
    NonCrossing,
    /// Every user picks the best AP across all tiers regardless of band.
    Crossing,
}

/// Association policy: weight scheme plus crossing mode.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationPolicy {
    pub scheme: WeightScheme,
    pub mode: AssociationMode,
}

impl AssociationPolicy {
    /// Power-compensating-shadowing weights, non-crossing.
    pub fn shadow_compensating(mode: AssociationMode) -> Self {
        AssociationPolicy { scheme: WeightScheme::PowerOverShadow, mode }
    }

    /// Per-tier power weights (no shadowing compensation).
    pub fn power_weighted(network: &NetworkConfig, mode: AssociationMode) -> Self {
        AssociationPolicy {
            scheme: WeightScheme::PerTier(
                network.tiers.iter().map(|t| t.power).collect(),
            ),
            mode,
        }
    }

    pub fn validate(&self, network: &NetworkConfig) -> Result<()> {
        if let WeightScheme::PerTier(w) = &self.scheme {
            if w.len() != network.tiers.len() {
                return Err(Error::config(format!(
                    "association weights: expected {} entries, got {}",
                    network.tiers.len(),
                    w.len()
                )));
            }
            if w.iter().any(|x| !(x > &0.0) || !x.is_finite()) {
                return Err(Error::config("association weights must be positive"));
            }
        }
        Ok(())
    }
}

// ======================================================================
// Tests
// ======================================================================
