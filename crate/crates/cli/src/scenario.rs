//! Scenario files and figure-reproduction presets.
//!
//! A scenario pins everything one experiment needs:
//!
//! - the network: tier list (intensity, power, backoff, sensing radius) and
//!   shared channel parameters
//! - the association policy and band-selection mode
//! - the user population: absolute per-band intensities, or a sweep over the
//!   user-to-AP intensity ratio relative to a reference tier
//! - simulation controls: trials, window radius (explicit or auto), root
//!   seed, guard quantile, contention rounds and probes per deployment
//! - the requested metrics
//!
//! Scenarios load from TOML files or from named presets. The presets encode
//! the reference configurations at desk scale: a four-tier network (one
//! 40 W macro tier that never contends for the unlicensed channel, two
//! small-cell tiers, one WiFi-like unlicensed-only tier) swept over user
//! intensity, plus a single-tier WiFi-only baseline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use coexsim_core::config::{
    AssociationMode, AssociationPolicy, ChannelParams, NetworkConfig, TierSpec,
    DEFAULT_GAIN_THRESHOLD, DEFAULT_PATHLOSS_EXPONENT, DEFAULT_SENSING_RADIUS,
    DEFAULT_SHADOWING_SIGMA_DB, DEFAULT_SIR_THRESHOLD,
};
use coexsim_core::geom::Boundary;
use coexsim_core::ppp::{choose_window_radius, count_floor_radius, Window};

use crate::error::CliError;
use crate::sweep::Metric;

// ======================================================================
// Defaults
// ======================================================================

/// Default number of Monte Carlo trials (independent deployments).
pub const DEFAULT_TRIALS: u64 = 100;
/// Default root seed.
pub const DEFAULT_SEED: u64 = 1;
/// Default per-user quantile of unclipped association cells at the window
/// boundary; sets the interior guard margin.
pub const DEFAULT_GUARD_QUANTILE: f64 = 0.999;
/// Default contention rounds per deployment.
pub const DEFAULT_ROUNDS: u32 = 32;
/// Default probe users per deployment.
pub const DEFAULT_PROBES: u32 = 32;
/// Default cap applied to SIR samples before the rate transform; keeps the
/// rare interference-free sample from dominating a mean rate.
pub const DEFAULT_SIR_CAP: f64 = 1e9;
/// Far-field truncation fraction used by the automatic window radius.
pub const WINDOW_FAR_FIELD_EPSILON: f64 = 0.01;

/// Names accepted by [`load_preset`], in documentation order.
pub const PRESET_NAMES: [&str; 9] = [
    "fig1",
    "fig3",
    "fig5a",
    "fig5b",
    "fig6a",
    "fig6b",
    "fig7a",
    "fig7b",
    "wifi-only-baseline",
];

// ======================================================================
// Scenario schema
// ======================================================================

/// Association band-selection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Licensed users associate over licensed tiers only; unlicensed users
    /// over the unlicensed tier only.
    Noncrossing,
    /// Every user associates over all tiers.
    Crossing,
}

impl Mode {
    pub fn to_core(self) -> AssociationMode {
        match self {
            Mode::Noncrossing => AssociationMode::NonCrossing,
            Mode::Crossing => AssociationMode::Crossing,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Noncrossing => "noncrossing",
            Mode::Crossing => "crossing",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noncrossing" => Ok(Mode::Noncrossing),
            "crossing" => Ok(Mode::Crossing),
            other => Err(format!(
                "unknown mode `{other}` (expected `noncrossing` or `crossing`)"
            )),
        }
    }
}

/// Association weight family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Shadowing-compensating mean-power association (weight = transmit
    /// power over the shadowing gain).
    #[default]
    Mmpa,
    /// Bias/power-only association (weight = transmit power, shadowing
    /// ignored).
    Bna,
}

/// Shared propagation and access-control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Path-loss exponent alpha (> 2).
    pub pathloss_exponent: f64,
    /// Shadowing standard deviation in dB (0 disables shadowing).
    pub shadowing_sigma_db: f64,
    /// Clear-channel gain threshold for opportunistic access.
    pub gain_threshold: f64,
    /// SIR threshold coverage metrics are evaluated at.
    pub sir_threshold: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            pathloss_exponent: DEFAULT_PATHLOSS_EXPONENT,
            shadowing_sigma_db: DEFAULT_SHADOWING_SIGMA_DB,
            gain_threshold: DEFAULT_GAIN_THRESHOLD,
            sir_threshold: DEFAULT_SIR_THRESHOLD,
        }
    }
}

impl ChannelSection {
    fn to_core(self) -> ChannelParams {
        ChannelParams {
            pathloss_exponent: self.pathloss_exponent,
            shadowing_sigma_db: self.shadowing_sigma_db,
            gain_threshold: self.gain_threshold,
            sir_threshold: self.sir_threshold,
        }
    }
}

/// One AP tier. Every tier but the last serves the licensed band and may
/// opportunistically contend for the unlicensed channel; the last tier is
/// unlicensed-only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierSection {
    /// AP intensity in points per square meter.
    pub intensity: f64,
    /// Transmit power in watts.
    pub power: f64,
    /// Maximum contention backoff; omit for a tier that never contends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_backoff: Option<f64>,
    /// Carrier-sensing radius in meters.
    #[serde(default = "default_sensing_radius")]
    pub sensing_radius: f64,
}

fn default_sensing_radius() -> f64 {
    DEFAULT_SENSING_RADIUS
}

/// Which user bands a sweep populates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Populate {
    /// Licensed and unlicensed user intensities both equal the swept value.
    #[default]
    BothBands,
    /// Only unlicensed users (licensed intensity zero); for unlicensed-only
    /// baselines.
    UnlicensedBand,
}

/// Sweep of the user-to-AP intensity ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Ratio grid (strictly increasing, positive). Each ratio multiplies the
    /// reference tier's AP intensity to give the per-band user intensity.
    pub ratios: Vec<f64>,
    /// 1-based index of the reference tier.
    pub reference_tier: usize,
    /// Which bands the swept users populate.
    #[serde(default)]
    pub populate: Populate,
}

/// User population: absolute per-band intensities or a ratio sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    /// Absolute licensed-band user intensity (with `unlicensed`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub licensed: Option<f64>,
    /// Absolute unlicensed-band user intensity (with `licensed`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlicensed: Option<f64>,
    /// Ratio sweep (mutually exclusive with the absolute intensities).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Independent deployments per sweep point (>= 1).
    pub trials: u64,
    /// Root seed; every stream derives from it deterministically.
    pub seed: u64,
    /// Half-side of the square observation window in meters; omit to size
    /// it automatically from the sparsest tier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<f64>,
    /// Per-user probability that a boundary guard margin keeps the
    /// association cell unclipped; larger quantiles widen the margin.
    pub guard_quantile: f64,
    /// Contention rounds per deployment (channel-access metrics).
    pub rounds: u32,
    /// Probe users per deployment (coverage and rate metrics).
    pub probes: u32,
    /// SIR cap applied before the rate transform.
    pub sir_cap: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            window_radius: None,
            guard_quantile: DEFAULT_GUARD_QUANTILE,
            rounds: DEFAULT_ROUNDS,
            probes: DEFAULT_PROBES,
            sir_cap: DEFAULT_SIR_CAP,
        }
    }
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Association band-selection mode.
    pub mode: Mode,
    /// Association weight family.
    #[serde(default)]
    pub policy: Policy,
    /// Metric names to report; see the metric vocabulary in
    /// [`crate::sweep::Metric`].
    pub metrics: Vec<String>,
    /// Shared channel parameters.
    #[serde(default)]
    pub channel: ChannelSection,
    /// Tier list; the last tier is unlicensed-only.
    pub tiers: Vec<TierSection>,
    /// User population.
    pub users: UserSection,
    /// Simulation controls.
    #[serde(default)]
    pub sim: SimSection,
}

// ======================================================================
// Sweep points and core-type conversion
// ======================================================================

/// One resolved sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Value written to the `sweep_value` column: the user-to-AP intensity
    /// ratio for sweeps, the total user intensity for absolute populations.
    pub value: f64,
    /// Licensed-band user intensity at this point.
    pub mu_licensed: f64,
    /// Unlicensed-band user intensity at this point.
    pub mu_unlicensed: f64,
}

impl Scenario {
    /// Validate everything the sweep engine relies on.
    pub fn validate(&self) -> Result<(), CliError> {
        let ch = &self.channel;
        if !(ch.pathloss_exponent > 2.0) || !ch.pathloss_exponent.is_finite() {
            return Err(CliError::config(format!(
                "path-loss exponent {} rejected: α > 2 required",
                ch.pathloss_exponent
            )));
        }
        if self.tiers.is_empty() {
            return Err(CliError::config("at least one tier is required"));
        }
        if self.tiers.last().unwrap().max_backoff.is_none() {
            return Err(CliError::config(
                "the last tier is unlicensed-only and must have a max_backoff",
            ));
        }

        let k = self.tiers.len();
        match (&self.users.licensed, &self.users.unlicensed, &self.users.sweep) {
            (Some(_), Some(_), None) => {}
            (None, None, Some(sweep)) => {
                if sweep.ratios.is_empty() {
                    return Err(CliError::config("sweep ratio grid must be non-empty"));
                }
                if sweep.ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return Err(CliError::config(
                        "sweep ratios must be positive and finite",
                    ));
                }
                if sweep.ratios.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::config(
                        "sweep ratios must be strictly increasing",
                    ));
                }
                if sweep.reference_tier == 0 || sweep.reference_tier > k {
                    return Err(CliError::config(format!(
                        "sweep reference tier {} out of range 1..={k}",
                        sweep.reference_tier
                    )));
                }
            }
            _ => {
                return Err(CliError::config(
                    "users: give both absolute intensities (licensed, unlicensed) \
                     or a sweep, not a mixture",
                ));
            }
        }

        if self.sim.trials < 1 {
            return Err(CliError::config("trials must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.sim.guard_quantile) {
            return Err(CliError::config("guard quantile must lie in [0, 1)"));
        }
        if let Some(r) = self.sim.window_radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(CliError::config(
                    "window radius must be positive and finite",
                ));
            }
        }
        if !(self.sim.sir_cap > 0.0) {
            return Err(CliError::config("the SIR cap must be positive"));
        }

        if self.metrics.is_empty() {
            return Err(CliError::config("at least one metric is required"));
        }
        let mut seen: Vec<&str> = Vec::new();
        for name in &self.metrics {
            let metric = Metric::parse(name)
                .ok_or_else(|| CliError::config(format!("unknown metric `{name}`")))?;
            if seen.contains(&name.as_str()) {
                return Err(CliError::config(format!("metric `{name}` listed twice")));
            }
            seen.push(name);
            match metric {
                Metric::VoidTier(t) | Metric::AccessTier(t) => {
                    if t >= k {
                        return Err(CliError::config(format!(
                            "metric `{name}`: tier {} out of range 1..={k}",
                            t + 1
                        )));
                    }
                    if matches!(metric, Metric::AccessTier(_))
                        && self.tiers[t].max_backoff.is_none()
                    {
                        return Err(CliError::config(format!(
                            "metric `{name}`: tier {} never contends",
                            t + 1
                        )));
                    }
                }
                Metric::CovLLicensed | Metric::CovLUnlicensed | Metric::SeL => {
                    if k < 2 {
                        return Err(CliError::config(format!(
                            "metric `{name}` needs a licensed tier"
                        )));
                    }
                }
                _ => {}
            }
            if metric.needs_probes() && (self.sim.probes < 1 || self.sim.rounds < 1) {
                return Err(CliError::config(format!(
                    "metric `{name}` needs probes >= 1 and rounds >= 1"
                )));
            }
            if metric.needs_access_rounds() && self.sim.rounds < 1 {
                return Err(CliError::config(format!(
                    "metric `{name}` needs rounds >= 1"
                )));
            }
        }

        // The core validation catches everything else (backoff ordering,
        // positivity, the dual-band/unlicensed-only layout).
        self.network_at(&self.sweep_points()[0])
            .validate()
            .map_err(CliError::from)?;
        Ok(())
    }

    /// Resolved sweep points, in grid order.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        match &self.users.sweep {
            Some(sweep) => {
                let lam_ref = self.tiers[sweep.reference_tier - 1].intensity;
                sweep
                    .ratios
                    .iter()
                    .map(|&r| {
                        let mu = r * lam_ref;
                        let (mu_l, mu_u) = match sweep.populate {
                            Populate::BothBands => (mu, mu),
                            Populate::UnlicensedBand => (0.0, mu),
                        };
                        SweepPoint {
                            value: r,
                            mu_licensed: mu_l,
                            mu_unlicensed: mu_u,
                        }
                    })
                    .collect()
            }
            None => {
                let mu_l = self.users.licensed.unwrap_or(0.0);
                let mu_u = self.users.unlicensed.unwrap_or(0.0);
                vec![SweepPoint {
                    value: mu_l + mu_u,
                    mu_licensed: mu_l,
                    mu_unlicensed: mu_u,
                }]
            }
        }
    }

    /// The network configuration at one sweep point.
    pub fn network_at(&self, point: &SweepPoint) -> NetworkConfig {
        let k = self.tiers.len();
        let tiers = self
            .tiers
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut spec = if i == k - 1 {
                    TierSpec::unlicensed_only(
                        t.intensity,
                        t.power,
                        t.max_backoff.unwrap_or(f64::INFINITY),
                    )
                } else {
                    TierSpec::dual_band(t.intensity, t.power, t.max_backoff)
                };
                spec.sensing_radius = t.sensing_radius;
                spec
            })
            .collect();
        NetworkConfig {
            tiers,
            channel: self.channel.to_core(),
            user_intensity_licensed: point.mu_licensed,
            user_intensity_unlicensed: point.mu_unlicensed,
        }
    }

    /// The association policy.
    pub fn policy(&self) -> AssociationPolicy {
        match self.policy {
            Policy::Mmpa => AssociationPolicy::shadow_compensating(self.mode.to_core()),
            Policy::Bna => {
                // Power-only weights; built from any sweep point since the
                // weights do not depend on user intensities.
                let network = self.network_at(&self.sweep_points()[0]);
                AssociationPolicy::power_weighted(&network, self.mode.to_core())
            }
        }
    }

    /// Observation window: the configured radius, or a floor that keeps
    /// about 20 APs of the sparsest tier in view and clears the far-field
    /// truncation radius.
    pub fn window(&self) -> Window {
        let radius = self.sim.window_radius.unwrap_or_else(|| {
            let min_intensity = self
                .tiers
                .iter()
                .map(|t| t.intensity)
                .fold(f64::INFINITY, f64::min);
            count_floor_radius(min_intensity).max(choose_window_radius(
                self.channel.pathloss_exponent,
                WINDOW_FAR_FIELD_EPSILON,
            ))
        });
        Window::new(radius, Boundary::Open)
    }

    /// Parsed metric list (call after [`Scenario::validate`]).
    pub fn parsed_metrics(&self) -> Vec<Metric> {
        self.metrics
            .iter()
            .filter_map(|name| Metric::parse(name))
            .collect()
    }
}

// ======================================================================
// Loading
// ======================================================================

/// Parse a scenario from TOML text.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = toml::from_str(text)
        .map_err(|e| CliError::config(format!("scenario parse error: {e}")))?;
    scenario.validate()?;
    Ok(scenario)
}

/// Load and validate a scenario from a TOML file.
pub fn load_scenario_file(path: &std::path::Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
        .map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
}

/// Load a named preset.
pub fn load_preset(name: &str) -> Result<Scenario, CliError> {
    let scenario = preset(name).ok_or_else(|| {
        CliError::config(format!(
            "unknown preset `{name}` (expected one of: {})",
            PRESET_NAMES.join(", ")
        ))
    })?;
    scenario.validate()?;
    Ok(scenario)
}

// ======================================================================
// Presets
// ======================================================================

/// The four reference tiers: a 40 W macro tier that never contends for the
/// unlicensed channel, two small-cell tiers with 2 s backoff windows, and a
/// dense unlicensed-only tier with the shortest backoff window.
fn reference_tiers() -> Vec<TierSection> {
    vec![
        TierSection {
            intensity: 1e-6,
            power: 40.0,
            max_backoff: None,
            sensing_radius: DEFAULT_SENSING_RADIUS,
        },
        TierSection {
            intensity: 1e-5,
            power: 1.0,
            max_backoff: Some(2.0),
            sensing_radius: DEFAULT_SENSING_RADIUS,
        },
        TierSection {
            intensity: 5e-5,
            power: 0.5,
            max_backoff: Some(2.0),
            sensing_radius: DEFAULT_SENSING_RADIUS,
        },
        TierSection {
            intensity: 1e-4,
            power: 0.2,
            max_backoff: Some(1.0),
            sensing_radius: DEFAULT_SENSING_RADIUS,
        },
    ]
}

/// Sweep over the user-to-tier-1-AP intensity ratio, both bands populated.
fn reference_sweep(ratios: Vec<f64>) -> UserSection {
    UserSection {
        licensed: None,
        unlicensed: None,
        sweep: Some(SweepSection {
            ratios,
            reference_tier: 1,
            populate: Populate::BothBands,
        }),
    }
}

fn preset(name: &str) -> Option<Scenario> {
    // Wide ratio grid for the void/access sweeps; the coverage and capacity
    // sweeps use a decade grid. Values are exact powers of ten so reruns
    // format identically.
    let wide: Vec<f64> = vec![10f64.powf(0.5), 10f64.powf(1.5), 10f64.powf(2.5)];
    let decade: Vec<f64> = vec![10.0, 100.0, 1000.0];

    let coverage_sim = |seed: u64| SimSection {
        trials: 160,
        seed,
        window_radius: None,
        guard_quantile: DEFAULT_GUARD_QUANTILE,
        rounds: 48,
        probes: 48,
        sir_cap: DEFAULT_SIR_CAP,
    };

    let scenario = match name {
        "fig1" => Scenario {
            mode: Mode::Noncrossing,
            policy: Policy::Mmpa,
            metrics: (1..=4).map(|k| format!("void_tier_{k}")).collect(),
            channel: ChannelSection::default(),
            tiers: reference_tiers(),
            users: reference_sweep(wide),
            sim: SimSection {
                trials: 250,
                seed: 101,
                ..SimSection::default()
            },
        },
        "fig3" => Scenario {
            mode: Mode::Noncrossing,
            policy: Policy::Mmpa,
            metrics: (2..=4).map(|k| format!("access_tier_{k}")).collect(),
            channel: ChannelSection::default(),
            tiers: reference_tiers(),
            users: reference_sweep(wide),
            sim: SimSection {
                trials: 240,
                seed: 103,
                rounds: 32,
                ..SimSection::default()
            },
        },
        "fig5a" | "fig5b" => Scenario {
            mode: if name == "fig5a" {
                Mode::Noncrossing
            } else {
                Mode::Crossing
            },
            policy: Policy::Mmpa,
            metrics: vec![
                "cov_l_licensed".into(),
                "cov_l_unlicensed".into(),
                "cov_u".into(),
                "cov_coexisting".into(),
            ],
            channel: ChannelSection::default(),
            tiers: reference_tiers(),
            users: reference_sweep(decade),
            // Shared seed: the noncrossing and crossing runs see identical
            // deployments, probes, and rounds, so mode comparisons pair up.
            sim: coverage_sim(105),
        },
        "fig6a" | "fig6b" => Scenario {
            mode: if name == "fig6a" {
                Mode::Noncrossing
            } else {
                Mode::Crossing
            },
            policy: Policy::Mmpa,
            metrics: vec!["se_l".into(), "se_u".into()],
            channel: ChannelSection::default(),
            tiers: reference_tiers(),
            users: reference_sweep(decade),
            sim: coverage_sim(107),
        },
        "fig7a" | "fig7b" => Scenario {
            mode: if name == "fig7a" {
                Mode::Noncrossing
            } else {
                Mode::Crossing
            },
            policy: Policy::Mmpa,
            metrics: vec!["netcap".into()],
            channel: ChannelSection::default(),
            tiers: reference_tiers(),
            users: reference_sweep(decade),
            sim: coverage_sim(109),
        },
        // Same WiFi tier and same unlicensed user intensities as the
        // coverage/capacity sweeps (ratios rescaled to this tier's AP
        // intensity), with the licensed tiers removed.
        "wifi-only-baseline" => Scenario {
            mode: Mode::Noncrossing,
            policy: Policy::Mmpa,
            metrics: vec!["cov_u".into(), "se_u".into(), "netcap".into()],
            channel: ChannelSection::default(),
            tiers: vec![TierSection {
                intensity: 1e-4,
                power: 0.2,
                max_backoff: Some(1.0),
                sensing_radius: DEFAULT_SENSING_RADIUS,
            }],
            users: UserSection {
                licensed: None,
                unlicensed: None,
                sweep: Some(SweepSection {
                    ratios: vec![0.1, 1.0, 10.0],
                    reference_tier: 1,
                    populate: Populate::UnlicensedBand,
                }),
            },
            sim: coverage_sim(111),
        },
        _ => return None,
    };
    Some(scenario)
}

// ======================================================================
// Tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn every_preset_loads_and_validates() {
        for name in PRESET_NAMES {
            let s = load_preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!s.metrics.is_empty(), "{name} has metrics");
        }
    }

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESET_NAMES {
            let s = load_preset(name).unwrap();
            let text = toml::to_string_pretty(&s).unwrap();
            let back: Scenario = toml::from_str(&text).unwrap();
            assert_eq!(back, s, "{name} round-trips");
        }
    }

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let text = r#"
            mode = "noncrossing"
            metrics = ["void_tier_1"]

            [[tiers]]
            intensity = 1e-4
            power = 1.0
            max_backoff = 2.0

            [[tiers]]
            intensity = 1e-4
            power = 0.2
            max_backoff = 1.0

            [users]
            licensed = 1e-4
            unlicensed = 1e-4
        "#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.channel.pathloss_exponent, DEFAULT_PATHLOSS_EXPONENT);
        assert_eq!(s.sim.trials, DEFAULT_TRIALS);
        assert_eq!(s.policy, Policy::Mmpa);
        assert_eq!(s.tiers[0].sensing_radius, DEFAULT_SENSING_RADIUS);
        let points = s.sweep_points();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].value, 2e-4);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"
            mode = "noncrossing"
            metrics = ["void_tier_1"]
            surprise = 1

            [[tiers]]
            intensity = 1e-4
            power = 1.0
            max_backoff = 1.0

            [users]
            licensed = 1e-4
            unlicensed = 1e-4
        "#;
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "got {err:?}");
    }

    #[test]
    fn low_pathloss_exponent_is_rejected_with_the_contract_phrase() {
        let mut s = load_preset("fig1").unwrap();
        s.channel.pathloss_exponent = 2.0;
        let err = s.validate().unwrap_err();
        assert!(
            err.to_string().contains("α > 2 required"),
            "message was: {err}"
        );
    }

    #[test]
    fn sweep_grid_must_increase() {
        let mut s = load_preset("fig1").unwrap();
        s.users.sweep.as_mut().unwrap().ratios = vec![10.0, 10.0];
        assert!(s.validate().is_err());
        s.users.sweep.as_mut().unwrap().ratios = vec![10.0, 5.0];
        assert!(s.validate().is_err());
        s.users.sweep.as_mut().unwrap().ratios = vec![];
        assert!(s.validate().is_err());
    }

    #[test]
    fn user_section_must_be_exactly_one_shape() {
        let mut s = load_preset("fig1").unwrap();
        s.users.licensed = Some(1e-4);
        assert!(s.validate().is_err(), "sweep plus absolute rejected");
        s.users.licensed = None;
        s.users.sweep = None;
        assert!(s.validate().is_err(), "empty users rejected");
    }

    #[test]
    fn metric_names_are_validated() {
        let mut s = load_preset("fig1").unwrap();
        s.metrics = vec!["void_tier_9".into()];
        assert!(s.validate().is_err(), "tier out of range");
        s.metrics = vec!["access_tier_1".into()];
        assert!(s.validate().is_err(), "tier 1 never contends");
        s.metrics = vec!["does_not_exist".into()];
        assert!(s.validate().is_err(), "unknown name");
        s.metrics = vec!["void_tier_1".into(), "void_tier_1".into()];
        assert!(s.validate().is_err(), "duplicates");
    }

    #[test]
    fn sweep_points_scale_the_reference_tier() {
        let s = load_preset("fig5a").unwrap();
        let points = s.sweep_points();
        assert_eq!(points.len(), 3);
        assert_eq!(points[0].value, 10.0);
        assert_relative_eq!(points[0].mu_licensed, 1e-5, max_relative = 1e-12);
        assert_relative_eq!(points[0].mu_unlicensed, 1e-5, max_relative = 1e-12);
        assert_relative_eq!(points[2].mu_licensed, 1e-3, max_relative = 1e-12);

        let b = load_preset("wifi-only-baseline").unwrap();
        let points = b.sweep_points();
        assert_eq!(points[0].mu_licensed, 0.0);
        assert_relative_eq!(points[0].mu_unlicensed, 1e-5, max_relative = 1e-12);
        assert_relative_eq!(points[2].mu_unlicensed, 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn auto_window_covers_the_sparsest_tier() {
        let s = load_preset("fig1").unwrap();
        let w = s.window();
        let expect = count_floor_radius(1e-6);
        assert!((w.radius - expect).abs() < 1e-9, "radius {}", w.radius);
    }
}
