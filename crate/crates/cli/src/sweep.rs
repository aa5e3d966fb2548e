//! Sweep orchestration: Monte Carlo estimates side by side with their
//! analytic counterparts.
//!
//! For every sweep point the engine
//!
//! - evaluates the requested analytic quantities once (void and access
//!   probabilities, coverage lower bounds with their saturation limits,
//!   capacity bounds), and
//! - runs the configured number of Monte Carlo trials in parallel, each on
//!   its own seed-derived streams, merging per-trial tallies in trial order
//!   so results are byte-identical across worker counts.
//!
//! Failures are contained per sweep point: a point whose simulation or
//! analytic evaluation fails still emits one row per metric, with the failed
//! half's fields left empty (and, for a failed simulation, a zero sample
//! count); the error text is reported alongside the rows.

use rayon::prelude::*;

use coexsim_core::analytic::{
    access_probabilities, capacity_bounds, coverage_bounds, AccessProbabilities, BoundSet,
    CapacityBounds,
};
use coexsim_core::assoc::{
    associate, eligibility, guard_distance, void_probability_from_stats, AssocStats, UserBand,
};
use coexsim_core::config::{AssociationPolicy, NetworkConfig};
use coexsim_core::csma::{draw_round, estimate_mean_areas, resolve, MeanAreaTable};
use coexsim_core::ppp::{sample_deployment, Window};
use coexsim_core::quad::QuadratureSettings;
use coexsim_core::rng::{stream, Purpose};
use coexsim_core::sir::{
    access_fractions, estimate_coexisting_coverage, estimate_coverage, estimate_network_capacity,
    estimate_spectrum_efficiency, run_probes, CapacityInputs, ProbeBatch, ProbeSettings,
};
use coexsim_core::stats::{binomial_estimate, Estimate};
use coexsim_core::Error as CoreError;

use crate::error::CliError;
use crate::scenario::Scenario;

/// Salt distinguishing the channel-access round stream from the probe
/// engine's contention stream, so requesting access metrics never perturbs
/// coverage samples drawn from the same root seed.
const ACCESS_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

// ======================================================================
// Metrics
// ======================================================================

/// Reportable quantities. Tier-indexed names are 1-based: `void_tier_1` is
/// the first configured tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Void probability of tier k (0-based here, 1-based in the name).
    VoidTier(usize),
    /// Channel-access probability of tier k.
    AccessTier(usize),
    /// Licensed-band link coverage of licensed-band users.
    CovLLicensed,
    /// Opportunistic unlicensed coverage of licensed-band users.
    CovLUnlicensed,
    /// Unlicensed-band link coverage of unlicensed users.
    CovU,
    /// Association-share weighted network-wide coverage.
    CovCoexisting,
    /// Mean spectrum efficiency of a licensed-band user (both channels).
    SeL,
    /// Mean spectrum efficiency of an unlicensed user.
    SeU,
    /// Coexisting network capacity per unit area.
    NetCap,
}

impl Metric {
    /// Parse a metric name; `None` when unknown.
    pub fn parse(name: &str) -> Option<Metric> {
        if let Some(rest) = name.strip_prefix("void_tier_") {
            let tier: usize = rest.parse().ok().filter(|&t| t >= 1)?;
            return Some(Metric::VoidTier(tier - 1));
        }
        if let Some(rest) = name.strip_prefix("access_tier_") {
            let tier: usize = rest.parse().ok().filter(|&t| t >= 1)?;
            return Some(Metric::AccessTier(tier - 1));
        }
        match name {
            "cov_l_licensed" => Some(Metric::CovLLicensed),
            "cov_l_unlicensed" => Some(Metric::CovLUnlicensed),
            "cov_u" => Some(Metric::CovU),
            "cov_coexisting" => Some(Metric::CovCoexisting),
            "se_l" => Some(Metric::SeL),
            "se_u" => Some(Metric::SeU),
            "netcap" => Some(Metric::NetCap),
            _ => None,
        }
    }

    /// Canonical name, inverse of [`Metric::parse`].
    pub fn name(&self) -> String {
        match self {
            Metric::VoidTier(t) => format!("void_tier_{}", t + 1),
            Metric::AccessTier(t) => format!("access_tier_{}", t + 1),
            Metric::CovLLicensed => "cov_l_licensed".into(),
            Metric::CovLUnlicensed => "cov_l_unlicensed".into(),
            Metric::CovU => "cov_u".into(),
            Metric::CovCoexisting => "cov_coexisting".into(),
            Metric::SeL => "se_l".into(),
            Metric::SeU => "se_u".into(),
            Metric::NetCap => "netcap".into(),
        }
    }

    /// Needs SIR probes (coverage, rate, and capacity metrics).
    pub fn needs_probes(&self) -> bool {
        matches!(
            self,
            Metric::CovLLicensed
                | Metric::CovLUnlicensed
                | Metric::CovU
                | Metric::CovCoexisting
                | Metric::SeL
                | Metric::SeU
                | Metric::NetCap
        )
    }

    /// Needs explicit contention rounds with per-AP grant tallies.
    pub fn needs_access_rounds(&self) -> bool {
        matches!(self, Metric::AccessTier(_))
    }

    /// Needs per-tier void tallies from the association map.
    pub fn needs_voids(&self) -> bool {
        matches!(self, Metric::VoidTier(_) | Metric::NetCap)
    }

    /// Needs the analytic access probabilities (and thus the mean-area
    /// table): everything except pure void metrics.
    pub fn needs_analytic_access(&self) -> bool {
        !matches!(self, Metric::VoidTier(_))
    }

    /// Needs the coverage bound set.
    pub fn needs_coverage_bounds(&self) -> bool {
        matches!(
            self,
            Metric::CovLLicensed | Metric::CovLUnlicensed | Metric::CovU | Metric::CovCoexisting
        )
    }

    /// Needs the capacity bound set.
    pub fn needs_capacity_bounds(&self) -> bool {
        matches!(self, Metric::SeL | Metric::SeU | Metric::NetCap)
    }
}

// ======================================================================
// Rows
// ======================================================================

/// One output row: a (sweep point, metric) pair. Empty options render as
/// empty CSV fields; a `Some(0)` sample count marks a simulation half that
/// ran but produced no estimate for this metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub metric: String,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub analytic_bound: Option<f64>,
    pub analytic_limit: Option<f64>,
    pub sample_count: Option<u64>,
    pub wall_time_s: f64,
}

/// A contained per-point failure.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub sweep_value: f64,
    pub message: String,
}

/// Everything a sweep produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Rows ordered by sweep point, then metric name.
    pub rows: Vec<ResultRow>,
    /// Per-point failure messages (the matching rows have empty fields).
    pub failures: Vec<PointFailure>,
}

/// Execution switches.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Run the Monte Carlo half (false = analytic columns only).
    pub simulate: bool,
    /// Record wall-clock seconds per sweep point; off by default so reruns
    /// are byte-identical.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            simulate: true,
            timings: false,
        }
    }
}

// ======================================================================
// Sweep driver
// ======================================================================

/// What the requested metrics require of each trial.
#[derive(Debug, Clone, Copy, Default)]
struct Needs {
    voids: bool,
    access: bool,
    probes: bool,
    analytic_access: bool,
    coverage_bounds: bool,
    capacity_bounds: bool,
}

impl Needs {
    fn of(metrics: &[Metric]) -> Needs {
        Needs {
            voids: metrics.iter().any(Metric::needs_voids),
            access: metrics.iter().any(Metric::needs_access_rounds),
            probes: metrics.iter().any(Metric::needs_probes),
            analytic_access: metrics.iter().any(Metric::needs_analytic_access),
            coverage_bounds: metrics.iter().any(Metric::needs_coverage_bounds),
            capacity_bounds: metrics.iter().any(Metric::needs_capacity_bounds),
        }
    }
}

/// Boundary guards, meters.
#[derive(Debug, Clone, Copy)]
struct Guards {
    /// Guard for licensed-tier AP statistics; `None` without licensed tiers.
    licensed: Option<f64>,
    /// Guard for unlicensed-tier AP statistics.
    unlicensed: f64,
    /// Guard for probe positions.
    probe: f64,
    /// Guard for channel-access tallies (covers sensing disks too).
    access: f64,
}

impl Guards {
    fn compute(
        network: &NetworkConfig,
        policy: &AssociationPolicy,
        quantile: f64,
    ) -> Result<Guards, CoreError> {
        let mode = policy.mode;
        let licensed = if network.licensed_tiers().is_empty() {
            None
        } else {
            Some(guard_distance(
                network,
                policy,
                eligibility(mode, UserBand::Licensed),
                quantile,
            )?)
        };
        let unlicensed = guard_distance(
            network,
            policy,
            eligibility(mode, UserBand::Unlicensed),
            quantile,
        )?;
        let probe = licensed.unwrap_or(0.0).max(unlicensed);
        let max_sensing = network
            .tiers
            .iter()
            .map(|t| t.sensing_radius)
            .fold(0.0, f64::max);
        Ok(Guards {
            licensed,
            unlicensed,
            probe,
            access: probe.max(max_sensing),
        })
    }

    /// Guard for void tallies of one tier: the reach of the user band(s)
    /// that can select it.
    fn void_guard(&self, tier: usize, unlicensed_tier: usize) -> f64 {
        if tier == unlicensed_tier {
            self.unlicensed
        } else {
            self.licensed.unwrap_or(self.unlicensed)
        }
    }
}

/// Analytic quantities of one sweep point; stages after the first failure
/// stay `None`.
#[derive(Debug, Clone, Default)]
struct AnalyticHalf {
    nu: Option<Vec<f64>>,
    access: Option<AccessProbabilities>,
    bounds: Option<BoundSet>,
    capacity: Option<CapacityBounds>,
    error: Option<String>,
}

impl AnalyticHalf {
    fn compute(
        network: &NetworkConfig,
        policy: &AssociationPolicy,
        needs: &Needs,
        areas: Option<&Result<MeanAreaTable, CoreError>>,
        settings: &QuadratureSettings,
    ) -> AnalyticHalf {
        let mut half = AnalyticHalf::default();
        let fail = |half: &mut AnalyticHalf, e: String| {
            if half.error.is_none() {
                half.error = Some(e);
            }
        };

        match AssocStats::from_config(network, policy) {
            Ok(stats) => {
                let nu: Result<Vec<f64>, CoreError> = (0..network.num_tiers())
                    .map(|k| void_probability_from_stats(&stats, network, policy.mode, k))
                    .collect();
                match nu {
                    Ok(v) => half.nu = Some(v),
                    Err(e) => fail(&mut half, e.to_string()),
                }
            }
            Err(e) => fail(&mut half, e.to_string()),
        }

        if needs.analytic_access {
            match areas {
                Some(Ok(table)) => match access_probabilities(network, policy, table, settings) {
                    Ok(a) => half.access = Some(a),
                    Err(e) => fail(&mut half, e.to_string()),
                },
                Some(Err(e)) => fail(&mut half, format!("mean-area table: {e}")),
                None => fail(&mut half, "mean-area table unavailable".into()),
            }
        }

        if needs.coverage_bounds {
            if let Some(access) = &half.access {
                match coverage_bounds(
                    network,
                    policy,
                    access,
                    network.channel.sir_threshold,
                    settings,
                ) {
                    Ok(b) => half.bounds = Some(b),
                    Err(e) => fail(&mut half, e.to_string()),
                }
            }
        }

        if needs.capacity_bounds {
            if let Some(access) = &half.access {
                match capacity_bounds(network, policy, access, settings) {
                    Ok(c) => half.capacity = Some(c),
                    Err(e) => fail(&mut half, e.to_string()),
                }
            }
        }

        half
    }

    /// (bound, limit) columns for one metric.
    fn values(&self, metric: Metric) -> (Option<f64>, Option<f64>) {
        match metric {
            Metric::VoidTier(t) => (self.nu.as_ref().map(|v| v[t]), None),
            Metric::AccessTier(t) => (
                self.access.as_ref().and_then(|a| a.rho[t]),
                None,
            ),
            Metric::CovLLicensed => match &self.bounds {
                Some(b) => (b.licensed_bound, b.licensed_limit),
                None => (None, None),
            },
            Metric::CovLUnlicensed => match &self.bounds {
                Some(b) => (b.opportunistic_bound, b.opportunistic_limit),
                None => (None, None),
            },
            Metric::CovU => match &self.bounds {
                Some(b) => (Some(b.unlicensed_bound), Some(b.unlicensed_limit)),
                None => (None, None),
            },
            Metric::CovCoexisting => match &self.bounds {
                Some(b) => (Some(b.coexisting_bound), Some(b.coexisting_limit)),
                None => (None, None),
            },
            Metric::SeL => match &self.capacity {
                Some(c) => (c.se_licensed_bound, c.se_licensed_limit),
                None => (None, None),
            },
            Metric::SeU => match &self.capacity {
                Some(c) => (Some(c.se_unlicensed_bound), Some(c.se_unlicensed_limit)),
                None => (None, None),
            },
            Metric::NetCap => match &self.capacity {
                Some(c) => (Some(c.netcap_bound), Some(c.netcap_limit)),
                None => (None, None),
            },
        }
    }
}

/// Per-trial tallies.
struct TrialOutput {
    /// Per tier: (void interior APs, interior APs).
    void_counts: Vec<(u64, u64)>,
    /// Per tier: (granted entries, contending entries), interior only.
    access_counts: Vec<(u64, u64)>,
    batch: Option<ProbeBatch>,
}

/// Monte Carlo results of one sweep point.
#[derive(Debug, Clone, Default)]
struct McHalf {
    voids: Option<Vec<Option<Estimate>>>,
    access: Option<Vec<Option<Estimate>>>,
    coverage_licensed: Option<Estimate>,
    coverage_opportunistic: Option<Estimate>,
    coverage_unlicensed: Option<Estimate>,
    coverage_coexisting: Option<Estimate>,
    se_licensed: Option<Estimate>,
    se_unlicensed: Option<Estimate>,
    netcap: Option<Estimate>,
    error: Option<String>,
}

impl McHalf {
    /// (estimate, count) for one metric. A `(None, Some(0))` pair marks "ran
    /// but no estimate".
    fn values(&self, metric: Metric) -> (Option<Estimate>, Option<u64>) {
        let pick = |e: Option<Estimate>| match e {
            Some(est) => (Some(est), Some(est.count)),
            None => (None, Some(0)),
        };
        match metric {
            Metric::VoidTier(t) => pick(self.voids.as_ref().and_then(|v| v[t])),
            Metric::AccessTier(t) => pick(self.access.as_ref().and_then(|a| a[t])),
            Metric::CovLLicensed => pick(self.coverage_licensed),
            Metric::CovLUnlicensed => pick(self.coverage_opportunistic),
            Metric::CovU => pick(self.coverage_unlicensed),
            Metric::CovCoexisting => pick(self.coverage_coexisting),
            Metric::SeL => pick(self.se_licensed),
            Metric::SeU => pick(self.se_unlicensed),
            Metric::NetCap => pick(self.netcap),
        }
    }
}

/// Run a scenario's full sweep.
pub fn run_sweep(scenario: &Scenario, options: &RunOptions) -> Result<SweepOutcome, CliError> {
    scenario.validate()?;
    let metrics = scenario.parsed_metrics();
    let needs = Needs::of(&metrics);
    let policy = scenario.policy();
    let window = scenario.window();
    let points = scenario.sweep_points();
    let settings = QuadratureSettings::default();

    // The mean sensing areas depend on the AP layout and policy but not the
    // user intensities: one table serves every sweep point.
    let areas: Option<Result<MeanAreaTable, CoreError>> = needs.analytic_access.then(|| {
        let network = scenario.network_at(&points[0]);
        estimate_mean_areas(&network, &policy, &settings)
    });

    // Metric emission order: by name, per the output contract.
    let mut ordered = metrics.clone();
    ordered.sort_by_key(|m| m.name());

    let mut rows = Vec::with_capacity(points.len() * ordered.len());
    let mut failures = Vec::new();
    for point in &points {
        let started = std::time::Instant::now();
        let network = scenario.network_at(point);
        let analytic =
            AnalyticHalf::compute(&network, &policy, &needs, areas.as_ref(), &settings);
        if let Some(msg) = &analytic.error {
            failures.push(PointFailure {
                sweep_value: point.value,
                message: format!("analytic: {msg}"),
            });
        }

        let mc = if options.simulate {
            let mc = simulate_point(scenario, &network, &policy, window, &needs);
            if let Some(msg) = &mc.error {
                failures.push(PointFailure {
                    sweep_value: point.value,
                    message: format!("simulation: {msg}"),
                });
            }
            Some(mc)
        } else {
            None
        };

        let wall_time_s = if options.timings {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };

        for metric in &ordered {
            let (bound, limit) = analytic.values(*metric);
            let (estimate, count) = match &mc {
                Some(half) => half.values(*metric),
                None => (None, None),
            };
            rows.push(ResultRow {
                sweep_value: point.value,
                metric: metric.name(),
                mc_estimate: estimate.map(|e| e.mean),
                mc_stderr: estimate.map(|e| e.stderr),
                analytic_bound: bound,
                analytic_limit: limit,
                sample_count: count,
                wall_time_s,
            });
        }
    }

    Ok(SweepOutcome { rows, failures })
}

/// The mean sensing-area table for a scenario (the `areas` subcommand).
pub fn areas_table(scenario: &Scenario) -> Result<MeanAreaTable, CliError> {
    scenario.validate()?;
    let network = scenario.network_at(&scenario.sweep_points()[0]);
    estimate_mean_areas(&network, &scenario.policy(), &QuadratureSettings::default())
        .map_err(CliError::from)
}

// ======================================================================
// Monte Carlo half
// ======================================================================

fn simulate_point(
    scenario: &Scenario,
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    window: Window,
    needs: &Needs,
) -> McHalf {
    match simulate_point_inner(scenario, network, policy, window, needs) {
        Ok(half) => half,
        Err(e) => McHalf {
            error: Some(e.to_string()),
            ..McHalf::default()
        },
    }
}

fn simulate_point_inner(
    scenario: &Scenario,
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    window: Window,
    needs: &Needs,
) -> Result<McHalf, CoreError> {
    let guards = Guards::compute(network, policy, scenario.sim.guard_quantile)?;
    let probe_settings = ProbeSettings {
        num_probes: scenario.sim.probes as usize,
        num_rounds: scenario.sim.rounds as usize,
        guard: guards.probe,
    };
    let seed = scenario.sim.seed;
    let rounds = scenario.sim.rounds;

    let trial_outputs: Result<Vec<TrialOutput>, CoreError> = (0..scenario.sim.trials)
        .into_par_iter()
        .map(|trial| {
            run_trial(
                network,
                policy,
                window,
                needs,
                &guards,
                &probe_settings,
                seed,
                rounds,
                trial,
            )
        })
        .collect();
    let trial_outputs = trial_outputs?;

    let k = network.num_tiers();
    let mut half = McHalf::default();

    if needs.voids {
        let mut pooled = vec![(0_u64, 0_u64); k];
        for t in &trial_outputs {
            for (acc, c) in pooled.iter_mut().zip(&t.void_counts) {
                acc.0 += c.0;
                acc.1 += c.1;
            }
        }
        half.voids = Some(
            pooled
                .into_iter()
                .map(|(hits, total)| (total > 0).then(|| binomial_estimate(hits, total)))
                .collect(),
        );
    }

    if needs.access {
        let mut pooled = vec![(0_u64, 0_u64); k];
        for t in &trial_outputs {
            for (acc, c) in pooled.iter_mut().zip(&t.access_counts) {
                acc.0 += c.0;
                acc.1 += c.1;
            }
        }
        half.access = Some(
            pooled
                .into_iter()
                .map(|(hits, total)| (total > 0).then(|| binomial_estimate(hits, total)))
                .collect(),
        );
    }

    if needs.probes {
        let batches: Vec<ProbeBatch> = trial_outputs
            .into_iter()
            .filter_map(|t| t.batch)
            .collect();
        let theta = network.channel.sir_threshold;
        let coverage = estimate_coverage(&batches, k, theta)?;
        half.coverage_licensed = coverage.licensed;
        half.coverage_opportunistic = coverage.opportunistic;
        half.coverage_unlicensed = coverage.unlicensed;

        let stats = AssocStats::from_config(network, policy)?;
        let per_tier: Option<Vec<Estimate>> = coverage.per_tier.iter().copied().collect();
        if let Some(per_tier) = per_tier {
            half.coverage_coexisting =
                estimate_coexisting_coverage(&per_tier, &stats.theta_all).ok();
        }

        let fractions = access_fractions(&batches);
        let spectrum = estimate_spectrum_efficiency(&batches, &fractions, scenario.sim.sir_cap)?;
        half.se_licensed = spectrum.licensed;
        half.se_unlicensed = spectrum.unlicensed;

        let all_voids: Option<Vec<Estimate>> = half
            .voids
            .as_ref()
            .and_then(|v| v.iter().copied().collect());
        if let Some(voids) = &all_voids {
            let inputs = CapacityInputs {
                network,
                void_probability: voids,
                cov_licensed: half.coverage_licensed,
                cov_unlicensed: half.coverage_unlicensed,
                spectrum,
            };
            half.netcap = estimate_network_capacity(&inputs).ok();
        }
    }

    Ok(half)
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    window: Window,
    needs: &Needs,
    guards: &Guards,
    probe_settings: &ProbeSettings,
    seed: u64,
    rounds: u32,
    trial: u64,
) -> Result<TrialOutput, CoreError> {
    let mut rng_aps = stream(seed, trial, Purpose::Deployment);
    let mut rng_users = stream(seed, trial, Purpose::Users);
    let dep = sample_deployment(network, window, &mut rng_aps, &mut rng_users)?;
    let assoc = associate(&dep, network, policy)?;
    let k = network.num_tiers();
    let unl = network.unlicensed_tier();

    let mut out = TrialOutput {
        void_counts: vec![(0, 0); k],
        access_counts: vec![(0, 0); k],
        batch: None,
    };

    if needs.voids {
        for tier in 0..k {
            let guard = guards.void_guard(tier, unl);
            for i in dep.tier_ranges[tier].clone() {
                if !dep.window.interior(dep.aps[i].pos, guard) {
                    continue;
                }
                out.void_counts[tier].1 += 1;
                if assoc.map.is_void(i) {
                    out.void_counts[tier].0 += 1;
                }
            }
        }
    }

    if needs.access {
        let mut rng_rounds = stream(seed ^ ACCESS_STREAM_SALT, trial, Purpose::Contention);
        for _ in 0..rounds {
            let state = draw_round(&dep, network, &mut rng_rounds);
            let outcome = resolve(&dep, network, &state, Some(&assoc.map));
            for tier in 0..k {
                if network.tiers[tier].max_backoff.is_none() {
                    continue;
                }
                for i in dep.tier_ranges[tier].clone() {
                    if !outcome.contending[i]
                        || !dep.window.interior(dep.aps[i].pos, guards.access)
                    {
                        continue;
                    }
                    out.access_counts[tier].1 += 1;
                    if outcome.granted[i] {
                        out.access_counts[tier].0 += 1;
                    }
                }
            }
        }
    }

    if needs.probes {
        let mut rng_contention = stream(seed, trial, Purpose::Contention);
        let mut rng_probes = stream(seed, trial, Purpose::Probes);
        out.batch = Some(run_probes(
            &dep,
            network,
            policy,
            &assoc,
            probe_settings,
            &mut rng_contention,
            &mut rng_probes,
        )?);
    }

    Ok(out)
}

// ======================================================================
// Tests
// ======================================================================
