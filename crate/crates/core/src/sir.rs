//! Typical-user SIR sampling and Monte Carlo metric estimation.
//!
//! Probes are extra users dropped into a sampled deployment; by Slivnyak's
//! theorem they see the statistics of the typical user without disturbing
//! the background process. Each probe is evaluated as:
//! - a licensed-band downlink from its licensed-tier server, interfered by
//!   every other non-void licensed-tier AP (always-on licensed band);
//! - an opportunistic unlicensed-band downlink from the same server,
//!   recorded only on rounds where that server clears the gain gate and
//!   wins contention (rejection conditioning);
//! - an unlicensed-band downlink from its unlicensed-tier server, recorded
//!   on rounds where that server is granted the channel.
//!
//! Probe servers void of background users still contend for their probe:
//! the server is inserted into the drawn round with its own backoff, which
//! can only demote later contenders inside its sensing reach (hard-core
//! insertion never promotes anyone). Crossing-mode association sends each
//! probe to a single serving tier over all RATs and branches on where it
//! landed.
//!
//! Estimators follow the definitional combinations: binomial coverage per
//! band, delta-method weighted coexisting coverage, product-form spectrum
//! efficiencies with empirical access fractions, and the area capacity
//! assembled from per-tier non-void intensities.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::assoc::{associate, AssociationMap, AssociationResult, Eligibility, Service};
use crate::config::{AssociationMode, AssociationPolicy, NetworkConfig};
use crate::csma::{draw_round, resolve, ContentionOutcome, RoundState};
use crate::geom::{Boundary, Vec2};
use crate::ppp::{sample_deployment, Deployment, Window};
use crate::rng::{stream, Purpose};
use crate::stats::{binomial_estimate, Estimate, MeanAccumulator};
use crate::{Error, Result};

/// Default probe positions per deployment.
pub const DEFAULT_NUM_PROBES: usize = 48;
/// Default contention rounds per deployment.
pub const DEFAULT_NUM_ROUNDS: usize = 48;
/// Default cap applied to infinite or huge SIR values in capacity terms.
pub const DEFAULT_GAMMA_CAP: f64 = 1e6;

// ======================================================================
// Samples
// ======================================================================

/// Which downlink a SIR sample was measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SirBand {
    /// Licensed band, licensed-tier server (always transmitting).
    Licensed,
    /// Unlicensed band, licensed-tier server with a granted opportunistic
    /// access this round.
    Opportunistic,
    /// Unlicensed band, unlicensed-tier server granted the channel.
    Unlicensed,
}

/// One typical-user SIR draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirSample {
    pub band: SirBand,
    /// Serving tier index (0-based).
    pub serving_tier: u32,
    /// Signal-to-interference ratio; `f64::INFINITY` when no interferer
    /// transmits (coverage indicators stay exact, capacity terms cap it).
    pub sir: f64,
    /// Whether the serving AP held a channel grant for this sample. Always
    /// true for the gated bands (samples are conditioned on access) and for
    /// the always-on licensed band.
    pub server_granted: bool,
}

/// Every sample and access tally collected from one deployment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeBatch {
    pub samples: Vec<SirSample>,
    /// Probe-rounds where a licensed-tier server could have accessed the
    /// unlicensed channel.
    pub l_access_trials: u64,
    /// Of those, rounds where it was gated in and granted.
    pub l_access_grants: u64,
    /// Probe-rounds evaluated for unlicensed-tier servers.
    pub u_trials: u64,
    /// Of those, rounds where the server was granted.
    pub u_grants: u64,
}

/// Probe-engine workload per deployment.
#[derive(Debug, Clone, Copy)]
pub struct ProbeSettings {
    /// Probe positions dropped per deployment (>= 1).
    pub num_probes: usize,
    /// Contention rounds per deployment; zero skips the unlicensed band.
    pub num_rounds: usize,
    /// Keep probes this far from an open window's edge (wrapped windows
    /// need no guard).
    pub guard: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            num_probes: DEFAULT_NUM_PROBES,
            num_rounds: DEFAULT_NUM_ROUNDS,
            guard: 0.0,
        }
    }
}

impl ProbeSettings {
    pub fn validate(&self) -> Result<()> {
        if self.num_probes == 0 {
            return Err(Error::config("at least one probe per deployment is required"));
        }
        if !(self.guard >= 0.0) || !self.guard.is_finite() {
            return Err(Error::config("probe guard must be finite and non-negative"));
        }
        Ok(())
    }
}

// ======================================================================
// SIR kernels
// ======================================================================

/// Mean received power over a squared distance: `power * gain * d^(-alpha)`.
pub fn received_power(power: f64, gain: f64, dist2: f64, alpha: f64) -> f64 {
    power * gain * dist2.powf(-alpha / 2.0)
}

/// Signal-to-interference ratio; infinite when nothing interferes.
pub fn sir_ratio(signal: f64, interference: f64) -> f64 {
    if interference > 0.0 {
        signal / interference
    } else {
        f64::INFINITY
    }
}

/// Sum licensed-band interference at `probe`: every non-void licensed-tier
/// AP except the server, with fresh fading over its stored shadowing mark.
fn licensed_interference<R: Rng + ?Sized>(
    dep: &Deployment,
    network: &NetworkConfig,
    map: &AssociationMap,
    server: u32,
    probe: Vec2,
    rng: &mut R,
) -> f64 {
    let alpha = network.channel.pathloss_exponent;
    let mut acc = 0.0;
    for tier in network.licensed_tiers() {
        let power = network.tiers[tier].power;
        for i in dep.tier_ranges[tier].clone() {
            if i as u32 == server || map.tagged_count[i] == 0 {
                continue;
            }
            let fading: f64 = Exp1.sample(rng);
            let ap = &dep.aps[i];
            let d2 = dep.window.dist2(&probe, &ap.pos);
            acc += received_power(power, fading * ap.shadow_inv, d2, alpha);
        }
    }
    acc
}

/// Sum unlicensed-band interference at `probe`: every granted contender
/// except the server and any contender demoted by the server's insertion,
/// with fresh fading and fresh shadowing toward the probe.
fn unlicensed_interference<R: Rng + ?Sized>(
    dep: &Deployment,
    network: &NetworkConfig,
    outcome: &ContentionOutcome,
    demoted: &[u32],
    server: u32,
    probe: Vec2,
    rng: &mut R,
) -> f64 {
    let alpha = network.channel.pathloss_exponent;
    let sigma = network.channel.sigma_ln();
    let mut acc = 0.0;
    for c in &outcome.contenders {
        if c.ap == server || !outcome.granted[c.ap as usize] || demoted.contains(&c.ap) {
            continue;
        }
        let fading: f64 = Exp1.sample(rng);
        let shadow: f64 = StandardNormal.sample(rng);
        let gain = fading * (-sigma * shadow).exp();
        let ap = &dep.aps[c.ap as usize];
        let d2 = dep.window.dist2(&probe, &ap.pos);
        acc += received_power(network.tiers[c.tier as usize].power, gain, d2, alpha);
    }
    acc
}

// ======================================================================
// Palm insertion of the probe's server into a drawn round
// ======================================================================

/// Outcome of inserting one server into an already-resolved round.
struct PalmAccess {
    /// Whether the server clears the gate and wins contention.
    granted: bool,
    /// Background contenders that were granted but lose to the inserted
    /// server (later backoff, server inside their sensing disk).
    demoted: Vec<u32>,
}

/// Re-evaluate a round from the point of view of a probe whose server may
/// not have contended in the background (void of background users).
///
/// Inserting one extra contender never promotes anyone: a background AP's
/// denial depends only on smaller-backoff contenders near it, and insertion
/// adds candidates without removing any. So the fix-up is local: decide the
/// server's own grant against the background contenders, and demote granted
/// contenders that now hear the earlier server.
fn palm_access(
    dep: &Deployment,
    network: &NetworkConfig,
    state: &RoundState,
    outcome: &ContentionOutcome,
    server: u32,
) -> PalmAccess {
    let i = server as usize;
    if state.gate_gain[i] < network.channel.gain_threshold {
        return PalmAccess {
            granted: false,
            demoted: Vec::new(),
        };
    }
    if outcome.contending[i] {
        // The server already contended in the background round; its grant
        // and its effect on neighbors are both in the outcome.
        return PalmAccess {
            granted: outcome.granted[i],
            demoted: Vec::new(),
        };
    }
    let t_server = state.backoff[i];
    let pos = dep.aps[i].pos;
    let r_own = network.tiers[dep.aps[i].tier as usize].sensing_radius;
    let r_own2 = r_own * r_own;
    let mut granted = true;
    let mut demoted = Vec::new();
    for c in &outcome.contenders {
        let d2 = dep.window.dist2(&pos, &dep.aps[c.ap as usize].pos);
        let earlier = c.backoff < t_server || (c.backoff == t_server && c.ap < server);
        if earlier {
            if d2 <= r_own2 {
                granted = false;
            }
        } else if outcome.granted[c.ap as usize] {
            let r_c = network.tiers[c.tier as usize].sensing_radius;
            if d2 <= r_c * r_c {
                demoted.push(c.ap);
            }
        }
    }
    PalmAccess { granted, demoted }
}

// ======================================================================
// Probe engine
// ======================================================================

/// Run the full probe workload on one deployment.
///
/// Probe positions come first off `rng_probes`, then per-probe gains in a
/// fixed order, so equal streams reproduce the batch bit for bit. The
/// contention stream is consumed only by the round draws, keeping rounds
/// identical across association modes on shared deployments.
pub fn run_probes<R: Rng + ?Sized>(
    dep: &Deployment,
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    assoc: &AssociationResult,
    settings: &ProbeSettings,
    rng_contention: &mut R,
    rng_probes: &mut R,
) -> Result<ProbeBatch> {
    settings.validate()?;
    let unl = network.unlicensed_tier() as u32;
    let half = match dep.window.boundary {
        Boundary::Wrapped => dep.window.radius,
        Boundary::Open => dep.window.radius - settings.guard,
    };
    if !(half > 0.0) {
        return Err(Error::config("probe guard leaves no interior to sample"));
    }
    let positions: Vec<Vec2> = (0..settings.num_probes)
        .map(|_| {
            Vec2::new(
                rng_probes.random_range(-half..half),
                rng_probes.random_range(-half..half),
            )
        })
        .collect();

    // Resolve each probe's persona(s) once: association is static per
    // deployment. Noncrossing probes act as both a licensed and an
    // unlicensed user; crossing probes associate once over all tiers.
    let mut licensed: Vec<(Vec2, Service)> = Vec::new();
    let mut unlicensed: Vec<(Vec2, Service)> = Vec::new();
    for &pos in &positions {
        match policy.mode {
            AssociationMode::NonCrossing => {
                if !network.is_unlicensed_only_network() {
                    if let Some(svc) = assoc.field.serve(pos, Eligibility::LicensedTiers) {
                        licensed.push((pos, svc));
                    }
                }
                if let Some(svc) = assoc.field.serve(pos, Eligibility::UnlicensedTier) {
                    unlicensed.push((pos, svc));
                }
            }
            AssociationMode::Crossing => {
                if let Some(svc) = assoc.field.serve(pos, Eligibility::AllTiers) {
                    if svc.tier == unl {
                        unlicensed.push((pos, svc));
                    } else {
                        licensed.push((pos, svc));
                    }
                }
            }
        }
    }

    let mut batch = ProbeBatch::default();
    let alpha = network.channel.pathloss_exponent;

    // Licensed band: one sample per licensed persona, independent of rounds.
    for (pos, svc) in &licensed {
        let power = network.tiers[svc.tier as usize].power;
        let fading: f64 = Exp1.sample(rng_probes);
        let mark = dep.aps[svc.ap as usize].shadow_inv;
        let signal = received_power(power, fading * mark, svc.dist2, alpha);
        let interference =
            licensed_interference(dep, network, &assoc.map, svc.ap, *pos, rng_probes);
        batch.samples.push(SirSample {
            band: SirBand::Licensed,
            serving_tier: svc.tier,
            sir: sir_ratio(signal, interference),
            server_granted: true,
        });
    }

    // Unlicensed band: rounds of contention shared by all probes.
    for _ in 0..settings.num_rounds {
        let state = draw_round(dep, network, rng_contention);
        let outcome = resolve(dep, network, &state, Some(&assoc.map));
        for (pos, svc) in &licensed {
            batch.l_access_trials += 1;
            let access = palm_access(dep, network, &state, &outcome, svc.ap);
            if !access.granted {
                continue;
            }
            batch.l_access_grants += 1;
            // Opportunistic service rides the very gain that cleared the
            // gate, so the conditioned numerator uses the round's gain.
            let power = network.tiers[svc.tier as usize].power;
            let signal = received_power(power, state.gate_gain[svc.ap as usize], svc.dist2, alpha);
            let interference = unlicensed_interference(
                dep,
                network,
                &outcome,
                &access.demoted,
                svc.ap,
                *pos,
                rng_probes,
            );
            batch.samples.push(SirSample {
                band: SirBand::Opportunistic,
                serving_tier: svc.tier,
                sir: sir_ratio(signal, interference),
                server_granted: true,
            });
        }
        for (pos, svc) in &unlicensed {
            batch.u_trials += 1;
            let access = palm_access(dep, network, &state, &outcome, svc.ap);
            if !access.granted {
                continue;
            }
            batch.u_grants += 1;
            // The downlink gain is the server's intrinsic shadowing mark
            // under fresh fading; the round's gate gain only decided access.
            let power = network.tiers[svc.tier as usize].power;
            let fading: f64 = Exp1.sample(rng_probes);
            let mark = dep.aps[svc.ap as usize].shadow_inv;
            let signal = received_power(power, fading * mark, svc.dist2, alpha);
            let interference = unlicensed_interference(
                dep,
                network,
                &outcome,
                &access.demoted,
                svc.ap,
                *pos,
                rng_probes,
            );
            batch.samples.push(SirSample {
                band: SirBand::Unlicensed,
                serving_tier: svc.tier,
                sir: sir_ratio(signal, interference),
                server_granted: true,
            });
        }
    }
    Ok(batch)
}

/// Sample one typical-user SIR from a fresh deployment, user at the origin.
///
/// Fully self-contained: samples the deployment and background users from
/// the seed's streams, associates, runs one contention round when the band
/// needs one, and assembles the SIR. Signals `ConditioningFailed` when the
/// requested band's access event does not occur (server not granted, or a
/// crossing-mode origin user landing on the other RAT); callers resample
/// with fresh seeds and track the rejection rate.
pub fn sample_typical_sir(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    window: Window,
    band: SirBand,
    seed: u64,
) -> Result<SirSample> {
    network.validate()?;
    policy.validate(network)?;
    let mut rng_dep = stream(seed, 0, Purpose::Deployment);
    let mut rng_users = stream(seed, 0, Purpose::Users);
    let dep = sample_deployment(network, window, &mut rng_dep, &mut rng_users)?;
    let assoc = associate(&dep, network, policy)?;
    let mut rng_probes = stream(seed, 0, Purpose::Probes);
    let origin = Vec2::new(0.0, 0.0);
    let unl = network.unlicensed_tier() as u32;
    let alpha = network.channel.pathloss_exponent;

    let serve = |elig: Eligibility| -> Result<Service> {
        assoc
            .field
            .serve(origin, elig)
            .ok_or_else(|| Error::insufficient("no eligible AP fell inside the window"))
    };

    match band {
        SirBand::Licensed => {
            if network.is_unlicensed_only_network() {
                return Err(Error::config(
                    "licensed band unavailable: the network has no licensed tiers",
                ));
            }
            let elig = match policy.mode {
                AssociationMode::NonCrossing => Eligibility::LicensedTiers,
                AssociationMode::Crossing => Eligibility::AllTiers,
            };
            let svc = serve(elig)?;
            if svc.tier == unl {
                return Err(Error::ConditioningFailed(
                    "origin user associated with the unlicensed tier".into(),
                ));
            }
            let power = network.tiers[svc.tier as usize].power;
            let fading: f64 = Exp1.sample(&mut rng_probes);
            let mark = dep.aps[svc.ap as usize].shadow_inv;
            let signal = received_power(power, fading * mark, svc.dist2, alpha);
            let interference = licensed_interference(
                &dep,
                network,
                &assoc.map,
                svc.ap,
                origin,
                &mut rng_probes,
            );
            Ok(SirSample {
                band,
                serving_tier: svc.tier,
                sir: sir_ratio(signal, interference),
                server_granted: true,
            })
        }
        SirBand::Opportunistic | SirBand::Unlicensed => {
            let elig = match (policy.mode, band) {
                (AssociationMode::Crossing, _) => Eligibility::AllTiers,
                (AssociationMode::NonCrossing, SirBand::Opportunistic) => {
                    if network.is_unlicensed_only_network() {
                        return Err(Error::config(
                            "opportunistic band unavailable: the network has no licensed tiers",
                        ));
                    }
                    Eligibility::LicensedTiers
                }
                (AssociationMode::NonCrossing, _) => Eligibility::UnlicensedTier,
            };
            let svc = serve(elig)?;
            let wants_unlicensed_server = band == SirBand::Unlicensed;
            if (svc.tier == unl) != wants_unlicensed_server {
                return Err(Error::ConditioningFailed(
                    "origin user associated with the other RAT".into(),
                ));
            }
            let mut rng_cont = stream(seed, 0, Purpose::Contention);
            let state = draw_round(&dep, network, &mut rng_cont);
            let outcome = resolve(&dep, network, &state, Some(&assoc.map));
            let access = palm_access(&dep, network, &state, &outcome, svc.ap);
            if !access.granted {
                return Err(Error::ConditioningFailed(
                    "serving AP was not granted unlicensed access this round".into(),
                ));
            }
            let power = network.tiers[svc.tier as usize].power;
            let gain = if band == SirBand::Opportunistic {
                state.gate_gain[svc.ap as usize]
            } else {
                let fading: f64 = Exp1.sample(&mut rng_probes);
                fading * dep.aps[svc.ap as usize].shadow_inv
            };
            let signal = received_power(power, gain, svc.dist2, alpha);
            let interference = unlicensed_interference(
                &dep,
                network,
                &outcome,
                &access.demoted,
                svc.ap,
                origin,
                &mut rng_probes,
            );
            Ok(SirSample {
                band,
                serving_tier: svc.tier,
                sir: sir_ratio(signal, interference),
                server_granted: true,
            })
        }
    }
}

// ======================================================================
// Estimators
// ======================================================================

/// Per-band and per-serving-tier coverage estimates.
#[derive(Debug, Clone)]
pub struct CoverageEstimates {
    pub licensed: Option<Estimate>,
    pub opportunistic: Option<Estimate>,
    pub unlicensed: Option<Estimate>,
    /// Coverage of each tier's primary downlink: licensed-band samples for
    /// licensed tiers, unlicensed-band samples for the unlicensed tier.
    pub per_tier: Vec<Option<Estimate>>,
}

/// Indicator-mean coverage `P[SIR >= theta]` with binomial standard errors,
/// pooled over batches, split by band and by serving tier.
pub fn estimate_coverage(
    batches: &[ProbeBatch],
    num_tiers: usize,
    theta: f64,
) -> Result<CoverageEstimates> {
    if !(theta >= 0.0) {
        return Err(Error::config("coverage threshold must be non-negative"));
    }
    let mut band_counts = [(0_u64, 0_u64); 3];
    let mut tier_counts = vec![(0_u64, 0_u64); num_tiers];
    for batch in batches {
        for s in &batch.samples {
            let slot = match s.band {
                SirBand::Licensed => 0,
                SirBand::Opportunistic => 1,
                SirBand::Unlicensed => 2,
            };
            let hit = u64::from(s.sir >= theta);
            band_counts[slot].0 += hit;
            band_counts[slot].1 += 1;
            if s.band != SirBand::Opportunistic {
                let t = s.serving_tier as usize;
                if t >= num_tiers {
                    return Err(Error::config(format!(
                        "sample serving tier {t} out of range for {num_tiers} tiers"
                    )));
                }
                tier_counts[t].0 += hit;
                tier_counts[t].1 += 1;
            }
        }
    }
    let to_estimate =
        |(hits, total): (u64, u64)| (total > 0).then(|| binomial_estimate(hits, total));
    Ok(CoverageEstimates {
        licensed: to_estimate(band_counts[0]),
        opportunistic: to_estimate(band_counts[1]),
        unlicensed: to_estimate(band_counts[2]),
        per_tier: tier_counts.into_iter().map(to_estimate).collect(),
    })
}

/// Weighted combination of per-tier coverages into the network-wide
/// coexisting coverage, errors propagated by the delta method.
///
/// Weights are the tier selection probabilities over all tiers and must sum
/// to one.
pub fn estimate_coexisting_coverage(
    per_tier: &[Estimate],
    weights: &[f64],
) -> Result<Estimate> {
    if per_tier.len() != weights.len() || per_tier.is_empty() {
        return Err(Error::config(
            "per-tier coverages and weights must align and be non-empty",
        ));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::config(
            "tier weights must be non-negative and sum to one",
        ));
    }
    let mean = per_tier
        .iter()
        .zip(weights)
        .map(|(e, w)| w * e.mean)
        .sum::<f64>();
    let var = per_tier
        .iter()
        .zip(weights)
        .map(|(e, w)| (w * e.stderr).powi(2))
        .sum::<f64>();
    let count = per_tier
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(e, _)| e.count)
        .min()
        .unwrap_or(0);
    Ok(Estimate {
        mean,
        stderr: var.sqrt(),
        count,
    })
}

/// Empirical channel-access fractions pooled over batches.
#[derive(Debug, Clone, Copy, Default)]
pub struct AccessFractions {
    /// Probability that a licensed persona's server is gated in and granted
    /// on a round (the opportunistic access weight).
    pub licensed: Option<Estimate>,
    /// Probability that an unlicensed persona's server is granted.
    pub unlicensed: Option<Estimate>,
}

/// Pool the access tallies of many batches into binomial estimates.
pub fn access_fractions(batches: &[ProbeBatch]) -> AccessFractions {
    let mut lt = 0_u64;
    let mut lg = 0_u64;
    let mut ut = 0_u64;
    let mut ug = 0_u64;
    for b in batches {
        lt += b.l_access_trials;
        lg += b.l_access_grants;
        ut += b.u_trials;
        ug += b.u_grants;
    }
    AccessFractions {
        licensed: (lt > 0).then(|| binomial_estimate(lg, lt)),
        unlicensed: (ut > 0).then(|| binomial_estimate(ug, ut)),
    }
}

/// Mean successful spectrum efficiencies per band, bps/Hz.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumEfficiency {
    /// Licensed-tier user rate: licensed-band term plus the access-weighted
    /// opportunistic term.
    pub licensed: Option<Estimate>,
    /// Unlicensed-tier user rate: access fraction times the conditional
    /// unlicensed-band rate.
    pub unlicensed: Option<Estimate>,
}

/// Product-form spectrum efficiencies from pooled samples.
///
/// `access` supplies the access-fraction weights (empirical by default via
/// [`access_fractions`]; exact analytic values may be substituted). SIR
/// values above `gamma_cap` (including infinities) are capped before the
/// rate transform.
pub fn estimate_spectrum_efficiency(
    batches: &[ProbeBatch],
    access: &AccessFractions,
    gamma_cap: f64,
) -> Result<SpectrumEfficiency> {
    if !(gamma_cap > 0.0) {
        return Err(Error::config("the SIR cap must be positive"));
    }
    let rate = |sir: f64| (1.0 + sir.min(gamma_cap)).log2();
    let mut licensed_acc = MeanAccumulator::new();
    let mut opportunistic_acc = MeanAccumulator::new();
    let mut unlicensed_acc = MeanAccumulator::new();
    for batch in batches {
        for s in &batch.samples {
            match s.band {
                SirBand::Licensed => licensed_acc.push(rate(s.sir)),
                SirBand::Opportunistic => opportunistic_acc.push(rate(s.sir)),
                SirBand::Unlicensed => unlicensed_acc.push(rate(s.sir)),
            }
        }
    }
    let licensed = (licensed_acc.count() > 0).then(|| {
        let mut total = licensed_acc.estimate();
        if let Some(f) = access.licensed {
            if opportunistic_acc.count() > 0 {
                total = total.add(&f.mul(&opportunistic_acc.estimate()));
            }
        }
        total
    });
    let unlicensed = match (access.unlicensed, unlicensed_acc.count() > 0) {
        (Some(f), true) => Some(f.mul(&unlicensed_acc.estimate())),
        _ => None,
    };
    Ok(SpectrumEfficiency {
        licensed,
        unlicensed,
    })
}

/// Everything the area-capacity combination needs.
#[derive(Debug, Clone)]
pub struct CapacityInputs<'a> {
    pub network: &'a NetworkConfig,
    /// Per-tier void probabilities (empirical or analytic).
    pub void_probability: &'a [Estimate],
    /// Pooled licensed-band link coverage at the operating threshold.
    pub cov_licensed: Option<Estimate>,
    /// Unlicensed-band link coverage at the operating threshold.
    pub cov_unlicensed: Option<Estimate>,
    pub spectrum: SpectrumEfficiency,
}

/// Coexisting network capacity in bps/Hz per square meter: each band's
/// non-void AP intensity times its link coverage times its mean spectrum
/// efficiency, summed over bands.
pub fn estimate_network_capacity(inputs: &CapacityInputs) -> Result<Estimate> {
    let network = inputs.network;
    if inputs.void_probability.len() != network.num_tiers() {
        return Err(Error::config(
            "need one void-probability estimate per tier",
        ));
    }
    let missing = |what: &str| Error::insufficient(format!("{what} required for capacity"));
    let unl = network.unlicensed_tier();
    let lam_u = network.tiers[unl].intensity;
    let nu_u = &inputs.void_probability[unl];
    let busy_u = Estimate {
        mean: lam_u * (1.0 - nu_u.mean),
        stderr: lam_u * nu_u.stderr,
        count: nu_u.count,
    };
    let cov_u = inputs
        .cov_unlicensed
        .ok_or_else(|| missing("unlicensed coverage"))?;
    let se_u = inputs
        .spectrum
        .unlicensed
        .ok_or_else(|| missing("unlicensed spectrum efficiency"))?;
    let mut total = busy_u.mul(&cov_u).mul(&se_u);

    if !network.is_unlicensed_only_network() {
        let mut mean = 0.0;
        let mut var = 0.0;
        let mut count = u64::MAX;
        for k in network.licensed_tiers() {
            let lam = network.tiers[k].intensity;
            let nu = &inputs.void_probability[k];
            mean += lam * (1.0 - nu.mean);
            var += (lam * nu.stderr).powi(2);
            count = count.min(nu.count);
        }
        let busy_l = Estimate {
            mean,
            stderr: var.sqrt(),
            count,
        };
        let cov_l = inputs
            .cov_licensed
            .ok_or_else(|| missing("licensed coverage"))?;
        let se_l = inputs
            .spectrum
            .licensed
            .ok_or_else(|| missing("licensed spectrum efficiency"))?;
        total = total.add(&busy_l.mul(&cov_l).mul(&se_l));
    }
    Ok(total)
}

// ======================================================================
// Tests
// ======================================================================
