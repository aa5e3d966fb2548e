//! Opportunistic carrier-sense channel contention on the unlicensed band.
//!
//! Protocol model, per contention round:
//! - Every AP of a tier with a finite backoff window draws an unlicensed-band
//!   channel gain (fading over shadowing) and contends only when that gain
//!   clears the opportunistic threshold.
//! - Contenders draw uniform random backoffs over their tier's window; an AP
//!   is granted the channel when no contender inside its own sensing disk
//!   holds a strictly smaller backoff (ties resolve to the lower AP index).
//!   Denied contenders still suppress later neighbors, which is the hard-core
//!   thinning rule matching the closed-form access model.
//!
//! The random draw and the resolution are split so one drawn round can be
//! resolved under different thresholds or with and without void-cell
//! awareness on common random numbers.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::assoc::{AssocStats, AssociationMap, Eligibility};
use crate::config::{AssociationMode, AssociationPolicy, NetworkConfig, WeightScheme};
use crate::geom::{disk_minus_lens_area, GridEntry, UniformGrid};
use crate::ppp::Deployment;
use crate::quad::{gauss_hermite_cached, integrate, QuadratureSettings};
use crate::stats::{binomial_estimate, Estimate};
use crate::{Error, Result};

/// Target mean entries per grid cell when bucketing contenders.
const GRID_TARGET_PER_CELL: f64 = 2.0;

/// Minimum expected close-pair count for the hard-core check to be
/// statistically meaningful.
const MIN_EXPECTED_PAIRS: f64 = 10.0;

// ======================================================================
// Round state: gains and backoffs on common random numbers
// ======================================================================

/// Random draws of one contention round, for every AP of a contending tier.
///
/// Gains and backoffs are drawn for void APs too, so resolutions with and
/// without void awareness (or with different thresholds) stay coupled.
#[derive(Debug, Clone)]
pub struct RoundState {
    /// Unlicensed-band channel gain (fading over shadowing) per AP; zero for
    /// APs of tiers that never contend.
    pub gate_gain: Vec<f64>,
    /// Uniform backoff per AP; infinite for APs of tiers that never contend.
    pub backoff: Vec<f64>,
}

/// Draw gains and backoffs for one round.
///
/// Draw order is the global AP order, so a given RNG state always produces
/// the same round regardless of how the outcome is later resolved.
pub fn draw_round<R: Rng + ?Sized>(
    dep: &Deployment,
    network: &NetworkConfig,
    rng: &mut R,
) -> RoundState {
    let sigma = network.channel.sigma_ln();
    let mut gate_gain = vec![0.0; dep.aps.len()];
    let mut backoff = vec![f64::INFINITY; dep.aps.len()];
    for (i, ap) in dep.aps.iter().enumerate() {
        let tier = &network.tiers[ap.tier as usize];
        let Some(tau) = tier.max_backoff else {
            continue;
        };
        let fading: f64 = Exp1.sample(rng);
        let shadow: f64 = StandardNormal.sample(rng);
        gate_gain[i] = fading * (-sigma * shadow).exp();
        backoff[i] = rng.random_range(0.0..tau);
    }
    RoundState { gate_gain, backoff }
}

// ======================================================================
// Resolution
// ======================================================================

/// One AP that entered contention this round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contender {
    pub ap: u32,
    pub tier: u32,
    pub backoff: f64,
}

/// Result of resolving one round.
#[derive(Debug, Clone)]
pub struct ContentionOutcome {
    /// Per-AP: entered contention this round.
    pub contending: Vec<bool>,
    /// Per-AP: granted the channel this round.
    pub granted: Vec<bool>,
    /// All contenders, in AP order.
    pub contenders: Vec<Contender>,
    pub per_tier_contending: Vec<u32>,
    pub per_tier_granted: Vec<u32>,
}

/// Resolve a drawn round.
///
/// An AP contends when its tier has a finite backoff window, its gain clears
/// the network's opportunistic threshold, and (when `voids` is given) it
/// serves at least one background user. Grants follow the hard-core rule
/// over the contender set.
pub fn resolve(
    dep: &Deployment,
    network: &NetworkConfig,
    state: &RoundState,
    voids: Option<&AssociationMap>,
) -> ContentionOutcome {
    let delta = network.channel.gain_threshold;
    let n = dep.aps.len();
    let k_total = network.num_tiers();
    let mut contending = vec![false; n];
    let mut granted = vec![false; n];
    let mut contenders = Vec::new();
    let mut per_tier_contending = vec![0_u32; k_total];
    let mut per_tier_granted = vec![0_u32; k_total];

    let mut entries = Vec::new();
    for (i, ap) in dep.aps.iter().enumerate() {
        if state.gate_gain[i] < delta {
            continue;
        }
        if let Some(map) = voids {
            if map.tagged_count[i] == 0 {
                continue;
            }
        }
        contending[i] = true;
        per_tier_contending[ap.tier as usize] += 1;
        contenders.push(Contender {
            ap: i as u32,
            tier: ap.tier,
            backoff: state.backoff[i],
        });
        entries.push(GridEntry {
            x: ap.pos.x,
            y: ap.pos.y,
            key: state.backoff[i],
            idx: i as u32,
            tag: ap.tier,
        });
    }

    let grid = UniformGrid::build(
        dep.window.radius,
        dep.window.boundary,
        entries,
        GRID_TARGET_PER_CELL,
    );
    for c in &contenders {
        let i = c.ap as usize;
        let r_sense = network.tiers[c.tier as usize].sensing_radius;
        let pos = dep.aps[i].pos;
        let mut denied = false;
        grid.for_each_within(pos, r_sense, |entry, _d2| {
            if entry.idx != c.ap
                && (entry.key < c.backoff || (entry.key == c.backoff && entry.idx < c.ap))
            {
                denied = true;
            }
        });
        if !denied {
            granted[i] = true;
            per_tier_granted[c.tier as usize] += 1;
        }
    }

    ContentionOutcome {
        contending,
        granted,
        contenders,
        per_tier_contending,
        per_tier_granted,
    }
}

// ======================================================================
// Empirical channel access probability
// ======================================================================

/// Fraction of contention entries that were granted, for tier `tier`,
/// pooled over `(deployment, outcome)` rounds.
///
/// `guard` excludes APs near an open window's edge. Signals when the tier
/// never contends across all supplied rounds.
pub fn empirical_access_probability<'a, I>(runs: I, tier: usize, guard: f64) -> Result<Estimate>
where
    I: IntoIterator<Item = (&'a Deployment, &'a ContentionOutcome)>,
{
    let mut grants = 0_u64;
    let mut trials = 0_u64;
    for (dep, outcome) in runs {
        if tier >= dep.num_tiers() {
            return Err(Error::config(format!(
                "tier {tier} out of range for a {}-tier deployment",
                dep.num_tiers()
            )));
        }
        for i in dep.tier_ranges[tier].clone() {
            if !outcome.contending[i] || !dep.window.interior(dep.aps[i].pos, guard) {
                continue;
            }
            trials += 1;
            if outcome.granted[i] {
                grants += 1;
            }
        }
    }
    if trials == 0 {
        return Err(Error::insufficient(format!(
            "tier {tier} never contended across the supplied rounds"
        )));
    }
    Ok(binomial_estimate(grants, trials))
}

// ======================================================================
// Mean contention areas
// ======================================================================

/// Mean area of a tier-k AP's sensing disk in which tier-m contenders can
/// suppress it, `a[k][m]`, for the closed-form access model.
#[derive(Debug, Clone)]
pub struct MeanAreaTable {
    pub a: Vec<Vec<f64>>,
    pub mode: AssociationMode,
}

impl MeanAreaTable {
    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.a[k][m]
    }
}

/// Compute the mean contention area table.
///
/// A tier-k AP senses a disk of radius `r_sense_k`. The AP's tagged user
/// carves out of that disk the region where tier-m APs cannot lie: a tier-m
/// AP closer to the user than its weighted-power exclusion radius would have
/// captured the user instead. The entry averages the unprotected sensing
/// area over the weighted serving distance and the shadowing of both sides:
/// the sensing disk minus its lens overlap with the exclusion disk centered
/// at the user. In noncrossing mode the unlicensed tier column keeps the
/// full sensing area (unlicensed contenders ignore licensed-band cells); in
/// crossing mode every tier is exclusion-carved.
pub fn estimate_mean_areas(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    settings: &QuadratureSettings,
) -> Result<MeanAreaTable> {
    settings.validate()?;
    let stats = AssocStats::from_config(network, policy)?;
    let k_total = network.num_tiers();
    let unl = network.unlicensed_tier();
    let inv_alpha = 1.0 / network.channel.pathloss_exponent;
    let sigma = network.channel.sigma_ln();

    // Shadowing nodes for one side of the exclusion geometry; weights are
    // normalized Gauss-Hermite weights over the lognormal scale factors.
    let shadowed = matches!(policy.scheme, WeightScheme::PowerOverShadow) && sigma > 0.0;
    let (scales, weights): (Vec<f64>, Vec<f64>) = if shadowed {
        let (xs, ws) = gauss_hermite_cached(settings.gh_nodes);
        let norm = std::f64::consts::PI.sqrt();
        (
            xs.iter().map(|x| (sigma * std::f64::consts::SQRT_2 * x).exp()).collect(),
            ws.iter().map(|w| w / norm).collect(),
        )
    } else {
        (vec![1.0], vec![1.0])
    };

    let weight_scale = |tier: usize| -> f64 {
        match &policy.scheme {
            WeightScheme::PerTier(w) => w[tier].powf(inv_alpha),
            WeightScheme::PowerOverShadow => network.tiers[tier].power.powf(inv_alpha),
        }
    };

    let mut table = vec![vec![0.0; k_total]; k_total];
    for k in 0..k_total {
        let r_sense = network.tiers[k].sensing_radius;
        let full = std::f64::consts::PI * r_sense * r_sense;
        let elig = match (policy.mode, k == unl) {
            (AssociationMode::Crossing, _) => Eligibility::AllTiers,
            (AssociationMode::NonCrossing, false) => Eligibility::LicensedTiers,
            (AssociationMode::NonCrossing, true) => Eligibility::UnlicensedTier,
        };
        let lam = stats.sum_lambda_w(elig);
        for m in 0..k_total {
            if policy.mode == AssociationMode::NonCrossing && m == unl {
                table[k][m] = full;
                continue;
            }
            if lam <= 0.0 {
                return Err(Error::config(
                    "mean contention area undefined: serving tier set has zero intensity",
                ));
            }
            // Weighted serving distance x has CDF 1 - exp(-pi lam x^2);
            // substituting u = pi lam x^2 gives an exp(-u)-weighted integral
            // whose integrand is analytic at the origin and whose tail is
            // negligible past U_MAX. Per shadowing node pair (serving side
            // i, excluding side j) the AP-user distance is ws_k*scale_i*x
            // and the exclusion radius around the user is ws_m*scale_j*x.
            const U_MAX: f64 = 60.0;
            let d_base = weight_scale(k);
            let a_base = weight_scale(m);
            let integrand = |u: f64| -> f64 {
                let x = (u / (std::f64::consts::PI * lam)).sqrt();
                let mut acc = 0.0;
                for (si, wi) in scales.iter().zip(weights.iter()) {
                    let d = d_base * si.powf(inv_alpha) * x;
                    let mut inner = 0.0;
                    for (sj, wj) in scales.iter().zip(weights.iter()) {
                        let r_excl = a_base * sj.powf(inv_alpha) * x;
                        inner += wj * disk_minus_lens_area(r_sense, r_excl, d);
                    }
                    acc += wi * inner;
                }
                acc * (-u).exp()
            };
            let integral = integrate(&integrand, 0.0, U_MAX, settings)?;
            table[k][m] = integral.value;
        }
    }
    Ok(MeanAreaTable {
        a: table,
        mode: policy.mode,
    })
}

// ======================================================================
// Hard-core thinning check
// ======================================================================

/// Ratio of observed to Poisson-expected granted-AP pairs closer than
/// `probe_radius`, pooled over rounds.
///
/// Hard-core thinning suppresses close pairs, so the ratio must fall well
/// below one at fractions of the sensing radius. Signals when fewer than a
/// handful of close pairs would be expected even under Poisson placement,
/// since the ratio carries no information there.
pub fn verify_mhpp_thinning<'a, I>(runs: I, probe_radius: f64) -> Result<f64>
where
    I: IntoIterator<Item = (&'a Deployment, &'a ContentionOutcome)>,
{
    if !(probe_radius > 0.0) {
        return Err(Error::config("probe radius must be positive"));
    }
    let mut observed = 0_u64;
    let mut expected = 0.0_f64;
    let r2 = probe_radius * probe_radius;
    for (dep, outcome) in runs {
        let granted: Vec<usize> = (0..dep.aps.len()).filter(|&i| outcome.granted[i]).collect();
        let n = granted.len() as f64;
        expected += n * (n - 1.0) / 2.0 * std::f64::consts::PI * r2 / dep.window.area();
        for (a, &i) in granted.iter().enumerate() {
            for &j in granted.iter().skip(a + 1) {
                if dep.window.dist2(&dep.aps[i].pos, &dep.aps[j].pos) <= r2 {
                    observed += 1;
                }
            }
        }
    }
    if expected < MIN_EXPECTED_PAIRS {
        return Err(Error::insufficient(format!(
            "expected only {expected:.2} close pairs under Poisson placement; \
             supply more rounds or a denser deployment"
        )));
    }
    Ok(observed as f64 / expected)
}

// ======================================================================
// Tests
// ======================================================================
