//! Weighted nearest-AP user association and its closed-form statistics.
//!
//! Responsibilities:
//! - Build a weighted association field over a deployment (per-tier constant
//!   weights, or power-over-shadow weights that fold shadowing into each
//!   AP's long-term mean received power).
//! - Associate background users with APs over the licensed tiers, the
//!   unlicensed tier, or the union of all tiers, and record per-AP tagging
//!   statistics (user counts, closest tagged user) for void estimation.
//! - Closed-form per-tier statistics: equivalent intensities, selection
//!   probabilities under both normalizations, cell-load shape parameters,
//!   void probabilities, and the weighted-distance distribution.
//!
//! The association rule maximizes `W * d^-alpha`, which is equivalent to
//! minimizing `d^2 / W^(2/alpha)`; grid queries therefore carry each AP's
//! `W^(2/alpha)` as the entry key and work in that transformed space.
//!
//! Shadowing enters the shadow-compensating weights in two forms that agree
//! in law for any single user but differ across a population:
//! - Single-position queries ([`WeightedField::serve`]: probe users,
//!   origin-conditioned sampling) read each AP's stored mark, one gain per
//!   user-AP pair as seen from that one position.
//! - Population association ([`WeightedField::serve_user`], [`associate`])
//!   draws an independent gain per user-AP link, so two users of one AP see
//!   distinct shadowing. Cell loads then carry the variance the closed-form
//!   load model encodes; sharing one mark per AP would instead produce
//!   heavier cell-size tails and visibly inflated void probabilities at
//!   high user load.

use crate::config::{AssociationMode, AssociationPolicy, NetworkConfig, WeightScheme};
use crate::geom::{Boundary, GridEntry, UniformGrid, Vec2};
use crate::ppp::Deployment;
use crate::quad::lognormal_moment;
use crate::rng::{link_normal, LINK_NORMAL_CAP};
use crate::stats::{binomial_estimate, Estimate};
use crate::{Error, Result};

/// Target mean entries per grid cell when bucketing APs.
const GRID_TARGET_PER_CELL: f64 = 2.0;

/// Shape parameter of the cell-load model for equally weighted APs.
///
/// The association cell area of a typical AP is well approximated by a Gamma
/// random variable with this shape; random weights inflate it by the product
/// of the +/- 2/alpha weight moments.
pub const BASE_CELL_SHAPE: f64 = 3.5;

// ======================================================================
// Eligibility
// ======================================================================

/// Which user population a position belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserBand {
    /// Subscribes to the licensed-band service.
    Licensed,
    /// Subscribes to the unlicensed-band service.
    Unlicensed,
}

/// Tier set a user may associate with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligibility {
    /// Dual-band tiers only (indices `0..K-1`).
    LicensedTiers,
    /// The unlicensed-only tier (index `K-1`).
    UnlicensedTier,
    /// Every tier.
    AllTiers,
}

/// Tier set for a user of `band` under the given association mode.
pub fn eligibility(mode: AssociationMode, band: UserBand) -> Eligibility {
    match (mode, band) {
        (AssociationMode::NonCrossing, UserBand::Licensed) => Eligibility::LicensedTiers,
        (AssociationMode::NonCrossing, UserBand::Unlicensed) => Eligibility::UnlicensedTier,
        (AssociationMode::Crossing, _) => Eligibility::AllTiers,
    }
}

// ======================================================================
// Weighted field
// ======================================================================

/// Result of one association query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Service {
    /// Global AP index into `Deployment::aps`.
    pub ap: u32,
    /// Tier of the serving AP.
    pub tier: u32,
    /// Squared weighted distance `d^2 / W^(2/alpha)` of the serving AP.
    pub weighted_dist2: f64,
    /// Squared physical distance of the serving AP.
    pub dist2: f64,
}

/// Spatial index answering weighted nearest-AP queries for one deployment.
#[derive(Debug, Clone)]
pub struct WeightedField {
    grid: UniformGrid,
    max_key_licensed: f64,
    max_key_unlicensed: f64,
    max_key_all: f64,
    unlicensed_tier: u32,
    /// Stored grid key per AP, indexed by global AP id.
    static_key: Vec<f64>,
    /// Tier per AP, indexed by global AP id.
    ap_tier: Vec<u32>,
    /// Shadow-free key per tier, `W_k^(2/alpha)` with the link draw removed.
    tier_key: Vec<f64>,
    /// Log-scale of the per-link factor, `2 sigma_ln / alpha`; zero turns
    /// the population path into the static one.
    link_scale: f64,
    /// Salt of the deployment's per-link draws.
    link_salt: u64,
    /// Upper bounds on the per-link key over each eligible tier set.
    max_link_licensed: f64,
    max_link_unlicensed: f64,
    max_link_all: f64,
}

impl WeightedField {
    /// Build the field from a deployment under the given policy.
    pub fn build(
        dep: &Deployment,
        network: &NetworkConfig,
        policy: &AssociationPolicy,
    ) -> Result<Self> {
        network.validate()?;
        policy.validate(network)?;
        if dep.num_tiers() != network.num_tiers() {
            return Err(Error::config(format!(
                "deployment has {} tiers but the network defines {}",
                dep.num_tiers(),
                network.num_tiers()
            )));
        }
        let two_over_alpha = network.channel.two_over_alpha();
        let unl = network.unlicensed_tier() as u32;

        let mut entries = Vec::with_capacity(dep.aps.len());
        let mut max_key = [0.0_f64; 2]; // [licensed, unlicensed]
        for (i, ap) in dep.aps.iter().enumerate() {
            let weight = match &policy.scheme {
                WeightScheme::PerTier(w) => w[ap.tier as usize],
                WeightScheme::PowerOverShadow => {
                    network.tiers[ap.tier as usize].power * ap.shadow_inv
                }
            };
            let key = weight.powf(two_over_alpha);
            let slot = usize::from(ap.tier == unl);
            max_key[slot] = max_key[slot].max(key);
            entries.push(GridEntry {
                x: ap.pos.x,
                y: ap.pos.y,
                key,
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
        Ok(WeightedField {
            grid,
            max_key_licensed: max_key[0],
            max_key_unlicensed: max_key[1],
            max_key_all: max_key[0].max(max_key[1]),
            unlicensed_tier: unl,
        })
    }

    /// Serving AP for a user at `pos` restricted to `elig`, or `None` when
    /// the eligible tier set holds no AP in this deployment.
    pub fn serve(&self, pos: Vec2, elig: Eligibility) -> Option<Service> {
        let unl = self.unlicensed_tier;
        let found = match elig {
            Eligibility::LicensedTiers => {
                self.grid
                    .weighted_nearest(pos, self.max_key_licensed, |tag| tag != unl)
            }
            Eligibility::UnlicensedTier => {
                self.grid
                    .weighted_nearest(pos, self.max_key_unlicensed, |tag| tag == unl)
            }
            Eligibility::AllTiers => self.grid.weighted_nearest(pos, self.max_key_all, |_| true),
        }?;
        let (entry, weighted_dist2) = found;
        let ap_pos = Vec2::new(entry.x, entry.y);
        let dist2 = match self.grid.boundary() {
            Boundary::Open => pos.dist2(&ap_pos),
            Boundary::Wrapped => pos.torus_dist2(&ap_pos, self.grid.half_side()),
        };
        Some(Service {
            ap: entry.idx,
            tier: entry.tag,
            weighted_dist2,
            dist2,
        })
    }
}

// ======================================================================
// Association of a full user population
// ======================================================================

/// Closest tagged user of an AP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstUser {
    /// Combined user index (licensed users first, then unlicensed users).
    pub user: u32,
    pub weighted_dist2: f64,
    pub dist2: f64,
}

/// Outcome of associating every background user of a deployment.
#[derive(Debug, Clone)]
pub struct AssociationMap {
    /// Serving AP per user in combined order (licensed users first); `None`
    /// when the user's eligible tier set holds no AP in this deployment.
    pub serving: Vec<Option<Service>>,
    /// Number of users tagged to each AP (indexed like `Deployment::aps`).
    pub tagged_count: Vec<u32>,
    /// Closest tagged user per AP, by weighted distance.
    pub first_user: Vec<Option<FirstUser>>,
    /// How many leading entries of `serving` are licensed-band users.
    pub num_licensed_users: usize,
}

impl AssociationMap {
    /// True when the AP serves no background user.
    pub fn is_void(&self, ap: usize) -> bool {
        self.tagged_count[ap] == 0
    }
}

/// Field plus the association map it produced.
#[derive(Debug)]
pub struct AssociationResult {
    pub field: WeightedField,
    pub map: AssociationMap,
}

/// Associate every background user of `dep` under `policy`.
///
/// Licensed users take the licensed tier set in noncrossing mode and the
/// union set in crossing mode; unlicensed users mirror that. Signals a
/// configuration error when a nonempty user population has an empty eligible
/// tier set (licensed users in a single-tier unlicensed network).
pub fn associate(
    dep: &Deployment,
    network: &NetworkConfig,
    policy: &AssociationPolicy,
) -> Result<AssociationResult> {
    let field = WeightedField::build(dep, network, policy)?;
    if policy.mode == AssociationMode::NonCrossing
        && !dep.users_licensed.is_empty()
        && network.licensed_tiers().is_empty()
    {
        return Err(Error::config(
            "licensed users present but the network has no licensed tiers to serve them",
        ));
    }

    let n_users = dep.users_licensed.len() + dep.users_unlicensed.len();
    let mut serving = Vec::with_capacity(n_users);
    let mut tagged_count = vec![0_u32; dep.aps.len()];
    let mut first_user: Vec<Option<FirstUser>> = vec![None; dep.aps.len()];

    let populations = [
        (&dep.users_licensed, UserBand::Licensed),
        (&dep.users_unlicensed, UserBand::Unlicensed),
    ];
    let mut user_idx = 0_u32;
    for (users, band) in populations {
        let elig = eligibility(policy.mode, band);
        for pos in users.iter() {
            let service = field.serve(*pos, elig);
            if let Some(s) = service {
                let ap = s.ap as usize;
                tagged_count[ap] += 1;
                let closer = first_user[ap]
                    .map(|f| s.weighted_dist2 < f.weighted_dist2)
                    .unwrap_or(true);
                if closer {
                    first_user[ap] = Some(FirstUser {
                        user: user_idx,
                        weighted_dist2: s.weighted_dist2,
                        dist2: s.dist2,
                    });
                }
            }
            serving.push(service);
            user_idx += 1;
        }
    }

    Ok(AssociationResult {
        field,
        map: AssociationMap {
            serving,
            tagged_count,
            first_user,
            num_licensed_users: dep.users_licensed.len(),
        },
    })
}

// ======================================================================
// Empirical void probability
// ======================================================================

/// Fraction of tier-`tier` APs serving no background user, pooled over runs.
///
/// `guard` is the boundary margin in meters: APs closer than `guard` to the
/// window edge are excluded to avoid clipped association cells. Wrapped
/// windows have no edge, so the guard never excludes anything there. Signals
/// when no AP of the tier survives the guard filter.
pub fn empirical_void_probability<'a, I>(runs: I, tier: usize, guard: f64) -> Result<Estimate>
where
    I: IntoIterator<Item = (&'a Deployment, &'a AssociationMap)>,
{
    let mut voids = 0_u64;
    let mut total = 0_u64;
    for (dep, map) in runs {
        if tier >= dep.num_tiers() {
            return Err(Error::config(format!(
                "tier {tier} out of range for a {}-tier deployment",
                dep.num_tiers()
            )));
        }
        for i in dep.tier_ranges[tier].clone() {
            if !dep.window.interior(dep.aps[i].pos, guard) {
                continue;
            }
            total += 1;
            if map.tagged_count[i] == 0 {
                voids += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::insufficient(format!(
            "no tier-{tier} AP inside the guard region across the supplied runs"
        )));
    }
    Ok(binomial_estimate(voids, total))
}

// ======================================================================
// Closed-form association statistics
// ======================================================================

/// Per-tier closed-form association statistics for a (network, policy) pair.
#[derive(Debug, Clone)]
pub struct AssocStats {
    /// Equivalent intensity per tier: `lambda_k * E[W_k^(2/alpha)]`.
    pub lambda_w: Vec<f64>,
    /// Interference-equivalent intensity per tier:
    /// `lambda_k * E[W_k^(2/alpha)] * E[W_k^(-2/alpha)]`.
    pub lambda_tilde: Vec<f64>,
    /// Cell-load shape parameter per tier.
    pub zeta: Vec<f64>,
    /// Selection probabilities normalized over the licensed tiers, with the
    /// unlicensed entry carrying the same ratio (used by the unlicensed-band
    /// interference terms). All zero when the network has no licensed tier.
    pub theta_licensed: Vec<f64>,
    /// Selection probabilities normalized over all tiers.
    pub theta_all: Vec<f64>,
    pub sum_lambda_w_licensed: f64,
    pub sum_lambda_w_unlicensed: f64,
    pub sum_lambda_w_all: f64,
}

/// `E[W_tier^c]` for the policy's weight model.
pub fn weight_moment(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    tier: usize,
    c: f64,
) -> f64 {
    match &policy.scheme {
        WeightScheme::PerTier(w) => w[tier].powf(c),
        WeightScheme::PowerOverShadow => {
            network.tiers[tier].power.powf(c)
                * lognormal_moment(c, network.channel.sigma_ln())
        }
    }
}

impl AssocStats {
    pub fn from_config(network: &NetworkConfig, policy: &AssociationPolicy) -> Result<Self> {
        network.validate()?;
        policy.validate(network)?;
        let k_total = network.num_tiers();
        let unl = network.unlicensed_tier();
        let two_over_alpha = network.channel.two_over_alpha();

        let mut lambda_w = Vec::with_capacity(k_total);
        let mut lambda_tilde = Vec::with_capacity(k_total);
        let mut zeta = Vec::with_capacity(k_total);
        for (k, tier) in network.tiers.iter().enumerate() {
            let m_plus = weight_moment(network, policy, k, two_over_alpha);
            let m_minus = weight_moment(network, policy, k, -two_over_alpha);
            lambda_w.push(tier.intensity * m_plus);
            lambda_tilde.push(tier.intensity * m_plus * m_minus);
            zeta.push(BASE_CELL_SHAPE * m_plus * m_minus);
        }

        let sum_licensed: f64 = lambda_w[..unl].iter().sum();
        let sum_all: f64 = lambda_w.iter().sum();
        let theta_licensed = if sum_licensed > 0.0 {
            lambda_w.iter().map(|l| l / sum_licensed).collect()
        } else {
            vec![0.0; k_total]
        };
        let theta_all = lambda_w.iter().map(|l| l / sum_all).collect();

        Ok(AssocStats {
            sum_lambda_w_unlicensed: lambda_w[unl],
            sum_lambda_w_licensed: sum_licensed,
            sum_lambda_w_all: sum_all,
            lambda_w,
            lambda_tilde,
            zeta,
            theta_licensed,
            theta_all,
        })
    }

    /// Total equivalent intensity of the eligible tier set.
    pub fn sum_lambda_w(&self, elig: Eligibility) -> f64 {
        match elig {
            Eligibility::LicensedTiers => self.sum_lambda_w_licensed,
            Eligibility::UnlicensedTier => self.sum_lambda_w_unlicensed,
            Eligibility::AllTiers => self.sum_lambda_w_all,
        }
    }
}

/// Closed-form void probability of a tier-`tier` AP.
///
/// The mean cell load is the user intensity carried by the tier divided by
/// its AP intensity; a Gamma cell-size model with the tier's shape parameter
/// turns that load into a void probability.
pub fn analytic_void_probability(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    tier: usize,
) -> Result<f64> {
    let stats = AssocStats::from_config(network, policy)?;
    void_probability_from_stats(&stats, network, policy.mode, tier)
}

/// As [`analytic_void_probability`], reusing precomputed statistics.
pub fn void_probability_from_stats(
    stats: &AssocStats,
    network: &NetworkConfig,
    mode: AssociationMode,
    tier: usize,
) -> Result<f64> {
    if tier >= network.num_tiers() {
        return Err(Error::config(format!(
            "tier {tier} out of range for a {}-tier network",
            network.num_tiers()
        )));
    }
    let unl = network.unlicensed_tier();
    let load = match mode {
        AssociationMode::NonCrossing => {
            if tier == unl {
                network.user_intensity_unlicensed
            } else {
                network.user_intensity_licensed * stats.theta_licensed[tier]
            }
        }
        AssociationMode::Crossing => {
            (network.user_intensity_licensed + network.user_intensity_unlicensed)
                * stats.theta_all[tier]
        }
    };
    let zeta = stats.zeta[tier];
    let lambda = network.tiers[tier].intensity;
    Ok((1.0 + load / (zeta * lambda)).powf(-zeta))
}

/// CDF of the weighted serving distance for the eligible tier set.
///
/// The weighted points of the eligible tiers pool into one field of
/// intensity `sum_lambda_w`, so the weighted serving distance is the nearest
/// point of that field: `F(x) = 1 - exp(-pi x^2 sum_lambda_w)`. The same law
/// holds conditioned on any serving tier.
pub fn weighted_distance_cdf(stats: &AssocStats, elig: Eligibility, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let lam = stats.sum_lambda_w(elig);
    1.0 - (-std::f64::consts::PI * x * x * lam).exp()
}

/// Boundary margin that keeps association cells of boundary APs unclipped
/// with probability `quantile` per user.
///
/// The weighted serving distance has the closed-form CDF above; its
/// `quantile` point is scaled back to a physical distance with the largest
/// plausible weight (the tier power times a three-sigma shadowing factor).
pub fn guard_distance(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    elig: Eligibility,
    quantile: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&quantile) {
        return Err(Error::config("guard quantile must lie in [0, 1)"));
    }
    let stats = AssocStats::from_config(network, policy)?;
    let lam = stats.sum_lambda_w(elig);
    if lam <= 0.0 {
        return Err(Error::config(
            "guard distance undefined: eligible tier set has zero equivalent intensity",
        ));
    }
    let x_q = (-(1.0 - quantile).ln() / (std::f64::consts::PI * lam)).sqrt();
    let inv_alpha = 1.0 / network.channel.pathloss_exponent;
    let unl = network.unlicensed_tier();
    let tiers: Vec<usize> = match elig {
        Eligibility::LicensedTiers => network.licensed_tiers().collect(),
        Eligibility::UnlicensedTier => vec![unl],
        Eligibility::AllTiers => (0..network.num_tiers()).collect(),
    };
    let shadow_tail = match &policy.scheme {
        WeightScheme::PerTier(_) => 1.0,
        WeightScheme::PowerOverShadow => {
            (3.0 * network.channel.sigma_ln() * inv_alpha).exp()
        }
    };
    let mut guard = 0.0_f64;
    for k in tiers {
        let w_scale = match &policy.scheme {
            WeightScheme::PerTier(w) => w[k].powf(inv_alpha),
            WeightScheme::PowerOverShadow => network.tiers[k].power.powf(inv_alpha),
        };
        guard = guard.max(w_scale * shadow_tail * x_q);
    }
    Ok(guard)
}

// ======================================================================
// Tests
// ======================================================================
