//! Closed-form network performance for both association modes:
//!
//! - [`ell`]: the interference functional that every SIR expression reduces
//!   to under power-law path loss
//! - [`gain_threshold_probability`]: chance that an AP's composite channel
//!   gain clears the contention gate
//! - [`access_probabilities`]: per-tier unlicensed channel-access
//!   probabilities under prioritized uniform backoffs
//! - [`coverage_bounds`]: per-band coverage lower bounds together with their
//!   saturation limits (the values approached as user intensities diverge)
//! - [`capacity_bounds`]: spectrum-efficiency and per-area capacity lower
//!   bounds assembled from the coverage bounds by a rate integral
//!
//! Everything here is a pure function of a validated [`NetworkConfig`] and
//! [`AssociationPolicy`]; the Monte Carlo counterparts live in
//! [`crate::csma`] and [`crate::sir`].

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::assoc::{void_probability_from_stats, AssocStats};
use crate::config::{AssociationMode, AssociationPolicy, NetworkConfig};
use crate::csma::MeanAreaTable;
use crate::error::{Error, Result};
use crate::quad::{gauss_hermite_cached, integrate, lognormal_moment, QuadratureSettings};

// ======================================================================
// Interference functional
// ======================================================================

/// `pi z / sin(pi z)`, the closed form of the unguarded interference
/// integral; multiplies `x^z` when the exclusion argument is `+INFINITY`.
fn sin_ratio(z: f64) -> f64 {
    PI * z / (PI * z).sin()
}

fn check_ell_inputs(x: f64, y: f64, z: f64) -> Result<()> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::config(format!(
            "interference exponent must lie in (0, 1): got {z}"
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::config(format!(
            "threshold scale must be >= 0 and finite: got {x}"
        )));
    }
    if !(y >= 0.0) {
        return Err(Error::config(format!(
            "exclusion argument must be >= 0 (may be +inf): got {y}"
        )));
    }
    Ok(())
}

/// Interference functional `ell(x, y; z)`.
///
/// `x` scales the SIR threshold seen by the serving link, `y` controls how
/// close interferers may come (`+INFINITY` means they are unguarded and the
/// integral term vanishes), and `z = 2/alpha`. The function is increasing in
/// both `x` and `y` and satisfies `ell(x, +inf; z) = x^z * pi z / sin(pi z)`.
///
/// `z = 1/2` (path-loss exponent 4) evaluates in closed form
/// `sqrt(x) * atan(sqrt(y))`; other exponents integrate a finite, smooth
/// transform of the defining integral to the requested tolerance.
pub fn ell(x: f64, y: f64, z: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_ell_inputs(x, y, z)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(x.powf(z) * sin_ratio(z));
    }
    if (z - 0.5).abs() < 1e-14 {
        return Ok(x.sqrt() * y.sqrt().atan());
    }
    ell_by_quadrature(x, y, z, settings)
}

/// As [`ell`], but always via quadrature: exercises the integral path even
/// where a closed form exists, so the two can be checked against each other.
pub fn ell_quadrature(x: f64, y: f64, z: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_ell_inputs(x, y, z)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(x.powf(z) * sin_ratio(z));
    }
    ell_by_quadrature(x, y, z, settings)
}

/// Exact rewrite of the defining integral on a finite interval:
/// `ell = x^z (pi z / sin(pi z) - int_0^{y^{-z}} dt / (1 + t^{1/z}))`
/// equals `x^z * z/(1-z) * int_0^{y^{1-z}} dw / (1 + w^{1/(1-z)})`,
/// whose integrand is bounded by 1 and smooth on the whole interval.
fn ell_by_quadrature(x: f64, y: f64, z: f64, settings: &QuadratureSettings) -> Result<f64> {
    let inv = 1.0 / (1.0 - z);
    let upper = y.powf(1.0 - z);
    let integral = integrate(&|w: f64| 1.0 / (1.0 + w.powf(inv)), 0.0, upper, settings)?;
    Ok(x.powf(z) * z * inv * integral.value)
}

// ======================================================================
// Contention gate
// ======================================================================

/// Probability that an AP's composite own-link gain `H / G` clears the
/// contention threshold: `E_G[exp(-delta * G)]` with `H` unit-exponential
/// and `G` log-normal with the given natural-log standard deviation.
pub fn gain_threshold_probability(delta: f64, sigma_ln: f64, gh_nodes: usize) -> Result<f64> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::config(format!(
            "gain threshold must be >= 0 and finite: got {delta}"
        )));
    }
    if !(sigma_ln >= 0.0) || !sigma_ln.is_finite() {
        return Err(Error::config(format!(
            "shadowing sigma must be >= 0 and finite: got {sigma_ln}"
        )));
    }
    if gh_nodes == 0 {
        return Err(Error::config("need at least one quadrature node"));
    }
    if delta == 0.0 {
        return Ok(1.0);
    }
    if sigma_ln == 0.0 {
        return Ok((-delta).exp());
    }
    let (nodes, weights) = gauss_hermite_cached(gh_nodes);
    let norm = 1.0 / PI.sqrt();
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        let g = (SQRT_2 * sigma_ln * x).exp();
        acc += w * (-delta * g).exp();
    }
    Ok(acc * norm)
}

// ======================================================================
// Channel-access probabilities
// ======================================================================

/// `(1 - exp(-u)) / u`, continuous at zero (series below the cancellation
/// range of `exp_m1`).
fn one_minus_exp_over(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u / 2.0 + u * u / 6.0
    } else {
        -f64::exp_m1(-u) / u
    }
}

/// Access probability when every contending tier shares one backoff range:
/// `(1 - exp(-tau * n)) / (tau * n)` for a pooled contender intensity `n`
/// (already weighted by the sensing areas). The general interval formula in
/// [`access_probabilities`] collapses to this value under equal backoffs.
pub fn equal_backoff_access(tau: f64, pooled_intensity: f64) -> f64 {
    one_minus_exp_over(tau * pooled_intensity)
}

/// Per-tier unlicensed channel-access probabilities plus the intermediates
/// they are assembled from.
#[derive(Debug, Clone)]
pub struct AccessProbabilities {
    /// Association mode the void probabilities were computed under.
    pub mode: AssociationMode,
    /// Gate probability `p`: chance an AP's own gain clears the threshold.
    pub gate_probability: f64,
    /// Per-tier void probability under `mode`.
    pub nu: Vec<f64>,
    /// Access probability per tier; `None` for tiers that never contend.
    pub rho: Vec<Option<f64>>,
    /// Interval-decomposed contender intensities `lambda_bar[j][m]`:
    /// the backoff axis is split at the contenders' maxima, row `j` is the
    /// interval ending at the `j`-th contender's maximum, and column `m`
    /// holds the intensity contributed by the `m`-th contender inside that
    /// interval (zero above the diagonal). Indices are positions in
    /// [`AccessProbabilities::contenders`].
    pub lambda_bar: Vec<Vec<f64>>,
    /// Tier indices of the contending tiers, in tier order (backoff maxima
    /// non-increasing along this list).
    pub contenders: Vec<usize>,
}

/// Evaluate the per-tier access probabilities of the prioritized
/// listen-before-talk scheme with uniform backoffs.
///
/// A tier-`m` AP contends when it is non-void and its own gain clears the
/// gate; contenders win when no rival with an earlier backoff sits inside
/// the mean sensing region, giving, per backoff interval, an exponential
/// survival term in the accumulated contender intensity. `areas` must be the
/// mean sensing-region table for the same association mode.
pub fn access_probabilities(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    areas: &MeanAreaTable,
    settings: &QuadratureSettings,
) -> Result<AccessProbabilities> {
    network.validate()?;
    policy.validate(network)?;
    settings.validate()?;
    let k_total = network.num_tiers();
    if areas.mode != policy.mode {
        return Err(Error::config(
            "mean-area table was built for the other association mode",
        ));
    }
    if areas.a.len() != k_total || areas.a.iter().any(|row| row.len() != k_total) {
        return Err(Error::config(format!(
            "mean-area table must be {k_total} x {k_total}"
        )));
    }

    let stats = AssocStats::from_config(network, policy)?;
    let p = gain_threshold_probability(
        network.channel.gain_threshold,
        network.channel.sigma_ln(),
        settings.gh_nodes,
    )?;
    let mut nu = Vec::with_capacity(k_total);
    for tier in 0..k_total {
        nu.push(void_probability_from_stats(&stats, network, policy.mode, tier)?);
    }

    let contenders: Vec<usize> = (0..k_total)
        .filter(|&m| network.tiers[m].contends())
        .collect();
    let n = contenders.len();
    let mut rho: Vec<Option<f64>> = vec![None; k_total];
    if n == 0 {
        return Ok(AccessProbabilities {
            mode: policy.mode,
            gate_probability: p,
            nu,
            rho,
            lambda_bar: Vec::new(),
            contenders,
        });
    }

    let tau: Vec<f64> = contenders
        .iter()
        .map(|&m| network.tiers[m].max_backoff.expect("contender has a backoff"))
        .collect();
    for pair in tau.windows(2) {
        if pair[1] > pair[0] {
            return Err(Error::config(
                "contending tiers must have non-increasing backoff ranges",
            ));
        }
    }

    // lambda_bar[j][m]: intensity of m-th contenders whose backoff falls in
    // the interval (tau[j+1], tau[j]], thinned by the gate and void state.
    let mut lambda_bar = vec![vec![0.0; n]; n];
    for j in 0..n {
        let upper = tau[j];
        let lower = if j + 1 < n { tau[j + 1] } else { 0.0 };
        for (m, &tier) in contenders.iter().enumerate().take(j + 1) {
            lambda_bar[j][m] =
                p * (1.0 - nu[tier]) * stats.lambda_tilde[tier] * (upper - lower) / tau[m];
        }
    }

    // Survival integral over one interval: int_0^a exp(-s t) dt.
    let f = |a: f64, s: f64| a * one_minus_exp_over(a * s);
    for (k, &tier_k) in contenders.iter().enumerate() {
        let accumulated = |j: usize| -> f64 {
            (0..=j)
                .map(|m| areas.get(tier_k, contenders[m]) * lambda_bar[j][m])
                .sum()
        };
        let mut total = f(tau[n - 1], accumulated(n - 1));
        for j in k..n - 1 {
            let s = accumulated(j);
            total += f(tau[j], s) - f(tau[j + 1], s);
        }
        rho[tier_k] = Some(total / tau[k]);
    }

    Ok(AccessProbabilities {
        mode: policy.mode,
        gate_probability: p,
        nu,
        rho,
        lambda_bar,
        contenders,
    })
}

// ======================================================================
// Coverage bounds
// ======================================================================

/// Coverage lower bounds, their saturation limits, and the intermediate
/// quantities they are assembled from, at one SIR threshold.
#[derive(Debug, Clone)]
pub struct BoundSet {
    /// Association mode of every value in this set.
    pub mode: AssociationMode,
    /// SIR threshold the coverages are evaluated at.
    pub theta: f64,
    /// Licensed-band coverage lower bound for licensed-band users; `None`
    /// when the network has no licensed tier.
    pub licensed_bound: Option<f64>,
    /// Saturation limit of the licensed-band coverage.
    pub licensed_limit: Option<f64>,
    /// Coverage lower bound of licensed-band users on their opportunistic
    /// unlicensed transmissions; `None` without licensed tiers.
    pub opportunistic_bound: Option<f64>,
    /// Saturation limit of the opportunistic coverage.
    pub opportunistic_limit: Option<f64>,
    /// Unlicensed-band coverage lower bound for unlicensed users.
    pub unlicensed_bound: f64,
    /// Saturation limit of the unlicensed coverage.
    pub unlicensed_limit: f64,
    /// Association-share weighted combination of the licensed and unlicensed
    /// coverage bounds (the network-wide coverage seen by a random user).
    pub coexisting_bound: f64,
    /// Saturation limit of the coexisting coverage.
    pub coexisting_limit: f64,
    /// All-tier association shares used by the coexisting combination.
    pub cov_weights: Vec<f64>,
    /// Exclusion arguments of the licensed-user pair terms at unit
    /// shadowing, row per licensed serving tier, column per interferer tier;
    /// `+INFINITY` marks an unguarded tier.
    pub pair_args: Vec<Vec<f64>>,
    /// Exclusion arguments of the unlicensed-user bound at unit shadowing,
    /// one per interferer tier; `+INFINITY` marks an unguarded tier.
    pub unlicensed_args: Vec<f64>,
    /// Interval-decomposed contender intensities (see
    /// [`AccessProbabilities::lambda_bar`]).
    pub lambda_bar: Vec<Vec<f64>>,
    /// Transmit-equivalent intensity per tier: access probability times gate
    /// probability times the tier's weighted intensity (zero for tiers that
    /// never contend).
    pub lambda_dagger: Vec<f64>,
    /// Access probability per tier (`None` = never contends).
    pub rho: Vec<Option<f64>>,
    /// Gate probability shared by all tiers.
    pub gate_probability: f64,
    /// Per-tier void probabilities under `mode`.
    pub nu: Vec<f64>,
}

/// Which coefficient set a bound evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    /// Actual void and access probabilities.
    Bound = 0,
    /// Saturation: voids vanish and every contending tier transmits
    /// whenever its gate clears (backoff windows shrink to zero).
    Limit = 1,
}

/// Log-normal expectation axis: multiplier values and probability weights.
/// A zero sigma collapses to the single point 1.
fn lognormal_axis(sigma_ln: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    if sigma_ln == 0.0 {
        return (vec![1.0], vec![1.0]);
    }
    let (x, w) = gauss_hermite_cached(nodes);
    let norm = 1.0 / PI.sqrt();
    (
        x.iter().map(|&xi| (SQRT_2 * sigma_ln * xi).exp()).collect(),
        w.iter().map(|&wi| wi * norm).collect(),
    )
}

/// Precomputed, threshold-independent coefficients of the coverage bounds,
/// letting one configuration be evaluated at many SIR thresholds (as the
/// capacity integrals require).
struct BoundEvaluator<'a> {
    settings: &'a QuadratureSettings,
    mode: AssociationMode,
    z: f64,
    sigma_ln: f64,
    num_licensed: usize,
    /// Non-void association mass in the licensed-band denominator.
    lic_mass: [f64; 2],
    /// Licensed-tier transmit mass weighting the pair kernel of the
    /// opportunistic and (crossing) unlicensed denominators.
    pair_mass: [f64; 2],
    /// Unlicensed-tier coefficient in the opportunistic denominator: under
    /// noncrossing association it multiplies `(R * theta)^z` (unguarded
    /// interferers, shadow-ratio moment folded in); under crossing it
    /// multiplies `ell(theta, theta; z)`.
    opp_unl_coeff: [f64; 2],
    /// Licensed-tier coefficient in the unlicensed-user denominator
    /// (noncrossing only: intensity ratios times transmit activity).
    unl_lic_mass: [f64; 2],
    /// Unlicensed-tier coefficient in the unlicensed-user denominator.
    unl_unl_coeff: [f64; 2],
    /// All-tier association shares (the coexisting-coverage weights).
    cov_weights: Vec<f64>,
    /// Sum of `cov_weights` over the licensed tiers.
    lic_weight_total: f64,
}

impl<'a> BoundEvaluator<'a> {
    fn new(
        network: &NetworkConfig,
        policy: &AssociationPolicy,
        access: &AccessProbabilities,
        settings: &'a QuadratureSettings,
    ) -> Result<Self> {
        let k_total = network.num_tiers();
        let unl = network.unlicensed_tier();
        if access.mode != policy.mode {
            return Err(Error::config(
                "access probabilities were computed for the other association mode",
            ));
        }
        if access.nu.len() != k_total || access.rho.len() != k_total {
            return Err(Error::config(format!(
                "access probabilities cover {} tiers, network has {k_total}",
                access.nu.len()
            )));
        }
        let stats = AssocStats::from_config(network, policy)?;
        let z = network.channel.two_over_alpha();
        let sigma_ln = network.channel.sigma_ln();
        let p = access.gate_probability;

        // Transmit activity per tier: the chance a tier-m AP is on air in
        // the unlicensed band. The saturation variant keeps the gate (it is
        // a channel property, not a load property) but drops voids and
        // backoff losses.
        let mut eff = [vec![0.0; k_total], vec![0.0; k_total]];
        for m in 0..k_total {
            if let Some(rho_m) = access.rho[m] {
                eff[0][m] = (1.0 - access.nu[m]) * rho_m * p;
                eff[1][m] = p;
            }
        }

        // Association share of tier m as seen by the serving user's band.
        let share = |m: usize| match policy.mode {
            AssociationMode::NonCrossing => stats.theta_licensed[m],
            AssociationMode::Crossing => stats.theta_all[m],
        };

        let mut lic_mass = [0.0; 2];
        let mut pair_mass = [0.0; 2];
        let mut unl_lic_mass = [0.0; 2];
        for m in 0..unl {
            lic_mass[0] += (1.0 - access.nu[m]) * share(m);
            lic_mass[1] += share(m);
            for v in 0..2 {
                pair_mass[v] += eff[v][m] * share(m);
                unl_lic_mass[v] += match policy.mode {
                    AssociationMode::NonCrossing => {
                        eff[v][m] * stats.lambda_w[m] / stats.lambda_w[unl]
                    }
                    AssociationMode::Crossing => eff[v][m] * stats.theta_all[m],
                };
            }
        }

        let mut opp_unl_coeff = [0.0; 2];
        let mut unl_unl_coeff = [0.0; 2];
        for v in 0..2 {
            match policy.mode {
                AssociationMode::NonCrossing => {
                    // Serving and interferer shadow ratios are i.i.d.
                    // log-normals with doubled ln-variance; the unguarded
                    // unlicensed term factors into E[R^z] times the closed
                    // form, evaluated against (R_serving * theta)^z later.
                    opp_unl_coeff[v] = eff[v][unl]
                        * stats.theta_licensed[unl]
                        * lognormal_moment(z, SQRT_2 * sigma_ln)
                        * sin_ratio(z);
                    unl_unl_coeff[v] = eff[v][unl];
                }
                AssociationMode::Crossing => {
                    opp_unl_coeff[v] = eff[v][unl] * stats.theta_all[unl];
                    unl_unl_coeff[v] = eff[v][unl] * stats.theta_all[unl];
                }
            }
        }

        let cov_weights = stats.theta_all.clone();
        let lic_weight_total = cov_weights[..unl].iter().sum();

        Ok(BoundEvaluator {
            settings,
            mode: policy.mode,
            z,
            sigma_ln,
            num_licensed: unl,
            lic_mass,
            pair_mass,
            opp_unl_coeff,
            unl_lic_mass,
            unl_unl_coeff,
            cov_weights,
            lic_weight_total,
        })
    }

    /// Licensed-band coverage of licensed-band users.
    fn licensed(&self, theta: f64, v: Variant) -> Result<Option<f64>> {
        if self.num_licensed == 0 {
            return Ok(None);
        }
        let l = ell(theta, theta, self.z, self.settings)?;
        Ok(Some(1.0 / (1.0 + l * self.lic_mass[v as usize])))
    }

    /// Coverage of a licensed-band user's opportunistic unlicensed
    /// transmission. The user's association ignores the unlicensed channel,
    /// so serving and interfering links each carry an unexplored shadowing
    /// ratio `R` (i.i.d. log-normal with doubled ln-variance); the outer
    /// expectation is over the serving ratio, the inner one over the
    /// interferer ratio. The result is identical for every licensed serving
    /// tier (the ratios share one law), so the per-tier weighting collapses.
    fn opportunistic(&self, theta: f64, v: Variant) -> Result<Option<f64>> {
        if self.num_licensed == 0 {
            return Ok(None);
        }
        let i = v as usize;
        let s = self.pair_mass[i];
        let c = self.opp_unl_coeff[i];
        let unl_const = match self.mode {
            AssociationMode::NonCrossing => 0.0,
            AssociationMode::Crossing => c * ell(theta, theta, self.z, self.settings)?,
        };
        let (vals, wts) = lognormal_axis(SQRT_2 * self.sigma_ln, self.settings.gh_nodes);
        let mut acc = 0.0;
        for (&rk, &wk) in vals.iter().zip(&wts) {
            let mut inner = 0.0;
            if s != 0.0 {
                for (&rm, &wm) in vals.iter().zip(&wts) {
                    let a = rk * rm * theta;
                    inner += wm * ell(a, a, self.z, self.settings)?;
                }
            }
            let unl_term = match self.mode {
                AssociationMode::NonCrossing => c * (rk * theta).powf(self.z),
                AssociationMode::Crossing => unl_const,
            };
            acc += wk / (1.0 + s * inner + unl_term);
        }
        Ok(Some(acc))
    }

    /// Unlicensed-band coverage of unlicensed users. Under noncrossing
    /// association the licensed tiers interfere unguarded (closed form);
    /// under crossing association their threshold carries a single bare
    /// shadowing gain, integrated with the same log-normal axis (a
    /// log-normal and its reciprocal share one law).
    fn unlicensed(&self, theta: f64, v: Variant) -> Result<f64> {
        let i = v as usize;
        let guard = ell(theta, theta, self.z, self.settings)?;
        let lic_term = match self.mode {
            AssociationMode::NonCrossing => {
                self.unl_lic_mass[i] * theta.powf(self.z) * sin_ratio(self.z)
            }
            AssociationMode::Crossing => {
                let (vals, wts) = lognormal_axis(self.sigma_ln, self.settings.gh_nodes);
                let mut e = 0.0;
                for (&g, &w) in vals.iter().zip(&wts) {
                    let a = theta * g;
                    e += w * ell(a, a, self.z, self.settings)?;
                }
                self.unl_lic_mass[i] * e
            }
        };
        Ok(1.0 / (1.0 + lic_term + self.unl_unl_coeff[i] * guard))
    }

    /// Association-share weighted network-wide coverage.
    fn coexisting(&self, licensed: Option<f64>, unlicensed: f64) -> f64 {
        let unl_weight = *self.cov_weights.last().expect("at least one tier");
        match licensed {
            Some(l) => self.lic_weight_total * l + unl_weight * unlicensed,
            None => unlicensed,
        }
    }
}

/// Evaluate every coverage lower bound and saturation limit at one SIR
/// threshold. `access` must come from [`access_probabilities`] for the same
/// network and mode.
pub fn coverage_bounds(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    access: &AccessProbabilities,
    theta: f64,
    settings: &QuadratureSettings,
) -> Result<BoundSet> {
    network.validate()?;
    policy.validate(network)?;
    settings.validate()?;
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::config(format!(
            "SIR threshold must be positive and finite: got {theta}"
        )));
    }
    let ev = BoundEvaluator::new(network, policy, access, settings)?;
    let stats = AssocStats::from_config(network, policy)?;
    let k_total = network.num_tiers();
    let unl = network.unlicensed_tier();

    let licensed_bound = ev.licensed(theta, Variant::Bound)?;
    let licensed_limit = ev.licensed(theta, Variant::Limit)?;
    let opportunistic_bound = ev.opportunistic(theta, Variant::Bound)?;
    let opportunistic_limit = ev.opportunistic(theta, Variant::Limit)?;
    let unlicensed_bound = ev.unlicensed(theta, Variant::Bound)?;
    let unlicensed_limit = ev.unlicensed(theta, Variant::Limit)?;
    let coexisting_bound = ev.coexisting(licensed_bound, unlicensed_bound);
    let coexisting_limit = ev.coexisting(licensed_limit, unlicensed_limit);

    // Unit-shadowing exclusion arguments: which interferer tiers are
    // guarded (finite) versus unguarded (+inf) as seen by each user class.
    let pair_args: Vec<Vec<f64>> = (0..unl)
        .map(|_| {
            (0..k_total)
                .map(|m| match policy.mode {
                    AssociationMode::NonCrossing if m == unl => f64::INFINITY,
                    _ => theta,
                })
                .collect()
        })
        .collect();
    let unlicensed_args: Vec<f64> = (0..k_total)
        .map(|m| match policy.mode {
            AssociationMode::NonCrossing if m != unl => f64::INFINITY,
            _ => theta,
        })
        .collect();
    let lambda_dagger: Vec<f64> = (0..k_total)
        .map(|m| {
            access.rho[m].map_or(0.0, |r| r * access.gate_probability * stats.lambda_w[m])
        })
        .collect();

    Ok(BoundSet {
        mode: policy.mode,
        theta,
        licensed_bound,
        licensed_limit,
        opportunistic_bound,
        opportunistic_limit,
        unlicensed_bound,
        unlicensed_limit,
        coexisting_bound,
        coexisting_limit,
        cov_weights: ev.cov_weights.clone(),
        pair_args,
        unlicensed_args,
        lambda_bar: access.lambda_bar.clone(),
        lambda_dagger,
        rho: access.rho.clone(),
        gate_probability: access.gate_probability,
        nu: access.nu.clone(),
    })
}

// ======================================================================
// Capacity bounds
// ======================================================================

/// Spectrum-efficiency integral of a coverage curve:
/// `int_0^inf f(theta) / ((1 + theta) ln 2) dtheta`.
///
/// Substituting `theta = (1 - u^q) / u^q` with `q = max(2, ceil(1/z))` maps
/// the half line onto `(0, 1]` and tames the `theta^{-z}` coverage tail into
/// a bounded integrand (`q z >= 1`). Errors from the integrand propagate.
pub fn rate_integral<F>(f: F, z: f64, settings: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::config(format!(
            "interference exponent must lie in (0, 1): got {z}"
        )));
    }
    settings.validate()?;
    let q = (1.0 / z).ceil().max(2.0);
    let captured: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |u: f64| -> f64 {
        if captured.borrow().is_some() {
            return 0.0;
        }
        let up = u.powf(q);
        let theta = (1.0 - up) / up;
        match f(theta) {
            Ok(v) => q * v / (u * LN_2),
            Err(e) => {
                *captured.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let integral = integrate(&integrand, 0.0, 1.0, settings)?;
    if let Some(e) = captured.into_inner() {
        return Err(e);
    }
    Ok(integral.value)
}

/// Spectrum-efficiency and per-area capacity lower bounds with their
/// saturation limits.
#[derive(Debug, Clone)]
pub struct CapacityBounds {
    /// Association mode of every value in this set.
    pub mode: AssociationMode,
    /// Mean spectrum efficiency of a licensed-band user across both of its
    /// channels (licensed plus opportunistic unlicensed), bps/Hz; `None`
    /// without licensed tiers.
    pub se_licensed_bound: Option<f64>,
    /// Saturation limit of the licensed spectrum efficiency.
    pub se_licensed_limit: Option<f64>,
    /// Mean spectrum efficiency of an unlicensed user, bps/Hz (the
    /// channel-access fraction is folded in).
    pub se_unlicensed_bound: f64,
    /// Saturation limit of the unlicensed spectrum efficiency.
    pub se_unlicensed_limit: f64,
    /// Network capacity: successful spectrum efficiency per unit area
    /// (bps/Hz/m^2) at the configured SIR threshold.
    pub netcap_bound: f64,
    /// Saturation limit of the network capacity.
    pub netcap_limit: f64,
}

/// Assemble the capacity lower bounds from the coverage bounds.
///
/// Licensed users add their opportunistic-channel rate weighted by the
/// fraction of time their tier holds the unlicensed channel; unlicensed
/// users' rate is scaled by their own access fraction. The per-area
/// capacity multiplies each band's rate by the intensity of busy APs and
/// the coverage at the configured operating threshold.
pub fn capacity_bounds(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    access: &AccessProbabilities,
    settings: &QuadratureSettings,
) -> Result<CapacityBounds> {
    network.validate()?;
    policy.validate(network)?;
    settings.validate()?;
    let ev = BoundEvaluator::new(network, policy, access, settings)?;
    let stats = AssocStats::from_config(network, policy)?;
    let z = network.channel.two_over_alpha();
    let unl = network.unlicensed_tier();
    let p = access.gate_probability;

    // Fraction of time the licensed tiers hold the unlicensed channel,
    // weighted by licensed association shares.
    let mut hold = [0.0; 2];
    for m in 0..unl {
        if let Some(rho_m) = access.rho[m] {
            hold[0] += rho_m * p * stats.theta_licensed[m];
            hold[1] += p * stats.theta_licensed[m];
        }
    }

    let (se_licensed_bound, se_licensed_limit) = if unl > 0 {
        let bound = rate_integral(
            |theta| {
                let lic = ev.licensed(theta, Variant::Bound)?.expect("licensed tier");
                let opp = ev.opportunistic(theta, Variant::Bound)?.expect("licensed tier");
                Ok(lic + hold[0] * opp)
            },
            z,
            settings,
        )?;
        let limit = rate_integral(
            |theta| {
                let lic = ev.licensed(theta, Variant::Limit)?.expect("licensed tier");
                let opp = ev.opportunistic(theta, Variant::Limit)?.expect("licensed tier");
                Ok(lic + hold[1] * opp)
            },
            z,
            settings,
        )?;
        (Some(bound), Some(limit))
    } else {
        (None, None)
    };

    let rho_unl = access.rho[unl].ok_or_else(|| {
        Error::config("the unlicensed tier never contends; its capacity is undefined")
    })?;
    let se_unlicensed_bound = rho_unl
        * p
        * rate_integral(|theta| ev.unlicensed(theta, Variant::Bound), z, settings)?;
    let se_unlicensed_limit =
        p * rate_integral(|theta| ev.unlicensed(theta, Variant::Limit), z, settings)?;

    // Per-area capacity at the operating threshold: busy-AP intensity times
    // coverage times per-link rate, per band.
    let theta_op = network.channel.sir_threshold;
    let lambda_unl = network.tiers[unl].intensity;
    let mut netcap_bound = lambda_unl
        * (1.0 - access.nu[unl])
        * ev.unlicensed(theta_op, Variant::Bound)?
        * se_unlicensed_bound;
    let mut netcap_limit =
        lambda_unl * ev.unlicensed(theta_op, Variant::Limit)? * se_unlicensed_limit;
    if unl > 0 {
        let cov_bound = ev.licensed(theta_op, Variant::Bound)?.expect("licensed tier");
        let cov_limit = ev.licensed(theta_op, Variant::Limit)?.expect("licensed tier");
        let se_bound = se_licensed_bound.expect("licensed tier");
        let se_limit = se_licensed_limit.expect("licensed tier");
        for m in 0..unl {
            let lambda_m = network.tiers[m].intensity;
            netcap_bound += lambda_m * (1.0 - access.nu[m]) * cov_bound * se_bound;
            netcap_limit += lambda_m * cov_limit * se_limit;
        }
    }

    Ok(CapacityBounds {
        mode: policy.mode,
        se_licensed_bound,
        se_licensed_limit,
        se_unlicensed_bound,
        se_unlicensed_limit,
        netcap_bound,
        netcap_limit,
    })
}

// ======================================================================
// Tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ChannelParams, TierSpec};
    use crate::csma::estimate_mean_areas;
    use approx::assert_relative_eq;

    fn settings() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    // ------------------------------------------------------------------
    // ell
    // ------------------------------------------------------------------

    #[test]
    fn ell_known_values_at_half() {
        let s = settings();
        // ell(1, 1; 1/2) = atan(1) = pi/4.
        assert_relative_eq!(
            ell(1.0, 1.0, 0.5, &s).unwrap(),
            std::f64::consts::FRAC_PI_4,
            epsilon = 1e-15
        );
        // Unguarded: ell(1, inf; 1/2) = pi/2.
        assert_relative_eq!(
            ell(1.0, f64::INFINITY, 0.5, &s).unwrap(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-15
        );
        // sqrt(0.5) * atan(sqrt(0.5)).
        assert_relative_eq!(
            ell(0.5, 0.5, 0.5, &s).unwrap(),
            0.435_209_875_683_551_6,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ell_quadrature_matches_closed_form() {
        let s = settings();
        for &x in &[0.2f64, 0.5, 1.0, 2.0, 5.0] {
            for &y in &[0.3f64, 1.0, 3.0, 10.0] {
                let closed = x.sqrt() * y.sqrt().atan();
                let quad = ell_quadrature(x, y, 0.5, &s).unwrap();
                assert!(
                    (quad - closed).abs() <= 1e-9,
                    "quadrature {quad} vs closed {closed} at x={x}, y={y}"
                );
            }
        }
    }

    #[test]
    fn ell_matches_its_defining_integral() {
        // Second oracle: the definition integrates 1/(1 + t^(1/z)) from 0 to
        // y^(-z) and subtracts from the unguarded closed form. Both paths
        // must agree away from z = 1/2 as well.
        let s = settings();
        for &z in &[0.35, 0.5, 0.7] {
            for &(x, y) in &[(2.0f64, 3.0f64), (0.7, 0.9), (1.0, 10.0)] {
                let direct = integrate(
                    &|t: f64| 1.0 / (1.0 + t.powf(1.0 / z)),
                    0.0,
                    y.powf(-z),
                    &s,
                )
                .unwrap()
                .value;
                let printed = x.powf(z) * (sin_ratio(z) - direct);
                let ours = ell(x, y, z, &s).unwrap();
                assert_relative_eq!(ours, printed, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn ell_edge_cases_and_monotonicity() {
        let s = settings();
        assert_eq!(ell(0.0, 1.0, 0.5, &s).unwrap(), 0.0);
        assert_eq!(ell(1.0, 0.0, 0.5, &s).unwrap(), 0.0);
        // Increasing in x and in y; unguarded dominates every finite guard.
        let base = ell(1.0, 1.0, 0.4, &s).unwrap();
        assert!(ell(2.0, 1.0, 0.4, &s).unwrap() > base);
        assert!(ell(1.0, 2.0, 0.4, &s).unwrap() > base);
        assert!(ell(1.0, f64::INFINITY, 0.4, &s).unwrap() > ell(1.0, 1e6, 0.4, &s).unwrap());
    }

    #[test]
    fn ell_rejects_bad_inputs() {
        let s = settings();
        assert!(ell(1.0, 1.0, 0.0, &s).is_err());
        assert!(ell(1.0, 1.0, 1.0, &s).is_err());
        assert!(ell(-1.0, 1.0, 0.5, &s).is_err());
        assert!(ell(1.0, -1.0, 0.5, &s).is_err());
        assert!(ell(f64::INFINITY, 1.0, 0.5, &s).is_err());
    }

    #[test]
    fn ell_halved_tolerances_agree() {
        let s = settings();
        let h = s.halved();
        for &z in &[0.35, 0.62] {
            let a = ell_quadrature(1.3, 2.1, z, &s).unwrap();
            let b = ell_quadrature(1.3, 2.1, z, &h).unwrap();
            assert!((a - b).abs() <= 1e-9, "{a} vs {b} at z={z}");
        }
    }

    // ------------------------------------------------------------------
    // Gate probability
    // ------------------------------------------------------------------

    #[test]
    fn gate_probability_known_values() {
        // sigma_dB = sqrt(3): sigma_ln = sqrt(3) ln(10) / 10.
        let sigma_ln = 0.398_819_436_981_639_5;
        let p = gain_threshold_probability(4.481, sigma_ln, 64).unwrap();
        assert_relative_eq!(p, 0.025_157_819_121_579_446, max_relative = 1e-12);
        // No shadowing: plain exponential tail.
        let p0 = gain_threshold_probability(4.481, 0.0, 64).unwrap();
        assert_relative_eq!(p0, (-4.481f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(p0, 0.011_322_085_406_330_872, max_relative = 1e-12);
        // Zero threshold always clears.
        assert_eq!(gain_threshold_probability(0.0, sigma_ln, 64).unwrap(), 1.0);
        // Shadowing spreads the gain distribution and helps at high
        // thresholds: p exceeds the no-shadowing tail.
        assert!(p > p0);
    }

    #[test]
    fn gate_probability_rejects_bad_inputs() {
        assert!(gain_threshold_probability(-1.0, 0.1, 64).is_err());
        assert!(gain_threshold_probability(1.0, -0.1, 64).is_err());
        assert!(gain_threshold_probability(1.0, 0.1, 0).is_err());
    }

    // ------------------------------------------------------------------
    // Access probabilities
    // ------------------------------------------------------------------

    /// Two-tier dual-band + unlicensed network with every tier contending.
    fn two_tier_network(tau0: f64, tau1: f64) -> NetworkConfig {
        NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(2e-5, 1.0, Some(tau0)),
                TierSpec::unlicensed_only(4e-5, 0.5, tau1),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: 1e-4,
            user_intensity_unlicensed: 1e-4,
        }
    }

    fn mmpa(mode: AssociationMode) -> AssociationPolicy {
        AssociationPolicy::shadow_compensating(mode)
    }

    #[test]
    fn equal_backoff_access_series_is_continuous() {
        // Either side of the series switchover agrees to full precision.
        let lo = equal_backoff_access(1.0, 2e-8.to_owned());
        let hi = equal_backoff_access(1.0, 2.0000001e-8);
        assert_relative_eq!(lo, hi, max_relative = 1e-10);
        // Known value at tau * n = 1.
        assert_relative_eq!(
            equal_backoff_access(1.0, 1.0),
            0.632_120_558_828_557_7,
            max_relative = 1e-15
        );
        // Vanishing contention: certain access.
        assert_relative_eq!(equal_backoff_access(1e-12, 3.0), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn access_equal_backoffs_collapse_to_pooled_form() {
        let network = two_tier_network(1.0, 1.0);
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        let stats = AssocStats::from_config(&network, &policy).unwrap();
        let p = access.gate_probability;
        for k in 0..2 {
            let pooled: f64 = (0..2)
                .map(|m| areas.get(k, m) * p * (1.0 - access.nu[m]) * stats.lambda_tilde[m])
                .sum();
            let expected = equal_backoff_access(1.0, pooled);
            assert_relative_eq!(access.rho[k].unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn access_unequal_backoffs_match_literal_interval_sum() {
        let network = two_tier_network(2.0, 1.0);
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        let stats = AssocStats::from_config(&network, &policy).unwrap();
        let p = access.gate_probability;
        let (nu0, nu1) = (access.nu[0], access.nu[1]);
        let (lt0, lt1) = (stats.lambda_tilde[0], stats.lambda_tilde[1]);

        // Interval (1, 2]: only tier 0 contends there; interval (0, 1]:
        // both do. Spell out every term with direct arithmetic.
        let lb00 = p * (1.0 - nu0) * lt0 * (2.0 - 1.0) / 2.0;
        let lb10 = p * (1.0 - nu0) * lt0 * 1.0 / 2.0;
        let lb11 = p * (1.0 - nu1) * lt1 * 1.0 / 1.0;
        assert_relative_eq!(access.lambda_bar[0][0], lb00, max_relative = 1e-14);
        assert_relative_eq!(access.lambda_bar[1][0], lb10, max_relative = 1e-14);
        assert_relative_eq!(access.lambda_bar[1][1], lb11, max_relative = 1e-14);
        assert_eq!(access.lambda_bar[0][1], 0.0);

        let f = |a: f64, s: f64| if s == 0.0 { a } else { (1.0 - (-a * s).exp()) / s };
        let s0_tier0 = areas.get(0, 0) * lb00;
        let s1_tier0 = areas.get(0, 0) * lb10 + areas.get(0, 1) * lb11;
        let s1_tier1 = areas.get(1, 0) * lb10 + areas.get(1, 1) * lb11;
        let rho0 = (f(1.0, s1_tier0) + f(2.0, s0_tier0) - f(1.0, s0_tier0)) / 2.0;
        let rho1 = f(1.0, s1_tier1) / 1.0;
        assert_relative_eq!(access.rho[0].unwrap(), rho0, max_relative = 1e-12);
        assert_relative_eq!(access.rho[1].unwrap(), rho1, max_relative = 1e-12);
    }

    #[test]
    fn access_approaches_one_at_vanishing_intensity() {
        // The limit is a property of the access formula, so feed it a fixed
        // full-disk area table rather than re-deriving one at an intensity
        // far outside the estimator's working range.
        let mut network = two_tier_network(1.0, 1.0);
        network.tiers[0].intensity = 1e-12;
        network.tiers[1].intensity = 1e-12;
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let full = PI * 30.0 * 30.0;
        let areas = MeanAreaTable {
            a: vec![vec![full; 2]; 2],
            mode: AssociationMode::NonCrossing,
        };
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        for k in 0..2 {
            assert!(access.rho[k].unwrap() > 1.0 - 1e-6);
        }
    }

    #[test]
    fn access_rises_with_a_stricter_gate() {
        // A higher gain threshold thins the contenders, so the survivors
        // win the channel more often.
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let mut loose = two_tier_network(1.0, 1.0);
        loose.tiers[0].intensity = 2e-4;
        loose.tiers[1].intensity = 4e-4;
        let mut strict = loose.clone();
        strict.channel.gain_threshold = 8.0;
        let areas = estimate_mean_areas(&loose, &policy, &s).unwrap();
        let a_loose = access_probabilities(&loose, &policy, &areas, &s).unwrap();
        let a_strict = access_probabilities(&strict, &policy, &areas, &s).unwrap();
        assert!(a_strict.gate_probability < a_loose.gate_probability);
        for k in 0..2 {
            assert!(a_strict.rho[k].unwrap() > a_loose.rho[k].unwrap());
        }
    }

    #[test]
    fn access_skips_non_contending_tiers() {
        let network = NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(1e-6, 40.0, None),
                TierSpec::dual_band(1e-5, 1.0, Some(2.0)),
                TierSpec::unlicensed_only(1e-4, 0.2, 1.0),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: 1e-4,
            user_intensity_unlicensed: 1e-4,
        };
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        assert!(access.rho[0].is_none());
        assert!(access.rho[1].is_some());
        assert!(access.rho[2].is_some());
        assert_eq!(access.contenders, vec![1, 2]);
        assert_eq!(access.lambda_bar.len(), 2);
    }

    #[test]
    fn access_rejects_mismatched_area_table() {
        let network = two_tier_network(1.0, 1.0);
        let s = settings();
        let areas =
            estimate_mean_areas(&network, &mmpa(AssociationMode::Crossing), &s).unwrap();
        let err = access_probabilities(&network, &mmpa(AssociationMode::NonCrossing), &areas, &s);
        assert!(err.is_err());
    }

    // ------------------------------------------------------------------
    // Coverage bounds
    // ------------------------------------------------------------------

    fn bounds_for(
        network: &NetworkConfig,
        mode: AssociationMode,
        theta: f64,
    ) -> (BoundSet, AccessProbabilities) {
        let policy = mmpa(mode);
        let s = settings();
        let areas = estimate_mean_areas(network, &policy, &s).unwrap();
        let access = access_probabilities(network, &policy, &areas, &s).unwrap();
        let set = coverage_bounds(network, &policy, &access, theta, &s).unwrap();
        (set, access)
    }

    #[test]
    fn licensed_limit_matches_single_network_constant() {
        // The saturation limit of the licensed coverage is association-share
        // free under noncrossing association: 1 / (1 + ell(theta, theta)).
        let network = two_tier_network(1.0, 1.0);
        let (set, _) = bounds_for(&network, AssociationMode::NonCrossing, 1.0);
        assert_relative_eq!(
            set.licensed_limit.unwrap(),
            1.0 / (1.0 + std::f64::consts::FRAC_PI_4),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            set.licensed_limit.unwrap(),
            0.560_099_153_511_557_4,
            max_relative = 1e-12
        );
        let (set_half, _) = bounds_for(&network, AssociationMode::NonCrossing, 0.5);
        assert_relative_eq!(
            set_half.licensed_limit.unwrap(),
            0.696_762_206_658_957_9,
            max_relative = 1e-12
        );
    }

    #[test]
    fn empty_load_gives_full_coverage_bounds() {
        // With no users every AP is void: nothing transmits, so every
        // coverage lower bound collapses to certainty.
        let mut network = two_tier_network(1.0, 1.0);
        network.user_intensity_licensed = 0.0;
        network.user_intensity_unlicensed = 0.0;
        let (set, access) = bounds_for(&network, AssociationMode::NonCrossing, 1.0);
        assert!(access.nu.iter().all(|&v| v == 1.0));
        assert_relative_eq!(set.licensed_bound.unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(set.opportunistic_bound.unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(set.unlicensed_bound, 1.0, epsilon = 1e-14);
        assert_relative_eq!(set.coexisting_bound, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn limits_stay_below_bounds_and_one() {
        let network = two_tier_network(1.0, 1.0);
        for mode in [AssociationMode::NonCrossing, AssociationMode::Crossing] {
            for theta in [0.25, 1.0, 4.0] {
                let (set, _) = bounds_for(&network, mode, theta);
                let pairs = [
                    (set.licensed_limit, set.licensed_bound),
                    (set.opportunistic_limit, set.opportunistic_bound),
                    (Some(set.unlicensed_limit), Some(set.unlicensed_bound)),
                    (Some(set.coexisting_limit), Some(set.coexisting_bound)),
                ];
                for (limit, bound) in pairs {
                    let (l, b) = (limit.unwrap(), bound.unwrap());
                    assert!(l > 0.0 && b <= 1.0 + 1e-12, "mode {mode:?} theta {theta}");
                    assert!(
                        l <= b + 1e-12,
                        "limit {l} above bound {b} at mode {mode:?} theta {theta}"
                    );
                }
            }
        }
    }

    #[test]
    fn coverage_declines_with_threshold() {
        let network = two_tier_network(1.0, 1.0);
        let mut last = f64::INFINITY;
        for theta in [0.1, 0.5, 1.0, 2.0, 8.0] {
            let (set, _) = bounds_for(&network, AssociationMode::NonCrossing, theta);
            assert!(set.coexisting_bound < last);
            last = set.coexisting_bound;
        }
    }

    #[test]
    fn wifi_only_network_reduces_to_unlicensed_coverage() {
        let network = NetworkConfig {
            tiers: vec![TierSpec::unlicensed_only(1e-4, 0.2, 1.0)],
            channel: ChannelParams::default(),
            user_intensity_licensed: 0.0,
            user_intensity_unlicensed: 1e-3,
        };
        let (set, access) = bounds_for(&network, AssociationMode::NonCrossing, 1.0);
        assert!(set.licensed_bound.is_none());
        assert!(set.opportunistic_bound.is_none());
        assert_eq!(set.coexisting_bound, set.unlicensed_bound);
        assert_eq!(set.cov_weights, vec![1.0]);

        // Literal single-tier arithmetic: the only interferers are granted
        // same-tier APs, guarded by the carrier sense.
        let s = settings();
        let eff = (1.0 - access.nu[0]) * access.rho[0].unwrap() * access.gate_probability;
        let expected = 1.0 / (1.0 + eff * ell(1.0, 1.0, 0.5, &s).unwrap());
        assert_relative_eq!(set.unlicensed_bound, expected, max_relative = 1e-12);
    }

    #[test]
    fn unlicensed_users_fare_worse_than_licensed_under_equal_voids() {
        // Equal per-tier powers make every licensed void probability equal;
        // matching the user-to-AP ratios across bands equalizes the
        // unlicensed one too. With a dense licensed network interfering
        // unguarded on the unlicensed band, unlicensed users see strictly
        // less coverage than licensed-band users.
        let network = NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(1e-4, 1.0, Some(1.0)),
                TierSpec::unlicensed_only(1e-6, 1.0, 1.0),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: 2e-4,
            user_intensity_unlicensed: 2e-6,
        };
        let (set, access) = bounds_for(&network, AssociationMode::NonCrossing, 1.0);
        assert_relative_eq!(access.nu[0], access.nu[1], max_relative = 1e-12);
        assert!(
            set.unlicensed_bound <= set.licensed_bound.unwrap(),
            "unlicensed {} vs licensed {}",
            set.unlicensed_bound,
            set.licensed_bound.unwrap()
        );
        let (set_half, _) = bounds_for(&network, AssociationMode::NonCrossing, 0.5);
        assert!(set_half.unlicensed_bound <= set_half.licensed_bound.unwrap());
    }

    #[test]
    fn crossing_beats_noncrossing_coverage() {
        // Cross-band association spreads users over more APs: voids rise,
        // interference thins, and every coverage improves.
        let network = NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(1e-5, 1.0, Some(1.0)),
                TierSpec::unlicensed_only(1e-4, 0.2, 1.0),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: 5e-4,
            user_intensity_unlicensed: 5e-4,
        };
        let (nc, _) = bounds_for(&network, AssociationMode::NonCrossing, 0.5);
        let (cr, _) = bounds_for(&network, AssociationMode::Crossing, 0.5);
        assert!(cr.licensed_limit.unwrap() > nc.licensed_limit.unwrap());
        assert!(cr.coexisting_bound >= nc.coexisting_bound);
        assert!(cr.coexisting_limit >= nc.coexisting_limit);
    }

    #[test]
    fn bound_set_intermediates_have_expected_shape() {
        let network = two_tier_network(2.0, 1.0);
        let (nc, _) = bounds_for(&network, AssociationMode::NonCrossing, 1.0);
        // Noncrossing: licensed users see the unlicensed tier unguarded;
        // unlicensed users see licensed tiers unguarded.
        assert_eq!(nc.pair_args.len(), 1);
        assert_eq!(nc.pair_args[0][0], 1.0);
        assert!(nc.pair_args[0][1].is_infinite());
        assert!(nc.unlicensed_args[0].is_infinite());
        assert_eq!(nc.unlicensed_args[1], 1.0);
        let (cr, _) = bounds_for(&network, AssociationMode::Crossing, 1.0);
        assert!(cr.pair_args[0].iter().all(|&v| v == 1.0));
        assert!(cr.unlicensed_args.iter().all(|&v| v == 1.0));
        // Weights sum to one; transmit-equivalent intensities are positive
        // exactly for contending tiers.
        assert_relative_eq!(nc.cov_weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(nc.lambda_dagger.iter().all(|&v| v > 0.0));

        let mut with_silent = network.clone();
        with_silent.tiers.insert(0, TierSpec::dual_band(1e-6, 40.0, None));
        let (set, _) = bounds_for(&with_silent, AssociationMode::NonCrossing, 1.0);
        assert_eq!(set.lambda_dagger[0], 0.0);
        assert!(set.rho[0].is_none());
    }

    #[test]
    fn coverage_rejects_bad_threshold_and_mode_mix() {
        let network = two_tier_network(1.0, 1.0);
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        assert!(coverage_bounds(&network, &policy, &access, 0.0, &s).is_err());
        assert!(coverage_bounds(&network, &policy, &access, -1.0, &s).is_err());
        let crossing = mmpa(AssociationMode::Crossing);
        assert!(coverage_bounds(&network, &crossing, &access, 1.0, &s).is_err());
    }

    // ------------------------------------------------------------------
    // Capacity
    // ------------------------------------------------------------------

    #[test]
    fn rate_integral_reciprocal_oracle() {
        // f(theta) = 1/(1+theta) integrates to exactly 1/ln 2.
        let s = settings();
        for &z in &[0.5, 0.4] {
            let v = rate_integral(|t| Ok(1.0 / (1.0 + t)), z, &s).unwrap();
            assert_relative_eq!(v, 1.0 / LN_2, max_relative = 1e-9);
        }
    }

    #[test]
    fn rate_integral_zero_coverage_gives_zero() {
        let s = settings();
        let v = rate_integral(|_| Ok(0.0), 0.5, &s).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn rate_integral_propagates_integrand_errors() {
        let s = settings();
        let err = rate_integral(
            |t| {
                if t > 10.0 {
                    Err(Error::numerical("synthetic failure"))
                } else {
                    Ok(1.0 / (1.0 + t))
                }
            },
            0.5,
            &s,
        );
        assert!(matches!(err, Err(Error::Numerical(_))));
    }

    #[test]
    fn capacity_limits_stay_below_bounds() {
        let network = two_tier_network(1.0, 1.0);
        for mode in [AssociationMode::NonCrossing, AssociationMode::Crossing] {
            let policy = mmpa(mode);
            let s = settings();
            let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
            let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
            let caps = capacity_bounds(&network, &policy, &access, &s).unwrap();
            assert!(caps.se_licensed_limit.unwrap() <= caps.se_licensed_bound.unwrap() + 1e-10);
            assert!(caps.se_unlicensed_limit <= caps.se_unlicensed_bound + 1e-10);
            assert!(caps.se_licensed_bound.unwrap() > 0.0);
            assert!(caps.se_unlicensed_bound > 0.0);
            assert!(caps.netcap_bound > 0.0);
            assert!(caps.netcap_limit > 0.0);
        }
    }

    #[test]
    fn capacity_assembles_its_own_parts() {
        // The per-area capacity must equal the definitional combination of
        // the same module's coverage and rate pieces.
        let network = two_tier_network(1.0, 1.0);
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        let caps = capacity_bounds(&network, &policy, &access, &s).unwrap();
        let set = coverage_bounds(
            &network,
            &policy,
            &access,
            network.channel.sir_threshold,
            &s,
        )
        .unwrap();
        let expected = network.tiers[0].intensity
            * (1.0 - access.nu[0])
            * set.licensed_bound.unwrap()
            * caps.se_licensed_bound.unwrap()
            + network.tiers[1].intensity
                * (1.0 - access.nu[1])
                * set.unlicensed_bound
                * caps.se_unlicensed_bound;
        assert_relative_eq!(caps.netcap_bound, expected, max_relative = 1e-12);
    }

    #[test]
    fn crossing_beats_noncrossing_capacity() {
        let network = NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(1e-5, 1.0, Some(1.0)),
                TierSpec::unlicensed_only(1e-4, 0.2, 1.0),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: 5e-4,
            user_intensity_unlicensed: 5e-4,
        };
        let s = settings();
        let mut netcap = [0.0; 2];
        for (i, mode) in [AssociationMode::NonCrossing, AssociationMode::Crossing]
            .into_iter()
            .enumerate()
        {
            let policy = mmpa(mode);
            let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
            let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
            netcap[i] = capacity_bounds(&network, &policy, &access, &s)
                .unwrap()
                .netcap_bound;
        }
        assert!(
            netcap[1] >= netcap[0],
            "crossing {} vs noncrossing {}",
            netcap[1],
            netcap[0]
        );
    }

    #[test]
    fn wifi_only_capacity_has_no_licensed_part() {
        let network = NetworkConfig {
            tiers: vec![TierSpec::unlicensed_only(1e-4, 0.2, 1.0)],
            channel: ChannelParams::default(),
            user_intensity_licensed: 0.0,
            user_intensity_unlicensed: 1e-3,
        };
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        let caps = capacity_bounds(&network, &policy, &access, &s).unwrap();
        assert!(caps.se_licensed_bound.is_none());
        assert!(caps.se_licensed_limit.is_none());
        assert!(caps.se_unlicensed_bound > 0.0);
        assert!(caps.netcap_bound > 0.0);
    }

    #[test]
    fn bound_set_survives_halved_tolerances() {
        let network = two_tier_network(1.0, 1.0);
        let policy = mmpa(AssociationMode::NonCrossing);
        let s = settings();
        let h = s.halved();
        let areas = estimate_mean_areas(&network, &policy, &s).unwrap();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        let a = coverage_bounds(&network, &policy, &access, 0.5, &s).unwrap();
        let b = coverage_bounds(&network, &policy, &access, 0.5, &h).unwrap();
        assert_relative_eq!(a.coexisting_bound, b.coexisting_bound, max_relative = 1e-7);
        assert_relative_eq!(
            a.opportunistic_bound.unwrap(),
            b.opportunistic_bound.unwrap(),
            max_relative = 1e-7
        );
    }
}
