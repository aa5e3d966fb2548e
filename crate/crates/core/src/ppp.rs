//! Marked Poisson deployments over a square simulation window.
//!
//! One deployment realizes:
//! - every AP tier as an independent homogeneous Poisson process with its
//!   per-AP shadowing mark (log-normal, median 1, shared by every user that
//!   observes the AP),
//! - the licensed-band and unlicensed-band user populations.
//!
//! The window is the square [-R, R]^2, optionally wrapped into a torus so
//! stationary statistics carry no edge bias.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geom::{Boundary, Vec2};

/// Hard cap on the expected number of sampled points per deployment; guards
/// against configurations that would exhaust memory.
pub const MAX_EXPECTED_POINTS: f64 = 16e6;

// ======================================================================
// Window
// ======================================================================

/// The square simulation window [-radius, radius]^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    /// Half side length in meters.
    pub radius: f64,
    pub boundary: Boundary,
}

impl Window {
    pub fn new(radius: f64, boundary: Boundary) -> Self {
        Window { radius, boundary }
    }

    pub fn area(&self) -> f64 {
        4.0 * self.radius * self.radius
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::config("window radius must be positive and finite"));
        }
        Ok(())
    }

    /// Uniform point in the window.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(
            rng.random_range(-self.radius..self.radius),
            rng.random_range(-self.radius..self.radius),
        )
    }

    /// Boundary-aware squared distance.
    pub fn dist2(&self, a: &Vec2, b: &Vec2) -> f64 {
        match self.boundary {
            Boundary::Open => a.dist2(b),
            Boundary::Wrapped => a.torus_dist2(b, self.radius),
        }
    }

    /// True when `pos` is at least `guard` meters from every window edge.
    ///
    /// Wrapped windows have no edge, so everything is interior there.
    pub fn interior(&self, pos: Vec2, guard: f64) -> bool {
        match self.boundary {
            Boundary::Wrapped => true,
            Boundary::Open => {
                let limit = self.radius - guard;
                pos.x.abs() <= limit && pos.y.abs() <= limit
            }
        }
    }
}

/// Far-field truncation radius: the smallest radius (relative to a 1 m
/// reference link) beyond which the neglected path-loss tail contributes at
/// most a fraction `epsilon` of the captured part, for path-loss exponent
/// `alpha`. Experiments take the max of this and population-driven floors.
pub fn choose_window_radius(alpha: f64, epsilon: f64) -> f64 {
    ((1.0 + epsilon) / epsilon).powf(1.0 / (alpha - 2.0))
}

/// Radius at which the sparsest tier still places about 20 APs in a disk of
/// that radius; keeps per-tier statistics from collapsing to a handful of
/// points.
pub fn count_floor_radius(min_intensity: f64) -> f64 {
    (20.0 / (std::f64::consts::PI * min_intensity)).sqrt()
}

// ======================================================================
// Deployment
// ======================================================================

/// One access point with its long-term mark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ap {
    pub pos: Vec2,
    /// Tier index (0-based).
    pub tier: u32,
    /// Long-term shadowing factor applied to this AP's mean received power:
    /// the inverse of a log-normal gain with median 1. Probe queries and
    /// downlink signal draws read this mark; population association instead
    /// draws an independent factor per user-AP link (see
    /// [`crate::rng::link_normal`]), identical in law for any single user.
    pub shadow_inv: f64,
}

/// One realized network: APs (grouped by tier) and user positions.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub window: Window,
    /// APs sorted by tier; `tier_ranges[k]` indexes tier k's slice.
    pub aps: Vec<Ap>,
    pub tier_ranges: Vec<std::ops::Range<usize>>,
    pub users_licensed: Vec<Vec2>,
    pub users_unlicensed: Vec<Vec2>,
    /// Salt for this deployment's per-link shadowing draws (see
    /// [`crate::rng::link_normal`]); drawn once per deployment so links are
    /// independent across trials yet reproducible within one.
    pub link_salt: u64,
}

impl Deployment {
    pub fn tier_aps(&self, tier: usize) -> &[Ap] {
        &self.aps[self.tier_ranges[tier].clone()]
    }

    pub fn num_tiers(&self) -> usize {
        self.tier_ranges.len()
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::config(format!("invalid Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

/// Sample one deployment.
///
/// `rng_aps` drives AP positions and marks; `rng_users` drives user
/// positions. Keeping the streams separate means changing the user
/// population never reshuffles the AP field of the same trial.
pub fn sample_deployment<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    network: &NetworkConfig,
    window: Window,
    rng_aps: &mut R1,
    rng_users: &mut R2,
) -> Result<Deployment> {
    network.validate()?;
    window.validate()?;
    let area = window.area();
    let expected: f64 = network.tiers.iter().map(|t| t.intensity * area).sum::<f64>()
        + (network.user_intensity_licensed + network.user_intensity_unlicensed) * area;
    if expected > MAX_EXPECTED_POINTS {
        return Err(Error::config(format!(
            "expected point count {expected:.3e} exceeds the {MAX_EXPECTED_POINTS:.0e} cap; shrink the window or intensities"
        )));
    }

    let sigma_ln = network.channel.sigma_ln();
    let mut aps = Vec::new();
    let mut tier_ranges = Vec::with_capacity(network.tiers.len());
    for (k, tier) in network.tiers.iter().enumerate() {
        let start = aps.len();
        let n = poisson_count(tier.intensity * area, rng_aps)?;
        aps.reserve(n);
        for _ in 0..n {
            let pos = window.sample_point(rng_aps);
            let shadow_inv = if sigma_ln == 0.0 {
                1.0
            } else {
                let z: f64 = StandardNormal.sample(rng_aps);
                (-sigma_ln * z).exp()
            };
            aps.push(Ap { pos, tier: k as u32, shadow_inv });
        }
        tier_ranges.push(start..aps.len());
    }

    let n_l = poisson_count(network.user_intensity_licensed * area, rng_users)?;
    let users_licensed = (0..n_l).map(|_| window.sample_point(rng_users)).collect();
    let n_u = poisson_count(network.user_intensity_unlicensed * area, rng_users)?;
    let users_unlicensed = (0..n_u).map(|_| window.sample_point(rng_users)).collect();
    // Drawn last so the salt never shifts the position draws above.
    let link_salt = rng_users.random::<u64>();

    Ok(Deployment {
        window,
        aps,
        tier_ranges,
        users_licensed,
        users_unlicensed,
        link_salt,
    })
}

// ======================================================================
// Tests
// ======================================================================
