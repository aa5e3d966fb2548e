//! Statistical and property-based checks tying the Monte Carlo half of the
//! crate to its analytic half:
//!
//! - Poisson sampling: dispersion, quadrant uniformity, mark independence,
//!   byte-for-byte determinism
//! - association: weighted-distance law (one-sample KS), tier independence
//!   of the conditional distance law (two-sample KS), tier-selection
//!   frequencies versus the closed-form shares, scale invariance, and the
//!   nearest-AP reduction of equal-weight association
//! - contention: mutual exclusion of granted APs, gate monotonicity
//! - coverage: threshold monotonicity on a fixed sample set
//! - formula properties: void-probability monotonicity, cross-band versus
//!   same-band voids, the equal-backoff collapse of the access formula, and
//!   quadrature tolerance-halving stability
//!
//! Every randomized test runs from a fixed root seed, so outcomes are
//! deterministic; tolerances leave multiple standard errors of headroom at
//! those seeds.

use coexsim_core::analytic::{
    access_probabilities, capacity_bounds, coverage_bounds, equal_backoff_access,
    gain_threshold_probability,
};
use coexsim_core::assoc::{
    analytic_void_probability, associate, eligibility, weighted_distance_cdf, AssocStats, UserBand,
};
use coexsim_core::config::{
    AssociationMode, AssociationPolicy, ChannelParams, NetworkConfig, TierSpec, WeightScheme,
};
use coexsim_core::csma::{draw_round, resolve, MeanAreaTable};
use coexsim_core::geom::Boundary;
use coexsim_core::ppp::{sample_deployment, Deployment, Window};
use coexsim_core::quad::QuadratureSettings;
use coexsim_core::rng::{stream, Purpose};
use coexsim_core::sir::{run_probes, estimate_coverage, ProbeSettings, SirBand};
use proptest::prelude::*;

const ROOT_SEED: u64 = 0x5ee_d5_0da;

fn two_tier() -> NetworkConfig {
    NetworkConfig {
        tiers: vec![
            TierSpec::dual_band(5e-5, 1.0, Some(2.0)),
            TierSpec::unlicensed_only(2e-4, 0.5, 1.0),
        ],
        channel: ChannelParams::default(),
        user_intensity_licensed: 2e-4,
        user_intensity_unlicensed: 2e-4,
    }
}

/// Four-tier reference network: a macro tier that never contends over three
/// denser small-cell tiers, the last one unlicensed-only.
fn four_tier() -> NetworkConfig {
    NetworkConfig {
        tiers: vec![
            TierSpec::dual_band(1e-6, 40.0, None),
            TierSpec::dual_band(1e-5, 1.0, Some(2.0)),
            TierSpec::dual_band(5e-5, 0.5, Some(2.0)),
            TierSpec::unlicensed_only(1e-4, 0.2, 1.0),
        ],
        channel: ChannelParams::default(),
        user_intensity_licensed: 1e-3,
        user_intensity_unlicensed: 1e-3,
    }
}

fn mmpa(mode: AssociationMode) -> AssociationPolicy {
    AssociationPolicy::shadow_compensating(mode)
}

// ======================================================================
// Poisson sampling
// ======================================================================

#[test]
fn poisson_counts_have_unit_dispersion() {
    let network = two_tier();
    let window = Window::new(300.0, Boundary::Open);
    let area = window.area();
    let n_dep = 1500usize;
    let mut counts = vec![Vec::with_capacity(n_dep); 2];
    for trial in 0..n_dep {
        let mut rng_aps = stream(ROOT_SEED, trial as u64, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED, trial as u64, Purpose::Users);
        let dep = sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap();
        for k in 0..2 {
            counts[k].push(dep.tier_aps(k).len() as f64);
        }
    }
    for k in 0..2 {
        let expect = network.tiers[k].intensity * area;
        let n = counts[k].len() as f64;
        let mean = counts[k].iter().sum::<f64>() / n;
        let var = counts[k].iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
        let se = (expect / n).sqrt();
        assert!(
            (mean - expect).abs() <= 3.0 * se,
            "tier {k}: mean count {mean} vs expected {expect} (se {se})"
        );
        let dispersion = var / mean;
        assert!(
            (dispersion - 1.0).abs() <= 0.10,
            "tier {k}: variance/mean {dispersion} strays from 1"
        );
    }
}

#[test]
fn positions_are_uniform_over_quadrants() {
    let network = two_tier();
    let window = Window::new(300.0, Boundary::Open);
    let mut quadrants = [0u64; 4];
    let mut total = 0u64;
    for trial in 0..400 {
        let mut rng_aps = stream(ROOT_SEED ^ 1, trial, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED ^ 1, trial, Purpose::Users);
        let dep = sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap();
        for ap in &dep.aps {
            let q = (usize::from(ap.pos.x >= 0.0)) | (usize::from(ap.pos.y >= 0.0) << 1);
            quadrants[q] += 1;
            total += 1;
        }
    }
    let expect = total as f64 / 4.0;
    let chi2: f64 = quadrants
        .iter()
        .map(|&o| {
            let d = o as f64 - expect;
            d * d / expect
        })
        .sum();
    // Chi-square, 3 degrees of freedom, 1% critical value.
    assert!(chi2 < 11.345, "quadrant chi-square {chi2} exceeds the 1% level");
}

#[test]
fn marks_are_independent_of_positions_and_fading() {
    // Shadowing marks must not correlate with where an AP landed, and the
    // per-round gate pair (fading times shadowing) must not correlate
    // across APs or with the stored marks.
    let network = two_tier();
    let window = Window::new(600.0, Boundary::Open);
    let mut lnmark = Vec::new();
    let mut radius = Vec::new();
    let mut gate = Vec::new();
    for trial in 0..120 {
        let mut rng_aps = stream(ROOT_SEED ^ 2, trial, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED ^ 2, trial, Purpose::Users);
        let dep = sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap();
        let mut rng_rounds = stream(ROOT_SEED ^ 2, trial, Purpose::Contention);
        let round = draw_round(&dep, &network, &mut rng_rounds);
        for (i, ap) in dep.aps.iter().enumerate() {
            lnmark.push(ap.shadow_inv.ln());
            radius.push(ap.pos.dist(&coexsim_core::geom::Vec2::new(0.0, 0.0)));
            gate.push(round.gate_gain[i].max(1e-300).ln());
        }
    }
    assert!(lnmark.len() > 10_000, "want >= 1e4 marks, got {}", lnmark.len());
    let corr = |a: &[f64], b: &[f64]| -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (
            a.iter().sum::<f64>() / n,
            b.iter().sum::<f64>() / n,
        );
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let (va, vb) = (
            a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / n,
            b.iter().map(|y| (y - mb) * (y - mb)).sum::<f64>() / n,
        );
        cov / (va * vb).sqrt()
    };
    assert!(corr(&lnmark, &radius).abs() < 0.05, "mark vs radius");
    assert!(corr(&lnmark, &gate).abs() < 0.05, "mark vs gate gain");
    // Successive APs' draws are independent of each other.
    let a = &lnmark[..lnmark.len() - 1];
    let b = &lnmark[1..];
    assert!(corr(a, b).abs() < 0.05, "mark vs next mark");
    let ga = &gate[..gate.len() - 1];
    let gb = &gate[1..];
    assert!(corr(ga, gb).abs() < 0.05, "gate vs next gate");
}

#[test]
fn deployments_are_deterministic_in_the_seed() {
    let network = four_tier();
    let window = Window::new(250.0, Boundary::Open);
    let sample = |seed: u64| -> Deployment {
        let mut rng_aps = stream(seed, 7, Purpose::Deployment);
        let mut rng_users = stream(seed, 7, Purpose::Users);
        sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap()
    };
    let a = sample(ROOT_SEED);
    let b = sample(ROOT_SEED);
    assert_eq!(a.aps, b.aps);
    assert_eq!(a.users_licensed, b.users_licensed);
    assert_eq!(a.users_unlicensed, b.users_unlicensed);
    assert_eq!(a.tier_ranges, b.tier_ranges);
    let c = sample(ROOT_SEED + 1);
    assert_ne!(a.aps, c.aps, "different seeds must differ");
}

// ======================================================================
// Association law
// ======================================================================

/// Pool weighted serving distances of interior users across deployments.
fn pooled_weighted_distances(
    network: &NetworkConfig,
    policy: &AssociationPolicy,
    band: UserBand,
    window_radius: f64,
    interior: f64,
    n_dep: u64,
    seed: u64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let window = Window::new(window_radius, Boundary::Open);
    let k_total = network.num_tiers();
    let mut pooled = Vec::new();
    let mut per_tier = vec![Vec::new(); k_total];
    for trial in 0..n_dep {
        let mut rng_aps = stream(seed, trial, Purpose::Deployment);
        let mut rng_users = stream(seed, trial, Purpose::Users);
        let dep = sample_deployment(network, window, &mut rng_aps, &mut rng_users).unwrap();
        let result = associate(&dep, network, policy).unwrap();
        let (users, offset) = match band {
            UserBand::Licensed => (&dep.users_licensed, 0),
            UserBand::Unlicensed => (&dep.users_unlicensed, dep.users_licensed.len()),
        };
        for (u, pos) in users.iter().enumerate() {
            if !dep.window.interior(*pos, interior) {
                continue;
            }
            if let Some(s) = result.map.serving[offset + u] {
                let d = s.weighted_dist2.sqrt();
                pooled.push(d);
                per_tier[s.tier as usize].push(d);
            }
        }
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for v in &mut per_tier {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    (pooled, per_tier)
}

fn ks_one_sample<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn weighted_distance_follows_the_closed_form_law() {
    // One-sample KS against 1 - exp(-pi x^2 Lambda) for both modes and
    // both user populations; two-sample KS across serving tiers; empirical
    // tier shares against the closed-form association probabilities.
    //
    // Experimental design: all users within one deployment share a single
    // realization of the sparse macro tier (about ten macro APs per window),
    // so their serving tiers are strongly correlated and the per-field macro
    // share fluctuates by roughly its mean over sqrt(10). Binomial error
    // bars only apply across many independent fields, so this test draws
    // many deployments with few users each rather than the reverse.
    let mut network = four_tier();
    network.user_intensity_licensed = 1.25e-5;
    network.user_intensity_unlicensed = 1.25e-5;
    for mode in [AssociationMode::NonCrossing, AssociationMode::Crossing] {
        let policy = mmpa(mode);
        let stats = AssocStats::from_config(&network, &policy).unwrap();
        let elig = eligibility(mode, UserBand::Licensed);
        // The 40 W macro tier associates users from up to ~800 m away (its
        // weighted-distance tail stretched by the power and shadow factors),
        // so the interior margin must cover that reach; otherwise the macro
        // share and the distance tail are both biased low.
        let (pooled, per_tier) = pooled_weighted_distances(
            &network,
            &policy,
            UserBand::Licensed,
            1600.0,
            800.0,
            600,
            ROOT_SEED ^ 3,
        );
        assert!(
            pooled.len() >= 10_000,
            "want >= 1e4 interior samples, got {}",
            pooled.len()
        );
        let d = ks_one_sample(&pooled, |x| weighted_distance_cdf(&stats, elig, x));
        assert!(d <= 0.02, "{mode:?}: KS distance {d} exceeds 0.02");

        // The conditional law given the serving tier does not depend on the
        // tier: compare every eligible tier against the largest one at the
        // 1% level.
        let eligible: Vec<usize> = match mode {
            AssociationMode::NonCrossing => (0..3).collect(),
            AssociationMode::Crossing => (0..4).collect(),
        };
        let largest = *eligible
            .iter()
            .max_by_key(|&&k| per_tier[k].len())
            .unwrap();
        for &k in &eligible {
            if k == largest {
                continue;
            }
            let (na, nb) = (per_tier[k].len() as f64, per_tier[largest].len() as f64);
            assert!(na > 200.0, "tier {k} has too few samples ({na}) for a KS test");
            let crit = 1.628 * ((na + nb) / (na * nb)).sqrt();
            let d2 = ks_two_sample(&per_tier[k], &per_tier[largest]);
            assert!(
                d2 <= crit,
                "{mode:?}: tiers {k}/{largest} two-sample KS {d2} exceeds {crit}"
            );
        }

        // Tier-selection frequencies match the association shares within 3
        // binomial standard errors.
        let total: usize = eligible.iter().map(|&k| per_tier[k].len()).sum();
        for &k in &eligible {
            let share = match mode {
                AssociationMode::NonCrossing => stats.theta_licensed[k],
                AssociationMode::Crossing => stats.theta_all[k],
            };
            let freq = per_tier[k].len() as f64 / total as f64;
            let se = (share * (1.0 - share) / total as f64).sqrt();
            assert!(
                (freq - share).abs() <= 3.0 * se,
                "{mode:?}: tier {k} frequency {freq} vs share {share} (se {se})"
            );
        }
    }
}

#[test]
fn association_is_invariant_under_common_power_scaling() {
    // Multiplying every transmit power by one constant leaves the weighted
    // argmax unchanged, deployment by deployment.
    let base = four_tier();
    for (trial, scale) in [(0u64, 10.0), (1, 0.1), (2, 1e3)] {
        let mut scaled = base.clone();
        for t in &mut scaled.tiers {
            t.power *= scale;
        }
        let window = Window::new(300.0, Boundary::Open);
        let mut rng_aps = stream(ROOT_SEED ^ 4, trial, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED ^ 4, trial, Purpose::Users);
        let dep = sample_deployment(&base, window, &mut rng_aps, &mut rng_users).unwrap();
        for mode in [AssociationMode::NonCrossing, AssociationMode::Crossing] {
            let a = associate(&dep, &base, &mmpa(mode)).unwrap();
            let b = associate(&dep, &scaled, &mmpa(mode)).unwrap();
            let pick = |r: &coexsim_core::assoc::AssociationResult| -> Vec<Option<u32>> {
                r.map.serving.iter().map(|s| s.map(|s| s.ap)).collect()
            };
            assert_eq!(pick(&a), pick(&b), "mode {mode:?}, scale {scale}");
        }
    }
}

#[test]
fn weighted_nearest_matches_brute_force() {
    // The grid-accelerated weighted argmax must agree with a full scan,
    // including far-but-strong macro candidates.
    let network = four_tier();
    let policy = mmpa(AssociationMode::NonCrossing);
    let window = Window::new(900.0, Boundary::Open);
    let alpha = network.channel.pathloss_exponent;
    for trial in 0..4u64 {
        let mut rng_aps = stream(ROOT_SEED ^ 8, trial, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED ^ 8, trial, Purpose::Users);
        let dep = sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap();
        let result = associate(&dep, &network, &policy).unwrap();
        for (u, pos) in dep.users_licensed.iter().enumerate().take(400) {
            let brute = dep
                .aps
                .iter()
                .enumerate()
                .filter(|(_, ap)| ap.tier != 3)
                .map(|(i, ap)| {
                    let w = network.tiers[ap.tier as usize].power * ap.shadow_inv;
                    (i, ap.pos.dist2(pos) / w.powf(2.0 / alpha))
                })
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            let got = result.map.serving[u].expect("licensed tiers exist");
            assert_eq!(
                got.ap as usize, brute.0,
                "user {u} trial {trial}: grid {} vs brute {}",
                got.ap, brute.0
            );
        }
    }
}

#[test]
fn equal_weight_association_is_nearest_ap() {
    let mut network = four_tier();
    network.user_intensity_licensed = 5e-4;
    network.user_intensity_unlicensed = 5e-4;
    let policy = AssociationPolicy {
        scheme: WeightScheme::PerTier(vec![3.0; 4]),
        mode: AssociationMode::Crossing,
    };
    let window = Window::new(300.0, Boundary::Open);
    for trial in 0..3u64 {
        let mut rng_aps = stream(ROOT_SEED ^ 5, trial, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED ^ 5, trial, Purpose::Users);
        let dep = sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap();
        let result = associate(&dep, &network, &policy).unwrap();
        let users: Vec<_> = dep
            .users_licensed
            .iter()
            .chain(dep.users_unlicensed.iter())
            .copied()
            .collect();
        for (u, pos) in users.iter().enumerate() {
            let served = result.map.serving[u].expect("all tiers eligible");
            let nearest = dep
                .aps
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    a.pos.dist2(pos).partial_cmp(&b.pos.dist2(pos)).unwrap()
                })
                .map(|(i, _)| i as u32)
                .unwrap();
            assert_eq!(served.ap, nearest, "user {u} in trial {trial}");
        }
    }
}

// ======================================================================
// Contention properties
// ======================================================================

#[test]
fn granted_aps_are_mutually_exclusive_and_gate_is_monotone() {
    // A permissive gate floods the band with contenders, making the
    // hard-core property easy to falsify if it were broken.
    let mut network = four_tier();
    network.channel.gain_threshold = 0.1;
    let window = Window::new(300.0, Boundary::Open);
    let mut checked_pairs = 0u64;
    for trial in 0..12u64 {
        let mut rng_aps = stream(ROOT_SEED ^ 6, trial, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED ^ 6, trial, Purpose::Users);
        let dep = sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap();
        let assoc = associate(&dep, &network, &mmpa(AssociationMode::NonCrossing)).unwrap();
        let mut rng_rounds = stream(ROOT_SEED ^ 6, trial, Purpose::Contention);
        for _ in 0..5 {
            let round = draw_round(&dep, &network, &mut rng_rounds);
            let outcome = resolve(&dep, &network, &round, Some(&assoc.map));

            // No two granted APs may both sit inside each other's sensing
            // region.
            let granted: Vec<usize> =
                (0..dep.aps.len()).filter(|&i| outcome.granted[i]).collect();
            for (a, &i) in granted.iter().enumerate() {
                for &j in granted.iter().skip(a + 1) {
                    let d2 = dep.window.dist2(&dep.aps[i].pos, &dep.aps[j].pos);
                    let ri = network.tiers[dep.aps[i].tier as usize].sensing_radius;
                    let rj = network.tiers[dep.aps[j].tier as usize].sensing_radius;
                    let both_sense = d2 <= ri * ri && d2 <= rj * rj;
                    assert!(!both_sense, "granted APs {i} and {j} sense each other");
                    checked_pairs += 1;
                }
            }

            // Raising the gate threshold on the same drawn round only
            // removes contenders.
            let mut stricter = network.clone();
            stricter.channel.gain_threshold = network.channel.gain_threshold * 4.0;
            let strict = resolve(&dep, &stricter, &round, Some(&assoc.map));
            for i in 0..dep.aps.len() {
                assert!(
                    !strict.contending[i] || outcome.contending[i],
                    "AP {i} contends only at the stricter gate"
                );
            }
        }
    }
    assert!(checked_pairs > 50, "too few granted pairs ({checked_pairs}) to be meaningful");
}

// ======================================================================
// Coverage properties
// ======================================================================

#[test]
fn coverage_is_monotone_in_threshold_on_fixed_samples() {
    let network = two_tier();
    let policy = mmpa(AssociationMode::NonCrossing);
    let window = Window::new(400.0, Boundary::Open);
    let settings = ProbeSettings {
        num_probes: 24,
        num_rounds: 6,
        guard: 120.0,
    };
    let mut batches = Vec::new();
    for trial in 0..12u64 {
        let mut rng_aps = stream(ROOT_SEED ^ 7, trial, Purpose::Deployment);
        let mut rng_users = stream(ROOT_SEED ^ 7, trial, Purpose::Users);
        let dep = sample_deployment(&network, window, &mut rng_aps, &mut rng_users).unwrap();
        let assoc = associate(&dep, &network, &policy).unwrap();
        let mut rng_cont = stream(ROOT_SEED ^ 7, trial, Purpose::Contention);
        let mut rng_probe = stream(ROOT_SEED ^ 7, trial, Purpose::Probes);
        batches.push(
            run_probes(
                &dep, &network, &policy, &assoc, &settings, &mut rng_cont, &mut rng_probe,
            )
            .unwrap(),
        );
    }
    assert!(batches.iter().any(|b| b.samples.iter().any(|s| s.band == SirBand::Unlicensed)));
    let mut last = [f64::INFINITY; 3];
    for theta in [0.05, 0.2, 0.5, 1.0, 2.0, 8.0] {
        let cov = estimate_coverage(&batches, 2, theta).unwrap();
        let now = [
            cov.licensed.map(|e| e.mean).unwrap_or(0.0),
            cov.opportunistic.map(|e| e.mean).unwrap_or(0.0),
            cov.unlicensed.map(|e| e.mean).unwrap_or(0.0),
        ];
        for (band, (&n, &l)) in now.iter().zip(&last).enumerate() {
            assert!(n <= l + 1e-15, "band {band} coverage rose from {l} to {n} at theta {theta}");
        }
        last = now;
    }
}

// ======================================================================
// Formula properties
// ======================================================================

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn void_probability_is_monotone(
        lam in 1e-6f64..1e-3,
        mu_lo in 1e-6f64..1e-2,
        boost in 1.2f64..8.0,
    ) {
        // Single licensed tier plus a vanishing unlicensed tier: the
        // licensed void probability must fall as users densify and rise as
        // the tier itself densifies.
        let make = |lambda: f64, mu: f64| NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(lambda, 1.0, Some(1.0)),
                TierSpec::unlicensed_only(1e-9, 1.0, 1.0),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: mu,
            user_intensity_unlicensed: 1e-9,
        };
        let policy = mmpa(AssociationMode::NonCrossing);
        let v_base = analytic_void_probability(&make(lam, mu_lo), &policy, 0).unwrap();
        let v_more_users = analytic_void_probability(&make(lam, mu_lo * boost), &policy, 0).unwrap();
        let v_more_aps = analytic_void_probability(&make(lam * boost, mu_lo), &policy, 0).unwrap();
        prop_assert!(v_more_users < v_base);
        prop_assert!(v_more_aps > v_base);
        prop_assert!(v_base > 0.0 && v_base < 1.0);
    }

    #[test]
    fn crossing_voids_dominate_noncrossing_on_licensed_tiers(
        mu_half in 1e-6f64..1e-2,
    ) {
        // Splitting one user population over both bands, cross-band
        // association spreads users over strictly more serving choices, so
        // licensed APs go void at least as often.
        let network = NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(1e-5, 1.0, Some(1.0)),
                TierSpec::unlicensed_only(1e-4, 0.2, 1.0),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: mu_half,
            user_intensity_unlicensed: mu_half,
        };
        let nu = analytic_void_probability(&network, &mmpa(AssociationMode::NonCrossing), 0).unwrap();
        let nu_hat = analytic_void_probability(&network, &mmpa(AssociationMode::Crossing), 0).unwrap();
        prop_assert!(
            nu_hat >= nu - 1e-12,
            "crossing void {} below noncrossing {}",
            nu_hat,
            nu
        );
    }

    #[test]
    fn gate_probability_is_monotone_in_threshold(
        delta in 0.0f64..12.0,
        step in 0.1f64..4.0,
        sigma in 0.0f64..1.5,
    ) {
        let lo = gain_threshold_probability(delta, sigma, 64).unwrap();
        let hi = gain_threshold_probability(delta + step, sigma, 64).unwrap();
        prop_assert!(hi < lo);
        prop_assert!(lo <= 1.0 && hi > 0.0);
    }

    #[test]
    fn equal_backoffs_collapse_to_the_pooled_exponential_form(
        lam0 in 1e-6f64..5e-5,
        lam1 in 1e-6f64..2e-4,
        tau in 0.2f64..5.0,
        mu in 1e-5f64..1e-3,
        a00 in 500.0f64..4000.0,
        a01 in 500.0f64..4000.0,
        a10 in 500.0f64..4000.0,
        a11 in 500.0f64..4000.0,
    ) {
        // With one shared backoff window the interval decomposition has a
        // single row and the access probability must equal the pooled
        // closed form to near machine precision, whatever the area table.
        let network = NetworkConfig {
            tiers: vec![
                TierSpec::dual_band(lam0, 1.0, Some(tau)),
                TierSpec::unlicensed_only(lam1, 0.5, tau),
            ],
            channel: ChannelParams::default(),
            user_intensity_licensed: mu,
            user_intensity_unlicensed: mu,
        };
        let policy = mmpa(AssociationMode::NonCrossing);
        let areas = MeanAreaTable {
            a: vec![vec![a00, a01], vec![a10, a11]],
            mode: AssociationMode::NonCrossing,
        };
        let s = QuadratureSettings::default();
        let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
        let stats = AssocStats::from_config(&network, &policy).unwrap();
        for k in 0..2 {
            let pooled: f64 = (0..2)
                .map(|m| {
                    areas.get(k, m)
                        * access.gate_probability
                        * (1.0 - access.nu[m])
                        * stats.lambda_tilde[m]
                })
                .sum();
            let expected = equal_backoff_access(tau, pooled);
            let got = access.rho[k].unwrap();
            prop_assert!(
                (got - expected).abs() <= 1e-10,
                "tier {}: {} vs pooled {}",
                k,
                got,
                expected
            );
        }
    }
}

#[test]
fn quadrature_halving_leaves_bounds_stable() {
    let network = four_tier();
    let policy = mmpa(AssociationMode::NonCrossing);
    let s = QuadratureSettings::default();
    let h = s.halved();
    let areas = MeanAreaTable {
        a: vec![vec![900.0 * std::f64::consts::PI; 4]; 4],
        mode: AssociationMode::NonCrossing,
    };
    let access = access_probabilities(&network, &policy, &areas, &s).unwrap();
    let access_h = access_probabilities(&network, &policy, &areas, &h).unwrap();
    for k in 0..4 {
        match (access.rho[k], access_h.rho[k]) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
            (None, None) => {}
            _ => panic!("contender sets disagree"),
        }
    }
    for theta in [0.2, 1.0, 3.0] {
        let a = coverage_bounds(&network, &policy, &access, theta, &s).unwrap();
        let b = coverage_bounds(&network, &policy, &access, theta, &h).unwrap();
        assert!((a.coexisting_bound - b.coexisting_bound).abs() < 1e-7);
        assert!((a.unlicensed_bound - b.unlicensed_bound).abs() < 1e-7);
        assert!(
            (a.opportunistic_bound.unwrap() - b.opportunistic_bound.unwrap()).abs() < 1e-7
        );
    }
    let ca = capacity_bounds(&network, &policy, &access, &s).unwrap();
    let cb = capacity_bounds(&network, &policy, &access, &h).unwrap();
    assert!((ca.netcap_bound - cb.netcap_bound).abs() / ca.netcap_bound < 1e-6);
}
