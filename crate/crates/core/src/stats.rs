//! Estimators and uncertainty bookkeeping for Monte Carlo outputs.
//!
//! Provides:
//! - `Estimate`: a mean with its standard error and sample count,
//! - `MeanAccumulator`: streaming mean/variance (Welford),
//! - `ClusterAccumulator`: cluster-robust standard errors for samples that
//!   share a deployment (samples within one deployment are correlated, so a
//!   plain binomial stderr would be optimistic).

/// A Monte Carlo estimate: sample mean, standard error, and count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

impl Estimate {
    /// Exact estimate with zero uncertainty (analytic fallbacks, constants).
    pub fn exact(value: f64) -> Self {
        Estimate { mean: value, stderr: 0.0, count: 0 }
    }

    /// The estimate of `a + b` for independent estimates.
    pub fn add(&self, other: &Estimate) -> Estimate {
        Estimate {
            mean: self.mean + other.mean,
            stderr: (self.stderr * self.stderr + other.stderr * other.stderr).sqrt(),
            count: self.count.min(other.count),
        }
    }

    /// The estimate of `a * b` for independent estimates (delta method).
    pub fn mul(&self, other: &Estimate) -> Estimate {
        let mean = self.mean * other.mean;
        let va = self.stderr * self.stderr;
        let vb = other.stderr * other.stderr;
        let var = va * other.mean * other.mean + vb * self.mean * self.mean + va * vb;
        Estimate { mean, stderr: var.sqrt(), count: self.count.min(other.count) }
    }

    /// The estimate scaled by an exact constant.
    pub fn scale(&self, c: f64) -> Estimate {
        Estimate { mean: c * self.mean, stderr: c.abs() * self.stderr, count: self.count }
    }
}

// ======================================================================
// Streaming mean / variance
// ======================================================================

/// Welford streaming accumulator for a scalar sample.
#[derive(Debug, Clone, Default)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean under i.i.d. sampling.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { mean: self.mean, stderr: self.stderr(), count: self.n }
    }

    /// Merge another accumulator into this one (Chan's parallel update).
    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let delta = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += delta * n2 / n;
        self.m2 += other.m2 + delta * delta * n1 * n2 / n;
        self.n += other.n;
    }
}

// ======================================================================
// Cluster-robust accumulation
// ======================================================================

/// Accumulates samples grouped into clusters (one cluster per deployment).
///
/// The mean is the plain pooled mean. The reported standard error is the
/// larger of the i.i.d. stderr and the cluster-level stderr of
/// per-cluster means weighted by cluster size, which stays honest when
/// samples within a deployment are positively correlated.
#[derive(Debug, Clone, Default)]
pub struct ClusterAccumulator {
    pooled: MeanAccumulator,
    /// Per-cluster (sum, count) pairs.
    clusters: Vec<(f64, u64)>,
    current: Option<(f64, u64)>,
}

impl ClusterAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Open a new cluster; subsequent `push` calls land in it.
    pub fn begin_cluster(&mut self) {
        self.finish_cluster();
        self.current = Some((0.0, 0));
    }

    fn finish_cluster(&mut self) {
        if let Some(c) = self.current.take() {
            if c.1 > 0 {
                self.clusters.push(c);
            }
        }
    }

    pub fn push(&mut self, x: f64) {
        self.pooled.push(x);
        let c = self
            .current
            .get_or_insert((0.0, 0));
        c.0 += x;
        c.1 += 1;
    }

    pub fn count(&self) -> u64 {
        self.pooled.count()
    }

    pub fn mean(&self) -> f64 {
        self.pooled.mean()
    }

    /// Pooled mean with the conservative (max of i.i.d. and cluster) stderr.
    pub fn estimate(&mut self) -> Estimate {
        self.finish_cluster();
        let iid = self.pooled.estimate();
        if self.clusters.len() < 2 {
            return iid;
        }
        // cluster-level variance of the pooled mean:
        // Var(sum_j S_j / N) ~= m/(m-1) * sum_j (S_j - n_j * mean)^2 / N^2
        let n_total: u64 = self.clusters.iter().map(|c| c.1).sum();
        let m = self.clusters.len() as f64;
        let mean = self.pooled.mean();
        let mut ss = 0.0;
        for (sum, n) in &self.clusters {
            let resid = sum - *n as f64 * mean;
            ss += resid * resid;
        }
        let var = ss * m / (m - 1.0) / (n_total as f64 * n_total as f64);
        Estimate {
            mean,
            stderr: iid.stderr.max(var.sqrt()),
            count: iid.count,
        }
    }

    /// Merge (cluster identities preserved; `other`'s open cluster closed).
    pub fn merge(&mut self, mut other: ClusterAccumulator) {
        other.finish_cluster();
        self.finish_cluster();
        self.pooled.merge(&other.pooled);
        self.clusters.extend(other.clusters);
    }
}

// ======================================================================
// Binomial helper
// ======================================================================

/// Estimate of a probability from `successes` out of `n` Bernoulli trials,
/// with the usual binomial standard error.
pub fn binomial_estimate(successes: u64, n: u64) -> Estimate {
    if n == 0 {
        return Estimate { mean: f64::NAN, stderr: f64::NAN, count: 0 };
    }
    let p = successes as f64 / n as f64;
    Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        count: n,
    }
}
