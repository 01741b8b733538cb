//! Degree of a fixed node: exact law, exact moments, asymptotic regimes.
//!
//! The parents chosen for each insertion form a two-color
//! Pólya-Eggenberger urn (gaps of node `j` against everyone else's), and
//! consecutive urns are chained by the hiccup: the new node's own gap joins
//! the other color before the next sample starts.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::combin::{binomial, double_factorial_odd, factorial, rising_uint};
use crate::dist::CountTable;
use crate::error::{invalid, Result};
use crate::oracle::tau;
use crate::scalar::{decimal12, Scalar};
use crate::Exact;

pub const DEFAULT_LOG_GAMMA_THRESHOLD: u64 = 10_000;

/// `<x>_s = x (x + 1) ... (x + s - 1)`.
pub fn rising<T: Scalar>(x: &T, s: u64) -> T {
    (0..s).fold(T::one(), |acc, i| acc * (x.clone() + T::from_u64(i)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RisingFactorial<T> {
    pub base: T,
    pub length: u64,
    pub value: T,
}

impl<T: Scalar> RisingFactorial<T> {
    pub fn new(base: T, length: u64) -> Self {
        let value = rising(&base, length);
        Self {
            base,
            length,
            value,
        }
    }
}

/// Law of the number of blue draws in `draws` draws from a Pólya-Eggenberger
/// urn with identity replacement, starting from `white` and `blue` balls.
pub fn polya_eggenberger_pmf<T: Scalar>(
    white: u64,
    blue: u64,
    draws: u64,
) -> Result<CountTable<T>> {
    if white + blue == 0 {
        return Err(invalid("the urn must start nonempty"));
    }
    let den = BigInt::from(rising_uint(white + blue, draws));
    let mut out = CountTable::new();
    for k in 0..=draws {
        let num = binomial(draws, k) * rising_uint(white, draws - k) * rising_uint(blue, k);
        out.add(k, T::from_big_ratio(&BigInt::from(num), &den));
    }
    Ok(out)
}

fn check_node(m: u32, j: u64, n: u64) -> Result<()> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if j > n {
        return Err(invalid(format!("node {j} does not exist at age {n}")));
    }
    Ok(())
}

fn indegree(m: u32, j: u64) -> u64 {
    if j == 0 {
        0
    } else {
        m as u64
    }
}

/// Exact law of the degree of node `j` at age `n` from the composition sum
/// over blue draw counts `(b_1, ..., b_{n-j})`, evaluated by dynamic
/// programming on `(r, b_1 + ... + b_r)`.
pub fn degree_pmf<T: Scalar>(m: u32, j: u64, n: u64) -> Result<CountTable<T>> {
    check_node(m, j, n)?;
    let mu = m as u64;
    let steps = n - j;
    let base = (mu + 1) * j;
    let binoms: Vec<BigUint> = (0..=mu).map(|b| binomial(mu, b)).collect();
    // weights[S] over prefix sums S
    let mut weights: Vec<BigUint> = vec![BigUint::one()];
    for r in 1..=steps {
        let hi = if r == 1 { mu.min(base) } else { mu };
        let mut next = vec![BigUint::zero(); weights.len() + mu as usize];
        for (s, c) in weights.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for b in 0..=hi {
                let w = &binoms[b as usize] * rising_uint(base + s as u64 + r - 1, b);
                next[s + b as usize] += c * w;
            }
        }
        weights = next;
    }
    let den = (0..steps).fold(BigUint::one(), |acc, r| {
        acc * rising_uint(tau(m, j + r), mu)
    });
    let den = BigInt::from(den);
    let off = indegree(m, j);
    let mut out = CountTable::new();
    for (s, c) in weights.into_iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        // d - off = m (n - j) - S
        let free = mu * steps - s as u64;
        let num = BigInt::from(factorial(free) * c);
        out.add(free + off, T::from_big_ratio(&num, &den));
    }
    Ok(out)
}

/// Law of the root degree in a plane-oriented recursive tree (`m = 1`,
/// `j = 0`): `(2n - d - 1)! d / ((n - d)! (2n - 1)!! 2^(n - d))`.
pub fn port_root_pmf<T: Scalar>(n: u64) -> CountTable<T> {
    if n == 0 {
        return CountTable::point(0);
    }
    let mut out = CountTable::new();
    for d in 1..=n {
        let num = factorial(2 * n - d - 1) * d;
        let den = factorial(n - d) * double_factorial_odd(n) * (BigUint::one() << (n - d) as usize);
        out.add(d, T::from_big_ratio(&BigInt::from(num), &BigInt::from(den)));
    }
    out
}

/// Exact mean and variance of the degree of node `j` at age `n`, with every
/// gamma ratio reduced to a finite product of rationals.
pub fn degree_moments<T: Scalar>(m: u32, j: u64, n: u64) -> Result<(T, T)> {
    check_node(m, j, n)?;
    let m1 = m as i64 + 1;
    let c1 = T::ratio(1, m1);
    let c2 = T::ratio(2, m1);
    // mu = Gamma(n+1) Gamma(j+c1) / (Gamma(n+c1) Gamma(j+1)), and the
    // second-moment term with c2 in place of c1
    let mut mu = T::one();
    let mut t1 = T::from_u64(2 * tau(m, n)) / T::from_u64(tau(m, j));
    for k in j..n {
        let k1 = T::from_u64(k + 1);
        let kk = T::from_u64(k);
        mu = mu * k1.clone() / (kk.clone() + c1.clone());
        t1 = t1 * k1 / (kk + c2.clone());
    }
    let var = t1 - mu.clone() * mu.clone() - mu.clone();
    let mean = mu - T::one() + T::from_u64(indegree(m, j));
    Ok((mean, var))
}

/// The same moments through `ln Gamma` in double precision, for large `n`.
pub fn degree_moments_log_gamma(m: u32, j: u64, n: u64) -> Result<(f64, f64)> {
    check_node(m, j, n)?;
    if j == n {
        return Ok((indegree(m, j) as f64, 0.0));
    }
    let m1 = m as f64 + 1.0;
    let (c1, c2) = (1.0 / m1, 2.0 / m1);
    let (nf, jf) = (n as f64, j as f64);
    let mu =
        (ln_gamma(nf + 1.0) + ln_gamma(jf + c1) - ln_gamma(nf + c1) - ln_gamma(jf + 1.0)).exp();
    let t1 = 2.0 * tau(m, n) as f64 / tau(m, j) as f64
        * (ln_gamma(nf + 1.0) + ln_gamma(jf + c2) - ln_gamma(nf + c2) - ln_gamma(jf + 1.0)).exp();
    let mean = mu - 1.0 + indegree(m, j) as f64;
    Ok((mean, t1 - mu * mu - mu))
}

/// Which evaluation produced a [`DegreeMomentReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPath {
    Exact,
    LogGamma,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeMomentReport {
    pub m: u32,
    pub j: u64,
    pub n: u64,
    pub exact: Option<(Exact, Exact)>,
    pub mean: f64,
    pub variance: f64,
    pub path: EvalPath,
}

impl DegreeMomentReport {
    pub fn to_json(&self) -> serde_json::Value {
        let (mean, variance) = match &self.exact {
            Some((a, b)) => (a.render(), b.render()),
            None => (decimal12(self.mean), decimal12(self.variance)),
        };
        serde_json::json!({
            "m": self.m,
            "j": self.j,
            "n": self.n,
            "mean": mean,
            "variance": variance,
            "mean_decimal": decimal12(self.mean),
            "variance_decimal": decimal12(self.variance),
            "regime": self.path,
        })
    }
}

/// Exact rationals up to `threshold`, log-gamma floats beyond it.
pub fn degree_moment_report(m: u32, j: u64, n: u64, threshold: u64) -> Result<DegreeMomentReport> {
    if n <= threshold {
        let (mean, var) = degree_moments::<Exact>(m, j, n)?;
        Ok(DegreeMomentReport {
            m,
            j,
            n,
            mean: mean.as_f64(),
            variance: var.as_f64(),
            exact: Some((mean, var)),
            path: EvalPath::Exact,
        })
    } else {
        let (mean, variance) = degree_moments_log_gamma(m, j, n)?;
        Ok(DegreeMomentReport {
            m,
            j,
            n,
            exact: None,
            mean,
            variance,
            path: EvalPath::LogGamma,
        })
    }
}

/// How the node label moves with `n`.
#[derive(Clone)]
pub enum RegimeSpec {
    FixedJ(u64),
    /// Caller-supplied `j_n`, growing slower than `n`.
    SlowGrowth(Arc<dyn Fn(u64) -> u64 + Send + Sync>),
    /// `j_n = ceil(theta n)`, `0 < theta <= 1`.
    LinearTheta(f64),
}

impl fmt::Debug for RegimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeSpec::FixedJ(j) => write!(f, "FixedJ({j})"),
            RegimeSpec::SlowGrowth(_) => write!(f, "SlowGrowth(..)"),
            RegimeSpec::LinearTheta(t) => write!(f, "LinearTheta({t})"),
        }
    }
}

impl RegimeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeSpec::FixedJ(_) => "fixed_j",
            RegimeSpec::SlowGrowth(_) => "slow_growth",
            RegimeSpec::LinearTheta(_) => "linear_theta",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegimeSpec::LinearTheta(t) if !(*t > 0.0 && *t <= 1.0) => {
                Err(invalid(format!("theta must lie in (0, 1], got {t}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label_at(&self, n: u64) -> u64 {
        match self {
            RegimeSpec::FixedJ(j) => *j,
            RegimeSpec::SlowGrowth(f) => f(n),
            RegimeSpec::LinearTheta(t) => ((t * n as f64).ceil() as u64).min(n),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeAsymptotics {
    pub regime: &'static str,
    pub m: u32,
    pub n: u64,
    pub j: u64,
    /// Leading-order mean at this `n` (fixed or slowly growing label).
    pub mean_scale: Option<f64>,
    /// Leading-order variance at this `n` (fixed label only).
    pub variance_scale: Option<f64>,
    /// Limit of the mean (linear regime only).
    pub mean_limit: Option<f64>,
    pub exact_mean: f64,
    pub exact_variance: f64,
}

impl DegreeAsymptotics {
    /// Exact mean over its leading-order or limiting value.
    pub fn ratio(&self) -> f64 {
        self.exact_mean / self.mean_scale.or(self.mean_limit).unwrap_or(f64::NAN)
    }
}

pub fn degree_asymptotics(m: u32, regime: &RegimeSpec, n: u64) -> Result<DegreeAsymptotics> {
    regime.validate()?;
    let j = regime.label_at(n);
    check_node(m, j, n)?;
    let m1 = m as f64 + 1.0;
    let alpha = m as f64 / m1;
    let (exact_mean, exact_variance) = degree_moments_log_gamma(m, j, n)?;
    let (nf, jf) = (n as f64, j as f64);
    let mut out = DegreeAsymptotics {
        regime: regime.name(),
        m,
        n,
        j,
        mean_scale: None,
        variance_scale: None,
        mean_limit: None,
        exact_mean,
        exact_variance,
    };
    match regime {
        RegimeSpec::FixedJ(_) => {
            let g1 = (ln_gamma(jf + 1.0 / m1) - ln_gamma(jf + 1.0)).exp();
            let g2 = (ln_gamma(jf + 2.0 / m1) - ln_gamma(jf + 1.0)).exp();
            out.mean_scale = Some(g1 * nf.powf(alpha));
            out.variance_scale =
                Some((2.0 * m1 * g2 / (m1 * jf + 1.0) - g1 * g1) * nf.powf(2.0 * alpha));
        }
        RegimeSpec::SlowGrowth(_) => {
            out.mean_scale = Some((nf / jf.max(1.0)).powf(alpha));
        }
        RegimeSpec::LinearTheta(t) => {
            out.mean_limit = Some(t.powf(-alpha) - 1.0 + m as f64);
        }
    }
    Ok(out)
}
