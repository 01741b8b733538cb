//! Monte Carlo harness.
//!
//! Replicate `r` draws from its own ChaCha stream `(seed, r)`, so results do
//! not depend on how replicates are spread over workers. Partial aggregates
//! hold exact integer power sums and merge by addition; floating point only
//! enters when a [`SimReport`] is built.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::analytic::{cov_limit, Sym2};
use crate::error::{invalid, Error, Result};
use crate::model::CircuitState;

pub const DEFAULT_DRAW_BUDGET: u128 = 20_000_000_000;
pub const MIN_CLT_REPLICATES: u64 = 1_000;
/// Below this age the normal approximation is reported, not judged.
pub const MIN_CLT_AGE: u64 = 1_000;
pub const CLT_COV_TOLERANCE: f64 = 0.05;
pub const CLT_ALPHA: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub m: u32,
    pub n: u64,
    pub replicates: u64,
    pub seed: u64,
    /// Node labels whose degree is recorded at age `n`.
    pub degree_nodes: Vec<u64>,
    pub workers: usize,
    /// Upper bound on `replicates * n * m` parent draws.
    pub draw_budget: u128,
    /// Keep one row per replicate for CSV export.
    pub keep_rows: bool,
}

impl SimConfig {
    pub fn new(m: u32, n: u64, replicates: u64, seed: u64) -> Self {
        Self {
            m,
            n,
            replicates,
            seed,
            degree_nodes: Vec::new(),
            workers: std::thread::available_parallelism().map_or(1, |p| p.get()),
            draw_budget: DEFAULT_DRAW_BUDGET,
            keep_rows: false,
        }
    }

    pub fn draws(&self) -> u128 {
        self.replicates as u128 * self.n as u128 * self.m as u128
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if let Some(j) = self.degree_nodes.iter().find(|&&j| j > self.n) {
            return Err(invalid(format!(
                "node {j} does not exist at age {}",
                self.n
            )));
        }
        if self.draws() > self.draw_budget {
            return Err(Error::BudgetExceeded {
                what: "simulation",
                required: format!("{} parent draws", self.draws()),
                budget: self.draw_budget.to_string(),
            });
        }
        Ok(())
    }
}

/// Statistics of one grown circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplicateRow {
    pub replicate: u64,
    pub y0: u64,
    pub y1: u64,
    pub degrees: Vec<u64>,
    /// Largest `|Y0_k - Y0_{k-1}|` along the path.
    pub max_abs_dy0: u64,
    /// Largest `|B_k - B_{k-1}|` along the path.
    pub max_abs_db: u64,
}

pub fn stream_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

pub fn run_replicate(cfg: &SimConfig, replicate: u64) -> Result<ReplicateRow> {
    let mut rng = stream_rng(cfg.seed, replicate);
    let mut c = CircuitState::new(cfg.m)?;
    c.reserve(cfg.n);
    let (mut max_dy0, mut max_db) = (0u64, 0u64);
    let mut prev = c.color_counts();
    for _ in 0..cfg.n {
        c.grow(&mut rng);
        let now = c.color_counts();
        max_dy0 = max_dy0.max(now.white.abs_diff(prev.white));
        max_db = max_db.max(now.blue.abs_diff(prev.blue));
        prev = now;
    }
    let degrees = cfg
        .degree_nodes
        .iter()
        .map(|&j| c.degree_of(j))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateRow {
        replicate,
        y0: prev.y0(),
        y1: prev.y1(),
        degrees,
        max_abs_dy0: max_dy0,
        max_abs_db: max_db,
    })
}

/// Order of the highest joint moment kept for `(Y0, Y1)`.
const ORDER: usize = 4;

/// Exact partial sums; `merge` is associative and commutative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aggregate {
    pub count: u64,
    /// `power[a][b] = sum Y0^a Y1^b` for `a + b <= 4`.
    pub power: [[i128; ORDER + 1]; ORDER + 1],
    pub degree_sum: Vec<u128>,
    pub degree_sq_sum: Vec<u128>,
    pub max_abs_dy0: u64,
    pub max_abs_db: u64,
    pub increment_violations: u64,
}

impl Aggregate {
    pub fn new(degree_nodes: usize) -> Self {
        Self {
            count: 0,
            power: [[0; ORDER + 1]; ORDER + 1],
            degree_sum: vec![0; degree_nodes],
            degree_sq_sum: vec![0; degree_nodes],
            max_abs_dy0: 0,
            max_abs_db: 0,
            increment_violations: 0,
        }
    }

    pub fn push(&mut self, row: &ReplicateRow, m: u32) {
        self.count += 1;
        let (y0, y1) = (row.y0 as i128, row.y1 as i128);
        let mut pa = 1i128;
        for a in 0..=ORDER {
            let mut pb = 1i128;
            for b in 0..=ORDER - a {
                self.power[a][b] += pa * pb;
                pb *= y1;
            }
            pa *= y0;
        }
        for (i, &d) in row.degrees.iter().enumerate() {
            self.degree_sum[i] += d as u128;
            self.degree_sq_sum[i] += d as u128 * d as u128;
        }
        self.max_abs_dy0 = self.max_abs_dy0.max(row.max_abs_dy0);
        self.max_abs_db = self.max_abs_db.max(row.max_abs_db);
        let m = m as u64;
        if row.max_abs_dy0 > m || row.max_abs_db > 2 * m {
            self.increment_violations += 1;
        }
    }

    pub fn merge(mut self, other: Aggregate) -> Aggregate {
        self.count += other.count;
        for a in 0..=ORDER {
            for b in 0..=ORDER - a {
                self.power[a][b] += other.power[a][b];
            }
        }
        for (x, y) in self.degree_sum.iter_mut().zip(&other.degree_sum) {
            *x += y;
        }
        for (x, y) in self.degree_sq_sum.iter_mut().zip(&other.degree_sq_sum) {
            *x += y;
        }
        self.max_abs_dy0 = self.max_abs_dy0.max(other.max_abs_dy0);
        self.max_abs_db = self.max_abs_db.max(other.max_abs_db);
        self.increment_violations += other.increment_violations;
        self
    }

    /// Central moments `E[(Y0 - mean)^p (Y1 - mean)^q]`, `p + q <= 4`, with
    /// divisor `count`, computed exactly and rounded once.
    pub fn central_moments(&self) -> [[f64; ORDER + 1]; ORDER + 1] {
        let n = BigInt::from(self.count);
        let raw = |a: usize, b: usize| BigRational::new(BigInt::from(self.power[a][b]), n.clone());
        let mu0 = raw(1, 0);
        let mu1 = raw(0, 1);
        let binom = |n: usize, k: usize| -> BigInt {
            (0..k).fold(BigInt::from(1), |acc, i| acc * (n - i) / (i + 1))
        };
        let pow = |x: &BigRational, e: usize| {
            (0..e).fold(BigRational::from_integer(1.into()), |acc, _| acc * x)
        };
        let mut out = [[0.0; ORDER + 1]; ORDER + 1];
        for p in 0..=ORDER {
            for q in 0..=ORDER - p {
                let mut acc = BigRational::zero();
                for i in 0..=p {
                    for k in 0..=q {
                        let sign = if (p - i + q - k) % 2 == 0 { 1 } else { -1 };
                        let coef = BigRational::from_integer(binom(p, i) * binom(q, k) * sign);
                        acc += coef * raw(i, k) * pow(&mu0, p - i) * pow(&mu1, q - k);
                    }
                }
                out[p][q] = acc.to_f64().unwrap_or(f64::NAN);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mardia {
    pub b1: f64,
    pub b2: f64,
    pub skew_stat: f64,
    pub skew_p: f64,
    pub kurt_stat: f64,
    pub kurt_p: f64,
}

/// Mardia's multivariate skewness and kurtosis for `d = 2` from central
/// moments with divisor `count`.
pub fn mardia(central: &[[f64; ORDER + 1]; ORDER + 1], count: u64) -> Mardia {
    let s = Sym2 {
        a11: central[2][0],
        a12: central[1][1],
        a22: central[0][2],
    };
    let inv = s.inverse().unwrap_or(Sym2 {
        a11: f64::NAN,
        a12: f64::NAN,
        a22: f64::NAN,
    });
    let si = |a: usize, b: usize| match (a, b) {
        (0, 0) => inv.a11,
        (1, 1) => inv.a22,
        _ => inv.a12,
    };
    // moment tensor entry: depends only on how many indices are 1
    let mt = |idx: &[usize]| {
        let q = idx.iter().sum::<usize>();
        central[idx.len() - q][q]
    };
    let mut b1 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for a2 in 0..2 {
                    for b2 in 0..2 {
                        for c2 in 0..2 {
                            b1 += si(a, a2)
                                * si(b, b2)
                                * si(c, c2)
                                * mt(&[a, b, c])
                                * mt(&[a2, b2, c2]);
                        }
                    }
                }
            }
        }
    }
    let mut b2 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    b2 += si(a, b) * si(c, d) * mt(&[a, b, c, d]);
                }
            }
        }
    }
    let n = count as f64;
    let dim = 2.0;
    let skew_stat = n * b1 / 6.0;
    let dof = dim * (dim + 1.0) * (dim + 2.0) / 6.0;
    let skew_p = ChiSquared::new(dof).map_or(f64::NAN, |c| c.sf(skew_stat));
    let kurt_stat = (b2 - dim * (dim + 2.0)) / (8.0 * dim * (dim + 2.0) / n).sqrt();
    let kurt_p = Normal::new(0.0, 1.0).map_or(f64::NAN, |z| 2.0 * z.sf(kurt_stat.abs()));
    Mardia {
        b1,
        b2,
        skew_stat,
        skew_p,
        kurt_stat,
        kurt_p,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub j: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub m: u32,
    pub n: u64,
    pub seed: Option<u64>,
    pub replicates: u64,
    /// Sample means of `(Y0, Y1)`.
    pub mean: [f64; 2],
    pub std_err: [f64; 2],
    /// Sample covariance of `(Y0, Y1)` with divisor `replicates - 1`.
    pub covariance: Sym2<f64>,
    pub skewness: [f64; 2],
    pub excess_kurtosis: [f64; 2],
    pub mardia: Mardia,
    pub degrees: Vec<DegreeSummary>,
    pub max_abs_dy0: u64,
    pub max_abs_db: u64,
    pub increment_violations: u64,
    /// Central moments with divisor `replicates`, indexed `[p][q]`.
    pub central_moments: [[f64; ORDER + 1]; ORDER + 1],
}

impl SimReport {
    fn from_central(
        m: u32,
        n: u64,
        count: u64,
        mean: [f64; 2],
        central: [[f64; ORDER + 1]; ORDER + 1],
    ) -> Self {
        let nf = count as f64;
        let bessel = if count > 1 { nf / (nf - 1.0) } else { f64::NAN };
        let var = [central[2][0], central[0][2]];
        SimReport {
            m,
            n,
            seed: None,
            replicates: count,
            mean,
            std_err: [(var[0] * bessel / nf).sqrt(), (var[1] * bessel / nf).sqrt()],
            covariance: Sym2 {
                a11: var[0] * bessel,
                a12: central[1][1] * bessel,
                a22: var[1] * bessel,
            },
            skewness: [
                central[3][0] / var[0].powf(1.5),
                central[0][3] / var[1].powf(1.5),
            ],
            excess_kurtosis: [
                central[4][0] / (var[0] * var[0]) - 3.0,
                central[0][4] / (var[1] * var[1]) - 3.0,
            ],
            mardia: mardia(&central, count),
            degrees: Vec::new(),
            max_abs_dy0: 0,
            max_abs_db: 0,
            increment_violations: 0,
            central_moments: central,
        }
    }

    pub fn from_aggregate(cfg: &SimConfig, agg: &Aggregate) -> Self {
        let nf = agg.count as f64;
        let mean = [agg.power[1][0] as f64 / nf, agg.power[0][1] as f64 / nf];
        let mut r = Self::from_central(cfg.m, cfg.n, agg.count, mean, agg.central_moments());
        r.seed = Some(cfg.seed);
        r.degrees = cfg
            .degree_nodes
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let s = BigRational::new(BigInt::from(agg.degree_sum[i]), BigInt::from(agg.count));
                let s2 =
                    BigRational::new(BigInt::from(agg.degree_sq_sum[i]), BigInt::from(agg.count));
                let var = (s2 - &s * &s).to_f64().unwrap_or(f64::NAN) * nf / (nf - 1.0);
                DegreeSummary {
                    j,
                    mean: s.to_f64().unwrap_or(f64::NAN),
                    variance: var,
                    std_err: (var / nf).sqrt(),
                }
            })
            .collect();
        r.max_abs_dy0 = agg.max_abs_dy0;
        r.max_abs_db = agg.max_abs_db;
        r.increment_violations = agg.increment_violations;
        r
    }

    /// Report over arbitrary real points, labelled as age `n`; used to
    /// calibrate [`clt_check`] on data with a known law.
    pub fn from_points(m: u32, n: u64, points: &[[f64; 2]]) -> Self {
        let count = points.len() as u64;
        let nf = count as f64;
        let mean = [
            points.iter().map(|p| p[0]).sum::<f64>() / nf,
            points.iter().map(|p| p[1]).sum::<f64>() / nf,
        ];
        let mut central = [[0.0; ORDER + 1]; ORDER + 1];
        for p in points {
            let (x, y) = (p[0] - mean[0], p[1] - mean[1]);
            for a in 0..=ORDER {
                for b in 0..=ORDER - a {
                    central[a][b] += x.powi(a as i32) * y.powi(b as i32);
                }
            }
        }
        for row in central.iter_mut() {
            for v in row.iter_mut() {
                *v /= nf;
            }
        }
        Self::from_central(m, n, count, mean, central)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    pub report: SimReport,
    pub aggregate: Aggregate,
    pub rows: Vec<ReplicateRow>,
}

/// Runs every replicate on a pool of `cfg.workers` threads.
pub fn run_sim(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let k = cfg.degree_nodes.len();
    let (aggregate, mut rows) = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| run_replicate(cfg, r))
            .try_fold(
                || (Aggregate::new(k), Vec::new()),
                |(mut agg, mut rows), row| {
                    let row = row?;
                    agg.push(&row, cfg.m);
                    if cfg.keep_rows {
                        rows.push(row);
                    }
                    Ok::<_, Error>((agg, rows))
                },
            )
            .try_reduce(
                || (Aggregate::new(k), Vec::new()),
                |(a, mut ra), (b, rb)| {
                    ra.extend(rb);
                    Ok((a.merge(b), ra))
                },
            )
    })?;
    rows.sort_by_key(|r| r.replicate);
    Ok(SimOutput {
        report: SimReport::from_aggregate(cfg, &aggregate),
        aggregate,
        rows,
    })
}

pub fn write_rows_csv<W: Write>(out: W, rows: &[ReplicateRow], degree_nodes: &[u64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["replicate".to_string(), "Y0".into(), "Y1".into()];
    header.extend(degree_nodes.iter().map(|j| format!("degree_{j}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.replicate.to_string(), r.y0.to_string(), r.y1.to_string()];
        rec.extend(r.degrees.iter().map(|d| d.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltCheck {
    pub m: u32,
    pub n: u64,
    pub replicates: u64,
    /// `Cov / n` entries `[11, 12, 22]`.
    pub scaled_covariance: [f64; 3],
    pub target: [f64; 3],
    pub cov_rel_err: [f64; 3],
    pub max_cov_rel_err: f64,
    pub mardia_skew_p: f64,
    pub mardia_kurt_p: f64,
    /// `None` below [`MIN_CLT_AGE`], where the check is only descriptive.
    pub pass: Option<bool>,
}

/// Compares the scaled sample covariance with the limit covariance and
/// tests bivariate normality.
pub fn clt_check(report: &SimReport, m: u32) -> Result<CltCheck> {
    if report.replicates < MIN_CLT_REPLICATES {
        return Err(Error::InsufficientReplicates {
            needed: MIN_CLT_REPLICATES,
            got: report.replicates,
        });
    }
    let target = cov_limit::<f64>(m)?.entries();
    let nf = report.n as f64;
    let c = &report.covariance;
    let scaled = [c.a11 / nf, c.a12 / nf, c.a22 / nf];
    let rel = [0, 1, 2].map(|i| ((scaled[i] - target[i]) / target[i]).abs());
    let max_rel = rel.iter().cloned().fold(0.0, f64::max);
    let (sp, kp) = (report.mardia.skew_p, report.mardia.kurt_p);
    let pass = (report.n >= MIN_CLT_AGE)
        .then_some(max_rel <= CLT_COV_TOLERANCE && sp >= CLT_ALPHA && kp >= CLT_ALPHA);
    Ok(CltCheck {
        m,
        n: report.n,
        replicates: report.replicates,
        scaled_covariance: scaled,
        target,
        cov_rel_err: rel,
        max_cov_rel_err: max_rel,
        mardia_skew_p: sp,
        mardia_kurt_p: kp,
        pass,
    })
}
