//! Exact ground truth for the closed forms.
//!
//! Two routes with different failure modes: [`enumerate_histories`] walks
//! every ordered parent sequence on a concrete circuit, while
//! [`dp_color_counts`] pushes the law of `(W, B)` through the color chain.
//! Both accumulate integer path weights over a common denominator (the
//! product of gap totals), so no fraction is reduced until the end.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::dist::{CountTable, DistTable, PairTable};
use crate::error::{invalid, Error, Result};
use crate::scalar::{big_ratio_to_f64, Scalar};
use crate::Exact;

pub const DEFAULT_HISTORY_BUDGET: u64 = 10_000_000;

/// Gap total `(m+1) n + 1` after `n` insertions.
pub fn tau(m: u32, n: u64) -> u64 {
    (m as u64 + 1) * n + 1
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        Err(invalid("m must be at least 1"))
    } else {
        Ok(())
    }
}

/// Number of ordered parent sequences up to age `n`: `prod_k k^m`.
pub fn history_count(m: u32, n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k).pow(m))
}

/// Number of gap-level draw sequences, `prod_k prod_s ((m+1)(k-1)+1+s)`.
pub fn gap_history_count(m: u32, n: u64) -> BigUint {
    common_denominator(m, n)
}

fn common_denominator(m: u32, n: u64) -> BigUint {
    let mut d = BigUint::one();
    for k in 1..=n {
        let t0 = tau(m, k - 1);
        for s in 0..m as u64 {
            d *= t0 + s;
        }
    }
    d
}

fn table_from_weights<K: crate::dist::OutcomeKey, T: Scalar>(
    weights: impl IntoIterator<Item = (K, BigUint)>,
    denom: &BigUint,
) -> DistTable<K, T> {
    let den = BigInt::from(denom.clone());
    weights
        .into_iter()
        .map(|(k, w)| (k, T::from_big_ratio(&BigInt::from(w), &den)))
        .collect()
}

/// Exact law of `(W_n, B_n)` by depth-first traversal of every parent
/// sequence, refusing when the number of sequences exceeds `budget`.
pub fn enumerate_histories(m: u32, n: u64, budget: u64) -> Result<PairTable<Exact>> {
    check_m(m)?;
    let count = history_count(m, n);
    if count > BigUint::from(budget) {
        return Err(Error::BudgetExceeded {
            what: "history enumeration",
            required: format!("{count} parent sequences"),
            budget: budget.to_string(),
        });
    }
    struct Walk {
        m: u32,
        n: u64,
        outdeg: Vec<u64>,
        acc: BTreeMap<(u64, u64), BigUint>,
    }
    impl Walk {
        // `k` is the node being inserted, `s` the draw within its sample
        fn visit(&mut self, k: u64, s: u32, weight: &BigUint) {
            if k > self.n {
                let white = self.outdeg.iter().filter(|&&d| d == 0).count() as u64;
                let blue = 2 * self.outdeg.iter().filter(|&&d| d == 1).count() as u64;
                *self.acc.entry((white, blue)).or_default() += weight;
                return;
            }
            if s == self.m {
                self.outdeg.push(0);
                self.visit(k + 1, 0, weight);
                self.outdeg.pop();
                return;
            }
            for v in 0..k as usize {
                let w = weight * (self.outdeg[v] + 1);
                self.outdeg[v] += 1;
                self.visit(k, s + 1, &w);
                self.outdeg[v] -= 1;
            }
        }
    }
    let mut walk = Walk {
        m,
        n,
        outdeg: vec![0],
        acc: BTreeMap::new(),
    };
    walk.visit(1, 0, &BigUint::one());
    Ok(table_from_weights(walk.acc, &common_denominator(m, n)))
}

type Weights = HashMap<(u64, u64), BigUint>;

/// One sample of `m` draws on the color chain, starting at gap total `t`.
fn color_sample_step(weights: &Weights, m: u32, mut t: u64) -> Weights {
    let mut cur = weights.clone();
    for _ in 0..m {
        let mut next: Weights = HashMap::with_capacity(cur.len() * 2);
        for (&(w, b), c) in &cur {
            if w > 0 {
                *next.entry((w - 1, b + 2)).or_default() += c * w;
            }
            if b > 0 {
                *next.entry((w, b - 2)).or_default() += c * b;
            }
            let r = t - w - b;
            if r > 0 {
                *next.entry((w, b)).or_default() += c * r;
            }
        }
        cur = next;
        t += 1;
    }
    cur
}

/// Exact laws of `(W_k, B_k)` for every age `k = 0..=n`.
pub fn dp_color_counts_all<T: Scalar>(m: u32, n: u64) -> Result<Vec<PairTable<T>>> {
    check_m(m)?;
    let mut weights: Weights = HashMap::from([((1, 0), BigUint::one())]);
    let mut denom = BigUint::one();
    let mut out = vec![PairTable::point((1, 0))];
    for k in 1..=n {
        let t0 = tau(m, k - 1);
        let after = color_sample_step(&weights, m, t0);
        for s in 0..m as u64 {
            denom *= t0 + s;
        }
        // hiccup: the new node brings one white gap
        weights = after
            .into_iter()
            .map(|((w, b), c)| ((w + 1, b), c))
            .collect();
        out.push(table_from_weights(
            weights.iter().map(|(k, c)| (*k, c.clone())),
            &denom,
        ));
    }
    Ok(out)
}

/// Exact law of `(W_n, B_n)` by dynamic programming on the color chain.
pub fn dp_color_counts<T: Scalar>(m: u32, n: u64) -> Result<PairTable<T>> {
    Ok(dp_color_counts_all(m, n)?
        .pop()
        .expect("age 0 is always present"))
}

/// Exact law of the intra-sample counts `(W, B)` after the `m` draws of the
/// sample that inserts node `n`, before the hiccup, starting from `(W, B)`
/// at gap total `(m+1)(n-1)+1`. Computed by tree recursion over the color
/// of each draw.
pub fn enumerate_sample_step(m: u32, n: u64, white: u64, blue: u64) -> Result<PairTable<Exact>> {
    check_m(m)?;
    if n == 0 {
        return Err(invalid("a sample step needs n >= 1"));
    }
    let t0 = tau(m, n - 1);
    if white + blue > t0 || blue % 2 == 1 {
        return Err(Error::InconsistentState(format!(
            "(W, B) = ({white}, {blue}) impossible with {t0} external nodes"
        )));
    }
    fn visit(
        m: u32,
        s: u32,
        t: u64,
        w: u64,
        b: u64,
        weight: &BigUint,
        acc: &mut BTreeMap<(u64, u64), BigUint>,
    ) {
        if s == m {
            *acc.entry((w, b)).or_default() += weight;
            return;
        }
        if w > 0 {
            visit(m, s + 1, t + 1, w - 1, b + 2, &(weight * w), acc);
        }
        if b > 0 {
            visit(m, s + 1, t + 1, w, b - 2, &(weight * b), acc);
        }
        let r = t - w - b;
        if r > 0 {
            visit(m, s + 1, t + 1, w, b, &(weight * r), acc);
        }
    }
    let mut acc = BTreeMap::new();
    visit(m, 0, t0, white, blue, &BigUint::one(), &mut acc);
    let denom = (0..m as u64).fold(BigUint::one(), |d, s| d * (t0 + s));
    Ok(table_from_weights(acc, &denom))
}

/// Exact law of the degree of node `j` at age `n`, by dynamic programming on
/// the number of gaps owned by `j`.
pub fn dp_degree<T: Scalar>(m: u32, j: u64, n: u64) -> Result<CountTable<T>> {
    check_m(m)?;
    if j > n {
        return Err(invalid(format!("node {j} does not exist at age {n}")));
    }
    let mut weights: BTreeMap<u64, BigUint> = BTreeMap::from([(1, BigUint::one())]);
    let mut denom = BigUint::one();
    let mut t = tau(m, j);
    for _ in j + 1..=n {
        for _ in 0..m {
            let mut next: BTreeMap<u64, BigUint> = BTreeMap::new();
            for (&w, c) in &weights {
                *next.entry(w + 1).or_default() += c * w;
                if t > w {
                    *next.entry(w).or_default() += c * (t - w);
                }
            }
            weights = next;
            denom *= t;
            t += 1;
        }
        // the inserted node's own gap
        t += 1;
    }
    let indeg = if j == 0 { 0 } else { m as u64 };
    Ok(table_from_weights(
        weights.into_iter().map(|(w, c)| (w - 1 + indeg, c)),
        &denom,
    ))
}

/// First and second moments of `(W_n, B_n)`, scaled by the common
/// denominator so every quantity stays an integer:
/// `sum_x = scale * E[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorMoments {
    pub m: u32,
    pub n: u64,
    pub scale: BigInt,
    pub sum_w: BigInt,
    pub sum_b: BigInt,
    pub sum_ww: BigInt,
    pub sum_wb: BigInt,
    pub sum_bb: BigInt,
}

impl ColorMoments {
    fn start(m: u32) -> Self {
        Self {
            m,
            n: 0,
            scale: BigInt::one(),
            sum_w: BigInt::one(),
            sum_b: BigInt::zero(),
            sum_ww: BigInt::one(),
            sum_wb: BigInt::zero(),
            sum_bb: BigInt::zero(),
        }
    }

    fn insert(&mut self) {
        let t0 = tau(self.m, self.n);
        for s in 0..self.m as u64 {
            let t = BigInt::from(t0 + s);
            let (w, b, ww, wb, bb) = (
                &self.sum_w,
                &self.sum_b,
                &self.sum_ww,
                &self.sum_wb,
                &self.sum_bb,
            );
            let nw = &t * w - w;
            let nb = &t * b + 2 * w - 2 * b;
            let nww = &t * ww - 2 * ww + w;
            let nwb = &t * wb + 2 * ww - 3 * wb - 2 * w;
            let nbb = &t * bb + 4 * w + 4 * b + 4 * wb - 4 * bb;
            self.sum_w = nw;
            self.sum_b = nb;
            self.sum_ww = nww;
            self.sum_wb = nwb;
            self.sum_bb = nbb;
            self.scale *= t;
        }
        // hiccup W -> W + 1
        self.sum_ww += 2 * &self.sum_w + &self.scale;
        self.sum_wb += &self.sum_b;
        self.sum_w += &self.scale;
        self.n += 1;
    }

    fn get<T: Scalar>(&self, sum: &BigInt) -> T {
        T::from_big_ratio(sum, &self.scale)
    }

    pub fn mean_w<T: Scalar>(&self) -> T {
        self.get(&self.sum_w)
    }
    pub fn mean_b<T: Scalar>(&self) -> T {
        self.get(&self.sum_b)
    }
    pub fn mean_ww<T: Scalar>(&self) -> T {
        self.get(&self.sum_ww)
    }
    pub fn mean_wb<T: Scalar>(&self) -> T {
        self.get(&self.sum_wb)
    }
    pub fn mean_bb<T: Scalar>(&self) -> T {
        self.get(&self.sum_bb)
    }

    /// `Cov(Y0, Y1)` entries as unreduced `(numerator, denominator)` pairs:
    /// `[var Y0, cov(Y0, Y1), var Y1]`.
    pub fn y_covariance_raw(&self) -> [(BigInt, BigInt); 3] {
        let d = &self.scale;
        let d2 = d * d;
        let var_w = &self.sum_ww * d - &self.sum_w * &self.sum_w;
        let cov_wb = &self.sum_wb * d - &self.sum_w * &self.sum_b;
        let var_b = &self.sum_bb * d - &self.sum_b * &self.sum_b;
        [(var_w, d2.clone()), (cov_wb, 2 * &d2), (var_b, 4 * d2)]
    }

    /// `Cov(Y0, Y1) / n` in floating point, computed from exact integers.
    pub fn y_covariance_per_n_f64(&self) -> [f64; 3] {
        let n = BigInt::from(self.n.max(1));
        self.y_covariance_raw()
            .map(|(num, den)| big_ratio_to_f64(&num, &(den * &n)))
    }
}

/// Exact first and second moments of `(W_n, B_n)` by propagating the moment
/// recurrence of the color chain; `visit` sees every age `1..=n`.
pub fn color_moments_with(
    m: u32,
    n: u64,
    mut visit: impl FnMut(&ColorMoments),
) -> Result<ColorMoments> {
    check_m(m)?;
    let mut cm = ColorMoments::start(m);
    for _ in 0..n {
        cm.insert();
        visit(&cm);
    }
    Ok(cm)
}

pub fn color_moments(m: u32, n: u64) -> Result<ColorMoments> {
    color_moments_with(m, n, |_| {})
}
