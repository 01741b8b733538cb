//! The martingale array `M_n = P_n (W_n, B_n)^T + Q_n` and its scaling.
//!
//! `P_n` and `Q_n` have rational entries (ratios of gamma functions whose
//! arguments differ by integers), so they are available exactly. The
//! high-precision route evaluates the gamma functions directly with MPFR and
//! is checked against the exact one.

use std::ops::{Add, Mul, Sub};

use rug::ops::Pow;
use rug::Float;

use crate::analytic::{cond_step_means, cov_limit};
use crate::error::{invalid, Result};
use crate::oracle::{dp_color_counts, enumerate_sample_step, tau};
use crate::scalar::Scalar;
use crate::Exact;

/// Working precision of the float route, in bits (about 57 decimal digits).
pub const PRECISION_BITS: u32 = 192;

pub type Mp = Float;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T> Mat2<T>
where
    T: Clone + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    pub fn mul(&self, o: &Mat2<T>) -> Mat2<T> {
        let a = &self.0;
        let b = &o.0;
        let e = |i: usize, j: usize| {
            a[i][0].clone() * b[0][j].clone() + a[i][1].clone() * b[1][j].clone()
        };
        Mat2([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    pub fn apply(&self, v: &[T; 2]) -> [T; 2] {
        let a = &self.0;
        [
            a[0][0].clone() * v[0].clone() + a[0][1].clone() * v[1].clone(),
            a[1][0].clone() * v[0].clone() + a[1][1].clone() * v[1].clone(),
        ]
    }

    pub fn transpose(&self) -> Mat2<T> {
        let a = &self.0;
        Mat2([
            [a[0][0].clone(), a[1][0].clone()],
            [a[0][1].clone(), a[1][1].clone()],
        ])
    }

    pub fn entries(&self) -> [T; 4] {
        let a = &self.0;
        [
            a[0][0].clone(),
            a[0][1].clone(),
            a[1][0].clone(),
            a[1][1].clone(),
        ]
    }
}

impl<T: Scalar> Mat2<T> {
    pub fn identity() -> Self {
        Mat2([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let [[a, b], [c, d]] = self.0.clone();
        let det = a.clone() * d.clone() - b.clone() * c.clone();
        if det == T::zero() {
            return None;
        }
        Some(Mat2([
            [d / det.clone(), -b / det.clone()],
            [-c / det.clone(), a / det],
        ]))
    }
}

fn check(m: u32, n: u64, min_n: u64) -> Result<()> {
    if m < 2 {
        return Err(invalid("the martingale array is defined for m >= 2"));
    }
    if n < min_n {
        return Err(invalid(format!("need n >= {min_n}")));
    }
    Ok(())
}

/// Coefficient matrix of `E[(W_n, B_n) | F_{n-1}] = A_n (W, B)^T + (1, 0)^T`.
pub fn a_matrix<T: Scalar>(m: u32, n: u64) -> Result<Mat2<T>> {
    check(m, n, 2)?;
    let k = (m as u64 + 1) * (n - 1);
    let t = tau(m, n); // mn + n + 1
    let s = T::from_u64;
    let den2 = s(t - 3) * s(t - 2);
    Ok(Mat2([
        [s(k) / s(t - 2), T::zero()],
        [
            s(2 * m as u64 * k) / den2.clone(),
            s(k) * s(t - m as u64 - 3) / den2,
        ],
    ]))
}

fn rising_ratio<T: Scalar>(base_num: i64, base_den: i64, len: u64) -> T {
    // <base>_len / (len)!
    let mut acc = T::one();
    for i in 0..len {
        acc = acc * (T::ratio(base_num, base_den) + T::from_u64(i)) / T::from_u64(i + 1);
    }
    acc
}

/// `P_n` in closed form, `n >= 1`.
pub fn p_matrix<T: Scalar>(m: u32, n: u64) -> Result<Mat2<T>> {
    check(m, n, 1)?;
    let (mi, m1) = (m as i64, m as i64 + 1);
    // <1 + m/(m+1)>_{n-1} / (n-1)!  and  <1 + (m-1)/(m+1)>_{n-1} / (n-1)!
    let p11: T = rising_ratio(2 * mi + 1, m1, n - 1);
    let g: T = rising_ratio(2 * mi, m1, n - 1);
    let p22 = T::from_u64(tau(m, n) - 2) / T::from_int(mi) * g;
    let two = T::from_int(2);
    Ok(Mat2([
        [p11.clone(), T::zero()],
        [two.clone() * p11 - two * p22.clone(), p22],
    ]))
}

/// `Q_n` in closed form, `n >= 1`.
pub fn q_vector<T: Scalar>(m: u32, n: u64) -> Result<[T; 2]> {
    check(m, n, 1)?;
    let (mi, m1) = (m as i64, m as i64 + 1);
    let (mm, nn) = (T::from_int(mi), T::from_u64(n));
    let r: T = rising_ratio(3 * mi + 2, m1, n - 1);
    // <1 + (m-1)/(m+1)>_n / (n-1)! = n * (<...>_n / n!)
    let g: T = nn.clone() * rising_ratio(2 * mi, m1, n);
    let lin = (T::from_int(2) * mm.clone() + T::from_int(2)) * nn + mm.clone() - T::one();
    let q2 = T::from_int(m1) * lin / (mm.clone() * (T::from_int(3) * mm + T::one())) * g
        - T::from_int(2) * r.clone();
    Ok([T::one() - r, q2])
}

/// `P_n` and `Q_n` from `P_1 = I`, `Q_1 = 0` by `P_n = P_{n-1} A_n^{-1}`,
/// `Q_n = Q_{n-1} - P_n e_1`.
pub fn pq_by_recursion(m: u32, n: u64) -> Result<(Mat2<Exact>, [Exact; 2])> {
    check(m, n, 1)?;
    let mut p = Mat2::<Exact>::identity();
    let mut q = [Exact::from_int(0), Exact::from_int(0)];
    for k in 2..=n {
        let a_inv = a_matrix::<Exact>(m, k)?
            .inverse()
            .expect("A_n is lower triangular with nonzero diagonal");
        p = p.mul(&a_inv);
        q = [
            q[0].clone() - p.0[0][0].clone(),
            q[1].clone() - p.0[1][0].clone(),
        ];
    }
    Ok((p, q))
}

pub fn mp(v: i64) -> Mp {
    Float::with_val(PRECISION_BITS, v)
}

pub fn mp_ratio(num: i64, den: i64) -> Mp {
    Float::with_val(PRECISION_BITS, num) / Float::with_val(PRECISION_BITS, den)
}

pub fn mp_from_exact(q: &Exact) -> Mp {
    let num: rug::Integer = q.numer().to_string().parse().expect("decimal integer");
    let den: rug::Integer = q.denom().to_string().parse().expect("decimal integer");
    Float::with_val(PRECISION_BITS, rug::Rational::from((num, den)))
}

fn gamma(x: Mp) -> Mp {
    x.gamma()
}

fn mp_int(v: u64) -> Mp {
    Float::with_val(PRECISION_BITS, v)
}

/// The gamma-function route to `P_n` and `Q_n`.
pub fn p_matrix_mp(m: u32, n: u64) -> Result<Mat2<Mp>> {
    check(m, n, 1)?;
    let (mi, m1) = (m as i64, m as i64 + 1);
    let gn = gamma(mp_int(n));
    let p11 = gamma(mp_ratio((mi + 1) * n as i64 + mi, m1))
        / (gn.clone() * gamma(mp_ratio(2 * mi + 1, m1)));
    let p22 = mp_int(tau(m, n) - 2) * gamma(mp_ratio((mi + 1) * n as i64 + mi - 1, m1))
        / (mp(mi) * gn * gamma(mp_ratio(2 * mi, m1)));
    let two = mp(2);
    Ok(Mat2([
        [p11.clone(), mp(0)],
        [two.clone() * p11 - two * p22.clone(), p22],
    ]))
}

pub fn q_vector_mp(m: u32, n: u64) -> Result<[Mp; 2]> {
    check(m, n, 1)?;
    let (mi, m1) = (m as i64, m as i64 + 1);
    let ni = n as i64;
    let gn = gamma(mp_int(n));
    let r = gamma(mp_ratio((mi + 1) * ni + 2 * mi + 1, m1))
        / (gn.clone() * gamma(mp_ratio(3 * mi + 2, m1)));
    let lin = (2 * mi + 2) * ni + mi - 1;
    let q2 = mp(m1 * lin) * gamma(mp_ratio((mi + 1) * ni + 2 * mi, m1))
        / (mp(mi * (3 * mi + 1)) * gn * gamma(mp_ratio(2 * mi, m1)))
        - mp(2) * r.clone();
    Ok([mp(1) - r, q2])
}

/// `diag(n^{-(3m+1)/(2(m+1))}, n^{-(5m+1)/(2(m+1))})`.
pub fn k_matrix_mp(m: u32, n: u64) -> Mat2<Mp> {
    let (mi, m1) = (m as i64, m as i64 + 1);
    let nn = mp_int(n);
    let e1 = -mp_ratio(3 * mi + 1, 2 * m1);
    let e2 = -mp_ratio(5 * mi + 1, 2 * m1);
    Mat2([[nn.clone().pow(e1), mp(0)], [mp(0), nn.pow(e2)]])
}

/// Limit of the scaled conditional quadratic variation.
pub fn sigma_mp(m: u32) -> Result<Mat2<Mp>> {
    check(m, 1, 1)?;
    let (mi, m1) = (m as i64, m as i64 + 1);
    let g2 = gamma(mp_ratio(2 * mi, m1));
    let g3 = gamma(mp_ratio(3 * mi + 2, m1));
    let s11 = mp_ratio(2 * mi * mi, (3 * mi + 1) * m1) / g3.clone().square();
    let s12 = -mp_ratio(12 * mi * m1, (3 * mi + 1) * (4 * mi + 1)) / (g2.clone() * g3);
    let s22 = mp_ratio(
        24 * m1.pow(3) * (7 * mi + 3),
        (3 * mi + 1).pow(2) * (5 * mi + 1) * (2 * mi + 1),
    ) / g2.square();
    Ok(Mat2([[s11, s12.clone()], [s12, s22]]))
}

/// `L Cov(W, B) L^T`, where `L` is the leading-order map from `(W, 2 Y1)`
/// to the scaled martingale and `Cov(W, B)` comes from the `(Y0, Y1)` limit.
/// Equals [`sigma_mp`] when the two covariance statements are consistent.
pub fn sigma_from_cov_limit_mp(m: u32) -> Result<Mat2<Mp>> {
    let c = cov_limit::<Exact>(m)?;
    let (mi, m1) = (m as i64, m as i64 + 1);
    let two = Exact::from_int(2);
    let cwb = Mat2([
        [
            mp_from_exact(&c.a11),
            mp_from_exact(&(two.clone() * c.a12.clone())),
        ],
        [
            mp_from_exact(&(two.clone() * c.a12.clone())),
            mp_from_exact(&(two.clone() * two * c.a22)),
        ],
    ]);
    let g1 = gamma(mp_ratio(2 * mi + 1, m1));
    let g2 = gamma(mp_ratio(2 * mi, m1));
    let l = Mat2([
        [mp(1) / g1, mp(0)],
        [-mp_ratio(2 * m1, mi) / g2.clone(), mp_ratio(m1, mi) / g2],
    ]);
    Ok(l.mul(&cwb).mul(&l.transpose()))
}

/// High-precision `P_n`, `Q_n`, `K_n`, `A_n` and the limit `Sigma`.
#[derive(Clone, Debug)]
pub struct MartingaleMatrices {
    pub m: u32,
    pub n: u64,
    pub p: Mat2<Mp>,
    pub q: [Mp; 2],
    pub k: Mat2<Mp>,
    pub a: Mat2<Mp>,
    pub sigma: Mat2<Mp>,
}

pub fn martingale_matrices(m: u32, n: u64) -> Result<MartingaleMatrices> {
    check(m, n, 2)?;
    let a = a_matrix::<Exact>(m, n)?;
    let a = Mat2([
        [mp_from_exact(&a.0[0][0]), mp_from_exact(&a.0[0][1])],
        [mp_from_exact(&a.0[1][0]), mp_from_exact(&a.0[1][1])],
    ]);
    Ok(MartingaleMatrices {
        m,
        n,
        p: p_matrix_mp(m, n)?,
        q: q_vector_mp(m, n)?,
        k: k_matrix_mp(m, n),
        a,
        sigma: sigma_mp(m)?,
    })
}

pub fn mp_string(v: &Mp, digits: usize) -> String {
    v.to_string_radix(10, Some(digits))
}

impl MartingaleMatrices {
    pub fn to_json(&self, digits: usize) -> serde_json::Value {
        let m2 = |x: &Mat2<Mp>| {
            serde_json::json!([
                [mp_string(&x.0[0][0], digits), mp_string(&x.0[0][1], digits)],
                [mp_string(&x.0[1][0], digits), mp_string(&x.0[1][1], digits)],
            ])
        };
        serde_json::json!({
            "m": self.m,
            "n": self.n,
            "precision_bits": PRECISION_BITS,
            "P": m2(&self.p),
            "Q": [mp_string(&self.q[0], digits), mp_string(&self.q[1], digits)],
            "K": m2(&self.k),
            "A": m2(&self.a),
            "Sigma": m2(&self.sigma),
        })
    }
}

/// Largest entrywise `|E[M_n | state] - M_{n-1}|` over every reachable
/// state at age `n - 1`, with the conditional law taken from the sample-step
/// oracle and the matrices from the gamma-function route.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DriftCheck {
    pub m: u32,
    pub n: u64,
    pub states: usize,
    pub max_abs_error: f64,
    /// Same check with the conditional mean from the closed form instead of
    /// the oracle.
    pub max_abs_error_closed_form: f64,
}

pub fn martingale_drift(m: u32, n: u64) -> Result<DriftCheck> {
    check(m, n, 2)?;
    let p_prev = p_matrix_mp(m, n - 1)?;
    let q_prev = q_vector_mp(m, n - 1)?;
    let p = p_matrix_mp(m, n)?;
    let q = q_vector_mp(m, n)?;
    let reachable = dp_color_counts::<Exact>(m, n - 1)?;
    let m_of = |p: &Mat2<Mp>, q: &[Mp; 2], w: Mp, b: Mp| {
        let v = p.apply(&[w, b]);
        [v[0].clone() + q[0].clone(), v[1].clone() + q[1].clone()]
    };
    let err = |e: [Mp; 2], prev: &[Mp; 2]| {
        (0..2)
            .map(|i| (e[i].clone() - prev[i].clone()).abs().to_f64())
            .fold(0.0f64, f64::max)
    };
    let (mut worst, mut worst_cf) = (0.0f64, 0.0f64);
    for &(w, b) in reachable.support() {
        let law = enumerate_sample_step(m, n, w, b)?;
        let ew = law.expect(|&(w2, _)| Exact::from_u64(w2));
        let eb = law.expect(|&(_, b2)| Exact::from_u64(b2));
        let prev = m_of(&p_prev, &q_prev, mp_int(w), mp_int(b));
        // the hiccup adds one white node after the sample
        let e = m_of(&p, &q, mp_from_exact(&ew) + mp(1), mp_from_exact(&eb));
        worst = worst.max(err(e, &prev));
        let (cw, cb) = cond_step_means::<Exact>(m, n, w, b)?;
        let e = m_of(&p, &q, mp_from_exact(&cw) + mp(1), mp_from_exact(&cb));
        worst_cf = worst_cf.max(err(e, &prev));
    }
    Ok(DriftCheck {
        m,
        n,
        states: reachable.len(),
        max_abs_error: worst,
        max_abs_error_closed_form: worst_cf,
    })
}
