//! Closed-form moments of the color counts.
//!
//! Polynomials in `m` and `n` are evaluated in the target scalar with
//! Horner's rule, so no intermediate ever overflows a machine integer when
//! `T` is exact.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::oracle::tau;
use crate::scalar::Scalar;

/// Horner evaluation; coefficients from the highest power down.
pub(crate) fn horner<T: Scalar>(x: &T, coeffs: &[i64]) -> T {
    coeffs
        .iter()
        .fold(T::zero(), |acc, &c| acc * x.clone() + T::from_int(c))
}

fn s<T: Scalar>(v: u64) -> T {
    T::from_u64(v)
}

fn need_m2(m: u32) -> Result<()> {
    match m {
        0 => Err(invalid("m must be at least 1")),
        1 => Err(Error::Unsupported(
            "closed second moments need m >= 2; use the dp oracle for m = 1".into(),
        )),
        _ => Ok(()),
    }
}

/// Exact `E[Y0]`, `E[Y1]`: terminal nodes and nodes with one child.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentVector<T> {
    pub ey0: T,
    pub ey1: T,
    /// Set for `n = 0`, where the value is the originator-only convention.
    pub boundary: bool,
}

pub fn mean_y<T: Scalar>(m: u32, n: u64) -> Result<MomentVector<T>> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if n == 0 {
        return Ok(MomentVector {
            ey0: T::one(),
            ey1: T::zero(),
            boundary: true,
        });
    }
    let (mm, nn) = (s::<T>(m as u64), s::<T>(n));
    let one = T::one();
    let two = T::from_int(2);
    let three = T::from_int(3);
    let (ey0, ey1) = if m == 1 {
        (
            (two.clone() * nn.clone() + one.clone()) / three.clone(),
            (nn.clone() * nn.clone() + two.clone()) / (three * (two * nn - one)),
        )
    } else {
        let m1 = mm.clone() + one.clone();
        let ey0 = (m1.clone() * nn.clone() + mm.clone()) / horner(&mm, &[2, 1]);
        let lead = horner::<T>(&mm, &[2, 2, 0]) * nn.clone() + horner(&mm, &[2, 1, 1]);
        let ey1 = m1.clone() * (nn.clone() - one.clone()) * lead
            / (two * horner::<T>(&mm, &[3, 1]) * horner::<T>(&mm, &[2, 1]) * (m1 * nn - one));
        (ey0, ey1)
    };
    Ok(MomentVector {
        ey0,
        ey1,
        boundary: false,
    })
}

/// Leading rates `E[Y] ~ n * (y0, y1)` for `m >= 2`.
pub fn mean_rate<T: Scalar>(m: u32) -> (T, T) {
    let mm = s::<T>(m as u64);
    (
        horner::<T>(&mm, &[1, 1]) / horner(&mm, &[2, 1]),
        horner::<T>(&mm, &[1, 1, 0]) / (horner::<T>(&mm, &[3, 1]) * horner(&mm, &[2, 1])),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondMoments<T> {
    pub ew2: T,
    pub eb2: T,
    pub ewb: T,
}

/// Exact `E[W^2]`, `E[B^2]`, `E[WB]` for `m >= 2`, `n >= 1`.
pub fn second_moments<T: Scalar>(m: u32, n: u64) -> Result<SecondMoments<T>> {
    need_m2(m)?;
    if n == 0 {
        return Err(invalid("closed second moments need n >= 1"));
    }
    Ok(SecondMoments {
        ew2: ew2(m, n),
        eb2: eb2(m, n),
        ewb: ewb(m, n),
    })
}

fn ew2<T: Scalar>(m: u32, n: u64) -> T {
    let (mm, nn) = (s::<T>(m as u64), s::<T>(n));
    let m1 = mm.clone() + T::one();
    let t1 = s::<T>(tau(m, n) - 2); // mn + n - 1
    let sq = horner::<T>(&mm, &[2, 1]).powi(2);
    let head = m1.powi(3) * nn.powi(3) / (t1.clone() * sq.clone());
    let tail = horner::<T>(&mm, &[8, -1, -1]) * m1.powi(2) * nn.powi(2)
        + mm.clone() * m1 * horner::<T>(&mm, &[3, -6, -1]) * nn
        - mm.clone() * horner::<T>(&mm, &[2, 6, 3, 1]);
    head + tail / (t1 * sq * horner::<T>(&mm, &[3, 1]))
}

fn ewb<T: Scalar>(m: u32, n: u64) -> T {
    let (mm, nn) = (s::<T>(m as u64), s::<T>(n));
    let m1 = mm.clone() + T::one();
    let t = tau(m, n);
    let den = horner::<T>(&mm, &[4, 1])
        * horner::<T>(&mm, &[3, 1])
        * horner::<T>(&mm, &[2, 1]).powi(2)
        * s::<T>(t - 3)
        * s::<T>(t - 2);
    let num = T::from_int(2) * mm.clone() * horner::<T>(&mm, &[4, 1]) * m1.powi(4) * nn.powi(3)
        + horner::<T>(&mm, &[8, -16, 1, 1]) * m1.powi(3) * nn.powi(2)
        - horner::<T>(&mm, &[22, 3, 13, 2]) * m1.powi(2) * nn.clone()
        - T::from_int(2) * mm.clone() * m1 * horner::<T>(&mm, &[6, 5, 3, -2]);
    (nn - T::one()) * num / den
}

/// Coefficient of `m^7` in the constant term of the exact `E[B^2]` form.
/// The published value `-5182` is a transposition; `-5128` is what the
/// exact moment recurrence produces.
pub const EB2_M7_COEFF: i64 = -5128;

fn eb2<T: Scalar>(m: u32, n: u64) -> T {
    if n == 1 {
        // B_1 = 0; the general form is 0/0 at m = 2
        return T::zero();
    }
    eb2_with(m, n, EB2_M7_COEFF)
}

pub(crate) fn eb2_with<T: Scalar>(m: u32, n: u64, m7: i64) -> T {
    let (mm, nn) = (s::<T>(m as u64), s::<T>(n));
    let m1 = mm.clone() + T::one();
    let t = tau(m, n);
    let f2 = horner::<T>(&mm, &[2, 1]).powi(2);
    let f3 = horner::<T>(&mm, &[3, 1]).powi(2);
    let f45 = horner::<T>(&mm, &[5, 1]) * horner::<T>(&mm, &[4, 1]);
    let a = T::from_int(4) * mm.powi(2) * m1.powi(5) * nn.powi(4) / (f3.clone() * f2.clone());
    let b = m1.powi(3) / (f45.clone() * f3.clone() * f2.clone())
        * (T::from_int(4)
            * m1.clone()
            * mm.clone()
            * horner::<T>(&mm, &[116, 47, 39, 13, 1])
            * nn.powi(3)
            + horner::<T>(&mm, &[304, -1772, -1836, -1043, -173, 7, 1]) * nn.powi(2));
    let c = m1.clone() / (f45 * f3 * horner::<T>(&mm, &[3, -1]) * f2)
        * (m1 * horner::<T>(&mm, &[528, 6100, 156, 261, 1731, 1594, 86, -83, -5]) * nn.clone()
            + T::from_int(2)
                * horner::<T>(&mm, &[144, -300, m7, -7839, -6918, -3483, -828, 99, 58, 3]));
    (nn - T::one()) * (a + b - c) / (s::<T>(t - 4) * s::<T>(t - 3) * s::<T>(t - 2))
}

/// Leading coefficients of `E[B_n^2] = c2 n^2 + c1 n + O(1)`.
pub fn eb2_asymptotic<T: Scalar>(m: u32) -> (T, T) {
    let mm = s::<T>(m as u64);
    let m1 = mm.clone() + T::one();
    let f2 = horner::<T>(&mm, &[2, 1]).powi(2);
    let f3 = horner::<T>(&mm, &[3, 1]).powi(2);
    let c2 = T::from_int(4) * mm.powi(2) * m1.powi(2) / (f3.clone() * f2.clone());
    let c1 = horner::<T>(&mm, &[96, 138, 83, 18, 1])
        / (horner::<T>(&mm, &[5, 1]) * horner::<T>(&mm, &[4, 1]) * f3)
        * T::from_int(4)
        * m1
        * mm
        / f2;
    (c2, c1)
}

/// Conditional moments of the intra-sample counts after the `m` draws of
/// the sample inserting node `n`, given `(W_{n-1}, B_{n-1}) = (W, B)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepMoments<T> {
    pub ew: T,
    pub eb: T,
    pub ew2: T,
    pub eb2: T,
    pub ewb: T,
}

fn check_state(m: u32, n: u64, w: u64, b: u64) -> Result<()> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if n == 0 {
        return Err(invalid("a sample step needs n >= 1"));
    }
    let t0 = tau(m, n - 1);
    if w + b > t0 || b % 2 == 1 {
        return Err(Error::InconsistentState(format!(
            "(W, B) = ({w}, {b}) impossible with {t0} external nodes"
        )));
    }
    Ok(())
}

/// `E[W' | W, B]` and `E[B' | W, B]`, defined on every consistent state.
pub fn cond_step_means<T: Scalar>(m: u32, n: u64, w: u64, b: u64) -> Result<(T, T)> {
    check_state(m, n, w, b)?;
    let k = (m as u64 + 1) * (n - 1);
    let a = k + 1; // gap total before the sample
    let (ww, bb) = (s::<T>(w), s::<T>(b));
    let ew = s::<T>(k) * ww.clone() / s::<T>(k + m as u64);
    let eb = if m == 1 {
        // only one draw: no second-order term from the sample
        (T::from_int(a as i64 - 2) * bb + T::from_int(2) * ww) / s::<T>(a)
    } else {
        s::<T>(k) * (T::from_int(a as i64 - 2) * bb + s::<T>(2 * m as u64) * ww)
            / (s::<T>(a + m as u64 - 2) * s::<T>(a + m as u64 - 1))
    };
    Ok((ew, eb))
}

/// The five coefficients multiplying `W^2, WB, B^2, W, B` in `E[B'^2 | W, B]`.
pub fn step_coefficients<T: Scalar>(m: u32, n: u64) -> [T; 5] {
    let (mm, nn) = (s::<T>(m as u64), s::<T>(n));
    let a = (mm.clone() + T::one()) * nn.clone() - mm.clone(); // mn - m + n
    let four_m = T::from_int(4) * mm.clone();
    let k = |c: i64| a.clone() - T::from_int(c);
    let c4 = mm.powi(2) * nn.powi(2) - mm.powi(2) * nn.clone()
        + T::from_int(2) * mm.clone() * nn.powi(2)
        + mm.powi(2)
        - T::from_int(7) * mm.clone() * nn.clone()
        + nn.powi(2)
        + mm.clone()
        - T::from_int(6) * nn.clone()
        + T::from_int(10);
    [
        four_m.clone() * (mm.clone() - T::one()) * k(2),
        four_m.clone() * k(3) * k(2),
        k(4) * k(3) * k(2),
        four_m * c4,
        T::from_int(2)
            * mm.clone()
            * k(2)
            * (T::from_int(2) * (mm.clone() + T::one()) * nn - mm - T::from_int(7)),
    ]
}

/// Full conditional second-order moments. Refuses `(m, n)` where a closed
/// form denominator vanishes; the sample-step oracle covers those.
pub fn cond_step_moments<T: Scalar>(m: u32, n: u64, w: u64, b: u64) -> Result<StepMoments<T>> {
    let (ew, eb) = cond_step_means(m, n, w, b)?;
    let mu = m as u64;
    let k = (mu + 1) * (n - 1);
    let a = k + 1;
    // mn + n - c = t - c; the E[B'^2] form divides by c = 1..=4
    let t = a + mu;
    if t < 5 {
        return Err(Error::Singular {
            formula: "conditional second moments",
            at: format!("m = {m}, n = {n}"),
        });
    }
    let (ww, bb) = (s::<T>(w), s::<T>(b));
    let (kk, mm) = (s::<T>(k), s::<T>(mu));
    let ew2 = kk.clone() * (T::from_int(a as i64 - 2) * ww.clone() + mm.clone()) * ww.clone()
        / (s::<T>(t - 2) * s::<T>(t - 1));
    let ewb = kk.clone()
        * T::from_int(a as i64 - 2)
        * ww.clone()
        * (T::from_int(a as i64 - 3) * bb.clone() + T::from_int(2) * mm.clone() * ww.clone()
            - T::from_int(2) * mm)
        / (s::<T>(t - 3) * s::<T>(t - 2) * s::<T>(t - 1));
    let [c1, c2, c3, c4, c5] = step_coefficients::<T>(m, n);
    let poly = c1 * ww.clone() * ww.clone()
        + c2 * ww.clone() * bb.clone()
        + c3 * bb.clone() * bb.clone()
        + c4 * ww
        + c5 * bb;
    let eb2 = kk * poly / (s::<T>(t - 4) * s::<T>(t - 3) * s::<T>(t - 2) * s::<T>(t - 1));
    Ok(StepMoments {
        ew,
        eb,
        ew2,
        eb2,
        ewb,
    })
}

/// Symmetric 2x2 matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sym2<T> {
    pub a11: T,
    pub a12: T,
    pub a22: T,
}

pub type CovMatrix<T> = Sym2<T>;

impl<T: Scalar> Sym2<T> {
    pub fn det(&self) -> T {
        self.a11.clone() * self.a22.clone() - self.a12.clone() * self.a12.clone()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a11 > T::zero() && self.det() > T::zero()
    }

    pub fn entries(&self) -> [T; 3] {
        [self.a11.clone(), self.a12.clone(), self.a22.clone()]
    }

    pub fn to_f64(&self) -> Sym2<f64> {
        Sym2 {
            a11: self.a11.as_f64(),
            a12: self.a12.as_f64(),
            a22: self.a22.as_f64(),
        }
    }

    pub fn inverse(&self) -> Option<Sym2<T>> {
        let d = self.det();
        if d == T::zero() {
            return None;
        }
        Some(Sym2 {
            a11: self.a22.clone() / d.clone(),
            a12: -self.a12.clone() / d.clone(),
            a22: self.a11.clone() / d,
        })
    }

    pub fn render(&self) -> serde_json::Value {
        serde_json::json!([
            [self.a11.render(), self.a12.render()],
            [self.a12.render(), self.a22.render()],
        ])
    }
}

/// Limit of `Cov(Y0_n, Y1_n) / n` for `m >= 2`.
pub fn cov_limit<T: Scalar>(m: u32) -> Result<CovMatrix<T>> {
    if m < 2 {
        return Err(invalid("the covariance limit needs m >= 2"));
    }
    let mm = s::<T>(m as u64);
    let m1 = mm.clone() + T::one();
    let f2 = horner::<T>(&mm, &[2, 1]).powi(2);
    let f3 = horner::<T>(&mm, &[3, 1]);
    let f4 = horner::<T>(&mm, &[4, 1]);
    let f5 = horner::<T>(&mm, &[5, 1]);
    let m2 = mm.powi(2);
    let two = T::from_int(2);
    Ok(Sym2 {
        a11: two.clone() * m2.clone() * m1.clone() / (f3.clone() * f2.clone()),
        a12: -(T::from_int(4) * m1.powi(2) * m2.clone()) / (f4.clone() * f3.clone() * f2.clone()),
        a22: two * m2 * m1 * horner::<T>(&mm, &[48, 59, 27, 4]) / (f5 * f4 * f3.powi(2) * f2),
    })
}

/// Covariance of the limiting normal law of `(Y - n * rate) / sqrt(n)`,
/// in the form given with the central limit theorem.
pub fn clt_sigma_tilde<T: Scalar>(m: u32) -> Result<CovMatrix<T>> {
    if m < 2 {
        return Err(invalid("the limit law needs m >= 2"));
    }
    let mm = s::<T>(m as u64);
    let sq = |c: &[i64]| horner::<T>(&mm, c).powi(2);
    let two_m2_m1 = T::from_int(2) * mm.powi(2) * (mm.clone() + T::one());
    Ok(Sym2 {
        a11: two_m2_m1.clone() / (horner::<T>(&mm, &[3, 1]) * sq(&[2, 1])),
        a12: -(T::from_int(4) * sq(&[1, 1]) * mm.powi(2))
            / (horner::<T>(&mm, &[4, 1]) * horner::<T>(&mm, &[3, 1]) * sq(&[2, 1])),
        a22: two_m2_m1 * horner::<T>(&mm, &[48, 59, 27, 4])
            / (horner::<T>(&mm, &[5, 1]) * horner::<T>(&mm, &[4, 1]) * sq(&[3, 1]) * sq(&[2, 1])),
    })
}
