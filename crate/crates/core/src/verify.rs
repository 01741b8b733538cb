//! Cross-check suites: every closed form against an exact oracle.

use serde::Serialize;

use crate::analytic::{cond_step_moments, mean_y, second_moments, StepMoments};
use crate::degree::{degree_moments, degree_pmf, port_root_pmf};
use crate::dist::PairTable;
use crate::error::{Error, Result};
use crate::martingale::{
    martingale_drift, mp_from_exact, p_matrix, p_matrix_mp, pq_by_recursion, q_vector, q_vector_mp,
    sigma_from_cov_limit_mp, sigma_mp,
};
use crate::oracle::{
    dp_color_counts_all, dp_degree, enumerate_histories, enumerate_sample_step, history_count,
    DEFAULT_HISTORY_BUDGET,
};
use crate::scalar::Scalar;
use crate::Exact;

pub const DRIFT_TOLERANCE: f64 = 1e-9;
const MAX_WITNESSES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Props,
    Degree,
    Martingale,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "props" => Ok(Suite::Props),
            "degree" => Ok(Suite::Degree),
            "martingale" => Ok(Suite::Martingale),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite {s:?}")),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: &'static str,
    /// The quantity under test, in words.
    pub quantity: &'static str,
    pub pass: bool,
    /// Number of individual comparisons made.
    pub cases: u64,
    pub note: Option<String>,
    pub witnesses: Vec<String>,
}

impl Check {
    fn new(id: &'static str, quantity: &'static str) -> Self {
        Self {
            id,
            quantity,
            pass: true,
            cases: 0,
            note: None,
            witnesses: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.pass = false;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    fn fail(&mut self, witness: String) {
        self.expect(false, || witness);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub max_m: u32,
    pub max_n: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn moment(t: &PairTable<Exact>, f: impl Fn(u64, u64) -> u64) -> Exact {
    t.expect(|&(w, b)| Exact::from_u64(f(w, b)))
}

pub fn props_checks(max_m: u32, max_n: u64) -> Result<Vec<Check>> {
    let mut agree = Check::new("oracles_agree", "law of (W, B): history enumeration vs dp");
    let mut means = Check::new("means", "E[Y0], E[Y1]");
    let mut second = Check::new("second_moments", "E[W^2], E[B^2], E[WB]");
    let mut nonneg = Check::new("variance_nonnegative", "Var W, Var B from closed forms");
    let mut step = Check::new("step_moments", "conditional intra-sample moments");
    let mut deferred = 0u64;
    for m in 1..=max_m {
        let tables = dp_color_counts_all::<Exact>(m, max_n)?;
        for (n, t) in tables.iter().enumerate() {
            let n = n as u64;
            if history_count(m, n) <= DEFAULT_HISTORY_BUDGET.into() {
                let h = enumerate_histories(m, n, DEFAULT_HISTORY_BUDGET)?;
                agree.expect(&h == t, || format!("m={m} n={n}"));
            }
            if n >= 1 {
                let v = mean_y::<Exact>(m, n)?;
                let ew = moment(t, |w, _| w);
                let eb = moment(t, |_, b| b) / Exact::from_int(2);
                means.expect(v.ey0 == ew && v.ey1 == eb, || format!("m={m} n={n}"));
            }
            if m >= 2 && n >= 1 {
                let s = second_moments::<Exact>(m, n)?;
                let ok = s.ew2 == moment(t, |w, _| w * w)
                    && s.eb2 == moment(t, |_, b| b * b)
                    && s.ewb == moment(t, |w, b| w * b);
                second.expect(ok, || format!("m={m} n={n}"));
                let v = mean_y::<Exact>(m, n)?;
                let two = Exact::from_int(2);
                let eb = v.ey1 * two;
                let ok = s.ew2 >= v.ey0.clone() * v.ey0 && s.eb2 >= eb.clone() * eb;
                nonneg.expect(ok, || format!("m={m} n={n}"));
            }
        }
        for n in 1..=max_n {
            for &(w, b) in tables[n as usize - 1].support() {
                let law = enumerate_sample_step(m, n, w, b)?;
                match cond_step_moments::<Exact>(m, n, w, b) {
                    Ok(c) => {
                        let want = StepMoments {
                            ew: moment(&law, |w, _| w),
                            eb: moment(&law, |_, b| b),
                            ew2: moment(&law, |w, _| w * w),
                            eb2: moment(&law, |_, b| b * b),
                            ewb: moment(&law, |w, b| w * b),
                        };
                        step.expect(c == want, || format!("m={m} n={n} W={w} B={b}"));
                    }
                    Err(Error::Singular { .. }) => deferred += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if deferred > 0 {
        step.note = Some(format!(
            "{deferred} states at (m, n) where a closed-form denominator vanishes; the sample-step oracle is authoritative there"
        ));
    }
    Ok(vec![agree, means, second, nonneg, step])
}

pub fn degree_checks(max_m: u32, max_n: u64) -> Result<Vec<Check>> {
    let mut pmf = Check::new(
        "degree_pmf",
        "law of the degree of node j: composition sum vs dp",
    );
    let mut moments = Check::new(
        "degree_moments",
        "mean and variance of the degree of node j",
    );
    let mut port = Check::new("port_root", "root degree law for m = 1");
    let mut mono = Check::new("degree_mean_monotone", "mean degree nonincreasing in j");
    for m in 1..=max_m {
        for n in 0..=max_n {
            let mut prev: Option<Exact> = None;
            for j in 0..=n {
                let a = degree_pmf::<Exact>(m, j, n)?;
                let b = dp_degree::<Exact>(m, j, n)?;
                pmf.expect(a == b, || format!("m={m} j={j} n={n}"));
                let mean = a.expect(|&d| Exact::from_u64(d));
                let var = a.expect(|&d| Exact::from_u64(d * d)) - mean.clone() * mean.clone();
                let (em, ev) = degree_moments::<Exact>(m, j, n)?;
                moments.expect(em == mean && ev == var, || format!("m={m} j={j} n={n}"));
                if let Some(p) = prev {
                    mono.expect(em <= p, || format!("m={m} j={j} n={n}"));
                }
                prev = Some(em);
            }
        }
    }
    for n in 0..=max_n.max(8) {
        let ok = port_root_pmf::<Exact>(n) == degree_pmf::<Exact>(1, 0, n)?;
        port.expect(ok, || format!("n={n}"));
    }
    Ok(vec![pmf, moments, port, mono])
}

pub fn martingale_checks(max_m: u32, max_n: u64) -> Result<Vec<Check>> {
    let mut closed = Check::new("pq_closed_form", "P_n, Q_n closed form vs recursion");
    let mut gamma = Check::new("pq_gamma_route", "P_n, Q_n by gamma functions vs exact");
    let mut drift = Check::new("martingale_drift", "E[M_n | state] - M_(n-1)");
    let mut sigma = Check::new(
        "sigma_consistency",
        "limit covariance of M_n vs that of (Y0, Y1)",
    );
    let close = |a: &crate::martingale::Mp, b: &Exact| {
        let b = mp_from_exact(b);
        (a.clone() - b.clone()).abs().to_f64() <= 1e-40 * (1.0 + b.abs().to_f64())
    };
    for m in 2..=max_m.max(2) {
        for n in 1..=max_n.max(2) {
            let (p, q) = pq_by_recursion(m, n)?;
            let pc = p_matrix::<Exact>(m, n)?;
            let qc = q_vector::<Exact>(m, n)?;
            closed.expect(p == pc && q == qc, || format!("m={m} n={n}"));
            let pm = p_matrix_mp(m, n)?;
            let qm = q_vector_mp(m, n)?;
            let ok = pm
                .entries()
                .iter()
                .zip(pc.entries().iter())
                .all(|(a, b)| close(a, b))
                && qm.iter().zip(qc.iter()).all(|(a, b)| close(a, b));
            gamma.expect(ok, || format!("m={m} n={n}"));
            if n >= 2 {
                let d = martingale_drift(m, n)?;
                let worst = d.max_abs_error.max(d.max_abs_error_closed_form);
                drift.expect(worst < DRIFT_TOLERANCE, || {
                    format!("m={m} n={n} error={worst:e}")
                });
            }
        }
        let a = sigma_mp(m)?;
        let b = sigma_from_cov_limit_mp(m)?;
        let ok = a.entries().iter().zip(b.entries().iter()).all(|(x, y)| {
            (x.clone() - y.clone()).abs().to_f64() <= 1e-40 * y.clone().abs().to_f64()
        });
        sigma.expect(ok, || format!("m={m}"));
    }
    Ok(vec![closed, gamma, drift, sigma])
}

pub fn run_suite(suite: Suite, max_m: u32, max_n: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Props | Suite::All) {
        checks.extend(props_checks(max_m, max_n)?);
    }
    if matches!(suite, Suite::Degree | Suite::All) {
        checks.extend(degree_checks(max_m, max_n)?);
    }
    if matches!(suite, Suite::Martingale | Suite::All) {
        checks.extend(martingale_checks(max_m, max_n)?);
    }
    if checks.iter().all(|c| c.cases == 0) {
        let mut c = Check::new("nothing_checked", "grid is empty");
        c.fail(format!("max_m={max_m} max_n={max_n}"));
        checks.push(c);
    }
    Ok(VerifyReport {
        suite,
        max_m,
        max_n,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for s in [Suite::Props, Suite::Degree, Suite::Martingale] {
            let r = run_suite(s, 3, 5).unwrap();
            assert!(r.pass, "{:#?}", r.checks);
        }
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>(), Ok(Suite::All));
        assert!("nope".parse::<Suite>().is_err());
    }
}
