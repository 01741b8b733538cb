use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use dyncircuit::analytic::{cov_limit, mean_y};
use dyncircuit::degree::degree_moments;
use dyncircuit::mc::{stream_rng, SimReport};
use dyncircuit::{clt_check, run_sim, CircuitState, SimConfig};

#[test]
fn mean_white_count_within_three_se_of_exact() {
    let (m, n) = (2, 2000);
    let out = run_sim(&SimConfig::new(m, n, 20_000, 5)).unwrap();
    let exact = mean_y::<f64>(m, n).unwrap();
    let r = &out.report;
    assert!(
        (r.mean[0] - exact.ey0).abs() <= 3.0 * r.std_err[0],
        "{} vs {}",
        r.mean[0],
        exact.ey0
    );
    assert!(
        (r.mean[1] - exact.ey1).abs() <= 3.0 * r.std_err[1],
        "{} vs {}",
        r.mean[1],
        exact.ey1
    );
}

#[test]
fn root_degree_mean_within_three_se_of_exact() {
    let mut cfg = SimConfig::new(2, 10_000, 2_000, 9);
    cfg.degree_nodes = vec![0];
    let out = run_sim(&cfg).unwrap();
    let (mean, _) = degree_moments::<f64>(2, 0, 10_000).unwrap();
    let d = &out.report.degrees[0];
    assert!(
        (d.mean - mean).abs() <= 3.0 * d.std_err,
        "{} vs {mean} (se {})",
        d.mean,
        d.std_err
    );
}

#[test]
fn first_draw_follows_outdegree_plus_one() {
    let mut rng = stream_rng(17, 0);
    let base = CircuitState::grown(1, 6, &mut rng).unwrap();
    let outdeg = base.dump().outdeg;
    let total = base.gap_total() as f64;
    let trials = 200_000;
    let mut hits = vec![0u64; outdeg.len()];
    for _ in 0..trials {
        let mut c = base.clone();
        let t = c.insert_node(&mut rng);
        hits[t.parents[0] as usize] += 1;
    }
    for (v, &h) in hits.iter().enumerate() {
        let p = (outdeg[v] + 1) as f64 / total;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let f = h as f64 / trials as f64;
        assert!((f - p).abs() <= 5.0 * se, "node {v}: {f} vs {p}");
    }
}

#[test]
fn same_seed_same_report() {
    let mut a = SimConfig::new(3, 300, 500, 42);
    a.degree_nodes = vec![0, 10];
    let mut b = a.clone();
    b.workers = 1;
    let ra = run_sim(&a).unwrap();
    let rb = run_sim(&b).unwrap();
    assert_eq!(ra.aggregate, rb.aggregate);
    assert_eq!(
        ra.report.to_json().to_string(),
        rb.report.to_json().to_string()
    );
    let mut c = a.clone();
    c.seed = 43;
    assert_ne!(run_sim(&c).unwrap().aggregate, ra.aggregate);
}

#[test]
fn exact_normal_input_passes_clt_check() {
    let (m, n) = (2u32, 2000u64);
    let s = cov_limit::<f64>(m).unwrap();
    let nf = n as f64;
    let (a, b, c) = (s.a11 * nf, s.a12 * nf, s.a22 * nf);
    let l11 = a.sqrt();
    let l21 = b / l11;
    let l22 = (c - l21 * l21).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<[f64; 2]> = (0..100_000)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            [600.0 + l11 * z1, 150.0 + l21 * z1 + l22 * z2]
        })
        .collect();
    let report = SimReport::from_points(m, n, &points);
    let check = clt_check(&report, m).unwrap();
    assert_eq!(check.pass, Some(true), "{check:?}");
}

#[test]
fn wrong_covariance_fails_clt_check() {
    let (m, n) = (2u32, 2000u64);
    let s = cov_limit::<f64>(m).unwrap();
    let sd = (s.a11 * n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let points: Vec<[f64; 2]> = (0..10_000)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            [sd * z1, sd * z2]
        })
        .collect();
    let check = clt_check(&SimReport::from_points(m, n, &points), m).unwrap();
    assert_eq!(check.pass, Some(false));
}

#[test]
fn small_age_reports_without_verdict() {
    let out = run_sim(&SimConfig::new(2, 5, 2_000, 1)).unwrap();
    let check = clt_check(&out.report, 2).unwrap();
    assert_eq!(check.pass, None);
    assert!(check.scaled_covariance.iter().all(|x| x.is_finite()));
}
