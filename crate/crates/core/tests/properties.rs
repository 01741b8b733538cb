use proptest::prelude::*;

use dyncircuit::degree::degree_pmf;
use dyncircuit::mc::{run_replicate, stream_rng, Aggregate, SimConfig};
use dyncircuit::oracle::{dp_color_counts, tau};
use dyncircuit::{CircuitState, Exact, Scalar};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grown_circuits_keep_invariants(m in 1u32..6, n in 0u64..200, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let c = CircuitState::grown(m, n, &mut rng).unwrap();
        c.check_invariants().unwrap();
        prop_assert_eq!(c.gap_total(), tau(m, n));
        let cc = c.color_counts();
        prop_assert_eq!(cc, c.recount_colors());
        prop_assert_eq!(cc.total(), tau(m, n));
        prop_assert!(cc.y0() + cc.y1() <= n + 1);
        prop_assert_eq!(cc.blue % 2, 0);
    }

    #[test]
    fn merge_is_associative_and_commutative(seed: u64, split in 1u64..39, split2 in 1u64..39) {
        let cfg = SimConfig::new(2, 30, 40, seed);
        let (lo, hi) = (split.min(split2), split.max(split2));
        let part = |a: u64, b: u64| {
            let mut agg = Aggregate::new(0);
            for r in a..b {
                agg.push(&run_replicate(&cfg, r).unwrap(), cfg.m);
            }
            agg
        };
        let whole = part(0, 40);
        let left = part(0, lo).merge(part(lo, hi)).merge(part(hi, 40));
        let right = part(0, lo).merge(part(lo, hi).merge(part(hi, 40)));
        let swapped = part(hi, 40).merge(part(0, lo)).merge(part(lo, hi));
        prop_assert_eq!(&left, &whole);
        prop_assert_eq!(&right, &whole);
        prop_assert_eq!(&swapped, &whole);
    }

    #[test]
    fn degree_law_is_a_distribution(m in 1u32..4, n in 0u64..12, pick in 0u64..1000) {
        let j = pick % (n + 1);
        let t = degree_pmf::<Exact>(m, j, n).unwrap();
        t.validate().unwrap();
        prop_assert_eq!(t.total(), Exact::from_int(1));
        let lo = if j == 0 { if n == 0 { 0 } else { m as u64 } } else { m as u64 };
        for &d in t.support() {
            prop_assert!(d >= lo && d <= m as u64 + (n - j) * m as u64, "d={} lo={}", d, lo);
        }
    }

    #[test]
    fn color_law_is_a_distribution(m in 1u32..4, n in 0u64..10) {
        let t = dp_color_counts::<Exact>(m, n).unwrap();
        prop_assert_eq!(t.total(), Exact::from_int(1));
        for &(w, b) in t.support() {
            prop_assert!(b % 2 == 0 && w + b / 2 <= n + 1);
        }
    }
}
