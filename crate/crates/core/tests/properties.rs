// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::brute_hausdorff;
use frbs_core::detect::argmin_profile;
use frbs_core::inference::{block_variance, quantile, surviving_blocks};
use frbs_core::segment::{layer_count, split_range};
use frbs_core::{hausdorff, seeded_intervals, Segment};
use proptest::prelude::*;

proptest! {
    #[test]
    fn seeded_intervals_well_formed(n in 2usize..3000, frac in 0.0f64..1.0) {
        let delta = 1 + ((n - 2) as f64 * frac) as usize;
        let set = seeded_intervals(n, delta).unwrap();
        prop_assert_eq!(set.layer_count(), layer_count(n, delta));
        prop_assert!(set.count() as f64 <= 8.0 * n as f64 / delta as f64);
        for layer in set.layers() {
            for seg in layer {
                prop_assert!(seg.start + 1 < seg.end && seg.end <= n);
            }
            for pair in layer.windows(2) {
                prop_assert!(pair[0].start <= pair[1].start);
            }
        }
        prop_assert_eq!(set.layers()[0].clone(), vec![Segment { start: 0, end: n }]);
    }

    #[test]
    fn layer_count_matches_log(n in 2usize..100_000, d in 1usize..1000) {
        prop_assume!(d < n);
        let expected = (n as f64 / d as f64).log2().ceil() as usize + 1;
        // float log2 is exact at powers of two, which is where rounding matters
        prop_assert_eq!(layer_count(n, d), expected);
    }

    #[test]
    fn hausdorff_agrees_and_is_bounded(
        n in 5usize..400,
        est in proptest::collection::btree_set(1usize..400, 0..6),
        truth in proptest::collection::btree_set(1usize..400, 0..6),
    ) {
        let est: Vec<usize> = est.into_iter().filter(|&v| v < n).collect();
        let truth: Vec<usize> = truth.into_iter().filter(|&v| v < n).collect();
        let d = hausdorff(&est, &truth, n);
        prop_assert!((d - brute_hausdorff(&est, &truth, n)).abs() < 1e-15);
        prop_assert!(d >= 1.0 / n as f64 - 1e-15);
        prop_assert!(d <= (n as f64 + 1.0) / n as f64);
        prop_assert!((hausdorff(&truth, &truth, n) - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn argmin_is_a_minimum(
        profile in proptest::collection::vec(-50.0f64..50.0, 1..80),
        s in 0usize..100,
        offset in 0usize..80,
    ) {
        let eta = s + 1 + offset.min(profile.len() - 1);
        let t = argmin_profile(&profile, s, eta).unwrap();
        prop_assert!(t > s && t <= s + profile.len());
        let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(profile[t - s - 1] <= min + 1e-12 * (1.0 + min.abs()));
    }

    #[test]
    fn split_range_respects_margin(start in 0usize..500, len in 0usize..500, margin in 0usize..60) {
        let seg = Segment { start, end: start + len };
        match split_range(seg, margin) {
            Some(r) => {
                let m = margin.max(1);
                prop_assert_eq!(*r.start(), start + m);
                prop_assert_eq!(*r.end(), start + len - m);
            }
            None => prop_assert!(len < 2 * margin.max(1)),
        }
    }

    #[test]
    fn quantile_monotone_and_bounded(
        mut xs in proptest::collection::vec(-1e3f64..1e3, 1..200),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (ql, qh) = (quantile(&xs, lo), quantile(&xs, hi));
        prop_assert!(ql <= qh);
        prop_assert!(xs[0] <= ql && qh <= xs[xs.len() - 1]);
    }

    #[test]
    fn removed_blocks_avoid_estimates(
        n in 20usize..2000,
        q in 1usize..20,
        etas in proptest::collection::vec(1usize..2000, 0..4),
    ) {
        let kept = surviving_blocks(n, q, &etas);
        for &i in &kept {
            prop_assert!(i >= 1 && 2 * q * i <= n);
            for &eta in &etas {
                let c = eta / (2 * q);
                prop_assert!(i + 1 < c || i > c + 1);
            }
        }
    }

    #[test]
    fn block_variance_scales_quadratically(
        z in proptest::collection::vec(-5.0f64..5.0, 60),
        c in -4.0f64..4.0,
    ) {
        let blocks = [1, 2, 3, 4, 5, 6];
        let base = block_variance(&z, 5, &blocks).unwrap();
        let scaled: Vec<f64> = z.iter().map(|v| c * v).collect();
        let s = block_variance(&scaled, 5, &blocks).unwrap();
        prop_assert!((s - c * c * base).abs() <= 1e-9 * (1.0 + s.abs()));
        let shifted: Vec<f64> = z.iter().map(|v| v + 3.0).collect();
        let t = block_variance(&shifted, 5, &blocks).unwrap();
        prop_assert!((t - base).abs() <= 1e-9 * (1.0 + base));
    }
}
