mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use attention_cycles::features::{
    daily_block, first_day_block, majority_interval, ratio_block, shape_features, AttentionConfig, AttentionExtractor,
    FirstDayPeriods,
};
use attention_cycles::ingest::{ActionKind, HourlyCumulativeSeries};

use common::*;

#[test]
fn every_attention_feature_matches_the_brute_force_definitions() {
    let extractor = AttentionExtractor::default();
    let names: BTreeSet<&str> = extractor
        .attention_dictionary()
        .names()
        .iter()
        .map(String::as_str)
        .collect();
    let mut rng = rng(20240101);
    for i in 0..1000 {
        let video = random_video(i, &mut rng);
        let oracle = video_oracle(&video);
        assert_eq!(oracle.keys().map(String::as_str).collect::<BTreeSet<_>>(), names);
        let fv = extractor.attention(&video);
        for (name, got) in fv.iter() {
            let want = oracle[name];
            assert!(close(got, want, 1e-9), "video {i} {name}: got {got}, oracle {want}");
        }
    }
}

#[test]
fn two_pointer_majority_interval_matches_full_scan() {
    let mut rng = rng(7);
    for _ in 0..1000 {
        let s = random_series(ActionKind::Likes, &mut rng);
        let ua = padded(&s);
        for t in [0.1, 0.5, 0.7, 0.9, 0.99, 1.0] {
            assert_eq!(majority_interval(&s, t), mi_scan(&ua, t), "share {t}");
        }
    }
}

#[test]
fn first_hour_flag_lets_hour_one_peak() {
    let mut inc = vec![0.0; HOURS];
    inc[0] = 100.0;
    inc[4] = 10.0;
    let s = HourlyCumulativeSeries::from_increments(ActionKind::Views, &inc).unwrap();
    let literal = shape_features(&s, false);
    assert_eq!(literal.pdi, 5.0);
    assert!((literal.ps - 10.0 / 110.0).abs() < 1e-15);
    let relaxed = shape_features(&s, true);
    assert_eq!(relaxed.pdi, 1.0);
    assert!((relaxed.ps - 100.0 / 110.0).abs() < 1e-15);

    let cfg = AttentionConfig {
        include_first_hour: true,
        ..Default::default()
    };
    let a = AttentionExtractor::new(cfg);
    assert_ne!(
        a.attention_dictionary().fingerprint(),
        AttentionExtractor::default().attention_dictionary().fingerprint()
    );
}

#[test]
fn custom_periods_follow_the_oracle_shape() {
    let periods = FirstDayPeriods::new([(0, 2), (2, 4), (4, 8), (8, 12), (12, 20), (20, 24)]).unwrap();
    let s = HourlyCumulativeSeries::new(ActionKind::Views, (1..=HOURS).map(|h| h as f64).collect()).unwrap();
    let b = first_day_block(&s, &periods);
    let lens = [2.0, 2.0, 4.0, 4.0, 8.0, 4.0];
    for (share, len) in b.share.iter().zip(lens) {
        assert!((share - len / 168.0).abs() < 1e-15);
    }
    assert_eq!(b.increase[0], 0.0);
    assert!((b.increase[2] - 2.0).abs() < 1e-15);
    assert!(FirstDayPeriods::new([(0, 1), (2, 3), (3, 6), (6, 12), (12, 18), (18, 24)]).is_err());
}

fn increments() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(0u32..1000, HOURS).prop_map(|v| v.into_iter().map(f64::from).collect()),
        prop::collection::vec(prop_oneof![9 => Just(0u32), 1 => 1u32..500], HOURS)
            .prop_map(|v| v.into_iter().map(f64::from).collect()),
    ]
}

fn series(kind: ActionKind, inc: &[f64]) -> HourlyCumulativeSeries {
    HourlyCumulativeSeries::from_increments(kind, inc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn daily_shares_partition_the_week(inc in increments()) {
        let s = series(ActionKind::Views, &inc);
        let b = daily_block(&s);
        let sum: f64 = b.d.iter().sum();
        if s.total() > 0.0 {
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert_eq!(b.dc[6], 1.0);
        } else {
            prop_assert_eq!(sum, 0.0);
            prop_assert_eq!(b.dc[6], 0.0);
        }
        prop_assert!(b.dc.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn shape_feature_bounds(inc in increments()) {
        let s = series(ActionKind::Views, &inc);
        let f = shape_features(&s, false);
        prop_assert!(f.mi[0] <= f.mi[1] && f.mi[1] <= f.mi[2]);
        prop_assert!(f.mi.iter().all(|&m| (0.0..=168.0).contains(&m)));
        prop_assert!((0.0..=1.0).contains(&f.ps));
        let total = s.total();
        if total > 0.0 {
            for h in 2..=HOURS {
                prop_assert!(f.ps >= (s.at_hour(h) - s.at_hour(h - 1)) / total);
            }
        }
        prop_assert!(f.pdi == 0.0 || (2.0..=168.0).contains(&f.pdi));
        prop_assert!((0.0..=168.0).contains(&f.ai));
        if f.pdi > 0.0 && f.ai > 0.0 {
            prop_assert!(f.ai >= f.pdi);
        }
    }

    #[test]
    fn power_of_two_scaling_changes_nothing(
        views in increments(), likes in increments(), dislikes in increments(), comments in increments(),
        e in -8i32..8,
    ) {
        let c = 2f64.powi(e);
        let ex = AttentionExtractor::default();
        let mut rng = common::rng(0);
        let mut v = random_video(0, &mut rng);
        v.series = [
            series(ActionKind::Views, &views),
            series(ActionKind::Likes, &likes),
            series(ActionKind::Dislikes, &dislikes),
            series(ActionKind::Comments, &comments),
        ];
        let base = ex.attention(&v);
        let mut scaled = v.clone();
        scaled.series = v.series.clone().map(|s| s.scaled(c));
        let other = ex.attention(&scaled);
        prop_assert_eq!(base.values(), other.values());
    }

    #[test]
    fn arbitrary_scaling_changes_shares_within_rounding(inc in increments(), c in 0.01f64..100.0) {
        let s = series(ActionKind::Comments, &inc);
        let t = s.scaled(c);
        let (a, b) = (daily_block(&s), daily_block(&t));
        for (x, y) in a.to_vec().iter().zip(b.to_vec()) {
            prop_assert!(close(*x, y, 1e-9));
        }
        let periods = FirstDayPeriods::default();
        for (x, y) in first_day_block(&s, &periods).to_vec().iter().zip(first_day_block(&t, &periods).to_vec()) {
            prop_assert!(close(*x, y, 1e-9));
        }
    }

    #[test]
    fn ratios_stay_in_range(
        views in increments(), likes in increments(), dislikes in increments(), comments in increments(),
    ) {
        let mut rng = common::rng(1);
        let mut v = random_video(0, &mut rng);
        v.series = [
            series(ActionKind::Views, &views),
            series(ActionKind::Likes, &likes),
            series(ActionKind::Dislikes, &dislikes),
            series(ActionKind::Comments, &comments),
        ];
        let block = ratio_block(&v, &FirstDayPeriods::default());
        for row in &block[..3] {
            prop_assert!(row.iter().all(|&x| x >= 0.0 && x.is_finite()));
        }
        prop_assert!(block[3].iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}
