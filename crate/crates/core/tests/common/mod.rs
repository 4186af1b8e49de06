//! Shared test support: brute-force feature definitions written directly
//! from the formulas, and random corpus builders.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use attention_cycles::ingest::{ActionKind, HourlyCumulativeSeries, VideoObservation};

pub const HOURS: usize = 168;
pub const PERIODS: [(usize, usize); 6] = [(0, 1), (1, 3), (3, 6), (6, 12), (12, 18), (18, 24)];

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// `ua[h]` for h in 0..=168 with `ua[0] = 0`.
pub fn padded(series: &HourlyCumulativeSeries) -> Vec<f64> {
    let mut ua = vec![0.0];
    ua.extend_from_slice(series.values());
    ua
}

pub fn hi(ua: &[f64], h: usize) -> f64 {
    div(ua[h] - ua[h - 1], ua[h - 1])
}

fn mean_hi(ua: &[f64], hours: impl Iterator<Item = usize>) -> f64 {
    let terms: Vec<f64> = hours.filter(|&h| h >= 2).map(|h| hi(ua, h)).collect();
    if terms.is_empty() {
        0.0
    } else {
        terms.iter().sum::<f64>() / terms.len() as f64
    }
}

/// Full scan over every window `(i, j]`.
pub fn mi_scan(ua: &[f64], share: f64) -> usize {
    let total = ua[HOURS];
    if total == 0.0 {
        return 0;
    }
    let mut best = usize::MAX;
    for i in 0..HOURS {
        for j in i + 1..=HOURS {
            if ua[j] - ua[i] >= share * total {
                best = best.min(j - i);
            }
        }
    }
    best
}

/// Every per-action feature, keyed by its dictionary name.
pub fn action_oracle(series: &HourlyCumulativeSeries, out: &mut BTreeMap<String, f64>) {
    let a = series.action().key();
    let ua = padded(series);
    let day = |i: usize| ua[24 * i];
    let total = ua[HOURS];
    for i in 1..=7 {
        out.insert(format!("{a}.D.d{i}"), div(day(i) - day(i - 1), total));
        out.insert(format!("{a}.DC.d{i}"), div(day(i), total));
        if i >= 2 {
            out.insert(format!("{a}.DI.d{i}"), div(day(i) - day(i - 1), day(i - 1)));
        }
        out.insert(format!("{a}.AHI.d{i}"), mean_hi(&ua, (i - 1) * 24 + 1..=i * 24));
    }
    for h in 2..=HOURS {
        out.insert(format!("{a}.HI.h{h}"), hi(&ua, h));
    }
    for t in [0.5, 0.7, 0.9] {
        out.insert(format!("{a}.MI.{t}"), mi_scan(&ua, t) as f64);
    }
    let incs: Vec<(usize, f64)> = (2..=HOURS).map(|h| (h, ua[h] - ua[h - 1])).collect();
    let peak = incs.iter().map(|p| p.1).fold(0.0, f64::max);
    let pdi = if peak > 0.0 {
        incs.iter().find(|p| p.1 == peak).unwrap().0
    } else {
        0
    };
    let ai = (1..=HOURS).filter(|&h| ua[h] > ua[h - 1]).max().unwrap_or(0);
    out.insert(format!("{a}.PDI"), pdi as f64);
    out.insert(format!("{a}.AI"), ai as f64);
    out.insert(format!("{a}.PS"), div(peak, total));
    let inc = |p: usize| {
        let (s, e) = PERIODS[p];
        ua[e] - ua[s]
    };
    for (p, &(s, e)) in PERIODS.iter().enumerate() {
        let prev = if p == 0 { 0.0 } else { inc(p - 1) };
        out.insert(format!("{a}.period.share.{}", p + 1), div(inc(p), total));
        out.insert(format!("{a}.period.increase.{}", p + 1), div(inc(p), prev));
        out.insert(format!("{a}.period.AHI.{}", p + 1), mean_hi(&ua, s + 1..=e));
    }
}

pub fn ratio_oracle(video: &VideoObservation, out: &mut BTreeMap<String, f64>) {
    let ua: Vec<Vec<f64>> = ActionKind::ALL.iter().map(|&k| padded(video.series(k))).collect();
    let span = |k: usize, s: usize, e: usize| ua[k][e] - ua[k][s];
    type Ratio = fn([f64; 4]) -> f64;
    let ratios: [(&str, Ratio); 4] = [
        ("positive", |a| div(a[1], a[0])),
        ("negative", |a| div(a[2], a[0])),
        ("engagement", |a| div(a[3], a[0])),
        ("controversiality", |a| div(a[1], a[1] + a[2])),
    ];
    for (name, f) in ratios {
        for i in 1..=7 {
            let a = [0, 1, 2, 3].map(|k| span(k, 24 * (i - 1), 24 * i));
            out.insert(format!("ratio.{name}.daily.d{i}"), f(a));
        }
        for i in 1..=6 {
            let a = [0, 1, 2, 3].map(|k| ua[k][24 * i]);
            out.insert(format!("ratio.{name}.cum.d{i}"), f(a));
        }
        for (p, &(s, e)) in PERIODS.iter().enumerate() {
            let a = [0, 1, 2, 3].map(|k| span(k, s, e));
            out.insert(format!("ratio.{name}.period.{}", p + 1), f(a));
        }
    }
}

pub fn video_oracle(video: &VideoObservation) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for k in ActionKind::ALL {
        action_oracle(video.series(k), &mut out);
    }
    ratio_oracle(video, &mut out);
    out
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Hourly increments with the shapes that stress the definitions: empty
/// weeks, single spikes, late starts, long flat tails and dense noise.
pub fn random_increments(rng: &mut impl Rng) -> Vec<f64> {
    let mut inc = vec![0.0; HOURS];
    match rng.random_range(0..6) {
        0 => {}
        1 => inc[rng.random_range(0..HOURS)] = rng.random_range(1..1000) as f64,
        2 => {
            let start = rng.random_range(0..HOURS);
            let stop = rng.random_range(start..HOURS);
            for x in &mut inc[start..=stop] {
                *x = rng.random_range(0..50) as f64;
            }
        }
        3 => {
            let peak = rng.random_range(0..48) as f64;
            let decay: f64 = rng.random_range(0.5..0.99);
            let scale = rng.random_range(10.0..1e5);
            for (h, x) in inc.iter_mut().enumerate() {
                let t = h as f64;
                let shape = if t < peak {
                    (t + 1.0) / (peak + 1.0)
                } else {
                    decay.powf(t - peak)
                };
                *x = (scale * shape).floor();
            }
        }
        4 => {
            for x in &mut inc {
                if rng.random_bool(0.1) {
                    *x = rng.random_range(1..20) as f64;
                }
            }
        }
        _ => {
            for x in &mut inc {
                *x = rng.random_range(0.0..100.0);
            }
        }
    }
    inc
}

pub fn random_series(kind: ActionKind, rng: &mut impl Rng) -> HourlyCumulativeSeries {
    HourlyCumulativeSeries::from_increments(kind, &random_increments(rng)).unwrap()
}

pub fn random_video(id: usize, rng: &mut impl Rng) -> VideoObservation {
    let series = ActionKind::ALL.map(|k| random_series(k, rng));
    let t0 = Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap();
    VideoObservation::new(format!("v{id:05}"), "c0", t0 + Duration::hours(id as i64), series).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
