mod common;

use fairwin::assignment::{plan_is_fair, FairnessSpec, FEASIBILITY_TOL};
use fairwin::coreset::{
    build_coreset, read_records_binary, read_records_csv, write_records_binary, write_records_csv, CoresetConfig,
    OnlineCoreset,
};
use fairwin::harness::{ingest_reader, quantize, CsvSchema};
use fairwin::meyerson::{MeyersonConfig, MeyersonSketch};
use fairwin::point::{ClusteringParams, GridPoint, GroupMask, TimedPoint};
use fairwin::sliding::{read_checkpoint, write_checkpoint, WindowSketch};
use fairwin::solver::{fairlet_decompose, local_search_fair};
use proptest::prelude::*;

fn stream_strategy(max_n: usize, side: i64) -> impl Strategy<Value = Vec<TimedPoint>> {
    prop::collection::vec((1..=side, 1..=side, 0usize..2, 1u32..4), 1..max_n).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (x, y, g, w))| TimedPoint::new(GridPoint(vec![x, y]), i as i64 + 1, w as f64, GroupMask::single(g)))
            .collect()
    })
}

fn params(k: usize, delta: i64) -> ClusteringParams {
    ClusteringParams::new(k, 1, delta, 2, 0.3, 0.1).unwrap()
}

fn keys(c: &OnlineCoreset) -> Vec<(i64, u64, u64)> {
    c.samples()
        .iter()
        .map(|s| (s.point.timestamp, s.coreset_weight.to_bits(), s.prob.to_bits()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn online_prefix_property(pts in stream_strategy(120, 200), seed in any::<u64>(), rate in 0.3f64..6.0, cut in 0usize..120) {
        let cfg = CoresetConfig::explicit(rate);
        let full = build_coreset(&pts, params(3, 200), &cfg, seed).unwrap();
        let t = cut.min(pts.len()) as i64;
        let prefix = build_coreset(&pts[..t as usize], params(3, 200), &cfg, seed).unwrap();
        let restricted: Vec<_> = keys(&full).into_iter().filter(|k| k.0 <= t).collect();
        prop_assert_eq!(restricted, keys(&prefix));
    }

    #[test]
    fn probability_sums_are_bounded(pts in stream_strategy(300, 500), seed in any::<u64>(), rate in 0.1f64..10.0) {
        let c = build_coreset(&pts, params(2, 500), &CoresetConfig::explicit(rate), seed).unwrap();
        for r in c.rings() {
            prop_assert!(r.prob_sum() <= r.prob_sum_bound());
        }
    }

    #[test]
    fn samples_are_well_formed(pts in stream_strategy(200, 300), seed in any::<u64>(), rate in 0.2f64..5.0) {
        let c = build_coreset(&pts, params(2, 300), &CoresetConfig::explicit(rate), seed).unwrap();
        let mut last = i64::MIN;
        for s in c.samples() {
            prop_assert!(s.prob > 0.0 && s.prob <= 1.0);
            prop_assert!((s.coreset_weight * s.prob - s.point.weight).abs() <= 1e-9 * s.point.weight);
            prop_assert!(s.point.timestamp > last);
            last = s.point.timestamp;
        }
        prop_assert!(c.len() <= pts.len());
        // rings never hold more than their Σ prob by a Chernoff-far margin
        let total_prob: f64 = c.rings().map(|r| r.prob_sum()).sum::<f64>() + c.inner().len() as f64;
        prop_assert!((c.len() as f64) <= 3.0 * total_prob + 20.0);
    }

    #[test]
    fn meyerson_assignments_are_permanent(pts in stream_strategy(200, 1000), seed in any::<u64>(), cut in 1usize..200) {
        let p = params(3, 1000);
        let run = |s: &[TimedPoint]| {
            let mut m = MeyersonSketch::new(p.clone(), MeyersonConfig::standard(&p), seed);
            for q in s {
                m.insert(q);
            }
            m
        };
        let full = run(&pts);
        let cut = cut.min(pts.len());
        let part = run(&pts[..cut]);
        prop_assert_eq!(&full.log()[..cut], part.log());
        prop_assert!(full.num_centers() <= full.center_bound());
        prop_assert_eq!(full.log().len(), pts.len());
        let opened = full.log().iter().filter(|e| e.opened).count();
        prop_assert!(opened >= full.num_centers());
    }

    #[test]
    fn window_extraction_stays_in_window(pts in stream_strategy(150, 100), seed in any::<u64>(), m in 1usize..40, target in 4usize..30) {
        let mut sk = WindowSketch::partitioned(params(2, 100), m, CoresetConfig::target(target), seed).unwrap();
        for p in &pts {
            sk.insert(p.clone()).unwrap();
            let t = sk.time() as i64;
            let w = sk.extract_window().unwrap();
            prop_assert!(w.iter().all(|q| q.timestamp > t - m as i64 && q.timestamp <= t));
            prop_assert!(w.iter().all(|q| q.weight > 0.0));
            prop_assert!(sk.retained() <= sk.memory().total());
        }
    }

    #[test]
    fn checkpoint_resume_is_identical(pts in stream_strategy(100, 60), seed in any::<u64>(), cut in 0usize..100) {
        let cfg = CoresetConfig::target(10);
        let mut a = WindowSketch::partitioned(params(2, 60), 16, cfg.clone(), seed).unwrap();
        let cut = cut.min(pts.len());
        for p in &pts[..cut] {
            a.insert(p.clone()).unwrap();
        }
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &a).unwrap();
        let mut b = read_checkpoint(&buf[..]).unwrap();
        prop_assert_eq!(&a, &b);
        for p in &pts[cut..] {
            a.insert(p.clone()).unwrap();
            b.insert(p.clone()).unwrap();
        }
        let dump = |s: &WindowSketch| {
            s.extract().unwrap().iter().map(|q| (q.timestamp, q.location.clone(), q.weight.to_bits())).collect::<Vec<_>>()
        };
        prop_assert_eq!(dump(&a), dump(&b));
    }

    #[test]
    fn records_round_trip(pts in stream_strategy(80, 1 << 20), seed in any::<u64>()) {
        let c = build_coreset(&pts, params(2, 1 << 20), &CoresetConfig::explicit(1.5), seed).unwrap();
        let samples = c.samples();
        let mut bin = Vec::new();
        write_records_binary(&mut bin, &samples).unwrap();
        prop_assert_eq!(&read_records_binary(&bin[..]).unwrap(), &samples);
        let mut text = Vec::new();
        write_records_csv(&mut text, &samples).unwrap();
        prop_assert_eq!(&read_records_csv(&text[..]).unwrap(), &samples);
    }

    #[test]
    fn quantization_error_is_within_one_cell(vals in prop::collection::vec(-1e6f64..1e6, 2..40), delta in 2i64..100_000) {
        let data: String = std::iter::once("v,g".to_string())
            .chain(vals.iter().map(|v| format!("{v},a")))
            .collect::<Vec<_>>()
            .join("\n");
        let got = ingest_reader(data.as_bytes(), &CsvSchema { delta, ..CsvSchema::new(vec!["v".into()], vec!["g".into()]) }).unwrap();
        let (lo, hi) = got.ranges[0];
        for (p, v) in got.points.iter().zip(&vals) {
            let q = p.location.0[0];
            prop_assert!(q >= 1 && q <= delta);
            prop_assert_eq!(q, quantize(*v, lo, hi, delta));
            if hi > lo {
                let back = lo + (q - 1) as f64 / (delta - 1) as f64 * (hi - lo);
                prop_assert!((back - v).abs() <= (hi - lo) / delta as f64 + 1e-9 * (hi - lo));
            }
        }
    }

    #[test]
    fn solver_outputs_are_fair(pts in stream_strategy(30, 50), seed in any::<u64>(), k in 1usize..4) {
        let set = common::set(&pts);
        let spec = FairnessSpec::new(vec![0.2, 0.2], vec![0.8, 0.8]).unwrap();
        for sol in [local_search_fair(&set, &spec, k, 1, 5, seed).unwrap(), fairlet_decompose(&set, &spec, k, 1).unwrap()] {
            if sol.feasible {
                prop_assert!(sol.centers.len() <= k);
                prop_assert!(plan_is_fair(&sol.plan, &set, sol.centers.len(), &spec, FEASIBILITY_TOL));
                prop_assert!(sol.verify(&set, 1).unwrap());
            }
        }
    }
}
