mod common;

use afeng::eval::*;
use afeng::EmotionLabel;
use common::{pearson_oracle, student_t_central};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn t_series_matches_known_quantiles() {
    // two-tailed 5% critical values
    for (nu, t) in [(1, 12.706204736174707), (2, 4.302652729749464), (18, 2.10092204024096), (19, 2.093024054408309)] {
        assert!((student_t_central(t, nu) - 0.95).abs() < 1e-9, "nu={nu}");
    }
}

#[test]
fn pearson_perfect_correlation() {
    let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 - 1.0).collect();
    let up: Vec<f64> = x.iter().map(|v| 2.0 * v + 5.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -v).collect();
    let a = pearson(&x, &up).unwrap();
    let b = pearson(&x, &down).unwrap();
    assert!((a.r - 1.0).abs() < 1e-12 && (b.r + 1.0).abs() < 1e-12);
    assert_eq!((a.p, b.p), (0.0, 0.0));
}

#[test]
fn pearson_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [5, 20, 21, 50] {
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| 0.4 * v + rng.random_range(-1.0..1.0)).collect();
            let got = pearson(&x, &y).unwrap();
            let (r, p) = pearson_oracle(&x, &y);
            assert!((got.r - r).abs() <= 1e-10 && (got.p - p).abs() <= 1e-10, "n={n}");
        }
    }
}

#[test]
fn pearson_rejects_bad_input() {
    assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
}

fn labels() -> impl Strategy<Value = Vec<(EmotionLabel, EmotionLabel)>> {
    prop::collection::vec((0usize..8, 0usize..8), 1..200).prop_map(|v| {
        v.into_iter()
            .map(|(a, b)| (EmotionLabel::from_index(a).unwrap(), EmotionLabel::from_index(b).unwrap()))
            .collect()
    })
}

proptest! {
    #[test]
    fn confusion_matches_a_tally(pairs in labels()) {
        let (truth, predicted): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
        let cm = confusion(&truth, &predicted).unwrap();
        let mut tally = [[0u64; 8]; 8];
        for (t, p) in &pairs {
            tally[t.index()][p.index()] += 1;
        }
        prop_assert_eq!(cm.counts, tally);
        prop_assert_eq!(cm.total(), pairs.len() as u64);
        let rows: u64 = (0..8).map(|c| cm.row_sum(c)).sum();
        let cols: u64 = (0..8).map(|c| cm.col_sum(c)).sum();
        prop_assert_eq!((rows, cols), (cm.total(), cm.total()));
    }

    #[test]
    fn metrics_stay_in_unit_interval(pairs in labels()) {
        let (truth, predicted): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
        let rep = report(&confusion(&truth, &predicted).unwrap());
        for m in rep.per_class.iter().chain([&rep.macro_avg]) {
            prop_assert!((0.0..=1.0).contains(&m.precision));
            prop_assert!((0.0..=1.0).contains(&m.recall));
            prop_assert!((0.0..=1.0).contains(&m.f1));
        }
        for m in &rep.per_class {
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
            prop_assert!(m.f1 + 1e-12 >= m.precision.min(m.recall));
        }
        let support: u64 = rep.per_class.iter().map(|m| m.support).sum();
        prop_assert_eq!(support, rep.macro_avg.support);
    }
}
