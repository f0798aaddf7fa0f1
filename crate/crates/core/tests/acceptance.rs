//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary
//! (`harness = false`) and exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use afeng::affect::{appraise, derive_behaviors, tables, valence, EmotionDistribution, Valence};
use afeng::baselines::{default_grid, run_comparison, ComparisonConfig};
use afeng::bml;
use afeng::classifier::{synthetic_vector_map, EmotionClassifier, FitOptions};
use afeng::corpus::{split, synthetic_corpus, CorpusSplit};
use afeng::eval::{confusion, f1_score, pearson, report};
use afeng::neural::layers::{conv1d_forward, maxpool1d, ConvLayer, LstmLayer};
use afeng::neural::{adadelta_update, AdadeltaState, LayerOrder, Tensor};
use afeng::EmotionLabel;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for order in [LayerOrder::CnnLstm, LayerOrder::LstmCnn] {
        let config = tiny_config(order);
        check(
            config.max_len == 7 && config.embedding_dim == 6 && config.filter_count == 3 && config.hidden_size == 5,
            || "unexpected check configuration".into(),
        )?;
        let model = random_model(config, 6, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let examples = random_examples(&mut rng, &model.config, 3, false);
        let batch: Vec<_> = examples.iter().collect();
        for (name, err) in gradient_check(&model, &batch, 1e-5) {
            check(err <= 1e-4, || format!("{order:?} {name}: relative error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("max relative error {worst:.2e} in {:.1}s", elapsed.as_secs_f64()))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst = 0.0f64;
    let mut track = |a: f64, b: f64| -> Result<(), String> {
        let d = (a - b).abs();
        worst = worst.max(d);
        check(d <= 1e-12, || format!("difference {d:e}"))
    };
    for _ in 0..100 {
        let (len, dim, filters) = (rng.random_range(3..12), rng.random_range(1..7), rng.random_range(1..5));
        let width = rng.random_range(1..=len.min(5));
        let x = random_matrix(&mut rng, len, dim);
        let weight: Vec<f64> = (0..width * dim * filters).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias: Vec<f64> = (0..filters).map(|_| rng.random_range(-1.0..1.0)).collect();
        let conv = ConvLayer {
            width,
            weight: Tensor::from_vec(vec![width, dim, filters], weight.clone()),
            bias: Tensor::from_vec(vec![filters], bias.clone()),
        };
        let got = conv1d_forward(&Tensor::from_rows(&x), &conv).map_err(|e| e.to_string())?;
        let want = oracle_conv(&x, &weight, &bias, width);
        check(got.rows() == want.len(), || "conv output length".into())?;
        for (a, b) in got.data().iter().zip(want.iter().flatten()) {
            track(*a, *b)?;
        }

        let pool = rng.random_range(1..6);
        let (pooled, _) = maxpool1d(&Tensor::from_rows(&x), pool);
        let want = oracle_maxpool(&x, pool);
        check(pooled.rows() == want.len(), || "maxpool output length".into())?;
        for (a, b) in pooled.data().iter().zip(want.iter().flatten()) {
            track(*a, *b)?;
        }

        let h = rng.random_range(1..6);
        let wx = random_matrix(&mut rng, dim, 4 * h);
        let wh = random_matrix(&mut rng, h, 4 * h);
        let b: Vec<f64> = (0..4 * h).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lstm = LstmLayer {
            input_weight: Tensor::from_rows(&wx),
            recurrent_weight: Tensor::from_rows(&wh),
            bias: Tensor::from_vec(vec![4 * h], b.clone()),
        };
        let got = lstm.forward(&Tensor::from_rows(&x)).map_err(|e| e.to_string())?;
        for (a, e) in got.hidden.data().iter().zip(oracle_lstm(&x, &wx, &wh, &b).iter().flatten()) {
            track(*a, *e)?;
        }
    }
    Ok(format!("conv1d, maxpool, LSTM on 100 instances; max difference {worst:.1e}"))
}

fn adadelta_step() -> Outcome {
    let (rho, eps) = (0.95, 1e-6);
    let mut p = [0.0];
    let (mut eg, mut ed) = ([0.0], [0.0]);
    adadelta_update(&mut p, &[1.0], &mut eg, &mut ed, rho, eps);
    let first = -(eps.sqrt() / ((1.0 - rho) + eps).sqrt());
    check((p[0] - first).abs() <= 1e-12, || format!("first step {}", p[0]))?;
    check((p[0] + 0.004472).abs() < 5e-7, || format!("first step {} is not about -0.004472", p[0]))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 50;
    let mut param: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (mut sg, mut su) = (vec![0.0; n], vec![0.0; n]);
    let (mut hp, mut hg, mut hu) = (param.clone(), vec![0.0; n], vec![0.0; n]);
    for _ in 0..20 {
        let grad: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        adadelta_update(&mut param, &grad, &mut sg, &mut su, rho, eps);
        for i in 0..n {
            hg[i] = rho * hg[i] + (1.0 - rho) * grad[i].powi(2);
            let d = -(hu[i] + eps).sqrt() / (hg[i] + eps).sqrt() * grad[i];
            hu[i] = rho * hu[i] + (1.0 - rho) * d * d;
            hp[i] += d;
        }
        for i in 0..n {
            check((param[i] - hp[i]).abs() <= 1e-12, || format!("element {i} diverged from the formula"))?;
        }
    }
    let state = AdadeltaState::new(&random_model(tiny_config(LayerOrder::CnnLstm), 1, 0.1).params, rho, eps);
    check(state.rho == 0.95 && state.epsilon == 1e-6, || "state defaults".into())?;
    Ok(format!("first step {:.6}; 20 random steps match the formula", p[0]))
}

struct Synthetic {
    split: CorpusSplit,
    classifier: EmotionClassifier,
}

fn train_synthetic() -> Result<(Synthetic, Duration, usize), String> {
    let start = Instant::now();
    let parts = split(&synthetic_corpus(20, 42), 42, 0.25, 0.0).map_err(|e| e.to_string())?;
    let options = FitOptions::synthetic(42);
    let vectors = synthetic_vector_map(&options.preprocess, 42);
    let (classifier, history) = EmotionClassifier::fit(&parts, Some(&vectors), &options).map_err(|e| e.to_string())?;
    Ok((
        Synthetic {
            split: parts,
            classifier,
        },
        start.elapsed(),
        history.epochs.len(),
    ))
}

fn macro_precision(s: &Synthetic, rows: &[afeng::corpus::LabeledSentence]) -> Result<(f64, f64), String> {
    let truth: Vec<EmotionLabel> = rows.iter().map(|r| r.label).collect();
    let predicted = s.classifier.predict_all(rows).map_err(|e| e.to_string())?;
    let cm = confusion(&truth, &predicted).map_err(|e| e.to_string())?;
    Ok((cm.accuracy(), report(&cm).macro_avg.precision))
}

fn synthetic_learning(s: &Synthetic, elapsed: Duration, epochs: usize) -> Outcome {
    check(s.split.train.len() + s.split.test.len() == 160, || "corpus is not 8x20".into())?;
    let (train_acc, _) = macro_precision(s, &s.split.train)?;
    let (_, test_precision) = macro_precision(s, &s.split.test)?;
    check(epochs <= 300, || format!("{epochs} epochs"))?;
    check(train_acc >= 0.95, || format!("training accuracy {train_acc:.3}"))?;
    check(test_precision >= 0.85, || format!("held-out macro precision {test_precision:.3}"))?;
    check(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{epochs} epochs, training accuracy {train_acc:.3}, held-out macro precision {test_precision:.3}, {:.0}s",
        elapsed.as_secs_f64()
    ))
}

fn directional_comparison(s: &Synthetic) -> Outcome {
    let config = ComparisonConfig::default().with_seed(42);
    let rows = run_comparison(&s.split, &default_grid(), &config, Some(&s.classifier)).map_err(|e| e.to_string())?;
    let (cnn, baselines) = rows.split_last().ok_or("no rows")?;
    check(baselines.len() == 6, || format!("{} baseline rows", baselines.len()))?;
    let best = baselines.iter().map(|r| r.macro_precision).fold(0.0, f64::max);
    for r in baselines {
        check(cnn.macro_precision >= r.macro_precision, || {
            format!(
                "CNN-LSTM {:.3} < {} / {} / {} {:.3}",
                cnn.macro_precision, r.classifier, r.model, r.vectorizer, r.macro_precision
            )
        })?;
    }
    Ok(format!("CNN-LSTM {:.3} >= best baseline {best:.3}", cnn.macro_precision))
}

fn metrics_oracle() -> Outcome {
    let f1 = f1_score(0.96, 0.92);
    check(format!("{f1:.2}") == "0.94", || format!("F1(0.96, 0.92) = {f1}"))?;
    let truth: Vec<EmotionLabel> = EmotionLabel::ALL.iter().copied().cycle().take(40).collect();
    let perfect = report(&confusion(&truth, &truth).map_err(|e| e.to_string())?);
    for m in perfect.per_class.iter().chain([&perfect.macro_avg]) {
        check(m.precision == 1.0 && m.recall == 1.0 && m.f1 == 1.0, || "perfect predictions not all 1".into())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [1usize, 17, 333] {
        let t: Vec<EmotionLabel> = (0..n).map(|_| EmotionLabel::ALL[rng.random_range(0..8)]).collect();
        let p: Vec<EmotionLabel> = (0..n).map(|_| EmotionLabel::ALL[rng.random_range(0..8)]).collect();
        let cm = confusion(&t, &p).map_err(|e| e.to_string())?;
        let rows: u64 = (0..8).map(|c| cm.row_sum(c)).sum();
        let cols: u64 = (0..8).map(|c| cm.col_sum(c)).sum();
        check(cm.total() == n as u64 && rows == n as u64 && cols == n as u64, || "totals not conserved".into())?;
        let rep = report(&cm);
        check(rep.macro_avg.support == n as u64, || "support not conserved".into())?;
    }
    Ok(format!("F1(0.96, 0.92) = {f1:.4}; perfect report all 1; totals conserved"))
}

fn mapping_totality() -> Outcome {
    let mut pairs = std::collections::HashSet::new();
    let mut counts = [0usize; 3];
    for e in EmotionLabel::ALL {
        let row = tables().row(e);
        check(row.emotion == e, || format!("row for {e} missing"))?;
        let b = derive_behaviors(e);
        check(
            !b.goal_behavior.is_empty() && !b.self_behavior.is_empty() && !b.other_behavior.is_empty(),
            || format!("empty behavior for {e}"),
        )?;
        check(pairs.insert((b.self_behavior, b.other_behavior)), || format!("duplicate pair at {e}"))?;
        counts[valence(e) as usize] += 1;
    }
    check(counts == [3, 1, 4], || format!("valence partition {counts:?}"))?;
    check(
        valence(EmotionLabel::Surprise) == Valence::Neutral,
        || "Surprise is not the neutral emotion".into(),
    )?;
    Ok("8 rows; 8 distinct (self, other) pairs; valence 3 Positive / 1 Neutral / 4 Negative".into())
}

fn bml_round_trip() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/bml");
    for e in EmotionLabel::ALL {
        let appraisal = appraise(&EmotionDistribution::peaked(e, 0.82).map_err(|e| e.to_string())?);
        check(appraisal.dominant == e, || format!("{e} is not dominant"))?;
        let doc = bml::compose(&appraisal, &derive_behaviors(e));
        let xml = bml::serialize(&doc);
        let validated = bml::validate(&xml).map_err(|errs| format!("{e}: {errs:?}"))?;
        let parsed = bml::parse(&xml).map_err(|errs| format!("{e}: {errs:?}"))?;
        check(validated == doc && parsed == doc, || format!("{e}: round trip changed the document"))?;
        let path = golden.join(format!("{}.xml", e.name().to_lowercase()));
        let expected = std::fs::read_to_string(&path).map_err(|err| format!("{}: {err}", path.display()))?;
        check(expected == xml, || format!("{e}: bytes differ from {}", path.display()))?;
    }
    Ok("8 documents round-trip and match the golden files".into())
}

fn checkpoint_round_trip(s: &Synthetic) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    s.classifier.save(dir.path()).map_err(|e| e.to_string())?;
    let loaded = EmotionClassifier::load(dir.path()).map_err(|e| e.to_string())?;
    check(loaded == s.classifier, || "loaded classifier differs".into())?;
    let model = &s.classifier.model;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for (sentence, _) in random_examples(&mut rng, &model.config, 100, true) {
        let a = model.predict_proba(&sentence.indices).map_err(|e| e.to_string())?;
        let b = loaded.model.predict_proba(&sentence.indices).map_err(|e| e.to_string())?;
        check(a.map(f64::to_bits) == b.map(f64::to_bits), || "forward outputs differ".into())?;
    }
    Ok("100 random inputs give bit-identical outputs after save/load".into())
}

fn pearson_utility() -> Outcome {
    let x: Vec<f64> = (0..20).map(|i| (i as f64).sqrt()).collect();
    let up = pearson(&x, &x.iter().map(|v| 3.0 * v - 1.0).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    let down = pearson(&x, &x.iter().map(|v| -0.5 * v).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    check((up.r - 1.0).abs() <= 1e-12 && (down.r + 1.0).abs() <= 1e-12, || format!("r = {}, {}", up.r, down.r))?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| 0.3 * v + rng.random_range(-1.0..1.0)).collect();
        let got = pearson(&a, &b).map_err(|e| e.to_string())?;
        let (r, p) = pearson_oracle(&a, &b);
        let d = (got.r - r).abs().max((got.p - p).abs());
        check(d <= 1e-10, || format!("r {} vs {r}, p {} vs {p}", got.r, got.p))?;
        worst = worst.max(d);
    }
    Ok(format!("r = +1 / -1 exactly; 50 random n=20 pairs within {worst:.1e}"))
}

fn cli_run(home: &Path) -> Result<(), String> {
    let steps: [&[&str]; 3] = [
        &["ingest", "--synthetic", "20", "--test-fraction", "0.25", "--validation-fraction", "0.05"],
        &["train", "--synthetic", "--epochs", "25"],
        &["evaluate"],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_afeng"))
            .arg("--home")
            .arg(home)
            .args(args)
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
        })?;
    }
    Ok(())
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| cli_run(a.path()));
        let hb = s.spawn(|| cli_run(b.path()));
        (ha.join().expect("run a"), hb.join().expect("run b"))
    });
    ra?;
    rb?;
    let artifacts = [
        "data/train.tsv",
        "data/validation.tsv",
        "data/test.tsv",
        "data/manifest.json",
        "model/model.ckpt",
        "model/vocab.tsv",
        "model/history.csv",
        "reports/report.txt",
        "reports/report.csv",
        "reports/confusion.csv",
    ];
    for f in artifacts {
        let x = std::fs::read(a.path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        let y = std::fs::read(b.path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        check(x == y, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical across two seeded CLI runs", artifacts.len()))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run("gradient correctness", gradient_correctness);
    ok &= run("oracle equivalence", oracle_equivalence);
    ok &= run("adadelta step", adadelta_step);

    let trained = catch_unwind(train_synthetic).unwrap_or_else(|_| Err("training panicked".into()));
    match &trained {
        Ok((s, elapsed, epochs)) => {
            ok &= run("synthetic-corpus learning", || synthetic_learning(s, *elapsed, *epochs));
            ok &= run("directional baseline comparison", || directional_comparison(s));
        }
        Err(e) => {
            for name in ["synthetic-corpus learning", "directional baseline comparison"] {
                ok &= run(name, || Err(e.clone()));
            }
        }
    }
    ok &= run("metrics oracle", metrics_oracle);
    ok &= run("mapping totality", mapping_totality);
    ok &= run("BML round trip", bml_round_trip);
    match &trained {
        Ok((s, _, _)) => ok &= run("checkpoint round trip", || checkpoint_round_trip(s)),
        Err(e) => ok &= run("checkpoint round trip", || Err(e.clone())),
    }
    ok &= run("pearson utility", pearson_utility);
    ok &= run("determinism", determinism);

    if !ok {
        std::process::exit(1);
    }
}
