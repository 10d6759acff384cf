//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use chutok::corpus::manifest::save_manifest;
use chutok::corpus::{
    filter_by_min_count, load_manifest, split, CharacterInstance, Corpus, FilterConfig, GlyphLabel, Granularity,
    SplitConfig,
};
use chutok::detection::{
    evaluate_detection, evaluate_detection_batch, iou, reading_order, segment_slip, BoundingBox,
    DetectionEvalConfig, SegmenterParams,
};
use chutok::postag::synthetic::{generate_pos_corpus, PosSyntheticParams};
use chutok::postag::{
    collapse_predictions, evaluate_pos, expand_sentence, load_bio, run_pos_experiment, write_bio, PosExample, PosTag,
    Propagation, TaggedSentence,
};
use chutok::recognition::{
    evaluate_multilabel, extract_features, fit_char_recognizer, fit_component_recognizer, top_k_accuracy,
    FeatureVector, RankedPrediction, DEFAULT_TEMPERATURE,
};
use chutok::synth::{generate_glyph_instances, generate_synthetic_slip, GlyphSet, GlyphSetParams, GlyphStyle, SlipLayout};
use chutok::tokenizer::{default_theta_grid, read_token_stream, recognize_slip, write_token_stream, Token, TokenSequence, TokenizerConfig};
use chutok::vocab::{build_vocabulary, ComponentId, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("metric oracles", metric_oracles),
        ("detection on synthetic slips", detection),
        ("reading order", reading_order_layouts),
        ("character recognition", character_recognition),
        ("sub-character recognition", subchar_recognition),
        ("split and filter exactness", split_filter),
        ("fallback boundaries", fallback),
        ("granularity effect", granularity),
        ("round trips", round_trips),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.1} s)", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.1} s)", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

// 1. Metric oracles.

/// Every one-to-one matching over eligible pairs; returns the size of the one
/// whose descending IoU list is lexicographically largest (greedy matching by
/// IoU picks exactly this matching when IoUs are distinct).
fn best_matching(weights: &[Vec<Option<f64>>]) -> usize {
    fn walk(w: &[Vec<Option<f64>>], i: usize, used: &mut Vec<bool>, chosen: &mut Vec<f64>, best: &mut Vec<f64>) {
        if i == w.len() {
            let mut v = chosen.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            if better(&v, best) {
                *best = v;
            }
            return;
        }
        walk(w, i + 1, used, chosen, best);
        for j in 0..used.len() {
            if let (Some(x), false) = (w[i][j], used[j]) {
                used[j] = true;
                chosen.push(x);
                walk(w, i + 1, used, chosen, best);
                chosen.pop();
                used[j] = false;
            }
        }
    }
    fn better(a: &[f64], b: &[f64]) -> bool {
        for (x, y) in a.iter().zip(b) {
            if x != y {
                return x > y;
            }
        }
        a.len() > b.len()
    }
    let n_gold = weights.first().map_or(0, Vec::len);
    let mut best = Vec::new();
    walk(weights, 0, &mut vec![false; n_gold], &mut Vec::new(), &mut best);
    best.len()
}

fn random_box(rng: &mut ChaCha8Rng) -> BoundingBox {
    BoundingBox::new(rng.random_range(0.0..60.0), rng.random_range(0.0..60.0), rng.random_range(8.0..30.0), rng.random_range(8.0..30.0))
}

fn detection_oracle(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let mut cases = 0;
    let mut attempts = 0;
    while cases < 250 {
        attempts += 1;
        let gold: Vec<BoundingBox> = (0..rng.random_range(0..=4)).map(|_| random_box(rng)).collect();
        let pred: Vec<BoundingBox> = (0..rng.random_range(0..=4))
            .map(|_| match gold.get(rng.random_range(0..gold.len() + 1)) {
                Some(g) => BoundingBox::new(
                    g.x + rng.random_range(-5.0..5.0),
                    g.y + rng.random_range(-5.0..5.0),
                    g.w * rng.random_range(0.7..1.3),
                    g.h * rng.random_range(0.7..1.3),
                ),
                None => random_box(rng),
            })
            .collect();
        let t = [0.3, 0.5, 0.7][rng.random_range(0..3)];
        let weights: Vec<Vec<Option<f64>>> = pred
            .iter()
            .map(|p| gold.iter().map(|g| Some(iou(p, g)).filter(|&v| v >= t)).collect())
            .collect();
        let mut eligible: Vec<f64> = weights.iter().flatten().flatten().copied().collect();
        eligible.sort_by(f64::total_cmp);
        if eligible.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        cases += 1;
        let tp = best_matching(&weights);
        let s = evaluate_detection(&pred, &gold, &DetectionEvalConfig::new(t).unwrap());
        let (p, r) = (ratio(tp, pred.len()), ratio(tp, gold.len()));
        check(
            s.true_positives == tp && s.precision == p && s.recall == r && s.f1 == f1(p, r),
            || format!("detection mismatch: got {s:?}, oracle tp {tp}"),
        )?;
    }
    check(attempts < 10 * cases, || "too many tied cases".into())?;
    Ok(cases)
}

fn multilabel_oracle(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = 250;
    for _ in 0..cases {
        let n = rng.random_range(1..=4);
        let set = |rng: &mut ChaCha8Rng, min: usize| -> Vec<ComponentId> {
            let mut ids: Vec<ComponentId> = (0..6).collect();
            ids.shuffle(rng);
            ids.truncate(rng.random_range(min..=2));
            ids
        };
        let gold: Vec<Vec<ComponentId>> = (0..n).map(|_| set(rng, 1)).collect();
        let predicted: Vec<Vec<ComponentId>> = (0..n).map(|_| set(rng, 0)).collect();
        let (mut tp, mut n_pred, mut n_gold) = (0, 0, 0);
        let mut per: BTreeMap<ComponentId, (usize, usize, usize)> = BTreeMap::new();
        for (p, g) in predicted.iter().zip(&gold) {
            for c in 0..6 {
                let (in_p, in_g) = (p.contains(&c), g.contains(&c));
                tp += (in_p && in_g) as usize;
                n_pred += in_p as usize;
                n_gold += in_g as usize;
                if in_p || in_g {
                    let e = per.entry(c).or_default();
                    e.0 += (in_p && in_g) as usize;
                    e.1 += in_p as usize;
                    e.2 += in_g as usize;
                }
            }
        }
        let r = evaluate_multilabel(&predicted, &gold);
        let (p, rc) = (ratio(tp, n_pred), ratio(tp, n_gold));
        check(
            r.counts.tp == tp && r.counts.fp == n_pred - tp && r.counts.fn_ == n_gold - tp,
            || format!("multi-label counts {:?} vs tp {tp}, predicted {n_pred}, gold {n_gold}", r.counts),
        )?;
        check(r.micro.precision == p && r.micro.recall == rc && r.micro.f1 == f1(p, rc), || {
            format!("multi-label micro {:?}", r.micro)
        })?;
        check(r.per_component.len() == per.len(), || "per-component keys differ".into())?;
        for (c, (ctp, cp, cg)) in per {
            let m = &r.per_component[&c];
            check(m.counts.tp == ctp && m.counts.fp == cp - ctp && m.counts.fn_ == cg - ctp, || {
                format!("component {c}: {:?}", m.counts)
            })?;
        }
    }
    Ok(cases)
}

fn random_tag(rng: &mut ChaCha8Rng) -> PosTag {
    let t = chutok::postag::PosType::ALL[rng.random_range(0..3)];
    match rng.random_range(0..3) {
        0 => PosTag::O,
        1 => PosTag::B(t),
        _ => PosTag::I(t),
    }
}

/// All complete typed spans, by enumeration of every (start, end) pair.
fn spans(tags: &[PosTag]) -> BTreeSet<(usize, usize, String)> {
    let mut out = BTreeSet::new();
    for s in 0..tags.len() {
        for e in s..tags.len() {
            let Some(t) = tags[s].pos_type() else { continue };
            let opens = matches!(tags[s], PosTag::B(_)) || s == 0 || tags[s - 1].pos_type() != Some(t);
            let inside = (s + 1..=e).all(|i| tags[i] == PosTag::I(t));
            let closes = e + 1 == tags.len() || tags[e + 1] != PosTag::I(t);
            if opens && inside && closes {
                out.insert((s, e, t.name().to_string()));
            }
        }
    }
    out
}

fn pos_oracle(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = 250;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let gold: Vec<PosTag> = (0..n).map(|_| random_tag(rng)).collect();
        let pred: Vec<PosTag> = (0..n).map(|_| random_tag(rng)).collect();
        let (g, p) = (spans(&gold), spans(&pred));
        let tp = g.intersection(&p).count();
        let r = evaluate_pos(std::slice::from_ref(&pred), std::slice::from_ref(&gold)).map_err(|e| e.to_string())?;
        let (pr, rc) = (ratio(tp, p.len()), ratio(tp, g.len()));
        check(
            r.counts.tp == tp && r.counts.fp == p.len() - tp && r.counts.fn_ == g.len() - tp,
            || format!("POS counts {:?} vs oracle tp {tp} on {pred:?} / {gold:?}", r.counts),
        )?;
        check(r.micro.precision == pr && r.micro.recall == rc && r.micro.f1 == f1(pr, rc), || {
            format!("POS micro {:?}", r.micro)
        })?;
    }
    Ok(cases)
}

fn top_k_oracle(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = 250;
    let classes: Vec<String> = (0..8).map(|c| format!("c{c}")).collect();
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let mut predictions = Vec::new();
        let mut gold = Vec::new();
        let mut ranks = Vec::new();
        for _ in 0..n {
            let weights: Vec<u32> = (0..8).map(|_| rng.random_range(1..6)).collect();
            let total: u32 = weights.iter().sum();
            let conf: Vec<f64> = weights.iter().map(|&w| w as f64 / total as f64).collect();
            let g = rng.random_range(0..8);
            ranks.push(1 + (0..8).filter(|&c| conf[c] > conf[g] || (conf[c] == conf[g] && c < g)).count());
            predictions.push(RankedPrediction::from_confidences(classes.iter().cloned().zip(conf).collect()));
            gold.push(classes[g].clone());
        }
        let ks: Vec<usize> = (1..=8).collect();
        for (k, acc) in top_k_accuracy(&predictions, &gold, &ks) {
            let expected = ranks.iter().filter(|&&r| r <= k).count() as f64 / n as f64;
            check(acc == expected, || format!("top-{k}: {acc} vs {expected}"))?;
        }
    }
    Ok(cases)
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = detection_oracle(&mut rng)?;
    let m = multilabel_oracle(&mut rng)?;
    let p = pos_oracle(&mut rng)?;
    let k = top_k_oracle(&mut rng)?;
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{d} detection, {m} multi-label, {p} POS, {k} top-k instances match exactly"))
}

// 2. Detection.

fn detection() -> Outcome {
    let start = Instant::now();
    let set = GlyphSet::generate(&GlyphSetParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let slips: Vec<_> = (0..50)
        .map(|_| {
            let n = rng.random_range(10..=30);
            generate_synthetic_slip(&set, n, &SlipLayout::default(), 8.0, rng.random())
        })
        .collect();
    let params = SegmenterParams::default();
    let predicted: Vec<Vec<BoundingBox>> = slips.iter().map(|s| segment_slip(&s.image, &params)).collect();
    let scores = evaluate_detection_batch(
        predicted.iter().zip(&slips).map(|(p, s)| (p.as_slice(), s.boxes.as_slice())),
        &DetectionEvalConfig::default(),
    );
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "F1 {:.4} (P {:.4}, R {:.4}) over {} glyphs on 50 slips at noise 8",
        scores.f1, scores.precision, scores.recall, scores.gold
    );
    check(scores.f1 >= 0.95, || detail.clone())?;
    check(secs < 30.0, || format!("{detail}, took {secs:.1} s"))?;
    Ok(detail)
}

// 3. Reading order.

fn reading_order_layouts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut multi_column = 0;
    for layout in 0..100 {
        let columns = 1 + layout % 3;
        multi_column += (columns > 1) as usize;
        let width: f64 = rng.random_range(18.0..30.0);
        // Expected order: rightmost column first, each top to bottom.
        let mut expected = Vec::new();
        let mut x = 500.0;
        for _ in 0..columns {
            let mut y = rng.random_range(0.0..20.0);
            for _ in 0..rng.random_range(1..=10) {
                let h = rng.random_range(15.0..35.0);
                let w = width * rng.random_range(0.8..1.2);
                expected.push(BoundingBox::new(x + rng.random_range(-4.0..4.0) - w / 2.0, y, w, h));
                y += h + rng.random_range(2.0..15.0);
            }
            x -= 2.2 * width + rng.random_range(10.0..40.0);
        }
        let mut shuffled = expected.clone();
        shuffled.shuffle(&mut rng);
        let order = reading_order(&shuffled);
        let read: Vec<BoundingBox> = order.iter().map(|&i| shuffled[i]).collect();
        check(read == expected, || format!("layout {layout} ({columns} columns) misordered"))?;
    }
    Ok(format!("100 of 100 layouts exact, {multi_column} with two or three columns"))
}

// 4 and 5. Recognition.

fn glyph_corpus(set: &GlyphSet, per_class: usize, seed: u64) -> (Corpus, HashMap<String, FeatureVector>) {
    let crops = generate_glyph_instances(set, per_class, &GlyphStyle::default(), 8.0, seed);
    let mut features = HashMap::new();
    let instances = crops
        .iter()
        .enumerate()
        .map(|(n, (class, img))| {
            let id = format!("g{class:03}-{:03}", n % per_class);
            features.insert(id.clone(), extract_features(img).expect("crop has pixels"));
            CharacterInstance {
                id,
                image_path: String::new(),
                source: "synthetic".into(),
                document: "glyphs".into(),
                slip: format!("c{class:03}"),
                reading_index: (n % per_class) as u32,
                bbox: None,
                label: set.classes[*class].label.clone(),
            }
        })
        .collect();
    (Corpus::new(instances), features)
}

fn character_recognition() -> Outcome {
    let set = GlyphSet::generate(&GlyphSetParams::default());
    let (corpus, features) = glyph_corpus(&set, 10, 4);
    let parts = split(&corpus, &SplitConfig::default()).map_err(|e| e.to_string())?;
    let train: Vec<(String, &FeatureVector)> = parts.train.iter().map(|i| (i.label.class_key(), &features[&i.id])).collect();
    let model = fit_char_recognizer(&train, None, DEFAULT_TEMPERATURE).map_err(|e| e.to_string())?;
    let predictions: Vec<RankedPrediction> = parts.test.iter().map(|i| model.recognize(&features[&i.id])).collect();
    let gold: Vec<String> = parts.test.iter().map(|i| i.label.class_key()).collect();
    let acc = top_k_accuracy(&predictions, &gold, &[1, 5]);
    let detail = format!(
        "{} classes, {} test instances: top-1 {:.3}, top-5 {:.3}",
        model.classes().len(),
        gold.len(),
        acc[0].1,
        acc[1].1
    );
    check(model.classes().len() == 40 && acc[0].1 >= 0.90 && acc[1].1 == 1.0, || detail.clone())?;
    Ok(detail)
}

fn subchar_recognition() -> Outcome {
    let set = GlyphSet::generate(&GlyphSetParams {
        n_modern: 0,
        n_oov: 40,
        ..GlyphSetParams::default()
    });
    let vocab = Vocabulary::from_seed(&set.component_names()).map_err(|e| e.to_string())?;
    let (corpus, features) = glyph_corpus(&set, 10, 5);
    let parts = split(&corpus, &SplitConfig::default()).map_err(|e| e.to_string())?;
    let ids = |c: &Corpus| -> Vec<Vec<ComponentId>> {
        c.iter()
            .map(|i| i.label.items().iter().map(|n| vocab.component_id(n).expect("seeded")).collect())
            .collect()
    };
    let (train_ids, val_ids, test_ids) = (ids(&parts.train), ids(&parts.val), ids(&parts.test));
    fn pairs<'a>(c: &Corpus, ids: &'a [Vec<ComponentId>], f: &'a HashMap<String, FeatureVector>) -> Vec<(&'a [ComponentId], &'a FeatureVector)> {
        c.iter().zip(ids).map(|(i, g)| (g.as_slice(), &f[&i.id])).collect()
    }
    let (train_refs, val_refs) = (pairs(&parts.train, &train_ids, &features), pairs(&parts.val, &val_ids, &features));
    let fit = fit_component_recognizer(&train_refs, &vocab, Some(&val_refs)).map_err(|e| e.to_string())?;
    let predicted: Vec<Vec<ComponentId>> = parts
        .test
        .iter()
        .map(|i| fit.recognizer.recognize(&features[&i.id]).iter().map(|s| s.id).collect())
        .collect();
    let report = evaluate_multilabel(&predicted, &test_ids);
    let detail = format!(
        "micro-F1 {:.3} (P {:.3}, R {:.3}) on {} test glyphs, threshold {:.2}",
        report.micro.f1,
        report.micro.precision,
        report.micro.recall,
        test_ids.len(),
        fit.recognizer.threshold()
    );
    check(report.micro.f1 >= 0.80, || detail.clone())?;
    Ok(detail)
}

// 6. Split and filter.

const MODERN_POOL: [&str; 28] = [
    "人", "木", "水", "火", "日", "月", "山", "石", "田", "土", "刀", "力", "口", "手", "目", "耳", "心", "王", "羊", "牛",
    "马", "鸟", "鱼", "虫", "竹", "米", "雨", "门",
];
const COMPONENT_POOL: [&str; 8] = ["心", "口", "木", "水", "土", "又", "月", "日"];

fn random_label(rng: &mut ChaCha8Rng) -> GlyphLabel {
    match rng.random_range(0..10) {
        0..6 => {
            // Skewed toward the front of the pool so class sizes vary.
            let i = (rng.random_range(0.0f64..1.0).powi(2) * MODERN_POOL.len() as f64) as usize;
            GlyphLabel::modern(MODERN_POOL[i])
        }
        6..9 => {
            let mut items: Vec<&str> = COMPONENT_POOL.to_vec();
            items.shuffle(rng);
            items.truncate(rng.random_range(1..=3));
            GlyphLabel::components(items)
        }
        _ => GlyphLabel::Unknown,
    }
}

fn random_corpus(rng: &mut ChaCha8Rng, max: usize) -> Corpus {
    let n = rng.random_range(0..=max);
    let mut next = [0u32; 3];
    (0..n)
        .map(|k| {
            let slip = rng.random_range(0..3);
            next[slip] += 1;
            CharacterInstance {
                id: format!("i{k:04}"),
                image_path: format!("crops/i{k:04}.png"),
                source: "src".into(),
                document: "doc".into(),
                slip: format!("s{slip}"),
                reading_index: next[slip] - 1,
                bbox: rng
                    .random_bool(0.5)
                    .then(|| BoundingBox::new(rng.random_range(0.0..50.0), rng.random_range(0.0..900.0), rng.random_range(5.0..40.0), rng.random_range(5.0..40.0))),
                label: random_label(rng),
            }
        })
        .collect()
}

fn split_filter() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let corpora = 300;
    let mut classes_checked = 0;
    for round in 0..corpora {
        let corpus = random_corpus(&mut rng, 150);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for i in &corpus {
            *counts.entry(i.label.class_key()).or_default() += 1;
        }

        let k = rng.random_range(1..=6);
        let kept = filter_by_min_count(&corpus, FilterConfig::new(k).unwrap(), Granularity::Character);
        let expected: Vec<&CharacterInstance> = corpus.iter().filter(|i| counts[&i.label.class_key()] >= k).collect();
        check(kept.iter().eq(expected.iter().copied()), || format!("corpus {round}: filter k={k} kept the wrong instances"))?;
        let kept_classes: BTreeSet<String> = kept.iter().map(|i| i.label.class_key()).collect();
        let want: BTreeSet<String> = counts.iter().filter(|(_, &n)| n >= k).map(|(c, _)| c.clone()).collect();
        check(kept_classes == want, || format!("corpus {round}: filter k={k} kept classes differ"))?;

        let corpus = filter_by_min_count(&corpus, FilterConfig::new(2).unwrap(), Granularity::Character);
        let test_ratio = rng.random_range(0.05..0.4);
        let val_ratio = rng.random_range(0.05..0.3);
        let cfg = SplitConfig {
            train: 1.0 - test_ratio - val_ratio,
            val: val_ratio,
            test: test_ratio,
            seed: rng.random(),
        };
        let parts = split(&corpus, &cfg).map_err(|e| format!("corpus {round}: {e}"))?;
        let tally = |c: &Corpus| {
            let mut m: BTreeMap<String, usize> = BTreeMap::new();
            for i in c {
                *m.entry(i.label.class_key()).or_default() += 1;
            }
            m
        };
        let (tr, va, te) = (tally(&parts.train), tally(&parts.val), tally(&parts.test));
        for (class, &n) in &tally(&corpus) {
            let n_test = ((cfg.test * n as f64).round() as usize).max(1).min(n - 1);
            let n_val = ((cfg.val * n as f64).round() as usize).min(n - n_test - 1);
            let got = (
                tr.get(class).copied().unwrap_or(0),
                va.get(class).copied().unwrap_or(0),
                te.get(class).copied().unwrap_or(0),
            );
            check(got == (n - n_test - n_val, n_val, n_test), || {
                format!("corpus {round}: class {class} of {n} split as {got:?}")
            })?;
            check(got.2 >= 1, || format!("corpus {round}: class {class} missing from test"))?;
            classes_checked += 1;
        }
        let all: BTreeSet<&str> = [&parts.train, &parts.val, &parts.test]
            .iter()
            .flat_map(|c| c.iter().map(|i| i.id.as_str()))
            .collect();
        check(all.len() == corpus.len() && parts.train.len() + parts.val.len() + parts.test.len() == corpus.len(), || {
            format!("corpus {round}: split is not a partition")
        })?;
    }
    Ok(format!("{corpora} random corpora, {classes_checked} class splits match the formula"))
}

// 7. Fallback.

fn fallback() -> Outcome {
    let set = GlyphSet::generate(&GlyphSetParams {
        n_oov: 8,
        ..GlyphSetParams::default()
    });
    let mut vocab = Vocabulary::from_seed(&set.component_names()).map_err(|e| e.to_string())?;
    vocab.extend_from_labels(set.classes.iter().map(|c| &c.label));
    let (corpus, features) = glyph_corpus(&set, 8, 7);
    let modern: Vec<(String, &FeatureVector)> = corpus
        .iter()
        .filter(|i| !i.label.is_oov())
        .map(|i| (i.label.class_key(), &features[&i.id]))
        .collect();
    let char_rec = fit_char_recognizer(&modern, None, DEFAULT_TEMPERATURE).map_err(|e| e.to_string())?;
    let oov: Vec<(Vec<ComponentId>, &FeatureVector)> = corpus
        .iter()
        .filter(|i| i.label.is_oov())
        .map(|i| (i.label.items().iter().map(|n| vocab.component_id(n).unwrap()).collect(), &features[&i.id]))
        .collect();
    let refs: Vec<(&[ComponentId], &FeatureVector)> = oov.iter().map(|(g, f)| (g.as_slice(), *f)).collect();
    let subchar_rec = fit_component_recognizer(&refs, &vocab, None).map_err(|e| e.to_string())?.recognizer;

    let grid = default_theta_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tokens_seen = 0;
    let mut curve = vec![0usize; grid.len()];
    for s in 0..20 {
        let n = rng.random_range(10..=30);
        let slip = generate_synthetic_slip(&set, n, &SlipLayout::default(), 8.0, rng.random());
        let rec = recognize_slip(&slip.image, &SegmenterParams::default(), &char_rec, &subchar_rec).map_err(|e| e.to_string())?;
        let mut previous: Option<BTreeSet<usize>> = None;
        for (g, &theta) in grid.iter().enumerate() {
            let tokens = rec.tokens("s", &TokenizerConfig::with_threshold(theta).unwrap()).tokens;
            let sub: BTreeSet<usize> = tokens.iter().enumerate().filter(|(_, t)| t.is_sub_char()).map(|(i, _)| i).collect();
            if theta == 0.0 {
                check(sub.is_empty(), || format!("slip {s}: {} sub-character tokens at θ=0", sub.len()))?;
            }
            if theta == 1.0 {
                let chars = tokens.iter().filter(|t| t.is_char()).count();
                check(chars == 0, || format!("slip {s}: {chars} character tokens at θ=1"))?;
            }
            if let Some(prev) = &previous {
                check(prev.is_subset(&sub), || format!("slip {s}: fallback set shrank at θ={theta}"))?;
            }
            curve[g] += sub.len();
            previous = Some(sub);
        }
        tokens_seen += rec.crops.len();
    }
    check(curve.windows(2).all(|w| w[0] <= w[1]), || format!("sub-character counts not monotone: {curve:?}"))?;
    Ok(format!(
        "20 slips, {tokens_seen} tokens; sub-character count {} at θ=0 rising to {} at θ=1 over {} grid points",
        curve[0],
        curve[grid.len() - 1],
        grid.len()
    ))
}

// 8. Granularity.

fn granularity() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..5 {
        let params = PosSyntheticParams {
            n_sentences: 200,
            seed,
            ..PosSyntheticParams::default()
        };
        let corpus = generate_pos_corpus(&params);
        let oov = corpus.oov_rate();
        let score = |char_only: bool| -> Result<f64, String> {
            let examples: Vec<PosExample> = corpus
                .sentences
                .iter()
                .map(|s| PosExample::from_labels(&s.labels, &s.tags, &corpus.vocab, char_only))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let (train, test) = examples.split_at(160);
            Ok(run_pos_experiment(train, test, &corpus.vocab, Propagation::Literal)
                .map_err(|e| e.to_string())?
                .micro
                .f1)
        };
        let (multi, single) = (score(false)?, score(true)?);
        ok &= oov >= 0.30 && multi > single;
        lines.push(format!("seed {seed}: OOV {oov:.2}, {single:.3} -> {multi:.3}"));
    }
    let detail = format!("char-only -> multi-granularity F1; {}", lines.join("; "));
    check(ok, || detail.clone())?;
    Ok(detail)
}

// 9. Round trips.

fn random_token(rng: &mut ChaCha8Rng, vocab: &Vocabulary) -> Token {
    match rng.random_range(0..3) {
        0 => Token::char(vocab.characters()[rng.random_range(0..vocab.characters().len())].clone()),
        1 => {
            let mut ids: Vec<ComponentId> = (0..vocab.components().len() as ComponentId).collect();
            ids.shuffle(rng);
            ids.truncate(rng.random_range(1..=3));
            ids.sort_unstable();
            Token::sub_char(ids)
        }
        _ => Token::Unknown,
    }
}

fn same_bytes(a: &Path, b: &Path) -> Result<bool, String> {
    Ok(fs::read(a).map_err(|e| e.to_string())? == fs::read(b).map_err(|e| e.to_string())?)
}

fn round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |n: &str| dir.path().join(n);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rounds = 200;
    let mut identity_checks = 0;
    for round in 0..rounds {
        let err = |what: &str| format!("round {round}: {what} changed");
        let corpus = random_corpus(&mut rng, 40);
        save_manifest(&corpus, path("a.jsonl")).map_err(|e| e.to_string())?;
        let back = load_manifest(path("a.jsonl")).map_err(|e| e.to_string())?;
        save_manifest(&back, path("b.jsonl")).map_err(|e| e.to_string())?;
        check(back == corpus && same_bytes(&path("a.jsonl"), &path("b.jsonl"))?, || err("manifest"))?;

        let mut vocab = build_vocabulary(&corpus, &COMPONENT_POOL[..rng.random_range(0..=8)]).map_err(|e| e.to_string())?;
        vocab.extend_from_labels([&GlyphLabel::modern("人"), &GlyphLabel::components(["心"])]);
        vocab.save(path("a.json")).map_err(|e| e.to_string())?;
        Vocabulary::load(path("a.json")).map_err(|e| e.to_string())?.save(path("b.json")).map_err(|e| e.to_string())?;
        check(same_bytes(&path("a.json"), &path("b.json"))?, || err("vocabulary"))?;

        let sequences: Vec<TokenSequence> = (0..rng.random_range(0..5))
            .map(|s| TokenSequence::new(format!("src/doc/s{s}"), (0..rng.random_range(0..12)).map(|_| random_token(&mut rng, &vocab)).collect()))
            .collect();
        let write_stream = |seqs: &[TokenSequence], p: &Path| -> Result<(), String> {
            let mut buf = Vec::new();
            write_token_stream(seqs, &vocab, &mut buf).map_err(|e| e.to_string())?;
            fs::write(p, buf).map_err(|e| e.to_string())
        };
        write_stream(&sequences, &path("a.tok"))?;
        let file = fs::File::open(path("a.tok")).map_err(|e| e.to_string())?;
        let back = read_token_stream(BufReader::new(file), &vocab).map_err(|e| e.to_string())?;
        write_stream(&back, &path("b.tok"))?;
        check(back == sequences && same_bytes(&path("a.tok"), &path("b.tok"))?, || err("token stream"))?;

        let mut sentences = Vec::new();
        for _ in 0..rng.random_range(0..5) {
            let tokens: Vec<Token> = (0..rng.random_range(1..10)).map(|_| random_token(&mut rng, &vocab)).collect();
            let tags: Vec<PosTag> = (0..tokens.len()).map(|_| PosTag::from_index(rng.random_range(0..21)).unwrap()).collect();
            let example = PosExample::new(tokens, &tags, &vocab).map_err(|e| e.to_string())?;
            for propagation in [Propagation::Literal, Propagation::Normalize] {
                let expanded = expand_sentence(&example.gold, &example.tokens, &vocab, propagation).map_err(|e| e.to_string())?;
                let collapsed = collapse_predictions(&expanded, &expanded.tags()).map_err(|e| e.to_string())?;
                if propagation == Propagation::Literal {
                    check(collapsed == tags, || err("expand→collapse"))?;
                    identity_checks += 1;
                }
            }
            sentences.push(example.gold);
        }
        let write_sentences = |s: &[TaggedSentence], p: &Path| -> Result<(), String> {
            let mut buf = Vec::new();
            write_bio(s, &mut buf).map_err(|e| e.to_string())?;
            fs::write(p, buf).map_err(|e| e.to_string())
        };
        write_sentences(&sentences, &path("a.bio"))?;
        let back = load_bio(path("a.bio")).map_err(|e| e.to_string())?;
        write_sentences(&back, &path("b.bio"))?;
        check(back == sentences && same_bytes(&path("a.bio"), &path("b.bio"))?, || err("BIO"))?;
    }
    Ok(format!(
        "{rounds} rounds of manifest, vocabulary, token-stream and BIO files byte-identical; {identity_checks} expand→collapse identities"
    ))
}

// 10. CLI determinism.

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable directory") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).expect("readable file"));
            }
        }
    }
    out
}

fn run_cli(args: &[String]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_chutok"))
        .args(args)
        .env_remove("CHUTOK_DATA_ROOT")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(out.stdout)
}

fn http_get(addr: &str, path: &str) -> Result<Vec<u8>, String> {
    let mut stream = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    stream.set_read_timeout(Some(Duration::from_secs(20))).map_err(|e| e.to_string())?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").map_err(|e| e.to_string())?;
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).map_err(|e| e.to_string())?;
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").ok_or("malformed response")?;
    check(raw.starts_with(b"HTTP/1.1 200"), || format!("GET {path}: {}", String::from_utf8_lossy(&raw[..split])))?;
    Ok(raw[split + 4..].to_vec())
}

/// Starts `serve` on an ephemeral port and fetches a few responses.
fn serve_responses(manifest: &str) -> Result<Vec<Vec<u8>>, String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_chutok"))
        .args(["serve", "--manifest", manifest, "--addr", "127.0.0.1:0"])
        .env_remove("CHUTOK_DATA_ROOT")
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).map_err(|e| e.to_string())?;
    let result = match line.trim().strip_prefix("listening on http://") {
        Some(addr) => ["/stats", "/characters?limit=500", "/characters/g000-000", "/characters/g000-000/image"]
            .iter()
            .map(|p| http_get(addr, p))
            .collect(),
        None => Err(format!("serve did not start: {line}")),
    };
    let _ = child.kill();
    let _ = child.wait();
    result
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let p = |rel: &str| root.join(rel).to_string_lossy().into_owned();
    let g = |rel: &str| p(&format!("g/{rel}"));
    let s = |rel: &str| p(&format!("s/{rel}"));
    let t = |rel: &str| p(&format!("p/{rel}"));
    let commands: Vec<Vec<String>> = vec![
        vec!["gen-synthetic".into(), "--kind".into(), "glyphs".into(), "--oov".into(), "8".into(), "--seed".into(), "3".into(), "--out-dir".into(), g("")],
        vec!["gen-synthetic".into(), "--kind".into(), "slips".into(), "--oov".into(), "8".into(), "--seed".into(), "3".into(), "--slips".into(), "6".into(), "--out-dir".into(), s("")],
        vec!["gen-synthetic".into(), "--kind".into(), "pos".into(), "--seed".into(), "3".into(), "--out-dir".into(), t("")],
        vec!["stats".into(), "--manifest".into(), g("manifest.jsonl"), "--out".into(), g("stats.json")],
        vec!["validate".into(), "--manifest".into(), g("manifest.jsonl")],
        vec!["filter".into(), "--manifest".into(), g("manifest.jsonl"), "-k".into(), "2".into(), "--granularity".into(), "component".into(), "--out".into(), g("filtered.jsonl")],
        vec!["split".into(), "--manifest".into(), g("manifest.jsonl"), "--seed".into(), "5".into(), "--out-dir".into(), g("split")],
        vec!["build-vocab".into(), "--manifest".into(), g("manifest.jsonl"), "--seed-list".into(), g("seeds.txt"), "--out".into(), g("vocab.json")],
        vec!["train-recognizer".into(), "--manifest".into(), g("split/train.jsonl"), "--data-root".into(), g(""), "--out".into(), g("char.json")],
        vec!["train-subchar".into(), "--manifest".into(), g("split/train.jsonl"), "--validation".into(), g("split/val.jsonl"), "--vocab".into(), g("vocab.json"), "--data-root".into(), g(""), "--out".into(), g("sub.json")],
        vec!["eval-recognition".into(), "--manifest".into(), g("split/test.jsonl"), "--model".into(), g("char.json"), "--data-root".into(), g(""), "--out".into(), g("eval_char.json")],
        vec!["eval-subchar".into(), "--manifest".into(), g("split/test.jsonl"), "--vocab".into(), g("vocab.json"), "--model".into(), g("sub.json"), "--data-root".into(), g(""), "--out".into(), g("eval_sub.json")],
        vec!["eval-detection".into(), "--gold".into(), s("detections.jsonl"), "--images".into(), s("slips"), "--write-pred".into(), s("pred.jsonl"), "--out".into(), s("eval_det.json")],
        vec!["tokenize".into(), "--images".into(), s("slips"), "--vocab".into(), g("vocab.json"), "--char-model".into(), g("char.json"), "--subchar-model".into(), g("sub.json"), "--out".into(), s("tokens.txt")],
        vec!["tokenize".into(), "--mode".into(), "annotation".into(), "--manifest".into(), s("manifest.jsonl"), "--vocab".into(), g("vocab.json"), "--out".into(), s("gold_tokens.txt")],
        vec!["calibrate".into(), "--manifest".into(), g("split/val.jsonl"), "--vocab".into(), g("vocab.json"), "--char-model".into(), g("char.json"), "--subchar-model".into(), g("sub.json"), "--data-root".into(), g(""), "--out".into(), g("calibration.json")],
        vec!["expand-pos".into(), "--bio".into(), t("train.bio"), "--vocab".into(), t("vocab.json"), "--out".into(), t("train.expanded.bio")],
        vec!["train-tagger".into(), "--bio".into(), t("train.expanded.bio"), "--out".into(), t("tagger.json")],
        vec!["tag".into(), "--tagger".into(), t("tagger.json"), "--bio".into(), t("test.bio"), "--vocab".into(), t("vocab.json"), "--out".into(), t("pred.bio")],
        vec!["eval-pos".into(), "--gold".into(), t("test.bio"), "--pred".into(), t("pred.bio"), "--out".into(), t("eval_pos.json")],
    ];
    let mut names = Vec::new();
    for args in &commands {
        let first = run_cli(args)?;
        let before = snapshot(root);
        let second = run_cli(args)?;
        let after = snapshot(root);
        check(first == second, || format!("{}: stdout differs between runs", args[0]))?;
        if before != after {
            let changed: Vec<_> = after
                .iter()
                .filter(|(k, v)| before.get(*k) != Some(*v))
                .map(|(k, _)| k.display().to_string())
                .collect();
            return Err(format!("{}: outputs differ between runs: {}", args[0], changed.join(", ")));
        }
        if !names.contains(&args[0]) {
            names.push(args[0].clone());
        }
    }
    let a = serve_responses(&g("manifest.jsonl"))?;
    let b = serve_responses(&g("manifest.jsonl"))?;
    check(a == b, || "serve: responses differ between runs".into())?;
    names.push("serve".into());
    Ok(format!("{} commands byte-identical across two runs ({})", names.len(), names.join(", ")))
}
