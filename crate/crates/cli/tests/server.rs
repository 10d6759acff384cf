use std::path::Path;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use axum::Router;
use chutok::corpus::load_manifest;
use chutok::detection::SegmenterParams;
use chutok::raster::{decode_gray, encode_png};
use chutok::recognition::{CharRecognizer, SubCharRecognizer};
use chutok::synth::{generate_synthetic_slip, GlyphSet, GlyphSetParams, SlipLayout};
use chutok::vocab::Vocabulary;
use chutok_cli::query::{CharacterIndex, QueryFilter};
use chutok_cli::server::{router, AppState, TokenizerService};
use proptest::prelude::*;
use serde_json::Value;
use tower::ServiceExt;

fn run(args: &[&str]) {
    let mut argv = vec!["chutok"];
    argv.extend_from_slice(args);
    assert_eq!(chutok_cli::execute(argv, &mut Vec::new()), 0, "{args:?}");
}

/// A slip corpus with one of every model the server can load.
fn fixture(dir: &Path) -> Arc<AppState> {
    let s = |p: &str| dir.join(p).to_str().unwrap().to_string();
    run(&["gen-synthetic", "--kind", "slips", "--slips", "4", "--oov", "6", "--out-dir", &s("")]);
    run(&["build-vocab", "--manifest", &s("manifest.jsonl"), "--seed-list", &s("seeds.txt"), "--out", &s("vocab.json")]);
    run(&["train-recognizer", "--manifest", &s("manifest.jsonl"), "--out", &s("char.json")]);
    run(&["train-subchar", "--manifest", &s("manifest.jsonl"), "--vocab", &s("vocab.json"), "--out", &s("sub.json")]);
    let corpus = load_manifest(dir.join("manifest.jsonl")).unwrap();
    Arc::new(AppState {
        index: CharacterIndex::new(&corpus, dir),
        tokenizer: Some(TokenizerService {
            vocab: Vocabulary::load(dir.join("vocab.json")).unwrap(),
            char_rec: CharRecognizer::load(dir.join("char.json")).unwrap(),
            subchar_rec: SubCharRecognizer::load(dir.join("sub.json")).unwrap(),
            segmenter: SegmenterParams::default(),
            threshold: 0.5,
        }),
    })
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, to_bytes(res.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body) = call(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&body).unwrap())
}

#[tokio::test]
async fn endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let state = fixture(dir.path());
    let total = state.index.len();
    let app = router(state.clone());

    let (status, stats) = get(&app, "/stats").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["totals"]["characters"], total);

    let (_, page) = get(&app, "/characters?limit=5&offset=2").await;
    assert_eq!(page["total"], total);
    assert_eq!(page["items"].as_array().unwrap().len(), 5);
    let first_id = page["items"][0]["id"].as_str().unwrap().to_string();

    let (status, one) = get(&app, &format!("/characters/{first_id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(one["id"], first_id.as_str());

    let (status, err) = get(&app, "/characters/nope").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(err["error"].is_string());
    assert_eq!(get(&app, "/characters?limit=0").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/characters?limit=501").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/characters?colour=red").await.0, StatusCode::BAD_REQUEST);

    let (_, filtered) = get(&app, "/characters?source=synthetic&document=slips&limit=500").await;
    assert_eq!(filtered["total"], total);
    let (_, none) = get(&app, "/characters?source=elsewhere").await;
    assert_eq!(none["total"], 0);

    let (status, png) = call(&app, Request::get(format!("/characters/{first_id}/image")).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(decode_gray(&png).is_ok());

    // A fresh slip from the same glyph family.
    let set = GlyphSet::generate(&GlyphSetParams {
        n_oov: 6,
        ..GlyphSetParams::default()
    });
    let slip = generate_synthetic_slip(&set, 8, &SlipLayout::default(), 0.0, 1234);
    let body = encode_png(&slip.image).unwrap();
    let post = |uri: &str, body: Vec<u8>| {
        Request::post(uri)
            .header(header::CONTENT_TYPE, "image/png")
            .body(Body::from(body))
            .unwrap()
    };
    let (status, out) = call(&app, post("/tokenize?threshold=0", body.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let out: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(out["tokens"].as_array().unwrap().len(), 8);
    assert!(out["tokens"].as_array().unwrap().iter().all(|t| t["kind"] == "char"));
    assert_eq!(out["text"].as_str().unwrap().split(' ').count(), 8);

    let (_, char_only) = call(&app, post("/tokenize?threshold=1&char_only=true", body.clone())).await;
    let char_only: Value = serde_json::from_slice(&char_only).unwrap();
    assert!(char_only["tokens"].as_array().unwrap().iter().all(|t| t["kind"] == "char"));

    assert_eq!(call(&app, post("/tokenize", b"not an image".to_vec())).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, post("/tokenize?threshold=2", body.clone())).await.0, StatusCode::BAD_REQUEST);

    let bare = router(Arc::new(AppState {
        index: CharacterIndex::new(&load_manifest(dir.path().join("manifest.jsonl")).unwrap(), dir.path()),
        tokenizer: None,
    }));
    assert_eq!(call(&bare, post("/tokenize", body)).await.0, StatusCode::SERVICE_UNAVAILABLE);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adding_a_filter_never_adds_results(
        label in prop::option::of(prop::sample::select(vec!["人", "心", "{?}", "a+b"])),
        component in prop::option::of(prop::sample::select(vec!["心", "口", "木"])),
        source in prop::option::of(prop::sample::select(vec!["synthetic", "other"])),
        extra in 0usize..4,
    ) {
        let corpus = {
            let set = GlyphSet::generate(&GlyphSetParams { n_oov: 6, ..GlyphSetParams::default() });
            let names = set.component_names();
            let mut labels: Vec<_> = set.classes.iter().map(|c| c.label.clone()).collect();
            labels.push(chutok::corpus::GlyphLabel::Unknown);
            labels
                .into_iter()
                .enumerate()
                .map(|(i, label)| chutok::corpus::CharacterInstance {
                    id: format!("c{i:03}"),
                    image_path: format!("{i}.png"),
                    source: if i % 3 == 0 { "other".into() } else { "synthetic".into() },
                    document: names[i % names.len()].clone(),
                    slip: "1".into(),
                    reading_index: i as u32,
                    bbox: None,
                    label,
                })
                .collect()
        };
        let index = CharacterIndex::new(&corpus, ".");
        let base = QueryFilter {
            label: label.map(String::from),
            component: component.map(String::from),
            source: source.map(String::from),
            limit: 500,
            ..QueryFilter::default()
        };
        let mut narrower = base.clone();
        match extra {
            0 => narrower.label = Some("人".into()),
            1 => narrower.component = Some("心".into()),
            2 => narrower.source = Some("synthetic".into()),
            _ => narrower.document = Some(corpus.instances[0].document.clone()),
        }
        let ids = |f: &QueryFilter| index.query(f).items.into_iter().map(|s| s.id).collect::<std::collections::BTreeSet<_>>();
        let wide = ids(&base);
        let narrow = ids(&narrower);
        // Only a newly added field can narrow; an overwritten one is not an addition.
        let added = match extra {
            0 => base.label.is_none(),
            1 => base.component.is_none(),
            2 => base.source.is_none(),
            _ => true,
        };
        if added {
            prop_assert!(narrow.is_subset(&wide));
        }
    }
}
