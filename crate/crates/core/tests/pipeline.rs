use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::Path;

use annotrack_core::ensemble::{train_meta, Ensemble, MetaLearnerConfig, Strategy};
use annotrack_core::eval::{default_groups, evaluate, Prediction, ThresholdRule, ThresholdScope};
use annotrack_core::filter::{filter_records, FilterConfig, WebRecord};
use annotrack_core::gateway::mock::{MockModel, MockRule, MockScript, MockServer};
use annotrack_core::gateway::{annotate_batch, GatewayConfig, TextItem};
use annotrack_core::ingest::{load_examples, Columns, InputFormat, Registry};
use annotrack_core::stats::pool_statistics_from_records;
use annotrack_core::{jsonl, BinaryLabel};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn script() -> MockScript {
    let mut script = MockScript::default();
    let table = |w: f64| -> BTreeMap<String, f64> { [("1".to_string(), w.ln()), ("2".to_string(), (1.0 - w).ln())].into() };
    for (m, w) in [("gemma", 0.9), ("llama", 0.8), ("mistral", 0.7), ("qwen", 0.4)] {
        script.models.insert(
            m.into(),
            MockModel {
                rules: vec![MockRule {
                    contains: "awful".into(),
                    top_logprobs: Some(table(w)),
                    status: None,
                }],
                default_logprobs: Some(table(0.1)),
                ..MockModel::default()
            },
        );
    }
    script
}

fn gateway_config(url: &str) -> GatewayConfig {
    let endpoints: Vec<_> = ["gemma", "llama", "mistral", "qwen"]
        .iter()
        .map(|m| serde_json::json!({ "model_id": m, "base_url": url, "max_in_flight": 3 }))
        .collect();
    serde_json::from_value(serde_json::json!({ "endpoints": endpoints })).unwrap()
}

#[test]
fn filter_fixture_is_idempotent() {
    let records: Vec<WebRecord> = jsonl::read_path(&fixture("filter_records.jsonl")).unwrap();
    let (kept, stats) = filter_records(records, &FilterConfig::default()).unwrap();
    assert!(stats.is_consistent());
    let (again, stats2) = filter_records(kept.clone(), &FilterConfig::default()).unwrap();
    assert_eq!(again, kept);
    assert_eq!(stats2.kept as usize, kept.len());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn library_pipeline_through_mock() {
    let reg = Registry::builtin();
    let spec = reg.get("HateXplain").unwrap();
    let mut csv = String::from("text,label\n");
    for i in 0..80 {
        if i % 3 == 0 {
            csv.push_str(&format!("an awful thing {i},hatespeech\n"));
        } else {
            csv.push_str(&format!("a kind thing {i},normal\n"));
        }
    }
    let examples = load_examples(
        spec,
        Cursor::new(csv),
        InputFormat::Csv,
        &Columns::for_spec(spec),
        Path::new("inline.csv"),
    )
    .unwrap();
    assert_eq!(examples.len(), 80);

    let server = MockServer::start(script()).await.unwrap();
    let texts: Vec<TextItem> = examples
        .iter()
        .map(|e| TextItem {
            id: e.id.clone(),
            text: e.text.clone(),
            lang: spec.language,
            raw_label: None,
        })
        .collect();
    let out = annotate_batch(&texts, gateway_config(&server.url())).await.unwrap();
    assert!(!out.is_partial());
    let ids: Vec<_> = out.annotations.iter().map(|a| a.id.clone()).collect();
    assert_eq!(ids, examples.iter().map(|e| e.id.clone()).collect::<Vec<_>>());

    let pvs: Vec<_> = out.annotations.iter().map(|a| a.probability_vector().unwrap()).collect();
    let golds: Vec<_> = examples.iter().map(|e| e.gold).collect();
    let model = train_meta(&pvs, &golds, &MetaLearnerConfig { min_data_in_leaf: 5, ..MetaLearnerConfig::default() }).unwrap();

    let vote = Ensemble::new(Strategy::Vote, None).unwrap();
    for (d, e) in vote.decide_batch(&pvs).iter().zip(&examples) {
        assert_eq!(d.label, e.gold, "{}", e.text);
    }
    let lgb = Ensemble::new(Strategy::Lgb, Some(model.clone())).unwrap();
    let preds: Vec<Prediction> = lgb
        .decide_batch(&pvs)
        .iter()
        .zip(&examples)
        .map(|(d, e)| Prediction {
            id: e.id.clone(),
            dataset: e.dataset.clone(),
            score_hate: d.score_hate,
            gold: e.gold,
        })
        .collect();
    let report = evaluate(&preds, &default_groups(&reg), ThresholdRule::Fixed(0.5), ThresholdScope::Group).unwrap();
    assert_eq!(report.per_group["EN"].accuracy, 1.0);
    assert!(!report.per_group.contains_key("DE"));

    let summary = pool_statistics_from_records(&out.annotations, Some(&model)).unwrap();
    assert_eq!(summary.per_language_counts["All"], 80);
    let hate = golds.iter().filter(|g| **g == BinaryLabel::Hate).count() as f64;
    assert_eq!(summary.per_strategy_pct_hate["vote"]["All"], 100.0 * hate / 80.0);
    assert_eq!(server.probe()["qwen"].requests, 80);
}
