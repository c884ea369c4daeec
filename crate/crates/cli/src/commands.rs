use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use annotrack_core::ensemble::{train_meta, Ensemble, MetaLearnerModel, ProbabilityVector, Strategy};
use annotrack_core::eval::{self, EvaluationReport, GroupSpec, Prediction, ThresholdRule, ThresholdScope};
use annotrack_core::filter::{filter_records, subsample_by_language, FilterStats, WebRecord};
use annotrack_core::gateway::mock::{MockScript, MockServer};
use annotrack_core::gateway::{AnnotationRecord, Gateway, TextItem};
use annotrack_core::ingest::{self, Columns, InputFormat, LabeledExample, Registry};
use annotrack_core::stats;
use annotrack_core::{BinaryLabel, Language};
use serde::{Deserialize, Serialize};

use crate::cli::*;
use crate::config::{self, Document};
use crate::error::CliError;
use crate::io;

/// Settings shared by every subcommand.
pub struct Context {
    pub doc: Document,
    pub seed: u64,
}

fn registry(path: Option<&Path>, ctx: &Context) -> Result<Registry, CliError> {
    let from_config = config::ingest_section(&ctx.doc)?.registry;
    match path.or(from_config.as_deref()) {
        Some(p) => Ok(Registry::from_path(p)?),
        None => Ok(Registry::builtin()),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::io("<runtime>", e))
}

#[derive(Serialize)]
struct FilterReport<'a> {
    #[serde(flatten)]
    stats: &'a FilterStats,
    emitted: usize,
}

pub fn filter(args: FilterArgs, ctx: &Context) -> Result<(), CliError> {
    let section = config::filter_section(&ctx.doc)?;
    let mut quotas: BTreeMap<Language, usize> = BTreeMap::new();
    let parse_lang = |s: &str| s.parse::<Language>().map_err(|_| CliError::Usage(format!("unknown language {s:?}")));
    for (lang, n) in &section.quota {
        quotas.insert(parse_lang(lang)?, *n);
    }
    for q in &args.quotas {
        let (lang, n) = q
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("quota must look like lang=count, got {q:?}")))?;
        let n = n
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("quota count must be a nonnegative integer, got {n:?}")))?;
        quotas.insert(parse_lang(lang)?, n);
    }

    let records: Vec<WebRecord> = io::read_jsonl(&args.input)?;
    let (kept, stats) = filter_records(records, &section.config)?;
    let out = if quotas.is_empty() {
        kept
    } else {
        subsample_by_language(kept, &quotas, ctx.seed)
    };
    tracing::info!(seen = stats.records_seen, kept = stats.kept, emitted = out.len(), "filter done");
    io::write_jsonl(&args.out, &out)?;
    let report = FilterReport {
        stats: &stats,
        emitted: out.len(),
    };
    match &args.stats {
        Some(p) => io::write_json(p, &report),
        None => {
            eprintln!("{}", serde_json::to_string(&report).map_err(|e| CliError::Data(e.into()))?);
            Ok(())
        }
    }
}

pub fn ingest(args: IngestArgs, ctx: &Context) -> Result<(), CliError> {
    let reg = registry(args.registry.as_deref(), ctx)?;
    let spec = reg.get(&args.dataset)?;
    let format = match args.format.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None => InputFormat::from_path(&args.input),
        Some("csv") => InputFormat::Csv,
        Some("tsv") => InputFormat::Tsv,
        Some("jsonl" | "json" | "jsonlines") => InputFormat::JsonLines,
        Some(other) => return Err(CliError::Usage(format!("unknown format {other:?} (csv|tsv|jsonl)"))),
    };
    let mut columns = Columns::for_spec(spec);
    if let Some(c) = args.text_column {
        columns.text = c;
    }
    if let Some(c) = args.label_column {
        columns.label = c;
    }
    if let Some(c) = args.id_column {
        columns.id = Some(c);
    }
    let examples = ingest::load_examples(spec, io::open(&args.input)?, format, &columns, &args.input)?;
    let s = ingest::dataset_stats(&examples);
    tracing::info!(dataset = %spec.name, count = s.count, hate_fraction = s.hate_fraction, "ingest done");
    io::write_jsonl(&args.out, &examples)
}

/// Annotation input: a text item, optionally tagged with its dataset.
#[derive(Deserialize)]
struct AnnotateInput {
    id: String,
    text: String,
    #[serde(default)]
    lang: Option<Language>,
    #[serde(default)]
    dataset: Option<String>,
    #[serde(default)]
    raw_label: Option<String>,
}

pub fn annotate(args: AnnotateArgs, ctx: &Context) -> Result<(), CliError> {
    let gateway_cfg = match &args.endpoints {
        Some(p) => config::gateway_config(&Document::load(p)?)?,
        None => config::gateway_config(&ctx.doc)?,
    };
    let gateway = Gateway::new(gateway_cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let reg = registry(args.registry.as_deref(), ctx)?;
    let inputs: Vec<AnnotateInput> = io::read_jsonl(&args.input)?;
    let texts: Vec<TextItem> = inputs
        .into_iter()
        .map(|i| TextItem {
            lang: i
                .lang
                .or_else(|| i.dataset.as_deref().and_then(|d| reg.language_of(d)))
                .unwrap_or_default(),
            id: i.id,
            text: i.text,
            raw_label: i.raw_label,
        })
        .collect();

    let outcome = runtime()?.block_on(gateway.annotate(&texts));
    tracing::info!(
        annotated = outcome.annotations.len(),
        quarantined = outcome.quarantined.len(),
        "annotate done"
    );
    io::write_jsonl(&args.out, &outcome.annotations)?;
    if let Some(p) = &args.dead_letter {
        io::write_jsonl(p, &outcome.quarantined)?;
    }
    if outcome.is_partial() {
        for q in &outcome.quarantined {
            for f in &q.failures {
                tracing::warn!(id = %q.id, model = %f.model, attempts = f.attempts, error = %f.error, "quarantined");
            }
        }
        return Err(CliError::Partial(outcome.quarantined.len()));
    }
    Ok(())
}

fn vectors(records: &[AnnotationRecord]) -> Result<Vec<ProbabilityVector>, CliError> {
    Ok(records
        .iter()
        .map(AnnotationRecord::probability_vector)
        .collect::<annotrack_core::Result<Vec<_>>>()?)
}

pub fn train_meta_cmd(args: TrainMetaArgs, ctx: &Context) -> Result<(), CliError> {
    let mut cfg = config::meta_config(&ctx.doc)?;
    cfg.seed = ctx.seed;
    let records: Vec<AnnotationRecord> = io::read_jsonl(&args.features)?;
    let labels: Vec<LabeledExample> = io::read_jsonl(&args.labels)?;
    let by_id: HashMap<&str, &AnnotationRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut rows = Vec::new();
    let mut golds = Vec::new();
    let mut missing = 0usize;
    for ex in &labels {
        match by_id.get(ex.id.as_str()) {
            Some(r) => {
                rows.push(r.probability_vector()?);
                golds.push(ex.gold);
            }
            None => missing += 1,
        }
    }
    if missing > 0 {
        tracing::warn!(missing, "labelled examples without annotations were skipped");
    }
    if rows.is_empty() {
        return Err(annotrack_core::Error::InvalidInput("no labelled example matches an annotation id".into()).into());
    }
    let model = train_meta(&rows, &golds, &cfg)?;
    tracing::info!(
        rows = rows.len(),
        trees_hate = model.hate_head.trees.len(),
        trees_neutral = model.neutral_head.trees.len(),
        "train-meta done"
    );
    io::write_json(&args.out, &model)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnsembleRow {
    id: String,
    lang: Language,
    strategy: Strategy,
    label: BinaryLabel,
    score_hate: f64,
    score_neutral: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold: Option<BinaryLabel>,
}

fn load_model(path: &Path) -> Result<MetaLearnerModel, CliError> {
    io::read_json(path)
}

pub fn ensemble(args: EnsembleArgs, ctx: &Context) -> Result<(), CliError> {
    let name = args
        .strategy
        .or(config::ensemble_section(&ctx.doc)?.strategy)
        .unwrap_or_else(|| "vote".into());
    let strategy: Strategy = name.parse().map_err(|e: annotrack_core::Error| CliError::Usage(e.to_string()))?;
    let model = args.model.as_deref().map(load_model).transpose()?;
    if strategy == Strategy::Lgb && model.is_none() {
        return Err(CliError::Usage("--strategy lgb requires --model".into()));
    }
    let ens = Ensemble::new(strategy, model)?;
    let mut records: Vec<AnnotationRecord> = io::read_jsonl(&args.input)?;
    let labels: Option<HashMap<String, LabeledExample>> = args
        .labels
        .as_deref()
        .map(io::read_jsonl::<LabeledExample>)
        .transpose()?
        .map(|v| v.into_iter().map(|e| (e.id.clone(), e)).collect());
    if let Some(l) = &labels {
        let before = records.len();
        records.retain(|r| l.contains_key(&r.id));
        if records.len() < before {
            tracing::warn!(skipped = before - records.len(), "annotations without labels were skipped");
        }
    }
    let pvs = vectors(&records)?;
    if let Ensemble::Lgb(m) = &ens {
        if let Some(pv) = pvs.first() {
            m.check_compatible(pv)?;
        }
    }
    let decisions = ens.decide_batch(&pvs);
    let rows: Vec<EnsembleRow> = records
        .iter()
        .zip(decisions)
        .map(|(r, d)| {
            let ex = labels.as_ref().and_then(|l| l.get(&r.id));
            EnsembleRow {
                id: r.id.clone(),
                lang: r.lang,
                strategy,
                label: d.label,
                score_hate: d.score_hate,
                score_neutral: d.score_neutral,
                dataset: ex.map(|e| e.dataset.clone()),
                gold: ex.map(|e| e.gold),
            }
        })
        .collect();
    let hate = rows.iter().filter(|r| r.label.is_hate()).count();
    tracing::info!(strategy = %strategy, rows = rows.len(), hate, "ensemble done");
    io::write_jsonl(&args.out, &rows)
}

#[derive(Deserialize, Default)]
struct GroupsDoc {
    groups: Vec<GroupSpec>,
}

pub fn evaluate(args: EvaluateArgs, ctx: &Context) -> Result<(), CliError> {
    let section = config::evaluate_section(&ctx.doc)?;
    let groups = match (&args.groups, section.groups) {
        (Some(p), _) => {
            let doc = Document::load(p)?;
            let g: GroupsDoc = doc.section("evaluate")?;
            g.groups
        }
        (None, Some(g)) => g,
        (None, None) => eval::default_groups(&registry(args.registry.as_deref(), ctx)?),
    };
    eval::validate_groups(&groups).map_err(|e| CliError::Config(e.to_string()))?;
    let rule: ThresholdRule = args
        .threshold
        .or(section.threshold)
        .map(|t| t.parse())
        .transpose()
        .map_err(|e: annotrack_core::Error| CliError::Usage(e.to_string()))?
        .unwrap_or_default();
    let scope: ThresholdScope = match args.scope {
        Some(s) => s.parse().map_err(|e: annotrack_core::Error| CliError::Usage(e.to_string()))?,
        None => section.scope.unwrap_or_default(),
    };
    let preds: Vec<Prediction> = io::read_jsonl(&args.preds)?;
    let mut report = eval::evaluate(&preds, &groups, rule, scope)?;
    if let Some(b) = &args.baseline {
        let baseline: EvaluationReport = io::read_json(b)?;
        report.baseline_deltas = Some(eval::delta_report(&report, &baseline)?);
    }
    if let Some(all) = report.per_group.get("All") {
        tracing::info!(macro_f1 = all.macro_f1, accuracy = all.accuracy, "evaluate done");
    }
    io::write_json(&args.out, &report)?;
    if let Some(t) = &args.table {
        io::write_text(t, &eval::render_table(&report))?;
    }
    Ok(())
}

pub fn stats_cmd(args: StatsArgs, _ctx: &Context) -> Result<(), CliError> {
    let model = args.model.as_deref().map(load_model).transpose()?;
    let records: Vec<AnnotationRecord> = io::read_jsonl(&args.input)?;
    let summary = stats::pool_statistics_from_records(&records, model.as_ref())?;
    io::write_json(&args.out, &summary)?;
    if let Some(t) = &args.table {
        io::write_text(t, &stats::render_table(&summary))?;
    }
    Ok(())
}

pub fn mock_server(args: MockServerArgs, _ctx: &Context) -> Result<(), CliError> {
    let script: MockScript = match &args.script {
        Some(p) => io::read_json(p)?,
        None => MockScript::default(),
    };
    runtime()?.block_on(async {
        let server = MockServer::bind(args.addr, script)
            .await
            .map_err(|e| CliError::io(args.addr.to_string(), e))?;
        println!("{}", server.url());
        tracing::info!(url = %server.url(), "mock server listening");
        server.wait().await.map_err(|e| CliError::io("<server>", e))
    })
}
