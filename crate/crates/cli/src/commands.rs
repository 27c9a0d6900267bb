use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use usage_eval::annotation::{
    annotate_corpus, AnnotateConfig, AnnotateSummary, ChatClient, HttpChatClient, PromptTemplate, CHAT_TOKEN_VAR,
};
use usage_eval::corpus::{
    aggregate_by_class, classification_scores, classify_example, hams4, inter_annotator_agreement, permutation_test,
    AgreementReport, ClassAggregate, ClassificationScores, CorpusReport, PermutationOutcome,
};
use usage_eval::dataset::{preprocess_file, read_reviews, split as split_reviews, write_reviews_jsonl, FilterStats, InputFormat, Review};
use usage_eval::feasibility::{flops_per_token, standard_scenarios, FeasibilityModel, FeasibilityRow};
use usage_eval::io::{load_corpus, read_annotator_dir};
use usage_eval::similarity::BetaParams;
use usage_eval::wms::{per_example_wms, WmsScorer};
use usage_eval::{Error, SetScorer, Similarity};

use crate::config::Config;
use crate::report::{emit, fmt_opt, fmt_score, table};
use crate::{
    AgreementArgs, AnnotateArgs, CliError, CompareArgs, EvaluateArgs, FeasibilityArgs, PreprocessArgs, SimilarityArgs,
    SplitArgs,
};

fn apply_similarity(cfg: &mut Config, args: &SimilarityArgs) {
    let backend = &mut cfg.similarity.backend;
    if let Some(kind) = args.backend {
        backend.kind = kind;
    }
    if args.endpoint.is_some() {
        backend.endpoint = args.endpoint.clone();
    }
    if args.cache_path.is_some() {
        backend.cache_path = args.cache_path.clone();
    }
    if args.max_in_flight.is_some() {
        backend.max_in_flight = args.max_in_flight;
    }
    if let Some((alpha, beta)) = args.stage1 {
        cfg.similarity.stage1 = BetaParams { alpha, beta };
    }
    if let Some((alpha, beta)) = args.stage2 {
        cfg.similarity.stage2 = BetaParams { alpha, beta };
    }
    if let Some(w) = args.weights {
        cfg.weights = w;
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e).into())
}

fn flush(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| Error::io(path, e).into())
}

#[derive(Debug, Serialize)]
struct WmsExample {
    review_id: String,
    wms: f64,
}

#[derive(Debug, Serialize)]
struct WmsReport {
    #[serde(flatten)]
    aggregate: ClassAggregate,
    per_example: Vec<WmsExample>,
}

#[derive(Debug, Serialize)]
struct EvaluateResult {
    n_reviews: usize,
    classification: ClassificationScores,
    hams4: Option<CorpusReport>,
    wms: Option<WmsReport>,
}

pub fn evaluate(mut cfg: Config, args: EvaluateArgs) -> Result<(), CliError> {
    apply_similarity(&mut cfg, &args.sim);
    if let Some(m) = args.metric {
        cfg.metric = m;
    }
    if let Some(f) = args.sim_floor {
        cfg.wms.sim_floor = f;
    }
    if let Some(u) = &args.wms_unit {
        cfg.wms.unit = u.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    }
    cfg.wms.validate()?;
    let sim = cfg.similarity.build()?;
    let corpus = load_corpus(&args.predictions, &args.references)?;
    if corpus.is_empty() {
        return Err(Error::contract("corpus is empty").into());
    }

    let scorer = SetScorer::new(sim.as_ref()).with_scheme(cfg.weights);
    let hams4_report = if cfg.metric.hams4() {
        Some(hams4(&corpus, &scorer)?)
    } else {
        None
    };
    let wms_report = if cfg.metric.wms() {
        let scorer = WmsScorer::new(sim.as_ref() as &dyn Similarity, cfg.wms)?;
        let scores = per_example_wms(&corpus, &scorer)?;
        let aggregate = aggregate_by_class(corpus.iter().zip(&scores).map(|(ex, &s)| (s, classify_example(ex))))?;
        Some(WmsReport {
            aggregate,
            per_example: corpus
                .iter()
                .zip(scores)
                .map(|(ex, wms)| WmsExample {
                    review_id: ex.review_id.clone(),
                    wms,
                })
                .collect(),
        })
    } else {
        None
    };
    let result = EvaluateResult {
        n_reviews: corpus.len(),
        classification: classification_scores(&corpus)?,
        hams4: hams4_report,
        wms: wms_report,
    };
    emit("evaluate", &cfg, result, &args.out, |r| {
        let mut rows = Vec::new();
        if let Some(h) = &r.hams4 {
            rows.push(vec!["HAMS4".into(), fmt_score(h.hams4)]);
            rows.push(vec!["  no-usage reviews".into(), fmt_opt(h.empty_class_mean)]);
            rows.push(vec!["  usage reviews".into(), fmt_opt(h.usage_class_mean)]);
        }
        rows.push(vec!["Classification F1".into(), fmt_score(r.classification.f1)]);
        rows.push(vec!["  precision".into(), fmt_score(r.classification.precision)]);
        rows.push(vec!["  recall".into(), fmt_score(r.classification.recall)]);
        if let Some(h) = &r.hams4 {
            rows.push(vec!["Mean MS4 (TP)".into(), fmt_opt(h.mean_ms4_tp)]);
        }
        if let Some(w) = &r.wms {
            rows.push(vec!["WMS".into(), fmt_score(w.aggregate.value)]);
            rows.push(vec!["  no-usage reviews".into(), fmt_opt(w.aggregate.empty_class_mean)]);
            rows.push(vec!["  usage reviews".into(), fmt_opt(w.aggregate.usage_class_mean)]);
        }
        rows.push(vec!["reviews".into(), r.n_reviews.to_string()]);
        table(&["metric", "value"], &rows)
    })
}

pub fn compare(mut cfg: Config, args: CompareArgs) -> Result<(), CliError> {
    apply_similarity(&mut cfg, &args.sim);
    let sig = &mut cfg.significance;
    if let Some(r) = args.resamples {
        sig.resamples = r;
    }
    if let Some(s) = args.seed {
        sig.seed = s;
    }
    if let Some(a) = args.alpha {
        sig.alpha = a;
    }
    if let Some(c) = args.corrections {
        sig.corrections = c;
    }
    let sim = cfg.similarity.build()?;
    let a = load_corpus(&args.predictions_a, &args.references)?;
    let b = load_corpus(&args.predictions_b, &args.references)?;
    let scorer = SetScorer::new(sim.as_ref()).with_scheme(cfg.weights);
    let outcome = permutation_test(&a, &b, &cfg.significance, &scorer)?;
    emit("compare", &cfg, outcome, &args.out, |o: &PermutationOutcome| {
        table(
            &["statistic", "value"],
            &[
                vec!["HAMS4 A".into(), fmt_score(o.hams4_a)],
                vec!["HAMS4 B".into(), fmt_score(o.hams4_b)],
                vec!["difference A - B".into(), fmt_score(o.observed_diff)],
                vec!["p-value".into(), fmt_score(o.p_value)],
                vec!["corrected alpha".into(), fmt_score(o.alpha_corrected)],
                vec!["significant".into(), if o.significant { "yes" } else { "no" }.into()],
                vec!["resamples".into(), o.resamples.to_string()],
            ],
        )
    })
}

pub fn agreement(mut cfg: Config, args: AgreementArgs) -> Result<(), CliError> {
    apply_similarity(&mut cfg, &args.sim);
    let sim = cfg.similarity.build()?;
    let labels = read_annotator_dir(&args.labels_dir)?;
    let scorer = SetScorer::new(sim.as_ref()).with_scheme(cfg.weights);
    let report = inter_annotator_agreement(&labels, &scorer)?;
    emit("agreement", &cfg, report, &args.out, |r: &AgreementReport| {
        let mut header = vec![""];
        header.extend(r.annotators.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = r
            .annotators
            .iter()
            .zip(&r.pairwise)
            .map(|(name, row)| std::iter::once(name.clone()).chain(row.iter().map(|&v| fmt_score(v))).collect())
            .collect();
        format!(
            "mean S4 {} (std {}, {} scores)\n\n{}",
            fmt_score(r.mean),
            fmt_score(r.std),
            r.n_scores,
            table(&header, &rows)
        )
    })
}

fn parse_format(s: Option<&str>) -> Result<Option<InputFormat>, CliError> {
    s.map(|f| f.parse().map_err(|e: Error| CliError::Usage(e.to_string())))
        .transpose()
}

fn load_reviews(path: &Path, format: Option<InputFormat>) -> Result<Vec<Review>, CliError> {
    Ok(read_reviews(path, format)?.collect::<Result<Vec<_>, _>>()?)
}

pub fn annotate(mut cfg: Config, args: AnnotateArgs) -> Result<(), CliError> {
    let a = &mut cfg.annotation;
    if let Some(p) = args.prompt {
        a.prompt = p;
    }
    if let Some(m) = args.model {
        a.model = m;
    }
    if let Some(t) = args.temperature {
        a.temperature = t;
    }
    if let Some(c) = args.concurrency {
        a.concurrency = c;
    }
    if args.requests_per_second.is_some() {
        a.requests_per_second = args.requests_per_second;
    }
    if let Some(r) = args.max_retries {
        a.max_retries = r;
    }
    if let Some(jobs) = cfg.jobs {
        a.concurrency = a.concurrency.min(jobs);
    }
    let template = PromptTemplate::by_name(&a.prompt)?;
    let mut run_cfg = AnnotateConfig::new(template, a.model.clone());
    run_cfg.temperature = a.temperature;
    run_cfg.concurrency = a.concurrency;
    run_cfg.requests_per_second = a.requests_per_second;
    run_cfg.max_retries = a.max_retries;
    run_cfg.dry_run = args.dry_run;
    run_cfg.parse = a.parse;

    let client: Option<HttpChatClient> = if args.dry_run {
        None
    } else {
        let timeout = Duration::from_secs(a.timeout_secs);
        Some(match &a.endpoint {
            Some(url) => HttpChatClient::new(url.clone(), std::env::var(CHAT_TOKEN_VAR).ok(), timeout)?,
            None => HttpChatClient::from_env(timeout)?,
        })
    };
    let reviews = load_reviews(&args.input, None)?;
    let summary = annotate_corpus(
        &reviews,
        client.as_ref().map(|c| c as &dyn ChatClient),
        &run_cfg,
        &args.labels,
    )?;
    emit("annotate", &cfg, summary, &args.out, |s: &AnnotateSummary| {
        table(
            &["records", "count"],
            &[
                vec!["reviews".into(), s.total.to_string()],
                vec!["already labeled".into(), s.skipped.to_string()],
                vec!["ok".into(), s.ok.to_string()],
                vec!["format violation".into(), s.format_violation.to_string()],
                vec!["transport error".into(), s.transport_error.to_string()],
            ],
        )
    })
}

pub fn preprocess(mut cfg: Config, args: PreprocessArgs) -> Result<(), CliError> {
    let f = &mut cfg.filter;
    if let Some(n) = args.min_words {
        f.min_words = n;
    }
    if let Some(n) = args.max_words {
        f.max_words = n;
    }
    if let Some(n) = args.bot_threshold {
        f.bot_threshold = n;
    }
    let format = parse_format(args.input_format.as_deref())?;
    let mut out = create(&args.reviews)?;
    let stats = preprocess_file(&args.input, format, &cfg.filter, &mut out)?;
    flush(out, &args.reviews)?;
    emit("preprocess", &cfg, stats, &args.out, |s: &FilterStats| {
        table(
            &["reviews", "count"],
            &[
                vec!["input".into(), s.input.to_string()],
                vec!["malformed".into(), s.malformed.to_string()],
                vec!["excluded category".into(), s.excluded_category.to_string()],
                vec!["unverified".into(), s.unverified.to_string()],
                vec!["too short".into(), s.too_short.to_string()],
                vec!["bot".into(), s.bot.to_string()],
                vec!["kept".into(), s.kept.to_string()],
                vec!["  truncated".into(), s.truncated.to_string()],
            ],
        )
    })
}

#[derive(Debug, Serialize)]
struct SplitFile {
    path: PathBuf,
    count: usize,
}

pub fn split(mut cfg: Config, args: SplitArgs) -> Result<(), CliError> {
    if let Some(s) = args.seed {
        cfg.split.seed = s;
    }
    let reviews = load_reviews(&args.input, Some(InputFormat::Jsonl))?;
    let splits = split_reviews(reviews, cfg.split.sizes, cfg.split.seed)?;
    std::fs::create_dir_all(&args.output_dir).map_err(|e| Error::io(&args.output_dir, e))?;
    let mut files = BTreeMap::new();
    for (name, part) in [
        ("prompt_selection", &splits.prompt_selection),
        ("evaluation", &splits.evaluation),
        ("train", &splits.train),
        ("validation", &splits.validation),
    ] {
        let path = args.output_dir.join(format!("{name}.jsonl"));
        let mut w = create(&path)?;
        write_reviews_jsonl(&mut w, part)?;
        flush(w, &path)?;
        files.insert(name, SplitFile { path, count: part.len() });
    }
    emit("split", &cfg, files, &args.out, |files| {
        let rows: Vec<Vec<String>> = files
            .iter()
            .map(|(name, f)| vec![name.to_string(), f.count.to_string(), f.path.display().to_string()])
            .collect();
        table(&["split", "reviews", "file"], &rows)
    })
}

pub fn feasibility(cfg: Config, args: FeasibilityArgs) -> Result<(), CliError> {
    let models = if args.table {
        standard_scenarios()
    } else {
        let fpt = match (args.llm_flops_per_token, args.params) {
            (Some(f), _) => f,
            (None, Some(n)) => flops_per_token(n)?,
            (None, None) => {
                return Err(CliError::Usage(
                    "give --table, --llm-flops-per-token or --params".into(),
                ))
            }
        };
        let mut m = FeasibilityModel::with_llm_flops_per_token(fpt);
        if let Some(v) = args.tokens_per_request {
            m.tokens_per_request = v;
        }
        if let Some(v) = args.annotation_requests {
            m.n_annotation_requests = v;
        }
        if let Some(v) = args.base_training_flops {
            m.base_training_flops = v;
        }
        if let Some(v) = args.small_model_flops_per_request {
            m.small_model_flops_per_request = v;
        }
        vec![m]
    };
    for m in &models {
        m.validate()?;
    }
    let rows: Vec<FeasibilityRow> = models.iter().map(FeasibilityModel::summary).collect();
    emit("feasibility", &cfg, rows, &args.out, |rows: &Vec<FeasibilityRow>| {
        let sci = |v: f64| format!("{v:.4e}");
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    sci(r.llm_flops_per_token),
                    sci(r.llm_request_flops),
                    sci(r.training_flops),
                    sci(r.small_model_request_flops),
                    r.break_even.to_string(),
                ]
            })
            .collect();
        table(
            &["LLM FLOPs/token", "LLM FLOPs/request", "training FLOPs", "small FLOPs/request", "break-even"],
            &body,
        )
    })
}
