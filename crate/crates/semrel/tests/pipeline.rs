//! Pipeline orchestration behavior: phase ordering, no-op detection,
//! forced re-runs, dry runs, locking, and the prediction-scoring path.

use std::path::{Path, PathBuf};

use semrel::pipeline::{
    run_phase, validate_config, DirLock, Phase, PhaseStatus, PipelineError, RunOptions,
};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

fn config_source(out: &Path, extra: &str) -> String {
    format!(
        r#"
[paths]
vectors = {vec:?}
lexicon = {lex:?}
dictionary = {dict:?}
output_dir = {out:?}
{extra}
"#,
        vec = fixtures().join("toy.vec"),
        lex = fixtures().join("toy_lexicon.txt"),
        dict = fixtures().join("toy_dictionary.tsv"),
        out = out,
        extra = extra,
    )
}

fn mock_options() -> RunOptions {
    RunOptions {
        mock_provider: true,
        ..RunOptions::default()
    }
}

#[test]
fn phases_require_their_prerequisites_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = validate_config(&config_source(&dir.path().join("out"), "")).unwrap();

    let err = run_phase(Phase::Cluster, &config, &mock_options()).unwrap_err();
    match &err {
        PipelineError::Prerequisite { produced_by, .. } => assert_eq!(produced_by, "embed"),
        other => panic!("expected prerequisite error, got {:?}", other),
    }
    assert_eq!(err.exit_code(), 3);

    let err = run_phase(Phase::Stats, &config, &mock_options()).unwrap_err();
    assert!(matches!(err, PipelineError::Prerequisite { .. }));
}

#[test]
fn validation_errors_carry_exit_code_one() {
    let err = validate_config("[clustering]\nthreshold = 0.4\n").unwrap_err();
    let err = PipelineError::Config(err);
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unchanged_inputs_are_a_no_op_until_forced() {
    let dir = tempfile::tempdir().unwrap();
    let config = validate_config(&config_source(&dir.path().join("out"), "")).unwrap();

    let first = run_phase(Phase::Embed, &config, &mock_options()).unwrap();
    assert_eq!(first.status, PhaseStatus::Ran);

    let second = run_phase(Phase::Embed, &config, &mock_options()).unwrap();
    assert_eq!(second.status, PhaseStatus::UpToDate);
    assert_eq!(second.counters, first.counters);

    let forced = run_phase(
        Phase::Embed,
        &config,
        &RunOptions {
            force: true,
            ..mock_options()
        },
    )
    .unwrap();
    assert_eq!(forced.status, PhaseStatus::Ran);
}

#[test]
fn config_changes_invalidate_downstream_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = validate_config(&config_source(&out, "")).unwrap();
    run_phase(Phase::Embed, &config, &mock_options()).unwrap();
    run_phase(Phase::Cluster, &config, &mock_options()).unwrap();
    assert_eq!(
        run_phase(Phase::Cluster, &config, &mock_options())
            .unwrap()
            .status,
        PhaseStatus::UpToDate
    );

    // A different threshold must re-run the cluster phase.
    let changed = validate_config(&config_source(&out, "[clustering]\nthreshold = 0.9\n")).unwrap();
    let outcome = run_phase(Phase::Cluster, &changed, &mock_options()).unwrap();
    assert_eq!(outcome.status, PhaseStatus::Ran);
}

#[test]
fn tampered_upstream_artifact_invalidates_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = validate_config(&config_source(&out, "")).unwrap();
    run_phase(Phase::Embed, &config, &mock_options()).unwrap();
    run_phase(Phase::Cluster, &config, &mock_options()).unwrap();

    // Append a line to the embeddings artifact; the cluster manifest's
    // recorded digest no longer matches.
    let embeddings = out.join("embeddings.jsonl");
    let mut body = std::fs::read_to_string(&embeddings).unwrap();
    let first_line = body
        .lines()
        .next()
        .unwrap()
        .replace("\"term\":\"mahkeme\"", "\"term\":\"mahkemeX\"");
    body.push_str(&first_line);
    body.push('\n');
    std::fs::write(&embeddings, body).unwrap();

    let outcome = run_phase(Phase::Cluster, &config, &mock_options()).unwrap();
    assert_eq!(outcome.status, PhaseStatus::Ran);
}

#[test]
fn dry_run_enrich_reports_cost_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = validate_config(&config_source(&out, "")).unwrap();
    run_phase(Phase::Embed, &config, &mock_options()).unwrap();
    run_phase(Phase::Cluster, &config, &mock_options()).unwrap();

    let outcome = run_phase(
        Phase::Enrich,
        &config,
        &RunOptions {
            dry_run: true,
            ..mock_options()
        },
    )
    .unwrap();
    assert_eq!(outcome.status, PhaseStatus::DryRun);
    let cost = outcome.counters["estimated_cost_usd"].as_f64().unwrap();
    assert!(cost > 0.0);
    assert!(outcome.counters["estimated_input_tokens"].as_u64().unwrap() > 0);
    assert!(!out.join("llm_pairs.jsonl").exists());
    assert!(!out.join("responses.jsonl").exists());
}

#[test]
fn output_directory_lock_is_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = validate_config(&config_source(&out, "")).unwrap();

    let lock = DirLock::acquire(&out).unwrap();
    let err = run_phase(Phase::Embed, &config, &mock_options()).unwrap_err();
    assert!(matches!(err, PipelineError::Locked(_)));
    assert_eq!(err.exit_code(), 2);
    drop(lock);
    run_phase(Phase::Embed, &config, &mock_options()).unwrap();
}

#[test]
fn eval_scores_supplied_predictions_against_corpus_golds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = validate_config(&config_source(&out, "")).unwrap();
    for phase in [
        Phase::Embed,
        Phase::Cluster,
        Phase::Enrich,
        Phase::Integrate,
        Phase::Assemble,
    ] {
        run_phase(phase, &config, &mock_options()).unwrap();
    }

    // Predict every corpus pair as co_hyponym: a deliberately weak
    // predictor that still exercises the scoring path end to end.
    let corpus = std::fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    let mut predictions = String::new();
    for line in corpus.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        predictions.push_str(&format!(
            "{{\"term_a\": {}, \"term_b\": {}, \"predicted\": \"co_hyponym\"}}\n",
            record["sentence1"], record["sentence2"]
        ));
    }
    let predictions_path = dir.path().join("predictions.jsonl");
    std::fs::write(&predictions_path, predictions).unwrap();

    let source = config_source(
        &out,
        &format!("[eval]\npredictions = {:?}\n", predictions_path),
    );
    let config = validate_config(&source).unwrap();
    let outcome = run_phase(Phase::Eval, &config, &mock_options()).unwrap();
    assert_eq!(outcome.counters["classification_scored"], true);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("eval_report.json")).unwrap())
            .unwrap();
    let co_recall = report["classification"]["co_hyponym"]["recall"]
        .as_f64()
        .unwrap();
    assert_eq!(co_recall, 1.0);
    let syn_f1 = report["classification"]["synonym"]["f1"].as_f64().unwrap();
    assert_eq!(syn_f1, 0.0);
}

#[test]
fn stats_phase_honors_the_tokenizer_choice() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = validate_config(&config_source(&out, "")).unwrap();
    for phase in [
        Phase::Embed,
        Phase::Cluster,
        Phase::Enrich,
        Phase::Integrate,
        Phase::Assemble,
        Phase::Stats,
    ] {
        run_phase(phase, &config, &mock_options()).unwrap();
    }
    let whitespace_avg = run_phase(Phase::Stats, &config, &mock_options())
        .unwrap()
        .counters["avg_token_length"]
        .as_f64()
        .unwrap();

    let char_config =
        validate_config(&config_source(&out, "[stats]\ntokenizer = \"character\"\n")).unwrap();
    let outcome = run_phase(Phase::Stats, &char_config, &mock_options()).unwrap();
    assert_eq!(outcome.status, PhaseStatus::Ran);
    let char_avg = outcome.counters["avg_token_length"].as_f64().unwrap();
    assert!(char_avg > whitespace_avg);
}

#[test]
fn bounded_memory_cluster_path_produces_the_same_corpus() {
    // A dense-matrix cap below the term count forces the
    // nearest-neighbor-chain path; the toy corpus must come out
    // byte-identical to the dense-path golden.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let extra = "[clustering]\ndense_matrix_cap = 10\n";
    let config = validate_config(&config_source(&out, extra)).unwrap();
    for phase in [
        Phase::Embed,
        Phase::Cluster,
        Phase::Enrich,
        Phase::Integrate,
        Phase::Assemble,
    ] {
        run_phase(phase, &config, &mock_options()).unwrap();
    }
    let corpus = std::fs::read(out.join("corpus.jsonl")).unwrap();
    assert_eq!(
        semrel::pipeline::sha256_bytes(&corpus),
        "53fa9d09828a56a5169108d587e0634bc4451d02e301a037785ed6a240aa87c0"
    );
}

#[test]
fn missing_api_key_is_a_validation_error_for_http_provider() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let extra = "[provider]\napi_key_env = \"SEMREL_TEST_KEY_THAT_IS_UNSET\"\n";
    let config = validate_config(&config_source(&out, extra)).unwrap();
    run_phase(Phase::Embed, &config, &mock_options()).unwrap();
    run_phase(Phase::Cluster, &config, &mock_options()).unwrap();

    let err = run_phase(Phase::Enrich, &config, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)));
    assert_eq!(err.exit_code(), 1);
}
