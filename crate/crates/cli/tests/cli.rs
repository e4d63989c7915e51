use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn model(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn irsem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irsem"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    out
}

fn json(dir: &Path, file: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(file)).unwrap()).unwrap()
}

fn join_args<'a>(features: &'a str, run: &'a str, qrels: &'a str, schema: &'a str) -> Vec<&'a str> {
    vec!["join", "--run", run, "--qrels", qrels, "--features", features, "--schema", schema]
}

/// Joins and prepares the fixture inside `dir`, leaving `prepped.csv`.
fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let (run, qrels, feats, schema) = (
        fixture("run.txt"),
        fixture("qrels.txt"),
        fixture("features.txt"),
        fixture("schema.txt"),
    );
    let mut args = join_args(&feats, &run, &qrels, &schema);
    args.extend(["--out", "joined.csv", "--quiet"]);
    ok(irsem(dir.path(), &args));
    ok(irsem(
        dir.path(),
        &["prep", "--input", "joined.csv", "--out", "prepped.csv", "--log-targets", "bodytf,inlinks", "--quiet"],
    ));
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn join_reports_no_drops_for_matching_files() {
    let dir = tempfile::tempdir().unwrap();
    let (run, qrels, feats, schema) = (
        fixture("run.txt"),
        fixture("qrels.txt"),
        fixture("features.txt"),
        fixture("schema.txt"),
    );
    let mut args = join_args(&feats, &run, &qrels, &schema);
    args.extend(["--out", "joined.csv"]);
    let out = ok(irsem(dir.path(), &args));
    assert!(stderr(&out).contains("dropped=0"), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("joined.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("query_id,doc_id"), "{header}");
    assert!(header.ends_with("docprec"), "{header}");
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn join_counts_a_missing_feature_record() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("features.txt")).unwrap();
    let trimmed: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let feats = write(dir.path(), "features.txt", &trimmed);
    let (run, qrels, schema) = (fixture("run.txt"), fixture("qrels.txt"), fixture("schema.txt"));
    let feats = feats.to_string_lossy().into_owned();
    let mut args = join_args(&feats, &run, &qrels, &schema);
    args.extend(["--out", "joined.csv"]);
    let out = ok(irsem(dir.path(), &args));
    assert!(stderr(&out).contains("dropped=1"), "{}", stderr(&out));
}

#[test]
fn join_without_schema_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let (run, qrels, feats) = (fixture("run.txt"), fixture("qrels.txt"), fixture("features.txt"));
    let out = irsem(dir.path(), &join_args(&feats, &run, &qrels, "no_such_schema.txt"));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no_such_schema.txt"), "{}", stderr(&out));
}

#[test]
fn prep_keeps_variance_ratio_within_bound() {
    let dir = prepared();
    ok(irsem(
        dir.path(),
        &["--format", "machine", "prep", "--input", "joined.csv", "--out", "p.csv", "--report", "r.json"],
    ));
    let r = json(dir.path(), "r.json");
    let ratio = r["result"]["final_variance_ratio"].as_f64().unwrap();
    assert!(ratio <= 10.0, "{ratio}");
    assert_eq!(r["config"]["max_ratio"], 10.0);
    assert_eq!(r["result"]["columns"]["dropped"], serde_json::json!(["bodytfidf"]));
    assert!(r["formulas"]["log_shift"].is_string());
}

#[test]
fn prep_threshold_one_drops_nothing() {
    let dir = prepared();
    ok(irsem(
        dir.path(),
        &[
            "--format", "machine", "prep", "--input", "joined.csv", "--out", "p.csv",
            "--collinearity-threshold", "1.0", "--report", "r.json",
        ],
    ));
    let r = json(dir.path(), "r.json");
    assert_eq!(r["result"]["columns"]["dropped"], serde_json::json!([]));
}

#[test]
fn prep_constant_column_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.csv", "query_id,doc_id,a,b,k\n1,d1,1,5,2\n1,d2,2,3,2\n1,d3,4,4,2\n1,d4,3,1,2\n");
    let out = irsem(
        dir.path(),
        &["prep", "--input", "c.csv", "--out", "o.csv", "--no-collinearity", "--no-outliers"],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("\"k\""), "{}", stderr(&out));
}

#[test]
fn fit_flags_saturated_model() {
    let dir = prepared();
    write(dir.path(), "sat.sem", "qrel <- bodybm25 + anchorbm25\n");
    ok(irsem(
        dir.path(),
        &["--format", "machine", "fit", "--model", "sat.sem", "--data", "prepped.csv", "--out", "f.json"],
    ));
    let idx = &json(dir.path(), "f.json")["result"]["fit"]["indices"];
    assert_eq!(idx["df"], 0);
    assert_eq!(idx["saturated"], true);
    assert!(idx["flags"].as_array().unwrap().iter().any(|f| f == "saturated"));
}

#[test]
fn fit_correlation_cov_file_gives_betas() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "r.cov", "n=1000 correlation\nX1 X2 Y\n1 0.6 0.4\n0.6 1 0.6\n0.4 0.6 1\n");
    write(dir.path(), "m.sem", "Y <- X1 + X2\n");
    ok(irsem(
        dir.path(),
        &["--format", "machine", "fit", "--model", "m.sem", "--cov", "r.cov", "--out", "f.json"],
    ));
    let fit = &json(dir.path(), "f.json")["result"]["fit"];
    let est = |id: &str| {
        fit["parameters"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["id"] == id)
            .unwrap()["estimate"]
            .as_f64()
            .unwrap()
    };
    assert!((est("Y <- X1") - 0.0625).abs() < 1e-9);
    assert!((est("Y <- X2") - 0.5625).abs() < 1e-9);
    assert_eq!(fit["is_correlation"], true);
}

#[test]
fn fit_missing_variable_exits_4() {
    let dir = prepared();
    write(dir.path(), "m.sem", "qrel <- bodybm25 + tfsum\n");
    let out = irsem(dir.path(), &["fit", "--model", "m.sem", "--data", "prepped.csv"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("tfsum"), "{}", stderr(&out));
}

#[test]
fn fit_cyclic_model_exits_4() {
    let dir = prepared();
    let cyclic = fixture("cyclic.sem");
    let out = irsem(dir.path(), &["fit", "--model", &cyclic, "--data", "prepped.csv"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("cycle"), "{}", stderr(&out));
}

#[test]
fn fit_nonconvergence_exits_5_with_partial_report() {
    let dir = prepared();
    let m = model("fixture_pooled.sem");
    let out = irsem(
        dir.path(),
        &["--format", "machine", "fit", "--model", &m, "--data", "prepped.csv", "--max-iter", "1", "--out", "f.json"],
    );
    assert_eq!(code(&out), 5);
    let r = json(dir.path(), "f.json");
    assert_eq!(r["result"]["status"], "not_converged");
    assert_eq!(r["result"]["fit"]["convergence"]["converged"], false);
}

#[test]
fn fit_on_matrix_and_exported_cov_agree() {
    let dir = prepared();
    let m = model("fixture_pooled.sem");
    ok(irsem(dir.path(), &["cov", "export", "--data", "prepped.csv", "--out", "s.cov"]));
    ok(irsem(dir.path(), &["--format", "machine", "fit", "--model", &m, "--data", "prepped.csv", "--out", "a.json"]));
    ok(irsem(dir.path(), &["--format", "machine", "fit", "--model", &m, "--cov", "s.cov", "--out", "b.json"]));
    let params = |f: &str| json(dir.path(), f)["result"]["fit"]["parameters"].as_array().unwrap().clone();
    let (a, b) = (params("a.json"), params("b.json"));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x["id"], y["id"]);
        let (u, v) = (x["estimate"].as_f64().unwrap(), y["estimate"].as_f64().unwrap());
        assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0), "{}: {u} vs {v}", x["id"]);
    }
}

#[test]
fn by_query_fits_every_group_in_order() {
    let dir = prepared();
    let m = model("fixture_query.sem");
    ok(irsem(
        dir.path(),
        &["--format", "machine", "fit", "--model", &m, "--data", "prepped.csv", "--by-query", "--parallel", "--out", "b.json"],
    ));
    let groups: Vec<String> = json(dir.path(), "b.json")["result"]["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["group"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(groups, ["301", "302", "303", "304", "305"]);
}

#[test]
fn metrics_lists_every_query() {
    let dir = tempfile::tempdir().unwrap();
    let (run, qrels) = (fixture("run.txt"), fixture("qrels.txt"));
    let out = ok(irsem(dir.path(), &["metrics", "--run", &run, "--qrels", &qrels]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.to_lowercase().contains("ndcg"));
    for q in ["301", "302", "303", "304", "305"] {
        assert!(text.contains(q), "{q} missing");
    }
    let out = ok(irsem(dir.path(), &["--format", "machine", "metrics", "--run", &run, "--qrels", &qrels]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for q in v["result"]["queries"].as_array().unwrap() {
        let ndcg = q["ndcg"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&ndcg));
    }
}

const RESTRICTED: &str = "content -> bodybm25 + bodylmir + titlebm25 + anchorbm25
link -> inlinks + outlinks + pagerank
qrel <- content + 0*link
content <-> link
";

const NON_NESTED: &str = "content -> bodybm25 + bodylmir + titlebm25 + anchorbm25
link -> inlinks + outlinks + pagerank
qrel <- content + outlinks
content <-> link
";

fn fit_to(dir: &Path, model: &str, source: &[&str], out: &str) {
    let mut args = vec!["--format", "machine", "fit", "--model", model];
    args.extend_from_slice(source);
    args.extend(["--out", out]);
    ok(irsem(dir, &args));
}

#[test]
fn compare_nested_models() {
    let dir = prepared();
    write(dir.path(), "restricted.sem", RESTRICTED);
    let full = model("fixture_pooled.sem");
    fit_to(dir.path(), &full, &["--data", "prepped.csv"], "full.json");
    fit_to(dir.path(), "restricted.sem", &["--data", "prepped.csv"], "restricted.json");
    let out = ok(irsem(dir.path(), &["--format", "machine", "compare", "restricted.json", "full.json"]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["result"];
    assert_eq!(r["kind"], "nested");
    assert_eq!(r["delta_df"], 1);
    assert_eq!(r["full"], "full.json");
    let delta = r["delta_chisq"].as_f64().unwrap();
    let p = r["p"].as_f64().unwrap();
    assert!(delta >= 0.0 && (0.0..=1.0).contains(&p));
}

#[test]
fn compare_non_nested_models_uses_information_criteria() {
    let dir = prepared();
    write(dir.path(), "other.sem", NON_NESTED);
    let full = model("fixture_pooled.sem");
    fit_to(dir.path(), &full, &["--data", "prepped.csv"], "full.json");
    fit_to(dir.path(), "other.sem", &["--data", "prepped.csv"], "other.json");
    let out = ok(irsem(dir.path(), &["--format", "machine", "compare", "full.json", "other.json"]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["kind"], "information");
    assert_eq!(v["result"]["aic"].as_array().unwrap().len(), 2);
    assert_eq!(v["result"]["bic"].as_array().unwrap().len(), 2);
}

#[test]
fn compare_on_different_data_exits_4() {
    let dir = prepared();
    write(dir.path(), "restricted.sem", RESTRICTED);
    let full = model("fixture_pooled.sem");
    ok(irsem(dir.path(), &["cov", "export", "--data", "prepped.csv", "--out", "s.cov"]));
    fit_to(dir.path(), &full, &["--data", "prepped.csv"], "full.json");
    fit_to(dir.path(), "restricted.sem", &["--cov", "s.cov"], "restricted.json");
    let out = irsem(dir.path(), &["compare", "restricted.json", "full.json"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = prepared();
    let m = model("fixture_pooled.sem");
    write(dir.path(), "run.conf", "# shared settings\nmax_iter = 1\nlog_targets = bodytf\n");
    let base = ["--config", "run.conf", "fit", "--model", &m, "--data", "prepped.csv"];
    assert_eq!(code(&irsem(dir.path(), &base)), 5);
    let mut explicit = base.to_vec();
    explicit.extend(["--max-iter", "500"]);
    ok(irsem(dir.path(), &explicit));

    write(dir.path(), "bad.conf", "bogus = 1\n");
    let out = irsem(dir.path(), &["--config", "bad.conf", "fit", "--model", &m, "--data", "prepped.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn reports_do_not_depend_on_output_location() {
    let dir = prepared();
    fs::create_dir(dir.path().join("sub")).unwrap();
    let m = model("fixture_query.sem");
    fit_to(dir.path(), &m, &["--data", "prepped.csv"], "a.json");
    fit_to(dir.path(), &m, &["--data", "prepped.csv"], "sub/b.json");
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("sub/b.json")).unwrap()
    );
    let r = json(dir.path(), "a.json");
    let inputs = r["inputs"].as_array().unwrap();
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
    assert_eq!(r["config"]["model"], "fixture_query.sem");
}

#[test]
fn cov_import_round_trips_export() {
    let dir = prepared();
    ok(irsem(
        dir.path(),
        &["cov", "export", "--data", "prepped.csv", "--variables", "qrel,bodybm25", "--out", "s.cov"],
    ));
    let out = ok(irsem(dir.path(), &["--format", "machine", "cov", "import", "--cov", "s.cov"]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["names"], serde_json::json!(["qrel", "bodybm25"]));
    assert_eq!(v["result"]["n"], 200);
}

#[test]
fn pca_and_efa_run_on_prepared_data() {
    let dir = prepared();
    let vars = "bodybm25,bodylmir,titlebm25,anchorbm25,inlinks,outlinks";
    ok(irsem(dir.path(), &["pca", "--data", "prepped.csv", "--variables", vars]));
    ok(irsem(dir.path(), &["efa", "--data", "prepped.csv", "--variables", vars, "--factors", "2"]));
}
