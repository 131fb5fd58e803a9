use std::path::Path;
use std::process::{Command, Output};

fn quotematch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quotematch"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

const HEADER: &str = "id\tauthenticity\tsource\ttext\n";

#[test]
fn missing_input_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tsv");
    let out = quotematch(&["corpus", "build", p(&missing), "-o", p(&dir.path().join("c.tsv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.tsv"));
}

#[test]
fn merge_reports_collision() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    write(
        &a,
        &format!("{HEADER}a1\tfabricated\ts1\tمن صام رجب كله\na2\tfabricated\ts1\tاطلبوا العلم ولو في الصين\n"),
    );
    write(
        &b,
        &format!("{HEADER}b1\tfabricated\ts2\tمَن صامَ رجبَ كلَّه\nb2\tweak\ts2\tحب الوطن من الايمان\n"),
    );
    let merged = dir.path().join("m.tsv");
    let out = quotematch(&["corpus", "merge", p(&a), p(&b), "-o", p(&merged)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["collisions"], 1);
    assert_eq!(report["size"], 3);

    let exclude = dir.path().join("ex.txt");
    write(&exclude, "# acceptable\na2\nunknown\n");
    let filtered = dir.path().join("f.tsv");
    let out = quotematch(&[
        "corpus",
        "filter",
        p(&merged),
        "--exclude",
        p(&exclude),
        "-o",
        p(&filtered),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["size"], 2);
}

#[test]
fn scan_with_foreign_index_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    write(&a, &format!("{HEADER}a1\tfabricated\ts\tمن صام رجب كله\n"));
    write(&b, &format!("{HEADER}b1\tfabricated\ts\tاطلبوا العلم ولو في الصين\n"));
    let ix = dir.path().join("a.idx");
    assert!(quotematch(&["index", p(&a), "-o", p(&ix)]).status.success());
    let timelines = dir.path().join("tl");
    std::fs::create_dir_all(&timelines).unwrap();
    let out = quotematch(&[
        "scan",
        "--corpus",
        p(&b),
        "--index",
        p(&ix),
        "--timelines",
        p(&timelines),
        "-o",
        p(&dir.path().join("scan")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scan_stages_on_small_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.tsv");
    write(
        &c,
        &format!("{HEADER}f1\tfabricated\ts\tقال رسول الله من صام رجب كله كتب له صيام الف سنة\n"),
    );
    let ix = dir.path().join("c.idx");
    assert!(quotematch(&["index", p(&c), "-o", p(&ix)]).status.success());

    // empty timelines directory: header only
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let scan_out = dir.path().join("scan_empty");
    let args = |tl: &Path, out: &Path| {
        quotematch(&[
            "scan",
            "--corpus",
            p(&c),
            "--index",
            p(&ix),
            "--timelines",
            p(tl),
            "-o",
            p(out),
        ])
    };
    assert!(args(&empty, &scan_out).status.success());
    assert_eq!(
        std::fs::read_to_string(scan_out.join("stats.csv")).unwrap(),
        "user_id,total_hadith,fabricated,refutes,retweet_fraction,label\n"
    );

    let tl = dir.path().join("tl");
    write(
        &tl.join("u1.jsonl"),
        concat!(
            r#"{"id":"1","user_id":"u1","text":"من صام رجب كله كتب له صيام الف سنة","is_retweet":true,"created_at":"2021-01-02T00:00:00Z"}"#,
            "\n",
            r#"{"id":"2","user_id":"u1","text":"صباح الخير","created_at":"2021-01-01T00:00:00Z"}"#,
            "\n"
        ),
    );
    let scan_out = dir.path().join("scan");
    assert!(args(&tl, &scan_out).status.success());
    let stats = std::fs::read_to_string(scan_out.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().nth(1), Some("u1,1,1,0,0.5,neither"));
    let matches = std::fs::read_to_string(scan_out.join("matches.jsonl")).unwrap();
    assert_eq!(matches.lines().count(), 1);
}

#[test]
fn train_with_one_class_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let ties = dir.path().join("ties.csv");
    write(&ties, "user_id,target_id,kind\nu1,t1,follow\nu2,t2,like\n");
    let labels = dir.path().join("labels.csv");
    write(&labels, "user_id,label\nu1,circulator\nu2,circulator\n");
    let feats = dir.path().join("features");
    let out = quotematch(&["features", "--ties", p(&ties), "--labels", p(&labels), "-o", p(&feats)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = quotematch(&["train", p(&feats), "-o", p(&dir.path().join("model"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn synth_is_deterministic_and_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--n-per-class", "60", "--n-neither", "10"];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let mut args = vec!["synth", "-o", p(d)];
        args.extend(small);
        assert!(quotematch(&args).status.success());
    }
    for f in [
        "corpus.tsv",
        "ties.csv",
        "truth.csv",
        "planted.json",
        "timelines/c00001.jsonl",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }

    let out_dir = dir.path().join("run");
    let out = quotematch(&[
        "run",
        "--corpus",
        p(&a.join("corpus.tsv")),
        "--timelines",
        p(&a.join("timelines")),
        "--ties",
        p(&a.join("ties.csv")),
        "--cv-repeats",
        "3",
        "--top-k",
        "10",
        "-o",
        p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "corpus.tsv",
        "index.bin",
        "scan/stats.csv",
        "scan/matches.jsonl",
        "labels.csv",
        "features/manifest.json",
        "features/vectors.jsonl",
        "model/model.json",
        "model/cv_metrics.csv",
        "report/coefficients.csv",
        "report/categories.csv",
        "report/class_summary.csv",
        "report/welch.csv",
    ] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    // no category map: everything is unlabeled
    let cats = std::fs::read_to_string(out_dir.join("report/categories.csv")).unwrap();
    assert!(cats.lines().skip(1).all(|l| l.contains("Unlabeled")), "{cats}");
}
