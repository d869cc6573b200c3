//! End-to-end checks of the binary surface: fixtures in a temp dir, every
//! subcommand spawned as a process, exit codes and determinism asserted.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn serkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_serkit"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn serkit");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        output.status,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn write_wav(path: &Path, freq: f64, rate: u32, secs: f64) {
    let n = (rate as f64 * secs) as usize;
    let samples: Vec<f64> = (0..n)
        .map(|i| 0.6 * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
        .collect();
    let audio = serkit::AudioBuffer { samples, sample_rate: rate };
    serkit::audio::write_wav(&audio, path).unwrap();
}

fn write_emat(path: &Path, rows: usize, cols: usize, seed: u64) {
    let mut x = seed | 1;
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect();
    let m = serkit::matrix::Matrix::from_vec(rows, cols, values).unwrap();
    serkit::matrix::write_emat(&m, path).unwrap();
}

#[test]
fn features_extract_writes_matrix_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("tone.wav");
    write_wav(&wav, 220.0, 16000, 1.0);
    let out = dir.path().join("tone.features.csv");
    run_ok(serkit().args(["features", "extract", "--wav"]).arg(&wav).arg("--out").arg(&out));
    let matrix = serkit::matrix::read_csv_matrix(&out).unwrap();
    assert_eq!(matrix.rows(), 98);
    assert_eq!(matrix.cols(), 55);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tone.features.sidecar.json")).unwrap())
            .unwrap();
    assert!(sidecar["jitter_local"].as_f64().unwrap() < 1e-3);
    // resolved-config echo exists
    assert!(dir.path().join("tone.features.csv.config.json").is_file());
}

#[test]
fn fad_label_fixture_grid_selects_angry() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    std::fs::write(
        &grid,
        "encoder,Angry,Happy,Neutral,Sad\n\
         VGGish,4.12,3.98,6.87,12.20\n\
         EnCodec,35.33,42.56,57.24,89.65\n\
         wav2vec2,54.66,58.49,88.78,109.02\n\
         CLAP,45.46,182.65,141.75,230.39\n",
    )
    .unwrap();
    let out = dir.path().join("label.json");
    run_ok(serkit().args(["fad", "label", "--scores"]).arg(&grid).arg("--out").arg(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["label"]["class"], "Angry");
    assert_eq!(report["label"]["tie"], false);
}

#[test]
fn fad_score_from_embedding_directories() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = dir.path().join("labeled");
    for class in ["calm", "tense"] {
        std::fs::create_dir_all(labeled.join(class)).unwrap();
    }
    // "calm" class shares the unlabeled pool's distribution seed
    write_emat(&labeled.join("calm/enc.emat"), 300, 4, 9);
    write_emat(&labeled.join("tense/enc.emat"), 300, 4, 1234567);
    let unlabeled = dir.path().join("unlabeled");
    std::fs::create_dir_all(&unlabeled).unwrap();
    write_emat(&unlabeled.join("enc.emat"), 300, 4, 9);
    let out = dir.path().join("fad.json");
    run_ok(
        serkit()
            .args(["fad", "score", "--labeled"])
            .arg(&labeled)
            .arg("--unlabeled")
            .arg(&unlabeled)
            .args(["--encoders", "enc", "--out"])
            .arg(&out),
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["label"]["class"], "calm");
}

fn asr_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let manifest = dir.join("manifest.jsonl");
    std::fs::write(
        &manifest,
        concat!(
            r#"{"id":"u1","ref":"the cat sat down today","hyps":{"A":"the cat sat down today","B":"the bat sat down today"},"emotion":"neutral","conf":{"A":[0.9,0.9,0.9,0.9,0.9]}}"#,
            "\n",
            r#"{"id":"u2","ref":"dogs run fast at dawn","hyps":{"A":"dogs run fast at dawn","B":"dogs fun fast at dawn"},"emotion":"happy"}"#,
            "\n",
        ),
    )
    .unwrap();
    let lexicon = dir.join("class.tsv");
    std::fs::write(&lexicon, "cat\tNoun\nbat\tNoun\ndogs\tNoun\ndawn\tNoun\nsat\tVerb\nrun\tVerb\nthe\tFunc,Stop\nat\tFunc\nfast\tAdv\ntoday\tAdv\ndown\tAdv\n")
        .unwrap();
    (manifest, lexicon)
}

#[test]
fn asr_eval_report_values() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, lexicon) = asr_fixture(dir.path());
    let out_dir = dir.path().join("reports");
    run_ok(
        serkit()
            .args(["asr", "eval", "--manifest"])
            .arg(&manifest)
            .arg("--class-lexicon")
            .arg(&lexicon)
            .arg("--out-dir")
            .arg(&out_dir),
    );
    let a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("A.report.json")).unwrap())
            .unwrap();
    assert_eq!(a["wer"], 0.0);
    assert_eq!(a["bleu"], 1.0);
    let b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("B.report.json")).unwrap())
            .unwrap();
    // 2 substitutions in 10 reference words
    assert!((b["wer"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!(out_dir.join("B.class_stats.csv").is_file());
    assert!(out_dir.join("B.length_bins.csv").is_file());
    assert!(out_dir.join("B.per_emotion.csv").is_file());
}

#[test]
fn report_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, lexicon) = asr_fixture(dir.path());
    let out_dir = dir.path().join("reports");
    run_ok(
        serkit()
            .args(["asr", "eval", "--manifest"])
            .arg(&manifest)
            .arg("--class-lexicon")
            .arg(&lexicon)
            .arg("--out-dir")
            .arg(&out_dir),
    );
    let consolidated_a = dir.path().join("a.json");
    let consolidated_b = dir.path().join("b.json");
    for out in [&consolidated_a, &consolidated_b] {
        run_ok(
            serkit()
                .arg("report")
                .arg("--asr")
                .arg(out_dir.join("A.report.json"))
                .arg(out_dir.join("B.report.json"))
                .arg("--out")
                .arg(out),
        );
    }
    assert_eq!(
        std::fs::read(&consolidated_a).unwrap(),
        std::fs::read(&consolidated_b).unwrap()
    );
}

#[test]
fn metrics_classify_block() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pairs.csv");
    std::fs::write(&input, "id,pred,target\nu1,x,x\nu2,x,y\nu3,y,y\nu4,y,y\n").unwrap();
    let out = dir.path().join("metrics.json");
    run_ok(
        serkit().args(["metrics", "classify", "--input"]).arg(&input).arg("--out").arg(&out),
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["unweighted_accuracy"], 0.75);
    assert_eq!(report["weighted_accuracy"], 0.75);
}

#[test]
fn probe_sweep_orders_layers() {
    let dir = tempfile::tempdir().unwrap();
    let feats = dir.path().join("f.emat");
    let noise = dir.path().join("n.emat");
    write_emat(&feats, 150, 3, 5);
    write_emat(&noise, 150, 3, 99);
    let out_csv = dir.path().join("sweep.csv");
    run_ok(
        serkit()
            .args(["probe", "sweep", "--features"])
            .arg(&feats)
            .arg("--layer")
            .arg(&feats)
            .arg("--layer")
            .arg(&noise)
            .arg("--out-csv")
            .arg(&out_csv),
    );
    let body = std::fs::read_to_string(&out_csv).unwrap();
    let scores: Vec<f64> = body
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(scores[0] > 0.999);
    assert!(scores[0] > scores[1]);
}

#[test]
fn semisl_run_and_baseline_from_config() {
    let dir = tempfile::tempdir().unwrap();
    // 160 points, 2 classes, 8 dims
    let n = 160;
    let dim = 8;
    let mut x: u64 = 77;
    let mut next = move || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut values = Vec::new();
    let mut ids = String::new();
    let mut gold = String::from("id,label\n");
    let mut acoustic = String::from("id,label\n");
    let mut linguistic = String::from("id,label\n");
    for i in 0..n {
        let class = i % 2;
        let center = if class == 0 { 1.6 } else { -1.6 };
        for _ in 0..dim {
            values.push(center + next());
        }
        let id = format!("u{i:03}");
        ids.push_str(&id);
        ids.push('\n');
        gold.push_str(&format!("{id},c{class}\n"));
        // views agree with gold on most ids
        let flip = |p: f64, salt: u64| -> usize {
            let h = (i as u64).wrapping_mul(2654435761).wrapping_add(salt) % 100;
            if (h as f64) < p * 100.0 {
                1 - class
            } else {
                class
            }
        };
        acoustic.push_str(&format!("{id},c{}\n", flip(0.1, 17)));
        linguistic.push_str(&format!("{id},c{}\n", flip(0.2, 39)));
    }
    let feats = serkit::matrix::Matrix::from_vec(n, dim, values).unwrap();
    serkit::matrix::write_emat(&feats, &dir.path().join("feats.emat")).unwrap();
    std::fs::write(dir.path().join("ids.txt"), ids).unwrap();
    std::fs::write(dir.path().join("gold.csv"), gold).unwrap();
    std::fs::write(dir.path().join("acoustic.csv"), acoustic).unwrap();
    std::fs::write(dir.path().join("linguistic.csv"), linguistic).unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "seed = 3\n\n[data]\nids = {ids:?}\naudio_features = {feats:?}\ngold_labels = {gold:?}\n\
             acoustic_labels = {acoustic:?}\nlinguistic_labels = {ling:?}\n\n\
             [split]\nlabeled_fraction = 0.3\nvalidation_fraction = 0.2\n\n\
             [classifier]\nepochs = 120\n\n[loop]\nmax_iters = 6\n",
            ids = dir.path().join("ids.txt"),
            feats = dir.path().join("feats.emat"),
            gold = dir.path().join("gold.csv"),
            acoustic = dir.path().join("acoustic.csv"),
            ling = dir.path().join("linguistic.csv"),
        ),
    )
    .unwrap();
    let loop_dir = dir.path().join("loop");
    run_ok(
        serkit()
            .args(["semisl", "run", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&loop_dir),
    );
    assert!(loop_dir.join("history.csv").is_file());
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(loop_dir.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["mode"], "loop");
    assert!(metrics["history"]["final_validation_ua"].as_f64().unwrap() > 0.5);

    // same config, limited baseline; rerun determinism on the loop output
    let base_dir = dir.path().join("baseline");
    run_ok(
        serkit()
            .args(["semisl", "run", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&base_dir)
            .args(["--baseline", "supervised_limited"]),
    );
    let baseline: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(base_dir.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(baseline["mode"], "baseline:supervised_limited");

    let rerun_dir = dir.path().join("loop2");
    run_ok(
        serkit()
            .args(["semisl", "run", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&rerun_dir),
    );
    assert_eq!(
        std::fs::read(loop_dir.join("history.csv")).unwrap(),
        std::fs::read(rerun_dir.join("history.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(loop_dir.join("metrics.json")).unwrap(),
        std::fs::read(rerun_dir.join("metrics.json")).unwrap()
    );
}

#[test]
fn features_extract_batch_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.wav");
    let b = dir.path().join("b.wav");
    write_wav(&a, 150.0, 16000, 0.5);
    write_wav(&b, 300.0, 16000, 0.5);
    let out_dir = dir.path().join("features");
    run_ok(
        serkit()
            .args(["--jobs", "2", "features", "extract", "--wav"])
            .arg(&a)
            .arg("--wav")
            .arg(&b)
            .arg("--out-dir")
            .arg(&out_dir),
    );
    for stem in ["a", "b"] {
        assert!(out_dir.join(format!("{stem}.features.csv")).is_file());
        assert!(out_dir.join(format!("{stem}.sidecar.json")).is_file());
    }
}

#[test]
fn semisl_derive_acoustic_from_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let n = 60;
    let dim = 4;
    // classifier features: two separated blobs
    let mut values = Vec::new();
    let mut ids = String::new();
    let mut gold = String::from("id,label\n");
    let mut linguistic = String::from("id,label\n");
    let mut x: u64 = 5;
    let mut next = move || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let emb_root = dir.path().join("emb");
    std::fs::create_dir_all(emb_root.join("labeled/c0")).unwrap();
    std::fs::create_dir_all(emb_root.join("labeled/c1")).unwrap();
    std::fs::create_dir_all(emb_root.join("unlabeled/enc")).unwrap();
    // pooled class embeddings: c0 near +2, c1 near -2
    for (class, center) in [("c0", 2.0), ("c1", -2.0)] {
        let m = serkit::matrix::Matrix::from_vec(
            40,
            3,
            (0..120).map(|_| center + next()).collect(),
        )
        .unwrap();
        serkit::matrix::write_emat(&m, &emb_root.join(format!("labeled/{class}/enc.emat")))
            .unwrap();
    }
    for i in 0..n {
        let class = i % 2;
        let center = if class == 0 { 2.0 } else { -2.0 };
        for _ in 0..dim {
            values.push(center + next());
        }
        let id = format!("u{i:03}");
        ids.push_str(&id);
        ids.push('\n');
        gold.push_str(&format!("{id},c{class}\n"));
        linguistic.push_str(&format!("{id},c{class}\n"));
        // per-utterance embeddings drawn near the class's pool
        let m = serkit::matrix::Matrix::from_vec(
            12,
            3,
            (0..36).map(|_| center + next()).collect(),
        )
        .unwrap();
        serkit::matrix::write_emat(&m, &emb_root.join(format!("unlabeled/enc/{id}.emat")))
            .unwrap();
    }
    let feats = serkit::matrix::Matrix::from_vec(n, dim, values).unwrap();
    serkit::matrix::write_emat(&feats, &dir.path().join("feats.emat")).unwrap();
    std::fs::write(dir.path().join("ids.txt"), ids).unwrap();
    std::fs::write(dir.path().join("gold.csv"), gold).unwrap();
    std::fs::write(dir.path().join("linguistic.csv"), linguistic).unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "seed = 11\n\n[data]\nids = {ids:?}\naudio_features = {feats:?}\ngold_labels = {gold:?}\n\
             linguistic_labels = {ling:?}\n\n\
             [split]\nlabeled_fraction = 0.4\nvalidation_fraction = 0.2\n\n\
             [classifier]\nepochs = 80\n\n[loop]\nmax_iters = 4\n\n\
             [acoustic_derive]\nlabeled_dir = {ldir:?}\nunlabeled_dir = {udir:?}\nencoders = [\"enc\"]\n",
            ids = dir.path().join("ids.txt"),
            feats = dir.path().join("feats.emat"),
            gold = dir.path().join("gold.csv"),
            ling = dir.path().join("linguistic.csv"),
            ldir = emb_root.join("labeled"),
            udir = emb_root.join("unlabeled"),
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    run_ok(
        serkit()
            .args(["semisl", "run", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&out_dir)
            .arg("--derive-acoustic"),
    );
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap())
            .unwrap();
    // FAD labels agree with the (clean) linguistic view on this separable
    // fixture, so most unlabeled data lands in the high-confidence pool
    assert!(metrics["high_conf"].as_u64().unwrap() > 20);
    assert!(metrics["history"]["final_validation_ua"].as_f64().unwrap() > 0.8);
}

#[test]
fn unknown_key_in_config_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "seed = 1\nmystery = true\n").unwrap();
    let output = serkit()
        .args(["semisl", "run", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error"), "stderr: {stderr}");
}

#[test]
fn contract_errors_exit_one_with_json() {
    let output = serkit()
        .args(["metrics", "classify", "--input", "/nonexistent.csv", "--out", "/tmp/x.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    let parsed: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).expect("machine-readable stderr");
    assert_eq!(parsed["error"]["kind"], "io");
}

#[test]
fn unknown_subcommand_exits_one() {
    let output = serkit().arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}
