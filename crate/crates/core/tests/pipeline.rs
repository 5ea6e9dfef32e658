use std::fs;
use std::path::Path;
use std::process::Command;

use phonoprobe::encoder::{load_checkpoint, Parameters};
use phonoprobe::pipeline::*;
use phonoprobe::corpus::io::read_corpus;
use phonoprobe::Error;

const SMALL: &str = r#"{
  "corpus": {"lexicon": {"preset": "toy"}, "train_size": 40, "val_size": 40,
             "min_occurrences": 2, "min_synonym_occurrences": 3, "scene_dim": 16},
  "encoder": {"conv_size": 8, "rhn_layers": 2, "rhn_dim": 8, "attn_hidden": 8,
              "joint_dim": 8, "scene_dim": 16},
  "train": {"epochs": 2, "batch_size": 8, "learning_rate": 0.001},
  "probes": {"bootstrap_resamples": 50, "synonym_min_occurrences": 3, "synonym_folds": 3}
}"#;

fn small() -> LoadedConfig {
    LoadedConfig::from_json(SMALL).unwrap()
}

fn with_epochs(epochs: usize) -> LoadedConfig {
    let mut c = small().config;
    c.train.epochs = epochs;
    LoadedConfig::from_config(c).unwrap()
}

#[test]
fn config_defaults_and_unknown_keys() {
    let c = ExperimentConfig::from_json("{}").unwrap();
    assert_eq!(c, ExperimentConfig::default());
    let c = ExperimentConfig::from_json(r#"{"train": {"epochs": 7}}"#).unwrap();
    assert_eq!(c.train.epochs, 7);
    assert_eq!(c.train.batch_size, 32);
    for bad in [r#"{"trian": {}}"#, r#"{"train": {"epoch": 3}}"#, r#"{"probes": {"l2": 1}}"#] {
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
    }
    let mismatch = r#"{"encoder": {"scene_dim": 10}}"#;
    assert!(matches!(LoadedConfig::from_json(mismatch), Err(Error::Config(_))));
}

#[test]
fn generate_requires_lexicon_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = LoadedConfig::from_json(r#"{"corpus": {"val_size": 50}}"#).unwrap();
    match cmd_generate(&cfg, 0, dir.path()) {
        Err(Error::Config(m)) => assert!(m.contains("corpus.lexicon"), "{m}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn generate_is_deterministic_and_echoes_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let a = cmd_generate(&small(), 4, &dir.path().join("a")).unwrap();
    let b = cmd_generate(&small(), 4, &dir.path().join("b")).unwrap();
    let c = cmd_generate(&small(), 5, &dir.path().join("c")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let corpus = read_corpus(&dir.path().join("a")).unwrap();
    assert_eq!(corpus.val.len(), 40);
    assert_eq!(corpus.train.len(), 40);
}

#[test]
fn zero_epochs_writes_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    cmd_generate(&small(), 1, &corpus).unwrap();
    let cfg = with_epochs(0);
    let s = cmd_train(&cfg, 1, &corpus, &dir.path().join("t")).unwrap();
    assert!(s.log.is_empty());
    let (_, params) = load_checkpoint(&s.checkpoint).unwrap();
    let init = Parameters::init(&cfg.config.encoder, train_seed(1, 0)).unwrap();
    assert_eq!(params, init);
    let log = fs::read_to_string(dir.path().join("t").join(TRAIN_LOG)).unwrap();
    assert_eq!(log.lines().count(), 1);
}

#[test]
fn divergence_keeps_last_good_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    cmd_generate(&small(), 2, &corpus).unwrap();
    let mut c = small().config;
    c.train.learning_rate = 1e300;
    let cfg = LoadedConfig::from_config(c).unwrap();
    let out = dir.path().join("t");
    match cmd_train(&cfg, 2, &corpus, &out) {
        Err(Error::Diverged { epoch }) => assert!(epoch >= 1),
        other => panic!("expected divergence, got {other:?}"),
    }
    assert!(out.join(LAST_GOOD_CHECKPOINT).exists());
    assert!(!out.join(FINAL_CHECKPOINT).exists());
    let (_, p) = load_checkpoint(&out.join(LAST_GOOD_CHECKPOINT)).unwrap();
    assert!(p.first_non_finite().is_none());
}

#[test]
fn end_to_end_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small();
    cmd_generate(&cfg, 9, &d.join("corpus")).unwrap();

    let mut c = cfg.config.clone();
    c.train.checkpoint_every = 1;
    let cfg = LoadedConfig::from_config(c).unwrap();
    let s = cmd_train(&cfg, 9, &d.join("corpus"), &d.join("t1")).unwrap();
    cmd_train(&cfg, 9, &d.join("corpus"), &d.join("t2")).unwrap();
    assert_eq!(s.log.len(), 2);
    assert!(d.join("t1/epoch-0001.ckpt").exists() && d.join("t1/epoch-0002.ckpt").exists());
    assert_eq!(
        fs::read(d.join("t1").join(FINAL_CHECKPOINT)).unwrap(),
        fs::read(d.join("t2").join(FINAL_CHECKPOINT)).unwrap()
    );
    assert_eq!(
        fs::read(d.join("t1/epoch-0002.ckpt")).unwrap(),
        fs::read(d.join("t1").join(FINAL_CHECKPOINT)).unwrap()
    );

    let manifest = cmd_extract(&cfg, 9, &s.checkpoint, &d.join("corpus"), &d.join("arch")).unwrap();
    assert_eq!(manifest.representations, ["mfcc", "conv", "rec1", "rec2", "embedding"]);
    let archive = read_archive(&d.join("arch")).unwrap();
    let corpus = read_corpus(&d.join("corpus")).unwrap();
    let (_, params) = load_checkpoint(&s.checkpoint).unwrap();
    let direct = extract_activations(&corpus, &params, &cfg.config.encoder, &cfg.config.features).unwrap();
    assert_eq!(archive.activations, direct.to_f32_precision());
    let enc = &cfg.config.encoder;
    for group in GROUPS {
        for item in archive.activations.group(group) {
            let t = item.get("mfcc").unwrap().nrows();
            let steps = (t - enc.conv_length) / enc.conv_stride + 1;
            for rep in ["conv", "rec1", "rec2", "attention"] {
                assert_eq!(item.get(rep).unwrap().nrows(), steps, "{} {rep}", item.id);
            }
            let a = item.get("attention").unwrap();
            assert!((a.sum() - 1.0).abs() < 1e-5);
            let e = item.get("embedding").unwrap();
            assert_eq!(e.dim(), (1, enc.joint_dim));
        }
    }

    let probe = |which: &[ProbeKind], name: &str| {
        cmd_probe(&cfg, 9, &d.join("arch"), &d.join("corpus"), which, name, &d.join("reports")).unwrap()
    };
    let rsa = probe(&[ProbeKind::Rsa], "rsa");
    let reps: Vec<&str> = rsa.rows.iter().map(|r| r.representation.as_str()).collect();
    assert_eq!(reps, ["conv", "rec1", "rec2"]);
    assert!(rsa.rows.iter().all(|r| r.metric == "pearson_r" && r.value.abs() <= 1.0));

    let cluster = probe(&[ProbeKind::Cluster], "cluster");
    assert_eq!(cluster.select("cluster", "ari").count(), 4);
    let dendro = &cluster.details["dendrograms"]["rec1"];
    assert_eq!(dendro["merges"].as_array().unwrap().len(), 37);

    let abx = probe(&[ProbeKind::Abx], "abx");
    assert_eq!(abx.select("abx", "accuracy").count(), 5);
    assert!(abx.value("abx", "mfcc", "accuracy_vowel").is_some());
    assert!(abx.value("abx", "mfcc", "accuracy_mixed").is_some());

    let decode = probe(&[ProbeKind::Decode], "decode");
    let base = decode.value("decode", "majority", "error").unwrap();
    assert!(base > 0.5 && base < 1.0);
    assert!(decode.select("decode", "error").all(|r| r.representation == "majority" || r.ci_low.is_some()));

    let syn = probe(&[ProbeKind::Synonym], "synonym");
    assert!(syn.select("synonym", "mean_error").count() > 0 || syn.details.contains_key("synonym"));

    for name in ["rsa", "cluster", "abx", "decode", "synonym"] {
        assert!(d.join(format!("reports/probe-{name}.csv")).exists());
    }
    let inputs: Vec<_> = ["rsa", "abx"].iter().map(|n| d.join(format!("reports/probe-{n}.json"))).collect();
    let merged = cmd_report(&inputs, &d.join("merged")).unwrap();
    assert_eq!(merged.rows.len(), rsa.rows.len() + abx.rows.len());
    let csv = fs::read_to_string(d.join("merged/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), merged.rows.len() + 1);
}

#[test]
fn archive_detects_single_byte_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = with_epochs(0);
    cmd_generate(&cfg, 3, &d.join("corpus")).unwrap();
    let s = cmd_train(&cfg, 3, &d.join("corpus"), &d.join("t")).unwrap();
    cmd_extract(&cfg, 3, &s.checkpoint, &d.join("corpus"), &d.join("arch")).unwrap();
    let payload = d.join("arch").join(ARCHIVE_PAYLOAD);
    let clean = fs::read(&payload).unwrap();
    let mut rng = phonoprobe::seed::rng(5);
    for _ in 0..20 {
        use rand::Rng;
        let mut bytes = clean.clone();
        let k = rng.random_range(0..bytes.len());
        bytes[k] ^= 1 << rng.random_range(0..8);
        fs::write(&payload, &bytes).unwrap();
        assert!(matches!(read_archive(&d.join("arch")), Err(Error::Checksum(_))), "byte {k}");
    }
    let mut short = clean.clone();
    short.pop();
    fs::write(&payload, &short).unwrap();
    assert!(matches!(read_archive(&d.join("arch")), Err(Error::Format { .. })));
    fs::write(&payload, &clean).unwrap();
    read_archive(&d.join("arch")).unwrap();
}

#[test]
fn probe_names_parse() {
    for k in ProbeKind::ALL {
        assert_eq!(k.name().parse::<ProbeKind>().unwrap(), k);
    }
    assert!(matches!("pca".parse::<ProbeKind>(), Err(Error::Config(_))));
}

fn cli(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_phonoprobe"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, err) = cli(&["--out", "c", "generate"], d);
    assert_eq!(code, 2);
    assert!(err.contains("corpus.lexicon"), "{err}");

    fs::write(d.join("bad.json"), r#"{"corpus": {"lexicon": {"preset": "toy"}, "sizes": 3}}"#).unwrap();
    assert_eq!(cli(&["--config", "bad.json", "generate"], d).0, 2);
    assert_eq!(cli(&["probe", "--archive", "a", "--corpus", "c", "--which", "pca"], d).0, 2);
    assert_eq!(cli(&["frobnicate"], d).0, 2);
    assert_eq!(cli(&["--jobs", "0", "report", "x.json"], d).0, 2);

    let (code, err) = cli(&["train", "--corpus", "missing"], d);
    assert_eq!(code, 1);
    assert!(err.contains("missing"), "{err}");

    fs::write(d.join("small.json"), SMALL).unwrap();
    let (code, _) = cli(&["--config", "small.json", "--out", "c", "generate"], d);
    assert_eq!(code, 0);
    assert!(d.join("c/manifest.json").exists());
}
