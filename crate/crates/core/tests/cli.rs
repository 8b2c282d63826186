use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn vocoptim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vocoptim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("mini.txt"), "ab ab\nab\n").unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }
}

#[test]
fn stats_text_and_json() {
    let f = Fixture::new();
    let o = vocoptim(&["stats", &f.p("mini.txt")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "k=2 w=3 w_u=1 alphabet=3\n");

    let o = vocoptim(&["stats", "--json", &f.p("mini.txt")]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["k"], 2);
    assert_eq!(v["w"], 3);
    assert_eq!(v["w_u"], 1);
    assert_eq!(v["alphabet_size"], 3);
}

#[test]
fn stats_missing_file_exits_1() {
    let f = Fixture::new();
    let missing = f.p("nope.txt");
    let o = vocoptim(&["stats", &missing]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&missing), "{}", stderr(&o));
}

#[test]
fn stats_invalid_utf8_exits_1() {
    let f = Fixture::new();
    fs::write(f.path("bad.txt"), b"ok\n\xff\xfe\n").unwrap();
    let o = vocoptim(&["stats", &f.p("bad.txt")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("byte offset 3"), "{}", stderr(&o));
}

#[test]
fn sweep_mini_corpus_writes_artifacts() {
    let f = Fixture::new();
    let out = f.p("curve.csv");
    let svg = f.p("curve.svg");
    let o = vocoptim(&[
        "sweep", "--corpus", &f.p("mini.txt"), "--tokenizer", "bpe", "--n-min", "3", "--n-max",
        "4", "--alphas", "1,1,1", "--out", &out, "--svg", &svg,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "n*=3\n");

    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "n,theta_t,f_plus,f_minus,t1,t2,t3,cost,is_nstar");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("3,7,") && rows[1].ends_with(",1"));
    assert!(rows[2].starts_with("4,4,2,2,4,0,") && rows[2].ends_with(",0"));

    let svg = fs::read_to_string(&svg).unwrap();
    assert!(svg.contains("<polyline") && svg.contains("fill=\"red\""));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(f.path("curve.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n_star"], 3);
    assert_eq!(manifest["tokenizer"], "bpe");
    assert_eq!(manifest["grid"]["n_min"], 3);
    assert_eq!(manifest["corpus"]["sentences"], 2);
    assert_eq!(manifest["corpus"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn sweep_size_only_weight_picks_grid_floor() {
    let f = Fixture::new();
    fs::write(
        f.path("c.txt"),
        "the cat sat on the mat\nthat hat is a fat hat\na cat and a hat sat\n",
    )
    .unwrap();
    for tokenizer in ["bpe", "unigram"] {
        let o = vocoptim(&[
            "sweep", "--corpus", &f.p("c.txt"), "--tokenizer", tokenizer, "--n-min", "16",
            "--n-max", "24", "--alphas", "1,0,0", "--out", &f.p("c.csv"),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o), "n*=16\n", "{tokenizer}");
    }
}

#[test]
fn sweep_defaults_to_alphabet_floor() {
    let f = Fixture::new();
    let o = vocoptim(&[
        "sweep", "--corpus", &f.p("mini.txt"), "--tokenizer", "bpe", "--alphas", "1,0,0", "--out",
        &f.p("d.csv"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "n*=3\n");
    // Only n = 3 and n = 4 are attainable on the mini corpus.
    assert_eq!(fs::read_to_string(f.path("d.csv")).unwrap().lines().count(), 3);
}

#[test]
fn sweep_infeasible_grid_exits_2() {
    let f = Fixture::new();
    for (n_min, n_max) in [("2", "4"), ("6", "9")] {
        let o = vocoptim(&[
            "sweep", "--corpus", &f.p("mini.txt"), "--tokenizer", "bpe", "--n-min", n_min,
            "--n-max", n_max, "--out", &f.p("x.csv"),
        ]);
        assert_eq!(o.status.code(), Some(2), "{n_min}..{n_max}: {}", stderr(&o));
    }
    let o = vocoptim(&[
        "sweep", "--corpus", &f.p("mini.txt"), "--tokenizer", "bpe", "--alphas", "0,0,0", "--out",
        &f.p("x.csv"),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_unwritable_output_exits_1() {
    let f = Fixture::new();
    let o = vocoptim(&[
        "sweep", "--corpus", &f.p("mini.txt"), "--tokenizer", "bpe", "--out",
        &f.p("no/such/dir/c.csv"),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn train_and_encode() {
    let f = Fixture::new();
    let model = f.p("mini.model");
    let o = vocoptim(&[
        "train", "--corpus", &f.p("mini.txt"), "--tokenizer", "bpe", "--n", "4", "--out", &model,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "pieces=4\n");
    let text = fs::read_to_string(&model).unwrap();
    assert_eq!(text.lines().count(), 5);

    let o = vocoptim(&["encode", "--model", &model, "--text", "ab ab"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "ab \u{2423} ab\n");

    let o = vocoptim(&["encode", "--model", &model, "--text", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");

    let o = vocoptim(&["encode", "--model", &model, "--text", "abc"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'c'"), "{}", stderr(&o));

    let o = vocoptim(&["encode", "--model", &model, "--corpus", &f.p("mini.txt")]);
    assert_eq!(stdout(&o), "ab \u{2423} ab\nab\n");

    let o = vocoptim(&["encode", "--model", &model, "--corpus", &f.p("mini.txt"), "--stats"]);
    assert!(o.status.success());
    let line = stdout(&o);
    assert!(line.starts_with("theta_t=4 f_plus=2 f_minus=2 t2=0 t3=0.333"), "{line}");
}

#[test]
fn train_character_model_and_limits() {
    let f = Fixture::new();
    for tokenizer in ["bpe", "unigram"] {
        let model = f.p(&format!("{tokenizer}.model"));
        let o = vocoptim(&[
            "train", "--corpus", &f.p("mini.txt"), "--tokenizer", tokenizer, "--n", "3", "--out",
            &model,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = vocoptim(&["encode", "--model", &model, "--text", "ab ab"]);
        assert_eq!(stdout(&o), "a b \u{2423} a b\n");

        for n in ["2", "1000000000"] {
            let o = vocoptim(&[
                "train", "--corpus", &f.p("mini.txt"), "--tokenizer", tokenizer, "--n", n, "--out",
                &model,
            ]);
            assert_eq!(o.status.code(), Some(2), "{tokenizer} n={n}");
        }
    }
}

#[test]
fn encode_rejects_corrupt_model() {
    let f = Fixture::new();
    fs::write(f.path("bad.model"), "vocoptim-model v1 kind=bpe n=2\n0\ta\t-\n").unwrap();
    let o = vocoptim(&["encode", "--model", &f.p("bad.model"), "--text", "a"]);
    assert_eq!(o.status.code(), Some(1));
    let o = vocoptim(&["encode", "--model", &f.p("missing.model"), "--text", "a"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_is_repeatable_across_threads() {
    let f = Fixture::new();
    let text: String = (0..80)
        .map(|i| format!("the {} sat on the {} mat\n", ["cat", "hat", "bat"][i % 3], ["red", "old"][i % 2]))
        .collect();
    fs::write(f.path("r.txt"), text).unwrap();
    let run = |threads: &str, out: &Path| {
        let o = vocoptim(&[
            "sweep", "--corpus", &f.p("r.txt"), "--tokenizer", "unigram", "--n-max", "30",
            "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out).unwrap()
    };
    assert_eq!(run("1", &f.path("a.csv")), run("3", &f.path("b.csv")));
}
