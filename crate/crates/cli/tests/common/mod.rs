#![allow(dead_code)]

#[path = "../../../core/tests/support/stub_server.rs"]
pub mod stub_server;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crossalpaca"));
    cmd.env("RUST_LOG", "warn").env_remove("CROSSLING_TOKEN");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn crossalpaca")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `n` distinct English-German pairs, one per line.
pub fn write_corpus(path: &Path, n: usize) {
    let mut text = String::with_capacity(n * 64);
    for i in 0..n {
        text.push_str(&format!(
            "The report number {i} was published on time.\tDer Bericht Nummer {i} wurde pünktlich veröffentlicht.\n"
        ));
    }
    fs::write(path, text).unwrap();
}

pub fn write_instructions(path: &Path, n: usize) {
    let records: Vec<Value> = (0..n)
        .map(|i| {
            json!({
                "instruction": format!("Nenne eine Hauptstadt ({i})."),
                "input": if i % 2 == 0 { String::new() } else { format!("Kontinent {i}") },
                "output": format!("Berlin {i}"),
            })
        })
        .collect();
    fs::write(path, serde_json::to_vec_pretty(&records).unwrap()).unwrap();
}

/// SQuAD-format benchmark of `n` questions; the first `correct` carry their
/// own gold answer as the stub's reply, the rest a wrong one.
pub fn write_answer_key_squad(path: &Path, n: usize, correct: usize) {
    let paragraphs: Vec<Value> = (0..n)
        .map(|i| {
            let gold = format!("Antwort {i}");
            let said = if i < correct {
                gold.clone()
            } else {
                format!("Falsch {i}")
            };
            json!({
                "context": format!("Kontext {i}. [[answer:{said}]]"),
                "qas": [{"id": format!("q{i:04}"), "question": format!("Frage {i}?"),
                         "answers": [{"text": gold, "answer_start": 0}]}]
            })
        })
        .collect();
    let doc = json!({"version": "1.1", "data": [{"title": "synthetic", "paragraphs": paragraphs}]});
    fs::write(path, serde_json::to_vec(&doc).unwrap()).unwrap();
}

/// XQUAD-shaped file: 48 articles of 5 paragraphs, 230 paragraphs with 5
/// questions and 10 with 4.
pub fn write_xquad_shaped(path: &Path) -> usize {
    let mut data = Vec::new();
    let mut q = 0;
    for a in 0..48 {
        let paragraphs: Vec<Value> = (0..5)
            .map(|p| {
                let k = if a * 5 + p < 230 { 5 } else { 4 };
                let qas: Vec<Value> = (0..k)
                    .map(|_| {
                        q += 1;
                        json!({"id": format!("x{q}"), "question": format!("Frage {q}?"),
                               "answers": [{"text": format!("A{q}"), "answer_start": 0}]})
                    })
                    .collect();
                json!({"context": format!("Absatz {a}.{p}"), "qas": qas})
            })
            .collect();
        data.push(json!({"title": format!("t{a}"), "paragraphs": paragraphs}));
    }
    fs::write(path, serde_json::to_vec(&json!({"data": data})).unwrap()).unwrap();
    q
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    /// Write `config.toml` and return its path as a string.
    pub fn config(&self, body: &str) -> String {
        let p = self.path("config.toml");
        fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    }
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}

/// Relative path → bytes for every file under `dir`.
pub fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
