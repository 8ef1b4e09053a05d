#![allow(dead_code)]

pub mod published_table;
pub mod reference_normalizer;
pub mod stub_server;

use crossalpaca::bench::{Benchmark, BenchmarkItem, BenchmarkName, TaskKind};
use crossalpaca::LanguageCode;

/// Extractive benchmark of `n` items where the first `correct` items embed
/// their gold answer for the stub server and the rest embed a wrong one.
pub fn answer_key_benchmark(n: usize, correct: usize, language: LanguageCode) -> Benchmark {
    let items = (0..n)
        .map(|i| {
            let gold = format!("Antwort {i}");
            let said = if i < correct {
                gold.clone()
            } else {
                format!("Falsch {i}")
            };
            BenchmarkItem {
                id: format!("item-{i:04}"),
                language: language.clone(),
                task: TaskKind::ExtractiveQa,
                context: Some(format!("Kontext {i}. [[answer:{said}]]")),
                question: format!("Frage {i}?"),
                choices: None,
                gold_answers: vec![gold],
            }
        })
        .collect();
    Benchmark::new(BenchmarkName::Xquad, language, items).unwrap()
}
