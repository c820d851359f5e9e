//! The built-in worked examples, embedded as problem files.

use crate::dsl::{parse_problem, Problem};
use crate::runner::{run_problem, RunConfig, TaskReport};

pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
}

pub const CORPUS: [CorpusEntry; 6] = [
    CorpusEntry { name: "heat", source: include_str!("../corpus/heat.prob") },
    CorpusEntry { name: "heat_evolutionary", source: include_str!("../corpus/heat_evolutionary.prob") },
    CorpusEntry { name: "kdv", source: include_str!("../corpus/kdv.prob") },
    CorpusEntry { name: "kdv_evolutionary", source: include_str!("../corpus/kdv_evolutionary.prob") },
    CorpusEntry { name: "nls", source: include_str!("../corpus/nls.prob") },
    CorpusEntry { name: "wave", source: include_str!("../corpus/wave.prob") },
];

pub fn corpus_source(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|e| e.name == name).map(|e| e.source)
}

pub fn load(name: &str) -> Option<Problem> {
    corpus_source(name).map(|s| parse_problem(s).expect("corpus files parse"))
}

pub struct EntryReport {
    pub name: String,
    pub problem: Option<Problem>,
    pub parse_error: Option<String>,
    pub tasks: Vec<TaskReport>,
}

impl EntryReport {
    pub fn passed(&self) -> bool {
        self.parse_error.is_none() && self.tasks.iter().all(TaskReport::passed)
    }
}

fn run_entry(name: &str, source: &str, cfg: &RunConfig) -> EntryReport {
    match parse_problem(source) {
        Ok(p) => EntryReport {
            name: name.to_string(),
            tasks: run_problem(name, &p, cfg),
            problem: Some(p),
            parse_error: None,
        },
        Err(e) => {
            EntryReport { name: name.to_string(), problem: None, parse_error: Some(e.to_string()), tasks: Vec::new() }
        }
    }
}

/// Runs every `(name, source)` pair on its own thread; reports come back
/// sorted by name.
pub fn run_sources(entries: &[(String, String)], cfg: &RunConfig) -> Vec<EntryReport> {
    let mut reports: Vec<EntryReport> = std::thread::scope(|s| {
        let handles: Vec<_> =
            entries.iter().map(|(name, source)| s.spawn(move || run_entry(name, source, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("corpus worker panicked")).collect()
    });
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    reports
}

pub fn run_corpus(cfg: &RunConfig) -> Vec<EntryReport> {
    let entries: Vec<(String, String)> = CORPUS.iter().map(|e| (e.name.to_string(), e.source.to_string())).collect();
    run_sources(&entries, cfg)
}
