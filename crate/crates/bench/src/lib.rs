//! Shared loading for the criterion benches: the proof corpus under
//! `fixtures/bench` and a few synthetic systems.

use std::fs;
use std::path::{Path, PathBuf};

use farkas_core::codec::parse_proof;
use farkas_core::harness::{random_system, rng};
use farkas_core::{Backend, Proof, Tableau, Vector};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/bench")
}

/// `(file name, source text)` for every proof in `dir`, sorted by name.
pub fn load_texts(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", dir.display()))
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = fs::read_to_string(&p).expect("readable proof");
            (name, text)
        })
        .collect();
    out.sort();
    out
}

pub fn load_proofs(dir: &Path, backend: Backend) -> Vec<(String, Proof)> {
    load_texts(dir)
        .into_iter()
        .map(|(name, text)| {
            let p = parse_proof(&text, backend).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, p)
        })
        .collect()
}

/// Deterministic random systems `A x = 0, l <= x <= u`.
pub fn systems(seed: u64, count: usize, max_cols: usize, max_rows: usize) -> Vec<(Tableau, Vector, Vector)> {
    let mut r = rng(seed);
    (0..count).map(|_| random_system(&mut r, max_cols, max_rows)).collect()
}
