#![allow(dead_code)]

use std::path::{Path, PathBuf};

use elevator::frontend::ast::{Item, SurfaceModule};
use elevator::frontend::parse_module;
use elevator::mode_spec::ModeSpec;
use elevator::typing::{elaborate, ErrorCode, Signature, TypingError};

pub const CORPUS: &[&str] = &[
    "nth.elv",
    "nth_staged.elv",
    "map_lin.elv",
    "map_lin_meta.elv",
    "map_lin_meta_gen.elv",
];

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap()
}

/// Parses a corpus source and loads the spec named by its pragma.
pub fn parse_with_spec(src: &str) -> (SurfaceModule, ModeSpec) {
    let m = parse_module(src).unwrap();
    let pragma = m
        .items
        .iter()
        .find_map(|i| match i {
            Item::Pragma { path, .. } => Some(path.clone()),
            _ => None,
        })
        .expect("corpus files name their mode spec");
    let spec = ModeSpec::load(&corpus_dir().join(pragma)).unwrap();
    (m, spec)
}

pub fn elaborate_source(src: &str) -> Result<(Signature, ModeSpec), TypingError> {
    let (m, spec) = parse_with_spec(src);
    elaborate(&m, &spec).map(|sig| (sig, spec))
}

pub fn load(name: &str) -> (Signature, ModeSpec) {
    elaborate_source(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Replaces the first occurrence of `from` and elaborates the result.
pub fn mutated(name: &str, from: &str, to: &str) -> Result<(), TypingError> {
    let src = source(name);
    assert!(
        src.contains(from),
        "{name}: mutation site `{from}` not found"
    );
    elaborate_source(&src.replacen(from, to, 1)).map(|_| ())
}

pub fn cp_spec() -> ModeSpec {
    ModeSpec::load(&corpus_dir().join("cp.json")).unwrap()
}

pub fn cpgf_spec() -> ModeSpec {
    ModeSpec::load(&corpus_dir().join("cpgf.json")).unwrap()
}

/// Seeded mutations of the corpus: (file, site, replacement, expected code).
pub fn mutations() -> Vec<(&'static str, &'static str, &'static str, ErrorCode)> {
    use ErrorCode::*;
    vec![
        (
            "nth.elv",
            "force c @ (a, tail [a] xs)",
            "force (nth m) @ (a, tail [a] xs)",
            ModeAccessViolation,
        ),
        (
            "nth_staged.elv",
            "store (nthGen k)",
            "store (nthGen n)",
            ModeAccessViolation,
        ),
        (
            "map_lin.elv",
            "(mapLin [a] [b] (store F) ys)",
            "(mapLin [a] [b] f ys)",
            LinearityViolation,
        ),
        (
            "map_lin.elv",
            "(mapLin [a] [b] (store F) ys)",
            "Nil{GF}",
            WeakeningViolation,
        ),
        ("map_lin.elv", "(store F)", "(store x)", ModeAccessViolation),
        (
            "map_lin_meta.elv",
            "load X = force LIFT @ () x in",
            "load X = force LIFT @ () x in load Z = force LIFT @ () x in",
            LinearityViolation,
        ),
        (
            "map_lin_meta.elv",
            "(b, f . load F = f in Nil{GF})",
            "(b, f . Nil{GF})",
            WeakeningViolation,
        ),
        (
            "map_lin_meta.elv",
            "(b, store F)",
            "(b, store LIFT)",
            ModeAccessViolation,
        ),
        (
            "map_lin_meta_gen.elv",
            "@ (b, store F)",
            "@ (b, f)",
            LinearityViolation,
        ),
        (
            "map_lin_meta_gen.elv",
            "(b, f . load F = f in Nil{GF})",
            "(b, f . Nil{GF})",
            WeakeningViolation,
        ),
        (
            "map_lin_meta_gen.elv",
            "store (Cons{C} X XS)",
            "store (Cons{C} (force LIFT @ () x) XS)",
            ModeAccessViolation,
        ),
    ]
}
