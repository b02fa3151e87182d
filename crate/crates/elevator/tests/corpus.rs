mod common;

use std::time::{Duration, Instant};

use common::*;
use elevator::syntax::alpha_eq;
use elevator::typing::{check_signature, ErrorCode};

#[test]
fn every_corpus_file_checks_quickly() {
    for f in CORPUS {
        let t = Instant::now();
        load(f);
        assert!(
            t.elapsed() < Duration::from_secs(1),
            "{f} took {:?}",
            t.elapsed()
        );
    }
}

#[test]
fn elaborated_definitions_recheck_to_themselves() {
    for f in CORPUS {
        let (sig, spec) = load(f);
        let again = check_signature(&sig, &spec).unwrap_or_else(|e| panic!("{f}: {e}"));
        for (a, b) in sig.defs().iter().zip(again.defs()) {
            assert!(
                alpha_eq(&a.body, &b.body),
                "{f}: `{}` changed on recheck",
                a.name
            );
        }
    }
}

#[test]
fn mutations_report_the_expected_code() {
    for (f, from, to, code) in mutations() {
        match mutated(f, from, to) {
            Ok(()) => panic!("{f}: `{to}` was accepted"),
            Err(e) => assert_eq!(e.code, code, "{f}: `{to}`: {e}"),
        }
    }
}

#[test]
fn recursion_is_gated_by_the_mode_policy() {
    let strict = source("cpgf.json").replace(",\n  \"recursion\": { \"GF\": \"general\" }", "");
    assert!(!strict.contains("recursion"));
    let spec = elevator::mode_spec::ModeSpec::from_json(&strict).unwrap();
    let (m, _) = parse_with_spec(&source("map_lin.elv"));
    let e = elevator::typing::elaborate(&m, &spec).unwrap_err();
    assert_eq!(e.code, ErrorCode::RecursionForbidden);
}

#[test]
fn printed_signatures_elaborate_to_themselves() {
    for f in CORPUS {
        let (sig, spec) = load(f);
        let printed = sig.to_string();
        let module = elevator::frontend::parse_module(&printed)
            .unwrap_or_else(|e| panic!("{f}: printed signature does not parse: {e}\n{printed}"));
        let again = elevator::typing::elaborate(&module, &spec)
            .unwrap_or_else(|e| panic!("{f}: printed signature does not check: {e}\n{printed}"));
        assert_eq!(sig.defs().len(), again.defs().len());
        for (a, b) in sig.defs().iter().zip(again.defs()) {
            assert_eq!(a.name, b.name);
            assert!(alpha_eq(&a.ty, &b.ty), "{f}: type of {} changed", a.name);
            assert!(
                alpha_eq(&a.body, &b.body),
                "{f}: body of {} changed",
                a.name
            );
        }
    }
}
