use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use elevator::frontend::print_term;
use elevator::mode_spec::Mode;
use elevator::syntax::{name, Term, Type};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn elevator(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_elevator"));
    c.args(args).env_remove("ELEVATOR_MODES");
    c
}

fn run(args: &[&str]) -> Output {
    elevator(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes `src` to a fresh file in a per-test scratch directory.
fn scratch(test: &str, file: &str, src: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("elevator-cli-{}-{test}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(file);
    std::fs::write(&p, src).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn with_main(file: &str, main: &str) -> String {
    let src = std::fs::read_to_string(corpus().join(file)).unwrap();
    let spec = corpus().join("cp.json");
    let body: String = src
        .lines()
        .filter(|l| !l.starts_with("#modes"))
        .collect::<Vec<_>>()
        .join("\n");
    format!("#modes \"{}\"\n{body}\n{main}\n", spec.display())
}

#[test]
fn corpus_checks() {
    let files: Vec<String> = [
        "nth.elv",
        "nth_staged.elv",
        "map_lin.elv",
        "map_lin_meta.elv",
        "map_lin_meta_gen.elv",
    ]
    .iter()
    .map(|f| corpus().join(f).display().to_string())
    .collect();
    let mut args = vec!["check"];
    args.extend(files.iter().map(String::as_str));
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for d in [
        "nth",
        "nthGen",
        "convertNat",
        "mapLin",
        "mapLinMeta",
        "mapLinMetaGen",
        "convertList",
    ] {
        assert!(
            stdout(&o).contains(&format!("OK {d} : ")),
            "{d} not reported"
        );
    }
}

#[test]
fn weakening_violation_exits_one() {
    let src = std::fs::read_to_string(corpus().join("map_lin.elv"))
        .unwrap()
        .replace(
            "#modes \"cpgf.json\"",
            &format!("#modes \"{}\"", corpus().join("cpgf.json").display()),
        )
        .replacen("(mapLin [a] [b] (store F) ys)", "Nil{GF}", 1);
    let f = scratch("weak", "weak.elv", &src);
    let text = run(&["check", path(&f)]);
    assert_eq!(code(&text), 1);
    assert!(
        stderr(&text).contains("error[WeakeningViolation]"),
        "{}",
        stderr(&text)
    );
    let json = run(&["check", "--format", "json", path(&f)]);
    assert_eq!(code(&json), 1);
    let diags: Vec<serde_json::Value> = stdout(&json)
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .filter(|v: &serde_json::Value| v.get("code").is_some())
        .collect();
    assert_eq!(diags.len(), 1);
    let d = &diags[0];
    assert_eq!(d["code"], "WeakeningViolation");
    assert_eq!(d["file"], path(&f));
    for k in ["message", "line", "col"] {
        assert!(d.get(k).is_some(), "missing field {k}");
    }
}

#[test]
fn missing_spec_exits_three() {
    let f = scratch("spec", "u.elv", "def main : Unit@P = unit@P\n");
    let o = run(&["check", "--modes", "/nonexistent/spec.json", path(&f)]);
    assert_eq!(code(&o), 3);
    let o = elevator(&["check", path(&f)])
        .env("ELEVATOR_MODES", "/nonexistent/spec.json")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    let o = run(&["check", "/nonexistent/file.elv"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn spec_flag_overrides_pragma_and_environment() {
    let f = scratch(
        "prec",
        "g.elv",
        "#modes \"missing.json\"\ndef main : Unit@GF = unit@GF\n",
    );
    let cpgf = corpus().join("cpgf.json");
    assert_eq!(code(&run(&["check", path(&f)])), 3);
    let o = elevator(&["check", "--modes", path(&cpgf), path(&f)])
        .env("ELEVATOR_MODES", "/nonexistent/spec.json")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let g = scratch("prec", "h.elv", "def main : Unit@GF = unit@GF\n");
    let o = elevator(&["check", path(&g)])
        .env("ELEVATOR_MODES", path(&cpgf))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // Without a spec the default C >= P has no GF.
    assert_ne!(code(&run(&["check", path(&g)])), 0);
}

#[test]
fn parse_and_elaboration_errors_exit_two() {
    let f = scratch("parse", "bad.elv", "def main : Unit@P = (\n");
    let o = run(&["check", path(&f)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ParseError"));
    let g = scratch("parse", "ok.elv", "def main : Unit@P = unit@P\n");
    assert_eq!(code(&run(&["run", "--entry", "nope", path(&g)])), 2);
}

/// `store (susp (a, xs . head [a] (tail [a] (tail [a] xs))))`, unfolded by hand.
fn nth_two() -> Term {
    let (c, p) = (Mode::new("C"), Mode::new("P"));
    let a = Type::var("a", &p);
    let mut list = Term::var("xs");
    for _ in 0..2 {
        list = Term::app(Term::tapp(Term::Def(name("tail")), a.clone()), list);
    }
    let body = Term::app(Term::tapp(Term::Def(name("head")), a), list);
    Term::store(&c, &p, Term::susp(&c, &p, &["a", "xs"], body))
}

#[test]
fn run_prints_the_generated_template() {
    let ty = "Down<C,P> Up<C,P>[a : Type@P, xs : List{P} a |- a]";
    for file in ["nth.elv", "nth_staged.elv"] {
        let f = scratch(
            "nth",
            file,
            &with_main(file, &format!("def main : {ty} = nth (Succ (Succ Zero))")),
        );
        let o = run(&["run", path(&f)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), print_term(&nth_two()));
    }
}

#[test]
fn unit_entry_takes_no_steps() {
    let f = scratch("unit", "u.elv", "def main : Unit@P = unit@P\n");
    let o = run(&["run", path(&f)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "unit@P");
    let o = run(&["run", "--format", "json", path(&f)]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["steps"], 0);
    assert_eq!(v["outcome"], "value");
    assert_eq!(v["term"], "unit@P");
}

#[test]
fn divergence_exhausts_fuel() {
    let src = "def loop : Unit@P -> Unit@P = \\x. loop x\ndef main : Unit@P = loop unit@P\n";
    let f = scratch("loop", "loop.elv", src);
    let o = run(&["run", "--fuel", "10", path(&f)]);
    assert_eq!(code(&o), 4);
    let o = run(&["trace", "--fuel", "10", path(&f)]);
    assert_eq!(code(&o), 4);
    assert_eq!(stdout(&o).lines().count(), 10);
    assert_ne!(code(&run(&["run", "--fuel", "0", path(&f)])), 0);
}

#[test]
fn trace_tags_each_step_with_its_rule() {
    let f = scratch(
        "trace",
        "t.elv",
        "def main : Unit@P = (\\x. x : Unit@P -> Unit@P) unit@P\n",
    );
    let o = run(&["trace", "--format", "json", path(&f)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["steps"], 1);
    assert_eq!(v["trace"][0]["rule"], "beta");
    assert_eq!(v["trace"][0]["term"], "unit@P");
}

#[test]
fn props_are_reproducible() {
    let a = run(&["props", "--seed", "11", "--count", "40"]);
    let b = run(&["props", "--seed", "11", "--count", "40"]);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    let cpgf = corpus().join("cpgf.json");
    let j = run(&[
        "props",
        "--format",
        "json",
        "--modes",
        path(&cpgf),
        "--seed",
        "2",
        "--count",
        "30",
    ]);
    assert_eq!(code(&j), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&j).trim()).unwrap();
    assert!(v["cases"].as_u64().unwrap() > 0);
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn props_with_no_cases() {
    let o = run(&["props", "--count", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0 cases"));
}

fn repl(input: &str) -> Output {
    let mut child = elevator(&["repl"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn repl_types_steps_and_defines() {
    let input = "\
:t unit@P
:step (\\x. x : Unit@P -> Unit@P) unit@P
def convertNat : Nat{P} -> Down<C,P> Nat{C} =
  \\n. match n with
  | Zero => store Zero{C}
  | Succ m => load k = convertNat m in store (Succ{C} k)

:t convertNat
:t nope
:q
:t unit@P
";
    let o = repl(input);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "Unit@P");
    assert_eq!(lines[1], "--> [beta] unit@P");
    assert_eq!(lines[2], "convertNat : Nat{P} -> Down<C,P> Nat{C}");
    assert_eq!(lines[3], "Nat{P} -> Down<C,P> Nat{C}");
    assert!(lines[4].starts_with("error["), "{}", lines[4]);
    assert_eq!(lines.len(), 5, "input after :q was read");
}

#[test]
fn repl_rejected_definitions_leave_state_unchanged() {
    let o = repl("def f : Unit@P = g\n:t f\ndef g : Unit@P = unit@P\n:t g\n");
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("error["));
    assert!(lines[1].starts_with("error["));
    assert_eq!(lines[2], "g : Unit@P");
    assert_eq!(lines[3], "Unit@P");
}
