use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use elevator::eval::{EvalOutcome, Evaluator};
use elevator::frontend::ast::SurfaceModule;
use elevator::frontend::{parse_module, print_term, print_type, ParseError, Span};
use elevator::mode_spec::{ModeSpec, SpecError};
use elevator::props::{Harness, Report};
use elevator::typing::{elaborate, Signature, TypingError};
use serde_json::json;

mod repl;

const OK: u8 = 0;
const TYPE_ERROR: u8 = 1;
const ELAB_ERROR: u8 = 2;
const CONFIG_ERROR: u8 = 3;
const FUEL_EXHAUSTED: u8 = 4;
const PROPERTY_FAILURE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "elevator",
    version,
    about = "Check, run and trace elevator programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Mode specification (JSON); overrides `#modes` pragmas and ELEVATOR_MODES.
    #[arg(long, global = true)]
    modes: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check every definition in each file.
    Check { files: Vec<PathBuf> },
    /// Evaluate a definition to a value.
    Run(RunArgs),
    /// Evaluate a definition, printing every step with its rule.
    Trace(RunArgs),
    /// Interactive loop: definitions, `:t e`, `:step e`, `:q`.
    Repl,
    /// Run the property harness on generated terms.
    Props {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        count: usize,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, default_value = "main")]
    entry: String,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// A reportable error with its exit status.
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    pub file: Option<String>,
    pub span: Option<Span>,
    pub status: u8,
}

impl Diagnostic {
    fn config(code: &str, message: impl Into<String>, file: Option<&Path>) -> Diagnostic {
        Diagnostic {
            code: code.into(),
            message: message.into(),
            file: file.map(|f| f.display().to_string()),
            span: None,
            status: CONFIG_ERROR,
        }
    }

    pub fn parse(e: &ParseError, file: Option<&Path>) -> Diagnostic {
        Diagnostic {
            code: "ParseError".into(),
            message: e.to_string(),
            file: file.map(|f| f.display().to_string()),
            span: Some(e.span),
            status: ELAB_ERROR,
        }
    }

    pub fn typing(e: &TypingError, file: Option<&Path>) -> Diagnostic {
        let message = match &e.def {
            Some(d) => format!("in `{d}`: {}", e.message),
            None => e.message.clone(),
        };
        Diagnostic {
            code: e.code.to_string(),
            message,
            file: file.map(|f| f.display().to_string()),
            span: e.span,
            status: if e.code.is_elaboration() {
                ELAB_ERROR
            } else {
                TYPE_ERROR
            },
        }
    }

    fn spec(e: &SpecError, file: Option<&Path>) -> Diagnostic {
        let code = match e {
            SpecError::Io { .. } => "IoError",
            _ => "SpecError",
        };
        Diagnostic::config(code, e.to_string(), file)
    }

    pub fn emit(&self, format: Format) {
        match format {
            Format::Json => {
                let v = json!({
                    "code": self.code,
                    "message": self.message,
                    "file": self.file,
                    "line": self.span.map(|s| s.line),
                    "col": self.span.map(|s| s.col),
                });
                println!("{v}");
            }
            Format::Text => {
                let mut at = self.file.clone().unwrap_or_default();
                if let Some(s) = self.span {
                    if !at.is_empty() {
                        at.push(':');
                    }
                    at.push_str(&s.to_string());
                }
                if at.is_empty() {
                    eprintln!("error[{}]: {}", self.code, self.message);
                } else {
                    eprintln!("{at}: error[{}]: {}", self.code, self.message);
                }
            }
        }
    }
}

type Res<T> = Result<T, Diagnostic>;

/// Resolves the mode spec: the command line wins, then the file's
/// pragma (relative to the file), then ELEVATOR_MODES, then C >= P.
fn resolve_spec(flag: Option<&Path>, pragma: Option<(&str, &Path)>) -> Res<ModeSpec> {
    let path = match (flag, pragma) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some((p, file))) => Some(file.parent().unwrap_or(Path::new(".")).join(p)),
        (None, None) => std::env::var_os("ELEVATOR_MODES").map(PathBuf::from),
    };
    match path {
        Some(p) => ModeSpec::load(&p).map_err(|e| Diagnostic::spec(&e, Some(&p))),
        None => Ok(ModeSpec::default_spec()),
    }
}

fn load_file(path: &Path, modes: Option<&Path>) -> Res<(SurfaceModule, ModeSpec, Signature)> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Diagnostic::config("IoError", format!("cannot read file: {e}"), Some(path)))?;
    let module = parse_module(&src).map_err(|e| Diagnostic::parse(&e, Some(path)))?;
    let spec = resolve_spec(modes, module.pragma().map(|p| (p, path)))?;
    let sig = elaborate(&module, &spec).map_err(|e| Diagnostic::typing(&e, Some(path)))?;
    Ok((module, spec, sig))
}

fn check(files: &[PathBuf], cli: &Cli) -> u8 {
    if files.is_empty() {
        Diagnostic::config("ConfigError", "no input files", None).emit(cli.format);
        return CONFIG_ERROR;
    }
    let mut status = OK;
    for f in files {
        match load_file(f, cli.modes.as_deref()) {
            Ok((_, _, sig)) => {
                for d in sig.defs() {
                    match cli.format {
                        Format::Text => println!("OK {} : {}", d.name, print_type(&d.ty)),
                        Format::Json => println!(
                            "{}",
                            json!({"file": f.display().to_string(), "def": &*d.name, "type": print_type(&d.ty), "status": "ok"})
                        ),
                    }
                }
            }
            Err(d) => {
                d.emit(cli.format);
                status = status.max(d.status);
            }
        }
    }
    status
}

fn run(args: &RunArgs, trace: bool, cli: &Cli) -> u8 {
    let (spec, sig) = match load_file(&args.file, cli.modes.as_deref()) {
        Ok((_, spec, sig)) => (spec, sig),
        Err(d) => {
            d.emit(cli.format);
            return d.status;
        }
    };
    let Some((_, def)) = sig.def(&args.entry) else {
        let d = Diagnostic {
            code: "UnboundName".into(),
            message: format!("no definition named `{}`", args.entry),
            file: Some(args.file.display().to_string()),
            span: None,
            status: ELAB_ERROR,
        };
        d.emit(cli.format);
        return d.status;
    };
    let fuel = usize::try_from(args.fuel).unwrap_or(usize::MAX);
    let ev = Evaluator::new(&spec, &sig).evaluate(&def.body, fuel, trace);
    let (outcome, status) = match &ev.outcome {
        EvalOutcome::Value(_) => ("value", OK),
        EvalOutcome::FuelExhausted(_) => ("fuel-exhausted", FUEL_EXHAUSTED),
        EvalOutcome::Stuck(_) => ("stuck", TYPE_ERROR),
    };
    let shown = print_term(ev.outcome.term());
    match cli.format {
        Format::Text => {
            for s in &ev.trace {
                println!("{:>5}  {:<12} {}", s.step, s.rule, s.term);
            }
            match status {
                OK => println!("{shown}"),
                _ => eprintln!("{outcome} after {} steps: {shown}", ev.steps),
            }
            if trace || status != OK {
                eprintln!("{} steps", ev.steps);
            }
        }
        Format::Json => {
            let mut v = json!({"outcome": outcome, "steps": ev.steps, "term": shown});
            if trace {
                v["trace"] = serde_json::to_value(&ev.trace).unwrap_or_default();
            }
            println!("{v}");
        }
    }
    status
}

fn props(seed: u64, count: usize, cli: &Cli) -> u8 {
    let spec = match resolve_spec(cli.modes.as_deref(), None) {
        Ok(s) => s,
        Err(d) => {
            d.emit(cli.format);
            return d.status;
        }
    };
    let harness = match Harness::new(&spec) {
        Ok(h) => h,
        Err(e) => {
            let d = Diagnostic::typing(&e, None);
            d.emit(cli.format);
            return d.status;
        }
    };
    let mut report = Report::default();
    if count > 0 {
        report.merge(harness.run(seed, count));
        report.merge(harness.mode_safety(seed, count));
        report.merge(harness.construction_order(seed, count));
    }
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string(&report).unwrap_or_default()),
        Format::Text => {
            println!(
                "seed {seed}: {} cases, {} discarded",
                report.cases, report.discarded
            );
            for (p, n) in &report.checks {
                println!("  {p:<22} {n} checks");
            }
            for f in &report.failures {
                println!("FAIL {} (case {}): {}", f.property, f.case, f.detail);
                println!("  counterexample: {}", f.term);
            }
            println!("{} failures", report.failures.len());
        }
    }
    if report.passed() {
        OK
    } else {
        PROPERTY_FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match &cli.command {
        Command::Check { files } => check(files, &cli),
        Command::Run(a) => run(a, false, &cli),
        Command::Trace(a) => run(a, true, &cli),
        Command::Repl => match resolve_spec(cli.modes.as_deref(), None) {
            Ok(spec) => repl::run(spec, cli.format),
            Err(d) => {
                d.emit(cli.format);
                d.status
            }
        },
        Command::Props { seed, count } => props(*seed, *count, &cli),
    };
    ExitCode::from(status)
}
