use std::io::{self, BufRead, IsTerminal, Write};

use elevator::eval::{EvalOutcome, Evaluator, Step};
use elevator::frontend::{parse_expr, parse_module, print_term, print_type};
use elevator::mode_spec::ModeSpec;
use elevator::syntax::{Term, Type};
use elevator::typing::{elaborate, synth_surface, Signature};

use crate::{Diagnostic, Format};

const FUEL: usize = 100_000;

struct Session {
    spec: ModeSpec,
    /// Every definition accepted so far, re-elaborated as one module.
    source: String,
    sig: Signature,
    format: Format,
}

impl Session {
    fn define(&mut self, text: &str) -> Result<Vec<String>, Diagnostic> {
        let candidate = format!("{}{text}\n", self.source);
        let full = parse_module(&candidate).map_err(|e| Diagnostic::parse(&e, None))?;
        let sig = elaborate(&full, &self.spec).map_err(|e| Diagnostic::typing(&e, None))?;
        let before = self.sig.defs().len();
        self.sig = sig;
        self.source = candidate;
        Ok(self.sig.defs()[before..]
            .iter()
            .map(|d| format!("{} : {}", d.name, print_type(&d.ty)))
            .collect())
    }

    fn synth(&self, text: &str) -> Result<(Term, Type), Diagnostic> {
        let e = parse_expr(text).map_err(|e| Diagnostic::parse(&e, None))?;
        synth_surface(&self.spec, &self.sig, &e).map_err(|e| Diagnostic::typing(&e, None))
    }

    fn command(&mut self, line: &str) -> Result<Vec<String>, Diagnostic> {
        if let Some(rest) = line.strip_prefix(":t ") {
            let (_, a) = self.synth(rest)?;
            return Ok(vec![print_type(&a)]);
        }
        if let Some(rest) = line.strip_prefix(":step ") {
            let (e, _) = self.synth(rest)?;
            let ev = Evaluator::new(&self.spec, &self.sig);
            return Ok(vec![match ev.step(&e) {
                Step::Stepped(t, rule) => format!("--> [{rule}] {}", print_term(&t)),
                Step::NoStep => format!("{} (no step)", print_term(&e)),
            }]);
        }
        if line.starts_with("def ") || line.starts_with("data ") {
            return self.define(line);
        }
        let (e, a) = self.synth(line)?;
        let out = Evaluator::new(&self.spec, &self.sig).evaluate(&e, FUEL, false);
        Ok(vec![match out.outcome {
            EvalOutcome::Value(v) => format!("{} : {}", print_term(&v), print_type(&a)),
            EvalOutcome::FuelExhausted(t) => format!("fuel exhausted at {}", print_term(&t)),
            EvalOutcome::Stuck(t) => format!("stuck at {}", print_term(&t)),
        }])
    }
}

/// Reads commands from stdin until `:q` or end of input. Definitions may
/// span several lines, in which case a blank line ends them.
pub fn run(spec: ModeSpec, format: Format) -> u8 {
    let sig = match elaborate(&Default::default(), &spec) {
        Ok(s) => s,
        Err(e) => {
            let d = Diagnostic::typing(&e, None);
            d.emit(format);
            return d.status;
        }
    };
    let mut session = Session {
        spec,
        source: String::new(),
        sig,
        format,
    };
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut lines = stdin.lock().lines();
    let mut pending = String::new();
    loop {
        if interactive {
            print!("{}", if pending.is_empty() { "> " } else { "| " });
            let _ = io::stdout().flush();
        }
        let Some(Ok(line)) = lines.next() else {
            if !pending.is_empty() {
                session.report(&pending);
            }
            break;
        };
        let line = line.trim_end();
        if pending.is_empty() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("--") {
                continue;
            }
            if trimmed == ":q" {
                break;
            }
            if (trimmed.starts_with("def ") || trimmed.starts_with("data "))
                && parse_module(trimmed).is_err()
            {
                pending = trimmed.to_string();
                continue;
            }
            session.report(trimmed);
        } else if line.trim().is_empty() {
            let text = std::mem::take(&mut pending);
            session.report(&text);
        } else {
            pending.push('\n');
            pending.push_str(line);
        }
    }
    0
}

impl Session {
    fn report(&mut self, text: &str) {
        match self.command(text) {
            Ok(out) => {
                for l in out {
                    match self.format {
                        Format::Text => println!("{l}"),
                        Format::Json => println!("{}", serde_json::json!({ "result": l })),
                    }
                }
            }
            Err(d) => match self.format {
                Format::Text => println!("error[{}]: {}", d.code, d.message),
                Format::Json => d.emit(Format::Json),
            },
        }
    }
}
