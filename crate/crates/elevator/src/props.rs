//! Property harness: generated well-typed terms checked against the
//! metatheory (preservation, progress, substructurality, usage merging,
//! substitution, mode safety and construction-order invariance).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::equiv::equiv_term;
use crate::eval::{EvalOutcome, Evaluator, Step};
use crate::frontend::ast::SurfaceModule;
use crate::gen::Generator;
use crate::mode_spec::{Mode, ModeSpec};
use crate::subst::{apply_term, merge_usage, subst_type, Usage, UsageMask};
use crate::syntax::{
    alpha_eq, count_occurrences, free_names_term, name, Ctx, Decl, Entry, Name, Subst, Term, Type,
};
use crate::typing::{
    check_subst, check_term, elaborate, synth_term, CheckState, Signature, TypingError,
};

pub const PRESERVATION: &str = "preservation";
pub const TEMPLATE_PRESERVATION: &str = "template-preservation";
pub const PROGRESS: &str = "progress";
pub const SUBSTRUCTURALITY: &str = "substructurality";
pub const USAGE_MERGE: &str = "usage-merge";
pub const SUBSTITUTION: &str = "substitution-lemma";
pub const EQUIVALENCE: &str = "equivalence";
pub const MODE_SAFETY: &str = "mode-safety";
pub const CONSTRUCTION_ORDER: &str = "construction-order";

const DEPTH: usize = 4;
const FUEL: usize = 400;
const TEMPLATE_FUEL: usize = 60;
/// Attempts allowed per requested case before giving up.
const PATIENCE: usize = 400;

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub property: &'static str,
    pub case: usize,
    pub term: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    /// Generated subjects that passed the checker and were tested.
    pub cases: usize,
    /// Candidates rejected by the checker or by a precondition.
    pub discarded: usize,
    /// Number of individual checks per property.
    pub checks: BTreeMap<&'static str, usize>,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn merge(&mut self, other: Report) {
        self.cases += other.cases;
        self.discarded += other.discarded;
        for (k, v) in other.checks {
            *self.checks.entry(k).or_default() += v;
        }
        self.failures.extend(other.failures);
    }

    fn tick(&mut self, p: &'static str) {
        *self.checks.entry(p).or_default() += 1;
    }
}

/// The specs the harness is exercised on: one intuitionistic mode, a
/// linear mode under an intuitionistic one, and the three-mode
/// code-generation spec.
pub fn standard_specs() -> Vec<(&'static str, ModeSpec)> {
    let single = r#"{"modes":["U"],"order":[],"signatures":{"U":["C","W"]}}"#;
    let linear = r#"{"modes":["U","L"],"order":[["U","L"]],"signatures":{"U":["C","W"],"L":[]}}"#;
    let cpgf = r#"{"modes":["C","P","GF"],"order":[["C","P"],["P","GF"]],
        "signatures":{"C":["C","W"],"P":["C","W"],"GF":[]}}"#;
    [("single", single), ("linear", linear), ("cpgf", cpgf)]
        .into_iter()
        .map(|(n, s)| (n, ModeSpec::from_json(s).expect("built-in spec is valid")))
        .collect()
}

fn case_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d)
        .wrapping_add(i as u64)
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub struct Harness {
    spec: ModeSpec,
    sig: Signature,
}

impl Harness {
    /// A harness over `spec` with only the prelude data types.
    pub fn new(spec: &ModeSpec) -> Result<Harness, TypingError> {
        let sig = elaborate(&SurfaceModule { items: Vec::new() }, spec)?;
        Ok(Harness {
            spec: spec.clone(),
            sig,
        })
    }

    pub fn spec(&self) -> &ModeSpec {
        &self.spec
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(&self.spec, &self.sig)
    }

    fn recheck(&self, ctx: &Ctx, e: &Term, a: &Type) -> Result<Term, TypingError> {
        let st = CheckState::new(&self.spec, &self.sig, ctx.clone(), a.mode().clone());
        let (core, mask) = check_term(&st, e, a)?;
        let decls: Vec<&Decl> = ctx.iter().filter(|d| d.is_term()).collect();
        for (d, u) in decls.iter().zip(&mask.0) {
            if *u == Usage::Available && !self.spec.can_weaken(d.mode()) {
                return Err(TypingError::new(
                    crate::typing::ErrorCode::WeakeningViolation,
                    format!("`{}` is never used", d.name()),
                ));
            }
        }
        Ok(core)
    }

    /// A generated closed term that passes the checker, in elaborated form.
    pub fn closed_case(&self, seed: u64, report: &mut Report) -> Option<(Term, Type)> {
        for attempt in 0..PATIENCE {
            let mut g = Generator::new(&self.spec, case_seed(seed, attempt));
            if let Some((e, ty)) = g.closed_term(DEPTH) {
                if let Ok(core) = self.recheck(&Ctx::empty(), &e, &ty) {
                    return Some((core, ty));
                }
            }
            report.discarded += 1;
        }
        None
    }

    /// Runs the metatheory properties on `count` generated terms.
    pub fn run(&self, seed: u64, count: usize) -> Report {
        let mut report = Report::default();
        for i in 0..count {
            let s = case_seed(seed, i);
            if let Some((e, ty)) = self.closed_case(s, &mut report) {
                report.cases += 1;
                self.closed_properties(i, &e, &ty, &mut report);
            }
            self.open_properties(i, s, &mut report);
        }
        report
    }

    fn fail(&self, r: &mut Report, p: &'static str, case: usize, e: &Term, detail: String) {
        r.failures.push(Failure {
            property: p,
            case,
            term: self.minimize(e, p).to_string(),
            detail,
        });
    }

    fn closed_properties(&self, case: usize, e: &Term, ty: &Type, r: &mut Report) {
        let ev = self.evaluator();
        let empty = Ctx::empty();
        self.substructural(case, &empty, e, r);
        self.templates(case, &empty, e, ty, r);
        for n in self.spec.modes() {
            r.tick(EQUIVALENCE);
            if !equiv_term(&self.spec, n, ty.mode(), e, e) {
                self.fail(r, EQUIVALENCE, case, e, format!("not reflexive over {n}"));
            }
        }
        let mut cur = e.clone();
        for _ in 0..FUEL {
            let st = ev.step(&cur);
            r.tick(PROGRESS);
            if st.is_step() == ev.is_weak_normal(&cur) {
                let detail = format!(
                    "step {} but the classifier says weak normal = {}",
                    if st.is_step() { "fires" } else { "is stuck" },
                    ev.is_weak_normal(&cur)
                );
                self.fail(r, PROGRESS, case, &cur, detail);
                return;
            }
            let Step::Stepped(next, rule) = st else {
                return;
            };
            r.tick(PRESERVATION);
            if let Err(err) = self.recheck(&empty, &next, ty) {
                self.fail(r, PRESERVATION, case, &cur, format!("after {rule}: {err}"));
                return;
            }
            cur = next;
        }
    }

    /// Template reduction at every mode: agreement with the classifier
    /// and preservation of the type.
    fn templates(&self, case: usize, ctx: &Ctx, e: &Term, ty: &Type, r: &mut Report) {
        let ev = self.evaluator();
        for m in self.spec.modes() {
            let mut cur = e.clone();
            for _ in 0..TEMPLATE_FUEL {
                let st = ev.template_step(&cur, m);
                r.tick(PROGRESS);
                if st.is_step() == ev.is_normal_template(&cur, m) {
                    let detail = format!(
                        "template step at {m} {} but the classifier disagrees",
                        if st.is_step() { "fires" } else { "is stuck" }
                    );
                    self.fail(r, PROGRESS, case, &cur, detail);
                    return;
                }
                let Step::Stepped(next, rule) = st else {
                    break;
                };
                r.tick(TEMPLATE_PRESERVATION);
                if let Err(err) = self.recheck(ctx, &next, ty) {
                    let detail = format!("after {rule} at {m}: {err}");
                    self.fail(r, TEMPLATE_PRESERVATION, case, &cur, detail);
                    return;
                }
                cur = next;
            }
        }
    }

    fn substructural(&self, case: usize, ctx: &Ctx, e: &Term, r: &mut Report) {
        let mut binders = Vec::new();
        for d in ctx.iter().filter(|d| d.is_term()) {
            binders.push((d.name().clone(), d.mode().clone(), e.clone()));
        }
        collect_binders(e, &mut binders);
        for (x, m, body) in binders {
            r.tick(SUBSTRUCTURALITY);
            let n = count_occurrences(&body, &x);
            if n > 1 && !self.spec.can_contract(&m) {
                let detail = format!("`{x}` at {m} occurs {n} times");
                self.fail(r, SUBSTRUCTURALITY, case, e, detail);
            } else if n == 0 && !self.spec.can_weaken(&m) {
                let detail = format!("`{x}` at {m} never occurs");
                self.fail(r, SUBSTRUCTURALITY, case, e, detail);
            }
        }
    }

    fn open_properties(&self, case: usize, seed: u64, r: &mut Report) {
        let mut g = Generator::new(&self.spec, seed ^ 0x5bd1_e995);
        let Some((ctx, e, ty)) = g.open_term(DEPTH - 1) else {
            r.discarded += 1;
            return;
        };
        self.usage_merge(case, &ctx, g.rng(), r);
        let Ok(core) = self.recheck(&ctx, &e, &ty) else {
            r.discarded += 1;
            return;
        };
        self.substructural(case, &ctx, &core, r);
        self.templates(case, &ctx, &core, &ty, r);
        let Some(sigma) = g.closed_subst(&ctx, DEPTH - 2) else {
            r.discarded += 1;
            return;
        };
        let st = CheckState::new(&self.spec, &self.sig, Ctx::empty(), ty.mode().clone());
        if check_subst(&st, &sigma, &ctx).is_err() {
            r.discarded += 1;
            return;
        }
        r.tick(SUBSTITUTION);
        let result = apply_term(&sigma, &core)
            .map_err(|e| e.to_string())
            .and_then(|t| {
                let a = subst_type(&sigma, &sigma.measure(), &ty).map_err(|e| e.to_string())?;
                self.recheck(&Ctx::empty(), &t, &a)
                    .map_err(|e| e.to_string())
            });
        if let Err(err) = result {
            self.fail(
                r,
                SUBSTITUTION,
                case,
                &core,
                format!("under [{}]: {err}", show_subst(&sigma)),
            );
        }
    }

    fn usage_merge(&self, case: usize, ctx: &Ctx, rng: &mut impl Rng, r: &mut Report) {
        let n = ctx.iter().filter(|d| d.is_term()).count();
        let mut mask = || {
            UsageMask(
                (0..n)
                    .map(|_| {
                        if rng.gen_bool(0.4) {
                            Usage::Consumed
                        } else {
                            Usage::Available
                        }
                    })
                    .collect(),
            )
        };
        let (a, b, c) = (mask(), mask(), mask());
        let m = |x: &UsageMask, y: &UsageMask| merge_usage(&self.spec, ctx, x, y).ok();
        r.tick(USAGE_MERGE);
        if m(&a, &b) != m(&b, &a) {
            let detail = format!("merge is not commutative on {a:?} and {b:?}");
            merge_failure(r, case, ctx, detail);
        }
        r.tick(USAGE_MERGE);
        let left = m(&a, &b).and_then(|ab| m(&ab, &c));
        let right = m(&b, &c).and_then(|bc| m(&a, &bc));
        if left != right {
            let detail = format!("merge is not associative on {a:?}, {b:?}, {c:?}");
            merge_failure(r, case, ctx, detail);
        }
        r.tick(USAGE_MERGE);
        let none = UsageMask::available(n);
        if m(&a, &none).as_ref() != Some(&a) {
            let detail = format!("the empty mask is not a unit for {a:?}");
            merge_failure(r, case, ctx, detail);
        }
    }

    /// Mode safety: pairs of terms that differ only where observer `n`
    /// cannot see evaluate to values that are still equivalent over `n`.
    /// Only specs with at least two comparable modes have such pairs.
    pub fn mode_safety(&self, seed: u64, count: usize) -> Report {
        let mut report = Report::default();
        let observers: Vec<Mode> = self
            .spec
            .modes()
            .iter()
            .filter(|n| self.spec.modes().iter().any(|m| !self.spec.ge(m, n)))
            .cloned()
            .collect();
        if observers.is_empty() {
            return report;
        }
        let ev = self.evaluator();
        let mut attempt = 0;
        while report.cases < count && attempt < count * PATIENCE {
            attempt += 1;
            let s = case_seed(seed, attempt);
            let mut pick = Generator::new(&self.spec, s);
            let n = observers.choose(pick.rng()).unwrap().clone();
            let ks = pick.modes_above(&n, false);
            let k = ks.choose(pick.rng()).unwrap().clone();
            let build = |variant| {
                Generator::new(&self.spec, s)
                    .with_observer(&n, variant)
                    .closed_term_at(&k, DEPTH)
            };
            let (Some((e1, t1)), Some((e2, t2))) = (build(0), build(1)) else {
                report.discarded += 1;
                continue;
            };
            let checked = (
                self.recheck(&Ctx::empty(), &e1, &t1),
                self.recheck(&Ctx::empty(), &e2, &t2),
            );
            let (Ok(e1), Ok(e2)) = checked else {
                report.discarded += 1;
                continue;
            };
            if !alpha_eq(&t1, &t2)
                || alpha_eq(&e1, &e2)
                || !equiv_term(&self.spec, &n, &k, &e1, &e2)
            {
                report.discarded += 1;
                continue;
            }
            report.cases += 1;
            let case = report.cases - 1;
            self.equivalence_laws(case, &n, &k, &e1, &e2, &mut report);
            let (o1, o2) = (ev.evaluate(&e1, FUEL, false), ev.evaluate(&e2, FUEL, false));
            report.tick(MODE_SAFETY);
            match (&o1.outcome, &o2.outcome) {
                (EvalOutcome::Value(v1), EvalOutcome::Value(v2)) => {
                    if !equiv_term(&self.spec, &n, &k, v1, v2) {
                        let detail = format!("values {v1} and {v2} differ over {n}");
                        self.fail(&mut report, MODE_SAFETY, case, &e1, detail);
                    }
                }
                _ => {
                    let detail = format!(
                        "evaluation did not reach values: {} / {}",
                        o1.outcome.term(),
                        o2.outcome.term()
                    );
                    self.fail(&mut report, MODE_SAFETY, case, &e1, detail);
                }
            }
        }
        report
    }

    fn equivalence_laws(
        &self,
        case: usize,
        n: &Mode,
        k: &Mode,
        e1: &Term,
        e2: &Term,
        r: &mut Report,
    ) {
        r.tick(EQUIVALENCE);
        if !equiv_term(&self.spec, n, k, e2, e1) {
            self.fail(r, EQUIVALENCE, case, e1, format!("not symmetric over {n}"));
        }
        // Observing from higher up hides more, so equivalence persists.
        for n2 in self.spec.modes().iter().filter(|m| self.spec.ge(m, n)) {
            r.tick(EQUIVALENCE);
            if !equiv_term(&self.spec, n2, k, e1, e2) {
                let detail = format!("equivalent over {n} but not over {n2}");
                self.fail(r, EQUIVALENCE, case, e1, detail);
            }
        }
    }

    /// Splicing three templates in either association gives the same
    /// template: `T2` into `T1` first, or `T3` into `T2` first.
    pub fn construction_order(&self, seed: u64, count: usize) -> Report {
        let mut report = Report::default();
        let pairs: Vec<(Mode, Mode)> = self
            .spec
            .modes()
            .iter()
            .flat_map(|h| {
                self.spec
                    .modes()
                    .iter()
                    .map(move |l| (h.clone(), l.clone()))
            })
            .filter(|(h, l)| self.spec.gt(h, l))
            .collect();
        if pairs.is_empty() {
            return report;
        }
        let ev = self.evaluator();
        let mut attempt = 0;
        while report.cases < count && attempt < count * PATIENCE {
            attempt += 1;
            let mut g = Generator::new(&self.spec, case_seed(seed, attempt));
            let (hi, lo) = pairs.choose(g.rng()).unwrap().clone();
            let Some(progs) = self.order_programs(&mut g, &hi, &lo) else {
                report.discarded += 1;
                continue;
            };
            let (p1, p2, ty) = progs;
            let (Ok(p1), Ok(p2)) = (
                self.recheck(&Ctx::empty(), &p1, &ty),
                self.recheck(&Ctx::empty(), &p2, &ty),
            ) else {
                report.discarded += 1;
                continue;
            };
            report.cases += 1;
            report.tick(CONSTRUCTION_ORDER);
            let (o1, o2) = (ev.evaluate(&p1, FUEL, false), ev.evaluate(&p2, FUEL, false));
            match (&o1.outcome, &o2.outcome) {
                (EvalOutcome::Value(v1), EvalOutcome::Value(v2)) if alpha_eq(v1, v2) => {}
                _ => {
                    let detail = format!(
                        "orders disagree: {} vs {}",
                        o1.outcome.term(),
                        o2.outcome.term()
                    );
                    let case = report.cases - 1;
                    self.fail(&mut report, CONSTRUCTION_ORDER, case, &p1, detail);
                }
            }
        }
        report
    }

    /// Two programs composing generated templates `T1 : [P1, x:A |- R]`,
    /// `T2 : [P2, y:B |- A]` and `T3 : [P3 |- B]` in the two orders.
    #[allow(clippy::type_complexity)]
    fn order_programs(
        &self,
        g: &mut Generator<'_>,
        hi: &Mode,
        lo: &Mode,
    ) -> Option<(Term, Term, Type)> {
        let d = DEPTH - 1;
        let (a, b, res) = (g.gen_type(lo, 1), g.gen_type(lo, 1), g.gen_type(lo, 1));
        let (p1, p2, p3) = (
            g.gen_ctx(hi, lo, 0),
            g.gen_ctx(hi, lo, 0),
            g.gen_ctx(hi, lo, 0),
        );
        let x = tm_decl("hole_x", &a);
        let y = tm_decl("hole_y", &b);
        let c1 = extend(&p1, std::slice::from_ref(&x));
        let c2 = extend(&p2, std::slice::from_ref(&y));
        let b1 = g.term_in(&c1, &res, d)?;
        let b2 = g.term_in(&c2, &a, d)?;
        let b3 = g.term_in(&p3, &b, d)?;
        let t1 = susp(hi, lo, &c1, b1);
        let t2 = susp(hi, lo, &c2, b2);
        let t3 = susp(hi, lo, &p3, b3);
        let up = |c: &Ctx, t: &Type| Type::ctx_up(hi, lo, c.clone(), t.clone());

        // T2 into T1, then T3 into the result.
        let mid_ctx = extend(&extend(&p1, &p2.0), std::slice::from_ref(&y));
        let mid = {
            let (ren, names) = rename_ctx(&mid_ctx, "m");
            let (q1, rest) = names.split_at(p1.len());
            let (q2, qy) = rest.split_at(p2.len());
            let inner = force(hi, lo, t2.clone(), &c2, &[q2, qy].concat());
            let body = force_with(hi, lo, t1.clone(), &c1, q1, inner);
            susp(hi, lo, &ren, body)
        };
        let all = extend(&extend(&p1, &p2.0), &p3.0);
        let order1 = {
            let u = name("u");
            let (ren, names) = rename_ctx(&all, "o");
            let (q12, q3) = names.split_at(p1.len() + p2.len());
            let fill = force(hi, lo, t3.clone(), &p3, q3);
            let body = force_with(hi, lo, Term::Var(u.clone()), &mid_ctx, q12, fill);
            Term::app(
                Term::Lam {
                    var: u,
                    ann: up(&mid_ctx, &res),
                    body: susp(hi, lo, &ren, body).into(),
                },
                mid,
            )
        };

        // T3 into T2, then the result into T1.
        let inner_ctx = extend(&p2, &p3.0);
        let inner = {
            let (ren, names) = rename_ctx(&inner_ctx, "n");
            let (q2, q3) = names.split_at(p2.len());
            let fill = force(hi, lo, t3, &p3, q3);
            let body = force_with(hi, lo, t2, &c2, q2, fill);
            susp(hi, lo, &ren, body)
        };
        let order2 = {
            let w = name("w");
            let (ren, names) = rename_ctx(&all, "o");
            let (q1, q23) = names.split_at(p1.len());
            let fill = force(hi, lo, Term::Var(w.clone()), &inner_ctx, q23);
            let body = force_with(hi, lo, t1, &c1, q1, fill);
            Term::app(
                Term::Lam {
                    var: w,
                    ann: up(&inner_ctx, &a),
                    body: susp(hi, lo, &ren, body).into(),
                },
                inner,
            )
        };
        Some((order1, order2, up(&all, &res)))
    }

    /// Shrinks a failing term to a smallest closed well-typed subterm
    /// that still fails `property`.
    pub fn minimize(&self, e: &Term, property: &'static str) -> Term {
        let mut best = e.clone();
        loop {
            let mut improved = false;
            for c in children(&best) {
                if !free_names_term(c).is_empty() {
                    continue;
                }
                if let Some(ty) = self.type_of_closed(c) {
                    if self.fails(c, &ty, property) {
                        best = c.clone();
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                return best;
            }
        }
    }

    fn type_of_closed(&self, e: &Term) -> Option<Type> {
        self.spec.modes().iter().find_map(|m| {
            let st = CheckState::new(&self.spec, &self.sig, Ctx::empty(), m.clone());
            synth_term(&st, e).ok().map(|(t, _, _)| t)
        })
    }

    fn fails(&self, e: &Term, ty: &Type, property: &'static str) -> bool {
        let mut r = Report::default();
        match property {
            SUBSTRUCTURALITY => self.substructural(0, &Ctx::empty(), e, &mut r),
            TEMPLATE_PRESERVATION => self.templates(0, &Ctx::empty(), e, ty, &mut r),
            PRESERVATION | PROGRESS => self.closed_quiet(e, ty, &mut r),
            _ => return false,
        }
        r.failures.iter().any(|f| f.property == property)
    }

    fn closed_quiet(&self, e: &Term, ty: &Type, r: &mut Report) {
        let ev = self.evaluator();
        let mut cur = e.clone();
        for _ in 0..FUEL {
            let st = ev.step(&cur);
            if st.is_step() == ev.is_weak_normal(&cur) {
                r.failures.push(quiet(PROGRESS));
                return;
            }
            let Step::Stepped(next, _) = st else {
                return;
            };
            if self.recheck(&Ctx::empty(), &next, ty).is_err() {
                r.failures.push(quiet(PRESERVATION));
                return;
            }
            cur = next;
        }
    }
}

fn show_ctx(c: &Ctx) -> String {
    let parts: Vec<String> = c
        .iter()
        .map(|d| match d {
            Decl::Tm { name, ty } => format!("{name} : {ty}"),
            Decl::Ty { name, kind } => format!("{name} : {kind}"),
        })
        .collect();
    parts.join(", ")
}

fn show_subst(s: &Subst) -> String {
    let parts: Vec<String> = s
        .iter()
        .map(|e| match e {
            Entry::Tm { name, term, .. } => format!("{name} := {term}"),
            Entry::Ty { name, ty, .. } => format!("{name} := {ty}"),
        })
        .collect();
    parts.join(", ")
}

fn merge_failure(r: &mut Report, case: usize, ctx: &Ctx, detail: String) {
    r.failures.push(Failure {
        property: USAGE_MERGE,
        case,
        term: show_ctx(ctx),
        detail,
    });
}

fn quiet(property: &'static str) -> Failure {
    Failure {
        property,
        case: 0,
        term: String::new(),
        detail: String::new(),
    }
}

fn tm_decl(x: &str, t: &Type) -> Decl {
    Decl::Tm {
        name: name(x),
        ty: t.clone(),
    }
}

fn extend(c: &Ctx, more: &[Decl]) -> Ctx {
    let mut v = c.0.clone();
    v.extend(more.iter().cloned());
    Ctx(v)
}

/// The context with every binder renamed `{prefix}{i}`.
fn rename_ctx(c: &Ctx, prefix: &str) -> (Ctx, Vec<Name>) {
    let names: Vec<Name> = (0..c.len())
        .map(|i| name(&format!("{prefix}{i}")))
        .collect();
    let decls = c
        .iter()
        .zip(&names)
        .map(|(d, n)| match d {
            Decl::Tm { ty, .. } => Decl::Tm {
                name: n.clone(),
                ty: ty.clone(),
            },
            Decl::Ty { kind, .. } => Decl::Ty {
                name: n.clone(),
                kind: kind.clone(),
            },
        })
        .collect();
    (Ctx(decls), names)
}

fn susp(hi: &Mode, lo: &Mode, c: &Ctx, body: Term) -> Term {
    Term::Susp {
        hi: hi.clone(),
        lo: lo.clone(),
        names: c.iter().map(|d| d.name().clone()).collect(),
        body: body.into(),
        ann: Some(c.clone()),
    }
}

/// `force head @ (args)` against template context `c`.
fn force(hi: &Mode, lo: &Mode, head: Term, c: &Ctx, args: &[Name]) -> Term {
    let sub = c
        .iter()
        .zip(args)
        .map(|(d, a)| Entry::Tm {
            name: d.name().clone(),
            term: Term::Var(a.clone()),
            mode: d.mode().clone(),
        })
        .collect();
    Term::force(hi, lo, head, Subst(sub))
}

/// Like [`force`], with `last` as the entry for the final declaration.
fn force_with(hi: &Mode, lo: &Mode, head: Term, c: &Ctx, args: &[Name], last: Term) -> Term {
    let Term::Force { sub, .. } = force(hi, lo, Term::One(hi.clone()), c, args) else {
        unreachable!()
    };
    let mut entries = sub.0;
    let d = c.0.last().expect("template context ends with the hole");
    entries.push(Entry::Tm {
        name: d.name().clone(),
        term: last,
        mode: d.mode().clone(),
    });
    Term::force(hi, lo, head, Subst(entries))
}

/// Immediate subterms, including substitution entries.
fn children(e: &Term) -> Vec<&Term> {
    match e {
        Term::Var(_) | Term::One(_) | Term::Def(_) => Vec::new(),
        Term::Susp { body, .. }
        | Term::Store { body, .. }
        | Term::TLam { body, .. }
        | Term::Lam { body, .. } => vec![&**body],
        Term::Force { head, sub, .. } => {
            let mut v = vec![&**head];
            for en in sub.iter() {
                if let Entry::Tm { term, .. } = en {
                    v.push(term);
                }
            }
            v
        }
        Term::Load { bound, body, .. } => vec![&**bound, &**body],
        Term::TApp { head, .. } => vec![&**head],
        Term::App { head, arg } => vec![&**head, &**arg],
        Term::Ctor { args, .. } => args.iter().collect(),
        Term::Match {
            scrut, branches, ..
        } => {
            let mut v = vec![&**scrut];
            v.extend(branches.iter().map(|b| &b.body));
            v
        }
    }
}

/// Every term binder in `e` with its mode and scope.
fn collect_binders(e: &Term, out: &mut Vec<(Name, Mode, Term)>) {
    match e {
        Term::Lam { var, ann, body } => {
            out.push((var.clone(), ann.mode().clone(), (**body).clone()));
        }
        Term::Load { hi, var, body, .. } => {
            out.push((var.clone(), hi.clone(), (**body).clone()));
        }
        Term::Susp {
            body, ann: Some(c), ..
        } => {
            for d in c.iter().filter(|d| d.is_term()) {
                out.push((d.name().clone(), d.mode().clone(), (**body).clone()));
            }
        }
        Term::Match { mode, branches, .. } => {
            for b in branches {
                for x in &b.binders {
                    out.push((x.clone(), mode.clone(), b.body.clone()));
                }
            }
        }
        _ => {}
    }
    for c in children(e) {
        collect_binders(c, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_specs_elaborate() {
        let names: Vec<_> = standard_specs().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["single", "linear", "cpgf"]);
        for (_, spec) in standard_specs() {
            Harness::new(&spec).unwrap();
        }
    }

    #[test]
    fn zero_cases_is_an_empty_pass() {
        let (_, spec) = standard_specs().remove(0);
        let h = Harness::new(&spec).unwrap();
        let r = h.run(0, 0);
        assert_eq!((r.cases, r.failures.len()), (0, 0));
        assert!(r.passed());
    }

    #[test]
    fn reports_merge_by_summing() {
        let mut a = Report {
            cases: 2,
            ..Report::default()
        };
        a.tick(PROGRESS);
        let mut b = Report {
            cases: 3,
            discarded: 1,
            ..Report::default()
        };
        b.tick(PROGRESS);
        b.tick(PRESERVATION);
        b.failures.push(quiet(PROGRESS));
        a.merge(b);
        assert_eq!((a.cases, a.discarded), (5, 1));
        assert_eq!(a.checks[PROGRESS], 2);
        assert_eq!(a.checks[PRESERVATION], 1);
        assert!(!a.passed());
    }

    #[test]
    fn runs_are_reproducible() {
        let (_, spec) = standard_specs().remove(2);
        let h = Harness::new(&spec).unwrap();
        let a = serde_json::to_string(&h.run(4, 30)).unwrap();
        let b = serde_json::to_string(&h.run(4, 30)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn minimizing_a_passing_term_keeps_it() {
        let (_, spec) = standard_specs().remove(0);
        let h = Harness::new(&spec).unwrap();
        let mut r = Report::default();
        let (e, _) = (0..20).find_map(|s| h.closed_case(s, &mut r)).unwrap();
        assert!(alpha_eq(&h.minimize(&e, PROGRESS), &e));
    }
}
