//! Small-step evaluation (`-->`) and template reduction under an ambient
//! mode (`==>m`), their normal-form classifiers, and a fuel-bounded driver.
//!
//! Both relations are functions: redices are tried before congruences and
//! congruences go left to right. Rule names in traces are the names of the
//! reductions that fired; congruences are not recorded.

use std::rc::Rc;

use serde::Serialize;

use crate::mode_spec::{Mode, ModeSpec};
use crate::subst::{apply_term, single_subst_term, single_subst_type_in_term};
use crate::syntax::{erase_kind, Entry, Subst, Term};
use crate::typing::Signature;

pub const FORCE_SUSP: &str = "force-susp";
pub const LOAD_STORE: &str = "load-store";
pub const TYPE_BETA: &str = "type-beta";
pub const BETA: &str = "beta";
pub const MATCH_CTOR: &str = "match-ctor";
pub const DELTA: &str = "delta";
pub const SPLICE: &str = "splice";

#[derive(Clone, Debug)]
pub enum Step {
    Stepped(Term, &'static str),
    NoStep,
}

impl Step {
    pub fn is_step(&self) -> bool {
        matches!(self, Step::Stepped(..))
    }

    pub fn term(self) -> Option<Term> {
        match self {
            Step::Stepped(t, _) => Some(t),
            Step::NoStep => None,
        }
    }

    fn map(self, f: impl FnOnce(Term) -> Term) -> Step {
        match self {
            Step::Stepped(t, r) => Step::Stepped(f(t), r),
            Step::NoStep => Step::NoStep,
        }
    }
}

#[derive(Clone, Debug)]
pub enum EvalOutcome {
    Value(Term),
    FuelExhausted(Term),
    /// No rule applies but the term is not a weak normal form.
    Stuck(Term),
}

impl EvalOutcome {
    pub fn term(&self) -> &Term {
        match self {
            EvalOutcome::Value(t) | EvalOutcome::FuelExhausted(t) | EvalOutcome::Stuck(t) => t,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub rule: &'static str,
    pub term: String,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub outcome: EvalOutcome,
    pub steps: usize,
    pub trace: Vec<TraceStep>,
}

/// Evaluation relative to a mode spec (for accessibility tests) and a
/// signature (for unfolding definitions).
#[derive(Clone, Copy)]
pub struct Evaluator<'a> {
    pub spec: &'a ModeSpec,
    pub sig: &'a Signature,
}

fn rc(t: Term) -> Rc<Term> {
    Rc::new(t)
}

impl<'a> Evaluator<'a> {
    pub fn new(spec: &'a ModeSpec, sig: &'a Signature) -> Evaluator<'a> {
        Evaluator { spec, sig }
    }

    fn ge(&self, a: &Mode, b: &Mode) -> bool {
        self.spec.ge(a, b)
    }

    // ---- classifiers ----

    pub fn is_weak_normal(&self, e: &Term) -> bool {
        match e {
            Term::Susp { hi, body, .. } => self.is_normal_template(body, hi),
            Term::Store { body, .. } => self.is_weak_normal(body),
            Term::TLam { .. } | Term::Lam { .. } | Term::One(_) => true,
            Term::Ctor { args, .. } => args.iter().all(|a| self.is_weak_normal(a)),
            _ => self.is_weak_neutral(e),
        }
    }

    pub fn is_weak_neutral(&self, e: &Term) -> bool {
        match e {
            Term::Var(_) => true,
            Term::Force { head, .. } => self.is_weak_neutral(head),
            Term::Load { bound, .. } => self.is_weak_neutral(bound),
            Term::TApp { head, .. } => self.is_weak_neutral(head),
            Term::App { head, arg } => self.is_weak_neutral(head) && self.is_weak_normal(arg),
            Term::Match { scrut, .. } => self.is_weak_neutral(scrut),
            _ => false,
        }
    }

    /// Membership in the normal templates of ambient mode `k`.
    pub fn is_normal_template(&self, e: &Term, k: &Mode) -> bool {
        match e {
            Term::Var(_) | Term::One(_) | Term::Def(_) => true,
            Term::Susp { body, .. } => self.is_normal_template(body, k),
            Term::Force { hi, head, sub, .. } => {
                let head_ok = if self.ge(hi, k) {
                    self.is_weak_neutral(head)
                } else {
                    self.is_normal_template(head, k)
                };
                head_ok
                    && sub.iter().all(|en| match en {
                        Entry::Tm { term, .. } => self.is_normal_template(term, k),
                        Entry::Ty { .. } => true,
                    })
            }
            Term::Store { hi, body, .. } => {
                if self.ge(hi, k) {
                    self.is_weak_normal(body)
                } else {
                    self.is_normal_template(body, k)
                }
            }
            Term::Load {
                lo, bound, body, ..
            } => {
                let bound_ok = if self.ge(lo, k) {
                    self.is_weak_normal(bound)
                } else {
                    self.is_normal_template(bound, k)
                };
                bound_ok && self.is_normal_template(body, k)
            }
            Term::TLam { body, .. } | Term::Lam { body, .. } => self.is_normal_template(body, k),
            Term::TApp { head, .. } => self.is_normal_template(head, k),
            Term::App { head, arg } => {
                self.is_normal_template(head, k) && self.is_normal_template(arg, k)
            }
            Term::Ctor { args, .. } => args.iter().all(|a| self.is_normal_template(a, k)),
            Term::Match {
                mode,
                scrut,
                branches,
            } => {
                let scrut_ok = if self.ge(mode, k) {
                    self.is_weak_normal(scrut)
                } else {
                    self.is_normal_template(scrut, k)
                };
                scrut_ok && branches.iter().all(|b| self.is_normal_template(&b.body, k))
            }
        }
    }

    // ---- term evaluation ----

    pub fn step(&self, e: &Term) -> Step {
        if let Some((t, rule)) = self.reduce(e) {
            return Step::Stepped(t, rule);
        }
        match e {
            Term::Susp {
                hi,
                lo,
                names,
                body,
                ann,
            } => self.template_step(body, hi).map(|b| Term::Susp {
                hi: hi.clone(),
                lo: lo.clone(),
                names: names.clone(),
                body: rc(b),
                ann: ann.clone(),
            }),
            Term::Force { hi, lo, head, sub } => self.step(head).map(|h| Term::Force {
                hi: hi.clone(),
                lo: lo.clone(),
                head: rc(h),
                sub: sub.clone(),
            }),
            Term::Store { hi, lo, body } => self.step(body).map(|b| Term::Store {
                hi: hi.clone(),
                lo: lo.clone(),
                body: rc(b),
            }),
            Term::Load {
                hi,
                lo,
                var,
                bound,
                body,
            } => self.step(bound).map(|b| Term::Load {
                hi: hi.clone(),
                lo: lo.clone(),
                var: var.clone(),
                bound: rc(b),
                body: body.clone(),
            }),
            Term::TApp { head, arg } => self.step(head).map(|h| Term::TApp {
                head: rc(h),
                arg: arg.clone(),
            }),
            Term::App { head, arg } => match self.step(head) {
                Step::NoStep if self.is_weak_normal(head) => self.step(arg).map(|a| Term::App {
                    head: head.clone(),
                    arg: rc(a),
                }),
                s => s.map(|h| Term::App {
                    head: rc(h),
                    arg: arg.clone(),
                }),
            },
            Term::Ctor { .. } => self.ctor_args(e, |a| self.step(a)),
            Term::Match {
                mode,
                scrut,
                branches,
            } => self.step(scrut).map(|s| Term::Match {
                mode: mode.clone(),
                scrut: rc(s),
                branches: branches.clone(),
            }),
            _ => Step::NoStep,
        }
    }

    /// The reductions of `-->`.
    fn reduce(&self, e: &Term) -> Option<(Term, &'static str)> {
        match e {
            Term::Force { hi, lo, head, sub } => match &**head {
                Term::Susp {
                    hi: h2,
                    lo: l2,
                    names,
                    body,
                    ..
                } if h2 == hi && l2 == lo && self.is_normal_template(body, hi) => {
                    Some((self.splice(names, body, sub)?, FORCE_SUSP))
                }
                _ => None,
            },
            Term::Load {
                hi,
                lo,
                var,
                bound,
                body,
            } => match &**bound {
                Term::Store {
                    hi: h2,
                    lo: l2,
                    body: v,
                } if h2 == hi && l2 == lo && self.is_weak_normal(v) => {
                    Some((single_subst_term(var, v, hi, body).ok()?, LOAD_STORE))
                }
                _ => None,
            },
            Term::TApp { head, arg } => match &**head {
                Term::TLam { var, kind, body } => Some((
                    single_subst_type_in_term(var, arg, &erase_kind(kind), body).ok()?,
                    TYPE_BETA,
                )),
                _ => None,
            },
            Term::App { head, arg } => match &**head {
                Term::Lam { var, ann, body } if self.is_weak_normal(arg) => {
                    Some((single_subst_term(var, arg, ann.mode(), body).ok()?, BETA))
                }
                _ => None,
            },
            Term::Match {
                mode,
                scrut,
                branches,
            } => match &**scrut {
                Term::Ctor { ctor, args, .. } if self.is_weak_normal(scrut) => {
                    let b = branches.iter().find(|b| b.ctor == *ctor)?;
                    if b.binders.len() != args.len() {
                        return None;
                    }
                    let s = Subst(
                        b.binders
                            .iter()
                            .zip(args)
                            .map(|(x, a)| Entry::Tm {
                                name: x.clone(),
                                term: a.clone(),
                                mode: mode.clone(),
                            })
                            .collect(),
                    );
                    Some((apply_term(&s, &b.body).ok()?, MATCH_CTOR))
                }
                _ => None,
            },
            Term::Def(n) => {
                let (_, d) = self.sig.def(n)?;
                match &d.body {
                    Term::Def(m) if m == n => None,
                    body => Some((body.clone(), DELTA)),
                }
            }
            _ => None,
        }
    }

    /// Instantiates a template body, keying `sub` by the template's names.
    fn splice(&self, names: &[crate::syntax::Name], body: &Term, sub: &Subst) -> Option<Term> {
        if names.len() != sub.len() {
            return None;
        }
        apply_term(&sub.renamed(names), body).ok()
    }

    fn ctor_args(&self, e: &Term, f: impl Fn(&Term) -> Step) -> Step {
        let Term::Ctor {
            data,
            mode,
            ctor,
            args,
            targs,
        } = e
        else {
            return Step::NoStep;
        };
        for (i, a) in args.iter().enumerate() {
            if let Step::Stepped(t, rule) = f(a) {
                let mut args = args.clone();
                args[i] = t;
                let e = Term::Ctor {
                    data: data.clone(),
                    mode: mode.clone(),
                    ctor: ctor.clone(),
                    args,
                    targs: targs.clone(),
                };
                return Step::Stepped(e, rule);
            }
        }
        Step::NoStep
    }

    // ---- template reduction ----

    /// One step of template reduction under ambient mode `m`. Subterms at
    /// modes accessible from `m` are evaluated; others are reduced as
    /// templates. Splices at accessible modes are the only reductions.
    pub fn template_step(&self, e: &Term, m: &Mode) -> Step {
        match e {
            Term::Susp {
                hi,
                lo,
                names,
                body,
                ann,
            } => self.template_step(body, m).map(|b| Term::Susp {
                hi: hi.clone(),
                lo: lo.clone(),
                names: names.clone(),
                body: rc(b),
                ann: ann.clone(),
            }),
            Term::Force { hi, lo, head, sub } => {
                if self.ge(hi, m) {
                    if let Term::Susp {
                        hi: h2,
                        lo: l2,
                        names,
                        body,
                        ..
                    } = &**head
                    {
                        if h2 == hi && l2 == lo && self.is_normal_template(body, hi) {
                            if let Some(t) = self.splice(names, body, sub) {
                                return Step::Stepped(t, SPLICE);
                            }
                        }
                    }
                }
                match self.by_access(hi, head, m) {
                    Step::NoStep if self.settled(hi, head, m) => {
                        // Entries are syntax waiting to be spliced; splices
                        // inside them happen now, as they would after
                        // substitution.
                        for (i, en) in sub.iter().enumerate() {
                            let Entry::Tm { name, term, mode } = en else {
                                continue;
                            };
                            if let Step::Stepped(t, rule) = self.template_step(term, m) {
                                let mut entries = sub.0.clone();
                                entries[i] = Entry::Tm {
                                    name: name.clone(),
                                    term: t,
                                    mode: mode.clone(),
                                };
                                let e = Term::Force {
                                    hi: hi.clone(),
                                    lo: lo.clone(),
                                    head: head.clone(),
                                    sub: Subst(entries),
                                };
                                return Step::Stepped(e, rule);
                            }
                        }
                        Step::NoStep
                    }
                    s => s.map(|h| Term::Force {
                        hi: hi.clone(),
                        lo: lo.clone(),
                        head: rc(h),
                        sub: sub.clone(),
                    }),
                }
            }
            Term::Store { hi, lo, body } => self.by_access(hi, body, m).map(|b| Term::Store {
                hi: hi.clone(),
                lo: lo.clone(),
                body: rc(b),
            }),
            Term::Load {
                hi,
                lo,
                var,
                bound,
                body,
            } => {
                let rebuild = |b: Rc<Term>, c: Rc<Term>| Term::Load {
                    hi: hi.clone(),
                    lo: lo.clone(),
                    var: var.clone(),
                    bound: b,
                    body: c,
                };
                match self.by_access(lo, bound, m) {
                    Step::NoStep if self.settled(lo, bound, m) => self
                        .template_step(body, m)
                        .map(|c| rebuild(bound.clone(), rc(c))),
                    s => s.map(|b| rebuild(rc(b), body.clone())),
                }
            }
            Term::TLam { var, kind, body } => self.template_step(body, m).map(|b| Term::TLam {
                var: var.clone(),
                kind: kind.clone(),
                body: rc(b),
            }),
            Term::TApp { head, arg } => self.template_step(head, m).map(|h| Term::TApp {
                head: rc(h),
                arg: arg.clone(),
            }),
            Term::Lam { var, ann, body } => self.template_step(body, m).map(|b| Term::Lam {
                var: var.clone(),
                ann: ann.clone(),
                body: rc(b),
            }),
            Term::App { head, arg } => match self.template_step(head, m) {
                Step::NoStep if self.is_normal_template(head, m) => {
                    self.template_step(arg, m).map(|a| Term::App {
                        head: head.clone(),
                        arg: rc(a),
                    })
                }
                s => s.map(|h| Term::App {
                    head: rc(h),
                    arg: arg.clone(),
                }),
            },
            Term::Ctor { .. } => self.ctor_args(e, |a| self.template_step(a, m)),
            Term::Match {
                mode,
                scrut,
                branches,
            } => match self.by_access(mode, scrut, m) {
                Step::NoStep if self.settled(mode, scrut, m) => {
                    for (i, b) in branches.iter().enumerate() {
                        if let Step::Stepped(t, rule) = self.template_step(&b.body, m) {
                            let mut branches = branches.clone();
                            branches[i].body = t;
                            let e = Term::Match {
                                mode: mode.clone(),
                                scrut: scrut.clone(),
                                branches,
                            };
                            return Step::Stepped(e, rule);
                        }
                    }
                    Step::NoStep
                }
                s => s.map(|t| Term::Match {
                    mode: mode.clone(),
                    scrut: rc(t),
                    branches: branches.clone(),
                }),
            },
            Term::Var(_) | Term::One(_) | Term::Def(_) => Step::NoStep,
        }
    }

    /// Steps a subterm living at mode `l`: evaluated if `l` is accessible
    /// from the ambient mode, reduced as a template otherwise.
    fn by_access(&self, l: &Mode, e: &Term, m: &Mode) -> Step {
        if self.ge(l, m) {
            self.step(e)
        } else {
            self.template_step(e, m)
        }
    }

    fn settled(&self, l: &Mode, e: &Term, m: &Mode) -> bool {
        if self.ge(l, m) {
            self.is_weak_normal(e)
        } else {
            self.is_normal_template(e, m)
        }
    }

    // ---- driver ----

    /// Steps `e` at most `fuel` times, recording a trace when asked.
    pub fn evaluate(&self, e: &Term, fuel: usize, trace: bool) -> Evaluation {
        let mut cur = e.clone();
        let mut out = Vec::new();
        for n in 0..fuel {
            match self.step(&cur) {
                Step::Stepped(t, rule) => {
                    if trace {
                        out.push(TraceStep {
                            step: n + 1,
                            rule,
                            term: t.to_string(),
                        });
                    }
                    cur = t;
                }
                Step::NoStep => return self.finish(cur, n, out),
            }
        }
        if !self.step(&cur).is_step() {
            return self.finish(cur, fuel, out);
        }
        Evaluation {
            outcome: EvalOutcome::FuelExhausted(cur),
            steps: fuel,
            trace: out,
        }
    }

    fn finish(&self, t: Term, steps: usize, trace: Vec<TraceStep>) -> Evaluation {
        let outcome = if self.is_weak_normal(&t) {
            EvalOutcome::Value(t)
        } else {
            EvalOutcome::Stuck(t)
        };
        Evaluation {
            outcome,
            steps,
            trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{name, Type};

    fn spec() -> ModeSpec {
        ModeSpec::from_json(
            r#"{"modes":["m","k","l"],"order":[["m","k"],["k","l"]],
                "signatures":{"m":["C","W"],"k":["C","W"],"l":["C","W"]}}"#,
        )
        .unwrap()
    }

    fn md(s: &str) -> Mode {
        Mode::new(s)
    }

    fn one(s: &str) -> Term {
        Term::One(md(s))
    }

    fn rule(s: Step) -> &'static str {
        match s {
            Step::Stepped(_, r) => r,
            Step::NoStep => "none",
        }
    }

    #[test]
    fn reductions() {
        let (spec, sig) = (spec(), Signature::default());
        let ev = Evaluator::new(&spec, &sig);
        let k = md("k");
        let beta = Term::app(
            Term::lam("x", Type::Unit(k.clone()), Term::var("x")),
            one("k"),
        );
        let Step::Stepped(t, r) = ev.step(&beta) else {
            panic!()
        };
        assert_eq!((t.to_string().as_str(), r), ("unit@k", BETA));

        let ls = Term::load(
            &md("m"),
            &md("l"),
            "x",
            Term::store(&md("m"), &md("l"), one("m")),
            Term::var("x"),
        );
        let Step::Stepped(t, r) = ev.step(&ls) else {
            panic!()
        };
        assert_eq!((t.to_string().as_str(), r), ("unit@m", LOAD_STORE));

        let sub = Subst(vec![Entry::Tm {
            name: name("x"),
            term: one("k"),
            mode: k.clone(),
        }]);
        let fs = Term::force(
            &md("m"),
            &k,
            Term::susp(&md("m"), &k, &["x"], Term::var("x")),
            sub,
        );
        let Step::Stepped(t, r) = ev.step(&fs) else {
            panic!()
        };
        assert_eq!((t.to_string().as_str(), r), ("unit@k", FORCE_SUSP));
    }

    #[test]
    fn splices_fire_only_at_accessible_modes() {
        let (spec, sig) = (spec(), Signature::default());
        let ev = Evaluator::new(&spec, &sig);
        let k = md("k");
        let sub = Subst(vec![Entry::Tm {
            name: name("x"),
            term: one("l"),
            mode: md("l"),
        }]);
        let fs = Term::force(
            &k,
            &md("l"),
            Term::susp(&k, &md("l"), &["y"], Term::var("y")),
            sub,
        );
        assert_eq!(rule(ev.template_step(&fs, &md("k"))), SPLICE);
        assert_eq!(rule(ev.template_step(&fs, &md("m"))), "none");
        assert!(ev.is_normal_template(&fs, &md("m")));
    }

    #[test]
    fn lambdas_are_inert() {
        let (spec, sig) = (spec(), Signature::default());
        let ev = Evaluator::new(&spec, &sig);
        let l = md("l");
        let inner = Term::app(
            Term::lam("y", Type::Unit(l.clone()), Term::var("y")),
            Term::var("x"),
        );
        let e = Term::lam("x", Type::Unit(l.clone()), inner);
        assert!(ev.is_weak_normal(&e));
        assert_eq!(rule(ev.template_step(&e, &md("m"))), "none");
        assert!(!ev.is_weak_normal(&Term::app(e, one("l"))));
    }

    #[test]
    fn fuel_bounds_evaluation() {
        let spec = spec();
        let module =
            crate::frontend::parse_module("def loop : Unit@k -> Unit@k = \\x. loop x").unwrap();
        let sig = crate::typing::elaborate(&module, &spec).unwrap();
        let ev = Evaluator::new(&spec, &sig);
        let e = Term::app(Term::Def(name("loop")), one("k"));
        let r = ev.evaluate(&e, 100, false);
        assert!(matches!(r.outcome, EvalOutcome::FuelExhausted(_)));
        let r = ev.evaluate(&one("k"), 100, true);
        assert!(matches!(r.outcome, EvalOutcome::Value(_)));
        assert_eq!(r.steps, 0);
    }
}
