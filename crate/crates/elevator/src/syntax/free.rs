//! Free names, occurrence counting and fresh-name choice.

use std::collections::HashSet;

use super::{name, Ctx, Decl, Entry, Kind, Name, Neutral, Subst, Term, Type};

/// Term and type variables share one namespace.
struct Free {
    bound: Vec<Name>,
    out: HashSet<Name>,
}

impl Free {
    fn new() -> Free {
        Free {
            bound: Vec::new(),
            out: HashSet::new(),
        }
    }

    fn var(&mut self, x: &Name) {
        if !self.bound.contains(x) {
            self.out.insert(x.clone());
        }
    }

    fn under(&mut self, names: &[Name], f: impl FnOnce(&mut Free)) {
        let len = self.bound.len();
        self.bound.extend(names.iter().cloned());
        f(self);
        self.bound.truncate(len);
    }

    fn kind(&mut self, k: &Kind) {
        if let Kind::CtxUp { ctx, body, .. } = k {
            let len = self.bound.len();
            self.ctx(ctx);
            self.kind(body);
            self.bound.truncate(len);
        }
    }

    /// Leaves the telescope's binders pushed.
    fn ctx(&mut self, c: &Ctx) {
        for d in c.iter() {
            match d {
                Decl::Ty { kind, .. } => self.kind(kind),
                Decl::Tm { ty, .. } => self.ty(ty),
            }
            self.bound.push(d.name().clone());
        }
    }

    fn ty(&mut self, a: &Type) {
        match a {
            Type::Unit(_) => {}
            Type::Neutral(p, _) => self.neutral(p),
            Type::Thunk { names, body, .. } => self.under(names, |s| s.ty(body)),
            Type::CtxUp { ctx, body, .. } => {
                let len = self.bound.len();
                self.ctx(ctx);
                self.ty(body);
                self.bound.truncate(len);
            }
            Type::Down { body, .. } => self.ty(body),
            Type::Forall { var, kind, body } => {
                self.kind(kind);
                self.under(std::slice::from_ref(var), |s| s.ty(body));
            }
            Type::Arrow { dom, cod } => {
                self.ty(dom);
                self.ty(cod);
            }
            Type::Data { args, .. } => args.iter().for_each(|t| self.ty(t)),
        }
    }

    fn neutral(&mut self, p: &Neutral) {
        match p {
            Neutral::Var(a) => self.var(a),
            Neutral::Force { head, sub, .. } => {
                self.neutral(head);
                self.subst(sub);
            }
        }
    }

    fn subst(&mut self, s: &Subst) {
        for e in s.iter() {
            match e {
                Entry::Ty { ty, .. } => self.ty(ty),
                Entry::Tm { term, .. } => self.term(term),
            }
        }
    }

    fn term(&mut self, e: &Term) {
        match e {
            Term::Var(x) => self.var(x),
            Term::One(_) | Term::Def(_) => {}
            Term::Susp {
                names,
                body,
                ann: None,
                ..
            } => self.under(names, |s| s.term(body)),
            Term::Susp {
                body, ann: Some(c), ..
            } => {
                let len = self.bound.len();
                self.ctx(c);
                self.term(body);
                self.bound.truncate(len);
            }
            Term::Force { head, sub, .. } => {
                self.term(head);
                self.subst(sub);
            }
            Term::Store { body, .. } => self.term(body),
            Term::Load {
                var, bound, body, ..
            } => {
                self.term(bound);
                self.under(std::slice::from_ref(var), |s| s.term(body));
            }
            Term::TLam { var, kind, body } => {
                self.kind(kind);
                self.under(std::slice::from_ref(var), |s| s.term(body));
            }
            Term::TApp { head, arg } => {
                self.term(head);
                self.ty(arg);
            }
            Term::Lam { var, ann, body } => {
                self.ty(ann);
                self.under(std::slice::from_ref(var), |s| s.term(body));
            }
            Term::App { head, arg } => {
                self.term(head);
                self.term(arg);
            }
            Term::Ctor { args, targs, .. } => {
                targs.iter().for_each(|t| self.ty(t));
                args.iter().for_each(|a| self.term(a));
            }
            Term::Match {
                scrut, branches, ..
            } => {
                self.term(scrut);
                for b in branches {
                    self.under(&b.binders, |s| s.term(&b.body));
                }
            }
        }
    }
}

pub fn free_names_type(a: &Type) -> HashSet<Name> {
    let mut f = Free::new();
    f.ty(a);
    f.out
}

pub fn free_names_kind(k: &Kind) -> HashSet<Name> {
    let mut f = Free::new();
    f.kind(k);
    f.out
}

pub fn free_names_term(e: &Term) -> HashSet<Name> {
    let mut f = Free::new();
    f.term(e);
    f.out
}

pub fn free_names_subst(s: &Subst) -> HashSet<Name> {
    let mut f = Free::new();
    f.subst(s);
    f.out
}

/// Free occurrences of the term variable `x` in `e`. Types never mention
/// term variables except inside type-level substitutions, which are not
/// uses.
pub fn count_occurrences(e: &Term, x: &str) -> usize {
    let under = |names: &[Name], body: &Term| {
        if names.iter().any(|n| &**n == x) {
            0
        } else {
            count_occurrences(body, x)
        }
    };
    match e {
        Term::Var(y) => usize::from(&**y == x),
        Term::One(_) | Term::Def(_) => 0,
        Term::Susp { names, body, .. } => under(names, body),
        Term::Force { head, sub, .. } => {
            count_occurrences(head, x)
                + sub
                    .iter()
                    .map(|en| match en {
                        Entry::Tm { term, .. } => count_occurrences(term, x),
                        Entry::Ty { .. } => 0,
                    })
                    .sum::<usize>()
        }
        Term::Store { body, .. } => count_occurrences(body, x),
        Term::Load {
            var, bound, body, ..
        } => count_occurrences(bound, x) + under(std::slice::from_ref(var), body),
        Term::TLam { var, body, .. } => under(std::slice::from_ref(var), body),
        Term::TApp { head, .. } => count_occurrences(head, x),
        Term::Lam { var, body, .. } => under(std::slice::from_ref(var), body),
        Term::App { head, arg } => count_occurrences(head, x) + count_occurrences(arg, x),
        Term::Ctor { args, .. } => args.iter().map(|a| count_occurrences(a, x)).sum(),
        Term::Match {
            scrut, branches, ..
        } => {
            count_occurrences(scrut, x)
                + branches
                    .iter()
                    .map(|b| under(&b.binders, &b.body))
                    .max()
                    .unwrap_or(0)
        }
    }
}

/// `base` itself if free, otherwise `base` with its numeric suffix
/// replaced by the first unused one.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Name {
    if !taken(base) {
        return name(base);
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|c| !taken(c))
        .map(|c| name(&c))
        .expect("unbounded supply")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_spec::Mode;
    use crate::syntax::Branch;

    #[test]
    fn counts_free_occurrences() {
        let k = Mode::new("k");
        assert_eq!(count_occurrences(&Term::var("x"), "x"), 1);
        let lam = Term::lam("x", Type::Unit(k.clone()), Term::var("x"));
        assert_eq!(count_occurrences(&lam, "x"), 0);
        let app = Term::app(Term::var("x"), Term::var("x"));
        assert_eq!(count_occurrences(&app, "x"), 2);
    }

    #[test]
    fn match_branches_count_as_alternatives() {
        let k = Mode::new("k");
        let e = Term::Match {
            mode: k,
            scrut: std::rc::Rc::new(Term::var("n")),
            branches: vec![
                Branch {
                    ctor: name("Zero"),
                    binders: vec![],
                    body: Term::var("x"),
                },
                Branch {
                    ctor: name("Succ"),
                    binders: vec![name("m")],
                    body: Term::var("x"),
                },
            ],
        };
        assert_eq!(count_occurrences(&e, "x"), 1);
    }

    #[test]
    fn free_names_skip_binders() {
        let k = Mode::new("k");
        let e = Term::lam(
            "x",
            Type::var("a", &k),
            Term::app(Term::var("x"), Term::var("y")),
        );
        let fv = free_names_term(&e);
        assert!(fv.contains("a") && fv.contains("y") && !fv.contains("x"));
    }

    #[test]
    fn fresh_names_avoid_taken() {
        let taken = ["x", "x1"];
        assert_eq!(&*fresh_name("x", |c| taken.contains(&c)), "x2");
        assert_eq!(&*fresh_name("y", |c| taken.contains(&c)), "y");
    }
}
