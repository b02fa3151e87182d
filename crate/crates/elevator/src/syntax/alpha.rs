//! Equality up to consistent renaming of bound names, optionally
//! disregarding subtrees that live at modes hidden from an observer.

use super::{Branch, Ctx, Decl, Entry, Kind, Name, Neutral, Subst, Term, Type};
use crate::mode_spec::{Mode, ModeSpec};

/// Parallel binder stacks; a bound name is identified by its position.
#[derive(Default)]
struct Env<'a> {
    left: Vec<Name>,
    right: Vec<Name>,
    observer: Option<(&'a ModeSpec, &'a Mode)>,
}

impl<'a> Env<'a> {
    fn observed(spec: &'a ModeSpec, n: &'a Mode) -> Env<'a> {
        Env {
            observer: Some((spec, n)),
            ..Env::default()
        }
    }

    /// True if subtrees at mode `m` are not compared.
    fn hidden(&self, m: &Mode) -> bool {
        self.observer.is_some_and(|(spec, n)| !spec.ge(m, n))
    }

    fn push(&mut self, a: &Name, b: &Name) {
        self.left.push(a.clone());
        self.right.push(b.clone());
    }

    fn pop(&mut self, n: usize) {
        let len = self.left.len() - n;
        self.left.truncate(len);
        self.right.truncate(len);
    }

    fn var(&self, a: &Name, b: &Name) -> bool {
        let i = self.left.iter().rposition(|x| x == a);
        let j = self.right.iter().rposition(|x| x == b);
        match (i, j) {
            (None, None) => a == b,
            (i, j) => i == j,
        }
    }

    fn kind(&mut self, a: &Kind, b: &Kind) -> bool {
        match (a, b) {
            (Kind::Type(k1), Kind::Type(k2)) => k1 == k2,
            (
                Kind::CtxUp {
                    hi: h1,
                    lo: l1,
                    ctx: c1,
                    body: b1,
                },
                Kind::CtxUp {
                    hi: h2,
                    lo: l2,
                    ctx: c2,
                    body: b2,
                },
            ) => {
                if h1 != h2 || l1 != l2 || !self.ctx(c1, c2) {
                    return false;
                }
                let r = self.hidden(l1) || self.kind(b1, b2);
                self.pop(c1.len());
                r
            }
            _ => false,
        }
    }

    /// Compares two telescopes, leaving their binders pushed on success.
    fn ctx(&mut self, a: &Ctx, b: &Ctx) -> bool {
        if a.len() != b.len() {
            return false;
        }
        for (i, (d1, d2)) in a.iter().zip(b.iter()).enumerate() {
            let ok = match (d1, d2) {
                (Decl::Ty { kind: k1, .. }, Decl::Ty { kind: k2, .. }) => {
                    k1.mode() == k2.mode() && (self.hidden(k1.mode()) || self.kind(k1, k2))
                }
                (Decl::Tm { ty: t1, .. }, Decl::Tm { ty: t2, .. }) => {
                    t1.mode() == t2.mode() && (self.hidden(t1.mode()) || self.ty(t1, t2))
                }
                _ => false,
            };
            if !ok {
                self.pop(i);
                return false;
            }
            self.push(d1.name(), d2.name());
        }
        true
    }

    fn ty(&mut self, a: &Type, b: &Type) -> bool {
        match (a, b) {
            (Type::Unit(k1), Type::Unit(k2)) => k1 == k2,
            (Type::Neutral(p1, k1), Type::Neutral(p2, k2)) => k1 == k2 && self.neutral(p1, p2),
            (
                Type::Thunk {
                    hi: h1,
                    names: n1,
                    body: b1,
                    ..
                },
                Type::Thunk {
                    hi: h2,
                    names: n2,
                    body: b2,
                    ..
                },
            ) => {
                h1 == h2
                    && b1.mode() == b2.mode()
                    && self.binders(n1, n2, |s| s.hidden(b1.mode()) || s.ty(b1, b2))
            }
            (
                Type::CtxUp {
                    hi: h1,
                    lo: l1,
                    ctx: c1,
                    body: b1,
                },
                Type::CtxUp {
                    hi: h2,
                    lo: l2,
                    ctx: c2,
                    body: b2,
                },
            ) => {
                if h1 != h2 || l1 != l2 || !self.ctx(c1, c2) {
                    return false;
                }
                let r = self.hidden(l1) || self.ty(b1, b2);
                self.pop(c1.len());
                r
            }
            (
                Type::Down {
                    hi: h1,
                    lo: l1,
                    body: b1,
                },
                Type::Down {
                    hi: h2,
                    lo: l2,
                    body: b2,
                },
            ) => h1 == h2 && l1 == l2 && self.ty(b1, b2),
            (
                Type::Forall {
                    var: v1,
                    kind: k1,
                    body: b1,
                },
                Type::Forall {
                    var: v2,
                    kind: k2,
                    body: b2,
                },
            ) => {
                self.kind(k1, k2)
                    && self.binders(std::slice::from_ref(v1), std::slice::from_ref(v2), |s| {
                        s.ty(b1, b2)
                    })
            }
            (Type::Arrow { dom: d1, cod: c1 }, Type::Arrow { dom: d2, cod: c2 }) => {
                self.ty(d1, d2) && self.ty(c1, c2)
            }
            (
                Type::Data {
                    name: n1,
                    mode: m1,
                    args: a1,
                },
                Type::Data {
                    name: n2,
                    mode: m2,
                    args: a2,
                },
            ) => {
                n1 == n2
                    && m1 == m2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| self.ty(x, y))
            }
            _ => false,
        }
    }

    fn neutral(&mut self, a: &Neutral, b: &Neutral) -> bool {
        match (a, b) {
            (Neutral::Var(x), Neutral::Var(y)) => self.var(x, y),
            (
                Neutral::Force {
                    head: h1,
                    sub: s1,
                    hi: hi1,
                    lo: lo1,
                },
                Neutral::Force {
                    head: h2,
                    sub: s2,
                    hi: hi2,
                    lo: lo2,
                },
            ) => hi1 == hi2 && lo1 == lo2 && self.neutral(h1, h2) && self.subst(s1, s2, false),
            _ => false,
        }
    }

    /// Entries are compared positionally. Domain names matter only for a
    /// free-standing substitution; inside a force they are placeholders
    /// for the template's own binders.
    fn subst(&mut self, a: &Subst, b: &Subst, names: bool) -> bool {
        a.len() == b.len()
            && a.iter().zip(b.iter()).all(|(x, y)| {
                (!names || x.name() == y.name())
                    && match (x, y) {
                        (
                            Entry::Ty {
                                ty: t1, kind: k1, ..
                            },
                            Entry::Ty {
                                ty: t2, kind: k2, ..
                            },
                        ) => k1.mode() == k2.mode() && (self.hidden(k1.mode()) || self.ty(t1, t2)),
                        (
                            Entry::Tm {
                                term: e1, mode: m1, ..
                            },
                            Entry::Tm {
                                term: e2, mode: m2, ..
                            },
                        ) => m1 == m2 && (self.hidden(m1) || self.term(e1, e2)),
                        _ => false,
                    }
            })
    }

    fn binders(&mut self, a: &[Name], b: &[Name], f: impl FnOnce(&mut Self) -> bool) -> bool {
        if a.len() != b.len() {
            return false;
        }
        for (x, y) in a.iter().zip(b) {
            self.push(x, y);
        }
        let r = f(self);
        self.pop(a.len());
        r
    }

    fn term(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => self.var(x, y),
            (Term::One(k1), Term::One(k2)) => k1 == k2,
            (
                Term::Susp {
                    hi: h1,
                    lo: l1,
                    names: n1,
                    body: b1,
                    ..
                },
                Term::Susp {
                    hi: h2,
                    lo: l2,
                    names: n2,
                    body: b2,
                    ..
                },
            ) => h1 == h2 && l1 == l2 && self.binders(n1, n2, |s| s.hidden(l1) || s.term(b1, b2)),
            (
                Term::Force {
                    hi: h1,
                    lo: l1,
                    head: e1,
                    sub: s1,
                },
                Term::Force {
                    hi: h2,
                    lo: l2,
                    head: e2,
                    sub: s2,
                },
            ) => h1 == h2 && l1 == l2 && self.term(e1, e2) && self.subst(s1, s2, false),
            (
                Term::Store {
                    hi: h1,
                    lo: l1,
                    body: b1,
                },
                Term::Store {
                    hi: h2,
                    lo: l2,
                    body: b2,
                },
            ) => h1 == h2 && l1 == l2 && self.term(b1, b2),
            (
                Term::Load {
                    hi: h1,
                    lo: l1,
                    var: v1,
                    bound: e1,
                    body: b1,
                },
                Term::Load {
                    hi: h2,
                    lo: l2,
                    var: v2,
                    bound: e2,
                    body: b2,
                },
            ) => {
                h1 == h2
                    && l1 == l2
                    && self.term(e1, e2)
                    && self.binders(std::slice::from_ref(v1), std::slice::from_ref(v2), |s| {
                        s.term(b1, b2)
                    })
            }
            (
                Term::TLam {
                    var: v1,
                    kind: k1,
                    body: b1,
                },
                Term::TLam {
                    var: v2,
                    kind: k2,
                    body: b2,
                },
            ) => {
                self.kind(k1, k2)
                    && self.binders(std::slice::from_ref(v1), std::slice::from_ref(v2), |s| {
                        s.term(b1, b2)
                    })
            }
            (Term::TApp { head: h1, arg: a1 }, Term::TApp { head: h2, arg: a2 }) => {
                self.term(h1, h2) && self.ty(a1, a2)
            }
            (
                Term::Lam {
                    var: v1,
                    ann: a1,
                    body: b1,
                },
                Term::Lam {
                    var: v2,
                    ann: a2,
                    body: b2,
                },
            ) => {
                self.ty(a1, a2)
                    && self.binders(std::slice::from_ref(v1), std::slice::from_ref(v2), |s| {
                        s.term(b1, b2)
                    })
            }
            (Term::App { head: h1, arg: a1 }, Term::App { head: h2, arg: a2 }) => {
                self.term(h1, h2) && self.term(a1, a2)
            }
            (
                Term::Ctor {
                    data: d1,
                    mode: m1,
                    ctor: c1,
                    args: a1,
                    ..
                },
                Term::Ctor {
                    data: d2,
                    mode: m2,
                    ctor: c2,
                    args: a2,
                    ..
                },
            ) => {
                d1 == d2
                    && m1 == m2
                    && c1 == c2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| self.term(x, y))
            }
            (
                Term::Match {
                    mode: m1,
                    scrut: s1,
                    branches: b1,
                },
                Term::Match {
                    mode: m2,
                    scrut: s2,
                    branches: b2,
                },
            ) => {
                m1 == m2
                    && self.term(s1, s2)
                    && b1.len() == b2.len()
                    && b1.iter().zip(b2).all(|(x, y)| self.branch(x, y))
            }
            (Term::Def(x), Term::Def(y)) => x == y,
            _ => false,
        }
    }

    fn branch(&mut self, a: &Branch, b: &Branch) -> bool {
        a.ctor == b.ctor && self.binders(&a.binders, &b.binders, |s| s.term(&a.body, &b.body))
    }
}

/// Syntax classes compared up to renaming of bound names.
pub trait Alpha {
    fn alpha(&self, other: &Self) -> bool;
}

impl Alpha for Kind {
    fn alpha(&self, other: &Self) -> bool {
        Env::default().kind(self, other)
    }
}

impl Alpha for Type {
    fn alpha(&self, other: &Self) -> bool {
        Env::default().ty(self, other)
    }
}

impl Alpha for Neutral {
    fn alpha(&self, other: &Self) -> bool {
        Env::default().neutral(self, other)
    }
}

impl Alpha for Term {
    fn alpha(&self, other: &Self) -> bool {
        Env::default().term(self, other)
    }
}

impl Alpha for Subst {
    fn alpha(&self, other: &Self) -> bool {
        Env::default().subst(self, other, true)
    }
}

impl Alpha for Ctx {
    fn alpha(&self, other: &Self) -> bool {
        let mut env = Env::default();
        env.ctx(self, other)
            && self
                .iter()
                .zip(other.iter())
                .all(|(a, b)| a.name() == b.name())
    }
}

pub fn alpha_eq<T: Alpha + ?Sized>(a: &T, b: &T) -> bool {
    a.alpha(b)
}

/// Positional comparison of substitutions, ignoring domain names.
pub fn alpha_eq_subst(a: &Subst, b: &Subst) -> bool {
    Env::default().subst(a, b, false)
}

/// Observer-relative comparison: subtrees at modes not above `n` are
/// taken as equal. Callers guarantee both sides are well typed.
pub mod observed {
    use super::*;

    pub fn kind(spec: &ModeSpec, n: &Mode, a: &Kind, b: &Kind) -> bool {
        Env::observed(spec, n).kind(a, b)
    }

    pub fn ty(spec: &ModeSpec, n: &Mode, a: &Type, b: &Type) -> bool {
        Env::observed(spec, n).ty(a, b)
    }

    pub fn term(spec: &ModeSpec, n: &Mode, a: &Term, b: &Term) -> bool {
        Env::observed(spec, n).term(a, b)
    }

    pub fn subst(spec: &ModeSpec, n: &Mode, a: &Subst, b: &Subst) -> bool {
        Env::observed(spec, n).subst(a, b, true)
    }

    pub fn ctx(spec: &ModeSpec, n: &Mode, a: &Ctx, b: &Ctx) -> bool {
        Env::observed(spec, n).ctx(a, b)
            && a.iter().zip(b.iter()).all(|(x, y)| x.name() == y.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_spec::Mode;
    use crate::syntax::name;

    fn m(s: &str) -> Mode {
        Mode::new(s)
    }

    #[test]
    fn lambda_binders_rename() {
        let k = m("k");
        let a = Term::lam("x", Type::Unit(k.clone()), Term::var("x"));
        let b = Term::lam("y", Type::Unit(k.clone()), Term::var("y"));
        assert!(alpha_eq(&a, &b));
        let c = Term::lam("y", Type::Unit(k), Term::var("x"));
        assert!(!alpha_eq(&a, &c));
    }

    #[test]
    fn susp_binders_rename() {
        let a = Term::susp(&m("C"), &m("P"), &["x"], Term::var("x"));
        let b = Term::susp(&m("C"), &m("P"), &["z"], Term::var("z"));
        assert!(alpha_eq(&a, &b));
    }

    #[test]
    fn mode_indices_compare_exactly() {
        let e = Term::One(m("C"));
        let a = Term::store(&m("C"), &m("P"), e.clone());
        let b = Term::store(&m("C"), &m("GF"), e);
        assert!(!alpha_eq(&a, &b));
    }

    #[test]
    fn shadowing_is_respected() {
        let k = m("k");
        let u = Type::Unit(k);
        // \x. \x. x  vs  \x. \y. x
        let a = Term::lam("x", u.clone(), Term::lam("x", u.clone(), Term::var("x")));
        let b = Term::lam("x", u.clone(), Term::lam("y", u, Term::var("x")));
        assert!(!alpha_eq(&a, &b));
    }

    #[test]
    fn free_variables_compare_by_name() {
        assert!(alpha_eq(&Term::var("x"), &Term::var("x")));
        assert!(!alpha_eq(&Term::var("x"), &Term::var("y")));
    }

    #[test]
    fn forall_and_telescopes() {
        let p = m("P");
        let f1 = Type::Forall {
            var: name("a"),
            kind: std::rc::Rc::new(Kind::Type(p.clone())),
            body: std::rc::Rc::new(Type::var("a", &p)),
        };
        let f2 = Type::Forall {
            var: name("b"),
            kind: std::rc::Rc::new(Kind::Type(p.clone())),
            body: std::rc::Rc::new(Type::var("b", &p)),
        };
        assert!(alpha_eq(&f1, &f2));
        let up = |a: &str, x: &str| {
            Type::ctx_up(
                &m("C"),
                &p,
                Ctx(vec![
                    Decl::Ty {
                        name: name(a),
                        kind: Kind::Type(p.clone()),
                    },
                    Decl::Tm {
                        name: name(x),
                        ty: Type::var(a, &p),
                    },
                ]),
                Type::var(a, &p),
            )
        };
        assert!(alpha_eq(&up("a", "x"), &up("b", "y")));
    }
}
