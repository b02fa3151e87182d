//! Equivalence over an observer mode.
//!
//! Two well-typed objects are equivalent over `n` when they agree on every
//! part living at a mode `l` with `l >= n`. Parts at other modes are never
//! inspected. Both sides must already be well typed; nothing is rechecked.

use crate::mode_spec::{Mode, ModeSpec};
use crate::syntax::{observed, Ctx, Kind, Subst, Term, Type};

fn visible(spec: &ModeSpec, n: &Mode, k: &Mode) -> bool {
    spec.ge(k, n)
}

pub fn equiv_context(spec: &ModeSpec, n: &Mode, a: &Ctx, b: &Ctx) -> bool {
    observed::ctx(spec, n, a, b)
}

pub fn equiv_kind(spec: &ModeSpec, n: &Mode, a: &Kind, b: &Kind) -> bool {
    if a.mode() != b.mode() {
        return false;
    }
    !visible(spec, n, a.mode()) || observed::kind(spec, n, a, b)
}

pub fn equiv_type(spec: &ModeSpec, n: &Mode, a: &Type, b: &Type) -> bool {
    if a.mode() != b.mode() {
        return false;
    }
    !visible(spec, n, a.mode()) || observed::ty(spec, n, a, b)
}

/// `k` is the mode of the common type of `a` and `b`.
pub fn equiv_term(spec: &ModeSpec, n: &Mode, k: &Mode, a: &Term, b: &Term) -> bool {
    !visible(spec, n, k) || observed::term(spec, n, a, b)
}

pub fn equiv_subst(spec: &ModeSpec, n: &Mode, a: &Subst, b: &Subst) -> bool {
    observed::subst(spec, n, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::alpha_eq;

    fn cp() -> ModeSpec {
        ModeSpec::default_spec()
    }

    fn m(s: &str) -> Mode {
        Mode::new(s)
    }

    #[test]
    fn reflexive() {
        let spec = cp();
        let e = Term::store(&m("C"), &m("P"), Term::One(m("C")));
        for n in ["C", "P"] {
            assert!(equiv_term(&spec, &m(n), &m("P"), &e, &e));
        }
    }

    #[test]
    fn hidden_template_bodies_are_ignored() {
        let spec = cp();
        let a = Term::susp(&m("C"), &m("P"), &["x"], Term::var("x"));
        let b = Term::susp(&m("C"), &m("P"), &["y"], Term::One(m("P")));
        assert!(!alpha_eq(&a, &b));
        assert!(equiv_term(&spec, &m("C"), &m("C"), &a, &b));
        assert!(!equiv_term(&spec, &m("P"), &m("C"), &a, &b));
    }

    #[test]
    fn visible_store_bodies_are_compared() {
        let spec = cp();
        let u = Type::Unit(m("C"));
        let app = Term::app(Term::lam("x", u, Term::var("x")), Term::One(m("C")));
        let a = Term::store(&m("C"), &m("P"), Term::One(m("C")));
        let b = Term::store(&m("C"), &m("P"), app);
        assert!(!equiv_term(&spec, &m("P"), &m("P"), &a, &b));
        assert!(equiv_term(&spec, &m("C"), &m("P"), &a, &b));
    }

    #[test]
    fn subjects_at_hidden_modes_are_equivalent() {
        let spec = cp();
        assert!(equiv_term(
            &spec,
            &m("C"),
            &m("P"),
            &Term::One(m("P")),
            &Term::var("z")
        ));
        assert!(equiv_type(
            &spec,
            &m("C"),
            &Type::Unit(m("P")),
            &Type::var("a", &m("P"))
        ));
        assert!(!equiv_type(
            &spec,
            &m("C"),
            &Type::Unit(m("P")),
            &Type::Unit(m("C"))
        ));
    }

    #[test]
    fn hidden_thunk_bodies_are_ignored() {
        let spec = cp();
        let a = Type::ctx_up(&m("C"), &m("P"), Ctx::empty(), Type::Unit(m("P")));
        let b = Type::ctx_up(
            &m("C"),
            &m("P"),
            Ctx::empty(),
            Type::arrow(Type::Unit(m("P")), Type::Unit(m("P"))),
        );
        assert!(equiv_type(&spec, &m("C"), &a, &b));
        assert!(!equiv_type(&spec, &m("P"), &a, &b));
    }

    #[test]
    fn visible_context_spines_compare_exactly() {
        let spec = cp();
        let a: Ctx = Ctx(vec![crate::syntax::Decl::Tm {
            name: crate::syntax::name("x"),
            ty: Type::Unit(m("P")),
        }]);
        let b: Ctx = Ctx(vec![crate::syntax::Decl::Tm {
            name: crate::syntax::name("x"),
            ty: Type::arrow(Type::Unit(m("P")), Type::Unit(m("P"))),
        }]);
        assert!(equiv_context(&spec, &m("C"), &a, &b));
        assert!(!equiv_context(&spec, &m("P"), &a, &b));
        assert!(!equiv_context(&spec, &m("C"), &a, &Ctx::empty()));
    }
}
