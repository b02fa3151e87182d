//! Well-formedness of contexts, kinds and types, bidirectional checking
//! of terms and substitutions, and elaboration of surface modules.

mod checker;
pub mod embed;
mod error;
mod signature;

pub use error::{ErrorCode, TypingError};
pub use signature::{CtorDecl, DataDecl, DefEntry, Signature};

use checker::Checker;

use crate::frontend::ast::{Item, SData, STerm, SurfaceModule};
use crate::frontend::{parse_module, PRELUDE};
use crate::mode_spec::{Mode, ModeSpec};
use crate::subst::{Usage, UsageMask};
pub use crate::syntax::count_occurrences;
use crate::syntax::{alpha_eq, name, Ctx, Decl, Kind, Name, Neutral, Subst, Term, Type};

use ErrorCode::*;

type R<T> = Result<T, TypingError>;

/// Everything a term judgment depends on.
#[derive(Clone, Debug)]
pub struct CheckState<'a> {
    pub ctx: Ctx,
    /// One flag per term declaration of `ctx`.
    pub usage: UsageMask,
    pub mode: Mode,
    pub spec: &'a ModeSpec,
    pub sig: &'a Signature,
}

impl<'a> CheckState<'a> {
    pub fn new(spec: &'a ModeSpec, sig: &'a Signature, ctx: Ctx, mode: Mode) -> CheckState<'a> {
        let n = ctx.iter().filter(|d| d.is_term()).count();
        CheckState {
            ctx,
            usage: UsageMask::available(n),
            mode,
            spec,
            sig,
        }
    }

    fn checker(&self) -> Checker<'a> {
        let mut ck = Checker::new(self.spec, self.sig);
        let mut flags = self.usage.0.iter();
        for d in self.ctx.iter() {
            let used = d.is_term() && flags.next() == Some(&Usage::Consumed);
            ck.push_core(d.clone(), used);
        }
        ck.hide_below(&self.mode);
        ck
    }
}

fn mask(ck: &Checker<'_>, n: usize) -> UsageMask {
    UsageMask(
        ck.usage(n)
            .into_iter()
            .map(|u| if u { Usage::Consumed } else { Usage::Available })
            .collect(),
    )
}

fn core_checker<'a>(spec: &'a ModeSpec, sig: &'a Signature, ctx: &Ctx) -> Checker<'a> {
    let mut ck = Checker::new(spec, sig);
    for d in ctx.iter() {
        ck.push_core(d.clone(), false);
    }
    ck
}

pub fn wf_context(spec: &ModeSpec, sig: &Signature, ctx: &Ctx) -> R<()> {
    let decls: Vec<_> = ctx.iter().map(embed::decl).collect();
    Checker::new(spec, sig).elab_context(&decls).map(|_| ())
}

pub fn wf_kind(spec: &ModeSpec, sig: &Signature, ctx: &Ctx, k: &Kind) -> R<()> {
    let mut ck = core_checker(spec, sig, ctx);
    ck.hide_below(k.mode());
    ck.elab_kind(&embed::kind(k)).map(|_| ())
}

/// Checks that `a` has kind `k`. The type must already be normal.
pub fn check_type(spec: &ModeSpec, sig: &Signature, ctx: &Ctx, a: &Type, k: &Kind) -> R<()> {
    let mut ck = core_checker(spec, sig, ctx);
    ck.hide_below(k.mode());
    let (t, _) = ck.elab_type(&embed::ty(a), Some(k))?;
    if !alpha_eq(&t, a) {
        return Err(TypingError::new(
            KindMismatch,
            format!("type {a} is not in eta-long normal form; expected {t}"),
        ));
    }
    Ok(())
}

pub fn synth_neutral_type(spec: &ModeSpec, sig: &Signature, ctx: &Ctx, p: &Neutral) -> R<Kind> {
    let mut ck = core_checker(spec, sig, ctx);
    Ok(ck.elab_type(&embed::neutral(p), None)?.1)
}

pub fn check_term(st: &CheckState<'_>, e: &Term, a: &Type) -> R<(Term, UsageMask)> {
    let mut ck = st.checker();
    let t = ck.check(&embed::term(e), a)?;
    Ok((t, mask(&ck, st.ctx.len())))
}

pub fn synth_term(st: &CheckState<'_>, e: &Term) -> R<(Type, Term, UsageMask)> {
    let mut ck = st.checker();
    let (t, ty) = ck.synth(&embed::term(e))?;
    Ok((ty, t, mask(&ck, st.ctx.len())))
}

/// Checks `sigma` against `psi`. Usage is reported over the context.
pub fn check_subst(st: &CheckState<'_>, sigma: &Subst, psi: &Ctx) -> R<UsageMask> {
    let mut ck = st.checker();
    let args = embed::args(sigma);
    ck.check_args(&args, psi, Default::default())?;
    Ok(mask(&ck, st.ctx.len()))
}

/// Checks surface terms against the signature, e.g. at the REPL.
pub fn check_surface(spec: &ModeSpec, sig: &Signature, e: &STerm, a: &Type) -> R<Term> {
    Checker::new(spec, sig).check(e, a)
}

pub fn synth_surface(spec: &ModeSpec, sig: &Signature, e: &STerm) -> R<(Term, Type)> {
    Checker::new(spec, sig).synth(e)
}

pub fn elab_surface_type(
    spec: &ModeSpec,
    sig: &Signature,
    t: &crate::frontend::ast::SType,
) -> R<Type> {
    let (ty, k) = Checker::new(spec, sig).elab_type(t, None)?;
    match k {
        Kind::Type(_) => Ok(ty),
        k => Err(TypingError::at(
            KindMismatch,
            t.span,
            format!("expected a type, found kind {k}"),
        )),
    }
}

fn declare_data(spec: &ModeSpec, sig: &mut Signature, d: &SData, prelude: bool) -> R<()> {
    let dup = |what: &str, n: &str| {
        TypingError::at(ElabError, d.span, format!("{what} `{n}` is declared twice"))
    };
    if sig.data(&d.name).is_some() {
        return Err(dup("data type", &d.name));
    }
    for (i, c) in d.ctors.iter().enumerate() {
        if sig.ctor(&c.name).is_some() || d.ctors[..i].iter().any(|x| x.name == c.name) {
            return Err(dup("constructor", &c.name));
        }
    }
    for (i, p) in d.params.iter().enumerate() {
        if d.params[..i].contains(p) {
            return Err(dup("parameter", p));
        }
    }
    let params: Vec<Name> = d.params.iter().map(|p| name(p)).collect();
    let mut decl = DataDecl {
        name: name(&d.name),
        mode_param: d.mode_param.clone(),
        params: params.clone(),
        ctors: d
            .ctors
            .iter()
            .map(|c| signature::CtorDecl {
                name: name(&c.name),
                arity: c.args.len(),
            })
            .collect(),
        source: d.clone(),
        prelude,
        instances: Default::default(),
        unavailable: Default::default(),
    };
    let mut first_err = None;
    for m in spec.modes() {
        let mut ck = Checker::new(spec, sig);
        ck.declaring = Some((d.name.clone(), params.len()));
        for p in &params {
            ck.push_core(
                Decl::Ty {
                    name: p.clone(),
                    kind: Kind::Type(m.clone()),
                },
                false,
            );
        }
        let r: R<Vec<Vec<Type>>> = d
            .ctors
            .iter()
            .map(|c| {
                c.args
                    .iter()
                    .map(|a| {
                        let a = a.rename_mode(&d.mode_param, m.name());
                        ck.elab_type(&a, Some(&Kind::Type(m.clone()))).map(|p| p.0)
                    })
                    .collect()
            })
            .collect();
        match r {
            Ok(v) => {
                decl.instances.insert(m.clone(), v);
            }
            Err(e) => {
                first_err.get_or_insert_with(|| e.clone());
                decl.unavailable.insert(m.clone(), e);
            }
        }
    }
    if decl.instances.is_empty() {
        return Err(first_err.unwrap_or_else(|| {
            TypingError::at(
                ElabError,
                d.span,
                format!("`{}` is not well formed at any mode", d.name),
            )
        }));
    }
    sig.push_data(decl);
    Ok(())
}

/// Resolves names, normalizes types and checks every definition of `m`
/// together with the prelude.
pub fn elaborate(m: &SurfaceModule, spec: &ModeSpec) -> R<Signature> {
    let prelude = parse_module(PRELUDE).expect("the prelude parses");
    let mut sig = Signature::default();
    for (items, is_prelude) in [(&prelude.items, true), (&m.items, false)] {
        for item in items {
            if let Item::Data(d) = item {
                declare_data(spec, &mut sig, d, is_prelude)?;
            }
        }
    }
    let defs: Vec<_> = m
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Def(d) => Some(d),
            _ => None,
        })
        .collect();
    for d in &defs {
        if sig.def(&d.name).is_some() {
            return Err(TypingError::at(
                ElabError,
                d.span,
                format!("definition `{}` is declared twice", d.name),
            ));
        }
        let ty = elab_surface_type(spec, &sig, &d.ty).map_err(|e| e.in_def(&d.name))?;
        sig.push_def(DefEntry {
            name: name(&d.name),
            ty,
            body: Term::Def(name(&d.name)),
            span: d.span,
        });
    }
    let mut bodies = Vec::with_capacity(defs.len());
    for (i, d) in defs.iter().enumerate() {
        let mut ck = Checker::new(spec, &sig);
        ck.def_limit = i;
        ck.current = Some(i);
        let ty = sig.defs()[i].ty.clone();
        bodies.push(ck.check(&d.body, &ty).map_err(|e| e.in_def(&d.name))?);
    }
    for (i, b) in bodies.into_iter().enumerate() {
        sig.set_body(i, b);
    }
    Ok(sig)
}

/// Re-checks every definition of an elaborated signature.
pub fn check_signature(sig: &Signature, spec: &ModeSpec) -> R<Signature> {
    let mut out = sig.clone();
    for (i, d) in sig.defs().iter().enumerate() {
        check_type(
            spec,
            sig,
            &Ctx::empty(),
            &d.ty,
            &Kind::Type(d.ty.mode().clone()),
        )
        .map_err(|e| e.in_def(&d.name))?;
        let mut ck = Checker::new(spec, sig);
        ck.def_limit = i;
        ck.current = Some(i);
        let body = ck
            .check(&embed::term(&d.body), &d.ty)
            .map_err(|e| e.in_def(&d.name))?;
        out.set_body(i, body);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::rc::Rc;

    use crate::syntax::{Entry, Term};

    fn cpgf() -> ModeSpec {
        ModeSpec::from_json(
            r#"{"modes":["C","P","GF"],"order":[["C","P"],["P","GF"]],
                "signatures":{"C":["C","W"],"P":["C","W"],"GF":[]}}"#,
        )
        .unwrap()
    }

    fn m(s: &str) -> Mode {
        Mode::new(s)
    }

    fn ty(a: &str, k: &str) -> Decl {
        Decl::Ty {
            name: name(a),
            kind: Kind::Type(m(k)),
        }
    }

    fn tm(x: &str, t: Type) -> Decl {
        Decl::Tm {
            name: name(x),
            ty: t,
        }
    }

    #[test]
    fn context_formation() {
        let (spec, sig) = (cpgf(), Signature::default());
        assert!(wf_context(&spec, &sig, &Ctx::empty()).is_ok());
        let ok = Ctx(vec![ty("a", "P"), tm("x", Type::var("a", &m("P")))]);
        wf_context(&spec, &sig, &ok).unwrap();
        let hidden = Type::ctx_up(&m("C"), &m("GF"), Ctx::empty(), Type::var("a", &m("GF")));
        let bad = Ctx(vec![ty("a", "GF"), tm("y", hidden)]);
        assert_eq!(
            wf_context(&spec, &sig, &bad).unwrap_err().code,
            ModeAccessViolation
        );
    }

    #[test]
    fn kind_formation() {
        let (spec, sig) = (cpgf(), Signature::default());
        assert!(wf_kind(&spec, &sig, &Ctx::empty(), &Kind::Type(m("GF"))).is_ok());
        let up = Kind::CtxUp {
            hi: m("C"),
            lo: m("GF"),
            ctx: Ctx(vec![ty("a", "P")]),
            body: Rc::new(Kind::Type(m("GF"))),
        };
        assert!(wf_kind(&spec, &sig, &Ctx::empty(), &up).is_ok());
        let wrong = Kind::CtxUp {
            hi: m("GF"),
            lo: m("C"),
            ctx: Ctx::empty(),
            body: Rc::new(Kind::Type(m("C"))),
        };
        let e = wf_kind(&spec, &sig, &Ctx::empty(), &wrong).unwrap_err();
        assert_eq!(e.code, ModeAccessViolation);
    }

    #[test]
    fn type_formation_counts_no_usage() {
        let (spec, sig) = (cpgf(), Signature::default());
        let gf = m("GF");
        assert!(check_type(
            &spec,
            &sig,
            &Ctx::empty(),
            &Type::Unit(gf.clone()),
            &Kind::Type(gf.clone())
        )
        .is_ok());
        let up = Kind::CtxUp {
            hi: m("P"),
            lo: gf.clone(),
            ctx: Ctx::empty(),
            body: Rc::new(Kind::Type(gf.clone())),
        };
        let body = Type::Neutral(
            Neutral::Force {
                head: Rc::new(Neutral::Var(name("a"))),
                sub: Subst::empty(),
                hi: m("P"),
                lo: gf.clone(),
            },
            gf.clone(),
        );
        let all = Type::Forall {
            var: name("a"),
            kind: Rc::new(up),
            body: Rc::new(Type::arrow(body.clone(), body)),
        };
        assert!(check_type(&spec, &sig, &Ctx::empty(), &all, &Kind::Type(gf.clone())).is_ok());
        let twice = Type::arrow(Type::var("a", &gf), Type::var("a", &gf));
        assert!(check_type(
            &spec,
            &sig,
            &Ctx(vec![ty("a", "GF")]),
            &twice,
            &Kind::Type(gf)
        )
        .is_ok());
    }

    #[test]
    fn variables_are_consumed() {
        let (spec, sig) = (cpgf(), Signature::default());
        let a = Type::Unit(m("GF"));
        let st = CheckState::new(&spec, &sig, Ctx(vec![tm("x", a.clone())]), m("GF"));
        let (t, _, u) = synth_term(&st, &Term::var("x")).unwrap();
        assert!(alpha_eq(&t, &a));
        assert_eq!(u.0, vec![Usage::Consumed]);
        let hidden = CheckState::new(&spec, &sig, Ctx(vec![tm("x", a)]), m("P"));
        assert_eq!(
            synth_term(&hidden, &Term::var("x")).unwrap_err().code,
            ModeAccessViolation
        );
    }

    #[test]
    fn linear_modes_reject_discarding_and_duplication() {
        let (spec, sig) = (cpgf(), Signature::default());
        let gf = m("GF");
        let one = Type::Unit(gf.clone());
        let st = CheckState::new(&spec, &sig, Ctx::empty(), gf.clone());
        let drop = Term::lam("x", one.clone(), Term::One(gf.clone()));
        let e = check_term(&st, &drop, &Type::arrow(one.clone(), one.clone())).unwrap_err();
        assert_eq!(e.code, WeakeningViolation);
        let f_ty = Type::arrow(one.clone(), one.clone());
        let twice = Term::lam(
            "f",
            f_ty.clone(),
            Term::lam(
                "y",
                one.clone(),
                Term::app(Term::var("f"), Term::app(Term::var("f"), Term::var("y"))),
            ),
        );
        let e = check_term(
            &st,
            &twice,
            &Type::arrow(f_ty, Type::arrow(one.clone(), one)),
        )
        .unwrap_err();
        assert_eq!(e.code, LinearityViolation);
        assert!(e.message.contains("`f`"));
    }

    #[test]
    fn substitutions_thread_usage() {
        let (spec, sig) = (cpgf(), Signature::default());
        let st = CheckState::new(&spec, &sig, Ctx::empty(), m("GF"));
        assert!(check_subst(&st, &Subst::empty(), &Ctx::empty())
            .unwrap()
            .0
            .is_empty());
        let sigma = Subst(vec![Entry::Ty {
            name: name("a"),
            ty: Type::Unit(m("P")),
            kind: crate::syntax::DfKind::Type(m("P")),
        }]);
        let st = CheckState::new(&spec, &sig, Ctx(vec![tm("z", Type::Unit(m("C")))]), m("GF"));
        let u = check_subst(&st, &sigma, &Ctx(vec![ty("a", "P")])).unwrap();
        assert_eq!(u.0, vec![Usage::Available]);
        let one = Type::Unit(m("GF"));
        let st = CheckState::new(&spec, &sig, Ctx(vec![tm("y", one.clone())]), m("GF"));
        let entry = |x: &str| Entry::Tm {
            name: name(x),
            term: Term::var("y"),
            mode: m("GF"),
        };
        let psi = Ctx(vec![tm("x", one.clone()), tm("z", one)]);
        let e = check_subst(&st, &Subst(vec![entry("x"), entry("z")]), &psi).unwrap_err();
        assert_eq!(e.code, LinearityViolation);
    }

    #[test]
    fn recursion_policy_gates_self_reference() {
        let src = "def loop : Unit@GF -o Unit@GF = \\x. loop x";
        let module = parse_module(src).unwrap();
        assert_eq!(
            elaborate(&module, &cpgf()).unwrap_err().code,
            RecursionForbidden
        );
        let module = parse_module("def id : Unit@GF -o Unit@GF = \\x. x").unwrap();
        assert!(elaborate(&module, &cpgf()).is_ok());
    }

    #[test]
    fn type_application_substitutes_hereditarily() {
        let src = "def id : forall a : Type@P . a -> a = /\\a. \\x. x\n\
                   def u : Unit@P = id [Unit@P] unit";
        let sig = elaborate(&parse_module(src).unwrap(), &cpgf()).unwrap();
        let (_, d) = sig.def("u").unwrap();
        assert_eq!(d.body.to_string(), "id [Unit@P] unit@P");
    }
}
