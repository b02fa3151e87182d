//! Embedding of core syntax into surface syntax, so that core inputs can
//! be checked by the surface checker.

use crate::frontend::ast::*;
use crate::mode_spec::Mode;
use crate::syntax::{Branch, Decl, Entry, Kind, Neutral, Subst, Term, Type};

fn sm(m: &Mode) -> SMode {
    SMode::new(m.name())
}

fn st(node: STypeNode) -> SType {
    SType::new(node, Span::default())
}

fn se(node: STermNode) -> STerm {
    STerm::new(node, Span::default())
}

pub fn kind(k: &Kind) -> SKind {
    match k {
        Kind::Type(m) => SKind::Type(sm(m)),
        Kind::CtxUp { hi, lo, ctx, body } => SKind::Up {
            hi: sm(hi),
            lo: sm(lo),
            ctx: ctx.iter().map(decl).collect(),
            body: Box::new(kind(body)),
        },
    }
}

pub fn decl(d: &Decl) -> SDecl {
    match d {
        Decl::Ty { name, kind: k } => SDecl::Ty {
            name: name.to_string(),
            kind: kind(k),
            span: Span::default(),
        },
        Decl::Tm { name, ty: t } => SDecl::Tm {
            name: name.to_string(),
            ty: ty(t),
            span: Span::default(),
        },
    }
}

pub fn args(s: &Subst) -> Vec<SArg> {
    s.iter()
        .map(|e| match e {
            Entry::Ty { ty: t, .. } => SArg {
                term: None,
                ty: Some(ty(t)),
                span: Span::default(),
            },
            Entry::Tm { term: e, .. } => SArg {
                term: Some(term(e)),
                ty: None,
                span: Span::default(),
            },
        })
        .collect()
}

pub fn neutral(p: &Neutral) -> SType {
    match p {
        Neutral::Var(a) => st(STypeNode::Var(a.to_string())),
        Neutral::Force { head, sub, .. } => st(STypeNode::Force {
            head: Box::new(neutral(head)),
            args: args(sub),
        }),
    }
}

pub fn ty(t: &Type) -> SType {
    match t {
        Type::Unit(m) => st(STypeNode::Unit(sm(m))),
        Type::Neutral(p, _) => neutral(p),
        Type::Thunk { names, body, .. } => st(STypeNode::Thunk {
            names: names.iter().map(|n| n.to_string()).collect(),
            body: Box::new(ty(body)),
        }),
        Type::CtxUp { hi, lo, ctx, body } => st(STypeNode::Up {
            hi: sm(hi),
            lo: sm(lo),
            ctx: ctx.iter().map(decl).collect(),
            body: Box::new(ty(body)),
        }),
        Type::Down { hi, lo, body } => st(STypeNode::Down {
            hi: sm(hi),
            lo: sm(lo),
            body: Box::new(ty(body)),
        }),
        Type::Forall { var, kind: k, body } => st(STypeNode::Forall(
            var.to_string(),
            kind(k),
            Box::new(ty(body)),
        )),
        Type::Arrow { dom, cod } => st(STypeNode::Arrow(Box::new(ty(dom)), Box::new(ty(cod)))),
        Type::Data { name, mode, args } => st(STypeNode::Data {
            name: name.to_string(),
            mode: sm(mode),
            args: args.iter().map(ty).collect(),
        }),
    }
}

pub fn term(e: &Term) -> STerm {
    let b = |e: &Term| Box::new(term(e));
    match e {
        Term::Var(x) | Term::Def(x) => se(STermNode::Var(x.to_string())),
        Term::One(m) => se(STermNode::Unit(Some(sm(m)))),
        Term::Susp {
            hi,
            lo,
            body,
            ann: Some(ctx),
            ..
        } => se(STermNode::TypedSusp {
            hi: sm(hi),
            lo: sm(lo),
            ctx: ctx.iter().map(decl).collect(),
            body: b(body),
        }),
        Term::Susp { names, body, .. } => se(STermNode::Susp(
            names.iter().map(|n| n.to_string()).collect(),
            b(body),
        )),
        Term::Force { head, sub, .. } => se(STermNode::Force(b(head), args(sub))),
        Term::Store { hi, lo, body } => se(STermNode::TypedStore {
            hi: sm(hi),
            lo: sm(lo),
            body: b(body),
        }),
        Term::Load {
            var, bound, body, ..
        } => se(STermNode::Load(var.to_string(), b(bound), b(body))),
        Term::TLam { var, kind: k, body } => {
            se(STermNode::TLam(var.to_string(), Some(kind(k)), b(body)))
        }
        Term::TApp { head, arg } => se(STermNode::TApp(b(head), ty(arg))),
        Term::Lam { var, ann, body } => se(STermNode::Lam(var.to_string(), Some(ty(ann)), b(body))),
        Term::App { head, arg } => se(STermNode::App(b(head), b(arg))),
        Term::Ctor {
            mode,
            ctor,
            args,
            targs,
            ..
        } => se(STermNode::Ctor {
            name: ctor.to_string(),
            mode: Some(sm(mode)),
            args: args.iter().map(term).collect(),
            targs: targs.iter().map(ty).collect(),
        }),
        Term::Match {
            scrut, branches, ..
        } => se(STermNode::Match(
            b(scrut),
            branches.iter().map(branch).collect(),
        )),
    }
}

fn branch(b: &Branch) -> SBranch {
    SBranch {
        ctor: b.ctor.to_string(),
        binders: b.binders.iter().map(|n| n.to_string()).collect(),
        body: term(&b.body),
        span: Span::default(),
    }
}
