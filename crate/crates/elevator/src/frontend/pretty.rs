//! Printing core syntax in the surface grammar. Mode indices of modal
//! terms are omitted; the checker recovers them.

use std::fmt::{self, Display, Write};

use super::ast::{SDecl, SKind, SType, STypeNode};
use crate::syntax::{Branch, Ctx, Decl, Entry, Kind, Neutral, Subst, Term, Type};

fn sep<T>(out: &mut String, items: &[T], s: &str, mut f: impl FnMut(&mut String, &T)) {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(s);
        }
        f(out, x);
    }
}

pub fn kind(out: &mut String, k: &Kind) {
    match k {
        Kind::Type(m) => write!(out, "Type@{m}").unwrap(),
        Kind::CtxUp {
            hi,
            lo,
            ctx: c,
            body,
        } => {
            write!(out, "Up<{hi},{lo}>[").unwrap();
            ctx(out, c);
            out.push_str(" |- ");
            kind(out, body);
            out.push(']');
        }
    }
}

pub fn ctx(out: &mut String, c: &Ctx) {
    sep(out, &c.0, ", ", |out, d| match d {
        Decl::Ty { name, kind: k } => {
            write!(out, "{name} : ").unwrap();
            kind(out, k);
        }
        Decl::Tm { name, ty: t } => {
            write!(out, "{name} : ").unwrap();
            ty(out, t, 0);
        }
    });
}

/// Precedence: 0 forall, 1 arrow, 2 application, 3 atom.
pub fn ty(out: &mut String, t: &Type, prec: u8) {
    let paren = |out: &mut String, need: bool, f: &dyn Fn(&mut String)| {
        if need {
            out.push('(');
        }
        f(out);
        if need {
            out.push(')');
        }
    };
    match t {
        Type::Unit(m) => write!(out, "Unit@{m}").unwrap(),
        Type::Neutral(p, _) => paren(
            out,
            prec > 2 && matches!(p, Neutral::Force { .. }),
            &|out| neutral(out, p),
        ),
        Type::Thunk { names, body, .. } => {
            out.push_str("thunk (");
            binders(out, names);
            ty(out, body, 0);
            out.push(')');
        }
        Type::CtxUp {
            hi,
            lo,
            ctx: c,
            body,
        } => {
            write!(out, "Up<{hi},{lo}>[").unwrap();
            ctx(out, c);
            out.push_str(" |- ");
            ty(out, body, 0);
            out.push(']');
        }
        Type::Down { hi, lo, body } => paren(out, prec > 2, &|out| {
            write!(out, "Down<{hi},{lo}> ").unwrap();
            ty(out, body, 2);
        }),
        Type::Forall { var, kind: k, body } => paren(out, prec > 0, &|out| {
            write!(out, "forall {var} : ").unwrap();
            kind(out, k);
            out.push_str(" . ");
            ty(out, body, 0);
        }),
        Type::Arrow { dom, cod } => paren(out, prec > 1, &|out| {
            ty(out, dom, 2);
            out.push_str(" -> ");
            ty(out, cod, 1);
        }),
        Type::Data { name, mode, args } => paren(out, prec > 2 && !args.is_empty(), &|out| {
            write!(out, "{name}{{{mode}}}").unwrap();
            for a in args {
                out.push(' ');
                ty(out, a, 3);
            }
        }),
    }
}

fn binders(out: &mut String, names: &[crate::syntax::Name]) {
    sep(out, names, ", ", |out, n| out.push_str(n));
    if !names.is_empty() {
        out.push(' ');
    }
    out.push_str(". ");
}

fn neutral(out: &mut String, p: &Neutral) {
    match p {
        Neutral::Var(a) => out.push_str(a),
        Neutral::Force { head, sub: s, .. } => {
            out.push_str("force ");
            neutral(out, head);
            out.push_str(" @ (");
            subst(out, s);
            out.push(')');
        }
    }
}

fn subst(out: &mut String, s: &Subst) {
    sep(out, &s.0, ", ", |out, e| match e {
        Entry::Ty { ty: t, .. } => ty(out, t, 0),
        Entry::Tm { term: e, .. } => term(out, e, 0),
    });
}

fn numeral(e: &Term) -> Option<(u64, &crate::mode_spec::Mode)> {
    match e {
        Term::Ctor {
            data,
            mode,
            ctor,
            args,
            ..
        } if &**data == "Nat" => match (&**ctor, args.as_slice()) {
            ("Zero", []) => Some((0, mode)),
            ("Succ", [n]) => numeral(n)
                .filter(|(_, m)| *m == mode)
                .map(|(k, m)| (k + 1, m)),
            _ => None,
        },
        _ => None,
    }
}

/// Precedence: 0 expression, 1 application, 2 atom.
pub fn term(out: &mut String, e: &Term, prec: u8) {
    let open = |out: &mut String, need: bool| {
        if need {
            out.push('(');
        }
    };
    let close = |out: &mut String, need: bool| {
        if need {
            out.push(')');
        }
    };
    match e {
        Term::Var(x) | Term::Def(x) => out.push_str(x),
        Term::One(m) => write!(out, "unit@{m}").unwrap(),
        Term::Susp { names, body, .. } => {
            out.push_str("susp (");
            binders(out, names);
            term(out, body, 0);
            out.push(')');
        }
        Term::Force { head, sub, .. } => {
            out.push_str("force ");
            term(out, head, 1);
            out.push_str(" @ (");
            subst(out, sub);
            out.push(')');
        }
        Term::Store { body, .. } => {
            let need = prec > 0;
            open(out, need);
            out.push_str("store ");
            let atomic = matches!(&**body, Term::Var(_) | Term::Def(_) | Term::One(_))
                || numeral(body).is_some();
            if atomic {
                term(out, body, 2);
            } else {
                out.push('(');
                term(out, body, 0);
                out.push(')');
            }
            close(out, need);
        }
        Term::Load {
            var, bound, body, ..
        } => {
            let need = prec > 0;
            open(out, need);
            write!(out, "load {var} = ").unwrap();
            term(out, bound, 0);
            out.push_str(" in ");
            term(out, body, 0);
            close(out, need);
        }
        Term::TLam { var, kind: k, body } => {
            let need = prec > 0;
            open(out, need);
            write!(out, "/\\{var} : ").unwrap();
            kind(out, k);
            out.push_str(" . ");
            term(out, body, 0);
            close(out, need);
        }
        Term::TApp { head, arg } => {
            let need = prec > 1;
            open(out, need);
            term(out, head, 1);
            out.push_str(" [");
            ty(out, arg, 0);
            out.push(']');
            close(out, need);
        }
        Term::Lam { var, ann, body } => {
            let need = prec > 0;
            open(out, need);
            write!(out, "\\{var} : ").unwrap();
            ty(out, ann, 0);
            out.push_str(" . ");
            term(out, body, 0);
            close(out, need);
        }
        Term::App { head, arg } => {
            let need = prec > 1;
            open(out, need);
            term(out, head, 1);
            out.push(' ');
            term(out, arg, 2);
            close(out, need);
        }
        Term::Ctor {
            mode, ctor, args, ..
        } => {
            if let Some((n, m)) = numeral(e) {
                write!(out, "{n}@{m}").unwrap();
                return;
            }
            let need = prec > 1 && !args.is_empty();
            open(out, need);
            write!(out, "{ctor}{{{mode}}}").unwrap();
            for a in args {
                out.push(' ');
                term(out, a, 2);
            }
            close(out, need);
        }
        Term::Match {
            scrut, branches, ..
        } => {
            let need = prec > 0;
            open(out, need);
            out.push_str("match ");
            term(out, scrut, 0);
            out.push_str(" with");
            for (i, b) in branches.iter().enumerate() {
                branch(out, b, i + 1 == branches.len());
            }
            close(out, need);
        }
    }
}

fn branch(out: &mut String, b: &Branch, last: bool) {
    write!(out, " | {}", b.ctor).unwrap();
    for x in &b.binders {
        write!(out, " {x}").unwrap();
    }
    out.push_str(" => ");
    term(out, &b.body, if last { 0 } else { 1 });
}

pub fn print_term(e: &Term) -> String {
    let mut s = String::new();
    term(&mut s, e, 0);
    s
}

pub fn print_type(t: &Type) -> String {
    let mut s = String::new();
    ty(&mut s, t, 0);
    s
}

pub fn print_kind(k: &Kind) -> String {
    let mut s = String::new();
    kind(&mut s, k);
    s
}

impl Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

impl Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_kind(self))
    }
}

// ---- surface types, used for data declarations and messages ----

pub fn skind(out: &mut String, k: &SKind) {
    match k {
        SKind::Type(m) => write!(out, "Type@{}", m.name).unwrap(),
        SKind::Up { hi, lo, ctx, body } => {
            write!(out, "Up<{},{}>[", hi.name, lo.name).unwrap();
            sctx(out, ctx);
            out.push_str(" |- ");
            skind(out, body);
            out.push(']');
        }
    }
}

fn sctx(out: &mut String, c: &[SDecl]) {
    sep(out, c, ", ", |out, d| match d {
        SDecl::Ty { name, kind, .. } => {
            write!(out, "{name} : ").unwrap();
            skind(out, kind);
        }
        SDecl::Tm { name, ty, .. } => {
            write!(out, "{name} : ").unwrap();
            sty(out, ty, 0);
        }
    });
}

pub fn sty(out: &mut String, t: &SType, prec: u8) {
    let wrap = |out: &mut String, need: bool, f: &dyn Fn(&mut String)| {
        if need {
            out.push('(');
        }
        f(out);
        if need {
            out.push(')');
        }
    };
    match &t.node {
        STypeNode::Unit(m) => write!(out, "Unit@{}", m.name).unwrap(),
        STypeNode::Var(a) => out.push_str(a),
        STypeNode::Arrow(a, b) => wrap(out, prec > 1, &|out| {
            sty(out, a, 2);
            out.push_str(" -> ");
            sty(out, b, 1);
        }),
        STypeNode::Forall(a, k, b) => wrap(out, prec > 0, &|out| {
            write!(out, "forall {a} : ").unwrap();
            skind(out, k);
            out.push_str(" . ");
            sty(out, b, 0);
        }),
        STypeNode::Up { hi, lo, ctx, body } => {
            write!(out, "Up<{},{}>[", hi.name, lo.name).unwrap();
            sctx(out, ctx);
            out.push_str(" |- ");
            sty(out, body, 0);
            out.push(']');
        }
        STypeNode::Down { hi, lo, body } => wrap(out, prec > 2, &|out| {
            write!(out, "Down<{},{}> ", hi.name, lo.name).unwrap();
            sty(out, body, 2);
        }),
        STypeNode::Force { head, args } => {
            out.push_str("force ");
            sty(out, head, 2);
            out.push_str(" @ (");
            sep(out, args, ", ", |out, a| match (&a.ty, &a.term) {
                (Some(t), _) => sty(out, t, 0),
                (None, Some(_)) => out.push_str("<term>"),
                (None, None) => {}
            });
            out.push(')');
        }
        STypeNode::Thunk { names, body } => {
            out.push_str("thunk (");
            out.push_str(&names.join(", "));
            if !names.is_empty() {
                out.push(' ');
            }
            out.push_str(". ");
            sty(out, body, 0);
            out.push(')');
        }
        STypeNode::Data { name, mode, args } => wrap(out, prec > 2 && !args.is_empty(), &|out| {
            write!(out, "{name}{{{}}}", mode.name).unwrap();
            for a in args {
                out.push(' ');
                sty(out, a, 3);
            }
        }),
    }
}

pub fn print_stype(t: &SType) -> String {
    let mut s = String::new();
    sty(&mut s, t, 0);
    s
}
