//! Core syntax: kinds, normal and neutral types, elaborated terms, typed
//! and dependency-free contexts, and explicit substitutions.

mod alpha;
mod free;

use std::rc::Rc;

pub(crate) use alpha::observed;
pub use alpha::{alpha_eq, alpha_eq_subst, Alpha};
pub use free::{
    count_occurrences, free_names_kind, free_names_subst, free_names_term, free_names_type,
    fresh_name,
};

use crate::mode_spec::Mode;

pub type Name = Rc<str>;

pub fn name(s: &str) -> Name {
    Rc::from(s)
}

#[derive(Clone, Debug)]
pub enum Kind {
    Type(Mode),
    CtxUp {
        hi: Mode,
        lo: Mode,
        ctx: Ctx,
        body: Rc<Kind>,
    },
}

impl Kind {
    pub fn mode(&self) -> &Mode {
        match self {
            Kind::Type(k) => k,
            Kind::CtxUp { hi, .. } => hi,
        }
    }
}

/// Normal types. A force whose head is a thunk is not representable:
/// `Neutral` heads are `NeutralType`s.
#[derive(Clone, Debug)]
pub enum Type {
    Unit(Mode),
    Neutral(Neutral, Mode),
    /// A type-level template. `hi` is the mode of the classifying kind.
    Thunk {
        hi: Mode,
        names: Vec<Name>,
        body: Rc<Type>,
    },
    CtxUp {
        hi: Mode,
        lo: Mode,
        ctx: Ctx,
        body: Rc<Type>,
    },
    Down {
        hi: Mode,
        lo: Mode,
        body: Rc<Type>,
    },
    Forall {
        var: Name,
        kind: Rc<Kind>,
        body: Rc<Type>,
    },
    Arrow {
        dom: Rc<Type>,
        cod: Rc<Type>,
    },
    Data {
        name: Name,
        mode: Mode,
        args: Vec<Type>,
    },
}

impl Type {
    /// The mode of the judgment classifying this type.
    pub fn mode(&self) -> &Mode {
        match self {
            Type::Unit(k) | Type::Neutral(_, k) => k,
            Type::Thunk { hi, .. } => hi,
            Type::CtxUp { hi, .. } => hi,
            Type::Down { lo, .. } => lo,
            Type::Forall { body, .. } => body.mode(),
            Type::Arrow { dom, .. } => dom.mode(),
            Type::Data { mode, .. } => mode,
        }
    }

    pub fn var(a: &str, k: &Mode) -> Type {
        Type::Neutral(Neutral::Var(name(a)), k.clone())
    }

    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow {
            dom: Rc::new(dom),
            cod: Rc::new(cod),
        }
    }

    pub fn down(hi: &Mode, lo: &Mode, body: Type) -> Type {
        Type::Down {
            hi: hi.clone(),
            lo: lo.clone(),
            body: Rc::new(body),
        }
    }

    pub fn ctx_up(hi: &Mode, lo: &Mode, ctx: Ctx, body: Type) -> Type {
        Type::CtxUp {
            hi: hi.clone(),
            lo: lo.clone(),
            ctx,
            body: Rc::new(body),
        }
    }

    pub fn data(n: &str, mode: &Mode, args: Vec<Type>) -> Type {
        Type::Data {
            name: name(n),
            mode: mode.clone(),
            args,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Neutral {
    Var(Name),
    Force {
        head: Rc<Neutral>,
        sub: Subst,
        hi: Mode,
        lo: Mode,
    },
}

impl Neutral {
    pub fn head_var(&self) -> &Name {
        match self {
            Neutral::Var(a) => a,
            Neutral::Force { head, .. } => head.head_var(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Decl {
    Ty { name: Name, kind: Kind },
    Tm { name: Name, ty: Type },
}

impl Decl {
    pub fn name(&self) -> &Name {
        match self {
            Decl::Ty { name, .. } | Decl::Tm { name, .. } => name,
        }
    }

    pub fn mode(&self) -> &Mode {
        match self {
            Decl::Ty { kind, .. } => kind.mode(),
            Decl::Tm { ty, .. } => ty.mode(),
        }
    }

    pub fn is_term(&self) -> bool {
        matches!(self, Decl::Tm { .. })
    }
}

/// An ordered typed context.
#[derive(Clone, Debug, Default)]
pub struct Ctx(pub Vec<Decl>);

impl Ctx {
    pub fn empty() -> Ctx {
        Ctx(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Decl> {
        self.0.iter()
    }
}

#[derive(Clone, Debug)]
pub enum Entry {
    /// A type entry. `kind` is the dependency-free kind of the target
    /// declaration, the measure used when the entry is substituted.
    Ty {
        name: Name,
        ty: Type,
        kind: DfKind,
    },
    Tm {
        name: Name,
        term: Term,
        mode: Mode,
    },
}

impl Entry {
    pub fn name(&self) -> &Name {
        match self {
            Entry::Ty { name, .. } | Entry::Tm { name, .. } => name,
        }
    }

    pub fn with_name(&self, n: Name) -> Entry {
        match self {
            Entry::Ty { ty, kind, .. } => Entry::Ty {
                name: n,
                ty: ty.clone(),
                kind: kind.clone(),
            },
            Entry::Tm { term, mode, .. } => Entry::Tm {
                name: n,
                term: term.clone(),
                mode: mode.clone(),
            },
        }
    }

    pub fn mode(&self) -> &Mode {
        match self {
            Entry::Ty { kind, .. } => kind.mode(),
            Entry::Tm { mode, .. } => mode,
        }
    }
}

/// A parallel substitution, ordered like the context it instantiates.
#[derive(Clone, Debug, Default)]
pub struct Subst(pub Vec<Entry>);

impl Subst {
    pub fn empty() -> Subst {
        Subst(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Entry> {
        self.0.iter()
    }

    /// The measure context recorded in the entries.
    pub fn measure(&self) -> DfCtx {
        DfCtx(
            self.0
                .iter()
                .map(|e| match e {
                    Entry::Ty { name, kind, .. } => DfDecl::Ty(name.clone(), kind.clone()),
                    Entry::Tm { name, .. } => DfDecl::Tm(name.clone()),
                })
                .collect(),
        )
    }

    /// The same entries keyed positionally by `names`.
    pub fn renamed(&self, names: &[Name]) -> Subst {
        Subst(
            self.0
                .iter()
                .zip(names)
                .map(|(e, n)| e.with_name(n.clone()))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DfKind {
    Type(Mode),
    CtxUp {
        hi: Mode,
        lo: Mode,
        ctx: DfCtx,
        body: Rc<DfKind>,
    },
}

impl DfKind {
    pub fn mode(&self) -> &Mode {
        match self {
            DfKind::Type(k) => k,
            DfKind::CtxUp { hi, .. } => hi,
        }
    }

    /// Number of constructors, the structural size used by the
    /// termination measure.
    pub fn size(&self) -> usize {
        match self {
            DfKind::Type(_) => 1,
            DfKind::CtxUp { ctx, body, .. } => 1 + ctx.size() + body.size(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DfDecl {
    Ty(Name, DfKind),
    Tm(Name),
}

impl DfDecl {
    pub fn name(&self) -> &Name {
        match self {
            DfDecl::Ty(n, _) | DfDecl::Tm(n) => n,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DfCtx(pub Vec<DfDecl>);

impl DfCtx {
    pub fn empty() -> DfCtx {
        DfCtx(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn size(&self) -> usize {
        self.0
            .iter()
            .map(|d| match d {
                DfDecl::Ty(_, k) => 1 + k.size(),
                DfDecl::Tm(_) => 1,
            })
            .sum()
    }

    pub fn lookup(&self, n: &str) -> Option<&DfDecl> {
        self.0.iter().rev().find(|d| &**d.name() == n)
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub ctor: Name,
    pub binders: Vec<Name>,
    pub body: Term,
}

/// Elaborated terms: every modal construct carries both mode indices.
#[derive(Clone, Debug)]
pub enum Term {
    Var(Name),
    One(Mode),
    /// `ann` is the typed template context when known; its names agree
    /// with `names`. Equivalence ignores it.
    Susp {
        hi: Mode,
        lo: Mode,
        names: Vec<Name>,
        body: Rc<Term>,
        ann: Option<Ctx>,
    },
    Force {
        hi: Mode,
        lo: Mode,
        head: Rc<Term>,
        sub: Subst,
    },
    Store {
        hi: Mode,
        lo: Mode,
        body: Rc<Term>,
    },
    Load {
        hi: Mode,
        lo: Mode,
        var: Name,
        bound: Rc<Term>,
        body: Rc<Term>,
    },
    TLam {
        var: Name,
        kind: Kind,
        body: Rc<Term>,
    },
    TApp {
        head: Rc<Term>,
        arg: Type,
    },
    Lam {
        var: Name,
        ann: Type,
        body: Rc<Term>,
    },
    App {
        head: Rc<Term>,
        arg: Rc<Term>,
    },
    /// `targs` are the type arguments of the data type, ignored by
    /// equivalence.
    Ctor {
        data: Name,
        mode: Mode,
        ctor: Name,
        args: Vec<Term>,
        targs: Vec<Type>,
    },
    /// `mode` is the data mode of the scrutinee.
    Match {
        mode: Mode,
        scrut: Rc<Term>,
        branches: Vec<Branch>,
    },
    Def(Name),
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(name(x))
    }

    pub fn lam(x: &str, ann: Type, body: Term) -> Term {
        Term::Lam {
            var: name(x),
            ann,
            body: Rc::new(body),
        }
    }

    pub fn app(head: Term, arg: Term) -> Term {
        Term::App {
            head: Rc::new(head),
            arg: Rc::new(arg),
        }
    }

    pub fn tapp(head: Term, arg: Type) -> Term {
        Term::TApp {
            head: Rc::new(head),
            arg,
        }
    }

    pub fn store(hi: &Mode, lo: &Mode, body: Term) -> Term {
        Term::Store {
            hi: hi.clone(),
            lo: lo.clone(),
            body: Rc::new(body),
        }
    }

    pub fn load(hi: &Mode, lo: &Mode, x: &str, bound: Term, body: Term) -> Term {
        Term::Load {
            hi: hi.clone(),
            lo: lo.clone(),
            var: name(x),
            bound: Rc::new(bound),
            body: Rc::new(body),
        }
    }

    pub fn susp(hi: &Mode, lo: &Mode, names: &[&str], body: Term) -> Term {
        Term::Susp {
            hi: hi.clone(),
            lo: lo.clone(),
            names: names.iter().map(|n| name(n)).collect(),
            body: Rc::new(body),
            ann: None,
        }
    }

    pub fn force(hi: &Mode, lo: &Mode, head: Term, sub: Subst) -> Term {
        Term::Force {
            hi: hi.clone(),
            lo: lo.clone(),
            head: Rc::new(head),
            sub,
        }
    }

    /// Number of syntax nodes, counting embedded types and substitutions.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::One(_) | Term::Def(_) => 1,
            Term::Susp { body, .. } | Term::Store { body, .. } => 1 + body.size(),
            Term::Force { head, sub, .. } => 1 + head.size() + subst_size(sub),
            Term::Load { bound, body, .. } => 1 + bound.size() + body.size(),
            Term::TLam { kind, body, .. } => 1 + kind_size(kind) + body.size(),
            Term::TApp { head, arg } => 1 + head.size() + arg.size(),
            Term::Lam { ann, body, .. } => 1 + ann.size() + body.size(),
            Term::App { head, arg } => 1 + head.size() + arg.size(),
            Term::Ctor { args, .. } => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Match {
                scrut, branches, ..
            } => 1 + scrut.size() + branches.iter().map(|b| b.body.size()).sum::<usize>(),
        }
    }
}

fn kind_size(k: &Kind) -> usize {
    match k {
        Kind::Type(_) => 1,
        Kind::CtxUp { ctx, body, .. } => 1 + ctx_size(ctx) + kind_size(body),
    }
}

fn ctx_size(c: &Ctx) -> usize {
    c.iter()
        .map(|d| match d {
            Decl::Ty { kind, .. } => 1 + kind_size(kind),
            Decl::Tm { ty, .. } => 1 + ty.size(),
        })
        .sum()
}

fn subst_size(s: &Subst) -> usize {
    s.iter()
        .map(|e| match e {
            Entry::Ty { ty, .. } => 1 + ty.size(),
            Entry::Tm { term, .. } => 1 + term.size(),
        })
        .sum()
}

fn neutral_size(p: &Neutral) -> usize {
    match p {
        Neutral::Var(_) => 1,
        Neutral::Force { head, sub, .. } => 1 + neutral_size(head) + subst_size(sub),
    }
}

impl Type {
    pub fn size(&self) -> usize {
        match self {
            Type::Unit(_) => 1,
            Type::Neutral(p, _) => 1 + neutral_size(p),
            Type::Thunk { body, .. } | Type::Down { body, .. } => 1 + body.size(),
            Type::CtxUp { ctx, body, .. } => 1 + ctx_size(ctx) + body.size(),
            Type::Forall { kind, body, .. } => 1 + kind_size(kind) + body.size(),
            Type::Arrow { dom, cod } => 1 + dom.size() + cod.size(),
            Type::Data { args, .. } => 1 + args.iter().map(Type::size).sum::<usize>(),
        }
    }

    /// True iff no force in the type has a thunk head. Always true by
    /// construction; kept as an executable check of the representation.
    pub fn is_normal(&self) -> bool {
        fn kind_ok(k: &Kind) -> bool {
            match k {
                Kind::Type(_) => true,
                Kind::CtxUp { ctx, body, .. } => ctx_ok(ctx) && kind_ok(body),
            }
        }
        fn ctx_ok(c: &Ctx) -> bool {
            c.iter().all(|d| match d {
                Decl::Ty { kind, .. } => kind_ok(kind),
                Decl::Tm { ty, .. } => ty.is_normal(),
            })
        }
        fn neutral_ok(p: &Neutral) -> bool {
            match p {
                Neutral::Var(_) => true,
                Neutral::Force { head, sub, .. } => {
                    neutral_ok(head)
                        && sub.iter().all(|e| match e {
                            Entry::Ty { ty, .. } => ty.is_normal(),
                            Entry::Tm { .. } => true,
                        })
                }
            }
        }
        match self {
            Type::Unit(_) => true,
            Type::Neutral(p, _) => neutral_ok(p),
            Type::Thunk { body, .. } | Type::Down { body, .. } => body.is_normal(),
            Type::CtxUp { ctx, body, .. } => ctx_ok(ctx) && body.is_normal(),
            Type::Forall { kind, body, .. } => kind_ok(kind) && body.is_normal(),
            Type::Arrow { dom, cod } => dom.is_normal() && cod.is_normal(),
            Type::Data { args, .. } => args.iter().all(Type::is_normal),
        }
    }
}

pub fn erase_kind(k: &Kind) -> DfKind {
    match k {
        Kind::Type(m) => DfKind::Type(m.clone()),
        Kind::CtxUp { hi, lo, ctx, body } => DfKind::CtxUp {
            hi: hi.clone(),
            lo: lo.clone(),
            ctx: erase_context(ctx),
            body: Rc::new(erase_kind(body)),
        },
    }
}

pub fn erase_context(c: &Ctx) -> DfCtx {
    DfCtx(
        c.iter()
            .map(|d| match d {
                Decl::Ty { name, kind } => DfDecl::Ty(name.clone(), erase_kind(kind)),
                Decl::Tm { name, .. } => DfDecl::Tm(name.clone()),
            })
            .collect(),
    )
}

pub fn names_of(c: &Ctx) -> Vec<Name> {
    c.iter().map(|d| d.name().clone()).collect()
}

/// Embeds a dependency-free kind back as a kind. Term declarations get a
/// unit type at mode `lo`.
pub fn embed_df_kind(k: &DfKind) -> Kind {
    match k {
        DfKind::Type(m) => Kind::Type(m.clone()),
        DfKind::CtxUp { hi, lo, ctx, body } => Kind::CtxUp {
            hi: hi.clone(),
            lo: lo.clone(),
            ctx: Ctx(ctx
                .0
                .iter()
                .map(|d| match d {
                    DfDecl::Ty(n, k) => Decl::Ty {
                        name: n.clone(),
                        kind: embed_df_kind(k),
                    },
                    DfDecl::Tm(n) => Decl::Tm {
                        name: n.clone(),
                        ty: Type::Unit(lo.clone()),
                    },
                })
                .collect()),
            body: Rc::new(embed_df_kind(body)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Mode {
        Mode::new(s)
    }

    #[test]
    fn erasure_of_type_is_identity() {
        assert_eq!(erase_kind(&Kind::Type(m("k"))), DfKind::Type(m("k")));
    }

    #[test]
    fn erasure_keeps_kinds_and_drops_term_types() {
        let ctx = Ctx(vec![
            Decl::Ty {
                name: name("a"),
                kind: Kind::Type(m("P")),
            },
            Decl::Tm {
                name: name("x"),
                ty: Type::var("a", &m("P")),
            },
        ]);
        let k = Kind::CtxUp {
            hi: m("C"),
            lo: m("P"),
            ctx: ctx.clone(),
            body: Rc::new(Kind::Type(m("P"))),
        };
        let erased = erase_context(&ctx);
        assert_eq!(
            erased,
            DfCtx(vec![
                DfDecl::Ty(name("a"), DfKind::Type(m("P"))),
                DfDecl::Tm(name("x"))
            ])
        );
        assert_eq!(
            erase_kind(&k),
            DfKind::CtxUp {
                hi: m("C"),
                lo: m("P"),
                ctx: erased,
                body: Rc::new(DfKind::Type(m("P")))
            }
        );
        assert_eq!(erase_context(&Ctx::empty()), DfCtx::empty());
        let empty_up = Kind::CtxUp {
            hi: m("C"),
            lo: m("P"),
            ctx: Ctx::empty(),
            body: Rc::new(Kind::Type(m("P"))),
        };
        assert!(matches!(erase_kind(&empty_up), DfKind::CtxUp { ref ctx, .. } if ctx.is_empty()));
    }

    #[test]
    fn erasure_is_idempotent_through_embedding() {
        let k = DfKind::CtxUp {
            hi: m("C"),
            lo: m("P"),
            ctx: DfCtx(vec![
                DfDecl::Ty(name("a"), DfKind::Type(m("P"))),
                DfDecl::Tm(name("x")),
            ]),
            body: Rc::new(DfKind::Type(m("P"))),
        };
        assert_eq!(erase_kind(&embed_df_kind(&k)), k);
    }

    #[test]
    fn names_of_lists_declarations_in_order() {
        assert!(names_of(&Ctx::empty()).is_empty());
        let ctx = Ctx(vec![
            Decl::Ty {
                name: name("a"),
                kind: Kind::Type(m("P")),
            },
            Decl::Tm {
                name: name("x"),
                ty: Type::Unit(m("P")),
            },
        ]);
        assert_eq!(names_of(&ctx), vec![name("a"), name("x")]);
        assert_eq!(names_of(&ctx).len(), ctx.len());
    }
}
