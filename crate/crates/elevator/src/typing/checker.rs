//! The bidirectional checker. It reads surface syntax and produces core;
//! core inputs are checked by embedding them back into surface syntax.
//!
//! Usage is tracked per context slot. Visibility filters hide slots whose
//! mode is not above a known judgment mode; where the mode is only known
//! after synthesis, the slots accessed in between are checked afterwards.

use std::collections::HashSet;
use std::rc::Rc;

use super::error::ErrorCode::*;
use super::error::{ErrorCode, TypingError};
use super::signature::Signature;
use crate::frontend::ast::*;
use crate::mode_spec::{Mode, ModeSpec, Recursion};
use crate::subst::{
    rename_kind, rename_telescope, rename_type, single_subst_type, subst_kind, subst_type,
};
use crate::syntax::{
    alpha_eq, erase_context, erase_kind, free_names_type, fresh_name, Branch, Ctx, Decl, DfCtx,
    DfDecl, Entry, Kind, Name, Neutral, Subst, Term, Type,
};

pub(crate) type R<T> = Result<T, TypingError>;

fn err<T>(code: ErrorCode, span: Span, msg: impl Into<String>) -> R<T> {
    Err(TypingError::at(code, span, msg))
}

struct Slot {
    surface: String,
    core: Name,
    decl: Decl,
    hidden: u32,
    used: bool,
}

pub(crate) struct Mark {
    len: usize,
    log: usize,
}

pub(crate) struct Checker<'a> {
    pub spec: &'a ModeSpec,
    pub sig: &'a Signature,
    slots: Vec<Slot>,
    log: Vec<usize>,
    /// Definitions below this index are visible.
    pub def_limit: usize,
    /// Index of the definition being checked.
    pub current: Option<usize>,
    /// Data type under declaration, with its arity.
    pub declaring: Option<(String, usize)>,
}

/// Renames the top-level names of a dependency-free context.
fn df_renamed(g: &DfCtx, names: &[Name]) -> DfCtx {
    DfCtx(
        g.0.iter()
            .zip(names)
            .map(|(d, n)| match d {
                DfDecl::Ty(_, k) => DfDecl::Ty(n.clone(), k.clone()),
                DfDecl::Tm(_) => DfDecl::Tm(n.clone()),
            })
            .collect(),
    )
}

fn skind_mode(k: &SKind) -> &SMode {
    match k {
        SKind::Type(m) => m,
        SKind::Up { hi, .. } => hi,
    }
}

/// Eta-expands a neutral type at kind `k` into its long form.
pub(crate) fn eta(p: Neutral, k: &Kind) -> Type {
    match k {
        Kind::Type(m) => Type::Neutral(p, m.clone()),
        Kind::CtxUp { hi, lo, ctx, body } => {
            let fv = free_names_type(&Type::Neutral(p.clone(), lo.clone()));
            let mut names: Vec<Name> = Vec::with_capacity(ctx.len());
            for d in ctx.iter() {
                let n = fresh_name(d.name(), |c| {
                    fv.contains(c) || names.iter().any(|x| &**x == c)
                });
                names.push(n);
            }
            let (ctx, body) = rename_telescope(ctx, &names, &**body, rename_kind);
            let sub = Subst(
                ctx.iter()
                    .map(|d| match d {
                        Decl::Ty { name, kind } => Entry::Ty {
                            name: name.clone(),
                            ty: eta(Neutral::Var(name.clone()), kind),
                            kind: erase_kind(kind),
                        },
                        Decl::Tm { name, ty } => Entry::Tm {
                            name: name.clone(),
                            term: Term::Var(name.clone()),
                            mode: ty.mode().clone(),
                        },
                    })
                    .collect(),
            );
            let head = Neutral::Force {
                head: Rc::new(p),
                sub,
                hi: hi.clone(),
                lo: lo.clone(),
            };
            Type::Thunk {
                hi: hi.clone(),
                names,
                body: Rc::new(eta(head, &body)),
            }
        }
    }
}

impl<'a> Checker<'a> {
    pub fn new(spec: &'a ModeSpec, sig: &'a Signature) -> Checker<'a> {
        Checker {
            spec,
            sig,
            slots: Vec::new(),
            log: Vec::new(),
            def_limit: sig.defs().len(),
            current: None,
            declaring: None,
        }
    }

    // ---- context management ----

    pub fn mode(&self, m: &SMode) -> R<Mode> {
        self.spec.lookup(&m.name).ok_or_else(|| {
            TypingError::at(
                UnboundName,
                m.span,
                format!("mode `{}` is not declared", m.name),
            )
        })
    }

    fn ge(&self, a: &Mode, b: &Mode) -> bool {
        self.spec.ge(a, b)
    }

    fn fresh_core(&self, base: &str, also: &[Name]) -> Name {
        fresh_name(base, |c| {
            self.slots.iter().any(|s| &*s.core == c) || also.iter().any(|n| &**n == c)
        })
    }

    /// Pushes a core declaration whose surface name is its core name.
    pub fn push_core(&mut self, decl: Decl, used: bool) {
        let name = decl.name().clone();
        self.slots.push(Slot {
            surface: name.to_string(),
            core: name,
            decl,
            hidden: 0,
            used,
        });
    }

    fn push(&mut self, surface: &str, decl: Decl) {
        self.slots.push(Slot {
            surface: surface.to_string(),
            core: decl.name().clone(),
            decl,
            hidden: 0,
            used: false,
        });
    }

    /// Permanently hides slots whose mode is not above `m`.
    pub fn hide_below(&mut self, m: &Mode) {
        for i in 0..self.slots.len() {
            if !self.spec.ge(self.slots[i].decl.mode(), m) {
                self.slots[i].hidden += 1;
            }
        }
    }

    /// Consumption flags of the term slots among the first `n` slots.
    pub fn usage(&self, n: usize) -> Vec<bool> {
        self.slots[..n]
            .iter()
            .filter(|s| s.decl.is_term())
            .map(|s| s.used)
            .collect()
    }

    fn lookup(&self, x: &str) -> Option<usize> {
        self.slots.iter().rposition(|s| s.surface == x)
    }

    pub fn mark(&self) -> Mark {
        Mark {
            len: self.slots.len(),
            log: self.log.len(),
        }
    }

    /// Checks that every outer slot accessed since `mark` has mode above `m`.
    fn check_access(&self, mark: &Mark, m: &Mode, span: Span, what: &str) -> R<()> {
        for &i in &self.log[mark.log..] {
            if i < mark.len {
                let s = &self.slots[i];
                let k = s.decl.mode();
                if !self.ge(k, m) {
                    return err(
                        ModeAccessViolation,
                        span,
                        format!(
                            "`{}` has mode {k}, which is not accessible from mode {m} of {what}",
                            s.surface
                        ),
                    );
                }
            }
        }
        Ok(())
    }

    fn with_filter<T>(&mut self, m: &Mode, f: impl FnOnce(&mut Self) -> R<T>) -> R<T> {
        let idx: Vec<usize> = (0..self.slots.len())
            .filter(|&i| !self.spec.ge(self.slots[i].decl.mode(), m))
            .collect();
        for &i in &idx {
            self.slots[i].hidden += 1;
        }
        let r = f(self);
        for &i in &idx {
            self.slots[i].hidden -= 1;
        }
        r
    }

    /// Runs `f` without recording consumption, as in types.
    fn no_usage<T>(&mut self, f: impl FnOnce(&mut Self) -> R<T>) -> R<T> {
        let snap: Vec<bool> = self.slots.iter().map(|s| s.used).collect();
        let r = f(self);
        for (s, u) in self.slots.iter_mut().zip(snap) {
            s.used = u;
        }
        r
    }

    /// Binds declarations (already carrying core names) for the duration
    /// of `f`. With `linear`, unused term declarations must be weakenable.
    fn bind<T>(
        &mut self,
        surfaces: &[String],
        decls: &[Decl],
        linear: bool,
        span: Span,
        f: impl FnOnce(&mut Self) -> R<T>,
    ) -> R<T> {
        let base = self.slots.len();
        for (s, d) in surfaces.iter().zip(decls) {
            self.push(s, d.clone());
        }
        let r = f(self);
        let popped: Vec<Slot> = self.slots.drain(base..).collect();
        let v = r?;
        if linear {
            for s in popped {
                if s.decl.is_term() && !s.used && !self.spec.can_weaken(s.decl.mode()) {
                    return err(
                        WeakeningViolation,
                        span,
                        format!(
                            "`{}` is never used, but mode {} does not admit weakening",
                            s.surface,
                            s.decl.mode()
                        ),
                    );
                }
            }
        }
        Ok(v)
    }

    fn bind_term<T>(
        &mut self,
        x: &str,
        ty: Type,
        span: Span,
        f: impl FnOnce(&mut Self) -> R<T>,
    ) -> R<(Name, T)> {
        let core = self.fresh_core(x, &[]);
        let decl = Decl::Tm {
            name: core.clone(),
            ty,
        };
        let v = self.bind(&[x.to_string()], &[decl], true, span, f)?;
        Ok((core, v))
    }

    /// Chooses core names for `surfaces` and renames the telescope `psi`
    /// together with a body living under it.
    fn open<T>(
        &self,
        surfaces: &[String],
        psi: &Ctx,
        body: &T,
        ren: impl Fn(&[(Name, Name)], &T) -> T,
    ) -> (Vec<Name>, Ctx, T) {
        let mut cores: Vec<Name> = Vec::with_capacity(surfaces.len());
        for s in surfaces {
            let c = self.fresh_core(s, &cores);
            cores.push(c);
        }
        let (ctx, body) = rename_telescope(psi, &cores, body, ren);
        (cores, ctx, body)
    }

    // ---- kinds and types ----

    pub fn elab_kind(&mut self, k: &SKind) -> R<Kind> {
        match k {
            SKind::Type(m) => Ok(Kind::Type(self.mode(m)?)),
            SKind::Up { hi, lo, ctx, body } => {
                let (h, l) = (self.mode(hi)?, self.mode(lo)?);
                let span = hi.span;
                let (psi, kb) = self.elab_sctx(ctx, &h, &l, span, |s| s.elab_kind(body))?;
                if kb.mode() != &l {
                    return err(
                        KindMismatch,
                        span,
                        format!("the body of Up<{h},{l}> must be a kind at mode {l}, found {kb}"),
                    );
                }
                Ok(Kind::CtxUp {
                    hi: h,
                    lo: l,
                    ctx: psi,
                    body: Rc::new(kb),
                })
            }
        }
    }

    /// Elaborates one surface declaration in the current context.
    fn elab_sdecl(&mut self, d: &SDecl, taken: &[Name]) -> R<Decl> {
        match d {
            SDecl::Ty { name, kind, .. } => {
                let m = self.mode(skind_mode(kind))?;
                let k = self.with_filter(&m, |s| s.elab_kind(kind))?;
                Ok(Decl::Ty {
                    name: self.fresh_core(name, taken),
                    kind: k,
                })
            }
            SDecl::Tm { name, ty, span } => {
                let mark = self.mark();
                let (t, k) = self.elab_type(ty, None)?;
                let Kind::Type(m) = &k else {
                    return err(
                        KindMismatch,
                        *span,
                        format!("`{name}` must have a type of kind Type@m, found {k}"),
                    );
                };
                self.check_access(&mark, m, *span, &format!("the declaration of `{name}`"))?;
                Ok(Decl::Tm {
                    name: self.fresh_core(name, taken),
                    ty: t,
                })
            }
        }
    }

    /// Elaborates a context; with `bounds = (hi, lo)` each declaration mode
    /// `j` must satisfy `hi > j >= lo`, and `hi >= lo` always.
    fn elab_sctx<T>(
        &mut self,
        ctx: &[SDecl],
        hi: &Mode,
        lo: &Mode,
        span: Span,
        f: impl FnOnce(&mut Self) -> R<T>,
    ) -> R<(Ctx, T)> {
        if !self.ge(hi, lo) {
            return err(
                ModeAccessViolation,
                span,
                format!("Up<{hi},{lo}> requires {hi} >= {lo}"),
            );
        }
        let base = self.slots.len();
        let r = (|| {
            let mut decls = Vec::new();
            for d in ctx {
                let decl = self.elab_sdecl(d, &[])?;
                let j = decl.mode().clone();
                if !(self.spec.gt(hi, &j) && self.ge(&j, lo)) {
                    return err(
                        ModeAccessViolation,
                        d.span(),
                        format!(
                            "`{}` has mode {j}, but a template context of Up<{hi},{lo}> needs {hi} > {j} >= {lo}",
                            d.name()
                        ),
                    );
                }
                self.push(d.name(), decl.clone());
                decls.push(decl);
            }
            let v = f(self)?;
            Ok((Ctx(decls), v))
        })();
        self.slots.truncate(base);
        r
    }

    fn type_var(&mut self, a: &str, span: Span) -> R<(Type, Kind)> {
        let Some(i) = self.lookup(a) else {
            return err(
                UnboundName,
                span,
                format!("type variable `{a}` is not in scope"),
            );
        };
        let s = &self.slots[i];
        if s.hidden > 0 {
            return err(
                ModeAccessViolation,
                span,
                format!(
                    "`{a}` has mode {}, which is not accessible here",
                    s.decl.mode()
                ),
            );
        }
        let Decl::Ty { kind, .. } = &s.decl else {
            return err(
                KindMismatch,
                span,
                format!("`{a}` is a term variable, used as a type"),
            );
        };
        let kind = kind.clone();
        let t = eta(Neutral::Var(s.core.clone()), &kind);
        self.log.push(i);
        Ok((t, kind))
    }

    /// Elaborates a surface type, normalizing type-level redices. A type
    /// thunk needs its kind from `expect`.
    pub fn elab_type(&mut self, t: &SType, expect: Option<&Kind>) -> R<(Type, Kind)> {
        let span = t.span;
        let (ty, k) = match &t.node {
            STypeNode::Thunk { names, body } => {
                let Some(Kind::CtxUp {
                    hi, ctx, body: kb, ..
                }) = expect
                else {
                    return err(
                        AnnotationRequired,
                        span,
                        "a type thunk needs a known Up<..>[..] kind here",
                    );
                };
                if names.len() != ctx.len() {
                    return err(
                        ContextMismatch,
                        span,
                        format!(
                            "the thunk binds {} names but its kind declares {}",
                            names.len(),
                            ctx.len()
                        ),
                    );
                }
                let (cores, psi, kb) = self.open(names, ctx, &**kb, rename_kind);
                let (body, _) =
                    self.bind(names, &psi.0, false, span, |s| s.elab_type(body, Some(&kb)))?;
                let ty = Type::Thunk {
                    hi: hi.clone(),
                    names: cores,
                    body: Rc::new(body),
                };
                return Ok((ty, expect.unwrap().clone()));
            }
            STypeNode::Unit(m) => {
                let m = self.mode(m)?;
                (Type::Unit(m.clone()), Kind::Type(m))
            }
            STypeNode::Var(a) => self.type_var(a, span)?,
            STypeNode::Arrow(a, b) => {
                let (a2, ka) = self.elab_type(a, None)?;
                let (b2, kb) = self.elab_type(b, None)?;
                match (&ka, &kb) {
                    (Kind::Type(k1), Kind::Type(k2)) if k1 == k2 => {}
                    _ => {
                        return err(
                            KindMismatch,
                            span,
                            format!(
                            "both sides of an arrow must be types at one mode, found {ka} and {kb}"
                        ),
                        )
                    }
                }
                (Type::arrow(a2, b2), ka)
            }
            STypeNode::Forall(a, k, body) => {
                let m = self.mode(skind_mode(k))?;
                let k2 = self.with_filter(&m, |s| s.elab_kind(k))?;
                let core = self.fresh_core(a, &[]);
                let decl = Decl::Ty {
                    name: core.clone(),
                    kind: k2.clone(),
                };
                let (b2, kb) = self.bind(std::slice::from_ref(a), &[decl], false, span, |s| {
                    s.elab_type(body, None)
                })?;
                let Kind::Type(kmode) = &kb else {
                    return err(
                        KindMismatch,
                        body.span,
                        format!("a forall body must be a type, found kind {kb}"),
                    );
                };
                if !self.ge(&m, kmode) {
                    return err(
                        ModeAccessViolation,
                        span,
                        format!("`{a}` has mode {m}, but the forall lives at mode {kmode} and needs {m} >= {kmode}"),
                    );
                }
                (
                    Type::Forall {
                        var: core,
                        kind: Rc::new(k2),
                        body: Rc::new(b2),
                    },
                    kb,
                )
            }
            STypeNode::Up { hi, lo, ctx, body } => {
                let (h, l) = (self.mode(hi)?, self.mode(lo)?);
                let (psi, (b2, kb)) =
                    self.elab_sctx(ctx, &h, &l, span, |s| s.elab_type(body, None))?;
                if !matches!(&kb, Kind::Type(m) if *m == l) {
                    return err(
                        KindMismatch,
                        body.span,
                        format!("the body of Up<{h},{l}> must have kind Type@{l}, found {kb}"),
                    );
                }
                (Type::ctx_up(&h, &l, psi, b2), Kind::Type(h))
            }
            STypeNode::Down { hi, lo, body } => {
                let (h, l) = (self.mode(hi)?, self.mode(lo)?);
                if !self.ge(&h, &l) {
                    return err(
                        ModeAccessViolation,
                        span,
                        format!("Down<{h},{l}> requires {h} >= {l}"),
                    );
                }
                let (b2, _) =
                    self.with_filter(&h, |s| s.elab_type(body, Some(&Kind::Type(h.clone()))))?;
                (Type::down(&h, &l, b2), Kind::Type(l))
            }
            STypeNode::Force { head, args } => self.type_force(head, args, span)?,
            STypeNode::Data { name, mode, args } => {
                let m = self.mode(mode)?;
                let arity = match (&self.declaring, self.sig.data(name)) {
                    (Some((d, n)), _) if d == name => *n,
                    (_, Some(d)) => {
                        if !d.instances.contains_key(&m) {
                            let e = d.ctor_arg_types(&m, 0, &[]).unwrap_err();
                            return Err(e.or_at(span));
                        }
                        d.params.len()
                    }
                    (_, None) => {
                        return err(
                            UnboundName,
                            span,
                            format!("data type `{name}` is not declared"),
                        )
                    }
                };
                if args.len() != arity {
                    return err(
                        ElabError,
                        span,
                        format!(
                            "`{name}` expects {arity} type arguments, found {}",
                            args.len()
                        ),
                    );
                }
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    out.push(self.elab_type(a, Some(&Kind::Type(m.clone())))?.0);
                }
                (
                    Type::Data {
                        name: crate::syntax::name(name),
                        mode: m.clone(),
                        args: out,
                    },
                    Kind::Type(m),
                )
            }
        };
        if let Some(e) = expect {
            if !alpha_eq(&k, e) {
                return err(KindMismatch, span, format!("expected kind {e}, found {k}"));
            }
        }
        Ok((ty, k))
    }

    fn type_force(&mut self, head: &SType, args: &[SArg], span: Span) -> R<(Type, Kind)> {
        if let STypeNode::Thunk { names, body } = &head.node {
            // A literal thunk: its context is read off the type arguments.
            if names.len() != args.len() {
                return err(
                    DomainMismatch,
                    span,
                    format!(
                        "the thunk binds {} names but {} arguments were given",
                        names.len(),
                        args.len()
                    ),
                );
            }
            let mut kinds = Vec::new();
            let mut tys = Vec::new();
            for a in args {
                let Some(t) = &a.ty else {
                    return err(
                        AnnotationRequired,
                        a.span,
                        "term arguments to a literal type thunk need an annotated template",
                    );
                };
                let (t2, k) = self.elab_type(t, None)?;
                tys.push(t2);
                kinds.push(k);
            }
            let mut decls = Vec::new();
            for (n, k) in names.iter().zip(&kinds) {
                let taken: Vec<Name> = decls.iter().map(|d: &Decl| d.name().clone()).collect();
                decls.push(Decl::Ty {
                    name: self.fresh_core(n, &taken),
                    kind: k.clone(),
                });
            }
            let (b2, kb) = self.bind(names, &decls, false, span, |s| s.elab_type(body, None))?;
            let sub = Subst(
                decls
                    .iter()
                    .zip(tys)
                    .zip(&kinds)
                    .map(|((d, t), k)| Entry::Ty {
                        name: d.name().clone(),
                        ty: t,
                        kind: erase_kind(k),
                    })
                    .collect(),
            );
            let g = sub.measure();
            let t = subst_type(&sub, &g, &b2)?;
            let k = subst_kind(&sub, &g, &kb)?;
            return Ok((t, k));
        }
        let mark = self.mark();
        let (h, hk) = self.elab_type(head, None)?;
        let Kind::CtxUp {
            hi,
            ctx: psi,
            body: kb,
            ..
        } = &hk
        else {
            return err(
                KindMismatch,
                head.span,
                format!("`force` expects a type template, found kind {hk}"),
            );
        };
        self.check_access(&mark, hi, head.span, "the forced template")?;
        let Type::Thunk { names, body, .. } = &h else {
            return err(
                ElabError,
                head.span,
                format!("template type {h} is not in eta-long form"),
            );
        };
        let sigma = self.no_usage(|s| s.check_args(args, psi, span))?;
        let g = erase_context(psi);
        let t = subst_type(&sigma.renamed(names), &df_renamed(&g, names), body)?;
        let k = subst_kind(&sigma, &g, kb)?;
        Ok((t, k))
    }

    /// Checks explicit substitution arguments against the template context
    /// `psi`. Entries are named after `psi`.
    pub fn check_args(&mut self, args: &[SArg], psi: &Ctx, span: Span) -> R<Subst> {
        if args.len() != psi.len() {
            return err(
                DomainMismatch,
                span,
                format!(
                    "the template context has {} entries but {} arguments were given",
                    psi.len(),
                    args.len()
                ),
            );
        }
        let gamma = erase_context(psi);
        let mut entries: Vec<Entry> = Vec::with_capacity(args.len());
        for (i, (a, d)) in args.iter().zip(psi.iter()).enumerate() {
            let prefix = Subst(entries.clone());
            let g = DfCtx(gamma.0[..i].to_vec());
            match d {
                Decl::Ty { name, kind } => {
                    let Some(t) = &a.ty else {
                        return err(
                            DomainMismatch,
                            a.span,
                            format!("expected a type for `{name}`"),
                        );
                    };
                    let k = subst_kind(&prefix, &g, kind)?;
                    let m = kind.mode().clone();
                    let (t2, _) =
                        self.with_filter(&m, |s| s.no_usage(|s| s.elab_type(t, Some(&k))))?;
                    entries.push(Entry::Ty {
                        name: name.clone(),
                        ty: t2,
                        kind: erase_kind(kind),
                    });
                }
                Decl::Tm { name, ty } => {
                    let Some(e) = &a.term else {
                        return err(
                            DomainMismatch,
                            a.span,
                            format!("expected a term for `{name}`"),
                        );
                    };
                    let t = subst_type(&prefix, &g, ty)?;
                    let m = ty.mode().clone();
                    let e2 = self.with_filter(&m, |s| s.check(e, &t))?;
                    entries.push(Entry::Tm {
                        name: name.clone(),
                        term: e2,
                        mode: m,
                    });
                }
            }
        }
        Ok(Subst(entries))
    }

    // ---- terms ----

    fn mismatch<T>(&self, span: Span, expected: &Type, found: &str) -> R<T> {
        err(
            TypeMismatch,
            span,
            format!("expected {expected}, found {found}"),
        )
    }

    fn is_ctor_name(&self, x: &str) -> bool {
        self.lookup(x).is_none() && self.sig.def(x).is_none() && self.sig.ctor(x).is_some()
    }

    /// Splits `C e1 .. en` written without a mode into its parts.
    fn ctor_spine<'t>(&self, e: &'t STerm) -> Option<(&'t str, Vec<&'t STerm>)> {
        let mut args = Vec::new();
        let mut cur = e;
        loop {
            match &cur.node {
                STermNode::App(f, a) => {
                    args.push(&**a);
                    cur = f;
                }
                STermNode::Var(x) if self.is_ctor_name(x) => {
                    args.reverse();
                    return Some((x, args));
                }
                _ => return None,
            }
        }
    }

    pub fn check(&mut self, e: &STerm, a: &Type) -> R<Term> {
        let span = e.span;
        match &e.node {
            STermNode::Lam(x, ann, body) => {
                let Type::Arrow { dom, cod } = a else {
                    return self.mismatch(span, a, "a function");
                };
                if let Some(t) = ann {
                    let (t2, _) = self.elab_type(t, Some(&Kind::Type(dom.mode().clone())))?;
                    if !alpha_eq(&t2, &**dom) {
                        return err(
                            TypeMismatch,
                            t.span,
                            format!("annotation {t2} does not match the expected domain {dom}"),
                        );
                    }
                }
                let (core, b) = self.bind_term(x, (**dom).clone(), span, |s| s.check(body, cod))?;
                Ok(Term::Lam {
                    var: core,
                    ann: (**dom).clone(),
                    body: Rc::new(b),
                })
            }
            STermNode::TLam(x, k, body) => {
                let Type::Forall { var, kind, body: b } = a else {
                    return self.mismatch(span, a, "a type abstraction");
                };
                if let Some(k) = k {
                    let k2 = self.with_filter(kind.mode(), |s| s.elab_kind(k))?;
                    if !alpha_eq(&k2, &**kind) {
                        return err(
                            KindMismatch,
                            span,
                            format!("annotation {k2} does not match the expected kind {kind}"),
                        );
                    }
                }
                let core = self.fresh_core(x, &[]);
                let b2 = rename_type(&[(var.clone(), core.clone())], b);
                let decl = Decl::Ty {
                    name: core.clone(),
                    kind: (**kind).clone(),
                };
                let body = self.bind(std::slice::from_ref(x), &[decl], true, span, |s| {
                    s.check(body, &b2)
                })?;
                Ok(Term::TLam {
                    var: core,
                    kind: (**kind).clone(),
                    body: Rc::new(body),
                })
            }
            STermNode::Susp(..) | STermNode::TypedSusp { .. } => {
                let (names, body) = match &e.node {
                    STermNode::Susp(names, body) => (names.clone(), body),
                    STermNode::TypedSusp { ctx, body, .. } => {
                        (ctx.iter().map(|d| d.name().to_string()).collect(), body)
                    }
                    _ => unreachable!(),
                };
                let Type::CtxUp {
                    hi,
                    lo,
                    ctx,
                    body: b,
                } = a
                else {
                    return self.mismatch(span, a, "a template");
                };
                if names.len() != ctx.len() {
                    return err(
                        ContextMismatch,
                        span,
                        format!(
                            "the template binds {} names but its type declares {}",
                            names.len(),
                            ctx.len()
                        ),
                    );
                }
                let (cores, psi, b2) = self.open(&names, ctx, &**b, rename_type);
                let body = self.bind(&names, &psi.0, true, span, |s| s.check(body, &b2))?;
                Ok(Term::Susp {
                    hi: hi.clone(),
                    lo: lo.clone(),
                    names: cores,
                    body: Rc::new(body),
                    ann: Some(psi),
                })
            }
            STermNode::Store(body) | STermNode::TypedStore { body, .. } => {
                let Type::Down { hi, lo, body: b } = a else {
                    return self.mismatch(span, a, "a stored reference");
                };
                let body = self.with_filter(hi, |s| s.check(body, b))?;
                Ok(Term::store(hi, lo, body))
            }
            STermNode::Unit(m) => {
                let Type::Unit(k) = a else {
                    return self.mismatch(span, a, "unit");
                };
                if let Some(m) = m {
                    let m = self.mode(m)?;
                    if &m != k {
                        return self.mismatch(span, a, &format!("unit@{m}"));
                    }
                }
                Ok(Term::One(k.clone()))
            }
            STermNode::Ctor {
                name, mode, args, ..
            } => {
                let args: Vec<&STerm> = args.iter().collect();
                self.check_ctor(name, mode.as_ref(), &args, a, span)
            }
            STermNode::Var(x) if self.is_ctor_name(x) => self.check_ctor(x, None, &[], a, span),
            STermNode::App(..) if self.ctor_spine(e).is_some() => {
                let (c, args) = self.ctor_spine(e).unwrap();
                self.check_ctor(c, None, &args, a, span)
            }
            STermNode::Match(s, bs) => Ok(self.match_(s, bs, Some(a), span)?.0),
            STermNode::Load(x, b, body) => Ok(self.load(x, b, body, Some(a), span)?.0),
            _ => {
                let (t, ty) = self.synth(e)?;
                if alpha_eq(&ty, a) {
                    Ok(t)
                } else if matches!(e.node, STermNode::Var(_)) && !self.ge(ty.mode(), a.mode()) {
                    err(
                        ModeAccessViolation,
                        span,
                        format!(
                            "this variable has mode {}, which is not accessible from mode {}",
                            ty.mode(),
                            a.mode()
                        ),
                    )
                } else {
                    self.mismatch(span, a, &ty.to_string())
                }
            }
        }
    }

    fn check_ctor(
        &mut self,
        c: &str,
        mode: Option<&SMode>,
        args: &[&STerm],
        a: &Type,
        span: Span,
    ) -> R<Term> {
        let Some((decl, ci)) = self.sig.ctor(c) else {
            return err(
                UnboundName,
                span,
                format!("constructor `{c}` is not declared"),
            );
        };
        let Type::Data {
            name,
            mode: m,
            args: targs,
        } = a
        else {
            return self.mismatch(span, a, &format!("a value built by `{c}`"));
        };
        if &decl.name != name {
            return self.mismatch(span, a, &format!("a `{}` built by `{c}`", decl.name));
        }
        if let Some(md) = mode {
            let md = self.mode(md)?;
            if &md != m {
                return self.mismatch(span, a, &format!("`{c}{{{md}}}`"));
            }
        }
        let tys = decl
            .ctor_arg_types(m, ci, targs)
            .map_err(|e| e.or_at(span))?;
        if args.len() != tys.len() {
            return err(
                ElabError,
                span,
                format!(
                    "`{c}` expects {} arguments, found {}",
                    tys.len(),
                    args.len()
                ),
            );
        }
        let mut out = Vec::with_capacity(args.len());
        for (x, t) in args.iter().zip(&tys) {
            out.push(self.check(x, t)?);
        }
        Ok(Term::Ctor {
            data: name.clone(),
            mode: m.clone(),
            ctor: crate::syntax::name(c),
            args: out,
            targs: targs.clone(),
        })
    }

    fn var_term(&mut self, x: &str, span: Span) -> R<(Term, Type)> {
        if let Some(i) = self.lookup(x) {
            let spec = self.spec;
            let s = &mut self.slots[i];
            let Decl::Tm { ty, .. } = &s.decl else {
                return err(
                    KindMismatch,
                    span,
                    format!("`{x}` is a type variable, used as a term"),
                );
            };
            if s.hidden > 0 {
                return err(
                    ModeAccessViolation,
                    span,
                    format!("`{x}` has mode {}, which is not accessible here", ty.mode()),
                );
            }
            if s.used && !spec.can_contract(ty.mode()) {
                return err(
                    LinearityViolation,
                    span,
                    format!(
                        "`{x}` is used more than once, but mode {} does not admit contraction",
                        ty.mode()
                    ),
                );
            }
            s.used = true;
            let r = (Term::Var(s.core.clone()), ty.clone());
            self.log.push(i);
            return Ok(r);
        }
        if let Some((i, d)) = self.sig.def(x) {
            let visible = i < self.def_limit && Some(i) != self.current;
            if !visible {
                let general = match self.current.map(|c| &self.sig.defs()[c]) {
                    Some(cur) => {
                        self.spec.recursion(cur.ty.mode()).ok() == Some(Recursion::General)
                    }
                    None => true,
                };
                if !general {
                    return err(
                        RecursionForbidden,
                        span,
                        format!("`{x}` refers to a definition that is not yet checked, and recursion is not allowed at this mode"),
                    );
                }
            }
            return Ok((Term::Def(d.name.clone()), d.ty.clone()));
        }
        if self.sig.ctor(x).is_some() {
            return err(
                AnnotationRequired,
                span,
                format!("cannot infer the type of constructor `{x}`; give its mode as `{x}{{m}}` or annotate"),
            );
        }
        err(
            UnboundVariable,
            span,
            format!("variable `{x}` is not in scope"),
        )
    }

    pub fn synth(&mut self, e: &STerm) -> R<(Term, Type)> {
        let span = e.span;
        match &e.node {
            STermNode::Var(x) => self.var_term(x, span),
            STermNode::Unit(Some(m)) => {
                let m = self.mode(m)?;
                Ok((Term::One(m.clone()), Type::Unit(m)))
            }
            STermNode::Unit(None) => err(
                AnnotationRequired,
                span,
                "`unit` needs a mode here; write unit@m",
            ),
            STermNode::App(f, x) => {
                if let Some((c, _)) = self.ctor_spine(e) {
                    return err(
                        AnnotationRequired,
                        span,
                        format!("cannot infer the type of this `{c}` value; give its mode as `{c}{{m}}` or annotate"),
                    );
                }
                let (f2, ft) = self.synth(f)?;
                let Type::Arrow { dom, cod } = &ft else {
                    return err(
                        TypeMismatch,
                        f.span,
                        format!("this term has type {ft}, which is not a function type"),
                    );
                };
                let x2 = self.check(x, dom)?;
                Ok((Term::app(f2, x2), (**cod).clone()))
            }
            STermNode::TApp(f, t) => {
                let (f2, ft) = self.synth(f)?;
                let Type::Forall { var, kind, body } = &ft else {
                    return err(
                        TypeMismatch,
                        f.span,
                        format!("this term has type {ft}, which is not polymorphic"),
                    );
                };
                let (t2, _) = self.with_filter(kind.mode(), |s| s.elab_type(t, Some(kind)))?;
                let res = single_subst_type(var, &t2, &erase_kind(kind), body)?;
                Ok((Term::tapp(f2, t2), res))
            }
            STermNode::Force(h, args) => {
                let mark = self.mark();
                let (h2, ht) = self.synth(h)?;
                let Type::CtxUp { hi, lo, ctx, body } = &ht else {
                    return err(
                        TypeMismatch,
                        h.span,
                        format!("`force` expects a template, found {ht}"),
                    );
                };
                self.check_access(&mark, hi, h.span, "the forced template")?;
                let sigma = self.check_args(args, ctx, span)?;
                let t = subst_type(&sigma, &erase_context(ctx), body)?;
                Ok((Term::force(hi, lo, h2, sigma), t))
            }
            STermNode::Load(x, b, body) => self.load(x, b, body, None, span),
            STermNode::Match(s, bs) => self.match_(s, bs, None, span),
            STermNode::Ann(inner, t) => {
                let (t2, k) = self.elab_type(t, None)?;
                if !matches!(k, Kind::Type(_)) {
                    return err(
                        KindMismatch,
                        t.span,
                        format!("an annotation must be a type, found kind {k}"),
                    );
                }
                let e2 = self.check(inner, &t2)?;
                Ok((e2, t2))
            }
            STermNode::Ctor {
                name,
                mode: Some(m),
                args,
                targs,
            } => {
                let Some((decl, _)) = self.sig.ctor(name) else {
                    return err(
                        UnboundName,
                        span,
                        format!("constructor `{name}` is not declared"),
                    );
                };
                if decl.params.len() != targs.len() {
                    return err(
                        AnnotationRequired,
                        span,
                        format!(
                            "cannot infer the type arguments of `{}`; annotate this value",
                            decl.name
                        ),
                    );
                }
                let md = self.mode(m)?;
                let mut tys = Vec::with_capacity(targs.len());
                for t in targs {
                    tys.push(self.elab_type(t, Some(&Kind::Type(md.clone())))?.0);
                }
                let ty = Type::Data {
                    name: decl.name.clone(),
                    mode: md,
                    args: tys,
                };
                let args: Vec<&STerm> = args.iter().collect();
                let t = self.check_ctor(name, Some(m), &args, &ty, span)?;
                Ok((t, ty))
            }
            STermNode::TypedSusp { hi, lo, ctx, body } => {
                let (h, l) = (self.mode(hi)?, self.mode(lo)?);
                let (psi, ()) = self.elab_sctx(ctx, &h, &l, span, |_| Ok(()))?;
                let names: Vec<String> = ctx.iter().map(|d| d.name().to_string()).collect();
                let (b, bt) = self.bind(&names, &psi.0, true, span, |s| s.synth(body))?;
                if bt.mode() != &l {
                    return err(
                        TypeMismatch,
                        body.span,
                        format!("the template body has mode {}, expected {l}", bt.mode()),
                    );
                }
                let t = Type::ctx_up(&h, &l, psi.clone(), bt);
                let e = Term::Susp {
                    hi: h,
                    lo: l,
                    names: crate::syntax::names_of(&psi),
                    body: Rc::new(b),
                    ann: Some(psi),
                };
                Ok((e, t))
            }
            STermNode::TypedStore { hi, lo, body } => {
                let (h, l) = (self.mode(hi)?, self.mode(lo)?);
                if !self.ge(&h, &l) {
                    return err(
                        ModeAccessViolation,
                        span,
                        format!("a store from {h} to {l} requires {h} >= {l}"),
                    );
                }
                let (b, bt) = self.with_filter(&h, |s| s.synth(body))?;
                if bt.mode() != &h {
                    return err(
                        TypeMismatch,
                        body.span,
                        format!("the stored term has mode {}, expected {h}", bt.mode()),
                    );
                }
                Ok((Term::store(&h, &l, b), Type::down(&h, &l, bt)))
            }
            STermNode::TLam(x, Some(k), body) => {
                let m = self.mode(skind_mode(k))?;
                let k2 = self.with_filter(&m, |s| s.elab_kind(k))?;
                let core = self.fresh_core(x, &[]);
                let decl = Decl::Ty {
                    name: core.clone(),
                    kind: k2.clone(),
                };
                let (b, bt) = self.bind(std::slice::from_ref(x), &[decl], true, span, |s| {
                    s.synth(body)
                })?;
                if !self.ge(&m, bt.mode()) {
                    return err(
                        ModeAccessViolation,
                        span,
                        format!(
                            "`{x}` has mode {m}, which is not above the body mode {}",
                            bt.mode()
                        ),
                    );
                }
                let t = Type::Forall {
                    var: core.clone(),
                    kind: Rc::new(k2.clone()),
                    body: Rc::new(bt),
                };
                let e = Term::TLam {
                    var: core,
                    kind: k2,
                    body: Rc::new(b),
                };
                Ok((e, t))
            }
            STermNode::Lam(x, Some(ann), body) => {
                let (a, k) = self.elab_type(ann, None)?;
                let Kind::Type(km) = &k else {
                    return err(
                        KindMismatch,
                        ann.span,
                        format!("an annotation must be a type, found kind {k}"),
                    );
                };
                let (core, (b, bt)) = self.bind_term(x, a.clone(), span, |s| s.synth(body))?;
                if bt.mode() != km {
                    return err(
                        TypeMismatch,
                        body.span,
                        format!(
                            "the function body has mode {}, but its argument has mode {km}",
                            bt.mode()
                        ),
                    );
                }
                Ok((
                    Term::Lam {
                        var: core,
                        ann: a.clone(),
                        body: Rc::new(b),
                    },
                    Type::arrow(a, bt),
                ))
            }
            _ => err(
                AnnotationRequired,
                span,
                "cannot infer a type for this term; add an annotation `(e : A)`",
            ),
        }
    }

    fn load(
        &mut self,
        x: &str,
        bound: &STerm,
        body: &STerm,
        expected: Option<&Type>,
        span: Span,
    ) -> R<(Term, Type)> {
        let mark = self.mark();
        let (b2, bt) = self.synth(bound)?;
        let Type::Down { hi, lo, body: a } = &bt else {
            return err(
                TypeMismatch,
                bound.span,
                format!("`load` expects a stored reference, found {bt}"),
            );
        };
        self.check_access(&mark, lo, bound.span, "the loaded reference")?;
        let gate = |s: &Self, k: &Mode| {
            if s.ge(lo, k) {
                Ok(())
            } else {
                err(
                    ModeAccessViolation,
                    span,
                    format!(
                        "a reference at mode {lo} cannot be loaded in a computation at mode {k}"
                    ),
                )
            }
        };
        if let Some(t) = expected {
            gate(self, t.mode())?;
        }
        let (core, (body2, ty)) = self.bind_term(x, (**a).clone(), span, |s| match expected {
            Some(t) => Ok((s.check(body, t)?, t.clone())),
            None => s.synth(body),
        })?;
        if expected.is_none() {
            gate(self, ty.mode())?;
        }
        Ok((
            Term::Load {
                hi: hi.clone(),
                lo: lo.clone(),
                var: core,
                bound: Rc::new(b2),
                body: Rc::new(body2),
            },
            ty,
        ))
    }

    fn match_(
        &mut self,
        scrut: &STerm,
        branches: &[SBranch],
        expected: Option<&Type>,
        span: Span,
    ) -> R<(Term, Type)> {
        let mark = self.mark();
        let (s2, st) = self.synth(scrut)?;
        let Type::Data {
            name,
            mode: d,
            args: targs,
        } = &st
        else {
            return err(
                TypeMismatch,
                scrut.span,
                format!("`match` expects a value of a data type, found {st}"),
            );
        };
        self.check_access(&mark, d, scrut.span, "the match scrutinee")?;
        let gate = |s: &Self, k: &Mode| {
            if s.ge(d, k) {
                Ok(())
            } else {
                err(
                    ModeAccessViolation,
                    span,
                    format!("a value at mode {d} cannot be matched in a computation at mode {k}"),
                )
            }
        };
        if let Some(t) = expected {
            gate(self, t.mode())?;
        }
        let decl = self
            .sig
            .data(name)
            .expect("data type of a checked value is declared");
        let mut seen = HashSet::new();
        for b in branches {
            if decl.ctor_index(&b.ctor).is_none() {
                return err(
                    PatternMismatch,
                    b.span,
                    format!("`{}` is not a constructor of `{name}`", b.ctor),
                );
            }
            if !seen.insert(b.ctor.as_str()) {
                return err(
                    PatternMismatch,
                    b.span,
                    format!("duplicate branch for `{}`", b.ctor),
                );
            }
        }
        let base: Vec<bool> = self.slots.iter().map(|s| s.used).collect();
        let mut outs: Vec<Vec<bool>> = Vec::new();
        let mut res_ty = expected.cloned();
        let mut out = Vec::new();
        for (ci, c) in decl.ctors.iter().enumerate() {
            let Some(b) = branches.iter().find(|b| *b.ctor == *c.name) else {
                return err(
                    PatternMismatch,
                    span,
                    format!("the match has no branch for `{}`", c.name),
                );
            };
            for (s, u) in self.slots.iter_mut().zip(&base) {
                s.used = *u;
            }
            let tys = decl
                .ctor_arg_types(d, ci, targs)
                .map_err(|e| e.or_at(b.span))?;
            if b.binders.len() != tys.len() {
                return err(
                    PatternMismatch,
                    b.span,
                    format!(
                        "`{}` has {} arguments but the pattern binds {}",
                        c.name,
                        tys.len(),
                        b.binders.len()
                    ),
                );
            }
            let mut cores: Vec<Name> = Vec::new();
            let mut decls = Vec::new();
            for (x, t) in b.binders.iter().zip(&tys) {
                let core = self.fresh_core(x, &cores);
                cores.push(core.clone());
                decls.push(Decl::Tm {
                    name: core,
                    ty: t.clone(),
                });
            }
            let want = res_ty.clone();
            let (body, ty) = self.bind(&b.binders, &decls, true, b.span, |s| match &want {
                Some(t) => Ok((s.check(&b.body, t)?, t.clone())),
                None => s.synth(&b.body),
            })?;
            if res_ty.is_none() {
                gate(self, ty.mode())?;
                res_ty = Some(ty);
            }
            outs.push(self.slots.iter().map(|s| s.used).collect());
            out.push(Branch {
                ctor: c.name.clone(),
                binders: cores,
                body,
            });
        }
        let Some(ty) = res_ty else {
            return err(
                AnnotationRequired,
                span,
                "cannot infer the type of a match without branches",
            );
        };
        for j in 0..base.len() {
            let any = outs.iter().any(|o| o[j]);
            let all = outs.iter().all(|o| o[j]);
            if any != all && !self.spec.can_weaken(self.slots[j].decl.mode()) {
                return err(
                    WeakeningViolation,
                    span,
                    format!(
                        "`{}` is used in some branches of this match but not in others, and mode {} does not admit weakening",
                        self.slots[j].surface,
                        self.slots[j].decl.mode()
                    ),
                );
            }
            self.slots[j].used = if outs.is_empty() { base[j] } else { any };
        }
        Ok((
            Term::Match {
                mode: d.clone(),
                scrut: Rc::new(s2),
                branches: out,
            },
            ty,
        ))
    }

    /// Elaborates and binds a surface context, as for a `wf` check.
    pub fn elab_context(&mut self, ctx: &[SDecl]) -> R<Ctx> {
        let mut decls = Vec::new();
        for d in ctx {
            let decl = self.elab_sdecl(d, &[])?;
            self.push(d.name(), decl.clone());
            decls.push(decl);
        }
        Ok(Ctx(decls))
    }
}
