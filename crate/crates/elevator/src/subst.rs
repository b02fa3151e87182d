//! Hereditary substitution on normal types, capture-avoiding substitution
//! on terms, kinds, contexts and substitutions, and the split operations
//! on usage masks.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use thiserror::Error;

use crate::mode_spec::{Mode, ModeSpec};
use crate::syntax::{
    free_names_kind, free_names_subst, free_names_term, free_names_type, fresh_name, names_of,
    Branch, Ctx, Decl, DfCtx, DfDecl, DfKind, Entry, Kind, Name, Neutral, Subst, Term, Type,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("no measure recorded for type variable `{0}`")]
    MissingMeasure(String),
    #[error("`{0}` is mapped to an entry of the wrong sort")]
    SortMismatch(String),
    #[error("forced type is not a type thunk")]
    NotAThunk,
    #[error("type thunk recorded at a kind that is not contextual")]
    KindMismatch,
    #[error("substitution has {got} entries but the template context has {expected}")]
    Arity { expected: usize, got: usize },
    #[error("recursion depth limit {0} exceeded")]
    DepthExceeded(usize),
}

#[derive(Debug, Clone)]
pub enum NeutralResult {
    Reduced(Type, DfKind),
    StillNeutral(Neutral),
}

/// Recursion-depth bookkeeping shared by one substitution run.
#[derive(Debug, Clone, Default)]
pub struct Watch {
    depth: usize,
    max_depth: usize,
    limit: Option<usize>,
}

impl Watch {
    pub fn new(limit: Option<usize>) -> Watch {
        Watch {
            depth: 0,
            max_depth: 0,
            limit,
        }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn enter(&mut self) -> Result<(), SubstError> {
        self.depth += 1;
        self.max_depth = self.max_depth.max(self.depth);
        match self.limit {
            Some(l) if self.depth > l => Err(SubstError::DepthExceeded(l)),
            _ => Ok(()),
        }
    }

    fn exit(&mut self) {
        self.depth -= 1;
    }
}

#[derive(Clone, Debug)]
enum Val {
    Ty(Type),
    Tm(Term),
    Ren(Name),
}

#[derive(Clone, Debug, Default)]
struct Sub {
    map: HashMap<Name, Val>,
    gamma: HashMap<Name, DfKind>,
    /// Free names of the range; binders with these names are renamed.
    avoid: HashSet<Name>,
}

type FvFn<'a> = &'a dyn Fn() -> HashSet<Name>;

impl Sub {
    fn new(s: &Subst, g: &DfCtx) -> Sub {
        let mut map = HashMap::new();
        for e in s.iter() {
            let v = match e {
                Entry::Ty { ty, .. } => Val::Ty(ty.clone()),
                Entry::Tm { term, .. } => Val::Tm(term.clone()),
            };
            map.insert(e.name().clone(), v);
        }
        let gamma =
            g.0.iter()
                .filter_map(|d| match d {
                    DfDecl::Ty(n, k) => Some((n.clone(), k.clone())),
                    DfDecl::Tm(_) => None,
                })
                .collect();
        Sub {
            map,
            gamma,
            avoid: free_names_subst(s),
        }
    }

    fn renaming(pairs: &[(Name, Name)]) -> Sub {
        Sub {
            map: pairs
                .iter()
                .map(|(a, b)| (a.clone(), Val::Ren(b.clone())))
                .collect(),
            gamma: HashMap::new(),
            avoid: pairs.iter().map(|(_, b)| b.clone()).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Prepares to descend under binder `b`. Returns the substitution to
    /// use below it (when it differs) and the binder's new name.
    fn enter(&self, b: &Name, scope: FvFn<'_>) -> (Option<Sub>, Name) {
        let shadow = self.map.contains_key(b);
        let capture = self.avoid.contains(b);
        if !shadow && !capture {
            return (None, b.clone());
        }
        let mut s = self.clone();
        s.map.remove(b);
        s.gamma.remove(b);
        if !capture {
            return (Some(s), b.clone());
        }
        let fv = scope();
        let nb = fresh_name(b, |c| {
            s.avoid.contains(c) || fv.contains(c) || s.map.contains_key(c) || &**b == c
        });
        s.map.insert(b.clone(), Val::Ren(nb.clone()));
        s.avoid.insert(nb.clone());
        (Some(s), nb)
    }

    fn kind(&self, w: &mut Watch, k: &Kind) -> Result<Kind, SubstError> {
        if self.is_empty() {
            return Ok(k.clone());
        }
        w.enter()?;
        let r = match k {
            Kind::Type(m) => Ok(Kind::Type(m.clone())),
            Kind::CtxUp { hi, lo, ctx, body } => {
                let fv = || {
                    let mut s = free_names_kind(k);
                    s.extend(ctx.iter().map(|d| d.name().clone()));
                    s
                };
                self.telescope(w, ctx, &fv).and_then(|(inner, ctx)| {
                    Ok(Kind::CtxUp {
                        hi: hi.clone(),
                        lo: lo.clone(),
                        ctx,
                        body: Rc::new(inner.kind(w, body)?),
                    })
                })
            }
        };
        w.exit();
        r
    }

    fn telescope<'s>(
        &'s self,
        w: &mut Watch,
        ctx: &Ctx,
        fv: FvFn<'_>,
    ) -> Result<(Cow<'s, Sub>, Ctx), SubstError> {
        let mut cur: Cow<'s, Sub> = Cow::Borrowed(self);
        let mut out = Vec::with_capacity(ctx.len());
        for d in ctx.iter() {
            let d2 = match d {
                Decl::Ty { name, kind } => Decl::Ty {
                    name: name.clone(),
                    kind: cur.kind(w, kind)?,
                },
                Decl::Tm { name, ty } => Decl::Tm {
                    name: name.clone(),
                    ty: cur.ty(w, ty)?,
                },
            };
            let (next, nb) = cur.enter(d.name(), fv);
            out.push(match d2 {
                Decl::Ty { kind, .. } => Decl::Ty { name: nb, kind },
                Decl::Tm { ty, .. } => Decl::Tm { name: nb, ty },
            });
            if let Some(s) = next {
                cur = Cow::Owned(s);
            }
        }
        Ok((cur, Ctx(out)))
    }

    fn binders<'s>(&'s self, names: &[Name], fv: FvFn<'_>) -> (Cow<'s, Sub>, Vec<Name>) {
        let mut cur: Cow<'s, Sub> = Cow::Borrowed(self);
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let (next, nb) = cur.enter(n, fv);
            out.push(nb);
            if let Some(s) = next {
                cur = Cow::Owned(s);
            }
        }
        (cur, out)
    }

    fn ty(&self, w: &mut Watch, a: &Type) -> Result<Type, SubstError> {
        if self.is_empty() {
            return Ok(a.clone());
        }
        w.enter()?;
        let r = self.ty_inner(w, a);
        w.exit();
        r
    }

    fn ty_inner(&self, w: &mut Watch, a: &Type) -> Result<Type, SubstError> {
        let with_binders = |names: &mut dyn Iterator<Item = Name>| {
            let mut s = free_names_type(a);
            s.extend(names);
            s
        };
        Ok(match a {
            Type::Unit(k) => Type::Unit(k.clone()),
            Type::Neutral(p, k) => match self.neutral(w, p)? {
                NeutralResult::Reduced(t, _) => t,
                NeutralResult::StillNeutral(q) => Type::Neutral(q, k.clone()),
            },
            Type::Thunk { hi, names, body } => {
                let fv = || with_binders(&mut names.iter().cloned());
                let (inner, names) = self.binders(names, &fv);
                Type::Thunk {
                    hi: hi.clone(),
                    names,
                    body: Rc::new(inner.ty(w, body)?),
                }
            }
            Type::CtxUp { hi, lo, ctx, body } => {
                let fv = || with_binders(&mut ctx.iter().map(|d| d.name().clone()));
                let (inner, ctx) = self.telescope(w, ctx, &fv)?;
                Type::CtxUp {
                    hi: hi.clone(),
                    lo: lo.clone(),
                    ctx,
                    body: Rc::new(inner.ty(w, body)?),
                }
            }
            Type::Down { hi, lo, body } => Type::Down {
                hi: hi.clone(),
                lo: lo.clone(),
                body: Rc::new(self.ty(w, body)?),
            },
            Type::Forall { var, kind, body } => {
                let kind = self.kind(w, kind)?;
                let fv = || with_binders(&mut std::iter::once(var.clone()));
                let (next, var) = self.enter(var, &fv);
                let inner = next.as_ref().unwrap_or(self);
                Type::Forall {
                    var,
                    kind: Rc::new(kind),
                    body: Rc::new(inner.ty(w, body)?),
                }
            }
            Type::Arrow { dom, cod } => Type::Arrow {
                dom: Rc::new(self.ty(w, dom)?),
                cod: Rc::new(self.ty(w, cod)?),
            },
            Type::Data { name, mode, args } => Type::Data {
                name: name.clone(),
                mode: mode.clone(),
                args: args
                    .iter()
                    .map(|t| self.ty(w, t))
                    .collect::<Result<_, _>>()?,
            },
        })
    }

    fn neutral(&self, w: &mut Watch, p: &Neutral) -> Result<NeutralResult, SubstError> {
        w.enter()?;
        let r = self.neutral_inner(w, p);
        w.exit();
        r
    }

    fn neutral_inner(&self, w: &mut Watch, p: &Neutral) -> Result<NeutralResult, SubstError> {
        match p {
            Neutral::Var(a) => match self.map.get(a) {
                None => Ok(NeutralResult::StillNeutral(p.clone())),
                Some(Val::Ren(b)) => Ok(NeutralResult::StillNeutral(Neutral::Var(b.clone()))),
                Some(Val::Tm(_)) => Err(SubstError::SortMismatch(a.to_string())),
                Some(Val::Ty(t)) => match self.gamma.get(a) {
                    Some(k) => Ok(NeutralResult::Reduced(t.clone(), k.clone())),
                    None => Err(SubstError::MissingMeasure(a.to_string())),
                },
            },
            Neutral::Force { head, sub, hi, lo } => {
                let sub = self.subst(w, sub)?;
                match self.neutral(w, head)? {
                    NeutralResult::StillNeutral(h) => {
                        Ok(NeutralResult::StillNeutral(Neutral::Force {
                            head: Rc::new(h),
                            sub,
                            hi: hi.clone(),
                            lo: lo.clone(),
                        }))
                    }
                    NeutralResult::Reduced(Type::Thunk { names, body, .. }, kind) => {
                        let DfKind::CtxUp {
                            ctx: psi,
                            body: kappa,
                            ..
                        } = kind
                        else {
                            return Err(SubstError::KindMismatch);
                        };
                        if psi.len() != names.len() {
                            return Err(SubstError::Arity {
                                expected: psi.len(),
                                got: names.len(),
                            });
                        }
                        if sub.len() != names.len() {
                            return Err(SubstError::Arity {
                                expected: names.len(),
                                got: sub.len(),
                            });
                        }
                        let inner = positional(&sub, &names, &psi)?;
                        let t = inner.ty(w, &body)?;
                        Ok(NeutralResult::Reduced(t, (*kappa).clone()))
                    }
                    NeutralResult::Reduced(..) => Err(SubstError::NotAThunk),
                }
            }
        }
    }

    fn subst(&self, w: &mut Watch, s: &Subst) -> Result<Subst, SubstError> {
        if self.is_empty() {
            return Ok(s.clone());
        }
        s.iter()
            .map(|e| {
                Ok(match e {
                    Entry::Ty { name, ty, kind } => Entry::Ty {
                        name: name.clone(),
                        ty: self.ty(w, ty)?,
                        kind: kind.clone(),
                    },
                    Entry::Tm { name, term, mode } => Entry::Tm {
                        name: name.clone(),
                        term: self.term(w, term)?,
                        mode: mode.clone(),
                    },
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Subst)
    }

    fn term(&self, w: &mut Watch, e: &Term) -> Result<Term, SubstError> {
        if self.is_empty() {
            return Ok(e.clone());
        }
        w.enter()?;
        let r = self.term_inner(w, e);
        w.exit();
        r
    }

    fn under_one(
        &self,
        w: &mut Watch,
        var: &Name,
        node: &Term,
        body: &Term,
    ) -> Result<(Name, Term), SubstError> {
        let fv = || {
            let mut s = free_names_term(node);
            s.insert(var.clone());
            s
        };
        let (next, var) = self.enter(var, &fv);
        let inner = next.as_ref().unwrap_or(self);
        Ok((var, inner.term(w, body)?))
    }

    fn term_inner(&self, w: &mut Watch, e: &Term) -> Result<Term, SubstError> {
        Ok(match e {
            Term::Var(x) => match self.map.get(x) {
                None => e.clone(),
                Some(Val::Tm(t)) => t.clone(),
                Some(Val::Ren(y)) => Term::Var(y.clone()),
                Some(Val::Ty(_)) => return Err(SubstError::SortMismatch(x.to_string())),
            },
            Term::One(_) | Term::Def(_) => e.clone(),
            Term::Susp {
                hi,
                lo,
                names,
                body,
                ann,
            } => {
                let fv = || {
                    let mut s = free_names_term(e);
                    s.extend(names.iter().cloned());
                    s
                };
                let (inner, names, ann) = match ann {
                    None => {
                        let (inner, names) = self.binders(names, &fv);
                        (inner, names, None)
                    }
                    Some(c) => {
                        let (inner, c) = self.telescope(w, c, &fv)?;
                        (inner, names_of(&c), Some(c))
                    }
                };
                Term::Susp {
                    hi: hi.clone(),
                    lo: lo.clone(),
                    names,
                    body: Rc::new(inner.term(w, body)?),
                    ann,
                }
            }
            Term::Force { hi, lo, head, sub } => Term::Force {
                hi: hi.clone(),
                lo: lo.clone(),
                head: Rc::new(self.term(w, head)?),
                sub: self.subst(w, sub)?,
            },
            Term::Store { hi, lo, body } => Term::Store {
                hi: hi.clone(),
                lo: lo.clone(),
                body: Rc::new(self.term(w, body)?),
            },
            Term::Load {
                hi,
                lo,
                var,
                bound,
                body,
            } => {
                let bound = self.term(w, bound)?;
                let (var, body) = self.under_one(w, var, e, body)?;
                Term::Load {
                    hi: hi.clone(),
                    lo: lo.clone(),
                    var,
                    bound: Rc::new(bound),
                    body: Rc::new(body),
                }
            }
            Term::TLam { var, kind, body } => {
                let kind = self.kind(w, kind)?;
                let (var, body) = self.under_one(w, var, e, body)?;
                Term::TLam {
                    var,
                    kind,
                    body: Rc::new(body),
                }
            }
            Term::TApp { head, arg } => Term::TApp {
                head: Rc::new(self.term(w, head)?),
                arg: self.ty(w, arg)?,
            },
            Term::Lam { var, ann, body } => {
                let ann = self.ty(w, ann)?;
                let (var, body) = self.under_one(w, var, e, body)?;
                Term::Lam {
                    var,
                    ann,
                    body: Rc::new(body),
                }
            }
            Term::App { head, arg } => Term::App {
                head: Rc::new(self.term(w, head)?),
                arg: Rc::new(self.term(w, arg)?),
            },
            Term::Ctor {
                data,
                mode,
                ctor,
                args,
                targs,
            } => Term::Ctor {
                data: data.clone(),
                mode: mode.clone(),
                ctor: ctor.clone(),
                args: args
                    .iter()
                    .map(|a| self.term(w, a))
                    .collect::<Result<_, _>>()?,
                targs: targs
                    .iter()
                    .map(|t| self.ty(w, t))
                    .collect::<Result<_, _>>()?,
            },
            Term::Match {
                mode,
                scrut,
                branches,
            } => {
                let scrut = self.term(w, scrut)?;
                let mut out = Vec::with_capacity(branches.len());
                for b in branches {
                    let fv = || {
                        let mut s = free_names_term(&b.body);
                        s.extend(b.binders.iter().cloned());
                        s
                    };
                    let (inner, binders) = self.binders(&b.binders, &fv);
                    out.push(Branch {
                        ctor: b.ctor.clone(),
                        binders,
                        body: inner.term(w, &b.body)?,
                    });
                }
                Term::Match {
                    mode: mode.clone(),
                    scrut: Rc::new(scrut),
                    branches: out,
                }
            }
        })
    }
}

/// The substitution that instantiates a template's binders `names`
/// positionally with the entries of `sub`, measured by `psi`.
fn positional(sub: &Subst, names: &[Name], psi: &DfCtx) -> Result<Sub, SubstError> {
    let mut gamma = Vec::with_capacity(names.len());
    for ((e, n), d) in sub.iter().zip(names).zip(psi.0.iter()) {
        match (e, d) {
            (Entry::Ty { .. }, DfDecl::Ty(_, k)) => gamma.push(DfDecl::Ty(n.clone(), k.clone())),
            (Entry::Tm { .. }, DfDecl::Tm(_)) => gamma.push(DfDecl::Tm(n.clone())),
            _ => return Err(SubstError::SortMismatch(n.to_string())),
        }
    }
    Ok(Sub::new(&sub.renamed(names), &DfCtx(gamma)))
}

pub fn subst_type(s: &Subst, g: &DfCtx, a: &Type) -> Result<Type, SubstError> {
    Sub::new(s, g).ty(&mut Watch::default(), a)
}

/// Like [`subst_type`], reporting the maximum recursion depth reached and
/// failing once the depth exceeds `limit`.
pub fn subst_type_watched(
    s: &Subst,
    g: &DfCtx,
    a: &Type,
    limit: usize,
) -> (Result<Type, SubstError>, usize) {
    let mut w = Watch::new(Some(limit));
    let r = Sub::new(s, g).ty(&mut w, a);
    (r, w.max_depth())
}

pub fn subst_neutral(s: &Subst, g: &DfCtx, p: &Neutral) -> Result<NeutralResult, SubstError> {
    Sub::new(s, g).neutral(&mut Watch::default(), p)
}

pub fn subst_term(s: &Subst, g: &DfCtx, e: &Term) -> Result<Term, SubstError> {
    Sub::new(s, g).term(&mut Watch::default(), e)
}

pub fn subst_kind(s: &Subst, g: &DfCtx, k: &Kind) -> Result<Kind, SubstError> {
    Sub::new(s, g).kind(&mut Watch::default(), k)
}

pub fn subst_context(s: &Subst, g: &DfCtx, c: &Ctx) -> Result<Ctx, SubstError> {
    let sub = Sub::new(s, g);
    let fv = || {
        let mut out = HashSet::new();
        for d in c.iter() {
            out.insert(d.name().clone());
            match d {
                Decl::Ty { kind, .. } => out.extend(free_names_kind(kind)),
                Decl::Tm { ty, .. } => out.extend(free_names_type(ty)),
            }
        }
        out
    };
    Ok(sub.telescope(&mut Watch::default(), c, &fv)?.1)
}

pub fn subst_subst(s: &Subst, g: &DfCtx, t: &Subst) -> Result<Subst, SubstError> {
    Sub::new(s, g).subst(&mut Watch::default(), t)
}

/// Applies a substitution whose measure is recorded in its own entries.
pub fn apply_term(s: &Subst, e: &Term) -> Result<Term, SubstError> {
    subst_term(s, &s.measure(), e)
}

pub fn single_subst_type(
    a: &Name,
    t: &Type,
    k: &DfKind,
    target: &Type,
) -> Result<Type, SubstError> {
    let s = Subst(vec![Entry::Ty {
        name: a.clone(),
        ty: t.clone(),
        kind: k.clone(),
    }]);
    subst_type(&s, &s.measure(), target)
}

pub fn single_subst_term(x: &Name, e: &Term, k: &Mode, target: &Term) -> Result<Term, SubstError> {
    let s = Subst(vec![Entry::Tm {
        name: x.clone(),
        term: e.clone(),
        mode: k.clone(),
    }]);
    subst_term(&s, &s.measure(), target)
}

/// Substitutes a type for a type variable inside a term.
pub fn single_subst_type_in_term(
    a: &Name,
    t: &Type,
    k: &DfKind,
    target: &Term,
) -> Result<Term, SubstError> {
    let s = Subst(vec![Entry::Ty {
        name: a.clone(),
        ty: t.clone(),
        kind: k.clone(),
    }]);
    subst_term(&s, &s.measure(), target)
}

const RENAMING: &str = "renaming never reduces a type";

pub fn rename_type(pairs: &[(Name, Name)], a: &Type) -> Type {
    Sub::renaming(pairs)
        .ty(&mut Watch::default(), a)
        .expect(RENAMING)
}

pub fn rename_kind(pairs: &[(Name, Name)], k: &Kind) -> Kind {
    Sub::renaming(pairs)
        .kind(&mut Watch::default(), k)
        .expect(RENAMING)
}

pub fn rename_term(pairs: &[(Name, Name)], e: &Term) -> Term {
    Sub::renaming(pairs)
        .term(&mut Watch::default(), e)
        .expect(RENAMING)
}

/// Renames the binders of telescope `ctx` to `names`, together with a
/// body that lives under the telescope.
pub fn rename_telescope<T>(
    ctx: &Ctx,
    names: &[Name],
    body: &T,
    rename_body: impl Fn(&[(Name, Name)], &T) -> T,
) -> (Ctx, T) {
    let mut pairs: Vec<(Name, Name)> = Vec::new();
    let mut out = Vec::with_capacity(ctx.len());
    for (d, n) in ctx.iter().zip(names) {
        out.push(match d {
            Decl::Ty { kind, .. } => Decl::Ty {
                name: n.clone(),
                kind: rename_kind(&pairs, kind),
            },
            Decl::Tm { ty, .. } => Decl::Tm {
                name: n.clone(),
                ty: rename_type(&pairs, ty),
            },
        });
        pairs.retain(|(a, _)| a != d.name());
        if d.name() != n {
            pairs.push((d.name().clone(), n.clone()));
        }
    }
    let body = rename_body(&pairs, body);
    (Ctx(out), body)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Usage {
    Available,
    Consumed,
}

/// One flag per term declaration (or term entry), in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UsageMask(pub Vec<Usage>);

impl UsageMask {
    pub fn available(n: usize) -> UsageMask {
        UsageMask(vec![Usage::Available; n])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` is used on both sides of a split but its mode does not admit contraction")]
pub struct SplitError(pub String);

fn merge_by(
    spec: &ModeSpec,
    vars: &[(Name, Mode)],
    u1: &UsageMask,
    u2: &UsageMask,
) -> Result<UsageMask, SplitError> {
    assert!(
        u1.0.len() == vars.len() && u2.0.len() == vars.len(),
        "usage masks must align with their context"
    );
    vars.iter()
        .zip(u1.0.iter().zip(&u2.0))
        .map(|((x, k), (a, b))| match (a, b) {
            (Usage::Consumed, Usage::Consumed) if !spec.can_contract(k) => {
                Err(SplitError(x.to_string()))
            }
            (Usage::Available, Usage::Available) => Ok(Usage::Available),
            _ => Ok(Usage::Consumed),
        })
        .collect::<Result<_, _>>()
        .map(UsageMask)
}

fn term_decls(c: &Ctx) -> Vec<(Name, Mode)> {
    c.iter()
        .filter(|d| d.is_term())
        .map(|d| (d.name().clone(), d.mode().clone()))
        .collect()
}

fn term_entries(s: &Subst) -> Vec<(Name, Mode)> {
    s.iter()
        .filter_map(|e| match e {
            Entry::Tm { name, mode, .. } => Some((name.clone(), mode.clone())),
            Entry::Ty { .. } => None,
        })
        .collect()
}

pub fn merge_usage(
    spec: &ModeSpec,
    ctx: &Ctx,
    u1: &UsageMask,
    u2: &UsageMask,
) -> Result<UsageMask, SplitError> {
    merge_by(spec, &term_decls(ctx), u1, u2)
}

pub fn merge_subst_usage(
    spec: &ModeSpec,
    s: &Subst,
    u1: &UsageMask,
    u2: &UsageMask,
) -> Result<UsageMask, SplitError> {
    merge_by(spec, &term_entries(s), u1, u2)
}

/// Splits `s` along two masks over its term entries. Type entries go to
/// both halves; a term entry goes to each half that consumes it, and to
/// the left when neither does.
pub fn split_substitution(
    spec: &ModeSpec,
    s: &Subst,
    u1: &UsageMask,
    u2: &UsageMask,
) -> Result<(Subst, Subst), SplitError> {
    merge_subst_usage(spec, s, u1, u2)?;
    let (mut left, mut right) = (Vec::new(), Vec::new());
    let mut i = 0;
    for e in s.iter() {
        match e {
            Entry::Ty { .. } => {
                left.push(e.clone());
                right.push(e.clone());
            }
            Entry::Tm { .. } => {
                let (a, b) = (u1.0[i], u2.0[i]);
                if b == Usage::Consumed {
                    right.push(e.clone());
                }
                if a == Usage::Consumed || b == Usage::Available {
                    left.push(e.clone());
                }
                i += 1;
            }
        }
    }
    Ok((Subst(left), Subst(right)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, name};

    fn m(s: &str) -> Mode {
        Mode::new(s)
    }

    fn three() -> ModeSpec {
        ModeSpec::from_json(
            r#"{"modes":["C","P","GF"],"order":[["C","P"],["P","GF"]],
                "signatures":{"C":["C","W"],"P":["C","W"],"GF":[]}}"#,
        )
        .unwrap()
    }

    fn ty_entry(a: &str, t: Type, k: DfKind) -> Entry {
        Entry::Ty {
            name: name(a),
            ty: t,
            kind: k,
        }
    }

    fn tm_entry(x: &str, e: Term, k: &Mode) -> Entry {
        Entry::Tm {
            name: name(x),
            term: e,
            mode: k.clone(),
        }
    }

    /// `alpha : Up<m,l>[b : Type@l |- Type@l]`, substituted by the identity
    /// thunk, applied to `Unit@l`.
    fn identity_thunk_case() -> (Subst, DfCtx, Type) {
        let (mm, l) = (m("m"), m("l"));
        let kind = DfKind::CtxUp {
            hi: mm.clone(),
            lo: l.clone(),
            ctx: DfCtx(vec![DfDecl::Ty(name("b"), DfKind::Type(l.clone()))]),
            body: Rc::new(DfKind::Type(l.clone())),
        };
        let thunk = Type::Thunk {
            hi: mm.clone(),
            names: vec![name("b")],
            body: Rc::new(Type::var("b", &l)),
        };
        let s = Subst(vec![ty_entry("alpha", thunk, kind.clone())]);
        let g = DfCtx(vec![DfDecl::Ty(name("alpha"), kind)]);
        let target = Type::Neutral(
            Neutral::Force {
                head: Rc::new(Neutral::Var(name("alpha"))),
                sub: Subst(vec![ty_entry(
                    "b",
                    Type::Unit(l.clone()),
                    DfKind::Type(l.clone()),
                )]),
                hi: mm,
                lo: l.clone(),
            },
            l,
        );
        (s, g, target)
    }

    #[test]
    fn empty_substitution_is_identity() {
        let u = Type::Unit(m("k"));
        assert!(alpha_eq(
            &subst_type(&Subst::empty(), &DfCtx::empty(), &u).unwrap(),
            &u
        ));
        let e = Term::lam("x", u.clone(), Term::var("x"));
        assert!(alpha_eq(
            &subst_term(&Subst::empty(), &DfCtx::empty(), &e).unwrap(),
            &e
        ));
    }

    #[test]
    fn forcing_a_substituted_thunk_reduces() {
        let (s, g, target) = identity_thunk_case();
        let r = subst_type(&s, &g, &target).unwrap();
        assert!(alpha_eq(&r, &Type::Unit(m("l"))));
        let Type::Neutral(p, _) = &target else {
            unreachable!()
        };
        match subst_neutral(&s, &g, p).unwrap() {
            NeutralResult::Reduced(t, k) => {
                assert!(alpha_eq(&t, &Type::Unit(m("l"))));
                assert_eq!(k, DfKind::Type(m("l")));
            }
            other => panic!("expected reduction, got {other:?}"),
        }
    }

    #[test]
    fn variable_rows() {
        let k = m("k");
        let s = Subst(vec![ty_entry(
            "a",
            Type::Unit(k.clone()),
            DfKind::Type(k.clone()),
        )]);
        match subst_neutral(&s, &s.measure(), &Neutral::Var(name("a"))).unwrap() {
            NeutralResult::Reduced(t, kk) => {
                assert!(alpha_eq(&t, &Type::Unit(k.clone())));
                assert_eq!(kk, DfKind::Type(k.clone()));
            }
            other => panic!("{other:?}"),
        }
        match subst_neutral(&Subst::empty(), &DfCtx::empty(), &Neutral::Var(name("b"))).unwrap() {
            NeutralResult::StillNeutral(Neutral::Var(b)) => assert_eq!(&*b, "b"),
            other => panic!("{other:?}"),
        }
        let r = single_subst_type(
            &name("a"),
            &Type::Unit(k.clone()),
            &DfKind::Type(k.clone()),
            &Type::var("a", &k),
        )
        .unwrap();
        assert!(alpha_eq(&r, &Type::Unit(k)));
    }

    #[test]
    fn down_is_homomorphic() {
        let (s, g, target) = identity_thunk_case();
        let d = Type::down(&m("m"), &m("l"), target);
        let r = subst_type(&s, &g, &d).unwrap();
        assert!(alpha_eq(
            &r,
            &Type::down(&m("m"), &m("l"), Type::Unit(m("l")))
        ));
    }

    #[test]
    fn forcing_a_non_thunk_is_an_error() {
        let l = m("l");
        let s = Subst(vec![ty_entry(
            "a",
            Type::Unit(l.clone()),
            DfKind::Type(l.clone()),
        )]);
        let target = Type::Neutral(
            Neutral::Force {
                head: Rc::new(Neutral::Var(name("a"))),
                sub: Subst::empty(),
                hi: m("m"),
                lo: l.clone(),
            },
            l,
        );
        assert_eq!(
            subst_type(&s, &s.measure(), &target).unwrap_err(),
            SubstError::NotAThunk
        );
    }

    #[test]
    fn term_rows() {
        let k = m("k");
        let s = Subst(vec![tm_entry("x", Term::One(k.clone()), &k)]);
        assert!(alpha_eq(
            &subst_term(&s, &s.measure(), &Term::var("x")).unwrap(),
            &Term::One(k.clone())
        ));
        let st = Term::store(&m("m"), &k, Term::var("x"));
        assert!(alpha_eq(
            &subst_term(&s, &s.measure(), &st).unwrap(),
            &Term::store(&m("m"), &k, Term::One(k.clone()))
        ));
        assert!(alpha_eq(
            &single_subst_term(&name("x"), &Term::var("u"), &k, &Term::var("x")).unwrap(),
            &Term::var("u")
        ));
        let other = Term::var("y");
        assert!(alpha_eq(
            &single_subst_term(&name("x"), &Term::var("u"), &k, &other).unwrap(),
            &other
        ));
    }

    #[test]
    fn substitution_avoids_capture() {
        let k = m("k");
        // (\y. x)[x := y] must not capture.
        let e = Term::lam("y", Type::Unit(k.clone()), Term::var("x"));
        let r = single_subst_term(&name("x"), &Term::var("y"), &k, &e).unwrap();
        match &r {
            Term::Lam { var, body, .. } => {
                assert_ne!(&**var, "y");
                assert!(alpha_eq(&**body, &Term::var("y")));
            }
            _ => panic!(),
        }
        // Shadowed binders are left alone.
        let e = Term::lam("x", Type::Unit(k.clone()), Term::var("x"));
        let r = single_subst_term(&name("x"), &Term::One(k.clone()), &k, &e).unwrap();
        assert!(alpha_eq(&r, &e));
    }

    #[test]
    fn kind_context_and_subst_rows() {
        let k = m("k");
        let s = Subst(vec![tm_entry("z", Term::One(k.clone()), &k)]);
        assert!(matches!(
            subst_kind(&s, &s.measure(), &Kind::Type(k.clone())).unwrap(),
            Kind::Type(_)
        ));
        assert!(subst_context(&s, &s.measure(), &Ctx::empty())
            .unwrap()
            .is_empty());
        let t = Subst(vec![tm_entry("x", Term::var("y"), &k)]);
        let r = subst_subst(&s, &s.measure(), &t).unwrap();
        assert!(crate::syntax::alpha_eq(&r, &t));
    }

    #[test]
    fn renaming_a_telescope() {
        let p = m("P");
        let ctx = Ctx(vec![
            Decl::Ty {
                name: name("a"),
                kind: Kind::Type(p.clone()),
            },
            Decl::Tm {
                name: name("x"),
                ty: Type::var("a", &p),
            },
        ]);
        let (ctx2, body) = rename_telescope(
            &ctx,
            &[name("b"), name("y")],
            &Type::var("a", &p),
            rename_type,
        );
        assert!(matches!(&ctx2.0[1], Decl::Tm { ty, .. } if alpha_eq(ty, &Type::var("b", &p))));
        assert!(alpha_eq(&body, &Type::var("b", &p)));
    }

    fn gf_ctx() -> Ctx {
        let gf = m("GF");
        Ctx(vec![Decl::Tm {
            name: name("x"),
            ty: Type::Unit(gf),
        }])
    }

    #[test]
    fn merge_rows() {
        let spec = three();
        let c = UsageMask(vec![Usage::Consumed]);
        let a = UsageMask(vec![Usage::Available]);
        let p_ctx = Ctx(vec![Decl::Tm {
            name: name("x"),
            ty: Type::Unit(m("P")),
        }]);
        assert_eq!(merge_usage(&spec, &p_ctx, &c, &c).unwrap(), c);
        assert_eq!(
            merge_usage(&spec, &gf_ctx(), &c, &c).unwrap_err(),
            SplitError("x".into())
        );
        assert_eq!(merge_usage(&spec, &gf_ctx(), &a, &a).unwrap(), a);
    }

    #[test]
    fn split_rows() {
        let spec = three();
        let gf = m("GF");
        let ty = ty_entry("a", Type::Unit(gf.clone()), DfKind::Type(gf.clone()));
        let s = Subst(vec![ty.clone()]);
        let (l, r) = split_substitution(&spec, &s, &UsageMask(vec![]), &UsageMask(vec![])).unwrap();
        assert_eq!((l.len(), r.len()), (1, 1));

        let s = Subst(vec![tm_entry("x", Term::One(gf.clone()), &gf)]);
        let c = UsageMask(vec![Usage::Consumed]);
        let a = UsageMask(vec![Usage::Available]);
        let (l, r) = split_substitution(&spec, &s, &c, &a).unwrap();
        assert_eq!((l.len(), r.len()), (1, 0));
        assert!(split_substitution(&spec, &s, &c, &c).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn case() -> impl Strategy<Value = (Vec<u8>, Vec<Usage>, Vec<Usage>, Vec<Usage>)> {
            (0usize..6).prop_flat_map(|n| {
                let u = || {
                    proptest::collection::vec(
                        prop_oneof![Just(Usage::Available), Just(Usage::Consumed)],
                        n,
                    )
                };
                (proptest::collection::vec(0u8..3, n), u(), u(), u())
            })
        }

        fn ctx_of(modes: &[u8]) -> Ctx {
            let names = ["C", "P", "GF"];
            Ctx(modes
                .iter()
                .enumerate()
                .map(|(i, k)| Decl::Tm {
                    name: name(&format!("x{i}")),
                    ty: Type::Unit(m(names[*k as usize])),
                })
                .collect())
        }

        proptest! {
            #[test]
            fn merge_is_commutative_and_associative((modes, a, b, c) in case()) {
                let spec = three();
                let ctx = ctx_of(&modes);
                let (a, b, c) = (UsageMask(a), UsageMask(b), UsageMask(c));
                prop_assert_eq!(merge_usage(&spec, &ctx, &a, &b), merge_usage(&spec, &ctx, &b, &a));
                let left = merge_usage(&spec, &ctx, &a, &b)
                    .and_then(|ab| merge_usage(&spec, &ctx, &ab, &c));
                let right = merge_usage(&spec, &ctx, &b, &c)
                    .and_then(|bc| merge_usage(&spec, &ctx, &a, &bc));
                prop_assert_eq!(left.is_ok(), right.is_ok());
                if let (Ok(l), Ok(r)) = (left, right) {
                    prop_assert_eq!(l, r);
                }
            }

            #[test]
            fn split_then_merge_restores((modes, a, b, _c) in case()) {
                let spec = three();
                let names = ["C", "P", "GF"];
                let s = Subst(modes.iter().enumerate().map(|(i, k)| {
                    tm_entry(&format!("x{i}"), Term::One(m(names[*k as usize])), &m(names[*k as usize]))
                }).collect());
                let (a, b) = (UsageMask(a), UsageMask(b));
                if let Ok((l, r)) = split_substitution(&spec, &s, &a, &b) {
                    for e in s.iter() {
                        prop_assert!(l.iter().chain(r.iter()).any(|x| x.name() == e.name()));
                    }
                    prop_assert!(l.len() + r.len() >= s.len());
                }
            }
        }
    }
}
