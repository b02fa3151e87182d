//! Random construction of well-typed core terms.
//!
//! Terms are built type-directed with a resource-aware context, so most
//! candidates check; callers still run the checker and discard the rest.
//! Generation is biased toward the modal constructs and their redexes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mode_spec::{Mode, ModeSpec};
use crate::syntax::{alpha_eq, name, Branch, Ctx, Decl, Entry, Kind, Name, Subst, Term, Type};

#[derive(Clone, Debug)]
struct Slot {
    name: Name,
    ty: Type,
    used: bool,
}

/// A generator run. `variant` and `observer` together select the
/// alternative bodies drawn at positions hidden from the observer.
pub struct Generator<'a> {
    spec: &'a ModeSpec,
    rng: ChaCha8Rng,
    slots: Vec<Slot>,
    /// (mode, number of slots below which the filter applies)
    filters: Vec<(Mode, usize)>,
    fresh: usize,
    observer: Option<Mode>,
    variant: u64,
}

type G<T> = Option<T>;

impl<'a> Generator<'a> {
    pub fn new(spec: &'a ModeSpec, seed: u64) -> Generator<'a> {
        Generator {
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
            slots: Vec::new(),
            filters: Vec::new(),
            fresh: 0,
            observer: None,
            variant: 0,
        }
    }

    /// Bodies at positions hidden from `n` come from a separate stream
    /// selected by `variant`; everything else follows the main seed.
    pub fn with_observer(mut self, n: &Mode, variant: u64) -> Generator<'a> {
        self.observer = Some(n.clone());
        self.variant = variant;
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn fresh(&mut self, base: &str) -> Name {
        self.fresh += 1;
        name(&format!("{base}{}", self.fresh))
    }

    fn pick_mode(&mut self) -> Mode {
        self.spec.modes().choose(&mut self.rng).unwrap().clone()
    }

    pub fn modes_above(&self, k: &Mode, strict: bool) -> Vec<Mode> {
        self.spec
            .modes()
            .iter()
            .filter(|m| {
                if strict {
                    self.spec.gt(m, k)
                } else {
                    self.spec.ge(m, k)
                }
            })
            .cloned()
            .collect()
    }

    fn modes_below(&self, k: &Mode) -> Vec<Mode> {
        self.spec
            .modes()
            .iter()
            .filter(|m| self.spec.ge(k, m))
            .cloned()
            .collect()
    }

    fn hidden(&self, m: &Mode) -> bool {
        self.observer.as_ref().is_some_and(|n| !self.spec.ge(m, n))
    }

    // ---- types ----

    pub fn gen_type(&mut self, k: &Mode, depth: usize) -> Type {
        let roll = if depth == 0 {
            0
        } else {
            self.rng.gen_range(0..10)
        };
        match roll {
            0..=2 => Type::Unit(k.clone()),
            3 | 4 => Type::arrow(self.gen_type(k, depth - 1), self.gen_type(k, depth - 1)),
            5 | 6 => {
                let his = self.modes_above(k, false);
                let hi = his.choose(&mut self.rng).unwrap().clone();
                Type::down(&hi, k, self.gen_type(&hi, depth - 1))
            }
            7 | 8 => {
                let los = self.modes_below(k);
                let lo = los.choose(&mut self.rng).unwrap().clone();
                let ctx = self.gen_ctx(k, &lo, depth - 1);
                Type::ctx_up(k, &lo, ctx, self.gen_type(&lo, depth - 1))
            }
            _ if self.spec.can_weaken(k) && self.spec.can_contract(k) => {
                Type::data("Nat", k, Vec::new())
            }
            _ => Type::Unit(k.clone()),
        }
    }

    /// A template context for `Up<hi,lo>`: term declarations at modes
    /// `j` with `hi > j >= lo`.
    pub fn gen_ctx(&mut self, hi: &Mode, lo: &Mode, depth: usize) -> Ctx {
        let js: Vec<Mode> = self
            .modes_above(lo, false)
            .into_iter()
            .filter(|j| self.spec.gt(hi, j))
            .collect();
        if js.is_empty() {
            return Ctx::empty();
        }
        let n = self.rng.gen_range(0..3);
        let mut decls = Vec::new();
        for _ in 0..n {
            let j = js.choose(&mut self.rng).unwrap().clone();
            let ty = self.gen_type(&j, depth.min(1));
            decls.push(Decl::Tm {
                name: self.fresh("p"),
                ty,
            });
        }
        Ctx(decls)
    }

    // ---- context ----

    fn visible(&self, i: usize, k: &Mode) -> bool {
        let m = self.slots[i].ty.mode();
        self.spec.ge(m, k)
            && self
                .filters
                .iter()
                .all(|(f, below)| i >= *below || self.spec.ge(m, f))
    }

    fn usable(&self, i: usize, k: &Mode) -> bool {
        let s = &self.slots[i];
        self.visible(i, k) && !(s.used && !self.spec.can_contract(s.ty.mode()))
    }

    fn filtered<T>(&mut self, m: &Mode, f: impl FnOnce(&mut Self) -> G<T>) -> G<T> {
        self.filters.push((m.clone(), self.slots.len()));
        let r = f(self);
        self.filters.pop();
        r
    }

    /// Runs `f` with `decls` in scope; fails if a declaration that cannot
    /// be weakened is left unused.
    fn bind<T>(&mut self, decls: &[(Name, Type)], f: impl FnOnce(&mut Self) -> G<T>) -> G<T> {
        let base = self.slots.len();
        for (x, t) in decls {
            self.slots.push(Slot {
                name: x.clone(),
                ty: t.clone(),
                used: false,
            });
        }
        let r = f(self);
        let ok = self.slots[base..]
            .iter()
            .all(|s| s.used || self.spec.can_weaken(s.ty.mode()));
        self.slots.truncate(base);
        if ok {
            r
        } else {
            None
        }
    }

    fn use_var(&mut self, i: usize) -> Term {
        self.slots[i].used = true;
        Term::Var(self.slots[i].name.clone())
    }

    fn candidates(&self, pred: impl Fn(&Type) -> bool, k: &Mode) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| self.usable(i, k) && pred(&self.slots[i].ty))
            .collect()
    }

    /// A variable of exactly type `a`, preferring ones that must be used.
    fn leaf_var(&mut self, a: &Type) -> G<Term> {
        let k = a.mode().clone();
        let cands = self.candidates(|t| alpha_eq(t, a), &k);
        let pressing: Vec<usize> = cands
            .iter()
            .copied()
            .filter(|&i| !self.slots[i].used && !self.spec.can_weaken(self.slots[i].ty.mode()))
            .collect();
        let pool = if pressing.is_empty() { cands } else { pressing };
        let i = *pool.choose(&mut self.rng)?;
        Some(self.use_var(i))
    }

    fn has_pressing(&self, a: &Type) -> bool {
        let k = a.mode();
        (0..self.slots.len()).any(|i| {
            let s = &self.slots[i];
            !s.used
                && !self.spec.can_weaken(s.ty.mode())
                && self.visible(i, k)
                && alpha_eq(&s.ty, a)
        })
    }

    // ---- terms ----

    /// A closed term of a random type at a random mode.
    pub fn closed_term(&mut self, depth: usize) -> G<(Term, Type)> {
        let k = self.pick_mode();
        self.closed_term_at(&k, depth)
    }

    pub fn closed_term_at(&mut self, k: &Mode, depth: usize) -> G<(Term, Type)> {
        let ty = self.gen_type(k, 2);
        let e = self.gen(&ty, depth)?;
        Some((e, ty))
    }

    /// A term of type `a` with the term declarations of `ctx` in scope.
    pub fn term_in(&mut self, ctx: &Ctx, a: &Type, depth: usize) -> G<Term> {
        let decls: Vec<(Name, Type)> = ctx
            .iter()
            .filter_map(|d| match d {
                Decl::Tm { name, ty } => Some((name.clone(), ty.clone())),
                Decl::Ty { .. } => None,
            })
            .collect();
        let saved = std::mem::take(&mut self.slots);
        let r = self.bind(&decls, |s| s.gen(a, depth));
        self.slots = saved;
        r
    }

    /// A term of type `a` in the current context, or `None` when the
    /// resource discipline could not be met.
    pub fn gen(&mut self, a: &Type, depth: usize) -> G<Term> {
        if self.has_pressing(a) && self.rng.gen_bool(0.7) {
            return self.leaf_var(a);
        }
        if depth == 0 {
            if self.rng.gen_bool(0.5) {
                if let Some(v) = self.leaf_var(a) {
                    return Some(v);
                }
            }
            return self.intro(a, 0);
        }
        match self.rng.gen_range(0..16) {
            0..=4 => self.intro(a, depth),
            5 => self.leaf_var(a).or_else(|| self.intro(a, depth)),
            6 | 7 => self.beta(a, depth),
            8 | 9 => self.load_store(a, depth),
            10 | 11 => self.force_susp(a, depth),
            12 => self.poly_id(a, depth),
            13 => self.match_nat(a, depth),
            _ => self.eliminate(a, depth).or_else(|| self.intro(a, depth)),
        }
    }

    fn intro(&mut self, a: &Type, depth: usize) -> G<Term> {
        let d = depth.saturating_sub(1);
        match a {
            Type::Unit(k) => Some(Term::One(k.clone())),
            Type::Arrow { dom, cod } => {
                let x = self.fresh("x");
                let body = self.bind(&[(x.clone(), (**dom).clone())], |s| s.gen(cod, d))?;
                Some(Term::Lam {
                    var: x,
                    ann: (**dom).clone(),
                    body: body.into(),
                })
            }
            Type::Down { hi, lo, body } => {
                let e = self.filtered(hi, |s| s.gen(body, d))?;
                Some(Term::store(hi, lo, e))
            }
            Type::CtxUp { hi, lo, ctx, body } => {
                // Term declarations never occur in types, so the binders
                // can be renamed apart from everything in scope.
                let decls: Vec<(Name, Type)> = ctx
                    .iter()
                    .map(|dc| match dc {
                        Decl::Tm { ty, .. } => (self.fresh("p"), ty.clone()),
                        Decl::Ty { .. } => unreachable!("generated contexts hold terms only"),
                    })
                    .collect();
                let ann = Ctx(decls
                    .iter()
                    .map(|(name, ty)| Decl::Tm {
                        name: name.clone(),
                        ty: ty.clone(),
                    })
                    .collect());
                let e = self.hidden_part(lo, |s| s.bind(&decls, |s| s.gen(body, d)))?;
                Some(Term::Susp {
                    hi: hi.clone(),
                    lo: lo.clone(),
                    names: decls.iter().map(|(x, _)| x.clone()).collect(),
                    body: e.into(),
                    ann: Some(ann),
                })
            }
            Type::Data { mode, .. } => {
                if depth == 0 || self.rng.gen_bool(0.5) {
                    Some(nat_ctor(mode, "Zero", Vec::new()))
                } else {
                    let n = self.gen(a, d)?;
                    Some(nat_ctor(mode, "Succ", vec![n]))
                }
            }
            _ => self.leaf_var(a),
        }
    }

    /// Generates a subterm at mode `m`. When `m` is hidden from the
    /// observer the subterm is drawn from a side stream, so two runs that
    /// differ only in `variant` agree everywhere else.
    fn hidden_part<T>(&mut self, m: &Mode, f: impl FnOnce(&mut Self) -> G<T>) -> G<T> {
        if !self.hidden(m) {
            return f(self);
        }
        let seed: u64 = self.rng.gen();
        let side =
            ChaCha8Rng::seed_from_u64(seed ^ self.variant.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let main = std::mem::replace(&mut self.rng, side);
        let r = f(self);
        self.rng = main;
        r
    }

    fn beta(&mut self, a: &Type, depth: usize) -> G<Term> {
        let k = a.mode().clone();
        let b = self.gen_type(&k, 1);
        let x = self.fresh("x");
        let body = self.bind(&[(x.clone(), b.clone())], |s| s.gen(a, depth - 1))?;
        let arg = self.gen(&b, depth - 1)?;
        Some(Term::app(
            Term::Lam {
                var: x,
                ann: b,
                body: body.into(),
            },
            arg,
        ))
    }

    fn load_store(&mut self, a: &Type, depth: usize) -> G<Term> {
        let k = a.mode().clone();
        let los = self.modes_above(&k, false);
        let lo = los.choose(&mut self.rng).unwrap().clone();
        let his = self.modes_above(&lo, false);
        let hi = his.choose(&mut self.rng).unwrap().clone();
        let b = self.gen_type(&hi, 1);
        let stored = self.filtered(&lo, |s| s.filtered(&hi, |s| s.gen(&b, depth - 1)))?;
        let x = self.fresh("r");
        let body = self.bind(&[(x.clone(), b)], |s| s.gen(a, depth - 1))?;
        Some(Term::Load {
            hi: hi.clone(),
            lo: lo.clone(),
            var: x,
            bound: Term::store(&hi, &lo, stored).into(),
            body: body.into(),
        })
    }

    fn force_susp(&mut self, a: &Type, depth: usize) -> G<Term> {
        let lo = a.mode().clone();
        let his = self.modes_above(&lo, false);
        let hi = his.choose(&mut self.rng).unwrap().clone();
        let ctx = self.gen_ctx(&hi, &lo, 1);
        let up = Type::ctx_up(&hi, &lo, ctx.clone(), a.clone());
        let head = self.filtered(&hi, |s| s.intro(&up, depth))?;
        let sub = self.gen_subst(&ctx, depth - 1)?;
        Some(Term::force(&hi, &lo, head, sub))
    }

    fn gen_subst(&mut self, ctx: &Ctx, depth: usize) -> G<Subst> {
        let mut out = Vec::new();
        for d in ctx.iter() {
            let Decl::Tm { name, ty } = d else {
                unreachable!("generated contexts hold terms only")
            };
            let e = self.hidden_part(ty.mode(), |s| s.gen(ty, depth))?;
            out.push(Entry::Tm {
                name: name.clone(),
                term: e,
                mode: ty.mode().clone(),
            });
        }
        Some(Subst(out))
    }

    fn poly_id(&mut self, a: &Type, depth: usize) -> G<Term> {
        let k = a.mode().clone();
        let tv = self.fresh("a");
        let x = self.fresh("x");
        let tyvar = Type::Neutral(crate::syntax::Neutral::Var(tv.clone()), k.clone());
        let id = Term::TLam {
            var: tv,
            kind: Kind::Type(k.clone()),
            body: Term::Lam {
                var: x.clone(),
                ann: tyvar,
                body: Term::Var(x).into(),
            }
            .into(),
        };
        let arg = self.gen(a, depth - 1)?;
        Some(Term::app(Term::tapp(id, a.clone()), arg))
    }

    fn match_nat(&mut self, a: &Type, depth: usize) -> G<Term> {
        let k = a.mode().clone();
        if !(self.spec.can_weaken(&k) && self.spec.can_contract(&k)) {
            return self.intro(a, depth);
        }
        let nat = Type::data("Nat", &k, Vec::new());
        let scrut = self.filtered(&k, |s| s.gen(&nat, depth - 1))?;
        let before: Vec<bool> = self.slots.iter().map(|s| s.used).collect();
        let zero = self.gen(a, depth - 1)?;
        let after_zero: Vec<bool> = self.slots.iter().map(|s| s.used).collect();
        for (s, u) in self.slots.iter_mut().zip(&before) {
            s.used = *u;
        }
        let n = self.fresh("n");
        let succ = self.bind(&[(n.clone(), nat)], |s| s.gen(a, depth - 1))?;
        let after_succ: Vec<bool> = self.slots.iter().map(|s| s.used).collect();
        let agree = self
            .slots
            .iter()
            .zip(after_zero.iter().zip(&after_succ))
            .all(|(s, (u, v))| u == v || self.spec.can_weaken(s.ty.mode()));
        if !agree {
            return None;
        }
        for (s, (u, v)) in self
            .slots
            .iter_mut()
            .zip(after_zero.iter().zip(&after_succ))
        {
            s.used = *u || *v;
        }
        Some(Term::Match {
            mode: k,
            scrut: scrut.into(),
            branches: vec![
                Branch {
                    ctor: name("Zero"),
                    binders: Vec::new(),
                    body: zero,
                },
                Branch {
                    ctor: name("Succ"),
                    binders: vec![n],
                    body: succ,
                },
            ],
        })
    }

    /// Uses a variable whose type eliminates to `a`.
    fn eliminate(&mut self, a: &Type, depth: usize) -> G<Term> {
        let k = a.mode().clone();
        let spec = self.spec;
        let cands: Vec<usize> = (0..self.slots.len())
            .filter(|&i| {
                let t = &self.slots[i].ty;
                match t {
                    Type::Arrow { cod, .. } => alpha_eq(&**cod, a) && self.usable(i, &k),
                    Type::Down { lo, .. } => spec.ge(lo, &k) && self.usable(i, lo),
                    Type::CtxUp { lo, body, .. } => {
                        lo == &k && alpha_eq(&**body, a) && self.usable(i, t.mode())
                    }
                    _ => false,
                }
            })
            .collect();
        let i = *cands.choose(&mut self.rng)?;
        let t = self.slots[i].ty.clone();
        match t {
            Type::Arrow { dom, .. } => {
                let f = self.use_var(i);
                let arg = self.gen(&dom, depth - 1)?;
                Some(Term::app(f, arg))
            }
            Type::Down { hi, lo, body } => {
                let r = self.use_var(i);
                let x = self.fresh("r");
                let e = self.bind(&[(x.clone(), (*body).clone())], |s| s.gen(a, depth - 1))?;
                Some(Term::Load {
                    hi,
                    lo,
                    var: x,
                    bound: r.into(),
                    body: e.into(),
                })
            }
            Type::CtxUp { hi, lo, ctx, .. } => {
                let u = self.use_var(i);
                let sub = self.gen_subst(&ctx, depth - 1)?;
                Some(Term::force(&hi, &lo, u, sub))
            }
            _ => None,
        }
    }

    // ---- open terms ----

    /// An open term in a fresh context of term declarations, returned
    /// with that context and its type. Every declaration is used when
    /// its mode demands it.
    pub fn open_term(&mut self, depth: usize) -> G<(Ctx, Term, Type)> {
        let k = self.pick_mode();
        let n = self.rng.gen_range(1..4);
        let mut decls = Vec::new();
        for _ in 0..n {
            let ms = self.modes_above(&k, false);
            let m = ms.choose(&mut self.rng).unwrap().clone();
            let t = self.gen_type(&m, 1);
            decls.push((self.fresh("d"), t));
        }
        let ty = self.gen_type(&k, 1);
        let e = self.bind(&decls, |s| s.gen(&ty, depth))?;
        let ctx = Ctx(decls
            .into_iter()
            .map(|(name, ty)| Decl::Tm { name, ty })
            .collect());
        Some((ctx, e, ty))
    }

    /// A closed substitution for a context of term declarations.
    pub fn closed_subst(&mut self, ctx: &Ctx, depth: usize) -> G<Subst> {
        let saved = std::mem::take(&mut self.slots);
        let r = self.gen_subst(ctx, depth);
        self.slots = saved;
        r
    }
}

fn nat_ctor(mode: &Mode, c: &str, args: Vec<Term>) -> Term {
    Term::Ctor {
        data: name("Nat"),
        mode: mode.clone(),
        ctor: name(c),
        args,
        targs: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::equiv_term;
    use crate::props::{standard_specs, Harness};
    use crate::syntax::{free_names_term, Kind};
    use crate::typing::{check_term, check_type, CheckState};

    #[test]
    fn generated_types_are_well_kinded() {
        for (label, spec) in standard_specs() {
            let h = Harness::new(&spec).unwrap();
            let mut g = Generator::new(&spec, 1);
            for k in spec.modes() {
                for _ in 0..50 {
                    let a = g.gen_type(k, 3);
                    assert_eq!(a.mode(), k);
                    check_type(
                        &spec,
                        h.signature(),
                        &Ctx::empty(),
                        &a,
                        &Kind::Type(k.clone()),
                    )
                    .unwrap_or_else(|e| panic!("{label}: {a} is ill-kinded: {e}"));
                }
            }
        }
    }

    #[test]
    fn modes_above_follows_the_order() {
        let (_, spec) = standard_specs().pop().unwrap();
        let g = Generator::new(&spec, 0);
        let names = |v: Vec<Mode>| v.iter().map(|m| m.name().to_string()).collect::<Vec<_>>();
        assert_eq!(names(g.modes_above(&Mode::new("P"), false)), ["C", "P"]);
        assert_eq!(names(g.modes_above(&Mode::new("P"), true)), ["C"]);
        assert_eq!(
            names(g.modes_above(&Mode::new("C"), true)),
            Vec::<String>::new()
        );
    }

    #[test]
    fn candidates_are_closed_and_mostly_well_typed() {
        for (label, spec) in standard_specs() {
            let h = Harness::new(&spec).unwrap();
            let mut g = Generator::new(&spec, 3);
            let (mut made, mut ok) = (0, 0);
            for _ in 0..200 {
                let Some((e, a)) = g.closed_term(4) else {
                    continue;
                };
                made += 1;
                assert!(free_names_term(&e).is_empty(), "{label}: {e} is open");
                let st = CheckState::new(&spec, h.signature(), Ctx::empty(), a.mode().clone());
                if check_term(&st, &e, &a).is_ok() {
                    ok += 1;
                }
            }
            assert!(made > 100, "{label}: only {made} candidates");
            assert!(ok * 2 > made, "{label}: {ok} of {made} candidates check");
        }
    }

    #[test]
    fn observer_variants_agree_on_visible_parts() {
        let (_, spec) = standard_specs().pop().unwrap();
        let n = Mode::new("P");
        let mut differ = 0;
        for seed in 0..60 {
            let a = Generator::new(&spec, seed)
                .with_observer(&n, 0)
                .closed_term_at(&n, 4);
            let b = Generator::new(&spec, seed)
                .with_observer(&n, 1)
                .closed_term_at(&n, 4);
            if let (Some((e1, t1)), Some((e2, t2))) = (a, b) {
                assert!(alpha_eq(&t1, &t2));
                assert!(equiv_term(&spec, &n, t1.mode(), &e1, &e2), "{e1} vs {e2}");
                if !alpha_eq(&e1, &e2) {
                    differ += 1;
                }
            }
        }
        assert!(differ > 0, "no variant pair differed");
    }
}
