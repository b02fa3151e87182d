use super::ast::*;
use super::lexer::{lex, Tok};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

/// Tokens that can begin an application argument.
fn starts_atom(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Ident(_)
            | Tok::Num(_)
            | Tok::Kw("unit")
            | Tok::Kw("susp")
            | Tok::Kw("force")
            | Tok::Sym("(")
    )
}

fn starts_type_atom(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Ident(_)
            | Tok::Kw("Unit")
            | Tok::Kw("Up")
            | Tok::Kw("force")
            | Tok::Kw("thunk")
            | Tok::Sym("(")
    )
}

impl Parser {
    pub fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn mode(&mut self) -> PResult<SMode> {
        let span = self.span();
        let name = self.ident()?;
        Ok(SMode { name, span })
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    /// Runs `f`, restoring the position if it fails.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Parser) -> PResult<T>) -> PResult<T> {
        let save = self.pos;
        let r = f(self);
        if r.is_err() {
            self.pos = save;
        }
        r
    }

    // ---- modules ----

    pub fn module(&mut self) -> PResult<SurfaceModule> {
        let mut items = Vec::new();
        while !self.at_eof() {
            items.push(self.item()?);
        }
        Ok(SurfaceModule { items })
    }

    pub fn item(&mut self) -> PResult<Item> {
        let span = self.span();
        match self.peek() {
            Tok::Sym("#") => {
                self.bump();
                match self.peek().clone() {
                    Tok::Ident(s) if s == "modes" => {
                        self.bump();
                    }
                    _ => return self.error(&["`modes`"]),
                }
                match self.bump() {
                    Tok::Str(path) => Ok(Item::Pragma { path, span }),
                    _ => {
                        self.pos -= 1;
                        self.error(&["a quoted path"])
                    }
                }
            }
            Tok::Kw("data") => {
                self.bump();
                Ok(Item::Data(self.data(span)?))
            }
            Tok::Kw("def") => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym("=")?;
                let body = self.expr()?;
                Ok(Item::Def(SDef {
                    name,
                    ty,
                    body,
                    span,
                }))
            }
            _ => self.error(&["`def`", "`data`", "`#modes`"]),
        }
    }

    fn data(&mut self, span: Span) -> PResult<SData> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mode_param = self.ident()?;
        self.expect_sym("}")?;
        let mut params = Vec::new();
        while self.eat_sym("(") {
            let p = self.ident()?;
            self.expect_sym(":")?;
            let k = self.kind()?;
            match &k {
                SKind::Type(m) if m.name == mode_param => {}
                _ => {
                    return Err(ParseError {
                        span: self.span(),
                        expected: vec![format!("parameter kind `Type@{mode_param}`")],
                        found: "another kind".into(),
                    })
                }
            }
            self.expect_sym(")")?;
            params.push(p);
        }
        self.expect_sym("=")?;
        let mut ctors = Vec::new();
        self.eat_sym("|");
        loop {
            let cspan = self.span();
            let cname = self.ident()?;
            let mut args = Vec::new();
            while starts_type_atom(self.peek()) {
                args.push(self.ty_atom()?);
            }
            ctors.push(SCtor {
                name: cname,
                args,
                span: cspan,
            });
            if !self.eat_sym("|") {
                break;
            }
        }
        Ok(SData {
            name,
            mode_param,
            params,
            ctors,
            span,
        })
    }

    // ---- kinds, types, contexts ----

    pub fn kind(&mut self) -> PResult<SKind> {
        if self.is_kw("Type") {
            self.bump();
            self.expect_sym("@")?;
            return Ok(SKind::Type(self.mode()?));
        }
        if self.is_kw("Up") {
            self.bump();
            let (hi, lo) = self.mode_pair()?;
            self.expect_sym("[")?;
            let ctx = self.ctx()?;
            self.expect_sym("|-")?;
            let body = self.kind()?;
            self.expect_sym("]")?;
            return Ok(SKind::Up {
                hi,
                lo,
                ctx,
                body: Box::new(body),
            });
        }
        self.error(&["a kind (`Type@m` or `Up<m,l>[...]`)"])
    }

    fn mode_pair(&mut self) -> PResult<(SMode, SMode)> {
        self.expect_sym("<")?;
        let hi = self.mode()?;
        self.expect_sym(",")?;
        let lo = self.mode()?;
        self.expect_sym(">")?;
        Ok((hi, lo))
    }

    fn ctx(&mut self) -> PResult<Vec<SDecl>> {
        let mut out = Vec::new();
        if self.is_sym("|-") {
            return Ok(out);
        }
        loop {
            let span = self.span();
            let name = self.ident()?;
            self.expect_sym(":")?;
            let decl = match self.attempt(|p| {
                let k = p.kind()?;
                if p.is_sym(",") || p.is_sym("|-") {
                    Ok(k)
                } else {
                    p.error(&["`,`", "`|-`"])
                }
            }) {
                Ok(kind) => SDecl::Ty { name, kind, span },
                Err(_) => SDecl::Tm {
                    name,
                    ty: self.ty()?,
                    span,
                },
            };
            out.push(decl);
            if !self.eat_sym(",") {
                break;
            }
        }
        Ok(out)
    }

    pub fn ty(&mut self) -> PResult<SType> {
        let span = self.span();
        if self.is_kw("forall") {
            self.bump();
            let a = self.ident()?;
            self.expect_sym(":")?;
            let k = self.kind()?;
            self.expect_sym(".")?;
            let body = self.ty()?;
            return Ok(SType::new(STypeNode::Forall(a, k, Box::new(body)), span));
        }
        let lhs = self.ty_app()?;
        if self.eat_sym("->") || self.eat_sym("-o") {
            let rhs = self.ty()?;
            return Ok(SType::new(
                STypeNode::Arrow(Box::new(lhs), Box::new(rhs)),
                span,
            ));
        }
        Ok(lhs)
    }

    fn ty_app(&mut self) -> PResult<SType> {
        let span = self.span();
        if self.is_kw("Down") {
            self.bump();
            let (hi, lo) = self.mode_pair()?;
            let body = self.ty_app()?;
            return Ok(SType::new(
                STypeNode::Down {
                    hi,
                    lo,
                    body: Box::new(body),
                },
                span,
            ));
        }
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Sym("{")) {
            let name = self.ident()?;
            self.expect_sym("{")?;
            let mode = self.mode()?;
            self.expect_sym("}")?;
            let mut args = Vec::new();
            while starts_type_atom(self.peek()) {
                args.push(self.ty_atom()?);
            }
            return Ok(SType::new(STypeNode::Data { name, mode, args }, span));
        }
        self.ty_atom()
    }

    fn ty_atom(&mut self) -> PResult<SType> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Kw("Unit") => {
                self.bump();
                self.expect_sym("@")?;
                Ok(SType::new(STypeNode::Unit(self.mode()?), span))
            }
            Tok::Ident(a) => {
                self.bump();
                if self.eat_sym("{") {
                    let mode = self.mode()?;
                    self.expect_sym("}")?;
                    return Ok(SType::new(
                        STypeNode::Data {
                            name: a,
                            mode,
                            args: vec![],
                        },
                        span,
                    ));
                }
                Ok(SType::new(STypeNode::Var(a), span))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Kw("Up") => {
                self.bump();
                let (hi, lo) = self.mode_pair()?;
                self.expect_sym("[")?;
                let ctx = self.ctx()?;
                self.expect_sym("|-")?;
                let body = self.ty()?;
                self.expect_sym("]")?;
                Ok(SType::new(
                    STypeNode::Up {
                        hi,
                        lo,
                        ctx,
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            Tok::Kw("force") => {
                self.bump();
                let head = self.ty_app()?;
                self.expect_sym("@")?;
                let args = self.args()?;
                Ok(SType::new(
                    STypeNode::Force {
                        head: Box::new(head),
                        args,
                    },
                    span,
                ))
            }
            Tok::Kw("thunk") => {
                self.bump();
                self.expect_sym("(")?;
                let names = self.names()?;
                let body = self.ty()?;
                self.expect_sym(")")?;
                Ok(SType::new(
                    STypeNode::Thunk {
                        names,
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            _ => self.error(&["a type"]),
        }
    }

    /// `x1, ..., xn .` with `n` possibly zero.
    fn names(&mut self) -> PResult<Vec<String>> {
        let mut names = Vec::new();
        if !self.eat_sym(".") {
            loop {
                names.push(self.ident()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(".")?;
        }
        Ok(names)
    }

    fn args(&mut self) -> PResult<Vec<SArg>> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            let span = self.span();
            let end_ok = |p: &Parser| p.is_sym(",") || p.is_sym(")");
            let start = self.pos;
            let term = self
                .attempt(|p| {
                    let e = p.expr()?;
                    if end_ok(p) {
                        Ok(e)
                    } else {
                        p.error(&["`,`", "`)`"])
                    }
                })
                .ok();
            let after_term = self.pos;
            self.pos = start;
            let ty = self
                .attempt(|p| {
                    let t = p.ty()?;
                    if end_ok(p) {
                        Ok(t)
                    } else {
                        p.error(&["`,`", "`)`"])
                    }
                })
                .ok();
            match (&term, &ty) {
                (None, None) => {
                    // Report the error of the term reading.
                    self.pos = start;
                    self.expr()?;
                    return self.error(&["`,`", "`)`"]);
                }
                (Some(_), None) => self.pos = after_term,
                _ => {}
            }
            out.push(SArg { term, ty, span });
            if self.eat_sym(")") {
                break;
            }
            self.expect_sym(",")?;
        }
        Ok(out)
    }

    // ---- terms ----

    pub fn expr(&mut self) -> PResult<STerm> {
        let span = self.span();
        match self.peek() {
            Tok::Sym("\\") => {
                self.bump();
                let x = self.ident()?;
                let ann = if self.eat_sym(":") {
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect_sym(".")?;
                let body = self.expr()?;
                Ok(STerm::new(STermNode::Lam(x, ann, Box::new(body)), span))
            }
            Tok::Sym("/\\") => {
                self.bump();
                let a = self.ident()?;
                let k = if self.eat_sym(":") {
                    Some(self.kind()?)
                } else {
                    None
                };
                self.expect_sym(".")?;
                let body = self.expr()?;
                Ok(STerm::new(STermNode::TLam(a, k, Box::new(body)), span))
            }
            Tok::Kw("load") => {
                self.bump();
                let x = self.ident()?;
                self.expect_sym("=")?;
                let bound = self.expr()?;
                self.expect_kw("in")?;
                let body = self.expr()?;
                Ok(STerm::new(
                    STermNode::Load(x, Box::new(bound), Box::new(body)),
                    span,
                ))
            }
            Tok::Kw("match") => {
                self.bump();
                let scrut = self.expr()?;
                self.expect_kw("with")?;
                let mut branches = Vec::new();
                self.eat_sym("|");
                loop {
                    let bspan = self.span();
                    let ctor = self.ident()?;
                    let mut binders = Vec::new();
                    while let Tok::Ident(_) = self.peek() {
                        binders.push(self.ident()?);
                    }
                    self.expect_sym("=>")?;
                    let body = self.expr()?;
                    branches.push(SBranch {
                        ctor,
                        binders,
                        body,
                        span: bspan,
                    });
                    if !self.eat_sym("|") {
                        break;
                    }
                }
                Ok(STerm::new(
                    STermNode::Match(Box::new(scrut), branches),
                    span,
                ))
            }
            Tok::Kw("store") => {
                self.bump();
                let body = self.expr()?;
                Ok(STerm::new(STermNode::Store(Box::new(body)), span))
            }
            _ => self.app(),
        }
    }

    fn app(&mut self) -> PResult<STerm> {
        let mut head = self.atom()?;
        loop {
            if self.is_sym("[") {
                self.bump();
                let t = self.ty()?;
                self.expect_sym("]")?;
                let span = head.span;
                head = STerm::new(STermNode::TApp(Box::new(head), t), span);
            } else if starts_atom(self.peek()) {
                let arg = self.atom()?;
                let span = head.span;
                head = match head.node {
                    STermNode::Ctor {
                        name,
                        mode,
                        mut args,
                        targs,
                    } => {
                        args.push(arg);
                        STerm::new(
                            STermNode::Ctor {
                                name,
                                mode,
                                args,
                                targs,
                            },
                            span,
                        )
                    }
                    node => STerm::new(
                        STermNode::App(Box::new(STerm::new(node, span)), Box::new(arg)),
                        span,
                    ),
                };
            } else {
                return Ok(head);
            }
        }
    }

    fn atom(&mut self) -> PResult<STerm> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                if self.is_sym("{") {
                    self.bump();
                    let mode = self.mode()?;
                    self.expect_sym("}")?;
                    return Ok(STerm::new(
                        STermNode::Ctor {
                            name: x,
                            mode: Some(mode),
                            args: vec![],
                            targs: vec![],
                        },
                        span,
                    ));
                }
                Ok(STerm::new(STermNode::Var(x), span))
            }
            Tok::Kw("unit") => {
                self.bump();
                let mode = if self.eat_sym("@") {
                    Some(self.mode()?)
                } else {
                    None
                };
                Ok(STerm::new(STermNode::Unit(mode), span))
            }
            Tok::Num(n) => {
                self.bump();
                self.expect_sym("@")?;
                let mode = self.mode()?;
                let mut t = STerm::new(
                    STermNode::Ctor {
                        name: "Zero".into(),
                        mode: Some(mode.clone()),
                        args: vec![],
                        targs: vec![],
                    },
                    span,
                );
                for _ in 0..n {
                    t = STerm::new(
                        STermNode::Ctor {
                            name: "Succ".into(),
                            mode: Some(mode.clone()),
                            args: vec![t],
                            targs: vec![],
                        },
                        span,
                    );
                }
                Ok(t)
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                if self.eat_sym(":") {
                    let t = self.ty()?;
                    self.expect_sym(")")?;
                    return Ok(STerm::new(STermNode::Ann(Box::new(e), t), span));
                }
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Kw("susp") => {
                self.bump();
                self.expect_sym("(")?;
                let names = self.names()?;
                let body = self.expr()?;
                self.expect_sym(")")?;
                Ok(STerm::new(STermNode::Susp(names, Box::new(body)), span))
            }
            Tok::Kw("force") => {
                self.bump();
                let head = self.app()?;
                self.expect_sym("@")?;
                let args = self.args()?;
                Ok(STerm::new(STermNode::Force(Box::new(head), args), span))
            }
            _ => self.error(&["a term"]),
        }
    }
}

pub fn parse_module(src: &str) -> PResult<SurfaceModule> {
    Parser::new(src)?.module()
}

pub fn parse_expr(src: &str) -> PResult<STerm> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> PResult<SType> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_kind(src: &str) -> PResult<SKind> {
    let mut p = Parser::new(src)?;
    let k = p.kind()?;
    p.expect_eof()?;
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_definition() {
        let m = parse_module("def one : Unit@P = unit").unwrap();
        assert_eq!(m.items.len(), 1);
        assert!(matches!(&m.items[0], Item::Def(d) if d.name == "one"));
    }

    #[test]
    fn parses_data_declarations() {
        let m = parse_module(
            "data Nat {m} = Zero | Succ (Nat{m})\n\
             data List {m} (a : Type@m) = Nil | Cons a (List{m} a)",
        )
        .unwrap();
        match &m.items[1] {
            Item::Data(d) => {
                assert_eq!(d.params, vec!["a".to_string()]);
                assert_eq!(d.ctors.len(), 2);
                assert_eq!(d.ctors[1].args.len(), 2);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn unbalanced_susp_is_an_error() {
        let e = parse_expr("susp (x . x").unwrap_err();
        assert_eq!(e.span, Span { line: 1, col: 12 });
    }

    #[test]
    fn force_takes_an_application_head() {
        let e = parse_expr("force f x @ () y").unwrap();
        match e.node {
            STermNode::App(h, _) => match h.node {
                STermNode::Force(head, args) => {
                    assert!(matches!(head.node, STermNode::App(..)));
                    assert!(args.is_empty());
                }
                _ => panic!(),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn substitution_arguments_keep_both_readings() {
        let e = parse_expr("force t @ (a, Unit@P, f x)").unwrap();
        let STermNode::Force(_, args) = e.node else {
            panic!()
        };
        assert!(args[0].term.is_some() && args[0].ty.is_some());
        assert!(args[1].term.is_none() && args[1].ty.is_some());
        assert!(args[2].term.is_some());
    }

    #[test]
    fn literals_desugar() {
        let e = parse_expr("2@GF").unwrap();
        match e.node {
            STermNode::Ctor { name, args, .. } => {
                assert_eq!(name, "Succ");
                assert!(matches!(&args[0].node, STermNode::Ctor { name, .. } if name == "Succ"));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn arrows_associate_right_below_forall() {
        let t = parse_type("forall a : Type@P . a -> a -> a").unwrap();
        let STypeNode::Forall(_, _, body) = t.node else {
            panic!()
        };
        let STypeNode::Arrow(_, rhs) = body.node else {
            panic!()
        };
        assert!(matches!(rhs.node, STypeNode::Arrow(..)));
    }

    #[test]
    fn contexts_mix_kinds_and_types() {
        let t = parse_type("Up<C,P>[a : Type@P, xs : List{P} a |- a]").unwrap();
        let STypeNode::Up { ctx, .. } = t.node else {
            panic!()
        };
        assert!(matches!(ctx[0], SDecl::Ty { .. }));
        assert!(matches!(ctx[1], SDecl::Tm { .. }));
        let t = parse_type("Up<C,P>[f : Up<C,P>[ |- Unit@P] -> Unit@P |- Unit@P]").unwrap();
        let STypeNode::Up { ctx, .. } = t.node else {
            panic!()
        };
        assert!(matches!(ctx[0], SDecl::Tm { .. }));
        let k = parse_kind("Up<C,P>[a : Up<C,P>[ |- Type@P] |- Type@P]").unwrap();
        let SKind::Up { ctx, .. } = k else { panic!() };
        assert!(matches!(ctx[0], SDecl::Ty { .. }));
    }

    #[test]
    fn match_and_load_extend_right() {
        let e = parse_expr(
            "match n with | Zero => store Zero | Succ m => load k = f m in store (Succ k)",
        )
        .unwrap();
        let STermNode::Match(_, bs) = e.node else {
            panic!()
        };
        assert_eq!(bs.len(), 2);
        assert_eq!(bs[1].binders, vec!["m".to_string()]);
    }
}
