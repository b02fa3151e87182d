//! Surface syntax as parsed. Names are unresolved and modes are plain
//! identifiers; types may contain type-level redices.

use std::fmt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMode {
    pub name: String,
    pub span: Span,
}

impl SMode {
    pub fn new(name: &str) -> SMode {
        SMode {
            name: name.to_string(),
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum SKind {
    Type(SMode),
    Up {
        hi: SMode,
        lo: SMode,
        ctx: Vec<SDecl>,
        body: Box<SKind>,
    },
}

#[derive(Clone, Debug)]
pub enum SDecl {
    Ty {
        name: String,
        kind: SKind,
        span: Span,
    },
    Tm {
        name: String,
        ty: SType,
        span: Span,
    },
}

impl SDecl {
    pub fn name(&self) -> &str {
        match self {
            SDecl::Ty { name, .. } | SDecl::Tm { name, .. } => name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            SDecl::Ty { span, .. } | SDecl::Tm { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SType {
    pub node: STypeNode,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum STypeNode {
    Unit(SMode),
    Var(String),
    Arrow(Box<SType>, Box<SType>),
    Forall(String, SKind, Box<SType>),
    Up {
        hi: SMode,
        lo: SMode,
        ctx: Vec<SDecl>,
        body: Box<SType>,
    },
    Down {
        hi: SMode,
        lo: SMode,
        body: Box<SType>,
    },
    Force {
        head: Box<SType>,
        args: Vec<SArg>,
    },
    Thunk {
        names: Vec<String>,
        body: Box<SType>,
    },
    Data {
        name: String,
        mode: SMode,
        args: Vec<SType>,
    },
}

/// An argument of an explicit substitution. Its sort is decided by the
/// template context during checking, so both readings are kept.
#[derive(Clone, Debug)]
pub struct SArg {
    pub term: Option<STerm>,
    pub ty: Option<SType>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct STerm {
    pub node: STermNode,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum STermNode {
    Var(String),
    Unit(Option<SMode>),
    Lam(String, Option<SType>, Box<STerm>),
    TLam(String, Option<SKind>, Box<STerm>),
    TApp(Box<STerm>, SType),
    App(Box<STerm>, Box<STerm>),
    Susp(Vec<String>, Box<STerm>),
    Force(Box<STerm>, Vec<SArg>),
    Store(Box<STerm>),
    Load(String, Box<STerm>, Box<STerm>),
    /// `targs` are explicit data type arguments; empty when omitted.
    Ctor {
        name: String,
        mode: Option<SMode>,
        args: Vec<STerm>,
        targs: Vec<SType>,
    },
    Match(Box<STerm>, Vec<SBranch>),
    Ann(Box<STerm>, SType),
    /// A template with its typed context, as embedded from core.
    TypedSusp {
        hi: SMode,
        lo: SMode,
        ctx: Vec<SDecl>,
        body: Box<STerm>,
    },
    /// A store with its modes, as embedded from core.
    TypedStore {
        hi: SMode,
        lo: SMode,
        body: Box<STerm>,
    },
}

#[derive(Clone, Debug)]
pub struct SBranch {
    pub ctor: String,
    pub binders: Vec<String>,
    pub body: STerm,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SCtor {
    pub name: String,
    pub args: Vec<SType>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SData {
    pub name: String,
    pub mode_param: String,
    pub params: Vec<String>,
    pub ctors: Vec<SCtor>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SDef {
    pub name: String,
    pub ty: SType,
    pub body: STerm,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum Item {
    Pragma { path: String, span: Span },
    Data(SData),
    Def(SDef),
}

#[derive(Clone, Debug, Default)]
pub struct SurfaceModule {
    pub items: Vec<Item>,
}

impl SurfaceModule {
    pub fn pragma(&self) -> Option<&str> {
        self.items.iter().find_map(|i| match i {
            Item::Pragma { path, .. } => Some(path.as_str()),
            _ => None,
        })
    }
}

impl SType {
    pub fn new(node: STypeNode, span: Span) -> SType {
        SType { node, span }
    }

    /// Replaces every occurrence of mode `from` by `to`.
    pub fn rename_mode(&self, from: &str, to: &str) -> SType {
        let rm = |m: &SMode| SMode {
            name: if m.name == from {
                to.to_string()
            } else {
                m.name.clone()
            },
            span: m.span,
        };
        let node = match &self.node {
            STypeNode::Unit(m) => STypeNode::Unit(rm(m)),
            STypeNode::Var(a) => STypeNode::Var(a.clone()),
            STypeNode::Arrow(a, b) => STypeNode::Arrow(
                Box::new(a.rename_mode(from, to)),
                Box::new(b.rename_mode(from, to)),
            ),
            STypeNode::Forall(a, k, b) => STypeNode::Forall(
                a.clone(),
                k.rename_mode(from, to),
                Box::new(b.rename_mode(from, to)),
            ),
            STypeNode::Up { hi, lo, ctx, body } => STypeNode::Up {
                hi: rm(hi),
                lo: rm(lo),
                ctx: ctx.iter().map(|d| d.rename_mode(from, to)).collect(),
                body: Box::new(body.rename_mode(from, to)),
            },
            STypeNode::Down { hi, lo, body } => STypeNode::Down {
                hi: rm(hi),
                lo: rm(lo),
                body: Box::new(body.rename_mode(from, to)),
            },
            STypeNode::Force { head, args } => STypeNode::Force {
                head: Box::new(head.rename_mode(from, to)),
                args: args
                    .iter()
                    .map(|a| SArg {
                        term: a.term.clone(),
                        ty: a.ty.as_ref().map(|t| t.rename_mode(from, to)),
                        span: a.span,
                    })
                    .collect(),
            },
            STypeNode::Thunk { names, body } => STypeNode::Thunk {
                names: names.clone(),
                body: Box::new(body.rename_mode(from, to)),
            },
            STypeNode::Data { name, mode, args } => STypeNode::Data {
                name: name.clone(),
                mode: rm(mode),
                args: args.iter().map(|t| t.rename_mode(from, to)).collect(),
            },
        };
        SType::new(node, self.span)
    }
}

impl SKind {
    pub fn rename_mode(&self, from: &str, to: &str) -> SKind {
        let rm = |m: &SMode| SMode {
            name: if m.name == from {
                to.to_string()
            } else {
                m.name.clone()
            },
            span: m.span,
        };
        match self {
            SKind::Type(m) => SKind::Type(rm(m)),
            SKind::Up { hi, lo, ctx, body } => SKind::Up {
                hi: rm(hi),
                lo: rm(lo),
                ctx: ctx.iter().map(|d| d.rename_mode(from, to)).collect(),
                body: Box::new(body.rename_mode(from, to)),
            },
        }
    }
}

impl SDecl {
    pub fn rename_mode(&self, from: &str, to: &str) -> SDecl {
        match self {
            SDecl::Ty { name, kind, span } => SDecl::Ty {
                name: name.clone(),
                kind: kind.rename_mode(from, to),
                span: *span,
            },
            SDecl::Tm { name, ty, span } => SDecl::Tm {
                name: name.clone(),
                ty: ty.rename_mode(from, to),
                span: *span,
            },
        }
    }
}

impl STerm {
    pub fn new(node: STermNode, span: Span) -> STerm {
        STerm { node, span }
    }
}
