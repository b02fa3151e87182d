use std::collections::HashMap;
use std::fmt;

use super::error::{ErrorCode, TypingError};
use crate::frontend::ast::{SData, Span};
use crate::frontend::pretty::print_stype;
use crate::mode_spec::Mode;
use crate::subst::subst_type;
use crate::syntax::{DfKind, Entry, Name, Subst, Term, Type};

#[derive(Clone, Debug)]
pub struct CtorDecl {
    pub name: Name,
    pub arity: usize,
}

/// A data declaration, instantiated at every mode where its constructor
/// argument types are well formed.
#[derive(Clone, Debug)]
pub struct DataDecl {
    pub name: Name,
    pub mode_param: String,
    pub params: Vec<Name>,
    pub ctors: Vec<CtorDecl>,
    pub source: SData,
    pub prelude: bool,
    /// Constructor argument types per mode, over `params` as type variables.
    pub instances: HashMap<Mode, Vec<Vec<Type>>>,
    pub unavailable: HashMap<Mode, TypingError>,
}

impl DataDecl {
    pub fn ctor_index(&self, c: &str) -> Option<usize> {
        self.ctors.iter().position(|k| &*k.name == c)
    }

    pub fn ctor_arg_types(
        &self,
        m: &Mode,
        ctor: usize,
        targs: &[Type],
    ) -> Result<Vec<Type>, TypingError> {
        let inst = self.instances.get(m).ok_or_else(|| {
            let why = self
                .unavailable
                .get(m)
                .map(|e| format!(": {e}"))
                .unwrap_or_default();
            TypingError::new(
                ErrorCode::ElabError,
                format!(
                    "data type `{}` is not well formed at mode {m}{why}",
                    self.name
                ),
            )
        })?;
        if targs.is_empty() {
            return Ok(inst[ctor].clone());
        }
        let sub = Subst(
            self.params
                .iter()
                .zip(targs)
                .map(|(p, t)| Entry::Ty {
                    name: p.clone(),
                    ty: t.clone(),
                    kind: DfKind::Type(m.clone()),
                })
                .collect(),
        );
        let g = sub.measure();
        inst[ctor]
            .iter()
            .map(|t| subst_type(&sub, &g, t).map_err(TypingError::from))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct DefEntry {
    pub name: Name,
    pub ty: Type,
    pub body: Term,
    pub span: Span,
}

/// Data declarations and top-level definitions, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    data: Vec<DataDecl>,
    defs: Vec<DefEntry>,
    data_ix: HashMap<Name, usize>,
    ctor_ix: HashMap<Name, (usize, usize)>,
    def_ix: HashMap<Name, usize>,
}

impl Signature {
    pub fn data_decls(&self) -> &[DataDecl] {
        &self.data
    }

    pub fn defs(&self) -> &[DefEntry] {
        &self.defs
    }

    pub fn data(&self, name: &str) -> Option<&DataDecl> {
        self.data_ix.get(name).map(|&i| &self.data[i])
    }

    pub fn ctor(&self, name: &str) -> Option<(&DataDecl, usize)> {
        self.ctor_ix.get(name).map(|&(d, c)| (&self.data[d], c))
    }

    pub fn def(&self, name: &str) -> Option<(usize, &DefEntry)> {
        self.def_ix.get(name).map(|&i| (i, &self.defs[i]))
    }

    pub fn push_data(&mut self, d: DataDecl) {
        let i = self.data.len();
        self.data_ix.insert(d.name.clone(), i);
        for (c, k) in d.ctors.iter().enumerate() {
            self.ctor_ix.insert(k.name.clone(), (i, c));
        }
        self.data.push(d);
    }

    pub fn push_def(&mut self, d: DefEntry) {
        self.def_ix.insert(d.name.clone(), self.defs.len());
        self.defs.push(d);
    }

    pub fn set_body(&mut self, i: usize, body: Term) {
        self.defs[i].body = body;
    }
}

/// Prints the user-declared part of a signature in surface syntax.
impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.data.iter().filter(|d| !d.prelude) {
            let s = &d.source;
            write!(f, "data {} {{{}}}", s.name, s.mode_param)?;
            for p in &s.params {
                write!(f, " ({p} : Type@{})", s.mode_param)?;
            }
            for (i, c) in s.ctors.iter().enumerate() {
                f.write_str(if i == 0 { " = " } else { " | " })?;
                f.write_str(&c.name)?;
                for a in &c.args {
                    write!(f, " ({})", print_stype(a))?;
                }
            }
            writeln!(f)?;
        }
        for d in &self.defs {
            writeln!(f, "def {} : {} = {}", d.name, d.ty, d.body)?;
        }
        Ok(())
    }
}
