//! Mode structures: a preorder of modes, each carrying the structural
//! rules it admits and a recursion policy for top-level definitions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A mode name. Equality is by name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode(Rc<str>);

impl Mode {
    pub fn new(name: &str) -> Mode {
        Mode(Rc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructRule {
    Contraction,
    Weakening,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recursion {
    General,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("duplicate mode `{0}`")]
    DuplicateMode(String),
    #[error("empty mode name")]
    EmptyName,
    #[error("unknown structural rule `{0}` (expected \"C\" or \"W\")")]
    UnknownRule(String),
    #[error("signature violation: {hi} >= {lo} but sig({hi}) does not contain sig({lo})")]
    SignatureViolation { hi: String, lo: String },
    #[error("malformed mode specification: {0}")]
    Malformed(String),
    #[error("cannot read mode specification {path}: {message}")]
    Io { path: String, message: String },
}

/// The unvalidated JSON shape of a mode specification.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub modes: Vec<String>,
    #[serde(default)]
    pub order: Vec<[String; 2]>,
    #[serde(default)]
    pub signatures: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub recursion: BTreeMap<String, Recursion>,
}

/// A validated mode specification. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSpec {
    modes: Vec<Mode>,
    index: HashMap<Mode, usize>,
    /// `geq[i][j]` iff modes[i] >= modes[j], reflexive-transitive.
    geq: Vec<Vec<bool>>,
    sig: Vec<BTreeSet<StructRule>>,
    recursion: Vec<Recursion>,
}

fn parse_rule(s: &str) -> Result<StructRule, SpecError> {
    match s {
        "C" => Ok(StructRule::Contraction),
        "W" => Ok(StructRule::Weakening),
        other => Err(SpecError::UnknownRule(other.to_string())),
    }
}

fn rule_tag(r: StructRule) -> &'static str {
    match r {
        StructRule::Contraction => "C",
        StructRule::Weakening => "W",
    }
}

pub fn validate(raw: &RawSpec) -> Result<ModeSpec, SpecError> {
    let mut modes = Vec::new();
    let mut index = HashMap::new();
    for name in &raw.modes {
        if name.is_empty() {
            return Err(SpecError::EmptyName);
        }
        let m = Mode::new(name);
        if index.insert(m.clone(), modes.len()).is_some() {
            return Err(SpecError::DuplicateMode(name.clone()));
        }
        modes.push(m);
    }
    let lookup = |name: &str| -> Result<usize, SpecError> {
        index
            .get(&Mode::new(name))
            .copied()
            .ok_or_else(|| SpecError::UnknownMode(name.to_string()))
    };

    let n = modes.len();
    let mut geq = vec![vec![false; n]; n];
    for (i, row) in geq.iter_mut().enumerate() {
        row[i] = true;
    }
    for [hi, lo] in &raw.order {
        let (i, j) = (lookup(hi)?, lookup(lo)?);
        geq[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if geq[i][k] {
                for j in 0..n {
                    if geq[k][j] {
                        geq[i][j] = true;
                    }
                }
            }
        }
    }

    let mut sig = vec![BTreeSet::new(); n];
    for (name, rules) in &raw.signatures {
        let i = lookup(name)?;
        for r in rules {
            sig[i].insert(parse_rule(r)?);
        }
    }

    for i in 0..n {
        for j in 0..n {
            if geq[i][j] && !sig[i].is_superset(&sig[j]) {
                return Err(SpecError::SignatureViolation {
                    hi: modes[i].to_string(),
                    lo: modes[j].to_string(),
                });
            }
        }
    }

    let mut recursion: Vec<Recursion> = sig
        .iter()
        .map(|s| {
            if s.len() == 2 {
                Recursion::General
            } else {
                Recursion::None
            }
        })
        .collect();
    for (name, policy) in &raw.recursion {
        recursion[lookup(name)?] = *policy;
    }

    Ok(ModeSpec {
        modes,
        index,
        geq,
        sig,
        recursion,
    })
}

impl ModeSpec {
    pub fn from_json(text: &str) -> Result<ModeSpec, SpecError> {
        let raw: RawSpec =
            serde_json::from_str(text).map_err(|e| SpecError::Malformed(e.to_string()))?;
        validate(&raw)
    }

    pub fn load(path: &Path) -> Result<ModeSpec, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        ModeSpec::from_json(&text)
    }

    /// The two-mode spec `C >= P` with full signatures.
    pub fn default_spec() -> ModeSpec {
        ModeSpec::from_json(
            r#"{"modes":["C","P"],"order":[["C","P"]],"signatures":{"C":["C","W"],"P":["C","W"]}}"#,
        )
        .expect("built-in spec is valid")
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn contains(&self, m: &Mode) -> bool {
        self.index.contains_key(m)
    }

    pub fn lookup(&self, name: &str) -> Option<Mode> {
        let m = Mode::new(name);
        self.index.contains_key(&m).then_some(m)
    }

    fn idx(&self, m: &Mode) -> Result<usize, SpecError> {
        self.index
            .get(m)
            .copied()
            .ok_or_else(|| SpecError::UnknownMode(m.to_string()))
    }

    pub fn geq(&self, m: &Mode, k: &Mode) -> Result<bool, SpecError> {
        Ok(self.geq[self.idx(m)?][self.idx(k)?])
    }

    /// `m >= k`, false when either mode is undeclared.
    pub fn ge(&self, m: &Mode, k: &Mode) -> bool {
        self.geq(m, k).unwrap_or(false)
    }

    /// `m > k`: `m >= k` and not `k >= m`.
    pub fn gt(&self, m: &Mode, k: &Mode) -> bool {
        self.ge(m, k) && !self.ge(k, m)
    }

    pub fn allows(&self, m: &Mode, r: StructRule) -> Result<bool, SpecError> {
        Ok(self.sig[self.idx(m)?].contains(&r))
    }

    pub fn can_contract(&self, m: &Mode) -> bool {
        self.allows(m, StructRule::Contraction).unwrap_or(false)
    }

    pub fn can_weaken(&self, m: &Mode) -> bool {
        self.allows(m, StructRule::Weakening).unwrap_or(false)
    }

    pub fn recursion(&self, m: &Mode) -> Result<Recursion, SpecError> {
        Ok(self.recursion[self.idx(m)?])
    }

    /// The closure-expanded raw form; validating it yields an equal spec.
    pub fn to_raw(&self) -> RawSpec {
        let n = self.modes.len();
        let mut order = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.geq[i][j] {
                    order.push([self.modes[i].to_string(), self.modes[j].to_string()]);
                }
            }
        }
        let signatures = (0..n)
            .map(|i| {
                (
                    self.modes[i].to_string(),
                    self.sig[i]
                        .iter()
                        .map(|r| rule_tag(*r).to_string())
                        .collect(),
                )
            })
            .collect();
        let recursion = (0..n)
            .map(|i| (self.modes[i].to_string(), self.recursion[i]))
            .collect();
        RawSpec {
            modes: self.modes.iter().map(|m| m.to_string()).collect(),
            order,
            signatures,
            recursion,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_mode() -> RawSpec {
        serde_json::from_str(
            r#"{"modes":["C","P","GF"],"order":[["C","P"],["P","GF"]],
                "signatures":{"C":["C","W"],"P":["C","W"],"GF":[]}}"#,
        )
        .unwrap()
    }

    fn m(s: &str) -> Mode {
        Mode::new(s)
    }

    #[test]
    fn three_mode_spec_validates_with_closure() {
        let spec = validate(&three_mode()).unwrap();
        assert!(spec.geq(&m("C"), &m("GF")).unwrap());
        assert!(!spec.geq(&m("GF"), &m("C")).unwrap());
        assert!(spec.geq(&m("P"), &m("P")).unwrap());
        assert!(!spec.allows(&m("GF"), StructRule::Contraction).unwrap());
        assert!(spec.allows(&m("P"), StructRule::Weakening).unwrap());
    }

    #[test]
    fn single_mode_is_reflexive() {
        let raw: RawSpec =
            serde_json::from_str(r#"{"modes":["m"],"signatures":{"m":["C","W"]}}"#).unwrap();
        let spec = validate(&raw).unwrap();
        assert!(spec.geq(&m("m"), &m("m")).unwrap());
        assert!(spec.allows(&m("m"), StructRule::Contraction).unwrap());
        assert!(spec.allows(&m("m"), StructRule::Weakening).unwrap());
        assert_eq!(spec.recursion(&m("m")).unwrap(), Recursion::General);
    }

    #[test]
    fn shrinking_signature_upwards_is_rejected() {
        let raw: RawSpec = serde_json::from_str(
            r#"{"modes":["m","k"],"order":[["m","k"]],"signatures":{"m":[],"k":["C"]}}"#,
        )
        .unwrap();
        assert_eq!(
            validate(&raw),
            Err(SpecError::SignatureViolation {
                hi: "m".into(),
                lo: "k".into()
            })
        );
    }

    #[test]
    fn unknown_modes_are_reported() {
        let raw: RawSpec = serde_json::from_str(r#"{"modes":["m"],"order":[["m","q"]]}"#).unwrap();
        assert_eq!(validate(&raw), Err(SpecError::UnknownMode("q".into())));
        let spec = validate(&three_mode()).unwrap();
        assert!(spec.geq(&m("X"), &m("C")).is_err());
        assert!(spec.allows(&m("X"), StructRule::Weakening).is_err());
    }

    #[test]
    fn unknown_json_keys_are_rejected() {
        let err = ModeSpec::from_json(r#"{"modes":["m"],"extra":1}"#).unwrap_err();
        assert!(matches!(err, SpecError::Malformed(_)));
    }

    #[test]
    fn cycles_with_equal_signatures_are_accepted() {
        let raw: RawSpec = serde_json::from_str(
            r#"{"modes":["a","b"],"order":[["a","b"],["b","a"]],"signatures":{"a":["W"],"b":["W"]}}"#,
        )
        .unwrap();
        let spec = validate(&raw).unwrap();
        assert!(spec.ge(&m("a"), &m("b")) && spec.ge(&m("b"), &m("a")));
        assert!(!spec.gt(&m("a"), &m("b")));
    }

    #[test]
    fn recursion_defaults_and_overrides() {
        let spec = validate(&three_mode()).unwrap();
        assert_eq!(spec.recursion(&m("GF")).unwrap(), Recursion::None);
        let mut raw = three_mode();
        raw.recursion.insert("GF".into(), Recursion::General);
        let spec = validate(&raw).unwrap();
        assert_eq!(spec.recursion(&m("GF")).unwrap(), Recursion::General);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn raw_spec() -> impl Strategy<Value = RawSpec> {
            (1usize..5)
                .prop_flat_map(|n| {
                    (
                        Just(n),
                        proptest::collection::vec((0..n, 0..n), 0..6),
                        proptest::collection::vec(0u8..4, n),
                    )
                })
                .prop_map(|(n, pairs, sigs)| RawSpec {
                    modes: (0..n).map(|i| format!("m{i}")).collect(),
                    order: pairs
                        .into_iter()
                        .map(|(i, j)| [format!("m{i}"), format!("m{j}")])
                        .collect(),
                    signatures: sigs
                        .into_iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let mut rules = Vec::new();
                            if s & 1 != 0 {
                                rules.push("C".to_string());
                            }
                            if s & 2 != 0 {
                                rules.push("W".to_string());
                            }
                            (format!("m{i}"), rules)
                        })
                        .collect(),
                    recursion: BTreeMap::new(),
                })
        }

        proptest! {
            #[test]
            fn validated_specs_are_preorders_and_monotone(raw in raw_spec()) {
                if let Ok(spec) = validate(&raw) {
                    let ms = spec.modes().to_vec();
                    for a in &ms {
                        prop_assert!(spec.ge(a, a));
                        for b in &ms {
                            for c in &ms {
                                if spec.ge(a, b) && spec.ge(b, c) {
                                    prop_assert!(spec.ge(a, c));
                                }
                            }
                            if spec.ge(a, b) {
                                for r in [StructRule::Contraction, StructRule::Weakening] {
                                    if spec.allows(b, r).unwrap() {
                                        prop_assert!(spec.allows(a, r).unwrap());
                                    }
                                }
                            }
                        }
                    }
                }
            }

            #[test]
            fn validation_is_idempotent(raw in raw_spec()) {
                if let Ok(spec) = validate(&raw) {
                    prop_assert_eq!(validate(&spec.to_raw()).unwrap(), spec);
                }
            }
        }
    }
}
