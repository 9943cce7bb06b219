//! JSON instance files: named spaces, named maps and one problem.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Cospan;
use crate::poset::{FiniteSpace, PosetMap};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Poset {
        context: String,
        #[source]
        source: crate::error::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub elements: Vec<String>,
    /// Pairs `[x, y]` with `x < y`; any generating set of relations is accepted.
    #[serde(default)]
    pub covers: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub from: String,
    pub to: String,
    pub values: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub generalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<f64>,
}

fn default_fuzz_count() -> usize {
    100
}

fn default_fuzz_points() -> usize {
    5
}

fn default_fuzz_density() -> f64 {
    0.35
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    RelativeSecat { phi: String, p: String },
    Generalized { phi: String, p: String },
    Secat { p: String },
    Cat { phi: String },
    Tc { space: String },
    SubspaceTc { space: String, subset: Vec<(String, String)> },
    TcPair { space: String, subset: Vec<String> },
    TcScott { f: String },
    TcMixed { f: String },
    MwSecat { p: String, f: String },
    TcMw { f: String },
    Distance { phi: String, psi: String },
    Bounds {
        phi: String,
        p: String,
        #[serde(default)]
        r: usize,
    },
    Fuzz {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_fuzz_count")]
        count: usize,
        #[serde(default = "default_fuzz_points")]
        max_points: usize,
        #[serde(default = "default_fuzz_density")]
        density: f64,
        #[serde(default)]
        experimental: bool,
    },
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::RelativeSecat { .. } => "relative_secat",
            Problem::Generalized { .. } => "generalized",
            Problem::Secat { .. } => "secat",
            Problem::Cat { .. } => "cat",
            Problem::Tc { .. } => "tc",
            Problem::SubspaceTc { .. } => "subspace_tc",
            Problem::TcPair { .. } => "tc_pair",
            Problem::TcScott { .. } => "tc_scott",
            Problem::TcMixed { .. } => "tc_mixed",
            Problem::MwSecat { .. } => "mw_secat",
            Problem::TcMw { .. } => "tc_mw",
            Problem::Distance { .. } => "distance",
            Problem::Bounds { .. } => "bounds",
            Problem::Fuzz { .. } => "fuzz",
        }
    }

    fn map_refs(&self) -> Vec<&str> {
        match self {
            Problem::RelativeSecat { phi, p } | Problem::Generalized { phi, p } | Problem::Bounds { phi, p, .. } => {
                vec![phi, p]
            }
            Problem::Secat { p } => vec![p],
            Problem::Cat { phi } => vec![phi],
            Problem::TcScott { f } | Problem::TcMixed { f } | Problem::TcMw { f } => vec![f],
            Problem::MwSecat { p, f } => vec![p, f],
            Problem::Distance { phi, psi } => vec![phi, psi],
            Problem::Tc { .. } | Problem::SubspaceTc { .. } | Problem::TcPair { .. } | Problem::Fuzz { .. } => vec![],
        }
    }

    fn space_ref(&self) -> Option<&str> {
        match self {
            Problem::Tc { space } | Problem::SubspaceTc { space, .. } | Problem::TcPair { space, .. } => Some(space),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    #[serde(default)]
    pub spaces: BTreeMap<String, SpaceSpec>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapSpec>,
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "is_default_options")]
    pub options: Options,
}

fn is_default_options(o: &Options) -> bool {
    *o == Options::default()
}

/// A parsed file with every space and map built and validated.
#[derive(Clone, Debug)]
pub struct Instance {
    pub file: InstanceFile,
    pub spaces: BTreeMap<String, FiniteSpace>,
    pub maps: BTreeMap<String, PosetMap>,
}

impl Instance {
    pub fn space(&self, name: &str) -> &FiniteSpace {
        &self.spaces[name]
    }

    pub fn map(&self, name: &str) -> &PosetMap {
        &self.maps[name]
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| InstanceError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build_instance(file)
}

pub fn build_instance(file: InstanceFile) -> Result<Instance, InstanceError> {
    if file.version != SCHEMA_VERSION {
        return Err(InstanceError::Validation(format!(
            "unsupported version {} (expected {SCHEMA_VERSION})",
            file.version
        )));
    }
    let mut spaces = BTreeMap::new();
    for (name, spec) in &file.spaces {
        let space = FiniteSpace::build(&spec.elements, &spec.covers).map_err(|source| InstanceError::Poset {
            context: format!("space `{name}`"),
            source,
        })?;
        spaces.insert(name.clone(), space);
    }
    let mut maps = BTreeMap::new();
    for (name, spec) in &file.maps {
        let lookup = |s: &str, role: &str| {
            spaces
                .get(s)
                .ok_or_else(|| InstanceError::Validation(format!("map `{name}`: unknown {role} space `{s}`")))
        };
        let from = lookup(&spec.from, "source")?;
        let to = lookup(&spec.to, "target")?;
        let table: Vec<(&str, &str)> = spec.values.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let map = PosetMap::from_names(from, to, &table).map_err(|source| InstanceError::Poset {
            context: format!("map `{name}`"),
            source,
        })?;
        maps.insert(name.clone(), map);
    }
    for r in file.problem.map_refs() {
        if !maps.contains_key(r) {
            return Err(InstanceError::Validation(format!(
                "problem `{}`: unknown map `{r}`",
                file.problem.kind()
            )));
        }
    }
    if let Some(s) = file.problem.space_ref() {
        if !spaces.contains_key(s) {
            return Err(InstanceError::Validation(format!(
                "problem `{}`: unknown space `{s}`",
                file.problem.kind()
            )));
        }
    }
    Ok(Instance { file, spaces, maps })
}

pub fn serialize_instance(file: &InstanceFile) -> String {
    serde_json::to_string_pretty(file).expect("instance files always serialize")
}

pub fn space_spec(space: &FiniteSpace) -> SpaceSpec {
    SpaceSpec {
        elements: space.names().to_vec(),
        covers: space
            .covers()
            .iter()
            .map(|&(a, b)| (space.name(a).to_owned(), space.name(b).to_owned()))
            .collect(),
    }
}

pub fn map_spec(map: &PosetMap, from: &str, to: &str) -> MapSpec {
    MapSpec {
        from: from.to_owned(),
        to: to.to_owned(),
        values: map.to_name_table().into_iter().collect(),
    }
}

/// Re-runnable encoding of a cospan as a `relative_secat` problem.
pub fn encode_cospan(c: &Cospan, generalized: bool) -> InstanceFile {
    let spaces = BTreeMap::from([
        ("K".to_owned(), space_spec(&c.k)),
        ("X".to_owned(), space_spec(&c.x)),
        ("A".to_owned(), space_spec(&c.a)),
    ]);
    let maps = BTreeMap::from([
        ("phi".to_owned(), map_spec(&c.phi, "K", "X")),
        ("p".to_owned(), map_spec(&c.p, "A", "X")),
    ]);
    let (phi, p) = ("phi".to_owned(), "p".to_owned());
    InstanceFile {
        version: SCHEMA_VERSION,
        spaces,
        maps,
        problem: if generalized {
            Problem::Generalized { phi, p }
        } else {
            Problem::RelativeSecat { phi, p }
        },
        options: Options::default(),
    }
}

/// Inverse of [`encode_cospan`].
pub fn decode_cospan(inst: &Instance) -> Result<Cospan, InstanceError> {
    match &inst.file.problem {
        Problem::RelativeSecat { phi, p } | Problem::Generalized { phi, p } | Problem::Bounds { phi, p, .. } => {
            Cospan::new(inst.map(phi).clone(), inst.map(p).clone(), "instance").map_err(|source| {
                InstanceError::Poset {
                    context: "cospan".into(),
                    source,
                }
            })
        }
        other => Err(InstanceError::Validation(format!(
            "problem `{}` is not a cospan",
            other.kind()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const CAT_CIRCLE: &str = r#"{
        "version": 1,
        "spaces": {"S": {"elements": ["a", "b", "c", "d"],
                         "covers": [["a", "c"], ["a", "d"], ["b", "c"], ["b", "d"]]}},
        "maps": {"id": {"from": "S", "to": "S",
                        "values": {"a": "a", "b": "b", "c": "c", "d": "d"}}},
        "problem": {"kind": "cat", "phi": "id"}
    }"#;

    #[test]
    fn parses_cat_instance() {
        let inst = parse_instance(CAT_CIRCLE).unwrap();
        assert_eq!(inst.space("S"), &FiniteSpace::pseudocircle());
        assert_eq!(inst.map("id"), &PosetMap::identity(&FiniteSpace::pseudocircle()));
    }

    #[test]
    fn dangling_reference_is_named() {
        let text = CAT_CIRCLE.replace(r#""phi": "id""#, r#""phi": "nope""#);
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(&err, InstanceError::Validation(m) if m.contains("`nope`")), "{err}");
    }

    #[test]
    fn cyclic_covers_surface_the_pair() {
        let text = r#"{"version": 1,
            "spaces": {"T": {"elements": ["x", "y"], "covers": [["x", "y"], ["y", "x"]]}},
            "problem": {"kind": "tc", "space": "T"}}"#;
        match parse_instance(text).unwrap_err() {
            InstanceError::Poset { source: Error::Cycle(a, b), .. } => {
                assert_eq!((a.as_str(), b.as_str()), ("x", "y"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_instance("{\n  \"version\": 1,\n  oops }").unwrap_err();
        assert!(matches!(err, InstanceError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn round_trip() {
        let inst = parse_instance(CAT_CIRCLE).unwrap();
        let again = parse_instance(&serialize_instance(&inst.file)).unwrap();
        assert_eq!(again.file, inst.file);
        assert_eq!(again.spaces, inst.spaces);
    }

    #[test]
    fn cospan_encoding_round_trips() {
        let s = FiniteSpace::pseudocircle();
        let pt = FiniteSpace::point();
        let c = Cospan::new(PosetMap::identity(&s), PosetMap::constant(&pt, &s, 3), "t").unwrap();
        let inst = build_instance(encode_cospan(&c, false)).unwrap();
        let back = decode_cospan(&inst).unwrap();
        assert_eq!((back.phi, back.p), (c.phi, c.p));
    }
}
