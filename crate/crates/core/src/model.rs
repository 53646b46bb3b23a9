//! Data model shared across the analysis pipeline: a minimal YAML node tree,
//! syntax-level metadata gathered by the token scan, and the normalized
//! Compose document types everything downstream consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};

/// Generic YAML node. Mappings keep source order; keys are stringified
/// scalars (compose files never use complex keys).
#[derive(Debug, Clone, PartialEq)]
pub enum YamlNode {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Seq(Vec<YamlNode>),
    Map(Vec<(String, YamlNode)>),
}

impl YamlNode {
    pub fn get(&self, key: &str) -> Option<&YamlNode> {
        match self {
            YamlNode::Map(entries) => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            YamlNode::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&[(String, YamlNode)]> {
        match self {
            YamlNode::Map(entries) => Some(entries),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&[YamlNode]> {
        match self {
            YamlNode::Seq(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_map(&self) -> bool {
        matches!(self, YamlNode::Map(_))
    }

    /// Scalar rendered as text the way compose coerces it: ints, bools and
    /// floats become their literal spelling. Non-scalars yield None.
    pub fn scalar_to_string(&self) -> Option<String> {
        match self {
            YamlNode::Str(s) => Some(s.clone()),
            YamlNode::Int(i) => Some(i.to_string()),
            YamlNode::Bool(b) => Some(b.to_string()),
            YamlNode::Float(f) => Some(f.to_string()),
            YamlNode::Null => None,
            _ => None,
        }
    }
}

// Serialized as plain JSON values so canonical document dumps stay readable.
impl Serialize for YamlNode {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            YamlNode::Null => ser.serialize_unit(),
            YamlNode::Bool(b) => ser.serialize_bool(*b),
            YamlNode::Int(i) => ser.serialize_i64(*i),
            YamlNode::Float(f) => ser.serialize_f64(*f),
            YamlNode::Str(s) => ser.serialize_str(s),
            YamlNode::Seq(items) => {
                let mut seq = ser.serialize_seq(Some(items.len()))?;
                for it in items {
                    seq.serialize_element(it)?;
                }
                seq.end()
            }
            YamlNode::Map(entries) => {
                let mut map = ser.serialize_map(Some(entries.len()))?;
                for (k, v) in entries {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

/// Counts gathered by the raw token scan before aliases are resolved.
/// The resolved tree erases this evidence, hence the separate pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxMeta {
    pub anchor_count: usize,
    pub alias_count: usize,
    pub merge_key_count: usize,
    pub anchor_names: BTreeSet<String>,
}

/// Output of the front end: resolved node tree plus the syntax metadata
/// and the top-level keys in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub tree: YamlNode,
    pub syntax_meta: SyntaxMeta,
    pub source_path: PathBuf,
    pub top_level_keys: Vec<String>,
}

/// One port published by a service. `host_port` is absent for
/// container-only entries ("8000").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortBinding {
    pub host_ip: Option<String>,
    pub host_port: Option<u16>,
    pub container_port: u16,
    pub protocol: Option<String>,
}

impl PortBinding {
    /// Identity used when deduplicating merged port lists.
    pub fn merge_key(&self) -> (Option<u16>, u16, String) {
        (
            self.host_port,
            self.container_port,
            self.protocol.clone().unwrap_or_else(|| "tcp".to_string()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VolumeSource {
    /// Named volume declared (or implied) at the top level.
    Named(String),
    /// Host path bind mount ("./data", "/var/run/docker.sock").
    HostPath(String),
}

/// One mount inside a service. `source` is None for anonymous volumes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VolumeMount {
    pub source: Option<VolumeSource>,
    pub target: String,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSpec {
    pub context: String,
    pub dockerfile: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendsRef {
    pub file: Option<String>,
    pub service: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependsOn {
    pub service: String,
    pub condition: Option<String>,
}

/// Normalized view of one service. List/mapping short forms are already
/// collapsed; keys we do not model survive in `unknown_keys` so merge
/// operations never lose track of them.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ServiceSpec {
    pub name: String,
    pub image: Option<String>,
    pub build: Option<BuildSpec>,
    pub ports: Vec<PortBinding>,
    pub volumes: Vec<VolumeMount>,
    pub environment: BTreeMap<String, String>,
    pub env_files: Vec<String>,
    pub labels: BTreeMap<String, String>,
    pub depends_on: Vec<DependsOn>,
    pub links: Vec<String>,
    pub command: Option<String>,
    pub extends: Option<ExtendsRef>,
    pub deploy: Option<YamlNode>,
    pub hostname: Option<String>,
    pub unknown_keys: BTreeSet<String>,
}

impl ServiceSpec {
    pub fn new(name: &str) -> Self {
        ServiceSpec {
            name: name.to_string(),
            ..Default::default()
        }
    }

    /// Names of the populated fields plus the unknown keys. Drives the
    /// "no key loss" guarantee when overrides merge.
    pub fn key_set(&self) -> BTreeSet<String> {
        let mut keys = BTreeSet::new();
        let mut add = |cond: bool, name: &str| {
            if cond {
                keys.insert(name.to_string());
            }
        };
        add(self.image.is_some(), "image");
        add(self.build.is_some(), "build");
        add(!self.ports.is_empty(), "ports");
        add(!self.volumes.is_empty(), "volumes");
        add(!self.environment.is_empty(), "environment");
        add(!self.env_files.is_empty(), "env_file");
        add(!self.labels.is_empty(), "labels");
        add(!self.depends_on.is_empty(), "depends_on");
        add(!self.links.is_empty(), "links");
        add(self.command.is_some(), "command");
        add(self.extends.is_some(), "extends");
        add(self.deploy.is_some(), "deploy");
        add(self.hostname.is_some(), "hostname");
        for k in &self.unknown_keys {
            keys.insert(k.clone());
        }
        keys
    }
}

/// Fully normalized compose document.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ComposeDocument {
    pub source_path: PathBuf,
    pub services: BTreeMap<String, ServiceSpec>,
    pub named_volumes: BTreeSet<String>,
    pub networks: BTreeSet<String>,
    pub syntax_meta: SyntaxMeta,
    /// Variable names that interpolation could not resolve.
    pub unresolved_variables: BTreeSet<String>,
}

impl ComposeDocument {
    /// Canonical serialization used by golden fixtures and trace replay
    /// checks. Stable across runs: maps are ordered, floats never appear.
    pub fn canonical_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("document serializes");
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FileRoleKind {
    Compose,
    OverrideCandidate,
    ConfigurationNotCompose,
    TemplateForGenerating,
}

/// File role plus the orthogonal auto-generated marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRole {
    pub kind: FileRoleKind,
    pub auto_generated: bool,
}

impl FileRole {
    pub fn new(kind: FileRoleKind, auto_generated: bool) -> Self {
        FileRole {
            kind,
            auto_generated,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_rendering_matches_compose_coercion() {
        assert_eq!(YamlNode::Int(80).scalar_to_string().unwrap(), "80");
        assert_eq!(YamlNode::Bool(true).scalar_to_string().unwrap(), "true");
        assert_eq!(
            YamlNode::Str("x".into()).scalar_to_string().unwrap(),
            "x"
        );
        assert!(YamlNode::Null.scalar_to_string().is_none());
        assert!(YamlNode::Seq(vec![]).scalar_to_string().is_none());
    }

    #[test]
    fn key_set_tracks_populated_fields_and_unknown_keys() {
        let mut svc = ServiceSpec::new("web");
        svc.image = Some("nginx".into());
        svc.ports.push(PortBinding {
            host_ip: None,
            host_port: Some(80),
            container_port: 80,
            protocol: None,
        });
        svc.unknown_keys.insert("restart".into());
        let keys = svc.key_set();
        assert!(keys.contains("image"));
        assert!(keys.contains("ports"));
        assert!(keys.contains("restart"));
        assert!(!keys.contains("volumes"));
    }

    #[test]
    fn yaml_node_serializes_as_plain_json() {
        let node = YamlNode::Map(vec![
            ("replicas".into(), YamlNode::Int(2)),
            (
                "constraints".into(),
                YamlNode::Seq(vec![YamlNode::Str("node.role==worker".into())]),
            ),
        ]);
        let json = serde_json::to_string(&node).unwrap();
        assert_eq!(
            json,
            r#"{"replicas":2,"constraints":["node.role==worker"]}"#
        );
    }
}
