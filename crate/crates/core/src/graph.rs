//! Orchestration graph: services are nodes, cross-service relationships are
//! typed edges. Everything here is derived from a single resolved document;
//! edge order is deterministic so graphs can be diffed and serialized.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::classify::ServiceType;
use crate::model::{ComposeDocument, ServiceSpec, VolumeSource};
use crate::parser::normalize_path;

/// Edge endpoint used when proxy-config labels exist but no reverse proxy
/// is defined in the same file. Never listed in `nodes`.
pub const EXTERNAL_PROXY: &str = "external-proxy";

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum EdgeKind {
    DependsOn,
    Link,
    EnvReference,
    SharedVolume,
    SharedEnvFile,
    LabelProxyConfig,
    DuplicateImage,
}

/// One directed edge. `attribute` carries the evidence: the depends_on
/// condition, the referencing env key, the shared volume or file, the proxy
/// flavor, or the duplicate-image relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
    pub attribute: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OrchestrationGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    /// Proxy-config labels present, no reverse proxy in the file.
    pub external_proxy: bool,
    /// Some service carries a deploy section.
    pub swarm_deploy: bool,
    /// Some environment key mentions CLUSTER.
    pub cluster_env_hint: bool,
    pub warnings: Vec<String>,
}

impl OrchestrationGraph {
    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }
}

struct EdgeSink {
    edges: Vec<Edge>,
}

impl EdgeSink {
    // Self-loops carry no orchestration information and are dropped.
    fn push(&mut self, from: &str, to: &str, kind: EdgeKind, attribute: Option<String>) {
        if from == to {
            return;
        }
        self.edges.push(Edge {
            from: from.to_string(),
            to: to.to_string(),
            kind,
            attribute,
        });
    }

    /// Same edge with endpoints in canonical (lexicographic) orientation,
    /// used for symmetric relations.
    fn push_symmetric(&mut self, a: &str, b: &str, kind: EdgeKind, attribute: Option<String>) {
        if a <= b {
            self.push(a, b, kind, attribute);
        } else {
            self.push(b, a, kind, attribute);
        }
    }
}

/// Maximal runs of `[A-Za-z0-9_-]`. Hyphen counts as a token character so
/// "my-api" in a URL matches the service "my-api" and not "api".
fn env_tokens(value: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in value.char_indices() {
        let is_token = ch.is_ascii_alphanumeric() || ch == '_' || ch == '-';
        match (is_token, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(&value[s..i]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(&value[s..]);
    }
    out
}

fn depends_edges(doc: &ComposeDocument, sink: &mut EdgeSink, warnings: &mut Vec<String>) {
    for (name, svc) in &doc.services {
        for dep in &svc.depends_on {
            if doc.services.contains_key(&dep.service) {
                sink.push(name, &dep.service, EdgeKind::DependsOn, dep.condition.clone());
            } else {
                warnings.push(format!(
                    "service {name}: depends_on target {:?} is not defined",
                    dep.service
                ));
            }
        }
        for link in &svc.links {
            if doc.services.contains_key(link) {
                sink.push(name, link, EdgeKind::Link, None);
            } else {
                warnings.push(format!(
                    "service {name}: links target {link:?} is not defined"
                ));
            }
        }
    }
}

fn env_reference_edges(doc: &ComposeDocument, sink: &mut EdgeSink) {
    // name or declared hostname -> service, for exact token matching
    let mut addresses: BTreeMap<&str, &str> = BTreeMap::new();
    for (name, svc) in &doc.services {
        addresses.insert(name.as_str(), name.as_str());
        if let Some(host) = &svc.hostname {
            addresses.entry(host.as_str()).or_insert(name.as_str());
        }
    }
    for (name, svc) in &doc.services {
        for (key, value) in &svc.environment {
            let mut hits: BTreeSet<&str> = BTreeSet::new();
            for token in env_tokens(value) {
                if let Some(target) = addresses.get(token) {
                    if *target != name.as_str() {
                        hits.insert(target);
                    }
                }
            }
            for target in hits {
                sink.push(name, target, EdgeKind::EnvReference, Some(key.clone()));
            }
        }
    }
}

fn volume_identifier(source: &VolumeSource) -> String {
    match source {
        VolumeSource::Named(n) => n.clone(),
        VolumeSource::HostPath(p) => normalize_path(p),
    }
}

fn shared_resource_edges(doc: &ComposeDocument, sink: &mut EdgeSink) {
    let mut by_volume: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    let mut by_env_file: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for (name, svc) in &doc.services {
        for mount in &svc.volumes {
            if let Some(src) = &mount.source {
                by_volume
                    .entry(volume_identifier(src))
                    .or_default()
                    .insert(name);
            }
        }
        for file in &svc.env_files {
            by_env_file
                .entry(normalize_path(file))
                .or_default()
                .insert(name);
        }
    }
    for (ident, kind) in [
        (&by_volume, EdgeKind::SharedVolume),
        (&by_env_file, EdgeKind::SharedEnvFile),
    ] {
        for (resource, sharers) in ident {
            let names: Vec<&&str> = sharers.iter().collect();
            for i in 0..names.len() {
                for j in (i + 1)..names.len() {
                    sink.push_symmetric(names[i], names[j], kind, Some(resource.clone()));
                }
            }
        }
    }
}

/// Proxy flavor a service is configured for, judged from labels and env.
fn proxy_config_attribute(svc: &ServiceSpec) -> Option<&'static str> {
    if svc.labels.keys().any(|k| k.starts_with("traefik.")) {
        return Some("traefik");
    }
    if svc
        .labels
        .keys()
        .any(|k| k == "caddy" || k.starts_with("caddy."))
    {
        return Some("caddy");
    }
    if svc.environment.contains_key("VIRTUAL_HOST") {
        return Some("virtual-host");
    }
    None
}

fn label_proxy_edges(
    doc: &ComposeDocument,
    types: &BTreeMap<String, ServiceType>,
    sink: &mut EdgeSink,
) -> bool {
    let proxies: Vec<&str> = doc
        .services
        .keys()
        .filter(|n| types.get(*n) == Some(&ServiceType::ReverseProxy))
        .map(|n| n.as_str())
        .collect();
    let mut external = false;
    for (name, svc) in &doc.services {
        let Some(flavor) = proxy_config_attribute(svc) else {
            continue;
        };
        if proxies.is_empty() {
            external = true;
            sink.push(EXTERNAL_PROXY, name, EdgeKind::LabelProxyConfig, Some(flavor.to_string()));
        } else {
            for proxy in &proxies {
                sink.push(proxy, name, EdgeKind::LabelProxyConfig, Some(flavor.to_string()));
            }
        }
    }
    external
}

fn duplicate_image_attribute(a: &ServiceSpec, b: &ServiceSpec) -> &'static str {
    if a.command != b.command {
        "different-commands"
    } else if a.environment != b.environment {
        "different-env"
    } else {
        "same-command"
    }
}

fn duplicate_image_edges(doc: &ComposeDocument, sink: &mut EdgeSink) {
    // identical image text, or identical build context + dockerfile
    let mut by_image: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for (name, svc) in &doc.services {
        if let Some(image) = &svc.image {
            by_image
                .entry(format!("image\u{0}{image}"))
                .or_default()
                .push(name);
        } else if let Some(build) = &svc.build {
            by_image
                .entry(format!(
                    "build\u{0}{}\u{0}{}",
                    build.context,
                    build.dockerfile.as_deref().unwrap_or("")
                ))
                .or_default()
                .push(name);
        }
    }
    for names in by_image.values() {
        for i in 0..names.len() {
            for j in (i + 1)..names.len() {
                let a = &doc.services[names[i]];
                let b = &doc.services[names[j]];
                sink.push_symmetric(
                    names[i],
                    names[j],
                    EdgeKind::DuplicateImage,
                    Some(duplicate_image_attribute(a, b).to_string()),
                );
            }
        }
    }
}

/// Builds the full graph for one document. `types` carries the classifier
/// verdict per service; only ReverseProxy assignments matter here.
pub fn build_graph(
    doc: &ComposeDocument,
    types: &BTreeMap<String, ServiceType>,
) -> OrchestrationGraph {
    let mut sink = EdgeSink { edges: Vec::new() };
    let mut warnings = Vec::new();

    depends_edges(doc, &mut sink, &mut warnings);
    env_reference_edges(doc, &mut sink);
    shared_resource_edges(doc, &mut sink);
    let external_proxy = label_proxy_edges(doc, types, &mut sink);
    duplicate_image_edges(doc, &mut sink);

    let mut edges = sink.edges;
    edges.sort();
    edges.dedup();

    let swarm_deploy = doc.services.values().any(|s| s.deploy.is_some());
    let cluster_env_hint = doc
        .services
        .values()
        .any(|s| s.environment.keys().any(|k| k.to_ascii_uppercase().contains("CLUSTER")));

    OrchestrationGraph {
        nodes: doc.services.keys().cloned().collect(),
        edges,
        external_proxy,
        swarm_deploy,
        cluster_env_hint,
        warnings,
    }
}
