//! Service inheritance (`extends`) and override-file merging.
//!
//! Both operations share one service-level merge: scalars replace,
//! environment/labels merge per key with the overlay winning, ports dedupe
//! by host:container:protocol, volumes dedupe by container target (later
//! entry wins), depends_on/links/env_file union preserving first-seen
//! order. Unknown keys union so no key is ever lost.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComposeDocument, ServiceSpec};
use crate::parser::normalize_path;

pub const DEFAULT_MAX_EXTENDS_DEPTH: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum MergeError {
    #[error("extends target `{service}` not found in {file}")]
    ExtendsTargetMissing { file: String, service: String },
    #[error("extends file {path} could not be loaded: {reason}")]
    ExtendsFileMissing { path: String, reason: String },
    #[error("extends cycle: {chain}")]
    ExtendsCycle { chain: String },
    #[error("extends chain for `{service}` exceeds max depth {max_depth}")]
    DepthExceeded { service: String, max_depth: usize },
    /// Declared for API stability. Normalization collapses the list/mapping
    /// spellings before merging, so typed documents cannot reach it.
    #[error("override for `{service}` changes the shape of key `{key}`")]
    OverrideShapeConflict { service: String, key: String },
}

/// Where the overlay half of a merge step came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeSource {
    /// Base service in the same document (in-file extends).
    SameFile,
    /// Another file (extends file, or the override file of a pair).
    File(String),
}

/// One service-level merge event. `keys_overridden` are keys present on
/// both sides (overlay won or merged per key); `keys_inherited` are keys
/// only the base supplied. Keys only the overlay carried are in neither.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStep {
    pub target_service: String,
    pub source: MergeSource,
    pub keys_overridden: BTreeSet<String>,
    pub keys_inherited: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeTrace {
    pub steps: Vec<MergeStep>,
}

/// Merges `overlay` on top of `base`, field by field.
pub fn merge_service(base: &ServiceSpec, overlay: &ServiceSpec) -> ServiceSpec {
    let mut out = ServiceSpec::new(&overlay.name);
    out.image = overlay.image.clone().or_else(|| base.image.clone());
    out.build = overlay.build.clone().or_else(|| base.build.clone());
    out.command = overlay.command.clone().or_else(|| base.command.clone());
    out.hostname = overlay.hostname.clone().or_else(|| base.hostname.clone());
    out.deploy = overlay.deploy.clone().or_else(|| base.deploy.clone());
    out.extends = overlay.extends.clone().or_else(|| base.extends.clone());

    out.environment = base.environment.clone();
    out.environment
        .extend(overlay.environment.iter().map(|(k, v)| (k.clone(), v.clone())));
    out.labels = base.labels.clone();
    out.labels
        .extend(overlay.labels.iter().map(|(k, v)| (k.clone(), v.clone())));

    // Ports: identity host:container:protocol, later entry wins in place.
    let mut port_pos = std::collections::BTreeMap::new();
    for p in base.ports.iter().chain(overlay.ports.iter()) {
        match port_pos.get(&p.merge_key()) {
            Some(&idx) => out.ports[idx] = p.clone(),
            None => {
                port_pos.insert(p.merge_key(), out.ports.len());
                out.ports.push(p.clone());
            }
        }
    }

    // Volumes: identity is the container target, later entry wins.
    let mut vol_pos = std::collections::BTreeMap::new();
    for v in base.volumes.iter().chain(overlay.volumes.iter()) {
        match vol_pos.get(&v.target) {
            Some(&idx) => out.volumes[idx] = v.clone(),
            None => {
                vol_pos.insert(v.target.clone(), out.volumes.len());
                out.volumes.push(v.clone());
            }
        }
    }

    // depends_on: union by service name, later condition wins.
    let mut dep_pos = std::collections::BTreeMap::new();
    for d in base.depends_on.iter().chain(overlay.depends_on.iter()) {
        match dep_pos.get(&d.service) {
            Some(&idx) => out.depends_on[idx] = d.clone(),
            None => {
                dep_pos.insert(d.service.clone(), out.depends_on.len());
                out.depends_on.push(d.clone());
            }
        }
    }

    for l in base.links.iter().chain(overlay.links.iter()) {
        if !out.links.contains(l) {
            out.links.push(l.clone());
        }
    }
    for f in base.env_files.iter().chain(overlay.env_files.iter()) {
        if !out.env_files.contains(f) {
            out.env_files.push(f.clone());
        }
    }

    out.unknown_keys = base
        .unknown_keys
        .union(&overlay.unknown_keys)
        .cloned()
        .collect();
    out
}

fn step_for(base: &ServiceSpec, overlay: &ServiceSpec, source: MergeSource) -> MergeStep {
    let base_keys = base.key_set();
    let overlay_keys = overlay.key_set();
    MergeStep {
        target_service: overlay.name.clone(),
        source,
        keys_overridden: base_keys.intersection(&overlay_keys).cloned().collect(),
        keys_inherited: base_keys.difference(&overlay_keys).cloned().collect(),
    }
}

/// True when every service could start on its own: each carries an image,
/// a build, or an extends reference.
pub fn is_self_sufficient(doc: &ComposeDocument) -> bool {
    doc.services
        .values()
        .all(|s| s.image.is_some() || s.build.is_some() || s.extends.is_some())
}

fn file_key(path: &Path) -> String {
    normalize_path(&path.to_string_lossy())
}

/// Resolves every `extends` reference in `doc`. `loader` is called with the
/// already-joined path of any referenced file (relative references are
/// joined against the directory of the document that mentions them) and
/// must return a normalized document. Cycles are detected on
/// (file, service) pairs; chains longer than `max_depth` fail.
pub fn resolve_extends<F>(
    doc: &ComposeDocument,
    loader: &mut F,
    max_depth: usize,
) -> Result<(ComposeDocument, MergeTrace), MergeError>
where
    F: FnMut(&Path) -> Result<ComposeDocument, String>,
{
    let mut out = doc.clone();
    let mut trace = MergeTrace::default();
    // BTreeMap iteration keeps the per-service resolution order stable.
    let names: Vec<String> = doc.services.keys().cloned().collect();
    for name in names {
        let spec = doc.services[&name].clone();
        if spec.extends.is_none() {
            continue;
        }
        let mut chain = vec![(file_key(&doc.source_path), name.clone())];
        let (resolved, step) = resolve_one(doc, &spec, loader, &mut chain, max_depth)?;
        trace.steps.push(step);
        out.services.insert(name, resolved);
    }
    Ok((out, trace))
}

/// Resolves one extending service against its (possibly chained) base.
/// Returns the merged spec with `extends` cleared plus the trace step for
/// the immediate base relationship.
fn resolve_one<F>(
    doc: &ComposeDocument,
    spec: &ServiceSpec,
    loader: &mut F,
    chain: &mut Vec<(String, String)>,
    max_depth: usize,
) -> Result<(ServiceSpec, MergeStep), MergeError>
where
    F: FnMut(&Path) -> Result<ComposeDocument, String>,
{
    let ext = spec.extends.clone().expect("caller checked extends");
    if chain.len() > max_depth {
        return Err(MergeError::DepthExceeded {
            service: spec.name.clone(),
            max_depth,
        });
    }

    let loaded: Option<ComposeDocument> = match &ext.file {
        Some(file) => {
            let dir = doc.source_path.parent().unwrap_or_else(|| Path::new(""));
            let joined: PathBuf = dir.join(file);
            Some(loader(&joined).map_err(|reason| MergeError::ExtendsFileMissing {
                path: joined.to_string_lossy().to_string(),
                reason,
            })?)
        }
        None => None,
    };
    let base_doc = loaded.as_ref().unwrap_or(doc);
    let base_key = (file_key(&base_doc.source_path), ext.service.clone());
    if chain.contains(&base_key) {
        let mut rendered: Vec<String> = chain
            .iter()
            .map(|(f, s)| format!("{f}#{s}"))
            .collect();
        rendered.push(format!("{}#{}", base_key.0, base_key.1));
        return Err(MergeError::ExtendsCycle {
            chain: rendered.join(" -> "),
        });
    }

    let base_spec = base_doc
        .services
        .get(&ext.service)
        .cloned()
        .ok_or_else(|| MergeError::ExtendsTargetMissing {
            file: base_doc.source_path.to_string_lossy().to_string(),
            service: ext.service.clone(),
        })?;

    let resolved_base = if base_spec.extends.is_some() {
        chain.push(base_key);
        let (resolved, _) = resolve_one(base_doc, &base_spec, loader, chain, max_depth)?;
        chain.pop();
        resolved
    } else {
        base_spec
    };

    let mut local = spec.clone();
    local.extends = None;
    let source = match ext.file {
        Some(_) => MergeSource::File(file_key(&base_doc.source_path)),
        None => MergeSource::SameFile,
    };
    let step = step_for(&resolved_base, &local, source.clone());
    let mut merged = merge_service(&resolved_base, &local);
    merged.extends = None;
    merged.name = spec.name.clone();
    Ok((merged, step))
}

/// Merges an override document over a base, docker `-f base -f override`
/// style. Folding a file list left to right composes this operation.
pub fn apply_override(
    base: &ComposeDocument,
    override_doc: &ComposeDocument,
) -> (ComposeDocument, MergeTrace) {
    let mut out = base.clone();
    let mut trace = MergeTrace::default();
    let source = MergeSource::File(file_key(&override_doc.source_path));
    for (name, overlay) in &override_doc.services {
        match base.services.get(name) {
            Some(base_spec) => {
                trace.steps.push(step_for(base_spec, overlay, source.clone()));
                out.services
                    .insert(name.clone(), merge_service(base_spec, overlay));
            }
            None => {
                trace.steps.push(MergeStep {
                    target_service: name.clone(),
                    source: source.clone(),
                    keys_overridden: BTreeSet::new(),
                    keys_inherited: BTreeSet::new(),
                });
                out.services.insert(name.clone(), overlay.clone());
            }
        }
    }
    out.named_volumes
        .extend(override_doc.named_volumes.iter().cloned());
    out.networks.extend(override_doc.networks.iter().cloned());
    out.unresolved_variables
        .extend(override_doc.unresolved_variables.iter().cloned());
    // The merged record represents both files, so syntax counts add up.
    out.syntax_meta.anchor_count += override_doc.syntax_meta.anchor_count;
    out.syntax_meta.alias_count += override_doc.syntax_meta.alias_count;
    out.syntax_meta.merge_key_count += override_doc.syntax_meta.merge_key_count;
    out.syntax_meta
        .anchor_names
        .extend(override_doc.syntax_meta.anchor_names.iter().cloned());
    (out, trace)
}

/// Replays a trace produced by `apply_override`: applies exactly the
/// services the steps name. Byte-identical to the original merge output
/// when serialized canonically.
pub fn replay_override(
    base: &ComposeDocument,
    override_doc: &ComposeDocument,
    trace: &MergeTrace,
) -> ComposeDocument {
    let mut out = base.clone();
    for step in &trace.steps {
        let overlay = match override_doc.services.get(&step.target_service) {
            Some(o) => o,
            None => continue,
        };
        let merged = match base.services.get(&step.target_service) {
            Some(base_spec) => merge_service(base_spec, overlay),
            None => overlay.clone(),
        };
        out.services.insert(step.target_service.clone(), merged);
    }
    out.named_volumes
        .extend(override_doc.named_volumes.iter().cloned());
    out.networks.extend(override_doc.networks.iter().cloned());
    out.unresolved_variables
        .extend(override_doc.unresolved_variables.iter().cloned());
    out.syntax_meta.anchor_count += override_doc.syntax_meta.anchor_count;
    out.syntax_meta.alias_count += override_doc.syntax_meta.alias_count;
    out.syntax_meta.merge_key_count += override_doc.syntax_meta.merge_key_count;
    out.syntax_meta
        .anchor_names
        .extend(override_doc.syntax_meta.anchor_names.iter().cloned());
    out
}
