//! Compose file front end.
//!
//! Parsing runs in two passes. A raw token scan counts anchors, aliases and
//! `<<` merge keys (the resolved tree erases that evidence), then a semantic
//! load produces a node tree with aliases expanded. Merge keys are applied
//! on the loaded tree: host keys win, earlier merge sources win over later
//! ones. `resolve_document` normalizes the tree into `ComposeDocument`,
//! applying `${VAR}` interpolation from a caller-supplied environment.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use thiserror::Error;
use yaml_rust2::scanner::{Scanner, TokenType};
use yaml_rust2::{Yaml, YamlLoader};

use crate::model::{
    BuildSpec, ComposeDocument, DependsOn, ExtendsRef, FileRole, FileRoleKind, PortBinding,
    RawDocument, ServiceSpec, SyntaxMeta, VolumeMount, VolumeSource, YamlNode,
};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("yaml syntax error: {0}")]
    Syntax(String),
    #[error("alias *{name} used before any anchor &{name} was defined")]
    UndefinedAlias { name: String },
    #[error("mapping key at {location} is not a scalar")]
    NonScalarKey { location: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum ResolveError {
    #[error("no services defined (top-level `services` mapping missing or empty)")]
    MissingServices,
    #[error("service {service}: invalid port entry {entry:?}: {reason}")]
    InvalidPort {
        service: String,
        entry: String,
        reason: String,
    },
    #[error("service {service}: invalid volume entry {entry:?}: {reason}")]
    InvalidVolumeSpec {
        service: String,
        entry: String,
        reason: String,
    },
    #[error("service {service}: key `{key}` has an unexpected shape (expected {expected})")]
    UnexpectedShape {
        service: String,
        key: String,
        expected: String,
    },
}

// ---------------------------------------------------------------------------
// pass 1: token scan
// ---------------------------------------------------------------------------

fn scan_syntax_meta(text: &str) -> Result<SyntaxMeta, ParseError> {
    let mut meta = SyntaxMeta::default();
    let mut defined: BTreeSet<String> = BTreeSet::new();
    let mut scanner = Scanner::new(text.chars());
    let mut prev_was_key = false;
    for token in scanner.by_ref() {
        match &token.1 {
            TokenType::Anchor(name) => {
                meta.anchor_count += 1;
                meta.anchor_names.insert(name.clone());
                defined.insert(name.clone());
                prev_was_key = false;
            }
            TokenType::Alias(name) => {
                if !defined.contains(name) {
                    return Err(ParseError::UndefinedAlias { name: name.clone() });
                }
                meta.alias_count += 1;
                prev_was_key = false;
            }
            TokenType::Scalar(_, value) => {
                if prev_was_key && value == "<<" {
                    meta.merge_key_count += 1;
                }
                prev_was_key = false;
            }
            TokenType::Key => prev_was_key = true,
            _ => prev_was_key = false,
        }
    }
    if let Some(err) = scanner.get_error() {
        return Err(ParseError::Syntax(err.to_string()));
    }
    Ok(meta)
}

// ---------------------------------------------------------------------------
// pass 2: semantic load
// ---------------------------------------------------------------------------

fn convert(yaml: &Yaml) -> Result<YamlNode, ParseError> {
    Ok(match yaml {
        Yaml::Null | Yaml::BadValue => YamlNode::Null,
        Yaml::Boolean(b) => YamlNode::Bool(*b),
        Yaml::Integer(i) => YamlNode::Int(*i),
        Yaml::Real(r) => match r.parse::<f64>() {
            Ok(f) => YamlNode::Float(f),
            Err(_) => YamlNode::Str(r.clone()),
        },
        Yaml::String(s) => YamlNode::Str(s.clone()),
        Yaml::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for it in items {
                out.push(convert(it)?);
            }
            YamlNode::Seq(out)
        }
        Yaml::Hash(entries) => {
            let mut out = Vec::with_capacity(entries.len());
            for (k, v) in entries {
                let key = match k {
                    Yaml::String(s) => s.clone(),
                    Yaml::Integer(i) => i.to_string(),
                    Yaml::Boolean(b) => b.to_string(),
                    Yaml::Real(r) => r.clone(),
                    Yaml::Null => "null".to_string(),
                    other => {
                        return Err(ParseError::NonScalarKey {
                            location: format!("{other:?}"),
                        })
                    }
                };
                out.push((key, convert(v)?));
            }
            YamlNode::Map(out)
        }
        // The loader replaces aliases with clones of the anchored value, so
        // this variant never survives a successful load.
        Yaml::Alias(_) => YamlNode::Null,
    })
}

/// Applies YAML merge keys bottom-up. Explicit keys of the host mapping
/// always win; among merge sources the earlier one wins.
fn apply_merge_keys(node: &mut YamlNode) {
    match node {
        YamlNode::Seq(items) => {
            for it in items {
                apply_merge_keys(it);
            }
        }
        YamlNode::Map(entries) => {
            for (_, v) in entries.iter_mut() {
                apply_merge_keys(v);
            }
            let mut sources: Vec<YamlNode> = Vec::new();
            entries.retain(|(k, v)| {
                if k == "<<" {
                    match v {
                        YamlNode::Seq(items) => sources.extend(items.iter().cloned()),
                        other => sources.push(other.clone()),
                    }
                    false
                } else {
                    true
                }
            });
            for source in sources {
                if let YamlNode::Map(src_entries) = source {
                    for (k, v) in src_entries {
                        if !entries.iter().any(|(ek, _)| *ek == k) {
                            entries.push((k, v));
                        }
                    }
                }
            }
        }
        _ => {}
    }
}

/// Parses compose YAML text. Multi-document streams keep the first document
/// (compose files are single-document).
pub fn parse_document(text: &str, source_path: impl Into<PathBuf>) -> Result<RawDocument, ParseError> {
    // token scan first: it reports undefined aliases precisely, where the
    // loader would only give a generic unknown-anchor error
    let syntax_meta = scan_syntax_meta(text)?;
    let docs = YamlLoader::load_from_str(text).map_err(|e| ParseError::Syntax(e.to_string()))?;
    let mut tree = match docs.into_iter().next() {
        Some(doc) => convert(&doc)?,
        None => YamlNode::Null,
    };
    apply_merge_keys(&mut tree);
    let top_level_keys = match &tree {
        YamlNode::Map(entries) => entries.iter().map(|(k, _)| k.clone()).collect(),
        _ => Vec::new(),
    };
    Ok(RawDocument {
        tree,
        syntax_meta,
        source_path: source_path.into(),
        top_level_keys,
    })
}

// ---------------------------------------------------------------------------
// interpolation
// ---------------------------------------------------------------------------

fn is_var_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_var_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Expands `$VAR`, `${VAR}`, `${VAR:-default}` and `${VAR-default}`.
/// `$$` escapes a literal dollar. Unknown variables expand to the empty
/// string and are recorded in `unresolved`. Defaults may nest (`${A:-${B}}`).
pub fn interpolate(
    input: &str,
    env: &BTreeMap<String, String>,
    unresolved: &mut BTreeSet<String>,
) -> String {
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '$' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        if i + 1 >= chars.len() {
            out.push('$');
            break;
        }
        match chars[i + 1] {
            '$' => {
                out.push('$');
                i += 2;
            }
            '{' => {
                // Find the matching close brace, tracking nested ${ ... }.
                let mut depth = 1;
                let mut j = i + 2;
                while j < chars.len() && depth > 0 {
                    if chars[j] == '{' && j > 0 && chars[j - 1] == '$' {
                        depth += 1;
                    } else if chars[j] == '}' {
                        depth -= 1;
                    }
                    j += 1;
                }
                if depth != 0 {
                    // Unterminated expression: keep it verbatim.
                    out.extend(&chars[i..]);
                    break;
                }
                let body: String = chars[i + 2..j - 1].iter().collect();
                out.push_str(&expand_braced(&body, env, unresolved));
                i = j;
            }
            c if is_var_start(c) => {
                let mut j = i + 1;
                while j < chars.len() && is_var_char(chars[j]) {
                    j += 1;
                }
                let name: String = chars[i + 1..j].iter().collect();
                match env.get(&name) {
                    Some(v) => out.push_str(v),
                    None => {
                        unresolved.insert(name);
                    }
                }
                i = j;
            }
            _ => {
                out.push('$');
                i += 1;
            }
        }
    }
    out
}

fn expand_braced(
    body: &str,
    env: &BTreeMap<String, String>,
    unresolved: &mut BTreeSet<String>,
) -> String {
    // Separator is the first `:-`, `-`, `:?` or `?` after the name.
    let name_end = body
        .char_indices()
        .find(|(_, c)| !is_var_char(*c))
        .map(|(idx, _)| idx)
        .unwrap_or(body.len());
    let name = &body[..name_end];
    let rest = &body[name_end..];
    let value = env.get(name);
    if rest.is_empty() {
        return match value {
            Some(v) => v.clone(),
            None => {
                unresolved.insert(name.to_string());
                String::new()
            }
        };
    }
    let (empty_counts_as_unset, default) = if let Some(d) = rest.strip_prefix(":-") {
        (true, Some(d))
    } else if let Some(d) = rest.strip_prefix('-') {
        (false, Some(d))
    } else if rest.starts_with(":?") || rest.starts_with('?') {
        // Required variable: expansion never aborts the scan, so a missing
        // value degrades to empty-and-recorded like the plain form.
        (false, None)
    } else {
        // Unrecognized operator: treat the whole body as a plain name miss.
        (false, None)
    };
    match default {
        Some(d) => {
            let unset = match value {
                None => true,
                Some(v) => empty_counts_as_unset && v.is_empty(),
            };
            if unset {
                interpolate(d, env, unresolved)
            } else {
                value.cloned().unwrap_or_default()
            }
        }
        None => match value {
            Some(v) => v.clone(),
            None => {
                unresolved.insert(name.to_string());
                String::new()
            }
        },
    }
}

fn interpolate_tree(
    node: &YamlNode,
    env: &BTreeMap<String, String>,
    unresolved: &mut BTreeSet<String>,
) -> YamlNode {
    match node {
        YamlNode::Str(s) => YamlNode::Str(interpolate(s, env, unresolved)),
        YamlNode::Seq(items) => YamlNode::Seq(
            items
                .iter()
                .map(|it| interpolate_tree(it, env, unresolved))
                .collect(),
        ),
        YamlNode::Map(entries) => YamlNode::Map(
            entries
                .iter()
                .map(|(k, v)| (k.clone(), interpolate_tree(v, env, unresolved)))
                .collect(),
        ),
        other => other.clone(),
    }
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

fn parse_port_number(service: &str, entry: &str, text: &str) -> Result<u16, ResolveError> {
    let n: u32 = text.parse().map_err(|_| ResolveError::InvalidPort {
        service: service.to_string(),
        entry: entry.to_string(),
        reason: format!("{text:?} is not a number"),
    })?;
    if !(1..=65535).contains(&n) {
        return Err(ResolveError::InvalidPort {
            service: service.to_string(),
            entry: entry.to_string(),
            reason: format!("port {n} outside 1-65535"),
        });
    }
    Ok(n as u16)
}

/// Parses "N" or "A-B" into an inclusive range.
fn parse_port_range(service: &str, entry: &str, text: &str) -> Result<(u16, u16), ResolveError> {
    if let Some((lo, hi)) = text.split_once('-') {
        let lo = parse_port_number(service, entry, lo)?;
        let hi = parse_port_number(service, entry, hi)?;
        if lo > hi {
            return Err(ResolveError::InvalidPort {
                service: service.to_string(),
                entry: entry.to_string(),
                reason: format!("range {lo}-{hi} is reversed"),
            });
        }
        Ok((lo, hi))
    } else {
        let n = parse_port_number(service, entry, text)?;
        Ok((n, n))
    }
}

const MAX_RANGE_EXPANSION: u32 = 256;

fn parse_port_short(service: &str, entry: &str) -> Result<Vec<PortBinding>, ResolveError> {
    let err = |reason: &str| ResolveError::InvalidPort {
        service: service.to_string(),
        entry: entry.to_string(),
        reason: reason.to_string(),
    };
    let (spec, protocol) = match entry.rsplit_once('/') {
        Some((head, proto)) if !proto.is_empty() && proto.chars().all(|c| c.is_ascii_alphabetic()) => {
            (head, Some(proto.to_ascii_lowercase()))
        }
        _ => (entry, None),
    };

    // Optional bracketed IPv6 host address.
    let (host_ip, rest) = if let Some(stripped) = spec.strip_prefix('[') {
        match stripped.split_once(']') {
            Some((ip, tail)) => {
                let tail = tail.strip_prefix(':').ok_or_else(|| err("missing ':' after address"))?;
                (Some(ip.to_string()), tail)
            }
            None => return Err(err("unterminated '[' in address")),
        }
    } else {
        (None, spec)
    };

    let parts: Vec<&str> = rest.split(':').collect();
    let (host_ip, host_part, container_part) = match (host_ip, parts.as_slice()) {
        (None, [container]) => (None, None, *container),
        (None, [host, container]) => (None, Some(*host), *container),
        (None, [ip, host, container]) => (Some(ip.to_string()), Some(*host), *container),
        (ip @ Some(_), [container]) => (ip, None, *container),
        (ip @ Some(_), [host, container]) => (ip, Some(*host), *container),
        _ => return Err(err("too many ':' separators")),
    };

    let (c_lo, c_hi) = parse_port_range(service, entry, container_part)?;
    let container_span = (c_hi - c_lo) as u32 + 1;
    if container_span > MAX_RANGE_EXPANSION {
        return Err(err("port range too large"));
    }
    let host_range = match host_part {
        Some(h) if !h.is_empty() => Some(parse_port_range(service, entry, h)?),
        Some(_) => None,
        None => None,
    };
    if let Some((h_lo, h_hi)) = host_range {
        let host_span = (h_hi - h_lo) as u32 + 1;
        if host_span != container_span {
            return Err(err("host and container ranges differ in length"));
        }
    }

    let mut out = Vec::with_capacity(container_span as usize);
    for offset in 0..container_span {
        out.push(PortBinding {
            host_ip: host_ip.clone(),
            host_port: host_range.map(|(lo, _)| lo + offset as u16),
            container_port: c_lo + offset as u16,
            protocol: protocol.clone(),
        });
    }
    Ok(out)
}

fn parse_port_entry(service: &str, node: &YamlNode) -> Result<Vec<PortBinding>, ResolveError> {
    match node {
        YamlNode::Int(i) => {
            let text = i.to_string();
            let port = parse_port_number(service, &text, &text)?;
            Ok(vec![PortBinding {
                host_ip: None,
                host_port: None,
                container_port: port,
                protocol: None,
            }])
        }
        YamlNode::Str(s) => parse_port_short(service, s),
        YamlNode::Map(_) => {
            let entry = "long syntax".to_string();
            let target = node
                .get("target")
                .and_then(|n| n.scalar_to_string())
                .ok_or_else(|| ResolveError::InvalidPort {
                    service: service.to_string(),
                    entry: entry.clone(),
                    reason: "missing target".to_string(),
                })?;
            let container_port = parse_port_number(service, &entry, &target)?;
            let host_port = match node.get("published").and_then(|n| n.scalar_to_string()) {
                Some(p) => Some(parse_port_number(service, &entry, &p)?),
                None => None,
            };
            let protocol = node
                .get("protocol")
                .and_then(|n| n.scalar_to_string())
                .map(|p| p.to_ascii_lowercase());
            let host_ip = node.get("host_ip").and_then(|n| n.scalar_to_string());
            Ok(vec![PortBinding {
                host_ip,
                host_port,
                container_port,
                protocol,
            }])
        }
        other => Err(ResolveError::InvalidPort {
            service: service.to_string(),
            entry: format!("{other:?}"),
            reason: "expected number, string or mapping".to_string(),
        }),
    }
}

fn looks_like_host_path(s: &str) -> bool {
    s.starts_with('/') || s.starts_with("./") || s.starts_with("../") || s.starts_with('~')
}

fn parse_volume_entry(service: &str, node: &YamlNode) -> Result<VolumeMount, ResolveError> {
    let err = |entry: &str, reason: &str| ResolveError::InvalidVolumeSpec {
        service: service.to_string(),
        entry: entry.to_string(),
        reason: reason.to_string(),
    };
    match node {
        YamlNode::Str(s) => {
            if s.is_empty() {
                return Err(err(s, "empty volume entry"));
            }
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                [target] => {
                    if !target.starts_with('/') {
                        return Err(err(s, "single-element mount must be an absolute container path"));
                    }
                    Ok(VolumeMount {
                        source: None,
                        target: target.to_string(),
                        mode: None,
                    })
                }
                [source, target] | [source, target, _] => {
                    if target.is_empty() || !target.starts_with('/') {
                        return Err(err(s, "container target must be an absolute path"));
                    }
                    if source.is_empty() {
                        return Err(err(s, "empty mount source"));
                    }
                    let mode = if parts.len() == 3 {
                        Some(parts[2].to_string())
                    } else {
                        None
                    };
                    let source = if looks_like_host_path(source) {
                        VolumeSource::HostPath(source.to_string())
                    } else {
                        VolumeSource::Named(source.to_string())
                    };
                    Ok(VolumeMount {
                        source: Some(source),
                        target: target.to_string(),
                        mode,
                    })
                }
                _ => Err(err(s, "too many ':' separators")),
            }
        }
        YamlNode::Map(_) => {
            let target = node
                .get("target")
                .and_then(|n| n.scalar_to_string())
                .ok_or_else(|| err("long syntax", "missing target"))?;
            if !target.starts_with('/') {
                return Err(err("long syntax", "container target must be an absolute path"));
            }
            let kind = node
                .get("type")
                .and_then(|n| n.scalar_to_string())
                .unwrap_or_else(|| "volume".to_string());
            let source_text = node.get("source").and_then(|n| n.scalar_to_string());
            let source = match (kind.as_str(), source_text) {
                ("bind", Some(s)) => Some(VolumeSource::HostPath(s)),
                ("volume", Some(s)) => Some(VolumeSource::Named(s)),
                (_, Some(s)) => {
                    if looks_like_host_path(&s) {
                        Some(VolumeSource::HostPath(s))
                    } else {
                        Some(VolumeSource::Named(s))
                    }
                }
                (_, None) => None,
            };
            let mode = node
                .get("read_only")
                .and_then(|n| n.scalar_to_string())
                .and_then(|v| if v == "true" { Some("ro".to_string()) } else { None });
            Ok(VolumeMount {
                source,
                target,
                mode,
            })
        }
        other => Err(err(&format!("{other:?}"), "expected string or mapping")),
    }
}

/// Normalizes `environment`/`labels` written either as a mapping or as a
/// `KEY=VALUE` list. `lookup_env` controls whether a bare `KEY` pulls its
/// value from the caller environment (environment: yes, labels: no).
fn parse_kv_block(
    service: &str,
    key: &str,
    node: &YamlNode,
    env: &BTreeMap<String, String>,
    unresolved: &mut BTreeSet<String>,
    lookup_env: bool,
) -> Result<BTreeMap<String, String>, ResolveError> {
    let mut out = BTreeMap::new();
    match node {
        YamlNode::Map(entries) => {
            for (k, v) in entries {
                match v {
                    YamlNode::Null => {
                        if lookup_env {
                            match env.get(k) {
                                Some(val) => out.insert(k.clone(), val.clone()),
                                None => {
                                    unresolved.insert(k.clone());
                                    out.insert(k.clone(), String::new())
                                }
                            };
                        } else {
                            out.insert(k.clone(), String::new());
                        }
                    }
                    other => match other.scalar_to_string() {
                        Some(s) => {
                            out.insert(k.clone(), s);
                        }
                        None => {
                            return Err(ResolveError::UnexpectedShape {
                                service: service.to_string(),
                                key: format!("{key}.{k}"),
                                expected: "scalar value".to_string(),
                            })
                        }
                    },
                }
            }
        }
        YamlNode::Seq(items) => {
            for item in items {
                let text = item.scalar_to_string().ok_or_else(|| ResolveError::UnexpectedShape {
                    service: service.to_string(),
                    key: key.to_string(),
                    expected: "list of KEY=VALUE strings".to_string(),
                })?;
                match text.split_once('=') {
                    Some((k, v)) => {
                        out.insert(k.to_string(), v.to_string());
                    }
                    None => {
                        if lookup_env {
                            match env.get(&text) {
                                Some(val) => out.insert(text.clone(), val.clone()),
                                None => {
                                    unresolved.insert(text.clone());
                                    out.insert(text, String::new())
                                }
                            };
                        } else {
                            out.insert(text, String::new());
                        }
                    }
                }
            }
        }
        other => {
            return Err(ResolveError::UnexpectedShape {
                service: service.to_string(),
                key: key.to_string(),
                expected: format!("mapping or list, found {other:?}"),
            })
        }
    }
    Ok(out)
}

fn parse_depends_on(service: &str, node: &YamlNode) -> Result<Vec<DependsOn>, ResolveError> {
    match node {
        YamlNode::Seq(items) => {
            let mut out = Vec::new();
            for item in items {
                let name = item.scalar_to_string().ok_or_else(|| ResolveError::UnexpectedShape {
                    service: service.to_string(),
                    key: "depends_on".to_string(),
                    expected: "list of service names".to_string(),
                })?;
                out.push(DependsOn {
                    service: name,
                    condition: None,
                });
            }
            Ok(out)
        }
        YamlNode::Map(entries) => {
            let mut out = Vec::new();
            for (name, body) in entries {
                let condition = body.get("condition").and_then(|n| n.scalar_to_string());
                out.push(DependsOn {
                    service: name.clone(),
                    condition,
                });
            }
            Ok(out)
        }
        other => Err(ResolveError::UnexpectedShape {
            service: service.to_string(),
            key: "depends_on".to_string(),
            expected: format!("list or mapping, found {other:?}"),
        }),
    }
}

fn parse_command(node: &YamlNode) -> Option<String> {
    match node {
        YamlNode::Seq(items) => {
            let parts: Vec<String> = items.iter().filter_map(|it| it.scalar_to_string()).collect();
            Some(parts.join(" "))
        }
        other => other.scalar_to_string(),
    }
}

fn parse_env_files(service: &str, node: &YamlNode) -> Result<Vec<String>, ResolveError> {
    let entry_path = |item: &YamlNode| -> Option<String> {
        match item {
            YamlNode::Map(_) => item.get("path").and_then(|n| n.scalar_to_string()),
            other => other.scalar_to_string(),
        }
    };
    match node {
        YamlNode::Seq(items) => {
            let mut out = Vec::new();
            for item in items {
                out.push(entry_path(item).ok_or_else(|| ResolveError::UnexpectedShape {
                    service: service.to_string(),
                    key: "env_file".to_string(),
                    expected: "list of paths".to_string(),
                })?);
            }
            Ok(out)
        }
        other => match entry_path(other) {
            Some(p) => Ok(vec![p]),
            None => Err(ResolveError::UnexpectedShape {
                service: service.to_string(),
                key: "env_file".to_string(),
                expected: "path or list of paths".to_string(),
            }),
        },
    }
}

fn parse_extends(service: &str, node: &YamlNode) -> Result<ExtendsRef, ResolveError> {
    match node {
        YamlNode::Str(s) => Ok(ExtendsRef {
            file: None,
            service: s.clone(),
        }),
        YamlNode::Map(_) => {
            let target = node
                .get("service")
                .and_then(|n| n.scalar_to_string())
                .ok_or_else(|| ResolveError::UnexpectedShape {
                    service: service.to_string(),
                    key: "extends".to_string(),
                    expected: "mapping with `service`".to_string(),
                })?;
            Ok(ExtendsRef {
                file: node.get("file").and_then(|n| n.scalar_to_string()),
                service: target,
            })
        }
        other => Err(ResolveError::UnexpectedShape {
            service: service.to_string(),
            key: "extends".to_string(),
            expected: format!("string or mapping, found {other:?}"),
        }),
    }
}

fn parse_build(node: &YamlNode) -> Option<BuildSpec> {
    match node {
        YamlNode::Str(s) => Some(BuildSpec {
            context: s.clone(),
            dockerfile: None,
        }),
        YamlNode::Map(_) => Some(BuildSpec {
            context: node
                .get("context")
                .and_then(|n| n.scalar_to_string())
                .unwrap_or_else(|| ".".to_string()),
            dockerfile: node.get("dockerfile").and_then(|n| n.scalar_to_string()),
        }),
        _ => None,
    }
}

fn parse_service(
    name: &str,
    body: &YamlNode,
    env: &BTreeMap<String, String>,
    unresolved: &mut BTreeSet<String>,
) -> Result<ServiceSpec, ResolveError> {
    let mut spec = ServiceSpec::new(name);
    let entries = match body {
        YamlNode::Map(entries) => entries.as_slice(),
        YamlNode::Null => &[],
        _ => {
            return Err(ResolveError::UnexpectedShape {
                service: name.to_string(),
                key: name.to_string(),
                expected: "mapping of service keys".to_string(),
            })
        }
    };
    for (key, value) in entries {
        match key.as_str() {
            "image" => spec.image = value.scalar_to_string(),
            "build" => spec.build = parse_build(value),
            "ports" => {
                let items = value.as_seq().ok_or_else(|| ResolveError::UnexpectedShape {
                    service: name.to_string(),
                    key: "ports".to_string(),
                    expected: "list".to_string(),
                })?;
                for item in items {
                    spec.ports.extend(parse_port_entry(name, item)?);
                }
            }
            "volumes" => {
                let items = value.as_seq().ok_or_else(|| ResolveError::UnexpectedShape {
                    service: name.to_string(),
                    key: "volumes".to_string(),
                    expected: "list".to_string(),
                })?;
                for item in items {
                    spec.volumes.push(parse_volume_entry(name, item)?);
                }
            }
            "environment" => {
                spec.environment = parse_kv_block(name, "environment", value, env, unresolved, true)?
            }
            "labels" => spec.labels = parse_kv_block(name, "labels", value, env, unresolved, false)?,
            "env_file" => spec.env_files = parse_env_files(name, value)?,
            "depends_on" => spec.depends_on = parse_depends_on(name, value)?,
            "links" => {
                if let YamlNode::Seq(items) = value {
                    for item in items {
                        if let Some(link) = item.scalar_to_string() {
                            // "service:alias" -> service
                            let target = link.split(':').next().unwrap_or(&link).to_string();
                            spec.links.push(target);
                        }
                    }
                }
            }
            "command" => spec.command = parse_command(value),
            "extends" => spec.extends = Some(parse_extends(name, value)?),
            "deploy" => spec.deploy = Some(value.clone()),
            "hostname" => spec.hostname = value.scalar_to_string(),
            other => {
                spec.unknown_keys.insert(other.to_string());
            }
        }
    }
    Ok(spec)
}

fn collect_top_level_names(tree: &YamlNode, key: &str) -> BTreeSet<String> {
    match tree.get(key) {
        Some(YamlNode::Map(entries)) => entries.iter().map(|(k, _)| k.clone()).collect(),
        _ => BTreeSet::new(),
    }
}

/// Normalizes a parsed document. Interpolation runs over every string value
/// with the caller-supplied environment; unresolved names end up on the
/// document. Fails with `MissingServices` when no usable `services` mapping
/// exists.
pub fn resolve_document(
    raw: &RawDocument,
    env: &BTreeMap<String, String>,
) -> Result<ComposeDocument, ResolveError> {
    let mut unresolved = BTreeSet::new();
    let tree = interpolate_tree(&raw.tree, env, &mut unresolved);

    let services_node = tree.get("services").ok_or(ResolveError::MissingServices)?;
    let service_entries = services_node
        .as_map()
        .ok_or(ResolveError::MissingServices)?;
    if service_entries.is_empty() {
        return Err(ResolveError::MissingServices);
    }

    let mut services = BTreeMap::new();
    for (name, body) in service_entries {
        let spec = parse_service(name, body, env, &mut unresolved)?;
        services.insert(name.clone(), spec);
    }

    Ok(ComposeDocument {
        source_path: raw.source_path.clone(),
        services,
        named_volumes: collect_top_level_names(&tree, "volumes"),
        networks: collect_top_level_names(&tree, "networks"),
        syntax_meta: raw.syntax_meta.clone(),
        unresolved_variables: unresolved,
    })
}

// ---------------------------------------------------------------------------
// file role
// ---------------------------------------------------------------------------

const TEMPLATE_MARKERS: &[&str] = &["{{", "{%", "<%"];

/// True when the text carries template-engine markers. `${VAR}` is compose
/// interpolation, not templating, and never counts.
pub fn has_template_markers(text: &str) -> bool {
    TEMPLATE_MARKERS.iter().any(|m| text.contains(m))
}

/// Comment lines at the top of the file (before the first content line),
/// `#` stripped, capped at the first ten.
pub fn leading_comments(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            out.push(comment.trim().to_string());
            if out.len() == 10 {
                break;
            }
        } else {
            break;
        }
    }
    out
}

fn generated_marker(comments: &[String]) -> bool {
    comments.iter().any(|c| {
        let lower = c.to_ascii_lowercase();
        lower.contains("generat") || lower.contains("do not edit")
    })
}

fn override_named(filename: &str) -> bool {
    filename.to_ascii_lowercase().contains("override")
}

/// True when the service body (raw tree) carries any of image/build/extends.
fn raw_service_is_self_sufficient(body: &YamlNode) -> bool {
    body.get("image").is_some() || body.get("build").is_some() || body.get("extends").is_some()
}

/// Assigns the file role. Total over parse results: a failed parse without
/// template markers is ConfigurationNotCompose. Precedence: template
/// markers, override filename, not-compose shape, partial self-sufficiency,
/// plain compose. The auto-generated marker is orthogonal.
pub fn classify_file_role(source: &str, raw: Option<&RawDocument>, filename: &str) -> FileRole {
    let auto_generated = generated_marker(&leading_comments(source));
    if has_template_markers(source) {
        return FileRole::new(FileRoleKind::TemplateForGenerating, auto_generated);
    }
    let raw = match raw {
        Some(raw) => raw,
        None => return FileRole::new(FileRoleKind::ConfigurationNotCompose, auto_generated),
    };
    if override_named(filename) {
        return FileRole::new(FileRoleKind::OverrideCandidate, auto_generated);
    }
    let services = match raw.tree.get("services").and_then(|n| n.as_map()) {
        Some(entries) if !entries.is_empty() => entries,
        _ => return FileRole::new(FileRoleKind::ConfigurationNotCompose, auto_generated),
    };
    let sufficient = services
        .iter()
        .filter(|(_, body)| raw_service_is_self_sufficient(body))
        .count();
    if sufficient == 0 {
        return FileRole::new(FileRoleKind::ConfigurationNotCompose, auto_generated);
    }
    if sufficient < services.len() {
        return FileRole::new(FileRoleKind::OverrideCandidate, auto_generated);
    }
    FileRole::new(FileRoleKind::Compose, auto_generated)
}

/// Lexically normalizes a relative/absolute path: strips `./`, resolves
/// `..` against preceding components, collapses separators. Used wherever
/// two spellings of the same path must compare equal (env_file sharing,
/// bind mount identity).
pub fn normalize_path(path: &str) -> String {
    let absolute = path.starts_with('/');
    let mut parts: Vec<&str> = Vec::new();
    for comp in path.split('/') {
        match comp {
            "" | "." => {}
            ".." => {
                if parts.last().map(|p| *p != "..").unwrap_or(false) {
                    parts.pop();
                } else if !absolute {
                    parts.push("..");
                }
            }
            other => parts.push(other),
        }
    }
    let joined = parts.join("/");
    if absolute {
        format!("/{joined}")
    } else if joined.is_empty() {
        ".".to_string()
    } else {
        joined
    }
}

/// Loads simple `KEY=VALUE` lines (dotenv format): blank lines and `#`
/// comments skipped, optional `export ` prefix, surrounding quotes removed.
pub fn parse_dotenv(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line = line.strip_prefix("export ").unwrap_or(line);
        if let Some((k, v)) = line.split_once('=') {
            let k = k.trim();
            let mut v = v.trim();
            if v.len() >= 2
                && ((v.starts_with('"') && v.ends_with('"'))
                    || (v.starts_with('\'') && v.ends_with('\'')))
            {
                v = &v[1..v.len() - 1];
            }
            if !k.is_empty() {
                out.insert(k.to_string(), v.to_string());
            }
        }
    }
    out
}

pub fn resolve_with_empty_env(raw: &RawDocument) -> Result<ComposeDocument, ResolveError> {
    resolve_document(raw, &BTreeMap::new())
}
