//! Corpus scanner and report assembly: walks a directory tree, analyzes
//! every compose file through the full pipeline, pairs override files,
//! and emits a deterministic report in JSON or text form.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::classify::{
    classify_service, default_rules, parse_rules, type_histogram, ClassificationRule,
    ClassifiedService, ServiceType,
};
use crate::graph::{build_graph, OrchestrationGraph};
use crate::merge::{apply_override, resolve_extends, DEFAULT_MAX_EXTENDS_DEPTH};
use crate::mining::{mine_frequent_itemsets, transactions_from_types, ItemsetResult, MiningError};
use crate::model::{BuildSpec, ComposeDocument, FileRole, FileRoleKind, SyntaxMeta};
use crate::parser::{classify_file_role, parse_document, parse_dotenv, resolve_document};
use crate::patterns::{
    detect_all, filter_findings, FileAnalysis, PatternFinding, PatternId, RepoContext,
    StrictnessFilter,
};

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub root: PathBuf,
    /// Extends may reference files whose names fail the corpus filter;
    /// following them is the default.
    pub follow_extends_outside_filter: bool,
    pub rules_paths: Vec<PathBuf>,
    pub min_support: f64,
    pub strictness: StrictnessFilter,
    /// Also take any .yml/.yaml with a top-level services mapping.
    pub loose: bool,
    /// Explicit merge chains (ordered file lists, first is the base).
    pub merge_chains: Vec<Vec<PathBuf>>,
    pub include_unclassified: bool,
    /// Interpolation environment on top of the root .env file.
    pub env_overrides: BTreeMap<String, String>,
    pub patterns_filter: Option<BTreeSet<PatternId>>,
}

impl ScanOptions {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ScanOptions {
            root: root.into(),
            follow_extends_outside_filter: true,
            rules_paths: Vec::new(),
            min_support: 0.05,
            strictness: StrictnessFilter::Both,
            loose: false,
            merge_chains: Vec::new(),
            include_unclassified: false,
            env_overrides: BTreeMap::new(),
            patterns_filter: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("root {0:?} not found or not a directory")]
    RootNotFound(PathBuf),
    #[error("min support {0} is outside (0, 1]")]
    InvalidMinSupport(f64),
    #[error("rule table {path:?}: {message}")]
    RuleTable { path: PathBuf, message: String },
}

/// One analyzed file. Merged pseudo-records carry `merged_from` and are
/// appended after the real files; they never enter corpus statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub role: FileRoleKind,
    pub auto_generated: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merged_from: Vec<String>,
    pub syntax_meta: SyntaxMeta,
    pub services: Vec<ClassifiedService>,
    pub graph: OrchestrationGraph,
    pub findings: Vec<PatternFinding>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub unresolved_variables: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub root: String,
    pub files: Vec<FileRecord>,
    pub histogram: BTreeMap<ServiceType, usize>,
    pub itemsets: Vec<ItemsetResult>,
    /// Files (not findings) per pattern; merged records excluded.
    pub pattern_counts: BTreeMap<PatternId, usize>,
    pub warnings: Vec<String>,
}

fn selected_by_name(basename: &str) -> bool {
    let lower = basename.to_ascii_lowercase();
    lower.contains("docker-compose") && (lower.ends_with(".yml") || lower.ends_with(".yaml"))
}

fn is_yaml_name(basename: &str) -> bool {
    let lower = basename.to_ascii_lowercase();
    lower.ends_with(".yml") || lower.ends_with(".yaml")
}

fn rel_display(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.to_string_lossy().replace('\\', "/")
}

/// First FROM instruction of the service's Dockerfile, if one is readable.
/// `--platform` style options are skipped; stage names after AS are not
/// part of the image.
fn dockerfile_base_image(compose_dir: &Path, build: &BuildSpec) -> Option<String> {
    let context = compose_dir.join(&build.context);
    let dockerfile = match &build.dockerfile {
        Some(d) => context.join(d),
        None => context.join("Dockerfile"),
    };
    let text = fs::read_to_string(dockerfile).ok()?;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.len() >= 5 && trimmed[..5].eq_ignore_ascii_case("from ") {
            return trimmed[5..]
                .split_whitespace()
                .find(|tok| !tok.starts_with("--"))
                .map(|tok| tok.to_string());
        }
    }
    None
}

struct Analyzed {
    record: FileRecord,
    /// Resolved document, present when the file parsed and resolved.
    document: Option<ComposeDocument>,
    extends_records: Vec<(String, String)>,
    abs_path: PathBuf,
}

struct Pipeline<'a> {
    opts: &'a ScanOptions,
    rules: Vec<ClassificationRule>,
    env: BTreeMap<String, String>,
    warnings: Vec<String>,
    /// Cache for extends targets, keyed by normalized absolute path.
    extends_cache: BTreeMap<String, Result<ComposeDocument, String>>,
}

impl<'a> Pipeline<'a> {
    fn load_for_extends(&mut self, path: &Path) -> Result<ComposeDocument, String> {
        let key = crate::parser::normalize_path(&path.to_string_lossy());
        if let Some(hit) = self.extends_cache.get(&key) {
            return hit.clone();
        }
        let result = self.load_for_extends_uncached(path);
        self.extends_cache.insert(key, result.clone());
        result
    }

    fn load_for_extends_uncached(&self, path: &Path) -> Result<ComposeDocument, String> {
        let basename = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        if !self.opts.follow_extends_outside_filter && !selected_by_name(&basename) {
            return Err(format!(
                "extends target {basename:?} is outside the filename filter"
            ));
        }
        let text = fs::read_to_string(path).map_err(|e| format!("read {path:?}: {e}"))?;
        let raw = parse_document(&text, path).map_err(|e| e.to_string())?;
        resolve_document(&raw, &self.env).map_err(|e| e.to_string())
    }

    /// Full single-file analysis. Never fails: problems become the
    /// record's error field plus a warning.
    fn analyze_file(&mut self, abs_path: &Path, rel: &str) -> Analyzed {
        let basename = abs_path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        let text = match fs::read_to_string(abs_path) {
            Ok(t) => t,
            Err(e) => {
                self.warnings.push(format!("{rel}: unreadable: {e}"));
                return Analyzed {
                    record: empty_record(rel, FileRole::new(FileRoleKind::ConfigurationNotCompose, false), Some(format!("unreadable: {e}"))),
                    document: None,
                    extends_records: vec![],
                    abs_path: abs_path.to_path_buf(),
                };
            }
        };
        let raw = parse_document(&text, abs_path);
        let role = classify_file_role(&text, raw.as_ref().ok(), &basename);

        if role.kind == FileRoleKind::TemplateForGenerating {
            self.warnings.push(format!(
                "{rel}: template for generating compose files; excluded from statistics"
            ));
            let mut record = empty_record(rel, role, None);
            if let Ok(raw) = &raw {
                record.syntax_meta = raw.syntax_meta.clone();
            }
            return Analyzed {
                record,
                document: None,
                extends_records: vec![],
                abs_path: abs_path.to_path_buf(),
            };
        }

        let raw = match raw {
            Ok(raw) => raw,
            Err(e) => {
                self.warnings.push(format!("{rel}: {e}"));
                return Analyzed {
                    record: empty_record(rel, role, Some(e.to_string())),
                    document: None,
                    extends_records: vec![],
                    abs_path: abs_path.to_path_buf(),
                };
            }
        };

        if role.kind == FileRoleKind::ConfigurationNotCompose {
            self.warnings.push(format!(
                "{rel}: not a compose orchestration; excluded from statistics"
            ));
            let mut record = empty_record(rel, role, None);
            record.syntax_meta = raw.syntax_meta.clone();
            return Analyzed {
                record,
                document: None,
                extends_records: vec![],
                abs_path: abs_path.to_path_buf(),
            };
        }

        let document = match resolve_document(&raw, &self.env) {
            Ok(doc) => doc,
            Err(e) => {
                self.warnings.push(format!("{rel}: {e}"));
                let mut record = empty_record(rel, role, Some(e.to_string()));
                record.syntax_meta = raw.syntax_meta.clone();
                return Analyzed {
                    record,
                    document: None,
                    extends_records: vec![],
                    abs_path: abs_path.to_path_buf(),
                };
            }
        };

        // capture inheritance evidence before resolution clears it
        let extends_records: Vec<(String, String)> = document
            .services
            .values()
            .filter_map(|s| {
                s.extends.as_ref().map(|ext| {
                    let desc = match &ext.file {
                        Some(f) => format!("{} (file {f})", ext.service),
                        None => ext.service.clone(),
                    };
                    (s.name.clone(), desc)
                })
            })
            .collect();

        let document = if extends_records.is_empty() {
            document
        } else {
            // the loader borrows self mutably, so hand it a detached cache
            let mut loader = |path: &Path| self.load_for_extends(path);
            match resolve_extends(&document, &mut loader, DEFAULT_MAX_EXTENDS_DEPTH) {
                Ok((resolved, _trace)) => resolved,
                Err(e) => {
                    self.warnings
                        .push(format!("{rel}: extends resolution failed: {e}"));
                    document
                }
            }
        };

        Analyzed {
            record: empty_record(rel, role, None),
            document: Some(document),
            extends_records,
            abs_path: abs_path.to_path_buf(),
        }
    }

    /// Classification, graph and detectors over a resolved document.
    fn complete_record(&mut self, analyzed: &mut Analyzed, ctx: &RepoContext) {
        let Some(document) = &analyzed.document else {
            return;
        };
        let compose_dir = analyzed
            .abs_path
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_default();
        let classified: Vec<ClassifiedService> = document
            .services
            .values()
            .map(|svc| {
                let base = svc
                    .build
                    .as_ref()
                    .and_then(|b| dockerfile_base_image(&compose_dir, b));
                classify_service(svc, &self.rules, base.as_deref())
            })
            .collect();
        let types: BTreeMap<String, ServiceType> = classified
            .iter()
            .map(|c| (c.name.clone(), c.service_type))
            .collect();
        let graph = build_graph(document, &types);
        for w in &graph.warnings {
            self.warnings.push(format!("{}: {w}", analyzed.record.path));
        }
        let analysis = FileAnalysis {
            path: analyzed.record.path.clone(),
            role: FileRole::new(analyzed.record.role, analyzed.record.auto_generated),
            document: document.clone(),
            classified: classified.clone(),
            graph: graph.clone(),
            extends_records: analyzed.extends_records.clone(),
        };
        let mut findings = detect_all(&analysis, ctx);
        if let Some(filter) = &self.opts.patterns_filter {
            findings.retain(|f| filter.contains(&f.pattern));
        }
        let findings = filter_findings(findings, self.opts.strictness);

        analyzed.record.syntax_meta = document.syntax_meta.clone();
        analyzed.record.services = classified;
        analyzed.record.graph = graph;
        analyzed.record.findings = findings;
        analyzed.record.unresolved_variables = document.unresolved_variables.clone();
    }
}

fn empty_record(rel: &str, role: FileRole, error: Option<String>) -> FileRecord {
    FileRecord {
        path: rel.to_string(),
        role: role.kind,
        auto_generated: role.auto_generated,
        merged_from: Vec::new(),
        syntax_meta: SyntaxMeta::default(),
        services: Vec::new(),
        graph: OrchestrationGraph::default(),
        findings: Vec::new(),
        unresolved_variables: BTreeSet::new(),
        error: None,
    }
    .with_error(error)
}

impl FileRecord {
    fn with_error(mut self, error: Option<String>) -> FileRecord {
        self.error = error;
        self
    }

    pub fn is_merged(&self) -> bool {
        !self.merged_from.is_empty()
    }

    /// Real compose content that belongs in corpus statistics.
    fn counts_for_statistics(&self) -> bool {
        !self.is_merged()
            && self.error.is_none()
            && matches!(
                self.role,
                FileRoleKind::Compose | FileRoleKind::OverrideCandidate
            )
    }
}

fn readme_name(basename: &str) -> bool {
    basename.to_ascii_lowercase().starts_with("readme")
}

fn script_name(basename: &str) -> bool {
    let lower = basename.to_ascii_lowercase();
    lower.starts_with("makefile")
        || lower.ends_with(".mk")
        || lower.ends_with(".sh")
        || lower.ends_with(".bash")
}

fn compose_mention(line: &str) -> bool {
    let lower = line.to_ascii_lowercase();
    lower.contains("docker-compose") || lower.contains("docker compose")
}

const CONTEXT_HIT_CAP: usize = 50;

/// Walks the tree once: compose candidates plus repository context files.
fn collect_tree(
    opts: &ScanOptions,
    ctx: &mut RepoContext,
) -> Vec<(PathBuf, bool)> {
    let mut candidates: Vec<(PathBuf, bool)> = Vec::new();
    let mut entries: Vec<PathBuf> = WalkDir::new(&opts.root)
        .follow_links(false)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect();
    entries.sort();
    for path in entries {
        let basename = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        let strict = selected_by_name(&basename);
        if strict {
            candidates.push((path, true));
            continue;
        }
        if opts.loose && is_yaml_name(&basename) {
            candidates.push((path, false));
            continue;
        }
        if readme_name(&basename) {
            if let Ok(text) = fs::read_to_string(&path) {
                for line in text.lines().filter(|l| compose_mention(l)) {
                    if ctx.readme_hits.len() >= CONTEXT_HIT_CAP {
                        break;
                    }
                    ctx.readme_hits.push(line.trim().to_string());
                }
            }
        } else if script_name(&basename) {
            if let Ok(text) = fs::read_to_string(&path) {
                for line in text.lines().filter(|l| compose_mention(l)) {
                    if ctx.script_hits.len() >= CONTEXT_HIT_CAP {
                        break;
                    }
                    ctx.script_hits.push(line.trim().to_string());
                }
            }
        }
    }
    candidates
}

/// Loose candidates qualify only with a top-level services mapping.
fn loose_candidate_qualifies(path: &Path) -> bool {
    let Ok(text) = fs::read_to_string(path) else {
        return false;
    };
    let Ok(raw) = parse_document(&text, path) else {
        return false;
    };
    raw.tree
        .get("services")
        .map(|s| s.is_map())
        .unwrap_or(false)
}

fn override_base_name(basename: &str) -> bool {
    let lower = basename.to_ascii_lowercase();
    lower == "docker-compose.yml" || lower == "docker-compose.yaml"
}

fn override_overlay_name(basename: &str) -> bool {
    let lower = basename.to_ascii_lowercase();
    lower == "docker-compose.override.yml" || lower == "docker-compose.override.yaml"
}

/// Base+override pairs by naming convention, per directory.
fn convention_pairs(analyzed: &[Analyzed]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut by_dir: BTreeMap<String, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for (idx, a) in analyzed.iter().enumerate() {
        let basename = a
            .abs_path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        let dir = a
            .record
            .path
            .rsplit_once('/')
            .map(|(d, _)| d.to_string())
            .unwrap_or_default();
        let entry = by_dir.entry(dir).or_default();
        if override_base_name(&basename) && entry.0.is_none() {
            entry.0 = Some(idx);
        } else if override_overlay_name(&basename) && entry.1.is_none() {
            entry.1 = Some(idx);
        }
    }
    for (_, (base, over)) in by_dir {
        if let (Some(b), Some(o)) = (base, over) {
            pairs.push((b, o));
        }
    }
    pairs
}

pub fn scan_path(opts: &ScanOptions) -> Result<CorpusReport, ScanError> {
    if !(opts.min_support > 0.0 && opts.min_support <= 1.0) {
        return Err(ScanError::InvalidMinSupport(opts.min_support));
    }
    if !opts.root.is_dir() {
        return Err(ScanError::RootNotFound(opts.root.clone()));
    }

    let mut rules: Vec<ClassificationRule> = default_rules().to_vec();
    for path in &opts.rules_paths {
        let text = fs::read_to_string(path).map_err(|e| ScanError::RuleTable {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let parsed = parse_rules(&text).map_err(|e| ScanError::RuleTable {
            path: path.clone(),
            message: e.to_string(),
        })?;
        rules.extend(parsed);
    }

    // interpolation environment: root .env, then explicit overrides
    let mut env = fs::read_to_string(opts.root.join(".env"))
        .map(|t| parse_dotenv(&t))
        .unwrap_or_default();
    env.extend(opts.env_overrides.clone());

    let mut ctx = RepoContext {
        root: opts.root.to_string_lossy().to_string(),
        ..Default::default()
    };
    let candidates = collect_tree(opts, &mut ctx);

    let mut pipeline = Pipeline {
        opts,
        rules,
        env,
        warnings: Vec::new(),
        extends_cache: BTreeMap::new(),
    };

    // pass 1: parse and role-classify everything, building the repo context
    let mut analyzed: Vec<Analyzed> = Vec::new();
    for (path, strict) in candidates {
        if !strict && !loose_candidate_qualifies(&path) {
            continue;
        }
        let rel = rel_display(&opts.root, &path);
        let a = pipeline.analyze_file(&path, &rel);
        ctx.compose_files.push((
            a.record.path.clone(),
            FileRole::new(a.record.role, a.record.auto_generated),
        ));
        analyzed.push(a);
    }

    // pass 2: full analysis with the completed context
    for a in analyzed.iter_mut() {
        pipeline.complete_record(a, &ctx);
    }

    // merged pseudo-records: convention pairs, then explicit chains
    let mut merged_records: Vec<FileRecord> = Vec::new();
    for (b, o) in convention_pairs(&analyzed) {
        let (Some(base_doc), Some(over_doc)) =
            (&analyzed[b].document, &analyzed[o].document)
        else {
            continue;
        };
        let base_rel = analyzed[b].record.path.clone();
        let over_rel = analyzed[o].record.path.clone();
        merged_records.push(merged_record(
            &mut pipeline,
            &ctx,
            vec![(base_rel, base_doc.clone()), (over_rel, over_doc.clone())],
            &analyzed[b].abs_path,
        ));
    }
    for chain in &opts.merge_chains {
        let mut docs: Vec<(String, ComposeDocument)> = Vec::new();
        let mut first_abs: Option<PathBuf> = None;
        let mut ok = true;
        for member in chain {
            let abs = if member.is_absolute() {
                member.clone()
            } else {
                opts.root.join(member)
            };
            let rel = rel_display(&opts.root, &abs);
            let hit = analyzed
                .iter()
                .find(|a| a.record.path == rel)
                .and_then(|a| a.document.clone());
            let doc = match hit {
                Some(doc) => doc,
                None => {
                    // chain member outside the corpus filter: analyze on demand
                    let a = pipeline.analyze_file(&abs, &rel);
                    match a.document {
                        Some(doc) => doc,
                        None => {
                            pipeline.warnings.push(format!(
                                "merge chain member {rel} is not analyzable; chain skipped"
                            ));
                            ok = false;
                            break;
                        }
                    }
                }
            };
            first_abs.get_or_insert_with(|| abs.clone());
            docs.push((rel, doc));
        }
        if ok && docs.len() >= 2 {
            let abs = first_abs.unwrap();
            merged_records.push(merged_record(&mut pipeline, &ctx, docs, &abs));
        } else if ok {
            pipeline
                .warnings
                .push("merge chain needs at least two files; chain skipped".to_string());
        }
    }

    // corpus statistics over real, analyzable compose files only
    let stat_records: Vec<&Analyzed> = analyzed
        .iter()
        .filter(|a| a.record.counts_for_statistics())
        .collect();
    let per_file_types: Vec<Vec<ServiceType>> = stat_records
        .iter()
        .map(|a| a.record.services.iter().map(|s| s.service_type).collect())
        .collect();
    let histogram = {
        let groups: Vec<Vec<ClassifiedService>> = stat_records
            .iter()
            .map(|a| a.record.services.clone())
            .collect();
        type_histogram(&groups)
    };
    let transactions = transactions_from_types(&per_file_types, opts.include_unclassified);
    let itemsets = match mine_frequent_itemsets(&transactions, opts.min_support) {
        Ok(sets) => sets,
        Err(MiningError::EmptyCorpus) => Vec::new(),
        Err(e @ MiningError::InvalidSupport(_)) => {
            // guarded above; keep the report total anyway
            pipeline.warnings.push(format!("itemset mining: {e}"));
            Vec::new()
        }
    };
    let mut pattern_counts: BTreeMap<PatternId, usize> =
        PatternId::ALL.iter().map(|p| (*p, 0)).collect();
    for a in &stat_records {
        let present: BTreeSet<PatternId> = a.record.findings.iter().map(|f| f.pattern).collect();
        for p in present {
            *pattern_counts.get_mut(&p).unwrap() += 1;
        }
    }

    let mut files: Vec<FileRecord> = analyzed.into_iter().map(|a| a.record).collect();
    files.extend(merged_records);

    Ok(CorpusReport {
        root: opts.root.to_string_lossy().to_string(),
        files,
        histogram,
        itemsets,
        pattern_counts,
        warnings: pipeline.warnings,
    })
}

/// Folds a chain of resolved documents left to right and analyzes the
/// result as a pseudo-file.
fn merged_record(
    pipeline: &mut Pipeline,
    ctx: &RepoContext,
    docs: Vec<(String, ComposeDocument)>,
    first_abs: &Path,
) -> FileRecord {
    let merged_from: Vec<String> = docs.iter().map(|(rel, _)| rel.clone()).collect();
    let path = merged_from.join("+");
    let mut iter = docs.into_iter();
    let (_, mut merged) = iter.next().expect("chain has at least one member");
    for (_, next) in iter {
        let (out, _trace) = apply_override(&merged, &next);
        merged = out;
    }
    let mut a = Analyzed {
        record: empty_record(&path, FileRole::new(FileRoleKind::Compose, false), None),
        document: Some(merged),
        extends_records: vec![],
        abs_path: first_abs.to_path_buf(),
    };
    pipeline.complete_record(&mut a, ctx);
    a.record.merged_from = merged_from;
    a.record
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "json" => Some(ReportFormat::Json),
            "text" => Some(ReportFormat::Text),
            _ => None,
        }
    }
}

/// Renders the report. JSON is canonical: parsing and re-rendering yields
/// byte-identical output.
pub fn render_report(report: &CorpusReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
        ReportFormat::Text => render_text(report),
    }
}

fn render_text(report: &CorpusReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let real = report.files.iter().filter(|f| !f.is_merged()).count();
    let merged = report.files.len() - real;
    let _ = writeln!(out, "root: {}", report.root);
    let _ = writeln!(
        out,
        "files: {real} analyzed, {merged} merged view(s), {} warning(s)",
        report.warnings.len()
    );
    let _ = writeln!(out);

    for f in &report.files {
        let role = match f.role {
            FileRoleKind::Compose => "compose",
            FileRoleKind::OverrideCandidate => "override-candidate",
            FileRoleKind::ConfigurationNotCompose => "configuration-not-compose",
            FileRoleKind::TemplateForGenerating => "template-for-generating",
        };
        let mut tags: Vec<&str> = Vec::new();
        if f.auto_generated {
            tags.push("auto-generated");
        }
        if f.is_merged() {
            tags.push("merged");
        }
        let tag_str = if tags.is_empty() {
            String::new()
        } else {
            format!(" [{}]", tags.join(", "))
        };
        let _ = writeln!(out, "{} ({role}){tag_str}", f.path);
        if let Some(e) = &f.error {
            let _ = writeln!(out, "  error: {e}");
        }
        for s in &f.services {
            let image = s.image.as_deref().unwrap_or(if s.has_build {
                "(build)"
            } else {
                "(no image)"
            });
            let _ = writeln!(
                out,
                "  service {}: {} <- {image}",
                s.name,
                s.service_type.display_name()
            );
        }
        for finding in &f.findings {
            let tier = match finding.strictness {
                crate::patterns::Strictness::CoOccurrence => "co-occurrence",
                crate::patterns::Strictness::Structural => "structural",
            };
            let _ = writeln!(out, "  pattern {} ({tier})", finding.pattern.name());
        }
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "service types:");
    let _ = writeln!(out, "  {:<26} {:>5}", "type", "count");
    let mut hist: Vec<(&ServiceType, &usize)> = report.histogram.iter().collect();
    hist.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (ty, count) in hist {
        let _ = writeln!(out, "  {:<26} {:>5}", ty.display_name(), count);
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "frequent itemsets (min support reached):");
    let _ = writeln!(out, "  {:<10} itemset", "support");
    for set in &report.itemsets {
        let _ = writeln!(out, "  {:<10} {}", set.support, set.items.join(", "));
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "patterns (files with at least one finding):");
    let _ = writeln!(out, "  {:<34} {:>5}", "pattern", "files");
    for (p, count) in &report.pattern_counts {
        let _ = writeln!(out, "  {:<34} {:>5}", p.name(), count);
    }

    if !report.warnings.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "warnings:");
        for w in &report.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}
