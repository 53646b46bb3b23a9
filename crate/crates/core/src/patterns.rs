//! Pattern detectors over a per-file analysis bundle plus repository
//! context. Every detector yields at most one finding per file, at the
//! strongest tier its evidence supports: CoOccurrence findings rest on
//! service type presence, Structural findings cite a graph edge or a
//! syntax-level fact.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{canonicalize_image, ClassifiedService, ServiceType};
use crate::graph::{EdgeKind, OrchestrationGraph, EXTERNAL_PROXY};
use crate::model::{ComposeDocument, FileRole, FileRoleKind};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PatternId {
    AutoGeneration,
    YamlAnchorAlias,
    ServiceInheritance,
    OverrideUseCase,
    CertificateGenerationMapping,
    ContainerManagement,
    DatabaseInitWithDatabase,
    DatabaseAdminWithDatabase,
    LabelsConfigureReverseProxy,
    MailServiceTesting,
    AppWithDatabase,
    AppWithDatabaseAndCaching,
    HttpReverseProxy,
    DuplicateServiceReuse,
}

impl PatternId {
    pub const ALL: [PatternId; 14] = [
        PatternId::AutoGeneration,
        PatternId::YamlAnchorAlias,
        PatternId::ServiceInheritance,
        PatternId::OverrideUseCase,
        PatternId::CertificateGenerationMapping,
        PatternId::ContainerManagement,
        PatternId::DatabaseInitWithDatabase,
        PatternId::DatabaseAdminWithDatabase,
        PatternId::LabelsConfigureReverseProxy,
        PatternId::MailServiceTesting,
        PatternId::AppWithDatabase,
        PatternId::AppWithDatabaseAndCaching,
        PatternId::HttpReverseProxy,
        PatternId::DuplicateServiceReuse,
    ];

    /// Canonical id, the exact string used in JSON reports.
    pub fn name(self) -> &'static str {
        use PatternId::*;
        match self {
            AutoGeneration => "AUTO_GENERATION",
            YamlAnchorAlias => "YAML_ANCHOR_ALIAS",
            ServiceInheritance => "SERVICE_INHERITANCE",
            OverrideUseCase => "OVERRIDE_USE_CASE",
            CertificateGenerationMapping => "CERTIFICATE_GENERATION_MAPPING",
            ContainerManagement => "CONTAINER_MANAGEMENT",
            DatabaseInitWithDatabase => "DATABASE_INIT_WITH_DATABASE",
            DatabaseAdminWithDatabase => "DATABASE_ADMIN_WITH_DATABASE",
            LabelsConfigureReverseProxy => "LABELS_CONFIGURE_REVERSE_PROXY",
            MailServiceTesting => "MAIL_SERVICE_TESTING",
            AppWithDatabase => "APP_WITH_DATABASE",
            AppWithDatabaseAndCaching => "APP_WITH_DATABASE_AND_CACHING",
            HttpReverseProxy => "HTTP_REVERSE_PROXY",
            DuplicateServiceReuse => "DUPLICATE_SERVICE_REUSE",
        }
    }

    pub fn title(self) -> &'static str {
        use PatternId::*;
        match self {
            AutoGeneration => "Auto generation",
            YamlAnchorAlias => "YAML anchors and aliases",
            ServiceInheritance => "Service inheritance",
            OverrideUseCase => "Override file",
            CertificateGenerationMapping => "Certificate generation mapping",
            ContainerManagement => "Container management",
            DatabaseInitWithDatabase => "Database initialization with database",
            DatabaseAdminWithDatabase => "Database administration with database",
            LabelsConfigureReverseProxy => "Labels configure reverse proxy",
            MailServiceTesting => "Mail service testing",
            AppWithDatabase => "Application with database",
            AppWithDatabaseAndCaching => "Application with database and caching",
            HttpReverseProxy => "HTTP reverse proxy",
            DuplicateServiceReuse => "Duplicate service reuse",
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown pattern {given:?}; valid ids: {}", PatternId::ALL.map(|p| p.name()).join(", "))]
pub struct UnknownPattern {
    pub given: String,
}

fn normalize_id(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl std::str::FromStr for PatternId {
    type Err = UnknownPattern;

    /// Accepts the canonical SCREAMING_SNAKE id in any case, with `-`, `_`
    /// or nothing between words.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = normalize_id(s);
        PatternId::ALL
            .iter()
            .copied()
            .find(|p| normalize_id(p.name()) == wanted)
            .ok_or_else(|| UnknownPattern {
                given: s.to_string(),
            })
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Strictness {
    CoOccurrence,
    Structural,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatternFinding {
    pub pattern: PatternId,
    pub file: String,
    pub services_involved: Vec<String>,
    pub evidence: Vec<String>,
    pub strictness: Strictness,
}

/// What the CLI keeps: only co-occurrence-tier findings, only structural
/// ones, or everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrictnessFilter {
    CoOccurrence,
    Structural,
    Both,
}

impl StrictnessFilter {
    pub fn parse(s: &str) -> Option<StrictnessFilter> {
        match s {
            "co" | "co-occurrence" | "cooccurrence" => Some(StrictnessFilter::CoOccurrence),
            "structural" => Some(StrictnessFilter::Structural),
            "both" => Some(StrictnessFilter::Both),
            _ => None,
        }
    }

    pub fn keeps(self, s: Strictness) -> bool {
        match self {
            StrictnessFilter::Both => true,
            StrictnessFilter::CoOccurrence => s == Strictness::CoOccurrence,
            StrictnessFilter::Structural => s == Strictness::Structural,
        }
    }
}

pub fn filter_findings(
    findings: Vec<PatternFinding>,
    filter: StrictnessFilter,
) -> Vec<PatternFinding> {
    findings
        .into_iter()
        .filter(|f| filter.keeps(f.strictness))
        .collect()
}

/// Everything the detectors need to know about one analyzed file.
#[derive(Debug, Clone)]
pub struct FileAnalysis {
    pub path: String,
    pub role: FileRole,
    pub document: ComposeDocument,
    pub classified: Vec<ClassifiedService>,
    pub graph: OrchestrationGraph,
    /// (service, human description of the extends target), captured before
    /// inheritance resolution clears the records.
    pub extends_records: Vec<(String, String)>,
}

/// Repository-level facts gathered once per scan root.
#[derive(Debug, Clone, Default)]
pub struct RepoContext {
    pub root: String,
    pub compose_files: Vec<(String, FileRole)>,
    /// README lines mentioning compose usage.
    pub readme_hits: Vec<String>,
    /// Compose invocations found in Makefiles and shell scripts.
    pub script_hits: Vec<String>,
}

impl FileAnalysis {
    fn of_type(&self, ty: ServiceType) -> Vec<&ClassifiedService> {
        self.classified
            .iter()
            .filter(|c| c.service_type == ty)
            .collect()
    }

    fn app_services(&self) -> Vec<&ClassifiedService> {
        self.classified
            .iter()
            .filter(|c| {
                c.service_type == ServiceType::Frontend || c.service_type == ServiceType::Backend
            })
            .collect()
    }

    fn edges(&self, kind: EdgeKind) -> Vec<&crate::graph::Edge> {
        self.graph.edges_of_kind(kind).collect()
    }
}

fn names(services: &[&ClassifiedService]) -> Vec<String> {
    services.iter().map(|c| c.name.clone()).collect()
}

fn finding(
    analysis: &FileAnalysis,
    pattern: PatternId,
    services: Vec<String>,
    evidence: Vec<String>,
    strictness: Strictness,
) -> PatternFinding {
    let mut services_involved = services;
    services_involved.sort();
    services_involved.dedup();
    PatternFinding {
        pattern,
        file: analysis.path.clone(),
        services_involved,
        evidence,
        strictness,
    }
}

fn basename(path: &str) -> &str {
    path.rsplit(['/', '\\']).next().unwrap_or(path)
}

fn detect_auto_generation(analysis: &FileAnalysis, ctx: &RepoContext) -> Option<PatternFinding> {
    if analysis.role.auto_generated {
        return Some(finding(
            analysis,
            PatternId::AutoGeneration,
            vec![],
            vec!["leading comment marks the file as generated".to_string()],
            Strictness::Structural,
        ));
    }
    // A repo script that mentions this file and either says "generate" or
    // redirects output into it counts as generation evidence, but only at
    // the weaker tier: the file itself shows nothing.
    let base = basename(&analysis.path);
    let hit = ctx.script_hits.iter().find(|line| {
        let lower = line.to_ascii_lowercase();
        lower.contains(&base.to_ascii_lowercase())
            && (lower.contains("generat") || lower.contains('>'))
    })?;
    Some(finding(
        analysis,
        PatternId::AutoGeneration,
        vec![],
        vec![format!("repository script generates this file: {}", hit.trim())],
        Strictness::CoOccurrence,
    ))
}

fn detect_yaml_anchor_alias(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let meta = &analysis.document.syntax_meta;
    if meta.alias_count == 0 {
        return None;
    }
    let mut evidence = vec![format!(
        "{} alias reference(s) to {} anchor(s)",
        meta.alias_count, meta.anchor_count
    )];
    if meta.merge_key_count > 0 {
        evidence.push(format!("{} merge key(s)", meta.merge_key_count));
    }
    if !meta.anchor_names.is_empty() {
        let list: Vec<&str> = meta.anchor_names.iter().map(|s| s.as_str()).collect();
        evidence.push(format!("anchors: {}", list.join(", ")));
    }
    Some(finding(
        analysis,
        PatternId::YamlAnchorAlias,
        vec![],
        evidence,
        Strictness::Structural,
    ))
}

fn detect_service_inheritance(analysis: &FileAnalysis) -> Option<PatternFinding> {
    if analysis.extends_records.is_empty() {
        return None;
    }
    let services: Vec<String> = analysis
        .extends_records
        .iter()
        .map(|(s, _)| s.clone())
        .collect();
    let evidence: Vec<String> = analysis
        .extends_records
        .iter()
        .map(|(s, desc)| format!("service {s} extends {desc}"))
        .collect();
    Some(finding(
        analysis,
        PatternId::ServiceInheritance,
        services,
        evidence,
        Strictness::Structural,
    ))
}

fn detect_override_use_case(analysis: &FileAnalysis, ctx: &RepoContext) -> Option<PatternFinding> {
    // Fires on the override half only; the base file of a pair carries no
    // finding of its own.
    if analysis.role.kind != FileRoleKind::OverrideCandidate {
        return None;
    }
    let mut evidence = vec!["file is an override layer, not self-sufficient".to_string()];
    let dir = analysis
        .path
        .rsplit_once(['/', '\\'])
        .map(|(d, _)| d)
        .unwrap_or("");
    let sibling = ctx.compose_files.iter().find(|(p, role)| {
        p != &analysis.path
            && role.kind == FileRoleKind::Compose
            && p.rsplit_once(['/', '\\']).map(|(d, _)| d).unwrap_or("") == dir
    });
    if let Some((base, _)) = sibling {
        evidence.push(format!("base file present: {}", basename(base)));
    }
    Some(finding(
        analysis,
        PatternId::OverrideUseCase,
        vec![],
        evidence,
        Strictness::Structural,
    ))
}

fn detect_certificate_generation_mapping(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let certs = analysis.of_type(ServiceType::Certificate);
    if certs.is_empty() {
        return None;
    }
    let cert_names: BTreeSet<&str> = certs.iter().map(|c| c.name.as_str()).collect();
    let proxies = analysis.of_type(ServiceType::ReverseProxy);
    let apps = analysis.app_services();
    let peer_names: BTreeSet<&str> = proxies
        .iter()
        .chain(apps.iter())
        .map(|c| c.name.as_str())
        .collect();

    let mut structural = Vec::new();
    for edge in analysis.edges(EdgeKind::SharedVolume) {
        let pair = (edge.from.as_str(), edge.to.as_str());
        let cert_side = if cert_names.contains(pair.0) {
            Some((pair.0, pair.1))
        } else if cert_names.contains(pair.1) {
            Some((pair.1, pair.0))
        } else {
            None
        };
        if let Some((cert, other)) = cert_side {
            if peer_names.contains(other) {
                structural.push((
                    cert.to_string(),
                    other.to_string(),
                    edge.attribute.clone().unwrap_or_default(),
                ));
            }
        }
    }
    if !structural.is_empty() {
        let mut involved: Vec<String> = Vec::new();
        let mut evidence = Vec::new();
        for (cert, other, vol) in &structural {
            involved.push(cert.clone());
            involved.push(other.clone());
            evidence.push(format!("{cert} shares volume {vol} with {other}"));
        }
        return Some(finding(
            analysis,
            PatternId::CertificateGenerationMapping,
            involved,
            evidence,
            Strictness::Structural,
        ));
    }
    if proxies.is_empty() {
        return None;
    }
    let mut involved = names(&certs);
    involved.extend(names(&proxies));
    let evidence = vec![format!(
        "certificate service {} and reverse proxy {} in one file",
        names(&certs).join(", "),
        names(&proxies).join(", ")
    )];
    Some(finding(
        analysis,
        PatternId::CertificateGenerationMapping,
        involved,
        evidence,
        Strictness::CoOccurrence,
    ))
}

fn detect_container_management(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let managers = analysis.of_type(ServiceType::ContainerManagement);
    if managers.is_empty() {
        return None;
    }
    let evidence = managers
        .iter()
        .map(|c| match &c.image {
            Some(img) => format!("container management service {} (image {img})", c.name),
            None => format!("container management service {}", c.name),
        })
        .collect();
    Some(finding(
        analysis,
        PatternId::ContainerManagement,
        names(&managers),
        evidence,
        Strictness::CoOccurrence,
    ))
}

/// Shared shape of the two env-wired co-occurrence detectors: `left` type
/// present, Database present, Structural when an EnvReference edge runs
/// left -> database.
fn detect_with_database(
    analysis: &FileAnalysis,
    pattern: PatternId,
    left: ServiceType,
    left_label: &str,
) -> Option<PatternFinding> {
    let lefts = analysis.of_type(left);
    let dbs = analysis.of_type(ServiceType::Database);
    if lefts.is_empty() || dbs.is_empty() {
        return None;
    }
    let left_names: BTreeSet<&str> = lefts.iter().map(|c| c.name.as_str()).collect();
    let db_names: BTreeSet<&str> = dbs.iter().map(|c| c.name.as_str()).collect();
    let mut evidence = vec![format!(
        "{left_label} service {} and database service {} in one file",
        names(&lefts).join(", "),
        names(&dbs).join(", ")
    )];
    let mut strictness = Strictness::CoOccurrence;
    for edge in analysis.edges(EdgeKind::EnvReference) {
        if left_names.contains(edge.from.as_str()) && db_names.contains(edge.to.as_str()) {
            strictness = Strictness::Structural;
            evidence.push(format!(
                "{} references {} through environment key {}",
                edge.from,
                edge.to,
                edge.attribute.as_deref().unwrap_or("?")
            ));
        }
    }
    let mut involved = names(&lefts);
    involved.extend(names(&dbs));
    Some(finding(analysis, pattern, involved, evidence, strictness))
}

fn detect_labels_configure_reverse_proxy(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let edges = analysis.edges(EdgeKind::LabelProxyConfig);
    if edges.is_empty() {
        return None;
    }
    let mut involved = Vec::new();
    let mut evidence = Vec::new();
    for edge in &edges {
        let flavor = edge.attribute.as_deref().unwrap_or("proxy");
        if edge.from == EXTERNAL_PROXY {
            evidence.push(format!(
                "labels on {} configure a {flavor} proxy outside this file",
                edge.to
            ));
        } else {
            evidence.push(format!(
                "labels on {} configure reverse proxy {} ({flavor})",
                edge.to, edge.from
            ));
            involved.push(edge.from.clone());
        }
        involved.push(edge.to.clone());
    }
    Some(finding(
        analysis,
        PatternId::LabelsConfigureReverseProxy,
        involved,
        evidence,
        Strictness::Structural,
    ))
}

const TEST_MAIL_IMAGES: [&str; 3] = ["mailhog", "smtp4dev", "mailcatcher"];

fn detect_mail_service_testing(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let mails = analysis.of_type(ServiceType::Mail);
    if mails.is_empty() {
        return None;
    }
    let evidence = mails
        .iter()
        .map(|c| {
            let img = c.image.as_deref().unwrap_or("");
            let canonical = canonicalize_image(img).name;
            if TEST_MAIL_IMAGES.contains(&canonical.as_str()) {
                format!("test-oriented mail service {} (image {img})", c.name)
            } else if img.is_empty() {
                format!("mail service {}", c.name)
            } else {
                format!("mail service {} (image {img})", c.name)
            }
        })
        .collect();
    Some(finding(
        analysis,
        PatternId::MailServiceTesting,
        names(&mails),
        evidence,
        Strictness::CoOccurrence,
    ))
}

/// Structural evidence shared by the two application stack detectors:
/// depends_on wiring plus persistence and exposure facts about the backing
/// services.
fn app_stack_evidence(
    analysis: &FileAnalysis,
    app_names: &BTreeSet<&str>,
    backing: &[&ClassifiedService],
    label: &str,
    evidence: &mut Vec<String>,
) -> bool {
    let backing_names: BTreeSet<&str> = backing.iter().map(|c| c.name.as_str()).collect();
    let mut wired = false;
    for edge in analysis.edges(EdgeKind::DependsOn) {
        if app_names.contains(edge.from.as_str()) && backing_names.contains(edge.to.as_str()) {
            wired = true;
            evidence.push(format!("{} depends_on {}", edge.from, edge.to));
        }
    }
    for svc in backing {
        if let Some(spec) = analysis.document.services.get(&svc.name) {
            for mount in &spec.volumes {
                evidence.push(format!("{label} {} mounts {}", svc.name, mount.target));
            }
            for port in &spec.ports {
                if let Some(host) = port.host_port {
                    evidence.push(format!("{label} {} publishes host port {host}", svc.name));
                }
            }
        }
    }
    wired
}

fn detect_app_with_database(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let apps = analysis.app_services();
    let dbs = analysis.of_type(ServiceType::Database);
    let caches = analysis.of_type(ServiceType::Caching);
    // exclusion clause: with caching present the richer pattern applies
    if apps.is_empty() || dbs.is_empty() || !caches.is_empty() {
        return None;
    }
    let app_names: BTreeSet<&str> = apps.iter().map(|c| c.name.as_str()).collect();
    let mut evidence = vec![format!(
        "application service {} and database service {}, no caching service",
        names(&apps).join(", "),
        names(&dbs).join(", ")
    )];
    let wired = app_stack_evidence(analysis, &app_names, &dbs, "database", &mut evidence);
    let strictness = if wired {
        Strictness::Structural
    } else {
        Strictness::CoOccurrence
    };
    let mut involved = names(&apps);
    involved.extend(names(&dbs));
    Some(finding(
        analysis,
        PatternId::AppWithDatabase,
        involved,
        evidence,
        strictness,
    ))
}

fn detect_app_with_database_and_caching(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let apps = analysis.app_services();
    let dbs = analysis.of_type(ServiceType::Database);
    let caches = analysis.of_type(ServiceType::Caching);
    if apps.is_empty() || dbs.is_empty() || caches.is_empty() {
        return None;
    }
    let app_names: BTreeSet<&str> = apps.iter().map(|c| c.name.as_str()).collect();
    let mut evidence = vec![format!(
        "application service {}, database service {}, caching service {}",
        names(&apps).join(", "),
        names(&dbs).join(", "),
        names(&caches).join(", ")
    )];
    let db_wired = app_stack_evidence(analysis, &app_names, &dbs, "database", &mut evidence);
    let cache_wired = app_stack_evidence(analysis, &app_names, &caches, "cache", &mut evidence);
    let strictness = if db_wired && cache_wired {
        Strictness::Structural
    } else {
        Strictness::CoOccurrence
    };
    let mut involved = names(&apps);
    involved.extend(names(&dbs));
    involved.extend(names(&caches));
    Some(finding(
        analysis,
        PatternId::AppWithDatabaseAndCaching,
        involved,
        evidence,
        strictness,
    ))
}

fn detect_http_reverse_proxy(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let proxies = analysis.of_type(ServiceType::ReverseProxy);
    if proxies.is_empty() {
        return None;
    }
    let mut evidence: Vec<String> = proxies
        .iter()
        .map(|c| match &c.image {
            Some(img) => format!("reverse proxy service {} (image {img})", c.name),
            None => format!("reverse proxy service {}", c.name),
        })
        .collect();
    let mut strictness = Strictness::CoOccurrence;
    for proxy in &proxies {
        if let Some(spec) = analysis.document.services.get(&proxy.name) {
            for port in &spec.ports {
                if matches!(port.host_port, Some(80) | Some(443)) {
                    strictness = Strictness::Structural;
                    evidence.push(format!(
                        "{} binds host port {}",
                        proxy.name,
                        port.host_port.unwrap()
                    ));
                }
            }
        }
    }
    Some(finding(
        analysis,
        PatternId::HttpReverseProxy,
        names(&proxies),
        evidence,
        strictness,
    ))
}

fn detect_duplicate_service_reuse(analysis: &FileAnalysis) -> Option<PatternFinding> {
    let edges = analysis.edges(EdgeKind::DuplicateImage);
    if edges.is_empty() {
        return None;
    }
    let mut involved = Vec::new();
    let mut evidence = Vec::new();
    for edge in &edges {
        involved.push(edge.from.clone());
        involved.push(edge.to.clone());
        let relation = edge.attribute.as_deref().unwrap_or("same-command");
        let spec = analysis.document.services.get(&edge.from);
        let what = match spec {
            Some(s) => match (&s.image, &s.build) {
                (Some(img), _) => format!("image {img}"),
                (None, Some(build)) => format!("build context {}", build.context),
                (None, None) => "definition".to_string(),
            },
            None => "definition".to_string(),
        };
        evidence.push(format!(
            "{} and {} run the same {what} ({relation})",
            edge.from, edge.to
        ));
    }
    let meta = &analysis.document.syntax_meta;
    if meta.alias_count > 0 {
        evidence.push(format!(
            "definition reuse through {} YAML alias reference(s)",
            meta.alias_count
        ));
    }
    if !analysis.extends_records.is_empty() {
        evidence.push("definition reuse through extends".to_string());
    }
    Some(finding(
        analysis,
        PatternId::DuplicateServiceReuse,
        involved,
        evidence,
        Strictness::Structural,
    ))
}

/// Runs all detectors. Findings come back sorted by (pattern, file, first
/// service); at most one finding per pattern.
pub fn detect_all(analysis: &FileAnalysis, ctx: &RepoContext) -> Vec<PatternFinding> {
    let mut findings: Vec<PatternFinding> = [
        detect_auto_generation(analysis, ctx),
        detect_yaml_anchor_alias(analysis),
        detect_service_inheritance(analysis),
        detect_override_use_case(analysis, ctx),
        detect_certificate_generation_mapping(analysis),
        detect_container_management(analysis),
        detect_with_database(
            analysis,
            PatternId::DatabaseInitWithDatabase,
            ServiceType::DatabaseInit,
            "database init",
        ),
        detect_with_database(
            analysis,
            PatternId::DatabaseAdminWithDatabase,
            ServiceType::DatabaseAdministration,
            "database administration",
        ),
        detect_labels_configure_reverse_proxy(analysis),
        detect_mail_service_testing(analysis),
        detect_app_with_database(analysis),
        detect_app_with_database_and_caching(analysis),
        detect_http_reverse_proxy(analysis),
        detect_duplicate_service_reuse(analysis),
    ]
    .into_iter()
    .flatten()
    .collect();
    findings.sort_by(|a, b| {
        (a.pattern, &a.file, a.services_involved.first())
            .cmp(&(b.pattern, &b.file, b.services_involved.first()))
    });
    findings
}

/// Catalog text shown by the explain command.
pub fn explain(pattern: PatternId) -> &'static str {
    use PatternId::*;
    match pattern {
        AutoGeneration => {
            "Some orchestrations are not written by hand: a template \
             engine, a wizard, or a platform exports the compose file. The \
             telltale is a leading comment such as \"generated, do not \
             edit\" or a repository script that writes the file. Detection: \
             the auto-generated file marker, or a script line that \
             generates the file. Edits belong in the generator's input, \
             not in the generated file."
        }
        YamlAnchorAlias => {
            "YAML anchors (&name) with aliases (*name) and merge keys (<<) \
             let one block of configuration serve many services, keeping \
             repeated logging, restart, or environment stanzas in one \
             place. Detection: at least one alias reference in the file. \
             The resolved configuration is identical to writing the block \
             out by hand, so tooling must treat both spellings the same."
        }
        ServiceInheritance => {
            "A service can inherit another service's definition with \
             extends, within the same file or from a shared base file, and \
             then override single keys. Teams use it to keep one canonical \
             definition for variants such as dev and prod. Detection: any \
             service carrying an extends reference before resolution. \
             Deep chains and cycles are the main hazards."
        }
        OverrideUseCase => {
            "A base compose file describes the common stack and a second \
             file (conventionally docker-compose.override.yml) layers \
             environment-specific changes on top; the runtime merges them. \
             Detection: a file named as an override, or one that is not \
             self-sufficient and leans on a sibling base file. The \
             override alone is not a runnable orchestration."
        }
        CertificateGenerationMapping => {
            "A certificate helper (certbot or similar) runs next to a \
             reverse proxy and the two exchange certificates through a \
             shared volume: the helper writes, the proxy serves. \
             Detection: a certificate-type service, structurally confirmed \
             when it shares a volume with a reverse proxy or application \
             service. Renewal then needs no manual copying."
        }
        ContainerManagement => {
            "A housekeeping service manages the other containers \
             themselves, for example watchtower polling the registry and \
             restarting services on new image versions, or portainer \
             offering a management UI. Detection: a container-management \
             type service in the file. Convenient, but it grants that \
             service broad control over the host's containers."
        }
        DatabaseInitWithDatabase => {
            "A short-lived initialization service prepares the database \
             before the application starts: creating schemas, running \
             migrations, seeding data. Detection: a database-init type \
             service together with a database service, structurally \
             confirmed when environment variables of the init service \
             point at the database. The init service exits after doing \
             its work."
        }
        DatabaseAdminWithDatabase => {
            "An administration UI such as adminer or phpmyadmin ships \
             alongside the database it manages, so developers can inspect \
             data without installing client tools. Detection: a \
             database-administration type service together with a \
             database service, structurally confirmed when the admin \
             tool's environment points at the database. Usually a \
             development convenience, rarely meant for production."
        }
        LabelsConfigureReverseProxy => {
            "Instead of a central proxy configuration file, each service \
             carries labels (traefik.*, caddy, VIRTUAL_HOST) that the \
             reverse proxy reads to build its routing table. Detection: a \
             label-proxy-configuration edge, whether the proxy lives in \
             the same file or outside it. Routing stays next to the \
             service it routes to."
        }
        MailServiceTesting => {
            "Applications that send mail orchestrate either a real mail \
             server or, during development, a catcher such as mailhog or \
             smtp4dev that accepts every message and shows it in a web UI \
             instead of delivering it. Detection: a mail-type service; \
             known catcher images are flagged as test-oriented. This keeps \
             test emails from reaching real inboxes."
        }
        AppWithDatabase => {
            "The classic two-tier stack: an application service plus the \
             database it persists to, and nothing in between. Detection: \
             an application-type and a database-type service in one file \
             with no caching service, structurally confirmed by \
             depends_on wiring plus the database's volume and port \
             configuration. The application waits for the database to be \
             up."
        }
        AppWithDatabaseAndCaching => {
            "A three-tier stack: application, database, and a cache such \
             as redis or memcached between them to relieve the database. \
             Detection: application, database, and caching services in \
             one file, structurally confirmed when depends_on wires the \
             application to both. The cache is an optimization; the \
             database stays the source of truth."
        }
        HttpReverseProxy => {
            "A reverse proxy (nginx, traefik, haproxy, caddy) is the only \
             service facing the network; it terminates TLS and forwards \
             requests to internal services. Detection: a reverse-proxy \
             type service, structurally confirmed when it binds host port \
             80 or 443. Internal services then need no published ports of \
             their own."
        }
        DuplicateServiceReuse => {
            "Several services run the same image in different roles: a \
             web process and a worker process from one application image, \
             or one service per shard. Detection: duplicate-image edges \
             between services, with the command and environment \
             differences spelled out, plus any anchor or extends reuse \
             that produced the duplication. One image, many duties."
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify_service, default_rules};
    use crate::graph::build_graph;
    use crate::model::{
        DependsOn as Dep, PortBinding, ServiceSpec, VolumeMount, VolumeSource,
    };

    fn analyze(doc: ComposeDocument) -> FileAnalysis {
        let classified: Vec<_> = doc
            .services
            .values()
            .map(|s| classify_service(s, default_rules(), None))
            .collect();
        let types = classified
            .iter()
            .map(|c| (c.name.clone(), c.service_type))
            .collect();
        let graph = build_graph(&doc, &types);
        FileAnalysis {
            path: "docker-compose.yml".to_string(),
            role: FileRole::new(FileRoleKind::Compose, false),
            document: doc,
            classified,
            graph,
            extends_records: vec![],
        }
    }

    fn doc(services: Vec<ServiceSpec>) -> ComposeDocument {
        let mut d = ComposeDocument::default();
        for s in services {
            d.services.insert(s.name.clone(), s);
        }
        d
    }

    fn img(name: &str, image: &str) -> ServiceSpec {
        let mut s = ServiceSpec::new(name);
        s.image = Some(image.to_string());
        s
    }

    fn ids(findings: &[PatternFinding]) -> Vec<PatternId> {
        findings.iter().map(|f| f.pattern).collect()
    }

    #[test]
    fn pattern_ids_serialize_screaming_snake() {
        assert_eq!(
            serde_json::to_string(&PatternId::YamlAnchorAlias).unwrap(),
            "\"YAML_ANCHOR_ALIAS\""
        );
        assert_eq!(
            serde_json::to_string(&PatternId::AppWithDatabaseAndCaching).unwrap(),
            "\"APP_WITH_DATABASE_AND_CACHING\""
        );
        for p in PatternId::ALL {
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("{:?}", p.name()));
            let back: PatternId = serde_json::from_str(&json).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn pattern_id_parses_loosely() {
        assert_eq!(
            "HTTP_REVERSE_PROXY".parse::<PatternId>().unwrap(),
            PatternId::HttpReverseProxy
        );
        assert_eq!(
            "http-reverse-proxy".parse::<PatternId>().unwrap(),
            PatternId::HttpReverseProxy
        );
        assert_eq!(
            "HttpReverseProxy".parse::<PatternId>().unwrap(),
            PatternId::HttpReverseProxy
        );
        let err = "NOT_A_PATTERN".parse::<PatternId>().unwrap_err();
        assert!(err.to_string().contains("APP_WITH_DATABASE"));
    }

    #[test]
    fn app_db_cache_exclusion() {
        let mut app = img("app", "ghcr.io/acme/shop:1");
        app.build = None;
        app.image = None; // application by name, no image
        let two = doc(vec![app.clone(), img("db", "postgres:13")]);
        let f = detect_all(&analyze(two), &RepoContext::default());
        assert!(ids(&f).contains(&PatternId::AppWithDatabase));
        assert!(!ids(&f).contains(&PatternId::AppWithDatabaseAndCaching));

        let three = doc(vec![
            app,
            img("db", "postgres:13"),
            img("cache", "redis:7"),
        ]);
        let f = detect_all(&analyze(three), &RepoContext::default());
        assert!(!ids(&f).contains(&PatternId::AppWithDatabase));
        assert!(ids(&f).contains(&PatternId::AppWithDatabaseAndCaching));
    }

    #[test]
    fn app_db_structural_upgrade() {
        let mut app = ServiceSpec::new("app");
        app.depends_on.push(Dep {
            service: "db".into(),
            condition: None,
        });
        let mut db = img("db", "postgres:13");
        db.volumes.push(VolumeMount {
            source: Some(VolumeSource::Named("pgdata".into())),
            target: "/var/lib/postgresql/data".into(),
            mode: None,
        });
        db.ports.push(PortBinding {
            host_ip: None,
            host_port: Some(5432),
            container_port: 5432,
            protocol: None,
        });
        let f = detect_all(&analyze(doc(vec![app, db])), &RepoContext::default());
        let found = f
            .iter()
            .find(|x| x.pattern == PatternId::AppWithDatabase)
            .unwrap();
        assert_eq!(found.strictness, Strictness::Structural);
        assert!(found.evidence.iter().any(|e| e == "app depends_on db"));
        assert!(found
            .evidence
            .iter()
            .any(|e| e.contains("publishes host port 5432")));
    }

    #[test]
    fn admin_with_database_upgrades_on_env_reference() {
        let mut admin = img("adminer", "adminer");
        let db = img("db", "mysql:8");
        let co = detect_all(
            &analyze(doc(vec![admin.clone(), db.clone()])),
            &RepoContext::default(),
        );
        let f = co
            .iter()
            .find(|x| x.pattern == PatternId::DatabaseAdminWithDatabase)
            .unwrap();
        assert_eq!(f.strictness, Strictness::CoOccurrence);

        admin
            .environment
            .insert("ADMINER_DEFAULT_SERVER".into(), "db".into());
        let up = detect_all(&analyze(doc(vec![admin, db])), &RepoContext::default());
        let f = up
            .iter()
            .find(|x| x.pattern == PatternId::DatabaseAdminWithDatabase)
            .unwrap();
        assert_eq!(f.strictness, Strictness::Structural);
    }

    #[test]
    fn http_reverse_proxy_tiering() {
        let mut proxy = img("proxy", "nginx:1.25");
        let co = detect_all(&analyze(doc(vec![proxy.clone()])), &RepoContext::default());
        assert_eq!(co[0].pattern, PatternId::HttpReverseProxy);
        assert_eq!(co[0].strictness, Strictness::CoOccurrence);

        proxy.ports.push(PortBinding {
            host_ip: None,
            host_port: Some(443),
            container_port: 443,
            protocol: None,
        });
        let st = detect_all(&analyze(doc(vec![proxy])), &RepoContext::default());
        assert_eq!(st[0].strictness, Strictness::Structural);
        assert!(st[0].evidence.iter().any(|e| e.contains("443")));
    }

    #[test]
    fn duplicate_reuse_from_graph_edges() {
        let mut a = img("worker", "acme/app:1");
        a.command = Some("run worker".into());
        let mut b = img("web-app", "acme/app:1");
        b.command = Some("run web".into());
        let f = detect_all(&analyze(doc(vec![a, b])), &RepoContext::default());
        let found = f
            .iter()
            .find(|x| x.pattern == PatternId::DuplicateServiceReuse)
            .unwrap();
        assert_eq!(found.strictness, Strictness::Structural);
        assert!(found.evidence[0].contains("different-commands"));
        assert_eq!(found.services_involved, vec!["web-app", "worker"]);
    }

    #[test]
    fn mail_testing_flags_catcher_images() {
        let f = detect_all(
            &analyze(doc(vec![img("mail", "mailhog/mailhog")])),
            &RepoContext::default(),
        );
        let found = f
            .iter()
            .find(|x| x.pattern == PatternId::MailServiceTesting)
            .unwrap();
        assert!(found.evidence[0].starts_with("test-oriented"));
        let f = detect_all(
            &analyze(doc(vec![img("mail", "postfix")])),
            &RepoContext::default(),
        );
        let found = f
            .iter()
            .find(|x| x.pattern == PatternId::MailServiceTesting)
            .unwrap();
        assert!(!found.evidence[0].starts_with("test-oriented"));
    }

    #[test]
    fn auto_generation_from_marker_and_script() {
        let mut a = analyze(doc(vec![img("db", "postgres")]));
        a.role = FileRole::new(FileRoleKind::Compose, true);
        let f = detect_all(&a, &RepoContext::default());
        let found = f
            .iter()
            .find(|x| x.pattern == PatternId::AutoGeneration)
            .unwrap();
        assert_eq!(found.strictness, Strictness::Structural);

        let b = analyze(doc(vec![img("db", "postgres")]));
        let ctx = RepoContext {
            script_hits: vec!["python gen.py > docker-compose.yml".to_string()],
            ..Default::default()
        };
        let f = detect_all(&b, &ctx);
        let found = f
            .iter()
            .find(|x| x.pattern == PatternId::AutoGeneration)
            .unwrap();
        assert_eq!(found.strictness, Strictness::CoOccurrence);
    }

    #[test]
    fn override_fires_on_override_half_only() {
        let mut over = analyze(doc(vec![img("web", "nginx")]));
        over.path = "proj/docker-compose.override.yml".into();
        over.role = FileRole::new(FileRoleKind::OverrideCandidate, false);
        let ctx = RepoContext {
            compose_files: vec![
                (
                    "proj/docker-compose.yml".to_string(),
                    FileRole::new(FileRoleKind::Compose, false),
                ),
                (
                    "proj/docker-compose.override.yml".to_string(),
                    FileRole::new(FileRoleKind::OverrideCandidate, false),
                ),
            ],
            ..Default::default()
        };
        let f = detect_all(&over, &ctx);
        let found = f
            .iter()
            .find(|x| x.pattern == PatternId::OverrideUseCase)
            .unwrap();
        assert!(found.evidence.iter().any(|e| e.contains("docker-compose.yml")));

        let mut base = analyze(doc(vec![img("web", "nginx")]));
        base.path = "proj/docker-compose.yml".into();
        let f = detect_all(&base, &ctx);
        assert!(!ids(&f).contains(&PatternId::OverrideUseCase));
    }

    #[test]
    fn certificate_mapping_tiers() {
        let cert = img("certbot", "certbot/certbot");
        let proxy = img("proxy", "nginx");
        let co = detect_all(
            &analyze(doc(vec![cert.clone(), proxy.clone()])),
            &RepoContext::default(),
        );
        let found = co
            .iter()
            .find(|x| x.pattern == PatternId::CertificateGenerationMapping)
            .unwrap();
        assert_eq!(found.strictness, Strictness::CoOccurrence);

        let mut cert = cert;
        let mut proxy = proxy;
        for (svc, tgt) in [(&mut cert, "/etc/letsencrypt"), (&mut proxy, "/certs")] {
            svc.volumes.push(VolumeMount {
                source: Some(VolumeSource::Named("certs".into())),
                target: tgt.into(),
                mode: None,
            });
        }
        let st = detect_all(&analyze(doc(vec![cert, proxy])), &RepoContext::default());
        let found = st
            .iter()
            .find(|x| x.pattern == PatternId::CertificateGenerationMapping)
            .unwrap();
        assert_eq!(found.strictness, Strictness::Structural);
        assert!(found.evidence[0].contains("shares volume certs"));
    }

    #[test]
    fn monotonic_under_added_service() {
        // adding an unrelated service must not remove the finding
        let base = doc(vec![img("manager", "containrrr/watchtower")]);
        let f1 = detect_all(&analyze(base.clone()), &RepoContext::default());
        let mut extended = base;
        extended
            .services
            .insert("extra".into(), img("extra", "solr"));
        let f2 = detect_all(&analyze(extended), &RepoContext::default());
        for id in ids(&f1) {
            assert!(ids(&f2).contains(&id), "{id:?} lost after adding a service");
        }
    }

    #[test]
    fn findings_sorted_and_deterministic() {
        let mut app = ServiceSpec::new("app");
        app.image = None;
        let d = doc(vec![
            app,
            img("db", "postgres"),
            img("mail", "mailhog/mailhog"),
            img("manager", "containrrr/watchtower"),
        ]);
        let a = detect_all(&analyze(d.clone()), &RepoContext::default());
        let b = detect_all(&analyze(d), &RepoContext::default());
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_by(|x, y| {
            (x.pattern, &x.file, x.services_involved.first())
                .cmp(&(y.pattern, &y.file, y.services_involved.first()))
        });
        assert_eq!(a, sorted);
        assert!(ids(&a).contains(&PatternId::ContainerManagement));
        assert!(ids(&a).contains(&PatternId::MailServiceTesting));
        assert!(ids(&a).contains(&PatternId::AppWithDatabase));
    }

    #[test]
    fn strictness_filter_keeps_requested_tier() {
        let co = PatternFinding {
            pattern: PatternId::ContainerManagement,
            file: "a".into(),
            services_involved: vec![],
            evidence: vec!["e".into()],
            strictness: Strictness::CoOccurrence,
        };
        let st = PatternFinding {
            pattern: PatternId::YamlAnchorAlias,
            file: "a".into(),
            services_involved: vec![],
            evidence: vec!["e".into()],
            strictness: Strictness::Structural,
        };
        let all = vec![co.clone(), st.clone()];
        assert_eq!(filter_findings(all.clone(), StrictnessFilter::Both).len(), 2);
        assert_eq!(
            filter_findings(all.clone(), StrictnessFilter::CoOccurrence),
            vec![co]
        );
        assert_eq!(
            filter_findings(all, StrictnessFilter::Structural),
            vec![st]
        );
    }

    #[test]
    fn explain_covers_every_pattern() {
        let mut seen = BTreeSet::new();
        for p in PatternId::ALL {
            let text = explain(p);
            assert!(text.len() > 80, "{p:?} text too short");
            assert!(seen.insert(text), "{p:?} reuses another pattern's text");
        }
    }

    #[test]
    fn evidence_never_empty() {
        let d = doc(vec![
            img("db", "postgres"),
            img("adminer", "adminer"),
            img("proxy", "traefik"),
            img("cert", "certbot/certbot"),
            img("mail", "mailhog/mailhog"),
            img("manager", "containrrr/watchtower"),
        ]);
        for f in detect_all(&analyze(d), &RepoContext::default()) {
            assert!(!f.evidence.is_empty(), "{:?} has empty evidence", f.pattern);
        }
    }
}
