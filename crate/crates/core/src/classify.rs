//! Service classification: image reference -> service type.
//!
//! Precedence: image rules, then the Dockerfile base image through the same
//! rules, then service-name heuristics, then Unclassified. Specific-type
//! name heuristics (db, redis, proxy, ...) may refine a service whose image
//! matched no rule; the generic application-name heuristic (web, app, api,
//! ...) only applies to services without an image, so a bare OS image never
//! turns into Frontend just because the service is called "web".

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ServiceSpec;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ServiceType {
    Database,
    Frontend,
    Backend,
    Caching,
    Testing,
    ReverseProxy,
    Mail,
    Search,
    DatabaseAdministration,
    ObjectStorage,
    Identity,
    Visualization,
    JobScheduling,
    ContainerManagement,
    EventMonitoring,
    Certificate,
    DatabaseInit,
    Zipping,
    MessageBroker,
    Dns,
    Tracing,
    ImageRecognition,
    Cron,
    Chat,
    Office,
    Setup,
    Workflow,
    LinuxUtilities,
    Secrets,
    HttpAccelerator,
    HelloWorld,
    Discovery,
    DataStreaming,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Core,
    Networking,
    Reliability,
    Setup,
    Data,
    Scheduling,
    Miscellaneous,
}

impl ServiceType {
    pub const ALL: [ServiceType; 34] = [
        ServiceType::Database,
        ServiceType::Frontend,
        ServiceType::Backend,
        ServiceType::Caching,
        ServiceType::Testing,
        ServiceType::ReverseProxy,
        ServiceType::Mail,
        ServiceType::Search,
        ServiceType::DatabaseAdministration,
        ServiceType::ObjectStorage,
        ServiceType::Identity,
        ServiceType::Visualization,
        ServiceType::JobScheduling,
        ServiceType::ContainerManagement,
        ServiceType::EventMonitoring,
        ServiceType::Certificate,
        ServiceType::DatabaseInit,
        ServiceType::Zipping,
        ServiceType::MessageBroker,
        ServiceType::Dns,
        ServiceType::Tracing,
        ServiceType::ImageRecognition,
        ServiceType::Cron,
        ServiceType::Chat,
        ServiceType::Office,
        ServiceType::Setup,
        ServiceType::Workflow,
        ServiceType::LinuxUtilities,
        ServiceType::Secrets,
        ServiceType::HttpAccelerator,
        ServiceType::HelloWorld,
        ServiceType::Discovery,
        ServiceType::DataStreaming,
        ServiceType::Unclassified,
    ];

    pub fn category(self) -> Category {
        use ServiceType::*;
        match self {
            Frontend | Backend => Category::Core,
            ReverseProxy | Discovery | Dns | HttpAccelerator => Category::Networking,
            Testing | ContainerManagement | Tracing | EventMonitoring => Category::Reliability,
            DatabaseInit | Setup => Category::Setup,
            Database | Caching | DatabaseAdministration | ObjectStorage | DataStreaming => {
                Category::Data
            }
            JobScheduling | Cron | Workflow => Category::Scheduling,
            _ => Category::Miscellaneous,
        }
    }

    /// Identifier-style name, identical to the serialized form.
    pub fn name(self) -> &'static str {
        use ServiceType::*;
        match self {
            Database => "Database",
            Frontend => "Frontend",
            Backend => "Backend",
            Caching => "Caching",
            Testing => "Testing",
            ReverseProxy => "ReverseProxy",
            Mail => "Mail",
            Search => "Search",
            DatabaseAdministration => "DatabaseAdministration",
            ObjectStorage => "ObjectStorage",
            Identity => "Identity",
            Visualization => "Visualization",
            JobScheduling => "JobScheduling",
            ContainerManagement => "ContainerManagement",
            EventMonitoring => "EventMonitoring",
            Certificate => "Certificate",
            DatabaseInit => "DatabaseInit",
            Zipping => "Zipping",
            MessageBroker => "MessageBroker",
            Dns => "Dns",
            Tracing => "Tracing",
            ImageRecognition => "ImageRecognition",
            Cron => "Cron",
            Chat => "Chat",
            Office => "Office",
            Setup => "Setup",
            Workflow => "Workflow",
            LinuxUtilities => "LinuxUtilities",
            Secrets => "Secrets",
            HttpAccelerator => "HttpAccelerator",
            HelloWorld => "HelloWorld",
            Discovery => "Discovery",
            DataStreaming => "DataStreaming",
            Unclassified => "Unclassified",
        }
    }

    /// Human label used in text tables.
    pub fn display_name(self) -> &'static str {
        use ServiceType::*;
        match self {
            Database => "Database",
            Frontend => "Frontend",
            Backend => "Backend",
            Caching => "Caching",
            Testing => "Testing",
            ReverseProxy => "Reverse proxy",
            Mail => "Mail",
            Search => "Search",
            DatabaseAdministration => "Database administration",
            ObjectStorage => "Object storage",
            Identity => "Identity",
            Visualization => "Visualization",
            JobScheduling => "Job scheduling",
            ContainerManagement => "Container management",
            EventMonitoring => "Event monitoring",
            Certificate => "Certificate",
            DatabaseInit => "Database initialization",
            Zipping => "Zipping",
            MessageBroker => "Message broker",
            Dns => "DNS",
            Tracing => "Tracing",
            ImageRecognition => "Image recognition",
            Cron => "Cron",
            Chat => "Chat",
            Office => "Office",
            Setup => "Setup",
            Workflow => "Workflow",
            LinuxUtilities => "Linux utilities",
            Secrets => "Secrets",
            HttpAccelerator => "HTTP accelerator",
            HelloWorld => "Hello world",
            Discovery => "Service discovery",
            DataStreaming => "Data streaming",
            Unclassified => "Unclassified",
        }
    }

    pub fn parse_name(s: &str) -> Option<ServiceType> {
        ServiceType::ALL.iter().copied().find(|t| t.name() == s)
    }
}

impl fmt::Display for ServiceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How sure the classifier is about an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Confidence {
    RuleMatch,
    DockerfileBase,
    NameHeuristic,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Prefix,
    Regex,
}

/// Rule target: a concrete type, or the application pseudo-type that
/// resolves to Frontend/Backend from the service name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleTarget {
    Type(ServiceType),
    Application,
}

#[derive(Debug, Clone)]
pub struct ClassificationRule {
    pub match_kind: MatchKind,
    pub pattern: String,
    pub target: RuleTarget,
    pub priority: u32,
    compiled: Option<Regex>,
}

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("rule line {line}: expected 4 tab-separated fields")]
    BadShape { line: usize },
    #[error("rule line {line}: unknown match kind {kind:?}")]
    BadKind { line: usize, kind: String },
    #[error("rule line {line}: unknown service type {name:?}")]
    BadType { line: usize, name: String },
    #[error("rule line {line}: bad priority {value:?}")]
    BadPriority { line: usize, value: String },
    #[error("rule line {line}: invalid regex: {message}")]
    BadRegex { line: usize, message: String },
}

/// Parses a tab-separated rule table: match_kind, pattern, type, priority.
/// `#` starts a comment, blank lines are skipped.
pub fn parse_rules(text: &str) -> Result<Vec<ClassificationRule>, RuleError> {
    let mut rules = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end();
        if line.is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(RuleError::BadShape { line: line_no });
        }
        let match_kind = match fields[0] {
            "exact" => MatchKind::Exact,
            "prefix" => MatchKind::Prefix,
            "regex" => MatchKind::Regex,
            other => {
                return Err(RuleError::BadKind {
                    line: line_no,
                    kind: other.to_string(),
                })
            }
        };
        let pattern = fields[1].to_string();
        let target = if fields[2] == "Application" {
            RuleTarget::Application
        } else {
            match ServiceType::parse_name(fields[2]) {
                Some(t) => RuleTarget::Type(t),
                None => {
                    return Err(RuleError::BadType {
                        line: line_no,
                        name: fields[2].to_string(),
                    })
                }
            }
        };
        let priority: u32 = fields[3].parse().map_err(|_| RuleError::BadPriority {
            line: line_no,
            value: fields[3].to_string(),
        })?;
        let compiled = match match_kind {
            MatchKind::Regex => Some(Regex::new(&pattern).map_err(|e| RuleError::BadRegex {
                line: line_no,
                message: e.to_string(),
            })?),
            _ => None,
        };
        rules.push(ClassificationRule {
            match_kind,
            pattern,
            target,
            priority,
            compiled,
        });
    }
    Ok(rules)
}

const BUNDLED_RULES: &str = include_str!("rules.tsv");

static DEFAULT_RULES: LazyLock<Vec<ClassificationRule>> =
    LazyLock::new(|| parse_rules(BUNDLED_RULES).expect("bundled rule table parses"));

pub fn default_rules() -> &'static [ClassificationRule] {
    &DEFAULT_RULES
}

/// Image reference reduced to the parts that matter for matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalImage {
    pub namespace: Option<String>,
    pub name: String,
}

impl CanonicalImage {
    /// Match candidates: the bare name, and "namespace/name" when a
    /// namespace survives canonicalization.
    pub fn candidates(&self) -> Vec<String> {
        let mut out = vec![self.name.clone()];
        if let Some(ns) = &self.namespace {
            out.push(format!("{ns}/{}", self.name));
        }
        out
    }
}

/// Strips registry host, tag and digest; keeps the final path segment and
/// the penultimate namespace. "docker.io/library/postgres:13", "postgres:13"
/// and "postgres" all canonicalize to the same matchable name.
pub fn canonicalize_image(image: &str) -> CanonicalImage {
    let lowered = image.trim().to_ascii_lowercase();
    let without_digest = lowered.split('@').next().unwrap_or("");
    let mut segments: Vec<&str> = without_digest.split('/').filter(|s| !s.is_empty()).collect();
    if segments.len() > 1 {
        let first = segments[0];
        if first.contains('.') || first.contains(':') || first == "localhost" {
            segments.remove(0);
        }
    }
    let last = segments.pop().unwrap_or("");
    // Tag only ever appears on the last segment.
    let name = last.split(':').next().unwrap_or("").to_string();
    let namespace = segments.pop().map(|s| s.to_string());
    CanonicalImage { namespace, name }
}

fn rule_matches(rule: &ClassificationRule, candidates: &[String]) -> bool {
    candidates.iter().any(|c| match rule.match_kind {
        MatchKind::Exact => c == &rule.pattern,
        MatchKind::Prefix => c.starts_with(&rule.pattern),
        MatchKind::Regex => rule
            .compiled
            .as_ref()
            .map(|re| re.is_match(c))
            .unwrap_or(false),
    })
}

fn best_match<'r>(
    rules: &'r [ClassificationRule],
    candidates: &[String],
) -> Option<&'r ClassificationRule> {
    rules
        .iter()
        .enumerate()
        .filter(|(_, r)| rule_matches(r, candidates))
        .min_by(|(ia, a), (ib, b)| {
            (a.priority, a.pattern.as_str(), *ia).cmp(&(b.priority, b.pattern.as_str(), *ib))
        })
        .map(|(_, r)| r)
}

/// Best-matching rule for an image reference: lowest priority wins, ties
/// break on the lexicographically smaller pattern, then on load order.
/// The bare image name is the most specific identifier, so rules hitting
/// it are consulted first; the namespaced form is only a fallback (keeps
/// a generic namespace like "acme/" from shadowing a well-known name).
pub fn lookup_rule<'r>(
    image: &str,
    rules: &'r [ClassificationRule],
) -> Option<(&'r ClassificationRule, RuleTarget)> {
    let canonical = canonicalize_image(image);
    let candidates = canonical.candidates();
    best_match(rules, &candidates[..1])
        .or_else(|| best_match(rules, &candidates))
        .map(|r| (r, r.target))
}

/// Classifies a bare image reference. Application-base images resolve to a
/// concrete type only with a service name, so here they stay Unclassified.
pub fn classify_image(image: &str, rules: &[ClassificationRule]) -> ServiceType {
    match lookup_rule(image, rules) {
        Some((_, RuleTarget::Type(t))) => t,
        _ => ServiceType::Unclassified,
    }
}

static BACKEND_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new("api|backend|server|worker").unwrap());

/// Frontend/Backend split for application services, by service name.
pub fn disambiguate_application(service_name: &str) -> ServiceType {
    if BACKEND_NAME.is_match(&service_name.to_ascii_lowercase()) {
        ServiceType::Backend
    } else {
        ServiceType::Frontend
    }
}

fn token_regex(alternatives: &str) -> Regex {
    Regex::new(&format!("(^|[-_.])({alternatives})([-_.]|$|[0-9])")).unwrap()
}

/// Specific-type name heuristics, checked in order. Tokens are separated by
/// `-`, `_` or `.`; a trailing digit also closes a token ("redis2").
static NAME_RULES: LazyLock<Vec<(Regex, ServiceType)>> = LazyLock::new(|| {
    use ServiceType::*;
    vec![
        (
            token_regex("adminer|phpmyadmin|pgadmin|mongo-express|redis-commander"),
            DatabaseAdministration,
        ),
        (
            token_regex("migrate|migration|migrations|flyway|liquibase|db-init|dbinit|init-db|initdb|seed"),
            DatabaseInit,
        ),
        (
            token_regex(
                "postgres|postgresql|pgsql|mysql|mariadb|mongo|mongodb|db|database|cassandra|neo4j|clickhouse|influxdb|cockroach",
            ),
            Database,
        ),
        (token_regex("redis|memcached|memcache|cache|keydb|valkey"), Caching),
        (token_regex("varnish"), HttpAccelerator),
        (
            token_regex("proxy|nginx|traefik|haproxy|caddy|envoy|ingress"),
            ReverseProxy,
        ),
        (
            token_regex("certbot|letsencrypt|acme|certgen|cert|certs"),
            Certificate,
        ),
        (
            token_regex("mail|mailhog|mailcatcher|smtp|imap|postfix"),
            Mail,
        ),
        (
            token_regex("elasticsearch|elastic|solr|search|meilisearch|opensearch|typesense"),
            Search,
        ),
        (
            token_regex("rabbitmq|rabbit|mqtt|mosquitto|amqp|broker|nats|activemq|queue"),
            MessageBroker,
        ),
        (token_regex("kafka|redpanda|pulsar"), DataStreaming),
        (
            token_regex("zookeeper|consul|etcd|eureka|discovery"),
            Discovery,
        ),
        (
            token_regex("selenium|test|tests|testing|e2e|cypress|playwright|wiremock|mock|mocks"),
            Testing,
        ),
        (token_regex("minio|s3"), ObjectStorage),
        (
            token_regex("keycloak|auth|ldap|oauth|sso|identity|login"),
            Identity,
        ),
        (token_regex("kibana|grafana|dashboard|metabase"), Visualization),
        (
            token_regex(
                "prometheus|monitor|monitoring|cadvisor|exporter|zabbix|netdata|statsd|alertmanager",
            ),
            EventMonitoring,
        ),
        (
            token_regex("jaeger|zipkin|tracing|tracer|logstash|fluentd|graylog|loki|logging|logger"),
            Tracing,
        ),
        (token_regex("dns|dnsmasq|coredns|pihole|unbound|bind9"), Dns),
        (token_regex("cron|crontab|ofelia"), Cron),
        (
            token_regex("scheduler|scheduling|sidekiq|celery|resque|beanstalkd"),
            JobScheduling,
        ),
        (
            token_regex("airflow|n8n|node-red|nodered|temporal|workflow|camunda"),
            Workflow,
        ),
        (
            token_regex("watchtower|portainer|ouroboros|diun"),
            ContainerManagement,
        ),
        (token_regex("vault|secrets|secret"), Secrets),
        (
            token_regex("mattermost|rocketchat|rocket-chat|zulip|chat|synapse"),
            Chat,
        ),
        (token_regex("onlyoffice|collabora|office"), Office),
        (
            token_regex("zip|zipper|unzip|gzip|compress|compression|archiver"),
            Zipping,
        ),
        (
            token_regex("deepstack|recognition|vision|ocr"),
            ImageRecognition,
        ),
        (token_regex("busybox|utils|toolbox"), LinuxUtilities),
        (token_regex("hello-world|helloworld|hello"), HelloWorld),
        (
            token_regex("setup|init|provision|bootstrap|installer"),
            Setup,
        ),
    ]
});

fn name_heuristic_specific(service_name: &str) -> Option<ServiceType> {
    let lowered = service_name.to_ascii_lowercase();
    NAME_RULES
        .iter()
        .find(|(re, _)| re.is_match(&lowered))
        .map(|(_, t)| *t)
}

static APPLICATION_NAME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new("app|web|front|client|api|backend|server|worker|www|site|(^|[-_.])ui([-_.]|$|[0-9])")
        .unwrap()
});

fn name_is_application(service_name: &str) -> bool {
    APPLICATION_NAME.is_match(&service_name.to_ascii_lowercase())
}

/// One classified service, with the evidence that produced the assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedService {
    pub name: String,
    pub service_type: ServiceType,
    pub category: Category,
    pub confidence: Confidence,
    pub image: Option<String>,
    pub has_build: bool,
    pub matched_rule: Option<String>,
}

fn classified(
    service: &ServiceSpec,
    service_type: ServiceType,
    confidence: Confidence,
    matched_rule: Option<String>,
) -> ClassifiedService {
    ClassifiedService {
        name: service.name.clone(),
        service_type,
        category: service_type.category(),
        confidence,
        image: service.image.clone(),
        has_build: service.build.is_some(),
        matched_rule,
    }
}

fn rule_label(rule: &ClassificationRule) -> String {
    let kind = match rule.match_kind {
        MatchKind::Exact => "exact",
        MatchKind::Prefix => "prefix",
        MatchKind::Regex => "regex",
    };
    format!("{kind}:{}", rule.pattern)
}

/// Classifies one service. `dockerfile_base` is the FROM image of the
/// service's Dockerfile when the caller resolved one.
pub fn classify_service(
    service: &ServiceSpec,
    rules: &[ClassificationRule],
    dockerfile_base: Option<&str>,
) -> ClassifiedService {
    if let Some(image) = &service.image {
        if let Some((rule, target)) = lookup_rule(image, rules) {
            let label = Some(rule_label(rule));
            return match target {
                RuleTarget::Type(t) => classified(service, t, Confidence::RuleMatch, label),
                RuleTarget::Application => classified(
                    service,
                    disambiguate_application(&service.name),
                    Confidence::RuleMatch,
                    label,
                ),
            };
        }
    }
    if let Some(base) = dockerfile_base {
        if let Some((rule, target)) = lookup_rule(base, rules) {
            let label = Some(rule_label(rule));
            return match target {
                RuleTarget::Type(t) => classified(service, t, Confidence::DockerfileBase, label),
                RuleTarget::Application => classified(
                    service,
                    disambiguate_application(&service.name),
                    Confidence::DockerfileBase,
                    label,
                ),
            };
        }
    }
    if let Some(t) = name_heuristic_specific(&service.name) {
        return classified(service, t, Confidence::NameHeuristic, None);
    }
    if service.image.is_none() && name_is_application(&service.name) {
        return classified(
            service,
            disambiguate_application(&service.name),
            Confidence::NameHeuristic,
            None,
        );
    }
    classified(service, ServiceType::Unclassified, Confidence::Unknown, None)
}

/// Counts every service occurrence across per-file groups. Unclassified is
/// counted like any other type.
pub fn type_histogram(per_file: &[Vec<ClassifiedService>]) -> BTreeMap<ServiceType, usize> {
    let mut out = BTreeMap::new();
    for group in per_file {
        for svc in group {
            *out.entry(svc.service_type).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svc(name: &str, image: Option<&str>, build: bool) -> ServiceSpec {
        let mut s = ServiceSpec::new(name);
        s.image = image.map(|i| i.to_string());
        if build {
            s.build = Some(crate::model::BuildSpec {
                context: ".".to_string(),
                dockerfile: None,
            });
        }
        s
    }

    #[test]
    fn canonicalization_strips_registry_tag_digest() {
        let c = canonicalize_image("docker.io/library/postgres:13");
        assert_eq!(c.name, "postgres");
        assert_eq!(c.namespace.as_deref(), Some("library"));
        assert_eq!(canonicalize_image("postgres:13").name, "postgres");
        assert_eq!(canonicalize_image("postgres").name, "postgres");
        assert_eq!(
            canonicalize_image("redis@sha256:0123abcd").name,
            "redis"
        );
        let c = canonicalize_image("localhost:5000/team/app:v2");
        assert_eq!(c.namespace.as_deref(), Some("team"));
        assert_eq!(c.name, "app");
        let c = canonicalize_image("ghcr.io/acme/tools/runner:latest");
        assert_eq!(c.namespace.as_deref(), Some("tools"));
        assert_eq!(c.name, "runner");
    }

    #[test]
    fn registry_variants_classify_identically() {
        let rules = default_rules();
        for image in [
            "postgres",
            "postgres:13",
            "docker.io/library/postgres:13",
            "library/postgres",
            "my.registry.example:5000/library/postgres:13",
        ] {
            assert_eq!(
                classify_image(image, rules),
                ServiceType::Database,
                "image {image}"
            );
        }
    }

    #[test]
    fn named_images_from_the_reference_tables() {
        let rules = default_rules();
        let cases = [
            ("postgres", ServiceType::Database),
            ("mongo", ServiceType::Database),
            ("redis", ServiceType::Caching),
            ("nginx", ServiceType::ReverseProxy),
            ("traefik", ServiceType::ReverseProxy),
            ("varnish", ServiceType::HttpAccelerator),
            ("selenium/standalone-chrome", ServiceType::Testing),
            ("mailhog/mailhog", ServiceType::Mail),
            ("rnwood/smtp4dev", ServiceType::Mail),
            ("solr", ServiceType::Search),
            ("jboss/keycloak", ServiceType::Identity),
            ("kibana", ServiceType::Visualization),
            ("confluentinc/cp-kafka", ServiceType::DataStreaming),
            ("minio/minio", ServiceType::ObjectStorage),
            ("adminer", ServiceType::DatabaseAdministration),
            ("containrrr/watchtower", ServiceType::ContainerManagement),
            ("certbot/certbot", ServiceType::Certificate),
            ("busybox", ServiceType::LinuxUtilities),
        ];
        for (image, expected) in cases {
            assert_eq!(classify_image(image, rules), expected, "image {image}");
        }
    }

    #[test]
    fn bare_os_images_stay_unclassified() {
        let rules = default_rules();
        for image in ["ubuntu", "alpine", "debian", "centos"] {
            assert_eq!(classify_image(image, rules), ServiceType::Unclassified);
        }
    }

    #[test]
    fn priority_breaks_overlapping_rules() {
        // kafka-ui hits both exact kafka-ui (10, DatabaseAdministration) and
        // regex kafka (30, DataStreaming); the lower priority wins.
        assert_eq!(
            classify_image("provectuslabs/kafka-ui", default_rules()),
            ServiceType::DatabaseAdministration
        );
        // redisinsight beats the broader redis prefix rule the same way.
        assert_eq!(
            classify_image("redislabs/redisinsight", default_rules()),
            ServiceType::DatabaseAdministration
        );
    }

    #[test]
    fn name_rules_outrank_namespace_rules() {
        let rules = default_rules();
        // "acme" as an org name must not drag the image into Certificate
        // when the name itself is a known type.
        assert_eq!(
            classify_image("ghcr.io/acme/kafka@sha256:0123456789abcdef", rules),
            ServiceType::DataStreaming
        );
        assert_eq!(
            classify_image("acme/postgres:13", rules),
            ServiceType::Database
        );
        // With nothing known about the name, the namespace still counts.
        assert_eq!(
            classify_image("selenium/standalone-chrome", rules),
            ServiceType::Testing
        );
    }

    #[test]
    fn service_with_image_rule() {
        let s = svc("db", Some("mariadb:10"), false);
        let c = classify_service(&s, default_rules(), None);
        assert_eq!(c.service_type, ServiceType::Database);
        assert_eq!(c.confidence, Confidence::RuleMatch);
        assert_eq!(c.category, Category::Data);
        assert_eq!(c.matched_rule.as_deref(), Some("exact:mariadb"));
    }

    #[test]
    fn build_service_resolves_through_dockerfile_base() {
        let s = svc("web", None, true);
        let c = classify_service(&s, default_rules(), Some("node:18"));
        assert_eq!(c.service_type, ServiceType::Frontend);
        assert_eq!(c.confidence, Confidence::DockerfileBase);
    }

    #[test]
    fn build_service_falls_back_to_name() {
        let s = svc("api", None, true);
        let c = classify_service(&s, default_rules(), None);
        assert_eq!(c.service_type, ServiceType::Backend);
        assert_eq!(c.confidence, Confidence::NameHeuristic);
    }

    #[test]
    fn application_name_never_refines_an_image_service() {
        // "web" with a bare OS image stays Unclassified: the application
        // heuristic only applies to services without an image.
        let s = svc("web", Some("ubuntu"), false);
        let c = classify_service(&s, default_rules(), None);
        assert_eq!(c.service_type, ServiceType::Unclassified);
        assert_eq!(c.confidence, Confidence::Unknown);
    }

    #[test]
    fn specific_name_refines_an_unmatched_image() {
        // Someone installs redis on ubuntu by hand; the name still tells.
        let s = svc("redis", Some("ubuntu"), false);
        let c = classify_service(&s, default_rules(), None);
        assert_eq!(c.service_type, ServiceType::Caching);
        assert_eq!(c.confidence, Confidence::NameHeuristic);
    }

    #[test]
    fn name_tokens_respect_boundaries() {
        assert_eq!(name_heuristic_specific("web-db"), Some(ServiceType::Database));
        assert_eq!(name_heuristic_specific("db2"), Some(ServiceType::Database));
        assert_eq!(name_heuristic_specific("dbg-mode"), None);
        assert_eq!(
            name_heuristic_specific("db-init"),
            Some(ServiceType::DatabaseInit)
        );
        assert_eq!(name_heuristic_specific("init"), Some(ServiceType::Setup));
        assert_eq!(
            name_heuristic_specific("cache-1"),
            Some(ServiceType::Caching)
        );
    }

    #[test]
    fn backend_frontend_split() {
        assert_eq!(disambiguate_application("api"), ServiceType::Backend);
        assert_eq!(disambiguate_application("worker"), ServiceType::Backend);
        assert_eq!(disambiguate_application("app-server"), ServiceType::Backend);
        assert_eq!(disambiguate_application("web"), ServiceType::Frontend);
        assert_eq!(disambiguate_application("client"), ServiceType::Frontend);
    }

    #[test]
    fn rule_parsing_rejects_bad_lines() {
        assert!(matches!(
            parse_rules("exact\tredis\tCaching\n"),
            Err(RuleError::BadShape { line: 1 })
        ));
        assert!(matches!(
            parse_rules("glob\tredis\tCaching\t10\n"),
            Err(RuleError::BadKind { .. })
        ));
        assert!(matches!(
            parse_rules("exact\tredis\tNoSuchType\t10\n"),
            Err(RuleError::BadType { .. })
        ));
        assert!(matches!(
            parse_rules("exact\tredis\tCaching\tten\n"),
            Err(RuleError::BadPriority { .. })
        ));
        assert!(matches!(
            parse_rules("regex\t[\tCaching\t10\n"),
            Err(RuleError::BadRegex { .. })
        ));
    }

    #[test]
    fn user_rules_with_lower_priority_override() {
        let mut rules = parse_rules("exact\tmycorp-svc\tBackend\t5\n").unwrap();
        rules.extend(default_rules().iter().cloned());
        assert_eq!(
            classify_image("registry.example.com/team/mycorp-svc:1", &rules),
            ServiceType::Backend
        );
    }

    #[test]
    fn histogram_counts_occurrences_including_unclassified() {
        let a = vec![
            classified(&svc("db", Some("postgres"), false), ServiceType::Database, Confidence::RuleMatch, None),
            classified(&svc("x", Some("ubuntu"), false), ServiceType::Unclassified, Confidence::Unknown, None),
        ];
        let b = vec![classified(
            &svc("db2", Some("mysql"), false),
            ServiceType::Database,
            Confidence::RuleMatch,
            None,
        )];
        let hist = type_histogram(&[a, b]);
        assert_eq!(hist[&ServiceType::Database], 2);
        assert_eq!(hist[&ServiceType::Unclassified], 1);
    }

    #[test]
    fn all_types_have_stable_category_split() {
        use Category::*;
        let mut counts: BTreeMap<Category, usize> = BTreeMap::new();
        for t in ServiceType::ALL {
            if t == ServiceType::Unclassified {
                continue;
            }
            *counts.entry(t.category()).or_insert(0) += 1;
        }
        assert_eq!(counts[&Core], 2);
        assert_eq!(counts[&Networking], 4);
        assert_eq!(counts[&Reliability], 4);
        assert_eq!(counts[&Setup], 2);
        assert_eq!(counts[&Data], 5);
        assert_eq!(counts[&Scheduling], 3);
        assert_eq!(counts[&Miscellaneous], 13);
    }
}
