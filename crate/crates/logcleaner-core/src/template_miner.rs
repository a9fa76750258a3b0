//! Event template mining and matching.
//!
//! A fixed-depth prefix-tree miner in the Drain family: log content is
//! tokenized on whitespace, digit-bearing tokens are masked to the wildcard
//! `[*]` up front, the first few tokens steer tree descent, and leaf
//! clusters merge records whose token overlap clears a similarity
//! threshold. Merging only ever widens a template (literal positions become
//! wildcards, never the reverse), and event ids are assigned in first-seen
//! order so mining is reproducible for a fixed input order.
//!
//! Pre-parsed corpora (CSV with `LineId,EventId[,EventTemplate[,Content]]`
//! columns) can be loaded directly, bypassing the miner.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use crate::artifact;
use crate::error::{Error, Result};

pub const WILDCARD: &str = "[*]";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplateToken {
    Literal(String),
    Wildcard,
}

impl TemplateToken {
    fn from_masked(token: &str) -> Self {
        if token == WILDCARD {
            TemplateToken::Wildcard
        } else {
            TemplateToken::Literal(token.to_string())
        }
    }
}

impl fmt::Display for TemplateToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateToken::Literal(s) => f.write_str(s),
            TemplateToken::Wildcard => f.write_str(WILDCARD),
        }
    }
}

/// A mined template: stable event id plus a token sequence with wildcard
/// slots. `support_count` is the number of records assigned to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTemplate {
    pub event_id: String,
    pub tokens: Vec<TemplateToken>,
    pub support_count: u64,
}

impl EventTemplate {
    pub fn template_string(&self) -> String {
        let parts: Vec<String> = self.tokens.iter().map(|t| t.to_string()).collect();
        parts.join(" ")
    }

    fn wildcard_count(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| matches!(t, TemplateToken::Wildcard))
            .count()
    }
}

/// Miner parameters. `depth` counts tree levels in the usual fixed-depth
/// convention (root and length level included), so `depth = 4` means two
/// token-keyed levels before the leaf clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct MinerConfig {
    pub depth: usize,
    pub similarity_threshold: f64,
    pub max_children: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            depth: 4,
            similarity_threshold: 0.5,
            max_children: 100,
        }
    }
}

impl MinerConfig {
    fn token_levels(&self) -> usize {
        self.depth.saturating_sub(2)
    }
}

/// An ordered set of templates; the event index (position) is the compact
/// id used throughout the pipeline, the string `event_id` is the stable
/// external name.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: Vec<EventTemplate>,
    pub miner_config: MinerConfig,
    by_id: HashMap<String, u32>,
    by_len: BTreeMap<usize, Vec<u32>>,
}

impl TemplateSet {
    pub fn from_templates(templates: Vec<EventTemplate>, miner_config: MinerConfig) -> Self {
        let mut by_id = HashMap::new();
        let mut by_len = BTreeMap::new();
        for (i, t) in templates.iter().enumerate() {
            by_id.insert(t.event_id.clone(), i as u32);
            by_len
                .entry(t.tokens.len())
                .or_insert_with(Vec::new)
                .push(i as u32);
        }
        TemplateSet {
            templates,
            miner_config,
            by_id,
            by_len,
        }
    }

    /// Builds a set of single-literal templates from bare event ids, as when
    /// loading a pre-parsed corpus without a template column.
    pub fn from_event_ids<I: IntoIterator<Item = String>>(ids: I) -> Self {
        let templates = ids
            .into_iter()
            .map(|id| EventTemplate {
                tokens: vec![TemplateToken::Literal(id.clone())],
                event_id: id,
                support_count: 0,
            })
            .collect();
        TemplateSet::from_templates(templates, MinerConfig::default())
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, index: u32) -> &EventTemplate {
        &self.templates[index as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventTemplate> {
        self.templates.iter()
    }

    pub fn index_of(&self, event_id: &str) -> Option<u32> {
        self.by_id.get(event_id).copied()
    }

    pub fn event_id(&self, index: u32) -> &str {
        &self.templates[index as usize].event_id
    }

    pub fn event_ids(&self) -> impl Iterator<Item = &str> {
        self.templates.iter().map(|t| t.event_id.as_str())
    }

    pub fn total_support(&self) -> u64 {
        self.templates.iter().map(|t| t.support_count).sum()
    }

    /// Matches a raw content line against the set: the winning template has
    /// the same token count and equal literals at every non-wildcard
    /// position. When several qualify the most specific one (fewest
    /// wildcards) wins, lowest ordinal on ties.
    pub fn match_content(&self, content: &str) -> Option<u32> {
        let tokens = tokenize(content);
        let candidates = self.by_len.get(&tokens.len())?;
        let mut best: Option<(usize, u32)> = None;
        for &idx in candidates {
            let t = &self.templates[idx as usize];
            let ok = t.tokens.iter().zip(&tokens).all(|(tt, rt)| match tt {
                TemplateToken::Wildcard => true,
                TemplateToken::Literal(lit) => lit == rt,
            });
            if ok {
                let specificity = tokens.len() - t.wildcard_count();
                match best {
                    Some((s, _)) if s >= specificity => {}
                    _ => best = Some((specificity, idx)),
                }
            }
        }
        best.map(|(_, idx)| idx)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string())
    }

    pub fn to_artifact_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&artifact::header("templates"));
        out.push('\n');
        out.push_str(&format!(
            "#miner depth={} sim={} max_children={}\n",
            self.miner_config.depth,
            artifact::fmt_f64(self.miner_config.similarity_threshold),
            self.miner_config.max_children
        ));
        for t in &self.templates {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                t.event_id,
                t.support_count,
                t.template_string()
            ));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = artifact::read_to_string(path)?;
        let mut miner_config = MinerConfig::default();
        let mut templates = Vec::new();
        for (lineno, line) in artifact::check_header(path, "templates", &content)? {
            if let Some(meta) = line.strip_prefix("#miner ") {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("depth", v)) => {
                            miner_config.depth = artifact::parse_usize(path, lineno, "depth", v)?
                        }
                        Some(("sim", v)) => {
                            miner_config.similarity_threshold =
                                artifact::parse_f64(path, lineno, "sim", v)?
                        }
                        Some(("max_children", v)) => {
                            miner_config.max_children =
                                artifact::parse_usize(path, lineno, "max_children", v)?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (id, support, tmpl) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "expected `event_id<TAB>support<TAB>template`",
                    ))
                }
            };
            templates.push(EventTemplate {
                event_id: id.to_string(),
                support_count: support.parse().map_err(|_| {
                    Error::parse(path, lineno, format!("invalid support count `{support}`"))
                })?,
                tokens: parse_template_string(tmpl),
            });
        }
        Ok(TemplateSet::from_templates(templates, miner_config))
    }
}

/// Parses a template string; both `[*]` and the `<*>` convention of
/// pre-parsed corpora denote a wildcard slot.
pub fn parse_template_string(s: &str) -> Vec<TemplateToken> {
    s.split_whitespace()
        .map(|t| {
            if t == WILDCARD || t == "<*>" {
                TemplateToken::Wildcard
            } else {
                TemplateToken::Literal(t.to_string())
            }
        })
        .collect()
}

/// Whitespace tokenization with digit masking: any token containing an
/// ASCII digit becomes the wildcard marker before the tree ever sees it.
pub fn tokenize(content: &str) -> Vec<String> {
    content
        .split_whitespace()
        .map(|t| {
            if t.bytes().any(|b| b.is_ascii_digit()) {
                WILDCARD.to_string()
            } else {
                t.to_string()
            }
        })
        .collect()
}

#[derive(Default)]
struct TreeNode {
    children: HashMap<String, TreeNode>,
    clusters: Vec<u32>,
}

/// Incremental miner; feed records with [`observe`](TemplateMiner::observe)
/// and take the result with [`finish`](TemplateMiner::finish).
pub struct TemplateMiner {
    config: MinerConfig,
    root: HashMap<usize, TreeNode>,
    templates: Vec<EventTemplate>,
}

impl TemplateMiner {
    pub fn new(config: MinerConfig) -> Self {
        TemplateMiner {
            config,
            root: HashMap::new(),
            templates: Vec::new(),
        }
    }

    /// Assigns one record to a cluster, creating a template if needed, and
    /// returns the event index.
    pub fn observe(&mut self, content: &str) -> u32 {
        let tokens = tokenize(content);
        let levels = self.config.token_levels();
        let max_children = self.config.max_children;

        let mut node = self.root.entry(tokens.len()).or_default();
        for token in tokens.iter().take(levels) {
            let key = if node.children.contains_key(token.as_str()) {
                token.clone()
            } else if node.children.len() < max_children {
                token.clone()
            } else {
                WILDCARD.to_string()
            };
            node = node.children.entry(key).or_default();
        }

        // Best existing cluster in this leaf by (similarity, wildcard count).
        let mut best: Option<(f64, usize, u32)> = None;
        for &cid in &node.clusters {
            let t = &self.templates[cid as usize];
            let mut same = 0usize;
            let mut wild = 0usize;
            for (tt, rt) in t.tokens.iter().zip(&tokens) {
                match tt {
                    TemplateToken::Wildcard => wild += 1,
                    TemplateToken::Literal(lit) if lit == rt => same += 1,
                    TemplateToken::Literal(_) => {}
                }
            }
            let sim = if tokens.is_empty() {
                1.0
            } else {
                same as f64 / tokens.len() as f64
            };
            let better = match best {
                None => true,
                Some((bs, bw, _)) => sim > bs || (sim == bs && wild > bw),
            };
            if better {
                best = Some((sim, wild, cid));
            }
        }

        if let Some((sim, _, cid)) = best {
            if sim >= self.config.similarity_threshold {
                let t = &mut self.templates[cid as usize];
                for (tt, rt) in t.tokens.iter_mut().zip(&tokens) {
                    if let TemplateToken::Literal(lit) = tt {
                        if lit != rt {
                            *tt = TemplateToken::Wildcard;
                        }
                    }
                }
                t.support_count += 1;
                return cid;
            }
        }

        let cid = self.templates.len() as u32;
        self.templates.push(EventTemplate {
            event_id: format!("E{cid}"),
            tokens: tokens.iter().map(|t| TemplateToken::from_masked(t)).collect(),
            support_count: 1,
        });
        node.clusters.push(cid);
        cid
    }

    pub fn finish(self) -> TemplateSet {
        TemplateSet::from_templates(self.templates, self.config)
    }
}

/// Mines a whole record stream; returns the template set and the per-record
/// event assignment, in input order.
pub fn mine<'a, I>(contents: I, config: MinerConfig) -> (TemplateSet, Vec<u32>)
where
    I: IntoIterator<Item = &'a str>,
{
    let mut miner = TemplateMiner::new(config);
    let assignments = contents.into_iter().map(|c| miner.observe(c)).collect();
    (miner.finish(), assignments)
}

/// One row of a pre-parsed corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRecord {
    /// The file's LineId value, kept as-is.
    pub line_id: usize,
    pub event: u32,
    /// Content column when the file has one, empty otherwise.
    pub content: String,
}

/// Loads a pre-parsed corpus (`LineId,EventId[,EventTemplate[,Content]]`
/// CSV). The template set is synthesized from the distinct event ids in
/// LineId order; the returned records follow LineId order too.
pub fn load_parsed(path: &Path) -> Result<(TemplateSet, Vec<ParsedRecord>)> {
    let content = artifact::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 0, "empty file, expected CSV header"))?;
    let columns: Vec<&str> = split_csv(header);
    let col = |name: &str| columns.iter().position(|c| c.trim() == name);
    let line_col = col("LineId")
        .ok_or_else(|| Error::parse(path, 0, "missing required column `LineId`"))?;
    let event_col = col("EventId")
        .ok_or_else(|| Error::parse(path, 0, "missing required column `EventId`"))?;
    let template_col = col("EventTemplate");
    let content_col = col("Content");

    let mut rows: Vec<(usize, String, Option<String>, String)> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv(line);
        let get = |i: usize| -> Result<&str> {
            fields.get(i).copied().ok_or_else(|| {
                Error::parse(path, lineno, format!("row has {} fields", fields.len()))
            })
        };
        let line_id: usize = get(line_col)?.trim().parse().map_err(|_| {
            Error::parse(path, lineno, format!("invalid LineId `{}`", fields[line_col]))
        })?;
        let event_id = get(event_col)?.trim().to_string();
        if event_id.is_empty() {
            return Err(Error::parse(path, lineno, "empty EventId"));
        }
        let template = template_col
            .map(|i| get(i).map(|s| s.to_string()))
            .transpose()?;
        let body = content_col
            .map(|i| get(i).map(|s| s.to_string()))
            .transpose()?
            .unwrap_or_default();
        rows.push((line_id, event_id, template, body));
    }
    rows.sort_by_key(|r| r.0);

    let mut by_id: HashMap<String, u32> = HashMap::new();
    let mut templates: Vec<EventTemplate> = Vec::new();
    let mut records = Vec::with_capacity(rows.len());
    for (line_id, event_id, template, body) in rows {
        let idx = match by_id.get(&event_id) {
            Some(&i) => i,
            None => {
                let i = templates.len() as u32;
                let tokens = match &template {
                    Some(t) if !t.trim().is_empty() => parse_template_string(t),
                    _ => vec![TemplateToken::Literal(event_id.clone())],
                };
                templates.push(EventTemplate {
                    event_id: event_id.clone(),
                    tokens,
                    support_count: 0,
                });
                by_id.insert(event_id.clone(), i);
                i
            }
        };
        templates[idx as usize].support_count += 1;
        records.push(ParsedRecord {
            line_id,
            event: idx,
            content: body,
        });
    }
    Ok((
        TemplateSet::from_templates(templates, MinerConfig::default()),
        records,
    ))
}

/// Minimal CSV field split: honors double quotes, no escape sequences
/// beyond doubled quotes.
fn split_csv(line: &str) -> Vec<&str> {
    let mut fields = Vec::new();
    let bytes = line.as_bytes();
    let mut start = 0;
    let mut in_quotes = false;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'"' => in_quotes = !in_quotes,
            b',' if !in_quotes => {
                fields.push(trim_quotes(&line[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    fields.push(trim_quotes(&line[start..]));
    fields
}

fn trim_quotes(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(s)
}
