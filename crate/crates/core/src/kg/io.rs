use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::graph::{EdgeLabel, KnowledgeGraph, NodeId, NodeKind, TriageStatus};
use super::KgError;

pub const KG_FORMAT: &str = "np-alarm-kg";
pub const KG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Node {
        id: NodeId,
        kind: NodeKind,
        attributes: BTreeMap<String, String>,
    },
    Edge {
        label: EdgeLabel,
        from: NodeId,
        to: NodeId,
    },
    Triage {
        target: NodeId,
        status: TriageStatus,
        reviewer: String,
        timestamp: DateTime<Utc>,
    },
}

impl KnowledgeGraph {
    /// Header line, then nodes (by kind, then natural key), edges (by label,
    /// then endpoints) and triage history (by target, oldest first).
    pub fn export<W: Write>(&self, mut out: W) -> Result<(), KgError> {
        let header = Header {
            format: KG_FORMAT.into(),
            version: KG_FORMAT_VERSION,
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        let mut nodes: Vec<(NodeKind, String, &NodeId)> = self
            .nodes
            .values()
            .map(|n| {
                let key = n.kind.natural_key(&n.attributes).unwrap_or_default();
                (n.kind, key, &n.id)
            })
            .collect();
        nodes.sort();
        for (_, _, id) in nodes {
            let n = &self.nodes[id];
            let rec = Record::Node {
                id: n.id.clone(),
                kind: n.kind,
                attributes: n.attributes.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&rec)?)?;
        }
        for e in &self.edges {
            let rec = Record::Edge {
                label: e.label,
                from: e.from.clone(),
                to: e.to.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&rec)?)?;
        }
        for history in self.triage.values() {
            for s in history {
                let rec = Record::Triage {
                    target: s.target.clone(),
                    status: s.status,
                    reviewer: s.reviewer.clone(),
                    timestamp: s.timestamp,
                };
                writeln!(out, "{}", serde_json::to_string(&rec)?)?;
            }
        }
        Ok(())
    }

    pub fn export_string(&self) -> String {
        let mut buf = Vec::new();
        self.export(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn import<R: BufRead>(input: R) -> Result<Self, KgError> {
        let mut lines = input.lines().enumerate();
        let header_line = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(KgError::FormatVersionMismatch("missing header".into())),
            }
        };
        let header: Header = serde_json::from_str(&header_line)
            .map_err(|_| KgError::FormatVersionMismatch(header_line.clone()))?;
        if header.format != KG_FORMAT || header.version != KG_FORMAT_VERSION {
            return Err(KgError::FormatVersionMismatch(format!(
                "{} v{}",
                header.format, header.version
            )));
        }
        let mut g = KnowledgeGraph::new();
        for (n, line) in lines {
            let line_no = n + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let at = |e: KgError| KgError::Import {
                line: line_no,
                reason: e.to_string(),
            };
            let rec: Record = serde_json::from_str(&line).map_err(|e| KgError::Import {
                line: line_no,
                reason: e.to_string(),
            })?;
            match rec {
                Record::Node {
                    id,
                    kind,
                    attributes,
                } => {
                    if g.nodes.contains_key(&id) {
                        return Err(at(KgError::IdCollision(id)));
                    }
                    g.insert_with_id(id, kind, attributes).map_err(at)?;
                }
                Record::Edge { label, from, to } => {
                    g.upsert_edge(&from, &to, label).map_err(at)?;
                }
                Record::Triage {
                    target,
                    status,
                    reviewer,
                    timestamp,
                } => {
                    g.set_triage_at(&target, status, &reviewer, timestamp)
                        .map_err(at)?;
                }
            }
        }
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<(), KgError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
        {
            let file = std::fs::File::create(&tmp)?;
            let mut w = std::io::BufWriter::new(file);
            self.export(&mut w)?;
            w.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, KgError> {
        let file = std::fs::File::open(path)?;
        Self::import(std::io::BufReader::new(file))
    }
}
