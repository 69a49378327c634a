use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GraphError, NodeId, SocialGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub is_manager: bool,
    pub discloses_position: bool,
}

/// Manager labels for (a subset of) the nodes of a graph.
///
/// File form is a comma-separated table with header
/// `node,is_manager,discloses_position`; lines starting with `#` are comments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    rows: BTreeMap<NodeId, Label>,
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    node: u64,
    is_manager: bool,
    discloses_position: bool,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: NodeId, label: Label) {
        self.rows.insert(id, label);
    }

    pub fn get(&self, id: NodeId) -> Option<&Label> {
        self.rows.get(&id)
    }

    pub fn is_manager(&self, id: NodeId) -> Option<bool> {
        self.rows.get(&id).map(|l| l.is_manager)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Label)> {
        self.rows.iter().map(|(k, v)| (*k, v))
    }

    /// Labels taken from the ground-truth flags of the graph's profiles.
    /// Nodes without a manager flag are left unlabeled.
    pub fn from_profiles(g: &SocialGraph) -> Self {
        let rows = g
            .profiles()
            .filter_map(|p| {
                p.is_manager.map(|m| {
                    (
                        p.id,
                        Label {
                            is_manager: m,
                            discloses_position: p.discloses_position,
                        },
                    )
                })
            })
            .collect();
        LabelTable { rows }
    }

    pub fn retain(&mut self, mut keep: impl FnMut(NodeId) -> bool) {
        self.rows.retain(|id, _| keep(*id));
    }

    /// Fails on the first label that names a node absent from `g`.
    pub fn check_against(&self, g: &SocialGraph) -> Result<(), GraphError> {
        match self.rows.keys().find(|id| !g.contains(**id)) {
            Some(id) => Err(GraphError::UnknownLabel(*id)),
            None => Ok(()),
        }
    }

    pub fn remap(&self, map: &BTreeMap<NodeId, NodeId>) -> Self {
        LabelTable {
            rows: self
                .rows
                .iter()
                .filter_map(|(id, l)| map.get(id).map(|n| (*n, *l)))
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = BTreeMap::new();
        for rec in rdr.deserialize::<LabelRow>() {
            let row = rec.map_err(|e| GraphError::Parse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                msg: e.to_string(),
            })?;
            rows.insert(
                NodeId(row.node),
                Label {
                    is_manager: row.is_manager,
                    discloses_position: row.discloses_position,
                },
            );
        }
        Ok(LabelTable { rows })
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,is_manager,discloses_position\n");
        for (id, l) in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                id, l.is_manager, l.discloses_position
            ));
        }
        out
    }
}
