//! The eight per-node centrality measures and the table that collects them.
//!
//! Every kernel is generic over [`Scalar`]. Absolute values follow the
//! conventions documented on each function; downstream consumers only rely
//! on the induced rankings.

mod communicability;
mod paths;
mod spectral;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, SocialGraph};
use crate::linalg::EigenError;
use crate::scalar::Scalar;

pub use communicability::{
    communicability_centrality, connected_components, CommunicabilityMethod,
};
pub use paths::{betweenness_centrality, closeness_centrality, degree_centrality, load_centrality};
pub use spectral::{eigenvector_centrality, hits, pagerank, HitsScores, Iterated};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CentralityError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("{measure} is undefined on a graph without edges")]
    NoEdges { measure: &'static str },
    #[error("{measure} did not converge within {iterations} iterations")]
    NotConverged {
        measure: &'static str,
        iterations: usize,
        /// Last iterate, for diagnosis.
        last: Vec<f64>,
    },
    #[error(
        "largest component has {nodes} nodes, above the dense communicability cap of {cap}; \
         raise the cap or select the Lanczos approximation"
    )]
    TooLarge { nodes: usize, cap: usize },
    #[error(transparent)]
    Eigen(EigenError),
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("centrality table line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One of the eight measures. HITS yields two columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Dg,
    Cl,
    Bc,
    Hits,
    Pr,
    Ec,
    Cc,
    Lc,
}

impl Measure {
    pub const ALL: [Measure; 8] = [
        Measure::Dg,
        Measure::Cl,
        Measure::Bc,
        Measure::Hits,
        Measure::Pr,
        Measure::Ec,
        Measure::Cc,
        Measure::Lc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Dg => "dg",
            Measure::Cl => "cl",
            Measure::Bc => "bc",
            Measure::Hits => "hits",
            Measure::Pr => "pr",
            Measure::Ec => "ec",
            Measure::Cc => "cc",
            Measure::Lc => "lc",
        }
    }

    pub fn columns(self) -> &'static [Column] {
        match self {
            Measure::Dg => &[Column::Dg],
            Measure::Cl => &[Column::Cl],
            Measure::Bc => &[Column::Bc],
            Measure::Hits => &[Column::HitsAuthority, Column::HitsHub],
            Measure::Pr => &[Column::Pr],
            Measure::Ec => &[Column::Ec],
            Measure::Cc => &[Column::Cc],
            Measure::Lc => &[Column::Lc],
        }
    }

    /// Parses `all` or a comma-separated list such as `dg,cl,h`.
    pub fn parse_list(s: &str) -> Result<Vec<Measure>, CentralityError> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Measure::ALL.to_vec());
        }
        let mut out: Vec<Measure> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Measure = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = CentralityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "dg" | "degree" => Measure::Dg,
            "cl" | "closeness" => Measure::Cl,
            "bc" | "betweenness" => Measure::Bc,
            "h" | "hits" => Measure::Hits,
            "pr" | "pagerank" => Measure::Pr,
            "ec" | "eigenvector" => Measure::Ec,
            "cc" | "communicability" => Measure::Cc,
            "lc" | "load" => Measure::Lc,
            _ => return Err(CentralityError::UnknownMeasure(s.to_string())),
        })
    }
}

/// A column of the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Dg,
    Cl,
    Bc,
    HitsAuthority,
    HitsHub,
    Pr,
    Ec,
    Cc,
    Lc,
}

impl Column {
    pub const ALL: [Column; 9] = [
        Column::Dg,
        Column::Cl,
        Column::Bc,
        Column::HitsAuthority,
        Column::HitsHub,
        Column::Pr,
        Column::Ec,
        Column::Cc,
        Column::Lc,
    ];

    /// The eight classifier features: HITS contributes its authority score.
    pub const FEATURES: [Column; 8] = [
        Column::Dg,
        Column::Cl,
        Column::Bc,
        Column::HitsAuthority,
        Column::Pr,
        Column::Ec,
        Column::Cc,
        Column::Lc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Dg => "dg",
            Column::Cl => "cl",
            Column::Bc => "bc",
            Column::HitsAuthority => "hits_authority",
            Column::HitsHub => "hits_hub",
            Column::Pr => "pr",
            Column::Ec => "ec",
            Column::Cc => "cc",
            Column::Lc => "lc",
        }
    }

    pub fn measure(self) -> Measure {
        match self {
            Column::Dg => Measure::Dg,
            Column::Cl => Measure::Cl,
            Column::Bc => Measure::Bc,
            Column::HitsAuthority | Column::HitsHub => Measure::Hits,
            Column::Pr => Measure::Pr,
            Column::Ec => Measure::Ec,
            Column::Cc => Measure::Cc,
            Column::Lc => Measure::Lc,
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = CentralityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        if let Some(c) = Column::ALL.iter().find(|c| c.name() == lower) {
            return Ok(*c);
        }
        // Ranking by a measure name means its first column.
        let m: Measure = lower.parse()?;
        Ok(m.columns()[0])
    }
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    1000
}
fn default_damping() -> f64 {
    0.85
}
fn default_cap() -> usize {
    20_000
}
fn default_measures() -> Vec<Measure> {
    Measure::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityConfig {
    #[serde(default = "default_measures")]
    pub measures: Vec<Measure>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    /// Largest component handled by dense communicability.
    #[serde(default = "default_cap")]
    pub cc_node_cap: usize,
    #[serde(default)]
    pub cc_method: CommunicabilityMethod,
}

impl Default for CentralityConfig {
    fn default() -> Self {
        CentralityConfig {
            measures: default_measures(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            damping: default_damping(),
            cc_node_cap: default_cap(),
            cc_method: CommunicabilityMethod::Dense,
        }
    }
}

/// How one measure went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureProvenance {
    pub measure: Measure,
    /// Iterations used by iterative methods.
    pub iterations: Option<usize>,
    /// Wall-clock time. Not part of any persisted artifact unless asked for.
    #[serde(skip)]
    pub elapsed: Duration,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable<T> {
    nodes: Vec<NodeId>,
    columns: BTreeMap<Column, Vec<T>>,
    provenance: Vec<MeasureProvenance>,
}

type Computed<T> = Result<(Vec<(Column, Vec<T>)>, Option<usize>), CentralityError>;

fn compute_one<T: Scalar>(g: &SocialGraph, m: Measure, cfg: &CentralityConfig) -> Computed<T> {
    let tol = T::lit(cfg.tol);
    Ok(match m {
        Measure::Dg => (vec![(Column::Dg, degree_centrality(g))], None),
        Measure::Cl => (vec![(Column::Cl, closeness_centrality(g))], None),
        Measure::Bc => (vec![(Column::Bc, betweenness_centrality(g))], None),
        Measure::Lc => (vec![(Column::Lc, load_centrality(g))], None),
        Measure::Hits => {
            let h = hits(g, tol, cfg.max_iter)?;
            (
                vec![
                    (Column::HitsAuthority, h.authority),
                    (Column::HitsHub, h.hub),
                ],
                Some(h.iterations),
            )
        }
        Measure::Pr => {
            let r = pagerank(g, T::lit(cfg.damping), tol, cfg.max_iter)?;
            (vec![(Column::Pr, r.scores)], Some(r.iterations))
        }
        Measure::Ec => {
            let r = eigenvector_centrality(g, tol, cfg.max_iter)?;
            (vec![(Column::Ec, r.scores)], Some(r.iterations))
        }
        Measure::Cc => (
            vec![(
                Column::Cc,
                communicability_centrality(g, cfg.cc_method, cfg.cc_node_cap)?,
            )],
            None,
        ),
    })
}

/// Runs the configured measures. A failing measure leaves a gap recorded in
/// the provenance; the others are still computed.
pub fn centrality_table<T: Scalar>(
    g: &SocialGraph,
    cfg: &CentralityConfig,
) -> Result<CentralityTable<T>, CentralityError> {
    if g.is_empty() {
        return Err(CentralityError::EmptyGraph);
    }
    let mut measures = cfg.measures.clone();
    measures.sort();
    measures.dedup();
    let mut columns = BTreeMap::new();
    let mut provenance = Vec::new();
    for m in measures {
        let start = Instant::now();
        let result = compute_one::<T>(g, m, cfg);
        let elapsed = start.elapsed();
        match result {
            Ok((cols, iterations)) => {
                columns.extend(cols);
                provenance.push(MeasureProvenance {
                    measure: m,
                    iterations,
                    elapsed,
                    error: None,
                });
            }
            Err(e) => {
                let iterations = match &e {
                    CentralityError::NotConverged { iterations, .. } => Some(*iterations),
                    _ => None,
                };
                provenance.push(MeasureProvenance {
                    measure: m,
                    iterations,
                    elapsed,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(CentralityTable {
        nodes: g.node_ids().to_vec(),
        columns,
        provenance,
    })
}

const PROVENANCE_PREFIX: &str = "# provenance:";
const GAP_PREFIX: &str = "# gap:";

impl<T: Scalar> CentralityTable<T> {
    /// Assembles a table from precomputed columns, all of length `nodes.len()`.
    pub fn from_columns(nodes: Vec<NodeId>, columns: BTreeMap<Column, Vec<T>>) -> Self {
        assert!(columns.values().all(|c| c.len() == nodes.len()));
        CentralityTable {
            nodes,
            columns,
            provenance: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    pub fn column(&self, c: Column) -> Option<&[T]> {
        self.columns.get(&c).map(Vec::as_slice)
    }

    pub fn columns(&self) -> impl Iterator<Item = Column> + '_ {
        self.columns.keys().copied()
    }

    pub fn get(&self, id: NodeId, c: Column) -> Option<T> {
        Some(self.column(c)?[self.index_of(id)?])
    }

    pub fn provenance(&self) -> &[MeasureProvenance] {
        &self.provenance
    }

    /// Measures that failed, with their error text.
    pub fn gaps(&self) -> impl Iterator<Item = (Measure, &str)> {
        self.provenance
            .iter()
            .filter_map(|p| p.error.as_deref().map(|e| (p.measure, e)))
    }

    pub fn is_partial(&self) -> bool {
        self.gaps().next().is_some()
    }

    /// The eight-feature vector of the node at `index`, or `None` if any
    /// feature column is missing.
    pub fn features(&self, index: usize) -> Option<[T; 8]> {
        let mut out = [T::zero(); 8];
        for (slot, c) in out.iter_mut().zip(Column::FEATURES) {
            *slot = self.column(c)?[index];
        }
        Some(out)
    }

    /// Checks the range and normalization contracts of every present column.
    pub fn check_invariants(&self) -> Result<(), String> {
        let tol = T::lit(1e-6);
        let eps = T::lit(1e-9);
        let unit = |c: Column| -> Result<(), String> {
            if let Some(v) = self.column(c) {
                let norm = v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
                if (norm - T::one()).abs() > tol {
                    return Err(format!("{c} has norm {norm}"));
                }
            }
            Ok(())
        };
        for c in [Column::Dg, Column::Cl, Column::Bc, Column::Lc] {
            if let Some(v) = self.column(c) {
                if let Some(x) = v.iter().find(|&&x| x < -eps || x > T::one() + eps) {
                    return Err(format!("{c} value {x} outside [0,1]"));
                }
            }
        }
        if let Some(v) = self.column(Column::Pr) {
            let s = v.iter().fold(T::zero(), |a, &x| a + x);
            if (s - T::one()).abs() > tol {
                return Err(format!("pr sums to {s}"));
            }
        }
        unit(Column::HitsAuthority)?;
        unit(Column::HitsHub)?;
        unit(Column::Ec)?;
        if let Some(v) = self.column(Column::Cc) {
            if let Some(x) = v.iter().find(|&&x| x < T::one() - tol) {
                return Err(format!("cc value {x} below 1"));
            }
        }
        Ok(())
    }

    /// CSV with one row per node and a comment footer recording provenance
    /// and gaps. Wall-clock times are included only when `timings` is set.
    pub fn to_csv(&self, timings: bool) -> String {
        let cols: Vec<Column> = self.columns().collect();
        let mut out = String::from("node");
        for c in &cols {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for (i, id) in self.nodes.iter().enumerate() {
            out.push_str(&id.to_string());
            for c in &cols {
                out.push(',');
                out.push_str(&self.columns[c][i].to_string());
            }
            out.push('\n');
        }
        for p in &self.provenance {
            out.push_str(&format!("{PROVENANCE_PREFIX} {}", p.measure));
            match p.error {
                None => out.push_str(" ok"),
                Some(_) => out.push_str(" failed"),
            }
            if let Some(it) = p.iterations {
                out.push_str(&format!(" iterations={it}"));
            }
            if timings {
                out.push_str(&format!(" elapsed_ms={:.3}", p.elapsed.as_secs_f64() * 1e3));
            }
            out.push('\n');
        }
        for (m, e) in self.gaps() {
            out.push_str(&format!("{GAP_PREFIX} {m}: {e}\n"));
        }
        out
    }

    /// Reads a table written by [`CentralityTable::to_csv`]. Provenance lines
    /// are restored without timings; other comment lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self, CentralityError> {
        let perr = |line: usize, msg: String| CentralityError::Parse { line, msg };
        let mut header: Option<Vec<Column>> = None;
        let mut nodes = Vec::new();
        let mut data: Vec<Vec<T>> = Vec::new();
        let mut provenance = Vec::new();
        let mut gaps: BTreeMap<Measure, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix(PROVENANCE_PREFIX) {
                let mut parts = rest.split_whitespace();
                let m: Measure = parts
                    .next()
                    .ok_or_else(|| perr(line_no, "empty provenance".into()))?
                    .parse()?;
                let mut iterations = None;
                for p in parts {
                    if let Some(v) = p.strip_prefix("iterations=") {
                        iterations = Some(
                            v.parse()
                                .map_err(|_| perr(line_no, format!("bad count `{v}`")))?,
                        );
                    }
                }
                provenance.push(MeasureProvenance {
                    measure: m,
                    iterations,
                    elapsed: Duration::ZERO,
                    error: None,
                });
                continue;
            }
            if let Some(rest) = line.strip_prefix(GAP_PREFIX) {
                let (m, e) = rest
                    .split_once(':')
                    .ok_or_else(|| perr(line_no, "malformed gap line".into()))?;
                gaps.insert(m.trim().parse()?, e.trim().to_string());
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match &header {
                None => {
                    if fields.first() != Some(&"node") {
                        return Err(perr(line_no, "expected header starting with `node`".into()));
                    }
                    let cols = fields[1..]
                        .iter()
                        .map(|f| f.parse::<Column>())
                        .collect::<Result<Vec<_>, _>>()?;
                    data = vec![Vec::new(); cols.len()];
                    header = Some(cols);
                }
                Some(cols) => {
                    if fields.len() != cols.len() + 1 {
                        return Err(perr(line_no, format!("expected {} fields", cols.len() + 1)));
                    }
                    let id: u64 = fields[0]
                        .parse()
                        .map_err(|_| perr(line_no, format!("bad node id `{}`", fields[0])))?;
                    nodes.push(NodeId(id));
                    for (col, f) in data.iter_mut().zip(&fields[1..]) {
                        let x: f64 = f
                            .parse()
                            .map_err(|_| perr(line_no, format!("bad number `{f}`")))?;
                        col.push(T::lit(x));
                    }
                }
            }
        }
        let cols = header.ok_or_else(|| perr(0, "missing header".into()))?;
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(perr(0, "node ids must be strictly ascending".into()));
        }
        for p in provenance.iter_mut() {
            p.error = gaps.remove(&p.measure);
        }
        Ok(CentralityTable {
            nodes,
            columns: cols.into_iter().zip(data).collect(),
            provenance,
        })
    }
}
