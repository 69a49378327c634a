//! Synthetic social worlds with planted organizations.
//!
//! Each organization is a planted-partition block inside a background
//! population. Members name the organization among their employers,
//! managers get extra within-community edges, and a fraction of members
//! disclose a position. The generated graph is served through
//! [`FetchSource`] exactly like a crawl target would be.

mod source;

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphBuilder, NodeId, Profile, SocialGraph};
use crate::util::{fraction_count, largest_remainder, sha256_hex};

pub use source::{FetchError, FetchSource, FetchedPage, GraphSource};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("infeasible world: {0}")]
    Infeasible(String),
    #[error("world spec: {0}")]
    Config(String),
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const DEFAULT_DEPARTMENTS: [&str; 6] = [
    "R&D",
    "Sales",
    "Marketing",
    "Support",
    "Finance",
    "Operations",
];

fn default_departments() -> Vec<String> {
    DEFAULT_DEPARTMENTS.iter().map(|s| s.to_string()).collect()
}

fn default_locations() -> Vec<String> {
    vec!["Headquarters".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrgSpec {
    pub name_keywords: Vec<String>,
    pub size: usize,
    #[serde(default = "one")]
    pub community_count: usize,
    pub intra_community_edge_prob: f64,
    #[serde(default)]
    pub inter_community_edge_prob: f64,
    #[serde(default)]
    pub manager_fraction: f64,
    #[serde(default = "one_f")]
    pub manager_degree_boost: f64,
    #[serde(default)]
    pub position_disclosure_rate: f64,
    /// Planted location per community, cycled when shorter than the
    /// community count.
    #[serde(default = "default_locations")]
    pub location_labels: Vec<String>,
    /// Planted department per community, cycled like locations.
    #[serde(default = "default_departments")]
    pub department_labels: Vec<String>,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl OrgSpec {
    pub fn new(keyword: &str, size: usize, intra: f64) -> Self {
        OrgSpec {
            name_keywords: vec![keyword.to_string()],
            size,
            community_count: 1,
            intra_community_edge_prob: intra,
            inter_community_edge_prob: 0.0,
            manager_fraction: 0.0,
            manager_degree_boost: 1.0,
            position_disclosure_rate: 0.0,
            location_labels: default_locations(),
            department_labels: default_departments(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub total_population: usize,
    #[serde(default)]
    pub orgs: Vec<OrgSpec>,
    #[serde(default)]
    pub background_edge_prob: f64,
    #[serde(default)]
    pub cross_boundary_edge_prob: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn check_prob(name: &str, p: f64) -> Result<(), WorldError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(WorldError::Config(format!(
            "{name} = {p} is outside [0, 1]"
        )))
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<(), WorldError> {
        let total: usize = self.orgs.iter().map(|o| o.size).sum();
        if total > self.total_population {
            return Err(WorldError::Infeasible(format!(
                "organizations need {total} members but the population is {}",
                self.total_population
            )));
        }
        check_prob("background_edge_prob", self.background_edge_prob)?;
        check_prob("cross_boundary_edge_prob", self.cross_boundary_edge_prob)?;
        for (i, o) in self.orgs.iter().enumerate() {
            let ctx = |f: &str| format!("orgs[{i}].{f}");
            check_prob(
                &ctx("intra_community_edge_prob"),
                o.intra_community_edge_prob,
            )?;
            check_prob(
                &ctx("inter_community_edge_prob"),
                o.inter_community_edge_prob,
            )?;
            check_prob(&ctx("manager_fraction"), o.manager_fraction)?;
            check_prob(&ctx("position_disclosure_rate"), o.position_disclosure_rate)?;
            if o.name_keywords.iter().all(|k| k.trim().is_empty()) {
                return Err(WorldError::Config(format!(
                    "{} is empty",
                    ctx("name_keywords")
                )));
            }
            if o.community_count == 0 || o.community_count > o.size.max(1) {
                return Err(WorldError::Infeasible(format!(
                    "{} = {} does not fit size {}",
                    ctx("community_count"),
                    o.community_count,
                    o.size
                )));
            }
            if o.intra_community_edge_prob < o.inter_community_edge_prob {
                return Err(WorldError::Config(format!(
                    "orgs[{i}]: intra-community probability below inter-community probability"
                )));
            }
            if !(o.manager_degree_boost >= 1.0) {
                return Err(WorldError::Config(format!(
                    "{} must be >= 1",
                    ctx("manager_degree_boost")
                )));
            }
            if o.location_labels.is_empty() || o.department_labels.is_empty() {
                return Err(WorldError::Config(format!(
                    "orgs[{i}]: location and department label lists must be non-empty"
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, WorldError> {
        toml::from_str(text).map_err(|e| WorldError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path).map_err(|source| WorldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world spec serializes")
    }

    /// Stable identity of the world this spec generates.
    pub fn fingerprint(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("spec serializes")
                .as_bytes(),
        )
    }
}

/// Ground truth for one node of a generated world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub node: NodeId,
    /// Index into `WorldSpec::orgs`.
    pub org: Option<usize>,
    pub is_manager: bool,
    /// Community index within the organization.
    pub community: Option<usize>,
    pub department: Option<String>,
    pub location: Option<String>,
    pub discloses_position: bool,
}

#[derive(Debug, Clone)]
pub struct World {
    pub spec: WorldSpec,
    pub graph: SocialGraph,
    /// One row per node, indexed by node id.
    pub truth: Vec<TruthRow>,
}

const FILLER_EMPLOYERS: [&str; 12] = [
    "Globex",
    "Initech",
    "Umbrella Logistics",
    "Hooli",
    "Vandelay Industries",
    "Soylent Foods",
    "Wonka Confections",
    "Cyberdyne Systems",
    "Tyrell Group",
    "Gringotts Bank",
    "Duff Brewing",
    "Stark Freight",
];

const FILLER_TITLES: [&str; 6] = [
    "Teacher",
    "Nurse",
    "Student",
    "Consultant",
    "Designer",
    "Driver",
];

const FILLER_CITIES: [&str; 6] = ["Haifa", "Berlin", "Austin", "Lyon", "Osaka", "Toronto"];

fn department_titles(dept: &str) -> Vec<String> {
    let fixed: &[&str] = match dept {
        "R&D" => &[
            "Software Engineer",
            "Software Developer",
            "Algorithm Developer",
            "QA Engineer",
        ],
        "Sales" => &["Account Executive", "Sales Representative"],
        "Marketing" => &["Marketing Specialist", "Product Marketing Associate"],
        "Support" => &["Customer Support Specialist", "Support Technician"],
        "Finance" => &["Financial Analyst", "Accountant"],
        "Operations" => &["Operations Coordinator", "Logistics Planner"],
        _ => &[],
    };
    if fixed.is_empty() {
        vec![format!("{dept} Specialist")]
    } else {
        fixed.iter().map(|s| s.to_string()).collect()
    }
}

fn manager_titles(dept: &str) -> [String; 4] {
    [
        format!("Director of {dept}"),
        format!("VP {dept}"),
        format!("Team Lead, {dept}"),
        format!("{dept} Manager"),
    ]
}

/// Calls `emit(i, j)` for each pair `i < j` of `0..n` independently with
/// probability `p`, skipping geometrically between hits.
fn sample_within<R: Rng>(n: usize, p: f64, rng: &mut R, mut emit: impl FnMut(usize, usize)) {
    if n < 2 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for v in 1..n {
            for w in 0..v {
                emit(w, v);
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let r: f64 = rng.random();
        w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            emit(w as usize, v);
        }
    }
}

/// Calls `emit(i, j)` for each `(i, j)` in `0..a x 0..b` with probability `p`.
fn sample_between<R: Rng>(
    a: usize,
    b: usize,
    p: f64,
    rng: &mut R,
    mut emit: impl FnMut(usize, usize),
) {
    let total = (a as u128) * (b as u128);
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for i in 0..a {
            for j in 0..b {
                emit(i, j);
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut k: i128 = -1;
    loop {
        let r: f64 = rng.random();
        k += 1 + ((1.0 - r).ln() / log_q).floor() as i128;
        if k < 0 || k as u128 >= total {
            break;
        }
        let k = k as u128;
        emit((k / b as u128) as usize, (k % b as u128) as usize);
    }
}

fn normalized_contains(haystack: &str, needle: &str) -> bool {
    crate::crawler::normalize(haystack).contains(&crate::crawler::normalize(needle))
}

/// Generates the world described by `spec`. Identical specs give identical
/// worlds.
pub fn generate_world(spec: &WorldSpec) -> Result<World, WorldError> {
    spec.validate()?;
    let n = spec.total_population;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut truth: Vec<TruthRow> = (0..n)
        .map(|i| TruthRow {
            node: NodeId(i as u64),
            org: None,
            is_manager: false,
            community: None,
            department: None,
            location: None,
            discloses_position: false,
        })
        .collect();

    // members[org][community] = node indices
    let mut members: Vec<Vec<Vec<usize>>> = Vec::with_capacity(spec.orgs.len());
    let mut cursor = 0;
    for (oi, org) in spec.orgs.iter().enumerate() {
        let block = &order[cursor..cursor + org.size];
        cursor += org.size;
        let sizes = largest_remainder(org.size, &vec![1.0; org.community_count]);
        let mut comms = Vec::with_capacity(org.community_count);
        let mut off = 0;
        for (ci, &s) in sizes.iter().enumerate() {
            let nodes: Vec<usize> = block[off..off + s].to_vec();
            off += s;
            for &v in &nodes {
                truth[v].org = Some(oi);
                truth[v].community = Some(ci);
                truth[v].department =
                    Some(org.department_labels[ci % org.department_labels.len()].clone());
                truth[v].location =
                    Some(org.location_labels[ci % org.location_labels.len()].clone());
            }
            comms.push(nodes);
        }
        let total_mgrs = fraction_count(org.manager_fraction, org.size);
        let weights: Vec<f64> = comms.iter().map(|c| c.len() as f64).collect();
        let per_comm = largest_remainder(total_mgrs, &weights);
        for (ci, comm) in comms.iter().enumerate() {
            let mut pool = comm.clone();
            pool.shuffle(&mut rng);
            for &v in pool.iter().take(per_comm[ci]) {
                truth[v].is_manager = true;
            }
        }
        members.push(comms);
    }
    let outsiders: Vec<usize> = order[cursor..].to_vec();

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let add = |edges: &mut BTreeSet<(usize, usize)>, a: usize, b: usize| {
        edges.insert((a.min(b), a.max(b)));
    };

    for (oi, org) in spec.orgs.iter().enumerate() {
        let comms = &members[oi];
        for comm in comms {
            sample_within(
                comm.len(),
                org.intra_community_edge_prob,
                &mut rng,
                |i, j| add(&mut edges, comm[i], comm[j]),
            );
        }
        for c in 0..comms.len() {
            for d in c + 1..comms.len() {
                let (a, b) = (&comms[c], &comms[d]);
                sample_between(
                    a.len(),
                    b.len(),
                    org.inter_community_edge_prob,
                    &mut rng,
                    |i, j| add(&mut edges, a[i], b[j]),
                );
            }
        }
        if org.manager_degree_boost > 1.0 {
            for comm in comms {
                let s = comm.len();
                if s < 2 {
                    continue;
                }
                let base = org.intra_community_edge_prob * (s - 1) as f64;
                let extra = (org.manager_degree_boost - 1.0) * base;
                let mut mgrs: Vec<usize> = comm
                    .iter()
                    .copied()
                    .filter(|&v| truth[v].is_manager)
                    .collect();
                mgrs.sort_unstable();
                for m in mgrs {
                    let free: Vec<usize> = comm
                        .iter()
                        .copied()
                        .filter(|&u| u != m && !edges.contains(&(u.min(m), u.max(m))))
                        .collect();
                    if free.is_empty() {
                        continue;
                    }
                    let q = (extra / free.len() as f64).min(1.0);
                    for u in free {
                        if rng.random::<f64>() < q {
                            add(&mut edges, m, u);
                        }
                    }
                }
            }
        }
    }

    // Cross-boundary edges: members of org `o` against everyone outside `o`
    // not already handled (later orgs and outsiders).
    for oi in 0..spec.orgs.len() {
        let own: Vec<usize> = members[oi].iter().flatten().copied().collect();
        let mut others: Vec<usize> = members[oi + 1..]
            .iter()
            .flatten()
            .flatten()
            .copied()
            .collect();
        others.extend_from_slice(&outsiders);
        sample_between(
            own.len(),
            others.len(),
            spec.cross_boundary_edge_prob,
            &mut rng,
            |i, j| add(&mut edges, own[i], others[j]),
        );
    }
    sample_within(
        outsiders.len(),
        spec.background_edge_prob,
        &mut rng,
        |i, j| add(&mut edges, outsiders[i], outsiders[j]),
    );

    // Profiles, drawn in node order.
    let all_keywords: Vec<&str> = spec
        .orgs
        .iter()
        .flat_map(|o| o.name_keywords.iter().map(String::as_str))
        .collect();
    let fillers: Vec<&str> = FILLER_EMPLOYERS
        .iter()
        .copied()
        .filter(|f| !all_keywords.iter().any(|k| normalized_contains(f, k)))
        .collect();

    let mut b = GraphBuilder::new();
    for v in 0..n {
        let id = NodeId(v as u64);
        b.add_node(id);
        let mut p = Profile::new(id);
        p.name = Some(format!("Person {v}"));
        match truth[v].org {
            Some(oi) => {
                let org = &spec.orgs[oi];
                let kws: Vec<&String> = org
                    .name_keywords
                    .iter()
                    .filter(|k| !k.trim().is_empty())
                    .collect();
                let kw = *kws.choose(&mut rng).expect("validated non-empty");
                let employer = if rng.random::<f64>() < 0.8 {
                    kw.clone()
                } else {
                    format!("works at {kw}")
                };
                p.employers.push(employer);
                if !fillers.is_empty() && rng.random::<f64>() < 0.3 {
                    p.employers
                        .push(fillers.choose(&mut rng).unwrap().to_string());
                }
                let dept = truth[v].department.clone().unwrap_or_default();
                let title = if truth[v].is_manager {
                    manager_titles(&dept).choose(&mut rng).unwrap().clone()
                } else {
                    department_titles(&dept).choose(&mut rng).unwrap().clone()
                };
                let discloses = rng.random::<f64>() < org.position_disclosure_rate;
                if discloses {
                    p.position = Some(title);
                }
                p.discloses_position = discloses;
                truth[v].discloses_position = discloses;
                if rng.random::<f64>() < org.position_disclosure_rate {
                    p.location = truth[v].location.clone();
                }
                p.is_org_member = Some(true);
                p.is_manager = Some(truth[v].is_manager);
            }
            None => {
                if !fillers.is_empty() && rng.random::<f64>() < 0.7 {
                    p.employers
                        .push(fillers.choose(&mut rng).unwrap().to_string());
                }
                if rng.random::<f64>() < 0.3 {
                    p.position = Some(FILLER_TITLES.choose(&mut rng).unwrap().to_string());
                    p.discloses_position = true;
                    truth[v].discloses_position = true;
                }
                if rng.random::<f64>() < 0.5 {
                    p.location = Some(FILLER_CITIES.choose(&mut rng).unwrap().to_string());
                }
                p.is_org_member = Some(false);
                p.is_manager = Some(false);
            }
        }
        b.add_profile(p)
            .expect("generated profiles satisfy invariants");
    }
    for (u, v) in edges {
        b.add_edge(NodeId(u as u64), NodeId(v as u64))
            .expect("generator never emits self-loops");
    }

    Ok(World {
        spec: spec.clone(),
        graph: b.build(),
        truth,
    })
}

impl World {
    pub fn source(&self) -> GraphSource<'_> {
        GraphSource::new(&self.graph, self.spec.fingerprint())
    }

    pub fn org_members(&self, org: usize) -> Vec<NodeId> {
        self.truth
            .iter()
            .filter(|r| r.org == Some(org))
            .map(|r| r.node)
            .collect()
    }

    /// Subgraph induced on the members of `org`, with profiles attached.
    pub fn org_graph(&self, org: usize) -> SocialGraph {
        self.graph.induced_subgraph(&self.org_members(org))
    }

    pub fn truth_row(&self, id: NodeId) -> Option<&TruthRow> {
        self.truth.get(id.0 as usize)
    }

    /// Ground-truth table: `node,org,is_org_member,is_manager,community,department,location,discloses_position`.
    pub fn truth_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "node",
            "org",
            "is_org_member",
            "is_manager",
            "community",
            "department",
            "location",
            "discloses_position",
        ])
        .expect("in-memory write");
        for r in &self.truth {
            w.write_record([
                r.node.to_string(),
                r.org.map(|o| o.to_string()).unwrap_or_default(),
                r.org.is_some().to_string(),
                r.is_manager.to_string(),
                r.community.map(|c| c.to_string()).unwrap_or_default(),
                r.department.clone().unwrap_or_default(),
                r.location.clone().unwrap_or_default(),
                r.discloses_position.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Aggregate counts for one organization: members, internal links,
/// managers and how many members disclose a position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureCensus {
    pub org: usize,
    pub members: usize,
    pub links: usize,
    pub managers: usize,
    pub disclosing: usize,
    pub disclosing_pct: f64,
}

pub fn disclosure_census(world: &World) -> Vec<DisclosureCensus> {
    (0..world.spec.orgs.len())
        .map(|oi| {
            let rows: Vec<&TruthRow> = world.truth.iter().filter(|r| r.org == Some(oi)).collect();
            let members = rows.len();
            let disclosing = rows.iter().filter(|r| r.discloses_position).count();
            DisclosureCensus {
                org: oi,
                members,
                links: world.org_graph(oi).edge_count(),
                managers: rows.iter().filter(|r| r.is_manager).count(),
                disclosing,
                disclosing_pct: if members == 0 {
                    0.0
                } else {
                    100.0 * disclosing as f64 / members as f64
                },
            }
        })
        .collect()
}
