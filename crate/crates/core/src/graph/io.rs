//! Graph file formats.
//!
//! **Edge list.** One edge per line as two whitespace-separated integer ids.
//! Blank lines are ignored. A line starting with `# nodes:` declares the ids
//! that follow on the same line as nodes (used for isolated nodes); any other
//! line starting with `#` is a comment. Duplicate edges are merged; self-loops
//! are rejected.
//!
//! **Profile file.** One record per line, tab-separated `key=value` fields.
//! Keys: `id` (required), `name`, `employers` (`|`-separated), `position`,
//! `location`, `is_org_member`, `is_manager`, `discloses_position`. Values
//! escape `\\`, tab (`\t`), newline (`\n`) and `|` (`\|`) with a backslash.
//!
//! **GraphML** for external viewers, **DOT**, and **CSV tables**
//! (`nodes.csv`, `edges.csv`) are export targets; GraphML also loads back.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{GraphBuilder, GraphError, NodeId, Profile, SocialGraph};

fn read_file(path: &Path) -> Result<String, GraphError> {
    std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_id(tok: &str, line: usize) -> Result<NodeId, GraphError> {
    tok.parse::<u64>()
        .map(NodeId)
        .map_err(|_| GraphError::Parse {
            line,
            msg: format!("invalid node id `{tok}`"),
        })
}

/// Parses edge-list text into a builder so profiles can be attached.
pub fn parse_edge_list(text: &str) -> Result<GraphBuilder, GraphError> {
    let mut b = GraphBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(ids) = rest.trim_start().strip_prefix("nodes:") {
                for tok in ids.split_whitespace() {
                    b.add_node(parse_id(tok, line_no)?);
                }
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected two node ids, found {} fields", toks.len()),
            });
        }
        let u = parse_id(toks[0], line_no)?;
        let v = parse_id(toks[1], line_no)?;
        if u == v {
            return Err(GraphError::SelfLoop {
                id: u,
                line: Some(line_no),
            });
        }
        b.add_edge(u, v)?;
    }
    Ok(b)
}

pub fn parse_graph(edge_text: &str, profile_text: Option<&str>) -> Result<SocialGraph, GraphError> {
    let mut b = parse_edge_list(edge_text)?;
    if let Some(pt) = profile_text {
        for p in parse_profiles(pt)? {
            if !b.contains(p.id) {
                return Err(GraphError::DanglingProfile(p.id));
            }
            b.add_profile(p)?;
        }
    }
    Ok(b.build())
}

pub fn load_graph(edge_list: &Path, profiles: Option<&Path>) -> Result<SocialGraph, GraphError> {
    let edges = read_file(edge_list)?;
    let profile_text = profiles.map(read_file).transpose()?;
    parse_graph(&edges, profile_text.as_deref())
}

pub fn write_edge_list(g: &SocialGraph) -> String {
    let mut out = String::new();
    let isolated: Vec<NodeId> = (0..g.node_count())
        .filter(|&i| g.degree(i) == 0)
        .map(|i| g.id_at(i))
        .collect();
    for chunk in isolated.chunks(16) {
        out.push_str("# nodes:");
        for id in chunk {
            let _ = write!(out, " {id}");
        }
        out.push('\n');
    }
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

fn escape_value(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '|' => out.push_str("\\|"),
            c => out.push(c),
        }
    }
    out
}

/// Splits on unescaped `sep` and unescapes each piece.
fn split_unescape(s: &str, sep: Option<char>) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('t') => parts.last_mut().unwrap().push('\t'),
                Some('n') => parts.last_mut().unwrap().push('\n'),
                Some(other) => parts.last_mut().unwrap().push(other),
                None => parts.last_mut().unwrap().push('\\'),
            },
            c if Some(c) == sep => parts.push(String::new()),
            c => parts.last_mut().unwrap().push(c),
        }
    }
    parts
}

fn parse_bool(v: &str, line: usize, key: &str) -> Result<bool, GraphError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(GraphError::Parse {
            line,
            msg: format!("`{key}` expects a boolean, got `{v}`"),
        }),
    }
}

pub fn parse_profiles(text: &str) -> Result<Vec<Profile>, GraphError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut p = Profile::default();
        let mut has_id = false;
        for field in raw.split('\t') {
            let (key, val) = field.split_once('=').ok_or_else(|| GraphError::Parse {
                line: line_no,
                msg: format!("field `{field}` is not key=value"),
            })?;
            match key {
                "id" => {
                    p.id = parse_id(val, line_no)?;
                    has_id = true;
                }
                "name" => p.name = Some(split_unescape(val, None).remove(0)),
                "employers" => {
                    p.employers = if val.is_empty() {
                        Vec::new()
                    } else {
                        split_unescape(val, Some('|'))
                    }
                }
                "position" => p.position = Some(split_unescape(val, None).remove(0)),
                "location" => p.location = Some(split_unescape(val, None).remove(0)),
                "is_org_member" => p.is_org_member = Some(parse_bool(val, line_no, key)?),
                "is_manager" => p.is_manager = Some(parse_bool(val, line_no, key)?),
                "discloses_position" => p.discloses_position = parse_bool(val, line_no, key)?,
                other => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: format!("unknown profile key `{other}`"),
                    })
                }
            }
        }
        if !has_id {
            return Err(GraphError::Parse {
                line: line_no,
                msg: "record without `id`".into(),
            });
        }
        p.validate()?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_profile(p: &Profile) -> String {
    let mut fields = vec![format!("id={}", p.id)];
    if let Some(n) = &p.name {
        fields.push(format!("name={}", escape_value(n)));
    }
    if !p.employers.is_empty() {
        let joined: Vec<String> = p.employers.iter().map(|e| escape_value(e)).collect();
        fields.push(format!("employers={}", joined.join("|")));
    }
    if let Some(v) = &p.position {
        fields.push(format!("position={}", escape_value(v)));
    }
    if let Some(v) = &p.location {
        fields.push(format!("location={}", escape_value(v)));
    }
    if let Some(v) = p.is_org_member {
        fields.push(format!("is_org_member={v}"));
    }
    if let Some(v) = p.is_manager {
        fields.push(format!("is_manager={v}"));
    }
    fields.push(format!("discloses_position={}", p.discloses_position));
    fields.join("\t")
}

pub fn write_profiles(g: &SocialGraph) -> String {
    let mut out = String::new();
    for p in g.profiles() {
        out.push_str(&write_profile(p));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    EdgeList,
    GraphMl,
    Dot,
    CsvTables,
}

impl FromStr for ExportFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "edge-list" | "edgelist" | "edges" => Ok(ExportFormat::EdgeList),
            "graphml" | "attributed-graph-markup" => Ok(ExportFormat::GraphMl),
            "dot" => Ok(ExportFormat::Dot),
            "csv" | "csv-tables" => Ok(ExportFormat::CsvTables),
            other => Err(GraphError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn export_graph(g: &SocialGraph, format: ExportFormat) -> Vec<ExportedFile> {
    match format {
        ExportFormat::EdgeList => vec![ExportedFile {
            name: "graph.edges".into(),
            bytes: write_edge_list(g).into_bytes(),
        }],
        ExportFormat::GraphMl => vec![ExportedFile {
            name: "graph.graphml".into(),
            bytes: write_graphml(g).into_bytes(),
        }],
        ExportFormat::Dot => vec![ExportedFile {
            name: "graph.dot".into(),
            bytes: write_dot(g).into_bytes(),
        }],
        ExportFormat::CsvTables => {
            let (nodes, edges) = write_csv_tables(g);
            vec![
                ExportedFile {
                    name: "nodes.csv".into(),
                    bytes: nodes.into_bytes(),
                },
                ExportedFile {
                    name: "edges.csv".into(),
                    bytes: edges.into_bytes(),
                },
            ]
        }
    }
}

const PROFILE_STRING_KEYS: [&str; 4] = ["name", "employers", "position", "location"];
const PROFILE_BOOL_KEYS: [&str; 4] = [
    "has_profile",
    "is_org_member",
    "is_manager",
    "discloses_position",
];

fn attr_keys(g: &SocialGraph) -> Vec<String> {
    let mut keys: Vec<String> = g
        .node_ids()
        .iter()
        .filter_map(|id| g.attrs(*id))
        .flat_map(|m| m.keys().cloned())
        .collect();
    keys.sort();
    keys.dedup();
    keys
}

fn xml(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

pub fn write_graphml(g: &SocialGraph) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for k in PROFILE_STRING_KEYS {
        let _ = writeln!(
            out,
            "  <key id=\"p_{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"string\"/>"
        );
    }
    for k in PROFILE_BOOL_KEYS {
        let _ = writeln!(
            out,
            "  <key id=\"p_{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"boolean\"/>"
        );
    }
    for k in attr_keys(g) {
        let k = xml(&k);
        let _ = writeln!(
            out,
            "  <key id=\"a_{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"string\"/>"
        );
    }
    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for &id in g.node_ids() {
        let mut data = Vec::new();
        if let Some(p) = g.profile(id) {
            data.push(("p_has_profile".to_string(), "true".to_string()));
            if let Some(v) = &p.name {
                data.push(("p_name".into(), v.clone()));
            }
            if !p.employers.is_empty() {
                let joined: Vec<String> = p.employers.iter().map(|e| escape_value(e)).collect();
                data.push(("p_employers".into(), joined.join("|")));
            }
            if let Some(v) = &p.position {
                data.push(("p_position".into(), v.clone()));
            }
            if let Some(v) = &p.location {
                data.push(("p_location".into(), v.clone()));
            }
            if let Some(v) = p.is_org_member {
                data.push(("p_is_org_member".into(), v.to_string()));
            }
            if let Some(v) = p.is_manager {
                data.push(("p_is_manager".into(), v.to_string()));
            }
            data.push((
                "p_discloses_position".into(),
                p.discloses_position.to_string(),
            ));
        }
        if let Some(attrs) = g.attrs(id) {
            for (k, v) in attrs {
                data.push((format!("a_{k}"), v.clone()));
            }
        }
        if data.is_empty() {
            let _ = writeln!(out, "    <node id=\"n{id}\"/>");
        } else {
            let _ = writeln!(out, "    <node id=\"n{id}\">");
            for (k, v) in data {
                let _ = writeln!(out, "      <data key=\"{}\">{}</data>", xml(&k), xml(&v));
            }
            out.push_str("    </node>\n");
        }
    }
    for (u, v) in g.edges() {
        let _ = writeln!(out, "    <edge source=\"n{u}\" target=\"n{v}\"/>");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn markup_err(e: impl std::fmt::Display) -> GraphError {
    GraphError::Markup(e.to_string())
}

fn parse_node_ref(s: &str) -> Result<NodeId, GraphError> {
    s.strip_prefix('n')
        .unwrap_or(s)
        .parse::<u64>()
        .map(NodeId)
        .map_err(|_| GraphError::Markup(format!("node id `{s}` is not numeric")))
}

/// Reads GraphML written by [`write_graphml`] (and compatible simple files).
pub fn parse_graphml(text: &str) -> Result<SocialGraph, GraphError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);

    let mut key_names: BTreeMap<String, String> = BTreeMap::new();
    let mut b = GraphBuilder::new();
    let mut node_data: BTreeMap<NodeId, Vec<(String, String)>> = BTreeMap::new();
    let mut current_node: Option<NodeId> = None;
    let mut current_key: Option<String> = None;
    let mut text_buf = String::new();

    loop {
        let ev = reader.read_event().map_err(markup_err)?;
        match ev {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(ev, Event::Empty(_));
                let mut attrs = BTreeMap::new();
                for a in e.attributes() {
                    let a = a.map_err(markup_err)?;
                    let k = String::from_utf8_lossy(a.key.as_ref()).into_owned();
                    let v = a.unescape_value().map_err(markup_err)?.into_owned();
                    attrs.insert(k, v);
                }
                match e.name().as_ref() {
                    b"key" => {
                        if let (Some(id), Some(name)) = (attrs.get("id"), attrs.get("attr.name")) {
                            key_names.insert(id.clone(), name.clone());
                        }
                    }
                    b"node" => {
                        let id = parse_node_ref(
                            attrs
                                .get("id")
                                .ok_or_else(|| markup_err("node without id"))?,
                        )?;
                        b.add_node(id);
                        if !is_empty {
                            current_node = Some(id);
                        }
                    }
                    b"edge" => {
                        let s = parse_node_ref(
                            attrs
                                .get("source")
                                .ok_or_else(|| markup_err("edge without source"))?,
                        )?;
                        let t = parse_node_ref(
                            attrs
                                .get("target")
                                .ok_or_else(|| markup_err("edge without target"))?,
                        )?;
                        b.add_edge(s, t)?;
                    }
                    b"data" => {
                        if is_empty {
                            if let (Some(n), Some(k)) = (current_node, attrs.get("key")) {
                                node_data
                                    .entry(n)
                                    .or_default()
                                    .push((k.clone(), String::new()));
                            }
                        } else {
                            current_key = attrs.get("key").cloned();
                            text_buf.clear();
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if current_key.is_some() {
                    text_buf.push_str(&t.unescape().map_err(markup_err)?);
                }
            }
            Event::CData(t) => {
                if current_key.is_some() {
                    text_buf.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"data" => {
                    if let (Some(n), Some(k)) = (current_node, current_key.take()) {
                        node_data
                            .entry(n)
                            .or_default()
                            .push((k, std::mem::take(&mut text_buf)));
                    }
                }
                b"node" => current_node = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    for (id, data) in node_data {
        let mut profile: Option<Profile> = None;
        for (key, value) in data {
            if let Some(field) = key.strip_prefix("p_") {
                let p = profile.get_or_insert_with(|| Profile::new(id));
                let as_bool = || -> Result<bool, GraphError> {
                    value.parse::<bool>().map_err(|_| {
                        GraphError::Markup(format!("`{field}` on node {id} is not boolean"))
                    })
                };
                match field {
                    "has_profile" => {}
                    "name" => p.name = Some(value.clone()),
                    "employers" => p.employers = split_unescape(&value, Some('|')),
                    "position" => p.position = Some(value.clone()),
                    "location" => p.location = Some(value.clone()),
                    "is_org_member" => p.is_org_member = Some(as_bool()?),
                    "is_manager" => p.is_manager = Some(as_bool()?),
                    "discloses_position" => p.discloses_position = as_bool()?,
                    _ => {}
                }
            } else {
                let name = key_names
                    .get(&key)
                    .cloned()
                    .unwrap_or_else(|| key.strip_prefix("a_").unwrap_or(&key).to_string());
                b.set_attr(id, name, value);
            }
        }
        if let Some(p) = profile {
            b.add_profile(p)?;
        }
    }
    Ok(b.build())
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn write_dot(g: &SocialGraph) -> String {
    let mut out = String::from("graph G {\n");
    for &id in g.node_ids() {
        let mut attrs: Vec<(String, String)> = Vec::new();
        if let Some(m) = g.profile(id).and_then(|p| p.is_manager) {
            attrs.push(("manager".into(), m.to_string()));
            attrs.push(("shape".into(), if m { "triangle" } else { "box" }.into()));
        }
        if let Some(map) = g.attrs(id) {
            for (k, v) in map {
                attrs.push((k.clone(), v.clone()));
            }
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "  {id};");
        } else {
            let list: Vec<String> = attrs
                .iter()
                .map(|(k, v)| format!("{}={}", dot_quote(k), dot_quote(v)))
                .collect();
            let _ = writeln!(out, "  {id} [{}];", list.join(", "));
        }
    }
    for (u, v) in g.edges() {
        let _ = writeln!(out, "  {u} -- {v};");
    }
    out.push_str("}\n");
    out
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(fields).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("flush in-memory csv")).expect("utf-8 fields")
}

/// `nodes.csv` (one row per node with profile fields and attributes) and
/// `edges.csv` (`source,target`).
pub fn write_csv_tables(g: &SocialGraph) -> (String, String) {
    let keys = attr_keys(g);
    let mut header: Vec<String> = [
        "node",
        "degree",
        "name",
        "employers",
        "position",
        "location",
        "is_org_member",
        "is_manager",
        "discloses_position",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(keys.iter().cloned());
    let mut nodes = csv_line(&header);
    let opt = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
    for (i, &id) in g.node_ids().iter().enumerate() {
        let p = g.profile(id);
        let mut row = vec![
            id.to_string(),
            g.degree(i).to_string(),
            p.and_then(|p| p.name.clone()).unwrap_or_default(),
            p.map(|p| p.employers.join("|")).unwrap_or_default(),
            p.and_then(|p| p.position.clone()).unwrap_or_default(),
            p.and_then(|p| p.location.clone()).unwrap_or_default(),
            opt(p.and_then(|p| p.is_org_member)),
            opt(p.and_then(|p| p.is_manager)),
            p.map(|p| p.discloses_position.to_string())
                .unwrap_or_default(),
        ];
        for k in &keys {
            row.push(g.attr(id, k).unwrap_or_default().to_string());
        }
        nodes.push_str(&csv_line(&row));
    }
    let mut edges = String::from("source,target\n");
    for (u, v) in g.edges() {
        let _ = writeln!(edges, "{u},{v}");
    }
    (nodes, edges)
}
