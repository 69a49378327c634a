use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CommunityError, Partition};
use crate::graph::{LabelTable, SocialGraph};
use crate::scalar::Scalar;

const DEFAULT_CATEGORIES: &str = include_str!("categories.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub keywords: Vec<String>,
}

/// Ordered keyword-to-category mapping for position strings. The first
/// category with a keyword phrase occurring as whole words wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMap {
    #[serde(rename = "category")]
    pub categories: Vec<Category>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CATEGORIES).expect("embedded category map parses")
    }
}

fn tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '&'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

impl CategoryMap {
    pub fn from_toml(text: &str) -> Result<Self, CommunityError> {
        let map: CategoryMap =
            toml::from_str(text).map_err(|e| CommunityError::Categories(e.to_string()))?;
        if map.categories.is_empty() {
            return Err(CommunityError::Categories("no categories defined".into()));
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, CommunityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CommunityError::Categories(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("category map serializes")
    }

    pub fn classify(&self, position: &str) -> Option<&str> {
        let words = tokens(position);
        self.categories
            .iter()
            .find(|c| {
                c.keywords.iter().any(|k| {
                    let phrase = tokens(k);
                    !phrase.is_empty()
                        && words.windows(phrase.len()).any(|w| w == phrase.as_slice())
                })
            })
            .map(|c| c.name.as_str())
    }
}

fn default_min_support() -> f64 {
    0.3
}

fn default_min_labeled() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleConfig {
    #[serde(default = "default_min_support")]
    pub min_support: f64,
    #[serde(default = "default_min_labeled")]
    pub min_labeled: usize,
    #[serde(skip, default)]
    pub categories: CategoryMap,
}

impl Default for RoleConfig {
    fn default() -> Self {
        RoleConfig {
            min_support: default_min_support(),
            min_labeled: default_min_labeled(),
            categories: CategoryMap::default(),
        }
    }
}

/// Majority vote outcome: `count` of the `labeled` voters chose `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub label: String,
    pub count: usize,
    pub labeled: usize,
    pub support: f64,
}

impl Vote {
    fn passes(&self, cfg: &RoleConfig) -> bool {
        self.labeled >= cfg.min_labeled && self.support >= cfg.min_support
    }
}

fn majority<'a>(values: impl Iterator<Item = &'a str>) -> Option<Vote> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let labeled: usize = counts.values().sum();
    // Ascending label order; the first maximum wins.
    let (label, count) = counts
        .iter()
        .fold(None, |best: Option<(&str, usize)>, (&l, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((l, c)),
        })?;
    Some(Vote {
        label: label.to_string(),
        count,
        labeled,
        support: count as f64 / labeled as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityRole {
    pub community: usize,
    pub size: usize,
    pub internal_links: usize,
    /// Members whose profile discloses a position.
    pub with_position: usize,
    /// Members with a manager/non-manager label.
    pub classified: usize,
    pub managers: usize,
    pub position: Option<Vote>,
    pub location: Option<Vote>,
    /// Whether the position vote met both thresholds.
    pub confident: bool,
    /// `"<category> / <location>"`, or just the category when the location
    /// vote is inconclusive. `None` when not confident.
    pub role: Option<String>,
}

fn internal_links<T: Scalar>(g: &SocialGraph, p: &Partition<T>) -> Vec<usize> {
    let mut links = vec![0; p.community_count()];
    for (u, v) in g.edges() {
        let (cu, cv) = (p.community_of(u), p.community_of(v));
        if cu == cv {
            if let Some(c) = cu {
                links[c] += 1;
            }
        }
    }
    links
}

/// Votes each community's role from its members' position categories and
/// locations. Communities without a conclusive position vote are flagged
/// rather than assigned a role.
pub fn infer_roles<T: Scalar>(
    g: &SocialGraph,
    partition: &Partition<T>,
    labels: Option<&LabelTable>,
    cfg: &RoleConfig,
) -> Vec<CommunityRole> {
    let links = internal_links(g, partition);
    partition
        .communities()
        .into_iter()
        .enumerate()
        .map(|(c, members)| {
            let profiles: Vec<_> = members.iter().filter_map(|id| g.profile(*id)).collect();
            let position = majority(
                profiles
                    .iter()
                    .filter_map(|p| p.position.as_deref())
                    .filter_map(|pos| cfg.categories.classify(pos)),
            );
            let location = majority(profiles.iter().filter_map(|p| p.location.as_deref()));
            let classified = match labels {
                Some(l) => members.iter().filter(|id| l.get(**id).is_some()).count(),
                None => profiles.iter().filter(|p| p.is_manager.is_some()).count(),
            };
            let managers = match labels {
                Some(l) => members
                    .iter()
                    .filter(|id| l.is_manager(**id) == Some(true))
                    .count(),
                None => profiles
                    .iter()
                    .filter(|p| p.is_manager == Some(true))
                    .count(),
            };
            let confident = position.as_ref().is_some_and(|v| v.passes(cfg));
            let role = confident.then(|| {
                let cat = &position.as_ref().expect("confident implies a vote").label;
                match location.as_ref().filter(|v| v.passes(cfg)) {
                    Some(loc) => format!("{cat} / {}", loc.label),
                    None => cat.clone(),
                }
            });
            CommunityRole {
                community: c,
                size: members.len(),
                internal_links: links[c],
                with_position: profiles.iter().filter(|p| p.position.is_some()).count(),
                classified,
                managers,
                position,
                location,
                confident,
                role,
            }
        })
        .collect()
}

/// One row of the community summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub community: usize,
    pub users: usize,
    pub links: usize,
    pub with_position: usize,
    pub classified: usize,
    pub managers: usize,
    pub description: String,
}

/// Summary rows, counting sizes and internal links afresh from the graph.
pub fn community_report<T: Scalar>(
    g: &SocialGraph,
    partition: &Partition<T>,
    roles: &[CommunityRole],
) -> Vec<ReportRow> {
    let links = internal_links(g, partition);
    let by_id: BTreeMap<usize, &CommunityRole> = roles.iter().map(|r| (r.community, r)).collect();
    partition
        .communities()
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let role = by_id.get(&c);
            ReportRow {
                community: c,
                users: members.len(),
                links: links[c],
                with_position: role.map_or(0, |r| r.with_position),
                classified: role.map_or(0, |r| r.classified),
                managers: role.map_or(0, |r| r.managers),
                description: match role {
                    Some(r) => r.role.clone().unwrap_or_else(|| {
                        let n = r.position.as_ref().map_or(0, |v| v.labeled);
                        format!("low confidence ({n} categorized positions)")
                    }),
                    None => "no role inferred".into(),
                },
            }
        })
        .collect()
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is UTF-8")
}
