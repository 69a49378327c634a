use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GraphBuilder, NodeId, Profile, SocialGraph};

/// Bijection from original ids to anonymized ids.
pub type IdMap = BTreeMap<NodeId, NodeId>;

/// Relabels nodes with a seeded random permutation of `0..|V|` and strips
/// every free-text profile field.
///
/// With `retain_labels` the ground-truth member/manager flags and any node
/// attributes survive. The disclosure flag is always cleared, because the
/// position text it refers to is removed.
pub fn anonymize(g: &SocialGraph, seed: u64, retain_labels: bool) -> (SocialGraph, IdMap) {
    let n = g.node_count();
    let mut perm: Vec<u64> = (0..n as u64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);

    let map: IdMap = g
        .node_ids()
        .iter()
        .zip(&perm)
        .map(|(&old, &new)| (old, NodeId(new)))
        .collect();

    let mut b = GraphBuilder::new();
    for &new in map.values() {
        b.add_node(new);
    }
    for (u, v) in g.edges() {
        b.add_edge(map[&u], map[&v])
            .expect("permutation of a simple graph stays simple");
    }
    if retain_labels {
        for p in g.profiles() {
            let mut q = Profile::new(map[&p.id]);
            q.is_org_member = p.is_org_member;
            q.is_manager = p.is_manager;
            b.add_profile(q).expect("label-only profile is valid");
        }
        for &old in g.node_ids() {
            if let Some(attrs) = g.attrs(old) {
                for (k, v) in attrs {
                    b.set_attr(map[&old], k.clone(), v.clone());
                }
            }
        }
    }
    (b.build(), map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::from_edges;

    fn sample() -> SocialGraph {
        let mut b = GraphBuilder::new();
        b.add_edge(NodeId(5), NodeId(9)).unwrap();
        b.add_edge(NodeId(9), NodeId(42)).unwrap();
        let mut p = Profile::new(NodeId(42));
        p.name = Some("Dana".into());
        p.employers = vec!["Acme".into()];
        p.position = Some("VP Sales".into());
        p.discloses_position = true;
        p.is_org_member = Some(true);
        p.is_manager = Some(true);
        b.add_profile(p).unwrap();
        b.build()
    }

    #[test]
    fn ids_become_contiguous_and_deterministic() {
        let g = sample();
        let (a, map_a) = anonymize(&g, 7, false);
        let (b, map_b) = anonymize(&g, 7, false);
        assert_eq!(a.node_ids(), &[NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(map_a, map_b);
        assert_eq!(a, b);
        for s in 0..20 {
            let (_, m) = anonymize(&g, s, false);
            let mut vals: Vec<_> = m.values().copied().collect();
            vals.sort();
            assert_eq!(vals, vec![NodeId(0), NodeId(1), NodeId(2)]);
        }
    }

    #[test]
    fn isomorphic_under_map() {
        let g = from_edges(8, &[(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (6, 7), (1, 6)]).unwrap();
        let (h, map) = anonymize(&g, 99, false);
        assert_eq!(h.edge_count(), g.edge_count());
        for (u, v) in g.edges() {
            assert!(h.has_edge(map[&u], map[&v]));
        }
        assert_eq!(h.degree_sequence(), g.degree_sequence());
    }

    #[test]
    fn text_dropped_labels_optional() {
        let g = sample();
        let (h, map) = anonymize(&g, 1, false);
        assert_eq!(h.profiles().count(), 0);
        let (h, _) = anonymize(&g, 1, true);
        let p = h.profile(map[&NodeId(42)]).unwrap();
        assert_eq!(p.name, None);
        assert!(p.employers.is_empty());
        assert_eq!(p.position, None);
        assert_eq!(p.is_manager, Some(true));
        assert!(!p.discloses_position);
    }
}
