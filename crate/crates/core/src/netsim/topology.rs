use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::SimError;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Sensor,
    ClusterHead,
    BaseStation,
    InfoServer,
    RepoServer,
    Adversary,
}

impl NodeKind {
    /// Whether traffic for other nodes may pass through this node.
    pub fn relays(self) -> bool {
        matches!(self, NodeKind::ClusterHead | NodeKind::BaseStation | NodeKind::InfoServer | NodeKind::Adversary)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Overrides the per-kind default capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
    pub latency_ms: u64,
}

/// Undirected graph with positive link latencies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

impl Topology {
    pub fn kind(&self, id: NodeId) -> Option<NodeKind> {
        self.nodes.iter().find(|n| n.id == id).map(|n| n.kind)
    }

    pub fn nodes_of(&self, kind: NodeKind) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.nodes.iter().filter(|n| n.kind == kind).map(|n| n.id).collect();
        v.sort_unstable();
        v
    }

    pub fn single(&self, kind: NodeKind) -> Result<NodeId, SimError> {
        match self.nodes_of(kind).as_slice() {
            [one] => Ok(*one),
            other => Err(SimError::Config(format!("topology needs exactly one {kind:?} node, found {}", other.len()))),
        }
    }

    pub fn adjacency(&self) -> BTreeMap<NodeId, Vec<(NodeId, u64)>> {
        let mut adj: BTreeMap<NodeId, Vec<(NodeId, u64)>> = self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        for l in &self.links {
            adj.entry(l.a).or_default().push((l.b, l.latency_ms));
            adj.entry(l.b).or_default().push((l.a, l.latency_ms));
        }
        for v in adj.values_mut() {
            v.sort_unstable();
        }
        adj
    }

    pub fn latency(&self, a: NodeId, b: NodeId) -> Option<u64> {
        self.links
            .iter()
            .filter(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a))
            .map(|l| l.latency_ms)
            .min()
    }

    /// Checks ids, links, the single-gateway rule and reachability.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(SimError::Config(format!("nodes: duplicate id {}", n.id)));
            }
        }
        for l in &self.links {
            if !ids.contains(&l.a) || !ids.contains(&l.b) {
                return Err(SimError::Config(format!("links: {}-{} names an unknown node", l.a, l.b)));
            }
            if l.a == l.b || l.latency_ms == 0 {
                return Err(SimError::Config(format!("links: {}-{} must join distinct nodes with latency > 0", l.a, l.b)));
            }
        }
        let bs = self.single(NodeKind::BaseStation)?;
        let is = self.single(NodeKind::InfoServer)?;
        let rs = self.single(NodeKind::RepoServer)?;
        let sensors = self.nodes_of(NodeKind::Sensor);
        if sensors.is_empty() {
            return Err(SimError::Config("topology has no sensor".into()));
        }
        let none = BTreeSet::new();
        let connected = |a: NodeId, b: NodeId| {
            self.route(a, b, &none)
                .map(drop)
                .map_err(|_| SimError::Config(format!("topology is disconnected: no route from node {a} to node {b}")))
        };
        for s in &sensors {
            connected(*s, bs)?;
        }
        connected(bs, is)?;
        connected(is, rs)?;
        connected(rs, is)?;

        let without_bs: BTreeSet<NodeId> = [bs].into();
        for n in &self.nodes {
            if matches!(n.kind, NodeKind::Sensor | NodeKind::ClusterHead | NodeKind::Adversary) {
                for server in [is, rs] {
                    if self.route(n.id, server, &without_bs).is_ok() {
                        return Err(SimError::Config(format!(
                            "node {} reaches server {server} without passing the base station",
                            n.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Minimum-latency path from `src` to `dst` avoiding `excluded`. Ties go
    /// to the lexicographically smallest node-id sequence.
    pub fn route(&self, src: NodeId, dst: NodeId, excluded: &BTreeSet<NodeId>) -> Result<Vec<NodeId>, SimError> {
        self.route_with(&self.adjacency(), src, dst, excluded)
    }

    pub fn route_with(
        &self,
        adj: &BTreeMap<NodeId, Vec<(NodeId, u64)>>,
        src: NodeId,
        dst: NodeId,
        excluded: &BTreeSet<NodeId>,
    ) -> Result<Vec<NodeId>, SimError> {
        let unreachable = || SimError::Unreachable { src, dst };
        if !adj.contains_key(&src) || !adj.contains_key(&dst) || excluded.contains(&dst) {
            return Err(unreachable());
        }
        let mut best: BTreeMap<NodeId, (u64, Vec<NodeId>)> = BTreeMap::new();
        let mut frontier = BTreeSet::new();
        best.insert(src, (0, vec![src]));
        frontier.insert((0u64, vec![src]));
        let mut done = BTreeSet::new();
        while let Some((cost, path)) = frontier.pop_first() {
            let node = *path.last().unwrap();
            if !done.insert(node) {
                continue;
            }
            if node == dst {
                return Ok(path);
            }
            if node != src && !self.kind(node).is_some_and(NodeKind::relays) {
                continue;
            }
            for &(next, lat) in &adj[&node] {
                if done.contains(&next) || excluded.contains(&next) {
                    continue;
                }
                let mut p = path.clone();
                p.push(next);
                let cand = (cost + lat, p);
                if best.get(&next).is_none_or(|cur| cand < *cur) {
                    best.insert(next, cand.clone());
                    frontier.insert(cand);
                }
            }
        }
        Err(unreachable())
    }

    /// Sensors each wired to two cluster heads (the lower id one preferred),
    /// cluster heads to BS, then BS - IS - RS.
    ///
    /// Node ids: BS 1, IS 2, RS 3, cluster heads from 10, sensors from 100.
    pub fn standard(sensors: usize, cluster_heads: usize) -> Topology {
        let heads = cluster_heads.max(1);
        let mut nodes = vec![
            NodeSpec { id: 1, kind: NodeKind::BaseStation, energy: None },
            NodeSpec { id: 2, kind: NodeKind::InfoServer, energy: None },
            NodeSpec { id: 3, kind: NodeKind::RepoServer, energy: None },
        ];
        let mut links = vec![LinkSpec { a: 1, b: 2, latency_ms: 2 }, LinkSpec { a: 2, b: 3, latency_ms: 2 }];
        for h in 0..heads {
            let id = 10 + h as NodeId;
            nodes.push(NodeSpec { id, kind: NodeKind::ClusterHead, energy: None });
            links.push(LinkSpec { a: id, b: 1, latency_ms: 5 });
        }
        for s in 0..sensors {
            let id = 100 + s as NodeId;
            nodes.push(NodeSpec { id, kind: NodeKind::Sensor, energy: None });
            let primary = 10 + (s % heads) as NodeId;
            links.push(LinkSpec { a: id, b: primary, latency_ms: 3 });
            if heads > 1 {
                let backup = 10 + ((s + 1) % heads) as NodeId;
                links.push(LinkSpec { a: id, b: backup, latency_ms: 4 });
            }
        }
        Topology { nodes, links }
    }

    pub fn add_node(&mut self, id: NodeId, kind: NodeKind) {
        self.nodes.push(NodeSpec { id, kind, energy: None });
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId, latency_ms: u64) {
        self.links.push(LinkSpec { a, b, latency_ms });
    }

    pub fn remove_link(&mut self, a: NodeId, b: NodeId) {
        self.links.retain(|l| !((l.a == a && l.b == b) || (l.a == b && l.b == a)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Topology {
        let mut t = Topology { nodes: vec![], links: vec![] };
        for (id, kind) in [(1, NodeKind::Sensor), (2, NodeKind::ClusterHead), (3, NodeKind::BaseStation)] {
            t.add_node(id, kind);
        }
        t.add_link(1, 2, 3);
        t.add_link(2, 3, 4);
        t
    }

    #[test]
    fn single_path() {
        assert_eq!(line().route(1, 3, &BTreeSet::new()).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn equal_latency_prefers_lower_ids() {
        let mut t = line();
        t.add_node(0, NodeKind::ClusterHead);
        t.add_link(1, 0, 3);
        t.add_link(0, 3, 4);
        assert_eq!(t.route(1, 3, &BTreeSet::new()).unwrap(), vec![1, 0, 3]);
        assert_eq!(t.route(1, 3, &[0].into()).unwrap(), vec![1, 2, 3]);
        assert!(matches!(t.route(1, 3, &[0, 2].into()), Err(SimError::Unreachable { .. })));
    }

    #[test]
    fn sensors_do_not_relay() {
        let mut t = line();
        t.add_node(4, NodeKind::Sensor);
        t.add_link(4, 1, 1);
        t.remove_link(1, 2);
        t.add_link(1, 2, 100);
        t.add_link(4, 2, 1);
        assert_eq!(t.route(1, 3, &BTreeSet::new()).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn standard_topology_is_valid() {
        Topology::standard(5, 2).validate().unwrap();
        Topology::standard(1, 1).validate().unwrap();
    }

    #[test]
    fn gateway_bypass_is_rejected() {
        let mut t = Topology::standard(2, 2);
        t.add_link(10, 2, 1);
        assert!(matches!(t.validate(), Err(SimError::Config(m)) if m.contains("base station")));
    }
}
