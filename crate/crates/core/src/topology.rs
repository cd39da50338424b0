//! The coverage forest: access networks arranged by tier, tier 1 having the
//! widest coverage. Every tier-`l` node (`l > 1`) hangs off exactly one
//! tier-`l-1` parent.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Bandwidth;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetworkId(pub String);

impl NetworkId {
    pub fn new(id: impl Into<String>) -> Self {
        NetworkId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NetworkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NetworkId {
    fn from(s: &str) -> Self {
        NetworkId(s.to_owned())
    }
}

/// One access network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub id: NetworkId,
    pub tier: u32,
    pub capacity: Bandwidth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<NetworkId>,
}

impl NetworkNode {
    pub fn new(id: impl Into<String>, tier: u32, capacity: Bandwidth, parent: Option<&str>) -> Self {
        NetworkNode {
            id: NetworkId::new(id),
            tier,
            capacity,
            parent: parent.map(NetworkId::from),
        }
    }
}

/// A validated coverage forest. Node indices follow input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    nodes: Vec<NetworkNode>,
    index: HashMap<NetworkId, usize>,
    parents: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    by_tier: Vec<Vec<usize>>,
}

impl Topology {
    /// Validates `nodes` into a forest.
    pub fn build(nodes: Vec<NetworkNode>) -> Result<Topology> {
        if nodes.is_empty() {
            return Err(Error::EmptyTopology);
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(Error::DuplicateNetwork(n.id.0.clone()));
            }
        }
        let mut parents = Vec::with_capacity(nodes.len());
        for n in &nodes {
            let p = match &n.parent {
                None => None,
                Some(pid) => Some(*index.get(pid).ok_or_else(|| Error::MissingParent {
                    network: n.id.0.clone(),
                    parent: pid.0.clone(),
                })?),
            };
            parents.push(p);
        }
        // Cycles are reported before tier checks so that a loop is named as such.
        for start in 0..nodes.len() {
            let mut seen = HashSet::new();
            let mut cur = Some(start);
            while let Some(c) = cur {
                if !seen.insert(c) {
                    return Err(Error::Cycle(nodes[c].id.0.clone()));
                }
                cur = parents[c];
            }
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.tier == 0 {
                return Err(Error::ZeroTier(n.id.0.clone()));
            }
            if n.capacity.raw() <= 0 {
                return Err(Error::NonPositiveCapacity(n.id.0.clone()));
            }
            match (n.tier, parents[i]) {
                (1, Some(_)) => return Err(Error::RootWithParent(n.id.0.clone())),
                (1, None) => {}
                (_, None) => return Err(Error::MissingParentLink(n.id.0.clone())),
                (t, Some(p)) => {
                    if nodes[p].tier + 1 != t {
                        return Err(Error::ParentTierMismatch {
                            network: n.id.0.clone(),
                            tier: t,
                            parent: nodes[p].id.0.clone(),
                            parent_tier: nodes[p].tier,
                        });
                    }
                }
            }
        }
        let depth = nodes.iter().map(|n| n.tier).max().unwrap_or(1) as usize;
        let mut children = vec![Vec::new(); nodes.len()];
        let mut by_tier = vec![Vec::new(); depth];
        for (i, n) in nodes.iter().enumerate() {
            if let Some(p) = parents[i] {
                children[p].push(i);
            }
            by_tier[n.tier as usize - 1].push(i);
        }
        Ok(Topology { nodes, index, parents, children, by_tier })
    }

    /// Number of tiers `L`.
    pub fn depth(&self) -> usize {
        self.by_tier.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &NetworkNode {
        &self.nodes[idx]
    }

    pub fn index_of(&self, id: &NetworkId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn parent(&self, idx: usize) -> Option<usize> {
        self.parents[idx]
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    /// Node indices of tier `tier` (1-based), in input order.
    pub fn tier(&self, tier: usize) -> &[usize] {
        &self.by_tier[tier - 1]
    }

    pub fn capacities(&self) -> Vec<Bandwidth> {
        self.nodes.iter().map(|n| n.capacity).collect()
    }

    /// Nodes without children, in input order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|i| self.children[*i].is_empty()).collect()
    }

    /// Root-to-`idx` chain of node indices.
    pub fn path_to(&self, idx: usize) -> Vec<usize> {
        let mut path = vec![idx];
        let mut cur = idx;
        while let Some(p) = self.parents[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Resolves an attachment path. It must start at a tier-1 network and
    /// follow parent links downward, one node per tier.
    pub fn resolve_path(&self, user: &str, path: &[NetworkId]) -> Result<Vec<usize>> {
        let first = path.first().ok_or_else(|| Error::EmptyPath(user.to_owned()))?;
        let mut out = Vec::with_capacity(path.len());
        let mut prev: Option<usize> = None;
        for id in path {
            let idx = self.index_of(id).ok_or_else(|| Error::UnknownNetwork(id.0.clone()))?;
            match prev {
                None => {
                    if self.parents[idx].is_some() {
                        return Err(Error::PathNotRooted { user: user.to_owned(), network: first.0.clone() });
                    }
                }
                Some(p) => {
                    if self.parents[idx] != Some(p) {
                        return Err(Error::PathBroken {
                            user: user.to_owned(),
                            network: id.0.clone(),
                            previous: self.nodes[p].id.0.clone(),
                        });
                    }
                }
            }
            out.push(idx);
            prev = Some(idx);
        }
        Ok(out)
    }

    pub fn ids(&self, path: &[usize]) -> Vec<NetworkId> {
        path.iter().map(|i| self.nodes[*i].id.clone()).collect()
    }
}
