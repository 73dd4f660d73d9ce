//! Rooted-tree model of the quantum network.
//!
//! Parties are identified by a dense [`PartyId`] (their position in the input
//! party list). Rooting a tree assigns every vertex a breadth-first label
//! `v_1, ..., v_N` with `v_1` the root, and every edge the label of its child
//! minus one, so `e_k = {p(v_{k+1}), v_{k+1}}`. Siblings are visited in
//! ascending [`PartyId`] order, which makes the labeling reproducible.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense party index into the input party list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartyId(pub usize);

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A directed tree edge `{p(child), child}` with its breadth-first label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub parent: PartyId,
    pub child: PartyId,
    /// 1-based edge label `k` of `e_k`.
    pub label: usize,
}

impl Edge {
    /// Zero-based position of the edge in [`RootedTree::edges`].
    pub fn index(&self) -> usize {
        self.label - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    names: Vec<String>,
    dims: Vec<usize>,
    order: Vec<PartyId>,
    position: Vec<usize>,
    parent: Vec<Option<PartyId>>,
    children: Vec<Vec<PartyId>>,
    edges: Vec<Edge>,
    undirected: Vec<(PartyId, PartyId)>,
}

/// Entry of the label map emitted with every report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub id: String,
    pub vertex: usize,
    pub dim: usize,
    pub parent: Option<String>,
}

impl RootedTree {
    /// Roots the tree given by `edges` at `root` and relabels it in BFS order.
    ///
    /// `parties` lists `(identifier, target dimension)` pairs; identifiers
    /// must be unique and every dimension at least one.
    pub fn root_and_relabel(
        parties: &[(String, usize)],
        edges: &[(String, String)],
        root: &str,
    ) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::EmptyTree);
        }
        let mut names = Vec::with_capacity(parties.len());
        let mut dims = Vec::with_capacity(parties.len());
        for (name, dim) in parties {
            if names.contains(name) {
                return Err(Error::NotATree(format!("party `{name}` listed twice")));
            }
            if *dim == 0 {
                return Err(Error::IncompatibleDims(format!(
                    "party `{name}` has dimension 0"
                )));
            }
            names.push(name.clone());
            dims.push(*dim);
        }
        let lookup = |name: &str| -> Result<PartyId> {
            names
                .iter()
                .position(|n| n == name)
                .map(PartyId)
                .ok_or_else(|| Error::UnknownParty(name.to_string()))
        };
        let root = names
            .iter()
            .position(|n| n == root)
            .map(PartyId)
            .ok_or_else(|| Error::UnknownRoot(root.to_string()))?;
        let mut pairs = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            pairs.push((lookup(a)?, lookup(b)?));
        }
        Self::from_pairs(names, dims, &pairs, root)
    }

    /// Same as [`root_and_relabel`](Self::root_and_relabel) but with dense ids;
    /// parties are named `"1"`, `"2"`, ... after their position.
    pub fn from_edges(dims: &[usize], edges: &[(usize, usize)], root: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::EmptyTree);
        }
        if let Some(d) = dims.iter().position(|&d| d == 0) {
            return Err(Error::IncompatibleDims(format!("party {} has dimension 0", d + 1)));
        }
        let n = dims.len();
        if root >= n {
            return Err(Error::UnknownRoot(format!("{}", root + 1)));
        }
        let mut pairs = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownParty(format!("{}", a.max(b) + 1)));
            }
            pairs.push((PartyId(a), PartyId(b)));
        }
        let names = (1..=n).map(|k| k.to_string()).collect();
        Self::from_pairs(names, dims.to_vec(), &pairs, PartyId(root))
    }

    fn from_pairs(
        names: Vec<String>,
        dims: Vec<usize>,
        pairs: &[(PartyId, PartyId)],
        root: PartyId,
    ) -> Result<Self> {
        let n = names.len();
        if pairs.len() != n - 1 {
            return Err(Error::NotATree(format!(
                "{} parties need {} edges, got {}",
                n,
                n - 1,
                pairs.len()
            )));
        }
        let mut adjacency: Vec<BTreeSet<PartyId>> = vec![BTreeSet::new(); n];
        for &(a, b) in pairs {
            if a == b {
                return Err(Error::NotATree(format!("self-loop at `{}`", names[a.0])));
            }
            if !adjacency[a.0].insert(b) {
                return Err(Error::NotATree(format!(
                    "edge `{}`-`{}` listed twice",
                    names[a.0], names[b.0]
                )));
            }
            adjacency[b.0].insert(a);
        }

        let mut order = Vec::with_capacity(n);
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root.0] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            // BTreeSet iteration is ascending PartyId, the sibling tie-break.
            for &c in &adjacency[v.0] {
                if !seen[c.0] {
                    seen[c.0] = true;
                    parent[c.0] = Some(v);
                    queue.push_back(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::NotATree("graph is disconnected".into()));
        }

        let mut position = vec![0; n];
        for (k, v) in order.iter().enumerate() {
            position[v.0] = k;
        }
        let mut children = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(n - 1);
        for (k, &v) in order.iter().enumerate().skip(1) {
            let p = parent[v.0].expect("non-root vertex has a parent");
            children[p.0].push(v);
            edges.push(Edge {
                parent: p,
                child: v,
                label: k,
            });
        }
        Ok(Self {
            names,
            dims,
            order,
            position,
            parent,
            children,
            edges,
            undirected: pairs.to_vec(),
        })
    }

    /// Line `1 - 2 - ... - N` rooted at party 1.
    pub fn line(dims: &[usize]) -> Result<Self> {
        let edges: Vec<_> = (1..dims.len()).map(|k| (k - 1, k)).collect();
        Self::from_edges(dims, &edges, 0)
    }

    /// Star with party 1 as the hub, rooted at the hub.
    pub fn star(dims: &[usize]) -> Result<Self> {
        let edges: Vec<_> = (1..dims.len()).map(|k| (0, k)).collect();
        Self::from_edges(dims, &edges, 0)
    }

    /// Random tree on `dims.len()` parties with a random root, reproducible from `seed`.
    pub fn random(dims: &[usize], seed: u64) -> Result<Self> {
        let n = dims.len();
        if n == 0 {
            return Err(Error::EmptyTree);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        let edges: Vec<_> = (1..n)
            .map(|k| (ids[rng.random_range(0..k)], ids[k]))
            .collect();
        let root = rng.random_range(0..n);
        Self::from_edges(dims, &edges, root)
    }

    /// The same undirected tree rooted at another party.
    pub fn reroot(&self, root: PartyId) -> Result<Self> {
        if root.0 >= self.n() {
            return Err(Error::UnknownRoot(root.to_string()));
        }
        Self::from_pairs(
            self.names.clone(),
            self.dims.clone(),
            &self.undirected,
            root,
        )
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn root(&self) -> PartyId {
        self.order[0]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, v: PartyId) -> usize {
        self.dims[v.0]
    }

    pub fn name(&self, v: PartyId) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn party_by_name(&self, name: &str) -> Option<PartyId> {
        self.names.iter().position(|n| n == name).map(PartyId)
    }

    /// Parties in BFS order; `bfs_order()[k - 1]` is `v_k`.
    pub fn bfs_order(&self) -> &[PartyId] {
        &self.order
    }

    /// 1-based BFS label `k` of `v_k`.
    pub fn label(&self, v: PartyId) -> usize {
        self.position[v.0] + 1
    }

    pub fn parent(&self, v: PartyId) -> Option<PartyId> {
        self.parent[v.0]
    }

    /// Children in BFS order.
    pub fn children(&self, v: PartyId) -> &[PartyId] {
        &self.children[v.0]
    }

    pub fn is_leaf(&self, v: PartyId) -> bool {
        self.children[v.0].is_empty()
    }

    /// Edges ordered by label; `edges()[k - 1]` is `e_k`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge `e_label`.
    pub fn edge(&self, label: usize) -> Result<Edge> {
        label
            .checked_sub(1)
            .and_then(|i| self.edges.get(i))
            .copied()
            .ok_or_else(|| Error::UnknownEdge(format!("e{label}")))
    }

    /// Edge `{p(v), v}` for a non-root `v`.
    pub fn edge_to(&self, v: PartyId) -> Option<Edge> {
        let k = self.position[v.0];
        (k > 0).then(|| self.edges[k - 1])
    }

    /// Edge joining `a` and `b` in either orientation.
    pub fn find_edge(&self, a: PartyId, b: PartyId) -> Option<Edge> {
        self.edges
            .iter()
            .find(|e| (e.parent == a && e.child == b) || (e.parent == b && e.child == a))
            .copied()
    }

    fn check_party(&self, v: PartyId) -> Result<()> {
        if v.0 < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownParty(v.to_string()))
        }
    }

    fn check_edge(&self, e: &Edge) -> Result<()> {
        match self.edges.get(e.label.wrapping_sub(1)) {
            Some(own) if own == e => Ok(()),
            _ => Err(Error::UnknownEdge(format!(
                "e{} ({}->{})",
                e.label, e.parent, e.child
            ))),
        }
    }

    /// `D'_v`: `v` and all its descendants, ascending by BFS label.
    pub fn descendants_closure(&self, v: PartyId) -> Result<Vec<PartyId>> {
        self.check_party(v)?;
        let mut out = vec![v];
        let mut k = 0;
        while k < out.len() {
            out.extend_from_slice(&self.children[out[k].0]);
            k += 1;
        }
        out.sort_by_key(|p| self.position[p.0]);
        Ok(out)
    }

    /// `(D'_v, complement)` for `e = {p(v), v}`, both ascending by BFS label.
    pub fn bipartition(&self, e: &Edge) -> Result<(Vec<PartyId>, Vec<PartyId>)> {
        self.check_edge(e)?;
        let inside = self.descendants_closure(e.child)?;
        let mut mask = vec![false; self.n()];
        for p in &inside {
            mask[p.0] = true;
        }
        let outside = self
            .order
            .iter()
            .copied()
            .filter(|p| !mask[p.0])
            .collect();
        Ok((inside, outside))
    }

    /// True when every vertex has at most one child, i.e. the tree is a line
    /// rooted at one of its ends.
    pub fn is_line_from_root(&self) -> bool {
        self.children.iter().all(|c| c.len() <= 1)
    }

    pub fn label_map(&self) -> Vec<LabelEntry> {
        self.order
            .iter()
            .map(|&v| LabelEntry {
                id: self.names[v.0].clone(),
                vertex: self.label(v),
                dim: self.dims[v.0],
                parent: self.parent[v.0].map(|p| self.names[p.0].clone()),
            })
            .collect()
    }

    /// Undirected edges as given at construction.
    pub fn undirected_edges(&self) -> &[(PartyId, PartyId)] {
        &self.undirected
    }

    /// Tree with the same topology and new per-party dimensions.
    pub fn with_dims(&self, dims: &[usize]) -> Result<Self> {
        if dims.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} dimensions for {} parties",
                dims.len(),
                self.n()
            )));
        }
        let mut t = self.clone();
        t.dims = dims.to_vec();
        Ok(t)
    }

    /// Product of target dimensions over `parties`.
    pub fn dim_of(&self, parties: &[PartyId]) -> usize {
        parties.iter().map(|p| self.dims[p.0]).product()
    }
}
