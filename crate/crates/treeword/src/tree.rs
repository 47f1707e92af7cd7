//! Finite rooted trees, the descendant order and regressive homomorphisms.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node index. The root is always `0`.
pub type Node = usize;

pub const ROOT: Node = 0;

/// Default node limit for exhaustive homomorphism enumeration.
pub const DEFAULT_HOM_LIMIT: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("malformed tree: node {child} has parent {parent}, which is not a smaller index")]
    MalformedTree { child: Node, parent: Node },
    #[error("node {node} is out of range for a tree with {node_count} nodes")]
    NodeOutOfRange { node: Node, node_count: usize },
    #[error("refusing to enumerate homomorphisms of a {nodes}-node tree (limit {limit})")]
    EnumerationBudgetExceeded { nodes: usize, limit: usize },
    #[error("maps are defined on different trees")]
    TreeMismatch,
    #[error("node map {image:?} is not a regressive homomorphism")]
    NotRegressive { image: Vec<Node> },
}

/// A finite rooted tree given by its parent list.
///
/// Entry `i` of the parent list is the parent of node `i + 1`, and must be
/// smaller than `i + 1`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct RootedTree {
    parents: Vec<Node>,
    heights: Vec<usize>,
    children: Vec<Vec<Node>>,
}

/// Result of [`RootedTree::classify_node_set`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSetClassification {
    pub is_chain: bool,
    /// Minimum of a nonempty chain; `None` for the empty set and for non-chains.
    pub least: Option<Node>,
    /// All nodes lie on one root path.
    pub is_within_branch: bool,
}

impl RootedTree {
    pub fn from_parents(parents: &[Node]) -> Result<Self, TreeError> {
        let n = parents.len() + 1;
        let mut heights = vec![0; n];
        let mut children = vec![Vec::new(); n];
        for (i, &p) in parents.iter().enumerate() {
            let child = i + 1;
            if p >= child {
                return Err(TreeError::MalformedTree { child, parent: p });
            }
            heights[child] = heights[p] + 1;
            children[p].push(child);
        }
        Ok(RootedTree {
            parents: parents.to_vec(),
            heights,
            children,
        })
    }

    /// Single-node tree.
    pub fn singleton() -> Self {
        Self::from_parents(&[]).expect("empty parent list is valid")
    }

    /// The path `0 <- 1 <- ... <- k` with `k + 1` nodes.
    pub fn path(k: usize) -> Self {
        let parents: Vec<Node> = (0..k).collect();
        Self::from_parents(&parents).expect("path parent list is valid")
    }

    pub fn node_count(&self) -> usize {
        self.heights.len()
    }

    pub fn nodes(&self) -> std::ops::Range<Node> {
        0..self.node_count()
    }

    pub fn parent_list(&self) -> &[Node] {
        &self.parents
    }

    pub fn parent(&self, t: Node) -> Option<Node> {
        if t == ROOT {
            None
        } else {
            Some(self.parents[t - 1])
        }
    }

    pub fn children(&self, t: Node) -> &[Node] {
        &self.children[t]
    }

    pub fn height(&self, t: Node) -> usize {
        self.heights[t]
    }

    pub fn max_height(&self) -> usize {
        self.heights.iter().copied().max().unwrap_or(0)
    }

    pub fn check_node(&self, t: Node) -> Result<(), TreeError> {
        if t < self.node_count() {
            Ok(())
        } else {
            Err(TreeError::NodeOutOfRange {
                node: t,
                node_count: self.node_count(),
            })
        }
    }

    /// `u <= v`: `v` lies on the root path of `u`.
    pub fn leq(&self, u: Node, v: Node) -> bool {
        let (hu, hv) = (self.heights[u], self.heights[v]);
        if hv > hu {
            return false;
        }
        self.predecessor(u, hu - hv) == v
    }

    pub fn comparable(&self, u: Node, v: Node) -> bool {
        self.leq(u, v) || self.leq(v, u)
    }

    /// Nodes adjacent in the tree (one is the parent of the other).
    pub fn adjacent(&self, u: Node, v: Node) -> bool {
        self.parent(u) == Some(v) || self.parent(v) == Some(u)
    }

    /// The `k`-th predecessor of `t`; the root once `height(t) <= k`.
    pub fn predecessor(&self, t: Node, k: usize) -> Node {
        let mut cur = t;
        for _ in 0..k {
            match self.parent(cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
        cur
    }

    /// Root path of `t`, starting at `t` and ending at the root.
    pub fn root_path(&self, t: Node) -> Vec<Node> {
        let mut path = vec![t];
        let mut cur = t;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path
    }

    pub fn classify_node_set(&self, nodes: &[Node]) -> NodeSetClassification {
        if nodes.is_empty() {
            return NodeSetClassification {
                is_chain: true,
                least: None,
                is_within_branch: true,
            };
        }
        let deepest = *nodes
            .iter()
            .max_by_key(|&&t| (self.heights[t], std::cmp::Reverse(t)))
            .expect("nonempty");
        let is_chain = nodes.iter().all(|&t| self.leq(deepest, t));
        NodeSetClassification {
            is_chain,
            least: is_chain.then_some(deepest),
            is_within_branch: is_chain,
        }
    }

    /// Least element of the chain obtained by adding `u` to a chain whose
    /// least element is `least` (`None` for the empty chain).
    pub fn extend_chain(&self, least: Option<Node>, u: Node) -> Option<Node> {
        match least {
            None => Some(u),
            Some(l) if self.leq(l, u) => Some(l),
            Some(l) if self.leq(u, l) => Some(u),
            Some(_) => None,
        }
    }

    pub fn is_regressive_hom(&self, image: &[Node]) -> bool {
        if image.len() != self.node_count() {
            return false;
        }
        if image.iter().any(|&x| x >= self.node_count()) {
            return false;
        }
        for t in self.nodes() {
            if !self.leq(t, image[t]) {
                return false;
            }
            if let Some(p) = self.parent(t) {
                let (a, b) = (image[t], image[p]);
                if a != b && !self.adjacent(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// `u <= v` implies `image[u] <= image[v]`. Regressive homomorphisms
    /// need not be monotone: `[0, 1, 0]` on the three-node path folds the
    /// leaf onto the root while fixing its parent.
    pub fn is_order_preserving(&self, image: &[Node]) -> bool {
        self.nodes()
            .skip(1)
            .all(|t| self.parent(t).is_some_and(|p| self.leq(image[t], image[p])))
    }

    pub fn regressive_homs(self: &Arc<Self>) -> Result<Vec<RegressiveHom>, TreeError> {
        enumerate_regressive_homs(self, DEFAULT_HOM_LIMIT)
    }
}

impl TryFrom<Vec<Node>> for RootedTree {
    type Error = TreeError;
    fn try_from(parents: Vec<Node>) -> Result<Self, TreeError> {
        RootedTree::from_parents(&parents)
    }
}

impl From<RootedTree> for Vec<Node> {
    fn from(tree: RootedTree) -> Self {
        tree.parents
    }
}

impl fmt::Debug for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RootedTree{:?}", self.parents)
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.parents.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// A validated regressive homomorphism of a tree onto itself.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RegressiveHom {
    tree: Arc<RootedTree>,
    image: Vec<Node>,
}

impl RegressiveHom {
    pub fn new(tree: &Arc<RootedTree>, image: Vec<Node>) -> Result<Self, TreeError> {
        if !tree.is_regressive_hom(&image) {
            return Err(TreeError::NotRegressive { image });
        }
        Ok(RegressiveHom {
            tree: Arc::clone(tree),
            image,
        })
    }

    pub fn identity(tree: &Arc<RootedTree>) -> Self {
        RegressiveHom {
            tree: Arc::clone(tree),
            image: tree.nodes().collect(),
        }
    }

    pub fn constant_root(tree: &Arc<RootedTree>) -> Self {
        RegressiveHom {
            tree: Arc::clone(tree),
            image: vec![ROOT; tree.node_count()],
        }
    }

    /// The map sending every node to its `k`-th predecessor.
    pub fn predecessor_map(tree: &Arc<RootedTree>, k: usize) -> Self {
        RegressiveHom {
            tree: Arc::clone(tree),
            image: tree.nodes().map(|t| tree.predecessor(t, k)).collect(),
        }
    }

    pub fn tree(&self) -> &Arc<RootedTree> {
        &self.tree
    }

    pub fn image(&self) -> &[Node] {
        &self.image
    }

    pub fn apply(&self, t: Node) -> Node {
        self.image[t]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(t, &x)| t == x)
    }

    pub fn is_order_preserving(&self) -> bool {
        self.tree.is_order_preserving(&self.image)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &RegressiveHom) -> Result<RegressiveHom, TreeError> {
        if !same_tree(&self.tree, &other.tree) {
            return Err(TreeError::TreeMismatch);
        }
        let image: Vec<Node> = other.image.iter().map(|&t| self.image[t]).collect();
        debug_assert!(self.tree.is_regressive_hom(&image));
        Ok(RegressiveHom {
            tree: Arc::clone(&self.tree),
            image,
        })
    }
}

impl fmt::Debug for RegressiveHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RegressiveHom{:?}", self.image)
    }
}

pub(crate) fn same_tree(a: &Arc<RootedTree>, b: &Arc<RootedTree>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub fn compose_homs(f: &RegressiveHom, g: &RegressiveHom) -> Result<RegressiveHom, TreeError> {
    f.compose(g)
}

/// All regressive homomorphisms of `tree`, in lexicographic order of images.
///
/// Images are assigned parent-first: the image of `t` must lie on the root
/// path of `t` and be equal or adjacent to the image of `parent(t)`.
pub fn enumerate_regressive_homs(
    tree: &Arc<RootedTree>,
    limit: usize,
) -> Result<Vec<RegressiveHom>, TreeError> {
    let n = tree.node_count();
    if n > limit {
        return Err(TreeError::EnumerationBudgetExceeded { nodes: n, limit });
    }
    let candidates: Vec<Vec<Node>> = tree
        .nodes()
        .map(|t| {
            let mut path = tree.root_path(t);
            path.sort_unstable();
            path
        })
        .collect();
    let mut out = Vec::new();
    let mut image = vec![ROOT; n];
    fill_homs(tree, &candidates, 1, &mut image, &mut out);
    Ok(out
        .into_iter()
        .map(|image| RegressiveHom {
            tree: Arc::clone(tree),
            image,
        })
        .collect())
}

fn fill_homs(
    tree: &RootedTree,
    candidates: &[Vec<Node>],
    t: Node,
    image: &mut Vec<Node>,
    out: &mut Vec<Vec<Node>>,
) {
    if t == tree.node_count() {
        out.push(image.clone());
        return;
    }
    let parent_image = image[tree.parent(t).expect("non-root")];
    for &c in &candidates[t] {
        if c == parent_image || tree.adjacent(c, parent_image) {
            image[t] = c;
            fill_homs(tree, candidates, t + 1, image, out);
        }
    }
}
