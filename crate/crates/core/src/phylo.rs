//! Rooted trees with node heights, UPGMA construction and Newick output.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::family::LanguageDistanceMatrix;

/// Largest tolerated `|d[i][j] - d[j][i]|`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TreeError {
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Set on leaves only.
    pub name: Option<String>,
    pub height: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl Node {
    pub fn leaf(name: impl Into<String>) -> Self {
        Node {
            name: Some(name.into()),
            height: 0.0,
            parent: None,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Rooted binary tree stored as an arena. Leaves sit at height 0; a branch
/// length is the parent height minus the child height.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    root: usize,
}

impl PhyloTree {
    /// Checks the structure and takes ownership of the arena. `parent` links
    /// are recomputed from `children`.
    pub fn from_nodes(mut nodes: Vec<Node>, root: usize) -> Result<Self, TreeError> {
        let bad = |msg: String| Err(TreeError::InvalidTree(msg));
        if root >= nodes.len() {
            return bad(format!("root {root} out of range"));
        }
        for node in nodes.iter_mut() {
            node.parent = None;
        }
        for p in 0..nodes.len() {
            let children = nodes[p].children.clone();
            if !children.is_empty() && children.len() != 2 {
                return bad(format!("node {p} has {} children", children.len()));
            }
            for c in children {
                if c >= nodes.len() || c == p {
                    return bad(format!("node {p} has invalid child {c}"));
                }
                if nodes[c].parent.is_some() {
                    return bad(format!("node {c} has two parents"));
                }
                nodes[c].parent = Some(p);
            }
        }
        if nodes[root].parent.is_some() {
            return bad("root has a parent".into());
        }
        let mut names = HashSet::new();
        for (i, node) in nodes.iter().enumerate() {
            if !(node.height.is_finite() && node.height >= 0.0) {
                return bad(format!("node {i} has height {}", node.height));
            }
            if node.is_leaf() {
                if node.height != 0.0 {
                    return bad(format!("leaf {i} is not at height 0"));
                }
                match &node.name {
                    Some(name) if names.insert(name.as_str()) => {}
                    Some(name) => return bad(format!("duplicate leaf name {name:?}")),
                    None => return bad(format!("leaf {i} has no name")),
                }
            }
            if let Some(p) = node.parent {
                if nodes[p].height < node.height {
                    return bad(format!("node {i} is higher than its parent"));
                }
            } else if i != root {
                return bad(format!("node {i} is detached from the root"));
            }
        }
        Ok(PhyloTree { nodes, root })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn height(&self) -> f64 {
        self.nodes[self.root].height
    }

    /// Length of the branch above `id`; 0 for the root.
    pub fn branch_length(&self, id: usize) -> f64 {
        match self.nodes[id].parent {
            Some(p) => (self.nodes[p].height - self.nodes[id].height).max(0.0),
            None => 0.0,
        }
    }

    /// Leaf node ids in arena order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn n_internal(&self) -> usize {
        self.nodes.len() - self.n_leaves()
    }

    pub fn leaf_names(&self) -> Vec<&str> {
        self.leaves()
            .into_iter()
            .filter_map(|i| self.nodes[i].name.as_deref())
            .collect()
    }

    /// Node ids in pre-order, children in stored order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        order
    }

    /// Path-length distances between leaves, rows in [`leaves`](Self::leaves)
    /// order.
    pub fn cophenetic_matrix(&self) -> LanguageDistanceMatrix {
        let leaves = self.leaves();
        let slot: Vec<Option<usize>> = {
            let mut slot = vec![None; self.nodes.len()];
            for (k, &leaf) in leaves.iter().enumerate() {
                slot[leaf] = Some(k);
            }
            slot
        };
        let n = leaves.len();
        let mut values = vec![0.0; n * n];
        // leaf sets below each node, built children-first
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for &id in self.preorder().iter().rev() {
            let node = &self.nodes[id];
            if let Some(k) = slot[id] {
                below[id].push(k);
                continue;
            }
            let (left, right) = (node.children[0], node.children[1]);
            for &a in &below[left] {
                for &b in &below[right] {
                    let d = 2.0 * node.height;
                    values[a * n + b] = d;
                    values[b * n + a] = d;
                }
            }
            let mut merged = std::mem::take(&mut below[left]);
            merged.append(&mut below[right]);
            below[id] = merged;
        }
        let names = leaves
            .iter()
            .map(|&i| self.nodes[i].name.clone().unwrap_or_default())
            .collect();
        LanguageDistanceMatrix::new(names, values).expect("tree has at least two leaves")
    }

    /// Leaf-name sets of every internal node, sorted; equal for trees with the
    /// same rooted topology.
    pub fn clusters(&self) -> Vec<Vec<String>> {
        let mut below: Vec<Vec<String>> = vec![Vec::new(); self.nodes.len()];
        let mut out = Vec::new();
        for &id in self.preorder().iter().rev() {
            let node = &self.nodes[id];
            if node.is_leaf() {
                below[id].push(node.name.clone().unwrap_or_default());
                continue;
            }
            let mut set: Vec<String> = node
                .children
                .iter()
                .flat_map(|&c| below[c].iter().cloned())
                .collect();
            set.sort();
            out.push(set.clone());
            below[id] = set;
        }
        out.sort();
        out
    }

    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_newick(self.root, &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, id: usize, out: &mut String) {
        let node = &self.nodes[id];
        if node.is_leaf() {
            out.push_str(&quote_name(node.name.as_deref().unwrap_or("")));
        } else {
            out.push('(');
            for (k, &child) in node.children.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                self.write_newick(child, out);
            }
            out.push(')');
        }
        if node.parent.is_some() {
            let _ = write!(out, ":{}", format_length(self.branch_length(id)));
        }
    }
}

/// Single-quotes names that contain Newick punctuation or whitespace;
/// embedded quotes are doubled.
pub fn quote_name(name: &str) -> String {
    let needs_quotes = name.is_empty()
        || name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | '(' | ')' | ':' | ';' | '\'' | '[' | ']'));
    if needs_quotes {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_owned()
    }
}

/// Fixed 12-decimal rendering with trailing zeros removed, so values such as
/// `0.3 - 0.1` print as `0.2`.
pub fn format_length(value: f64) -> String {
    let text = format!("{value:.12}");
    let text = text.trim_end_matches('0').trim_end_matches('.');
    if text == "-0" || text.is_empty() {
        "0".to_owned()
    } else {
        text.to_owned()
    }
}

fn check_matrix(matrix: &LanguageDistanceMatrix) -> Result<(), TreeError> {
    let n = matrix.len();
    let bad = |msg: String| Err(TreeError::InvalidMatrix(msg));
    if n < 2 {
        return bad(format!("need at least 2 labels, got {n}"));
    }
    let mut names = HashSet::new();
    for name in matrix.names() {
        if !names.insert(name.as_str()) {
            return bad(format!("duplicate label {name:?}"));
        }
    }
    for i in 0..n {
        if matrix.get(i, i) != 0.0 {
            return bad(format!("nonzero diagonal at {i}"));
        }
        for j in 0..n {
            let d = matrix.get(i, j);
            if !d.is_finite() || d < 0.0 {
                return bad(format!("entry ({i}, {j}) is {d}"));
            }
            if (d - matrix.get(j, i)).abs() > SYMMETRY_TOLERANCE {
                return bad(format!("asymmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

/// Average-linkage agglomerative clustering (UPGMA).
///
/// The closest pair of clusters is merged at half their size-weighted mean
/// distance. Ties go to the smallest `(row, column)` pair, where a cluster is
/// identified by its smallest original index; the child with the smaller
/// index is listed first.
pub fn upgma(matrix: &LanguageDistanceMatrix) -> Result<PhyloTree, TreeError> {
    check_matrix(matrix)?;
    let n = matrix.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = 0.5 * (matrix.get(i, j) + matrix.get(j, i));
        }
    }

    let mut nodes: Vec<Node> = matrix.names().iter().map(Node::leaf).collect();
    // slot k holds the cluster whose smallest original index is k
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut alive = vec![true; n];

    for _ in 1..n {
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| alive[i]) {
            for j in (i + 1..n).filter(|&j| alive[j]) {
                if dist[i * n + j] < best.0 {
                    best = (dist[i * n + j], i, j);
                }
            }
        }
        let (d, i, j) = best;
        let (left, right) = (node_of[i], node_of[j]);
        let height = (d / 2.0).max(nodes[left].height).max(nodes[right].height);
        let id = nodes.len();
        nodes.push(Node {
            name: None,
            height,
            parent: None,
            children: vec![left, right],
        });
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in (0..n).filter(|&k| alive[k] && k != i && k != j) {
            let merged = (si * dist[i * n + k] + sj * dist[j * n + k]) / (si + sj);
            dist[i * n + k] = merged;
            dist[k * n + i] = merged;
        }
        node_of[i] = id;
        size[i] += size[j];
        alive[j] = false;
    }
    let root = nodes.len() - 1;
    PhyloTree::from_nodes(nodes, root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(names: &[&str], rows: &[&[f64]]) -> LanguageDistanceMatrix {
        LanguageDistanceMatrix::new(
            names.iter().map(|s| s.to_string()).collect(),
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_leaves() {
        let tree = upgma(&matrix(&["A", "B"], &[&[0.0, 0.4], &[0.4, 0.0]])).unwrap();
        assert_eq!(tree.height(), 0.2);
        assert_eq!(tree.to_newick(), "(A:0.2,B:0.2);");
    }

    #[test]
    fn three_leaves_by_hand() {
        let m = matrix(
            &["A", "B", "C"],
            &[&[0.0, 0.2, 0.6], &[0.2, 0.0, 0.6], &[0.6, 0.6, 0.0]],
        );
        let tree = upgma(&m).unwrap();
        assert_eq!(tree.height(), 0.3);
        assert_eq!(tree.to_newick(), "((A:0.1,B:0.1):0.2,C:0.3);");
        assert_eq!(tree.n_internal(), 2);
        let coph = tree.cophenetic_matrix();
        for (x, y) in coph.values().iter().zip(m.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn size_weighted_average() {
        // (A,B) at 0.1; C is 0.5 from A and 0.7 from B, so 0.6 from the pair
        let m = matrix(
            &["A", "B", "C"],
            &[&[0.0, 0.2, 0.5], &[0.2, 0.0, 0.7], &[0.5, 0.7, 0.0]],
        );
        assert_eq!(upgma(&m).unwrap().height(), 0.3);
    }

    #[test]
    fn ties_take_smallest_pair() {
        let m = matrix(
            &["A", "B", "C"],
            &[&[0.0, 0.4, 0.4], &[0.4, 0.0, 0.4], &[0.4, 0.4, 0.0]],
        );
        assert_eq!(upgma(&m).unwrap().to_newick(), "((A:0.2,B:0.2):0,C:0.2);");
        let m = matrix(
            &["A", "B", "C", "D"],
            &[
                &[0.0, 0.9, 0.9, 0.2],
                &[0.9, 0.0, 0.2, 0.9],
                &[0.9, 0.2, 0.0, 0.9],
                &[0.2, 0.9, 0.9, 0.0],
            ],
        );
        assert_eq!(
            upgma(&m).unwrap().to_newick(),
            "((A:0.1,D:0.1):0.35,(B:0.1,C:0.1):0.35);"
        );
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = matrix(&["A", "B"], &[&[0.0, 0.4], &[0.5, 0.0]]);
        assert!(matches!(upgma(&asym), Err(TreeError::InvalidMatrix(_))));
        let diag = matrix(&["A", "B"], &[&[0.1, 0.4], &[0.4, 0.0]]);
        assert!(matches!(upgma(&diag), Err(TreeError::InvalidMatrix(_))));
        let neg = matrix(&["A", "B"], &[&[0.0, -0.4], &[-0.4, 0.0]]);
        assert!(matches!(upgma(&neg), Err(TreeError::InvalidMatrix(_))));
        let dup = matrix(&["A", "A"], &[&[0.0, 0.4], &[0.4, 0.0]]);
        assert!(matches!(upgma(&dup), Err(TreeError::InvalidMatrix(_))));
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_name("Tok Pisin"), "'Tok Pisin'");
        assert_eq!(quote_name("O'odham"), "'O''odham'");
        assert_eq!(quote_name("Greek"), "Greek");
        assert_eq!(quote_name("a:b"), "'a:b'");
        let tree = upgma(&matrix(&["Tok Pisin", "Hiri Motu"], &[&[0.0, 0.5], &[0.5, 0.0]])).unwrap();
        assert_eq!(tree.to_newick(), "('Tok Pisin':0.25,'Hiri Motu':0.25);");
    }

    #[test]
    fn length_formatting() {
        assert_eq!(format_length(0.3 - 0.1), "0.2");
        assert_eq!(format_length(0.0), "0");
        assert_eq!(format_length(1.0), "1");
        assert_eq!(format_length(0.123456789012345), "0.123456789012");
    }

    #[test]
    fn from_nodes_validates() {
        let leaves = vec![Node::leaf("A"), Node::leaf("A")];
        let mut nodes = leaves;
        nodes.push(Node {
            name: None,
            height: 1.0,
            parent: None,
            children: vec![0, 1],
        });
        assert!(PhyloTree::from_nodes(nodes, 2).is_err());
        let nodes = vec![
            Node::leaf("A"),
            Node::leaf("B"),
            Node {
                name: None,
                height: -1.0,
                parent: None,
                children: vec![0, 1],
            },
        ];
        assert!(PhyloTree::from_nodes(nodes, 2).is_err());
    }
}
