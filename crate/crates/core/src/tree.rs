//! Rooted ordered trees stored as their preorder degree sequence
//! (Łukasiewicz word). The same type is used for host trees and patterns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Rooted ordered tree. Vertices are numbered `0..len()` in depth-first
/// preorder; vertex 0 is the root.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OrderedTree {
    degrees: Vec<usize>,
    /// `subtree_len[v]` is the size of the fringe subtree at `v`, so the
    /// fringe occupies `v..v + subtree_len[v]` of the preorder.
    subtree_len: Vec<usize>,
}

impl OrderedTree {
    /// Builds a tree from its preorder degree sequence.
    pub fn from_lukasiewicz(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::NotATree("empty degree sequence".into()));
        }
        // open slots still to be filled; the word is a tree iff the count
        // first reaches zero exactly at the last vertex
        let mut open: usize = 1;
        for (i, &d) in degrees.iter().enumerate() {
            if open == 0 {
                return Err(Error::NotATree(format!("sequence is complete after {i} vertices")));
            }
            open = open - 1 + d;
        }
        if open != 0 {
            return Err(Error::NotATree(format!("{open} children missing at end of sequence")));
        }
        let subtree_len = subtree_lengths(&degrees);
        Ok(OrderedTree { degrees, subtree_len })
    }

    /// Tree from a word already known to be valid (internal fast path).
    pub(crate) fn from_valid_word(degrees: Vec<usize>) -> Self {
        debug_assert!(Self::from_lukasiewicz(degrees.clone()).is_ok());
        let subtree_len = subtree_lengths(&degrees);
        OrderedTree { degrees, subtree_len }
    }

    pub fn single_node() -> Self {
        Self::from_valid_word(vec![0])
    }

    /// Path with `k >= 1` vertices.
    pub fn path(k: usize) -> Self {
        assert!(k >= 1, "a path has at least one vertex");
        let mut degrees = vec![1; k];
        degrees[k - 1] = 0;
        Self::from_valid_word(degrees)
    }

    /// Root with `delta` leaf children.
    pub fn star(delta: usize) -> Self {
        let mut degrees = vec![0; delta + 1];
        degrees[0] = delta;
        Self::from_valid_word(degrees)
    }

    /// Two paths with `q + 1` and `r + 1` vertices joined at the root; the
    /// length-`q` branch is the first child.
    pub fn two_path(q: usize, r: usize) -> Self {
        assert!(q >= 1 && r >= 1, "both branches need at least one edge");
        let mut degrees = Vec::with_capacity(q + r + 1);
        degrees.push(2);
        for len in [q, r] {
            degrees.extend(std::iter::repeat(1).take(len - 1));
            degrees.push(0);
        }
        Self::from_valid_word(degrees)
    }

    /// Parses the parenthesis form: `node = "(" node* ")"`. Whitespace is ignored.
    pub fn parse_parens(text: &str) -> Result<Self> {
        let mut degrees = Vec::new();
        // stack of preorder indices of currently open nodes
        let mut stack: Vec<usize> = Vec::new();
        let mut closed_root = false;
        for (pos, ch) in text.chars().enumerate() {
            match ch {
                '(' => {
                    if closed_root {
                        return Err(Error::Parse(format!("text after the root closes (position {pos})")));
                    }
                    if let Some(&parent) = stack.last() {
                        degrees[parent] += 1;
                    }
                    stack.push(degrees.len());
                    degrees.push(0);
                }
                ')' => {
                    if stack.pop().is_none() {
                        return Err(Error::Parse(format!("unmatched ')' at position {pos}")));
                    }
                    if stack.is_empty() {
                        closed_root = true;
                    }
                }
                c if c.is_whitespace() => {}
                c => return Err(Error::Parse(format!("unexpected character {c:?} at position {pos}"))),
            }
        }
        if !stack.is_empty() {
            return Err(Error::Parse(format!("{} unclosed '('", stack.len())));
        }
        if degrees.is_empty() {
            return Err(Error::Parse("empty tree text".into()));
        }
        Ok(Self::from_valid_word(degrees))
    }

    pub fn to_parens(&self) -> String {
        let mut out = String::with_capacity(2 * self.len());
        // remaining children of each open ancestor
        let mut pending: Vec<usize> = Vec::new();
        for &d in &self.degrees {
            out.push('(');
            pending.push(d);
            while let Some(&0) = pending.last() {
                pending.pop();
                out.push(')');
                if let Some(top) = pending.last_mut() {
                    *top -= 1;
                }
            }
        }
        out
    }

    /// Number of vertices `|T|`.
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    /// Always false; a tree has at least one vertex.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    /// Size of the fringe subtree at `v`.
    pub fn subtree_len(&self, v: usize) -> usize {
        self.subtree_len[v]
    }

    /// Maximum outdegree.
    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Children of `v` in left-to-right order.
    pub fn children(&self, v: usize) -> Children<'_> {
        Children { tree: self, next: v + 1, remaining: self.degrees[v] }
    }

    /// Fringe subtree at `v`: `v` and all its descendants.
    pub fn fringe(&self, v: usize) -> Result<OrderedTree> {
        if v >= self.len() {
            return Err(Error::OutOfRange { index: v, len: self.len() });
        }
        let end = v + self.subtree_len[v];
        Ok(OrderedTree {
            degrees: self.degrees[v..end].to_vec(),
            subtree_len: self.subtree_len[v..end].to_vec(),
        })
    }

    /// Depth of every vertex (root has depth 0).
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.len()];
        for v in 0..self.len() {
            for w in self.children(v) {
                depth[w] = depth[v] + 1;
            }
        }
        depth
    }

    /// Parent of every vertex; `None` for the root.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.len()];
        for v in 0..self.len() {
            for w in self.children(v) {
                parent[w] = Some(v);
            }
        }
        parent
    }

    /// Number of vertices at each depth, `nu_i(T)` for `i = 0..=height`.
    pub fn depth_profile(&self) -> Vec<usize> {
        let mut profile = Vec::new();
        for d in self.depths() {
            if d >= profile.len() {
                profile.resize(d + 1, 0);
            }
            profile[d] += 1;
        }
        profile
    }

    /// Number of vertices of each outdegree, `X_r(T)` for `r = 0..=max_degree`.
    pub fn degree_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.max_degree() + 1];
        for &d in &self.degrees {
            hist[d] += 1;
        }
        hist
    }

    pub fn height(&self) -> usize {
        self.depth_profile().len() - 1
    }
}

pub struct Children<'a> {
    tree: &'a OrderedTree,
    next: usize,
    remaining: usize,
}

impl Iterator for Children<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        let child = self.next;
        self.next += self.tree.subtree_len[child];
        self.remaining -= 1;
        Some(child)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Children<'_> {}

fn subtree_lengths(degrees: &[usize]) -> Vec<usize> {
    let n = degrees.len();
    let mut len = vec![1; n];
    // stack of (vertex, children still expected)
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for (v, &d) in degrees.iter().enumerate() {
        if let Some(top) = stack.last_mut() {
            top.1 -= 1;
        }
        stack.push((v, d));
        while let Some(&(u, 0)) = stack.last() {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                len[p] += len[u];
            }
        }
    }
    len
}

impl fmt::Display for OrderedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_parens())
    }
}

impl fmt::Debug for OrderedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrderedTree({})", self.to_parens())
    }
}

impl FromStr for OrderedTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_parens(s)
    }
}

impl Serialize for OrderedTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_parens())
    }
}

impl<'de> Deserialize<'de> for OrderedTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Self::parse_parens(&text).map_err(serde::de::Error::custom)
    }
}
