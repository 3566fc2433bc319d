//! Brute-force ground truth used to validate the fast paths. Every operation
//! refuses inputs above a hard size cap instead of running slowly.

use std::collections::VecDeque;

use crate::count::CopyCount;
use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;
use crate::tree::OrderedTree;

pub const MAX_ENUMERATION_SIZE: usize = 14;
pub const MAX_MEAN_SIZE: usize = 10;
pub const MAX_PATTERN_SIZE: usize = 8;
pub const MAX_HOST_SIZE: usize = 60;
pub const MAX_DISTANCE_HOST_SIZE: usize = 200;

/// All ordered trees with `n` vertices, in lexicographic order of their
/// degree sequences read from the largest root degree down.
pub fn enumerate_ordered_trees(n: usize) -> Result<Vec<OrderedTree>> {
    if n == 0 {
        return Err(Error::Precondition("trees have at least one vertex".into()));
    }
    if n > MAX_ENUMERATION_SIZE {
        return Err(Error::Cap { what: "enumeration size", limit: MAX_ENUMERATION_SIZE });
    }
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(n);
    extend_words(n, 1, &mut word, &mut out);
    Ok(out)
}

fn extend_words(n: usize, open: usize, word: &mut Vec<usize>, out: &mut Vec<OrderedTree>) {
    let remaining = n - word.len();
    if remaining == 0 {
        if open == 0 {
            out.push(OrderedTree::from_valid_word(word.clone()));
        }
        return;
    }
    // after placing this vertex, `open - 1 + d` slots remain and must be
    // filled by the other `remaining - 1` vertices, staying positive until the end
    let rest = remaining - 1;
    for d in (0..=rest + 1 - open).rev() {
        let next = open - 1 + d;
        if next > rest || (next == 0 && rest > 0) {
            continue;
        }
        word.push(d);
        extend_words(n, next, word, out);
        word.pop();
    }
}

/// Weight `prod_v p_{d(v)}` of a tree under the offspring law.
pub fn tree_weight(tree: &OrderedTree, dist: &OffspringDistribution) -> f64 {
    tree.degrees().iter().map(|&d| dist.prob(d)).product()
}

/// Every ordered tree of size `n` with its GW weight.
pub fn enumerated_weights(dist: &OffspringDistribution, n: usize) -> Result<Vec<(OrderedTree, f64)>> {
    Ok(enumerate_ordered_trees(n)?
        .into_iter()
        .map(|t| {
            let w = tree_weight(&t, dist);
            (t, w)
        })
        .collect())
}

/// Rooted copies of `pattern` at host vertex `v`, by enumerating every
/// embedding one at a time.
pub fn naive_rooted_copies(pattern: &OrderedTree, host: &OrderedTree, v: usize) -> Result<CopyCount> {
    if pattern.len() > MAX_PATTERN_SIZE {
        return Err(Error::Cap { what: "pattern size", limit: MAX_PATTERN_SIZE });
    }
    if host.len() > MAX_HOST_SIZE {
        return Err(Error::Cap { what: "host size", limit: MAX_HOST_SIZE });
    }
    if v >= host.len() {
        return Err(Error::OutOfRange { index: v, len: host.len() });
    }
    let mut pending = vec![(0usize, v)];
    Ok(CopyCount::from(enumerate_embeddings(pattern, host, &mut pending)))
}

/// Counts completions of the partial embedding whose unexpanded
/// (pattern vertex, host vertex) pairs are on `pending`.
fn enumerate_embeddings(pattern: &OrderedTree, host: &OrderedTree, pending: &mut Vec<(usize, usize)>) -> u64 {
    let Some((p, w)) = pending.pop() else {
        return 1;
    };
    let pattern_kids: Vec<usize> = pattern.children(p).collect();
    let host_kids: Vec<usize> = host.children(w).collect();
    let d = pattern_kids.len();
    let mut total = 0;
    if d <= host_kids.len() {
        // increasing index tuples choose which host children receive the pattern children
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            for (i, &j) in idx.iter().enumerate() {
                pending.push((pattern_kids[i], host_kids[j]));
            }
            total += enumerate_embeddings(pattern, host, pending);
            pending.truncate(pending.len() - d);
            if !next_combination(&mut idx, host_kids.len()) {
                break;
            }
        }
    }
    pending.push((p, w));
    total
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `E[statistic(T_n)]` computed by summing over all trees of size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumeratedMean {
    pub mean: f64,
    /// `P(|T| = n)`, the total weight of the size-`n` trees.
    pub total_weight: f64,
}

pub fn exact_conditioned_mean_by_enumeration<F>(statistic: F, dist: &OffspringDistribution, n: usize) -> Result<EnumeratedMean>
where
    F: Fn(&OrderedTree) -> f64,
{
    if n > MAX_MEAN_SIZE {
        return Err(Error::Cap { what: "enumerated tree size", limit: MAX_MEAN_SIZE });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (tree, w) in enumerated_weights(dist, n)? {
        if w > 0.0 {
            num += statistic(&tree) * w;
            den += w;
        }
    }
    if den == 0.0 {
        return Err(Error::Span { n, span: dist.span() });
    }
    Ok(EnumeratedMean { mean: num / den, total_weight: den })
}

/// Unordered vertex pairs at graph distance exactly `l`, by BFS from every vertex.
pub fn pairwise_distance_count(host: &OrderedTree, l: usize) -> Result<CopyCount> {
    let n = host.len();
    if n > MAX_DISTANCE_HOST_SIZE {
        return Err(Error::Cap { what: "host size", limit: MAX_DISTANCE_HOST_SIZE });
    }
    let mut adjacency = vec![Vec::new(); n];
    for (v, parent) in host.parents().into_iter().enumerate() {
        if let Some(p) = parent {
            adjacency[v].push(p);
            adjacency[p].push(v);
        }
    }
    let mut pairs = 0u64;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in &adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        pairs += dist.iter().skip(source + 1).filter(|&&d| d == l).count() as u64;
    }
    Ok(CopyCount::from(pairs))
}
