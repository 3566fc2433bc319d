//! Counting copies of an ordered pattern tree inside a host tree.
//!
//! A copy rooted at host vertex `v` is an order-preserving embedding: the root
//! of the pattern goes to `v`, and the children of every pattern vertex are
//! sent injectively, in the same relative order, to children of its image.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::tree::OrderedTree;

/// Exact nonnegative embedding count.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CopyCount(BigUint);

impl CopyCount {
    pub fn zero() -> Self {
        CopyCount(<BigUint as Zero>::zero())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn is_zero(&self) -> bool {
        Zero::is_zero(&self.0)
    }
}

impl From<u64> for CopyCount {
    fn from(v: u64) -> Self {
        CopyCount(BigUint::from(v))
    }
}

impl From<usize> for CopyCount {
    fn from(v: usize) -> Self {
        CopyCount(BigUint::from(v))
    }
}

impl From<BigUint> for CopyCount {
    fn from(v: BigUint) -> Self {
        CopyCount(v)
    }
}

impl Add for CopyCount {
    type Output = CopyCount;

    fn add(self, rhs: CopyCount) -> CopyCount {
        CopyCount(self.0 + rhs.0)
    }
}

impl AddAssign<&CopyCount> for CopyCount {
    fn add_assign(&mut self, rhs: &CopyCount) {
        self.0 += &rhs.0;
    }
}

impl Sum for CopyCount {
    fn sum<I: Iterator<Item = CopyCount>>(iter: I) -> Self {
        iter.fold(CopyCount::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a CopyCount> for CopyCount {
    fn sum<I: Iterator<Item = &'a CopyCount>>(iter: I) -> Self {
        let mut acc = CopyCount::zero();
        for c in iter {
            acc += c;
        }
        acc
    }
}

impl fmt::Display for CopyCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Serialized as a decimal string so that no precision is lost in JSON.
impl Serialize for CopyCount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_str_radix(10))
    }
}

trait Counter: Clone {
    fn nothing() -> Self;
    fn unit() -> Self;
    fn is_nothing(&self) -> bool;
    fn mul_add(&self, a: &Self, b: &Self) -> Option<Self>;
}

impl Counter for u64 {
    fn nothing() -> Self {
        0
    }
    fn unit() -> Self {
        1
    }
    fn is_nothing(&self) -> bool {
        *self == 0
    }
    fn mul_add(&self, a: &Self, b: &Self) -> Option<Self> {
        self.checked_add(a.checked_mul(*b)?)
    }
}

impl Counter for BigUint {
    fn nothing() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nothing(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn mul_add(&self, a: &Self, b: &Self) -> Option<Self> {
        Some(self + a * b)
    }
}

/// `table[v * k + p]` = rooted copies of the pattern's fringe at `p` with root at host vertex `v`.
/// Returns `None` on overflow of the counter type.
fn rooted_table<C: Counter>(pattern: &OrderedTree, host: &OrderedTree) -> Option<Vec<C>> {
    let k = pattern.len();
    let n = host.len();
    let pattern_children: Vec<Vec<usize>> = (0..k).map(|p| pattern.children(p).collect()).collect();
    let mut table = vec![C::nothing(); n * k];
    let mut host_children: Vec<usize> = Vec::new();
    let mut f: Vec<C> = Vec::new();
    for v in (0..n).rev() {
        let m = host.degree(v);
        host_children.clear();
        host_children.extend(host.children(v));
        for p in 0..k {
            let kids = &pattern_children[p];
            let d = kids.len();
            let value = if d == 0 {
                C::unit()
            } else if d > m {
                C::nothing()
            } else {
                // f[i]: ways to place the first i pattern children among the
                // host children seen so far
                f.clear();
                f.push(C::unit());
                f.resize(d + 1, C::nothing());
                for (j, &w) in host_children.iter().enumerate() {
                    // a child at position j can host pattern child i only if
                    // i - 1 <= j and d - i <= m - 1 - j
                    let hi = d.min(j + 1);
                    let lo = (d + j + 1).saturating_sub(m).max(1);
                    for i in (lo..=hi).rev() {
                        let nu = &table[w * k + kids[i - 1]];
                        if nu.is_nothing() || f[i - 1].is_nothing() {
                            continue;
                        }
                        f[i] = f[i].mul_add(nu, &f[i - 1])?;
                    }
                }
                f[d].clone()
            };
            table[v * k + p] = value;
        }
    }
    Some(table)
}

/// Rooted copies of `pattern` at every host vertex (preorder), i.e. `nu_t(T^v)`.
pub fn rooted_copies_all(pattern: &OrderedTree, host: &OrderedTree) -> Vec<CopyCount> {
    let k = pattern.len();
    match rooted_table::<u64>(pattern, host) {
        Some(table) => (0..host.len()).map(|v| CopyCount::from(table[v * k])).collect(),
        None => {
            let table = rooted_table::<BigUint>(pattern, host).expect("big integers do not overflow");
            (0..host.len()).map(|v| CopyCount(table[v * k].clone())).collect()
        }
    }
}

/// Rooted copies at the host root, `nu_t(T)`.
pub fn rooted_copies(pattern: &OrderedTree, host: &OrderedTree) -> CopyCount {
    rooted_copies_all(pattern, host).swap_remove(0)
}

/// Total copies `N_t(T) = sum_v nu_t(T^v)`.
pub fn total_copies(pattern: &OrderedTree, host: &OrderedTree) -> CopyCount {
    rooted_copies_all(pattern, host).iter().sum()
}

/// `N_t(T) / |T|` in floating point.
pub fn copies_per_vertex(pattern: &OrderedTree, host: &OrderedTree) -> f64 {
    total_copies(pattern, host).to_f64() / host.len() as f64
}

/// Copies of the path with `k >= 1` vertices: vertices of depth at least `k - 1`.
pub fn path_copies(host: &OrderedTree, k: usize) -> CopyCount {
    assert!(k >= 1, "paths have at least one vertex");
    let shallow: usize = host.depth_profile().iter().take(k - 1).sum();
    CopyCount::from(host.len() - shallow)
}

/// Copies of the star with `delta` leaves: `sum_v C(d(v), delta)`.
pub fn star_copies(host: &OrderedTree, delta: usize) -> CopyCount {
    host.degree_histogram()
        .iter()
        .enumerate()
        .filter(|&(_, &count)| count > 0)
        .map(|(d, &count)| CopyCount(exact_binomial(d, delta) * BigUint::from(count)))
        .sum()
}

/// Unordered vertex pairs at distance exactly `l >= 1`: ancestor pairs plus
/// pairs that are the two leaves of a copy of a two-branch path.
pub fn undirected_path_pairs(host: &OrderedTree, l: usize) -> CopyCount {
    assert!(l >= 1, "distance must be positive");
    let mut total = path_copies(host, l + 1);
    for q in 1..l {
        total += &total_copies(&OrderedTree::two_path(q, l - q), host);
    }
    total
}

fn exact_binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return <BigUint as Zero>::zero();
    }
    let k = k.min(n - k);
    let mut c = <BigUint as One>::one();
    for j in 0..k {
        c = c * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    c
}
