//! Exact samplers for Galton–Watson trees, unconditioned (with a size cap) and
//! conditioned on their size.
//!
//! The conditioned sampler draws `n` i.i.d. degrees, rejects unless they sum
//! to `n - 1`, and rotates the accepted word cyclically into the unique
//! rotation that is a valid Łukasiewicz word (cycle lemma).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;
use crate::tree::OrderedTree;

pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

/// Seed plus stream index; identical states yield identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngState { seed, stream }
    }

    /// Generator for this state. The key is a mix of the seed and the stream
    /// selects an independent ChaCha stream, so replicate `i` of a run does not
    /// depend on how replicates are scheduled.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed));
        rng.set_stream(self.stream);
        rng
    }
}

/// Generator for replicate `index` of a run seeded with `master_seed`.
pub fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    RngState::new(master_seed, index).rng()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE5_E4B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Draws degrees from the full offspring law: stored support, explicit tail
/// terms, and (for power-law tails) an exact rejection sampler beyond `M`.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    alias: WeightedAliasIndex<f64>,
    /// degree of each alias category
    values: Vec<usize>,
    /// probability of each category, same order as `values`
    weights: Vec<f64>,
    power_tail: Option<PowerTail>,
}

#[derive(Debug, Clone)]
struct PowerTail {
    mass: f64,
    exponent: f64,
    cut: usize,
}

impl DegreeSampler {
    pub fn new(dist: &OffspringDistribution) -> Self {
        let mut values = Vec::new();
        let mut weights = Vec::new();
        for (i, &p) in dist.probs().iter().enumerate() {
            if p > 0.0 {
                values.push(i);
                weights.push(p);
            }
        }
        let mut power_tail = None;
        if dist.tail_mass() > 0.0 {
            match dist.family() {
                crate::offspring::Family::HeavyTail { root_degree, eps, .. } => {
                    power_tail = Some(PowerTail {
                        mass: dist.tail_mass(),
                        exponent: *root_degree as f64 + 1.0 + eps,
                        cut: dist.max_degree(),
                    });
                }
                _ => {
                    for (j, p) in dist_tail_terms(dist).into_iter().enumerate() {
                        if p > 0.0 {
                            values.push(dist.max_degree() + 1 + j);
                            weights.push(p);
                        }
                    }
                }
            }
        }
        let alias = WeightedAliasIndex::new(weights.clone()).expect("critical laws have positive mass");
        DegreeSampler { alias, values, weights, power_tail }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if let Some(tail) = &self.power_tail {
            if rng.random::<f64>() < tail.mass {
                return tail.sample(rng);
            }
        }
        self.values[self.alias.sample(rng)]
    }

    /// Support points with positive probability (power-law tail excluded).
    pub fn categories(&self) -> (&[usize], &[f64]) {
        (&self.values, &self.weights)
    }

    pub fn has_power_tail(&self) -> bool {
        self.power_tail.is_some()
    }
}

impl PowerTail {
    /// Exact draw from `P(m) ∝ m^-a`, `m > cut`: floor of a Pareto proposal on
    /// `[cut + 1, oo)`, accepted with probability `m^-a / (int_m^{m+1} x^-a dx * bound)`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let a = self.exponent;
        let lo = (self.cut + 1) as f64;
        let bound = (1.0 + 1.0 / lo).powf(a);
        loop {
            let u: f64 = rng.random();
            let y = lo * (1.0 - u).powf(-1.0 / (a - 1.0));
            if !y.is_finite() || y > 1e15 {
                continue;
            }
            let m = y.floor();
            let cell = (m.powf(1.0 - a) - (m + 1.0).powf(1.0 - a)) / (a - 1.0);
            let ratio = m.powf(-a) / cell / bound;
            if rng.random::<f64>() < ratio {
                return m as usize;
            }
        }
    }
}

fn dist_tail_terms(dist: &OffspringDistribution) -> Vec<f64> {
    // Rebuild the explicit tail of the parametric families from their closed form.
    use crate::offspring::Family;
    let cut = dist.max_degree();
    let mut terms = Vec::new();
    match *dist.family() {
        Family::Poisson { lambda } => {
            let mut p = dist.prob(cut);
            let mut i = cut;
            loop {
                i += 1;
                p *= lambda / i as f64;
                if p < 1e-300 {
                    break;
                }
                terms.push(p);
            }
        }
        Family::Geometric { p } => {
            let mut t = dist.prob(cut);
            loop {
                t *= 1.0 - p;
                if t < 1e-300 {
                    break;
                }
                terms.push(t);
            }
        }
        _ => {}
    }
    terms
}

/// Outcome of an unconditioned draw that reached the size cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapExceeded {
    pub size_cap: usize,
}

/// Unconditioned GW tree, or `CapExceeded` if it would have more than `size_cap` vertices.
pub fn sample_unconditioned<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    rng: &mut R,
    size_cap: usize,
) -> std::result::Result<OrderedTree, CapExceeded> {
    let sampler = DegreeSampler::new(dist);
    sample_unconditioned_with(&sampler, rng, size_cap)
}

pub fn sample_unconditioned_with<R: Rng + ?Sized>(
    sampler: &DegreeSampler,
    rng: &mut R,
    size_cap: usize,
) -> std::result::Result<OrderedTree, CapExceeded> {
    let mut degrees = Vec::new();
    let mut open = 1usize;
    while open > 0 {
        if degrees.len() >= size_cap {
            return Err(CapExceeded { size_cap });
        }
        let d = sampler.sample(rng);
        degrees.push(d);
        open = open - 1 + d;
    }
    Ok(OrderedTree::from_valid_word(degrees))
}

/// How the degree multiset of a conditioned tree is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Pick per `n`: multinomial counts when the support is small compared to `n`.
    Auto,
    /// `n` i.i.d. degree draws per round.
    Direct,
    /// Multinomial degree counts by binomial splitting, then a uniform arrangement.
    Multinomial,
}

/// Sampler for `T_n`, the GW tree conditioned on `|T| = n`.
#[derive(Debug, Clone)]
pub struct ConditionedSampler {
    n: usize,
    degrees: DegreeSampler,
    strategy: Strategy,
    budget: u64,
    /// `weights[i] / suffix[i]`, the binomial splitting probabilities
    split: Vec<f64>,
}

impl ConditionedSampler {
    pub fn new(dist: &OffspringDistribution, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("tree size must be at least 1".into()));
        }
        let h = dist.span();
        if (n - 1) % h != 0 {
            return Err(Error::Span { n, span: h });
        }
        let degrees = DegreeSampler::new(dist);
        let (_, weights) = degrees.categories();
        let mut suffix = vec![0.0; weights.len() + 1];
        for i in (0..weights.len()).rev() {
            suffix[i] = suffix[i + 1] + weights[i];
        }
        let split = weights.iter().zip(&suffix).map(|(w, s)| (w / s).clamp(0.0, 1.0)).collect();
        Ok(ConditionedSampler { n, degrees, strategy: Strategy::Auto, budget: DEFAULT_REJECTION_BUDGET, split })
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_budget(mut self, rounds: u64) -> Self {
        self.budget = rounds;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn resolved_strategy(&self) -> Strategy {
        match self.strategy {
            Strategy::Auto => {
                if !self.degrees.has_power_tail() && 8 * self.degrees.categories().0.len() < self.n {
                    Strategy::Multinomial
                } else {
                    Strategy::Direct
                }
            }
            Strategy::Multinomial if self.degrees.has_power_tail() => Strategy::Direct,
            s => s,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OrderedTree> {
        let mut word = match self.resolved_strategy() {
            Strategy::Multinomial => self.draw_multinomial(rng)?,
            _ => self.draw_direct(rng)?,
        };
        let start = cycle_lemma_start(&word);
        word.rotate_left(start);
        Ok(OrderedTree::from_valid_word(word))
    }

    fn draw_direct<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let target = self.n - 1;
        let mut word = Vec::with_capacity(self.n);
        for _ in 0..self.budget {
            word.clear();
            let mut total = 0usize;
            for _ in 0..self.n {
                let d = self.degrees.sample(rng);
                total += d;
                if total > target {
                    break;
                }
                word.push(d);
            }
            if word.len() == self.n && total == target {
                return Ok(word);
            }
        }
        Err(Error::Budget { rounds: self.budget })
    }

    fn draw_multinomial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let target = self.n - 1;
        let (values, _) = self.degrees.categories();
        let mut counts = vec![0u64; values.len()];
        'round: for _ in 0..self.budget {
            let mut remaining = self.n as u64;
            let mut total = 0usize;
            for (i, &p) in self.split.iter().enumerate() {
                let c = if remaining == 0 {
                    0
                } else if p >= 1.0 {
                    remaining
                } else if p <= 0.0 {
                    0
                } else {
                    Binomial::new(remaining, p).expect("valid binomial").sample(rng)
                };
                counts[i] = c;
                remaining -= c;
                total += values[i] * c as usize;
                if total > target {
                    continue 'round;
                }
            }
            if total != target || remaining != 0 {
                continue;
            }
            let mut word = Vec::with_capacity(self.n);
            for (&v, &c) in values.iter().zip(&counts) {
                word.extend(std::iter::repeat(v).take(c as usize));
            }
            word.shuffle(rng);
            return Ok(word);
        }
        Err(Error::Budget { rounds: self.budget })
    }
}

/// `T_n` with the default strategy and budget.
pub fn sample_conditioned<R: Rng + ?Sized>(dist: &OffspringDistribution, n: usize, rng: &mut R) -> Result<OrderedTree> {
    ConditionedSampler::new(dist, n)?.sample(rng)
}

/// Start index of the unique rotation of `word` (degrees summing to
/// `len - 1`) that is a Łukasiewicz word: the position right after the first
/// prefix at which the partial sums of `d_i - 1` reach their minimum.
pub fn cycle_lemma_start(word: &[usize]) -> usize {
    let mut sum: i64 = 0;
    let mut min = i64::MAX;
    let mut arg = 0;
    for (j, &d) in word.iter().enumerate() {
        sum += d as i64 - 1;
        if sum < min {
            min = sum;
            arg = j + 1;
        }
    }
    arg % word.len().max(1)
}
