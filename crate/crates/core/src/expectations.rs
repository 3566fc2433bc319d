//! Exact and limiting expectations of the rooted copy count `nu_t`.
//!
//! For a pattern with preorder degree sequence `d_1..d_k`:
//!
//! * unconditioned GW tree: `E nu_t(T) = prod_i E C(xi, d_i)`;
//! * conditioned on `|T| = n > k`:
//!   `E nu_t(T_n) = n/(n-k) * sum_m A(m) (m-k+1) P(S_{n-k} = n-m-1) / P(S_n = n-1)`,
//!   where `A` is the convolution of the measures `m -> p_m C(m, d_i)`;
//! * as `n -> oo`, `E nu_t(T_n) -> sum_i (d_i+1) E C(xi, d_i+1) prod_{j != i} E C(xi, d_j)`;
//! * tree size: `P(|T| = n) = P(S_n = n-1) / n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{binomial, compensated_sum};
use crate::offspring::{Moment, OffspringDistribution};
use crate::random_walk::{convolve_capped, point_prob, walk_sum_pmf_with, WalkConfig, WalkMethod};
use crate::tree::OrderedTree;

/// A value together with a bound on the error caused by tail truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
}

/// Result of the finite-`n` pipeline, with the walk method that produced the
/// probabilities `P(S_j = x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMean {
    pub value: f64,
    pub error_bound: f64,
    pub walk_method: WalkMethod,
}

/// The measure `m -> p_m C(m, d)` for one pattern degree `d`, on `0..=cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDegreeMeasure {
    degree: usize,
    weights: Vec<f64>,
}

impl WeightedDegreeMeasure {
    pub fn new(dist: &OffspringDistribution, degree: usize, cap: usize) -> Self {
        let weights = dist
            .probs()
            .iter()
            .enumerate()
            .take(cap + 1)
            .map(|(m, &p)| p * binomial(m, degree))
            .collect();
        WeightedDegreeMeasure { degree, weights }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }
}

/// `E nu_t(T) = prod_i E C(xi, d_i)` for the unconditioned tree; this is the
/// limit of `N_t(T_n) / n`.
pub fn limit_root_mean(pattern: &OrderedTree, dist: &OffspringDistribution) -> Estimate {
    let moments: Vec<Moment> = pattern.degrees().iter().map(|&d| dist.factorial_binomial_moment(d)).collect();
    product_with_bound(&moments)
}

fn product_with_bound(moments: &[Moment]) -> Estimate {
    let value: f64 = moments.iter().map(|m| m.value).product();
    let upper: f64 = moments.iter().map(|m| m.value + m.error_bound).product();
    let lower: f64 = moments.iter().map(|m| (m.value - m.error_bound).max(0.0)).product();
    let error_bound = if value.is_infinite() { 0.0 } else { (upper - value).max(value - lower) };
    Estimate { value, error_bound }
}

/// Exact `E nu_t(T_n)` for `n > |t|`.
pub fn exact_root_mean_conditioned(pattern: &OrderedTree, dist: &OffspringDistribution, n: usize) -> Result<ExactMean> {
    exact_root_mean_conditioned_with(pattern, dist, n, true)
}

/// As [`exact_root_mean_conditioned`]; `closed_forms = false` forces the
/// generic convolution route for `S_n`.
pub fn exact_root_mean_conditioned_with(
    pattern: &OrderedTree,
    dist: &OffspringDistribution,
    n: usize,
    closed_forms: bool,
) -> Result<ExactMean> {
    let k = pattern.len();
    if n <= k {
        return Err(Error::Size { n, k });
    }
    let h = dist.span();
    if (n - 1) % h != 0 {
        return Err(Error::Span { n, span: h });
    }
    // only m <= n - 1 contributes: beyond that P(S_{n-k} = n-m-1) = 0
    let cap = n - 1;
    let mut measures = pattern.degrees().iter().map(|&d| WeightedDegreeMeasure::new(dist, d, cap));
    let first = measures.next().expect("patterns are nonempty");
    let combined = measures.fold(first.weights, |acc, w| convolve_capped(&acc, &w.weights, cap));

    let config = WalkConfig { use_closed_forms: closed_forms, max_value: Some(cap), ..WalkConfig::default() };
    let walk = walk_sum_pmf_with(dist, n - k, &config)?;
    let denominator = if closed_forms {
        point_prob(dist, n, cap as i64)
    } else {
        walk_sum_pmf_with(dist, n, &config)?.pmf.prob(cap as i64)
    };
    if !(denominator > 0.0) {
        return Err(Error::Span { n, span: h });
    }

    let weighted = compensated_sum(combined.iter().enumerate().filter(|&(_, &a)| a > 0.0).map(|(m, &a)| {
        let surplus = (m + 1 - k) as f64;
        a * surplus * walk.pmf.prob((n - m - 1) as i64)
    }));
    let scale = n as f64 / (n - k) as f64;
    let numerator = scale * weighted;
    let value = numerator / denominator;

    let error_bound = if dist.has_finite_support() || dist.max_degree() >= cap {
        0.0
    } else {
        truncation_bound(pattern, dist, n, numerator, denominator, &combined, walk.method.is_closed_form() && closed_forms)
    };
    Ok(ExactMean { value, error_bound, walk_method: walk.method })
}

/// Bound on the effect of the mass beyond the stored support. The stored
/// probabilities under-count both the numerator and `P(S_n = n-1)`.
fn truncation_bound(
    pattern: &OrderedTree,
    dist: &OffspringDistribution,
    n: usize,
    numerator: f64,
    denominator: f64,
    combined: &[f64],
    exact_walk: bool,
) -> f64 {
    let k = pattern.len();
    let tau = dist.tail_mass();
    let defect = |steps: usize| -> f64 {
        if exact_walk {
            0.0
        } else {
            -(steps as f64 * (-tau).ln_1p()).exp_m1()
        }
    };
    let moments: Vec<Moment> = pattern.degrees().iter().map(|&d| dist.factorial_binomial_moment(d)).collect();
    let full: f64 = moments.iter().map(|m| m.value + m.error_bound).product();
    let within: f64 = moments.iter().map(|m| m.within_support).product();
    let missing_a = (full - within).max(0.0);
    let surplus_mass = compensated_sum(
        combined.iter().enumerate().filter(|&(_, &a)| a > 0.0).map(|(m, &a)| a * (m + 1 - k) as f64),
    );
    let scale = n as f64 / (n - k) as f64;
    let delta_num = scale * ((n - k) as f64 * missing_a + defect(n - k) * surplus_mass);
    let delta_den = defect(n);
    let value = numerator / denominator;
    let lower = numerator / (denominator + delta_den);
    let upper = (numerator + delta_num) / denominator;
    (value - lower).max(upper - value)
}

/// `lim E nu_t(T_n) = sum_i (d_i+1) E C(xi, d_i+1) prod_{j != i} E C(xi, d_j)`;
/// `f64::INFINITY` when a required moment diverges.
pub fn limit_root_mean_conditioned(pattern: &OrderedTree, dist: &OffspringDistribution) -> Estimate {
    let degrees = pattern.degrees();
    let base: Vec<Moment> = degrees.iter().map(|&d| dist.factorial_binomial_moment(d)).collect();
    let mut value = 0.0;
    let mut error_bound = 0.0;
    for (i, &d) in degrees.iter().enumerate() {
        let mut factors: Vec<Moment> = base.clone();
        factors[i] = dist.factorial_binomial_moment(d + 1);
        let others: f64 = factors.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, m)| m.value).product();
        if others == 0.0 {
            continue;
        }
        let term = product_with_bound(&factors);
        value += (d + 1) as f64 * term.value;
        error_bound += (d + 1) as f64 * term.error_bound;
    }
    if value.is_infinite() {
        error_bound = 0.0;
    }
    Estimate { value, error_bound }
}

/// Exact `E N_{S_delta}(T_n) / n`, the finite-`n` counterpart of
/// `E C(xi, delta)`. The degree sequence of `T_n` is a rotation of `n` i.i.d.
/// steps conditioned on `S_n = n - 1`, so each degree has the law of `xi_1`
/// given that event and the density is `E[C(xi_1, delta) | S_n = n - 1]`.
pub fn exact_star_density(delta: usize, dist: &OffspringDistribution, n: usize) -> Result<Estimate> {
    let h = dist.span();
    if n == 0 || (n - 1) % h != 0 {
        return Err(Error::Span { n, span: h });
    }
    let cap = n - 1;
    let measure = WeightedDegreeMeasure::new(dist, delta, cap);
    let walk = walk_sum_pmf_with(dist, n - 1, &WalkConfig::up_to(cap))?;
    let denominator = point_prob(dist, n, cap as i64);
    if !(denominator > 0.0) {
        return Err(Error::Span { n, span: h });
    }
    let numerator = compensated_sum(
        measure.weights().iter().enumerate().map(|(m, &a)| a * walk.pmf.prob((cap - m) as i64)),
    );
    let value = numerator / denominator;
    let error_bound = if dist.has_finite_support() || dist.max_degree() >= cap {
        0.0
    } else {
        // missing degrees each contribute at most p_m C(m, delta) max_j P(S_{n-1} = j)
        let moment = dist.factorial_binomial_moment(delta);
        let missing = (moment.value + moment.error_bound - measure.total()).max(0.0);
        let peak = walk.pmf.mass().iter().copied().fold(0.0, f64::max);
        let walk_defect = if walk.method.is_closed_form() { 0.0 } else { -((n as f64) * (-dist.tail_mass()).ln_1p()).exp_m1() };
        let upper = (numerator + missing * peak) / denominator;
        let lower = numerator / (denominator + walk_defect);
        (upper - value).max(value - lower)
    };
    Ok(Estimate { value, error_bound })
}

/// `P(|T| = n) = P(S_n = n - 1) / n`.
pub fn tree_size_prob(dist: &OffspringDistribution, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if (n - 1) % dist.span() != 0 {
        return 0.0;
    }
    point_prob(dist, n, n as i64 - 1) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(spec: &str) -> OffspringDistribution {
        OffspringDistribution::parse(spec).unwrap()
    }

    #[test]
    fn limit_constants() {
        let cherry = OrderedTree::star(2);
        assert!((limit_root_mean(&cherry, &dist("poisson:1")).value - 0.5).abs() < 1e-12);
        assert!((limit_root_mean(&cherry, &dist("geometric:0.5")).value - 1.0).abs() < 1e-12);
        assert!((limit_root_mean(&cherry, &dist("binomial:2:0.5")).value - 0.25).abs() < 1e-15);
        for k in 1..6 {
            assert!((limit_root_mean(&OrderedTree::path(k), &dist("poisson:1")).value - 1.0).abs() < 1e-12);
        }
        assert_eq!(limit_root_mean(&OrderedTree::single_node(), &dist("pmf:0.5,0,0.5")).value, 1.0);
    }

    #[test]
    fn limit_independent_of_branch_lengths() {
        let d = dist("geometric:0.5");
        let second = d.factorial_binomial_moment(2).value;
        for (q, r) in [(1, 1), (1, 2), (2, 1), (3, 5)] {
            let v = limit_root_mean(&OrderedTree::two_path(q, r), &d).value;
            assert!((v - second).abs() < 1e-12, "{q},{r}");
        }
    }

    #[test]
    fn conditioned_limits() {
        let p2 = OrderedTree::path(2);
        assert!((limit_root_mean_conditioned(&p2, &dist("poisson:1")).value - 2.0).abs() < 1e-12);
        assert!((limit_root_mean_conditioned(&p2, &dist("geometric:0.5")).value - 3.0).abs() < 1e-12);
        for spec in ["poisson:1", "binomial:2:0.5", "pmf:0.5,0,0.5"] {
            let v = limit_root_mean_conditioned(&OrderedTree::single_node(), &dist(spec)).value;
            assert!((v - 1.0).abs() < 1e-12, "{spec}");
        }
    }

    #[test]
    fn conditioned_limit_diverges_for_heavy_tail() {
        let d = dist("heavytail:2:0.2:500");
        let star = OrderedTree::star(2);
        assert!(limit_root_mean(&star, &d).value.is_finite());
        assert!(limit_root_mean_conditioned(&star, &d).value.is_infinite());
    }

    #[test]
    fn exact_mean_small_cases() {
        let d = dist("geometric:0.5");
        let v = exact_root_mean_conditioned(&OrderedTree::path(2), &d, 3).unwrap();
        assert!((v.value - 1.5).abs() < 1e-12);
        for n in [2, 3, 10, 57] {
            let v = exact_root_mean_conditioned(&OrderedTree::single_node(), &dist("poisson:1"), n).unwrap();
            assert!((v.value - 1.0).abs() < 1e-10, "{n}");
        }
    }

    #[test]
    fn exact_mean_errors() {
        let cherry = OrderedTree::star(2);
        assert!(matches!(
            exact_root_mean_conditioned(&cherry, &dist("poisson:1"), 3),
            Err(Error::Size { n: 3, k: 3 })
        ));
        assert!(matches!(
            exact_root_mean_conditioned(&cherry, &dist("pmf:0.5,0,0.5"), 6),
            Err(Error::Span { n: 6, span: 2 })
        ));
    }

    #[test]
    fn closed_form_and_generic_routes_agree() {
        for spec in ["poisson:1", "geometric:0.5", "binomial:2:0.5"] {
            let d = dist(spec);
            for n in [5, 20, 61] {
                let a = exact_root_mean_conditioned_with(&OrderedTree::two_path(1, 2), &d, n, true).unwrap();
                let b = exact_root_mean_conditioned_with(&OrderedTree::two_path(1, 2), &d, n, false).unwrap();
                assert!((a.value - b.value).abs() < 1e-9, "{spec} n={n}: {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn tree_size_probabilities() {
        let g = dist("geometric:0.5");
        assert!((tree_size_prob(&g, 1) - 0.5).abs() < 1e-14);
        assert!((tree_size_prob(&g, 3) - 1.0 / 16.0).abs() < 1e-14);
        let p = dist("poisson:1");
        assert!((tree_size_prob(&p, 2) - (-2f64).exp()).abs() < 1e-14);
        assert_eq!(tree_size_prob(&dist("pmf:0.5,0,0.5"), 4), 0.0);
    }

    #[test]
    fn measure_totals_match_moments() {
        let d = dist("binomial:3:1/3");
        for deg in 0..4 {
            let w = WeightedDegreeMeasure::new(&d, deg, 10);
            assert!((w.total() - d.factorial_binomial_moment(deg).value).abs() < 1e-15);
            assert!(w.weights()[..deg].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn star_density_matches_independent_values() {
        // 50-digit arithmetic over the explicit walk laws; the log-space
        // closed forms lose about 1e-12 to rounding at this size
        let cases = [("geometric:0.5", 0.9980014992503748), ("poisson:1", 0.49925025), ("binomial:2:0.5", 0.24968754688672168)];
        for (spec, expected) in cases {
            let got = exact_star_density(2, &dist(spec), 2000).unwrap();
            assert!((got.value - expected).abs() <= got.error_bound + 1e-11, "{spec}: {got:?}");
            assert!(got.error_bound < 1e-10);
        }
    }

    #[test]
    fn star_density_matches_enumeration() {
        for spec in ["geometric:0.5", "pmf:0.5,0,0.5", "poisson:1:12", "binomial:3:1/3"] {
            let d = dist(spec);
            for n in (1..=9).filter(|n| (n - 1) % d.span() == 0) {
                for delta in 0..4 {
                    let oracle = crate::oracle::exact_conditioned_mean_by_enumeration(
                        |t| crate::count::star_copies(t, delta).to_f64() / n as f64,
                        &d,
                        n,
                    )
                    .unwrap()
                    .mean;
                    let got = exact_star_density(delta, &d, n).unwrap().value;
                    assert!((got - oracle).abs() < 1e-12, "{spec} n={n} delta={delta}: {got} vs {oracle}");
                }
            }
        }
    }
}
