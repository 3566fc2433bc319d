//! Formula, sampler and counter agree at sizes small enough to enumerate.

use gwpattern::experiments::{run_lln, ExperimentConfig};
use gwpattern::oracle::{exact_conditioned_mean_by_enumeration, naive_rooted_copies};
use gwpattern::{
    exact_root_mean_conditioned, rooted_copies, ConditionedSampler, OffspringDistribution, OrderedTree, RngState,
};

fn dist(spec: &str) -> OffspringDistribution {
    spec.parse().unwrap()
}

#[test]
fn formula_sampler_and_counter_agree() {
    let cases = [
        ("geometric:0.5", OrderedTree::star(2), 8),
        ("binomial:2:0.5", OrderedTree::two_path(1, 2), 8),
        ("poisson:1:12", OrderedTree::path(3), 7),
        ("pmf:0.5,0,0.5", OrderedTree::star(2), 7),
    ];
    for (i, (spec, pattern, n)) in cases.into_iter().enumerate() {
        let d = dist(spec);
        let exact = exact_root_mean_conditioned(&pattern, &d, n).unwrap().value;
        let oracle = exact_conditioned_mean_by_enumeration(|t| naive_rooted_copies(&pattern, t, 0).unwrap().to_f64(), &d, n)
            .unwrap()
            .mean;
        assert!((exact - oracle).abs() < 1e-10);

        let sampler = ConditionedSampler::new(&d, n).unwrap();
        let reps = 40_000u64;
        let values: Vec<f64> = (0..reps)
            .map(|r| rooted_copies(&pattern, &sampler.sample(&mut RngState::new(900 + i as u64, r).rng()).unwrap()).to_f64())
            .collect();
        let mean = values.iter().sum::<f64>() / reps as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - exact).abs() <= 4.0 * se.max(1e-12), "{spec}: sampled {mean} vs exact {exact} (se {se})");
    }
}

#[test]
fn experiment_reports_three_way_agreement() {
    let report = run_lln(&OrderedTree::star(2), &dist("geometric:0.5"), &[20, 40], &ExperimentConfig::new(4000, 17)).unwrap();
    let check = report.verdicts.iter().find(|v| v.check == "root_mean_consistency").unwrap();
    assert!(check.passed, "{}", check.detail);
    for row in &report.rows {
        assert!(row.exact_root_mean.is_some());
    }
}
