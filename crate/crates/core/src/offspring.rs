//! Critical offspring distributions and their moments.
//!
//! Infinite-support families are truncated at an explicit maximum degree `M`
//! and never renormalised: the mass beyond `M` is kept as `tail_mass`, and the
//! tail itself is retained (as explicit terms, or as a power law) so that
//! moment computations can report how much the truncation leaves out.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{
    binomial, compensated_sum, falling_factorial_coefficients, gcd, power_tail_error, power_tail_sum,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Infinite families are cut where the remaining mass drops to this level.
pub const DEFAULT_TAIL_CUTOFF: f64 = 1e-14;
const NORMALIZATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Poisson { lambda: f64 },
    Geometric { p: f64 },
    Binomial { trials: usize, p: f64 },
    Custom,
    HeavyTail { root_degree: usize, eps: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Tail {
    None,
    /// Probabilities of degrees `M+1, M+2, ...`, listed until they underflow.
    Explicit(Vec<f64>),
    /// `p_m = scale * m^(-exponent)` for all `m > M`.
    PowerLaw { scale: f64, exponent: f64 },
}

/// A factorial-binomial (or ordinary) moment of the full law.
///
/// `value` includes the contribution of the truncated tail; `within_support`
/// is the finite sum over the stored probabilities only. `value` is
/// `f64::INFINITY` when the tail makes the moment diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moment {
    pub value: f64,
    pub within_support: f64,
    pub error_bound: f64,
}

impl Moment {
    fn exact(value: f64) -> Self {
        Moment { value, within_support: value, error_bound: 0.0 }
    }

    pub fn is_divergent(&self) -> bool {
        self.value.is_infinite()
    }

    /// Contribution of the degrees beyond the stored support.
    pub fn tail(&self) -> f64 {
        self.value - self.within_support
    }
}

/// Offspring law of a critical Galton–Watson tree.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
    tail: Tail,
    family: Family,
    tolerance: f64,
    spec: String,
}

impl OffspringDistribution {
    /// Parses `poisson:<l>[:<M>]`, `geometric:<p>[:<M>]`, `binomial:<m>:<p>`,
    /// `pmf:<p0,p1,...>` or `heavytail:<D>:<eps>:<M>`.
    pub fn parse(spec: &str) -> Result<Self> {
        Self::parse_with_tolerance(spec, DEFAULT_TOLERANCE)
    }

    pub fn parse_with_tolerance(spec: &str, tolerance: f64) -> Result<Self> {
        let spec = spec.trim();
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected <family>:<params>, got {spec:?}")))?;
        let args: Vec<&str> = rest.split(':').collect();
        let dist = match (name, args.as_slice()) {
            ("poisson", [l]) => Self::poisson(parse_real(l)?, None, tolerance),
            ("poisson", [l, m]) => Self::poisson(parse_real(l)?, Some(parse_usize(m)?), tolerance),
            ("geometric", [p]) => Self::geometric(parse_real(p)?, None, tolerance),
            ("geometric", [p, m]) => {
                Self::geometric(parse_real(p)?, Some(parse_usize(m)?), tolerance)
            }
            ("binomial", [m, p]) => Self::binomial(parse_usize(m)?, parse_real(p)?, tolerance),
            ("pmf", [list]) => {
                let probs = list.split(',').map(parse_real).collect::<Result<Vec<_>>>()?;
                Self::from_pmf(probs, tolerance)
            }
            ("heavytail", [d, e, m]) => {
                Self::heavy_tail(parse_usize(d)?, parse_real(e)?, parse_usize(m)?, tolerance)
            }
            _ => return Err(Error::Parse(format!("unrecognised distribution spec {spec:?}"))),
        }?;
        Ok(dist)
    }

    pub fn from_pmf(probs: Vec<f64>, tolerance: f64) -> Result<Self> {
        let spec = format!(
            "pmf:{}",
            probs.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
        );
        Self::build(probs, Tail::None, Family::Custom, tolerance, spec)
    }

    /// Poisson(`lambda`), cut at `max_degree` or where the tail mass falls to 1e-14.
    pub fn poisson(lambda: f64, max_degree: Option<usize>, tolerance: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parse(format!("poisson rate must be positive, got {lambda}")));
        }
        let mut terms = vec![(-lambda).exp()];
        let mut i = 0usize;
        loop {
            i += 1;
            let next = terms[i - 1] * lambda / i as f64;
            if (next < 1e-300 && i as f64 > lambda) || next == 0.0 {
                break;
            }
            terms.push(next);
        }
        let spec = match max_degree {
            Some(m) => format!("poisson:{lambda}:{m}"),
            None => format!("poisson:{lambda}"),
        };
        let (probs, tail) = split_terms(terms, max_degree);
        Self::build(probs, tail, Family::Poisson { lambda }, tolerance, spec)
    }

    /// Geometric on `{0, 1, ...}` with success probability `p`: `p_i = p (1-p)^i`.
    pub fn geometric(p: f64, max_degree: Option<usize>, tolerance: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Parse(format!("geometric parameter must lie in (0,1), got {p}")));
        }
        let q = 1.0 - p;
        let mut terms = vec![p];
        while let Some(&last) = terms.last() {
            let next = last * q;
            if next < 1e-300 {
                break;
            }
            terms.push(next);
        }
        let spec = match max_degree {
            Some(m) => format!("geometric:{p}:{m}"),
            None => format!("geometric:{p}"),
        };
        let (probs, tail) = split_terms(terms, max_degree);
        Self::build(probs, tail, Family::Geometric { p }, tolerance, spec)
    }

    pub fn binomial(trials: usize, p: f64, tolerance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parse(format!("binomial parameter must lie in [0,1], got {p}")));
        }
        let probs = (0..=trials)
            .map(|i| binomial(trials, i) * p.powi(i as i32) * (1.0 - p).powi((trials - i) as i32))
            .collect();
        Self::build(
            probs,
            Tail::None,
            Family::Binomial { trials, p },
            tolerance,
            format!("binomial:{trials}:{p}"),
        )
    }

    /// Heavy-tailed critical law with `p_m = c m^(-root_degree - 1 - eps)` for
    /// every `m >= 2`, `p_1 = 0`, and `p_0` fixed by normalisation. The largest
    /// admissible `c` is used; the support is stored up to `max_degree`.
    pub fn heavy_tail(root_degree: usize, eps: f64, max_degree: usize, tolerance: f64) -> Result<Self> {
        if root_degree < 1 {
            return Err(Error::Parse("heavytail root degree must be at least 1".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parse(format!("heavytail eps must be positive, got {eps}")));
        }
        if max_degree < 2 {
            return Err(Error::Parse("heavytail truncation point must be at least 2".into()));
        }
        let exponent = root_degree as f64 + 1.0 + eps;
        let head = |s: f64| compensated_sum((2..=max_degree).map(|m| (m as f64).powf(-s)));
        let zeta0 = head(exponent) + power_tail_sum(exponent, max_degree);
        let zeta1 = head(exponent - 1.0) + power_tail_sum(exponent - 1.0, max_degree);
        let scale = 1.0 / zeta1;
        let p0 = 1.0 - scale * zeta0;
        if p0 < 0.0 {
            return Err(Error::InvalidPmf("heavytail parameters admit no p_0 >= 0".into()));
        }
        let mut probs = vec![0.0; max_degree + 1];
        probs[0] = p0;
        for (m, p) in probs.iter_mut().enumerate().skip(2) {
            *p = scale * (m as f64).powf(-exponent);
        }
        Self::build(
            probs,
            Tail::PowerLaw { scale, exponent },
            Family::HeavyTail { root_degree, eps, scale },
            tolerance,
            format!("heavytail:{root_degree}:{eps}:{max_degree}"),
        )
    }

    fn build(mut probs: Vec<f64>, tail: Tail, family: Family, tolerance: f64, spec: String) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!("probability {p} is not a nonnegative real")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Parse(format!("tolerance must be positive, got {tolerance}")));
        }
        if matches!(tail, Tail::None | Tail::Explicit(_)) {
            while probs.len() > 1 && probs.last() == Some(&0.0) {
                probs.pop();
            }
        }
        let tail_mass = match &tail {
            Tail::None => 0.0,
            Tail::Explicit(t) => compensated_sum(t.iter().copied()),
            Tail::PowerLaw { scale, exponent } => scale * power_tail_sum(*exponent, probs.len() - 1),
        };
        let total = compensated_sum(probs.iter().copied()) + tail_mass;
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}, not 1")));
        }
        if probs.get(1).copied().unwrap_or(0.0) >= 1.0 - NORMALIZATION_SLACK {
            return Err(Error::Degenerate);
        }
        let dist = OffspringDistribution { probs, tail_mass, tail, family, tolerance, spec };
        let mean = dist.mean();
        if !((mean - 1.0).abs() <= tolerance) {
            return Err(Error::Criticality { mean, tolerance });
        }
        Ok(dist)
    }

    /// Probabilities `p_0..p_M` of the stored support.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `p_i` for `i <= M`, zero beyond the stored support.
    pub fn prob(&self, i: usize) -> f64 {
        self.probs.get(i).copied().unwrap_or(0.0)
    }

    /// Largest stored degree `M`.
    pub fn max_degree(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn has_finite_support(&self) -> bool {
        matches!(self.tail, Tail::None)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    /// `E xi`, tail included.
    pub fn mean(&self) -> f64 {
        self.raw_moment(1).value
    }

    /// `Var xi`, tail included; infinite if the tail has no second moment.
    pub fn variance(&self) -> f64 {
        let second = self.raw_moment(2).value;
        let mean = self.mean();
        second - mean * mean
    }

    /// gcd of the positive support points.
    pub fn span(&self) -> usize {
        let mut h = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > 0.0 {
                h = gcd(h, i);
            }
        }
        match &self.tail {
            Tail::None => {}
            Tail::Explicit(t) => {
                for (j, &p) in t.iter().enumerate() {
                    if p > 0.0 {
                        h = gcd(h, self.probs.len() + j);
                    }
                }
            }
            Tail::PowerLaw { .. } => h = 1,
        }
        h.max(1)
    }

    /// `E C(xi, d) = sum_m p_m C(m, d)`.
    pub fn factorial_binomial_moment(&self, d: usize) -> Moment {
        self.moment_with(d, |m| binomial(m, d), |m| falling_factorial_coefficients(m).into_iter().map(|c| c / factorial(d)).collect())
    }

    /// `E xi^k`.
    fn raw_moment(&self, k: usize) -> Moment {
        self.moment_with(
            k,
            |m| (m as f64).powi(k as i32),
            |k| {
                let mut c = vec![0.0; k + 1];
                c[k] = 1.0;
                c
            },
        )
    }

    /// Generic moment `sum_m p_m g(m)` where `g` is a polynomial of degree
    /// `degree` with coefficients `poly(degree)` (used for power-law tails).
    fn moment_with(&self, degree: usize, g: impl Fn(usize) -> f64, poly: impl Fn(usize) -> Vec<f64>) -> Moment {
        let within = compensated_sum(self.probs.iter().enumerate().map(|(m, &p)| p * g(m)));
        let cut = self.max_degree();
        match &self.tail {
            Tail::None => Moment::exact(within),
            Tail::Explicit(t) => {
                let tail = compensated_sum(t.iter().enumerate().map(|(j, &p)| p * g(cut + 1 + j)));
                let last = t.len() + cut;
                // terms past the listed tail are below 1e-300 and decay geometrically
                let error_bound = 1e-300 * g(last + 1).max(1.0) * 1e3;
                Moment { value: within + tail, within_support: within, error_bound }
            }
            Tail::PowerLaw { scale, exponent } => {
                if *exponent - degree as f64 <= 1.0 {
                    return Moment { value: f64::INFINITY, within_support: within, error_bound: f64::INFINITY };
                }
                let coeffs = poly(degree);
                let mut tail = 0.0;
                let mut err = 0.0;
                for (j, c) in coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let s = exponent - j as f64;
                    tail += c * power_tail_sum(s, cut);
                    // size of the next Euler–Maclaurin correction
                    err += c.abs() * power_tail_error(s, cut);
                }
                Moment {
                    value: within + scale * tail,
                    within_support: within,
                    error_bound: scale * err + f64::EPSILON * (within + scale * tail.abs()),
                }
            }
        }
    }
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}

impl FromStr for OffspringDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for OffspringDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Dense<'a> {
            spec: &'a str,
            family: &'a Family,
            probs: &'a [f64],
            tail_mass: f64,
        }
        Dense { spec: &self.spec, family: &self.family, probs: &self.probs, tail_mass: self.tail_mass }
            .serialize(serializer)
    }
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|i| i as f64).product()
}

/// Splits a full list of terms into the stored head `0..=M` and an explicit tail.
fn split_terms(mut terms: Vec<f64>, max_degree: Option<usize>) -> (Vec<f64>, Tail) {
    let cut = match max_degree {
        Some(m) => m,
        None => {
            // smallest M with sum_{i > M} p_i <= cutoff
            let mut tail = 0.0;
            let mut cut = terms.len() - 1;
            for i in (0..terms.len()).rev() {
                if tail + terms[i] > DEFAULT_TAIL_CUTOFF {
                    cut = i;
                    break;
                }
                tail += terms[i];
            }
            cut
        }
    };
    if cut + 1 >= terms.len() {
        terms.resize(cut + 1, 0.0);
        return (terms, Tail::Explicit(Vec::new()));
    }
    let tail = terms.split_off(cut + 1);
    (terms, Tail::Explicit(tail))
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))?;
            a / b
        }
        None => s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parse(format!("bad number {s:?}")))
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}
