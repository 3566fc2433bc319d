//! Distribution of the walk `S_n = xi_1 + ... + xi_n` and numerical checks of
//! the local limit theorem and the uniform bounds on `P(S_n = n - m)`.

use num_traits::Zero;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, ln_binomial, ln_factorial};
use crate::offspring::{Family, OffspringDistribution};

/// Probabilities below this are flushed to zero and booked as deficiency.
pub const FLUSH_THRESHOLD: f64 = 1e-300;
/// Convolutions where both operands have at least this many entries go through the FFT.
pub const TRANSFORM_THRESHOLD: usize = 4096;
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 26;

/// Distribution of an integer-valued random variable: `P(X = offset + i) = mass[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegerPmf {
    offset: i64,
    mass: Vec<f64>,
    deficiency: f64,
}

impl IntegerPmf {
    pub fn point_mass(at: i64) -> Self {
        IntegerPmf { offset: at, mass: vec![1.0], deficiency: 0.0 }
    }

    pub fn new(offset: i64, mass: Vec<f64>, deficiency: f64) -> Self {
        IntegerPmf { offset, mass, deficiency }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass known to be missing (tail truncation, flushing, range cut-off).
    pub fn deficiency(&self) -> f64 {
        self.deficiency
    }

    /// Largest represented support point.
    pub fn last(&self) -> i64 {
        self.offset + self.mass.len() as i64 - 1
    }

    pub fn prob(&self, k: i64) -> f64 {
        if k < self.offset {
            return 0.0;
        }
        self.mass.get((k - self.offset) as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.mass.iter().copied())
    }

    /// Iterator over `(k, P(X = k))`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.mass.iter().enumerate().map(move |(i, &p)| (self.offset + i as i64, p))
    }
}

/// How a walk distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMethod {
    Trivial,
    PoissonClosedForm,
    NegativeBinomialClosedForm,
    BinomialClosedForm,
    Convolution,
    Transform,
}

impl WalkMethod {
    pub fn is_closed_form(self) -> bool {
        matches!(
            self,
            WalkMethod::PoissonClosedForm | WalkMethod::NegativeBinomialClosedForm | WalkMethod::BinomialClosedForm
        )
    }
}

#[derive(Debug, Clone)]
pub struct WalkConfig {
    /// Largest dense support (number of entries) allowed.
    pub max_entries: usize,
    pub use_closed_forms: bool,
    /// Only `P(S_n = k)` for `k <= max_value` is needed. Exact for those `k`
    /// because the steps are nonnegative.
    pub max_value: Option<usize>,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { max_entries: DEFAULT_MAX_ENTRIES, use_closed_forms: true, max_value: None }
    }
}

impl WalkConfig {
    pub fn generic() -> Self {
        WalkConfig { use_closed_forms: false, ..Default::default() }
    }

    pub fn up_to(max_value: usize) -> Self {
        WalkConfig { max_value: Some(max_value), ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct WalkSum {
    pub pmf: IntegerPmf,
    pub method: WalkMethod,
}

/// Distribution of `S_n` with the default configuration.
pub fn walk_sum_pmf(dist: &OffspringDistribution, n: usize) -> Result<IntegerPmf> {
    walk_sum_pmf_with(dist, n, &WalkConfig::default()).map(|w| w.pmf)
}

pub fn walk_sum_pmf_with(dist: &OffspringDistribution, n: usize, config: &WalkConfig) -> Result<WalkSum> {
    if n == 0 {
        return Ok(WalkSum { pmf: IntegerPmf::point_mass(0), method: WalkMethod::Trivial });
    }
    if config.use_closed_forms {
        if let Some(sum) = closed_form(dist, n, config)? {
            return Ok(sum);
        }
    }
    generic_power(dist, n, config)
}

/// `P(S_n = k)`.
pub fn point_prob(dist: &OffspringDistribution, n: usize, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if n == 0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if let Some(p) = closed_form_point(dist, n, k as usize) {
        return p;
    }
    match walk_sum_pmf_with(dist, n, &WalkConfig::up_to(k as usize)) {
        Ok(w) => w.pmf.prob(k),
        // the dense support needed for a single point never exceeds k + 1 entries
        Err(_) => f64::NAN,
    }
}

fn closed_form_point(dist: &OffspringDistribution, n: usize, k: usize) -> Option<f64> {
    let nf = n as f64;
    let kf = k as f64;
    let p = match *dist.family() {
        Family::Poisson { lambda } => {
            let mu = nf * lambda;
            (-mu + kf * mu.ln() - ln_factorial(kf)).exp()
        }
        Family::Geometric { p } => (ln_binomial(nf + kf - 1.0, kf) + nf * p.ln() + kf * (1.0 - p).ln()).exp(),
        Family::Binomial { trials, p } => {
            let total = n * trials;
            if k > total {
                0.0
            } else {
                let tf = total as f64;
                (ln_binomial(tf, kf) + kf * p.ln() + (tf - kf) * (1.0 - p).ln()).exp()
            }
        }
        _ => return None,
    };
    Some(if p < FLUSH_THRESHOLD { 0.0 } else { p })
}

fn closed_form(dist: &OffspringDistribution, n: usize, config: &WalkConfig) -> Result<Option<WalkSum>> {
    let nf = n as f64;
    let (method, natural_end) = match *dist.family() {
        Family::Poisson { lambda } => {
            let mu = nf * lambda;
            (WalkMethod::PoissonClosedForm, (mu + 40.0 * mu.sqrt() + 100.0).ceil() as usize)
        }
        Family::Geometric { p } => {
            let mean = nf * (1.0 - p) / p;
            let sd = (nf * (1.0 - p)).sqrt() / p;
            (WalkMethod::NegativeBinomialClosedForm, (mean + 40.0 * sd + 100.0).ceil() as usize)
        }
        Family::Binomial { trials, .. } => (WalkMethod::BinomialClosedForm, n * trials),
        _ => return Ok(None),
    };
    let end = config.max_value.map_or(natural_end, |m| m.min(natural_end));
    if end + 1 > config.max_entries {
        return Err(Error::Resource(format!(
            "pmf of S_{n} needs {} entries (cap {})",
            end + 1,
            config.max_entries
        )));
    }
    let mass: Vec<f64> = (0..=end).map(|k| closed_form_point(dist, n, k).unwrap_or(0.0)).collect();
    let total = compensated_sum(mass.iter().copied());
    let deficiency = if config.max_value.is_some_and(|m| m < natural_end) {
        0.0
    } else {
        (1.0 - total).max(0.0)
    };
    Ok(Some(WalkSum { pmf: IntegerPmf { offset: 0, mass, deficiency }, method }))
}

fn generic_power(dist: &OffspringDistribution, n: usize, config: &WalkConfig) -> Result<WalkSum> {
    let full_end = n.saturating_mul(dist.max_degree());
    let end = config.max_value.map_or(full_end, |m| m.min(full_end));
    if end + 1 > config.max_entries {
        return Err(Error::Resource(format!(
            "pmf of S_{n} needs {} entries (cap {})",
            end + 1,
            config.max_entries
        )));
    }
    let mut base: Vec<f64> = dist.probs().iter().copied().take(end + 1).collect();
    let mut result = vec![1.0];
    let mut flushed = 0.0;
    let mut used_transform = false;
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            used_transform |= uses_transform(&result, &base);
            result = convolve_capped(&result, &base, end);
            flushed += flush(&mut result);
        }
        k >>= 1;
        if k > 0 {
            used_transform |= uses_transform(&base, &base);
            base = convolve_capped(&base, &base, end);
            flushed += flush(&mut base);
        }
    }
    let tail_loss = -(n as f64 * (-dist.tail_mass()).ln_1p()).exp_m1();
    let deficiency = if end < full_end {
        flushed + tail_loss
    } else {
        (1.0 - compensated_sum(result.iter().copied())).max(0.0)
    };
    let method = if used_transform { WalkMethod::Transform } else { WalkMethod::Convolution };
    Ok(WalkSum { pmf: IntegerPmf { offset: 0, mass: result, deficiency }, method })
}

fn uses_transform(a: &[f64], b: &[f64]) -> bool {
    a.len().min(b.len()) >= TRANSFORM_THRESHOLD
}

fn flush(v: &mut Vec<f64>) -> f64 {
    let mut flushed = 0.0;
    for x in v.iter_mut() {
        if *x < FLUSH_THRESHOLD {
            flushed += x.max(0.0);
            *x = 0.0;
        }
    }
    while v.len() > 1 && v.last() == Some(&0.0) {
        v.pop();
    }
    flushed
}

/// Convolution of two pmfs on `{0, 1, ...}`, keeping indices `<= end`.
pub fn convolve_capped(a: &[f64], b: &[f64], end: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = (a.len() + b.len() - 1).min(end + 1);
    if uses_transform(a, b) {
        let mut out = fft_convolve(a, b);
        out.truncate(len);
        for x in out.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        return out;
    }
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == 0.0 {
            continue;
        }
        let upto = (len - i).min(b.len());
        for (o, &y) in out[i..i + upto].iter_mut().zip(&b[..upto]) {
            *o += x * y;
        }
    }
    out
}

fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let size = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = vec![Complex::zero(); size];
    let mut fb: Vec<Complex<f64>> = vec![Complex::zero(); size];
    for (dst, &x) in fa.iter_mut().zip(a) {
        dst.re = x;
    }
    for (dst, &x) in fb.iter_mut().zip(b) {
        dst.re = x;
    }
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inverse.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa.into_iter().take(len).map(|c| c.re * scale).collect()
}

/// `P(S_n = n - 1) * sigma * sqrt(2 pi n) / h`, which tends to 1.
pub fn local_limit_ratio(dist: &OffspringDistribution, n: usize) -> Result<f64> {
    let h = dist.span();
    if n == 0 || (n - 1) % h != 0 {
        return Err(Error::Span { n, span: h });
    }
    let sigma = dist.variance().sqrt();
    if !sigma.is_finite() {
        return Err(Error::Precondition("local limit ratio needs a finite variance".into()));
    }
    let p = point_prob(dist, n, n as i64 - 1);
    Ok(p * sigma * (2.0 * std::f64::consts::PI * n as f64).sqrt() / h as f64)
}

/// Per-`n` suprema over `m` of the scaled point probabilities `P(S_n = n - m)`.
#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub n: usize,
    /// `max_m sqrt(n) P(S_n = n - m)`
    pub sqrt_n_p: f64,
    pub sqrt_n_p_argmax: i64,
    /// `max_m |m| P(S_n = n - m)`
    pub abs_m_p: f64,
    pub abs_m_p_argmax: i64,
    /// `max_{m != 0} m^2 P(S_n = n - m) / sqrt(n)`
    pub m2_p_over_sqrt_n: f64,
    pub m2_p_argmax: i64,
    pub deficiency: f64,
    pub method: WalkMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailBoundReport {
    pub distribution: String,
    pub rows: Vec<TailRow>,
    pub sup_sqrt_n_p: f64,
    pub sup_abs_m_p: f64,
    pub sup_m2_p_over_sqrt_n: f64,
}

/// Evaluates the three scaled suprema over the grid of `n` and over every `m`
/// with `|m| <= max_abs_m` (all `m` when `None`).
pub fn tail_bound_report(dist: &OffspringDistribution, n_grid: &[usize], max_abs_m: Option<u64>) -> Result<TailBoundReport> {
    if !dist.variance().is_finite() {
        return Err(Error::Precondition("tail bounds need a finite second moment".into()));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let walk = walk_sum_pmf_with(dist, n, &WalkConfig::default())?;
        let sqrt_n = (n as f64).sqrt();
        let mut row = TailRow {
            n,
            sqrt_n_p: 0.0,
            sqrt_n_p_argmax: 0,
            abs_m_p: 0.0,
            abs_m_p_argmax: 0,
            m2_p_over_sqrt_n: 0.0,
            m2_p_argmax: 0,
            deficiency: walk.pmf.deficiency(),
            method: walk.method,
        };
        for (k, p) in walk.pmf.iter() {
            let m = n as i64 - k;
            if max_abs_m.is_some_and(|cap| m.unsigned_abs() > cap) {
                continue;
            }
            let mf = m as f64;
            let a = sqrt_n * p;
            if a > row.sqrt_n_p {
                row.sqrt_n_p = a;
                row.sqrt_n_p_argmax = m;
            }
            let b = mf.abs() * p;
            if b > row.abs_m_p {
                row.abs_m_p = b;
                row.abs_m_p_argmax = m;
            }
            let c = mf * mf * p / sqrt_n;
            if c > row.m2_p_over_sqrt_n {
                row.m2_p_over_sqrt_n = c;
                row.m2_p_argmax = m;
            }
        }
        rows.push(row);
    }
    let sup = |f: fn(&TailRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(TailBoundReport {
        distribution: dist.spec().to_string(),
        sup_sqrt_n_p: sup(|r| r.sqrt_n_p),
        sup_abs_m_p: sup(|r| r.abs_m_p),
        sup_m2_p_over_sqrt_n: sup(|r| r.m2_p_over_sqrt_n),
        rows,
    })
}
