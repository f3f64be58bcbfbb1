//! Point-process realizations, Poisson simulation by thinning, and binning.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Result};
use crate::partition::{Domain, PartitionTree};

/// Sorted event positions inside a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    events: Vec<f64>,
    domain: Domain,
}

impl PointPattern {
    /// Sorts `events` and checks that each lies in `[lo, hi)`.
    pub fn new(mut events: Vec<f64>, domain: Domain) -> Result<Self> {
        if events.iter().any(|x| !x.is_finite()) {
            return invalid("event positions must be finite");
        }
        if events.iter().any(|&x| !domain.contains(x)) {
            return invalid("event outside the domain");
        }
        events.sort_by(f64::total_cmp);
        Ok(Self { events, domain })
    }

    pub fn empty(domain: Domain) -> Self {
        Self { events: Vec::new(), domain }
    }

    pub fn events(&self) -> &[f64] {
        &self.events
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Intensity function of an inhomogeneous Poisson process.
#[derive(Clone)]
pub enum Intensity {
    /// `rate` on the whole domain.
    Constant(f64),
    /// `rates[i]` on `[breaks[i], breaks[i + 1])`, zero outside.
    Piecewise { breaks: Vec<f64>, rates: Vec<f64> },
    /// `total · Beta(a, b)` density on `[0, 1]`, zero outside.
    ScaledBeta { total: f64, a: f64, b: f64 },
    /// `base + amp · sin(2π freq (x - shift))` inside `window`, `base` outside.
    Sinusoid { base: f64, amp: f64, freq: f64, shift: f64, window: (f64, f64) },
    /// Arbitrary function with a caller-supplied upper bound.
    Callable { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, max: f64 },
}

impl fmt::Debug for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(r) => write!(f, "Constant({r})"),
            Self::Piecewise { breaks, rates } => {
                f.debug_struct("Piecewise").field("breaks", breaks).field("rates", rates).finish()
            }
            Self::ScaledBeta { total, a, b } => {
                f.debug_struct("ScaledBeta").field("total", total).field("a", a).field("b", b).finish()
            }
            Self::Sinusoid { base, amp, freq, shift, window } => f
                .debug_struct("Sinusoid")
                .field("base", base)
                .field("amp", amp)
                .field("freq", freq)
                .field("shift", shift)
                .field("window", window)
                .finish(),
            Self::Callable { max, .. } => f.debug_struct("Callable").field("max", max).finish_non_exhaustive(),
        }
    }
}

fn beta_fn(a: f64, b: f64) -> f64 {
    (libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)).exp()
}

impl Intensity {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(r) => *r,
            Self::Piecewise { breaks, rates } => {
                if x < breaks[0] || x >= breaks[breaks.len() - 1] {
                    return 0.0;
                }
                let i = breaks.partition_point(|&b| b <= x) - 1;
                rates[i]
            }
            Self::ScaledBeta { total, a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return 0.0;
                }
                total * x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0) / beta_fn(*a, *b)
            }
            Self::Sinusoid { base, amp, freq, shift, window } => {
                if x >= window.0 && x <= window.1 {
                    base + amp * (2.0 * core::f64::consts::PI * freq * (x - shift)).sin()
                } else {
                    *base
                }
            }
            Self::Callable { f, .. } => f(x),
        }
    }

    /// An upper bound `λ_max ≥ sup λ` used for thinning.
    pub fn upper_bound(&self) -> f64 {
        match self {
            Self::Constant(r) => *r,
            Self::Piecewise { rates, .. } => rates.iter().cloned().fold(0.0, f64::max),
            Self::ScaledBeta { total, a, b } => {
                if *a >= 1.0 && *b >= 1.0 {
                    let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
                    self.eval(mode).max(*total)
                } else {
                    f64::INFINITY
                }
            }
            Self::Sinusoid { base, amp, .. } => base + amp.abs(),
            Self::Callable { max, .. } => *max,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Constant(r) if !(r.is_finite() && *r >= 0.0) => invalid("rate must be finite and nonnegative"),
            Self::Piecewise { breaks, rates } => {
                if breaks.len() != rates.len() + 1 || rates.is_empty() {
                    return invalid("piecewise intensity needs one more break than rates");
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return invalid("piecewise breaks must increase");
                }
                if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                    return invalid("piecewise rates must be finite and nonnegative");
                }
                Ok(())
            }
            Self::ScaledBeta { total, a, b } if !(*total >= 0.0 && *a >= 1.0 && *b >= 1.0) => {
                invalid("scaled beta needs total >= 0 and shape parameters >= 1")
            }
            Self::Sinusoid { base, amp, .. } if base - amp.abs() < 0.0 => {
                invalid("sinusoid intensity would go negative")
            }
            Self::Callable { max, .. } if !(max.is_finite() && *max >= 0.0) => invalid("callable bound must be finite"),
            _ => Ok(()),
        }
    }

    /// `∫_lo^hi λ` by composite Simpson (exact for constant and piecewise).
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Self::Constant(r) => r * (hi - lo),
            Self::Piecewise { breaks, rates } => (0..rates.len())
                .map(|i| {
                    let a = breaks[i].max(lo);
                    let b = breaks[i + 1].min(hi);
                    if b > a { rates[i] * (b - a) } else { 0.0 }
                })
                .sum(),
            _ => {
                let n = 20_000;
                let h = (hi - lo) / n as f64;
                let mut s = self.eval(lo) + self.eval(hi);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * self.eval(lo + h * i as f64);
                }
                s * h / 3.0
            }
        }
    }
}

/// Draws a Poisson count with mean `mean`.
pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

/// Simulates `PP(λ)` on `domain` by thinning a homogeneous process at rate
/// `λ_max`.
pub fn sample_poisson<R: Rng + ?Sized>(intensity: &Intensity, domain: Domain, rng: &mut R) -> Result<PointPattern> {
    intensity.validate()?;
    let max = intensity.upper_bound();
    if !max.is_finite() {
        return invalid("intensity has no finite upper bound");
    }
    let total = poisson_count(max * domain.width(), rng);
    let mut events = Vec::with_capacity(total as usize);
    for _ in 0..total {
        let x = domain.lo + domain.width() * rng.random::<f64>();
        if x >= domain.hi {
            continue;
        }
        let lam = intensity.eval(x);
        if lam > max * (1.0 + 1e-12) {
            return invalid("intensity exceeds its declared upper bound");
        }
        if rng.random::<f64>() * max < lam {
            events.push(x);
        }
    }
    events.sort_by(f64::total_cmp);
    Ok(PointPattern { events, domain })
}

/// Per-bin event counts at level `r` (index `ℓ - 1`).
pub fn bin_counts(pattern: &PointPattern, tree: &PartitionTree, r: usize) -> Result<Vec<u64>> {
    if r > tree.levels() {
        return invalid("level exceeds tree depth");
    }
    if pattern.domain() != tree.domain() {
        return invalid("pattern and partition have different domains");
    }
    let mut counts = alloc::vec![0u64; tree.bins(r)];
    for &x in pattern.events() {
        counts[tree.locate_unchecked(x, r)] += 1;
    }
    Ok(counts)
}
