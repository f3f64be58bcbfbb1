use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Mean of the Tracy–Widom (β = 1) law.
pub const TW1_MEAN: f64 = -1.206_533_574_582;
/// Standard deviation of the Tracy–Widom (β = 1) law, √1.607781034581.
pub const TW1_SD: f64 = 1.267_983_057_686_892;

static BUNDLED_CSV: &str = include_str!("../../data/tw1.csv");

/// Tabulated Tracy–Widom (β = 1) CDF with monotone cubic (Fritsch–Carlson)
/// interpolation. Outside the grid the CDF is clamped to 0 and 1.
#[derive(Debug, Clone)]
pub struct Tw1Table {
    x: Vec<f64>,
    cdf: Vec<f64>,
    slope: Vec<f64>,
}

impl Tw1Table {
    /// The table shipped with the crate (grid step 0.005 on [-12, 8]).
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED_CSV).expect("bundled TW1 table is valid")
    }

    /// Parses a two-column `x,cdf` CSV (header optional) and validates it.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut cdf = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',');
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse { line: i + 1, msg: "expected two columns".into() });
            };
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    x.push(a);
                    cdf.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse { line: i + 1, msg: "non-numeric value".into() }),
            }
        }
        Self::from_points(x, cdf)
    }

    pub fn from_points(x: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if x.len() < 3 || x.len() != cdf.len() {
            return bad("TW1 table needs at least three points");
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return bad("TW1 grid must be strictly increasing");
        }
        if cdf.iter().any(|&c| !(0.0..=1.0).contains(&c)) || cdf.windows(2).any(|w| w[0] > w[1]) {
            return bad("TW1 CDF values must be nondecreasing in [0, 1]");
        }
        if x[0] > -10.0 || x[x.len() - 1] < 6.0 {
            return bad("TW1 grid must cover [-10, 6]");
        }
        let slope = pchip_slopes(&x, &cdf);
        let table = Self { x, cdf, slope };
        let (mean, sd) = table.moments();
        if (mean - TW1_MEAN).abs() > 1e-3 || (sd - TW1_SD).abs() > 1e-3 {
            return bad("TW1 table moments disagree with the reference constants");
        }
        Ok(table)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t.is_nan() {
            return f64::NAN;
        }
        if t <= self.x[0] {
            return 0.0;
        }
        if t >= self.x[n - 1] {
            return 1.0;
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        v.clamp(y0, y1)
    }

    /// Two-sided p-value `2 min(F(t), 1 - F(t))`.
    pub fn two_sided(&self, t: f64) -> f64 {
        let f = self.cdf(t);
        (2.0 * f.min(1.0 - f)).clamp(0.0, 1.0)
    }

    /// Smallest grid-interpolated `t` with `F(t) ≥ p`, found by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (self.x[0], self.x[self.x.len() - 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Mean and standard deviation implied by the tabulated CDF.
    pub fn moments(&self) -> (f64, f64) {
        // Integrate the piecewise-linear density surrogate: on each cell the
        // mass is ΔF, located (to second order) at the cell midpoint, with a
        // uniform within-cell spread of h²/12.
        let (mut m1, mut m2, mut mass) = (0.0, 0.0, 0.0);
        for i in 0..self.x.len() - 1 {
            let df = self.cdf[i + 1] - self.cdf[i];
            let mid = 0.5 * (self.x[i] + self.x[i + 1]);
            let h = self.x[i + 1] - self.x[i];
            mass += df;
            m1 += df * mid;
            m2 += df * (mid * mid + h * h / 12.0);
        }
        let mean = m1 / mass;
        (mean, (m2 / mass - mean * mean).sqrt())
    }

    pub fn grid(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.cdf)
    }
}

/// Fritsch–Carlson derivative estimates (weighted harmonic mean of secants,
/// zero at local extrema), one-sided three-point formula at the ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = alloc::vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v.signum() != d0.signum() {
            v = 0.0;
        } else if d0.signum() != d1.signum() && v.abs() > 3.0 * d0.abs() {
            v = 3.0 * d0;
        }
        v
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_moments_match_reference() {
        let t = Tw1Table::bundled();
        let (mean, sd) = t.moments();
        assert!((mean - TW1_MEAN).abs() < 1e-3, "{mean}");
        assert!((sd - TW1_SD).abs() < 1e-3, "{sd}");
    }

    #[test]
    fn cdf_at_mean_and_tails() {
        let t = Tw1Table::bundled();
        assert!((t.cdf(TW1_MEAN) - 0.5196).abs() < 5e-4);
        assert!(t.cdf(-10.0) <= 1e-8);
        assert_eq!(t.cdf(-50.0), 0.0);
        assert_eq!(t.cdf(50.0), 1.0);
        // two-sided p at the mean
        assert!((t.two_sided(TW1_MEAN) - 0.961).abs() < 1e-3);
    }

    #[test]
    fn cdf_is_monotone_between_grid_points() {
        let t = Tw1Table::bundled();
        let mut prev = 0.0;
        let mut x = -12.5;
        while x < 8.5 {
            let f = t.cdf(x);
            assert!(f >= prev);
            prev = f;
            x += 0.0007;
        }
    }

    #[test]
    fn quantile_round_trip() {
        let t = Tw1Table::bundled();
        for &p in &[0.025, 0.5, 0.975] {
            let q = t.quantile(p);
            assert!((t.cdf(q) - p).abs() < 1e-9);
        }
        assert!((t.two_sided(t.quantile(0.975)) - 0.05).abs() < 1e-9);
        assert!((t.two_sided(t.quantile(0.5)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_tables_rejected() {
        assert!(Tw1Table::from_csv("x,cdf\n0,0.1\n1,0.2\n").is_err());
        assert!(matches!(Tw1Table::from_csv("x,cdf\n0,abc\n"), Err(Error::Parse { .. })));
        let mut shifted = alloc::string::String::new();
        for line in BUNDLED_CSV.lines().skip(1) {
            let (a, b) = line.split_once(',').unwrap();
            let a: f64 = a.parse().unwrap();
            shifted.push_str(&alloc::format!("{},{}\n", a + 0.5, b));
        }
        assert!(matches!(Tw1Table::from_csv(&shifted), Err(Error::Config(_))));
    }
}
