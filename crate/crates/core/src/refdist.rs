//! Limit laws: the spectrally positive Cauchy law `C1`, the Pareto law `J`,
//! `Exp(1)`, the Frechet law `exp(-a/x)` and Poisson atom sequences.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::{Error, Result};

/// Affine shift putting the Chambers-Mallows-Stuck output (scaled by pi/2)
/// onto the law with Laplace transform `exp(lambda ln lambda)`.
pub const CAUCHY1_SHIFT: f64 = 0.451_582_705_289_454_9; // ln(pi / 2)

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceLaw {
    Cauchy1,
    ParetoJ,
    Exp1,
    FrechetScale(f64),
}

impl ReferenceLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ReferenceLaw::Cauchy1 => sample_cauchy1(rng),
            ReferenceLaw::ParetoJ => sample_j(rng),
            ReferenceLaw::Exp1 => sample_exp1(rng),
            ReferenceLaw::FrechetScale(a) => a / sample_exp1(rng),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ReferenceLaw::Cauchy1 => cauchy1_reference().cdf(x),
            ReferenceLaw::ParetoJ => cdf_j(x),
            ReferenceLaw::Exp1 => cdf_exp1(x),
            ReferenceLaw::FrechetScale(a) => cdf_frechet(a, x),
        }
    }
}

#[inline]
fn uniform_open0<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Draw from `C1` (Levy measure `dx/x^2` on `(0, inf)`, Laplace transform
/// `exp(lambda ln lambda)`).
pub fn sample_cauchy1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let w = PI * (rng.random::<f64>() - 0.5);
    let e: f64 = Exp1.sample(rng);
    let a = FRAC_PI_2 + w;
    let x = (a * w.tan() - (FRAC_PI_2 * e * w.cos() / a).ln()) / FRAC_PI_2;
    FRAC_PI_2 * x + CAUCHY1_SHIFT
}

pub fn sample_j<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 / uniform_open0(rng)
}

pub fn cdf_j(x: f64) -> f64 {
    if x < 1.0 {
        0.0
    } else {
        1.0 - 1.0 / x
    }
}

pub fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

pub fn cdf_exp1(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

pub fn cdf_frechet(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-a / x).exp()
    }
}

/// The `m` largest atoms of a Poisson measure on `[0, a] x R+` with
/// intensity `dt dx / x^2`, in decreasing order.
pub fn top_ppp_atoms<R: Rng + ?Sized>(a: f64, m: usize, rng: &mut R) -> Vec<f64> {
    assert!(a > 0.0 && m >= 1);
    let mut s = 0.0;
    (0..m)
        .map(|_| {
            s += sample_exp1(rng);
            a / s
        })
        .collect()
}

/// A tabulated CDF: knots `(x_i, F_i)` increasing in both coordinates, with
/// linear interpolation between knots, a Pareto `1/x` right tail beyond the
/// last knot and an exponential left tail below the first.
#[derive(Debug, Clone)]
pub struct ReferenceCdf {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl ReferenceCdf {
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != fs.len() {
            return Err(Error::Parse("reference CDF needs at least two knots".into()));
        }
        let ok = xs.windows(2).all(|w| w[0] < w[1])
            && fs.windows(2).all(|w| w[0] < w[1])
            && fs[0] > 0.0
            && fs[fs.len() - 1] < 1.0;
        if !ok {
            return Err(Error::Parse("reference CDF knots must be strictly increasing in (0, 1)".into()));
        }
        Ok(Self { xs, fs })
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('x')) {
                continue;
            }
            let mut it = line.split(',');
            let mut field = || -> Result<f64> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing field", i + 1)))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            xs.push(field()?);
            fs.push(field()?);
        }
        Self::new(xs, fs)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,F\n");
        for (x, f) in self.xs.iter().zip(&self.fs) {
            out.push_str(&format!("{x:.10e},{f:.10e}\n"));
        }
        out
    }

    /// Builds the table from a sample at the probability levels `levels`.
    pub fn from_sample(mut sample: Vec<f64>, levels: &[f64]) -> Result<Self> {
        sample.sort_by(f64::total_cmp);
        let xs = levels.iter().map(|&p| crate::stats::quantile_sorted(&sample, p)).collect();
        Self::new(xs, levels.to_vec())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.fs[0] * (x - self.xs[0]).exp();
        }
        if x >= self.xs[n - 1] {
            return 1.0 - (1.0 - self.fs[n - 1]) * self.xs[n - 1] / x;
        }
        let i = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (f0, f1) = (self.fs[i - 1], self.fs[i]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let i = self.fs.partition_point(|&f| f <= p).clamp(1, self.fs.len() - 1);
        let (f0, f1) = (self.fs[i - 1], self.fs[i]);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        x0 + (x1 - x0) * (p - f0) / (f1 - f0)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.fs)
    }
}

/// Probability levels of the frozen `C1` table: dense in the bulk, with
/// extra resolution in both tails.
pub fn reference_levels() -> Vec<f64> {
    let mut v: Vec<f64> = vec![1e-5, 3e-5, 1e-4, 3e-4];
    v.extend((1..1000).map(|i| i as f64 / 1000.0));
    v.extend([0.9993, 0.9995, 0.9997, 0.9999, 0.99995, 0.99999]);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Seed and sample size used for the frozen `C1` table.
pub const REFERENCE_SEED: u64 = 0x00C1_CA0C;
pub const REFERENCE_DRAWS: usize = 10_000_000;

/// Regenerates the `C1` table shipped in `data/cauchy1_ref.csv`.
pub fn build_cauchy1_reference(draws: usize, seed: u64) -> Result<ReferenceCdf> {
    let mut rng = crate::rng::rng_from_seed(seed);
    let sample: Vec<f64> = (0..draws).map(|_| sample_cauchy1(&mut rng)).collect();
    ReferenceCdf::from_sample(sample, &reference_levels())
}

/// The frozen `C1` reference CDF.
pub fn cauchy1_reference() -> &'static ReferenceCdf {
    static TABLE: OnceLock<ReferenceCdf> = OnceLock::new();
    TABLE.get_or_init(|| {
        ReferenceCdf::from_csv(include_str!("../data/cauchy1_ref.csv"))
            .expect("bundled reference table parses")
    })
}

/// Monte Carlo `E[exp(-lambda Z)]` and its standard error.
pub fn laplace_estimate(sample: &[f64], lambda: f64) -> (f64, f64) {
    let v: Vec<f64> = sample.iter().map(|z| (-lambda * z).exp()).collect();
    crate::stats::mean_se(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats;

    #[test]
    fn shift_is_log_half_pi() {
        assert!((CAUCHY1_SHIFT - FRAC_PI_2.ln()).abs() < 1e-15);
    }

    #[test]
    fn cauchy_laplace_transform() {
        let mut rng = rng_from_seed(11);
        let z: Vec<f64> = (0..1_000_000).map(|_| sample_cauchy1(&mut rng)).collect();
        for lambda in [0.5, 1.0, 2.0] {
            let (m, se) = laplace_estimate(&z, lambda);
            let target = (lambda * f64::ln(lambda)).exp();
            assert!((m - target).abs() < 3.0 * se, "lambda {lambda}: {m} vs {target} (se {se})");
        }
    }

    #[test]
    fn cauchy_right_tail() {
        let mut rng = rng_from_seed(12);
        let n = 2_000_000;
        let t = 1000.0;
        let hits = (0..n).filter(|_| sample_cauchy1(&mut rng) > t).count();
        let r = hits as f64 / n as f64 * t;
        assert!((r - 1.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn reference_table_matches_fresh_sample() {
        let t = cauchy1_reference();
        let mut rng = rng_from_seed(99);
        let z: Vec<f64> = (0..100_000).map(|_| sample_cauchy1(&mut rng)).collect();
        let r = stats::ks_one_sample(&z, |x| t.cdf(x)).unwrap();
        assert!(r.p_value > 1e-3, "{r:?}");
        assert!(t.cdf(t.quantile(0.5)) - 0.5 < 1e-12);
    }

    #[test]
    fn j_law() {
        assert_eq!(cdf_j(1.0), 0.0);
        assert_eq!(cdf_j(2.0), 0.5);
        let mut rng = rng_from_seed(13);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_j(&mut rng) >= 10.0).count() as f64 / n as f64;
        let se = (0.1f64 * 0.9 / n as f64).sqrt();
        assert!((hits - 0.1).abs() < 3.0 * se);
        let a: Vec<f64> = (0..100_000).map(|_| sample_j(&mut rng)).collect();
        let b: Vec<f64> = (0..100_000).map(|_| sample_j(&mut rng)).collect();
        assert!(stats::ks_two_sample(&a, &b).unwrap().p_value > 1e-3);
        assert!(stats::ks_one_sample(&a, cdf_j).unwrap().p_value > 1e-3);
    }

    #[test]
    fn ppp_atoms() {
        let mut rng = rng_from_seed(14);
        let reps = 100_000;
        let mut count = 0usize;
        let mut tops = Vec::with_capacity(reps);
        for _ in 0..reps {
            let atoms = top_ppp_atoms(1.0, 64, &mut rng);
            assert!(atoms.windows(2).all(|w| w[0] > w[1]));
            count += atoms.iter().filter(|&&x| x > 0.5).count();
            tops.push(atoms[0]);
        }
        let mean = count as f64 / reps as f64;
        // #atoms > 1/2 is Poisson(2).
        let se = (2.0 / reps as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "{mean}");
        // Independent oracle: thinned direct simulation above 0.1: Poisson(10)
        // atoms with Pareto(0.1) heights; compare max-CDF at a few points.
        let mut direct = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut m = 0.0f64;
            let mut t = sample_exp1(&mut rng);
            while t < 10.0 {
                m = m.max(0.1 / (1.0 - rng.random::<f64>()));
                t += sample_exp1(&mut rng);
            }
            direct.push(m);
        }
        let tops = { let mut t = tops; t.sort_by(f64::total_cmp); t };
        direct.sort_by(f64::total_cmp);
        for x in [0.3, 1.0, 3.0] {
            let e = cdf_frechet(1.0, x);
            assert!((stats::ecdf_sorted(&tops, x) - e).abs() < 0.01);
            assert!((stats::ecdf_sorted(&direct, x) - e).abs() < 0.01);
        }
    }

    #[test]
    fn ppp_records_law_of_large_numbers() {
        let mut rng = rng_from_seed(15);
        let k = 1000;
        let close = (0..1000)
            .filter(|_| {
                let atoms = top_ppp_atoms(2.0, k, &mut rng);
                (atoms[k - 1] * k as f64 / 2.0 - 1.0).abs() < 0.1
            })
            .count();
        assert!(close >= 990, "{close}");
    }

    #[test]
    fn small_scale_top_atom_vanishes() {
        assert!(1.0 - cdf_frechet(1e-6, 0.01) < 1e-3);
    }

    #[test]
    fn csv_round_trip() {
        let t = ReferenceCdf::new(vec![-1.0, 0.0, 2.0], vec![0.1, 0.5, 0.9]).unwrap();
        let back = ReferenceCdf::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back.knots().0, t.knots().0);
        assert!((back.cdf(1.0) - 0.7).abs() < 1e-12);
        assert!(ReferenceCdf::new(vec![0.0, 0.0], vec![0.1, 0.2]).is_err());
    }
}
