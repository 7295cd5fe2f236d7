//! Generating-function numerics: `G_mu`, the height-tail recursion
//! `Q_{n+1} = 1 - G_mu(1 - Q_n)` and the comparison law `G_rho`.
//!
//! Everything is evaluated through `phi(q) = 1 - G(1 - q) = sum_k mu(k) (1 -
//! (1 - q)^k)`, a sum of nonnegative terms, so no cancellation occurs as
//! `q -> 0`. For an analytic tail the terms with `k >= K` are summed by
//! Euler-Maclaurin, with the integral taken by panelled Gauss-Legendre in
//! `t = ln x`.

use serde::{Deserialize, Serialize};

use crate::offspring::OffspringLaw;
use crate::series::{self, CompensatedSum};

const GL_ORDER: usize = 16;
/// Smallest index handled by the Euler-Maclaurin tail.
const DIRECT_CUT: u64 = 512;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Precomputed evaluator of `G_mu` and `phi`.
#[derive(Debug, Clone)]
pub struct GenFn {
    /// `mu(k)` for `k < cut`.
    direct: Vec<f64>,
    /// `(c, cut)` when an analytic tail `c f(k)`, `k >= cut`, is present.
    tail: Option<(f64, u64)>,
    rule: Vec<(f64, f64)>,
}

impl GenFn {
    pub fn new(law: &OffspringLaw) -> Self {
        let cut = match (law.tail(), law.max_support()) {
            (Some(t), _) => t.k_min.max(DIRECT_CUT).max(law.head_len()),
            (None, Some(m)) => m + 1,
            (None, None) => unreachable!("a law without tail has finite support"),
        };
        Self {
            direct: (0..cut).map(|k| law.pmf(k)).collect(),
            tail: law.tail().map(|t| (t.c, cut)),
            rule: gauss_legendre(GL_ORDER),
        }
    }

    /// `G_mu(s)` for `s` in `[0, 1]`.
    pub fn eval(&self, s: f64) -> f64 {
        assert!((0.0..=1.0).contains(&s), "G_mu needs s in [0, 1], got {s}");
        if s == 1.0 {
            return 1.0;
        }
        1.0 - self.phi(1.0 - s)
    }

    /// `phi(q) = 1 - G_mu(1 - q)` for `q` in `[0, 1]`.
    pub fn phi(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q), "phi needs q in [0, 1], got {q}");
        if q == 0.0 {
            return 0.0;
        }
        let mut sum = CompensatedSum::new();
        // r_k = 1 - (1 - q)^k by r_{k+1} = r_k (1 - q) + q.
        let mut r = 0.0;
        for &m in &self.direct {
            sum.add(m * r);
            r = r * (1.0 - q) + q;
        }
        if let Some((c, cut)) = self.tail {
            sum.add(c * self.tail_part(-(-q).ln_1p(), cut as f64));
        }
        sum.value()
    }

    /// `sum_{k >= cut} f(k) (1 - e^{-lambda k})` with `f(x) = 1 / (x^2 ln^2 x)`.
    fn tail_part(&self, lambda: f64, cut: f64) -> f64 {
        let e = |x: f64| -(-lambda * x).exp_m1();
        let g = |x: f64| series::term(2, x) * e(x);
        let f = series::term(2, cut);
        let df = -f * (2.0 / cut) * (1.0 + 1.0 / cut.ln());
        let de = if lambda * cut > 700.0 { 0.0 } else { lambda * (-lambda * cut).exp() };
        let dg = df * e(cut) + f * de;
        self.integral(lambda, cut) + 0.5 * g(cut) - dg / 12.0
    }

    /// `int_cut^inf f(x) (1 - e^{-lambda x}) dx` as an integral over
    /// `t = ln x` of `e^{-t} t^{-2} (1 - exp(-lambda e^t))`. Unit panels
    /// cover the transition at `t = ln(1 / lambda)`, wider ones the smooth
    /// part below it; past `ln(1 / lambda) + 5` the factor is 1 to double
    /// precision and the rest is `Gamma(-1, t)`.
    fn integral(&self, lambda: f64, cut: f64) -> f64 {
        let t0 = cut.ln();
        let t_tr = -lambda.ln();
        let t_end = t0.max(t_tr + 5.0);
        let t_mid = t0.max(t_tr - 3.0);
        let mut sum = CompensatedSum::new();
        for (a, b, width) in [(t0, t_mid, 4.0), (t_mid, t_end, 1.0)] {
            if b <= a {
                continue;
            }
            let panels = ((b - a) / width).ceil() as usize;
            let w = (b - a) / panels as f64;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * w;
                for &(x, wt) in &self.rule {
                    let t = mid + 0.5 * w * x;
                    let v = (-t).exp() / (t * t) * -(-lambda * t.exp()).exp_m1();
                    sum.add(0.5 * w * wt * v);
                }
            }
        }
        sum.add(series::upper_gamma_minus_one(t_end));
        sum.value()
    }
}

/// `G_mu(s) = sum_i mu(i) s^i`.
pub fn gen_fn(law: &OffspringLaw, s: f64) -> f64 {
    GenFn::new(law).eval(s)
}

/// `Q[n] = P(H(T) >= n)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightTailTable {
    pub q: Vec<f64>,
    pub law_hash: String,
}

impl HeightTailTable {
    /// The diagnostic sequence `n Q[n]`.
    pub fn n_q(&self) -> Vec<f64> {
        self.q.iter().enumerate().map(|(n, &q)| n as f64 * q).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,Q,nQ\n");
        for (n, &q) in self.q.iter().enumerate() {
            out.push_str(&format!("{n},{q:e},{:e}\n", n as f64 * q));
        }
        out
    }
}

pub fn height_tail(law: &OffspringLaw, n_max: usize) -> HeightTailTable {
    assert!(n_max >= 1);
    let g = GenFn::new(law);
    let mut q = Vec::with_capacity(n_max + 1);
    q.push(1.0);
    for n in 0..n_max {
        q.push(g.phi(q[n]));
    }
    HeightTailTable { q, law_hash: law.hash() }
}

/// `Q^[n]` for the comparison law `G_rho(s) = s + (1 - s)^{3/2} / 2`:
/// `Q^[n+1] = Q^[n] (1 - Q^[n]^{1/2} / 2)`.
pub fn comparison_rho_tail(n_max: usize) -> Vec<f64> {
    let mut q = Vec::with_capacity(n_max + 1);
    q.push(1.0);
    for n in 0..n_max {
        let x: f64 = q[n];
        q.push(x * (1.0 - 0.5 * x.sqrt()));
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::{build_critical_tail_law, toy_law};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn heavy() -> OffspringLaw {
        build_critical_tail_law(1.0 / 3.0, 3).unwrap()
    }

    /// `phi` by plain summation to `k_max`, then `r_k = 1` beyond.
    fn phi_oracle(law: &OffspringLaw, q: f64, k_max: u64) -> f64 {
        let mut s = CompensatedSum::new();
        let l = (-q).ln_1p();
        for k in 1..k_max {
            s.add(law.pmf(k) * -(k as f64 * l).exp_m1());
        }
        if law.tail().is_some() {
            s.add(law.survival(k_max));
        }
        s.value()
    }

    #[test]
    fn endpoints() {
        for law in [toy_law(), heavy()] {
            assert_eq!(gen_fn(&law, 1.0), 1.0);
            assert!((gen_fn(&law, 0.0) - law.pmf(0)).abs() < 1e-15);
        }
    }

    #[test]
    fn toy_closed_form() {
        let law = toy_law();
        for s in [0.0, 0.1, 0.5, 0.9, 0.999] {
            let expect = 0.5 + 0.1 * s + 0.3 * s * s + 0.1 * s * s * s;
            assert!((gen_fn(&law, s) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn heavy_phi_matches_direct_summation() {
        let law = heavy();
        let g = GenFn::new(&law);
        for q in [1.0, 0.5, 1e-2, 1e-3, 1e-4, 1e-5] {
            let k_max = ((60.0 / q) as u64).max(10_000);
            let want = phi_oracle(&law, q, k_max);
            let got = g.phi(q);
            assert!(((got - want) / want).abs() < 1e-12, "q={q}: {got} vs {want}");
        }
    }

    #[test]
    fn criticality_by_extrapolated_difference_quotient() {
        let g = GenFn::new(&toy_law());
        let d = |h: f64| g.phi(h) / h;
        let (d4, d5) = (d(1e-4), d(1e-5));
        let extrapolated = d5 + (d5 - d4) * 1e-5 / (1e-4 - 1e-5);
        assert!((extrapolated - 1.0).abs() < 1e-3, "{extrapolated}");
    }

    #[test]
    fn heavy_difference_quotient_rises_to_one() {
        // Logarithmic correction: 1 - phi(h)/h decays like 1/ln(1/h).
        let g = GenFn::new(&heavy());
        let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8].iter().map(|&h| 1.0 - g.phi(h) / h).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "{gaps:?}");
    }

    #[test]
    fn height_tail_basics() {
        for law in [toy_law(), heavy()] {
            let t = height_tail(&law, 200);
            assert_eq!(t.q[0], 1.0);
            assert!((t.q[1] - (1.0 - law.pmf(0))).abs() < 1e-14);
            assert!(t.q.windows(2).all(|w| w[1] <= w[0] && w[1] >= 0.0));
        }
    }

    #[test]
    fn recursion_cross_checked_at_random_indices() {
        let law = heavy();
        let t = height_tail(&law, 20_000);
        let shallow = t.q.iter().take_while(|&&q| q >= 1e-5).count() - 1;
        let mut rng = rng_from_seed(41);
        for _ in 0..10 {
            let n = rng.random_range(0..shallow);
            let q = t.q[n];
            let want = phi_oracle(&law, q, ((60.0 / q) as u64).max(10_000));
            assert!(((t.q[n + 1] - want) / want).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn deep_recursion_stable_under_finer_quadrature() {
        let law = heavy();
        let t = height_tail(&law, 20_000);
        let coarse = GenFn::new(&law);
        let mut fine = coarse.clone();
        fine.rule = gauss_legendre(2 * GL_ORDER);
        for n in [500, 2_000, 10_000, 19_999] {
            let q = t.q[n];
            assert!(q > 0.0);
            assert!(((coarse.phi(q) - fine.phi(q)) / fine.phi(q)).abs() < 1e-13, "n={n}");
            assert_eq!(coarse.phi(q), t.q[n + 1]);
        }
    }

    /// Height at least `n`, by running generation sizes.
    fn survives(law: &OffspringLaw, n: usize, rng: &mut crate::rng::Rng) -> bool {
        let mut z = 1u64;
        for _ in 0..n {
            z = (0..z).map(|_| law.sample(rng)).sum();
            if z == 0 {
                return false;
            }
        }
        true
    }

    #[test]
    fn toy_matches_monte_carlo() {
        let law = toy_law();
        let t = height_tail(&law, 20);
        let mut rng = rng_from_seed(42);
        let reps = 200_000;
        for n in [5, 10, 20] {
            let hits = (0..reps).filter(|_| survives(&law, n, &mut rng)).count() as f64;
            let p = t.q[n];
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((hits / reps as f64 - p).abs() < 4.0 * se, "n={n}");
        }
    }

    #[test]
    fn comparison_law_rate() {
        let q = comparison_rho_tail(20_000);
        assert_eq!(q[0], 1.0);
        assert_eq!(q[1], 0.5);
        assert!((q[20_000] / q[10_000] / 0.25 - 1.0).abs() < 0.02);
        let a = q[10_000] * 1e8;
        let b = q[20_000] * 4e8;
        assert!((a / b - 1.0).abs() < 0.01, "{a} {b}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(GL_ORDER);
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn phi_below_identity(q in 1e-9f64..=1.0) {
            for law in [toy_law(), heavy()] {
                let p = GenFn::new(&law).phi(q);
                prop_assert!(p > 0.0 && p < q);
            }
        }
    }
}
