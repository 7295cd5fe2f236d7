//! Critical offspring laws with a tabulated head and an optional analytic
//! `c / (k^2 ln^2 k)` tail.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::series::{self, CompensatedSum};
use crate::{Error, Result};

pub const DEFAULT_MEAN_TOL: f64 = 1e-10;

/// Number of tail survival values tabulated past the head for fast inversion.
const TAIL_TABLE_LEN: u64 = 1 << 16;

/// `mu(k) = c / (k^2 ln^2 k)` for `k >= k_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSquaredTail {
    pub c: f64,
    pub k_min: u64,
}

impl LogSquaredTail {
    #[inline]
    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.k_min {
            0.0
        } else {
            self.c * series::term(2, k as f64)
        }
    }

    /// `sum_{j >= k} mu(j)` for `k >= k_min`.
    pub fn survival(&self, k: u64) -> f64 {
        self.c * series::tail_sum(2, k.max(self.k_min))
    }

    /// `sum_{j >= k} j mu(j)` for `k >= k_min`.
    pub fn first_moment(&self, k: u64) -> f64 {
        self.c * series::tail_sum(1, k.max(self.k_min))
    }
}

/// On-disk law description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawFile {
    pub head: Vec<f64>,
    pub tail: Option<TailSpec>,
    pub mean_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub family: String,
    pub c: f64,
    pub kmin: u64,
}

pub const TAIL_FAMILY: &str = "c_over_k2_log2k";

/// Mass and mean deviations of a law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawAudit {
    pub mass_deviation: f64,
    pub mean_deviation: f64,
}

#[derive(Debug)]
struct Inner {
    head: Vec<f64>,
    tail: Option<LogSquaredTail>,
    mean_tol: f64,
    /// `survival[k] = P(Y >= k)` for `0 <= k < survival.len()`.
    survival: Vec<f64>,
    mass: f64,
    mean: f64,
}

/// A critical offspring distribution `mu`. Cheap to clone; immutable.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    inner: Arc<Inner>,
}

impl OffspringLaw {
    /// Validates and freezes a law. `head` holds `mu(0..K)`; when a tail is
    /// present it is padded with zeros up to `k_min`.
    pub fn from_parts(
        mut head: Vec<f64>,
        tail: Option<LogSquaredTail>,
        mean_tol: f64,
    ) -> Result<Self> {
        if !(mean_tol > 0.0 && mean_tol.is_finite()) {
            return Err(Error::Domain(format!("mean_tol must be positive, got {mean_tol}")));
        }
        if let Some((i, &x)) = head.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidLaw(format!("head[{i}] = {x} is not a nonnegative number")));
        }
        if let Some(t) = tail {
            if !(t.c > 0.0 && t.c.is_finite()) || t.k_min < 3 {
                return Err(Error::Domain(format!(
                    "tail needs c > 0 and k_min >= 3, got c = {}, k_min = {}",
                    t.c, t.k_min
                )));
            }
            if head.len() as u64 > t.k_min {
                return Err(Error::Domain(format!(
                    "head has {} entries but the tail starts at {}",
                    head.len(),
                    t.k_min
                )));
            }
            head.resize(t.k_min as usize, 0.0);
        }
        if head.is_empty() {
            return Err(Error::InvalidLaw("empty head".into()));
        }

        let survival = build_survival(&head, tail.as_ref());
        let mass = survival[0];
        let mut mean: CompensatedSum = head.iter().enumerate().map(|(k, p)| k as f64 * p).collect();
        if let Some(t) = &tail {
            mean.add(t.first_moment(t.k_min));
        }
        let mean = mean.value();

        let mut violations = Vec::new();
        if (mass - 1.0).abs() > mean_tol {
            violations.push(format!("total mass = {mass} (deviation {:e})", mass - 1.0));
        }
        let mu0 = head[0];
        let mu1 = head.get(1).copied().unwrap_or(0.0);
        if !(mu0 > 0.0) {
            violations.push("mu(0) > 0 violated".to_string());
        }
        if !(mu0 + mu1 < 1.0) {
            violations.push(format!("mu(0)+mu(1) < 1 violated (mu(0)+mu(1) = {})", mu0 + mu1));
        }
        if (mean - 1.0).abs() > mean_tol {
            violations.push(format!("mean = {mean} != 1 (deviation {:e})", mean - 1.0));
        }
        if !violations.is_empty() {
            return Err(Error::InvalidLaw(violations.join("; ")));
        }

        Ok(Self {
            inner: Arc::new(Inner {
                head,
                tail,
                mean_tol,
                survival,
                mass,
                mean,
            }),
        })
    }

    pub fn head(&self) -> &[f64] {
        &self.inner.head
    }

    pub fn tail(&self) -> Option<LogSquaredTail> {
        self.inner.tail
    }

    pub fn mean_tol(&self) -> f64 {
        self.inner.mean_tol
    }

    /// First index governed by the tail (`K_head`), or the support size.
    pub fn head_len(&self) -> u64 {
        self.inner.head.len() as u64
    }

    /// Largest value with positive mass, `None` for the analytic tail.
    pub fn max_support(&self) -> Option<u64> {
        if self.inner.tail.is_some() {
            return None;
        }
        self.inner.head.iter().rposition(|&p| p > 0.0).map(|k| k as u64)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match self.inner.head.get(k as usize) {
            Some(&p) => p,
            None => self.inner.tail.map_or(0.0, |t| t.pmf(k)),
        }
    }

    /// `P(Y >= k)`.
    pub fn survival(&self, k: u64) -> f64 {
        let s = &self.inner.survival;
        if (k as usize) < s.len() {
            return s[k as usize];
        }
        match &self.inner.tail {
            Some(t) => t.survival(k),
            None => 0.0,
        }
    }

    /// `sum_{j >= k} j mu(j)`.
    pub fn first_moment_from(&self, k: u64) -> f64 {
        let mut s = CompensatedSum::new();
        for j in (k as usize)..self.inner.head.len() {
            s.add(j as f64 * self.inner.head[j]);
        }
        if let Some(t) = &self.inner.tail {
            s.add(t.first_moment(k.max(t.k_min)));
        }
        s.value()
    }

    pub fn audit(&self) -> LawAudit {
        LawAudit {
            mass_deviation: self.inner.mass - 1.0,
            mean_deviation: self.inner.mean - 1.0,
        }
    }

    /// Exact inverse CDF: the smallest `k` with `F(k) > u`, `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> u64 {
        self.invert_survival(1.0 - u, 0)
    }

    /// Exact draw from `mu`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let v = 1.0 - rng.random::<f64>();
        let inner = &*self.inner;
        let k_head = inner.head.len();
        let s = &inner.survival;
        if k_head < s.len() && v <= s[k_head] {
            // Tail: redraw inside the tail mass to keep full resolution.
            return self.sample_at_least(k_head as u64, rng);
        }
        let mut k = 0;
        while k + 1 < s.len() && s[k + 1] >= v {
            k += 1;
        }
        k as u64
    }

    /// Exact draw from `mu` conditioned on `Y >= m` (requires `P(Y >= m) > 0`).
    pub fn sample_at_least<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> u64 {
        let s_m = self.survival(m);
        assert!(s_m > 0.0, "conditioning on a null event Y >= {m}");
        let v = s_m * (1.0 - rng.random::<f64>());
        self.invert_survival(v, m)
    }

    /// Largest `k >= lo` with `P(Y >= k) >= v`, given `P(Y >= lo) >= v`.
    fn invert_survival(&self, v: f64, lo: u64) -> u64 {
        let s = &self.inner.survival;
        let table_end = s.len() as u64 - 1;
        if lo <= table_end && s[table_end as usize] < v {
            let lo = lo as usize;
            return (lo + s[lo..].partition_point(|&x| x >= v) - 1) as u64;
        }
        let Some(tail) = self.inner.tail else {
            // Finite support: v at or below the last survival value.
            return table_end.max(lo).saturating_sub(1).max(lo);
        };
        // Beyond the table: exponential search then bisection on the
        // analytic survival function.
        let mut good = lo.max(table_end);
        let mut step = good.max(1);
        let mut bad = loop {
            let probe = good.saturating_add(step);
            if probe >= 1u64 << 62 {
                return good;
            }
            if tail.survival(probe) >= v {
                good = probe;
                step = step.saturating_mul(2);
            } else {
                break probe;
            }
        };
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if tail.survival(mid) >= v {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    }

    /// The increment law `P(X = i) = mu(i + 1)`.
    pub fn steps(&self) -> StepLaw {
        StepLaw { law: self.clone() }
    }

    pub fn to_file(&self) -> LawFile {
        LawFile {
            head: self.inner.head.clone(),
            tail: self.inner.tail.map(|t| TailSpec {
                family: TAIL_FAMILY.to_string(),
                c: t.c,
                kmin: t.k_min,
            }),
            mean_tol: self.inner.mean_tol,
        }
    }

    pub fn from_file(file: &LawFile) -> Result<Self> {
        let tail = match &file.tail {
            None => None,
            Some(t) if t.family == TAIL_FAMILY => Some(LogSquaredTail { c: t.c, k_min: t.kmin }),
            Some(t) => return Err(Error::Parse(format!("unknown tail family {:?}", t.family))),
        };
        Self::from_parts(file.head.clone(), tail, file.mean_tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("law serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LawFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Short content hash of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(&self.to_file()).expect("law serialises");
        let digest = Sha256::digest(canon.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn build_survival(head: &[f64], tail: Option<&LogSquaredTail>) -> Vec<f64> {
    let k_head = head.len() as u64;
    let end = match tail {
        Some(_) => k_head + TAIL_TABLE_LEN,
        None => k_head,
    };
    let mut s = vec![0.0; end as usize + 1];
    let mut acc = CompensatedSum::new();
    if let Some(t) = tail {
        acc.add(t.survival(end));
        s[end as usize] = acc.value();
        for k in (k_head..end).rev() {
            acc.add(t.pmf(k));
            s[k as usize] = acc.value();
        }
    }
    for k in (0..k_head).rev() {
        acc.add(head[k as usize]);
        s[k as usize] = acc.value();
    }
    s
}

/// Critical law with `mu(k) = c / (k^2 ln^2 k)` for `k >= k_min`, `mu(1) = 0`
/// and `mu(0)`, `mu(2)` solved from `sum mu = 1`, `sum k mu(k) = 1`.
pub fn build_critical_tail_law(c: f64, k_min: u64) -> Result<OffspringLaw> {
    if k_min < 3 {
        return Err(Error::Domain(format!("k_min must be >= 3, got {k_min}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let tail = LogSquaredTail { c, k_min };
    let mass = tail.survival(k_min);
    let moment = tail.first_moment(k_min);
    let mu2 = (1.0 - moment) / 2.0;
    if mu2 < 0.0 {
        return Err(Error::InfeasibleParameters { what: "mu(2)", value: mu2 });
    }
    let mu0 = 1.0 - mass - mu2;
    if mu0 <= 0.0 {
        return Err(Error::InfeasibleParameters { what: "mu(0)", value: mu0 });
    }
    let mut head = vec![0.0; k_min as usize];
    head[0] = mu0;
    head[2] = mu2;
    OffspringLaw::from_parts(head, Some(tail), DEFAULT_MEAN_TOL)
}

/// Finite-support law from explicit probabilities.
pub fn build_head_only_law(head: &[f64]) -> Result<OffspringLaw> {
    OffspringLaw::from_parts(head.to_vec(), None, DEFAULT_MEAN_TOL)
}

/// The boundary offspring law with tail `1 / (k^2 ln^2 k)`, started at the
/// smallest `k_min >= 3` for which the criticality solve is feasible.
pub fn q_star_boundary_law() -> Result<OffspringLaw> {
    let mut last = None;
    for k_min in 3..64 {
        match build_critical_tail_law(1.0, k_min) {
            Ok(law) => return Ok(law),
            Err(e @ Error::InfeasibleParameters { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// The four-point law `(0.5, 0.1, 0.3, 0.1)` used by the exact oracles.
pub fn toy_law() -> OffspringLaw {
    build_head_only_law(&[0.5, 0.1, 0.3, 0.1]).expect("toy law is valid")
}

/// Increment law of the Lukasiewicz walk: `P(X = i) = mu(i + 1)`, `i >= -1`.
#[derive(Debug, Clone)]
pub struct StepLaw {
    law: OffspringLaw,
}

impl StepLaw {
    pub fn offspring(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn pmf(&self, i: i64) -> f64 {
        if i < -1 {
            0.0
        } else {
            self.law.pmf((i + 1) as u64)
        }
    }

    /// `P(X >= x)`.
    pub fn tail_prob(&self, x: i64) -> f64 {
        if x <= -1 {
            1.0
        } else {
            self.law.survival((x + 1) as u64)
        }
    }

    /// Largest step with positive mass, `None` for unbounded laws.
    pub fn max_step(&self) -> Option<i64> {
        self.law.max_support().map(|k| k as i64 - 1)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.law.sample(rng) as i64 - 1
    }

    /// Draw from `X` conditioned on `X >= x`.
    pub fn sample_at_least<R: Rng + ?Sized>(&self, x: i64, rng: &mut R) -> i64 {
        self.law.sample_at_least((x + 1).max(0) as u64, rng) as i64 - 1
    }

    pub fn mean(&self) -> f64 {
        self.law.inner.mean - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn toy_law_is_valid_and_inverts() {
        let law = toy_law();
        assert_eq!(law.quantile(0.3), 0);
        assert_eq!(law.quantile(0.95), 3);
        assert_eq!(law.quantile(0.0), 0);
        assert_eq!(law.quantile(0.5), 1);
        assert_eq!(law.quantile(0.6), 2);
        assert_eq!(law.quantile(0.9), 3);
    }

    #[test]
    fn head_only_rejections() {
        let e = build_head_only_law(&[1.0]).unwrap_err().to_string();
        assert!(e.contains("mu(0)+mu(1) < 1 violated"), "{e}");
        let e = build_head_only_law(&[0.5, 0.5]).unwrap_err().to_string();
        assert!(e.contains("mean = 0.5"), "{e}");
        let e = build_head_only_law(&[0.6, 0.1, 0.3, 0.1]).unwrap_err().to_string();
        assert!(e.contains("total mass"), "{e}");
        assert!(build_head_only_law(&[0.5, -0.1, 0.6]).is_err());
    }

    #[test]
    fn figure_one_law_solves_feasibly() {
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap();
        let l3 = 3f64.ln();
        assert!((law.pmf(3) - 1.0 / (27.0 * l3 * l3)).abs() < 1e-16);
        let h = law.head();
        assert_eq!(h[1], 0.0);
        assert!(h[0] > 0.0 && h[0] < 1.0 && h[2] > 0.0 && h[2] < 1.0);
        let a = law.audit();
        assert!(a.mass_deviation.abs() < 1e-12 && a.mean_deviation.abs() < 1e-12);
    }

    #[test]
    fn figure_one_solve_agrees_with_brute_force_series() {
        // Independent oracle: direct summation to 1e7 with a certified
        // remainder bracket for both the mass and the first moment.
        let c = 1.0 / 3.0;
        let cut = 10_000_000u64;
        let s: CompensatedSum = (3..cut).map(|k| c * series::term(2, k as f64)).collect();
        let m: CompensatedSum = (3..cut).map(|k| c * series::term(1, k as f64)).collect();
        let lc = (cut as f64).ln();
        let s_hi = s.value() + c * (series::term(2, cut as f64) + 1.0 / (cut as f64 * lc * lc));
        let m_hi = m.value() + c * (series::term(1, cut as f64) + 1.0 / lc);
        let law = build_critical_tail_law(c, 3).unwrap();
        let (mu0, mu2) = (law.head()[0], law.head()[2]);
        // mu2 = (1 - M)/2 and mu0 = 1 - S - mu2 are monotone in (S, M).
        let mu2_lo = (1.0 - m_hi) / 2.0;
        let mu2_hi = (1.0 - m.value()) / 2.0;
        assert!(mu2 >= mu2_lo && mu2 <= mu2_hi, "{mu2_lo} {mu2} {mu2_hi}");
        let mu0_lo = 1.0 - s_hi - mu2_hi;
        let mu0_hi = 1.0 - s.value() - mu2_lo;
        assert!(mu0 >= mu0_lo && mu0 <= mu0_hi, "{mu0_lo} {mu0} {mu0_hi}");
    }

    #[test]
    fn large_c_is_infeasible() {
        match build_critical_tail_law(10.0, 3) {
            Err(Error::InfeasibleParameters { what, value }) => {
                assert_eq!(what, "mu(2)");
                assert!(value < 0.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn q_star_law_is_critical_with_unit_constant() {
        let law = q_star_boundary_law().unwrap();
        let t = law.tail().unwrap();
        assert_eq!(t.c, 1.0);
        assert!(t.k_min >= 3);
        assert!(build_critical_tail_law(1.0, t.k_min - 1).is_err() || t.k_min == 3);
        assert!(law.audit().mean_deviation.abs() < 1e-10);
    }

    #[test]
    fn q_star_tail_ratio_brute_force() {
        // nu([k, inf)) against direct summation over a long window plus the
        // certified bracket. The ratio to 1 / (k ln^2 k) behaves like
        // 1 - 2 / ln k, so it rises toward 1 only logarithmically: about 0.79
        // at k = 1e3 and 0.87 at k = 1e6.
        let law = q_star_boundary_law().unwrap();
        let mut ratios = Vec::new();
        for k in [1_000u64, 1_000_000] {
            let cut = k * 1000;
            let s: CompensatedSum = (k..cut).map(|j| series::term(2, j as f64)).collect();
            let lc = (cut as f64).ln();
            let hi = s.value() + series::term(2, cut as f64) + 1.0 / (cut as f64 * lc * lc);
            let v = law.survival(k);
            assert!(v >= s.value() && v <= hi);
            let l = (k as f64).ln();
            let r = v * k as f64 * l * l;
            let predicted = series::tail_integral(2, k as f64) * k as f64 * l * l;
            assert!((r / predicted - 1.0).abs() < 0.05, "k = {k}: {r} vs {predicted}");
            ratios.push(r);
        }
        assert!(ratios[0] < ratios[1] && ratios[1] < 1.0, "{ratios:?}");
    }

    #[test]
    fn survival_is_monotone_and_seamless() {
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap();
        let mut prev = 1.0;
        for k in (0..200_000u64).step_by(7) {
            let s = law.survival(k);
            assert!(s <= prev + 1e-18);
            prev = s;
        }
        let end = 3 + TAIL_TABLE_LEN;
        let d = law.survival(end) - law.survival(end + 1);
        assert!((d - law.pmf(end)).abs() < 1e-18);
    }

    #[test]
    fn tail_inversion_matches_survival() {
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap();
        for &v in &[0.01, 1e-4, 1e-6, 3e-8, 1e-10, 1e-13] {
            let k = law.invert_survival(v, 0);
            assert!(law.survival(k) >= v && law.survival(k + 1) < v, "v = {v}, k = {k}");
        }
    }

    #[test]
    fn conditional_sampling_respects_threshold() {
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..2000 {
            assert!(law.sample_at_least(50_000, &mut rng) >= 50_000);
        }
        let steps = law.steps();
        for _ in 0..2000 {
            assert!(steps.sample_at_least(1234, &mut rng) >= 1234);
        }
    }

    #[test]
    fn step_law_is_centred() {
        for law in [toy_law(), build_critical_tail_law(1.0 / 3.0, 3).unwrap()] {
            let s = law.steps();
            assert_eq!(s.pmf(-1), law.pmf(0));
            assert!(s.pmf(-1) > 0.0);
            assert_eq!(s.pmf(-2), 0.0);
            assert!(s.mean().abs() < law.mean_tol());
        }
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let law = build_critical_tail_law(0.3333333333, 3).unwrap();
        let back = OffspringLaw::from_json(&law.to_json()).unwrap();
        assert_eq!(back.to_file(), law.to_file());
        assert_eq!(back.hash(), law.hash());
        let text = law.to_json();
        assert!(text.contains("\"family\": \"c_over_k2_log2k\""));
        let toy = OffspringLaw::from_json(r#"{"head":[0.5,0.1,0.3,0.1],"tail":null,"mean_tol":1e-10}"#).unwrap();
        assert_eq!(toy.max_support(), Some(3));
    }

    #[test]
    fn empirical_cdf_within_dkw_band() {
        // DKW at level 1e-6 with N = 1e6 draws, checked on [0, 1000].
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap();
        let n = 1_000_000usize;
        let mut rng = rng_from_seed(42);
        let mut counts = vec![0u64; 1002];
        for _ in 0..n {
            let k = law.sample(&mut rng).min(1001);
            counts[k as usize] += 1;
        }
        let eps = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
        let mut cum = 0u64;
        for k in 0..=1000u64 {
            cum += counts[k as usize];
            let emp = cum as f64 / n as f64;
            let exact = 1.0 - law.survival(k + 1);
            assert!((emp - exact).abs() <= eps, "k = {k}: {emp} vs {exact}");
        }
    }

    #[test]
    fn heavy_tail_sample_mean_is_one() {
        // Median-of-means over 1e7 draws: the law is critical, so the
        // estimate sits within 4 standard errors of 1. The standard error is
        // taken from the spread of the block means.
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap();
        let mut rng = rng_from_seed(2024);
        let blocks = 50usize;
        let per = 200_000usize;
        let means: Vec<f64> = (0..blocks)
            .map(|_| (0..per).map(|_| law.sample(&mut rng) as f64).sum::<f64>() / per as f64)
            .collect();
        let mom = crate::stats::median(&means);
        let mean = means.iter().sum::<f64>() / blocks as f64;
        let sd = (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (blocks - 1) as f64).sqrt();
        let se = sd / (blocks as f64).sqrt();
        // Heavy tails bias the median of block means downward by at most a
        // block-level fluctuation; use the block sd as the scale.
        assert!((mom - 1.0).abs() < 4.0 * se.max(sd / 2.0), "mom {mom}, se {se}, sd {sd}");
    }
}
