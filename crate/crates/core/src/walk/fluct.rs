//! Monte Carlo estimates of the fluctuation tails `P(zeta > n)`,
//! `P(T_1 > n)` and of the ladder functionals `I_n`, `H_n`.

use serde::Serialize;

use crate::offspring::StepLaw;
use crate::rng::par_replicates;
use crate::scaling::{compute_constants, slowly_varying_l};
use crate::stats::wilson_interval;
use crate::Result;

/// Walks are simulated in this many independently seeded chunks, so the
/// estimates do not depend on the worker count.
const CHUNKS: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub hits: u64,
    pub trials: u64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn new(hits: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, trials, 1.96);
        Self { hits, trials, p: hits as f64 / trials.max(1) as f64, ci_low, ci_high }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationRow {
    pub n: u64,
    pub zeta_gt: Estimate,
    pub zeta_ge: Estimate,
    pub t1_gt: Estimate,
    pub abs_b_n: f64,
    /// `Lambda(n) = 1 / ell*(a_n)`.
    pub lambda_n: Option<f64>,
    /// `P(X >= |b_n|)`.
    pub tail_at_b_n: f64,
    /// `P(zeta > n) |b_n| / (L(|b_n|) Lambda(n))`.
    pub r1: Option<f64>,
    /// `P(T_1 > n) Lambda(n)`.
    pub r2: Option<f64>,
    /// `P(X >= |b_n|) / (P(zeta >= n) P(T_1 > n))`.
    pub r3: Option<f64>,
}

/// Splits `reps` into `CHUNKS` deterministic chunks and adds up per-chunk
/// exceedance counts over the grid.
fn chunked_counts(
    reps: u64,
    seed: u64,
    grid_len: usize,
    one: impl Fn(&mut crate::rng::Rng, &mut [u64]) + Sync + Send,
) -> Vec<u64> {
    let chunks = CHUNKS.min(reps.max(1));
    let per = reps / chunks;
    let extra = reps % chunks;
    let parts = par_replicates(seed, chunks, |c, rng| {
        let mut counts = vec![0u64; grid_len];
        let count = per + u64::from(c < extra);
        for _ in 0..count {
            one(rng, &mut counts);
        }
        counts
    });
    let mut total = vec![0u64; grid_len];
    for p in parts {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    total
}

/// Counts, per grid point `n`, the walks with `zeta > n`, `zeta >= n` (as
/// two interleaved entries) out of `reps`; walks stop at `zeta` or at the
/// largest grid point.
pub fn count_zeta(law: &StepLaw, grid: &[u64], reps: u64, seed: u64) -> (Vec<u64>, Vec<u64>) {
    let n_max = *grid.last().expect("nonempty grid");
    let g = grid.len();
    let counts = chunked_counts(reps, seed, 2 * g, |rng, counts| {
        let mut w = 0i64;
        let mut t = 0u64;
        while t < n_max {
            w += law.sample(rng);
            t += 1;
            if w < 0 {
                break;
            }
        }
        let zeta = if w < 0 { t } else { u64::MAX };
        for (i, &n) in grid.iter().enumerate() {
            if zeta > n {
                counts[i] += 1;
            }
            if zeta >= n {
                counts[g + i] += 1;
            }
        }
    });
    (counts[..g].to_vec(), counts[g..].to_vec())
}

/// Counts, per grid point `n`, the walks with `T_1 > n`, i.e. `W_k < 0` for
/// `1 <= k <= n`.
pub fn count_t1(law: &StepLaw, grid: &[u64], reps: u64, seed: u64) -> Vec<u64> {
    let n_max = *grid.last().expect("nonempty grid");
    chunked_counts(reps, seed, grid.len(), |rng, counts| {
        let mut w = 0i64;
        let mut t = 0u64;
        let mut t1 = u64::MAX;
        while t < n_max {
            w += law.sample(rng);
            t += 1;
            if w >= 0 {
                t1 = t;
                break;
            }
        }
        for (i, &n) in grid.iter().enumerate() {
            if t1 > n {
                counts[i] += 1;
            }
        }
    })
}

/// Estimates `P(zeta > n)`, `P(zeta >= n)`, `P(T_1 > n)` over a sorted grid,
/// with the diagnostic ratios `r1`, `r2`, `r3`.
pub fn estimate_fluctuation_tails(
    law: &StepLaw,
    grid: &[u64],
    zeta_reps: u64,
    t1_reps: u64,
    seed: u64,
) -> Result<Vec<FluctuationRow>> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(crate::Error::Domain("grid must be nonempty, positive and strictly increasing".into()));
    }
    let (zgt, zge) = count_zeta(law, grid, zeta_reps, crate::rng::mix64(seed ^ 0x5A));
    let tgt = count_t1(law, grid, t1_reps, crate::rng::mix64(seed ^ 0x71));
    grid.iter()
        .enumerate()
        .map(|(i, &n)| {
            let k = compute_constants(law, n)?;
            let zeta_gt = Estimate::new(zgt[i], zeta_reps);
            let zeta_ge = Estimate::new(zge[i], zeta_reps);
            let t1_gt = Estimate::new(tgt[i], t1_reps);
            let b = k.abs_b_n();
            let tail_at_b_n = law.tail_prob(b.ceil() as i64);
            let lambda = k.lambda_n;
            let l_b = slowly_varying_l(law, b);
            let r1 = lambda.filter(|_| l_b > 0.0).map(|lam| zeta_gt.p * b / (l_b * lam));
            let r2 = lambda.map(|lam| t1_gt.p * lam);
            let denom = zeta_ge.p * t1_gt.p;
            let r3 = (denom > 0.0).then(|| tail_at_b_n / denom);
            Ok(FluctuationRow {
                n,
                zeta_gt,
                zeta_ge,
                t1_gt,
                abs_b_n: b,
                lambda_n: lambda,
                tail_at_b_n,
                r1,
                r2,
                r3,
            })
        })
        .collect()
}

/// `(I_n, H_n)` of an `n`-step walk, computed on the fly.
pub fn ladder_functionals<R: rand::Rng + ?Sized>(law: &StepLaw, n: u64, rng: &mut R) -> (u64, u64) {
    let mut w = 0i64;
    let mut max = 0i64;
    let mut last = 0u64;
    let mut count = 1u64;
    for j in 1..=n {
        w += law.sample(rng);
        if w >= max {
            max = w;
            last = j;
            count += 1;
        }
    }
    (last, count)
}
