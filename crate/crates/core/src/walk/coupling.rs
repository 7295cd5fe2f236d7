//! The tail coupling `vecZ^(n)`: a nonnegative prefix of length `I_n`, one
//! big jump `X >= |b_n|`, then a free walk.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WalkPath;
use crate::offspring::StepLaw;
use crate::scaling::ScalingConstants;
use crate::{Error, Result};

/// Default cap on rejection work (attempts times steps) for the
/// definitional prefix sampler.
pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VecZStrategy {
    /// Prefix = time reversal of the auxiliary walk before its last weak
    /// ladder epoch.
    Reversal,
    /// Prefix drawn by rejection until a walk of the right length stays
    /// nonnegative.
    Definitional,
}

/// The deterministic-length part of `vecZ^(n)`.
#[derive(Debug, Clone)]
pub struct VecZStart {
    pub n: usize,
    /// Prefix sums `W_0..=W_{I}`, all `>= 0`.
    pub prefix: Vec<i64>,
    /// The big jump, `>= ceil(|b_n|)`.
    pub jump: i64,
    /// Work spent by the prefix sampler (steps drawn).
    pub prefix_work: u64,
}

impl VecZStart {
    /// `I`, the number of prefix steps; the jump is step `I + 1`.
    pub fn prefix_len(&self) -> usize {
        self.prefix.len() - 1
    }

    /// Height right after the big jump.
    pub fn height_after_jump(&self) -> i64 {
        self.prefix[self.prefix.len() - 1] + self.jump
    }
}

/// Smallest integer jump admissible for `X >= |b_n|`.
pub fn jump_threshold(constants: &ScalingConstants) -> i64 {
    (constants.abs_b_n().ceil() as i64).max(0)
}

pub fn sample_vecz_start<R: Rng + ?Sized>(
    law: &StepLaw,
    constants: &ScalingConstants,
    strategy: VecZStrategy,
    rejection_budget: u64,
    rng: &mut R,
) -> Result<VecZStart> {
    let n = constants.n as usize;
    // Auxiliary n-step walk and its last weak ladder epoch.
    let mut aux = Vec::with_capacity(n + 1);
    let mut w = 0i64;
    aux.push(0);
    let mut max = 0i64;
    let mut last_epoch = 0usize;
    for j in 1..=n {
        w += law.sample(rng);
        aux.push(w);
        if w >= max {
            max = w;
            last_epoch = j;
        }
    }
    let mut work = n as u64;
    let prefix = match strategy {
        VecZStrategy::Reversal => {
            let top = aux[last_epoch];
            (0..=last_epoch).map(|i| top - aux[last_epoch - i]).collect()
        }
        VecZStrategy::Definitional => {
            let (p, spent) = nonnegative_prefix(law, last_epoch, rejection_budget, rng)?;
            work += spent;
            p
        }
    };
    let jump = law.sample_at_least(jump_threshold(constants), rng);
    Ok(VecZStart { n, prefix, jump, prefix_work: work })
}

/// Rejection sampler for `(W_0..W_len)` conditioned on `W_i >= 0` throughout.
pub fn nonnegative_prefix<R: Rng + ?Sized>(
    law: &StepLaw,
    len: usize,
    budget: u64,
    rng: &mut R,
) -> Result<(Vec<i64>, u64)> {
    let mut spent = 0u64;
    let mut sums = Vec::with_capacity(len + 1);
    'attempt: loop {
        sums.clear();
        sums.push(0i64);
        let mut w = 0i64;
        for _ in 0..len {
            if spent >= budget {
                return Err(Error::BudgetExceeded { spent, cap: budget });
            }
            spent += 1;
            w += law.sample(rng);
            if w < 0 {
                continue 'attempt;
            }
            sums.push(w);
        }
        return Ok((sums, spent));
    }
}

/// Outcome of running the free part of `vecZ^(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VecZRun {
    /// First index `i` with `W_i = -1`, if reached within the budget.
    pub hit_time: Option<u64>,
    /// Total number of increments emitted.
    pub steps: u64,
    /// The budget ran out before the hit.
    pub censored: bool,
}

impl VecZStart {
    /// Streams the increments of `vecZ^(n)` to `visit`: prefix, jump, then
    /// free steps until the walk has hit `-1` and at least `min_len` steps
    /// are out, or `max_steps` is reached.
    pub fn run<R: Rng + ?Sized>(
        &self,
        law: &StepLaw,
        min_len: u64,
        max_steps: u64,
        rng: &mut R,
        mut visit: impl FnMut(i64),
    ) -> VecZRun {
        for w in self.prefix.windows(2) {
            visit(w[1] - w[0]);
        }
        visit(self.jump);
        let mut steps = self.prefix.len() as u64;
        let mut w = self.height_after_jump();
        let mut hit = None;
        while (hit.is_none() || steps < min_len) && steps < max_steps {
            let x = law.sample(rng);
            visit(x);
            w += x;
            steps += 1;
            if hit.is_none() && w == -1 {
                hit = Some(steps);
            }
        }
        VecZRun { hit_time: hit, steps, censored: hit.is_none() }
    }

    /// Materialised path up to `max(hit, min_len)` steps (or `max_steps`).
    pub fn to_path<R: Rng + ?Sized>(
        &self,
        law: &StepLaw,
        min_len: u64,
        max_steps: u64,
        rng: &mut R,
    ) -> (WalkPath, VecZRun) {
        let mut incs = Vec::new();
        let run = self.run(law, min_len, max_steps, rng, |x| incs.push(x));
        (WalkPath::from_any_increments(&incs), run)
    }
}

/// `vecZ^(n)` materialised up to its first hit of `-1` and at least `n`
/// steps, with a step cap.
pub fn build_vecz_n<R: Rng + ?Sized>(
    law: &StepLaw,
    constants: &ScalingConstants,
    strategy: VecZStrategy,
    max_steps: u64,
    rng: &mut R,
) -> Result<(WalkPath, VecZRun)> {
    let start = sample_vecz_start(law, constants, strategy, DEFAULT_REJECTION_BUDGET, rng)?;
    Ok(start.to_path(law, constants.n, max_steps, rng))
}
