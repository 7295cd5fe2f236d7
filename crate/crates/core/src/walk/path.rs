use std::sync::OnceLock;

use rand::Rng;

use crate::offspring::StepLaw;
use crate::{Error, Result};

/// Fluctuation markers of a path of length `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Markers {
    /// First `i >= 1` with `W_i < 0`.
    pub zeta: Option<usize>,
    /// Weak ladder epochs `0 = T_0 < T_1 < ...` up to `n`.
    pub ladder_epochs: Vec<usize>,
    /// Last weak ladder epoch `<= n`.
    pub i_n: usize,
    /// Number of weak ladder epochs `<= n`, `T_0` included.
    pub h_n: usize,
}

/// A lattice path stored as prefix sums `W_0 = 0, W_1, ..., W_n`.
#[derive(Debug, Clone)]
pub struct WalkPath {
    sums: Vec<i64>,
    markers: OnceLock<Markers>,
}

impl PartialEq for WalkPath {
    fn eq(&self, other: &Self) -> bool {
        self.sums == other.sums
    }
}

impl Eq for WalkPath {}

impl WalkPath {
    /// Path with increments `>= -1`.
    pub fn from_increments(increments: &[i64]) -> Result<Self> {
        if let Some(i) = increments.iter().position(|&x| x < -1) {
            return Err(Error::Domain(format!("increment {i} is {} < -1", increments[i])));
        }
        Ok(Self::from_any_increments(increments))
    }

    /// Path with arbitrary integer increments (used for the last step of
    /// `Z^(n)`, which may jump down by more than one).
    pub fn from_any_increments(increments: &[i64]) -> Self {
        let mut sums = Vec::with_capacity(increments.len() + 1);
        let mut w = 0i64;
        sums.push(0);
        for &x in increments {
            w += x;
            sums.push(w);
        }
        Self::from_sums_unchecked(sums)
    }

    pub fn from_sums(sums: Vec<i64>) -> Result<Self> {
        if sums.first() != Some(&0) {
            return Err(Error::Domain("prefix sums must start at W_0 = 0".into()));
        }
        Ok(Self::from_sums_unchecked(sums))
    }

    fn from_sums_unchecked(sums: Vec<i64>) -> Self {
        Self { sums, markers: OnceLock::new() }
    }

    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sums(&self) -> &[i64] {
        &self.sums
    }

    pub fn value(&self, i: usize) -> i64 {
        self.sums[i]
    }

    pub fn last(&self) -> i64 {
        self.sums[self.len()]
    }

    /// `X_{i+1} = W_{i+1} - W_i`.
    pub fn increment(&self, i: usize) -> i64 {
        self.sums[i + 1] - self.sums[i]
    }

    pub fn increments(&self) -> Vec<i64> {
        self.sums.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_skip_free(&self) -> bool {
        self.sums.windows(2).all(|w| w[1] - w[0] >= -1)
    }

    /// `W_i >= 0` for `i < n`, `W_n = -1`, increments `>= -1`.
    pub fn is_excursion(&self) -> bool {
        let n = self.len();
        n >= 1
            && self.sums[n] == -1
            && self.sums[..n].iter().all(|&w| w >= 0)
            && self.is_skip_free()
    }

    pub fn markers(&self) -> &Markers {
        self.markers.get_or_init(|| compute_markers(&self.sums))
    }
}

fn compute_markers(sums: &[i64]) -> Markers {
    let zeta = sums.iter().skip(1).position(|&w| w < 0).map(|i| i + 1);
    let ladder_epochs = ladder_epochs_by_records(sums);
    let i_n = *ladder_epochs.last().expect("0 is always a ladder epoch");
    let h_n = ladder_epochs.len();
    Markers { zeta, ladder_epochs, i_n, h_n }
}

/// Weak ladder epochs by a running-maximum scan: `j` is an epoch iff
/// `W_j >= W_k` for all `k < j`.
pub fn ladder_epochs_by_records(sums: &[i64]) -> Vec<usize> {
    let mut out = vec![0];
    let mut max = sums[0];
    for (j, &w) in sums.iter().enumerate().skip(1) {
        if w >= max {
            out.push(j);
            max = w;
        }
    }
    out
}

/// Weak ladder epochs by the chained definition
/// `T_{i+1} = inf{j > T_i : W_j >= W_{T_i}}`.
pub fn ladder_epochs_chained(sums: &[i64]) -> Vec<usize> {
    let mut out = vec![0];
    let mut t = 0;
    loop {
        match (t + 1..sums.len()).find(|&j| sums[j] >= sums[t]) {
            Some(j) => {
                out.push(j);
                t = j;
            }
            None => return out,
        }
    }
}

/// `n` i.i.d. increments from the step law.
pub fn sample_walk<R: Rng + ?Sized>(law: &StepLaw, n: usize, rng: &mut R) -> WalkPath {
    let mut sums = Vec::with_capacity(n + 1);
    let mut w = 0i64;
    sums.push(0);
    for _ in 0..n {
        w += law.sample(rng);
        sums.push(w);
    }
    WalkPath::from_sums_unchecked(sums)
}

/// Increments read right to left: `W'_i = W_n - W_{n-i}`.
pub fn time_reverse(path: &WalkPath) -> WalkPath {
    let n = path.len();
    let last = path.last();
    WalkPath::from_sums_unchecked((0..=n).map(|i| last - path.sums[n - i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::{build_critical_tail_law, toy_law};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn hand_scan() {
        let p = WalkPath::from_increments(&[-1, 2, -1, 1]).unwrap();
        assert_eq!(p.sums(), &[0, -1, 1, 0, 1]);
        let m = p.markers();
        assert_eq!(m.zeta, Some(1));
        assert_eq!(m.ladder_epochs, vec![0, 2, 4]);
        assert_eq!(m.i_n, 4);
        assert_eq!(m.h_n, 3);
    }

    #[test]
    fn all_down() {
        let p = WalkPath::from_increments(&[-1; 5]).unwrap();
        let m = p.markers();
        assert_eq!(m.zeta, Some(1));
        assert_eq!(m.ladder_epochs, vec![0]);
        assert_eq!(m.h_n, 1);
    }

    #[test]
    fn empty_path() {
        let mut rng = rng_from_seed(0);
        let p = sample_walk(&toy_law().steps(), 0, &mut rng);
        assert!(p.is_empty());
        assert_eq!(p.sums(), &[0]);
        assert_eq!(p.markers().i_n, 0);
    }

    #[test]
    fn rejects_big_down_steps() {
        assert!(WalkPath::from_increments(&[0, -2]).is_err());
        assert!(WalkPath::from_sums(vec![1, 2]).is_err());
    }

    #[test]
    fn reverse_example() {
        let p = WalkPath::from_increments(&[-1, 2, -1, 1]).unwrap();
        assert_eq!(time_reverse(&p).increments(), vec![1, -1, 2, -1]);
    }

    #[test]
    fn toy_increment_mean_is_zero() {
        let mut rng = rng_from_seed(8);
        let n = 1_000_000;
        let p = sample_walk(&toy_law().steps(), n, &mut rng);
        let m = p.last() as f64 / n as f64;
        // Var X = E Y^2 - 1 = 0.1 + 1.2 + 0.9 - 1 = 1.2
        let se = (1.2f64 / n as f64).sqrt();
        assert!(m.abs() < 4.0 * se, "{m}");
    }

    #[test]
    fn record_scan_equals_chained_definition() {
        let mut rng = rng_from_seed(9);
        let laws = [toy_law().steps(), build_critical_tail_law(1.0 / 3.0, 3).unwrap().steps()];
        for i in 0..100_000usize {
            let n = (i * 7919) % 1000 + 1;
            let n = if i % 10 == 0 { n } else { n % 60 + 1 };
            let p = sample_walk(&laws[i % 2], n, &mut rng);
            assert_eq!(ladder_epochs_by_records(p.sums()), ladder_epochs_chained(p.sums()));
        }
    }

    #[test]
    fn reversal_is_an_involution() {
        let mut rng = rng_from_seed(10);
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap().steps();
        for i in 0..10_000 {
            let p = sample_walk(&law, i % 97, &mut rng);
            assert_eq!(time_reverse(&time_reverse(&p)), p);
        }
    }

    proptest! {
        #[test]
        fn markers_are_consistent(incs in proptest::collection::vec(-1i64..4, 0..200)) {
            let p = WalkPath::from_increments(&incs).unwrap();
            let m = p.markers();
            let n = p.len();
            prop_assert!(m.i_n <= n);
            prop_assert!(m.ladder_epochs.windows(2).all(|w| w[0] < w[1]));
            // No ladder epoch in (I_n, n].
            let max_before = p.sums()[..=m.i_n].iter().copied().max().unwrap();
            prop_assert!(p.sums()[m.i_n + 1..].iter().all(|&w| w < max_before));
            if let Some(z) = m.zeta {
                prop_assert!(p.value(z) == -1 && p.sums()[..z].iter().all(|&w| w >= 0));
            } else {
                prop_assert!(p.sums().iter().all(|&w| w >= 0));
            }
            prop_assert_eq!(p.increments(), incs);
        }
    }
}
