use rand::Rng;

use super::WalkPath;
use crate::offspring::StepLaw;

/// Index of the first minimum of `W_0, ..., W_n`.
pub fn first_argmin(path: &WalkPath) -> usize {
    let s = path.sums();
    let mut k = 0;
    for (i, &w) in s.iter().enumerate() {
        if w < s[k] {
            k = i;
        }
    }
    k
}

/// Cyclic shift of the increments starting right after the first minimum of
/// the prefix sums.
pub fn vervaat(path: &WalkPath) -> WalkPath {
    let n = path.len();
    assert!(n > 0, "vervaat needs a nonempty path");
    let k = first_argmin(path) % n;
    let s = path.sums();
    let total = path.last();
    let mut sums = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let j = k + i;
        let w = if j <= n { s[j] - s[k] } else { total + s[j - n] - s[k] };
        sums.push(w);
    }
    WalkPath::from_sums(sums).expect("starts at zero")
}

/// One draw of `Z^(n) = V(W_0, ..., W_{n-1}, -1)`.
#[derive(Debug, Clone)]
pub struct ZnSample {
    pub path: WalkPath,
    /// `W_{n-1} <= 0`, equivalently every increment is `>= -1`; then the
    /// output is an excursion.
    pub excursion: bool,
    /// `max{X_i : i < n} < -1 - W_{n-1}`.
    pub event_e: bool,
}

pub fn build_z_n<R: Rng + ?Sized>(law: &StepLaw, n: usize, rng: &mut R) -> ZnSample {
    assert!(n >= 1, "Z^(n) needs n >= 1");
    let mut incs = Vec::with_capacity(n);
    let mut w = 0i64;
    let mut max_inc = i64::MIN;
    for _ in 0..n - 1 {
        let x = law.sample(rng);
        max_inc = max_inc.max(x);
        w += x;
        incs.push(x);
    }
    let last = -1 - w;
    incs.push(last);
    let raw = WalkPath::from_any_increments(&incs);
    ZnSample {
        path: vervaat(&raw),
        excursion: w <= 0,
        event_e: max_inc < last,
    }
}
