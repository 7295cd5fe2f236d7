//! Exact small-`n` oracles: dynamic programs over a bounded value band and
//! full enumeration of paths, for step laws with finite support (or a
//! truncation of one with the tail lumped onto a ceiling value).

use std::collections::BTreeMap;

use super::{vervaat, WalkPath};
use crate::offspring::StepLaw;
use crate::{Error, Result};

/// Largest horizon accepted by the dynamic programs.
pub const MAX_EXACT_N: usize = 14;

/// `P(X = i)` for `-1 <= i <= max_step`.
#[derive(Debug, Clone)]
pub struct FiniteStepLaw {
    probs: Vec<f64>,
    lumped_mass: f64,
}

impl FiniteStepLaw {
    /// Exact copy of a finite-support law.
    pub fn exact(law: &StepLaw) -> Result<Self> {
        match law.max_step() {
            Some(m) => Ok(Self::truncated(law, m)),
            None => Err(Error::Domain("law has unbounded support; use a truncation".into())),
        }
    }

    /// Steps above `ceiling` are lumped onto `ceiling`.
    pub fn truncated(law: &StepLaw, ceiling: i64) -> Self {
        let ceiling = ceiling.max(-1);
        let mut probs: Vec<f64> = (-1..ceiling).map(|i| law.pmf(i)).collect();
        let top = law.tail_prob(ceiling);
        probs.push(top);
        let lumped_mass = top - law.pmf(ceiling);
        Self { probs, lumped_mass }
    }

    pub fn from_probs(probs: Vec<f64>) -> Self {
        Self { probs, lumped_mass: 0.0 }
    }

    /// Mass moved onto the ceiling by truncation.
    pub fn lumped_mass(&self) -> f64 {
        self.lumped_mass
    }

    pub fn max_step(&self) -> i64 {
        self.probs.len() as i64 - 2
    }

    pub fn p(&self, x: i64) -> f64 {
        if x < -1 {
            return 0.0;
        }
        self.probs.get((x + 1) as usize).copied().unwrap_or(0.0)
    }

    /// Support points with their probabilities.
    pub fn steps(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (i as i64 - 1, p))
    }
}

/// Default value band for horizon `n`: every reachable value.
pub fn default_band(law: &FiniteStepLaw, n: usize) -> i64 {
    n as i64 * law.max_step().max(1)
}

/// Exact tables for horizons `0..=n_max`.
#[derive(Debug, Clone)]
pub struct ExactTables {
    pub n_max: usize,
    pub band: i64,
    /// `walk_pmf[n][w + band] = P(W_n = w)`.
    pub walk_pmf: Vec<Vec<f64>>,
    /// `P(zeta = n)`, index 0 unused (0).
    pub zeta_eq: Vec<f64>,
    /// `P(zeta > n)`.
    pub zeta_gt: Vec<f64>,
    /// `P(W_n >= 0)`.
    pub nonneg: Vec<f64>,
    /// `P(n is a weak ladder epoch)`.
    pub ladder: Vec<f64>,
    /// `P(T_1 > n)`, `T_1` the first weak ladder epoch after 0.
    pub t1_gt: Vec<f64>,
    pub lumped_mass: f64,
}

impl ExactTables {
    pub fn p_w_eq(&self, n: usize, w: i64) -> f64 {
        if w.abs() > self.band {
            return 0.0;
        }
        self.walk_pmf[n][(w + self.band) as usize]
    }
}

fn check_horizon(n: usize) -> Result<()> {
    if n > MAX_EXACT_N {
        return Err(Error::Domain(format!("exact oracles need n <= {MAX_EXACT_N}, got {n}")));
    }
    Ok(())
}

fn overflow(escaped: f64) -> Result<()> {
    if escaped > 0.0 {
        Err(Error::BandOverflow { escaped })
    } else {
        Ok(())
    }
}

/// One step of the free walk over values `[-band, band]`, restricted to the
/// window `keep` (values outside are returned as killed mass).
fn advance(
    dist: &[f64],
    band: i64,
    law: &FiniteStepLaw,
    keep: impl Fn(i64) -> bool,
    escaped: &mut f64,
) -> (Vec<f64>, f64) {
    let mut out = vec![0.0; dist.len()];
    let mut killed = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let w = i as i64 - band;
        for (x, q) in law.steps() {
            let v = w + x;
            let m = p * q;
            if v.abs() > band {
                *escaped += m;
            } else if keep(v) {
                out[(v + band) as usize] += m;
            } else {
                killed += m;
            }
        }
    }
    (out, killed)
}

pub fn exact_functional_law(law: &FiniteStepLaw, n_max: usize, band: i64) -> Result<ExactTables> {
    check_horizon(n_max)?;
    let size = (2 * band + 1) as usize;
    let mut escaped = 0.0;
    let start = {
        let mut v = vec![0.0; size];
        v[band as usize] = 1.0;
        v
    };

    let mut walk_pmf = vec![start.clone()];
    let mut nonneg = vec![1.0];
    for _ in 0..n_max {
        let (next, _) = advance(walk_pmf.last().unwrap(), band, law, |_| true, &mut escaped);
        nonneg.push(next[band as usize..].iter().sum());
        walk_pmf.push(next);
    }

    let mut zeta_eq = vec![0.0];
    let mut zeta_gt = vec![1.0];
    let mut alive = start.clone();
    for _ in 0..n_max {
        let (next, killed) = advance(&alive, band, law, |v| v >= 0, &mut escaped);
        zeta_eq.push(killed);
        zeta_gt.push(next.iter().sum());
        alive = next;
    }

    let mut t1_gt = vec![1.0];
    let mut below = start;
    for _ in 0..n_max {
        // W_0 = 0 is not a stopping point; from step 1 on, stop at W >= 0.
        let (next, _) = advance(&below, band, law, |v| v < 0, &mut escaped);
        t1_gt.push(next.iter().sum());
        below = next;
    }

    // d = running max - W; n is a weak ladder epoch iff d_n = 0.
    let mut ladder = vec![1.0];
    let mut d = vec![0.0; band as usize + 1];
    d[0] = 1.0;
    for _ in 0..n_max {
        let mut next = vec![0.0; d.len()];
        for (di, &p) in d.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (x, q) in law.steps() {
                let nd = (di as i64 - x).max(0);
                if nd > band {
                    escaped += p * q;
                } else {
                    next[nd as usize] += p * q;
                }
            }
        }
        ladder.push(next[0]);
        d = next;
    }
    overflow(escaped)?;
    Ok(ExactTables {
        n_max,
        band,
        walk_pmf,
        zeta_eq,
        zeta_gt,
        nonneg,
        ladder,
        t1_gt,
        lumped_mass: law.lumped_mass(),
    })
}

/// `P(I_n = j)` for `j = 0..=n`.
pub fn i_n_pmf(law: &FiniteStepLaw, n: usize, band: i64) -> Result<Vec<f64>> {
    check_horizon(n)?;
    // state: (d, last epoch)
    let mut state: BTreeMap<(i64, usize), f64> = BTreeMap::from([((0, 0), 1.0)]);
    let mut escaped = 0.0;
    for t in 1..=n {
        let mut next: BTreeMap<(i64, usize), f64> = BTreeMap::new();
        for (&(d, last), &p) in &state {
            for (x, q) in law.steps() {
                let nd = (d - x).max(0);
                if nd > band {
                    escaped += p * q;
                    continue;
                }
                let nl = if nd == 0 { t } else { last };
                *next.entry((nd, nl)).or_default() += p * q;
            }
        }
        state = next;
    }
    overflow(escaped)?;
    let mut out = vec![0.0; n + 1];
    for ((_, last), p) in state {
        out[last] += p;
    }
    Ok(out)
}

/// Joint law of `(min(zeta, n + 1), I_n)`.
pub fn joint_zeta_in(law: &FiniteStepLaw, n: usize, band: i64) -> Result<BTreeMap<(usize, usize), f64>> {
    check_horizon(n)?;
    // state: (W or None once zeta happened, d, last epoch, zeta or n + 1)
    type State = (Option<i64>, i64, usize, usize);
    let mut state: BTreeMap<State, f64> = BTreeMap::from([((Some(0), 0, 0, n + 1), 1.0)]);
    let mut escaped = 0.0;
    for t in 1..=n {
        let mut next: BTreeMap<State, f64> = BTreeMap::new();
        for (&(w, d, last, zeta), &p) in &state {
            for (x, q) in law.steps() {
                let nd = (d - x).max(0);
                if nd > band {
                    escaped += p * q;
                    continue;
                }
                let nl = if nd == 0 { t } else { last };
                let (nw, nz) = match w {
                    Some(w) if w + x < 0 => (None, t),
                    Some(w) => (Some(w + x), zeta),
                    None => (None, zeta),
                };
                *next.entry((nw, nd, nl, nz)).or_default() += p * q;
            }
        }
        state = next;
    }
    overflow(escaped)?;
    let mut out = BTreeMap::new();
    for ((_, _, last, zeta), p) in state {
        *out.entry((zeta, last)).or_default() += p;
    }
    Ok(out)
}

/// Calls `f(increments, probability)` for every `n`-step path of positive
/// probability.
pub fn enumerate_paths(law: &FiniteStepLaw, n: usize, mut f: impl FnMut(&[i64], f64)) {
    fn rec(law: &FiniteStepLaw, n: usize, buf: &mut Vec<i64>, p: f64, f: &mut dyn FnMut(&[i64], f64)) {
        if buf.len() == n {
            f(buf, p);
            return;
        }
        for (x, q) in law.steps() {
            buf.push(x);
            rec(law, n, buf, p * q, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(n);
    rec(law, n, &mut buf, 1.0, &mut f);
}

/// A probability table over increment sequences.
pub type PathLaw = BTreeMap<Vec<i64>, f64>;

fn normalise(mut law: PathLaw) -> PathLaw {
    let total: f64 = law.values().sum();
    for v in law.values_mut() {
        *v /= total;
    }
    law
}

pub fn total_variation(a: &PathLaw, b: &PathLaw) -> f64 {
    let mut s = 0.0;
    for (k, &p) in a {
        s += (p - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &q) in b {
        if !a.contains_key(k) {
            s += q;
        }
    }
    s / 2.0
}

/// Law of the walk conditioned on `zeta = n`.
pub fn excursion_law(law: &FiniteStepLaw, n: usize) -> PathLaw {
    let mut out = PathLaw::new();
    enumerate_paths(law, n, |incs, p| {
        let mut w = 0;
        for (i, &x) in incs.iter().enumerate() {
            w += x;
            if w < 0 && i + 1 < n {
                return;
            }
        }
        if w == -1 {
            out.insert(incs.to_vec(), p);
        }
    });
    normalise(out)
}

/// Law of the Vervaat transform of the bridge conditioned on `W_n = -1`.
pub fn vervaat_bridge_law(law: &FiniteStepLaw, n: usize) -> PathLaw {
    let mut out = PathLaw::new();
    enumerate_paths(law, n, |incs, p| {
        if incs.iter().sum::<i64>() == -1 {
            let v = vervaat(&WalkPath::from_any_increments(incs)).increments();
            *out.entry(v).or_default() += p;
        }
    });
    normalise(out)
}

/// Exact law of `Z^(n)` (including its non-excursion outcomes).
pub fn z_n_law(law: &FiniteStepLaw, n: usize) -> PathLaw {
    let mut out = PathLaw::new();
    enumerate_paths(law, n - 1, |incs, p| {
        let mut v = incs.to_vec();
        v.push(-1 - incs.iter().sum::<i64>());
        let z = vervaat(&WalkPath::from_any_increments(&v)).increments();
        *out.entry(z).or_default() += p;
    });
    out
}

/// `TV(law(W | zeta = n), law(Z^(n)))`.
pub fn dtv_local(law: &FiniteStepLaw, n: usize) -> f64 {
    total_variation(&excursion_law(law, n), &z_n_law(law, n))
}

/// `TV(law(W | zeta = n), law(Z^(n)))` summed over increment multisets
/// instead of paths. An excursion with value counts `c` has probability
/// `prod p^c / P(zeta = n)` under the conditioned walk and
/// `sum_j prod_{i != j} p(e_i)` under `Z^(n)` (position `j` is the forced
/// last step, which need not lie in the support); by the cycle lemma there
/// are `multinomial(n; c) / n` such excursions. The non-excursion mass of
/// `Z^(n)` is `P(W_{n-1} >= 1)`.
pub fn dtv_local_by_counts(law: &FiniteStepLaw, n: usize) -> Result<f64> {
    check_horizon(n)?;
    let band = default_band(law, n);
    let t = exact_functional_law(law, n, band)?;
    let pz = t.zeta_eq[n];
    let non_excursion: f64 = (1..=band).map(|w| t.p_w_eq(n - 1, w)).sum();
    let top = law.max_step().max(n as i64 - 2);
    let values: Vec<i64> = (-1..=top).collect();
    let mut counts = vec![0usize; values.len()];
    let mut total = 0.0;
    count_vectors(&values, 0, n, 0, &mut counts, &mut |c| {
        let mut pex = 1.0;
        for (k, &ck) in c.iter().enumerate() {
            pex *= law.p(values[k]).powi(ck as i32);
        }
        pex /= pz;
        let mut pzn = 0.0;
        for (j, &cj) in c.iter().enumerate() {
            if cj == 0 {
                continue;
            }
            let mut term = cj as f64;
            for (k, &ck) in c.iter().enumerate() {
                let e = ck - usize::from(k == j);
                term *= law.p(values[k]).powi(e as i32);
            }
            pzn += term;
        }
        total += multinomial(c) / n as f64 * (pzn - pex).abs();
    });
    Ok(0.5 * (total + non_excursion))
}

fn multinomial(c: &[usize]) -> f64 {
    let mut out = 1.0;
    let mut m = 0usize;
    for &ck in c {
        for i in 1..=ck {
            m += 1;
            out *= m as f64 / i as f64;
        }
    }
    out
}

/// Calls `f` on every count vector over `values` with total `left` and
/// weighted sum `-1`.
fn count_vectors(
    values: &[i64],
    i: usize,
    left: usize,
    sum: i64,
    counts: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    if i == values.len() {
        if left == 0 && sum == -1 {
            f(counts);
        }
        return;
    }
    // Remaining values are >= values[i] >= -1, so the sum cannot decrease
    // below sum - left.
    if sum - left as i64 > -1 {
        return;
    }
    for c in 0..=left {
        let s = sum + c as i64 * values[i];
        if s - (left - c) as i64 > -1 && values[i] >= 0 {
            break;
        }
        counts[i] = c;
        count_vectors(values, i + 1, left - c, s, counts, f);
    }
    counts[i] = 0;
}

/// Law of the reversal-strategy prefix of `vecZ^(n)`: the time reversal of
/// an `n`-step walk's block before its last weak ladder epoch.
pub fn reversal_prefix_law(law: &FiniteStepLaw, n: usize) -> PathLaw {
    let mut out = PathLaw::new();
    enumerate_paths(law, n, |incs, p| {
        let path = WalkPath::from_any_increments(incs);
        let i = path.markers().i_n;
        let block: Vec<i64> = incs[..i].iter().rev().copied().collect();
        *out.entry(block).or_default() += p;
    });
    out
}

/// `sum_j P(I_n = j) law(W_0..W_j | W_i >= 0 for i <= j)`.
pub fn mixture_prefix_law(law: &FiniteStepLaw, n: usize, band: i64) -> Result<PathLaw> {
    let weights = i_n_pmf(law, n, band)?;
    let mut out = PathLaw::new();
    for (j, &wj) in weights.iter().enumerate() {
        if wj == 0.0 {
            continue;
        }
        let mut block = PathLaw::new();
        enumerate_paths(law, j, |incs, p| {
            let mut w = 0;
            for &x in incs {
                w += x;
                if w < 0 {
                    return;
                }
            }
            block.insert(incs.to_vec(), p);
        });
        for (k, p) in normalise(block) {
            *out.entry(k).or_default() += wj * p;
        }
    }
    Ok(out)
}
