//! Plane trees in depth-first child-count form, the Lukasiewicz bijection,
//! BGW samplers and per-tree statistics.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::offspring::{OffspringLaw, StepLaw};
use crate::scaling::ScalingConstants;
use crate::walk::{build_z_n, sample_vecz_start, vervaat, VecZStrategy, WalkPath};
use crate::{Error, Result};

/// Number of largest degrees kept by the streaming statistics.
pub const TOP_DEGREES: usize = 32;

/// A rooted ordered tree: `child_counts[i]` is the out-degree of the `i`-th
/// vertex in depth-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTree {
    child_counts: Vec<u64>,
}

impl PlaneTree {
    pub fn from_child_counts(child_counts: Vec<u64>) -> Result<Self> {
        let mut w = 0i64;
        let n = child_counts.len();
        if n == 0 {
            return Err(Error::InvalidExcursion { index: 0 });
        }
        for (i, &k) in child_counts.iter().enumerate() {
            w += k as i64 - 1;
            if (i + 1 < n && w < 0) || (i + 1 == n && w != -1) {
                return Err(Error::InvalidExcursion { index: i + 1 });
            }
        }
        Ok(Self { child_counts })
    }

    pub fn size(&self) -> usize {
        self.child_counts.len()
    }

    pub fn child_counts(&self) -> &[u64] {
        &self.child_counts
    }

    /// `parents[i]` for `i >= 1`; `parents[0] = 0` for the root.
    pub fn parents(&self) -> Vec<usize> {
        let n = self.size();
        let mut parents = vec![0usize; n];
        let mut stack: Vec<(usize, u64)> = Vec::new();
        for i in 0..n {
            if let Some(top) = stack.last_mut() {
                parents[i] = top.0;
                top.1 -= 1;
                if top.1 == 0 {
                    stack.pop();
                }
            }
            if self.child_counts[i] > 0 {
                stack.push((i, self.child_counts[i]));
            }
        }
        parents
    }

    /// Children of every vertex in compressed form: the children of `u` are
    /// `list[offsets[u]..offsets[u + 1]]`, in order.
    pub fn children(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.size();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for &k in &self.child_counts {
            offsets.push(offsets.last().unwrap() + k as usize);
        }
        let mut fill = offsets.clone();
        let mut list = vec![0usize; n - 1];
        for (v, &p) in self.parents().iter().enumerate().skip(1) {
            list[fill[p]] = v;
            fill[p] += 1;
        }
        (offsets, list)
    }

    /// Depth of every vertex, computed from the parent array.
    pub fn depths(&self) -> Vec<u64> {
        let parents = self.parents();
        let mut depth = vec![0u64; self.size()];
        for v in 1..self.size() {
            depth[v] = depth[parents[v]] + 1;
        }
        depth
    }

    pub fn height(&self) -> u64 {
        self.depths().into_iter().max().unwrap_or(0)
    }
}

/// Tree coded by an excursion; `child_counts[i] = X_{i+1} + 1`.
pub fn decode_lukasiewicz(path: &WalkPath) -> Result<PlaneTree> {
    let n = path.len();
    let s = path.sums();
    for i in 0..n {
        if s[i + 1] - s[i] < -1 || (i + 1 < n && s[i + 1] < 0) {
            return Err(Error::InvalidExcursion { index: i + 1 });
        }
    }
    if n == 0 || s[n] != -1 {
        return Err(Error::InvalidExcursion { index: n });
    }
    Ok(PlaneTree {
        child_counts: s.windows(2).map(|w| (w[1] - w[0] + 1) as u64).collect(),
    })
}

pub fn encode_lukasiewicz(tree: &PlaneTree) -> WalkPath {
    let incs: Vec<i64> = tree.child_counts.iter().map(|&k| k as i64 - 1).collect();
    WalkPath::from_increments(&incs).expect("child counts are >= 0")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Out-degrees in decreasing order.
    pub degrees_sorted: Vec<u64>,
    /// First vertex (depth-first order) of maximal out-degree.
    pub u_star: u64,
    /// Depth of `u_star`.
    pub h_star: u64,
    pub height: u64,
    pub size: u64,
}

/// Degrees, `U*`, `H*` (checked two ways) and height.
pub fn tree_stats(tree: &PlaneTree) -> Result<TreeStats> {
    let depths = tree.depths();
    let cc = tree.child_counts();
    let max = *cc.iter().max().expect("nonempty");
    let u_star = cc.iter().position(|&k| k == max).expect("max exists");
    let by_parents = depths[u_star];
    let by_records = min_record_count(encode_lukasiewicz(tree).sums(), u_star);
    if by_parents != by_records {
        return Err(Error::Inconsistent(format!(
            "H* by parents {by_parents} != H* by path records {by_records}"
        )));
    }
    let mut degrees_sorted = cc.to_vec();
    degrees_sorted.sort_unstable_by(|a, b| b.cmp(a));
    Ok(TreeStats {
        degrees_sorted,
        u_star: u_star as u64,
        h_star: by_parents,
        height: depths.into_iter().max().unwrap_or(0),
        size: tree.size() as u64,
    })
}

/// `#{0 <= i < u : W_i = min_{[i, u]} W}`.
pub fn min_record_count(sums: &[i64], u: usize) -> u64 {
    let mut count = 0;
    let mut running_min = sums[u];
    for i in (0..u).rev() {
        if sums[i] <= running_min {
            count += 1;
            running_min = sums[i];
        }
    }
    count
}

/// Statistics of a Lukasiewicz path read once, left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LukaStats {
    pub size: u64,
    /// Largest out-degrees, decreasing (at most [`TOP_DEGREES`]).
    pub top_degrees: Vec<u64>,
    pub u_star: u64,
    pub h_star: u64,
    pub height: u64,
    /// `max_i W_i` over the vertices.
    pub sup_w: i64,
}

/// Streaming accumulator for [`LukaStats`]. Feed the increments of an
/// excursion in order; vertex `i` has value `W_i` before its own step.
#[derive(Debug, Clone)]
pub struct LukaStatsBuilder {
    size: u64,
    w: i64,
    stack: Vec<i64>,
    heap: BinaryHeap<Reverse<u64>>,
    max_deg: Option<u64>,
    u_star: u64,
    h_star: u64,
    height: u64,
    sup_w: i64,
}

impl Default for LukaStatsBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl LukaStatsBuilder {
    pub fn new() -> Self {
        Self {
            size: 0,
            w: 0,
            stack: Vec::new(),
            heap: BinaryHeap::with_capacity(TOP_DEGREES + 1),
            max_deg: None,
            u_star: 0,
            h_star: 0,
            height: 0,
            sup_w: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, increment: i64) {
        let w = self.w;
        while self.stack.last().is_some_and(|&top| top > w) {
            self.stack.pop();
        }
        let depth = self.stack.len() as u64;
        self.stack.push(w);
        let deg = (increment + 1) as u64;
        if self.max_deg.is_none_or(|m| deg > m) {
            self.max_deg = Some(deg);
            self.u_star = self.size;
            self.h_star = depth;
        }
        if self.heap.len() < TOP_DEGREES {
            self.heap.push(Reverse(deg));
        } else if deg > self.heap.peek().expect("full heap").0 {
            self.heap.pop();
            self.heap.push(Reverse(deg));
        }
        self.height = self.height.max(depth);
        self.sup_w = self.sup_w.max(w);
        self.size += 1;
        self.w += increment;
    }

    /// Current value `W_size`.
    pub fn value(&self) -> i64 {
        self.w
    }

    pub fn finish(self) -> LukaStats {
        let mut top: Vec<u64> = self.heap.into_iter().map(|Reverse(d)| d).collect();
        top.sort_unstable_by(|a, b| b.cmp(a));
        LukaStats {
            size: self.size,
            top_degrees: top,
            u_star: self.u_star,
            h_star: self.h_star,
            height: self.height,
            sup_w: self.sup_w,
        }
    }
}

pub fn luka_stats(path: &WalkPath) -> LukaStats {
    let mut b = LukaStatsBuilder::new();
    for x in path.increments() {
        b.push(x);
    }
    b.finish()
}

/// A sampled tree with its sampling cost.
#[derive(Debug, Clone)]
pub struct TreeDraw {
    pub tree: PlaneTree,
    /// Walks started, the successful one included.
    pub attempts: u64,
    /// Increments drawn over all attempts.
    pub steps: u64,
}

/// Unconditioned BGW tree, by running the walk until it first goes negative.
/// `size_cap` bounds the number of vertices.
pub fn sample_bgw_free<R: Rng + ?Sized>(law: &OffspringLaw, size_cap: u64, rng: &mut R) -> Result<PlaneTree> {
    let mut counts = Vec::new();
    let mut w = 0i64;
    loop {
        if counts.len() as u64 >= size_cap {
            return Err(Error::BudgetExceeded { spent: counts.len() as u64, cap: size_cap });
        }
        let k = law.sample(rng);
        counts.push(k);
        w += k as i64 - 1;
        if w < 0 {
            return Ok(PlaneTree { child_counts: counts });
        }
    }
}

/// Exact draw of the tree conditioned to have `n` vertices: an `n`-step
/// bridge to `-1` by rejection, then Vervaat, then decoding. `budget` caps
/// the total number of steps drawn.
pub fn sample_tree_exact_n<R: Rng + ?Sized>(
    law: &StepLaw,
    n: usize,
    budget: u64,
    rng: &mut R,
) -> Result<TreeDraw> {
    assert!(n >= 1);
    let mut spent = 0u64;
    let mut attempts = 0u64;
    let mut incs = Vec::with_capacity(n);
    'attempt: loop {
        attempts += 1;
        incs.clear();
        let mut w = 0i64;
        for k in 1..=n {
            if spent >= budget {
                return Err(Error::BudgetExceeded { spent, cap: budget });
            }
            spent += 1;
            let x = law.sample(rng);
            w += x;
            incs.push(x);
            // From W_k the walk needs at least W_k + 1 further steps to reach -1.
            if w > (n - k) as i64 - 1 {
                continue 'attempt;
            }
        }
        if w == -1 {
            let path = vervaat(&WalkPath::from_increments(&incs)?);
            return Ok(TreeDraw { tree: decode_lukasiewicz(&path)?, attempts, steps: spent });
        }
    }
}

/// Approximate draw of the size-`n` tree via `Z^(n)`, retrying until the
/// output is an excursion.
pub fn sample_tree_approx_zn<R: Rng + ?Sized>(
    law: &StepLaw,
    n: usize,
    max_retries: u64,
    rng: &mut R,
) -> Result<TreeDraw> {
    for retries in 0..=max_retries {
        let z = build_z_n(law, n, rng);
        if z.excursion {
            let attempts = retries + 1;
            return Ok(TreeDraw {
                tree: decode_lukasiewicz(&z.path)?,
                attempts,
                steps: attempts * (n as u64 - 1),
            });
        }
    }
    Err(Error::BudgetExceeded { spent: max_retries + 1, cap: max_retries })
}

/// Streaming statistics of the `Z^(n)` tree, retrying non-excursions.
pub fn zn_tree_stats<R: Rng + ?Sized>(
    law: &StepLaw,
    n: usize,
    max_retries: u64,
    rng: &mut R,
) -> Result<(LukaStats, u64, bool)> {
    for retries in 0..=max_retries {
        let z = build_z_n(law, n, rng);
        if z.excursion {
            return Ok((luka_stats(&z.path), retries, z.event_e));
        }
    }
    Err(Error::BudgetExceeded { spent: max_retries + 1, cap: max_retries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStrategy {
    Rejection,
    VecZ,
}

/// Tree conditioned on `|tree| >= n`. `budget` caps the total number of
/// steps drawn (all rejection attempts included).
pub fn sample_tree_tail<R: Rng + ?Sized>(
    law: &StepLaw,
    constants: &ScalingConstants,
    strategy: TailStrategy,
    budget: u64,
    rng: &mut R,
) -> Result<TreeDraw> {
    let n = constants.n;
    match strategy {
        TailStrategy::Rejection => {
            let mut spent = 0u64;
            let mut attempts = 0u64;
            let mut counts = Vec::new();
            loop {
                attempts += 1;
                counts.clear();
                let mut w = 0i64;
                loop {
                    if spent >= budget {
                        return Err(Error::BudgetExceeded { spent, cap: budget });
                    }
                    spent += 1;
                    let x = law.sample(rng);
                    counts.push((x + 1) as u64);
                    w += x;
                    if w < 0 {
                        break;
                    }
                }
                if counts.len() as u64 >= n {
                    return Ok(TreeDraw { tree: PlaneTree { child_counts: counts }, attempts, steps: spent });
                }
            }
        }
        TailStrategy::VecZ => {
            let start = sample_vecz_start(law, constants, VecZStrategy::Reversal, budget, rng)?;
            let mut counts = Vec::new();
            let run = start.run(law, 0, budget, rng, |x| counts.push((x + 1) as u64));
            if run.censored {
                return Err(Error::BudgetExceeded { spent: run.steps, cap: budget });
            }
            Ok(TreeDraw {
                tree: PlaneTree { child_counts: counts },
                attempts: 1,
                steps: start.prefix_work + run.steps,
            })
        }
    }
}

/// Streaming statistics of the `vecZ^(n)` tree, plus the run record. The
/// walk is followed until its first hit of `-1` or `max_steps`.
pub fn vecz_tree_stats<R: Rng + ?Sized>(
    law: &StepLaw,
    constants: &ScalingConstants,
    max_steps: u64,
    rng: &mut R,
) -> Result<(LukaStats, crate::walk::VecZRun, i64)> {
    let start = sample_vecz_start(law, constants, VecZStrategy::Reversal, max_steps, rng)?;
    let mut b = LukaStatsBuilder::new();
    let run = start.run(law, 0, max_steps, rng, |x| b.push(x));
    Ok((b.finish(), run, start.jump))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::{build_critical_tail_law, toy_law};
    use crate::rng::rng_from_seed;
    use crate::walk::exact::{excursion_law, FiniteStepLaw};
    use std::collections::BTreeMap;

    fn tree(cc: &[u64]) -> PlaneTree {
        PlaneTree::from_child_counts(cc.to_vec()).unwrap()
    }

    #[test]
    fn decode_examples() {
        let t = decode_lukasiewicz(&WalkPath::from_sums(vec![0, 1, 0, -1]).unwrap()).unwrap();
        assert_eq!(t.child_counts(), &[2, 0, 0]);
        let t = decode_lukasiewicz(&WalkPath::from_sums(vec![0, -1]).unwrap()).unwrap();
        assert_eq!(t.size(), 1);
        match decode_lukasiewicz(&WalkPath::from_sums(vec![0, -1, 0, -1]).unwrap()) {
            Err(Error::InvalidExcursion { index }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        assert!(decode_lukasiewicz(&WalkPath::from_sums(vec![0, 1, 1]).unwrap()).is_err());
        assert!(PlaneTree::from_child_counts(vec![0, 1]).is_err());
    }

    #[test]
    fn stats_examples() {
        let s = tree_stats(&tree(&[2, 0, 0])).unwrap();
        assert_eq!(s.degrees_sorted, vec![2, 0, 0]);
        assert_eq!((s.u_star, s.h_star, s.height), (0, 0, 1));
        let s = tree_stats(&tree(&[1, 1, 0])).unwrap();
        assert_eq!(s.degrees_sorted, vec![1, 1, 0]);
        assert_eq!((s.u_star, s.height), (0, 2));
        let s = tree_stats(&tree(&[1, 0])).unwrap();
        assert_eq!(s.height, 1);
    }

    #[test]
    fn parents_and_children() {
        // root -> (a, b), a -> (c)
        let t = tree(&[2, 1, 0, 0]);
        assert_eq!(t.parents(), vec![0, 0, 1, 0]);
        let (off, list) = t.children();
        assert_eq!(&list[off[0]..off[1]], &[1, 3]);
        assert_eq!(&list[off[1]..off[2]], &[2]);
        assert_eq!(t.depths(), vec![0, 1, 2, 1]);
    }

    #[test]
    fn roundtrip_and_h_star_agree_on_random_trees() {
        let law = build_critical_tail_law(1.0 / 3.0, 3).unwrap();
        let mut rng = rng_from_seed(21);
        let mut seen = 0;
        while seen < 3000 {
            let Ok(t) = sample_bgw_free(&law, 10_000, &mut rng) else { continue };
            seen += 1;
            let p = encode_lukasiewicz(&t);
            assert!(p.is_excursion());
            assert_eq!(decode_lukasiewicz(&p).unwrap(), t);
            let s = tree_stats(&t).unwrap();
            let l = luka_stats(&p);
            assert_eq!((l.u_star, l.h_star, l.height, l.size), (s.u_star, s.h_star, s.height, s.size));
            let k = s.degrees_sorted.len().min(TOP_DEGREES);
            assert_eq!(l.top_degrees, s.degrees_sorted[..k].to_vec());
        }
    }

    #[test]
    fn free_tree_leaf_probability() {
        let law = toy_law();
        let mut rng = rng_from_seed(22);
        let n = 1_000_000;
        let leaves = (0..n)
            .filter(|_| sample_bgw_free(&law, 1 << 20, &mut rng).is_ok_and(|t| t.size() == 1))
            .count() as f64
            / n as f64;
        let se = (0.25f64 / n as f64).sqrt();
        assert!((leaves - 0.5).abs() < 3.0 * se, "{leaves}");
    }

    /// All plane trees with at most `m` vertices, as child-count vectors.
    fn all_trees(m: usize) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        for n in 1..=m {
            let total = n.pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let cc: Vec<u64> = (0..n)
                    .map(|_| {
                        let d = (c % n) as u64;
                        c /= n;
                        d
                    })
                    .collect();
                if PlaneTree::from_child_counts(cc.clone()).is_ok() {
                    out.push(cc);
                }
            }
        }
        out
    }

    #[test]
    fn small_free_trees_follow_product_formula() {
        let shapes = all_trees(4);
        assert_eq!(shapes.len(), 1 + 1 + 2 + 5);
        let law = toy_law();
        let mut rng = rng_from_seed(23);
        let draws = 400_000usize;
        let mut freq: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        for _ in 0..draws {
            let Ok(t) = sample_bgw_free(&law, 1 << 20, &mut rng) else { continue };
            if t.size() <= 4 {
                *freq.entry(t.child_counts().to_vec()).or_default() += 1;
            }
        }
        for s in shapes {
            let p: f64 = s.iter().map(|&k| law.pmf(k)).product();
            let got = *freq.get(&s).unwrap_or(&0) as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((got - p).abs() < 4.0 * se, "{s:?}: {got} vs {p}");
        }
    }

    #[test]
    fn exact_n_sampler_matches_enumeration() {
        let steps = toy_law().steps();
        let n = 5;
        let exact = excursion_law(&FiniteStepLaw::exact(&steps).unwrap(), n);
        let mut rng = rng_from_seed(24);
        let draws = 200_000usize;
        let mut freq: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        for _ in 0..draws {
            let t = sample_tree_exact_n(&steps, n, u64::MAX, &mut rng).unwrap().tree;
            assert_eq!(t.child_counts().iter().sum::<u64>(), n as u64 - 1);
            *freq.entry(encode_lukasiewicz(&t).increments()).or_default() += 1;
        }
        assert!(freq.keys().all(|k| exact.contains_key(k)));
        let chi2: f64 = exact
            .iter()
            .map(|(k, &p)| {
                let e = p * draws as f64;
                let o = *freq.get(k).unwrap_or(&0) as f64;
                (o - e) * (o - e) / e
            })
            .sum();
        let df = exact.len() as f64 - 1.0;
        assert!(chi2 < chi2_upper(df, 3.090_232), "chi2 {chi2} df {df}");
    }

    /// Wilson-Hilferty upper quantile of chi-square with `df` degrees of
    /// freedom at normal quantile `z`.
    fn chi2_upper(df: f64, z: f64) -> f64 {
        let a = 2.0 / (9.0 * df);
        df * (1.0 - a + z * a.sqrt()).powi(3)
    }

    #[test]
    fn single_vertex_cases() {
        let steps = build_critical_tail_law(1.0 / 3.0, 3).unwrap().steps();
        let mut rng = rng_from_seed(25);
        for _ in 0..100 {
            assert_eq!(sample_tree_exact_n(&steps, 1, u64::MAX, &mut rng).unwrap().tree.size(), 1);
            assert_eq!(sample_tree_approx_zn(&steps, 1, 0, &mut rng).unwrap().tree.size(), 1);
        }
    }

    #[test]
    fn tail_samplers_respect_conditioning() {
        let steps = toy_law().steps();
        let k = crate::scaling::compute_constants(&steps, 20).unwrap();
        let mut rng = rng_from_seed(26);
        for _ in 0..300 {
            let t = sample_tree_tail(&steps, &k, TailStrategy::Rejection, u64::MAX, &mut rng).unwrap().tree;
            assert!(t.size() >= 20);
        }
        let heavy = build_critical_tail_law(1.0 / 3.0, 3).unwrap().steps();
        let k = crate::scaling::compute_constants(&heavy, 500).unwrap();
        for _ in 0..100 {
            match sample_tree_tail(&heavy, &k, TailStrategy::VecZ, 1 << 28, &mut rng) {
                Ok(d) => assert!(d.tree.child_counts().iter().any(|&d| d as f64 >= k.abs_b_n())),
                Err(Error::BudgetExceeded { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn exact_n_reports_budget() {
        let steps = build_critical_tail_law(1.0 / 3.0, 3).unwrap().steps();
        let mut rng = rng_from_seed(27);
        assert!(matches!(
            sample_tree_exact_n(&steps, 10_000, 100, &mut rng),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
