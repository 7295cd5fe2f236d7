//! Exact identity checks on finite-support laws, each reported as a worst
//! absolute discrepancy against a `1e-9` slack.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::offspring::OffspringLaw;
use crate::rng::par_replicates;
use crate::scaling::wiener_hopf_coefficients;
use crate::tree::{decode_lukasiewicz, encode_lukasiewicz, sample_bgw_free};
use crate::walk::exact::{
    default_band, dtv_local, dtv_local_by_counts, enumerate_paths, exact_functional_law, i_n_pmf, FiniteStepLaw,
    MAX_EXACT_N,
};
use crate::walk::{vervaat, WalkPath};
use crate::{Error, Result};

pub const SLACK: f64 = 1e-9;
/// Largest horizon for checks that enumerate all paths.
pub const MAX_ENUMERATION_N: usize = 10;
const ROUNDTRIP_TREES: u64 = 10_000;
const ROUNDTRIP_SIZE_CAP: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleCheck {
    Kemperman,
    Vervaat,
    InPmf,
    DtvLocal,
    Duality,
    WienerHopf,
    Lukasiewicz,
}

impl OracleCheck {
    pub const ALL: [OracleCheck; 7] = [
        OracleCheck::Kemperman,
        OracleCheck::Vervaat,
        OracleCheck::InPmf,
        OracleCheck::DtvLocal,
        OracleCheck::Duality,
        OracleCheck::WienerHopf,
        OracleCheck::Lukasiewicz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleCheck::Kemperman => "kemperman",
            OracleCheck::Vervaat => "vervaat",
            OracleCheck::InPmf => "in-pmf",
            OracleCheck::DtvLocal => "dtv-local",
            OracleCheck::Duality => "duality",
            OracleCheck::WienerHopf => "wiener-hopf",
            OracleCheck::Lukasiewicz => "lukasiewicz",
        }
    }

    /// Horizon actually used for a requested `nmax`.
    pub fn horizon(self, nmax: usize) -> usize {
        match self {
            OracleCheck::Vervaat => nmax.min(MAX_ENUMERATION_N),
            OracleCheck::DtvLocal => nmax.min(8),
            _ => nmax,
        }
    }
}

impl fmt::Display for OracleCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleCheck {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OracleCheck::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown oracle check {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleOutcome {
    pub check: OracleCheck,
    pub nmax: usize,
    /// Identities (or objects) compared.
    pub cases: u64,
    pub max_error: f64,
    pub pass: bool,
}

fn outcome(check: OracleCheck, nmax: usize, errors: impl IntoIterator<Item = f64>) -> OracleOutcome {
    let (mut cases, mut max_error) = (0u64, 0.0f64);
    for e in errors {
        cases += 1;
        // NaN counts as a failure.
        max_error = if e.is_nan() { f64::INFINITY } else { max_error.max(e) };
    }
    OracleOutcome { check, nmax, cases, max_error, pass: max_error <= SLACK }
}

pub fn run_oracle(check: OracleCheck, law: &OffspringLaw, nmax: usize, seed: u64) -> Result<OracleOutcome> {
    if nmax == 0 || nmax > MAX_EXACT_N {
        return Err(Error::Domain(format!("nmax must be in 1..={MAX_EXACT_N}, got {nmax}")));
    }
    let n = check.horizon(nmax);
    if check == OracleCheck::Lukasiewicz {
        return lukasiewicz_roundtrip(check, law, n, seed);
    }
    let finite = FiniteStepLaw::exact(&law.steps())?;
    let t = exact_functional_law(&finite, n, default_band(&finite, n))?;
    Ok(match check {
        OracleCheck::Kemperman => {
            outcome(check, n, (1..=n).map(|k| (t.zeta_eq[k] - t.p_w_eq(k, -1) / k as f64).abs()))
        }
        OracleCheck::Duality => outcome(check, n, (0..=n).map(|k| (t.ladder[k] - t.zeta_gt[k]).abs())),
        OracleCheck::InPmf => {
            let mut errs = Vec::new();
            for m in 1..=n {
                let pmf = i_n_pmf(&finite, m, default_band(&finite, m))?;
                errs.extend((0..=m).map(|j| (pmf[j] - t.zeta_gt[j] * t.t1_gt[m - j]).abs()));
                errs.push((pmf.iter().sum::<f64>() - 1.0).abs());
            }
            outcome(check, n, errs)
        }
        OracleCheck::WienerHopf => {
            let p = wiener_hopf_coefficients(&t.nonneg[1..=n])?;
            outcome(check, n, (0..=n).map(|k| (p[k] - t.zeta_gt[k]).abs()))
        }
        OracleCheck::DtvLocal => {
            let mut errs = Vec::new();
            for m in 2..=n {
                errs.push((dtv_local_by_counts(&finite, m)? - dtv_local(&finite, m)).abs());
            }
            outcome(check, n, errs)
        }
        OracleCheck::Vervaat => {
            let mut errs = Vec::new();
            for m in 1..=n {
                errs.push(cycle_lemma_violations(&finite, m) as f64);
            }
            outcome(check, n, errs)
        }
        OracleCheck::Lukasiewicz => unreachable!(),
    })
}

/// Number of `m`-step sequences over the support with sum `-1` for which the
/// excursion shift is not unique or `vervaat` does not return it.
fn cycle_lemma_violations(law: &FiniteStepLaw, m: usize) -> u64 {
    let mut bad = 0;
    let mut rotated = vec![0i64; m];
    enumerate_paths(law, m, |incs, _| {
        if incs.iter().sum::<i64>() != -1 {
            return;
        }
        let mut found: Option<Vec<i64>> = None;
        let mut count = 0;
        for s in 0..m {
            for i in 0..m {
                rotated[i] = incs[(s + i) % m];
            }
            let mut w = 0;
            let ok = rotated.iter().enumerate().all(|(i, &x)| {
                w += x;
                w >= 0 || i + 1 == m
            });
            if ok && found.as_deref() != Some(rotated.as_slice()) {
                count += 1;
                found = Some(rotated.clone());
            }
        }
        let v = vervaat(&WalkPath::from_any_increments(incs));
        if count != 1 || !v.is_excursion() || found.as_deref() != Some(v.increments().as_slice()) {
            bad += 1;
        }
    });
    bad
}

/// Decode-encode roundtrip on free BGW trees; `n` is unused beyond validation.
fn lukasiewicz_roundtrip(check: OracleCheck, law: &OffspringLaw, n: usize, seed: u64) -> Result<OracleOutcome> {
    let errs = par_replicates(seed, ROUNDTRIP_TREES, |_, rng| {
        let Ok(tree) = sample_bgw_free(law, ROUNDTRIP_SIZE_CAP, rng) else {
            return 0.0;
        };
        let path = encode_lukasiewicz(&tree);
        let ok = path.is_excursion() && decode_lukasiewicz(&path).is_ok_and(|t| t == tree);
        f64::from(u8::from(!ok))
    });
    Ok(outcome(check, n, errs))
}
