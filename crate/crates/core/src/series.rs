//! Convergent series for the `c / (k^2 ln^2 k)` offspring tail.
//!
//! `tail_sum(p, m)` evaluates `sum_{k >= m} 1 / (k^p ln^2 k)` for `p` in
//! `{1, 2}` by compensated direct summation up to [`EM_START`] and an
//! Euler-Maclaurin remainder beyond it. The remainder uses the exact integral
//! (`1 / ln N` for `p = 1`, the upper incomplete gamma `Gamma(-1, ln N)` for
//! `p = 2`) plus the `f/2` and `f'/12` corrections; the first neglected term is
//! below `1e-18` absolute at `N = EM_START`.

/// First index handled by the Euler-Maclaurin remainder.
pub const EM_START: u64 = 4096;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `1 / (x^p ln^2 x)`.
#[inline]
pub fn term(p: u32, x: f64) -> f64 {
    let l = x.ln();
    1.0 / (x.powi(p as i32) * l * l)
}

fn term_derivative(p: u32, x: f64) -> f64 {
    let l = x.ln();
    -(p as f64 + 2.0 / l) / (x.powi(p as i32 + 1) * l * l)
}

/// `int_N^inf dx / (x^p ln^2 x)`.
pub fn tail_integral(p: u32, n: f64) -> f64 {
    match p {
        1 => 1.0 / n.ln(),
        2 => upper_gamma_minus_one(n.ln()),
        _ => panic!("unsupported exponent {p}"),
    }
}

/// Upper incomplete gamma `Gamma(-1, z)` for `z >= 1`, by the Legendre
/// continued fraction (modified Lentz).
pub fn upper_gamma_minus_one(z: f64) -> f64 {
    const A: f64 = -1.0;
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - A;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let i = i as f64;
        let an = -i * (i - A);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z + A * z.ln()).exp() * h
}

/// Euler-Maclaurin tail `sum_{k >= n}` for `n >= EM_START`, at real `n`.
fn em_tail(p: u32, n: f64) -> f64 {
    tail_integral(p, n) + 0.5 * term(p, n) - term_derivative(p, n) / 12.0
}

/// `sum_{k >= from} 1 / (k^p ln^2 k)`, `from >= 2`.
pub fn tail_sum(p: u32, from: u64) -> f64 {
    assert!(from >= 2, "tail_sum needs from >= 2");
    if from >= EM_START {
        return em_tail(p, from as f64);
    }
    let mut s = CompensatedSum::new();
    for k in from..EM_START {
        s.add(term(p, k as f64));
    }
    s.add(em_tail(p, EM_START as f64));
    s.value()
}

/// `sum_{k = from}^{to - 1} 1 / (k^p ln^2 k)`.
pub fn range_sum(p: u32, from: u64, to: u64) -> f64 {
    if to <= from {
        return 0.0;
    }
    if to - from <= 8192 {
        let mut s = CompensatedSum::new();
        for k in from..to {
            s.add(term(p, k as f64));
        }
        return s.value();
    }
    tail_sum(p, from) - tail_sum(p, to)
}
