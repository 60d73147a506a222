//! Exact reference laws and goodness-of-fit statistics.
//!
//! Laws and survival recursions are exact rationals. Floating point appears
//! only in chi-square tail probabilities and confidence intervals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::perm::LocalPerm;

/// A law on a finite set of nonnegative integers with exact probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteLaw {
    pub support: Vec<usize>,
    pub probs: Vec<BigRational>,
}

impl DiscreteLaw {
    pub fn new(support: Vec<usize>, probs: Vec<BigRational>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(Error::Stats("support and probabilities differ in length".into()));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::Stats("negative probability".into()));
        }
        let total: BigRational = probs.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::Stats(format!("probabilities sum to {total}")));
        }
        Ok(DiscreteLaw { support, probs })
    }

    /// Law of a value given by its frequency over a finite population.
    pub fn from_counts(counts: &BTreeMap<usize, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::Stats("empty population".into()));
        }
        let denom = BigInt::from(total);
        let (support, probs) = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&k, &c)| (k, BigRational::new(BigInt::from(c), denom.clone())))
            .unzip();
        DiscreteLaw::new(support, probs)
    }

    pub fn prob(&self, value: usize) -> BigRational {
        self.support
            .iter()
            .position(|&k| k == value)
            .map(|i| self.probs[i].clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn mean(&self) -> BigRational {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, p)| p * BigRational::from_integer(BigInt::from(k)))
            .sum()
    }

    pub fn variance(&self) -> BigRational {
        let mean = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, p)| {
                let x = BigRational::from_integer(BigInt::from(k)) - &mean;
                p * &x * &x
            })
            .sum()
    }

    /// Probability generating function at `s`.
    pub fn pgf(&self, s: &BigRational) -> BigRational {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, p)| p * num_traits::pow(s.clone(), k))
            .sum()
    }

    pub fn pgf_f64(&self, s: f64) -> f64 {
        self.support
            .iter()
            .zip(self.probs_f64())
            .map(|(&k, p)| p * s.powi(k as i32))
            .sum()
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.to_f64().unwrap()).collect()
    }

    /// `{value: "num/den"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, String> = self
            .support
            .iter()
            .zip(&self.probs)
            .map(|(k, p)| (k.to_string(), format!("{}/{}", p.numer(), p.denom())))
            .collect();
        serde_json::to_value(map).unwrap()
    }
}

fn check_degree(d: usize) -> Result<()> {
    if (3..=8).contains(&d) {
        Ok(())
    } else {
        Err(Error::Degree(d))
    }
}

fn fixed_point_law(n: u8) -> DiscreteLaw {
    let mut counts = BTreeMap::new();
    for p in LocalPerm::all(n) {
        *counts.entry(p.fixed_points()).or_insert(0u64) += 1;
    }
    DiscreteLaw::from_counts(&counts).unwrap()
}

/// Number of fixed children of a non-root vertex under a Haar-random rooted
/// automorphism: fixed points of a uniform permutation of `d - 1` letters.
pub fn offspring_law(d: usize) -> Result<DiscreteLaw> {
    check_degree(d)?;
    Ok(fixed_point_law(d as u8 - 1))
}

/// Number of fixed neighbors of the base vertex: fixed points of a uniform
/// permutation of `d` letters.
pub fn root_law(d: usize) -> Result<DiscreteLaw> {
    check_degree(d)?;
    Ok(fixed_point_law(d as u8))
}

/// Largest `(d-1)^depth` for which survival probabilities are computed
/// exactly; denominators grow like `((d-1)!)^((d-1)^depth)`.
pub const EXACT_SURVIVAL_GUARD: u128 = 1 << 17;

fn exact_guard(d: usize, depth: usize) -> Result<()> {
    let growth = (d as u128 - 1).checked_pow(depth as u32);
    match growth {
        Some(g) if g <= EXACT_SURVIVAL_GUARD => Ok(()),
        _ => Err(Error::TooLarge(format!(
            "exact survival recursion at d = {d}, depth = {depth}"
        ))),
    }
}

/// Probability that the fixed tree of a Haar-random automorphism of a rooted
/// (d-1)-ary shadow reaches depth `depth`:
/// `p_0 = 1`, `p_(L+1) = 1 - f(1 - p_L)` with `f` the offspring pgf.
pub fn survival_prob(d: usize, depth: usize) -> Result<BigRational> {
    let law = offspring_law(d)?;
    exact_guard(d, depth)?;
    let one = BigRational::one();
    let mut p = one.clone();
    for _ in 0..depth {
        p = &one - law.pgf(&(&one - &p));
    }
    Ok(p)
}

/// Same probability for the full rooted tree: the first generation follows
/// the root law, later ones the shadow recursion.
pub fn survival_prob_rooted(d: usize, depth: usize) -> Result<BigRational> {
    let root = root_law(d)?;
    if depth == 0 {
        return Ok(BigRational::one());
    }
    let one = BigRational::one();
    let below = survival_prob(d, depth - 1)?;
    Ok(&one - root.pgf(&(&one - below)))
}

/// Floating-point evaluation of [`survival_prob`] for any depth.
pub fn survival_prob_f64(d: usize, depth: usize) -> Result<f64> {
    let law = offspring_law(d)?;
    let mut p = 1.0f64;
    for _ in 0..depth {
        p = 1.0 - law.pgf_f64(1.0 - p);
    }
    Ok(p)
}

pub fn survival_prob_rooted_f64(d: usize, depth: usize) -> Result<f64> {
    let root = root_law(d)?;
    if depth == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - root.pgf_f64(1.0 - survival_prob_f64(d, depth - 1)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GofMethod {
    ChiSquare,
    ExactMultinomial,
}

#[derive(Clone, Debug, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub method: GofMethod,
}

/// Largest number of outcomes enumerated by the exact multinomial test.
pub const EXACT_MULTINOMIAL_GUARD: u64 = 2_000_000;

/// Pearson goodness of fit of `counts` against cell probabilities `probs`.
/// Falls back to the exact multinomial test when an expected count is
/// below 5.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<GofResult> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::Stats("need at least two matching cells".into()));
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) || probs.iter().all(|&p| p == 0.0) {
        return Err(Error::Stats("degenerate law".into()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Stats("no observations".into()));
    }
    for (c, p) in counts.iter().zip(probs) {
        if *p == 0.0 && *c > 0 {
            return Ok(GofResult {
                statistic: f64::INFINITY,
                dof: counts.len() - 1,
                p_value: 0.0,
                method: GofMethod::ChiSquare,
            });
        }
    }
    let cells: Vec<(u64, f64)> = counts
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| (c, p))
        .collect();
    let statistic: f64 = cells
        .iter()
        .map(|&(c, p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dof = cells.len() - 1;
    if cells.iter().any(|&(_, p)| p * (n as f64) < 5.0) {
        let p_value = exact_multinomial(&cells, n)?;
        return Ok(GofResult {
            statistic,
            dof,
            p_value,
            method: GofMethod::ExactMultinomial,
        });
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Stats(e.to_string()))?;
    Ok(GofResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        method: GofMethod::ChiSquare,
    })
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::factorial::ln_factorial(n)
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Sum of the probabilities of all outcomes no more likely than the
/// observed one.
fn exact_multinomial(cells: &[(u64, f64)], n: u64) -> Result<f64> {
    let k = cells.len() as u64;
    let outcomes = binomial(n + k - 1, k - 1);
    if outcomes > EXACT_MULTINOMIAL_GUARD as u128 {
        return Err(Error::TooLarge(format!("{outcomes} multinomial outcomes")));
    }
    let logp: Vec<f64> = cells.iter().map(|&(_, p)| p.ln()).collect();
    let ln_pmf = |xs: &[u64]| {
        ln_factorial(n)
            + xs.iter()
                .zip(&logp)
                .map(|(&x, &lp)| x as f64 * lp - ln_factorial(x))
                .sum::<f64>()
    };
    let observed: Vec<u64> = cells.iter().map(|&(c, _)| c).collect();
    let threshold = ln_pmf(&observed) + 1e-9;

    let mut total = 0.0;
    let mut xs = vec![0u64; cells.len()];
    fn rec(
        i: usize,
        left: u64,
        xs: &mut Vec<u64>,
        total: &mut f64,
        threshold: f64,
        ln_pmf: &dyn Fn(&[u64]) -> f64,
    ) {
        if i == xs.len() - 1 {
            xs[i] = left;
            let l = ln_pmf(xs);
            if l <= threshold {
                *total += l.exp();
            }
            return;
        }
        for x in 0..=left {
            xs[i] = x;
            rec(i + 1, left - x, xs, total, threshold, ln_pmf);
        }
    }
    rec(0, n, &mut xs, &mut total, threshold, &ln_pmf);
    Ok(total.min(1.0))
}

/// Total variation distance between empirical frequencies and a law, exact.
pub fn tv_distance(counts: &[u64], probs: &[BigRational]) -> Result<BigRational> {
    if counts.len() != probs.len() {
        return Err(Error::Stats("cell count mismatch".into()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Stats("no observations".into()));
    }
    let n = BigInt::from(n);
    let sum: BigRational = counts
        .iter()
        .zip(probs)
        .map(|(&c, p)| (BigRational::new(BigInt::from(c), n.clone()) - p).abs())
        .sum();
    Ok(sum / BigRational::from_integer(BigInt::from(2)))
}

/// Wilson score interval for a binomial proportion.
pub fn binomial_ci(hits: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    if n == 0 || hits > n || !(0.0..1.0).contains(&level) {
        return Err(Error::Stats("invalid binomial interval request".into()));
    }
    let z = Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(0.5 + level / 2.0);
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}

/// Standard error of a sample proportion under the reference probability.
pub fn proportion_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn offspring_laws() {
        let l3 = offspring_law(3).unwrap();
        assert_eq!(l3.support, vec![0, 2]);
        assert_eq!(l3.probs, vec![q(1, 2), q(1, 2)]);
        let l4 = offspring_law(4).unwrap();
        assert_eq!(l4.support, vec![0, 1, 3]);
        assert_eq!(l4.probs, vec![q(1, 3), q(1, 2), q(1, 6)]);
        let r3 = root_law(3).unwrap();
        assert_eq!(r3.probs, vec![q(1, 3), q(1, 2), q(1, 6)]);
        for d in 3..=8 {
            assert!(offspring_law(d).unwrap().mean().is_one());
            assert!(root_law(d).unwrap().mean().is_one());
        }
        assert!(offspring_law(9).is_err());
        assert!(offspring_law(2).is_err());
    }

    #[test]
    fn survival_values() {
        assert_eq!(survival_prob(3, 0).unwrap(), q(1, 1));
        assert_eq!(survival_prob(3, 1).unwrap(), q(1, 2));
        assert_eq!(survival_prob(3, 2).unwrap(), q(3, 8));
        // root step: 1 - g(1/2), g(s) = (2 + 3s + s^3) / 6, g(1/2) = 29/48
        assert_eq!(survival_prob_rooted(3, 2).unwrap(), q(19, 48));
        let mut prev = survival_prob(3, 0).unwrap();
        for l in 1..=16 {
            let p = survival_prob(3, l).unwrap();
            assert!(p < prev && p.is_positive());
            assert!((p.to_f64().unwrap() - survival_prob_f64(3, l).unwrap()).abs() < 1e-12);
            prev = p;
        }
        assert!(survival_prob(4, 20).is_err());
    }

    #[test]
    fn survival_decreases_to_zero() {
        for d in 3..=8 {
            let mut prev = 1.0;
            for l in 1..=64 {
                let p = survival_prob_f64(d, l).unwrap();
                assert!(p < prev && p > 0.0, "d={d} l={l}");
                prev = p;
            }
            // critical branching: p_L ~ 2 / (sigma^2 L)
            let sigma2 = offspring_law(d).unwrap().variance().to_f64().unwrap();
            let tail = survival_prob_f64(d, 4096).unwrap();
            assert!((tail * sigma2 * 4096.0 / 2.0 - 1.0).abs() < 0.05, "d={d}: {tail}");
        }
    }

    #[test]
    fn json_laws() {
        let j = offspring_law(3).unwrap().to_json();
        assert_eq!(j["0"], "1/2");
        assert_eq!(j["2"], "1/2");
    }

    #[test]
    fn tv_and_chi_square() {
        let law = offspring_law(4).unwrap();
        let counts = [2000, 3000, 1000];
        assert!(tv_distance(&counts, &law.probs).unwrap().is_zero());
        let g = chi_square_gof(&counts, &law.probs_f64()).unwrap();
        assert_eq!(g.method, GofMethod::ChiSquare);
        assert!(g.statistic.abs() < 1e-12 && g.p_value >= 0.99);
        let skew = chi_square_gof(&[2600, 2400, 1000], &law.probs_f64()).unwrap();
        assert!(skew.p_value < 1e-6);
    }

    #[test]
    fn exact_fallback() {
        let g = chi_square_gof(&[1, 1, 1, 1], &[0.25; 4]).unwrap();
        assert_eq!(g.method, GofMethod::ExactMultinomial);
        assert!((g.p_value - 1.0).abs() < 1e-9);
        let g = chi_square_gof(&[4, 0, 0, 0], &[0.25; 4]).unwrap();
        // four outcomes of probability 1/256 each
        assert!((g.p_value - 4.0 / 256.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval() {
        let (lo, hi) = binomial_ci(50, 100, 0.95).unwrap();
        assert!(lo < 0.5 && 0.5 < hi);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        assert!(binomial_ci(5, 4, 0.95).is_err());
    }
}
