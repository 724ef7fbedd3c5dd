//! Balls-into-bins: seeded placement, singleton counting, and exact
//! enumeration oracles.
//!
//! Sampling and the backoff engine share one code path ([`Thrower`]), so a
//! window with `m` packets and `w` slots is literally a placement of `m`
//! balls into `w` bins.

use num::bigint::BigUint;
use num::traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ExactProbability;
use crate::rng::{RngStream, StreamRng};

/// Default limit on the number of objects an enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

/// Default limit on `trials * n_bins` for [`simulate_singletons`].
pub const DEFAULT_MEMORY_BUDGET: u128 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    bin_counts: Vec<u32>,
    n_balls: u64,
}

impl Occupancy {
    /// Builds an occupancy from explicit counts; the ball total is their sum.
    pub fn from_counts(bin_counts: Vec<u32>) -> Result<Self> {
        if bin_counts.is_empty() {
            return Err(Error::invalid("bin_counts", "need at least one bin"));
        }
        let n_balls: u64 = bin_counts.iter().map(|&c| u64::from(c)).sum();
        if n_balls == 0 {
            return Err(Error::invalid("bin_counts", "need at least one ball"));
        }
        Ok(Self { bin_counts, n_balls })
    }

    pub fn bin_counts(&self) -> &[u32] {
        &self.bin_counts
    }

    pub fn n_balls(&self) -> u64 {
        self.n_balls
    }

    pub fn n_bins(&self) -> u64 {
        self.bin_counts.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingletonIndicators {
    pub bits: Vec<bool>,
    pub count: u64,
}

pub fn singleton_indicators(occ: &Occupancy) -> SingletonIndicators {
    let bits: Vec<bool> = occ.bin_counts.iter().map(|&c| c == 1).collect();
    let count = bits.iter().filter(|&&b| b).count() as u64;
    SingletonIndicators { bits, count }
}

fn validate_sizes(n_balls: u64, n_bins: u64) -> Result<()> {
    if n_balls == 0 {
        return Err(Error::invalid("n_balls", "must be >= 1"));
    }
    if n_bins == 0 {
        return Err(Error::invalid("n_bins", "must be >= 1"));
    }
    if n_balls > u64::from(u32::MAX) {
        return Err(Error::invalid("n_balls", "must fit in 32 bits"));
    }
    Ok(())
}

/// Drops `n_balls` balls uniformly and independently into `n_bins` bins.
pub fn place_balls(n_balls: u64, n_bins: u64, stream: &RngStream) -> Result<Occupancy> {
    validate_sizes(n_balls, n_bins)?;
    let bins = usize::try_from(n_bins).map_err(|_| Error::invalid("n_bins", "too large"))?;
    let mut rng = stream.generator();
    let mut bin_counts = vec![0u32; bins];
    for _ in 0..n_balls {
        bin_counts[rng.below(n_bins) as usize] += 1;
    }
    Ok(Occupancy { bin_counts, n_balls })
}

/// Result of throwing balls without materialising the occupancy vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Throw {
    pub singletons: u64,
    /// Highest bin index holding exactly one ball.
    pub last_singleton: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) enum Counting {
    Auto,
    Dense,
    Sparse,
}

/// Reusable scratch space for counting singletons of a placement.
///
/// Draws are always taken in ball order with one `below(n_bins)` call per
/// ball. Dense counting uses a per-bin array; sparse counting sorts the drawn
/// bins. Both see the same draws and return the same [`Throw`].
#[derive(Debug, Default)]
pub struct Thrower {
    counts: Vec<u32>,
    slots: Vec<u64>,
}

impl Thrower {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn throw(&mut self, rng: &mut StreamRng, n_balls: u64, n_bins: u64) -> Throw {
        self.throw_with(rng, n_balls, n_bins, Counting::Auto)
    }

    pub(crate) fn throw_with(
        &mut self,
        rng: &mut StreamRng,
        n_balls: u64,
        n_bins: u64,
        counting: Counting,
    ) -> Throw {
        if n_balls == 0 {
            return Throw {
                singletons: 0,
                last_singleton: None,
            };
        }
        assert!(n_bins > 0, "window must have at least one slot");
        let dense = match counting {
            Counting::Dense => true,
            Counting::Sparse => false,
            Counting::Auto => n_bins <= n_balls.saturating_mul(8).max(4096),
        };
        if dense {
            self.throw_dense(rng, n_balls, n_bins)
        } else {
            self.throw_sparse(rng, n_balls, n_bins)
        }
    }

    fn throw_dense(&mut self, rng: &mut StreamRng, n_balls: u64, n_bins: u64) -> Throw {
        self.counts.clear();
        self.counts.resize(n_bins as usize, 0);
        for _ in 0..n_balls {
            let slot = rng.below(n_bins) as usize;
            self.counts[slot] = self.counts[slot].saturating_add(1);
        }
        let mut singletons = 0;
        let mut last_singleton = None;
        for (slot, &c) in self.counts.iter().enumerate() {
            if c == 1 {
                singletons += 1;
                last_singleton = Some(slot as u64);
            }
        }
        Throw {
            singletons,
            last_singleton,
        }
    }

    fn throw_sparse(&mut self, rng: &mut StreamRng, n_balls: u64, n_bins: u64) -> Throw {
        self.slots.clear();
        self.slots.extend((0..n_balls).map(|_| rng.below(n_bins)));
        self.slots.sort_unstable();
        let mut singletons = 0;
        let mut last_singleton = None;
        let mut i = 0;
        while i < self.slots.len() {
            let mut j = i + 1;
            while j < self.slots.len() && self.slots[j] == self.slots[i] {
                j += 1;
            }
            if j - i == 1 {
                singletons += 1;
                last_singleton = Some(self.slots[i]);
            }
            i = j;
        }
        Throw {
            singletons,
            last_singleton,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SampleStats {
    pub trials: u64,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub keep_counts: bool,
    pub memory_budget: u128,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            keep_counts: false,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// Singleton counts over independent trials; trial `t` uses stream `(seed, t)`.
pub fn simulate_singletons(
    n_balls: u64,
    n_bins: u64,
    trials: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<SampleStats> {
    validate_sizes(n_balls, n_bins)?;
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let required = u128::from(trials) * u128::from(n_bins);
    if required > options.memory_budget {
        return Err(Error::ResourceBudget {
            required,
            budget: options.memory_budget,
        });
    }
    let counts: Vec<u64> = (0..trials)
        .into_par_iter()
        .map_init(Thrower::new, |thrower, t| {
            let mut rng = RngStream::new(seed, t).generator();
            thrower.throw(&mut rng, n_balls, n_bins).singletons
        })
        .collect();
    let total: u128 = counts.iter().map(|&c| u128::from(c)).sum();
    let min = *counts.iter().min().expect("trials >= 1");
    let max = *counts.iter().max().expect("trials >= 1");
    Ok(SampleStats {
        trials,
        mean: total as f64 / trials as f64,
        min,
        max,
        counts: options.keep_counts.then_some(counts),
    })
}

/// How an exact oracle walks the placement space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnumerationMethod {
    /// Every one of the `B^N` equally likely ball-to-bin assignments.
    Raw,
    /// Every occupancy vector, weighted by its multinomial coefficient.
    #[default]
    Multinomial,
}

fn binomial_u128(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of objects an enumeration visits (saturating at `u128::MAX`).
pub fn enumeration_size(method: EnumerationMethod, n_balls: u64, n_bins: u64) -> u128 {
    match method {
        EnumerationMethod::Raw => {
            let mut acc: u128 = 1;
            for _ in 0..n_balls {
                acc = match acc.checked_mul(u128::from(n_bins)) {
                    Some(v) => v,
                    None => return u128::MAX,
                };
            }
            acc
        }
        EnumerationMethod::Multinomial => binomial_u128(
            u128::from(n_balls) + u128::from(n_bins) - 1,
            u128::from(n_balls),
        )
        .unwrap_or(u128::MAX),
    }
}

/// Exact-oracle configuration.
#[derive(Debug, Clone, Copy)]
pub struct Enumerator {
    pub method: EnumerationMethod,
    pub cap: u128,
}

impl Default for Enumerator {
    fn default() -> Self {
        Self {
            method: EnumerationMethod::default(),
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Exact tallies gathered in one pass over all placements.
#[derive(Debug, Clone)]
pub struct PlacementTally {
    /// `B^N`.
    pub total: BigUint,
    /// `by_singletons[k]`: placements with exactly `k` singleton bins.
    pub by_singletons: Vec<BigUint>,
    /// `per_bin[j]`: placements in which bin `j` is a singleton.
    pub per_bin: Vec<BigUint>,
    /// Placements in which every bin of the queried subset is a singleton.
    pub subset_all_singleton: BigUint,
    /// Placements with no bin holding two or more balls.
    pub all_distinct: BigUint,
}

impl Enumerator {
    pub fn raw() -> Self {
        Self {
            method: EnumerationMethod::Raw,
            ..Self::default()
        }
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    fn check(&self, n_balls: u64, n_bins: u64) -> Result<()> {
        validate_sizes(n_balls, n_bins)?;
        let required = enumeration_size(self.method, n_balls, n_bins);
        if required > self.cap {
            return Err(Error::CapExceeded {
                required,
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// Walks every placement once and tallies singleton statistics.
    pub fn tally(&self, n_balls: u64, n_bins: u64, subset: &[u64]) -> Result<PlacementTally> {
        self.check(n_balls, n_bins)?;
        let mut subset: Vec<usize> = subset.iter().map(|&j| j as usize).collect();
        subset.sort_unstable();
        subset.dedup();
        if let Some(&j) = subset.iter().find(|&&j| j as u64 >= n_bins) {
            return Err(Error::invalid(
                "subset",
                format!("bin index {j} is outside 0..{n_bins}"),
            ));
        }
        let n = n_balls as usize;
        let b = n_bins as usize;
        let mut tally = PlacementTally {
            total: BigUint::from(n_bins).pow(n_balls as u32),
            by_singletons: vec![BigUint::zero(); n.min(b) + 1],
            per_bin: vec![BigUint::zero(); b],
            subset_all_singleton: BigUint::zero(),
            all_distinct: BigUint::zero(),
        };
        let mut record = |counts: &[u32], weight: &BigUint| {
            let mut k = 0;
            for (j, &c) in counts.iter().enumerate() {
                if c == 1 {
                    k += 1;
                    tally.per_bin[j] += weight;
                }
            }
            tally.by_singletons[k] += weight;
            if subset.iter().all(|&j| counts[j] == 1) {
                tally.subset_all_singleton += weight;
            }
            if counts.iter().all(|&c| c <= 1) {
                tally.all_distinct += weight;
            }
        };
        match self.method {
            EnumerationMethod::Raw => {
                let one = BigUint::one();
                for_each_assignment(n, b, |counts| record(counts, &one));
            }
            EnumerationMethod::Multinomial => for_each_occupancy(n, b, &mut record),
        }
        Ok(tally)
    }
}

/// Odometer over all `b^n` assignments, passing the induced bin counts.
fn for_each_assignment(n: usize, b: usize, mut visit: impl FnMut(&[u32])) {
    let mut assign = vec![0usize; n];
    let mut counts = vec![0u32; b];
    counts[0] = n as u32;
    loop {
        visit(&counts);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            counts[assign[i]] -= 1;
            assign[i] += 1;
            if assign[i] == b {
                assign[i] = 0;
                counts[0] += 1;
                i += 1;
            } else {
                counts[assign[i]] += 1;
                break;
            }
        }
    }
}

/// All occupancy vectors of `n` balls over `b` bins with multinomial weights.
fn for_each_occupancy(n: usize, b: usize, visit: &mut impl FnMut(&[u32], &BigUint)) {
    let mut factorial = vec![BigUint::one(); n + 1];
    for i in 1..=n {
        factorial[i] = &factorial[i - 1] * BigUint::from(i);
    }
    let mut counts = vec![0u32; b];
    fn rec(
        bin: usize,
        remaining: usize,
        counts: &mut [u32],
        factorial: &[BigUint],
        visit: &mut impl FnMut(&[u32], &BigUint),
    ) {
        let b = counts.len();
        if bin == b - 1 {
            counts[bin] = remaining as u32;
            let n = factorial.len() - 1;
            let mut denom = BigUint::one();
            for &c in counts.iter() {
                if c > 1 {
                    denom *= &factorial[c as usize];
                }
            }
            let weight = &factorial[n] / denom;
            visit(counts, &weight);
            return;
        }
        for c in 0..=remaining {
            counts[bin] = c as u32;
            rec(bin + 1, remaining - c, counts, factorial, visit);
        }
        counts[bin] = 0;
    }
    rec(0, n, &mut counts, &factorial, visit);
}

fn ratio(numerator: &BigUint, total: &BigUint) -> ExactProbability {
    ExactProbability::new(numerator.clone(), total.clone()).expect("count <= total")
}

/// `Pr[every bin in subset holds exactly one ball]`, by exhaustive counting.
pub fn enumerate_joint_singleton_prob(
    n_balls: u64,
    n_bins: u64,
    subset: &[u64],
    enumerator: &Enumerator,
) -> Result<ExactProbability> {
    let tally = enumerator.tally(n_balls, n_bins, subset)?;
    Ok(ratio(&tally.subset_all_singleton, &tally.total))
}

/// `Pr[all balls land in distinct bins]`, by exhaustive counting.
pub fn enumerate_all_distinct_prob(
    n_balls: u64,
    n_bins: u64,
    enumerator: &Enumerator,
) -> Result<ExactProbability> {
    let tally = enumerator.tally(n_balls, n_bins, &[])?;
    Ok(ratio(&tally.all_distinct, &tally.total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfSides {
    /// `E[prod_j exp(lambda * I_j)]`
    pub lhs: f64,
    /// `prod_j E[exp(lambda * I_j)]`
    pub rhs: f64,
}

/// Both sides of the moment-generating-function product inequality for the
/// singleton indicators, from exact placement counts.
pub fn enumerate_mgf_sides(
    n_balls: u64,
    n_bins: u64,
    lambda: f64,
    enumerator: &Enumerator,
) -> Result<MgfSides> {
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    let tally = enumerator.tally(n_balls, n_bins, &[])?;
    let growth = lambda.exp_m1();
    let lhs = tally
        .by_singletons
        .iter()
        .enumerate()
        .map(|(k, count)| ratio(count, &tally.total).to_f64() * (lambda * k as f64).exp())
        .sum();
    let rhs = tally
        .per_bin
        .iter()
        .map(|count| 1.0 + ratio(count, &tally.total).to_f64() * growth)
        .product();
    Ok(MgfSides { lhs, rhs })
}

/// Exact distribution of the singleton count: entry `k` is `Pr[I = k]`.
pub fn singleton_count_distribution(
    n_balls: u64,
    n_bins: u64,
    enumerator: &Enumerator,
) -> Result<Vec<ExactProbability>> {
    let tally = enumerator.tally(n_balls, n_bins, &[])?;
    Ok(tally
        .by_singletons
        .iter()
        .map(|c| ratio(c, &tally.total))
        .collect())
}

/// Exact expected singleton count from a tally, as `f64`.
pub fn tally_mean_singletons(tally: &PlacementTally) -> f64 {
    let num: BigUint = tally
        .by_singletons
        .iter()
        .enumerate()
        .map(|(k, c)| c * BigUint::from(k))
        .sum();
    num.to_f64().unwrap_or(f64::NAN) / tally.total.to_f64().unwrap_or(f64::NAN)
}
