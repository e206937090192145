//! Plug-in information measures over binary random variables.
//!
//! All quantities are in bits. Empirical tables are evaluated directly
//! (`0 log 0 = 0`; conditioning cells with zero mass contribute nothing).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Tolerance used when checking that the two chain-rule forms of `mu` agree.
pub const CHAIN_RULE_TOLERANCE: f64 = 1e-9;

fn plogp_sum(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Shannon entropy of a probability vector, in bits.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    if let Some(bad) = dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {bad} is negative or non-finite"
        )));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "entries sum to {total}"
        )));
    }
    Ok(plogp_sum(dist.iter().copied()))
}

/// Binary entropy `H_b(q)` in bits.
pub fn binary_entropy(q: f64) -> f64 {
    plogp_sum([q, 1.0 - q])
}

/// Empirical joint counts of two binary variables `(A, B)`, indexed `a * 2 + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCounts2 {
    counts: [u64; 4],
    total: u64,
}

impl JointCounts2 {
    pub fn new(counts: [u64; 4]) -> Result<Self> {
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(Self { counts, total })
    }

    pub fn from_samples(a: &[u8], b: &[u8]) -> Result<Self> {
        check_len("second variable", a.len(), b.len())?;
        let mut counts = [0u64; 4];
        for (&x, &y) in a.iter().zip(b) {
            counts[usize::from(x & 1) * 2 + usize::from(y & 1)] += 1;
        }
        Self::new(counts)
    }

    pub fn count(&self, a: u8, b: u8) -> u64 {
        self.counts[usize::from(a) * 2 + usize::from(b)]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn prob(&self, a: u8, b: u8) -> f64 {
        self.count(a, b) as f64 / self.total as f64
    }

    fn entropy_joint(&self) -> f64 {
        plogp_sum(self.counts.iter().map(|&c| c as f64 / self.total as f64))
    }

    fn entropy_a(&self) -> f64 {
        plogp_sum((0..2).map(|a| self.prob(a, 0) + self.prob(a, 1)))
    }

    fn entropy_b(&self) -> f64 {
        plogp_sum((0..2).map(|b| self.prob(0, b) + self.prob(1, b)))
    }
}

/// Empirical joint counts of three binary variables `(F, Y, G)`.
///
/// Cells are indexed `f * 4 + y * 2 + g`. `F` is the predictor under study,
/// `Y` the label and `G` the conditioning (explaining) predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCounts3 {
    counts: [u64; 8],
    total: u64,
}

impl JointCounts3 {
    pub fn new(counts: [u64; 8]) -> Result<Self> {
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(Self { counts, total })
    }

    /// Tabulate predictions `f`, labels `y` and explainer predictions `g`.
    pub fn from_samples(f: &[u8], y: &[u8], g: &[u8]) -> Result<Self> {
        check_len("labels", f.len(), y.len())?;
        check_len("explainer predictions", f.len(), g.len())?;
        let mut counts = [0u64; 8];
        for ((&a, &b), &c) in f.iter().zip(y).zip(g) {
            counts[index3(a & 1, b & 1, c & 1)] += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> [u64; 8] {
        self.counts
    }

    pub fn count(&self, f: u8, y: u8, g: u8) -> u64 {
        self.counts[index3(f, y, g)]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn prob(&self, f: u8, y: u8, g: u8) -> f64 {
        self.count(f, y, g) as f64 / self.total as f64
    }

    /// Joint of `(F, Y)` with `G` summed out.
    pub fn marginal_fy(&self) -> JointCounts2 {
        let mut c = [0u64; 4];
        for f in 0..2u8 {
            for y in 0..2u8 {
                c[usize::from(f) * 2 + usize::from(y)] = self.count(f, y, 0) + self.count(f, y, 1);
            }
        }
        JointCounts2 {
            counts: c,
            total: self.total,
        }
    }

    /// Joint of `(G, Y)` with `F` summed out.
    pub fn marginal_gy(&self) -> JointCounts2 {
        let mut c = [0u64; 4];
        for g in 0..2u8 {
            for y in 0..2u8 {
                c[usize::from(g) * 2 + usize::from(y)] = self.count(0, y, g) + self.count(1, y, g);
            }
        }
        JointCounts2 {
            counts: c,
            total: self.total,
        }
    }

    /// The same table with the roles of `F` and `G` exchanged.
    pub fn swap_predictors(&self) -> Self {
        let mut c = [0u64; 8];
        for f in 0..2u8 {
            for y in 0..2u8 {
                for g in 0..2u8 {
                    c[index3(g, y, f)] = self.count(f, y, g);
                }
            }
        }
        Self {
            counts: c,
            total: self.total,
        }
    }
}

fn index3(f: u8, y: u8, g: u8) -> usize {
    usize::from(f) * 4 + usize::from(y) * 2 + usize::from(g)
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

/// `I(A;B) = H(B) - H(B|A)` for a two-variable table.
pub fn mutual_info(joint: &JointCounts2) -> f64 {
    // H(B|A) = H(A,B) - H(A)
    joint.entropy_b() - (joint.entropy_joint() - joint.entropy_a())
}

/// Plug-in `I(F;Y|G)` evaluated as the definitional sum
/// `sum p(f,y,g) log[p(f,y|g) / (p(f|g) p(y|g))]`.
pub fn cond_mutual_info(joint: &JointCounts3) -> f64 {
    let mut acc = 0.0;
    for g in 0..2u8 {
        let n_g: u64 = (0..2u8)
            .flat_map(|f| (0..2u8).map(move |y| (f, y)))
            .map(|(f, y)| joint.count(f, y, g))
            .sum();
        if n_g == 0 {
            continue;
        }
        let n_g = n_g as f64;
        for f in 0..2u8 {
            let n_fg = (joint.count(f, 0, g) + joint.count(f, 1, g)) as f64;
            for y in 0..2u8 {
                let n_fyg = joint.count(f, y, g) as f64;
                if n_fyg == 0.0 {
                    continue;
                }
                let n_yg = (joint.count(0, y, g) + joint.count(1, y, g)) as f64;
                // p(f,y|g) / (p(f|g) p(y|g)) = n_fyg n_g / (n_fg n_yg)
                acc += n_fyg / joint.total as f64 * ((n_fyg * n_g) / (n_fg * n_yg)).log2();
            }
        }
    }
    acc
}

/// All five quantities in the performance-correlation decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoMetrics {
    pub i_fy: f64,
    pub i_fy_given_l: f64,
    pub i_ly: f64,
    pub i_ly_given_f: f64,
    /// `mu_Y(F;L) = I(F;Y) - I(F;Y|L)`. May be negative; never clamped.
    pub mu: f64,
}

/// Performance correlation of `F` and `L` (the table's `G` slot) with respect to `Y`.
///
/// Both forms `I(F;Y) - I(F;Y|L)` and `I(L;Y) - I(L;Y|F)` are evaluated
/// from separate marginalizations; a disagreement beyond
/// [`CHAIN_RULE_TOLERANCE`] is reported as an error.
pub fn performance_correlation(joint: &JointCounts3) -> Result<InfoMetrics> {
    let i_fy = mutual_info(&joint.marginal_fy());
    let i_ly = mutual_info(&joint.marginal_gy());
    let i_fy_given_l = cond_mutual_info(joint);
    let i_ly_given_f = cond_mutual_info(&joint.swap_predictors());
    let mu = i_fy - i_fy_given_l;
    let mu_alt = i_ly - i_ly_given_f;
    if (mu - mu_alt).abs() > CHAIN_RULE_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "chain rule mismatch: {mu} vs {mu_alt}"
        )));
    }
    Ok(InfoMetrics {
        i_fy,
        i_fy_given_l,
        i_ly,
        i_ly_given_f,
        mu,
    })
}

/// `I(F;Y)` for unbiased binary `F`, `Y` with `Pr[F = Y] = acc`.
pub fn accuracy_to_mi(acc: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&acc) {
        return Err(Error::OutOfRange {
            what: "accuracy",
            value: acc,
            min: 0.5,
            max: 1.0,
        });
    }
    Ok(1.0 - binary_entropy(1.0 - acc))
}

/// Inverse of [`accuracy_to_mi`] on `[0, 1]` bits, by bisection.
pub fn mi_to_accuracy(mi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mi) {
        return Err(Error::OutOfRange {
            what: "mutual information",
            value: mi,
            min: 0.0,
            max: 1.0,
        });
    }
    let (mut lo, mut hi) = (0.5_f64, 1.0_f64);
    // Runs to floating-point resolution, well past the 1e-10 requirement.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if 1.0 - binary_entropy(1.0 - mid) < mi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Model-implied `I(L~;Y)` when `L~ = Y` with probability `keep`, otherwise a
/// uniform bit, for labels with `Pr[Y = 1] = q`.
pub fn null_model_information(keep: f64, q: f64) -> f64 {
    let flip = 0.5 * (1.0 - keep);
    let positive = flip + keep * q;
    binary_entropy(positive) - binary_entropy(flip)
}

/// A simulated predictor matched in mutual information to a reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct NullModel {
    /// Probability of copying the label.
    pub keep_prob: f64,
    pub predictions: Vec<u8>,
}

/// Simulate `L~_i = Y_i` with probability `p`, uniform otherwise, with `p`
/// chosen so that the model-implied `I(L~;Y)` equals `target_mi`.
pub fn make_null_model(labels: &[u8], target_mi: f64, seed: u64) -> Result<NullModel> {
    if labels.is_empty() {
        return Err(Error::EmptyTable);
    }
    if !(0.0..=1.0).contains(&target_mi) {
        return Err(Error::OutOfRange {
            what: "target information",
            value: target_mi,
            min: 0.0,
            max: 1.0,
        });
    }
    let q = labels.iter().filter(|&&y| y == 1).count() as f64 / labels.len() as f64;
    let max = binary_entropy(q);
    if target_mi > max + 1e-12 {
        return Err(Error::UnattainableTarget {
            target: target_mi,
            max,
        });
    }
    let keep_prob = if target_mi <= 0.0 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if null_model_information(mid, q) < target_mi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut rng = seeded_rng(seed);
    let predictions = labels
        .iter()
        .map(|&y| {
            let keep = rng.random::<f64>() < keep_prob;
            let coin = u8::from(rng.random::<bool>());
            // y ^ coin is a uniform bit independent of y.
            if keep {
                y
            } else {
                y ^ coin
            }
        })
        .collect();
    Ok(NullModel {
        keep_prob,
        predictions,
    })
}
