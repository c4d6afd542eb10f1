//! Exhaustive enumeration of single-target stopping rules on Bernoulli trials.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};
use crate::estimate::StopKind;

/// Largest `m_plus` accepted by the enumerator.
pub const MAX_ENUMERATION_DEPTH: usize = 24;

/// Single-interval stopping rule to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Alive filter with a hard threshold.
    Alg1,
    /// Basic binary-weight Frankenfilter.
    Alg2,
    /// One-step Frankenfilter with indicator weights and successes.
    Alg3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf<T> {
    pub probability: T,
    pub estimate: T,
    pub m: usize,
    pub k: StopKind,
}

/// Exact law of the estimator as a list of outcome sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration<T> {
    pub expectation: T,
    pub second_moment: T,
    pub leaves: Vec<Leaf<T>>,
}

impl<T: Num + Clone> Enumeration<T> {
    pub fn total_probability(&self) -> T {
        self.leaves.iter().fold(T::zero(), |acc, l| acc + l.probability.clone())
    }
}

struct Walk<'a, T> {
    p: &'a T,
    q: T,
    s_target: usize,
    m_minus: usize,
    m_plus: usize,
    alg: Algorithm,
    leaves: Vec<Leaf<T>>,
}

fn ratio<T: Num + FromPrimitive>(a: usize, b: usize) -> T {
    T::from_usize(a).expect("small integer") / T::from_usize(b).expect("small integer")
}

impl<T: Num + Clone + FromPrimitive> Walk<'_, T> {
    fn leaf(&mut self, prob: T, estimate: T, m: usize, k: StopKind) {
        self.leaves.push(Leaf {
            probability: prob,
            estimate,
            m,
            k,
        });
    }

    /// `m` trials done with `hits` successes; the last trial succeeded iff `last`.
    fn visit(&mut self, m: usize, hits: usize, last: bool, prob: T) {
        let s = self.s_target;
        let stop = match self.alg {
            Algorithm::Alg1 | Algorithm::Alg2 => m >= self.m_plus || hits >= s,
            Algorithm::Alg3 => m >= self.m_minus && (m >= self.m_plus || hits >= s),
        };
        if stop {
            match self.alg {
                Algorithm::Alg1 => {
                    if m == self.m_plus {
                        self.leaf(prob, T::zero(), m, StopKind::Exhausted);
                    } else {
                        self.leaf(prob, ratio(s - 1, m - 1), m, StopKind::Crossed);
                    }
                }
                Algorithm::Alg2 => {
                    if hits < s {
                        self.leaf(prob, ratio(hits, m), m, StopKind::Exhausted);
                    } else {
                        self.leaf(prob, ratio(hits - last as usize, m - 1), m, StopKind::Crossed);
                    }
                }
                Algorithm::Alg3 => {
                    if m == self.m_minus {
                        self.leaf(prob, ratio(hits, m), m, StopKind::Initial);
                    } else if hits < s {
                        self.leaf(prob, ratio(hits, m), m, StopKind::Exhausted);
                    } else {
                        self.leaf(prob, ratio(hits - last as usize, m - 1), m, StopKind::Crossed);
                    }
                }
            }
            return;
        }
        if !self.p.is_zero() {
            let next = prob.clone() * self.p.clone();
            self.visit(m + 1, hits + 1, true, next);
        }
        if !self.q.is_zero() {
            let next = prob * self.q.clone();
            self.visit(m + 1, hits, false, next);
        }
    }
}

/// Walks every outcome sequence of the named stopping rule in the arithmetic of `T`.
pub fn enumerate_bernoulli<T: Num + Clone + FromPrimitive>(
    p: T,
    s_target: usize,
    m_minus: usize,
    m_plus: usize,
    alg: Algorithm,
) -> Result<Enumeration<T>> {
    if m_plus > MAX_ENUMERATION_DEPTH {
        return Err(Error::InvalidConfig(format!(
            "enumeration depth m_plus = {m_plus} exceeds {MAX_ENUMERATION_DEPTH}"
        )));
    }
    if s_target < 2 || m_plus < s_target || m_minus >= m_plus {
        return Err(Error::InvalidConfig(format!(
            "need 2 <= s_target ({s_target}) <= m_plus ({m_plus}) and m_minus ({m_minus}) < m_plus"
        )));
    }
    if alg != Algorithm::Alg3 && m_minus != 0 {
        return Err(Error::InvalidConfig("only the one-step rule takes m_minus".into()));
    }
    let q = T::one() - p.clone();
    let mut walk = Walk {
        p: &p,
        q,
        s_target,
        m_minus,
        m_plus,
        alg,
        leaves: Vec::new(),
    };
    walk.visit(0, 0, false, T::one());
    let mut expectation = T::zero();
    let mut second_moment = T::zero();
    for l in &walk.leaves {
        expectation = expectation + l.probability.clone() * l.estimate.clone();
        second_moment = second_moment + l.probability.clone() * l.estimate.clone() * l.estimate.clone();
    }
    Ok(Enumeration {
        expectation,
        second_moment,
        leaves: walk.leaves,
    })
}

/// Exact rational enumeration; `p` is taken as the exact value of the float.
pub fn enumerate_bernoulli_estimator(
    p: f64,
    s_target: usize,
    m_minus: usize,
    m_plus: usize,
    alg: Algorithm,
) -> Result<Enumeration<BigRational>> {
    let pr = BigRational::from_float(p).ok_or_else(|| Error::InvalidConfig(format!("p = {p} is not finite")))?;
    if pr < BigRational::from_integer(BigInt::from(0)) || pr > BigRational::from_integer(BigInt::from(1)) {
        return Err(Error::InvalidConfig(format!("p = {p} is not a probability")));
    }
    enumerate_bernoulli(pr, s_target, m_minus, m_plus, alg)
}
