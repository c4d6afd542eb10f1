use serde::{Deserialize, Serialize};

/// How the simulation loop for one interval ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum StopKind {
    /// `m = m_minus`: the threshold was met by the initial batch.
    Initial,
    /// The threshold was crossed by the last simulation.
    Crossed,
    /// `m_plus` reached without enough success.
    Exhausted,
}

impl StopKind {
    pub fn code(self) -> u8 {
        match self {
            StopKind::Initial => 0,
            StopKind::Crossed => 1,
            StopKind::Exhausted => 2,
        }
    }
}

impl From<StopKind> for u8 {
    fn from(k: StopKind) -> u8 {
        k.code()
    }
}

impl TryFrom<u8> for StopKind {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(StopKind::Initial),
            1 => Ok(StopKind::Crossed),
            2 => Ok(StopKind::Exhausted),
            _ => Err(format!("stop kind {v} out of range")),
        }
    }
}

/// Diagnostics for one inter-observation interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub log_p_hat: f64,
    pub m: usize,
    pub k: StopKind,
    pub visited: bool,
}

impl IntervalRecord {
    pub fn unvisited() -> Self {
        Self {
            log_p_hat: f64::NAN,
            m: 0,
            k: StopKind::Exhausted,
            visited: false,
        }
    }

    pub fn p_hat(&self) -> f64 {
        self.log_p_hat.exp()
    }
}

/// A likelihood estimate together with its per-interval diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodEstimate {
    pub log_p_hat: f64,
    pub per_interval: Vec<IntervalRecord>,
    pub total_simulations: u64,
}

impl LikelihoodEstimate {
    /// Sums the visited intervals' logs; a zero interval forces `-inf` and
    /// pads the remaining `num_intervals - records.len()` entries as unvisited.
    pub fn from_intervals(mut records: Vec<IntervalRecord>, num_intervals: usize, total_simulations: u64) -> Self {
        let mut log_p_hat = 0.0;
        for r in &records {
            if r.log_p_hat == f64::NEG_INFINITY {
                log_p_hat = f64::NEG_INFINITY;
                break;
            }
            log_p_hat += r.log_p_hat;
        }
        records.resize_with(num_intervals.max(records.len()), IntervalRecord::unvisited);
        Self {
            log_p_hat,
            per_interval: records,
            total_simulations,
        }
    }

    /// Deterministic estimate with no interval diagnostics.
    pub fn exact(log_p: f64) -> Self {
        Self {
            log_p_hat: log_p,
            per_interval: Vec::new(),
            total_simulations: 0,
        }
    }

    pub fn p_hat(&self) -> f64 {
        self.log_p_hat.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.log_p_hat == f64::NEG_INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(lp: f64) -> IntervalRecord {
        IntervalRecord {
            log_p_hat: lp,
            m: 3,
            k: StopKind::Crossed,
            visited: true,
        }
    }

    #[test]
    fn zero_interval_short_circuits() {
        let est = LikelihoodEstimate::from_intervals(vec![rec(-1.0), rec(f64::NEG_INFINITY)], 4, 10);
        assert!(est.is_zero());
        assert_eq!(est.per_interval.len(), 4);
        assert!(!est.per_interval[2].visited && !est.per_interval[3].visited);
    }

    #[test]
    fn log_sum_of_intervals() {
        let est = LikelihoodEstimate::from_intervals(vec![rec(-1.0), rec(-0.5)], 2, 10);
        assert_eq!(est.log_p_hat, -1.5);
    }

    #[test]
    fn stop_kind_round_trips_through_codes() {
        for k in [StopKind::Initial, StopKind::Crossed, StopKind::Exhausted] {
            assert_eq!(StopKind::try_from(k.code()).unwrap(), k);
        }
        assert!(StopKind::try_from(3).is_err());
    }
}
