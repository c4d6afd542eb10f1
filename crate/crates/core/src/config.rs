use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel for "no upper bound on the number of simulations".
pub const UNBOUNDED: usize = usize::MAX;

/// How the success increment `s^j` of a trial is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SuccessMeasure {
    /// `s = 1` iff the trial has nonzero weight (an exact observation match).
    IndicatorMatch,
    /// `s = w`, with `w` bounded by `sup`.
    WeightEqualsSuccess { sup: f64 },
    /// The trial model supplies `s` itself; `sup` is its declared essential supremum.
    Custom { sup: f64 },
}

impl SuccessMeasure {
    pub fn sup(&self) -> f64 {
        match *self {
            SuccessMeasure::IndicatorMatch => 1.0,
            SuccessMeasure::WeightEqualsSuccess { sup } | SuccessMeasure::Custom { sup } => sup,
        }
    }

    /// Success increment for a trial with log-weight `log_w` and model-reported success `custom`.
    #[inline]
    pub fn increment(&self, log_w: f64, custom: f64) -> f64 {
        match self {
            SuccessMeasure::IndicatorMatch => {
                if log_w > f64::NEG_INFINITY {
                    1.0
                } else {
                    0.0
                }
            }
            SuccessMeasure::WeightEqualsSuccess { .. } => log_w.exp(),
            SuccessMeasure::Custom { .. } => custom,
        }
    }
}

/// Success threshold and simulation bounds for a Frankenfilter run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    s_target: f64,
    m_minus: usize,
    m_plus: usize,
    success: SuccessMeasure,
    #[serde(default)]
    per_interval: Option<Vec<f64>>,
}

impl FilterConfig {
    pub fn new(s_target: f64, m_minus: usize, m_plus: usize, success: SuccessMeasure) -> Result<Self> {
        let cfg = Self {
            s_target,
            m_minus,
            m_plus,
            success,
            per_interval: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Indicator-success configuration with `m_minus = 0`, the common case.
    pub fn indicator(s_target: f64, m_plus: usize) -> Result<Self> {
        Self::new(s_target, 0, m_plus, SuccessMeasure::IndicatorMatch)
    }

    /// Replace the constant threshold with one threshold per interval.
    pub fn with_per_interval(mut self, thresholds: Vec<f64>) -> Result<Self> {
        self.per_interval = Some(thresholds);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_minus >= self.m_plus {
            return Err(Error::InvalidConfig(format!(
                "m_minus ({}) must be below m_plus ({})",
                self.m_minus, self.m_plus
            )));
        }
        let sup = self.success.sup();
        if !(sup >= 0.0) {
            return Err(Error::InvalidConfig(format!("success supremum {sup} is not a nonnegative number")));
        }
        let check = |s: f64| -> Result<()> {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidConfig(format!("s_target {s} must be a finite nonnegative number")));
            }
            if self.m_minus == 0 && s <= sup {
                return Err(Error::ThresholdBelowSupremum { s_target: s, sup });
            }
            Ok(())
        };
        check(self.s_target)?;
        if let Some(list) = &self.per_interval {
            list.iter().try_for_each(|&s| check(s))?;
        }
        Ok(())
    }

    pub fn s_target(&self) -> f64 {
        self.s_target
    }

    pub fn m_minus(&self) -> usize {
        self.m_minus
    }

    pub fn m_plus(&self) -> usize {
        self.m_plus
    }

    pub fn success(&self) -> SuccessMeasure {
        self.success
    }

    /// Threshold for the zero-based interval `t`.
    pub fn threshold(&self, t: usize) -> f64 {
        match &self.per_interval {
            Some(list) => list.get(t).copied().unwrap_or(self.s_target),
            None => self.s_target,
        }
    }
}
