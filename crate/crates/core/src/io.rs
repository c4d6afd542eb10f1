//! CSV and JSON output contracts shared by the command-line tool and the demo.
//!
//! Chain traces have columns `iter,<param names...>,log_lik,accepted,cost`.
//! Filter replicates have columns
//! `replicate,log_p_hat,total_simulations,m_1..m_T,k_1..k_T`, followed by
//! `# key,value` footer lines holding the [`ReplicateSummary`] fields.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::LikelihoodEstimate;
use crate::pmmh::Chain;

/// Replicate statistics of a likelihood estimator at fixed `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub replicates: usize,
    /// `log` of the sample mean of `P̂`.
    pub log_mean_p_hat: f64,
    /// Sample `Var(P̂) / mean(P̂)²`.
    pub relative_variance: f64,
    pub zero_fraction: f64,
    pub mean_total_simulations: f64,
}

impl ReplicateSummary {
    pub fn from_estimates(estimates: &[LikelihoodEstimate]) -> Self {
        let n = estimates.len();
        let logs: Vec<f64> = estimates.iter().map(|e| e.log_p_hat).collect();
        let zeros = logs.iter().filter(|v| **v == f64::NEG_INFINITY).count();
        let reference = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (log_mean_p_hat, relative_variance) = if reference == f64::NEG_INFINITY || n == 0 {
            (f64::NEG_INFINITY, f64::NAN)
        } else {
            let ratios: Vec<f64> = logs.iter().map(|v| (v - reference).exp()).collect();
            let mean = ratios.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
            } else {
                f64::NAN
            };
            (reference + mean.ln(), var / (mean * mean))
        };
        Self {
            replicates: n,
            log_mean_p_hat,
            relative_variance,
            zero_fraction: if n == 0 { f64::NAN } else { zeros as f64 / n as f64 },
            mean_total_simulations: estimates.iter().map(|e| e.total_simulations as f64).sum::<f64>() / n.max(1) as f64,
        }
    }
}

/// Shortest round-trip text; scientific notation outside `[1e-4, 1e16)`.
fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn write_chain_csv<W: Write>(out: W, chain: &Chain, param_names: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iter".to_string()];
    header.extend(param_names.iter().map(|s| s.to_string()));
    header.extend(["log_lik", "accepted", "cost"].map(String::from));
    w.write_record(&header)?;
    for i in 0..chain.len() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(chain.draw(i).iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(chain.log_liks[i]));
        row.push(u8::from(chain.accepted[i]).to_string());
        row.push(chain.cost[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_replicates_csv<W: Write>(mut out: W, estimates: &[LikelihoodEstimate], num_intervals: usize) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header = vec!["replicate".to_string(), "log_p_hat".into(), "total_simulations".into()];
        header.extend((1..=num_intervals).map(|t| format!("m_{t}")));
        header.extend((1..=num_intervals).map(|t| format!("k_{t}")));
        w.write_record(&header)?;
        for (r, e) in estimates.iter().enumerate() {
            let mut row = vec![r.to_string(), fmt_f64(e.log_p_hat), e.total_simulations.to_string()];
            let rec = |t: usize| e.per_interval.get(t).filter(|r| r.visited);
            row.extend((0..num_intervals).map(|t| rec(t).map_or(String::new(), |r| r.m.to_string())));
            row.extend((0..num_intervals).map(|t| rec(t).map_or(String::new(), |r| r.k.code().to_string())));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let s = ReplicateSummary::from_estimates(estimates);
    writeln!(out, "# mean_p_hat,{}", fmt_f64(s.log_mean_p_hat.exp()))?;
    writeln!(out, "# log_mean_p_hat,{}", fmt_f64(s.log_mean_p_hat))?;
    writeln!(out, "# relative_variance,{}", fmt_f64(s.relative_variance))?;
    writeln!(out, "# zero_fraction,{}", s.zero_fraction)?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
