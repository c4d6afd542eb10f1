use std::sync::Arc;

use frankenfilter::dataset::{read_dataset, write_dataset};
use frankenfilter::dist::ln_binomial_pmf;
use frankenfilter::filters::{FilterEstimator, FilterSpec, Proposal};
use frankenfilter::io::ReplicateSummary;
use frankenfilter::models::{preset, preset_dataset, ModelName};
use frankenfilter::pmmh::{default_gamma, pilot_workflow, pmmh_run, PilotOptions, ProposalConfig};
use frankenfilter::tuning::pilot_interval_probabilities;
use frankenfilter::{Dataset, LikelihoodEstimator, ObsMatrix, RngStream, StopKind};
use statrs::distribution::{Binomial, DiscreteCDF};

fn death_probs(data: &Dataset, theta: f64) -> Vec<f64> {
    let mut prev = 100i64;
    (0..data.len())
        .map(|t| {
            let x = data.observation(t)[0];
            let p = ln_binomial_pmf(x as u64, prev as u64, (-theta).exp()).exp();
            prev = x;
            p
        })
        .collect()
}

#[test]
fn hard_threshold_chain_targets_prior_times_expected_estimate() {
    // PMMH with a nonnegative estimator targets prior × E[P̂]; for the hard
    // threshold filter E[p̂_t] = p_t P(Bin(m+ - 2, p_t) ≥ s - 1).
    let (model, data, _) = preset_dataset("D10", None).unwrap();
    let (s, m_plus) = (5u64, 20u64);
    let mut num = 0.0;
    let mut den = 0.0;
    let grid: Vec<(f64, f64)> = (1..4000)
        .map(|i| {
            let th = i as f64 * 1e-5;
            let lp: f64 = death_probs(&data, th)
                .into_iter()
                .map(|p| p.ln() + (1.0 - Binomial::new(p.min(1.0), m_plus - 2).unwrap().cdf(s - 2)).ln())
                .sum::<f64>()
                + model.prior.ln_density(&[th]);
            (th, lp)
        })
        .collect();
    let max = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    for (th, lp) in &grid {
        let w = (lp - max).exp();
        num += w * th;
        den += w;
    }
    let target_mean = num / den;

    let model = Arc::new(model);
    let est = FilterEstimator::new(
        model.clone(),
        FilterSpec::AliveHard {
            s_target: s as usize,
            m_plus: m_plus as usize,
        },
        Proposal::Forward,
    )
    .unwrap();
    let prop = ProposalConfig::diagonal(&[0.15], default_gamma(1)).unwrap();
    let chain = pmmh_run(&est, &data, |t| model.prior.ln_density(t), &[0.01], &prop, 40_000, &RngStream::new(5)).unwrap();
    let sm = chain.summary(0.1).unwrap();
    let half = 4.0 * sm.sd[0] / sm.ess[0].sqrt();
    assert!((sm.mean[0] - target_mean).abs() < half, "chain {} ± {half} vs {target_mean}", sm.mean[0]);
}

#[test]
fn p30b_transition_probabilities_are_near_reported_scale() {
    let (model, data, _) = preset_dataset("P30b", None).unwrap();
    let p = preset("P30b").unwrap();
    let probs = pilot_interval_probabilities(&model, &p.theta, &data, 150, Proposal::Forward, &mut RngStream::new(2)).unwrap();
    let mean = probs.iter().sum::<f64>() / probs.len() as f64;
    let reported = p.reported_mean_p.unwrap();
    assert!(mean > reported / 2.0 && mean < reported * 2.0, "mean p {mean} vs {reported}");
}

#[test]
fn lv20_has_twenty_bivariate_rows_and_round_trips() {
    let (_, data, meta) = preset_dataset("LV20", None).unwrap();
    assert_eq!(data.len(), 20);
    assert!(data.observations().iter().all(|y| y.len() == 2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lv20.csv");
    write_dataset(&path, &data, &meta).unwrap();
    let (back, back_meta) = read_dataset(&path).unwrap();
    assert_eq!(back, data);
    assert_eq!(back_meta, meta);
}

#[test]
fn alive_filter_spends_about_s_over_p_on_outliers() {
    let (model, data, _) = preset_dataset("D50mod", None).unwrap();
    let probs = death_probs(&data, 0.01);
    let est = FilterEstimator::new(
        Arc::new(model),
        FilterSpec::Alive {
            s_target: 50,
            guard: 1_000_000_000,
        },
        Proposal::Forward,
    )
    .unwrap();
    let root = RngStream::new(3);
    let runs = 4;
    let mut m_sum = [0.0; 2];
    for r in 0..runs {
        let e = est.estimate(&[0.01], &data, &mut root.derive(r)).unwrap();
        for (k, t) in [48usize, 49].into_iter().enumerate() {
            m_sum[k] += e.per_interval[t].m as f64;
        }
    }
    for (k, t) in [48usize, 49].into_iter().enumerate() {
        let expected = 50.0 / probs[t];
        let mean = m_sum[k] / runs as f64;
        assert!(mean > expected / 2.0 && mean < expected * 2.0, "interval {t}: {mean} vs {expected}");
        assert!(expected > 1e5);
    }
}

#[test]
fn bootstrap_with_one_particle_on_impossible_data_is_always_zero() {
    let (model, _, _) = preset_dataset("D10", None).unwrap();
    let data = Dataset::new(vec![1.0, 2.0], vec![vec![90], vec![95]], ObsMatrix::identity(1)).unwrap();
    let est = FilterEstimator::new(Arc::new(model), FilterSpec::Bootstrap { n_particles: 1 }, Proposal::Forward).unwrap();
    let root = RngStream::new(4);
    let ests: Vec<_> = (0..50).map(|r| est.estimate(&[0.01], &data, &mut root.derive(r)).unwrap()).collect();
    assert_eq!(ReplicateSummary::from_estimates(&ests).zero_fraction, 1.0);
}

#[test]
fn frankenfilter_reports_consistent_interval_records() {
    let (model, data, _) = preset_dataset("P10a", None).unwrap();
    let est = FilterEstimator::new(Arc::new(model), FilterSpec::ff(10.0, 50_000), Proposal::Forward).unwrap();
    let e = est.estimate(&preset("P10a").unwrap().theta, &data, &mut RngStream::new(1)).unwrap();
    assert_eq!(e.per_interval.len(), 10);
    let total: usize = e.per_interval.iter().map(|r| r.m).sum();
    assert_eq!(total as u64, e.total_simulations);
    assert!(e.per_interval.iter().all(|r| r.visited && r.k == StopKind::Crossed));
}

#[test]
fn pilot_sizes_the_bootstrap_filter_for_outliers() {
    // The outlying intervals have p ≈ 2e-4, so Var(log P̂) ≈ 1 needs of the order of 1e4 particles.
    let (model, data, _) = preset_dataset("D50mod", None).unwrap();
    let model = Arc::new(model);
    let family = |n: u64| FilterEstimator::new(model.clone(), FilterSpec::Bootstrap { n_particles: n as usize }, Proposal::Forward);
    let opts = PilotOptions {
        knob_lo: 1_000,
        knob_hi: 64_000,
        replicates: 20,
        max_zero_fraction: 0.1,
        knob_ratio_tol: 2.0,
        pilot_iterations: 20,
        ..Default::default()
    };
    let report = pilot_workflow(family, &data, |t| model.prior.ln_density(t), &[vec![0.01]], &opts, &RngStream::new(6)).unwrap();
    assert!((2_000..=64_000).contains(&report.knob), "knob {}", report.knob);
}

#[test]
fn seir_pilot_then_main_run_end_to_end() {
    let (model, data, _) = preset_dataset("SEIR10", None).unwrap();
    assert_eq!(model.name, ModelName::Seir);
    let model = Arc::new(model);
    let family = |m_plus: u64| FilterEstimator::new(model.clone(), FilterSpec::ff(10.0, m_plus as usize), Proposal::Forward);
    let prior = |t: &[f64]| model.prior.ln_density(t);
    let truth = preset("SEIR10").unwrap().theta;
    let samples = vec![truth.clone(), truth.iter().map(|v| v * 1.1).collect()];
    let opts = PilotOptions {
        knob_lo: 50,
        knob_hi: 100_000,
        replicates: 20,
        max_variance: 4.0,
        max_zero_fraction: 0.5,
        knob_ratio_tol: 2.0,
        pilot_iterations: 200,
        ..Default::default()
    };
    let report = pilot_workflow(family, &data, prior, &samples, &opts, &RngStream::new(8)).unwrap();
    assert_eq!(report.per_theta_knobs.len(), 2);
    let proposal = report.proposal().unwrap();
    let main = pmmh_run(&family(report.knob).unwrap(), &data, prior, &report.start, &proposal, 200, &RngStream::new(9)).unwrap();
    assert_eq!(main.len(), 200);
    assert!(report.pilot_secs() > 0.0 && main.elapsed_secs > 0.0);
}
