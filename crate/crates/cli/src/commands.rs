use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use frankenfilter::dataset::write_dataset;
use frankenfilter::io::{write_chain_csv, write_json, write_replicates_csv, ReplicateSummary};
use frankenfilter::models::{build_model, preset, synthesize_dataset, InitialState, SynthSettings};
use frankenfilter::oracle::{run_verify, VerifyGrid};
use frankenfilter::pmmh::{default_gamma, pmmh_run, Chain, ProposalConfig};
use frankenfilter::tuning::{
    pilot_interval_probabilities, solve_s_partial_obs, PartialVrelOptions, TuningMethod, TuningReport,
};
use frankenfilter::{DatasetMeta, Error, LikelihoodEstimate, LikelihoodEstimator, ObsMatrix, RngStream};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, DatasetSource, ExperimentConfig, Loaded};
use crate::error::CliError;
use crate::{
    DataArgs, FilterCmdArgs, GridArg, IncludeArg, PmmhArgs, SimulateArgs, TuneArgs, TuneMethod, VerifyArgs,
};

pub struct Context {
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// An output directory was named by flag or config.
    pub out_given: bool,
}

impl Context {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn out_file(&self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    /// Dataset named on the command line, else in the config; validated against the config.
    fn dataset(&self, args: &DataArgs) -> Result<(Loaded, Vec<f64>), CliError> {
        let source = match (&args.preset, &args.data) {
            (Some(p), _) => DatasetSource::Preset(p.clone()),
            (None, Some(path)) => DatasetSource::Path(path.clone()),
            (None, None) => self
                .config
                .dataset
                .clone()
                .ok_or_else(|| CliError::Config("no dataset: pass --preset or --data".into()))?,
        };
        let mut loaded = config::load_dataset(&source)?;
        config::validate(&self.config, &loaded.model)?;
        config::apply_prior(&mut loaded.model, &self.config.pmmh.prior);
        let theta = args
            .theta
            .clone()
            .or_else(|| self.config.theta.clone())
            .unwrap_or_else(|| loaded.meta.theta_true.clone());
        check_dim("theta", &theta, loaded.model.theta_dim())?;
        Ok((loaded, theta))
    }
}

fn check_dim(field: &str, v: &[f64], d: usize) -> Result<(), CliError> {
    if v.len() != d {
        return Err(CliError::Config(format!("{field} has length {}; the model expects {d}", v.len())));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?,
    ))
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<(), CliError> {
    let (model, data, meta, stem, p_truth) = if let Some(model_name) = args.model {
        let missing = |f: &str| CliError::Config(format!("explicit settings need --{f}"));
        let theta = args.theta.clone().ok_or_else(|| missing("theta"))?;
        let x0 = args.x0.clone().ok_or_else(|| missing("x0"))?;
        let base = build_model(model_name)?;
        check_dim("theta", &theta, base.theta_dim())?;
        if x0.len() != base.network.num_species() {
            return Err(CliError::Config(format!(
                "x0 has {} species; model `{model_name}` has {}",
                x0.len(),
                base.network.num_species()
            )));
        }
        let obs = match &args.observed {
            Some(idx) if idx.iter().any(|&i| i >= x0.len()) => {
                return Err(CliError::Config("observed species index out of range".into()))
            }
            Some(idx) => ObsMatrix::select(x0.len(), idx),
            None => ObsMatrix::identity(x0.len()),
        };
        let settings = SynthSettings {
            theta: theta.clone(),
            x0: x0.clone(),
            dt: args.dt.ok_or_else(|| missing("dt"))?,
            t_max: args.t_max.ok_or_else(|| missing("t-max"))?,
            obs: obs.clone(),
        };
        let model = base.with_initial(InitialState::Fixed(x0.clone())).with_obs_matrix(obs.clone());
        let seed = ctx.seed();
        let data = synthesize_dataset(&model, &settings, &mut RngStream::new(seed))?;
        let meta = DatasetMeta {
            model: model_name.to_string(),
            theta_true: theta,
            x0,
            obs_matrix: obs.rows(),
            seed,
        };
        (model, data, meta, model_name.to_string(), None)
    } else {
        let name = args
            .preset
            .clone()
            .or_else(|| match &ctx.config.dataset {
                Some(DatasetSource::Preset(p)) => Some(p.clone()),
                _ => None,
            })
            .ok_or_else(|| CliError::Config("pass --preset or explicit --model settings".into()))?;
        let (model, data, meta) = frankenfilter::models::preset_dataset(&name, ctx.seed)?;
        let reported = preset(&name)?.reported_mean_p;
        (model, data, meta, name, reported)
    };
    let stem = args.name.clone().unwrap_or(stem);
    let csv_path = ctx.out_file(&format!("{stem}.csv"))?;
    write_dataset(&csv_path, &data, &meta)?;
    println!("wrote {} ({} observations)", csv_path.display(), data.len());

    if args.estimate_pt {
        let mut rng = RngStream::new(meta.seed).derive(1);
        let probs = pilot_interval_probabilities(
            &model,
            &meta.theta_true,
            &data,
            args.pilot_s,
            Default::default(),
            &mut rng,
        )?;
        println!("interval,p_hat");
        for (t, p) in probs.iter().enumerate() {
            println!("{},{p}", t + 1);
        }
        let mean = probs.iter().sum::<f64>() / probs.len() as f64;
        println!("# mean_p_hat,{mean}");
        if let Some(r) = p_truth {
            println!("# reported_mean_p,{r}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FilterReport {
    dataset: String,
    estimator: String,
    theta: Vec<f64>,
    seed: u64,
    #[serde(flatten)]
    summary: ReplicateSummary,
    cpu_seconds: f64,
}

/// `n` estimates at `theta`; estimate `r` uses stream `root/r`, output in replicate order.
fn replicate(
    est: &dyn LikelihoodEstimator,
    theta: &[f64],
    data: &frankenfilter::Dataset,
    n: usize,
    root: &RngStream,
) -> Result<Vec<LikelihoodEstimate>, CliError> {
    (0..n)
        .into_par_iter()
        .map(|r| est.estimate(theta, data, &mut root.derive(r as u32)))
        .collect::<Result<Vec<_>, Error>>()
        .map_err(CliError::from)
}

pub fn filter(ctx: &Context, args: &FilterCmdArgs) -> Result<(), CliError> {
    let (loaded, theta) = ctx.dataset(&args.data)?;
    let section = args.filter.merge(&ctx.config.filter);
    let est = config::build_estimator(Arc::new(loaded.model), &loaded.meta, &section)?;
    if args.replicates == 0 {
        return Err(CliError::Config("replicates must be positive".into()));
    }
    let seed = ctx.seed();
    let start = Instant::now();
    let estimates = replicate(est.as_ref(), &theta, &loaded.data, args.replicates, &RngStream::new(seed))?;
    let cpu_seconds = start.elapsed().as_secs_f64();

    let csv_path = ctx.out_file("replicates.csv")?;
    let mut w = create(&csv_path)?;
    write_replicates_csv(&mut w, &estimates, loaded.data.len())?;
    w.flush()?;
    let report = FilterReport {
        dataset: loaded.label,
        estimator: est.label(),
        theta,
        seed,
        summary: ReplicateSummary::from_estimates(&estimates),
        cpu_seconds,
    };
    write_json(create(&ctx.out_file("filter_summary.json")?)?, &report)?;
    write_json(std::io::stdout().lock(), &report)?;
    Ok(())
}

pub fn tune(ctx: &Context, args: &TuneArgs) -> Result<(), CliError> {
    let (loaded, theta) = ctx.dataset(&args.data)?;
    let method = args.method.unwrap_or(if loaded.data.is_complete() {
        TuneMethod::ExactObs
    } else {
        TuneMethod::PartialObs
    });
    let proposal = args
        .proposal
        .map(Into::into)
        .or(ctx.config.filter.proposal)
        .unwrap_or_default();
    let root = RngStream::new(ctx.seed());
    let p_hat =
        pilot_interval_probabilities(&loaded.model, &theta, &loaded.data, args.pilot_s, proposal, &mut root.derive(0))?;
    let report = match method {
        TuneMethod::ExactObs => TuningReport::exact_obs(p_hat, args.v_rel, args.kappa, args.rounding.into())?,
        TuneMethod::PartialObs => {
            let s = solve_s_partial_obs(
                &loaded.model,
                &theta,
                &loaded.data,
                args.v_rel,
                args.s_lo,
                args.s_hi,
                args.vrel_replicates,
                args.smoothing,
                PartialVrelOptions {
                    m_plus: args.vrel_m_plus,
                    proposal,
                },
                &root.derive(1),
            )?;
            TuningReport::from_s(s, p_hat, args.v_rel, args.kappa, TuningMethod::PartialObs)?
        }
    };
    write_json(create(&ctx.out_file("tuning.json")?)?, &report)?;
    write_json(std::io::stdout().lock(), &report)?;
    Ok(())
}

#[derive(Serialize)]
struct PmmhReport {
    dataset: String,
    estimator: String,
    parameters: Vec<String>,
    seed: u64,
    iterations: usize,
    burn_in: usize,
    posterior_mean: Vec<f64>,
    posterior_sd: Vec<f64>,
    theta_true: Vec<f64>,
    /// Posterior mean over the generating value, per parameter.
    mean_over_truth: Vec<f64>,
    sd_over_truth: Vec<f64>,
    ess: Vec<f64>,
    multivariate_ess: f64,
    acceptance_rate: f64,
    /// Time spent inside the sampler, excluding input and output.
    cpu_seconds: f64,
    /// Multivariate ESS per second.
    ess_per_sec: f64,
    ess_per_sec_by_parameter: Vec<f64>,
    mean_cost: f64,
    pilot_cpu_seconds: f64,
    gamma: f64,
    proposal_covariance: Vec<f64>,
}

/// Log-scale sample covariance of the draws after `burn_in`; `None` if it is singular.
fn log_draw_covariance(chain: &Chain, burn_in: f64) -> Option<Vec<f64>> {
    let d = chain.dim;
    let start = ((chain.len() as f64) * burn_in).floor() as usize;
    let rows: Vec<Vec<f64>> = (start..chain.len())
        .map(|i| chain.draw(i).iter().map(|v| v.ln()).collect())
        .collect();
    let n = rows.len() as f64;
    if n < 3.0 {
        return None;
    }
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut cov = vec![0.0; d * d];
    for r in &rows {
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += (r[a] - mean[a]) * (r[b] - mean[b]) / (n - 1.0);
            }
        }
    }
    ProposalConfig::new(cov.clone(), d, 1.0).ok().map(|_| cov)
}

pub fn pmmh(ctx: &Context, args: &PmmhArgs) -> Result<(), CliError> {
    let (loaded, _) = ctx.dataset(&args.data)?;
    let pm = &ctx.config.pmmh;
    let d = loaded.model.theta_dim();
    let theta0 = args
        .theta0
        .clone()
        .or_else(|| pm.theta0.clone())
        .unwrap_or_else(|| loaded.meta.theta_true.clone());
    check_dim("theta0", &theta0, d)?;
    let iterations = args.iterations.or(pm.iterations).unwrap_or(10_000);
    let burn_in = args.burn_in.or(pm.burn_in).unwrap_or(0.1);
    let gamma = args.gamma.or(pm.gamma).unwrap_or_else(|| default_gamma(d));
    let pilot_iterations = args.pilot_iterations.or(pm.pilot_iterations).unwrap_or(0);
    let section = args.filter.merge(&ctx.config.filter);
    let model = Arc::new(loaded.model);
    let est = config::build_estimator(model.clone(), &loaded.meta, &section)?;
    let prior = |t: &[f64]| model.prior.ln_density(t);
    let seed = ctx.seed();
    let root = RngStream::new(seed);

    let dead_check = replicate(est.as_ref(), &theta0, &loaded.data, 10, &root.derive(2))?;
    if dead_check.iter().all(|e| e.log_p_hat == f64::NEG_INFINITY) {
        return Err(Error::EstimatorDead { theta: theta0 }.into());
    }

    let mut cov = match (&args.proposal_sd, &pm.proposal_cov, &pm.proposal_sd) {
        (Some(sd), _, _) | (None, None, Some(sd)) => {
            check_dim("proposal_sd", sd, d)?;
            ProposalConfig::diagonal(&sd.iter().map(|s| s * s).collect::<Vec<_>>(), 1.0)?
                .covariance()
                .to_vec()
        }
        (None, Some(c), _) => c.clone(),
        (None, None, None) => ProposalConfig::diagonal(&vec![0.01; d], 1.0)?.covariance().to_vec(),
    };
    let mut start = theta0;
    let mut pilot_cpu_seconds = 0.0;
    if pilot_iterations > 0 {
        let pilot = pmmh_run(
            est.as_ref(),
            &loaded.data,
            prior,
            &start,
            &ProposalConfig::new(cov.clone(), d, gamma)?,
            pilot_iterations,
            &root.derive(3),
        )?;
        pilot_cpu_seconds = pilot.elapsed_secs;
        if let Some(c) = log_draw_covariance(&pilot, burn_in) {
            cov = c;
        }
        let s = pilot.summary(burn_in)?;
        start = if prior(&s.mean).is_finite() {
            s.mean
        } else {
            pilot.draw(pilot.len() - 1).to_vec()
        };
    }
    let proposal = ProposalConfig::new(cov, d, gamma)?;
    let chain = pmmh_run(est.as_ref(), &loaded.data, prior, &start, &proposal, iterations, &root)?;
    let summary = chain.summary(burn_in)?;

    let names: Vec<&str> = model.param_names.clone();
    let mut w = create(&ctx.out_file("chain.csv")?)?;
    write_chain_csv(&mut w, &chain, &names)?;
    w.flush()?;
    let truth = loaded.meta.theta_true.clone();
    let secs = summary.elapsed_secs.max(1e-9);
    let report = PmmhReport {
        dataset: loaded.label,
        estimator: est.label(),
        parameters: names.iter().map(|s| s.to_string()).collect(),
        seed,
        iterations: summary.iterations,
        burn_in: summary.burn_in,
        mean_over_truth: summary.mean.iter().zip(&truth).map(|(m, t)| m / t).collect(),
        sd_over_truth: summary.sd.iter().zip(&truth).map(|(s, t)| s / t).collect(),
        posterior_mean: summary.mean.clone(),
        posterior_sd: summary.sd.clone(),
        theta_true: truth,
        ess_per_sec_by_parameter: summary.ess.iter().map(|e| e / secs).collect(),
        ess: summary.ess.clone(),
        multivariate_ess: summary.multivariate_ess,
        acceptance_rate: summary.acceptance_rate,
        cpu_seconds: summary.elapsed_secs,
        ess_per_sec: summary.ess_per_sec,
        mean_cost: summary.mean_cost,
        pilot_cpu_seconds,
        gamma,
        proposal_covariance: proposal.covariance().to_vec(),
    };
    write_json(create(&ctx.out_file("summary.json")?)?, &report)?;
    write_json(std::io::stdout().lock(), &report)?;
    Ok(())
}

pub fn verify(ctx: &Context, args: &VerifyArgs) -> Result<(), CliError> {
    let mut grid = match args.grid {
        GridArg::Default => VerifyGrid::default_grid(),
        GridArg::Empty => VerifyGrid::empty(),
    };
    if args.include.contains(&IncludeArg::Alg1) {
        grid = grid.with_alg1();
    }
    let report = run_verify(&grid);
    let mut suites: Vec<&str> = report.checks.iter().map(|c| c.suite.as_str()).collect();
    suites.dedup();
    for suite in suites {
        let in_suite = report.checks.iter().filter(|c| c.suite == suite);
        let (mut pass, mut expected, mut bad) = (0, 0, 0);
        for c in in_suite {
            match (c.passed, c.expected_failure) {
                (true, _) => pass += 1,
                (false, true) => expected += 1,
                (false, false) => bad += 1,
            }
        }
        println!("{suite}: {pass} passed, {expected} expected failures, {bad} failures");
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        let tag = if c.expected_failure { "XFAIL" } else { "FAIL" };
        println!("{tag} {} {}: {}", c.suite, c.case, c.detail);
    }
    println!(
        "total {}: {} passed, {} expected failures, {} failures",
        report.total, report.passed, report.expected_failures, report.unexpected_failures
    );
    if ctx.out_given {
        write_json(create(&ctx.out_file("verify.json")?)?, &report)?;
    }
    if report.ok() {
        Ok(())
    } else {
        Err(CliError::Verify(format!("{} unexpected failures", report.unexpected_failures)))
    }
}
