use frankenfilter::dataset::ObsMatrix;
use frankenfilter::estimate::{LikelihoodEstimate, StopKind};
use frankenfilter::filters::{frankenfilter_general, frankenfilter_one_step, BernoulliTrials};
use frankenfilter::models::exact_death_likelihood;
use frankenfilter::oracle::{enumerate_bernoulli, Algorithm};
use frankenfilter::pmmh::{pmmh_run, ProposalConfig};
use frankenfilter::tuning::{
    bernstein_tail_bound, relative_second_moment, success_target, vrel_exact_obs, Rounding, SecondMoment,
};
use frankenfilter::{Dataset, FilterConfig, FnEstimator, RngStream, SuccessMeasure};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

fn custom(s: f64, m_minus: usize, m_plus: usize) -> FilterConfig {
    FilterConfig::new(s, m_minus, m_plus, SuccessMeasure::Custom { sup: 1.0 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// k = 0 iff m = m_minus; k = 1 iff the last trial crossed the threshold
    /// after m_minus; k = 2 iff m = m_plus with the threshold unmet.
    #[test]
    fn stop_kind_matches_trial_history(
        seed in any::<u64>(),
        target in 1.5f64..8.0,
        m_minus in 0usize..6,
        extra in 1usize..20,
        p in 0.05f64..0.95,
    ) {
        let m_plus = m_minus + extra;
        let cfg = custom(target, m_minus, m_plus);
        let mut history = Vec::new();
        let mut rng = RngStream::new(seed);
        let out = frankenfilter_one_step(
            |r| {
                let s = if r.uniform() < p { r.uniform() } else { 0.0 };
                history.push(s);
                (s, s)
            },
            &cfg,
            &mut rng,
        );
        prop_assert_eq!(out.m, history.len());
        let total: f64 = history.iter().sum();
        let before_last: f64 = history[..out.m - 1].iter().sum();
        match out.k {
            StopKind::Initial => {
                prop_assert_eq!(out.m, m_minus);
                prop_assert!(total >= target);
            }
            StopKind::Crossed => {
                prop_assert!(out.m > m_minus && out.m <= m_plus);
                prop_assert!(total >= target);
                prop_assert!(out.m - 1 < m_minus || before_last < target);
            }
            StopKind::Exhausted => {
                prop_assert_eq!(out.m, m_plus);
                prop_assert!(total < target);
            }
        }
    }

    /// The enumeration expectation equals p for any rational p on the grid of valid settings.
    #[test]
    fn enumeration_is_unbiased(
        num in 1i64..20,
        s in 2usize..5,
        m_minus in 0usize..3,
        extra in 1usize..6,
        one_step in any::<bool>(),
    ) {
        let p = BigRational::new(num.into(), 20.into());
        let m_plus = s.max(m_minus + 1) + extra;
        let (alg, m_minus) = if one_step { (Algorithm::Alg3, m_minus) } else { (Algorithm::Alg2, 0) };
        let e = enumerate_bernoulli(p.clone(), s, m_minus, m_plus, alg).unwrap();
        prop_assert_eq!(e.total_probability(), BigRational::one());
        prop_assert_eq!(e.expectation - p, BigRational::zero());
    }

    /// Lower bound ≤ exact value ≤ upper bound ≤ 1 + 1/(s-2).
    #[test]
    fn second_moment_bounds_are_ordered(s in 3u64..60, p in 0.001f64..0.999) {
        match relative_second_moment(s, p) {
            SecondMoment::ExactWithBounds { value, lower, upper } => {
                prop_assert!(lower <= value + 1e-12 && value <= upper + 1e-12);
            }
            SecondMoment::Bounds { lower, upper } => {
                prop_assert!(lower <= upper);
                prop_assert!(upper <= 1.0 + 1.0 / (s as f64 - 2.0));
            }
            SecondMoment::Exact(v) => prop_assert!(v >= 1.0),
        }
    }

    /// The Bernstein bound dominates the exact binomial tail whenever κ ≥ 7/4.
    #[test]
    fn bernstein_bound_is_valid(s in 2u64..40, kappa in 1.75f64..12.0, p in 0.02f64..0.9) {
        let m_plus = (kappa * s as f64 / p).ceil() as u64;
        let kappa_eff = m_plus as f64 * p / s as f64;
        let tail = Binomial::new(p, m_plus).unwrap().cdf(s - 1);
        prop_assert!(tail <= bernstein_tail_bound(kappa_eff, s as f64, 1.0).unwrap() + 1e-15);
    }

    #[test]
    fn vrel_is_monotone(s in 3u64..200, t in 1u64..200) {
        prop_assert!(vrel_exact_obs(s + 1, t) < vrel_exact_obs(s, t));
        prop_assert!(vrel_exact_obs(s, t + 1) > vrel_exact_obs(s, t));
    }

    /// The ceiling rule never exceeds the requested relative variance.
    #[test]
    fn ceiling_target_meets_request(t in 1u64..500, v in 0.05f64..20.0) {
        let s = success_target(t, v, Rounding::Ceiling);
        prop_assert!(vrel_exact_obs(s, t) <= v * (1.0 + 1e-9));
    }

    /// Summed over every reachable count, the one-interval death likelihood is 1.
    #[test]
    fn death_likelihood_normalises(x0 in 1i64..60, theta in 0.001f64..0.5) {
        let total: f64 = (0..=x0)
            .map(|x| {
                let d = Dataset::new(vec![1.0], vec![vec![x]], ObsMatrix::identity(1)).unwrap();
                exact_death_likelihood(theta, &d, x0).exp()
            })
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    /// Adding a constant to every log-likelihood leaves the chain unchanged.
    #[test]
    fn chain_is_shift_invariant(seed in any::<u64>(), shift in -500.0f64..500.0) {
        let data = Dataset::new(vec![1.0], vec![vec![0]], ObsMatrix::identity(1)).unwrap();
        let make = |c: f64| {
            FnEstimator::new("noisy", move |t: &[f64], _: &Dataset, r: &mut RngStream| {
                Ok(LikelihoodEstimate::exact(-5.0 * t[0].ln().powi(2) + r.uniform() + c))
            })
        };
        let prop = ProposalConfig::diagonal(&[0.3], 1.0).unwrap();
        let a = pmmh_run(&make(0.0), &data, |_| 0.0, &[1.0], &prop, 200, &RngStream::new(seed)).unwrap();
        let b = pmmh_run(&make(shift), &data, |_| 0.0, &[1.0], &prop, 200, &RngStream::new(seed)).unwrap();
        prop_assert_eq!(&a.accepted, &b.accepted);
        prop_assert_eq!(&a.draws, &b.draws);
        for i in 1..a.len() {
            if !a.accepted[i] {
                prop_assert_eq!(a.log_liks[i].to_bits(), a.log_liks[i - 1].to_bits());
            }
        }
    }

    /// Identical seeds give bit-identical sequential filter output.
    #[test]
    fn filter_is_seed_deterministic(seed in any::<u64>(), p in 0.1f64..0.9) {
        let cfg = FilterConfig::indicator(5.0, 200).unwrap();
        let run = || frankenfilter_general(&mut BernoulliTrials::new(p, 4), &cfg, &mut RngStream::new(seed)).unwrap();
        prop_assert_eq!(run(), run());
    }
}
