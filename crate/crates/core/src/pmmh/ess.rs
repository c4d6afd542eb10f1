//! Batch-means effective sample size.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn batch_layout(n: usize) -> (usize, usize) {
    let b = (n as f64).sqrt().floor() as usize;
    let b = b.max(1);
    (b, n / b)
}

/// `n · var / σ²_bm` with batch size `⌊√n⌋`, clipped to `[1, n]`.
///
/// A constant series has no autocorrelation to estimate and returns `n`.
pub fn ess_univariate(series: &[f64]) -> f64 {
    let n = series.len();
    assert!(n >= 10, "ess needs at least 10 values");
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return nf;
    }
    let (b, a) = batch_layout(n);
    let used = &series[..a * b];
    let grand = used.iter().sum::<f64>() / (a * b) as f64;
    let s: f64 = used
        .chunks(b)
        .map(|c| (c.iter().sum::<f64>() / b as f64 - grand).powi(2))
        .sum();
    let sigma2 = b as f64 * s / (a as f64 - 1.0);
    if !(sigma2 > 0.0) {
        return nf;
    }
    (nf * var / sigma2).clamp(1.0, nf)
}

/// Multivariate ESS `n (|Λ|/|Σ|)^{1/d}` of row-major `n × d` draws.
pub fn ess_multivariate(draws: &[f64], d: usize) -> Result<f64> {
    assert!(d >= 1 && draws.len() % d == 0, "draws must be n x d");
    let n = draws.len() / d;
    if n < d * d || n < 10 {
        return Err(Error::InvalidConfig(format!("multivariate ESS needs n >= max(d^2, 10), got n = {n}")));
    }
    let nf = n as f64;
    let x = DMatrix::from_row_slice(n, d, draws);
    let mean = x.row_mean();
    let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let lambda = centred.transpose() * &centred / (nf - 1.0);
    let (b, a) = batch_layout(n);
    let used = x.rows(0, a * b);
    let grand = used.row_mean();
    let mut sigma = DMatrix::<f64>::zeros(d, d);
    for k in 0..a {
        let bm = used.rows(k * b, b).row_mean() - &grand;
        sigma += bm.transpose() * &bm;
    }
    sigma *= b as f64 / (a as f64 - 1.0);

    // Relative pivot size below which a covariance counts as singular.
    let log_det = |m: &DMatrix<f64>| {
        let c = m.clone().cholesky()?;
        let diag = c.l().diagonal();
        let max = diag.max();
        if !(diag.min() > 1e-10 * max) {
            return None;
        }
        Some(2.0 * diag.map(f64::ln).sum())
    };
    let ld_lambda = match log_det(&lambda) {
        Some(v) if v.is_finite() => v,
        _ => return Err(Error::DegenerateChain),
    };
    let ld_sigma = match log_det(&sigma) {
        Some(v) if v.is_finite() => v,
        _ => return Ok(nf),
    };
    Ok((nf * ((ld_lambda - ld_sigma) / d as f64).exp()).clamp(1.0, nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::std_normal;
    use crate::rng::RngStream;

    fn ar1(rho: f64, n: usize, rng: &mut RngStream) -> Vec<f64> {
        let mut x = 0.0;
        let s = (1.0 - rho * rho).sqrt();
        (0..n)
            .map(|_| {
                x = rho * x + s * std_normal(rng);
                x
            })
            .collect()
    }

    #[test]
    fn iid_normal() {
        let mut rng = RngStream::new(1);
        let x: Vec<f64> = (0..100_000).map(|_| std_normal(&mut rng)).collect();
        let r = ess_univariate(&x) / 1e5;
        assert!((0.9..=1.1).contains(&r), "{r}");
    }

    #[test]
    fn ar1_half() {
        let mut rng = RngStream::new(2);
        let x = ar1(0.5, 100_000, &mut rng);
        let target = 1e5 / 3.0;
        let e = ess_univariate(&x);
        assert!((e - target).abs() < 0.15 * target, "{e}");
    }

    #[test]
    fn constant_series() {
        assert_eq!(ess_univariate(&[2.0; 50]), 50.0);
    }

    #[test]
    fn multivariate_agrees_in_one_dimension() {
        let mut rng = RngStream::new(3);
        let x = ar1(0.3, 20_000, &mut rng);
        let u = ess_univariate(&x);
        let m = ess_multivariate(&x, 1).unwrap();
        assert!((u - m).abs() < 0.01 * u, "{u} vs {m}");
    }

    #[test]
    fn multivariate_iid_and_ar1() {
        let mut rng = RngStream::new(4);
        let n = 100_000;
        let iid: Vec<f64> = (0..2 * n).map(|_| std_normal(&mut rng)).collect();
        let r = ess_multivariate(&iid, 2).unwrap() / n as f64;
        assert!((0.85..=1.15).contains(&r), "{r}");
        let a = ar1(0.5, n, &mut rng);
        let b = ar1(0.5, n, &mut rng);
        let both: Vec<f64> = a.iter().zip(&b).flat_map(|(x, y)| [*x, *y]).collect();
        let e = ess_multivariate(&both, 2).unwrap();
        let target = n as f64 / 3.0;
        assert!((e - target).abs() < 0.2 * target, "{e}");
    }

    #[test]
    fn singular_sample_covariance() {
        let x: Vec<f64> = (0..100).flat_map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(ess_multivariate(&x, 2), Err(Error::DegenerateChain)));
    }
}
