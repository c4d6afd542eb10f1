use std::fmt;
use std::sync::Arc;

/// Hazard function: writes `h(x, θ)` (length `r`) into the output slice.
pub type HazardFn = dyn Fn(&[i64], &[f64], &mut [f64]) + Send + Sync;

/// A reaction network driving a Markov jump process.
#[derive(Clone)]
pub struct ReactionNetwork {
    num_species: usize,
    num_reactions: usize,
    theta_dim: usize,
    // Column-major: column i (reaction i) occupies [i*d, (i+1)*d).
    stoich: Vec<i64>,
    hazard: Arc<HazardFn>,
}

impl fmt::Debug for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionNetwork")
            .field("num_species", &self.num_species)
            .field("num_reactions", &self.num_reactions)
            .field("theta_dim", &self.theta_dim)
            .field("stoich", &self.stoich_columns())
            .finish()
    }
}

impl ReactionNetwork {
    /// `columns[i]` is the state change of reaction `i`.
    pub fn new<H>(columns: Vec<Vec<i64>>, theta_dim: usize, hazard: H) -> Self
    where
        H: Fn(&[i64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let num_reactions = columns.len();
        let num_species = columns.first().map_or(0, Vec::len);
        assert!(
            columns.iter().all(|c| c.len() == num_species),
            "stoichiometry columns must share one length"
        );
        Self {
            num_species,
            num_reactions,
            theta_dim,
            stoich: columns.concat(),
            hazard: Arc::new(hazard),
        }
    }

    pub fn num_species(&self) -> usize {
        self.num_species
    }

    pub fn num_reactions(&self) -> usize {
        self.num_reactions
    }

    pub fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    /// Entry `S[species, reaction]`.
    #[inline]
    pub fn stoich(&self, species: usize, reaction: usize) -> i64 {
        self.stoich[reaction * self.num_species + species]
    }

    #[inline]
    pub fn column(&self, reaction: usize) -> &[i64] {
        let d = self.num_species;
        &self.stoich[reaction * d..(reaction + 1) * d]
    }

    pub fn stoich_columns(&self) -> Vec<Vec<i64>> {
        (0..self.num_reactions).map(|i| self.column(i).to_vec()).collect()
    }

    /// Hazards clamped component-wise at zero (NaN also maps to zero).
    #[inline]
    pub fn hazards_into(&self, x: &[i64], theta: &[f64], out: &mut [f64]) {
        (self.hazard)(x, theta, out);
        for h in out.iter_mut() {
            if !(*h > 0.0) {
                *h = 0.0;
            }
        }
    }

    pub fn hazards(&self, x: &[i64], theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_reactions];
        self.hazards_into(x, theta, &mut out);
        out
    }

    /// `x += count · S^reaction`.
    #[inline]
    pub fn fire(&self, x: &mut [i64], reaction: usize, count: i64) {
        for (xi, s) in x.iter_mut().zip(self.column(reaction)) {
            *xi += s * count;
        }
    }

    /// `Fᵀ S` as a row-major `d_y × r` matrix.
    pub fn projected_stoich(&self, obs: &crate::dataset::ObsMatrix) -> Vec<f64> {
        let (d_y, r) = (obs.d_y(), self.num_reactions);
        let mut g = vec![0.0; d_y * r];
        for c in 0..d_y {
            for i in 0..r {
                g[c * r + i] = (0..self.num_species)
                    .map(|s| (obs.get(s, c) * self.stoich(s, i)) as f64)
                    .sum();
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hazards_are_clamped() {
        let net = ReactionNetwork::new(vec![vec![-1]], 1, |x, th, h| h[0] = th[0] * x[0] as f64);
        assert_eq!(net.hazards(&[-5], &[1.0]), vec![0.0]);
        assert_eq!(net.hazards(&[5], &[1.0]), vec![5.0]);
        let nan = ReactionNetwork::new(vec![vec![-1]], 0, |_, _, h| h[0] = f64::NAN);
        assert_eq!(nan.hazards(&[1], &[]), vec![0.0]);
    }

    #[test]
    fn fire_applies_column() {
        let net = ReactionNetwork::new(vec![vec![-2, 1], vec![2, -1]], 2, |_, _, _| {});
        let mut x = vec![10, 3];
        net.fire(&mut x, 0, 2);
        assert_eq!(x, vec![6, 5]);
        assert_eq!(net.stoich(1, 1), -1);
    }
}
