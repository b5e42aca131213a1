//! Sampling from a reproduction law.

use rand::Rng;

use crate::params::ReproductionLaw;

/// Inverse-CDF sampler over the finite support of a law.
#[derive(Debug, Clone)]
pub struct OffspringSampler {
    ks: Vec<u32>,
    cdf: Vec<f64>,
}

impl OffspringSampler {
    pub fn new(law: &ReproductionLaw<f64>) -> Self {
        let mut acc = 0.0;
        let mut ks = Vec::new();
        let mut cdf = Vec::new();
        for &(k, q) in law.probs() {
            acc += q;
            ks.push(k);
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Self { ks, cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.ks.len() == 1 {
            return self.ks[0];
        }
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        self.ks[i.min(self.ks.len() - 1)]
    }
}

/// One draw of the offspring count.
pub fn sample_offspring<R: Rng + ?Sized>(law: &ReproductionLaw<f64>, rng: &mut R) -> u32 {
    OffspringSampler::new(law).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn point_masses() {
        let mut rng = stream_rng(1, 0);
        let s = OffspringSampler::new(&ReproductionLaw::binary());
        assert!((0..100).all(|_| s.sample(&mut rng) == 2));
        let s = OffspringSampler::new(&ReproductionLaw::point_mass(3));
        assert!((0..100).all(|_| s.sample(&mut rng) == 3));
    }

    #[test]
    fn critical_mean() {
        let mut rng = stream_rng(2, 0);
        let law = ReproductionLaw::new(vec![(0, 0.5), (2, 0.5)]).unwrap();
        let s = OffspringSampler::new(&law);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng) as f64).collect();
        let (m, se) = crate::stats::mean_se(&xs);
        assert!((m - 1.0).abs() < 3.0 * se);
        assert_eq!(sample_offspring(&ReproductionLaw::binary(), &mut rng), 2);
    }
}
