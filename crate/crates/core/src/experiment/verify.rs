use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{small_ball_bound, small_ball_probability, sphere_expectations};
use crate::datamodel::sample_sphere;
use crate::numeric::{hash_seed, pairwise_sum};
use crate::Result;

const CHUNK: usize = 1 << 14;

/// Sample mean with its standard error against a closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub closed_form: f64,
}

impl MeanCheck {
    fn from_samples(values: &[f64], closed_form: f64) -> Self {
        let n = values.len() as f64;
        let estimate = pairwise_sum(values) / n;
        let sq: Vec<f64> = values.iter().map(|v| (v - estimate) * (v - estimate)).collect();
        let std_error = (pairwise_sum(&sq) / (n - 1.0) / n).sqrt();
        MeanCheck { estimate, std_error, closed_form }
    }

    /// `|estimate - closed_form|` in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.closed_form).abs() / self.std_error
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmallBallCheck {
    pub delta: f64,
    pub empirical: f64,
    pub bound: f64,
    pub exact: f64,
}

impl SmallBallCheck {
    pub fn bound_holds(&self) -> bool {
        self.empirical <= self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereCheck {
    pub dim: usize,
    pub pairs: usize,
    /// `E |x - y|`.
    pub mean_dist: MeanCheck,
    /// `E [1 / (|x - y| |x + y|)]`.
    pub inv_prod: MeanCheck,
    pub small_ball: Vec<SmallBallCheck>,
}

/// Monte Carlo over `pairs` independent uniform pairs on `S^{d-1}`,
/// compared with the closed forms. Chunks draw from their own seeded
/// generators, so the result is independent of the thread count.
pub fn verify_sphere(dim: usize, pairs: usize, seed: u64, deltas: &[f64]) -> Result<SphereCheck> {
    let closed = sphere_expectations(dim)?;
    let chunks = pairs.div_ceil(CHUNK);
    let per_chunk: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(pairs - c * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(hash_seed(&[seed, dim as u64, c as u64]));
            let x = sample_sphere(dim, len, &mut rng);
            let y = sample_sphere(dim, len, &mut rng);
            x.rows()
                .zip(y.rows())
                .map(|(a, b)| {
                    let minus = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
                    let plus = a.iter().zip(b).map(|(u, v)| (u + v) * (u + v)).sum::<f64>().sqrt();
                    (minus, 1.0 / (minus * plus))
                })
                .unzip()
        })
        .collect();
    let (dist, inv): (Vec<f64>, Vec<f64>) = per_chunk.into_iter().fold((Vec::new(), Vec::new()), |mut acc, (d, i)| {
        acc.0.extend(d);
        acc.1.extend(i);
        acc
    });
    let small_ball = deltas
        .iter()
        .map(|&delta| SmallBallCheck {
            delta,
            empirical: dist.iter().filter(|&&r| r < delta).count() as f64 / pairs as f64,
            bound: small_ball_bound(dim, delta),
            exact: small_ball_probability(dim, delta),
        })
        .collect();
    Ok(SphereCheck {
        dim,
        pairs,
        mean_dist: MeanCheck::from_samples(&dist, closed.mean_dist),
        inv_prod: MeanCheck::from_samples(&inv, closed.inv_prod_mean),
        small_ball,
    })
}
