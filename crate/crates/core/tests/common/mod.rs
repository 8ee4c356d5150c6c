#![allow(dead_code)]

use qoeshift_core::ingest::Class;
use qoeshift_core::learners::FeatureVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rows whose High probability rises monotonically with SNR (and, more
/// weakly, RSRP), with roughly `high_share` of them High.
pub fn synthetic(n: usize, high_share: f64, seed: u64) -> (Vec<FeatureVector>, Vec<Class>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let snr: f64 = rng.random_range(-5.0..30.0);
        let rsrp = (-118.0 + 1.2 * snr + rng.random_range(-8.0..8.0)).clamp(-150.0, -45.0);
        let rsrq = (-16.0 + 0.2 * snr + rng.random_range(-2.0..2.0)).clamp(-29.0, -1.0);
        // the cut point puts about `high_share` of the SNR range above it
        let cut = 30.0 - 35.0 * high_share;
        let p = 1.0 / (1.0 + (-(snr - cut) / 2.0).exp());
        x.push(FeatureVector::new(rsrp, rsrq, snr));
        y.push(if rng.random::<f64>() < p { Class::High } else { Class::Low });
    }
    (x, y)
}

pub fn accuracy<C: qoeshift_core::learners::Classifier>(m: &C, x: &[FeatureVector], y: &[Class]) -> f64 {
    let hits = x.iter().zip(y).filter(|(v, c)| m.predict(v).unwrap() == **c).count();
    hits as f64 / x.len() as f64
}

/// Uniform random feature vectors inside the ingest sanity bounds.
pub fn random_inputs(n: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            FeatureVector::new(
                rng.random_range(-160.0..-40.0),
                rng.random_range(-30.0..0.0),
                rng.random_range(-20.0..50.0),
            )
        })
        .collect()
}
