use alab_core::rank_one::{bounded_density_average, spectral_average, Quadrature};
use alab_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Quadrature against a plain Monte Carlo average over Cantor samples.
#[test]
fn cantor_average_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let model = RankOneModel::random(8, &mut rng).unwrap();
    let mu = Measure::cantor(40).unwrap();
    let c = 0.1;
    let i = HalfOpenInterval::new(c, c + 3f64.powi(-3)).unwrap();
    let quad = spectral_average(&model, &mu, &i, &Quadrature::default()).unwrap();
    assert!(quad.value <= 1.0);
    assert!(quad.pass);

    let n = 200_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let w = model.projection_weight(mu.sample(&mut rng), &i);
        sum += w;
        sq += w * w;
    }
    let mean = sum / n as f64;
    let sd = ((sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
    assert!(
        (quad.value - mean).abs() <= 5.0 * sd + 1e-6,
        "quadrature {} vs Monte Carlo {mean} ± {sd}",
        quad.value
    );
}

#[test]
fn lebesgue_average_stays_below_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let quad = Quadrature::default();
    for _ in 0..5 {
        let model = RankOneModel::random(6, &mut rng).unwrap();
        let i = HalfOpenInterval::new(-0.3, 0.4).unwrap();
        let window = model.norm_bound() + 0.4 + 1.0;
        let r = bounded_density_average(&model, &i, window, &quad).unwrap();
        assert!(r.pass, "{} > {}", r.lebesgue_value, r.bound);
        assert!(r.lebesgue_value > 0.0);
    }
}
