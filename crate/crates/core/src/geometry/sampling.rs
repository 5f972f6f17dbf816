use super::{Ball, Manifold, Point, Tangent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic generator for sample `index` of a run seeded with `seed`.
/// Each index gets its own ChaCha stream, so results do not depend on the
/// order (or thread) in which samples are drawn.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform sample from the ball of radius `max_norm` in `T_x M`.
pub fn random_tangent_with<R: Rng + ?Sized>(x: &Point, max_norm: f64, rng: &mut R) -> Tangent {
    let m = x.manifold();
    if max_norm <= 0.0 {
        return Tangent::zero(x);
    }
    let basis = m.tangent_basis(x);
    let d = basis.len();
    let mut coeffs: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if n == 0.0 {
        return Tangent::zero(x);
    }
    let u: f64 = rng.random();
    let r = max_norm * u.powf(1.0 / d as f64);
    coeffs.iter_mut().for_each(|c| *c *= r / n);
    let mut out = vec![0.0; x.coords().len()];
    for (b, c) in basis.iter().zip(&coeffs) {
        out.iter_mut().zip(b.coords()).for_each(|(o, bi)| *o += c * bi);
    }
    m.project_tangent(x, out)
}

pub fn random_tangent(x: &Point, max_norm: f64, seed: u64) -> Tangent {
    random_tangent_with(x, max_norm, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `exp_c(v)` for `v` uniform in the tangent ball of radius `region.radius`,
/// so the result lies in `region`.
pub fn random_point_with<R: Rng + ?Sized>(region: &Ball, rng: &mut R) -> Point {
    assert!(region.radius.is_finite(), "sampling region must have finite radius");
    let m: Manifold = region.center.manifold();
    let v = random_tangent_with(&region.center, region.radius, rng);
    m.exp(&region.center, &v).expect("exp of a tangent at its own base")
}

pub fn random_point(region: &Ball, seed: u64) -> Point {
    random_point_with(region, &mut ChaCha8Rng::seed_from_u64(seed))
}
