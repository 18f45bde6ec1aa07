//! Deterministic quadrature of the single-cbit kernel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{spherical_grid, Sign, UnitVector3, Vec3};

/// Smallest per-sphere node count accepted by [`quadrature_kernel`].
pub const MIN_NODES: usize = 1000;

/// Euler angles for the second sphere's copy of the lattice. Reusing the
/// same nodes for λ̂₂ puts weight on the λ̂₁ = λ̂₂ diagonal and roughly
/// doubles the error.
const SECOND_GRID_ROTATION: [f64; 3] = [0.754_877_666_2, 1.131_9, 0.569_840_291_0];

fn rotate(v: UnitVector3, [a, b, c]: [f64; 3]) -> UnitVector3 {
    let (x, y, z) = (v.x(), v.y(), v.z());
    let (s, k) = a.sin_cos();
    let (x, y) = (k * x - s * y, s * x + k * y);
    let (s, k) = b.sin_cos();
    let (y, z) = (k * y - s * z, s * y + k * z);
    let (s, k) = c.sin_cos();
    let (x, y) = (k * x - s * y, s * x + k * y);
    UnitVector3::normalize(Vec3::new(x, y, z)).expect("rotation preserves norm")
}

/// Product-grid average of `α β` over `(λ̂₁, λ̂₂)` with `n_nodes` Fibonacci
/// nodes per sphere, the second lattice rotated against the first.
/// Converges to `u·v`.
pub fn quadrature_kernel(u: UnitVector3, v: UnitVector3, n_nodes: usize) -> Result<f64> {
    if n_nodes < MIN_NODES {
        return Err(Error::InvalidInput(format!(
            "quadrature needs at least {MIN_NODES} nodes per sphere, got {n_nodes}"
        )));
    }
    let grid = spherical_grid(n_nodes)?;
    let nodes = grid.nodes();
    // β = sgn(v·λ̂₁ + c v·λ̂₂), so both projections of λ̂₂ are reused.
    let proj2: Vec<(Sign, f64)> = nodes
        .iter()
        .map(|&l| rotate(l, SECOND_GRID_ROTATION))
        .map(|l2| (Sign::of(u.dot(l2)), v.dot(l2)))
        .collect();

    let agree: i64 = nodes
        .par_iter()
        .map(|l1| {
            let alpha = Sign::of(u.dot(*l1));
            let v1 = v.dot(*l1);
            proj2
                .iter()
                .map(|&(s2, v2)| {
                    let c = alpha * s2;
                    let beta = Sign::of(v1 + c.value() * v2);
                    (alpha * beta).as_i8() as i64
                })
                .sum::<i64>()
        })
        .sum();
    let n = n_nodes as f64;
    Ok(agree as f64 / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_unit_sphere;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_directions_give_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let u = sample_unit_sphere(&mut rng);
            assert_eq!(quadrature_kernel(u, u, 1000).unwrap(), 1.0);
        }
    }

    #[test]
    fn opposite_directions_give_minus_one() {
        let u = UnitVector3::new(0.6, 0.0, 0.8).unwrap();
        assert_eq!(quadrature_kernel(u, -u, 1000).unwrap(), -1.0);
    }

    #[test]
    fn random_pair_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = sample_unit_sphere(&mut rng);
        let v = sample_unit_sphere(&mut rng);
        let q = quadrature_kernel(u, v, 10_000).unwrap();
        assert!((q - u.dot(v)).abs() <= 2e-3, "{q} vs {}", u.dot(v));
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(quadrature_kernel(UnitVector3::X, UnitVector3::Y, 999).is_err());
    }
}
