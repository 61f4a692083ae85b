//! Gauss–Hermite quadrature adapted to standard-normal expectations.
//!
//! Nodes and weights of the physicists' Gauss–Hermite rule (weight e^{−x²})
//! are found by Newton iteration on the orthonormal Hermite recurrence, then
//! rescaled so that Σ w_q f(θ_q) ≈ E[f(θ)] for θ ~ N(0, 1).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Quadrature rule for expectations under the standard normal: weights sum
/// to one and nodes are ascending and symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<S> {
    pub nodes: Vec<S>,
    pub weights: Vec<S>,
}

impl<S: Scalar> Quadrature<S> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ_q w_q f(θ_q).
    pub fn expect(&self, mut f: impl FnMut(S) -> S) -> S {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// 1/π^{1/4}, the seed of the orthonormal Hermite recurrence.
const PI_MINUS_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Build an `n`-node rule for standard-normal expectations.
pub fn gauss_hermite_normal<S: Scalar>(n: usize) -> Result<Quadrature<S>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "quadrature needs at least one node".to_string(),
        ));
    }
    let (x, w) = hermite_nodes::<S>(n);

    // θ = √2·x and w̃ = w/√π turn ∫e^{−x²}f dx into E_{N(0,1)}[f].
    let sqrt2 = S::from_f64_lossy(std::f64::consts::SQRT_2);
    let inv_sqrt_pi = S::one() / S::from_f64_lossy(std::f64::consts::PI).sqrt();
    let mut pairs: Vec<(S, S)> = x
        .into_iter()
        .zip(w)
        .map(|(xi, wi)| (sqrt2 * xi, wi * inv_sqrt_pi))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(Quadrature { nodes, weights })
}

/// Physicists' Gauss–Hermite nodes and weights by Newton iteration, largest
/// root first in the positive half, mirrored to the negative half.
fn hermite_nodes<S: Scalar>(n: usize) -> (Vec<S>, Vec<S>) {
    let tol = S::from_f64_lossy(3e-14).max(S::epsilon() * S::from_f64_lossy(8.0));
    let pim4 = S::from_f64_lossy(PI_MINUS_QUARTER);
    let two = S::from_f64_lossy(2.0);
    let nf = S::from_usize_lossy(n);

    let mut x = vec![S::zero(); n];
    let mut w = vec![S::zero(); n];
    let m = n.div_ceil(2);
    let mut z = S::zero();

    for i in 0..m {
        // Initial guesses per root, refined from the previous roots.
        z = match i {
            0 => {
                let c = S::from_usize_lossy(2 * n + 1);
                c.sqrt() - S::from_f64_lossy(1.85575) * c.powf(S::from_f64_lossy(-1.0 / 6.0))
            }
            1 => z - S::from_f64_lossy(1.14) * nf.powf(S::from_f64_lossy(0.426)) / z,
            2 => S::from_f64_lossy(1.86) * z - S::from_f64_lossy(0.86) * x[0],
            3 => S::from_f64_lossy(1.91) * z - S::from_f64_lossy(0.91) * x[1],
            _ => two * z - x[i - 2],
        };

        let mut pp = S::one();
        for _ in 0..100 {
            // Orthonormal Hermite recurrence up to degree n; p2 trails by one.
            let mut p1 = pim4;
            let mut p2 = S::zero();
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = S::from_usize_lossy(j + 1);
                p1 = z * (two / jf).sqrt() * p2 - (S::from_usize_lossy(j) / jf).sqrt() * p3;
            }
            pp = (two * nf).sqrt() * p2;
            let z_prev = z;
            z = z_prev - p1 / pp;
            if (z - z_prev).abs() <= tol {
                break;
            }
        }

        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = two / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
