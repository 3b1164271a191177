//! Hyperplane geometry for property transfer.
//!
//! A linear classifier over embeddings `z ∈ ℝⁿ` has decision boundary
//! `H = {z : w·z + b = 0}`. Transfer moves an embedding perpendicular to `H`
//! and past it: with `z⊥` the projection of `z` onto `H`,
//!
//! ```text
//! z' = z⊥ + λ(z⊥ − z),    λ ≥ 0
//! ```
//!
//! so `λ` is the distance of `z'` behind the plane relative to the starting
//! distance `‖z⊥ − z‖`. `λ = 1` mirrors `z` across `H`; `λ = 0` lands on it.

use thiserror::Error;

use crate::linalg::dot;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("embedding must have at least one coordinate")]
    Empty,
    #[error("embedding contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: hyperplane has {expected}, embedding has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("hyperplane normal must have nonzero norm")]
    ZeroNormal,
    #[error("transfer shift λ must be ≥ 0, got {0}")]
    NegativeLambda(f64),
    #[error("lambda grid must be nonempty")]
    EmptyGrid,
    #[error("lambda grid must be strictly ascending and ≥ 0 (position {0})")]
    BadGrid(usize),
}

/// Dense latent vector; entries are checked finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    values: Vec<T>,
}

impl<T: Real> Embedding<T> {
    pub fn new(values: Vec<T>) -> Result<Self, GeometryError> {
        if values.is_empty() {
            return Err(GeometryError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        Ok(Self { values })
    }

    /// Internal constructor for values already known finite.
    pub(crate) fn from_parts(values: Vec<T>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Affine hyperplane `w·z + b = 0` with normal `w` and offset `b`.
///
/// `(w, b)` is kept exactly as given: no internal normalization. All
/// operations are invariant under `(w, b) → (cw, cb)` for `c > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane<T> {
    normal: Vec<T>,
    offset: T,
}

impl<T: Real> Hyperplane<T> {
    pub fn new(normal: Vec<T>, offset: T) -> Result<Self, GeometryError> {
        if normal.is_empty() {
            return Err(GeometryError::Empty);
        }
        if let Some(i) = normal.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        if !offset.is_finite() {
            return Err(GeometryError::NonFinite(normal.len()));
        }
        if normal.iter().all(|&v| v == T::zero()) {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(Self { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[T] {
        &self.normal
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    fn check_dim(&self, z: &Embedding<T>) -> Result<(), GeometryError> {
        if z.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: z.dim(),
            });
        }
        Ok(())
    }

    /// Raw activation `w·z + b` (not distance-scaled).
    pub fn activation(&self, z: &Embedding<T>) -> Result<T, GeometryError> {
        self.check_dim(z)?;
        Ok(dot(&self.normal, z.values()) + self.offset)
    }
}

/// Candidate λ values for the transfer shift, strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferConfig<T> {
    lambda_grid: Vec<T>,
}

impl<T: Real> TransferConfig<T> {
    pub fn new(lambda_grid: Vec<T>) -> Result<Self, GeometryError> {
        if lambda_grid.is_empty() {
            return Err(GeometryError::EmptyGrid);
        }
        for (i, &v) in lambda_grid.iter().enumerate() {
            if !v.is_finite() || v < T::zero() {
                return Err(GeometryError::BadGrid(i));
            }
            if i > 0 && v <= lambda_grid[i - 1] {
                return Err(GeometryError::BadGrid(i));
            }
        }
        Ok(Self { lambda_grid })
    }

    pub fn lambda_grid(&self) -> &[T] {
        &self.lambda_grid
    }
}

impl<T: Real> Default for TransferConfig<T> {
    /// The grid {1, 1.5, 2, …, 7}.
    fn default() -> Self {
        let grid = (0..13)
            .map(|i| T::from_f64_lossy(1.0 + 0.5 * i as f64))
            .collect();
        Self::new(grid).expect("default grid is valid")
    }
}

/// Signed Euclidean distance from `z` to the plane: `(w·z + b) / ‖w‖`.
/// Positive exactly when `w·z + b > 0`.
pub fn signed_margin<T: Real>(h: &Hyperplane<T>, z: &Embedding<T>) -> Result<T, GeometryError> {
    let act = h.activation(z)?;
    Ok(act / crate::linalg::norm(h.normal()))
}

/// Perpendicular projection of `z` onto the plane:
/// `z⊥ = z + βw` with `β = −(z·w + b)/‖w‖²`.
pub fn project<T: Real>(
    h: &Hyperplane<T>,
    z: &Embedding<T>,
) -> Result<Embedding<T>, GeometryError> {
    let act = h.activation(z)?;
    let beta = -act / dot(h.normal(), h.normal());
    let values = z
        .values()
        .iter()
        .zip(h.normal())
        .map(|(&zi, &wi)| zi + beta * wi)
        .collect();
    Ok(Embedding::from_parts(values))
}

/// Shifts `z` perpendicular to the plane and `λ` times its original distance
/// beyond it: `z' = z⊥ + λ(z⊥ − z)`, so `margin(z') = −λ·margin(z)`.
///
/// An embedding already on the plane is its own projection; the shift vector
/// is zero and `z` comes back unchanged for any `λ`.
pub fn transfer<T: Real>(
    h: &Hyperplane<T>,
    z: &Embedding<T>,
    lambda: T,
) -> Result<Embedding<T>, GeometryError> {
    if !lambda.is_finite() || lambda < T::zero() {
        return Err(GeometryError::NegativeLambda(lambda.as_f64()));
    }
    let act = h.activation(z)?;
    // z' = z + (1+λ)β w, folding the projection and the overshoot into one
    // scaled step along w.
    let beta = -act / dot(h.normal(), h.normal());
    let step = (T::one() + lambda) * beta;
    let values = z
        .values()
        .iter()
        .zip(h.normal())
        .map(|(&zi, &wi)| zi + step * wi)
        .collect();
    Ok(Embedding::from_parts(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(v: &[f64]) -> Embedding<f64> {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn plane(w: &[f64], b: f64) -> Hyperplane<f64> {
        Hyperplane::new(w.to_vec(), b).unwrap()
    }

    #[test]
    fn signed_margin_hand_case() {
        // (3 + 4 + 1) / 5
        let h = plane(&[3.0, 4.0], 1.0);
        assert!((signed_margin(&h, &emb(&[1.0, 1.0])).unwrap() - 1.6).abs() < 1e-15);
    }

    #[test]
    fn signed_margin_on_plane_is_zero() {
        let h = plane(&[3.0, 4.0], 1.0);
        // w·z + b = 0 at z = (1, -1)
        assert_eq!(signed_margin(&h, &emb(&[1.0, -1.0])).unwrap(), 0.0);
    }

    #[test]
    fn signed_margin_axis_aligned() {
        let h = plane(&[1.0, 0.0], 0.0);
        assert_eq!(signed_margin(&h, &emb(&[-2.0, 7.0])).unwrap(), -2.0);
    }

    #[test]
    fn project_axis_aligned() {
        let h = plane(&[1.0, 0.0], 0.0);
        assert_eq!(project(&h, &emb(&[2.0, 3.0])).unwrap(), emb(&[0.0, 3.0]));
    }

    #[test]
    fn project_lands_on_plane() {
        // β = -1.5 here
        let h = plane(&[0.0, 2.0], -2.0);
        let p = project(&h, &emb(&[5.0, 4.0])).unwrap();
        assert_eq!(p, emb(&[5.0, 1.0]));
        assert!(h.activation(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn project_is_idempotent_for_plane_points() {
        let h = plane(&[0.0, 2.0], -2.0);
        let on_plane = emb(&[9.0, 1.0]);
        assert_eq!(project(&h, &on_plane).unwrap(), on_plane);
    }

    #[test]
    fn transfer_mirror_at_lambda_one() {
        let h = plane(&[1.0, 0.0], 0.0);
        assert_eq!(
            transfer(&h, &emb(&[2.0, 3.0]), 1.0).unwrap(),
            emb(&[-2.0, 3.0])
        );
    }

    #[test]
    fn transfer_at_zero_collapses_to_projection() {
        let h = plane(&[2.0, -1.0], 0.5);
        let z = emb(&[1.0, 4.0]);
        assert_eq!(transfer(&h, &z, 0.0).unwrap(), project(&h, &z).unwrap());
    }

    #[test]
    fn transfer_negates_and_scales_margin() {
        let h = plane(&[0.0, 2.0], -2.0);
        let z = emb(&[5.0, 4.0]);
        let out = transfer(&h, &z, 2.0).unwrap();
        assert_eq!(out, emb(&[5.0, -5.0]));
        let before = signed_margin(&h, &z).unwrap();
        let after = signed_margin(&h, &out).unwrap();
        assert!((before - 3.0).abs() < 1e-15);
        assert!((after + 6.0).abs() < 1e-15);
    }

    #[test]
    fn transfer_leaves_plane_points_alone() {
        let h = plane(&[0.0, 2.0], -2.0);
        let z = emb(&[7.0, 1.0]);
        assert_eq!(transfer(&h, &z, 3.5).unwrap(), z);
    }

    #[test]
    fn rejects_negative_lambda() {
        let h = plane(&[1.0], 0.0);
        assert_eq!(
            transfer(&h, &emb(&[1.0]), -0.5),
            Err(GeometryError::NegativeLambda(-0.5))
        );
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let h = plane(&[1.0, 0.0], 0.0);
        assert_eq!(
            signed_margin(&h, &emb(&[1.0])),
            Err(GeometryError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn rejects_zero_normal_and_bad_values() {
        assert_eq!(
            Hyperplane::new(vec![0.0, 0.0], 1.0),
            Err(GeometryError::ZeroNormal)
        );
        assert_eq!(
            Embedding::new(vec![1.0, f64::NAN]),
            Err(GeometryError::NonFinite(1))
        );
        assert_eq!(Embedding::<f64>::new(vec![]), Err(GeometryError::Empty));
    }

    #[test]
    fn grid_validation() {
        assert!(TransferConfig::new(vec![1.0, 1.5, 2.0]).is_ok());
        assert_eq!(
            TransferConfig::<f64>::new(vec![]),
            Err(GeometryError::EmptyGrid)
        );
        assert_eq!(
            TransferConfig::new(vec![1.0, 1.0]),
            Err(GeometryError::BadGrid(1))
        );
        assert_eq!(
            TransferConfig::new(vec![-1.0, 1.0]),
            Err(GeometryError::BadGrid(0))
        );
        let default = TransferConfig::<f64>::default();
        assert_eq!(default.lambda_grid().len(), 13);
        assert_eq!(default.lambda_grid()[0], 1.0);
        assert_eq!(*default.lambda_grid().last().unwrap(), 7.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn finite_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-100.0f64..100.0, n)
        }

        fn nonzero_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
            finite_vec(n).prop_filter("normal must be nonzero", |v| {
                v.iter().any(|x| x.abs() > 1e-3)
            })
        }

        proptest! {
            #[test]
            fn margin_rule_holds(
                w in nonzero_vec(5),
                b in -10.0f64..10.0,
                z in finite_vec(5),
                lambda in 0.0f64..8.0,
            ) {
                let h = Hyperplane::new(w, b).unwrap();
                let z = Embedding::new(z).unwrap();
                let before = signed_margin(&h, &z).unwrap();
                let out = transfer(&h, &z, lambda).unwrap();
                let after = signed_margin(&h, &out).unwrap();
                let tol = 1e-9 * (1.0 + before.abs() * lambda);
                prop_assert!((after + lambda * before).abs() <= tol);
            }

            #[test]
            fn shift_is_parallel_to_normal(
                w in nonzero_vec(5),
                b in -10.0f64..10.0,
                z in finite_vec(5),
                lambda in 0.0f64..8.0,
            ) {
                let h = Hyperplane::new(w.clone(), b).unwrap();
                let z = Embedding::new(z).unwrap();
                let out = transfer(&h, &z, lambda).unwrap();
                let diff: Vec<f64> =
                    out.values().iter().zip(z.values()).map(|(a, b)| a - b).collect();
                let wn = crate::linalg::norm(&w);
                let unit: Vec<f64> = w.iter().map(|x| x / wn).collect();
                let along = crate::linalg::dot(&diff, &unit);
                let residual: Vec<f64> = diff
                    .iter()
                    .zip(&unit)
                    .map(|(d, u)| d - along * u)
                    .collect();
                let dn = crate::linalg::norm(&diff);
                prop_assert!(crate::linalg::norm(&residual) <= 1e-9 * dn.max(1e-12));
            }

            #[test]
            fn projection_is_idempotent(
                w in nonzero_vec(4),
                b in -10.0f64..10.0,
                z in finite_vec(4),
            ) {
                let h = Hyperplane::new(w, b).unwrap();
                let z = Embedding::new(z).unwrap();
                let once = project(&h, &z).unwrap();
                let twice = project(&h, &once).unwrap();
                for (a, b) in once.values().iter().zip(twice.values()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }

            #[test]
            fn invariant_under_plane_rescaling(
                w in nonzero_vec(4),
                b in -10.0f64..10.0,
                z in finite_vec(4),
                lambda in 0.0f64..8.0,
                c in 0.01f64..100.0,
            ) {
                let h1 = Hyperplane::new(w.clone(), b).unwrap();
                let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
                let h2 = Hyperplane::new(scaled, b * c).unwrap();
                let z = Embedding::new(z).unwrap();
                let t1 = transfer(&h1, &z, lambda).unwrap();
                let t2 = transfer(&h2, &z, lambda).unwrap();
                for (a, b) in t1.values().iter().zip(t2.values()) {
                    prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
                }
            }

            #[test]
            fn mirror_midpoint_lies_on_plane(
                w in nonzero_vec(4),
                b in -10.0f64..10.0,
                z in finite_vec(4),
            ) {
                let h = Hyperplane::new(w, b).unwrap();
                let z = Embedding::new(z).unwrap();
                let mirrored = transfer(&h, &z, 1.0).unwrap();
                let mid: Vec<f64> = z
                    .values()
                    .iter()
                    .zip(mirrored.values())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                let mid = Embedding::new(mid).unwrap();
                let m = signed_margin(&h, &mid).unwrap();
                let scale = signed_margin(&h, &z).unwrap().abs().max(1.0);
                prop_assert!(m.abs() <= 1e-9 * scale);
            }
        }
    }
}
