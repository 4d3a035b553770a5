//! Finitely supported probability measures on the real line and the
//! functionals used throughout the crate: log-potentials, Stieltjes
//! transforms, power moments, truncation and the extended η-Wasserstein
//! distance.

mod io;
mod wasserstein;

pub use io::{parse_measure_csv, read_measure_csv, read_points_csv, write_measure_csv};
pub use wasserstein::{eta_cost, eta_wasserstein, eta_wasserstein_solution, TransportSolution};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::contour::Rotation;
use crate::error::{Error, Result};

/// Minimum Hankel eigenvalue still counted as positive semidefinite.
pub const PSD_EIGEN_FLOOR: f64 = -1e-9;

/// A probability measure with finitely many atoms, kept in canonical form:
/// strictly increasing atoms, positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from atoms and optional weights (uniform when absent).
    ///
    /// Duplicate atoms (exact equality) are merged by summing their weights,
    /// zero-weight atoms are dropped and the weights are renormalized.
    pub fn new(atoms: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("atom list is empty".into()));
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite atom {a}")));
        }
        let weights: Vec<f64> = match weights {
            Some(w) => {
                if w.len() != atoms.len() {
                    return Err(Error::InvalidMeasure(format!(
                        "{} atoms but {} weights",
                        atoms.len(),
                        w.len()
                    )));
                }
                if let Some(x) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
                    return Err(Error::InvalidMeasure(format!("invalid weight {x}")));
                }
                w.to_vec()
            }
            None => vec![1.0; atoms.len()],
        };

        let mut pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += w,
                _ => merged.push((a, w)),
            }
        }
        merged.retain(|&(_, w)| w > 0.0);
        let total: f64 = merged.iter().map(|p| p.1).sum();
        if merged.is_empty() || total <= 0.0 {
            return Err(Error::InvalidMeasure("all weights are zero".into()));
        }
        let (atoms, weights) = merged.into_iter().map(|(a, w)| (a, w / total)).unzip();
        Ok(Self { atoms, weights })
    }

    pub fn uniform(atoms: &[f64]) -> Result<Self> {
        Self::new(atoms, None)
    }

    pub fn dirac(a: f64) -> Result<Self> {
        Self::new(&[a], None)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_atom(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms[self.atoms.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().copied().zip(self.weights.iter().copied())
    }

    /// ∫ φ dρ.
    pub fn expect<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        self.iter().map(|(a, w)| w * phi(a)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// Moves the mass outside [−m, m] onto the nearer endpoint.
    pub fn truncate(&self, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation level must be positive, got {m}"
            )));
        }
        let atoms: Vec<f64> = self.atoms.iter().map(|a| a.clamp(-m, m)).collect();
        Self::new(&atoms, Some(&self.weights))
    }

    /// g_ρ(z) = Σ wⱼ Log(z − aⱼ) with the principal logarithm per atom.
    pub fn g_function(&self, z: Complex64) -> Result<Complex64> {
        self.g_function_rotated(z, Rotation::One)
    }

    /// Same sum with each logarithm cut along aⱼ + r·(−∞, 0] instead of the
    /// negative real direction; for r = 1 this is `g_function`.
    pub fn g_function_rotated(&self, z: Complex64, rotation: Rotation) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, w) in self.iter() {
            let d = z - a;
            if d.re == 0.0 && d.im == 0.0 {
                return Err(Error::SingularEvaluation(format!("z = {z} is an atom")));
            }
            acc += w * rotation.log(d);
        }
        Ok(acc)
    }

    /// G_ρ(z) = Σ wⱼ / (z − aⱼ).
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, w) in self.iter() {
            let d = z - a;
            if d.re == 0.0 && d.im == 0.0 {
                return Err(Error::SingularEvaluation(format!("z = {z} is an atom")));
            }
            acc += w / d;
        }
        Ok(acc)
    }

    /// Power moments m₁ … m_{n_max}.
    pub fn moments(&self, n_max: usize) -> Result<MomentVector> {
        if n_max == 0 {
            return Err(Error::InvalidArgument(
                "moment order must be at least 1".into(),
            ));
        }
        let mut values = vec![0.0; n_max];
        for (a, w) in self.iter() {
            let mut p = w;
            for v in values.iter_mut() {
                p *= a;
                *v += p;
            }
        }
        MomentVector::new(values)
    }

    /// ∫ log(1 + x²) dρ, the functional defining the class where random
    /// means exist. Always finite here.
    pub fn class_v_functional(&self) -> f64 {
        self.expect(|x| x.mul_add(x, 1.0).ln())
    }
}

/// Power moments m₁ … m_n of a measure (m₀ = 1 is implicit).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentVector {
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "moment vector must have order ≥ 1".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// m₁ … m_n.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// m_k with m₀ = 1.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// [m_{i+j}] for 0 ≤ i, j ≤ ⌊n/2⌋.
    pub fn hankel_matrix(&self) -> DMatrix<f64> {
        let h = self.order() / 2 + 1;
        DMatrix::from_fn(h, h, |i, j| self.get(i + j))
    }

    pub fn hankel_min_eigenvalue(&self) -> f64 {
        self.hankel_matrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_hankel_psd(&self) -> bool {
        self.hankel_min_eigenvalue() >= PSD_EIGEN_FLOOR
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn construction_defaults_and_merging() {
        let m = DiscreteMeasure::new(&[0.0, 1.0], None).unwrap();
        assert_eq!(m.atoms(), &[0.0, 1.0]);
        assert_eq!(m.weights(), &[0.5, 0.5]);

        let m = DiscreteMeasure::new(&[1.0, 1.0, 2.0], None).unwrap();
        assert_eq!(m.atoms(), &[1.0, 2.0]);
        assert!((m.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.weights()[1] - 1.0 / 3.0).abs() < 1e-15);

        let m = DiscreteMeasure::new(&[3.0], Some(&[7.0])).unwrap();
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            DiscreteMeasure::new(&[], None),
            Err(Error::InvalidMeasure(_))
        ));
        assert!(matches!(
            DiscreteMeasure::new(&[0.0, 1.0], Some(&[1.0, -0.5])),
            Err(Error::InvalidMeasure(_))
        ));
        assert!(matches!(
            DiscreteMeasure::new(&[0.0, 1.0], Some(&[0.0, 0.0])),
            Err(Error::InvalidMeasure(_))
        ));
    }

    #[test]
    fn truncation_clamps_tails() {
        let m = DiscreteMeasure::uniform(&[-2.0, 0.0, 2.0])
            .unwrap()
            .truncate(1.0)
            .unwrap();
        assert_eq!(m.atoms(), &[-1.0, 0.0, 1.0]);
        for w in m.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        let d = DiscreteMeasure::dirac(0.0).unwrap();
        assert_eq!(d.truncate(0.3).unwrap(), d);
        let m = DiscreteMeasure::uniform(&[-3.0, -1.0, 1.0, 3.0])
            .unwrap()
            .truncate(2.0)
            .unwrap();
        assert_eq!(m.atoms(), &[-2.0, -1.0, 1.0, 2.0]);
        assert!(matches!(m.truncate(0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn g_function_values() {
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        assert!((d0.g_function(c(2.0, 0.0)).unwrap() - c(2f64.ln(), 0.0)).norm() < 1e-15);
        let g = d0.g_function(c(0.0, 1.0)).unwrap();
        assert!((g - c(0.0, std::f64::consts::FRAC_PI_2)).norm() < 1e-15);

        let sym = DiscreteMeasure::uniform(&[-1.0, 1.0]).unwrap();
        let z = c(0.0, 2.0);
        let direct = 0.5 * ((z + 1.0).ln() + (z - 1.0).ln());
        assert!((sym.g_function(z).unwrap() - direct).norm() < 1e-15);
        assert!(matches!(
            d0.g_function(c(0.0, 0.0)),
            Err(Error::SingularEvaluation(_))
        ));
    }

    #[test]
    fn rotated_log_agrees_in_shared_half_plane() {
        // For r = −i the cut points up; below the atoms both branches coincide.
        let m = DiscreteMeasure::uniform(&[-1.0, 0.5, 2.0]).unwrap();
        let z = c(0.3, -1.5);
        let a = m.g_function(z).unwrap();
        let b = m.g_function_rotated(z, Rotation::MinusI).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn stieltjes_values() {
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        assert!((d0.stieltjes(c(2.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let sym = DiscreteMeasure::uniform(&[-1.0, 1.0]).unwrap();
        assert!((sym.stieltjes(c(0.0, 1.0)).unwrap() - c(0.0, -0.5)).norm() < 1e-15);

        let m = DiscreteMeasure::new(&[-0.4, 0.3, 2.0], Some(&[0.2, 0.5, 0.3])).unwrap();
        let m1 = m.mean();
        for z in [c(1e6, 0.0), c(0.0, 1e6), c(-7e5, 7e5)] {
            let g = m.stieltjes(z).unwrap();
            let approx = 1.0 / z + m1 / (z * z);
            assert!((g - approx).norm() <= 1e-10 * g.norm());
        }
    }

    #[test]
    fn stieltjes_is_derivative_of_g() {
        let m = DiscreteMeasure::new(&[-1.3, 0.0, 0.4, 2.2], Some(&[0.1, 0.4, 0.3, 0.2])).unwrap();
        for re in [-3.0, -1.0, 0.0, 0.7, 2.5, 4.0] {
            for im in [-2.0, -0.5, 0.5, 1.0, 3.0] {
                let z = c(re, im);
                let h = 1e-6 * (1.0 + z.norm());
                let fd = (m.g_function(z + h).unwrap() - m.g_function(z - h).unwrap()) / (2.0 * h);
                let g = m.stieltjes(z).unwrap();
                assert!((fd - g).norm() <= 1e-6 * g.norm(), "z={z}");
            }
        }
    }

    #[test]
    fn moment_values() {
        let m = DiscreteMeasure::uniform(&[0.0, 1.0])
            .unwrap()
            .moments(5)
            .unwrap();
        assert!(m.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let m = DiscreteMeasure::dirac(1.5).unwrap().moments(4).unwrap();
        for k in 1..=4 {
            assert!((m.get(k) - 1.5f64.powi(k as i32)).abs() < 1e-14);
        }
        let m = DiscreteMeasure::uniform(&[-1.0, 0.0, 1.0])
            .unwrap()
            .moments(2)
            .unwrap();
        assert!(m.get(1).abs() < 1e-15);
        assert!((m.get(2) - 2.0 / 3.0).abs() < 1e-15);
        assert!(DiscreteMeasure::dirac(0.0).unwrap().moments(0).is_err());
    }

    #[test]
    fn class_v_values() {
        assert_eq!(
            DiscreteMeasure::dirac(0.0).unwrap().class_v_functional(),
            0.0
        );
        let v = DiscreteMeasure::dirac(1.0).unwrap().class_v_functional();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        let v = DiscreteMeasure::uniform(&[0.0, 3.0])
            .unwrap()
            .class_v_functional();
        assert!((v - 0.5 * 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hankel_of_point_mass_is_singular_psd() {
        let m = DiscreteMeasure::dirac(2.0).unwrap().moments(6).unwrap();
        let e = m.hankel_min_eigenvalue();
        assert!(e.abs() < 1e-9);
        assert!(m.is_hankel_psd());
        // moments of a "measure" with negative variance
        let bad = MomentVector::new(vec![1.0, 0.5]).unwrap();
        assert!(!bad.is_hankel_psd());
    }

    proptest! {
        #[test]
        fn moments_are_permutation_invariant(
            atoms in prop::collection::vec(-3.0f64..3.0, 1..8),
            seed in 0u64..1000,
        ) {
            let mut shuffled = atoms.clone();
            // deterministic rotation + reversal
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = DiscreteMeasure::uniform(&atoms).unwrap().moments(6).unwrap();
            let b = DiscreteMeasure::uniform(&shuffled).unwrap().moments(6).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn truncated_mean_within_level(
            atoms in prop::collection::vec(-10.0f64..10.0, 1..10),
            level in 0.1f64..5.0,
        ) {
            let m = DiscreteMeasure::uniform(&atoms).unwrap().truncate(level).unwrap();
            let mean = m.mean();
            prop_assert!(mean >= -level - 1e-12 && mean <= level + 1e-12);
            prop_assert!(m.atoms().iter().all(|a| a.abs() <= level));
            prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
