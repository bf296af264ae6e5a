use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use rydchip::atomic::{dipole_z_matrix_element, effective_n, energy_level};
use rydchip::units::EA0_VCM_MHZ;
use rydchip::{HalfInt, QuantumDefectTable, RadialGrid, RydbergState};

pub const DELTA_N: u32 = 8;

/// Every state with the same mj, l ≤ l0 + 3 and |n − n0| ≤ Δn.
fn basis(center: &RydbergState, defects: &QuantumDefectTable) -> Vec<RydbergState> {
    let mut out = Vec::new();
    for l in 0..=center.l + 3 {
        for tj in [2 * l as i32 - 1, 2 * l as i32 + 1] {
            if tj < center.mj.abs().twice() || tj < 1 {
                continue;
            }
            let j = HalfInt::from_twice(tj);
            for n in center.n.saturating_sub(DELTA_N).max(l + 1)..=center.n + DELTA_N {
                let s = RydbergState::new(n, l, j, center.mj).unwrap();
                if effective_n(&s, defects).unwrap() <= l as f64 + 0.5 {
                    continue;
                }
                out.push(s);
            }
        }
    }
    out
}

pub struct StarkMatrix {
    energies: Vec<f64>,
    dipoles: DMatrix<f64>,
    target: usize,
}

impl StarkMatrix {
    pub fn new(center: &RydbergState, defects: &QuantumDefectTable) -> Self {
        let states = basis(center, defects);
        let target = states.iter().position(|s| s == center).unwrap();
        let e0 = energy_level(center, defects).unwrap();
        let energies: Vec<f64> = states.iter().map(|s| energy_level(s, defects).unwrap() - e0).collect();
        let grid = RadialGrid::default();
        let n = states.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|k| {
                        if k <= i {
                            0.0
                        } else {
                            dipole_z_matrix_element(&states[i], &states[k], defects, &grid).unwrap()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut dipoles = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in i + 1..n {
                dipoles[(i, k)] = rows[i][k];
                dipoles[(k, i)] = rows[i][k];
            }
        }
        StarkMatrix { energies, dipoles, target }
    }

    /// Shift of the eigenvalue adiabatically connected to the target (MHz).
    pub fn shift(&self, field: f64) -> f64 {
        let n = self.energies.len();
        let mut h = &self.dipoles * (field * EA0_VCM_MHZ);
        for i in 0..n {
            h[(i, i)] += self.energies[i];
        }
        let eig = SymmetricEigen::new(h);
        let mut best = 0;
        let mut overlap = 0.0;
        for k in 0..n {
            let o = eig.eigenvectors[(self.target, k)].abs();
            if o > overlap {
                overlap = o;
                best = k;
            }
        }
        assert!(overlap > 0.99, "target state strongly mixed: overlap {overlap}");
        eig.eigenvalues[best]
    }

    /// α from ΔW = −αF²/2, Richardson-extrapolated in F².
    pub fn alpha(&self, field: f64) -> f64 {
        let a1 = -2.0 * self.shift(field) / (field * field);
        let a2 = -2.0 * self.shift(2.0 * field) / (4.0 * field * field);
        (4.0 * a1 - a2) / 3.0
    }
}
