//! Built-in benchmark models: a periodic spin chain split into a uniform
//! transverse field `A = h_x sum_j sigma^x_j` and a diagonal part
//! `B = sum_j (J_z sigma^z_j sigma^z_{j+1} + h_z sigma^z_j)`, plus the
//! linearly ramped variant `H(t) = t A + B`.

use num_complex::Complex64;

use crate::error::Result;
use crate::formulas::{SplitHamiltonian, TimeProfile};
use crate::pauli::{PauliString, PauliSum};

pub const DEFAULT_JZ: f64 = -1.0;
pub const DEFAULT_HZ: f64 = 0.2;
pub const DEFAULT_HX: f64 = -2.0;

/// Transverse-field part `h_x sum_j sigma^x_j`.
pub fn field_part(l: usize, hx: f64) -> PauliSum {
    PauliSum::from_terms(
        l,
        (0..l).map(|j| (PauliString::x(j, l), Complex64::new(hx, 0.0))),
    )
}

/// Diagonal part `sum_j (J_z sigma^z_j sigma^z_{j+1} + h_z sigma^z_j)` with
/// periodic boundaries.
pub fn diagonal_part(l: usize, jz: f64, hz: f64) -> PauliSum {
    let mut b = PauliSum::zero(l);
    for j in 0..l {
        let zz = (1u64 << j) | (1u64 << ((j + 1) % l));
        b.add_term(PauliString::new(0, zz, l), Complex64::new(jz, 0.0));
        b.add_term(PauliString::z(j, l), Complex64::new(hz, 0.0));
    }
    b
}

/// Time-independent chain `H = A + B`.
pub fn ising_x(l: usize, jz: f64, hz: f64, hx: f64) -> Result<SplitHamiltonian> {
    SplitHamiltonian::new(field_part(l, hx), diagonal_part(l, jz, hz))
}

/// Linearly ramped chain `H(t) = t A + B`.
pub fn ising_ramp(l: usize, jz: f64, hz: f64, hx: f64) -> Result<SplitHamiltonian> {
    SplitHamiltonian::with_modulations(
        field_part(l, hx),
        diagonal_part(l, jz, hz),
        TimeProfile::Ramp,
        TimeProfile::Constant(1.0),
    )
}

/// Magnetization density `(1/L) sum_j sigma^x_j`; operator norm 1.
pub fn magnetization_x(l: usize) -> PauliSum {
    PauliSum::from_terms(
        l,
        (0..l).map(|j| (PauliString::x(j, l), Complex64::new(1.0 / l as f64, 0.0))),
    )
}

/// Magnetization density `(1/L) sum_j sigma^y_j`.
pub fn magnetization_y(l: usize) -> PauliSum {
    PauliSum::from_terms(
        l,
        (0..l).map(|j| (PauliString::y(j, l), Complex64::new(1.0 / l as f64, 0.0))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_have_expected_term_counts() {
        let h = ising_x(6, DEFAULT_JZ, DEFAULT_HZ, DEFAULT_HX).unwrap();
        assert_eq!(h.part(crate::formulas::PartId::A).num_terms(), 6);
        // L ZZ bonds + L fields.
        assert_eq!(h.part(crate::formulas::PartId::B).num_terms(), 12);
        assert!(h.is_time_independent());
    }

    #[test]
    fn pbc_wraps_at_small_l() {
        // At L = 2 both bond terms hit the same string and add up.
        let b = diagonal_part(2, -1.0, 0.0);
        assert_eq!(b.num_terms(), 1);
        let (_, c) = b.iter().next().unwrap();
        assert!((c.re + 2.0).abs() < 1e-15);
    }

    #[test]
    fn sum_reconstructs_hamiltonian() {
        let h = ising_x(4, DEFAULT_JZ, DEFAULT_HZ, DEFAULT_HX).unwrap();
        let total = h.hamiltonian().unwrap();
        assert_eq!(total.num_terms(), 4 + 8);
        let ramp = ising_ramp(4, DEFAULT_JZ, DEFAULT_HZ, DEFAULT_HX).unwrap();
        assert!(!ramp.is_time_independent());
        // H(t) at t = 1 equals the unramped sum.
        assert_eq!(ramp.hamiltonian_at(1.0), total);
    }

    #[test]
    fn magnetization_norm_is_one() {
        let mx = magnetization_x(5);
        let norm = mx
            .spectral_norm(&crate::pauli::NormOptions::default())
            .unwrap();
        assert!((norm - 1.0).abs() < 1e-10);
    }
}
