//! The three-waveguide Hamiltonian in the physical modes `(a0, a1, a2)`, its
//! reduced form in the collective modes `(a0, A, B)` with
//! `A = (a1 + a2)/√2`, `B = (a1 - a2)/√2`, and the Fock-space unitary that
//! converts between the two pictures.
//!
//! In the collective picture
//!
//! ```text
//! H = Ω1 C + Ω2 Jz + √2 g (J+ + J-) + ωB nB
//! J+ = a0 A†,  J- = a0† A,  Jz = A†A - a0†a0,  C = a0†a0 + A†A,  nB = B†B
//! ```
//!
//! with `[J+, J-] = Jz`, `[Jz, J±] = ±2 J±`, and `C`, `nB` central.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{arg_err, Error, Result};
use crate::fock::{enumerate_basis, hopping_matrix, number_matrix, FockBasis, FockState};
use crate::linalg::{hermiticity_deviation, max_abs, max_abs_diff, CMatrix};

/// Couplings above this fraction of the smallest frequency trigger a warning.
const RWA_RATIO: f64 = 0.1;

/// Physical parameters of the array, `ħ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideParams {
    /// Frequency of waveguide 0.
    pub omega0: f64,
    /// Shared frequency of waveguides 1 and 2.
    pub omega: f64,
    /// Hopping between waveguides 1 and 2.
    pub lambda: f64,
    /// Hopping between waveguide 0 and each of 1, 2.
    pub g: f64,
}

impl Default for WaveguideParams {
    /// Equal unit frequencies, no 1-2 hopping, `g = 0.01`: the linear array
    /// used for three-photon NOON generation.
    fn default() -> Self {
        Self {
            omega0: 1.0,
            omega: 1.0,
            lambda: 0.0,
            g: 0.01,
        }
    }
}

impl WaveguideParams {
    pub const fn new(omega0: f64, omega: f64, lambda: f64, g: f64) -> Self {
        Self {
            omega0,
            omega,
            lambda,
            g,
        }
    }

    /// Coefficient of `C`: `(ω + ω0 + λ)/2`.
    pub fn omega1(&self) -> f64 {
        (self.omega + self.omega0 + self.lambda) / 2.0
    }

    /// Coefficient of `Jz`: `(ω - ω0 + λ)/2`.
    pub fn omega2(&self) -> f64 {
        (self.omega - self.omega0 + self.lambda) / 2.0
    }

    /// Frequency of the decoupled mode `B`: `ω - λ`.
    pub fn omega_b(&self) -> f64 {
        self.omega - self.lambda
    }

    /// `√(2g² + Ω2²)`, the rotation frequency of the `(a0, A)` subsystem.
    pub fn rabi_frequency(&self) -> f64 {
        (2.0 * self.g * self.g + self.omega2().powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.omega0, self.omega, self.lambda, self.g]
            .iter()
            .all(|x| x.is_finite())
    }

    /// Messages for every coupling that is not small against the frequencies.
    /// The Hamiltonian stays well defined either way.
    pub fn rwa_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let floor = self.omega0.abs().min(self.omega.abs());
        for (name, v) in [("lambda", self.lambda), ("g", self.g)] {
            if v.abs() > RWA_RATIO * floor {
                out.push(format!(
                    "{name} = {v} is not much smaller than the field frequencies (min {floor}); \
                     the rotating-wave form of the coupling assumes weak coupling"
                ));
            }
        }
        out
    }

    pub fn warn_outside_rwa(&self) {
        for msg in self.rwa_violations() {
            log::warn!("{msg}");
        }
    }
}

/// Dense Hermitian operator on a fixed-N basis.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    basis: Arc<FockBasis>,
    entries: CMatrix,
}

impl HermitianMatrix {
    pub fn new(basis: Arc<FockBasis>, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != basis.len() || entries.ncols() != basis.len() {
            return arg_err(format!(
                "{}x{} matrix for {} basis states",
                entries.nrows(),
                entries.ncols(),
                basis.len()
            ));
        }
        let dev = hermiticity_deviation(&entries);
        if dev > 1e-13 * max_abs(&entries).max(1.0) {
            return Err(Error::Numeric {
                context: "HermitianMatrix::new",
                detail: format!("not Hermitian, deviation {dev:e}"),
            });
        }
        Ok(Self { basis, entries })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }
}

fn require_three_modes(basis: &FockBasis) -> Result<()> {
    if basis.mode_count() != 3 {
        return arg_err(format!(
            "the waveguide array has 3 modes, basis has {}",
            basis.mode_count()
        ));
    }
    Ok(())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Matrix of the physical Hamiltonian over a three-mode basis `(a0, a1, a2)`.
pub fn build_hamiltonian(params: &WaveguideParams, basis: &Arc<FockBasis>) -> Result<HermitianMatrix> {
    require_three_modes(basis)?;
    params.warn_outside_rwa();
    let n = |m| number_matrix(basis, m);
    let hop = |to, from| hopping_matrix(basis, to, from);

    let mut h = n(0)? * real(params.omega0) + (n(1)? + n(2)?) * real(params.omega);
    h += (hop(1, 2)? + hop(2, 1)?) * real(params.lambda);
    h += (hop(1, 0)? + hop(2, 0)? + hop(0, 1)? + hop(0, 2)?) * real(params.g);
    HermitianMatrix::new(basis.clone(), h)
}

/// Matrix of the Hamiltonian over a basis ordered `(a0, A, B)`:
/// `ω0 n0 + (ω+λ) nA + (ω-λ) nB + √2 g (A a0† + A† a0)`.
pub fn build_reduced_hamiltonian(params: &WaveguideParams, basis: &Arc<FockBasis>) -> Result<HermitianMatrix> {
    require_three_modes(basis)?;
    params.warn_outside_rwa();
    let mut h = number_matrix(basis, 0)? * real(params.omega0)
        + number_matrix(basis, 1)? * real(params.omega + params.lambda)
        + number_matrix(basis, 2)? * real(params.omega - params.lambda);
    h += (hopping_matrix(basis, 0, 1)? + hopping_matrix(basis, 1, 0)?) * real(2f64.sqrt() * params.g);
    HermitianMatrix::new(basis.clone(), h)
}

/// The generators `J+, J-, Jz, C, nB` over a basis ordered `(a0, A, B)`.
#[derive(Debug, Clone)]
pub struct CollectiveGenerators {
    pub j_plus: CMatrix,
    pub j_minus: CMatrix,
    pub j_z: CMatrix,
    pub casimir: CMatrix,
    pub n_b: CMatrix,
}

impl CollectiveGenerators {
    pub fn new(basis: &FockBasis) -> Result<Self> {
        require_three_modes(basis)?;
        let n0 = number_matrix(basis, 0)?;
        let na = number_matrix(basis, 1)?;
        Ok(Self {
            j_plus: hopping_matrix(basis, 1, 0)?,
            j_minus: hopping_matrix(basis, 0, 1)?,
            j_z: &na - &n0,
            casimir: n0 + na,
            n_b: number_matrix(basis, 2)?,
        })
    }

    /// `Ω1 C + Ω2 Jz + √2 g (J+ + J-) + ωB nB`
    pub fn hamiltonian(&self, params: &WaveguideParams) -> CMatrix {
        &self.casimir * real(params.omega1())
            + &self.j_z * real(params.omega2())
            + (&self.j_plus + &self.j_minus) * real(2f64.sqrt() * params.g)
            + &self.n_b * real(params.omega_b())
    }
}

fn binomial(n: u32, k: u32) -> i128 {
    (1..=k as i128).fold(1i128, |acc, i| acc * (n as i128 - k as i128 + i) / i)
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// Unitary `U_T` taking amplitudes over `|n0 n1 n2⟩` to amplitudes over the
/// collective-mode kets `|n0 nA nB⟩` (same basis enumeration).
///
/// Column `|n0 n1 n2⟩` is the expansion of
/// `(a0†)^n0 (A† + B†)^n1 (A† - B†)^n2 / √(n0! n1! n2! 2^(n1+n2)) |vac⟩`.
/// The binomial sums are accumulated as exact integers and only the final
/// `√(p! q! / (n1! n2! 2^(n1+n2)))` normalisation is taken in floating point.
pub fn mode_transform(basis: &Arc<FockBasis>) -> Result<CMatrix> {
    require_three_modes(basis)?;
    let dim = basis.len();
    let mut u = CMatrix::zeros(dim, dim);
    for (col, ket) in basis.states().iter().enumerate() {
        let (n0, n1, n2) = (ket.get(0), ket.get(1), ket.get(2));
        // (A-power, B-power) -> integer coefficient
        let mut terms: BTreeMap<(u32, u32), i128> = BTreeMap::new();
        for j in 0..=n1 {
            for l in 0..=n2 {
                let sign = if l % 2 == 0 { 1 } else { -1 };
                *terms.entry((n1 - j + n2 - l, j + l)).or_default() += sign * binomial(n1, j) * binomial(n2, l);
            }
        }
        let denom = factorial(n1) * factorial(n2) * (1u128 << (n1 + n2));
        for ((p, q), coef) in terms {
            if coef == 0 {
                continue;
            }
            let norm = ((factorial(p) * factorial(q)) as f64 / denom as f64).sqrt();
            let row = basis.index_of(&FockState::new([n0, p, q])).expect("same total");
            u[(row, col)] = real(coef as f64 * norm);
        }
    }
    Ok(u)
}

/// `max |U_T H U_T† - H_reduced|` on the `n`-photon block.
pub fn verify_similarity(params: &WaveguideParams, total_quanta: u32) -> Result<f64> {
    let basis = enumerate_basis(3, total_quanta)?;
    let h = build_hamiltonian(params, &basis)?;
    let h_red = build_reduced_hamiltonian(params, &basis)?;
    let u = mode_transform(&basis)?;
    let conj = &u * h.entries() * u.adjoint();
    Ok(max_abs_diff(&conj, h_red.entries()))
}
