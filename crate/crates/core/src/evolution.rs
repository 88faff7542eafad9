//! Time evolution `U(t) = exp(-iHt)` by two independent routes.
//!
//! * [`Spectrum`] diagonalises the Hermitian matrix and exponentiates the
//!   eigenvalues. It is the ground truth.
//! * [`AnalyticPropagator`] multiplies the five factors
//!   `exp(-it ωB nB) exp(-it Ω1 C) exp(-i f1 J+) exp(-i f2 Jz) exp(-i f1 J-)`
//!   in the collective-mode frame, with the ladder factors summed as finite
//!   polynomials.
//!
//! The factorized form is singular where `exp(i f2)` vanishes and loses
//! precision like `|exp(i f2)|^-N` next to those points. When
//! `|exp(i f2(t))|` drops below [`SPLIT_MODULUS`] the analytic route evaluates
//! `U(t/2)²` instead, which keeps the result at full accuracy.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockState, StateVector, NORM_TOL};
use crate::hamiltonian::{build_hamiltonian, mode_transform, CollectiveGenerators, HermitianMatrix, WaveguideParams};
use crate::linalg::{diagonal_exp, nilpotent_exp, real_diagonal, unitarity_deviation, CMatrix, I};

/// Below this `|exp(i f2)|` the analytic propagator is evaluated as `U(t/2)²`.
pub const SPLIT_MODULUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Oracle,
    Analytic,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oracle" => Ok(Self::Oracle),
            "analytic" => Ok(Self::Analytic),
            other => Err(Error::Argument(format!("unknown method {other:?} (oracle|analytic)"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::Analytic => "analytic",
        })
    }
}

/// Which set of modes a matrix is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// `(a0, a1, a2)`
    Physical,
    /// `(a0, A, B)`
    Collective,
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub basis: Arc<FockBasis>,
    pub matrix: CMatrix,
    pub t: f64,
    pub method: Method,
    pub frame: Frame,
}

impl Propagator {
    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if **state.basis() != *self.basis {
            return Err(Error::BasisMismatch(
                "propagator and state live on different blocks".into(),
            ));
        }
        state.apply(&self.matrix)
    }
}

fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or_else(|| Error::Numeric {
        context: "eigh",
        detail: format!(
            "Hermitian eigensolver did not converge on a {}x{} matrix",
            m.nrows(),
            m.ncols()
        ),
    })?;
    let energies: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if let Some(bad) = energies.iter().find(|e| !e.is_finite()) {
        return Err(Error::Numeric {
            context: "eigh",
            detail: format!("non-finite eigenvalue {bad}"),
        });
    }
    let dev = unitarity_deviation(&eig.eigenvectors);
    if dev > 1e-10 {
        return Err(Error::Numeric {
            context: "eigh",
            detail: format!("eigenvectors not orthonormal ({dev:e})"),
        });
    }
    Ok((energies, eig.eigenvectors))
}

fn spectral_exp(energies: &[f64], vectors: &CMatrix, t: f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (mut col, e) in scaled.column_iter_mut().zip(energies) {
        col *= (-I * (e * t)).exp();
    }
    scaled * vectors.adjoint()
}

/// `exp(-i m t)` for a Hermitian matrix `m` that is not tied to a basis.
pub fn hermitian_exp(m: &CMatrix, t: f64) -> Result<CMatrix> {
    let (energies, vectors) = eigh(m)?;
    Ok(spectral_exp(&energies, &vectors, t))
}

/// Eigendecomposition `H = V diag(E) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    basis: Arc<FockBasis>,
    energies: Vec<f64>,
    vectors: CMatrix,
}

impl Spectrum {
    pub fn new(h: &HermitianMatrix) -> Result<Self> {
        let (energies, vectors) = eigh(h.entries())?;
        Ok(Self {
            basis: h.basis().clone(),
            energies,
            vectors,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `exp(-iHt)`
    pub fn exp_matrix(&self, t: f64) -> CMatrix {
        spectral_exp(&self.energies, &self.vectors, t)
    }

    pub fn propagator(&self, t: f64, frame: Frame) -> Propagator {
        Propagator {
            basis: self.basis.clone(),
            matrix: self.exp_matrix(t),
            t,
            method: Method::Oracle,
            frame,
        }
    }
}

/// `exp(-iHt)` via Hermitian eigendecomposition. The frame is whatever `h` was
/// built in; physical is assumed.
pub fn propagator_oracle(h: &HermitianMatrix, t: f64) -> Result<Propagator> {
    Ok(Spectrum::new(h)?.propagator(t, Frame::Physical))
}

/// Coefficients of `exp(-it[Ω2 Jz + √2 g (J+ + J-)]) = exp(-i f1 J+) exp(-i f2 Jz) exp(-i f3 J-)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisentangleCoeffs {
    pub f1: Complex64,
    pub f2: Complex64,
    pub f3: Complex64,
    pub theta: Complex64,
    pub t: f64,
}

impl DisentangleCoeffs {
    /// `|exp(i f2)|`; zero exactly at the singular times of the factorization.
    pub fn modulus(&self) -> f64 {
        (I * self.f2).exp().norm()
    }
}

/// The `θ` branch of `csc θ = √2 g / √(2g² + Ω2²)` with `f1(0) = f2(0) = 0`.
fn theta_branch(k: f64, omega2: f64, w: f64) -> Complex64 {
    // csc θ = k/w ≤ 1, so θ = asin(w/k) sits on the branch cut and both
    // π/2 ± i·acosh(w/k) are candidates
    let base = Complex64::new(w / k, 0.0).asin();
    let candidates = [
        Complex64::new(FRAC_PI_2, base.im.abs()),
        Complex64::new(FRAC_PI_2, -base.im.abs()),
    ];
    let f1_at_zero = |th: Complex64| (I * (omega2 / k) - (th.cos() / th.sin()) * (w / k)).norm();
    if f1_at_zero(candidates[0]) <= f1_at_zero(candidates[1]) {
        candidates[0]
    } else {
        candidates[1]
    }
}

/// Closed forms
///
/// ```text
/// f1(t) = i Ω2/(√2 g) - (w/(√2 g)) cot(θ + w t)
/// f2(t) = -i ln[(√2 g / w) sin(θ + w t)]
/// ```
///
/// with `w = √(2g² + Ω2²)` and `f3 = f1`. The real part of `f2` is unwound
/// so that it is continuous in `t` (the argument of the logarithm circles the
/// origin once per period when `Ω2 ≠ 0`). For `Ω2 = 0` the logarithm's
/// argument is real and the principal branch is used.
pub fn disentangle_coeffs(params: &WaveguideParams, t: f64) -> Result<DisentangleCoeffs> {
    disentangle_coeffs_for(params.omega2(), params.g, t)
}

/// [`disentangle_coeffs`] in terms of the two parameters it depends on.
pub fn disentangle_coeffs_for(omega2: f64, g: f64, t: f64) -> Result<DisentangleCoeffs> {
    if g == 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    let k = 2f64.sqrt() * g;
    let w = (k * k + omega2 * omega2).sqrt();
    let theta = theta_branch(k, omega2, w);
    let phase = theta + w * t;
    let f1 = I * (omega2 / k) - (phase.cos() / phase.sin()) * (w / k);

    let z = phase.sin() * (k / w);
    let mut arg = z.arg();
    if omega2 != 0.0 {
        let winding = omega2.signum() * w * t;
        arg += 2.0 * PI * ((winding - arg) / (2.0 * PI)).round();
    }
    let f2 = Complex64::new(arg, -z.norm().ln());
    Ok(DisentangleCoeffs {
        f1,
        f2,
        f3: f1,
        theta,
        t,
    })
}

/// `|exp(i f2(t))| = |cos(w t) + i (Ω2/w) sin(w t)|` without forming `f2`.
fn factorization_modulus(params: &WaveguideParams, t: f64) -> f64 {
    let w = params.rabi_frequency();
    let r = params.omega2() / w;
    let phi = w * t;
    (phi.cos().powi(2) + (r * phi.sin()).powi(2)).sqrt()
}

/// The factorized propagator on one fixed-N block in the `(a0, A, B)` frame.
#[derive(Debug, Clone)]
pub struct AnalyticPropagator {
    params: WaveguideParams,
    basis: Arc<FockBasis>,
    gens: CollectiveGenerators,
    jz: Vec<f64>,
    casimir: Vec<f64>,
    n_b: Vec<f64>,
}

impl AnalyticPropagator {
    pub fn new(params: &WaveguideParams, basis: &Arc<FockBasis>) -> Result<Self> {
        if params.g == 0.0 {
            return Err(Error::DegenerateCoupling);
        }
        let gens = CollectiveGenerators::new(basis)?;
        Ok(Self {
            params: *params,
            basis: basis.clone(),
            jz: real_diagonal(&gens.j_z),
            casimir: real_diagonal(&gens.casimir),
            n_b: real_diagonal(&gens.n_b),
            gens,
        })
    }

    /// The five-factor product at exactly `t`, with no splitting.
    pub fn factorized(&self, t: f64) -> Result<CMatrix> {
        let c = disentangle_coeffs(&self.params, t)?;
        let lower = nilpotent_exp(&self.gens.j_minus, -I * c.f3);
        let rotate = diagonal_exp(&self.jz, -I * c.f2);
        let raise = nilpotent_exp(&self.gens.j_plus, -I * c.f1);
        let central = diagonal_exp(&self.casimir, -I * (t * self.params.omega1()));
        let b_mode = diagonal_exp(&self.n_b, -I * (t * self.params.omega_b()));
        let u = b_mode * central * raise * rotate * lower;
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric {
                context: "AnalyticPropagator",
                detail: format!("non-finite factor product at t = {t}"),
            });
        }
        Ok(u)
    }

    pub fn matrix(&self, t: f64) -> Result<CMatrix> {
        if factorization_modulus(&self.params, t) < SPLIT_MODULUS {
            log::debug!("t = {t} is close to a factorization singularity, composing two half steps");
            let half = self.matrix(t / 2.0)?;
            return Ok(&half * &half);
        }
        self.factorized(t)
    }

    pub fn propagator(&self, t: f64) -> Result<Propagator> {
        Ok(Propagator {
            basis: self.basis.clone(),
            matrix: self.matrix(t)?,
            t,
            method: Method::Analytic,
            frame: Frame::Collective,
        })
    }
}

/// Factorized propagator over a basis ordered `(a0, A, B)`.
pub fn propagator_analytic(params: &WaveguideParams, basis_ab: &Arc<FockBasis>, t: f64) -> Result<Propagator> {
    AnalyticPropagator::new(params, basis_ab)?.propagator(t)
}

/// Everything needed to propagate states of one photon-number block with
/// either method, precomputed once.
#[derive(Debug, Clone)]
pub struct Evolver {
    params: WaveguideParams,
    basis: Arc<FockBasis>,
    transform: CMatrix,
    spectrum: Spectrum,
    analytic: Option<AnalyticPropagator>,
    uncoupled_energies: Vec<f64>,
}

impl Evolver {
    pub fn new(params: &WaveguideParams, basis: &Arc<FockBasis>) -> Result<Self> {
        let h = build_hamiltonian(params, basis)?;
        let transform = mode_transform(basis)?;
        let analytic = if params.g == 0.0 {
            None
        } else {
            Some(AnalyticPropagator::new(params, basis)?)
        };
        let uncoupled_energies = basis
            .states()
            .iter()
            .map(|s| {
                params.omega0 * s.get(0) as f64
                    + (params.omega + params.lambda) * s.get(1) as f64
                    + (params.omega - params.lambda) * s.get(2) as f64
            })
            .collect();
        Ok(Self {
            params: *params,
            basis: basis.clone(),
            transform,
            spectrum: Spectrum::new(&h)?,
            analytic,
            uncoupled_energies,
        })
    }

    pub fn params(&self) -> &WaveguideParams {
        &self.params
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    /// `U_T`, physical to collective amplitudes.
    pub fn transform(&self) -> &CMatrix {
        &self.transform
    }

    /// Propagator in the collective frame. For `g = 0` the Hamiltonian is
    /// already diagonal there and the phases are applied directly.
    pub fn collective_propagator(&self, t: f64) -> Result<CMatrix> {
        match &self.analytic {
            Some(a) => a.matrix(t),
            None => Ok(diagonal_exp(&self.uncoupled_energies, -I * t)),
        }
    }

    /// `exp(-iHt)` in the physical frame.
    pub fn propagator(&self, t: f64, method: Method) -> Result<Propagator> {
        let matrix = match method {
            Method::Oracle => self.spectrum.exp_matrix(t),
            Method::Analytic => self.transform.adjoint() * self.collective_propagator(t)? * &self.transform,
        };
        Ok(Propagator {
            basis: self.basis.clone(),
            matrix,
            t,
            method,
            frame: Frame::Physical,
        })
    }

    pub fn evolve(&self, state: &StateVector, t: f64, method: Method) -> Result<StateVector> {
        if **state.basis() != *self.basis {
            return Err(Error::BasisMismatch(
                "state is not on this evolver's photon-number block".into(),
            ));
        }
        state.require_normalized(NORM_TOL)?;
        let amps = match method {
            Method::Oracle => self.spectrum.exp_matrix(t) * state.amplitudes(),
            Method::Analytic => {
                let collective = &self.transform * state.amplitudes();
                self.transform.adjoint() * (self.collective_propagator(t)? * collective)
            }
        };
        StateVector::new(self.basis.clone(), amps)
    }
}

/// Evolve a physical-frame state of the three-waveguide array by `t`.
pub fn evolve(state: &StateVector, params: &WaveguideParams, t: f64, method: Method) -> Result<StateVector> {
    Evolver::new(params, state.basis())?.evolve(state, t, method)
}

/// `(|102⟩ + |120⟩)/√2`: one photon in guide 0 and a photon pair in guide 1
/// or guide 2.
pub fn pair_superposition_state() -> StateVector {
    let basis = crate::fock::enumerate_basis(3, 3).expect("three modes");
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    StateVector::from_terms(basis, &[(FockState::new([1, 0, 2]), h), (FockState::new([1, 2, 0]), h)])
        .expect("kets are in the N = 3 block")
}

/// Closed-form amplitudes of [`pair_superposition_state`] evolved with
/// `ω0 = ω = 1`, `λ = 0`, `g = 0.01`. Kets related by swapping guides 1 and 2
/// share a coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormCoefficients {
    pub t: f64,
    pub c003: Complex64,
    pub c012: Complex64,
    pub c102: Complex64,
    pub c111: Complex64,
    pub c201: Complex64,
    pub c300: Complex64,
}

pub fn closed_form_coefficients(t: f64) -> ClosedFormCoefficients {
    let x = t / (50.0 * 2f64.sqrt());
    let (s1, c1) = x.sin_cos();
    let (s3, c3) = (3.0 * x).sin_cos();
    let phase = (-I * (3.0 * t)).exp();
    let re = |v: f64| Complex64::new(v, 0.0) * phase;
    let im = |v: f64| Complex64::new(0.0, v) * phase;
    ClosedFormCoefficients {
        t,
        c003: im(-(3f64.sqrt() / 16.0) * (5.0 * s1 + s3)),
        c012: im((s1 - 3.0 * s3) / 16.0),
        c102: re((5.0 * c1 + 3.0 * c3) / (8.0 * 2f64.sqrt())),
        c111: re(-1.5 * s1 * s1 * c1),
        c201: im((s1 - 3.0 * s3) / 8.0),
        c300: re(-(1.5f64).sqrt() * s1 * s1 * c1),
    }
}

impl ClosedFormCoefficients {
    /// Coefficient of a three-mode, three-photon ket.
    pub fn coefficient(&self, ket: &FockState) -> Option<Complex64> {
        if ket.mode_count() != 3 || ket.total() != 3 {
            return None;
        }
        let (n0, a, b) = (ket.get(0), ket.get(1).min(ket.get(2)), ket.get(1).max(ket.get(2)));
        Some(match (n0, a, b) {
            (0, 0, 3) => self.c003,
            (0, 1, 2) => self.c012,
            (1, 0, 2) => self.c102,
            (1, 1, 1) => self.c111,
            (2, 0, 1) => self.c201,
            (3, 0, 0) => self.c300,
            _ => unreachable!("all N = 3 kets covered"),
        })
    }

    pub fn state_vector(&self, basis: &Arc<FockBasis>) -> Result<StateVector> {
        let amps: Option<Vec<Complex64>> = basis.states().iter().map(|s| self.coefficient(s)).collect();
        let amps = amps.ok_or_else(|| Error::Argument("closed forms exist only on the 3-mode, N = 3 block".into()))?;
        StateVector::new(basis.clone(), nalgebra::DVector::from_vec(amps))
    }

    /// `Σ|C|²` over all ten kets, counting each shared coefficient twice.
    pub fn weighted_norm_sqr(&self) -> f64 {
        2.0 * (self.c003.norm_sqr() + self.c012.norm_sqr() + self.c102.norm_sqr() + self.c201.norm_sqr())
            + self.c111.norm_sqr()
            + self.c300.norm_sqr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_basis;
    use crate::hamiltonian::build_reduced_hamiltonian;
    use crate::linalg::{max_abs, max_abs_diff, CVector, ONE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent second oracle: Taylor series with scaling and squaring.
    fn expm_series(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let norm = a.iter().map(|z| z.norm()).sum::<f64>();
        let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
        let scaled = a / Complex64::new(2f64.powi(squarings), 0.0);
        let mut out = CMatrix::identity(n, n);
        let mut term = CMatrix::identity(n, n);
        for k in 1..=30 {
            term = &term * &scaled / Complex64::new(k as f64, 0.0);
            out += &term;
        }
        for _ in 0..squarings {
            out = &out * &out;
        }
        out
    }

    fn default_block() -> Arc<FockBasis> {
        enumerate_basis(3, 3).unwrap()
    }

    #[test]
    fn oracle_at_zero_is_identity() {
        let b = default_block();
        let h = build_hamiltonian(&WaveguideParams::default(), &b).unwrap();
        let u = propagator_oracle(&h, 0.0).unwrap();
        assert!(max_abs_diff(&u.matrix, &CMatrix::identity(10, 10)) < 1e-14);
    }

    #[test]
    fn oracle_on_diagonal_hamiltonian() {
        let b = default_block();
        let p = WaveguideParams::new(0.8, 1.3, 0.0, 0.0);
        let h = build_hamiltonian(&p, &b).unwrap();
        let t = 3.7;
        let u = propagator_oracle(&h, t).unwrap();
        let want = CMatrix::from_diagonal(&h.entries().diagonal().map(|e| (-I * e * t).exp()));
        assert!(max_abs_diff(&u.matrix, &want) < 1e-13);
    }

    #[test]
    fn oracle_matches_series_oracle_single_photon() {
        let b = enumerate_basis(3, 1).unwrap();
        let h = build_hamiltonian(&WaveguideParams::default(), &b).unwrap();
        let u = propagator_oracle(&h, 10.0).unwrap();
        let series = expm_series(&(h.entries() * (-I * 10.0)));
        assert!(max_abs_diff(&u.matrix, &series) < 1e-10);
        assert!(u.unitarity_deviation() < 1e-10);
    }

    #[test]
    fn oracle_group_property() {
        let b = default_block();
        let h = build_hamiltonian(&WaveguideParams::new(0.95, 1.05, 0.01, 0.02), &b).unwrap();
        let s = Spectrum::new(&h).unwrap();
        for (t1, t2) in [(1.0, 2.5), (30.0, 47.3), (120.0, 80.0)] {
            let lhs = s.exp_matrix(t1 + t2);
            let rhs = s.exp_matrix(t1) * s.exp_matrix(t2);
            assert!(max_abs_diff(&lhs, &rhs) < 1e-9);
        }
    }

    #[test]
    fn coeffs_vanish_at_zero() {
        for p in [
            WaveguideParams::default(),
            WaveguideParams::new(0.9, 1.1, 0.02, 0.013),
            WaveguideParams::new(1.2, 0.9, 0.0, 0.004),
        ] {
            let c = disentangle_coeffs(&p, 0.0).unwrap();
            assert!(
                c.f1.norm() < 1e-12 && c.f2.norm() < 1e-12 && c.f3.norm() < 1e-12,
                "{p:?}: {c:?}"
            );
        }
    }

    #[test]
    fn coeffs_resonant_closed_form() {
        let p = WaveguideParams::default();
        let k = 2f64.sqrt() * 0.01;
        for t in [1.0, 20.0, 50.0, 100.0] {
            let c = disentangle_coeffs(&p, t).unwrap();
            let x = k * t;
            assert!((c.f1 - Complex64::new(x.tan(), 0.0)).norm() < 1e-12, "t={t}");
            let f2 = -I * Complex64::new(x.cos(), 0.0).ln();
            assert!((c.f2 - f2).norm() < 1e-12, "t={t}");
            assert_eq!(c.f1, c.f3);
        }
    }

    #[test]
    fn zero_coupling_is_degenerate() {
        let p = WaveguideParams::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(disentangle_coeffs(&p, 1.0), Err(Error::DegenerateCoupling));
        assert!(matches!(
            propagator_analytic(&p, &default_block(), 1.0),
            Err(Error::DegenerateCoupling)
        ));
    }

    /// Gauss decomposition of the 2x2 matrix exp(-it[Ω2 σz + k σx]).
    fn two_by_two_product(c: &DisentangleCoeffs) -> CMatrix {
        let ef = (-I * c.f2).exp();
        let raise = CMatrix::from_row_slice(2, 2, &[ONE, -I * c.f1, 0.0.into(), ONE]);
        let rot = CMatrix::from_row_slice(2, 2, &[ef, 0.0.into(), 0.0.into(), ONE / ef]);
        let lower = CMatrix::from_row_slice(2, 2, &[ONE, 0.0.into(), -I * c.f3, ONE]);
        raise * rot * lower
    }

    fn two_by_two_direct(omega2: f64, g: f64, t: f64) -> CMatrix {
        let k = 2f64.sqrt() * g;
        let gen = CMatrix::from_row_slice(2, 2, &[omega2.into(), k.into(), k.into(), (-omega2).into()]);
        expm_series(&(gen * (-I * t)))
    }

    #[test]
    fn coeffs_reproduce_two_by_two_identity() {
        for &(omega2, g) in &[(0.5, 0.01), (0.02, 0.01), (-0.07, 0.03), (0.0, 0.01), (1e-4, 0.02)] {
            let p = WaveguideParams::new(1.0 - 2.0 * omega2, 1.0, 0.0, g);
            assert!((p.omega2() - omega2).abs() < 1e-15);
            for t in [0.0, 1.0, 13.0, 60.0, 150.0] {
                let c = disentangle_coeffs(&p, t).unwrap();
                if c.modulus() < 1e-3 {
                    continue;
                }
                let dev = max_abs_diff(&two_by_two_product(&c), &two_by_two_direct(omega2, g, t));
                assert!(dev < 1e-9, "Ω2={omega2} g={g} t={t}: {dev:e}");
            }
        }
    }

    #[test]
    fn f2_is_continuous_through_many_periods() {
        let p = WaveguideParams::new(0.9, 1.0, 0.0, 0.01);
        let mut prev = disentangle_coeffs(&p, 0.0).unwrap().f2;
        for k in 1..=4000 {
            let f2 = disentangle_coeffs(&p, k as f64 * 0.25).unwrap().f2;
            assert!((f2 - prev).norm() < 0.05, "jump at t = {}", k as f64 * 0.25);
            prev = f2;
        }
    }

    #[test]
    fn analytic_at_zero_is_identity() {
        let u = propagator_analytic(&WaveguideParams::default(), &default_block(), 0.0).unwrap();
        assert!(max_abs_diff(&u.matrix, &CMatrix::identity(10, 10)) < 1e-14);
    }

    #[test]
    fn analytic_matches_conjugated_oracle() {
        let b = default_block();
        let p = WaveguideParams::default();
        let ut = mode_transform(&b).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        let spectrum = Spectrum::new(&h).unwrap();
        for t in [10.0, 67.6, 100.0, 111.07, 200.0] {
            let a = propagator_analytic(&p, &b, t).unwrap();
            let want = &ut * spectrum.exp_matrix(t) * ut.adjoint();
            let dev = max_abs_diff(&a.matrix, &want);
            assert!(dev < 1e-9, "t={t}: {dev:e}");
            assert!(a.unitarity_deviation() < 1e-9);
        }
    }

    #[test]
    fn splitting_repairs_precision_near_singularity() {
        let b = default_block();
        let p = WaveguideParams::default();
        let ap = AnalyticPropagator::new(&p, &b).unwrap();
        let h = build_reduced_hamiltonian(&p, &b).unwrap();
        let spectrum = Spectrum::new(&h).unwrap();
        let t_sing = FRAC_PI_2 / (2f64.sqrt() * 0.01);
        for dt in [1e-3, 1e-2, 0.1, 0.5] {
            let t = t_sing + dt;
            let dev = max_abs_diff(&ap.matrix(t).unwrap(), &spectrum.exp_matrix(t));
            assert!(dev < 1e-10, "dt={dt}: {dev:e}");
        }
        // exactly on the singular time the bare product cannot be formed
        let exact = ap.factorized(t_sing);
        assert!(exact.is_err() || max_abs(&exact.unwrap()) > 1e3);
        assert!(max_abs_diff(&ap.matrix(t_sing).unwrap(), &spectrum.exp_matrix(t_sing)) < 1e-10);
    }

    #[test]
    fn single_photon_block_is_a_two_level_rotation() {
        let b = enumerate_basis(3, 1).unwrap();
        let p = WaveguideParams::new(0.96, 1.0, 0.0, 0.01);
        let (omega2, k, w) = (p.omega2(), 2f64.sqrt() * p.g, p.rabi_frequency());
        let t = 37.0;
        let u = propagator_analytic(&p, &b, t).unwrap();
        // block {|100⟩, |010⟩}: exp(-itΩ1) [cos wt ∓ iΩ2/w sin wt on the diagonal, -ik/w sin wt off]
        let (s, c) = (w * t).sin_cos();
        let ph = (-I * (t * p.omega1())).exp();
        let i0 = b.index_of(&FockState::new([1, 0, 0])).unwrap();
        let ia = b.index_of(&FockState::new([0, 1, 0])).unwrap();
        let want00 = ph * Complex64::new(c, omega2 / w * s);
        let want11 = ph * Complex64::new(c, -omega2 / w * s);
        let want01 = ph * Complex64::new(0.0, -k / w * s);
        assert!((u.matrix[(i0, i0)] - want00).norm() < 1e-12);
        assert!((u.matrix[(ia, ia)] - want11).norm() < 1e-12);
        assert!((u.matrix[(i0, ia)] - want01).norm() < 1e-12);
        assert!((u.matrix[(ia, i0)] - want01).norm() < 1e-12);
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let psi = pair_superposition_state();
        for m in [Method::Oracle, Method::Analytic] {
            let out = evolve(&psi, &WaveguideParams::default(), 0.0, m).unwrap();
            assert!((out.amplitudes() - psi.amplitudes()).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn evolve_rejects_unnormalized() {
        let b = default_block();
        let v = StateVector::new(b, CVector::from_element(10, Complex64::new(1.0, 0.0))).unwrap();
        assert!(matches!(
            evolve(&v, &WaveguideParams::default(), 1.0, Method::Oracle),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn evolve_reproduces_closed_forms_at_first_noon_time() {
        let b = default_block();
        let ev = Evolver::new(&WaveguideParams::default(), &b).unwrap();
        let t1 = 50.0 * 2f64.sqrt() * (1.0 / 3f64.sqrt()).acos();
        let psi = ev.evolve(&pair_superposition_state(), t1, Method::Analytic).unwrap();
        let cf = closed_form_coefficients(t1).state_vector(&b).unwrap();
        let dev = (psi.amplitudes() - cf.amplitudes())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9, "{dev:e}");
    }

    #[test]
    fn methods_agree_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = default_block();
        let p = WaveguideParams::new(0.97, 1.02, 0.004, 0.012);
        let ev = Evolver::new(&p, &b).unwrap();
        for _ in 0..100 {
            let amps = CVector::from_fn(10, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let psi = StateVector::new(b.clone(), amps).unwrap().normalized().unwrap();
            let t = rng.gen_range(0.0..200.0);
            let a = ev.evolve(&psi, t, Method::Analytic).unwrap();
            let o = ev.evolve(&psi, t, Method::Oracle).unwrap();
            let dev = (a.amplitudes() - o.amplitudes())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-9, "t={t}: {dev:e}");
            assert!((a.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn uncoupled_analytic_path_uses_diagonal_phases() {
        let p = WaveguideParams::new(0.9, 1.1, 0.01, 0.0);
        let b = default_block();
        let ev = Evolver::new(&p, &b).unwrap();
        for t in [0.5, 40.0] {
            let a = ev.propagator(t, Method::Analytic).unwrap();
            let o = ev.propagator(t, Method::Oracle).unwrap();
            assert!(max_abs_diff(&a.matrix, &o.matrix) < 1e-10);
        }
    }

    #[test]
    fn closed_forms_at_zero() {
        let c = closed_form_coefficients(0.0);
        assert!((c.c102 - Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        for z in [c.c003, c.c012, c.c111, c.c201, c.c300] {
            assert_eq!(z.norm(), 0.0);
        }
    }

    #[test]
    fn closed_form_suppression_at_first_noon_time() {
        let t1 = 50.0 * 2f64.sqrt() * (1.0 / 3f64.sqrt()).acos();
        let c = closed_form_coefficients(t1);
        assert!(c.c012.norm() < 1e-12);
        assert!(c.c102.norm() < 1e-12 && c.c201.norm() < 1e-12);
        assert!((c.c003.norm() - 2f64.sqrt() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_are_normalized() {
        for k in 0..=400 {
            let t = k as f64 * 0.5;
            assert!(
                (closed_form_coefficients(t).weighted_norm_sqr() - 1.0).abs() < 1e-12,
                "t={t}"
            );
        }
    }

    #[test]
    fn exchange_symmetry_of_evolved_amplitudes() {
        let b = default_block();
        let ev = Evolver::new(&WaveguideParams::new(1.0, 1.0, 0.007, 0.01), &b).unwrap();
        let psi0 = pair_superposition_state();
        for t in [3.0, 77.0, 190.0] {
            let psi = ev.evolve(&psi0, t, Method::Analytic).unwrap();
            for s in b.states() {
                let swapped = FockState::new([s.get(0), s.get(2), s.get(1)]);
                assert!((psi.amplitude(s) - psi.amplitude(&swapped)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn method_parses() {
        assert_eq!("Oracle".parse::<Method>().unwrap(), Method::Oracle);
        assert_eq!("analytic".parse::<Method>().unwrap(), Method::Analytic);
        assert!("pade".parse::<Method>().is_err());
    }
}
