//! Disentangling ODEs for `U2(t) = exp(-it[Ω2 Jz + √2 g (J+ + J-)])`.
//!
//! Writing `U2 = exp(-i f1 J+) exp(-i f2 Jz) exp(-i f3 J-)`, differentiating,
//! and moving every generator to the left with the adjoint actions
//!
//! ```text
//! e^{-i f1 J+} Jz e^{i f1 J+} = Jz + 2i f1 J+
//! e^{-i f2 Jz} J- e^{i f2 Jz} = e^{2i f2} J-
//! e^{-i f1 J+} J- e^{i f1 J+} = J- - i f1 Jz + f1² J+
//! ```
//!
//! gives, after matching the coefficients of `J-`, `Jz`, `J+`:
//!
//! ```text
//! f3' = √2 g e^{-2i f2}
//! f2' = Ω2 + i f1 f3' e^{2i f2}           = Ω2 + i √2 g f1
//! f1' = √2 g - 2i f1 f2' - f1² f3' e^{2i f2} = √2 g - 2i Ω2 f1 + √2 g f1²
//! ```
//!
//! with `f1(0) = f2(0) = f3(0) = 0`. `f1` and `f3` obey the same equation
//! and initial value, hence `f3 = f1`.

use num_complex::Complex64;

use crate::error::{arg_err, Error, Result};
use crate::evolution::{disentangle_coeffs_for, hermitian_exp};
use crate::fock::enumerate_basis;
use crate::hamiltonian::CollectiveGenerators;
use crate::linalg::{diagonal_exp, max_abs_diff, nilpotent_exp, real_diagonal, CMatrix, I, ONE, ZERO};

/// Integration stops with an error once `|exp(i f2)|` falls below this.
pub const SINGULARITY_MODULUS: f64 = 1e-3;

pub type WnState = [Complex64; 3];

/// Right-hand side `(f1', f2', f3')` of the disentangling system.
pub fn wn_rhs(f: &WnState, omega2: f64, g: f64) -> WnState {
    let k = Complex64::new(2f64.sqrt() * g, 0.0);
    let [f1, f2, _] = *f;
    let df3 = k * (-2.0 * I * f2).exp();
    let df2 = omega2 + I * f1 * df3 * (2.0 * I * f2).exp();
    let df1 = k - 2.0 * I * f1 * df2 - f1 * f1 * df3 * (2.0 * I * f2).exp();
    [df1, df2, df3]
}

fn axpy(y: &WnState, h: f64, d: &WnState) -> WnState {
    [y[0] + d[0] * h, y[1] + d[1] * h, y[2] + d[2] * h]
}

fn rk4_step(y: &WnState, h: f64, omega2: f64, g: f64) -> WnState {
    let k1 = wn_rhs(y, omega2, g);
    let k2 = wn_rhs(&axpy(y, h / 2.0, &k1), omega2, g);
    let k3 = wn_rhs(&axpy(y, h / 2.0, &k2), omega2, g);
    let k4 = wn_rhs(&axpy(y, h, &k3), omega2, g);
    std::array::from_fn(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0))
}

/// Sampled solution of the disentangling system.
#[derive(Debug, Clone)]
pub struct WnTrajectory {
    pub times: Vec<f64>,
    pub f1: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    pub f3: Vec<Complex64>,
    pub omega2: f64,
    pub g: f64,
}

impl WnTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (f64, WnState) {
        let k = self.times.len() - 1;
        (self.times[k], [self.f1[k], self.f2[k], self.f3[k]])
    }

    /// `max_k |f3(t_k) - f1(t_k)|`
    pub fn max_f3_f1_gap(&self) -> f64 {
        self.f1
            .iter()
            .zip(&self.f3)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `(f1, f2)` from the closed forms over the samples.
    pub fn max_closed_form_error(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (k, &t) in self.times.iter().enumerate() {
            let c = disentangle_coeffs_for(self.omega2, self.g, t)?;
            worst = worst.max((c.f1 - self.f1[k]).norm()).max((c.f2 - self.f2[k]).norm());
        }
        Ok(worst)
    }

    /// Deviation of the factorized product built from the final sample
    /// from the direct exponential, in the 2x2 and the three-photon Fock
    /// representations.
    pub fn reconstruction_error(&self) -> Result<(f64, f64)> {
        let (t, [f1, f2, f3]) = self.last();
        let two = max_abs_diff(
            &Representation::two_by_two().factorized(f1, f2, f3),
            &direct_two_by_two(self.omega2, self.g, t),
        );
        let fock = Representation::fock(3)?;
        let direct = fock.direct(self.omega2, self.g, t)?;
        Ok((two, max_abs_diff(&fock.factorized(f1, f2, f3), &direct)))
    }
}

/// Fixed-step RK4 from `f = 0` at `t = 0` to `t_end`. The final step is
/// shortened to land exactly on `t_end`.
pub fn integrate_wn(omega2: f64, g: f64, t_end: f64, step: f64) -> Result<WnTrajectory> {
    if !(step.is_finite() && t_end.is_finite() && step > 0.0 && t_end > 0.0) {
        return arg_err(format!(
            "need step > 0 and t_end > 0, got step = {step}, t_end = {t_end}"
        ));
    }
    let steps = (t_end / step).ceil() as usize;
    let mut traj = WnTrajectory {
        times: Vec::with_capacity(steps + 1),
        f1: Vec::with_capacity(steps + 1),
        f2: Vec::with_capacity(steps + 1),
        f3: Vec::with_capacity(steps + 1),
        omega2,
        g,
    };
    let mut y: WnState = [ZERO; 3];
    let mut t = 0.0;
    let push = |traj: &mut WnTrajectory, t: f64, y: &WnState| {
        traj.times.push(t);
        traj.f1.push(y[0]);
        traj.f2.push(y[1]);
        traj.f3.push(y[2]);
    };
    push(&mut traj, t, &y);
    for n in 1..=steps {
        let t_next = if n == steps { t_end } else { n as f64 * step };
        y = rk4_step(&y, t_next - t, omega2, g);
        t = t_next;
        let modulus = (I * y[1]).exp().norm();
        if modulus.is_nan() || modulus < SINGULARITY_MODULUS {
            return Err(Error::SingularityProximity { t, modulus });
        }
        push(&mut traj, t, &y);
    }
    Ok(traj)
}

/// A matrix representation of `J+, J-, Jz`.
#[derive(Debug, Clone)]
pub struct Representation {
    pub j_plus: CMatrix,
    pub j_minus: CMatrix,
    pub j_z: CMatrix,
    jz_diag: Vec<f64>,
}

impl Representation {
    /// `J+ = [[0,1],[0,0]]`, `J- = [[0,0],[1,0]]`, `Jz = diag(1,-1)`.
    pub fn two_by_two() -> Self {
        let j_plus = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let j_minus = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let j_z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        Self {
            jz_diag: real_diagonal(&j_z),
            j_plus,
            j_minus,
            j_z,
        }
    }

    /// The collective-mode generators on the `total_quanta` photon block.
    pub fn fock(total_quanta: u32) -> Result<Self> {
        let basis = enumerate_basis(3, total_quanta)?;
        let gens = CollectiveGenerators::new(&basis)?;
        Ok(Self {
            jz_diag: real_diagonal(&gens.j_z),
            j_plus: gens.j_plus,
            j_minus: gens.j_minus,
            j_z: gens.j_z,
        })
    }

    pub fn dim(&self) -> usize {
        self.j_z.nrows()
    }

    pub fn exp_plus(&self, coeff: Complex64) -> CMatrix {
        nilpotent_exp(&self.j_plus, coeff)
    }

    pub fn exp_minus(&self, coeff: Complex64) -> CMatrix {
        nilpotent_exp(&self.j_minus, coeff)
    }

    pub fn exp_z(&self, coeff: Complex64) -> CMatrix {
        diagonal_exp(&self.jz_diag, coeff)
    }

    /// `exp(-i f1 J+) exp(-i f2 Jz) exp(-i f3 J-)`
    pub fn factorized(&self, f1: Complex64, f2: Complex64, f3: Complex64) -> CMatrix {
        self.exp_plus(-I * f1) * self.exp_z(-I * f2) * self.exp_minus(-I * f3)
    }

    /// `exp(-it[Ω2 Jz + √2 g (J+ + J-)])` by eigendecomposition.
    pub fn direct(&self, omega2: f64, g: f64, t: f64) -> Result<CMatrix> {
        let gen = &self.j_z * Complex64::new(omega2, 0.0)
            + (&self.j_plus + &self.j_minus) * Complex64::new(2f64.sqrt() * g, 0.0);
        hermitian_exp(&gen, t)
    }
}

/// `exp(-it[Ω2 σz + √2 g σx]) = cos(wt) - i sin(wt)/w [Ω2 σz + √2 g σx]`.
pub fn direct_two_by_two(omega2: f64, g: f64, t: f64) -> CMatrix {
    let k = 2f64.sqrt() * g;
    let w = (k * k + omega2 * omega2).sqrt();
    let (s, c) = (w * t).sin_cos();
    let sw = if w == 0.0 { t } else { s / w };
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, -omega2 * sw),
            Complex64::new(0.0, -k * sw),
            Complex64::new(0.0, -k * sw),
            Complex64::new(c, omega2 * sw),
        ],
    )
}

/// Max entrywise deviation of each adjoint identity, over the 2x2 and the
/// three-photon Fock representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointReport {
    /// `e^{-i f1 J+} Jz e^{i f1 J+} = Jz + 2i f1 J+`
    pub jz_under_raise: f64,
    /// `e^{-i f2 Jz} J- e^{i f2 Jz} = e^{2i f2} J-`
    pub lower_under_rotation: f64,
    /// `e^{-i f1 J+} J- e^{i f1 J+} = J- - i f1 Jz + f1² J+`
    pub lower_under_raise: f64,
}

impl AdjointReport {
    pub fn max(&self) -> f64 {
        self.jz_under_raise
            .max(self.lower_under_rotation)
            .max(self.lower_under_raise)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

fn adjoint_deviations(rep: &Representation, f1: Complex64, f2: Complex64) -> [f64; 3] {
    let raise = rep.exp_plus(-I * f1);
    let raise_inv = rep.exp_plus(I * f1);
    let rot = rep.exp_z(-I * f2);
    let rot_inv = rep.exp_z(I * f2);

    let a = max_abs_diff(
        &(&raise * &rep.j_z * &raise_inv),
        &(&rep.j_z + &rep.j_plus * (2.0 * I * f1)),
    );
    let b = max_abs_diff(
        &(&rot * &rep.j_minus * &rot_inv),
        &(&rep.j_minus * (2.0 * I * f2).exp()),
    );
    let c = max_abs_diff(
        &(&raise * &rep.j_minus * &raise_inv),
        &(&rep.j_minus - &rep.j_z * (I * f1) + &rep.j_plus * (f1 * f1)),
    );
    [a, b, c]
}

/// Check the three adjoint identities for given `f1`, `f2`.
pub fn verify_adjoint_identities(f1: Complex64, f2: Complex64) -> Result<AdjointReport> {
    let small = adjoint_deviations(&Representation::two_by_two(), f1, f2);
    let fock = adjoint_deviations(&Representation::fock(3)?, f1, f2);
    Ok(AdjointReport {
        jz_under_raise: small[0].max(fock[0]),
        lower_under_rotation: small[1].max(fock[1]),
        lower_under_raise: small[2].max(fock[2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rhs_at_origin() {
        let d = wn_rhs(&[ZERO; 3], 0.3, 0.01);
        let k = 2f64.sqrt() * 0.01;
        assert!((d[0] - c(k, 0.0)).norm() < 1e-16);
        assert!((d[1] - c(0.3, 0.0)).norm() < 1e-16);
        assert!((d[2] - c(k, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn rhs_on_resonant_closed_form() {
        let g = 0.01;
        let k = 2f64.sqrt() * g;
        for x in [0.1, 0.5, 1.2] {
            let f1 = c(f64::tan(x), 0.0);
            let f2 = -I * c(x.cos(), 0.0).ln();
            let d = wn_rhs(&[f1, f2, f1], 0.0, g);
            let sec2 = 1.0 / x.cos().powi(2);
            assert!((d[0] - c(k * sec2, 0.0)).norm() < 1e-14 * sec2);
            assert!((d[2] - c(k * sec2, 0.0)).norm() < 1e-14 * sec2);
            // f2 = -i ln cos x  =>  f2' = i k tan x
            assert!((d[1] - c(0.0, k * x.tan())).norm() < 1e-14);
        }
    }

    #[test]
    fn rhs_without_coupling_is_pure_rotation() {
        let f = [c(0.2, 0.1), c(-0.4, 0.3), c(0.2, 0.1)];
        let d = wn_rhs(&f, 0.05, 0.0);
        assert_eq!(d[0], ZERO - 2.0 * I * f[0] * 0.05);
        assert_eq!(d[2], ZERO);
        assert_eq!(d[1], c(0.05, 0.0));
    }

    #[test]
    fn rhs_matches_finite_difference_of_closed_forms() {
        let (omega2, g) = (0.02, 0.01);
        for t in [3.0, 17.0, 41.0] {
            let h = 1e-5;
            let at = |t| disentangle_coeffs_for(omega2, g, t).unwrap();
            let (lo, mid, hi) = (at(t - h), at(t), at(t + h));
            let d = wn_rhs(&[mid.f1, mid.f2, mid.f3], omega2, g);
            assert!(((hi.f1 - lo.f1) / (2.0 * h) - d[0]).norm() < 1e-8);
            assert!(((hi.f2 - lo.f2) / (2.0 * h) - d[1]).norm() < 1e-8);
            assert!(((hi.f3 - lo.f3) / (2.0 * h) - d[2]).norm() < 1e-8);
        }
    }

    #[test]
    fn resonant_integration_hits_tangent() {
        let traj = integrate_wn(0.0, 0.01, 50.0, 0.01).unwrap();
        let (t, f) = traj.last();
        assert_eq!(t, 50.0);
        let x = 2f64.sqrt() * 0.01 * 50.0;
        assert!((f[0] - c(x.tan(), 0.0)).norm() < 1e-6);
        assert!(traj.max_f3_f1_gap() < 1e-8);
        assert!(traj.max_closed_form_error().unwrap() < 1e-6);
    }

    #[test]
    fn detuned_integration_matches_two_by_two() {
        let traj = integrate_wn(0.02, 0.01, 30.0, 0.005).unwrap();
        assert!(traj.max_closed_form_error().unwrap() < 1e-6);
        let (two, fock) = traj.reconstruction_error().unwrap();
        assert!(two < 1e-6 && fock < 1e-6, "{two:e} {fock:e}");
    }

    #[test]
    fn tiny_horizon_stays_at_origin() {
        let traj = integrate_wn(0.1, 0.01, 1e-9, 0.01).unwrap();
        let (_, f) = traj.last();
        assert!(f.iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn bad_inputs() {
        assert!(integrate_wn(0.0, 0.01, 10.0, 0.0).is_err());
        assert!(integrate_wn(0.0, 0.01, -1.0, 0.1).is_err());
        assert!(integrate_wn(0.0, 0.01, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn stops_at_the_singularity() {
        // cos(√2 g t) = 0 at t ≈ 111.07 for g = 0.01
        let err = integrate_wn(0.0, 0.01, 150.0, 0.001).unwrap_err();
        match err {
            Error::SingularityProximity { t, .. } => assert!((t - 111.07).abs() < 0.1, "{t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let exact = c((2f64.sqrt() * 0.01 * 50.0).tan(), 0.0);
        let err = |h| (integrate_wn(0.0, 0.01, 50.0, h).unwrap().last().1[0] - exact).norm();
        let ratio = err(0.625) / err(0.3125);
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn adjoint_identities_trivial() {
        let r = verify_adjoint_identities(ZERO, ZERO).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn adjoint_identities_hold() {
        assert!(verify_adjoint_identities(c(0.3, 0.1), c(0.2, 0.0))
            .unwrap()
            .within(1e-10));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let f1 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let f2 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            assert!(verify_adjoint_identities(f1, f2).unwrap().within(1e-9));
        }
    }

    #[test]
    fn flipped_exponent_in_third_equation_fails_the_resonant_check() {
        // with the exponent sign of f3' flipped, f3 no longer tracks tan(√2 g t)
        let (g, h) = (0.01, 0.01);
        let k = 2f64.sqrt() * g;
        let mut y = [ZERO; 3];
        let steps = 5000;
        for _ in 0..steps {
            let f = |y: &WnState| {
                let mut d = wn_rhs(y, 0.0, g);
                d[2] = k * (2.0 * I * y[1]).exp();
                d
            };
            let k1 = f(&y);
            let k2 = f(&axpy(&y, h / 2.0, &k1));
            let k3 = f(&axpy(&y, h / 2.0, &k2));
            let k4 = f(&axpy(&y, h, &k3));
            y = std::array::from_fn(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0));
        }
        let x = k * steps as f64 * h;
        assert!((y[2] - c(x.tan(), 0.0)).norm() > 0.1);
    }

    #[test]
    fn two_by_two_representation_commutators() {
        let r = Representation::two_by_two();
        assert!(max_abs_diff(&commutator(&r.j_plus, &r.j_minus), &r.j_z) < 1e-15);
        assert!(max_abs_diff(&commutator(&r.j_z, &r.j_plus), &(&r.j_plus * c(2.0, 0.0))) < 1e-15);
    }

    #[test]
    fn fock_direct_matches_factorized_closed_form() {
        let rep = Representation::fock(3).unwrap();
        for (omega2, g, t) in [(0.0, 0.01, 40.0), (0.05, 0.02, 13.0), (-0.03, 0.01, 90.0)] {
            let cf = disentangle_coeffs_for(omega2, g, t).unwrap();
            if cf.modulus() < 0.5 {
                continue;
            }
            let dev = max_abs_diff(&rep.factorized(cf.f1, cf.f2, cf.f3), &rep.direct(omega2, g, t).unwrap());
            assert!(dev < 1e-9, "{dev:e}");
        }
    }
}
