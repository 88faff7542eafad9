//! Occupation-number bases with a fixed total photon number, state vectors over
//! them, and the bosonic ladder operators.
//!
//! Basis states are ordered lexicographically *descending* on the occupation
//! tuple, so for three modes and two photons the order is
//! `|200⟩ |110⟩ |101⟩ |020⟩ |011⟩ |002⟩`. Every table the crate writes follows
//! this order.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{arg_err, Error, Result};
use crate::linalg::{CMatrix, CVector, ZERO};

/// Upper bound on the number of modes a basis may carry.
pub const MAX_MODES: usize = 8;

/// Tolerance on `Σ|c|² = 1` for a state to count as physical.
pub const NORM_TOL: f64 = 1e-12;

/// Photon counts per mode, e.g. `|102⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(Vec<u32>);

impl FockState {
    pub fn new(occupations: impl Into<Vec<u32>>) -> Self {
        Self(occupations.into())
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.0[mode]
    }

    /// The same state with `mode` removed.
    pub fn without_mode(&self, mode: usize) -> Self {
        let mut occ = self.0.clone();
        occ.remove(mode);
        Self(occ)
    }

    /// Compact label: digits run together (`"102"`) when every occupation is
    /// below ten, comma separated otherwise.
    pub fn label(&self) -> String {
        if self.0.iter().all(|&n| n < 10) {
            self.0.iter().map(|n| n.to_string()).collect()
        } else {
            self.0.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
        }
    }

    /// Inverse of [`FockState::label`] for the digit-string form.
    pub fn parse_label(label: &str, mode_count: usize) -> Result<Self> {
        let label = label.trim();
        let occ: Vec<u32> = if label.contains(',') {
            label
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Argument(format!("bad ket label {label:?}: {e}")))?
        } else {
            label
                .chars()
                .map(|c| c.to_digit(10))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Argument(format!("bad ket label {label:?}")))?
        };
        if occ.len() != mode_count {
            return arg_err(format!(
                "ket label {label:?} has {} modes, expected {mode_count}",
                occ.len()
            ));
        }
        Ok(Self(occ))
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.label())
    }
}

/// All Fock states of `mode_count` modes holding exactly `total_quanta` photons.
#[derive(Debug, Clone)]
pub struct FockBasis {
    mode_count: usize,
    total_quanta: u32,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        // the enumeration is a function of these two numbers
        self.mode_count == other.mode_count && self.total_quanta == other.total_quanta
    }
}

impl Eq for FockBasis {}

impl FockBasis {
    pub fn new(mode_count: usize, total_quanta: u32) -> Result<Self> {
        if mode_count == 0 || mode_count > MAX_MODES {
            return arg_err(format!("mode_count must be in 1..={MAX_MODES}, got {mode_count}"));
        }
        let mut states = Vec::with_capacity(basis_dimension(mode_count, total_quanta));
        let mut prefix = Vec::with_capacity(mode_count);
        fill_descending(mode_count, total_quanta, &mut prefix, &mut states);
        let index = states.iter().cloned().enumerate().map(|(k, s)| (s, k)).collect();
        Ok(Self {
            mode_count,
            total_quanta,
            states,
            index,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn total_quanta(&self) -> u32 {
        self.total_quanta
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> &FockState {
        &self.states[k]
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn labels(&self) -> Vec<String> {
        self.states.iter().map(FockState::label).collect()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_count {
            return arg_err(format!("mode {mode} out of range for {} modes", self.mode_count));
        }
        Ok(())
    }
}

fn fill_descending(modes_left: usize, quanta_left: u32, prefix: &mut Vec<u32>, out: &mut Vec<FockState>) {
    if modes_left == 1 {
        prefix.push(quanta_left);
        out.push(FockState(prefix.clone()));
        prefix.pop();
        return;
    }
    for n in (0..=quanta_left).rev() {
        prefix.push(n);
        fill_descending(modes_left - 1, quanta_left - n, prefix, out);
        prefix.pop();
    }
}

/// `C(N + m - 1, m - 1)`
pub fn basis_dimension(mode_count: usize, total_quanta: u32) -> usize {
    let n = total_quanta as u64 + mode_count as u64 - 1;
    let k = (mode_count as u64 - 1).min(total_quanta as u64);
    (1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i) as usize
}

/// Shared handle to the basis of `mode_count` modes with `total_quanta` photons.
pub fn enumerate_basis(mode_count: usize, total_quanta: u32) -> Result<Arc<FockBasis>> {
    FockBasis::new(mode_count, total_quanta).map(Arc::new)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// Matrix of `a_mode` or `a_mode^†` from `basis` into the adjacent basis.
///
/// Lowering the vacuum has no `N - 1` basis to land in; the image is then the
/// zero map onto the vacuum basis itself.
pub fn ladder_matrix(basis: &Arc<FockBasis>, mode: usize, dir: Ladder) -> Result<(Arc<FockBasis>, CMatrix)> {
    basis.check_mode(mode)?;
    let target = match dir {
        Ladder::Raise => enumerate_basis(basis.mode_count, basis.total_quanta + 1)?,
        Ladder::Lower if basis.total_quanta == 0 => {
            return Ok((basis.clone(), CMatrix::zeros(1, 1)));
        }
        Ladder::Lower => enumerate_basis(basis.mode_count, basis.total_quanta - 1)?,
    };
    let mut m = CMatrix::zeros(target.len(), basis.len());
    for (col, s) in basis.states.iter().enumerate() {
        let n = s.0[mode];
        let mut occ = s.0.clone();
        let factor = match dir {
            Ladder::Raise => {
                occ[mode] += 1;
                ((n + 1) as f64).sqrt()
            }
            Ladder::Lower if n == 0 => continue,
            Ladder::Lower => {
                occ[mode] -= 1;
                (n as f64).sqrt()
            }
        };
        let row = target.index_of(&FockState(occ)).expect("adjacent basis is complete");
        m[(row, col)] = Complex64::new(factor, 0.0);
    }
    Ok((target, m))
}

/// `a_to^† a_from` on a fixed-N basis (number conserving).
pub fn hopping_matrix(basis: &FockBasis, to: usize, from: usize) -> Result<CMatrix> {
    basis.check_mode(to)?;
    basis.check_mode(from)?;
    let mut m = CMatrix::zeros(basis.len(), basis.len());
    for (col, s) in basis.states.iter().enumerate() {
        let n_from = s.0[from];
        if n_from == 0 {
            continue;
        }
        let mut occ = s.0.clone();
        occ[from] -= 1;
        let lowered = n_from as f64;
        let raised = (occ[to] + 1) as f64;
        occ[to] += 1;
        let row = basis.index_of(&FockState(occ)).expect("number conserving");
        m[(row, col)] += Complex64::new((lowered * raised).sqrt(), 0.0);
    }
    Ok(m)
}

/// `a_mode^† a_mode`
pub fn number_matrix(basis: &FockBasis, mode: usize) -> Result<CMatrix> {
    basis.check_mode(mode)?;
    let d = CVector::from_iterator(
        basis.len(),
        basis.states.iter().map(|s| Complex64::new(s.0[mode] as f64, 0.0)),
    );
    Ok(CMatrix::from_diagonal(&d))
}

/// Complex amplitudes over a [`FockBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(basis: Arc<FockBasis>, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return arg_err(format!(
                "{} amplitudes for a basis of {} states",
                amplitudes.len(),
                basis.len()
            ));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn zeros(basis: Arc<FockBasis>) -> Self {
        let amplitudes = CVector::zeros(basis.len());
        Self { basis, amplitudes }
    }

    /// Unit amplitude on a single basis ket.
    pub fn basis_state(basis: Arc<FockBasis>, state: &FockState) -> Result<Self> {
        Self::from_terms(basis, &[(state.clone(), Complex64::new(1.0, 0.0))])
    }

    /// Sum of `amplitude * |state⟩` terms; repeated kets accumulate.
    pub fn from_terms(basis: Arc<FockBasis>, terms: &[(FockState, Complex64)]) -> Result<Self> {
        let mut v = Self::zeros(basis);
        for (s, c) in terms {
            let k = v.basis.index_of(s).ok_or_else(|| {
                Error::Argument(format!(
                    "{s} is not in the basis of {} modes with {} photons",
                    v.basis.mode_count, v.basis.total_quanta
                ))
            })?;
            v.amplitudes[k] += c;
        }
        Ok(v)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn amplitude(&self, state: &FockState) -> Complex64 {
        self.basis.index_of(state).map_or(ZERO, |k| self.amplitudes[k])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn require_normalized(&self, tol: f64) -> Result<()> {
        if self.is_normalized(tol) {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    /// Rescaled to unit norm; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr().sqrt();
        (n > 0.0).then(|| Self {
            basis: self.basis.clone(),
            amplitudes: &self.amplitudes / Complex64::new(n, 0.0),
        })
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(format!(
                "({} modes, N={}) vs ({} modes, N={})",
                self.basis.mode_count, self.basis.total_quanta, other.basis.mode_count, other.basis.total_quanta
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Apply a square operator expressed in this state's basis.
    pub fn apply(&self, op: &CMatrix) -> Result<Self> {
        if op.nrows() != self.basis.len() || op.ncols() != self.basis.len() {
            return Err(Error::BasisMismatch(format!(
                "{}x{} operator on a {}-dimensional state",
                op.nrows(),
                op.ncols(),
                self.basis.len()
            )));
        }
        Ok(Self {
            basis: self.basis.clone(),
            amplitudes: op * &self.amplitudes,
        })
    }

    /// `a_mode` or `a_mode^†` applied to the state. The result lives in the
    /// adjacent fixed-N basis (see [`ladder_matrix`]).
    pub fn apply_ladder(&self, mode: usize, dir: Ladder) -> Result<Self> {
        let (target, m) = ladder_matrix(&self.basis, mode, dir)?;
        let amplitudes = &m * &self.amplitudes;
        Ok(Self {
            basis: target,
            amplitudes,
        })
    }

    /// `⟨n_mode⟩ = Σ_k n_mode(k) |c_k|²`
    pub fn number_expectation(&self, mode: usize) -> Result<f64> {
        self.basis.check_mode(mode)?;
        Ok(self
            .basis
            .states
            .iter()
            .zip(self.amplitudes.iter())
            .map(|(s, c)| s.0[mode] as f64 * c.norm_sqr())
            .sum())
    }
}

pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.inner_product(b)
}

pub fn apply_ladder(state: &StateVector, mode: usize, dir: Ladder) -> Result<StateVector> {
    state.apply_ladder(mode, dir)
}

pub fn number_operator_expectation(state: &StateVector, mode: usize) -> Result<f64> {
    state.number_expectation(mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket(s: &str) -> FockState {
        FockState::parse_label(s, s.len()).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_basis() {
        let b = FockBasis::new(3, 0).unwrap();
        assert_eq!(b.states(), &[ket("000")]);
    }

    #[test]
    fn three_photons_three_modes() {
        let b = FockBasis::new(3, 3).unwrap();
        assert_eq!(b.len(), 10);
        for s in ["300", "111", "003"] {
            assert!(b.index_of(&ket(s)).is_some(), "{s}");
        }
        let labels = b.labels();
        assert_eq!(
            labels,
            ["300", "210", "201", "120", "111", "102", "030", "021", "012", "003"]
        );
    }

    #[test]
    fn two_modes_stars_and_bars() {
        let b = FockBasis::new(2, 3).unwrap();
        assert_eq!(b.labels(), ["30", "21", "12", "03"]);
    }

    #[test]
    fn dimension_formula_matches_enumeration() {
        for m in 1..=5 {
            for n in 0..=6 {
                let b = FockBasis::new(m, n).unwrap();
                assert_eq!(b.len(), basis_dimension(m, n), "m={m} n={n}");
                assert!(b.states().iter().all(|s| s.total() == n));
                let mut sorted = b.states().to_vec();
                sorted.dedup();
                assert_eq!(sorted.len(), b.len());
                for (k, s) in b.states().iter().enumerate() {
                    assert_eq!(b.index_of(s), Some(k));
                }
            }
        }
    }

    #[test]
    fn rejects_zero_modes() {
        assert!(FockBasis::new(0, 2).is_err());
    }

    #[test]
    fn label_round_trip() {
        assert_eq!(FockState::parse_label("102", 3).unwrap(), FockState::new([1, 0, 2]));
        assert_eq!(FockState::parse_label("10,0,2", 3).unwrap(), FockState::new([10, 0, 2]));
        assert_eq!(FockState::new([10, 0, 2]).label(), "10,0,2");
        assert!(FockState::parse_label("12", 3).is_err());
        assert!(FockState::parse_label("1x2", 3).is_err());
    }

    #[test]
    fn lowering_examples() {
        let b = enumerate_basis(3, 3).unwrap();
        let psi = StateVector::basis_state(b, &ket("102")).unwrap();

        let out = psi.apply_ladder(0, Ladder::Lower).unwrap();
        assert_eq!(out.basis().total_quanta(), 2);
        assert!((out.amplitude(&ket("002")) - c(1.0)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-15);

        let out = psi.apply_ladder(2, Ladder::Lower).unwrap();
        assert!((out.amplitude(&ket("101")) - c(2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn lowering_vacuum_is_zero() {
        let b = enumerate_basis(3, 0).unwrap();
        let vac = StateVector::basis_state(b, &ket("000")).unwrap();
        for mode in 0..3 {
            assert_eq!(vac.apply_ladder(mode, Ladder::Lower).unwrap().norm_sqr(), 0.0);
        }
    }

    #[test]
    fn raising_goes_up_one_block() {
        let b = enumerate_basis(3, 3).unwrap();
        let psi = StateVector::basis_state(b, &ket("102")).unwrap();
        let out = psi.apply_ladder(1, Ladder::Raise).unwrap();
        assert_eq!(out.basis().total_quanta(), 4);
        assert!((out.amplitude(&ket("112")) - c(1.0)).norm() < 1e-15);
        assert!(psi.apply_ladder(3, Ladder::Raise).is_err());
    }

    #[test]
    fn number_expectations() {
        let b = enumerate_basis(3, 3).unwrap();
        let psi = StateVector::basis_state(b.clone(), &ket("102")).unwrap();
        assert_eq!(psi.number_expectation(2).unwrap(), 2.0);

        let sym =
            StateVector::from_terms(b, &[(ket("102"), c(FRAC_1_SQRT_2)), (ket("120"), c(FRAC_1_SQRT_2))]).unwrap();
        assert!((sym.number_expectation(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((sym.number_expectation(0).unwrap() - 1.0).abs() < 1e-15);
        assert!(sym.number_expectation(3).is_err());
    }

    #[test]
    fn inner_products() {
        let b = enumerate_basis(3, 3).unwrap();
        let a = StateVector::basis_state(b.clone(), &ket("102")).unwrap();
        let d = StateVector::basis_state(b, &ket("120")).unwrap();
        assert_eq!(a.inner_product(&d).unwrap(), ZERO);
        assert!((a.inner_product(&a).unwrap() - c(1.0)).norm() < 1e-15);

        let b2 = enumerate_basis(2, 3).unwrap();
        let noon = StateVector::from_terms(
            b2.clone(),
            &[(ket("03"), c(FRAC_1_SQRT_2)), (ket("30"), c(FRAC_1_SQRT_2))],
        )
        .unwrap();
        let k03 = StateVector::basis_state(b2, &ket("03")).unwrap();
        assert!((noon.inner_product(&k03).unwrap() - c(FRAC_1_SQRT_2)).norm() < 1e-15);

        assert!(matches!(a.inner_product(&k03), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_slot() {
        let b = enumerate_basis(2, 1).unwrap();
        let a = StateVector::basis_state(b.clone(), &ket("10")).unwrap();
        let scaled = StateVector::new(b, a.amplitudes() * Complex64::new(0.0, 2.0)).unwrap();
        assert_eq!(scaled.inner_product(&a).unwrap(), Complex64::new(0.0, -2.0));
        assert_eq!(a.inner_product(&scaled).unwrap(), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn canonical_commutator_on_every_block() {
        for n in 0..=4u32 {
            let b = enumerate_basis(3, n).unwrap();
            let id = CMatrix::identity(b.len(), b.len());
            for mode in 0..3 {
                let (up, raise) = ladder_matrix(&b, mode, Ladder::Raise).unwrap();
                let (_, lower_back) = ladder_matrix(&up, mode, Ladder::Lower).unwrap();
                let a_adag = &lower_back * &raise;
                let adag_a = if n == 0 {
                    CMatrix::zeros(1, 1)
                } else {
                    let (down, lower) = ladder_matrix(&b, mode, Ladder::Lower).unwrap();
                    let (_, raise_back) = ladder_matrix(&down, mode, Ladder::Raise).unwrap();
                    &raise_back * &lower
                };
                assert!(max_abs_diff(&(a_adag - &adag_a), &id) < 1e-13, "N={n} mode={mode}");
                assert!(max_abs_diff(&adag_a, &number_matrix(&b, mode).unwrap()) < 1e-13);
            }
        }
    }

    #[test]
    fn hopping_is_raise_after_lower() {
        let b = enumerate_basis(3, 3).unwrap();
        for (to, from) in [(0, 1), (1, 2), (2, 0)] {
            let (down, lower) = ladder_matrix(&b, from, Ladder::Lower).unwrap();
            let (_, raise) = ladder_matrix(&down, to, Ladder::Raise).unwrap();
            assert!(max_abs_diff(&(raise * lower), &hopping_matrix(&b, to, from).unwrap()) < 1e-14);
        }
    }

    fn arb_amps(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
    }

    proptest! {
        #[test]
        fn ladder_is_linear(
            a in arb_amps(10),
            b in arb_amps(10),
            alpha in (-2.0..2.0f64, -2.0..2.0f64),
            mode in 0usize..3,
            raise in any::<bool>(),
        ) {
            let basis = enumerate_basis(3, 3).unwrap();
            let to_vec = |v: &[(f64, f64)]| CVector::from_iterator(v.len(), v.iter().map(|&(r, i)| Complex64::new(r, i)));
            let alpha = Complex64::new(alpha.0, alpha.1);
            let va = StateVector::new(basis.clone(), to_vec(&a)).unwrap();
            let vb = StateVector::new(basis.clone(), to_vec(&b)).unwrap();
            let combo = StateVector::new(basis, va.amplitudes() * alpha + vb.amplitudes()).unwrap();
            let dir = if raise { Ladder::Raise } else { Ladder::Lower };
            let lhs = combo.apply_ladder(mode, dir).unwrap();
            let rhs = va.apply_ladder(mode, dir).unwrap().amplitudes() * alpha
                + vb.apply_ladder(mode, dir).unwrap().amplitudes();
            let dev = (lhs.amplitudes() - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(dev < 1e-12);
        }

        #[test]
        fn basis_index_is_a_bijection(m in 1usize..=5, n in 0u32..=6) {
            let b = FockBasis::new(m, n).unwrap();
            for k in 0..b.len() {
                prop_assert_eq!(b.index_of(b.state(k)), Some(k));
            }
        }
    }
}
