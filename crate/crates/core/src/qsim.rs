//! Ideal quantum simulation of token units: a dense statevector backend for
//! small λ plus a symbolic coset-state form, with predicate (projective)
//! measurement and the transversal Hadamard.
//!
//! Amplitude index `i` corresponds to the [`BitVec`] whose textual form is
//! the λ-bit binary expansion of `i`, bit 0 most significant. Global phase
//! is ignored throughout; state equality is fidelity ≥ 1 − 1e−9.

use num_complex::Complex64;
use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::f2linalg::{BitVec, F2Error, Subspace};

/// Largest λ the dense backend will expand (2^16 amplitudes).
pub const STATEVECTOR_CAP: usize = 16;

pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("lambda {0} exceeds the statevector backend cap of {STATEVECTOR_CAP}")]
    LambdaTooLarge(usize),
    #[error("qubit count mismatch: {0} vs {1}")]
    LambdaMismatch(usize, usize),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error(transparent)]
    F2(#[from] F2Error),
}

/// Dense statevector over λ qubits.
#[derive(Clone, Debug)]
pub struct StateVector {
    lambda: usize,
    amps: Vec<Complex64>,
}

/// Outcome of a projective predicate measurement: the measured bit and the
/// renormalized post-measurement state.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub bit: bool,
    pub post_state: StateVector,
}

impl StateVector {
    pub fn basis_state(lambda: usize, v: &BitVec) -> Result<StateVector, QsimError> {
        if lambda > STATEVECTOR_CAP {
            return Err(QsimError::LambdaTooLarge(lambda));
        }
        if v.len() != lambda {
            return Err(QsimError::LambdaMismatch(v.len(), lambda));
        }
        let mut amps = vec![Complex64::ZERO; 1 << lambda];
        amps[v.to_index()] = Complex64::ONE;
        Ok(StateVector { lambda, amps })
    }

    pub fn from_amplitudes(lambda: usize, amps: Vec<Complex64>) -> Result<StateVector, QsimError> {
        if lambda > STATEVECTOR_CAP {
            return Err(QsimError::LambdaTooLarge(lambda));
        }
        assert_eq!(amps.len(), 1 << lambda);
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QsimError::NotNormalized(n));
        }
        Ok(StateVector { lambda, amps })
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, v: &BitVec) -> Complex64 {
        self.amps[v.to_index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Basis indices carrying non-negligible amplitude.
    pub fn support(&self) -> Vec<usize> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 1e-18)
            .map(|(i, _)| i)
            .collect()
    }

    /// λ-fold tensor Hadamard; an involution up to floating-point noise.
    pub fn hadamard_all(&self) -> StateVector {
        let mut amps = self.amps.clone();
        let n = amps.len();
        let mut half = 1usize;
        while half < n {
            let mut base = 0;
            while base < n {
                for i in base..base + half {
                    let a = amps[i];
                    let b = amps[i + half];
                    amps[i] = a + b;
                    amps[i + half] = a - b;
                }
                base += half * 2;
            }
            half *= 2;
        }
        let scale = 1.0 / (n as f64).sqrt();
        for a in &mut amps {
            *a *= scale;
        }
        StateVector {
            lambda: self.lambda,
            amps,
        }
    }

    /// Born-rule measurement of an arbitrary total predicate over basis
    /// vectors: P(1) = Σ_{v: pred(v)} |amp(v)|², and the post-state is the
    /// renormalized restriction to the observed outcome's support.
    pub fn measure_predicate<R: Rng + ?Sized>(
        &self,
        pred: impl Fn(&BitVec) -> bool,
        rng: &mut R,
    ) -> MeasurementOutcome {
        let flags: Vec<bool> = (0..self.amps.len())
            .map(|i| pred(&BitVec::from_index(i, self.lambda)))
            .collect();
        let p1: f64 = self
            .amps
            .iter()
            .zip(&flags)
            .filter(|(_, f)| **f)
            .map(|(a, _)| a.norm_sqr())
            .sum();
        let bit = rng.gen::<f64>() < p1;
        let keep_prob = if bit { p1 } else { 1.0 - p1 };
        let scale = 1.0 / keep_prob.sqrt();
        let amps = self
            .amps
            .iter()
            .zip(&flags)
            .map(|(a, f)| if *f == bit { a * scale } else { Complex64::ZERO })
            .collect();
        MeasurementOutcome {
            bit,
            post_state: StateVector {
                lambda: self.lambda,
                amps,
            },
        }
    }

    /// Full computational-basis measurement; the state is consumed by the
    /// caller (the sampled outcome is all that survives).
    pub fn measure_all<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVec {
        let u = rng.gen::<f64>();
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return BitVec::from_index(i, self.lambda);
            }
        }
        // numerical slack: fall back to the last supported index
        BitVec::from_index(
            self.support().last().copied().unwrap_or(0),
            self.lambda,
        )
    }

    /// |⟨a|b⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, QsimError> {
        if self.lambda != other.lambda {
            return Err(QsimError::LambdaMismatch(self.lambda, other.lambda));
        }
        let ip: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(ip.norm_sqr())
    }

    /// Debug dump as (bitstring, amplitude) pairs, support only.
    pub fn dump_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .support()
            .into_iter()
            .map(|i| {
                let a = self.amps[i];
                json!({
                    "basis": BitVec::from_index(i, self.lambda).to_string(),
                    "re": a.re,
                    "im": a.im,
                })
            })
            .collect();
        json!({ "lambda": self.lambda, "amplitudes": entries })
    }
}

/// Symbolic form of the state Σ_{s∈space} (−1)^{⟨phase,s⟩} |s ⊕ shift⟩,
/// normalized. Canonicalized on construction: the shift is reduced modulo
/// the space and the phase modulo the dual, so equal states compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetState {
    space: Subspace,
    shift: BitVec,
    phase: BitVec,
}

impl CosetState {
    pub fn new(space: Subspace, shift: BitVec, phase: BitVec) -> Result<CosetState, QsimError> {
        let shift = space.reduce(&shift)?;
        let phase = space.dual().reduce(&phase)?;
        Ok(CosetState {
            space,
            shift,
            phase,
        })
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn shift(&self) -> &BitVec {
        &self.shift
    }

    pub fn phase(&self) -> &BitVec {
        &self.phase
    }

    /// Dense expansion: uniform magnitude 1/√|space| on the coset, signs
    /// (−1)^{⟨phase, s⟩}, zero elsewhere.
    pub fn expand(&self) -> Result<StateVector, QsimError> {
        let lambda = self.space.ambient();
        if lambda > STATEVECTOR_CAP {
            return Err(QsimError::LambdaTooLarge(lambda));
        }
        let mut amps = vec![Complex64::ZERO; 1 << lambda];
        let mag = 1.0 / ((1u64 << self.space.dim()) as f64).sqrt();
        for s in self.space.enumerate() {
            let sign = if self.phase.dot(&s) { -mag } else { mag };
            amps[s.xor(&self.shift).to_index()] = Complex64::new(sign, 0.0);
        }
        Ok(StateVector { lambda, amps })
    }

    /// Recognizes a dense state as a coset state, if it is one (up to global
    /// phase and the 1e−9 tolerance). Inverse of [`CosetState::expand`].
    pub fn from_statevector(sv: &StateVector) -> Option<CosetState> {
        let lambda = sv.lambda();
        let support = sv.support();
        if support.is_empty() || !support.len().is_power_of_two() {
            return None;
        }
        let dim = support.len().trailing_zeros() as usize;
        let mag = 1.0 / (support.len() as f64).sqrt();
        let shift = BitVec::from_index(support[0], lambda);
        let points: Vec<BitVec> = support
            .iter()
            .map(|&i| BitVec::from_index(i, lambda).xor(&shift))
            .collect();
        let space = Subspace::from_rows(lambda, points.clone()).ok()?;
        if space.dim() != dim {
            return None;
        }
        // Fix global phase by the amplitude at the shift point.
        let a0 = sv.amplitude(&shift);
        if (a0.norm() - mag).abs() > NORM_TOL {
            return None;
        }
        let gauge = a0 / a0.norm();
        // Phase vector supported on the pivot columns of the rref basis.
        let mut phase = BitVec::zero(lambda);
        for row in space.basis().rows() {
            let rel = sv.amplitude(&row.xor(&shift)) / gauge;
            if (rel.re - mag).abs() < NORM_TOL && rel.im.abs() < NORM_TOL {
                // + sign: phase bit stays 0
            } else if (rel.re + mag).abs() < NORM_TOL && rel.im.abs() < NORM_TOL {
                phase.set(row.leading_one().unwrap(), true);
            } else {
                return None;
            }
        }
        // Verify every amplitude, including the zeros off the coset.
        let candidate = CosetState::new(space, shift, phase).ok()?;
        let dense = candidate.expand().ok()?;
        let mut ip = Complex64::ZERO;
        for (a, b) in dense.amplitudes().iter().zip(sv.amplitudes()) {
            ip += a.conj() * b;
        }
        if (ip.norm_sqr() - 1.0).abs() > NORM_TOL {
            return None;
        }
        Some(candidate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2linalg::Coset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    fn sub(rows: &[&str]) -> Subspace {
        let lambda = rows[0].len();
        Subspace::from_rows(lambda, rows.iter().map(|r| bv(r)).collect()).unwrap()
    }

    fn coset_state(rows: &[&str], shift: &str, phase: &str) -> CosetState {
        CosetState::new(sub(rows), bv(shift), bv(phase)).unwrap()
    }

    #[test]
    fn expand_uniform_coset() {
        let c = coset_state(&["1100", "0011"], "0000", "0000");
        let sv = c.expand().unwrap();
        for s in ["0000", "1100", "0011", "1111"] {
            let a = sv.amplitude(&bv(s));
            assert!((a.re - 0.5).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
        assert_eq!(sv.support().len(), 4);
        assert!((sv.norm_sqr() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn expand_dim_zero_is_basis_state() {
        let c = CosetState::new(Subspace::zero(4), bv("0101"), bv("1111")).unwrap();
        let sv = c.expand().unwrap();
        assert_eq!(sv.support(), vec![bv("0101").to_index()]);
    }

    #[test]
    fn expand_phase_signs() {
        // (|0000> - |1000>)/sqrt(2)
        let c = coset_state(&["1000"], "0000", "1000");
        let sv = c.expand().unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((sv.amplitude(&bv("0000")).re - r).abs() < 1e-12);
        assert!((sv.amplitude(&bv("1000")).re + r).abs() < 1e-12);
    }

    #[test]
    fn expand_respects_backend_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = Subspace::random(17, 8, &mut rng).unwrap();
        let c = CosetState::new(s, BitVec::zero(17), BitVec::zero(17)).unwrap();
        assert!(matches!(c.expand(), Err(QsimError::LambdaTooLarge(17))));
    }

    #[test]
    fn hadamard_of_zero_state_is_uniform() {
        let sv = StateVector::basis_state(3, &bv("000")).unwrap();
        let h = sv.hadamard_all();
        let expect = 1.0 / 8f64.sqrt();
        for a in h.amplitudes() {
            assert!((a.re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn hadamard_is_involution() {
        let c = coset_state(&["1100", "0011"], "0001", "0100");
        let sv = c.expand().unwrap();
        let back = sv.hadamard_all().hadamard_all();
        assert!(sv.fidelity(&back).unwrap() >= 1.0 - NORM_TOL);
    }

    #[test]
    fn hadamard_maps_coset_to_dual_coset() {
        // support(H expand(S,x,z)) == dual(S)+z, exhaustively for random cosets
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for lambda in [2usize, 4, 6, 8] {
            for _ in 0..5 {
                let dim = rng.gen_range(0..=lambda);
                let s = Subspace::random(lambda, dim, &mut rng).unwrap();
                let x = BitVec::random(lambda, &mut rng);
                let z = BitVec::random(lambda, &mut rng);
                let c = CosetState::new(s.clone(), x, z.clone()).unwrap();
                let h = c.expand().unwrap().hadamard_all();
                let dual_coset = Coset::new(s.dual(), z).unwrap();
                let got: BTreeSet<usize> = h.support().into_iter().collect();
                let want: BTreeSet<usize> = dual_coset
                    .enumerate()
                    .iter()
                    .map(|v| v.to_index())
                    .collect();
                assert_eq!(got, want, "λ={lambda} dim={dim}");
            }
        }
    }

    #[test]
    fn measure_always_true_predicate() {
        let c = coset_state(&["1100", "0011"], "0000", "0000");
        let sv = c.expand().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = sv.measure_predicate(|_| true, &mut rng);
        assert!(out.bit);
        assert!(sv.fidelity(&out.post_state).unwrap() >= 1.0 - NORM_TOL);
    }

    #[test]
    fn measure_halves_uniform_coset() {
        let sv = coset_state(&["1100", "0011"], "0000", "0000").expand().unwrap();
        let half = Coset::new(sub(&["1100"]), bv("0000")).unwrap();
        // P(1) = 1/2 by direct Born-rule computation on the 4-point support
        let mut ones = 0u32;
        for seed in 0..2000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = sv.measure_predicate(|v| half.member(v).unwrap(), &mut rng);
            if out.bit {
                ones += 1;
                // post-state is (|0000>+|1100>)/sqrt(2)
                let want = coset_state(&["1100"], "0000", "0000").expand().unwrap();
                assert!(out.post_state.fidelity(&want).unwrap() >= 1.0 - NORM_TOL);
            }
            assert!((out.post_state.norm_sqr() - 1.0).abs() < NORM_TOL);
        }
        let freq = ones as f64 / 2000.0;
        assert!((freq - 0.5).abs() < 0.04, "freq = {freq}");
    }

    #[test]
    fn measure_eigenstate_is_certain() {
        let sv = StateVector::basis_state(4, &bv("0101")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let out = sv.measure_predicate(|v| *v == bv("0101"), &mut rng);
            assert!(out.bit);
            assert!(sv.fidelity(&out.post_state).unwrap() >= 1.0 - NORM_TOL);
        }
    }

    #[test]
    fn measure_all_on_basis_state() {
        let sv = StateVector::basis_state(4, &bv("1010")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            assert_eq!(sv.measure_all(&mut rng), bv("1010"));
        }
    }

    #[test]
    fn measure_all_uniform_chi_squared() {
        let sv = coset_state(&["1100", "0011"], "0000", "0000").expand().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..4000 {
            *counts.entry(sv.measure_all(&mut rng).to_string()).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 4);
        // χ² sanity against uniform(4), expected 1000 per cell;
        // 3 dof, 99.9% critical value ≈ 16.27
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let d = c as f64 - 1000.0;
                d * d / 1000.0
            })
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn fidelity_examples() {
        let psi = coset_state(&["1100", "0011"], "0001", "0000").expand().unwrap();
        assert!((psi.fidelity(&psi).unwrap() - 1.0).abs() < NORM_TOL);
        let a = StateVector::basis_state(4, &bv("0000")).unwrap();
        let b = StateVector::basis_state(4, &bv("1111")).unwrap();
        assert!(a.fidelity(&b).unwrap() < 1e-18);
        let zero = StateVector::basis_state(1, &bv("0")).unwrap();
        let plus = zero.hadamard_all();
        assert!((zero.fidelity(&plus).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_length_mismatch_errors() {
        let a = StateVector::basis_state(2, &bv("00")).unwrap();
        let b = StateVector::basis_state(3, &bv("000")).unwrap();
        assert!(matches!(a.fidelity(&b), Err(QsimError::LambdaMismatch(2, 3))));
    }

    #[test]
    fn measurement_is_seed_deterministic() {
        let sv = coset_state(&["110011", "001100"], "000001", "100000")
            .expand()
            .unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| sv.measure_all(&mut rng).to_string()).collect::<Vec<_>>()
        };
        assert_eq!(run(99), run(99));
    }

    #[test]
    fn coset_state_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for lambda in [2usize, 4, 6] {
            for _ in 0..20 {
                let dim = rng.gen_range(0..=lambda);
                let s = Subspace::random(lambda, dim, &mut rng).unwrap();
                let c = CosetState::new(
                    s,
                    BitVec::random(lambda, &mut rng),
                    BitVec::random(lambda, &mut rng),
                )
                .unwrap();
                let back = CosetState::from_statevector(&c.expand().unwrap()).unwrap();
                assert_eq!(back, c);
            }
        }
    }

    #[test]
    fn from_statevector_rejects_non_coset_states() {
        // 3-point support is not a coset
        let r = 1.0 / 3f64.sqrt();
        let mut amps = vec![Complex64::ZERO; 16];
        amps[0] = Complex64::new(r, 0.0);
        amps[1] = Complex64::new(r, 0.0);
        amps[2] = Complex64::new(r, 0.0);
        let sv = StateVector::from_amplitudes(4, amps).unwrap();
        assert!(CosetState::from_statevector(&sv).is_none());
    }

    #[test]
    fn norm_check_on_construction() {
        let amps = vec![Complex64::new(0.5, 0.0); 2];
        assert!(matches!(
            StateVector::from_amplitudes(1, amps),
            Err(QsimError::NotNormalized(_))
        ));
    }
}
