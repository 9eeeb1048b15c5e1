//! Functional (non-cryptographic) reproduction of the delegated-mint
//! dataflow: the bank sends a one-time-padded subspace matrix plus a sealed
//! pad; the evaluator returns a quantum-one-time-padded coset state plus
//! sealed pad keys. Real homomorphic encryption is replaced by a sealed-box
//! mock with explicit key ownership; the homomorphic evaluation is
//! performed inside the trusted mint routine, which exposes only padded and
//! sealed outputs.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::f2linalg::{BitVec, F2Error, F2Matrix, Subspace};
use crate::par;
use crate::qsim::{CosetState, QsimError, StateVector, STATEVECTOR_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QfheError {
    #[error("ciphertext is sealed under a different key")]
    WrongKey,
    #[error("ciphertext payload is corrupted")]
    Corrupted,
    #[error("malformed mint request matrix: {0} rows x {1} cols")]
    MalformedMatrix(usize, usize),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    F2(#[from] F2Error),
}

/// Quantum one-time pad keys: a bit-flip mask and a phase mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QotpKeys {
    pub x_pad: BitVec,
    pub z_pad: BitVec,
}

impl QotpKeys {
    pub fn random<R: Rng + ?Sized>(lambda: usize, rng: &mut R) -> Self {
        QotpKeys {
            x_pad: BitVec::random(lambda, rng),
            z_pad: BitVec::random(lambda, rng),
        }
    }
}

/// Applies the pad X^x Z^z qubit-wise: |v⟩ ↦ (−1)^{⟨z,v⟩} |v ⊕ x⟩.
/// Zero keys give the identity; for fixed keys the pad is self-inverse up
/// to global phase.
pub fn qotp_encrypt(state: &StateVector, keys: &QotpKeys) -> Result<StateVector, QsimError> {
    let lambda = state.lambda();
    if keys.x_pad.len() != lambda || keys.z_pad.len() != lambda {
        return Err(QsimError::LambdaMismatch(keys.x_pad.len(), lambda));
    }
    let x_mask = keys.x_pad.to_index();
    let mut amps = vec![Complex64::ZERO; 1 << lambda];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let v = BitVec::from_index(i, lambda);
        let sign = if keys.z_pad.dot(&v) { -1.0 } else { 1.0 };
        amps[i ^ x_mask] = a * sign;
    }
    StateVector::from_amplitudes(lambda, amps)
}

/// Opaque sealed box standing in for FHE ciphertexts. The payload is a
/// keyed scramble with a random nonce, so sealing the same message twice
/// yields distinct payloads; tests only ever use the API, never the bytes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedCiphertext {
    pub key_id: String,
    nonce: [u8; 16],
    payload: Vec<u8>,
}

fn keystream(key_id: &str, nonce: &[u8; 16], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    let mut block = 0u64;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(key_id.as_bytes());
        h.update(nonce);
        h.update(block.to_le_bytes());
        out.extend_from_slice(&h.finalize());
        block += 1;
    }
    out.truncate(len);
    out
}

pub fn seal<R: Rng + ?Sized>(key_id: &str, message: &[u8], rng: &mut R) -> SealedCiphertext {
    let nonce: [u8; 16] = rng.gen();
    let ks = keystream(key_id, &nonce, message.len());
    let payload = message.iter().zip(ks).map(|(m, k)| m ^ k).collect();
    SealedCiphertext {
        key_id: key_id.to_string(),
        nonce,
        payload,
    }
}

/// Opens a sealed box with the matching key. Every call is recorded in the
/// process-wide access audit, keyed by key id.
pub fn unseal(key_id: &str, ct: &SealedCiphertext) -> Result<Vec<u8>, QfheError> {
    audit_bump(key_id);
    if ct.key_id != key_id {
        return Err(QfheError::WrongKey);
    }
    Ok(open_payload(ct))
}

/// The mock's stand-in for homomorphic evaluation: opens a ciphertext from
/// inside the trusted evaluation routine without going through the audited
/// key-holder path. Private to this module.
fn mock_homomorphic_open(ct: &SealedCiphertext) -> Vec<u8> {
    open_payload(ct)
}

fn open_payload(ct: &SealedCiphertext) -> Vec<u8> {
    let ks = keystream(&ct.key_id, &ct.nonce, ct.payload.len());
    ct.payload.iter().zip(ks).map(|(c, k)| c ^ k).collect()
}

fn audit_map() -> &'static Mutex<HashMap<String, u64>> {
    static AUDIT: OnceLock<Mutex<HashMap<String, u64>>> = OnceLock::new();
    AUDIT.get_or_init(|| Mutex::new(HashMap::new()))
}

fn audit_bump(key_id: &str) {
    let mut map = audit_map().lock().unwrap();
    *map.entry(key_id.to_string()).or_insert(0) += 1;
}

/// Number of audited `unseal` calls made with this key id so far.
pub fn unseal_audit_count(key_id: &str) -> u64 {
    audit_map().lock().unwrap().get(key_id).copied().unwrap_or(0)
}

/// The bank's outgoing message: the OTP-masked subspace matrix and the
/// sealed mask.
#[derive(Clone, Debug, PartialEq)]
pub struct MintRequest {
    pub masked_matrix: F2Matrix,
    pub ct_pad: SealedCiphertext,
}

/// The evaluator's reply: a QOTP-padded coset state and the sealed pads.
#[derive(Clone, Debug)]
pub struct MintResponse {
    pub padded_state: StateVector,
    pub ct_keys: SealedCiphertext,
}

fn matrix_to_bytes(m: &F2Matrix) -> Vec<u8> {
    let rows: Vec<String> = m.rows().iter().map(|r| r.to_string()).collect();
    serde_json::to_vec(&(m.cols(), rows)).unwrap()
}

fn matrix_from_bytes(bytes: &[u8]) -> Result<F2Matrix, QfheError> {
    let (cols, rows): (usize, Vec<String>) =
        serde_json::from_slice(bytes).map_err(|_| QfheError::Corrupted)?;
    let rows = rows
        .iter()
        .map(|s| s.parse::<BitVec>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| QfheError::Corrupted)?;
    F2Matrix::new(cols, rows).map_err(|_| QfheError::Corrupted)
}

fn keys_to_bytes(keys: &QotpKeys) -> Vec<u8> {
    serde_json::to_vec(keys).unwrap()
}

fn keys_from_bytes(bytes: &[u8]) -> Result<QotpKeys, QfheError> {
    serde_json::from_slice(bytes).map_err(|_| QfheError::Corrupted)
}

/// Bank's outgoing half of the delegated mint: mask the subspace matrix
/// row-wise with a
/// fresh one-time pad and seal the pad under the bank's key.
pub fn make_mint_request<R: Rng + ?Sized>(
    matrix: &F2Matrix,
    bank_key_id: &str,
    rng: &mut R,
) -> Result<MintRequest, QfheError> {
    let pad = F2Matrix::random(matrix.n_rows(), matrix.cols(), rng);
    let masked_matrix = matrix.xor(&pad)?;
    let ct_pad = seal(bank_key_id, &matrix_to_bytes(&pad), rng);
    Ok(MintRequest {
        masked_matrix,
        ct_pad,
    })
}

/// Evaluator side: "homomorphically" runs the row-span circuit on the
/// masked matrix, producing a padded coset state under fresh random (x, z)
/// plus the sealed pads. The evaluator code path never sees the matrix or
/// the pads in the clear; the computation happens behind this routine's
/// API, which returns only padded and sealed values.
pub fn delegated_mint<R: Rng + ?Sized>(
    req: &MintRequest,
    rng: &mut R,
) -> Result<MintResponse, QfheError> {
    let lambda = req.masked_matrix.cols();
    if lambda < 2
        || lambda % 2 != 0
        || lambda > STATEVECTOR_CAP
        || req.masked_matrix.n_rows() != lambda / 2
    {
        return Err(QfheError::MalformedMatrix(
            req.masked_matrix.n_rows(),
            lambda,
        ));
    }
    let pad = matrix_from_bytes(&mock_homomorphic_open(&req.ct_pad))?;
    let matrix = req.masked_matrix.xor(&pad)?;
    let space = Subspace::from_matrix(&matrix);
    let keys = QotpKeys::random(lambda, rng);
    let plain = CosetState::new(space, BitVec::zero(lambda), BitVec::zero(lambda))?.expand()?;
    let padded_state = qotp_encrypt(&plain, &keys)?;
    let ct_keys = seal(&req.ct_pad.key_id, &keys_to_bytes(&keys), rng);
    Ok(MintResponse {
        padded_state,
        ct_keys,
    })
}

/// Bank's receiving half: unseal the pads and recover the plaintext
/// coset state. The caller then applies the x ∉ S acceptance check.
pub fn bank_open_response(
    resp: &MintResponse,
    bank_key_id: &str,
) -> Result<(QotpKeys, StateVector), QfheError> {
    let keys = keys_from_bytes(&unseal(bank_key_id, &resp.ct_keys)?)?;
    let plain = qotp_encrypt(&resp.padded_state, &keys)?;
    Ok((keys, plain))
}

/// Outcome of a batch of delegated mints on one fixed request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LightningOutcome {
    pub trials: u64,
    pub pairs: u64,
    pub collisions: u64,
}

impl LightningOutcome {
    /// Birthday expectation for the observed pair count: each disjoint pair
    /// of evaluations collides with probability 2^{−2λ}.
    pub fn expected_collisions(&self, lambda: usize) -> f64 {
        self.pairs as f64 / (1u128 << (2 * lambda)) as f64
    }
}

/// Runs `delegated_mint` `n_trials` times on one fixed request and counts
/// how many disjoint consecutive pairs of evaluations produced identical
/// (x, z) pads — the quantum-lightning "evaluate twice" experiment.
/// Deterministic given the seed; trials run in parallel when enabled.
pub fn lightning_collision_trial(
    lambda: usize,
    n_trials: u64,
    seed: u64,
) -> Result<LightningOutcome, QfheError> {
    let mut setup_rng = ChaCha8Rng::seed_from_u64(seed);
    let bank_key = format!("bank-fhe-{seed:016x}");
    let space = Subspace::random(lambda, lambda / 2, &mut setup_rng)?;
    let req = make_mint_request(space.basis(), &bank_key, &mut setup_rng)?;

    let keys: Vec<QotpKeys> = par::try_map_trials(n_trials, |trial| {
        let mut rng = par::trial_rng(seed, trial);
        let resp = delegated_mint(&req, &mut rng)?;
        keys_from_bytes(&mock_homomorphic_open(&resp.ct_keys))
    })?;

    let pairs = n_trials / 2;
    let collisions = (0..pairs)
        .filter(|&p| keys[(2 * p) as usize] == keys[(2 * p + 1) as usize])
        .count() as u64;
    Ok(LightningOutcome {
        trials: n_trials,
        pairs,
        collisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::NORM_TOL;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn coset_sv(rows: &[&str], shift: &str, phase: &str) -> StateVector {
        let lambda = shift.len();
        let s = Subspace::from_rows(lambda, rows.iter().map(|r| bv(r)).collect()).unwrap();
        CosetState::new(s, bv(shift), bv(phase)).unwrap().expand().unwrap()
    }

    #[test]
    fn qotp_zero_keys_is_identity() {
        let psi = coset_sv(&["1100", "0011"], "0001", "0100");
        let keys = QotpKeys {
            x_pad: bv("0000"),
            z_pad: bv("0000"),
        };
        let out = qotp_encrypt(&psi, &keys).unwrap();
        assert!(psi.fidelity(&out).unwrap() >= 1.0 - NORM_TOL);
    }

    #[test]
    fn qotp_pure_bit_flip() {
        let psi = StateVector::basis_state(4, &bv("0000")).unwrap();
        let keys = QotpKeys {
            x_pad: bv("1010"),
            z_pad: bv("0000"),
        };
        let out = qotp_encrypt(&psi, &keys).unwrap();
        assert_eq!(out.support(), vec![bv("1010").to_index()]);
    }

    #[test]
    fn qotp_translates_coset_states() {
        let plain = coset_sv(&["1100", "0011"], "0000", "0000");
        let keys = QotpKeys {
            x_pad: bv("0101"),
            z_pad: bv("0110"),
        };
        let out = qotp_encrypt(&plain, &keys).unwrap();
        let want = coset_sv(&["1100", "0011"], "0101", "0110");
        assert!(out.fidelity(&want).unwrap() >= 1.0 - NORM_TOL);
    }

    #[test]
    fn qotp_is_self_inverse_up_to_global_phase() {
        let mut r = rng(1);
        for _ in 0..10 {
            let s = Subspace::random(4, 2, &mut r).unwrap();
            let psi = CosetState::new(
                s,
                BitVec::random(4, &mut r),
                BitVec::random(4, &mut r),
            )
            .unwrap()
            .expand()
            .unwrap();
            let keys = QotpKeys::random(4, &mut r);
            let twice = qotp_encrypt(&qotp_encrypt(&psi, &keys).unwrap(), &keys).unwrap();
            assert!(psi.fidelity(&twice).unwrap() >= 1.0 - NORM_TOL);
        }
    }

    #[test]
    fn qotp_length_mismatch_errors() {
        let psi = StateVector::basis_state(4, &bv("0000")).unwrap();
        let keys = QotpKeys {
            x_pad: bv("101"),
            z_pad: bv("010"),
        };
        assert!(qotp_encrypt(&psi, &keys).is_err());
    }

    #[test]
    fn seal_roundtrip_and_wrong_key() {
        let mut r = rng(2);
        let msg = b"arbitrary bytes \x00\xff";
        let ct = seal("key-a", msg, &mut r);
        assert_eq!(unseal("key-a", &ct).unwrap(), msg);
        assert_eq!(unseal("key-b", &ct), Err(QfheError::WrongKey));
    }

    #[test]
    fn sealing_twice_randomizes_payload() {
        let mut r = rng(3);
        let a = seal("key", b"same message", &mut r);
        let b = seal("key", b"same message", &mut r);
        assert_ne!(a, b);
    }

    #[test]
    fn delegated_mint_end_to_end() {
        let mut r = rng(4);
        let bank_key = "bank-e2e-test";
        let space = Subspace::random(4, 2, &mut r).unwrap();
        let req = make_mint_request(space.basis(), bank_key, &mut r).unwrap();
        let resp = delegated_mint(&req, &mut r).unwrap();
        let (keys, plain) = bank_open_response(&resp, bank_key).unwrap();
        // plaintext supported exactly on the subspace itself
        let want = CosetState::new(space.clone(), BitVec::zero(4), BitVec::zero(4))
            .unwrap()
            .expand()
            .unwrap();
        assert!(plain.fidelity(&want).unwrap() >= 1.0 - NORM_TOL);
        // held padded state is the coset state with shift x, phase z
        let padded_want = CosetState::new(space, keys.x_pad.clone(), keys.z_pad.clone())
            .unwrap()
            .expand()
            .unwrap();
        assert!(resp.padded_state.fidelity(&padded_want).unwrap() >= 1.0 - NORM_TOL);
    }

    #[test]
    fn delegated_mint_fresh_keys_per_call() {
        let mut r = rng(5);
        let space = Subspace::random(8, 4, &mut r).unwrap();
        let req = make_mint_request(space.basis(), "bank-fresh-test", &mut r).unwrap();
        let a = delegated_mint(&req, &mut r).unwrap();
        let b = delegated_mint(&req, &mut r).unwrap();
        let ka = bank_open_response(&a, "bank-fresh-test").unwrap().0;
        let kb = bank_open_response(&b, "bank-fresh-test").unwrap().0;
        assert_ne!(ka, kb);
    }

    #[test]
    fn delegated_mint_rejects_malformed_matrix() {
        let mut r = rng(6);
        let m = F2Matrix::random(3, 4, &mut r); // wrong row count
        let req = make_mint_request(&m, "bank-bad", &mut r).unwrap();
        assert!(matches!(
            delegated_mint(&req, &mut r),
            Err(QfheError::MalformedMatrix(3, 4))
        ));
    }

    #[test]
    fn delegatee_path_never_unseals_with_bank_key() {
        let mut r = rng(7);
        let bank_key = "bank-audit-test-unique";
        let space = Subspace::random(4, 2, &mut r).unwrap();
        let req = make_mint_request(space.basis(), bank_key, &mut r).unwrap();
        let before = unseal_audit_count(bank_key);
        let _resp = delegated_mint(&req, &mut r).unwrap();
        assert_eq!(unseal_audit_count(bank_key), before);
        // the bank-side open does go through the audited path
        let resp = delegated_mint(&req, &mut r).unwrap();
        bank_open_response(&resp, bank_key).unwrap();
        assert_eq!(unseal_audit_count(bank_key), before + 1);
    }

    #[test]
    fn lightning_small_lambda_collides_often() {
        // λ=2: only 16 possible (x, z) pairs, so disjoint pairs collide
        // at rate 1/16; 1000 trials → 500 pairs, ~31 collisions expected
        let out = lightning_collision_trial(2, 1000, 11).unwrap();
        assert!(out.collisions >= 10, "collisions = {}", out.collisions);
    }

    #[test]
    fn lightning_two_trials_large_lambda() {
        // one pair, collision probability 2^{-32}
        let out = lightning_collision_trial(16, 2, 12).unwrap();
        assert_eq!(out.pairs, 1);
        assert_eq!(out.collisions, 0);
    }

    #[test]
    fn lightning_single_trial_has_no_pairs() {
        let out = lightning_collision_trial(8, 1, 13).unwrap();
        assert_eq!(out.pairs, 0);
        assert_eq!(out.collisions, 0);
    }

    #[test]
    fn lightning_is_seed_deterministic() {
        let a = lightning_collision_trial(2, 200, 14).unwrap();
        let b = lightning_collision_trial(2, 200, 14).unwrap();
        assert_eq!(a, b);
    }
}
