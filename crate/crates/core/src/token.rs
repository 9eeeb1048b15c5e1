//! Token-unit lifecycle: minting a unit, non-destructive verification,
//! one-time signing via certified destruction, and assembly of λ units into
//! a transferable token.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::f2linalg::{BitVec, Coset, F2Error, Subspace};
use crate::qsim::{CosetState, QsimError, StateVector, STATEVECTOR_CAP};

/// Sign retry cap; P(exceeding this on an honest unit) < 2^−64.
pub const SIGN_MAX_ROUNDS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TokenError {
    #[error("lambda {0} must be even, >= 2 and <= {STATEVECTOR_CAP}")]
    LambdaOutOfRange(usize),
    #[error("operation on a destroyed token unit")]
    DestroyedUnit,
    #[error("signing did not terminate within {SIGN_MAX_ROUNDS} rounds (non-token state)")]
    MaxRetriesExceeded,
    #[error("token has already been signed away (double-spend attempt)")]
    DoubleSpendAttempt,
    #[error("destination id length {0} does not match token lambda {1}")]
    IdLengthMismatch(usize, usize),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    F2(#[from] F2Error),
}

/// The bank-private data behind one token unit.
#[derive(Clone, Debug)]
pub struct TokenUnitSecret {
    pub s: Subspace,
    pub s0: Subspace,
    pub w: BitVec,
    pub x_shift: BitVec,
    pub z_phase: BitVec,
}

/// Public membership oracles for one unit. Callers can only evaluate the
/// three predicates; the underlying cosets are never exposed, standing in
/// for a cryptographic point-function obfuscation.
#[derive(Clone)]
pub struct OracleTriple {
    low: Coset,
    high: Coset,
    dual: Coset,
    pk: String,
}

impl fmt::Debug for OracleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // deliberately opaque: only the public address is printable
        write!(f, "OracleTriple({})", self.pk)
    }
}

impl OracleTriple {
    /// Membership in S₀ + x.
    pub fn o_low(&self, v: &BitVec) -> bool {
        self.low.member(v).unwrap_or(false)
    }

    /// Membership in S₀ + x + w.
    pub fn o_high(&self, v: &BitVec) -> bool {
        self.high.member(v).unwrap_or(false)
    }

    /// Membership in S^⊥ + z.
    pub fn o_dual(&self, v: &BitVec) -> bool {
        self.dual.member(v).unwrap_or(false)
    }

    pub fn pk(&self) -> &str {
        &self.pk
    }

    pub fn lambda(&self) -> usize {
        self.low.space().ambient()
    }

    /// The bit-`b` signing predicate: S₀ + x + b·w.
    pub fn o_bit(&self, b: bool, v: &BitVec) -> bool {
        if b {
            self.o_high(v)
        } else {
            self.o_low(v)
        }
    }
}

/// Issues unique oracle addresses: a monotone counter plus rng entropy, so
/// two mints at the same seed stream position still get distinct addresses.
#[derive(Clone, Debug, Default)]
pub struct PkSource {
    counter: u64,
}

impl PkSource {
    pub fn new() -> Self {
        PkSource::default()
    }

    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> String {
        let pk = format!("pk-{:04x}-{:016x}", self.counter, rng.gen::<u64>());
        self.counter += 1;
        pk
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitStatus {
    Live,
    Destroyed,
}

/// One quantum token unit: the held state plus its oracle address. The
/// live→destroyed transition is one-way; operations on a destroyed unit
/// error in addition to the physical collapse.
#[derive(Clone, Debug)]
pub struct TokenUnit {
    state: Option<StateVector>,
    pk: String,
    status: UnitStatus,
}

impl TokenUnit {
    pub fn new(state: StateVector, pk: String) -> TokenUnit {
        TokenUnit {
            state: Some(state),
            pk,
            status: UnitStatus::Live,
        }
    }

    pub fn pk(&self) -> &str {
        &self.pk
    }

    pub fn status(&self) -> UnitStatus {
        self.status
    }

    pub fn is_live(&self) -> bool {
        self.status == UnitStatus::Live
    }

    pub fn state(&self) -> Result<&StateVector, TokenError> {
        match (&self.state, self.status) {
            (Some(s), UnitStatus::Live) => Ok(s),
            _ => Err(TokenError::DestroyedUnit),
        }
    }

    /// Adversary hook: swap in an arbitrary state. Security properties are
    /// tested against dishonest states injected through here.
    pub fn inject_state(&mut self, state: StateVector) {
        self.state = Some(state);
        self.status = UnitStatus::Live;
    }

    fn destroy(&mut self) {
        self.state = None;
        self.status = UnitStatus::Destroyed;
    }
}

/// Signature of one destroyed unit: the measured vector and the control bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitSignature {
    pub sigma: BitVec,
    pub bit: bool,
}

/// Mint one token unit: fresh random S of dimension λ/2, shift x ∉ S
/// (redrawn internally until that holds), phase z, state expand(S, x, z),
/// oracles published under a fresh pk.
pub fn mint_unit<R: Rng + ?Sized>(
    lambda: usize,
    rng: &mut R,
    pks: &mut PkSource,
) -> Result<(TokenUnit, OracleTriple, TokenUnitSecret), TokenError> {
    if lambda < 2 || lambda % 2 != 0 || lambda > STATEVECTOR_CAP {
        return Err(TokenError::LambdaOutOfRange(lambda));
    }
    loop {
        let s = Subspace::random(lambda, lambda / 2, rng)?;
        let x = BitVec::random(lambda, rng);
        if s.member(&x)? {
            // acceptance condition x ∉ S failed: restart
            continue;
        }
        let z = BitVec::random(lambda, rng);
        return assemble_unit(s, x, z, None, rng, pks);
    }
}

/// Demo-only variant with x = z = 0, so the support is the subspace itself
/// (|0...0⟩ always present, all signs positive).
pub fn mint_unit_zero_shift<R: Rng + ?Sized>(
    lambda: usize,
    rng: &mut R,
    pks: &mut PkSource,
) -> Result<(TokenUnit, OracleTriple, TokenUnitSecret), TokenError> {
    if lambda < 2 || lambda % 2 != 0 || lambda > STATEVECTOR_CAP {
        return Err(TokenError::LambdaOutOfRange(lambda));
    }
    let s = Subspace::random(lambda, lambda / 2, rng)?;
    let zero = BitVec::zero(lambda);
    assemble_unit(s, zero.clone(), zero, None, rng, pks)
}

/// Builds the unit, oracle triple and secret for known (S, x, z). Used by
/// the local mint above and by the delegated-mint path, which supplies the
/// already-prepared held state.
pub fn assemble_unit<R: Rng + ?Sized>(
    s: Subspace,
    x: BitVec,
    z: BitVec,
    held_state: Option<StateVector>,
    rng: &mut R,
    pks: &mut PkSource,
) -> Result<(TokenUnit, OracleTriple, TokenUnitSecret), TokenError> {
    let (s0, w) = s.split(rng)?;
    let low = Coset::new(s0.clone(), x.clone())?;
    let high = Coset::new(s0.clone(), x.xor(&w))?;
    let dual = Coset::new(s.dual(), z.clone())?;
    let pk = pks.next(rng);
    let state = match held_state {
        Some(sv) => sv,
        None => CosetState::new(s.clone(), x.clone(), z.clone())?.expand()?,
    };
    let unit = TokenUnit::new(state, pk.clone());
    let oracle = OracleTriple {
        low,
        high,
        dual,
        pk,
    };
    let secret = TokenUnitSecret {
        s,
        s0,
        w,
        x_shift: x,
        z_phase: z,
    };
    Ok((unit, oracle, secret))
}

/// Non-destructive verification: tests computational-domain membership
/// (o_low ∨ o_high), then dual-domain membership under the transversal
/// Hadamard. Honest states pass both with certainty and come out unchanged.
pub fn verify_unit<R: Rng + ?Sized>(
    unit: &mut TokenUnit,
    oracle: &OracleTriple,
    rng: &mut R,
) -> Result<bool, TokenError> {
    let state = unit.state()?.clone();
    let m1 = state.measure_predicate(|v| oracle.o_low(v) || oracle.o_high(v), rng);
    if !m1.bit {
        unit.state = Some(m1.post_state);
        return Ok(false);
    }
    let dual_domain = m1.post_state.hadamard_all();
    let m2 = dual_domain.measure_predicate(|v| oracle.o_dual(v), rng);
    unit.state = Some(m2.post_state.hadamard_all());
    Ok(m2.bit)
}

/// One-time signing via certified destruction (repeat-until-success):
/// measure the bit-`b` coset predicate; on success measure all qubits to
/// get σ and destroy the unit; on failure run the dual-domain restore
/// (both outcomes accepted) and retry, up to [`SIGN_MAX_ROUNDS`].
///
/// Returns the signature together with the number of primary-oracle rounds
/// taken (geometric with p = 1/2 on honest units).
pub fn sign_unit_with_rounds<R: Rng + ?Sized>(
    unit: &mut TokenUnit,
    oracle: &OracleTriple,
    b: bool,
    rng: &mut R,
) -> Result<(UnitSignature, usize), TokenError> {
    let mut state = unit.state()?.clone();
    for round in 1..=SIGN_MAX_ROUNDS {
        let m = state.measure_predicate(|v| oracle.o_bit(b, v), rng);
        state = m.post_state;
        if m.bit {
            let sigma = state.measure_all(rng);
            unit.destroy();
            return Ok((UnitSignature { sigma, bit: b }, round));
        }
        let dual_domain = state.hadamard_all();
        let md = dual_domain.measure_predicate(|v| oracle.o_dual(v), rng);
        state = md.post_state.hadamard_all();
    }
    unit.state = Some(state);
    Err(TokenError::MaxRetriesExceeded)
}

pub fn sign_unit<R: Rng + ?Sized>(
    unit: &mut TokenUnit,
    oracle: &OracleTriple,
    b: bool,
    rng: &mut R,
) -> Result<UnitSignature, TokenError> {
    sign_unit_with_rounds(unit, oracle, b, rng).map(|(sig, _)| sig)
}

/// Pure signature check against the public oracles alone.
pub fn verify_unit_signature(sig: &UnitSignature, oracle: &OracleTriple) -> bool {
    oracle.o_bit(sig.bit, &sig.sigma)
}

/// λ token units plus the classical token data.
#[derive(Clone, Debug)]
pub struct QuantumToken {
    pub units: Vec<TokenUnit>,
    pub oracle_pks: Vec<String>,
    pub id: BitVec,
    pub value: u64,
}

impl QuantumToken {
    pub fn lambda(&self) -> usize {
        self.id.len()
    }

    pub fn all_live(&self) -> bool {
        self.units.iter().all(|u| u.is_live())
    }
}

/// Mint a full token: λ independent units assembled under one id and value.
/// Id uniqueness across the bank is the caller's (bank's) responsibility.
pub fn mint_token<R: Rng + ?Sized>(
    lambda: usize,
    value: u64,
    id: BitVec,
    rng: &mut R,
    pks: &mut PkSource,
) -> Result<(QuantumToken, Vec<OracleTriple>, Vec<TokenUnitSecret>), TokenError> {
    if id.len() != lambda {
        return Err(TokenError::IdLengthMismatch(id.len(), lambda));
    }
    let mut units = Vec::with_capacity(lambda);
    let mut oracles = Vec::with_capacity(lambda);
    let mut secrets = Vec::with_capacity(lambda);
    for _ in 0..lambda {
        let (u, o, s) = mint_unit(lambda, rng, pks)?;
        units.push(u);
        oracles.push(o);
        secrets.push(s);
    }
    let oracle_pks = oracles.iter().map(|o| o.pk().to_string()).collect();
    Ok((
        QuantumToken {
            units,
            oracle_pks,
            id,
            value,
        },
        oracles,
        secrets,
    ))
}

/// σ_{B←A}: per-unit destruction outcomes keyed to the destination id bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferSignature {
    pub source_id: BitVec,
    pub dest_id: BitVec,
    pub sigmas: Vec<UnitSignature>,
}

impl Serialize for TransferSignature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct SigRepr {
            bit: u8,
            sigma: String,
        }
        let mut st = serializer.serialize_struct("TransferSignature", 3)?;
        st.serialize_field("source_id", &self.source_id)?;
        st.serialize_field("dest_id", &self.dest_id)?;
        let sigmas: Vec<SigRepr> = self
            .sigmas
            .iter()
            .map(|s| SigRepr {
                bit: s.bit as u8,
                sigma: s.sigma.to_hex(),
            })
            .collect();
        st.serialize_field("sigmas", &sigmas)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for TransferSignature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct SigRepr {
            bit: u8,
            sigma: String,
        }
        #[derive(Deserialize)]
        struct Repr {
            source_id: BitVec,
            dest_id: BitVec,
            sigmas: Vec<SigRepr>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let lambda = repr.source_id.len();
        let sigmas = repr
            .sigmas
            .iter()
            .map(|s| {
                Ok(UnitSignature {
                    sigma: BitVec::from_hex(&s.sigma, lambda).map_err(D::Error::custom)?,
                    bit: s.bit != 0,
                })
            })
            .collect::<Result<Vec<_>, D::Error>>()?;
        Ok(TransferSignature {
            source_id: repr.source_id,
            dest_id: repr.dest_id,
            sigmas,
        })
    }
}

/// Sign token A over to `dest_id`: unit i is destroyed under control bit
/// `dest_id[i]`. Errors with `DoubleSpendAttempt` when any unit is already
/// destroyed, before touching the rest.
pub fn transfer_sign<R: Rng + ?Sized>(
    token: &mut QuantumToken,
    oracles: &[&OracleTriple],
    dest_id: &BitVec,
    rng: &mut R,
) -> Result<TransferSignature, TokenError> {
    let lambda = token.lambda();
    if dest_id.len() != lambda {
        return Err(TokenError::IdLengthMismatch(dest_id.len(), lambda));
    }
    if !token.all_live() {
        return Err(TokenError::DoubleSpendAttempt);
    }
    let mut sigmas = Vec::with_capacity(lambda);
    for (i, unit) in token.units.iter_mut().enumerate() {
        let sig = sign_unit(unit, oracles[i], dest_id.get(i), rng)?;
        sigmas.push(sig);
    }
    Ok(TransferSignature {
        source_id: token.id.clone(),
        dest_id: dest_id.clone(),
        sigmas,
    })
}

/// Pure transfer check: the recorded destination must match the claimed
/// one, and every σ must lie in the coset selected by the claimed id's
/// bit — so a signature bound to id_B fails against any other id.
pub fn verify_transfer(
    sig: &TransferSignature,
    oracles: &[&OracleTriple],
    dest_id: &BitVec,
) -> bool {
    if sig.dest_id != *dest_id || sig.sigmas.len() != oracles.len() {
        return false;
    }
    if dest_id.len() != sig.sigmas.len() {
        return false;
    }
    sig.sigmas.iter().enumerate().all(|(i, s)| {
        s.bit == dest_id.get(i) && oracles[i].o_bit(dest_id.get(i), &s.sigma)
    })
}

/// World-readable registry resolving oracle addresses to their triples.
#[derive(Clone, Debug, Default)]
pub struct OracleService {
    by_pk: BTreeMap<String, OracleTriple>,
}

impl OracleService {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish(&mut self, oracle: OracleTriple) {
        self.by_pk.insert(oracle.pk().to_string(), oracle);
    }

    pub fn resolve(&self, pk: &str) -> Option<&OracleTriple> {
        self.by_pk.get(pk)
    }

    pub fn resolve_all<'a>(&'a self, pks: &[String]) -> Option<Vec<&'a OracleTriple>> {
        pks.iter().map(|pk| self.resolve(pk)).collect()
    }
}
