//! Participant state machines and the three transfer channels:
//! face-to-face, no-middleman remote, and on-chain escrow. Parties exchange
//! explicit classical messages over an in-process channel with injectable
//! faults; every step is recorded in a trace with logical timestamps.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::f2linalg::BitVec;
use crate::ledger::{BankCap, Caller, Ledger, LedgerError, LedgerRecord};
use crate::qfhe::{self, QfheError};
use crate::qsim::QsimError;
use crate::token::{
    assemble_unit, transfer_sign, verify_transfer, OracleService, OracleTriple, PkSource,
    QuantumToken, TokenError, TokenUnit, TransferSignature,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Qfhe(#[from] QfheError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    F2(#[from] crate::f2linalg::F2Error),
}

/// Message taxonomy for the classical channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageKind {
    MintRequest,
    MintResponse,
    DummyIdAnnounce,
    SignatureDelivery,
    EscrowNotice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelMessage {
    pub kind: MessageKind,
    pub sender: String,
    pub receiver: String,
    pub payload: serde_json::Value,
}

/// Fault injection for a channel: listed kinds are silently dropped,
/// duplicated, or the queue delivery order reversed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultPlan {
    pub drop_kinds: Vec<MessageKind>,
    pub duplicate_kinds: Vec<MessageKind>,
    pub reorder: bool,
}

/// In-process classical channel with injectable faults.
#[derive(Clone, Debug, Default)]
pub struct Channel {
    queue: VecDeque<ChannelMessage>,
    pub plan: FaultPlan,
}

impl Channel {
    pub fn new(plan: FaultPlan) -> Channel {
        Channel {
            queue: VecDeque::new(),
            plan,
        }
    }

    pub fn send(&mut self, msg: ChannelMessage, trace: &mut Trace) {
        if self.plan.drop_kinds.contains(&msg.kind) {
            trace.record(
                "msg_dropped",
                json!({"kind": msg.kind, "from": msg.sender, "to": msg.receiver}),
            );
            return;
        }
        trace.record(
            "msg_send",
            json!({"kind": msg.kind, "from": msg.sender, "to": msg.receiver}),
        );
        if self.plan.duplicate_kinds.contains(&msg.kind) {
            self.queue.push_back(msg.clone());
        }
        if self.plan.reorder {
            self.queue.push_front(msg);
        } else {
            self.queue.push_back(msg);
        }
    }

    pub fn recv(&mut self, trace: &mut Trace) -> Option<ChannelMessage> {
        let msg = self.queue.pop_front()?;
        trace.record(
            "msg_recv",
            json!({"kind": msg.kind, "from": msg.sender, "to": msg.receiver}),
        );
        Some(msg)
    }
}

/// Scenario trace: one JSON object per event with a monotonically
/// increasing logical timestamp.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    events: Vec<serde_json::Value>,
    clock: u64,
}

impl Trace {
    pub fn new() -> Trace {
        Trace::default()
    }

    pub fn record(&mut self, event: &str, data: serde_json::Value) {
        let mut obj = serde_json::Map::new();
        obj.insert("t".into(), json!(self.clock));
        obj.insert("event".into(), json!(event));
        if let serde_json::Value::Object(m) = data {
            for (k, v) in m {
                obj.insert(k, v);
            }
        }
        self.events.push(serde_json::Value::Object(obj));
        self.clock += 1;
    }

    pub fn events(&self) -> &[serde_json::Value] {
        &self.events
    }

    pub fn jsonl(&self) -> Vec<String> {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).unwrap())
            .collect()
    }
}

/// Why a transfer did not complete.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    DoubleSpendAttempt,
    VerificationFailed,
    ChannelDropped,
    InsufficientValue,
    InvalidSignature,
    AlreadySettled,
    Other(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferOutcome {
    pub success: bool,
    pub signature: Option<TransferSignature>,
    pub reason: Option<FailureReason>,
    /// Set when the sender's token was destroyed without the receiver
    /// ending up credited (the remote channel's known asymmetry).
    pub sender_burned: bool,
}

impl TransferOutcome {
    fn ok(sig: TransferSignature) -> Self {
        TransferOutcome {
            success: true,
            signature: Some(sig),
            reason: None,
            sender_burned: false,
        }
    }

    fn fail(reason: FailureReason) -> Self {
        TransferOutcome {
            success: false,
            signature: None,
            reason: Some(reason),
            sender_burned: false,
        }
    }
}

fn ledger_failure(err: &LedgerError) -> FailureReason {
    match err {
        LedgerError::InsufficientValue => FailureReason::InsufficientValue,
        LedgerError::AlreadySettled => FailureReason::AlreadySettled,
        LedgerError::InvalidSignature => FailureReason::InvalidSignature,
        other => FailureReason::Other(other.to_string()),
    }
}

/// The classical bank: issues tokens through the delegated mint, enforces
/// id uniqueness and first-report-wins on mint serials, and holds the
/// ledger write capability.
pub struct Bank {
    cap: BankCap,
    fhe_key: String,
    pks: PkSource,
    used_ids: BTreeSet<String>,
    used_serials: BTreeSet<String>,
}

impl Bank {
    pub fn new(cap: BankCap, label: &str) -> Bank {
        Bank {
            cap,
            fhe_key: format!("bank-fhe-{label}"),
            pks: PkSource::new(),
            used_ids: BTreeSet::new(),
            used_serials: BTreeSet::new(),
        }
    }

    pub fn cap(&self) -> &BankCap {
        &self.cap
    }

    /// First-report-wins on a mint serial (the (x, z) fingerprint): true
    /// on first sight, false for any duplicate.
    pub fn report_serial(&mut self, fingerprint: &str) -> bool {
        self.used_serials.insert(fingerprint.to_string())
    }

    fn fresh_id<R: Rng + ?Sized>(&mut self, lambda: usize, rng: &mut R) -> BitVec {
        loop {
            let id = BitVec::random(lambda, rng);
            if self.used_ids.insert(id.to_string()) {
                return id;
            }
        }
    }

    /// One delegated unit mint, including the x ∉ S acceptance loop and
    /// the serial registration.
    fn mint_unit_delegated<R: Rng + ?Sized>(
        &mut self,
        lambda: usize,
        rng: &mut R,
        trace: &mut Trace,
    ) -> Result<(TokenUnit, OracleTriple), ProtocolError> {
        loop {
            let space = crate::f2linalg::Subspace::random(lambda, lambda / 2, rng)?;
            let req = qfhe::make_mint_request(space.basis(), &self.fhe_key, rng)?;
            trace.record("mint_request", json!({"lambda": lambda}));
            let resp = qfhe::delegated_mint(&req, rng)?;
            let (keys, _plain) = qfhe::bank_open_response(&resp, &self.fhe_key)?;
            if space.member(&keys.x_pad)? {
                trace.record("mint_restart", json!({"cause": "shift_in_subspace"}));
                continue;
            }
            let serial = format!("{}|{}", keys.x_pad.to_hex(), keys.z_pad.to_hex());
            if !self.report_serial(&serial) {
                trace.record("mint_restart", json!({"cause": "duplicate_serial"}));
                continue;
            }
            let (unit, oracle, _secret) = assemble_unit(
                space,
                keys.x_pad,
                keys.z_pad,
                Some(resp.padded_state),
                rng,
                &mut self.pks,
            )?;
            trace.record("mint_response", json!({"pk": oracle.pk()}));
            return Ok((unit, oracle));
        }
    }

    /// Issues a token of λ delegated units, publishes the oracles, and
    /// registers the token in the ledger under a fresh unique id.
    pub fn issue<R: Rng + ?Sized>(
        &mut self,
        ledger: &mut Ledger,
        oracles: &mut OracleService,
        lambda: usize,
        value: u64,
        rng: &mut R,
        trace: &mut Trace,
    ) -> Result<QuantumToken, ProtocolError> {
        let mut units = Vec::with_capacity(lambda);
        let mut pks = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let (unit, oracle) = self.mint_unit_delegated(lambda, rng, trace)?;
            pks.push(oracle.pk().to_string());
            oracles.publish(oracle);
            units.push(unit);
        }
        let id = self.fresh_id(lambda, rng);
        let token = QuantumToken {
            units,
            oracle_pks: pks.clone(),
            id: id.clone(),
            value,
        };
        ledger.register_token(
            Caller::Bank(&self.cap),
            LedgerRecord::new(id.clone(), pks, value),
        )?;
        trace.record(
            "ledger_register",
            json!({"id": id.to_string(), "value": value}),
        );
        Ok(token)
    }
}

/// One complete simulated deployment: bank, ledger, oracle registry and
/// trace. Totals of issued value and funded crypto are tracked so
/// conservation can be asserted at any point.
pub struct World {
    pub bank: Bank,
    pub ledger: Ledger,
    pub oracles: OracleService,
    pub trace: Trace,
    issued_value: u64,
    funded_crypto: u64,
}

impl World {
    pub fn new(label: &str) -> World {
        let (ledger, cap) = Ledger::new();
        World {
            bank: Bank::new(cap, label),
            ledger,
            oracles: OracleService::new(),
            trace: Trace::new(),
            issued_value: 0,
            funded_crypto: 0,
        }
    }

    pub fn issue<R: Rng + ?Sized>(
        &mut self,
        lambda: usize,
        value: u64,
        rng: &mut R,
    ) -> Result<QuantumToken, ProtocolError> {
        let token = self.bank.issue(
            &mut self.ledger,
            &mut self.oracles,
            lambda,
            value,
            rng,
            &mut self.trace,
        )?;
        self.issued_value += value;
        Ok(token)
    }

    pub fn fund(&mut self, party: &str, amount: u64) -> Result<(), ProtocolError> {
        self.ledger
            .fund_party(Caller::Bank(self.bank.cap()), party, amount)?;
        self.funded_crypto += amount;
        Ok(())
    }

    /// Resolves a token's oracle triples through the world-readable path:
    /// registry for the addresses, oracle service for the predicates.
    pub fn token_oracles(&self, token_id: &BitVec) -> Result<Vec<&OracleTriple>, ProtocolError> {
        let pks = self.ledger.get_oracle(token_id)?.to_vec();
        pks.iter()
            .map(|pk| {
                self.oracles
                    .resolve(pk)
                    .ok_or_else(|| LedgerError::UnknownOracle(pk.clone()).into())
            })
            .collect()
    }

    /// Token-value plus crypto conservation against everything issued and
    /// funded so far.
    pub fn conservation_holds(&self) -> bool {
        self.ledger.total_token_value() == self.issued_value
            && self.ledger.total_crypto() == self.funded_crypto
    }

    /// Face-to-face transfer: the receiver announces id_B in person, the
    /// sender signs, the receiver verifies locally against the public
    /// oracles; the ledger is touched only for the value bookkeeping.
    pub fn face_to_face<R: Rng + ?Sized>(
        &mut self,
        sender: &str,
        receiver: &str,
        token_a: &mut QuantumToken,
        dummy_b_id: &BitVec,
        rng: &mut R,
    ) -> Result<TransferOutcome, ProtocolError> {
        self.trace.record(
            "announce_dest",
            json!({"channel": "f2f", "from": receiver, "to": sender, "id": dummy_b_id.to_string()}),
        );
        self.sign_and_settle(sender, receiver, token_a, dummy_b_id, "f2f", rng)
    }

    fn sign_and_settle<R: Rng + ?Sized>(
        &mut self,
        sender: &str,
        receiver: &str,
        token_a: &mut QuantumToken,
        dest_id: &BitVec,
        channel: &str,
        rng: &mut R,
    ) -> Result<TransferOutcome, ProtocolError> {
        let oracles_a = self.token_oracles(&token_a.id)?;
        let sig = match transfer_sign(token_a, &oracles_a, dest_id, rng) {
            Ok(sig) => sig,
            Err(TokenError::DoubleSpendAttempt) => {
                self.trace.record(
                    "double_spend_blocked",
                    json!({"channel": channel, "sender": sender}),
                );
                return Ok(TransferOutcome::fail(FailureReason::DoubleSpendAttempt));
            }
            Err(e) => return Err(e.into()),
        };
        self.trace.record(
            "signed",
            json!({"channel": channel, "source": sig.source_id.to_string(), "dest": sig.dest_id.to_string()}),
        );
        self.receiver_accept(receiver, &sig, dest_id, channel)
    }

    /// Receiver-side verification plus the ledger value reassignment.
    fn receiver_accept(
        &mut self,
        receiver: &str,
        sig: &TransferSignature,
        expected_dest: &BitVec,
        channel: &str,
    ) -> Result<TransferOutcome, ProtocolError> {
        let oracles_a = self.token_oracles(&sig.source_id)?;
        let valid = verify_transfer(sig, &oracles_a, expected_dest);
        self.trace.record(
            "receiver_verify",
            json!({"channel": channel, "receiver": receiver, "valid": valid}),
        );
        if !valid {
            let mut out = TransferOutcome::fail(FailureReason::VerificationFailed);
            out.sender_burned = true;
            return Ok(out);
        }
        match self
            .ledger
            .apply_transfer(Caller::Bank(self.bank.cap()), sig, &self.oracles)
        {
            Ok(()) => {
                self.trace.record(
                    "ledger_transfer",
                    json!({"source": sig.source_id.to_string(), "dest": sig.dest_id.to_string()}),
                );
                Ok(TransferOutcome::ok(sig.clone()))
            }
            Err(e) => Ok(TransferOutcome::fail(ledger_failure(&e))),
        }
    }

    /// Remote transfer: id_B and σ travel as channel messages; a dropped
    /// signature delivery leaves the sender's token destroyed and the
    /// receiver uncredited, which the outcome flags rather than prevents.
    pub fn remote<R: Rng + ?Sized>(
        &mut self,
        sender: &str,
        receiver: &str,
        token_a: &mut QuantumToken,
        dummy_b_id: &BitVec,
        channel: &mut Channel,
        rng: &mut R,
    ) -> Result<TransferOutcome, ProtocolError> {
        channel.send(
            ChannelMessage {
                kind: MessageKind::DummyIdAnnounce,
                sender: receiver.to_string(),
                receiver: sender.to_string(),
                payload: json!({"id": dummy_b_id.to_string()}),
            },
            &mut self.trace,
        );
        let Some(announce) = channel.recv(&mut self.trace) else {
            return Ok(TransferOutcome::fail(FailureReason::ChannelDropped));
        };
        let dest_id: BitVec = announce.payload["id"]
            .as_str()
            .unwrap_or_default()
            .parse()
            .map_err(TokenError::from)?;

        let oracles_a = self.token_oracles(&token_a.id)?;
        let sig = match transfer_sign(token_a, &oracles_a, &dest_id, rng) {
            Ok(sig) => sig,
            Err(TokenError::DoubleSpendAttempt) => {
                return Ok(TransferOutcome::fail(FailureReason::DoubleSpendAttempt));
            }
            Err(e) => return Err(e.into()),
        };
        channel.send(
            ChannelMessage {
                kind: MessageKind::SignatureDelivery,
                sender: sender.to_string(),
                receiver: receiver.to_string(),
                payload: serde_json::to_value(&sig).unwrap(),
            },
            &mut self.trace,
        );
        let Some(delivery) = channel.recv(&mut self.trace) else {
            let mut out = TransferOutcome::fail(FailureReason::ChannelDropped);
            out.sender_burned = true;
            self.trace.record(
                "asymmetric_loss",
                json!({"note": "sender token destroyed, receiver uncredited"}),
            );
            return Ok(out);
        };
        let delivered: TransferSignature = serde_json::from_value(delivery.payload)
            .map_err(|_| LedgerError::InvalidSignature)?;
        self.receiver_accept(receiver, &delivered, dummy_b_id, "remote")
    }

    /// On-chain transfer: the receiver's escrow already holds `deposit`
    /// bound to id_B; the sender signs and submits to the contract, which
    /// settles exactly once.
    pub fn onchain<R: Rng + ?Sized>(
        &mut self,
        sender: &str,
        receiver: &str,
        token_a: &mut QuantumToken,
        dummy_b_id: &BitVec,
        deposit: u64,
        rng: &mut R,
    ) -> Result<TransferOutcome, ProtocolError> {
        let contract_id = self
            .ledger
            .open_escrow(receiver, dummy_b_id.clone(), deposit)?;
        self.trace.record(
            "escrow_open",
            json!({"contract": contract_id, "dest": dummy_b_id.to_string(), "deposit": deposit}),
        );
        let oracles_a = self.token_oracles(&token_a.id)?;
        let sig = match transfer_sign(token_a, &oracles_a, dummy_b_id, rng) {
            Ok(sig) => sig,
            Err(TokenError::DoubleSpendAttempt) => {
                return Ok(TransferOutcome::fail(FailureReason::DoubleSpendAttempt));
            }
            Err(e) => return Err(e.into()),
        };
        match self
            .ledger
            .contract_sign(&contract_id, sender, &sig, &self.oracles)
        {
            Ok(settlement) => {
                self.trace.record(
                    "escrow_settled",
                    json!({"contract": contract_id, "to": settlement.to, "amount": settlement.amount}),
                );
                Ok(TransferOutcome::ok(sig))
            }
            Err(e) => {
                self.trace.record(
                    "escrow_rejected",
                    json!({"contract": contract_id, "cause": e.to_string()}),
                );
                let mut out = TransferOutcome::fail(ledger_failure(&e));
                out.sender_burned = true;
                out.signature = Some(sig);
                Ok(out)
            }
        }
    }
}
