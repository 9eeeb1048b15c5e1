//! Simulated on-chain layer: the bank-writable, world-readable token
//! registry and the deposit-holding transfer escrow contract. The chain is
//! an in-process, single-writer event log: every mutation is validated,
//! applied and appended in one total order, so replaying the log
//! reproduces the exact final state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::f2linalg::BitVec;
use crate::token::{verify_transfer, OracleService, TransferSignature};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("token id already registered (first report wins)")]
    Rejected,
    #[error("caller {0:?} is not authorized to write the registry")]
    Unauthorized(String),
    #[error("unknown token id {0}")]
    UnknownToken(String),
    #[error("unknown escrow contract {0}")]
    UnknownContract(String),
    #[error("token value is below the escrow deposit")]
    InsufficientValue,
    #[error("transfer signature failed verification")]
    InvalidSignature,
    #[error("escrow contract already settled")]
    AlreadySettled,
    #[error("party {0} lacks funds for the deposit")]
    InsufficientFunds(String),
    #[error("oracle address {0} cannot be resolved")]
    UnknownOracle(String),
    #[error("source token already destroyed")]
    SourceDestroyed,
}

/// Unforgeable bank write capability; created once per ledger.
#[derive(Debug)]
pub struct BankCap {
    _private: (),
}

/// Who is asking for a mutation. Only the bank capability (or the
/// contract-internal settlement path) may write.
pub enum Caller<'a> {
    Bank(&'a BankCap),
    Party(&'a str),
}

impl Caller<'_> {
    fn writer_label(&self) -> String {
        match self {
            Caller::Bank(_) => "bank".to_string(),
            Caller::Party(p) => format!("party:{p}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenStatus {
    Live,
    Destroyed,
}

/// One registry entry per token id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub token_id: BitVec,
    pub oracle_pks: Vec<String>,
    pub value: u64,
    pub status: TokenStatus,
    pub destroyed_to: Option<BitVec>,
}

impl LedgerRecord {
    pub fn new(token_id: BitVec, oracle_pks: Vec<String>, value: u64) -> Self {
        LedgerRecord {
            token_id,
            oracle_pks,
            value,
            status: TokenStatus::Live,
            destroyed_to: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EscrowState {
    Open,
    Settled,
}

/// Deposit-holding transfer contract. The deposit is locked at creation
/// and leaves only through a valid settlement; an abandoned contract stays
/// open forever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscrowContract {
    pub contract_id: String,
    pub dest_id: BitVec,
    pub deposit: u64,
    pub state: EscrowState,
    pub opened_by: String,
    /// Set to the paid signer on settlement.
    pub beneficiary: Option<String>,
    pub delivered_sig: Option<TransferSignature>,
}

/// Result of a successful escrow settlement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Settlement {
    pub to: String,
    pub amount: u64,
}

/// Every mutation, with full arguments, in commit order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LedgerOp {
    RegisterToken { record: LedgerRecord },
    FundParty { party: String, amount: u64 },
    TransferValue { source_id: BitVec, dest_id: BitVec },
    OpenEscrow {
        contract_id: String,
        party: String,
        dest_id: BitVec,
        deposit: u64,
    },
    SettleEscrow {
        contract_id: String,
        signer: String,
        sig: TransferSignature,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub writer: String,
    #[serde(flatten)]
    pub op: LedgerOp,
    pub result: String,
}

#[derive(Debug, Default)]
pub struct Ledger {
    records: BTreeMap<String, LedgerRecord>,
    contracts: BTreeMap<String, EscrowContract>,
    balances: BTreeMap<String, u64>,
    log: Vec<LogEntry>,
    next_contract: u64,
}

impl Ledger {
    pub fn new() -> (Ledger, BankCap) {
        (Ledger::default(), BankCap { _private: () })
    }

    fn commit(&mut self, writer: String, op: LedgerOp) {
        self.apply(&op);
        self.log.push(LogEntry {
            seq: self.log.len() as u64,
            writer,
            op,
            result: "ok".to_string(),
        });
    }

    /// State transition shared by the live path and log replay. Assumes the
    /// op was validated when first committed.
    fn apply(&mut self, op: &LedgerOp) {
        match op {
            LedgerOp::RegisterToken { record } => {
                self.records
                    .insert(record.token_id.to_string(), record.clone());
            }
            LedgerOp::FundParty { party, amount } => {
                *self.balances.entry(party.clone()).or_insert(0) += amount;
            }
            LedgerOp::TransferValue { source_id, dest_id } => {
                let src = self.records.get_mut(&source_id.to_string()).unwrap();
                let moved = src.value;
                src.value = 0;
                src.status = TokenStatus::Destroyed;
                src.destroyed_to = Some(dest_id.clone());
                self.records.get_mut(&dest_id.to_string()).unwrap().value += moved;
            }
            LedgerOp::OpenEscrow {
                contract_id,
                party,
                dest_id,
                deposit,
            } => {
                *self.balances.get_mut(party).unwrap() -= deposit;
                self.contracts.insert(
                    contract_id.clone(),
                    EscrowContract {
                        contract_id: contract_id.clone(),
                        dest_id: dest_id.clone(),
                        deposit: *deposit,
                        state: EscrowState::Open,
                        opened_by: party.clone(),
                        beneficiary: None,
                        delivered_sig: None,
                    },
                );
                self.next_contract += 1;
            }
            LedgerOp::SettleEscrow {
                contract_id,
                signer,
                sig,
            } => {
                let c = self.contracts.get_mut(contract_id).unwrap();
                c.state = EscrowState::Settled;
                c.beneficiary = Some(signer.clone());
                c.delivered_sig = Some(sig.clone());
                let deposit = c.deposit;
                *self.balances.entry(signer.clone()).or_insert(0) += deposit;
                let transfer = LedgerOp::TransferValue {
                    source_id: sig.source_id.clone(),
                    dest_id: sig.dest_id.clone(),
                };
                self.apply(&transfer);
            }
        }
    }

    /// First-report-wins registration; only the bank may write.
    pub fn register_token(
        &mut self,
        caller: Caller<'_>,
        record: LedgerRecord,
    ) -> Result<(), LedgerError> {
        let writer = caller.writer_label();
        if !matches!(caller, Caller::Bank(_)) {
            return Err(LedgerError::Unauthorized(writer));
        }
        if self.records.contains_key(&record.token_id.to_string()) {
            return Err(LedgerError::Rejected);
        }
        self.commit(writer, LedgerOp::RegisterToken { record });
        Ok(())
    }

    pub fn get_oracle(&self, token_id: &BitVec) -> Result<&[String], LedgerError> {
        self.records
            .get(&token_id.to_string())
            .map(|r| r.oracle_pks.as_slice())
            .ok_or_else(|| LedgerError::UnknownToken(token_id.to_string()))
    }

    pub fn get_value(&self, token_id: &BitVec) -> Result<u64, LedgerError> {
        self.records
            .get(&token_id.to_string())
            .map(|r| r.value)
            .ok_or_else(|| LedgerError::UnknownToken(token_id.to_string()))
    }

    pub fn record(&self, token_id: &BitVec) -> Option<&LedgerRecord> {
        self.records.get(&token_id.to_string())
    }

    /// Crypto faucet, bank-gated; scenarios use it to endow parties.
    pub fn fund_party(
        &mut self,
        caller: Caller<'_>,
        party: &str,
        amount: u64,
    ) -> Result<(), LedgerError> {
        let writer = caller.writer_label();
        if !matches!(caller, Caller::Bank(_)) {
            return Err(LedgerError::Unauthorized(writer));
        }
        self.commit(
            writer,
            LedgerOp::FundParty {
                party: party.to_string(),
                amount,
            },
        );
        Ok(())
    }

    pub fn balance(&self, party: &str) -> u64 {
        self.balances.get(party).copied().unwrap_or(0)
    }

    fn resolve_source_oracles<'a>(
        &self,
        sig: &TransferSignature,
        oracles: &'a OracleService,
    ) -> Result<Vec<&'a crate::token::OracleTriple>, LedgerError> {
        let pks = self.get_oracle(&sig.source_id)?.to_vec();
        pks.iter()
            .map(|pk| {
                oracles
                    .resolve(pk)
                    .ok_or_else(|| LedgerError::UnknownOracle(pk.clone()))
            })
            .collect()
    }

    /// Value bookkeeping after an off-chain (face-to-face or remote)
    /// transfer: the bank records the destruction of the source and
    /// credits the destination. The signature is re-checked against the
    /// public oracles so a bogus report cannot move value.
    pub fn apply_transfer(
        &mut self,
        caller: Caller<'_>,
        sig: &TransferSignature,
        oracles: &OracleService,
    ) -> Result<(), LedgerError> {
        let writer = caller.writer_label();
        if !matches!(caller, Caller::Bank(_)) {
            return Err(LedgerError::Unauthorized(writer));
        }
        let src = self
            .records
            .get(&sig.source_id.to_string())
            .ok_or_else(|| LedgerError::UnknownToken(sig.source_id.to_string()))?;
        if src.status == TokenStatus::Destroyed {
            return Err(LedgerError::SourceDestroyed);
        }
        self.get_value(&sig.dest_id)?;
        let resolved = self.resolve_source_oracles(sig, oracles)?;
        if !verify_transfer(sig, &resolved, &sig.dest_id) {
            return Err(LedgerError::InvalidSignature);
        }
        self.commit(
            writer,
            LedgerOp::TransferValue {
                source_id: sig.source_id.clone(),
                dest_id: sig.dest_id.clone(),
            },
        );
        Ok(())
    }

    /// Locks `deposit` of `party`'s crypto into a fresh escrow bound to
    /// `dest_id`. The deposit cannot be withdrawn.
    pub fn open_escrow(
        &mut self,
        party: &str,
        dest_id: BitVec,
        deposit: u64,
    ) -> Result<String, LedgerError> {
        self.get_value(&dest_id)?;
        if self.balance(party) < deposit {
            return Err(LedgerError::InsufficientFunds(party.to_string()));
        }
        let contract_id = format!("escrow-{:04}", self.next_contract);
        self.commit(
            format!("party:{party}"),
            LedgerOp::OpenEscrow {
                contract_id: contract_id.clone(),
                party: party.to_string(),
                dest_id,
                deposit,
            },
        );
        Ok(contract_id)
    }

    pub fn contract(&self, contract_id: &str) -> Option<&EscrowContract> {
        self.contracts.get(contract_id)
    }

    /// The contract's `sign(signerID, signature)` entry point. Verifies the
    /// destination binding, the value condition and the signature itself
    /// using only world-readable data, then settles atomically: deposit to
    /// the signer, σ recorded for the receiver, token value reassigned.
    pub fn contract_sign(
        &mut self,
        contract_id: &str,
        signer_id: &str,
        sig: &TransferSignature,
        oracles: &OracleService,
    ) -> Result<Settlement, LedgerError> {
        let contract = self
            .contracts
            .get(contract_id)
            .ok_or_else(|| LedgerError::UnknownContract(contract_id.to_string()))?;
        if contract.state == EscrowState::Settled {
            return Err(LedgerError::AlreadySettled);
        }
        if sig.dest_id != contract.dest_id {
            return Err(LedgerError::InvalidSignature);
        }
        let deposit = contract.deposit;
        let src = self
            .records
            .get(&sig.source_id.to_string())
            .ok_or_else(|| LedgerError::UnknownToken(sig.source_id.to_string()))?;
        if src.status == TokenStatus::Destroyed || src.value < deposit {
            return Err(LedgerError::InsufficientValue);
        }
        let resolved = self.resolve_source_oracles(sig, oracles)?;
        if !verify_transfer(sig, &resolved, &sig.dest_id) {
            return Err(LedgerError::InvalidSignature);
        }
        self.commit(
            format!("contract:{contract_id}"),
            LedgerOp::SettleEscrow {
                contract_id: contract_id.to_string(),
                signer: signer_id.to_string(),
                sig: sig.clone(),
            },
        );
        Ok(Settlement {
            to: signer_id.to_string(),
            amount: deposit,
        })
    }

    /// Σ of all registry values (live tokens carry it all; destroyed ones
    /// are zero). Constant across transfers, grows only with issuance.
    pub fn total_token_value(&self) -> u64 {
        self.records.values().map(|r| r.value).sum()
    }

    /// Σ party balances + Σ open escrow deposits. Constant across any
    /// scenario, grows only with funding.
    pub fn total_crypto(&self) -> u64 {
        let held: u64 = self.balances.values().sum();
        let locked: u64 = self
            .contracts
            .values()
            .filter(|c| c.state == EscrowState::Open)
            .map(|c| c.deposit)
            .sum();
        held + locked
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Event log as JSON lines, one `{seq, writer, op, ..., result}` per
    /// mutation.
    pub fn log_jsonl(&self) -> Vec<String> {
        self.log
            .iter()
            .map(|e| serde_json::to_string(e).unwrap())
            .collect()
    }

    pub fn snapshot_json(&self) -> serde_json::Value {
        json!({
            "records": self.records,
            "contracts": self.contracts,
            "balances": self.balances,
        })
    }

    /// Rebuilds a ledger from an event log by re-applying every op in
    /// order. Replay of a ledger's own log reproduces its exact state.
    pub fn replay(entries: &[LogEntry]) -> Ledger {
        let mut ledger = Ledger::default();
        for e in entries {
            ledger.apply(&e.op);
            ledger.log.push(e.clone());
        }
        ledger
    }
}
