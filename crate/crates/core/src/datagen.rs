//! Synthetic labelled transaction traffic.
//!
//! Normal traffic is mostly plain ETH transfers (empty input, lognormal value)
//! with the remainder split between contract deployments and token calls.
//! Each attack class has its own template:
//!
//! | class | input | value |
//! |-------|-------|-------|
//! | DoS | jackpot `join` call record (selector + address word) repeated to ~1 KiB | 0.01..0.05 ETH |
//! | OaU | `PUSH32` boundary constants (2^256-1, 0) feeding `ADD`/`SUB`, twice each | >= 2^255 wei |
//! | FoT | empty | 1..=10^4 wei |
//! | Re  | `withdraw` selector setup, then `CALL` followed by `SSTORE`, 2..=8 times | 0 |
//! | DeC | calldata-forwarding proxy ending in `DELEGATECALL` to a random target | 0 |
//! | FDV | bare 4-byte selector of an unguarded public function | 0 |
//!
//! Templates that must contain specific opcodes are emitted as whole
//! instructions so a linear decode sees them at instruction boundaries.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, LogNormal};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rng;
use crate::txcore::{ClassLabel, Dataset, DatasetMeta, Transaction, TxHash, U256};

pub const GENERATOR_VERSION: &str = concat!("txguard-datagen/", env!("CARGO_PKG_VERSION"));

const WEI_PER_ETH: f64 = 1e18;

/// Class shares by label, in [`ClassLabel::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportions(pub [f64; ClassLabel::COUNT]);

impl Proportions {
    /// Shares of the reference attack dataset: 50.34 / 7.59 / 9.66 / 13.78 / 7.49 / 7.41 / 3.73 %.
    pub const REFERENCE: Proportions =
        Proportions([0.5034, 0.0759, 0.0966, 0.1378, 0.0749, 0.0741, 0.0373]);

    pub fn uniform() -> Self {
        Proportions([1.0 / ClassLabel::COUNT as f64; ClassLabel::COUNT])
    }

    pub fn get(&self, label: ClassLabel) -> f64 {
        self.0[label.index()]
    }
}

impl Default for Proportions {
    fn default() -> Self {
        Self::REFERENCE
    }
}

impl Serialize for Proportions {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(ClassLabel::ALL.iter().map(|l| (l.name(), self.get(*l))))
    }
}

impl<'de> Deserialize<'de> for Proportions {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        let mut out = [0.0; ClassLabel::COUNT];
        for (name, share) in raw {
            let label: ClassLabel = name.parse().map_err(D::Error::custom)?;
            out[label.index()] = share;
        }
        Ok(Proportions(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub total: usize,
    pub proportions: Proportions,
    pub seed: u64,
    /// Share of Normal samples that are plain transfers with empty input.
    pub plain_transfer_share: f64,
    /// `(mu, sigma)` of the lognormal transfer amount, in ETH.
    pub value_eth_lognormal: (f64, f64),
    /// Mean gap between consecutive arrivals.
    pub mean_interarrival_ms: f64,
    /// Size of the sender/recipient account pool.
    pub account_count: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            total: 10_000,
            proportions: Proportions::REFERENCE,
            seed: 0,
            plain_transfer_share: 0.75,
            value_eth_lognormal: (0.1f64.ln(), 1.0),
            mean_interarrival_ms: 2.0,
            account_count: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator settings: {0}")]
    InvalidSpec(String),
    #[error("{0} is not an attack class")]
    InvalidClass(ClassLabel),
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidSpec(msg));
        if self.total == 0 {
            return bad("total must be positive".into());
        }
        if self.proportions.0.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("proportions must be non-negative".into());
        }
        let sum: f64 = self.proportions.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("proportions sum to {sum}, not 1"));
        }
        if !(0.0..=1.0).contains(&self.plain_transfer_share) {
            return bad("plain_transfer_share must lie in [0, 1]".into());
        }
        let (mu, sigma) = self.value_eth_lognormal;
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return bad("lognormal parameters must be finite with sigma >= 0".into());
        }
        if !(self.mean_interarrival_ms.is_finite() && self.mean_interarrival_ms > 0.0) {
            return bad("mean_interarrival_ms must be positive".into());
        }
        if self.account_count == 0 {
            return bad("account_count must be positive".into());
        }
        Ok(())
    }

    /// Per-class sample counts: `round(total * share)` for every attack class,
    /// the rest to Normal.
    pub fn class_counts(&self) -> [usize; ClassLabel::COUNT] {
        let mut counts = [0usize; ClassLabel::COUNT];
        for l in ClassLabel::ATTACKS {
            counts[l.index()] = (self.total as f64 * self.proportions.get(l)).round() as usize;
        }
        // Rounding up several small classes can overshoot; trim the ones that
        // were rounded up the most.
        while counts.iter().sum::<usize>() > self.total {
            let worst = ClassLabel::ATTACKS
                .iter()
                .filter(|l| counts[l.index()] > 0)
                .max_by(|a, b| {
                    let over = |l: &ClassLabel| {
                        counts[l.index()] as f64 - self.total as f64 * self.proportions.get(*l)
                    };
                    over(a).total_cmp(&over(b))
                })
                .copied()
                .expect("some attack count is positive");
            counts[worst.index()] -= 1;
        }
        counts[ClassLabel::Normal.index()] = self.total - counts.iter().sum::<usize>();
        counts
    }
}

/// Deterministic pool of 20-byte account addresses.
#[derive(Debug, Clone)]
pub struct AccountPool {
    seed: u64,
    size: usize,
}

impl AccountPool {
    pub fn new(seed: u64, size: usize) -> Self {
        AccountPool {
            seed: rng::derive_seed(seed, 0xACC0),
            size: size.max(1),
        }
    }

    pub fn address(&self, index: usize) -> [u8; 20] {
        let mut out = [0u8; 20];
        let mut x = self.seed ^ (index as u64);
        for chunk in out.chunks_mut(8) {
            x = rng::splitmix64(x);
            chunk.copy_from_slice(&x.to_be_bytes()[..chunk.len()]);
        }
        out
    }

    pub fn pick(&self, rng: &mut impl Rng) -> [u8; 20] {
        self.address(rng.random_range(0..self.size))
    }
}

mod op {
    pub const ADD: u8 = 0x01;
    pub const SUB: u8 = 0x03;
    pub const ISZERO: u8 = 0x15;
    pub const SHL: u8 = 0x1B;
    pub const CALLVALUE: u8 = 0x34;
    pub const CALLDATASIZE: u8 = 0x36;
    pub const CALLDATACOPY: u8 = 0x37;
    pub const POP: u8 = 0x50;
    pub const MLOAD: u8 = 0x51;
    pub const MSTORE: u8 = 0x52;
    pub const SSTORE: u8 = 0x55;
    pub const JUMP: u8 = 0x56;
    pub const JUMPI: u8 = 0x57;
    pub const GAS: u8 = 0x5A;
    pub const JUMPDEST: u8 = 0x5B;
    pub const PUSH1: u8 = 0x60;
    pub const DUP1: u8 = 0x80;
    pub const SWAP1: u8 = 0x90;
    pub const CALL: u8 = 0xF1;
    pub const RETURN: u8 = 0xF3;
    pub const DELEGATECALL: u8 = 0xF4;
    pub const REVERT: u8 = 0xFD;
}

/// Instruction-level byte builder.
#[derive(Default)]
struct Code(Vec<u8>);

impl Code {
    fn op(&mut self, opcode: u8) -> &mut Self {
        self.0.push(opcode);
        self
    }

    fn push(&mut self, imm: &[u8]) -> &mut Self {
        assert!((1..=32).contains(&imm.len()));
        self.0.push(op::PUSH1 + imm.len() as u8 - 1);
        self.0.extend_from_slice(imm);
        self
    }

    fn push1(&mut self, v: u8) -> &mut Self {
        self.push(&[v])
    }
}

/// Standard Solidity free-memory-pointer prologue.
pub const DEPLOY_PROLOGUE: [u8; 5] = [0x60, 0x80, 0x60, 0x40, 0x52];
/// `transfer(address,uint256)`.
pub const TRANSFER_SELECTOR: [u8; 4] = [0xa9, 0x05, 0x9c, 0xbb];
/// `approve(address,uint256)`.
pub const APPROVE_SELECTOR: [u8; 4] = [0x09, 0x5e, 0xa7, 0xb3];
/// `withdraw(uint256)`.
pub const WITHDRAW_SELECTOR: [u8; 4] = [0x2e, 0x1a, 0x7d, 0x4d];
/// Jackpot `join()` entry point targeted by the gas-limit DoS.
pub const JOIN_SELECTOR: [u8; 4] = [0xb6, 0x88, 0xa3, 0x63];
/// Unguarded public functions (`initWallet()`, `kill()`, `setOwner(address)`).
pub const UNGUARDED_SELECTORS: [[u8; 4]; 3] = [
    [0xe4, 0x6d, 0xcf, 0xeb],
    [0x41, 0xc0, 0xe1, 0xb5],
    [0x13, 0xaf, 0x40, 0x35],
];

const BLOCK_WINDOW: usize = 1024;

fn random_hash(rng: &mut impl RngCore) -> TxHash {
    let mut h = [0u8; 32];
    rng.fill_bytes(&mut h);
    TxHash(h)
}

fn address_word(addr: &[u8; 20]) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[12..].copy_from_slice(addr);
    w
}

fn eth_to_wei(eth: f64) -> U256 {
    let wei = (eth * WEI_PER_ETH).clamp(1.0, 1e36);
    U256::from_u128(wei as u128)
}

fn benign_body(code: &mut Code, rng: &mut impl Rng, target_len: usize) {
    while code.0.len() < target_len {
        match rng.random_range(0..6) {
            0 => {
                code.push1(rng.random()).push1(rng.random()).op(op::ADD);
            }
            1 => {
                code.push1(rng.random()).op(op::MLOAD).op(op::DUP1).op(op::SWAP1).op(op::POP);
            }
            2 => {
                code.op(op::JUMPDEST).op(op::CALLVALUE).op(op::DUP1).op(op::ISZERO);
            }
            3 => {
                code.push(&rng.random::<[u8; 2]>()).op(op::JUMPI);
            }
            4 => {
                code.push(&rng.random::<[u8; 4]>()).push1(0xE0).op(op::SHL).op(op::POP);
            }
            _ => {
                code.push1(rng.random()).push1(rng.random()).op(op::MSTORE);
            }
        }
    }
}

/// One benign transaction: a plain transfer, a contract deployment or a token call.
pub fn generate_normal(rng: &mut impl Rng, spec: &GenSpec, accounts: &AccountPool) -> Transaction {
    let (mu, sigma) = spec.value_eth_lognormal;
    let lognormal = LogNormal::new(mu, sigma).expect("validated lognormal");
    let mut tx = Transaction::new(Vec::new(), U256::ZERO);
    tx.hash = Some(random_hash(rng));
    tx.label = Some(ClassLabel::Normal);
    if rng.random_bool(spec.plain_transfer_share) {
        tx.value = eth_to_wei(lognormal.sample(rng));
        return tx;
    }
    if rng.random_bool(0.5) {
        let mut code = Code(DEPLOY_PROLOGUE.to_vec());
        code.op(op::CALLVALUE).op(op::DUP1).op(op::ISZERO);
        code.push(&rng.random::<[u8; 2]>()).op(op::JUMPI);
        code.push1(0).op(op::DUP1).op(op::REVERT).op(op::JUMPDEST).op(op::POP);
        let len = rng.random_range(68..=400);
        benign_body(&mut code, rng, len);
        code.op(op::RETURN);
        tx.bytecode = code.0;
    } else {
        let selector = if rng.random_bool(0.8) {
            TRANSFER_SELECTOR
        } else {
            APPROVE_SELECTOR
        };
        let mut amount = [0u8; 32];
        amount[16..].copy_from_slice(&rng.random_range(1u128..=(1u128 << 96)).to_be_bytes());
        tx.bytecode.extend_from_slice(&selector);
        tx.bytecode.extend_from_slice(&address_word(&accounts.pick(rng)));
        tx.bytecode.extend_from_slice(&amount);
    }
    if rng.random_bool(0.1) {
        tx.value = eth_to_wei(lognormal.sample(rng));
    }
    tx
}

/// One transaction of the given attack class.
pub fn generate_attack(
    class: ClassLabel,
    rng: &mut impl Rng,
    accounts: &AccountPool,
) -> Result<Transaction, GenError> {
    let mut tx = Transaction::new(Vec::new(), U256::ZERO);
    tx.hash = Some(random_hash(rng));
    tx.label = Some(class);
    match class {
        ClassLabel::Normal => return Err(GenError::InvalidClass(class)),
        ClassLabel::DoS => {
            let record = 4 + 32;
            let repeats = rng.random_range(BLOCK_WINDOW / record - 2..=BLOCK_WINDOW / record);
            for _ in 0..repeats {
                tx.bytecode.extend_from_slice(&JOIN_SELECTOR);
                tx.bytecode.extend_from_slice(&address_word(&accounts.pick(rng)));
            }
            tx.value = eth_to_wei(rng.random_range(0.01..0.05));
        }
        ClassLabel::OaU => {
            let mut code = Code::default();
            // Overflowing add on 2^256-1, underflowing sub on 0.
            for (boundary, arith) in [([0xFF; 32], op::ADD), ([0; 32], op::SUB)].repeat(2) {
                let mut operand = [0u8; 32];
                operand[24..].copy_from_slice(&rng.random_range(1u64..=u64::MAX).to_be_bytes());
                code.push(&operand).push(&boundary).op(arith);
                code.push1(rng.random()).op(op::SSTORE);
            }
            tx.bytecode = code.0;
            let mut v: [u8; 32] = rng.random();
            v[0] |= 0x80;
            tx.value = U256::from_be_bytes(v);
        }
        ClassLabel::FoT => {
            tx.value = U256::from(rng.random_range(1u64..=10_000));
        }
        ClassLabel::Re => {
            let mut amount = [0u8; 32];
            amount[16..].copy_from_slice(&rng.random_range(1u128..=(1u128 << 80)).to_be_bytes());
            let victim = accounts.pick(rng);
            let mut code = Code::default();
            code.push(&WITHDRAW_SELECTOR).push1(0xE0).op(op::SHL).push1(0).op(op::MSTORE);
            code.push(&amount).push1(4).op(op::MSTORE);
            for slot in 0..rng.random_range(2u8..=8) {
                code.push1(0).push1(0).push1(0x24).push1(0).push1(0);
                code.push(&victim).op(op::GAS).op(op::CALL).op(op::POP);
                code.push1(1).push1(slot).op(op::SSTORE);
            }
            tx.bytecode = code.0;
        }
        ClassLabel::DeC => {
            let target: [u8; 20] = rng.random();
            let mut code = Code::default();
            code.op(op::CALLDATASIZE).push1(0).op(op::DUP1).op(op::CALLDATACOPY);
            code.push1(0).op(op::DUP1).op(op::CALLDATASIZE).push1(0);
            code.push(&target).op(op::GAS).op(op::DELEGATECALL);
            code.push1(0).op(op::MSTORE).push1(0x20).push1(0).op(op::RETURN);
            if rng.random_bool(0.5) {
                code.op(op::JUMPDEST).push(&rng.random::<[u8; 2]>()).op(op::JUMP);
            }
            tx.bytecode = code.0;
        }
        ClassLabel::FDV => {
            tx.bytecode = UNGUARDED_SELECTORS
                .choose(rng)
                .expect("non-empty selector set")
                .to_vec();
        }
    }
    Ok(tx)
}

pub fn generate_dataset(spec: &GenSpec) -> Result<Dataset, GenError> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let accounts = AccountPool::new(spec.seed, spec.account_count);
    let counts = spec.class_counts();
    let mut labels: Vec<ClassLabel> = ClassLabel::ALL
        .iter()
        .flat_map(|l| std::iter::repeat_n(*l, counts[l.index()]))
        .collect();
    labels.shuffle(&mut rng);

    let gaps = Exp::new(1.0 / spec.mean_interarrival_ms).expect("validated rate");
    let mut clock = 0.0f64;
    let mut transactions = Vec::with_capacity(spec.total);
    for label in labels {
        let mut tx = match label {
            ClassLabel::Normal => generate_normal(&mut rng, spec, &accounts),
            attack => generate_attack(attack, &mut rng, &accounts)?,
        };
        tx.timestamp_ms = Some(clock as u64);
        clock += gaps.sample(&mut rng);
        transactions.push(tx);
    }
    Ok(Dataset {
        transactions,
        meta: Some(DatasetMeta {
            seed: Some(spec.seed),
            generator_version: Some(GENERATOR_VERSION.to_string()),
            note: Some("synthetic attack traffic".to_string()),
            generator: Some(serde_json::to_value(spec).expect("spec serialises")),
        }),
    })
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} samples, seed {}", self.total, self.seed)
    }
}
