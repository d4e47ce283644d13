//! Transaction model, class labels and the line-delimited dataset format.

mod label;
mod u256;

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use label::{ClassLabel, UnknownLabel};
pub use u256::{ParseU256Error, U256};

use crate::rng;

/// 32-byte transaction identifier.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TxHash(pub [u8; 32]);

impl TxHash {
    pub fn from_hex(s: &str) -> Result<Self, String> {
        let raw = decode_hex_prefixed(s)?;
        let bytes: [u8; 32] = raw
            .try_into()
            .map_err(|v: Vec<u8>| format!("hash must be 32 bytes, got {}", v.len()))?;
        Ok(TxHash(bytes))
    }
}

impl fmt::Display for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for TxHash {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TxHash::from_hex(s)
    }
}

/// Decodes `0x`-prefixed hex; `"0x"` is the empty byte string.
pub fn decode_hex_prefixed(s: &str) -> Result<Vec<u8>, String> {
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or_else(|| format!("hex string `{s}` lacks 0x prefix"))?;
    hex::decode(digits).map_err(|e| format!("bad hex: {e}"))
}

pub fn encode_hex_prefixed(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}

/// A transaction as seen by a mining node: the input bytecode and the transferred value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub hash: Option<TxHash>,
    pub bytecode: Vec<u8>,
    /// Amount in wei.
    pub value: U256,
    pub timestamp_ms: Option<u64>,
    pub label: Option<ClassLabel>,
}

impl Transaction {
    pub fn new(bytecode: Vec<u8>, value: U256) -> Self {
        Transaction {
            hash: None,
            bytecode,
            value,
            timestamp_ms: None,
            label: None,
        }
    }
}

/// Provenance of a dataset; stored in a `<file>.meta.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DatasetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Full generator settings, when the dataset was synthesised.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub transactions: Vec<Transaction>,
    pub meta: Option<DatasetMeta>,
}

impl Dataset {
    pub fn new(transactions: Vec<Transaction>) -> Self {
        Dataset {
            transactions,
            meta: None,
        }
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Per-class sample counts, indexed by [`ClassLabel::index`]; unlabelled records are skipped.
    pub fn class_counts(&self) -> [usize; ClassLabel::COUNT] {
        let mut counts = [0; ClassLabel::COUNT];
        for tx in &self.transactions {
            if let Some(l) = tx.label {
                counts[l.index()] += 1;
            }
        }
        counts
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("node count must be at least 1")]
    ZeroNodes,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// On-disk form of one transaction line.
#[derive(Debug, Serialize, Deserialize)]
struct TxRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hash: Option<String>,
    bytecode: String,
    value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl From<&Transaction> for TxRecord {
    fn from(tx: &Transaction) -> Self {
        TxRecord {
            hash: tx.hash.map(|h| h.to_string()),
            bytecode: encode_hex_prefixed(&tx.bytecode),
            value: tx.value.to_string(),
            timestamp_ms: tx.timestamp_ms,
            label: tx.label.map(|l| l.name().to_string()),
        }
    }
}

impl TryFrom<TxRecord> for Transaction {
    type Error = String;

    fn try_from(r: TxRecord) -> Result<Self, Self::Error> {
        let hash = r.hash.as_deref().map(TxHash::from_hex).transpose()?;
        let bytecode = decode_hex_prefixed(&r.bytecode)?;
        let value = U256::from_dec_str(&r.value).map_err(|e| format!("value: {e}"))?;
        let label = r
            .label
            .as_deref()
            .map(ClassLabel::from_str)
            .transpose()
            .map_err(|e| e.to_string())?;
        Ok(Transaction {
            hash,
            bytecode,
            value,
            timestamp_ms: r.timestamp_ms,
            label,
        })
    }
}

/// Parses one dataset line.
pub fn parse_record(line: &str) -> Result<Transaction, String> {
    let rec: TxRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    Transaction::try_from(rec)
}

pub fn format_record(tx: &Transaction) -> String {
    serde_json::to_string(&TxRecord::from(tx)).expect("record serialises")
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => DatasetError::FileNotFound(path.to_path_buf()),
        _ => DatasetError::Io(e),
    })?;
    let mut transactions = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tx = parse_record(&line).map_err(|reason| DatasetError::MalformedRecord {
            line: i + 1,
            reason,
        })?;
        transactions.push(tx);
    }
    let meta_file = meta_path(path);
    let meta = if meta_file.exists() {
        let text = std::fs::read_to_string(&meta_file)?;
        Some(
            serde_json::from_str(&text).map_err(|e| DatasetError::MalformedRecord {
                line: 0,
                reason: format!("{}: {e}", meta_file.display()),
            })?,
        )
    } else {
        None
    };
    Ok(Dataset { transactions, meta })
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    for tx in &d.transactions {
        w.write_all(format_record(tx).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    if let Some(meta) = &d.meta {
        let text = serde_json::to_string_pretty(meta).expect("meta serialises");
        std::fs::write(meta_path(path), text + "\n")?;
    }
    Ok(())
}

fn shuffled(d: &Dataset, seed: u64) -> Vec<Transaction> {
    let mut txs = d.transactions.clone();
    txs.shuffle(&mut rng::seeded(seed));
    txs
}

/// Seeded shuffle, then the first `round(test_fraction * n)` records become the test set.
pub fn split_dataset(d: &Dataset, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let fraction = test_fraction.clamp(0.0, 1.0);
    let mut txs = shuffled(d, seed);
    let test_len = (fraction * txs.len() as f64).round() as usize;
    let train = txs.split_off(test_len);
    (Dataset::new(train), Dataset::new(txs))
}

/// Seeded shuffle, then contiguous slices whose sizes differ by at most one;
/// the remainder goes to the lowest-index nodes.
pub fn partition_equal(
    d: &Dataset,
    node_count: usize,
    seed: u64,
) -> Result<Vec<Dataset>, DatasetError> {
    if node_count == 0 {
        return Err(DatasetError::ZeroNodes);
    }
    let txs = shuffled(d, seed);
    let base = txs.len() / node_count;
    let extra = txs.len() % node_count;
    let mut iter = txs.into_iter();
    Ok((0..node_count)
        .map(|k| {
            let size = base + usize::from(k < extra);
            Dataset::new(iter.by_ref().take(size).collect())
        })
        .collect())
}
