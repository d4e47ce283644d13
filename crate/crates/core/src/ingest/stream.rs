//! Time-windowed replay and detection.

use std::fmt::Write as _;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::rpc::{fetch_with, Transport};
use super::IngestError;
use crate::imaging::{preprocess_transaction, ImageMode};
use crate::neuralcore::{predict, ModelParams, NeuralError};
use crate::txcore::{ClassLabel, Dataset, Transaction, TxHash};

pub const DEFAULT_WINDOW_MS: u64 = 3000;

/// Recorded transactions in arrival order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixtureStream {
    transactions: Vec<Transaction>,
}

impl FixtureStream {
    /// Every record needs a timestamp and timestamps must not decrease.
    pub fn new(transactions: Vec<Transaction>) -> Result<Self, IngestError> {
        let mut last = 0;
        for (i, tx) in transactions.iter().enumerate() {
            let ts = tx.timestamp_ms.ok_or(IngestError::MissingTimestamp(i))?;
            if ts < last {
                return Err(IngestError::OutOfOrder(i));
            }
            last = ts;
        }
        Ok(FixtureStream { transactions })
    }

    pub fn from_dataset(d: Dataset) -> Result<Self, IngestError> {
        Self::new(d.transactions)
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }
}

impl IntoIterator for FixtureStream {
    type Item = Transaction;
    type IntoIter = std::vec::IntoIter<Transaction>;

    fn into_iter(self) -> Self::IntoIter {
        self.transactions.into_iter()
    }
}

/// Transactions whose timestamps fall in `[start_ms, start_ms + window_ms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub index: usize,
    pub start_ms: u64,
    pub transactions: Vec<Transaction>,
}

/// Lazily groups a timestamped sequence into consecutive half-open windows
/// anchored at the first timestamp; gaps produce empty windows. A missing or
/// decreasing timestamp is treated as equal to the latest one seen.
pub struct WindowIter<I: Iterator<Item = Transaction>> {
    source: std::iter::Peekable<I>,
    window_ms: u64,
    anchor: Option<u64>,
    latest: u64,
    index: usize,
}

fn effective_ts(tx: &Transaction, latest: u64) -> u64 {
    tx.timestamp_ms.unwrap_or(latest).max(latest)
}

impl<I: Iterator<Item = Transaction>> Iterator for WindowIter<I> {
    type Item = Window;

    fn next(&mut self) -> Option<Window> {
        let first_ts = {
            let latest = self.latest;
            effective_ts(self.source.peek()?, latest)
        };
        let anchor = *self.anchor.get_or_insert(first_ts);
        let start_ms = anchor + self.index as u64 * self.window_ms;
        let end_ms = start_ms + self.window_ms;
        let mut transactions = Vec::new();
        while let Some(tx) = self.source.peek() {
            let ts = effective_ts(tx, self.latest);
            if ts >= end_ms {
                break;
            }
            self.latest = ts;
            transactions.push(self.source.next().expect("peeked"));
        }
        let window = Window {
            index: self.index,
            start_ms,
            transactions,
        };
        self.index += 1;
        Some(window)
    }
}

pub fn window_stream<S>(stream: S, window_ms: u64) -> Result<WindowIter<S::IntoIter>, IngestError>
where
    S: IntoIterator<Item = Transaction>,
{
    if window_ms == 0 {
        return Err(IngestError::InvalidWindow);
    }
    Ok(WindowIter {
        source: stream.into_iter().peekable(),
        window_ms,
        anchor: None,
        latest: 0,
        index: 0,
    })
}

/// Detection summary of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub index: usize,
    pub start_ms: u64,
    /// Predicted count per class, in [`ClassLabel::ALL`] order.
    pub counts: [usize; ClassLabel::COUNT],
    pub tx_count: usize,
    pub elapsed_ms: f64,
    /// `None` for an empty window.
    pub tx_per_s: Option<f64>,
    /// Processing took longer than the window itself.
    pub deadline_missed: bool,
}

impl WindowReport {
    pub fn count(&self, label: ClassLabel) -> usize {
        self.counts[label.index()]
    }
}

fn check_model(model: &ModelParams, with_value: bool) -> Result<(), IngestError> {
    let want = ImageMode::for_value(with_value).dims();
    let got = (model.arch.input_rows, model.arch.input_cols);
    if want != got {
        return Err(IngestError::Neural(NeuralError::ShapeMismatch(format!(
            "model takes {got:?} images, mode produces {want:?}"
        ))));
    }
    Ok(())
}

/// Preprocesses and classifies every transaction of one window.
pub fn detect_window(
    window: &Window,
    model: &ModelParams,
    with_value: bool,
    window_ms: u64,
) -> Result<WindowReport, IngestError> {
    let started = Instant::now();
    let mut counts = [0; ClassLabel::COUNT];
    for tx in &window.transactions {
        let label = predict(model, &preprocess_transaction(tx, with_value))?;
        counts[label.index()] += 1;
    }
    let elapsed = started.elapsed();
    let tx_count = window.transactions.len();
    let elapsed_ms = elapsed.as_secs_f64() * 1e3;
    let deadline_missed = elapsed > Duration::from_millis(window_ms);
    if deadline_missed {
        log::warn!(
            "deadline: window {} took {elapsed_ms:.1} ms for {tx_count} transactions (budget {window_ms} ms)",
            window.index
        );
    }
    Ok(WindowReport {
        index: window.index,
        start_ms: window.start_ms,
        counts,
        tx_count,
        elapsed_ms,
        tx_per_s: (tx_count > 0).then(|| tx_count as f64 / elapsed.as_secs_f64().max(f64::MIN_POSITIVE)),
        deadline_missed,
    })
}

pub fn stream_detect<B>(
    batches: B,
    model: &ModelParams,
    with_value: bool,
    window_ms: u64,
) -> Result<Vec<WindowReport>, IngestError>
where
    B: IntoIterator<Item = Window>,
{
    check_model(model, with_value)?;
    batches
        .into_iter()
        .map(|w| detect_window(&w, model, with_value, window_ms))
        .collect()
}

/// Acquisition and detection on two threads joined by a bounded queue of
/// `queue_capacity` windows. `on_report` runs on the detector side, in window order.
pub fn run_pipeline<S, F>(
    source: S,
    window_ms: u64,
    queue_capacity: usize,
    model: &ModelParams,
    with_value: bool,
    mut on_report: F,
) -> Result<Vec<WindowReport>, IngestError>
where
    S: IntoIterator<Item = Transaction>,
    S::IntoIter: Send,
    F: FnMut(&WindowReport),
{
    check_model(model, with_value)?;
    let windows = window_stream(source, window_ms)?;
    let (tx, rx) = mpsc::sync_channel::<Window>(queue_capacity);
    std::thread::scope(|s| {
        s.spawn(move || {
            for w in windows {
                if tx.send(w).is_err() {
                    break;
                }
            }
        });
        let mut reports = Vec::new();
        for w in rx {
            let r = detect_window(&w, model, with_value, window_ms)?;
            on_report(&r);
            reports.push(r);
        }
        Ok(reports)
    })
}

/// Fetches transactions hash by hash and stamps each with its arrival time,
/// in milliseconds since the feed started. Hashes that fail to fetch are
/// logged and skipped.
pub struct LiveFeed<T: Transport, H: Iterator<Item = TxHash>> {
    transport: T,
    hashes: H,
    retries: u32,
    started: Instant,
}

impl<T: Transport, H: Iterator<Item = TxHash>> LiveFeed<T, H> {
    pub fn new(transport: T, hashes: H, retries: u32) -> Self {
        LiveFeed {
            transport,
            hashes,
            retries,
            started: Instant::now(),
        }
    }
}

impl<T: Transport, H: Iterator<Item = TxHash>> Iterator for LiveFeed<T, H> {
    type Item = Transaction;

    fn next(&mut self) -> Option<Transaction> {
        for hash in self.hashes.by_ref() {
            match fetch_with(&self.transport, &hash, self.retries) {
                Ok(f) => {
                    let mut tx = f.transaction;
                    tx.timestamp_ms = Some(self.started.elapsed().as_millis() as u64);
                    return Some(tx);
                }
                Err(e) => log::warn!("skipping {hash}: {e}"),
            }
        }
        None
    }
}

pub fn monitoring_header() -> String {
    let mut out = String::from("window_index,window_start_ms");
    for l in ClassLabel::ALL {
        out.push(',');
        out.push_str(l.name());
    }
    out.push_str(",tx_count,elapsed_ms,tx_per_s");
    out
}

pub fn monitoring_row(r: &WindowReport) -> String {
    let mut out = format!("{},{}", r.index, r.start_ms);
    for c in r.counts {
        let _ = write!(out, ",{c}");
    }
    let _ = write!(out, ",{},{:.3},", r.tx_count, r.elapsed_ms);
    if let Some(rate) = r.tx_per_s {
        let _ = write!(out, "{rate:.1}");
    }
    out
}

/// Per-window class counts over time as CSV.
pub fn monitoring_csv(reports: &[WindowReport]) -> String {
    let mut out = monitoring_header();
    out.push('\n');
    for r in reports {
        out.push_str(&monitoring_row(r));
        out.push('\n');
    }
    out
}
