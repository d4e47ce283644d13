use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use txguard_core::collab::{
    evaluate_model, evaluate_node, run_training, Aggregation, CollabError, TrainConfig, TrainMode,
};
use txguard_core::datagen::{generate_dataset, GenError, GenSpec, Proportions};
use txguard_core::evmdecode::decode_bytecode;
use txguard_core::imaging::{export_pgm, preprocess_transaction, ImageMode};
use txguard_core::ingest::{
    fetch_with, monitoring_header, monitoring_row, run_pipeline, FixtureStream, FixtureTransport, HttpTransport,
    IngestError, RpcEndpoint, Transport,
};
use txguard_core::neuralcore::{load_model, save_model, AdamConfig, NeuralError, SavedModel};
use txguard_core::rng::derive_seed;
use txguard_core::txcore::{
    decode_hex_prefixed, format_record, load_dataset, save_dataset, split_dataset, DatasetError, TxHash,
};
use txguard_core::{Dataset, Transaction, U256};

use crate::args::*;
use crate::CliError;

const SPLIT_STREAM: u64 = 0x73706c6974;

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(e) => CliError::Runtime(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::Io(e) => CliError::Data(format!("model file: {e}")),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<CollabError> for CliError {
    fn from(e: CollabError) -> Self {
        match e {
            CollabError::InvalidConfig(m) => CliError::Usage(m),
            CollabError::EmptyDataset | CollabError::EmptyPartition(_) | CollabError::Unlabeled(_) => {
                CliError::Data(e.to_string())
            }
            CollabError::Neural(n) => n.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Transport(_) | IngestError::Io(_) => CliError::Runtime(e.to_string()),
            IngestError::InvalidWindow | IngestError::InvalidEndpoint(_) => CliError::Usage(e.to_string()),
            IngestError::Neural(n) => n.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn io_err(what: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", what.display()))
}

fn output(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path).map_err(io_err(path))?)))
    }
}

fn load_saved(path: &Path, with_value: bool) -> Result<SavedModel, CliError> {
    let saved = load_model(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let want = ImageMode::for_value(with_value).dims();
    let got = (saved.params.arch.input_rows, saved.params.arch.input_cols);
    if want != got {
        let hint = if with_value { "pass --no-value" } else { "drop --no-value" };
        return Err(CliError::Data(format!(
            "{} takes {}x{} images but the selected mode produces {}x{}; {hint}",
            path.display(),
            got.0,
            got.1,
            want.0,
            want.1
        )));
    }
    Ok(saved)
}

fn proportions(arg: &str) -> Result<Proportions, CliError> {
    match arg {
        "reference" => Ok(Proportions::REFERENCE),
        "uniform" => Ok(Proportions::uniform()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{path}: {e}")))
        }
    }
}

pub fn gen(seed: u64, a: &GenArgs) -> Result<(), CliError> {
    let spec = GenSpec {
        total: a.total,
        proportions: proportions(&a.proportions)?,
        seed,
        plain_transfer_share: a.plain_transfer_share,
        mean_interarrival_ms: a.mean_interarrival_ms,
        ..GenSpec::default()
    };
    let d = generate_dataset(&spec).map_err(|e| match e {
        GenError::InvalidSpec(m) => CliError::Usage(m),
        other => CliError::Runtime(other.to_string()),
    })?;
    save_dataset(&d, &a.out)?;
    let counts = d.class_counts();
    eprintln!("wrote {} transactions to {}", d.len(), a.out.display());
    for l in txguard_core::ClassLabel::ALL {
        eprintln!("  {:<6} {}", l.name(), counts[l.index()]);
    }
    Ok(())
}

pub fn train(seed: u64, a: &TrainArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.test_fraction) {
        return Err(CliError::Usage("--test-fraction must lie in [0, 1]".into()));
    }
    let data = load_dataset(&a.data)?;
    let (train, test) = split_dataset(&data, a.test_fraction, derive_seed(seed, SPLIT_STREAM));
    let with_value = a.value.enabled();
    let cfg = TrainConfig {
        iterations: a.iters,
        batch_size: a.batch,
        mode: match a.mode {
            ModeArg::Centralized => TrainMode::Centralized,
            ModeArg::Collab => TrainMode::Collaborative { nodes: a.nodes },
        },
        with_value,
        seed,
        adam: AdamConfig {
            learning_rate: a.learning_rate,
            ..AdamConfig::default()
        },
        aggregation: match a.aggregation {
            AggregationArg::Gradient => Aggregation::Gradient,
            AggregationArg::Parameter => Aggregation::Parameter,
        },
        eval_every: a.eval_every,
        parallel: a.parallel,
    };
    let started = std::time::Instant::now();
    let outcome = run_training(&train, &test, &cfg)?;
    eprintln!(
        "trained {} node(s) for {} iterations on {} samples in {:.1} s",
        outcome.nodes.len(),
        a.iters,
        train.len(),
        started.elapsed().as_secs_f64()
    );
    std::fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    for node in &outcome.nodes {
        let name = match a.mode {
            ModeArg::Centralized => "centralized.json".to_string(),
            ModeArg::Collab => format!("node-{}.json", node.node_id),
        };
        let path = a.out.join(name);
        let saved = SavedModel {
            params: node.params.clone(),
            seed,
            adam: Some(node.adam.clone()),
        };
        save_model(&saved, &path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        if !node.local_test.is_empty() {
            let r = evaluate_node(node, with_value)?;
            eprintln!(
                "  node {}: local test accuracy {:.4} on {} samples",
                node.node_id, r.accuracy, r.sample_count
            );
        }
    }
    let log_path = a.out.join("rounds.csv");
    std::fs::write(&log_path, outcome.log.to_csv()).map_err(io_err(&log_path))?;
    save_dataset(&test, &a.out.join("test.jsonl"))?;
    if !test.is_empty() {
        let r = evaluate_model(&outcome.nodes[0].params, &test, with_value)?;
        eprintln!("held-out accuracy {:.4} on {} samples", r.accuracy, r.sample_count);
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let with_value = a.value.enabled();
    let saved = load_saved(&a.model, with_value)?;
    let data = load_dataset(&a.data)?;
    let report = evaluate_model(&saved.params, &data, with_value)?;
    eprint!("{}", report.render_table());
    std::fs::write(&a.csv, report.confusion_csv()).map_err(io_err(&a.csv))?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    Ok(())
}

pub fn stream(a: &StreamArgs) -> Result<(), CliError> {
    let with_value = a.value.enabled();
    let saved = load_saved(&a.model, with_value)?;
    let fixture = FixtureStream::from_dataset(load_dataset(&a.data)?)?;
    let mut out = output(&a.out)?;
    writeln!(out, "{}", monitoring_header()).map_err(io_err(&a.out))?;
    let mut write_err = None;
    let reports = run_pipeline(fixture, a.window_ms, a.queue.max(1), &saved.params, with_value, |r| {
        if write_err.is_none() {
            write_err = writeln!(out, "{}", monitoring_row(r)).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(io_err(&a.out)(e));
    }
    out.flush().map_err(io_err(&a.out))?;
    let total: usize = reports.iter().map(|r| r.tx_count).sum();
    let busy: f64 = reports.iter().map(|r| r.elapsed_ms).sum::<f64>() / 1e3;
    let missed = reports.iter().filter(|r| r.deadline_missed).count();
    eprintln!(
        "{total} transactions in {} windows, {:.0} tx/s while detecting, {missed} deadline misses",
        reports.len(),
        total as f64 / busy.max(f64::MIN_POSITIVE)
    );
    Ok(())
}

pub fn decode(a: &DecodeArgs) -> Result<(), CliError> {
    let text = match (&a.bytecode, &a.file) {
        (Some(hex), _) => hex.clone(),
        (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        (None, None) => return Err(CliError::Usage("give bytecode or --file".into())),
    };
    let bytes = parse_bytecode(&text)?;
    print!("{}", decode_bytecode(&bytes).listing());
    Ok(())
}

fn parse_bytecode(text: &str) -> Result<Vec<u8>, CliError> {
    let text = text.trim();
    let owned;
    let prefixed = if text.starts_with("0x") || text.starts_with("0X") {
        text
    } else {
        owned = format!("0x{text}");
        &owned
    };
    decode_hex_prefixed(prefixed).map_err(|e| CliError::Data(format!("bytecode: {e}")))
}

fn parse_wei(s: &str) -> Result<U256, CliError> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => U256::from_hex_str(hex),
        None => U256::from_dec_str(s),
    };
    parsed.map_err(|e| CliError::Data(format!("value `{s}`: {e}")))
}

pub fn encode(a: &EncodeArgs) -> Result<(), CliError> {
    let tx = match &a.data {
        Some(path) => {
            let d = load_dataset(path)?;
            let n = d.len();
            d.transactions.into_iter().nth(a.index).ok_or_else(|| {
                CliError::Data(format!("{} has {n} records, no index {}", path.display(), a.index))
            })?
        }
        None => {
            let bytecode = parse_bytecode(&a.bytecode)?;
            Transaction::new(bytecode, parse_wei(&a.value_wei)?)
        }
    };
    let img = preprocess_transaction(&tx, a.value.enabled());
    export_pgm(&img, &a.out).map_err(|e| CliError::Runtime(format!("{}: {e}", a.out.display())))?;
    eprintln!("wrote {}x{} image to {}", img.rows(), img.cols(), a.out.display());
    Ok(())
}

pub fn fetch(a: &FetchArgs) -> Result<(), CliError> {
    let mut raw = a.hashes.clone();
    if let Some(path) = &a.hash_file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        raw.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string));
    }
    if raw.is_empty() {
        return Err(CliError::Usage("no transaction hashes given; use --hash or --hash-file".into()));
    }
    let hashes = raw
        .iter()
        .map(|h| h.parse::<TxHash>().map_err(|e| CliError::Data(format!("hash `{h}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let endpoint = RpcEndpoint {
        url: a.url.clone(),
        timeout_ms: a.timeout_ms,
        retries: a.retries,
    };
    let transport: Box<dyn Transport> = match &a.fixture {
        Some(path) => Box::new(FixtureTransport::load(path)?),
        None => Box::new(HttpTransport::new(&endpoint)?),
    };
    let mut fetched = Vec::with_capacity(hashes.len());
    for h in &hashes {
        let f = fetch_with(transport.as_ref(), h, a.retries).map_err(|e| match e {
            IngestError::NotFound => CliError::Data(format!("{h}: transaction not found")),
            other => CliError::from(other),
        })?;
        fetched.push(f.transaction);
    }
    if a.out.as_os_str() == "-" {
        let mut out = io::stdout().lock();
        for tx in &fetched {
            writeln!(out, "{}", format_record(tx)).map_err(io_err(&a.out))?;
        }
    } else {
        save_dataset(&Dataset::new(fetched), &a.out)?;
    }
    eprintln!("fetched {} transaction(s)", hashes.len());
    Ok(())
}
