//! `eth_getTransactionByHash` over JSON-RPC 2.0.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::IngestError;
use crate::txcore::{decode_hex_prefixed, Transaction, TxHash, U256};

pub const GET_TX_METHOD: &str = "eth_getTransactionByHash";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpcEndpoint {
    pub url: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout() -> u64 {
    5000
}

fn default_retries() -> u32 {
    2
}

impl RpcEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        RpcEndpoint {
            url: url.into(),
            timeout_ms: default_timeout(),
            retries: default_retries(),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.timeout_ms == 0 {
            return Err(IngestError::InvalidEndpoint("timeout must be positive".into()));
        }
        Ok(())
    }
}

/// Something that answers JSON-RPC requests.
pub trait Transport {
    fn call(&self, request: &Value) -> Result<Value, IngestError>;
}

/// JSON-RPC over HTTP POST.
#[cfg(feature = "http")]
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
}

#[cfg(feature = "http")]
impl HttpTransport {
    pub fn new(ep: &RpcEndpoint) -> Result<Self, IngestError> {
        ep.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_millis(ep.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpTransport {
            agent,
            url: ep.url.clone(),
        })
    }
}

#[cfg(feature = "http")]
impl Transport for HttpTransport {
    fn call(&self, request: &Value) -> Result<Value, IngestError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(request)
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(IngestError::Transport(format!("HTTP {status}")));
        }
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| IngestError::MalformedResponse(e.to_string()))
    }
}

/// Recorded `{request, response}` pairs, one JSON object per line. A request
/// matches a recording when method and params agree; the id is ignored and
/// echoed back.
#[derive(Debug, Clone, Default)]
pub struct FixtureTransport {
    pairs: Vec<(Value, Value)>,
}

#[derive(Deserialize)]
struct FixtureLine {
    request: Value,
    response: Value,
}

impl FixtureTransport {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: FixtureLine = serde_json::from_str(line)
                .map_err(|e| IngestError::Fixture(format!("line {}: {e}", i + 1)))?;
            pairs.push((rec.request, rec.response));
        }
        Ok(FixtureTransport { pairs })
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl Transport for FixtureTransport {
    fn call(&self, request: &Value) -> Result<Value, IngestError> {
        let (_, response) = self
            .pairs
            .iter()
            .find(|(req, _)| req["method"] == request["method"] && req["params"] == request["params"])
            .ok_or_else(|| IngestError::Transport(format!("no recorded response for {request}")))?;
        let mut response = response.clone();
        if let Some(obj) = response.as_object_mut() {
            obj.insert("id".into(), request["id"].clone());
        }
        Ok(response)
    }
}

pub fn get_tx_request(hash: &TxHash, id: u64) -> Value {
    json!({
        "jsonrpc": "2.0",
        "id": id,
        "method": GET_TX_METHOD,
        "params": [hash.to_string()],
    })
}

/// A fetched transaction with the sender and recipient addresses the node reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedTransaction {
    pub transaction: Transaction,
    pub from: Option<String>,
    /// `None` for contract creation.
    pub to: Option<String>,
}

fn hex_field<'a>(obj: &'a Value, name: &str) -> Result<Option<&'a str>, IngestError> {
    match obj.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(IngestError::MalformedResponse(format!("`{name}` is not a string: {other}"))),
    }
}

/// Maps a JSON-RPC response body to a transaction.
pub fn parse_tx_response(response: &Value) -> Result<FetchedTransaction, IngestError> {
    if let Some(err) = response.get("error") {
        return Err(IngestError::Rpc {
            code: err["code"].as_i64().unwrap_or(0),
            message: err["message"].as_str().unwrap_or_default().to_string(),
        });
    }
    let result = response
        .get("result")
        .ok_or_else(|| IngestError::MalformedResponse("missing `result`".into()))?;
    if result.is_null() {
        return Err(IngestError::NotFound);
    }
    if !result.is_object() {
        return Err(IngestError::MalformedResponse("`result` is not an object".into()));
    }
    let malformed = |e: String| IngestError::MalformedResponse(e);
    let input = hex_field(result, "input")?
        .or(hex_field(result, "data")?)
        .ok_or_else(|| malformed("missing `input`".into()))?;
    let bytecode = decode_hex_prefixed(input).map_err(|e| malformed(format!("input: {e}")))?;
    let value = hex_field(result, "value")?.ok_or_else(|| malformed("missing `value`".into()))?;
    let value = U256::from_hex_str(value).map_err(|e| malformed(format!("value: {e}")))?;
    let hash = hex_field(result, "hash")?
        .map(TxHash::from_hex)
        .transpose()
        .map_err(|e| malformed(format!("hash: {e}")))?;
    let mut transaction = Transaction::new(bytecode, value);
    transaction.hash = hash;
    Ok(FetchedTransaction {
        transaction,
        from: hex_field(result, "from")?.map(str::to_string),
        to: hex_field(result, "to")?.map(str::to_string),
    })
}

/// Fetches one transaction, retrying transport failures up to `retries` times.
pub fn fetch_with(transport: &dyn Transport, hash: &TxHash, retries: u32) -> Result<FetchedTransaction, IngestError> {
    let mut attempt = 0;
    loop {
        match transport.call(&get_tx_request(hash, attempt as u64 + 1)) {
            Ok(resp) => return parse_tx_response(&resp),
            Err(IngestError::Transport(msg)) if attempt < retries => {
                log::warn!("fetch {hash} attempt {} failed: {msg}", attempt + 1);
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(feature = "http")]
pub fn fetch_transaction(ep: &RpcEndpoint, hash: &TxHash) -> Result<Transaction, IngestError> {
    let transport = HttpTransport::new(ep)?;
    fetch_with(&transport, hash, ep.retries).map(|f| f.transaction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    fn hash(n: u8) -> TxHash {
        TxHash([n; 32])
    }

    fn response(result: Value) -> Value {
        json!({"jsonrpc": "2.0", "id": 1, "result": result})
    }

    #[test]
    fn maps_fields() {
        let r = response(json!({
            "hash": hash(1).to_string(),
            "input": "0x6080604052",
            "value": "0xde0b6b3a7640000",
            "from": "0x00000000000000000000000000000000000000aa",
            "to": null,
        }));
        let f = parse_tx_response(&r).unwrap();
        assert_eq!(f.transaction.bytecode, vec![0x60, 0x80, 0x60, 0x40, 0x52]);
        assert_eq!(f.transaction.value, U256::from(1_000_000_000_000_000_000u64));
        assert_eq!(f.transaction.hash, Some(hash(1)));
        assert_eq!(f.transaction.label, None);
        assert_eq!(f.to, None);
        assert!(f.from.is_some());
    }

    #[test]
    fn zero_value_and_data_alias() {
        let f = parse_tx_response(&response(json!({"data": "0x", "value": "0x0"}))).unwrap();
        assert_eq!(f.transaction.value, U256::ZERO);
        assert!(f.transaction.bytecode.is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_tx_response(&response(Value::Null)), Err(IngestError::NotFound)));
        assert!(matches!(
            parse_tx_response(&response(json!({"input": "0xzz", "value": "0x0"}))),
            Err(IngestError::MalformedResponse(_))
        ));
        assert!(matches!(
            parse_tx_response(&response(json!({"input": "0x"}))),
            Err(IngestError::MalformedResponse(_))
        ));
        assert!(matches!(
            parse_tx_response(&json!({"jsonrpc": "2.0", "id": 1})),
            Err(IngestError::MalformedResponse(_))
        ));
        assert!(matches!(
            parse_tx_response(&json!({"error": {"code": -32602, "message": "invalid argument"}})),
            Err(IngestError::Rpc { code: -32602, .. })
        ));
    }

    struct Flaky {
        failures: Cell<u32>,
    }

    impl Transport for Flaky {
        fn call(&self, _: &Value) -> Result<Value, IngestError> {
            if self.failures.get() > 0 {
                self.failures.set(self.failures.get() - 1);
                return Err(IngestError::Transport("connection refused".into()));
            }
            Ok(response(json!({"input": "0x00", "value": "0x1"})))
        }
    }

    #[test]
    fn retries_transport_failures() {
        let t = Flaky { failures: Cell::new(2) };
        assert!(fetch_with(&t, &hash(2), 2).is_ok());
        let t = Flaky { failures: Cell::new(3) };
        assert!(matches!(fetch_with(&t, &hash(2), 2), Err(IngestError::Transport(_))));
    }

    #[test]
    fn fixture_lookup() {
        let line = json!({
            "request": get_tx_request(&hash(3), 7),
            "response": response(json!({"input": "0x01", "value": "0x2"})),
        });
        let fx = FixtureTransport::parse(&format!("{line}\n\n")).unwrap();
        assert_eq!(fx.len(), 1);
        let got = fetch_with(&fx, &hash(3), 0).unwrap();
        assert_eq!(got.transaction.bytecode, vec![1]);
        assert!(matches!(fetch_with(&fx, &hash(4), 0), Err(IngestError::Transport(_))));
        assert!(FixtureTransport::parse("{not json").is_err());
    }

    #[test]
    #[cfg(feature = "http")]
    fn zero_timeout_rejected() {
        let mut ep = RpcEndpoint::new("http://127.0.0.1:1");
        ep.timeout_ms = 0;
        assert!(matches!(HttpTransport::new(&ep), Err(IngestError::InvalidEndpoint(_))));
    }
}
