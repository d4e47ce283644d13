//! WebAssembly bindings for the static page in `www/`.
//!
//! Each export is a thin wrapper over a plain Rust function so the logic can
//! be tested natively; the wrappers only convert errors into JS exceptions.

use serde_json::json;
use txguard_core::datagen::{generate_attack, generate_normal, AccountPool, GenSpec};
use txguard_core::evmdecode::decode_bytecode;
use txguard_core::imaging::preprocess_transaction;
use txguard_core::txcore::{decode_hex_prefixed, encode_hex_prefixed};
use txguard_core::{rng, ClassLabel, Transaction, U256};
use wasm_bindgen::prelude::*;

/// Width of every image row.
pub const IMAGE_COLS: usize = 32;

fn parse_bytecode(hex: &str) -> Result<Vec<u8>, String> {
    let hex = hex.trim();
    if hex.starts_with("0x") || hex.starts_with("0X") {
        decode_hex_prefixed(hex)
    } else {
        decode_hex_prefixed(&format!("0x{hex}"))
    }
}

fn parse_wei(s: &str) -> Result<U256, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x") {
        Some(hex) => U256::from_hex_str(hex),
        None if s.is_empty() => Ok(U256::ZERO),
        None => U256::from_dec_str(s),
    };
    parsed.map_err(|e| format!("value: {e}"))
}

/// Linear disassembly, one instruction per line.
pub fn disassemble(hex: &str) -> Result<String, String> {
    Ok(decode_bytecode(&parse_bytecode(hex)?).listing())
}

/// Grey pixels of the transaction image, row-major with [`IMAGE_COLS`] columns.
pub fn image_pixels(hex: &str, value_wei: &str, with_value: bool) -> Result<Vec<u8>, String> {
    let tx = Transaction::new(parse_bytecode(hex)?, parse_wei(value_wei)?);
    Ok(preprocess_transaction(&tx, with_value).into_pixels())
}

/// A synthetic transaction of `class` as `{label, bytecode, value_wei}` JSON.
pub fn sample(class: &str, seed: u64) -> Result<String, String> {
    let label: ClassLabel = class.parse().map_err(|e| format!("{e}"))?;
    let spec = GenSpec::default();
    let accounts = AccountPool::new(seed, spec.account_count);
    let mut r = rng::seeded(seed);
    let tx = match label {
        ClassLabel::Normal => generate_normal(&mut r, &spec, &accounts),
        attack => generate_attack(attack, &mut r, &accounts).map_err(|e| e.to_string())?,
    };
    Ok(json!({
        "label": label.name(),
        "bytecode": encode_hex_prefixed(&tx.bytecode),
        "value_wei": tx.value.to_string(),
    })
    .to_string())
}

#[wasm_bindgen(js_name = disassemble)]
pub fn disassemble_js(hex: &str) -> Result<String, JsValue> {
    disassemble(hex).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = imagePixels)]
pub fn image_pixels_js(hex: &str, value_wei: &str, with_value: bool) -> Result<Vec<u8>, JsValue> {
    image_pixels(hex, value_wei, with_value).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = sample)]
pub fn sample_js(class: &str, seed: u64) -> Result<String, JsValue> {
    sample(class, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = classNames)]
pub fn class_names() -> Vec<String> {
    ClassLabel::ALL.iter().map(|l| l.name().to_string()).collect()
}
