use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// Unsigned 256-bit integer stored as 32 big-endian bytes.
///
/// Only the operations the pipeline needs are provided: exact decimal and hex
/// conversion, comparison and construction from native integers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct U256([u8; 32]);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseU256Error {
    #[error("empty number")]
    Empty,
    #[error("invalid digit `{0}`")]
    InvalidDigit(char),
    #[error("number does not fit in 256 bits")]
    Overflow,
}

impl U256 {
    pub const ZERO: U256 = U256([0; 32]);
    pub const MAX: U256 = U256([0xFF; 32]);

    pub const fn from_be_bytes(bytes: [u8; 32]) -> Self {
        U256(bytes)
    }

    pub const fn to_be_bytes(self) -> [u8; 32] {
        self.0
    }

    pub fn as_be_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_u128(v: u128) -> Self {
        let mut b = [0u8; 32];
        b[16..].copy_from_slice(&v.to_be_bytes());
        U256(b)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Returns the value if it fits in a `u128`.
    pub fn to_u128(&self) -> Option<u128> {
        if self.0[..16].iter().any(|&b| b != 0) {
            return None;
        }
        let mut lo = [0u8; 16];
        lo.copy_from_slice(&self.0[16..]);
        Some(u128::from_be_bytes(lo))
    }

    /// `self * mul + add`, or `None` on overflow.
    fn mul_small_add(&self, mul: u32, add: u32) -> Option<U256> {
        let mut out = [0u8; 32];
        let mut carry = add as u64;
        for i in (0..32).rev() {
            let v = self.0[i] as u64 * mul as u64 + carry;
            out[i] = (v & 0xFF) as u8;
            carry = v >> 8;
        }
        (carry == 0).then_some(U256(out))
    }

    /// Returns `(self / div, self % div)`.
    fn div_small(&self, div: u32) -> (U256, u32) {
        let mut out = [0u8; 32];
        let mut rem = 0u64;
        for i in 0..32 {
            let cur = (rem << 8) | self.0[i] as u64;
            out[i] = (cur / div as u64) as u8;
            rem = cur % div as u64;
        }
        (U256(out), rem as u32)
    }

    fn parse_radix(digits: &str, radix: u32) -> Result<Self, ParseU256Error> {
        if digits.is_empty() {
            return Err(ParseU256Error::Empty);
        }
        let mut acc = U256::ZERO;
        for c in digits.chars() {
            let d = c.to_digit(radix).ok_or(ParseU256Error::InvalidDigit(c))?;
            acc = acc.mul_small_add(radix, d).ok_or(ParseU256Error::Overflow)?;
        }
        Ok(acc)
    }

    pub fn from_dec_str(s: &str) -> Result<Self, ParseU256Error> {
        Self::parse_radix(s, 10)
    }

    /// Parses a hex quantity with or without a `0x` prefix (`"0x0"`, `"0xde0b6b3a7640000"`).
    pub fn from_hex_str(s: &str) -> Result<Self, ParseU256Error> {
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        Self::parse_radix(digits, 16)
    }
}

impl From<u64> for U256 {
    fn from(v: u64) -> Self {
        U256::from_u128(v as u128)
    }
}

impl From<u128> for U256 {
    fn from(v: u128) -> Self {
        U256::from_u128(v)
    }
}

impl Ord for U256 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl PartialOrd for U256 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for U256 {
    type Err = ParseU256Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_dec_str(s)
    }
}

impl fmt::Display for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut digits = Vec::with_capacity(78);
        let mut cur = *self;
        while !cur.is_zero() {
            let (q, r) = cur.div_small(10);
            digits.push(b'0' + r as u8);
            cur = q;
        }
        digits.reverse();
        f.write_str(std::str::from_utf8(&digits).expect("ascii digits"))
    }
}

impl fmt::Debug for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U256({self})")
    }
}

impl fmt::LowerHex for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = hex::encode(self.0);
        let trimmed = hex.trim_start_matches('0');
        f.write_str(if trimmed.is_empty() { "0" } else { trimmed })
    }
}
