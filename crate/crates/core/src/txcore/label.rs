use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Normal behaviour plus the six attack classes, in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Normal,
    /// Denial of service through functions whose gas need exceeds the block gas limit.
    DoS,
    /// Integer overflow or underflow.
    OaU,
    /// Flooding of transactions.
    FoT,
    /// Re-entrancy.
    Re,
    /// Delegatecall hijacking.
    DeC,
    /// Function default visibility.
    FDV,
}

impl ClassLabel {
    pub const COUNT: usize = 7;

    pub const ALL: [ClassLabel; Self::COUNT] = [
        ClassLabel::Normal,
        ClassLabel::DoS,
        ClassLabel::OaU,
        ClassLabel::FoT,
        ClassLabel::Re,
        ClassLabel::DeC,
        ClassLabel::FDV,
    ];

    pub const ATTACKS: [ClassLabel; 6] = [
        ClassLabel::DoS,
        ClassLabel::OaU,
        ClassLabel::FoT,
        ClassLabel::Re,
        ClassLabel::DeC,
        ClassLabel::FDV,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Normal => "Normal",
            ClassLabel::DoS => "DoS",
            ClassLabel::OaU => "OaU",
            ClassLabel::FoT => "FoT",
            ClassLabel::Re => "Re",
            ClassLabel::DeC => "DeC",
            ClassLabel::FDV => "FDV",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown class label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for ClassLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}
