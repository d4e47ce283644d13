//! Linear one-pass EVM disassembler.
//!
//! Any byte sequence decodes. Bytes outside the instruction set become
//! `INVALID`, and a PUSH whose immediate runs past the end of the input is
//! zero-padded to its full width and flagged as truncated.

mod opcodes;

use std::fmt;

pub use opcodes::{opcode_info, push_width, OpcodeInfo, TABLE_VERSION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub offset: usize,
    pub opcode: u8,
    pub mnemonic: &'static str,
    /// Immediate bytes, zero-padded to the full PUSH width when truncated.
    pub immediate: Vec<u8>,
    pub truncated: bool,
}

impl Instruction {
    /// Number of input bytes this instruction actually covers.
    pub fn source_len(&self, source_len: usize) -> usize {
        (1 + self.immediate.len()).min(source_len - self.offset)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08x}: {}", self.offset, self.mnemonic)?;
        if !self.immediate.is_empty() {
            write!(f, " 0x{}", hex::encode(&self.immediate))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstructionSeq {
    pub instructions: Vec<Instruction>,
    pub source_len: usize,
}

impl InstructionSeq {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Instruction> {
        self.instructions.iter()
    }

    pub fn contains_opcode(&self, opcode: u8) -> bool {
        self.instructions.iter().any(|i| i.opcode == opcode)
    }

    pub fn is_truncated(&self) -> bool {
        self.instructions.last().is_some_and(|i| i.truncated)
    }

    /// One instruction per line, `<offset-hex>: <MNEMONIC> [0x<immediate-hex>]`.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for ins in &self.instructions {
            out.push_str(&ins.to_string());
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a InstructionSeq {
    type Item = &'a Instruction;
    type IntoIter = std::slice::Iter<'a, Instruction>;

    fn into_iter(self) -> Self::IntoIter {
        self.instructions.iter()
    }
}

pub fn decode_bytecode(bytecode: &[u8]) -> InstructionSeq {
    let mut instructions = Vec::with_capacity(bytecode.len());
    let mut pc = 0;
    while pc < bytecode.len() {
        let opcode = bytecode[pc];
        let info = opcode_info(opcode);
        let width = info.immediate_len;
        let available = &bytecode[pc + 1..(pc + 1 + width).min(bytecode.len())];
        let truncated = available.len() < width;
        let mut immediate = available.to_vec();
        immediate.resize(width, 0);
        instructions.push(Instruction {
            offset: pc,
            opcode,
            mnemonic: info.mnemonic,
            immediate,
            truncated,
        });
        pc += 1 + width;
    }
    InstructionSeq {
        instructions,
        source_len: bytecode.len(),
    }
}

/// Opcode byte followed by the (padded) immediate for each instruction.
pub fn instruction_bytes(seq: &InstructionSeq) -> Vec<u8> {
    let mut out = Vec::with_capacity(seq.source_len + 32);
    for ins in &seq.instructions {
        out.push(ins.opcode);
        out.extend_from_slice(&ins.immediate);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solidity_prologue() {
        let seq = decode_bytecode(&[0x60, 0x80, 0x60, 0x40, 0x52]);
        let got: Vec<_> = seq
            .iter()
            .map(|i| (i.offset, i.mnemonic, i.immediate.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                (0, "PUSH1", vec![0x80]),
                (2, "PUSH1", vec![0x40]),
                (4, "MSTORE", vec![]),
            ]
        );
        assert_eq!(
            seq.listing(),
            "00000000: PUSH1 0x80\n00000002: PUSH1 0x40\n00000004: MSTORE\n"
        );
    }

    #[test]
    fn empty_input() {
        let seq = decode_bytecode(&[]);
        assert!(seq.is_empty());
        assert_eq!(seq.source_len, 0);
        assert!(instruction_bytes(&seq).is_empty());
    }

    #[test]
    fn bare_push32_is_padded() {
        let seq = decode_bytecode(&[0x7F]);
        assert_eq!(seq.len(), 1);
        let ins = &seq.instructions[0];
        assert_eq!(ins.mnemonic, "PUSH32");
        assert_eq!(ins.immediate, vec![0; 32]);
        assert!(ins.truncated);
        let bytes = instruction_bytes(&seq);
        assert_eq!(bytes.len(), 33);
        assert_eq!(bytes[0], 0x7F);
        assert!(bytes[1..].iter().all(|&b| b == 0));
    }

    #[test]
    fn partial_push_keeps_available_bytes() {
        let seq = decode_bytecode(&[0x00, 0x62, 0xAA, 0xBB]);
        let last = seq.instructions.last().unwrap();
        assert_eq!(last.mnemonic, "PUSH3");
        assert_eq!(last.immediate, vec![0xAA, 0xBB, 0x00]);
        assert!(last.truncated);
        assert_eq!(last.source_len(seq.source_len), 3);
    }

    #[test]
    fn unknown_bytes_are_invalid() {
        let seq = decode_bytecode(&[0x0C, 0xFE, 0x5C]);
        assert!(seq.iter().all(|i| i.mnemonic == "INVALID" && i.immediate.is_empty()));
        assert_eq!(seq.len(), 3);
    }

    #[test]
    fn single_push_bytes() {
        let seq = decode_bytecode(&[0x60, 0x80]);
        assert_eq!(instruction_bytes(&seq), vec![0x60, 0x80]);
    }

    proptest! {
        #[test]
        fn reconstruction_and_coverage(bytes in proptest::collection::vec(any::<u8>(), 0..2048)) {
            let seq = decode_bytecode(&bytes);
            prop_assert_eq!(seq.source_len, bytes.len());
            // Every byte belongs to exactly one instruction, offsets chain.
            let mut expected = 0;
            for (k, ins) in seq.iter().enumerate() {
                prop_assert_eq!(ins.offset, expected);
                prop_assert_eq!(ins.immediate.len(), push_width(ins.opcode));
                prop_assert_eq!(ins.truncated, k + 1 == seq.len() && ins.offset + 1 + ins.immediate.len() > bytes.len());
                expected += ins.source_len(bytes.len());
            }
            prop_assert_eq!(expected, bytes.len());
            let flat = instruction_bytes(&seq);
            if seq.is_truncated() {
                prop_assert_eq!(&flat[..bytes.len()], &bytes[..]);
                prop_assert!(flat[bytes.len()..].iter().all(|&b| b == 0));
            } else {
                prop_assert_eq!(flat, bytes);
            }
        }
    }

    #[test]
    fn large_input_is_total() {
        let bytes: Vec<u8> = (0..128 * 1024).map(|i| (i * 131 % 251) as u8).collect();
        let seq = decode_bytecode(&bytes);
        assert_eq!(seq.source_len, bytes.len());
    }
}
