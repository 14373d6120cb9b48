//! Bit-granular binary buffers.
//!
//! Bits are packed MSB-first: the first bit of a [`BitString`] is the most
//! significant bit of its first byte. Unused low bits of the last byte are
//! always zero so that derived equality is bit-exact.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("underrun: needed {needed} bits, {available} available")]
    Underrun { needed: usize, available: usize },
    #[error("bit length {0} is not a whole number of bytes")]
    NotByteAligned(usize),
    #[error("invalid {kind} literal digit {digit:?}")]
    InvalidDigit { kind: &'static str, digit: char },
}

/// An immutable-by-convention sequence of bits.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitString {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        BitString {
            bytes: bytes.to_vec(),
            len: bytes.len() * 8,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = BitString::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Parses the digits of a `b'..'` literal.
    pub fn parse_bits(digits: &str) -> Result<Self, BitError> {
        let mut out = BitString::with_capacity(digits.len());
        for c in digits.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(BitError::InvalidDigit { kind: "bit", digit: c }),
            }
        }
        Ok(out)
    }

    /// Parses the digits of an `X'..'` literal; each digit contributes four bits.
    pub fn parse_hex(digits: &str) -> Result<Self, BitError> {
        let mut out = BitString::with_capacity(digits.len() * 4);
        for c in digits.chars() {
            let v = c
                .to_digit(16)
                .ok_or(BitError::InvalidDigit { kind: "hex", digit: c })?;
            out.push_uint(v as u128, 4);
        }
        Ok(out)
    }

    /// Fixed-width big-endian rendering of the low `width` bits of `value`.
    pub fn from_uint(value: u128, width: usize) -> Self {
        let mut out = BitString::with_capacity(width);
        out.push_uint(value, width);
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| self.bytes[index / 8] & (0x80 >> (index % 8)) != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    pub fn push_uint(&mut self, value: u128, width: usize) {
        for i in (0..width).rev() {
            let bit = if i >= 128 { false } else { (value >> i) & 1 == 1 };
            self.push(bit);
        }
    }

    /// Appends whole bytes; fast path when `self` is byte aligned.
    pub fn push_bytes(&mut self, bytes: &[u8]) {
        if self.len.is_multiple_of(8) {
            self.bytes.extend_from_slice(bytes);
            self.len += bytes.len() * 8;
        } else {
            for &b in bytes {
                self.push_uint(b as u128, 8);
            }
        }
    }

    pub fn extend(&mut self, other: &BitString) {
        if self.len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
        } else {
            for b in other.iter() {
                self.push(b);
            }
        }
    }

    /// Concatenation: `self` followed by `other`.
    pub fn append(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    /// Splits off the first `n` bits.
    pub fn take(&self, n: usize) -> Result<(BitString, BitString), BitError> {
        if n > self.len {
            return Err(BitError::Underrun {
                needed: n,
                available: self.len,
            });
        }
        Ok((self.slice(0, n), self.slice(n, self.len - n)))
    }

    /// Copies `len` bits starting at `start`. Panics when out of range.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        if start.is_multiple_of(8) {
            let mut bytes = self.bytes[start / 8..(start + len).div_ceil(8)].to_vec();
            if !len.is_multiple_of(8) {
                let last = bytes.len() - 1;
                bytes[last] &= 0xFFu8 << (8 - len % 8);
            }
            return BitString { bytes, len };
        }
        let mut out = BitString::with_capacity(len);
        for i in start..start + len {
            out.push(self.bytes[i / 8] & (0x80 >> (i % 8)) != 0);
        }
        out
    }

    /// Big-endian unsigned interpretation. Only the low 128 bits are kept.
    pub fn to_uint(&self) -> u128 {
        self.iter().fold(0u128, |acc, b| (acc << 1) | b as u128)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, BitError> {
        if !self.len.is_multiple_of(8) {
            return Err(BitError::NotByteAligned(self.len));
        }
        Ok(self.bytes.clone())
    }

    pub fn as_bytes_padded(&self) -> &[u8] {
        &self.bytes
    }

    pub fn is_byte_aligned(&self) -> bool {
        self.len.is_multiple_of(8)
    }

    /// `X'..'` notation; `None` when the length is not a multiple of four.
    pub fn hex_literal(&self) -> Option<String> {
        if !self.len.is_multiple_of(4) {
            return None;
        }
        let mut s = String::with_capacity(self.len / 4 + 3);
        s.push_str("X'");
        for i in 0..self.len / 4 {
            let nibble = self.slice(i * 4, 4).to_uint();
            s.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        s.push('\'');
        Some(s)
    }

    pub fn bit_literal(&self) -> String {
        let mut s = String::with_capacity(self.len + 3);
        s.push_str("b'");
        s.extend(self.iter().map(|b| if b { '1' } else { '0' }));
        s.push('\'');
        s
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_literal())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_literal())
    }
}

/// Forward-only reader over a [`BitString`].
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a BitString,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitString) -> Self {
        BitReader { bits, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn at_end(&self) -> bool {
        self.pos == self.bits.len()
    }

    fn ensure(&self, n: usize) -> Result<(), BitError> {
        if n > self.remaining() {
            Err(BitError::Underrun {
                needed: n,
                available: self.remaining(),
            })
        } else {
            Ok(())
        }
    }

    pub fn read(&mut self, n: usize) -> Result<BitString, BitError> {
        self.ensure(n)?;
        let out = self.bits.slice(self.pos, n);
        self.pos += n;
        Ok(out)
    }

    pub fn read_uint(&mut self, n: usize) -> Result<u128, BitError> {
        self.ensure(n)?;
        let mut acc = 0u128;
        for i in self.pos..self.pos + n {
            acc = (acc << 1) | self.bits.get(i).unwrap() as u128;
        }
        self.pos += n;
        Ok(acc)
    }

    pub fn read_byte(&mut self) -> Result<u8, BitError> {
        if self.pos.is_multiple_of(8) {
            self.ensure(8)?;
            let b = self.bits.bytes[self.pos / 8];
            self.pos += 8;
            return Ok(b);
        }
        self.read_uint(8).map(|v| v as u8)
    }

    /// Remaining bits as a new value.
    pub fn rest(&self) -> BitString {
        self.bits.slice(self.pos, self.remaining())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(s: &str) -> BitString {
        BitString::parse_bits(s).unwrap()
    }

    #[test]
    fn append_examples() {
        assert_eq!(b("01").append(&b("000000")), b("01000000"));
        assert_eq!(b("").append(&b("101")), b("101"));
        assert_eq!(b("1").append(&b("1")), b("11"));
    }

    #[test]
    fn take_examples() {
        assert_eq!(b("01000000").take(2).unwrap(), (b("01"), b("000000")));
        assert_eq!(b("101").take(0).unwrap(), (b(""), b("101")));
        assert_eq!(
            b("1").take(2),
            Err(BitError::Underrun { needed: 2, available: 1 })
        );
    }

    #[test]
    fn to_bytes_examples() {
        assert_eq!(b("01000000").to_bytes().unwrap(), vec![0x40]);
        assert_eq!(b("11111111").to_bytes().unwrap(), vec![0xFF]);
        assert_eq!(b("0100000").to_bytes(), Err(BitError::NotByteAligned(7)));
    }

    #[test]
    fn literals() {
        assert_eq!(BitString::parse_hex("ff").unwrap(), b("11111111"));
        assert_eq!(BitString::parse_hex("00000005").unwrap().to_uint(), 5);
        assert_eq!(b("01000000").hex_literal().unwrap(), "X'40'");
        assert_eq!(b("010").hex_literal(), None);
        assert_eq!(b("010").to_string(), "b'010'");
        assert!(BitString::parse_bits("012").is_err());
    }

    #[test]
    fn reader_unaligned() {
        let bits = b("01").append(&BitString::from_bytes(b"AB"));
        let mut r = BitReader::new(&bits);
        assert_eq!(r.read_uint(2).unwrap(), 1);
        assert_eq!(r.read_byte().unwrap(), b'A');
        assert_eq!(r.read_byte().unwrap(), b'B');
        assert!(r.at_end());
        assert!(r.read_byte().is_err());
    }

    fn arb_bits() -> impl Strategy<Value = BitString> {
        proptest::collection::vec(any::<bool>(), 0..80).prop_map(BitString::from_bits)
    }

    proptest! {
        #[test]
        fn take_then_append_is_identity(a in arb_bits(), k in 0usize..100) {
            let n = k.min(a.len());
            let (head, rest) = a.take(n).unwrap();
            prop_assert_eq!(head.len(), n);
            prop_assert_eq!(head.append(&rest), a);
        }

        #[test]
        fn append_is_associative(a in arb_bits(), b in arb_bits(), c in arb_bits()) {
            prop_assert_eq!(a.append(&b).append(&c), a.append(&b.append(&c)));
            prop_assert_eq!(a.append(&BitString::new()), a.clone());
        }

        #[test]
        fn bytes_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..32)) {
            let bits = BitString::from_bytes(&bytes);
            prop_assert_eq!(bits.to_bytes().unwrap(), bytes.clone());
            prop_assert_eq!(BitString::from_bits(bits.iter()), bits);
        }
    }
}
