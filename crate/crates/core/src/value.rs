//! Width-masked two-state port values shared by the simulator, the reference
//! model harness and the stimulus pipeline.

use indexmap::IndexMap;

/// Widest value supported anywhere in the harness.
pub const MAX_WIDTH: u32 = 64;

/// Port name to raw bit pattern. Signed ports hold two's-complement bits
/// within their declared width. Iteration order is port declaration order.
pub type PortValueMap = IndexMap<String, u64>;

/// All-ones mask for `width` bits (`width` in `1..=64`).
pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Truncates a logical (possibly negative) integer to `width` bits.
pub fn encode(value: i128, width: u32) -> u64 {
    (value as u64) & mask(width)
}

/// Interprets `bits` as a `width`-bit value, signed or unsigned.
pub fn decode(bits: u64, width: u32, signed: bool) -> i128 {
    let bits = bits & mask(width);
    if signed && width > 0 && (bits >> (width - 1)) & 1 == 1 {
        bits as i128 - (1i128 << width)
    } else {
        bits as i128
    }
}

/// Sign-extends a `from`-bit pattern to `to` bits.
pub fn sign_extend(bits: u64, from: u32, to: u32) -> u64 {
    encode(decode(bits, from, true), to)
}

/// Wraps a logical value into the representable range of a `width`-bit port:
/// modulo 2^width for unsigned, two's-complement wrap for signed.
pub fn wrap_logical(value: i128, width: u32, signed: bool) -> i128 {
    decode(encode(value, width), width, signed)
}

/// Inclusive logical range for a `width`-bit port.
pub fn logical_range(width: u32, signed: bool) -> (i128, i128) {
    if signed {
        let half = 1i128 << (width - 1);
        (-half, half - 1)
    } else {
        (0, (1i128 << width) - 1)
    }
}
