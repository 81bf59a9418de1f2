//! Lowest-differing-bit primitives and variable-width chunk encodings.
//!
//! `lbit(x, y)` is the index of the lowest bit where the representations of
//! `x` and `y` differ; `vbit(x, y) = 2 * lbit(x, y) + a` where `a` is the bit
//! of `x` at that index. Infinity is a distinguished tagged value for scalar
//! arithmetic (`None`) and an all-ones field inside packed tuples.

use thiserror::Error;

/// Scalar value that may be infinite; `None` means infinity.
pub type Val = Option<u64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitopsError {
    #[error("finite value {value} does not fit in field width {width} (all-ones is reserved)")]
    ValueTooWide { value: u64, width: u32 },
    #[error("field width {0} out of range [1..=63]")]
    BadFieldWidth(u32),
}

/// Index of the lowest differing bit. `x != y` required.
#[inline]
pub fn lbit(x: u64, y: u64) -> u32 {
    debug_assert_ne!(x, y, "lbit requires distinct arguments");
    (x ^ y).trailing_zeros()
}

/// `2 * lbit(x, y) + a` where `a` is the bit of `x` at index `lbit(x, y)`.
/// `x != y` required.
#[inline]
pub fn vbit(x: u64, y: u64) -> u64 {
    let l = lbit(x, y);
    2 * l as u64 + ((x >> l) & 1)
}

/// Infinity-absorbing vbit on tagged scalars: infinite if either argument is.
/// Finite arguments must be distinct.
#[inline]
pub fn vbit_val(x: Val, y: Val) -> Val {
    match (x, y) {
        (Some(a), Some(b)) => Some(vbit(a, b)),
        _ => None,
    }
}

/// Variable-length bit string, low-order bit first.
///
/// Ordered by width, then by the numeric value of the encoded integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chunk {
    width: usize,
    // invariant: bits at positions >= width are zero
    words: Vec<u64>,
}

impl Ord for Chunk {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.width
            .cmp(&other.width)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for Chunk {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Chunk {
    pub fn zeroed(width: usize) -> Self {
        assert!(width > 0, "chunk width must be positive");
        Chunk { width, words: vec![0; width.div_ceil(64)] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get_bit(&self, i: usize) -> u64 {
        debug_assert!(i < self.width);
        (self.words[i / 64] >> (i % 64)) & 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize) {
        debug_assert!(i < self.width);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    /// Write `value` into bits `[off .. off + len)`.
    fn put_bits(&mut self, off: usize, len: u32, value: u64) {
        debug_assert!(len <= 63 && off + len as usize <= self.width);
        debug_assert!(value < (1u64 << len));
        let (w, s) = (off / 64, off % 64);
        self.words[w] |= value << s;
        if s + len as usize > 64 {
            self.words[w + 1] |= value >> (64 - s);
        }
    }

    fn get_bits(&self, off: usize, len: u32) -> u64 {
        debug_assert!(len <= 63 && off + len as usize <= self.width);
        let (w, s) = (off / 64, off % 64);
        let mut v = self.words[w] >> s;
        if s + len as usize > 64 {
            v |= self.words[w + 1] << (64 - s);
        }
        v & ((1u64 << len) - 1)
    }

    /// Lowest differing bit of two equal-width chunks; the chunks must
    /// differ.
    pub fn lbit(a: &Chunk, b: &Chunk) -> usize {
        debug_assert_eq!(a.width, b.width, "lbit on chunks of different widths");
        for (i, (&x, &y)) in a.words.iter().zip(&b.words).enumerate() {
            if x != y {
                return i * 64 + (x ^ y).trailing_zeros() as usize;
            }
        }
        panic!("Chunk::lbit requires distinct chunks");
    }

    /// vbit of two equal-width chunks; returns a scalar.
    pub fn vbit(a: &Chunk, b: &Chunk) -> u64 {
        let l = Chunk::lbit(a, b);
        2 * l as u64 + a.get_bit(l)
    }

}

/// Pack a tuple of tagged scalars into `values.len() * field_width` bits,
/// representing infinity by an all-ones field. Every finite value must be
/// strictly below `2^field_width - 1`.
pub fn encode_tuple(values: &[Val], field_width: u32) -> Result<Chunk, BitopsError> {
    if field_width == 0 || field_width > 63 {
        return Err(BitopsError::BadFieldWidth(field_width));
    }
    let ones = (1u64 << field_width) - 1;
    let mut c = Chunk::zeroed(values.len() * field_width as usize);
    for (i, v) in values.iter().enumerate() {
        let enc = match v {
            Some(x) => {
                if *x >= ones {
                    return Err(BitopsError::ValueTooWide { value: *x, width: field_width });
                }
                *x
            }
            None => ones,
        };
        c.put_bits(i * field_width as usize, field_width, enc);
    }
    Ok(c)
}

/// Inverse of [`encode_tuple`].
pub fn decode_tuple(c: &Chunk, field_width: u32) -> Vec<Val> {
    assert!(field_width > 0 && field_width <= 63);
    assert_eq!(c.width % field_width as usize, 0);
    let ones = (1u64 << field_width) - 1;
    (0..c.width / field_width as usize)
        .map(|i| {
            let v = c.get_bits(i * field_width as usize, field_width);
            if v == ones {
                None
            } else {
                Some(v)
            }
        })
        .collect()
}

/// Smallest field width whose all-ones value exceeds `max_finite`, i.e. the
/// width that can encode every value up to `max_finite` plus infinity.
pub fn width_for_max(max_finite: u64) -> u32 {
    let mut w = 1;
    while ((1u128 << w) - 1) <= max_finite as u128 {
        w += 1;
    }
    w
}
