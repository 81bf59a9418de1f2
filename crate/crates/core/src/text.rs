//! Readonly input text plus the parameter environment shared by the whole
//! pipeline.
//!
//! Reads past the end of the text return the sentinel `-1`, which compares
//! smaller than (and unequal to) every real symbol. All substring
//! comparisons in the crate go through this convention.

use thiserror::Error;

/// Value returned for reads at positions `>= n`.
pub const SENTINEL: i64 = -1;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("input is empty")]
    Empty,
    #[error("u32le input length {0} is not divisible by 4")]
    BadU32Len(usize),
}

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("tau {tau} out of range [4..{max}] for n = {n}")]
    TauOutOfRange { tau: usize, n: usize, max: usize },
    #[error("lambda3 override {0} below minimum 2")]
    Lambda3TooSmall(u64),
    #[error("lambda4 override {0} below minimum 1")]
    Lambda4TooSmall(u64),
}

/// Input encodings accepted by [`Text::load`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// One symbol per byte.
    Bytes,
    /// One symbol per 4 bytes, little endian.
    U32le,
}

/// Readonly symbol sequence with alphabet bookkeeping.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Text {
    symbols: Vec<u32>,
    sigma_bound: u32,
    w: u32,
}

impl Text {
    pub fn from_symbols(symbols: Vec<u32>) -> Result<Self, TextError> {
        if symbols.is_empty() {
            return Err(TextError::Empty);
        }
        let max = symbols.iter().copied().max().unwrap();
        let sigma_bound = max + 1;
        // smallest w >= 1 with sigma_bound <= 2^w
        let mut w = 1;
        while w < 32 && (1u64 << w) < sigma_bound as u64 {
            w += 1;
        }
        Ok(Text { symbols, sigma_bound, w })
    }

    pub fn load(bytes: &[u8], format: Format) -> Result<Self, TextError> {
        match format {
            Format::Bytes => Self::from_symbols(bytes.iter().map(|&b| b as u32).collect()),
            Format::U32le => {
                if bytes.is_empty() {
                    return Err(TextError::Empty);
                }
                if !bytes.len().is_multiple_of(4) {
                    return Err(TextError::BadU32Len(bytes.len()));
                }
                Self::from_symbols(
                    bytes
                        .chunks_exact(4)
                        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                        .collect(),
                )
            }
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbol at `i`, or [`SENTINEL`] for `i >= n`.
    #[inline]
    pub fn get(&self, i: usize) -> i64 {
        match self.symbols.get(i) {
            Some(&c) => c as i64,
            None => SENTINEL,
        }
    }

    /// Shifted symbol code used for bit-level comparisons: sentinel maps to
    /// 0, symbol `c` to `c + 1`. Injective and fits in `w + 1` bits.
    #[inline]
    pub fn code(&self, i: usize) -> u64 {
        match self.symbols.get(i) {
            Some(&c) => c as u64 + 1,
            None => 0,
        }
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn sigma_bound(&self) -> u32 {
        self.sigma_bound
    }

    /// Bits per symbol.
    pub fn w(&self) -> u32 {
        self.w
    }
}

/// A contiguous view `[0..end)` of a text; reads at or past `end` return the
/// sentinel even where the underlying text has real symbols. Window-local
/// structures are built over such views.
#[derive(Clone, Copy)]
pub struct TextView<'a> {
    text: &'a Text,
    end: usize,
}

impl<'a> TextView<'a> {
    pub fn new(text: &'a Text, end: usize) -> Self {
        TextView { text, end: end.min(text.len()) }
    }

    pub fn whole(text: &'a Text) -> Self {
        TextView { text, end: text.len() }
    }

    #[inline]
    pub fn get(&self, i: usize) -> i64 {
        if i < self.end {
            self.text.get(i)
        } else {
            SENTINEL
        }
    }

    #[inline]
    pub fn code(&self, i: usize) -> u64 {
        if i < self.end {
            self.text.code(i)
        } else {
            0
        }
    }

    /// Exclusive end of the view.
    pub fn end(&self) -> usize {
        self.end
    }

    pub fn text(&self) -> &'a Text {
        self.text
    }

    /// `min(cap, lce(a, b))` by direct scan under the sentinel convention.
    pub fn capped_lce(&self, a: usize, b: usize, cap: usize) -> usize {
        let mut l = 0;
        while l < cap && self.get(a + l) == self.get(b + l) {
            l += 1;
        }
        l
    }

    /// True iff the length-`len` windows at `a` and `b` are equal.
    pub fn windows_equal(&self, a: usize, b: usize, len: usize) -> bool {
        self.capped_lce(a, b, len) == len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Parameters derived from the numeric value-bound chains; no knobs.
    Reference,
    /// Small-scale mode: lambda3/lambda4 may be overridden so that the
    /// machinery that only activates at astronomical n can be exercised.
    Desk,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Reference => "reference",
            Mode::Desk => "desk",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub lambda3: Option<u64>,
    pub lambda4: Option<u64>,
}

/// Size parameters of the pipeline.
#[derive(Debug, Clone, Copy)]
pub struct ParamEnv {
    pub n: usize,
    pub tau: usize,
    /// `n / tau` rounded down.
    pub b: usize,
    pub lambda3: u64,
    pub lambda4: u64,
    pub mode: Mode,
    /// Number of refinement phases; 0 means the refinement is the identity.
    pub phase_count: u32,
    /// Bits per symbol of the text this environment was derived from.
    pub w: u32,
}

fn ceil_log2(x: u128) -> u32 {
    debug_assert!(x > 0);
    128 - (x - 1).leading_zeros()
}

/// Smallest L >= 2 such that the fourfold vbit value-bound chain starting
/// from values < 2*n*w ends below 2L + 3. Each vbit application maps values
/// below B to values below 2*ceil(log2 B).
fn lambda3_from_chain(n: usize, w: u32) -> u64 {
    let mut bound: u128 = 2 * n as u128 * w as u128;
    for _ in 0..3 {
        bound = 2 * ceil_log2(bound.max(2)) as u128;
    }
    // values < bound must satisfy value < 2L + 3
    let l = bound.saturating_sub(3).div_ceil(2); // ceil((bound - 3) / 2)
    l.max(2) as u64
}

fn lambda4_reference(n: usize) -> u64 {
    let mut l = n as f64;
    for _ in 0..4 {
        l = l.log2();
        if !l.is_finite() || l <= 1.0 {
            return 1;
        }
    }
    (l.ceil() as u64).max(1)
}

impl ParamEnv {
    /// Build the environment for a text of length `n` whose symbols need `w`
    /// bits each.
    pub fn new(
        n: usize,
        tau: usize,
        mode: Mode,
        w: u32,
        overrides: Overrides,
    ) -> Result<Self, ParamError> {
        let max_tau = n / 2;
        if tau < 4 || tau > max_tau {
            return Err(ParamError::TauOutOfRange { tau, n, max: max_tau });
        }
        let lambda3 = match overrides.lambda3 {
            Some(l) if mode == Mode::Desk => {
                if l < 2 {
                    return Err(ParamError::Lambda3TooSmall(l));
                }
                l
            }
            _ => lambda3_from_chain(n, w),
        };
        let lambda4 = match overrides.lambda4 {
            Some(l) if mode == Mode::Desk => {
                if l < 1 {
                    return Err(ParamError::Lambda4TooSmall(l));
                }
                l
            }
            _ => match mode {
                Mode::Reference => lambda4_reference(n),
                Mode::Desk => 10,
            },
        };
        // largest k >= 0 with 2^k * 2^4 * lambda3 <= tau; 0 when even that fails
        let mut phase_count = 0u32;
        while (1u128 << (phase_count + 1)) * 16 * lambda3 as u128 <= tau as u128 {
            phase_count += 1;
        }
        Ok(ParamEnv { n, tau, b: n / tau, lambda3, lambda4, mode, phase_count, w })
    }

    pub fn for_text(
        text: &Text,
        tau: usize,
        mode: Mode,
        overrides: Overrides,
    ) -> Result<Self, ParamError> {
        Self::new(text.len(), tau, mode, text.w(), overrides)
    }

    /// Inclusive range of distance exponents the recompression loop visits,
    /// descending; empty when lambda4 < 6.
    pub fn recompression_range(&self) -> impl Iterator<Item = u32> {
        (6..=self.lambda4.min(u32::MAX as u64) as u32).rev()
    }

    /// Highest index of the per-letter neighbor-count arrays.
    pub fn m_max_index(&self) -> usize {
        (self.lambda4 as usize).max(5)
    }
}
