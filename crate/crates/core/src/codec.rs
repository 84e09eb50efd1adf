//! Digit-level handling of plaintext and coded data.
//!
//! A message is a string of base-`d` digits. It is regrouped into field
//! elements of `s` digits each (big-endian), padded with zeros to a whole
//! number of `n`-element blocks, and every block is multiplied by the
//! Vandermonde encoding matrix. Coded elements are rendered back to digits
//! either at a fixed width (strict mode, where `d^s = 2^k` guarantees the
//! coded value fits) or at their minimal width (alpha-bounded mode, where the
//! widths travel in the manifest).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{
    build_vandermonde, default_points, EncodingMatrix, Field, FieldElement, FieldSpec, GfError,
    LogMatrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("digit base must be at least 2, got {0}")]
    BadBase(u32),
    #[error("digit {digit} is not valid in base {base}")]
    BadDigit { digit: u32, base: u32 },
    #[error("strict mode needs d = 2^j with j dividing k (k = {k}, d = {d})")]
    StrictUnavailable { k: u32, d: u32 },
    #[error("alpha must be a finite number >= 1, got {0}")]
    BadAlpha(f64),
    #[error("input digit string is empty")]
    EmptyInput,
    #[error("grouped value {value} does not fit in GF(2^{k})")]
    ElementOverflow { value: u64, k: u32 },
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),
    #[error("invalid assignment: {0}")]
    BadAssignment(String),
    #[error("block size n = {n} is invalid: {reason}")]
    BadBlockSize { n: usize, reason: String },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// A sequence of base-`d` digits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitString {
    base: u32,
    digits: Vec<u16>,
}

impl DigitString {
    pub fn new(base: u32, digits: Vec<u16>) -> Result<Self, CodecError> {
        if base < 2 {
            return Err(CodecError::BadBase(base));
        }
        if let Some(&bad) = digits.iter().find(|&&x| u32::from(x) >= base) {
            return Err(CodecError::BadDigit {
                digit: bad.into(),
                base,
            });
        }
        Ok(Self { base, digits })
    }

    pub fn empty(base: u32) -> Result<Self, CodecError> {
        Self::new(base, Vec::new())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u16] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<u16> {
        self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Parses a compact textual form such as `"001011101"` (bases up to 36).
    pub fn parse(base: u32, text: &str) -> Result<Self, CodecError> {
        if !(2..=36).contains(&base) {
            return Err(CodecError::BadBase(base));
        }
        let digits = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',' && *c != '_')
            .map(|c| {
                c.to_digit(base)
                    .map(|v| v as u16)
                    .ok_or(CodecError::BadDigit {
                        digit: c as u32,
                        base,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(base, digits)
    }

    /// Converts raw bytes to digits. For `d = 2^j` the bit stream is cut into
    /// `j`-bit digits (last digit zero-filled on the right); any other base
    /// spends a fixed `l_d(255)` digits per byte.
    pub fn from_bytes(bytes: &[u8], base: u32) -> Result<Self, CodecError> {
        if !(2..=1 << 16).contains(&base) {
            return Err(CodecError::BadBase(base));
        }
        let digits = if base.is_power_of_two() {
            let j = base.trailing_zeros() as usize;
            let total_bits = bytes.len() * 8;
            let count = total_bits.div_ceil(j);
            let mut out = Vec::with_capacity(count);
            let mut acc: u32 = 0;
            let mut have = 0usize;
            for &byte in bytes {
                acc = (acc << 8) | u32::from(byte);
                have += 8;
                while have >= j {
                    have -= j;
                    out.push(((acc >> have) & (base - 1)) as u16);
                }
                acc &= (1 << have) - 1;
            }
            if have > 0 {
                out.push(((acc << (j - have)) & (base - 1)) as u16);
            }
            out
        } else {
            let per_byte = digit_count(255, base);
            let mut out = Vec::with_capacity(bytes.len() * per_byte);
            for &byte in bytes {
                push_fixed(&mut out, u64::from(byte), base, per_byte);
            }
            out
        };
        Ok(Self { base, digits })
    }

    /// Inverse of [`DigitString::from_bytes`] for a payload of `byte_len` bytes.
    pub fn to_bytes(&self, byte_len: usize) -> Result<Vec<u8>, CodecError> {
        let base = self.base;
        if base.is_power_of_two() {
            let j = base.trailing_zeros() as usize;
            if self.digits.len() != (byte_len * 8).div_ceil(j) {
                return Err(CodecError::PlanMismatch(format!(
                    "{} digits cannot hold exactly {byte_len} bytes",
                    self.digits.len()
                )));
            }
            let mut out = Vec::with_capacity(byte_len);
            let mut acc: u64 = 0;
            let mut have = 0usize;
            for &d in &self.digits {
                acc = (acc << j) | u64::from(d);
                have += j;
                while have >= 8 && out.len() < byte_len {
                    have -= 8;
                    out.push((acc >> have) as u8);
                }
                acc &= (1 << have) - 1;
            }
            Ok(out)
        } else {
            let per_byte = digit_count(255, base);
            if self.digits.len() != byte_len * per_byte {
                return Err(CodecError::PlanMismatch(format!(
                    "{} digits cannot hold exactly {byte_len} bytes",
                    self.digits.len()
                )));
            }
            self.digits
                .chunks_exact(per_byte)
                .map(|chunk| {
                    let v = chunk
                        .iter()
                        .fold(0u64, |acc, &d| acc * u64::from(base) + u64::from(d));
                    u8::try_from(v).map_err(|_| {
                        CodecError::PlanMismatch(format!("digit group {v} exceeds a byte"))
                    })
                })
                .collect()
        }
    }
}

impl std::fmt::Display for DigitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.base <= 36 {
            for &d in &self.digits {
                let c = char::from_digit(d.into(), self.base).unwrap_or('?');
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.digits.iter().map(|d| d.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

#[inline]
pub(crate) fn digit_count(mut value: u64, d: u32) -> usize {
    let d = u64::from(d);
    let mut n = 1;
    while value >= d {
        value /= d;
        n += 1;
    }
    n
}

pub(crate) fn push_fixed(out: &mut Vec<u16>, mut value: u64, d: u32, width: usize) {
    let start = out.len();
    out.resize(start + width, 0);
    for slot in out[start..].iter_mut().rev() {
        *slot = (value % u64::from(d)) as u16;
        value /= u64::from(d);
    }
}

/// `l_d(value)`: the number of base-`d` digits in the minimal representation
/// of `value`, with `l_d(0) = 1`.
pub fn digit_length(value: u64, d: u32) -> Result<usize, CodecError> {
    if d < 2 {
        return Err(CodecError::BadBase(d));
    }
    Ok(digit_count(value, d))
}

/// Element width that makes encoding strictly non-overflowing: `s = k / log2 d`.
pub fn strict_width(k: u32, d: u32) -> Result<usize, CodecError> {
    if d < 2 {
        return Err(CodecError::BadBase(d));
    }
    if !d.is_power_of_two() || !k.is_multiple_of(d.trailing_zeros()) {
        return Err(CodecError::StrictUnavailable { k, d });
    }
    Ok((k / d.trailing_zeros()) as usize)
}

/// Smallest element width for alpha-bounded encoding:
/// `ceil(log_d(2^k - 1) / alpha)`.
pub fn min_width_alpha(k: u32, d: u32, alpha: f64) -> Result<usize, CodecError> {
    if d < 2 {
        return Err(CodecError::BadBase(d));
    }
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(CodecError::BadAlpha(alpha));
    }
    let max = ((1u64 << k) - 1) as f64;
    let raw = max.ln() / f64::from(d).ln() / alpha;
    // values within float noise of an integer are that integer
    let s = (raw - 1e-9).ceil().max(1.0);
    Ok(s as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GroupingMode {
    Strict,
    AlphaBounded { alpha: f64 },
}

impl GroupingMode {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            GroupingMode::Strict => None,
            GroupingMode::AlphaBounded { alpha } => Some(*alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroupingMode::Strict => "strict",
            GroupingMode::AlphaBounded { .. } => "alpha",
        }
    }
}

/// How a digit string is cut into field elements and blocks. Every element
/// has the same width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupingPlan {
    pub mode: GroupingMode,
    pub d: u32,
    pub k: u32,
    pub width: usize,
    /// Block size (matrix dimension).
    pub n: usize,
    /// Element count after padding (a multiple of `n`).
    pub elements: usize,
    pub pad_count: usize,
    pub original_length: usize,
}

impl GroupingPlan {
    pub fn strict(spec: &FieldSpec, len: usize, n: usize) -> Result<Self, CodecError> {
        let width = strict_width(spec.k(), spec.d())?;
        Self::with_width(spec, GroupingMode::Strict, width, len, n)
    }

    pub fn alpha_bounded(
        spec: &FieldSpec,
        alpha: f64,
        len: usize,
        n: usize,
    ) -> Result<Self, CodecError> {
        let width = min_width_alpha(spec.k(), spec.d(), alpha)?;
        // d^width must not exceed the field, otherwise some digit groups overflow
        let max_group = (u64::from(spec.d())).checked_pow(width as u32);
        if max_group.is_none_or(|m| m > 1u64 << spec.k()) {
            return Err(CodecError::ElementOverflow {
                value: max_group.map_or(u64::MAX, |m| m - 1),
                k: spec.k(),
            });
        }
        Self::with_width(spec, GroupingMode::AlphaBounded { alpha }, width, len, n)
    }

    pub fn for_mode(
        spec: &FieldSpec,
        mode: GroupingMode,
        len: usize,
        n: usize,
    ) -> Result<Self, CodecError> {
        match mode {
            GroupingMode::Strict => Self::strict(spec, len, n),
            GroupingMode::AlphaBounded { alpha } => Self::alpha_bounded(spec, alpha, len, n),
        }
    }

    /// A plan with an explicit width. Only `n` is validated; groups that
    /// overflow the field surface later from [`regroup`].
    pub fn with_width(
        spec: &FieldSpec,
        mode: GroupingMode,
        width: usize,
        len: usize,
        n: usize,
    ) -> Result<Self, CodecError> {
        if let GroupingMode::AlphaBounded { alpha } = mode {
            if !alpha.is_finite() || alpha < 1.0 {
                return Err(CodecError::BadAlpha(alpha));
            }
        }
        if width == 0 {
            return Err(CodecError::PlanMismatch(
                "element width must be positive".into(),
            ));
        }
        let max_n = spec.field().size() as usize - 1;
        if n == 0 || n > max_n {
            return Err(CodecError::BadBlockSize {
                n,
                reason: format!("must lie in 1..={max_n} for GF(2^{})", spec.k()),
            });
        }
        let block_digits = n * width;
        let padded = len.div_ceil(block_digits) * block_digits;
        Ok(Self {
            mode,
            d: spec.d(),
            k: spec.k(),
            width,
            n,
            elements: padded / width,
            pad_count: padded - len,
            original_length: len,
        })
    }

    pub fn widths(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::repeat_n(self.width, self.elements)
    }

    pub fn block_count(&self) -> usize {
        self.elements / self.n
    }

    pub fn padded_length(&self) -> usize {
        self.original_length + self.pad_count
    }
}

/// Cuts `b` into field elements of `plan.width` digits, zero-padding the tail.
pub fn regroup(b: &DigitString, plan: &GroupingPlan) -> Result<Vec<FieldElement>, CodecError> {
    if b.is_empty() {
        return Err(CodecError::EmptyInput);
    }
    if b.base() != plan.d || b.len() != plan.original_length {
        return Err(CodecError::PlanMismatch(format!(
            "plan expects {} base-{} digits, got {} base-{} digits",
            plan.original_length,
            plan.d,
            b.len(),
            b.base()
        )));
    }
    let d = u64::from(plan.d);
    let limit = 1u64 << plan.k;
    let digits = b.digits();
    let mut out = Vec::with_capacity(plan.elements);
    for j in 0..plan.elements {
        let start = j * plan.width;
        let mut v = 0u64;
        for i in start..start + plan.width {
            v = v * d + u64::from(digits.get(i).copied().unwrap_or(0));
        }
        if v >= limit {
            return Err(CodecError::ElementOverflow {
                value: v,
                k: plan.k,
            });
        }
        out.push(FieldElement(v as u16));
    }
    Ok(out)
}

/// Inverse of [`regroup`]: expands elements to digits and drops the padding.
pub fn ungroup(elements: &[FieldElement], plan: &GroupingPlan) -> Result<DigitString, CodecError> {
    if elements.len() != plan.elements {
        return Err(CodecError::PlanMismatch(format!(
            "plan expects {} elements, got {}",
            plan.elements,
            elements.len()
        )));
    }
    let mut digits = Vec::with_capacity(plan.padded_length());
    for &e in elements {
        if digit_count(e.0.into(), plan.d) > plan.width {
            return Err(CodecError::PlanMismatch(format!(
                "element {} does not fit in {} base-{} digits",
                e.0, plan.width, plan.d
            )));
        }
        push_fixed(&mut digits, e.0.into(), plan.d, plan.width);
    }
    digits.truncate(plan.original_length);
    DigitString::new(plan.d, digits)
}

/// How coded elements become digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rendering {
    /// Every element uses exactly this many digits (leading zeros kept).
    Fixed(usize),
    /// Every element uses `l_d(c)` digits.
    Minimal,
}

impl Rendering {
    pub fn for_plan(plan: &GroupingPlan) -> Self {
        match plan.mode {
            GroupingMode::Strict => Rendering::Fixed(plan.width),
            GroupingMode::AlphaBounded { .. } => Rendering::Minimal,
        }
    }
}

/// One encoded block `c = A b'` with its digit rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedBlock {
    base: u32,
    elements: Vec<FieldElement>,
    render_widths: Vec<u8>,
    source_width: usize,
}

impl CodedBlock {
    /// Wraps already-encoded elements. Fails if a fixed width is too narrow.
    pub fn from_elements(
        elements: Vec<FieldElement>,
        base: u32,
        rendering: Rendering,
        source_width: usize,
    ) -> Result<Self, CodecError> {
        if base < 2 {
            return Err(CodecError::BadBase(base));
        }
        let render_widths = elements
            .iter()
            .map(|&e| {
                let minimal = digit_count(e.0.into(), base);
                let w = match rendering {
                    Rendering::Minimal => minimal,
                    Rendering::Fixed(w) if w >= minimal => w,
                    Rendering::Fixed(w) => {
                        return Err(CodecError::PlanMismatch(format!(
                            "element {} needs {minimal} digits, fixed width is {w}",
                            e.0
                        )))
                    }
                };
                u8::try_from(w)
                    .map_err(|_| CodecError::PlanMismatch(format!("render width {w} too large")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            base,
            elements,
            render_widths,
            source_width,
        })
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        base: u32,
        elements: Vec<FieldElement>,
        render_widths: Vec<u8>,
        source_width: usize,
    ) -> Self {
        Self {
            base,
            elements,
            render_widths,
            source_width,
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn elements(&self) -> &[FieldElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn render_widths(&self) -> &[u8] {
        &self.render_widths
    }

    /// Width in digits of each plaintext element this block encoded.
    pub fn source_width(&self) -> usize {
        self.source_width
    }

    pub fn digit_total(&self) -> usize {
        self.render_widths.iter().map(|&w| w as usize).sum()
    }

    pub fn digit_render(&self, i: usize) -> DigitString {
        let mut out = Vec::with_capacity(self.render_widths[i] as usize);
        push_fixed(
            &mut out,
            self.elements[i].0.into(),
            self.base,
            self.render_widths[i] as usize,
        );
        DigitString {
            base: self.base,
            digits: out,
        }
    }

    /// Appends every rendered digit of this block, in element order.
    pub fn write_digits(&self, out: &mut Vec<u16>) {
        for (&e, &w) in self.elements.iter().zip(&self.render_widths) {
            push_fixed(out, e.0.into(), self.base, w as usize);
        }
    }
}

pub fn encode_block(
    field: &Field,
    a: &EncodingMatrix,
    b_prime: &[FieldElement],
    base: u32,
    rendering: Rendering,
    source_width: usize,
) -> Result<CodedBlock, CodecError> {
    let c = crate::gf::mat_vec_mul(field, a.matrix(), b_prime)?;
    CodedBlock::from_elements(c, base, rendering, source_width)
}

/// Decodes a single block, inverting `A` on the spot.
pub fn decode_block(
    field: &Field,
    a: &EncodingMatrix,
    c: &[FieldElement],
) -> Result<Vec<FieldElement>, CodecError> {
    Ok(BlockDecoder::new(field, a)?.decode(field, c)?)
}

/// Holds `A^-1` so that many blocks can be decoded with one inversion.
#[derive(Clone, Debug)]
pub struct BlockDecoder {
    inverse: LogMatrix,
}

impl BlockDecoder {
    pub fn new(field: &Field, a: &EncodingMatrix) -> Result<Self, GfError> {
        Ok(Self {
            inverse: LogMatrix::new(field, &a.invert(field)?)?,
        })
    }

    pub fn decode(&self, field: &Field, c: &[FieldElement]) -> Result<Vec<FieldElement>, GfError> {
        let (mut out, mut scratch) = (Vec::new(), Vec::new());
        self.inverse.apply(field, c, &mut out, &mut scratch)?;
        Ok(out)
    }

    pub(crate) fn decode_into(
        &self,
        field: &Field,
        c: &[FieldElement],
        out: &mut Vec<FieldElement>,
        scratch: &mut Vec<u32>,
    ) -> Result<(), GfError> {
        self.inverse.apply(field, c, out, scratch).map(|_| ())
    }
}

/// Result of checking one coded block against the two non-overflow definitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverflowReport {
    pub strict: bool,
    pub alpha_bound_satisfied: bool,
    pub tested_alpha: f64,
    /// Per cloud: coded digits stored / plaintext digits those elements replaced.
    pub per_cloud_ratios: Vec<f64>,
}

/// Classifies a block. `plain_widths[i]` is the digit width of plaintext
/// element `i`; `assignment[j]` lists the element indices cloud `j` stores and
/// must partition the block. Coded lengths are always minimal, `l_d(c_i)`.
///
/// The per-cloud reference width is the mean plaintext width of the elements
/// assigned to that cloud, which reduces to the common width when all widths
/// agree.
pub fn classify_overflow(
    plain_widths: &[usize],
    block: &CodedBlock,
    assignment: &[Vec<usize>],
    alpha: f64,
) -> Result<OverflowReport, CodecError> {
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(CodecError::BadAlpha(alpha));
    }
    let n = block.len();
    if plain_widths.len() != n {
        return Err(CodecError::PlanMismatch(format!(
            "{} plaintext widths for {n} coded elements",
            plain_widths.len()
        )));
    }
    let mut seen = vec![false; n];
    for (cloud, elems) in assignment.iter().enumerate() {
        for &e in elems {
            if e >= n {
                return Err(CodecError::BadAssignment(format!(
                    "cloud {cloud} names element {e}, block has {n}"
                )));
            }
            if std::mem::replace(&mut seen[e], true) {
                return Err(CodecError::BadAssignment(format!(
                    "element {e} assigned twice"
                )));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(CodecError::BadAssignment(format!(
            "element {missing} is unassigned"
        )));
    }

    let coded_len = |i: usize| digit_count(block.elements[i].0.into(), block.base);
    let strict = (0..n).all(|i| coded_len(i) <= plain_widths[i]);

    let mut satisfied = true;
    let mut ratios = Vec::with_capacity(assignment.len());
    for elems in assignment {
        let coded: usize = elems.iter().map(|&e| coded_len(e)).sum();
        let plain: usize = elems.iter().map(|&e| plain_widths[e]).sum();
        // |c~_i| * alpha * mean width == alpha * total plain width
        if coded as f64 > alpha * plain as f64 {
            satisfied = false;
        }
        ratios.push(if plain == 0 {
            0.0
        } else {
            coded as f64 / plain as f64
        });
    }
    Ok(OverflowReport {
        strict,
        alpha_bound_satisfied: satisfied,
        tested_alpha: alpha,
        per_cloud_ratios: ratios,
    })
}

/// Coordinates of one coded digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DigitPos {
    pub block: usize,
    pub element: usize,
    pub digit: usize,
}

/// Maps between stream offsets and (block, element, digit) coordinates.
/// Stream order is block-major, then element, then digit (most significant first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamLayout {
    n: usize,
    offsets: Vec<u64>,
}

impl StreamLayout {
    pub fn from_blocks(blocks: &[CodedBlock]) -> Self {
        let n = blocks.first().map_or(0, CodedBlock::len);
        let widths = blocks.iter().flat_map(|b| b.render_widths.iter().copied());
        Self::from_widths(n, widths)
    }

    pub fn from_widths(n: usize, widths: impl IntoIterator<Item = u8>) -> Self {
        let mut offsets = vec![0u64];
        let mut acc = 0u64;
        for w in widths {
            acc += u64::from(w);
            offsets.push(acc);
        }
        Self { n, offsets }
    }

    pub fn total(&self) -> u64 {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    pub fn element_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block_count(&self) -> usize {
        self.element_count().checked_div(self.n).unwrap_or(0)
    }

    pub fn width(&self, block: usize, element: usize) -> usize {
        let i = block * self.n + element;
        (self.offsets[i + 1] - self.offsets[i]) as usize
    }

    pub fn element_start(&self, block: usize, element: usize) -> u64 {
        self.offsets[block * self.n + element]
    }

    pub fn offset(&self, pos: DigitPos) -> u64 {
        self.element_start(pos.block, pos.element) + pos.digit as u64
    }

    pub fn locate(&self, offset: u64) -> Option<DigitPos> {
        if offset >= self.total() {
            return None;
        }
        // last element start <= offset
        let flat = self.offsets.partition_point(|&o| o <= offset) - 1;
        Some(DigitPos {
            block: flat / self.n,
            element: flat % self.n,
            digit: (offset - self.offsets[flat]) as usize,
        })
    }
}

/// Work counters for one encode or decode pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkStats {
    pub blocks: u64,
    pub field_mults: u64,
}

/// A whole message after regrouping and encoding.
#[derive(Clone, Debug)]
pub struct EncodedMessage {
    pub spec: FieldSpec,
    pub grouping: GroupingPlan,
    pub matrix: EncodingMatrix,
    pub blocks: Vec<CodedBlock>,
    pub work: WorkStats,
}

impl EncodedMessage {
    pub fn layout(&self) -> StreamLayout {
        StreamLayout::from_blocks(&self.blocks)
    }

    pub fn total_digits(&self) -> usize {
        self.blocks.iter().map(CodedBlock::digit_total).sum()
    }

    /// The full coded digit stream in stream order.
    pub fn coded_digits(&self) -> Vec<u16> {
        let mut out = Vec::with_capacity(self.total_digits());
        for b in &self.blocks {
            b.write_digits(&mut out);
        }
        out
    }
}

/// Parameters for [`encode_message`].
#[derive(Clone, Debug)]
pub struct EncodeParams {
    pub mode: GroupingMode,
    pub n: usize,
    /// Evaluation points; `None` selects 1..=n.
    pub points: Option<Vec<FieldElement>>,
    pub parallel: bool,
}

impl EncodeParams {
    pub fn new(mode: GroupingMode, n: usize) -> Self {
        Self {
            mode,
            n,
            points: None,
            parallel: false,
        }
    }
}

/// Regroups and encodes a full message. An empty message yields zero blocks.
pub fn encode_message(
    b: &DigitString,
    spec: &FieldSpec,
    params: &EncodeParams,
) -> Result<EncodedMessage, CodecError> {
    if b.base() != spec.d() {
        return Err(CodecError::PlanMismatch(format!(
            "message is base {}, field spec uses base {}",
            b.base(),
            spec.d()
        )));
    }
    let grouping = GroupingPlan::for_mode(spec, params.mode, b.len(), params.n)?;
    let field = spec.field();
    let points = match &params.points {
        Some(p) => p.clone(),
        None => default_points(field, params.n)?,
    };
    if points.len() != params.n {
        return Err(CodecError::BadBlockSize {
            n: params.n,
            reason: format!("{} evaluation points supplied", points.len()),
        });
    }
    let matrix = build_vandermonde(field, &points)?;
    if b.is_empty() {
        return Ok(EncodedMessage {
            spec: spec.clone(),
            grouping,
            matrix,
            blocks: Vec::new(),
            work: WorkStats::default(),
        });
    }
    let plain = regroup(b, &grouping)?;
    let lm = LogMatrix::new(field, matrix.matrix())?;
    let rendering = Rendering::for_plan(&grouping);
    let encode_one = |chunk: &[FieldElement]| -> Result<(CodedBlock, u64), CodecError> {
        let (mut out, mut scratch) = (Vec::with_capacity(chunk.len()), Vec::new());
        let mults = lm.apply(field, chunk, &mut out, &mut scratch)?;
        let block = CodedBlock::from_elements(out, spec.d(), rendering, grouping.width)?;
        Ok((block, mults))
    };
    let results: Vec<(CodedBlock, u64)> = if params.parallel {
        plain
            .par_chunks(params.n)
            .map(encode_one)
            .collect::<Result<_, _>>()?
    } else {
        plain
            .chunks(params.n)
            .map(encode_one)
            .collect::<Result<_, _>>()?
    };
    let mut work = WorkStats::default();
    let blocks = results
        .into_iter()
        .map(|(block, mults)| {
            work.blocks += 1;
            work.field_mults += mults;
            block
        })
        .collect();
    Ok(EncodedMessage {
        spec: spec.clone(),
        grouping,
        matrix,
        blocks,
        work,
    })
}

/// Splits a coded digit stream back into elements given their render widths.
pub fn parse_coded_stream(
    digits: &[u16],
    widths: &[u8],
    d: u32,
    k: u32,
) -> Result<Vec<FieldElement>, CodecError> {
    let expected: usize = widths.iter().map(|&w| w as usize).sum();
    if expected != digits.len() {
        return Err(CodecError::PlanMismatch(format!(
            "widths cover {expected} digits, stream has {}",
            digits.len()
        )));
    }
    let limit = 1u64 << k;
    let mut out = Vec::with_capacity(widths.len());
    let mut pos = 0;
    for &w in widths {
        let v = digits[pos..pos + w as usize].iter().fold(0u64, |acc, &x| {
            acc.saturating_mul(u64::from(d)).saturating_add(x.into())
        });
        if v >= limit {
            return Err(CodecError::ElementOverflow { value: v, k });
        }
        out.push(FieldElement(v as u16));
        pos += w as usize;
    }
    Ok(out)
}

/// Decodes every block of coded elements and ungroups the plaintext.
pub fn decode_elements(
    field: &Field,
    matrix: &EncodingMatrix,
    grouping: &GroupingPlan,
    coded: &[FieldElement],
) -> Result<(DigitString, WorkStats), CodecError> {
    if grouping.original_length == 0 {
        return Ok((DigitString::empty(grouping.d)?, WorkStats::default()));
    }
    if coded.len() != grouping.elements {
        return Err(CodecError::PlanMismatch(format!(
            "expected {} coded elements, got {}",
            grouping.elements,
            coded.len()
        )));
    }
    let decoder = BlockDecoder::new(field, matrix)?;
    let mut plain = Vec::with_capacity(coded.len());
    let (mut out, mut scratch) = (Vec::new(), Vec::new());
    let mut work = WorkStats::default();
    for chunk in coded.chunks(grouping.n) {
        decoder.decode_into(field, chunk, &mut out, &mut scratch)?;
        plain.extend_from_slice(&out);
        work.blocks += 1;
        work.field_mults += (grouping.n * grouping.n) as u64;
    }
    Ok((ungroup(&plain, grouping)?, work))
}
