//! Character-offset helpers. All public offsets in this crate count Unicode
//! scalar values, never bytes.

/// Byte index of the `char_idx`-th character, or `s.len()` when
/// `char_idx == char count`. `None` past the end.
pub fn byte_offset(s: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in s.char_indices() {
        if count == char_idx {
            return Some(b);
        }
        count += 1;
    }
    (count == char_idx).then_some(s.len())
}

/// Substring by character offsets `[start, end)`.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let b_start = byte_offset(s, start)?;
    let b_end = b_start + byte_offset(&s[b_start..], end - start)?;
    Some(&s[b_start..b_end])
}

/// Number of characters in `s[..byte_idx]`.
pub fn char_index(s: &str, byte_idx: usize) -> usize {
    s[..byte_idx].chars().count()
}
