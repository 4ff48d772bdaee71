//! Shared text normalization used by every matching surface.

/// Case-folds, trims, and collapses internal whitespace runs to one space.
///
/// Punctuation is preserved: part numbers and item names carry meaningful
/// dashes and slashes.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Alphanumeric runs of already-normalized text.
pub fn word_tokens(normalized: &str) -> impl Iterator<Item = &str> {
    normalized
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
}
