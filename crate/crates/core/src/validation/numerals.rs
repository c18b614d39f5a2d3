//! Numeral extraction from explanation text.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numeral {
    pub value: f64,
    /// Written with a trailing `%`; `value` is then in percent units.
    pub percent: bool,
    pub text: String,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Every standalone decimal numeral in `text`, with an optional leading
/// minus (`-` or `−`) and trailing `%`. Digits glued to identifiers, like
/// `p1` or `2nd`, are not numerals.
pub fn scan_numerals(text: &str) -> Vec<Numeral> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let prev = if i > 0 { Some(chars[i - 1]) } else { None };
        let glued = prev.is_some_and(|p| is_word_char(p) || p == '.')
            || (i >= 2 && matches!(chars[i - 1], '-' | '−') && is_word_char(chars[i - 2]));
        let signed = matches!(chars[i], '-' | '−')
            && chars.get(i + 1).is_some_and(char::is_ascii_digit)
            && !glued;
        if !(signed || chars[i].is_ascii_digit()) || glued {
            i += 1;
            continue;
        }
        let start = i;
        if signed {
            i += 1;
        }
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
        let percent = chars.get(i) == Some(&'%');
        let end = i;
        if percent {
            i += 1;
        } else if chars.get(i).is_some_and(|&c| is_word_char(c)) {
            // Part of a word such as `2nd`; skip the rest of it.
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            continue;
        }
        let literal: String = chars[start..end]
            .iter()
            .map(|&c| if c == '−' { '-' } else { c })
            .collect();
        if let Ok(value) = literal.parse::<f64>() {
            out.push(Numeral {
                value,
                percent,
                text: chars[start..i].iter().collect(),
            });
        }
    }
    out
}
