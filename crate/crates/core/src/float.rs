//! Float formatting for CSV artifacts.

use std::fmt;

/// Minimum significant digits written for every float.
pub const MIN_SIG_DIGITS: usize = 9;

/// Displays an `f64` as its shortest round-trip decimal, zero-padded to at
/// least [`MIN_SIG_DIGITS`] significant digits. Parsing the output returns
/// the identical value.
#[derive(Debug, Clone, Copy)]
pub struct Sig(pub f64);

impl fmt::Display for Sig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = self.0.to_string();
        if !self.0.is_finite() {
            return f.write_str(&s);
        }
        let digits = s.trim_start_matches('-').replace('.', "");
        let sig = digits.trim_start_matches('0').len();
        let sig = if sig == 0 { 1 } else { sig };
        if sig < MIN_SIG_DIGITS {
            if !s.contains('.') {
                s.push('.');
            }
            s.extend(std::iter::repeat_n('0', MIN_SIG_DIGITS - sig));
        }
        f.write_str(&s)
    }
}
