//! Small text-output helpers shared by the CSV emitters.

use std::io::{self, Write};

/// Formats a float with 15 significant digits, the precision used by every
/// CSV emitted by this crate.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.14e}")
}

/// Writes one CSV row of floats.
pub fn write_row<W: Write>(w: &mut W, fields: &[f64]) -> io::Result<()> {
    let mut first = true;
    for x in fields {
        if !first {
            write!(w, ",")?;
        }
        write!(w, "{}", fmt_sig(*x))?;
        first = false;
    }
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_sig(3.1), "3.10000000000000e0");
        assert_eq!(fmt_sig(-0.25), "-2.50000000000000e-1");
    }
}
