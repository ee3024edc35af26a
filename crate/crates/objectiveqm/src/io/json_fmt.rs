//! JSON and CSV number formatting.
//!
//! Floats are always written with 17 significant digits so that parsing the
//! text recovers the exact bit pattern; reports and model files round-trip
//! byte for byte.

use std::io;

use serde::Serialize;

/// 17-significant-digit scientific notation; exact f64 round trip.
pub fn fmt_f64(value: f64) -> String {
    debug_assert!(value.is_finite(), "refusing to serialize non-finite float");
    format!("{value:.16e}")
}

/// serde_json formatter that writes every f64 via [`fmt_f64`].
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

/// Serializes to compact JSON with exact float formatting and a trailing
/// newline. Deterministic: struct fields keep declaration order and maps are
/// sorted.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, serde_json::Error> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}
