//! Shared conventions for emitted artifacts.
//!
//! Every JSON artifact carries a `schema_version` field and every CSV file
//! starts with one `# schema=...` comment line naming its layout.

use std::io::{self, Write};

pub const SCHEMA_VERSION: u32 = 1;

pub fn csv_schema_line(kind: &str) -> String {
    format!("# schema=radmax.{kind}.v{SCHEMA_VERSION}\n")
}

/// CSV writer whose output starts with the schema comment for `kind`.
pub fn csv_writer<W: Write>(mut out: W, kind: &str) -> io::Result<csv::Writer<W>> {
    out.write_all(csv_schema_line(kind).as_bytes())?;
    Ok(csv::Writer::from_writer(out))
}

/// Convenience for in-memory CSV: runs `fill` on a writer and returns the text.
pub fn csv_string(
    kind: &str,
    fill: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
) -> csv::Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf, kind)?;
        fill(&mut w)?;
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
