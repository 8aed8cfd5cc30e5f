//! Output conventions shared by every writer: `,` field separator, LF line
//! endings, `.` decimal separator, 17-significant-digit floats so re-reading a
//! file reproduces the in-memory value bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// 17 significant digits; round-trips any finite f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<P, R>(path: P, header: &str, rows: R) -> std::io::Result<()>
where
    P: AsRef<Path>,
    R: IntoIterator<Item = Vec<String>>,
{
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    for row in rows {
        w.write_all(row.join(",").as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
