use std::io::{self, Write};

/// 17 significant digits, so values round-trip exactly.
pub(crate) fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_row<W: Write>(w: &mut W, fields: impl IntoIterator<Item = String>) -> io::Result<()> {
    let mut first = true;
    for f in fields {
        if !first {
            w.write_all(b",")?;
        }
        w.write_all(f.as_bytes())?;
        first = false;
    }
    w.write_all(b"\n")
}

/// Header for a block of `n` opinion columns of dimension `dim`.
pub(crate) fn opinion_headers(prefix: &str, n: usize, dim: usize) -> Vec<String> {
    if dim == 1 {
        (1..=n).map(|i| format!("{prefix}_{i}")).collect()
    } else {
        (1..=n)
            .flat_map(|i| (1..=dim).map(move |c| format!("{prefix}_{i}_{c}")))
            .collect()
    }
}
