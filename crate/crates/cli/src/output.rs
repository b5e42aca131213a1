//! CSV tables with a schema header, and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliResult;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        let text = format!("# schema={SCHEMA}\n{}\n", header.join(","));
        Self { name: name.to_string(), text, columns: header.len() }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let fields: Vec<String> = fields.into_iter().collect();
        debug_assert_eq!(fields.len(), self.columns, "{}", self.name);
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// `sha256` of the git blob framing `"blob <len>\0" + bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn json_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Writes the tables and `manifest.json` (command, echoed config, one hash per file).
pub fn write_run(dir: &Path, command: &str, config_echo: &str, tables: &[Table]) -> CliResult<BTreeMap<String, String>> {
    std::fs::create_dir_all(dir)?;
    let mut hashes = BTreeMap::new();
    for t in tables {
        std::fs::write(dir.join(&t.name), t.text())?;
        hashes.insert(t.name.clone(), content_hash(t.text().as_bytes()));
    }
    let mut m = String::from("{\n");
    let _ = writeln!(m, "  \"schema\": {SCHEMA},");
    let _ = writeln!(m, "  \"command\": {},", json_string(command));
    let _ = writeln!(m, "  \"config\": {},", json_string(config_echo));
    m.push_str("  \"files\": {");
    for (i, (k, v)) in hashes.iter().enumerate() {
        let sep = if i == 0 { "\n" } else { ",\n" };
        let _ = write!(m, "{sep}    {}: {}", json_string(k), json_string(&format!("sha256:{v}")));
    }
    m.push_str("\n  }\n}\n");
    std::fs::write(dir.join("manifest.json"), m)?;
    Ok(hashes)
}

/// Shortest round-trip decimal form, so output bytes depend only on the value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_blob_hash() {
        // git hash-object --object-format=sha256 /dev/null
        assert_eq!(content_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.row([num(1.5), num(2.0)]);
        assert_eq!(t.text(), "# schema=1\na,b\n1.5,2\n");
    }

    #[test]
    fn json_escaping() {
        assert_eq!(json_string("a\"b\\c\nd"), "\"a\\\"b\\\\c\\nd\"");
    }
}
