//! `# key: value` header blocks carried at the top of every emitted file.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = concat!("migcopula ", env!("CARGO_PKG_VERSION"));

/// Ordered key/value metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    /// A header starting with the tool version.
    pub fn new() -> Self {
        let mut h = Header::default();
        h.push("tool", TOOL_VERSION);
        h
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.entries.push((key.into(), value));
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }

    /// Collects leading `# key: value` lines of `text`.
    pub fn parse(text: &str) -> Self {
        let mut h = Header::default();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.trim_start().split_once(':') {
                h.entries.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let h = Header::new().with("seed", 42).with("note", "a: b");
        let mut buf = Vec::new();
        h.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap() + "year,A\n1,2\n";
        let back = Header::parse(&text);
        assert_eq!(back, h);
        assert_eq!(back.get("note"), Some("a: b"));
    }
}
