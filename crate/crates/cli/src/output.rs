//! Rendering of reports as aligned text, CSV or `key=value` lines.

use clap::ValueEnum;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Kv,
}

/// Ordered fields followed by an optional table.
#[derive(Debug, Default)]
pub struct Report {
    fields: Vec<(String, String)>,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn headers(&mut self, headers: &[&str]) -> &mut Self {
        self.headers = headers.iter().map(|h| h.to_string()).collect();
        self
    }

    pub fn row(&mut self, values: Vec<String>) -> &mut Self {
        debug_assert_eq!(values.len(), self.headers.len());
        self.rows.push(values);
        self
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Human => {
                let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "{k:<width$}  {v}");
                }
                if !self.headers.is_empty() {
                    if !self.fields.is_empty() {
                        out.push('\n');
                    }
                    let widths: Vec<usize> = (0..self.headers.len())
                        .map(|j| self.rows.iter().map(|r| r[j].len()).chain([self.headers[j].len()]).max().unwrap_or(0))
                        .collect();
                    let line = |cells: &[String]| {
                        cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
                    };
                    let _ = writeln!(out, "{}", line(&self.headers));
                    for r in &self.rows {
                        let _ = writeln!(out, "{}", line(r));
                    }
                }
            }
            Format::Csv => {
                if self.headers.is_empty() {
                    let keys: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
                    let vals: Vec<String> = self.fields.iter().map(|(_, v)| csv_cell(v)).collect();
                    let _ = writeln!(out, "{}\n{}", keys.join(","), vals.join(","));
                } else {
                    let _ = writeln!(out, "{}", self.headers.join(","));
                    for r in &self.rows {
                        let _ = writeln!(out, "{}", r.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(","));
                    }
                }
            }
            Format::Kv => {
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "{k}={v}");
                }
                for r in &self.rows {
                    let cells: Vec<String> = self.headers.iter().zip(r).map(|(h, c)| format!("{h}={c}")).collect();
                    let _ = writeln!(out, "{}", cells.join(" "));
                }
            }
        }
        out
    }
}

fn csv_cell(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        let mut r = Report::new();
        r.field("a", 1).field("bb", "x,y");
        assert_eq!(r.render(Format::Kv), "a=1\nbb=x,y\n");
        assert_eq!(r.render(Format::Csv), "a,bb\n1,\"x,y\"\n");
        assert_eq!(r.render(Format::Human), "a   1\nbb  x,y\n");
        let mut t = Report::new();
        t.headers(&["r", "length"]).row(vec!["1".into(), "0".into()]);
        assert_eq!(t.render(Format::Csv), "r,length\n1,0\n");
        assert_eq!(t.render(Format::Kv), "r=1 length=0\n");
    }
}
