//! Tabular output in CSV or JSON, written deterministically so repeated
//! runs with the same arguments produce identical bytes.

use std::io::Write;

#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Table {
    /// optional explanatory line, emitted as a `#` comment in CSV
    pub comment: Option<&'static str>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            comment: None,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn with_comment(columns: Vec<&'static str>, comment: &'static str) -> Self {
        Table {
            comment: Some(comment),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, w: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        if let Some(c) = self.comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    fn write_json(&self, w: &mut dyn Write) -> std::io::Result<()> {
        write!(w, "{{")?;
        if let Some(c) = self.comment {
            write!(w, "\"comment\":{},", json_string(c))?;
        }
        write!(w, "\"rows\":[")?;
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(w, ",")?;
            }
            write!(w, "{{")?;
            for (j, (name, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    write!(w, ",")?;
                }
                write!(w, "{}:{}", json_string(name), json_string(cell))?;
            }
            write!(w, "}}")?;
        }
        writeln!(w, "]}}")
    }
}

fn csv_cell(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') || cell.contains('\n') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
