//! CSV emission: UTF-8, header row, `.` decimal separator, reals at 17
//! significant digits.

/// A real, formatted with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        CsvWriter {
            buf,
            columns: header.len(),
        }
    }

    /// Appends one row; fields are already formatted (use [`real`] for
    /// numbers, `""` for empty-marked cells).
    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "csv row arity mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
