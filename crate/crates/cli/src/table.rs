//! Plain tabular results and their CSV encoding.

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl Cell {
    /// Fixed 13-significant-digit scientific notation keeps files
    /// byte-identical across runs and platforms.
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.12e}"),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// (name, unit); unit `""` for dimensionless columns.
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|(n, u)| ((*n).to_owned(), (*u).to_owned())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    /// Headers read `name [unit]`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|(n, u)| if u.is_empty() { n.clone() } else { format!("{n} [{u}]") })
            .collect();
        w.write_record(&header).expect("in-memory CSV write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
    }

    /// Prepends sweep-coordinate columns to every row.
    pub fn with_prefix(&self, prefix: &[(String, String, f64)]) -> Table {
        let mut columns: Vec<(String, String)> = prefix.iter().map(|(n, u, _)| (n.clone(), u.clone())).collect();
        columns.extend(self.columns.iter().cloned());
        let rows = self
            .rows
            .iter()
            .map(|r| prefix.iter().map(|(_, _, v)| Cell::Num(*v)).chain(r.iter().cloned()).collect())
            .collect();
        Table { name: self.name.clone(), columns, rows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_headers_carry_units() {
        let mut t = Table::new("demo", &[("temperature", "K"), ("ratio", "")]);
        t.push(vec![4.5.into(), Cell::Missing]);
        t.push(vec![f64::INFINITY.into(), 0.25.into()]);
        assert_eq!(t.to_csv(), "temperature [K],ratio\n4.500000000000e0,\ninf,2.500000000000e-1\n");
    }

    #[test]
    fn prefix_columns() {
        let mut t = Table::new("demo", &[("x", "s")]);
        t.push(vec![1.0.into()]);
        let p = t.with_prefix(&[("cavity.g".into(), "Hz".into(), 2e9)]);
        assert_eq!(p.to_csv(), "cavity.g [Hz],x [s]\n2.000000000000e9,1.000000000000e0\n");
    }
}
