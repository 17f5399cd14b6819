//! CSV and JSON rendering. Every file starts with the config hash.

use serde::Serialize;

use crate::CliError;

/// A file to be written as `<prefix>_<suffix>`.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub suffix: String,
    pub contents: String,
}

fn csv_error(e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("csv encoding failed: {e}"))
}

/// Rows of optional numbers; `None` renders as an empty field.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Shortest round-trip representation, with an exponent for very small or
/// large magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn render(&self, hash: &str) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        let body = w.into_inner().map_err(csv_error)?;
        Ok(format!("# config_hash: {hash}\n{}", String::from_utf8(body).map_err(csv_error)?))
    }
}

/// Blocks of `x,u,v` rows, each introduced by a `t=<value>` line.
pub fn snapshots_csv<'a>(
    hash: &str,
    x: &[f64],
    blocks: impl IntoIterator<Item = (f64, &'a [f64], &'a [f64])>,
) -> Result<String, CliError> {
    let mut out = format!("# config_hash: {hash}\n");
    for (t, u, v) in blocks {
        out.push_str(&format!("t={}\n", num(t)));
        let mut table = Table::new(&["x", "u", "v"]);
        for i in 0..x.len() {
            table.push_nums(&[x[i], u[i], v[i]]);
        }
        let block = table.render(hash)?;
        out.push_str(block.split_once('\n').map_or("", |(_, rest)| rest));
    }
    Ok(out)
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    report: &'a T,
}

pub fn json<T: Serialize>(hash: &str, report: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&Stamped {
        config_hash: hash,
        report,
    })
    .map_err(|e| CliError::Io(format!("json encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push_nums(&[1.0, 0.1]);
        t.push(vec![num(-2.5), opt(None)]);
        assert_eq!(t.render("h").unwrap(), "# config_hash: h\na,b\n1.0,0.1\n-2.5,\n");
    }

    #[test]
    fn snapshot_blocks() {
        let x = [0.0, 1.0];
        let u = [0.5, 0.25];
        let v = [0.0, 1.0];
        let s = snapshots_csv("h", &x, [(0.0, &u[..], &v[..]), (1.5, &u[..], &v[..])]).unwrap();
        assert_eq!(
            s,
            "# config_hash: h\nt=0.0\nx,u,v\n0.0,0.5,0.0\n1.0,0.25,1.0\nt=1.5\nx,u,v\n0.0,0.5,0.0\n1.0,0.25,1.0\n"
        );
    }

    #[test]
    fn json_carries_hash() {
        #[derive(Serialize)]
        struct R {
            value: f64,
        }
        let s = json("abc", &R { value: 2.0 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["config_hash"], "abc");
        assert_eq!(v["value"], 2.0);
    }
}
