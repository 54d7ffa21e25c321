use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::Bounds;

/// Table I of the characterization data, shipped without a user column.
pub const TABLE_ONE_CSV: &str = include_str!("../../data/table1.csv");

/// User count assumed for rows whose source has no `users` column.
pub const DEFAULT_FILL_USERS: u32 = 8;

const HEADER: [&str; 5] = ["table_rows", "miss_ratio", "users", "pool_mb", "cache_mb"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRow {
    pub table_rows: u64,
    pub miss_ratio: f64,
    pub users: u32,
    pub pool_mb: u32,
    pub cache_mb: u32,
}

impl TrainingRow {
    pub fn features(&self) -> [f64; 3] {
        [
            self.table_rows as f64,
            self.miss_ratio,
            f64::from(self.users),
        ]
    }

    pub fn targets(&self) -> [f64; 2] {
        [f64::from(self.pool_mb), f64::from(self.cache_mb)]
    }
}

/// Labeled rows `(table_rows, miss_ratio, users) -> (pool_mb, cache_mb)`.
///
/// When the source lacked a `users` column the column is marked as filled:
/// it is exempt from the constant-column check and is ignored as an input.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    rows: Vec<TrainingRow>,
    users_filled: bool,
}

impl TrainingSet {
    pub fn new(rows: Vec<TrainingRow>) -> Self {
        TrainingSet {
            rows,
            users_filled: false,
        }
    }

    /// Bundled Table I rows with every user count set to `fill_users`.
    pub fn table_one(fill_users: u32) -> Self {
        Self::parse_csv(
            TABLE_ONE_CSV.as_bytes(),
            Path::new("<bundled table1.csv>"),
            fill_users,
        )
        .expect("bundled table is well formed")
    }

    pub fn rows(&self) -> &[TrainingRow] {
        &self.rows
    }

    pub fn users_filled(&self) -> bool {
        self.users_filled
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: TrainingRow) {
        self.rows.push(row);
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() < 2 {
            return Err(Error::DegenerateTrainingSet(format!(
                "need at least 2 rows, got {}",
                self.rows.len()
            )));
        }
        if self.rows.iter().any(|r| !(r.miss_ratio.is_finite())) {
            return Err(Error::DegenerateTrainingSet("non-finite miss_ratio".into()));
        }
        for (col, (lo, hi)) in self.column_ranges(|r| r.features()).into_iter().enumerate() {
            if lo == hi && !(col == 2 && self.users_filled) {
                return Err(Error::DegenerateTrainingSet(format!(
                    "feature column `{}` is constant ({lo})",
                    HEADER[col]
                )));
            }
        }
        Ok(())
    }

    fn column_ranges<const N: usize>(&self, f: impl Fn(&TrainingRow) -> [f64; N]) -> Bounds {
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); N];
        for row in &self.rows {
            for (b, v) in out.iter_mut().zip(f(row)) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        out
    }

    /// Column minima and maxima; a filled users column gets `(v, v)` (unused).
    pub fn feature_bounds(&self) -> Bounds {
        let mut b = self.column_ranges(|r| r.features());
        if self.users_filled {
            b[2].1 = b[2].0;
        }
        b
    }

    pub fn target_bounds(&self) -> Bounds {
        self.column_ranges(|r| r.targets())
    }

    pub fn load_csv(path: &Path, fill_users: u32) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(file, path, fill_users)
    }

    /// Parse CSV with header `table_rows,miss_ratio,users,pool_mb,cache_mb`
    /// (columns in any order). A missing `users` column is filled with `fill_users`.
    pub fn parse_csv<R: std::io::Read>(reader: R, path: &Path, fill_users: u32) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let parse_err = |line: u64, message: String| Error::DataParse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let mut idx = [None; 5];
        for (pos, name) in headers.iter().enumerate() {
            match HEADER.iter().position(|h| *h == name) {
                Some(col) if idx[col].is_none() => idx[col] = Some(pos),
                Some(_) => return Err(parse_err(1, format!("duplicate column `{name}`"))),
                None => return Err(parse_err(1, format!("unknown column `{name}`"))),
            }
        }
        for (col, found) in idx.iter().enumerate() {
            if found.is_none() && col != 2 {
                return Err(parse_err(1, format!("missing column `{}`", HEADER[col])));
            }
        }
        let users_filled = idx[2].is_none();

        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |col: usize| -> Result<&str> {
                let pos = idx[col].expect("checked above");
                record
                    .get(pos)
                    .ok_or_else(|| parse_err(line, format!("missing field `{}`", HEADER[col])))
            };
            fn num<T: std::str::FromStr>(s: &str, name: &str, line: u64, path: &Path) -> Result<T> {
                s.parse().map_err(|_| Error::DataParse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("field `{name}`: cannot parse {s:?}"),
                })
            }
            let miss_ratio: f64 = num(field(1)?, HEADER[1], line, path)?;
            if !(0.0..=1.0).contains(&miss_ratio) {
                return Err(parse_err(
                    line,
                    format!("field `miss_ratio`: {miss_ratio} outside [0, 1]"),
                ));
            }
            rows.push(TrainingRow {
                table_rows: num(field(0)?, HEADER[0], line, path)?,
                miss_ratio,
                users: if users_filled {
                    fill_users
                } else {
                    num(field(2)?, HEADER[2], line, path)?
                },
                pool_mb: num(field(3)?, HEADER[3], line, path)?,
                cache_mb: num(field(4)?, HEADER[4], line, path)?,
            });
        }
        Ok(TrainingSet { rows, users_filled })
    }

    /// Write all five columns, including a filled users column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", HEADER.join(","))?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.table_rows,
                crate::float::Sig(r.miss_ratio),
                r.users,
                r.pool_mb,
                r.cache_mb
            )?;
        }
        Ok(())
    }
}
