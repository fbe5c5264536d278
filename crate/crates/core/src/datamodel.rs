//! Dataset representation with an explicit missingness mask, column roles
//! and CSV ingestion/emission.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Default tokens that mark a missing cell. Matching is case-sensitive.
pub const DEFAULT_NA_TOKENS: [&str; 3] = ["NA", "NaN", ""];

/// Numeric data with a mask (`true` = observed), stored column by column.
///
/// Values under a `false` mask entry are stored as `0.0` and are never read
/// by any statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    mask: Vec<Vec<bool>>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(mut columns: Vec<Vec<f64>>, mask: Vec<Vec<bool>>, names: Vec<String>) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(Error::Dimension("dataset needs at least one column".into()));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::Dimension("dataset needs at least one row".into()));
        }
        if mask.len() != d || names.len() != d {
            return Err(Error::Dimension(format!(
                "{d} value columns but {} mask columns and {} names",
                mask.len(),
                names.len()
            )));
        }
        for (j, (c, m)) in columns.iter().zip(&mask).enumerate() {
            if c.len() != n || m.len() != n {
                return Err(Error::Dimension(format!(
                    "column '{}' has {} values and {} mask entries, expected {n}",
                    names[j],
                    c.len(),
                    m.len()
                )));
            }
        }
        for (c, m) in columns.iter_mut().zip(&mask) {
            for (v, &observed) in c.iter_mut().zip(m) {
                if !observed {
                    *v = 0.0;
                }
            }
        }
        Ok(Dataset {
            columns,
            mask,
            names,
        })
    }

    /// A fully observed dataset.
    pub fn complete(columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        let mask = columns.iter().map(|c| vec![true; c.len()]).collect();
        Self::new(columns, mask, names)
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Raw column values, with `0.0` in missing cells. Callers must consult
    /// the mask before using a cell of an incomplete column.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn mask_column(&self, j: usize) -> &[bool] {
        &self.mask[j]
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[col][row]
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.mask[col][row].then(|| self.columns[col][row])
    }

    pub fn missing_count(&self, col: usize) -> usize {
        self.mask[col].iter().filter(|m| !**m).count()
    }

    /// Marks `(row, col)` missing wherever `drop(row)` holds.
    pub(crate) fn mask_cells(&mut self, col: usize, drop: impl Fn(usize) -> bool) {
        let values = &mut self.columns[col];
        for (row, m) in self.mask[col].iter_mut().enumerate() {
            if drop(row) {
                *m = false;
                values[row] = 0.0;
            }
        }
    }

    /// Same data with rows reordered: row `i` of the result is row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_rows() {
            return Err(Error::Dimension("permutation length differs from n".into()));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| perm.iter().map(|&i| c[i]).collect())
            .collect();
        let mask = self
            .mask
            .iter()
            .map(|c| perm.iter().map(|&i| c[i]).collect())
            .collect();
        Self::new(columns, mask, self.names.clone())
    }

    /// Same mask, with column `j` replaced by `values`.
    pub fn with_column(&self, j: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.n_rows() {
            return Err(Error::Dimension("replacement column has wrong length".into()));
        }
        let mut columns = self.columns.clone();
        columns[j] = values;
        Self::new(columns, self.mask.clone(), self.names.clone())
    }
}

/// Which columns play the completely observed role (`X`) and which may be
/// missing (`Y`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRoles {
    complete: Vec<usize>,
    incomplete: Vec<usize>,
}

impl ColumnRoles {
    /// Validates an explicit assignment: disjoint, covering every column,
    /// at least one complete column, and complete columns fully observed.
    /// A fully observed column may still be declared incomplete.
    pub fn new(ds: &Dataset, complete: Vec<usize>, incomplete: Vec<usize>) -> Result<Self> {
        let d = ds.n_cols();
        if complete.is_empty() {
            return Err(Error::NoCompleteColumns);
        }
        let mut seen = HashSet::new();
        for &j in complete.iter().chain(&incomplete) {
            if j >= d {
                return Err(Error::Roles(format!("column index {j} out of range (d = {d})")));
            }
            if !seen.insert(j) {
                return Err(Error::Roles(format!(
                    "column '{}' assigned more than once",
                    ds.names()[j]
                )));
            }
        }
        if seen.len() != d {
            let missing: Vec<&str> = (0..d)
                .filter(|j| !seen.contains(j))
                .map(|j| ds.names()[j].as_str())
                .collect();
            return Err(Error::Roles(format!("columns without a role: {}", missing.join(", "))));
        }
        if let Some(&j) = complete.iter().find(|&&j| ds.missing_count(j) > 0) {
            return Err(Error::Roles(format!(
                "column '{}' is declared complete but has {} missing cells",
                ds.names()[j],
                ds.missing_count(j)
            )));
        }
        Ok(ColumnRoles {
            complete,
            incomplete,
        })
    }

    /// Complete columns are exactly those without missing cells.
    pub fn infer(ds: &Dataset) -> Result<Self> {
        let (complete, incomplete) = (0..ds.n_cols()).partition(|&j| ds.missing_count(j) == 0);
        Self::new(ds, complete, incomplete)
    }

    /// Roles given by column names.
    pub fn from_names(ds: &Dataset, complete: &[String], incomplete: &[String]) -> Result<Self> {
        let lookup = |name: &String| {
            ds.names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Roles(format!("unknown column '{name}'")))
        };
        let complete = complete.iter().map(lookup).collect::<Result<_>>()?;
        let incomplete = incomplete.iter().map(lookup).collect::<Result<_>>()?;
        Self::new(ds, complete, incomplete)
    }

    /// The first `p` columns complete, the remaining `q` incomplete. Unlike
    /// [`ColumnRoles::new`] this does not look at any data, so the caller is
    /// responsible for the complete columns being fully observed.
    pub fn leading(p: usize, q: usize) -> Self {
        ColumnRoles {
            complete: (0..p).collect(),
            incomplete: (p..p + q).collect(),
        }
    }

    pub fn complete(&self) -> &[usize] {
        &self.complete
    }

    pub fn incomplete(&self) -> &[usize] {
        &self.incomplete
    }

    pub fn p(&self) -> usize {
        self.complete.len()
    }

    pub fn q(&self) -> usize {
        self.incomplete.len()
    }
}

/// Response indicators `r[v][i] = 1` iff incomplete column `v` is observed
/// in row `i`, stored column by column in the order of the incomplete roles.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    columns: Vec<Vec<f64>>,
}

impl ResponseMatrix {
    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn q(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, v: usize) -> &[f64] {
        &self.columns[v]
    }

    pub fn get(&self, row: usize, v: usize) -> f64 {
        self.columns[v][row]
    }
}

pub fn response_matrix(ds: &Dataset, roles: &ColumnRoles) -> Result<ResponseMatrix> {
    if roles.q() == 0 {
        return Err(Error::NoIncompleteColumns);
    }
    let columns = roles
        .incomplete()
        .iter()
        .map(|&j| {
            ds.mask_column(j)
                .iter()
                .map(|&m| if m { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(ResponseMatrix { columns })
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub na_tokens: Vec<String>,
    /// Explicit `(complete, incomplete)` column names; inferred when `None`.
    pub roles: Option<(Vec<String>, Vec<String>)>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            na_tokens: DEFAULT_NA_TOKENS.iter().map(|s| s.to_string()).collect(),
            roles: None,
        }
    }
}

pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<(Dataset, ColumnRoles)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, opts)
}

/// Parses a headed CSV from any reader; see [`load_csv`].
pub fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<(Dataset, ColumnRoles)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let d = names.len();
    let mut columns = vec![Vec::new(); d];
    let mut mask = vec![Vec::new(); d];

    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Csv(format!(
                "ragged row {}: {len} fields, expected {expected_len}",
                i + 1
            )),
            _ => Error::Csv(e.to_string()),
        })?;
        for (j, field) in record.iter().enumerate() {
            if opts.na_tokens.iter().any(|t| t == field) {
                columns[j].push(0.0);
                mask[j].push(false);
                continue;
            }
            let v: f64 = field
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: i + 1,
                    column: names[j].clone(),
                    value: field.to_string(),
                })?;
            columns[j].push(v);
            mask[j].push(true);
        }
    }
    if columns.first().is_none_or(|c| c.is_empty()) {
        return Err(Error::Csv("no data rows".into()));
    }
    let ds = Dataset::new(columns, mask, names)?;
    if let Some(j) = (0..d).find(|&j| ds.missing_count(j) == ds.n_rows()) {
        return Err(Error::EmptyColumn(ds.names()[j].clone()));
    }
    let roles = match &opts.roles {
        Some((complete, incomplete)) => ColumnRoles::from_names(&ds, complete, incomplete)?,
        None => ColumnRoles::infer(&ds)?,
    };
    Ok((ds, roles))
}

pub fn write_csv(ds: &Dataset, path: &Path, na_token: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::create(path).map_err(io_err)?;
    write_csv_to(ds, &mut file, na_token)?;
    file.flush().map_err(io_err)
}

/// Writes the dataset as CSV. Observed values use the shortest decimal form
/// that parses back to the same `f64`.
pub fn write_csv_to<W: Write>(ds: &Dataset, writer: W, na_token: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    wtr.write_record(ds.names()).map_err(csv_err)?;
    let mut row = Vec::with_capacity(ds.n_cols());
    for i in 0..ds.n_rows() {
        row.clear();
        for j in 0..ds.n_cols() {
            row.push(match ds.value(i, j) {
                Some(v) => format!("{v}"),
                None => na_token.to_string(),
            });
        }
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(Dataset, ColumnRoles)> {
        read_csv(text.as_bytes(), &LoadOptions::default())
    }

    #[test]
    fn one_missing_cell() {
        let (ds, roles) = parse("a,b\n1,2\n3,NA\n5,6\n").unwrap();
        assert_eq!(ds.n_rows(), 3);
        let missing: usize = (0..2).map(|j| ds.missing_count(j)).sum();
        assert_eq!(missing, 1);
        assert!(!ds.is_observed(1, 1));
        assert_eq!(roles.complete(), &[0]);
        assert_eq!(roles.incomplete(), &[1]);
    }

    #[test]
    fn no_missing_tokens_means_all_complete() {
        let (_, roles) = parse("a,b\n1,2\n3,4\n").unwrap();
        assert_eq!(roles.p(), 2);
        assert_eq!(roles.q(), 0);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let err = parse("x,y\n1,2\nabc,3\n").unwrap_err();
        match &err {
            Error::Parse { row, column, value } => {
                assert_eq!(*row, 2);
                assert_eq!(column, "x");
                assert_eq!(value, "abc");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn infinite_values_rejected() {
        assert!(matches!(parse("x,y\ninf,1\n").unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = parse("x,y\n1,2\n3\n").unwrap_err();
        assert!(err.to_string().contains("ragged"), "{err}");
    }

    #[test]
    fn zero_complete_columns_rejected() {
        let err = parse("x,y\nNA,1\n2,NA\n").unwrap_err();
        assert!(matches!(err, Error::NoCompleteColumns));
    }

    #[test]
    fn entirely_missing_column_rejected() {
        let err = parse("x,y\n1,NA\n2,NaN\n").unwrap_err();
        assert!(matches!(err, Error::EmptyColumn(ref c) if c == "y"));
    }

    #[test]
    fn empty_string_is_missing_by_default() {
        let (ds, _) = parse("x,y\n1,\n2,3\n").unwrap();
        assert!(!ds.is_observed(0, 1));
        assert_eq!(ds.value(1, 1), Some(3.0));
    }

    #[test]
    fn tokens_are_case_sensitive() {
        assert!(parse("x,y\n1,na\n2,3\n").is_err());
    }

    #[test]
    fn explicit_roles() {
        let opts = LoadOptions {
            roles: Some((vec!["a".into()], vec!["b".into(), "c".into()])),
            ..LoadOptions::default()
        };
        let (_, roles) = read_csv("a,b,c\n1,2,3\n4,5,NA\n".as_bytes(), &opts).unwrap();
        assert_eq!(roles.complete(), &[0]);
        assert_eq!(roles.incomplete(), &[1, 2]);

        let bad = LoadOptions {
            roles: Some((vec!["c".into()], vec!["a".into(), "b".into()])),
            ..LoadOptions::default()
        };
        assert!(read_csv("a,b,c\n1,2,3\n4,5,NA\n".as_bytes(), &bad).is_err());
        let unknown = LoadOptions {
            roles: Some((vec!["a".into()], vec!["zz".into()])),
            ..LoadOptions::default()
        };
        assert!(read_csv("a,b\n1,2\n".as_bytes(), &unknown).is_err());
    }

    #[test]
    fn roles_must_partition_columns() {
        let ds = Dataset::complete(vec![vec![1.0, 2.0]; 3], vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        assert!(ColumnRoles::new(&ds, vec![0], vec![1]).is_err());
        assert!(ColumnRoles::new(&ds, vec![0, 1], vec![1, 2]).is_err());
        assert!(ColumnRoles::new(&ds, vec![], vec![0, 1, 2]).is_err());
        assert!(ColumnRoles::new(&ds, vec![0], vec![1, 2]).is_ok());
    }

    #[test]
    fn response_matrix_follows_mask() {
        let ds = Dataset::new(
            vec![vec![1.0; 4], vec![2.0; 4], vec![3.0; 4]],
            vec![
                vec![true; 4],
                vec![true, true, false, true],
                vec![true; 4],
            ],
            vec!["x".into(), "y1".into(), "y2".into()],
        )
        .unwrap();
        let roles = ColumnRoles::new(&ds, vec![0], vec![1, 2]).unwrap();
        let r = response_matrix(&ds, &roles).unwrap();
        assert_eq!(r.q(), 2);
        for i in 0..4 {
            assert_eq!(r.get(i, 0), if i == 2 { 0.0 } else { 1.0 });
            assert_eq!(r.get(i, 1), 1.0);
        }

        let all = ColumnRoles::new(&ds, vec![0, 1, 2], vec![]);
        assert!(all.is_err(), "y1 has a missing cell and cannot be complete");
        let none = ColumnRoles::new(&ds, vec![0, 2], vec![1]).unwrap();
        assert_eq!(response_matrix(&ds, &none).unwrap().q(), 1);
        let complete_only =
            Dataset::complete(vec![vec![1.0, 2.0]], vec!["x".into()]).unwrap();
        let roles = ColumnRoles::infer(&complete_only).unwrap();
        assert!(matches!(
            response_matrix(&complete_only, &roles).unwrap_err(),
            Error::NoIncompleteColumns
        ));
    }

    #[test]
    fn round_trip_with_empty_token() {
        let ds = Dataset::new(
            vec![vec![1.5, -2.25, 3.0], vec![0.1, 0.2, 0.3]],
            vec![vec![true; 3], vec![false, true, true]],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf, "").unwrap();
        let (back, _) = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.mask_column(1), ds.mask_column(1));
        assert_eq!(back.value(1, 1), Some(0.2));
    }

    #[test]
    fn mismatched_token_misreads_missing_cells() {
        let ds = Dataset::new(
            vec![vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3]],
            vec![vec![true; 3], vec![true, false, true]],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf, "-999").unwrap();
        // Reading with the default tokens treats "-999" as an observed value.
        let (back, roles) = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.value(1, 1), Some(-999.0));
        assert_eq!(roles.q(), 0);
    }
}
