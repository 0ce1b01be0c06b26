use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tokens treated as a missing cell. Matching is exact and case-sensitive.
pub const MISSING_TOKENS: [&str; 2] = ["NA", ""];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Boolean,
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Ordered, uniquely named feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSchema {
    columns: Vec<Column>,
}

/// Column counts by kind. Booleans are a subset of the categorical count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaSummary {
    pub boolean: usize,
    pub categorical: usize,
    pub continuous: usize,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", c.name)));
            }
        }
        Ok(Self { columns })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, ColumnKind)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(name, kind)| Column {
                    name: name.into(),
                    kind,
                })
                .collect(),
        )
    }

    /// Reads a JSON object mapping column name to kind; column order is the
    /// order of keys in the file.
    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        let mut columns = Vec::with_capacity(map.len());
        for (name, kind) in map {
            let kind: ColumnKind = serde_json::from_value(kind)
                .map_err(|e| Error::Schema(format!("column {name:?}: {e}")))?;
            columns.push(Column { name, kind });
        }
        Self::new(columns)
    }

    pub fn to_json_string(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .columns
            .iter()
            .map(|c| (c.name.clone(), serde_json::to_value(c.kind).expect("kind serializes")))
            .collect();
        serde_json::to_string_pretty(&map).expect("schema serializes")
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn kind(&self, j: usize) -> ColumnKind {
        self.columns[j].kind
    }

    pub fn summary(&self) -> SchemaSummary {
        let boolean = self.columns.iter().filter(|c| c.kind == ColumnKind::Boolean).count();
        let continuous = self.columns.iter().filter(|c| c.kind == ColumnKind::Continuous).count();
        SchemaSummary {
            boolean,
            categorical: self.columns.len() - continuous,
            continuous,
        }
    }

    /// Sub-schema with the named columns, in the given order.
    pub fn project(&self, names: &[String]) -> Result<(Self, Vec<usize>)> {
        let mut idx = Vec::with_capacity(names.len());
        for n in names {
            idx.push(
                self.index_of(n)
                    .ok_or_else(|| Error::Schema(format!("unknown feature {n:?}")))?,
            );
        }
        let cols = idx.iter().map(|&j| self.columns[j].clone()).collect();
        Ok((Self::new(cols)?, idx))
    }
}

pub fn schema_summary(schema: &FeatureSchema) -> SchemaSummary {
    schema.summary()
}

/// Stable identity of a row. Rows duplicated by oversampling keep the
/// origin and get a replica counter above zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId {
    pub origin: u64,
    pub replica: u32,
}

impl RowId {
    pub fn original(origin: u64) -> Self {
        Self { origin, replica: 0 }
    }
}

/// Row-major grid of optional reals bound to a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    schema: FeatureSchema,
    cells: Vec<Option<f64>>,
    n_rows: usize,
    labels: Option<Vec<usize>>,
    row_ids: Vec<RowId>,
}

impl DataTable {
    pub fn new(
        schema: FeatureSchema,
        rows: Vec<Vec<Option<f64>>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n_rows = rows.len();
        let row_ids = (0..n_rows as u64).map(RowId::original).collect();
        let mut cells = Vec::with_capacity(n_rows * schema.len());
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != schema.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} cells, schema has {} columns",
                    r.len(),
                    schema.len()
                )));
            }
            cells.extend(r);
        }
        Self::from_parts(schema, cells, labels, row_ids)
    }

    pub fn from_parts(
        schema: FeatureSchema,
        cells: Vec<Option<f64>>,
        labels: Option<Vec<usize>>,
        row_ids: Vec<RowId>,
    ) -> Result<Self> {
        let n_rows = row_ids.len();
        if cells.len() != n_rows * schema.len() {
            return Err(Error::DimensionMismatch {
                expected: n_rows * schema.len(),
                got: cells.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != n_rows {
                return Err(Error::DimensionMismatch {
                    expected: n_rows,
                    got: l.len(),
                });
            }
        }
        let unique: HashSet<_> = row_ids.iter().collect();
        if unique.len() != n_rows {
            return Err(Error::InvalidArgument("row ids are not unique".into()));
        }
        Ok(Self {
            schema,
            cells,
            n_rows,
            labels,
            row_ids,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        let d = self.n_cols();
        &self.cells[i * d..(i + 1) * d]
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i * self.n_cols() + j]
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [Option<f64>] {
        &mut self.cells
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels().ok_or(Error::MissingLabels)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Per-class row counts, indexed by class id up to the largest label.
    pub fn class_counts(&self) -> Result<Vec<usize>> {
        let labels = self.require_labels()?;
        Ok(class_counts(labels))
    }

    /// New table with the given rows in the given order. Row ids are carried
    /// over, so `idx` must not repeat a row.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let d = self.n_cols();
        let mut cells = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            cells.extend_from_slice(self.row(i));
        }
        Self {
            schema: self.schema.clone(),
            cells,
            n_rows: idx.len(),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Appends copies of existing rows with fresh replica counters.
    pub(crate) fn append_replicas(&mut self, sources: &[usize]) {
        let mut next_replica: HashMap<u64, u32> = HashMap::new();
        for id in &self.row_ids {
            let e = next_replica.entry(id.origin).or_insert(0);
            *e = (*e).max(id.replica + 1);
        }
        for &s in sources {
            let d = self.n_cols();
            let row: Vec<Option<f64>> = self.cells[s * d..(s + 1) * d].to_vec();
            self.cells.extend(row);
            if let Some(l) = &mut self.labels {
                let v = l[s];
                l.push(v);
            }
            let origin = self.row_ids[s].origin;
            let rep = next_replica.entry(origin).or_insert(1);
            self.row_ids.push(RowId {
                origin,
                replica: *rep,
            });
            *rep += 1;
            self.n_rows += 1;
        }
    }

    /// Table restricted to the named feature columns.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let (schema, idx) = self.schema.project(names)?;
        let mut cells = Vec::with_capacity(self.n_rows * idx.len());
        for i in 0..self.n_rows {
            let r = self.row(i);
            cells.extend(idx.iter().map(|&j| r[j]));
        }
        Ok(Self {
            schema,
            cells,
            n_rows: self.n_rows,
            labels: self.labels.clone(),
            row_ids: self.row_ids.clone(),
        })
    }

    /// Present values of column `j`.
    pub fn present_values(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).filter_map(|i| self.cell(i, j)).collect()
    }

    /// Dense feature matrix; fails on the first absent cell.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let d = self.n_cols();
        let mut data = Vec::with_capacity(self.cells.len());
        for (k, c) in self.cells.iter().enumerate() {
            match c {
                Some(v) if v.is_finite() => data.push(*v),
                _ => {
                    return Err(Error::NotDense {
                        row: k / d.max(1),
                        column: k % d.max(1),
                    })
                }
            }
        }
        Matrix::new(self.n_rows, d, data)
    }
}

pub(crate) fn class_counts(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0; k];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Options beyond the plain `parse_csv` contract.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub label_column: Option<String>,
    /// Header columns dropped on read (for example the other outcome columns).
    pub ignore_columns: Vec<String>,
    /// Maps non-numeric label tokens to class ids.
    pub label_map: Option<BTreeMap<String, usize>>,
}

pub fn parse_csv(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    label_column: Option<&str>,
) -> Result<DataTable> {
    parse_csv_with(
        path,
        schema,
        &CsvOptions {
            label_column: label_column.map(str::to_string),
            ..Default::default()
        },
    )
}

pub fn parse_csv_with(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    opts: &CsvOptions,
) -> Result<DataTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_reader(file, schema, opts)
}

pub fn parse_csv_reader<R: std::io::Read>(
    reader: R,
    schema: &FeatureSchema,
    opts: &CsvOptions,
) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::HeaderMismatch(format!("duplicate header {h:?}")));
        }
    }

    // header position -> schema column, label, or ignored
    enum Slot {
        Feature(usize),
        Label,
        Skip,
    }
    let mut slots = Vec::with_capacity(header.len());
    let mut bound = vec![false; schema.len()];
    let mut label_found = false;
    for h in &header {
        if opts.label_column.as_deref() == Some(h.as_str()) {
            slots.push(Slot::Label);
            label_found = true;
        } else if let Some(j) = schema.index_of(h) {
            bound[j] = true;
            slots.push(Slot::Feature(j));
        } else if opts.ignore_columns.iter().any(|c| c == h) {
            slots.push(Slot::Skip);
        } else {
            return Err(Error::HeaderMismatch(format!("column {h:?} not in schema")));
        }
    }
    if let Some(j) = bound.iter().position(|b| !b) {
        return Err(Error::HeaderMismatch(format!(
            "schema column {:?} missing from header",
            schema.columns()[j].name
        )));
    }
    if let Some(l) = &opts.label_column {
        if !label_found {
            return Err(Error::HeaderMismatch(format!("label column {l:?} missing from header")));
        }
    }

    let d = schema.len();
    let mut cells = Vec::new();
    let mut labels = opts.label_column.as_ref().map(|_| Vec::new());
    let mut n_rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let start = cells.len();
        cells.resize(start + d, None);
        for (slot, (tok, h)) in slots.iter().zip(record.iter().zip(&header)) {
            match slot {
                Slot::Skip => {}
                Slot::Feature(j) => {
                    cells[start + j] = parse_cell(tok).map_err(|_| Error::BadToken {
                        row: r,
                        column: h.clone(),
                        token: tok.to_string(),
                    })?;
                }
                Slot::Label => {
                    let lbl = parse_label(tok, opts.label_map.as_ref()).ok_or_else(|| {
                        Error::BadToken {
                            row: r,
                            column: h.clone(),
                            token: tok.to_string(),
                        }
                    })?;
                    labels.as_mut().expect("label slot implies labels").push(lbl);
                }
            }
        }
        n_rows += 1;
    }
    let row_ids = (0..n_rows as u64).map(RowId::original).collect();
    DataTable::from_parts(schema.clone(), cells, labels, row_ids)
}

fn parse_cell(tok: &str) -> std::result::Result<Option<f64>, ()> {
    if MISSING_TOKENS.contains(&tok) {
        return Ok(None);
    }
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(()),
    }
}

fn parse_label(tok: &str, map: Option<&BTreeMap<String, usize>>) -> Option<usize> {
    if let Some(m) = map {
        if let Some(&v) = m.get(tok) {
            return Some(v);
        }
    }
    if let Ok(v) = tok.parse::<usize>() {
        return Some(v);
    }
    // "1.0" style integer labels
    match tok.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 => Some(v as usize),
        _ => None,
    }
}

/// Writes the table back as CSV. Absent cells are written as `NA`; present
/// values use Rust's shortest round-trip float formatting, so
/// `parse_csv(write_csv(t))` reproduces every cell bit-for-bit.
pub fn write_csv(table: &DataTable, path: impl AsRef<Path>, label_column: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_writer(table, file, label_column)
}

pub fn write_csv_writer<W: Write>(table: &DataTable, writer: W, label_column: Option<&str>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = table.schema().names();
    let label_column = match (label_column, table.labels()) {
        (Some(l), Some(_)) => Some(l),
        _ => None,
    };
    if let Some(l) = label_column {
        header.push(l);
    }
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..table.n_rows() {
        rec.clear();
        rec.extend(table.row(i).iter().map(|c| match c {
            Some(v) => format!("{v}"),
            None => "NA".to_string(),
        }));
        if label_column.is_some() {
            rec.push(table.labels().expect("checked")[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema3() -> FeatureSchema {
        FeatureSchema::from_pairs([
            ("flag", ColumnKind::Boolean),
            ("grade", ColumnKind::Categorical),
            ("age", ColumnKind::Continuous),
        ])
        .unwrap()
    }

    fn parse(text: &str, label: Option<&str>) -> Result<DataTable> {
        parse_csv_reader(
            text.as_bytes(),
            &schema3(),
            &CsvOptions {
                label_column: label.map(str::to_string),
                ..Default::default()
            },
        )
    }

    #[test]
    fn na_and_empty_become_absent() {
        let t = parse("flag,grade,age,y\n1,NA,3.5,0\n,2,NA,1\n", Some("y")).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.row(0), &[Some(1.0), None, Some(3.5)]);
        assert_eq!(t.row(1), &[None, Some(2.0), None]);
        assert_eq!(t.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn lowercase_na_is_a_bad_token() {
        let err = parse("flag,grade,age\n1,na,3\n", None).unwrap_err();
        match err {
            Error::BadToken { row, column, token } => {
                assert_eq!((row, column.as_str(), token.as_str()), (0, "grade", "na"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn header_only_gives_empty_table() {
        let t = parse("flag,grade,age\n", None).unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(t.n_cols(), 3);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse("flag,grade\n1,2\n", None), Err(Error::HeaderMismatch(_))));
        assert!(matches!(
            parse("flag,grade,age,extra\n1,2,3,4\n", None),
            Err(Error::HeaderMismatch(_))
        ));
        assert!(matches!(
            parse("flag,grade,age,age\n1,2,3,4\n", None),
            Err(Error::HeaderMismatch(_))
        ));
        assert!(matches!(parse("flag,grade,age\n1,2,3\n", Some("y")), Err(Error::HeaderMismatch(_))));
    }

    #[test]
    fn header_order_is_free_and_ignored_columns_drop() {
        let t = parse_csv_reader(
            "age,other,flag,grade\n4,x,1,2\n".as_bytes(),
            &schema3(),
            &CsvOptions {
                ignore_columns: vec!["other".into()],
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.row(0), &[Some(1.0), Some(2.0), Some(4.0)]);
    }

    #[test]
    fn label_map_translates_text_labels() {
        let mut map = BTreeMap::new();
        map.insert("deceased".to_string(), 1);
        map.insert("discharged".to_string(), 0);
        let t = parse_csv_reader(
            "flag,grade,age,status\n1,2,3,deceased\n0,1,2,discharged\n".as_bytes(),
            &schema3(),
            &CsvOptions {
                label_column: Some("status".into()),
                label_map: Some(map),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.labels().unwrap(), &[1, 0]);
    }

    #[test]
    fn summary_counts_booleans_inside_categorical() {
        let s = FeatureSchema::from_pairs([
            ("a", ColumnKind::Boolean),
            ("b", ColumnKind::Boolean),
            ("c", ColumnKind::Continuous),
        ])
        .unwrap();
        assert_eq!(
            s.summary(),
            SchemaSummary {
                boolean: 2,
                categorical: 2,
                continuous: 1
            }
        );
        assert_eq!(
            FeatureSchema::default().summary(),
            SchemaSummary {
                boolean: 0,
                categorical: 0,
                continuous: 0
            }
        );
    }

    #[test]
    fn clinical_sized_schema_summary() {
        let mut cols = Vec::new();
        for i in 0..86 {
            let kind = if i < 40 { ColumnKind::Boolean } else { ColumnKind::Categorical };
            cols.push((format!("cat{i}"), kind));
        }
        for i in 0..36 {
            cols.push((format!("num{i}"), ColumnKind::Continuous));
        }
        let s = FeatureSchema::from_pairs(cols).unwrap().summary();
        assert_eq!((s.boolean, s.categorical, s.continuous), (40, 86, 36));
    }

    #[test]
    fn schema_rejects_duplicates_and_empty_names() {
        assert!(FeatureSchema::from_pairs([("a", ColumnKind::Boolean), ("a", ColumnKind::Continuous)]).is_err());
        assert!(FeatureSchema::from_pairs([("", ColumnKind::Boolean)]).is_err());
    }

    #[test]
    fn schema_json_keeps_key_order() {
        let s = FeatureSchema::from_json_str(r#"{"z":"continuous","a":"boolean","m":"categorical"}"#).unwrap();
        assert_eq!(s.names(), vec!["z", "a", "m"]);
        let back = FeatureSchema::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
        assert!(FeatureSchema::from_json_str(r#"{"a":"ordinal"}"#).is_err());
    }

    #[test]
    fn replicas_get_increasing_counters() {
        let mut t = parse("flag,grade,age,y\n1,2,3,0\n0,1,2,1\n", Some("y")).unwrap();
        t.append_replicas(&[1, 1, 0]);
        let ids: Vec<_> = t.row_ids().iter().map(|r| (r.origin, r.replica)).collect();
        assert_eq!(ids, vec![(0, 0), (1, 0), (1, 1), (1, 2), (0, 1)]);
        assert_eq!(t.labels().unwrap(), &[0, 1, 1, 1, 0]);
    }
}
