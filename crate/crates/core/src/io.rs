//! Angle-file ingestion, report serialization and run manifests.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gof::{NullTable, TestReport};
use crate::torus::{AngleConvention, TorusSample};

/// Version embedded in every JSON document written by this crate.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// P-values below this are reported as this value and flagged.
pub const P_VALUE_FLOOR: f64 = 2.2e-16;
/// JSON Schema of serialized test reports.
pub const TEST_REPORT_SCHEMA: &str = include_str!("../schemas/test_report.schema.json");

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A column picked by header name or by zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnRef {
    type Err = Error;

    /// Digits select by position, anything else by name.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidParameter("empty column reference".into()));
        }
        Ok(s.parse::<usize>().map_or_else(|_| Self::Name(s.to_owned()), Self::Index))
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Index(i) => write!(f, "#{i}"),
            Self::Name(n) => f.write_str(n),
        }
    }
}

/// Where and how to read `(φ, ψ)` pairs from a delimited text file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleFileSpec {
    pub path: PathBuf,
    pub phi: ColumnRef,
    pub psi: ColumnRef,
    pub convention: AngleConvention,
    pub delimiter: u8,
    pub has_header: bool,
}

impl AngleFileSpec {
    /// Comma-separated, header row, columns `phi` and `psi`, degrees in
    /// `[-180, 180)`.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            phi: ColumnRef::Name("phi".into()),
            psi: ColumnRef::Name("psi".into()),
            convention: AngleConvention::default(),
            delimiter: b',',
            has_header: true,
        }
    }
}

fn resolve(col: &ColumnRef, headers: Option<&csv::StringRecord>, path: &Path) -> Result<usize> {
    match (col, headers) {
        (ColumnRef::Index(i), _) => Ok(*i),
        (ColumnRef::Name(name), Some(h)) => h.iter().position(|c| c.trim() == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("no column named {name:?}"),
        }),
        (ColumnRef::Name(name), None) => Err(Error::InvalidParameter(format!(
            "column {name:?} selected by name but the file has no header"
        ))),
    }
}

/// Read `(φ, ψ)` rows and rescale them onto `[0, 1)^2`, preserving order.
///
/// Blank lines are skipped. Parse and range errors carry the 1-based line
/// number in the file.
pub fn ingest_angles(spec: &AngleFileSpec) -> Result<TorusSample> {
    let file = File::open(&spec.path).map_err(io_err(&spec.path))?;
    ingest_angles_from(BufReader::new(file), spec)
}

/// [`ingest_angles`] from any reader; `spec.path` only labels errors.
pub fn ingest_angles_from<R: Read>(reader: R, spec: &AngleFileSpec) -> Result<TorusSample> {
    let path = spec.path.as_path();
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = if spec.has_header { Some(rdr.headers()?.clone()) } else { None };
    let (ci, cj) = (resolve(&spec.phi, headers.as_ref(), path)?, resolve(&spec.psi, headers.as_ref(), path)?);

    let mut coords = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        for (col, idx) in [(&spec.phi, ci), (&spec.psi, cj)] {
            let field = rec.get(idx).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("missing column {col}"),
            })?;
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("cannot parse {field:?} in column {col} as a number"),
            })?;
            let u = spec.convention.to_unit(value).map_err(|e| match e {
                Error::AngleRange { value, lower, upper, .. } => Error::AngleRange {
                    value,
                    lower,
                    upper,
                    row: Some(line),
                },
                other => other,
            })?;
            coords.push(u);
        }
    }
    if coords.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no data rows", path.display())));
    }
    TorusSample::from_flat(2, coords)
}

/// Write a sample as `phi,psi` rows in the given convention; re-ingesting
/// with the same convention reproduces the sample.
pub fn export_angles<W: Write>(sample: &TorusSample, conv: AngleConvention, out: W) -> Result<()> {
    if sample.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: sample.dim(),
            right: 2,
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi", "psi"])?;
    for p in sample.points() {
        w.write_record([conv.from_unit(p[0]).to_string(), conv.from_unit(p[1]).to_string()])?;
    }
    w.flush().map_err(io_err(Path::new("<angle output>")))
}

/// Serialize a report, clamping p-values below [`P_VALUE_FLOOR`] and
/// flagging the clamp in `p_value_clamped`.
pub fn report_to_json(report: &TestReport) -> Result<Value> {
    let mut v = serde_json::to_value(report)?;
    let clamped = report.p_value < P_VALUE_FLOOR;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::Internal("report did not serialize to an object".into()))?;
    if clamped {
        obj.insert("p_value".into(), Value::from(P_VALUE_FLOOR));
    }
    obj.insert("p_value_clamped".into(), Value::from(clamped));
    obj.insert("schema_version".into(), Value::from(REPORT_SCHEMA_VERSION));
    Ok(v)
}

/// Pretty JSON with a trailing newline. Floats use the shortest
/// representation that parses back to the same value.
pub fn to_json_string<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<S: Serialize + ?Sized>(value: &S, path: &Path) -> Result<()> {
    std::fs::write(path, to_json_string(value)?).map_err(io_err(path))
}

pub fn read_null_table(path: &Path) -> Result<NullTable> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let table: NullTable = serde_json::from_str(&text)?;
    table.validate()?;
    Ok(table)
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = file.read(&mut buf).map_err(io_err(path))?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    /// RFC 3339, UTC.
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, args: Vec<String>, seed: Option<u64>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.into(),
            args,
            seed,
            version: crate::VERSION.to_owned(),
            inputs: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            elapsed_seconds: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256,
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gof::Method;
    use crate::torus::{AngleRange, AngleUnit};

    fn spec() -> AngleFileSpec {
        AngleFileSpec::new("mem.csv")
    }

    #[test]
    fn converts_degrees() {
        let s = ingest_angles_from("phi,psi\n-180,0\n0,90\n".as_bytes(), &spec()).unwrap();
        assert_eq!(s.flat(), &[0.0, 0.5, 0.5, 0.75]);
    }

    #[test]
    fn tolerates_blank_lines() {
        let s = ingest_angles_from("phi,psi\n-180,0\n\n0,90\n\n".as_bytes(), &spec()).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn range_error_names_line() {
        let mut sp = spec();
        sp.convention = AngleConvention::RADIANS_SIGNED;
        let err = ingest_angles_from("phi,psi\n0,0\n7.0,0\n".as_bytes(), &sp).unwrap_err();
        assert!(matches!(err, Error::AngleRange { row: Some(3), .. }), "{err}");
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn parse_error_names_line() {
        let err = ingest_angles_from("phi,psi\n0,0\n1,abc\n".as_bytes(), &spec()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn missing_column_and_empty_file() {
        let mut sp = spec();
        sp.psi = ColumnRef::Name("chi".into());
        assert!(matches!(
            ingest_angles_from("phi,psi\n0,0\n".as_bytes(), &sp),
            Err(Error::Parse { .. })
        ));
        assert!(ingest_angles_from("phi,psi\n".as_bytes(), &spec()).is_err());
        sp.psi = ColumnRef::Index(5);
        assert!(ingest_angles_from("phi,psi\n0,0\n".as_bytes(), &sp).is_err());
    }

    #[test]
    fn positional_columns_without_header() {
        let sp = AngleFileSpec {
            phi: ColumnRef::Index(1),
            psi: ColumnRef::Index(2),
            has_header: false,
            delimiter: b'\t',
            convention: AngleConvention {
                unit: AngleUnit::Degrees,
                range: AngleRange::Unsigned,
            },
            ..spec()
        };
        let s = ingest_angles_from("A\t90\t180\nB\t0\t270\n".as_bytes(), &sp).unwrap();
        assert_eq!(s.flat(), &[0.25, 0.5, 0.0, 0.75]);
        assert_eq!("3".parse::<ColumnRef>().unwrap(), ColumnRef::Index(3));
        assert_eq!("phi".parse::<ColumnRef>().unwrap(), ColumnRef::Name("phi".into()));
    }

    #[test]
    fn export_round_trip() {
        let text = "phi,psi\n-63.8,-41.1\n-120.25,130.5\n57.0,47.3\n179.999,-179.999\n";
        let s = ingest_angles_from(text.as_bytes(), &spec()).unwrap();
        let mut buf = Vec::new();
        export_angles(&s, AngleConvention::default(), &mut buf).unwrap();
        let back = ingest_angles_from(buf.as_slice(), &spec()).unwrap();
        for (a, b) in s.flat().iter().zip(back.flat()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn clamps_tiny_p_values() {
        let report = TestReport {
            method: Method::UpperBound,
            statistic: 0.3,
            p_value: 1e-30,
            n: 10,
            m: 10,
            details: Default::default(),
        };
        let v = report_to_json(&report).unwrap();
        assert_eq!(v["p_value"], P_VALUE_FLOOR);
        assert_eq!(v["p_value_clamped"], true);
        assert_eq!(v["method"], "upper-bound");
        assert_eq!(v["schema_version"], REPORT_SCHEMA_VERSION);
    }

    #[test]
    fn manifest_records_digest() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("a.csv");
        std::fs::write(&input, "abc").unwrap();
        let mut m = RunManifest::new("test", vec!["--seed".into(), "3".into()], Some(3));
        m.add_input(&input).unwrap();
        assert_eq!(
            m.inputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let out = dir.path().join("manifest.json");
        m.write(&out).unwrap();
        let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
