//! CSV serialization, parsing and cross-agent alignment.
//!
//! All files are UTF-8, comma-separated, LF-terminated and unquoted. Reals are
//! printed in shortest round-trip form, so `parse(export(x)) == x` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use crate::analysis::{AgentComparison, DistanceMatrix, ReplicateReport};
use crate::chain::OverheadRow;
use crate::error::{Error, ParseErrorKind, Result};
use crate::graphs::CouplingGraph;
use crate::matching::SelectionRecord;
use crate::recon::{EmbeddingMatrix, ReconstructedEmbedding};
use crate::sim::{DeviceId, TrustLog};

pub const TRUST_HEADER: &str = "time_step,device_id,trust_score";
pub const SELECTIONS_HEADER: &str = "task_id,device_id,rank,trust_score,satisfied";
pub const OVERHEAD_HEADER: &str = "stage,eval_overhead,accuracy";
pub const AGENT_COMPARISON_HEADER: &str = "device_id,mean_a,mean_b,std_a,std_b";
pub const REPLICATES_HEADER: &str = "replicate,seed,mean_offdiag";
pub const GRAPHS_HEADER: &str = "graph,side_a,index_a,side_b,index_b";
pub const SPECTRUM_HEADER: &str = "graph,eig_index,eigenvalue";

/// First cell of the distance-matrix header row.
pub const MATRIX_CORNER: &str = "device_id";

/// Per-device pair `(series_A, series_B)` of equal length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlignedSeriesMap(BTreeMap<DeviceId, (Vec<f64>, Vec<f64>)>);

impl AlignedSeriesMap {
    pub fn get(&self, device: DeviceId) -> Option<(&[f64], &[f64])> {
        self.0.get(&device).map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (DeviceId, &[f64], &[f64])> {
        self.0.iter().map(|(&d, (a, b))| (d, a.as_slice(), b.as_slice()))
    }

    pub fn devices(&self) -> impl Iterator<Item = DeviceId> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which agent's log lacked a device dropped during alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingFrom {
    AgentA,
    AgentB,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub aligned: AlignedSeriesMap,
    /// Devices present in only one log, ascending by id.
    pub skipped: Vec<(DeviceId, MissingFrom)>,
}

fn parse_err(line: usize, kind: ParseErrorKind) -> Error {
    Error::Parse { line, kind }
}

fn check_header(record: &csv::StringRecord, expected: &[&str], line: usize) -> Result<()> {
    if record.iter().ne(expected.iter().copied()) {
        return Err(parse_err(
            line,
            ParseErrorKind::Header {
                expected: expected.join(","),
                found: record.iter().collect::<Vec<_>>().join(","),
            },
        ));
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input)
}

fn read_record<R: Read>(
    rdr: &mut csv::Reader<R>,
    record: &mut csv::StringRecord,
) -> Result<Option<usize>> {
    let line = rdr.position().line() as usize;
    match rdr.read_record(record) {
        Ok(true) => Ok(Some(record.position().map_or(line, |p| p.line() as usize))),
        Ok(false) => Ok(None),
        Err(e) => Err(parse_err(line, ParseErrorKind::Malformed(e.to_string()))),
    }
}

fn field_u64(value: &str, field: &'static str, line: usize) -> Result<u64> {
    value.parse().map_err(|_| {
        parse_err(
            line,
            ParseErrorKind::NonNumeric {
                field,
                value: value.to_string(),
            },
        )
    })
}

fn field_f64(value: &str, field: &'static str, line: usize) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| {
        parse_err(
            line,
            ParseErrorKind::NonNumeric {
                field,
                value: value.to_string(),
            },
        )
    })?;
    if !v.is_finite() {
        return Err(parse_err(line, ParseErrorKind::OutOfRange { field, value: v }));
    }
    Ok(v)
}

fn expect_fields(record: &csv::StringRecord, expected: usize, line: usize) -> Result<()> {
    if record.len() != expected {
        return Err(parse_err(
            line,
            ParseErrorKind::FieldCount {
                expected,
                found: record.len(),
            },
        ));
    }
    Ok(())
}

/// Groups `time_step,device_id,trust_score` rows into per-device series
/// ordered by time step.
///
/// Every device must cover each step from 0 to the largest step in the file
/// exactly once.
pub fn parse_trust_csv<R: Read>(input: R) -> Result<BTreeMap<DeviceId, Vec<f64>>> {
    let mut rdr = reader(input);
    let mut record = csv::StringRecord::new();
    let header: Vec<&str> = TRUST_HEADER.split(',').collect();
    match read_record(&mut rdr, &mut record)? {
        Some(line) => check_header(&record, &header, line)?,
        None => {
            return Err(parse_err(
                1,
                ParseErrorKind::Header {
                    expected: TRUST_HEADER.into(),
                    found: String::new(),
                },
            ))
        }
    }

    // device -> time step -> (score, line)
    let mut grouped: BTreeMap<DeviceId, BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    let mut max_step = None;
    while let Some(line) = read_record(&mut rdr, &mut record)? {
        expect_fields(&record, 3, line)?;
        let time_step = field_u64(&record[0], "time_step", line)?;
        let device_id = field_u64(&record[1], "device_id", line)?;
        let score = field_f64(&record[2], "trust_score", line)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(parse_err(
                line,
                ParseErrorKind::OutOfRange {
                    field: "trust_score",
                    value: score,
                },
            ));
        }
        let steps = grouped.entry(device_id).or_default();
        if steps.insert(time_step, (score, line)).is_some() {
            return Err(parse_err(
                line,
                ParseErrorKind::DuplicateStep {
                    device_id,
                    time_step,
                },
            ));
        }
        max_step = max_step.max(Some(time_step));
    }

    let Some(max_step) = max_step else {
        return Ok(BTreeMap::new());
    };
    let mut out = BTreeMap::new();
    for (device_id, steps) in grouped {
        let mut series = Vec::with_capacity(max_step as usize + 1);
        for expected in 0..=max_step {
            match steps.get(&expected) {
                Some(&(score, _)) => series.push(score),
                None => {
                    // report against the first row past the gap, or the last row
                    let line = steps
                        .range(expected..)
                        .next()
                        .or_else(|| steps.iter().next_back())
                        .map_or(0, |(_, &(_, l))| l);
                    return Err(parse_err(
                        line,
                        ParseErrorKind::MissingStep {
                            device_id,
                            time_step: expected,
                        },
                    ));
                }
            }
        }
        out.insert(device_id, series);
    }
    Ok(out)
}

pub fn parse_trust_log<R: Read>(input: R, agent_id: &str) -> Result<TrustLog> {
    TrustLog::from_series(agent_id, parse_trust_csv(input)?)
}

/// Keeps devices present in both logs and pairs their series.
pub fn align_agents(
    a: &BTreeMap<DeviceId, Vec<f64>>,
    b: &BTreeMap<DeviceId, Vec<f64>>,
) -> Result<Alignment> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Alignment("an agent log contains no devices".into()));
    }
    let mut aligned = BTreeMap::new();
    let mut skipped = Vec::new();
    for (&device, sa) in a {
        match b.get(&device) {
            Some(sb) if sa.len() != sb.len() => {
                return Err(Error::Alignment(format!(
                    "device {device}: agent A has {} time steps, agent B has {}",
                    sa.len(),
                    sb.len()
                )))
            }
            Some(sb) => {
                aligned.insert(device, (sa.clone(), sb.clone()));
            }
            None => skipped.push((device, MissingFrom::AgentB)),
        }
    }
    skipped.extend(
        b.keys()
            .filter(|d| !a.contains_key(d))
            .map(|&d| (d, MissingFrom::AgentA)),
    );
    skipped.sort_by_key(|&(d, _)| d);
    if aligned.is_empty() {
        return Err(Error::Alignment("the two agent logs share no devices".into()));
    }
    Ok(Alignment {
        aligned: AlignedSeriesMap(aligned),
        skipped,
    })
}

pub fn export_trust_csv(log: &TrustLog) -> String {
    let mut out = String::with_capacity(32 * (log.entries().len() + 1));
    out.push_str(TRUST_HEADER);
    out.push('\n');
    for (t, d, s) in log.entries() {
        let _ = writeln!(out, "{t},{d},{s}");
    }
    out
}

/// Column names of an embedding file with `series_len = T + 1`.
pub fn embedding_header(series_len: usize) -> Vec<String> {
    let mut cols = vec!["device_id".to_string()];
    cols.extend((0..series_len).map(|t| format!("a_t{t}")));
    cols.extend((0..series_len).map(|t| format!("b_t{t}")));
    cols.extend(["mean_a", "std_a", "mean_b", "std_b"].map(String::from));
    cols
}

fn push_row(out: &mut String, first: impl std::fmt::Display, values: &[f64]) {
    let _ = write!(out, "{first}");
    for v in values {
        let _ = write!(out, ",{v}");
    }
    out.push('\n');
}

pub fn export_embeddings_csv(embeddings: &EmbeddingMatrix) -> Result<String> {
    let series_len = embeddings.values().next().map_or(0, |e| e.series_len());
    if let Some(e) = embeddings.values().find(|e| e.series_len() != series_len) {
        return Err(Error::Data(format!(
            "device {} has dimension {}, expected {}",
            e.device_id,
            e.dim(),
            2 * series_len + 4
        )));
    }
    let mut out = embedding_header(series_len).join(",");
    out.push('\n');
    for e in embeddings.values() {
        push_row(&mut out, e.device_id, e.features());
    }
    Ok(out)
}

pub fn parse_embeddings_csv<R: Read>(input: R) -> Result<EmbeddingMatrix> {
    let mut rdr = reader(input);
    let mut record = csv::StringRecord::new();
    let Some(line) = read_record(&mut rdr, &mut record)? else {
        return Err(parse_err(1, ParseErrorKind::Malformed("empty embeddings file".into())));
    };
    let width = record.len();
    if width < 9 || (width - 5) % 2 != 0 {
        return Err(parse_err(
            line,
            ParseErrorKind::Malformed(format!("{width} columns is not 1 + 2(T+1) + 4")),
        ));
    }
    let expected = embedding_header((width - 5) / 2);
    check_header(&record, &expected.iter().map(String::as_str).collect::<Vec<_>>(), line)?;

    let mut out = EmbeddingMatrix::new();
    while let Some(line) = read_record(&mut rdr, &mut record)? {
        expect_fields(&record, width, line)?;
        let id = field_u64(&record[0], "device_id", line)?;
        let features = record
            .iter()
            .skip(1)
            .map(|v| field_f64(v, "feature", line))
            .collect::<Result<Vec<_>>>()?;
        let e = ReconstructedEmbedding::from_features(id, features)
            .map_err(|e| parse_err(line, ParseErrorKind::Malformed(e.to_string())))?;
        if out.insert(id, e).is_some() {
            return Err(parse_err(
                line,
                ParseErrorKind::Malformed(format!("duplicate device {id}")),
            ));
        }
    }
    Ok(out)
}

pub fn export_matrix_csv(matrix: &DistanceMatrix) -> Result<String> {
    if !matrix.is_symmetric() {
        return Err(Error::Data(
            "distance matrix is not symmetric with a zero diagonal".into(),
        ));
    }
    let mut out = String::from(MATRIX_CORNER);
    for id in matrix.device_ids() {
        let _ = write!(out, ",{id}");
    }
    out.push('\n');
    for (id, row) in matrix.device_ids().iter().zip(matrix.rows()) {
        push_row(&mut out, id, row);
    }
    Ok(out)
}

pub fn parse_matrix_csv<R: Read>(input: R) -> Result<DistanceMatrix> {
    let mut rdr = reader(input);
    let mut record = csv::StringRecord::new();
    let Some(line) = read_record(&mut rdr, &mut record)? else {
        return Err(parse_err(1, ParseErrorKind::Malformed("empty matrix file".into())));
    };
    if record.get(0) != Some(MATRIX_CORNER) {
        return Err(parse_err(
            line,
            ParseErrorKind::Header {
                expected: format!("{MATRIX_CORNER},<device ids>"),
                found: record.iter().collect::<Vec<_>>().join(","),
            },
        ));
    }
    let ids = record
        .iter()
        .skip(1)
        .map(|v| field_u64(v, "device_id", line))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(ids.len());
    while let Some(line) = read_record(&mut rdr, &mut record)? {
        expect_fields(&record, ids.len() + 1, line)?;
        let id = field_u64(&record[0], "device_id", line)?;
        if ids.get(rows.len()) != Some(&id) {
            return Err(parse_err(
                line,
                ParseErrorKind::Malformed(format!("row device {id} does not match header order")),
            ));
        }
        rows.push(
            record
                .iter()
                .skip(1)
                .map(|v| field_f64(v, "distance", line))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let matrix = DistanceMatrix::new(ids, rows)?;
    if !matrix.is_symmetric() {
        return Err(Error::Data("parsed distance matrix is not symmetric".into()));
    }
    Ok(matrix)
}

/// One row per selected device; `rank` is 1-based in trust order.
pub fn export_selections_csv(
    selections: &[SelectionRecord],
    trust: &BTreeMap<DeviceId, f64>,
) -> Result<String> {
    let mut out = format!("{SELECTIONS_HEADER}\n");
    for sel in selections {
        for (rank, d) in sel.selected.iter().enumerate() {
            let score = trust
                .get(d)
                .ok_or_else(|| Error::Data(format!("no trust score for selected device {d}")))?;
            let _ = writeln!(
                out,
                "{},{d},{},{score},{}",
                sel.task_id,
                rank + 1,
                u8::from(sel.satisfied)
            );
        }
    }
    Ok(out)
}

pub fn export_overhead_csv(rows: &[OverheadRow]) -> String {
    let mut out = format!("{OVERHEAD_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.stage, r.eval_overhead, r.accuracy);
    }
    out
}

pub fn export_agent_comparison_csv(cmp: &AgentComparison) -> String {
    let mut out = format!("{AGENT_COMPARISON_HEADER}\n");
    for r in &cmp.rows {
        push_row(&mut out, r.device_id, &[r.mean_a, r.mean_b, r.std_a, r.std_b]);
    }
    out
}

pub fn export_replicates_csv(report: &ReplicateReport) -> String {
    let mut out = format!("{REPLICATES_HEADER}\n");
    for e in &report.entries {
        let _ = writeln!(out, "{},{},{}", e.replicate, e.seed, e.mean_offdiag);
    }
    out
}

/// Edge list of each named graph, in canonical edge order.
pub fn export_graphs_csv(graphs: &[(String, CouplingGraph)]) -> String {
    let mut out = format!("{GRAPHS_HEADER}\n");
    for (name, g) in graphs {
        for (a, b) in g.edges() {
            let _ = writeln!(out, "{name},{},{},{},{}", a.side, a.index, b.side, b.index);
        }
    }
    out
}

/// Ascending Laplacian eigenvalues of each named graph; `eig_index` is
/// 1-based, so row 2 holds the algebraic connectivity.
pub fn export_spectrum_csv(spectra: &[(String, Vec<f64>)]) -> String {
    let mut out = format!("{SPECTRUM_HEADER}\n");
    for (name, eig) in spectra {
        for (i, v) in eig.iter().enumerate() {
            let _ = writeln!(out, "{name},{},{v}", i + 1);
        }
    }
    out
}
