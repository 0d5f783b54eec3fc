//! File formats: responses as CSV (`participant_id,problem_id,value`) or
//! JSON-lines, problems and profiles as JSON-lines, documents as JSON.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ProblemSet, Response, ResponseMatrix};
use crate::error::{Error, Result};

const CSV_HEADER: [&str; 3] = ["participant_id", "problem_id", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseFormat {
    Csv,
    JsonLines,
}

impl ResponseFormat {
    /// Guess from the file extension (`.jsonl`/`.ndjson` vs anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => ResponseFormat::JsonLines,
            _ => ResponseFormat::Csv,
        }
    }
}

pub fn read_json_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = create(path)?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| Error::Parse {
            what: "json line".into(),
            message: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        what: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Pretty JSON with a trailing newline. Output is a pure function of `value`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        what: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Ingest a response file. When `problems` is given every response must refer
/// to a known problem and be on that problem's scale.
pub fn load_responses(
    path: impl AsRef<Path>,
    format: ResponseFormat,
    problems: Option<&ProblemSet>,
) -> Result<ResponseMatrix> {
    let path = path.as_ref();
    let responses = match format {
        ResponseFormat::Csv => read_responses_csv(path)?,
        ResponseFormat::JsonLines => read_json_lines(path)?,
    };
    let matrix = ResponseMatrix::new(responses)?;
    if let Some(problems) = problems {
        matrix.validate_against(problems)?;
    }
    Ok(matrix)
}

fn read_responses_csv(path: &Path) -> Result<Vec<Response>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let malformed = |line: usize, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(malformed(
            1,
            format!("expected header {}, got {:?}", CSV_HEADER.join(","), header),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 3 {
            return Err(malformed(
                line,
                format!("expected 3 fields, got {}", record.len()),
            ));
        }
        let value: f64 = record[2]
            .parse()
            .map_err(|_| malformed(line, format!("bad value {:?}", &record[2])))?;
        if record[0].is_empty() || record[1].is_empty() {
            return Err(malformed(line, "empty id".into()));
        }
        out.push(Response::new(&record[0], &record[1], value));
    }
    Ok(out)
}

pub fn save_responses(path: impl AsRef<Path>, matrix: &ResponseMatrix) -> Result<()> {
    let path = path.as_ref();
    match ResponseFormat::from_path(path) {
        ResponseFormat::JsonLines => write_json_lines(path, matrix.responses()),
        ResponseFormat::Csv => {
            let file = create(path)?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            let to_err = |e: csv::Error| Error::Parse {
                what: path.display().to_string(),
                message: e.to_string(),
            };
            w.write_record(CSV_HEADER).map_err(to_err)?;
            for r in matrix.responses() {
                w.write_record([
                    r.participant_id.as_str(),
                    r.problem_id.as_str(),
                    &r.value.to_string(),
                ])
                .map_err(to_err)?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}
