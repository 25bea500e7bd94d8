//! Delimited-text input: life data, risk sets, designs and responses.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::likelihood::{ObsKind, Observation};
use crate::prediction::RiskSetUnit;
use crate::selection::Factor;

/// Rocket-motor field data: 1,937 right-censored units in 16 groups and
/// three left-censored launch failures.
pub const ROCKET_MOTOR_CSV: &str = include_str!("../data/rocket_motor.csv");

/// Name under which the bundled dataset can be used in place of a path.
pub const ROCKET_MOTOR: &str = "rocket_motor";

pub fn rocket_motor() -> Vec<Observation> {
    parse_lifedata_str(ROCKET_MOTOR_CSV, Path::new(ROCKET_MOTOR)).expect("bundled data parse")
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

fn header_index(headers: &csv::StringRecord) -> HashMap<String, usize> {
    headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_ascii_lowercase(), i))
        .collect()
}

fn opt_f64(path: &Path, line: usize, field: &str, raw: Option<&str>) -> Result<Option<f64>> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse::<f64>()
            .map(Some)
            .map_err(|_| parse_err(path, line, format!("{field}: '{s}' is not a number"))),
    }
}

/// Reads a life-data file with columns `time, time2, kind, trunc_lower, count`
/// (header required; `time2`, `trunc_lower` and `count` may be absent or
/// empty). The name `rocket_motor` resolves to the bundled dataset when no
/// such file exists.
pub fn parse_lifedata(path: &Path) -> Result<Vec<Observation>> {
    if path.as_os_str() == ROCKET_MOTOR && !path.exists() {
        return Ok(rocket_motor());
    }
    parse_lifedata_str(&read_text(path)?, path)
}

pub fn parse_lifedata_str(text: &str, path: &Path) -> Result<Vec<Observation>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    let idx = header_index(&headers);
    let col = |name: &str| idx.get(name).copied();
    let (Some(c_time), Some(c_kind)) = (col("time"), col("kind")) else {
        return Err(parse_err(path, 1, "header must name at least 'time' and 'kind'"));
    };
    let (c_time2, c_trunc, c_count) = (col("time2"), col("trunc_lower"), col("count"));
    let mut out = vec![];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c));
        let time = opt_f64(path, line, "time", get(Some(c_time)))?
            .ok_or_else(|| parse_err(path, line, "time is required"))?;
        let kind: ObsKind = get(Some(c_kind))
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| parse_err(path, line, e.to_string()))?;
        let time2 = opt_f64(path, line, "time2", get(c_time2))?;
        let truncation_lower = opt_f64(path, line, "trunc_lower", get(c_trunc))?;
        let count = match get(c_count).map(str::trim) {
            None | Some("") => 1,
            Some(s) => s
                .parse::<u32>()
                .map_err(|_| parse_err(path, line, format!("count: '{s}' is not a non-negative integer")))?,
        };
        let obs = Observation {
            time,
            time2,
            kind,
            truncation_lower,
            count,
        };
        obs.validate().map_err(|e| parse_err(path, line, e.to_string()))?;
        out.push(obs);
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    Ok(out)
}

/// Writes observations in the format `parse_lifedata` reads.
pub fn lifedata_to_csv(data: &[Observation]) -> String {
    let mut s = String::from("time,time2,kind,trunc_lower,count\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for o in data {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            o.time,
            fmt(o.time2),
            o.kind,
            fmt(o.truncation_lower),
            o.count
        ));
    }
    s
}

/// Reads a single numeric column (optionally headed) from a file.
pub fn parse_column(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    let mut out = vec![];
    for (i, raw) in text.lines().enumerate() {
        let s = raw.split(',').next().unwrap_or("").trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        match s.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(_) => return Err(parse_err(path, i + 1, format!("'{s}' is not a number"))),
        }
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "no values"));
    }
    Ok(out)
}

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_table(path: &Path) -> Result<Table> {
    let text = read_text(path)?;
    let mut rdr = reader(&text);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = vec![];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = rec
            .iter()
            .zip(&names)
            .map(|(v, n)| v.parse::<f64>().map_err(|_| parse_err(path, line, format!("{n}: '{v}' is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    Ok(Table { names, rows })
}

/// Reads a risk set with columns `unit_id, current_age`.
pub fn parse_risk_set(path: &Path) -> Result<Vec<RiskSetUnit>> {
    let text = read_text(path)?;
    let mut rdr = reader(&text);
    let idx = header_index(&rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone());
    let (Some(&id_col), Some(&age_col)) = (idx.get("unit_id"), idx.get("current_age")) else {
        return Err(parse_err(path, 1, "header must contain unit_id and current_age"));
    };
    let mut out = vec![];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec.get(id_col).unwrap_or("").to_string();
        let age = opt_f64(path, line, "current_age", rec.get(age_col))?
            .ok_or_else(|| parse_err(path, line, "current_age is empty"))?;
        out.push(RiskSetUnit::new(id, age).map_err(|e| parse_err(path, line, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "no units"));
    }
    Ok(out)
}

/// Reads factor ranges with columns `name, low, high`.
pub fn parse_factor_ranges(path: &Path) -> Result<Vec<Factor>> {
    let text = read_text(path)?;
    let mut rdr = reader(&text);
    let mut out = vec![];
    for rec in rdr.deserialize::<Factor>() {
        out.push(rec.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?);
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "no factors"));
    }
    Ok(out)
}

/// Writes files into `dir` only after every one of them has been produced:
/// contents go to a sibling temporary directory that is renamed into place.
pub fn write_output_dir(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    if dir.exists() {
        let empty = fs::read_dir(dir)?.next().is_none();
        if !empty {
            return Err(Error::input(format!("output directory {} already exists and is not empty", dir.display())));
        }
        fs::remove_dir(dir)?;
    }
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir(&tmp)?;
    let result = (|| -> Result<()> {
        for (file, bytes) in files {
            let mut f = fs::File::create(tmp.join(file))?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, dir)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result
}
