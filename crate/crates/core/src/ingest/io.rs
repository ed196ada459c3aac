//! `subjeval/responses-v1` files: newline-delimited JSON with a schema header
//! line, or CSV with a fixed header.
//!
//! ```text
//! {"schema":"subjeval/responses-v1"}
//! {"participant_id":"P0001","page_index":1,"slot":0,"stimulus_id":"SG_s01_m","raw":{"slider":63},"timestamp_ms":0}
//! ```
//!
//! CSV columns: `participant_id,page_index,slot,stimulus_id,response_type,value,timestamp_ms,is_attention_check,attention_passed,training`
//! where `response_type` is `slider` (integer value) or `preference` (option
//! name) and `attention_passed` may be empty.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PreferenceOption, RawResponse, ResponseRecord};
use crate::{Error, Result};

pub const RESPONSES_SCHEMA: &str = "subjeval/responses-v1";

const CSV_HEADER: [&str; 10] = [
    "participant_id",
    "page_index",
    "slot",
    "stimulus_id",
    "response_type",
    "value",
    "timestamp_ms",
    "is_attention_check",
    "attention_passed",
    "training",
];

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
}

pub fn write_responses_ndjson<W: Write>(records: &[ResponseRecord], mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, &Header { schema: RESPONSES_SCHEMA.into() })?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_responses_ndjson<R: Read>(input: R, source: &str) -> Result<Vec<ResponseRecord>> {
    let mut records = Vec::new();
    let mut header_seen = false;
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let header: Header = serde_json::from_str(&line).map_err(|_| {
                Error::schema(
                    format!("{source}:{lineno}"),
                    format!("expected schema header {{\"schema\":\"{RESPONSES_SCHEMA}\"}}"),
                )
            })?;
            if header.schema != RESPONSES_SCHEMA {
                return Err(Error::schema(
                    format!("{source}:{lineno}"),
                    format!("expected schema {RESPONSES_SCHEMA:?}, found {:?}", header.schema),
                ));
            }
            header_seen = true;
            continue;
        }
        let rec: ResponseRecord = serde_json::from_str(&line)
            .map_err(|e| Error::schema(format!("{source}:{lineno}"), e.to_string()))?;
        records.push(rec);
    }
    if !header_seen {
        return Err(Error::schema(source, "empty responses file"));
    }
    Ok(records)
}

pub fn write_responses_csv<W: Write>(records: &[ResponseRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let (kind, value) = match r.raw {
            RawResponse::Slider(v) => ("slider", v.to_string()),
            RawResponse::Preference(o) => ("preference", o.as_str().to_string()),
        };
        w.write_record([
            r.participant_id.as_str(),
            &r.page_index.to_string(),
            &r.slot.to_string(),
            &r.stimulus_id,
            kind,
            &value,
            &r.timestamp_ms.to_string(),
            &r.is_attention_check.to_string(),
            &r.attention_passed.map(|b| b.to_string()).unwrap_or_default(),
            &r.training.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_responses_csv<R: Read>(input: R, source: &str) -> Result<Vec<ResponseRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::schema(
            format!("{source}:1"),
            format!("{RESPONSES_SCHEMA} CSV header must be `{}`", CSV_HEADER.join(",")),
        ));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let lineno = row.position().map_or(0, |p| p.line());
        let ctx = || format!("{source}:{lineno}");
        let bad = |field: &str, v: &str| Error::schema(ctx(), format!("cannot parse {field} from {v:?}"));
        let parse_bool = |field: &str, v: &str| -> Result<bool> { v.parse().map_err(|_| bad(field, v)) };

        let raw = match &row[4] {
            "slider" => RawResponse::Slider(row[5].parse().map_err(|_| bad("slider value", &row[5]))?),
            "preference" => RawResponse::Preference(
                row[5].parse::<PreferenceOption>().map_err(|_| bad("preference option", &row[5]))?,
            ),
            other => return Err(bad("response_type", other)),
        };
        records.push(ResponseRecord {
            participant_id: row[0].to_string(),
            page_index: row[1].parse().map_err(|_| bad("page_index", &row[1]))?,
            slot: row[2].parse().map_err(|_| bad("slot", &row[2]))?,
            stimulus_id: row[3].to_string(),
            raw,
            timestamp_ms: row[6].parse().map_err(|_| bad("timestamp_ms", &row[6]))?,
            is_attention_check: parse_bool("is_attention_check", &row[7])?,
            attention_passed: match &row[8] {
                "" => None,
                v => Some(parse_bool("attention_passed", v)?),
            },
            training: parse_bool("training", &row[9])?,
        });
    }
    Ok(records)
}

/// Reads a responses file, choosing CSV for a `.csv` extension and
/// newline-delimited JSON otherwise.
pub fn read_responses(path: &Path) -> Result<Vec<ResponseRecord>> {
    let file = std::fs::File::open(path)?;
    let source = path.display().to_string();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_responses_csv(file, &source)
    } else {
        read_responses_ndjson(file, &source)
    }
}
