//! The results CSV: one row per finalized session.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};

use crate::config::Cents;
use crate::error::{Result, StudyError};
use crate::scoring::SessionRecord;

pub const ITEM_COLUMNS: usize = 8;
/// Features with an understanding column, in column order.
pub const UNDERSTANDING_FEATURES: [&str; 3] = ["word_count", "parchment_color", "year"];

pub fn header() -> Vec<String> {
    let mut h: Vec<String> = ["session_id", "assigned_condition", "effective_condition", "quiz_passed"]
        .map(String::from)
        .to_vec();
    h.extend((1..=ITEM_COLUMNS).map(|i| format!("item_{i}_correct")));
    h.extend(["accuracy", "bonus"].map(String::from));
    h.extend(UNDERSTANDING_FEATURES.iter().map(|f| format!("und_{f}")));
    h.extend(
        ["understanding_score", "satisfaction_mean", "explain_clicks", "started_at", "finished_at"].map(String::from),
    );
    h
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn row(r: &SessionRecord) -> Result<Vec<String>> {
    if r.item_correct.len() != ITEM_COLUMNS {
        return Err(StudyError::Config(format!(
            "export expects {ITEM_COLUMNS} prediction items, record has {}",
            r.item_correct.len()
        )));
    }
    let mut out = vec![
        r.session_id.clone(),
        r.assigned_condition.to_string(),
        r.effective_condition.to_string(),
        flag(r.quiz_passed),
    ];
    out.extend(r.item_correct.iter().map(|c| opt(c.map(flag))));
    out.push(opt(r.accuracy));
    out.push(opt(r.bonus));
    out.extend(UNDERSTANDING_FEATURES.iter().map(|f| opt(r.understanding.get(*f).copied().map(flag))));
    out.push(opt(r.understanding_score));
    out.push(opt(r.satisfaction_mean));
    out.push(r.explain_clicks.to_string());
    out.push(time(r.started_at));
    out.push(opt(r.finished_at.map(time)));
    Ok(out)
}

/// Sorts by start time, then id, and writes header plus one row per record.
pub fn write_csv<W: Write>(records: &[SessionRecord], out: W) -> Result<()> {
    let mut sorted: Vec<&SessionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.started_at, &a.session_id).cmp(&(b.started_at, &b.session_id)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for r in sorted {
        w.write_record(row(r)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(records: &[SessionRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn bad(line: u64, column: &str, value: &str) -> StudyError {
    StudyError::Config(format!("line {line}: bad {column} `{value}`"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SessionRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let got: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if got != header() {
        return Err(StudyError::Config(format!("unexpected export header: {}", got.join(","))));
    }
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let cols = header();
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let parse_flag = |c: usize| -> Result<Option<bool>> {
            match cell(c) {
                "" => Ok(None),
                "1" => Ok(Some(true)),
                "0" => Ok(Some(false)),
                v => Err(bad(line, &cols[c], v)),
            }
        };
        fn parsed<T: std::str::FromStr>(line: u64, column: &str, v: &str) -> Result<Option<T>> {
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad(line, column, v))
            }
        }
        let condition = |c: usize| parsed(line, &cols[c], cell(c))?.ok_or_else(|| bad(line, &cols[c], ""));
        let mut understanding = BTreeMap::new();
        for (k, f) in UNDERSTANDING_FEATURES.iter().enumerate() {
            if let Some(v) = parse_flag(14 + k)? {
                understanding.insert(f.to_string(), v);
            }
        }
        let time = |c: usize| -> Result<Option<DateTime<Utc>>> {
            match cell(c) {
                "" => Ok(None),
                v => DateTime::parse_from_rfc3339(v)
                    .map(|t| Some(t.with_timezone(&Utc)))
                    .map_err(|_| bad(line, &cols[c], v)),
            }
        };
        let accuracy = parsed::<u32>(line, &cols[12], cell(12))?;
        let bonus = parsed::<Cents>(line, &cols[13], cell(13))?;
        let understanding_score = parsed::<u32>(line, &cols[17], cell(17))?;
        let satisfaction_mean = parsed::<f64>(line, &cols[18], cell(18))?;
        let explain_clicks = parsed::<u32>(line, &cols[19], cell(19))?.ok_or_else(|| bad(line, &cols[19], ""))?;
        records.push(SessionRecord {
            session_id: cell(0).to_string(),
            assigned_condition: condition(1)?,
            effective_condition: condition(2)?,
            quiz_passed: parse_flag(3)?.ok_or_else(|| bad(line, &cols[3], ""))?,
            item_correct: (4..4 + ITEM_COLUMNS).map(parse_flag).collect::<Result<_>>()?,
            accuracy,
            bonus,
            understanding,
            understanding_score,
            satisfaction_mean,
            explain_clicks,
            started_at: time(20)?.ok_or_else(|| bad(line, &cols[20], ""))?,
            finished_at: time(21)?,
        });
    }
    Ok(records)
}
