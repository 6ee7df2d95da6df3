//! Delimited-file readers and writers for events and posts.
//!
//! Events file: header `user_id,post_id,interaction_type,value,timestamp`,
//! comma- or tab-separated (sniffed from the header line); the timestamp
//! field may be empty. Posts file: header `post_id,text`; embedded
//! delimiters in the text are quoted.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::data::{Dataset, InteractionEvent, InteractionType, Post};
use crate::error::DataError;

const EVENTS_HEADER: [&str; 5] = ["user_id", "post_id", "interaction_type", "value", "timestamp"];
const POSTS_HEADER: [&str; 2] = ["post_id", "text"];

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> DataError {
    DataError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Picks the delimiter from the header line: tab when present, comma otherwise.
fn sniff_delimiter(raw: &str) -> u8 {
    let header = raw.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn reader_for(raw: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(raw))
        .has_headers(true)
        .flexible(false)
        .from_reader(raw.as_bytes())
}

fn check_header(path: &Path, reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), DataError> {
    let header = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads an events file into a list of validated events.
pub fn read_events_file(path: impl AsRef<Path>) -> Result<Vec<InteractionEvent>, DataError> {
    let path = path.as_ref();
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| io_err(path, e))?;

    let mut reader = reader_for(&raw);
    check_header(path, &mut reader, &EVENTS_HEADER)?;

    let mut events = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record_line(&record);
        let ty_token = record[2].trim();
        let interaction_type: InteractionType =
            ty_token.parse().map_err(|_| DataError::UnknownInteractionType {
                path: path.display().to_string(),
                line,
                token: ty_token.to_string(),
            })?;
        let value: f64 = record[3]
            .trim()
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad value field: {e}")))?;
        let ts_field = record[4].trim();
        let timestamp = if ts_field.is_empty() {
            None
        } else {
            Some(
                ts_field
                    .parse::<i64>()
                    .map_err(|e| parse_err(path, line, format!("bad timestamp field: {e}")))?,
            )
        };
        let event = InteractionEvent {
            user_id: record[0].trim().to_string(),
            post_id: record[1].trim().to_string(),
            interaction_type,
            value,
            timestamp,
        };
        if event.user_id.is_empty() || event.post_id.is_empty() {
            return Err(parse_err(path, line, "empty user_id or post_id"));
        }
        event.validate_value().map_err(|message| DataError::InvalidValue {
            path: path.display().to_string(),
            line,
            message,
        })?;
        events.push(event);
    }
    Ok(events)
}

/// Reads a posts file into a list of posts.
pub fn read_posts_file(path: impl AsRef<Path>) -> Result<Vec<Post>, DataError> {
    let path = path.as_ref();
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| io_err(path, e))?;

    let mut reader = reader_for(&raw);
    check_header(path, &mut reader, &POSTS_HEADER)?;

    let mut posts = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record_line(&record);
        let post_id = record[0].trim().to_string();
        if post_id.is_empty() {
            return Err(parse_err(path, line, "empty post_id"));
        }
        posts.push(Post {
            post_id,
            text: record[1].to_string(),
        });
    }
    Ok(posts)
}

/// Loads and validates a dataset from an events file and a posts file.
/// The user set is derived from the events.
pub fn load_dataset(
    events_path: impl AsRef<Path>,
    posts_path: impl AsRef<Path>,
) -> Result<Dataset, DataError> {
    let posts = read_posts_file(posts_path)?;
    let events = read_events_file(events_path)?;
    Dataset::from_events(posts, events)
}

/// Serializes events in the canonical comma-separated format.
pub fn write_events(events: &[InteractionEvent], out: impl Write) -> Result<(), std::io::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(EVENTS_HEADER)?;
    for event in events {
        let ts = event.timestamp.map(|t| t.to_string()).unwrap_or_default();
        writer.write_record([
            event.user_id.as_str(),
            event.post_id.as_str(),
            event.interaction_type.as_str(),
            &event.value.to_string(),
            &ts,
        ])?;
    }
    writer.flush()
}

/// Serializes posts in the canonical comma-separated format.
pub fn write_posts(posts: &[Post], out: impl Write) -> Result<(), std::io::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(POSTS_HEADER)?;
    for post in posts {
        writer.write_record([post.post_id.as_str(), post.text.as_str()])?;
    }
    writer.flush()
}

/// Writes both dataset files. Users without events are not represented
/// in the files; loading back yields only the users that interacted.
pub fn write_dataset(
    dataset: &Dataset,
    events_path: impl AsRef<Path>,
    posts_path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let events_path = events_path.as_ref();
    let posts_path = posts_path.as_ref();
    let events_file = File::create(events_path).map_err(|e| io_err(events_path, e))?;
    write_events(dataset.events(), BufWriter::new(events_file))
        .map_err(|e| io_err(events_path, e))?;
    let posts_file = File::create(posts_path).map_err(|e| io_err(posts_path, e))?;
    write_posts(dataset.posts(), BufWriter::new(posts_file)).map_err(|e| io_err(posts_path, e))?;
    Ok(())
}
