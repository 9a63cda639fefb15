//! Event files: one per camera, either CSV (`t_us,u,v,polarity`) or the
//! fixed-record binary format.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! header  (16 bytes)  b"EVT1" | version u8 | camera u8 | 0u16 | count u64
//! record  (16 bytes)  t_us u64 | u u16 | v u16 | polarity u8 | 3 pad bytes
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use evskin_core::events::{CameraId, Event, EventStream, Polarity};

pub const CSV_HEADER: &str = "t_us,u,v,polarity";
pub const BIN_MAGIC: [u8; 4] = *b"EVT1";
pub const BIN_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 16;
/// Largest tolerated fraction of malformed records.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {malformed} of {records} records are malformed")]
    TooManyMalformed { path: PathBuf, malformed: usize, records: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    #[default]
    Csv,
    Bin,
}

impl EventFormat {
    /// `.bin`/`.evt` are binary; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin" | "evt") => EventFormat::Bin,
            _ => EventFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            EventFormat::Csv => "csv",
            EventFormat::Bin => "bin",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedEvents {
    pub stream: EventStream,
    pub records: usize,
    pub malformed: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

fn check_malformed(path: &Path, malformed: usize, records: usize) -> Result<(), IngestError> {
    if records > 0 && malformed as f64 > MAX_MALFORMED_FRACTION * records as f64 {
        return Err(IngestError::TooManyMalformed { path: path.to_path_buf(), malformed, records });
    }
    if malformed > 0 {
        log::warn!("{}: skipped {malformed} malformed of {records} records", path.display());
    }
    Ok(())
}

/// Reads a camera file, picking the format from the extension.
pub fn read_events(path: &Path, camera: CameraId) -> Result<LoadedEvents, IngestError> {
    let loaded = match EventFormat::from_path(path) {
        EventFormat::Csv => read_csv(path, camera)?,
        EventFormat::Bin => read_bin(path, camera)?,
    };
    if loaded.stream.is_empty() {
        log::warn!("{}: no events", path.display());
    }
    Ok(loaded)
}

fn parse_csv_record(r: &csv::ByteRecord) -> Option<Event> {
    if r.len() != 4 {
        return None;
    }
    let field = |i: usize| std::str::from_utf8(r.get(i)?).ok().map(str::trim);
    let t_us = field(0)?.parse().ok()?;
    let u = field(1)?.parse().ok()?;
    let v = field(2)?.parse().ok()?;
    let polarity = Polarity::from_bit(field(3)?.parse().ok()?)?;
    Event::new(t_us, u, v, polarity).ok()
}

pub fn read_csv(path: &Path, camera: CameraId) -> Result<LoadedEvents, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    // rows are rarely shorter than 16 bytes; reserving up front avoids doubling
    let size = file.metadata().map(|m| m.len()).unwrap_or(0);
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(BufReader::new(file));
    let mut events = Vec::with_capacity((size / 16) as usize);
    let (mut records, mut malformed) = (0usize, 0usize);
    let mut record = csv::ByteRecord::new();
    let mut first = true;
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => {
                    let csv::ErrorKind::Io(source) = e.into_kind() else { unreachable!() };
                    return Err(IngestError::Io { path: path.to_path_buf(), source });
                }
                _ => {
                    records += 1;
                    malformed += 1;
                    continue;
                }
            },
        }
        if std::mem::take(&mut first) && record.get(0).is_some_and(|f| f.trim_ascii() == b"t_us") {
            continue;
        }
        if record.len() == 1 && record.get(0).is_some_and(|f| f.trim_ascii().is_empty()) {
            continue;
        }
        records += 1;
        match parse_csv_record(&record) {
            Some(e) => events.push(e),
            None => malformed += 1,
        }
    }
    check_malformed(path, malformed, records)?;
    events.shrink_to_fit();
    Ok(LoadedEvents { stream: EventStream::new(camera, events), records, malformed })
}

pub fn read_bin(path: &Path, camera: CameraId) -> Result<LoadedEvents, IngestError> {
    let format_err = |reason: String| IngestError::Format { path: path.to_path_buf(), reason };
    let file = File::open(path).map_err(io_err(path))?;
    let size = file.metadata().map_err(io_err(path))?.len();
    if size < HEADER_LEN as u64 {
        return Err(format_err(format!("file too short for the {HEADER_LEN}-byte header")));
    }
    let mut r = BufReader::with_capacity(1 << 20, file);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(io_err(path))?;
    if header[..4] != BIN_MAGIC {
        return Err(format_err("missing EVT1 magic".into()));
    }
    if header[4] != BIN_VERSION {
        return Err(format_err(format!("unsupported version {}", header[4])));
    }
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8-byte slice"));
    let body = size - HEADER_LEN as u64;
    if body != count.saturating_mul(RECORD_LEN as u64) {
        return Err(format_err(format!("header announces {count} records but body holds {body} bytes")));
    }
    let mut events = Vec::with_capacity(count as usize);
    let mut malformed = 0;
    let mut rec = [0u8; RECORD_LEN];
    for _ in 0..count {
        r.read_exact(&mut rec).map_err(io_err(path))?;
        let t_us = u64::from_le_bytes(rec[0..8].try_into().expect("8-byte slice"));
        let u = u16::from_le_bytes([rec[8], rec[9]]);
        let v = u16::from_le_bytes([rec[10], rec[11]]);
        match Polarity::from_bit(rec[12]).and_then(|p| Event::new(t_us, u, v, p).ok()) {
            Some(e) => events.push(e),
            None => malformed += 1,
        }
    }
    check_malformed(path, malformed, count as usize)?;
    Ok(LoadedEvents { stream: EventStream::new(camera, events), records: count as usize, malformed })
}

/// Writes a stream in its camera clock (the alignment offset is not stored).
pub fn write_events(stream: &EventStream, path: &Path, format: EventFormat) -> Result<(), IngestError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    match format {
        EventFormat::Csv => {
            writeln!(w, "{CSV_HEADER}").map_err(io_err(path))?;
            for e in stream.events() {
                writeln!(w, "{},{},{},{}", e.t_us, e.u, e.v, e.polarity.as_bit()).map_err(io_err(path))?;
            }
        }
        EventFormat::Bin => {
            let mut header = [0u8; HEADER_LEN];
            header[..4].copy_from_slice(&BIN_MAGIC);
            header[4] = BIN_VERSION;
            header[5] = stream.camera.index() as u8;
            header[8..].copy_from_slice(&(stream.len() as u64).to_le_bytes());
            w.write_all(&header).map_err(io_err(path))?;
            for e in stream.events() {
                let mut rec = [0u8; RECORD_LEN];
                rec[0..8].copy_from_slice(&e.t_us.to_le_bytes());
                rec[8..10].copy_from_slice(&e.u.to_le_bytes());
                rec[10..12].copy_from_slice(&e.v.to_le_bytes());
                rec[12] = e.polarity.as_bit();
                w.write_all(&rec).map_err(io_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}
