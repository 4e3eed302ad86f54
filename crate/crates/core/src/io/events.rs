//! Binary event container.
//!
//! Header (little-endian): magic `EVT6`, version u16, width u16, height u16,
//! record count u64 — 18 bytes. Each record is 16 bytes: t_us i64, x u16,
//! y u16, p i8 (-1 or +1), and 3 zero padding bytes reserved for future
//! fields. Readers reject every invariant violation the writer cannot
//! produce, naming the byte offset.

use super::IoError;
use crate::event::{Event, EventStream};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const EVENT_MAGIC: &[u8; 4] = b"EVT6";
pub const EVENT_FILE_VERSION: u16 = 1;
pub const EVENT_HEADER_BYTES: u64 = 18;
pub const EVENT_RECORD_BYTES: u64 = 16;

pub fn write_events(path: &Path, stream: &EventStream) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(EVENT_MAGIC)?;
    w.write_all(&EVENT_FILE_VERSION.to_le_bytes())?;
    w.write_all(&stream.width().to_le_bytes())?;
    w.write_all(&stream.height().to_le_bytes())?;
    w.write_all(&(stream.len() as u64).to_le_bytes())?;
    for e in stream.events() {
        w.write_all(&e.t_us.to_le_bytes())?;
        w.write_all(&e.x.to_le_bytes())?;
        w.write_all(&e.y.to_le_bytes())?;
        w.write_all(&e.p.to_le_bytes())?;
        w.write_all(&[0u8; 3])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events(path: &Path) -> Result<EventStream, IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; EVENT_HEADER_BYTES as usize];
    r.read_exact(&mut header)
        .map_err(|_| IoError::Truncated(0))?;
    if &header[0..4] != EVENT_MAGIC {
        return Err(IoError::BadMagic { expected: "EVT6" });
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != EVENT_FILE_VERSION {
        return Err(IoError::BadVersion(version));
    }
    let width = u16::from_le_bytes([header[6], header[7]]);
    let height = u16::from_le_bytes([header[8], header[9]]);
    let count = u64::from_le_bytes(header[10..18].try_into().unwrap());

    let mut events = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut record = [0u8; EVENT_RECORD_BYTES as usize];
    let mut prev_t = i64::MIN;
    for i in 0..count {
        let offset = EVENT_HEADER_BYTES + i * EVENT_RECORD_BYTES;
        r.read_exact(&mut record)
            .map_err(|_| IoError::Truncated(offset))?;
        let t_us = i64::from_le_bytes(record[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([record[8], record[9]]);
        let y = u16::from_le_bytes([record[10], record[11]]);
        let p = record[12] as i8;
        let bad = |reason: String| IoError::BadRecord { offset, reason };
        if record[13] != 0 || record[14] != 0 || record[15] != 0 {
            return Err(bad("nonzero padding".into()));
        }
        if p != -1 && p != 1 {
            return Err(bad(format!("polarity {p} not in {{-1, +1}}")));
        }
        if t_us < 0 {
            return Err(bad(format!("negative timestamp {t_us}")));
        }
        if t_us < prev_t {
            return Err(bad(format!("timestamp {t_us} decreases (prev {prev_t})")));
        }
        if x >= width || y >= height {
            return Err(bad(format!("({x}, {y}) outside {width}x{height}")));
        }
        prev_t = t_us;
        events.push(Event::new(x, y, t_us, p));
    }
    // Trailing bytes mean the count in the header is wrong.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(IoError::CountMismatch {
            header: count,
            actual: count + 1,
        });
    }
    EventStream::from_sorted(events, width, height)
        .map_err(|e| IoError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn temp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        // Leak the dir so the file outlives this helper.
        std::mem::forget(dir);
        path
    }

    fn random_stream(n: usize, seed: u64) -> EventStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut events: Vec<Event> = (0..n)
            .map(|_| {
                Event::new(
                    rng.gen_range(0..640),
                    rng.gen_range(0..480),
                    rng.gen_range(0..10_000_000),
                    if rng.gen_bool(0.5) { 1 } else { -1 },
                )
            })
            .collect();
        events.sort_by_key(|e| e.t_us);
        EventStream::from_sorted(events, 640, 480).unwrap()
    }

    #[test]
    fn empty_stream_is_header_only() {
        let path = temp("empty.evt");
        write_events(&path, &EventStream::empty(640, 480)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len() as u64, EVENT_HEADER_BYTES);
        let back = read_events(&path).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.width(), 640);
    }

    #[test]
    fn roundtrip_large_stream_is_byte_identical() {
        let stream = random_stream(1_000_000, 1);
        let a = temp("a.evt");
        let b = temp("b.evt");
        write_events(&a, &stream).unwrap();
        let back = read_events(&a).unwrap();
        assert_eq!(back, stream);
        write_events(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn truncation_names_the_offset() {
        let stream = random_stream(100, 2);
        let path = temp("trunc.evt");
        write_events(&path, &stream).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 7); // mid-record
        std::fs::write(&path, &bytes).unwrap();
        match read_events(&path) {
            Err(IoError::Truncated(offset)) => {
                assert_eq!(offset, EVENT_HEADER_BYTES + 99 * EVENT_RECORD_BYTES);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn reader_rejects_corruptions() {
        let stream = random_stream(50, 3);
        let path = temp("corrupt.evt");
        write_events(&path, &stream).unwrap();
        let good = std::fs::read(&path).unwrap();

        // Magic.
        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_events(&path), Err(IoError::BadMagic { .. })));

        // Version.
        let mut bad = good.clone();
        bad[4] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_events(&path), Err(IoError::BadVersion(9))));

        // Count too small leaves trailing bytes.
        let mut bad = good.clone();
        bad[10] = 49;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            read_events(&path),
            Err(IoError::CountMismatch { .. })
        ));

        // Nonzero padding.
        let mut bad = good.clone();
        bad[EVENT_HEADER_BYTES as usize + 13] = 1;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_events(&path), Err(IoError::BadRecord { .. })));

        // Bad polarity.
        let mut bad = good.clone();
        bad[EVENT_HEADER_BYTES as usize + 12] = 3;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_events(&path), Err(IoError::BadRecord { .. })));
    }
}
