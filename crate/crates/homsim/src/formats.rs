//! On-disk formats. Every write goes to a temporary file in the target
//! directory and is renamed into place.
//!
//! Binary time-tag layout (little endian):
//!
//! ```text
//! offset 0   8 bytes  magic "HOMTTAG\0"
//! offset 8   u16      format version (1)
//! offset 10  u16      channel number (3 or 4)
//! offset 12  u32      reserved, zero
//! offset 16  u64 * n  timestamps in ps, strictly increasing
//! ```

use std::io::Write;
use std::path::Path;

use homsim_core::analysis::CorrelationHistogram;
use homsim_core::fitting::SampledCurve;
use homsim_core::montecarlo::{Channel, TimeTagStream};
use homsim_core::CorrelationCurve;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const TAG_MAGIC: [u8; 8] = *b"HOMTTAG\0";
pub const TAG_VERSION: u16 = 1;
pub const TAG_HEADER_LEN: usize = 16;
pub const TAG_CSV_HEADER: &str = "channel,timestamp_ps";
pub const HISTOGRAM_CSV_HEADER: &str = "tau_ps,counts";
pub const CURVE_CSV_HEADER: &str = "tau_ps,perp,par,perp_conv,par_conv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum TagFormat {
    #[default]
    Csv,
    Bin,
}

impl TagFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TagFormat::Csv => "csv",
            TagFormat::Bin => "bin",
        }
    }

    /// Binary if the file starts with the magic, CSV otherwise.
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(&TAG_MAGIC) {
            TagFormat::Bin
        } else {
            TagFormat::Csv
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value).expect("output types serialize");
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn encode_tags(stream: &TimeTagStream, format: TagFormat) -> Vec<u8> {
    match format {
        TagFormat::Csv => {
            let ch = stream.channel.number();
            let mut out = String::with_capacity(16 * stream.len() + 32);
            out.push_str(TAG_CSV_HEADER);
            out.push('\n');
            for t in &stream.tags {
                out.push_str(&format!("{ch},{t}\n"));
            }
            out.into_bytes()
        }
        TagFormat::Bin => {
            let mut out = Vec::with_capacity(TAG_HEADER_LEN + 8 * stream.len());
            out.extend_from_slice(&TAG_MAGIC);
            out.extend_from_slice(&TAG_VERSION.to_le_bytes());
            out.extend_from_slice(&stream.channel.number().to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes());
            for t in &stream.tags {
                out.extend_from_slice(&t.to_le_bytes());
            }
            out
        }
    }
}

pub fn write_tags(path: &Path, stream: &TimeTagStream, format: TagFormat) -> Result<()> {
    write_atomic(path, &encode_tags(stream, format))
}

/// Parses a tag file of either format. `path` is only used in messages.
/// The stream duration is taken as the last timestamp.
pub fn decode_tags(path: &Path, bytes: &[u8]) -> Result<TimeTagStream> {
    let (channel, tags) = match TagFormat::sniff(bytes) {
        TagFormat::Bin => decode_bin(path, bytes)?,
        TagFormat::Csv => decode_csv(path, bytes)?,
    };
    let duration = tags.last().copied().unwrap_or(0);
    Ok(TimeTagStream { channel, tags, duration, seed: None })
}

pub fn read_tags(path: &Path) -> Result<TimeTagStream> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_tags(path, &bytes)
}

fn decode_bin(path: &Path, bytes: &[u8]) -> Result<(Channel, Vec<u64>)> {
    if bytes.len() < TAG_HEADER_LEN {
        return Err(CliError::format(path, 0, "truncated header"));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let version = u16_at(8);
    if version != TAG_VERSION {
        return Err(CliError::format(path, 0, format!("unsupported version {version}")));
    }
    let channel = Channel::from_number(u16_at(10))
        .ok_or_else(|| CliError::format(path, 0, format!("unknown channel {}", u16_at(10))))?;
    if bytes[12..16] != [0; 4] {
        return Err(CliError::format(path, 0, "reserved header bytes are not zero"));
    }
    let body = &bytes[TAG_HEADER_LEN..];
    if !body.len().is_multiple_of(8) {
        return Err(CliError::format(path, 0, "body length is not a multiple of 8 bytes"));
    }
    let tags: Vec<u64> = body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    if let Some(i) = tags.windows(2).position(|w| w[1] <= w[0]) {
        return Err(CliError::format(path, 0, format!("timestamp {} is not after its predecessor", i + 1)));
    }
    Ok((channel, tags))
}

fn decode_csv(path: &Path, bytes: &[u8]) -> Result<(Channel, Vec<u64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let headers = rdr.headers().map_err(|e| CliError::format(path, 1, e.to_string()))?.clone();
    if !headers.is_empty() && headers.iter().collect::<Vec<_>>().join(",") != TAG_CSV_HEADER {
        return Err(CliError::format(path, 1, format!("expected header `{TAG_CSV_HEADER}`")));
    }
    let mut channel = None;
    let mut tags = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::format(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let ch = Channel::parse(&rec[0]).ok_or_else(|| CliError::format(path, line, format!("unknown channel `{}`", &rec[0])))?;
        match channel {
            None => channel = Some(ch),
            Some(c) if c != ch => return Err(CliError::format(path, line, "file mixes channels")),
            _ => {}
        }
        let t: u64 = rec
            .get(1)
            .ok_or_else(|| CliError::format(path, line, "missing timestamp"))?
            .parse()
            .map_err(|_| CliError::format(path, line, format!("timestamp `{}` is not an unsigned integer", &rec[1])))?;
        if tags.last().is_some_and(|&p| t <= p) {
            return Err(CliError::format(path, line, "timestamps must be strictly increasing"));
        }
        tags.push(t);
    }
    // An empty file carries no channel; infer it from the name.
    let channel = channel.or_else(|| channel_from_name(path)).unwrap_or(Channel::D3);
    Ok((channel, tags))
}

fn channel_from_name(path: &Path) -> Option<Channel> {
    let stem = path.file_stem()?.to_str()?.to_ascii_lowercase();
    if stem.contains("d4") {
        Some(Channel::D4)
    } else if stem.contains("d3") {
        Some(Channel::D3)
    } else {
        None
    }
}

pub fn histogram_csv(h: &CorrelationHistogram) -> String {
    let mut out = String::from(HISTOGRAM_CSV_HEADER);
    out.push('\n');
    for (i, c) in h.counts.iter().enumerate() {
        out.push_str(&format!("{},{c}\n", h.bin_center(i) as i64));
    }
    out
}

/// Rows of the four-column curve table; all curves share one grid.
pub fn curve_csv(perp: &CorrelationCurve, par: &CorrelationCurve, perp_conv: &CorrelationCurve, par_conv: &CorrelationCurve) -> Result<String> {
    for c in [par, perp_conv, par_conv] {
        if !perp.same_grid(c) {
            return Err(homsim_core::Error::GridMismatch.into());
        }
    }
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for i in 0..perp.len() {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e}\n",
            perp.tau[i], perp.density[i], par.density[i], perp_conv.density[i], par_conv.density[i]
        ));
    }
    Ok(out)
}

/// Two columns `x,y` or three `x,y,y_err`. A leading non-numeric row is
/// taken as a header.
pub fn read_sampled_curve(path: &Path) -> Result<SampledCurve> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_sampled_curve(path, &bytes)
}

pub fn parse_sampled_curve(path: &Path, bytes: &[u8]) -> Result<SampledCurve> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(bytes);
    let (mut x, mut y, mut err) = (Vec::new(), Vec::new(), Vec::new());
    let mut width = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::format(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let nums: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let nums = match nums {
            Ok(n) => n,
            Err(_) if k == 0 => continue,
            Err(_) => return Err(CliError::format(path, line, "non-numeric field")),
        };
        if !(2..=3).contains(&nums.len()) {
            return Err(CliError::format(path, line, format!("expected 2 or 3 columns, found {}", nums.len())));
        }
        match width {
            None => width = Some(nums.len()),
            Some(w) if w != nums.len() => return Err(CliError::format(path, line, "inconsistent column count")),
            _ => {}
        }
        x.push(nums[0]);
        y.push(nums[1]);
        if nums.len() == 3 {
            err.push(nums[2]);
        }
    }
    let y_err = (width == Some(3)).then_some(err);
    SampledCurve::new(x, y, y_err).map_err(|e| CliError::format(path, 0, e.to_string()))
}

pub fn sampled_curve_csv(s: &SampledCurve, header: &str) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for i in 0..s.len() {
        match &s.y_err {
            Some(e) => out.push_str(&format!("{},{},{}\n", s.x[i], s.y[i], e[i])),
            None => out.push_str(&format!("{},{}\n", s.x[i], s.y[i])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(ch: Channel, tags: Vec<u64>) -> TimeTagStream {
        let duration = tags.last().copied().unwrap_or(0);
        TimeTagStream::new(ch, tags, duration).unwrap()
    }

    #[test]
    fn binary_layout_is_exact() {
        let s = stream(Channel::D4, vec![1, 0x0102_0304_0506_0708]);
        let b = encode_tags(&s, TagFormat::Bin);
        let mut expected = b"HOMTTAG\0".to_vec();
        expected.extend_from_slice(&[1, 0, 4, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(b, expected);
    }

    #[test]
    fn csv_layout() {
        let s = stream(Channel::D3, vec![5, 17]);
        assert_eq!(String::from_utf8(encode_tags(&s, TagFormat::Csv)).unwrap(), "channel,timestamp_ps\n3,5\n3,17\n");
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let p = Path::new("x.csv");
        let e = decode_tags(p, b"channel,timestamp_ps\n3,5\n3,abc\n").unwrap_err();
        assert!(e.to_string().starts_with("x.csv:3:"), "{e}");
        let e = decode_tags(p, b"channel,timestamp_ps\n3,5\n4,6\n").unwrap_err();
        assert!(e.to_string().contains(":3:"), "{e}");
        let e = decode_tags(p, b"channel,timestamp_ps\n3,5\n3,5\n").unwrap_err();
        assert!(e.to_string().contains("strictly increasing"), "{e}");
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn binary_rejects_corruption() {
        let s = stream(Channel::D3, vec![1, 2, 3]);
        let good = encode_tags(&s, TagFormat::Bin);
        let p = Path::new("t.bin");
        let mut bad = good.clone();
        bad[8] = 2;
        assert!(decode_tags(p, &bad).is_err());
        let mut bad = good.clone();
        bad[10] = 7;
        assert!(decode_tags(p, &bad).is_err());
        assert!(decode_tags(p, &good[..good.len() - 3]).is_err());
        assert!(decode_tags(p, &good[..10]).is_err());
    }

    #[test]
    fn empty_csv_takes_channel_from_name() {
        let s = decode_tags(Path::new("run_d4.csv"), b"channel,timestamp_ps\n").unwrap();
        assert_eq!(s.channel, Channel::D4);
        assert!(s.is_empty());
    }

    #[test]
    fn sampled_curve_columns() {
        let p = Path::new("s.csv");
        let s = parse_sampled_curve(p, b"x,y\n1,2\n2,3\n").unwrap();
        assert_eq!(s.y, vec![2.0, 3.0]);
        assert!(s.y_err.is_none());
        let s = parse_sampled_curve(p, b"1,2,0.5\n2,3,0.5\n").unwrap();
        assert_eq!(s.y_err, Some(vec![0.5, 0.5]));
        let e = parse_sampled_curve(p, b"1,2\n2,3,4\n").unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
        assert!(parse_sampled_curve(p, b"1\n").is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
