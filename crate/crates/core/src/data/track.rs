//! Tracks and the track CSV format.
//!
//! Center format header: `video_id,track_id,frame,cx,cy,w,h`.
//! Corner format header: `video_id,track_id,frame,x1,y1,x2,y2`, converted to
//! center form at parse time. Values are pixels, one detection per row.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::BBox;

pub const CENTER_HEADER: [&str; 7] = ["video_id", "track_id", "frame", "cx", "cy", "w", "h"];
pub const CORNER_HEADER: [&str; 7] = ["video_id", "track_id", "frame", "x1", "y1", "x2", "y2"];

pub const DEFAULT_FRAME_RATE: f64 = 30.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoxFormat {
    #[default]
    Center,
    Corner,
}

impl std::str::FromStr for BoxFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(BoxFormat::Center),
            "corner" => Ok(BoxFormat::Corner),
            _ => Err(Error::Config(format!("unknown box format `{s}` (center or corner)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormatSpec {
    pub boxes: BoxFormat,
    pub frame_rate_hz: f64,
}

impl Default for FormatSpec {
    fn default() -> Self {
        Self { boxes: BoxFormat::Center, frame_rate_hz: DEFAULT_FRAME_RATE }
    }
}

/// A tracked person: boxes on strictly consecutive frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub video_id: String,
    pub track_id: String,
    pub boxes: Vec<BBox>,
    pub frame_rate_hz: f64,
}

impl Track {
    pub fn new(video_id: impl Into<String>, track_id: impl Into<String>, boxes: Vec<BBox>, frame_rate_hz: f64) -> Result<Self> {
        let t = Self { video_id: video_id.into(), track_id: track_id.into(), boxes, frame_rate_hz };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.boxes.is_empty() {
            return Err(Error::Empty("track"));
        }
        if !(self.frame_rate_hz > 0.0) {
            return Err(Error::Config(format!("frame rate must be positive, got {}", self.frame_rate_hz)));
        }
        for pair in self.boxes.windows(2) {
            if pair[1].frame != pair[0].frame + 1 {
                return Err(Error::FrameGap { previous: pair[0].frame, found: pair[1].frame });
            }
        }
        self.boxes.iter().try_for_each(BBox::validate)
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Identity used for fold assignment.
    pub fn key(&self) -> String {
        format!("{}/{}", self.video_id, self.track_id)
    }
}

/// Reads tracks from a CSV file. Rows are grouped by `(video_id, track_id)`
/// in order of first appearance and sorted by frame; a track with missing
/// frames is split at each gap, the pieces getting `~0`, `~1`, ... suffixes.
pub fn parse_tracks(path: &Path, spec: &FormatSpec) -> Result<Vec<Track>> {
    let file = std::fs::File::open(path)?;
    read_tracks(file, path, spec)
}

pub fn read_tracks<R: std::io::Read>(reader: R, path: &Path, spec: &FormatSpec) -> Result<Vec<Track>> {
    let parse_err = |line: u64, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(|e| parse_err(1, e.to_string()))?,
    };
    let expected = match spec.boxes {
        BoxFormat::Center => CENTER_HEADER,
        BoxFormat::Corner => CORNER_HEADER,
    };
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(1, format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(","))));
    }

    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Vec<(BBox, u64)>> = HashMap::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 7 {
            return Err(parse_err(line, format!("expected 7 fields, found {}", rec.len())));
        }
        let frame: i64 = rec[2].parse().map_err(|_| parse_err(line, format!("bad frame index `{}`", &rec[2])))?;
        let mut vals = [0.0f64; 4];
        for (j, v) in vals.iter_mut().enumerate() {
            let field = &rec[3 + j];
            *v = field.parse().map_err(|_| parse_err(line, format!("bad number `{field}` in column {}", expected[3 + j])))?;
        }
        let b = match spec.boxes {
            BoxFormat::Center => BBox::new(frame, vals[0], vals[1], vals[2], vals[3]),
            BoxFormat::Corner => BBox::from_corners(frame, vals[0], vals[1], vals[2], vals[3]),
        };
        b.validate().map_err(|e| parse_err(line, e.to_string()))?;
        let key = (rec[0].to_string(), rec[1].to_string());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push((b, line));
    }

    let mut tracks = Vec::new();
    for key in order {
        let mut rows = groups.remove(&key).expect("grouped key");
        rows.sort_by_key(|(b, _)| b.frame);
        if let Some(w) = rows.windows(2).find(|w| w[0].0.frame == w[1].0.frame) {
            return Err(parse_err(w[1].1, format!("duplicate frame {} for track {}/{}", w[1].0.frame, key.0, key.1)));
        }
        let mut segments: Vec<Vec<BBox>> = vec![Vec::new()];
        for (b, _) in rows {
            let cur = segments.last_mut().expect("non-empty");
            if let Some(last) = cur.last() {
                if b.frame != last.frame + 1 {
                    segments.push(Vec::new());
                }
            }
            segments.last_mut().expect("non-empty").push(b);
        }
        let split = segments.len() > 1;
        for (i, boxes) in segments.into_iter().enumerate() {
            let id = if split { format!("{}~{i}", key.1) } else { key.1.clone() };
            tracks.push(Track { video_id: key.0.clone(), track_id: id, boxes, frame_rate_hz: spec.frame_rate_hz });
        }
    }
    Ok(tracks)
}

/// Writes tracks in center format.
pub fn write_tracks<W: Write>(out: W, tracks: &[Track]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CENTER_HEADER).map_err(io)?;
    for t in tracks {
        for b in &t.boxes {
            w.write_record(&[
                t.video_id.clone(),
                t.track_id.clone(),
                b.frame.to_string(),
                b.cx.to_string(),
                b.cy.to_string(),
                b.w.to_string(),
                b.h.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_tracks_file(path: &Path, tracks: &[Track]) -> Result<()> {
    write_tracks(std::io::BufWriter::new(std::fs::File::create(path)?), tracks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_for(tracks: &[(&str, &str, std::ops::Range<i64>)]) -> String {
        let mut s = String::from("video_id,track_id,frame,cx,cy,w,h\n");
        for (v, t, frames) in tracks {
            for f in frames.clone() {
                s.push_str(&format!("{v},{t},{f},{},{},10,20\n", f as f64 * 1.5, 100.0 - f as f64));
            }
        }
        s
    }

    fn read(s: &str) -> Result<Vec<Track>> {
        read_tracks(s.as_bytes(), Path::new("mem.csv"), &FormatSpec::default())
    }

    #[test]
    fn two_tracks_of_one_hundred() {
        let t = read(&csv_for(&[("v1", "a", 0..100), ("v1", "b", 5..105)])).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|t| t.len() == 100 && t.validate().is_ok()));
        assert_eq!(t[1].boxes[0].frame, 5);
    }

    #[test]
    fn missing_frame_splits_track() {
        let mut s = csv_for(&[("v", "7", 0..57)]);
        s.push_str(&csv_for(&[("v", "7", 58..100)])["video_id,track_id,frame,cx,cy,w,h\n".len()..]);
        let t = read(&s).unwrap();
        assert_eq!(t.iter().map(Track::len).collect::<Vec<_>>(), vec![57, 42]);
        assert_eq!(t[0].track_id, "7~0");
        assert_eq!(t[1].track_id, "7~1");
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let s = "video_id,track_id,frame,cx,cy,w,h\nv,a,2,3,3,1,1\nv,a,0,1,1,1,1\nv,a,1,2,2,1,1\n";
        let t = read(s).unwrap();
        assert_eq!(t[0].boxes.iter().map(|b| b.frame).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn empty_file_gives_no_tracks() {
        assert!(read("").unwrap().is_empty());
        assert!(read("video_id,track_id,frame,cx,cy,w,h\n").unwrap().is_empty());
    }

    #[test]
    fn malformed_row_reports_line() {
        let s = "video_id,track_id,frame,cx,cy,w,h\nv,a,0,1,1,1,1\nv,a,1,oops,1,1,1\n";
        match read(s).unwrap_err() {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("oops"));
            }
            e => panic!("unexpected {e}"),
        }
        let s = "video_id,track_id,frame,cx,cy,w,h\nv,a,0,1,1,-1,1\n";
        assert!(matches!(read(s).unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(read("a,b,c\n").unwrap_err(), Error::Parse { line: 1, .. }));
    }

    #[test]
    fn corner_format_converts() {
        let s = "video_id,track_id,frame,x1,y1,x2,y2\nv,a,0,10,20,30,60\n";
        let spec = FormatSpec { boxes: BoxFormat::Corner, frame_rate_hz: 10.0 };
        let t = read_tracks(s.as_bytes(), Path::new("c.csv"), &spec).unwrap();
        assert_eq!(t[0].boxes[0], BBox::new(0, 20.0, 40.0, 20.0, 40.0));
        assert_eq!(t[0].frame_rate_hz, 10.0);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let original = read(&csv_for(&[("v1", "a", 0..30), ("v2", "b~1", 3..40)])).unwrap();
        let mut buf = Vec::new();
        write_tracks(&mut buf, &original).unwrap();
        let back = read_tracks(buf.as_slice(), Path::new("rt.csv"), &FormatSpec::default()).unwrap();
        assert_eq!(back, original);
    }
}
