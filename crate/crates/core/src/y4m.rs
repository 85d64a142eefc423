//! Minimal YUV4MPEG2 reader: extracts 8-bit 4:2:0 luma planes, skipping
//! chroma.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Y4mError {
    #[error("stream does not start with the YUV4MPEG2 magic")]
    BadMagic,
    #[error("frame {frame}: payload truncated (needed {needed} bytes, had {had})")]
    TruncatedFrame {
        frame: usize,
        needed: usize,
        had: usize,
    },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
}

/// Decoded luma planes of one clip; all frames share dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSequence {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Vec<u8>>,
}

impl FrameSequence {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

fn read_line(data: &[u8], pos: usize) -> Option<(&str, usize)> {
    let end = data[pos..].iter().position(|&b| b == b'\n')? + pos;
    let line = std::str::from_utf8(&data[pos..end]).ok()?;
    Some((line, end + 1))
}

/// Parses a YUV4MPEG2 byte stream. Only 8-bit 4:2:0 chroma subsampling is
/// accepted (`C420`, `C420jpeg`, `C420mpeg2`, `C420paldv`, or an absent C
/// tag, which the format defines as 4:2:0).
pub fn parse_y4m_luma(data: &[u8]) -> Result<FrameSequence, Y4mError> {
    const MAGIC: &[u8] = b"YUV4MPEG2";
    if data.len() < MAGIC.len() || &data[..MAGIC.len()] != MAGIC {
        return Err(Y4mError::BadMagic);
    }
    let (header, mut pos) = read_line(data, 0).ok_or(Y4mError::BadMagic)?;
    let mut tokens = header.split(' ');
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Y4mError::BadMagic);
    }

    let mut width = 0usize;
    let mut height = 0usize;
    for tok in tokens {
        match tok.chars().next() {
            Some('W') => {
                width = tok[1..]
                    .parse()
                    .map_err(|_| Y4mError::UnsupportedFormat(format!("bad width '{tok}'")))?;
            }
            Some('H') => {
                height = tok[1..]
                    .parse()
                    .map_err(|_| Y4mError::UnsupportedFormat(format!("bad height '{tok}'")))?;
            }
            Some('C') => match &tok[1..] {
                "420" | "420jpeg" | "420mpeg2" | "420paldv" => {}
                other => {
                    return Err(Y4mError::UnsupportedFormat(format!(
                        "chroma sampling '{other}' (only 8-bit 4:2:0 supported)"
                    )))
                }
            },
            _ => {} // frame rate, interlacing, aspect, extensions
        }
    }
    if width == 0 || height == 0 {
        return Err(Y4mError::UnsupportedFormat("missing W or H tag".into()));
    }
    if width % 2 != 0 || height % 2 != 0 {
        return Err(Y4mError::UnsupportedFormat(
            "odd dimensions are not valid for 4:2:0".into(),
        ));
    }

    let luma_len = width * height;
    let chroma_len = (width / 2) * (height / 2);
    let mut frames = Vec::new();
    while pos < data.len() {
        let frame_no = frames.len();
        let (line, body) = read_line(data, pos).ok_or(Y4mError::TruncatedFrame {
            frame: frame_no,
            needed: luma_len + 2 * chroma_len,
            had: data.len() - pos,
        })?;
        if line != "FRAME" && !line.starts_with("FRAME ") {
            return Err(Y4mError::UnsupportedFormat(format!(
                "expected FRAME marker, found '{line}'"
            )));
        }
        let needed = luma_len + 2 * chroma_len;
        if data.len() < body + needed {
            return Err(Y4mError::TruncatedFrame {
                frame: frame_no,
                needed,
                had: data.len() - body,
            });
        }
        frames.push(data[body..body + luma_len].to_vec());
        pos = body + needed;
    }
    if frames.is_empty() {
        return Err(Y4mError::TruncatedFrame {
            frame: 0,
            needed: luma_len,
            had: 0,
        });
    }
    debug_assert_eq!(pos, data.len());
    Ok(FrameSequence {
        width,
        height,
        frames,
    })
}

/// Builds a well-formed single-stream fixture from luma planes (chroma
/// filled with 128). Used by tests and by the feature-extraction examples.
pub fn write_y4m(width: usize, height: usize, lumas: &[Vec<u8>]) -> Vec<u8> {
    let mut out = format!("YUV4MPEG2 W{width} H{height} F25:1 Ip A1:1 C420jpeg\n").into_bytes();
    let chroma = vec![128u8; (width / 2) * (height / 2)];
    for luma in lumas {
        out.extend_from_slice(b"FRAME\n");
        out.extend_from_slice(luma);
        out.extend_from_slice(&chroma);
        out.extend_from_slice(&chroma);
    }
    out
}
