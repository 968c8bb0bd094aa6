use std::io::Write;
use std::path::Path;

use super::{Frame, FrameRate, VideoClip};
use crate::error::{Error, Result};
use crate::tensor::Plane;

const SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_MARKER: &[u8] = b"FRAME";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Colorspace {
    C420,
    C444,
}

impl Colorspace {
    fn parse(tag: &str) -> Result<Self> {
        match tag {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Ok(Colorspace::C420),
            "444" => Ok(Colorspace::C444),
            other => Err(Error::Parse(format!("unsupported colorspace C{other}"))),
        }
    }

    fn chroma_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Colorspace::C420 => (width.div_ceil(2), height.div_ceil(2)),
            Colorspace::C444 => (width, height),
        }
    }
}

struct Header {
    width: usize,
    height: usize,
    rate: FrameRate,
    colorspace: Colorspace,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut tokens = line.split(' ').filter(|t| !t.is_empty());
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::Parse("missing YUV4MPEG2 signature".into()));
    }
    let (mut width, mut height, mut rate) = (None, None, FrameRate::new(30, 1));
    let mut colorspace = Colorspace::C420;
    for tok in tokens {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = Some(parse_dim(val, "W")?),
            "H" => height = Some(parse_dim(val, "H")?),
            "F" => {
                let (n, d) = val
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad frame rate {val}")))?;
                let num = n
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad frame rate {val}")))?;
                let den = d
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad frame rate {val}")))?;
                if den == 0 {
                    return Err(Error::Parse("frame rate denominator is zero".into()));
                }
                rate = FrameRate::new(num, den);
            }
            "C" => colorspace = Colorspace::parse(val)?,
            "I" | "A" | "X" => {}
            _ => return Err(Error::Parse(format!("unknown header tag {tok}"))),
        }
    }
    Ok(Header {
        width: width.ok_or_else(|| Error::Parse("missing W tag".into()))?,
        height: height.ok_or_else(|| Error::Parse("missing H tag".into()))?,
        rate,
        colorspace,
    })
}

fn parse_dim(val: &str, tag: &str) -> Result<usize> {
    match val.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::Parse(format!("bad {tag} value {val}"))),
    }
}

/// Duplicates each chroma sample into its 2x2 (or 1x1) footprint.
fn upsample(src: &[u8], cw: usize, width: usize, height: usize, cs: Colorspace) -> Plane<u8> {
    match cs {
        Colorspace::C444 => Plane {
            width,
            height,
            data: src.to_vec(),
        },
        Colorspace::C420 => {
            let mut data = Vec::with_capacity(width * height);
            for y in 0..height {
                let row = &src[(y / 2) * cw..(y / 2) * cw + cw];
                data.extend((0..width).map(|x| row[x / 2]));
            }
            Plane {
                width,
                height,
                data,
            }
        }
    }
}

fn decode_frame(payload: &[u8], h: &Header) -> Frame {
    let luma_len = h.width * h.height;
    let (cw, ch) = h.colorspace.chroma_dims(h.width, h.height);
    let chroma_len = cw * ch;
    let luma = Plane {
        width: h.width,
        height: h.height,
        data: payload[..luma_len].to_vec(),
    };
    let cb = &payload[luma_len..luma_len + chroma_len];
    let cr = &payload[luma_len + chroma_len..luma_len + 2 * chroma_len];
    Frame {
        luma,
        chroma_b: upsample(cb, cw, h.width, h.height, h.colorspace),
        chroma_r: upsample(cr, cw, h.width, h.height, h.colorspace),
    }
}

/// Decodes a complete YUV4MPEG2 stream.
pub fn parse_y4m(bytes: &[u8]) -> Result<VideoClip> {
    if !bytes.starts_with(SIGNATURE) {
        return Err(Error::Parse("stream does not start with YUV4MPEG2".into()));
    }
    let eol = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse("unterminated stream header".into()))?;
    let line = std::str::from_utf8(&bytes[..eol])
        .map_err(|_| Error::Parse("stream header is not ASCII".into()))?;
    let header = parse_header(line)?;
    let (cw, ch) = header.colorspace.chroma_dims(header.width, header.height);
    let frame_len = header.width * header.height + 2 * cw * ch;

    let mut pos = eol + 1;
    let mut frames = Vec::new();
    while pos < bytes.len() {
        let index = frames.len();
        if !bytes[pos..].starts_with(FRAME_MARKER) {
            return Err(Error::Parse(format!("expected FRAME marker at byte {pos}")));
        }
        let line_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(Error::Truncated { frame: index })?;
        pos += line_end + 1;
        let end = pos + frame_len;
        if end > bytes.len() {
            return Err(Error::Truncated { frame: index });
        }
        frames.push(decode_frame(&bytes[pos..end], &header));
        pos = end;
    }
    if frames.is_empty() {
        return Err(Error::Parse("stream contains no frames".into()));
    }
    VideoClip::new(header.rate, frames)
}

/// Decodes headerless planar I420 with externally supplied geometry.
pub fn parse_raw_i420(
    bytes: &[u8],
    width: usize,
    height: usize,
    rate: FrameRate,
) -> Result<VideoClip> {
    let header = Header {
        width,
        height,
        rate,
        colorspace: Colorspace::C420,
    };
    let (cw, ch) = Colorspace::C420.chroma_dims(width, height);
    let frame_len = width * height + 2 * cw * ch;
    if width == 0 || height == 0 {
        return Err(Error::Parse("raw geometry must be non-zero".into()));
    }
    if bytes.is_empty() {
        return Err(Error::Parse("raw stream is empty".into()));
    }
    if !bytes.len().is_multiple_of(frame_len) {
        return Err(Error::Truncated {
            frame: bytes.len() / frame_len,
        });
    }
    let frames = bytes
        .chunks_exact(frame_len)
        .map(|chunk| decode_frame(chunk, &header))
        .collect();
    VideoClip::new(rate, frames)
}

/// Reads a Y4M file, or raw I420 when `geometry` is given.
pub fn read_video(path: &Path, geometry: Option<(usize, usize)>) -> Result<VideoClip> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match geometry {
        Some((w, h)) => parse_raw_i420(&bytes, w, h, FrameRate::new(30, 1)),
        None => parse_y4m(&bytes),
    }
}

/// Encodes a clip; 4:2:0 output keeps the top-left sample of each 2x2 block,
/// which inverts the decoder's duplication exactly.
pub fn write_y4m<W: Write>(
    clip: &VideoClip,
    colorspace: Colorspace,
    out: &mut W,
) -> std::io::Result<()> {
    let tag = match colorspace {
        Colorspace::C420 => "420jpeg",
        Colorspace::C444 => "444",
    };
    let rate = clip.frame_rate();
    writeln!(
        out,
        "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C{}",
        clip.width(),
        clip.height(),
        rate.num,
        rate.den,
        tag
    )?;
    for frame in clip.frames() {
        out.write_all(b"FRAME\n")?;
        out.write_all(&frame.luma.data)?;
        for plane in [&frame.chroma_b, &frame.chroma_r] {
            match colorspace {
                Colorspace::C444 => out.write_all(&plane.data)?,
                Colorspace::C420 => {
                    let mut sub = Vec::with_capacity(plane.data.len() / 4 + plane.width);
                    for y in (0..plane.height).step_by(2) {
                        sub.extend(plane.row(y).iter().step_by(2));
                    }
                    out.write_all(&sub)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y4m_bytes(header: &str, frames: usize, fill: u8, payload: usize) -> Vec<u8> {
        let mut v = format!("{header}\n").into_bytes();
        for _ in 0..frames {
            v.extend_from_slice(b"FRAME\n");
            v.extend(std::iter::repeat_n(fill, payload));
        }
        v
    }

    #[test]
    fn parses_header_and_single_frame() {
        let bytes = y4m_bytes("YUV4MPEG2 W320 H320 F30:1 C420", 1, 128, 320 * 320 * 3 / 2);
        let clip = parse_y4m(&bytes).unwrap();
        assert_eq!((clip.width(), clip.height(), clip.len()), (320, 320, 1));
        assert_eq!(clip.frame_rate(), FrameRate::new(30, 1));
        assert!(clip.frames()[0].luma.data.iter().all(|&v| v == 128));
        assert_eq!(clip.frames()[0].chroma_b.width, 320);
    }

    #[test]
    fn frame_count_matches_markers() {
        let bytes = y4m_bytes("YUV4MPEG2 W16 H8 F25:1 C444", 4, 7, 16 * 8 * 3);
        assert_eq!(parse_y4m(&bytes).unwrap().len(), 4);
    }

    #[test]
    fn chroma_is_duplicated_2x2() {
        let mut bytes = b"YUV4MPEG2 W4 H2 F30:1 C420paldv\nFRAME\n".to_vec();
        bytes.extend([0u8; 8]);
        bytes.extend([10u8, 20]);
        bytes.extend([30u8, 40]);
        let clip = parse_y4m(&bytes).unwrap();
        let f = &clip.frames()[0];
        assert_eq!(f.chroma_b.data, vec![10, 10, 20, 20, 10, 10, 20, 20]);
        assert_eq!(f.chroma_r.data, vec![30, 30, 40, 40, 30, 30, 40, 40]);
    }

    #[test]
    fn malformed_headers_are_parse_errors() {
        for h in [
            "YUV4MPEG W4 H2",
            "YUV4MPEG2 H2 F30:1",
            "YUV4MPEG2 W4 H2 C411",
            "YUV4MPEG2 W4 H2 F30:0",
            "YUV4MPEG2 Wx H2",
        ] {
            let bytes = y4m_bytes(h, 1, 0, 12);
            assert!(matches!(parse_y4m(&bytes), Err(Error::Parse(_))), "{h}");
        }
    }

    #[test]
    fn truncated_payload_reports_frame_index() {
        let mut bytes = y4m_bytes("YUV4MPEG2 W4 H2 C420", 2, 1, 12);
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            parse_y4m(&bytes),
            Err(Error::Truncated { frame: 1 })
        ));
    }

    #[test]
    fn write_then_parse_is_stable() {
        let bytes = y4m_bytes("YUV4MPEG2 W6 H4 F24:1 C420jpeg", 3, 90, 6 * 4 + 2 * 3 * 2);
        let clip = parse_y4m(&bytes).unwrap();
        let mut out = Vec::new();
        write_y4m(&clip, Colorspace::C420, &mut out).unwrap();
        assert_eq!(parse_y4m(&out).unwrap(), clip);
    }

    #[test]
    fn raw_i420_needs_whole_frames() {
        let raw = vec![5u8; 2 * (4 * 2 + 2 * 2)];
        let clip = parse_raw_i420(&raw, 4, 2, FrameRate::new(30, 1)).unwrap();
        assert_eq!(clip.len(), 2);
        assert!(matches!(
            parse_raw_i420(&raw[..20], 4, 2, FrameRate::new(30, 1)),
            Err(Error::Truncated { frame: 1 })
        ));
    }
}
