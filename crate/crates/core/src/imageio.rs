//! Netpbm (PGM/PPM) reading and writing, PNG input, and CSV traces.

use std::io::Write;

use crate::engines::LabelMap;
use crate::error::{Error, Result};
use crate::fcm::{BitDepth, ImageGrid, ObjectiveTrace};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Distinct RGB colours, one per label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette(Vec<[u8; 3]>);

const BASE_COLORS: [[u8; 3]; 10] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [255, 225, 25],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [128, 128, 128],
    [255, 255, 255],
];

impl Palette {
    pub fn new(colors: Vec<[u8; 3]>) -> Result<Self> {
        for (i, c) in colors.iter().enumerate() {
            if colors[..i].contains(c) {
                return Err(Error::param(
                    "palette",
                    format!("colour {c:?} repeated at {i}"),
                ));
            }
        }
        Ok(Self(colors))
    }

    /// `n` distinct colours: a fixed qualitative set, then generated ones.
    pub fn qualitative(n: usize) -> Self {
        let mut colors: Vec<[u8; 3]> = BASE_COLORS.iter().copied().take(n).collect();
        let mut k: usize = 0;
        while colors.len() < n {
            // k -> (97k, 57k, 211k) mod 256 is injective on the first 256 k.
            let candidate = [
                (k * 97 % 256) as u8,
                (k * 57 % 256) as u8,
                (k * 211 % 256) as u8,
            ];
            if !colors.contains(&candidate) {
                colors.push(candidate);
            }
            k += 1;
        }
        Self(colors)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn colors(&self) -> &[[u8; 3]] {
        &self.0
    }
}

/// Decodes a binary PGM (`P5`, maxval 255 or 65535) or a single-channel PNG.
pub fn load_grayscale(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.starts_with(PNG_SIGNATURE) {
        load_png(bytes)
    } else {
        load_pgm(bytes)
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|&b| b != b'\n' && b != b'\r')
                {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                offset: start,
                reason: format!("{what} out of range"),
            })
    }
}

fn load_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if !bytes.starts_with(b"P5") {
        return Err(cur.err("missing P5 magic"));
    }
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_offset = cur.pos;
    let maxval = cur.number("maxval")?;
    let depth = match maxval {
        255 => BitDepth::Eight,
        65535 => BitDepth::Sixteen,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "maxval {other} at byte {maxval_offset}; only 255 and 65535 are supported"
            )));
        }
    };
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected a single whitespace byte before the raster")),
    }
    if width == 0 || height == 0 {
        return Err(cur.err("zero image dimension"));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("dimensions overflow"))?;
    let bytes_per_sample = if depth == BitDepth::Eight { 1 } else { 2 };
    let payload = &bytes[cur.pos..];
    if payload.len() < n * bytes_per_sample {
        return Err(Error::Parse {
            offset: bytes.len(),
            reason: format!(
                "raster truncated: need {} bytes, found {}",
                n * bytes_per_sample,
                payload.len()
            ),
        });
    }
    let samples = match depth {
        BitDepth::Eight => payload[..n].iter().map(|&b| u16::from(b)).collect(),
        BitDepth::Sixteen => payload[..2 * n]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect(),
    };
    ImageGrid::new(width, height, depth, samples)
}

fn load_png(bytes: &[u8]) -> Result<ImageGrid> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::UnsupportedFormat(format!("png: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedFormat(format!(
            "png colour type {:?}; only single-channel grayscale is supported",
            info.color_type
        )));
    }
    let depth = match info.bit_depth {
        png::BitDepth::Eight => BitDepth::Eight,
        png::BitDepth::Sixteen => BitDepth::Sixteen,
        other => return Err(Error::UnsupportedFormat(format!("png bit depth {other:?}"))),
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::UnsupportedFormat(format!("png: {e}")))?;
    let data = &buf[..frame.buffer_size()];
    let samples = match depth {
        BitDepth::Eight => data.iter().map(|&b| u16::from(b)).collect(),
        BitDepth::Sixteen => data
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect(),
    };
    ImageGrid::new(width, height, depth, samples)
}

/// Writes a binary PGM; 16-bit samples are big-endian.
pub fn save_grayscale(image: &ImageGrid, mut sink: impl Write) -> Result<()> {
    let maxval = image.bit_depth().max_value();
    write!(sink, "P5\n{} {}\n{maxval}\n", image.width(), image.height())?;
    match image.bit_depth() {
        BitDepth::Eight => {
            let bytes: Vec<u8> = image.samples().iter().map(|&s| s as u8).collect();
            sink.write_all(&bytes)?;
        }
        BitDepth::Sixteen => {
            let bytes: Vec<u8> = image
                .samples()
                .iter()
                .flat_map(|s| s.to_be_bytes())
                .collect();
            sink.write_all(&bytes)?;
        }
    }
    sink.flush()?;
    Ok(())
}

/// Gray level for `label` when `c` labels share the 0..=255 range.
pub fn label_to_gray(label: usize, c: usize) -> u8 {
    (label * 255 / (c - 1)) as u8
}

/// Inverse of [`label_to_gray`]: the smallest label whose gray level is `value`.
pub fn gray_to_label(value: u8, c: usize) -> usize {
    (usize::from(value) * (c - 1)).div_ceil(255)
}

/// Writes labels as an 8-bit PGM with gray level `floor(label * 255 / (c - 1))`.
pub fn save_label_map(labels: &LabelMap, c: usize, mut sink: impl Write) -> Result<()> {
    if !(2..=256).contains(&c) {
        return Err(Error::param(
            "clusters",
            format!("label maps need 2..=256 clusters, got {c}"),
        ));
    }
    if let Some(&l) = labels.labels().iter().find(|&&l| l >= c) {
        return Err(Error::param("labels", format!("label {l} not below {c}")));
    }
    write!(sink, "P5\n{} {}\n255\n", labels.width(), labels.height())?;
    let bytes: Vec<u8> = labels
        .labels()
        .iter()
        .map(|&l| label_to_gray(l, c))
        .collect();
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(())
}

/// Recovers labels from a gray image written by [`save_label_map`].
pub fn labels_from_gray(image: &ImageGrid, c: usize) -> Result<LabelMap> {
    if image.bit_depth() != BitDepth::Eight || !(2..=256).contains(&c) {
        return Err(Error::param(
            "clusters",
            "label images are 8-bit with 2..=256 clusters",
        ));
    }
    let labels = image
        .samples()
        .iter()
        .map(|&v| {
            let l = gray_to_label(v as u8, c);
            if label_to_gray(l, c) == v as u8 {
                Ok(l)
            } else {
                Err(Error::param(
                    "labels",
                    format!("gray level {v} is not a label level for c={c}"),
                ))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    LabelMap::new(image.width(), image.height(), labels)
}

/// Ranks the distinct gray levels of `image`, darkest first, and uses the
/// rank as the label. Works for any label image without knowing `c`.
pub fn labels_by_rank(image: &ImageGrid) -> LabelMap {
    let mut levels = image.samples().to_vec();
    levels.sort_unstable();
    levels.dedup();
    let labels = image
        .samples()
        .iter()
        .map(|v| levels.binary_search(v).expect("level present"))
        .collect();
    LabelMap::new(image.width(), image.height(), labels).expect("image dimensions are valid")
}

/// Writes a binary PPM with `palette[label]` per pixel.
pub fn save_pseudocolor(labels: &LabelMap, palette: &Palette, mut sink: impl Write) -> Result<()> {
    let needed = labels.label_count();
    if palette.len() < needed {
        return Err(Error::param(
            "palette",
            format!("{} colours for {needed} labels", palette.len()),
        ));
    }
    write!(sink, "P6\n{} {}\n255\n", labels.width(), labels.height())?;
    let bytes: Vec<u8> = labels.labels().iter().flat_map(|&l| palette.0[l]).collect();
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(())
}

pub fn write_convergence_csv(trace: &ObjectiveTrace, mut sink: impl Write) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::Precondition("convergence trace is empty".into()));
    }
    let mut out = String::from("iteration,objective,max_delta\n");
    for r in trace.records() {
        out.push_str(&format!(
            "{},{:.9},{:.9}\n",
            r.iteration, r.objective, r.max_delta
        ));
    }
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, labels: Vec<usize>) -> LabelMap {
        LabelMap::new(w, h, labels).unwrap()
    }

    #[test]
    fn decode_small_pgm() {
        let img = load_grayscale(b"P5\n2 2\n255\n\x00\x80\xff\x40").unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.samples(), &[0, 128, 255, 64]);
        assert_eq!(img.bit_depth(), BitDepth::Eight);
    }

    #[test]
    fn comments_are_skipped() {
        let plain = load_grayscale(b"P5\n2 2\n255\n\x00\x80\xff\x40").unwrap();
        let commented = load_grayscale(
            b"P5\n# made by hand\n2 # width\n2\n# maxval next\n255\n\x00\x80\xff\x40",
        )
        .unwrap();
        assert_eq!(plain, commented);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let img = load_grayscale(b"P5 1 1 65535\n\x01\x00").unwrap();
        assert_eq!(img.samples(), &[256]);
        assert_eq!(img.bit_depth(), BitDepth::Sixteen);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            load_grayscale(b"P6\n1 1\n255\n\x00"),
            Err(Error::Parse { offset: 0, .. })
        ));
        assert!(matches!(
            load_grayscale(b"P5\n1 x\n255\n\x00"),
            Err(Error::Parse { offset: 5, .. })
        ));
        assert!(matches!(
            load_grayscale(b"P5\n1 1\n1023\n\x00\x00"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            load_grayscale(b"P5\n2 2\n255\n\x00"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn png_grayscale_and_rgb() {
        let mut bytes = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut bytes, 2, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0x01, 0x00, 0xff, 0xff]).unwrap();
        }
        let img = load_grayscale(&bytes).unwrap();
        assert_eq!(img.samples(), &[256, 65535]);

        let mut rgb = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut rgb, 1, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[1, 2, 3]).unwrap();
        }
        assert!(matches!(
            load_grayscale(&rgb),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn label_map_levels() {
        let mut out = Vec::new();
        save_label_map(&map(2, 1, vec![0, 1]), 2, &mut out).unwrap();
        assert_eq!(&out[out.len() - 2..], &[0, 255]);
        assert_eq!(label_to_gray(2, 5), 127);

        let mut out = Vec::new();
        save_label_map(&map(3, 1, vec![4, 4, 4]), 5, &mut out).unwrap();
        assert_eq!(&out[out.len() - 3..], &[255, 255, 255]);
        assert!(save_label_map(&map(1, 1, vec![0]), 1, Vec::new()).is_err());
    }

    #[test]
    fn gray_inverse_is_exact() {
        for c in 2..=256 {
            for l in 0..c {
                assert_eq!(gray_to_label(label_to_gray(l, c), c), l, "c={c} l={l}");
            }
        }
    }

    #[test]
    fn pseudocolor_payloads() {
        let palette = Palette::new(vec![[255, 0, 0], [0, 0, 255]]).unwrap();
        let mut out = Vec::new();
        save_pseudocolor(&map(1, 1, vec![0]), &palette, &mut out).unwrap();
        assert_eq!(out, b"P6\n1 1\n255\n\xff\x00\x00");

        let mut out = Vec::new();
        save_pseudocolor(&map(2, 2, vec![0, 1, 1, 0]), &palette, &mut out).unwrap();
        let header = b"P6\n2 2\n255\n".len();
        assert_eq!(
            &out[header..],
            &[255, 0, 0, 0, 0, 255, 0, 0, 255, 255, 0, 0]
        );

        let short = Palette::new(vec![[1, 2, 3]]).unwrap();
        assert!(save_pseudocolor(&map(2, 1, vec![0, 1]), &short, Vec::new()).is_err());
        assert!(Palette::new(vec![[1, 2, 3], [1, 2, 3]]).is_err());
    }

    #[test]
    fn qualitative_palette_is_distinct() {
        let p = Palette::qualitative(256);
        assert_eq!(p.len(), 256);
        assert!(Palette::new(p.colors().to_vec()).is_ok());
    }

    #[test]
    fn csv_format() {
        let mut trace = ObjectiveTrace::new();
        trace.push(0.25, 1.0);
        let mut out = Vec::new();
        write_convergence_csv(&trace, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "iteration,objective,max_delta\n1,0.250000000,1.000000000\n"
        );
        assert!(matches!(
            write_convergence_csv(&ObjectiveTrace::new(), Vec::new()),
            Err(Error::Precondition(_))
        ));
    }
}
