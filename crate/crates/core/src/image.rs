//! 8-bit rasters, binary Netpbm I/O, and the small set of geometric and
//! intensity operations the experiments need before any transform runs.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Offset subtracted from every intensity before regression.
pub const DEFAULT_OFFSET: f64 = 110.0;

/// Row-major, channel-interleaved 8-bit image with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Image::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
        .expect("consistent dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: u8) {
        self.data[(row * self.width + col) * self.channels + ch] = v;
    }

    /// Mean over every channel value of every pixel, unrounded.
    pub fn mean_intensity(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

/// A flattened image after subtracting a constant offset.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredVector {
    pub values: Vec<f64>,
    pub offset: f64,
}

impl CenteredVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Adds the offset back; exact for vectors produced by [`recenter`].
    pub fn restore(&self) -> Vec<f64> {
        self.values.iter().map(|v| v + self.offset).collect()
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes)
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pnm(img)).map_err(|e| Error::io(path, e))
}

/// Canonical binary encoding: `P5`/`P6`, newline, `W H`, newline, `255`, newline, payload.
pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("unparsable {what}")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader("missing magic number".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::MalformedHeader(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "expected single whitespace after maxval".into(),
            ))
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero dimension".into()));
    }
    let expected = width * height * channels;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    Image::new(width, height, channels, payload[..expected].to_vec())
}

fn round_half_away(x: f64) -> f64 {
    // f64::round rounds half away from zero.
    x.round()
}

/// Channel-mean grayscale. Grayscale input is returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels == 1 {
        return img.clone();
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| {
            let m = (f64::from(px[0]) + f64::from(px[1]) + f64::from(px[2])) / 3.0;
            round_half_away(m) as u8
        })
        .collect();
    Image::new(img.width, img.height, 1, data).expect("consistent dimensions")
}

/// Random square crop with side `min(width, height)`.
pub fn crop_square(img: &Image, rng: &mut Stream) -> Image {
    let side = img.width.min(img.height);
    let col0 = rng.below(img.width - side + 1);
    let row0 = rng.below(img.height - side + 1);
    crop(img, row0, col0, side, side)
}

pub fn crop(img: &Image, row0: usize, col0: usize, height: usize, width: usize) -> Image {
    let c = img.channels;
    let mut data = Vec::with_capacity(width * height * c);
    for r in row0..row0 + height {
        let start = (r * img.width + col0) * c;
        data.extend_from_slice(&img.data[start..start + width * c]);
    }
    Image::new(width, height, c, data).expect("crop within bounds")
}

/// Nearest-neighbour resampling to `width × height`, sampling pixel centres.
pub fn resize_nearest(img: &Image, width: usize, height: usize) -> Image {
    let c = img.channels;
    let mut data = Vec::with_capacity(width * height * c);
    for r in 0..height {
        let sr =
            (((r as f64 + 0.5) * img.height as f64 / height as f64) as usize).min(img.height - 1);
        for col in 0..width {
            let sc = (((col as f64 + 0.5) * img.width as f64 / width as f64) as usize)
                .min(img.width - 1);
            let start = (sr * img.width + sc) * c;
            data.extend_from_slice(&img.data[start..start + c]);
        }
    }
    Image::new(width, height, c, data).expect("consistent dimensions")
}

pub fn recenter(img: &Image, offset: f64) -> CenteredVector {
    CenteredVector {
        values: img.data.iter().map(|&v| f64::from(v) - offset).collect(),
        offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_small_pgm() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 64, 128, 255]);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 2, 1));
        assert_eq!(img.data(), &[0, 64, 128, 255]);
    }

    #[test]
    fn header_comments_are_accepted() {
        let mut bytes = b"P5\n# made by hand\n2 # width\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[9, 8]);
        assert_eq!(decode_pnm(&bytes).unwrap().data(), &[9, 8]);
    }

    #[test]
    fn truncated_payload_is_reported() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1; 9]);
        match decode_pnm(&bytes) {
            Err(Error::TruncatedPayload { expected, found }) => {
                assert_eq!((expected, found), (12, 9))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_errors_are_distinct() {
        assert!(matches!(
            decode_pnm(b"P6\n2 2\n65535\n\0\0"),
            Err(Error::UnsupportedMaxval(65535))
        ));
        assert!(matches!(
            decode_pnm(b"P3\n1 1\n255\n0 0 0"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pnm(b"P5\n1\n"),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn grayscale_rounding() {
        let img = Image::new(3, 1, 3, vec![0, 0, 0, 255, 255, 255, 10, 20, 40]).unwrap();
        assert_eq!(to_grayscale(&img).data(), &[0, 255, 23]);
        // 1,1,2 -> 1.333 -> 1; 1,2,2 -> 1.667 -> 2; 0,0,1 -> 0.333 -> 0
        let img = Image::new(3, 1, 3, vec![1, 1, 2, 1, 2, 2, 0, 0, 1]).unwrap();
        assert_eq!(to_grayscale(&img).data(), &[1, 2, 0]);
    }

    #[test]
    fn grayscale_is_noop_on_gray() {
        let img = Image::new(2, 1, 1, vec![3, 200]).unwrap();
        assert_eq!(to_grayscale(&img), img);
    }

    #[test]
    fn crop_square_of_square_is_identity() {
        let img = Image::new(2, 2, 1, vec![1, 2, 3, 4]).unwrap();
        let mut rng = Stream::new(5);
        assert_eq!(crop_square(&img, &mut rng), img);
    }

    #[test]
    fn crop_square_enumerates_valid_offsets() {
        // 4x2 image whose columns are labelled 0..4.
        let img = Image::new(4, 2, 1, vec![0, 1, 2, 3, 0, 1, 2, 3]).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..64 {
            let out = crop_square(&img, &mut Stream::new(seed));
            assert_eq!((out.width(), out.height()), (2, 2));
            seen.insert(out.data()[0]);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        let a = crop_square(&img, &mut Stream::new(9));
        let b = crop_square(&img, &mut Stream::new(9));
        assert_eq!(a, b);
    }

    #[test]
    fn recenter_values() {
        let img = Image::new(3, 1, 1, vec![110, 0, 255]).unwrap();
        let v = recenter(&img, DEFAULT_OFFSET);
        assert_eq!(v.values, vec![0.0, -110.0, 145.0]);
        assert_eq!(v.restore(), vec![110.0, 0.0, 255.0]);
    }

    #[test]
    fn resize_nearest_halves() {
        let img = Image::new(4, 1, 1, vec![10, 20, 30, 40]).unwrap();
        assert_eq!(resize_nearest(&img, 2, 1).data(), &[20, 40]);
        assert_eq!(resize_nearest(&img, 4, 1), img);
    }

    fn arb_image() -> impl Strategy<Value = Image> {
        (1usize..6, 1usize..6, prop::bool::ANY).prop_flat_map(|(w, h, color)| {
            let c = if color { 3 } else { 1 };
            prop::collection::vec(any::<u8>(), w * h * c)
                .prop_map(move |d| Image::new(w, h, c, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pnm_round_trip_is_byte_exact(img in arb_image()) {
            let bytes = encode_pnm(&img);
            let back = decode_pnm(&bytes).unwrap();
            prop_assert_eq!(encode_pnm(&back), bytes);
            prop_assert_eq!(back, img);
        }

        #[test]
        fn recenter_is_linear(a in arb_image(), off in -50.0f64..200.0) {
            let b = Image::new(a.width(), a.height(), a.channels(),
                a.data().iter().map(|v| v.wrapping_mul(7)).collect()).unwrap();
            let ra = recenter(&a, off);
            let rb = recenter(&b, off);
            for i in 0..a.data().len() {
                let diff = f64::from(a.data()[i]) - f64::from(b.data()[i]);
                prop_assert!((ra.values[i] - rb.values[i] - diff).abs() < 1e-12);
            }
        }

        #[test]
        fn grayscale_idempotent(img in arb_image()) {
            let g = to_grayscale(&img);
            prop_assert_eq!(to_grayscale(&g), g);
        }
    }
}
