//! Image-to-image transforms: the gaudy binarization, its edge-restricted
//! and colour variants, Gaussian smoothing and contrast stretching.
//!
//! Every transform preserves width, height and channel count. Transforms
//! are also reachable by name through [`TransformRegistry`], which is how
//! the command line and the session strategies select them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{to_grayscale, Image};

fn binarize(p: u8, mean: f64) -> u8 {
    if f64::from(p) < mean {
        0
    } else {
        255
    }
}

/// Gaudy mapping over all channel values with the whole-image mean as threshold.
pub fn gaudy(img: &Image) -> Image {
    let mean = img.mean_intensity();
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = binarize(*v, mean);
    }
    out
}

pub fn gaudy_gray(img: &Image) -> Result<Image> {
    if img.channels() != 1 {
        return Err(Error::InvalidArgument(
            "gaudy_gray expects 1 channel".into(),
        ));
    }
    Ok(gaudy(img))
}

pub fn gaudy_color(img: &Image) -> Result<Image> {
    if img.channels() != 3 {
        return Err(Error::InvalidArgument(
            "gaudy_color expects 3 channels".into(),
        ));
    }
    Ok(gaudy(img))
}

/// Per-pixel gradient magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub intensity: Vec<f64>,
}

impl EdgeMap {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.intensity[row * self.width + col]
    }
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Sobel magnitude with replicated borders; colour channels are averaged.
pub fn edge_intensity_map(img: &Image) -> EdgeMap {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut intensity = vec![0.0; w * h];
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    for r in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for ch in 0..c {
                let (mut gx, mut gy) = (0.0, 0.0);
                for (i, (kx, ky)) in SOBEL_X.iter().zip(SOBEL_Y.iter()).enumerate() {
                    let rr = clamp(r as isize + i as isize - 1, h);
                    for j in 0..3 {
                        let cc = clamp(col as isize + j as isize - 1, w);
                        let p = f64::from(img.get(rr, cc, ch));
                        gx += kx[j] * p;
                        gy += ky[j] * p;
                    }
                }
                acc += (gx * gx + gy * gy).sqrt();
            }
            intensity[r * w + col] = acc / c as f64;
        }
    }
    EdgeMap {
        width: w,
        height: h,
        intensity,
    }
}

/// Nearest-rank quantile (`q` in percent) of `values`.
pub fn nearest_rank_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((q / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn selection_count(n: usize, percent: f64) -> usize {
    ((percent / 100.0) * n as f64).round().clamp(0.0, n as f64) as usize
}

/// Pixel indices ordered by ascending edge intensity, ties by pixel index.
fn edge_order(edges: &EdgeMap) -> Vec<usize> {
    let mut order: Vec<usize> = (0..edges.intensity.len()).collect();
    order.sort_by(|&a, &b| {
        edges.intensity[a]
            .total_cmp(&edges.intensity[b])
            .then(a.cmp(&b))
    });
    order
}

/// Pixels selected by the top-`percent` edge rule, as a mask.
///
/// The pixels are ranked by edge intensity (ties by index) and the top
/// `round(percent/100 · n)` are selected. The bottom rule selects the
/// complement of the top `100 − percent` rule, so the two partition the
/// image exactly for complementary percentages.
pub fn top_edge_mask(edges: &EdgeMap, percent: f64) -> Vec<bool> {
    let n = edges.intensity.len();
    let k = selection_count(n, percent);
    let mut mask = vec![false; n];
    for &i in &edge_order(edges)[n - k..] {
        mask[i] = true;
    }
    mask
}

pub fn bottom_edge_mask(edges: &EdgeMap, percent: f64) -> Vec<bool> {
    top_edge_mask(edges, 100.0 - percent)
        .into_iter()
        .map(|m| !m)
        .collect()
}

fn gaudy_masked(img: &Image, mask: &[bool]) -> Image {
    let mean = img.mean_intensity();
    let c = img.channels();
    let mut out = img.clone();
    for (px, chunk) in out.data_mut().chunks_exact_mut(c).enumerate() {
        if mask[px] {
            for v in chunk {
                *v = binarize(*v, mean);
            }
        }
    }
    out
}

fn check_percent(percent: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(Error::InvalidArgument(format!(
            "percent must be in [0, 100], got {percent}"
        )));
    }
    Ok(())
}

pub fn gaudy_top_edges(img: &Image, percent: f64) -> Result<Image> {
    check_percent(percent)?;
    let mask = top_edge_mask(&edge_intensity_map(img), percent);
    Ok(gaudy_masked(img, &mask))
}

pub fn gaudy_bottom_edges(img: &Image, percent: f64) -> Result<Image> {
    check_percent(percent)?;
    let mask = bottom_edge_mask(&edge_intensity_map(img), percent);
    Ok(gaudy_masked(img, &mask))
}

/// Normalized 1-D Gaussian kernel of radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

// Half-sample symmetric reflection: (d c b a | a b c d | d c b a).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

pub fn gaussian_smooth(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let src: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    let mut tmp = vec![0.0; src.len()];
    for r in 0..h {
        for col in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let cc = reflect(col as isize + k as isize - radius, w);
                    acc += kv * src[(r * w + cc) * c + ch];
                }
                tmp[(r * w + col) * c + ch] = acc;
            }
        }
    }
    let mut out = img.clone();
    let data = out.data_mut();
    for r in 0..h {
        for col in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let rr = reflect(r as isize + k as isize - radius, h);
                    acc += kv * tmp[(rr * w + col) * c + ch];
                }
                data[(r * w + col) * c + ch] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(out)
}

/// Contrast stretch about the 5% nearest-rank intensity quantile.
pub fn contrast_stretch(img: &Image, percent_increase: f64) -> Result<Image> {
    if !(percent_increase >= -100.0) {
        return Err(Error::InvalidArgument(format!(
            "contrast increase must be >= -100, got {percent_increase}"
        )));
    }
    let values: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    let m = nearest_rank_quantile(&values, 5.0);
    let gain = (100.0 + percent_increase) / 100.0;
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = stretch_value(f64::from(*v), m, gain);
    }
    Ok(out)
}

fn stretch_value(p: f64, m: f64, gain: f64) -> u8 {
    ((p - m) * gain).clamp(0.0, 255.0).round() as u8
}

/// The colour manipulations compared against the plain gaudy transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColorVariant {
    GrayscaleGaudy,
    BlackAndWhiteOnly,
    RedOnly,
    GreenOnly,
    BlueOnly,
    Inverted,
    AboveMeanOnly,
    BelowMeanOnly,
    Gaudy,
}

impl ColorVariant {
    pub const ALL: [ColorVariant; 9] = [
        ColorVariant::GrayscaleGaudy,
        ColorVariant::BlackAndWhiteOnly,
        ColorVariant::RedOnly,
        ColorVariant::GreenOnly,
        ColorVariant::BlueOnly,
        ColorVariant::Inverted,
        ColorVariant::AboveMeanOnly,
        ColorVariant::BelowMeanOnly,
        ColorVariant::Gaudy,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ColorVariant::GrayscaleGaudy => "grayscale-gaudy",
            ColorVariant::BlackAndWhiteOnly => "black-and-white-only",
            ColorVariant::RedOnly => "red-only",
            ColorVariant::GreenOnly => "green-only",
            ColorVariant::BlueOnly => "blue-only",
            ColorVariant::Inverted => "inverted",
            ColorVariant::AboveMeanOnly => "above-mean-only",
            ColorVariant::BelowMeanOnly => "below-mean-only",
            ColorVariant::Gaudy => "gaudy",
        }
    }
}

impl fmt::Display for ColorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ColorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ColorVariant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "color variant",
                name: s.to_string(),
            })
    }
}

pub fn color_variant(img: &Image, variant: ColorVariant) -> Result<Image> {
    if img.channels() != 3 {
        return Err(Error::InvalidArgument(
            "color variants expect 3 channels".into(),
        ));
    }
    let mean = img.mean_intensity();
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        match variant {
            ColorVariant::Gaudy => px.iter_mut().for_each(|v| *v = binarize(*v, mean)),
            ColorVariant::GrayscaleGaudy => {
                let m = (f64::from(px[0]) + f64::from(px[1]) + f64::from(px[2])) / 3.0;
                let g = if m < mean { 0 } else { 255 };
                px.iter_mut().for_each(|v| *v = g);
            }
            ColorVariant::BlackAndWhiteOnly => {
                let below = px.iter().all(|&v| f64::from(v) < mean);
                let above = px.iter().all(|&v| f64::from(v) >= mean);
                if below || above {
                    px.iter_mut().for_each(|v| *v = binarize(*v, mean));
                }
            }
            ColorVariant::RedOnly => px[0] = binarize(px[0], mean),
            ColorVariant::GreenOnly => px[1] = binarize(px[1], mean),
            ColorVariant::BlueOnly => px[2] = binarize(px[2], mean),
            ColorVariant::Inverted => px.iter_mut().for_each(|v| *v = 255 - binarize(*v, mean)),
            ColorVariant::AboveMeanOnly => px.iter_mut().for_each(|v| {
                if f64::from(*v) >= mean {
                    *v = 255
                }
            }),
            ColorVariant::BelowMeanOnly => px.iter_mut().for_each(|v| {
                if f64::from(*v) < mean {
                    *v = 0
                }
            }),
        }
    }
    Ok(out)
}

/// An image transform selectable by name.
pub trait ImageTransform: Send + Sync {
    /// Canonical spec string, e.g. `top-edges:10`.
    fn name(&self) -> String;
    fn apply(&self, img: &Image) -> Result<Image>;
}

struct Identity;
struct Grayscale;
struct Gaudy;
struct TopEdges(f64);
struct BottomEdges(f64);
struct Smooth(f64);
struct GaudyThenSmooth(f64);
struct SmoothThenGaudy(f64);
struct Contrast(f64);
struct Variant(ColorVariant);

impl ImageTransform for Identity {
    fn name(&self) -> String {
        "identity".into()
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        Ok(img.clone())
    }
}

impl ImageTransform for Grayscale {
    fn name(&self) -> String {
        "grayscale".into()
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        Ok(to_grayscale(img))
    }
}

impl ImageTransform for Gaudy {
    fn name(&self) -> String {
        "gaudy".into()
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        Ok(gaudy(img))
    }
}

impl ImageTransform for TopEdges {
    fn name(&self) -> String {
        format!("top-edges:{}", self.0)
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        gaudy_top_edges(img, self.0)
    }
}

impl ImageTransform for BottomEdges {
    fn name(&self) -> String {
        format!("bottom-edges:{}", self.0)
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        gaudy_bottom_edges(img, self.0)
    }
}

impl ImageTransform for Smooth {
    fn name(&self) -> String {
        format!("smooth:{}", self.0)
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        gaussian_smooth(img, self.0)
    }
}

impl ImageTransform for GaudyThenSmooth {
    fn name(&self) -> String {
        format!("gaudy-smooth:{}", self.0)
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        gaussian_smooth(&gaudy(img), self.0)
    }
}

impl ImageTransform for SmoothThenGaudy {
    fn name(&self) -> String {
        format!("smooth-gaudy:{}", self.0)
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        Ok(gaudy(&gaussian_smooth(img, self.0)?))
    }
}

impl ImageTransform for Contrast {
    fn name(&self) -> String {
        format!("contrast:{}", self.0)
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        contrast_stretch(img, self.0)
    }
}

impl ImageTransform for Variant {
    fn name(&self) -> String {
        format!("variant:{}", self.0)
    }
    fn apply(&self, img: &Image) -> Result<Image> {
        color_variant(img, self.0)
    }
}

type TransformFactory = fn(Option<&str>) -> Result<Box<dyn ImageTransform>>;

fn numeric_param(name: &str, param: Option<&str>) -> Result<f64> {
    let raw = param.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "transform `{name}` needs a parameter, e.g. `{name}:10`"
        ))
    })?;
    raw.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("bad parameter `{raw}` for `{name}`")))
}

fn no_param(name: &str, param: Option<&str>) -> Result<()> {
    match param {
        None => Ok(()),
        Some(p) => Err(Error::InvalidArgument(format!(
            "transform `{name}` takes no parameter (got `{p}`)"
        ))),
    }
}

/// Name-keyed factory table for [`ImageTransform`]s.
///
/// A transform is requested with `name` or `name:param`, for example
/// `gaudy`, `top-edges:10`, `gaudy-smooth:1.5` or `variant:red-only`.
pub struct TransformRegistry {
    factories: BTreeMap<&'static str, TransformFactory>,
}

impl Default for TransformRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl TransformRegistry {
    pub fn empty() -> Self {
        TransformRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("identity", |p| {
            no_param("identity", p)?;
            Ok(Box::new(Identity))
        });
        r.register("grayscale", |p| {
            no_param("grayscale", p)?;
            Ok(Box::new(Grayscale))
        });
        r.register("gaudy", |p| {
            no_param("gaudy", p)?;
            Ok(Box::new(Gaudy))
        });
        r.register("top-edges", |p| {
            let v = numeric_param("top-edges", p)?;
            check_percent(v)?;
            Ok(Box::new(TopEdges(v)))
        });
        r.register("bottom-edges", |p| {
            let v = numeric_param("bottom-edges", p)?;
            check_percent(v)?;
            Ok(Box::new(BottomEdges(v)))
        });
        r.register("smooth", |p| {
            Ok(Box::new(Smooth(sigma_param("smooth", p)?)))
        });
        r.register("gaudy-smooth", |p| {
            Ok(Box::new(GaudyThenSmooth(sigma_param("gaudy-smooth", p)?)))
        });
        r.register("smooth-gaudy", |p| {
            Ok(Box::new(SmoothThenGaudy(sigma_param("smooth-gaudy", p)?)))
        });
        r.register("contrast", |p| {
            let c = numeric_param("contrast", p)?;
            if c < -100.0 {
                return Err(Error::InvalidArgument("contrast must be >= -100".into()));
            }
            Ok(Box::new(Contrast(c)))
        });
        r.register("variant", |p| {
            let tag = p.ok_or_else(|| Error::InvalidArgument("variant needs a tag".into()))?;
            Ok(Box::new(Variant(tag.parse()?)))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, factory: TransformFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, spec: &str) -> Result<Box<dyn ImageTransform>> {
        let (name, param) = match spec.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (spec.trim(), None),
        };
        let factory = self.factories.get(name).ok_or_else(|| Error::Unknown {
            kind: "transform",
            name: name.to_string(),
        })?;
        factory(param)
    }
}

fn sigma_param(name: &str, p: Option<&str>) -> Result<f64> {
    let s = numeric_param(name, p)?;
    if s < 0.0 {
        return Err(Error::InvalidArgument("sigma must be >= 0".into()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn gray(w: usize, h: usize, data: Vec<u8>) -> Image {
        Image::new(w, h, 1, data).unwrap()
    }

    #[test]
    fn gaudy_gray_examples() {
        assert_eq!(
            gaudy_gray(&gray(2, 1, vec![128, 128])).unwrap().data(),
            &[255, 255]
        );
        assert_eq!(
            gaudy_gray(&gray(3, 1, vec![10, 200, 90])).unwrap().data(),
            &[0, 255, 0]
        );
        let bin = gray(3, 1, vec![0, 255, 255]);
        assert_eq!(gaudy_gray(&bin).unwrap(), bin);
        assert!(gaudy_gray(&Image::filled(1, 1, 3, 0)).is_err());
    }

    #[test]
    fn gaudy_color_examples() {
        let px = Image::new(1, 1, 3, vec![10, 20, 250]).unwrap();
        assert_eq!(gaudy_color(&px).unwrap().data(), &[0, 0, 255]);
        let zero = Image::filled(2, 2, 3, 0);
        assert!(gaudy_color(&zero).unwrap().data().iter().all(|&v| v == 255));
    }

    #[test]
    fn edge_map_of_constant_is_zero() {
        let e = edge_intensity_map(&Image::filled(5, 4, 3, 77));
        assert!(e.intensity.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_step_magnitude() {
        // left column 0, right column 255: Gx = 255 * (1 + 2 + 1), Gy = 0.
        let img = gray(3, 3, vec![0, 128, 255, 0, 128, 255, 0, 128, 255]);
        let e = edge_intensity_map(&img);
        assert_eq!(e.at(1, 1), 1020.0);
    }

    #[test]
    fn edge_map_rotation_symmetry() {
        let img = gray(4, 3, vec![3, 9, 40, 7, 200, 13, 5, 90, 1, 255, 66, 8]);
        // rotate 90 degrees clockwise: new(r, c) = old(h - 1 - c, r)
        let (w, h) = (4, 3);
        let mut rot = vec![0u8; 12];
        for r in 0..w {
            for c in 0..h {
                rot[r * h + c] = img.get(h - 1 - c, r, 0);
            }
        }
        let rot = gray(h, w, rot);
        let a = edge_intensity_map(&img);
        let b = edge_intensity_map(&rot);
        for r in 0..w {
            for c in 0..h {
                assert!((b.at(r, c) - a.at(h - 1 - c, r)).abs() < 1e-9);
            }
        }
    }

    // Direct Sobel evaluation with replicated borders, used as the oracle.
    fn oracle_edges(img: &Image) -> Vec<f64> {
        let (w, h) = (img.width() as isize, img.height() as isize);
        let px = |r: isize, c: isize| {
            f64::from(img.get(r.clamp(0, h - 1) as usize, c.clamp(0, w - 1) as usize, 0))
        };
        let mut out = vec![];
        for r in 0..h {
            for c in 0..w {
                let gx = px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1)
                    - px(r - 1, c - 1)
                    - 2.0 * px(r, c - 1)
                    - px(r + 1, c - 1);
                let gy = px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1)
                    - px(r - 1, c - 1)
                    - 2.0 * px(r - 1, c)
                    - px(r - 1, c + 1);
                out.push((gx * gx + gy * gy).sqrt());
            }
        }
        out
    }

    #[test]
    fn two_by_two_edge_selection() {
        // Oracle edges for [[0,40],[40,60]]: pixel 0 has the largest gradient
        // (its neighbours differ the most under replication).
        let img = gray(2, 2, vec![0, 40, 40, 60]);
        let oracle = oracle_edges(&img);
        assert_eq!(edge_intensity_map(&img).intensity, oracle);
        let max_idx = (0..4)
            .max_by(|&a, &b| oracle[a].total_cmp(&oracle[b]))
            .unwrap();
        let distinct: BTreeSet<u64> = oracle.iter().map(|v| v.to_bits()).collect();
        assert!(oracle.iter().filter(|&&v| v == oracle[max_idx]).count() == 1);
        assert!(distinct.len() >= 2);

        let mean = img.mean_intensity(); // 35
        let top = gaudy_top_edges(&img, 25.0).unwrap();
        let bottom = gaudy_bottom_edges(&img, 75.0).unwrap();
        for i in 0..4 {
            let g = if f64::from(img.data()[i]) < mean {
                0
            } else {
                255
            };
            if i == max_idx {
                assert_eq!(top.data()[i], g);
                assert_eq!(bottom.data()[i], img.data()[i]);
            } else {
                assert_eq!(top.data()[i], img.data()[i]);
                assert_eq!(bottom.data()[i], g);
            }
        }
    }

    #[test]
    fn edge_transform_limits() {
        let img = Image::new(3, 2, 3, (0..18).map(|i| (i * 13) as u8).collect()).unwrap();
        assert_eq!(gaudy_top_edges(&img, 0.0).unwrap(), img);
        assert_eq!(gaudy_bottom_edges(&img, 0.0).unwrap(), img);
        let g = gaudy_color(&img).unwrap();
        assert_eq!(gaudy_top_edges(&img, 100.0).unwrap(), g);
        assert_eq!(gaudy_bottom_edges(&img, 100.0).unwrap(), g);
        assert!(gaudy_top_edges(&img, 101.0).is_err());
    }

    #[test]
    fn smooth_sigma_zero_and_constant() {
        let img = Image::new(3, 2, 3, (0..18).map(|i| (i * 13) as u8).collect()).unwrap();
        assert_eq!(gaussian_smooth(&img, 0.0).unwrap(), img);
        let c = Image::filled(6, 5, 3, 91);
        assert_eq!(gaussian_smooth(&c, 2.5).unwrap(), c);
        assert!(gaussian_smooth(&c, -1.0).is_err());
    }

    #[test]
    fn smooth_impulse_center() {
        // Oracle: unnormalized taps exp(-i^2/2) for |i| <= 3.
        let total: f64 = (-3..=3).map(|i: i32| (-(i * i) as f64 / 2.0).exp()).sum();
        let k0 = 1.0 / total;
        let mut img = Image::filled(9, 9, 1, 0);
        img.set(4, 4, 0, 255);
        let out = gaussian_smooth(&img, 1.0).unwrap();
        assert_eq!(f64::from(out.get(4, 4, 0)), (255.0 * k0 * k0).round());
        // mass spreads symmetrically
        assert_eq!(out.get(4, 3, 0), out.get(3, 4, 0));
    }

    #[test]
    fn contrast_examples() {
        let g = 1.0;
        assert_eq!(stretch_value(100.0, 10.0, g), 90);
        assert_eq!(stretch_value(100.0, 10.0, 2.0), 180);
        assert_eq!(stretch_value(200.0, 10.0, 5.0), 255);
        // 5% quantile of 20 values 10..=200 step 10 is rank 1 -> 10
        let img = gray(20, 1, (1..=20).map(|i| (i * 10) as u8).collect());
        let out = contrast_stretch(&img, 100.0).unwrap();
        assert_eq!(out.data()[9], 180);
        assert_eq!(out.data()[0], 0);
    }

    #[test]
    fn color_variant_examples() {
        let img = Image::new(2, 1, 3, vec![10, 20, 250, 200, 180, 30]).unwrap();
        let mean = img.mean_intensity();
        assert_eq!(
            color_variant(&img, ColorVariant::Gaudy).unwrap(),
            gaudy_color(&img).unwrap()
        );
        let inv = color_variant(&img, ColorVariant::Inverted).unwrap();
        for (o, &p) in inv.data().iter().zip(img.data()) {
            assert_eq!(*o, if f64::from(p) < mean { 255 } else { 0 });
        }
        let above = color_variant(&img, ColorVariant::AboveMeanOnly).unwrap();
        assert_eq!(above.data(), &[10, 20, 255, 255, 255, 30]);
        let below = color_variant(&img, ColorVariant::BelowMeanOnly).unwrap();
        assert_eq!(below.data(), &[0, 0, 250, 200, 180, 0]);
        let red = color_variant(&img, ColorVariant::RedOnly).unwrap();
        assert_eq!(red.data(), &[0, 20, 250, 255, 180, 30]);
        // neither pixel has all channels on one side of the mean (115)
        let bw = color_variant(&img, ColorVariant::BlackAndWhiteOnly).unwrap();
        assert_eq!(bw, img);
        let dark = Image::new(1, 2, 3, vec![1, 2, 3, 250, 250, 250]).unwrap();
        assert_eq!(
            color_variant(&dark, ColorVariant::BlackAndWhiteOnly)
                .unwrap()
                .data(),
            &[0, 0, 0, 255, 255, 255]
        );
        assert!("purple-only".parse::<ColorVariant>().is_err());
    }

    #[test]
    fn registry_builds_by_name() {
        let reg = TransformRegistry::with_builtins();
        let img = Image::new(2, 2, 3, (0..12).map(|i| (i * 20) as u8).collect()).unwrap();
        let t = reg.build("top-edges:100").unwrap();
        assert_eq!(t.apply(&img).unwrap(), gaudy(&img));
        assert_eq!(
            reg.build("variant:inverted").unwrap().name(),
            "variant:inverted"
        );
        assert!(matches!(reg.build("sharpen"), Err(Error::Unknown { .. })));
        assert!(reg.build("smooth").is_err());
        assert!(reg.build("gaudy:3").is_err());
    }

    fn arb_color() -> impl Strategy<Value = Image> {
        (1usize..7, 1usize..7).prop_flat_map(|(w, h)| {
            prop::collection::vec(any::<u8>(), w * h * 3)
                .prop_map(move |d| Image::new(w, h, 3, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn gaudy_is_idempotent_with_few_colors(img in arb_color()) {
            let g = gaudy_color(&img).unwrap();
            prop_assert_eq!(gaudy_color(&g).unwrap(), g.clone());
            let colors: BTreeSet<&[u8]> = g.data().chunks_exact(3).collect();
            prop_assert!(colors.len() <= 8);
        }

        #[test]
        fn top_and_bottom_partition(img in arb_color(), a in 0u32..=100) {
            let e = edge_intensity_map(&img);
            let top = top_edge_mask(&e, f64::from(a));
            let bottom = bottom_edge_mask(&e, f64::from(100 - a));
            for i in 0..top.len() {
                prop_assert!(top[i] ^ bottom[i]);
            }
        }

        #[test]
        fn transforms_preserve_shape(img in arb_color(), sigma in 0.0f64..3.0, c in -100.0f64..500.0) {
            let reg = TransformRegistry::with_builtins();
            for spec in ["gaudy", "top-edges:30", "bottom-edges:70", "variant:blue-only"] {
                prop_assert!(reg.build(spec).unwrap().apply(&img).unwrap().same_shape(&img));
            }
            prop_assert!(gaussian_smooth(&img, sigma).unwrap().same_shape(&img));
            prop_assert!(contrast_stretch(&img, c).unwrap().same_shape(&img));
        }
    }
}
