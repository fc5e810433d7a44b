//! Image corpora: a procedural natural-like generator and a directory loader.
//!
//! Synthetic images follow a dead-leaves model: opaque shapes with
//! power-law sizes occlude each other, each carrying its own colour,
//! shading gradient and occasional texture. Rendering happens at twice
//! the target resolution, then a mild blur and a 2×2 box filter give soft
//! edges. Every image depends only on `(seed, index)`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{crop_square, load_image, resize_nearest, Image};
use crate::rng::{tag, Stream};
use crate::transforms::gaussian_kernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusConfig {
    pub size: usize,
    pub side: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            size: 2000,
            side: 28,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Disk,
    Ellipse { ratio: f64, sin: f64, cos: f64 },
    Rect { ratio: f64, sin: f64, cos: f64 },
}

struct Leaf {
    cy: f64,
    cx: f64,
    r: f64,
    shape: Shape,
    color: [f64; 3],
    shade_dir: (f64, f64),
    shade_amp: f64,
    texture: Option<(f64, f64, f64, f64)>,
}

impl Leaf {
    fn contains(&self, y: f64, x: f64) -> bool {
        let (dy, dx) = (y - self.cy, x - self.cx);
        let d2 = dy * dy + dx * dx;
        // every shape fits inside the circle of radius r·√2
        if d2 > 2.0 * self.r * self.r {
            return false;
        }
        match self.shape {
            Shape::Disk => d2 <= self.r * self.r,
            Shape::Ellipse { ratio, sin, cos } => {
                let (u, v) = (cos * dy - sin * dx, sin * dy + cos * dx);
                (u / self.r).powi(2) + (v / (self.r * ratio)).powi(2) <= 1.0
            }
            Shape::Rect { ratio, sin, cos } => {
                let (u, v) = (cos * dy - sin * dx, sin * dy + cos * dx);
                u.abs() <= self.r && v.abs() <= self.r * ratio
            }
        }
    }

    fn value(&self, y: f64, x: f64) -> [f64; 3] {
        let (dy, dx) = ((y - self.cy) / self.r, (x - self.cx) / self.r);
        let mut shift = self.shade_amp * (dy * self.shade_dir.0 + dx * self.shade_dir.1);
        if let Some((fy, fx, phase, amp)) = self.texture {
            shift += amp * (2.0 * PI * (fy * y + fx * x) + phase).sin();
        }
        self.color.map(|c| c + shift)
    }
}

fn draw_shape(rng: &mut Stream) -> Shape {
    let u = rng.uniform();
    let ratio = rng.uniform_range(0.3, 1.0);
    let (sin, cos) = (rng.uniform() * PI).sin_cos();
    if u < 0.55 {
        Shape::Disk
    } else if u < 0.8 {
        Shape::Ellipse { ratio, sin, cos }
    } else {
        Shape::Rect { ratio, sin, cos }
    }
}

/// Renders image `index` of the synthetic corpus with 3 channels.
pub fn synthetic_image(seed: u64, index: u64, side: usize) -> Image {
    let mut rng = Stream::new(seed).child(index, tag::CORPUS);
    let big = 2 * side;
    let bf = big as f64;

    let brightness = 115.0 + 25.0 * rng.normal();
    let contrast = rng.uniform_range(0.5, 1.5);
    let hue: [f64; 3] = [rng.normal(), rng.normal(), rng.normal()];
    let saturation = rng.uniform_range(0.0, 30.0);
    let leaf_color = |rng: &mut Stream| -> [f64; 3] {
        let lum = brightness + contrast * 60.0 * rng.normal();
        let tint = rng.uniform_range(0.3, 1.0);
        let mut c = [0.0; 3];
        for (ch, out) in c.iter_mut().enumerate() {
            *out = lum + saturation * (tint * hue[ch] + 0.5 * rng.normal());
        }
        c
    };

    let background = Leaf {
        cy: bf / 2.0,
        cx: bf / 2.0,
        r: bf,
        shape: Shape::Disk,
        color: leaf_color(&mut rng),
        shade_dir: {
            let a = rng.uniform() * 2.0 * PI;
            (a.sin(), a.cos())
        },
        shade_amp: contrast * rng.uniform_range(0.0, 40.0),
        texture: None,
    };

    // Power-law radii, density ∝ r^-2.5 between r_min and r_max.
    let (r_min, r_max): (f64, f64) = (2.5, 0.7 * bf);
    let a = 1.0 - 2.5;
    let count = 15 + rng.below(45);
    let mut leaves = Vec::with_capacity(count);
    for _ in 0..count {
        let u = rng.uniform();
        let lo = r_min.powf(a);
        let r = (lo - u * (lo - r_max.powf(a))).powf(1.0 / a);
        let shade_angle = rng.uniform() * 2.0 * PI;
        let texture = if rng.uniform() < 0.25 {
            let f = rng.uniform_range(0.05, 0.25);
            let a = rng.uniform() * PI;
            Some((
                f * a.sin(),
                f * a.cos(),
                rng.uniform() * 2.0 * PI,
                contrast * rng.uniform_range(5.0, 25.0),
            ))
        } else {
            None
        };
        leaves.push(Leaf {
            cy: rng.uniform_range(-0.1 * bf, 1.1 * bf),
            cx: rng.uniform_range(-0.1 * bf, 1.1 * bf),
            r,
            shape: draw_shape(&mut rng),
            color: leaf_color(&mut rng),
            shade_dir: (shade_angle.sin(), shade_angle.cos()),
            shade_amp: contrast * rng.uniform_range(0.0, 25.0),
            texture,
        });
    }

    // Painter's order: later leaves occlude earlier ones.
    let mut owner: Vec<Option<usize>> = vec![None; big * big];
    for (k, leaf) in leaves.iter().enumerate() {
        let reach = leaf.r * std::f64::consts::SQRT_2;
        let lo = |c: f64| ((c - reach - 0.5).floor().max(0.0) as usize).min(big);
        let hi = |c: f64| ((c + reach + 0.5).ceil().max(0.0) as usize).min(big);
        for row in lo(leaf.cy)..hi(leaf.cy) {
            for col in lo(leaf.cx)..hi(leaf.cx) {
                if leaf.contains(row as f64 + 0.5, col as f64 + 0.5) {
                    owner[row * big + col] = Some(k);
                }
            }
        }
    }
    let mut canvas = vec![0.0; big * big * 3];
    for row in 0..big {
        for col in 0..big {
            let (y, x) = (row as f64 + 0.5, col as f64 + 0.5);
            let leaf = owner[row * big + col].map_or(&background, |k| &leaves[k]);
            let v = leaf.value(y, x);
            for ch in 0..3 {
                // uniform sensor noise on ±3.5 (s.d. ≈ 2)
                let noise = 7.0 * (f64::from(rng.next_u32()) / 4_294_967_296.0 - 0.5);
                canvas[(row * big + col) * 3 + ch] = v[ch] + noise;
            }
        }
    }

    let blur = rng.uniform_range(0.3, 1.5);
    let canvas = blur_separable(&canvas, big, blur);

    let mut data = Vec::with_capacity(side * side * 3);
    for row in 0..side {
        for col in 0..side {
            for ch in 0..3 {
                let mut s = 0.0;
                for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    s += canvas[((2 * row + dr) * big + 2 * col + dc) * 3 + ch];
                }
                data.push((s / 4.0).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(side, side, 3, data).expect("consistent dimensions")
}

fn blur_separable(src: &[f64], side: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let clamp = |i: isize| i.clamp(0, side as isize - 1) as usize;
    let mut tmp = vec![0.0; src.len()];
    for row in 0..side {
        for col in 0..side {
            for ch in 0..3 {
                let mut s = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let c = clamp(col as isize + k as isize - radius);
                    s += w * src[(row * side + c) * 3 + ch];
                }
                tmp[(row * side + col) * 3 + ch] = s;
            }
        }
    }
    let mut out = vec![0.0; src.len()];
    for row in 0..side {
        for col in 0..side {
            for ch in 0..3 {
                let mut s = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let r = clamp(row as isize + k as isize - radius);
                    s += w * tmp[(r * side + col) * 3 + ch];
                }
                out[(row * side + col) * 3 + ch] = s;
            }
        }
    }
    out
}

pub fn synthetic_corpus(cfg: &CorpusConfig) -> Vec<Image> {
    (0..cfg.size as u64)
        .map(|i| synthetic_image(cfg.seed, i, cfg.side))
        .collect()
}

/// Loads every `.pgm`/`.ppm` file in `dir` (sorted by name), crops each to a
/// random square and resizes it to `side × side` with nearest neighbour.
pub fn load_corpus_dir(dir: impl AsRef<Path>, side: usize, seed: u64) -> Result<Vec<Image>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(str::to_ascii_lowercase)
                    .as_deref(),
                Some("pgm" | "ppm")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::CorpusTooSmall(format!(
            "no PGM/PPM files in {}",
            dir.display()
        )));
    }
    let root = Stream::new(seed);
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let img = load_image(p)?;
            let sq = crop_square(&img, &mut root.child(i as u64, tag::CROP));
            Ok(resize_nearest(&sq, side, side))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::save_image;

    #[test]
    fn deterministic_and_index_dependent() {
        let a = synthetic_image(3, 10, 16);
        assert_eq!(a, synthetic_image(3, 10, 16));
        assert_ne!(a, synthetic_image(3, 11, 16));
        assert_ne!(a, synthetic_image(4, 10, 16));
        assert_eq!((a.width(), a.height(), a.channels()), (16, 16, 3));
    }

    #[test]
    fn images_have_spread_and_plausible_mean() {
        let imgs = synthetic_corpus(&CorpusConfig {
            size: 200,
            side: 28,
            seed: 1,
        });
        let means: Vec<f64> = imgs.iter().map(Image::mean_intensity).collect();
        let grand = means.iter().sum::<f64>() / means.len() as f64;
        assert!((80.0..150.0).contains(&grand), "{grand}");
        for img in &imgs {
            let distinct: std::collections::BTreeSet<u8> = img.data().iter().copied().collect();
            assert!(distinct.len() > 8);
        }
    }

    #[test]
    fn directory_loader_crops_and_resizes() {
        let dir = tempfile::tempdir().unwrap();
        let wide = Image::filled(12, 8, 3, 50);
        save_image(&wide, dir.path().join("b.ppm")).unwrap();
        save_image(&Image::filled(5, 5, 1, 9), dir.path().join("a.pgm")).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let imgs = load_corpus_dir(dir.path(), 4, 0).unwrap();
        assert_eq!(imgs.len(), 2);
        assert_eq!((imgs[0].width(), imgs[0].channels()), (4, 1));
        assert_eq!(imgs[1], Image::filled(4, 4, 3, 50));
        let empty = tempfile::tempdir().unwrap();
        assert!(load_corpus_dir(empty.path(), 4, 0).is_err());
    }
}
