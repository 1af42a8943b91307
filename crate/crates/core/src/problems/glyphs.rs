//! Synthetic two-task image dataset built like Multi-MNIST.
//!
//! Each task owns a family of glyph templates, one binary pattern per class.
//! An example draws a class for each task, perturbs both templates, pastes
//! the first at the top-left corner of the canvas and the second shifted by
//! `overlap_shift` pixels in both directions, merges the overlap with a
//! per-pixel maximum and adds clipped Gaussian noise.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Batch, Tensor};
use crate::error::{Error, Result};
use crate::seeds;

/// Probability that a template pixel is lit.
const TEMPLATE_DENSITY: f64 = 0.45;
/// Probability that an example flips a template pixel.
const FLIP_PROBABILITY: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedGlyphConfig {
    pub glyph_size: usize,
    pub canvas_size: usize,
    pub classes_per_task: usize,
    pub overlap_shift: usize,
    pub noise_std: f64,
    /// `(train, validation, test)` sizes.
    pub counts: (usize, usize, usize),
}

impl Default for MergedGlyphConfig {
    fn default() -> Self {
        Self {
            glyph_size: 8,
            canvas_size: 12,
            classes_per_task: 10,
            overlap_shift: 4,
            noise_std: 0.5,
            counts: (5400, 600, 1000),
        }
    }
}

impl MergedGlyphConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("glyph config: {m}")));
        if self.glyph_size == 0 || self.classes_per_task < 2 {
            return bad("glyph_size must be positive and there must be at least 2 classes".into());
        }
        if self.canvas_size < self.glyph_size {
            return bad(format!(
                "canvas_size {} is smaller than glyph_size {}",
                self.canvas_size, self.glyph_size
            ));
        }
        if self.overlap_shift >= self.glyph_size {
            return bad(format!(
                "overlap_shift {} must be below glyph_size {} so the glyphs overlap",
                self.overlap_shift, self.glyph_size
            ));
        }
        if self.overlap_shift + self.glyph_size > self.canvas_size {
            return bad("shifted glyph does not fit on the canvas".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be non-negative".into());
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.canvas_size * self.canvas_size
    }
}

/// One example viewed out of a [`Split`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample<'a> {
    pub id: u64,
    pub pixels: &'a [f32],
    pub label_tl: usize,
    pub label_br: usize,
}

/// Column-oriented storage of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub name: String,
    pub pixel_count: usize,
    pub ids: Vec<u64>,
    pub pixels: Vec<f32>,
    pub labels_tl: Vec<usize>,
    pub labels_br: Vec<usize>,
}

impl Split {
    fn empty(name: &str, pixel_count: usize) -> Self {
        Self {
            name: name.to_string(),
            pixel_count,
            ids: Vec::new(),
            pixels: Vec::new(),
            labels_tl: Vec::new(),
            labels_br: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn task_count(&self) -> usize {
        2
    }

    pub fn example(&self, i: usize) -> LabeledExample<'_> {
        LabeledExample {
            id: self.ids[i],
            pixels: &self.pixels[i * self.pixel_count..(i + 1) * self.pixel_count],
            label_tl: self.labels_tl[i],
            label_br: self.labels_br[i],
        }
    }

    pub fn labels(&self, task: usize) -> &[usize] {
        match task {
            0 => &self.labels_tl,
            1 => &self.labels_br,
            _ => panic!("glyph splits have two tasks"),
        }
    }

    /// Materializes the examples at `indices`. `extra` is appended to every
    /// input row (used to feed preference rays to conditioned networks).
    pub fn batch(&self, indices: &[usize], batch_index: usize, extra: &[f64]) -> Batch {
        let width = self.pixel_count + extra.len();
        let mut inputs = Vec::with_capacity(indices.len() * width);
        for &i in indices {
            inputs.extend(
                self.pixels[i * self.pixel_count..(i + 1) * self.pixel_count]
                    .iter()
                    .map(|&p| f64::from(p)),
            );
            inputs.extend_from_slice(extra);
        }
        Batch {
            index: batch_index,
            inputs: Tensor::matrix(indices.len(), width, inputs).expect("batch shape"),
            labels: vec![
                indices.iter().map(|&i| self.labels_tl[i]).collect(),
                indices.iter().map(|&i| self.labels_br[i]).collect(),
            ],
        }
    }

    fn push(&mut self, id: u64, pixels: &[f32], tl: usize, br: usize) {
        self.ids.push(id);
        self.pixels.extend_from_slice(pixels);
        self.labels_tl.push(tl);
        self.labels_br.push(br);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphDataset {
    pub config: MergedGlyphConfig,
    pub seed: u64,
    pub train: Split,
    pub validation: Split,
    pub test: Split,
}

fn templates(config: &MergedGlyphConfig, rng: &mut impl Rng) -> Vec<Vec<Vec<bool>>> {
    let n = config.glyph_size * config.glyph_size;
    (0..2)
        .map(|_| {
            (0..config.classes_per_task)
                .map(|_| (0..n).map(|_| rng.random_bool(TEMPLATE_DENSITY)).collect())
                .collect()
        })
        .collect()
}

/// Generates all three splits. Fully determined by `(config, seed)`.
pub fn generate_glyph_dataset(config: &MergedGlyphConfig, seed: u64) -> Result<GlyphDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families = templates(config, &mut rng);
    let noise = Normal::new(0.0, config.noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let (g, canvas, shift) = (config.glyph_size, config.canvas_size, config.overlap_shift);
    let pixel_count = config.pixel_count();
    let mut image = vec![0f32; pixel_count];
    let mut glyph = vec![0f32; g * g];
    let mut next_id = 0u64;

    let mut make_split = |name: &str, count: usize, rng: &mut ChaCha8Rng| {
        let mut split = Split::empty(name, pixel_count);
        for _ in 0..count {
            image.iter_mut().for_each(|p| *p = 0.0);
            let labels = [
                rng.random_range(0..config.classes_per_task),
                rng.random_range(0..config.classes_per_task),
            ];
            for (task, &label) in labels.iter().enumerate() {
                let intensity = rng.random_range(0.7..1.0);
                for (px, &on) in glyph.iter_mut().zip(&families[task][label]) {
                    let lit = on != rng.random_bool(FLIP_PROBABILITY);
                    *px = if lit { intensity } else { 0.0 };
                }
                let offset = task * shift;
                for r in 0..g {
                    for c in 0..g {
                        let dst = &mut image[(r + offset) * canvas + c + offset];
                        *dst = dst.max(glyph[r * g + c]);
                    }
                }
            }
            if config.noise_std > 0.0 {
                for p in image.iter_mut() {
                    *p = (f64::from(*p) + noise.sample(rng)).clamp(0.0, 1.0) as f32;
                }
            }
            split.push(next_id, &image, labels[0], labels[1]);
            next_id += 1;
        }
        split
    };

    let (n_train, n_val, n_test) = config.counts;
    let train = make_split("train", n_train, &mut rng);
    let validation = make_split("validation", n_val, &mut rng);
    let test = make_split("test", n_test, &mut rng);
    Ok(GlyphDataset {
        config: config.clone(),
        seed,
        train,
        validation,
        test,
    })
}

/// Index batches for one epoch: a fresh permutation from `epoch_seed`,
/// chunked, with the final partial batch kept.
pub fn epoch_batches(len: usize, batch_size: usize, epoch_seed: u64) -> Result<Vec<Vec<usize>>> {
    if len == 0 {
        return Err(Error::EmptySplit);
    }
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seeds::mix(epoch_seed)));
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

const MAGIC: &str = "mtlbench-glyphs v1";

impl GlyphDataset {
    /// Flat text export: a header with config and seed, then one line per
    /// example (`id label_tl label_br pixel...`) grouped by split.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(
            out,
            "config glyph_size={} canvas_size={} classes={} shift={} noise_std={:e} train={} validation={} test={}",
            c.glyph_size, c.canvas_size, c.classes_per_task, c.overlap_shift, c.noise_std,
            c.counts.0, c.counts.1, c.counts.2
        );
        let _ = writeln!(out, "seed {}", self.seed);
        for split in [&self.train, &self.validation, &self.test] {
            let _ = writeln!(out, "split {} {}", split.name, split.len());
            for i in 0..split.len() {
                let e = split.example(i);
                let _ = write!(out, "{} {} {}", e.id, e.label_tl, e.label_br);
                for p in e.pixels {
                    let _ = write!(out, " {p:e}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |m: &str| Error::Parse(format!("glyph file: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(perr("bad header"));
        }
        let cfg_line = lines.next().and_then(|l| l.strip_prefix("config ")).ok_or_else(|| perr("missing config"))?;
        let mut config = MergedGlyphConfig::default();
        for field in cfg_line.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| perr("bad config field"))?;
            let u = || v.parse::<usize>().map_err(|_| perr("bad integer"));
            match k {
                "glyph_size" => config.glyph_size = u()?,
                "canvas_size" => config.canvas_size = u()?,
                "classes" => config.classes_per_task = u()?,
                "shift" => config.overlap_shift = u()?,
                "noise_std" => config.noise_std = v.parse().map_err(|_| perr("bad noise_std"))?,
                "train" => config.counts.0 = u()?,
                "validation" => config.counts.1 = u()?,
                "test" => config.counts.2 = u()?,
                _ => return Err(perr("unknown config key")),
            }
        }
        config.validate()?;
        let seed = lines
            .next()
            .and_then(|l| l.strip_prefix("seed "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| perr("missing seed"))?;

        let pixel_count = config.pixel_count();
        let mut splits = Vec::new();
        for (name, count) in [
            ("train", config.counts.0),
            ("validation", config.counts.1),
            ("test", config.counts.2),
        ] {
            let header = format!("split {name} {count}");
            if lines.next() != Some(header.as_str()) {
                return Err(perr(&format!("expected {header:?}")));
            }
            let mut split = Split::empty(name, pixel_count);
            let mut pixels = Vec::with_capacity(pixel_count);
            for _ in 0..count {
                let line = lines.next().ok_or_else(|| perr("truncated split"))?;
                let mut fields = line.split_whitespace();
                let mut next_usize = || -> Result<u64> {
                    fields
                        .next()
                        .and_then(|f| f.parse().ok())
                        .ok_or_else(|| perr("bad example line"))
                };
                let id = next_usize()?;
                let tl = next_usize()? as usize;
                let br = next_usize()? as usize;
                if tl >= config.classes_per_task || br >= config.classes_per_task {
                    return Err(perr("label out of range"));
                }
                pixels.clear();
                for f in fields {
                    pixels.push(f.parse::<f32>().map_err(|_| perr("bad pixel"))?);
                }
                if pixels.len() != pixel_count {
                    return Err(perr("wrong pixel count"));
                }
                split.push(id, &pixels, tl, br);
            }
            splits.push(split);
        }
        let test = splits.pop().expect("three splits");
        let validation = splits.pop().expect("three splits");
        let train = splits.pop().expect("three splits");
        Ok(Self {
            config,
            seed,
            train,
            validation,
            test,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}
