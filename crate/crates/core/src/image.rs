//! Pixel statistics of meme images: HSV means, RMS contrast, colourfulness,
//! pleasure/arousal/dominance estimates and the attached facial-emotion vector.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image has no pixels")]
    EmptyImage,
    #[error("pixel buffer holds {got} pixels, expected {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("saturation/value ({s}, {v}) outside [0, 1]")]
    DomainError { s: f64, v: f64 },
    #[error("failed to decode {path}: {msg}")]
    Decode { path: String, msg: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("emotion table: {0}")]
    BadEmotionRow(String),
}

/// Row-major RGB image with at least one pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(ImageError::BadShape {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn uniform(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, ImageError> {
        Self::new(width, height, vec![rgb; width * height])
    }

    /// Alternating two-colour checkerboard, `a` at the top-left corner.
    pub fn checkerboard(width: usize, height: usize, a: [u8; 3], b: [u8; 3]) -> Result<Self, ImageError> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| if (x + y) % 2 == 0 { a } else { b }))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    /// Decodes a PNG or JPEG file.
    pub fn load(path: &Path) -> Result<Self, ImageError> {
        let img = ::image::open(path).map_err(|e| ImageError::Decode {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        let pixels = rgb.pixels().map(|p| p.0).collect();
        Self::new(w as usize, h as usize, pixels)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        ::image::save_buffer(
            path,
            &raw,
            self.width as u32,
            self.height as u32,
            ::image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| ImageError::Decode {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }
}

/// RGB to HSV with hue scaled to [0, 1) and hue 0 for achromatic pixels.
pub fn rgb_to_hsv([r, g, b]: [u8; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max as f64 / 255.0;
    if max == min {
        return (0.0, 0.0, v);
    }
    let delta = (max - min) as f64;
    let s = delta / max as f64;
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let sector = if max as f64 == r {
        (g - b) / delta
    } else if max as f64 == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut h = sector / 6.0;
    if h < 0.0 {
        h += 1.0;
    }
    if h >= 1.0 {
        h -= 1.0;
    }
    (h, s, v)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    if xs.windows(2).all(|w| w[0] == w[1]) {
        return (xs.first().copied().unwrap_or(0.0), 0.0);
    }
    let mu = mean(xs.iter().copied());
    let var = mean(xs.iter().map(|x| (x - mu) * (x - mu)));
    (mu, var.sqrt())
}

pub fn hsv_means(p: &PixelGrid) -> (f64, f64, f64) {
    let hsv: Vec<(f64, f64, f64)> = p.pixels.iter().map(|&px| rgb_to_hsv(px)).collect();
    (
        mean(hsv.iter().map(|t| t.0)),
        mean(hsv.iter().map(|t| t.1)),
        mean(hsv.iter().map(|t| t.2)),
    )
}

/// Population standard deviation of per-pixel brightness (HSV value).
pub fn rms_contrast(p: &PixelGrid) -> f64 {
    let v: Vec<f64> = p.pixels.iter().map(|&px| rgb_to_hsv(px).2).collect();
    mean_and_std(&v).1
}

/// Opponent-channel colourfulness on the 0-255 scale.
pub fn colourfulness(p: &PixelGrid) -> f64 {
    let mut rg = Vec::with_capacity(p.pixels.len());
    let mut yb = Vec::with_capacity(p.pixels.len());
    for &[r, g, b] in &p.pixels {
        let (r, g, b) = (r as f64, g as f64, b as f64);
        rg.push(r - g);
        yb.push(0.5 * (r + g) - b);
    }
    let (mu_rg, sd_rg) = mean_and_std(&rg);
    let (mu_yb, sd_yb) = mean_and_std(&yb);
    (sd_rg * sd_rg + sd_yb * sd_yb).sqrt() + 0.3 * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt()
}

/// Linear pleasure/arousal/dominance estimates from mean saturation and value.
pub fn pad_scores(s: f64, v: f64) -> Result<(f64, f64, f64), ImageError> {
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&v) {
        return Err(ImageError::DomainError { s, v });
    }
    Ok((
        0.69 * v + 0.22 * s,
        -0.31 * v + 0.60 * s,
        0.76 * v + 0.32 * s,
    ))
}

pub const EMOTIONS: [&str; 7] = ["angry", "disgusted", "fearful", "happy", "neutral", "sad", "surprised"];

pub type EmotionVector = [f64; 7];

pub const UNIFORM_EMOTION: EmotionVector = [1.0 / 7.0; 7];

/// Precomputed facial-emotion distributions keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmotionTable {
    rows: HashMap<String, EmotionVector>,
}

impl EmotionTable {
    pub fn load(path: &Path) -> Result<Self, ImageError> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// Reads `id,angry,disgusted,fearful,happy,neutral,sad,surprised` rows.
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self, ImageError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected: Vec<&str> = std::iter::once("id").chain(EMOTIONS).collect();
        let got: Vec<&str> = headers.iter().map(str::trim).collect();
        if got != expected {
            return Err(ImageError::BadEmotionRow(format!("header {got:?}, expected {expected:?}")));
        }
        let mut table = Self::default();
        for record in rdr.records() {
            let record = record?;
            let id = record[0].trim().to_string();
            let mut v = [0.0; 7];
            for (slot, cell) in v.iter_mut().zip(record.iter().skip(1)) {
                *slot = cell
                    .trim()
                    .parse()
                    .map_err(|_| ImageError::BadEmotionRow(format!("{id}: bad number `{cell}`")))?;
            }
            table.insert(id, v)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, id: String, v: EmotionVector) -> Result<(), ImageError> {
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ImageError::BadEmotionRow(format!("{id}: negative or non-finite entry")));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ImageError::BadEmotionRow(format!("{id}: entries sum to {sum}")));
        }
        self.rows.insert(id, v);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> Result<(), ImageError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("id").chain(EMOTIONS))?;
        let mut ids: Vec<&String> = self.rows.keys().collect();
        ids.sort();
        for id in ids {
            let mut row = vec![id.clone()];
            row.extend(self.rows[id].iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Looks up a sample's emotion vector; unknown ids get the uniform vector.
pub fn attach_emotion(table: &EmotionTable, id: &str) -> EmotionVector {
    table.rows.get(id).copied().unwrap_or(UNIFORM_EMOTION)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageFeatureVector {
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
    pub rms_contrast: f64,
    pub colourfulness: f64,
    pub pleasure: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub emotion: EmotionVector,
}

impl ImageFeatureVector {
    pub const DIM: usize = 15;
    /// Leading entries derived from pixels; the rest is the emotion vector.
    pub const PIXEL_DIM: usize = 8;
    pub const NAMES: [&'static str; 15] = [
        "hue",
        "saturation",
        "value",
        "rms_contrast",
        "colourfulness",
        "pleasure",
        "arousal",
        "dominance",
        "angry",
        "disgusted",
        "fearful",
        "happy",
        "neutral",
        "sad",
        "surprised",
    ];

    pub fn to_array(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        out[..8].copy_from_slice(&[
            self.hue,
            self.saturation,
            self.value,
            self.rms_contrast,
            self.colourfulness,
            self.pleasure,
            self.arousal,
            self.dominance,
        ]);
        out[8..].copy_from_slice(&self.emotion);
        out
    }
}

pub fn image_features(p: Option<&PixelGrid>, emotion: &EmotionVector) -> ImageFeatureVector {
    let mut f = ImageFeatureVector {
        hue: 0.0,
        saturation: 0.0,
        value: 0.0,
        rms_contrast: 0.0,
        colourfulness: 0.0,
        pleasure: 0.0,
        arousal: 0.0,
        dominance: 0.0,
        emotion: *emotion,
    };
    if let Some(p) = p {
        let (h, s, v) = hsv_means(p);
        // Means of values in [0, 1] stay in range, so the domain check cannot fail.
        let (pl, ar, dom) = pad_scores(s.clamp(0.0, 1.0), v.clamp(0.0, 1.0)).expect("S, V in [0, 1]");
        f.hue = h;
        f.saturation = s;
        f.value = v;
        f.rms_contrast = rms_contrast(p);
        f.colourfulness = colourfulness(p);
        f.pleasure = pl;
        f.arousal = ar;
        f.dominance = dom;
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RED: [u8; 3] = [255, 0, 0];
    const GREEN: [u8; 3] = [0, 255, 0];

    #[test]
    fn rejects_empty_or_misshapen() {
        assert!(matches!(PixelGrid::new(0, 3, vec![]), Err(ImageError::EmptyImage)));
        assert!(matches!(PixelGrid::new(2, 2, vec![RED; 3]), Err(ImageError::BadShape { .. })));
    }

    #[test]
    fn hsv_of_red_gray_and_halves() {
        let red = PixelGrid::uniform(3, 2, RED).unwrap();
        assert_eq!(hsv_means(&red), (0.0, 1.0, 1.0));
        let gray = PixelGrid::uniform(2, 2, [128; 3]).unwrap();
        let (h, s, v) = hsv_means(&gray);
        assert_eq!((h, s, v), (0.0, 0.0, 128.0 / 255.0));
        let half = PixelGrid::new(2, 1, vec![[0; 3], [255; 3]]).unwrap();
        assert_eq!(hsv_means(&half).2, 0.5);
    }

    #[test]
    fn hue_sectors() {
        assert!((rgb_to_hsv(GREEN).0 - 1.0 / 3.0).abs() < 1e-15);
        assert!((rgb_to_hsv([0, 0, 255]).0 - 2.0 / 3.0).abs() < 1e-15);
        // magenta-ish red wraps to the top of the range
        let (h, _, _) = rgb_to_hsv([255, 0, 1]);
        assert!(h > 0.99 && h < 1.0);
    }

    #[test]
    fn contrast_examples() {
        assert_eq!(rms_contrast(&PixelGrid::uniform(4, 4, [10, 200, 30]).unwrap()), 0.0);
        let two = PixelGrid::new(2, 1, vec![[0; 3], [255; 3]]).unwrap();
        assert_eq!(rms_contrast(&two), 0.5);
        // only the per-pixel maximum channel matters
        let tinted = PixelGrid::new(2, 1, vec![[0; 3], [255, 40, 90]]).unwrap();
        assert_eq!(rms_contrast(&tinted), 0.5);
    }

    #[test]
    fn colourfulness_examples() {
        let gray = PixelGrid::new(3, 1, vec![[0; 3], [77; 3], [255; 3]]).unwrap();
        assert_eq!(colourfulness(&gray), 0.0);
        let red = PixelGrid::uniform(2, 2, RED).unwrap();
        let expected = 0.3 * (255.0f64 * 255.0 + 127.5 * 127.5).sqrt();
        assert!((colourfulness(&red) - expected).abs() < 1e-9);
        assert!((expected - 85.53).abs() < 0.01);
        let board = PixelGrid::checkerboard(4, 4, RED, GREEN).unwrap();
        assert!((colourfulness(&board) - 293.25).abs() < 1e-9);
    }

    #[test]
    fn pad_examples() {
        assert_eq!(pad_scores(0.0, 0.0).unwrap(), (0.0, 0.0, 0.0));
        let (p, a, d) = pad_scores(1.0, 1.0).unwrap();
        assert!((p - 0.91).abs() < 1e-12 && (a - 0.29).abs() < 1e-12 && (d - 1.08).abs() < 1e-12);
        let (p, a, d) = pad_scores(1.0, 0.0).unwrap();
        assert!((p - 0.22).abs() < 1e-12 && (a - 0.60).abs() < 1e-12 && (d - 0.32).abs() < 1e-12);
        assert!(matches!(pad_scores(1.2, 0.5), Err(ImageError::DomainError { .. })));
    }

    #[test]
    fn emotion_table_lookup_and_validation() {
        let csv = "id,angry,disgusted,fearful,happy,neutral,sad,surprised\nm1,0,0,0,1,0,0,0\n";
        let t = EmotionTable::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(attach_emotion(&t, "m1"), [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(attach_emotion(&t, "nope"), UNIFORM_EMOTION);
        let bad = "id,angry,disgusted,fearful,happy,neutral,sad,surprised\nm1,-0.1,0,0,1.1,0,0,0\n";
        assert!(matches!(EmotionTable::from_reader(bad.as_bytes()), Err(ImageError::BadEmotionRow(_))));
        let unnormalised = "id,angry,disgusted,fearful,happy,neutral,sad,surprised\nm1,0.5,0,0,1,0,0,0\n";
        assert!(EmotionTable::from_reader(unnormalised.as_bytes()).is_err());
    }

    #[test]
    fn assembled_vector() {
        let absent = image_features(None, &UNIFORM_EMOTION).to_array();
        assert!(absent[..8].iter().all(|&x| x == 0.0));
        assert!(absent[8..].iter().all(|&x| x == 1.0 / 7.0));

        let happy = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let red = PixelGrid::uniform(2, 2, RED).unwrap();
        let f = image_features(Some(&red), &happy).to_array();
        assert_eq!(f.len(), ImageFeatureVector::DIM);
        assert_eq!(&f[..4], &[0.0, 1.0, 1.0, 0.0]);
        assert!((f[4] - 0.3 * (255.0f64 * 255.0 + 127.5 * 127.5).sqrt()).abs() < 1e-9);
        assert!((f[5] - 0.91).abs() < 1e-12 && (f[6] - 0.29).abs() < 1e-12 && (f[7] - 1.08).abs() < 1e-12);
        assert_eq!(&f[8..], &happy);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("board.png");
        let board = PixelGrid::checkerboard(5, 3, RED, [12, 34, 56]).unwrap();
        board.save_png(&path).unwrap();
        assert_eq!(PixelGrid::load(&path).unwrap(), board);
    }

    fn grid() -> impl Strategy<Value = PixelGrid> {
        (1usize..6, 1usize..6).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<[u8; 3]>(), w * h)
                .prop_map(move |px| PixelGrid::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn statistics_ranges_and_permutation(p in grid(), rot in 0usize..36) {
            let (h, s, v) = hsv_means(&p);
            for x in [h, s, v, rms_contrast(&p)] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            prop_assert!(colourfulness(&p) >= 0.0);

            let mut px = p.pixels().to_vec();
            let n = px.len();
            px.rotate_left(rot % n);
            px.reverse();
            let q = PixelGrid::new(n, 1, px).unwrap();
            let a = image_features(Some(&p), &UNIFORM_EMOTION).to_array();
            let b = image_features(Some(&q), &UNIFORM_EMOTION).to_array();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn colourfulness_tiling_invariant(p in grid()) {
            let (w, h) = (p.width(), p.height());
            let tiled: Vec<[u8; 3]> = (0..2 * h)
                .flat_map(|y| (0..2 * w).map(move |x| (x % w, y % h)))
                .map(|(x, y)| p.pixels()[y * w + x])
                .collect();
            let t = PixelGrid::new(2 * w, 2 * h, tiled).unwrap();
            prop_assert!((colourfulness(&t) - colourfulness(&p)).abs() < 1e-9);
        }

        #[test]
        fn pad_is_linear(s in 0.0f64..=1.0, v in 0.0f64..=1.0, a in 0.0f64..=1.0) {
            let (p0, a0, d0) = pad_scores(s, v).unwrap();
            let (p1, a1, d1) = pad_scores(a * s, a * v).unwrap();
            prop_assert!((p1 - a * p0).abs() < 1e-12);
            prop_assert!((a1 - a * a0).abs() < 1e-12);
            prop_assert!((d1 - a * d0).abs() < 1e-12);
        }
    }
}
