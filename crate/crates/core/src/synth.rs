//! Procedural glyphs and slips with exact ground truth.
//!
//! Every glyph is the union of 1–3 component shapes. A component is one
//! near-horizontal stroke spanning the full cell width, one near-vertical
//! stroke spanning the full cell height, and a short interior stroke, so the
//! ink bounding box of any glyph is its whole cell. Components therefore keep
//! the same relative position in every glyph that contains them, which gives
//! component-level ground truth for multi-label recognition.
//!
//! Slips are tall narrow strips: glyphs stacked top to bottom with randomized
//! gaps over a fibre-textured background, plus optional Gaussian noise.

use image::Luma;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::GlyphLabel;
use crate::detection::BoundingBox;
use crate::raster::GrayImage;

const COMPONENT_NAMES: &str = "木目心水火土金口日月人手女子言糸竹艸示貝衣食馬魚鳥山石田刀力又寸弓戈止歹毛气爪父片牛犬玉瓦甘生用白皮皿矢禾穴立米羊羽老耳肉臣自至舌舟色虫血行見角谷豆走足身車辛邑酉里門阜隹雨青非面革音頁風飛首香骨高鬼麥黃黑鼓鼻齒龍";
// Disjoint from COMPONENT_NAMES so a one-component OOV key never equals a modern key.
const MODERN_NAMES: &str = "之也不而其以為者於王曰有無可所天下大公民事必初道德夫乃此是故則與吾君我爾何焉矣乎哉已既將欲能知聞得死上中成明時年川邦國家室";

/// Positions for the spanning strokes, in unit cell coordinates.
const LANES: [f64; 7] = [0.1, 0.233, 0.367, 0.5, 0.633, 0.767, 0.9];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stroke {
    from: (f64, f64),
    to: (f64, f64),
    /// Spanning strokes keep their endpoints on the cell edge under jitter.
    spanning: Span,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Span {
    Horizontal,
    Vertical,
    Interior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentShape {
    pub name: String,
    strokes: Vec<Stroke>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphClass {
    pub label: GlyphLabel,
    /// Indices into [`GlyphSet::components`], ascending.
    pub components: Vec<usize>,
}

impl GlyphClass {
    pub fn component_names<'a>(&self, set: &'a GlyphSet) -> Vec<&'a str> {
        self.components
            .iter()
            .map(|&c| set.components[c].name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphSetParams {
    pub n_components: usize,
    /// Classes labelled with a modern character.
    pub n_modern: usize,
    /// Out-of-vocabulary classes labelled with their components.
    pub n_oov: usize,
    pub max_components_per_glyph: usize,
    pub seed: u64,
}

impl Default for GlyphSetParams {
    fn default() -> Self {
        Self {
            n_components: 16,
            n_modern: 40,
            n_oov: 0,
            max_components_per_glyph: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSet {
    pub components: Vec<ComponentShape>,
    pub classes: Vec<GlyphClass>,
}

fn nth_name(list: &str, i: usize, prefix: char) -> String {
    list.chars()
        .nth(i)
        .map(String::from)
        .unwrap_or_else(|| format!("{prefix}{i}"))
}

impl GlyphSet {
    /// Random component shapes and distinct component combinations.
    ///
    /// # Panics
    /// When more classes are requested than distinct combinations exist.
    pub fn generate(params: &GlyphSetParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

        let mut lane_pairs: Vec<(usize, usize)> = (0..LANES.len())
            .flat_map(|h| (0..LANES.len()).map(move |v| (h, v)))
            .collect();
        lane_pairs.shuffle(&mut rng);

        let components = (0..params.n_components)
            .map(|i| {
                let (h, v) = lane_pairs[i % lane_pairs.len()];
                ComponentShape {
                    name: nth_name(COMPONENT_NAMES, i, 'c'),
                    strokes: component_strokes(LANES[h], LANES[v], &mut rng),
                }
            })
            .collect();

        let n_classes = params.n_modern + params.n_oov;
        let max_k = params.max_components_per_glyph.clamp(1, params.n_components.max(1));
        let capacity: usize = (1..=max_k).map(|k| binomial(params.n_components, k)).sum();
        assert!(
            n_classes <= capacity,
            "{n_classes} classes requested but only {capacity} component combinations exist"
        );

        let mut seen = std::collections::HashSet::new();
        let mut combos = Vec::with_capacity(n_classes);
        while combos.len() < n_classes {
            let k = rng.random_range(1..=max_k);
            let mut pick: Vec<usize> = (0..params.n_components).collect();
            pick.shuffle(&mut rng);
            let mut combo = pick[..k].to_vec();
            combo.sort_unstable();
            if seen.insert(combo.clone()) {
                combos.push(combo);
            }
        }

        let mut set = GlyphSet {
            components,
            classes: Vec::with_capacity(n_classes),
        };
        for (i, combo) in combos.into_iter().enumerate() {
            let label = if i < params.n_modern {
                GlyphLabel::modern(nth_name(MODERN_NAMES, i, 'm'))
            } else {
                GlyphLabel::components(combo.iter().map(|&c| set.components[c].name.clone()))
            };
            set.classes.push(GlyphClass {
                label,
                components: combo,
            });
        }
        set
    }

    pub fn component_names(&self) -> Vec<String> {
        self.components.iter().map(|c| c.name.clone()).collect()
    }

    /// Ink mask (`w × h`, row-major) of one glyph rendered with jitter.
    pub fn render_mask(&self, class: usize, w: u32, h: u32, style: &GlyphStyle, rng: &mut impl Rng) -> Vec<bool> {
        let strokes: Vec<Stroke> = self.classes[class]
            .components
            .iter()
            .flat_map(|&c| self.components[c].strokes.iter().copied())
            .collect();
        rasterize(&strokes, w, h, style, rng)
    }

    /// A tight glyph crop on a plain background, as a detector would cut it.
    pub fn render_instance(&self, class: usize, style: &GlyphStyle, noise_sigma: f64, rng: &mut impl Rng) -> GrayImage {
        let w = rng.random_range(style.cell_min..=style.cell_max);
        let h = rng.random_range(style.cell_min..=style.cell_max);
        let mask = self.render_mask(class, w, h, style, rng);
        let ink = rng.random_range(style.ink_range.0..=style.ink_range.1) as f64;
        let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("finite sigma");
        let mut img = GrayImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let base = if mask[(y * w + x) as usize] { ink } else { style.paper as f64 };
                let v = base + if noise_sigma > 0.0 { noise.sample(rng) } else { 0.0 };
                img.put_pixel(x, y, Luma([v.round().clamp(0.0, 255.0) as u8]));
            }
        }
        img
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn component_strokes(h_lane: f64, v_lane: f64, rng: &mut ChaCha8Rng) -> Vec<Stroke> {
    let tilt = |rng: &mut ChaCha8Rng| rng.random_range(-0.06..0.06);
    let horizontal = Stroke {
        from: (0.0, h_lane + tilt(rng)),
        to: (1.0, h_lane + tilt(rng)),
        spanning: Span::Horizontal,
    };
    let vertical = Stroke {
        from: (v_lane + tilt(rng), 0.0),
        to: (v_lane + tilt(rng), 1.0),
        spanning: Span::Vertical,
    };
    let cx = rng.random_range(0.2..0.8);
    let cy = rng.random_range(0.2..0.8);
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let half = rng.random_range(0.12..0.2);
    let interior = Stroke {
        from: (cx - half * angle.cos(), cy - half * angle.sin()),
        to: (cx + half * angle.cos(), cy + half * angle.sin()),
        spanning: Span::Interior,
    };
    vec![horizontal, vertical, interior]
}

/// Rendering parameters shared by instance and slip generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphStyle {
    pub cell_min: u32,
    pub cell_max: u32,
    pub thickness: f64,
    /// Maximum endpoint displacement in pixels.
    pub jitter: f64,
    pub paper: u8,
    pub ink_range: (u8, u8),
}

impl Default for GlyphStyle {
    fn default() -> Self {
        Self {
            cell_min: 34,
            cell_max: 44,
            thickness: 4.0,
            jitter: 1.5,
            paper: 205,
            ink_range: (30, 70),
        }
    }
}

fn rasterize(strokes: &[Stroke], w: u32, h: u32, style: &GlyphStyle, rng: &mut impl Rng) -> Vec<bool> {
    let t = style.thickness;
    let (wf, hf) = (w as f64, h as f64);
    // Unit coordinates map into [t/2, size - t/2] so round caps touch the edge.
    let to_px = |u: f64, size: f64| t / 2.0 + u.clamp(0.0, 1.0) * (size - t);
    let jit = |rng: &mut dyn rand::RngCore| {
        if style.jitter > 0.0 {
            rng.random_range(-style.jitter..=style.jitter)
        } else {
            0.0
        }
    };

    let segments: Vec<((f64, f64), (f64, f64))> = strokes
        .iter()
        .map(|s| {
            let mut a = (to_px(s.from.0, wf), to_px(s.from.1, hf));
            let mut b = (to_px(s.to.0, wf), to_px(s.to.1, hf));
            match s.spanning {
                Span::Horizontal => {
                    a.1 += jit(rng);
                    b.1 += jit(rng);
                }
                Span::Vertical => {
                    a.0 += jit(rng);
                    b.0 += jit(rng);
                }
                Span::Interior => {
                    a.0 += jit(rng);
                    a.1 += jit(rng);
                    b.0 += jit(rng);
                    b.1 += jit(rng);
                }
            }
            let clamp = |p: (f64, f64)| (p.0.clamp(t / 2.0, wf - t / 2.0), p.1.clamp(t / 2.0, hf - t / 2.0));
            (clamp(a), clamp(b))
        })
        .collect();

    let r = t / 2.0;
    let mut mask = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            if segments.iter().any(|&(a, b)| segment_distance(p, a, b) <= r) {
                mask[(y * w + x) as usize] = true;
            }
        }
    }
    mask
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + s * dx, a.1 + s * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipLayout {
    pub style: GlyphStyle,
    pub margin_x: u32,
    pub margin_y: u32,
    pub gap_min: u32,
    pub gap_max: u32,
    /// Horizontal wander of glyphs around the strip centre, in pixels.
    pub drift: u32,
    /// Height of a strip with no glyphs.
    pub empty_height: u32,
}

impl Default for SlipLayout {
    fn default() -> Self {
        Self {
            style: GlyphStyle::default(),
            margin_x: 10,
            margin_y: 14,
            gap_min: 8,
            gap_max: 18,
            drift: 3,
            empty_height: 64,
        }
    }
}

impl SlipLayout {
    /// Every gap exactly `gap` pixels.
    pub fn with_fixed_gap(gap: u32) -> Self {
        Self {
            gap_min: gap,
            gap_max: gap,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSlip {
    pub image: GrayImage,
    /// Tight ink boxes, top to bottom.
    pub boxes: Vec<BoundingBox>,
    pub labels: Vec<GlyphLabel>,
    pub classes: Vec<usize>,
    /// Gold component names per glyph.
    pub components: Vec<Vec<String>>,
}

/// Renders `n_chars` random glyphs from `set` down a single-column strip.
pub fn generate_synthetic_slip(
    set: &GlyphSet,
    n_chars: usize,
    layout: &SlipLayout,
    noise_sigma: f64,
    seed: u64,
) -> SyntheticSlip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let style = &layout.style;

    struct Placed {
        class: usize,
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        mask: Vec<bool>,
        ink: u8,
    }

    let width = style.cell_max + 2 * layout.margin_x;
    let mut placed = Vec::with_capacity(n_chars);
    let mut y = layout.margin_y;
    for i in 0..n_chars {
        if i > 0 {
            y += rng.random_range(layout.gap_min..=layout.gap_max);
        }
        let class = rng.random_range(0..set.classes.len());
        let w = rng.random_range(style.cell_min..=style.cell_max);
        let h = rng.random_range(style.cell_min..=style.cell_max);
        let slack = style.cell_max - w;
        let centre = layout.margin_x + slack / 2;
        let lo = centre.saturating_sub(layout.drift);
        let hi = (centre + layout.drift).min(width - w);
        let x = rng.random_range(lo..=hi);
        let mask = set.render_mask(class, w, h, style, &mut rng);
        let ink = rng.random_range(style.ink_range.0..=style.ink_range.1);
        placed.push(Placed { class, x, y, w, h, mask, ink });
        y += h;
    }
    let height = if n_chars == 0 { layout.empty_height } else { y + layout.margin_y };

    let fibres = fibre_texture(width as usize, &mut rng);
    let mut base = vec![style.paper as f64; (width * height) as usize];
    for yy in 0..height as usize {
        let row_shade = 4.0 * ((yy as f64) / 37.0).sin();
        for xx in 0..width as usize {
            base[yy * width as usize + xx] += fibres[xx] + row_shade;
        }
    }

    let mut boxes = Vec::with_capacity(n_chars);
    for p in &placed {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for gy in 0..p.h {
            for gx in 0..p.w {
                if p.mask[(gy * p.w + gx) as usize] {
                    let (sx, sy) = (p.x + gx, p.y + gy);
                    base[(sy * width + sx) as usize] = p.ink as f64;
                    x0 = x0.min(sx);
                    y0 = y0.min(sy);
                    x1 = x1.max(sx);
                    y1 = y1.max(sy);
                }
            }
        }
        boxes.push(BoundingBox::new(
            x0 as f64,
            y0 as f64,
            (x1 - x0 + 1) as f64,
            (y1 - y0 + 1) as f64,
        ));
    }

    let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("finite sigma");
    let mut image = GrayImage::new(width, height);
    for (i, px) in image.pixels_mut().enumerate() {
        let v = base[i] + if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        *px = Luma([v.round().clamp(0.0, 255.0) as u8]);
    }

    SyntheticSlip {
        image,
        boxes,
        labels: placed.iter().map(|p| set.classes[p.class].label.clone()).collect(),
        classes: placed.iter().map(|p| p.class).collect(),
        components: placed
            .iter()
            .map(|p| {
                set.classes[p.class]
                    .component_names(set)
                    .into_iter()
                    .map(String::from)
                    .collect()
            })
            .collect(),
    }
}

/// Column shading: a bounded random walk imitating bamboo fibres.
fn fibre_texture(width: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut level: f64 = 0.0;
    (0..width)
        .map(|_| {
            level = (level + rng.random_range(-3.0..3.0)).clamp(-10.0, 10.0);
            level
        })
        .collect()
}

/// Labelled glyph crops: `per_class` instances of every class, in class order.
pub fn generate_glyph_instances(
    set: &GlyphSet,
    per_class: usize,
    style: &GlyphStyle,
    noise_sigma: f64,
    seed: u64,
) -> Vec<(usize, GrayImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(set.classes.len() * per_class);
    for class in 0..set.classes.len() {
        for _ in 0..per_class {
            out.push((class, set.render_instance(class, style, noise_sigma, &mut rng)));
        }
    }
    out
}
