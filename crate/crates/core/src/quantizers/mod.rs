//! Codebooks, Voronoi and compander quantizers, LBG training, rejection
//! sampling from gridded targets, per-cell statistics and the
//! detection-oriented design pipeline.

mod compander;
mod design;
mod lbg;
mod sampling;
mod stats;

pub use compander::{compander_from_density, CompanderQuantizer};
pub use design::{design_detection_quantizer, gupta_hero_quantizer, mse_quantizer, DesignConfig, DesignOutput};
pub use lbg::{lbg_train, LbgConfig, LbgResult};
pub use sampling::{rejection_sample, RejectionSample};
pub use stats::{cell_stats, CellStats};

use crate::error::{invalid, Error, Result};
use crate::processes::{DomainBox, ObservationWindow};
use std::fmt::Write as _;

/// An `N`-cell partition of a box.
pub trait CellPartition: Sync {
    fn num_cells(&self) -> usize;
    fn dim(&self) -> usize;
    fn domain(&self) -> &DomainBox;
    /// Index of the cell containing `y`; errors outside the domain.
    fn cell_of(&self, y: &[f64]) -> Result<usize>;
    /// Cell intervals `[lo, hi)` by index, for scalar partitions.
    fn intervals(&self) -> Option<Vec<(f64, f64)>>;
    /// Axis-aligned box containing each cell.
    fn bounding_boxes(&self) -> Vec<DomainBox>;

    /// Cell sequence of `window`; with `clamp`, samples outside the domain are
    /// first projected onto it.
    fn quantize_window(&self, window: &ObservationWindow, clamp: bool) -> Result<Vec<usize>> {
        if window.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: window.dim() });
        }
        let mut y = vec![0.0; self.dim()];
        window
            .samples()
            .map(|s| {
                y.copy_from_slice(s);
                if clamp {
                    self.domain().clamp(&mut y);
                }
                self.cell_of(&y)
            })
            .collect()
    }
}

/// `N` distinct points inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    points: Vec<f64>,
    domain: DomainBox,
}

impl Codebook {
    pub fn new(points: Vec<Vec<f64>>, domain: DomainBox) -> Result<Self> {
        let dim = domain.dim();
        if points.is_empty() {
            return invalid("codebook needs at least one point");
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0),
            });
        }
        Self::from_flat(dim, points.concat(), domain)
    }

    pub(crate) fn from_flat(dim: usize, points: Vec<f64>, domain: DomainBox) -> Result<Self> {
        let cb = Codebook { dim, points, domain };
        for (j, p) in cb.points().enumerate() {
            if p.iter().any(|v| !v.is_finite()) || !cb.domain.contains(p) {
                return Err(Error::OutOfDomain(format!("codepoint {j} = {p:?} lies outside the domain")));
            }
        }
        let n = cb.len();
        for i in 0..n {
            for j in i + 1..n {
                if dist2(cb.point(i), cb.point(j)).sqrt() <= 1e-12 {
                    return invalid(format!("codepoints {i} and {j} coincide"));
                }
            }
        }
        Ok(cb)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// CSV with header `index,x1,...,xd`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index");
        for a in 0..self.dim {
            let _ = write!(s, ",x{}", a + 1);
        }
        s.push('\n');
        for (j, p) in self.points().enumerate() {
            let _ = write!(s, "{j}");
            for v in p {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str, domain: DomainBox) -> Result<Self> {
        let dim = domain.dim();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let expected: Vec<String> =
            std::iter::once("index".to_string()).chain((1..=dim).map(|a| format!("x{a}"))).collect();
        match lines.next() {
            Some((_, h)) if h.split(',').map(str::trim).eq(expected.iter().map(String::as_str)) => {}
            Some((i, _)) => {
                return Err(Error::Parse { line: i + 1, message: format!("expected header {}", expected.join(",")) })
            }
            None => return Err(Error::Parse { line: 1, message: "empty codebook file".into() }),
        }
        let mut pts = Vec::new();
        for (i, l) in lines {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} fields, found {}", dim + 1, fields.len()),
                });
            }
            let idx: usize =
                fields[0].parse().map_err(|_| Error::Parse { line: i + 1, message: "bad index".into() })?;
            if idx != pts.len() / dim {
                return Err(Error::Parse { line: i + 1, message: format!("expected index {}", pts.len() / dim) });
            }
            for f in &fields[1..] {
                pts.push(
                    f.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, message: format!("bad number {f:?}") })?,
                );
            }
        }
        Self::from_flat(dim, pts, domain)
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest-codepoint partition; ties go to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiQuantizer {
    codebook: Codebook,
}

impl VoronoiQuantizer {
    pub fn new(codebook: Codebook) -> Self {
        VoronoiQuantizer { codebook }
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    /// Nearest codepoint without the domain check.
    pub(crate) fn nearest_unchecked(&self, y: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, p) in self.codebook.points().enumerate() {
            let d = dist2(p, y);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }

    pub fn nearest_cell(&self, y: &[f64]) -> Result<usize> {
        if y.len() != self.codebook.dim {
            return Err(Error::DimensionMismatch { expected: self.codebook.dim, got: y.len() });
        }
        if !self.codebook.domain.contains(y) {
            return Err(Error::OutOfDomain(format!("{y:?} lies outside the quantizer domain")));
        }
        Ok(self.nearest_unchecked(y).0)
    }
}

impl CellPartition for VoronoiQuantizer {
    fn num_cells(&self) -> usize {
        self.codebook.len()
    }

    fn dim(&self) -> usize {
        self.codebook.dim
    }

    fn domain(&self) -> &DomainBox {
        &self.codebook.domain
    }

    fn cell_of(&self, y: &[f64]) -> Result<usize> {
        self.nearest_cell(y)
    }

    fn intervals(&self) -> Option<Vec<(f64, f64)>> {
        if self.dim() != 1 {
            return None;
        }
        let pts = &self.codebook.points;
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| pts[a].total_cmp(&pts[b]));
        let (lo, hi) = (self.domain().lo()[0], self.domain().hi()[0]);
        let mut out = vec![(0.0, 0.0); pts.len()];
        for (r, &j) in order.iter().enumerate() {
            let left = if r == 0 { lo } else { 0.5 * (pts[order[r - 1]] + pts[j]) };
            let right = if r + 1 == order.len() { hi } else { 0.5 * (pts[j] + pts[order[r + 1]]) };
            out[j] = (left, right);
        }
        Some(out)
    }

    fn bounding_boxes(&self) -> Vec<DomainBox> {
        if let Some(iv) = self.intervals() {
            return iv.into_iter().map(|(a, b)| DomainBox::new(vec![a], vec![b]).expect("ordered interval")).collect();
        }
        lattice_bounding_boxes(self)
    }
}

// Cell extents from a lattice scan, padded by one lattice step.
fn lattice_bounding_boxes(q: &VoronoiQuantizer) -> Vec<DomainBox> {
    let d = q.dim();
    let dom = q.domain();
    let per_axis: usize = match d {
        1 | 2 => 256,
        3 => 48,
        _ => 12,
    };
    let steps: Vec<f64> = (0..d).map(|a| (dom.hi()[a] - dom.lo()[a]) / per_axis as f64).collect();
    let n = q.num_cells();
    let mut lo = vec![f64::INFINITY; n * d];
    let mut hi = vec![f64::NEG_INFINITY; n * d];
    let total = per_axis.pow(d as u32);
    let mut y = vec![0.0; d];
    for flat in 0..total {
        let mut r = flat;
        for a in (0..d).rev() {
            y[a] = dom.lo()[a] + (r % per_axis) as f64 * steps[a] + 0.5 * steps[a];
            r /= per_axis;
        }
        let j = q.nearest_unchecked(&y).0;
        for a in 0..d {
            lo[j * d + a] = lo[j * d + a].min(y[a]);
            hi[j * d + a] = hi[j * d + a].max(y[a]);
        }
    }
    (0..n)
        .map(|j| {
            let p = q.codebook.point(j);
            let l: Vec<f64> = (0..d)
                .map(|a| lo[j * d + a].min(p[a]) - steps[a])
                .enumerate()
                .map(|(a, v)| v.max(dom.lo()[a]))
                .collect();
            let h: Vec<f64> = (0..d)
                .map(|a| hi[j * d + a].max(p[a]) + steps[a])
                .enumerate()
                .map(|(a, v)| v.min(dom.hi()[a]))
                .collect();
            DomainBox::new(l, h).expect("padded cell box is nonempty")
        })
        .collect()
}

/// Product grid of cell centres, `per_axis[a]` cells along axis `a`, ordered
/// row-major with the first axis slowest.
pub fn uniform_quantizer(domain: &DomainBox, per_axis: &[usize]) -> Result<VoronoiQuantizer> {
    let d = domain.dim();
    if per_axis.len() != d || per_axis.iter().any(|&n| n == 0) {
        return invalid("one positive cell count per axis is required");
    }
    let total: usize = per_axis.iter().product();
    let mut pts = Vec::with_capacity(total * d);
    for flat in 0..total {
        let mut r = flat;
        let mut idx = vec![0; d];
        for a in (0..d).rev() {
            idx[a] = r % per_axis[a];
            r /= per_axis[a];
        }
        for a in 0..d {
            let w = (domain.hi()[a] - domain.lo()[a]) / per_axis[a] as f64;
            pts.push(domain.lo()[a] + (idx[a] as f64 + 0.5) * w);
        }
    }
    Ok(VoronoiQuantizer::new(Codebook::from_flat(d, pts, domain.clone())?))
}
