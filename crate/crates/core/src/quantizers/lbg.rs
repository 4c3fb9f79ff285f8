use super::{dist2, Codebook, VoronoiQuantizer};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::processes::DomainBox;
use crate::rng::{substream, tag};
use rand::seq::SliceRandom;
use rand::Rng as _;

const ASSIGN_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbgConfig {
    pub cells: usize,
    pub seed: u64,
    /// Stop when the relative MSE improvement drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub execution: Execution,
}

impl LbgConfig {
    pub fn new(cells: usize, seed: u64) -> Self {
        LbgConfig { cells, seed, tol: 1e-6, max_iter: 200, execution: Execution::default() }
    }
}

#[derive(Debug, Clone)]
pub struct LbgResult {
    pub quantizer: VoronoiQuantizer,
    /// Training MSE after each assignment step.
    pub mse_history: Vec<f64>,
    pub iterations: usize,
    /// The last assignment reproduced the previous one.
    pub fixed_point: bool,
}

/// Lloyd iterations on `samples` (flat, `dim` per sample) from a random subset
/// of distinct samples.
pub fn lbg_train(samples: &[f64], dim: usize, domain: &DomainBox, config: &LbgConfig) -> Result<LbgResult> {
    let n_cells = config.cells;
    if dim == 0 || samples.len() % dim != 0 || domain.dim() != dim {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: dim });
    }
    if n_cells == 0 {
        return invalid("at least one cell is required");
    }
    let n = samples.len() / dim;
    if n < 10 * n_cells {
        return Err(Error::InsufficientSamples { needed: 10 * n_cells, got: n });
    }
    if let Some(i) = samples.chunks_exact(dim).position(|s| !domain.contains(s)) {
        return Err(Error::OutOfDomain(format!("training sample {i} lies outside the domain")));
    }
    let sample = |i: usize| &samples[i * dim..(i + 1) * dim];
    let mut rng = substream(config.seed, &[tag::LBG]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut points: Vec<f64> = Vec::with_capacity(n_cells * dim);
    for &i in &order {
        if points.len() == n_cells * dim {
            break;
        }
        let s = sample(i);
        if points.chunks_exact(dim).all(|p| dist2(p, s) > 0.0) {
            points.extend_from_slice(s);
        }
    }
    if points.len() < n_cells * dim {
        return Err(Error::InsufficientSamples { needed: n_cells, got: points.len() / dim });
    }

    let mut history = Vec::new();
    let mut prev_labels: Option<Vec<usize>> = None;
    let mut fixed_point = false;
    let mut iterations = 0;
    let n_chunks = n.div_ceil(ASSIGN_CHUNK);
    while iterations < config.max_iter {
        iterations += 1;
        let pts = &points;
        let chunks = config.execution.map(n_chunks, |c| {
            let (s, e) = (c * ASSIGN_CHUNK, ((c + 1) * ASSIGN_CHUNK).min(n));
            (s..e).map(|i| nearest(pts, dim, sample(i))).collect::<Vec<_>>()
        });
        let assign: Vec<(usize, f64)> = chunks.into_iter().flatten().collect();
        let labels: Vec<usize> = assign.iter().map(|a| a.0).collect();
        let mse = assign.iter().map(|a| a.1).sum::<f64>() / n as f64;
        history.push(mse);
        if prev_labels.as_ref() == Some(&labels) {
            fixed_point = true;
            break;
        }
        if history.len() >= 2 {
            let prev = history[history.len() - 2];
            if prev - mse <= config.tol * prev {
                break;
            }
        }
        update_centroids(samples, dim, &labels, &assign, &mut points, n_cells, &mut rng);
        prev_labels = Some(labels);
    }
    let cb = Codebook::from_flat(dim, points, domain.clone())?;
    Ok(LbgResult { quantizer: VoronoiQuantizer::new(cb), mse_history: history, iterations, fixed_point })
}

fn nearest(points: &[f64], dim: usize, y: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, p) in points.chunks_exact(dim).enumerate() {
        let d = dist2(p, y);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn update_centroids(
    samples: &[f64],
    dim: usize,
    labels: &[usize],
    assign: &[(usize, f64)],
    points: &mut [f64],
    n_cells: usize,
    rng: &mut crate::rng::Rng,
) {
    let mut sums = vec![0.0; n_cells * dim];
    let mut counts = vec![0usize; n_cells];
    let mut distortion = vec![0.0; n_cells];
    for (i, &j) in labels.iter().enumerate() {
        counts[j] += 1;
        distortion[j] += assign[i].1;
        for a in 0..dim {
            sums[j * dim + a] += samples[i * dim + a];
        }
    }
    for j in 0..n_cells {
        if counts[j] > 0 {
            for a in 0..dim {
                points[j * dim + a] = sums[j * dim + a] / counts[j] as f64;
            }
        }
    }
    // empty cells: split the cell with the largest total distortion
    for j in 0..n_cells {
        if counts[j] > 0 {
            continue;
        }
        let donor = (0..n_cells)
            .filter(|&c| counts[c] > 0)
            .max_by(|&a, &b| distortion[a].total_cmp(&distortion[b]).then(b.cmp(&a)))
            .expect("at least one occupied cell");
        let radius = (distortion[donor] / counts[donor] as f64).sqrt().max(1e-9);
        for a in 0..dim {
            let u: f64 = rng.random_range(-1.0..1.0);
            points[j * dim + a] = points[donor * dim + a] + 1e-6 * radius * u;
        }
        distortion[donor] *= 0.5;
        counts[j] = 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizers::CellPartition;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn separated_clusters() {
        let mut rng = substream(1, &[]);
        let mut s = Vec::new();
        for i in 0..2000 {
            let c = if i % 2 == 0 { 5.0 } else { -5.0 };
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            s.extend([c + 0.3 * x, 0.3 * y]);
        }
        let dom = DomainBox::cube(2, 10.0).unwrap();
        let r = lbg_train(&s, 2, &dom, &LbgConfig::new(2, 3)).unwrap();
        let mut xs: Vec<f64> = r.quantizer.codebook().points().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 5.0).abs() < 0.1 && (xs[1] - 5.0).abs() < 0.1);
    }

    #[test]
    fn distinct_sample_count_equal_to_cells_gives_zero_mse() {
        let base = [0.0, 1.0, 2.5, 4.0];
        let s: Vec<f64> = (0..40).map(|i| base[i % 4]).collect();
        let r = lbg_train(&s, 1, &DomainBox::cube(1, 5.0).unwrap(), &LbgConfig::new(4, 0)).unwrap();
        assert_eq!(*r.mse_history.last().unwrap(), 0.0);
        let mut pts = r.quantizer.codebook().as_flat().to_vec();
        pts.sort_by(f64::total_cmp);
        assert_eq!(pts, base);
    }

    #[test]
    fn mse_nonincreasing_and_fixed_point() {
        let mut rng = substream(2, &[]);
        let s: Vec<f64> = (0..4000)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v.clamp(-4.0, 4.0)
            })
            .collect();
        let dom = DomainBox::cube(1, 4.0).unwrap();
        let cfg = LbgConfig { tol: 0.0, max_iter: 1000, ..LbgConfig::new(8, 5) };
        let r = lbg_train(&s, 1, &dom, &cfg).unwrap();
        assert!(r.mse_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(r.fixed_point);
        // reassigning to the final codebook reproduces its centroids
        let q = &r.quantizer;
        let mut sums = vec![0.0; 8];
        let mut counts = vec![0usize; 8];
        for v in &s {
            let j = q.cell_of(&[*v]).unwrap();
            sums[j] += v;
            counts[j] += 1;
        }
        for j in 0..8 {
            assert!((sums[j] / counts[j] as f64 - q.codebook().point(j)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn insufficient_samples_rejected() {
        let s = vec![0.0; 50];
        let r = lbg_train(&s, 1, &DomainBox::cube(1, 1.0).unwrap(), &LbgConfig::new(8, 0));
        assert!(matches!(r, Err(Error::InsufficientSamples { needed: 80, got: 50 })));
    }

    #[test]
    fn policies_agree() {
        let mut rng = substream(6, &[]);
        let s: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dom = DomainBox::cube(2, 1.0).unwrap();
        let a =
            lbg_train(&s, 2, &dom, &LbgConfig { execution: Execution::Sequential, ..LbgConfig::new(16, 1) }).unwrap();
        let b = lbg_train(&s, 2, &dom, &LbgConfig { execution: Execution::Parallel, ..LbgConfig::new(16, 1) }).unwrap();
        assert_eq!(a.quantizer, b.quantizer);
        assert_eq!(a.mse_history, b.mse_history);
    }
}
