use super::{CellPartition, VoronoiQuantizer};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{substream, tag};
use nalgebra::DMatrix;
use rand::Rng as _;

/// Monte-Carlo cell geometry of a quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub volume: Vec<f64>,
    pub centroid: Vec<Vec<f64>>,
    /// `V^{-(1+2/d)} ∫_cell (y - ξ)(y - ξ)ᵀ dy` about the codepoint `ξ`.
    pub covariation: Vec<DMatrix<f64>>,
    /// Largest distance from the codepoint to an in-cell sample.
    pub diameter_bound: Vec<f64>,
    pub hits: Vec<usize>,
}

impl CellStats {
    /// `ζ_{N,j} = 1 / (N V_j)`.
    pub fn point_density(&self) -> Vec<f64> {
        let n = self.volume.len() as f64;
        self.volume.iter().map(|v| 1.0 / (n * v)).collect()
    }
}

const STRATUM: usize = 1 << 14;

/// Per-cell volume, centroid, covariation and diameter from at least
/// `mc_points` jittered-stratified uniform draws over the domain (one draw per
/// lattice stratum). Requires `mc_points ≥ 10⁴ N`.
pub fn cell_stats(q: &VoronoiQuantizer, mc_points: usize, seed: u64, execution: Execution) -> Result<CellStats> {
    let n = q.num_cells();
    let d = q.dim();
    if mc_points < 10_000 * n {
        return Err(Error::InsufficientSamples { needed: 10_000 * n, got: mc_points });
    }
    let dom = q.domain().clone();
    let per_axis = (mc_points as f64).powf(1.0 / d as f64).ceil() as usize;
    let total_points = per_axis.pow(d as u32);
    let widths: Vec<f64> = (0..d).map(|a| (dom.hi()[a] - dom.lo()[a]) / per_axis as f64).collect();
    let strata = total_points.div_ceil(STRATUM);
    struct Acc {
        hits: Vec<usize>,
        sum: Vec<f64>,
        outer: Vec<f64>,
        diam: Vec<f64>,
    }
    let parts = execution.map(strata, |s| {
        let mut rng = substream(seed, &[tag::CELL_STATS, s as u64]);
        let mut acc = Acc { hits: vec![0; n], sum: vec![0.0; n * d], outer: vec![0.0; n * d * d], diam: vec![0.0; n] };
        let mut y = vec![0.0; d];
        for cell in s * STRATUM..((s + 1) * STRATUM).min(total_points) {
            let mut r = cell;
            for a in (0..d).rev() {
                let u: f64 = rng.random();
                y[a] = dom.lo()[a] + ((r % per_axis) as f64 + u) * widths[a];
                r /= per_axis;
            }
            let (j, d2) = q.nearest_unchecked(&y);
            acc.hits[j] += 1;
            acc.diam[j] = acc.diam[j].max(d2.sqrt());
            let p = q.codebook().point(j);
            for a in 0..d {
                acc.sum[j * d + a] += y[a];
                for b in 0..d {
                    acc.outer[(j * d + a) * d + b] += (y[a] - p[a]) * (y[b] - p[b]);
                }
            }
        }
        acc
    });
    let mut hits = vec![0usize; n];
    let mut sum = vec![0.0; n * d];
    let mut outer = vec![0.0; n * d * d];
    let mut diam = vec![0.0f64; n];
    for p in parts {
        for j in 0..n {
            hits[j] += p.hits[j];
            diam[j] = diam[j].max(p.diam[j]);
        }
        sum.iter_mut().zip(&p.sum).for_each(|(a, b)| *a += b);
        outer.iter_mut().zip(&p.outer).for_each(|(a, b)| *a += b);
    }
    let empty: Vec<usize> = (0..n).filter(|&j| hits[j] == 0).collect();
    if !empty.is_empty() {
        return Err(Error::EmptyCells(empty));
    }
    let vol = dom.volume();
    let total = total_points as f64;
    let mut volume = Vec::with_capacity(n);
    let mut centroid = Vec::with_capacity(n);
    let mut covariation = Vec::with_capacity(n);
    for j in 0..n {
        let h = hits[j] as f64;
        let v = vol * h / total;
        volume.push(v);
        centroid.push((0..d).map(|a| sum[j * d + a] / h).collect());
        let m = DMatrix::from_row_slice(d, d, &outer[j * d * d..(j + 1) * d * d]) * (1.0 / h);
        let m = (&m + m.transpose()) * (0.5 * v.powf(-2.0 / d as f64));
        covariation.push(m);
    }
    Ok(CellStats { volume, centroid, covariation, diameter_bound: diam, hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::DomainBox;
    use crate::quantizers::uniform_quantizer;

    #[test]
    fn scalar_uniform_cells_have_one_twelfth() {
        let q = uniform_quantizer(&DomainBox::new(vec![0.0], vec![1.0]).unwrap(), &[8]).unwrap();
        let s = cell_stats(&q, 80_000, 1, Execution::default()).unwrap();
        for m in &s.covariation {
            assert!((m[(0, 0)] - 1.0 / 12.0).abs() < 0.02 / 12.0, "{}", m[(0, 0)]);
        }
        let total: f64 = s.point_density().iter().zip(&s.volume).map(|(z, v)| z * v).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_cells_have_isotropic_twelfth() {
        let q = uniform_quantizer(&DomainBox::cube(2, 8.0).unwrap(), &[4, 4]).unwrap();
        let s = cell_stats(&q, 160_000, 2, Execution::default()).unwrap();
        for m in &s.covariation {
            assert!((m[(0, 0)] - 1.0 / 12.0).abs() < 0.03 / 12.0);
            assert!((m[(1, 1)] - 1.0 / 12.0).abs() < 0.03 / 12.0);
            assert!(m[(0, 1)].abs() < 0.03 / 12.0);
            assert_eq!(m[(0, 1)], m[(1, 0)]);
        }
        let vsum: f64 = s.volume.iter().sum();
        assert!((vsum - 256.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points_rejected() {
        let q = uniform_quantizer(&DomainBox::cube(1, 1.0).unwrap(), &[4]).unwrap();
        assert!(cell_stats(&q, 1000, 0, Execution::default()).is_err());
    }
}
