use super::LOG_FLOOR;
use crate::error::{invalid, Error, Result};
use crate::processes::{GaussKind, GaussLinearModel, Hypothesis};
use crate::quadrature::{norm_cdf, normal_interval_mass};
use crate::quantizers::CellPartition;

/// Resolution of the latent-state grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentGrid {
    pub points: usize,
    /// Half-width in latent standard deviations.
    pub span: f64,
}

impl Default for LatentGrid {
    fn default() -> Self {
        LatentGrid { points: 41, span: 5.0 }
    }
}

// quadrature nodes per axis for Gaussian masses of two-dimensional cells
const EMISSION_NODES: usize = 24;
const MARGINAL_NODES: usize = 200;
const EMISSION_SPAN: f64 = 6.0;

/// Quantized-observation likelihood of a Gaussian model by forward filtering
/// on a discretized latent state. H0 observations are white, so their cell
/// masses are exact products.
#[derive(Debug, Clone)]
pub struct GaussCellFilter {
    num_cells: usize,
    h0_log_mass: Vec<f64>,
    latent: Latent,
}

#[derive(Debug, Clone)]
enum Latent {
    /// Per-axis AR(1) latent grid with separable transitions; emission
    /// masses indexed `[cell][flat latent]`.
    Ar1 { g: usize, dim: usize, init: Vec<f64>, trans: Vec<f64>, emission: Vec<f64> },
    /// Shift register of the last `L` innovations; emission masses indexed
    /// `[cell][u_new, u_{t}, ..., u_{t-L+1}]`.
    Ma { g: usize, order: usize, weights: Vec<f64>, emission: Vec<f64> },
}

/// Cell masses of `N(mean, sd²)` with the two outermost intervals extended to infinity.
fn interval_masses(iv: &[(f64, f64)], lo: f64, hi: f64, mean: f64, sd: f64, out: &mut [f64]) {
    for (j, &(a, b)) in iv.iter().enumerate() {
        let a = if a <= lo { f64::NEG_INFINITY } else { a };
        let b = if b >= hi { f64::INFINITY } else { b };
        out[j] = if a == f64::NEG_INFINITY {
            norm_cdf((b - mean) / sd)
        } else if b == f64::INFINITY {
            norm_cdf((mean - a) / sd)
        } else {
            normal_interval_mass(a, b, mean, sd)
        };
    }
}

/// Masses of consecutive grid cells around `nodes` under `N(mean, sd²)`.
fn node_masses(nodes: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    let g = nodes.len();
    let mut iv = Vec::with_capacity(g);
    for i in 0..g {
        let a = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (nodes[i - 1] + nodes[i]) };
        let b = if i + 1 == g { f64::INFINITY } else { 0.5 * (nodes[i] + nodes[i + 1]) };
        iv.push((a, b));
    }
    let mut m = vec![0.0; g];
    interval_masses(&iv, f64::NEG_INFINITY, f64::INFINITY, mean, sd, &mut m);
    let s: f64 = m.iter().sum();
    m.iter_mut().for_each(|v| *v /= s);
    m
}

fn grid_nodes(g: usize, half: f64) -> Vec<f64> {
    (0..g).map(|i| -half + 2.0 * half * i as f64 / (g - 1) as f64).collect()
}

/// Cell masses of an isotropic Gaussian over a partition of any dimension,
/// by a product midpoint rule of `nodes` masses per axis.
fn gaussian_cell_masses(p: &dyn CellPartition, mean: &[f64], sd: f64, nodes: usize, out: &mut [f64]) -> Result<()> {
    let d = p.dim();
    let z = grid_nodes(nodes, EMISSION_SPAN * (nodes - 1) as f64 / nodes as f64);
    let w = node_masses(&z, 0.0, 1.0);
    out.iter_mut().for_each(|v| *v = 0.0);
    let total = nodes.pow(d as u32);
    let mut y = vec![0.0; d];
    for flat in 0..total {
        let mut r = flat;
        let mut weight = 1.0;
        for a in (0..d).rev() {
            let i = r % nodes;
            r /= nodes;
            y[a] = mean[a] + sd * z[i];
            weight *= w[i];
        }
        p.domain().clamp(&mut y);
        out[p.cell_of(&y)?] += weight;
    }
    Ok(())
}

impl GaussCellFilter {
    pub fn new(model: &GaussLinearModel, partition: &dyn CellPartition, grid: LatentGrid) -> Result<Self> {
        let d = model.dim();
        if partition.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: partition.dim() });
        }
        if grid.points < 2 || !(grid.span > 0.0) {
            return invalid("latent grid needs at least two points and a positive span");
        }
        let n = partition.num_cells();
        let g = grid.points;
        let dom = partition.domain();
        let intervals = partition.intervals();
        let noise_sd = model.noise_var().sqrt();

        let mut h0 = vec![0.0; n];
        let sd0 = model.marginal_var(Hypothesis::H0).sqrt();
        match &intervals {
            Some(iv) => interval_masses(iv, dom.lo()[0], dom.hi()[0], 0.0, sd0, &mut h0),
            None => gaussian_cell_masses(partition, &vec![0.0; d], sd0, MARGINAL_NODES, &mut h0)?,
        }
        let h0_log_mass = h0.iter().map(|m| m.ln().max(LOG_FLOOR)).collect();

        let latent = match model.kind() {
            GaussKind::Ar1 { a } => {
                let sx = model.signal_var().sqrt();
                let nodes = grid_nodes(g, grid.span * sx);
                let init = node_masses(&nodes, 0.0, sx);
                let step_sd = ((1.0 - a * a) * model.signal_var()).sqrt();
                let mut trans = Vec::with_capacity(g * g);
                for &x in &nodes {
                    trans.extend(node_masses(&nodes, a * x, step_sd));
                }
                let states = g.pow(d as u32);
                let mut emission = vec![0.0; n * states];
                let mut buf = vec![0.0; n];
                let mut mean = vec![0.0; d];
                for s in 0..states {
                    let mut r = s;
                    for ax in (0..d).rev() {
                        mean[ax] = nodes[r % g];
                        r /= g;
                    }
                    match &intervals {
                        Some(iv) => interval_masses(iv, dom.lo()[0], dom.hi()[0], mean[0], noise_sd, &mut buf),
                        None => gaussian_cell_masses(partition, &mean, noise_sd, EMISSION_NODES, &mut buf)?,
                    }
                    for j in 0..n {
                        emission[j * states + s] = buf[j];
                    }
                }
                Latent::Ar1 { g, dim: d, init, trans, emission }
            }
            GaussKind::Ma { taps } => {
                let iv = intervals
                    .ok_or_else(|| Error::Unsupported("moving-average filter needs a scalar partition".into()))?;
                let order = taps.len() - 1;
                let nodes = grid_nodes(g, grid.span);
                let weights = node_masses(&nodes, 0.0, 1.0);
                let combos = g.pow(order as u32 + 1);
                let mut emission = vec![0.0; n * combos];
                let mut buf = vec![0.0; n];
                for c in 0..combos {
                    // digits of c, slowest first: u_new, u_t, ..., u_{t-L+1}
                    let mut r = c;
                    let mut mean = 0.0;
                    for l in (0..=order).rev() {
                        mean += taps[l] * nodes[r % g];
                        r /= g;
                    }
                    interval_masses(&iv, dom.lo()[0], dom.hi()[0], mean, noise_sd, &mut buf);
                    for j in 0..n {
                        emission[j * combos + c] = buf[j];
                    }
                }
                Latent::Ma { g, order, weights, emission }
            }
        };
        Ok(GaussCellFilter { num_cells: n, h0_log_mass, latent })
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// `log P_hyp[j_1..j_t]` for every prefix and whether any step was floored.
    pub fn prefix_log_prob(&self, hyp: Hypothesis, cells: &[usize]) -> (Vec<f64>, bool) {
        if hyp == Hypothesis::H0 {
            let mut acc = 0.0;
            let mut floored = false;
            let v = cells
                .iter()
                .map(|&j| {
                    floored |= self.h0_log_mass[j] <= LOG_FLOOR;
                    acc += self.h0_log_mass[j];
                    acc
                })
                .collect();
            return (v, floored);
        }
        match &self.latent {
            Latent::Ar1 { g, dim, init, trans, emission } => ar1_forward(*g, *dim, init, trans, emission, cells),
            Latent::Ma { g, order, weights, emission } => ma_forward(*g, *order, weights, emission, cells),
        }
    }
}

fn normalize_step(alpha: &mut [f64], acc: &mut f64, floored: &mut bool, fallback: &[f64]) {
    let c: f64 = alpha.iter().sum();
    if c > 0.0 && c.ln() > LOG_FLOOR {
        alpha.iter_mut().for_each(|a| *a /= c);
        *acc += c.ln();
    } else {
        *floored = true;
        *acc += LOG_FLOOR;
        alpha.copy_from_slice(fallback);
    }
}

fn ar1_forward(g: usize, d: usize, init: &[f64], trans: &[f64], emission: &[f64], cells: &[usize]) -> (Vec<f64>, bool) {
    let states = g.pow(d as u32);
    let mut alpha: Vec<f64> = (0..states)
        .map(|s| {
            let mut r = s;
            let mut w = 1.0;
            for _ in 0..d {
                w *= init[r % g];
                r /= g;
            }
            w
        })
        .collect();
    let mut tmp = vec![0.0; states];
    let mut out = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    let mut floored = false;
    for (t, &j) in cells.iter().enumerate() {
        if t > 0 {
            // apply the per-axis kernel along each axis in turn
            let mut stride = 1;
            for _ in 0..d {
                tmp.iter_mut().for_each(|v| *v = 0.0);
                for s in 0..states {
                    let a = alpha[s];
                    if a == 0.0 {
                        continue;
                    }
                    let i = (s / stride) % g;
                    let base = s - i * stride;
                    let row = &trans[i * g..(i + 1) * g];
                    for (i2, w) in row.iter().enumerate() {
                        tmp[base + i2 * stride] += a * w;
                    }
                }
                std::mem::swap(&mut alpha, &mut tmp);
                stride *= g;
            }
        }
        let predicted = alpha.clone();
        let e = &emission[j * states..(j + 1) * states];
        alpha.iter_mut().zip(e).for_each(|(a, w)| *a *= w);
        normalize_step(&mut alpha, &mut acc, &mut floored, &predicted);
        out.push(acc);
    }
    (out, floored)
}

fn ma_forward(g: usize, order: usize, weights: &[f64], emission: &[f64], cells: &[usize]) -> (Vec<f64>, bool) {
    let states = g.pow(order as u32);
    let combos = states * g;
    let mut alpha: Vec<f64> = (0..states)
        .map(|s| {
            let mut r = s;
            let mut w = 1.0;
            for _ in 0..order {
                w *= weights[r % g];
                r /= g;
            }
            w
        })
        .collect();
    let mut next = vec![0.0; states];
    let mut out = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    let mut floored = false;
    let drop = if order == 0 { 1 } else { states / g };
    for &j in cells {
        let e = &emission[j * combos..(j + 1) * combos];
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut predicted = vec![0.0; states];
        for u in 0..g {
            let eu = &e[u * states..(u + 1) * states];
            let wu = weights[u];
            if order == 0 {
                next[0] += wu * eu[0] * alpha[0];
                predicted[0] += wu * alpha[0];
                continue;
            }
            for (chunk_idx, (a_chunk, e_chunk)) in alpha.chunks_exact(g).zip(eu.chunks_exact(g)).enumerate() {
                let dot: f64 = a_chunk.iter().zip(e_chunk).map(|(a, b)| a * b).sum();
                let mass: f64 = a_chunk.iter().sum();
                next[u * drop + chunk_idx] += wu * dot;
                predicted[u * drop + chunk_idx] += wu * mass;
            }
        }
        std::mem::swap(&mut alpha, &mut next);
        normalize_step(&mut alpha, &mut acc, &mut floored, &predicted);
        out.push(acc);
    }
    (out, floored)
}
