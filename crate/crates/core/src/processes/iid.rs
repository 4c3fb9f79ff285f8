use super::{DomainBox, Hypothesis};
use crate::quadrature::log_normal_pdf;
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Product-form single-sample law.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    /// Independent axes `N(mean_i, sd_i²)`.
    Gaussian { mean: Vec<f64>, sd: Vec<f64> },
    /// Uniform on the box `[lo, hi]`.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
}

impl Marginal {
    pub fn dim(&self) -> usize {
        match self {
            Marginal::Gaussian { mean, .. } => mean.len(),
            Marginal::Uniform { lo, .. } => lo.len(),
        }
    }

    pub fn logpdf(&self, y: &[f64]) -> f64 {
        match self {
            Marginal::Gaussian { mean, sd } => {
                y.iter().zip(mean.iter().zip(sd)).map(|(v, (m, s))| log_normal_pdf(*v, *m, s * s)).sum()
            }
            Marginal::Uniform { lo, hi } => {
                let inside = y.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| v >= a && v <= b);
                if inside {
                    -lo.iter().zip(hi).map(|(a, b)| (b - a).ln()).sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn pdf(&self, y: &[f64]) -> f64 {
        self.logpdf(y).exp()
    }

    pub fn grad_logpdf(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Marginal::Gaussian { mean, sd } => {
                y.iter().zip(mean.iter().zip(sd)).map(|(v, (m, s))| -(v - m) / (s * s)).collect()
            }
            Marginal::Uniform { lo, .. } => vec![0.0; lo.len()],
        }
    }

    pub fn sample_into(&self, rng: &mut Rng, out: &mut Vec<f64>) {
        match self {
            Marginal::Gaussian { mean, sd } => {
                for (m, s) in mean.iter().zip(sd) {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(m + s * z);
                }
            }
            Marginal::Uniform { lo, hi } => {
                for (a, b) in lo.iter().zip(hi) {
                    out.push(rng.random_range(*a..*b));
                }
            }
        }
    }

    /// Per-axis interval guaranteed to hold all but a negligible mass.
    fn axis_extent(&self, axis: usize) -> (f64, f64) {
        match self {
            Marginal::Gaussian { mean, sd } => (mean[axis] - 8.0 * sd[axis], mean[axis] + 8.0 * sd[axis]),
            Marginal::Uniform { lo, hi } => (lo[axis], hi[axis]),
        }
    }
}

/// Samples are i.i.d. with marginal `p0` under H0 and `p1` under H1.
#[derive(Debug, Clone, PartialEq)]
pub struct IidModel {
    h0: Marginal,
    h1: Marginal,
}

impl IidModel {
    pub fn new(h0: Marginal, h1: Marginal) -> crate::Result<Self> {
        if h0.dim() != h1.dim() || h0.dim() == 0 {
            return Err(crate::Error::DimensionMismatch { expected: h0.dim(), got: h1.dim() });
        }
        let valid = |m: &Marginal| match m {
            Marginal::Gaussian { mean, sd } => mean.len() == sd.len() && sd.iter().all(|s| *s > 0.0 && s.is_finite()),
            Marginal::Uniform { lo, hi } => lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a < b),
        };
        if !valid(&h0) || !valid(&h1) {
            return crate::error::invalid("marginal parameters are invalid");
        }
        Ok(IidModel { h0, h1 })
    }

    /// `N(m0, s0²)` versus `N(m1, s1²)` on the real line.
    pub fn gaussian_scalar(m0: f64, s0: f64, m1: f64, s1: f64) -> Self {
        IidModel::new(
            Marginal::Gaussian { mean: vec![m0], sd: vec![s0] },
            Marginal::Gaussian { mean: vec![m1], sd: vec![s1] },
        )
        .expect("scalar gaussian parameters")
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn marginal(&self, hyp: Hypothesis) -> &Marginal {
        match hyp {
            Hypothesis::H0 => &self.h0,
            Hypothesis::H1 => &self.h1,
        }
    }

    pub(crate) fn sample(&self, hyp: Hypothesis, n: usize, rng: &mut Rng) -> Vec<f64> {
        let m = self.marginal(hyp);
        let mut out = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            m.sample_into(rng, &mut out);
        }
        out
    }

    pub(crate) fn grad_log_ratio(&self, y0: &[f64]) -> Vec<f64> {
        let g0 = self.h0.grad_logpdf(y0);
        let g1 = self.h1.grad_logpdf(y0);
        g0.iter().zip(g1).map(|(a, b)| a - b).collect()
    }

    /// Closed-form `KL(p0 ‖ p1)` when both marginals are Gaussian.
    pub fn gaussian_kl(&self) -> Option<f64> {
        match (&self.h0, &self.h1) {
            (Marginal::Gaussian { mean: m0, sd: s0 }, Marginal::Gaussian { mean: m1, sd: s1 }) => Some(
                (0..m0.len())
                    .map(|i| {
                        let r = s0[i] / s1[i];
                        let dm = (m0[i] - m1[i]) / s1[i];
                        0.5 * (r * r + dm * dm - 1.0 - 2.0 * r.ln())
                    })
                    .sum(),
            ),
            _ => None,
        }
    }

    pub(crate) fn default_box(&self) -> DomainBox {
        let d = self.dim();
        let (lo, hi): (Vec<f64>, Vec<f64>) = (0..d)
            .map(|i| {
                let (a0, b0) = self.h0.axis_extent(i);
                let (a1, b1) = self.h1.axis_extent(i);
                (a0.min(a1), b0.max(b1))
            })
            .unzip();
        DomainBox::new(lo, hi).expect("finite marginal extents")
    }

    pub(crate) fn describe(&self) -> String {
        format!("iid {:?} vs {:?}", self.h0, self.h1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ProcessModel;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_at_its_mean() {
        let m: ProcessModel = IidModel::gaussian_scalar(0.0, 1.0, 1.0, 1.0).into();
        let v = m.marginal_logpdf(Hypothesis::H1, &[1.0]).unwrap();
        assert_relative_eq!(v, -0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-15);
    }

    #[test]
    fn shift_gradient_is_constant() {
        let mu = 1.7;
        let m = IidModel::gaussian_scalar(0.0, 1.0, mu, 1.0);
        for y in [-3.0, 0.0, 0.4, 5.0] {
            assert_relative_eq!(m.grad_log_ratio(&[y])[0], -mu, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_form_kl() {
        let kl = IidModel::gaussian_scalar(0.0, 1.0, 0.0, 2f64.sqrt()).gaussian_kl().unwrap();
        assert_relative_eq!(kl, 0.5 * (0.5 + 2f64.ln() - 1.0), epsilon = 1e-15);
        assert_relative_eq!(kl, 0.09657, epsilon = 1e-5);
        let kl = IidModel::gaussian_scalar(0.0, 1.0, 1.0, 1.0).gaussian_kl().unwrap();
        assert_relative_eq!(kl, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn uniform_is_normalized() {
        let u = Marginal::Uniform { lo: vec![0.0, 0.0], hi: vec![2.0, 4.0] };
        assert_relative_eq!(u.pdf(&[1.0, 1.0]), 1.0 / 8.0, epsilon = 1e-15);
        assert_eq!(u.pdf(&[3.0, 1.0]), 0.0);
    }
}
