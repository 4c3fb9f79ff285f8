use super::grid::Grid;
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    ProbabilityDensity,
    PointDensity,
}

/// Nonnegative function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
    kind: DensityKind,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>, kind: DensityKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("density values must be finite and nonnegative");
        }
        Ok(DensityField { grid, values, kind })
    }

    pub fn from_fn(grid: Grid, kind: DensityKind, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid, values, kind)
    }

    pub fn uniform(grid: Grid, kind: DensityKind) -> Self {
        let v = 1.0 / grid.domain().volume();
        let values = vec![v; grid.len()];
        DensityField { grid, values, kind }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn value_at(&self, y: &[f64]) -> f64 {
        self.grid.interpolate(&self.values, y)
    }

    /// Rescaled to unit trapezoidal integral.
    pub fn normalized(mut self) -> Result<Self> {
        let z = self.integral();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Degenerate("density has zero mass on the grid".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= z);
        Ok(self)
    }

    pub fn scaled(&self, c: f64) -> Self {
        DensityField { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect(), kind: self.kind }
    }

    pub fn to_csv(&self) -> String {
        fields_csv(&self.grid, &self.values, None)
    }
}

/// Score field `F̄` or `F` with per-node Monte-Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    grid: Grid,
    values: Vec<f64>,
    stderr: Vec<f64>,
}

impl ScoreField {
    pub fn new(grid: Grid, values: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || stderr.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len().min(stderr.len()) });
        }
        if values.iter().chain(&stderr).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("score values and errors must be finite and nonnegative");
        }
        Ok(ScoreField { grid, values, stderr })
    }

    pub fn exact(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(grid, values, vec![0.0; n])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::exact(grid, vec![c; n])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn scaled(&self, c: f64) -> Self {
        ScoreField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            stderr: self.stderr.iter().map(|v| v * c.abs()).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        fields_csv(&self.grid, &self.values, Some(&self.stderr))
    }
}

/// Conditional second moments `L̄(y) = E₀[ℓℓᵀ | Y₀ = y]` of the log-ratio gradient,
/// stored as row-major `d × d` blocks per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMoments {
    grid: Grid,
    lbar: Vec<f64>,
}

impl ScoreMoments {
    pub fn new(grid: Grid, lbar: Vec<f64>) -> Result<Self> {
        let d = grid.dim();
        if lbar.len() != grid.len() * d * d {
            return Err(Error::DimensionMismatch { expected: grid.len() * d * d, got: lbar.len() });
        }
        Ok(ScoreMoments { grid, lbar })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, node: usize) -> DMatrix<f64> {
        let d = self.grid.dim();
        DMatrix::from_row_slice(d, d, &self.lbar[node * d * d..(node + 1) * d * d])
    }
}

/// `F̄` together with the moment matrices it is the trace of.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEstimate {
    pub fbar: ScoreField,
    pub moments: ScoreMoments,
}

/// Normalized cell-shape second moment.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariationProfile {
    /// `ν I`.
    Scaled(f64),
    Constant(DMatrix<f64>),
    PerNode(Vec<DMatrix<f64>>),
}

impl Default for CovariationProfile {
    fn default() -> Self {
        CovariationProfile::Scaled(1.0 / 12.0)
    }
}

impl CovariationProfile {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check = |m: &DMatrix<f64>| -> Result<()> {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.nrows() });
            }
            if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return invalid("covariation matrix must be symmetric");
            }
            let ev = m.clone().symmetric_eigen().eigenvalues;
            if ev.iter().any(|&e| e < -1e-12) {
                return invalid("covariation matrix must be positive semidefinite");
            }
            Ok(())
        };
        match self {
            CovariationProfile::Scaled(nu) if *nu >= 0.0 && nu.is_finite() => Ok(()),
            CovariationProfile::Scaled(_) => invalid("covariation scale must be nonnegative"),
            CovariationProfile::Constant(m) => check(m),
            CovariationProfile::PerNode(ms) => ms.iter().try_for_each(check),
        }
    }

    pub(crate) fn at(&self, node: usize, dim: usize) -> DMatrix<f64> {
        match self {
            CovariationProfile::Scaled(nu) => DMatrix::identity(dim, dim) * *nu,
            CovariationProfile::Constant(m) => m.clone(),
            CovariationProfile::PerNode(ms) => ms[node].clone(),
        }
    }
}

/// CSV with header `x1,...,xd,value,stderr`, one row per node.
pub fn fields_csv(grid: &Grid, values: &[f64], stderr: Option<&[f64]>) -> String {
    let d = grid.dim();
    let mut s = String::new();
    for a in 0..d {
        let _ = write!(s, "x{},", a + 1);
    }
    s.push_str("value,stderr\n");
    for (i, v) in values.iter().enumerate() {
        for x in grid.point(i) {
            let _ = write!(s, "{x},");
        }
        let e = stderr.map_or(0.0, |e| e[i]);
        let _ = writeln!(s, "{v},{e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::DomainBox;

    #[test]
    fn csv_layout() {
        let g = Grid::uniform(DomainBox::cube(1, 1.0).unwrap(), 3).unwrap();
        let f = DensityField::uniform(g, DensityKind::PointDensity);
        assert_eq!(f.to_csv(), "x1,value,stderr\n-1,0.5,0\n0,0.5,0\n1,0.5,0\n");
    }

    #[test]
    fn normalization_reaches_unit_mass() {
        let g = Grid::uniform(DomainBox::cube(2, 3.0).unwrap(), 41).unwrap();
        let f = DensityField::from_fn(g, DensityKind::ProbabilityDensity, |y| (-(y[0] * y[0] + y[1] * y[1])).exp())
            .unwrap()
            .normalized()
            .unwrap();
        assert!((f.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_rejects_asymmetric_and_indefinite() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(CovariationProfile::Constant(asym).validate(2).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(CovariationProfile::Constant(indef).validate(2).is_err());
        assert!(CovariationProfile::default().validate(3).is_ok());
    }
}
