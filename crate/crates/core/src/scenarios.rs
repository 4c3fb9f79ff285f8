//! The three built-in detection scenarios.

use crate::error::Result;
use crate::processes::{FiniteStateHmm, GaussLinearModel, ProcessModel};

/// Constellation points of the four QPSK symbols in the I/Q plane.
pub const QPSK_CENTERS: [[f64; 2]; 4] = [[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]];

/// Channel taps of the moving-average detection scenario.
pub const MA_TAPS: [f64; 3] = [1.06677, -0.59281, 0.09565];

/// QPSK symbols (i.i.d. uniform, H0) against OQPSK (no jump to the opposite
/// symbol, H1), observed in truncated Gaussian noise on `[-M, M]²`.
pub fn qpsk_oqpsk_hmm(half_width: f64, sigma: f64) -> Result<FiniteStateHmm> {
    let t = 1.0 / 3.0;
    let h0 = vec![0.25; 16];
    #[rustfmt::skip]
    let h1 = vec![
        t, t, 0.0, t,
        t, t, t, 0.0,
        0.0, t, t, t,
        t, 0.0, t, t,
    ];
    let centers = QPSK_CENTERS.iter().map(|c| c.to_vec()).collect();
    FiniteStateHmm::new(h0, h1, centers, sigma, half_width)
}

/// QPSK/OQPSK model with its default parameters `M = 3`, `σ = 0.6`.
pub fn qpsk_oqpsk() -> ProcessModel {
    qpsk_oqpsk_hmm(3.0, 0.6).expect("valid built-in parameters").into()
}

/// White complex Gaussian noise against a circular complex AR(1) signal in noise.
pub fn ar_detect_model(a: f64, sigma: f64) -> Result<GaussLinearModel> {
    GaussLinearModel::ar1_circular(a, sigma)
}

/// AR(1) detection model (`a = 0.8`, `σ = 1`) truncated to `[-8, 8]²`.
pub fn ar_detect() -> ProcessModel {
    let m: ProcessModel = ar_detect_model(0.8, 1.0).expect("valid built-in parameters").into();
    let b = crate::DomainBox::cube(2, 8.0).expect("positive half-width");
    m.with_truncation(b).expect("matching dimension")
}

/// Noise alone against an MA-filtered Gaussian signal in noise.
pub fn ma_detect_model(taps: &[f64], sigma: f64) -> Result<GaussLinearModel> {
    GaussLinearModel::ma(taps.to_vec(), sigma)
}

/// Moving-average detection model with the built-in taps and `σ = 1.5`, truncated to `±10σ`.
pub fn ma_detect() -> ProcessModel {
    let sigma = 1.5;
    let m: ProcessModel = ma_detect_model(&MA_TAPS, sigma).expect("valid built-in parameters").into();
    let b = crate::DomainBox::cube(1, 10.0 * sigma).expect("positive half-width");
    m.with_truncation(b).expect("matching dimension")
}
