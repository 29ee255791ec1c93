//! The two benchmark problems on the sampled double integrator, with their
//! reference minimum-volume sequences for `t = 1..=10`.

use std::sync::Arc;

use crate::geometry::{Exponent, PSumSet};
use crate::linalg::{Matrix, SpdMatrix, Vector};
use crate::reach::{ControlTiming, LtiSystem, ModulatedControls, UncertaintyModel};

pub const SAMPLING_STEP: f64 = 0.3;
pub const HORIZON: usize = 10;

/// Minimum-volume outer ellipsoid volumes for the ellipsoidal problem.
pub const ELLIPSOIDAL_MVOE_VOLUMES: [f64; 10] = [
    8.6837, 14.6765, 28.7263, 33.2574, 36.8740, 65.1379, 70.1632, 63.8502, 109.2246, 120.8542,
];

/// Volumes of the semidefinite-program optimum for the same problem. Only used
/// as a band for the sampled reference.
pub const ELLIPSOIDAL_SDP_VOLUMES: [f64; 10] = [
    8.6837, 14.5461, 27.9035, 31.9097, 35.0421, 61.0650, 65.3182, 59.1310, 100.8786, 111.2311,
];

/// Minimum-volume outer ellipsoid volumes for the mixed p-sum problem.
pub const MIXED_MVOE_VOLUMES: [f64; 10] = [
    57.7493, 99.3984, 182.9045, 206.0490, 266.6789, 383.9408, 387.4037, 461.7879, 610.9069, 666.9160,
];

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub system: LtiSystem,
    pub model: UncertaintyModel,
    pub horizon: usize,
    pub reference_volumes: &'static [f64],
}

/// `F = [[1, h], [0, 1]]`, `G = [[h, h²/2], [0, h]]`.
pub fn double_integrator(h: f64) -> LtiSystem {
    LtiSystem::new(
        Matrix::from_row_slice(2, 2, &[1.0, h, 0.0, 1.0]),
        Matrix::from_row_slice(2, 2, &[h, h * h / 2.0, 0.0, h]),
    )
    .expect("double integrator is invertible")
}

fn control_base() -> SpdMatrix {
    SpdMatrix::from_diagonal(&[10.0, 0.1]).expect("positive diagonal")
}

/// Unit-disk initial set and a single input ellipsoid
/// `(1 + cos² t)·diag(10, 0.1)`.
pub fn ellipsoidal() -> Scenario {
    let controls = ModulatedControls::new(Exponent::ONE, Vector::zeros(2), vec![control_base()], vec![1.0])
        .expect("valid control model");
    let x0 = PSumSet::centered(Exponent::ONE, vec![SpdMatrix::identity(2)]).expect("valid initial set");
    Scenario {
        name: "ellipsoidal",
        system: double_integrator(SAMPLING_STEP),
        model: UncertaintyModel::new(x0, Some(Arc::new(controls)), ControlTiming::CurrentStep),
        horizon: HORIZON,
        reference_volumes: &ELLIPSOIDAL_MVOE_VOLUMES,
    }
}

/// Initial set a 2.5-sum of two ellipsoids, input set a 1.5-sum of three
/// with shapes `(1 + cos²(j t))·diag(10, 0.1)`, `j = 1, 2, 3`.
pub fn mixed_psum() -> Scenario {
    let q01 = SpdMatrix::from_rows(2, &[2.2259, 0.1992, 0.1992, 2.4357]).expect("SPD");
    let q02 = SpdMatrix::from_rows(2, &[2.3111, 0.6768, 0.6768, 2.1848]).expect("SPD");
    let x0 = PSumSet::centered(Exponent::Finite(2.5), vec![q01, q02]).expect("valid initial set");
    let controls = ModulatedControls::new(
        Exponent::Finite(1.5),
        Vector::zeros(2),
        vec![control_base(); 3],
        vec![1.0, 2.0, 3.0],
    )
    .expect("valid control model");
    Scenario {
        name: "mixed-psum",
        system: double_integrator(SAMPLING_STEP),
        model: UncertaintyModel::new(x0, Some(Arc::new(controls)), ControlTiming::CurrentStep),
        horizon: HORIZON,
        reference_volumes: &MIXED_MVOE_VOLUMES,
    }
}
