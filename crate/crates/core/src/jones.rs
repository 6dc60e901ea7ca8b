//! Jones-calculus wave plates and the measurement settings they realize.
//!
//! Conventions: |0⟩ = |H⟩, |1⟩ = |V⟩; angles in degrees from the horizontal;
//! HWP(θ) = [[cos2θ, sin2θ], [sin2θ, −cos2θ]] and QWP(θ) = R(θ)·diag(1, i)·R(−θ).
//! A polarizing splitter transmits H and reflects V with a factor i.
//! Plates are listed in the order the photon meets them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{
    bloch_observable, kron, pauli_x, pauli_y, pauli_z, BellState, ComplexMatrix, Observable, I, ONE,
    ZERO,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlateKind {
    HalfWave,
    QuarterWave,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WavePlate {
    pub kind: PlateKind,
    /// Optical-axis orientation in degrees, in [0, 180).
    pub angle: f64,
}

impl WavePlate {
    pub fn new(kind: PlateKind, angle: f64) -> Result<Self> {
        if !(0.0..180.0).contains(&angle) {
            return Err(Error::OutOfRange {
                what: "wave-plate angle",
                value: angle,
            });
        }
        Ok(Self { kind, angle })
    }

    pub fn half(angle: f64) -> Self {
        Self::new(PlateKind::HalfWave, angle).expect("angle in [0, 180)")
    }

    pub fn quarter(angle: f64) -> Self {
        Self::new(PlateKind::QuarterWave, angle).expect("angle in [0, 180)")
    }
}

fn rotation(theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    ComplexMatrix::from_real(2, 2, &[c, -s, s, c]).unwrap()
}

pub fn jones_matrix(w: &WavePlate) -> ComplexMatrix {
    let t = w.angle.to_radians();
    match w.kind {
        PlateKind::HalfWave => {
            let (s2, c2) = (2.0 * t).sin_cos();
            ComplexMatrix::from_real(2, 2, &[c2, s2, s2, -c2]).unwrap()
        }
        PlateKind::QuarterWave => {
            let retarder = ComplexMatrix::new(2, 2, &[ONE, ZERO, ZERO, I]).unwrap();
            &(&rotation(t) * &retarder) * &rotation(-t)
        }
    }
}

/// Composed Jones matrix of a plate sequence, first plate applied first.
pub fn jones_chain(plates: &[WavePlate]) -> ComplexMatrix {
    plates
        .iter()
        .fold(ComplexMatrix::identity(2), |acc, p| &jones_matrix(p) * &acc)
}

/// Observable U†σ_Z U measured by the plates followed by an H/V splitter
/// (+1 on the transmitted H port).
pub fn observable_from_waveplates(plates: &[WavePlate]) -> Result<Observable> {
    if plates.is_empty() {
        return Err(Error::InvalidConfig("empty wave-plate sequence".into()));
    }
    let u = jones_chain(plates);
    let o = &(&u.dagger() * &pauli_z()) * &u;
    // remove rounding asymmetry
    Observable::new((&o + &o.dagger()).scale(0.5))
}

/// Bob's partial Bell-state measurement: H₂ on photon B, a splitter
/// interfering B and B′, then H₃ on one output arm and a fixed 22.5° plate on
/// the other, each followed by an H/V splitter. Returns the b = +1 effect
/// (same-polarization coincidences on the two arms) on B ⊗ B′.
pub fn partial_bsm_effect(h2_angle: f64, h3_angle: f64) -> Result<ComplexMatrix> {
    let h2 = jones_matrix(&WavePlate::new(PlateKind::HalfWave, h2_angle)?);
    let h3 = jones_matrix(&WavePlate::new(PlateKind::HalfWave, h3_angle)?);
    let fixed = jones_matrix(&WavePlate::half(22.5));
    // one photon per output port survives only for equal input polarizations;
    // the VV branch carries two reflections, i·i = −1
    let coincidence = ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -1.0,
        ],
    )?;
    let into_arms = &coincidence * &kron(&h2, &ComplexMatrix::identity(2));
    let analyzers = kron(&h3, &fixed);
    let same_port = ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )?;
    let k = &analyzers * &into_arms;
    Ok(&(&k.dagger() * &same_port) * &k)
}

#[derive(Clone, Debug)]
pub struct BobRow {
    pub y: usize,
    pub h2: f64,
    pub h3: f64,
    pub target: BellState,
}

pub fn bob_table() -> Vec<BobRow> {
    let rows = [
        (0.0, 22.5, BellState::PhiPlus),
        (0.0, 67.5, BellState::PhiMinus),
        (45.0, 22.5, BellState::PsiMinus),
        (45.0, 67.5, BellState::PsiPlus),
    ];
    rows.iter()
        .enumerate()
        .map(|(y, &(h2, h3, target))| BobRow { y, h2, h3, target })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SettingRow {
    pub party: char,
    pub setting: usize,
    pub plates: Vec<WavePlate>,
    /// Unnormalized Bloch direction of the target observable.
    pub target: [f64; 3],
}

impl SettingRow {
    pub fn target_observable(&self) -> ComplexMatrix {
        bloch_observable(self.target[0], self.target[1], self.target[2])
    }
}

/// Alice's rows: Q₁ then H₁.
pub fn alice_table() -> Vec<SettingRow> {
    let rows = [
        (45.0, 22.5, [1.0, 0.0, 0.0]),
        (45.0, 0.0, [0.0, 1.0, 0.0]),
        (0.0, 0.0, [0.0, 0.0, 1.0]),
    ];
    rows.iter()
        .enumerate()
        .map(|(x, &(q1, h1, target))| SettingRow {
            party: 'A',
            setting: x,
            plates: vec![WavePlate::quarter(q1), WavePlate::half(h1)],
            target,
        })
        .collect()
}

/// Charlie's rows: H₄ then H₅.
pub fn charlie_table() -> Vec<SettingRow> {
    let rows = [
        (11.25, 22.5, [1.0, 1.0, 0.0]),
        (33.75, 22.5, [1.0, -1.0, 0.0]),
        (22.5, 11.25, [0.0, 1.0, 1.0]),
        (22.5, 33.75, [0.0, 1.0, -1.0]),
        (0.0, 33.75, [1.0, 0.0, 1.0]),
        (0.0, 11.25, [1.0, 0.0, -1.0]),
    ];
    rows.iter()
        .enumerate()
        .map(|(z, &(h4, h5, target))| SettingRow {
            party: 'C',
            setting: z,
            plates: vec![WavePlate::half(h4), WavePlate::half(h5)],
            target,
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RowCheck {
    pub label: String,
    /// Sign s with realized = s·target, when one matches.
    pub sign: Option<i8>,
    /// Smallest entrywise distance to ±target.
    pub residual: f64,
    /// Bloch vector (x, y, z) of the realized observable or effect.
    pub realized: Vec<f64>,
}

impl RowCheck {
    pub fn matches(&self, tol: f64) -> bool {
        self.sign.is_some() && self.residual <= tol
    }
}

fn bloch_of(o: &ComplexMatrix) -> Vec<f64> {
    [pauli_x(), pauli_y(), pauli_z()]
        .iter()
        .map(|p| (o * p).trace().re / 2.0)
        .collect()
}

const MATCH_TOL: f64 = 1e-10;

pub fn check_setting_row(row: &SettingRow) -> Result<RowCheck> {
    let realized = observable_from_waveplates(&row.plates)?;
    let target = row.target_observable();
    let plus = realized.matrix().max_abs_diff(&target);
    let minus = realized.matrix().max_abs_diff(&target.scale(-1.0));
    let (residual, s) = if plus <= minus { (plus, 1) } else { (minus, -1) };
    Ok(RowCheck {
        label: format!("{}{}", row.party, row.setting),
        sign: (residual <= MATCH_TOL).then_some(s),
        residual,
        realized: bloch_of(realized.matrix()),
    })
}

pub fn check_bob_row(row: &BobRow) -> Result<RowCheck> {
    let effect = partial_bsm_effect(row.h2, row.h3)?;
    let residual = effect.max_abs_diff(&row.target.projector());
    Ok(RowCheck {
        label: format!("B{}", row.y),
        sign: (residual <= MATCH_TOL).then_some(1),
        residual,
        realized: Vec::new(),
    })
}

/// Jones-composition check of every wave-plate table row, Bob first.
pub fn verify_all_tables() -> Result<Vec<RowCheck>> {
    let mut out = Vec::new();
    for r in bob_table() {
        out.push(check_bob_row(&r)?);
    }
    for r in alice_table().iter().chain(charlie_table().iter()) {
        out.push(check_setting_row(r)?);
    }
    Ok(out)
}
