//! Three-party entanglement swapping and the Bell-type functional W.
//!
//! Qubits are ordered A ⊗ B ⊗ B′ ⊗ C; Bob's effects act on the middle pair.
//! Settings are stored 0-based (x ∈ 0..3, y ∈ 0..4, z ∈ 0..6). The
//! correlators S_xzy use the 1-based x and z of the functional's notation.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quantum::{
    bloch_observable, identity2, kron, kron_all, partial_trace_matrix, pauli_x, pauli_y, pauli_z,
    BellState, ComplexMatrix, DensityMatrix, Observable,
};

pub const N_ALICE: usize = 3;
pub const N_BOB: usize = 4;
pub const N_CHARLIE: usize = 6;
/// Outcome ±1 at index 0/1.
pub const OUTCOMES: [i8; 2] = [1, -1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureModel {
    /// Distinguishability dephases Bob's projector within its parity subspace.
    #[default]
    Subspace,
    /// Distinguishability replaces Bob's projector with I/4.
    Depolarizing,
}

impl std::str::FromStr for MixtureModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subspace" => Ok(Self::Subspace),
            "depolarizing" => Ok(Self::Depolarizing),
            other => Err(Error::InvalidConfig(format!("unknown mixture model '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// Source visibility.
    pub v_e: f64,
    /// Two-photon interference visibility at Bob.
    pub v_i: f64,
    #[serde(default)]
    pub mixture_model: MixtureModel,
}

impl NoiseParams {
    pub fn new(v_e: f64, v_i: f64, mixture_model: MixtureModel) -> Result<Self> {
        let n = Self {
            v_e,
            v_i,
            mixture_model,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn ideal() -> Self {
        Self {
            v_e: 1.0,
            v_i: 1.0,
            mixture_model: MixtureModel::Subspace,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_visibility("v_E", self.v_e)?;
        check_visibility("v_I", self.v_i)
    }
}

fn check_visibility(what: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange { what, value: v });
    }
    Ok(())
}

/// ρ_EPR = v_E |Φ+⟩⟨Φ+| + (1 − v_E) I/4.
pub fn epr_state(v_e: f64) -> Result<DensityMatrix> {
    check_visibility("v_E", v_e)?;
    let phi = BellState::PhiPlus.projector().scale(v_e);
    let noise = ComplexMatrix::identity(4).scale((1.0 - v_e) / 4.0);
    DensityMatrix::new(&phi + &noise)
}

/// Applies interference noise of visibility `v_i` to an ideal Bob effect.
pub fn degrade_bob_effect(effect: &ComplexMatrix, v_i: f64, model: MixtureModel) -> Result<ComplexMatrix> {
    check_visibility("v_I", v_i)?;
    let mixed = match model {
        MixtureModel::Subspace => {
            // Φ+ ↔ Φ− and Ψ− ↔ Ψ+ under a phase flip on B
            let flip = kron(&pauli_z(), &identity2());
            let partner = &(&flip * effect) * &flip;
            (effect + &partner).scale(0.5)
        }
        MixtureModel::Depolarizing => ComplexMatrix::identity(4).scale(effect.trace().re / 4.0),
    };
    Ok(&effect.scale(v_i) + &mixed.scale(1.0 - v_i))
}

/// Bob's b = +1 effect M_y under interference visibility `v_i`.
pub fn bob_effect(y: usize, v_i: f64, model: MixtureModel) -> Result<ComplexMatrix> {
    let ideal = BellState::from_index(y)?.projector();
    degrade_bob_effect(&ideal, v_i, model)
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub alice: Vec<Observable>,
    pub charlie: Vec<Observable>,
    /// Ideal b = +1 effects on B ⊗ B′; b = −1 is the complement.
    pub bob: Vec<ComplexMatrix>,
}

impl Scenario {
    pub fn new(alice: Vec<Observable>, charlie: Vec<Observable>, bob: Vec<ComplexMatrix>) -> Result<Self> {
        if alice.len() != N_ALICE || charlie.len() != N_CHARLIE || bob.len() != N_BOB {
            return Err(Error::DimensionMismatch(format!(
                "scenario needs 3/4/6 settings, got {}/{}/{}",
                alice.len(),
                bob.len(),
                charlie.len()
            )));
        }
        for o in alice.iter().chain(charlie.iter()) {
            if o.matrix().rows() != 2 {
                return Err(Error::DimensionMismatch("Alice/Charlie observables act on a qubit".into()));
            }
        }
        for m in &bob {
            if m.rows() != 4 || !m.is_hermitian(1e-12) {
                return Err(Error::InvalidObservable("Bob effects must be 4x4 Hermitian".into()));
            }
            let ev = m.hermitian_eigenvalues();
            if ev[0] < -1e-10 || ev[3] > 1.0 + 1e-10 {
                return Err(Error::InvalidObservable("Bob effect outside [0, I]".into()));
            }
        }
        Ok(Self { alice, charlie, bob })
    }

    /// σ_X, σ_Y, σ_Z for Alice; the six two-axis combinations for Charlie;
    /// Bell projections Φ+, Φ−, Ψ−, Ψ+ for Bob.
    pub fn standard() -> Self {
        let alice = vec![pauli_x(), pauli_y(), pauli_z()];
        let charlie = charlie_directions()
            .iter()
            .map(|d| bloch_observable(d[0], d[1], d[2]))
            .collect::<Vec<_>>();
        Self {
            alice: alice.into_iter().map(|m| Observable::new(m).unwrap()).collect(),
            charlie: charlie.into_iter().map(|m| Observable::new(m).unwrap()).collect(),
            bob: BellState::ALL.iter().map(|b| b.projector()).collect(),
        }
    }
}

/// Bloch directions (x, y, z) of Charlie's six measurements, unnormalized.
pub fn charlie_directions() -> [[f64; 3]; 6] {
    [
        [1.0, 1.0, 0.0],
        [1.0, -1.0, 0.0],
        [0.0, 1.0, 1.0],
        [0.0, 1.0, -1.0],
        [1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0],
    ]
}

/// Unnormalized post-measurement operator ρ^{AC}_{b|y} on A ⊗ C.
pub fn conditional_operator(
    rho_ab: &DensityMatrix,
    rho_bc: &DensityMatrix,
    bob_plus: &ComplexMatrix,
    b: i8,
) -> Result<ComplexMatrix> {
    let effect = if b == 1 {
        bob_plus.clone()
    } else {
        &ComplexMatrix::identity(4) - bob_plus
    };
    let joint = kron(rho_ab.matrix(), rho_bc.matrix());
    let lifted = kron_all([&identity2(), &effect, &identity2()]);
    let op = &lifted * &joint;
    partial_trace_matrix(&op, &[2, 2, 2, 2], &[0, 3])
}

/// The normalized AC state after Bob's (y, b) outcome, with its weight p(b|y).
pub fn conditional_state(y: usize, b: i8, noise: &NoiseParams) -> Result<(DensityMatrix, f64)> {
    noise.validate()?;
    let src = epr_state(noise.v_e)?;
    let effect = bob_effect(y, noise.v_i, noise.mixture_model)?;
    let op = conditional_operator(&src, &src, &effect, b)?;
    DensityMatrix::normalized(op)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    values: Vec<f64>,
}

fn outcome_index(o: i8) -> usize {
    if o == 1 {
        0
    } else {
        1
    }
}

impl ProbabilityTable {
    const LEN: usize = N_ALICE * N_BOB * N_CHARLIE * 8;

    fn flat(x: usize, y: usize, z: usize, ai: usize, bi: usize, ci: usize) -> usize {
        ((((x * N_BOB + y) * N_CHARLIE + z) * 2 + ai) * 2 + bi) * 2 + ci
    }

    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; Self::LEN],
        }
    }

    pub fn get(&self, a: i8, b: i8, c: i8, x: usize, y: usize, z: usize) -> f64 {
        self.values[Self::flat(x, y, z, outcome_index(a), outcome_index(b), outcome_index(c))]
    }

    pub fn set(&mut self, a: i8, b: i8, c: i8, x: usize, y: usize, z: usize, p: f64) {
        self.values[Self::flat(x, y, z, outcome_index(a), outcome_index(b), outcome_index(c))] = p;
    }

    /// p(b|y) read from the (x, z) = (0, 0) cell.
    pub fn p_b(&self, b: i8, y: usize) -> f64 {
        self.marginal_b(b, 0, y, 0)
    }

    pub fn marginal_b(&self, b: i8, x: usize, y: usize, z: usize) -> f64 {
        let mut s = 0.0;
        for a in OUTCOMES {
            for c in OUTCOMES {
                s += self.get(a, b, c, x, y, z);
            }
        }
        s
    }

    /// λ·self + (1 − λ)·other.
    pub fn mix(&self, lambda: f64, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
                .collect(),
        }
    }

    /// Largest |Σ_{abc} p − 1| over settings.
    pub fn normalization_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..N_ALICE {
            for y in 0..N_BOB {
                for z in 0..N_CHARLIE {
                    let s: f64 = OUTCOMES
                        .iter()
                        .map(|&b| self.marginal_b(b, x, y, z))
                        .sum();
                    worst = worst.max((s - 1.0).abs());
                }
            }
        }
        worst
    }

    /// Largest variation of any single-party marginal across the other
    /// parties' settings.
    pub fn signaling_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut spread = |vals: Vec<f64>| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(hi - lo);
        };
        let sum_bc = |t: &Self, a: i8, x, y, z| -> f64 {
            let mut s = 0.0;
            for b in OUTCOMES {
                for c in OUTCOMES {
                    s += t.get(a, b, c, x, y, z);
                }
            }
            s
        };
        let sum_ab = |t: &Self, c: i8, x, y, z| -> f64 {
            let mut s = 0.0;
            for a in OUTCOMES {
                for b in OUTCOMES {
                    s += t.get(a, b, c, x, y, z);
                }
            }
            s
        };
        for a in OUTCOMES {
            for x in 0..N_ALICE {
                let mut v = Vec::new();
                for y in 0..N_BOB {
                    for z in 0..N_CHARLIE {
                        v.push(sum_bc(self, a, x, y, z));
                    }
                }
                spread(v);
            }
        }
        for b in OUTCOMES {
            for y in 0..N_BOB {
                let mut v = Vec::new();
                for x in 0..N_ALICE {
                    for z in 0..N_CHARLIE {
                        v.push(self.marginal_b(b, x, y, z));
                    }
                }
                spread(v);
            }
        }
        for c in OUTCOMES {
            for z in 0..N_CHARLIE {
                let mut v = Vec::new();
                for x in 0..N_ALICE {
                    for y in 0..N_BOB {
                        v.push(sum_ab(self, c, x, y, z));
                    }
                }
                spread(v);
            }
        }
        worst
    }

    /// Nested arrays indexed [x][y][z][a][b][c], outcomes ordered (+1, −1).
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<Vec<Vec<f64>>>>>> {
        (0..N_ALICE)
            .map(|x| {
                (0..N_BOB)
                    .map(|y| {
                        (0..N_CHARLIE)
                            .map(|z| {
                                (0..2)
                                    .map(|ai| {
                                        (0..2)
                                            .map(|bi| {
                                                (0..2)
                                                    .map(|ci| self.values[Self::flat(x, y, z, ai, bi, ci)])
                                                    .collect()
                                            })
                                            .collect()
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_nested(nested: &[Vec<Vec<Vec<Vec<Vec<f64>>>>>]) -> Result<Self> {
        let bad = || Error::DimensionMismatch("probability table must be shaped [3][4][6][2][2][2]".into());
        if nested.len() != N_ALICE {
            return Err(bad());
        }
        let mut t = Self::zeros();
        for (x, by_y) in nested.iter().enumerate() {
            if by_y.len() != N_BOB {
                return Err(bad());
            }
            for (y, by_z) in by_y.iter().enumerate() {
                if by_z.len() != N_CHARLIE {
                    return Err(bad());
                }
                for (z, cell) in by_z.iter().enumerate() {
                    if cell.len() != 2 || cell.iter().any(|r| r.len() != 2 || r.iter().any(|s| s.len() != 2)) {
                        return Err(bad());
                    }
                    for ai in 0..2 {
                        for bi in 0..2 {
                            for ci in 0..2 {
                                t.values[Self::flat(x, y, z, ai, bi, ci)] = cell[ai][bi][ci];
                            }
                        }
                    }
                }
            }
        }
        Ok(t)
    }
}

impl Serialize for ProbabilityTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbabilityTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let nested: Vec<Vec<Vec<Vec<Vec<Vec<f64>>>>>> = Vec::deserialize(d)?;
        Self::from_nested(&nested).map_err(D::Error::custom)
    }
}

/// p(a,b,c|x,y,z) = tr[(ρ_AB ⊗ ρ_B′C)(E_{a|x} ⊗ F_{b|y} ⊗ G_{c|z})] with both
/// sources ρ_EPR(v_E) and Bob's effects degraded by v_I.
pub fn probability_table(scenario: &Scenario, noise: &NoiseParams) -> Result<ProbabilityTable> {
    noise.validate()?;
    let src = epr_state(noise.v_e)?;
    let mut table = ProbabilityTable::zeros();
    for y in 0..N_BOB {
        let effect = degrade_bob_effect(&scenario.bob[y], noise.v_i, noise.mixture_model)?;
        for b in OUTCOMES {
            let cond = conditional_operator(&src, &src, &effect, b)?;
            for (x, ax) in scenario.alice.iter().enumerate() {
                for (z, cz) in scenario.charlie.iter().enumerate() {
                    for a in OUTCOMES {
                        for c in OUTCOMES {
                            let op = kron(&ax.projector(a), &cz.projector(c));
                            let p = (cond.inner() * op.inner()).trace().re;
                            table.set(a, b, c, x, y, z, p.max(0.0));
                        }
                    }
                }
            }
        }
    }
    Ok(table)
}

/// S_xzy = Σ_{a,c} ac·p(a, b=+1, c | x, y, z) with 1-based x ∈ 1..=3, z ∈ 1..=6.
pub fn s_value(p: &ProbabilityTable, x: usize, z: usize, y: usize) -> Result<f64> {
    if !(1..=N_ALICE).contains(&x) {
        return Err(Error::IndexOutOfRange {
            what: "x (1-based)",
            index: x,
            bound: N_ALICE + 1,
        });
    }
    if !(1..=N_CHARLIE).contains(&z) {
        return Err(Error::IndexOutOfRange {
            what: "z (1-based)",
            index: z,
            bound: N_CHARLIE + 1,
        });
    }
    if y >= N_BOB {
        return Err(Error::IndexOutOfRange {
            what: "y",
            index: y,
            bound: N_BOB,
        });
    }
    let mut s = 0.0;
    for a in OUTCOMES {
        for c in OUTCOMES {
            s += (a * c) as f64 * p.get(a, 1, c, x - 1, y, z - 1);
        }
    }
    Ok(s)
}

/// Signed terms ((x, z) 1-based, sign) of T_y, with y = y₂y₁ in binary.
pub fn t_terms(y: usize) -> Vec<((usize, usize), f64)> {
    let y1 = (y & 1) as i32;
    let y2 = ((y >> 1) & 1) as i32;
    let s = |e: i32| if e % 2 == 0 { 1.0 } else { -1.0 };
    let (s12, s1, s2) = (s(y1 + y2), s(y1), s(y2));
    vec![
        ((1, 1), s12),
        ((1, 2), s12),
        ((2, 1), -s1),
        ((2, 2), s1),
        ((1, 5), s12),
        ((1, 6), s12),
        ((3, 5), s2),
        ((3, 6), -s2),
        ((2, 3), -s1),
        ((2, 4), -s1),
        ((3, 3), s2),
        ((3, 4), -s2),
    ]
}

pub fn t_value(p: &ProbabilityTable, y: usize) -> Result<f64> {
    let mut t = 0.0;
    for ((x, z), sign) in t_terms(y) {
        t += sign * s_value(p, x, z, y)?;
    }
    Ok(t)
}

/// W = (1/5)Σ_y T_y − (4/5)Σ_y p(b=+1|y).
pub fn w_value(p: &ProbabilityTable) -> f64 {
    w_from_parts(
        |y| t_value(p, y).expect("y in range"),
        |y| p.p_b(1, y),
    )
}

/// W assembled from per-y correlator sums and Bell-measurement success rates.
pub fn w_from_parts(t: impl Fn(usize) -> f64, pb: impl Fn(usize) -> f64) -> f64 {
    let ts: f64 = (0..N_BOB).map(&t).sum();
    let ps: f64 = (0..N_BOB).map(&pb).sum();
    ts / 5.0 - 0.8 * ps
}

/// Probability table of the standard protocol under `noise`.
pub fn standard_table(noise: &NoiseParams) -> Result<ProbabilityTable> {
    probability_table(&Scenario::standard(), noise)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolSummary {
    pub noise: NoiseParams,
    /// S_xzy in (x, z, y) lexicographic order, 1-based x and z.
    pub s_values: Vec<SEntry>,
    pub t_values: Vec<f64>,
    pub p_b_plus: Vec<f64>,
    pub sum_p_b_plus: f64,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SEntry {
    pub x: usize,
    pub z: usize,
    pub y: usize,
    pub s: f64,
}

pub fn summarize(table: &ProbabilityTable, noise: NoiseParams) -> ProtocolSummary {
    let mut s_values = Vec::with_capacity(72);
    for x in 1..=N_ALICE {
        for z in 1..=N_CHARLIE {
            for y in 0..N_BOB {
                s_values.push(SEntry {
                    x,
                    z,
                    y,
                    s: s_value(table, x, z, y).unwrap(),
                });
            }
        }
    }
    let p_b_plus: Vec<f64> = (0..N_BOB).map(|y| table.p_b(1, y)).collect();
    ProtocolSummary {
        noise,
        s_values,
        t_values: (0..N_BOB).map(|y| t_value(table, y).unwrap()).collect(),
        sum_p_b_plus: p_b_plus.iter().sum(),
        p_b_plus,
        w: w_value(table),
    }
}
