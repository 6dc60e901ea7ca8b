//! Monte Carlo model of the photon-counting experiment.
//!
//! Each switching cycle draws a uniformly random setting (x, y, z) and Poisson
//! counts at the analytic rates of two independent pair sources. Four-fold
//! coincidences split over outcomes according to the protocol's probability
//! table. Only b = +1 four-folds are resolved by outcome (a, c), as in the
//! experiment; b = −1 four-folds are counted in aggregate.
//!
//! Randomness: cycle `i` draws from ChaCha8 seeded by `seed` on stream `i`;
//! bootstrap resample `j` uses seed `seed ^ BOOTSTRAP_SALT` on stream `j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    standard_table, t_terms, w_from_parts, w_value, NoiseParams, ProbabilityTable, SEntry,
    N_ALICE, N_BOB, N_CHARLIE, OUTCOMES,
};

pub const BOOTSTRAP_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
/// Largest Poisson mean we are willing to sample.
pub const MAX_MEAN: f64 = 1e15;

/// Four-fold coincidences per cycle reported for the experiment.
pub const MEASURED_FOURFOLD_PER_CYCLE: f64 = 1.24;
pub const MEASURED_CYCLES: usize = 21742;

/// Which four-fold count a calibration target refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourfoldTarget {
    /// Only the recorded b = +1 events.
    Recorded,
    /// All four-folds, either Bob outcome.
    Total,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Source trigger rate in Hz.
    pub trigger_rate: f64,
    /// Pair-emission probability per trigger per source.
    pub pair_prob: f64,
    pub eta_a: f64,
    pub eta_b1: f64,
    pub eta_b2: f64,
    pub eta_c: f64,
    /// Data-collection window per switching cycle, seconds.
    pub cycle_collect_seconds: f64,
    pub num_cycles: usize,
    pub noise: NoiseParams,
    pub seed: u64,
    pub bootstrap_resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut cfg = Self {
            trigger_rate: 250e6,
            pair_prob: 0.0025,
            eta_a: 1.0,
            eta_b1: 1.0,
            eta_b2: 1.0,
            eta_c: 1.0,
            cycle_collect_seconds: 20.0,
            num_cycles: MEASURED_CYCLES,
            noise: NoiseParams::new(0.9909, 0.9844, crate::protocol::MixtureModel::Depolarizing)
                .expect("valid visibilities"),
            seed: 1,
            bootstrap_resamples: 1000,
        };
        cfg.set_uniform_efficiency(cfg.calibrate_uniform_efficiency(MEASURED_FOURFOLD_PER_CYCLE, FourfoldTarget::Recorded));
        cfg
    }
}

impl ExperimentConfig {
    /// Triggers per cycle, R.
    pub fn triggers(&self) -> f64 {
        self.trigger_rate * self.cycle_collect_seconds
    }

    pub fn set_uniform_efficiency(&mut self, eta: f64) {
        self.eta_a = eta;
        self.eta_b1 = eta;
        self.eta_b2 = eta;
        self.eta_c = eta;
    }

    /// Uniform η giving `target` four-folds per cycle. Recorded targets count
    /// b = +1 only, whose average probability over uniform y is exactly 1/4.
    pub fn calibrate_uniform_efficiency(&self, target: f64, which: FourfoldTarget) -> f64 {
        let rg2 = self.triggers() * self.pair_prob * self.pair_prob;
        let total = match which {
            FourfoldTarget::Recorded => 4.0 * target,
            FourfoldTarget::Total => target,
        };
        (total / rg2).powf(0.25)
    }

    /// R g² η_A η_B1 η_B2 η_C.
    pub fn fourfold_scale(&self) -> f64 {
        let g = self.pair_prob;
        self.triggers() * g * g * self.eta_a * self.eta_b1 * self.eta_b2 * self.eta_c
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_prob", self.pair_prob),
            ("eta_a", self.eta_a),
            ("eta_b1", self.eta_b1),
            ("eta_b2", self.eta_b2),
            ("eta_c", self.eta_c),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} is not a probability")));
            }
        }
        if !(self.trigger_rate > 0.0 && self.trigger_rate.is_finite()) {
            return Err(Error::InvalidConfig("trigger_rate must be positive".into()));
        }
        if !(self.cycle_collect_seconds > 0.0 && self.cycle_collect_seconds.is_finite()) {
            return Err(Error::InvalidConfig("cycle_collect_seconds must be positive".into()));
        }
        if self.num_cycles == 0 {
            return Err(Error::InvalidConfig("num_cycles must be at least 1".into()));
        }
        self.noise
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub struct Setting {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Setting {
    pub fn index(&self) -> usize {
        (self.x * N_BOB + self.y) * N_CHARLIE + self.z
    }

    pub fn all() -> impl Iterator<Item = Setting> {
        (0..N_ALICE).flat_map(|x| {
            (0..N_BOB).flat_map(move |y| (0..N_CHARLIE).map(move |z| Setting { x, y, z }))
        })
    }
}

pub const N_SETTINGS: usize = N_ALICE * N_BOB * N_CHARLIE;

/// Detection counts of one switching cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub setting: Setting,
    pub n_a: u64,
    pub n_c: u64,
    pub n_ab: u64,
    pub n_bc: u64,
    pub n_ac: u64,
    /// b = +1 four-folds indexed [a][c], outcome order (+1, −1).
    pub fourfold: [[u64; 2]; 2],
    /// b = −1 four-folds, not outcome-resolved.
    pub fourfold_b_minus: u64,
}

impl CountsRecord {
    pub fn recorded_fourfold(&self) -> u64 {
        self.fourfold.iter().flatten().sum()
    }

    pub fn counts(&self) -> Counts {
        Counts {
            n_a: self.n_a as f64,
            n_c: self.n_c as f64,
            n_ab: self.n_ab as f64,
            n_bc: self.n_bc as f64,
            n_ac: self.n_ac as f64,
            fourfold: self.fourfold.map(|r| r.map(|v| v as f64)),
        }
    }
}

/// Real-valued counts: what the estimators consume. Sampled records convert
/// into this; expected counts are produced directly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Counts {
    pub n_a: f64,
    pub n_c: f64,
    pub n_ab: f64,
    pub n_bc: f64,
    pub n_ac: f64,
    pub fourfold: [[f64; 2]; 2],
}

impl Counts {
    pub fn recorded_fourfold(&self) -> f64 {
        self.fourfold.iter().flatten().sum()
    }
}

fn oi(o: i8) -> usize {
    usize::from(o != 1)
}

/// Poisson means of one cycle.
#[derive(Clone, Copy, Debug)]
struct Means {
    a: f64,
    c: f64,
    ab: f64,
    bc: f64,
    ac: f64,
    fourfold: [[f64; 2]; 2],
    fourfold_b_minus: f64,
}

fn means(cfg: &ExperimentConfig, table: &ProbabilityTable, s: Setting) -> Means {
    let r = cfg.triggers();
    let g = cfg.pair_prob;
    let scale = cfg.fourfold_scale();
    let mut fourfold = [[0.0; 2]; 2];
    for a in OUTCOMES {
        for c in OUTCOMES {
            fourfold[oi(a)][oi(c)] = scale * table.get(a, 1, c, s.x, s.y, s.z);
        }
    }
    Means {
        a: r * g * cfg.eta_a,
        c: r * g * cfg.eta_c,
        ab: r * g * cfg.eta_a * cfg.eta_b1,
        bc: r * g * cfg.eta_c * cfg.eta_b2,
        ac: r * g * g * cfg.eta_a * cfg.eta_c,
        fourfold,
        fourfold_b_minus: scale * table.marginal_b(-1, s.x, s.y, s.z),
    }
}

/// Counts equal to their expectations, with no sampling.
pub fn expected_counts(cfg: &ExperimentConfig, table: &ProbabilityTable, s: Setting) -> Counts {
    let m = means(cfg, table, s);
    Counts {
        n_a: m.a,
        n_c: m.c,
        n_ab: m.ab,
        n_bc: m.bc,
        n_ac: m.ac,
        fourfold: m.fourfold,
    }
}

fn poisson(mean: f64, rng: &mut impl Rng) -> Result<u64> {
    if !(mean.is_finite() && mean <= MAX_MEAN) {
        return Err(Error::CountOverflow(mean));
    }
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|_| Error::CountOverflow(mean))?;
    Ok(d.sample(rng) as u64)
}

pub fn cycle_rng(seed: u64, cycle: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cycle);
    rng
}

/// Samples one cycle's counts. Four-folds are also AB and BC coincidences,
/// so N_AB and N_BC contain them plus independent Poisson remainders; every
/// count keeps its Poisson law with the stated mean.
pub fn simulate_cycle_with(
    cfg: &ExperimentConfig,
    table: &ProbabilityTable,
    setting: Setting,
    rng: &mut impl Rng,
) -> Result<CountsRecord> {
    let m = means(cfg, table, setting);
    let mut fourfold = [[0u64; 2]; 2];
    for row in fourfold.iter_mut().zip(m.fourfold.iter()) {
        for (slot, &mean) in row.0.iter_mut().zip(row.1.iter()) {
            *slot = poisson(mean, rng)?;
        }
    }
    let fourfold_b_minus = poisson(m.fourfold_b_minus, rng)?;
    let all_four: u64 = fourfold.iter().flatten().sum::<u64>() + fourfold_b_minus;
    let four_mean: f64 = m.fourfold.iter().flatten().sum::<f64>() + m.fourfold_b_minus;
    let n_ab = all_four + poisson((m.ab - four_mean).max(0.0), rng)?;
    let n_bc = all_four + poisson((m.bc - four_mean).max(0.0), rng)?;
    Ok(CountsRecord {
        setting,
        n_a: poisson(m.a, rng)?,
        n_c: poisson(m.c, rng)?,
        n_ab,
        n_bc,
        n_ac: poisson(m.ac, rng)?,
        fourfold,
        fourfold_b_minus,
    })
}

/// Convenience form that rebuilds the probability table.
pub fn simulate_cycle(cfg: &ExperimentConfig, setting: Setting, rng: &mut impl Rng) -> Result<CountsRecord> {
    cfg.validate()?;
    let table = standard_table(&cfg.noise)?;
    simulate_cycle_with(cfg, &table, setting, rng)
}

fn random_setting(rng: &mut impl Rng) -> Setting {
    Setting {
        x: rng.random_range(0..N_ALICE),
        y: rng.random_range(0..N_BOB),
        z: rng.random_range(0..N_CHARLIE),
    }
}

/// Generates the cycle stream of a run, in cycle order.
pub fn simulate_run(cfg: &ExperimentConfig, table: &ProbabilityTable) -> Result<Vec<CountsRecord>> {
    (0..cfg.num_cycles)
        .into_par_iter()
        .map(|i| {
            let mut rng = cycle_rng(cfg.seed, i as u64);
            let setting = random_setting(&mut rng);
            simulate_cycle_with(cfg, table, setting, &mut rng)
        })
        .collect()
}

/// p̂(b=+1|y) = N_{b=+1} N_A N_C / (N_AC N_AB N_BC) for one cycle.
pub fn estimate_pb(c: &Counts) -> Result<f64> {
    if c.n_ac <= 0.0 || c.n_ab <= 0.0 || c.n_bc <= 0.0 {
        return Err(Error::Degenerate(format!(
            "zero coincidence denominator (N_AC={}, N_AB={}, N_BC={})",
            c.n_ac, c.n_ab, c.n_bc
        )));
    }
    Ok(c.recorded_fourfold() * c.n_a * c.n_c / (c.n_ac * c.n_ab * c.n_bc))
}

/// Ŝ = p̂ · (N₊₊ − N₊₋ − N₋₊ + N₋₋)/ΣN over the pooled four-folds of a
/// group of cycles sharing one setting.
pub fn estimate_s(group: &[Counts], pb: f64) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::Degenerate("empty setting group".into()));
    }
    let mut f = [[0.0; 2]; 2];
    for c in group {
        for (i, row) in c.fourfold.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                f[i][j] += v;
            }
        }
    }
    correlator(&f)
        .map(|e| pb * e)
        .ok_or_else(|| Error::Degenerate("no four-fold events in group".into()))
}

/// Ŝ with p̂ taken as the mean per-cycle estimate within the same group.
pub fn estimate_s_self(group: &[Counts]) -> Result<f64> {
    let pbs: Vec<f64> = group.iter().filter_map(|c| estimate_pb(c).ok()).collect();
    if pbs.is_empty() {
        return Err(Error::Degenerate("no usable cycle in group".into()));
    }
    let pb = pbs.iter().sum::<f64>() / pbs.len() as f64;
    estimate_s(group, pb)
}

fn correlator(f: &[[f64; 2]; 2]) -> Option<f64> {
    let n = f[0][0] + f[0][1] + f[1][0] + f[1][1];
    (n > 0.0).then(|| (f[0][0] - f[0][1] - f[1][0] + f[1][1]) / n)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WEstimate {
    pub w: f64,
    pub sigma: f64,
    /// Ŝ in (x, z, y) lexicographic order, 1-based x and z.
    pub per_setting_s: Vec<SEntry>,
    pub p_b: Vec<f64>,
    pub sum_pb: f64,
    pub sum_pb_sigma: f64,
}

/// Sufficient statistics of a set of cycles.
#[derive(Clone, Debug)]
struct Tally {
    pb_sum: [f64; N_BOB],
    pb_n: [usize; N_BOB],
    fourfold: Vec<[[f64; 2]; 2]>,
}

impl Tally {
    fn new() -> Self {
        Self {
            pb_sum: [0.0; N_BOB],
            pb_n: [0; N_BOB],
            fourfold: vec![[[0.0; 2]; 2]; N_SETTINGS],
        }
    }

    fn add(&mut self, s: Setting, pb: Option<f64>, c: &Counts) {
        if let Some(p) = pb {
            self.pb_sum[s.y] += p;
            self.pb_n[s.y] += 1;
        }
        let slot = &mut self.fourfold[s.index()];
        for i in 0..2 {
            for j in 0..2 {
                slot[i][j] += c.fourfold[i][j];
            }
        }
    }

    fn pb(&self, y: usize) -> f64 {
        if self.pb_n[y] == 0 {
            0.0
        } else {
            self.pb_sum[y] / self.pb_n[y] as f64
        }
    }

    /// Ŝ_xzy (1-based x, z); settings without events contribute 0.
    fn s(&self, x: usize, z: usize, y: usize) -> Option<f64> {
        let s = Setting { x: x - 1, y, z: z - 1 };
        correlator(&self.fourfold[s.index()]).map(|e| self.pb(y) * e)
    }

    fn w(&self) -> f64 {
        w_from_parts(
            |y| {
                t_terms(y)
                    .into_iter()
                    .map(|((x, z), sign)| sign * self.s(x, z, y).unwrap_or(0.0))
                    .sum()
            },
            |y| self.pb(y),
        )
    }

    fn sum_pb(&self) -> f64 {
        (0..N_BOB).map(|y| self.pb(y)).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub analytic_w: f64,
    pub estimate: WEstimate,
    /// Cycles dropped from p̂ for a zero coincidence denominator.
    pub excluded_cycles: usize,
    /// Settings (x, z, y), 1-based x and z, with no four-fold events.
    pub empty_settings: Vec<(usize, usize, usize)>,
    pub recorded_fourfold_events: u64,
    pub total_fourfold_events: u64,
    pub expected_recorded_per_cycle: f64,
    pub expected_total_per_cycle: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub records: Option<Vec<CountsRecord>>,
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Estimates from a fixed set of records, with bootstrap over cycles.
pub fn analyze(records: &[CountsRecord], resamples: usize, seed: u64) -> WEstimate {
    let counts: Vec<Counts> = records.iter().map(|r| r.counts()).collect();
    let pbs: Vec<Option<f64>> = counts.iter().map(|c| estimate_pb(c).ok()).collect();
    let mut tally = Tally::new();
    for ((r, c), pb) in records.iter().zip(&counts).zip(&pbs) {
        tally.add(r.setting, *pb, c);
    }

    let boot: Vec<(f64, f64)> = (0..resamples)
        .into_par_iter()
        .map(|j| {
            let mut rng = cycle_rng(seed ^ BOOTSTRAP_SALT, j as u64);
            let mut t = Tally::new();
            for _ in 0..records.len() {
                let k = rng.random_range(0..records.len());
                t.add(records[k].setting, pbs[k], &counts[k]);
            }
            (t.w(), t.sum_pb())
        })
        .collect();
    let ws: Vec<f64> = boot.iter().map(|b| b.0).collect();
    let ps: Vec<f64> = boot.iter().map(|b| b.1).collect();

    let mut per_setting_s = Vec::with_capacity(N_SETTINGS);
    for x in 1..=N_ALICE {
        for z in 1..=N_CHARLIE {
            for y in 0..N_BOB {
                per_setting_s.push(SEntry {
                    x,
                    z,
                    y,
                    s: tally.s(x, z, y).unwrap_or(0.0),
                });
            }
        }
    }
    WEstimate {
        w: tally.w(),
        sigma: std_dev(&ws),
        per_setting_s,
        p_b: (0..N_BOB).map(|y| tally.pb(y)).collect(),
        sum_pb: tally.sum_pb(),
        sum_pb_sigma: std_dev(&ps),
    }
}

/// Simulates a full run and assembles Ŵ with its bootstrap uncertainty.
pub fn run_experiment(cfg: &ExperimentConfig, keep_records: bool) -> Result<RunReport> {
    cfg.validate()?;
    let table = standard_table(&cfg.noise)?;
    let records = simulate_run(cfg, &table)?;
    let estimate = analyze(&records, cfg.bootstrap_resamples, cfg.seed);

    let excluded_cycles = records
        .iter()
        .filter(|r| estimate_pb(&r.counts()).is_err())
        .count();
    let mut pooled = vec![0u64; N_SETTINGS];
    for r in &records {
        pooled[r.setting.index()] += r.recorded_fourfold();
    }
    let mut empty_settings = Vec::new();
    for x in 0..N_ALICE {
        for z in 0..N_CHARLIE {
            for y in 0..N_BOB {
                if pooled[Setting { x, y, z }.index()] == 0 {
                    empty_settings.push((x + 1, z + 1, y));
                }
            }
        }
    }
    if excluded_cycles > 0 || !empty_settings.is_empty() {
        log::warn!(
            "{excluded_cycles} degenerate cycles excluded; {} settings without four-folds",
            empty_settings.len()
        );
    }
    let recorded: u64 = records.iter().map(|r| r.recorded_fourfold()).sum();
    let total = recorded + records.iter().map(|r| r.fourfold_b_minus).sum::<u64>();
    let scale = cfg.fourfold_scale();
    let mean_pb: f64 = (0..N_BOB).map(|y| table.p_b(1, y)).sum::<f64>() / N_BOB as f64;
    Ok(RunReport {
        version: crate::VERSION.to_string(),
        config: cfg.clone(),
        analytic_w: w_value(&table),
        estimate,
        excluded_cycles,
        empty_settings,
        recorded_fourfold_events: recorded,
        total_fourfold_events: total,
        expected_recorded_per_cycle: scale * mean_pb,
        expected_total_per_cycle: scale,
        records: keep_records.then_some(records),
    })
}

/// CSV of the 72 Ŝ values in (x, z, y) order.
pub fn s_table_csv(entries: &[SEntry]) -> String {
    let mut out = String::from("x,z,y,s\n");
    for e in entries {
        out.push_str(&format!("{},{},{},{}\n", e.x, e.z, e.y, e.s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ideal_cfg() -> ExperimentConfig {
        ExperimentConfig {
            noise: NoiseParams::ideal(),
            ..Default::default()
        }
    }

    #[test]
    fn measured_rate_calibration() {
        let mut cfg = ExperimentConfig::default();
        assert_abs_diff_eq!(cfg.triggers(), 5e9, epsilon = 1e-3);
        cfg.set_uniform_efficiency(0.0794);
        // R g² η⁴ with η = 0.0794
        assert_abs_diff_eq!(cfg.fourfold_scale(), 1.24, epsilon = 0.005);
        let eta = cfg.calibrate_uniform_efficiency(1.24, FourfoldTarget::Total);
        assert_abs_diff_eq!(eta, 0.0794, epsilon = 1e-4);
        let eta_rec = cfg.calibrate_uniform_efficiency(1.24, FourfoldTarget::Recorded);
        assert_abs_diff_eq!(eta_rec, eta * 4f64.powf(0.25), epsilon = 1e-12);
    }

    #[test]
    fn dead_alice_detector() {
        let mut cfg = ideal_cfg();
        cfg.eta_a = 0.0;
        let mut rng = cycle_rng(7, 0);
        let r = simulate_cycle(&cfg, Setting { x: 0, y: 0, z: 0 }, &mut rng).unwrap();
        assert_eq!(r.n_a, 0);
        assert_eq!(r.n_ab, 0);
        assert_eq!(r.n_ac, 0);
        assert_eq!(r.recorded_fourfold(), 0);
        assert_eq!(r.fourfold_b_minus, 0);
        assert!(r.n_c > 0);
    }

    #[test]
    fn singles_follow_poisson_mean() {
        let cfg = ideal_cfg();
        let table = standard_table(&cfg.noise).unwrap();
        let n = 1000;
        let s = Setting { x: 1, y: 2, z: 3 };
        let total: f64 = (0..n)
            .map(|i| {
                let mut rng = cycle_rng(11, i);
                simulate_cycle_with(&cfg, &table, s, &mut rng).unwrap().n_a as f64
            })
            .sum();
        let mean = total / n as f64;
        let mu = cfg.triggers() * cfg.pair_prob * cfg.eta_a;
        let se = (mu / n as f64).sqrt();
        assert!((mean - mu).abs() < 3.0 * se, "mean {mean} vs {mu} (se {se})");
    }

    #[test]
    fn records_respect_coincidence_nesting() {
        let mut cfg = ideal_cfg();
        cfg.set_uniform_efficiency(0.9);
        cfg.pair_prob = 1e-6;
        let table = standard_table(&cfg.noise).unwrap();
        for i in 0..200 {
            let mut rng = cycle_rng(3, i);
            let r = simulate_cycle_with(&cfg, &table, Setting { x: 0, y: 1, z: 2 }, &mut rng).unwrap();
            let four = r.recorded_fourfold() + r.fourfold_b_minus;
            assert!(four <= r.n_ab.min(r.n_bc));
        }
    }

    #[test]
    fn overflow_is_reported() {
        let mut cfg = ideal_cfg();
        cfg.trigger_rate = 1e30;
        let mut rng = cycle_rng(1, 0);
        assert!(matches!(
            simulate_cycle(&cfg, Setting { x: 0, y: 0, z: 0 }, &mut rng),
            Err(Error::CountOverflow(_))
        ));
    }

    #[test]
    fn exact_counts_give_exact_pb() {
        let cfg = ideal_cfg();
        let table = standard_table(&cfg.noise).unwrap();
        let mut sum = 0.0;
        for y in 0..N_BOB {
            let c = expected_counts(&cfg, &table, Setting { x: 0, y, z: 0 });
            let pb = estimate_pb(&c).unwrap();
            assert_abs_diff_eq!(pb, 0.25, epsilon = 1e-12);
            sum += pb;
        }
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let zero = Counts {
            n_a: 10.0,
            n_c: 10.0,
            n_ab: 0.0,
            n_bc: 4.0,
            n_ac: 3.0,
            fourfold: [[0.0; 2]; 2],
        };
        assert!(matches!(estimate_pb(&zero), Err(Error::Degenerate(_))));
        let no_four = Counts { n_ab: 5.0, ..zero };
        assert_eq!(estimate_pb(&no_four).unwrap(), 0.0);
        assert!(estimate_s(&[no_four], 0.25).is_err());
        assert!(estimate_s(&[], 0.25).is_err());
        let flat = Counts {
            fourfold: [[3.0, 3.0], [3.0, 3.0]],
            ..no_four
        };
        assert_eq!(estimate_s(&[flat], 0.7).unwrap(), 0.0);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = ideal_cfg();
        cfg.num_cycles = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ideal_cfg();
        cfg.eta_c = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = ideal_cfg();
        cfg.cycle_collect_seconds = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let entries = vec![SEntry { x: 1, z: 2, y: 3, s: 0.5 }];
        assert_eq!(s_table_csv(&entries), "x,z,y,s\n1,2,3,0.5\n");
    }
}
