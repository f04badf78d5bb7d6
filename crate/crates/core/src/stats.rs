//! Observable channel statistics: exact values from an attack, Monte Carlo
//! estimates from running the protocol, and the two noise scenarios.
//!
//! Indices: A's preparation `i` is 0 for `|0⟩`, 1 for `|1⟩`, 2 for `|+⟩`;
//! B's Z outcome `j` is 0 or 1; A's X outcome `k` is 0 for `|+⟩`, 1 for `|-⟩`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{decompose_attack, CollectiveAttack};
use crate::error::{Error, Result};
use crate::math::{add, basis, kron_vec, norm_sqr, C64, STRUCTURAL_TOL};

pub const SENT_ZERO: usize = 0;
pub const SENT_ONE: usize = 1;
pub const SENT_PLUS: usize = 2;
pub const X_PLUS: usize = 0;
pub const X_MINUS: usize = 1;

/// Conditioning events with probability at or below this are treated as unobserved.
pub const ZERO_EVENT: f64 = 1e-14;
/// Entries this far below zero (or above one) are clamped during validation.
pub const CLAMP_TOL: f64 = 1e-6;

const SENT_LABELS: [&str; 3] = ["0", "1", "plus"];

/// Every probability A and B can observe.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStatistics {
    /// `pf[i][j]`: B measures `|j⟩` given A sent `i`.
    pub pf: [[f64; 2]; 3],
    /// `pm[i][j][k]`: A measures `k` given A sent `i` and B measured-and-resent `j`.
    /// `None` when the conditioning event has zero probability.
    pub pm: [[Option<[f64; 2]>; 2]; 3],
    /// `pr[i][k]`: A measures `k` given A sent `i` and B reflected.
    pub pr: [[f64; 2]; 3],
    /// Raw tallies when the statistics were sampled.
    pub counts: Option<StatisticCounts>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StatisticCounts {
    pub pf: [[u64; 2]; 3],
    pub pm: [[[u64; 2]; 2]; 3],
    pub pr: [[u64; 2]; 3],
}

impl StatisticCounts {
    fn merge(mut self, other: &Self) -> Self {
        for i in 0..3 {
            for j in 0..2 {
                self.pf[i][j] += other.pf[i][j];
                self.pr[i][j] += other.pr[i][j];
                for k in 0..2 {
                    self.pm[i][j][k] += other.pm[i][j][k];
                }
            }
        }
        self
    }

    fn frequencies(&self) -> ChannelStatistics {
        let norm = |c: [u64; 2]| {
            let n = c[0] + c[1];
            (n > 0).then(|| [c[0] as f64 / n as f64, c[1] as f64 / n as f64])
        };
        ChannelStatistics {
            pf: std::array::from_fn(|i| norm(self.pf[i]).unwrap_or([0.5, 0.5])),
            pm: std::array::from_fn(|i| std::array::from_fn(|j| norm(self.pm[i][j]))),
            pr: std::array::from_fn(|i| norm(self.pr[i]).unwrap_or([0.5, 0.5])),
            counts: Some(self.clone()),
        }
    }
}

impl ChannelStatistics {
    pub fn pf(&self, sent: usize, outcome: usize) -> f64 {
        self.pf[sent][outcome]
    }

    /// `~p(i, j, +)`, if defined.
    pub fn pm_plus(&self, sent: usize, outcome: usize) -> Option<f64> {
        self.pm[sent][outcome].map(|p| p[X_PLUS])
    }

    pub fn pr_plus(&self, sent: usize) -> f64 {
        self.pr[sent][X_PLUS]
    }

    /// X-basis error rate: a reflected `|+⟩` returns as `|-⟩`.
    pub fn q_x(&self) -> f64 {
        self.pr[SENT_PLUS][X_MINUS]
    }

    /// Z-basis error rate seen by B, averaged over A's two Z states.
    pub fn q_z(&self) -> f64 {
        0.5 * (self.pf[SENT_ZERO][1] + self.pf[SENT_ONE][0])
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StatisticsFile::from_stats(self, None))?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: StatisticsFile = serde_json::from_str(s)?;
        file.into_stats()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

/// On-disk statistics format.
#[derive(Debug, Serialize, Deserialize)]
pub struct StatisticsFile {
    pub pf: BTreeMap<String, [f64; 2]>,
    pub pm: BTreeMap<String, [f64; 2]>,
    pub pr: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<CountsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_key: Option<RawKeySummary>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CountsFile {
    pub pf: BTreeMap<String, [u64; 2]>,
    pub pm: BTreeMap<String, [u64; 2]>,
    pub pr: BTreeMap<String, [u64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawKeySummary {
    pub length: usize,
    pub error_rate: f64,
}

fn pm_key(i: usize, j: usize) -> String {
    format!("{},{}", SENT_LABELS[i], j)
}

impl StatisticsFile {
    pub fn from_stats(s: &ChannelStatistics, raw_key: Option<RawKeySummary>) -> Self {
        let mut pf = BTreeMap::new();
        let mut pm = BTreeMap::new();
        let mut pr = BTreeMap::new();
        for i in 0..3 {
            pf.insert(SENT_LABELS[i].to_string(), s.pf[i]);
            pr.insert(SENT_LABELS[i].to_string(), s.pr[i]);
            for j in 0..2 {
                if let Some(p) = s.pm[i][j] {
                    pm.insert(pm_key(i, j), p);
                }
            }
        }
        let counts = s.counts.as_ref().map(|c| {
            let mut cf = CountsFile {
                pf: BTreeMap::new(),
                pm: BTreeMap::new(),
                pr: BTreeMap::new(),
            };
            for i in 0..3 {
                cf.pf.insert(SENT_LABELS[i].to_string(), c.pf[i]);
                cf.pr.insert(SENT_LABELS[i].to_string(), c.pr[i]);
                for j in 0..2 {
                    cf.pm.insert(pm_key(i, j), c.pm[i][j]);
                }
            }
            cf
        });
        Self {
            pf,
            pm,
            pr,
            counts,
            raw_key,
        }
    }

    pub fn into_stats(self) -> Result<ChannelStatistics> {
        let take = |map: &BTreeMap<String, [f64; 2]>, group: &str, key: &str| {
            map.get(key)
                .copied()
                .ok_or_else(|| Error::MissingStatistic(format!("{group}[{key}]")))
        };
        let mut s = ChannelStatistics {
            pf: [[0.0; 2]; 3],
            pm: [[None; 2]; 3],
            pr: [[0.0; 2]; 3],
            counts: None,
        };
        for i in 0..3 {
            s.pf[i] = take(&self.pf, "pf", SENT_LABELS[i])?;
            s.pr[i] = take(&self.pr, "pr", SENT_LABELS[i])?;
            for j in 0..2 {
                s.pm[i][j] = self.pm.get(&pm_key(i, j)).copied();
            }
        }
        if let Some(cf) = self.counts {
            let mut c = StatisticCounts::default();
            for i in 0..3 {
                c.pf[i] = cf.pf.get(SENT_LABELS[i]).copied().unwrap_or_default();
                c.pr[i] = cf.pr.get(SENT_LABELS[i]).copied().unwrap_or_default();
                for j in 0..2 {
                    c.pm[i][j] = cf.pm.get(&pm_key(i, j)).copied().unwrap_or_default();
                }
            }
            s.counts = Some(c);
        }
        Ok(s)
    }
}

/// The two noise families used to illustrate the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Independent depolarizing channels each way: `Q_X = 2Q(1-Q)`.
    IndependentDepolarizing,
    /// Correlated channels: `Q_X = Q`.
    Dependent,
}

impl ScenarioKind {
    pub fn q_x(self, q: f64) -> f64 {
        match self {
            Self::IndependentDepolarizing => 2.0 * q * (1.0 - q),
            Self::Dependent => q,
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" | "independent-depolarizing" => Ok(Self::IndependentDepolarizing),
            "dependent" => Ok(Self::Dependent),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected independent or dependent)"
            ))),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IndependentDepolarizing => "independent",
            Self::Dependent => "dependent",
        })
    }
}

/// Statistics of the symmetric noise scenario with Z-error rate `q`.
///
/// Every mismatched statistic sits at its symmetric value ½; only `Q_X`
/// distinguishes the two kinds.
pub fn scenario_statistics(q: f64, kind: ScenarioKind) -> Result<ChannelStatistics> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::Domain {
            value: q,
            domain: "[0, 1/2]",
        });
    }
    let q_x = kind.q_x(q);
    let pf = [[1.0 - q, q], [q, 1.0 - q], [0.5, 0.5]];
    Ok(ChannelStatistics {
        pf,
        pm: pf.map(|row| row.map(|p| (p > ZERO_EVENT).then_some([0.5, 0.5]))),
        pr: [[0.5, 0.5], [0.5, 0.5], [1.0 - q_x, q_x]],
        counts: None,
    })
}

fn x_plus_prob(transit0: &[C64], transit1: &[C64]) -> f64 {
    // ‖(⟨+| ⊗ I) ψ‖² = ½‖ψ_0 + ψ_1‖²
    0.5 * norm_sqr(&add(transit0, transit1))
}

fn conditional(joint_plus: f64, marginal: f64) -> Option<[f64; 2]> {
    (marginal > ZERO_EVENT).then(|| {
        let p = (joint_plus / marginal).clamp(0.0, 1.0);
        [p, 1.0 - p]
    })
}

/// All statistics computed exactly from the attack's ancilla vectors.
pub fn exact_statistics(a: &CollectiveAttack) -> ChannelStatistics {
    let dec = decompose_attack(a);
    let e = &dec.forward;
    let r = &dec.reverse;
    let g = &dec.reflection;
    let s = std::f64::consts::FRAC_1_SQRT_2;

    // pf: B's outcome distribution
    let plus_j = |j: usize| 0.5 * norm_sqr(&add(&e[j], &e[2 + j]));
    let pf = [
        [norm_sqr(&e[0]), norm_sqr(&e[1])],
        [norm_sqr(&e[2]), norm_sqr(&e[3])],
        [plus_j(0), plus_j(1)],
    ];

    // pm: after B resends |j⟩ Eve holds e_{j, 2i+j}; for |+⟩ an equal
    // superposition of e_j and e_{2+j}
    let mut pm = [[None; 2]; 3];
    for i in 0..2 {
        for j in 0..2 {
            let src = &r[j][2 * i + j];
            pm[i][j] = conditional(x_plus_prob(&src[0], &src[1]), pf[i][j]);
        }
    }
    for j in 0..2 {
        let t0: Vec<C64> = add(&r[j][j][0], &r[j][2 + j][0]).iter().map(|z| z * s).collect();
        let t1: Vec<C64> = add(&r[j][j][1], &r[j][2 + j][1]).iter().map(|z| z * s).collect();
        pm[SENT_PLUS][j] = conditional(x_plus_prob(&t0, &t1), pf[SENT_PLUS][j]);
    }

    let pr_plus = [
        x_plus_prob(&g[0], &g[1]),
        x_plus_prob(&g[2], &g[3]),
        0.5 * x_plus_prob(&add(&g[0], &g[2]), &add(&g[1], &g[3])),
    ];
    let pr = pr_plus.map(|p| {
        let p = p.clamp(0.0, 1.0);
        [p, 1.0 - p]
    });

    ChannelStatistics {
        pf,
        pm,
        pr,
        counts: None,
    }
}

/// `(η₁, η₂)` from observable statistics.
///
/// Terms whose conditional statistic is absent carry zero weight and are
/// skipped; an absent statistic with non-zero weight is an error.
pub fn eta_from_statistics(s: &ChannelStatistics) -> Result<(f64, f64)> {
    // weight * (pm(i,j,+) - offset), zero when the weight is zero
    let term = |i: usize, j: usize, weight: f64, offset: f64| -> Result<f64> {
        match s.pm_plus(i, j) {
            Some(p) => Ok(weight * (p - offset)),
            None if weight <= ZERO_EVENT => Ok(0.0),
            None => Err(Error::MissingStatistic(format!("pm[{}]", pm_key(i, j)))),
        }
    };
    let pf = |i: usize, j: usize| s.pf(i, j);
    let z0 = pf(SENT_ZERO, 0) + pf(SENT_ONE, 0);
    let z1 = pf(SENT_ZERO, 1) + pf(SENT_ONE, 1);

    let eta1 = term(SENT_PLUS, 0, 2.0 * pf(SENT_PLUS, 0), 0.0)? - 0.5 * z0
        - term(SENT_ZERO, 0, pf(SENT_ZERO, 0), 0.5)?
        - term(SENT_ONE, 0, pf(SENT_ONE, 0), 0.5)?
        - pf(SENT_PLUS, 0)
        + 0.5 * z0;
    let eta2 = term(SENT_PLUS, 1, 2.0 * pf(SENT_PLUS, 1), 0.0)? - 0.5 * z1
        - term(SENT_ZERO, 1, pf(SENT_ZERO, 1), 0.5)?
        - term(SENT_ONE, 1, pf(SENT_ONE, 1), 0.5)?
        + pf(SENT_PLUS, 0)
        - 0.5 * z0;
    Ok((eta1, eta2))
}

/// A value that validation moved back into `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Clamp {
    pub entry: String,
    pub from: f64,
    pub to: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub clamps: Vec<Clamp>,
}

/// Checks ranges and normalization; returns the (possibly clamped) statistics.
pub fn validate_statistics(s: &ChannelStatistics) -> Result<(ChannelStatistics, ValidationReport)> {
    let mut out = s.clone();
    let mut report = ValidationReport::default();

    let mut fix = |entry: String, v: &mut f64| -> Result<()> {
        if !v.is_finite() || *v < -CLAMP_TOL || *v > 1.0 + CLAMP_TOL {
            return Err(Error::InvalidStatistics {
                entry,
                value: *v,
                reason: "outside [0, 1]".into(),
            });
        }
        let clamped = v.clamp(0.0, 1.0);
        if clamped != *v {
            report.clamps.push(Clamp {
                entry,
                from: *v,
                to: clamped,
            });
            *v = clamped;
        }
        Ok(())
    };
    for i in 0..3 {
        for k in 0..2 {
            fix(format!("pf[{}][{k}]", SENT_LABELS[i]), &mut out.pf[i][k])?;
            fix(format!("pr[{}][{k}]", SENT_LABELS[i]), &mut out.pr[i][k])?;
        }
        for j in 0..2 {
            if let Some(p) = out.pm[i][j].as_mut() {
                for (k, v) in p.iter_mut().enumerate() {
                    fix(format!("pm[{}][{k}]", pm_key(i, j)), v)?;
                }
            }
        }
    }

    // normalization on the unclamped values: exact statistics to
    // STRUCTURAL_TOL, sampled ones to 3σ of their sample size
    let counts = s.counts.clone().unwrap_or_default();
    let check_sum = |entry: String, p: [f64; 2], n: [u64; 2]| -> Result<()> {
        let tol = match (&s.counts, n[0] + n[1]) {
            (Some(_), total) if total > 0 => (3.0 / (total as f64).sqrt()).max(STRUCTURAL_TOL),
            _ => STRUCTURAL_TOL,
        };
        let total = p[0] + p[1];
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidStatistics {
                entry,
                value: total,
                reason: "pair does not sum to 1".into(),
            });
        }
        Ok(())
    };
    for i in 0..3 {
        check_sum(format!("pf[{}]", SENT_LABELS[i]), s.pf[i], counts.pf[i])?;
        check_sum(format!("pr[{}]", SENT_LABELS[i]), s.pr[i], counts.pr[i])?;
        for j in 0..2 {
            if let Some(p) = s.pm[i][j] {
                check_sum(format!("pm[{}]", pm_key(i, j)), p, counts.pm[i][j])?;
            }
        }
    }
    Ok((out, report))
}

/// Parameters of one protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    /// Probability A prepares a Z-basis state (split evenly between `|0⟩` and `|1⟩`).
    pub p: f64,
    /// Probability B measures and resends.
    pub q: f64,
    pub iterations: u64,
    pub seed: u64,
    /// Fraction of raw-key iterations sacrificed to parameter estimation.
    pub test_fraction: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            p: 0.5,
            q: 0.5,
            iterations: 100_000,
            seed: 0,
            test_fraction: 0.0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("p = {} not in (0, 1)", self.p)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Config(format!("q = {} not in (0, 1)", self.q)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::Config(format!(
                "test fraction {} not in [0, 1)",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Result of [`simulate_protocol`].
#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    /// Sampled frequencies, with raw counts attached.
    pub statistics: ChannelStatistics,
    pub raw_key_a: Vec<u8>,
    pub raw_key_b: Vec<u8>,
}

impl SimulationOutcome {
    pub fn raw_key_summary(&self) -> RawKeySummary {
        let errors = self
            .raw_key_a
            .iter()
            .zip(&self.raw_key_b)
            .filter(|(a, b)| a != b)
            .count();
        let length = self.raw_key_a.len();
        RawKeySummary {
            length,
            error_rate: if length == 0 { 0.0 } else { errors as f64 / length as f64 },
        }
    }
}

/// Iterations per RNG stream. Iteration `n` draws from ChaCha stream
/// `n / BLOCK` of the master seed, so any partition of whole blocks across
/// threads reproduces the serial run.
const BLOCK: u64 = 1 << 14;

/// Born-rule probabilities of every branch of one iteration, obtained by
/// evolving `|i⟩ ⊗ |0⟩_E` through the attack.
struct BranchTable {
    /// `p_b[i][j]`: B's measurement yields `j`.
    p_b: [[f64; 2]; 3],
    /// A sees `|+⟩` after B resent `j`.
    plus_after_resend: [[f64; 2]; 3],
    /// A sees `|+⟩` after B reflected.
    plus_after_reflect: [f64; 3],
}

impl BranchTable {
    fn new(a: &CollectiveAttack) -> Self {
        let d = a.ancilla_dim();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ancilla0 = basis(0, d);
        let prepared = [
            basis(0, 2),
            basis(1, 2),
            vec![C64::new(s, 0.0), C64::new(s, 0.0)],
        ];
        let mut table = Self {
            p_b: [[0.0; 2]; 3],
            plus_after_resend: [[0.5; 2]; 3],
            plus_after_reflect: [0.5; 3],
        };
        for (i, state) in prepared.iter().enumerate() {
            let after_forward = a.forward().apply(&kron_vec(state, &ancilla0));
            let back = a.reverse().apply(&after_forward);
            table.plus_after_reflect[i] = x_plus_prob(&back[..d], &back[d..]).clamp(0.0, 1.0);
            for j in 0..2 {
                let eve = &after_forward[j * d..(j + 1) * d];
                let pj = norm_sqr(eve);
                table.p_b[i][j] = pj;
                if pj > ZERO_EVENT {
                    let collapsed: Vec<C64> = eve.iter().map(|z| z / pj.sqrt()).collect();
                    let back = a.reverse().apply(&kron_vec(&basis(j, 2), &collapsed));
                    table.plus_after_resend[i][j] = x_plus_prob(&back[..d], &back[d..]).clamp(0.0, 1.0);
                }
            }
        }
        table
    }
}

struct BlockResult {
    counts: StatisticCounts,
    key_a: Vec<u8>,
    key_b: Vec<u8>,
}

fn run_block(table: &BranchTable, cfg: &ProtocolConfig, block: u64) -> BlockResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(block);
    let start = block * BLOCK;
    let end = (start + BLOCK).min(cfg.iterations);
    let mut out = BlockResult {
        counts: StatisticCounts::default(),
        key_a: Vec::new(),
        key_b: Vec::new(),
    };
    for _ in start..end {
        // step 1: A's preparation
        let u: f64 = rng.random();
        let sent = if u < cfg.p / 2.0 {
            SENT_ZERO
        } else if u < cfg.p {
            SENT_ONE
        } else {
            SENT_PLUS
        };
        // step 2: B's operation
        let measure = rng.random::<f64>() < cfg.q;
        let b_draw: f64 = rng.random();
        let a_draw: f64 = rng.random();
        if measure {
            let outcome = if b_draw < table.p_b[sent][0] { 0 } else { 1 };
            // step 3: A's X measurement
            let k = if a_draw < table.plus_after_resend[sent][outcome] { X_PLUS } else { X_MINUS };
            out.counts.pf[sent][outcome] += 1;
            out.counts.pm[sent][outcome][k] += 1;
            // step 5: key iterations, minus the sacrificed test subset
            if sent != SENT_PLUS {
                let sacrificed = cfg.test_fraction > 0.0 && rng.random::<f64>() < cfg.test_fraction;
                if !sacrificed {
                    out.key_a.push(sent as u8);
                    out.key_b.push(outcome as u8);
                }
            }
        } else {
            let k = if a_draw < table.plus_after_reflect[sent] { X_PLUS } else { X_MINUS };
            out.counts.pr[sent][k] += 1;
        }
    }
    out
}

/// Runs the quantum stage of the protocol `cfg.iterations` times against `a`.
///
/// Statistics are tallied over every iteration by its disclosed (preparation,
/// operation) pair. Raw-key bits come from Z-preparation, measure-and-resend
/// iterations not drawn into the test subset.
pub fn simulate_protocol(a: &CollectiveAttack, cfg: &ProtocolConfig) -> Result<SimulationOutcome> {
    cfg.validate()?;
    let table = BranchTable::new(a);
    let blocks = cfg.iterations.div_ceil(BLOCK);
    let results: Vec<BlockResult> = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(&table, cfg, b))
        .collect();

    let mut counts = StatisticCounts::default();
    let mut raw_key_a = Vec::new();
    let mut raw_key_b = Vec::new();
    for r in results {
        counts = counts.merge(&r.counts);
        raw_key_a.extend(r.key_a);
        raw_key_b.extend(r.key_b);
    }
    Ok(SimulationOutcome {
        statistics: counts.frequencies(),
        raw_key_a,
        raw_key_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{depolarizing_attack, paper_attack, random_attack};
    use approx::assert_abs_diff_eq;

    fn max_diff(a: &ChannelStatistics, b: &ChannelStatistics) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for k in 0..2 {
                m = m.max((a.pf[i][k] - b.pf[i][k]).abs());
                m = m.max((a.pr[i][k] - b.pr[i][k]).abs());
            }
            for j in 0..2 {
                match (a.pm[i][j], b.pm[i][j]) {
                    (Some(x), Some(y)) => m = m.max((x[0] - y[0]).abs()).max((x[1] - y[1]).abs()),
                    (None, None) => {}
                    _ => return f64::INFINITY,
                }
            }
        }
        m
    }

    #[test]
    fn identity_statistics() {
        let s = exact_statistics(&CollectiveAttack::identity(1).unwrap());
        assert_eq!(s.pf[SENT_ZERO], [1.0, 0.0]);
        assert_eq!(s.pf[SENT_ONE], [0.0, 1.0]);
        assert_abs_diff_eq!(s.pf[SENT_PLUS][0], 0.5, epsilon = 1e-15);
        assert_eq!(s.pm[SENT_ZERO][1], None);
        assert_eq!(s.pm[SENT_ONE][0], None);
        for (i, j) in [(0, 0), (1, 1), (2, 0), (2, 1)] {
            assert_abs_diff_eq!(s.pm_plus(i, j).unwrap(), 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(s.pr_plus(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.pr_plus(1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q_x(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn paper_attack_statistics() {
        let s = exact_statistics(&paper_attack());
        assert_eq!(s.q_z(), 0.0);
        assert_abs_diff_eq!(s.q_x(), 0.0, epsilon = 1e-15);
        for (i, j) in [(0, 0), (1, 1), (2, 0), (2, 1)] {
            assert_abs_diff_eq!(s.pm_plus(i, j).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(s.pr_plus(0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.pr_plus(1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn depolarizing_matches_scenario() {
        for q in [0.0, 0.03, 0.079, 0.2, 0.5] {
            let exact = exact_statistics(&depolarizing_attack(q).unwrap());
            let scenario = scenario_statistics(q, ScenarioKind::IndependentDepolarizing).unwrap();
            assert!(max_diff(&exact, &scenario) <= 1e-9, "q = {q}");
        }
    }

    #[test]
    fn scenario_values() {
        let s = scenario_statistics(0.0, ScenarioKind::IndependentDepolarizing).unwrap();
        assert_eq!(s.q_x(), 0.0);
        assert_eq!(s.pf[0], [1.0, 0.0]);
        let s = scenario_statistics(0.079, ScenarioKind::IndependentDepolarizing).unwrap();
        assert_abs_diff_eq!(s.q_x(), 0.145518, epsilon = 1e-12);
        let s = scenario_statistics(0.11, ScenarioKind::Dependent).unwrap();
        assert_eq!(s.q_x(), 0.11);
        assert!(scenario_statistics(0.51, ScenarioKind::Dependent).is_err());
        assert!(scenario_statistics(-0.01, ScenarioKind::Dependent).is_err());
    }

    #[test]
    fn scenario_kind_parsing() {
        assert_eq!("independent".parse::<ScenarioKind>().unwrap(), ScenarioKind::IndependentDepolarizing);
        assert_eq!("dependent".parse::<ScenarioKind>().unwrap(), ScenarioKind::Dependent);
        assert!("bogus".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn eta_symmetric_and_paper() {
        for q in [0.0, 0.05, 0.3] {
            for kind in [ScenarioKind::IndependentDepolarizing, ScenarioKind::Dependent] {
                let (e1, e2) = eta_from_statistics(&scenario_statistics(q, kind).unwrap()).unwrap();
                assert_abs_diff_eq!(e1, 0.0, epsilon = 1e-15);
                assert_abs_diff_eq!(e2, 0.0, epsilon = 1e-15);
            }
        }
        let a = paper_attack();
        let (e1, e2) = eta_from_statistics(&exact_statistics(&a)).unwrap();
        assert_abs_diff_eq!(e1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e2, 0.0, epsilon = 1e-12);
        let (d1, d2) = decompose_attack(&a).etas();
        assert_abs_diff_eq!(d1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eta_matches_inner_products() {
        for seed in 0..50 {
            let a = random_attack(1 + seed as usize % 4, seed).unwrap();
            let (e1, e2) = eta_from_statistics(&exact_statistics(&a)).unwrap();
            let (d1, d2) = decompose_attack(&a).etas();
            assert!((e1 - d1).abs() <= 1e-9, "seed {seed}");
            assert!((e2 - d2).abs() <= 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn eta_reports_missing_weighted_statistic() {
        let mut s = scenario_statistics(0.1, ScenarioKind::Dependent).unwrap();
        s.pm[SENT_PLUS][0] = None;
        assert!(matches!(eta_from_statistics(&s), Err(Error::MissingStatistic(_))));
    }

    #[test]
    fn reflection_identities() {
        for seed in 100..150 {
            let a = random_attack(3, seed).unwrap();
            let s = exact_statistics(&a);
            let dec = decompose_attack(&a);
            assert!((s.pr_plus(0) - 0.5 - dec.re_reflection(0, 1)).abs() <= 1e-9);
            assert!((s.pr_plus(1) - 0.5 - dec.re_reflection(2, 3)).abs() <= 1e-9);
            assert!((s.q_x() - dec.q_x()).abs() <= 1e-9);
        }
    }

    #[test]
    fn validation() {
        let s = exact_statistics(&random_attack(2, 1).unwrap());
        let (v, report) = validate_statistics(&s).unwrap();
        assert!(report.clamps.is_empty());
        assert_eq!(v, s);

        let mut bad = scenario_statistics(0.0, ScenarioKind::Dependent).unwrap();
        bad.pf[0] = [1.2, -0.2];
        match validate_statistics(&bad) {
            Err(Error::InvalidStatistics { entry, .. }) => assert_eq!(entry, "pf[0][0]"),
            other => panic!("unexpected {other:?}"),
        }

        let mut tiny = scenario_statistics(0.0, ScenarioKind::Dependent).unwrap();
        tiny.pf[0] = [1.0 + 5e-7, -5e-7];
        let (v, report) = validate_statistics(&tiny).unwrap();
        assert_eq!(report.clamps.len(), 2);
        assert_eq!(v.pf[0], [1.0, 0.0]);

        let mut unnormalized = scenario_statistics(0.1, ScenarioKind::Dependent).unwrap();
        unnormalized.pr[2] = [0.5, 0.4];
        assert!(validate_statistics(&unnormalized).is_err());
    }

    #[test]
    fn sampled_statistics_validate() {
        let a = depolarizing_attack(0.05).unwrap();
        let cfg = ProtocolConfig {
            iterations: 100_000,
            seed: 3,
            ..Default::default()
        };
        let out = simulate_protocol(&a, &cfg).unwrap();
        assert!(validate_statistics(&out.statistics).is_ok());
    }

    #[test]
    fn config_validation() {
        let a = CollectiveAttack::identity(1).unwrap();
        for cfg in [
            ProtocolConfig { p: 0.0, ..Default::default() },
            ProtocolConfig { q: 1.0, ..Default::default() },
            ProtocolConfig { iterations: 0, ..Default::default() },
            ProtocolConfig { test_fraction: 1.0, ..Default::default() },
        ] {
            assert!(simulate_protocol(&a, &cfg).is_err());
        }
    }

    #[test]
    fn simulation_is_deterministic_and_noiseless_key_agrees() {
        let a = CollectiveAttack::identity(1).unwrap();
        let cfg = ProtocolConfig {
            iterations: 50_000,
            seed: 9,
            ..Default::default()
        };
        let x = simulate_protocol(&a, &cfg).unwrap();
        let y = simulate_protocol(&a, &cfg).unwrap();
        assert_eq!(x.statistics, y.statistics);
        assert_eq!(x.raw_key_a, y.raw_key_a);
        assert_eq!(x.raw_key_a, x.raw_key_b);
        assert!(!x.raw_key_a.is_empty());
    }

    #[test]
    fn test_fraction_shrinks_raw_key() {
        let a = CollectiveAttack::identity(1).unwrap();
        let base = ProtocolConfig { iterations: 40_000, seed: 1, ..Default::default() };
        let full = simulate_protocol(&a, &base).unwrap().raw_key_a.len();
        let half = simulate_protocol(&a, &ProtocolConfig { test_fraction: 0.5, ..base }).unwrap().raw_key_a.len();
        assert!((half as f64) < 0.6 * full as f64);
    }

    #[test]
    fn json_round_trip() {
        let s = exact_statistics(&random_attack(2, 8).unwrap());
        let back = ChannelStatistics::from_json_str(&s.to_json_string().unwrap()).unwrap();
        assert_eq!(s, back);

        let id = exact_statistics(&CollectiveAttack::identity(1).unwrap());
        let text = id.to_json_string().unwrap();
        assert!(!text.contains("\"0,1\""));
        assert_eq!(ChannelStatistics::from_json_str(&text).unwrap(), id);

        let out = simulate_protocol(&paper_attack(), &ProtocolConfig { iterations: 1000, ..Default::default() }).unwrap();
        let back = ChannelStatistics::from_json_str(&out.statistics.to_json_string().unwrap()).unwrap();
        assert_eq!(back.counts, out.statistics.counts);

        assert!(ChannelStatistics::from_json_str(r#"{"pf":{},"pm":{},"pr":{}}"#).is_err());
    }
}
