//! Gain generators.
//!
//! Discrete adversaries emit gain vectors in `[−1, 1]ⁿ`; the continuous game
//! is driven by Gaussian increments `ΔG = Wᵀ ΔB` whose instantaneous
//! covariance is `Σ = WᵀW`.
//!
//! Randomness comes from ChaCha8 keyed by the run seed, with the trial index as
//! the stream id, so every trial owns an independent reproducible stream.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GainVector, SimplexDistribution};

const COLUMN_NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// Independent ±1 per coordinate and round.
    UniformRandom,
    /// Rows of a CSV file, one per round.
    FixedSequence,
    /// Gain 1 for the leader, 0 for everyone else.
    SingleLeader,
    /// Gain 1 for the least-weighted expert (lowest index on ties), −1 for the rest.
    Alternating,
}

impl AdversaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdversaryKind::UniformRandom => "uniform-random",
            AdversaryKind::FixedSequence => "fixed-sequence",
            AdversaryKind::SingleLeader => "single-leader",
            AdversaryKind::Alternating => "alternating",
        }
    }
}

impl std::fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_path: Option<PathBuf>,
    /// Leading expert of `single-leader`; defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader: Option<usize>,
}

impl AdversarySpec {
    pub fn new(kind: AdversaryKind, seed: u64) -> Self {
        AdversarySpec {
            kind,
            seed,
            sequence_path: None,
            leader: None,
        }
    }

    pub fn fixed_sequence(path: impl Into<PathBuf>) -> Self {
        AdversarySpec {
            sequence_path: Some(path.into()),
            ..Self::new(AdversaryKind::FixedSequence, 0)
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Random { seed: u64, stream: u64, words: u128 },
    Rows(Vec<Vec<f64>>),
    Leader(usize),
    Alternating,
}

/// A discrete adversary ready to play against `n` experts.
#[derive(Debug, Clone)]
pub struct Adversary {
    kind: AdversaryKind,
    n: usize,
    source: Source,
}

impl Adversary {
    /// Builds trial `trial` of `spec`; only `uniform-random` depends on the
    /// trial index.
    pub fn new(spec: &AdversarySpec, n: usize, trial: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("adversary needs at least one expert".into()));
        }
        let source = match spec.kind {
            AdversaryKind::UniformRandom => Source::Random {
                seed: spec.seed,
                stream: trial,
                // 32-bit words per round: one u64 covers 64 coordinates
                words: 2 * n.div_ceil(64) as u128,
            },
            AdversaryKind::FixedSequence => {
                let path = spec.sequence_path.as_ref().ok_or_else(|| {
                    Error::Config("fixed-sequence adversary needs sequence_path".into())
                })?;
                Source::Rows(read_sequence(path, n)?)
            }
            AdversaryKind::SingleLeader => {
                let leader = spec.leader.unwrap_or(0);
                if leader >= n {
                    return Err(Error::Config(format!(
                        "leader {leader} out of range for {n} experts"
                    )));
                }
                Source::Leader(leader)
            }
            AdversaryKind::Alternating => Source::Alternating,
        };
        Ok(Adversary {
            kind: spec.kind,
            n,
            source,
        })
    }

    /// A fixed-sequence adversary over in-memory rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::Config("fixed sequence needs at least one non-empty row".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            GainVector::discrete(row.clone()).map_err(|e| e.at_round(i as u64 + 1))?;
        }
        Ok(Adversary {
            kind: AdversaryKind::FixedSequence,
            n,
            source: Source::Rows(rows),
        })
    }

    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Gains for `round ≥ 1`, chosen after seeing the player's distribution.
    pub fn next_gain(&self, round: u64, player_dist: &SimplexDistribution) -> Result<GainVector> {
        if round < 1 {
            return Err(Error::domain("next_gain", "rounds start at 1"));
        }
        if player_dist.len() != self.n {
            return Err(Error::domain(
                "next_gain",
                format!("distribution over {} experts, adversary has {}", player_dist.len(), self.n),
            ));
        }
        let gains = match &self.source {
            Source::Random {
                seed,
                stream,
                words,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(*stream);
                rng.set_word_pos((round as u128 - 1) * words);
                let mut gains = Vec::with_capacity(self.n);
                while gains.len() < self.n {
                    let bits = rng.next_u64();
                    let take = (self.n - gains.len()).min(64);
                    gains.extend((0..take).map(|b| if bits >> b & 1 == 1 { 1.0 } else { -1.0 }));
                }
                gains
            }
            Source::Rows(rows) => rows
                .get(round as usize - 1)
                .cloned()
                .ok_or(Error::EndOfSequence {
                    round,
                    len: rows.len(),
                })?,
            Source::Leader(leader) => {
                let mut gains = vec![0.0; self.n];
                gains[*leader] = 1.0;
                gains
            }
            Source::Alternating => {
                let w = player_dist.weights();
                let mut target = 0;
                for (i, &wi) in w.iter().enumerate() {
                    if wi < w[target] {
                        target = i;
                    }
                }
                let mut gains = vec![-1.0; self.n];
                gains[target] = 1.0;
                gains
            }
        };
        GainVector::discrete(gains)
    }
}

/// Reads a gain sequence with header `g1,...,gn`.
pub fn read_sequence(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let file_err = |line: u64, msg: String| Error::SequenceFile {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| file_err(0, e.to_string()))?;
    let header = reader.headers().map_err(|e| file_err(1, e.to_string()))?.clone();
    let expected: Vec<String> = (1..=n).map(|i| format!("g{i}")).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(file_err(
            1,
            format!("header must be {}, found {}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            file_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(n);
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| file_err(line, format!("column g{}: not a number: {field:?}", col + 1)))?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(file_err(line, format!("column g{}: gain {v} outside [-1, 1]", col + 1)));
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `rows` in the format [`read_sequence`] accepts.
pub fn write_sequence(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let n = rows.first().map_or(0, Vec::len);
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record((1..=n).map(|i| format!("g{i}")))?;
    for row in rows {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// A random fixed sequence: `rounds` rows of i.i.d. uniform gains in `[−1, 1]`.
pub fn random_sequence(n: usize, rounds: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rounds)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// Constant weight matrix `W` whose columns `w⁽ⁱ⁾` are unit vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceDoc", into = "CovarianceDoc")]
pub struct CovarianceSpec {
    w: DMatrix<f64>,
    identity: bool,
    doc: CovarianceDoc,
}

/// JSON form of a [`CovarianceSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovarianceDoc {
    Identity { n: usize },
    /// `Σ_ij = ρ` off the diagonal.
    Equicorrelated { n: usize, rho: f64 },
    /// `W` given column by column.
    Columns { columns: Vec<Vec<f64>> },
}

impl TryFrom<CovarianceDoc> for CovarianceSpec {
    type Error = Error;

    fn try_from(doc: CovarianceDoc) -> Result<Self> {
        match &doc {
            CovarianceDoc::Identity { n } => Self::identity(*n),
            CovarianceDoc::Equicorrelated { n, rho } => Self::equicorrelated(*n, *rho),
            CovarianceDoc::Columns { columns } => Self::from_columns(columns),
        }
    }
}

impl From<CovarianceSpec> for CovarianceDoc {
    fn from(spec: CovarianceSpec) -> Self {
        spec.doc
    }
}

impl CovarianceSpec {
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("covariance needs at least one expert".into()));
        }
        Ok(CovarianceSpec {
            w: DMatrix::identity(n, n),
            identity: true,
            doc: CovarianceDoc::Identity { n },
        })
    }

    /// `W` with `WᵀW = (1 − ρ)I + ρ𝟙𝟙ᵀ`, from a Cholesky factor; needs
    /// `−1/(n−1) < ρ < 1`.
    pub fn equicorrelated(n: usize, rho: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("covariance needs at least one expert".into()));
        }
        let lower = if n > 1 { -1.0 / (n as f64 - 1.0) } else { f64::NEG_INFINITY };
        if !(rho > lower && rho < 1.0) {
            return Err(Error::Config(format!(
                "equicorrelation {rho} not positive definite for n = {n}"
            )));
        }
        let sigma = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho });
        let chol = sigma
            .cholesky()
            .ok_or_else(|| Error::Config(format!("Cholesky failed for rho = {rho}")))?;
        let mut spec = Self::from_matrix(chol.l().transpose())?;
        spec.doc = CovarianceDoc::Equicorrelated { n, rho };
        Ok(spec)
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::Config("weight matrix must be square and non-empty".into()));
        }
        let w = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
        let mut spec = Self::from_matrix(w)?;
        spec.doc = CovarianceDoc::Columns {
            columns: columns.to_vec(),
        };
        Ok(spec)
    }

    fn from_matrix(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() || w.nrows() == 0 {
            return Err(Error::Config("weight matrix must be square and non-empty".into()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("weight matrix has non-finite entries".into()));
        }
        for (j, col) in w.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > COLUMN_NORM_TOLERANCE {
                return Err(Error::Config(format!(
                    "column {j} of the weight matrix has norm {norm}, expected 1"
                )));
            }
        }
        let n = w.nrows();
        let identity = w == DMatrix::identity(n, n);
        let columns = w.column_iter().map(|c| c.iter().copied().collect()).collect();
        Ok(CovarianceSpec {
            w,
            identity,
            doc: CovarianceDoc::Columns { columns },
        })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn weight_matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `Σ = WᵀW`.
    pub fn sigma(&self) -> DMatrix<f64> {
        self.w.transpose() * &self.w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianPathConfig {
    pub cov: CovarianceSpec,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl BrownianPathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon {} must be finite and at least dt = {}",
                self.horizon, self.dt
            )));
        }
        Ok(())
    }

    /// `⌈horizon / dt⌉`, ignoring float noise in the ratio.
    pub fn steps(&self) -> u64 {
        let ratio = self.horizon / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as u64
        } else {
            ratio.ceil() as u64
        }
    }

    pub fn increments(&self, trial: u64) -> Result<BrownianIncrements> {
        self.validate()?;
        Ok(BrownianIncrements::new(self, trial))
    }
}

/// Sequence of `ΔG_k = Wᵀ ΔB_k`, `ΔB_k ~ N(0, dt·I)`, for `k = 1..steps`.
///
/// Step `k` consumes a fixed block of the trial's stream, so its draws do not
/// depend on how earlier steps were consumed.
#[derive(Debug, Clone)]
pub struct BrownianIncrements {
    w_t: Option<DMatrix<f64>>,
    sd: f64,
    steps: u64,
    step: u64,
    rng: ChaCha8Rng,
    db: DVector<f64>,
}

impl BrownianIncrements {
    fn new(cfg: &BrownianPathConfig, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial);
        BrownianIncrements {
            w_t: (!cfg.cov.is_identity()).then(|| cfg.cov.weight_matrix().transpose()),
            sd: cfg.dt.sqrt(),
            steps: cfg.steps(),
            step: 0,
            rng,
            db: DVector::zeros(cfg.cov.n()),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Fills `out` with the next increment; `false` once the path is exhausted.
    pub fn next_into(&mut self, out: &mut [f64]) -> bool {
        if self.step == self.steps {
            return false;
        }
        self.step += 1;
        fill_normals(&mut self.rng, self.db.as_mut_slice(), self.sd);
        match &self.w_t {
            None => out.copy_from_slice(self.db.as_slice()),
            Some(w_t) => {
                let dg = w_t * &self.db;
                out.copy_from_slice(dg.as_slice());
            }
        }
        true
    }
}

impl Iterator for BrownianIncrements {
    type Item = GainVector;

    fn next(&mut self) -> Option<GainVector> {
        let mut out = vec![0.0; self.db.len()];
        if !self.next_into(&mut out) {
            return None;
        }
        Some(GainVector::increment(out).expect("Gaussian increments are finite"))
    }
}

/// Box–Muller: each pair of uniforms yields two independent `N(0, sd²)`.
fn fill_normals(rng: &mut ChaCha8Rng, out: &mut [f64], sd: f64) {
    for pair in out.chunks_mut(2) {
        // u1 ∈ (0, 1] keeps the log finite
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = sd * (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        pair[0] = r * c;
        if let Some(second) = pair.get_mut(1) {
            *second = r * s;
        }
    }
}

/// `n` independent standard normals from stream `stream` of `seed`.
pub fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = vec![0.0; n];
    fill_normals(&mut rng, &mut out, 1.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> SimplexDistribution {
        SimplexDistribution::uniform(n)
    }

    #[test]
    fn uniform_random_is_reproducible_and_random_access() {
        let adv = Adversary::new(&AdversarySpec::new(AdversaryKind::UniformRandom, 7), 100, 3).unwrap();
        let again = Adversary::new(&AdversarySpec::new(AdversaryKind::UniformRandom, 7), 100, 3).unwrap();
        let other = Adversary::new(&AdversarySpec::new(AdversaryKind::UniformRandom, 7), 100, 4).unwrap();
        let p = uniform(100);
        let g3 = adv.next_gain(3, &p).unwrap();
        for round in 1..=3 {
            let a = adv.next_gain(round, &p).unwrap();
            assert_eq!(a, again.next_gain(round, &p).unwrap());
            assert!(a.gains().iter().all(|g| *g == 1.0 || *g == -1.0));
        }
        assert_eq!(adv.next_gain(3, &p).unwrap(), g3);
        assert_ne!(adv.next_gain(1, &p).unwrap(), other.next_gain(1, &p).unwrap());
        assert_ne!(adv.next_gain(1, &p).unwrap(), adv.next_gain(2, &p).unwrap());
        assert!(adv.next_gain(0, &p).is_err());
    }

    #[test]
    fn uniform_random_regression() {
        let adv = Adversary::new(&AdversarySpec::new(AdversaryKind::UniformRandom, 42), 6, 0).unwrap();
        let p = uniform(6);
        let rows: Vec<Vec<f64>> = (1..=3).map(|r| adv.next_gain(r, &p).unwrap().gains().to_vec()).collect();
        assert_eq!(rows, pinned_uniform_random_rows());
    }

    fn pinned_uniform_random_rows() -> Vec<Vec<f64>> {
        vec![
            vec![1.0, -1.0, -1.0, -1.0, -1.0, 1.0],
            vec![-1.0, -1.0, -1.0, 1.0, -1.0, -1.0],
            vec![-1.0, -1.0, 1.0, 1.0, -1.0, -1.0],
        ]
    }

    #[test]
    fn uniform_random_coordinates_are_fair() {
        let adv = Adversary::new(&AdversarySpec::new(AdversaryKind::UniformRandom, 1), 10, 0).unwrap();
        let p = uniform(10);
        let rounds = 20_000;
        let mut sums = [0.0; 10];
        for r in 1..=rounds {
            for (s, g) in sums.iter_mut().zip(adv.next_gain(r, &p).unwrap().gains()) {
                *s += g;
            }
        }
        // mean has standard error 1/√rounds
        let se = 1.0 / (rounds as f64).sqrt();
        for s in sums {
            assert!((s / rounds as f64).abs() < 4.0 * se);
        }
    }

    #[test]
    fn single_leader_and_alternating() {
        let adv = Adversary::new(&AdversarySpec::new(AdversaryKind::SingleLeader, 0), 4, 0).unwrap();
        for r in 1..5 {
            assert_eq!(adv.next_gain(r, &uniform(4)).unwrap().gains(), &[1.0, 0.0, 0.0, 0.0]);
        }
        let mut spec = AdversarySpec::new(AdversaryKind::SingleLeader, 0);
        spec.leader = Some(4);
        assert!(Adversary::new(&spec, 4, 0).is_err());

        let adv = Adversary::new(&AdversarySpec::new(AdversaryKind::Alternating, 0), 3, 0).unwrap();
        let p = SimplexDistribution::new(vec![0.5, 0.2, 0.3]).unwrap();
        assert_eq!(adv.next_gain(1, &p).unwrap().gains(), &[-1.0, 1.0, -1.0]);
        assert_eq!(adv.next_gain(1, &uniform(3)).unwrap().gains(), &[1.0, -1.0, -1.0]);
    }

    #[test]
    fn fixed_sequence_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.csv");
        let rows = vec![vec![0.5, -1.0], vec![1.0, 0.25]];
        write_sequence(&path, &rows).unwrap();
        let adv = Adversary::new(&AdversarySpec::fixed_sequence(&path), 2, 0).unwrap();
        assert_eq!(adv.next_gain(1, &uniform(2)).unwrap().gains(), &rows[0][..]);
        assert_eq!(adv.next_gain(2, &uniform(2)).unwrap().gains(), &rows[1][..]);
        assert!(matches!(
            adv.next_gain(3, &uniform(2)),
            Err(Error::EndOfSequence { round: 3, len: 2 })
        ));
        // wrong expert count is a header mismatch
        assert!(Adversary::new(&AdversarySpec::fixed_sequence(&path), 3, 0).is_err());

        std::fs::write(&path, "g1,g2\n0.5,0.5\n0.1,1.5\n").unwrap();
        match read_sequence(&path, 2) {
            Err(Error::SequenceFile { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("g2"));
            }
            other => panic!("expected a line-numbered error, got {other:?}"),
        }
        std::fs::write(&path, "g1,g2\n0.5,abc\n").unwrap();
        assert!(matches!(read_sequence(&path, 2), Err(Error::SequenceFile { line: 2, .. })));
        assert!(Adversary::new(&AdversarySpec::new(AdversaryKind::FixedSequence, 0), 2, 0).is_err());
        assert!(Adversary::from_rows(vec![vec![0.0, 2.0]]).is_err());
    }

    #[test]
    fn random_sequences_are_valid_gains() {
        let rows = random_sequence(5, 100, 9);
        assert_eq!(rows, random_sequence(5, 100, 9));
        let adv = Adversary::from_rows(rows).unwrap();
        assert_eq!(adv.n(), 5);
    }

    #[test]
    fn covariance_validation() {
        assert!(CovarianceSpec::from_columns(&[vec![1.0, 0.0], vec![0.5, 0.5]]).is_err());
        assert!(CovarianceSpec::from_columns(&[vec![1.0, 0.0], vec![0.6, 0.8]]).is_ok());
        assert!(CovarianceSpec::equicorrelated(3, -0.6).is_err());
        assert!(CovarianceSpec::equicorrelated(3, 1.0).is_err());
        let spec = CovarianceSpec::equicorrelated(4, 0.3).unwrap();
        let sigma = spec.sigma();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.3 };
                assert!((sigma[(i, j)] - want).abs() < 1e-12);
            }
        }
        assert!(CovarianceSpec::identity(3).unwrap().is_identity());
        assert!(!spec.is_identity());
    }

    #[test]
    fn covariance_json_round_trip() {
        for spec in [
            CovarianceSpec::identity(3).unwrap(),
            CovarianceSpec::equicorrelated(2, 0.5).unwrap(),
            CovarianceSpec::from_columns(&[vec![1.0, 0.0], vec![0.6, 0.8]]).unwrap(),
        ] {
            let json = serde_json::to_string(&spec).unwrap();
            let back: CovarianceSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, spec);
        }
        let bad = r#"{"kind":"columns","columns":[[1,0],[1,1]]}"#;
        assert!(serde_json::from_str::<CovarianceSpec>(bad).is_err());
    }

    #[test]
    fn path_steps_and_validation() {
        let cfg = |dt: f64, horizon: f64| BrownianPathConfig {
            cov: CovarianceSpec::identity(2).unwrap(),
            dt,
            horizon,
            seed: 0,
        };
        assert_eq!(cfg(1e-3, 10.0).steps(), 10_000);
        assert_eq!(cfg(0.3, 1.0).steps(), 4);
        assert!(cfg(0.0, 1.0).validate().is_err());
        assert!(cfg(1.0, 0.5).validate().is_err());
        assert_eq!(cfg(0.1, 1.0).increments(0).unwrap().count(), 10);
    }

    fn moments(cov: CovarianceSpec, dt: f64, steps: usize) -> (Vec<f64>, f64) {
        let n = cov.n();
        let cfg = BrownianPathConfig {
            cov,
            dt,
            horizon: dt * steps as f64,
            seed: 11,
        };
        let mut inc = cfg.increments(0).unwrap();
        let mut out = vec![0.0; n];
        let mut sq = vec![0.0; n];
        let mut cross = 0.0;
        while inc.next_into(&mut out) {
            for i in 0..n {
                sq[i] += out[i] * out[i];
            }
            cross += out[0] * out[1];
        }
        let var: Vec<f64> = sq.iter().map(|s| s / steps as f64).collect();
        let corr = cross / steps as f64 / (var[0] * var[1]).sqrt();
        (var, corr)
    }

    #[test]
    fn identity_increment_moments() {
        let (dt, steps) = (0.01, 100_000);
        let (var, corr) = moments(CovarianceSpec::identity(2).unwrap(), dt, steps);
        // Var of a squared N(0, dt) is 2dt²
        let se = (2.0f64).sqrt() * dt / (steps as f64).sqrt();
        for v in var {
            assert!((v - dt).abs() < 3.0 * se, "{v}");
        }
        assert!(corr.abs() < 3.0 / (steps as f64).sqrt());
    }

    #[test]
    fn correlated_increment_moments() {
        let (dt, steps) = (0.5, 1_000_000);
        let (var, corr) = moments(CovarianceSpec::equicorrelated(2, 0.5).unwrap(), dt, steps);
        let se = (2.0f64).sqrt() * dt / (steps as f64).sqrt();
        for v in var {
            assert!((v - dt).abs() < 3.0 * se, "{v}");
        }
        assert!((corr - 0.5).abs() < 0.01, "{corr}");
    }

    #[test]
    fn streams_are_bit_identical() {
        let cfg = BrownianPathConfig {
            cov: CovarianceSpec::equicorrelated(3, 0.2).unwrap(),
            dt: 0.01,
            horizon: 1.0,
            seed: 5,
        };
        let a: Vec<GainVector> = cfg.increments(2).unwrap().collect();
        let b: Vec<GainVector> = cfg.increments(2).unwrap().collect();
        let c: Vec<GainVector> = cfg.increments(3).unwrap().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(standard_normals(1, 2, 5), standard_normals(1, 2, 5));
    }
}
