use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    extend_subspace, initial_occupations, postselect_and_recover, subspace_stats, RecoveryConfig,
    SqdError, SubspaceStats,
};
use crate::cisolve::{occupations, solve_subspace, CiVector, DavidsonOptions, Rdm1, Rdm2, SubspaceBasis};
use crate::detcore::{Determinant, OccupationVector, Sector};
use crate::hamio::{ClusterHamiltonian, SampleSet};
use crate::scalar::Real;

/// Ground state of one batch subspace.
#[derive(Clone, Debug)]
pub struct BatchResult<T: Real> {
    pub iteration: usize,
    pub batch: usize,
    pub energy: T,
    pub vector: CiVector<T>,
}

impl<T: Real> BatchResult<T> {
    pub fn basis(&self) -> &SubspaceBasis {
        &self.vector.basis
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryState {
    pub iteration: usize,
    pub occupations: OccupationVector,
    pub carryover: Vec<Determinant>,
    pub e_best: f64,
    pub energy_converged: bool,
    pub occupation_converged: bool,
    pub converged: bool,
}

/// One line of the diagnostics trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub batch_energies: Vec<f64>,
    pub batch_dims: Vec<usize>,
    pub e_best: f64,
    /// `None` on the first iteration.
    pub delta_e: Option<f64>,
    pub max_occupation_change: f64,
    pub carryover: usize,
    pub occupations: OccupationVector,
}

#[derive(Clone, Debug)]
pub struct RecoveryOutcome<T: Real> {
    pub e_best: T,
    pub best: BatchResult<T>,
    pub state: RecoveryState,
    pub diagnostics: Vec<IterationRecord>,
}

impl<T: Real> RecoveryOutcome<T> {
    pub fn max_batch_dim(&self) -> usize {
        self.diagnostics
            .iter()
            .flat_map(|r| r.batch_dims.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

/// Diagnostics as JSON lines, one per iteration.
pub fn diagnostics_jsonl(records: &[IterationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("diagnostics serialize"));
        out.push('\n');
    }
    out
}

/// Independent generator for one (iteration, slot) pair.
fn stream_rng(seed: u64, iteration: usize, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 32) | slot);
    rng
}

/// Half-string pools of a batch, limited so their product fits `cap`.
/// Carryover strings are never dropped before sampled ones; sampled strings
/// are dropped lowest shot weight first.
fn batch_basis(
    sector: Sector,
    picks: &BTreeMap<Determinant, u64>,
    carry: &[Determinant],
    cfg: &RecoveryConfig,
) -> Result<SubspaceBasis, SqdError> {
    let merge = cfg.spin_symmetrize && sector.n_alpha == sector.n_beta;
    let mut wa: BTreeMap<u64, u64> = BTreeMap::new();
    let mut wb: BTreeMap<u64, u64> = BTreeMap::new();
    for (d, &c) in picks {
        *wa.entry(d.alpha).or_insert(0) += c;
        *(if merge { &mut wa } else { &mut wb }).entry(d.beta).or_insert(0) += c;
    }
    for d in carry {
        wa.insert(d.alpha, u64::MAX);
        (if merge { &mut wa } else { &mut wb }).insert(d.beta, u64::MAX);
    }
    let ranked = |w: BTreeMap<u64, u64>| {
        let mut v: Vec<(u64, u64)> = w.into_iter().collect();
        v.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        v
    };
    let mut a = ranked(wa);
    let mut b = if merge { a.clone() } else { ranked(wb) };
    let cap = cfg.subspace_cap;
    if a.len().saturating_mul(b.len()) > cap {
        log::warn!(
            "batch subspace {}x{} exceeds cap {cap}; dropping lowest-weight strings",
            a.len(),
            b.len()
        );
        if merge {
            let k = (cap as f64).sqrt().floor().max(1.0) as usize;
            a.truncate(k);
            b.truncate(k);
        } else {
            while a.len() * b.len() > cap {
                if a.len() >= b.len() {
                    a.pop();
                } else {
                    b.pop();
                }
            }
        }
    }
    let mut a: Vec<u64> = a.into_iter().map(|x| x.0).collect();
    let mut b: Vec<u64> = b.into_iter().map(|x| x.0).collect();
    a.sort_unstable();
    b.sort_unstable();
    Ok(SubspaceBasis::product(sector, &a, &b)?)
}

/// Self-consistent configuration recovery.
///
/// Each iteration repairs the raw shots with the current occupations, draws
/// `n_batches` batches of `samples_per_batch` shots with replacement, adds
/// the carryover determinants, and solves every batch subspace. Occupations
/// are then averaged over the batch ground states and the carryover set is
/// re-selected. The loop stops once the running-minimum energy moves by less
/// than `e_tol` and no occupation moves by `occ_tol` or more.
pub fn run_configuration_recovery<T: Real>(
    ham: &ClusterHamiltonian<T>,
    raw: &SampleSet,
    cfg: &RecoveryConfig,
) -> Result<RecoveryOutcome<T>, SqdError> {
    run_configuration_recovery_with(ham, raw, cfg, |_, _| {})
}

/// As `run_configuration_recovery`, calling `observe` with every
/// iteration's batches and the state after that iteration.
pub fn run_configuration_recovery_with<T: Real, F>(
    ham: &ClusterHamiltonian<T>,
    raw: &SampleSet,
    cfg: &RecoveryConfig,
    mut observe: F,
) -> Result<RecoveryOutcome<T>, SqdError>
where
    F: FnMut(&[BatchResult<T>], &RecoveryState),
{
    cfg.validate()?;
    let sector = Sector::new(ham.norb(), ham.n_alpha(), ham.n_beta()).map_err(crate::cisolve::CiError::from)?;
    if raw.is_empty() {
        return Err(SqdError::NoSamples);
    }
    let mut occ = initial_occupations(raw, sector);
    let mut carry: Vec<Determinant> = Vec::new();
    let mut best: Option<BatchResult<T>> = None;
    let mut diagnostics = Vec::new();
    let mut state = RecoveryState {
        iteration: 0,
        occupations: occ.clone(),
        carryover: Vec::new(),
        e_best: f64::INFINITY,
        energy_converged: false,
        occupation_converged: false,
        converged: false,
    };
    let opts = DavidsonOptions::default();

    for iteration in 1..=cfg.max_iters {
        let recovered = postselect_and_recover(raw, &occ, sector, {
            let mut r = stream_rng(cfg.seed, iteration, 0);
            r.random()
        })?;
        let mut cdf = Vec::with_capacity(recovered.len());
        let mut acc = 0u64;
        for (_, c) in &recovered {
            acc += c;
            cdf.push(acc);
        }
        let total = acc;

        let batches: Vec<BatchResult<T>> = (0..cfg.n_batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(cfg.seed, iteration, b as u64 + 1);
                let mut picks: BTreeMap<Determinant, u64> = BTreeMap::new();
                for _ in 0..cfg.samples_per_batch {
                    let u = rng.random_range(0..total);
                    let k = cdf.partition_point(|&c| c <= u);
                    *picks.entry(recovered[k].0).or_insert(0) += 1;
                }
                let basis = batch_basis(sector, &picks, &carry, cfg)?;
                let (energy, vector) = solve_subspace(ham, &basis, &opts, None).map_err(|source| {
                    SqdError::Solver {
                        iteration,
                        batch: b,
                        source,
                    }
                })?;
                Ok(BatchResult {
                    iteration,
                    batch: b,
                    energy,
                    vector,
                })
            })
            .collect::<Result<_, SqdError>>()?;

        // fixed-order reductions
        let mut new_occ = OccupationVector::zeros(sector.norb);
        for r in &batches {
            new_occ.add_assign(&occupations(&r.vector));
        }
        new_occ.scale(1.0 / batches.len() as f64);

        let prev_best = best.as_ref().map(|b| b.energy);
        for r in &batches {
            if best.as_ref().is_none_or(|b| r.energy < b.energy) {
                best = Some(r.clone());
            }
        }
        let e_best = best.as_ref().expect("at least one batch").energy;

        let mut selected: BTreeSet<Determinant> = if cfg.accumulate_carryover {
            carry.iter().copied().collect()
        } else {
            BTreeSet::new()
        };
        let thr = T::lit(cfg.carryover_threshold);
        for r in &batches {
            selected.extend(r.vector.iter().filter(|(_, c)| c.abs() >= thr).map(|(d, _)| *d));
        }
        carry = selected.into_iter().collect();

        let dn = new_occ.max_abs_diff(&occ);
        let de = prev_best.map(|p| (e_best - p).abs().to_f64_lossy());
        occ = new_occ;
        state = RecoveryState {
            iteration,
            occupations: occ.clone(),
            carryover: carry.clone(),
            e_best: e_best.to_f64_lossy(),
            energy_converged: de.is_some_and(|d| d < cfg.e_tol),
            occupation_converged: dn < cfg.occ_tol,
            converged: false,
        };
        state.converged = state.energy_converged && state.occupation_converged;
        diagnostics.push(IterationRecord {
            iteration,
            batch_energies: batches.iter().map(|r| r.energy.to_f64_lossy()).collect(),
            batch_dims: batches.iter().map(|r| r.vector.basis.dim()).collect(),
            e_best: state.e_best,
            delta_e: de,
            max_occupation_change: dn,
            carryover: carry.len(),
            occupations: occ.clone(),
        });
        observe(&batches, &state);
        log::debug!("recovery iteration {iteration}: E_best = {:.12}", state.e_best);
        if state.converged {
            break;
        }
    }
    let best = best.expect("max_iters >= 1");
    Ok(RecoveryOutcome {
        e_best: best.energy,
        best,
        state,
        diagnostics,
    })
}

/// Recovery followed by augmentation, with RDMs of the augmented state.
#[derive(Clone, Debug)]
pub struct SqdSolution<T: Real> {
    pub e_sqd: T,
    pub e_ext: T,
    pub vector: CiVector<T>,
    pub rdm1: Rdm1<T>,
    pub rdm2: Rdm2<T>,
    pub stats: SubspaceStats,
    pub state: RecoveryState,
    pub diagnostics: Vec<IterationRecord>,
}

pub fn run_sqd<T: Real>(
    ham: &ClusterHamiltonian<T>,
    raw: &SampleSet,
    cfg: &RecoveryConfig,
) -> Result<SqdSolution<T>, SqdError> {
    let rec = run_configuration_recovery(ham, raw, cfg)?;
    let ext = extend_subspace(ham, &rec.best, cfg)?;
    let sector = rec.best.vector.basis.sector();
    let stats = subspace_stats(sector, rec.max_batch_dim(), Some((ext.selected, ext.vector.basis.dim())));
    Ok(SqdSolution {
        e_sqd: rec.e_best,
        e_ext: ext.energy,
        vector: ext.vector,
        rdm1: ext.rdm1,
        rdm2: ext.rdm2,
        stats,
        state: rec.state,
        diagnostics: rec.diagnostics,
    })
}
