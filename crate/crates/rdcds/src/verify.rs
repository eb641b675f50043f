//! Machine checks for the scheme's guarantees: collusion resistance of coded
//! increments, recoverability of storage from any read-threshold-sized server
//! set, and the structural identities of the layered storage itself.
//!
//! Security is decided by exact linear algebra. The update encoder is linear
//! over the field, so probing it with unit inputs yields the full map from
//! (increment, noise) to any server subset's observations; the observations
//! leak nothing exactly when the increment's contribution lies inside the
//! noise image.

use crate::codec::{build_storage_pair, StoragePair};
use crate::error::{Error, Result};
use crate::field::{Fp, Matrix};
use crate::params::{DerivedParams, DropoutSet, LayerShape};
use crate::read::{decode_read, execute_read, plan_read};
use crate::storage::{ClusterState, Scheme};
use crate::update::{encode_update_with, UpdateFresh, UpdateMessages, UpdatePlan};
use itertools::Itertools;
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeSet;

/// Subset sweeps exhaust up to this many servers and sample beyond.
const EXHAUSTIVE_SERVERS: usize = 8;
const SAMPLED_SUBSETS: usize = 200;
const SWEEP_SEED: u64 = 0x5745_4550;

/// The update encoder restricted to one observer set, written as matrices:
/// stacked observations = `increment_map * delta + noise_map * noise`.
#[derive(Debug, Clone)]
pub struct LinearizedEncoder {
    /// Servers whose coded increments are stacked, ascending.
    pub observers: Vec<usize>,
    /// Observed symbols x message length.
    pub increment_map: Matrix,
    /// Observed symbols x fresh noise dimension.
    pub noise_map: Matrix,
}

/// One encoder run per unit input; subsets then assemble their own views
/// without re-encoding.
struct EncoderProbes {
    delta: Vec<UpdateMessages>,
    noise: Vec<UpdateMessages>,
}

fn noise_units(scheme: &Scheme, plan: &UpdatePlan) -> Vec<UpdateFresh> {
    let base = UpdateFresh::zeros(scheme, plan);
    let one = Fp::one(scheme.params.modulus);
    let mut units = Vec::new();
    for (b, m) in base.outer.iter().enumerate() {
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let mut probe = base.clone();
                probe.outer[b][(r, c)] = one;
                units.push(probe);
            }
        }
    }
    for (p, pass) in base.inner.iter().enumerate() {
        for (j, m) in pass.iter().enumerate() {
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    let mut probe = base.clone();
                    probe.inner[p][j][(r, c)] = one;
                    units.push(probe);
                }
            }
        }
    }
    units
}

fn probe_encoder(scheme: &Scheme, plan: &UpdatePlan) -> Result<EncoderProbes> {
    let q = scheme.params.modulus;
    let l = scheme.derived.message_len;
    let zero_fresh = UpdateFresh::zeros(scheme, plan);
    let mut delta = vec![Fp::zero(q); l];
    let mut delta_probes = Vec::with_capacity(l);
    for k in 0..l {
        delta[k] = Fp::one(q);
        delta_probes.push(encode_update_with(scheme, plan, &delta, &zero_fresh)?);
        delta[k] = Fp::zero(q);
    }
    let noise_probes = noise_units(scheme, plan)
        .iter()
        .map(|fresh| encode_update_with(scheme, plan, &delta, fresh))
        .collect::<Result<Vec<_>>>()?;
    Ok(EncoderProbes { delta: delta_probes, noise: noise_probes })
}

/// Stacks one update's coded increments over `observers` into a flat vector.
fn observation(update: &UpdateMessages, observers: &[usize]) -> Result<Vec<Fp>> {
    let mut out = Vec::new();
    for &n in observers {
        let inc = update
            .increments
            .iter()
            .find(|i| i.server == n)
            .ok_or_else(|| Error::InvalidParams(format!("server {n} receives no increment")))?;
        out.extend_from_slice(&inc.first);
        if let Some(second) = &inc.second {
            out.extend_from_slice(second);
        }
    }
    Ok(out)
}

fn checked_observers(scheme: &Scheme, plan: &UpdatePlan, observers: &[usize]) -> Result<Vec<usize>> {
    let mut set = observers.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() != observers.len() {
        return Err(Error::InvalidParams("duplicate observer".into()));
    }
    for &n in &set {
        if n == 0 || n > scheme.params.servers || plan.dropouts.contains(n) {
            return Err(Error::InvalidParams(format!(
                "observer {n} is not an available server"
            )));
        }
    }
    Ok(set)
}

fn assemble(
    scheme: &Scheme,
    probes: &EncoderProbes,
    observers: &[usize],
) -> Result<LinearizedEncoder> {
    let q = scheme.params.modulus;
    let a_cols: Vec<Vec<Fp>> =
        probes.delta.iter().map(|u| observation(u, observers)).collect::<Result<_>>()?;
    let b_cols: Vec<Vec<Fp>> =
        probes.noise.iter().map(|u| observation(u, observers)).collect::<Result<_>>()?;
    let rows = a_cols.first().map_or(0, Vec::len);
    let increment_map = Matrix::from_fn(rows, a_cols.len(), q, |i, j| a_cols[j][i]);
    let noise_map = Matrix::from_fn(rows, b_cols.len(), q, |i, j| b_cols[j][i]);
    Ok(LinearizedEncoder { observers: observers.to_vec(), increment_map, noise_map })
}

/// Probes the update encoder with unit increments and unit noise symbols and
/// returns its restriction to `observers`.
pub fn linearize(
    scheme: &Scheme,
    plan: &UpdatePlan,
    observers: &[usize],
) -> Result<LinearizedEncoder> {
    let observers = checked_observers(scheme, plan, observers)?;
    let probes = probe_encoder(scheme, plan)?;
    assemble(scheme, &probes, &observers)
}

fn hidden_by_noise(enc: &LinearizedEncoder) -> bool {
    let a = &enc.increment_map;
    let b = &enc.noise_map;
    let q = b.modulus();
    let joint = Matrix::from_fn(a.rows(), a.cols() + b.cols(), q, |i, j| {
        if j < b.cols() {
            b[(i, j)]
        } else {
            a[(i, j - b.cols())]
        }
    });
    b.rank() == joint.rank()
}

/// True iff the colluding set's observations are independent of the
/// increment: the increment-to-observation image lies inside the noise image,
/// so under uniform noise every increment induces the same distribution.
pub fn check_x_security(scheme: &Scheme, plan: &UpdatePlan, observers: &[usize]) -> Result<bool> {
    if plan.security == 0 || observers.len() != plan.security {
        return Err(Error::InvalidParams(format!(
            "collusion check needs exactly {} observers, got {}",
            plan.security,
            observers.len()
        )));
    }
    Ok(hidden_by_noise(&linearize(scheme, plan, observers)?))
}

/// Negative control: the same condition with the noise image removed. False
/// whenever the observers see any increment-dependent symbol at all.
pub fn check_x_security_without_noise(
    scheme: &Scheme,
    plan: &UpdatePlan,
    observers: &[usize],
) -> Result<bool> {
    let mut enc = linearize(scheme, plan, observers)?;
    enc.noise_map = Matrix::zeros(enc.increment_map.rows(), 0, enc.increment_map.modulus());
    Ok(hidden_by_noise(&enc))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecuritySweep {
    pub subsets_checked: usize,
    pub exhaustive: bool,
    pub failing_subset: Option<Vec<usize>>,
}

impl SecuritySweep {
    pub fn passed(&self) -> bool {
        self.failing_subset.is_none()
    }
}

fn sampled_subsets(pool: &[usize], k: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let total = {
        let mut t: u128 = 1;
        for i in 0..k.min(pool.len() - k) {
            t = t.saturating_mul((pool.len() - i) as u128) / (i + 1) as u128;
        }
        t
    };
    let want = count.min(total.min(usize::MAX as u128) as usize);
    while seen.len() < want {
        let mut pick: Vec<usize> =
            sample_indices(&mut rng, pool.len(), k).iter().map(|i| pool[i]).collect();
        pick.sort_unstable();
        seen.insert(pick);
    }
    seen.into_iter().collect()
}

/// Checks collusion resistance for every (or, past the exhaustive limit, 200
/// sampled) security-level-sized subset of available servers.
pub fn sweep_x_security(scheme: &Scheme, plan: &UpdatePlan) -> Result<SecuritySweep> {
    let x = plan.security;
    if x == 0 {
        return Ok(SecuritySweep { subsets_checked: 0, exhaustive: true, failing_subset: None });
    }
    let available = plan.dropouts.available(scheme.params.servers);
    let exhaustive = scheme.params.servers <= EXHAUSTIVE_SERVERS;
    let subsets: Vec<Vec<usize>> = if exhaustive {
        available.iter().copied().combinations(x).collect()
    } else {
        sampled_subsets(&available, x, SAMPLED_SUBSETS, SWEEP_SEED)
    };
    let probes = probe_encoder(scheme, plan)?;
    let mut checked = 0;
    for subset in subsets {
        checked += 1;
        if !hidden_by_noise(&assemble(scheme, &probes, &subset)?) {
            return Ok(SecuritySweep {
                subsets_checked: checked,
                exhaustive,
                failing_subset: Some(subset),
            });
        }
    }
    Ok(SecuritySweep { subsets_checked: checked, exhaustive, failing_subset: None })
}

/// True iff every (or, past the exhaustive limit, 200 sampled) set of
/// read-threshold many servers alone reconstructs the reference message.
pub fn check_recoverability(cluster: &ClusterState) -> Result<bool> {
    let scheme = cluster.scheme();
    let n = scheme.params.servers;
    let r_r = scheme.params.read_threshold;
    let all: Vec<usize> = (1..=n).collect();
    let reader_sets: Vec<Vec<usize>> = if n <= EXHAUSTIVE_SERVERS {
        all.iter().copied().combinations(r_r).collect()
    } else {
        sampled_subsets(&all, r_r, SAMPLED_SUBSETS, SWEEP_SEED)
    };
    for readers in reader_sets {
        let dropouts: Vec<usize> = all.iter().copied().filter(|s| !readers.contains(s)).collect();
        let plan = plan_read(scheme, DropoutSet::new(dropouts, n)?)?;
        let transcript = execute_read(cluster, &plan);
        if decode_read(scheme, &transcript)? != cluster.reference_message() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rebuilds the storage pair implied by the cluster's oracle state; shares
/// are separately checked against it by `ClusterState::verify_consistency`.
pub fn reference_pair(cluster: &ClusterState) -> Result<StoragePair> {
    build_storage_pair(
        &cluster.reference_message,
        &cluster.outer_noise,
        &cluster.inner_noise,
        &cluster.scheme.derived,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaircaseReport {
    pub ok: bool,
    pub first_violation: Option<String>,
}

impl StaircaseReport {
    fn fail(reason: String) -> Self {
        StaircaseReport { ok: false, first_violation: Some(reason) }
    }
}

/// Structural audit of one layer with index arithmetic done from scratch:
/// shapes, the zero region under each block, and every replicated entry
/// against its source row.
fn check_layer(m: &Matrix, shape: &LayerShape, label: &str) -> Option<String> {
    if m.rows() != shape.total_rows || m.cols() != shape.message_cols() {
        return Some(format!(
            "{label}: matrix is {}x{}, expected {}x{}",
            m.rows(),
            m.cols(),
            shape.total_rows,
            shape.message_cols()
        ));
    }
    for block in 1..=shape.blocks {
        let (c0, c1) = (shape.cum_cols[block - 1], shape.cum_cols[block]);
        let data = shape.data_rows[block - 1];
        for r in data + shape.noise_rows..shape.total_rows {
            for c in c0..c1 {
                if !m[(r, c)].is_zero() {
                    return Some(format!(
                        "{label}: block {block} must be zero from row {} down, found row {r} col {c}",
                        data + shape.noise_rows
                    ));
                }
            }
        }
        if block == 1 {
            continue;
        }
        let width = c1 - c0;
        if data * width != shape.cum_cols[block - 1] {
            return Some(format!(
                "{label}: block {block} data area {data}x{width} cannot hold the {} replicated symbols",
                shape.cum_cols[block - 1]
            ));
        }
        let mut source = Vec::with_capacity(shape.cum_cols[block - 1]);
        for earlier in 1..block {
            let row = shape.replicate_base + block - earlier - 1;
            for c in shape.cum_cols[earlier - 1]..shape.cum_cols[earlier] {
                source.push(m[(row, c)]);
            }
        }
        for r in 0..data {
            for k in 0..width {
                if m[(r, c0 + k)] != source[r * width + k] {
                    return Some(format!(
                        "{label}: block {block} entry ({r},{k}) does not replicate its source"
                    ));
                }
            }
        }
    }
    None
}

/// Audits a full storage pair: both layer structures plus the hand-off
/// identity that each second-layer pass re-encodes the right first-layer row.
pub fn check_staircase(pair: &StoragePair, derived: &DerivedParams) -> StaircaseReport {
    if let Some(v) = check_layer(&pair.outer.matrix, &derived.outer, "first layer") {
        return StaircaseReport::fail(v);
    }
    if pair.inner_passes.len() != derived.reencode_passes {
        return StaircaseReport::fail(format!(
            "second layer has {} passes, expected {}",
            pair.inner_passes.len(),
            derived.reencode_passes
        ));
    }
    let outer = &pair.outer.matrix;
    let o = &derived.outer;
    for (idx, layer) in pair.inner_passes.iter().enumerate() {
        let pass = idx + 1;
        let label = format!("second layer pass {pass}");
        if let Some(v) = check_layer(&layer.matrix, &derived.inner, &label) {
            return StaircaseReport::fail(v);
        }
        // Pass messages come from one first-layer row per block, counted
        // downward from the last replicated row.
        let mut expected = Vec::with_capacity(derived.inner_message_len);
        for block in 1..=o.blocks {
            let row = o.replicate_base + o.blocks + pass - block - 1;
            for c in o.cum_cols[block - 1]..o.cum_cols[block] {
                expected.push(outer[(row, c)]);
            }
        }
        if expected.len() != derived.inner_message_len {
            return StaircaseReport::fail(format!(
                "{label}: source row slices hold {} symbols, expected {}",
                expected.len(),
                derived.inner_message_len
            ));
        }
        let width = derived.inner.block_cols[0];
        for r in 0..derived.inner.data_rows[0] {
            for k in 0..width {
                if layer.matrix[(r, k)] != expected[r * width + k] {
                    return StaircaseReport::fail(format!(
                        "{label}: entry ({r},{k}) does not re-encode its first-layer source"
                    ));
                }
            }
        }
    }
    StaircaseReport { ok: true, first_violation: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;
    use crate::storage::sample_message;
    use crate::update::{decode_update_increment, encode_update, plan_update};

    fn golden_scheme() -> Scheme {
        Scheme::new(SystemParams::new(7, 5, 6, 2).unwrap()).unwrap()
    }

    fn golden_secure_plan(scheme: &Scheme) -> UpdatePlan {
        plan_update(scheme, DropoutSet::new(vec![1], 7).unwrap(), 1).unwrap()
    }

    #[test]
    fn linearized_shapes_on_golden_plan() {
        let scheme = golden_scheme();
        let plan = golden_secure_plan(&scheme);
        // Unconstrained observer: full + re-encoded symbols; 6 + 9 observed.
        let enc = linearize(&scheme, &plan, &[3]).unwrap();
        assert_eq!(enc.increment_map.rows(), 15);
        assert_eq!(enc.increment_map.cols(), 36);
        assert_eq!(enc.noise_map.rows(), 15);
        assert_eq!(enc.noise_map.cols(), 15); // 6 first-layer + 3x3 second-layer noise symbols
        // Constrained observer: first-layer symbols only.
        let enc = linearize(&scheme, &plan, &[2]).unwrap();
        assert_eq!(enc.increment_map.rows(), 6);
        assert_eq!(enc.increment_map.cols(), 36);
    }

    #[test]
    fn encoder_superposition() {
        let scheme = golden_scheme();
        let plan = golden_secure_plan(&scheme);
        let q = scheme.params.modulus;
        let l = scheme.derived.message_len;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let d1 = sample_message(&mut rng, l, q);
        let d2 = sample_message(&mut rng, l, q);
        let sum: Vec<Fp> = d1.iter().zip(&d2).map(|(a, b)| *a + *b).collect();
        let fresh = UpdateFresh::sample(&scheme, &plan, &mut rng);
        let zero = UpdateFresh::zeros(&scheme, &plan);
        let observers = [2, 3, 4, 5, 6, 7];
        let lhs = observation(&encode_update_with(&scheme, &plan, &sum, &fresh).unwrap(), &observers).unwrap();
        let a = observation(&encode_update_with(&scheme, &plan, &d1, &fresh).unwrap(), &observers).unwrap();
        let b = observation(&encode_update_with(&scheme, &plan, &d2, &zero).unwrap(), &observers).unwrap();
        let rhs: Vec<Fp> = a.iter().zip(&b).map(|(x, y)| *x + *y).collect();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn golden_plan_singletons_are_secure() {
        let scheme = golden_scheme();
        let plan = golden_secure_plan(&scheme);
        for n in 2..=7 {
            assert!(check_x_security(&scheme, &plan, &[n]).unwrap(), "server {n}");
            assert!(
                !check_x_security_without_noise(&scheme, &plan, &[n]).unwrap(),
                "server {n} must see the increment once noise is stripped"
            );
        }
        let sweep = sweep_x_security(&scheme, &plan).unwrap();
        assert!(sweep.passed());
        assert!(sweep.exhaustive);
        assert_eq!(sweep.subsets_checked, 6);
    }

    #[test]
    fn pair_collusion_on_wider_budget() {
        let scheme = golden_scheme();
        let plan = plan_update(&scheme, DropoutSet::empty(), 2).unwrap();
        let sweep = sweep_x_security(&scheme, &plan).unwrap();
        assert!(sweep.passed());
        assert_eq!(sweep.subsets_checked, 21);
    }

    #[test]
    fn zero_security_is_vacuous() {
        let scheme = golden_scheme();
        let plan = plan_update(&scheme, DropoutSet::empty(), 0).unwrap();
        let enc = linearize(&scheme, &plan, &[3]).unwrap();
        assert_eq!(enc.noise_map.cols(), 0);
        let sweep = sweep_x_security(&scheme, &plan).unwrap();
        assert!(sweep.passed());
        assert_eq!(sweep.subsets_checked, 0);
        assert!(check_x_security(&scheme, &plan, &[]).is_err());
    }

    #[test]
    fn observed_increments_stay_in_one_coset() {
        // Empirical re-encryption check: with security on, every observation
        // lands in the same affine coset of the noise image regardless of the
        // increment. Coset membership is exact.
        let scheme = golden_scheme();
        let plan = golden_secure_plan(&scheme);
        let q = scheme.params.modulus;
        let l = scheme.derived.message_len;
        let observers = [3];
        let enc = linearize(&scheme, &plan, &observers).unwrap();
        let b = &enc.noise_map;
        let b_rank = b.rank();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let d1 = sample_message(&mut rng, l, q);
        let mut d2 = sample_message(&mut rng, l, q);
        while d2 == d1 {
            d2 = sample_message(&mut rng, l, q);
        }
        let base = observation(
            &encode_update(&scheme, &plan, &d1, &mut rng).unwrap(),
            &observers,
        )
        .unwrap();
        for delta in [&d1, &d2] {
            for _ in 0..500 {
                let obs = observation(
                    &encode_update(&scheme, &plan, delta, &mut rng).unwrap(),
                    &observers,
                )
                .unwrap();
                let shifted = Matrix::from_fn(b.rows(), b.cols() + 1, q, |i, j| {
                    if j < b.cols() {
                        b[(i, j)]
                    } else {
                        obs[i] - base[i]
                    }
                });
                assert_eq!(shifted.rank(), b_rank, "observation escaped the noise coset");
            }
        }
    }

    #[test]
    fn surviving_readers_decode_the_increment() {
        // The flip side of collusion resistance: enough honest survivors
        // recover the increment in full.
        let scheme = golden_scheme();
        let plan = golden_secure_plan(&scheme);
        let q = scheme.params.modulus;
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let delta = sample_message(&mut rng, scheme.derived.message_len, q);
        let update = encode_update(&scheme, &plan, &delta, &mut rng).unwrap();
        assert_eq!(decode_update_increment(&scheme, &update, &[2, 3, 4, 5]).unwrap(), delta);
    }

    #[test]
    fn staircase_accepts_fresh_storage_and_catches_tampering() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let scheme = golden_scheme();
        let derived = scheme.derived.clone();
        let cluster = ClusterState::init_random(scheme, &mut rng).unwrap();
        let mut pair = reference_pair(&cluster).unwrap();
        assert!(check_staircase(&pair, &derived).ok);

        // Perturb one replicated entry: block 2 of the second layer's first
        // pass replicates first-pass rows.
        let layer = &mut pair.inner_passes[0].matrix;
        let c0 = derived.inner.cum_cols[1];
        layer[(0, c0)] = layer[(0, c0)] + Fp::one(derived.sys.modulus);
        let report = check_staircase(&pair, &derived);
        assert!(!report.ok);
        assert!(report.first_violation.unwrap().contains("block 2"));
    }

    #[test]
    fn staircase_accepts_all_zero_pair() {
        let scheme = golden_scheme();
        let d = &scheme.derived;
        let q = scheme.params.modulus;
        let zero_msg = vec![Fp::zero(q); d.message_len];
        let outer_noise: Vec<Matrix> = (0..d.outer.blocks)
            .map(|i| Matrix::zeros(d.noise_rows, d.outer.block_cols[i], q))
            .collect();
        let inner_noise: Vec<Vec<Matrix>> = (0..d.reencode_passes)
            .map(|_| {
                (0..d.inner.blocks)
                    .map(|j| Matrix::zeros(d.noise_rows, d.inner.block_cols[j], q))
                    .collect()
            })
            .collect();
        let pair = build_storage_pair(&zero_msg, &outer_noise, &inner_noise, d).unwrap();
        assert!(check_staircase(&pair, d).ok);
    }

    #[test]
    fn recoverability_exhaustive_and_after_update() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let scheme = golden_scheme();
        let mut cluster = ClusterState::init_random(scheme.clone(), &mut rng).unwrap();
        assert!(check_recoverability(&cluster).unwrap());

        let plan = golden_secure_plan(&scheme);
        let delta = sample_message(&mut rng, scheme.derived.message_len, scheme.params.modulus);
        let update = encode_update(&scheme, &plan, &delta, &mut rng).unwrap();
        crate::update::apply_update(&mut cluster, &update).unwrap();
        assert!(check_recoverability(&cluster).unwrap());

        // Corrupt one share: some reader set must now disagree.
        cluster.shares[3].first.iter_mut().for_each(|e| *e = Fp::zero(scheme.params.modulus));
        assert!(!check_recoverability(&cluster).unwrap());
    }

    #[test]
    fn recoverability_samples_past_exhaustive_limit() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let scheme = Scheme::new(SystemParams::new(9, 5, 3, 1).unwrap()).unwrap();
        let cluster = ClusterState::init_random(scheme, &mut rng).unwrap();
        assert!(check_recoverability(&cluster).unwrap());
    }

    #[test]
    fn collusion_sweep_samples_past_exhaustive_limit() {
        let scheme = Scheme::new(SystemParams::new(9, 5, 3, 1).unwrap()).unwrap();
        let plan = plan_update(&scheme, DropoutSet::empty(), 2).unwrap();
        let sweep = sweep_x_security(&scheme, &plan).unwrap();
        assert!(sweep.passed());
        assert!(!sweep.exhaustive);
        assert_eq!(sweep.subsets_checked, SAMPLED_SUBSETS.min(36));
    }

    #[test]
    fn observer_validation() {
        let scheme = golden_scheme();
        let plan = golden_secure_plan(&scheme);
        assert!(linearize(&scheme, &plan, &[1]).is_err()); // dropout
        assert!(linearize(&scheme, &plan, &[8]).is_err()); // out of range
        assert!(linearize(&scheme, &plan, &[3, 3]).is_err()); // duplicate
        assert!(check_x_security(&scheme, &plan, &[3, 4]).is_err()); // wrong size
    }

    #[test]
    fn sampled_subset_helper_is_deterministic_and_distinct() {
        let pool: Vec<usize> = (1..=9).collect();
        let a = sampled_subsets(&pool, 5, 50, 1);
        let b = sampled_subsets(&pool, 5, 50, 1);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        let set: BTreeSet<_> = a.iter().collect();
        assert_eq!(set.len(), 50);
    }
}
