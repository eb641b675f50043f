//! Update protocol: plan, encode an increment, apply it, decode it back.
//!
//! An update ships coded increments of a message delta to every reachable
//! server; unreachable servers must need no correction at all, and any
//! colluding set of up to `x` servers must learn nothing about the delta.
//! Both properties come from the noise region of the increment staircase:
//! each active block carries `x` rows of fresh noise, then one cancellation
//! row per dropout chosen so the dropouts' coded increments vanish, then
//! zeros. The zero tail is what makes the staircase terminate early — blocks
//! past the active range re-pack only zero rows and vanish identically, so
//! the increments only touch a prefix of each share.
//!
//! With few dropouts and low security the staircase dies before the
//! re-encoded layer is fed (truncated regime); otherwise the tail rows are
//! nonzero and unconstrained servers receive second-layer increments too
//! (re-encoded regime).

use crate::codec::{block_data_vector, reencode_pass_message, reencode_source_row, replicated_segment, reshape};
use crate::error::{Error, Result};
use crate::field::{vec_mat_mul, Fp, Matrix};
use crate::params::{DropoutSet, LayerShape, UpdateCase};
use crate::rational::Rat;
use crate::read::decode_layer;
use crate::storage::{sample_matrix, ClusterState, Scheme};
use rand::Rng;
use serde::Serialize;

/// A fully determined update: which case applies and how far the increment
/// staircase reaches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdatePlan {
    pub dropouts: DropoutSet,
    pub security: usize,
    pub case: UpdateCase,
    pub detail: UpdateDetail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateDetail {
    /// Only outer blocks `1..=active_blocks` move; every server receives
    /// `cols` first-layer symbols and the second layer is untouched.
    Truncated { active_blocks: usize, cols: usize, clamped: bool },
    /// Every outer block moves (full first-layer increments) and passes
    /// `1..=passes` of the second layer receive increments on blocks
    /// `1..=inner_blocks`, i.e. `inner_cols` symbols per pass.
    Reencoded { passes: usize, inner_blocks: usize, inner_cols: usize, clamped: bool },
}

impl UpdatePlan {
    pub fn clamped(&self) -> bool {
        match self.detail {
            UpdateDetail::Truncated { clamped, .. } => clamped,
            UpdateDetail::Reencoded { clamped, .. } => clamped,
        }
    }

    /// 0-based second-layer positions touched on unconstrained servers.
    pub fn second_layer_columns(&self, scheme: &Scheme) -> Vec<usize> {
        match self.detail {
            UpdateDetail::Truncated { .. } => Vec::new(),
            UpdateDetail::Reencoded { passes, inner_cols, .. } => {
                let stride = scheme.derived.inner.message_cols();
                (0..passes).flat_map(|p| p * stride..p * stride + inner_cols).collect()
            }
        }
    }
}

pub fn plan_update(scheme: &Scheme, dropouts: DropoutSet, security: usize) -> Result<UpdatePlan> {
    let p = &scheme.params;
    let d = &scheme.derived;
    let case = p.update_case(&dropouts, security)?;
    let budget = dropouts.len() + security;
    let detail = match case {
        UpdateCase::Truncated => {
            let raw = d.outer.data_rows[0] as i64 + 1 + budget as i64 - p.read_threshold as i64;
            let clamped = raw < 1;
            let active_blocks = raw.max(1) as usize;
            debug_assert!(active_blocks <= d.outer.blocks);
            UpdateDetail::Truncated { active_blocks, cols: d.outer.cum_cols[active_blocks], clamped }
        }
        UpdateCase::Reencoded => {
            let passes = budget + p.storage_denominator - p.read_threshold;
            debug_assert!(passes >= 1 && passes <= d.reencode_passes);
            let d1 = dropouts.unconstrained(p.constrained_servers).len();
            let raw = p.servers as i64 + 1 + (d1 + security) as i64
                - (p.read_threshold + d.noise_rows) as i64;
            let clamped = raw < 1;
            let inner_blocks = raw.max(1) as usize;
            debug_assert!(inner_blocks <= d.inner.blocks);
            UpdateDetail::Reencoded {
                passes,
                inner_blocks,
                inner_cols: d.inner.cum_cols[inner_blocks],
                clamped,
            }
        }
    };
    Ok(UpdatePlan { dropouts, security, case, detail })
}

/// The fresh randomness of one update: `security x gamma_i` per active block
/// (outer), and per active pass/block (inner).
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateFresh {
    pub outer: Vec<Matrix>,
    pub inner: Vec<Vec<Matrix>>,
}

fn outer_active_blocks(plan: &UpdatePlan, outer_blocks: usize) -> usize {
    match plan.detail {
        UpdateDetail::Truncated { active_blocks, .. } => active_blocks,
        UpdateDetail::Reencoded { .. } => outer_blocks,
    }
}

impl UpdateFresh {
    pub fn sample<R: Rng + ?Sized>(scheme: &Scheme, plan: &UpdatePlan, rng: &mut R) -> Self {
        let d = &scheme.derived;
        let q = scheme.params.modulus;
        let x = plan.security;
        let outer = (0..outer_active_blocks(plan, d.outer.blocks))
            .map(|i| sample_matrix(rng, x, d.outer.block_cols[i], q))
            .collect();
        let inner = match plan.detail {
            UpdateDetail::Truncated { .. } => Vec::new(),
            UpdateDetail::Reencoded { passes, inner_blocks, .. } => (0..passes)
                .map(|_| {
                    (0..inner_blocks)
                        .map(|j| sample_matrix(rng, x, d.inner.block_cols[j], q))
                        .collect()
                })
                .collect(),
        };
        UpdateFresh { outer, inner }
    }

    pub fn zeros(scheme: &Scheme, plan: &UpdatePlan) -> Self {
        let d = &scheme.derived;
        let q = scheme.params.modulus;
        let x = plan.security;
        let outer = (0..outer_active_blocks(plan, d.outer.blocks))
            .map(|i| Matrix::zeros(x, d.outer.block_cols[i], q))
            .collect();
        let inner = match plan.detail {
            UpdateDetail::Truncated { .. } => Vec::new(),
            UpdateDetail::Reencoded { passes, inner_blocks, .. } => (0..passes)
                .map(|_| {
                    (0..inner_blocks)
                        .map(|j| Matrix::zeros(x, d.inner.block_cols[j], q))
                        .collect()
                })
                .collect(),
        };
        UpdateFresh { outer, inner }
    }
}

/// One server's coded increment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateIncrement {
    pub server: usize,
    pub first: Vec<Fp>,
    pub second: Option<Vec<Fp>>,
}

/// Everything one update produces: the per-server increments plus the oracle
/// view (delta and full noise layout) needed to keep reference state in sync.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMessages {
    pub plan: UpdatePlan,
    pub increments: Vec<UpdateIncrement>,
    pub message_len: usize,
    pub(crate) delta: Vec<Fp>,
    pub(crate) outer_noise: Vec<Matrix>,
    pub(crate) inner_noise: Vec<Vec<Matrix>>,
}

/// Builds a staircase layer for `msg` whose noise region is
/// `[fresh; cancellation; zeros]`, where the cancellation rows zero out the
/// coded rows in `code_drop` (one per dropout). Blocks past `active` carry no
/// noise and, by the replication structure, vanish identically.
///
/// Returns the layer and the per-block noise matrices.
fn cancelling_staircase(
    msg: &[Fp],
    shape: &LayerShape,
    code_drop: &Matrix,
    fresh: &[Matrix],
    active: usize,
) -> Result<(Matrix, Vec<Matrix>)> {
    let q = code_drop.modulus();
    let drops = code_drop.rows();
    let x = fresh.first().map_or(0, Matrix::rows);
    debug_assert!(fresh.len() == active);
    debug_assert!(x + drops <= shape.noise_rows || active == 0);

    let mut layer = Matrix::zeros(shape.total_rows, shape.message_cols(), q);
    let mut noise_blocks = Vec::with_capacity(shape.blocks);
    for block in 1..=shape.blocks {
        let (c0, _) = shape.col_range(block);
        let alpha = shape.data_rows_of(block);
        let gamma = shape.cols_of(block);
        let data = if block == 1 {
            reshape(msg, alpha, gamma)?
        } else {
            let mut source = Vec::with_capacity(shape.cum_cols[block - 1]);
            for j in 1..block {
                let row = shape.replicate_base + block - j - 1;
                let (s0, s1) = shape.col_range(j);
                for c in s0..s1 {
                    source.push(layer[(row, c)]);
                }
            }
            reshape(&source, alpha, gamma)?
        };
        layer.set_block(0, c0, &data);

        let mut noise = Matrix::zeros(shape.noise_rows, gamma, q);
        if block <= active {
            let z = &fresh[block - 1];
            if x > 0 {
                noise.set_block(0, 0, z);
            }
            if drops > 0 {
                // Cancellation: code[0..alpha] data + code[alpha..alpha+x] z
                // + code[alpha+x..alpha+x+drops] h = 0, solved for h.
                let data_cols: Vec<usize> = (0..alpha).collect();
                let mut rhs = code_drop.columns(&data_cols).mul(&data).neg();
                if x > 0 {
                    let z_cols: Vec<usize> = (alpha..alpha + x).collect();
                    rhs = rhs.sub(&code_drop.columns(&z_cols).mul(z));
                }
                let h_cols: Vec<usize> = (alpha + x..alpha + x + drops).collect();
                let h = code_drop.columns(&h_cols).solve(&rhs)?;
                noise.set_block(x, 0, &h);
            }
        }
        if shape.noise_rows > 0 {
            layer.set_block(alpha, c0, &noise);
        }
        noise_blocks.push(noise);
    }
    debug_assert!(code_drop.mul(&layer).is_zero());
    Ok((layer, noise_blocks))
}

/// Encodes an update with explicit randomness. Deterministic: storage state
/// is never consulted, only the public scheme, the plan, and the inputs.
pub fn encode_update_with(
    scheme: &Scheme,
    plan: &UpdatePlan,
    delta: &[Fp],
    fresh: &UpdateFresh,
) -> Result<UpdateMessages> {
    let p = &scheme.params;
    let d = &scheme.derived;
    if delta.len() != d.message_len {
        return Err(Error::ShapeMismatch(format!(
            "delta has {} symbols, expected {}",
            delta.len(),
            d.message_len
        )));
    }
    let available = plan.dropouts.available(p.servers);
    let code_drop = scheme.code.rows_prefix(plan.dropouts.servers(), d.outer.total_rows);

    let active = outer_active_blocks(plan, d.outer.blocks);
    let (outer_layer, outer_noise) =
        cancelling_staircase(delta, &d.outer, &code_drop, &fresh.outer, active)?;

    let mut inner_noise: Vec<Vec<Matrix>> = Vec::with_capacity(d.reencode_passes);
    let mut inner_layers: Vec<Matrix> = Vec::new();
    if let UpdateDetail::Reencoded { passes, inner_blocks, .. } = plan.detail {
        let unc_drop: Vec<usize> = plan.dropouts.unconstrained(p.constrained_servers);
        let inner_code_drop = scheme.code.rows_prefix(&unc_drop, scheme.inner_code_width());
        for pass in 1..=d.reencode_passes {
            if pass <= passes {
                let w = reencode_pass_message(&outer_layer, d, pass);
                let (layer, noise) = cancelling_staircase(
                    &w,
                    &d.inner,
                    &inner_code_drop,
                    &fresh.inner[pass - 1],
                    inner_blocks,
                )?;
                inner_layers.push(layer);
                inner_noise.push(noise);
            } else {
                // The staircase terminated before this pass's source row.
                debug_assert!(reencode_pass_message(&outer_layer, d, pass)
                    .iter()
                    .all(Fp::is_zero));
                inner_noise.push(
                    (0..d.inner.blocks)
                        .map(|j| Matrix::zeros(d.noise_rows, d.inner.block_cols[j], p.modulus))
                        .collect(),
                );
            }
        }
    } else {
        for _ in 0..d.reencode_passes {
            inner_noise.push(
                (0..d.inner.blocks)
                    .map(|j| Matrix::zeros(d.noise_rows, d.inner.block_cols[j], p.modulus))
                    .collect(),
            );
        }
    }

    let first_cols = match plan.detail {
        UpdateDetail::Truncated { cols, .. } => cols,
        UpdateDetail::Reencoded { .. } => d.outer.message_cols(),
    };
    let increments = available
        .iter()
        .map(|&n| {
            let mut first = vec_mat_mul(scheme.code.server_row(n), &outer_layer);
            first.truncate(first_cols);
            let second = match plan.detail {
                UpdateDetail::Reencoded { inner_cols, .. } if !p.is_constrained(n) => {
                    let row = &scheme.code.server_row(n)[..scheme.inner_code_width()];
                    let mut out = Vec::with_capacity(inner_layers.len() * inner_cols);
                    for layer in &inner_layers {
                        let mut slice = vec_mat_mul(row, layer);
                        slice.truncate(inner_cols);
                        out.extend(slice);
                    }
                    Some(out)
                }
                _ => None,
            };
            UpdateIncrement { server: n, first, second }
        })
        .collect();

    Ok(UpdateMessages {
        plan: plan.clone(),
        increments,
        message_len: d.message_len,
        delta: delta.to_vec(),
        outer_noise,
        inner_noise,
    })
}

/// Encodes an update with freshly sampled randomness.
pub fn encode_update<R: Rng + ?Sized>(
    scheme: &Scheme,
    plan: &UpdatePlan,
    delta: &[Fp],
    rng: &mut R,
) -> Result<UpdateMessages> {
    let fresh = UpdateFresh::sample(scheme, plan, rng);
    encode_update_with(scheme, plan, delta, &fresh)
}

/// Applies increments in place: surviving servers add their coded symbols
/// positionally, dropouts are untouched, and the oracle view moves with it.
pub fn apply_update(cluster: &mut ClusterState, update: &UpdateMessages) -> Result<()> {
    let scheme = cluster.scheme().clone();
    let second_cols = update.plan.second_layer_columns(&scheme);
    for inc in &update.increments {
        if update.plan.dropouts.contains(inc.server) {
            return Err(Error::ShapeMismatch(format!(
                "increment addressed to dropout server {}",
                inc.server
            )));
        }
        let share = &mut cluster.shares[inc.server - 1];
        for (k, &v) in inc.first.iter().enumerate() {
            share.first[k] = share.first[k] + v;
        }
        if let Some(sec) = &inc.second {
            let s2 = share.second.as_mut().ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "second-layer increment for constrained server {}",
                    inc.server
                ))
            })?;
            for (k, &pos) in second_cols.iter().enumerate() {
                s2[pos] = s2[pos] + sec[k];
            }
        }
    }
    for (m, delta) in cluster.reference_message.iter_mut().zip(&update.delta) {
        *m = *m + *delta;
    }
    for (have, inc) in cluster.outer_noise.iter_mut().zip(&update.outer_noise) {
        *have = have.add(inc);
    }
    for (have, inc) in cluster.inner_noise.iter_mut().zip(&update.inner_noise) {
        for (h, i) in have.iter_mut().zip(inc) {
            *h = h.add(i);
        }
    }
    cluster.time_slot += 1;
    Ok(())
}

impl UpdateMessages {
    /// Uploaded symbols divided by message length.
    pub fn cost(&self) -> Rat {
        let total: usize = self
            .increments
            .iter()
            .map(|i| i.first.len() + i.second.as_ref().map_or(0, Vec::len))
            .sum();
        Rat::ratio(total as i64, self.message_len as i64)
    }

    pub fn export(&self, scheme: &Scheme) -> UpdateTranscriptExport {
        let second_cols: Vec<usize> =
            self.plan.second_layer_columns(scheme).iter().map(|c| c + 1).collect();
        UpdateTranscriptExport {
            dropouts: self.plan.dropouts.servers().to_vec(),
            security: self.plan.security,
            case: self.plan.case,
            clamped: self.plan.clamped(),
            servers: self
                .increments
                .iter()
                .map(|i| UpdateIncrementExport {
                    server: i.server,
                    first_cols: (1..=i.first.len()).collect(),
                    second_cols: i.second.as_ref().map(|_| second_cols.clone()),
                })
                .collect(),
            cost: self.cost(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct UpdateTranscriptExport {
    pub dropouts: Vec<usize>,
    pub security: usize,
    pub case: UpdateCase,
    pub clamped: bool,
    pub servers: Vec<UpdateIncrementExport>,
    pub cost: Rat,
}

#[derive(Debug, Serialize)]
pub struct UpdateIncrementExport {
    pub server: usize,
    pub first_cols: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_cols: Option<Vec<usize>>,
}

/// Structural zero rows in the noise region of an increment block: everything
/// past the fresh and cancellation rows is known to be zero.
fn structural_zeros(shape: &LayerShape, block: usize, used: usize, q: u64) -> Vec<(usize, Vec<Fp>)> {
    let alpha = shape.data_rows_of(block);
    let gamma = shape.cols_of(block);
    (used..shape.noise_rows)
        .map(|r| (alpha + r, vec![Fp::zero(q); gamma]))
        .collect()
}

/// Reconstructs the delta from the increments of `readers` alone.
///
/// Any `R_r - |dropouts|` surviving servers suffice; in the re-encoded regime
/// the set must include every surviving constrained server (they are what the
/// count forces anyway). The dropouts contribute virtual all-zero answers —
/// their increments vanish by construction — which is exactly what makes
/// every block solvable.
pub fn decode_update_increment(
    scheme: &Scheme,
    update: &UpdateMessages,
    readers: &[usize],
) -> Result<Vec<Fp>> {
    let p = &scheme.params;
    let d = &scheme.derived;
    let plan = &update.plan;
    let q = p.modulus;
    let drops = plan.dropouts.len();
    let x = plan.security;

    let mut readers = readers.to_vec();
    readers.sort_unstable();
    readers.dedup();
    let needed = p.read_threshold - drops;
    if readers.len() != needed {
        return Err(Error::ThresholdViolated { available: readers.len(), required: needed });
    }
    if readers.iter().any(|&r| plan.dropouts.contains(r) || r == 0 || r > p.servers) {
        return Err(Error::InvalidParams("reader set overlaps dropouts".into()));
    }
    let answers: Vec<&UpdateIncrement> = readers
        .iter()
        .map(|&r| {
            update
                .increments
                .iter()
                .find(|i| i.server == r)
                .ok_or_else(|| Error::InvalidParams(format!("no increment for server {r}")))
        })
        .collect::<Result<_>>()?;

    // Readers first, dropouts as virtual zero rows after them.
    let mut servers = readers.clone();
    servers.extend_from_slice(plan.dropouts.servers());
    let code = scheme.code.rows_prefix(&servers, d.outer.total_rows);
    let stack_with_zeros = |rows: Vec<&[Fp]>, width: usize| -> Matrix {
        let mut m = Matrix::zeros(rows.len() + drops, width, q);
        for (i, r) in rows.iter().enumerate() {
            m.set_row(i, r);
        }
        m
    };

    match plan.detail {
        UpdateDetail::Truncated { active_blocks, cols, .. } => {
            let downloads =
                stack_with_zeros(answers.iter().map(|a| a.first.as_slice()).collect(), cols);
            let layer = decode_layer(&code, &d.outer, active_blocks, &downloads, |b| {
                structural_zeros(&d.outer, b, x + drops, q)
            })?;
            Ok(block_data_vector(&layer, &d.outer, 1))
        }
        UpdateDetail::Reencoded { passes, inner_blocks, inner_cols, .. } => {
            let unc_drops = plan.dropouts.unconstrained(p.constrained_servers);
            let unc_readers: Vec<usize> =
                readers.iter().copied().filter(|&r| !p.is_constrained(r)).collect();
            let required = p.read_threshold - p.constrained_servers - unc_drops.len();
            if unc_readers.len() != required {
                return Err(Error::InvalidParams(format!(
                    "re-encoded decode needs every surviving constrained server: got {} unconstrained readers, want {required}",
                    unc_readers.len()
                )));
            }
            let mut inner_servers = unc_readers.clone();
            inner_servers.extend_from_slice(&unc_drops);
            let inner_code = scheme.code.rows_prefix(&inner_servers, scheme.inner_code_width());
            let inner_answers: Vec<&[Fp]> = answers
                .iter()
                .filter(|a| !p.is_constrained(a.server))
                .map(|a| a.second.as_deref().expect("unconstrained increments carry a second layer"))
                .collect();
            let mut pass_messages = Vec::with_capacity(passes);
            for pass in 0..passes {
                let rows: Vec<&[Fp]> = inner_answers
                    .iter()
                    .map(|s| &s[pass * inner_cols..(pass + 1) * inner_cols])
                    .collect();
                let mut m = Matrix::zeros(rows.len() + unc_drops.len(), inner_cols, q);
                for (i, r) in rows.iter().enumerate() {
                    m.set_row(i, r);
                }
                let layer = decode_layer(&inner_code, &d.inner, inner_blocks, &m, |b| {
                    structural_zeros(&d.inner, b, x + unc_drops.len(), q)
                })?;
                pass_messages.push(block_data_vector(&layer, &d.inner, 1));
            }

            let width = d.outer.message_cols();
            let downloads =
                stack_with_zeros(answers.iter().map(|a| a.first.as_slice()).collect(), width);
            let known = |block: usize| -> Vec<(usize, Vec<Fp>)> {
                let mut out = structural_zeros(&d.outer, block, x + drops, q);
                for (i, w) in pass_messages.iter().enumerate() {
                    let row = reencode_source_row(block, i + 1, p.read_threshold, d.outer.blocks) - 1;
                    out.push((row, replicated_segment(w, &d.outer, block)));
                }
                out
            };
            let layer = decode_layer(&code, &d.outer, d.outer.blocks, &downloads, known)?;
            Ok(block_data_vector(&layer, &d.outer, 1))
        }
    }
}
