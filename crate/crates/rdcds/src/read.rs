//! Read protocol: plan the download, extract a transcript, decode.
//!
//! With `d` dropouts a reader either stays in the prefix regime (few enough
//! dropouts that the first `d+1` outer blocks, a uniform prefix of every
//! first-layer share, suffice) or additionally downloads slices of the
//! re-encoded layer from the unconstrained servers. Decoding walks blocks from
//! the narrowest back to the widest: each decoded block hands one replicated
//! row back to every earlier block, which turns every solve into a square
//! Cauchy system over the surviving servers.

use crate::codec::{block_data_vector, replicated_segment, reencode_source_row};
use crate::error::{Error, Result};
use crate::field::{Fp, Matrix};
use crate::params::{DropoutSet, LayerShape, ReadCase};
use crate::rational::Rat;
use crate::storage::{ClusterState, Scheme};
use serde::Serialize;

/// A fully determined read: which case applies and how deep it goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadPlan {
    pub dropouts: DropoutSet,
    pub case: ReadCase,
    pub detail: ReadDetail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReadDetail {
    /// Download the first `cols` symbols of every surviving first-layer share
    /// and decode blocks `1..=depth`.
    Prefix { depth: usize, cols: usize },
    /// Download full first-layer shares everywhere plus, per re-encoding pass
    /// `1..=passes`, the first `inner_cols` symbols of that pass's share from
    /// surviving unconstrained servers.
    Reencoded { passes: usize, inner_depth: usize, inner_cols: usize },
}

pub fn plan_read(scheme: &Scheme, dropouts: DropoutSet) -> Result<ReadPlan> {
    let p = &scheme.params;
    let d = &scheme.derived;
    let case = p.read_case(&dropouts)?;
    let detail = match case {
        ReadCase::Prefix => {
            let depth = dropouts.len() + 1;
            ReadDetail::Prefix { depth, cols: d.outer.cum_cols[depth] }
        }
        ReadCase::Reencoded => {
            let passes = p.storage_denominator + d.noise_rows + dropouts.len() - p.servers;
            let inner_depth = dropouts.unconstrained(p.constrained_servers).len() + 1;
            debug_assert!(passes >= 1 && passes <= d.reencode_passes);
            debug_assert!(inner_depth <= d.inner.blocks);
            ReadDetail::Reencoded { passes, inner_depth, inner_cols: d.inner.cum_cols[inner_depth] }
        }
    };
    Ok(ReadPlan { dropouts, case, detail })
}

impl ReadPlan {
    /// 0-based second-layer positions downloaded from unconstrained servers.
    pub fn second_layer_columns(&self, scheme: &Scheme) -> Vec<usize> {
        match self.detail {
            ReadDetail::Prefix { .. } => Vec::new(),
            ReadDetail::Reencoded { passes, inner_cols, .. } => {
                let stride = scheme.derived.inner.message_cols();
                (0..passes).flat_map(|p| p * stride..p * stride + inner_cols).collect()
            }
        }
    }
}

/// One server's answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadAnswer {
    pub server: usize,
    pub first: Vec<Fp>,
    pub second: Option<Vec<Fp>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadTranscript {
    pub plan: ReadPlan,
    pub answers: Vec<ReadAnswer>,
    pub message_len: usize,
}

/// Collects the planned downloads from every surviving server. Storage is not
/// modified; the borrow is shared.
pub fn execute_read(cluster: &ClusterState, plan: &ReadPlan) -> ReadTranscript {
    let scheme = cluster.scheme();
    let p = &scheme.params;
    let answers = plan
        .dropouts
        .available(p.servers)
        .into_iter()
        .map(|n| {
            let share = cluster.share(n);
            match plan.detail {
                ReadDetail::Prefix { cols, .. } => {
                    ReadAnswer { server: n, first: share.first[..cols].to_vec(), second: None }
                }
                ReadDetail::Reencoded { .. } => {
                    let second = share.second.as_ref().map(|s2| {
                        plan.second_layer_columns(scheme).iter().map(|&c| s2[c]).collect()
                    });
                    ReadAnswer { server: n, first: share.first.clone(), second }
                }
            }
        })
        .collect();
    ReadTranscript { plan: plan.clone(), answers, message_len: scheme.derived.message_len }
}

impl ReadTranscript {
    /// Downloaded symbols divided by message length.
    pub fn cost(&self) -> Rat {
        let total: usize = self
            .answers
            .iter()
            .map(|a| a.first.len() + a.second.as_ref().map_or(0, Vec::len))
            .sum();
        Rat::ratio(total as i64, self.message_len as i64)
    }

    pub fn export(&self, scheme: &Scheme) -> ReadTranscriptExport {
        let second_cols: Vec<usize> =
            self.plan.second_layer_columns(scheme).iter().map(|c| c + 1).collect();
        ReadTranscriptExport {
            dropouts: self.plan.dropouts.servers().to_vec(),
            case: self.plan.case,
            servers: self
                .answers
                .iter()
                .map(|a| ReadAnswerExport {
                    server: a.server,
                    first_cols: (1..=a.first.len()).collect(),
                    second_cols: a.second.as_ref().map(|_| second_cols.clone()),
                })
                .collect(),
            cost: self.cost(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReadTranscriptExport {
    pub dropouts: Vec<usize>,
    pub case: ReadCase,
    pub servers: Vec<ReadAnswerExport>,
    pub cost: Rat,
}

#[derive(Debug, Serialize)]
pub struct ReadAnswerExport {
    pub server: usize,
    pub first_cols: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_cols: Option<Vec<usize>>,
}

/// Solves one block column-slice given already-known rows.
///
/// `code_rows` holds the surviving servers' evaluation rows (full layer
/// width); the system restricted to the unknown rows is square in every
/// unclamped plan. Clamped plans deliver more equations than unknowns; any
/// unknown-count-sized subset of evaluation rows is invertible, so the first
/// ones solve the system and the rest are redundant by construction.
pub(crate) fn solve_block(
    code_rows: &Matrix,
    coded_rows: usize,
    rhs: &Matrix,
    known: &[(usize, Vec<Fp>)],
) -> Result<Matrix> {
    let q = code_rows.modulus();
    let known_rows: Vec<usize> = known.iter().map(|(r, _)| *r).collect();
    let unknown: Vec<usize> =
        (0..coded_rows).filter(|r| !known_rows.contains(r)).collect();
    if unknown.len() > code_rows.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} unknown rows vs {} equations",
            unknown.len(),
            code_rows.rows()
        )));
    }
    let mut adjusted = rhs.clone();
    for (row, values) in known {
        for i in 0..code_rows.rows() {
            let coef = code_rows[(i, *row)];
            if coef.is_zero() {
                continue;
            }
            for (j, &v) in values.iter().enumerate() {
                let t = coef * v;
                adjusted[(i, j)] = adjusted[(i, j)] - t;
            }
        }
    }
    let system = code_rows.columns(&unknown);
    let take: Vec<usize> = (0..unknown.len()).collect();
    let width: Vec<usize> = (0..system.cols()).collect();
    let solved = system.submatrix(&take, &width).solve(&adjusted.submatrix(
        &take,
        &(0..adjusted.cols()).collect::<Vec<usize>>(),
    ))?;
    #[cfg(debug_assertions)]
    for i in unknown.len()..system.rows() {
        for j in 0..adjusted.cols() {
            let mut acc = Fp::zero(q);
            for (k, _) in unknown.iter().enumerate() {
                acc = acc + system[(i, k)] * solved[(k, j)];
            }
            debug_assert_eq!(acc, adjusted[(i, j)], "redundant equation disagrees");
        }
    }
    let mut block = Matrix::zeros(coded_rows, rhs.cols(), q);
    for (i, &r) in unknown.iter().enumerate() {
        block.set_row(r, solved.row(i));
    }
    for (row, values) in known {
        block.set_row(*row, values);
    }
    Ok(block)
}

/// Stacks per-server vectors into a matrix, one row per answer.
fn stack<'a>(rows: impl Iterator<Item = &'a [Fp]>, q: u64) -> Matrix {
    let rows: Vec<Vec<Fp>> = rows.map(|r| r.to_vec()).collect();
    if rows.is_empty() {
        return Matrix::zeros(0, 0, q);
    }
    Matrix::from_rows(rows).expect("uniform answer lengths")
}

/// Runs successive cancellation over one layer: decodes blocks `depth..=1`
/// into a full layer matrix. `extra_known(block)` supplies rows known from
/// outside the layer (re-encoded rows during deep reads, structural zeros and
/// re-encoded rows during increment decoding).
pub(crate) fn decode_layer(
    code_rows: &Matrix,
    shape: &LayerShape,
    depth: usize,
    downloads: &Matrix,
    extra_known: impl Fn(usize) -> Vec<(usize, Vec<Fp>)>,
) -> Result<Matrix> {
    let mut layer = Matrix::zeros(shape.total_rows, shape.message_cols(), code_rows.modulus());
    for block in (1..=depth).rev() {
        let mut known = extra_known(block);
        for later in block + 1..=depth {
            let source = block_data_vector(&layer, shape, later);
            let row = shape.replicate_base + later - block - 1;
            known.push((row, replicated_segment(&source, shape, block)));
        }
        let (c0, c1) = shape.col_range(block);
        let rhs = downloads.column_range(c0, c1);
        let solved = solve_block(code_rows, shape.coded_rows_of(block), &rhs, &known)?;
        for r in 0..solved.rows() {
            for (c, col) in (c0..c1).enumerate() {
                layer[(r, col)] = solved[(r, c)];
            }
        }
    }
    Ok(layer)
}

/// Decodes the full message from a transcript. Uses only the transcript, the
/// plan, and public scheme data.
pub fn decode_read(scheme: &Scheme, transcript: &ReadTranscript) -> Result<Vec<Fp>> {
    let p = &scheme.params;
    let d = &scheme.derived;
    let plan = &transcript.plan;
    let available = plan.dropouts.available(p.servers);
    let code_avail = scheme.code.rows_prefix(&available, d.outer.total_rows);

    match plan.detail {
        ReadDetail::Prefix { depth, .. } => {
            let downloads = stack(transcript.answers.iter().map(|a| a.first.as_slice()), p.modulus);
            let layer = decode_layer(&code_avail, &d.outer, depth, &downloads, |_| Vec::new())?;
            Ok(block_data_vector(&layer, &d.outer, 1))
        }
        ReadDetail::Reencoded { passes, inner_depth, inner_cols } => {
            // Inner layer first: every pass yields the short message whose
            // symbols are designated rows of the outer blocks.
            let unc: Vec<usize> = available
                .iter()
                .copied()
                .filter(|&n| !p.is_constrained(n))
                .collect();
            let inner_code = scheme.code.rows_prefix(&unc, scheme.inner_code_width());
            let mut pass_messages = Vec::with_capacity(passes);
            for pass in 0..passes {
                let rows: Vec<&[Fp]> = transcript
                    .answers
                    .iter()
                    .filter_map(|a| a.second.as_deref())
                    .map(|s| &s[pass * inner_cols..(pass + 1) * inner_cols])
                    .collect();
                let downloads = stack(rows.into_iter(), p.modulus);
                let layer = decode_layer(&inner_code, &d.inner, inner_depth, &downloads, |_| Vec::new())?;
                pass_messages.push(block_data_vector(&layer, &d.inner, 1));
            }
            // Outer layer: each pass contributes one known row per block.
            let downloads = stack(transcript.answers.iter().map(|a| a.first.as_slice()), p.modulus);
            let reencoded = |block: usize| -> Vec<(usize, Vec<Fp>)> {
                pass_messages
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let row =
                            reencode_source_row(block, i + 1, p.read_threshold, d.outer.blocks) - 1;
                        (row, replicated_segment(w, &d.outer, block))
                    })
                    .collect()
            };
            let layer = decode_layer(&code_avail, &d.outer, d.outer.blocks, &downloads, reencoded)?;
            Ok(block_data_vector(&layer, &d.outer, 1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn cluster(n: usize, r_r: usize, k_c: usize, s: usize, seed: u64) -> ClusterState {
        let scheme = Scheme::new(SystemParams::new(n, r_r, k_c, s).unwrap()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        ClusterState::init_random(scheme, &mut rng).unwrap()
    }

    fn run_read(cluster: &ClusterState, dropouts: Vec<usize>) -> (ReadTranscript, Vec<Fp>) {
        let d = DropoutSet::new(dropouts, cluster.params().servers).unwrap();
        let plan = plan_read(cluster.scheme(), d).unwrap();
        let transcript = execute_read(cluster, &plan);
        let decoded = decode_read(cluster.scheme(), &transcript).unwrap();
        (transcript, decoded)
    }

    #[test]
    fn golden_single_dropout_read() {
        let cl = cluster(7, 5, 6, 2, 3);
        let (transcript, decoded) = run_read(&cl, vec![3]);
        assert_eq!(transcript.plan.case, ReadCase::Reencoded);
        match transcript.plan.detail {
            ReadDetail::Reencoded { passes, inner_depth, inner_cols } => {
                assert_eq!((passes, inner_depth, inner_cols), (2, 2, 3));
            }
            _ => panic!("expected deep read"),
        }
        // Slices of the first two passes: positions 1..3 and 7..9.
        assert_eq!(
            transcript.plan.second_layer_columns(cl.scheme()),
            vec![0, 1, 2, 6, 7, 8]
        );
        assert_eq!(transcript.cost(), Rat::ratio(5, 3));
        assert_eq!(decoded, cl.reference_message());
    }

    #[test]
    fn golden_no_dropout_read() {
        let cl = cluster(7, 5, 6, 2, 4);
        let (transcript, decoded) = run_read(&cl, vec![]);
        assert_eq!(transcript.cost(), Rat::ratio(13, 9));
        assert_eq!(decoded, cl.reference_message());
    }

    #[test]
    fn golden_two_unconstrained_dropouts() {
        let cl = cluster(7, 5, 6, 2, 5);
        let (transcript, decoded) = run_read(&cl, vec![6, 7]);
        match transcript.plan.detail {
            ReadDetail::Reencoded { passes, inner_depth, inner_cols } => {
                assert_eq!((passes, inner_depth, inner_cols), (3, 3, 6));
            }
            _ => panic!("expected deep read"),
        }
        assert_eq!(transcript.cost(), Rat::ratio(7, 3));
        assert_eq!(decoded, cl.reference_message());
    }

    #[test]
    fn prefix_reads_on_wider_tuple() {
        let cl = cluster(9, 5, 3, 1, 6);
        let (t0, dec0) = run_read(&cl, vec![]);
        assert_eq!(t0.plan.case, ReadCase::Prefix);
        assert_eq!(t0.cost(), Rat::ratio(3, 2));
        assert_eq!(dec0, cl.reference_message());

        let (t1, dec1) = run_read(&cl, vec![9]);
        match t1.plan.detail {
            ReadDetail::Prefix { depth, cols } => assert_eq!((depth, cols), (2, 36)),
            _ => panic!("expected prefix read"),
        }
        assert_eq!(t1.cost(), Rat::ratio(8, 5));
        assert_eq!(dec1, cl.reference_message());
    }

    #[test]
    fn corrupted_transcript_decodes_to_wrong_message() {
        let cl = cluster(7, 5, 6, 2, 8);
        let d = DropoutSet::new(vec![3], 7).unwrap();
        let plan = plan_read(cl.scheme(), d).unwrap();
        let mut transcript = execute_read(&cl, &plan);
        let flipped = transcript.answers[0].first[0] + Fp::one(17);
        transcript.answers[0].first[0] = flipped;
        let decoded = decode_read(cl.scheme(), &transcript).unwrap();
        assert_ne!(decoded, cl.reference_message());
    }

    #[test]
    fn transcript_export_shape() {
        let cl = cluster(7, 5, 6, 2, 9);
        let d = DropoutSet::new(vec![3], 7).unwrap();
        let plan = plan_read(cl.scheme(), d).unwrap();
        let transcript = execute_read(&cl, &plan);
        let json = serde_json::to_value(transcript.export(cl.scheme())).unwrap();
        assert_eq!(json["dropouts"], serde_json::json!([3]));
        assert_eq!(json["cost"], serde_json::json!("5/3"));
        assert_eq!(json["servers"][0]["server"], serde_json::json!(1));
        // Constrained servers answer with first-layer symbols only.
        assert!(json["servers"][0].get("second_cols").is_none());
        assert_eq!(json["servers"][2]["second_cols"], serde_json::json!([1, 2, 3, 7, 8, 9]));
    }

    #[test]
    fn every_dropout_set_decodes_on_golden_tuple() {
        let cl = cluster(7, 5, 6, 2, 10);
        for a in 1..=7usize {
            for b in a..=7usize {
                let ds = if a == b { vec![a] } else { vec![a, b] };
                let (_, decoded) = run_read(&cl, ds);
                assert_eq!(decoded, cl.reference_message());
            }
        }
    }
}
