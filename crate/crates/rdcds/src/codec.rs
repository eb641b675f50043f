//! Staircase layer construction and the Cauchy evaluation code.
//!
//! A layer packs the message into blocks of decreasing height. Block 1 is the
//! message reshaped to `alpha_1 x gamma_1`; every later block `i` re-packs one
//! designated row of each earlier block `j` (row `replicate_base + i - j`) into
//! an `alpha_i x gamma_i` rectangle, appends `noise_rows` rows of noise, and
//! pads with zero rows to the layer height. The replication is what lets a
//! reader who lost servers step down to a narrower block and still cancel
//! everything it cannot solve.
//!
//! The storage pair adds a second layer: each of the `P` re-encoding passes
//! takes one tail row of every outer block (row `replicate_base + blocks + pass
//! - j` of block `j`), concatenates them into a shorter message, and runs the
//! same construction over the inner shape. Unconstrained servers store shares
//! of both layers.

use crate::error::{Error, Result};
use crate::field::{Fp, Matrix};
use crate::params::{DerivedParams, LayerShape, SystemParams};

/// Row-major reshape of a symbol vector.
pub fn reshape(msg: &[Fp], rows: usize, cols: usize) -> Result<Matrix> {
    if msg.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "cannot reshape {} symbols into {rows}x{cols}",
            msg.len()
        )));
    }
    let modulus = msg.first().map(Fp::modulus).unwrap_or(2);
    let mut m = Matrix::zeros(rows, cols, modulus);
    for (k, &e) in msg.iter().enumerate() {
        m[(k / cols, k % cols)] = e;
    }
    Ok(m)
}

/// One contiguous piece of a replicated row: `len` symbols starting at column
/// `col_start` of row `row` in `block` (1-based block and row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSource {
    pub block: usize,
    pub row: usize,
    pub col_start: usize,
    pub len: usize,
}

/// Classification of one row of one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    /// Fresh message content (block 1 only).
    Message,
    /// Re-packed content of earlier blocks, as an ordered list of segments.
    Replicated(Vec<RowSource>),
    /// Noise row with the given index within the block's noise rows.
    Noise(usize),
    /// Structural zero padding.
    Zero,
}

/// A fully built staircase layer.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseLayer {
    pub matrix: Matrix,
    /// `row_kinds[b][r]` classifies row `r` (0-based) of block `b+1`.
    pub row_kinds: Vec<Vec<RowKind>>,
}

/// Reads the data rows of a block back into a row-major vector.
pub fn block_data_vector(matrix: &Matrix, shape: &LayerShape, block: usize) -> Vec<Fp> {
    let (c0, c1) = shape.col_range(block);
    let mut out = Vec::with_capacity(shape.data_rows_of(block) * (c1 - c0));
    for r in 0..shape.data_rows_of(block) {
        for c in c0..c1 {
            out.push(matrix[(r, c)]);
        }
    }
    out
}

/// The source row content that block `target` replicates from block `source`,
/// extracted from the concatenated source vector of `target`.
pub fn replicated_segment(source_vec: &[Fp], shape: &LayerShape, source: usize) -> Vec<Fp> {
    let (c0, c1) = shape.col_range(source);
    source_vec[c0..c1].to_vec()
}

/// Describes which segments of earlier blocks cover row `row` (0-based) of a
/// replicated block with `cols` columns.
fn row_sources(shape: &LayerShape, block: usize, row: usize) -> Vec<RowSource> {
    let cols = shape.cols_of(block);
    let start = row * cols;
    let end = start + cols;
    let mut out = Vec::new();
    for j in 1..block {
        let (c0, c1) = (shape.cum_cols[j - 1], shape.cum_cols[j]);
        let lo = start.max(c0);
        let hi = end.min(c1);
        if lo < hi {
            out.push(RowSource {
                block: j,
                row: shape.replicate_base + block - j,
                col_start: lo - c0,
                len: hi - lo,
            });
        }
    }
    out
}

/// Builds one staircase layer from a message and per-block noise.
///
/// `noise[i]` must be `noise_rows x block_cols[i]`; pass zero matrices to get
/// a noiseless layer.
pub fn build_staircase(msg: &[Fp], noise: &[Matrix], shape: &LayerShape) -> Result<StaircaseLayer> {
    if msg.is_empty() {
        return Err(Error::ShapeMismatch("empty message".into()));
    }
    let modulus = msg[0].modulus();
    if msg.len() != shape.data_rows_of(1) * shape.cols_of(1) {
        return Err(Error::ShapeMismatch(format!(
            "message has {} symbols, layer expects {}",
            msg.len(),
            shape.data_rows_of(1) * shape.cols_of(1)
        )));
    }
    if noise.len() != shape.blocks {
        return Err(Error::ShapeMismatch(format!(
            "expected {} noise blocks, got {}",
            shape.blocks,
            noise.len()
        )));
    }
    for (i, z) in noise.iter().enumerate() {
        if z.rows() != shape.noise_rows || z.cols() != shape.block_cols[i] {
            return Err(Error::ShapeMismatch(format!(
                "noise block {} is {}x{}, expected {}x{}",
                i + 1,
                z.rows(),
                z.cols(),
                shape.noise_rows,
                shape.block_cols[i]
            )));
        }
        if shape.noise_rows > 0 && z.modulus() != modulus {
            return Err(Error::ShapeMismatch("noise modulus differs from message".into()));
        }
    }

    let mut matrix = Matrix::zeros(shape.total_rows, shape.message_cols(), modulus);
    let mut row_kinds = Vec::with_capacity(shape.blocks);
    for block in 1..=shape.blocks {
        let (c0, _) = shape.col_range(block);
        let alpha = shape.data_rows_of(block);
        let gamma = shape.cols_of(block);
        let data = if block == 1 {
            reshape(msg, alpha, gamma)?
        } else {
            let mut source = Vec::with_capacity(shape.cum_cols[block - 1]);
            for j in 1..block {
                let row = shape.replicate_base + block - j - 1; // 0-based
                let (s0, s1) = shape.col_range(j);
                for c in s0..s1 {
                    source.push(matrix[(row, c)]);
                }
            }
            reshape(&source, alpha, gamma)?
        };
        matrix.set_block(0, c0, &data);
        matrix.set_block(alpha, c0, &noise[block - 1]);

        let mut kinds = Vec::with_capacity(shape.total_rows);
        for r in 0..shape.total_rows {
            kinds.push(if r < alpha {
                if block == 1 {
                    RowKind::Message
                } else {
                    RowKind::Replicated(row_sources(shape, block, r))
                }
            } else if r < alpha + shape.noise_rows {
                RowKind::Noise(r - alpha)
            } else {
                RowKind::Zero
            });
        }
        row_kinds.push(kinds);
    }
    Ok(StaircaseLayer { matrix, row_kinds })
}

/// 1-based outer row fed into inner pass `pass` by outer block `block`.
///
/// Pass 1 of the golden 7-server example reads row 6 of its single outer
/// block; passes 2 and 3 read rows 7 and 8.
pub fn reencode_source_row(block: usize, pass: usize, read_threshold: usize, outer_blocks: usize) -> usize {
    read_threshold + outer_blocks + pass - block
}

/// Both storage layers of one message.
#[derive(Debug, Clone, PartialEq)]
pub struct StoragePair {
    pub outer: StaircaseLayer,
    pub inner_passes: Vec<StaircaseLayer>,
}

impl StoragePair {
    /// The inner layers side by side: `(N - S) x (P * inner_cols)`.
    pub fn inner_matrix(&self, derived: &DerivedParams) -> Matrix {
        let cols = derived.inner.message_cols();
        let rows = derived.inner.total_rows;
        let mut m = Matrix::zeros(rows, derived.reencode_passes * cols, derived.sys.modulus);
        for (i, pass) in self.inner_passes.iter().enumerate() {
            m.set_block(0, i * cols, &pass.matrix);
        }
        m
    }
}

/// Extracts the short message for one re-encoding pass from a built outer
/// layer: one tail row of each outer block, concatenated.
pub fn reencode_pass_message(outer: &Matrix, derived: &DerivedParams, pass: usize) -> Vec<Fp> {
    let shape = &derived.outer;
    let mut out = Vec::with_capacity(derived.inner_message_len);
    for block in 1..=shape.blocks {
        let row = reencode_source_row(block, pass, derived.sys.read_threshold, shape.blocks) - 1;
        let (c0, c1) = shape.col_range(block);
        for c in c0..c1 {
            out.push(outer[(row, c)]);
        }
    }
    debug_assert_eq!(out.len(), derived.inner_message_len);
    out
}

/// Builds both layers. `inner_noise[i][j]` is the noise for block `j+1` of
/// pass `i+1`.
pub fn build_storage_pair(
    msg: &[Fp],
    outer_noise: &[Matrix],
    inner_noise: &[Vec<Matrix>],
    derived: &DerivedParams,
) -> Result<StoragePair> {
    if msg.len() != derived.message_len {
        return Err(Error::ShapeMismatch(format!(
            "message has {} symbols, expected {}",
            msg.len(),
            derived.message_len
        )));
    }
    if inner_noise.len() != derived.reencode_passes {
        return Err(Error::ShapeMismatch(format!(
            "expected noise for {} passes, got {}",
            derived.reencode_passes,
            inner_noise.len()
        )));
    }
    let outer = build_staircase(msg, outer_noise, &derived.outer)?;
    let mut inner_passes = Vec::with_capacity(derived.reencode_passes);
    for pass in 1..=derived.reencode_passes {
        let w = reencode_pass_message(&outer.matrix, derived, pass);
        inner_passes.push(build_staircase(&w, &inner_noise[pass - 1], &derived.inner)?);
    }
    Ok(StoragePair { outer, inner_passes })
}

/// The evaluation code shared by all servers: `C[n][j] = 1 / (x_n - f_j)` with
/// `x_n = n` and `f_j = N + j`, an `N x beta_1` Cauchy matrix. Every square
/// submatrix is invertible, which is what every decoding step below relies on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauchyCode {
    matrix: Matrix,
}

impl CauchyCode {
    pub fn new(params: &SystemParams, total_rows: usize) -> Result<Self> {
        let n = params.servers;
        let q = params.modulus;
        let needed = (n + total_rows) as u64;
        if q < needed {
            return Err(Error::FieldTooSmall { q, needed });
        }
        let matrix = Matrix::from_fn(n, total_rows, q, |i, j| {
            let x = Fp::new((i + 1) as u64, q);
            let f = Fp::new((n + j + 1) as u64, q);
            (x - f).inv().expect("evaluation points are distinct")
        });
        Ok(CauchyCode { matrix })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Code row of a server (1-based id).
    pub fn server_row(&self, server: usize) -> &[Fp] {
        self.matrix.row(server - 1)
    }

    /// Submatrix with one row per listed server (1-based) and the given
    /// 0-based columns.
    pub fn rows_cols(&self, servers: &[usize], cols: &[usize]) -> Matrix {
        let rows: Vec<usize> = servers.iter().map(|&s| s - 1).collect();
        self.matrix.submatrix(&rows, cols)
    }

    /// Submatrix with one row per listed server and columns `0..width`.
    pub fn rows_prefix(&self, servers: &[usize], width: usize) -> Matrix {
        let cols: Vec<usize> = (0..width).collect();
        self.rows_cols(servers, &cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Golden tuple over a field large enough to keep all probe values
    /// distinct: message symbols are 1..=36 and noise symbols 37..=84, so
    /// every matrix entry identifies its source uniquely.
    fn symbolic_setup() -> (DerivedParams, Vec<Fp>, Vec<Matrix>, Vec<Vec<Matrix>>) {
        let p = SystemParams::with_modulus(7, 5, 6, 2, 97).unwrap();
        let d = p.derive().unwrap();
        let msg: Vec<Fp> = (1..=36).map(|v| Fp::new(v, 97)).collect();
        let mut next = 37u64;
        let mut draw = |rows: usize, cols: usize| {
            let m = Matrix::from_fn(rows, cols, 97, |i, j| Fp::new(next + (i * cols + j) as u64, 97));
            next += (rows * cols) as u64;
            m
        };
        let outer = vec![draw(2, 6)];
        let inner = (0..3)
            .map(|_| vec![draw(2, 2), draw(2, 1), draw(2, 3)])
            .collect();
        (d, msg, outer, inner)
    }

    fn val(m: &Matrix, r: usize, c: usize) -> u64 {
        m[(r, c)].value()
    }

    #[test]
    fn outer_layer_matches_worked_example() {
        let (d, msg, outer_noise, inner_noise) = symbolic_setup();
        let pair = build_storage_pair(&msg, &outer_noise, &inner_noise, &d).unwrap();
        let m1 = &pair.outer.matrix;
        assert_eq!((m1.rows(), m1.cols()), (8, 6));
        // Rows 1..=6 are the reshaped message, rows 7..=8 the noise.
        for r in 0..6 {
            for c in 0..6 {
                assert_eq!(val(m1, r, c), (6 * r + c + 1) as u64);
            }
        }
        for c in 0..6 {
            assert_eq!(val(m1, 6, c), 37 + c as u64);
            assert_eq!(val(m1, 7, c), 43 + c as u64);
        }
    }

    #[test]
    fn first_inner_pass_matches_worked_example() {
        let (d, msg, outer_noise, inner_noise) = symbolic_setup();
        let pair = build_storage_pair(&msg, &outer_noise, &inner_noise, &d).unwrap();
        let m = &pair.inner_passes[0].matrix;
        let expect = [
            [31, 32, 49, 51, 52, 54],
            [33, 34, 50, 55, 56, 57],
            [35, 36, 53, 58, 59, 60],
            [49, 50, 54, 0, 0, 0],
            [51, 52, 0, 0, 0, 0],
        ];
        assert_eq!((m.rows(), m.cols()), (5, 6));
        for r in 0..5 {
            for c in 0..6 {
                assert_eq!(val(m, r, c), expect[r][c], "mismatch at ({r},{c})");
            }
        }
    }

    #[test]
    fn later_passes_reencode_noise_rows() {
        let (d, msg, outer_noise, inner_noise) = symbolic_setup();
        let pair = build_storage_pair(&msg, &outer_noise, &inner_noise, &d).unwrap();
        // Pass 2 reads outer row 7 (first noise row), pass 3 reads row 8.
        assert_eq!(
            reencode_pass_message(&pair.outer.matrix, &d, 2).iter().map(Fp::value).collect::<Vec<_>>(),
            vec![37, 38, 39, 40, 41, 42]
        );
        assert_eq!(
            reencode_pass_message(&pair.outer.matrix, &d, 3).iter().map(Fp::value).collect::<Vec<_>>(),
            vec![43, 44, 45, 46, 47, 48]
        );
        let m2 = &pair.inner_passes[1].matrix;
        let expect = [
            [37, 38, 61, 63, 64, 66],
            [39, 40, 62, 67, 68, 69],
            [41, 42, 65, 70, 71, 72],
            [61, 62, 66, 0, 0, 0],
            [63, 64, 0, 0, 0, 0],
        ];
        for r in 0..5 {
            for c in 0..6 {
                assert_eq!(val(m2, r, c), expect[r][c], "mismatch at ({r},{c})");
            }
        }
        let stacked = pair.inner_matrix(&d);
        assert_eq!((stacked.rows(), stacked.cols()), (5, 18));
        assert_eq!(val(&stacked, 0, 6), 37);
        assert_eq!(val(&stacked, 0, 12), 43);
        assert_eq!(val(&stacked, 0, 14), 73);
    }

    #[test]
    fn reencode_rows_for_golden_tuple() {
        for (pass, row) in [(1, 6), (2, 7), (3, 8)] {
            assert_eq!(reencode_source_row(1, pass, 5, 1), row);
        }
        // Wider outer layer: block j of pass i reads row R_r + G_1 + i - j.
        assert_eq!(reencode_source_row(2, 1, 5, 4), 8);
    }

    #[test]
    fn row_kinds_classify_structure() {
        let (d, msg, outer_noise, inner_noise) = symbolic_setup();
        let pair = build_storage_pair(&msg, &outer_noise, &inner_noise, &d).unwrap();
        let kinds = &pair.inner_passes[0].row_kinds;
        assert!(matches!(kinds[0][0], RowKind::Message));
        assert!(matches!(kinds[0][3], RowKind::Noise(0)));
        match &kinds[1][0] {
            RowKind::Replicated(srcs) => {
                assert_eq!(srcs, &[RowSource { block: 1, row: 4, col_start: 0, len: 1 }]);
            }
            other => panic!("expected replicated row, got {other:?}"),
        }
        assert!(matches!(kinds[1][4], RowKind::Zero));
        // Block 3 row 1 spans a block boundary: two symbols of block 1's row 5
        // and one of block 2's row 4.
        match &kinds[2][0] {
            RowKind::Replicated(srcs) => {
                assert_eq!(
                    srcs,
                    &[
                        RowSource { block: 1, row: 5, col_start: 0, len: 2 },
                        RowSource { block: 2, row: 4, col_start: 0, len: 1 },
                    ]
                );
            }
            other => panic!("expected replicated row, got {other:?}"),
        }
    }

    #[test]
    fn cauchy_code_golden_entries() {
        let p = SystemParams::new(7, 5, 6, 2).unwrap();
        let d = p.derive().unwrap();
        let code = CauchyCode::new(&p, d.outer.total_rows).unwrap();
        let c = code.matrix();
        assert_eq!((c.rows(), c.cols()), (7, 8));
        // (1 - 8)^-1 = (-7)^-1 = 10^-1 = 12 in F_17.
        assert_eq!(c[(0, 0)].value(), 12);
        assert_eq!(c.rank(), 7);
    }

    #[test]
    fn cauchy_square_submatrices_invertible() {
        let p = SystemParams::new(7, 5, 6, 2).unwrap();
        let d = p.derive().unwrap();
        let code = CauchyCode::new(&p, d.outer.total_rows).unwrap();
        for k in 1..=7usize {
            let rows: Vec<usize> = (1..=k).collect();
            let cols: Vec<usize> = (8 - k..8).collect();
            let sub = code.rows_cols(&rows, &cols);
            assert!(sub.inverse().is_ok(), "{k}x{k} submatrix singular");
        }
    }

    #[test]
    fn field_too_small_is_rejected() {
        let p = SystemParams { servers: 7, read_threshold: 5, storage_denominator: 6, constrained_servers: 2, modulus: 13 };
        assert_eq!(CauchyCode::new(&p, 8), Err(Error::FieldTooSmall { q: 13, needed: 15 }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        /// Replication identity: each block's data rows re-pack the designated
        /// rows of earlier blocks, byte for byte.
        #[test]
        fn replication_identity(n in 2usize..=8, r_r in 1usize..=8, k_c in 1usize..=8, s in 0usize..=7, seed in 0u64..1000) {
            prop_assume!(r_r <= n && s < k_c && s < r_r);
            let Ok(p) = SystemParams::new(n, r_r, k_c, s) else { return Ok(()) };
            let Ok(d) = p.derive() else { return Ok(()) };
            prop_assume!(d.message_len <= 720);
            let q = p.modulus;
            let msg: Vec<Fp> = (0..d.message_len).map(|k| Fp::new(seed.wrapping_add(k as u64 * 7919) % q, q)).collect();
            let noise: Vec<Matrix> = (0..d.outer.blocks)
                .map(|i| Matrix::from_fn(d.noise_rows, d.outer.block_cols[i], q, |r, c| {
                    Fp::new(seed.wrapping_mul(31).wrapping_add((r * 131 + c * 17 + i) as u64) % q, q)
                }))
                .collect();
            let layer = build_staircase(&msg, &noise, &d.outer).unwrap();
            for block in 2..=d.outer.blocks {
                let mut expected = Vec::new();
                for j in 1..block {
                    let row = d.outer.replicate_base + block - j - 1;
                    let (c0, c1) = d.outer.col_range(j);
                    for c in c0..c1 {
                        expected.push(layer.matrix[(row, c)]);
                    }
                }
                let got = block_data_vector(&layer.matrix, &d.outer, block);
                prop_assert_eq!(got, expected);
            }
        }
    }
}
