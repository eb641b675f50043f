//! System parameters and the derived code geometry.
//!
//! A deployment is described by `(N, R_r, K_c, S, q)`: `N` servers of which
//! the first `S` are storage-constrained to a `1/K_c` fraction of the message,
//! any `R_r` servers must suffice to read, and all symbols live in the prime
//! field of order `q`.
//!
//! From the tuple we derive the layered staircase shape used everywhere else:
//! an outer layer whose blocks shrink from `alpha_1` down to `K_c` rows, and an
//! inner layer (for the re-encoded share of the unconstrained servers) whose
//! blocks shrink down to a single row. Block `i` of a layer owns `gamma_i`
//! message columns and is solvable from `beta_i = alpha_i + omega` coded rows,
//! where `omega` is the per-block noise row count; dropping one more server is
//! what pushes a reader from block `i` to block `i+1`.

use crate::error::{Error, Result};
use num_integer::Integer;
use serde::{Deserialize, Serialize};

/// The deployment tuple. Servers are numbered `1..=N`; servers `1..=S` are the
/// storage-constrained ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub servers: usize,
    pub read_threshold: usize,
    pub storage_denominator: usize,
    pub constrained_servers: usize,
    pub modulus: u64,
}

/// Which read regime a dropout set falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadCase {
    /// Few enough dropouts that a uniform prefix of every first-layer share
    /// suffices.
    Prefix,
    /// Deep dropout sets that additionally consume the re-encoded shares.
    Reencoded,
}

/// Which update regime a `(dropouts, X)` pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateCase {
    /// The increment staircase terminates early; only first-layer prefixes move.
    Truncated,
    /// Every outer block carries noise and the inner layer is touched too.
    Reencoded,
}

/// Shape of one staircase layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    /// Number of blocks in the layer.
    pub blocks: usize,
    /// Message rows per block, strictly decreasing by one.
    pub data_rows: Vec<usize>,
    /// Solvable height per block: `data_rows[i] + noise_rows`.
    pub coded_rows: Vec<usize>,
    /// Message columns owned by each block.
    pub block_cols: Vec<usize>,
    /// Cumulative columns; `cum_cols[i]` is the column count of blocks `1..=i`
    /// (`cum_cols[0] == 0`).
    pub cum_cols: Vec<usize>,
    /// Height of the stored layer matrix.
    pub total_rows: usize,
    /// Replication anchor: block `i` re-packs row `replicate_base + i - j` of
    /// each earlier block `j` (1-based rows).
    pub replicate_base: usize,
    /// Noise rows appended to each block's data rows.
    pub noise_rows: usize,
}

impl LayerShape {
    /// Total message columns of the layer.
    pub fn message_cols(&self) -> usize {
        *self.cum_cols.last().expect("layer has blocks")
    }

    pub fn data_rows_of(&self, block: usize) -> usize {
        self.data_rows[block - 1]
    }

    pub fn coded_rows_of(&self, block: usize) -> usize {
        self.coded_rows[block - 1]
    }

    pub fn cols_of(&self, block: usize) -> usize {
        self.block_cols[block - 1]
    }

    /// Column range `[start, end)` of a block within the layer matrix.
    pub fn col_range(&self, block: usize) -> (usize, usize) {
        (self.cum_cols[block - 1], self.cum_cols[block])
    }
}

/// Everything derivable from a valid tuple with `S < K_c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedParams {
    pub sys: SystemParams,
    /// Noise rows per block; also the dropout budget of every operation.
    pub noise_rows: usize,
    /// Number of re-encoding passes feeding the inner layer.
    pub reencode_passes: usize,
    /// Message length in field symbols.
    pub message_len: usize,
    /// Length of each re-encoded pass message: `message_len / K_c`.
    pub inner_message_len: usize,
    pub outer: LayerShape,
    pub inner: LayerShape,
    /// True iff every admissible plan in both regimes has at least one active
    /// block without clamping.
    pub well_posed: bool,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn lcm_all(values: &[usize]) -> usize {
    values.iter().fold(1usize, |acc, &v| acc.lcm(&v))
}

impl SystemParams {
    /// Builds a tuple with the smallest workable prime modulus.
    pub fn new(
        servers: usize,
        read_threshold: usize,
        storage_denominator: usize,
        constrained_servers: usize,
    ) -> Result<Self> {
        let mut q = Self::min_modulus(servers, read_threshold, storage_denominator, constrained_servers)?;
        while !is_prime(q) {
            q += 1;
        }
        Self::with_modulus(servers, read_threshold, storage_denominator, constrained_servers, q)
    }

    pub fn with_modulus(
        servers: usize,
        read_threshold: usize,
        storage_denominator: usize,
        constrained_servers: usize,
        modulus: u64,
    ) -> Result<Self> {
        let p = SystemParams {
            servers,
            read_threshold,
            storage_denominator,
            constrained_servers,
            modulus,
        };
        p.validate()?;
        Ok(p)
    }

    /// The code needs `N + beta_1` distinct evaluation points.
    fn min_modulus(n: usize, r_r: usize, k_c: usize, s: usize) -> Result<u64> {
        let p = SystemParams {
            servers: n,
            read_threshold: r_r,
            storage_denominator: k_c,
            constrained_servers: s,
            modulus: u64::MAX,
        };
        p.validate_shape()?;
        Ok((n + p.outer_coded_height()) as u64)
    }

    fn validate_shape(&self) -> Result<()> {
        let (n, r_r, k_c, s) =
            (self.servers, self.read_threshold, self.storage_denominator, self.constrained_servers);
        if n == 0 || r_r == 0 || r_r > n {
            return Err(Error::InvalidParams(format!(
                "need 1 <= read_threshold <= servers, got R_r={r_r}, N={n}"
            )));
        }
        if k_c == 0 {
            return Err(Error::InvalidParams("storage_denominator must be >= 1".into()));
        }
        if s > n {
            return Err(Error::InvalidParams(format!(
                "constrained_servers={s} exceeds servers={n}"
            )));
        }
        if s < k_c && s >= r_r {
            return Err(Error::InvalidParams(format!(
                "constrained_servers={s} must stay below read_threshold={r_r}"
            )));
        }
        if s >= k_c && k_c > r_r {
            return Err(Error::InvalidParams(format!(
                "fully constrained regime needs storage_denominator={k_c} <= read_threshold={r_r}"
            )));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if !is_prime(self.modulus) {
            return Err(Error::InvalidParams(format!("modulus {} is not prime", self.modulus)));
        }
        let needed = (self.servers + self.outer_coded_height()) as u64;
        if self.modulus < needed {
            return Err(Error::FieldTooSmall { q: self.modulus, needed });
        }
        Ok(())
    }

    /// Per-block noise rows; equals the total dropout-plus-security budget.
    pub fn noise_rows(&self) -> usize {
        if self.constrained_servers < self.storage_denominator {
            self.read_threshold - self.constrained_servers - 1
        } else {
            self.read_threshold - self.storage_denominator
        }
    }

    /// Widest outer block.
    pub fn widest_block(&self) -> usize {
        self.storage_denominator.max(self.servers - self.noise_rows())
    }

    /// Height of the outer layer matrix (`beta_1`).
    fn outer_coded_height(&self) -> usize {
        self.widest_block() + self.noise_rows()
    }

    /// Minimum number of reachable servers an update with security level `x`
    /// needs: `N - noise_rows + x`.
    pub fn update_threshold(&self, x: usize) -> Result<usize> {
        if x >= self.read_threshold {
            return Err(Error::InvalidSecurity { x, read_threshold: self.read_threshold });
        }
        Ok(self.servers - self.noise_rows() + x)
    }

    pub fn is_constrained(&self, server: usize) -> bool {
        server <= self.constrained_servers
    }

    pub fn read_case(&self, dropouts: &DropoutSet) -> Result<ReadCase> {
        let max = self.servers - self.read_threshold;
        if dropouts.len() > max {
            return Err(Error::TooManyDropouts { got: dropouts.len(), max });
        }
        let boundary = self.servers as i64 - self.noise_rows() as i64 - self.storage_denominator as i64;
        if dropouts.len() as i64 <= boundary {
            Ok(ReadCase::Prefix)
        } else {
            Ok(ReadCase::Reencoded)
        }
    }

    pub fn update_case(&self, dropouts: &DropoutSet, x: usize) -> Result<UpdateCase> {
        let required = self.update_threshold(x)?;
        let available = self.servers - dropouts.len();
        if available < required {
            return Err(Error::ThresholdViolated { available, required });
        }
        let boundary = self.read_threshold as i64 - self.storage_denominator as i64;
        if (dropouts.len() + x) as i64 <= boundary {
            Ok(UpdateCase::Truncated)
        } else {
            Ok(UpdateCase::Reencoded)
        }
    }

    /// Computes the layered code geometry. Only the partially constrained
    /// regime (`S < K_c`) admits the layered construction; fully constrained
    /// tuples are served by the bounds module alone.
    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        let (n, r_r, k_c, s) =
            (self.servers, self.read_threshold, self.storage_denominator, self.constrained_servers);
        if s >= k_c {
            return Err(Error::InvalidParams(format!(
                "layered construction needs constrained_servers={s} < storage_denominator={k_c}"
            )));
        }
        let omega = self.noise_rows();
        let alpha_1 = self.widest_block();
        let outer_blocks = alpha_1 - k_c + 1;
        let outer_alpha: Vec<usize> = (0..outer_blocks).map(|i| alpha_1 - i).collect();

        let inner_blocks = n - r_r + 1;
        let inner_top = n - s - omega;
        let inner_alpha: Vec<usize> = (0..inner_blocks).map(|i| inner_top - i).collect();
        debug_assert_eq!(*inner_alpha.last().unwrap(), 1);

        let message_len = lcm_all(&outer_alpha).lcm(&(k_c * lcm_all(&inner_alpha)));
        let inner_message_len = message_len / k_c;

        let outer = build_layer(&outer_alpha, omega, message_len, alpha_1 + omega, r_r)?;
        let inner = build_layer(&inner_alpha, omega, inner_message_len, n - s, r_r - s)?;

        let well_posed = r_r <= alpha_1 && n + s + 1 >= 2 * r_r;
        Ok(DerivedParams {
            sys: *self,
            noise_rows: omega,
            reencode_passes: k_c - s - 1,
            message_len,
            inner_message_len,
            outer,
            inner,
            well_posed,
        })
    }
}

fn build_layer(
    alpha: &[usize],
    noise_rows: usize,
    message_len: usize,
    total_rows: usize,
    replicate_base: usize,
) -> Result<LayerShape> {
    let blocks = alpha.len();
    let mut block_cols = Vec::with_capacity(blocks);
    let mut cum_cols = vec![0usize];
    for i in 0..blocks {
        let denom = if i == 0 { alpha[0] } else { alpha[i] * alpha[i - 1] };
        if message_len % denom != 0 {
            return Err(Error::InvalidParams(format!(
                "message length {message_len} not divisible by {denom}"
            )));
        }
        let cols = message_len / denom;
        block_cols.push(cols);
        cum_cols.push(cum_cols[i] + cols);
    }
    // Cumulative columns telescope: blocks 1..=i jointly hold L/alpha_i columns.
    for i in 1..=blocks {
        debug_assert_eq!(cum_cols[i], message_len / alpha[i - 1]);
    }
    let coded_rows: Vec<usize> = alpha.iter().map(|a| a + noise_rows).collect();
    Ok(LayerShape {
        blocks,
        data_rows: alpha.to_vec(),
        coded_rows,
        block_cols,
        cum_cols,
        total_rows,
        replicate_base,
        noise_rows,
    })
}

/// A validated set of dropout servers (1-based ids, sorted, unique).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DropoutSet {
    servers: Vec<usize>,
}

impl DropoutSet {
    pub fn new(mut servers: Vec<usize>, n: usize) -> Result<Self> {
        servers.sort_unstable();
        servers.dedup();
        if let Some(&bad) = servers.iter().find(|&&s| s == 0 || s > n) {
            return Err(Error::InvalidParams(format!("dropout server {bad} outside 1..={n}")));
        }
        Ok(DropoutSet { servers })
    }

    pub fn empty() -> Self {
        DropoutSet { servers: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    pub fn servers(&self) -> &[usize] {
        &self.servers
    }

    pub fn contains(&self, server: usize) -> bool {
        self.servers.binary_search(&server).is_ok()
    }

    /// Servers still reachable, ascending.
    pub fn available(&self, n: usize) -> Vec<usize> {
        (1..=n).filter(|s| !self.contains(*s)).collect()
    }

    /// Dropouts among the unconstrained servers `S+1..=N`.
    pub fn unconstrained(&self, s: usize) -> Vec<usize> {
        self.servers.iter().copied().filter(|&d| d > s).collect()
    }

    /// Dropouts among the constrained servers `1..=S`.
    pub fn constrained(&self, s: usize) -> Vec<usize> {
        self.servers.iter().copied().filter(|&d| d <= s).collect()
    }
}

impl DerivedParams {
    /// Storage symbols held by a constrained server.
    pub fn constrained_share_len(&self) -> usize {
        self.outer.message_cols()
    }

    /// Storage symbols held by an unconstrained server.
    pub fn unconstrained_share_len(&self) -> usize {
        self.outer.message_cols() + self.reencode_passes * self.inner.message_cols()
    }
}
