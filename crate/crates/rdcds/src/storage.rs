//! Cluster state: per-server shares plus a simulator-side oracle.
//!
//! Every server `n` stores the first-layer share `C(n,:) * M1`. Unconstrained
//! servers additionally store `C(n, 1..=N-S) * M2`, the share of the
//! re-encoded layer. The cluster also tracks the plaintext message and the
//! accumulated noise matrices; they are never consulted by the protocols and
//! exist so tests and the verifier can re-derive what storage must contain.

use crate::codec::{build_storage_pair, CauchyCode, StoragePair};
use crate::error::{Error, Result};
use crate::field::{vec_mat_mul, Fp, Matrix};
use crate::params::{DerivedParams, SystemParams};
use crate::rational::Rat;
use rand::Rng;
use serde::Serialize;

/// Immutable per-deployment context: parameters, derived geometry, and the
/// evaluation code. Protocols take this instead of the cluster so they cannot
/// peek at plaintext.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub params: SystemParams,
    pub derived: DerivedParams,
    pub code: CauchyCode,
}

impl Scheme {
    pub fn new(params: SystemParams) -> Result<Self> {
        let derived = params.derive()?;
        let code = CauchyCode::new(&params, derived.outer.total_rows)?;
        Ok(Scheme { params, derived, code })
    }

    /// Evaluation rows restricted to the inner layer's height.
    pub fn inner_code_width(&self) -> usize {
        self.derived.inner.total_rows
    }
}

/// What one server holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerShare {
    pub server: usize,
    /// Share of the outer layer; `L / K_c` symbols on every server.
    pub first: Vec<Fp>,
    /// Share of the re-encoded layer; present only on unconstrained servers.
    pub second: Option<Vec<Fp>>,
}

#[derive(Debug, Clone)]
pub struct ClusterState {
    pub(crate) scheme: Scheme,
    pub(crate) shares: Vec<ServerShare>,
    pub(crate) reference_message: Vec<Fp>,
    pub(crate) outer_noise: Vec<Matrix>,
    pub(crate) inner_noise: Vec<Vec<Matrix>>,
    pub(crate) time_slot: u64,
}

pub(crate) fn sample_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, q: u64) -> Matrix {
    Matrix::from_fn(rows, cols, q, |_, _| Fp::new(rng.random_range(0..q), q))
}

pub(crate) fn sample_message<R: Rng + ?Sized>(rng: &mut R, len: usize, q: u64) -> Vec<Fp> {
    (0..len).map(|_| Fp::new(rng.random_range(0..q), q)).collect()
}

/// Computes every server's shares for a built storage pair.
fn shares_of(scheme: &Scheme, pair: &StoragePair) -> Vec<ServerShare> {
    let d = &scheme.derived;
    let inner_matrix = pair.inner_matrix(d);
    (1..=scheme.params.servers)
        .map(|n| {
            let first = vec_mat_mul(scheme.code.server_row(n), &pair.outer.matrix);
            let second = if scheme.params.is_constrained(n) {
                None
            } else {
                let row = &scheme.code.server_row(n)[..scheme.inner_code_width()];
                Some(vec_mat_mul(row, &inner_matrix))
            };
            ServerShare { server: n, first, second }
        })
        .collect()
}

impl ClusterState {
    /// Encodes `message` with fresh noise and distributes shares.
    pub fn init<R: Rng + ?Sized>(scheme: Scheme, message: Vec<Fp>, rng: &mut R) -> Result<Self> {
        let d = scheme.derived.clone();
        let q = scheme.params.modulus;
        if message.len() != d.message_len {
            return Err(Error::ShapeMismatch(format!(
                "message has {} symbols, expected {}",
                message.len(),
                d.message_len
            )));
        }
        if message.iter().any(|e| e.modulus() != q) {
            return Err(Error::ShapeMismatch("message symbols not in the scheme field".into()));
        }
        let outer_noise: Vec<Matrix> = (0..d.outer.blocks)
            .map(|i| sample_matrix(rng, d.noise_rows, d.outer.block_cols[i], q))
            .collect();
        let inner_noise: Vec<Vec<Matrix>> = (0..d.reencode_passes)
            .map(|_| {
                (0..d.inner.blocks)
                    .map(|j| sample_matrix(rng, d.noise_rows, d.inner.block_cols[j], q))
                    .collect()
            })
            .collect();
        let pair = build_storage_pair(&message, &outer_noise, &inner_noise, &d)?;
        let shares = shares_of(&scheme, &pair);
        Ok(ClusterState {
            scheme,
            shares,
            reference_message: message,
            outer_noise,
            inner_noise,
            time_slot: 0,
        })
    }

    /// Encodes a uniformly random message.
    pub fn init_random<R: Rng + ?Sized>(scheme: Scheme, rng: &mut R) -> Result<Self> {
        let len = scheme.derived.message_len;
        let q = scheme.params.modulus;
        let message = sample_message(rng, len, q);
        ClusterState::init(scheme, message, rng)
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn params(&self) -> &SystemParams {
        &self.scheme.params
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.scheme.derived
    }

    pub fn time_slot(&self) -> u64 {
        self.time_slot
    }

    pub fn share(&self, server: usize) -> &ServerShare {
        &self.shares[server - 1]
    }

    /// The current plaintext, for assertions only.
    pub fn reference_message(&self) -> &[Fp] {
        &self.reference_message
    }

    /// Stored symbols divided by message length.
    pub fn storage_fraction(&self, server: usize) -> Rat {
        let share = self.share(server);
        let held = share.first.len() + share.second.as_ref().map_or(0, Vec::len);
        Rat::ratio(held as i64, self.scheme.derived.message_len as i64)
    }

    /// Re-derives every share from the oracle state and checks storage matches.
    pub fn verify_consistency(&self) -> Result<()> {
        let pair = build_storage_pair(
            &self.reference_message,
            &self.outer_noise,
            &self.inner_noise,
            &self.scheme.derived,
        )?;
        let expected = shares_of(&self.scheme, &pair);
        for (have, want) in self.shares.iter().zip(&expected) {
            if have != want {
                return Err(Error::InvalidParams(format!(
                    "server {} share diverged from re-derived storage",
                    have.server
                )));
            }
        }
        Ok(())
    }

    /// Deterministic JSON snapshot with hex-encoded symbols.
    pub fn snapshot_json(&self) -> String {
        let q = self.scheme.params.modulus;
        let width = format!("{:x}", q - 1).len();
        let hex = |symbols: &[Fp]| -> String {
            symbols.iter().map(|e| format!("{:0width$x}", e.value())).collect()
        };
        let export = SnapshotExport {
            params: self.scheme.params,
            time_slot: self.time_slot,
            servers: self
                .shares
                .iter()
                .map(|s| ShareExport {
                    server: s.server,
                    first: hex(&s.first),
                    second: s.second.as_deref().map(hex),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&export).expect("snapshot serializes")
    }
}

#[derive(Serialize)]
struct SnapshotExport {
    params: SystemParams,
    time_slot: u64,
    servers: Vec<ShareExport>,
}

#[derive(Serialize)]
struct ShareExport {
    server: usize,
    first: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    second: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn golden_cluster(seed: u64) -> ClusterState {
        let scheme = Scheme::new(SystemParams::new(7, 5, 6, 2).unwrap()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        ClusterState::init_random(scheme, &mut rng).unwrap()
    }

    #[test]
    fn golden_storage_fractions() {
        let cluster = golden_cluster(7);
        for n in 1..=2 {
            assert_eq!(cluster.storage_fraction(n), Rat::ratio(1, 6));
            assert!(cluster.share(n).second.is_none());
        }
        for n in 3..=7 {
            assert_eq!(cluster.storage_fraction(n), Rat::ratio(2, 3));
            assert_eq!(cluster.share(n).first.len(), 6);
            assert_eq!(cluster.share(n).second.as_ref().unwrap().len(), 18);
        }
    }

    #[test]
    fn consistency_holds_after_init() {
        let cluster = golden_cluster(11);
        cluster.verify_consistency().unwrap();
    }

    #[test]
    fn snapshots_are_deterministic() {
        let a = golden_cluster(42).snapshot_json();
        let b = golden_cluster(42).snapshot_json();
        let c = golden_cluster(43).snapshot_json();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.contains("\"time_slot\": 0"));
    }

    #[test]
    fn wrong_message_length_rejected() {
        let scheme = Scheme::new(SystemParams::new(7, 5, 6, 2).unwrap()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let short = vec![Fp::new(1, 17); 35];
        assert!(ClusterState::init(scheme, short, &mut rng).is_err());
    }
}
