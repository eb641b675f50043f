//! Scenario-driven simulation: run a timeline of reads and updates against
//! one cluster, audit every event (decoding, untouched dropout storage,
//! measured cost against both bounds), and emit a deterministic report.
//!
//! Scenarios are JSON; dropouts are an input schedule so runs are exactly
//! reproducible, with an opt-in knob to sample them from the seed instead.

use crate::bounds::{build_read_lp, build_update_lp, closed_read_bound, closed_update_bound, lp_min};
use crate::error::{Error, Result};
use crate::field::Fp;
use crate::params::{DropoutSet, ReadCase, SystemParams, UpdateCase};
use crate::rational::Rat;
use crate::read::{decode_read, execute_read, plan_read};
use crate::storage::{sample_message, ClusterState, Scheme, ServerShare};
use crate::update::{apply_update, decode_update_increment, encode_update, plan_update};
use crate::verify::{
    check_recoverability, check_staircase, check_x_security_without_noise, reference_pair,
    sweep_x_security,
};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Tuple portion of a scenario config; the modulus may be omitted to get the
/// smallest workable prime.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub servers: usize,
    pub read_threshold: usize,
    pub storage_denominator: usize,
    pub constrained_servers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<u64>,
}

impl ParamsConfig {
    pub fn build(&self) -> Result<SystemParams> {
        match self.modulus {
            Some(q) => SystemParams::with_modulus(
                self.servers,
                self.read_threshold,
                self.storage_denominator,
                self.constrained_servers,
                q,
            ),
            None => SystemParams::new(
                self.servers,
                self.read_threshold,
                self.storage_denominator,
                self.constrained_servers,
            ),
        }
    }

    pub fn from_params(p: &SystemParams) -> Self {
        ParamsConfig {
            servers: p.servers,
            read_threshold: p.read_threshold,
            storage_denominator: p.storage_denominator,
            constrained_servers: p.constrained_servers,
            modulus: Some(p.modulus),
        }
    }
}

/// Either the literal keyword `"random"` or an explicit symbol list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessageSpec {
    Keyword(String),
    Explicit(Vec<u64>),
}

impl Default for MessageSpec {
    fn default() -> Self {
        MessageSpec::Keyword("random".into())
    }
}

impl MessageSpec {
    fn validate(&self, what: &str, len: usize, q: u64) -> Result<()> {
        match self {
            MessageSpec::Keyword(k) if k == "random" => Ok(()),
            MessageSpec::Keyword(k) => Err(Error::InvalidParams(format!(
                "{what}: unknown keyword {k:?}, expected \"random\" or a symbol list"
            ))),
            MessageSpec::Explicit(symbols) => {
                if symbols.len() != len {
                    return Err(Error::InvalidParams(format!(
                        "{what}: {} symbols given, message length is {len}",
                        symbols.len()
                    )));
                }
                if let Some(v) = symbols.iter().find(|&&v| v >= q) {
                    return Err(Error::InvalidParams(format!(
                        "{what}: symbol {v} is outside the field (modulus {q})"
                    )));
                }
                Ok(())
            }
        }
    }

    fn materialize<R: Rng + ?Sized>(&self, len: usize, q: u64, rng: &mut R) -> Vec<Fp> {
        match self {
            MessageSpec::Keyword(_) => sample_message(rng, len, q),
            MessageSpec::Explicit(symbols) => symbols.iter().map(|&v| Fp::new(v, q)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Read,
    Update,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Read => "read",
            OpKind::Update => "update",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub op: OpKind,
    #[serde(default)]
    pub dropouts: Vec<usize>,
    /// Security level X; updates only.
    #[serde(default)]
    pub security: usize,
    /// Update increment; updates only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment: Option<MessageSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Scenario {
    pub params: ParamsConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial_message: MessageSpec,
    #[serde(default)]
    pub timeline: Vec<EventSpec>,
    /// When set, every event's dropout list is replaced by a seeded sample
    /// where each server drops with this probability (then trimmed to
    /// feasibility).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_dropouts: Option<f64>,
}

fn scenario_invalid(event: usize, reason: impl Into<String>) -> Error {
    Error::ScenarioInvalid { event, reason: reason.into() }
}

/// Replaces dropout lists with seeded samples when requested, trimming each
/// set until the event stays feasible.
fn materialize_dropouts<R: Rng + ?Sized>(
    scheme: &Scheme,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<Vec<EventSpec>> {
    let mut timeline = scenario.timeline.clone();
    let Some(p) = scenario.random_dropouts else {
        return Ok(timeline);
    };
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!(
            "dropout probability {p} is not in [0, 1]"
        )));
    }
    let n = scheme.params.servers;
    let omega = scheme.params.noise_rows();
    for ev in &mut timeline {
        let mut drops: Vec<usize> = (1..=n).filter(|_| rng.random_bool(p)).collect();
        let cap = match ev.op {
            OpKind::Read => n - scheme.params.read_threshold,
            OpKind::Update => omega.saturating_sub(ev.security),
        };
        while drops.len() > cap {
            let gone = rng.random_range(0..drops.len());
            drops.remove(gone);
        }
        ev.dropouts = drops;
    }
    Ok(timeline)
}

/// Eager validation: every event is checked before any executes.
fn validate_timeline(scheme: &Scheme, timeline: &[EventSpec]) -> Result<()> {
    let p = &scheme.params;
    let q = p.modulus;
    for (idx, ev) in timeline.iter().enumerate() {
        let dropouts = DropoutSet::new(ev.dropouts.clone(), p.servers)
            .map_err(|e| scenario_invalid(idx, e.to_string()))?;
        match ev.op {
            OpKind::Read => {
                if ev.security != 0 {
                    return Err(scenario_invalid(idx, "read events take no security level"));
                }
                if ev.increment.is_some() {
                    return Err(scenario_invalid(idx, "read events take no increment"));
                }
                p.read_case(&dropouts).map_err(|e| scenario_invalid(idx, e.to_string()))?;
            }
            OpKind::Update => {
                p.update_case(&dropouts, ev.security)
                    .map_err(|e| scenario_invalid(idx, e.to_string()))?;
                if let Some(spec) = &ev.increment {
                    spec.validate("increment", scheme.derived.message_len, q)
                        .map_err(|e| scenario_invalid(idx, e.to_string()))?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EventReport {
    pub t: u64,
    pub op: OpKind,
    pub dropouts: Vec<usize>,
    #[serde(rename = "X")]
    pub x: usize,
    pub case: &'static str,
    pub measured_cost: Rat,
    pub closed_form_bound: Rat,
    pub lp_bound: Rat,
    pub cost_match: bool,
    pub clamp_flag: bool,
    pub decode_ok: bool,
    pub storage_ok: bool,
    /// Measured minus LP bound, reported on clamped events.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamp_gap: Option<Rat>,
}

impl EventReport {
    /// The event's audit verdict: decoding, untouched storage, and the cost
    /// discipline (exact triple equality, or measured >= LP when clamped).
    pub fn passed(&self) -> bool {
        let cost_ok = if self.clamp_flag {
            self.measured_cost >= self.lp_bound
        } else {
            self.cost_match
        };
        self.decode_ok && self.storage_ok && cost_ok
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FinalSummary {
    /// Exhaustive (or sampled past 8 servers) end-state recoverability.
    pub recoverable: bool,
    /// Collusion sweeps run, one per distinct secured update plan.
    pub security_checks: usize,
    pub security_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub params: SystemParams,
    pub seed: u64,
    pub events: Vec<EventReport>,
    pub final_summary: FinalSummary,
}

impl RunReport {
    /// Name of the first failed assertion, if any.
    pub fn first_failure(&self) -> Option<String> {
        for ev in &self.events {
            if !ev.decode_ok {
                return Some(format!("event {} ({}): decode mismatch", ev.t, ev.op));
            }
            if !ev.storage_ok {
                return Some(format!("event {} ({}): storage mutated out of contract", ev.t, ev.op));
            }
            if !ev.passed() {
                return Some(format!(
                    "event {} ({}): measured cost {} vs closed form {} and LP {}{}",
                    ev.t,
                    ev.op,
                    ev.measured_cost,
                    ev.closed_form_bound,
                    ev.lp_bound,
                    if ev.clamp_flag { " (clamped)" } else { "" }
                ));
            }
        }
        if !self.final_summary.recoverable {
            return Some("final recoverability check failed".into());
        }
        if !self.final_summary.security_ok {
            return Some("security sweep found a leaking subset".into());
        }
        None
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat cost table: `N,R_r,K_c,S,op,dropouts,X,case,measured,closed,lp,match,clamped`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,R_r,K_c,S,op,dropouts,X,case,measured,closed,lp,match,clamped\n");
        let p = &self.params;
        for ev in &self.events {
            let drops =
                ev.dropouts.iter().map(ToString::to_string).collect::<Vec<_>>().join("|");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                p.servers,
                p.read_threshold,
                p.storage_denominator,
                p.constrained_servers,
                ev.op,
                drops,
                ev.x,
                ev.case,
                ev.measured_cost,
                ev.closed_form_bound,
                ev.lp_bound,
                ev.cost_match,
                ev.clamp_flag
            ));
        }
        out
    }
}

fn dropout_shares(cluster: &ClusterState, dropouts: &DropoutSet) -> Vec<ServerShare> {
    dropouts.servers().iter().map(|&s| cluster.share(s).clone()).collect()
}

/// One random full read against the current state; true iff it returns the
/// reference message.
fn spot_recoverable<R: Rng + ?Sized>(cluster: &ClusterState, rng: &mut R) -> Result<bool> {
    let p = cluster.params();
    let readers: Vec<usize> =
        sample_indices(rng, p.servers, p.read_threshold).iter().map(|i| i + 1).collect();
    let dropouts: Vec<usize> = (1..=p.servers).filter(|s| !readers.contains(s)).collect();
    let plan = plan_read(cluster.scheme(), DropoutSet::new(dropouts, p.servers)?)?;
    let transcript = execute_read(cluster, &plan);
    Ok(decode_read(cluster.scheme(), &transcript)? == cluster.reference_message())
}

/// Executes a validated scenario and audits every event.
pub fn run_scenario(scenario: &Scenario) -> Result<RunReport> {
    let params = scenario.params.build()?;
    let scheme = Scheme::new(params)?;
    let q = scheme.params.modulus;
    let len = scheme.derived.message_len;
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);

    let timeline = materialize_dropouts(&scheme, scenario, &mut rng)?;
    validate_timeline(&scheme, &timeline)?;
    scenario.initial_message.validate("initial message", len, q)?;
    let message = scenario.initial_message.materialize(len, q, &mut rng);
    let mut cluster = ClusterState::init(scheme.clone(), message, &mut rng)?;

    let mut events = Vec::with_capacity(timeline.len());
    let mut security_cache: HashMap<(Vec<usize>, usize), bool> = HashMap::new();
    for (idx, ev) in timeline.iter().enumerate() {
        let t = idx as u64 + 1;
        let dropouts = DropoutSet::new(ev.dropouts.clone(), scheme.params.servers)?;
        let report = match ev.op {
            OpKind::Read => {
                let before = dropout_shares(&cluster, &dropouts);
                let plan = plan_read(&scheme, dropouts.clone())?;
                let transcript = execute_read(&cluster, &plan);
                let decoded = decode_read(&scheme, &transcript)?;
                let decode_ok = decoded == cluster.reference_message()
                    && spot_recoverable(&cluster, &mut rng)?;
                let storage_ok = before == dropout_shares(&cluster, &dropouts)
                    && cluster.verify_consistency().is_ok();
                let measured = transcript.cost();
                let closed = closed_read_bound(&scheme.params, &dropouts)?;
                let lp = lp_min(&build_read_lp(&scheme.params, &dropouts)?)?;
                let cost_match = measured == closed && measured == lp;
                EventReport {
                    t,
                    op: OpKind::Read,
                    dropouts: ev.dropouts.clone(),
                    x: 0,
                    case: match plan.case {
                        ReadCase::Prefix => "prefix",
                        ReadCase::Reencoded => "reencoded",
                    },
                    measured_cost: measured,
                    closed_form_bound: closed,
                    lp_bound: lp,
                    cost_match,
                    clamp_flag: false,
                    decode_ok,
                    storage_ok,
                    clamp_gap: None,
                }
            }
            OpKind::Update => {
                let x = ev.security;
                let plan = plan_update(&scheme, dropouts.clone(), x)?;
                let spec = ev.increment.clone().unwrap_or_default();
                let delta = spec.materialize(len, q, &mut rng);
                let update = encode_update(&scheme, &plan, &delta, &mut rng)?;
                let expected: Vec<Fp> = cluster
                    .reference_message()
                    .iter()
                    .zip(&delta)
                    .map(|(w, d)| *w + *d)
                    .collect();
                let before = dropout_shares(&cluster, &dropouts);
                apply_update(&mut cluster, &update)?;
                let storage_ok = before == dropout_shares(&cluster, &dropouts)
                    && cluster.verify_consistency().is_ok();
                let readers: Vec<usize> = dropouts
                    .available(scheme.params.servers)
                    .into_iter()
                    .take(scheme.params.read_threshold - dropouts.len())
                    .collect();
                let decode_ok = cluster.reference_message() == expected.as_slice()
                    && decode_update_increment(&scheme, &update, &readers)? == delta
                    && spot_recoverable(&cluster, &mut rng)?;
                if x >= 1 {
                    security_cache
                        .entry((ev.dropouts.clone(), x))
                        .or_insert(sweep_x_security(&scheme, &plan)?.passed());
                }
                let measured = update.cost();
                let closed = closed_update_bound(&scheme.params, &dropouts, x)?;
                let lp = lp_min(&build_update_lp(&scheme.params, &dropouts, x)?)?;
                let cost_match = measured == closed && measured == lp;
                let clamp_flag = plan.clamped();
                EventReport {
                    t,
                    op: OpKind::Update,
                    dropouts: ev.dropouts.clone(),
                    x,
                    case: match plan.case {
                        UpdateCase::Truncated => "truncated",
                        UpdateCase::Reencoded => "reencoded",
                    },
                    clamp_gap: clamp_flag.then(|| measured.clone() - lp.clone()),
                    measured_cost: measured,
                    closed_form_bound: closed,
                    lp_bound: lp,
                    cost_match,
                    clamp_flag,
                    decode_ok,
                    storage_ok,
                }
            }
        };
        events.push(report);
    }

    let final_summary = FinalSummary {
        recoverable: check_recoverability(&cluster)?,
        security_checks: security_cache.len(),
        security_ok: security_cache.values().all(|&ok| ok),
    };
    Ok(RunReport { params: scheme.params, seed: scenario.seed, events, final_summary })
}

/// The worked end-to-end script: a read around one dropout, a secured update,
/// and a full read, on the seven-server reference tuple.
pub fn golden_scenario() -> Scenario {
    Scenario {
        params: ParamsConfig {
            servers: 7,
            read_threshold: 5,
            storage_denominator: 6,
            constrained_servers: 2,
            modulus: Some(17),
        },
        seed: 7,
        initial_message: MessageSpec::default(),
        timeline: vec![
            EventSpec { op: OpKind::Read, dropouts: vec![3], security: 0, increment: None },
            EventSpec { op: OpKind::Update, dropouts: vec![1], security: 1, increment: None },
            EventSpec { op: OpKind::Read, dropouts: vec![], security: 0, increment: None },
        ],
        random_dropouts: None,
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyCheck {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub checks_run: usize,
    pub passes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_counterexample: Option<String>,
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.passes == self.checks_run
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the structural, security, and recoverability suites over a scenario's
/// timeline: staircase and consistency audits around the run, a collusion
/// sweep plus negative control and an increment-decode witness per secured
/// update, and end-state recoverability.
pub fn run_verification(scenario: &Scenario) -> Result<VerifyReport> {
    let params = scenario.params.build()?;
    let scheme = Scheme::new(params)?;
    let q = scheme.params.modulus;
    let len = scheme.derived.message_len;
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);

    let timeline = materialize_dropouts(&scheme, scenario, &mut rng)?;
    validate_timeline(&scheme, &timeline)?;
    scenario.initial_message.validate("initial message", len, q)?;
    let message = scenario.initial_message.materialize(len, q, &mut rng);
    let mut cluster = ClusterState::init(scheme.clone(), message, &mut rng)?;

    let mut checks: Vec<VerifyCheck> = Vec::new();
    let push = |checks: &mut Vec<VerifyCheck>, name: String, pass: bool, detail: Option<String>| {
        checks.push(VerifyCheck { name, pass, detail });
    };

    let initial = check_staircase(&reference_pair(&cluster)?, &scheme.derived);
    push(&mut checks, "staircase/initial".into(), initial.ok, initial.first_violation);
    push(
        &mut checks,
        "consistency/initial".into(),
        cluster.verify_consistency().is_ok(),
        None,
    );

    for (idx, ev) in timeline.iter().enumerate() {
        let t = idx + 1;
        let dropouts = DropoutSet::new(ev.dropouts.clone(), scheme.params.servers)?;
        match ev.op {
            OpKind::Read => {
                let plan = plan_read(&scheme, dropouts)?;
                let transcript = execute_read(&cluster, &plan);
                let ok = decode_read(&scheme, &transcript)? == cluster.reference_message();
                push(&mut checks, format!("read-decode/event-{t}"), ok, None);
            }
            OpKind::Update => {
                let x = ev.security;
                let plan = plan_update(&scheme, dropouts.clone(), x)?;
                let spec = ev.increment.clone().unwrap_or_default();
                let delta = spec.materialize(len, q, &mut rng);
                let update = encode_update(&scheme, &plan, &delta, &mut rng)?;
                apply_update(&mut cluster, &update)?;
                let readers: Vec<usize> = dropouts
                    .available(scheme.params.servers)
                    .into_iter()
                    .take(scheme.params.read_threshold - dropouts.len())
                    .collect();
                let decoded = decode_update_increment(&scheme, &update, &readers)? == delta;
                push(&mut checks, format!("increment-decode/event-{t}"), decoded, None);
                if x >= 1 {
                    let sweep = sweep_x_security(&scheme, &plan)?;
                    push(
                        &mut checks,
                        format!("security/event-{t}"),
                        sweep.passed(),
                        sweep.failing_subset.map(|s| format!("leaking subset {s:?}")),
                    );
                    let probe: Vec<usize> = dropouts
                        .available(scheme.params.servers)
                        .into_iter()
                        .take(x)
                        .collect();
                    let leaked = !check_x_security_without_noise(&scheme, &plan, &probe)?;
                    push(
                        &mut checks,
                        format!("security-negative-control/event-{t}"),
                        leaked,
                        (!leaked).then(|| {
                            "stripping the noise should expose the increment".to_string()
                        }),
                    );
                }
            }
        }
    }

    let fin = check_staircase(&reference_pair(&cluster)?, &scheme.derived);
    push(&mut checks, "staircase/final".into(), fin.ok, fin.first_violation);
    push(&mut checks, "consistency/final".into(), cluster.verify_consistency().is_ok(), None);
    push(
        &mut checks,
        "recoverability/final".into(),
        check_recoverability(&cluster)?,
        None,
    );

    let checks_run = checks.len();
    let passes = checks.iter().filter(|c| c.pass).count();
    let first_counterexample = checks.iter().find(|c| !c.pass).map(|c| {
        match &c.detail {
            Some(d) => format!("{}: {}", c.name, d),
            None => c.name.clone(),
        }
    });
    Ok(VerifyReport { checks_run, passes, first_counterexample, checks })
}
