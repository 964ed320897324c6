//! Slotted contention resolution with signatures and tree splitting.
//!
//! Every slot the currently contending group transmits its full word. The
//! receiver reads the number of transmitters `L` from the count symbol and
//! broadcasts feedback:
//!
//! - `L = 0`: [`FeedbackMessage::Empty`], the group is closed.
//! - `1 <= L <= K`: the signature decoder yields the active set. The receiver
//!   schedules the `L - 1` lowest ids for singleton slots and recovers the
//!   remaining user's payload by subtracting theirs from the stored mod-`q`
//!   sum ([`FeedbackMessage::Resolved`] followed by one
//!   [`FeedbackMessage::Ack`] per scheduled slot).
//! - `L > K`: [`FeedbackMessage::Collision`]; every member flips a fair coin.
//!   Group 1 is resolved first, group 2 after group 1's whole subtree.
//!
//! Users never see each other. Each keeps a stack depth, transmitting only at
//! depth zero, and updates it from the broadcast feedback alone.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{AdderChannel, ChannelError, SlotObservation, UserWord};
use crate::signature_code::{decode_count, CodeError, DecodeError, SignatureCodebook};

/// Hard stop for a single contention period.
const MAX_SLOTS: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("slot {slot}: decoder failed: {source}")]
    Decode { slot: usize, source: DecodeError },
    #[error("slot {slot}: decoded {decoded:?} but {actual:?} transmitted")]
    DecodeMismatch {
        slot: usize,
        decoded: Vec<u64>,
        actual: Vec<u64>,
    },
    #[error("contention did not finish within {0} slots")]
    SlotLimit(usize),
    #[error("contention ended with unresolved users {0:?}")]
    Unresolved(Vec<u64>),
    #[error("event log: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of users, prime.
    pub m: u64,
    /// Largest number of simultaneous users the signatures can separate.
    pub k: usize,
    /// Prime alphabet size, at most `m`.
    pub q: u64,
    /// Per-user activation probability.
    pub p: f64,
    /// Transmit power (SNR), above one.
    pub power: f64,
    /// Payload bits per user.
    pub d_bits: u64,
    pub seed: u64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let fail = |msg: String| Err(ProtocolError::InvalidParams(msg));
        if !crate::is_prime(self.m) {
            return fail(format!("M = {} is not prime", self.m));
        }
        if !crate::is_prime(self.q) || self.q > self.m {
            return fail(format!(
                "q = {} must be a prime not above M = {}",
                self.q, self.m
            ));
        }
        if self.k < 1 {
            return fail("K must be at least 1".into());
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return fail(format!("p = {} must lie in (0, 1)", self.p));
        }
        if self.power.is_nan() || self.power <= 1.0 {
            return fail(format!("P = {} must exceed 1", self.power));
        }
        if self.d_bits < 1 {
            return fail("D must be at least one bit".into());
        }
        Ok(())
    }

    /// Payload length in `q`-ary symbols: the smallest `n` with `q^n >= 2^D`.
    pub fn data_len(&self) -> usize {
        let exact = self.d_bits as f64 / (self.q as f64).log2();
        (exact - 1e-9).ceil().max(1.0) as usize
    }
}

/// Receiver-to-users broadcast at the end of a slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FeedbackMessage {
    Empty,
    Resolved {
        active_set: Vec<u64>,
        schedule: Vec<u64>,
    },
    Collision {
        split_now: bool,
    },
    Ack {
        user: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    /// 1-based slot index within the contention period.
    pub index: usize,
    /// Position in the splitting tree: `r`, `r.1`, `r.2.1`, ...
    pub group: String,
    pub transmitters: Vec<u64>,
    pub observation: SlotObservation,
    pub feedback: FeedbackMessage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionResult {
    pub slots_used: usize,
    pub payloads: BTreeMap<u64, Vec<u64>>,
    pub transcript: Vec<SlotRecord>,
}

impl ResolutionResult {
    /// One JSON record per slot.
    pub fn write_event_log<W: Write>(&self, mut out: W) -> Result<(), ProtocolError> {
        for rec in &self.transcript {
            serde_json::to_writer(&mut out, rec).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Contending,
    Scheduled { wait: usize },
    Done,
}

/// User-side state machine.
struct Station {
    id: u64,
    word: UserWord,
    depth: usize,
    pending_acks: usize,
    role: Role,
    rng: ChaCha8Rng,
}

impl Station {
    fn new(id: u64, word: UserWord, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Self {
            id,
            word,
            depth: 0,
            pending_acks: 0,
            role: Role::Contending,
            rng,
        }
    }

    fn transmits(&self) -> bool {
        match self.role {
            Role::Contending => self.depth == 0 && self.pending_acks == 0,
            Role::Scheduled { wait } => wait == 0,
            Role::Done => false,
        }
    }

    fn group_closed(&mut self) {
        if self.role == Role::Contending {
            self.depth -= 1;
        }
    }

    fn on_feedback(&mut self, fb: &FeedbackMessage) {
        match fb {
            FeedbackMessage::Empty => self.group_closed(),
            FeedbackMessage::Collision { .. } => {
                if self.role == Role::Contending {
                    if self.depth == 0 {
                        self.depth = self.rng.random_range(0..2);
                    } else {
                        self.depth += 1;
                    }
                }
            }
            FeedbackMessage::Resolved {
                active_set,
                schedule,
            } => {
                if active_set.contains(&self.id) {
                    self.role = match schedule.iter().position(|&u| u == self.id) {
                        Some(wait) => Role::Scheduled { wait },
                        None => Role::Done,
                    };
                } else if schedule.is_empty() {
                    self.group_closed();
                } else {
                    self.pending_acks = schedule.len();
                }
            }
            FeedbackMessage::Ack { user } => match self.role {
                Role::Scheduled { .. } if *user == self.id => self.role = Role::Done,
                Role::Scheduled { wait } => self.role = Role::Scheduled { wait: wait - 1 },
                Role::Contending => {
                    self.pending_acks -= 1;
                    if self.pending_acks == 0 {
                        self.group_closed();
                    }
                }
                Role::Done => {}
            },
        }
    }
}

struct Schedule {
    group: String,
    queue: VecDeque<u64>,
    residual: Vec<u64>,
    last: u64,
}

/// Receiver-side state machine.
struct Receiver<'a> {
    codebook: &'a SignatureCodebook,
    channel: AdderChannel,
    stack: Vec<String>,
    schedule: Option<Schedule>,
    payloads: BTreeMap<u64, Vec<u64>>,
}

impl Receiver<'_> {
    fn current_group(&self) -> Option<String> {
        match &self.schedule {
            Some(s) => Some(s.group.clone()),
            None => self.stack.last().cloned(),
        }
    }

    fn decode(&self, slot: usize, obs: &SlotObservation) -> Result<BTreeSet<u64>, ProtocolError> {
        self.codebook
            .decode_active_set(&obs.sig_sums)
            .map_err(|source| ProtocolError::Decode { slot, source })
    }

    fn on_slot(
        &mut self,
        slot: usize,
        obs: &SlotObservation,
    ) -> Result<FeedbackMessage, ProtocolError> {
        if let Some(mut sched) = self.schedule.take() {
            let user = sched
                .queue
                .pop_front()
                .expect("active schedule is nonempty");
            let decoded = self.decode(slot, obs)?;
            if decoded.len() != 1 || !decoded.contains(&user) {
                return Err(ProtocolError::DecodeMismatch {
                    slot,
                    decoded: decoded.into_iter().collect(),
                    actual: vec![user],
                });
            }
            sched.residual = self.channel.subtract_data(&sched.residual, &obs.data_sum)?;
            self.payloads.insert(user, obs.data_sum.clone());
            if sched.queue.is_empty() {
                self.payloads.insert(sched.last, sched.residual);
            } else {
                self.schedule = Some(sched);
            }
            return Ok(FeedbackMessage::Ack { user });
        }

        let group = self.stack.pop().expect("contention slot without a group");
        let count = decode_count(&obs.sig_sums);
        if count == 0 {
            return Ok(FeedbackMessage::Empty);
        }
        if count > self.codebook.k() as u64 {
            self.stack.push(format!("{group}.2"));
            self.stack.push(format!("{group}.1"));
            return Ok(FeedbackMessage::Collision { split_now: true });
        }
        let active: Vec<u64> = self.decode(slot, obs)?.into_iter().collect();
        let (schedule, last) = active.split_at(active.len() - 1);
        let last = last[0];
        if schedule.is_empty() {
            self.payloads.insert(last, obs.data_sum.clone());
        } else {
            self.schedule = Some(Schedule {
                group,
                queue: schedule.iter().copied().collect(),
                residual: obs.data_sum.clone(),
                last,
            });
        }
        Ok(FeedbackMessage::Resolved {
            active_set: active.clone(),
            schedule: schedule.to_vec(),
        })
    }
}

/// Runs one contention period for the given active users and payloads.
///
/// `params.seed` seeds the per-user splitting streams. The decoder's output
/// is checked against the true transmitter set in every slot.
pub fn run_contention(
    params: &SystemParams,
    codebook: &SignatureCodebook,
    active: &BTreeMap<u64, Vec<u64>>,
) -> Result<ResolutionResult, ProtocolError> {
    if codebook.k() != params.k || codebook.q() != params.q || codebook.m() != params.m {
        return Err(ProtocolError::InvalidParams(
            "codebook does not match (M, K, q)".into(),
        ));
    }
    let channel = AdderChannel::new(params.q, codebook.sig_len(), params.data_len());
    let mut stations = Vec::with_capacity(active.len());
    for (&id, data) in active {
        let signature = codebook.encode_signature(id)?;
        let word = UserWord {
            signature,
            data: data.clone(),
        };
        stations.push(Station::new(id, word, params.seed));
    }
    let mut receiver = Receiver {
        codebook,
        channel,
        stack: vec!["r".to_string()],
        schedule: None,
        payloads: BTreeMap::new(),
    };
    let mut transcript = Vec::new();

    while let Some(group) = receiver.current_group() {
        let slot = transcript.len() + 1;
        if slot > MAX_SLOTS {
            return Err(ProtocolError::SlotLimit(MAX_SLOTS));
        }
        let senders: Vec<&Station> = stations.iter().filter(|s| s.transmits()).collect();
        let observation = channel.transmit_slot(senders.iter().map(|s| &s.word))?;
        let transmitters: Vec<u64> = senders.iter().map(|s| s.id).collect();
        let feedback = receiver.on_slot(slot, &observation)?;
        if let FeedbackMessage::Resolved { active_set, .. } = &feedback {
            if *active_set != transmitters {
                return Err(ProtocolError::DecodeMismatch {
                    slot,
                    decoded: active_set.clone(),
                    actual: transmitters,
                });
            }
        }
        for st in stations.iter_mut() {
            st.on_feedback(&feedback);
        }
        transcript.push(SlotRecord {
            index: slot,
            group,
            transmitters,
            observation,
            feedback,
        });
    }

    let unresolved: Vec<u64> = stations
        .iter()
        .filter(|s| s.role != Role::Done || !receiver.payloads.contains_key(&s.id))
        .map(|s| s.id)
        .collect();
    if !unresolved.is_empty() {
        return Err(ProtocolError::Unresolved(unresolved));
    }
    Ok(ResolutionResult {
        slots_used: transcript.len(),
        payloads: receiver.payloads,
        transcript,
    })
}

/// Checks that every collision is followed by the complete subtree of its
/// first half and then the complete subtree of its second half.
pub fn audit_transcript(transcript: &[SlotRecord]) -> Result<(), String> {
    let in_subtree = |g: &str, root: &str| g == root || g.starts_with(&format!("{root}."));
    for (i, rec) in transcript.iter().enumerate() {
        if !matches!(rec.feedback, FeedbackMessage::Collision { .. }) {
            continue;
        }
        let first = format!("{}.1", rec.group);
        let second = format!("{}.2", rec.group);
        let mut j = i + 1;
        let start = j;
        while j < transcript.len() && in_subtree(&transcript[j].group, &first) {
            j += 1;
        }
        if j == start {
            return Err(format!(
                "slot {}: collision not followed by {first}",
                rec.index
            ));
        }
        let mid = j;
        while j < transcript.len() && in_subtree(&transcript[j].group, &second) {
            j += 1;
        }
        if j == mid {
            return Err(format!(
                "slot {}: {second} does not follow {first}",
                rec.index
            ));
        }
        if transcript[j..]
            .iter()
            .any(|r| in_subtree(&r.group, &rec.group))
        {
            return Err(format!(
                "slot {}: subtree of {} resumes later",
                rec.index, rec.group
            ));
        }
    }
    Ok(())
}

/// Sample mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let (mut n, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
        for x in samples {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let stderr = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            trials: n,
        }
    }
}

fn fair_coin_ones(rng: &mut ChaCha8Rng, mut n: usize) -> usize {
    let mut ones = 0;
    while n >= 64 {
        ones += rng.next_u64().count_ones() as usize;
        n -= 64;
    }
    if n > 0 {
        ones += (rng.next_u64() & ((1u64 << n) - 1)).count_ones() as usize;
    }
    ones
}

/// Slots used by one contention period of `l` users, abstracting away
/// codebooks and payloads: a group of `j <= k` users costs `max(j, 1)`
/// slots, a larger group costs one slot plus its two random halves.
pub fn sample_slot_count(l: usize, k: usize, rng: &mut ChaCha8Rng) -> u64 {
    let mut pending = vec![l];
    let mut slots = 0u64;
    while let Some(j) = pending.pop() {
        if j <= k {
            slots += j.max(1) as u64;
        } else {
            slots += 1;
            let first = fair_coin_ones(rng, j);
            pending.push(j - first);
            pending.push(first);
        }
    }
    slots
}

pub fn simulate_slot_count(l: usize, k: usize, trials: u64, seed: u64) -> MonteCarloEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MonteCarloEstimate::from_samples((0..trials).map(|_| sample_slot_count(l, k, &mut rng) as f64))
}

/// Independent Bernoulli(`p`) activity for users `1..=M`.
pub fn sample_active_set<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> BTreeSet<u64> {
    (1..=params.m)
        .filter(|_| rng.random_bool(params.p))
        .collect()
}

pub fn random_payload<R: Rng + ?Sized>(rng: &mut R, q: u64, len: usize) -> Vec<u64> {
    (0..len).map(|_| rng.random_range(0..q)).collect()
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// How the active set of a trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    /// Bernoulli(`p`) per user.
    Sampled,
    /// Exactly this many users, uniformly among those holding a signature.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub active: Vec<u64>,
    pub slots_used: usize,
    /// Every recovered payload equals the transmitted one.
    pub zero_error: bool,
    /// The count symbol matched the true number of transmitters in every slot.
    pub counts_exact: bool,
    pub result: Option<ResolutionResult>,
}

/// One seeded end-to-end trial. An empty sampled active set does not start
/// a contention period and uses no slots.
pub fn run_trial(
    params: &SystemParams,
    codebook: &SignatureCodebook,
    activity: Activity,
    trial: u64,
) -> Result<TrialOutcome, ProtocolError> {
    let trial_seed = derive_seed(params.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let active: BTreeSet<u64> = match activity {
        Activity::Sampled => sample_active_set(params, &mut rng),
        Activity::Fixed(l) => {
            let users: Vec<u64> = codebook.users().collect();
            if l > users.len() {
                return Err(ProtocolError::InvalidParams(format!(
                    "cannot activate {l} of {} users",
                    users.len()
                )));
            }
            rand::seq::index::sample(&mut rng, users.len(), l)
                .into_iter()
                .map(|i| users[i])
                .collect()
        }
    };
    let data_len = params.data_len();
    let truth: BTreeMap<u64, Vec<u64>> = active
        .iter()
        .map(|&u| (u, random_payload(&mut rng, params.q, data_len)))
        .collect();
    if truth.is_empty() {
        return Ok(TrialOutcome {
            trial,
            active: Vec::new(),
            slots_used: 0,
            zero_error: true,
            counts_exact: true,
            result: None,
        });
    }
    let contention = SystemParams {
        seed: trial_seed,
        ..params.clone()
    };
    let result = run_contention(&contention, codebook, &truth)?;
    let counts_exact = result
        .transcript
        .iter()
        .all(|r| decode_count(&r.observation.sig_sums) == r.transmitters.len() as u64);
    Ok(TrialOutcome {
        trial,
        active: truth.keys().copied().collect(),
        slots_used: result.slots_used,
        zero_error: result.payloads == truth,
        counts_exact,
        result: Some(result),
    })
}
