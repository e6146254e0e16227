//! Q-Learning decision making: epsilon-greedy action selection, Bellman
//! targets, per-UAV replay memories, and the two controller topologies
//! (one shared network, or one network per UAV).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gridworld::Action;
use crate::neural::{
    HeadMode, NeuralError, QNetwork, RmsPropConfig, RmsPropState, TrainExample, OUTPUT_DIM,
};

/// Replay memory capacity: the 60 most recent own-actions per UAV.
pub const DEFAULT_MEMORY_CAPACITY: usize = 60;

/// Default minibatch size for one learn call.
pub const DEFAULT_MINIBATCH: usize = 16;

/// One environment interaction from a single UAV's point of view.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity FIFO of transitions. Each UAV owns one; teammates' actions
/// are never stored in it.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    entries: std::collections::VecDeque<Transition>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay capacity must be at least 1");
        Self { entries: std::collections::VecDeque::with_capacity(capacity), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends a transition, evicting the oldest entry once full.
    pub fn record(&mut self, t: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(t);
    }

    /// Entries oldest-first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.entries.get(i)
    }
}

/// Exploration schedule: `eps(k) = max(floor, initial * factor^k)` where `k`
/// counts completed episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConfig {
    pub initial: f64,
    pub factor: f64,
    pub floor: f64,
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        Self { initial: 0.47, factor: 0.93, floor: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    config: EpsilonConfig,
    episode: u32,
}

impl EpsilonSchedule {
    pub fn new(config: EpsilonConfig) -> Self {
        Self { config, episode: 0 }
    }

    pub fn episode(&self) -> u32 {
        self.episode
    }

    /// Epsilon for the current episode, from the closed form.
    pub fn current(&self) -> f64 {
        self.value_at(self.episode)
    }

    pub fn value_at(&self, k: u32) -> f64 {
        let c = self.config;
        (c.initial * c.factor.powi(k as i32)).max(c.floor)
    }

    /// Advances to the next episode and returns its epsilon.
    pub fn decay(&mut self) -> f64 {
        self.episode += 1;
        self.current()
    }
}

/// Controller topology: one network shared by the whole swarm, or one
/// independent network per UAV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerMode {
    Global,
    PerUav,
}

impl std::fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControllerMode::Global => f.write_str("global"),
            ControllerMode::PerUav => f.write_str("per-uav"),
        }
    }
}

/// Everything the controller needs besides the map: topology, discounting,
/// network shape, optimizer, and replay settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub mode: ControllerMode,
    pub gamma: f64,
    pub minibatch_size: usize,
    pub head_mode: HeadMode,
    pub hidden_dim: usize,
    pub memory_capacity: usize,
    pub optimizer: RmsPropConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            mode: ControllerMode::Global,
            gamma: 0.91,
            minibatch_size: DEFAULT_MINIBATCH,
            head_mode: HeadMode::Linear,
            hidden_dim: 167,
            memory_capacity: DEFAULT_MEMORY_CAPACITY,
            optimizer: RmsPropConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearnError {
    EmptyMemory { uav: usize },
    Neural(NeuralError),
}

impl std::fmt::Display for LearnError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::EmptyMemory { uav } => write!(f, "UAV {uav} has an empty replay memory"),
            Self::Neural(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LearnError {}

impl From<NeuralError> for LearnError {
    fn from(e: NeuralError) -> Self {
        LearnError::Neural(e)
    }
}

/// Epsilon-greedy selection over the network's Q-values. With probability
/// `epsilon` a uniform action; otherwise the argmax, ties broken toward the
/// lowest action index.
pub fn select_action<R: Rng>(
    net: &QNetwork,
    obs: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<Action, NeuralError> {
    // One uniform draw regardless of epsilon keeps the random stream layout
    // identical across schedules.
    let explore: f64 = rng.gen();
    if explore < epsilon {
        let i = rng.gen_range(0..Action::COUNT);
        return Ok(Action::from_index(i).expect("index in range"));
    }
    let q = net.forward(obs)?;
    Ok(greedy_action(&q))
}

/// Argmax with lowest-index tie breaking.
pub fn greedy_action(q: &[f64; OUTPUT_DIM]) -> Action {
    let mut best = 0;
    for i in 1..OUTPUT_DIM {
        if q[i] > q[best] {
            best = i;
        }
    }
    Action::from_index(best).expect("index in range")
}

/// Bellman regression target: `r + gamma * max(next_q)`, or `r` alone on a
/// terminal transition.
pub fn q_target(reward: f64, next_q: &[f64; OUTPUT_DIM], terminal: bool, gamma: f64) -> f64 {
    if terminal {
        return reward;
    }
    let max_next = next_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    reward + gamma * max_next
}

/// Uniform sample of `amount` distinct indices from `0..len` via a partial
/// Fisher-Yates shuffle; deterministic given the rng.
fn sample_indices<R: Rng>(len: usize, amount: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(amount <= len);
    let mut pool: Vec<usize> = (0..len).collect();
    for i in 0..amount {
        let j = rng.gen_range(i..len);
        pool.swap(i, j);
    }
    pool.truncate(amount);
    pool
}

/// The swarm's decision maker: networks, optimizer states, and one replay
/// memory per UAV.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControllerConfig,
    uav_count: usize,
    networks: Vec<QNetwork>,
    optimizers: Vec<RmsPropState>,
    memories: Vec<ReplayMemory>,
}

impl Controller {
    /// Builds the networks for the configured topology. In per-UAV mode the
    /// networks are initialized sequentially from the same rng, so they
    /// start from different weights.
    pub fn new<R: Rng>(
        config: ControllerConfig,
        uav_count: usize,
        input_dim: usize,
        rng: &mut R,
    ) -> Self {
        assert!(uav_count >= 1, "need at least one UAV");
        let net_count = match config.mode {
            ControllerMode::Global => 1,
            ControllerMode::PerUav => uav_count,
        };
        let networks: Vec<QNetwork> = (0..net_count)
            .map(|_| QNetwork::init(input_dim, config.hidden_dim, config.head_mode, rng))
            .collect();
        let optimizers = networks
            .iter()
            .map(|n| RmsPropState::for_network(n, config.optimizer))
            .collect();
        let memories = (0..uav_count)
            .map(|_| ReplayMemory::new(config.memory_capacity))
            .collect();
        Self { config, uav_count, networks, optimizers, memories }
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn uav_count(&self) -> usize {
        self.uav_count
    }

    pub fn networks(&self) -> &[QNetwork] {
        &self.networks
    }

    pub fn memory(&self, uav: usize) -> &ReplayMemory {
        &self.memories[uav]
    }

    fn network_index(&self, uav: usize) -> usize {
        match self.config.mode {
            ControllerMode::Global => 0,
            ControllerMode::PerUav => uav,
        }
    }

    pub fn network_for(&self, uav: usize) -> &QNetwork {
        &self.networks[self.network_index(uav)]
    }

    pub fn select_action<R: Rng>(
        &self,
        uav: usize,
        obs: &[f64],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Action, NeuralError> {
        select_action(self.network_for(uav), obs, epsilon, rng)
    }

    /// Stores a transition in the acting UAV's own memory.
    pub fn record(&mut self, uav: usize, transition: Transition) {
        self.memories[uav].record(transition);
    }

    /// One training step for the network that owns `uav`: a uniform
    /// minibatch without replacement from that UAV's memory, Bellman targets
    /// from the current network, one RMSprop step. Returns the pre-update
    /// loss.
    pub fn learn<R: Rng>(&mut self, uav: usize, rng: &mut R) -> Result<f64, LearnError> {
        let memory = &self.memories[uav];
        if memory.is_empty() {
            return Err(LearnError::EmptyMemory { uav });
        }
        let batch_size = self.config.minibatch_size.min(memory.len());
        let indices = sample_indices(memory.len(), batch_size, rng);
        let net_idx = self.network_index(uav);
        let net = &self.networks[net_idx];
        let mut targets = Vec::with_capacity(indices.len());
        for &i in &indices {
            let t = memory.get(i).expect("sampled index in range");
            let next_q = net.forward(&t.next_observation)?;
            targets.push(q_target(t.reward, &next_q, t.terminal, self.config.gamma));
        }
        let batch: Vec<TrainExample<'_>> = indices
            .iter()
            .zip(&targets)
            .map(|(&i, &target)| {
                let t = memory.get(i).expect("sampled index in range");
                TrainExample { input: &t.observation, action: t.action.index(), target }
            })
            .collect();
        let loss = self.networks[net_idx].train_step(&mut self.optimizers[net_idx], &batch)?;
        Ok(loss)
    }
}
