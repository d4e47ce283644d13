//! Centralized and collaborative training.
//!
//! In collaborative mode every simulated mining node starts from the same
//! initial parameters. Each round a node computes the gradient of its own
//! mini-batch, the gradients are exchanged all-to-all, and every node applies
//! Adam to the arithmetic mean of the T gradients. Only [`ParamGrads`] (or, in
//! parameter-averaging mode, [`ModelParams`]) cross node boundaries.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::eval::{self, EvalError, MetricsReport};
use crate::imaging::{preprocess_transaction, GreyImage};
use crate::neuralcore::{
    adam_step, backward, init_model, predict, AdamConfig, AdamState, ArchConfig, ModelParams, NeuralError,
    ParamGrads,
};
use crate::rng;
use crate::txcore::{partition_equal, ClassLabel, Dataset};

#[derive(Debug, thiserror::Error)]
pub enum CollabError {
    #[error("training data is empty")]
    EmptyDataset,
    #[error("partition of node {0} is empty")]
    EmptyPartition(usize),
    #[error("record {0} has no label")]
    Unlabeled(usize),
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("gradient shapes differ between nodes")]
    ShapeMismatch,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Centralized,
    Collaborative { nodes: usize },
}

impl TrainMode {
    pub fn node_count(self) -> usize {
        match self {
            TrainMode::Centralized => 1,
            TrainMode::Collaborative { nodes } => nodes,
        }
    }
}

/// What the nodes exchange each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Average the local gradients, then every node takes an Adam step on the mean.
    #[default]
    Gradient,
    /// Every node takes an Adam step on its own gradient, then parameters are averaged.
    Parameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub mode: TrainMode,
    pub with_value: bool,
    pub seed: u64,
    pub adam: AdamConfig,
    pub aggregation: Aggregation,
    /// Test accuracy is logged every this many iterations; 0 disables it.
    pub eval_every: usize,
    /// Compute the per-node gradients on scoped threads.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 1000,
            batch_size: 32,
            mode: TrainMode::Centralized,
            with_value: true,
            seed: 0,
            adam: AdamConfig::default(),
            aggregation: Aggregation::Gradient,
            eval_every: 0,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CollabError> {
        if self.iterations == 0 {
            return Err(CollabError::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(CollabError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.mode.node_count() == 0 {
            return Err(CollabError::InvalidConfig("node count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig::with_value(self.with_value)
    }
}

/// Seed of the mini-batch sampler of node `node_id` (1-based). A centralized
/// run samples like node 1.
pub fn sampler_seed(seed: u64, node_id: usize) -> u64 {
    rng::derive_seed(seed, node_id as u64)
}

/// Seed used to split data across nodes.
pub fn partition_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, 0x7061_7274)
}

/// Epoch-wise shuffled mini-batches. When the batch covers the whole set the
/// samples are used in stored order every iteration.
#[derive(Debug, Clone)]
struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: rng::Rng,
}

impl BatchSampler {
    fn new(len: usize, seed: u64) -> Self {
        BatchSampler {
            order: (0..len).collect(),
            cursor: len,
            rng: rng::seeded(seed),
        }
    }

    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let n = self.order.len();
        if size >= n {
            return (0..n).collect();
        }
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.cursor == n {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            let take = (size - out.len()).min(n - self.cursor);
            out.extend_from_slice(&self.order[self.cursor..self.cursor + take]);
            self.cursor += take;
        }
        out
    }
}

/// Preprocessed images and labels of a dataset.
#[derive(Debug, Clone)]
struct Prepared {
    images: Vec<GreyImage>,
    labels: Vec<ClassLabel>,
}

impl Prepared {
    fn new(d: &Dataset, with_value: bool) -> Result<Self, CollabError> {
        let mut images = Vec::with_capacity(d.len());
        let mut labels = Vec::with_capacity(d.len());
        for (i, tx) in d.transactions.iter().enumerate() {
            labels.push(tx.label.ok_or(CollabError::Unlabeled(i))?);
            images.push(preprocess_transaction(tx, with_value));
        }
        Ok(Prepared { images, labels })
    }

    fn gradient(&self, params: &ModelParams, indices: &[usize]) -> Result<(f64, ParamGrads), NeuralError> {
        let batch: Vec<_> = indices.iter().map(|&i| (&self.images[i], self.labels[i])).collect();
        backward(params, &batch)
    }
}

/// One simulated mining node.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: usize,
    pub params: ModelParams,
    pub adam: AdamState,
    pub local_train: Dataset,
    pub local_test: Dataset,
    train: Prepared,
    sampler: BatchSampler,
}

impl NodeState {
    pub fn new(
        node_id: usize,
        params: ModelParams,
        local_train: Dataset,
        local_test: Dataset,
        cfg: &TrainConfig,
    ) -> Result<Self, CollabError> {
        if local_train.is_empty() {
            return Err(CollabError::EmptyPartition(node_id));
        }
        let train = Prepared::new(&local_train, cfg.with_value)?;
        Ok(NodeState {
            node_id,
            adam: AdamState::new(&params, cfg.adam),
            sampler: BatchSampler::new(local_train.len(), sampler_seed(cfg.seed, node_id)),
            params,
            local_train,
            local_test,
            train,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Mini-batch loss of each node before its update, in node order.
    pub losses: Vec<f64>,
    /// Local test accuracy of each node after the update, when evaluated.
    pub test_accuracy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub entries: Vec<RoundEntry>,
}

impl RoundLog {
    /// `iteration,node,loss,test_accuracy`, one row per node per iteration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,node,loss,test_accuracy\n");
        for e in &self.entries {
            for (k, loss) in e.losses.iter().enumerate() {
                let acc = e
                    .test_accuracy
                    .as_ref()
                    .map(|a| a[k].to_string())
                    .unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{}", e.iteration, k + 1, loss, acc);
            }
        }
        out
    }

    pub fn last_losses(&self) -> Option<&[f64]> {
        self.entries.last().map(|e| e.losses.as_slice())
    }
}

/// Elementwise mean of the node gradients, accumulated in node order as a
/// running mean `m += (g - m) / k` so identical inputs come back unchanged.
pub fn aggregate_grads(grads: &[ParamGrads]) -> Result<ParamGrads, CollabError> {
    let (first, rest) = grads.split_first().ok_or(CollabError::EmptyInput)?;
    if rest.iter().any(|g| !g.same_shapes(first)) {
        return Err(CollabError::ShapeMismatch);
    }
    let mut mean = first.clone();
    for (k, g) in rest.iter().enumerate() {
        let count = (k + 2) as f64;
        for (m, t) in mean.tensors.iter_mut().zip(&g.tensors) {
            for (m, &x) in m.data_mut().iter_mut().zip(t.data()) {
                *m += (x - *m) / count;
            }
        }
    }
    Ok(mean)
}

fn aggregate_params(params: &[&ModelParams]) -> Result<ModelParams, CollabError> {
    let as_grads: Vec<ParamGrads> = params
        .iter()
        .map(|p| ParamGrads {
            tensors: p.tensors.clone(),
        })
        .collect();
    let mean = aggregate_grads(&as_grads)?;
    Ok(ModelParams {
        arch: params[0].arch.clone(),
        tensors: mean.tensors,
    })
}

/// Synchronous collaborative training, one round per [`step`](Self::step).
#[derive(Debug, Clone)]
pub struct CollaborativeTrainer {
    cfg: TrainConfig,
    nodes: Vec<NodeState>,
    iteration: usize,
}

impl CollaborativeTrainer {
    /// One node per training partition; `tests` may be empty or hold one
    /// partition per node.
    pub fn new(partitions: Vec<Dataset>, tests: Vec<Dataset>, cfg: &TrainConfig) -> Result<Self, CollabError> {
        cfg.validate()?;
        if partitions.is_empty() {
            return Err(CollabError::InvalidConfig("node count must be at least 1".into()));
        }
        if !tests.is_empty() && tests.len() != partitions.len() {
            return Err(CollabError::InvalidConfig(format!(
                "{} test partitions for {} nodes",
                tests.len(),
                partitions.len()
            )));
        }
        let init = init_model(&cfg.arch(), cfg.seed)?;
        let mut tests = tests.into_iter();
        let nodes = partitions
            .into_iter()
            .enumerate()
            .map(|(k, train)| {
                let test = tests.next().unwrap_or_default();
                NodeState::new(k + 1, init.clone(), train, test, cfg)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CollaborativeTrainer {
            cfg: cfg.clone(),
            nodes,
            iteration: 0,
        })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<NodeState> {
        self.nodes
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn local_gradients(&mut self) -> Result<Vec<(f64, ParamGrads)>, CollabError> {
        let batch_size = self.cfg.batch_size;
        let batches: Vec<Vec<usize>> = self
            .nodes
            .iter_mut()
            .map(|n| n.sampler.next_batch(batch_size))
            .collect();
        let results: Vec<Result<(f64, ParamGrads), NeuralError>> = if self.cfg.parallel {
            std::thread::scope(|s| {
                let handles: Vec<_> = self
                    .nodes
                    .iter()
                    .zip(&batches)
                    .map(|(n, b)| s.spawn(move || n.train.gradient(&n.params, b)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("gradient worker panicked")).collect()
            })
        } else {
            self.nodes
                .iter()
                .zip(&batches)
                .map(|(n, b)| n.train.gradient(&n.params, b))
                .collect()
        };
        Ok(results.into_iter().collect::<Result<Vec<_>, _>>()?)
    }

    /// Runs one synchronous round and returns its log entry.
    pub fn step(&mut self) -> Result<RoundEntry, CollabError> {
        let local = self.local_gradients()?;
        let (losses, grads): (Vec<f64>, Vec<ParamGrads>) = local.into_iter().unzip();
        match self.cfg.aggregation {
            Aggregation::Gradient => {
                let mean = aggregate_grads(&grads)?;
                for node in &mut self.nodes {
                    adam_step(&mut node.params, &mut node.adam, &mean)?;
                }
            }
            Aggregation::Parameter => {
                for (node, g) in self.nodes.iter_mut().zip(&grads) {
                    adam_step(&mut node.params, &mut node.adam, g)?;
                }
                let mean = aggregate_params(&self.nodes.iter().map(|n| &n.params).collect::<Vec<_>>())?;
                for node in &mut self.nodes {
                    node.params = mean.clone();
                }
            }
        }
        self.iteration += 1;
        let every = self.cfg.eval_every;
        let test_accuracy = if every > 0 && self.iteration % every == 0 {
            Some(
                self.nodes
                    .iter()
                    .map(|n| test_accuracy(n, self.cfg.with_value))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        } else {
            None
        };
        log::debug!("iteration {} losses {:?}", self.iteration, losses);
        Ok(RoundEntry {
            iteration: self.iteration,
            losses,
            test_accuracy,
        })
    }

    pub fn run(&mut self) -> Result<RoundLog, CollabError> {
        let mut log = RoundLog::default();
        while self.iteration < self.cfg.iterations {
            log.entries.push(self.step()?);
        }
        Ok(log)
    }
}

/// Training on a single pooled dataset.
#[derive(Debug, Clone)]
pub struct CentralizedTrainer {
    inner: CollaborativeTrainer,
}

impl CentralizedTrainer {
    pub fn new(train: Dataset, test: Dataset, cfg: &TrainConfig) -> Result<Self, CollabError> {
        if train.is_empty() {
            return Err(CollabError::EmptyDataset);
        }
        let cfg = TrainConfig {
            mode: TrainMode::Centralized,
            ..cfg.clone()
        };
        Ok(CentralizedTrainer {
            inner: CollaborativeTrainer::new(vec![train], vec![test], &cfg)?,
        })
    }

    pub fn node(&self) -> &NodeState {
        &self.inner.nodes[0]
    }

    pub fn into_node(self) -> NodeState {
        self.inner.nodes.into_iter().next().expect("one node")
    }

    pub fn iteration(&self) -> usize {
        self.inner.iteration
    }

    pub fn step(&mut self) -> Result<RoundEntry, CollabError> {
        self.inner.step()
    }

    pub fn run(&mut self) -> Result<RoundLog, CollabError> {
        self.inner.run()
    }
}

pub fn train_centralized(train: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, RoundLog), CollabError> {
    let mut trainer = CentralizedTrainer::new(train.clone(), Dataset::default(), cfg)?;
    let log = trainer.run()?;
    Ok((trainer.into_node().params, log))
}

pub fn train_collaborative(
    partitions: &[Dataset],
    cfg: &TrainConfig,
) -> Result<(Vec<ModelParams>, RoundLog), CollabError> {
    let mut trainer = CollaborativeTrainer::new(partitions.to_vec(), Vec::new(), cfg)?;
    let log = trainer.run()?;
    Ok((trainer.into_nodes().into_iter().map(|n| n.params).collect(), log))
}

/// Result of [`run_training`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub nodes: Vec<NodeState>,
    pub log: RoundLog,
}

/// Splits `train` and `test` across the nodes of `cfg.mode` and trains.
pub fn run_training(train: &Dataset, test: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, CollabError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(CollabError::EmptyDataset);
    }
    let t = cfg.mode.node_count();
    let pseed = partition_seed(cfg.seed);
    let trains = partition_equal(train, t, pseed).expect("node count checked");
    let tests = partition_equal(test, t, pseed ^ 1).expect("node count checked");
    let mut trainer = CollaborativeTrainer::new(trains, tests, cfg)?;
    let log = trainer.run()?;
    Ok(TrainOutcome {
        nodes: trainer.into_nodes(),
        log,
    })
}

/// (true, predicted) for every labelled transaction of `d`.
pub fn predict_dataset(
    model: &ModelParams,
    d: &Dataset,
    with_value: bool,
) -> Result<Vec<(ClassLabel, ClassLabel)>, CollabError> {
    d.transactions
        .iter()
        .enumerate()
        .map(|(i, tx)| {
            let truth = tx.label.ok_or(CollabError::Unlabeled(i))?;
            Ok((truth, predict(model, &preprocess_transaction(tx, with_value))?))
        })
        .collect()
}

/// Metrics of `model` on a labelled dataset.
pub fn evaluate_model(model: &ModelParams, d: &Dataset, with_value: bool) -> Result<MetricsReport, CollabError> {
    if d.is_empty() {
        return Err(CollabError::EmptyDataset);
    }
    let pairs = predict_dataset(model, d, with_value)?;
    Ok(eval::report(&eval::confusion_matrix(pairs))?)
}

/// Metrics of a node's model on its local test partition.
pub fn evaluate_node(node: &NodeState, with_value: bool) -> Result<MetricsReport, CollabError> {
    evaluate_model(&node.params, &node.local_test, with_value)
}

fn test_accuracy(node: &NodeState, with_value: bool) -> Result<f64, CollabError> {
    if node.local_test.is_empty() {
        return Ok(f64::NAN);
    }
    Ok(evaluate_node(node, with_value)?.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralcore::Tensor;
    use crate::txcore::{Transaction, U256};

    fn grads(values: &[f64]) -> ParamGrads {
        ParamGrads {
            tensors: vec![Tensor::new(vec![values.len()], values.to_vec()).unwrap()],
        }
    }

    #[test]
    fn aggregate_examples() {
        let g = grads(&[0.1, -2.5, 3.0]);
        assert_eq!(aggregate_grads(&[g.clone()]).unwrap(), g);
        assert_eq!(
            aggregate_grads(&[grads(&[1.0, 3.0]), grads(&[3.0, 1.0])]).unwrap(),
            grads(&[2.0, 2.0])
        );
        assert_eq!(aggregate_grads(&[g.clone(), g.clone(), g.clone()]).unwrap(), g);
        assert!(matches!(aggregate_grads(&[]), Err(CollabError::EmptyInput)));
        assert!(matches!(
            aggregate_grads(&[grads(&[1.0]), grads(&[1.0, 2.0])]),
            Err(CollabError::ShapeMismatch)
        ));
    }

    #[test]
    fn sampler_covers_each_epoch() {
        let mut s = BatchSampler::new(10, 4);
        let mut seen: Vec<usize> = (0..5).flat_map(|_| s.next_batch(4)).collect();
        assert_eq!(seen.len(), 20);
        seen.truncate(10);
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(BatchSampler::new(3, 1).next_batch(8), vec![0, 1, 2]);
    }

    /// All-zero bytecode images versus all-0xFF ones.
    fn toy(n: usize) -> Dataset {
        let txs = (0..n)
            .map(|i| {
                let (byte, label) = if i % 2 == 0 {
                    (0x00, ClassLabel::Normal)
                } else {
                    (0xFF, ClassLabel::DoS)
                };
                let mut tx = Transaction::new(vec![byte; 1024], U256::ZERO);
                tx.label = Some(label);
                tx
            })
            .collect();
        Dataset::new(txs)
    }

    fn quick_cfg(iterations: usize) -> TrainConfig {
        TrainConfig {
            iterations,
            batch_size: 4,
            with_value: false,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn config_rejections() {
        let d = toy(4);
        assert!(matches!(train_centralized(&d, &quick_cfg(0)), Err(CollabError::InvalidConfig(_))));
        assert!(matches!(
            train_centralized(&Dataset::default(), &quick_cfg(1)),
            Err(CollabError::EmptyDataset)
        ));
        assert!(matches!(
            train_collaborative(&[d.clone(), Dataset::default()], &quick_cfg(1)),
            Err(CollabError::EmptyPartition(2))
        ));
        let mut unlabeled = d.clone();
        unlabeled.transactions[2].label = None;
        assert!(matches!(train_centralized(&unlabeled, &quick_cfg(1)), Err(CollabError::Unlabeled(2))));
    }

    #[test]
    fn one_iteration_is_one_step() {
        let (p, log) = train_centralized(&toy(6), &quick_cfg(1)).unwrap();
        assert_eq!(log.entries.len(), 1);
        assert_ne!(p, init_model(&quick_cfg(1).arch(), 11).unwrap());
        let mut t = CentralizedTrainer::new(toy(6), Dataset::default(), &quick_cfg(1)).unwrap();
        t.step().unwrap();
        assert_eq!(t.node().adam.step, 1);
        assert_eq!(t.node().params, p);
    }

    #[test]
    fn deterministic_runs() {
        let a = train_centralized(&toy(10), &quick_cfg(5)).unwrap();
        let b = train_centralized(&toy(10), &quick_cfg(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let d = toy(16);
        let (p, _) = train_centralized(&d, &quick_cfg(200)).unwrap();
        let r = evaluate_model(&p, &d, false).unwrap();
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn nodes_stay_identical() {
        let parts = partition_equal(&toy(12), 3, 5).unwrap();
        let mut t = CollaborativeTrainer::new(parts, Vec::new(), &quick_cfg(3)).unwrap();
        for _ in 0..3 {
            t.step().unwrap();
            let first = &t.nodes()[0].params;
            assert!(t.nodes().iter().all(|n| n.params == *first));
        }
    }

    #[test]
    fn single_node_matches_centralized() {
        let d = toy(10);
        let (c, clog) = train_centralized(&d, &quick_cfg(6)).unwrap();
        let (n, nlog) = train_collaborative(&[d], &quick_cfg(6)).unwrap();
        assert_eq!(n, vec![c]);
        assert_eq!(nlog, clog);
    }

    #[test]
    fn parallel_matches_serial() {
        let parts = partition_equal(&toy(12), 3, 5).unwrap();
        let serial = train_collaborative(&parts, &quick_cfg(3)).unwrap();
        let cfg = TrainConfig {
            parallel: true,
            ..quick_cfg(3)
        };
        assert_eq!(train_collaborative(&parts, &cfg).unwrap(), serial);
    }

    #[test]
    fn parameter_averaging_keeps_nodes_in_sync() {
        let parts = partition_equal(&toy(12), 3, 5).unwrap();
        let cfg = TrainConfig {
            aggregation: Aggregation::Parameter,
            ..quick_cfg(4)
        };
        let (models, _) = train_collaborative(&parts, &cfg).unwrap();
        assert!(models.iter().all(|m| *m == models[0]));
    }

    #[test]
    fn round_log_csv() {
        let parts = partition_equal(&toy(12), 2, 5).unwrap();
        let tests = partition_equal(&toy(4), 2, 6).unwrap();
        let cfg = TrainConfig {
            eval_every: 2,
            mode: TrainMode::Collaborative { nodes: 2 },
            ..quick_cfg(2)
        };
        let mut t = CollaborativeTrainer::new(parts, tests, &cfg).unwrap();
        let log = t.run().unwrap();
        let csv = log.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iteration,node,loss,test_accuracy");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,1,") && lines[1].ends_with(','));
        assert!(lines[4].starts_with("2,2,") && !lines[4].ends_with(','));
    }

    #[test]
    fn constant_normal_predictor() {
        let mut p = init_model(&ArchConfig::with_value(true), 0).unwrap();
        let n = p.tensors.len();
        p.tensors[n - 2].data_mut().fill(0.0);
        p.tensors[n - 1].data_mut()[0] = 10.0;
        let spec = crate::datagen::GenSpec {
            total: 10_000,
            seed: 3,
            ..Default::default()
        };
        let d = crate::datagen::generate_dataset(&spec).unwrap();
        let r = evaluate_model(&p, &d, true).unwrap();
        assert!((r.accuracy - 0.5034).abs() < 1e-12);
        assert_eq!(r.class(ClassLabel::Normal).recall, 1.0);
    }

    #[test]
    fn node_metrics_match_eval_module() {
        let parts = partition_equal(&toy(8), 2, 1).unwrap();
        let tests = partition_equal(&toy(6), 2, 2).unwrap();
        let mut t = CollaborativeTrainer::new(parts, tests, &quick_cfg(2)).unwrap();
        t.run().unwrap();
        let node = &t.nodes()[1];
        let r = evaluate_node(node, false).unwrap();
        let pairs = predict_dataset(&node.params, &node.local_test, false).unwrap();
        let correct = pairs.iter().filter(|(a, b)| a == b).count();
        assert_eq!(r.accuracy, correct as f64 / pairs.len() as f64);
        assert_eq!(r.sample_count, 3);
    }
}
