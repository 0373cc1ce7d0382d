//! The four IDS variants: centralized (C), local-only (L), federated (FL)
//! and few-shot federated (FSFL).
//!
//! Raw samples are owned by [`Client`] values and never handed to the
//! [`Server`] in the federated variants; the server only sees weight vectors.
//! The centralized variant is the one path that ships samples to the server,
//! and every such transfer is counted by [`Server::sample_reads`].

use std::fmt;
use std::str::FromStr;

use fanet_sim::dataset::{k_shot, split_train_test, UavData};
use fanet_sim::{seed, NodeId, Sample};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::error::{shape, IdsError};
use crate::eval::{mean_metrics, Confusion, Metrics};
use crate::nn::{Arch, HeadKind, ModelKind, Network};
use crate::scaler::Scaler;
use crate::train::{pairwise_classify, TrainConfig, Trainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "C")]
    Centralized,
    #[serde(rename = "L")]
    Local,
    #[serde(rename = "FL")]
    Federated,
    #[serde(rename = "FSFL")]
    FewShotFederated,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Centralized, Variant::Local, Variant::Federated, Variant::FewShotFederated];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Centralized => "C",
            Variant::Local => "L",
            Variant::Federated => "FL",
            Variant::FewShotFederated => "FSFL",
        }
    }

    /// Rounds (or epochs for C and L) when the plan does not set them.
    pub fn default_rounds(self) -> usize {
        match self {
            Variant::FewShotFederated => 10,
            _ => 100,
        }
    }

    pub fn is_federated(self) -> bool {
        matches!(self, Variant::Federated | Variant::FewShotFederated)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "C" | "C-IDS" => Ok(Variant::Centralized),
            "L" | "L-IDS" => Ok(Variant::Local),
            "FL" | "FL-IDS" => Ok(Variant::Federated),
            "FSFL" | "FSFL-IDS" => Ok(Variant::FewShotFederated),
            other => Err(format!("unknown IDS variant '{other}'")),
        }
    }
}

/// Where the federated global model is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Counts from every client's test split are summed at the ground station.
    #[default]
    Pooled,
    /// Per-client metrics averaged.
    PerClient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub variant: Variant,
    pub model: ModelKind,
    #[serde(default)]
    pub head: HeadKind,
    /// Per-class shots kept per UAV; `None` keeps everything supplied.
    #[serde(default)]
    pub shots: Option<usize>,
    /// Communication rounds (FL, FSFL) or epochs (C, L).
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default = "one")]
    pub local_epochs: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "train_frac")]
    pub train_frac: f64,
    #[serde(default)]
    pub eval: EvalMode,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn train_frac() -> f64 {
    0.8
}

impl ExperimentPlan {
    pub fn new(variant: Variant, model: ModelKind) -> Self {
        Self {
            variant,
            model,
            head: HeadKind::Classifier,
            shots: None,
            rounds: None,
            local_epochs: 1,
            train: TrainConfig::default(),
            train_frac: 0.8,
            eval: EvalMode::Pooled,
            seed: 0,
        }
    }

    pub fn arch(&self) -> Arch {
        Arch::new(self.model, self.head)
    }

    pub fn rounds(&self) -> usize {
        self.rounds.unwrap_or(self.variant.default_rounds())
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.shots == Some(0) {
            v.push("shots must be at least 1".into());
        }
        if self.local_epochs == 0 {
            v.push("local_epochs must be at least 1".into());
        }
        if self.train.batch_size == 0 {
            v.push("batch_size must be at least 1".into());
        }
        if !(self.train.learning_rate > 0.0 && self.train.learning_rate.is_finite()) {
            v.push(format!("learning_rate {} must be positive", self.train.learning_rate));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            v.push(format!("train_frac {} must lie in (0, 1)", self.train_frac));
        }
        v
    }

    pub fn validate(&self) -> Result<(), IdsError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(IdsError::InvalidPlan(v))
        }
    }

    fn init_network(&self) -> Network {
        Network::init(self.arch(), &mut seed::rng(seed::derive(self.seed, "init")))
    }

    fn trainer_rng(&self, slot: usize) -> ChaCha8Rng {
        seed::rng(seed::derive_indexed(self.seed, "trainer", slot as u64))
    }
}

/// Weighted element-wise mean, accumulated in client order.
pub fn fedavg(weights: &[&[f64]], counts: &[usize]) -> Result<Vec<f64>, IdsError> {
    let first = weights.first().ok_or_else(|| IdsError::Empty("no client weights".into()))?;
    if counts.len() != weights.len() {
        return Err(shape(format!("{} counts", weights.len()), counts.len()));
    }
    if counts.contains(&0) {
        return Err(IdsError::Empty("client with zero samples".into()));
    }
    let total: usize = counts.iter().sum();
    let mut out = vec![0.0; first.len()];
    for (w, &n) in weights.iter().zip(counts) {
        if w.len() != out.len() {
            return Err(shape(out.len(), w.len()));
        }
        let share = n as f64 / total as f64;
        for (o, x) in out.iter_mut().zip(w.iter()) {
            *o += share * x;
        }
    }
    Ok(out)
}

/// One UAV: private data, local scaler, local optimizer.
#[derive(Debug, Clone)]
pub struct Client {
    uav_id: NodeId,
    train: LabeledSet,
    test: LabeledSet,
    raw_train: Vec<Sample>,
    raw_test: Vec<Sample>,
    scaler: Scaler,
    trainer: Trainer,
    losses: Vec<f64>,
}

impl Client {
    pub fn uav_id(&self) -> NodeId {
        self.uav_id
    }

    pub fn train_len(&self) -> usize {
        self.train.len()
    }

    pub fn test_len(&self) -> usize {
        self.test.len()
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn weights(&self) -> &[f64] {
        self.trainer.net.params()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Install received global weights; optimizer state is kept.
    pub fn receive(&mut self, global: &[f64]) -> Result<(), IdsError> {
        self.trainer.net.set_params(global)
    }

    pub fn train_local(&mut self, epochs: usize) -> Result<f64, IdsError> {
        let mut last = 0.0;
        for _ in 0..epochs {
            last = self.trainer.train_epoch(&self.train)?;
            self.losses.push(last);
        }
        Ok(last)
    }

    /// Score `net` on this client's test split, scaled locally.
    pub fn evaluate(&self, net: &Network) -> Result<Confusion, IdsError> {
        decide(net, &self.train, &self.test)
    }
}

fn decide(net: &Network, support: &LabeledSet, test: &LabeledSet) -> Result<Confusion, IdsError> {
    let decisions = match net.arch().head {
        HeadKind::Classifier => net.predict(&test.x)?.into_iter().map(|p| p >= crate::eval::THRESHOLD).collect(),
        HeadKind::Pairwise => test
            .x
            .iter_rows()
            .map(|r| pairwise_classify(net, support, r))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(Confusion::from_decisions(&decisions, &test.y))
}

/// The aggregation server at the ground station.
#[derive(Debug, Clone)]
pub struct Server {
    global: Network,
    round: usize,
    sample_reads: usize,
}

impl Server {
    pub fn new(global: Network) -> Self {
        Self { global, round: 0, sample_reads: 0 }
    }

    pub fn global(&self) -> &Network {
        &self.global
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Raw samples the server has been handed so far.
    pub fn sample_reads(&self) -> usize {
        self.sample_reads
    }

    pub fn aggregate(&mut self, updates: &[(&[f64], usize)]) -> Result<(), IdsError> {
        let (w, n): (Vec<&[f64]>, Vec<usize>) = updates.iter().copied().unzip();
        let avg = fedavg(&w, &n)?;
        self.global.set_params(&avg)?;
        self.round += 1;
        Ok(())
    }

    /// Take custody of raw samples. Only the centralized variant calls this.
    pub fn ingest(&mut self, samples: &[Sample]) -> Vec<Sample> {
        self.sample_reads += samples.len();
        samples.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    /// `(uav_id, last local loss)` per participating client.
    pub losses: Vec<(NodeId, f64)>,
    /// Weight transfers: one down and one up per participating client.
    pub messages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientResult {
    pub uav_id: NodeId,
    pub confusion: Confusion,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub plan: ExperimentPlan,
    /// Summed over every evaluated test row.
    pub confusion: Confusion,
    /// Pooled for C, FL and FSFL (unless per-client evaluation is chosen);
    /// the mean of client metrics for L.
    pub metrics: Metrics,
    pub per_client: Vec<ClientResult>,
    /// Clients dropped for lacking data, with the reason.
    pub excluded: Vec<(NodeId, String)>,
    pub rounds: Vec<RoundLog>,
    /// Aggregations performed by the server.
    pub aggregations: usize,
    pub weight_count: usize,
    pub participants: usize,
    pub train_rows: usize,
    pub server_sample_reads: usize,
    /// Final global weights (federated) or the centralized model.
    #[serde(skip)]
    pub weights: Vec<f64>,
}

/// Build clients from per-UAV datasets. UAVs whose data cannot be split are
/// excluded and reported.
pub fn prepare_clients(plan: &ExperimentPlan, uavs: &[UavData]) -> Result<(Vec<Client>, Vec<(NodeId, String)>), IdsError> {
    plan.validate()?;
    let init = plan.init_network();
    let mut clients = Vec::new();
    let mut excluded = Vec::new();
    for (slot, uav) in uavs.iter().enumerate() {
        let subset;
        let data = match plan.shots {
            Some(k) if k < uav.per_class() || k < uav.malicious.len() => {
                subset = k_shot(uav, k, plan.seed)?;
                &subset
            }
            _ => uav,
        };
        let (raw_train, raw_test) = match split_train_test(data, plan.train_frac, plan.seed) {
            Ok(s) => s,
            Err(e) => {
                excluded.push((uav.node_id, e.to_string()));
                continue;
            }
        };
        let train = LabeledSet::from_samples(&raw_train);
        let test = LabeledSet::from_samples(&raw_test);
        let scaler = Scaler::fit(&train.x)?;
        let train = LabeledSet::new(scaler.transform(&train.x)?, train.y)?;
        let test = LabeledSet::new(scaler.transform(&test.x)?, test.y)?;
        let trainer = Trainer::new(init.clone(), plan.trainer_rng(slot), plan.train);
        clients.push(Client { uav_id: uav.node_id, train, test, raw_train, raw_test, scaler, trainer, losses: Vec::new() });
    }
    if clients.is_empty() {
        return Err(IdsError::Empty("no client has usable data".into()));
    }
    Ok((clients, excluded))
}

fn per_client(clients: &[Client], net: impl Fn(&Client) -> Network + Sync) -> Result<Vec<ClientResult>, IdsError> {
    clients
        .par_iter()
        .map(|c| {
            let confusion = c.evaluate(&net(c))?;
            Ok(ClientResult { uav_id: c.uav_id, confusion, metrics: confusion.metrics()? })
        })
        .collect()
}

fn pooled(results: &[ClientResult]) -> Confusion {
    results.iter().fold(Confusion::default(), |a, r| a + r.confusion)
}

fn report(
    plan: &ExperimentPlan,
    results: Vec<ClientResult>,
    excluded: Vec<(NodeId, String)>,
    rounds: Vec<RoundLog>,
    server: &Server,
    train_rows: usize,
    mean_of_clients: bool,
) -> Result<MetricsReport, IdsError> {
    let confusion = pooled(&results);
    let metrics = if mean_of_clients {
        mean_metrics(&results.iter().map(|r| r.metrics).collect::<Vec<_>>()).expect("at least one client")
    } else {
        confusion.metrics()?
    };
    Ok(MetricsReport {
        plan: plan.clone(),
        confusion,
        metrics,
        participants: results.len(),
        per_client: results,
        excluded,
        rounds,
        aggregations: server.round(),
        weight_count: plan.arch().param_count(),
        train_rows,
        server_sample_reads: server.sample_reads(),
        weights: server.global().params().to_vec(),
    })
}

/// One federated round: broadcast, local training, FedAvg.
pub fn run_round(server: &mut Server, clients: &mut [Client], local_epochs: usize) -> Result<RoundLog, IdsError> {
    let global = server.global().params().to_vec();
    let losses = clients
        .par_iter_mut()
        .map(|c| {
            c.receive(&global)?;
            Ok((c.uav_id, c.train_local(local_epochs)?))
        })
        .collect::<Result<Vec<_>, IdsError>>()?;
    let updates: Vec<(&[f64], usize)> = clients.iter().map(|c| (c.weights(), c.train_len())).collect();
    server.aggregate(&updates)?;
    Ok(RoundLog { round: server.round(), messages: 2 * clients.len(), losses })
}

/// FL and FSFL: `rounds` rounds over every client, then evaluation of the
/// final global model on the clients' test splits.
pub fn run_federated(plan: &ExperimentPlan, uavs: &[UavData]) -> Result<MetricsReport, IdsError> {
    let (mut clients, excluded) = prepare_clients(plan, uavs)?;
    let mut server = Server::new(plan.init_network());
    let mut logs = Vec::with_capacity(plan.rounds());
    for _ in 0..plan.rounds() {
        logs.push(run_round(&mut server, &mut clients, plan.local_epochs)?);
    }
    let global = server.global().clone();
    let results = per_client(&clients, |_| global.clone())?;
    let train_rows = clients.iter().map(Client::train_len).sum();
    report(plan, results, excluded, logs, &server, train_rows, plan.eval == EvalMode::PerClient)
}

/// L-IDS: every client trains and is scored alone; metrics are client means.
pub fn run_local(plan: &ExperimentPlan, uavs: &[UavData]) -> Result<MetricsReport, IdsError> {
    let (mut clients, excluded) = prepare_clients(plan, uavs)?;
    let epochs = plan.rounds();
    clients.par_iter_mut().try_for_each(|c| c.train_local(epochs).map(|_| ()))?;
    let results = per_client(&clients, |c| c.trainer.net.clone())?;
    let server = Server::new(plan.init_network());
    let train_rows = clients.iter().map(Client::train_len).max().unwrap_or(0);
    let mut r = report(plan, results, excluded, Vec::new(), &server, train_rows, true)?;
    r.weights = clients[0].weights().to_vec();
    Ok(r)
}

/// C-IDS: every client's raw splits are shipped to the server, which fits one
/// scaler and one model on the pooled training rows.
pub fn run_centralized(plan: &ExperimentPlan, uavs: &[UavData]) -> Result<MetricsReport, IdsError> {
    let (clients, excluded) = prepare_clients(plan, uavs)?;
    let mut server = Server::new(plan.init_network());
    let mut train_raw = Vec::new();
    let mut tests = Vec::new();
    for c in &clients {
        train_raw.extend(server.ingest(&c.raw_train));
        tests.push((c.uav_id, server.ingest(&c.raw_test)));
    }
    let pooled_train = LabeledSet::from_samples(&train_raw);
    let scaler = Scaler::fit(&pooled_train.x)?;
    let train = LabeledSet::new(scaler.transform(&pooled_train.x)?, pooled_train.y)?;
    let mut trainer = Trainer::new(server.global().clone(), plan.trainer_rng(0), plan.train);
    trainer.train_epochs(&train, plan.rounds())?;
    let net = trainer.net;
    let results = tests
        .iter()
        .map(|(id, raw)| {
            let t = LabeledSet::from_samples(raw);
            let t = LabeledSet::new(scaler.transform(&t.x)?, t.y)?;
            let confusion = decide(&net, &train, &t)?;
            Ok(ClientResult { uav_id: *id, confusion, metrics: confusion.metrics()? })
        })
        .collect::<Result<Vec<_>, IdsError>>()?;
    server.global = net;
    report(plan, results, excluded, Vec::new(), &server, train.len(), false)
}

/// Dispatch on the plan's variant.
pub fn run_plan(plan: &ExperimentPlan, uavs: &[UavData]) -> Result<MetricsReport, IdsError> {
    match plan.variant {
        Variant::Centralized => run_centralized(plan, uavs),
        Variant::Local => run_local(plan, uavs),
        Variant::Federated | Variant::FewShotFederated => run_federated(plan, uavs),
    }
}
