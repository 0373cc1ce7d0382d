//! Hyperband: random configurations run through successive halving in
//! brackets of decreasing aggressiveness.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::IdsError;

/// One searchable knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Range {
    LogUniform { low: f64, high: f64 },
    Uniform { low: f64, high: f64 },
    Choice { values: Vec<f64> },
}

impl Range {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Range::LogUniform { low, high } => (low.ln() + rng.random::<f64>() * (high.ln() - low.ln())).exp().clamp(*low, *high),
            Range::Uniform { low, high } => low + rng.random::<f64>() * (high - low),
            Range::Choice { values } => values[rng.random_range(0..values.len())],
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Range::LogUniform { low, high } | Range::Uniform { low, high } => *low <= x && x <= *high,
            Range::Choice { values } => values.contains(&x),
        }
    }

    fn problem(&self) -> Option<String> {
        match self {
            Range::LogUniform { low, high } if !(*low > 0.0 && low < high) => Some(format!("log range [{low}, {high}]")),
            Range::Uniform { low, high } if !(low.is_finite() && high.is_finite() && low <= high) => {
                Some(format!("range [{low}, {high}]"))
            }
            Range::Choice { values } if values.is_empty() => Some("empty choice".into()),
            _ => None,
        }
    }
}

/// Named ranges, sampled in name order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchSpace(pub BTreeMap<String, Range>);

pub type Config = BTreeMap<String, f64>;

impl Default for SearchSpace {
    /// Learning rate only.
    fn default() -> Self {
        Self(BTreeMap::from([("learning_rate".to_string(), Range::LogUniform { low: 0.001, high: 0.01 })]))
    }
}

impl SearchSpace {
    pub fn sample(&self, rng: &mut impl Rng) -> Config {
        self.0.iter().map(|(k, r)| (k.clone(), r.sample(rng))).collect()
    }

    pub fn contains(&self, c: &Config) -> bool {
        self.0.iter().all(|(k, r)| c.get(k).is_some_and(|&x| r.contains(x)))
    }

    pub fn validate(&self) -> Result<(), IdsError> {
        let v: Vec<String> = self.0.iter().filter_map(|(k, r)| r.problem().map(|p| format!("{k}: {p}"))).collect();
        if self.0.is_empty() {
            return Err(IdsError::InvalidPlan(vec!["search space is empty".into()]));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(IdsError::InvalidPlan(v))
        }
    }
}

/// One rung of one bracket: `configs` evaluated at `resource` each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub configs: usize,
    pub resource: f64,
}

/// `floor(log_eta(r))` in integer arithmetic.
pub fn s_max(max_resource: u64, eta: u64) -> u32 {
    let mut s = 0;
    let mut p = eta;
    while p <= max_resource {
        s += 1;
        p = match p.checked_mul(eta) {
            Some(v) => v,
            None => break,
        };
    }
    s
}

/// The full schedule, bracket `s = s_max` first.
pub fn schedule(max_resource: u64, eta: u64) -> Vec<Vec<Rung>> {
    let sm = s_max(max_resource, eta);
    let budget = (sm as u64 + 1) * max_resource;
    (0..=sm)
        .rev()
        .map(|s| {
            let es = eta.pow(s);
            // n = ceil(B / R * eta^s / (s + 1))
            let n = (budget * es).div_ceil(max_resource * (s as u64 + 1));
            (0..=s)
                .map(|i| Rung {
                    configs: (n / eta.pow(i)) as usize,
                    resource: max_resource as f64 / eta.pow(s - i) as f64,
                })
                .collect()
        })
        .collect()
}

/// Closed-form resource total of a schedule.
pub fn schedule_budget(max_resource: u64, eta: u64) -> f64 {
    schedule(max_resource, eta).iter().flatten().map(|r| r.configs as f64 * r.resource).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub bracket: u32,
    pub rung: u32,
    /// Index of the config in sample order across the whole run.
    pub config_id: usize,
    pub config: Config,
    pub resource: f64,
    /// `None` when the objective returned a non-finite value.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ledger {
    pub trials: Vec<Trial>,
}

impl Ledger {
    pub fn resource_spent(&self) -> f64 {
        self.trials.iter().map(|t| t.resource).sum()
    }

    /// Best scored trial at `resource`; ties keep the earliest.
    pub fn best_at(&self, resource: f64) -> Option<&Trial> {
        self.trials
            .iter()
            .filter(|t| t.resource == resource && t.score.is_some())
            .fold(None, |best: Option<&Trial>, t| match best {
                Some(b) if b.score >= t.score => Some(b),
                _ => Some(t),
            })
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W, space: &SearchSpace) -> std::io::Result<()> {
        let keys: Vec<&String> = space.0.keys().collect();
        let mut header = vec!["bracket".to_string(), "rung".into(), "config_id".into()];
        header.extend(keys.iter().map(|k| k.to_string()));
        header.extend(["resource".into(), "score".into()]);
        writeln!(w, "{}", header.join(","))?;
        for t in &self.trials {
            let mut row = vec![t.bracket.to_string(), t.rung.to_string(), t.config_id.to_string()];
            row.extend(keys.iter().map(|k| t.config.get(*k).map_or(String::new(), |v| v.to_string())));
            row.push(t.resource.to_string());
            row.push(t.score.map_or("nan".into(), |s| s.to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Successive halving of `configs` (with global ids) over `rungs`. At each
/// rung every survivor is evaluated and the best `floor(n / eta)` advance.
/// Non-finite scores never advance. Returns the trials in evaluation order.
pub fn successive_halving<F>(
    configs: &[(usize, Config)],
    rungs: &[Rung],
    eta: u64,
    bracket: u32,
    objective: &mut F,
) -> Vec<Trial>
where
    F: FnMut(&Config, f64) -> f64,
{
    let mut alive: Vec<&(usize, Config)> = configs.iter().collect();
    let mut trials = Vec::new();
    for (r, rung) in rungs.iter().enumerate() {
        let mut scored: Vec<(Option<f64>, &(usize, Config))> = alive
            .iter()
            .map(|c| {
                let s = objective(&c.1, rung.resource);
                let score = s.is_finite().then_some(s);
                trials.push(Trial {
                    bracket,
                    rung: r as u32,
                    config_id: c.0,
                    config: c.1.clone(),
                    resource: rung.resource,
                    score,
                });
                (score, *c)
            })
            .collect();
        if r + 1 == rungs.len() {
            break;
        }
        let keep = (alive.len() as u64 / eta) as usize;
        // stable sort keeps sample order among ties
        scored.sort_by(|a, b| b.0.unwrap_or(f64::NEG_INFINITY).total_cmp(&a.0.unwrap_or(f64::NEG_INFINITY)));
        alive = scored.into_iter().filter(|(s, _)| s.is_some()).take(keep.max(1)).map(|(_, c)| c).collect();
        alive.sort_by_key(|c| c.0);
    }
    trials
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbandResult {
    pub best: Option<Trial>,
    pub ledger: Ledger,
}

/// Run every bracket of the schedule. Configs are sampled bracket by
/// bracket from `rng`; the best trial at the full resource wins.
pub fn run_hyperband<F>(
    space: &SearchSpace,
    max_resource: u64,
    eta: u64,
    rng: &mut impl Rng,
    mut objective: F,
) -> Result<HyperbandResult, IdsError>
where
    F: FnMut(&Config, f64) -> f64,
{
    space.validate()?;
    if max_resource == 0 || eta < 2 {
        return Err(IdsError::InvalidPlan(vec![format!("need R >= 1 and eta >= 2, got R={max_resource} eta={eta}")]));
    }
    let mut ledger = Ledger::default();
    let mut next_id = 0;
    let sm = s_max(max_resource, eta);
    for (b, rungs) in schedule(max_resource, eta).iter().enumerate() {
        let configs: Vec<(usize, Config)> = (0..rungs[0].configs)
            .map(|_| {
                next_id += 1;
                (next_id - 1, space.sample(rng))
            })
            .collect();
        ledger.trials.extend(successive_halving(&configs, rungs, eta, sm - b as u32, &mut objective));
    }
    let best = ledger.best_at(max_resource as f64).cloned();
    Ok(HyperbandResult { best, ledger })
}
