//! Monte-Carlo execution of the k-round pooling protocol on finite populations.
//!
//! Each trial draws from its own ChaCha8 stream: the generator is seeded from
//! `master_seed` and switched to stream number `trial_index`. Streams are
//! independent, so any trial can be replayed alone and trials can run in
//! any order or in parallel without changing a single bit of the report.
//!
//! Per trial:
//! 1. infection status is drawn (Bernoulli per patient, or exactly `m`
//!    patients chosen without replacement);
//! 2. for each of the `k` rounds, patient indices are shuffled and chunked
//!    into `ceil(n / s)` pools, the last holding `n mod s` when `s` does not
//!    divide `n`;
//! 3. a pool tests positive iff it holds an infected patient and its
//!    false-negative draw `u ~ U[0, 1)` satisfies `u >= pool_fn_rate` (the
//!    draw is only taken when `pool_fn_rate > 0` and the pool is infected);
//! 4. a patient is retested individually iff all `k` of their pools tested
//!    positive. Individual tests are perfect.
//!
//! With a flat pool false-negative rate `f`, a positive patient alone in
//! their pools is detected with probability `(1 - f)^k`.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{self, Multiplicity, Prevalence};
use crate::error::{PoolError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum InfectionModel {
    Bernoulli { p: Prevalence },
    FixedCount { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_patients: usize,
    pub infection: InfectionModel,
    pub k: Multiplicity,
    pub s: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Probability that an infected pool nevertheless reads negative.
    pub pool_fn_rate: f64,
    /// Keep every [`TrialOutcome`] in the report.
    #[serde(default)]
    pub keep_trials: bool,
}

impl SimConfig {
    pub fn new(n_patients: usize, infection: InfectionModel, k: Multiplicity, s: usize) -> Self {
        Self {
            n_patients,
            infection,
            k,
            s,
            trials: 1,
            master_seed: 0,
            pool_fn_rate: 0.0,
            keep_trials: false,
        }
    }

    pub fn trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn fn_rate(mut self, rate: f64) -> Self {
        self.pool_fn_rate = rate;
        self
    }

    pub fn keep_trials(mut self, keep: bool) -> Self {
        self.keep_trials = keep;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PoolError::InvalidConfig(msg));
        if self.n_patients == 0 {
            return bad("n_patients must be positive".into());
        }
        if self.s < self.k.min_pool_size() as usize {
            return bad(format!("pool size {} below minimum {} for k = {}", self.s, self.k.min_pool_size(), self.k.get()));
        }
        if self.s > self.n_patients {
            return bad(format!("pool size {} exceeds population {}", self.s, self.n_patients));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if !(0.0..1.0).contains(&self.pool_fn_rate) {
            return bad(format!("pool_fn_rate {} outside [0, 1)", self.pool_fn_rate));
        }
        if let InfectionModel::FixedCount { m } = self.infection {
            if m > self.n_patients {
                return bad(format!("{m} positives exceed population {}", self.n_patients));
            }
        }
        Ok(())
    }

    pub fn pools_per_round(&self) -> usize {
        self.n_patients.div_ceil(self.s)
    }

    fn trial_rng(&self, trial_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(trial_index);
        rng
    }
}

/// Bookkeeping for one simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: u64,
    pub pool_tests: u64,
    pub individual_retests: u64,
    pub total_tests: u64,
    pub positives: u64,
    pub detected_positives: u64,
    pub missed_positives: u64,
    pub suspect_negatives: u64,
}

/// Full state of one trial, for checking the protocol itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialTrace {
    pub infected: Vec<bool>,
    /// `rounds[r][j]` lists the patients in pool `j` of round `r`.
    pub rounds: Vec<Vec<Vec<usize>>>,
    pub pool_positive: Vec<Vec<bool>>,
    pub retested: Vec<bool>,
}

/// Uniformly shuffles `0..n` and cuts it into consecutive pools of `s`.
pub fn random_partition<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(s).map(<[usize]>::to_vec).collect()
}

fn draw_infections(config: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let n = config.n_patients;
    match config.infection {
        InfectionModel::Bernoulli { p } => (0..n).map(|_| rng.random::<f64>() < p.get()).collect(),
        InfectionModel::FixedCount { m } => {
            let mut infected = vec![false; n];
            for i in index::sample(rng, n, m) {
                infected[i] = true;
            }
            infected
        }
    }
}

fn simulate_trial(config: &SimConfig, trial_index: u64, mut trace: Option<&mut TrialTrace>) -> TrialOutcome {
    let n = config.n_patients;
    let k = config.k.get() as usize;
    let mut rng = config.trial_rng(trial_index);

    let infected = draw_infections(config, &mut rng);
    let mut positive_rounds = vec![0usize; n];
    let mut pool_tests = 0u64;
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..k {
        order.shuffle(&mut rng);
        let mut round_positive = Vec::with_capacity(config.pools_per_round());
        for pool in order.chunks(config.s) {
            pool_tests += 1;
            let has_positive = pool.iter().any(|&i| infected[i]);
            let reads_positive = has_positive
                && (config.pool_fn_rate == 0.0 || rng.random::<f64>() >= config.pool_fn_rate);
            if reads_positive {
                for &i in pool {
                    positive_rounds[i] += 1;
                }
            }
            round_positive.push(reads_positive);
        }
        if let Some(t) = trace.as_deref_mut() {
            t.rounds.push(order.chunks(config.s).map(<[usize]>::to_vec).collect());
            t.pool_positive.push(round_positive);
        }
    }

    let mut outcome = TrialOutcome {
        trial_index,
        pool_tests,
        ..TrialOutcome::default_for(trial_index)
    };
    for (i, &hits) in positive_rounds.iter().enumerate() {
        let retest = hits == k;
        match (infected[i], retest) {
            (true, true) => outcome.detected_positives += 1,
            (true, false) => outcome.missed_positives += 1,
            (false, true) => outcome.suspect_negatives += 1,
            (false, false) => {}
        }
    }
    outcome.positives = outcome.detected_positives + outcome.missed_positives;
    outcome.individual_retests = outcome.detected_positives + outcome.suspect_negatives;
    outcome.total_tests = outcome.pool_tests + outcome.individual_retests;

    if let Some(t) = trace {
        t.retested = positive_rounds.iter().map(|&h| h == k).collect();
        t.infected = infected;
    }
    outcome
}

impl TrialOutcome {
    fn default_for(trial_index: u64) -> Self {
        Self {
            trial_index,
            pool_tests: 0,
            individual_retests: 0,
            total_tests: 0,
            positives: 0,
            detected_positives: 0,
            missed_positives: 0,
            suspect_negatives: 0,
        }
    }

    pub fn tests_per_patient(&self, n_patients: usize) -> f64 {
        self.total_tests as f64 / n_patients as f64
    }
}

pub fn run_trial(config: &SimConfig, trial_index: u64) -> Result<TrialOutcome> {
    config.validate()?;
    Ok(simulate_trial(config, trial_index, None))
}

/// Like [`run_trial`] but also returns the partitions and test results.
pub fn run_trial_traced(config: &SimConfig, trial_index: u64) -> Result<(TrialOutcome, TrialTrace)> {
    config.validate()?;
    let mut trace = TrialTrace {
        infected: Vec::new(),
        rounds: Vec::with_capacity(config.k.get() as usize),
        pool_positive: Vec::with_capacity(config.k.get() as usize),
        retested: Vec::new(),
    };
    let outcome = simulate_trial(config, trial_index, Some(&mut trace));
    Ok((outcome, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub trials: usize,
    pub mean_tests_per_patient: f64,
    /// Sample standard deviation over trials divided by `sqrt(trials)`;
    /// absent for a single trial.
    pub std_error: Option<f64>,
    pub mean_total_tests: f64,
    /// Model cost at the same `(p, k, s)`; absent for fixed-count populations.
    pub analytic_cost: Option<f64>,
    pub empirical_sensitivity: f64,
    pub total_positives: u64,
    pub total_detected: u64,
    pub total_missed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<TrialOutcome>>,
}

impl SimReport {
    /// `mean - analytic`, when an analytic cost exists.
    pub fn excess_over_analytic(&self) -> Option<f64> {
        self.analytic_cost.map(|c| self.mean_tests_per_patient - c)
    }
}

fn aggregate(config: &SimConfig, outcomes: Vec<TrialOutcome>) -> Result<SimReport> {
    let n = config.n_patients as f64;
    let trials = outcomes.len();
    // Integer totals make the mean exact and order-free; the variance pass
    // walks outcomes in trial order.
    let total_tests: u64 = outcomes.iter().map(|o| o.total_tests).sum();
    let total_positives: u64 = outcomes.iter().map(|o| o.positives).sum();
    let total_detected: u64 = outcomes.iter().map(|o| o.detected_positives).sum();
    let total_missed: u64 = outcomes.iter().map(|o| o.missed_positives).sum();

    let mean_total_tests = total_tests as f64 / trials as f64;
    let mean = mean_total_tests / n;
    let std_error = (trials > 1).then(|| {
        let ss: f64 = outcomes
            .iter()
            .map(|o| {
                let d = o.total_tests as f64 / n - mean;
                d * d
            })
            .sum();
        (ss / (trials as f64 - 1.0)).sqrt() / (trials as f64).sqrt()
    });

    let analytic_cost = match config.infection {
        InfectionModel::Bernoulli { p } => Some(cost::k_pool_cost(p, config.k, config.s as u32)?),
        InfectionModel::FixedCount { .. } => None,
    };
    let empirical_sensitivity = if total_positives == 0 {
        1.0
    } else {
        total_detected as f64 / total_positives as f64
    };

    Ok(SimReport {
        config: config.clone(),
        trials,
        mean_tests_per_patient: mean,
        std_error,
        mean_total_tests,
        analytic_cost,
        empirical_sensitivity,
        total_positives,
        total_detected,
        total_missed,
        outcomes: config.keep_trials.then_some(outcomes),
    })
}

/// Runs every trial (in parallel) and aggregates them in trial order.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| simulate_trial(config, t, None))
        .collect();
    aggregate(config, outcomes)
}

/// Sequential reference path; must agree bit-for-bit with [`run_simulation`].
pub fn run_simulation_sequential(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let outcomes = (0..config.trials as u64).map(|t| simulate_trial(config, t, None)).collect();
    aggregate(config, outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyEstimate {
    /// Empirical mean tests per patient minus the analytic cost.
    pub penalty: f64,
    pub std_error: Option<f64>,
    pub empirical: f64,
    pub analytic: f64,
}

/// Measures how far a finite population's empirical cost sits above the
/// independent-pool model. Reported, not asserted against any theory.
pub fn estimate_correlation_penalty(
    p: Prevalence,
    k: Multiplicity,
    s: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<PenaltyEstimate> {
    let config = SimConfig::new(n, InfectionModel::Bernoulli { p }, k, s).trials(trials).seed(seed);
    let report = run_simulation(&config)?;
    let analytic = report.analytic_cost.expect("Bernoulli model always has an analytic cost");
    Ok(PenaltyEstimate {
        penalty: report.mean_tests_per_patient - analytic,
        std_error: report.std_error,
        empirical: report.mean_tests_per_patient,
        analytic,
    })
}

/// Fraction of infected patients the protocol detects under `config`.
pub fn sensitivity_report(config: &SimConfig) -> Result<f64> {
    Ok(run_simulation(config)?.empirical_sensitivity)
}
