//! Genetic-algorithm search over MACD parameter triples.
//!
//! Fitness is accumulated profit times win rate from a full backtest of the
//! chosen rule. Selection is roulette-wheel, crossover is a single cut
//! point over the 3-gene tuple, mutation redraws one gene uniformly from
//! its range. Everything is driven by one seeded RNG consumed strictly
//! sequentially, so a seed pins the whole trace bit for bit.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::{run_backtest, ExecutionConfig};
use crate::indicators::MacdParams;
use crate::marketdata::ValidatedBarSeries;
use crate::metrics::{accumulated_profit, win_rate};
use crate::signals::{evaluate, StrategyKind, StrategySpec};

/// An (fast, slow, signal) candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chromosome {
    pub fast: usize,
    pub slow: usize,
    pub signal: usize,
}

impl Chromosome {
    pub fn params(&self) -> MacdParams {
        MacdParams {
            fast: self.fast,
            slow: self.slow,
            signal: self.signal,
        }
    }
}

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneRange {
    pub min: usize,
    pub max: usize,
}

impl GeneRange {
    pub fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.min <= v && v <= self.max
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    pub fast_range: GeneRange,
    pub slow_range: GeneRange,
    pub signal_range: GeneRange,
    pub mutation_prob: f64,
    pub elitism: usize,
    pub convergence_patience: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            max_iterations: 100,
            fast_range: GeneRange::new(4, 20),
            slow_range: GeneRange::new(6, 21),
            signal_range: GeneRange::new(4, 41),
            mutation_prob: 0.1,
            elitism: 1,
            convergence_patience: 10,
            seed: 0,
        }
    }
}

impl GaConfig {
    /// Widened slow range; the default search interval caps slow at 21,
    /// which rules out slower settings practitioners sometimes land on.
    pub fn widened() -> Self {
        Self {
            slow_range: GeneRange::new(6, 41),
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<(), GaError> {
        if self.population_size < 2 {
            return Err(GaError::BadConfig("population_size must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(GaError::BadConfig("mutation_prob must be in [0,1]".into()));
        }
        for (name, r) in [
            ("fast", self.fast_range),
            ("slow", self.slow_range),
            ("signal", self.signal_range),
        ] {
            if r.min > r.max || r.min == 0 {
                return Err(GaError::BadConfig(format!("bad {name} range {r:?}")));
            }
        }
        if self.fast_range.min >= self.slow_range.max {
            return Err(GaError::InfeasibleRanges);
        }
        Ok(())
    }

    pub fn in_ranges(&self, c: &Chromosome) -> bool {
        self.fast_range.contains(c.fast)
            && self.slow_range.contains(c.slow)
            && self.signal_range.contains(c.signal)
            && c.fast < c.slow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best: Chromosome,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GaTrace {
    pub generations: Vec<GenerationStats>,
}

#[derive(Debug, Error)]
pub enum GaError {
    #[error("infeasible ranges: no fast < slow pair exists")]
    InfeasibleRanges,
    #[error("bad GA config: {0}")]
    BadConfig(String),
    #[error("no chromosome produced a defined fitness")]
    NoViableChromosome,
}

/// Backtest-driven fitness: accumulated profit times win rate. Zero trades
/// score 0; evaluation errors cull the chromosome (`None`).
pub fn fitness(
    chrom: &Chromosome,
    series: &ValidatedBarSeries,
    rule: StrategyKind,
    cfg: &ExecutionConfig,
) -> Option<f64> {
    let mut spec = StrategySpec::new(rule);
    spec.macd = chrom.params();
    let signals = evaluate(&spec, series).ok()?;
    let ledger = run_backtest(series, &signals, cfg).ok()?;
    if ledger.trades.is_empty() {
        return Some(0.0);
    }
    let (_, _, ap) = accumulated_profit(std::slice::from_ref(&ledger));
    let wr = win_rate(&ledger.trades)?;
    Some(ap * wr)
}

/// Fitness-proportional selection weights. Undefined fitnesses weigh
/// nothing; when any defined fitness is non-positive, all weights shift by
/// `-min + epsilon` so the wheel stays well defined.
fn selection_weights(fitnesses: &[Option<f64>]) -> Vec<f64> {
    const EPSILON: f64 = 1e-6;
    let defined: Vec<f64> = fitnesses.iter().filter_map(|f| *f).collect();
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min <= 0.0 { -min + EPSILON } else { 0.0 };
    fitnesses
        .iter()
        .map(|f| match f {
            Some(v) => v + shift,
            None => 0.0,
        })
        .collect()
}

/// Draws two parents independently, each with probability proportional to
/// its selection weight.
pub fn roulette_select<'a>(
    population: &'a [Chromosome],
    fitnesses: &[Option<f64>],
    rng: &mut ChaCha8Rng,
) -> (&'a Chromosome, &'a Chromosome) {
    assert!(population.len() >= 2);
    assert_eq!(population.len(), fitnesses.len());
    let weights = selection_weights(fitnesses);
    if weights.iter().sum::<f64>() <= 0.0 {
        // No usable fitness anywhere: fall back to uniform.
        let a = rng.gen_range(0..population.len());
        let b = rng.gen_range(0..population.len());
        return (&population[a], &population[b]);
    }
    let dist = WeightedIndex::new(&weights).expect("weights checked non-negative");
    let a = dist.sample(rng);
    let b = dist.sample(rng);
    (&population[a], &population[b])
}

/// Single cut point in {1, 2}: genes before the cut from `a`, after from
/// `b`.
pub fn crossover(a: &Chromosome, b: &Chromosome, rng: &mut ChaCha8Rng) -> Chromosome {
    let cut = rng.gen_range(1..=2);
    match cut {
        1 => Chromosome {
            fast: a.fast,
            slow: b.slow,
            signal: b.signal,
        },
        _ => Chromosome {
            fast: a.fast,
            slow: a.slow,
            signal: b.signal,
        },
    }
}

/// With probability `mutation_prob`, redraws one uniformly chosen gene
/// uniformly from its configured range.
pub fn mutate(c: &Chromosome, cfg: &GaConfig, rng: &mut ChaCha8Rng) -> Chromosome {
    if !rng.gen_bool(cfg.mutation_prob) {
        return *c;
    }
    let mut out = *c;
    match rng.gen_range(0..3) {
        0 => out.fast = cfg.fast_range.draw(rng),
        1 => out.slow = cfg.slow_range.draw(rng),
        _ => out.signal = cfg.signal_range.draw(rng),
    }
    out
}

/// Restores `fast < slow`: redraw slow strictly above fast if possible,
/// otherwise redraw fast strictly below slow.
pub fn repair(
    c: &Chromosome,
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Chromosome, GaError> {
    if c.fast < c.slow {
        return Ok(*c);
    }
    let mut out = *c;
    let slow_lo = cfg.slow_range.min.max(c.fast + 1);
    if slow_lo <= cfg.slow_range.max {
        out.slow = GeneRange::new(slow_lo, cfg.slow_range.max).draw(rng);
        return Ok(out);
    }
    if c.slow > cfg.fast_range.min {
        let fast_hi = cfg.fast_range.max.min(c.slow - 1);
        out.fast = GeneRange::new(cfg.fast_range.min, fast_hi).draw(rng);
        return Ok(out);
    }
    Err(GaError::InfeasibleRanges)
}

/// Runs the GA against an arbitrary fitness function. The backtest-backed
/// entry point is [`evolve_backtest`]; tests inject synthetic landscapes
/// here.
pub fn evolve<F>(mut eval: F, ga: &GaConfig) -> Result<(Chromosome, GaTrace), GaError>
where
    F: FnMut(&Chromosome) -> Option<f64>,
{
    ga.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);

    let mut population: Vec<Chromosome> = Vec::with_capacity(ga.population_size);
    while population.len() < ga.population_size {
        let raw = Chromosome {
            fast: ga.fast_range.draw(&mut rng),
            slow: ga.slow_range.draw(&mut rng),
            signal: ga.signal_range.draw(&mut rng),
        };
        population.push(repair(&raw, ga, &mut rng)?);
    }

    let mut trace = GaTrace::default();
    let mut stall = 0usize;
    let mut overall_best: Option<(Chromosome, f64)> = None;

    for generation in 0..ga.max_iterations {
        let fitnesses: Vec<Option<f64>> = population.iter().map(&mut eval).collect();

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&i, &j| {
            let fi = fitnesses[i].unwrap_or(f64::NEG_INFINITY);
            let fj = fitnesses[j].unwrap_or(f64::NEG_INFINITY);
            fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
        });
        let best_idx = ranked[0];
        let best_fit = fitnesses[best_idx].ok_or(GaError::NoViableChromosome)?;

        let defined: Vec<f64> = fitnesses.iter().filter_map(|f| *f).collect();
        let mean_fitness = defined.iter().sum::<f64>() / defined.len() as f64;

        match &mut overall_best {
            Some((best, fit)) if best_fit > *fit => {
                *best = population[best_idx];
                *fit = best_fit;
                stall = 0;
            }
            Some(_) => stall += 1,
            None => {
                overall_best = Some((population[best_idx], best_fit));
            }
        }
        let (best_chrom, best_overall_fit) = overall_best.unwrap();
        trace.generations.push(GenerationStats {
            generation,
            best_fitness: best_overall_fit,
            mean_fitness,
            best: best_chrom,
        });

        if stall >= ga.convergence_patience || generation + 1 == ga.max_iterations {
            break;
        }

        let mut next: Vec<Chromosome> = ranked
            .iter()
            .take(ga.elitism.min(population.len()))
            .map(|&i| population[i])
            .collect();
        while next.len() < ga.population_size {
            let (a, b) = roulette_select(&population, &fitnesses, &mut rng);
            let child = crossover(a, b, &mut rng);
            let child = mutate(&child, ga, &mut rng);
            next.push(repair(&child, ga, &mut rng)?);
        }
        population = next;
    }

    let (best, _) = overall_best.ok_or(GaError::NoViableChromosome)?;
    Ok((best, trace))
}

/// GA over a single series: fitness from the chosen rule's backtest.
pub fn evolve_backtest(
    series: &ValidatedBarSeries,
    rule: StrategyKind,
    ga: &GaConfig,
    exec: &ExecutionConfig,
) -> Result<(Chromosome, GaTrace), GaError> {
    evolve(|c| fitness(c, series, rule, exec), ga)
}

/// GA over several series with summed fitness.
pub fn evolve_backtest_multi(
    series: &[&ValidatedBarSeries],
    rule: StrategyKind,
    ga: &GaConfig,
    exec: &ExecutionConfig,
) -> Result<(Chromosome, GaTrace), GaError> {
    evolve(
        |c| {
            series
                .iter()
                .map(|s| fitness(c, s, rule, exec))
                .sum::<Option<f64>>()
        },
        ga,
    )
}

/// Enumerates every valid triple in the ranges. The oracle the GA is
/// checked against; practical only on small ranges.
pub fn exhaustive_search<F>(mut eval: F, ga: &GaConfig) -> Result<(Chromosome, f64), GaError>
where
    F: FnMut(&Chromosome) -> Option<f64>,
{
    ga.check()?;
    let mut best: Option<(Chromosome, f64)> = None;
    for fast in ga.fast_range.min..=ga.fast_range.max {
        for slow in ga.slow_range.min..=ga.slow_range.max {
            if fast >= slow {
                continue;
            }
            for signal in ga.signal_range.min..=ga.signal_range.max {
                let c = Chromosome { fast, slow, signal };
                if let Some(f) = eval(&c) {
                    if best.map(|(_, bf)| f > bf).unwrap_or(true) {
                        best = Some((c, f));
                    }
                }
            }
        }
    }
    best.ok_or(GaError::NoViableChromosome)
}
