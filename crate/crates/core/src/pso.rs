//! Particle swarm tuning of trapezoid parameters.
//!
//! Adjacent terms of every variable share their edge abscissae (the falling
//! edge of one term is the rising edge of the next), so a variable with `n`
//! terms contributes `2(n - 1)` free parameters. Keeping each group sorted and
//! inside the domain is then enough for every decoded controller to be
//! monotone and to cover its domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fml::{FuzzyController, FuzzyVariable, TrapezoidShape};
use crate::inference::{Engine, InferenceError};
use crate::preprocess::MoveFeatureRecord;

/// Squared residual charged to a record for which no rule fires.
pub const NO_RULE_PENALTY: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsoError {
    #[error("variable {variable} does not have tied adjacent term boundaries")]
    StructureMismatch { variable: String },
    #[error("position is infeasible: {reason}")]
    InfeasiblePosition { reason: String },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("record for move {move_number}: {source}")]
    InvalidRecord {
        move_number: u32,
        source: InferenceError,
    },
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("invalid swarm configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGroup {
    pub variable: String,
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterEncoding {
    pub groups: Vec<ParameterGroup>,
}

impl ParameterEncoding {
    /// Encoding for a controller, one group per variable in declaration order.
    pub fn for_controller(controller: &FuzzyController) -> Result<Self, PsoError> {
        let groups = controller
            .knowledge_base
            .iter()
            .map(|v| {
                check_tied(v)?;
                Ok(ParameterGroup {
                    variable: v.name.clone(),
                    count: 2 * (v.terms.len() - 1),
                    lower: v.domain_left,
                    upper: v.domain_right,
                })
            })
            .collect::<Result<_, PsoError>>()?;
        Ok(Self { groups })
    }

    pub fn dimension(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// `(lower, upper)` for every dimension.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat_n((g.lower, g.upper), g.count))
            .collect()
    }

    fn slices<'a>(
        &'a self,
        position: &'a [f64],
    ) -> impl Iterator<Item = (&'a ParameterGroup, &'a [f64])> {
        let mut offset = 0;
        self.groups.iter().map(move |g| {
            let s = &position[offset..offset + g.count];
            offset += g.count;
            (g, s)
        })
    }
}

fn check_tied(v: &FuzzyVariable) -> Result<(), PsoError> {
    let mismatch = || PsoError::StructureMismatch {
        variable: v.name.clone(),
    };
    let (first, last) = match (v.terms.first(), v.terms.last()) {
        (Some(f), Some(l)) => (f.shape, l.shape),
        _ => return Err(mismatch()),
    };
    let tied = first.p1 == v.domain_left
        && first.p2 == v.domain_left
        && last.p3 == v.domain_right
        && last.p4 == v.domain_right
        && v.terms.windows(2).all(|w| {
            let (a, b) = (w[0].shape, w[1].shape);
            a.p3 == b.p1 && a.p4 == b.p2
        });
    if tied {
        Ok(())
    } else {
        Err(mismatch())
    }
}

pub fn encode_parameters(controller: &FuzzyController) -> Result<Vec<f64>, PsoError> {
    ParameterEncoding::for_controller(controller)?;
    Ok(controller
        .knowledge_base
        .iter()
        .flat_map(|v| {
            let n = v.terms.len();
            v.terms[..n - 1]
                .iter()
                .flat_map(|t| [t.shape.p3, t.shape.p4])
        })
        .collect())
}

fn check_feasible(position: &[f64], encoding: &ParameterEncoding) -> Result<(), PsoError> {
    let infeasible = |reason: String| Err(PsoError::InfeasiblePosition { reason });
    if position.len() != encoding.dimension() {
        return infeasible(format!(
            "expected {} values, got {}",
            encoding.dimension(),
            position.len()
        ));
    }
    for (g, values) in encoding.slices(position) {
        if values.iter().any(|x| !(x >= &g.lower && x <= &g.upper)) {
            return infeasible(format!(
                "{} values leave [{}, {}]",
                g.variable, g.lower, g.upper
            ));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return infeasible(format!("{} values are not ascending", g.variable));
        }
    }
    Ok(())
}

/// Rebuild the template's trapezoids from a feasible position.
pub fn decode_parameters(
    position: &[f64],
    template: &FuzzyController,
) -> Result<FuzzyController, PsoError> {
    let encoding = ParameterEncoding::for_controller(template)?;
    check_feasible(position, &encoding)?;
    Ok(decode_unchecked(position, &encoding, template))
}

fn decode_unchecked(
    position: &[f64],
    encoding: &ParameterEncoding,
    template: &FuzzyController,
) -> FuzzyController {
    let mut out = template.clone();
    for (var, (g, values)) in out.knowledge_base.iter_mut().zip(encoding.slices(position)) {
        let n = var.terms.len();
        for (i, term) in var.terms.iter_mut().enumerate() {
            let (p1, p2) = if i == 0 {
                (g.lower, g.lower)
            } else {
                (values[2 * i - 2], values[2 * i - 1])
            };
            let (p3, p4) = if i == n - 1 {
                (g.upper, g.upper)
            } else {
                (values[2 * i], values[2 * i + 1])
            };
            term.shape = TrapezoidShape::new(p1, p2, p3, p4);
        }
    }
    out
}

/// Clamp every value into its group's bounds, then sort each group ascending.
pub fn repair_position(position: &mut [f64], encoding: &ParameterEncoding) {
    let mut offset = 0;
    for g in &encoding.groups {
        let values = &mut position[offset..offset + g.count];
        for x in values.iter_mut() {
            *x = if x.is_nan() {
                g.lower
            } else {
                x.clamp(g.lower, g.upper)
            };
        }
        values.sort_by(f64::total_cmp);
        offset += g.count;
    }
}

/// Mean squared error between inferred and desired win rates.
pub fn fitness(
    position: &[f64],
    template: &FuzzyController,
    records: &[MoveFeatureRecord],
) -> Result<f64, PsoError> {
    let objective = Objective::new(template, records)?;
    check_feasible(position, &objective.encoding)?;
    Ok(objective.evaluate(position))
}

/// Training data bound to a template, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    template: &'a FuzzyController,
    encoding: ParameterEncoding,
    rows: Vec<(Vec<f64>, f64)>,
}

impl<'a> Objective<'a> {
    pub fn new(
        template: &'a FuzzyController,
        records: &[MoveFeatureRecord],
    ) -> Result<Self, PsoError> {
        if records.is_empty() {
            return Err(PsoError::EmptyDataset);
        }
        let encoding = ParameterEncoding::for_controller(template)?;
        let engine = Engine::new(template)?;
        let rows = arrange_rows(&engine, records)?;
        Ok(Self {
            template,
            encoding,
            rows,
        })
    }

    pub fn encoding(&self) -> &ParameterEncoding {
        &self.encoding
    }

    /// Fitness of a position that is already feasible.
    pub fn evaluate(&self, position: &[f64]) -> f64 {
        let controller = decode_unchecked(position, &self.encoding, self.template);
        let engine = Engine::new(&controller).expect("decoding keeps the template structure");
        mean_squared_error(&engine, &self.rows)
    }
}

fn mean_squared_error(engine: &Engine, rows: &[(Vec<f64>, f64)]) -> f64 {
    squared_error_mean(
        rows.iter()
            .map(|(values, desired)| (engine.crisp(values).ok(), *desired)),
    )
}

/// Mean of `(inferred - desired)^2` over `(inferred, desired)` pairs, with
/// [`NO_RULE_PENALTY`] for a missing inference. Zero pairs give NaN.
pub fn squared_error_mean(pairs: impl IntoIterator<Item = (Option<f64>, f64)>) -> f64 {
    let (total, n) = pairs
        .into_iter()
        .fold((0.0, 0usize), |(total, n), (inferred, desired)| {
            let e = match inferred {
                Some(x) => (x - desired) * (x - desired),
                None => NO_RULE_PENALTY,
            };
            (total + e, n + 1)
        });
    total / n as f64
}

/// Fitness of a controller as it stands, without going through the
/// parameter encoding. Works for controllers whose terms are not tied.
pub fn controller_fitness(
    controller: &FuzzyController,
    records: &[MoveFeatureRecord],
) -> Result<f64, PsoError> {
    if records.is_empty() {
        return Err(PsoError::EmptyDataset);
    }
    let engine = Engine::new(controller)?;
    let rows = arrange_rows(&engine, records)?;
    Ok(mean_squared_error(&engine, &rows))
}

fn arrange_rows(
    engine: &Engine,
    records: &[MoveFeatureRecord],
) -> Result<Vec<(Vec<f64>, f64)>, PsoError> {
    records
        .iter()
        .map(|r| {
            let invalid = |source| PsoError::InvalidRecord {
                move_number: r.move_number,
                source,
            };
            let values = engine.arrange_record(r).map_err(invalid)?;
            // domain check only; NoRuleFired is scored, not rejected
            if let Err(e @ InferenceError::OutOfDomain { .. }) = engine.crisp(&values) {
                return Err(invalid(e));
            }
            Ok((values, r.desired_output))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub particle_count: usize,
    pub inertia_weight: f64,
    pub cognitive: f64,
    pub social: f64,
    pub generations: usize,
    pub seed: u64,
    pub velocity_clamp_fraction: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            particle_count: 20,
            inertia_weight: 0.0,
            cognitive: 2.0,
            social: 2.0,
            generations: 3000,
            seed: 0,
            velocity_clamp_fraction: 0.2,
        }
    }
}

impl SwarmConfig {
    pub fn check(&self) -> Result<(), PsoError> {
        if self.particle_count == 0 {
            return Err(PsoError::InvalidConfig(
                "particle count must be at least 1".into(),
            ));
        }
        let f = self.velocity_clamp_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(PsoError::InvalidConfig(format!(
                "velocity clamp fraction {f} outside (0, 1]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub fitness: f64,
    pub personal_best: Vec<f64>,
    pub personal_best_fitness: f64,
}

impl Particle {
    fn at(position: Vec<f64>) -> Self {
        Self {
            velocity: vec![0.0; position.len()],
            personal_best: position.clone(),
            position,
            fitness: f64::INFINITY,
            personal_best_fitness: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best: Vec<f64>,
    pub global_best_fitness: f64,
    /// Global-best fitness after each completed generation, starting at generation 0.
    pub history: Vec<f64>,
}

impl Swarm {
    /// Particle 0 starts at `seed_position`; the rest are uniform in bounds.
    /// The global best starts at particle 0.
    pub fn initialize(
        objective: &Objective<'_>,
        seed_position: Vec<f64>,
        config: &SwarmConfig,
        rng: &mut impl Rng,
    ) -> Self {
        let bounds = objective.encoding.bounds();
        let mut particles = Vec::with_capacity(config.particle_count);
        particles.push(Particle::at(seed_position));
        for _ in 1..config.particle_count {
            let mut position: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect();
            repair_position(&mut position, &objective.encoding);
            particles.push(Particle::at(position));
        }
        evaluate_all(&mut particles, objective);
        for p in &mut particles {
            p.personal_best_fitness = p.fitness;
        }
        let global_best = particles[0].position.clone();
        let global_best_fitness = particles[0].fitness;
        Self {
            particles,
            global_best,
            global_best_fitness,
            history: vec![global_best_fitness],
        }
    }

    /// One synchronous generation. Random numbers are drawn per particle, then
    /// per dimension (`r1` before `r2`), so results do not depend on how
    /// fitness evaluation is scheduled.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self, objective: &Objective<'_>, config: &SwarmConfig, rng: &mut impl Rng) {
        let limits: Vec<f64> = objective
            .encoding
            .bounds()
            .iter()
            .map(|(lo, hi)| config.velocity_clamp_fraction * (hi - lo))
            .collect();
        for p in &mut self.particles {
            for d in 0..p.position.len() {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let x = p.position[d];
                let v = config.inertia_weight * p.velocity[d]
                    + config.cognitive * r1 * (p.personal_best[d] - x)
                    + config.social * r2 * (self.global_best[d] - x);
                let v = v.clamp(-limits[d], limits[d]);
                p.velocity[d] = v;
                p.position[d] = x + v;
            }
            repair_position(&mut p.position, &objective.encoding);
        }
        evaluate_all(&mut self.particles, objective);
        for p in &mut self.particles {
            if p.fitness < p.personal_best_fitness {
                p.personal_best.clone_from(&p.position);
                p.personal_best_fitness = p.fitness;
            }
        }
        for p in &self.particles {
            if p.personal_best_fitness < self.global_best_fitness {
                self.global_best.clone_from(&p.personal_best);
                self.global_best_fitness = p.personal_best_fitness;
            }
        }
        self.history.push(self.global_best_fitness);
    }
}

fn evaluate_all(particles: &mut [Particle], objective: &Objective<'_>) {
    particles
        .par_iter_mut()
        .for_each(|p| p.fitness = objective.evaluate(&p.position));
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub learned_controller: FuzzyController,
    pub best_position: Vec<f64>,
    pub history: Vec<f64>,
    pub initial_fitness: f64,
    pub final_fitness: f64,
}

pub fn learn(
    template: &FuzzyController,
    records: &[MoveFeatureRecord],
    config: &SwarmConfig,
) -> Result<LearnResult, PsoError> {
    learn_with_progress(template, records, config, |_, _| {})
}

/// [`learn`], calling `progress(generation, gbest_fitness)` after every generation.
pub fn learn_with_progress(
    template: &FuzzyController,
    records: &[MoveFeatureRecord],
    config: &SwarmConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<LearnResult, PsoError> {
    config.check()?;
    let objective = Objective::new(template, records)?;
    let start = encode_parameters(template)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut swarm = Swarm::initialize(&objective, start, config, &mut rng);
    for generation in 1..=config.generations {
        swarm.step(&objective, config, &mut rng);
        progress(generation, swarm.global_best_fitness);
    }
    let learned_controller = decode_unchecked(&swarm.global_best, &objective.encoding, template);
    Ok(LearnResult {
        learned_controller,
        initial_fitness: swarm.history[0],
        final_fitness: swarm.global_best_fitness,
        best_position: swarm.global_best,
        history: swarm.history,
    })
}

/// Scale every free parameter by an independent factor in `1 ± fraction`,
/// then repair. Used to build hidden controllers for synthetic sessions.
pub fn perturb_controller(
    controller: &FuzzyController,
    fraction: f64,
    seed: u64,
) -> Result<FuzzyController, PsoError> {
    let encoding = ParameterEncoding::for_controller(controller)?;
    let mut position = encode_parameters(controller)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in &mut position {
        *x *= 1.0 + rng.gen_range(-fraction..=fraction);
    }
    repair_position(&mut position, &encoding);
    Ok(decode_unchecked(&position, &encoding, controller))
}
