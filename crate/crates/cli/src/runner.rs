//! Dispatch from a validated configuration to the library, and row assembly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use log::{info, warn};
use tvvi_core::algorithms::{run_tracker_with_threshold, Algorithm, RunStatus, StepSchedule, Trajectory};
use tvvi_core::dynamics::{
    bifurcation_scan, compose_map, iterate_orbit, newton_periodic_orbit, orbit_stability, period3_search, star_scan,
    Classification, GdMap, OrbitStatus,
};
use tvvi_core::metrics::{
    bound_check, quadratic_path_length, regret_partial_sums, tracking_partial_sums, BoundSpec, Measure,
};
use tvvi_core::scenarios::BuiltScenario;
use tvvi_core::vi::{
    check_lipschitz, check_restricted_secant, check_strong_monotone, relative_gradient_deviation, Operator, Sampler,
};
use tvvi_core::{Error as CoreError, Point};

use crate::config::{BoundKind, Command, ExperimentConfig, OrbitMode, StarOutput};
use crate::error::RunError;
use crate::table::{Format, Kind, Schema, Table, Value};

/// How an experiment ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A run left the divergence threshold; the rows say where.
    Diverged,
    /// A verification check or a bound failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub status: Status,
    pub fail_on_divergence: bool,
}

impl Outcome {
    /// 0 on success, 3 on divergence when it counts as failure, 4 on a failed check.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Diverged if self.fail_on_divergence => 3,
            Status::Diverged => 0,
            Status::Failed => 4,
        }
    }
}

/// Runs the experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let built = cfg.scenario.build()?;
    info!("{} on {}", cfg.command.name(), cfg.scenario.id);
    let (table, status) = match cfg.command {
        Command::Track => track(cfg, built)?,
        Command::Bounds => bounds(cfg, built)?,
        Command::Bifurcation => bifurcation(cfg, &built)?,
        Command::Orbit => orbit(cfg, &built)?,
        Command::Star => star(cfg, &built)?,
        Command::Verify => verify(cfg, built)?,
    };
    Ok(Outcome { table, status, fail_on_divergence: cfg.run.fail_on_divergence })
}

/// Runs the experiment on a dedicated pool of `threads` workers (rayon's default when `None`).
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Outcome, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| RunError::Threads(e.to_string()))?;
    pool.install(|| run_experiment(cfg))
}

/// Writes the table to `path`, or to standard output.
pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<(), RunError> {
    match path {
        Some(p) => {
            let wrap = |source| RunError::File { path: p.to_path_buf(), source };
            let file = File::create(p).map_err(|e| wrap(e.into()))?;
            let mut w = BufWriter::new(file);
            crate::table::write_table(table, format, &mut w).map_err(wrap)?;
            w.flush().map_err(|e| wrap(e.into()))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            crate::table::write_table(table, format, &mut w)?;
            w.flush().map_err(|e| RunError::Output(e.into()))
        }
    }
}

fn coords(p: &Point) -> Value {
    Value::vector(p.as_slice())
}

fn initial_play(cfg: &ExperimentConfig, dim: usize) -> Point {
    cfg.run.z1.clone().map(Point::from_vec).unwrap_or_else(|| Point::zeros(dim))
}

fn algorithm_mu(algo: &Algorithm) -> Option<f64> {
    match *algo {
        Algorithm::CyclicFb { schedule: StepSchedule::InverseMuT(mu), .. }
        | Algorithm::MetaFixed { mu, .. }
        | Algorithm::MetaAdaptive { mu, .. } => Some(mu),
        _ => None,
    }
}

fn run_tracker(cfg: &ExperimentConfig, built: &mut BuiltScenario) -> Result<Trajectory, RunError> {
    let algo = cfg.algorithm.as_ref().expect("validated config has an algorithm");
    let z1 = initial_play(cfg, built.sequence.dim());
    let traj = run_tracker_with_threshold(
        &mut built.sequence,
        algo,
        &built.domain,
        z1,
        cfg.run.horizon,
        cfg.run.divergence_threshold,
    )?;
    if let RunStatus::Diverged { step } = traj.status {
        warn!("run diverged at round {step}");
    }
    Ok(traj)
}

fn track(cfg: &ExperimentConfig, mut built: BuiltScenario) -> Result<(Table, Status), RunError> {
    let traj = run_tracker(cfg, &mut built)?;
    let algo = cfg.algorithm.as_ref().expect("validated config has an algorithm");
    let mu = built.meta.mu.or_else(|| algorithm_mu(algo)).unwrap_or(0.0);
    let solved = traj.solutions.is_some();
    let meta = traj.weights.is_some();

    let mut columns = vec![("t", Kind::Int), ("z", Kind::Vector)];
    if solved {
        columns.extend([
            ("z_star", Kind::Vector),
            ("sq_dist", Kind::Real),
            ("cum_track", Kind::Real),
            ("cum_regret", Kind::Real),
        ]);
    }
    if meta {
        columns.push(("weights", Kind::Vector));
    }
    let mut table = Table::new(Schema::new(&columns));
    let (track_sums, regret_sums) = match &traj.solutions {
        Some(sol) => (tracking_partial_sums(&traj)?, regret_partial_sums(&traj, sol, mu)?),
        None => (Vec::new(), Vec::new()),
    };
    for (i, z) in traj.plays.iter().enumerate() {
        let mut row = vec![Value::Int(i as i64 + 1), coords(z)];
        if let Some(sol) = &traj.solutions {
            row.extend([
                coords(&sol[i]),
                Value::real((z - &sol[i]).norm_squared()),
                Value::real(track_sums[i]),
                Value::real(regret_sums[i]),
            ]);
        }
        if let Some(w) = &traj.weights {
            row.push(Value::vector(&w[i]));
        }
        table.push(row);
    }
    let status = match traj.status {
        RunStatus::Diverged { step } => {
            let mut row = vec![Value::Int(step as i64)];
            row.resize(columns.len(), Value::Diverged);
            table.push(row);
            Status::Diverged
        }
        RunStatus::Complete => Status::Ok,
    };
    Ok((table, status))
}

fn bounds(cfg: &ExperimentConfig, mut built: BuiltScenario) -> Result<(Table, Status), RunError> {
    let spec = cfg.bounds.as_ref().expect("validated config has bounds");
    let traj = run_tracker(cfg, &mut built)?;
    let algo = cfg.algorithm.as_ref().expect("validated config has an algorithm");
    let schema = Schema::new(&[
        ("kind", Kind::Text),
        ("measure", Kind::Text),
        ("measured", Kind::Real),
        ("bound", Kind::Real),
        ("holds", Kind::Bool),
    ]);
    let mut table = Table::new(schema);
    let measure_name = if spec.kind.on_regret() { "regret" } else { "tracking" };
    let t = cfg.run.horizon as f64;
    let z1 = initial_play(cfg, built.sequence.dim());
    let big_k = match algo {
        Algorithm::MetaFixed { k, .. } | Algorithm::MetaAdaptive { k, .. } => *k as f64,
        _ => 0.0,
    };
    let solutions = traj.solutions.as_deref().ok_or(CoreError::MissingSolutions)?;
    let need = |v: Option<f64>| v.expect("validated bound constant");
    let bound_spec = match spec.kind {
        BoundKind::Contractive => BoundSpec::Contractive {
            c: need(spec.c),
            path: quadratic_path_length(solutions),
            init_dist: solutions.first().map(|s| (&z1 - s).norm()).unwrap_or(0.0),
        },
        BoundKind::Cyclic => BoundSpec::Cyclic {
            k: spec.period.expect("validated period") as f64,
            g: need(spec.gbound),
            mu: need(spec.mu),
            t,
        },
        BoundKind::FixedRegret | BoundKind::FixedTracking => {
            let (g, mu, d, k) =
                (need(spec.gbound), need(spec.mu), need(spec.diameter), spec.period.expect("validated period") as f64);
            if spec.kind == BoundKind::FixedRegret {
                BoundSpec::FixedRegret { g, mu, d, k, big_k, t }
            } else {
                BoundSpec::FixedTracking { g, mu, d, k, big_k, t }
            }
        }
        BoundKind::Adaptive => {
            let k = spec.period.expect("validated period");
            let d0 = (1..=k)
                .map(|s| built.sequence.solution(s).map(|z| (&z1 - z).norm()))
                .collect::<Option<Vec<_>>>()
                .ok_or(CoreError::MissingSolutions)?
                .into_iter()
                .fold(0.0, f64::max);
            BoundSpec::Adaptive { d0, kappa: need(spec.lip) / need(spec.mu), k: k as f64, big_k }
        }
        BoundKind::Lower => BoundSpec::AdversaryLower { d: need(spec.diameter), t },
    };
    let measure = if spec.kind.on_regret() {
        Measure::Regret { mu: spec.mu.or(built.meta.mu).unwrap_or(0.0) }
    } else {
        Measure::Tracking
    };
    let status = if traj.diverged() {
        let bound = tvvi_core::metrics::theoretical_bound(&bound_spec)?;
        table.push(vec![
            Value::Text(spec.kind.name().into()),
            Value::Text(measure_name.into()),
            Value::Diverged,
            Value::real(bound),
            Value::Bool(false),
        ]);
        Status::Diverged
    } else {
        let check = bound_check(&traj, &bound_spec, measure)?;
        table.push(vec![
            Value::Text(spec.kind.name().into()),
            Value::Text(measure_name.into()),
            Value::real(check.measured),
            Value::real(check.bound),
            Value::Bool(check.holds),
        ]);
        if check.holds {
            Status::Ok
        } else {
            Status::Failed
        }
    };
    Ok((table, status))
}

fn bifurcation(cfg: &ExperimentConfig, built: &BuiltScenario) -> Result<(Table, Status), RunError> {
    let spec = cfg.bifurcation.as_ref().expect("validated config has a scan");
    let map = compose_map(built, 1.0)?.rotated(spec.phase);
    let rows = bifurcation_scan(&map, spec.x0, &spec.scan)?;
    let mut table =
        Table::new(Schema::new(&[("eta", Kind::Real), ("classification", Kind::Text), ("cells", Kind::Indices)]));
    for r in rows {
        let class = match r.classification {
            Classification::Diverged => Value::Diverged,
            c => Value::Text(c.label()),
        };
        table.push(vec![Value::real(r.eta), class, Value::Indices(r.occupied_cells)]);
    }
    Ok((table, Status::Ok))
}

fn orbit(cfg: &ExperimentConfig, built: &BuiltScenario) -> Result<(Table, Status), RunError> {
    let spec = cfg.orbit.as_ref().expect("validated config has an orbit");
    let map: GdMap = compose_map(built, spec.eta)?.rotated(spec.phase);
    match spec.mode {
        OrbitMode::Iterate => {
            let orbit = iterate_orbit(&map, &Point::from_vec(spec.x0.clone()), spec.n_steps, spec.threshold);
            let mut table = Table::new(Schema::new(&[("n", Kind::Int), ("x", Kind::Vector), ("norm", Kind::Real)]));
            let bounded = match orbit.status {
                OrbitStatus::Diverged { step } => step,
                OrbitStatus::Bounded => orbit.points.len(),
            };
            for (n, p) in orbit.points[..bounded].iter().enumerate() {
                table.push(vec![Value::Int(n as i64), coords(p), Value::real(p.norm())]);
            }
            if let OrbitStatus::Diverged { step } = orbit.status {
                table.push(vec![Value::Int(step as i64), Value::Diverged, Value::Diverged]);
                return Ok((table, Status::Diverged));
            }
            Ok((table, Status::Ok))
        }
        OrbitMode::Newton => {
            let mut table = Table::new(Schema::new(&[
                ("period", Kind::Int),
                ("fixed_point", Kind::Real),
                ("residual", Kind::Real),
                ("orbit", Kind::Vector),
                ("multiplier", Kind::Real),
                ("stable", Kind::Bool),
                ("iterations", Kind::Int),
            ]));
            match newton_periodic_orbit(&map, spec.period, spec.x0[0], spec.tol, spec.max_iter)? {
                Some(po) => {
                    let st = orbit_stability(&map, &po.orbit)?;
                    table.push(vec![
                        Value::Int(spec.period as i64),
                        Value::real(po.fixed_point),
                        Value::real(po.residual),
                        Value::vector(&po.orbit),
                        Value::real(st.multiplier),
                        Value::Bool(st.stable),
                        Value::Int(po.iterations as i64),
                    ]);
                    Ok((table, Status::Ok))
                }
                None => {
                    warn!("Newton did not converge from x0 = {}", spec.x0[0]);
                    Ok((table, Status::Failed))
                }
            }
        }
        OrbitMode::Period3 => {
            let points = period3_search(&map, spec.lo, spec.hi, spec.n_grid, spec.tol)?;
            let mut table =
                Table::new(Schema::new(&[("x", Kind::Real), ("orbit", Kind::Vector), ("step_orbit", Kind::Vector)]));
            for p in points {
                table.push(vec![Value::real(p.x), Value::vector(&p.orbit), Value::vector(&p.step_orbit)]);
            }
            Ok((table, Status::Ok))
        }
    }
}

fn star(cfg: &ExperimentConfig, built: &BuiltScenario) -> Result<(Table, Status), RunError> {
    let spec = cfg.star.as_ref().expect("validated config has a star scan");
    let schema = match spec.output {
        StarOutput::Summary => Schema::new(&[
            ("eta", Kind::Real),
            ("n_samples", Kind::Int),
            ("diverged", Kind::Int),
            ("radial_score", Kind::Real),
            ("final_avg_norm", Kind::Real),
        ]),
        StarOutput::Series => Schema::new(&[("eta", Kind::Real), ("step", Kind::Int), ("avg_norm", Kind::Real)]),
        StarOutput::Tail => Schema::new(&[("eta", Kind::Real), ("x", Kind::Vector)]),
    };
    let mut table = Table::new(schema);
    let mut status = Status::Ok;
    for &eta in &spec.etas {
        let map = compose_map(built, eta)?;
        match star_scan(&map, &spec.scan) {
            Ok(s) => match spec.output {
                StarOutput::Summary => table.push(vec![
                    Value::real(eta),
                    Value::Int(s.n_samples as i64),
                    Value::Int(s.diverged_count as i64),
                    Value::real(s.radial_score),
                    Value::real(*s.avg_norm_series.last().expect("at least one step")),
                ]),
                StarOutput::Series => {
                    for (step, v) in s.avg_norm_series.iter().enumerate() {
                        table.push(vec![Value::real(eta), Value::Int(step as i64), Value::real(*v)]);
                    }
                }
                StarOutput::Tail => {
                    for p in &s.tail_points {
                        table.push(vec![Value::real(eta), coords(p)]);
                    }
                }
            },
            Err(CoreError::AllDiverged) => {
                warn!("every orbit diverged at eta = {eta}");
                status = Status::Diverged;
                table.push(match spec.output {
                    StarOutput::Summary => vec![
                        Value::real(eta),
                        Value::Int(spec.scan.n_samples as i64),
                        Value::Int(spec.scan.n_samples as i64),
                        Value::Diverged,
                        Value::Diverged,
                    ],
                    StarOutput::Series => vec![Value::real(eta), Value::Diverged, Value::Diverged],
                    StarOutput::Tail => vec![Value::real(eta), Value::Diverged],
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((table, status))
}

fn verify(cfg: &ExperimentConfig, mut built: BuiltScenario) -> Result<(Table, Status), RunError> {
    let spec = cfg.verify.as_ref().expect("validated config has verify settings");
    let ops: Vec<(usize, Operator)> = if built.sequence.is_adaptive() {
        let play = Point::zeros(built.sequence.dim());
        (1..=spec.rounds).map(|t| Ok((t, built.sequence.reveal(t, &play)?))).collect::<Result<_, CoreError>>()?
    } else {
        let n = built.sequence.period().unwrap_or(spec.rounds);
        (1..=n).map(|t| Ok((t, built.sequence.at(t)?))).collect::<Result<_, CoreError>>()?
    };
    let mut table = Table::new(Schema::new(&[
        ("t", Kind::Int),
        ("check", Kind::Text),
        ("constant", Kind::Real),
        ("passed", Kind::Bool),
    ]));
    let mut all = true;
    let mut push = |t: usize, check: &str, constant: f64, passed: bool| {
        all &= passed;
        table.push(vec![Value::Int(t as i64), Value::Text(check.into()), Value::real(constant), Value::Bool(passed)]);
    };
    for (t, op) in &ops {
        let sampler = Sampler::new(spec.samples, cfg.run.seed.wrapping_add(*t as u64)).with_half_width(spec.half_width);
        let domain = &built.domain;
        if let Some(mu) = op.mu {
            push(*t, "strong_monotone", mu, check_strong_monotone(op, mu, domain, sampler));
        }
        if let Some(lip) = op.lip {
            push(*t, "lipschitz", lip, check_lipschitz(op, lip, domain, sampler));
        }
        if let (Some(mu), Some(z)) = (built.meta.mu_rsi, &op.solution) {
            push(*t, "restricted_secant", mu, check_restricted_secant(op, mu, z, domain, sampler));
        }
        if let Some(dev) = relative_gradient_deviation(op, domain, sampler) {
            push(*t, "gradient", spec.grad_tol, dev <= spec.grad_tol);
        }
    }
    Ok((table, if all { Status::Ok } else { Status::Failed }))
}
