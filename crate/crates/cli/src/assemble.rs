//! Resolve a problem file against the catalogs and the solver registry.

use warpres::algorithms::{
    CoupledMode, CoupledProblem, CoupledSetup, DualBlock, InclusionProblem, KernelSchedule, Link, MapSchedule,
    PerturbationPolicy, PrimalBlock, Problem, Relaxation, Schedule, SolverConfig, SolverRegistry, StageSchedule,
};
use warpres::kernels::{standard_kernels, KernelContext, MDecomposition};
use warpres::operators::{standard_library, MapRef, OperatorCatalog};
use warpres::{LinearMap, ProductVector, Vector};

use crate::error::CliError;
use crate::file::{
    Kind, OperatorSpec, PolicySpec, ProblemFile, RelaxSpec, Rule, ScheduleSpec, SolutionSpec, SolverSpec,
};

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub algo: Option<String>,
    pub max_iter: Option<usize>,
    pub tol_residual: Option<f64>,
    pub tol_step: Option<f64>,
    pub relax: Option<RelaxSpec>,
}

impl Overrides {
    pub fn apply(&self, file: &mut ProblemFile) {
        let s = &mut file.solver;
        if let Some(a) = &self.algo {
            s.algo = a.clone();
        }
        if let Some(n) = self.max_iter {
            s.max_iter = Some(n);
        }
        if let Some(t) = self.tol_residual {
            s.tol_residual = Some(t);
        }
        if let Some(t) = self.tol_step {
            s.tol_step = Some(t);
        }
        if let Some(r) = &self.relax {
            s.relax = Some(r.clone());
        }
    }
}

/// A problem ready to hand to a solver.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub algo: String,
    pub problem: Problem,
    pub cfg: SolverConfig,
    /// Declared zero in the solver's coordinates and the accepted distance.
    pub solution: Option<(Vector, f64)>,
}

impl Assembled {
    pub fn start(&self) -> Vector {
        match &self.problem {
            Problem::Inclusion(p) => p.start.clone(),
            Problem::Coupled(s) => s.start.flatten(),
        }
    }
}

/// Build and validate: every name is resolved, every dimension checked and
/// the solver's constant regimes tested before anything runs.
pub fn assemble(file: &ProblemFile) -> Result<Assembled, CliError> {
    let registry = SolverRegistry::standard();
    let solver = registry.get(&file.solver.algo)?;
    let mut cfg = solver_config(&file.solver)?;
    let (problem, solution) = match file.kind {
        Kind::Inclusion => inclusion(file, &cfg)?,
        Kind::Coupled => coupled(file)?,
    };
    if let Some((z, _)) = &solution {
        cfg.watch.push(z.clone());
    }
    solver.validate(&problem, &cfg)?;
    Ok(Assembled {
        algo: solver.name().to_string(),
        problem,
        cfg,
        solution,
    })
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn vector(what: &str, coords: &[f64], dim: usize) -> Result<Vector, CliError> {
    if coords.len() != dim {
        return Err(invalid(format!("{what} has {} entries, expected {dim}", coords.len())));
    }
    Ok(Vector::from_slice(coords)?)
}

fn schedule(spec: &ScheduleSpec) -> Schedule {
    match spec {
        ScheduleSpec::Constant(c) => Schedule::Constant(*c),
        ScheduleSpec::Rule(Rule::Geometric { start, ratio, limit }) => Schedule::Geometric {
            start: *start,
            ratio: *ratio,
            limit: *limit,
        },
        ScheduleSpec::Rule(Rule::List { values }) => Schedule::List(values.clone()),
    }
}

fn solver_config(s: &SolverSpec) -> Result<SolverConfig, CliError> {
    let d = SolverConfig::default();
    let relaxation = match &s.relax {
        None => d.relaxation,
        Some(RelaxSpec::Schedule(spec)) => Relaxation::Schedule(schedule(spec)),
        Some(RelaxSpec::Named(n)) if n == "tseng" => Relaxation::TsengImplied,
        Some(RelaxSpec::Named(n)) => {
            return Err(invalid(format!("unknown relaxation `{n}`; expected a number, a rule or \"tseng\"")))
        }
    };
    Ok(SolverConfig {
        epsilon: s.epsilon.unwrap_or(d.epsilon),
        relaxation,
        gamma: s.gamma.as_ref().map(schedule),
        max_iter: s.max_iter.unwrap_or(d.max_iter),
        tol_residual: s.tol_residual.unwrap_or(d.tol_residual),
        tol_step: s.tol_step.unwrap_or(d.tol_step),
        watch: Vec::new(),
        stall_limit: s.stall_limit.unwrap_or(d.stall_limit),
    })
}

fn policy(spec: Option<&PolicySpec>, dim: usize) -> Result<PerturbationPolicy, CliError> {
    Ok(match spec {
        None | Some(PolicySpec::None) => PerturbationPolicy::None,
        Some(PolicySpec::Additive { direction, magnitude }) => PerturbationPolicy::Additive {
            direction: vector("policy direction", direction, dim)?,
            magnitude: schedule(magnitude),
        },
        Some(PolicySpec::Inertial { alpha }) => PerturbationPolicy::Inertial {
            alpha: schedule(alpha),
        },
        Some(PolicySpec::Memory {
            weights,
            direction,
            magnitude,
        }) => {
            let additive = match (direction, magnitude) {
                (None, None) => None,
                (Some(d), Some(m)) => Some((vector("policy direction", d, dim)?, schedule(m))),
                _ => return Err(invalid("memory policy needs both direction and magnitude, or neither")),
            };
            PerturbationPolicy::Memory {
                weights: weights.clone(),
                additive,
            }
        }
    })
}

fn forbid(present: bool, what: &str, kind: &str) -> Result<(), CliError> {
    if present {
        return Err(invalid(format!("`{what}` does not apply to {kind} problems")));
    }
    Ok(())
}

fn map(lib: &OperatorCatalog, spec: &OperatorSpec, dim: usize) -> Result<MapRef, CliError> {
    Ok(lib.single_valued(&spec.name, &spec.catalog_params(), dim)?)
}

fn inclusion(file: &ProblemFile, cfg: &SolverConfig) -> Result<(Problem, Option<(Vector, f64)>), CliError> {
    forbid(!file.primal.is_empty(), "primal", "inclusion")?;
    forbid(!file.dual.is_empty(), "dual", "inclusion")?;
    forbid(!file.link.is_empty(), "link", "inclusion")?;
    forbid(file.solver.mode.is_some(), "solver.mode", "inclusion")?;
    let dim = file.dim.ok_or_else(|| invalid("inclusion problems need `dim`"))?;
    if dim == 0 {
        return Err(invalid("`dim` must be positive"));
    }
    let lib = standard_library();
    let set = file.set.as_ref().ok_or_else(|| invalid("inclusion problems need a [set] block"))?;
    let a = lib.set_valued(&set.name, &set.catalog_params(), dim)?;
    let b = file.forward.as_ref().map(|f| map(&lib, f, dim)).transpose()?;
    let m = MDecomposition::new(a, b.clone())?;

    let gamma = match &cfg.gamma {
        Some(Schedule::Constant(g)) => Some(*g),
        _ => None,
    };
    let ctx = KernelContext { dim, forward: b, gamma };
    let kernel = file.kernel.clone().unwrap_or_else(|| OperatorSpec::named("identity"));
    let k = standard_kernels().build(&kernel.name, &kernel.catalog_params(), &ctx)?;
    let w = file.w.as_ref().map(|w| map(&lib, w, dim)).transpose()?;

    let s = &file.solver;
    let start = match &s.start {
        Some(c) => vector("solver.start", c, dim)?,
        None => Vector::zeros(dim),
    };
    let anchor = s.anchor.as_ref().map(|c| vector("solver.anchor", c, dim)).transpose()?;
    let solution = match &file.solution {
        None => None,
        Some(SolutionSpec { dual: Some(_), .. }) => {
            return Err(invalid("`solution.dual` applies to coupled problems only"))
        }
        Some(sol) => Some((vector("solution.point", &sol.point, dim)?, sol.tolerance)),
    };
    let problem = InclusionProblem {
        m,
        kernels: Some(KernelSchedule::Fixed(k)),
        w: w.map(MapSchedule::Fixed),
        policy: policy(s.policy.as_ref(), dim)?,
        start,
        anchor,
    };
    Ok((Problem::Inclusion(problem), solution))
}

fn coupled(file: &ProblemFile) -> Result<(Problem, Option<(Vector, f64)>), CliError> {
    forbid(file.dim.is_some(), "dim", "coupled")?;
    forbid(file.set.is_some(), "set", "coupled")?;
    forbid(file.forward.is_some(), "forward", "coupled")?;
    forbid(file.w.is_some(), "w", "coupled")?;
    forbid(file.kernel.is_some(), "kernel", "coupled")?;
    forbid(file.solver.anchor.is_some(), "solver.anchor", "coupled")?;
    let lib = standard_library();

    let mut primal = Vec::with_capacity(file.primal.len());
    for (i, p) in file.primal.iter().enumerate() {
        let a = lib.set_valued(&p.set.name, &p.set.catalog_params(), p.dim)?;
        let s = match &p.s {
            Some(c) => vector(&format!("primal[{i}].s"), c, p.dim)?,
            None => Vector::zeros(p.dim),
        };
        let mut blk = PrimalBlock::new(a, s);
        if let Some(f) = &p.forward {
            blk = blk.with_forward(map(&lib, f, p.dim)?);
        }
        blk.alpha = p.alpha.unwrap_or(blk.alpha);
        blk.chi = p.chi.unwrap_or(blk.chi);
        blk.epsilon = p.epsilon.unwrap_or(blk.epsilon);
        primal.push(blk);
    }
    let mut dual = Vec::with_capacity(file.dual.len());
    for (j, d) in file.dual.iter().enumerate() {
        let b = lib.set_valued(&d.set.name, &d.set.catalog_params(), d.dim)?;
        let r = match &d.r {
            Some(c) => vector(&format!("dual[{j}].r"), c, d.dim)?,
            None => Vector::zeros(d.dim),
        };
        let mut blk = DualBlock::new(b, r);
        if let Some(f) = &d.forward {
            blk = blk.with_forward(map(&lib, f, d.dim)?);
        }
        blk.beta = d.beta.unwrap_or(blk.beta);
        blk.kappa = d.kappa.unwrap_or(blk.kappa);
        blk.delta = d.delta.unwrap_or(blk.delta);
        dual.push(blk);
    }
    let links = file
        .link
        .iter()
        .map(|l| {
            Ok(Link {
                dual: l.dual,
                primal: l.primal,
                map: LinearMap::from_rows(&l.matrix)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let problem = CoupledProblem::new(primal, dual, links)?;

    let total = problem.layout().total();
    let start = match &file.solver.start {
        Some(c) => problem.split(&vector("solver.start", c, total)?)?,
        None => problem.zero_point(),
    };
    let mode = match file.solver.mode.as_deref() {
        None | Some("delegated") => CoupledMode::Delegated,
        Some("literal") => CoupledMode::Literal,
        Some(other) => {
            return Err(invalid(format!("unknown mode `{other}`; expected \"delegated\" or \"literal\"")))
        }
    };
    let solution = match &file.solution {
        None => None,
        Some(sol) => {
            let dual = sol
                .dual
                .as_ref()
                .ok_or_else(|| invalid("coupled solutions need both `point` and `dual`"))?;
            let x = vector("solution.point", &sol.point, problem.primal_layout().total())?;
            let v = vector("solution.dual", dual, problem.dual_layout().total())?;
            let kt = problem.lift(
                ProductVector::split(&x, problem.primal_layout())?,
                ProductVector::split(&v, problem.dual_layout())?,
            )?;
            Some((kt.flatten(), sol.tolerance))
        }
    };
    let setup = CoupledSetup {
        stages: StageSchedule::Fixed(problem.default_stage()),
        policy: policy(file.solver.policy.as_ref(), total)?,
        start,
        mode,
        problem,
    };
    Ok((Problem::Coupled(setup), solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::file::from_toml;

    const BALL: &str = r#"
kind = "inclusion"
dim = 2

[set]
name = "ball"
radius = 1.0

[solver]
start = [3.0, 4.0]
"#;

    #[test]
    fn minimal_file_assembles() {
        let a = assemble(&from_toml(BALL, "ball").unwrap()).unwrap();
        assert_eq!(a.algo, "weak");
        assert_eq!(a.start().to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut f = from_toml(BALL, "ball").unwrap();
        Overrides {
            algo: Some("strong".into()),
            max_iter: Some(7),
            relax: Some(RelaxSpec::Schedule(ScheduleSpec::Constant(1.5))),
            ..Overrides::default()
        }
        .apply(&mut f);
        let a = assemble(&f).unwrap();
        assert_eq!(a.algo, "strong");
        assert_eq!(a.cfg.max_iter, 7);
        assert_eq!(a.cfg.relaxation, Relaxation::Schedule(Schedule::Constant(1.5)));
    }

    #[test]
    fn misplaced_blocks_are_rejected() {
        let mut f = from_toml(BALL, "ball").unwrap();
        f.solver.start = Some(vec![1.0]);
        assert!(assemble(&f).unwrap_err().to_string().contains("expected 2"));
        let mut f = from_toml(BALL, "ball").unwrap();
        f.kind = Kind::Coupled;
        assert!(assemble(&f).is_err());
        let mut f = from_toml(BALL, "ball").unwrap();
        f.solver.relax = Some(RelaxSpec::Named("fast".into()));
        assert!(assemble(&f).is_err());
    }

    #[test]
    fn relaxation_out_of_range_fails_before_running() {
        let mut f = from_toml(BALL, "ball").unwrap();
        f.solver.relax = Some(RelaxSpec::Schedule(ScheduleSpec::Constant(2.5)));
        let err = assemble(&f).unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
    }
}
