//! Solvers selected by name at run time.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::coupled::coupled_setup;
use super::driver::prepare;
use super::fbf::{fbf_setup, tseng_setup};
use super::{
    solve_coupled, solve_fbf_memory, solve_strong_anchored, solve_tseng, solve_weak, CoupledMode,
    CoupledProblem, KernelSchedule, KuhnTuckerPoint, MapSchedule, PerturbationPolicy, SolveReport,
    SolverConfig, StageSchedule,
};
use crate::error::{Error, Result};
use crate::kernels::MDecomposition;
use crate::operators::{MapRef, ScaledIdentity, SetRef, Zero};
use crate::space::Vector;

/// A monotone inclusion `0 ∈ Ax + Bx` with everything a solver may need.
#[derive(Debug, Clone)]
pub struct InclusionProblem {
    pub m: MDecomposition,
    /// Kernels for the generic solvers.
    pub kernels: Option<KernelSchedule>,
    /// `W_n` for the forward-backward-forward solver; identity when absent.
    pub w: Option<MapSchedule>,
    pub policy: PerturbationPolicy,
    pub start: Vector,
    /// Haugazeau anchor for the strong solver; the start when absent.
    pub anchor: Option<Vector>,
}

#[derive(Debug, Clone)]
pub struct CoupledSetup {
    pub problem: CoupledProblem,
    pub stages: StageSchedule,
    pub policy: PerturbationPolicy,
    pub start: KuhnTuckerPoint,
    pub mode: CoupledMode,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Inclusion(InclusionProblem),
    Coupled(CoupledSetup),
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;

    /// The checks `solve` performs before its first iteration: dimensions,
    /// configuration and constant regimes.
    fn validate(&self, problem: &Problem, cfg: &SolverConfig) -> Result<()>;

    fn solve(&self, problem: &Problem, cfg: &SolverConfig) -> Result<SolveReport>;
}

fn inclusion<'a>(problem: &'a Problem, solver: &str) -> Result<&'a InclusionProblem> {
    match problem {
        Problem::Inclusion(p) => Ok(p),
        Problem::Coupled(_) => Err(Error::config(format!(
            "solver `{solver}` expects an inclusion problem"
        ))),
    }
}

fn kernels<'a>(p: &'a InclusionProblem, solver: &str) -> Result<&'a KernelSchedule> {
    p.kernels
        .as_ref()
        .ok_or_else(|| Error::config(format!("solver `{solver}` needs a kernel")))
}

fn forward_and_set(p: &InclusionProblem) -> (SetRef, MapRef) {
    let b = p
        .m
        .forward()
        .cloned()
        .unwrap_or_else(|| Arc::new(Zero::new(p.m.dim())));
    (p.m.set_ref().clone(), b)
}

fn unit_w(p: &InclusionProblem) -> MapSchedule {
    p.w.clone()
        .unwrap_or_else(|| MapSchedule::Fixed(Arc::new(ScaledIdentity::new(p.m.dim(), 1.0).expect("unit factor"))))
}

fn coupled(problem: &Problem) -> Result<&CoupledSetup> {
    match problem {
        Problem::Coupled(s) => Ok(s),
        Problem::Inclusion(_) => Err(Error::config("solver `coupled` expects a coupled problem")),
    }
}

struct Weak;
struct Strong;
struct Fbf;
struct Tseng;
struct Coupled;

impl Solver for Weak {
    fn name(&self) -> &'static str {
        "weak"
    }

    fn validate(&self, problem: &Problem, cfg: &SolverConfig) -> Result<()> {
        let p = inclusion(problem, self.name())?;
        prepare(&p.m, kernels(p, self.name())?, &p.policy, cfg, &p.start).map(|_| ())
    }

    fn solve(&self, problem: &Problem, cfg: &SolverConfig) -> Result<SolveReport> {
        let p = inclusion(problem, self.name())?;
        solve_weak(&p.m, kernels(p, self.name())?, &p.policy, cfg, &p.start)
    }
}

impl Solver for Strong {
    fn name(&self) -> &'static str {
        "strong"
    }

    fn validate(&self, problem: &Problem, cfg: &SolverConfig) -> Result<()> {
        let p = inclusion(problem, self.name())?;
        prepare(&p.m, kernels(p, self.name())?, &p.policy, cfg, &p.start)?;
        crate::error::check_dim(p.m.dim(), p.anchor.as_ref().unwrap_or(&p.start).dim())
    }

    fn solve(&self, problem: &Problem, cfg: &SolverConfig) -> Result<SolveReport> {
        let p = inclusion(problem, self.name())?;
        let anchor = p.anchor.as_ref().unwrap_or(&p.start);
        solve_strong_anchored(&p.m, kernels(p, self.name())?, &p.policy, cfg, &p.start, anchor)
    }
}

impl Solver for Fbf {
    fn name(&self) -> &'static str {
        "fbf"
    }

    fn validate(&self, problem: &Problem, cfg: &SolverConfig) -> Result<()> {
        let p = inclusion(problem, self.name())?;
        let (a, b) = forward_and_set(p);
        fbf_setup(&a, &b, &unit_w(p), &p.policy, cfg, &p.start).map(|_| ())
    }

    fn solve(&self, problem: &Problem, cfg: &SolverConfig) -> Result<SolveReport> {
        let p = inclusion(problem, self.name())?;
        let (a, b) = forward_and_set(p);
        solve_fbf_memory(&a, &b, &unit_w(p), &p.policy, cfg, &p.start)
    }
}

impl Solver for Tseng {
    fn name(&self) -> &'static str {
        "tseng"
    }

    fn validate(&self, problem: &Problem, cfg: &SolverConfig) -> Result<()> {
        let p = inclusion(problem, self.name())?;
        if p.policy != PerturbationPolicy::None {
            return Err(Error::config("solver `tseng` does not take a perturbation policy"));
        }
        let (a, b) = forward_and_set(p);
        tseng_setup(&a, &b, cfg, &p.start).map(|_| ())
    }

    fn solve(&self, problem: &Problem, cfg: &SolverConfig) -> Result<SolveReport> {
        self.validate(problem, cfg)?;
        let p = inclusion(problem, self.name())?;
        let (a, b) = forward_and_set(p);
        solve_tseng(&a, &b, cfg, &p.start)
    }
}

impl Solver for Coupled {
    fn name(&self) -> &'static str {
        "coupled"
    }

    fn validate(&self, problem: &Problem, cfg: &SolverConfig) -> Result<()> {
        let s = coupled(problem)?;
        coupled_setup(&s.problem, &s.stages, &s.policy, cfg, &s.start).map(|_| ())
    }

    fn solve(&self, problem: &Problem, cfg: &SolverConfig) -> Result<SolveReport> {
        let s = coupled(problem)?;
        let (_, report) = solve_coupled(&s.problem, &s.stages, &s.policy, cfg, &s.start, s.mode)?;
        Ok(report)
    }
}

/// Named solvers.
pub struct SolverRegistry {
    entries: BTreeMap<&'static str, Box<dyn Solver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        SolverRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// `weak`, `strong`, `fbf`, `tseng` and `coupled`.
    pub fn standard() -> Self {
        let mut r = SolverRegistry::empty();
        r.register(Box::new(Weak));
        r.register(Box::new(Strong));
        r.register(Box::new(Fbf));
        r.register(Box::new(Tseng));
        r.register(Box::new(Coupled));
        r
    }

    pub fn register(&mut self, solver: Box<dyn Solver>) {
        self.entries.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Solver> {
        self.entries
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "solver",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ScaledKernel;

    #[test]
    fn lookup_by_name() {
        let reg = SolverRegistry::standard();
        assert_eq!(reg.names().collect::<Vec<_>>(), ["coupled", "fbf", "strong", "tseng", "weak"]);
        assert!(matches!(reg.get("newton"), Err(Error::UnknownName { .. })));

        let problem = Problem::Inclusion(InclusionProblem {
            m: MDecomposition::set_only(Arc::new(ScaledIdentity::new(2, 1.0).unwrap())),
            kernels: Some(KernelSchedule::Fixed(Arc::new(ScaledKernel::identity(2)))),
            w: None,
            policy: PerturbationPolicy::None,
            start: Vector::from_slice(&[1.0, 1.0]).unwrap(),
            anchor: None,
        });
        for name in ["weak", "strong", "fbf", "tseng"] {
            let r = reg.get(name).unwrap().solve(&problem, &SolverConfig::default()).unwrap();
            assert!(r.converged(), "{name}");
            assert!(r.point.norm() < 1e-6, "{name}");
        }
        assert!(reg.get("coupled").unwrap().solve(&problem, &SolverConfig::default()).is_err());
        assert!(reg.get("coupled").unwrap().validate(&problem, &SolverConfig::default()).is_err());
        let bad = SolverConfig {
            epsilon: 2.0,
            ..SolverConfig::default()
        };
        for name in ["weak", "strong", "fbf", "tseng"] {
            assert!(reg.get(name).unwrap().validate(&problem, &bad).is_err(), "{name}");
            assert!(reg.get(name).unwrap().validate(&problem, &SolverConfig::default()).is_ok(), "{name}");
        }
    }
}
