//! Coupled systems of primal and dual inclusions and their Kuhn–Tucker
//! reformulation.
//!
//! Primal: find `x_i` with `s_i* ∈ A_i x_i + C_i x_i + Σ_j L_ji*(B_j + D_j)(Σ_k L_jk x_k − r_j)`.
//! The Kuhn–Tucker operator on `(x, y, v*)` is
//! `((A_i − s_i*) + C_i)x_i + Σ_j L_ji* v_j*`, `(B_j + D_j)y_j − v_j*`,
//! `r_j − Σ_i L_ji x_i + y_j`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::driver::{drive, solve_weak, Step, Update};
use super::{KernelSchedule, PerturbationPolicy, SolveReport, SolverConfig};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{coupled_kernel, solve_base, BaseBlock, CoupledKernel, CoupledStage, MDecomposition};
use crate::operators::{
    resolvent, AffineForm, Constant, MapRef, ProductOperator, ScaledIdentity, SetRef, Shifted,
    SingleValued,
};
use crate::space::{Layout, LinearMap, ProductVector, Vector};

/// Primal block `i`: `A_i`, optional `C_i`, `s_i*` and the constants
/// `(α_i, χ_i, ε_i)` bounding the stage operators `F_i`.
#[derive(Debug, Clone)]
pub struct PrimalBlock {
    pub a: SetRef,
    pub c: Option<MapRef>,
    pub s_star: Vector,
    pub alpha: f64,
    pub chi: f64,
    pub epsilon: f64,
}

impl PrimalBlock {
    pub fn new(a: SetRef, s_star: Vector) -> Self {
        PrimalBlock {
            a,
            c: None,
            s_star,
            alpha: 1.0,
            chi: 1.0,
            epsilon: 0.01,
        }
    }

    pub fn with_forward(mut self, c: MapRef) -> Self {
        self.c = Some(c);
        self
    }

    pub fn with_constants(mut self, alpha: f64, chi: f64, epsilon: f64) -> Self {
        self.alpha = alpha;
        self.chi = chi;
        self.epsilon = epsilon;
        self
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Lipschitz constant of `C_i`, zero when absent.
    pub fn mu(&self) -> f64 {
        self.c.as_ref().map_or(0.0, |c| c.lipschitz())
    }
}

/// Dual block `j`: `B_j`, optional `D_j`, `r_j` and the constants
/// `(β_j, κ_j, δ_j)` bounding the stage operators `W_j`.
#[derive(Debug, Clone)]
pub struct DualBlock {
    pub b: SetRef,
    pub d: Option<MapRef>,
    pub r: Vector,
    pub beta: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl DualBlock {
    pub fn new(b: SetRef, r: Vector) -> Self {
        DualBlock {
            b,
            d: None,
            r,
            beta: 1.0,
            kappa: 1.0,
            delta: 0.01,
        }
    }

    pub fn with_forward(mut self, d: MapRef) -> Self {
        self.d = Some(d);
        self
    }

    pub fn with_constants(mut self, beta: f64, kappa: f64, delta: f64) -> Self {
        self.beta = beta;
        self.kappa = kappa;
        self.delta = delta;
        self
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// Lipschitz constant of `D_j`, zero when absent.
    pub fn nu(&self) -> f64 {
        self.d.as_ref().map_or(0.0, |d| d.lipschitz())
    }
}

/// Coupling `L_ji` from primal block `primal` to dual block `dual`.
#[derive(Debug, Clone)]
pub struct Link {
    pub dual: usize,
    pub primal: usize,
    pub map: LinearMap,
}

/// The single-valued part `(x, y, v*) ↦ (Cx + L*v*, Dy − v*, y − Lx)` of the
/// Kuhn–Tucker operator.
#[derive(Debug)]
pub struct KtForward {
    c: Vec<Option<MapRef>>,
    d: Vec<Option<MapRef>>,
    l: LinearMap,
    primal: Layout,
    dual: Layout,
    lipschitz: f64,
}

fn apply_blocks(ops: &[Option<MapRef>], layout: &Layout, x: &Vector) -> Vector {
    let parts: Vec<Vector> = ops
        .iter()
        .zip(layout.dims().iter().zip(layout.offsets()))
        .map(|(op, (&d, at))| match op {
            Some(op) => op.apply(&x.segment(at, d)),
            None => Vector::zeros(d),
        })
        .collect();
    Vector::concat(&parts)
}

fn block_form(ops: &[Option<MapRef>], layout: &Layout) -> Option<AffineForm> {
    let n = layout.total();
    let mut m = DMatrix::zeros(n, n);
    let mut b = nalgebra::DVector::zeros(n);
    for (op, (&d, at)) in ops.iter().zip(layout.dims().iter().zip(layout.offsets())) {
        if let Some(op) = op {
            let (bm, bb) = op.affine_form()?;
            m.view_mut((at, at), (d, d)).copy_from(&bm);
            b.rows_mut(at, d).copy_from(&bb);
        }
    }
    Some((m, b))
}

impl KtForward {
    /// The skew part `(x, y, v*) ↦ (L*v*, −v*, y − Lx)` as a matrix.
    fn skew_matrix(&self) -> DMatrix<f64> {
        let (nx, nz) = (self.primal.total(), self.dual.total());
        let mut s = DMatrix::zeros(nx + 2 * nz, nx + 2 * nz);
        let l = self.l.matrix();
        s.view_mut((0, nx + nz), (nx, nz)).copy_from(&l.transpose());
        s.view_mut((nx + nz, 0), (nz, nx)).copy_from(&(-l));
        for k in 0..nz {
            s[(nx + k, nx + nz + k)] = -1.0;
            s[(nx + nz + k, nx + k)] = 1.0;
        }
        s
    }
}

impl SingleValued for KtForward {
    fn name(&self) -> &str {
        "kuhn_tucker_forward"
    }

    fn dim(&self) -> usize {
        self.primal.total() + 2 * self.dual.total()
    }

    fn apply(&self, p: &Vector) -> Vector {
        assert_eq!(p.dim(), self.dim(), "vector dimension mismatch");
        let (nx, nz) = (self.primal.total(), self.dual.total());
        let x = p.segment(0, nx);
        let y = p.segment(nx, nz);
        let v = p.segment(nx + nz, nz);
        let lt_v = self.l.adjoint_apply(&v).expect("layout checked");
        let lx = self.l.apply(&x).expect("layout checked");
        let out_x = apply_blocks(&self.c, &self.primal, &x) + lt_v;
        let out_y = apply_blocks(&self.d, &self.dual, &y) - &v;
        let out_v = &y - lx;
        Vector::concat(&[out_x, out_y, out_v])
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let (nx, nz) = (self.primal.total(), self.dual.total());
        let (cm, cb) = block_form(&self.c, &self.primal)?;
        let (dm, db) = block_form(&self.d, &self.dual)?;
        let mut m = self.skew_matrix();
        let mut b = nalgebra::DVector::zeros(nx + 2 * nz);
        let mut view = m.view_mut((0, 0), (nx, nx));
        view += &cm;
        let mut view = m.view_mut((nx, nx), (nz, nz));
        view += &dm;
        b.rows_mut(0, nx).copy_from(&cb);
        b.rows_mut(nx, nz).copy_from(&db);
        Some((m, b))
    }
}

/// A validated coupled system together with its Kuhn–Tucker operator.
#[derive(Debug, Clone)]
pub struct CoupledProblem {
    primal: Vec<PrimalBlock>,
    dual: Vec<DualBlock>,
    links: Vec<Link>,
    l: LinearMap,
    primal_layout: Layout,
    dual_layout: Layout,
    layout: Layout,
    forward: MapRef,
    kt: MDecomposition,
    skew_norm: f64,
}

fn positive(label: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{label} must be positive, got {value}")))
    }
}

impl CoupledProblem {
    pub fn new(primal: Vec<PrimalBlock>, dual: Vec<DualBlock>, links: Vec<Link>) -> Result<Self> {
        if primal.is_empty() || dual.is_empty() {
            return Err(Error::config("coupled problem needs at least one primal and one dual block"));
        }
        for (i, p) in primal.iter().enumerate() {
            check_dim(p.dim(), p.s_star.dim())?;
            if let Some(c) = &p.c {
                check_dim(p.dim(), c.dim())?;
                if !c.is_monotone() {
                    return Err(Error::config(format!("C[{i}] is not monotone")));
                }
            }
            positive(&format!("alpha[{i}]"), p.alpha)?;
            if p.chi < p.alpha {
                return Err(Error::config(format!("chi[{i}] = {} is below alpha[{i}] = {}", p.chi, p.alpha)));
            }
            let bound = p.alpha / (p.mu() + 1.0);
            if !(p.epsilon > 0.0 && p.epsilon < bound) {
                return Err(Error::config(format!(
                    "epsilon[{i}] = {} must lie in ]0, alpha/(mu + 1)[ = ]0, {bound}[",
                    p.epsilon
                )));
            }
        }
        for (j, d) in dual.iter().enumerate() {
            check_dim(d.dim(), d.r.dim())?;
            if let Some(op) = &d.d {
                check_dim(d.dim(), op.dim())?;
                if !op.is_monotone() {
                    return Err(Error::config(format!("D[{j}] is not monotone")));
                }
            }
            positive(&format!("beta[{j}]"), d.beta)?;
            if d.kappa < d.beta {
                return Err(Error::config(format!("kappa[{j}] = {} is below beta[{j}] = {}", d.kappa, d.beta)));
            }
            let bound = d.beta / (d.nu() + 1.0);
            if !(d.delta > 0.0 && d.delta < bound) {
                return Err(Error::config(format!(
                    "delta[{j}] = {} must lie in ]0, beta/(nu + 1)[ = ]0, {bound}[",
                    d.delta
                )));
            }
        }

        let primal_layout = Layout::new(primal.iter().map(PrimalBlock::dim).collect());
        let dual_layout = Layout::new(dual.iter().map(DualBlock::dim).collect());
        let (px, dz) = (primal_layout.offsets(), dual_layout.offsets());
        let mut l = DMatrix::zeros(dual_layout.total(), primal_layout.total());
        let mut seen = std::collections::BTreeSet::new();
        for link in &links {
            if link.primal >= primal.len() || link.dual >= dual.len() {
                return Err(Error::config(format!(
                    "link ({}, {}) refers to a missing block",
                    link.dual, link.primal
                )));
            }
            if !seen.insert((link.dual, link.primal)) {
                return Err(Error::config(format!("duplicate link ({}, {})", link.dual, link.primal)));
            }
            check_dim(dual[link.dual].dim(), link.map.rows())?;
            check_dim(primal[link.primal].dim(), link.map.cols())?;
            l.view_mut((dz[link.dual], px[link.primal]), (link.map.rows(), link.map.cols()))
                .copy_from(link.map.matrix());
        }
        let l = LinearMap::from_matrix(l)?;

        let mut fwd = KtForward {
            c: primal.iter().map(|p| p.c.clone()).collect(),
            d: dual.iter().map(|d| d.d.clone()).collect(),
            l: l.clone(),
            primal: primal_layout.clone(),
            dual: dual_layout.clone(),
            lipschitz: 0.0,
        };
        let skew_norm = LinearMap::from_matrix(fwd.skew_matrix())?.norm();
        let smooth = primal
            .iter()
            .map(PrimalBlock::mu)
            .chain(dual.iter().map(DualBlock::nu))
            .fold(0.0, f64::max);
        fwd.lipschitz = smooth + skew_norm;
        let forward: MapRef = Arc::new(fwd);

        let mut sets: Vec<SetRef> = Vec::with_capacity(primal.len() + 2 * dual.len());
        for p in &primal {
            sets.push(Arc::new(Shifted::new(p.a.clone(), p.s_star.clone())?));
        }
        for d in &dual {
            sets.push(d.b.clone());
        }
        for d in &dual {
            sets.push(Arc::new(Constant::new(d.r.clone())));
        }
        let set_part: SetRef = Arc::new(ProductOperator::new(sets));
        let kt = MDecomposition::new(set_part, Some(forward.clone()))?;

        let mut dims = primal_layout.dims().to_vec();
        dims.extend_from_slice(dual_layout.dims());
        dims.extend_from_slice(dual_layout.dims());

        Ok(CoupledProblem {
            primal,
            dual,
            links,
            l,
            primal_layout,
            dual_layout,
            layout: Layout::new(dims),
            forward,
            kt,
            skew_norm,
        })
    }

    pub fn primal(&self) -> &[PrimalBlock] {
        &self.primal
    }

    pub fn dual(&self) -> &[DualBlock] {
        &self.dual
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// The assembled `L : 𝒴 → 𝒵`.
    pub fn coupling(&self) -> &LinearMap {
        &self.l
    }

    pub fn kt_forward(&self) -> &MapRef {
        &self.forward
    }

    /// The Kuhn–Tucker operator on `𝒴 × 𝒵 × 𝒵`.
    pub fn kt_operator(&self) -> &MDecomposition {
        &self.kt
    }

    /// Norm of the skew part of the Kuhn–Tucker operator.
    pub fn skew_norm(&self) -> f64 {
        self.skew_norm
    }

    /// Block layout `[x_1..x_I, y_1..y_J, v_1..v_J]`.
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn primal_layout(&self) -> &Layout {
        &self.primal_layout
    }

    pub fn dual_layout(&self) -> &Layout {
        &self.dual_layout
    }

    /// `(x, Lx − r, v*)`.
    pub fn lift(&self, x: ProductVector, v_star: ProductVector) -> Result<KuhnTuckerPoint> {
        if x.layout() != &self.primal_layout || v_star.layout() != &self.dual_layout {
            return Err(Error::config("point does not match the problem layout"));
        }
        let lx = self.l.apply(&x.flatten())?;
        let r = Vector::concat(&self.dual.iter().map(|d| d.r.clone()).collect::<Vec<_>>());
        let y = ProductVector::split(&(lx - r), &self.dual_layout)?;
        Ok(KuhnTuckerPoint { x, y, v_star })
    }

    pub fn zero_point(&self) -> KuhnTuckerPoint {
        KuhnTuckerPoint {
            x: ProductVector::zeros(&self.primal_layout),
            y: ProductVector::zeros(&self.dual_layout),
            v_star: ProductVector::zeros(&self.dual_layout),
        }
    }

    pub fn split(&self, flat: &Vector) -> Result<KuhnTuckerPoint> {
        check_dim(self.layout.total(), flat.dim())?;
        let (nx, nz) = (self.primal_layout.total(), self.dual_layout.total());
        Ok(KuhnTuckerPoint {
            x: ProductVector::split(&flat.segment(0, nx), &self.primal_layout)?,
            y: ProductVector::split(&flat.segment(nx, nz), &self.dual_layout)?,
            v_star: ProductVector::split(&flat.segment(nx + nz, nz), &self.dual_layout)?,
        })
    }

    /// Stage with `F_i = α_i Id`, `W_j = β_j Id` and unit step sizes, clipped
    /// into the admissible ranges.
    pub fn default_stage(&self) -> CoupledStage {
        let step = |alpha: f64, eps: f64, lip: f64| {
            if lip > 0.0 {
                (0.9 * (alpha - eps) / lip).max(eps).min(1.0)
            } else {
                1.0
            }
        };
        CoupledStage {
            f: self
                .primal
                .iter()
                .map(|p| Arc::new(ScaledIdentity::new(p.dim(), p.alpha).expect("alpha checked")) as MapRef)
                .collect(),
            w: self
                .dual
                .iter()
                .map(|d| Arc::new(ScaledIdentity::new(d.dim(), d.beta).expect("beta checked")) as MapRef)
                .collect(),
            gamma: self.primal.iter().map(|p| step(p.alpha, p.epsilon, p.mu())).collect(),
            tau: self.dual.iter().map(|d| step(d.beta, d.delta, d.nu())).collect(),
        }
    }

    /// `(Σ_j L_ji* v_j)_i`, accumulated in link order.
    fn adjoint_blocks(&self, v: &[Vector]) -> Vec<Vector> {
        let mut out: Vec<Vector> = self.primal.iter().map(|p| Vector::zeros(p.dim())).collect();
        for link in &self.links {
            let t = link.map.adjoint_apply(&v[link.dual]).expect("layout checked");
            out[link.primal] += &t;
        }
        out
    }

    /// `(Σ_i L_ji x_i)_j`, accumulated in link order.
    fn forward_blocks(&self, x: &[Vector]) -> Vec<Vector> {
        let mut out: Vec<Vector> = self.dual.iter().map(|d| Vector::zeros(d.dim())).collect();
        for link in &self.links {
            let t = link.map.apply(&x[link.primal]).expect("layout checked");
            out[link.dual] += &t;
        }
        out
    }

    /// Resolvent certificates of the Kuhn–Tucker inclusions:
    /// `‖x_i − J_{A_i}(x_i + s_i* − (L*v*)_i − C_i x_i)‖` per primal block and
    /// `‖u_j − J_{B_j}(u_j + v_j* − D_j u_j)‖` with `u = Lx − r` per dual block.
    pub fn kt_residuals(&self, p: &KuhnTuckerPoint) -> Result<(Vec<f64>, Vec<f64>)> {
        if p.x.layout() != &self.primal_layout || p.v_star.layout() != &self.dual_layout {
            return Err(Error::config("point does not match the problem layout"));
        }
        let lt_v = self.adjoint_blocks(p.v_star.blocks());
        let lx = self.forward_blocks(p.x.blocks());
        let mut primal = Vec::with_capacity(self.primal.len());
        for (i, blk) in self.primal.iter().enumerate() {
            let x = p.x.block(i);
            let mut arg = x + &blk.s_star - &lt_v[i];
            if let Some(c) = &blk.c {
                arg -= &c.apply(x);
            }
            primal.push((x - resolvent(blk.a.as_ref(), 1.0, &arg)?).norm());
        }
        let mut dual = Vec::with_capacity(self.dual.len());
        for (j, blk) in self.dual.iter().enumerate() {
            let u = &lx[j] - &blk.r;
            let mut arg = &u + p.v_star.block(j);
            if let Some(d) = &blk.d {
                arg -= &d.apply(&u);
            }
            dual.push((&u - resolvent(blk.b.as_ref(), 1.0, &arg)?).norm());
        }
        Ok((primal, dual))
    }
}

/// The Kuhn–Tucker operator of a coupled problem.
pub fn build_kt_operator(problem: &CoupledProblem) -> MDecomposition {
    problem.kt_operator().clone()
}

/// A point `(x, y, v*)` of `𝒴 × 𝒵 × 𝒵`.
#[derive(Debug, Clone, PartialEq)]
pub struct KuhnTuckerPoint {
    pub x: ProductVector,
    pub y: ProductVector,
    pub v_star: ProductVector,
}

impl KuhnTuckerPoint {
    pub fn flatten(&self) -> Vector {
        Vector::concat(&[self.x.flatten(), self.y.flatten(), self.v_star.flatten()])
    }
}

/// `n ↦` stage operators and step sizes.
#[derive(Clone)]
pub enum StageSchedule {
    Fixed(CoupledStage),
    Staged(Arc<dyn Fn(usize) -> CoupledStage + Send + Sync>),
}

impl StageSchedule {
    pub fn at(&self, n: usize) -> CoupledStage {
        match self {
            StageSchedule::Fixed(s) => s.clone(),
            StageSchedule::Staged(f) => f(n),
        }
    }
}

impl fmt::Debug for StageSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageSchedule::Fixed(s) => f.debug_tuple("Fixed").field(s).finish(),
            StageSchedule::Staged(_) => f.write_str("Staged(..)"),
        }
    }
}

/// Which transcription of the coupled iteration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoupledMode {
    /// Generic weak solver on the stacked space with the coupled kernel.
    #[default]
    Delegated,
    /// Explicit block-by-block updates.
    Literal,
}

/// Checks run before the first coupled iteration; returns the kernel of the
/// first stage.
pub(crate) fn coupled_setup(
    problem: &CoupledProblem,
    stages: &StageSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    start: &KuhnTuckerPoint,
) -> Result<CoupledKernel> {
    match &cfg.gamma {
        None => {}
        Some(g) if g.check_range("gamma", 1.0, 1.0, cfg.max_iter).is_ok() => {}
        Some(_) => {
            return Err(Error::config(
                "coupled solver takes its step sizes from the stages; gamma must be 1",
            ))
        }
    }
    check_dim(problem.layout().total(), start.flatten().dim())?;
    if start.x.layout() != problem.primal_layout() || start.v_star.layout() != problem.dual_layout() {
        return Err(Error::config("start does not match the problem layout"));
    }
    cfg.validate(problem.layout().total())?;
    policy.validate(problem.layout().total())?;
    coupled_kernel(problem, &stages.at(0))
}

/// Primal-dual splitting for a coupled system. Returns the final
/// Kuhn–Tucker point and the trace of the stacked iteration.
pub fn solve_coupled(
    problem: &CoupledProblem,
    stages: &StageSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    start: &KuhnTuckerPoint,
    mode: CoupledMode,
) -> Result<(KuhnTuckerPoint, SolveReport)> {
    let first = coupled_setup(problem, stages, policy, cfg, start)?;
    let x0 = start.flatten();
    let report = match mode {
        CoupledMode::Delegated => {
            let kernels = match stages {
                StageSchedule::Fixed(_) => KernelSchedule::Fixed(Arc::new(first)),
                StageSchedule::Staged(f) => {
                    let f = f.clone();
                    let p = problem.clone();
                    KernelSchedule::staged(move |n, _| Ok(Arc::new(coupled_kernel(&p, &f(n))?) as _))
                }
            };
            solve_weak(problem.kt_operator(), &kernels, policy, cfg, &x0)?
        }
        CoupledMode::Literal => {
            let gamma = super::Schedule::Constant(1.0);
            let mut oracle = |n: usize, _g: f64, p: &Vector| -> Result<(Vector, Vector)> {
                let stage = stages.at(n);
                if n > 0 && matches!(stages, StageSchedule::Staged(_)) {
                    coupled_kernel(problem, &stage)?;
                }
                literal_graph_point(problem, &stage, p)
            };
            let mut step = |p: &Vector, _g: f64, lambda: f64, q: &Vector, q_star: &Vector| {
                literal_update(problem, p, lambda, q, q_star)
            };
            drive(cfg, &gamma, policy, x0, &mut oracle, Update::Custom(&mut step))
        }
    };
    let point = problem.split(&report.point)?;
    Ok((point, report))
}

/// Blockwise `(q, q*)` at the evaluation point `p̃ = (x̃, ỹ, ṽ*)`.
fn literal_graph_point(problem: &CoupledProblem, stage: &CoupledStage, p: &Vector) -> Result<(Vector, Vector)> {
    let pt = problem.split(p)?;
    let (x, y, v) = (pt.x.blocks(), pt.y.blocks(), pt.v_star.blocks());
    let lt_v = problem.adjoint_blocks(v);
    let lx = problem.forward_blocks(x);

    let mut a = Vec::with_capacity(x.len());
    let mut o_star = Vec::with_capacity(x.len());
    for (i, blk) in problem.primal().iter().enumerate() {
        let (f, g) = (&stage.f[i], stage.gamma[i]);
        let mut l_star = f.apply(&x[i]).add_scaled(-g, &lt_v[i]);
        if let Some(c) = &blk.c {
            l_star = l_star.add_scaled(-g, &c.apply(&x[i]));
        }
        let rhs = l_star.add_scaled(g, &blk.s_star);
        let ai = solve_base(&[BaseBlock::for_map(f.clone(), 1.0)], g, blk.a.as_ref(), &rhs, &x[i])?;
        let mut oi = (&l_star - f.apply(&ai)).scale(1.0 / g);
        if let Some(c) = &blk.c {
            oi += &c.apply(&ai);
        }
        a.push(ai);
        o_star.push(oi);
    }

    let mut b = Vec::with_capacity(y.len());
    let mut f_star = Vec::with_capacity(y.len());
    let mut c = Vec::with_capacity(y.len());
    for (j, blk) in problem.dual().iter().enumerate() {
        let (w, t) = (&stage.w[j], stage.tau[j]);
        let mut t_star = w.apply(&y[j]).add_scaled(t, &v[j]);
        if let Some(d) = &blk.d {
            t_star = t_star.add_scaled(-t, &d.apply(&y[j]));
        }
        let bj = solve_base(&[BaseBlock::for_map(w.clone(), 1.0)], t, blk.b.as_ref(), &t_star, &y[j])?;
        let mut fj = (&t_star - w.apply(&bj)).scale(1.0 / t);
        if let Some(d) = &blk.d {
            fj += &d.apply(&bj);
        }
        c.push(&lx[j] - &y[j] + &v[j] - &blk.r);
        b.push(bj);
        f_star.push(fj);
    }

    let lt_c = problem.adjoint_blocks(&c);
    let la = problem.forward_blocks(&a);
    let a_star: Vec<Vector> = o_star.iter().zip(&lt_c).map(|(o, l)| o + l).collect();
    let b_star: Vec<Vector> = f_star.iter().zip(&c).map(|(f, cj)| f - cj).collect();
    let c_star: Vec<Vector> = problem
        .dual()
        .iter()
        .enumerate()
        .map(|(j, blk)| &blk.r + &b[j] - &la[j])
        .collect();

    let q = Vector::concat(&[a, b, c].concat());
    let q_star = Vector::concat(&[a_star, b_star, c_star].concat());
    Ok((q, q_star))
}

/// `σ = ‖q*‖²`, `θ = ⟨q − p, q*⟩` accumulated over `i`, then over `j` with
/// the `y` and `v*` terms paired,
/// then `p + ρ q*` with `ρ = λθ/σ` when `θ < 0`.
fn literal_update(problem: &CoupledProblem, p: &Vector, lambda: f64, q: &Vector, q_star: &Vector) -> Result<Step> {
    let dims = problem.layout().dims();
    let offsets = problem.layout().offsets();
    let (ni, nj) = (problem.primal().len(), problem.dual().len());
    let order = (0..ni).chain((0..nj).flat_map(|j| [ni + j, ni + nj + j]));
    let mut sigma = 0.0;
    let mut theta = 0.0;
    for k in order {
        let (d, at) = (dims[k], offsets[k]);
        let qs = q_star.segment(at, d);
        sigma += qs.norm_squared();
        theta += (q.segment(at, d) - p.segment(at, d)).dot(&qs);
    }
    let rho = if theta < 0.0 {
        if sigma == 0.0 {
            return Err(Error::Corruption("sigma vanished with a negative theta".into()));
        }
        lambda * theta / sigma
    } else {
        0.0
    };
    let parts: Vec<Vector> = dims
        .iter()
        .zip(&offsets)
        .map(|(&d, &at)| p.segment(at, d).add_scaled(rho, &q_star.segment(at, d)))
        .collect();
    Ok(Step {
        next: Vector::concat(&parts),
        theta,
        sigma,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::ScaledIdentity;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn scalar_problem() -> CoupledProblem {
        let id: SetRef = Arc::new(ScaledIdentity::new(1, 1.0).unwrap());
        CoupledProblem::new(
            vec![PrimalBlock::new(id.clone(), v(&[0.0]))],
            vec![DualBlock::new(id, v(&[2.0]))],
            vec![Link {
                dual: 0,
                primal: 0,
                map: LinearMap::identity(1),
            }],
        )
        .unwrap()
    }

    #[test]
    fn kt_operator_vanishes_at_solution() {
        let p = scalar_problem();
        let m = build_kt_operator(&p);
        let z = v(&[1.0, -1.0, -1.0]);
        assert!(m.zero_residual(&z).unwrap() < 1e-15);
        let fwd = p.kt_forward();
        let u = v(&[0.3, -1.7, 2.2]);
        assert!(u.dot(&(fwd.apply(&u))).abs() < 1e-15);
    }

    #[test]
    fn scalar_system_converges() {
        let p = scalar_problem();
        let stages = StageSchedule::Fixed(p.default_stage());
        let cfg = SolverConfig {
            tol_residual: 1e-10,
            tol_step: 1e-10,
            ..SolverConfig::default()
        };
        for mode in [CoupledMode::Delegated, CoupledMode::Literal] {
            let (pt, r) = solve_coupled(&p, &stages, &PerturbationPolicy::None, &cfg, &p.zero_point(), mode).unwrap();
            assert!(r.converged(), "{mode:?}: {:?}", r.stop);
            assert!((pt.x.block(0)[0] - 1.0).abs() < 1e-6);
            assert!((pt.v_star.block(0)[0] + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn lifted_zero_is_stationary() {
        let p = scalar_problem();
        let start = p
            .lift(ProductVector::new(vec![v(&[1.0])]), ProductVector::new(vec![v(&[-1.0])]))
            .unwrap();
        let (pt, r) = solve_coupled(
            &p,
            &StageSchedule::Fixed(p.default_stage()),
            &PerturbationPolicy::None,
            &SolverConfig::default(),
            &start,
            CoupledMode::Literal,
        )
        .unwrap();
        assert_eq!(r.iterations(), 1);
        assert!(r.trace[0].theta >= 0.0);
        assert_eq!(pt, start);
    }

    #[test]
    fn rejects_bad_constants() {
        let id: SetRef = Arc::new(ScaledIdentity::new(1, 1.0).unwrap());
        let bad = PrimalBlock::new(id.clone(), v(&[0.0])).with_constants(1.0, 1.0, 1.0);
        let err = CoupledProblem::new(vec![bad], vec![DualBlock::new(id, v(&[0.0]))], vec![]);
        assert!(err.is_err());
    }
}
