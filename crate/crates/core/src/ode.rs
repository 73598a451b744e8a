//! Fixed-step RK4 integration of the built-in reduced ODE systems, and
//! assembly of the resulting numeric metrics.
//!
//! Each system has two DSL scopes. The ODE scope declares the independent
//! variable and the state as coordinates, so right-hand sides and their
//! total derivatives are ordinary symbolic expressions. The metric template
//! declares the numeric metric functions as value-less constants that are
//! bound per point from the interpolated trajectory.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use thiserror::Error;

use crate::dsl::{parse_expression, parse_manifold, DslError, ManifoldSpec, ValidationError};
use crate::expr::{EvalError, Expr, Symbol, Tape};
use crate::fd::{FdError, MetricField};
use crate::geometry::Acc;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("unknown ODE system '{0}'")]
    UnknownSystem(String),
    #[error("system {system} has no parameter '{name}'")]
    UnknownParameter { system: String, name: String },
    #[error("expected {expected} initial values, got {got}")]
    BadInit { expected: usize, got: usize },
    #[error("empty or reversed range [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("guard `{0}` violated by the initial state")]
    GuardViolationAtStart(String),
    #[error("half-step error estimate {estimate:.3e} at t = {t} exceeds 1e-6; reduce the step")]
    StepTooLarge { t: f64, estimate: f64 },
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Largest accepted half-step error estimate per step, normalized by 1 + |y|.
pub const MAX_STEP_ERROR: f64 = 1e-6;

/// One classical RK4 step of y′ = f(t, y).
pub fn rk4_step<T: Real, E>(
    f: &mut impl FnMut(T, &[T]) -> Result<Vec<T>, E>,
    t: T,
    y: &[T],
    h: T,
) -> Result<Vec<T>, E> {
    let half = h * T::lit(0.5);
    let axpy = |k: &[T], s: T| y.iter().zip(k).map(|(a, b)| *a + s * *b).collect::<Vec<T>>();
    let k1 = f(t, y)?;
    let k2 = f(t + half, &axpy(&k1, half))?;
    let k3 = f(t + half, &axpy(&k2, half))?;
    let k4 = f(t + h, &axpy(&k3, h))?;
    let sixth = h / T::lit(6.0);
    Ok((0..y.len()).map(|i| y[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i])).collect())
}

/// Quintic Hermite interpolation on one interval from values and first two
/// derivatives at both ends; `s` ∈ [0, 1], `h` the interval length.
pub fn hermite5<T: Real>(s: T, h: T, left: [T; 3], right: [T; 3]) -> T {
    let one = T::one();
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let l = T::lit;
    let h0 = one - l(10.0) * s3 + l(15.0) * s4 - l(6.0) * s5;
    let h1 = s - l(6.0) * s3 + l(8.0) * s4 - l(3.0) * s5;
    let h2 = (s2 - l(3.0) * s3 + l(3.0) * s4 - s5) * l(0.5);
    let h3 = (s3 - l(2.0) * s4 + s5) * l(0.5);
    let h4 = -l(4.0) * s3 + l(7.0) * s4 - l(3.0) * s5;
    let h5 = l(10.0) * s3 - l(15.0) * s4 + l(6.0) * s5;
    left[0] * h0 + h * left[1] * h1 + h * h * left[2] * h2 + right[0] * h5 + h * right[1] * h4 + h * h * right[2] * h3
}

/// Knot data of an integrated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    /// state, its derivative and second derivative at each knot
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
    pub d2y: Vec<Vec<f64>>,
    /// Worst half-step error estimate, normalized.
    pub max_step_error: f64,
    /// Worst deviation of the interpolant from the half-step state at interval midpoints.
    pub interpolation_error: f64,
    /// Where a guard fired, if it did; the trajectory ends one step earlier.
    pub truncated_at: Option<f64>,
    /// Worst normalized first-integral drift, when the system has one.
    pub drift: Option<f64>,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.y.len() - 1) as f64 * self.step
    }

    /// Interpolated state component `i` at `t` (clamped to the end intervals).
    pub fn value(&self, i: usize, t: f64) -> f64 {
        let last = self.y.len() - 1;
        if last == 0 {
            return self.y[0][i];
        }
        let k = (((t - self.t0) / self.step).floor().max(0.0) as usize).min(last - 1);
        let s = (t - (self.t0 + k as f64 * self.step)) / self.step;
        hermite5(
            s,
            self.step,
            [self.y[k][i], self.dy[k][i], self.d2y[k][i]],
            [self.y[k + 1][i], self.dy[k + 1][i], self.d2y[k + 1][i]],
        )
    }
}

/// A numeric metric function bound to state component `state`, evaluated at coordinate `coord`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: Symbol,
    pub state: usize,
    pub coord: usize,
}

#[derive(Debug, Clone, Copy)]
struct SystemDef {
    id: &'static str,
    description: &'static str,
    experimental: bool,
    params: &'static [(&'static str, f64)],
    /// name of the independent variable in the ODE scope
    var: &'static str,
    /// `func` lines of the ODE scope, in `var`
    rhs_funcs: &'static str,
    /// `func` lines of the metric template
    funcs: &'static str,
    state: &'static [&'static str],
    rhs: &'static [&'static str],
    guards: &'static [&'static str],
    first_integral: &'static [&'static str],
    coords: &'static [&'static str],
    domain: &'static [(f64, f64)],
    slots: &'static [(&'static str, usize, usize)],
    /// `lambda` and `metric` lines of the template
    metric: &'static str,
    init: &'static [f64],
    range: (f64, f64),
    step: f64,
}

const C4: &[&str] = &["x1", "x2", "x3", "x4"];
const BOX: &[(f64, f64)] = &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)];

const QE1_4D2_FUNCS: &str = "func f1(x1) = 1\nfunc f4(x1) = exp(x1)";

static SYSTEMS: [SystemDef; 4] = [
    SystemDef {
        id: "qe1-4d1",
        description: "quasi Einstein warp diag(1, fq, fq, fq), f = 4c3cosh²(c1x1 + c2), q(x4) from q'' = (32c1²c3q³ + q'²)/(2q)",
        experimental: false,
        params: &[("c1", 0.5), ("c2", 0.0), ("c3", 1.0)],
        var: "x4",
        rhs_funcs: "",
        funcs: "func f(x1) = 4*c3*cosh(c1*x1 + c2)^2",
        state: &["q", "dq"],
        rhs: &["dq", "(32*c1^2*c3*q^3 + dq^2)/(2*q)"],
        guards: &["q"],
        // q'²/q − 16c1²c3q² is constant along solutions
        first_integral: &["dq^2/q", "-16*c1^2*c3*q^2"],
        coords: C4,
        domain: BOX,
        slots: &[("q", 0, 3)],
        metric: "metric diag: 1, f(x1)*q, f(x1)*q, f(x1)*q",
        init: &[1.0, 0.3],
        range: (0.0, 1.0),
        step: 1e-3,
    },
    SystemDef {
        id: "qe2-4d1",
        description: "conformal quasi Einstein warp diag(1, fq, fq, fq), q = 1/(c1x4 + c0)², f(x1) and λ(x1) integrated",
        experimental: false,
        params: &[("c0", 1.0), ("c1", 1.0), ("k", 4.0)],
        var: "x1",
        rhs_funcs: "",
        funcs: "func q(x4) = 1/(c1*x4 + c0)^2",
        state: &["f", "df", "l", "dl"],
        rhs: &["df", "-(k*f*df*dl + 8*c1^2*f + df^2)/(2*f)", "dl", "(6*f*df*dl + 12*c1^2*f + 3*df^2)/(4*f^2)"],
        guards: &["f"],
        first_integral: &[],
        coords: C4,
        domain: &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0)],
        slots: &[("f", 0, 0), ("l", 2, 0)],
        metric: "lambda = l\nmetric diag: 1, f*q(x4), f*q(x4), f*q(x4)",
        init: &[1.0, 0.0, 0.0, 0.0],
        range: (0.0, 0.5),
        step: 1e-3,
    },
    SystemDef {
        id: "qe1-4d2",
        description: "quasi Einstein diag(f1, f2, f3, f4) in x1, f1 and f4 given, f2 and f3 integrated",
        experimental: false,
        params: &[],
        var: "x1",
        rhs_funcs: QE1_4D2_FUNCS,
        funcs: QE1_4D2_FUNCS,
        state: &["f2", "df2", "f3", "df3"],
        rhs: &[
            "df2",
            "(2*f1(x1)*f2^2*f3*f4(x1)*diff(diff(f4(x1), x1), x1) - f1(x1)*f2^2*f3*diff(f4(x1), x1)^2 \
             + f1(x1)*f2^2*f4(x1)*df3*diff(f4(x1), x1) - f1(x1)*f2*f4(x1)^2*df2*df3 + f1(x1)*f3*f4(x1)^2*df2^2 \
             - f2^2*f3*f4(x1)*diff(f1(x1), x1)*diff(f4(x1), x1) + f2*f3*f4(x1)^2*diff(f1(x1), x1)*df2)\
             /(2*f1(x1)*f2*f3*f4(x1)^2)",
            "df3",
            "(2*f1(x1)*f2*f3^2*f4(x1)*diff(diff(f4(x1), x1), x1) - f1(x1)*f2*f3^2*diff(f4(x1), x1)^2 \
             + f1(x1)*f2*f4(x1)^2*df3^2 - f1(x1)*f3*f4(x1)^2*df2*df3 + f1(x1)*f3^2*f4(x1)*df2*diff(f4(x1), x1) \
             - f2*f3^2*f4(x1)*diff(f1(x1), x1)*diff(f4(x1), x1) + f2*f3*f4(x1)^2*diff(f1(x1), x1)*df3)\
             /(2*f1(x1)*f2*f3*f4(x1)^2)",
        ],
        guards: &["f2", "f3"],
        first_integral: &[],
        coords: C4,
        domain: BOX,
        slots: &[("f2", 0, 0), ("f3", 2, 0)],
        metric: "metric diag: f1(x1), f2, f3, f4(x1)",
        init: &[1.0, 0.5, 2.0, -0.3],
        range: (0.0, 1.0),
        step: 1e-3,
    },
    SystemDef {
        id: "rr-4d3",
        description: "Ricci recurrent candidate diag(q(x4), u(x3), h(x2), f(x1)), f = e^x1, q = e^x4, h and u integrated",
        experimental: true,
        params: &[],
        var: "t",
        rhs_funcs: "",
        funcs: "func f(x1) = exp(x1)\nfunc q(x4) = exp(x4)",
        state: &["h", "dh", "ddh", "u", "du"],
        // the h-terms in u'' enter only through (h'² − 2hh'')/h, a first integral of the h equation
        rhs: &["dh", "ddh", "dh*(2*h*ddh - dh^2)/(2*h^2)", "du", "(u*dh^2 + h*du^2 - 2*h*u*ddh)/(2*h*u)"],
        guards: &["h", "u"],
        first_integral: &[],
        coords: C4,
        domain: BOX,
        slots: &[("h", 0, 1), ("u", 3, 2)],
        metric: "metric diag: q(x4), u, h, f(x1)",
        init: &[1.0, 0.5, 0.2, 1.0, 0.1],
        range: (0.0, 1.0),
        step: 1e-3,
    },
];

pub fn system_ids() -> Vec<&'static str> {
    SYSTEMS.iter().map(|s| s.id).collect()
}

/// A reduced ODE system together with the metric it determines.
#[derive(Debug, Clone)]
pub struct RifOdeSystem {
    pub id: String,
    pub description: String,
    /// Verdicts on this system are reported, not asserted.
    pub experimental: bool,
    pub var: Symbol,
    pub state: Vec<Symbol>,
    pub rhs: Vec<Expr>,
    pub guards: Vec<Expr>,
    /// Terms whose sum is conserved; empty when none is known.
    pub first_integral: Vec<Expr>,
    /// Metric with slot names as value-less constants; slot coordinate domains are replaced by the range.
    pub template: ManifoldSpec,
    pub slots: Vec<Slot>,
    pub default_init: Vec<f64>,
    pub default_range: (f64, f64),
    pub default_step: f64,
    rhs_tape: Tape,
    dd_tape: Tape,
    guard_tape: Tape,
    fi_tape: Tape,
    ode_consts: Vec<f64>,
}

impl RifOdeSystem {
    pub fn builtin(id: &str, params: &BTreeMap<String, f64>) -> Result<Self, OdeError> {
        let def = SYSTEMS.iter().find(|s| s.id == id).ok_or_else(|| OdeError::UnknownSystem(id.to_string()))?;
        for k in params.keys() {
            if !def.params.iter().any(|(p, _)| p == k) {
                return Err(OdeError::UnknownParameter { system: id.into(), name: k.clone() });
            }
        }
        let mut consts = String::new();
        for (p, v) in def.params {
            let _ = writeln!(consts, "const {p} = {}", params.get(*p).copied().unwrap_or(*v));
        }

        let k = def.state.len();
        let ode_text = format!(
            "manifold {}-ode\ndim {}\ncoords {} {}\n{consts}{}\nmetric diag: {}\n",
            def.id,
            k + 1,
            def.var,
            def.state.join(" "),
            def.rhs_funcs,
            vec!["1"; k + 1].join(", ")
        );
        let ode = parse_manifold(&ode_text)?;
        let parse = |t: &str| parse_expression(&ode, t);
        let rhs = def.rhs.iter().map(|t| parse(t)).collect::<Result<Vec<_>, _>>()?;
        let guards = def.guards.iter().map(|t| parse(t)).collect::<Result<Vec<_>, _>>()?;
        let first_integral = def.first_integral.iter().map(|t| parse(t)).collect::<Result<Vec<_>, _>>()?;

        // d/dt rhs_i = ∂_t rhs_i + Σ_j ∂_{y_j} rhs_i · rhs_j
        let vars = ode.coords.clone();
        let dd: Vec<Expr> = rhs
            .iter()
            .map(|r| {
                let mut s = r.diff(vars[0]);
                for (j, yj) in vars[1..].iter().enumerate() {
                    s = s + r.diff(*yj) * rhs[j].clone();
                }
                s
            })
            .collect();
        let values = ode.const_values()?;
        let rhs_tape = Tape::compile(&rhs, &vars);
        let dd_tape = Tape::compile(&dd, &vars);
        let guard_tape = Tape::compile(&guards, &vars);
        let fi_tape = Tape::compile(&first_integral, &vars);
        let ode_consts = rhs_tape.const_values(&values)?;
        for t in [&dd_tape, &guard_tape, &fi_tape] {
            t.const_values(&values)?;
        }

        let mut text = format!("manifold {}\ndim {}\ncoords {}\n", def.id, def.coords.len(), def.coords.join(" "));
        for (c, (lo, hi)) in def.coords.iter().zip(def.domain) {
            let _ = writeln!(text, "domain {c} in [{lo}, {hi}]");
        }
        text += &consts;
        for (name, _, _) in def.slots {
            let _ = writeln!(text, "const {name}");
        }
        let _ = writeln!(text, "{}\n{}", def.funcs, def.metric);
        let template = parse_manifold(&text)?;
        let slots = def
            .slots
            .iter()
            .map(|(name, state, coord)| Slot { name: Symbol::new(name), state: *state, coord: *coord })
            .collect();

        Ok(RifOdeSystem {
            id: def.id.to_string(),
            description: def.description.to_string(),
            experimental: def.experimental,
            var: vars[0],
            state: vars[1..].to_vec(),
            rhs,
            guards,
            first_integral,
            template,
            slots,
            default_init: def.init.to_vec(),
            default_range: def.range,
            default_step: def.step,
            rhs_tape,
            dd_tape,
            guard_tape,
            fi_tape,
            ode_consts,
        })
    }

    fn args(t: f64, y: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(y.len() + 1);
        v.push(t);
        v.extend_from_slice(y);
        v
    }

    pub fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.rhs_tape.eval(&Self::args(t, y), &self.ode_consts)
    }

    fn second_derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.dd_tape.eval(&Self::args(t, y), &self.ode_consts)
    }

    /// Index of the first guard not strictly positive at (t, y).
    fn failed_guard(&self, t: f64, y: &[f64]) -> Option<usize> {
        match self.guard_tape.eval(&Self::args(t, y), &self.ode_consts) {
            Ok(v) => v.iter().position(|g| !(*g > 0.0)),
            Err(_) => Some(0),
        }
    }

    fn invariant_terms(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.fi_tape.eval(&Self::args(t, y), &self.ode_consts)
    }

    /// Integrate from `range.0` with `init` and fixed step (rounded so the
    /// range holds a whole number of steps), then assemble the metric.
    pub fn integrate(&self, init: &[f64], range: (f64, f64), step: f64) -> Result<NumericMetric, OdeError> {
        let traj = self.trajectory(init, range, step)?;
        NumericMetric::assemble(self, traj)
    }

    pub fn trajectory(&self, init: &[f64], range: (f64, f64), step: f64) -> Result<Trajectory, OdeError> {
        let k = self.state.len();
        if init.len() != k {
            return Err(OdeError::BadInit { expected: k, got: init.len() });
        }
        let (a, b) = range;
        if !(b > a) || !(step > 0.0) {
            return Err(OdeError::BadRange(a, b));
        }
        if let Some(g) = self.failed_guard(a, init) {
            return Err(OdeError::GuardViolationAtStart(self.guards[g].to_string()));
        }
        let steps = ((b - a) / step).round().max(1.0) as usize;
        let h = (b - a) / steps as f64;
        let mut f = |t: f64, y: &[f64]| self.derivative(t, y);

        let mut traj = Trajectory {
            t0: a,
            step: h,
            y: vec![init.to_vec()],
            dy: vec![self.derivative(a, init)?],
            d2y: vec![self.second_derivative(a, init)?],
            max_step_error: 0.0,
            interpolation_error: 0.0,
            truncated_at: None,
            drift: None,
        };
        let fi0 = if self.first_integral.is_empty() { None } else { Some(self.invariant_terms(a, init)?) };
        let mut drift = 0.0f64;
        let mut mids = Vec::with_capacity(steps);
        for n in 0..steps {
            let t = a + n as f64 * h;
            let t1 = a + (n + 1) as f64 * h;
            let y = traj.y[n].clone();
            // a stage that cannot be evaluated has left the guarded region too
            let stepped = rk4_step(&mut f, t, &y, h).and_then(|full| {
                let mid = rk4_step(&mut f, t, &y, 0.5 * h)?;
                let two = rk4_step(&mut f, t + 0.5 * h, &mid, 0.5 * h)?;
                Ok((full, mid, two))
            });
            let Ok((full, mid, two)) = stepped.map_err(|_| ()).and_then(|r| {
                let inside = r.0.iter().all(|v| v.is_finite()) && self.failed_guard(t1, &r.0).is_none();
                if inside { Ok(r) } else { Err(()) }
            }) else {
                traj.truncated_at = Some(t1);
                break;
            };
            let est = full.iter().zip(&two).map(|(p, q)| (p - q).abs() / (1.0 + q.abs())).fold(0.0, f64::max);
            if est > MAX_STEP_ERROR {
                return Err(OdeError::StepTooLarge { t, estimate: est });
            }
            traj.max_step_error = traj.max_step_error.max(est);
            traj.dy.push(self.derivative(t1, &full)?);
            traj.d2y.push(self.second_derivative(t1, &full)?);
            if let Some(fi0) = &fi0 {
                let mut acc = Acc::new();
                for (x, x0) in self.invariant_terms(t1, &full)?.iter().zip(fi0) {
                    acc.push(*x);
                    acc.push(-x0);
                }
                drift = drift.max(acc.normalized());
            }
            traj.y.push(full);
            mids.push(mid);
        }
        for (n, mid) in mids.iter().enumerate() {
            let t = a + (n as f64 + 0.5) * h;
            for (i, m) in mid.iter().enumerate() {
                traj.interpolation_error = traj.interpolation_error.max((traj.value(i, t) - m).abs() / (1.0 + m.abs()));
            }
        }
        traj.drift = fi0.map(|_| drift);
        Ok(traj)
    }
}

/// A metric assembled from closed-form entries and interpolated trajectories.
#[derive(Debug, Clone)]
pub struct NumericMetric {
    pub system: String,
    pub experimental: bool,
    pub trajectory: Trajectory,
    /// Template with slot coordinate domains set to the integrated range.
    pub spec: ManifoldSpec,
    slots: Vec<Slot>,
    tape: Tape,
    /// per tape constant: fixed value, or the slot it reads
    consts: Vec<Result<f64, usize>>,
}

impl NumericMetric {
    fn assemble(sys: &RifOdeSystem, trajectory: Trajectory) -> Result<Self, OdeError> {
        let mut spec = sys.template.clone();
        for s in &sys.slots {
            spec.domain[s.coord] = (trajectory.t0, trajectory.t_end());
        }
        let mut exprs: Vec<Expr> = spec.metric.iter().flatten().cloned().collect();
        exprs.extend(spec.lambda.clone());
        let tape = Tape::compile(&exprs, &spec.coords);
        let mut bound = spec.clone();
        for s in &sys.slots {
            bound.set_const(&s.name.name(), Expr::zero());
        }
        let values: HashMap<Symbol, f64> = bound.const_values()?;
        let consts = tape
            .consts()
            .iter()
            .map(|c| match sys.slots.iter().position(|s| &s.name == c) {
                Some(k) => Err(k),
                None => Ok(values[c]),
            })
            .collect();
        Ok(NumericMetric {
            system: sys.id.clone(),
            experimental: sys.experimental,
            trajectory,
            spec,
            slots: sys.slots.clone(),
            tape,
            consts,
        })
    }

    /// Canonical description for fingerprinting reports.
    pub fn describe(&self, init: &[f64]) -> String {
        let t = &self.trajectory;
        format!("{}# init {init:?} range [{}, {}] step {}\n", self.spec.pretty(), t.t0, t.t_end(), t.step)
    }
}

impl MetricField for NumericMetric {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        self.spec.domain.clone()
    }

    fn has_lambda(&self) -> bool {
        self.spec.lambda.is_some()
    }

    fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, Option<f64>), FdError> {
        let consts: Vec<f64> = self
            .consts
            .iter()
            .map(|c| match c {
                Ok(v) => *v,
                Err(k) => {
                    let s = &self.slots[*k];
                    self.trajectory.value(s.state, x[s.coord])
                }
            })
            .collect();
        let mut v = self.tape.eval(x, &consts)?;
        let l = if self.has_lambda() { v.pop() } else { None };
        Ok((v, l))
    }
}

#[cfg(test)]
mod tests;
