//! Config-driven batch front end: `evolve`, `sweep`, `bound` and `check`.
//!
//! Every command renders its output to a string first, so identical configs
//! give byte-identical files. Each file starts with the resolved config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classical::{
    classical_scatter, classical_wave, classical_wave_reverse, flow_apply, semiclassical_dynamics,
    ClassicalCoupling,
};
use crate::error::Error;
use crate::experiments::{
    admissible_times, bound_terms, bound_violations, check_hbar_grid, collision_time,
    default_hbar_grid, default_times, dynamics_error_with, error_grid, fit_constant, fit_slope,
    run_sweep_with, underline_h, ErrorKind, RegimeParams, SweepRecord,
};
use crate::grid::{l2_distance, GridSpec, WaveSample};
use crate::model::{sgn, CoherentState, ModelParams, PhasePoint, Sign};
use crate::quadrature::QuadOptions;
use crate::quantum::{
    bound_weight, evolve_exact_with, evolve_spectral, reflection_coeff, transform_norm_sqr,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_ADMISSIBILITY: i32 = 4;

/// A failure with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn at(path: &str, reason: impl std::fmt::Display) -> Self {
        CliError::config(format!("{path}: {reason}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParam { .. } => EXIT_CONFIG,
            Error::Inadmissible { .. } => EXIT_ADMISSIBILITY,
            Error::Domain { .. } | Error::GridMismatch(_) | Error::Quadrature(_) => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hbar: f64,
    pub mass: f64,
    pub beta: f64,
    pub sigma0: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hbar: 0.05,
            mass: 1.0,
            beta: 1.0,
            sigma0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub q: f64,
    pub p: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection { q: -4.0, p: 2.0 }
    }
}

/// Output grid; unset fields are chosen from the packet and ħ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x_max: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSection {
    pub window_sigmas: f64,
    pub nk_cap: usize,
}

impl Default for QuadSection {
    fn default() -> Self {
        let d = QuadOptions::default();
        QuadSection {
            window_sigmas: d.window_sigmas,
            nk_cap: d.nk_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Defaults to 9 geometric values from 0.1 to ≈ 4e-3.
    pub hbar_values: Option<Vec<f64>>,
    /// Defaults to `{0.5, 2, 4}·t_coll`, keeping those admissible at every ħ.
    pub times: Option<Vec<f64>>,
    pub kind: ErrorKind,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            hbar_values: None,
            times: None,
            kind: ErrorKind::Dynamics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// `None` writes to stdout.
    pub path: Option<PathBuf>,
    pub format: Format,
    /// Adds the non-reproducible `wall_time` column to sweep output.
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub initial: InitialSection,
    pub regime: RegimeParams,
    pub grid: GridSection,
    pub quad: QuadSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::at(
            path,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::at(if path == "." { "config" } else { &path }, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        positive("model.hbar", m.hbar)?;
        positive("model.mass", m.mass)?;
        positive("model.sigma0", m.sigma0)?;
        if m.beta.is_nan() {
            return Err(CliError::at("model.beta", "must not be NaN"));
        }
        let InitialSection { q, p } = self.initial;
        if !(q.is_finite() && p.is_finite()) {
            return Err(CliError::at(
                "initial",
                format!("q and p must be finite, got q = {q}, p = {p}"),
            ));
        }
        if q * p == 0.0 {
            return Err(CliError::at(
                "initial",
                format!("q p must be nonzero, got q = {q}, p = {p}"),
            ));
        }
        self.regime.validate().map_err(|e| match e {
            Error::InvalidParam { name, reason } => {
                let field = if name == "eta" {
                    "eta_rule.fixed"
                } else {
                    name
                };
                CliError::at(&format!("regime.{field}"), reason)
            }
            other => CliError::at("regime", other),
        })?;
        if let Some(x) = self.grid.x_max {
            positive("grid.x_max", x)?;
        }
        if let Some(n) = self.grid.n {
            if n < 3 {
                return Err(CliError::at("grid.n", format!("must be >= 3, got {n}")));
            }
        }
        self.quad_options().validate().map_err(|reason| {
            let field = reason.split_whitespace().next().unwrap_or_default();
            CliError::at(&format!("quad.{field}"), reason)
        })?;
        if let Some(hs) = &self.sweep.hbar_values {
            check_hbar_grid(hs).map_err(|e| CliError::at("sweep.hbar_values", e))?;
        }
        if let Some(ts) = &self.sweep.times {
            if ts.is_empty() || ts.iter().any(|t| !t.is_finite()) {
                return Err(CliError::at(
                    "sweep.times",
                    "must be a non-empty list of finite numbers",
                ));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            hbar: m.hbar,
            mass: m.mass,
            beta: m.beta,
            sigma0: m.sigma0,
        }
    }

    pub fn xi(&self) -> PhasePoint {
        PhasePoint::new(self.initial.q, self.initial.p)
    }

    pub fn quad_options(&self) -> QuadOptions {
        QuadOptions {
            window_sigmas: self.quad.window_sigmas,
            nk_cap: self.quad.nk_cap,
            ..QuadOptions::default()
        }
    }

    pub fn hbar_values(&self) -> Vec<f64> {
        self.sweep
            .hbar_values
            .clone()
            .unwrap_or_else(default_hbar_grid)
    }

    /// Configured times, or the default times admissible at every ħ.
    pub fn sweep_times(&self) -> Result<Vec<f64>, CliError> {
        if let Some(ts) = &self.sweep.times {
            return Ok(ts.clone());
        }
        let params = self.params();
        let defaults = default_times(self.xi(), params.mass)?;
        let kept = admissible_times(
            &params,
            self.xi(),
            &self.regime,
            &self.hbar_values(),
            &defaults,
        )?;
        if kept.is_empty() {
            return Err(CliError {
                code: EXIT_ADMISSIBILITY,
                message: format!(
                    "none of the default times {defaults:?} is admissible at every hbar"
                ),
            });
        }
        Ok(kept)
    }

    /// The grid at time `t`: configured fields win, the rest comes from
    /// [`error_grid`].
    pub fn grid_at(&self, t: f64) -> Result<GridSpec, CliError> {
        let auto = error_grid(&self.params(), self.xi(), t);
        let x_max = self.grid.x_max.unwrap_or(auto.x_max);
        let n = self.grid.n.unwrap_or_else(|| {
            let scaled = (auto.n as f64 * x_max / auto.x_max).ceil() as usize;
            scaled.max(4).next_multiple_of(2)
        });
        Ok(GridSpec::symmetric(x_max, n)?)
    }

    /// The config with defaults that do not depend on the command filled in,
    /// and without the output path so the file content does not depend on it.
    fn resolved(&self) -> RunConfig {
        let mut cfg = self.clone();
        cfg.output.path = None;
        cfg.sweep.hbar_values = Some(self.hbar_values());
        if let Ok(ts) = self.sweep_times() {
            cfg.sweep.times = Some(ts);
        }
        cfg
    }
}

/// A rectangular result with metadata, rendered as CSV or JSON.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub command: String,
    pub config: Option<RunConfig>,
    pub meta: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub trailer: Vec<(String, Value)>,
}

fn number(v: f64) -> Value {
    Value::from(v)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Null => "nan".into(),
        other => other.to_string(),
    }
}

impl Table {
    fn new(command: &str, config: &RunConfig, columns: &[&str]) -> Self {
        Table {
            command: command.into(),
            config: Some(config.resolved()),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Table::default()
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# deltaprime {} {}",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        if let Some(cfg) = &self.config {
            let _ = writeln!(
                out,
                "# config: {}",
                serde_json::to_string(cfg).unwrap_or_default()
            );
        }
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        for (k, v) in &self.trailer {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }

    fn to_json(&self) -> String {
        let map = |kv: &[(String, Value)]| Value::Object(kv.iter().cloned().collect());
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "meta": map(&self.meta),
            "columns": self.columns,
            "rows": self.rows,
            "trailer": map(&self.trailer),
        });
        let mut s = serde_json::to_string_pretty(&doc).unwrap_or_default();
        s.push('\n');
        s
    }
}

fn grid_meta(grid: &GridSpec) -> Value {
    json!({ "x_min": grid.x_min, "x_max": grid.x_max, "n": grid.n })
}

/// Exact and semiclassical states at time `t` on the configured grid.
pub fn cmd_evolve(config: &RunConfig, t: f64) -> Result<Table, CliError> {
    if !t.is_finite() {
        return Err(CliError::at("t", format!("must be finite, got {t}")));
    }
    let params = config.params();
    let grid = config.grid_at(t)?;
    let state = CoherentState::initial(&params, config.xi());
    let exact = evolve_exact_with(&params, &state, t, &grid, &config.quad_options())?;
    let semi = semiclassical_dynamics(&params, &state, t, &grid)?;
    let mut table = Table::new(
        "evolve",
        config,
        &[
            "x",
            "re_psi_exact",
            "im_psi_exact",
            "abs2_exact",
            "re_psi_semiclassical",
            "im_psi_semiclassical",
            "abs2_semiclassical",
            "abs_diff",
        ],
    );
    table.meta.push(("t".into(), number(t)));
    table.meta.push(("grid".into(), grid_meta(&grid)));
    for (i, x) in grid.nodes().into_iter().enumerate() {
        let (a, b) = (exact.values[i], semi.values[i]);
        table.rows.push(
            [
                x,
                a.re,
                a.im,
                a.norm_sqr(),
                b.re,
                b.im,
                b.norm_sqr(),
                (a - b).norm(),
            ]
            .into_iter()
            .map(number)
            .collect(),
        );
    }
    table
        .trailer
        .push(("l2_difference".into(), number(l2_distance(&exact, &semi)?)));
    table
        .trailer
        .push(("norm_exact".into(), number(exact.norm())));
    Ok(table)
}

/// One row per sweep record and a trailer with the fitted slope and constant.
pub fn cmd_sweep(config: &RunConfig) -> Result<Table, CliError> {
    let params = config.params();
    let kind = config.sweep.kind;
    let times = if kind.is_timed() {
        config.sweep_times()?
    } else {
        vec![0.0]
    };
    let records = run_sweep_with(
        &params,
        config.xi(),
        &config.regime,
        &config.hbar_values(),
        &times,
        kind,
        &config.quad_options(),
    )?;
    Ok(sweep_table(config, &records))
}

/// Formats sweep records; `wall_time` is included only when timings are on.
pub fn sweep_table(config: &RunConfig, records: &[SweepRecord]) -> Table {
    let mut columns = vec!["hbar", "underline_h", "t", "kind", "error_l2", "bound_rhs"];
    if config.output.timings {
        columns.push("wall_time");
    }
    let mut table = Table::new("sweep", config, &columns);
    for r in records {
        let mut row = vec![
            number(r.hbar),
            number(r.underline_h),
            number(r.t),
            Value::from(r.kind.name()),
            number(r.error_l2),
            number(r.bound_rhs),
        ];
        if config.output.timings {
            row.push(number(r.wall_time));
        }
        table.rows.push(row);
    }
    let (slope, intercept, r2) = match fit_slope(records) {
        Ok(f) => (f.slope, f.intercept, f.r2),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    let c = fit_constant(records).unwrap_or(f64::NAN);
    table.trailer.push(("slope".into(), number(slope)));
    table.trailer.push(("intercept".into(), number(intercept)));
    table.trailer.push(("r2".into(), number(r2)));
    table.trailer.push(("fitted_c".into(), number(c)));
    table.trailer.push((
        "bound_violations".into(),
        Value::from(bound_violations(records, c).len()),
    ));
    table
}

/// Times tabulated by `bound` when none are configured: 17 points on `[0, 4 t_coll]`.
fn bound_times(config: &RunConfig) -> Result<Vec<f64>, CliError> {
    if let Some(ts) = &config.sweep.times {
        return Ok(ts.clone());
    }
    let tc = collision_time(config.xi(), config.model.mass)?;
    Ok((0..=16).map(|i| 0.25 * tc * i as f64).collect())
}

/// The bracket terms per (ħ, t).
pub fn cmd_bound(config: &RunConfig) -> Result<Table, CliError> {
    let template = config.params();
    let xi = config.xi();
    let times = bound_times(config)?;
    let mut columns = vec!["hbar", "underline_h", "t", "eta"];
    columns.extend(crate::experiments::BoundTerms::NAMES);
    columns.extend(["dynamics", "waveop", "scatter"]);
    let mut table = Table::new("bound", config, &columns);
    for hbar in config.hbar_values() {
        let params = template.with_hbar(hbar);
        let h = underline_h(&params, xi)?;
        let eta = config.regime.eta(h);
        for &t in &times {
            let terms = bound_terms(&params, xi, t, eta)?;
            let mut row = vec![hbar, h, t, eta];
            row.extend(terms.values());
            row.extend([terms.dynamics(), terms.waveop(), terms.scatter()]);
            table.rows.push(row.into_iter().map(number).collect());
        }
    }
    Ok(table)
}

/// Outcome of one named invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String), CliError>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome {
            name,
            passed,
            detail,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Samples per randomized identity check.
pub const IDENTITY_SAMPLES: usize = 10_000;

/// Largest violation of the reflection-coefficient identities over random `k`:
/// `R₊ − R₋ = 2sgn(k)|R₊|²`, `conj(R±) = −R∓` and `|R±| ≤ 1`.
pub fn reflection_identity_residual(
    params: &ModelParams,
    samples: usize,
    seed: u64,
) -> Result<f64, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = params.epsilon().abs().clamp(1e-6, 1e6);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let k = scale
            * 10f64.powf(rng.gen_range(-4.0..4.0))
            * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let rp = reflection_coeff(params, Sign::Plus, k)?;
        let rm = reflection_coeff(params, Sign::Minus, k)?;
        worst = worst
            .max((rp - rm - 2.0 * sgn(k) * rp.norm_sqr()).norm())
            .max((rp.conj() + rm).norm())
            .max((rm.conj() + rp).norm())
            .max(rp.norm() - 1.0)
            .max(rm.norm() - 1.0);
    }
    Ok(worst)
}

/// A smooth complex phase-space test function.
fn test_function(a: PhasePoint, w: f64) -> impl Fn(PhasePoint) -> Complex64 + Copy {
    move |xi: PhasePoint| {
        let r2 = (xi.q - a.q).powi(2) + 0.5 * (xi.p - a.p).powi(2);
        Complex64::from_polar((-r2).exp(), w * xi.q - 0.3 * xi.p)
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> PhasePoint {
    PhasePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))
}

/// Largest pointwise violation of `W̆±W± = 1`, `W±W̆± = 1`, `S^cl W⁺ = W⁻` and of
/// the group law `e^{−i(t+s)L_B} = e^{−itL_B}e^{−isL_B}` away from gate boundaries.
pub fn classical_identity_residual(
    coupling: &ClassicalCoupling,
    m: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < samples {
        let f = test_function(random_point(&mut rng), rng.gen_range(-2.0..2.0));
        let xi = random_point(&mut rng);
        let (t, s) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        // skip points where a gate θ(|pτ|/m − |q|) is within round-off of switching
        let near_gate = |q: f64, p: f64, tau: f64| ((p * tau).abs() / m - q.abs()).abs() < 1e-9;
        let (q, p) = (xi.q, xi.p);
        let q1 = q - p * t / m;
        if near_gate(q, p, t)
            || near_gate(q, p, t + s)
            || near_gate(q1, p, s)
            || near_gate(-q1, -p, s)
        {
            continue;
        }
        done += 1;
        for sign in [Sign::Plus, Sign::Minus] {
            let w = |x: PhasePoint| classical_wave(coupling, m, sign, &f, x);
            let back = classical_wave_reverse(coupling, m, sign, &w, xi);
            worst = worst.max((back - f(xi)).norm());
            let wr = |x: PhasePoint| classical_wave_reverse(coupling, m, sign, &f, x);
            let fwd = classical_wave(coupling, m, sign, &wr, xi);
            worst = worst.max((fwd - f(xi)).norm());
        }
        let w_plus = |x: PhasePoint| classical_wave(coupling, m, Sign::Plus, &f, x);
        let lhs = classical_scatter(coupling, m, &w_plus, xi);
        worst = worst.max((lhs - classical_wave(coupling, m, Sign::Minus, &f, xi)).norm());
        let inner = |x: PhasePoint| flow_apply(coupling, m, &f, s, x);
        let composed = flow_apply(coupling, m, &inner, t, xi);
        worst = worst.max((composed - flow_apply(coupling, m, &f, t + s, xi)).norm());
    }
    worst
}

fn relative_l2(a: &WaveSample, b: &WaveSample) -> Result<f64, CliError> {
    Ok(l2_distance(a, b)? / b.norm())
}

/// Runs the invariant suite on the configured model.
pub fn run_checks(config: &RunConfig) -> Vec<CheckOutcome> {
    let params = config.params();
    let xi = config.xi();
    let opts = config.quad_options();
    let state = CoherentState::initial(&params, xi);
    let mut out = Vec::new();

    out.push(outcome(
        "free_correspondence",
        (|| {
            let free = params.with_beta(0.0);
            let mut worst: f64 = 0.0;
            for t in [0.5, 1.0, 2.0, 5.0] {
                let grid = error_grid(&free, xi, t);
                worst = worst.max(dynamics_error_with(&free, xi, t, &grid, &opts)?);
            }
            Ok((worst <= 1e-7, format!("max error {worst:.3e} <= 1e-7")))
        })(),
    ));

    out.push(outcome(
        "time_zero_identity",
        (|| {
            let e = dynamics_error_with(&params, xi, 0.0, &config.grid_at(0.0)?, &opts)?;
            Ok((e <= 1e-7, format!("error {e:.3e} <= 1e-7")))
        })(),
    ));

    out.push(outcome(
        "decomposition_vs_spectral",
        (|| {
            let mut worst: f64 = 0.0;
            for t in [0.5, 2.0] {
                let grid = config.grid_at(t)?;
                let a = evolve_exact_with(&params, &state, t, &grid, &opts)?;
                let (b, _) = evolve_spectral(&params, &state, t, &grid, &opts)?;
                worst = worst.max(relative_l2(&a, &b)?);
            }
            Ok((worst <= 1e-6, format!("relative L2 {worst:.3e} <= 1e-6")))
        })(),
    ));

    out.push(outcome(
        "unitarity",
        (|| {
            let mut worst: f64 = 0.0;
            for t in [0.5, 2.0, 5.0] {
                let psi = evolve_exact_with(&params, &state, t, &config.grid_at(t)?, &opts)?;
                worst = worst.max((psi.norm() - 1.0).abs());
            }
            Ok((worst <= 1e-6, format!("max |norm - 1| {worst:.3e} <= 1e-6")))
        })(),
    ));

    out.push(outcome(
        "completeness",
        (|| {
            let (f, _) = transform_norm_sqr(&params, &state, &opts)?;
            let b = bound_weight(&params, &state);
            let r = (f + b * b - 1.0).abs();
            Ok((
                r <= 1e-6,
                format!("|int |F+ psi|^2 + |<phi, psi>|^2 - 1| = {r:.3e} <= 1e-6"),
            ))
        })(),
    ));

    out.push(outcome(
        "reflection_identities",
        (|| {
            let r = reflection_identity_residual(&params, IDENTITY_SAMPLES, 7)?;
            Ok((r <= 1e-14, format!("max residual {r:.3e} <= 1e-14")))
        })(),
    ));

    out.push(outcome(
        "classical_identities",
        (|| {
            let coupling = ClassicalCoupling::from_params(&params);
            let r = classical_identity_residual(&coupling, params.mass, IDENTITY_SAMPLES, 11);
            Ok((r <= 1e-14, format!("max residual {r:.3e} <= 1e-14")))
        })(),
    ));

    out.push(outcome(
        "parity",
        (|| {
            let t = 2.0 * collision_time(xi, params.mass)?;
            let grid = config.grid_at(t)?;
            let a = dynamics_error_with(&params, xi, t, &grid, &opts)?;
            let b = dynamics_error_with(&params, PhasePoint::new(-xi.q, -xi.p), t, &grid, &opts)?;
            let r = (a - b).abs() / a.max(f64::MIN_POSITIVE);
            Ok((r <= 1e-6, format!("relative difference {r:.3e} <= 1e-6")))
        })(),
    ));

    out.push(outcome(
        "scaling",
        (|| {
            let kind = config.sweep.kind;
            let times = if kind.is_timed() {
                config.sweep_times()?
            } else {
                vec![0.0]
            };
            let records = run_sweep_with(
                &params,
                xi,
                &config.regime,
                &config.hbar_values(),
                &times,
                kind,
                &opts,
            )?;
            let fit = fit_slope(&records)?;
            let c = fit_constant(&records).unwrap_or(f64::NAN);
            let violations = bound_violations(&records, c).len();
            Ok((
                fit.slope >= 3.0 && violations == 0,
                format!(
                    "{} slope {:.3} >= 3, {violations} records above C bound (C = {c:.3e})",
                    kind.name(),
                    fit.slope
                ),
            ))
        })(),
    ));

    out.push(outcome(
        "collision_window",
        (|| {
            let tc = collision_time(xi, params.mass)?;
            let times = config.sweep_times()?;
            let at = dynamics_error_with(&params, xi, tc, &config.grid_at(tc)?, &opts)?;
            let mut away: f64 = 0.0;
            for &t in &times {
                away = away.max(dynamics_error_with(
                    &params,
                    xi,
                    t,
                    &config.grid_at(t)?,
                    &opts,
                )?);
            }
            let ratio = at / away;
            Ok((
                ratio >= 10.0,
                format!("error at t_coll / admissible = {ratio:.3e} >= 10"),
            ))
        })(),
    ));

    out
}

pub fn cmd_check(config: &RunConfig) -> (Table, bool) {
    let outcomes = run_checks(config);
    let mut table = Table::new("check", config, &["invariant", "passed", "detail"]);
    for o in &outcomes {
        table.rows.push(vec![
            Value::from(o.name),
            Value::from(o.passed),
            Value::from(o.detail.clone()),
        ]);
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    table.trailer.push(("failed".into(), json!(failed)));
    (table, failed.is_empty())
}

/// Writes `text` to `path`, or to stdout when there is no path.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::at("output.path", format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::config(format!("stdout: {e}")))
        }
    }
}
