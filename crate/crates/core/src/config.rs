//! Line-oriented experiment configuration.
//!
//! The format is `section.key = value`, one setting per line; `#` starts a
//! comment. Parsing is two-phase: the raw key/value table is built first
//! (recording duplicates), then typed extraction and cross-field validation
//! run over it. Every problem is collected with its line number so a broken
//! file reports all of its errors at once.

use std::collections::BTreeMap;
use std::fmt;

use crate::chaos::{BasisFamily, BasisSpec};
use crate::macroscale::BoundaryMode;

/// One line-numbered problem found while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line number; 0 for file-level problems.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// All problems of one parse attempt.
#[derive(Debug, Clone)]
pub struct ConfigErrors(pub Vec<Diagnostic>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for d in &self.0 {
            writeln!(f, "  {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Micro {
        second_order: bool,
        leader_speed: f64,
        leader_accel: f64,
        dt: f64,
    },
    Kinetic {
        epsilon: f64,
        hesitation: f64,
    },
    Lwr,
    Arz {
        epsilon: Option<f64>,
        hesitation: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub a: f64,
    pub b: f64,
    pub n_x: usize,
    pub cfl: f64,
    pub t_f: f64,
    pub boundary: BoundaryMode,
    /// Velocity cells; kinetic model only.
    pub n_w: Option<usize>,
    pub w_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConfig {
    Riemann {
        u1: f64,
        u2: f64,
        rho_r: f64,
        x_jump: f64,
    },
    Platoon {
        n: usize,
        car_length: f64,
        x0: f64,
        spacing: f64,
        amp: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: Option<String>,
    pub snapshots: Vec<f64>,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    None,
    Micro2Macro { n_list: Vec<usize> },
    Meso2Macro { epsilon_list: Vec<f64> },
    FdScan { rho_r_list: Vec<f64> },
    McCompare { samples: usize, seed: u64, atol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub basis: BasisSpec,
    pub model: ModelKind,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub output: OutputConfig,
    pub experiment: ExperimentKind,
}

struct RawTable {
    entries: BTreeMap<String, (usize, String)>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
    errors: Vec<Diagnostic>,
}

impl RawTable {
    fn build(text: &str) -> Self {
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key_part, value_part)) = line.split_once('=') else {
                errors.push(Diagnostic {
                    line: line_no,
                    message: format!("expected `section.key = value`, got `{line}`"),
                });
                continue;
            };
            let key = key_part.trim().to_ascii_lowercase();
            let value = value_part.trim().to_string();
            if key.split('.').count() != 2 || key.split('.').any(str::is_empty) {
                errors.push(Diagnostic {
                    line: line_no,
                    message: format!("key `{key}` is not of the form section.key"),
                });
                continue;
            }
            if value.is_empty() {
                errors.push(Diagnostic {
                    line: line_no,
                    message: format!("key `{key}` has an empty value"),
                });
                continue;
            }
            if let Some((first_line, _)) = entries.get(&key) {
                errors.push(Diagnostic {
                    line: line_no,
                    message: format!(
                        "duplicate key `{key}` (first set on line {first_line})"
                    ),
                });
                continue;
            }
            entries.insert(key, (line_no, value));
        }
        RawTable {
            entries,
            consumed: Default::default(),
            errors,
        }
    }

    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.consumed.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn unknown_key_errors(&self) -> Vec<Diagnostic> {
        let consumed = self.consumed.borrow();
        self.entries
            .iter()
            .filter(|(k, _)| !consumed.contains(*k))
            .map(|(k, (line, _))| Diagnostic {
                line: *line,
                message: format!("unknown key `{k}`"),
            })
            .collect()
    }
}

struct Extractor<'a> {
    raw: &'a RawTable,
    errors: Vec<Diagnostic>,
}

impl<'a> Extractor<'a> {
    fn err(&mut self, line: usize, message: String) {
        self.errors.push(Diagnostic { line, message });
    }

    fn required(&mut self, key: &str) -> Option<(usize, String)> {
        match self.raw.get(key) {
            Some((l, v)) => Some((l, v.to_string())),
            None => {
                self.err(0, format!("missing required key `{key}`"));
                None
            }
        }
    }

    fn f64_opt(&mut self, key: &str) -> Option<(usize, f64)> {
        let (line, v) = self.raw.get(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some((line, x)),
            _ => {
                let v = v.to_string();
                self.err(line, format!("`{key}` must be a finite number, got `{v}`"));
                None
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        self.f64_opt(key).map(|(_, x)| x).unwrap_or(default)
    }

    fn usize_opt(&mut self, key: &str) -> Option<(usize, usize)> {
        let (line, v) = self.raw.get(key)?;
        match v.parse::<i64>() {
            Ok(x) if x >= 0 => Some((line, x as usize)),
            Ok(x) => {
                self.err(line, format!("`{key}` must be nonnegative, got {x}"));
                None
            }
            Err(_) => {
                let v = v.to_string();
                self.err(line, format!("`{key}` must be an integer, got `{v}`"));
                None
            }
        }
    }

    fn u64_opt(&mut self, key: &str) -> Option<(usize, u64)> {
        let (line, v) = self.raw.get(key)?;
        match v.parse::<u64>() {
            Ok(x) => Some((line, x)),
            Err(_) => {
                let v = v.to_string();
                self.err(line, format!("`{key}` must be a u64, got `{v}`"));
                None
            }
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> bool {
        match self.raw.get(key) {
            None => default,
            Some((line, v)) => match v {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => {
                    let other = other.to_string();
                    self.err(line, format!("`{key}` must be true/false, got `{other}`"));
                    default
                }
            },
        }
    }

    fn f64_list(&mut self, key: &str) -> Option<(usize, Vec<f64>)> {
        let (line, v) = self.raw.get(key)?;
        let v = v.to_string();
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    self.err(line, format!("`{key}` has a non-numeric entry `{}`", part.trim()));
                    return None;
                }
            }
        }
        Some((line, out))
    }

    fn usize_list(&mut self, key: &str) -> Option<(usize, Vec<usize>)> {
        let (line, v) = self.raw.get(key)?;
        let v = v.to_string();
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse::<usize>() {
                Ok(x) => out.push(x),
                _ => {
                    self.err(line, format!("`{key}` has a non-integer entry `{}`", part.trim()));
                    return None;
                }
            }
        }
        Some((line, out))
    }
}

/// Parses and fully validates a configuration file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let raw = RawTable::build(text);
    let mut ex = Extractor {
        raw: &raw,
        errors: Vec::new(),
    };

    // ---- basis ----
    let family = match ex.required("basis.family") {
        Some((line, v)) => match BasisFamily::parse(&v) {
            Some(f) => Some(f),
            None => {
                ex.err(line, format!("`basis.family` must be haar or legendre, got `{v}`"));
                None
            }
        },
        None => None,
    };
    let order = ex.usize_opt("basis.k").map(|(_, k)| k).or_else(|| {
        if raw.get("basis.k").is_none() {
            ex.err(0, "missing required key `basis.k`".into());
        }
        None
    });
    let basis = match (family, order) {
        (Some(f), Some(k)) => {
            let mut spec = BasisSpec::new(f, k);
            if let Some((line, q)) = ex.usize_opt("basis.q") {
                if q == 0 {
                    ex.err(line, "`basis.q` must be positive".into());
                } else {
                    spec.quadrature_points = q;
                }
            }
            if let Err(e) = spec.validate() {
                let line = raw.get("basis.k").map(|(l, _)| l).unwrap_or(0);
                ex.err(line, format!("invalid basis: {e}"));
                None
            } else {
                Some(spec)
            }
        }
        _ => {
            let _ = ex.usize_opt("basis.q");
            None
        }
    };

    // ---- model ----
    let model_kind = ex.required("model.kind");
    let model = match &model_kind {
        Some((line, kind)) => match kind.as_str() {
            "micro" => Some(ModelKind::Micro {
                second_order: ex.bool_or("model.second_order", false),
                leader_speed: ex.f64_or("model.leader_speed", 1.0),
                leader_accel: ex.f64_or("model.leader_accel", 0.0),
                dt: {
                    let dt = ex.f64_or("model.dt", 1e-3);
                    if dt <= 0.0 {
                        let l = raw.get("model.dt").map(|(l, _)| l).unwrap_or(0);
                        ex.err(l, "`model.dt` must be positive".into());
                    }
                    dt
                },
            }),
            "kinetic" => {
                let epsilon = ex.f64_or("model.epsilon", 1e-2);
                if epsilon <= 0.0 {
                    let l = raw.get("model.epsilon").map(|(l, _)| l).unwrap_or(0);
                    ex.err(l, "`model.epsilon` must be positive".into());
                }
                Some(ModelKind::Kinetic {
                    epsilon,
                    hesitation: nonneg(&mut ex, &raw, "model.hesitation", 0.5),
                })
            }
            "lwr" => Some(ModelKind::Lwr),
            "arz" => {
                let epsilon = match ex.f64_opt("model.epsilon") {
                    Some((l, e)) if e <= 0.0 => {
                        ex.err(l, "`model.epsilon` must be positive".into());
                        None
                    }
                    Some((_, e)) => Some(e),
                    None => None,
                };
                Some(ModelKind::Arz {
                    epsilon,
                    hesitation: nonneg(&mut ex, &raw, "model.hesitation", 0.5),
                })
            }
            other => {
                ex.err(
                    *line,
                    format!("`model.kind` must be micro, kinetic, lwr or arz, got `{other}`"),
                );
                None
            }
        },
        None => None,
    };

    // ---- grid ----
    let a = ex.f64_or("grid.a", 0.0);
    let b = ex.f64_or("grid.b", 2.0);
    if b <= a {
        let l = raw.get("grid.b").map(|(l, _)| l).unwrap_or(0);
        ex.err(l, format!("grid has nonpositive length ({a} .. {b})"));
    }
    let n_x = match ex.usize_opt("grid.n_x") {
        Some((l, 0)) => {
            ex.err(l, "`grid.n_x` must be positive".into());
            0
        }
        Some((_, n)) => n,
        None => 200,
    };
    let cfl = ex.f64_or("grid.cfl", 0.45);
    if !(cfl > 0.0 && cfl <= 1.0) {
        let l = raw.get("grid.cfl").map(|(l, _)| l).unwrap_or(0);
        ex.err(l, format!("`grid.cfl` must lie in (0, 1], got {cfl}"));
    }
    let t_f = ex.f64_or("grid.t_f", 1.0);
    if t_f <= 0.0 {
        let l = raw.get("grid.t_f").map(|(l, _)| l).unwrap_or(0);
        ex.err(l, "`grid.t_f` must be positive".into());
    }
    let boundary = match raw.get("grid.boundary") {
        None => BoundaryMode::Outflow,
        Some((line, v)) => match v {
            "outflow" => BoundaryMode::Outflow,
            "periodic" => BoundaryMode::Periodic,
            other => {
                let other = other.to_string();
                ex.err(line, format!("`grid.boundary` must be outflow or periodic, got `{other}`"));
                BoundaryMode::Outflow
            }
        },
    };
    let n_w = match ex.usize_opt("grid.n_w") {
        Some((l, 0)) => {
            ex.err(l, "`grid.n_w` must be positive".into());
            None
        }
        Some((_, n)) => Some(n),
        None => None,
    };
    let w_max = match ex.f64_opt("grid.w_max") {
        Some((l, w)) if w <= 0.0 => {
            ex.err(l, "`grid.w_max` must be positive".into());
            None
        }
        Some((_, w)) => Some(w),
        None => None,
    };
    if matches!(model, Some(ModelKind::Kinetic { .. })) && n_w.is_none() {
        ex.err(0, "kinetic model requires `grid.n_w`".into());
    }
    let grid = GridConfig {
        a,
        b,
        n_x,
        cfl,
        t_f,
        boundary,
        n_w,
        w_max,
    };

    // ---- initial ----
    let initial_kind = raw
        .get("initial.kind")
        .map(|(l, v)| (l, v.to_string()))
        .unwrap_or((0, "riemann".to_string()));
    let initial = match initial_kind.1.as_str() {
        "riemann" => {
            let u1 = unit_interval(&mut ex, "initial.u1", 0.75);
            let u2 = unit_interval(&mut ex, "initial.u2", 0.95);
            let rho_r = unit_interval(&mut ex, "initial.rho_r", 0.2);
            let x_jump = ex.f64_or("initial.x_jump", 0.5 * (a + b));
            if b > a && !(x_jump > a && x_jump < b) {
                let l = raw.get("initial.x_jump").map(|(l, _)| l).unwrap_or(0);
                ex.err(l, format!("`initial.x_jump` = {x_jump} lies outside ({a}, {b})"));
            }
            Some(InitialConfig::Riemann {
                u1,
                u2,
                rho_r,
                x_jump,
            })
        }
        "platoon" => {
            let n = match ex.usize_opt("initial.n") {
                Some((l, n)) if n < 2 => {
                    ex.err(l, "`initial.n` must be at least 2".into());
                    n
                }
                Some((_, n)) => n,
                None => 20,
            };
            let car_length = positive(&mut ex, &raw, "initial.car_length", 1.0 / n.max(2) as f64);
            let spacing = positive(&mut ex, &raw, "initial.spacing", 0.1);
            Some(InitialConfig::Platoon {
                n,
                car_length,
                x0: ex.f64_or("initial.x0", 0.0),
                spacing,
                amp: nonneg(&mut ex, &raw, "initial.amp", 0.0),
            })
        }
        other => {
            ex.err(
                initial_kind.0,
                format!("`initial.kind` must be riemann or platoon, got `{other}`"),
            );
            None
        }
    };

    // ---- output ----
    let snapshots = match ex.f64_list("output.snapshots") {
        Some((line, list)) => {
            if list.iter().any(|&t| t < 0.0) {
                ex.err(line, "`output.snapshots` entries must be nonnegative".into());
            }
            list
        }
        None => Vec::new(),
    };
    let output = OutputConfig {
        directory: raw.get("output.directory").map(|(_, v)| v.to_string()),
        snapshots,
        svg: ex.bool_or("output.svg", false),
    };

    // ---- experiment ----
    let exp_kind = raw
        .get("experiment.kind")
        .map(|(l, v)| (l, v.to_string()))
        .unwrap_or((0, "none".to_string()));
    let experiment = match exp_kind.1.as_str() {
        "none" => Some(ExperimentKind::None),
        "micro2macro" => match ex.usize_list("experiment.n_list") {
            Some((line, list)) => {
                if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) || list[0] < 2 {
                    ex.err(line, "`experiment.n_list` must be a strictly ascending list of car counts ≥ 2".into());
                    None
                } else {
                    Some(ExperimentKind::Micro2Macro { n_list: list })
                }
            }
            None => {
                ex.err(0, "micro2macro experiment requires `experiment.n_list`".into());
                None
            }
        },
        "meso2macro" => match ex.f64_list("experiment.epsilon_list") {
            Some((line, list)) => {
                if list.is_empty()
                    || list.iter().any(|&e| e <= 0.0)
                    || list.windows(2).any(|w| w[0] <= w[1])
                {
                    ex.err(line, "`experiment.epsilon_list` must be a strictly descending list of positive relaxation times".into());
                    None
                } else {
                    Some(ExperimentKind::Meso2Macro { epsilon_list: list })
                }
            }
            None => {
                ex.err(0, "meso2macro experiment requires `experiment.epsilon_list`".into());
                None
            }
        },
        "fdscan" => match ex.f64_list("experiment.rho_r_list") {
            Some((line, list)) => {
                if list.is_empty() || list.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
                    ex.err(line, "`experiment.rho_r_list` entries must lie in [0, 1]".into());
                    None
                } else {
                    Some(ExperimentKind::FdScan { rho_r_list: list })
                }
            }
            None => {
                ex.err(0, "fdscan experiment requires `experiment.rho_r_list`".into());
                None
            }
        },
        "mccompare" => {
            let samples = match ex.usize_opt("experiment.samples") {
                Some((l, n)) if n < 2 => {
                    ex.err(l, "`experiment.samples` must be at least 2".into());
                    n
                }
                Some((_, n)) => n,
                None => 1000,
            };
            let seed = ex.u64_opt("experiment.seed").map(|(_, s)| s).unwrap_or(0);
            let atol = positive(&mut ex, &raw, "experiment.atol", crate::mc::COMPARE_ATOL);
            Some(ExperimentKind::McCompare {
                samples,
                seed,
                atol,
            })
        }
        other => {
            ex.err(
                exp_kind.0,
                format!(
                    "`experiment.kind` must be none, micro2macro, meso2macro, fdscan or mccompare, got `{other}`"
                ),
            );
            None
        }
    };

    // experiment/model compatibility
    if let (Some(m), Some(e)) = (&model, &experiment) {
        let ok = match e {
            ExperimentKind::None => true,
            ExperimentKind::Micro2Macro { .. } => matches!(m, ModelKind::Micro { .. }),
            ExperimentKind::Meso2Macro { .. } => matches!(m, ModelKind::Kinetic { .. }),
            ExperimentKind::FdScan { .. } | ExperimentKind::McCompare { .. } => {
                matches!(m, ModelKind::Lwr)
            }
        };
        if !ok {
            let l = raw.get("experiment.kind").map(|(l, _)| l).unwrap_or(0);
            ex.err(l, "experiment is not supported by the chosen model".into());
        }
    }

    let mut errors = raw.errors.clone();
    errors.extend(ex.errors);
    errors.extend(raw.unknown_key_errors());
    errors.sort_by_key(|d| d.line);
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(ExperimentConfig {
        basis: basis.expect("validated"),
        model: model.expect("validated"),
        grid,
        initial: initial.expect("validated"),
        output,
        experiment: experiment.expect("validated"),
    })
}

fn unit_interval(ex: &mut Extractor<'_>, key: &str, default: f64) -> f64 {
    match ex.f64_opt(key) {
        Some((line, v)) => {
            if !(0.0..=1.0).contains(&v) {
                ex.err(line, format!("`{key}` must lie in [0, 1], got {v}"));
            }
            v
        }
        None => default,
    }
}

fn positive(ex: &mut Extractor<'_>, raw: &RawTable, key: &str, default: f64) -> f64 {
    let v = ex.f64_or(key, default);
    if v <= 0.0 {
        let l = raw.get(key).map(|(l, _)| l).unwrap_or(0);
        ex.err(l, format!("`{key}` must be positive"));
    }
    v
}

fn nonneg(ex: &mut Extractor<'_>, raw: &RawTable, key: &str, default: f64) -> f64 {
    let v = ex.f64_or(key, default);
    if v < 0.0 {
        let l = raw.get(key).map(|(l, _)| l).unwrap_or(0);
        ex.err(l, format!("`{key}` must be nonnegative"));
    }
    v
}

impl GridConfig {
    /// Cell width of the spatial grid.
    pub fn dx_equivalent(&self) -> f64 {
        (self.b - self.a) / self.n_x as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASELINE: &str = "\
# baseline Riemann setup
basis.family = haar
basis.k = 15
model.kind = lwr
grid.a = 0.0
grid.b = 2.0
grid.n_x = 200
grid.cfl = 0.45
grid.t_f = 1.0
initial.kind = riemann
initial.u1 = 0.75
initial.u2 = 0.95
initial.rho_r = 0.2
initial.x_jump = 1.0
";

    #[test]
    fn baseline_file_parses() {
        let cfg = parse_config(BASELINE).unwrap();
        assert_eq!(cfg.basis.family, BasisFamily::Haar);
        assert_eq!(cfg.basis.order, 15);
        assert_eq!(cfg.model, ModelKind::Lwr);
        assert_eq!(cfg.grid.n_x, 200);
        assert_eq!(cfg.grid.dx_equivalent(), 0.01);
        assert_eq!(
            cfg.initial,
            InitialConfig::Riemann {
                u1: 0.75,
                u2: 0.95,
                rho_r: 0.2,
                x_jump: 1.0
            }
        );
        assert_eq!(cfg.experiment, ExperimentKind::None);
    }

    #[test]
    fn negative_order_is_a_range_error() {
        let text = BASELINE.replace("basis.k = 15", "basis.k = -1");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|d| d.message.contains("basis.k")), "{err}");
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let text = format!("{BASELINE}initial.rho_r = 0.3\n");
        let err = parse_config(&text).unwrap_err();
        let d = err
            .0
            .iter()
            .find(|d| d.message.contains("duplicate"))
            .unwrap();
        assert!(d.message.contains("initial.rho_r"));
        assert!(d.message.contains("line 13"), "{}", d.message);
        assert_eq!(d.line, 15);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = format!("{BASELINE}grid.dz = 3\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|d| d.message.contains("unknown key `grid.dz`")));
    }

    #[test]
    fn all_errors_reported_at_once() {
        let text = "\
basis.family = fourier
basis.k = -1
model.kind = lwr
grid.cfl = 3.0
initial.u1 = 1.5
";
        let err = parse_config(text).unwrap_err();
        assert!(err.0.len() >= 4, "{err}");
        let lines: Vec<usize> = err.0.iter().map(|d| d.line).collect();
        for want in [1, 2, 4, 5] {
            assert!(lines.contains(&want), "missing diagnostic for line {want}: {err}");
        }
    }

    #[test]
    fn kinetic_needs_velocity_grid() {
        let text = BASELINE.replace("model.kind = lwr", "model.kind = kinetic");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|d| d.message.contains("grid.n_w")));
        let ok = format!("{}grid.n_w = 20\n", text);
        parse_config(&ok).unwrap();
    }

    #[test]
    fn experiment_model_compatibility() {
        let text = format!("{BASELINE}experiment.kind = micro2macro\nexperiment.n_list = 100,200\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|d| d.message.contains("not supported")));
    }

    #[test]
    fn fdscan_experiment_parses() {
        let text = format!("{BASELINE}experiment.kind = fdscan\nexperiment.rho_r_list = 0.0, 0.5, 1.0\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(
            cfg.experiment,
            ExperimentKind::FdScan {
                rho_r_list: vec![0.0, 0.5, 1.0]
            }
        );
    }

    #[test]
    fn descending_epsilon_list_enforced() {
        let text = BASELINE.replace("model.kind = lwr", "model.kind = kinetic")
            + "grid.n_w = 20\nexperiment.kind = meso2macro\nexperiment.epsilon_list = 1e-3, 1e-2\n";
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|d| d.message.contains("descending")));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = format!("\n  # full-line comment\n{BASELINE}");
        parse_config(&text).unwrap();
    }
}
