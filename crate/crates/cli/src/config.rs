//! Line-oriented `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dpt_core::idtc::IdtcParams;
use dpt_core::kpo::KpoParams;
use dpt_core::oscillator::OscParams;
use dpt_core::phasediag::{Mode, ModelParams};
use num_complex::Complex;

/// All problems found in one config, reported together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem{}):", self.problems.len(), if self.problems.len() == 1 { "" } else { "s" })?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Kpo,
    Idtc,
    Oscillator,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Kpo => "kpo",
            Model::Idtc => "idtc",
            Model::Oscillator => "oscillator",
        }
    }

    /// Physical parameters and their defaults.
    pub fn parameters(&self) -> &'static [(&'static str, f64)] {
        match self {
            Model::Kpo => &[("delta", 0.0), ("kerr", 1.0), ("g", 0.0), ("g_phase", 0.0), ("kappa", 0.0)],
            Model::Idtc => {
                &[("omega_c", 1.0), ("omega_z", 1.0), ("lambda_x", 0.0), ("lambda_y", 0.0), ("kappa", 0.0)]
            }
            Model::Oscillator => &[("omega0", 1.0), ("kappa", 0.0), ("sigma", 1.0)],
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kpo" => Ok(Model::Kpo),
            "idtc" => Ok(Model::Idtc),
            "oscillator" => Ok(Model::Oscillator),
            _ => Err(format!("unknown model `{s}` (expected kpo, idtc or oscillator)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GroundState,
    SteadyStates,
    Excitations,
    Stability,
    Variance,
    Response,
    Sweep,
    Boundary,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::GroundState,
        Command::SteadyStates,
        Command::Excitations,
        Command::Stability,
        Command::Variance,
        Command::Response,
        Command::Sweep,
        Command::Boundary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::SteadyStates => "steady-states",
            Command::Excitations => "excitations",
            Command::Stability => "stability",
            Command::Variance => "variance",
            Command::Response => "response",
            Command::Sweep => "sweep",
            Command::Boundary => "boundary",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Explicit frequency grid for `response`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl FrequencyGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub param: String,
    pub start: f64,
    pub end: f64,
    /// Optional transverse cut: one bisection per cut value.
    pub cut: Option<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub command: Command,
    /// Physical parameters with defaults filled in.
    pub params: BTreeMap<String, f64>,
    /// Steady-state branch index; `0` is the normal phase.
    pub branch: usize,
    pub mode: Mode,
    pub grid: Option<FrequencyGrid>,
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub trace: bool,
    pub boundary: BoundarySpec,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn kpo(&self) -> dpt_core::Result<KpoParams<f64>> {
        let pump = Complex::from_polar(self.param("g"), self.param("g_phase"));
        KpoParams::new(self.param("delta"), self.param("kerr"), pump, self.param("kappa"))
    }

    pub fn idtc(&self) -> dpt_core::Result<IdtcParams<f64>> {
        IdtcParams::new(
            self.param("omega_c"),
            self.param("omega_z"),
            self.param("lambda_x"),
            self.param("lambda_y"),
            self.param("kappa"),
        )
    }

    pub fn oscillator(&self) -> dpt_core::Result<OscParams<f64>> {
        OscParams::new(self.param("omega0"), self.param("kappa"), self.param("sigma"))
    }

    pub fn model_params(&self) -> dpt_core::Result<ModelParams<f64>> {
        match self.model {
            Model::Kpo => Ok(ModelParams::Kpo(self.kpo()?)),
            Model::Idtc => Ok(ModelParams::Idtc(self.idtc()?)),
            Model::Oscillator => {
                Err(dpt_core::Error::Validation("the oscillator has no phase diagram".into()))
            }
        }
    }
}

const GENERAL_KEYS: &[&str] = &["model", "command", "format", "out", "branch", "mode"];
const GRID_KEYS: &[&str] = &["omega_min", "omega_max", "omega_points"];
const SWEEP_KEYS: &[&str] = &["x_param", "x_min", "x_max", "x_points", "y_param", "y_min", "y_max", "y_points", "trace"];
const BOUNDARY_KEYS: &[&str] =
    &["boundary_param", "boundary_start", "boundary_end", "cut_param", "cut_min", "cut_max", "cut_points"];
const PHYSICAL_KEYS: &[&str] =
    &["delta", "kerr", "g", "g_phase", "kappa", "omega_c", "omega_z", "lambda_x", "lambda_y", "omega0", "sigma"];

/// Text for `--help`.
pub fn keys_help() -> String {
    let mut s = String::from("Config keys (`key = value`, `#` starts a comment):\n");
    s.push_str("  model            kpo | idtc | oscillator (required)\n");
    s.push_str("  command          one of the subcommands (required unless given on the command line)\n");
    s.push_str("  format           csv | json [csv]\n  out              output path [stdout]\n");
    s.push_str("  branch           steady-state index, 0 = normal phase [0]\n");
    s.push_str("  mode             open | closed, for sweep and boundary [open]\n");
    for m in [Model::Kpo, Model::Idtc, Model::Oscillator] {
        let list: Vec<String> = m.parameters().iter().map(|(k, v)| format!("{k}={v}")).collect();
        s.push_str(&format!("  {:<16} {}\n", format!("{} params", m.as_str()), list.join(", ")));
    }
    s.push_str("  omega_min, omega_max, omega_points   response grid [adaptive]\n");
    s.push_str("  x_param, x_min, x_max, x_points      sweep x axis [kpo: delta -2..2; idtc: lambda_x 0..1.5; 101]\n");
    s.push_str("  y_param, y_min, y_max, y_points      sweep y axis [kpo: g 0..2; idtc: lambda_y 0..1.5; 101]\n");
    s.push_str("  trace            true | false, bisect label changes along x [false]\n");
    s.push_str("  boundary_param, boundary_start, boundary_end   bisection segment [kpo: g 0..2; idtc: lambda 0..1.5]\n");
    s.push_str("  cut_param, cut_min, cut_max, cut_points      optional transverse cut\n");
    s
}

/// Parses `text`; `command` on the command line overrides the file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, None)
}

pub fn parse_config_with(text: &str, command_override: Option<Command>) -> Result<RunConfig, ConfigError> {
    let mut problems = Vec::new();
    let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            problems.push(format!("line {lineno}: expected `key = value`"));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            problems.push(format!("line {lineno}: empty key"));
            continue;
        }
        if raw.insert(k.to_string(), (lineno, v.to_string())).is_some() {
            problems.push(format!("line {lineno}: duplicate key `{k}`"));
        }
    }

    let model = match raw.get("model") {
        None => {
            problems.push("missing required key `model`".into());
            None
        }
        Some((l, v)) => v.parse::<Model>().map_err(|e| problems.push(format!("line {l}: {e}"))).ok(),
    };
    let command = match (command_override, raw.get("command")) {
        (Some(c), _) => Some(c),
        (None, None) => {
            problems.push("missing required key `command`".into());
            None
        }
        (None, Some((l, v))) => v.parse::<Command>().map_err(|e| problems.push(format!("line {l}: {e}"))).ok(),
    };

    // Unknown keys, including physical keys of another model.
    for (k, (l, _)) in &raw {
        let known = GENERAL_KEYS.contains(&k.as_str())
            || GRID_KEYS.contains(&k.as_str())
            || SWEEP_KEYS.contains(&k.as_str())
            || BOUNDARY_KEYS.contains(&k.as_str());
        if known {
            continue;
        }
        match model {
            Some(m) if m.parameters().iter().any(|(p, _)| p == k) => {}
            Some(m) if PHYSICAL_KEYS.contains(&k.as_str()) => {
                problems.push(format!("line {l}: `{k}` is not a parameter of model {}", m.as_str()))
            }
            None if PHYSICAL_KEYS.contains(&k.as_str()) => {}
            _ => problems.push(format!("line {l}: unknown key `{k}`")),
        }
    }

    let num = |key: &str, problems: &mut Vec<String>| -> Option<f64> {
        let (l, v) = raw.get(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            Ok(_) => {
                problems.push(format!("line {l}: `{key}` must be finite"));
                None
            }
            Err(_) => {
                problems.push(format!("line {l}: `{key}` is not a number: `{v}`"));
                None
            }
        }
    };
    let count = |key: &str, problems: &mut Vec<String>| -> Option<usize> {
        let (l, v) = raw.get(key)?;
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => {
                problems.push(format!("line {l}: `{key}` must be a positive integer, got `{v}`"));
                None
            }
        }
    };
    let text_of = |key: &str| raw.get(key).map(|(_, v)| v.clone());

    let mut params = BTreeMap::new();
    if let Some(m) = model {
        for (k, d) in m.parameters() {
            params.insert(k.to_string(), num(k, &mut problems).unwrap_or(*d));
        }
    }

    let branch = count_or_zero(&raw, "branch", &mut problems);
    let mode = match text_of("mode").as_deref() {
        None | Some("open") => Mode::Open,
        Some("closed") => Mode::Closed,
        Some(v) => {
            problems.push(format!("line {}: unknown mode `{v}` (expected open or closed)", raw["mode"].0));
            Mode::Open
        }
    };
    let format = match raw.get("format") {
        None => Format::Csv,
        Some((l, v)) => v.parse().unwrap_or_else(|e| {
            problems.push(format!("line {l}: {e}"));
            Format::Csv
        }),
    };
    let trace = match text_of("trace").as_deref() {
        None | Some("false") => false,
        Some("true") => true,
        Some(v) => {
            problems.push(format!("line {}: `trace` must be true or false, got `{v}`", raw["trace"].0));
            false
        }
    };

    let grid_given = GRID_KEYS.iter().filter(|k| raw.contains_key(**k)).count();
    let grid = match grid_given {
        0 => None,
        3 => match (num("omega_min", &mut problems), num("omega_max", &mut problems), count("omega_points", &mut problems)) {
            (Some(min), Some(max), Some(points)) if min < max => Some(FrequencyGrid { min, max, points }),
            (Some(_), Some(_), Some(_)) => {
                problems.push("`omega_min` must be below `omega_max`".into());
                None
            }
            _ => None,
        },
        _ => {
            problems.push("response grid needs all of omega_min, omega_max, omega_points".into());
            None
        }
    };

    let (dx, dy, db) = match model {
        Some(Model::Idtc) => (("lambda_x", 0.0, 1.5), ("lambda_y", 0.0, 1.5), ("lambda", 0.0, 1.5)),
        _ => (("delta", -2.0, 2.0), ("g", 0.0, 2.0), ("g", 0.0, 2.0)),
    };
    let axis = |prefix: &str, d: (&str, f64, f64), problems: &mut Vec<String>| AxisSpec {
        param: text_of(&format!("{prefix}_param")).unwrap_or_else(|| d.0.to_string()),
        min: num(&format!("{prefix}_min"), problems).unwrap_or(d.1),
        max: num(&format!("{prefix}_max"), problems).unwrap_or(d.2),
        points: count(&format!("{prefix}_points"), problems).unwrap_or(101),
    };
    let x = axis("x", dx, &mut problems);
    let y = axis("y", dy, &mut problems);
    let cut = if BOUNDARY_KEYS[3..].iter().any(|k| raw.contains_key(*k)) {
        match raw.get("cut_param") {
            None => {
                problems.push("a cut needs `cut_param`".into());
                None
            }
            Some(_) => Some(axis("cut", ("", 0.0, 1.0), &mut problems)),
        }
    } else {
        None
    };
    let boundary = BoundarySpec {
        param: text_of("boundary_param").unwrap_or_else(|| db.0.to_string()),
        start: num("boundary_start", &mut problems).unwrap_or(db.1),
        end: num("boundary_end", &mut problems).unwrap_or(db.2),
        cut,
    };

    // Model-level invariants (kerr ≠ 0 and friends).
    if let Some(m) = model {
        let get = |k: &str| params[k];
        let check = match m {
            Model::Kpo => KpoParams::new(get("delta"), get("kerr"), Complex::from_polar(get("g"), get("g_phase")), get("kappa")).map(|_| ()),
            Model::Idtc => IdtcParams::new(get("omega_c"), get("omega_z"), get("lambda_x"), get("lambda_y"), get("kappa")).map(|_| ()),
            Model::Oscillator => OscParams::new(get("omega0"), get("kappa"), get("sigma")).map(|_| ()),
        };
        if let Err(e) = check {
            problems.push(e.to_string());
        }
    }

    let (Some(model), Some(command)) = (model, command) else {
        return Err(ConfigError { problems });
    };
    let cfg = RunConfig {
        model,
        command,
        params,
        branch,
        mode,
        grid,
        x,
        y,
        trace,
        boundary,
        format,
        out: text_of("out").map(PathBuf::from),
    };

    if problems.is_empty() && matches!(command, Command::Sweep | Command::Boundary) {
        match cfg.model_params() {
            Err(e) => problems.push(format!("{}: {e}", command.as_str())),
            Ok(mp) => {
                let mut names: Vec<&str> = Vec::new();
                if command == Command::Sweep {
                    names.extend([cfg.x.param.as_str(), cfg.y.param.as_str()]);
                } else {
                    names.push(cfg.boundary.param.as_str());
                    if let Some(c) = &cfg.boundary.cut {
                        names.push(c.param.as_str());
                    }
                }
                for n in names {
                    if !mp.names().contains(&n) {
                        problems.push(format!("`{n}` cannot be varied for model {} (expected one of {})", model.as_str(), mp.names().join(", ")));
                    }
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { problems })
    }
}

fn count_or_zero(raw: &BTreeMap<String, (usize, String)>, key: &str, problems: &mut Vec<String>) -> usize {
    match raw.get(key) {
        None => 0,
        Some((l, v)) => v.parse::<usize>().unwrap_or_else(|_| {
            problems.push(format!("line {l}: `{key}` must be a non-negative integer, got `{v}`"));
            0
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sweep_config_is_valid() {
        let cfg = parse_config("model = kpo\ncommand = sweep\nkappa = 0.4").unwrap();
        assert_eq!(cfg.model, Model::Kpo);
        assert_eq!(cfg.command, Command::Sweep);
        assert_eq!(cfg.param("kappa"), 0.4);
        assert_eq!(cfg.param("kerr"), 1.0);
        assert_eq!(cfg.x.param, "delta");
        assert_eq!(cfg.y.param, "g");
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn zero_kerr_rejected() {
        let err = parse_config("model = kpo\nkerr = 0").unwrap_err();
        assert!(err.problems.iter().any(|p| p.contains("kerr")), "{err}");
        assert!(err.problems.iter().any(|p| p.contains("command")), "{err}");
    }

    #[test]
    fn empty_file_lists_required_keys() {
        let err = parse_config("").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`model`") && msg.contains("`command`"), "{msg}");
    }

    #[test]
    fn problems_are_aggregated() {
        let text = "model = kpo\ncommand = response\ndelta = abc\nfoo = 1\nomega0 = 2\nkappa = inf\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.problems.len(), 4, "{err}");
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# header\n  model=idtc # trailing\n\ncommand =  response\nlambda_x = 0.3\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.param("lambda_x"), 0.3);
        assert_eq!(cfg.param("omega_c"), 1.0);
    }

    #[test]
    fn command_line_overrides_file() {
        let cfg = parse_config_with("model = kpo\ncommand = sweep", Some(Command::Response)).unwrap();
        assert_eq!(cfg.command, Command::Response);
        let cfg = parse_config_with("model = kpo", Some(Command::Variance)).unwrap();
        assert_eq!(cfg.command, Command::Variance);
    }

    #[test]
    fn partial_grid_rejected() {
        let err = parse_config("model = kpo\ncommand = response\nomega_min = -1").unwrap_err();
        assert_eq!(err.problems.len(), 1);
        let cfg = parse_config("model = kpo\ncommand = response\nomega_min = -1\nomega_max = 1\nomega_points = 3").unwrap();
        assert_eq!(cfg.grid.unwrap().values(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn sweep_axis_must_be_a_model_parameter() {
        let err = parse_config("model = kpo\ncommand = sweep\nx_param = lambda_x").unwrap_err();
        assert!(err.problems[0].contains("lambda_x"));
        assert!(parse_config("model = oscillator\ncommand = sweep").is_err());
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        let err = parse_config("model = kpo\nmodel = kpo\ncommand = stability\njunk").unwrap_err();
        assert_eq!(err.problems.len(), 2, "{err}");
    }
}
