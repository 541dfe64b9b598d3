//! Flat `key = value` scenario configs with dotted section keys.
//!
//! The format is line oriented: blank lines and `#` comments are skipped,
//! every other line must be `key = value`. Unknown keys are errors, so typos
//! cannot silently change a run. `parse_scenario` and `serialize_scenario`
//! round-trip: parsing a serialized scenario reproduces it exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;
use qprobe::models::{ApparatusSpec, BathMode, CouplingSpec, LambdaRule, SystemSpec};
use qprobe::scenario::{AnalysisOptions, Grid, Scenario, SweepGrids};

/// A config problem, always naming the offending key.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

/// Raw key/value view of a config, before schema interpretation.
struct RawConfig {
    entries: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(err(&format!("line {}", lineno + 1), "empty key"));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(err(&key, "duplicate key"));
            }
        }
        Ok(Self { entries, consumed: Default::default() })
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key).map(String::as_str);
        if v.is_some() {
            self.consumed.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| err(key, "missing required key"))
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let raw = self.require(key)?;
        raw.parse::<f64>().map_err(|_| err(key, format!("`{raw}` is not a number")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse::<f64>().map_err(|_| err(key, format!("`{raw}` is not a number"))),
        }
    }

    fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        let raw = self.require(key)?;
        raw.parse::<usize>().map_err(|_| err(key, format!("`{raw}` is not a nonnegative integer")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<usize>()
                .map_err(|_| err(key, format!("`{raw}` is not a nonnegative integer"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(raw) => Err(err(key, format!("`{raw}` is not `true` or `false`"))),
        }
    }

    fn grid(&self, key: &str) -> Result<Option<Grid>, ConfigError> {
        let Some(raw) = self.get(key) else { return Ok(None) };
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(err(key, format!("`{raw}` is not of the form start:end:count")));
        }
        let start = parts[0]
            .parse::<f64>()
            .map_err(|_| err(key, format!("grid start `{}` is not a number", parts[0])))?;
        let end = parts[1]
            .parse::<f64>()
            .map_err(|_| err(key, format!("grid end `{}` is not a number", parts[1])))?;
        let count = parts[2]
            .parse::<usize>()
            .map_err(|_| err(key, format!("grid count `{}` is not an integer", parts[2])))?;
        let grid = Grid::new(start, end, count).map_err(|e| err(key, e.to_string()))?;
        Ok(Some(grid))
    }

    /// Error out on any key the schema never touched.
    fn finish(&self) -> Result<(), ConfigError> {
        let consumed = self.consumed.borrow();
        for key in self.entries.keys() {
            if !consumed.contains(key) {
                return Err(err(key, "unknown key"));
            }
        }
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let raw = RawConfig::parse(text)?;

    let system = match raw.require("system.kind")? {
        "two_level" => SystemSpec::TwoLevel { delta: raw.f64("system.delta")? },
        "truncated_oscillator" => SystemSpec::TruncatedOscillator {
            omega: raw.f64("system.omega")?,
            n_sys: raw.usize("system.n_sys")?,
        },
        other => {
            return Err(err(
                "system.kind",
                format!("`{other}` is not `two_level` or `truncated_oscillator`"),
            ))
        }
    };

    let apparatus = match raw.require("apparatus.kind")? {
        "boson_bath" => {
            let mut modes = Vec::new();
            for i in 1.. {
                let prefix = format!("apparatus.mode.{i}");
                if raw.entries.keys().all(|k| !k.starts_with(&format!("{prefix}."))) {
                    break;
                }
                modes.push(BathMode {
                    omega: raw.f64(&format!("{prefix}.omega"))?,
                    g: Complex64::new(
                        raw.f64(&format!("{prefix}.g"))?,
                        raw.f64_or(&format!("{prefix}.g_im"), 0.0)?,
                    ),
                    n_trunc: raw.usize(&format!("{prefix}.n_trunc"))?,
                });
            }
            ApparatusSpec::BosonBath { modes }
        }
        "single_cavity" => ApparatusSpec::SingleCavity {
            omega_b: raw.f64("apparatus.cavity.omega_b")?,
            g: Complex64::new(
                raw.f64("apparatus.cavity.g")?,
                raw.f64_or("apparatus.cavity.g_im", 0.0)?,
            ),
            n_trunc: raw.usize("apparatus.cavity.n_trunc")?,
        },
        other => {
            return Err(err(
                "apparatus.kind",
                format!("`{other}` is not `boson_bath` or `single_cavity`"),
            ))
        }
    };

    let coupling = match raw.require("coupling.kind")? {
        "dephasing" => {
            let lambda = match raw.require("coupling.lambda_rule")? {
                "sqrt_n" => LambdaRule::SqrtN,
                "explicit" => {
                    let levels = match &system {
                        SystemSpec::TwoLevel { .. } => 2,
                        SystemSpec::TruncatedOscillator { n_sys, .. } => *n_sys,
                    };
                    let mut table = Vec::with_capacity(levels);
                    for n in 0..levels {
                        table.push(raw.f64(&format!("coupling.lambda.{n}"))?);
                    }
                    LambdaRule::Explicit(table)
                }
                other => {
                    return Err(err(
                        "coupling.lambda_rule",
                        format!("`{other}` is not `sqrt_n` or `explicit`"),
                    ))
                }
            };
            CouplingSpec::Dephasing { lambda }
        }
        "dipole" => CouplingSpec::Dipole {
            rotating_wave: raw.bool_or("coupling.rotating_wave", true)?,
        },
        other => {
            return Err(err("coupling.kind", format!("`{other}` is not `dephasing` or `dipole`")))
        }
    };

    let beta = raw.f64("beta")?;
    if beta <= 0.0 {
        return Err(err("beta", format!("must be positive, got {beta}")));
    }

    let density_check = match (raw.get("options.density_band"), raw.get("options.density_ratio")) {
        (None, None) => None,
        (Some(band), Some(ratio)) => {
            let band = band
                .parse::<usize>()
                .map_err(|_| err("options.density_band", "not a nonnegative integer"))?;
            let ratio = ratio
                .parse::<f64>()
                .map_err(|_| err("options.density_ratio", "not a number"))?;
            Some((band, ratio))
        }
        (Some(_), None) => return Err(err("options.density_ratio", "missing required key")),
        (None, Some(_)) => return Err(err("options.density_band", "missing required key")),
    };

    let defaults = AnalysisOptions::default();
    let options = AnalysisOptions {
        dim_cap: raw.usize_or("options.dim_cap", defaults.dim_cap)?,
        degeneracy_tol_rel: raw.f64_or("options.degeneracy_tol_rel", defaults.degeneracy_tol_rel)?,
        beta_eff_rel_tol: raw.f64_or("options.beta_eff_tol", defaults.beta_eff_rel_tol)?,
        leakage_tol: raw.f64_or("options.leakage_tol", defaults.leakage_tol)?,
        tls_n_max: raw.usize_or("options.tls_n_max", defaults.tls_n_max)?,
        literal_delta_u: raw.bool_or("options.literal_delta_u", defaults.literal_delta_u)?,
        density_check,
    };

    let sweeps = SweepGrids {
        lambda: raw.grid("sweep.lambda")?,
        delta_t: raw.grid("sweep.delta_t")?,
        g: raw.grid("sweep.g")?,
        beta: raw.grid("sweep.beta")?,
    };

    raw.finish()?;

    let scenario = Scenario { system, apparatus, coupling, beta, options, sweeps };
    scenario.validate().map_err(|e| err("scenario", e.to_string()))?;
    Ok(scenario)
}

/// 17 significant digits, enough to reproduce any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    // fold -0.0 into 0.0 so trivial records are sign-stable
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

#[cfg(test)]
fn grid_str(g: &Grid) -> String {
    format!("{}:{}:{}", fmt_f64(g.start), fmt_f64(g.end), g.count)
}

/// Canonical text form; `parse_scenario(serialize_scenario(s)) == s`.
#[cfg(test)]
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };

    match &s.system {
        SystemSpec::TwoLevel { delta } => {
            line("system.kind", "two_level".into());
            line("system.delta", fmt_f64(*delta));
        }
        SystemSpec::TruncatedOscillator { omega, n_sys } => {
            line("system.kind", "truncated_oscillator".into());
            line("system.omega", fmt_f64(*omega));
            line("system.n_sys", n_sys.to_string());
        }
    }

    match &s.apparatus {
        ApparatusSpec::BosonBath { modes } => {
            line("apparatus.kind", "boson_bath".into());
            for (i, m) in modes.iter().enumerate() {
                let p = format!("apparatus.mode.{}", i + 1);
                line(&format!("{p}.omega"), fmt_f64(m.omega));
                line(&format!("{p}.g"), fmt_f64(m.g.re));
                line(&format!("{p}.g_im"), fmt_f64(m.g.im));
                line(&format!("{p}.n_trunc"), m.n_trunc.to_string());
            }
        }
        ApparatusSpec::SingleCavity { omega_b, g, n_trunc } => {
            line("apparatus.kind", "single_cavity".into());
            line("apparatus.cavity.omega_b", fmt_f64(*omega_b));
            line("apparatus.cavity.g", fmt_f64(g.re));
            line("apparatus.cavity.g_im", fmt_f64(g.im));
            line("apparatus.cavity.n_trunc", n_trunc.to_string());
        }
    }

    match &s.coupling {
        CouplingSpec::Dephasing { lambda } => {
            line("coupling.kind", "dephasing".into());
            match lambda {
                LambdaRule::SqrtN => line("coupling.lambda_rule", "sqrt_n".into()),
                LambdaRule::Explicit(table) => {
                    line("coupling.lambda_rule", "explicit".into());
                    for (n, l) in table.iter().enumerate() {
                        line(&format!("coupling.lambda.{n}"), fmt_f64(*l));
                    }
                }
            }
        }
        CouplingSpec::Dipole { rotating_wave } => {
            line("coupling.kind", "dipole".into());
            line("coupling.rotating_wave", rotating_wave.to_string());
        }
    }

    line("beta", fmt_f64(s.beta));

    line("options.dim_cap", s.options.dim_cap.to_string());
    line("options.degeneracy_tol_rel", fmt_f64(s.options.degeneracy_tol_rel));
    line("options.beta_eff_tol", fmt_f64(s.options.beta_eff_rel_tol));
    line("options.leakage_tol", fmt_f64(s.options.leakage_tol));
    line("options.tls_n_max", s.options.tls_n_max.to_string());
    line("options.literal_delta_u", s.options.literal_delta_u.to_string());
    if let Some((band, ratio)) = s.options.density_check {
        line("options.density_band", band.to_string());
        line("options.density_ratio", fmt_f64(ratio));
    }

    if let Some(g) = &s.sweeps.lambda {
        line("sweep.lambda", grid_str(g));
    }
    if let Some(g) = &s.sweeps.delta_t {
        line("sweep.delta_t", grid_str(g));
    }
    if let Some(g) = &s.sweeps.g {
        line("sweep.g", grid_str(g));
    }
    if let Some(g) = &s.sweeps.beta {
        line("sweep.beta", grid_str(g));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const OSCILLATOR_CFG: &str = "\
# sqrt-n dephasing oscillator
system.kind = truncated_oscillator
system.omega = 1.0
system.n_sys = 5

apparatus.kind = boson_bath
apparatus.mode.1.omega = 1.0
apparatus.mode.1.g = 0.1
apparatus.mode.1.n_trunc = 14
apparatus.mode.2.omega = 1.7
apparatus.mode.2.g = 0.08
apparatus.mode.2.g_im = 0.01
apparatus.mode.2.n_trunc = 12

coupling.kind = dephasing
coupling.lambda_rule = sqrt_n
beta = 1.0
sweep.lambda = 0:0.9:10
";

    #[test]
    fn parses_oscillator_config() {
        let s = parse_scenario(OSCILLATOR_CFG).unwrap();
        assert_eq!(s.system, SystemSpec::TruncatedOscillator { omega: 1.0, n_sys: 5 });
        let ApparatusSpec::BosonBath { modes } = &s.apparatus else { panic!() };
        assert_eq!(modes.len(), 2);
        assert_eq!(modes[1].g, Complex64::new(0.08, 0.01));
        assert_eq!(s.sweeps.lambda, Some(Grid { start: 0.0, end: 0.9, count: 10 }));
        assert_eq!(s.sweeps.g, None);
    }

    #[test]
    fn missing_required_key_names_field() {
        let text = OSCILLATOR_CFG.replace("beta = 1.0\n", "");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.field, "beta");
        assert!(e.message.contains("missing"));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{OSCILLATOR_CFG}system.nonsense = 3\n");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.field, "system.nonsense");
        assert!(e.message.contains("unknown"));
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = format!("{OSCILLATOR_CFG}beta = 2.0\n");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.field, "beta");
        assert!(e.message.contains("duplicate"));
    }

    #[test]
    fn malformed_line_rejected() {
        let e = parse_scenario("system.kind truncated_oscillator\n").unwrap_err();
        assert!(e.message.contains("key = value"));
    }

    #[test]
    fn explicit_lambda_table_must_cover_levels() {
        let text = "\
system.kind = two_level
system.delta = 1.0
apparatus.kind = boson_bath
coupling.kind = dephasing
coupling.lambda_rule = explicit
coupling.lambda.0 = 0.0
beta = 1.0
";
        let e = parse_scenario(text).unwrap_err();
        assert_eq!(e.field, "coupling.lambda.1");
    }

    #[test]
    fn round_trip_is_identity() {
        for text in [
            OSCILLATOR_CFG.to_string(),
            "\
system.kind = two_level
system.delta = 1.0
apparatus.kind = single_cavity
apparatus.cavity.omega_b = 10.0
apparatus.cavity.g = 0.5
apparatus.cavity.n_trunc = 12
coupling.kind = dipole
beta = 0.37
options.beta_eff_tol = 1e-6
sweep.g = 0:2:21
sweep.beta = 0.1:3:7
"
            .to_string(),
        ] {
            let parsed = parse_scenario(&text).unwrap();
            let serialized = serialize_scenario(&parsed);
            let reparsed = parse_scenario(&serialized).unwrap();
            assert_eq!(parsed, reparsed);
            // and serializing again is byte-stable
            assert_eq!(serialized, serialize_scenario(&reparsed));
        }
    }

    #[test]
    fn float_formatting_round_trips_exactly() {
        for &x in &[0.1, 1.0 / 3.0, 2.5e-9, -17.25, 6.02e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }
}
