//! Flat key-value scenario files.
//!
//! ```text
//! base = fig2-saturated
//!
//! [params]
//! mu_days = 255      # a `_days` key sets the rate to 1/value
//! beta = 1.66
//!
//! [control]
//! law = unsaturated
//! g_family = exponential-fade
//!
//! [scenario]
//! horizon = 600
//! s0 = 400
//! ```
//!
//! Every key not set keeps the value of the base preset.

use seirvax::presets::preset;
use seirvax::{ControlHold, GFamily, HFamily, Scenario, VaccinationLaw};

use crate::CliError;

pub const DEFAULT_BASE: &str = "fig1-no-vaccination";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Params,
    Control,
    Scenario,
}

impl Section {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "params" => Some(Section::Params),
            "control" => Some(Section::Control),
            "scenario" => Some(Section::Scenario),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Params => "params",
            Section::Control => "control",
            Section::Scenario => "scenario",
        }
    }
}

const PARAM_KEYS: [&str; 9] = ["mu", "omega", "beta", "sigma", "gamma", "rho", "nu", "i0_ref", "n0_ref"];
const CONTROL_KEYS: [&str; 11] = [
    "k_r",
    "k_rd",
    "eps",
    "eps0",
    "vartheta",
    "c",
    "g_family",
    "h_family",
    "h_value",
    "completion_time",
    "law",
];
const SCENARIO_KEYS: [&str; 9] = [
    "name",
    "horizon",
    "dt",
    "steady_state_tol",
    "hold",
    "s0",
    "e0",
    "i0",
    "r0",
];
/// Keys that may be given as periods.
const PERIOD_KEYS: [&str; 7] = ["mu", "omega", "sigma", "gamma", "nu", "vartheta", "c"];

fn keys(section: Section) -> &'static [&'static str] {
    match section {
        Section::Params => &PARAM_KEYS,
        Section::Control => &CONTROL_KEYS,
        Section::Scenario => &SCENARIO_KEYS,
    }
}

fn strip_period(key: &str) -> (&str, bool) {
    match key.strip_suffix("_days") {
        Some(k) if PERIOD_KEYS.contains(&k) => (k, true),
        _ => (key, false),
    }
}

/// Section owning `key`, for keys given without one (as in `--sweep`).
pub fn section_of(key: &str) -> Option<Section> {
    let (k, _) = strip_period(key);
    [Section::Params, Section::Control, Section::Scenario]
        .into_iter()
        .find(|&s| keys(s).contains(&k))
}

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: expected a number, got {value:?}")))?;
    if !v.is_finite() {
        return Err(CliError::Config(format!("{key}: value must be finite")));
    }
    Ok(v)
}

/// Sets one key on `sc`.
pub fn apply_setting(sc: &mut Scenario, section: Section, key: &str, value: &str) -> Result<(), CliError> {
    let (name, period) = strip_period(key);
    if !keys(section).contains(&name) {
        return Err(CliError::Config(format!("unknown key {key:?} in [{}]", section.name())));
    }
    let num = || -> Result<f64, CliError> {
        let v = number(key, value)?;
        if period {
            if v <= 0.0 {
                return Err(CliError::Config(format!("{key}: period must be > 0")));
            }
            Ok(1.0 / v)
        } else {
            Ok(v)
        }
    };
    let p = &mut sc.params;
    let c = &mut sc.control;
    match (section, name) {
        (Section::Params, "mu") => p.mu = num()?,
        (Section::Params, "omega") => p.omega = num()?,
        (Section::Params, "beta") => p.beta = num()?,
        (Section::Params, "sigma") => p.sigma = num()?,
        (Section::Params, "gamma") => p.gamma = num()?,
        (Section::Params, "rho") => p.rho = num()?,
        (Section::Params, "nu") => p.nu = num()?,
        (Section::Params, "i0_ref") => p.i0_ref = num()?,
        (Section::Params, "n0_ref") => p.n0_ref = num()?,
        (Section::Control, "k_r") => c.k_r = num()?,
        (Section::Control, "k_rd") => c.k_rd = num()?,
        (Section::Control, "eps") => c.eps = num()?,
        (Section::Control, "eps0") => c.eps0 = num()?,
        (Section::Control, "vartheta") => c.vartheta = num()?,
        (Section::Control, "c") => c.c = num()?,
        (Section::Control, "h_value") => c.h_value = num()?,
        (Section::Control, "completion_time") => c.completion_time = num()?,
        (Section::Control, "g_family") => {
            c.g_family = GFamily::parse(value).ok_or_else(|| {
                let all: Vec<_> = GFamily::ALL.iter().map(|f| f.key()).collect();
                CliError::Config(format!(
                    "unknown g_family {value:?}; expected one of {}",
                    all.join(", ")
                ))
            })?
        }
        (Section::Control, "h_family") => {
            c.h_family = HFamily::parse(value).ok_or_else(|| {
                let all: Vec<_> = HFamily::ALL.iter().map(|f| f.key()).collect();
                CliError::Config(format!(
                    "unknown h_family {value:?}; expected one of {}",
                    all.join(", ")
                ))
            })?
        }
        (Section::Control, "law") => c.law = parse_law(value)?,
        (Section::Scenario, "name") => sc.name = value.to_string(),
        (Section::Scenario, "horizon") => sc.horizon = num()?,
        (Section::Scenario, "dt") => sc.dt = num()?,
        (Section::Scenario, "steady_state_tol") => sc.steady_state_tol = num()?,
        (Section::Scenario, "hold") => {
            sc.hold = ControlHold::parse(value)
                .ok_or_else(|| CliError::Config(format!("unknown hold {value:?}; expected stage or step")))?
        }
        (Section::Scenario, "s0") => sc.x0.s = num()?,
        (Section::Scenario, "e0") => sc.x0.e = num()?,
        (Section::Scenario, "i0") => sc.x0.i = num()?,
        (Section::Scenario, "r0") => sc.x0.r = num()?,
        _ => unreachable!("key table and match arms agree"),
    }
    Ok(())
}

pub fn parse_law(value: &str) -> Result<VaccinationLaw, CliError> {
    VaccinationLaw::parse(value).ok_or_else(|| {
        CliError::Config(format!(
            "unknown law {value:?}; expected none, saturated or unsaturated"
        ))
    })
}

pub fn base_scenario(name: &str) -> Result<Scenario, CliError> {
    preset::<f64>(name).ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))
}

/// Parses a scenario file on top of its base preset.
pub fn parse_config(text: &str) -> Result<Scenario, CliError> {
    let mut base: Option<String> = None;
    let mut section: Option<Section> = None;
    let mut settings: Vec<(Section, String, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: unterminated section header")))?
                .trim();
            section = Some(
                Section::parse(name)
                    .ok_or_else(|| CliError::Config(format!("line {lineno}: unknown section [{name}]")))?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {lineno}: expected key = value")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(CliError::Config(format!("line {lineno}: empty key or value")));
        }
        match section {
            None if key == "base" => {
                if base.replace(value.to_string()).is_some() {
                    return Err(CliError::Config(format!("line {lineno}: base given twice")));
                }
            }
            None => {
                return Err(CliError::Config(format!(
                    "line {lineno}: key {key:?} outside a section"
                )))
            }
            Some(s) => {
                let canonical = strip_period(key).0;
                if settings
                    .iter()
                    .any(|(s2, k2, _, _)| *s2 == s && strip_period(k2).0 == canonical)
                {
                    return Err(CliError::Config(format!(
                        "line {lineno}: {key:?} set twice in [{}]",
                        s.name()
                    )));
                }
                settings.push((s, key.to_string(), value.to_string(), lineno));
            }
        }
    }
    let mut sc = base_scenario(base.as_deref().unwrap_or(DEFAULT_BASE))?;
    for (s, k, v, lineno) in settings {
        apply_setting(&mut sc, s, &k, &v).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("line {lineno}: {m}")),
            other => other,
        })?;
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periods_and_plain_rates() {
        let sc = parse_config("[params]\nmu_days = 100\nbeta = 0.5\n[scenario]\nhorizon = 10\n").unwrap();
        assert_eq!(sc.params.mu, 0.01);
        assert_eq!(sc.params.beta, 0.5);
        assert_eq!(sc.horizon, 10.0);
        assert_eq!(sc.name, DEFAULT_BASE);
    }

    #[test]
    fn base_preset_and_enums() {
        let text = "base = fig2-saturated  # comment\n[control]\nlaw = unsaturated\ng_family = zero\nh_family = constant\n[scenario]\nhold = step\n";
        let sc = parse_config(text).unwrap();
        assert_eq!(sc.control.law, VaccinationLaw::Unsaturated);
        assert_eq!(sc.control.g_family, GFamily::Zero);
        assert_eq!(sc.control.h_family, HFamily::Constant);
        assert_eq!(sc.hold, ControlHold::Step);
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "beta = 1\n",
            "[params]\nbeta 1\n",
            "[params]\nbeta = fast\n",
            "[params]\nzeta = 1\n",
            "[nope]\n",
            "[params\n",
            "[params]\nmu = 0.1\nmu_days = 3\n",
            "base = fig9\n",
            "[params]\nmu_days = 0\n",
            "[control]\ng_family = quadratic\n",
            "[params]\nbeta = inf\n",
        ] {
            assert!(matches!(parse_config(bad), Err(CliError::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn sweep_keys_find_their_section() {
        assert_eq!(section_of("beta"), Some(Section::Params));
        assert_eq!(section_of("nu_days"), Some(Section::Params));
        assert_eq!(section_of("eps0"), Some(Section::Control));
        assert_eq!(section_of("dt"), Some(Section::Scenario));
        assert_eq!(section_of("beta_days"), None);
        assert_eq!(section_of("what"), None);
    }
}
