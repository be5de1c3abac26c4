//! Flat `key = value` scenario files.
//!
//! Lines are `key = value`; `#` starts a comment. Every key is optional and
//! defaults to the full-resolution monochromatic cloak scenario. The keys are
//! listed in [`KEYS`]. `disc.profile = desk` switches the discretisation
//! defaults to [`Discretization::desk`]; explicit `disc.*` keys still win.

use std::collections::BTreeMap;
use std::path::Path;

use crate::cloaksim::{Discretization, Scenario, SliceSpec};
use crate::drude::DrudeParams;
use crate::error::{Error, Result};
use crate::incident::Incident;
use crate::sem1d::Geometry;

pub const KEYS: &[&str] = &[
    "incident.type",
    "incident.k",
    "incident.omega",
    "incident.A",
    "incident.tc",
    "incident.q",
    "cloak.enabled",
    "cloak.omega_c",
    "cloak.gamma1",
    "cloak.gamma2",
    "cloak.R1",
    "cloak.R2",
    "disc.profile",
    "disc.E",
    "disc.N",
    "disc.L",
    "disc.dt",
    "disc.t_end",
    "disc.gamma",
    "disc.beta",
    "disc.b",
    "disc.R3",
    "disc.c",
    "snapshots",
    "slice.extent",
    "slice.n",
    "diagnostics.interval",
];

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key `{k}`"),
                });
            }
            if let Some((first, _)) = map.insert(k.to_string(), (line, v.to_string())) {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key `{k}` (first set on line {first})"),
                });
            }
        }
        Ok(Entries(map))
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Config {
                line,
                msg: format!("`{key}` expects {what}, got `{v}`"),
            }),
        }
    }

    fn f64(&mut self, key: &str, target: &mut f64) -> Result<()> {
        if let Some(v) = self.take(key, "a number")? {
            *target = v;
        }
        Ok(())
    }

    fn usize(&mut self, key: &str, target: &mut usize) -> Result<()> {
        if let Some(v) = self.take(key, "a non-negative integer")? {
            *target = v;
        }
        Ok(())
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((line, v)) = self.0.remove(key) else {
            return Ok(None);
        };
        let bad = || Error::Config {
            line,
            msg: format!("`{key}` expects a list like [9, 11], got `{v}`"),
        };
        let inner = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')).ok_or_else(bad)?;
        inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    fn line_of(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |(l, _)| *l)
    }
}

/// Parses a scenario file's text and validates the result.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let mut e = Entries::parse(text)?;

    let kind_line = e.line_of("incident.type");
    let kind = e.take::<String>("incident.type", "`monochromatic` or `pulse`")?;
    let pulse = match kind.as_deref() {
        None | Some("monochromatic") => false,
        Some("pulse") => true,
        Some(other) => {
            return Err(Error::Config {
                line: kind_line,
                msg: format!("incident.type must be `monochromatic` or `pulse`, got `{other}`"),
            })
        }
    };
    let profile_line = e.line_of("disc.profile");
    let mut disc = match e.take::<String>("disc.profile", "`full` or `desk`")?.as_deref() {
        None | Some("full") => Discretization::default(),
        Some("desk") => Discretization::desk(),
        Some(other) => {
            return Err(Error::Config {
                line: profile_line,
                msg: format!("disc.profile must be `full` or `desk`, got `{other}`"),
            })
        }
    };
    let mut geometry = Geometry::default();
    e.f64("disc.c", &mut geometry.c)?;
    e.f64("disc.b", &mut geometry.b)?;
    e.f64("disc.R3", &mut geometry.r3)?;

    let mut amplitude = 1.0;
    e.f64("incident.A", &mut amplitude)?;
    let k: Option<f64> = e.take("incident.k", "a number")?;
    let incident = if pulse {
        for key in ["incident.omega"] {
            if e.0.contains_key(key) {
                return Err(Error::Config {
                    line: e.line_of(key),
                    msg: format!("`{key}` does not apply to a pulse"),
                });
            }
        }
        let (mut tc, mut q) = (4.0, 0.5);
        e.f64("incident.tc", &mut tc)?;
        e.f64("incident.q", &mut q)?;
        Incident::Pulse {
            k: k.unwrap_or(40.0),
            amplitude,
            tc,
            q,
        }
    } else {
        for key in ["incident.tc", "incident.q"] {
            if e.0.contains_key(key) {
                return Err(Error::Config {
                    line: e.line_of(key),
                    msg: format!("`{key}` applies to pulses only"),
                });
            }
        }
        // a lone k or ω takes the other from the vacuum dispersion relation ω = c k
        let omega: Option<f64> = e.take("incident.omega", "a number")?;
        let c = geometry.c;
        let (k, omega) = match (k, omega) {
            (Some(k), Some(w)) => (k, w),
            (Some(k), None) => (k, c * k),
            (None, Some(w)) => (w / c, w),
            (None, None) => (40.0, 40.0),
        };
        Incident::Monochromatic { k, omega, amplitude }
    };

    let enabled = e.take::<bool>("cloak.enabled", "`true` or `false`")?.unwrap_or(true);
    let mut cloak = DrudeParams::default();
    e.f64("cloak.omega_c", &mut cloak.omega_c)?;
    e.f64("cloak.gamma1", &mut cloak.gamma1)?;
    e.f64("cloak.gamma2", &mut cloak.gamma2)?;
    e.f64("cloak.R1", &mut cloak.r1)?;
    e.f64("cloak.R2", &mut cloak.r2)?;
    geometry.cloak = enabled.then_some(cloak);

    e.usize("disc.E", &mut disc.elements)?;
    e.usize("disc.N", &mut disc.degree)?;
    e.usize("disc.L", &mut disc.l_max)?;
    e.f64("disc.dt", &mut disc.dt)?;
    e.f64("disc.t_end", &mut disc.t_end)?;
    e.f64("disc.gamma", &mut disc.gamma)?;
    e.f64("disc.beta", &mut disc.beta)?;

    let mut s = Scenario {
        incident,
        geometry,
        disc,
        ..Scenario::default()
    };
    if let Some(t) = e.list("snapshots")? {
        s.snapshot_times = t;
    }
    let mut slice = SliceSpec::default();
    e.f64("slice.extent", &mut slice.extent)?;
    e.usize("slice.n", &mut slice.n)?;
    s.slice = slice;
    e.f64("diagnostics.interval", &mut s.diagnostics_interval)?;
    debug_assert!(e.0.is_empty(), "unconsumed keys {:?}", e.0.keys());
    s.validate()?;
    Ok(s)
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// The fully resolved scenario in the file format; parsing it gives the scenario back.
pub fn render_config(s: &Scenario) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    match s.incident {
        Incident::Monochromatic { k, omega, amplitude } => {
            put("incident.type", "monochromatic".into());
            put("incident.k", format!("{k:?}"));
            put("incident.omega", format!("{omega:?}"));
            put("incident.A", format!("{amplitude:?}"));
        }
        Incident::Pulse { k, amplitude, tc, q } => {
            put("incident.type", "pulse".into());
            put("incident.k", format!("{k:?}"));
            put("incident.A", format!("{amplitude:?}"));
            put("incident.tc", format!("{tc:?}"));
            put("incident.q", format!("{q:?}"));
        }
    }
    let g = &s.geometry;
    put("cloak.enabled", g.cloak.is_some().to_string());
    let c = g.cloak.unwrap_or_default();
    put("cloak.omega_c", format!("{:?}", c.omega_c));
    put("cloak.gamma1", format!("{:?}", c.gamma1));
    put("cloak.gamma2", format!("{:?}", c.gamma2));
    put("cloak.R1", format!("{:?}", c.r1));
    put("cloak.R2", format!("{:?}", c.r2));
    let d = &s.disc;
    put("disc.E", d.elements.to_string());
    put("disc.N", d.degree.to_string());
    put("disc.L", d.l_max.to_string());
    put("disc.dt", format!("{:?}", d.dt));
    put("disc.t_end", format!("{:?}", d.t_end));
    put("disc.gamma", format!("{:?}", d.gamma));
    put("disc.beta", format!("{:?}", d.beta));
    put("disc.b", format!("{:?}", g.b));
    put("disc.R3", format!("{:?}", g.r3));
    put("disc.c", format!("{:?}", g.c));
    let times: Vec<String> = s.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
    put("snapshots", format!("[{}]", times.join(", ")));
    put("slice.extent", format!("{:?}", s.slice.extent));
    put("slice.n", s.slice.n.to_string());
    put("diagnostics.interval", format!("{:?}", s.diagnostics_interval));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_gives_defaults() {
        let s = parse_config("").unwrap();
        assert_eq!(s, Scenario::default());
        assert_eq!(s.disc.dt, 1e-3);
        assert_eq!(s.disc.l_max, 40);
        assert_eq!(s.disc.t_end, 11.0);
        assert!(matches!(s.incident, Incident::Monochromatic { omega, .. } if omega == 40.0));
    }

    #[test]
    fn smaller_outer_radius_accepted() {
        let s = parse_config("cloak.R2=0.25\n").unwrap();
        assert_eq!(s.geometry.cloak.unwrap().r2, 0.25);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_config("disc.dt=0").is_err());
        assert!(parse_config("cloak.R1 = 0.4").is_err());
        assert!(parse_config("snapshots = [12]").is_err());
        assert!(matches!(parse_config("disc.N = two"), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn unknown_and_duplicate_keys_report_line() {
        let e = parse_config("# header\n\ndisc.L = 8\nfoo = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }), "{e}");
        let e = parse_config("disc.L = 8\ndisc.L = 9\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        assert!(parse_config("incident.tc = 3").is_err());
        assert!(parse_config("incident.type = pulse\nincident.omega = 3").is_err());
        assert!(matches!(parse_config("\nincident.type = plane"), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn detuned_wave_and_profiles() {
        let s = parse_config("incident.k = 38 # detuned\ndisc.profile = desk\ndisc.dt = 1e-3").unwrap();
        assert_eq!(s.incident, Incident::Monochromatic { k: 38.0, omega: 38.0, amplitude: 1.0 });
        assert_eq!((s.disc.l_max, s.disc.degree, s.disc.dt), (24, 12, 1e-3));
        let s = parse_config("incident.type = pulse\ncloak.enabled = false\nsnapshots = []").unwrap();
        assert_eq!(s.incident, Incident::Pulse { k: 40.0, amplitude: 1.0, tc: 4.0, q: 0.5 });
        assert!(s.geometry.cloak.is_none() && s.snapshot_times.is_empty());
    }

    proptest! {
        #[test]
        fn render_round_trips(
            pulse in any::<bool>(),
            k in 1.0f64..60.0,
            a in -3.0f64..3.0,
            r2 in 0.2f64..0.9,
            l in 1usize..50,
            dt in 1e-4f64..1e-2,
            times in proptest::collection::vec(0.0f64..11.0, 0..4),
            n in 0usize..300,
        ) {
            let incident = if pulse {
                Incident::Pulse { k, amplitude: a, tc: 4.0, q: 0.5 }
            } else {
                Incident::Monochromatic { k, omega: 1.5 * k, amplitude: a }
            };
            let mut s = Scenario { incident, snapshot_times: times, ..Scenario::default() };
            s.geometry.cloak.as_mut().unwrap().r2 = r2;
            s.disc.l_max = l;
            s.disc.dt = dt;
            s.slice.n = n;
            let text = render_config(&s);
            prop_assert_eq!(parse_config(&text).unwrap(), s);
        }
    }
}
