//! Tables, run directories and modal field dumps.
//!
//! Floating-point columns are written with 17 significant digits and rows
//! come in a fixed order, so identical runs give identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::cloaksim::{run_model, DiagnosticsRow, FieldSnapshot, ModalField, Model, Scenario, SliceSpec};
use crate::config::{parse_config, render_config};
use crate::convolve::RichardsonRow;
use crate::error::{Error, Result};
use crate::nrbk::kernel_crosscheck;
use crate::specfun::{zeros, PoleKind};
use crate::vsh::n_coeffs;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn num(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").unwrap();
}

/// `l,j,re,im,residual` for every pole of `kind` with `1 ≤ l ≤ l_max`.
pub fn zeros_csv(kind: PoleKind, l_max: usize) -> Result<String> {
    let mut out = String::from("l,j,re,im,residual\n");
    for l in 1..=l_max {
        let set = zeros(l, kind)?;
        for (j, (z, r)) in set.poles.iter().zip(&set.residuals).enumerate() {
            write!(out, "{l},{j},").unwrap();
            num(&mut out, z.re);
            out.push(',');
            num(&mut out, z.im);
            out.push(',');
            num(&mut out, *r);
            out.push('\n');
        }
    }
    Ok(out)
}

/// `l,t,e` rows of the kernel cross-check, `l` outer.
pub fn kernel_table_csv(b: f64, c: f64, ls: &[usize], ts: &[f64]) -> Result<String> {
    let mut out = String::from("l,t,e\n");
    for &l in ls {
        for (t, e) in ts.iter().zip(kernel_crosscheck(l, b, c, ts)?) {
            write!(out, "{l},{t},").unwrap();
            num(&mut out, e);
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn richardson_csv(rows: &[RichardsonRow]) -> String {
    let mut out = String::from("dt,value,error,ratio\n");
    for r in rows {
        num(&mut out, r.dt);
        out.push(',');
        num(&mut out, r.value);
        out.push(',');
        num(&mut out, r.error);
        out.push(',');
        if let Some(x) = r.ratio {
            num(&mut out, x);
        }
        out.push('\n');
    }
    out
}

/// `x,y,ReDz`, or with `full` the region label and every complex component.
pub fn slice_csv(snap: &FieldSnapshot, full: bool) -> String {
    let mut out = String::from(if full {
        "x,y,region,ReDx,ImDx,ReDy,ImDy,ReDz,ImDz\n"
    } else {
        "x,y,ReDz\n"
    });
    for p in &snap.points {
        num(&mut out, p.x);
        out.push(',');
        num(&mut out, p.y);
        if full {
            write!(out, ",{}", p.region.label()).unwrap();
            for c in p.d {
                out.push(',');
                num(&mut out, c.re);
                out.push(',');
                num(&mut out, c.im);
            }
        } else {
            out.push(',');
            num(&mut out, p.d[2].re);
        }
        out.push('\n');
    }
    out
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from("t,S,interior_energy,exterior_energy,scattered\n");
    for r in rows {
        for (i, x) in [r.time, r.shielding, r.interior_energy, r.exterior_energy, r.scattered]
            .into_iter()
            .enumerate()
        {
            if i > 0 {
                out.push(',');
            }
            num(&mut out, x);
        }
        out.push('\n');
    }
    out
}

/// File stem for quantities at time `t`.
pub fn time_tag(t: f64) -> String {
    format!("t_{t:.3}")
}

const FIELD_MAGIC: &[u8; 8] = b"TDNRBCF1";

/// Serialises a modal field with the scenario that produced it.
pub fn encode_field(scenario: &Scenario, field: &ModalField) -> Vec<u8> {
    let cfg = render_config(scenario);
    let mut out = Vec::new();
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(cfg.len() as u64).to_le_bytes());
    out.extend_from_slice(cfg.as_bytes());
    out.extend_from_slice(&field.time.to_le_bytes());
    out.extend_from_slice(&(field.l_max as u64).to_le_bytes());
    let n = field.v.get(1).map_or(0, Vec::len);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let mut put = |z: Complex64| {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    };
    for j in 1..n_coeffs(field.l_max) {
        put(field.u_lift[j]);
        put(field.v_lift[j]);
        field.u_scaled[j].iter().chain(&field.v[j]).for_each(|&z| put(z));
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<(Scenario, ModalField)> {
    let bad = |m: &str| Error::InvalidParameter(format!("malformed field file: {m}"));
    let mut pos = 0usize;
    let mut take = |len: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + len).ok_or_else(|| bad("truncated"))?;
        pos += len;
        Ok(s)
    };
    if take(8)? != FIELD_MAGIC {
        return Err(bad("wrong magic"));
    }
    let word = |s: &[u8]| u64::from_le_bytes(s.try_into().unwrap());
    let cfg_len = word(take(8)?) as usize;
    let cfg = std::str::from_utf8(take(cfg_len)?).map_err(|_| bad("config is not UTF-8"))?;
    let scenario = parse_config(cfg)?;
    let time = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let l_max = word(take(8)?) as usize;
    let n = word(take(8)?) as usize;
    if l_max != scenario.disc.l_max {
        return Err(bad("degree does not match its config"));
    }
    let mut cplx = || -> Result<Complex64> {
        let s = take(16)?;
        Ok(Complex64::new(
            f64::from_le_bytes(s[..8].try_into().unwrap()),
            f64::from_le_bytes(s[8..].try_into().unwrap()),
        ))
    };
    let total = n_coeffs(l_max);
    let mut field = ModalField {
        time,
        l_max,
        u_scaled: vec![Vec::new(); total],
        v: vec![Vec::new(); total],
        u_lift: vec![Complex64::new(0.0, 0.0); total],
        v_lift: vec![Complex64::new(0.0, 0.0); total],
    };
    for j in 1..total {
        field.u_lift[j] = cplx()?;
        field.v_lift[j] = cplx()?;
        field.u_scaled[j] = (0..n).map(|_| cplx()).collect::<Result<_>>()?;
        field.v[j] = (0..n).map(|_| cplx()).collect::<Result<_>>()?;
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok((scenario, field))
}

/// Reconstructs a slice from a saved modal field; unset grid parameters come
/// from the saved scenario.
pub fn export_slice(field_file: &Path, n: Option<usize>, extent: Option<f64>) -> Result<FieldSnapshot> {
    let (scenario, field) = decode_field(&fs::read(field_file)?)?;
    let model = Model::build(&scenario)?;
    if model.mesh.n_dofs() != field.v.get(1).map_or(0, Vec::len) {
        return Err(Error::InvalidParameter("field does not match its mesh".into()));
    }
    let slice = SliceSpec {
        n: n.unwrap_or(scenario.slice.n),
        extent: extent.unwrap_or(scenario.slice.extent),
    };
    if !(slice.extent > 0.0 && slice.extent.is_finite()) {
        return Err(Error::InvalidParameter(format!("slice extent must be positive, got {}", slice.extent)));
    }
    model.slice(&field, &slice)
}

/// Resolved config, code version, pole-table checksums and phase timings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: String,
    pub version: String,
    pub checksums: Vec<(String, String)>,
    pub timings: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = format!("version = {}\n", self.version);
        for (name, sum) in &self.checksums {
            writeln!(out, "checksum.{name} = sha256:{sum}").unwrap();
        }
        for (phase, secs) in &self.timings {
            writeln!(out, "timing.{phase} = {secs:.3}").unwrap();
        }
        out.push_str("\n# resolved config\n");
        out.push_str(&self.config);
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// What a finished run left in its directory.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub shielding: Vec<(f64, f64)>,
}

/// Runs `scenario` and writes `zeros/`, `run-manifest`, `snapshots/`,
/// `fields/` and `diagnostics.csv` under `dir`.
pub fn simulate(scenario: &Scenario, dir: &Path) -> Result<RunSummary> {
    let mut manifest = RunManifest {
        config: render_config(scenario),
        version: env!("CARGO_PKG_VERSION").to_string(),
        checksums: Vec::new(),
        timings: Vec::new(),
    };
    let clock = Instant::now();
    let l_max = scenario.disc.l_max;
    for kind in [PoleKind::K, PoleKind::Combined] {
        let csv = zeros_csv(kind, l_max)?;
        manifest.checksums.push((format!("zeros.{}", kind.label()), sha256_hex(csv.as_bytes())));
        write_atomic(&dir.join("zeros").join(format!("{}.csv", kind.label())), csv.as_bytes())?;
    }
    manifest.timings.push(("zeros".into(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let model = Model::build(scenario)?;
    manifest.timings.push(("assemble".into(), clock.elapsed().as_secs_f64()));
    let path = dir.join("run-manifest");
    write_atomic(&path, manifest.render().as_bytes())?;

    let clock = Instant::now();
    let out = run_model(&model)?;
    manifest.timings.push(("integrate".into(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let mut snapshots = Vec::new();
    for (snap, field) in out.snapshots.iter().zip(&out.fields) {
        let tag = time_tag(snap.time);
        let p = dir.join("snapshots").join(format!("{tag}.csv"));
        write_atomic(&p, slice_csv(snap, false).as_bytes())?;
        snapshots.push(p);
        write_atomic(&dir.join("fields").join(format!("{tag}.bin")), &encode_field(scenario, field))?;
    }
    write_atomic(&dir.join("diagnostics.csv"), diagnostics_csv(&out.diagnostics).as_bytes())?;
    manifest.timings.push(("output".into(), clock.elapsed().as_secs_f64()));
    write_atomic(&path, manifest.render().as_bytes())?;
    info!("run written to {}", dir.display());

    let radius = scenario.shield_radius();
    let amp = scenario.incident.amplitude();
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        snapshots,
        shielding: out.snapshots.iter().map(|s| (s.time, s.shielding(radius, amp))).collect(),
    })
}
