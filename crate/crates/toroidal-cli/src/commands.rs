//! Subcommand implementations. Each returns the report it produced; the
//! binary only parses arguments and prints.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use toroidal::elliptic::{height_h, period_tau};
use toroidal::embedcert::certify;
use toroidal::geometry::{jet_torus, mean_curvature};
use toroidal::matching::{energy_report, match_neck};
use toroidal::reduction::Reduction;
use toroidal::{NeckSize, SymField, TorusGrid};

use crate::acceptance::{Outcome, Suite};
use crate::config::RunConfig;
use crate::mesh::{torus_mesh, Format, MeshOut};
use crate::report::{MatchSummary, ProfileCache, Report};

/// Corrected normal graph on the fundamental cell, as written by `solve`
/// and `match`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedSolution {
    pub a: f64,
    pub n: Option<usize>,
    pub eps: f64,
    pub n_t: usize,
    pub n_theta: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    pub phi: SymField,
}

impl SavedSolution {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let s: Self = serde_json::from_str(&text)?;
        if s.phi.n_t() != s.n_t || s.phi.n_theta() != s.n_theta {
            bail!("solution field is {}×{}, header says {}×{}", s.phi.n_t(), s.phi.n_theta(), s.n_t, s.n_theta);
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn grid(&self, cache: &ProfileCache, report: &mut Report) -> Result<TorusGrid> {
        let (tbl, prov) = cache.load(self.a, self.n_t)?;
        report.profiles.push(prov);
        let tbl = Arc::new(tbl);
        Ok(match self.n {
            Some(n) => TorusGrid::with_n(tbl, self.n_theta, n)?,
            None => TorusGrid::with_eps(tbl, self.n_theta, self.eps)?,
        })
    }
}

fn grid_for(cfg: &RunConfig, a: f64, cache: &ProfileCache, report: &mut Report) -> Result<TorusGrid> {
    let (tbl, prov) = cache.load(a, cfg.n_t)?;
    report.profiles.push(prov);
    let tbl = Arc::new(tbl);
    Ok(match (cfg.n, cfg.eps) {
        (Some(n), _) => TorusGrid::with_n(tbl, cfg.n_theta, n)?,
        (None, Some(e)) => TorusGrid::with_eps(tbl, cfg.n_theta, e)?,
        (None, None) => bail!("one of `n` and `eps` is required"),
    })
}

fn write_mesh(mesh: &MeshOut, path: &Path, report: &mut Report) -> Result<()> {
    mesh.write(path, Format::from_path(path)?)?;
    report.diag("mesh_path", path.display().to_string());
    report.diag("mesh_vertices", mesh.vertices.len());
    report.diag("mesh_faces", mesh.faces.len());
    report.diag("euler_characteristic", mesh.euler_characteristic());
    Ok(())
}

fn finish(mut report: Report, started: Instant, path: Option<&PathBuf>) -> Result<Report> {
    report.stamp(started);
    if let Some(p) = path {
        report.write(p)?;
    }
    Ok(report)
}

fn needs_a(cfg: &RunConfig) -> Result<f64> {
    cfg.a.context("this command needs a fixed neck size `a`")
}

pub fn profile(cfg: &RunConfig, cache: &ProfileCache) -> Result<Report> {
    let started = Instant::now();
    let a = needs_a(cfg)?;
    let mut report = Report::new("profile", Some(cfg.clone()));
    let neck = NeckSize::new(a)?;
    let (tbl, prov) = cache.load(a, cfg.n_t)?;
    report.profiles.push(prov);
    report.diag("tau", period_tau(&neck));
    report.diag("h", height_h(&neck));
    report.diag("gamma_a", neck.gamma());
    report.diag("conformality_residual", tbl.conformality_residual());
    report.diag("parity_defect", tbl.parity_defect());
    report.diag("x_min", tbl.x.iter().cloned().fold(f64::INFINITY, f64::min));
    report.diag("x_max", tbl.x.iter().cloned().fold(0.0, f64::max));
    finish(report, started, cfg.output.report.as_ref())
}

pub fn surface(cfg: &RunConfig, cache: &ProfileCache) -> Result<Report> {
    let started = Instant::now();
    let a = needs_a(cfg)?;
    let mut report = Report::new("surface", Some(cfg.clone()));
    let g = grid_for(cfg, a, cache, &mut report)?;
    let jet = jet_torus(&g)?;
    let m = mean_curvature(&jet)?;
    let dev: Vec<f64> = m.values().iter().map(|v| v - 1.0).collect();
    report.diag("eps", g.eps);
    report.diag("mc_minus_one_sup", dev.iter().fold(0.0f64, |s, v| s.max(v.abs())));
    report.diag("mc_minus_one_mean", dev.iter().sum::<f64>() / dev.len() as f64);
    report.diag("min_det", jet.min_det().0);
    if let Some(n) = g.n {
        let e = energy_report(&jet, n, &cfg.curvature()?)?;
        report.diag("energy", e);
        let mesh = torus_mesh(&g, &jet, None)?;
        report.diag("euler_characteristic", mesh.euler_characteristic());
        if let Some(p) = &cfg.output.mesh {
            write_mesh(&mesh, p, &mut report)?;
        }
    } else if cfg.output.mesh.is_some() {
        bail!("mesh export needs `n`");
    }
    finish(report, started, cfg.output.report.as_ref())
}

pub fn solve(cfg: &RunConfig, cache: &ProfileCache) -> Result<Report> {
    let started = Instant::now();
    let a = needs_a(cfg)?;
    let mut report = Report::new("solve", Some(cfg.clone()));
    let g = grid_for(cfg, a, cache, &mut report)?;
    let h = cfg.curvature()?;
    let red = Reduction::new(g.clone(), &h, cfg.fixed_point())?;
    let res = red.run()?;
    report.diag("eps", res.eps);
    report.diag("lambda0", res.lambda0);
    report.diag("lambda1", res.lambda1);
    report.diag("iterations", res.iterations);
    report.diag("residual_orth", res.residual_orth);
    report.diag("residual_full", res.residual_full);
    report.diag("phi_norm_weighted", res.phi_norm_weighted);
    report.diag("self_consistency", red.self_consistency(&res)?);
    report.trace = res.trace.clone();
    report.certificate = Some(certify(&g, &red.base, &res.phi, cfg.r0));
    let sol = SavedSolution {
        a,
        n: g.n,
        eps: g.eps,
        n_t: cfg.n_t,
        n_theta: cfg.n_theta,
        lambda0: res.lambda0,
        lambda1: res.lambda1,
        phi: res.phi,
    };
    if let Some(p) = &cfg.output.solution {
        sol.write(p)?;
    }
    if let Some(p) = &cfg.output.mesh {
        let mesh = torus_mesh(&g, &red.base, Some(&sol.phi))?;
        write_mesh(&mesh, p, &mut report)?;
    }
    finish(report, started, cfg.output.report.as_ref())
}

pub fn matching(cfg: &RunConfig, cache: &ProfileCache) -> Result<Report> {
    let started = Instant::now();
    let n = cfg.n.context("match needs `n`")?;
    let mut report = Report::new("match", Some(cfg.clone()));
    let h = cfg.curvature()?;
    let opts = cfg.match_options();
    let m = match_neck(n, &h, &opts)?;
    report.trace = m.reduction.trace.clone();
    report.matching = Some(MatchSummary {
        n,
        gamma: cfg.gamma,
        amp: cfg.amp,
        a_n: m.a_n,
        b_n: m.b_n,
        lambda0_res: m.lambda0_res,
        lambda1: m.lambda1_res,
        bracket: m.bracket,
        grid: (opts.n_t, opts.n_theta),
    });
    report.diag("sweep", &m.sweep);
    let (tbl, prov) = cache.load(m.a_n, opts.n_t)?;
    report.profiles.push(prov);
    let g = TorusGrid::with_n(Arc::new(tbl), opts.n_theta, n)?;
    let base = jet_torus(&g)?;
    report.certificate = Some(certify(&g, &base, &m.reduction.phi, cfg.r0));
    let sol = SavedSolution {
        a: m.a_n,
        n: Some(n),
        eps: g.eps,
        n_t: opts.n_t,
        n_theta: opts.n_theta,
        lambda0: m.reduction.lambda0,
        lambda1: m.reduction.lambda1,
        phi: m.reduction.phi,
    };
    if let Some(p) = &cfg.output.solution {
        sol.write(p)?;
    }
    if let Some(p) = &cfg.output.mesh {
        write_mesh(&torus_mesh(&g, &base, Some(&sol.phi))?, p, &mut report)?;
    }
    finish(report, started, cfg.output.report.as_ref())
}

pub fn certify_saved(path: &Path, r0: f64, report_path: Option<&PathBuf>, cache: &ProfileCache) -> Result<Report> {
    let started = Instant::now();
    let sol = SavedSolution::load(path)?;
    let mut report = Report::new("certify", None);
    let g = sol.grid(cache, &mut report)?;
    let base = jet_torus(&g)?;
    report.certificate = Some(certify(&g, &base, &sol.phi, r0));
    report.diag("solution", path.display().to_string());
    finish(report, started, report_path)
}

pub fn export(path: &Path, mesh_path: &Path, report_path: Option<&PathBuf>, cache: &ProfileCache) -> Result<Report> {
    let started = Instant::now();
    let sol = SavedSolution::load(path)?;
    let mut report = Report::new("export", None);
    let g = sol.grid(cache, &mut report)?;
    let base = jet_torus(&g)?;
    write_mesh(&torus_mesh(&g, &base, Some(&sol.phi))?, mesh_path, &mut report)?;
    finish(report, started, report_path)
}

pub fn selftest(seed: u64, only: &[u8], mut on_done: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let suite = Suite::new(seed);
    (1..=12u8)
        .filter(|id| only.is_empty() || only.contains(id))
        .map(|id| {
            let o = suite.run(id);
            on_done(&o);
            o
        })
        .collect()
}
