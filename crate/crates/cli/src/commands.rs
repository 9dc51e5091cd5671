use std::path::Path;

use serde::Serialize;
use uatlab::construct::{build_depth3_approximator, build_lifted_approximator, build_shallow_1d, bump_1d, bump_nd, FitReport, GridSpec};
use uatlab::lab::{cone_example_integral, fit_and_probe, ridge_norm_growth};
use uatlab::quadrature::lp_norm;
use uatlab::{DeepReluNet, Domain, Neuron, ShallowNet};

use crate::config::*;
use crate::output::{fmt_f, Output};
use crate::CliError;

#[derive(Serialize)]
struct ScheduleEntry<'a> {
    sigma: f64,
    report: &'a FitReport,
}

pub fn approximate(cfg: &ApproximateConfig, out: &Output) -> Result<(), CliError> {
    match cfg {
        ApproximateConfig::Depth3(c) => {
            if c.sigma.is_empty() {
                return Err(CliError::Config("depth3 needs at least one sigma".into()));
            }
            let grids = c
                .sigma
                .iter()
                .map(|&s| GridSpec::new(c.domain.clone(), s, c.mode))
                .collect::<uatlab::Result<Vec<_>>>()?;
            let mut runs = Vec::new();
            for grid in &grids {
                let (net, rep) = build_depth3_approximator(|x: &[f64]| c.target.eval(x), grid, c.p, &c.quadrature)?;
                println!("sigma {}: relative residual {:.6e}", grid.sigma, rep.relative_residual);
                runs.push((grid.sigma, net, rep));
            }
            let mut csv = String::from("sigma,residual,relative_residual\n");
            for (s, _, r) in &runs {
                csv.push_str(&format!("{},{},{}\n", fmt_f(*s), fmt_f(r.residual_lp), fmt_f(r.relative_residual)));
            }
            let entries: Vec<ScheduleEntry> = runs.iter().map(|(s, _, r)| ScheduleEntry { sigma: *s, report: r }).collect();
            let (_, net, last) = runs.last().expect("non-empty schedule");
            out.json("net.json", net)?;
            out.report("fit_report.json", "approximate", cfg, &entries)?;
            out.csv("residuals.csv", &csv)?;
            out.csv("coefficients.csv", &last.coefficients_csv())?;
        }
        ApproximateConfig::Shallow1d(c) => {
            let (net, rep) = build_shallow_1d(|x: &[f64]| c.target.eval(x), &c.activation, c.k, c.knots, c.mode, c.p, &c.quadrature)?;
            println!("relative residual {:.6e}", rep.relative_residual);
            out.json("net.json", &net)?;
            out.report("fit_report.json", "approximate", cfg, &rep)?;
            out.csv("coefficients.csv", &rep.coefficients_csv())?;
        }
        ApproximateConfig::Lifted(c) => {
            let (net, rep) =
                build_lifted_approximator(|x: &[f64]| c.target.eval(x), &c.y, &c.activation, c.k, c.knots, c.mode, c.p, &c.quadrature)?;
            let ratio = rep.ratio.unwrap_or(f64::NAN);
            println!("residual ratio {ratio:.9} (expected {:.9})", rep.expected_ratio);
            let csv = format!(
                "y0,p,residual_1d,residual_lifted,ratio,expected_ratio\n{},{},{},{},{},{}\n",
                fmt_f(c.y[0]),
                fmt_f(c.p),
                fmt_f(rep.fit.residual_lp),
                fmt_f(rep.residual_lifted),
                fmt_f(ratio),
                fmt_f(rep.expected_ratio)
            );
            out.json("net.json", &net)?;
            out.report("fit_report.json", "approximate", cfg, &rep)?;
            out.csv("lifted.csv", &csv)?;
            out.csv("coefficients.csv", &rep.fit.coefficients_csv())?;
        }
    }
    Ok(())
}

pub fn probe(cfg: &ProbeCmdConfig, out: &Output) -> Result<(), CliError> {
    let rep = fit_and_probe(|x: &[f64]| cfg.target.eval(x), &cfg.activation, &cfg.probe, &cfg.quadrature)?;
    let verdict = serde_json::to_value(rep.verdict).map_err(|e| CliError::Config(e.to_string()))?;
    println!(
        "verdict {} (inner residual {:.6e}, target norm {:.6e})",
        verdict.as_str().unwrap_or_default(),
        rep.inner_residual,
        rep.target_inner_norm
    );
    out.report("probe_report.json", "probe", cfg, &rep)?;
    out.csv("outer_norms.csv", &rep.outer_norms.to_csv())?;
    Ok(())
}

pub fn growth(cfg: &GrowthCmdConfig, out: &Output) -> Result<(), CliError> {
    let net = match &cfg.net {
        Some(path) => match load_net(path)? {
            AnyNet::Shallow(n) => n,
            AnyNet::Deep(_) => return Err(CliError::Config("growth profiles need a shallow net".into())),
        },
        None => ShallowNet::new(2, cfg.activation.clone(), 0.0, vec![Neuron::new(cfg.t, cfg.y.to_vec(), cfg.rho)])?,
    };
    let prof = ridge_norm_growth(&net, &cfg.radii, cfg.p, &cfg.quadrature)?;
    for (r, n) in prof.radii.iter().zip(&prof.norms) {
        println!("R {r}: norm {n:.6e}");
    }
    out.report("growth.json", "growth", cfg, &prof)?;
    out.csv("growth.csv", &prof.to_csv())?;
    Ok(())
}

pub fn cone(cfg: &ConeCmdConfig, out: &Output) -> Result<(), CliError> {
    let r = cone_example_integral(cfg.c, cfg.two_sided, &cfg.quadrature)?;
    println!("{}", fmt_f(r.value));
    out.report("cone.json", "cone", cfg, &r)?;
    Ok(())
}

pub enum AnyNet {
    Shallow(ShallowNet),
    Deep(DeepReluNet),
}

impl AnyNet {
    fn dim(&self) -> usize {
        match self {
            AnyNet::Shallow(n) => n.dim(),
            AnyNet::Deep(n) => n.dim_in(),
        }
    }
}

pub fn load_net(path: &Path) -> Result<AnyNet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let shallow = serde_json::from_str::<ShallowNet>(&text);
    if let Ok(n) = shallow {
        return Ok(AnyNet::Shallow(n));
    }
    match serde_json::from_str::<DeepReluNet>(&text) {
        Ok(n) => Ok(AnyNet::Deep(n)),
        Err(deep) => Err(CliError::Config(format!(
            "{} is neither a shallow net ({}) nor a deep net ({deep})",
            path.display(),
            shallow.err().map(|e| e.to_string()).unwrap_or_default()
        ))),
    }
}

#[derive(Serialize)]
struct NormResolved<'a> {
    net: &'a Path,
    domain: &'a Domain,
    p: f64,
    quadrature: &'a uatlab::QuadratureConfig,
}

pub fn norm(cfg: &NormCmdConfig, out: &Output) -> Result<(), CliError> {
    let path = cfg.net.as_deref().ok_or_else(|| CliError::Config("norm needs a net (--net or config \"net\")".into()))?;
    let net = load_net(path)?;
    let domain = cfg.domain.clone().unwrap_or_else(|| Domain::real_line(net.dim()));
    if domain.dim() != net.dim() {
        return Err(CliError::Config(format!("domain has dim {} but the net takes {}", domain.dim(), net.dim())));
    }
    let p = cfg.p.unwrap_or(2.0);
    let r = match &net {
        AnyNet::Shallow(n) => lp_norm(|x: &[f64]| n.eval_unchecked(x), &domain, p, &cfg.quadrature)?,
        AnyNet::Deep(n) => lp_norm(|x: &[f64]| n.eval(x).unwrap_or(f64::NAN), &domain, p, &cfg.quadrature)?,
    };
    println!("{}", fmt_f(r.value));
    let resolved = NormResolved { net: path, domain: &domain, p, quadrature: &cfg.quadrature };
    out.report("norm.json", "norm", &resolved, &r)?;
    Ok(())
}

pub fn bump(dim: usize, out: &Output) -> Result<(), CliError> {
    let f = bump_nd(dim)?;
    out.json("bump_G.json", &bump_1d())?;
    out.json("bump_F.json", &f)?;
    println!("G: depth {}, F on R^{dim}: depth {}", bump_1d().depth(), f.depth());
    Ok(())
}
