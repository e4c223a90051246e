use std::io::Write;

use serde_json::json;

use crate::asymptotics::{
    badset_measure, beginning_zone_check, end_zone_dominance, middle_zone_scan, psi_estimate_for, psi_piecewise_check,
    write_report_csv, PsiMethod, Report, ReportRow,
};
use crate::entropy::{entropy_functional, shannon};
use crate::error::{Error, Result};
use crate::io::{load_dataset, write_dataset};
use crate::model::{integral, l1_distance, l2_squared, sample_dataset, DataSet, GridFunction, RegressionFunction};
use crate::predictive::{exact_log_z_m_with_limit, model_posterior, ZSource};
use crate::sampler::{posterior_fit, ChainSettings, TuningParams};
use crate::urn::{mixing_distance, relative_entropy_terms, write_terms_csv};

use super::config::RunConfig;
use super::spec::parse_prefixes;

pub type Defaults = &'static [(&'static str, &'static str)];

pub const SIMULATE: Defaults = &[("f", "smooth"), ("n", "1024")];
pub const FIT: Defaults = &[
    ("data", ""),
    ("prior", "geometric:0.5"),
    ("grid", "1024"),
    ("n_iters", "200000"),
    ("burn_in", "50000"),
    ("thin", "10"),
    ("move_width", "0.05"),
    ("truth", ""),
];
pub const EXACT_Z: Defaults = &[("data", ""), ("m", "0,1,2,3,4"), ("n_max", "14")];
pub const MODEL_POSTERIOR: Defaults =
    &[("data", ""), ("prior", "geometric:0.5"), ("m_max", "10"), ("source", "series"), ("mc_samples", "100000")];
pub const ZONE_SCAN: Defaults = &[
    ("zone", "middle"),
    ("f", "step:0.5:0.2,0.8"),
    ("n", "4000"),
    ("m", "10,20,40"),
    ("mc_samples", "2000"),
    ("k", "2"),
    ("replicates", "10"),
];
pub const PSI: Defaults = &[
    ("f", "const:0.8"),
    ("alpha", "0.5,1,2"),
    ("n", "2000"),
    ("replicates", "20"),
    ("method", "exact"),
    ("inner_samples", "1000"),
    ("piecewise", ""),
];
pub const END_ZONE: Defaults = &[
    ("f", "step:0.5:0.2,0.8"),
    ("alpha", "0.5,1,2,5"),
    ("n", "2000"),
    ("replicates", "20"),
    ("method", "exact"),
    ("inner_samples", "1000"),
];
pub const BADSET: Defaults = &[("data", ""), ("f", "smooth"), ("n", "1000"), ("epsilon", "0.3"), ("kappa", "10")];
pub const URN_TERMS: Defaults = &[("p", "0.8"), ("r", "0.5"), ("k", "5,10,20"), ("replicates", "100000")];
pub const URN_MIXING: Defaults = &[("r", "0.5"), ("m", "1,2,3,4,5,6,7,8"), ("prefixes", "111")];
pub const ENTROPY: Defaults = &[("f", "smooth")];

fn to_json(cfg: &RunConfig, result: serde_json::Value, out: &mut dyn Write) -> Result<()> {
    let mut doc = cfg.echo_json();
    doc["result"] = result;
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

fn psi_method(cfg: &RunConfig) -> Result<PsiMethod> {
    match cfg.str("method") {
        "exact" => Ok(PsiMethod::Exact),
        "mc" => Ok(PsiMethod::MonteCarlo { inner_samples: cfg.usize("inner_samples")? }),
        other => Err(Error::Config(format!("method must be exact or mc, got `{other}`"))),
    }
}

fn data_or_simulated(cfg: &RunConfig, f: &dyn RegressionFunction) -> Result<DataSet> {
    match cfg.str("data") {
        "" => Ok(sample_dataset(f, cfg.usize("n")?, cfg.seed)),
        path => load_dataset(path),
    }
}

pub fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let f = cfg.function("f")?;
    let data = sample_dataset(&f, cfg.usize("n")?, cfg.seed);
    write_dataset(&data, &cfg.header(), out)
}

pub fn fit(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(cfg.required_path("data")?)?;
    let nu = cfg.prior("prior")?;
    let truth = cfg.optional_function("truth")?;
    let settings = ChainSettings {
        n_iters: cfg.usize("n_iters")?,
        burn_in: cfg.usize("burn_in")?,
        thin: cfg.usize("thin")?,
        tuning: TuningParams { move_width: cfg.f64("move_width")?, ..TuningParams::default() },
        ..ChainSettings::default()
    };
    let fit = posterior_fit(&data, &nu, &settings, cfg.usize("grid")?, cfg.seed)?;
    let mut result = json!({
        "n": data.len(),
        "grid": fit.mean,
        "retained": fit.retained,
        "acceptance": fit.stats,
    });
    if let Some(f) = truth {
        let best = integral(&f, 0.0, 1.0);
        let constant = GridFunction::new(vec![best, best])?;
        let ise = l2_squared(&fit.mean, &f);
        result["truth"] = json!({
            "l1": l1_distance(&fit.mean, &f),
            "ise": ise,
            "ise_best_constant": l2_squared(&constant, &f),
        });
        eprintln!("ise_vs_truth = {ise}");
    }
    to_json(cfg, result, out)
}

pub fn exact_z(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(cfg.required_path("data")?)?;
    let n_max = cfg.usize("n_max")?;
    let rows = cfg
        .usize_list("m")?
        .into_iter()
        .map(|m| Ok((m, exact_log_z_m_with_limit(&data, m, n_max)?.ln())))
        .collect::<Result<Vec<_>>>()?;
    for c in cfg.header() {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "m,log_z_m")?;
    for (m, lz) in rows {
        writeln!(out, "{m},{lz}")?;
    }
    Ok(())
}

pub fn model_posterior_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(cfg.required_path("data")?)?;
    let nu = cfg.prior("prior")?;
    let source = match cfg.str("source") {
        "exact" => ZSource::Exact,
        "series" => ZSource::Series,
        "mc" => ZSource::MonteCarlo { n_samples: cfg.usize("mc_samples")?, seed: cfg.seed },
        other => return Err(Error::Config(format!("source must be exact, series or mc, got `{other}`"))),
    };
    let post = model_posterior(&data, &nu, cfg.usize("m_max")?, source)?;
    for c in cfg.header() {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "# prior_mass_covered = {}", post.prior_mass_covered)?;
    if post.truncated {
        writeln!(out, "# warning: m_max leaves prior mass uncovered")?;
    }
    writeln!(out, "m,prior,log_z_m,posterior")?;
    for (m, (lz, p)) in post.log_z.iter().zip(&post.probs).enumerate() {
        writeln!(out, "{m},{},{lz},{p}", nu.mass(m))?;
    }
    Ok(())
}

pub fn zone_scan(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let f = cfg.function("f")?;
    let n = cfg.usize("n")?;
    let mut header = cfg.header();
    let rows = match cfg.str("zone") {
        "middle" => middle_zone_scan(&f, n, &cfg.usize_list("m")?, cfg.usize("mc_samples")?, cfg.seed)?.rows(),
        "beginning" => {
            let rep = beginning_zone_check(&f, cfg.usize("k")?, n, cfg.usize("replicates")?, cfg.seed)?;
            if rep.f_is_small_step {
                header.push("note: f is a step function with at most k jumps; no penalty expected".into());
            }
            rep.rows()
        }
        other => return Err(Error::Config(format!("zone must be middle or beginning, got `{other}`"))),
    };
    write_report_csv(&rows, &header, out)
}

pub fn psi(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let method = psi_method(cfg)?;
    let n = cfg.usize("n")?;
    let reps = cfg.usize("replicates")?;
    let alphas = cfg.f64_list("alpha")?;
    let rows = match cfg.str("piecewise") {
        "" => {
            let label = cfg.str("f");
            let f = cfg.function("f")?;
            let reference = -entropy_functional(&f);
            alphas
                .iter()
                .map(|&alpha| {
                    let est = psi_estimate_for(&f, label, alpha, n, reps, method, cfg.seed)?;
                    Ok(ReportRow {
                        keys: vec![("alpha", alpha.to_string()), ("n", n.to_string())],
                        estimate: est.estimate,
                        std_error: est.std_error,
                        reference,
                        margin: est.estimate - reference,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        spec => {
            let v = cfg.f64_list("piecewise")?;
            let [pl, pr, b] = v[..] else {
                return Err(Error::Config(format!("piecewise = `{spec}` must be pL,pR,b")));
            };
            let mut rows = Vec::new();
            for &alpha in &alphas {
                rows.extend(psi_piecewise_check(pl, pr, b, alpha, n, reps, method, cfg.seed)?.rows());
            }
            rows
        }
    };
    write_report_csv(&rows, &cfg.header(), out)
}

pub fn end_zone(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let f = cfg.function("f")?;
    let rep = end_zone_dominance(
        &f,
        &cfg.f64_list("alpha")?,
        cfg.usize("n")?,
        cfg.usize("replicates")?,
        psi_method(cfg)?,
        cfg.seed,
    )?;
    let mut header = cfg.header();
    if let Some(w) = &rep.warning {
        header.push(format!("warning: {w}"));
    }
    write_report_csv(&rep.rows(), &header, out)
}

pub fn badset(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let f = cfg.function("f")?;
    let data = data_or_simulated(cfg, &f)?;
    let rep = badset_measure(&data, &f, cfg.f64("epsilon")?, cfg.f64("kappa")?)?;
    let mut result = serde_json::to_value(&rep)?;
    result["n"] = json!(data.len());
    to_json(cfg, result, out)
}

pub fn urn_terms(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let terms = relative_entropy_terms(
        cfg.f64("p")?,
        cfg.f64("r")?,
        &cfg.usize_list("k")?,
        cfg.usize("replicates")?,
        cfg.seed,
    )?;
    write_terms_csv(&terms, &cfg.header(), out)
}

pub fn urn_mixing(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let r = cfg.f64("r")?;
    let prefixes = parse_prefixes(cfg.str("prefixes"))?;
    let ms = cfg.usize_list("m")?;
    let table = ms.iter().map(|&m| mixing_distance(m, r, &prefixes)).collect::<Result<Vec<_>>>()?;
    for c in cfg.header() {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "m,prefix,tv,bound")?;
    for (&m, tvs) in ms.iter().zip(&table) {
        for (prefix, tv) in prefixes.iter().zip(tvs) {
            let bits: String = prefix.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(out, "{m},{bits},{tv},{}", (1.0 - r).powi(m as i32))?;
        }
    }
    Ok(())
}

pub fn entropy(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let f = cfg.function("f")?;
    for c in cfg.header() {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "entropy,entropy_of_mean")?;
    writeln!(out, "{},{}", entropy_functional(&f), shannon(integral(&f, 0.0, 1.0)))?;
    Ok(())
}
