use serde::Serialize;
use trustweave::bounds::{
    deviation_bound_leg, deviation_bound_mal, tighter_mal_bound, total_deviation_bound, BoundParams, BoundsReport,
    ClassTimes, RateEvaluator, ReportGrid,
};
use trustweave::graph::SpectralProfile;
use trustweave::harness::{compare_with_window_baseline, run_ensemble, sweep, EnsembleReport, WindowComparison};
use trustweave::protocol::ConfidenceSchedule;

use crate::config::Resolved;
use crate::error::CliError;
use crate::output::{format_cell as num, prepare_dir, write_json, Table};

fn some(v: f64) -> Option<f64> {
    Some(v)
}

fn ceil_mean(samples: &[usize]) -> Option<usize> {
    (!samples.is_empty()).then(|| samples.iter().sum::<usize>().div_ceil(samples.len()))
}

fn write_artifacts<R: Serialize>(cfg: &Resolved, series: &Table, report: &R) -> Result<(), CliError> {
    prepare_dir(&cfg.out)?;
    write_json(&cfg.out.join("config.resolved.json"), cfg)?;
    series.write(&cfg.out, "series", cfg.format)?;
    write_json(&cfg.out.join("report.json"), report)
}

/// `rho(t)` at the ensemble's mean realized classification times, when the
/// schedule is exponential and the spectrum is supported.
fn rate_column(cfg: &Resolved, report: &EnsembleReport) -> Vec<Option<f64>> {
    let mut col = vec![None; cfg.horizon + 1];
    let ConfidenceSchedule::Exponential { c, gamma } = cfg.schedule else {
        return col;
    };
    let (Some(t_f), Some(t_f_m)) = (ceil_mean(&report.t_f_samples()), ceil_mean(&report.t_f_m_samples())) else {
        return col;
    };
    let s = cfg.scenario();
    let Ok(profile) = s.spectral_profile() else {
        return col;
    };
    let params = BoundParams::from_parts(
        &s.graph,
        &profile,
        &s.trust,
        c,
        gamma,
        s.eta,
        ClassTimes::Fixed(t_f),
        ClassTimes::Fixed(t_f_m),
    );
    if let Ok(series) = RateEvaluator::new(&params, cfg.horizon + 1).and_then(|e| e.series(t_f, t_f_m, cfg.horizon)) {
        for r in series {
            col[r.t] = Some(r.rho.value);
        }
    }
    col
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a Resolved,
    ensemble: &'a EnsembleReport,
}

pub fn run(cfg: &Resolved) -> Result<(), CliError> {
    let report = run_ensemble(cfg.scenario(), &cfg.schedule, cfg.trials, cfg.seed)?;
    let rho = rate_column(cfg, &report);
    let mut series = Table::new(&["t", "lambda", "mean_deviation", "mean_spread", "bound_rho"]);
    for t in 0..=cfg.horizon {
        series.push(vec![
            some(t as f64),
            some(cfg.schedule.eval(t)),
            some(report.mean_deviation[t]),
            some(report.mean_spread[t]),
            rho[t],
        ]);
    }
    write_artifacts(cfg, &series, &RunReport { config: cfg, ensemble: &report })?;
    let s = &report.summary;
    println!("nominal consensus     {}", report.nominal_consensus);
    println!("mean final deviation  {} (std {})", num(s.mean_final_deviation), num(s.std_final_deviation));
    match s.mean_time_to_consensus {
        Some(t) => println!("mean time to consensus {t}"),
        None => println!("mean time to consensus n/a"),
    }
    println!("consensus trials      {}/{}", s.consensus_trials, report.trials);
    println!("censored trials       {}", s.censored_trials);
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}

#[derive(Serialize)]
struct GammaRow {
    gamma: f64,
    u_leg_aut: f64,
    u_leg_in: f64,
    u_leg: f64,
    zeta: f64,
    u_mal: f64,
    tighter_mal: f64,
    delta: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct BoundsOutput<'a> {
    config: &'a Resolved,
    profile: &'a SpectralProfile,
    report: &'a BoundsReport,
    gamma_grid: &'a [GammaRow],
}

pub fn bounds(cfg: &Resolved) -> Result<(), CliError> {
    let section = cfg.bounds.as_ref().expect("bounds section resolved");
    let ConfidenceSchedule::Exponential { c, gamma } = cfg.schedule else {
        return Err(CliError::Config(format!("bounds need an exponential schedule, got {}", cfg.schedule)));
    };
    let s = cfg.scenario();
    let profile = s.spectral_profile()?;
    let params = BoundParams::from_parts(
        &s.graph,
        &profile,
        &s.trust,
        c,
        gamma,
        s.eta,
        ClassTimes::Fixed(section.t_f),
        ClassTimes::Fixed(section.t_f_m),
    );
    let grid = ReportGrid {
        t_max: section.t_max,
        epsilons: section.epsilons.clone(),
        expected_at: section.expected_at.clone(),
        pmf_max_k: section.pmf_max_k,
    };
    let report = BoundsReport::build(&params, &grid)?;

    let mut columns = vec!["t", "rho_l", "rho_m", "rho", "rho_raw", "p"];
    if section.asymptotes {
        columns.extend(["limit_gamma_inf", "limit_gamma_zero"]);
    }
    let mut series = Table::new(&columns);
    for row in &report.rate {
        let mut cells = vec![
            some(row.bound.t as f64),
            some(row.bound.rho_l),
            some(row.bound.rho_m),
            some(row.bound.rho.value),
            some(row.bound.rho.raw),
            some(row.p.value),
        ];
        if section.asymptotes {
            cells.extend([some(row.asymptotes.gamma_inf), some(row.asymptotes.gamma_zero)]);
        }
        series.push(cells);
    }

    let gamma_grid =
        section.gammas.iter().map(|&g| gamma_row(&params, g, &section.epsilons)).collect::<Result<Vec<_>, _>>()?;
    prepare_dir(&cfg.out)?;
    if !gamma_grid.is_empty() {
        let mut cols = vec!["gamma", "u_leg_aut", "u_leg_in", "u_leg", "zeta", "u_mal", "tighter_mal"];
        let delta_names: Vec<String> = section.epsilons.iter().map(|e| format!("delta_eps_{e}")).collect();
        cols.extend(delta_names.iter().map(String::as_str));
        let mut table = Table::new(&cols);
        for r in &gamma_grid {
            let mut cells = vec![
                some(r.gamma),
                some(r.u_leg_aut),
                some(r.u_leg_in),
                some(r.u_leg),
                some(r.zeta),
                some(r.u_mal),
                some(r.tighter_mal),
            ];
            cells.extend(r.delta.iter().map(|&(_, d)| some(d)));
            table.push(cells);
        }
        table.write(&cfg.out, "gamma_grid", cfg.format)?;
    }
    write_artifacts(
        cfg,
        &series,
        &BoundsOutput { config: cfg, profile: &profile, report: &report, gamma_grid: &gamma_grid },
    )?;

    if !report.valid {
        eprintln!("warning: trust gaps violate E_L > 0 > E_M; probabilistic bounds report their caps");
    }
    println!("sigma {} (m_sigma {}, m {}), b {}", num(profile.sigma), profile.m_sigma, profile.m, num(profile.b));
    println!(
        "u_leg {} (aut {}, in {})",
        num(report.u_leg.total.value),
        num(report.u_leg.autonomous),
        num(report.u_leg.input)
    );
    println!("u_mal {} (zeta {}), tighter {}", num(report.mal.u_mal), num(report.mal.zeta), num(report.tighter_mal));
    for (eps, d) in &report.delta {
        println!("delta({eps}) {}", num(d.value));
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}

fn gamma_row(params: &BoundParams, gamma: f64, epsilons: &[f64]) -> Result<GammaRow, CliError> {
    let leg = deviation_bound_leg(params.c, gamma, params.d_max, &params.t_f)?;
    let (zeta, u_mal, tighter) = if params.is_valid() {
        let mal = deviation_bound_mal(params.c, gamma, params.e_m, params.malicious_links)?;
        let tight = tighter_mal_bound(params.c, gamma, params.e_m, params.malicious_links, params.d1, params.eta)?;
        (mal.zeta, mal.u_mal, tight)
    } else {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    };
    let delta = epsilons
        .iter()
        .map(|&e| Ok((e, total_deviation_bound(params.eta, e, leg.total.value, u_mal)?.value)))
        .collect::<Result<_, trustweave::Error>>()?;
    Ok(GammaRow {
        gamma,
        u_leg_aut: leg.autonomous,
        u_leg_in: leg.input,
        u_leg: leg.total.value,
        zeta,
        u_mal,
        tighter_mal: tighter,
        delta,
    })
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    config: &'a Resolved,
    ensembles: &'a [EnsembleReport],
}

pub fn sweep_gammas(cfg: &Resolved) -> Result<(), CliError> {
    let section = cfg.sweep.as_ref().expect("sweep section resolved");
    if section.gammas.is_empty() {
        return Err(CliError::Config("sweep needs at least one gamma".into()));
    }
    let schedules =
        section.gammas.iter().map(|&g| ConfidenceSchedule::exponential(section.c, g)).collect::<Result<Vec<_>, _>>()?;
    let s = cfg.scenario();
    let reports = sweep(s, &schedules, cfg.trials, cfg.seed)?;
    let profile = s.spectral_profile().ok();

    let mut table = Table::new(&[
        "gamma",
        "mean_final_deviation",
        "std_final_deviation",
        "mean_time_to_consensus",
        "consensus_trials",
        "censored_trials",
        "u_leg",
        "u_mal",
    ]);
    println!("gamma  mean_final_deviation  mean_time_to_consensus");
    for (g, r) in section.gammas.iter().zip(&reports) {
        let samples = r.t_f_samples();
        let u_leg = (!samples.is_empty())
            .then(|| deviation_bound_leg(section.c, *g, s.graph.degree_stats().d_max, &ClassTimes::Samples(samples)))
            .transpose()?
            .map(|l| l.total.value);
        let u_mal = match &profile {
            Some(_) if s.trust.is_informative() => {
                Some(deviation_bound_mal(section.c, *g, s.trust.e_m(), s.graph.degree_stats().malicious_links)?.u_mal)
            }
            _ => None,
        };
        let sm = &r.summary;
        table.push(vec![
            some(*g),
            some(sm.mean_final_deviation),
            some(sm.std_final_deviation),
            sm.mean_time_to_consensus,
            some(sm.consensus_trials as f64),
            some(sm.censored_trials as f64),
            u_leg,
            u_mal,
        ]);
        let ttc = sm.mean_time_to_consensus.map(|t| t.to_string()).unwrap_or_else(|| "n/a".into());
        println!("{g}  {}  {ttc}", num(sm.mean_final_deviation));
    }
    write_artifacts(cfg, &table, &SweepOutput { config: cfg, ensembles: &reports })?;
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    config: &'a Resolved,
    comparison: &'a WindowComparison,
}

pub fn compare(cfg: &Resolved) -> Result<(), CliError> {
    let section = cfg.compare.as_ref().expect("compare section resolved");
    let cmp = compare_with_window_baseline(cfg.scenario(), section.c, section.gamma, section.t0, cfg.trials, cfg.seed)?;
    let mut table = Table::new(&[
        "t",
        "exponential_mean_deviation",
        "window_mean_deviation",
        "exponential_mean_spread",
        "window_mean_spread",
    ]);
    for t in 0..=cfg.horizon {
        table.push(vec![
            some(t as f64),
            some(cmp.exponential.mean_deviation[t]),
            some(cmp.window.mean_deviation[t]),
            some(cmp.exponential.mean_spread[t]),
            some(cmp.window.mean_spread[t]),
        ]);
    }
    write_artifacts(cfg, &table, &CompareOutput { config: cfg, comparison: &cmp })?;
    println!(
        "exponential({}, {}) mean final deviation {}",
        section.c, section.gamma, cmp.exponential.summary.mean_final_deviation
    );
    println!("window({}) mean final deviation {}", section.t0, cmp.window.summary.mean_final_deviation);
    println!("exponential arm closer in {}/{} trials", cmp.exponential_wins, cfg.trials);
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}
