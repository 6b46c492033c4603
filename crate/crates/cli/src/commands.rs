//! The subcommands. Each builds a [`Table`]; writing it out is the caller's job.

use anyhow::Result;
use exlab::exponents::{exponents_for, optimal_exponents, ThresholdSpec};
use exlab::optimizer::sweep;
use exlab::protocol::{figure, FigureRow};
use exlab::simulator::{dominance_check, Averaging, Decoder, Ensemble, Mode};
use exlab::thresholds::{critical_rate_high, critical_rate_low, g_star, optimal_list_exponent, t_star, Class, OptimalThreshold};
use exlab::{Error, Marginal};
use log::info;

use crate::config::{ClassChoice, Config, DecoderChoice, Settings, SimMode, Target};
use crate::table::{Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header block shared by every table: tool version, command, units, the
/// full resolved settings, and the optimizer tolerances not in the settings.
fn header(table: &mut Table, command: &str, settings: &Settings, cfg: &Config) {
    table.push_meta("tool", format!("exlab {VERSION}"));
    table.push_meta("command", command);
    table.push_meta("units", if cfg.bits { "bits" } else { "nats" });
    for (k, v) in settings.pairs() {
        table.push_meta(k, v);
    }
    table.push_meta("feas_tol", format!("{:e}", cfg.opts.feas_tol));
    table.push_meta("candidates", cfg.opts.candidates.to_string());
    table.push_meta("max_rate", format!("{}", cfg.model.max_rate()));
}

fn to_bits(table: &mut Table, cfg: &Config, columns: &[&str]) {
    if cfg.bits {
        table.scale_columns(columns, 1.0 / std::f64::consts::LN_2);
    }
}

fn target_at(cfg: &Config, ee_star: f64) -> f64 {
    match cfg.target {
        Target::Matched => ee_star,
        Target::Fixed(e) => e,
    }
}

fn families(cfg: &Config) -> Vec<Class> {
    cfg.classes
        .iter()
        .filter_map(|c| match c {
            ClassChoice::Family(f) => Some(*f),
            ClassChoice::Optimal => None,
        })
        .collect()
}

fn class_name(c: Class) -> &'static str {
    ClassChoice::Family(c).name()
}

/// Optimal exponents per rate, plus the best list exponent of each requested
/// family at the target error exponent.
pub fn exponents(settings: &Settings, cfg: &Config) -> Result<Table> {
    let fams = families(cfg);
    let mut cols = vec!["rate", "ee_star", "el_star", "e_a", "e_b", "branch", "target_ee"];
    let fam_cols: Vec<String> = fams.iter().map(|c| format!("{}_el", class_name(*c))).collect();
    cols.extend(fam_cols.iter().map(String::as_str));
    let mut table = Table::new(&cols);
    header(&mut table, "exponents", settings, cfg);

    let rows = sweep(&cfg.rates, |&r| -> exlab::Result<Vec<Cell>> {
        let row = exlab::protocol::figure_row(&cfg.model, r, cfg.t, &[], &cfg.opts)?;
        let e = target_at(cfg, row.ee_star);
        let mut cells: Vec<Cell> = vec![
            r.into(),
            row.ee_star.into(),
            row.el_star.into(),
            row.e_a.into(),
            row.e_b.into(),
            format!("{:?}", row.branch).into(),
            e.into(),
        ];
        for &c in &fams {
            cells.push(optimal_list_exponent(&cfg.model, c, r, e, &cfg.opts)?.value.0.into());
        }
        info!("exponents: R = {r} done");
        Ok(cells)
    })?;
    for row in rows {
        table.push(row?);
    }
    let mut nat_cols = vec!["rate", "ee_star", "el_star", "e_a", "e_b", "target_ee"];
    nat_cols.extend(fam_cols.iter().map(String::as_str));
    to_bits(&mut table, cfg, &nat_cols);
    Ok(table)
}

/// Points of the simplex over the output alphabet with step `1/(k-1)`.
fn marginal_lattice(ny: usize, k: usize) -> Vec<Vec<f64>> {
    let steps = k - 1;
    let mut out = Vec::new();
    let mut counts = vec![0usize; ny];
    fn rec(i: usize, left: usize, counts: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        if i + 1 == counts.len() {
            counts[i] = left;
            out.push(counts.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in (0..=left).rev() {
            counts[i] = c;
            rec(i + 1, left - c, counts, steps, out);
        }
    }
    rec(0, steps, &mut counts, steps, &mut out);
    out
}

fn lattice_label(q: &[f64]) -> String {
    let parts: Vec<String> = q.iter().map(|v| format!("{v}")).collect();
    format!("g_star@{}", parts.join("/"))
}

/// `Infeasible` becomes `+inf`; everything else is a real error.
fn or_inf(r: exlab::Result<f64>) -> exlab::Result<f64> {
    match r {
        Err(Error::Infeasible(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Optimal thresholds per rate: `T*`, critical rates and `g*` on a lattice
/// of output marginals. A negative target makes every threshold `+inf`.
pub fn thresholds(settings: &Settings, cfg: &Config) -> Result<Table> {
    let lattice = marginal_lattice(cfg.model.output_size(), cfg.marginal_points);
    let labels: Vec<String> = lattice.iter().map(|q| lattice_label(q)).collect();
    let with_low = cfg.t >= 0.0;
    let mut cols = vec!["rate", "target_ee", "t_star", "r_cr_high"];
    if with_low {
        cols.push("r_cr_low");
    }
    cols.extend(labels.iter().map(String::as_str));
    let mut table = Table::new(&cols);
    header(&mut table, "thresholds", settings, cfg);

    let low = if with_low { Some(critical_rate_low(&cfg.model, cfg.t, &cfg.opts)?.value.0) } else { None };
    let marginals: Vec<Marginal> = lattice.iter().map(|q| Marginal::new(q.clone())).collect::<exlab::Result<_>>()?;

    let rows = sweep(&cfg.rates, |&r| -> exlab::Result<Vec<Cell>> {
        let e = match cfg.target {
            Target::Fixed(e) => e,
            Target::Matched => optimal_exponents(&cfg.model, r, cfg.t, &cfg.opts)?.0.value.0,
        };
        let mut cells: Vec<Cell> = vec![r.into(), e.into()];
        if e < 0.0 {
            cells.extend(std::iter::repeat_n(Cell::Num(f64::INFINITY), cols.len() - 2));
            return Ok(cells);
        }
        cells.push(t_star(&cfg.model, r, e, &cfg.opts)?.0.into());
        cells.push(or_inf(critical_rate_high(&cfg.model, e, r, &cfg.opts).map(|c| c.value.0))?.into());
        if let Some(v) = low {
            cells.push(v.into());
        }
        for q in &marginals {
            cells.push(g_star(&cfg.model, q, e, &cfg.opts)?.0.into());
        }
        info!("thresholds: R = {r} done");
        Ok(cells)
    })?;
    for row in rows {
        table.push(row?);
    }
    let mut nat_cols = vec!["rate", "target_ee", "t_star", "r_cr_high", "r_cr_low"];
    nat_cols.extend(labels.iter().map(String::as_str));
    to_bits(&mut table, cfg, &nat_cols);
    Ok(table)
}

pub const FIGURE_COLUMNS: &[&str] =
    &["rate", "ee_star", "el_star", "psi_el", "lambda1_el", "lambda2_el", "t_star", "e_a", "e_b", "branch"];

/// The matched-target comparison of all three families.
pub fn figure_table(which: u8, settings: &Settings, cfg: &Config) -> Result<Table> {
    let mut table = Table::new(FIGURE_COLUMNS);
    header(&mut table, &format!("figure {which}"), settings, cfg);
    let rows: Vec<FigureRow> = figure(&cfg.model, cfg.t, &cfg.rates, &cfg.opts)?;
    for r in rows {
        table.push(vec![
            r.rate.into(),
            r.ee_star.into(),
            r.el_star.into(),
            r.psi.into(),
            r.lambda1.into(),
            r.lambda2.into(),
            r.t_star.into(),
            r.e_a.into(),
            r.e_b.into(),
            format!("{:?}", r.branch).into(),
        ]);
    }
    to_bits(&mut table, cfg, &FIGURE_COLUMNS[..9]);
    Ok(table)
}

/// Settings a figure starts from before the config file and flags.
pub fn figure_preset(which: u8, settings: &mut Settings) -> Result<()> {
    use crate::config::Origin;
    let origin = || Origin::Preset(if which == 1 { "figure 1" } else { "figure 2" });
    let (channel, t) = if which == 1 { ("w1", "0.05") } else { ("w2", "-0.05") };
    settings.set("channel", channel, origin())?;
    settings.set("T", t, origin())?;
    settings.set("rates", "0:max:21", origin())?;
    settings.set("target_ee", "matched", origin())?;
    settings.set("out", &format!("figure{which}.csv"), origin())?;
    Ok(())
}

fn build_decoder(choice: DecoderChoice, cfg: &Config) -> Result<Decoder> {
    let target = || -> Result<f64> {
        Ok(match cfg.target {
            Target::Fixed(e) => e,
            Target::Matched => optimal_exponents(&cfg.model, cfg.sim_rate, cfg.t, &cfg.opts)?.0.value.0,
        })
    };
    Ok(match choice {
        DecoderChoice::Forney => Decoder::Forney { t: cfg.t },
        DecoderChoice::TypeBased => Decoder::TypeBased { t: cfg.t },
        DecoderChoice::Lambda2 => Decoder::Lambda2 { t: cfg.t },
        DecoderChoice::Lambda1 => Decoder::from_spec(&OptimalThreshold::g_star(&cfg.model, target()?, &cfg.opts).spec()),
        DecoderChoice::Psi => {
            Decoder::from_spec(&OptimalThreshold::h_star(&cfg.model, cfg.sim_rate, target()?, &cfg.opts)?.spec())
        }
    })
}

/// Ensemble averages for every blocklength and decoder, optionally with a
/// dominance check against the likelihood-ratio trade-off curve.
pub fn simulate(settings: &Settings, cfg: &Config) -> Result<Table> {
    let mut cols = vec![
        "n", "M", "rate", "decoder_kind", "decoder_params", "mode", "p_e", "list_size", "stderr_pe", "stderr_list",
        "tie_rate", "seed",
    ];
    if cfg.dominance {
        cols.extend(["dominated", "forney_t", "tie_inclusion", "forney_pe", "forney_list"]);
    }
    let mut table = Table::new(&cols);
    header(&mut table, "simulate", settings, cfg);
    let decoders: Vec<Decoder> = cfg.decoders.iter().map(|&d| build_decoder(d, cfg)).collect::<Result<_>>()?;
    let averaging = match cfg.mode {
        SimMode::Exact => Averaging::Exact { budget: cfg.budget },
        SimMode::MonteCarlo => Averaging::MonteCarlo { trials: cfg.trials, seed: cfg.seed },
    };
    for &n in &cfg.blocklengths {
        let ens = Ensemble::new(n, cfg.sim_rate, cfg.model.px())?;
        for dec in &decoders {
            let (est, report) = if cfg.dominance {
                let rep = dominance_check(&ens, &cfg.model, dec, averaging)?;
                (rep.candidate.clone(), Some(rep))
            } else {
                let est = match averaging {
                    Averaging::Exact { budget } => ens.exact(&cfg.model, dec, budget)?,
                    Averaging::MonteCarlo { trials, seed } => ens.monte_carlo(&cfg.model, dec, trials, seed)?,
                };
                (est, None)
            };
            info!("simulate: n = {n}, {dec:?}: P_e = {}", est.p_e);
            let mut row: Vec<Cell> = vec![
                n.into(),
                est.m.into(),
                est.rate.into(),
                dec.kind().into(),
                dec.params().into(),
                if est.mode == Mode::Exact { "exact" } else { "mc" }.into(),
                est.p_e.into(),
                est.list_size.into(),
                est.stderr_pe.into(),
                est.stderr_list.into(),
                est.tie_rate.into(),
                cfg.seed.into(),
            ];
            if let Some(rep) = report {
                let none = || Cell::Text("none".into());
                row.push(rep.dominated.to_string().into());
                row.push(rep.threshold.map_or_else(none, Cell::Num));
                row.push(rep.tie_inclusion.into());
                row.push(rep.forney.map_or_else(none, |f| Cell::Num(f.0)));
                row.push(rep.forney.map_or_else(none, |f| Cell::Num(f.1)));
            }
            table.push(row);
        }
    }
    to_bits(&mut table, cfg, &["rate"]);
    Ok(table)
}

/// Exponents of fixed decoders over a grid of rates and offsets `T`.
/// `optimal` and `lambda2` take `T` directly; `lambda1` and `psi` use the
/// optimal thresholds for the target error exponent.
pub fn sweep_table(settings: &Settings, cfg: &Config) -> Result<Table> {
    let ts = cfg.t_grid.clone().unwrap_or_else(|| vec![cfg.t]);
    let points: Vec<(f64, f64)> = ts.iter().flat_map(|&t| cfg.rates.iter().map(move |&r| (t, r))).collect();
    let mut table = Table::new(&["T", "rate", "class", "target_ee", "e_e", "e_l"]);
    header(&mut table, "sweep", settings, cfg);
    let rows = sweep(&points, |&(t, r)| -> exlab::Result<Vec<Vec<Cell>>> {
        let mut out = Vec::new();
        let mut matched: Option<f64> = None;
        let mut target = || -> exlab::Result<f64> {
            if let Target::Fixed(e) = cfg.target {
                return Ok(e);
            }
            if matched.is_none() {
                matched = Some(optimal_exponents(&cfg.model, r, t, &cfg.opts)?.0.value.0);
            }
            Ok(matched.unwrap_or(f64::INFINITY))
        };
        for &c in &cfg.classes {
            let (spec, e) = match c {
                ClassChoice::Optimal => (ThresholdSpec::Optimal { t }, f64::NAN),
                ClassChoice::Family(Class::Lambda2) => (ThresholdSpec::ScaledMl { t }, f64::NAN),
                ClassChoice::Family(Class::Lambda1) => {
                    let e = target()?;
                    (OptimalThreshold::g_star(&cfg.model, e, &cfg.opts).spec(), e)
                }
                ClassChoice::Family(Class::Psi) => {
                    let e = target()?;
                    (OptimalThreshold::h_star(&cfg.model, r, e, &cfg.opts)?.spec(), e)
                }
            };
            let (ee, el) = exponents_for(&cfg.model, r, &spec, &cfg.opts)?;
            let target = if e.is_nan() { Cell::Text("none".into()) } else { Cell::Num(e) };
            out.push(vec![t.into(), r.into(), c.name().into(), target, ee.value.0.into(), el.value.0.into()]);
        }
        Ok(out)
    })?;
    for group in rows {
        for row in group? {
            table.push(row);
        }
    }
    to_bits(&mut table, cfg, &["T", "rate", "target_ee", "e_e", "e_l"]);
    Ok(table)
}
