use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use ffdyn::daniflow::{
    delta_trajectory, recommended_precision, strong_bc_experiment, tail_distribution, unipotent_lattice, BcSummary,
    FlowSpec, HaarSampler, TailTable,
};
use ffdyn::dioph::{kg_monte_carlo, mult_correspondence_check, psi_label, KgConfig};
use ffdyn::ffield::{FieldSpec, LaurentSeries};
use ffdyn::lattice::{parse_matrix, render_matrix};
use ffdyn::rng::stream;
use ffdyn::spectral::{decay_check, diagonal, xi_csv, xi_diagonal_table, xi_monte_carlo};
use ffdyn::treegeo::{ladder_experiment, loglaw_experiment, quotient_ray, rank2_delta_tail, Ladder, Rounding};
use ffdyn::weylvol::{cusp_tail, cusp_tail_csv, RootSystemSpec};

use crate::config::{Experiment, ExperimentConfig, Format, LadderKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Search cap for the Diophantine enumerations.
const SEARCH_CAP: u64 = 1 << 24;
/// Expected hit mass below which strong-bc reports counts instead of ratios.
const MASS_FLOOR: f64 = 5.0;

/// A module failure, with a command line that reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub module: &'static str,
    pub message: String,
    pub repro: String,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}\n  reproduce with: {}", self.module, self.message, self.repro)
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub summary: Value,
    /// Every place where the run fell short of the requested parameters.
    pub degradations: Vec<String>,
    pub pass: bool,
    /// Kept out of the serialized report so artifacts stay byte-stable.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

/// The report plus the artifact files, as `(file name, contents)`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub artifacts: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.artifacts {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Command line that reruns `cfg`.
pub fn repro_command(cfg: &ExperimentConfig) -> String {
    let mut cmd = format!("ffdyn {} --seed {} p={} e={}", cfg.experiment, cfg.seed, cfg.p, cfg.e);
    cmd.push_str(match cfg.format {
        Format::Csv => " --format csv",
        Format::Json => " --format json",
    });
    for (k, v) in &cfg.params {
        match v {
            Value::String(s) => cmd.push_str(&format!(" {k}={s}")),
            other => cmd.push_str(&format!(" {k}={other}")),
        }
    }
    cmd
}

struct Body {
    summary: Value,
    data_csv: String,
    data_json: Value,
    degradations: Vec<String>,
    pass: bool,
}

/// Runs `cfg` on a pool of `threads` workers (all cores when `None`).
/// Artifacts do not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutcome, RunError> {
    let err = |module: &'static str| {
        let repro = repro_command(cfg);
        move |e: String| RunError { module, message: e, repro: repro.clone() }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| err("expcli")(e.to_string()))?;
    let start = Instant::now();
    let body = pool.install(|| match cfg.experiment {
        Experiment::DeltaFlow => delta_flow(cfg).map_err(err("daniflow")),
        Experiment::KgMc => kg_mc(cfg).map_err(err("dioph")),
        Experiment::MultMc => mult_mc(cfg).map_err(err("dioph")),
        Experiment::StrongBc => strong_bc(cfg).map_err(err("daniflow")),
        Experiment::CuspVolume => cusp_volume(cfg).map_err(err("weylvol")),
        Experiment::TreeLoglaw => tree_loglaw(cfg).map_err(err("treegeo")),
        Experiment::XiDecay => xi_decay(cfg).map_err(err("spectral")),
        Experiment::Reduce => reduce(cfg).map_err(err("lattice")),
    })?;
    let report = RunReport {
        schema: "ffdyn-report v1",
        version: VERSION,
        config: cfg.clone(),
        summary: body.summary,
        degradations: body.degradations,
        pass: body.pass,
        wall_clock: start.elapsed(),
    };
    let tag = cfg.experiment.tag();
    let data = match cfg.format {
        Format::Csv => (format!("{tag}.csv"), body.data_csv),
        Format::Json => (format!("{tag}.json"), serde_json::to_string(&body.data_json).expect("json") + "\n"),
    };
    let artifacts = vec![
        (format!("{tag}-config.txt"), cfg.echo()),
        data,
        (format!("{tag}-report.json"), report.to_json()),
    ];
    Ok(RunOutcome { report, artifacts })
}

fn flow_spec(cfg: &ExperimentConfig, m: usize, n: usize) -> Result<FlowSpec, String> {
    FlowSpec::new(m, n, cfg.field()).map_err(|e| e.to_string())
}

fn delta_flow(cfg: &ExperimentConfig) -> Result<Body, String> {
    let spec = flow_spec(cfg, cfg.int("m") as usize, cfg.int("n") as usize)?;
    let horizon = cfg.int("T");
    let precision = match cfg.int("precision") {
        0 => recommended_precision(&spec, horizon),
        p => p,
    };
    let sampler = HaarSampler { spec: spec.clone(), burn_in: 0, precision };
    let trials: Vec<Vec<i64>> = (0..cfg.int("trials") as u64)
        .into_par_iter()
        .map(|i| {
            let a = sampler.sample_matrix(&mut stream(cfg.seed, "delta-flow", i));
            let pts = delta_trajectory(&a, &spec, horizon).map_err(|e| format!("trial {i}: {e}"))?;
            Ok(pts.into_iter().map(|p| p.delta).collect())
        })
        .collect::<Result<_, String>>()?;
    let mut csv = String::from("# ffdyn-delta-flow v1\ntrial,t,delta\n");
    for (i, tr) in trials.iter().enumerate() {
        for (k, d) in tr.iter().enumerate() {
            csv.push_str(&format!("{i},{},{d}\n", k + 1));
        }
    }
    let max_delta = trials.iter().flatten().copied().max().unwrap_or(0);
    let mean_delta = trials.iter().flatten().sum::<i64>() as f64 / trials.iter().map(Vec::len).sum::<usize>().max(1) as f64;
    Ok(Body {
        summary: json!({ "precision": precision, "max_delta": max_delta, "mean_delta": mean_delta }),
        data_json: json!({ "schema": "ffdyn-delta-flow v1", "trajectories": trials }),
        data_csv: csv,
        degradations: Vec::new(),
        pass: true,
    })
}

fn kg_mc(cfg: &ExperimentConfig) -> Result<Body, String> {
    let spec = flow_spec(cfg, cfg.int("m") as usize, cfg.int("n") as usize)?;
    let psi = cfg.psi.as_ref().expect("kg-mc has psi").build(spec.s());
    let kg = KgConfig {
        spec,
        trials: cfg.int("trials") as usize,
        horizon: cfg.int("horizon"),
        precision: cfg.int("precision"),
        seed: cfg.seed,
        cap: SEARCH_CAP,
    };
    let rep = kg_monte_carlo(&psi, &kg).map_err(|e| e.to_string())?;
    let (lo, hi) = (cfg.float("min_persistent"), cfg.float("max_persistent"));
    let pass = (lo..=hi).contains(&rep.persistent_fraction);
    let mut csv = String::from("# ffdyn-kg-mc v1\nd,mean_cumulative_count\n");
    for (d, c) in rep.mean_cumulative_counts.iter().enumerate() {
        csv.push_str(&format!("{d},{c}\n"));
    }
    Ok(Body {
        summary: json!({
            "psi": rep.psi,
            "persistent_fraction": rep.persistent_fraction,
            "late_increment": rep.late_increment,
            "plateau": rep.plateau,
            "accepted_range": [lo, hi],
        }),
        data_json: serde_json::to_value(&rep).expect("json"),
        data_csv: csv,
        degradations: Vec::new(),
        pass,
    })
}

fn mult_mc(cfg: &ExperimentConfig) -> Result<Body, String> {
    let r = cfg.int("rank") as usize;
    let spec = flow_spec(cfg, r - 1, 1)?;
    let psi = cfg.psi.as_ref().expect("mult-mc has psi").build(spec.s());
    let sampler = HaarSampler { spec: spec.clone(), burn_in: 0, precision: cfg.int("precision") };
    let bound = cfg.int("bound");
    let rows = (0..cfg.int("trials") as u64)
        .into_par_iter()
        .map(|i| {
            // truncated entries are exact rationals, so the lattice is exact
            let exact: Vec<Vec<LaurentSeries>> = sampler
                .sample_matrix(&mut stream(cfg.seed, "mult-mc", i))
                .iter()
                .map(|row| {
                    row.iter().map(|e| LaurentSeries::from_coeffs(e.order().unwrap_or(0), e.coeffs().to_vec(), None)).collect()
                })
                .collect();
            let lat = unipotent_lattice(&exact, &spec).map_err(|e| e.to_string())?;
            mult_correspondence_check(&lat, &psi, bound).map_err(|e| format!("trial {i}: {e}"))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut csv = String::from("# ffdyn-mult-mc v1\ntrial,scanned,flagged,verified,degenerate,counterexamples\n");
    let mut data = Vec::new();
    for (i, rep) in rows.iter().enumerate() {
        let flagged: usize = rep.flagged_by_chamber.values().sum();
        csv.push_str(&format!(
            "{i},{},{flagged},{},{},{}\n",
            rep.scanned,
            rep.verified,
            rep.degenerate,
            rep.counterexamples.len()
        ));
        data.push(json!({
            "scanned": rep.scanned,
            "flagged": flagged,
            "verified": rep.verified,
            "degenerate": rep.degenerate,
            "counterexamples": rep.counterexamples,
        }));
    }
    let counterexamples: usize = rows.iter().map(|r| r.counterexamples.len()).sum();
    Ok(Body {
        summary: json!({
            "psi": psi_label(&psi),
            "verified": rows.iter().map(|r| r.verified).sum::<usize>(),
            "degenerate": rows.iter().map(|r| r.degenerate).sum::<usize>(),
            "counterexamples": counterexamples,
        }),
        data_json: json!({ "schema": "ffdyn-mult-mc v1", "trials": data }),
        data_csv: csv,
        degradations: Vec::new(),
        pass: counterexamples == 0,
    })
}

fn strong_bc(cfg: &ExperimentConfig) -> Result<Body, String> {
    let (m, n) = (cfg.int("m") as usize, cfg.int("n") as usize);
    let spec = flow_spec(cfg, m, n)?;
    let s = spec.s();
    let horizon = cfg.int("N");
    let sampler = HaarSampler::new(spec.clone(), cfg.int("burn_in"), horizon);
    let mut degradations = Vec::new();
    let table = if m + n == 2 {
        let ray = quotient_ray(&cfg.field(), 30, 4).map_err(|e| e.to_string())?;
        TailTable::exact(s, |k| rank2_delta_tail(&ray, k), 40)
    } else {
        degradations.push(format!("no exact tail for rank {}; Φ estimated from samples", m + n));
        let short = HaarSampler { precision: 2 * (m + n) as i64 + 2, ..sampler.clone() };
        tail_distribution(&short, 20, cfg.int("table_samples") as u64, cfg.seed).map_err(|e| e.to_string())?
    };
    let kappa = table.kappa.ok_or("tail table has no fitted decay rate")?;
    let ladder = cfg.ladder.expect("strong-bc has ladder");
    let rates: Vec<i64> = (1..=horizon)
        .map(|t| {
            let x = (t as f64).ln() / (s as f64).ln() / kappa;
            match ladder {
                LadderKind::Divergent => x.floor() as i64,
                LadderKind::Convergent => (2.0 * x).ceil() as i64,
            }
        })
        .collect();
    let res = strong_bc_experiment(&sampler, &rates, &table, cfg.int("trials") as u64, cfg.seed, MASS_FLOOR)
        .map_err(|e| e.to_string())?;
    let (lo, hi) = (cfg.float("median_lo"), cfg.float("median_hi"));
    let (summary, classification, pass) = match (&res.summary, ladder) {
        (BcSummary::Ratio { median, q1, q3 }, _) => {
            let ok = (lo..=hi).contains(median);
            (json!({ "median": median, "q1": q1, "q3": q3, "accepted_range": [lo, hi] }), "divergent: ratio", ok && ladder == LadderKind::Divergent)
        }
        (BcSummary::Convergent { max_count, fraction_with_late_hits }, _) => {
            let bounded = *fraction_with_late_hits <= 0.1;
            let class = if bounded { "convergent: counts bounded" } else { "convergent: late hits persist" };
            (
                json!({ "max_count": max_count, "fraction_with_late_hits": fraction_with_late_hits }),
                class,
                bounded && ladder == LadderKind::Convergent,
            )
        }
    };
    let mut csv = String::from("# ffdyn-strong-bc v1\ntrial,N,count,expected\n");
    for (i, counts) in res.counts.iter().enumerate() {
        for ((c, e), n) in counts.iter().zip(&res.expected).zip(&res.checkpoints) {
            csv.push_str(&format!("{i},{n},{c},{e}\n"));
        }
    }
    Ok(Body {
        summary: json!({
            "classification": classification,
            "kappa": kappa,
            "expected_total": res.expected.last(),
            "stats": summary,
        }),
        data_json: json!({
            "schema": "ffdyn-strong-bc v1",
            "checkpoints": res.checkpoints,
            "expected": res.expected,
            "counts": res.counts,
            "terminal_ratios": res.terminal_ratios,
        }),
        data_csv: csv,
        degradations,
        pass,
    })
}

fn cusp_volume(cfg: &ExperimentConfig) -> Result<Body, String> {
    let spec = RootSystemSpec::new(cfg.int("rank") as usize).map_err(|e| e.to_string())?;
    let q = cfg.int("q") as u32;
    let rows = (cfg.int("t_min")..=cfg.int("t_max"))
        .map(|t| cusp_tail(t, &spec, q).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let lo = rows.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let band = hi / lo;
    let max_band = cfg.float("max_band");
    Ok(Body {
        summary: json!({ "min_ratio": lo, "max_ratio": hi, "band": band, "max_band": max_band }),
        data_json: json!({
            "schema": "ffdyn-cusp-volume v1",
            "rows": rows.iter().map(|c| json!({
                "T": c.t, "S_T": c.tail, "comparator": c.comparator, "ratio": c.ratio,
                "cutoff": c.cutoff, "remainder_bound": c.remainder_bound,
            })).collect::<Vec<_>>(),
        }),
        data_csv: cusp_tail_csv(&rows),
        degradations: Vec::new(),
        pass: band <= max_band,
    })
}

fn field_of_order(q: u32) -> Result<FieldSpec, String> {
    let p = (2..=q).find(|d| q % d == 0).ok_or("q must be at least 2")?;
    let e = (q as f64).ln() / (p as f64).ln();
    FieldSpec::new(p, e.round() as u32).map_err(|e| e.to_string())
}

fn tree_loglaw(cfg: &ExperimentConfig) -> Result<Body, String> {
    let f = field_of_order(cfg.int("q") as u32)?;
    let ray = quotient_ray(&f, 30, 4).map_err(|e| e.to_string())?;
    let trials = cfg.int("trials") as usize;
    let steps = cfg.int("T") as u64;
    let stats = loglaw_experiment(&ray, trials, steps, cfg.seed);
    let target = 1.0 / ray.l_y;
    let tol = cfg.float("tolerance");
    let ratio_ok = (stats.median_ratio - target).abs() <= tol * target;
    let ladders = [
        Ladder { factor: 1.0, rounding: Rounding::Floor },
        Ladder { factor: 1.5, rounding: Rounding::Ceil },
    ]
    .map(|l| ladder_experiment(&ray, l, trials, steps, cfg.seed));
    let ladder_json: Vec<Value> = ladders
        .iter()
        .map(|l| {
            json!({
                "factor": l.ladder.factor,
                "late_fraction": l.late_fraction,
                "observed": format!("{:?}", l.observed).to_lowercase(),
                "predicted": format!("{:?}", l.predicted).to_lowercase(),
            })
        })
        .collect();
    let pass = ratio_ok && ladders.iter().all(|l| l.agrees());
    let mut csv = String::from("# ffdyn-tree-loglaw v1\ntrial,ratio\n");
    for (i, r) in stats.ratios.iter().enumerate() {
        csv.push_str(&format!("{i},{r}\n"));
    }
    let summary = json!({
        "q": stats.q,
        "T": stats.steps,
        "lY": stats.l_y,
        "target": target,
        "median_ratio": stats.median_ratio,
        "quartiles": [stats.quartiles.0, stats.quartiles.1],
        "excursion_tail_rate": stats.excursion_tail_rate,
        "ladders": ladder_json,
    });
    let mut data = json!({ "schema": "ffdyn-tree-loglaw v1" });
    data.as_object_mut().expect("object").extend(summary.as_object().expect("object").clone());
    data["ratios"] = json!(stats.ratios);
    Ok(Body { summary, data_json: data, data_csv: csv, degradations: Vec::new(), pass })
}

fn xi_decay(cfg: &ExperimentConfig) -> Result<Body, String> {
    let f = cfg.field();
    let depth = cfg.int("depth") as usize;
    let samples = cfg.int("samples") as usize;
    let table = xi_diagonal_table(&f, 0..=cfg.int("t_max"), depth).map_err(|e| e.to_string())?;
    let rows = table
        .into_par_iter()
        .map(|(t, x)| {
            let mut rng = stream(cfg.seed, "xi-decay", t as u64);
            let (mc, se) = xi_monte_carlo(&diagonal(t), &f, samples, &mut rng).map_err(|e| format!("t = {t}: {e}"))?;
            Ok((t, x, mc, se))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut degradations = Vec::new();
    for (t, x, _, _) in &rows {
        if !x.stabilized {
            degradations.push(format!("t = {t}: not stabilized by depth {depth}"));
        }
    }
    let mc_ok = rows.iter().all(|(_, x, mc, se)| (mc - x.to_f64()).abs() <= 3.0 * se.max(1e-12));
    let fit = decay_check(&rows.iter().map(|(t, x, _, _)| (*t, x.to_f64(), x.depth)).collect::<Vec<_>>(), f.size());
    let bound_ok = fit.rows.iter().all(|r| r.residual >= -1e-12);
    let fit_json: Value = serde_json::from_str(&fit.to_json()).expect("fit json");
    Ok(Body {
        summary: json!({
            "stabilized": degradations.is_empty(),
            "monte_carlo_within_3se": mc_ok,
            "sigma": fit.sigma,
            "varsigma": fit.varsigma,
            "bound_holds": bound_ok,
        }),
        data_json: json!({
            "schema": "ffdyn-xi v1",
            "rows": rows.iter().map(|(t, x, mc, se)| json!({
                "t": t, "xi_exact": x.value.to_string(), "xi": x.to_f64(), "depth": x.depth, "xi_mc": mc, "stderr": se,
            })).collect::<Vec<_>>(),
            "fit": fit_json,
        }),
        data_csv: xi_csv(&rows),
        pass: degradations.is_empty() && mc_ok && bound_ok,
        degradations,
    })
}

fn reduce(cfg: &ExperimentConfig) -> Result<Body, String> {
    let path = cfg.string("matrix");
    let text = fs::read_to_string(path).map_err(|e| format!("reading {path}: {e}"))?;
    let f = cfg.field();
    let lat = parse_matrix(&text, &f).map_err(|e| e.to_string())?;
    let reduced = lat.reduce().map_err(|e| e.to_string())?;
    let (basis, _) = lat.reduce_in_window().map_err(|e| e.to_string())?;
    let minima = reduced.successive_minima();
    let rendered = render_matrix(&basis);
    let mut degradations = Vec::new();
    if !reduced.certified {
        degradations.push(format!("not certified; precision {:?} needed", reduced.needed_precision));
    }
    let mut csv = format!("# ffdyn-reduce v1\ndelta,{}\ncertified,{}\nminima,", reduced.delta(), reduced.certified);
    csv.push_str(&minima.iter().map(i64::to_string).collect::<Vec<_>>().join(";"));
    csv.push_str("\nbasis\n");
    csv.push_str(&rendered);
    Ok(Body {
        summary: json!({ "delta": reduced.delta(), "certified": reduced.certified, "successive_minima": minima }),
        data_json: json!({
            "schema": "ffdyn-reduce v1",
            "delta": reduced.delta(),
            "certified": reduced.certified,
            "successive_minima": minima,
            "basis": rendered.lines().collect::<Vec<_>>(),
        }),
        data_csv: csv,
        pass: reduced.certified,
        degradations,
    })
}
