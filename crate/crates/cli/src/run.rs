use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use spinlink::dissipation::{
    effective_collapse_operators, effective_open_hamiltonian, evolve_master_equation, full_sector_collapse_operators,
    DensityMatrix, Liouvillian,
};
use spinlink::fullmodel::{self, compare_effective_vs_full, scaling_exponent, DeviationReport};
use spinlink::network::{
    effective_couplings, single_excitation_hamiltonian, topology_to_couplings, CouplingMatrix, PhysicalParams,
    TopologySpec, DEFAULT_DETUNING_TOLERANCE,
};
use spinlink::numerics::{herm_eig, SpectralDecomposition};
use spinlink::spectra::{cluster_spectrum, engineered_spectrum, EngineeredClosedForm};
use spinlink::transfer::{self, oscillation_metrics, transfer_trace, TransferTrace};

use crate::config::{Mode, Run, ScenarioConfig, System};
use crate::output::{Cell, Table};

/// Results of a scenario: a summary for standard output, tables for CSV and
/// a document for JSON output.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Value,
    pub tables: Vec<Table>,
    pub document: Value,
}

/// Dimensionless network of a run: couplings in units of `x`.
struct Network {
    couplings: CouplingMatrix,
    decomp: SpectralDecomposition,
    /// Reference coupling in the config's units (rad/s for physical input).
    x: f64,
    notes: Value,
}

fn build_network(run: &Run) -> Result<Network> {
    match &run.system {
        System::Topology(spec) => {
            let couplings = topology_to_couplings(spec, run.n)?;
            let decomp = herm_eig(&single_excitation_hamiltonian(&couplings))?;
            Ok(Network { couplings, decomp, x: spec.reference_coupling(), notes: Value::Null })
        }
        System::Physical(params) => {
            let eff = effective_couplings(params, DEFAULT_DETUNING_TOLERANCE)?;
            let (couplings, x) = eff.couplings.normalized();
            if x == 0.0 {
                bail!("no qubit pair is coupled: all detunings differ");
            }
            let decomp = herm_eig(&single_excitation_hamiltonian(&couplings))?;
            let uncoupled: Vec<Value> = eff.uncoupled.iter().map(|p| json!([p.i + 1, p.j + 1])).collect();
            let notes = json!({
                "dispersive_ratio": eff.dispersive_ratio,
                "dispersive_warning": eff.dispersive_warning,
                "uncoupled_pairs": uncoupled,
            });
            Ok(Network { couplings, decomp, x, notes })
        }
    }
}

fn run_header(run: &Run) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("N".into(), json!(run.n));
    m.insert("f".into(), json!(run.f));
    m
}

fn parallel<T: Send>(runs: &[Run], jobs: Option<usize>, f: impl Fn(&Run) -> Result<T> + Sync) -> Result<Vec<T>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().context("starting worker pool")?;
    pool.install(|| runs.par_iter().map(|r| f(r).with_context(|| format!("run {}", r.label()))).collect())
}

pub fn run_scenario(config: &ScenarioConfig, jobs: Option<usize>) -> Result<Report> {
    match config.mode {
        Mode::Spectrum => spectrum(config, jobs),
        Mode::Transfer => transfer_mode(config, jobs, true),
        Mode::Sweep => transfer_mode(config, jobs, false),
        Mode::Validate => validate(config, jobs),
        Mode::Dissipative => dissipative(config, jobs),
    }
}

fn analytic_spectrum(run: &Run) -> Result<Option<SpectralDecomposition>> {
    Ok(match &run.system {
        System::Topology(TopologySpec::Cluster { x }) => Some(cluster_spectrum(run.n, *x)?),
        System::Topology(TopologySpec::Engineered { x, f }) => Some(engineered_spectrum(run.n, *x, *f)?),
        _ => None,
    })
}

fn spectrum(config: &ScenarioConfig, jobs: Option<usize>) -> Result<Report> {
    let results = parallel(&config.runs, jobs, |run| {
        let net = build_network(run)?;
        // eigenvalues in the units of the input couplings
        let numeric: Vec<f64> = net.decomp.eigenvalues().iter().map(|e| e * net.x).collect();
        let analytic = analytic_spectrum(run)?.map(|d| d.eigenvalues().to_vec());
        let max_diff = analytic
            .as_ref()
            .map(|a| a.iter().zip(&numeric).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
        Ok((run.clone(), numeric, analytic, max_diff, net.decomp.residual() * net.x, net.notes))
    })?;
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for (run, numeric, analytic, max_diff, residual, notes) in results {
        for (k, e) in numeric.iter().enumerate() {
            let a = analytic.as_ref().map(|a| a[k]);
            rows.push(vec![run.n.into(), run.f.into(), (k + 1).into(), (*e).into(), a.into()]);
        }
        let mut m = run_header(&run);
        m.insert("numeric".into(), json!(numeric));
        m.insert("analytic".into(), json!(analytic));
        m.insert("max_abs_diff".into(), json!(max_diff));
        m.insert("residual".into(), json!(residual));
        if !notes.is_null() {
            m.insert("physical".into(), notes);
        }
        docs.push(Value::Object(m));
    }
    let table = Table { label: String::new(), columns: vec!["N", "f", "k", "numeric", "analytic"], rows };
    Ok(Report { summary: json!({ "runs": docs }), tables: vec![table], document: json!({ "runs": docs }) })
}

fn receiver_of(config: &ScenarioConfig, run: &Run) -> usize {
    config.receiver.unwrap_or(run.n)
}

/// Fast period for the metrics window: closed form for engineered
/// end-to-end transfer, otherwise the spread of contributing eigenvalues.
fn fast_period(run: &Run, net: &Network, receiver: usize) -> Result<Option<f64>> {
    if let (System::Topology(TopologySpec::Engineered { f, .. }), true) = (&run.system, receiver == run.n) {
        if run.n >= 3 {
            return Ok(Some(EngineeredClosedForm::new(run.n, 1.0, *f)?.fast_period()));
        }
    }
    Ok(transfer::fast_period(&net.decomp, 1, receiver)?)
}

fn trace_summary(run: &Run, net: &Network, receiver: usize, trace: &TransferTrace) -> Result<Value> {
    let (tau_peak, peak) = trace.peak_f01().ok_or_else(|| anyhow!("empty trace"))?;
    let (tau_fbar, peak_fbar) = trace.peak_fbar().ok_or_else(|| anyhow!("empty trace"))?;
    let mut m = run_header(run);
    m.insert("receiver".into(), json!(receiver));
    m.insert("reference_coupling".into(), json!(net.x));
    m.insert("peak_F01".into(), json!(peak));
    m.insert("tau_at_peak".into(), json!(tau_peak));
    m.insert("peak_Fbar".into(), json!(peak_fbar));
    m.insert("tau_at_peak_Fbar".into(), json!(tau_fbar));
    match fast_period(run, net, receiver)? {
        Some(period) => match oscillation_metrics(trace, period) {
            Ok(o) => {
                m.insert("F_m".into(), json!(o.f_m));
                m.insert("A".into(), json!(o.amplitude));
                m.insert("envelope_peak_tau".into(), json!(o.envelope_peak));
                m.insert("fast_period".into(), json!(period));
            }
            Err(e) => {
                m.insert("F_m".into(), Value::Null);
                m.insert("A".into(), Value::Null);
                m.insert("oscillation_note".into(), json!(e.to_string()));
            }
        },
        None => {
            m.insert("F_m".into(), Value::Null);
            m.insert("A".into(), Value::Null);
            m.insert("oscillation_note".into(), json!("fewer than two contributing eigenvalues"));
        }
    }
    m.insert("classical_crossings".into(), json!(trace.classical_crossings()));
    if !net.notes.is_null() {
        m.insert("physical".into(), net.notes.clone());
    }
    Ok(Value::Object(m))
}

fn transfer_mode(config: &ScenarioConfig, jobs: Option<usize>, with_traces: bool) -> Result<Report> {
    let grid = config.tau_grid();
    let results = parallel(&config.runs, jobs, |run| {
        let net = build_network(run)?;
        let receiver = receiver_of(config, run);
        let trace = transfer_trace(&net.decomp, 1, receiver, &grid, config.fidelity_mode)?;
        let summary = trace_summary(run, &net, receiver, &trace)?;
        Ok((run.clone(), trace, summary))
    })?;
    let mode = json!(config.fidelity_mode);
    if with_traces {
        let mut tables = Vec::new();
        let mut docs = Vec::new();
        for (run, trace, summary) in &results {
            let rows: Vec<Vec<Cell>> = trace
                .points
                .iter()
                .map(|p| {
                    vec![p.tau.into(), p.amplitude.re.into(), p.amplitude.im.into(), p.f01.into(), p.fbar_raw.into(), p.fbar_phase_optimized.into()]
                })
                .collect();
            let label = if results.len() > 1 { run.label() } else { String::new() };
            tables.push(Table { label, columns: vec!["tau", "re_a", "im_a", "F01", "Fbar_raw", "Fbar_phase_opt"], rows });
            let points: Vec<Value> = trace
                .points
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    json!({
                        "tau": p.tau, "re_a": p.amplitude.re, "im_a": p.amplitude.im, "F01": p.f01,
                        "Fbar_raw": p.fbar_raw, "Fbar_phase_opt": p.fbar_phase_optimized,
                        "above_classical": trace.above_classical(k),
                    })
                })
                .collect();
            docs.push(json!({ "summary": summary, "trace": points }));
        }
        let summaries: Vec<Value> = results.iter().map(|r| r.2.clone()).collect();
        Ok(Report {
            summary: json!({ "fidelity_mode": mode, "runs": summaries }),
            tables,
            document: json!({ "fidelity_mode": mode, "runs": docs }),
        })
    } else {
        let summaries: Vec<Value> = results.iter().map(|r| r.2.clone()).collect();
        let rows = summaries
            .iter()
            .map(|s| {
                let num = |k: &str| -> Cell { s[k].as_f64().into() };
                vec![
                    s["N"].as_u64().map_or(Cell::Missing, |v| Cell::Int(v as usize)),
                    num("f"),
                    s["receiver"].as_u64().map_or(Cell::Missing, |v| Cell::Int(v as usize)),
                    num("peak_F01"),
                    num("tau_at_peak"),
                    num("F_m"),
                    num("A"),
                    num("envelope_peak_tau"),
                    num("peak_Fbar"),
                ]
            })
            .collect();
        let table = Table {
            label: String::new(),
            columns: vec!["N", "f", "receiver", "peak_F01", "tau_at_peak", "F_m", "A", "envelope_peak_tau", "peak_Fbar"],
            rows,
        };
        Ok(Report {
            summary: json!({ "fidelity_mode": mode, "runs": summaries }),
            tables: vec![table],
            document: json!({ "fidelity_mode": mode, "runs": summaries }),
        })
    }
}

fn physical_for_ratio(run: &Run, ratio: f64) -> Result<PhysicalParams> {
    match &run.system {
        System::Topology(spec) => {
            let weights = spec
                .rabi_weights(run.n)
                .ok_or_else(|| anyhow!("custom couplings have no Rabi-frequency realization; use `physical`"))?;
            Ok(PhysicalParams::dispersive_realization(&weights, ratio, spec.reference_coupling())?)
        }
        System::Physical(p) => Ok(p.clone()),
    }
}

fn validate(config: &ScenarioConfig, jobs: Option<usize>) -> Result<Report> {
    let grid = config.tau_grid();
    let results = parallel(&config.runs, jobs, |run| {
        let receiver = receiver_of(config, run);
        let ratios: Vec<Option<f64>> = match run.system {
            System::Physical(_) => vec![None],
            System::Topology(_) => config.omega_over_delta.iter().map(|r| Some(*r)).collect(),
        };
        let reports = ratios
            .iter()
            .map(|r| {
                let params = physical_for_ratio(run, r.unwrap_or(0.0))?;
                Ok(compare_effective_vs_full(&params, &grid, receiver, config.lamb_compensation)?)
            })
            .collect::<Result<Vec<DeviationReport>>>()?;
        let exponent = if reports.len() >= 2 { Some(scaling_exponent(&reports[0], &reports[1])?) } else { None };
        Ok((run.clone(), reports, exponent))
    })?;

    let mut tables = Vec::new();
    let mut docs = Vec::new();
    let mut summaries = Vec::new();
    let multi = results.iter().map(|r| r.1.len()).sum::<usize>() > 1;
    for (run, reports, exponent) in &results {
        let mut report_docs = Vec::new();
        let mut report_summaries = Vec::new();
        for r in reports {
            let rows = r
                .points
                .iter()
                .map(|p| vec![p.tau.into(), p.f01_full.into(), p.f01_eff.into(), p.abs_dev.into()])
                .collect();
            let label = if multi { format!("{}_r{}", run.label(), r.dispersive_ratio) } else { String::new() };
            tables.push(Table { label, columns: vec!["tau", "F01_full", "F01_eff", "abs_dev"], rows });
            let head = json!({
                "omega_over_delta": r.dispersive_ratio,
                "dispersive_warning": r.dispersive_warning,
                "max_dev": r.max_dev,
                "max_photon_population": r.max_photon_population,
                "photon_bound": r.photon_bound,
                "photon_bound_ok": r.photon_bound_ok,
                "norm_error": r.norm_error,
            });
            let points: Vec<Value> = r
                .points
                .iter()
                .map(|p| json!({ "tau": p.tau, "F01_full": p.f01_full, "F01_eff": p.f01_eff, "abs_dev": p.abs_dev }))
                .collect();
            report_summaries.push(head.clone());
            let mut full = head;
            full["points"] = json!(points);
            report_docs.push(full);
        }
        let max_dev = reports.iter().map(|r| r.max_dev).fold(0.0, f64::max);
        let mut base = run_header(run);
        base.insert("receiver".into(), json!(receiver_of(config, run)));
        base.insert("lamb_compensation".into(), json!(config.lamb_compensation));
        base.insert("max_dev".into(), json!(max_dev));
        base.insert("scaling_exponent".into(), json!(exponent));
        let mut s = base.clone();
        s.insert("reports".into(), json!(report_summaries));
        summaries.push(Value::Object(s));
        base.insert("reports".into(), json!(report_docs));
        docs.push(Value::Object(base));
    }
    Ok(Report { summary: json!({ "runs": summaries }), tables, document: json!({ "runs": docs }) })
}

/// Default RK4 step: a hundredth of the fastest scale.
fn default_step(liou: &Liouvillian) -> f64 {
    0.01 / liou.rate_scale().max(1e-12)
}

fn dissipative(config: &ScenarioConfig, jobs: Option<usize>) -> Result<Report> {
    let grid = config.tau_grid();
    let results = parallel(&config.runs, jobs, |run| {
        let receiver = receiver_of(config, run);
        // (Hamiltonian, collapse operators, initial state, time per unit tau)
        let (h, ops, rho0, time_unit) = match &run.system {
            System::Topology(_) => {
                let net = build_network(run)?;
                let h = effective_open_hamiltonian(&net.couplings);
                let ops = effective_collapse_operators(run.n, &config.dimensionless_rates())?;
                (h, ops, DensityMatrix::basis(run.n + 1, 1)?, 1.0)
            }
            System::Physical(params) => {
                // full qubit-cavity sector in the parameters' own units
                let h = fullmodel::build_dispersive_sector1(params, config.lamb_compensation)?.h;
                let ops = full_sector_collapse_operators(run.n, &config.rates)?;
                let rho0 = DensityMatrix::pure(&fullmodel::dressed_initial_state(params))?;
                (h, ops, rho0, 1.0 / fullmodel::reference_coupling(params)?)
            }
        };
        let times: Vec<f64> = grid.iter().map(|t| t * time_unit).collect();
        let liou = Liouvillian::new(&h, &ops)?;
        let step = config.step.map_or_else(|| default_step(&liou), |s| s * time_unit);
        let trace = evolve_master_equation(&rho0, &h, &ops, &times, step)?;
        Ok((run.clone(), receiver, trace, step / time_unit))
    })?;

    let mut tables = Vec::new();
    let mut docs = Vec::new();
    let mut summaries = Vec::new();
    for (run, receiver, trace, step) in &results {
        let rows: Vec<Vec<Cell>> = trace
            .snapshots
            .iter()
            .zip(&grid)
            .map(|(s, tau)| vec![(*tau).into(), s.rho.population(*receiver).into(), s.trace.into(), s.purity.into(), s.min_eig.into()])
            .collect();
        let f01: Vec<f64> = trace.populations(*receiver);
        let (k, peak) = f01.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
        let mut m = run_header(run);
        m.insert("receiver".into(), json!(receiver));
        m.insert("peak_F01".into(), json!(peak));
        m.insert("tau_at_peak".into(), json!(grid[k]));
        m.insert("final_F01".into(), json!(f01.last()));
        m.insert(
            "max_trace_error".into(),
            json!(trace.snapshots.iter().map(|s| (s.trace - 1.0).abs()).fold(0.0, f64::max)),
        );
        m.insert("min_eigenvalue".into(), json!(trace.snapshots.iter().map(|s| s.min_eig).fold(f64::INFINITY, f64::min)));
        m.insert("halving_distance".into(), json!(trace.halving_distance));
        m.insert("step".into(), json!(step));
        let summary = Value::Object(m);
        let label = if results.len() > 1 { run.label() } else { String::new() };
        let points: Vec<Value> = rows
            .iter()
            .map(|r| {
                let v = |c: &Cell| if let Cell::Num(x) = c { json!(x) } else { Value::Null };
                json!({ "tau": v(&r[0]), "F01": v(&r[1]), "trace": v(&r[2]), "purity": v(&r[3]), "min_eig": v(&r[4]) })
            })
            .collect();
        tables.push(Table { label, columns: vec!["tau", "F01", "trace", "purity", "min_eig"], rows });
        docs.push(json!({ "summary": summary, "trace": points }));
        summaries.push(summary);
    }
    let rates = json!(config.dimensionless_rates());
    Ok(Report {
        summary: json!({ "rates": rates, "runs": summaries }),
        tables,
        document: json!({ "rates": rates, "runs": docs }),
    })
}
