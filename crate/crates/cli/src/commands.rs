use std::path::{Path, PathBuf};

use anyhow::Result;
use compass_core::metrology::{self, TlsProtocol};
use compass_core::phase_space::{self, PhaseSpaceGrid};
use compass_core::preparation::{self, DrivenRabiParams, TwoPhotonRabiParams};
use compass_core::states::{self, FidelityRow, FIDELITY_COLUMNS};
use compass_core::{Cell, StateSpec, Table, TruncationPolicy, C64};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::output;
use crate::UsageError;

/// Header object: the command, its resolved flags, and command-specific extras.
pub struct Run<'a> {
    pub command: &'a Command,
    pub global: &'a GlobalArgs,
    pub out: Option<PathBuf>,
}

impl Run<'_> {
    fn policy(&self) -> Result<TruncationPolicy> {
        Ok(self.global.policy()?)
    }

    fn header(&self, extra: Value) -> Value {
        let mut config = Map::new();
        for src in [serde_json::to_value(self.global).expect("globals serialize"), self.command.echo()] {
            if let Value::Object(m) = src {
                config.extend(m.into_iter().filter(|(_, v)| !v.is_null() && *v != Value::Bool(false)));
            }
        }
        let mut top = Map::new();
        top.insert("command".into(), self.command.name().into());
        top.insert("config".into(), Value::Object(config));
        if let Value::Object(m) = extra {
            top.extend(m);
        }
        Value::Object(top)
    }

    fn write(&self, mut table: Table, extra: Value) -> Result<()> {
        table.meta = self.header(extra);
        output::emit(self.out.as_deref(), &output::render(&table, self.global.format)?)
    }
}

pub fn dispatch(run: &Run) -> Result<()> {
    match run.command {
        Command::State(c) => state(run, c),
        Command::FidelityTable(c) => fidelity_table(run, c),
        Command::Wigner(c) => wigner(run, c),
        Command::Overlap(c) => overlap(run, c),
        Command::Sensitivity(c) => sensitivity(run, c),
        Command::Ratio(c) => ratio(run, c),
        Command::Damping(c) => damping(run, c),
        Command::Prepare(c) => prepare(run, c),
    }
}

fn state(run: &Run, c: &StateCmd) -> Result<()> {
    let spec = c.state.spec()?;
    let policy = run.policy()?;
    let psi = states::build_state(&spec, &policy)?;
    let dist = states::number_distribution(&psi);
    let (mean, var) = psi.number_moments();
    let last = dist.probs.iter().rposition(|&p| p > 1e-16).unwrap_or(0);
    let mut table = Table::new(&["m", "prob"]);
    for (m, &p) in dist.probs[..=last].iter().enumerate() {
        table.push(vec![m.into(), p.into()]);
    }
    let extra = json!({
        "spec": spec,
        "dim": psi.dim(),
        "tail_mass": psi.tail_mass(policy.guard),
        "support_step": dist.support_step,
        "mean_n": mean,
        "var_n": var,
    });
    run.write(table, extra)
}

fn fidelity_table(run: &Run, c: &FidelityCmd) -> Result<()> {
    let policy = run.policy()?;
    let rows = match c.state.family() {
        None => states::published_fidelity_rows(),
        Some(_) => {
            let psi = c.state.spec()?;
            let beta = C64::new(c.state.beta.ok_or_else(|| UsageError("a custom row needs --beta".into()))?, c.state.beta_im.unwrap_or(0.0));
            vec![FidelityRow { psi, beta, l: c.state.l.unwrap_or(0), sign: c.state.sign.unwrap_or(compass_core::Sign::Plus), published: None, flag: None }]
        }
    };
    let mut table = states::fidelity_table(&rows, &policy)?;
    if c.self_check {
        let psi = states::build_state(&rows[0].psi, &policy)?;
        let f = psi.inner(&psi).norm_sqr();
        let mut row: Vec<Cell> = table.rows[0].clone();
        let set = |row: &mut Vec<Cell>, name: &str, v: Cell| row[FIDELITY_COLUMNS.iter().position(|c| *c == name).unwrap()] = v;
        for name in ["beta_re", "beta_im", "l", "sign", "published"] {
            set(&mut row, name, Cell::Text(String::new()));
        }
        set(&mut row, "fidelity", f.into());
        set(&mut row, "fidelity_numeric", f.into());
        set(&mut row, "flag", "self".into());
        table.push(row);
    }
    run.write(table, json!({}))
}

fn wigner(run: &Run, c: &WignerCmd) -> Result<()> {
    let spec = c.state.spec()?;
    let policy = run.policy()?;
    let grid = c.grid.grid();
    let psi = states::build_state(&spec, &policy)?;
    let field = phase_space::wigner(&psi, &grid)?;
    let mut meta = field.metadata();
    meta["spec"] = json!(spec);
    let header = run.header(meta.clone());
    let mut buf = Vec::new();
    match run.global.format {
        Format::Csv => {
            use std::io::Write;
            writeln!(buf, "# {header}")?;
            field.write_csv(&mut buf)?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &json!({ "meta": header, "values": field.values }))?;
            buf.push(b'\n');
        }
    }
    output::emit(run.out.as_deref(), &buf)?;
    if let (Some(out), Format::Csv) = (&run.out, run.global.format) {
        let mut side = serde_json::to_vec_pretty(&header)?;
        side.push(b'\n');
        output::write_atomic(&sidecar(out), &side)?;
    }
    Ok(())
}

pub fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn overlap(run: &Run, c: &OverlapCmd) -> Result<()> {
    let spec = c.state.spec()?;
    let policy = run.policy()?;
    if c.delta_steps < 2 || !(c.delta_max > 0.0) {
        return Err(UsageError("overlap needs --delta-steps ≥ 2 and --delta-max > 0".into()).into());
    }
    let psi = states::build_state(&spec, &policy)?;
    let dir = C64::from_polar(1.0, c.theta);
    let grid: PhaseSpaceGrid = c.grid.grid();
    let mut cols = vec!["delta", "direct"];
    if c.via_wigner {
        cols.push("via_wigner");
    }
    let mut table = Table::new(&cols);
    for k in 0..c.delta_steps {
        let d = c.delta_max * k as f64 / (c.delta_steps - 1) as f64;
        let mut row: Vec<Cell> = vec![d.into(), phase_space::displaced_overlap(&psi, dir * d, &policy)?.into()];
        if c.via_wigner {
            row.push(phase_space::overlap_via_wigner(&psi, dir * d, &grid)?.into());
        }
        table.push(row);
    }
    let window = phase_space::monotone_window(&psi, c.theta, &policy)?;
    run.write(table, json!({ "spec": spec, "monotone_window": window }))
}

fn sensitivity(run: &Run, c: &SensitivityCmd) -> Result<()> {
    let spec = c.state.spec()?;
    let policy = run.policy()?;
    if c.monte_carlo {
        let psi = states::build_state(&spec, &policy)?;
        let protocol = TlsProtocol::new(psi, c.theta, &policy)?;
        let seeds: Vec<u64> = (0..c.seeds).map(|k| run.global.seed.wrapping_add(k)).collect();
        let runs = protocol.monte_carlo(c.delta, c.repetitions, &seeds)?;
        let mut table = Table::new(&["seed", "m", "p_e", "s_hat"]);
        for e in &runs {
            table.push(vec![Cell::Int(e.seed as i64), Cell::Int(e.m as i64), e.p_e.into(), e.s_hat.into()]);
        }
        let s: Vec<f64> = runs.iter().map(|e| e.s_hat).collect();
        let (mean, var) = metrology::mean_and_variance(&s);
        let predicted = protocol.delta_method_variance(c.delta, c.repetitions)?;
        let extra = json!({
            "spec": spec,
            "window": protocol.window(),
            "mean_s_hat": mean,
            "var_s_hat": var,
            "delta_method_variance": predicted,
            "variance_ratio": var / predicted,
        });
        return run.write(table, extra);
    }
    let specs = if c.sweep.is_set() {
        c.sweep.values(1.0, 3.0, 41)?.into_iter().map(|b| c.state.with_beta(&spec, b)).collect::<Result<Vec<StateSpec>, _>>()?
    } else {
        vec![spec]
    };
    let reports = metrology::sensitivity_sweep(&specs, c.theta, c.repetitions, &policy)?;
    let mut table = Table::new(&["beta", "theta", "c", "variance", "mean_n", "var_n"]);
    for (s, r) in specs.iter().zip(&reports) {
        let beta = match s {
            StateSpec::Compass { beta, .. } | StateSpec::Cat { beta, .. } => Cell::Num(beta.re),
            _ => Cell::Text(String::new()),
        };
        table.push(vec![beta, r.theta.into(), r.c.into(), r.variance.into(), r.mean_n.into(), r.var_n.into()]);
    }
    let extra = if reports.len() > 2 {
        let cs: Vec<f64> = reports.iter().map(|r| r.c).collect();
        let ns: Vec<f64> = reports.iter().map(|r| r.mean_n).collect();
        json!({ "spearman_c_mean_n": metrology::spearman(&cs, &ns)? })
    } else {
        json!({})
    };
    run.write(table, extra)
}

fn ratio(run: &Run, c: &RatioCmd) -> Result<()> {
    let spec = c.state.spec()?;
    let policy = run.policy()?;
    let betas = c.sweep.values(0.5, 2.0, 61)?;
    let l = c.state.l.unwrap_or(0);
    let sign = c.state.sign.unwrap_or(compass_core::Sign::Plus);
    let curves = metrology::ratio_curves(&spec, l, sign, &betas, c.theta, &policy)?;
    let mut table = Table::new(&["beta", "variance_ratio", "mean_ratio", "crossing"]);
    let mut prev: Option<&metrology::RatioRow> = None;
    for row in &curves.rows {
        let crossed = |f: fn(&metrology::RatioRow) -> f64| prev.is_some_and(|p| (f(p) - 1.0) * (f(row) - 1.0) <= 0.0 && f(p) != f(row));
        let mark = match (crossed(|r| r.variance_ratio), crossed(|r| r.mean_ratio)) {
            (true, true) => "both",
            (true, false) => "variance",
            (false, true) => "mean",
            (false, false) => "",
        };
        table.push(vec![row.beta.into(), row.variance_ratio.into(), row.mean_ratio.into(), mark.into()]);
        prev = Some(row);
    }
    let extra = json!({
        "spec": spec,
        "variance_crossings": curves.variance_crossings,
        "mean_crossings": curves.mean_crossings,
    });
    run.write(table, extra)
}

fn damping(run: &Run, c: &DampingCmd) -> Result<()> {
    let policy = run.policy()?;
    if c.fig6 {
        let betas = c.sweep.values(0.05, 3.0, 60)?;
        return run.write(metrology::fig6_curves(&betas, &policy)?, json!({}));
    }
    let spec = c.state.spec()?;
    let e = metrology::damping_error(&spec, c.kappa, c.t, &policy)?;
    let mut table = Table::new(&["kappa", "t", "eta", "delta_kappa", "mean_n", "var_n"]);
    table.push(vec![e.kappa.into(), e.t.into(), e.eta.into(), e.delta_kappa.into(), e.mean_n.into(), e.var_n.into()]);
    run.write(table, json!({ "spec": spec }))
}

fn prepare(run: &Run, c: &PrepareCmd) -> Result<()> {
    let policy = run.policy()?;
    match c.hamiltonian().ok_or_else(|| UsageError("prepare needs h1 or h2".into()))? {
        Hamiltonian::H1 => {
            let p = DrivenRabiParams { omega_o: c.omega_o, omega_a: c.omega_a, omega_t: c.omega_t, g: c.g, drive: c.drive };
            let report = preparation::h1_diagonalization_check(&p, c.dim.unwrap_or(80), c.block, c.levels, &policy)?;
            let mut table = Table::new(&["k", "energy", "eigen_fidelity"]);
            for (k, f) in report.eigen_fidelities.iter().enumerate() {
                table.push(vec![k.into(), report.transform.energy(k).into(), (*f).into()]);
            }
            let extra = json!({
                "transform": report.transform,
                "residual": report.residual,
                "energy_error": report.energy_error,
            });
            run.write(table, extra)
        }
        Hamiltonian::H2 => {
            let p = TwoPhotonRabiParams { g1: c.g1, g2: c.g2, omega: c.omega };
            let times: Vec<f64> = if c.scan_t {
                if !(c.t_step > 0.0 && c.t_min >= 0.0 && c.t_max >= c.t_min) {
                    return Err(UsageError("bad t scan range".into()).into());
                }
                let count = ((c.t_max - c.t_min) / c.t_step + 1e-9).floor() as usize + 1;
                (0..count).map(|k| c.t_min + c.t_step * k as f64).collect()
            } else {
                vec![c.t]
            };
            let r_max = c.optimize_r.then_some(c.r_max);
            let rows = preparation::scan_h2(&p, c.n, &times, c.dim.unwrap_or(90), r_max, &policy)?;
            let mut table = Table::new(&["t", "prob_plus", "r_closed", "fidelity_closed", "r_best", "fidelity_best"]);
            for r in &rows {
                let opt = |v: f64| if v.is_nan() { Cell::Text(String::new()) } else { Cell::Num(v) };
                table.push(vec![r.t.into(), r.prob_plus.into(), r.r_closed.into(), r.fidelity_closed.into(), opt(r.r_best), opt(r.fidelity_best)]);
            }
            let best = rows.iter().max_by(|a, b| a.fidelity_closed.total_cmp(&b.fidelity_closed)).expect("at least one time");
            let mut extra = json!({ "best_closed": { "t": best.t, "r": best.r_closed, "fidelity": best.fidelity_closed } });
            if c.optimize_r {
                let b = rows.iter().max_by(|a, b| a.fidelity_best.total_cmp(&b.fidelity_best)).expect("at least one time");
                extra["best_optimized"] = json!({ "t": b.t, "r": b.r_best, "fidelity": b.fidelity_best });
            }
            run.write(table, extra)
        }
    }
}
