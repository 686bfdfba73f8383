use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Value};
use stable_consensus::bounds::{bound_report, BoundReport};
use stable_consensus::design::{
    best_addition, best_removal, best_reweighting, crossover_scan, ArgminSegment, DesignResult, EdgeDesign,
};
use stable_consensus::fluctuation::{sigma_alpha_total, steady_state_params, NoiseSpec};
use stable_consensus::format::g9;
use stable_consensus::graph::{generators, Graph};
use stable_consensus::kernel::SpectralKernel;
use stable_consensus::simulate::{run as simulate_run, Scheme, SimConfig};

use crate::input;
use crate::{
    BoundsArgs, Cli, CliError, Command, CurveArgs, DesignCommand, EdgeDesignArgs, GraphArgs, GraphKind, PlotCommand,
    ReweightArgs, SchemeArg, SigmaArgs, SimulateArgs,
};

type Res<T> = Result<T, CliError>;

pub fn run(cli: &Cli) -> Res<()> {
    let text = match &cli.command {
        Command::Sigma(a) => sigma(a, cli.json)?,
        Command::Bounds(a) => bounds(a, cli.json)?,
        Command::Simulate(a) => simulate(a, cli.json)?,
        Command::Design(DesignCommand::Add(a)) => edge_design(a, true, cli.json)?,
        Command::Design(DesignCommand::Remove(a)) => edge_design(a, false, cli.json)?,
        Command::Design(DesignCommand::Reweight(a)) => reweight(a, cli.json)?,
        Command::Plotdata(PlotCommand::Reweight(a)) => plot_reweight(a, cli.json)?,
        Command::Plotdata(PlotCommand::AlphaCurve(a)) => alpha_curve(a, cli.json)?,
        Command::Plotdata(PlotCommand::Tightness(a)) => tightness(a, cli.json)?,
        Command::Graph(a) => graph(a)?,
    };
    emit(cli.out.as_deref(), &text)
}

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn check_tol(tol: f64) -> Res<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("--tol must lie in (0, 1), got {tol}")))
    }
}

fn kernel_of(graph: &Graph) -> Res<SpectralKernel> {
    Ok(SpectralKernel::from_graph(graph)?)
}

fn noise_for(graph: &Graph, a: &crate::NoiseArgs) -> Res<NoiseSpec> {
    let betas = input::betas(a.beta, a.beta_file.as_deref(), graph.n())?;
    Ok(NoiseSpec::new(a.alpha, betas)?)
}

fn sigma(a: &SigmaArgs, json: bool) -> Res<String> {
    check_tol(a.tol)?;
    let graph = input::read_graph(&a.graph)?;
    let noise = noise_for(&graph, &a.noise)?;
    let report = steady_state_params(&kernel_of(&graph)?, &noise, a.tol)?;
    let note = (report.alpha == 2.0 && !noise.is_symmetric())
        .then_some("alpha = 2 laws are Gaussian; beta values are reported but do not affect the law");
    if json {
        return Ok(to_json(&json!({
            "graph": label(&a.graph),
            "n": graph.n(),
            "report": report,
            "note": note,
        })));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# graph: {}", label(&a.graph));
    let _ = writeln!(s, "# n: {}", graph.n());
    let _ = writeln!(s, "# alpha: {}", g9(report.alpha));
    let _ = writeln!(s, "# method: {}", report.method);
    let _ = writeln!(s, "# tolerance: {}", g9(report.tolerance));
    let _ = writeln!(s, "# sigma_alpha_total: {}", g9(report.sigma_alpha_total));
    if let Some(note) = note {
        let _ = writeln!(s, "# note: {note}");
    }
    s.push_str(&report.to_csv());
    Ok(s)
}

fn bounds(a: &BoundsArgs, json: bool) -> Res<String> {
    check_tol(a.tol)?;
    let graph = input::read_graph(&a.graph)?;
    let kernel = kernel_of(&graph)?;
    let reports = a
        .alpha
        .values()?
        .into_iter()
        .map(|alpha| bound_report(&kernel, alpha, a.tol))
        .collect::<Result<Vec<_>, _>>()?;
    if json {
        return Ok(to_json(&json!({ "graph": label(&a.graph), "reports": reports })));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# graph: {}", label(&a.graph));
    let _ = writeln!(s, "# tolerance: {}", g9(a.tol));
    for r in reports.iter().filter(|r| !r.all_sound()) {
        let _ = writeln!(
            s,
            "# warning: a bound falls below the exact value at alpha = {}",
            g9(r.alpha)
        );
    }
    let _ = writeln!(s, "{}", BoundReport::csv_header());
    for r in &reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    Ok(s)
}

fn simulate(a: &SimulateArgs, json: bool) -> Res<String> {
    check_tol(a.tol)?;
    let graph = input::read_graph(&a.graph)?;
    let noise = noise_for(&graph, &a.noise)?;
    let kernel = kernel_of(&graph)?;
    let lambda2 = kernel.spectrum().lambda2();
    let horizon = a.horizon.unwrap_or(40.0 / lambda2);
    let scheme = match a.scheme {
        SchemeArg::Euler => Scheme::Euler,
        SchemeArg::SemiExact => Scheme::SemiExact,
    };
    let mut config = SimConfig::new(graph.clone(), noise.clone(), a.dt, horizon, a.paths, a.seed).with_scheme(scheme);
    config.record_stride = a.stride;
    let ensemble = simulate_run(&config)?;
    if let Some(path) = &a.trajectories {
        let file =
            fs::File::create(path).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        ensemble.write_csv(io::BufWriter::new(file))?;
    }
    let burn_in = a.burn_in.unwrap_or_else(|| ensemble.default_burn_in());
    let theory = steady_state_params(&kernel, &noise, a.tol)?;
    let (estimates, skipped) = match ensemble.estimate(Some(burn_in)) {
        Ok(e) => (Some(e), None),
        Err(stable_consensus::Error::InvalidParameter(msg)) => (None, Some(msg)),
        Err(e) => return Err(e.into()),
    };
    if json {
        return Ok(to_json(&json!({
            "graph": label(&a.graph),
            "config": config,
            "burn_in": burn_in,
            "estimates": estimates,
            "estimates_skipped": skipped,
            "theory": theory,
        })));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# graph: {}", label(&a.graph));
    let _ = writeln!(s, "# alpha: {}", g9(noise.alpha()));
    let _ = writeln!(s, "# dt: {}", g9(a.dt));
    let _ = writeln!(s, "# horizon: {}", g9(horizon));
    let _ = writeln!(s, "# paths: {}", a.paths);
    let _ = writeln!(s, "# seed: {}", a.seed);
    let _ = writeln!(s, "# scheme: {scheme}");
    let _ = writeln!(s, "# burn_in: {}", g9(burn_in));
    if let Some(msg) = &skipped {
        let _ = writeln!(s, "# estimates skipped: {msg}");
    }
    let _ = writeln!(s, "node,sigma_alpha_hat,beta_hat,sigma_alpha_theory,beta_theory");
    for (l, node) in theory.nodes.iter().enumerate() {
        let (sig, beta) = match &estimates {
            Some(e) => (g9(e[l].sigma_alpha), e[l].beta.map(g9).unwrap_or_default()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(s, "{},{sig},{beta},{},{}", l + 1, g9(node.sigma_alpha), g9(node.beta));
    }
    Ok(s)
}

fn design_json(r: &DesignResult) -> Value {
    json!({
        "alpha": r.alpha,
        "candidates": r.evaluated.iter().enumerate().map(|(k, e)| json!({
            "candidate": e.candidate.to_string(),
            "sigma_alpha": e.sigma_alpha,
            "is_argmin": r.argmin.contains(&k),
        })).collect::<Vec<_>>(),
        "argmin": r.argmin_set().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "skipped": r.skipped.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "refined": r.refined.map(|e| json!({ "candidate": e.candidate.to_string(), "sigma_alpha": e.sigma_alpha })),
    })
}

fn segment_json(seg: &ArgminSegment) -> Value {
    json!({
        "from": seg.from,
        "to": seg.to,
        "argmin": seg.argmin.iter().map(ToString::to_string).collect::<Vec<_>>(),
    })
}

fn join(c: &[stable_consensus::design::Candidate]) -> String {
    c.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn edge_design(a: &EdgeDesignArgs, add: bool, json: bool) -> Res<String> {
    check_tol(a.tol)?;
    let graph = input::read_graph(&a.graph)?;
    let candidates = input::candidates(&a.candidates)?;
    let alphas = a.alpha.values()?;
    let results = alphas
        .iter()
        .map(|&alpha| {
            if add {
                best_addition(&graph, candidates.as_deref(), alpha, a.tol)
            } else {
                best_removal(&graph, candidates.as_deref(), alpha, a.tol)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let segments = if a.crossovers {
        let design = if add {
            EdgeDesign::Addition(candidates)
        } else {
            EdgeDesign::Removal(candidates)
        };
        Some(crossover_scan(&graph, &design, &alphas, a.tol)?)
    } else {
        None
    };
    if json {
        return Ok(to_json(&json!({
            "graph": label(&a.graph),
            "design": if add { "add" } else { "remove" },
            "results": results.iter().map(design_json).collect::<Vec<_>>(),
            "crossovers": segments.as_ref().map(|s| s.iter().map(segment_json).collect::<Vec<_>>()),
        })));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# graph: {}", label(&a.graph));
    let _ = writeln!(s, "# design: {}", if add { "add" } else { "remove" });
    if let Some(first) = results.first() {
        if !first.skipped.is_empty() {
            let _ = writeln!(s, "# skipped (disconnects the graph): {}", join(&first.skipped));
        }
    }
    for r in &results {
        let _ = writeln!(s, "# argmin at alpha = {}: {}", g9(r.alpha), join(&r.argmin_set()));
    }
    for seg in segments.iter().flatten() {
        let _ = writeln!(
            s,
            "# alpha in [{}, {}]: {}",
            g9(seg.from),
            g9(seg.to),
            join(&seg.argmin)
        );
    }
    let _ = writeln!(s, "{}", DesignResult::csv_header());
    for r in &results {
        s.push_str(&r.csv_rows());
    }
    Ok(s)
}

fn reweight_results(a: &ReweightArgs) -> Res<Vec<DesignResult>> {
    check_tol(a.tol)?;
    let t = &a.template;
    let base = match &t.graph {
        Some(path) => input::read_graph(path)?,
        None => generators::g3(1.0)?,
    };
    let (ea, eb) = (input::parse_pair(&t.edge_a)?, input::parse_pair(&t.edge_b)?);
    for (i, j) in [ea, eb] {
        if !base.has_edge(i, j) {
            return Err(CliError::Input(format!(
                "split edge {}-{} is not in the graph",
                i + 1,
                j + 1
            )));
        }
    }
    if ea == eb || (ea.0 == eb.1 && ea.1 == eb.0) {
        return Err(CliError::Input("the two split edges must differ".into()));
    }
    let b_grid = input::parse_grid(&a.b_grid)?;
    if b_grid.iter().any(|&b| !(b > 0.0 && b < t.budget)) {
        return Err(CliError::Input(format!("b grid must lie inside (0, {})", g9(t.budget))));
    }
    let budget = t.budget;
    let template = |b: f64| base.with_weight(ea.0, ea.1, budget - b)?.with_weight(eb.0, eb.1, b);
    Ok(a.alpha
        .values()?
        .into_iter()
        .map(|alpha| best_reweighting(template, &b_grid, alpha, a.tol))
        .collect::<Result<Vec<_>, _>>()?)
}

fn reweight(a: &ReweightArgs, json: bool) -> Res<String> {
    let results = reweight_results(a)?;
    if json {
        return Ok(to_json(&json!({
            "design": "reweight",
            "results": results.iter().map(design_json).collect::<Vec<_>>(),
        })));
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# design: reweight {} / {} (budget {})",
        a.template.edge_a,
        a.template.edge_b,
        g9(a.template.budget)
    );
    for r in &results {
        let best = r.best();
        let _ = writeln!(
            s,
            "# optimum at alpha = {}: b = {}, sigma_alpha = {}",
            g9(r.alpha),
            best.candidate,
            g9(best.sigma_alpha)
        );
    }
    let _ = writeln!(s, "{}", DesignResult::csv_header());
    for r in &results {
        s.push_str(&r.csv_rows());
    }
    Ok(s)
}

fn plot_reweight(a: &ReweightArgs, json: bool) -> Res<String> {
    let results = reweight_results(a)?;
    if json {
        return Ok(to_json(&json!(results.iter().map(design_json).collect::<Vec<_>>())));
    }
    let mut s = String::from("alpha,b,sigma_alpha\n");
    for r in &results {
        for e in &r.evaluated {
            let _ = writeln!(s, "{},{},{}", g9(r.alpha), e.candidate, g9(e.sigma_alpha));
        }
    }
    Ok(s)
}

fn alpha_curve(a: &CurveArgs, json: bool) -> Res<String> {
    check_tol(a.tol)?;
    let alphas = a.alpha.values()?;
    let mut rows = Vec::new();
    for path in &a.graph {
        let kernel = kernel_of(&input::read_graph(path)?)?;
        for &alpha in &alphas {
            rows.push((label(path), sigma_alpha_total(&kernel, alpha, a.tol)?));
        }
    }
    if json {
        return Ok(to_json(&json!(rows
            .iter()
            .map(|(g, c)| json!({ "graph": g, "alpha": c.alpha, "sigma_alpha": c.value, "method": c.method }))
            .collect::<Vec<_>>())));
    }
    let mut s = String::from("graph,alpha,sigma_alpha,method\n");
    for (g, c) in rows {
        let _ = writeln!(s, "{g},{},{},{}", g9(c.alpha), g9(c.value), c.method);
    }
    Ok(s)
}

fn tightness(a: &CurveArgs, json: bool) -> Res<String> {
    check_tol(a.tol)?;
    let alphas = a.alpha.values()?;
    let mut rows = Vec::new();
    for path in &a.graph {
        let kernel = kernel_of(&input::read_graph(path)?)?;
        for &alpha in &alphas {
            rows.push((label(path), bound_report(&kernel, alpha, a.tol)?));
        }
    }
    if json {
        return Ok(to_json(&json!(rows
            .iter()
            .map(|(g, r)| json!({ "graph": g, "report": r }))
            .collect::<Vec<_>>())));
    }
    let mut s = format!("graph,{}\n", BoundReport::csv_header());
    for (g, r) in rows {
        let _ = writeln!(s, "{g},{}", r.csv_row());
    }
    Ok(s)
}

fn graph(a: &GraphArgs) -> Res<String> {
    let need_n = || a.n.ok_or_else(|| CliError::Input("this generator needs --n".into()));
    let g = match a.kind {
        GraphKind::Complete => generators::complete(need_n()?, a.weight)?,
        GraphKind::Path => generators::path(need_n()?)?,
        GraphKind::Cycle => generators::cycle(need_n()?)?,
        GraphKind::Star => generators::star(need_n()?)?,
        GraphKind::Random => generators::random_connected(need_n()?, a.p, a.seed)?,
        GraphKind::G1 => generators::g1(),
        GraphKind::G2 => generators::g2(),
        GraphKind::G3 => generators::g3(a.b)?,
    };
    Ok(g.to_edge_list())
}
