//! Subcommands other than `reproduce`.

use crate::config::{self, ExperimentConfig};
use crate::output::{self, num, opt_num, Csv, Options};
use crate::Failure;
use invbal_core::analysis::bound::gamma_bound;
use invbal_core::analysis::certify::certify_with_bound;
use invbal_core::analysis::offline::offline_optimum;
use invbal_core::analysis::simplex::vertex_enumeration;
use invbal_core::analysis::{build_lp, solve_lp, AnalysisError};
use invbal_core::generators::{gen_tiny, TinyParams};
use invbal_core::iap::{
    admits_partition, check_global_dominance, check_local_dominance, solve, IapAssignment, IapInstance,
};
use invbal_core::{monte_carlo, run, Instance, Penalty, PolicyKind};
use serde_json::json;
use std::path::Path;

/// Vertex enumeration is attempted only below this many bases.
const VERTEX_BASES_LIMIT: u128 = 200_000;

pub fn simulate(
    cfg: ExperimentConfig,
    seed: Option<u64>,
    replications: Option<usize>,
    out: Option<&Path>,
    opts: Options,
) -> Result<String, Failure> {
    let seed = seed.unwrap_or(cfg.seed);
    let reps = replications.unwrap_or(cfg.replications);
    if reps == 0 {
        return Err(Failure::user("replications must be at least 1"));
    }
    let generate = config::generator(&cfg)?;
    let stats = monte_carlo(&generate, &cfg.policies, reps, seed)?;
    let mut csv = Csv::new(opts, &["policy", "mean", "sd", "min", "max"]);
    for s in &stats {
        csv.row(&[s.policy.clone(), num(s.mean), num(s.sd), num(s.min), num(s.max)]);
    }
    if let Some(path) = &cfg.output.values {
        let mut v = Csv::new(opts, &["replication", "seed", "policy", "revenue"]);
        for s in &stats {
            for (k, (val, sd)) in s.values.iter().zip(&s.seeds).enumerate() {
                v.row(&[(k + 1).to_string(), sd.to_string(), s.policy.clone(), num(*val)]);
            }
        }
        output::write_file(path, &v.finish())?;
    }
    if let Some(path) = &cfg.output.traces {
        let inst = generate(seed)?;
        let traces = cfg
            .policies
            .iter()
            .map(|p| run(&inst, p, seed))
            .collect::<Result<Vec<_>, _>>()?;
        let text = serde_json::to_string(&traces).expect("traces serialize");
        output::write_file(path, &text)?;
    }
    let text = csv.finish();
    match (&cfg.output.stats, out) {
        (Some(path), None) => {
            output::write_file(path, &text)?;
            Ok(String::new())
        }
        _ => Ok(text),
    }
}

fn read_nonempty(path: &Path) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(Failure::user(format!("{}: empty input", path.display())));
    }
    Ok(text)
}

/// "a b" per line; blank lines and `#` comments are skipped.
pub fn parse_intervals(text: &str, origin: &str) -> Result<Vec<(i64, i64)>, Failure> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || Failure::user(format!("{origin}:{}: expected two integers \"a b\"", no + 1));
        if parts.len() != 2 {
            return Err(bad());
        }
        let a = parts[0].parse::<i64>().map_err(|_| bad())?;
        let b = parts[1].parse::<i64>().map_err(|_| bad())?;
        if a > b {
            return Err(Failure::user(format!("{origin}:{}: a > b", no + 1)));
        }
        out.push((a, b));
    }
    if out.is_empty() {
        return Err(Failure::user(format!("{origin}: no intervals")));
    }
    Ok(out)
}

fn one_based(v: &[Vec<usize>]) -> Vec<Vec<usize>> {
    v.iter().map(|c| c.iter().map(|k| k + 1).collect()).collect()
}

fn iap_json(inst: &IapInstance, a: &IapAssignment) -> serde_json::Value {
    json!({
        "intervals": inst.intervals(),
        "labels": a.labels,
        "trigger": a.trigger.iter().map(|k| k + 1).collect::<Vec<_>>(),
        "predecessor": a.predecessor.iter().map(|p| p.map(|k| k + 1)).collect::<Vec<_>>(),
        "chains": one_based(&a.chains),
        "link_chains": one_based(&a.link_chains),
    })
}

pub fn iap_solve(input: &Path, as_json: bool) -> Result<String, Failure> {
    let origin = input.display().to_string();
    let iv = parse_intervals(&read_nonempty(input)?, &origin)?;
    let inst = IapInstance::new(iv).map_err(|e| Failure::user(format!("{origin}: {e}")))?;
    let a = solve(&inst);
    if as_json {
        let mut s = serde_json::to_string_pretty(&iap_json(&inst, &a)).expect("serializable");
        s.push('\n');
        return Ok(s);
    }
    let mut s = String::from("# labels\n");
    for l in &a.labels {
        s.push_str(&format!("{l}\n"));
    }
    s.push_str("# chains\n");
    for c in one_based(&a.chains) {
        let c: Vec<String> = c.iter().map(|k| k.to_string()).collect();
        s.push_str(&c.join(" "));
        s.push('\n');
    }
    Ok(s)
}

pub fn iap_check(input: &Path, labels: &Path) -> Result<String, Failure> {
    let origin = input.display().to_string();
    let iv = parse_intervals(&read_nonempty(input)?, &origin)?;
    let inst = IapInstance::unordered(iv).map_err(|e| Failure::user(format!("{origin}: {e}")))?;
    let text = read_nonempty(labels)?;
    let labels: Vec<usize> = text
        .split_whitespace()
        .enumerate()
        .map(|(k, w)| {
            w.parse::<usize>()
                .ok()
                .filter(|&l| l >= 1)
                .ok_or_else(|| Failure::user(format!("label {}: expected a positive integer, got {w:?}", k + 1)))
        })
        .collect::<Result<_, _>>()?;
    let local = check_local_dominance(&inst, &labels).map_err(|e| Failure::user(e.to_string()))?;
    let global = check_global_dominance(&inst, &labels).map_err(|e| Failure::user(e.to_string()))?;
    let partition = admits_partition(&labels);
    Ok(format!(
        "property,holds\nlocal_dominance,{local}\nglobal_dominance,{global}\npartition_monotonicity,{partition}\n"
    ))
}

pub fn parse_penalty(spec: &str) -> Result<Penalty, Failure> {
    match spec.trim() {
        "exponential" => Ok(Penalty::Exponential),
        "identity" => Ok(Penalty::Identity),
        "step" => Ok(Penalty::Step),
        s if s.starts_with('{') => serde_json::from_str(s).map_err(|e| Failure::user(format!("penalty: {e}"))),
        s => Err(Failure::user(format!(
            "unknown penalty {s:?} (exponential, identity, step or a JSON object)"
        ))),
    }
}

pub fn bound(psi: &str, gammas: &[String], c0s: &[u64], opts: Options) -> Result<String, Failure> {
    let psi = parse_penalty(psi)?;
    let mut csv = Csv::new(
        opts,
        &["psi", "gamma", "c0", "gamma1", "gamma2", "gamma_min", "x1", "x2"],
    );
    for &c0 in c0s {
        for g in gammas {
            let gamma = if g == "sqrt" {
                (c0 as f64).sqrt().ceil() as u64
            } else {
                g.parse()
                    .map_err(|_| Failure::user(format!("gamma {g:?} is not an integer or sqrt")))?
            };
            let b = gamma_bound(&psi, gamma, c0)?;
            csv.row(&[
                psi.name().to_string(),
                gamma.to_string(),
                c0.to_string(),
                num(b.gamma1),
                num(b.gamma2),
                num(b.gamma_min),
                num(b.x1),
                num(b.x2),
            ]);
        }
    }
    Ok(csv.finish())
}

fn load_instance(path: Option<&Path>, seed: u64, tiny: TinyParams) -> Result<Instance, Failure> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::user(format!("{}: {e}", p.display())))?;
            Instance::from_json(&text).map_err(|e| Failure::user(format!("{}: {e}", p.display())))
        }
        None => Ok(gen_tiny(&tiny, seed)),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

pub fn lp_benchmark(instance: Option<&Path>, gamma: u64, seed: u64, opts: Options) -> Result<String, Failure> {
    let tiny = TinyParams {
        inventory: [gamma.max(1), gamma.max(3)],
        ..TinyParams::default()
    };
    let inst = load_instance(instance, seed, tiny)?;
    let bib = PolicyKind::bib_exp(gamma);
    let trace = run(&inst, &bib, seed)?;
    let lp = build_lp(&trace, &inst, gamma)?;
    let sol = solve_lp(&lp)?;
    let vertex = if binomial(lp.objective.len() + lp.rows.len(), lp.objective.len()) <= VERTEX_BASES_LIMIT {
        vertex_enumeration(&lp)
    } else {
        None
    };
    let offline = match offline_optimum(&inst) {
        Ok(v) => Some(v),
        Err(AnalysisError::TooLarge(_) | AnalysisError::Contract(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let mut policies = Vec::new();
    for p in PolicyKind::standard_set(gamma) {
        let tr = run(&inst, &p, seed)?;
        policies.push(json!({"policy": p.name(), "revenue": num(tr.total_revenue)}));
    }
    Ok(output::json(
        opts,
        json!({
            "seed": seed,
            "gamma": gamma,
            "products": inst.n(),
            "horizon": inst.horizon,
            "ready_batches": trace.batches.iter().map(Vec::len).sum::<usize>(),
            "variables": lp.objective.len(),
            "rows": lp.rows.len(),
            "lp_value": num(sol.value),
            "simplex_iterations": sol.iterations,
            "vertex_enumeration": opt_num(vertex),
            "offline_optimum": opt_num(offline),
            "policies": policies,
        }),
    ))
}

pub fn certify(
    instance: Option<&Path>,
    gamma: u64,
    psi: &str,
    seed: u64,
    replications: usize,
    opts: Options,
) -> Result<String, Failure> {
    if replications == 0 {
        return Err(Failure::user("replications must be at least 1"));
    }
    let psi = parse_penalty(psi)?;
    let tiny = TinyParams {
        mnl: true,
        inventory: [gamma.max(1), gamma.max(3)],
        ..TinyParams::default()
    };
    let inst = load_instance(instance, seed, tiny)?;
    let c0 = inst
        .min_inventory()
        .ok_or_else(|| Failure::user("certification needs a product with finite inventory"))?;
    let bound = gamma_bound(&psi, gamma, c0)?;
    let kind = PolicyKind::Bib {
        penalty: psi.clone(),
        gamma,
    };
    let mut failures = Vec::new();
    let mut worst_slack = f64::INFINITY;
    let mut worst_margin = f64::INFINITY;
    let mut revenue = 0.0;
    let mut dual = 0.0;
    for k in 0..replications as u64 {
        let s = seed + k;
        let tr = run(&inst, &kind, s)?;
        let cert = certify_with_bound(&tr, &inst, &bound)?;
        worst_slack = worst_slack.min(cert.worst_pointwise_slack);
        worst_margin = worst_margin.min(cert.primal - bound.gamma_min * cert.dual_objective);
        revenue += cert.primal;
        dual += cert.dual_objective;
        if !cert.passed() {
            failures.push(json!({"seed": s, "pointwise_ok": cert.pointwise_ok, "ratio_ok": cert.ratio_ok}));
        }
    }
    let n = replications as f64;
    Ok(output::json(
        opts,
        json!({
            "seed": seed,
            "gamma": gamma,
            "psi": psi.name(),
            "c0": c0,
            "gamma_bound": num(bound.gamma_min),
            "replications": replications,
            "passed": failures.is_empty(),
            "failures": failures,
            "worst_pointwise_slack": opt_num(worst_slack.is_finite().then_some(worst_slack)),
            "worst_ratio_margin": opt_num(worst_margin.is_finite().then_some(worst_margin)),
            "mean_revenue": num(revenue / n),
            "mean_dual_objective": num(dual / n),
        }),
    ))
}
