use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use ucpnet::bayes::{expected_value, staged_decision};
use ucpnet::elicit::{minimax_regret, ElicitationSession, SessionConfig, Step, WeightSpace};
use ucpnet::io::{self, NetModel};
use ucpnet::optimize::{forward_sweep, forward_sweep_unchecked};
use ucpnet::validation::{is_valid_ucp, span_report, sufficient_check, topology_from_gai};
use ucpnet::{Error, Result};

/// Build, check, query and elicit UCP-nets.
#[derive(Parser)]
#[command(name = "ucp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact domination test plus the span-based sufficient test.
    Validate { net: PathBuf },
    /// Utility of a complete outcome, e.g. "A=a;B=b".
    Eval { net: PathBuf, outcome: String },
    /// Which of two outcomes is preferred.
    Compare {
        net: PathBuf,
        first: String,
        second: String,
    },
    /// Best completion of the evidence by the forward sweep.
    Optimize {
        net: PathBuf,
        /// Observed values, "A=a,B=b".
        #[arg(long, default_value = "")]
        evidence: String,
        /// Skip the validity check.
        #[arg(long)]
        force: bool,
    },
    /// Expected-utility action choice with staged factor evaluation.
    Decide {
        net: PathBuf,
        scenario: PathBuf,
        /// Bayes net for evidence actions when the scenario embeds none.
        #[arg(long)]
        bayes: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
    },
    /// Minimax regret over the feasible tradeoff weights.
    Regret {
        net: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Interactive (or scripted) minimax-regret elicitation.
    Elicit {
        net: PathBuf,
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long)]
        costs: Option<PathBuf>,
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// File with one response index per line; stdin when absent.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        max_queries: Option<usize>,
    },
    /// UCP-net topology for a GAI decomposition under a variable order.
    Gai2ucp {
        gai: PathBuf,
        /// Comma-separated variable names.
        #[arg(long)]
        order: String,
    },
    /// Normalized value functions of a quantified net.
    Normalize { net: PathBuf },
}

fn load_ucp(path: &PathBuf) -> Result<ucpnet::UcpNet> {
    io::load_net(path)?.into_ucp()
}

fn run(cmd: Command, out: &mut impl Write) -> Result<bool> {
    match cmd {
        Command::Validate { net } => {
            let net = load_ucp(&net)?;
            let report = is_valid_ucp(&net)?;
            write!(out, "{}", report.render(net.variables()))?;
            let suff = sufficient_check(&net);
            writeln!(out, "sufficient check: {}", if suff { "holds" } else { "fails" })?;
            for (v, s) in span_report(&net).iter().enumerate() {
                if !net.children(v).is_empty() {
                    writeln!(
                        out,
                        "  {}: minspan {} children maxspan {} children swing {}",
                        net.variables().name(v),
                        s.minspan,
                        s.children_maxspan,
                        s.children_swing
                    )?;
                }
            }
            Ok(report.valid())
        }
        Command::Eval { net, outcome } => {
            let net = load_ucp(&net)?;
            let o = net.variables().parse_assignment(&outcome)?;
            writeln!(out, "{}", net.evaluate_utility(&o)?)?;
            Ok(true)
        }
        Command::Compare { net, first, second } => {
            let net = load_ucp(&net)?;
            let vars = net.variables();
            let (o1, o2) = (vars.parse_assignment(&first)?, vars.parse_assignment(&second)?);
            let (u1, u2) = (net.evaluate_utility(&o1)?, net.evaluate_utility(&o2)?);
            let verdict = match net.compare_outcomes(&o1, &o2)? {
                std::cmp::Ordering::Greater => "first",
                std::cmp::Ordering::Less => "second",
                std::cmp::Ordering::Equal => "equal",
            };
            writeln!(out, "{verdict} ({u1} vs {u2})")?;
            Ok(true)
        }
        Command::Optimize {
            net,
            evidence,
            force,
        } => {
            let net = load_ucp(&net)?;
            let ev = io::parse_evidence(net.variables(), &evidence)?;
            let best = if force {
                forward_sweep_unchecked(&net, &ev)?
            } else {
                forward_sweep(&net, &ev)?
            };
            writeln!(out, "{}", net.variables().format_assignment(&best))?;
            writeln!(out, "utility {}", net.evaluate_utility(&best)?)?;
            Ok(true)
        }
        Command::Decide {
            net,
            scenario,
            bayes,
            slack,
        } => {
            let net = load_ucp(&net)?;
            let bn = bayes.map(io::load_bayes_net).transpose()?.map(Arc::new);
            let sc = io::load_scenario(&scenario, net.variables(), bn)?;
            let d = staged_decision(&sc, &net, slack)?;
            writeln!(out, "choose {}", d.name)?;
            writeln!(out, "bound {}", d.bound)?;
            writeln!(out, "stages {} of {}", d.stages_used, net.len())?;
            for a in sc.actions() {
                writeln!(out, "  EV({}) = {}", a.name, expected_value(&sc, &a.name, &net)?)?;
            }
            Ok(true)
        }
        Command::Regret {
            net,
            scenario,
            constraints,
        } => {
            let (nnet, bounds) = io::load_net(&net)?.into_normalized();
            let sc = io::load_scenario(&scenario, nnet.variables(), None)?
                .compiled(nnet.variables())?;
            let mut config = io::space_config(&bounds);
            let extra = match constraints {
                Some(p) => io::load_constraints(p)?.apply(&nnet, &mut config)?,
                None => Vec::new(),
            };
            let mut space = WeightSpace::new(Arc::new(nnet), &config)?;
            for c in extra {
                space = space.with_constraint(c)?;
            }
            let r = minimax_regret(&sc, &space)?;
            for (a, mr) in sc.actions().iter().zip(&r.max_regret) {
                writeln!(out, "MR({}) = {mr}", a.name)?;
            }
            writeln!(out, "recommend {}", sc.actions()[r.recommended].name)?;
            writeln!(out, "MMR {}", r.mmr)?;
            Ok(true)
        }
        Command::Elicit {
            net,
            scenario,
            tau,
            costs,
            constraints,
            script,
            max_queries,
        } => {
            let (nnet, bounds) = io::load_net(&net)?.into_normalized();
            let sc = io::load_scenario(&scenario, nnet.variables(), None)?;
            let mut config = SessionConfig {
                tau,
                space: io::space_config(&bounds),
                ..SessionConfig::default()
            };
            if let Some(c) = costs {
                config.costs = io::load_costs(c)?;
            }
            if let Some(m) = max_queries {
                config.max_queries = m;
            }
            let extra = match constraints {
                Some(p) => io::load_constraints(p)?.apply(&nnet, &mut config.space)?,
                None => Vec::new(),
            };
            let nnet = Arc::new(nnet);
            let mut session = ElicitationSession::new(Arc::clone(&nnet), &sc, config)?;
            for c in extra {
                session.constrain(c)?;
            }
            let mut answers: Box<dyn Iterator<Item = std::io::Result<String>>> = match script {
                Some(p) => Box::new(std::io::BufReader::new(std::fs::File::open(p)?).lines()),
                None => Box::new(std::io::stdin().lock().lines()),
            };
            let names: Vec<String> = session
                .scenario()
                .actions()
                .iter()
                .map(|a| a.name.clone())
                .collect();
            writeln!(out, "MMR {}", session.report().mmr)?;
            loop {
                match session.step()? {
                    Step::Ask { query, improvement } => {
                        writeln!(out, "? {}", query.prompt(&nnet, session.scenario()))?;
                        writeln!(out, "  (improvement {improvement})")?;
                        for (k, r) in query.responses.iter().enumerate() {
                            writeln!(out, "  [{k}] {}", r.label)?;
                        }
                        out.flush()?;
                        let k = next_answer(&mut answers, query.responses.len())?;
                        session.respond(k)?;
                        writeln!(out, "> {k}: {}", query.responses[k].label)?;
                        writeln!(out, "MMR {}", session.report().mmr)?;
                    }
                    Step::Recommend { action, mmr } => {
                        writeln!(out, "recommend {} (MMR {mmr})", names[action])?;
                        return Ok(true);
                    }
                    Step::Stop {
                        reason,
                        action,
                        mmr,
                    } => {
                        writeln!(
                            out,
                            "stop ({}): best so far {} (MMR {mmr})",
                            reason.as_str(),
                            names[action]
                        )?;
                        return Ok(true);
                    }
                }
            }
        }
        Command::Gai2ucp { gai, order } => {
            let g = io::load_gai(&gai)?;
            let ordering = order
                .split(',')
                .map(|n| g.variables().lookup(n.trim()))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Argument(format!("--order: {e}")))?;
            let net = topology_from_gai(&g, &ordering)?;
            write!(out, "{}", io::net_to_string(&NetModel::Ucp(net))?)?;
            Ok(true)
        }
        Command::Normalize { net } => {
            let net = load_ucp(&net)?;
            let (nnet, _) = net.normalize();
            let model = NetModel::Normalized {
                nnet,
                bounds: Default::default(),
            };
            write!(out, "{}", io::net_to_string(&model)?)?;
            Ok(true)
        }
    }
}

/// Next response index from the script or terminal, skipping blank lines
/// and `#` comments.
fn next_answer(
    answers: &mut dyn Iterator<Item = std::io::Result<String>>,
    n: usize,
) -> Result<usize> {
    for line in answers {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        return match t.parse::<usize>() {
            Ok(k) if k < n => Ok(k),
            _ => Err(Error::Argument(format!(
                "expected a response index below {n}, got {t:?}"
            ))),
        };
    }
    Err(Error::Argument("responses ran out before the session ended".into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("UCP_LOG")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
