use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use qkdlab::attack::{
    build_attack_state, fully_mixed_marginal_check, parity_curve_csv, parity_guess_curve, run_otp_attack,
    secrecy_gap_report,
};
use qkdlab::composition::{
    attack_key_source, majority_distinguisher, otp_application, otp_parity_distinguisher, perfect_key_source,
    rsa_auction_sweep, rsa_malleability_demo, toy_key_source, verify_composition_bound, AuctionOutcome,
    MessageChoice, Mode,
};
use qkdlab::keystream::{
    plan_with, retry_statistics, schedule_with, simulate_stream, suggested_reserve, total_eps, total_eps_with,
    AbortCharging, MockKeySource, PlannerConfig, Rounding, StreamParams,
};
use qkdlab::quantum::CqState;
use qkdlab::security::{per_qubit_family_best, SecurityReport, EXHAUSTIVE_FAMILY_MAX_QUBITS};

use crate::{
    AttackArgs, Charging, Cli, Command, ComposeArgs, Format, PlanArgs, RsaArgs, ScheduleArgs, SecrecyArgs,
    SimulateArgs, Source, StreamArgs,
};

pub struct Outcome {
    pub command: &'static str,
    pub params: Value,
    pub result: Value,
    pub csv: Option<Vec<u8>>,
    pub pass: bool,
    pub failure: Option<String>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<qkdlab::Error> for CliError {
    fn from(e: qkdlab::Error) -> Self {
        use qkdlab::Error::*;
        match e {
            Invariant(_) | KeyUnderflow { .. } | Unreachable { .. } => Self::invariant(e.to_string()),
            _ => Self::usage(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CliError::invariant(format!("serialization failed: {e}")))
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::invariant(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::invariant(format!("csv: {e}")))
}

fn check(pass: bool, failure: impl FnOnce() -> String) -> Option<String> {
    (!pass).then(failure)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let csv_capable = matches!(
        cli.command,
        Command::AttackDemo(_) | Command::KeystreamPlan(_) | Command::KeystreamSchedule(_) | Command::KeystreamSimulate(_)
    );
    if cli.format == Format::Csv && !csv_capable {
        return Err(CliError::usage("this subcommand only writes JSON"));
    }
    match &cli.command {
        Command::AttackDemo(a) => attack_demo(a, cli.seed),
        Command::Secrecy(a) => secrecy(a, cli.seed),
        Command::KeystreamPlan(a) => keystream_plan(a),
        Command::KeystreamSchedule(a) => keystream_schedule(a),
        Command::KeystreamSimulate(a) => keystream_simulate(a, cli.seed),
        Command::VerifyComposition(a) => verify_composition(a, cli.seed),
        Command::RsaDemo(a) => rsa_demo(a, cli.seed),
    }
}

fn attack_demo(a: &AttackArgs, seed: u64) -> Result<Outcome> {
    if a.trials == 0 {
        return Err(CliError::usage("trials must be positive"));
    }
    let n = a.n as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut successes = 0u64;
    for _ in 0..a.trials {
        let message: Vec<bool> = (0..=n).map(|_| rng.random()).collect();
        successes += run_otp_attack(n, &message, &mut rng)?.success as u64;
    }
    let success_rate = successes as f64 / a.trials as f64;
    let state = build_attack_state(n)?;
    let marginal = fully_mixed_marginal_check(&state)?;
    let gap = secrecy_gap_report(n, a.budget, seed)?;
    let curve = parity_guess_curve(n)?;
    let parity_guess = curve.last().map(|p| p.probability);

    let pass = successes == a.trials && marginal.pass;
    let failure = check(pass, || {
        format!(
            "attack succeeded in {successes}/{} trials; marginal deviation {:e}",
            a.trials, marginal.max_deviation
        )
    });
    Ok(Outcome {
        command: "attack-demo",
        params: to_value(a)?,
        result: json!({
            "trials": a.trials,
            "successes": successes,
            "success_rate": success_rate,
            "marginal": { "pass": marginal.pass, "max_deviation": marginal.max_deviation },
            "gap": to_value(&gap)?,
            "parity_guess_probability": parity_guess,
        }),
        csv: Some(parity_curve_csv(&curve).into_bytes()),
        pass,
        failure,
    })
}

fn secrecy(a: &SecrecyArgs, seed: u64) -> Result<Outcome> {
    let text = std::fs::read_to_string(&a.state)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", a.state.display())))?;
    let cq: CqState = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid state file {}: {e}", a.state.display())))?;
    let report = SecurityReport::assess(&cq, a.eps_correct, a.eps_robust, a.budget, seed)?;
    Ok(Outcome {
        command: "secrecy",
        params: to_value(a)?,
        result: json!({
            "key_len": cq.key_len(),
            "dim": cq.dim(),
            "report": to_value(&report)?,
        }),
        csv: None,
        pass: true,
        failure: None,
    })
}

fn stream_params(s: &StreamArgs) -> Result<StreamParams> {
    let p = StreamParams {
        gamma: s.constants.gamma,
        rate_rho: s.constants.rho,
        nu: s.constants.nu,
        n0: s.n0,
        c: s.c,
        ell: s.ell,
        ell0: s.ell0,
        eps0: s.constants.eps0,
    };
    p.validate()?;
    Ok(p)
}

#[derive(Serialize)]
struct ScheduleRow {
    i: u64,
    n_i: f64,
    ell_i: f64,
    eps_i: f64,
    cumulative_eps: f64,
}

fn schedule_rows(p: &StreamParams, rounds: u64, rounding: Rounding) -> Result<(Value, Vec<u8>)> {
    let records = schedule_with(p, rounds, rounding)?;
    let mut acc = p.eps0;
    let rows: Vec<ScheduleRow> = records
        .iter()
        .map(|r| {
            acc += r.eps_i;
            ScheduleRow {
                i: r.i,
                n_i: r.n_i,
                ell_i: r.ell_i,
                eps_i: r.eps_i,
                cumulative_eps: acc.min(1.0),
            }
        })
        .collect();
    Ok((to_value(&records)?, csv_rows(&rows)?))
}

fn keystream_plan(a: &PlanArgs) -> Result<Outcome> {
    let cfg = PlannerConfig {
        ell: a.ell,
        horizon: a.horizon,
        ..Default::default()
    };
    let c = a.constants;
    let params = plan_with(a.target, c.gamma, c.rho, c.nu, c.eps0, &cfg)?;
    let budget = total_eps(&params, a.horizon)?;
    let doubled = total_eps(&params, 2 * a.horizon)?;
    let verified = !budget.divergent && budget.eps_total <= a.target;
    let (_, csv) = schedule_rows(&params, a.horizon, Rounding::Ceil)?;
    Ok(Outcome {
        command: "keystream-plan",
        params: to_value(a)?,
        result: json!({
            "stream_params": to_value(&params)?,
            "eps_total": budget.eps_total,
            "partial_sum": budget.partial_sum,
            "tail_bound": budget.tail_bound,
            "divergent": budget.divergent,
            "eps_total_double_horizon": doubled.eps_total,
            "verified": verified,
        }),
        csv: Some(csv),
        pass: verified,
        failure: check(verified, || format!("re-evaluated total eps {:e} misses the target", budget.eps_total)),
    })
}

fn keystream_schedule(a: &ScheduleArgs) -> Result<Outcome> {
    let p = stream_params(&a.stream)?;
    let rounding = if a.real { Rounding::Real } else { Rounding::Ceil };
    let (records, csv) = schedule_rows(&p, a.rounds, rounding)?;
    let budget = total_eps_with(&p, a.rounds, rounding)?;
    Ok(Outcome {
        command: "keystream-schedule",
        params: to_value(a)?,
        result: json!({
            "stream_params": to_value(&p)?,
            "rounds": records,
            "partial_sum": budget.partial_sum,
            "tail_bound": budget.tail_bound,
            "eps_total": budget.eps_total,
            "divergent": budget.divergent,
        }),
        csv: Some(csv),
        pass: true,
        failure: None,
    })
}

fn keystream_simulate(a: &SimulateArgs, seed: u64) -> Result<Outcome> {
    let p = stream_params(&a.stream)?;
    let source = MockKeySource::new(a.abort_prob)?;
    let charging = match a.charging {
        Charging::PerAttempt => AbortCharging::PerAttempt,
        Charging::PerRound => AbortCharging::PerRound,
    };
    let reserve = a.reserve.unwrap_or(match charging {
        AbortCharging::PerAttempt => suggested_reserve(&p, a.rounds, a.abort_prob),
        AbortCharging::PerRound => 0,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log = simulate_stream(&p, a.rounds, &source, charging, reserve, &mut rng)?;
    let (mean, sd) = retry_statistics(a.abort_prob, a.rounds);
    let within_3_sigma = (log.total_retries as f64 - mean).abs() <= 3.0 * sd;
    let mut result = json!({
        "stream_params": to_value(&p)?,
        "charging": to_value(&charging)?,
        "reserve_bits": reserve,
        "total_retries": log.total_retries,
        "expected_retries": mean,
        "retry_sd": sd,
        "retries_within_3_sigma": within_3_sigma,
        "bits_produced": log.bits_produced,
        "bits_consumed": log.bits_consumed,
        "bits_stored": log.bits_stored,
        "bits_emitted": log.bits_emitted,
        "rounds": to_value(&log.rounds)?,
    });
    if a.include_stream {
        let bits: String = log.stream.iter().map(|&b| if b { '1' } else { '0' }).collect();
        result["stream"] = Value::String(bits);
    }
    Ok(Outcome {
        command: "keystream-simulate",
        params: to_value(a)?,
        result,
        csv: Some(csv_rows(&log.rounds)?),
        pass: true,
        failure: None,
    })
}

fn verify_composition(a: &ComposeArgs, seed: u64) -> Result<Outcome> {
    let n = a.n as usize;
    let (source, key_len, distinguishers) = match a.source {
        Source::Perfect => (perfect_key_source(a.m)?, a.m, vec![majority_distinguisher()]),
        Source::Biased => (toy_key_source(a.m, a.delta)?, a.m, vec![majority_distinguisher()]),
        Source::Attack => {
            let declared = match a.declared_eps {
                Some(eps) => eps,
                None if n <= EXHAUSTIVE_FAMILY_MAX_QUBITS => {
                    per_qubit_family_best(&build_attack_state(n)?.cq)?.0.min(1.0)
                }
                None => {
                    return Err(CliError::usage(format!(
                        "--declared-eps is required above {EXHAUSTIVE_FAMILY_MAX_QUBITS} qubits"
                    )))
                }
            };
            (
                attack_key_source(n, declared)?,
                n + 1,
                vec![otp_parity_distinguisher(n)],
            )
        }
    };
    if key_len == 0 {
        return Err(CliError::usage("message length must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let message: Vec<u8> = (0..key_len).map(|_| rng.random::<bool>() as u8).collect();
    let app = otp_application(key_len, MessageChoice::Fixed(message.clone()))?;
    let mode = if a.exact {
        Mode::Exact
    } else {
        Mode::MonteCarlo { trials: a.trials, seed }
    };
    let report = verify_composition_bound(&app, &source, &distinguishers, mode)?;
    let pass = report.pass != a.expect_violation;
    let failure = check(pass, || {
        if a.expect_violation {
            "no distinguisher exceeded the declared bound".to_string()
        } else {
            let bad: Vec<_> = report
                .entries
                .iter()
                .filter(|e| !(e.within_bound && e.source_within_bound && e.app_within_bound))
                .map(|e| e.distinguisher.as_str())
                .collect();
            format!("composition bound exceeded by {bad:?} (seed {seed})")
        }
    });
    Ok(Outcome {
        command: "verify-composition",
        params: to_value(a)?,
        result: json!({ "message": message, "report": to_value(&report)? }),
        csv: None,
        pass,
        failure,
    })
}

fn rsa_demo(a: &RsaArgs, seed: u64) -> Result<Outcome> {
    let t = rsa_malleability_demo(a.bits, a.bid, seed)?;
    let expected = if a.bid == 0 {
        AuctionOutcome::Tie
    } else {
        AuctionOutcome::BobWins
    };
    let mut pass = t.roundtrip_ok && t.doubling_ok && t.outcome == expected;
    let sweep = if a.sweep > 0 {
        let s = rsa_auction_sweep(a.bits, a.sweep, seed)?;
        pass &= s.bob_wins == s.auctions && s.identity_failures == 0;
        Some(s)
    } else {
        None
    };
    Ok(Outcome {
        command: "rsa-demo",
        params: to_value(a)?,
        result: json!({ "auction": to_value(&t)?, "sweep": to_value(&sweep)? }),
        csv: None,
        pass,
        failure: check(pass, || "malleability identity or auction outcome failed".into()),
    })
}
