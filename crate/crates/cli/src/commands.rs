//! Subcommand implementations. Each returns `Ok(true)` when every
//! verification it performs passes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use sigtree_core::analysis::{
    alpha_star_f64, avg_res_rate_bound, avg_res_rate_exact, avg_slots_exact, beta_star_f64,
    check_bounds, log_grid, net_rate_bounds, r_plnc, SlotCountTable,
};
use sigtree_core::is_prime;
use sigtree_core::protocol::{
    audit_transcript, derive_seed, run_trial, simulate_slot_count, Activity, SystemParams,
    TrialOutcome,
};
use sigtree_core::signature_code::{CodeError, CodebookRecord, SignatureCodebook};

use crate::config::Settings;
use crate::format::{csv_row, sig10};

/// Parameters of the analytic figures.
pub const FIGURE_M: u64 = 1031;
pub const FIGURE_POWER: f64 = 100.0;
pub const FIG3_K: [usize; 3] = [1, 4, 16];
pub const FIG4_P_MULT: [u64; 3] = [3, 6, 12];
pub const FIG5_K: [usize; 3] = [3, 8, 16];

/// Builds a codebook after the desk-scale check on `M^K - 1`.
pub fn build_codebook(s: &Settings) -> Result<SignatureCodebook> {
    if !is_prime(s.m) {
        bail!("M = {} is not prime", s.m);
    }
    let order = (s.m as u128)
        .checked_pow(s.k as u32)
        .map(|v| v - 1)
        .filter(|&v| v <= s.order_cap as u128);
    if order.is_none() {
        bail!(
            "refusing to construct (M={}, K={}): the field has M^K - 1 = {}^{} - 1 nonzero elements, \
             above the desk-scale cap of {} (raise --order-cap to override)",
            s.m,
            s.k,
            s.m,
            s.k,
            s.order_cap
        );
    }
    Ok(SignatureCodebook::build(s.m, s.k, s.q)?)
}

fn load_codebook(path: &Path) -> Result<SignatureCodebook> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record: CodebookRecord =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    SignatureCodebook::from_record(record)
        .with_context(|| format!("invalid codebook {}", path.display()))
}

fn codebook_for(s: &Settings) -> Result<SignatureCodebook> {
    match &s.codebook {
        Some(path) => load_codebook(path),
        None => build_codebook(s),
    }
}

/// Invariant check plus exhaustive enumeration when it fits under the cap.
pub fn verify_codebook(cb: &SignatureCodebook, subset_cap: u64) -> Result<bool> {
    let invariants = cb.check_invariants();
    match &invariants {
        Ok(()) => println!("invariants: ok"),
        Err(e) => println!("invariants: FAILED ({e})"),
    }
    let exhaustive = match cb.verify_uniqueness(subset_cap as u128) {
        Ok(r) => {
            println!("{}/{} subsets unique", r.distinct_column_sums, r.subsets);
            if r.cross_size_sum_collisions > 0 {
                println!(
                    "note: {} exponent-sum coincidences between subsets of different sizes (separated by the count symbol)",
                    r.cross_size_sum_collisions
                );
            }
            if r.decode_failures > 0 {
                println!("decoder failed on {} subsets", r.decode_failures);
            }
            r.passed()
        }
        Err(CodeError::TooManySubsets(n, cap)) => {
            println!("exhaustive check skipped: {n} subsets exceed --subset-cap {cap}");
            true
        }
        Err(e) => return Err(e.into()),
    };
    Ok(invariants.is_ok() && exhaustive)
}

fn describe(cb: &SignatureCodebook) {
    println!(
        "codebook M={} K={} q={}: {} users, {} symbols per signature ({:.3} bits)",
        cb.m(),
        cb.k(),
        cb.q(),
        cb.users().count(),
        cb.sig_len(),
        cb.signature_bits()
    );
}

pub fn cmd_codebook(s: &Settings) -> Result<bool> {
    let cb = build_codebook(s)?;
    describe(&cb);
    let json = serde_json::to_string_pretty(&cb.to_record())?;
    match &s.out {
        Some(path) => {
            write_file(path, json + "\n")?;
            println!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    verify_codebook(&cb, s.subset_cap)
}

pub fn cmd_verify(s: &Settings) -> Result<bool> {
    let cb = codebook_for(s)?;
    describe(&cb);
    verify_codebook(&cb, s.subset_cap)
}

fn write_file(path: &Path, contents: String) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(s: &Settings, default: &str) -> Result<PathBuf> {
    let dir = s.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn system_params(s: &Settings) -> Result<SystemParams> {
    let params = SystemParams {
        m: s.m,
        k: s.k,
        q: s.q,
        p: s.p,
        power: s.power,
        d_bits: s.d_bits,
        seed: s.seed,
    };
    params.validate()?;
    Ok(params)
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let est = sigtree_core::protocol::MonteCarloEstimate::from_samples(xs.iter().copied());
    (est.mean, est.stderr)
}

pub fn cmd_simulate(s: &Settings) -> Result<bool> {
    let params = system_params(s)?;
    let cb = codebook_for(s)?;
    if (cb.m(), cb.k(), cb.q()) != (s.m, s.k, s.q) {
        bail!(
            "codebook is for (M={}, K={}, q={}), run asks for (M={}, K={}, q={})",
            cb.m(),
            cb.k(),
            cb.q(),
            s.m,
            s.k,
            s.q
        );
    }
    let activity = match s.l {
        Some(l) => Activity::Fixed(l),
        None => Activity::Sampled,
    };
    let outcomes: Vec<TrialOutcome> = (0..s.trials)
        .into_par_iter()
        .map(|t| run_trial(&params, &cb, activity, t))
        .collect::<Result<_, _>>()?;

    let dir = out_dir(s, "simulation")?;
    let mut csv = csv_row([
        "trial",
        "active",
        "slots_used",
        "resolution_rate",
        "zero_error",
        "counts_exact",
    ]);
    let mut events = Vec::new();
    let mut audit_ok = true;
    for o in &outcomes {
        let rate = if o.slots_used > 0 {
            sig10(o.active.len() as f64 / o.slots_used as f64)
        } else {
            String::new()
        };
        csv += &csv_row([
            o.trial.to_string(),
            o.active.len().to_string(),
            o.slots_used.to_string(),
            rate,
            o.zero_error.to_string(),
            o.counts_exact.to_string(),
        ]);
        if let Some(res) = &o.result {
            if let Err(e) = audit_transcript(&res.transcript) {
                println!("trial {}: transcript audit failed: {e}", o.trial);
                audit_ok = false;
            }
            for rec in &res.transcript {
                let mut value = serde_json::to_value(rec)?;
                value["trial"] = o.trial.into();
                serde_json::to_writer(&mut events, &value)?;
                events.write_all(b"\n")?;
            }
        }
    }
    write_file(&dir.join("trials.csv"), csv)?;
    fs::write(dir.join("events.jsonl"), events)?;

    let zero_error = outcomes.iter().all(|o| o.zero_error);
    let counts_exact = outcomes.iter().all(|o| o.counts_exact);
    let busy: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.slots_used > 0).collect();
    println!(
        "{} trials, {} with active users, {} payloads over {} slots",
        outcomes.len(),
        busy.len(),
        busy.iter().map(|o| o.active.len()).sum::<usize>(),
        busy.iter().map(|o| o.slots_used).sum::<usize>()
    );
    println!(
        "zero error: {}",
        if zero_error { "all trials" } else { "FAILED" }
    );
    println!(
        "count symbol exact in every slot: {}",
        if counts_exact { "yes" } else { "NO" }
    );

    let mut identity_ok = true;
    match activity {
        Activity::Fixed(l) => {
            let slots: Vec<f64> = busy.iter().map(|o| o.slots_used as f64).collect();
            let (mean, se) = mean_and_stderr(&slots);
            let exact = SlotCountTable::new(s.k, l).get_f64(l).unwrap();
            println!(
                "mean slots {} (stderr {}), exact S({l}) = {}",
                sig10(mean),
                sig10(se),
                sig10(exact)
            );
            if l <= s.k {
                identity_ok = busy.iter().all(|o| o.slots_used == l);
                println!(
                    "slots_used = L on every trial: {}",
                    if identity_ok { "yes" } else { "NO" }
                );
            }
        }
        Activity::Sampled => {
            let rates: Vec<f64> = busy
                .iter()
                .map(|o| o.active.len() as f64 / o.slots_used as f64)
                .collect();
            let slots: Vec<f64> = busy.iter().map(|o| o.slots_used as f64).collect();
            let (mean, se) = mean_and_stderr(&slots);
            let exact = avg_slots_exact(s.m, s.p, s.k)?;
            let z = if se > 0.0 {
                (mean - exact).abs() / se
            } else {
                0.0
            };
            println!(
                "mean slots per busy period {} (stderr {}), analytic {} ({:.2} standard errors)",
                sig10(mean),
                sig10(se),
                sig10(exact),
                z
            );
            // E[L / slots] >= L / E[slots], so this sits above the analytic rate
            let (rate, rate_se) = mean_and_stderr(&rates);
            println!(
                "mean per-trial L/slots {} (stderr {}), analytic sum q_hat(L) L/S(L) = {}",
                sig10(rate),
                sig10(rate_se),
                sig10(avg_res_rate_exact(s.m, s.p, s.k)?)
            );
        }
    }
    println!("wrote {}", dir.display());
    Ok(zero_error && counts_exact && audit_ok && identity_ok)
}

pub fn cmd_slots(s: &Settings) -> Result<bool> {
    let (k, l_max) = (s.k, s.l_max);
    if k == 0 {
        bail!("K must be at least 1");
    }
    let table = SlotCountTable::new(k, l_max);
    let (alpha, beta) = (alpha_star_f64(k), beta_star_f64(k));
    let mc: Vec<Option<(f64, f64)>> = (0..=l_max)
        .into_par_iter()
        .map(|l| {
            (s.trials > 0).then(|| {
                let est = simulate_slot_count(l, k, s.trials, derive_seed(s.seed, l as u64));
                (est.mean, est.stderr)
            })
        })
        .collect();
    let mut csv = csv_row([
        "L",
        "S_exact",
        "S_rational",
        "lower",
        "upper",
        "mc_mean",
        "mc_stderr",
    ]);
    for (l, &est) in mc.iter().enumerate() {
        let lf = l as f64;
        let (mc_mean, mc_se) = match est {
            Some((m, se)) => (sig10(m), sig10(se)),
            None => (String::new(), String::new()),
        };
        csv += &csv_row([
            l.to_string(),
            sig10(table.get_f64(l).unwrap()),
            table.get(l).unwrap().to_string(),
            sig10(alpha * lf - 1.0),
            sig10(beta * lf - 1.0),
            mc_mean,
            mc_se,
        ]);
    }
    match &s.out {
        Some(path) => {
            write_file(path, csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    let report = check_bounds(&table, l_max)?;
    if report.passed() {
        println!("bounds hold for K < L <= {l_max}");
    } else {
        println!("bounds VIOLATED at L = {:?}", report.violations);
    }
    Ok(report.passed())
}

pub fn fig3_csv(l_max: usize) -> String {
    let tables: Vec<SlotCountTable> = FIG3_K
        .par_iter()
        .map(|&k| SlotCountTable::new(k, l_max))
        .collect();
    let mut header = vec!["L".to_string()];
    for k in FIG3_K {
        header.extend([
            format!("S_exact_K{k}"),
            format!("lower_K{k}"),
            format!("upper_K{k}"),
        ]);
    }
    let mut csv = csv_row(header);
    for l in 1..=l_max {
        let lf = l as f64;
        let mut row = vec![l.to_string()];
        for (table, &k) in tables.iter().zip(&FIG3_K) {
            row.push(sig10(table.get_f64(l).unwrap()));
            row.push(sig10(alpha_star_f64(k) * lf - 1.0));
            row.push(sig10(beta_star_f64(k) * lf - 1.0));
        }
        csv += &csv_row(row);
    }
    csv
}

pub fn fig4_csv(m: u64) -> Result<(String, bool)> {
    let rows: Vec<Vec<f64>> = (1..=20usize)
        .into_par_iter()
        .map(|k| {
            FIG4_P_MULT
                .iter()
                .map(|&c| avg_res_rate_bound(m, c as f64 / m as f64, k))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut csv = csv_row(
        std::iter::once("K".to_string()).chain(FIG4_P_MULT.iter().map(|c| format!("Rres_p{c}M"))),
    );
    for (i, row) in rows.iter().enumerate() {
        csv += &csv_row(std::iter::once((i + 1).to_string()).chain(row.iter().map(|&v| sig10(v))));
    }
    let in_range = rows.iter().flatten().all(|&v| (0.0..=1.0).contains(&v));
    Ok((csv, in_range))
}

/// Returns the frozen fig5 table, the same grid evaluated with the
/// `L / (beta* L - 1)` weight applied to every `L`, and whether lower <= upper
/// everywhere.
pub fn fig5_csv(m: u64, power: f64) -> Result<(String, String, bool)> {
    let p = 3.0 / m as f64;
    let grid = log_grid(10.0, 1e5, 10);
    let rows: Vec<Vec<_>> = grid
        .par_iter()
        .map(|&d| {
            FIG5_K
                .iter()
                .map(|&k| net_rate_bounds(m, p, k, power, d))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let half = r_plnc(power);
    let mut csv = csv_row(
        std::iter::once("D".to_string())
            .chain(FIG5_K.iter().map(|k| format!("Rnet_K{k}")))
            .chain(["upper".to_string(), "half_log2P".to_string()]),
    );
    let mut printed = csv_row(
        std::iter::once("D".to_string()).chain(FIG5_K.iter().map(|k| format!("Rnet_K{k}"))),
    );
    let mut consistent = true;
    for (&d, bounds) in grid.iter().zip(&rows) {
        let upper = bounds[0].upper;
        consistent &= bounds.iter().all(|b| b.lower <= b.upper);
        csv += &csv_row(
            std::iter::once(sig10(d))
                .chain(bounds.iter().map(|b| sig10(b.lower)))
                .chain([sig10(upper), sig10(half)]),
        );
        printed += &csv_row(
            std::iter::once(sig10(d)).chain(bounds.iter().map(|b| sig10(b.lower_as_printed))),
        );
    }
    Ok((csv, printed, consistent))
}

pub fn cmd_figures(s: &Settings) -> Result<bool> {
    let m = if s.m_given { s.m } else { FIGURE_M };
    let power = if s.power_given { s.power } else { FIGURE_POWER };
    let dir = out_dir(s, "figures")?;
    let fig3 = fig3_csv(s.l_max);
    let (fig4, fig4_ok) = fig4_csv(m)?;
    let (fig5, fig5_printed, fig5_ok) = fig5_csv(m, power)?;
    for (name, body) in [
        ("fig3.csv", fig3),
        ("fig4.csv", fig4),
        ("fig5.csv", fig5),
        ("fig5_as_printed.csv", fig5_printed),
    ] {
        let path = dir.join(name);
        write_file(&path, body)?;
        println!("wrote {}", path.display());
    }
    if !fig4_ok {
        println!("fig4: bound outside [0, 1]");
    }
    if !fig5_ok {
        println!("fig5: lower bound exceeds upper bound");
    }
    Ok(fig4_ok && fig5_ok)
}
