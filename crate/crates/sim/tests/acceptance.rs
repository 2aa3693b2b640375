//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run everything with `cargo test --release --test acceptance`, or pick
//! criteria by number: `cargo test --test acceptance -- 1 7`. The Monte Carlo
//! criteria take tens of minutes on one core.
//!
//! The process fails on any FAIL except those listed in `KNOWN_FAILURES`,
//! which are reported like every other result and discussed in the README.

use std::collections::HashMap;
use std::time::Instant;

use netdid_core::channel::{calibrate_noise, CouplingMatrix};
use netdid_core::coding::{Constellation, ConvCode};
use netdid_core::detection::{bit_prob, demap_llr, symbol_posterior, DemapMode, DemapProblem};
use netdid_core::network::{
    generate_frame, meter_rmp_lists, meter_rmp_reports, run_frame, BackhaulLedger, DidConfig,
    Fading, FrameSetup, IterationSchedule, Link, MessageKind, Node, NodeInput, Strategy,
    SuStrategy,
};
use netdid_core::Complex64;
use netdid_sim::{FrameRunner, ResultRow, SimConfig, Stopping};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that do not hold for this implementation.
const KNOWN_FAILURES: &[u32] = &[5];

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    fn with(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn four_cell() -> SimConfig {
    SimConfig {
        seed: SEED,
        ..SimConfig::default()
    }
}

fn nine_cell() -> SimConfig {
    SimConfig {
        cells: 9,
        users: 9,
        zeta: 3,
        ..four_cell()
    }
}

fn single_link() -> SimConfig {
    SimConfig {
        cells: 1,
        users: 1,
        zeta: 0,
        ..four_cell()
    }
}

fn two_cell_mimo() -> SimConfig {
    SimConfig {
        cells: 2,
        users: 2,
        zeta: 1,
        n_t: 2,
        n_r: 2,
        rho_th: 0.2,
        ..four_cell()
    }
}

/// Monte Carlo points shared between criteria.
#[derive(Default)]
struct Points {
    cache: HashMap<(String, Strategy, u64, u64), ResultRow>,
}

impl Points {
    fn get(
        &mut self,
        label: &str,
        config: &SimConfig,
        strategy: Strategy,
        snr_db: f64,
        stopping: Stopping,
    ) -> ResultRow {
        let key = (
            label.to_string(),
            strategy,
            snr_db.to_bits(),
            stopping.min_frames,
        );
        self.cache
            .entry(key)
            .or_insert_with(|| {
                FrameRunner::new(config, config.zeta)
                    .and_then(|r| r.point(strategy, snr_db, stopping))
                    .expect("simulation point")
            })
            .clone()
    }
}

fn describe(label: &str, r: &ResultRow) -> String {
    let gamma = if r.gamma.is_empty() {
        String::new()
    } else {
        let g: Vec<String> = r.gamma.iter().map(|g| format!("{g:.3}")).collect();
        format!("  gamma [{}]", g.join(", "))
    };
    format!(
        "{label:>7} {:>10} {:>5.1} dB  BER {:.3e} +- {:.1e}  ({} errors, {} frames){gamma}",
        r.strategy, r.snr_db, r.ber, r.ber_std_err, r.bit_errors, r.frames
    )
}

fn combined_error(a: &ResultRow, b: &ResultRow) -> f64 {
    (a.ber_std_err.powi(2) + b.ber_std_err.powi(2)).sqrt()
}

// 1 -------------------------------------------------------------------------

/// Exhaustive minimum of the stacked distance over every symbol vector.
fn joint_ml_points(
    received: &[Complex64],
    gains: &netdid_core::channel::CMatrix,
    qam: &Constellation,
) -> Vec<Complex64> {
    let k = gains.cols();
    let size = qam.len();
    let mut best = (f64::INFINITY, vec![]);
    for word in 0..size.pow(k as u32) {
        let s: Vec<Complex64> = (0..k)
            .map(|i| qam.point(word / size.pow(i as u32) % size))
            .collect();
        let d: f64 = (0..received.len())
            .map(|m| {
                let y: Complex64 = gains.row(m).iter().zip(&s).map(|(g, x)| g * x).sum();
                (received[m] - y).norm_sqr()
            })
            .sum();
        if d < best.0 {
            best = (d, s);
        }
    }
    best.1
}

fn criterion_1() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    for k in [2usize, 3] {
        let coupling = CouplingMatrix::build(k, k, k - 1, 1.0, 0.5, 0.0).unwrap();
        let setup = FrameSetup::new(coupling, 1, 1, 62, SEED, Fading::Fast).unwrap();
        let config = DidConfig {
            schedule: IterationSchedule::new(1, 2).unwrap(),
            su: SuStrategy::SumOfPartials,
            rho_th: 0.0,
            tau_max: 4,
            record_messages: true,
            ..DidConfig::default()
        };
        let (mut instances, mut mismatches, mut frame_index) = (0, 0, 0);
        while instances < 1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            rng.set_stream(frame_index);
            frame_index += 1;
            let frame =
                generate_frame(&setup, calibrate_noise(4.0, &setup.coupling), &mut rng).unwrap();
            let out = run_frame(Strategy::Rmp, &setup, &frame, &config).unwrap();
            let NodeInput::Estimates(est) = &out.messages[0][0] else {
                panic!("sum-of-partials selection is sent as estimates");
            };
            for t in 0..setup.slots() {
                if instances == 1000 {
                    break;
                }
                let want = joint_ml_points(
                    &frame.received[t],
                    frame.channel(t).gains(),
                    &setup.constellation,
                );
                mismatches += usize::from(est.values[t] != want);
                instances += 1;
            }
        }
        pass &= mismatches == 0;
        details.push(format!(
            "K = M = {k}: {mismatches} mismatches in {instances} instances"
        ));
    }
    Verdict::new(
        pass,
        "SU selection equals exhaustive joint minimum distance",
    )
    .with(details)
}

// 2 -------------------------------------------------------------------------

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Extrinsic bit LLRs by enumerating every hypothesis of every stream.
fn bayes_llrs(
    qam: &Constellation,
    r: &[Complex64],
    g: &[Complex64],
    var: &[f64],
    priors: &[f64],
) -> Vec<f64> {
    let streams = g.len() / r.len();
    let bits = qam.bits_per_symbol();
    let size = qam.len();
    let mut metrics = Vec::new();
    let mut labels = Vec::new();
    for word in 0..size.pow(streams as u32) {
        let idx: Vec<usize> = (0..streams)
            .map(|s| word / size.pow(s as u32) % size)
            .collect();
        let mut metric = 0.0;
        for n in 0..r.len() {
            let y: Complex64 = (0..streams)
                .map(|s| g[n * streams + s] * qam.point(idx[s]))
                .sum();
            metric -= (r[n] - y).norm_sqr() / var[n];
        }
        let mut bitvec = Vec::new();
        for (s, &q) in idx.iter().enumerate() {
            for j in 0..bits {
                let b = qam.bit(q, j);
                let l = priors[s * bits + j];
                let p0 = 1.0 / (1.0 + (-l).exp());
                metric += if b == 0 { p0.ln() } else { (1.0 - p0).ln() };
                bitvec.push(b);
            }
        }
        metrics.push(metric);
        labels.push(bitvec);
    }
    (0..streams * bits)
        .map(|i| {
            let side = |b: u8| -> Vec<f64> {
                metrics
                    .iter()
                    .zip(&labels)
                    .filter(|(_, l)| l[i] == b)
                    .map(|(m, _)| *m)
                    .collect()
            };
            log_sum_exp(&side(0)) - log_sum_exp(&side(1)) - priors[i]
        })
        .collect()
}

fn criterion_2() -> Verdict {
    let qam = Constellation::qpsk_gray();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_sum = 0.0f64;
    let mut worst_complement = 0.0f64;
    let mut worst_llr = 0.0f64;
    for _ in 0..10_000 {
        let llrs = [rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0)];
        worst_sum = worst_sum.max((symbol_posterior(&llrs, &qam).sum() - 1.0).abs());
        let l = rng.random_range(-60.0..60.0);
        worst_complement = worst_complement.max((bit_prob(l, 1.0) + bit_prob(l, -1.0) - 1.0).abs());

        let streams = rng.random_range(1..=3usize);
        let obs = rng.random_range(1..=2usize);
        let r: Vec<Complex64> = (0..obs)
            .map(|_| c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
            .collect();
        let g: Vec<Complex64> = (0..obs * streams)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let var: Vec<f64> = (0..obs).map(|_| rng.random_range(0.2..2.0)).collect();
        let priors: Vec<f64> = (0..2 * streams)
            .map(|_| rng.random_range(-5.0..5.0))
            .collect();
        let got = demap_llr(
            &qam,
            &DemapProblem {
                residual: &r,
                gains: &g,
                noise_var: &var,
                priors: &priors,
            },
            DemapMode::LogSum,
        )
        .unwrap();
        for (a, b) in got.iter().zip(bayes_llrs(&qam, &r, &g, &var, &priors)) {
            worst_llr = worst_llr.max((a - b).abs());
        }
    }
    Verdict::new(
        worst_sum < 1e-10 && worst_complement < 1e-10 && worst_llr < 1e-9,
        "posteriors, bit probabilities and demapper match Bayes",
    )
    .with(vec![format!(
        "max |sum - 1| {worst_sum:.1e}, max complement error {worst_complement:.1e}, max LLR error {worst_llr:.1e} over 10^4 cases"
    )])
}

// 3 -------------------------------------------------------------------------

/// `[7,5]` encoder with a two-bit zero tail, written out independently.
fn reference_encode(message: &[u8]) -> Vec<u8> {
    let (mut s1, mut s2) = (0u8, 0u8);
    let mut out = Vec::new();
    for &u in message.iter().chain(&[0, 0]) {
        out.push(u ^ s1 ^ s2);
        out.push(u ^ s2);
        s2 = s1;
        s1 = u;
    }
    out
}

fn criterion_3() -> Verdict {
    let code = ConvCode::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut mismatches, mut worst) = (0, 0.0f64);
    for _ in 0..200 {
        let len = rng.random_range(1..=10usize);
        let sent: Vec<u8> = (0..len).map(|_| rng.random_range(0..2)).collect();
        let llrs: Vec<f64> = reference_encode(&sent)
            .iter()
            .map(|&b| (1.0 - 2.0 * f64::from(b)) * 2.0 + rng.random_range(-3.0..3.0))
            .collect();
        let mut best = vec![[f64::NEG_INFINITY; 2]; len];
        for word in 0..1u32 << len {
            let msg: Vec<u8> = (0..len).map(|i| ((word >> i) & 1) as u8).collect();
            let metric: f64 = reference_encode(&msg)
                .iter()
                .zip(&llrs)
                .map(|(&b, l)| 0.5 * (1.0 - 2.0 * f64::from(b)) * l)
                .sum();
            for (i, &b) in msg.iter().enumerate() {
                best[i][b as usize] = best[i][b as usize].max(metric);
            }
        }
        let out = code.decode(&llrs).unwrap();
        for (i, b) in best.iter().enumerate() {
            let want = b[0] - b[1];
            let err = (out.app_message.values[i] - want).abs();
            worst = worst.max(err);
            let decision = u8::from(want < 0.0);
            if err > 1e-9 || (want != 0.0 && out.decisions[i] != decision) {
                mismatches += 1;
            }
        }
    }
    Verdict::new(
        mismatches == 0,
        "max-log-MAP decoder equals exhaustive max-log",
    )
    .with(vec![format!(
        "200 cases, {mismatches} mismatches, max deviation {worst:.1e}"
    )])
}

// 4 -------------------------------------------------------------------------

fn criterion_4(points: &mut Points) -> Verdict {
    let stopping = Stopping {
        min_frames: 200,
        min_errors: 100,
        max_frames: 2000,
        batch: 100,
    };
    let mut pass = true;
    let mut details = Vec::new();
    for snr in [4.0, 6.0, 8.0] {
        let genie = points.get("4-cell", &four_cell(), Strategy::PerfectIc, snr, stopping);
        let single = points.get("1-cell", &single_link(), Strategy::Isolated, snr, stopping);
        let gap = (genie.ber - single.ber).abs();
        let bound = 2.0 * combined_error(&genie, &single);
        pass &= gap <= bound;
        details.push(describe("4-cell", &genie));
        details.push(describe("1-cell", &single));
        details.push(format!(
            "        |difference| {gap:.2e} vs 2 sigma {bound:.2e}"
        ));
    }
    Verdict::new(pass, "genie cancellation reaches the isolated single link").with(details)
}

// 5 / 6 ---------------------------------------------------------------------

const ORDERING_SNRS: [f64; 3] = [6.0, 8.0, 10.0];

fn ordering_rows(points: &mut Points, label: &str, config: &SimConfig) -> Vec<[ResultRow; 3]> {
    ORDERING_SNRS
        .iter()
        .map(|&snr| {
            [Strategy::Rmp, Strategy::SoftIc, Strategy::HardIc]
                .map(|s| points.get(label, config, s, snr, Stopping::fixed(500)))
        })
        .collect()
}

/// SNR at which the BER curve crosses `target`, interpolating log10(BER)
/// linearly between measured points.
fn crossing(rows: &[&ResultRow], target: f64) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.ber >= target && b.ber <= target && b.ber > 0.0 {
            let (la, lb, lt) = (a.ber.log10(), b.ber.log10(), target.log10());
            Some(if la == lb {
                a.snr_db
            } else {
                a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db)
            })
        } else {
            None
        }
    })
}

fn criterion_5(points: &mut Points) -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for (label, config) in [("4-cell", four_cell()), ("9-cell", nine_cell())] {
        for [rmp, soft, hard] in ordering_rows(points, label, &config) {
            let rmp_soft = soft.ber - rmp.ber > 2.0 * combined_error(&rmp, &soft);
            let soft_hard = hard.ber - soft.ber > 2.0 * combined_error(&soft, &hard);
            pass &= rmp_soft && soft_hard;
            details.extend([&rmp, &soft, &hard].map(|r| describe(label, r)));
            details.push(format!(
                "        rmp < soft: {}, soft < hard: {}",
                if rmp_soft { "yes" } else { "no" },
                if soft_hard { "yes" } else { "no" }
            ));
        }
    }
    let rows = ordering_rows(points, "9-cell", &nine_cell());
    let curve = |i: usize| rows.iter().map(|r| &r[i]).collect::<Vec<_>>();
    match (crossing(&curve(0), 1e-3), crossing(&curve(2), 1e-3)) {
        (Some(rmp), Some(hard)) => {
            let gain = hard - rmp;
            pass &= (gain - 3.0).abs() <= 1.5;
            details.push(format!(
                "9-cell gain over hard at BER 1e-3: {gain:.2} dB (want 3 +- 1.5)"
            ));
        }
        (rmp, hard) => {
            pass = false;
            details.push(format!(
                "9-cell BER 1e-3 crossing within {:?} dB: rmp {rmp:?}, hard {hard:?}",
                ORDERING_SNRS
            ));
        }
    }
    Verdict::new(
        pass,
        "BER(rmp) <= BER(soft) <= BER(hard), 3 dB over hard at zeta = 3",
    )
    .with(details)
}

fn criterion_6(points: &mut Points) -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for snr in [8.0, 10.0] {
        let row = points.get(
            "9-cell",
            &nine_cell(),
            Strategy::Rmp,
            snr,
            Stopping::fixed(500),
        );
        let mean = row.gamma.iter().sum::<f64>() / row.gamma.len() as f64;
        pass &= mean < 3.0;
        details.push(describe("9-cell", &row));
        details.push(format!("        mean over iterations {mean:.3} (want < 3)"));
    }
    let row = points.get(
        "4-cell",
        &four_cell(),
        Strategy::Rmp,
        10.0,
        Stopping::fixed(500),
    );
    let last = row.gamma.get(3).copied().unwrap_or(f64::INFINITY);
    pass &= (last - 1.0).abs() <= 0.05;
    details.push(describe("4-cell", &row));
    details.push(format!(
        "        iteration 4: {last:.4} (want within 5% of 1)"
    ));
    Verdict::new(pass, "candidate count stays small and converges to one").with(details)
}

// 7 -------------------------------------------------------------------------

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    let coupling = CouplingMatrix::build(9, 9, 2, 1.0, 0.5, 0.0).unwrap();
    let setup = FrameSetup::new(coupling, 1, 1, 510, SEED, Fading::Fast).unwrap();
    let symbols = setup.symbols_per_user() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let frame = generate_frame(&setup, calibrate_noise(8.0, &setup.coupling), &mut rng).unwrap();
    let config = DidConfig::default();

    let soft = run_frame(Strategy::SoftIc, &setup, &frame, &config)
        .unwrap()
        .ledger;
    let soft_ok = soft.entries().count() == 9 * 2 * 4
        && soft
            .entries()
            .all(|(_, _, kind, bits)| kind == MessageKind::SoftSymbol && bits == 12 * symbols);
    pass &= soft_ok;
    details.push(format!(
        "soft q = 6: every link and iteration carries 12 bits/symbol: {soft_ok}, total {} = {}",
        soft.total(),
        12 * symbols * 18 * 4
    ));

    let hard = run_frame(Strategy::HardIc, &setup, &frame, &config)
        .unwrap()
        .ledger;
    let first: Vec<u64> = hard.entries().filter(|e| e.0 == 1).map(|e| e.3).collect();
    let hard_ok = first.len() == 18 && first.iter().all(|&b| b == 2 * symbols);
    pass &= hard_ok;
    details.push(format!(
        "hard iteration 1: 2 bits/symbol on each of 18 links: {hard_ok}"
    ));

    let mut ledger = BackhaulLedger::new();
    let singleton = netdid_core::detection::build_candidate_list(
        &netdid_core::detection::SymbolPosterior::point_mass(4, 2),
        0.2,
        4,
    )
    .unwrap();
    let lists = vec![singleton; symbols as usize];
    let mut per_user = Vec::new();
    for it in 1..=4 {
        let mut bits = 0;
        for m in 0..9 {
            let link = Link::new(Node::Bs(m), Node::SelectionUnit);
            bits += meter_rmp_lists(&mut ledger, it, link, &lists, None, 2).unwrap();
            bits += meter_rmp_reports(&mut ledger, it, link, &vec![1; symbols as usize]);
        }
        per_user.push(bits as f64 / (9 * symbols) as f64);
    }
    let rmp_ok = per_user.iter().all(|&b| b == 2.0);
    pass &= rmp_ok;
    details.push(format!(
        "rmp singleton lists: bits per user symbol per iteration {per_user:?}"
    ));
    Verdict::new(pass, "backhaul ledger matches closed-form counts").with(details)
}

// 8 -------------------------------------------------------------------------

fn criterion_8(points: &mut Points) -> Verdict {
    let cfg = four_cell();
    let ratio = |lo: &ResultRow, hi: &ResultRow| {
        if hi.bit_errors == 0 {
            f64::INFINITY
        } else {
            lo.ber / hi.ber
        }
    };
    let mut details = Vec::new();
    let mut ratios = Vec::new();
    for s in [
        Strategy::JointMl,
        Strategy::Isolated,
        Strategy::PerfectIc,
        Strategy::SoftIc,
        Strategy::HardIc,
        Strategy::Rmp,
    ] {
        let lo = points.get("4-cell", &cfg, s, 4.0, Stopping::fixed(500));
        let hi = points.get("4-cell", &cfg, s, 8.0, Stopping::fixed(500));
        let r = ratio(&lo, &hi);
        details.push(describe("4-cell", &lo));
        details.push(describe("4-cell", &hi));
        details.push(format!("        BER(4 dB) / BER(8 dB) = {r:.3e}"));
        ratios.push(r);
    }
    let pass = ratios[1..].iter().all(|&r| ratios[0] > r);
    Verdict::new(
        pass,
        "joint reference curve is steeper than every distributed one",
    )
    .with(details)
}

// 9 -------------------------------------------------------------------------

fn criterion_9(points: &mut Points) -> Verdict {
    let cfg = two_cell_mimo();
    let rmp = points.get("mimo", &cfg, Strategy::Rmp, 8.0, Stopping::fixed(500));
    let soft = points.get("mimo", &cfg, Strategy::SoftIc, 8.0, Stopping::fixed(500));
    let gap = (rmp.ber - soft.ber).abs();
    let bound = 2.0 * combined_error(&rmp, &soft);
    Verdict::new(gap <= bound, "2x2 user-based rmp is near soft cancellation").with(vec![
        describe("mimo", &rmp),
        describe("mimo", &soft),
        format!("        |difference| {gap:.2e} vs 2 sigma {bound:.2e}"),
    ])
}

// 10 ------------------------------------------------------------------------

fn criterion_10() -> Verdict {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut p = Points::default();
            let mut rows = vec![
                p.get(
                    "4-cell",
                    &four_cell(),
                    Strategy::Rmp,
                    6.0,
                    Stopping::fixed(24),
                ),
                p.get(
                    "9-cell",
                    &nine_cell(),
                    Strategy::HardIc,
                    8.0,
                    Stopping::fixed(8),
                ),
                p.get(
                    "mimo",
                    &two_cell_mimo(),
                    Strategy::SoftIc,
                    8.0,
                    Stopping::fixed(24),
                ),
            ];
            rows.push(
                FrameRunner::new(&four_cell(), 2)
                    .unwrap()
                    .point(
                        Strategy::HardIc,
                        5.0,
                        Stopping {
                            min_frames: 10,
                            min_errors: 100,
                            max_frames: 60,
                            batch: 7,
                        },
                    )
                    .unwrap(),
            );
            (rows, criterion_1().details, criterion_3().details)
        })
    };
    let a = run(1);
    let b = run(1);
    let c = run(3);
    let pass = a.0 == b.0 && a.0 == c.0 && a.1 == b.1 && a.2 == c.2;
    Verdict::new(pass, "same seed, same numbers, any thread count").with(vec![format!(
        "{} Monte Carlo rows and two oracle criteria rerun on 1, 1 and 3 threads",
        a.0.len()
    )])
}

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let selected = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let mut points = Points::default();
    let criteria: Vec<(u32, Box<dyn Fn(&mut Points) -> Verdict>)> = vec![
        (1, Box::new(|_| criterion_1())),
        (2, Box::new(|_| criterion_2())),
        (3, Box::new(|_| criterion_3())),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(|_| criterion_7())),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
        (10, Box::new(|_| criterion_10())),
    ];
    let mut unexpected = Vec::new();
    for (n, check) in &criteria {
        if !selected(*n) {
            continue;
        }
        let start = Instant::now();
        let v = check(&mut points);
        let status = match (v.pass, KNOWN_FAILURES.contains(n)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(*n);
                "FAIL"
            }
        };
        println!(
            "criterion {n:>2}: {status} - {} [{:.1} s]",
            v.summary,
            start.elapsed().as_secs_f64()
        );
        for d in &v.details {
            println!("    {d}");
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
