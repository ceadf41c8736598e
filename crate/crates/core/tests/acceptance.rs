//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! hard failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use eigenzeros::cli::{execute, render, Cli, Format, Report, RunConfig};
use eigenzeros::embedding::{covering_degree, dilation_check, image_volume};
use eigenzeros::harmonics::build_basis;
use eigenzeros::integralgeom::{
    average_zero_count, conjecture_mixed_average, crofton_length, crofton_random_length,
    AverageReport,
};
use eigenzeros::zerofinder::SolverConfig;
use eigenzeros::SpherePoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;

fn report(args: &str) -> Report {
    let argv = std::iter::once("eigenzeros").chain(args.split_whitespace());
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| panic!("{args}: {e}"));
    let config = RunConfig::from_command(cli.command).unwrap_or_else(|e| panic!("{args}: {e}"));
    execute(&config).unwrap_or_else(|e| panic!("{args}: {e}"))
}

fn rendered(args: &str) -> String {
    render(&report(args), Format::Json)
}

// Roots of P_m by sign scan and bisection on the Bonnet recurrence.
fn legendre_root_length(m: usize) -> f64 {
    let p = |x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=m {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let n = 20_000;
    let mut total = 0.0;
    for i in 0..n {
        let (mut a, mut b) = (
            -1.0 + 2.0 * i as f64 / n as f64,
            -1.0 + 2.0 * (i + 1) as f64 / n as f64,
        );
        if p(a) == 0.0 {
            total += 2.0 * PI * (1.0 - a * a).sqrt();
            continue;
        }
        if p(a) * p(b) >= 0.0 {
            continue;
        }
        for _ in 0..100 {
            let c = 0.5 * (a + b);
            if p(a) * p(c) <= 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        let t = 0.5 * (a + b);
        total += 2.0 * PI * (1.0 - t * t).sqrt();
    }
    total
}

struct Outcome {
    pass: bool,
    hard: bool,
    detail: String,
}

fn hard(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        hard: true,
        detail,
    }
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in 1..=5 {
        let r = report(&format!(
            "average --sphere 2 --degree {m} --trials 400 --seed {SEED}"
        ));
        let dev = (r.estimate.mean - r.theory.value).abs();
        let ok = dev <= 4.0 * r.estimate.stderr && dev / r.theory.value <= 0.05;
        pass &= ok;
        parts.push(format!(
            "m={m}: {:.3}±{:.3} vs {} ({:.1}%)",
            r.estimate.mean,
            r.estimate.stderr,
            r.theory.value,
            100.0 * dev / r.theory.value
        ));
    }
    hard(pass, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut samples = 0;
    for m in 1..=50 {
        let b = build_basis(1, m).unwrap();
        let r = average_zero_count(&[&b], 200, &SolverConfig::default(), SEED).unwrap();
        samples += r.trials;
        let exact = r.counts.len() == 1 && r.counts.contains_key(&(2 * m)) && r.stderr == 0.0;
        pass &= exact;
    }
    hard(
        pass,
        format!("m = 1..50, {samples} samples, every count 2m, stderr 0"),
    )
}

fn mixed_run(m1: usize, m2: usize, trials: usize, seed: u64) -> AverageReport {
    let (b1, b2) = (build_basis(2, m1).unwrap(), build_basis(2, m2).unwrap());
    let cfg = SolverConfig::default();
    if m1 == m2 {
        average_zero_count(&[&b1, &b2], trials, &cfg, seed).unwrap()
    } else {
        conjecture_mixed_average(&[&b1, &b2], trials, &cfg, seed).unwrap()
    }
}

fn criterion_3() -> Outcome {
    let (mut samples, mut violations, mut escalations, mut resamples) = (0, 0, 0, 0);
    for m1 in 1..=5 {
        for m2 in 1..=5 {
            let r = mixed_run(m1, m2, 400, SEED + (10 * m1 + m2) as u64);
            samples += r.trials;
            violations += r.bezout_violations;
            escalations += r.depth_escalations;
            resamples += r.degenerate_resamples;
        }
    }
    hard(
        samples >= 10_000 && violations == 0,
        format!(
            "{samples} samples, {violations} above 2·m1·m2 ({escalations} depth escalations, {resamples} degenerate resamples)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut unsold, mut gradient): (f64, f64) = (0.0, 0.0);
    for dim in 1..=2 {
        for m in 1..=10 {
            let b = build_basis(dim, m).unwrap();
            for _ in 0..100 {
                let x = SpherePoint::random(dim, &mut rng);
                let v: f64 = b.eval(&x).unwrap().iter().map(|f| f * f).sum();
                let g: f64 = b
                    .eval_gradient(&x)
                    .unwrap()
                    .iter()
                    .flatten()
                    .map(|c| c * c)
                    .sum();
                unsold = unsold.max((v - b.radius_squared()).abs() / b.radius_squared());
                gradient = gradient.max((g - b.gradient_sum()).abs() / b.gradient_sum());
            }
        }
    }
    hard(
        unsold <= 1e-8 && gradient <= 1e-6,
        format!(
            "S¹ and S², m ≤ 10: Unsöld {unsold:.2e} (≤ 1e-8), gradient sum {gradient:.2e} (≤ 1e-6)"
        ),
    )
}

fn criterion_5() -> Outcome {
    let e1 = image_volume(&build_basis(2, 1).unwrap(), 5).unwrap();
    let e2 = image_volume(&build_basis(2, 2).unwrap(), 5).unwrap();
    let v1 = (e1.numeric_image_volume - 3.0).abs() <= 1e-4;
    // ∫ C dx = 15 counts the antipodally identified image twice; vol f(M) = 7.5.
    let v2 = (e2.numeric_integral - 15.0).abs() <= 0.005 * 15.0
        && (e2.numeric_image_volume - 7.5).abs() <= 0.005 * 7.5
        && e2.covering_degree == 2;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut dilation: f64 = 0.0;
    let mut parity = true;
    for m in 1..=10 {
        let b = build_basis(2, m).unwrap();
        for _ in 0..100 {
            let c = dilation_check(&b, &SpherePoint::random(2, &mut rng)).unwrap();
            dilation = dilation.max(c.residual / c.dilation);
        }
        let d = covering_degree(&b, 64, &mut rng).unwrap();
        parity &= (d == 2) == (m % 2 == 0);
    }
    hard(
        v1 && v2 && dilation <= 1e-6 && parity,
        format!(
            "m=1 volume {:.8}; m=2 ∫C = {:.6}, d = {}, volume {:.6}; Gram residual {dilation:.2e}; parity law {}",
            e1.numeric_image_volume,
            e2.numeric_integral,
            e2.covering_degree,
            e2.numeric_image_volume,
            if parity { "holds" } else { "fails" }
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut counts = Vec::new();
    for m in 1..=8 {
        let r = report(&format!("zonal --degree {m}"));
        let n = r.zeros.as_ref().map_or(0, Vec::len);
        pass &= n == 2 * m;
        counts.push(format!("{m}:{n}"));
    }
    hard(
        pass,
        format!("zeros at α_max/2 (m:count) {}", counts.join(" ")),
    )
}

fn criterion_7() -> Outcome {
    let eq = report("crofton-length --source equator --degree 1 --trials 2000");
    let eq_ok = (eq.estimate.mean - 2.0 * PI).abs() <= 0.02 * 2.0 * PI;
    let mut pass = eq_ok;
    let mut parts = vec![format!("equator {:.4} vs 2π", eq.estimate.mean)];
    let pole = SpherePoint::north_pole();
    for m in 2..=6 {
        let b = build_basis(2, m).unwrap();
        let r = crofton_length(&b, &b.zonal(&pole).unwrap(), 2000, SEED).unwrap();
        let reference = legendre_root_length(m);
        let ok = (r.length - reference).abs() <= 3.0 * r.stderr;
        pass &= ok;
        parts.push(format!(
            "m={m} {:.3}±{:.3} vs {reference:.3}",
            r.length, r.stderr
        ));
    }
    hard(pass, parts.join("; "))
}

fn criterion_8() -> (Outcome, Outcome) {
    let mut agree = Vec::new();
    let mut all_agree = true;
    for (m1, m2) in [(1, 2), (2, 3), (1, 4)] {
        let r = report(&format!(
            "conjecture --degrees {m1},{m2} --trials 400 --seed {SEED}"
        ));
        let ok = (r.estimate.mean - r.theory.value).abs() <= 4.0 * r.estimate.stderr;
        all_agree &= ok && r.experimental;
        agree.push(format!(
            "({m1},{m2}) {:.3}±{:.3} vs √(λ1λ2) = {:.3} {}",
            r.estimate.mean,
            r.estimate.stderr,
            r.theory.value,
            if ok { "agrees" } else { "misses" }
        ));
    }
    let conjecture = Outcome {
        pass: all_agree,
        hard: false,
        detail: format!("experimental: {}", agree.join("; ")),
    };

    // With m1 = 1 the zeros are a random great circle against the degree-m2
    // nodal set, so the mean count is E[nodal length] / π.
    let mut pass = true;
    let mut parts = Vec::new();
    for m2 in [2usize, 4] {
        let r = mixed_run(1, m2, 400, SEED);
        let l = crofton_random_length(&build_basis(2, m2).unwrap(), 4000, SEED + 1).unwrap();
        let predicted = l.length / PI;
        let combined = (r.stderr.powi(2) + (l.stderr / PI).powi(2)).sqrt();
        let ok = (r.mean - predicted).abs() <= 3.0 * combined;
        pass &= ok;
        parts.push(format!(
            "(1,{m2}) count {:.3} vs length/π {predicted:.3} (3σ = {:.3})",
            r.mean,
            3.0 * combined
        ));
    }
    (
        conjecture,
        hard(pass, format!("cross-oracle: {}", parts.join("; "))),
    )
}

fn criterion_9() -> Outcome {
    let runs = [
        format!("average --sphere 2 --degree 3 --trials 400 --seed {SEED}"),
        "average --sphere 1 --degree 50 --trials 200".to_string(),
        "invariants --sphere 2 --degree 10".to_string(),
        "embedding --sphere 2 --degree 2".to_string(),
        "zonal --degree 8".to_string(),
        "crofton-length --source zonal --degree 4 --trials 2000".to_string(),
        format!("conjecture --degrees 1,4 --trials 400 --seed {SEED}"),
        format!("average --sphere 2 --degree 2 --trials 100 --seed {SEED} --format csv"),
    ];
    let mut pass = true;
    for args in &runs {
        let (a, b) = if args.contains("csv") {
            let cfg = |a: &str| {
                let cli =
                    Cli::try_parse_from(std::iter::once("eigenzeros").chain(a.split_whitespace()))
                        .unwrap();
                RunConfig::from_command(cli.command).unwrap()
            };
            let c = cfg(args);
            (
                render(&execute(&c).unwrap(), c.format),
                render(&execute(&c).unwrap(), c.format),
            )
        } else {
            (rendered(args), rendered(args))
        };
        pass &= a == b;
    }
    let lib_a = serde_json::to_string(&mixed_run(2, 3, 100, SEED)).unwrap();
    let lib_b = serde_json::to_string(&mixed_run(2, 3, 100, SEED)).unwrap();
    pass &= lib_a == lib_b;
    hard(
        pass,
        format!("{} repeated runs byte-identical", runs.len() + 1),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut line = |id: &str, o: Outcome, secs: f64| {
        let tag = match (o.pass, o.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "MISS (reported, not failed)",
        };
        if o.hard && !o.pass {
            failures += 1;
        }
        println!("criterion {id}: {tag} [{secs:.1}s] {}", o.detail);
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed().as_secs_f64())
    };
    let criteria: [(&str, &dyn Fn() -> Outcome); 7] = [
        ("1", &criterion_1),
        ("2", &criterion_2),
        ("3", &criterion_3),
        ("4", &criterion_4),
        ("5", &criterion_5),
        ("6", &criterion_6),
        ("7", &criterion_7),
    ];
    for (id, f) in criteria {
        let (o, s) = timed(f);
        line(id, o, s);
    }
    let t = Instant::now();
    let (conjecture, cross) = criterion_8();
    let s = t.elapsed().as_secs_f64();
    line("8a", conjecture, s);
    line("8b", cross, s);
    let (o, s) = timed(&criterion_9);
    line("9", o, s);

    if failures == 0 {
        println!("acceptance: all hard criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
