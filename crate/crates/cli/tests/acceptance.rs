//! Acceptance harness: one PASS/FAIL line per criterion, with its runtime budget.
//!
//! Failing criteria are reported, not hidden: the process exits 0 once every criterion has
//! been evaluated, and nonzero only if the harness itself breaks (a panic or an I/O error).

use horolab::group::SchottkyGroup;
use horolab::means::TestDictionary;
use horolab::potential::{make_potential, Potential, PotentialSpec};
use horolab_cli::artifacts::Check;
use horolab_cli::config::Tolerances;
use horolab_cli::experiments::*;
use horolab_cli::suite;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

const SEED: u64 = 20_240_611;

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    secs: f64,
    budget: f64,
    detail: String,
}

impl Outcome {
    fn line(&self) -> String {
        let within = self.secs < self.budget;
        let verdict = if self.pass && within { "PASS" } else { "FAIL" };
        let time = format!("{:.1} s / budget {:.0} s{}", self.secs, self.budget, if within { "" } else { " EXCEEDED" });
        format!("{verdict} criterion {:>2}: {} [{time}] {}", self.id, self.title, self.detail)
    }

    fn passed(&self) -> bool {
        self.pass && self.secs < self.budget
    }
}

fn failing(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| match c.value {
            Some(v) => format!("{} = {v:.3e}", c.name),
            None => format!("{} ({})", c.name, c.detail),
        })
        .collect()
}

fn worst(checks: &[Check]) -> String {
    checks
        .iter()
        .filter_map(|c| Some((c.name.as_str(), c.value?, c.tolerance?)))
        .map(|(n, v, t)| format!("{n} {v:.2e} (tol {t:.0e})"))
        .collect::<Vec<_>>()
        .join("; ")
}

fn directional(g: &SchottkyGroup) -> Potential {
    make_potential(
        g,
        &PotentialSpec::DirectionalOrbit {
            amplitude: 0.5,
            radius: 1.0,
            kappa: 0.6,
        },
    )
    .expect("directional potential")
}

fn report(out: Outcome, all: &mut Vec<Outcome>) {
    println!("{}", out.line());
    all.push(out);
}

fn e_pow(k: i32) -> f64 {
    (k as f64).exp()
}

fn sci(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", "))
}

fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn main() {
    let tol = Tolerances::default();
    let g = SchottkyGroup::standard();
    let zero = Potential::zero();
    let mut all = Vec::new();
    println!("acceptance: standard rank-2 Schottky group, seed {SEED}");

    // 1. Geometry identities and limit oracles over 10^4 samples.
    let t = Instant::now();
    let checks = suite::geometry_checks(10_000, SEED, &tol).expect("geometry checks");
    let bad = failing(&checks);
    report(
        Outcome {
            id: 1,
            title: "geometry identities (1e4 samples, 1e-9) and oracles (1e-5)",
            pass: bad.is_empty(),
            secs: t.elapsed().as_secs_f64(),
            budget: 10.0,
            detail: if bad.is_empty() {
                format!("{} checks", checks.len())
            } else {
                bad.join("; ")
            },
        },
        &mut all,
    );

    // 2. Cocycle layer for the directional potential.
    let t = Instant::now();
    let f = directional(&g);
    let checks = suite::cocycle_checks(&g, &f, 300, SEED, &tol).expect("cocycle checks");
    report(
        Outcome {
            id: 2,
            title: "cocycles rho^1, rho^0, rho^f, c^f (tol 1e-4)",
            pass: failing(&checks).is_empty(),
            secs: t.elapsed().as_secs_f64(),
            budget: 30.0,
            detail: worst(&checks),
        },
        &mut all,
    );

    // 3. Pressure: shift and antipodal identities for the directional potential at L = 10,
    //    estimator agreement for f = 0 between L = 12 and L = 14.
    let t = Instant::now();
    let (p, checks) = suite::pressure_checks(&g, &f, 10, 0.25, &tol).expect("pressure");
    let p12 = horolab::gibbs::estimate_pressure(&g, &zero, 12).expect("pressure L=12");
    let p14 = horolab::gibbs::estimate_pressure(&g, &zero, 14).expect("pressure L=14");
    let pair = [
        (p12.delta_ratio - p12.delta_bisect).abs(),
        (p14.delta_ratio - p14.delta_bisect).abs(),
        (p12.delta - p14.delta).abs(),
    ];
    let identities = checks[1].pass && checks[2].pass;
    report(
        Outcome {
            id: 3,
            title: "pressure shift, antipodal symmetry, L=12 vs L=14 stability",
            pass: identities && pair.iter().all(|&d| d <= 0.02),
            secs: t.elapsed().as_secs_f64(),
            budget: 120.0,
            detail: format!(
                "directional delta {:.5} +- {:.1e}, shift err {:.1e}, antipodal err {:.1e}; f=0 delta12 {:.6} delta14 {:.6}, pair gaps {:.1e}/{:.1e}/{:.1e}",
                p.delta,
                p.err,
                checks[1].value.unwrap_or(f64::NAN),
                checks[2].value.unwrap_or(f64::NAN),
                p12.delta,
                p14.delta,
                pair[0],
                pair[1],
                pair[2]
            ),
        },
        &mut all,
    );

    // 4. Boundary measure identities over L in {8, 10, 12}.
    let t = Instant::now();
    let gaps: Vec<suite::PattersonGaps> = [8, 10, 12]
        .iter()
        .map(|&l| suite::patterson_gaps(&g, &zero, l, 0.3, tol.rho_tol).expect("patterson"))
        .collect();
    let qi: Vec<f64> = gaps.iter().map(|x| x.quasi_invariance).collect();
    let bc: Vec<f64> = gaps.iter().map(|x| x.base_change).collect();
    let last = gaps.last().unwrap();
    report(
        Outcome {
            id: 4,
            title: "Patterson quasi-invariance and base change (<= 10%, decreasing in L)",
            pass: last.quasi_invariance <= tol.weak && last.base_change <= tol.weak && decreasing(&qi) && decreasing(&bc),
            secs: t.elapsed().as_secs_f64(),
            budget: 120.0,
            detail: format!("L=8,10,12 quasi-invariance {}, base change {}", sci(&qi), sci(&bc)),
        },
        &mut all,
    );

    // 5. Measure table on the L = 12 system.
    let t = Instant::now();
    let sys = build_system(&g, &zero, 12, tol.rho_tol).expect("gibbs system L=12");
    let table = suite::measure_table(&sys, SEED).expect("measure table");
    let checks = suite::measure_table_checks(&table, &tol);
    report(
        Outcome {
            id: 5,
            title: "measure table: leaf QI, flow scaling, holonomy, hat QI, local product",
            pass: failing(&checks).is_empty(),
            secs: t.elapsed().as_secs_f64(),
            budget: 180.0,
            detail: worst(&checks),
        },
        &mut all,
    );

    let dict = TestDictionary::standard(&g).expect("dictionary");

    // 6. Mean identity and equidistribution on {e, e^2, e^3, e^4} for 3 vectors.
    let t = Instant::now();
    let grid: Vec<f64> = (1..=4).map(e_pow).collect();
    let (out, rep) = run_equidist(&sys, &dict, 3, &grid, &[0.5, 1.0, 2.0], 20_000, SEED, &tol).expect("equidistribution");
    let monotone = rep.monotone.iter().flatten().filter(|&&b| b).count();
    let pairs = rep.monotone.iter().flatten().count();
    let sup_ok = rep.sup_monotone.iter().filter(|&&b| b).count();
    report(
        Outcome {
            id: 6,
            title: "mean identity (<= 1%) and equidistribution (decreasing, final <= 10%)",
            pass: out.checks.iter().all(|c| c.pass),
            secs: t.elapsed().as_secs_f64(),
            budget: 600.0,
            detail: format!(
                "identity {:.1e}; decreasing curves {monotone}/{pairs}; final error {:.3}; sup curves decreasing {sup_ok}/{}",
                out.checks[0].value.unwrap_or(f64::NAN),
                rep.final_error(),
                dict.len()
            ),
        },
        &mut all,
    );

    // 7. Growth exponent for f = 0 (L = 12) and an orbit bump potential (L = 10).
    let t = Instant::now();
    let growth_grid = [0.5, 2.0, 8.0, 32.0, 128.0];
    let (out0, fits0) = run_growth(&sys, 3, &growth_grid, SEED, &tol).expect("growth f=0");
    let bump = make_potential(&g, &PotentialSpec::BumpOrbit { amplitude: 0.3, radius: 1.0 }).expect("bump");
    let sys_bump = build_system(&g, &bump, 10, tol.rho_tol).expect("gibbs system for the bump");
    let (out1, fits1) = run_growth(&sys_bump, 3, &growth_grid, SEED, &tol).expect("growth bump");
    drop(sys_bump);
    let slopes = |fits: &[horolab::means::GrowthFit]| fits.iter().map(|f| format!("{:.3}", f.slope)).collect::<Vec<_>>().join(",");
    report(
        Outcome {
            id: 7,
            title: "ball growth exponent <= 2 delta + 4 |f| + 0.1",
            pass: failing(&out0.checks).is_empty() && failing(&out1.checks).is_empty(),
            secs: t.elapsed().as_secs_f64(),
            budget: 120.0,
            detail: format!(
                "f=0 slopes [{}] bound {:.3}; bump slopes [{}] bound {:.3}",
                slopes(&fits0),
                fits0[0].bound + tol.growth_slack,
                slopes(&fits1),
                fits1[0].bound + tol.growth_slack
            ),
        },
        &mut all,
    );

    // 8. Vitali covers, condition (*) for balls, cylinder-set averages.
    let t = Instant::now();
    let (out, res) = run_star(&sys, &dict, 5, &[2.0, 4.0, 8.0, 16.0], &[1, 2, 3, 4, 5, 6], 20_000, 60, SEED, &tol).expect("star");
    let counts: Vec<usize> = res.vitali.iter().flatten().cloned().collect();
    let strict: Vec<bool> = res
        .balls
        .iter()
        .map(|rows| decreasing(&rows.iter().map(|r| r.ratio).collect::<Vec<_>>()))
        .collect();
    // Nonincreasing once both ratios vanish; shown for comparison, the criterion uses the strict rule.
    let lenient = res.balls.iter().filter(|rows| horolab::means::star_trend(rows)).count();
    let sets_dec = res.sets.iter().filter(|r| r.all_decreasing()).count();
    let sets_final = res.sets.iter().map(|r| r.final_error()).fold(0.0, f64::max);
    let vitali_ok = out.checks[0].pass;
    report(
        Outcome {
            id: 8,
            title: "Vitali spread <= 3; (*) ratios strictly decreasing; cylinder errors decreasing, final <= 15%",
            pass: vitali_ok && strict.iter().all(|&b| b) && sets_dec == res.sets.len() && sets_final <= tol.sets_final,
            secs: t.elapsed().as_secs_f64(),
            budget: 300.0,
            detail: format!(
                "cover counts {counts:?}; strictly decreasing ratios {}/{} ({lenient} allowing 0 -> 0); decreasing set errors {sets_dec}/{}; final set error {sets_final:.3}",
                strict.iter().filter(|&&b| b).count(),
                strict.len(),
                res.sets.len()
            ),
        },
        &mut all,
    );

    // 10 runs before 9 so that the L = 12 system can be released before the L = 14 build.
    let t = Instant::now();
    let (out, reps) = run_cells(&sys, 2, 0.1, SEED, &tol).expect("cells");
    let radii: Vec<String> = reps.iter().map(|r| format!("{:?}", r.radius.map(|x| (x * 1e4).round() / 1e4))).collect();
    let dens: Vec<String> = reps.iter().map(|r| format!("[{:.4}, {:.4}]", r.density_min, r.density_max)).collect();
    let cells = Outcome {
        id: 10,
        title: "cell lemmas: radius >= 1e-3 at eps = 0.1, density in [e^-0.1, e^0.1]",
        pass: failing(&out.checks).is_empty(),
        secs: t.elapsed().as_secs_f64(),
        budget: 120.0,
        detail: format!("radii {}; densities {}", radii.join(", "), dens.join(", ")),
    };

    let t = Instant::now();
    let adict = autoadjoint_dictionary(&g).expect("autoadjunction dictionary");
    let r = e_pow(2);
    let (_, rep12) = run_autoadjoint(&sys, &adict, &[r], 100, 0.1, SEED, &tol).expect("autoadjunction L=12");
    drop(sys);
    let sys14 = build_system(&g, &zero, 14, tol.rho_tol).expect("gibbs system L=14");
    let (_, rep14) = run_autoadjoint(&sys14, &adict, &[r], 100, 0.1, SEED, &tol).expect("autoadjunction L=14");
    drop(sys14);
    let ok12 = rep12.iter().all(|x| x.gap <= tol.autoadjoint);
    let shrink = rep12.iter().zip(&rep14).all(|(a, b)| b.gap < a.gap);
    let gaps = |v: &[horolab::means::AutoadjointReport]| v.iter().map(|x| format!("{:.3e}", x.gap)).collect::<Vec<_>>().join(", ");
    report(
        Outcome {
            id: 9,
            title: "autoadjunction gap <= 5% at L=12, shrinking at L=14",
            pass: ok12 && shrink,
            secs: t.elapsed().as_secs_f64(),
            budget: 300.0,
            detail: format!("r = e^2, gaps L=12 [{}], L=14 [{}]", gaps(&rep12), gaps(&rep14)),
        },
        &mut all,
    );
    report(cells, &mut all);

    // 11. Determinism of the binary.
    let t = Instant::now();
    let (same, detail) = determinism();
    report(
        Outcome {
            id: 11,
            title: "repeated runs with a fixed seed are byte-identical",
            pass: same,
            secs: t.elapsed().as_secs_f64(),
            budget: 600.0,
            detail,
        },
        &mut all,
    );

    all.sort_by_key(|o| o.id);
    println!();
    println!("acceptance summary");
    for o in &all {
        println!("{}", o.line());
    }
    let passed = all.iter().filter(|o| o.passed()).count();
    println!("{passed}/{} criteria pass", all.len());
}

const DETERMINISM_CONFIGS: [(&str, &str); 3] = [
    (
        "equidist.toml",
        "name = \"equidist\"\nseed = 11\nmax_len = 8\n\n[experiment]\nkind = \"equidistribution\"\nu_count = 2\nr_grid = [1.0, 3.0, 9.0]\nt_grid = [0.5]\ntarget_samples = 2000\n",
    ),
    (
        "growth.toml",
        "name = \"growth\"\nseed = 11\nmax_len = 8\n\n[experiment]\nkind = \"growth\"\nu_count = 2\nr_grid = [0.5, 5.0, 50.0]\n",
    ),
    (
        "render.toml",
        "name = \"render\"\nseed = 11\nmax_len = 6\n\n[experiment]\nkind = \"render\"\norbit_len = 5\ndisk_depth = 3\n",
    ),
];

fn files_below(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("read artifact dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).expect("read artifact"));
            }
        }
    }
    out
}

/// Runs each configuration twice into separate roots and compares every file byte by byte.
fn determinism() -> (bool, String) {
    let base = std::env::temp_dir().join(format!("horolab-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    let cfg_dir = base.join("configs");
    std::fs::create_dir_all(&cfg_dir).expect("config dir");
    let roots = [base.join("first"), base.join("second")];
    for (name, text) in DETERMINISM_CONFIGS {
        std::fs::write(cfg_dir.join(name), text).expect("write config");
        for root in &roots {
            let run = Command::new(env!("CARGO_BIN_EXE_horolab"))
                .arg("run")
                .arg(cfg_dir.join(name))
                .env("HOROLAB_OUT", root)
                .output()
                .expect("launch horolab");
            // 0 or 1 means the run completed and wrote its artifacts.
            let code = run.status.code();
            assert!(
                matches!(code, Some(0 | 1)),
                "horolab run {name} exited with {code:?}: {}",
                String::from_utf8_lossy(&run.stderr)
            );
        }
    }
    let (a, b) = (files_below(&roots[0]), files_below(&roots[1]));
    let kinds = |ext: &str| a.keys().filter(|p| p.extension().is_some_and(|e| e == ext)).count();
    let differing: Vec<String> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let same = !a.is_empty() && a.keys().eq(b.keys()) && differing.is_empty();
    let detail = format!(
        "{} files ({} csv, {} json, {} svg), {} differ{}",
        a.len(),
        kinds("csv"),
        kinds("json"),
        kinds("svg"),
        differing.len(),
        if differing.is_empty() { String::new() } else { format!(": {differing:?}") }
    );
    let _ = std::fs::remove_dir_all(&base);
    (same, detail)
}
