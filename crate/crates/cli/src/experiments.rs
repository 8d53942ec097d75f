//! Experiment runners. Each returns its checks and the files it produced; nothing is
//! written to disk here.

use crate::artifacts::{Artifacts, Cell, Check, CheckClass, Csv, PressureLine, Summary, SCHEMA_VERSION, SUMMARY_FILE};
use crate::config::{ConfigError, Experiment, ExperimentConfig, Resolved, Tolerances};
use crate::suite::{self, sub_seed};
use crate::svg::{self, Series};
use horolab::gibbs::{GibbsOptions, GibbsSystem};
use horolab::group::{enumerate_words, word_count, SchottkyGroup};
use horolab::means::*;
use horolab::potential::Potential;
use std::path::Path;

use Cell::{B, F, I, S};
use CheckClass::{Assertion, Trend};

pub const ANCHOR_MEAN_FLOW: &str = "horospherical mean under the flow";
pub const ANCHOR_EQUIDIST: &str = "equidistribution of horospherical means";
pub const ANCHOR_UNIFORM: &str = "equidistribution uniform in u";
pub const ANCHOR_GROWTH: &str = "polynomial growth of leaf balls";
pub const ANCHOR_VITALI: &str = "Vitali covering of leaf balls";
pub const ANCHOR_STAR: &str = "condition (*)";
pub const ANCHOR_SETS: &str = "equidistribution along sets satisfying (*)";
pub const ANCHOR_AUTOADJOINT: &str = "autoadjunction of the mean operator";
pub const ANCHOR_CELL_INCLUSION: &str = "cell inclusion lemma";
pub const ANCHOR_CELL_DENSITY: &str = "cell density lemma";
pub const ANCHOR_CELL_SANDWICH: &str = "cell sandwich lemma";
pub const ANCHOR_RENDER: &str = "rendering";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Compute(horolab::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Compute(e) => write!(f, "computation failed: {e}"),
            RunError::Io(e) => write!(f, "cannot write artifacts: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<horolab::Error> for RunError {
    fn from(e: horolab::Error) -> Self {
        RunError::Compute(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Checks and files of one experiment.
#[derive(Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub artifacts: Artifacts,
    pub pressure: Option<PressureLine>,
}

fn checks_csv(checks: &[Check]) -> String {
    let mut csv = Csv::new(&["name", "anchor", "class", "value", "tolerance", "pass", "detail"]);
    for c in checks {
        let class = match c.class {
            Assertion => "assertion",
            Trend => "trend",
        };
        csv.row(&[
            S(&c.name),
            S(&c.anchor),
            S(class),
            F(c.value.unwrap_or(f64::NAN)),
            F(c.tolerance.unwrap_or(f64::NAN)),
            B(c.pass),
            S(&c.detail),
        ]);
    }
    csv.finish()
}

fn pressure_line(sys: &GibbsSystem) -> Option<PressureLine> {
    Some(PressureLine {
        delta: sys.pressure.delta,
        err: sys.pressure.err,
    })
}

pub fn build_system(group: &SchottkyGroup, f: &Potential, max_len: usize, rho_tol: f64) -> horolab::Result<GibbsSystem> {
    GibbsSystem::build(group, f, GibbsOptions { max_len, rho_tol })
}

/// The invariant suite: geometry, cocycles, pressure, boundary measures, measure table and
/// the exact identities of the mean operator.
pub fn run_checks(
    group: &SchottkyGroup,
    f: &Potential,
    max_len: usize,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> horolab::Result<Outcome> {
    let mut checks = suite::geometry_checks(samples, sub_seed(seed, 1), tol)?;
    checks.extend(suite::cocycle_checks(group, f, (samples / 10).max(20), sub_seed(seed, 2), tol)?);
    let (_, pc) = suite::pressure_checks(group, f, max_len, 0.25, tol)?;
    checks.extend(pc);
    let gaps = suite::patterson_gaps(group, f, max_len, 0.3, tol.rho_tol)?;
    checks.extend(suite::patterson_checks(&gaps, tol));
    let sys = build_system(group, f, max_len, tol.rho_tol)?;
    let table = suite::measure_table(&sys, sub_seed(seed, 3))?;
    checks.extend(suite::measure_table_checks(&table, tol));
    let dict = TestDictionary::standard(group)?;
    let us = nonwandering_samples(&sys, 2, sub_seed(seed, 4));
    let mut one: f64 = 0.0;
    let mut flow: f64 = 0.0;
    for u in &us {
        one = one.max((mean(&sys, u, 2.0, |_| 1.0)? - 1.0).abs());
        for j in 1..dict.len() {
            let a = mean_of_pushed(&sys, u, 1.5, 0.7, dict.function(j))?;
            let b = pushed_mean(&sys, u, 1.5, 0.7, dict.function(j))?;
            flow = flow.max((a - b).abs());
        }
    }
    checks.push(Check::at_most("mean of the constant 1", ANCHOR_EQUIDIST, Assertion, one, 1e-12));
    checks.push(Check::at_most(
        "mean of the pushed function equals the pushed mean",
        ANCHOR_MEAN_FLOW,
        Assertion,
        flow,
        tol.mean_identity,
    ));
    let mut artifacts = Artifacts::default();
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok(Outcome {
        checks,
        artifacts,
        pressure: pressure_line(&sys),
    })
}

pub fn run_pressure(group: &SchottkyGroup, f: &Potential, max_len: usize, shift: f64, tol: &Tolerances) -> horolab::Result<Outcome> {
    let (p, checks) = suite::pressure_checks(group, f, max_len, shift, tol)?;
    let mut csv = Csv::new(&["potential", "max_len", "delta", "err", "delta_ratio", "delta_bisect", "trend"]);
    csv.row(&[
        S(&f.id()),
        I(max_len as i64),
        F(p.delta),
        F(p.err),
        F(p.delta_ratio),
        F(p.delta_bisect),
        F(p.trend),
    ]);
    let mut artifacts = Artifacts::default();
    artifacts.add("pressure.csv", csv.finish());
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok(Outcome {
        checks,
        artifacts,
        pressure: Some(PressureLine { delta: p.delta, err: p.err }),
    })
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0 && w[1] == 0.0)
}

/// Boundary measure identities at `max_len` and two shorter truncations.
pub fn run_patterson(group: &SchottkyGroup, f: &Potential, max_len: usize, width: f64, tol: &Tolerances) -> horolab::Result<Outcome> {
    let lens: Vec<usize> = [max_len.saturating_sub(4), max_len.saturating_sub(2), max_len]
        .into_iter()
        .filter(|&l| l >= 6)
        .collect();
    let mut rows = Vec::new();
    for &l in &lens {
        rows.push((l, suite::patterson_gaps(group, f, l, width, tol.rho_tol)?));
    }
    let last = &rows.last().expect("max_len >= 6").1;
    let mut checks = suite::patterson_checks(last, tol);
    let qi: Vec<f64> = rows.iter().map(|r| r.1.quasi_invariance).collect();
    let bc: Vec<f64> = rows.iter().map(|r| r.1.base_change).collect();
    let lens_text = format!("{lens:?}");
    checks.push(Check::holds(
        "quasi-invariance gap decreases with L",
        suite::ANCHOR_LEDRAPPIER,
        Trend,
        decreasing(&qi),
        format!("L {lens_text}: {}", sci(&qi)),
    ));
    checks.push(Check::holds(
        "base change gap decreases with L",
        suite::ANCHOR_BASE_CHANGE,
        Trend,
        decreasing(&bc),
        format!("L {lens_text}: {}", sci(&bc)),
    ));
    let mut csv = Csv::new(&["max_len", "delta", "quasi_invariance_gap", "base_change_gap"]);
    for (l, g) in &rows {
        csv.row(&[I(*l as i64), F(g.delta), F(g.quasi_invariance), F(g.base_change)]);
    }
    let series = vec![
        Series {
            name: "quasi-invariance".into(),
            points: rows.iter().map(|(l, g)| (*l as f64, g.quasi_invariance)).collect(),
        },
        Series {
            name: "base change".into(),
            points: rows.iter().map(|(l, g)| (*l as f64, g.base_change)).collect(),
        },
    ];
    let mut artifacts = Artifacts::default();
    artifacts.add("patterson.csv", csv.finish());
    artifacts.add(
        "patterson.svg",
        svg::chart("boundary measure identities", "word length L", "relative gap", &series, false, true),
    );
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok(Outcome {
        checks,
        artifacts,
        pressure: Some(PressureLine {
            delta: last.delta,
            err: last.err,
        }),
    })
}

/// The dictionary of a run: the configured one, or the standard one.
pub fn dictionary(group: &SchottkyGroup, specs: Option<&[TestFunctionSpec]>) -> horolab::Result<TestDictionary> {
    match specs {
        Some(s) => TestDictionary::new(group, s.to_vec()),
        None => TestDictionary::standard(group),
    }
}

/// Dictionary of the autoadjunction experiment when none is configured.
pub fn autoadjoint_dictionary(group: &SchottkyGroup) -> horolab::Result<TestDictionary> {
    TestDictionary::new(
        group,
        vec![
            TestFunctionSpec::DomainBump {
                center: [0.0, 1.0],
                radius: 1.0,
            },
            TestFunctionSpec::OrbitBump { radius: 0.9, kappa: 0.0 },
        ],
    )
}

/// Horospherical means against the Gibbs targets, plus the flow identity of the means.
#[allow(clippy::too_many_arguments)]
pub fn run_equidist(
    sys: &GibbsSystem,
    dict: &TestDictionary,
    u_count: usize,
    r_grid: &[f64],
    t_grid: &[f64],
    target_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> horolab::Result<(Outcome, EquidistReport)> {
    let targets = gibbs_targets(sys, dict, target_samples, sub_seed(seed, 1))?;
    let us = nonwandering_samples(sys, u_count, sub_seed(seed, 2));
    let rep = equidistribution_experiment(sys, &us, r_grid, dict, &targets)?;

    let mut flow_csv = Csv::new(&["u_index", "r", "t", "psi", "mean_of_pushed", "pushed_mean", "diff"]);
    let mut worst: f64 = 0.0;
    for (i, u) in us.iter().enumerate() {
        for &r in r_grid {
            for &t in t_grid {
                for j in 0..dict.len() {
                    let a = mean_of_pushed(sys, u, r, t, dict.function(j))?;
                    let b = pushed_mean(sys, u, r, t, dict.function(j))?;
                    worst = worst.max((a - b).abs());
                    flow_csv.row(&[I(i as i64), F(r), F(t), S(&dict.name(j)), F(a), F(b), F(a - b)]);
                }
            }
        }
    }

    let mut csv = Csv::new(&["u_index", "r", "psi", "mean", "target", "error"]);
    for row in &rep.rows {
        csv.row(&[I(row.u_index as i64), F(row.r), S(&row.psi), F(row.mean), F(row.target), F(row.error)]);
    }
    let mut sup = Csv::new(&["psi", "r", "sup_error", "decreasing"]);
    for j in 0..dict.len() {
        for (k, &r) in r_grid.iter().enumerate() {
            sup.row(&[S(&dict.name(j)), F(r), F(rep.sup_error[j][k]), B(rep.sup_monotone[j])]);
        }
    }
    let series: Vec<Series> = (0..dict.len())
        .map(|j| Series {
            name: dict.name(j),
            points: r_grid.iter().cloned().zip(rep.sup_error[j].iter().cloned()).collect(),
        })
        .collect();

    let pairs = rep.monotone.iter().flatten().count();
    let good = rep.monotone.iter().flatten().filter(|&&b| b).count();
    let sup_good = rep.sup_monotone.iter().filter(|&&b| b).count();
    let checks = vec![
        Check::at_most("mean of pushed equals pushed mean", ANCHOR_MEAN_FLOW, Assertion, worst, tol.mean_identity),
        Check::holds(
            "errors decrease along the radius grid for every u",
            ANCHOR_EQUIDIST,
            Trend,
            good == pairs,
            format!("{good}/{pairs} (u, psi) curves decreasing"),
        ),
        Check::at_most("final error", ANCHOR_EQUIDIST, Trend, rep.final_error(), tol.equidist_final),
        Check::holds(
            "sup over u of the error decreases",
            ANCHOR_UNIFORM,
            Trend,
            sup_good == dict.len(),
            format!("{sup_good}/{} functions decreasing", dict.len()),
        ),
    ];
    let mut artifacts = Artifacts::default();
    artifacts.add("equidist.csv", csv.finish());
    artifacts.add("equidist_sup.csv", sup.finish());
    artifacts.add("mean_flow.csv", flow_csv.finish());
    artifacts.add(
        "equidist.svg",
        svg::chart("sup over u of |M_{r,u}(psi) - m(psi)|", "r", "error", &series, true, true),
    );
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok((
        Outcome {
            checks,
            artifacts,
            pressure: pressure_line(sys),
        },
        rep,
    ))
}

pub fn run_growth(sys: &GibbsSystem, u_count: usize, r_grid: &[f64], seed: u64, tol: &Tolerances) -> horolab::Result<(Outcome, Vec<GrowthFit>)> {
    let us = nonwandering_samples(sys, u_count, sub_seed(seed, 2));
    let fits = us
        .iter()
        .map(|u| ball_growth_fit(sys, u, r_grid))
        .collect::<horolab::Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["u_index", "r", "mass"]);
    let mut fit_csv = Csv::new(&["u_index", "slope", "intercept", "bound"]);
    let mut checks = Vec::new();
    for (i, fit) in fits.iter().enumerate() {
        for (r, m) in fit.radii.iter().zip(&fit.masses) {
            csv.row(&[I(i as i64), F(*r), F(*m)]);
        }
        fit_csv.row(&[I(i as i64), F(fit.slope), F(fit.intercept), F(fit.bound)]);
        checks.push(
            Check::at_most(
                &format!("growth exponent of u{i}"),
                ANCHOR_GROWTH,
                Assertion,
                fit.slope,
                fit.bound + tol.growth_slack,
            )
            .with_detail(format!("bound 2 delta + 4 |f| = {:.4}", fit.bound)),
        );
    }
    let series: Vec<Series> = fits
        .iter()
        .enumerate()
        .map(|(i, fit)| Series {
            name: format!("u{i}"),
            points: fit.radii.iter().cloned().zip(fit.masses.iter().cloned()).collect(),
        })
        .collect();
    let mut artifacts = Artifacts::default();
    artifacts.add("growth.csv", csv.finish());
    artifacts.add("growth_fit.csv", fit_csv.finish());
    artifacts.add("growth.svg", svg::chart("leaf ball mass", "r", "mass", &series, true, true));
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok((
        Outcome {
            checks,
            artifacts,
            pressure: pressure_line(sys),
        },
        fits,
    ))
}

/// Results of the covering and averaging-sequence experiments.
pub struct StarResults {
    pub vitali: Vec<Vec<usize>>,
    pub balls: Vec<Vec<StarRow>>,
    pub sets: Vec<SetSequenceReport>,
}

#[allow(clippy::too_many_arguments)]
pub fn run_star(
    sys: &GibbsSystem,
    dict: &TestDictionary,
    u_count: usize,
    radii: &[f64],
    depths: &[usize],
    target_samples: usize,
    l_cut: usize,
    seed: u64,
    tol: &Tolerances,
) -> horolab::Result<(Outcome, StarResults)> {
    let us = nonwandering_samples(sys, u_count, sub_seed(seed, 2));
    let targets = gibbs_targets(sys, dict, target_samples, sub_seed(seed, 1))?;
    let mut vitali = Vec::new();
    let mut vit_csv = Csv::new(&["u_index", "r", "cover_count"]);
    for (i, u) in us.iter().enumerate() {
        let mut row = Vec::new();
        for &r in radii {
            let n = vitali_check(sys, u, r, 10_000)?;
            vit_csv.row(&[I(i as i64), F(r), I(n as i64)]);
            row.push(n);
        }
        vitali.push(row);
    }
    let all: Vec<usize> = vitali.iter().flatten().cloned().collect();
    let spread = all.iter().max().unwrap_or(&0) - all.iter().min().unwrap_or(&0);

    let mut balls = Vec::new();
    let mut star_csv = Csv::new(&[
        "u_index",
        "r",
        "mass",
        "boundary_mass",
        "ratio",
        "full_tiles",
        "proper_tiles",
        "tile_extent",
        "annulus_bound",
    ]);
    let mut annulus_ok = true;
    for (i, u) in us.iter().enumerate() {
        let rows = star_check_balls(sys, u, radii, l_cut)?;
        for r in &rows {
            let bound = r.annulus_bound.unwrap_or(f64::NAN);
            annulus_ok &= r.boundary_mass <= bound * (1.0 + 1e-12);
            star_csv.row(&[
                I(i as i64),
                F(r.label),
                F(r.mass),
                F(r.boundary_mass),
                F(r.ratio),
                I(r.full_tiles as i64),
                I(r.proper_tiles as i64),
                F(r.tile_extent),
                F(bound),
            ]);
        }
        balls.push(rows);
    }
    let trend_ok = balls.iter().filter(|rows| star_trend(rows)).count();

    let labels: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let mut sets = Vec::new();
    let mut sets_csv = Csv::new(&["u_index", "depth", "psi", "mean", "target", "error", "boundary_ratio"]);
    for (i, u) in us.iter().enumerate() {
        let leaf = Leaf::new(sys, u, f64::INFINITY);
        let family = cylinder_sets(sys, &leaf, depths)?;
        let rep = averaging_sequence_experiment(sys, &leaf, &family, &labels, dict, &targets, l_cut)?;
        for (n, &d) in depths.iter().enumerate() {
            for j in 0..dict.len() {
                sets_csv.row(&[
                    I(i as i64),
                    I(d as i64),
                    S(&dict.name(j)),
                    F(rep.means[j][n]),
                    F(targets[j]),
                    F(rep.errors[j][n]),
                    F(rep.star[n].ratio),
                ]);
            }
        }
        sets.push(rep);
    }
    let sets_decreasing = sets.iter().filter(|r| r.all_decreasing()).count();
    let sets_final = sets.iter().map(|r| r.final_error()).fold(0.0, f64::max);

    let n = us.len();
    let checks = vec![
        Check::at_most("cover count spread across u and r", ANCHOR_VITALI, Assertion, spread as f64, tol.vitali_spread as f64)
            .with_detail(format!("counts {all:?}")),
        Check::holds(
            "boundary mass within the annulus around the sphere",
            ANCHOR_STAR,
            Assertion,
            annulus_ok,
            String::new(),
        ),
        Check::holds(
            "boundary mass ratio decreases along the radii",
            ANCHOR_STAR,
            Trend,
            trend_ok == n,
            format!("{trend_ok}/{n} vectors"),
        ),
        Check::holds(
            "cylinder set errors decrease with depth",
            ANCHOR_SETS,
            Trend,
            sets_decreasing == n,
            format!("{sets_decreasing}/{n} vectors"),
        ),
        Check::at_most("cylinder set final error", ANCHOR_SETS, Trend, sets_final, tol.sets_final),
    ];

    let ratio_series: Vec<Series> = balls
        .iter()
        .enumerate()
        .map(|(i, rows)| Series {
            name: format!("u{i}"),
            points: rows.iter().map(|r| (r.label, r.ratio)).collect(),
        })
        .collect();
    let set_series: Vec<Series> = sets
        .iter()
        .enumerate()
        .map(|(i, rep)| Series {
            name: format!("u{i}"),
            points: labels
                .iter()
                .enumerate()
                .map(|(n, &d)| (d, rep.errors.iter().map(|e| e[n]).fold(0.0, f64::max)))
                .collect(),
        })
        .collect();
    let mut artifacts = Artifacts::default();
    artifacts.add("vitali.csv", vit_csv.finish());
    artifacts.add("star.csv", star_csv.finish());
    artifacts.add("sets.csv", sets_csv.finish());
    artifacts.add(
        "star.svg",
        svg::chart("boundary mass ratio of leaf balls", "r", "ratio", &ratio_series, true, false),
    );
    artifacts.add(
        "sets.svg",
        svg::chart("max error over the dictionary on cylinder sets", "depth", "error", &set_series, false, true),
    );
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok((
        Outcome {
            checks,
            artifacts,
            pressure: pressure_line(sys),
        },
        StarResults { vitali, balls, sets },
    ))
}

pub fn run_autoadjoint(
    sys: &GibbsSystem,
    dict: &TestDictionary,
    radii: &[f64],
    samples: usize,
    step: f64,
    seed: u64,
    tol: &Tolerances,
) -> horolab::Result<(Outcome, Vec<AutoadjointReport>)> {
    let mut csv = Csv::new(&["r", "psi", "lhs", "rhs", "gap", "samples", "level_step"]);
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        for j in 0..dict.len() {
            let rep = autoadjonction_check_with(sys, r, dict.function(j), samples, sub_seed(seed, 10 + k as u64), step)?;
            csv.row(&[
                F(r),
                S(&dict.name(j)),
                F(rep.lhs),
                F(rep.rhs),
                F(rep.gap),
                I(rep.samples as i64),
                F(step),
            ]);
            checks.push(Check::at_most(
                &format!("autoadjunction gap, r = {r:.4}, {}", dict.name(j)),
                ANCHOR_AUTOADJOINT,
                Assertion,
                rep.gap,
                tol.autoadjoint,
            ));
            reports.push(rep);
        }
    }
    let mut artifacts = Artifacts::default();
    artifacts.add("autoadjoint.csv", csv.finish());
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok((
        Outcome {
            checks,
            artifacts,
            pressure: pressure_line(sys),
        },
        reports,
    ))
}

pub fn run_cells(sys: &GibbsSystem, u_count: usize, eps: f64, seed: u64, tol: &Tolerances) -> horolab::Result<(Outcome, Vec<CellReport>)> {
    let dict = TestDictionary::standard(&sys.group)?;
    let us = nonwandering_samples(sys, u_count, sub_seed(seed, 2));
    let mut csv = Csv::new(&["u_index", "eps", "radius", "samples", "density_min", "density_max", "max_shift"]);
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let (lo, hi) = ((-eps).exp(), eps.exp());
    for (i, u) in us.iter().enumerate() {
        let rep = cell_lemmas_check(sys, u, eps, dict.function(1), tol.cell_floor)?;
        csv.row(&[
            I(i as i64),
            F(eps),
            F(rep.radius.unwrap_or(f64::NAN)),
            I(rep.samples as i64),
            F(rep.density_min),
            F(rep.density_max),
            F(rep.max_shift),
        ]);
        let found = rep.radius.is_some_and(|r| r >= tol.cell_floor);
        checks.push(Check::holds(
            &format!("cell radius for u{i}"),
            ANCHOR_CELL_INCLUSION,
            Assertion,
            found,
            format!("radius {:?}, tried {}", rep.radius, rep.tried.len()),
        ));
        checks.push(Check::holds(
            &format!("cell density within exp(+-eps) for u{i}"),
            ANCHOR_CELL_DENSITY,
            Assertion,
            found && rep.density_min >= lo && rep.density_max <= hi,
            format!("[{:.4}, {:.4}]", rep.density_min, rep.density_max),
        ));
        checks.push(Check::holds(
            &format!("cell sandwich for u{i}"),
            ANCHOR_CELL_SANDWICH,
            Assertion,
            found,
            format!("{} samples", rep.samples),
        ));
        reports.push(rep);
    }
    let mut artifacts = Artifacts::default();
    artifacts.add("cells.csv", csv.finish());
    artifacts.add("checks.csv", checks_csv(&checks));
    Ok((
        Outcome {
            checks,
            artifacts,
            pressure: pressure_line(sys),
        },
        reports,
    ))
}

pub fn run_render(group: &SchottkyGroup, orbit_len: usize, disk_depth: usize) -> Outcome {
    let limit = svg::limit_set(group, disk_depth);
    let orbit = svg::orbit(group, orbit_len);
    let d1 = limit.matches("class=\"disk d1\"").count();
    let points = orbit.matches("class=\"orbit ").count();
    let expected_points = word_count(group.rank(), orbit_len);
    let checks = vec![
        Check::holds(
            "one depth-1 disk per generator and inverse",
            ANCHOR_RENDER,
            Assertion,
            d1 == 2 * group.rank(),
            format!("{d1} disks"),
        ),
        Check::holds(
            "one orbit point per reduced word",
            ANCHOR_RENDER,
            Assertion,
            points == expected_points && enumerate_words(group, orbit_len).count() == expected_points,
            format!("{points} points, {expected_points} words"),
        ),
    ];
    let mut artifacts = Artifacts::default();
    artifacts.add("limit_set.svg", limit);
    artifacts.add("orbit.svg", orbit);
    artifacts.add("domain.svg", svg::domain(group));
    artifacts.add("checks.csv", checks_csv(&checks));
    Outcome {
        checks,
        artifacts,
        pressure: None,
    }
}

/// Runs the experiment of `cfg` and returns its summary and files.
pub fn execute(cfg: &ExperimentConfig, res: &Resolved) -> Result<(Summary, Artifacts), RunError> {
    let tol = &cfg.tolerances;
    let (g, f, l, seed) = (&res.group, &res.potential, cfg.max_len, cfg.seed);
    let sys = || build_system(g, f, l, tol.rho_tol);
    let outcome = match &cfg.experiment {
        Experiment::Checks { samples } => run_checks(g, f, l, *samples, seed, tol)?,
        Experiment::Pressure { shift } => run_pressure(g, f, l, *shift, tol)?,
        Experiment::Patterson { bump_width } => run_patterson(g, f, l, *bump_width, tol)?,
        Experiment::Equidistribution {
            u_count,
            r_grid,
            t_grid,
            dictionary: d,
            target_samples,
        } => {
            let dict = dictionary(g, d.as_deref())?;
            run_equidist(&sys()?, &dict, *u_count, r_grid, t_grid, *target_samples, seed, tol)?.0
        }
        Experiment::Growth { u_count, r_grid } => run_growth(&sys()?, *u_count, r_grid, seed, tol)?.0,
        Experiment::Star {
            u_count,
            radii,
            depths,
            dictionary: d,
            target_samples,
            l_cut,
        } => {
            let dict = dictionary(g, d.as_deref())?;
            run_star(&sys()?, &dict, *u_count, radii, depths, *target_samples, *l_cut, seed, tol)?.0
        }
        Experiment::Autoadjoint {
            radii,
            samples,
            dictionary: d,
        } => {
            let dict = match d {
                Some(specs) => TestDictionary::new(g, specs.clone())?,
                None => autoadjoint_dictionary(g)?,
            };
            run_autoadjoint(&sys()?, &dict, radii, *samples, cfg.quad_step, seed, tol)?.0
        }
        Experiment::Cells { u_count, eps } => run_cells(&sys()?, *u_count, *eps, seed, tol)?.0,
        Experiment::Render { orbit_len, disk_depth } => run_render(g, *orbit_len, *disk_depth),
    };
    let Outcome {
        checks,
        mut artifacts,
        pressure,
    } = outcome;
    let config_text = toml::to_string(cfg).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    artifacts.add("config.toml", config_text);
    let mut files = artifacts.names();
    files.push(SUMMARY_FILE.to_string());
    files.sort();
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        experiment: cfg.experiment.kind().to_string(),
        seed,
        max_len: l,
        potential: f.id(),
        pressure: pressure.filter(|p| p.delta.is_finite()),
        checks,
        files,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    artifacts.add(SUMMARY_FILE, json);
    Ok((summary, artifacts))
}

/// Runs `cfg` and writes its artifacts below `root`.
pub fn run_to_disk(cfg: &ExperimentConfig, root: &Path) -> Result<Summary, RunError> {
    let res = cfg.validate()?;
    let (summary, artifacts) = execute(cfg, &res)?;
    artifacts.write_all(&cfg.output_dir(root))?;
    Ok(summary)
}
