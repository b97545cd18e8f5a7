//! One integration test per acceptance criterion; each prints a PASS line.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use num_traits::Signed;

use hegemon::analytics::{
    build_special_world, delta_star, k_of_g, lambda_max, phase_sweep, sigma_min, thresholds,
    CaseSpec, IPrime, Order, SpecialCaseSpec, SweepAxis, SweepResult, SweepSpec,
};
use hegemon::equilibrium::{follower_best_response, solve_spne};
use hegemon::exec;
use hegemon::model::{Location, World};
use hegemon::oracle::{run_campaign, CampaignConfig, GenConfig};
use hegemon::pipeline::{
    read_countries, read_globals, run_simulation, write_memberships, write_summary, Mode,
    SimConfig,
};

const STEP: f64 = 1e-3;
const STEP_TOL: f64 = STEP + 1e-9;

fn loc(n: i64, d: i64) -> Location {
    Location::new(n, d).unwrap()
}

fn smalls(range: std::ops::RangeInclusive<u32>) -> BTreeSet<u32> {
    range.collect()
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn g_sweep(n: u32, case: CaseSpec, min: f64, max: f64) -> SweepSpec {
    SweepSpec { n, case, axis: SweepAxis::G { min, max, step: STEP } }
}

static SWEEP51: OnceLock<(SweepResult, Duration)> = OnceLock::new();

fn sweep51() -> &'static (SweepResult, Duration) {
    SWEEP51.get_or_init(|| {
        let spec = g_sweep(51, CaseSpec::Symmetric { g: 0.0 }, 0.0, 0.2);
        let started = Instant::now();
        let res = exec::with_threads(Some(1), || phase_sweep(&spec)).unwrap().unwrap();
        (res, started.elapsed())
    })
}

static SWEEP31: OnceLock<SweepResult> = OnceLock::new();

fn sweep31() -> &'static SweepResult {
    SWEEP31.get_or_init(|| {
        phase_sweep(&g_sweep(31, CaseSpec::Asymmetric { g: 0.0 }, 0.0, 1.0)).unwrap()
    })
}

#[test]
fn criterion_1_worked_example_equilibrium() {
    let started = Instant::now();
    let w = World::from_json(&std::fs::read_to_string(data("three_small.json")).unwrap()).unwrap();
    let out = solve_spne(&w).unwrap();
    assert_eq!(out.ell_a, Some(loc(1, 2)));
    assert_eq!(out.ell_b, None);
    assert_eq!(out.club_a, smalls(1..=3));
    assert!(out.club_b.is_empty());
    assert_eq!(out.payoff_a, 0.25);

    let br = follower_best_response(&w, Some(loc(1, 4))).unwrap();
    assert_eq!(br.ell_b, Some(loc(1, 2)));
    assert_eq!(br.outcome.club_b, smalls(1..=3));
    assert!(br.outcome.club_a.is_empty());

    let row = out
        .response_table
        .iter()
        .find(|r| r.ell_a == Some(loc(1, 4)))
        .expect("response table covers 1/4");
    assert_eq!(row.ell_b, Some(loc(1, 2)));
    assert_eq!(row.size_b, 4);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("PASS criterion 1: worked-example SPNE is (1/2, no club, all three in A, payoff 1/4)");
}

#[test]
fn criterion_2_symmetric_phase_diagram() {
    let n = 51.0;
    let g_u = 2.0 * n / ((n + 3.0) * (n - 1.0));
    let g_b = 4.0 * n / ((n + 3.0) * (n + 1.0));
    let g_b_h = 4.0 * n / ((n + 1.0) * (n + 1.0));

    let (res, elapsed) = sweep51();
    assert!(res.warnings.is_empty(), "{:?}", res.warnings);
    assert_eq!(res.points.len(), 201);

    let first_formed = res.points.iter().find(|p| p.order != Order::NoHegemon).unwrap();
    assert_eq!(first_formed.order, Order::UnipolarA);
    assert!((first_formed.x - g_u).abs() <= STEP_TOL, "onset {} vs {}", first_formed.x, g_u);
    assert_eq!(first_formed.ell_a, Some(loc(25, 51)));

    let first_bipolar = res.points.iter().find(|p| p.order == Order::Bipolar).unwrap();
    assert!((first_bipolar.x - g_b).abs() <= STEP_TOL, "bipolar {} vs {}", first_bipolar.x, g_b);

    for p in &res.points {
        if p.x > g_b + STEP_TOL && p.x < g_b_h - STEP_TOL {
            assert_eq!(p.ell_a, Some(loc(1, 51)), "at g={}", p.x);
            assert_eq!(p.ell_b, Some(loc(50, 51)), "at g={}", p.x);
        }
        if p.x >= g_b_h + STEP_TOL {
            assert_eq!(p.ell_a, Some(loc(0, 1)), "at g={}", p.x);
            assert_eq!(p.ell_b, Some(loc(1, 1)), "at g={}", p.x);
        }
        if p.order == Order::Bipolar {
            assert_eq!((p.size_a, p.size_b), (26, 26), "at g={}", p.x);
        }
    }

    assert!(*elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!("PASS criterion 2: n=51 transitions and locations match g_U, g_B, g_B^h within one step");
}

#[test]
fn criterion_3_nonmonotone_deterrence() {
    let n = 51.0;
    let g_u = 2.0 * n / ((n + 3.0) * (n - 1.0));
    let g_b = 4.0 * n / ((n + 3.0) * (n + 1.0));
    let (res, _) = sweep51();

    let band: Vec<_> = res
        .points
        .iter()
        .filter(|p| p.order == Order::UnipolarA && p.x >= g_u - 1e-9 && p.x <= g_b + 1e-9)
        .collect();
    assert!(band.len() >= 3, "only {} unipolar points", band.len());

    let ells: Vec<Ratio<i64>> = band.iter().map(|p| p.ell_a.unwrap().ratio()).collect();
    let extremum = (1..ells.len() - 1).any(|i| {
        let before = ells[i] - ells[i - 1];
        let after = ells[i + 1] - ells[i];
        (before > Ratio::from_integer(0)) != (after > Ratio::from_integer(0))
            && before != Ratio::from_integer(0)
            && after != Ratio::from_integer(0)
    });
    assert!(extremum, "ell_a(g) is monotone across the band: {ells:?}");

    let half = Ratio::new(1, 2);
    let deterred = band.iter().any(|p| {
        let with_b = (p.ell_a.unwrap().ratio() - half).abs();
        let without = (p.ell_a_without_b.unwrap().ratio() - half).abs();
        with_b < without
    });
    assert!(deterred, "no point is closer to 1/2 than the no-follower optimum");
    println!("PASS criterion 3: ell_a(g) has an interior extremum and moves toward 1/2 under threat");
}

#[test]
fn criterion_4_asymmetric_phase_diagram() {
    let n = 31u32;
    let nf = f64::from(n);
    let g_eq_lo = (nf - 1.0) / (2.0 * nf) - 2.0 / (nf + 3.0) + 2.0 / (nf + 1.0);
    let g_eq_hi = (nf + 1.0) / (2.0 * nf) + 2.0 / (nf + 3.0) - 2.0 / (nf + 1.0);
    let ds = delta_star(n);
    assert_eq!(ds, 5);
    let sigma = |k: f64| k / nf + 1.0 / (k + 1.0) - 1.0 / (nf + 1.0 - k);
    let g_lo_closed = nf / (nf + f64::from(ds) + 1.0) * sigma(f64::from(ds) + 1.0);
    let g_hi_closed = [ds, ds + 1]
        .iter()
        .map(|&k| {
            let kf = f64::from(k);
            nf / (nf + kf) * (kf / (kf + 1.0) + 1.0 / (nf - 1.0))
        })
        .fold(f64::MIN, f64::max);

    let res = sweep31();
    assert!(res.warnings.is_empty(), "{:?}", res.warnings);
    assert_eq!(res.points.len(), 1001);

    let eq: Vec<_> = res
        .points
        .iter()
        .filter(|p| p.order == Order::Bipolar && p.size_a == p.size_b)
        .collect();
    let eq_lo = eq.first().unwrap().x;
    let eq_hi = eq.last().unwrap().x;
    assert!((eq_lo - g_eq_lo).abs() <= STEP_TOL, "{eq_lo} vs {g_eq_lo}");
    assert!((eq_hi - g_eq_hi).abs() <= STEP_TOL, "{eq_hi} vs {g_eq_hi}");
    assert!((eq_lo + eq_hi - 1.0).abs() <= 2.0 * STEP_TOL);

    let first_bipolar = res.points.iter().position(|p| p.order == Order::Bipolar).unwrap();
    let last_bipolar = res.points.iter().rposition(|p| p.order == Order::Bipolar).unwrap();
    let underline = res.points[first_bipolar].x;
    let overline = res.points[last_bipolar + 1].x;
    assert!((underline - g_lo_closed).abs() <= STEP_TOL, "{underline} vs {g_lo_closed}");
    assert!((overline - g_hi_closed).abs() <= STEP_TOL, "{overline} vs {g_hi_closed}");

    for p in &res.points[..first_bipolar] {
        assert_eq!(p.order, Order::UnipolarB, "at g={}", p.x);
        assert!(p.size_b >= 30, "at g={}", p.x);
    }
    for p in &res.points[last_bipolar + 1..] {
        assert_eq!(p.order, Order::UnipolarA, "at g={}", p.x);
        assert!(p.size_a >= 30, "at g={}", p.x);
    }

    let solve_at = |g: f64| {
        let spec = SpecialCaseSpec { n, case: CaseSpec::Asymmetric { g } };
        solve_spne(&build_special_world(&spec).unwrap()).unwrap()
    };
    let at_zero = solve_at(0.0);
    assert_eq!(at_zero.ell_a, None);
    assert_eq!(at_zero.club_b, smalls(1..=30));
    let at_one = solve_at(1.0);
    assert_eq!(at_one.ell_b, None);
    assert_eq!(at_one.club_a, smalls(1..=30));
    let last_ub = solve_at(res.points[first_bipolar - 1].x);
    assert_eq!(last_ub.club_b, smalls(2..=30), "all but country 1");
    assert_eq!(last_ub.ell_a, None);
    let first_ua = solve_at(overline);
    assert_eq!(first_ua.club_a, smalls(1..=29), "all but country 30");
    assert_eq!(first_ua.ell_b, None);

    println!("PASS criterion 4: n=31 equal-size and unipolar boundaries match the closed forms");
}

#[test]
fn criterion_5_oracle_equivalence_campaign() {
    let started = Instant::now();
    for (i, n_small) in [3u32, 4, 5, 6].into_iter().enumerate() {
        let cfg = CampaignConfig {
            instances: 250,
            schedules: 100,
            seed: 0xACCE5 + i as u64,
            gen: GenConfig { n_small, ..GenConfig::default() },
        };
        let report = run_campaign(&cfg).unwrap();
        assert_eq!(report.cores_checked, 250, "n_small={n_small}");
        assert!(report.failures.is_empty(), "n_small={n_small}: {:?}", report.failures);
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    println!("PASS criterion 5: 1000 instances match both cores; 100 schedules each agree");
}

#[test]
fn criterion_6_measure_case() {
    let n = 31u32;
    let t = thresholds(n).unwrap();
    assert!((t.g_star - 31.0 / 136.0).abs() < 1e-12);
    assert!(0.9 > t.g_star);

    let cap = k_of_g(n, 0.9).unwrap();
    assert_eq!(cap, 16);

    let mut all_points = Vec::new();

    let grow = phase_sweep(&SweepSpec {
        n,
        case: CaseSpec::Measure { g: 0.9, i_prime: IPrime::default(), m: 1.0 },
        axis: SweepAxis::M { values: (1..=100).map(f64::from).collect() },
    })
    .unwrap();
    assert!(grow.warnings.is_empty(), "{:?}", grow.warnings);
    assert_eq!(grow.points.len(), 100);
    for pair in grow.points.windows(2) {
        assert!(pair[0].size_a <= pair[1].size_a, "delta_a dips at m={}", pair[1].x);
    }
    for p in &grow.points {
        assert_eq!(p.ell_a, Some(loc(0, 1)), "at m={}", p.x);
        assert_eq!(p.ell_b, Some(loc(1, 1)), "at m={}", p.x);
        assert!(p.size_a - 1 <= cap as usize, "club {} exceeds k_of_g at m={}", p.size_a - 1, p.x);
    }
    all_points.extend(grow.points.iter().cloned());

    let one = Ratio::from_integer(1);
    for g in [0.13, 0.18, 0.22] {
        assert!(t.g_b_h <= g && g <= t.g_star, "g={g} outside [g_B^h, g*]");
        let band = phase_sweep(&SweepSpec {
            n,
            case: CaseSpec::Measure { g, i_prime: IPrime::default(), m: 1.0 },
            axis: SweepAxis::M {
                values: vec![1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
            },
        })
        .unwrap();
        assert!(band.warnings.is_empty(), "{:?}", band.warnings);
        for p in &band.points {
            assert!(p.ell_b.is_some(), "B abandons at g={g} m={}", p.x);
            assert!(p.size_b >= 2, "B's club empties at g={g} m={}", p.x);
        }
        let defended = band.points.iter().any(|p| p.ell_b.unwrap().ratio() < one);
        assert!(defended, "B never relocates inward at g={g}");
        all_points.extend(band.points);
    }

    for p in &all_points {
        if p.size_a >= 16 {
            assert_eq!(p.ell_a, Some(loc(0, 1)), "large club away from home at x={}", p.x);
        }
    }
    println!("PASS criterion 6: measure growth is monotone, capped by k_of_g, and B defends inward");
}

#[test]
fn criterion_7_stronghold_index_extremes() {
    for n in (13..=301).step_by(2) {
        let ds = delta_star(n);
        let float_ds = ((1.0 + 4.0 * f64::from(n)).sqrt() - 1.0) / 2.0;
        assert_eq!(ds, float_ds.floor() as u32, "delta_star formula at n={n}");
        let smin = sigma_min(n).unwrap();
        assert!(smin == ds || smin == ds + 1, "sigma argmin {smin} at n={n}, delta*={ds}");
        assert_eq!(lambda_max(n).unwrap(), ds, "lambda argmax at n={n}");
    }
    println!("PASS criterion 7: sigma/lambda brute-force extremes match delta* for odd n in [13, 301]");
}

#[test]
fn criterion_8_pipeline_goldens_and_invariants() {
    let countries = read_countries(std::path::Path::new(&data("countries.csv"))).unwrap();
    let globals = read_globals(std::path::Path::new(&data("globals.csv"))).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let cfg = |mode| SimConfig { mode, grid_steps: 100, ..SimConfig::default() };
    let golden = |mode: &str, name: &str| {
        std::fs::read_to_string(data(&format!("golden/{mode}/{name}"))).unwrap()
    };

    let sym = run_simulation(&cfg(Mode::Symmetric), &countries, &globals).unwrap();
    let asym = run_simulation(&cfg(Mode::Asymmetric), &countries, &[]).unwrap();
    for (label, report) in [("symmetric", &sym), ("asymmetric", &asym)] {
        let m_path = dir.path().join(format!("{label}-m.csv"));
        let s_path = dir.path().join(format!("{label}-s.csv"));
        write_memberships(&m_path, &report.memberships).unwrap();
        write_summary(&s_path, &report.summary).unwrap();
        assert_eq!(
            std::fs::read_to_string(&m_path).unwrap(),
            golden(label, "memberships.csv"),
            "{label} memberships drifted"
        );
        assert_eq!(
            std::fs::read_to_string(&s_path).unwrap(),
            golden(label, "summary.csv"),
            "{label} summary drifted"
        );
    }

    let mut scaled = countries.clone();
    for r in &mut scaled {
        r.gdp = r.gdp.map(|g| g * 1000.0);
    }
    let sym_scaled = run_simulation(&cfg(Mode::Symmetric), &scaled, &globals).unwrap();
    assert_eq!(sym_scaled.memberships, sym.memberships, "GDP units leak into memberships");

    let club_of = |code: &str| -> BTreeSet<String> {
        asym.memberships
            .iter()
            .filter(|m| m.code == code)
            .map(|m| m.club.to_string())
            .collect()
    };
    assert_eq!(club_of("MEX"), BTreeSet::from(["none".to_string()]), "(0,0) must stay out");
    assert_eq!(club_of("GBR"), BTreeSet::from(["a".to_string()]), "(1,0) must join A");
    assert_eq!(club_of("IND"), BTreeSet::from(["b".to_string()]), "(0,1) must join B");

    for report in [&sym, &asym] {
        for row in &report.summary {
            let year_rows: Vec<_> =
                report.memberships.iter().filter(|m| m.year == row.year).collect();
            let count = |club: &str| year_rows.iter().filter(|m| m.club.to_string() == club).count();
            assert_eq!(count("a"), row.count_a, "year {}", row.year);
            assert_eq!(count("b"), row.count_b, "year {}", row.year);
            assert_eq!(
                count("a") + count("b") + count("none"),
                year_rows.len(),
                "year {}",
                row.year
            );
            assert!(row.gdp_a >= row.gdp_a_excl && row.gdp_b >= row.gdp_b_excl, "year {}", row.year);
        }
        let years: BTreeSet<i32> = report.memberships.iter().map(|m| m.year).collect();
        assert_eq!(years.len(), report.summary.len());
    }

    println!("PASS criterion 8: goldens match byte for byte; unit, missing-data, and partition rules hold");
}
