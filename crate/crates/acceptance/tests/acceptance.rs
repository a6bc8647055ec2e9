//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use vecdebias_core::comparison::{compare_subspaces, format_table, ComparisonConfig};
use vecdebias_core::linalg::{dot, norm};
use vecdebias_core::metrics::{ect_score, weat_effect_size};
use vecdebias_core::subspace::{golden_section_search, identify_two_means, LinearSvm, SvmConfig};
use vecdebias_core::transforms::{hard_debias, inlp, linear_projection, oscar_target, HdTargets, InlpConfig, StepOp};
use vecdebias_core::view::CameraKind;
use vecdebias_core::{build_trace, presets, run_job, PairedWordSet, Snapshot, TextFormat, WordSet};
use vecdebias_server::{router, AppState, Registry};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);
type Rows = Vec<Vec<f64>>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- embeddings

struct Bundled {
    snapshot: Snapshot,
    name: String,
    registry_name: &'static str,
    glove_path: Option<PathBuf>,
    /// GloVe vocabularies are lowercase.
    lowercase: bool,
}

fn load_file(path: &std::path::Path, format: TextFormat) -> Snapshot {
    let file = std::fs::File::open(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Snapshot::load(std::io::BufReader::new(file), format, None).expect("embedding loads")
}

fn fixture() -> &'static Snapshot {
    static S: OnceLock<Snapshot> = OnceLock::new();
    S.get_or_init(|| load_file(&presets::fixture_path(), TextFormat::GloveText))
}

fn bundled() -> &'static Bundled {
    static B: OnceLock<Bundled> = OnceLock::new();
    B.get_or_init(|| match std::env::var_os("VECDEBIAS_GLOVE50") {
        Some(p) => {
            let path = PathBuf::from(p);
            Bundled {
                snapshot: load_file(&path, TextFormat::GloveText),
                name: format!("GloVe 50-d ({})", path.display()),
                registry_name: "glove50-default",
                glove_path: Some(path),
                lowercase: true,
            }
        }
        None => Bundled {
            snapshot: load_file(&presets::fixture_path(), TextFormat::GloveText),
            name: "w2v-gnews fixture (VECDEBIAS_GLOVE50 unset)".into(),
            registry_name: "w2v-gnews-fixture",
            glove_path: None,
            lowercase: false,
        },
    })
}

fn words(label: &str, tokens: &[&str], lowercase: bool) -> WordSet {
    let t: Vec<String> = tokens
        .iter()
        .map(|t| if lowercase { t.to_lowercase() } else { t.to_string() })
        .collect();
    WordSet::new(label, t).expect("valid list")
}

fn recase(set: WordSet, lowercase: bool) -> WordSet {
    let t: Vec<&str> = set.iter().collect();
    words(&set.label, &t, lowercase)
}

fn ws(tokens: &[&str]) -> WordSet {
    WordSet::new("", tokens.iter().copied()).unwrap()
}

fn random_snapshot(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Snapshot {
    let tokens = (0..n).map(|i| format!("w{i}")).collect();
    let data = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    Snapshot::new(tokens, data, d).unwrap()
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = norm(&v);
    v.iter().map(|x| x / n).collect()
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

// ---------------------------------------------------------------- criteria

fn lp_nullity_and_idempotence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = random_snapshot(&mut rng, 1000, 50);
    let v = random_unit(&mut rng, 50);
    let none = ws(&[]);
    let t = Instant::now();
    let once = linear_projection(&s, &v, &none).map_err(fail)?;
    let elapsed = t.elapsed();
    let worst = once.output.rows().map(|(_, x)| dot(x, &v).abs()).fold(0.0, f64::max);
    ensure!(worst <= 1e-9, "max |<x',v>| = {worst:e}");
    let twice = linear_projection(&once.output, &v, &none).map_err(fail)?;
    ensure!(
        same_bits(once.output.data(), twice.output.data()),
        "second projection changed bits"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "1000x50, max |<x',v>| = {worst:.1e}, re-apply bit-identical, {elapsed:.1?}"
    ))
}

fn check_hd(s: &Snapshot, v: &[f64], definitional: &WordSet, eq: &PairedWordSet) -> Result<(f64, f64), String> {
    let r = hard_debias(s, v, definitional, eq, &HdTargets::All).map_err(fail)?;
    let o = &r.output;
    let (mut gap_err, mut mid_err) = (0.0f64, 0.0f64);
    let tokens: Vec<&str> = eq.tokens().collect();
    for pair in tokens.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        let before = (dot(s.vector(a).unwrap(), v) - dot(s.vector(b).unwrap(), v)).abs();
        let (ao, bo) = (o.vector(a).unwrap(), o.vector(b).unwrap());
        let after = (dot(ao, v) - dot(bo, v)).abs();
        gap_err = gap_err.max((after - before).abs());
        let mid: Vec<f64> = ao.iter().zip(bo).map(|(x, y)| (x + y) / 2.0).collect();
        mid_err = mid_err.max(dot(&mid, v).abs());
    }
    for w in definitional.iter() {
        ensure!(
            same_bits(o.vector(w).unwrap(), s.vector(w).unwrap()),
            "definitional `{w}` changed"
        );
    }
    ensure!(gap_err <= 1e-9, "pair gap changed by {gap_err:e}");
    ensure!(mid_err <= 1e-9, "midpoint v-component {mid_err:e}");
    Ok((gap_err, mid_err))
}

fn hd_equalize_contract() -> Check {
    let s = fixture();
    let def = ws(&["she", "woman", "he", "man"]);
    let v = identify_two_means(s, &ws(&["she", "woman"]), &ws(&["he", "man"]))
        .map_err(fail)?
        .vector;
    let eq = PairedWordSet::new([
        ("girl", "boy"),
        ("sister", "brother"),
        ("daughter", "son"),
        ("queen", "king"),
    ])
    .map_err(fail)?;
    let (g1, m1) = check_hd(s, &v, &def, &eq)?;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let r = random_snapshot(&mut rng, 300, 20);
    let v = random_unit(&mut rng, 20);
    let def = ws(&["w0", "w1", "w2"]);
    let eq =
        PairedWordSet::new((0..20).map(|i| (format!("w{}", 10 + 2 * i), format!("w{}", 11 + 2 * i)))).map_err(fail)?;
    let (g2, m2) = check_hd(&r, &v, &def, &eq)?;
    Ok(format!(
        "fixture 4 pairs + random 20 pairs: max gap change {:.1e}, max midpoint |<m,v>| {:.1e}, definitional bit-identical",
        g1.max(g2),
        m1.max(m2)
    ))
}

fn inlp_termination() -> Check {
    let b = bundled();
    let s = &b.snapshot;
    let f = words("f", presets::INLP_FEMALE, b.lowercase);
    let m = words("m", presets::INLP_MALE, b.lowercase);
    let fv = s.get_vectors(&f).map_err(fail)?;
    let mv = s.get_vectors(&m).map_err(fail)?;
    let svm = LinearSvm::train(&fv, &mv, &SvmConfig::default()).map_err(fail)?;
    let first = svm.accuracy(&fv, &mv);
    ensure!(first == 1.0, "[{}] round-1 training accuracy {first}", b.name);

    let t = Instant::now();
    let r = inlp(s, &f, &m, &InlpConfig::default()).map_err(fail)?;
    let elapsed = t.elapsed();
    let term = r.termination.ok_or("no termination record")?;
    ensure!(
        term.initial_accuracy == 1.0,
        "[{}] round-1 accuracy {}",
        b.name,
        term.initial_accuracy
    );
    ensure!(
        term.final_accuracy <= 0.55,
        "[{}] final accuracy {}",
        b.name,
        term.final_accuracy
    );
    ensure!(term.rounds <= 35, "[{}] {} rounds", b.name, term.rounds);

    // retraining from scratch on the output cannot do better than the floor either
    let fo = r.output.get_vectors(&f).map_err(fail)?;
    let mo = r.output.get_vectors(&m).map_err(fail)?;
    let retrained = LinearSvm::train(&fo, &mo, &SvmConfig::default())
        .map_err(fail)?
        .accuracy(&fo, &mo);
    ensure!(retrained <= 0.55, "[{}] retrained accuracy {retrained}", b.name);
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "[{}] round 1 = {first}, {} rounds ({:?}), final {:.3}, retrained {:.3}, {elapsed:.1?}",
        b.name, term.rounds, term.reason, term.final_accuracy, retrained
    ))
}

fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = x.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

fn oscar_contract() -> Check {
    let s = fixture();
    let mut job = presets::preset_jobs()
        .into_iter()
        .find(|p| p.name == "gender-occupation-oscar")
        .ok_or("missing preset")?
        .job;
    job.label.clear();
    let out = run_job(s, &job).map_err(fail)?;
    let (v1, v2) = (&out.directions[0].vector, &out.directions[1].vector);
    let StepOp::Rotate(plane) = &out.transform.ops[0] else {
        return Err("first op is not a rotation".into());
    };
    let op = &out.transform.ops[0];

    let mut t1 = v1.clone();
    op.apply_free(&mut t1);
    let fixed = t1.iter().zip(v1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(fixed <= 1e-9, "v1 moved by {fixed:e}");
    let mut t2 = v2.clone();
    op.apply_free(&mut t2);
    let ortho = dot(&t2, v1).abs();
    ensure!(ortho <= 1e-9, "<T(v2), v1> = {ortho:e}");

    // in-plane radius and out-of-plane residual of every row
    let (mut radius_err, mut residual_err) = (0.0f64, 0.0f64);
    for i in 0..s.len() {
        let (x, y) = (s.row(i), out.transform.output.row(i));
        let (a, b) = plane.coords(x);
        let (c, d) = plane.coords(y);
        radius_err = radius_err.max((a.hypot(b) - c.hypot(d)).abs());
        for k in 0..x.len() {
            let rx = x[k] - a * plane.u1[k] - b * plane.u2[k];
            let ry = y[k] - c * plane.u1[k] - d * plane.u2[k];
            residual_err = residual_err.max((rx - ry).abs());
        }
    }
    ensure!(radius_err <= 1e-9, "in-plane norm changed by {radius_err:e}");
    ensure!(residual_err <= 1e-12, "out-of-plane part changed by {residual_err:e}");

    // bitwise check where the plane has its own coordinates
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let r = random_snapshot(&mut rng, 500, 40);
    let pad = |v: Vec<f64>| {
        let mut full = v;
        full.resize(40, 0.0);
        full
    };
    let w1 = pad(random_unit(&mut rng, 4));
    let w2 = pad(random_unit(&mut rng, 4));
    let ro = vecdebias_core::transforms::oscar(&r, &w1, &w2).map_err(fail)?;
    for i in 0..r.len() {
        ensure!(
            same_bits(&r.row(i)[4..], &ro.output.row(i)[4..]),
            "row {i} changed outside the plane"
        );
    }

    // dense angular sampling of the schedule and of the actual map
    let phi1 = plane.phi1;
    let n = 1000;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let slope = (std::f64::consts::FRAC_PI_2 / phi1).max(std::f64::consts::FRAC_PI_2 / (std::f64::consts::PI - phi1));
    let mut max_jump = 0.0f64;
    let mut map_err = 0.0f64;
    let mut prev: Option<f64> = None;
    let mut first = None;
    for k in 0..n {
        let phi = -std::f64::consts::PI + step * k as f64;
        let target = oscar_target(phi, phi1);
        if let Some(p) = prev {
            max_jump = max_jump.max(wrap_angle(target - p).abs());
        }
        first.get_or_insert(target);
        prev = Some(target);
        let mut x: Vec<f64> = plane
            .u1
            .iter()
            .zip(&plane.u2)
            .map(|(a, b)| phi.cos() * a + phi.sin() * b)
            .collect();
        plane.rotate(&mut x);
        let (a, b) = plane.coords(&x);
        map_err = map_err.max(wrap_angle(b.atan2(a) - target).abs());
    }
    max_jump = max_jump.max(wrap_angle(first.unwrap() - prev.unwrap()).abs());
    let bound = slope * step + 1e-12;
    ensure!(max_jump <= bound, "schedule jump {max_jump:e} > {bound:e}");
    ensure!(map_err <= 1e-9, "rotation misses the schedule by {map_err:e}");
    Ok(format!(
        "|v1 drift| {fixed:.1e}, |<T(v2),v1>| {ortho:.1e}, radius {radius_err:.1e}, residual {residual_err:.1e} \
         (bitwise off-support), 1000 angles max jump {max_jump:.4} <= {bound:.4}"
    ))
}

// brute-force metric oracles

fn cos_brute(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

fn weat_brute(x: &[Vec<f64>], y: &[Vec<f64>], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let s = |w: &Vec<f64>| {
        let mut sa = 0.0;
        for v in a {
            sa += cos_brute(w, v);
        }
        let mut sb = 0.0;
        for v in b {
            sb += cos_brute(w, v);
        }
        sa / a.len() as f64 - sb / b.len() as f64
    };
    let sx: Vec<f64> = x.iter().map(s).collect();
    let sy: Vec<f64> = y.iter().map(s).collect();
    let all: Vec<f64> = sx.iter().chain(&sy).copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / all.len() as f64;
    let mx = sx.iter().sum::<f64>() / sx.len() as f64;
    let my = sy.iter().sum::<f64>() / sy.len() as f64;
    (mx - my) / var.sqrt()
}

fn ranks_brute(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let ties = v.iter().filter(|&&y| y == x).count() as f64;
            below + (ties + 1.0) / 2.0
        })
        .collect()
}

fn ect_brute(x: &[Vec<f64>], y: &[Vec<f64>], attrs: &[Vec<f64>]) -> f64 {
    let mean = |set: &[Vec<f64>]| {
        let mut m = vec![0.0; set[0].len()];
        for v in set {
            for k in 0..m.len() {
                m[k] += v[k];
            }
        }
        m.iter().map(|s| s / set.len() as f64).collect::<Vec<f64>>()
    };
    let (mx, my) = (mean(x), mean(y));
    let sx: Vec<f64> = attrs.iter().map(|w| cos_brute(&mx, w)).collect();
    let sy: Vec<f64> = attrs.iter().map(|w| cos_brute(&my, w)).collect();
    let (rx, ry) = (ranks_brute(&sx), ranks_brute(&sy));
    let n = rx.len() as f64;
    let (ax, ay) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..rx.len() {
        cov += (rx[i] - ax) * (ry[i] - ay);
        vx += (rx[i] - ax) * (rx[i] - ax);
        vy += (ry[i] - ay) * (ry[i] - ay);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

fn vectors(d: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n)
}

fn instance() -> impl Strategy<Value = (Rows, Rows, Rows, Rows)> {
    (2usize..8).prop_flat_map(|d| (vectors(d, 1..6), vectors(d, 1..6), vectors(d, 1..6), vectors(d, 2..10)))
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut gen = |d: usize, n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let (mut weat_err, mut ect_err) = (0.0f64, 0.0f64);
    for i in 0..25 {
        let d = 3 + i % 6;
        let (x, y, a, b) = (gen(d, 2 + i % 4), gen(d, 3 + i % 3), gen(d, 2 + i % 5), gen(d, 4));
        let attrs = gen(d, 5 + i % 7);
        let w = weat_effect_size(&refs(&x), &refs(&y), &refs(&a), &refs(&b)).value;
        weat_err = weat_err.max((w - weat_brute(&x, &y, &a, &b)).abs());
        let e = ect_score(&refs(&x), &refs(&y), &refs(&attrs)).value;
        ect_err = ect_err.max((e - ect_brute(&x, &y, &attrs)).abs());
    }
    ensure!(weat_err <= 1e-12, "WEAT differs from brute force by {weat_err:e}");
    ensure!(ect_err <= 1e-12, "ECT differs from brute force by {ect_err:e}");

    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&instance(), |(x, y, a, attrs)| {
            let (x, y, a, attrs) = (refs(&x), refs(&y), refs(&a), refs(&attrs));
            let b = &attrs[..2];
            let w = weat_effect_size(&x, &y, &a, b).value;
            let swapped = weat_effect_size(&y, &x, &a, b).value;
            prop_assert!(w == -swapped, "WEAT(X,Y) = {w}, WEAT(Y,X) = {swapped}");
            let e = ect_score(&x, &y, &attrs).value;
            prop_assert!((-1.0..=1.0).contains(&e), "ECT = {e}");
            Ok(())
        })
        .map_err(fail)?;
    Ok(format!(
        "25 brute-force instances: WEAT {weat_err:.1e}, ECT {ect_err:.1e}; 1000 property cases: antisymmetry and bounds hold"
    ))
}

fn subspace_comparison() -> Check {
    let b = bundled();
    let cfg = ComparisonConfig::default();
    let cfg = ComparisonConfig {
        names_f: recase(cfg.names_f, b.lowercase),
        names_m: recase(cfg.names_m, b.lowercase),
        ..cfg
    };
    let t = Instant::now();
    let rows = compare_subspaces(&b.snapshot, &cfg).map_err(fail)?;
    let elapsed = t.elapsed();
    for line in format_table(&rows).lines() {
        println!("      {line}");
    }
    let (base, two, iter) = (&rows[0], &rows[2], &rows[4]);
    let soft = |label: &str, got: f64, want: f64, tol: f64| {
        let ok = (got - want).abs() <= tol;
        println!(
            "      SOFT {} {label}: {got:.3} vs {want} ± {tol}",
            if ok { "met   " } else { "missed" }
        );
    };
    soft("baseline ECT", base.ect, 0.773, 0.05);
    soft("baseline WEAT(adj)", base.weat, 1.587, 0.15);
    soft("iterative ECT", iter.ect, 0.966, 0.05);
    soft("iterative WEAT(adj)", iter.weat, 0.902, 0.05);

    ensure!(
        two.ect > base.ect,
        "[{}] 2-means ECT {:.3} not above baseline {:.3}",
        b.name,
        two.ect,
        base.ect
    );
    ensure!(
        two.weat.abs() < base.weat.abs(),
        "[{}] 2-means |WEAT| {:.3} not below baseline {:.3}",
        b.name,
        two.weat.abs(),
        base.weat.abs()
    );
    ensure!(
        iter.ect >= two.ect - 0.01,
        "[{}] iterative ECT {:.3} < 2-means ECT {:.3} - 0.01",
        b.name,
        iter.ect,
        two.ect
    );
    ensure!(
        iter.weat.abs() <= two.weat.abs() + 0.01,
        "[{}] iterative |WEAT(adj)| {:.3} > 2-means |WEAT(adj)| {:.3} + 0.01",
        b.name,
        iter.weat.abs(),
        two.weat.abs()
    );
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("[{}] ordering holds, {elapsed:.1?}", b.name))
}

fn gss_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let tol = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..50 {
        let lo: f64 = rng.random_range(-5.0..0.0);
        let hi = lo + rng.random_range(0.5..6.0);
        // some minima sit outside the interval, so the answer is an endpoint
        let c = rng.random_range(lo - 0.5..hi + 0.5);
        let p: f64 = rng.random_range(0.5..3.0);
        let (k1, k2): (f64, f64) = (rng.random_range(0.2..4.0), rng.random_range(0.2..4.0));
        let f = move |x: f64| -> f64 {
            let u = x - c;
            match i % 5 {
                0 => u * u,
                1 => u.abs().powf(p),
                2 => {
                    if u < 0.0 {
                        -k1 * u
                    } else {
                        k2 * u
                    }
                }
                3 => (k1 * u.abs()).exp(),
                _ => -1.0 / (1.0 + k2 * u * u),
            }
        };
        let m = golden_section_search(f, lo, hi, tol).map_err(fail)?;
        let n = 10_000;
        let h = (hi - lo) / (n - 1) as f64;
        let grid = (0..n)
            .map(|j| lo + h * j as f64)
            .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
            .unwrap();
        let err = (m.argmin - grid).abs();
        worst = worst.max(err);
        ensure!(
            err <= tol + h,
            "function {i}: gss {} vs grid {grid} (err {err:e}, spacing {h:e})",
            m.argmin
        );
    }
    Ok(format!(
        "50 unimodal functions, max |gss - grid| = {worst:.2e} (tol 1e-6 + grid spacing)"
    ))
}

/// Captured centred variance of `basis` versus the top-2 eigenvalue sum from an independent solver.
fn pca_gap(rows: &[&[f64]], basis: &[Vec<f64>; 2]) -> f64 {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for k in 0..d {
            mean[k] += r[k] / n as f64;
        }
    }
    let xc = DMatrix::from_fn(n, d, |i, k| rows[i][k] - mean[k]);
    let gram = &xc * xc.transpose();
    let mut eig: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top2 = eig[0] + eig.get(1).copied().unwrap_or(0.0);
    let captured: f64 = basis
        .iter()
        .map(|b| {
            let bv = nalgebra::DVector::from_column_slice(b);
            (&xc * bv).norm_squared()
        })
        .sum();
    (top2 - captured).abs() / top2.max(f64::MIN_POSITIVE)
}

fn trace_schedules() -> Check {
    let s = fixture();
    let mut summary = Vec::new();
    for p in presets::preset_jobs() {
        let (trace, out) = build_trace(s, &p.job).map_err(fail)?;
        let ops = &out.transform.ops;
        let expected = match p.job.method {
            vecdebias_core::Method::Lp => 4,
            vecdebias_core::Method::Hd => 5,
            vecdebias_core::Method::Oscar => 4,
            vecdebias_core::Method::Inlp => 2 + 2 * out.transform.termination.ok_or("no termination")?.rounds,
        };
        ensure!(
            trace.frames.len() == expected,
            "{}: {} frames, expected {expected}",
            p.name,
            trace.frames.len()
        );

        let mut worst_x = 0.0f64;
        let mut f = 1;
        for op in ops {
            match op {
                StepOp::Project { rows, .. } => {
                    let after = &trace.frames[f + 1];
                    ensure!(
                        after.camera.kind == CameraKind::Aligned,
                        "{}: frame {} not aligned",
                        p.name,
                        f + 1
                    );
                    for pt in &after.points {
                        let i = s.index_of(&pt.token).ok_or("display token missing")?;
                        if rows.contains(i) {
                            worst_x = worst_x.max(pt.x.abs());
                        }
                    }
                    f += 2;
                }
                StepOp::Rotate(_) => f += 2,
                StepOp::Equalize { .. } => f += 1,
            }
        }
        ensure!(f == trace.frames.len() - 1, "{}: frame walk ended at {f}", p.name);
        ensure!(worst_x <= 1e-9, "{}: projected token at x = {worst_x:e}", p.name);

        let last = trace.frames.last().unwrap();
        ensure!(
            last.camera.kind == CameraKind::Pca,
            "{}: final camera is {:?}",
            p.name,
            last.camera.kind
        );
        ensure!(
            last.snapshot_id == *out.transform.output.id(),
            "{}: final frame not on the output",
            p.name
        );
        let display: Vec<&[f64]> = last
            .points
            .iter()
            .map(|pt| out.transform.output.vector(&pt.token).unwrap())
            .collect();
        let gap = pca_gap(&display, &last.camera.basis);
        ensure!(
            gap <= 1e-9,
            "{}: final camera misses the top-2 PCA variance by {gap:e}",
            p.name
        );

        let (again, out2) = build_trace(s, &p.job).map_err(fail)?;
        ensure!(
            out.transform.output.export_to_vec(TextFormat::Word2vecText)
                == out2.transform.output.export_to_vec(TextFormat::Word2vecText),
            "{}: exports differ",
            p.name
        );
        ensure!(
            serde_json::to_vec(&trace).map_err(fail)? == serde_json::to_vec(&again).map_err(fail)?,
            "{}: traces differ",
            p.name
        );
        summary.push(format!("{} {}", p.name, trace.frames.len()));
    }
    Ok(format!(
        "frames: {}; aligned x = 0 ± 1e-9; final PCA; exports byte-identical",
        summary.join(", ")
    ))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn royalty_workflow() -> Check {
    let b = bundled();
    let app = router(AppState::new(Registry::builtin(b.glove_path.clone())));
    let rt = tokio::runtime::Runtime::new().map_err(fail)?;
    rt.block_on(async {
        let (status, v) = call(&app, "POST", "/sessions", Some(json!({"embedding": b.registry_name}))).await;
        ensure!(status == StatusCode::CREATED, "create session: {status} {v}");
        let id = v["session_id"].as_str().ok_or("no session id")?.to_string();

        let (_, presets) = call(&app, "GET", "/presets", None).await;
        let royalty = presets
            .as_array()
            .and_then(|a| a.iter().find(|p| p["name"] == "royalty-lp"))
            .ok_or("no royalty preset")?["job"]
            .clone();
        let (status, r) = call(&app, "POST", &format!("/sessions/{id}/jobs"), Some(royalty)).await;
        ensure!(status == StatusCode::OK, "royalty LP: {status} {r}");
        let royal_id = r["snapshot_id"].clone();

        let inspect = json!({
            "method": "two_means",
            "seeds": {"f": ["woman", "queen"], "m": ["man", "king"]},
            "label": "gender",
        });
        let (status, g) = call(&app, "POST", &format!("/sessions/{id}/subspace"), Some(inspect)).await;
        ensure!(
            status == StatusCode::OK,
            "gender subspace after royalty LP: {status} {g}"
        );
        ensure!(
            g["snapshot_id"] == royal_id,
            "inspection did not run on the royalty-debiased snapshot"
        );
        let dist = g["centroid_distance"].as_f64().ok_or("no centroid distance")?;
        ensure!(dist > 0.01, "||f - m|| = {dist}");

        // chained gender job on top of the royalty result
        let gender = json!({
            "method": "lp",
            "subspace_method": "two_means",
            "seeds": {"f": ["woman", "queen"], "m": ["man", "king"]},
        });
        let (status, c) = call(&app, "POST", &format!("/sessions/{id}/jobs"), Some(gender)).await;
        ensure!(status == StatusCode::OK, "chained gender LP: {status} {c}");
        ensure!(
            c["trace"]["snapshots"][0] == royal_id,
            "chained job did not start from the royalty result"
        );
        let nearest: Vec<&str> = g["positive"]
            .as_array()
            .map(|a| a.iter().filter_map(|n| n["token"].as_str()).take(3).collect())
            .unwrap_or_default();
        Ok(format!(
            "[{}] ||f - m|| = {dist:.4} after royalty LP; nearest to +v: {nearest:?}",
            b.name
        ))
    })
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("LP nullity and idempotence", lp_nullity_and_idempotence),
        ("HD equalize contract", hd_equalize_contract),
        ("INLP termination", inlp_termination),
        ("OSCaR contract", oscar_contract),
        ("Metric oracles", metric_oracles),
        ("Subspace comparison", subspace_comparison),
        ("GSS correctness", gss_correctness),
        ("Trace schedules and determinism", trace_schedules),
        ("Royalty workflow", royalty_workflow),
    ];
    println!("\nacceptance: {} criteria", criteria.len());
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed\n", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
