//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use brickjam_core::analytics::{country_table, learning_goal_ratio, report, Dimension, Fixed2};
use brickjam_core::backpack::{merge_projects, object_selector, pack, unpack};
use brickjam_core::fixtures::{alice_records, bird_demo, nolb_records};
use brickjam_core::formula::{parse_formula, pretty_print, SensorKind};
use brickjam_core::project::{
    pack_project, validate, Brick, Diagnostic, GameObject, Look, Project, Script, Trigger,
};
use brickjam_core::rng::Rng;
use brickjam_core::runtime::{run, InputTrace, RunConfig, SensorTrace, TapEvent};
use brickjam_core::share::{JamSpec, ShareStore, SubmissionOutcome};
use chrono::Duration as Span;
use common::reference::parse_sexpr;
use common::{formula_strategy, random_project, sexpr};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bird_demo_criterion() -> Outcome {
    let out = run(&bird_demo(), RunConfig::ticks(60).with_sensors(SensorTrace::constant(SensorKind::CompassDirection, 0.0)))
        .map_err(|e| e.to_string())?;
    let frames = &out.frames.frames;
    check(frames.len() == 61, || format!("{} frames", frames.len()))?;
    let toggles: Vec<u64> = frames
        .windows(2)
        .filter(|w| w[0].objects[1].look_index != w[1].objects[1].look_index)
        .map(|w| w[1].tick)
        .collect();
    check(toggles == [12, 24, 36, 48, 60], || format!("look toggles at {toggles:?}"))?;
    check(frames.iter().all(|f| f.objects[1].direction == 0.0), || {
        "direction left 0 under a constant compass".into()
    })?;

    let step = SensorTrace::constant(SensorKind::CompassDirection, 0.0).with_sample(
        SensorKind::CompassDirection,
        0.5,
        90.0,
    );
    let out = run(&bird_demo(), RunConfig::ticks(60).with_sensors(step)).map_err(|e| e.to_string())?;
    let first_90 = out
        .frames
        .frames
        .iter()
        .position(|f| f.objects[1].direction == 90.0)
        .map(|i| out.frames.frames[i].tick);
    check(first_90 == Some(36), || format!("direction reached 90 at {first_90:?}"))?;
    let steady = out.frames.frames[36..].iter().all(|f| f.objects[1].direction == 90.0);
    check(steady, || "direction left 90 after tick 36".into())?;
    Ok("looks toggle at 12/24/36/48/60; compass step lands on tick 36".into())
}

/// Rebroadcasts every 0.25 s; the receiver counts, moves and plays with
/// `rand`, so digests depend on scheduling, sensors, taps and the seed.
fn pulse_project() -> Project {
    let f = |s: &str| parse_formula(s).unwrap();
    let mut o = GameObject::new("pulse");
    o.looks.push(Look {
        name: "dot".into(),
        asset_id: "dot.png".into(),
        width: 40,
        height: 40,
    });
    o.variables.insert("n".into(), 0.0);
    o.scripts = vec![
        Script::new(
            Trigger::ProgramStarted,
            vec![Brick::Forever(vec![Brick::Wait(f("0.25")), Brick::Broadcast("go".into())])],
        ),
        Script::new(
            Trigger::BroadcastReceived("go".into()),
            vec![Brick::Repeat {
                count: f("20"),
                body: vec![
                    Brick::ChangeVariable { name: "n".into(), delta: f("rand(1, 3)") },
                    Brick::ChangeXBy(f("sin(compass_direction) * 2")),
                ],
            }],
        ),
        Script::new(Trigger::Tapped, vec![Brick::NextLook, Brick::SetSizePercent(f("n % 150 + 50"))]),
    ];
    let mut p = Project::new("pulse");
    p.assets.insert("dot.png".into(), vec![0x89, b'P', b'N', b'G']);
    p.objects.push(o);
    p
}

fn traces() -> [(SensorTrace, InputTrace); 2] {
    let still = SensorTrace::constant(SensorKind::CompassDirection, 0.0);
    let taps = InputTrace {
        taps: vec![
            TapEvent { time: 0.3, x: 0.0, y: 0.0 },
            TapEvent { time: 1.1, x: 5.0, y: -3.0 },
        ],
    };
    let mut moving = SensorTrace::constant(SensorKind::CompassDirection, 10.0);
    for k in 1..12 {
        moving = moving.with_sample(SensorKind::CompassDirection, k as f64 * 0.4, (k * 37 % 360) as f64);
    }
    let more = InputTrace {
        taps: (0..10)
            .map(|k| TapEvent { time: 0.2 * k as f64, x: (k * 3) as f64 - 10.0, y: 0.0 })
            .collect(),
    };
    [(still, taps), (moving, more)]
}

fn determinism_criterion() -> Outcome {
    let projects = [bird_demo(), pulse_project(), random_project(42)];
    let mut all = BTreeSet::new();
    for (p, project) in projects.iter().enumerate() {
        for (t, (sensors, inputs)) in traces().into_iter().enumerate() {
            let mut digests = BTreeSet::new();
            for _ in 0..20 {
                let config = RunConfig {
                    rng_seed: Some(7),
                    ..RunConfig::ticks(300).with_sensors(sensors.clone()).with_inputs(inputs.clone())
                };
                let out = run(project, config).map_err(|e| format!("project {p}: {e}"))?;
                digests.insert(out.digest);
            }
            check(digests.len() == 1, || {
                format!("project {p} trace {t}: {} distinct digests", digests.len())
            })?;
            all.extend(digests);
        }
    }
    Ok(format!("6 pairs x 20 runs, 1 digest each ({} distinct overall)", all.len()))
}

fn analytics_criterion() -> Outcome {
    let records = alice_records();
    let r = report(&records);
    let get = |d: Dimension, class: &str| -> Result<String, String> {
        r.dimension(d)
            .row(class)
            .and_then(|row| row.percent)
            .map(|p| p.to_string())
            .ok_or_else(|| format!("{d}: no {class}"))
    };
    let expected = [
        (Dimension::Tool, "scratch", "54.74"),
        (Dimension::Tool, "pocketcode", "45.26"),
        (Dimension::TeamSizeClass, "2", "29.47"),
        (Dimension::TeamSizeClass, "3", "4.21"),
        (Dimension::TeamSizeClass, ">3", "17.89"),
        (Dimension::CreatedIn, "home", "62.11"),
        (Dimension::CreatedIn, "school", "32.63"),
        (Dimension::Gender, "female", "46.32"),
        (Dimension::PriorKnowledge, "yes", "44.21"),
        (Dimension::TimeSpent, "2-7d", "44.21"),
        (Dimension::TimeSpent, "2-5h", "29.47"),
        (Dimension::LikedTheme, "yes", "75.79"),
    ];
    for (d, class, want) in expected {
        let got = get(d, class)?;
        check(got == want, || format!("{d}/{class}: {got} != {want}"))?;
    }
    let summed = r.team_share.rounded_sum.map(|p| p.to_string());
    check(summed.as_deref() == Some("51.57"), || format!("team share {summed:?}"))?;

    let reasons: BTreeMap<&str, u64> = r.reasons.iter().map(|x| (x.class.as_str(), x.count)).collect();
    let want_reasons = [
        ("I liked the topic", 23),
        ("I wanted to create a game", 32),
        ("It was part of a school/university activity", 60),
        ("My friends participated", 7),
    ];
    for (reason, n) in want_reasons {
        check(reasons.get(reason) == Some(&n), || format!("reason '{reason}': {:?}", reasons.get(reason)))?;
    }

    let countries: Vec<(String, u64)> = country_table(&records).into_iter().map(|c| (c.country, c.count)).collect();
    let expected: Vec<(String, u64)> = [
        ("Italy", 31),
        ("India", 20),
        ("Austria", 16),
        ("United Kingdom", 8),
        ("Spain", 4),
        ("United States", 3),
        ("Bosnia Herzegovina", 1),
        ("Canada", 1),
        ("Egypt", 1),
        ("Germany", 1),
        ("Hungary", 1),
        ("Philippines", 1),
        ("unknown", 17),
    ]
    .iter()
    .map(|(c, n)| (c.to_string(), *n))
    .collect();
    check(countries == expected, || format!("country table {countries:?}"))?;

    let lg = learning_goal_ratio(&nolb_records());
    check(
        (lg.met, lg.total, lg.percent) == (105, 172, Some(Fixed2::from_hundredths(6105))),
        || format!("learning goal {lg:?}"),
    )?;
    Ok("all target percentages, reasons, country table and 105/172 reproduced".into())
}

fn parser_criterion() -> Outcome {
    let mut runner = TestRunner::new_with_rng(
        Config { cases: 10_000, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner
        .run(&formula_strategy(), |tree| {
            let text = pretty_print(&tree);
            let back = parse_formula(&text)
                .map_err(|e| proptest::test_runner::TestCaseError::fail(format!("{text}: {e}")))?;
            proptest::prop_assert_eq!(back, tree);
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let corpus = include_str!("data/formula_corpus.txt");
    let mut lines = 0;
    for line in corpus.lines().filter(|l| !l.trim().is_empty()) {
        let (text, expected) = match line.split_once('\t') {
            Some((t, e)) => (t, Some(e)),
            None => (line, None),
        };
        let ours = parse_formula(text).map_err(|e| format!("{text}: {e}"))?;
        let reference = parse_sexpr(text).map_err(|e| format!("reference on {text}: {e}"))?;
        check(sexpr(&ours) == reference, || format!("{text}: {} vs {reference}", sexpr(&ours)))?;
        if let Some(e) = expected {
            check(reference == e, || format!("{text}: reference gave {reference}, corpus says {e}"))?;
        }
        lines += 1;
    }
    check(lines == 200, || format!("corpus has {lines} expressions"))?;
    Ok("10000 trees round-trip; 200 corpus shapes match the reference parser".into())
}

fn errors(p: &Project) -> Vec<Diagnostic> {
    validate(p).into_iter().filter(Diagnostic::is_error).collect()
}

fn lowest_unused(base: &str, existing: &[String]) -> String {
    if !existing.iter().any(|n| n == base) {
        return base.to_string();
    }
    let used: BTreeSet<u64> = existing
        .iter()
        .filter_map(|n| n.strip_prefix(base)?.strip_prefix(" (")?.strip_suffix(')')?.parse().ok())
        .collect();
    let n = (2..).find(|n| !used.contains(n)).unwrap();
    format!("{base} ({n})")
}

fn backpack_criterion() -> Outcome {
    let mut rng = Rng::seed_from_u64(1000);
    let mut renamed = 0;
    for i in 0..1000u64 {
        let (sa, sb) = (rng.next_u64(), rng.next_u64());
        let a = random_project(sa);
        let b = random_project(sb);
        let m = merge_projects(&a, &b);
        let errs = errors(&m);
        check(errs.is_empty(), || format!("pair {i} ({sa}, {sb}): {errs:?}"))?;

        let mut names: Vec<String> = a.all_objects().map(|o| o.name.clone()).collect();
        for (k, object) in b.objects.iter().enumerate() {
            let want = lowest_unused(&object.name, &names);
            let got = &m.objects[a.objects.len() + k].name;
            check(*got == want, || format!("pair {i}: object named {got}, expected {want}"))?;
            renamed += usize::from(want != object.name);
            names.push(want);
        }

        if !a.objects.is_empty() {
            let k = (rng.next_u64() % a.objects.len() as u64) as usize;
            let item = pack(&a, &object_selector(k)).map_err(|e| format!("pair {i}: pack: {e}"))?;
            let out = unpack(&item, &Project::new("empty"), None).map_err(|e| format!("pair {i}: unpack: {e}"))?;
            let errs = errors(&out);
            check(errs.is_empty(), || format!("pair {i}: unpacked {errs:?}"))?;
        }
    }
    check(renamed > 0, || "no collisions were exercised".into())?;
    Ok(format!("1000 merges valid, {renamed} suffix renames checked, packs unpack into empty"))
}

fn webshare_criterion() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut store = ShareStore::open(dir.path()).map_err(|e| e.to_string())?;
    let base = bird_demo();
    let mut uploaded = Vec::new();
    for (i, record) in alice_records().into_iter().enumerate() {
        let mut p = base.clone();
        p.name = record.meta.title.clone();
        let bundle = pack_project(&p).map_err(|e| e.to_string())?;
        let mut meta = record.meta.clone();
        meta.tags.push(format!("#{}", meta.tool));
        if i % 3 == 0 {
            meta.tags.push("#Wonderland".into());
        }
        let receipt = store.upload(&bundle, meta, record.uploaded_at).map_err(|e| e.to_string())?;
        uploaded.push((receipt.id, bundle));
    }
    for (id, bundle) in &uploaded {
        let back = store.download(id).map_err(|e| e.to_string())?;
        check(&back == bundle, || format!("{id}: downloaded bytes differ"))?;
    }

    for tag in ["#AliceGameJam", "#scratch", "#pocketcode", "#Wonderland", "#absent"] {
        let want: BTreeSet<&str> = store
            .records()
            .filter(|r| r.meta.tags.iter().any(|t| t.eq_ignore_ascii_case(tag)))
            .map(|r| r.id.as_str())
            .collect();
        let mut got = Vec::new();
        for page in 0.. {
            let p = store.search(tag, page, 10).map_err(|e| e.to_string())?;
            if p.items.is_empty() {
                break;
            }
            got.extend(p.items.into_iter().map(|s| s.id));
        }
        let got_set: BTreeSet<&str> = got.iter().map(String::as_str).collect();
        check(got.len() == got_set.len(), || format!("{tag}: duplicate hits across pages"))?;
        check(got_set == want, || format!("{tag}: {} hits, {} expected", got_set.len(), want.len()))?;
    }
    let total = store.search("#AliceGameJam", 0, 10).map_err(|e| e.to_string())?.total;
    check(total == 95, || format!("#AliceGameJam gives {total}"))?;

    let start = alice_records()[0].uploaded_at;
    let spec = JamSpec {
        id: None,
        theme: "Alice".into(),
        start,
        end: start + Span::hours(48),
        required_tag: "#AliceGameJam".into(),
        diversifiers: Vec::new(),
        max_team_size: None,
        allowed_tools: Vec::new(),
    };
    let jam = store.create_jam(spec).map_err(|e| e.to_string())?;
    let bundle = &uploaded[0].1;
    let cases = [
        (jam.start - Span::seconds(1), false),
        (jam.start, true),
        (jam.end, true),
        (jam.end + Span::seconds(1), false),
    ];
    for (at, accept) in cases {
        let mut meta = alice_records()[0].meta.clone();
        meta.title = format!("boundary {at}");
        let id = store.upload(bundle, meta, at).map_err(|e| e.to_string())?.id;
        let outcome = store.submit_to_jam(&jam.id, &id).map_err(|e| e.to_string())?;
        check((outcome == SubmissionOutcome::Accepted) == accept, || format!("{at}: {outcome:?}"))?;
    }
    Ok("95 uploads byte-identical; tag search exact over 5 tags; window closed at both ends".into())
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "bird demo", limit: Duration::from_secs(1), run: bird_demo_criterion },
        Criterion { name: "determinism", limit: Duration::from_secs(10), run: determinism_criterion },
        Criterion { name: "analytics fidelity", limit: Duration::from_secs(1), run: analytics_criterion },
        Criterion { name: "parser properties", limit: Duration::from_secs(30), run: parser_criterion },
        Criterion { name: "backpack properties", limit: Duration::from_secs(60), run: backpack_criterion },
        Criterion { name: "webshare contract", limit: Duration::from_secs(10), run: webshare_criterion },
    ];
    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let result = (c.run)();
        let elapsed = started.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= c.limit {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:.2?}, limit {:?}", c.limit))
            }
        });
        match result {
            Ok(msg) => println!("PASS  {:<20} {:>9.3?}  {msg}", c.name, elapsed),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {:<20} {:>9.3?}  {msg}", c.name, elapsed);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
