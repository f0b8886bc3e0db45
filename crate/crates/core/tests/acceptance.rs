//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use gaslab_core::advisor::{decide, DecisionAnswers};
use gaslab_core::app::{pseudo_hash, DEFAULT_CALLER};
use gaslab_core::calibration::{self, cumulative_deployment_gas, deployment_gas_by_version, CalibrationTargets};
use gaslab_core::harness::{name_sequence, run_scenario};
use gaslab_core::storage::string_slot_count;
use gaslab_core::trace::ReturnValue;
use gaslab_core::{
    emit, AccessSet, Address, AppParams, AppVersion, CallRequest, CodeSizeTable, ContractId, ContractStorage, Function,
    GasMeter, GasSchedule, NameConfig, Outcome, Pattern, ScenarioConfig, SlotKey, StorageCell, Word, World,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eq<T: PartialEq + std::fmt::Debug>(got: T, want: T, what: &str) -> Result<(), String> {
    ensure(got == want, || format!("{what}: got {got:?}, want {want:?}"))
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schedule_exactness() -> Check {
    let start = Instant::now();
    let s = GasSchedule::default();
    let c = ContractId(7);
    let (a, b) = (SlotKey::new(1), SlotKey::new(2));

    let mut acc = AccessSet::new();
    eq(s.sload_cost(&mut acc, c, a), 2_100, "first read")?;
    eq(s.sload_cost(&mut acc, c, a), 100, "second read")?;
    let mut acc = AccessSet::new();
    eq(s.sload_cost(&mut acc, c, a) + s.sload_cost(&mut acc, c, b), 4_200, "two slots")?;

    let h = Word::from_u64(0xabc);
    let mut acc = AccessSet::new();
    let mut cell = StorageCell::new(Word::ZERO);
    eq(s.sstore_cost(&mut cell, h, &mut acc, c, a), (22_100, 0), "cold set")?;
    eq(s.sstore_cost(&mut cell, h, &mut acc, c, a), (100, 0), "warm noop")?;
    let mut acc = AccessSet::new();
    acc.warm_slot(c, b);
    let mut cell = StorageCell::new(h);
    eq(s.sstore_cost(&mut cell, Word::ZERO, &mut acc, c, b), (2_900, 4_800), "warm clear")?;

    let mut acc = AccessSet::new();
    eq(s.account_access_cost(&mut acc, c), 2_600, "first account touch")?;
    eq(s.account_access_cost(&mut acc, c), 100, "second account touch")?;
    eq(s.account_access_cost(&mut acc, ContractId(8)), 2_600, "other account")?;

    eq([s.hash_cost(0), s.hash_cost(64), s.hash_cost(65)], [30, 42, 48], "hash")?;
    eq(
        [s.calldata_cost(&[]), s.calldata_cost(&[0; 10]), s.calldata_cost(&[0xaa, 0xbb, 0xcc, 0xdd])],
        [0, 40, 64],
        "calldata",
    )?;

    let fin = |used: u64, refund: i64| {
        let mut m = GasMeter::new();
        m.charge(used);
        m.add_refund(refund);
        s.finalize_tx(&m)
    };
    eq([fin(100_000, 0), fin(100_000, 4_800), fin(10_000, 4_800)], [100_000, 95_200, 8_000], "finalize")?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("all schedule examples exact".into())
}

fn calibration_totals() -> Check {
    let start = Instant::now();
    let s = GasSchedule::default();
    let targets = CalibrationTargets::measured();
    let table = calibration::calibrate(&targets, &CodeSizeTable::reference(), &s).map_err(|e| e.to_string())?;
    let mut totals = BTreeMap::new();
    for (&p, &target) in &targets.0 {
        let got = cumulative_deployment_gas(p, &table, &s).map_err(|e| e.to_string())?;
        let err = (got as f64 - target as f64).abs() / target as f64;
        ensure(err <= 1e-3, || format!("{p}: {got} vs {target}"))?;
        totals.insert(p, got);
    }
    let classic = totals[&Pattern::Classic] as f64;
    let rp = totals[&Pattern::Proxy] as f64 / classic;
    let rd = totals[&Pattern::Diamond] as f64 / classic;
    for (name, r) in [("proxy/classic", rp), ("diamond/classic", rd)] {
        ensure((2.4..=2.8).contains(&r), || format!("{name} ratio {r:.3}"))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("totals {totals:?}, ratios {rp:.3} / {rd:.3}"))
}

fn deployment_shape() -> Check {
    let s = GasSchedule::default();
    let table = calibration::calibrated_sizes();
    let mut shown = Vec::new();
    for p in Pattern::ALL {
        let g: Vec<u64> =
            deployment_gas_by_version(p, table, &s).map_err(|e| e.to_string())?.into_iter().map(|(_, g)| g).collect();
        match p {
            Pattern::Diamond => ensure(g[0] > g[1] && g[0] > g[2], || format!("{p}: {g:?}"))?,
            _ => ensure(g[0] < g[1] && g[1] < g[2], || format!("{p}: {g:?}"))?,
        }
        shown.push(format!("{p} {g:?}"));
    }
    Ok(shown.join(", "))
}

fn function_ordering(config: &ScenarioConfig) -> Check {
    let run = run_scenario(config).map_err(|e| e.to_string())?;
    let r = &run.report;
    for v in AppVersion::ALL {
        for &f in v.functions() {
            let avg = |p| r.row(p, v, f).map(|row| row.avg).ok_or_else(|| format!("missing {p} {v} {f}"));
            let (c, p, d) = (avg(Pattern::Classic)?, avg(Pattern::Proxy)?, avg(Pattern::Diamond)?);
            ensure(c < p && p < d, || format!("{v} {f}: {c} / {p} / {d}"))?;
            eq(p - c, 4_800, &format!("{v} {f} proxy envelope"))?;
        }
        for pat in Pattern::ALL {
            let rows: Vec<_> = r.rows.iter().filter(|row| row.pattern == pat && row.version == v).collect();
            let min = rows.iter().min_by_key(|row| row.avg).unwrap();
            let max = rows.iter().max_by_key(|row| row.avg).unwrap();
            eq(min.function, Function::CompareHashes, &format!("{pat} {v} cheapest"))?;
            eq(max.function, Function::AddFile, &format!("{pat} {v} most expensive"))?;
        }
    }
    Ok("classic < proxy < diamond everywhere, proxy - classic = 4800".into())
}

fn cheap_compare_ratio(config: &ScenarioConfig) -> Check {
    let run = run_scenario(config).map_err(|e| e.to_string())?;
    let mut shown = Vec::new();
    for v in AppVersion::ALL {
        let grow: Vec<u64> = run
            .records
            .iter()
            .filter(|r| {
                r.pattern == Pattern::Classic
                    && r.version == v
                    && r.function == Function::AddFile
                    && r.config == Some(NameConfig::Growing)
            })
            .map(|r| r.gas)
            .collect();
        let cmp: Vec<u64> = run
            .records
            .iter()
            .filter(|r| r.pattern == Pattern::Classic && r.version == v && r.function == Function::CompareHashes)
            .map(|r| r.gas)
            .collect();
        let mean = |xs: &[u64]| xs.iter().sum::<u64>() as f64 / xs.len() as f64;
        let ratio = mean(&grow) / mean(&cmp);
        ensure((100.0..=600.0).contains(&ratio), || format!("{v} ratio {ratio:.1}"))?;
        if v == AppVersion::V1 {
            ensure((200.0..=450.0).contains(&ratio), || format!("{v} default ratio {ratio:.1}"))?;
        }
        shown.push(format!("{v} {ratio:.1}"));
    }
    Ok(format!("addFile/compareHashes: {}", shown.join(", ")))
}

fn iteration_shapes(config: &ScenarioConfig) -> Check {
    let start = Instant::now();
    let run = run_scenario(config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let set = GasSchedule::default().sstore_set;
    let lens: Vec<usize> =
        name_sequence(NameConfig::Growing, &config.base_name, config.iterations).iter().map(String::len).collect();
    for p in Pattern::ALL {
        for v in AppVersion::ALL {
            let series = |nc| -> Vec<u64> {
                run.records
                    .iter()
                    .filter(|r| {
                        r.pattern == p && r.version == v && r.function == Function::AddFile && r.config == Some(nc)
                    })
                    .map(|r| r.gas)
                    .collect()
            };
            let grow = series(NameConfig::Growing);
            eq(grow.len(), config.iterations, "series length")?;
            for i in 1..grow.len() {
                ensure(grow[i] >= grow[i - 1], || format!("{p} {v}: growing drops at {i}"))?;
                let crosses = string_slot_count(lens[i]) > string_slot_count(lens[i - 1]);
                let jump = grow[i] - grow[i - 1];
                ensure(crosses == (jump >= set), || format!("{p} {v}: step {i} (len {}) jumps {jump}", lens[i]))?;
            }
            let vary = series(NameConfig::VaryingLastChar);
            ensure(vary.iter().all(|g| *g == vary[0]), || format!("{p} {v}: varying not flat"))?;
            let same = series(NameConfig::Identical);
            ensure(same[1..].iter().all(|g| same[0] > 5 * g), || {
                format!("{p} {v}: identical {} vs {}", same[0], same[1])
            })?;
        }
    }
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("grid of {} calls in {elapsed:?}", run.records.len()))
}

fn call_strategy() -> impl Strategy<Value = CallRequest> {
    let name = "[a-d]{0,120}";
    (0usize..5, name, any::<u64>(), any::<bool>(), 1u64..1_000).prop_map(|(f, name, seed, other, ts)| {
        let h = pseudo_hash(&name, seed);
        let call = match Function::ALL[f] {
            Function::AddFile => CallRequest::add_file(&name, h),
            Function::UpdateFile => CallRequest::update_file(&name, h),
            Function::GetFileName => CallRequest::get_file_name(&name),
            Function::GetFileHash => CallRequest::get_file_hash(&name),
            Function::CompareHashes => CallRequest::compare_hashes(h, if seed % 2 == 0 { h } else { Word::ZERO }),
        };
        let call = call.at(ts);
        if other {
            call.from(Address([0x11; 20]))
        } else {
            call.from(DEFAULT_CALLER)
        }
    })
}

fn oracle_equivalence() -> Check {
    let s = GasSchedule::default();
    let mut worlds = Vec::new();
    for p in Pattern::ALL {
        for v in AppVersion::ALL {
            let w = World::deployed(p, v, s.clone(), AppParams::default(), calibration::calibrated_sizes())
                .map_err(|e| e.to_string())?;
            worlds.push(w);
        }
    }
    for p in Pattern::ALL {
        let mut w = World::new(p, s.clone(), AppParams::default());
        for v in AppVersion::ALL {
            let plan =
                gaslab_core::dispatch::plan_for(p, v, calibration::calibrated_sizes()).map_err(|e| e.to_string())?;
            for t in w.apply(&plan).map_err(|e| e.to_string())? {
                common::oracle::check(&t).map_err(|e| format!("{p} {v} deploy: {e}"))?;
            }
        }
    }
    let calls = std::cell::Cell::new(0usize);
    let reverted = std::cell::Cell::new(0usize);
    let strategy = (0..worlds.len(), prop::collection::vec(call_strategy(), 1..8));
    runner(320)
        .run(&strategy, |(wi, seq)| {
            let mut world = worlds[wi].clone();
            for call in &seq {
                let t = world.call(call);
                calls.set(calls.get() + 1);
                if !t.outcome.is_ok() {
                    reverted.set(reverted.get() + 1);
                }
                if let Err(e) = common::oracle::check(&t) {
                    return Err(TestCaseError::fail(e));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(calls.get() >= 1_000, || format!("only {} calls", calls.get()))?;
    Ok(format!("{} calls ({} reverted) match the oracle", calls.get(), reverted.get()))
}

fn refund_cap() -> Check {
    let s = GasSchedule::default();
    let strategy = (prop::collection::vec(0u64..3, 4), prop::collection::vec((0u64..4, 0u64..3), 1..24));
    let with_refund = std::cell::Cell::new(0usize);
    runner(2_000)
        .run(&strategy, |(initial, writes)| {
            let c = ContractId(3);
            let mut st = ContractStorage::new(c);
            for (i, v) in initial.iter().enumerate() {
                st.poke(SlotKey::new(i as u64), Word::from_u64(*v));
            }
            st.snapshot_tx();
            let mut meter = GasMeter::new();
            let mut acc = AccessSet::new();
            for (slot, v) in &writes {
                st.write_word(SlotKey::new(*slot), Word::from_u64(*v), &s, &mut meter, &mut acc);
            }
            let charged = s.finalize_tx(&meter);
            prop_assert!(charged * 5 >= meter.used * 4, "charged {} of {}", charged, meter.used);
            let cleared = (0..4).any(|i| initial[i] != 0 && st.get(SlotKey::new(i as u64)).is_zero());
            if cleared {
                prop_assert!(meter.refund() > 0);
                with_refund.set(with_refund.get() + 1);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(with_refund.get() > 0, || "no clearing sequence generated".into())?;
    Ok(format!("2000 sequences, {} with clears", with_refund.get()))
}

fn read_back(world: &mut World, name: &str) -> (Outcome, Outcome) {
    let n = world.call(&CallRequest::get_file_name(name)).outcome;
    let h = world.call(&CallRequest::get_file_hash(name)).outcome;
    (n, h)
}

fn upgrade_continuity() -> Check {
    let s = GasSchedule::default();
    let sizes = calibration::calibrated_sizes();
    let strategy = prop::collection::btree_map("[a-z]{0,80}", any::<u64>(), 1..12);
    runner(64)
        .run(&strategy, |files| {
            for p in Pattern::ALL {
                let mut w = World::deployed(p, AppVersion::V1, s.clone(), AppParams::default(), sizes).unwrap();
                for (name, seed) in &files {
                    prop_assert!(w.call(&CallRequest::add_file(name, pseudo_hash(name, *seed))).outcome.is_ok());
                }
                for v in [AppVersion::V2, AppVersion::V3] {
                    w.apply(&gaslab_core::dispatch::plan_for(p, v, sizes).unwrap()).unwrap();
                    for (name, seed) in &files {
                        let got = read_back(&mut w, name);
                        let want = if p == Pattern::Classic {
                            (Outcome::Ok(ReturnValue::Text(String::new())), Outcome::Ok(ReturnValue::Word(Word::ZERO)))
                        } else {
                            (
                                Outcome::Ok(ReturnValue::Text(name.clone())),
                                Outcome::Ok(ReturnValue::Word(pseudo_hash(name, *seed))),
                            )
                        };
                        prop_assert_eq!(got, want, "{} {} {:?}", p, v, name);
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("upgrades keep files, classic redeploy starts empty".into())
}

fn determinism() -> Check {
    let path = repo_root().join("scenarios/paper.json");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let config = ScenarioConfig::from_json(&text).map_err(|e| e.to_string())?;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let run = run_scenario(&config).map_err(|e| e.to_string())?;
        emit::write_run(&run, d.path()).map_err(|e| e.to_string())?;
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{name:?} differs"))?;
    }
    Ok(format!("{} files byte-identical", names.len()))
}

fn decision_model() -> Check {
    for a in DecisionAnswers::all() {
        let rec = decide(&a);
        let want = if !a.needs_upgradeability {
            Pattern::Classic
        } else if a.extensive_features_or_large_code || a.modularity_priority {
            Pattern::Diamond
        } else {
            Pattern::Proxy
        };
        eq(rec.pattern, want, &format!("{a:?}"))?;
        ensure(!rec.rationale.is_empty(), || format!("{a:?}: empty rationale"))?;
    }
    Ok("16 answer combinations".into())
}

fn main() {
    let config = ScenarioConfig::default();
    let criteria: Vec<Criterion> = vec![
        ("schedule exactness", Box::new(schedule_exactness)),
        ("deployment totals after calibration", Box::new(calibration_totals)),
        ("per-version deployment shape", Box::new(deployment_shape)),
        ("per-function pattern ordering", Box::new(|| function_ordering(&config))),
        ("addFile vs compareHashes ratio", Box::new(|| cheap_compare_ratio(&config))),
        ("iteration series shapes", Box::new(|| iteration_shapes(&config))),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("refund cap", Box::new(refund_cap)),
        ("upgrade continuity", Box::new(upgrade_continuity)),
        ("determinism", Box::new(determinism)),
        ("decision model", Box::new(decision_model)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
