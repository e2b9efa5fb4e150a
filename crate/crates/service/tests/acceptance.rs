//! End-to-end acceptance checks. Runs every criterion, prints one
//! PASS/FAIL line each and exits non-zero if any failed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use accu_core::classical::{
    knn_predict, lda_fit, lda_predict, log_likelihood_gradient, lr_train_binary, KnnModel, LogisticConfig,
};
use accu_core::data::OcdClass;
use accu_core::evaluation::{compute_metrics, cross_validate, ConfusionMatrix};
use accu_core::honn::{candidate_topologies, grid_search_with, write_search_log_csv, HyperGrid, SearchOptions};
use accu_core::model::{ClassifierSpec, ModelKind, Selection};
use accu_core::neural::{backprop_gradients, one_hot, ActivationKind, NetworkModel, WeightSet};
use accu_core::synthgen::{generate, Preset};
use accu_core::{BiomarkerVector, Dataset, LabeledSample};
use accu_service::http::{router, RetrainMode};
use accu_service::service::predict_with_record;
use accu_service::{AccuService, FixedClock, ModelRecord, ServiceConfig};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use chrono::{TimeZone, Utc};
use common::*;
use http_body_util::BodyExt;
use rand::Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let units = [3, 8, 15];
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let act = ActivationKind::ALL[trial % 4];
        let depth = (trial / 4) % 3;
        let hidden: Vec<usize> = (0..depth).map(|_| units[r.random_range(0..3)]).collect();
        let model = NetworkModel::ocd(&hidden, act).unwrap();
        let mut w = WeightSet::zeros(&model);
        for v in w.values_mut() {
            *v = 0.5 * gauss(&mut r);
        }
        let x: Vec<f64> = (0..5).map(|_| r.random::<f64>()).collect();
        let t = one_hot(OcdClass::ALL[r.random_range(0..3)]);
        let analytic: Vec<f64> = backprop_gradients(&model, &w, &x, &t).unwrap().values().collect();
        let numeric = numeric_gradient(&model, &w, &x, &t, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max(rel_error(*a, *n, 1e-4));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < 1e-5 && secs < 60.0, format!("max rel error {worst:.2e} in {secs:.1} s"))
}

fn lda_oracle() -> Outcome {
    let mut r = rng(909);
    let mut agree = 0;
    let mut total = 0;
    for m in 0..20 {
        let centres: [[f64; 5]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| 3.0 * gauss(&mut r)));
        let per_class = r.random_range(5..40);
        let mut data = clusters(centres, 0.5 + r.random::<f64>(), per_class, 500 + m);
        for _ in 0..r.random_range(0..15) {
            let mut s = data.samples()[0].clone();
            s.features.sd += 0.1 * gauss(&mut r);
            data.push(s);
        }
        let model = lda_fit(&data).unwrap();
        for _ in 0..10 {
            let base = data.samples()[r.random_range(0..data.len())].features.to_array();
            let x: [f64; 5] = std::array::from_fn(|i| base[i] + gauss(&mut r));
            let oracle = gaussian_bayes_oracle(&model.priors, &model.means, &model.variances, &x);
            agree += usize::from(lda_predict(&model, &BiomarkerVector::from_array(x).unwrap()).index() == oracle);
            total += 1;
        }
    }
    check(agree == total, format!("{agree}/{total} agree"))
}

fn knn_oracle_equivalence() -> Outcome {
    let mut r = rng(313);
    // integer lattice with repeats: many equal distances and split votes
    let data: Dataset = (0..60)
        .map(|_| {
            let v: [f64; 5] = std::array::from_fn(|_| r.random_range(0..3) as f64);
            LabeledSample::new(BiomarkerVector::from_array(v).unwrap(), OcdClass::ALL[r.random_range(0..3)])
        })
        .collect();
    let mut agree = 0;
    let mut total = 0;
    for k in [1, 3, 5] {
        let model = KnnModel::new(&data, k).unwrap();
        for _ in 0..200 {
            let q: [f64; 5] = std::array::from_fn(|_| r.random_range(0..3) as f64 * 0.5);
            let x = BiomarkerVector::from_array(q).unwrap();
            agree += usize::from(knn_predict(&model, &x) == knn_oracle(&data, k, &x));
            total += 1;
        }
    }
    let p = |v: f64, c| LabeledSample::new(BiomarkerVector::from_array([v, 0.0, 0.0, 0.0, 0.0]).unwrap(), c);
    let origin = BiomarkerVector::from_array([0.0; 5]).unwrap();
    let tied = Dataset::new(vec![p(1.0, OcdClass::Oai), p(-1.0, OcdClass::Gai), p(5.0, OcdClass::Hi)]);
    let split = Dataset::new(vec![p(1.0, OcdClass::Oai), p(-1.0, OcdClass::Gai)]);
    let ties = [
        (knn_predict(&KnnModel::new(&tied, 1).unwrap(), &origin), OcdClass::Oai),
        (knn_predict(&KnnModel::new(&tied, 3).unwrap(), &origin), OcdClass::Hi),
        (knn_predict(&KnnModel::new(&split, 2).unwrap(), &origin), OcdClass::Gai),
    ];
    let ties_ok = ties.iter().all(|(a, b)| a == b);
    check(agree == total && ties_ok, format!("{agree}/{total} agree, engineered ties {}", if ties_ok { "ok" } else { "wrong" }))
}

fn metric_identities() -> Outcome {
    let mut r = rng(4);
    let mut bad = 0;
    for _ in 0..1000 {
        let mut counts: [[u64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| r.random_range(0..40)));
        if r.random_range(0..5) == 0 {
            // plenty of diagonal matrices too
            for (p, row) in counts.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    if p != a {
                        *v = 0;
                    }
                }
            }
        }
        let cm = ConfusionMatrix::from_counts(counts);
        if cm.total() == 0 {
            continue;
        }
        let m = compute_metrics(&cm).unwrap();
        let hits = (0..3).map(|c| counts[c][c]).sum::<u64>() as f64 / cm.total() as f64;
        let diagonal = (0..3).all(|p| (0..3).all(|a| p == a || counts[p][a] == 0));
        if m.precision != hits || m.recall != hits || (m.overall_accuracy == 1.0) != diagonal {
            bad += 1;
        }
    }
    let hand = compute_metrics(&ConfusionMatrix::from_counts([[8, 1, 1], [0, 9, 1], [2, 0, 8]])).unwrap();
    let hand_ok = (hand.precision - 25.0 / 30.0).abs() < 1e-12 && (hand.overall_accuracy - 80.0 / 90.0).abs() < 1e-12;
    check(
        bad == 0 && hand_ok,
        format!("{bad} violations in 1000 matrices; hand example precision {:.12} overall {:.12}", hand.precision, hand.overall_accuracy),
    )
}

fn reduced_honn() -> ClassifierSpec {
    ClassifierSpec::Honn {
        grid: HyperGrid {
            activations: vec![ActivationKind::Logistic],
            step_sizes: vec![0.005],
            epochs: vec![2000],
            unit_min: 3,
            unit_max: 8,
            ..Default::default()
        },
        selection: Selection::HeldOut,
        options: SearchOptions { parallel: true, record_timing: false },
    }
}

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let separable = generate(&Preset::Separable.spec(60, 42)).unwrap();
    let lda = cross_validate(&ClassifierSpec::Lda, &separable, 3, 3, 7).unwrap().mean.overall_accuracy;
    let honn = cross_validate(&reduced_honn(), &separable, 3, 3, 7).unwrap().mean.overall_accuracy;
    let sep_secs = start.elapsed().as_secs_f64();

    let overlapping = generate(&Preset::Overlapping.spec(60, 42)).unwrap();
    let o_honn = cross_validate(&reduced_honn(), &overlapping, 3, 3, 7).unwrap().mean.overall_accuracy;
    let o_lr = cross_validate(&ClassifierSpec::default_for(ModelKind::Lr), &overlapping, 3, 3, 7).unwrap().mean.overall_accuracy;
    let o_knn = cross_validate(&ClassifierSpec::default_for(ModelKind::Knn), &overlapping, 3, 3, 7).unwrap().mean.overall_accuracy;
    let secs = start.elapsed().as_secs_f64();
    check(
        lda >= 0.95 && honn >= 0.95 && sep_secs <= 600.0 && o_honn >= o_lr - 0.02 && o_honn >= o_knn - 0.02,
        format!(
            "separable LDA {lda:.4} HONN {honn:.4} ({sep_secs:.1} s); overlapping HONN {o_honn:.4} LR {o_lr:.4} KNN {o_knn:.4} ({secs:.1} s total)"
        ),
    )
}

fn grid_search_contract() -> Outcome {
    let topologies = candidate_topologies(&HyperGrid::default()).len();
    let data = generate(&Preset::Overlapping.spec(15, 9)).unwrap();
    let data = accu_core::data::normalize_fit(&data, 0.0, 1.0).unwrap().apply_dataset(&data).unwrap();
    let grid = HyperGrid {
        activations: vec![ActivationKind::Logistic, ActivationKind::ArcTan],
        step_sizes: vec![0.05],
        epochs: vec![30],
        unit_min: 2,
        unit_max: 3,
        ..Default::default()
    };
    let log = || {
        let r = grid_search_with(&data, &data, &grid, 11, &SearchOptions { parallel: true, record_timing: false }).unwrap();
        let mut buf = Vec::new();
        write_search_log_csv(&r.log, &mut buf).unwrap();
        (r.best_index, buf)
    };
    let (best_a, a) = log();
    let (best_b, b) = log();
    check(
        topologies == 183 && a == b && best_a == best_b,
        format!("{topologies} topologies; two runs {} ({} log bytes)", if a == b { "byte-identical" } else { "differ" }, a.len()),
    )
}

fn service_config() -> ServiceConfig {
    let grid = HyperGrid {
        activations: vec![ActivationKind::Logistic],
        step_sizes: vec![0.05],
        epochs: vec![100],
        unit_min: 3,
        unit_max: 5,
        hidden_layers: vec![0, 1],
        init_std: 0.1,
    };
    ServiceConfig {
        threshold: 30,
        spec: ClassifierSpec::Honn {
            grid,
            selection: Selection::HeldOut,
            options: SearchOptions { parallel: true, record_timing: false },
        },
        seed: 21,
        test_fraction: 1.0 / 3.0,
    }
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

/// Ingests the log over HTTP with inline retraining and returns every file
/// in the model directory, sorted by name.
async fn replay(dir: &Path, log: &[LabeledSample]) -> (Arc<AccuService>, axum::Router, Vec<(String, Vec<u8>)>) {
    let clock = Arc::new(FixedClock(Utc.with_ymd_and_hms(2025, 1, 2, 3, 4, 5).unwrap()));
    let svc = Arc::new(AccuService::open(dir, service_config(), clock).unwrap());
    let app = router(Arc::clone(&svc), RetrainMode::Inline);
    for s in log {
        let f = &s.features;
        let body = json!({ "sd": f.sd, "gp": f.gp, "cat": f.cat, "mal": f.mal, "sc": f.sc, "label": s.label });
        let (status, _) = call(&app, "POST", "/v1/samples", body).await;
        assert_eq!(status, StatusCode::CREATED);
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("models"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    (svc, app, files)
}

fn service_replay() -> Outcome {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let d = generate(&Preset::Overlapping.spec(30, 77)).unwrap();
    let s = d.samples();
    // classes interleaved so every 30-sample window is balanced
    let log: Vec<LabeledSample> = (0..30).flat_map(|i| [s[i].clone(), s[30 + i].clone(), s[60 + i].clone()]).collect();

    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let (svc, app, files_a) = rt.block_on(replay(first.path(), &log));
    let (_, _, files_b) = rt.block_on(replay(second.path(), &log));
    let versions = svc.registry().latest_version();
    let records = files_a.iter().filter(|(n, _)| n.starts_with("model-")).count();
    let identical = files_a == files_b;

    let record = ModelRecord::load(&svc.registry().record_path(versions).unwrap()).unwrap();
    let mut r = rng(55);
    let mut mismatches = 0;
    for _ in 0..50 {
        let base = log[r.random_range(0..log.len())].features.to_array();
        let v: [f64; 5] = std::array::from_fn(|i| (base[i] * (0.8 + 0.4 * r.random::<f64>())).max(0.0));
        let x = BiomarkerVector::from_array(v).unwrap();
        let offline = predict_with_record(&record, &x).unwrap();
        let body = json!({ "sd": v[0], "gp": v[1], "cat": v[2], "mal": v[3], "sc": v[4] });
        let (status, online) = rt.block_on(call(&app, "POST", "/v1/predict", body));
        let scores: Vec<f64> = ["HI", "GAI", "OAI"].iter().map(|k| online["scores"][k].as_f64().unwrap()).collect();
        let same = status == StatusCode::OK
            && online["class"] == offline.class.as_str()
            && online["model_version"] == offline.model_version
            && scores == offline.scores;
        mismatches += usize::from(!same);
    }
    check(
        versions == 3 && records == 3 && identical && mismatches == 0,
        format!(
            "{versions} versions, replay {}, {mismatches}/50 prediction mismatches",
            if identical { "byte-identical" } else { "differs" }
        ),
    )
}

fn logistic_sanity() -> Outcome {
    let mut r = rng(17);
    let normal = [1.0, -2.0, 0.5, 1.5, -1.0];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    while xs.len() < 120 {
        let x: Vec<f64> = (0..5).map(|_| gauss(&mut r)).collect();
        let s: f64 = x.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>() + 0.3;
        if s.abs() > 0.5 {
            ys.push(s > 0.0);
            xs.push(x);
        }
    }
    let cfg = LogisticConfig { rho: 0.005, max_iter: 50_000, ..Default::default() };
    let fit = lr_train_binary(&xs, &ys, &cfg, 3).unwrap();
    let correct = xs
        .iter()
        .zip(&ys)
        .filter(|(x, &y)| {
            let z = fit.coefficients[0] + fit.coefficients[1..].iter().zip(x.iter()).map(|(b, v)| b * v).sum::<f64>();
            (z > 0.0) == y
        })
        .count();
    let train_acc = correct as f64 / xs.len() as f64;

    // gradient of Σ y ln p + (1 − y) ln(1 − p) by central differences
    let ll = |beta: &[f64]| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(x, &y)| {
                let z = beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
                let p = 1.0 / (1.0 + (-z).exp());
                if y { p.ln() } else { (1.0 - p).ln() }
            })
            .sum()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let beta: Vec<f64> = (0..6).map(|_| gauss(&mut r)).collect();
        let analytic = log_likelihood_gradient(&beta, &xs, &ys);
        for i in 0..6 {
            let (mut plus, mut minus) = (beta.clone(), beta.clone());
            plus[i] += 1e-5;
            minus[i] -= 1e-5;
            let numeric = (ll(&plus) - ll(&minus)) / 2e-5;
            worst = worst.max(rel_error(analytic[i], numeric, 1e-6));
        }
    }
    check(
        train_acc == 1.0 && worst < 1e-6,
        format!("training accuracy {train_acc} after {} iterations; gradient rel error {worst:.2e}", fit.iterations),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("gradient oracle", gradient_oracle),
        ("LDA oracle equivalence", lda_oracle),
        ("KNN oracle equivalence", knn_oracle_equivalence),
        ("metric identities", metric_identities),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("grid-search contract", grid_search_contract),
        ("service replay determinism", service_replay),
        ("logistic regression sanity", logistic_sanity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = Duration::as_secs_f64(&start.elapsed());
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{took:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
