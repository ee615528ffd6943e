//! Browser bindings for the demo page in `www/`.
//!
//! Every exported function takes and returns JSON strings so the page needs
//! no generated glue beyond what `wasm-bindgen` emits. The plain-Rust
//! versions (`*_json`) carry the logic and are what the native tests call.

use pu_grn::pulearn::{Learner, Scorer};
use pu_grn::{
    generate, run_iterations, ClassifierSpec, DatasetSplit, ForestParams, KernelKind, LearningMode,
    OddSplit, RunConfig, SvmParams, SynthSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Demo plots live on this square.
pub const EXTENT: f64 = 1.0;
const MAX_GRID: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// +1 or -1.
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    /// Cells per side; `probs` is row-major with row 0 at y = -EXTENT.
    pub n: usize,
    pub probs: Vec<f64>,
    pub training_accuracy: f64,
    /// Support vectors for the SVM, empty for the forest.
    pub support: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub tfs: Vec<String>,
    /// One accuracy trace per TF, K + 1 entries each.
    pub curves: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Fraction of withheld true edges among the top-scored unlabeled pairs
    /// (as many as there are withheld edges), per TF, in the final state.
    pub hidden_recall: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct CurveRequest {
    pub seed: u64,
    pub iterations: usize,
    pub classifier: String,
    pub mode: String,
    pub n_trees: usize,
    pub strength: f64,
    pub noise: f64,
}

impl Default for CurveRequest {
    fn default() -> Self {
        CurveRequest {
            seed: 0,
            iterations: 10,
            classifier: "svm".into(),
            mode: "transductive".into(),
            n_trees: 50,
            strength: 0.9,
            noise: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SurfaceRequest {
    pub points: Vec<Point>,
    pub grid: usize,
    pub seed: u64,
    pub kernel: String,
    pub gamma: Option<f64>,
    pub c: f64,
    pub degree: u32,
    pub n_trees: usize,
    pub min_leaf: usize,
}

impl Default for SurfaceRequest {
    fn default() -> Self {
        SurfaceRequest {
            points: Vec::new(),
            grid: 60,
            seed: 0,
            kernel: "rbf".into(),
            gamma: Some(2.0),
            c: 10.0,
            degree: 3,
            n_trees: 50,
            min_leaf: 1,
        }
    }
}

fn fit_surface(req: &SurfaceRequest, spec: &ClassifierSpec) -> Result<Surface, String> {
    if req.grid < 2 || req.grid > MAX_GRID {
        return Err(format!("grid must be in 2..={MAX_GRID}, got {}", req.grid));
    }
    let has = |l: f64| req.points.iter().any(|p| p.label == l);
    if !has(1.0) || !has(-1.0) {
        return Err("need at least one point of each class".into());
    }
    let rows: Vec<[f64; 2]> = req.points.iter().map(|p| [p.x, p.y]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let labels: Vec<f64> = req.points.iter().map(|p| p.label).collect();
    let model = spec
        .fit(&refs, &labels, req.seed)
        .map_err(|e| e.to_string())?;

    let n = req.grid;
    let step = 2.0 * EXTENT / (n - 1) as f64;
    let mut probs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let cell = [-EXTENT + j as f64 * step, -EXTENT + i as f64 * step];
            probs.push(model.predict_proba(&cell));
        }
    }
    let correct = rows
        .iter()
        .zip(&labels)
        .filter(|(r, &l)| (model.predict_proba(r.as_slice()) >= 0.5) == (l > 0.0))
        .count();
    let support = match &model {
        pu_grn::pulearn::TrainedModel::Svm(m) => {
            m.support_vectors().iter().map(|v| [v[0], v[1]]).collect()
        }
        pu_grn::pulearn::TrainedModel::Forest(_) => Vec::new(),
    };
    Ok(Surface {
        n,
        probs,
        training_accuracy: correct as f64 / rows.len() as f64,
        support,
    })
}

pub fn svm_surface_json(request: &str) -> Result<String, String> {
    let req: SurfaceRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let kernel: KernelKind = req.kernel.parse()?;
    let spec = ClassifierSpec::Svm(SvmParams {
        kernel,
        gamma: req.gamma,
        degree: req.degree,
        c: req.c,
        ..Default::default()
    });
    let s = fit_surface(&req, &spec)?;
    Ok(serde_json::to_string(&s).expect("plain data"))
}

pub fn forest_surface_json(request: &str) -> Result<String, String> {
    let req: SurfaceRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let spec = ClassifierSpec::Forest(ForestParams {
        n_trees: req.n_trees,
        min_leaf: req.min_leaf,
        ..Default::default()
    });
    let s = fit_surface(&req, &spec)?;
    Ok(serde_json::to_string(&s).expect("plain data"))
}

/// Runs the PU loop for every TF of a default-shaped planted dataset.
pub fn pu_curves_json(request: &str) -> Result<String, String> {
    let req: CurveRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let mode: LearningMode = req.mode.parse()?;
    let classifier = match req.classifier.as_str() {
        "svm" => ClassifierSpec::Svm(SvmParams::default()),
        "rf" => ClassifierSpec::Forest(ForestParams {
            n_trees: req.n_trees,
            ..Default::default()
        }),
        other => return Err(format!("unknown classifier `{other}`")),
    };
    let data = generate(&SynthSpec {
        seed: req.seed,
        regulation_strength: req.strength,
        noise_std: req.noise,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let matrix = data.matrix.standardize_rows().map_err(|e| e.to_string())?;
    let hidden = data.hidden_positives();
    let cfg = RunConfig {
        mode,
        classifier,
        iterations: req.iterations,
        seed: req.seed,
        threshold: 0.5,
    };

    let mut out = Curves {
        tfs: data.tf_ids.clone(),
        curves: Vec::new(),
        mean: vec![0.0; req.iterations + 1],
        hidden_recall: Vec::new(),
    };
    for tf in &data.tf_ids {
        let split = DatasetSplit::for_tf(
            tf,
            &matrix,
            &data.positives,
            req.seed,
            OddSplit::ExtraToTraining,
        )
        .map_err(|e| e.to_string())?;
        let trace = run_iterations(&split, &matrix, &cfg).map_err(|e| e.to_string())?;
        let acc = trace.accuracies();
        for (m, a) in out.mean.iter_mut().zip(&acc) {
            *m += a / data.tf_ids.len() as f64;
        }
        out.curves.push(acc);

        let mut ranked: Vec<_> = trace.final_state().scores.iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let mine = hidden.iter().filter(|p| &p.tf == tf).count();
        let hits = ranked
            .iter()
            .take(mine)
            .filter(|(p, _)| hidden.contains(*p))
            .count();
        out.hidden_recall.push(if mine == 0 {
            0.0
        } else {
            hits as f64 / mine as f64
        });
    }
    Ok(serde_json::to_string(&out).expect("plain data"))
}

/// Two noisy blobs of `n` points each, for the "random" button.
pub fn demo_points_json(seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(2 * n);
    for (cx, cy, label) in [(-0.35, 0.3, 1.0), (0.35, -0.3, -1.0)] {
        for _ in 0..n {
            let x: f64 = cx + rng.random_range(-0.45..0.45);
            let y: f64 = cy + rng.random_range(-0.45..0.45);
            pts.push(Point {
                x: x.clamp(-EXTENT, EXTENT),
                y: y.clamp(-EXTENT, EXTENT),
                label,
            });
        }
    }
    serde_json::to_string(&pts).expect("plain data")
}

#[wasm_bindgen]
pub fn pu_curves(request: &str) -> Result<String, JsError> {
    pu_curves_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn svm_surface(request: &str) -> Result<String, JsError> {
    svm_surface_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn forest_surface(request: &str) -> Result<String, JsError> {
    forest_surface_json(request).map_err(|e| JsError::new(&e))
}

// u32 so the page can pass plain numbers instead of BigInt
#[wasm_bindgen]
pub fn demo_points(seed: u32, n: u32) -> String {
    demo_points_json(seed.into(), n as usize)
}
