//! Classic classifiers over frozen feature vectors: SVMs (linear and RBF
//! kernels, trained by sequential minimal optimization with Platt-calibrated
//! probabilities), CART decision trees, and bagged random forests. All
//! training is deterministic for a fixed seed.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use fakestack_data::Label;
use fakestack_nn::{derive_seed, ClassProbabilities};

use crate::{BackboneError, Result};

/// Which classic head to fit on frozen features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicKind {
    SvmRbf,
    SvmLinear,
    DecisionTree,
}

impl ClassicKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassicKind::SvmRbf => "svm_rbf",
            ClassicKind::SvmLinear => "svm_linear",
            ClassicKind::DecisionTree => "decision_tree",
        }
    }
}

/// A fitted classic head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicHeadModel {
    pub kind: ClassicKind,
    inner: ClassicInner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ClassicInner {
    Svm(SvmModel),
    Tree(DecisionTreeModel),
}

impl ClassicHeadModel {
    /// Hard label per row; an exactly-zero SVM margin or an exactly tied
    /// leaf predicts FAKE.
    pub fn predict(&self, features: &ArrayView2<f64>) -> Result<Vec<Label>> {
        match &self.inner {
            ClassicInner::Svm(svm) => Ok(features
                .rows()
                .into_iter()
                .map(|row| {
                    if svm.decision(row.as_slice().expect("contiguous")) > 0.0 {
                        Label::Real
                    } else {
                        Label::Fake
                    }
                })
                .collect()),
            ClassicInner::Tree(_) => Ok(self
                .probabilities(features)?
                .iter()
                .map(ClassProbabilities::predicted)
                .collect()),
        }
    }

    /// Calibrated probabilities: Platt-scaled margins for SVMs, leaf class
    /// fractions for trees.
    pub fn probabilities(&self, features: &ArrayView2<f64>) -> Result<Vec<ClassProbabilities>> {
        match &self.inner {
            ClassicInner::Svm(svm) => features
                .rows()
                .into_iter()
                .map(|row| {
                    let p_real = svm.probability_real(row.as_slice().expect("contiguous"));
                    ClassProbabilities::new(1.0 - p_real, p_real).map_err(BackboneError::from)
                })
                .collect(),
            ClassicInner::Tree(tree) => features
                .rows()
                .into_iter()
                .map(|row| {
                    let (n_fake, n_real) = tree.leaf_counts(row.as_slice().expect("contiguous"));
                    let total = (n_fake + n_real) as f64;
                    ClassProbabilities::new(n_fake as f64 / total, n_real as f64 / total)
                        .map_err(BackboneError::from)
                })
                .collect(),
        }
    }
}

/// Validates a training matrix: at least two rows, matching label count,
/// finite values, and both classes present.
fn check_training_data(features: &ArrayView2<f64>, labels: &[Label]) -> Result<()> {
    if features.nrows() != labels.len() {
        return Err(BackboneError::Argument(format!(
            "feature rows ({}) and labels ({}) disagree",
            features.nrows(),
            labels.len()
        )));
    }
    if features.nrows() < 2 {
        return Err(BackboneError::Argument(
            "classic training needs at least 2 samples".into(),
        ));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(BackboneError::Argument(
            "features contain non-finite values".into(),
        ));
    }
    let n_fake = labels.iter().filter(|&&l| l == Label::Fake).count();
    let n_real = labels.len() - n_fake;
    if n_fake == 0 || n_real == 0 {
        return Err(BackboneError::DegenerateData(format!(
            "single-class training data ({n_fake} fake, {n_real} real); both classes are required"
        )));
    }
    Ok(())
}

/// Fits the requested classic head on frozen features.
pub fn train_classic_head(
    features: &ArrayView2<f64>,
    labels: &[Label],
    kind: ClassicKind,
) -> Result<ClassicHeadModel> {
    check_training_data(features, labels)?;
    let inner = match kind {
        ClassicKind::SvmLinear => ClassicInner::Svm(SvmModel::fit(features, labels, Kernel::Linear)?),
        ClassicKind::SvmRbf => {
            let gamma = scale_gamma(features);
            ClassicInner::Svm(SvmModel::fit(features, labels, Kernel::Rbf { gamma })?)
        }
        ClassicKind::DecisionTree => {
            ClassicInner::Tree(DecisionTreeModel::fit(features, labels, TREE_MAX_DEPTH, None)?)
        }
    };
    Ok(ClassicHeadModel { kind, inner })
}

/// The `scale` heuristic: 1 / (n_features · variance of all entries).
fn scale_gamma(features: &ArrayView2<f64>) -> f64 {
    let n = features.len() as f64;
    let mean = features.iter().sum::<f64>() / n;
    let var = features.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let var = if var > 0.0 { var } else { 1.0 };
    1.0 / (features.ncols() as f64 * var)
}

// --- Support-vector machine -------------------------------------------------

const SVM_C: f64 = 1.0;
const SVM_TOL: f64 = 1e-3;
const SVM_MAX_PASSES: usize = 5;
const SVM_MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// SVM in dual form: support vectors with their signed coefficients, plus a
/// Platt sigmoid over the decision value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    kernel: Kernel,
    n_features: usize,
    support: Vec<Vec<f64>>,
    coef: Vec<f64>,
    bias: f64,
    platt_a: f64,
    platt_b: f64,
}

impl SvmModel {
    fn fit(features: &ArrayView2<f64>, labels: &[Label], kernel: Kernel) -> Result<Self> {
        let n = features.nrows();
        let rows: Vec<Vec<f64>> = features.rows().into_iter().map(|r| r.to_vec()).collect();
        let y: Vec<f64> = labels
            .iter()
            .map(|l| if *l == Label::Real { 1.0 } else { -1.0 })
            .collect();

        let mut kmat = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval(&rows[i], &rows[j]);
                kmat[i * n + j] = k;
                kmat[j * n + i] = k;
            }
        }

        let mut alpha = vec![0.0_f64; n];
        let mut bias = 0.0_f64;
        let mut rng = ChaCha8Rng::seed_from_u64(0x534d_4f00);
        let decision = |alpha: &[f64], bias: f64, idx: usize| -> f64 {
            let mut s = bias;
            for j in 0..n {
                if alpha[j] != 0.0 {
                    s += alpha[j] * y[j] * kmat[j * n + idx];
                }
            }
            s
        };

        let mut passes = 0;
        let mut sweeps = 0;
        while passes < SVM_MAX_PASSES && sweeps < SVM_MAX_SWEEPS {
            let mut changed = 0;
            for i in 0..n {
                let ei = decision(&alpha, bias, i) - y[i];
                if (y[i] * ei < -SVM_TOL && alpha[i] < SVM_C)
                    || (y[i] * ei > SVM_TOL && alpha[i] > 0.0)
                {
                    let mut j = rng.gen_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    let ej = decision(&alpha, bias, j) - y[j];
                    let (ai_old, aj_old) = (alpha[i], alpha[j]);
                    let (lo, hi) = if (y[i] - y[j]).abs() > f64::EPSILON {
                        ((aj_old - ai_old).max(0.0), (SVM_C + aj_old - ai_old).min(SVM_C))
                    } else {
                        ((ai_old + aj_old - SVM_C).max(0.0), (ai_old + aj_old).min(SVM_C))
                    };
                    if lo >= hi {
                        continue;
                    }
                    let (kii, kjj, kij) = (kmat[i * n + i], kmat[j * n + j], kmat[i * n + j]);
                    let eta = 2.0 * kij - kii - kjj;
                    if eta >= 0.0 {
                        continue;
                    }
                    let mut aj = aj_old - y[j] * (ei - ej) / eta;
                    aj = aj.clamp(lo, hi);
                    if (aj - aj_old).abs() < 1e-5 {
                        continue;
                    }
                    let ai = ai_old + y[i] * y[j] * (aj_old - aj);
                    alpha[i] = ai;
                    alpha[j] = aj;
                    let b1 = bias - ei - y[i] * (ai - ai_old) * kii - y[j] * (aj - aj_old) * kij;
                    let b2 = bias - ej - y[i] * (ai - ai_old) * kij - y[j] * (aj - aj_old) * kjj;
                    bias = if alpha[i] > 0.0 && alpha[i] < SVM_C {
                        b1
                    } else if alpha[j] > 0.0 && alpha[j] < SVM_C {
                        b2
                    } else {
                        (b1 + b2) / 2.0
                    };
                    changed += 1;
                }
            }
            if changed == 0 {
                passes += 1;
            } else {
                passes = 0;
            }
            sweeps += 1;
        }

        let decisions: Vec<f64> = (0..n).map(|i| decision(&alpha, bias, i)).collect();
        let (platt_a, platt_b) = platt_fit(&decisions, &y);

        let mut support = Vec::new();
        let mut coef = Vec::new();
        for i in 0..n {
            if alpha[i] > 1e-12 {
                support.push(rows[i].clone());
                coef.push(alpha[i] * y[i]);
            }
        }
        Ok(Self {
            kernel,
            n_features: features.ncols(),
            support,
            coef,
            bias,
            platt_a,
            platt_b,
        })
    }

    fn decision(&self, x: &[f64]) -> f64 {
        let mut s = self.bias;
        for (sv, c) in self.support.iter().zip(&self.coef) {
            s += c * self.kernel.eval(sv, x);
        }
        s
    }

    fn probability_real(&self, x: &[f64]) -> f64 {
        let f = self.platt_a * self.decision(x) + self.platt_b;
        // p(real) = 1 / (1 + exp(f)), computed without overflow.
        if f >= 0.0 {
            let e = (-f).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + f.exp())
        }
    }
}

/// Newton fit of the Platt sigmoid p(real|f) = 1/(1+exp(A·f+B)) with the
/// usual prior-corrected targets and backtracking line search.
fn platt_fit(decisions: &[f64], y: &[f64]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi_target = (prior1 + 1.0) / (prior1 + 2.0);
    let lo_target = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y
        .iter()
        .map(|&v| if v > 0.0 { hi_target } else { lo_target })
        .collect();

    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let fapb = a * f + b;
                if fapb >= 0.0 {
                    ti * fapb + (1.0 + (-fapb).exp()).ln()
                } else {
                    (ti - 1.0) * fapb + (1.0 + fapb.exp()).ln()
                }
            })
            .sum()
    };

    let sigma = 1e-12;
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&f, &ti) in decisions.iter().zip(&t) {
            let fapb = a * f + b;
            let (p, q) = if fapb >= 0.0 {
                let e = (-fapb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fapb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut stepped = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                stepped = true;
                break;
            }
            step /= 2.0;
        }
        if !stepped {
            break;
        }
    }
    (a, b)
}

// --- Decision tree and random forest ----------------------------------------

const TREE_MAX_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Leaf {
        n_fake: usize,
        n_real: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

/// A CART tree split on Gini impurity with midpoint thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    root: TreeNode,
    n_features: usize,
}

struct TreeBuilder<'a> {
    features: ArrayView2<'a, f64>,
    labels: &'a [Label],
    max_depth: usize,
    /// (rng, max_features): sample a feature subset per split (random
    /// forest); `None` considers every feature (plain CART).
    feature_sampling: Option<(ChaCha8Rng, usize)>,
}

impl DecisionTreeModel {
    fn fit(
        features: &ArrayView2<f64>,
        labels: &[Label],
        max_depth: usize,
        feature_sampling: Option<(ChaCha8Rng, usize)>,
    ) -> Result<Self> {
        let mut builder = TreeBuilder {
            features: features.view(),
            labels,
            max_depth,
            feature_sampling,
        };
        let indices: Vec<usize> = (0..features.nrows()).collect();
        let root = builder.build(&indices, 0);
        Ok(Self {
            root,
            n_features: features.ncols(),
        })
    }

    fn leaf_counts(&self, x: &[f64]) -> (usize, usize) {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { n_fake, n_real } => return (*n_fake, *n_real),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

fn gini(n_fake: usize, n_real: usize) -> f64 {
    let n = (n_fake + n_real) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let pf = n_fake as f64 / n;
    let pr = n_real as f64 / n;
    1.0 - pf * pf - pr * pr
}

impl TreeBuilder<'_> {
    fn build(&mut self, indices: &[usize], depth: usize) -> TreeNode {
        let n_fake = indices
            .iter()
            .filter(|&&i| self.labels[i] == Label::Fake)
            .count();
        let n_real = indices.len() - n_fake;
        let leaf = TreeNode::Leaf { n_fake, n_real };
        if n_fake == 0 || n_real == 0 || depth >= self.max_depth || indices.len() < 2 {
            return leaf;
        }

        let candidates: Vec<usize> = match &mut self.feature_sampling {
            None => (0..self.features.ncols()).collect(),
            Some((rng, max_features)) => {
                let mut pool: Vec<usize> = (0..self.features.ncols()).collect();
                let take = (*max_features).min(pool.len());
                let mut picked = Vec::with_capacity(take);
                for _ in 0..take {
                    let at = rng.gen_range(0..pool.len());
                    picked.push(pool.swap_remove(at));
                }
                picked.sort_unstable();
                picked
            }
        };

        let mut best: Option<(f64, usize, f64)> = None; // (impurity, feature, threshold)
        for &f in &candidates {
            let mut values: Vec<(f64, Label)> = indices
                .iter()
                .map(|&i| (self.features[(i, f)], self.labels[i]))
                .collect();
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            let mut left_fake = 0;
            let mut left_real = 0;
            for w in 0..values.len() - 1 {
                match values[w].1 {
                    Label::Fake => left_fake += 1,
                    Label::Real => left_real += 1,
                }
                if values[w].0 == values[w + 1].0 {
                    continue;
                }
                let right_fake = n_fake - left_fake;
                let right_real = n_real - left_real;
                let nl = (left_fake + left_real) as f64;
                let nr = (right_fake + right_real) as f64;
                let impurity = (nl * gini(left_fake, left_real)
                    + nr * gini(right_fake, right_real))
                    / indices.len() as f64;
                let threshold = (values[w].0 + values[w + 1].0) / 2.0;
                let better = match &best {
                    None => true,
                    Some((bi, ..)) => impurity < *bi - 1e-15,
                };
                if better {
                    best = Some((impurity, f, threshold));
                }
            }
        }

        let Some((impurity, feature, threshold)) = best else {
            return leaf;
        };
        if impurity >= gini(n_fake, n_real) - 1e-15 {
            return leaf;
        }
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.features[(i, feature)] <= threshold);
        if left_idx.is_empty() || right_idx.is_empty() {
            return leaf;
        }
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(self.build(&left_idx, depth + 1)),
            right: Box::new(self.build(&right_idx, depth + 1)),
        }
    }
}

/// A bagged forest of Gini trees with per-split feature sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    trees: Vec<DecisionTreeModel>,
    n_features: usize,
}

/// Forest size used by the stacking meta-learner's random-forest kind.
pub const FOREST_DEFAULT_TREES: usize = 100;

/// Fits a random forest: bootstrap rows per tree, √d features per split.
pub fn train_random_forest(
    features: &ArrayView2<f64>,
    labels: &[Label],
    n_trees: usize,
    seed: u64,
) -> Result<RandomForestModel> {
    check_training_data(features, labels)?;
    if n_trees == 0 {
        return Err(BackboneError::Argument("n_trees must be ≥ 1".into()));
    }
    let n = features.nrows();
    let max_features = (features.ncols() as f64).sqrt().ceil() as usize;
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let mut boot_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * t as u64));
        let split_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * t as u64 + 1));
        let sample: Vec<usize> = (0..n).map(|_| boot_rng.gen_range(0..n)).collect();
        let boot_features = features.select(ndarray::Axis(0), &sample);
        let boot_labels: Vec<Label> = sample.iter().map(|&i| labels[i]).collect();
        // Bootstrap samples can come out single-class; grow the tree anyway
        // (it becomes a single leaf voting for that class).
        trees.push(DecisionTreeModel::fit(
            &boot_features.view(),
            &boot_labels,
            TREE_MAX_DEPTH,
            Some((split_rng, max_features.max(1))),
        )?);
    }
    Ok(RandomForestModel {
        trees,
        n_features: features.ncols(),
    })
}

impl RandomForestModel {
    /// Mean of per-tree leaf class fractions.
    pub fn probabilities(&self, features: &ArrayView2<f64>) -> Result<Vec<ClassProbabilities>> {
        features
            .rows()
            .into_iter()
            .map(|row| {
                let x = row.as_slice().expect("contiguous");
                let mut p_real = 0.0;
                for tree in &self.trees {
                    let (n_fake, n_real) = tree.leaf_counts(x);
                    p_real += n_real as f64 / (n_fake + n_real) as f64;
                }
                p_real /= self.trees.len() as f64;
                ClassProbabilities::new(1.0 - p_real, p_real).map_err(BackboneError::from)
            })
            .collect()
    }

    pub fn predict(&self, features: &ArrayView2<f64>) -> Result<Vec<Label>> {
        Ok(self
            .probabilities(features)?
            .iter()
            .map(ClassProbabilities::predicted)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn ring_data(n_per_class: usize) -> (Array2<f64>, Vec<Label>) {
        // Fake points inside radius 1, real points on a ring at radius ~2.5.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_per_class {
            let angle = i as f64 / n_per_class as f64 * std::f64::consts::TAU;
            let r = 0.2 + 0.5 * ((i % 3) as f64 / 3.0);
            rows.push([r * angle.cos(), r * angle.sin()]);
            labels.push(Label::Fake);
            let r = 2.3 + 0.4 * ((i % 4) as f64 / 4.0);
            rows.push([r * angle.cos(), r * angle.sin()]);
            labels.push(Label::Real);
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        (
            Array2::from_shape_vec((labels.len(), 2), flat).unwrap(),
            labels,
        )
    }

    #[test]
    fn linear_svm_separates_a_two_point_toy_set() {
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        let labels = vec![Label::Fake, Label::Real];
        let model = train_classic_head(&x.view(), &labels, ClassicKind::SvmLinear).unwrap();
        assert_eq!(model.predict(&x.view()).unwrap(), labels);
        let probs = model.probabilities(&x.view()).unwrap();
        assert!(probs[1].p_real > probs[0].p_real);
    }

    #[test]
    fn rbf_svm_fits_a_radially_separated_set() {
        let (x, labels) = ring_data(20);
        let model = train_classic_head(&x.view(), &labels, ClassicKind::SvmRbf).unwrap();
        let predicted = model.predict(&x.view()).unwrap();
        let correct = predicted
            .iter()
            .zip(&labels)
            .filter(|(a, b)| a == b)
            .count();
        assert!(
            correct as f64 / labels.len() as f64 >= 0.95,
            "rbf svm got {correct}/{}",
            labels.len()
        );
    }

    #[test]
    fn decision_tree_memorizes_distinct_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_simple_fn((24, 3), || rng.gen_range(-1.0..1.0));
        let labels: Vec<Label> = (0..24)
            .map(|i| if i % 3 == 0 { Label::Real } else { Label::Fake })
            .collect();
        let model = train_classic_head(&x.view(), &labels, ClassicKind::DecisionTree).unwrap();
        assert_eq!(model.predict(&x.view()).unwrap(), labels);
        // Pure leaves give extreme calibrated probabilities.
        let probs = model.probabilities(&x.view()).unwrap();
        assert!(probs.iter().all(|p| p.p_real == 0.0 || p.p_real == 1.0));
    }

    #[test]
    fn single_class_labels_are_a_degenerate_data_error() {
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        for kind in [ClassicKind::SvmRbf, ClassicKind::SvmLinear, ClassicKind::DecisionTree] {
            let err = train_classic_head(&x.view(), &[Label::Fake, Label::Fake], kind)
                .unwrap_err();
            assert!(
                matches!(err, BackboneError::DegenerateData(_)),
                "{kind:?} gave {err:?}"
            );
        }
    }

    #[test]
    fn random_forest_is_deterministic_and_accurate_on_the_ring() {
        let (x, labels) = ring_data(15);
        let a = train_random_forest(&x.view(), &labels, 25, 9).unwrap();
        let b = train_random_forest(&x.view(), &labels, 25, 9).unwrap();
        let pa = a.probabilities(&x.view()).unwrap();
        let pb = b.probabilities(&x.view()).unwrap();
        for (u, v) in pa.iter().zip(&pb) {
            assert_eq!(u.p_real, v.p_real);
        }
        let predicted = a.predict(&x.view()).unwrap();
        let correct = predicted
            .iter()
            .zip(&labels)
            .filter(|(u, v)| u == v)
            .count();
        assert!(correct as f64 / labels.len() as f64 >= 0.9);
    }

    #[test]
    fn platt_probabilities_order_with_the_margin() {
        let x = array![
            [-2.0, 0.0],
            [-1.5, 0.1],
            [-1.0, -0.1],
            [1.0, 0.0],
            [1.5, 0.1],
            [2.0, -0.1]
        ];
        let labels = vec![
            Label::Fake,
            Label::Fake,
            Label::Fake,
            Label::Real,
            Label::Real,
            Label::Real,
        ];
        let model = train_classic_head(&x.view(), &labels, ClassicKind::SvmLinear).unwrap();
        let probe = array![[-3.0, 0.0], [0.0, 0.0], [3.0, 0.0]];
        let probs = model.probabilities(&probe.view()).unwrap();
        assert!(probs[0].p_real < probs[1].p_real);
        assert!(probs[1].p_real < probs[2].p_real);
    }
}
