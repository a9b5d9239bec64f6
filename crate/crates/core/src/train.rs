//! Gradient training of diagonal SSMs on synthetic memory tasks.
//!
//! Gradients are analytic. With `z_j = Δ w_j`, gain `G_j = (e^{z_j} - 1)/w_j`
//! and kernel `ρ[k] = Re Σ_j c_j G_j e^{z_j k}`, and writing
//! `S_j = Σ_k g_k e^{z_j k}`, `S'_j = Σ_k g_k k e^{z_j k}` for the upstream
//! gradient `g = ∂loss/∂ρ`:
//!
//! ```text
//! ∂/∂c_j  : G_j S_j                               (Re c: Re, Im c: -Im)
//! ∂/∂w_j  : c_j Δ² (r'(z_j) S_j + r(z_j) S'_j)    (Re w: Re, Im w: -Im)
//! ∂/∂Δ    : Re Σ_j c_j (e^{z_j} S_j + (e^{z_j} - 1) S'_j)
//! ```
//!
//! where `r(z) = (e^z - 1)/z`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ssm::{
    exp_m1, geometric_powers, safe_ez_ratio, safe_ez_ratio_derivative, zoh_kernel, SsmModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TaskKind {
    /// `channels` independent sequences; every per-step output must reproduce
    /// its own channel's input from `delay` steps earlier.
    Copying { channels: usize, delay: usize },
    /// `y* = x_0`, target kernel `(0, …, 0, 1)`.
    Shift,
    /// `y* = x_0 + x_{L-1}`, target kernel `(1, 0, …, 0, 1)`.
    FirstLast,
    CustomTarget(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub kind: TaskKind,
    pub len: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Task {
    pub fn new(kind: TaskKind, len: usize) -> Self {
        Self {
            kind,
            len,
            n_train: 1000,
            n_test: 1000,
            seed: 0,
        }
    }

    pub fn channels(&self) -> usize {
        match self.kind {
            TaskKind::Copying { channels, .. } => channels,
            _ => 1,
        }
    }

    /// Target kernel `ρ*` for final-output tasks.
    pub fn target_kernel(&self) -> Option<Vec<f64>> {
        let len = self.len;
        match &self.kind {
            TaskKind::Shift => {
                let mut t = vec![0.0; len];
                t[len - 1] = 1.0;
                Some(t)
            }
            TaskKind::FirstLast => {
                let mut t = vec![0.0; len];
                t[0] = 1.0;
                t[len - 1] = 1.0;
                Some(t)
            }
            TaskKind::CustomTarget(t) => Some(t.clone()),
            TaskKind::Copying { .. } => None,
        }
    }

    pub fn objective(&self) -> Objective {
        match self.kind {
            TaskKind::Copying { delay, .. } => Objective::PerPosition { from: delay },
            _ => Objective::FinalOutput,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.len < 2 {
            return Err(Error::InvalidInput("task length must be >= 2".into()));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidInput("need train and test samples".into()));
        }
        match &self.kind {
            TaskKind::CustomTarget(t) if t.len() != self.len => Err(Error::LengthMismatch {
                expected: self.len,
                got: t.len(),
            }),
            TaskKind::Copying { channels, delay } if *channels == 0 || *delay >= self.len => {
                Err(Error::InvalidInput(format!(
                    "copying needs channels >= 1 and delay < L (got {channels}, {delay})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Which outputs enter the squared loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// `(y_L - y*)²`; labels are `N × 1`.
    FinalOutput,
    /// Mean of `(y_l - y*_l)²` over positions `l >= from`, where
    /// `y_l = sum_{k<=l} ρ_k x_{l-k}` is the output after reading `x_l`;
    /// labels are `N × L`.
    PerPosition { from: usize },
}

/// Per-channel train/test inputs and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub x_train: Vec<DMatrix<f64>>,
    pub y_train: Vec<DMatrix<f64>>,
    pub x_test: Vec<DMatrix<f64>>,
    pub y_test: Vec<DMatrix<f64>>,
}

fn labels(task: &Task, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, len) = x.shape();
    match task.kind {
        TaskKind::Copying { delay, .. } => {
            DMatrix::from_fn(n, len, |i, l| if l >= delay { x[(i, l - delay)] } else { 0.0 })
        }
        _ => {
            let target = task.target_kernel().expect("final-output task");
            DMatrix::from_fn(n, 1, |i, _| {
                target
                    .iter()
                    .enumerate()
                    .map(|(k, r)| r * x[(i, len - 1 - k)])
                    .sum()
            })
        }
    }
}

/// iid standard normal inputs with labels from the task's target.
pub fn make_task_data(task: &Task) -> Result<TaskData> {
    task.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let mut draw = |n: usize| -> DMatrix<f64> {
        DMatrix::from_fn(n, task.len, |_, _| rng.sample::<f64, _>(StandardNormal))
    };
    let channels = task.channels();
    let x_train: Vec<_> = (0..channels).map(|_| draw(task.n_train)).collect();
    let x_test: Vec<_> = (0..channels).map(|_| draw(task.n_test)).collect();
    Ok(TaskData {
        y_train: x_train.iter().map(|x| labels(task, x)).collect(),
        y_test: x_test.iter().map(|x| labels(task, x)).collect(),
        x_train,
        x_test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub delta: f64,
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
    pub c_re: Vec<f64>,
    pub c_im: Vec<f64>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.delta.is_finite()
            && self
                .real
                .iter()
                .chain(&self.imag)
                .chain(&self.c_re)
                .chain(&self.c_im)
                .all(|g| g.is_finite())
    }

    /// Flattened as `[Δ, Re w, Im w, Re c, Im c]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 4 * self.real.len());
        out.push(self.delta);
        out.extend(&self.real);
        out.extend(&self.imag);
        out.extend(&self.c_re);
        out.extend(&self.c_im);
        out
    }
}

/// Parameters flattened in the order of [`Gradients::flatten`].
pub fn flatten_params(model: &SsmModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(1 + 4 * model.size());
    out.push(model.delta());
    out.extend(model.state().real());
    out.extend(model.state().imag());
    out.extend(model.readout().iter().map(|c| c.re));
    out.extend(model.readout().iter().map(|c| c.im));
    out
}

/// Writes flattened parameters back; no validation.
pub fn unflatten_params(model: &mut SsmModel, params: &[f64]) {
    let m = model.size();
    model.set_delta(params[0]);
    model.state_mut().real_mut().copy_from_slice(&params[1..1 + m]);
    model.state_mut().imag_mut().copy_from_slice(&params[1 + m..1 + 2 * m]);
    for (j, c) in model.readout_mut().iter_mut().enumerate() {
        *c = Complex64::new(params[1 + 2 * m + j], params[1 + 3 * m + j]);
    }
}

fn check_shapes(x: &DMatrix<f64>, y: &DMatrix<f64>, objective: Objective) -> Result<()> {
    let (n, len) = x.shape();
    if n == 0 || len == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let want = match objective {
        Objective::FinalOutput => 1,
        Objective::PerPosition { from } => {
            if from >= len {
                return Err(Error::InvalidInput(format!("loss start {from} >= L = {len}")));
            }
            len
        }
    };
    if y.nrows() != n || y.ncols() != want {
        return Err(Error::LengthMismatch {
            expected: n * want,
            got: y.nrows() * y.ncols(),
        });
    }
    Ok(())
}

/// Loss and its gradient with respect to the kernel `ρ`.
pub fn kernel_loss_and_gradient(
    kernel: &[f64],
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    objective: Objective,
) -> (f64, Vec<f64>) {
    let (n, len) = x.shape();
    let mut grad = vec![0.0; len];
    let mut loss = 0.0;
    match objective {
        Objective::FinalOutput => {
            let scale = 2.0 / n as f64;
            for i in 0..n {
                let out: f64 = (0..len).map(|k| kernel[k] * x[(i, len - 1 - k)]).sum();
                let r = out - y[(i, 0)];
                loss += r * r;
                for (k, g) in grad.iter_mut().enumerate() {
                    *g += scale * r * x[(i, len - 1 - k)];
                }
            }
            loss /= n as f64;
        }
        Objective::PerPosition { from } => {
            let count = (n * (len - from)) as f64;
            // outputs = X T with T[p, l] = ρ[l - p] for p <= l
            let toeplitz = DMatrix::from_fn(len, len, |p, l| if p <= l { kernel[l - p] } else { 0.0 });
            let mut resid = x * toeplitz - y;
            resid.columns_mut(0, from).fill(0.0);
            loss = resid.norm_squared();
            // dL/dρ[k] = (2/count) sum of the k-th superdiagonal of X^T R
            let cross = x.transpose() * resid;
            let scale = 2.0 / count;
            for (k, g) in grad.iter_mut().enumerate() {
                *g = scale * (0..len - k).map(|p| cross[(p, p + k)]).sum::<f64>();
            }
            loss /= count;
        }
    }
    (loss, grad)
}

/// Mean squared loss of the model on `(x, y)`.
pub fn loss(model: &SsmModel, x: &DMatrix<f64>, y: &DMatrix<f64>, objective: Objective) -> Result<f64> {
    check_shapes(x, y, objective)?;
    let kernel = zoh_kernel(model, x.ncols())?;
    Ok(kernel_loss_and_gradient(&kernel.values, x, y, objective).0)
}

/// Chains a kernel gradient back to the model parameters.
pub fn kernel_gradient_to_params(model: &SsmModel, kernel_grad: &[f64]) -> Gradients {
    let m = model.size();
    let len = kernel_grad.len();
    let delta = model.delta();
    let mut out = Gradients {
        delta: 0.0,
        real: vec![0.0; m],
        imag: vec![0.0; m],
        c_re: vec![0.0; m],
        c_im: vec![0.0; m],
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut powers = vec![zero; len];
    for (j, w) in model.state().iter().enumerate() {
        let z = w * delta;
        geometric_powers(z, &mut powers);
        let (mut s, mut s1) = (zero, zero);
        for (k, (p, g)) in powers.iter().zip(kernel_grad).enumerate() {
            s += p * *g;
            s1 += p * (*g * k as f64);
        }
        let c = model.readout()[j];
        let gain = delta * safe_ez_ratio(z);
        let dc = gain * s;
        out.c_re[j] = dc.re;
        out.c_im[j] = -dc.im;
        let dw = c * delta * delta * (safe_ez_ratio_derivative(z) * s + safe_ez_ratio(z) * s1);
        out.real[j] = dw.re;
        out.imag[j] = -dw.im;
        out.delta += (c * (z.exp() * s + exp_m1(z) * s1)).re;
    }
    out
}

/// Loss and exact parameter gradients on a batch.
pub fn gradients(
    model: &SsmModel,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    objective: Objective,
) -> Result<(f64, Gradients)> {
    check_shapes(x, y, objective)?;
    let kernel = zoh_kernel(model, x.ncols())?;
    let (loss, kernel_grad) = kernel_loss_and_gradient(&kernel.values, x, y, objective);
    Ok((loss, kernel_gradient_to_params(model, &kernel_grad)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    /// Learning rate for `Δ`, `Re w`, `Im w`.
    pub lr_state: f64,
    /// Learning rate for `c`.
    pub lr_readout: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            lr_state: 1e-3,
            lr_readout: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 64,
            eval_every: 100,
            seed: 0,
        }
    }
}

/// Adam with one learning rate per coordinate.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(size: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            first: vec![0.0; size],
            second: vec![0.0; size],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.first[i] = self.beta1 * self.first[i] + (1.0 - self.beta1) * g;
            self.second[i] = self.beta2 * self.second[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first[i] / c1;
            let v_hat = self.second[i] / c2;
            params[i] -= lr[i] * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Steps at which the losses were evaluated.
    pub eval_steps: Vec<usize>,
    #[serde(with = "nan_as_null")]
    pub loss_train: Vec<f64>,
    #[serde(with = "nan_as_null")]
    pub loss_test: Vec<f64>,
    /// Final kernel of the first channel.
    #[serde(with = "nan_as_null")]
    pub kernel: Vec<f64>,
    /// Fraction of `Re w >= 0` over every channel after training.
    pub re_nonneg_ratio: f64,
    /// Step at which a loss or parameter became non-finite or `Δ` left `(0, ∞)`.
    pub diverged_at: Option<usize>,
    #[serde(skip)]
    pub models: Vec<SsmModel>,
}

/// JSON has no NaN or infinity; non-finite entries are written as `null`
/// and read back as NaN.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

impl TrainReport {
    pub fn final_test_loss(&self) -> f64 {
        *self.loss_test.last().unwrap_or(&f64::NAN)
    }

    pub fn final_train_loss(&self) -> f64 {
        *self.loss_train.last().unwrap_or(&f64::NAN)
    }
}

fn mean_loss(models: &[SsmModel], xs: &[DMatrix<f64>], ys: &[DMatrix<f64>], objective: Objective) -> Result<f64> {
    let mut total = 0.0;
    for ((model, x), y) in models.iter().zip(xs).zip(ys) {
        total += loss(model, x, y, objective)?;
    }
    Ok(total / models.len() as f64)
}

fn re_nonneg_ratio(models: &[SsmModel]) -> f64 {
    let (mut nonneg, mut total) = (0usize, 0usize);
    for m in models {
        nonneg += m.state().real().iter().filter(|a| **a >= 0.0).count();
        total += m.size();
    }
    nonneg as f64 / total as f64
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Trains one model per task channel with Adam on mini-batches.
///
/// The reported loss is the mean over channels of each channel's mean squared
/// error. Every channel shares the batch indices of a step.
pub fn train(models: Vec<SsmModel>, task: &Task, config: &TrainConfig) -> Result<TrainReport> {
    let data = make_task_data(task)?;
    train_on(models, &data, task.objective(), config)
}

pub fn train_on(
    mut models: Vec<SsmModel>,
    data: &TaskData,
    objective: Objective,
    config: &TrainConfig,
) -> Result<TrainReport> {
    if models.len() != data.x_train.len() {
        return Err(Error::LengthMismatch {
            expected: data.x_train.len(),
            got: models.len(),
        });
    }
    if config.batch_size == 0 || config.eval_every == 0 {
        return Err(Error::InvalidInput("batch size and eval interval must be positive".into()));
    }
    if !(config.lr_state > 0.0 && config.lr_readout > 0.0) {
        return Err(Error::InvalidInput("learning rates must be positive".into()));
    }
    let n_train = data.x_train[0].nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params: Vec<Vec<f64>> = models.iter().map(flatten_params).collect();
    let mut optimizers: Vec<Adam> = params
        .iter()
        .map(|p| Adam::new(p.len(), config.beta1, config.beta2, config.eps))
        .collect();
    let rates: Vec<Vec<f64>> = models
        .iter()
        .map(|model| {
            let m = model.size();
            (0..1 + 4 * m)
                .map(|i| if i < 1 + 2 * m { config.lr_state } else { config.lr_readout })
                .collect()
        })
        .collect();

    let mut report = TrainReport {
        eval_steps: Vec::new(),
        loss_train: Vec::new(),
        loss_test: Vec::new(),
        kernel: Vec::new(),
        re_nonneg_ratio: 0.0,
        diverged_at: None,
        models: Vec::new(),
    };
    let evaluate = |step: usize, models: &[SsmModel], report: &mut TrainReport| -> Result<bool> {
        let train = mean_loss(models, &data.x_train, &data.y_train, objective)?;
        let test = mean_loss(models, &data.x_test, &data.y_test, objective)?;
        report.eval_steps.push(step);
        report.loss_train.push(train);
        report.loss_test.push(test);
        Ok(train.is_finite() && test.is_finite())
    };

    if !evaluate(0, &models, &mut report)? {
        report.diverged_at = Some(0);
    }
    let mut batch = vec![0usize; config.batch_size.min(n_train)];
    for step in 1..=config.steps {
        if report.diverged_at.is_some() {
            break;
        }
        for b in batch.iter_mut() {
            *b = rng.random_range(0..n_train);
        }
        for (ch, model) in models.iter_mut().enumerate() {
            let xb = select_rows(&data.x_train[ch], &batch);
            let yb = select_rows(&data.y_train[ch], &batch);
            let grads = match gradients(model, &xb, &yb, objective) {
                Ok((l, g)) if l.is_finite() && g.is_finite() => g,
                Ok(_) | Err(Error::Overflow { .. }) => {
                    report.diverged_at = Some(step);
                    break;
                }
                Err(e) => return Err(e),
            };
            optimizers[ch].step(&mut params[ch], &grads.flatten(), &rates[ch]);
            if !(params[ch][0] > 0.0) || params[ch].iter().any(|p| !p.is_finite()) {
                report.diverged_at = Some(step);
                break;
            }
            unflatten_params(model, &params[ch]);
        }
        if report.diverged_at.is_none()
            && (step % config.eval_every == 0 || step == config.steps)
        {
            match evaluate(step, &models, &mut report) {
                Ok(true) => {}
                Ok(false) | Err(Error::Overflow { .. }) => report.diverged_at = Some(step),
                Err(e) => return Err(e),
            }
        }
    }
    report.kernel = match zoh_kernel(&models[0], data.x_train[0].ncols()) {
        Ok(k) => k.values,
        Err(_) => Vec::new(),
    };
    report.re_nonneg_ratio = re_nonneg_ratio(&models);
    report.models = models;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{make_model, InitSpec};

    #[test]
    fn shift_and_first_last_labels() {
        let x = DMatrix::from_row_slice(1, 4, &[2.0, 3.0, 5.0, 7.0]);
        let shift = Task::new(TaskKind::Shift, 4);
        assert_eq!(labels(&shift, &x)[(0, 0)], 2.0);
        let fl = Task::new(TaskKind::FirstLast, 4);
        assert_eq!(labels(&fl, &x)[(0, 0)], 9.0);
        let copy = Task::new(TaskKind::Copying { channels: 1, delay: 2 }, 4);
        assert_eq!(labels(&copy, &x).row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 2.0, 3.0]);
    }

    #[test]
    fn task_data_is_seeded() {
        let mut task = Task::new(TaskKind::FirstLast, 8);
        task.n_train = 5;
        task.n_test = 3;
        assert_eq!(make_task_data(&task).unwrap(), make_task_data(&task).unwrap());
        let other = Task { seed: 1, ..task.clone() };
        assert_ne!(make_task_data(&task).unwrap().x_train, make_task_data(&other).unwrap().x_train);
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let model = make_model(&InitSpec::s4d_lin(3), 0.1).unwrap();
        let x = DMatrix::from_fn(4, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let k = zoh_kernel(&model, 6).unwrap().values;
        let y = DMatrix::from_fn(4, 1, |i, _| (0..6).map(|l| k[l] * x[(i, 5 - l)]).sum());
        let (l, g) = gradients(&model, &x, &y, Objective::FinalOutput).unwrap();
        assert!(l < 1e-28);
        assert!(g.flatten().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut adam = Adam::new(2, 0.9, 0.999, 1e-8);
        let mut p = vec![1.0, 1.0];
        adam.step(&mut p, &[3.0, -0.5], &[0.1, 0.01]);
        assert!((p[0] - 0.9).abs() < 1e-8);
        assert!((p[1] - 1.01).abs() < 1e-8);
    }

    #[test]
    fn zero_steps_reports_initial_state() {
        let mut task = Task::new(TaskKind::Shift, 16);
        task.n_train = 20;
        task.n_test = 20;
        let model = make_model(&InitSpec::s4d_lin(4).with_zero_real_fraction(0.5), 0.1).unwrap();
        let cfg = TrainConfig {
            steps: 0,
            ..TrainConfig::default()
        };
        let report = train(vec![model.clone()], &task, &cfg).unwrap();
        assert_eq!(report.eval_steps, vec![0]);
        assert_eq!(report.kernel, zoh_kernel(&model, 16).unwrap().values);
        assert_eq!(report.re_nonneg_ratio, 0.5);
        let data = make_task_data(&task).unwrap();
        let l = loss(&model, &data.x_test[0], &data.y_test[0], Objective::FinalOutput).unwrap();
        assert_eq!(report.loss_test[0], l);
    }
}
