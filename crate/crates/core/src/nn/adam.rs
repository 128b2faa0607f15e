use super::NnError;

pub const DEFAULT_LR: f64 = 1e-4;

/// Bias-corrected Adam over a fixed list of parameter buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    /// `sizes` are the lengths of the parameter buffers, in update order.
    pub fn new(lr: f64, sizes: impl IntoIterator<Item = usize>) -> Self {
        let first_moment: Vec<Vec<f64>> = sizes.into_iter().map(|n| vec![0.0; n]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            second_moment: first_moment.clone(),
            first_moment,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update in place. Gradients are read, never cleared.
    pub fn step<'a, P>(&mut self, params: P, grads: &[Option<&[f64]>]) -> Result<(), NnError>
    where
        P: IntoIterator<Item = &'a mut [f64]>,
    {
        let params: Vec<&mut [f64]> = params.into_iter().collect();
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(NnError::ParamCount {
                expected: self.first_moment.len(),
                got: params.len().min(grads.len()),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            let g = g.ok_or(NnError::MissingGradient(i))?;
            if g.len() != p.len() || p.len() != self.first_moment[i].len() {
                return Err(NnError::GradientShape {
                    index: i,
                    expected: self.first_moment[i].len(),
                    got: g.len(),
                });
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for (i, p) in params.into_iter().enumerate() {
            let g = grads[i].unwrap();
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
