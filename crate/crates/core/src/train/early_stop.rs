/// Patience-based early stopping on a loss that should decrease.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// New best; snapshot the model.
    Improved,
    Continue,
    /// `patience` consecutive epochs without improvement.
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience: patience.max(1),
            best: None,
            stale: 0,
        }
    }

    /// Records the monitored loss of `epoch`. Only a strict decrease counts as
    /// improvement; NaN never does.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> Verdict {
        let improved = match self.best {
            None => !loss.is_nan(),
            Some((_, best)) => loss < best,
        };
        if improved {
            self.best = Some((epoch, loss));
            self.stale = 0;
            return Verdict::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            Verdict::Stop
        } else {
            Verdict::Continue
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

/// Result of [`run_with_early_stopping`].
#[derive(Debug, Clone)]
pub struct Stopped<S> {
    /// State snapshot taken at the best epoch (the initial state if no epoch
    /// ever improved).
    pub best_state: S,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub epochs_run: usize,
}

/// Runs `epoch_fn` for epochs `1..=max_epochs`, each returning the monitored
/// loss, and keeps a clone of `state` from the best epoch.
pub fn run_with_early_stopping<S, E, F>(
    max_epochs: usize,
    patience: usize,
    state: &mut S,
    mut epoch_fn: F,
) -> Result<Stopped<S>, E>
where
    S: Clone,
    F: FnMut(usize, &mut S) -> Result<f64, E>,
{
    let mut stopper = EarlyStopping::new(patience);
    let mut best_state = state.clone();
    let mut epochs_run = 0;
    for epoch in 1..=max_epochs {
        let loss = epoch_fn(epoch, state)?;
        epochs_run = epoch;
        match stopper.observe(epoch, loss) {
            Verdict::Improved => best_state = state.clone(),
            Verdict::Continue => {}
            Verdict::Stop => break,
        }
    }
    let (best_epoch, best_loss) = stopper.best().unwrap_or((0, f64::NAN));
    Ok(Stopped {
        best_state,
        best_epoch,
        best_loss,
        epochs_run,
    })
}
