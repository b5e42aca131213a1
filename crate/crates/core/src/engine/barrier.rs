//! The moving left barrier: a base value plus ramps `f_Δ((t − start)/a²)`.

use crate::numerics::BarrierShape;

/// Rescaled time after which a ramp is folded into the base value.
const SETTLED: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Ramp {
    pub start: f64,
    pub shape: BarrierShape<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingBarrier {
    a2: f64,
    base: f64,
    ramps: Vec<Ramp>,
}

impl MovingBarrier {
    pub fn new(a: f64) -> Self {
        Self { a2: a * a, base: 0.0, ramps: Vec::new() }
    }

    pub fn is_static(&self) -> bool {
        self.ramps.is_empty()
    }

    pub fn ramps(&self) -> &[Ramp] {
        &self.ramps
    }

    /// Barrier position at time `t`.
    pub fn position(&self, t: f64) -> f64 {
        self.base + self.ramps.iter().map(|r| r.shape.value((t - r.start) / self.a2)).sum::<f64>()
    }

    /// Barrier velocity at time `t`.
    pub fn velocity(&self, t: f64) -> f64 {
        self.ramps.iter().map(|r| r.shape.derivatives((t - r.start) / self.a2).1 / self.a2).sum()
    }

    pub fn add_ramp(&mut self, start: f64, shape: BarrierShape<f64>) {
        if shape.delta() > 0.0 {
            self.ramps.push(Ramp { start, shape });
        }
    }

    /// Folds ramps that have reached their final value by time `t`.
    pub fn settle(&mut self, t: f64) {
        let a2 = self.a2;
        let mut base = self.base;
        self.ramps.retain(|r| {
            if (t - r.start) / a2 > SETTLED {
                base += r.shape.delta();
                false
            } else {
                true
            }
        });
        self.base = base;
    }
}
