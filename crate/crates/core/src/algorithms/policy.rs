//! Choice of the evaluation point `x̃_n` from the iterate history.

use std::collections::VecDeque;

use super::Schedule;
use crate::error::{check_dim, Error, Result};
use crate::space::Vector;

/// How `x̃_n` is formed from `x_0, …, x_n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PerturbationPolicy {
    /// `x̃_n = x_n`.
    #[default]
    None,
    /// `x̃_n = x_n + e_n` with `e_n = magnitude_n · direction`.
    Additive { direction: Vector, magnitude: Schedule },
    /// `x̃_n = x_n + α_n (x_n − x_{n−1})`, with `x_{−1} = x_0`.
    Inertial { alpha: Schedule },
    /// `x̃_n = Σ_{k=0}^{m} w_k x_{n−m+k} (+ e_n)`, weights oldest first and
    /// summing to one; iterates before `x_0` are taken to be `x_0`.
    Memory {
        weights: Vec<f64>,
        additive: Option<(Vector, Schedule)>,
    },
}

impl PerturbationPolicy {
    /// Number of past iterates (besides `x_n`) the policy reads.
    pub fn depth(&self) -> usize {
        match self {
            PerturbationPolicy::None | PerturbationPolicy::Additive { .. } => 0,
            PerturbationPolicy::Inertial { .. } => 1,
            PerturbationPolicy::Memory { weights, .. } => weights.len().saturating_sub(1),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PerturbationPolicy::None => Ok(()),
            PerturbationPolicy::Additive { direction, magnitude } => {
                check_dim(dim, direction.dim())?;
                check_decay(magnitude)
            }
            PerturbationPolicy::Inertial { alpha } => alpha.validate("inertial alpha"),
            PerturbationPolicy::Memory { weights, additive } => {
                if weights.is_empty() {
                    return Err(Error::config("memory policy needs at least one weight"));
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::NonFinite("memory weight".into()));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::config(format!("memory weights must sum to 1, got {sum}")));
                }
                if let Some((direction, magnitude)) = additive {
                    check_dim(dim, direction.dim())?;
                    check_decay(magnitude)?;
                }
                Ok(())
            }
        }
    }
}

fn check_decay(s: &Schedule) -> Result<()> {
    s.validate("perturbation magnitude")?;
    if s.limit() != 0.0 {
        return Err(Error::config(format!(
            "additive perturbations must decay to zero; schedule tends to {}",
            s.limit()
        )));
    }
    Ok(())
}

/// Bounded iterate history: `x_0` plus the most recent iterates.
#[derive(Debug, Clone)]
pub struct History {
    first: Vector,
    recent: VecDeque<Vector>,
    depth: usize,
}

impl History {
    pub fn new(x0: Vector, depth: usize) -> Self {
        let mut recent = VecDeque::with_capacity(depth + 1);
        recent.push_back(x0.clone());
        History {
            first: x0,
            recent,
            depth,
        }
    }

    pub fn push(&mut self, x: Vector) {
        self.recent.push_back(x);
        while self.recent.len() > self.depth + 1 {
            self.recent.pop_front();
        }
    }

    pub fn current(&self) -> &Vector {
        self.recent.back().expect("history is never empty")
    }

    /// `x_{n−k}`, or `x_0` when that index is negative.
    pub fn back(&self, k: usize) -> &Vector {
        let len = self.recent.len();
        if k < len {
            &self.recent[len - 1 - k]
        } else {
            &self.first
        }
    }
}

/// `x̃_n` for the given policy. `history` lists the retained iterates
/// oldest first and ends with `x_n`; indices before its start resolve to
/// `history[0]`.
pub fn apply_policy(policy: &PerturbationPolicy, history: &[Vector], n: usize) -> Result<Vector> {
    let Some(first) = history.first() else {
        return Err(Error::config("policy needs a nonempty history"));
    };
    let mut h = History::new(first.clone(), history.len().max(policy.depth()));
    for x in &history[1..] {
        h.push(x.clone());
    }
    policy.validate(first.dim())?;
    Ok(evaluate(policy, &h, n))
}

pub(crate) fn evaluate(policy: &PerturbationPolicy, h: &History, n: usize) -> Vector {
    let x = h.current();
    match policy {
        PerturbationPolicy::None => x.clone(),
        PerturbationPolicy::Additive { direction, magnitude } => {
            x.add_scaled(magnitude.at(n), direction)
        }
        PerturbationPolicy::Inertial { alpha } => {
            let prev = h.back(1);
            x.add_scaled(alpha.at(n), &(x - prev))
        }
        PerturbationPolicy::Memory { weights, additive } => {
            let m = weights.len() - 1;
            let mut acc = Vector::zeros(x.dim());
            for (k, w) in weights.iter().enumerate() {
                acc = acc.add_scaled(*w, h.back(m - k));
            }
            if let Some((direction, magnitude)) = additive {
                acc = acc.add_scaled(magnitude.at(n), direction);
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    #[test]
    fn examples() {
        let hist = vec![v(&[0.0, 0.0]), v(&[2.0, 0.0])];
        assert_eq!(apply_policy(&PerturbationPolicy::None, &hist, 1).unwrap(), v(&[2.0, 0.0]));

        let inertial = PerturbationPolicy::Inertial {
            alpha: Schedule::Constant(0.5),
        };
        assert_eq!(apply_policy(&inertial, &hist, 1).unwrap(), v(&[3.0, 0.0]));

        let memory = PerturbationPolicy::Memory {
            weights: vec![-0.3, 1.3],
            additive: None,
        };
        let hist = vec![v(&[1.0, 0.0]), v(&[2.0, 0.0])];
        let out = apply_policy(&memory, &hist, 1).unwrap();
        assert!((out - v(&[2.3, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn missing_history_is_x0() {
        let inertial = PerturbationPolicy::Inertial {
            alpha: Schedule::Constant(0.7),
        };
        let x0 = v(&[1.0, -1.0]);
        assert_eq!(apply_policy(&inertial, std::slice::from_ref(&x0), 0).unwrap(), x0);
    }

    #[test]
    fn rejects_bad_weights() {
        let memory = PerturbationPolicy::Memory {
            weights: vec![0.5, 0.6],
            additive: None,
        };
        assert!(apply_policy(&memory, &[v(&[1.0])], 0).is_err());
        let additive = PerturbationPolicy::Additive {
            direction: v(&[1.0]),
            magnitude: Schedule::Constant(0.1),
        };
        assert!(additive.validate(1).is_err());
        let decaying = PerturbationPolicy::Additive {
            direction: v(&[1.0]),
            magnitude: Schedule::Geometric {
                start: 0.1,
                ratio: 0.5,
                limit: 0.0,
            },
        };
        assert!(decaying.validate(1).is_ok());
    }

    #[test]
    fn ring_buffer_keeps_depth() {
        let mut h = History::new(v(&[0.0]), 2);
        h.push(v(&[1.0]));
        // x_{-1} resolves to x_0
        assert_eq!(h.back(2), &v(&[0.0]));
        for k in 2..6 {
            h.push(v(&[k as f64]));
        }
        assert_eq!(h.current(), &v(&[5.0]));
        assert_eq!(h.back(1), &v(&[4.0]));
        assert_eq!(h.back(2), &v(&[3.0]));
    }
}
