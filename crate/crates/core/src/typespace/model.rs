use std::sync::Arc;

use crate::error::{Error, Result};

use super::functionals::{d_and_i_raw, f_raw};
use super::{Channel, InputDistribution, JointType};

/// The three functionals of one joint type, evaluated together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evals {
    /// Decoder metric `f` (or `f̃` under mismatch).
    pub f: f64,
    /// Mutual information.
    pub i: f64,
    /// Conditional divergence from the true channel.
    pub d: f64,
}

/// Evaluation context: the true channel `W`, the decoder metric channel
/// (equal to `W` unless a mismatched decoder is configured) and the
/// ensemble input distribution `P_X`.
#[derive(Debug, Clone)]
pub struct Model {
    truth: Arc<Channel>,
    metric: Arc<Channel>,
    px: InputDistribution,
}

impl Model {
    pub fn new(truth: Channel, px: InputDistribution) -> Result<Self> {
        if truth.input_size() != px.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} inputs, input distribution has {} symbols",
                truth.input_size(),
                px.len()
            )));
        }
        let truth = Arc::new(truth);
        Ok(Self { metric: truth.clone(), truth, px })
    }

    /// Use `decoder` for every log-likelihood while divergences stay
    /// measured against the true channel.
    pub fn with_metric(mut self, decoder: Channel) -> Result<Self> {
        if !decoder.same_shape(&self.truth) {
            return Err(Error::DimensionMismatch(format!(
                "decoder channel is {}x{}, true channel is {}x{}",
                decoder.input_size(),
                decoder.output_size(),
                self.truth.input_size(),
                self.truth.output_size()
            )));
        }
        self.metric = Arc::new(decoder);
        Ok(self)
    }

    /// Same metric and input distribution, different true channel.
    pub fn with_truth(&self, truth: Channel) -> Result<Self> {
        if !truth.same_shape(&self.metric) {
            return Err(Error::DimensionMismatch("true channel shape differs from metric".into()));
        }
        Ok(Self { truth: Arc::new(truth), metric: self.metric.clone(), px: self.px.clone() })
    }

    pub(crate) fn metric_arc(&self) -> Arc<Channel> {
        self.metric.clone()
    }

    pub fn truth(&self) -> &Channel {
        &self.truth
    }

    pub fn metric(&self) -> &Channel {
        &self.metric
    }

    pub fn px(&self) -> &InputDistribution {
        &self.px
    }

    pub fn is_mismatched(&self) -> bool {
        !Arc::ptr_eq(&self.truth, &self.metric) && *self.truth != *self.metric
    }

    pub fn input_size(&self) -> usize {
        self.truth.input_size()
    }

    pub fn output_size(&self) -> usize {
        self.truth.output_size()
    }

    #[inline]
    pub fn evals(&self, q: &JointType) -> Evals {
        let (d, i) = d_and_i_raw(q, &self.truth);
        Evals { f: f_raw(q, &self.metric), i, d }
    }

    #[inline]
    pub fn f(&self, q: &JointType) -> f64 {
        f_raw(q, &self.metric)
    }

    #[inline]
    pub fn d(&self, q: &JointType) -> f64 {
        d_and_i_raw(q, &self.truth).0
    }

    /// `P_X × W` for the true channel.
    pub fn channel_joint(&self) -> JointType {
        JointType::channel_joint(&self.px, &self.truth).expect("dimensions checked at construction")
    }

    /// `I(P_X × W)`, the largest rate of interest.
    pub fn max_rate(&self) -> f64 {
        super::functionals::i_raw(&self.channel_joint())
    }
}

/// Evaluation context with `f` computed from `ch_decoder` and divergences
/// from `ch_true`, using a uniform input distribution unless replaced.
pub fn set_mismatch(ch_true: &Channel, ch_decoder: &Channel, px: &InputDistribution) -> Result<Model> {
    Model::new(ch_true.clone(), px.clone())?.with_metric(ch_decoder.clone())
}
