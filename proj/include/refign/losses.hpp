#pragma once

// Warp-consistency objectives for training a flow estimator against a known
// synthetic warp W. Each deterministic term has a Gaussian negative
// log-likelihood counterpart.

#include "refign/grid.hpp"
#include "refign/uncertainty.hpp"

namespace refign {

struct LossConfig {
  double lambda_weight = 1.0;  // weight of the composite term
  double huber_delta = 1.0;    // pixels
  double alpha1 = 0.03;        // visibility bound, multiplicative part
  double alpha2 = 0.05;        // visibility bound, additive part

  void validate() const;
};

struct LossReport {
  double total = 0.0;
  double direct_term = 0.0;
  double composite_term = 0.0;
  double visible_fraction = 0.0;
};

/// 0.5 x^2 for x <= delta, delta (x - delta / 2) beyond.
double huber(double residual_norm, double delta);

/// Derivative of huber with respect to the residual norm.
double huber_slope(double residual_norm, double delta);

/// Pixel mean of huber(|pred - w|).
double direct_loss(const FlowField& pred, const FlowField& w, const LossConfig& cfg);

/// Cauchy-Schwarz visibility bound:
///   |f_ij + warped_f_ji - w|^2 < alpha2 + alpha1 (|f_ij|^2 + |warped_f_ji|^2 + |w|^2).
/// `warped_f_ji` must already be warped by f_ij.
ValidityMask visibility_mask(const FlowField& f_ij, const FlowField& warped_f_ji,
                             const FlowField& w, const LossConfig& cfg);

/// Mean of huber(|composite - w|) over visible pixels; 0 when none is visible.
double composite_loss(const FlowField& composite, const FlowField& w, const ValidityMask& v,
                      const LossConfig& cfg);

/// Mean over visible pixels of huber(|mean - w|) / (2 var) + log var.
double nll_loss(const GaussianFlow& g, const FlowField& w, const ValidityMask& v,
                const LossConfig& cfg);

struct NllGradients {
  FlowField d_mean;
  ScalarField d_log_variance;
};

/// Analytic partial derivatives of nll_loss with respect to every mean
/// component and log-variance entry.
NllGradients nll_gradients(const GaussianFlow& g, const FlowField& w, const ValidityMask& v,
                           const LossConfig& cfg);

/// Deterministic alignment objective direct + lambda * composite for the
/// triangle I' -> J -> I. The composite visibility is the Cauchy-Schwarz mask
/// intersected with the warp's own validity.
LossReport alignment_loss(const FlowField& direct, const FlowField& f_ij, const FlowField& f_ji,
                          const FlowField& w, const LossConfig& cfg);

/// Probabilistic counterpart: both terms are Gaussian NLLs, the composite
/// distribution coming from compose_gaussian.
LossReport probabilistic_alignment_loss(const GaussianFlow& direct, const GaussianFlow& g_ij,
                                        const GaussianFlow& g_ji, const FlowField& w,
                                        const LossConfig& cfg);

}  // namespace refign
