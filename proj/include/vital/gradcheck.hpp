#pragma once

// Central finite-difference checks of the reverse-mode gradients: every
// primitive op, then the classifier and generator objectives on small
// random networks.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vital/tensor.hpp"

namespace vital {

struct GradcheckOptions {
  double step = 1e-5;
  /// Lower bound on the relative-error denominator, so that components whose
  /// true gradient is (numerically) zero compare on an absolute scale.
  double denominator_floor = 1e-6;
  double tolerance = 1e-4;
};

struct GradcheckResult {
  std::string name;
  std::size_t components = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

/// max over every component of every parameter of
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// `loss` must rebuild the graph from the current parameter values.
GradcheckResult check_gradients(const std::string& name, std::span<ad::Tensor> params,
                                const std::function<ad::Tensor()>& loss, const GradcheckOptions& opts = {});

struct GradcheckReport {
  std::vector<GradcheckResult> results;
  int configurations = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

/// Op checks plus `configurations` random network configurations, each
/// covering d_objective (CE and cost-sensitive) and g_objective with
/// lambda in {0, 1, 10}. Every configuration derives from `seed`.
GradcheckReport run_gradcheck(std::uint64_t seed, int configurations = 100, const GradcheckOptions& opts = {});

}  // namespace vital
