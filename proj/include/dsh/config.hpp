#pragma once

#include "dsh/types.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsh {

// Knobs of the alternating optimizer. Defaults: ridge weight 1e-4, unit
// classifier/factorization weights (sweepable over {1e-4,1e-2,1,1e2,1e4}),
// gamma = 2 as the smallest exponent with a well-defined weight update.
struct TrainConfig {
  Index bits = 16;         // code length r
  double beta = 1.0;       // classifier loss weight
  double eta = 1.0;        // label-factorization loss weight
  double lambda = 1e-4;    // ridge regularizer on W, D, P
  double gamma = 2.0;      // modality-weight smoothing exponent, > 1
  Index anchors = 500;     // kernel bases per modality
  Index max_iters = 50;
  double tol = 1e-5;       // relative objective-change stop threshold
  std::uint64_t seed = 0;
  Index dcc_sweeps = 3;    // cyclic passes over code rows per code update

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("TrainConfig: " + what); };
    if (bits < 1) fail("bits must be >= 1");
    if (!(beta >= 0) || !std::isfinite(beta)) fail("beta must be finite and >= 0");
    if (!(eta >= 0) || !std::isfinite(eta)) fail("eta must be finite and >= 0");
    if (!(lambda >= 0) || !std::isfinite(lambda)) fail("lambda must be finite and >= 0");
    if (!(gamma > 1) || !std::isfinite(gamma)) fail("gamma must be finite and > 1");
    if (anchors < 1) fail("anchors must be >= 1");
    if (max_iters < 1) fail("max_iters must be >= 1");
    if (!(tol >= 0)) fail("tol must be >= 0");
    if (dcc_sweeps < 1) fail("dcc_sweeps must be >= 1");
  }
};

}  // namespace dsh
