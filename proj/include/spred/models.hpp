#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "spred/common.hpp"
#include "spred/lti.hpp"
#include "spred/prior.hpp"

namespace spred {

struct GenericModel {
  ControlSystem system;
  Vector theta_true;
};

// A ~ U[-1,1]^{N x N} shifted so that max Re(lambda) = -0.1; B, C ~ U[-1,1].
GenericModel random_stable_system(Index N, Index J, Index O,
                                  std::uint64_t seed);

// Mean vec(-I_N), covariance I.
GaussianPrior generic_prior(Index N);

struct HemodynamicParams {
  double tau_s = 0.65;
  double tau_f = 0.41;
  double tau_0 = 0.98;
  double E_0 = 0.34;
  double alpha = 0.32;
  double V_0 = 1.0;
  double a_1 = 1.0;
  double a_2 = 1.0;

  void validate() const;
};

struct HemodynamicForward {
  Matrix A;  // 4 x 4
  Matrix B;  // 4 x 1
  Matrix C;  // 1 x 4
};

HemodynamicForward hemodynamic_forward(const HemodynamicParams& params);

struct FmriModel {
  Index n_regions = 0;
  HemodynamicParams hemo;
  ControlSystem system;  // N = 5n, theta in R^{n^2} -> A_dyn block
};

// State layout: [x_1..x_n, y_1 (4), ..., y_n (4)].
FmriModel fmri_assemble(Index n, const HemodynamicParams& hemo);
// Mean vec(-I_n), covariance I over the connectivity block.
GaussianPrior fmri_prior(Index n);

struct HemodynamicPriorEntry {
  std::string name;
  double mean;
  double variance;
  bool fixed;
};

std::array<HemodynamicPriorEntry, 8> hemodynamic_prior();
HemodynamicParams hemodynamic_prior_means();

}  // namespace spred
