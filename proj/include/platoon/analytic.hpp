#pragma once

#include <stdexcept>
#include <vector>

namespace platoon::analytic {

// Closed-form collision model for a leader that picks uniformly among the
// VRBs it sensed idle, surrounded by SPS broadcasters.
//
// Vehicle counts (2*R*rho - 1 in range, d*rho hidden) are expected values
// and enter as real exponents. They are snapped to the nearest integer when
// within 1e-9 of one, which covers every point of the reference grid.
struct Inputs {
  int n_vrb = 200;
  double range_km = 0.4;
  double rho = 100.0;
  double platoon_km = 0.1;
  double keep_prob = 0.9;
  int sps_periods = 10;
  bool exact_na = false;  // use the truncated sum instead of the geometric limit

  void validate() const;  // throws std::domain_error
  double in_range_count() const;  // 2*R*rho - 1
  double hidden_count() const;    // d*rho
};

struct Outputs {
  double n_a = 1.0;
  double p_c_rs = 0.0;
  double p_one_ht = 1.0;
  double p_c_ht = 0.0;
};

// Per-period probability that a given broadcaster reselects: (1-p)/T_s.
double reselect_rate(const Inputs& in);

/// Probability that exactly n of the 2*R*rho - 1 in-range vehicles reselect
/// in one period. Uses the generalized binomial coefficient when the count is
/// not an integer; n must lie in [0, round(2*R*rho - 1)].
double p_reselect(int n, const Inputs& in);

// Truncated sum over h = 0..N_r-2 of q^h, q = 1 - (1 - 1/N_r)^(2*R*rho-1).
double n_a_exact(const Inputs& in);
// Large-N_r limit (1 - 1/N_r)^-(2*R*rho-1).
double n_a_approx(const Inputs& in);
double n_a(const Inputs& in);  // whichever `exact_na` selects

/// Resource-selection collision probability as the explicit sum over the
/// number of simultaneously reselecting vehicles.
double p_collision_rs_sum(const Inputs& in);
/// Same quantity after collapsing the sum with the binomial theorem.
double p_collision_rs_closed(const Inputs& in);

/// Probability that one hidden vehicle avoids the leader's VRB:
/// (N_r - R*rho - 1) / (N_r - R*rho).
double p_one_hidden(const Inputs& in);

// 1 - (1 - P_rs) * P_one^(d*rho).
double p_collision_ht(const Inputs& in);

Outputs evaluate(const Inputs& in);

struct GridRow {
  double rho;
  double keep_prob;
  Outputs out;
};
// Rows ordered by density, then keep probability, as given.
std::vector<GridRow> evaluate_grid(Inputs base, const std::vector<double>& densities,
                                   const std::vector<double>& keep_probs);

}  // namespace platoon::analytic
