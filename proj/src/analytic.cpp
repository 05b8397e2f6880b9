#include "platoon/analytic.hpp"

#include <cmath>
#include <string>

namespace platoon::analytic {

namespace {

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

// Generalized binomial coefficient C(k, n) for real k, integer n >= 0.
double binom(double k, int n) {
  double c = 1.0;
  for (int j = 0; j < n; ++j) c *= (k - j) / (j + 1);
  return c;
}

int max_reselectors(const Inputs& in) {
  return static_cast<int>(std::lround(in.in_range_count()));
}

}  // namespace

void Inputs::validate() const {
  if (n_vrb < 2) throw std::domain_error("n_vrb must be >= 2");
  if (!(range_km > 0.0) || !(rho > 0.0)) throw std::domain_error("range and density must be positive");
  if (!(platoon_km >= 0.0)) throw std::domain_error("platoon length must be non-negative");
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) throw std::domain_error("keep_prob must lie in [0,1]");
  if (sps_periods < 1) throw std::domain_error("sps_periods must be >= 1");
  if (2.0 * range_km * rho < 1.0 - 1e-12)
    throw std::domain_error("2*R*rho must be >= 1 (the leader itself is in range)");
  if (!(n_vrb > range_km * rho))
    throw std::domain_error("n_vrb must exceed R*rho");
}

double Inputs::in_range_count() const { return snap(2.0 * range_km * rho - 1.0); }
double Inputs::hidden_count() const { return snap(platoon_km * rho); }

double reselect_rate(const Inputs& in) { return (1.0 - in.keep_prob) / in.sps_periods; }

double p_reselect(int n, const Inputs& in) {
  in.validate();
  const double k = in.in_range_count();
  if (n < 0 || n > max_reselectors(in))
    throw std::domain_error("reselecting count " + std::to_string(n) + " out of range");
  const double x = reselect_rate(in);
  return binom(k, n) * std::pow(x, n) * std::pow(1.0 - x, k - n);
}

double n_a_exact(const Inputs& in) {
  in.validate();
  const double q = 1.0 - std::pow(1.0 - 1.0 / in.n_vrb, in.in_range_count());
  double sum = 0.0;
  double term = 1.0;  // q^0 = 1, including q = 0
  for (int h = 0; h <= in.n_vrb - 2; ++h) {
    sum += term;
    term *= q;
  }
  return sum;
}

double n_a_approx(const Inputs& in) {
  if (in.n_vrb < 2) throw std::domain_error("n_vrb must be >= 2");
  return std::pow(1.0 - 1.0 / in.n_vrb, -in.in_range_count());
}

double n_a(const Inputs& in) { return in.exact_na ? n_a_exact(in) : n_a_approx(in); }

double p_collision_rs_sum(const Inputs& in) {
  in.validate();
  const double na = n_a(in);
  const double miss = (in.n_vrb - na) / in.n_vrb;
  const int top = max_reselectors(in);
  double sum = 0.0;
  for (int n = 1; n <= top; ++n) sum += p_reselect(n, in) * (1.0 - std::pow(miss, n));
  return sum;
}

double p_collision_rs_closed(const Inputs& in) {
  in.validate();
  const double x = reselect_rate(in) * n_a(in) / in.n_vrb;
  if (x > 1.0) throw std::domain_error("per-vehicle collision probability exceeds 1");
  return 1.0 - std::pow(1.0 - x, in.in_range_count());
}

double p_one_hidden(const Inputs& in) {
  const double free = in.n_vrb - in.range_km * in.rho;
  if (!(free > 0.0)) throw std::domain_error("n_vrb must exceed R*rho");
  return (free - 1.0) / free;
}

double p_collision_ht(const Inputs& in) {
  const double rs = p_collision_rs_closed(in);
  return 1.0 - (1.0 - rs) * std::pow(p_one_hidden(in), in.hidden_count());
}

Outputs evaluate(const Inputs& in) {
  Outputs o;
  o.n_a = n_a(in);
  o.p_c_rs = p_collision_rs_closed(in);
  o.p_one_ht = p_one_hidden(in);
  o.p_c_ht = 1.0 - (1.0 - o.p_c_rs) * std::pow(o.p_one_ht, in.hidden_count());
  return o;
}

std::vector<GridRow> evaluate_grid(Inputs base, const std::vector<double>& densities,
                                   const std::vector<double>& keep_probs) {
  std::vector<GridRow> rows;
  rows.reserve(densities.size() * keep_probs.size());
  for (double rho : densities)
    for (double p : keep_probs) {
      base.rho = rho;
      base.keep_prob = p;
      rows.push_back({rho, p, evaluate(base)});
    }
  return rows;
}

}  // namespace platoon::analytic
