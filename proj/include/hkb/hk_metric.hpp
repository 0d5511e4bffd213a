// Hellinger-Kantorovich metric primitives: the truncated cosine, the cone
// cost between weighted Diracs, the KL divergence between grid measures,
// the transport cost of the soft-marginal formulation and an epsilon-scaled
// scaling solver for the squared distance between grid measures.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hkb/common.hpp"
#include "hkb/measures.hpp"

namespace hkb {

// cos(min(s, pi/2)); exactly zero from pi/2 on.
inline double cos_trunc(double s) {
  s = std::abs(s);
  return s >= half_pi ? 0.0 : std::cos(s);
}

struct ConePoint {
  std::vector<double> position;
  double mass = 0.0;
};

// Cost between two points of the mass cone,
//   c = m1 + m2 - 2 sqrt(m1 m2) cos(min(|x1-x2|, pi/2)).
// This equals the squared HK distance between the Diracs m1*delta_x1 and
// m2*delta_x2 and is bounded below by (sqrt(m1)-sqrt(m2))^2.
inline double cone_cost(const std::vector<double>& x1, double m1,
                        const std::vector<double>& x2, double m2) {
  if (x1.size() != x2.size())
    throw std::invalid_argument("cone_cost: position dimension mismatch");
  if (!(m1 >= 0.0) || !(m2 >= 0.0))
    throw std::invalid_argument("cone_cost: masses must be >= 0");
  return m1 + m2 - 2.0 * std::sqrt(m1 * m2) * cos_trunc(detail::euclidean_distance(x1, x2));
}

inline double cone_cost(const ConePoint& p, const ConePoint& q) {
  return cone_cost(p.position, p.mass, q.position, q.mass);
}

inline double hk_dirac_sq(const std::vector<double>& x1, double m1,
                          const std::vector<double>& x2, double m2) {
  return cone_cost(x1, m1, x2, m2);
}

// Squared HK distance between a Dirac m*delta_x and a finite atom list.
// The optimal split of m among the targets has the closed form
//   HK^2 = m + sum_j s_j - 2 sqrt(m * sum_j s_j cos_trunc(d_j)^2).
inline double hk_dirac_to_discrete_sq(const std::vector<double>& x, double m,
                                      const std::vector<Atom>& atoms) {
  if (!(m >= 0.0)) throw std::invalid_argument("hk_dirac_to_discrete_sq: mass must be >= 0");
  double total = 0.0, reach = 0.0;
  for (const Atom& a : atoms) {
    if (a.position.size() != x.size())
      throw std::invalid_argument("hk_dirac_to_discrete_sq: dimension mismatch");
    total += a.mass;
    reach += a.mass * detail::sq(cos_trunc(detail::euclidean_distance(x, a.position)));
  }
  return m + total - 2.0 * std::sqrt(m * reach);
}

// KL(mu | nu) = sum_k phi(mu_k/nu_k) nu_k with phi(s) = s log s - s + 1,
// the conventions phi(0) = 1, and +inf as soon as mu puts mass where nu
// does not.
inline double kl_divergence(const GridMeasure& mu, const GridMeasure& nu) {
  if (!mu.same_layout(nu))
    throw std::invalid_argument("kl_divergence: grids must share shape and domain");
  double s = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    double a = mu.values()[k], b = nu.values()[k];
    if (b == 0.0) {
      if (a > 0.0) return inf;
      continue;
    }
    if (a == 0.0)
      s += b;
    else
      s += a * std::log(a / b) - a + b;
  }
  return s;
}

// Transport cost of the soft-marginal formulation:
//   -2 log(cos(|x1-x2|)) for |x1-x2| < pi/2, +inf beyond.
inline double hk_kl_cost(const std::vector<double>& x1, const std::vector<double>& x2) {
  double d = detail::euclidean_distance(x1, x2);
  return d < half_pi ? -2.0 * std::log(std::cos(d)) : inf;
}

struct SinkhornConfig {
  double epsilon_start = 1.0;
  double epsilon_final = 1e-4;
  double epsilon_decay = 0.5;         // in (0,1)
  int max_iter_per_epsilon = 2000;
  double marginal_tol = 1e-6;         // relative L1 change of plan marginals
  double cost_cutoff = half_pi - 1e-9;  // transport radius, < pi/2

  void validate() const {
    if (!(epsilon_start > 0.0) || !(epsilon_final > 0.0))
      throw std::invalid_argument("SinkhornConfig: epsilon_start/epsilon_final must be > 0");
    if (epsilon_final > epsilon_start)
      throw std::invalid_argument("SinkhornConfig: epsilon_final must be <= epsilon_start");
    if (!(epsilon_decay > 0.0) || !(epsilon_decay < 1.0))
      throw std::invalid_argument("SinkhornConfig: epsilon_decay must lie in (0,1)");
    if (max_iter_per_epsilon < 1)
      throw std::invalid_argument("SinkhornConfig: max_iter_per_epsilon must be >= 1");
    if (!(marginal_tol > 0.0))
      throw std::invalid_argument("SinkhornConfig: marginal_tol must be > 0");
    if (!(cost_cutoff > 0.0) || !(cost_cutoff < half_pi))
      throw std::invalid_argument("SinkhornConfig: cost_cutoff must lie in (0, pi/2)");
  }

  std::vector<double> epsilon_schedule() const {
    std::vector<double> es{epsilon_start};
    while (es.back() > epsilon_final)
      es.push_back(std::max(es.back() * epsilon_decay, epsilon_final));
    return es;
  }
};

struct DistanceResult {
  double value = 0.0;        // primal cost of the final plan, entropy excluded
  GridMeasure plan_marginal_first;
  GridMeasure plan_marginal_second;
  bool converged = false;
};

namespace detail {

// Support of a grid measure: flat indices with positive mass, plus positions.
struct GridSupport {
  std::vector<std::size_t> index;
  std::vector<std::vector<double>> position;
  std::vector<double> mass;
  std::vector<double> log_mass;

  explicit GridSupport(const GridMeasure& g) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g.values()[k] > 0.0) {
        index.push_back(k);
        position.push_back(g.node_position(k));
        mass.push_back(g.values()[k]);
        log_mass.push_back(std::log(g.values()[k]));
      }
    }
  }
  std::size_t size() const { return index.size(); }
};

}  // namespace detail

// Squared HK distance between two grid measures on a common grid, via the
// soft-marginal formulation
//   inf_gamma  <c, gamma> + KL(P1 gamma | mu1) + KL(P2 gamma | mu2)
// regularized by eps*KL(gamma | mu1 (x) mu2) with a geometric eps schedule
// and warm-started potentials.  All updates run in log domain; a scaling
// update u = (mu/(K v))^{1/(1+eps)} becomes, in potential coordinates,
// phi = -(eps/(1+eps)) * LSE_j[log mu2_j + (psi_j - C_ij)/eps].
inline DistanceResult hk_distance_sq(const GridMeasure& mu1, const GridMeasure& mu2,
                                     const SinkhornConfig& cfg = {}) {
  cfg.validate();
  if (!mu1.same_layout(mu2))
    throw std::invalid_argument("hk_distance_sq: grids must share shape and domain");

  const double mass1 = total_mass(mu1), mass2 = total_mass(mu2);
  if (mass1 == 0.0 && mass2 == 0.0)
    throw std::invalid_argument("hk_distance_sq: at least one measure must be nonzero");

  auto zero_like = [](const GridMeasure& g) {
    return GridMeasure(g.domain(), g.shape(), std::vector<double>(g.size(), 0.0));
  };
  // One side empty: the optimal plan is zero and the value is the mass of
  // the other side (full annihilation).
  if (mass1 == 0.0 || mass2 == 0.0)
    return DistanceResult{mass1 + mass2, zero_like(mu1), zero_like(mu2), true};

  detail::GridSupport a(mu1), b(mu2);
  const std::size_t na = a.size(), nb = b.size();

  // Pairwise transport costs within the cutoff; inf entries carry no plan mass.
  std::vector<double> C(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      double d = detail::euclidean_distance(a.position[i], b.position[j]);
      C[i * nb + j] = d < cfg.cost_cutoff ? -2.0 * std::log(std::cos(d)) : inf;
    }

  std::vector<double> phi(na, 0.0), psi(nb, 0.0);
  std::vector<double> row(nb), col(na);
  std::vector<double> marg1(na, 0.0), marg2(nb, 0.0), prev1, prev2;
  bool converged = false;

  auto plan_entry = [&](std::size_t i, std::size_t j, double eps) -> double {
    double c = C[i * nb + j];
    if (!std::isfinite(c)) return 0.0;
    return std::exp(a.log_mass[i] + b.log_mass[j] + (phi[i] + psi[j] - c) / eps);
  };

  for (double eps : cfg.epsilon_schedule()) {
    const double damp = eps / (1.0 + eps);
    prev1.clear();
    converged = false;
    for (int it = 0; it < cfg.max_iter_per_epsilon; ++it) {
      for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
          double c = C[i * nb + j];
          row[j] = std::isfinite(c) ? b.log_mass[j] + (psi[j] - c) / eps : -inf;
        }
        double l = detail::log_sum_exp(row);
        phi[i] = std::isfinite(l) ? -damp * l : 0.0;
      }
      for (std::size_t j = 0; j < nb; ++j) {
        for (std::size_t i = 0; i < na; ++i) {
          double c = C[i * nb + j];
          col[i] = std::isfinite(c) ? a.log_mass[i] + (phi[i] - c) / eps : -inf;
        }
        double l = detail::log_sum_exp(col);
        psi[j] = std::isfinite(l) ? -damp * l : 0.0;
      }
      std::fill(marg1.begin(), marg1.end(), 0.0);
      std::fill(marg2.begin(), marg2.end(), 0.0);
      for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
          double g = plan_entry(i, j, eps);
          marg1[i] += g;
          marg2[j] += g;
        }
      if (!prev1.empty()) {
        double change = 0.0;
        for (std::size_t i = 0; i < na; ++i) change += std::abs(marg1[i] - prev1[i]);
        for (std::size_t j = 0; j < nb; ++j) change += std::abs(marg2[j] - prev2[j]);
        if (change < cfg.marginal_tol * (1.0 + mass1 + mass2)) {
          converged = true;
          break;
        }
      }
      prev1 = marg1;
      prev2 = marg2;
    }
  }

  const double eps_last = cfg.epsilon_final;
  double cost = 0.0;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      double g = plan_entry(i, j, eps_last);
      if (g > 0.0) cost += g * C[i * nb + j];
    }

  // KL penalties of the plan marginals against the inputs, computed on the
  // supports (off-support plan mass is zero by construction).
  auto kl_support = [](const std::vector<double>& marg, const std::vector<double>& target) {
    double s = 0.0;
    for (std::size_t k = 0; k < marg.size(); ++k) {
      double m = marg[k], t = target[k];
      if (m == 0.0)
        s += t;
      else
        s += m * std::log(m / t) - m + t;
    }
    return s;
  };
  double value = cost + kl_support(marg1, a.mass) + kl_support(marg2, b.mass);

  std::vector<double> full1(mu1.size(), 0.0), full2(mu2.size(), 0.0);
  for (std::size_t i = 0; i < na; ++i) full1[a.index[i]] = marg1[i];
  for (std::size_t j = 0; j < nb; ++j) full2[b.index[j]] = marg2[j];
  return DistanceResult{value,
                        GridMeasure(mu1.domain(), mu1.shape(), std::move(full1)),
                        GridMeasure(mu2.domain(), mu2.shape(), std::move(full2)),
                        converged};
}

}  // namespace hkb
