// Entropic HK barycenter solver on grids.  Minimizes the soft-marginal
// functional sum_i lambda_i [ <C, gamma_i> + KL(P1 gamma_i | mu_i)
// + KL(P2 gamma_i | nu) ] + eps sum_i lambda_i KL(gamma_i | R_i) over the N
// plans and the common second marginal nu, with the cone-induced cost
// C(x,y) = -2 log cos |x-y| truncated at pi/2.  Updates run in the log
// domain throughout; the reported value excludes the entropy term, so it
// upper-bounds the unregularized optimum and tightens as eps decreases.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hkb/common.hpp"
#include "hkb/hk_metric.hpp"
#include "hkb/measures.hpp"

namespace hkb {

struct BarycenterConfig {
  Weights weights;
  SinkhornConfig sinkhorn{};
  double barycenter_update_tol = 1e-8;  // total-variation change of nu per sweep
  int outer_max_iter = 200000;          // total sweep budget across the eps schedule

  explicit BarycenterConfig(Weights w) : weights(std::move(w)) { validate(); }

  void validate() const {
    sinkhorn.validate();
    if (!(barycenter_update_tol > 0.0))
      throw std::invalid_argument("BarycenterConfig: barycenter_update_tol must be > 0");
    if (outer_max_iter < 1)
      throw std::invalid_argument("BarycenterConfig: outer_max_iter must be >= 1");
  }
};

struct BarycenterResult {
  GridMeasure nu;
  double value;
  bool converged;
};

namespace detail {

// Per-plan state for one marginal: support-restricted cost matrix and the
// two log-scalings.  The plan is gamma(x,y) = mu_x exp(u_x + v_y - C_xy/eps)
// relative to mu (x) tensor the counting measure (y); entries with C = inf
// carry no mass.
struct BarycenterPlan {
  std::vector<std::size_t> support;  // flat grid indices with mu > 0
  std::vector<double> log_mu;        // over support
  std::vector<double> cost;          // support-major: cost[k * grid + y]
  std::vector<double> u;             // over support
  std::vector<double> v;             // over grid
  std::vector<double> log_g;         // second marginal at v = 0, over grid
};

}  // namespace detail

inline BarycenterResult barycenter_grid(const std::vector<GridMeasure>& marginals,
                                        const BarycenterConfig& cfg) {
  cfg.validate();
  const std::size_t n = marginals.size();
  if (n < 2) throw std::invalid_argument("barycenter_grid: need at least two marginals");
  if (cfg.weights.size() != n)
    throw std::invalid_argument("barycenter_grid: weights/marginals count mismatch");
  for (std::size_t i = 1; i < n; ++i)
    if (!marginals[i].same_layout(marginals[0]))
      throw std::invalid_argument("barycenter_grid: marginals must share one grid layout");
  bool any_positive = false;
  for (const auto& mu : marginals)
    if (total_mass(mu) > 0.0) any_positive = true;
  if (!any_positive)
    throw std::invalid_argument("barycenter_grid: all marginals are zero");

  const GridMeasure& proto = marginals[0];
  const std::size_t grid = proto.size();
  const double cutoff = cfg.sinkhorn.cost_cutoff;

  // Precompute grid node positions once (shared across plans).
  std::vector<std::vector<double>> nodes(grid);
  for (std::size_t y = 0; y < grid; ++y) nodes[y] = proto.node_position(y);

  std::vector<detail::BarycenterPlan> plans(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& pl = plans[i];
    for (std::size_t x = 0; x < grid; ++x)
      if (marginals[i].values()[x] > 0.0) {
        pl.support.push_back(x);
        pl.log_mu.push_back(std::log(marginals[i].values()[x]));
      }
    pl.cost.resize(pl.support.size() * grid);
    for (std::size_t k = 0; k < pl.support.size(); ++k) {
      const auto xpos = proto.node_position(pl.support[k]);
      for (std::size_t y = 0; y < grid; ++y) {
        double d = detail::euclidean_distance(xpos, nodes[y]);
        pl.cost[k * grid + y] = d < cutoff ? -2.0 * std::log(std::cos(d)) : inf;
      }
    }
    pl.u.assign(pl.support.size(), 0.0);
    pl.v.assign(grid, 0.0);
    pl.log_g.assign(grid, -inf);
  }

  // Deterministic initialization: nu = (1/N) sum_i mu_i.
  std::vector<double> log_nu(grid, -inf);
  for (std::size_t y = 0; y < grid; ++y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += marginals[i].values()[y];
    if (acc > 0.0) log_nu[y] = std::log(acc / static_cast<double>(n));
  }

  int sweeps_left = cfg.outer_max_iter;
  bool converged = false;
  std::vector<double> scratch, nu_prev(grid), nu_cur(grid);
  for (std::size_t y = 0; y < grid; ++y)
    nu_cur[y] = std::isinf(log_nu[y]) ? 0.0 : std::exp(log_nu[y]);

  const auto schedule = cfg.sinkhorn.epsilon_schedule();
  double eps_used = schedule.front();
  for (std::size_t stage = 0; stage < schedule.size() && sweeps_left > 0; ++stage) {
    const double eps = schedule[stage];
    eps_used = eps;
    const double damp = 1.0 / (1.0 + eps);
    const double p = eps / (1.0 + eps);
    const bool final_stage = stage + 1 == schedule.size();
    converged = false;

    for (int it = 0; it < cfg.sinkhorn.max_iter_per_epsilon && sweeps_left > 0;
         ++it, --sweeps_left) {
      // Block 1: first-marginal prox in u for each plan.
      for (auto& pl : plans) {
        for (std::size_t k = 0; k < pl.support.size(); ++k) {
          scratch.clear();
          const double* row = pl.cost.data() + k * grid;
          for (std::size_t y = 0; y < grid; ++y)
            if (!std::isinf(row[y])) scratch.push_back(pl.v[y] - row[y] / eps);
          double lse = detail::log_sum_exp(scratch);
          pl.u[k] = std::isinf(lse) ? 0.0 : -damp * lse;
        }
        // Pressure g = second marginal of the plan at v = 0.
        for (std::size_t y = 0; y < grid; ++y) {
          scratch.clear();
          for (std::size_t k = 0; k < pl.support.size(); ++k) {
            double c = pl.cost[k * grid + y];
            if (!std::isinf(c)) scratch.push_back(pl.log_mu[k] + pl.u[k] - c / eps);
          }
          pl.log_g[y] = detail::log_sum_exp(scratch);
        }
      }

      // Block 2: joint stationarity in (nu, v): nu is the lambda-weighted
      // p-power mean of the pressures, then v matches each plan to it.
      nu_prev.swap(nu_cur);
      for (std::size_t y = 0; y < grid; ++y) {
        scratch.clear();
        for (std::size_t i = 0; i < n; ++i)
          if (!std::isinf(plans[i].log_g[y]))
            scratch.push_back(std::log(cfg.weights[i]) + p * plans[i].log_g[y]);
        double lse = detail::log_sum_exp(scratch);
        log_nu[y] = std::isinf(lse) ? -inf : lse / p;
        nu_cur[y] = std::isinf(log_nu[y]) ? 0.0 : std::exp(log_nu[y]);
      }
      for (auto& pl : plans)
        for (std::size_t y = 0; y < grid; ++y)
          pl.v[y] = std::isinf(pl.log_g[y]) ? 0.0 : damp * (log_nu[y] - pl.log_g[y]);

      double tv = 0.0;
      for (std::size_t y = 0; y < grid; ++y) tv += std::abs(nu_cur[y] - nu_prev[y]);
      if (0.5 * tv < cfg.barycenter_update_tol) {
        converged = true;
        --sweeps_left;
        break;
      }
    }
    if (!final_stage) converged = false;
  }

  // Assemble nu and evaluate the primal value (entropy excluded):
  // sum_i lambda_i [ <C, gamma_i> + KL(P1 gamma_i | mu_i) + KL(P2 gamma_i | nu) ].
  GridMeasure nu_measure(proto.domain(), proto.shape(), nu_cur);
  const double eps_last = eps_used;
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pl = plans[i];
    double cost_sum = 0.0;
    std::vector<double> p1(grid, 0.0), p2(grid, 0.0);
    for (std::size_t k = 0; k < pl.support.size(); ++k) {
      const double* row = pl.cost.data() + k * grid;
      for (std::size_t y = 0; y < grid; ++y) {
        if (std::isinf(row[y])) continue;
        double g = std::exp(pl.log_mu[k] + pl.u[k] + pl.v[y] - row[y] / eps_last);
        cost_sum += row[y] * g;
        p1[pl.support[k]] += g;
        p2[y] += g;
      }
    }
    GridMeasure p1_measure(proto.domain(), proto.shape(), std::move(p1));
    GridMeasure p2_measure(proto.domain(), proto.shape(), std::move(p2));
    value += cfg.weights[i] * (cost_sum + kl_divergence(p1_measure, marginals[i]) +
                               kl_divergence(p2_measure, nu_measure));
  }
  return BarycenterResult{std::move(nu_measure), value, converged};
}

}  // namespace hkb
