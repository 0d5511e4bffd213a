// Multi-marginal cost of N weighted Diracs: the fixed-location auxiliary
// form, its minimization over the convex hull of the positions, the dual
// constraint set (with an exact piecewise evaluation in d=1), and the
// convex-hull relaxation computed through mass decompositions, plus the
// pointwise barycenter map on the agreement set S.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hkb/common.hpp"
#include "hkb/hk_metric.hpp"
#include "hkb/measures.hpp"

namespace hkb {

struct PointConfig {
  std::vector<std::vector<double>> positions;
  std::vector<double> masses;
  Weights weights;

  PointConfig(std::vector<std::vector<double>> pos, std::vector<double> m, Weights w)
      : positions(std::move(pos)), masses(std::move(m)), weights(std::move(w)) {
    const std::size_t n = positions.size();
    if (n < 2) throw std::invalid_argument("PointConfig: need at least two points");
    if (masses.size() != n || weights.size() != n)
      throw std::invalid_argument("PointConfig: positions/masses/weights must share one length");
    const std::size_t d = positions[0].size();
    if (d == 0) throw std::invalid_argument("PointConfig: zero-dimensional positions");
    for (const auto& x : positions) {
      if (x.size() != d)
        throw std::invalid_argument("PointConfig: inconsistent position dimension");
      for (double c : x)
        if (!std::isfinite(c)) throw std::invalid_argument("PointConfig: non-finite position");
    }
    for (double mv : masses)
      if (!std::isfinite(mv) || mv < 0.0)
        throw std::invalid_argument("PointConfig: masses must be finite and >= 0");
  }

  std::size_t size() const { return positions.size(); }
  std::size_t dim() const { return positions[0].size(); }
  PointConfig with_masses(std::vector<double> m) const {
    return PointConfig(positions, std::move(m), weights);
  }
};

struct DualVector {
  std::vector<double> psi;
};

// A split of the mass vector into at most N parts summing to it.
struct Decomposition {
  std::vector<std::vector<double>> parts;
};

// Fixed-location cost: sum_i lambda_i m_i - (sum_i lambda_i sqrt(m_i) Cos(|x_i-y|))^2,
// the result of minimizing sum_i lambda_i * cone_cost((x_i,m_i),(y,s)) over s.
inline double c_mm_aux(const PointConfig& cfg, const std::vector<double>& y) {
  if (y.size() != cfg.dim()) throw std::invalid_argument("c_mm_aux: dimension mismatch");
  double lin = 0.0, t = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    lin += cfg.weights[i] * cfg.masses[i];
    t += cfg.weights[i] * std::sqrt(cfg.masses[i]) *
         cos_trunc(detail::euclidean_distance(cfg.positions[i], y));
  }
  double v = lin - t * t;
  if (v < 0.0) {
    if (v < -1e-10) throw internal_error("c_mm_aux: negative value");
    v = 0.0;
  }
  return v;
}

// d/dm_i of c_mm_aux at fixed y (for m_i > 0):
//   lambda_i - (sum_j lambda_j sqrt(m_j) Cos_j) * lambda_i Cos_i / sqrt(m_i).
inline std::vector<double> c_mm_aux_gradient(const PointConfig& cfg,
                                             const std::vector<double>& y) {
  std::vector<double> cosv(cfg.size());
  double t = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    cosv[i] = cos_trunc(detail::euclidean_distance(cfg.positions[i], y));
    t += cfg.weights[i] * std::sqrt(cfg.masses[i]) * cosv[i];
  }
  std::vector<double> g(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (cfg.masses[i] <= 0.0)
      throw std::invalid_argument("c_mm_aux_gradient: masses must be > 0");
    g[i] = cfg.weights[i] - t * cfg.weights[i] * cosv[i] / std::sqrt(cfg.masses[i]);
  }
  return g;
}

namespace detail {

// Canonical marginal order (lexicographic by position, then mass, then
// weight).  Evaluating the summations in this order makes c_mm and c_mm_hull
// bit-exact under simultaneous permutations of (x_i, m_i, lambda_i).
inline std::vector<std::size_t> canonical_order(const PointConfig& cfg) {
  std::vector<std::size_t> ord(cfg.size());
  std::iota(ord.begin(), ord.end(), std::size_t{0});
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    if (cfg.positions[a] != cfg.positions[b]) return cfg.positions[a] < cfg.positions[b];
    if (cfg.masses[a] != cfg.masses[b]) return cfg.masses[a] < cfg.masses[b];
    return cfg.weights[a] < cfg.weights[b];
  });
  return ord;
}

inline bool is_identity(const std::vector<std::size_t>& ord) {
  for (std::size_t i = 0; i < ord.size(); ++i)
    if (ord[i] != i) return false;
  return true;
}

inline PointConfig permuted_config(const PointConfig& cfg,
                                   const std::vector<std::size_t>& ord) {
  std::vector<std::vector<double>> pos;
  std::vector<double> m, w;
  pos.reserve(ord.size());
  m.reserve(ord.size());
  w.reserve(ord.size());
  for (std::size_t i : ord) {
    pos.push_back(cfg.positions[i]);
    m.push_back(cfg.masses[i]);
    w.push_back(cfg.weights[i]);
  }
  return PointConfig(std::move(pos), std::move(m), Weights(std::move(w)));
}

struct Extremum1D {
  double y = 0.0;
  double value = 0.0;
};

// Breakpoints of the active set {i : |x_i-y| < pi/2} within [lo, hi].
inline std::vector<double> active_set_breakpoints(const std::vector<double>& xs,
                                                  double lo, double hi) {
  std::vector<double> bp{lo, hi};
  for (double x : xs) {
    for (double b : {x - half_pi, x + half_pi})
      if (b > lo && b < hi) bp.push_back(b);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-15; }),
           bp.end());
  return bp;
}

// Maximizes T(y) = sum_i c_i Cos(|x_i-y|) over [lo, hi], c_i >= 0.  On each
// piece with constant active set, T is strictly concave (T'' = -T < 0), so
// the interior maximum is the unique root of the decreasing derivative
// T'(y) = sum_active c_i sin(x_i-y), found by bisection.
inline Extremum1D maximize_cos_sum_1d(const std::vector<double>& xs,
                                      const std::vector<double>& coeff,
                                      double lo, double hi) {
  auto value_at = [&](double y) {
    double t = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      t += coeff[i] * cos_trunc(std::abs(xs[i] - y));
    return t;
  };
  Extremum1D best{lo, value_at(lo)};
  auto consider = [&](double y) {
    double v = value_at(y);
    if (v > best.value) best = {y, v};
  };
  if (hi <= lo) return best;
  consider(hi);

  std::vector<double> bp = active_set_breakpoints(xs, lo, hi);
  for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
    double a = bp[p], b = bp[p + 1];
    double mid = 0.5 * (a + b);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (std::abs(xs[i] - mid) < half_pi && coeff[i] > 0.0) active.push_back(i);
    if (active.empty()) continue;
    auto deriv = [&](double y) {
      double s = 0.0;
      for (std::size_t i : active) s += coeff[i] * std::sin(xs[i] - y);
      return s;
    };
    double da = deriv(a), db = deriv(b);
    if (da <= 0.0) continue;       // decreasing from the left endpoint
    if (db >= 0.0) continue;       // still increasing at the right endpoint
    double l = a, r = b;
    for (int it = 0; it < 200 && r - l > 1e-16 * (1.0 + std::abs(l)); ++it) {
      double m = 0.5 * (l + r);
      (deriv(m) > 0.0 ? l : r) = m;
    }
    consider(0.5 * (l + r));
  }
  return best;
}

// Maximizes f(y) = sum_i c_i Cos(|x_i-y|)^2 over [lo, hi], c_i >= 0.  On each
// piece, f(y) = S/2 + |W| cos(2y - arg W)/2 with W = sum_active c_i e^{2i x_i},
// so the candidates are the piece endpoints and arg(W)/2 (mod pi).
inline Extremum1D maximize_cos2_sum_1d(const std::vector<double>& xs,
                                       const std::vector<double>& coeff,
                                       double lo, double hi) {
  auto value_at = [&](double y) {
    double t = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      t += coeff[i] * sq(cos_trunc(std::abs(xs[i] - y)));
    return t;
  };
  Extremum1D best{lo, value_at(lo)};
  auto consider = [&](double y) {
    double v = value_at(y);
    if (v > best.value) best = {y, v};
  };
  if (hi <= lo) return best;
  consider(hi);

  std::vector<double> bp = active_set_breakpoints(xs, lo, hi);
  for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
    double a = bp[p], b = bp[p + 1];
    double mid = 0.5 * (a + b);
    std::complex<double> w{0.0, 0.0};
    bool any = false;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (std::abs(xs[i] - mid) < half_pi && coeff[i] > 0.0) {
        w += coeff[i] * std::exp(std::complex<double>(0.0, 2.0 * xs[i]));
        any = true;
      }
    consider(a);
    consider(b);
    if (!any || std::abs(w) == 0.0) continue;
    // A nonempty active set pins the piece inside an open pi/2-ball around
    // some x_i, so the piece is shorter than pi and holds at most one
    // representative of the period-pi maximizer family.
    double ystar = 0.5 * std::arg(w);
    double k = std::ceil((a - ystar) / pi);
    double cand = ystar + k * pi;
    if (cand >= a && cand <= b) consider(cand);
  }
  return best;
}

// Euclidean projection onto the unit simplex (sort-based).
inline std::vector<double> project_simplex(std::vector<double> a) {
  std::vector<double> u = a;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  std::size_t rho = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    css += u[k];
    double t = (css - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) {
      rho = k + 1;
      theta = t;
    }
  }
  for (double& v : a) v = std::max(v - theta, 0.0);
  return a;
}

// Approximate projection of y onto the convex hull of the positions via
// projected gradient on the barycentric weights; exact enough to seed the
// downstream simplex-coordinate refinement.
struct HullProjection {
  std::vector<double> alpha;
  std::vector<double> point;
  double dist2 = 0.0;
};

inline HullProjection project_to_hull(const std::vector<std::vector<double>>& xs,
                                      const std::vector<double>& y, int iters = 80) {
  const std::size_t n = xs.size(), d = y.size();
  std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
  double lip = 0.0;
  for (const auto& x : xs) lip += detail::dot(x, x);
  double step = lip > 0.0 ? 1.0 / (2.0 * lip) : 1.0;
  std::vector<double> r(d), g(n);
  for (int it = 0; it < iters; ++it) {
    std::fill(r.begin(), r.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k) r[k] += alpha[i] * xs[i][k];
    for (std::size_t k = 0; k < d; ++k) r[k] -= y[k];
    for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * detail::dot(xs[i], r);
    for (std::size_t i = 0; i < n; ++i) alpha[i] -= step * g[i];
    alpha = project_simplex(std::move(alpha));
  }
  HullProjection out;
  out.alpha = alpha;
  out.point.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) out.point[k] += alpha[i] * xs[i][k];
  double d2 = 0.0;
  for (std::size_t k = 0; k < d; ++k) d2 += sq(out.point[k] - y[k]);
  out.dist2 = d2;
  return out;
}

// Nelder-Mead on R^n; the objective is responsible for feasibility.
inline std::pair<std::vector<double>, double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
    double step, int max_iter) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);
  std::vector<std::size_t> ord(n + 1);

  for (int it = 0; it < max_iter; ++it) {
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    std::sort(ord.begin(), ord.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    if (fv[ord[n]] - fv[ord[0]] < 1e-14 * (1.0 + std::abs(fv[ord[0]]))) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[ord[i]][k] / static_cast<double>(n);
    const std::vector<double>& worst = pts[ord[n]];
    auto blend = [&](double c) {
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + c * (centroid[k] - worst[k]);
      return p;
    };
    std::vector<double> xr = blend(1.0);
    double fr = f(xr);
    if (fr < fv[ord[0]]) {
      std::vector<double> xe = blend(2.0);
      double fe = f(xe);
      if (fe < fr) {
        pts[ord[n]] = std::move(xe);
        fv[ord[n]] = fe;
      } else {
        pts[ord[n]] = std::move(xr);
        fv[ord[n]] = fr;
      }
    } else if (fr < fv[ord[n - 1]]) {
      pts[ord[n]] = std::move(xr);
      fv[ord[n]] = fr;
    } else {
      std::vector<double> xc = blend(fr < fv[ord[n]] ? 0.5 : -0.5);
      double fc = f(xc);
      if (fc < std::min(fr, fv[ord[n]])) {
        pts[ord[n]] = std::move(xc);
        fv[ord[n]] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t k = 0; k < n; ++k)
            pts[ord[i]][k] = 0.5 * (pts[ord[i]][k] + pts[ord[0]][k]);
          fv[ord[i]] = f(pts[ord[i]]);
        }
      }
    }
  }
  std::size_t bi = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fv[i] < fv[bi]) bi = i;
  return {pts[bi], fv[bi]};
}

struct HullOptimum {
  std::vector<double> y;
  double value = 0.0;
};

// Minimizes F over the convex hull of the positions (d in {2,3}): a coarse
// lattice over the bounding box with points projected onto the hull, then
// simplex-coordinate Nelder-Mead refinement from the best seeds.
inline HullOptimum minimize_over_hull_nd(const std::vector<std::vector<double>>& xs,
                                         const std::function<double(const std::vector<double>&)>& F) {
  const std::size_t n = xs.size(), d = xs[0].size();
  std::vector<double> lo = xs[0], hi = xs[0];
  for (const auto& x : xs)
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], x[k]);
      hi[k] = std::max(hi[k], x[k]);
    }

  auto point_of = [&](const std::vector<double>& alpha) {
    std::vector<double> p(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k) p[k] += alpha[i] * xs[i][k];
    return p;
  };

  struct Seed {
    std::vector<double> alpha;
    double value;
  };
  std::vector<Seed> seeds;
  auto push_seed = [&](std::vector<double> alpha) {
    double v = F(point_of(alpha));
    seeds.push_back({std::move(alpha), v});
  };

  // Vertices and centroid are always candidates.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    push_seed(std::move(e));
  }
  push_seed(std::vector<double>(n, 1.0 / static_cast<double>(n)));

  const std::size_t steps = 32;
  std::vector<std::size_t> counts(d);
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    counts[k] = hi[k] > lo[k] ? steps : 1;
    total *= counts[k];
  }
  Seed best_lattice{{}, inf};
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    std::vector<double> y(d);
    for (std::size_t k = d; k-- > 0;) {
      std::size_t idx = rem % counts[k];
      rem /= counts[k];
      y[k] = counts[k] == 1
                 ? lo[k]
                 : lo[k] + (hi[k] - lo[k]) * static_cast<double>(idx) /
                               static_cast<double>(counts[k] - 1);
    }
    HullProjection pr = project_to_hull(xs, y);
    double v = F(pr.point);
    if (v < best_lattice.value) best_lattice = {pr.alpha, v};
  }
  if (!best_lattice.alpha.empty()) seeds.push_back(best_lattice);

  std::sort(seeds.begin(), seeds.end(),
            [](const Seed& a, const Seed& b) { return a.value < b.value; });

  auto objective = [&](const std::vector<double>& alpha_raw) {
    return F(point_of(project_simplex(alpha_raw)));
  };
  HullOptimum out{point_of(seeds[0].alpha), seeds[0].value};
  const std::size_t refine = std::min<std::size_t>(seeds.size(), 3);
  for (std::size_t s = 0; s < refine; ++s) {
    auto [alpha, v] = nelder_mead(objective, seeds[s].alpha, 0.1, 400);
    if (v < out.value) {
      out.value = v;
      out.y = point_of(project_simplex(alpha));
    }
  }
  return out;
}

// Minimizer of c_mm_aux over the hull: exact piecewise search in d=1,
// lattice + refinement in d in {2,3}.
inline HullOptimum minimize_c_aux(const std::vector<std::vector<double>>& xs,
                                  const std::vector<double>& masses,
                                  const std::vector<double>& lambdas) {
  const std::size_t n = xs.size();
  double lin = 0.0;
  std::vector<double> coeff(n);
  for (std::size_t i = 0; i < n; ++i) {
    lin += lambdas[i] * masses[i];
    coeff[i] = lambdas[i] * std::sqrt(masses[i]);
  }
  if (xs[0].size() == 1) {
    std::vector<double> x1(n);
    for (std::size_t i = 0; i < n; ++i) x1[i] = xs[i][0];
    double lo = *std::min_element(x1.begin(), x1.end());
    double hi = *std::max_element(x1.begin(), x1.end());
    Extremum1D ex = maximize_cos_sum_1d(x1, coeff, lo, hi);
    double v = lin - sq(ex.value);
    if (v < 0.0) {
      if (v < -1e-10) throw internal_error("minimize_c_aux: negative value");
      v = 0.0;
    }
    return {{ex.y}, v};
  }
  if (xs[0].size() > 3)
    throw std::invalid_argument("c_mm: only dimensions 1 to 3 are supported");
  auto F = [&](const std::vector<double>& y) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      t += coeff[i] * cos_trunc(euclidean_distance(xs[i], y));
    return lin - t * t;
  };
  HullOptimum out = minimize_over_hull_nd(xs, F);
  if (out.value < 0.0) {
    if (out.value < -1e-10) throw internal_error("minimize_c_aux: negative value");
    out.value = 0.0;
  }
  return out;
}

}  // namespace detail

struct Closed1DResult {
  double value = 0.0;
  ConePoint minimizer;
};

// d=1 closed form for positions within a window of width pi/2:
//   value = sum_i lambda_i m_i - |z|^2,  z = sum_i lambda_i sqrt(m_i) e^{i x_i},
// with minimizer y = arg(z), s = |z|^2 (and |z|^2 equals the double sum
// sum_{i,j} lambda_i lambda_j sqrt(m_i m_j) cos(x_i - x_j)).
inline Closed1DResult c_mm_1d_closed(const PointConfig& cfg) {
  if (cfg.dim() != 1) throw std::invalid_argument("c_mm_1d_closed: requires d = 1");
  double lo = cfg.positions[0][0], hi = lo;
  for (const auto& x : cfg.positions) {
    lo = std::min(lo, x[0]);
    hi = std::max(hi, x[0]);
  }
  if (hi - lo > half_pi + 1e-15)
    throw std::invalid_argument("c_mm_1d_closed: positions exceed a pi/2 window");

  double lin = 0.0;
  std::complex<double> z{0.0, 0.0};
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    lin += cfg.weights[i] * cfg.masses[i];
    z += cfg.weights[i] * std::sqrt(cfg.masses[i]) *
         std::exp(std::complex<double>(0.0, cfg.positions[i][0]));
  }
  Closed1DResult out;
  double s = detail::sq(std::abs(z));
  out.value = lin - s;
  if (out.value < 0.0) {
    if (out.value < -1e-10) throw internal_error("c_mm_1d_closed: negative value");
    out.value = 0.0;
  }
  // z = 0 leaves the position free; fix the first input position.
  out.minimizer.position = {s > 0.0 ? std::arg(z) : cfg.positions[0][0]};
  out.minimizer.mass = s;
  return out;
}

// inf over y in the convex hull of the positions of c_mm_aux(cfg, y).
// In d=1 the piecewise-exact search is used, cross-checked against the
// closed form whenever the positions fit in a pi/2 window.
inline double c_mm(const PointConfig& cfg) {
  const std::vector<std::size_t> ord = detail::canonical_order(cfg);
  if (!detail::is_identity(ord)) return c_mm(detail::permuted_config(cfg, ord));
  std::vector<double> lambdas(cfg.weights.values());
  detail::HullOptimum opt = detail::minimize_c_aux(cfg.positions, cfg.masses, lambdas);
  if (cfg.dim() == 1) {
    double lo = cfg.positions[0][0], hi = lo;
    for (const auto& x : cfg.positions) {
      lo = std::min(lo, x[0]);
      hi = std::max(hi, x[0]);
    }
    if (hi - lo <= half_pi + 1e-15) {
      Closed1DResult cf = c_mm_1d_closed(cfg);
      if (std::abs(cf.value - opt.value) > 1e-9 * (1.0 + std::abs(cf.value)))
        throw internal_error("c_mm: closed form and numeric minimization disagree");
      return cf.value;
    }
  }
  return opt.value;
}

// Constraint function of the dual set: sum_i lambda_i Cos(|x_i-y|)^2 / (1 - psi_i/lambda_i)
// with the conventions: psi_i > lambda_i -> +inf; psi_i = lambda_i -> +inf
// where Cos > 0, term 0 where Cos = 0.
inline double f_constraint(const PointConfig& cfg, const DualVector& psi,
                           const std::vector<double>& y) {
  if (psi.psi.size() != cfg.size())
    throw std::invalid_argument("f_constraint: psi length mismatch");
  if (y.size() != cfg.dim()) throw std::invalid_argument("f_constraint: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    double lam = cfg.weights[i];
    double c = cos_trunc(detail::euclidean_distance(cfg.positions[i], y));
    if (psi.psi[i] > lam) return inf;
    if (psi.psi[i] == lam) {
      if (c > 0.0) return inf;
      continue;
    }
    s += lam * lam / (lam - psi.psi[i]) * c * c;
  }
  return s;
}

// Exact d=1 quadratic characterization of the scaled dual set (positions
// within a pi/2 window): chi in (0,1]^N belongs iff
//   sum_i chi_i - sum_{j<k} chi_j chi_k sin^2(x_j-x_k) <= 1
// on the branch sum_i chi_i <= 2.  The branch condition is required: the
// quadratic alone also admits the far sheet of the boundary hyperboloid
// (e.g. chi=(1,1,1) at x=(0,pi/4,pi/2) evaluates to 1 while the true sup of
// the constraint function is 2).
inline bool q_mm_quadratic_1d(const PointConfig& cfg, const std::vector<double>& chi) {
  if (cfg.dim() != 1) throw std::invalid_argument("q_mm_quadratic_1d: requires d = 1");
  if (chi.size() != cfg.size())
    throw std::invalid_argument("q_mm_quadratic_1d: chi length mismatch");
  double lo = cfg.positions[0][0], hi = lo;
  for (const auto& x : cfg.positions) {
    lo = std::min(lo, x[0]);
    hi = std::max(hi, x[0]);
  }
  if (hi - lo > half_pi + 1e-15)
    throw std::invalid_argument("q_mm_quadratic_1d: positions exceed a pi/2 window");

  double s = 0.0;
  for (double c : chi) {
    if (!(c > 0.0) || c > 1.0) return false;
    s += c;
  }
  if (s > 2.0) return false;
  double q = s;
  for (std::size_t j = 0; j < chi.size(); ++j)
    for (std::size_t k = j + 1; k < chi.size(); ++k)
      q -= chi[j] * chi[k] * detail::sq(std::sin(cfg.positions[j][0] - cfg.positions[k][0]));
  return q <= 1.0;
}

struct QmmResult {
  bool contained = false;
  std::vector<double> worst_y;  // maximizer of the constraint function
  double sup_value = 0.0;
};

// Membership test for the dual set: per-coordinate caps psi_i <= lambda_i - lambda_i^2
// plus sup over the convex hull of f_constraint <= 1, both within tol.
// d=1 evaluates the sup exactly piecewise; d in {2,3} uses the lattice +
// refinement machinery.
inline QmmResult q_mm_contains(const PointConfig& cfg, const DualVector& psi, double tol) {
  if (psi.psi.size() != cfg.size())
    throw std::invalid_argument("q_mm_contains: psi length mismatch");
  const std::size_t n = cfg.size();

  // Necessary caps (constraint at y = x_i dominates the i-th term).
  for (std::size_t i = 0; i < n; ++i) {
    double lam = cfg.weights[i];
    if (psi.psi[i] > lam - lam * lam + tol)
      return {false, cfg.positions[i], f_constraint(cfg, psi, cfg.positions[i])};
  }
  std::vector<double> chi(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lam = cfg.weights[i];
    double denom = lam - psi.psi[i];
    if (denom < 1e-14)
      return {false, cfg.positions[i], f_constraint(cfg, psi, cfg.positions[i])};
    chi[i] = lam * lam / denom;
  }

  QmmResult out;
  if (cfg.dim() == 1) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = cfg.positions[i][0];
    double lo = *std::min_element(xs.begin(), xs.end());
    double hi = *std::max_element(xs.begin(), xs.end());
    detail::Extremum1D ex = detail::maximize_cos2_sum_1d(xs, chi, lo, hi);
    out.worst_y = {ex.y};
    out.sup_value = ex.value;
  } else {
    if (cfg.dim() > 3)
      throw std::invalid_argument("q_mm_contains: only dimensions 1 to 3 are supported");
    auto F = [&](const std::vector<double>& y) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += chi[i] * detail::sq(cos_trunc(detail::euclidean_distance(cfg.positions[i], y)));
      return -s;
    };
    detail::HullOptimum opt = detail::minimize_over_hull_nd(cfg.positions, F);
    out.worst_y = opt.y;
    out.sup_value = -opt.value;
  }
  out.contained = out.sup_value <= 1.0 + tol;
  return out;
}

struct HullResult {
  double value = 0.0;
  Decomposition decomposition;
  std::vector<ConePoint> minimizers;  // per part, aligned with decomposition
  DualVector psi;                     // supporting dual vector (envelope gradient)
  bool parts_verified = true;         // every part passed the agreement check
};

namespace detail {

struct PartSolve {
  double value = 0.0;
  std::vector<double> y;
};

inline PartSolve solve_part(const PointConfig& cfg, const std::vector<double>& masses) {
  std::vector<double> lambdas(cfg.weights.values());
  HullOptimum opt = minimize_c_aux(cfg.positions, masses, lambdas);
  return {opt.value, opt.y};
}

// Objective of a decomposition in sqrt-mass coordinates U (parts x N):
// F(U) = sum_j c_mm(x, U_j^2) with the constraint sum_j U_ij^2 = m_i.
inline double decomposition_value(const PointConfig& cfg,
                                  const std::vector<std::vector<double>>& u,
                                  std::vector<PartSolve>* parts = nullptr) {
  double total = 0.0;
  if (parts) parts->clear();
  for (const auto& uj : u) {
    std::vector<double> m(uj.size());
    for (std::size_t i = 0; i < uj.size(); ++i) m[i] = sq(uj[i]);
    PartSolve ps = solve_part(cfg, m);
    total += ps.value;
    if (parts) parts->push_back(std::move(ps));
  }
  return total;
}

// Renormalize so that sum_j u_ij^2 = m_i for every coordinate i, after
// clamping negative entries to zero.
inline void project_decomposition(std::vector<std::vector<double>>& u,
                                  const std::vector<double>& masses) {
  const std::size_t parts = u.size(), n = masses.size();
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < parts; ++j) {
      if (u[j][i] < 0.0) u[j][i] = 0.0;
      ss += sq(u[j][i]);
    }
    if (masses[i] == 0.0) {
      for (std::size_t j = 0; j < parts; ++j) u[j][i] = 0.0;
      continue;
    }
    if (ss == 0.0) {
      double even = std::sqrt(masses[i] / static_cast<double>(parts));
      for (std::size_t j = 0; j < parts; ++j) u[j][i] = even;
      continue;
    }
    double scale = std::sqrt(masses[i] / ss);
    for (std::size_t j = 0; j < parts; ++j) u[j][i] *= scale;
  }
}

// Single-linkage clusters of 1..N positions at a distance threshold.
inline std::vector<std::vector<std::size_t>> linkage_clusters(
    const std::vector<std::vector<double>>& xs, double threshold) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (euclidean_distance(xs[i], xs[j]) <= threshold) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> where(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = find(i);
    if (where[r] < 0) {
      where[r] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(where[r])].push_back(i);
  }
  return groups;
}

// Projected gradient descent over decompositions from one start; returns the
// final objective value and leaves the iterate in u.
inline double descend_decomposition(const PointConfig& cfg,
                                    std::vector<std::vector<double>>& u) {
  const std::size_t parts = u.size(), n = cfg.size();
  project_decomposition(u, cfg.masses);
  std::vector<PartSolve> ps;
  double fv = decomposition_value(cfg, u, &ps);

  for (int it = 0; it < 400; ++it) {
    // Envelope gradient: d/du_ij = 2 lambda_i u_ij - 2 sqrt(s_j) lambda_i Cos(|x_i-y_j|).
    std::vector<std::vector<double>> grad(parts, std::vector<double>(n));
    for (std::size_t j = 0; j < parts; ++j) {
      double t = 0.0;
      std::vector<double> cosv(n);
      for (std::size_t i = 0; i < n; ++i) {
        cosv[i] = cos_trunc(euclidean_distance(cfg.positions[i], ps[j].y));
        t += cfg.weights[i] * u[j][i] * cosv[i];
      }
      for (std::size_t i = 0; i < n; ++i)
        grad[j][i] = 2.0 * cfg.weights[i] * u[j][i] - 2.0 * t * cfg.weights[i] * cosv[i];
    }
    double gnorm2 = 0.0;
    for (const auto& gj : grad) gnorm2 += dot(gj, gj);
    if (gnorm2 < 1e-28) break;

    double step = 0.5;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      std::vector<std::vector<double>> cand = u;
      for (std::size_t j = 0; j < parts; ++j)
        for (std::size_t i = 0; i < n; ++i) cand[j][i] -= step * grad[j][i];
      project_decomposition(cand, cfg.masses);
      std::vector<PartSolve> cps;
      double cv = decomposition_value(cfg, cand, &cps);
      if (cv < fv - 1e-15 * (1.0 + std::abs(fv))) {
        u = std::move(cand);
        ps = std::move(cps);
        improved = true;
        // Accept the first improving step; a fresh line search restarts at
        // the next iteration.
        fv = cv;
        break;
      }
    }
    if (!improved) break;
  }
  return fv;
}

}  // namespace detail

// Convex-hull relaxation of c_mm via mass decompositions: minimize
// sum_j c_mm(x, m^j) over splits m = sum_j m^j with at most N parts, by
// multi-start projected descent in sqrt-mass coordinates.  Parts that fail
// their own agreement check (part value must be indecomposable) are re-split
// in place; persistent failures only clear parts_verified.
inline HullResult c_mm_hull(const PointConfig& cfg) {
  const std::size_t n = cfg.size();
  const std::vector<std::size_t> ord = detail::canonical_order(cfg);
  if (!detail::is_identity(ord)) {
    HullResult sorted = c_mm_hull(detail::permuted_config(cfg, ord));
    for (auto& part : sorted.decomposition.parts) {
      std::vector<double> unsorted(n);
      for (std::size_t k = 0; k < n; ++k) unsorted[ord[k]] = part[k];
      part = std::move(unsorted);
    }
    std::vector<double> psi(n);
    for (std::size_t k = 0; k < n; ++k) psi[ord[k]] = sorted.psi.psi[k];
    sorted.psi.psi = std::move(psi);
    return sorted;
  }
  const double mass_total = std::accumulate(cfg.masses.begin(), cfg.masses.end(), 0.0);

  HullResult out;
  if (mass_total == 0.0) {
    out.value = 0.0;
    out.decomposition.parts = {cfg.masses};
    out.minimizers = {ConePoint{cfg.positions[0], 0.0}};
    out.psi.psi.assign(n, 0.0);
    return out;
  }

  // Deterministic start list in sqrt-mass coordinates.
  std::vector<std::vector<std::vector<double>>> starts;
  {
    std::vector<std::vector<double>> u(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) u[0][i] = std::sqrt(cfg.masses[i]);
    starts.push_back(u);  // undecomposed
  }
  {
    std::vector<std::vector<double>> u(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) u[i][i] = std::sqrt(cfg.masses[i]);
    starts.push_back(u);  // per-coordinate singletons
  }
  for (double threshold : {half_pi, half_pi / 2.0}) {
    auto groups = detail::linkage_clusters(cfg.positions, threshold);
    std::vector<std::vector<double>> u(n, std::vector<double>(n, 0.0));
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (std::size_t i : groups[g]) u[g][i] = std::sqrt(cfg.masses[i]);
    starts.push_back(std::move(u));
  }

  double best = inf;
  std::vector<std::vector<double>> best_u;
  for (auto& u : starts) {
    double v = detail::descend_decomposition(cfg, u);
    if (v < best - 0.0) {
      best = v;
      best_u = u;
    }
  }

  // Masses per part; merge parts whose minimizers coincide (joining them
  // never increases the value), drop empty parts, and re-check each part.
  std::vector<std::vector<double>> parts;
  for (const auto& uj : best_u) {
    std::vector<double> m(n);
    double pm = 0.0;
    for (std::size_t i = 0; i < n; ++i) pm += m[i] = detail::sq(uj[i]);
    if (pm > 1e-15 * mass_total) parts.push_back(std::move(m));
  }

  auto resolve = [&](const std::vector<std::vector<double>>& pl) {
    std::vector<detail::PartSolve> ps;
    for (const auto& m : pl) ps.push_back(detail::solve_part(cfg, m));
    return ps;
  };
  std::vector<detail::PartSolve> solved = resolve(parts);

  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t a = 0; a < parts.size() && !merged; ++a)
      for (std::size_t b = a + 1; b < parts.size() && !merged; ++b)
        if (detail::euclidean_distance(solved[a].y, solved[b].y) < 1e-9) {
          for (std::size_t i = 0; i < n; ++i) parts[a][i] += parts[b][i];
          parts.erase(parts.begin() + static_cast<long>(b));
          solved = resolve(parts);
          merged = true;
        }
  }

  // Agreement check per part: a part lying strictly above its own hull value
  // is decomposable and gets spliced into its sub-parts.
  out.parts_verified = true;
  for (int round = 0; round < 3; ++round) {
    bool spliced = false;
    for (std::size_t j = 0; j < parts.size(); ++j) {
      std::vector<std::vector<double>> sub(n, std::vector<double>(n, 0.0));
      for (std::size_t i = 0; i < n; ++i) sub[i][i] = std::sqrt(parts[j][i]);
      double sub_value = detail::descend_decomposition(cfg, sub);
      if (sub_value < solved[j].value - 1e-8 * (1.0 + std::abs(solved[j].value))) {
        std::vector<std::vector<double>> pieces;
        for (const auto& uj : sub) {
          std::vector<double> m(n);
          double pm = 0.0;
          for (std::size_t i = 0; i < n; ++i) pm += m[i] = detail::sq(uj[i]);
          if (pm > 1e-15 * mass_total) pieces.push_back(std::move(m));
        }
        if (pieces.size() > 1) {
          parts.erase(parts.begin() + static_cast<long>(j));
          parts.insert(parts.end(), pieces.begin(), pieces.end());
          solved = resolve(parts);
          spliced = true;
          break;
        }
      }
    }
    if (!spliced) break;
    if (round == 2) out.parts_verified = false;
  }

  // Final verification pass (no further splicing).
  for (std::size_t j = 0; j < parts.size(); ++j) {
    std::vector<std::vector<double>> sub(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) sub[i][i] = std::sqrt(parts[j][i]);
    double sub_value = detail::descend_decomposition(cfg, sub);
    if (sub_value < solved[j].value - 1e-8 * (1.0 + std::abs(solved[j].value)))
      out.parts_verified = false;
  }

  out.value = 0.0;
  for (const auto& ps : solved) out.value += ps.value;
  out.decomposition.parts = parts;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      t += cfg.weights[i] * std::sqrt(parts[j][i]) *
           cos_trunc(detail::euclidean_distance(cfg.positions[i], solved[j].y));
    out.minimizers.push_back(ConePoint{solved[j].y, t * t});
  }

  // Supporting dual vector: envelope gradient d/dm_i of the part carrying
  // the largest share of m_i.
  out.psi.psi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.masses[i] == 0.0) {
      out.psi.psi[i] = cfg.weights[i] - cfg.weights[i] * cfg.weights[i];
      continue;
    }
    std::size_t jbest = 0;
    for (std::size_t j = 1; j < parts.size(); ++j)
      if (parts[j][i] > parts[jbest][i]) jbest = j;
    double t = std::sqrt(out.minimizers[jbest].mass);
    double c = cos_trunc(detail::euclidean_distance(cfg.positions[i], solved[jbest].y));
    double lam = cfg.weights[i];
    out.psi.psi[i] =
        parts[jbest][i] > 0.0 ? lam - t * lam * c / std::sqrt(parts[jbest][i]) : lam - lam * lam;
  }
  return out;
}

// The unique minimizer (y, s) of the fixed-location cost for configurations
// in the agreement set S (c_mm equals its hull value and the mass vector is
// nonzero).
inline ConePoint pointwise_barycenter(const PointConfig& cfg) {
  const double mass_total = std::accumulate(cfg.masses.begin(), cfg.masses.end(), 0.0);
  if (mass_total == 0.0)
    throw std::invalid_argument("pointwise_barycenter: mass vector must be nonzero");
  std::vector<double> lambdas(cfg.weights.values());
  detail::HullOptimum opt = detail::minimize_c_aux(cfg.positions, cfg.masses, lambdas);
  HullResult hull = c_mm_hull(cfg);
  if (std::abs(opt.value - hull.value) > 1e-8)
    throw std::invalid_argument(
        "pointwise_barycenter: configuration is not in the agreement set S");
  double t = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i)
    t += cfg.weights[i] * std::sqrt(cfg.masses[i]) *
         cos_trunc(detail::euclidean_distance(cfg.positions[i], opt.y));
  return ConePoint{opt.y, t * t};
}

}  // namespace hkb
