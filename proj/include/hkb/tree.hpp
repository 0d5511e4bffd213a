// HK barycenter trees: barycenters of the same marginals across a sweep of
// length scales t (dilate by t, solve, pull back by 1/t) together with
// connected-component counts n0(t) of the scaled barycenters — the
// scale-space clustering construction.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstddef>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hkb/common.hpp"
#include "hkb/dirac_exact.hpp"
#include "hkb/entropic_barycenter.hpp"
#include "hkb/io.hpp"
#include "hkb/measures.hpp"

namespace hkb {

struct ScaleSweep {
  double t_min = 0.1;
  double t_max = 10.0;
  int num_scales = 16;
  enum class Spacing { log, linear };
  Spacing spacing = Spacing::log;

  void validate() const {
    if (!(t_min > 0.0) || !(t_min < t_max))
      throw std::invalid_argument("ScaleSweep: need 0 < t_min < t_max");
    if (num_scales < 2) throw std::invalid_argument("ScaleSweep: num_scales must be >= 2");
  }

  std::vector<double> scales() const {
    validate();
    std::vector<double> out(static_cast<std::size_t>(num_scales));
    for (int k = 0; k < num_scales; ++k) {
      double f = static_cast<double>(k) / static_cast<double>(num_scales - 1);
      out[static_cast<std::size_t>(k)] =
          spacing == Spacing::log ? t_min * std::pow(t_max / t_min, f)
                                  : t_min + f * (t_max - t_min);
    }
    return out;
  }
};

struct TreeOptions {
  int grid_cells = 256;            // per-dimension resolution for the entropic route
  double pad_fraction = 0.05;      // bounding-box padding before rasterization
  SinkhornConfig sinkhorn{};
  double barycenter_update_tol = 1e-8;
  int outer_max_iter = 200000;
  double threshold_frac = 0.01;    // grid-mode binarization level (fraction of max)
  double merge_radius_cells = 2.0; // grid-mode cluster merge radius (Chebyshev cells)
  double merge_radius = -1.0;      // discrete-mode merge radius; < 0 -> 1e-6 * diameter
  std::size_t max_exact_n = 6;     // largest N routed to the exact Dirac solver
  int threads = 0;                 // 0 -> hardware count (capped by HKB_THREADS)
};

struct TreeEntry {
  double t = 0.0;
  int n0 = 0;
  double mass = 0.0;
  bool converged = true;
  std::optional<DiscreteMeasure> discrete;  // exact route, original coordinates
  std::optional<GridMeasure> grid;          // entropic route, original coordinates
};

struct TreeResult {
  enum class Mode { exact_dirac, entropic_grid };
  Mode mode = Mode::exact_dirac;
  std::vector<TreeEntry> entries;  // ascending in t
};

// Connected components of a thresholded grid: binarize at threshold_frac of
// the maximum cell value, connect axis neighbors, then single-linkage merge
// clusters whose cells come within merge_radius_cells in Chebyshev distance
// (absorbs thin numerical gaps).  Zero measure -> 0.
inline int count_components(const GridMeasure& g, double threshold_frac = 0.01,
                            double merge_radius_cells = 2.0) {
  if (!(threshold_frac > 0.0) || !(threshold_frac < 1.0))
    throw std::invalid_argument("count_components: threshold_frac must lie in (0,1)");
  if (!(merge_radius_cells >= 0.0))
    throw std::invalid_argument("count_components: merge_radius_cells must be >= 0");
  double mx = 0.0;
  for (double v : g.values()) mx = std::max(mx, v);
  if (mx <= 0.0) return 0;
  const double cut = threshold_frac * mx;

  const auto& shape = g.shape();
  const std::size_t dim = shape.size();
  std::vector<std::size_t> cells;
  std::vector<std::vector<long>> index;
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    if (g.values()[flat] < cut) continue;
    cells.push_back(flat);
    std::vector<long> idx(dim);
    std::size_t rest = flat;
    for (std::size_t k = dim; k-- > 0;) {
      idx[k] = static_cast<long>(rest % shape[k]);
      rest /= shape[k];
    }
    index.push_back(std::move(idx));
  }

  std::vector<std::size_t> parent(cells.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      long cheb = 0, manh = 0;
      for (std::size_t k = 0; k < dim; ++k) {
        long d = std::abs(index[i][k] - index[j][k]);
        cheb = std::max(cheb, d);
        manh += d;
      }
      if (manh == 1 || static_cast<double>(cheb) <= merge_radius_cells) {
        std::size_t a = find(i), b = find(j);
        if (a != b) parent[a] = b;
      }
    }
  int roots = 0;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (find(i) == i) ++roots;
  return roots;
}

// Connected components of an atom list: single-linkage clustering at the
// given merge radius (default 1e-6 of the domain diameter).  Atoms of zero
// mass are ignored; zero measure -> 0.
inline int count_components(const DiscreteMeasure& m, double merge_radius = -1.0) {
  if (merge_radius < 0.0) merge_radius = 1e-6 * m.domain().diameter();
  std::vector<const Atom*> atoms;
  for (const Atom& a : m.atoms())
    if (a.mass > 0.0) atoms.push_back(&a);
  if (atoms.empty()) return 0;
  std::vector<std::size_t> parent(atoms.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      if (detail::euclidean_distance(atoms[i]->position, atoms[j]->position) <= merge_radius) {
        std::size_t a = find(i), b = find(j);
        if (a != b) parent[a] = b;
      }
  int roots = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (find(i) == i) ++roots;
  return roots;
}

namespace detail {

inline int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("HKB_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min(n, static_cast<int>(cap));
  }
  return std::min<int>(n, static_cast<int>(jobs));
}

inline bool all_single_positive_diracs(const std::vector<DiscreteMeasure>& marginals) {
  for (const auto& m : marginals)
    if (m.atoms().size() != 1 || !(m.atoms()[0].mass > 0.0)) return false;
  return true;
}

// Bounding box of all atoms, padded; degenerate axes widen to +-0.5.
inline Domain padded_bounding_domain(const std::vector<DiscreteMeasure>& marginals,
                                     double pad_fraction) {
  const std::size_t dim = marginals.front().dim();
  std::vector<double> lo(dim, inf), hi(dim, -inf);
  for (const auto& m : marginals)
    for (const Atom& a : m.atoms())
      for (std::size_t k = 0; k < dim; ++k) {
        lo[k] = std::min(lo[k], a.position[k]);
        hi[k] = std::max(hi[k], a.position[k]);
      }
  for (std::size_t k = 0; k < dim; ++k) {
    double w = hi[k] - lo[k];
    double pad = w > 1e-9 ? pad_fraction * w : 0.5;
    lo[k] -= pad;
    hi[k] += pad;
  }
  return Domain(std::move(lo), std::move(hi));
}

}  // namespace detail

// One entropic solve at scale t for discrete marginals: dilate, rasterize
// onto a shared grid, solve, pull the grid back to original coordinates.
inline TreeEntry entropic_entry_at_scale(const std::vector<DiscreteMeasure>& marginals,
                                         const Weights& weights, double t,
                                         const TreeOptions& opt) {
  std::vector<DiscreteMeasure> dilated;
  dilated.reserve(marginals.size());
  for (const auto& m : marginals) dilated.push_back(dilate(m, t));
  Domain dom = detail::padded_bounding_domain(dilated, opt.pad_fraction);
  const std::size_t dim = dom.dim();
  std::vector<std::size_t> shape(dim, static_cast<std::size_t>(opt.grid_cells));
  std::vector<GridMeasure> grids;
  grids.reserve(dilated.size());
  for (const auto& m : dilated)
    grids.push_back(rasterize(DiscreteMeasure(dom, m.atoms()), shape));

  BarycenterConfig cfg(weights);
  cfg.sinkhorn = opt.sinkhorn;
  cfg.barycenter_update_tol = opt.barycenter_update_tol;
  cfg.outer_max_iter = opt.outer_max_iter;
  BarycenterResult res = barycenter_grid(grids, cfg);

  TreeEntry entry;
  entry.t = t;
  entry.converged = res.converged;
  entry.n0 = count_components(res.nu, opt.threshold_frac, opt.merge_radius_cells);
  entry.mass = total_mass(res.nu);
  entry.grid = dilate(res.nu, 1.0 / t);
  return entry;
}

// One exact solve at scale t (all marginals single Diracs, small N).
inline TreeEntry exact_entry_at_scale(const std::vector<DiscreteMeasure>& marginals,
                                      const Weights& weights, double t,
                                      const TreeOptions& opt) {
  std::vector<std::vector<double>> positions;
  std::vector<double> masses;
  for (const auto& m : marginals) {
    std::vector<double> p = m.atoms()[0].position;
    for (double& c : p) c *= t;
    positions.push_back(std::move(p));
    masses.push_back(m.atoms()[0].mass);
  }
  PointConfig cfg(std::move(positions), std::move(masses), weights);

  DiracBarycenter bc;
  if (cfg.size() == 2)
    bc = barycenter_n2(cfg.positions[0], cfg.masses[0], cfg.positions[1], cfg.masses[1],
                       cfg.weights[1]);
  else if (cfg.size() == 3 && cfg.dim() == 1)
    bc = barycenter_n3_1d(cfg);
  else
    bc = barycenter_diracs(cfg);

  std::vector<Atom> atoms = bc.atoms;
  for (Atom& a : atoms)
    for (double& c : a.position) c /= t;
  Domain dom = detail::padded_bounding_domain(marginals, 0.5);

  TreeEntry entry;
  entry.t = t;
  entry.converged = bc.valid;
  entry.discrete = DiscreteMeasure(dom, std::move(atoms));
  entry.mass = total_mass(*entry.discrete);
  entry.n0 = count_components(*entry.discrete, opt.merge_radius);
  return entry;
}

inline TreeEntry barycenter_at_scale(const std::vector<DiscreteMeasure>& marginals,
                                     const Weights& weights, double t,
                                     const TreeOptions& opt = {}) {
  if (!(t > 0.0)) throw std::invalid_argument("barycenter_at_scale: t must be > 0");
  if (marginals.size() != weights.size())
    throw std::invalid_argument("barycenter_at_scale: weights/marginals count mismatch");
  for (std::size_t i = 1; i < marginals.size(); ++i)
    if (marginals[i].dim() != marginals[0].dim())
      throw std::invalid_argument("barycenter_at_scale: marginal dimensions differ");
  const bool exact = detail::all_single_positive_diracs(marginals) &&
                     marginals.size() <= opt.max_exact_n && marginals[0].dim() <= 3;
  return exact ? exact_entry_at_scale(marginals, weights, t, opt)
               : entropic_entry_at_scale(marginals, weights, t, opt);
}

inline TreeEntry barycenter_at_scale(const std::vector<GridMeasure>& marginals,
                                     const Weights& weights, double t,
                                     const TreeOptions& opt = {}) {
  if (!(t > 0.0)) throw std::invalid_argument("barycenter_at_scale: t must be > 0");
  if (marginals.size() != weights.size())
    throw std::invalid_argument("barycenter_at_scale: weights/marginals count mismatch");
  std::vector<GridMeasure> dilated;
  dilated.reserve(marginals.size());
  for (const auto& m : marginals) dilated.push_back(dilate(m, t));
  BarycenterConfig cfg(weights);
  cfg.sinkhorn = opt.sinkhorn;
  cfg.barycenter_update_tol = opt.barycenter_update_tol;
  cfg.outer_max_iter = opt.outer_max_iter;
  BarycenterResult res = barycenter_grid(dilated, cfg);
  TreeEntry entry;
  entry.t = t;
  entry.converged = res.converged;
  entry.n0 = count_components(res.nu, opt.threshold_frac, opt.merge_radius_cells);
  entry.mass = total_mass(res.nu);
  entry.grid = dilate(res.nu, 1.0 / t);
  return entry;
}

namespace detail {

template <typename Marginals>
TreeResult sweep_impl(const Marginals& marginals, const Weights& weights,
                      const ScaleSweep& sc, const TreeOptions& opt,
                      TreeResult::Mode mode) {
  const std::vector<double> ts = sc.scales();
  TreeResult out;
  out.mode = mode;
  out.entries.resize(ts.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= ts.size()) return;
      try {
        out.entries[i] = barycenter_at_scale(marginals, weights, ts[i], opt);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int workers = worker_count(opt.threads, ts.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace detail

// Scale sweep over discrete marginals.  The route (exact vs entropic) is
// decided once per sweep; scales are solved independently on a worker pool
// and assembled in scale order, so results are deterministic regardless of
// thread count.
inline TreeResult sweep(const std::vector<DiscreteMeasure>& marginals, const Weights& weights,
                        const ScaleSweep& sc, const TreeOptions& opt = {}) {
  if (marginals.size() != weights.size())
    throw std::invalid_argument("sweep: weights/marginals count mismatch");
  const bool exact = detail::all_single_positive_diracs(marginals) &&
                     marginals.size() <= opt.max_exact_n && marginals[0].dim() <= 3;
  return detail::sweep_impl(marginals, weights, sc, opt,
                            exact ? TreeResult::Mode::exact_dirac
                                  : TreeResult::Mode::entropic_grid);
}

inline TreeResult sweep(const std::vector<GridMeasure>& marginals, const Weights& weights,
                        const ScaleSweep& sc, const TreeOptions& opt = {}) {
  if (marginals.size() != weights.size())
    throw std::invalid_argument("sweep: weights/marginals count mismatch");
  return detail::sweep_impl(marginals, weights, sc, opt, TreeResult::Mode::entropic_grid);
}

struct Plateau {
  int n0 = 0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t length = 0;  // number of consecutive sweep entries
};

// Longest run of consecutive entries sharing one component count (first run
// wins ties), used to read off the stable cluster count of a sweep.
inline Plateau longest_plateau(const TreeResult& tree) {
  Plateau best;
  std::size_t i = 0;
  while (i < tree.entries.size()) {
    std::size_t j = i;
    while (j + 1 < tree.entries.size() && tree.entries[j + 1].n0 == tree.entries[i].n0) ++j;
    std::size_t len = j - i + 1;
    if (len > best.length) {
      best.n0 = tree.entries[i].n0;
      best.t_lo = tree.entries[i].t;
      best.t_hi = tree.entries[j].t;
      best.length = len;
    }
    i = j + 1;
  }
  return best;
}

// Tree CSV: header then one `t,n0,total_mass` row per scale.
inline void write_tree_csv(const std::string& path, const TreeResult& tree) {
  std::ofstream out = io::detail::open_output(path);
  out << "t,n0,total_mass\n";
  for (const TreeEntry& e : tree.entries)
    out << io::format_double(e.t) << "," << e.n0 << "," << io::format_double(e.mass) << "\n";
}

}  // namespace hkb
