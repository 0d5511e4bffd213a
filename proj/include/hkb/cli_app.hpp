// Command-line frontend: distances, barycenters, Dirac regime analysis,
// multi-marginal cost evaluation, and scale-sweep trees, operating on the
// CSV/JSON measure formats.  Exit codes: 0 success (including flagged
// non-convergence), 2 usage or input errors, 3 internal invariant
// violations.
#pragma once

#include <algorithm>
#include <clocale>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hkb/common.hpp"
#include "hkb/dirac_exact.hpp"
#include "hkb/entropic_barycenter.hpp"
#include "hkb/hk_metric.hpp"
#include "hkb/io.hpp"
#include "hkb/measures.hpp"
#include "hkb/multi_marginal.hpp"
#include "hkb/tree.hpp"

namespace hkb::cli {

// ---------------------------------------------------------------------------
// JSON config files: a flat object {"option": value} supplies defaults for
// options the command line left unset, so flags always take precedence.
// (Applied by hand in each subcommand callback: CLI11 only reads config files
// attached to the root application, never to subcommands.)
inline std::vector<CLI::ConfigItem> config_items_from_json(std::istream& input) {
  nlohmann::json j = nlohmann::json::parse(input);
  if (!j.is_object())
    throw std::invalid_argument("config file must contain a JSON object");
  std::vector<CLI::ConfigItem> items;
  for (const auto& [key, val] : j.items()) {
    CLI::ConfigItem item;
    item.name = key;
    auto push = [&item](const nlohmann::json& v) {
      if (v.is_string())
        item.inputs.push_back(v.get<std::string>());
      else if (v.is_boolean())
        item.inputs.push_back(v.get<bool>() ? "true" : "false");
      else
        item.inputs.push_back(v.dump());
    };
    if (val.is_array())
      for (const auto& v : val) push(v);
    else
      push(val);
    items.push_back(std::move(item));
  }
  return items;
}

inline void apply_json_config(CLI::App* cmd, const std::string& path) {
  std::ifstream in = io::detail::open_input(path);
  for (const CLI::ConfigItem& item : config_items_from_json(in)) {
    CLI::Option* op = cmd->get_option_no_throw("--" + item.name);
    if (op == nullptr)
      throw std::invalid_argument("config: unknown option '" + item.name + "'");
    if (op->count() > 0) continue;  // flags override the file
    for (const std::string& v : item.inputs) op->add_result(v);
    op->run_callback();
  }
}

// ---------------------------------------------------------------------------
// Small helpers.

inline std::string jnum(double v) {
  return std::isfinite(v) ? io::format_double(v) : "null";
}

inline std::string jarr(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += jnum(v[i]);
  }
  return s + "]";
}

inline std::string jbool(bool b) { return b ? "true" : "false"; }

inline std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(s);
  while (std::getline(in, token, ',')) {
    double v = 0.0;
    if (!io::detail::parse_double(io::detail::strip(token), v))
      throw std::invalid_argument(what + ": not a number: '" + token + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(what + ": empty list");
  return out;
}

inline ScaleSweep parse_scales(const std::string& s) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream in(s);
  while (std::getline(in, token, ':')) parts.push_back(io::detail::strip(token));
  if (parts.size() != 3 && parts.size() != 4)
    throw std::invalid_argument("scales: expected tmin:tmax:num[:log|lin]");
  ScaleSweep sweep;
  double num = 0.0;
  if (!io::detail::parse_double(parts[0], sweep.t_min) ||
      !io::detail::parse_double(parts[1], sweep.t_max) ||
      !io::detail::parse_double(parts[2], num))
    throw std::invalid_argument("scales: tmin, tmax, num must be numbers");
  sweep.num_scales = static_cast<int>(num);
  if (parts.size() == 4) {
    if (parts[3] == "log")
      sweep.spacing = ScaleSweep::Spacing::log;
    else if (parts[3] == "lin")
      sweep.spacing = ScaleSweep::Spacing::linear;
    else
      throw std::invalid_argument("scales: spacing must be 'log' or 'lin'");
  }
  sweep.validate();
  return sweep;
}

struct LoadedInput {
  std::string path;
  std::optional<DiscreteMeasure> discrete;
  std::optional<GridMeasure> grid;
  bool is_grid() const { return grid.has_value(); }
};

inline LoadedInput load_input(const std::string& path) {
  LoadedInput in;
  in.path = path;
  if (std::filesystem::path(path).extension() == ".json")
    in.grid = io::read_grid_json(path);
  else
    in.discrete = io::read_discrete_csv(path);
  return in;
}

inline std::vector<LoadedInput> load_inputs(const std::vector<std::string>& paths) {
  std::vector<LoadedInput> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_input(p));
  return out;
}

inline bool single_positive_atom(const LoadedInput& in) {
  return in.discrete && in.discrete->atoms().size() == 1 && in.discrete->atoms()[0].mass > 0.0;
}

inline Weights make_weights(const std::string& spec, std::size_t n) {
  if (spec.empty())
    return Weights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  std::vector<double> w = parse_double_list(spec, "weights");
  if (w.size() != n)
    throw std::invalid_argument("weights: expected " + std::to_string(n) + " entries, got " +
                                std::to_string(w.size()));
  return Weights(std::move(w));
}

// Shared padded bounding box over several atom lists (entropic rasterization).
inline Domain shared_bounding_domain(const std::vector<const DiscreteMeasure*>& ms,
                                     double pad_fraction = 0.05) {
  const std::size_t dim = ms.front()->dim();
  std::vector<double> lo(dim, inf), hi(dim, -inf);
  for (const auto* m : ms)
    for (const Atom& a : m->atoms())
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

struct SolverFlags {
  double epsilon = 1.0;
  double eps_final = 1e-4;
  double tol = 1e-6;
  int max_iter = 2000;
};

inline void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--epsilon", f.epsilon, "initial entropic regularization")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--eps-final", f.eps_final, "final entropic regularization")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", f.tol, "convergence tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", f.max_iter, "iterations per regularization stage")
      ->check(CLI::PositiveNumber);
}

inline SinkhornConfig to_sinkhorn(const SolverFlags& f) {
  SinkhornConfig sc;
  sc.epsilon_start = f.epsilon;
  sc.epsilon_final = f.eps_final;
  sc.marginal_tol = f.tol;
  sc.max_iter_per_epsilon = f.max_iter;
  sc.validate();
  return sc;
}

// ---------------------------------------------------------------------------
// dist: HK distance between two measures.

struct DistParams {
  std::vector<std::string> files;
  int grid = 256;
  SolverFlags solver;
  std::string config;
  bool json = false;
};

inline int cmd_dist(const DistParams& P) {
  LoadedInput a = load_input(P.files[0]);
  LoadedInput b = load_input(P.files[1]);

  double hk2 = 0.0;
  bool converged = true;
  std::string method;
  if (single_positive_atom(a) && single_positive_atom(b)) {
    const Atom& x = a.discrete->atoms()[0];
    const Atom& y = b.discrete->atoms()[0];
    hk2 = hk_dirac_sq(x.position, x.mass, y.position, y.mass);
    method = "closed-form";
  } else {
    method = "entropic";
    std::optional<GridMeasure> ga, gb;
    if (a.is_grid() && b.is_grid()) {
      if (!a.grid->same_layout(*b.grid))
        throw std::invalid_argument("dist: grid inputs must share shape and domain");
      ga = *a.grid;
      gb = *b.grid;
    } else if (a.is_grid() != b.is_grid()) {
      const GridMeasure& g = a.is_grid() ? *a.grid : *b.grid;
      const DiscreteMeasure& d = a.is_grid() ? *b.discrete : *a.discrete;
      GridMeasure r = rasterize(DiscreteMeasure(g.domain(), d.atoms()), g.shape());
      ga = a.is_grid() ? *a.grid : r;
      gb = a.is_grid() ? r : *b.grid;
    } else {
      if (a.discrete->dim() != b.discrete->dim())
        throw std::invalid_argument("dist: inputs have different dimensions");
      Domain dom = shared_bounding_domain({&*a.discrete, &*b.discrete});
      std::vector<std::size_t> shape(dom.dim(), static_cast<std::size_t>(P.grid));
      ga = rasterize(DiscreteMeasure(dom, a.discrete->atoms()), shape);
      gb = rasterize(DiscreteMeasure(dom, b.discrete->atoms()), shape);
    }
    DistanceResult res = hk_distance_sq(*ga, *gb, to_sinkhorn(P.solver));
    hk2 = res.value;
    converged = res.converged;
  }

  double hk = std::sqrt(std::max(hk2, 0.0));
  if (P.json) {
    std::cout << "{\"hk2\":" << jnum(hk2) << ",\"hk\":" << jnum(hk) << ",\"converged\":"
              << jbool(converged) << ",\"method\":\"" << method << "\"}\n";
  } else {
    std::cout << "hk2 = " << io::format_double(hk2) << "\n";
    std::cout << "hk = " << io::format_double(hk) << "\n";
    std::cout << "converged = " << jbool(converged) << "\n";
    std::cout << "method = " << method << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bary / dirac: barycenters (exact Dirac route or entropic grid route).

struct BaryParams {
  std::vector<std::string> files;
  std::string weights;
  bool exact = false;
  int grid = 0;  // 0: route by input type; > 0: force entropic at this resolution
  SolverFlags solver;
  std::string out;
  std::string config;
  bool pgm = false;
  bool json = false;
};

inline std::string atoms_csv_text(const std::vector<Atom>& atoms) {
  std::string s;
  if (atoms.empty()) return s;
  for (std::size_t k = 0; k < atoms[0].position.size(); ++k)
    s += "x_" + std::to_string(k + 1) + ",";
  s += "mass\n";
  for (const Atom& a : atoms) {
    for (double c : a.position) s += io::format_double(c) + ",";
    s += io::format_double(a.mass) + "\n";
  }
  return s;
}

inline std::string atoms_json(const std::vector<Atom>& atoms) {
  std::string s = "[";
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    if (j) s += ",";
    s += "{\"position\":" + jarr(atoms[j].position) + ",\"mass\":" + jnum(atoms[j].mass) + "}";
  }
  return s + "]";
}

inline int cmd_bary(const BaryParams& P, bool dirac_mode) {
  if (P.exact && P.grid > 0)
    throw std::invalid_argument("bary: --exact and --grid are mutually exclusive");
  std::vector<LoadedInput> inputs = load_inputs(P.files);
  const std::size_t n = inputs.size();
  if (n < 2) throw std::invalid_argument("bary: need at least two input measures");
  Weights weights = make_weights(P.weights, n);

  bool all_discrete = true, all_grid = true, all_single = true;
  for (const auto& in : inputs) {
    all_discrete = all_discrete && !in.is_grid();
    all_grid = all_grid && in.is_grid();
    all_single = all_single && single_positive_atom(in);
  }

  const bool exact_route = dirac_mode || P.exact || (P.grid == 0 && all_single);
  if (exact_route) {
    if (!all_single)
      throw std::invalid_argument(
          "bary: the exact route requires single-atom CSV inputs (use --grid N for the "
          "entropic route)");
    std::vector<std::vector<double>> positions;
    std::vector<double> masses;
    for (const auto& in : inputs) {
      positions.push_back(in.discrete->atoms()[0].position);
      masses.push_back(in.discrete->atoms()[0].mass);
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

    if (!P.out.empty()) io::write_atoms_csv(P.out, bc.atoms);
    if (P.pgm) throw std::invalid_argument("bary: --pgm requires the entropic grid route");

    if (P.json) {
      std::cout << "{\"method\":\"exact\",\"value\":" << jnum(bc.value)
                << ",\"regime\":\"" << to_string(bc.regime) << "\",\"boundary\":"
                << jbool(bc.boundary) << ",\"valid\":" << jbool(bc.valid)
                << ",\"atoms\":" << atoms_json(bc.atoms)
                << ",\"psi\":" << jarr(bc.certificate.psi);
      if (!bc.diffuse_interval.empty())
        std::cout << ",\"diffuse_interval\":" << jarr(bc.diffuse_interval);
      std::cout << "}\n";
    } else {
      std::cout << "value = " << io::format_double(bc.value) << "\n";
      std::cout << "method = exact\n";
      if (dirac_mode) {
        std::cout << "regime = " << to_string(bc.regime) << "\n";
        std::cout << "boundary = " << jbool(bc.boundary) << "\n";
        std::cout << "valid = " << jbool(bc.valid) << "\n";
        if (!bc.diffuse_interval.empty())
          std::cout << "diffuse_interval = [" << io::format_double(bc.diffuse_interval[0])
                    << ", " << io::format_double(bc.diffuse_interval[1]) << "]\n";
      }
      if (P.out.empty()) std::cout << atoms_csv_text(bc.atoms);
    }
    return 0;
  }

  // Entropic route on a shared grid layout.
  std::vector<GridMeasure> grids;
  if (all_grid) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!inputs[i].grid->same_layout(*inputs[0].grid))
        throw std::invalid_argument("bary: grid inputs must share shape and domain");
      if (P.grid > 0)
        for (std::size_t s : inputs[i].grid->shape())
          if (s != static_cast<std::size_t>(P.grid))
            throw std::invalid_argument("bary: --grid conflicts with the grid-file layout");
      grids.push_back(*inputs[i].grid);
    }
  } else if (all_discrete) {
    std::vector<const DiscreteMeasure*> ms;
    for (const auto& in : inputs) ms.push_back(&*in.discrete);
    for (const auto& in : inputs)
      if (in.discrete->dim() != inputs[0].discrete->dim())
        throw std::invalid_argument("bary: inputs have different dimensions");
    Domain dom = shared_bounding_domain(ms);
    int cells = P.grid > 0 ? P.grid : 256;
    std::vector<std::size_t> shape(dom.dim(), static_cast<std::size_t>(cells));
    for (const auto& in : inputs)
      grids.push_back(rasterize(DiscreteMeasure(dom, in.discrete->atoms()), shape));
  } else {
    if (P.grid == 0)
      throw std::invalid_argument(
          "bary: mixed atom-list and grid inputs require --grid to confirm the entropic "
          "route");
    const GridMeasure* proto = nullptr;
    for (const auto& in : inputs)
      if (in.is_grid()) {
        proto = &*in.grid;
        break;
      }
    for (std::size_t s : proto->shape())
      if (s != static_cast<std::size_t>(P.grid))
        throw std::invalid_argument("bary: --grid conflicts with the grid-file layout");
    for (const auto& in : inputs) {
      if (in.is_grid()) {
        if (!in.grid->same_layout(*proto))
          throw std::invalid_argument("bary: grid inputs must share shape and domain");
        grids.push_back(*in.grid);
      } else {
        grids.push_back(
            rasterize(DiscreteMeasure(proto->domain(), in.discrete->atoms()), proto->shape()));
      }
    }
  }

  BarycenterConfig cfg(weights);
  cfg.sinkhorn = to_sinkhorn(P.solver);
  cfg.barycenter_update_tol = std::min(P.solver.tol, 1e-6);
  BarycenterResult res = barycenter_grid(grids, cfg);

  if (!P.out.empty()) io::write_grid_json(P.out, res.nu);
  if (P.pgm) {
    if (res.nu.dim() != 2)
      throw std::invalid_argument("bary: --pgm requires a 2-d grid barycenter");
    if (P.out.empty())
      throw std::invalid_argument("bary: --pgm requires --out to name the output file");
    std::filesystem::path pgm_path(P.out);
    pgm_path.replace_extension(".pgm");
    io::write_grid_pgm(pgm_path.string(), res.nu);
  }

  if (P.json) {
    std::cout << "{\"method\":\"entropic\",\"value\":" << jnum(res.value)
              << ",\"converged\":" << jbool(res.converged)
              << ",\"total_mass\":" << jnum(total_mass(res.nu)) << "}\n";
  } else {
    std::cout << "value = " << io::format_double(res.value) << "\n";
    std::cout << "method = entropic\n";
    std::cout << "converged = " << jbool(res.converged) << "\n";
    std::cout << "total_mass = " << io::format_double(total_mass(res.nu)) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// cmm: multi-marginal cost and dual membership for a point configuration.

struct CmmParams {
  std::string config_file;
  double tol = 1e-9;
  bool json = false;
};

inline int cmd_cmm(const CmmParams& P) {
  std::ifstream in = io::detail::open_input(P.config_file);
  nlohmann::json j = nlohmann::json::parse(in);
  if (!j.is_object() || !j.contains("positions") || !j.contains("masses") ||
      !j.contains("weights"))
    throw std::invalid_argument("cmm: config must contain positions, masses, weights");

  std::vector<std::vector<double>> positions;
  for (const auto& p : j.at("positions")) {
    if (p.is_array())
      positions.push_back(p.get<std::vector<double>>());
    else
      positions.push_back({p.get<double>()});
  }
  PointConfig cfg(std::move(positions), j.at("masses").get<std::vector<double>>(),
                  Weights(j.at("weights").get<std::vector<double>>()));

  double pointwise = c_mm(cfg);
  HullResult hull = c_mm_hull(cfg);

  std::optional<QmmResult> membership;
  std::vector<double> psi;
  if (j.contains("psi")) {
    psi = j.at("psi").get<std::vector<double>>();
    if (psi.size() != cfg.size())
      throw std::invalid_argument("cmm: psi must have one entry per point");
    membership = q_mm_contains(cfg, DualVector{psi}, P.tol);
  }

  std::vector<Atom> hull_atoms;
  for (const auto& mzr : hull.minimizers)
    hull_atoms.push_back(Atom{mzr.position, mzr.mass});

  if (P.json) {
    std::cout << "{\"c_mm\":" << jnum(pointwise) << ",\"hull_value\":" << jnum(hull.value)
              << ",\"parts\":" << hull.decomposition.parts.size()
              << ",\"atoms\":" << atoms_json(hull_atoms)
              << ",\"psi\":" << jarr(hull.psi.psi)
              << ",\"parts_verified\":" << jbool(hull.parts_verified);
    if (membership)
      std::cout << ",\"contained\":" << jbool(membership->contained)
                << ",\"sup_value\":" << jnum(membership->sup_value)
                << ",\"worst_y\":" << jarr(membership->worst_y);
    std::cout << "}\n";
  } else {
    std::cout << "c_mm = " << io::format_double(pointwise) << "\n";
    std::cout << "hull_value = " << io::format_double(hull.value) << "\n";
    std::cout << "parts = " << hull.decomposition.parts.size() << "\n";
    std::cout << "parts_verified = " << jbool(hull.parts_verified) << "\n";
    std::cout << "psi = " << jarr(hull.psi.psi) << "\n";
    std::cout << atoms_csv_text(hull_atoms);
    if (membership) {
      std::cout << "contained = " << jbool(membership->contained) << "\n";
      std::cout << "sup_value = " << io::format_double(membership->sup_value) << "\n";
      std::cout << "worst_y = " << jarr(membership->worst_y) << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// tree: scale sweep with component counts.

struct TreeParams {
  std::vector<std::string> files;
  std::string weights;
  std::string scales;
  int grid = 0;  // 0: 256 for 1-d, 64 otherwise
  double threshold = 0.01;
  double merge_radius = -1.0;
  SolverFlags solver;
  std::string out;
  std::string config;
  bool json = false;
};

inline int cmd_tree(const TreeParams& P) {
  std::vector<LoadedInput> inputs = load_inputs(P.files);
  // A single input is compared against itself (barycenter = the input).
  if (inputs.size() == 1) inputs.push_back(inputs[0]);
  const std::size_t n = inputs.size();
  Weights weights = make_weights(P.weights, n);
  ScaleSweep sweep_spec = parse_scales(P.scales);

  bool all_grid = true, all_discrete = true;
  for (const auto& in : inputs) {
    all_grid = all_grid && in.is_grid();
    all_discrete = all_discrete && !in.is_grid();
  }
  if (!all_grid && !all_discrete)
    throw std::invalid_argument("tree: inputs must be all atom lists or all grids");

  TreeOptions opt;
  opt.sinkhorn = to_sinkhorn(P.solver);
  opt.barycenter_update_tol = std::min(P.solver.tol, 1e-6);
  opt.threshold_frac = P.threshold;
  if (P.merge_radius >= 0.0) {
    opt.merge_radius_cells = P.merge_radius;
    opt.merge_radius = P.merge_radius;
  }

  TreeResult tree;
  if (all_discrete) {
    std::vector<DiscreteMeasure> ms;
    for (const auto& in : inputs) ms.push_back(*in.discrete);
    opt.grid_cells = P.grid > 0 ? P.grid : (ms[0].dim() == 1 ? 256 : 64);
    tree = sweep(ms, weights, sweep_spec, opt);
  } else {
    std::vector<GridMeasure> ms;
    for (const auto& in : inputs) ms.push_back(*in.grid);
    tree = sweep(ms, weights, sweep_spec, opt);
  }

  if (!P.out.empty()) {
    write_tree_csv(P.out + ".csv", tree);
    for (std::size_t k = 0; k < tree.entries.size(); ++k) {
      const TreeEntry& e = tree.entries[k];
      std::string base = P.out + "_scale_" + std::to_string(k);
      if (e.discrete)
        io::write_atoms_csv(base + ".csv", e.discrete->atoms());
      else if (e.grid)
        io::write_grid_json(base + ".json", *e.grid);
    }
  }

  Plateau plateau = longest_plateau(tree);
  const char* mode =
      tree.mode == TreeResult::Mode::exact_dirac ? "exact-dirac" : "entropic-grid";
  if (P.json) {
    std::cout << "{\"mode\":\"" << mode << "\",\"entries\":[";
    for (std::size_t k = 0; k < tree.entries.size(); ++k) {
      const TreeEntry& e = tree.entries[k];
      if (k) std::cout << ",";
      std::cout << "{\"t\":" << jnum(e.t) << ",\"n0\":" << e.n0
                << ",\"total_mass\":" << jnum(e.mass) << ",\"converged\":"
                << jbool(e.converged) << "}";
    }
    std::cout << "],\"plateau\":{\"n0\":" << plateau.n0 << ",\"t_lo\":" << jnum(plateau.t_lo)
              << ",\"t_hi\":" << jnum(plateau.t_hi) << ",\"length\":" << plateau.length
              << "}}\n";
  } else {
    if (P.out.empty()) {
      std::cout << "t,n0,total_mass\n";
      for (const TreeEntry& e : tree.entries)
        std::cout << io::format_double(e.t) << "," << e.n0 << ","
                  << io::format_double(e.mass) << "\n";
    }
    std::cout << "mode = " << mode << "\n";
    std::cout << "longest plateau: n0=" << plateau.n0 << " for t in ["
              << io::format_double(plateau.t_lo) << ", " << io::format_double(plateau.t_hi)
              << "] (" << plateau.length << " of " << tree.entries.size() << " scales)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Application assembly.

inline void attach_json_config(CLI::App* cmd, std::string& storage) {
  cmd->add_option("--config", storage, "JSON file with option defaults (flags override)");
}

inline int run_cli(int argc, const char* const* argv) {
  std::setlocale(LC_NUMERIC, "C");
  CLI::App app{"Hellinger-Kantorovich distances, barycenters, and scale-sweep trees"};
  app.require_subcommand(1);

  DistParams dist_p;
  CLI::App* dist = app.add_subcommand("dist", "HK distance between two measures");
  dist->add_option("inputs", dist_p.files, "two measure files (CSV atoms or JSON grid)")
      ->required()
      ->expected(2);
  dist->add_option("--grid", dist_p.grid,
                   "cells per dimension when rasterizing atom lists (default 256)")
      ->check(CLI::PositiveNumber);
  add_solver_flags(dist, dist_p.solver);
  dist->add_flag("--json", dist_p.json, "emit a single JSON object");
  attach_json_config(dist, dist_p.config);
  dist->callback([&dist_p, dist] {
    if (!dist_p.config.empty()) apply_json_config(dist, dist_p.config);
    cmd_dist(dist_p);
  });

  BaryParams bary_p;
  CLI::App* bary = app.add_subcommand("bary", "HK barycenter of N measures");
  bary->add_option("inputs", bary_p.files, "measure files (CSV atoms or JSON grid)")
      ->required()
      ->expected(-2);
  bary->add_option("--weights", bary_p.weights, "comma-separated weights (default uniform)");
  bary->add_flag("--exact", bary_p.exact, "force the exact Dirac route");
  bary->add_option("--grid", bary_p.grid,
                   "force the entropic route at this resolution (cells per dimension)")
      ->check(CLI::PositiveNumber);
  add_solver_flags(bary, bary_p.solver);
  bary->add_option("--out", bary_p.out, "output file (atoms CSV or grid JSON)");
  bary->add_flag("--pgm", bary_p.pgm, "also write an 8-bit PGM raster (2-d grids)");
  bary->add_flag("--json", bary_p.json, "emit a single JSON object");
  attach_json_config(bary, bary_p.config);
  bary->callback([&bary_p, bary] {
    if (!bary_p.config.empty()) apply_json_config(bary, bary_p.config);
    cmd_bary(bary_p, false);
  });

  BaryParams dirac_p;
  CLI::App* dirac = app.add_subcommand(
      "dirac", "exact Dirac barycenter with regime report (single/split/diffuse/far-product)");
  dirac->add_option("inputs", dirac_p.files, "single-atom CSV files")->required()->expected(
      -2);
  dirac->add_option("--weights", dirac_p.weights, "comma-separated weights (default uniform)");
  dirac->add_option("--out", dirac_p.out, "output atoms CSV");
  dirac->add_flag("--json", dirac_p.json, "emit a single JSON object");
  attach_json_config(dirac, dirac_p.config);
  dirac->callback([&dirac_p, dirac] {
    if (!dirac_p.config.empty()) apply_json_config(dirac, dirac_p.config);
    cmd_bary(dirac_p, true);
  });

  CmmParams cmm_p;
  CLI::App* cmm = app.add_subcommand(
      "cmm", "multi-marginal cost, hull decomposition, and dual membership");
  cmm->add_option("config", cmm_p.config_file,
                  "JSON file with positions, masses, weights, and optional psi")
      ->required();
  cmm->add_option("--tol", cmm_p.tol, "membership tolerance")->check(CLI::PositiveNumber);
  cmm->add_flag("--json", cmm_p.json, "emit a single JSON object");
  cmm->callback([&cmm_p] { cmd_cmm(cmm_p); });

  TreeParams tree_p;
  CLI::App* tree = app.add_subcommand("tree", "barycenter tree across length scales");
  tree->add_option("inputs", tree_p.files, "measure files (CSV atoms or JSON grids)")
      ->required()
      ->expected(-1);
  tree->add_option("--weights", tree_p.weights, "comma-separated weights (default uniform)");
  tree->add_option("--scales", tree_p.scales, "sweep spec tmin:tmax:num[:log|lin]")
      ->required();
  tree->add_option("--grid", tree_p.grid,
                   "entropic-route cells per dimension (default 256 in 1-d, 64 otherwise)")
      ->check(CLI::PositiveNumber);
  tree->add_option("--threshold", tree_p.threshold,
                   "component threshold as a fraction of the max cell value")
      ->check(CLI::Range(1e-12, 1.0));
  tree->add_option("--merge-radius", tree_p.merge_radius,
                   "component merge radius (grid cells, or distance in exact mode)");
  add_solver_flags(tree, tree_p.solver);
  tree->add_option("--out", tree_p.out, "output prefix for tree CSV and per-scale dumps");
  tree->add_flag("--json", tree_p.json, "emit a single JSON object");
  attach_json_config(tree, tree_p.config);
  tree->callback([&tree_p, tree] {
    if (!tree_p.config.empty()) apply_json_config(tree, tree_p.config);
    cmd_tree(tree_p);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const internal_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace hkb::cli
