// Measure containers: axis-aligned box domains, weighted point clouds
// (DiscreteMeasure), grid measures storing one mass value per grid node,
// and normalized weight vectors.  All types validate their invariants on
// construction and are immutable afterwards.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hkb/common.hpp"

namespace hkb {

// Axis-aligned box [lower_1, upper_1] x ... x [lower_d, upper_d].
class Domain {
 public:
  Domain(std::vector<double> lower, std::vector<double> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty() || lower_.size() != upper_.size())
      throw std::invalid_argument("Domain: lower/upper must be nonempty and of equal length");
    for (std::size_t k = 0; k < lower_.size(); ++k) {
      if (!(lower_[k] < upper_[k]))
        throw std::invalid_argument("Domain: lower[" + std::to_string(k) +
                                    "] must be strictly below upper[" + std::to_string(k) + "]");
      if (!std::isfinite(lower_[k]) || !std::isfinite(upper_[k]))
        throw std::invalid_argument("Domain: bounds must be finite");
    }
  }

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  bool contains(const std::vector<double>& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k)
      if (x[k] < lower_[k] - tol || x[k] > upper_[k] + tol) return false;
    return true;
  }

  double diameter() const {
    double s = 0.0;
    for (std::size_t k = 0; k < dim(); ++k) s += detail::sq(upper_[k] - lower_[k]);
    return std::sqrt(s);
  }

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_;
  }

 private:
  std::vector<double> lower_, upper_;
};

struct Atom {
  std::vector<double> position;
  double mass = 0.0;
};

// Finite nonnegative combination of Dirac masses inside a domain.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Domain domain, std::vector<Atom> atoms)
      : domain_(std::move(domain)), atoms_(std::move(atoms)) {
    for (const Atom& a : atoms_) {
      if (a.position.size() != domain_.dim())
        throw std::invalid_argument("DiscreteMeasure: atom position dimension mismatch");
      if (!(a.mass >= 0.0))
        throw std::invalid_argument("DiscreteMeasure: atom mass must be >= 0");
      for (double c : a.position)
        if (!std::isfinite(c))
          throw std::invalid_argument("DiscreteMeasure: atom position must be finite");
    }
  }

  const Domain& domain() const { return domain_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t dim() const { return domain_.dim(); }

 private:
  Domain domain_;
  std::vector<Atom> atoms_;
};

// Mass per grid node, row-major.  Node k along an axis with n nodes over
// [lo, hi] sits at lo + k*(hi-lo)/(n-1); the first and last node lie on the
// domain boundary.
class GridMeasure {
 public:
  GridMeasure(Domain domain, std::vector<std::size_t> shape, std::vector<double> values)
      : domain_(std::move(domain)), shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.size() != domain_.dim())
      throw std::invalid_argument("GridMeasure: shape rank must equal domain dimension");
    std::size_t n = 1;
    for (std::size_t s : shape_) {
      if (s < 2) throw std::invalid_argument("GridMeasure: shape entries must be >= 2");
      n *= s;
    }
    if (values_.size() != n)
      throw std::invalid_argument("GridMeasure: values size must equal product of shape");
    for (double v : values_)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("GridMeasure: values must be finite and >= 0");
  }

  const Domain& domain() const { return domain_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t dim() const { return domain_.dim(); }
  std::size_t size() const { return values_.size(); }

  // Position of the node with flattened row-major index `flat`.
  std::vector<double> node_position(std::size_t flat) const {
    std::vector<double> x(dim());
    for (std::size_t k = dim(); k-- > 0;) {
      std::size_t idx = flat % shape_[k];
      flat /= shape_[k];
      x[k] = domain_.lower()[k] +
             static_cast<double>(idx) * (domain_.upper()[k] - domain_.lower()[k]) /
                 static_cast<double>(shape_[k] - 1);
    }
    return x;
  }

  bool same_layout(const GridMeasure& o) const {
    return shape_ == o.shape_ && domain_ == o.domain_;
  }

 private:
  Domain domain_;
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

// Barycentric weights: each in (0,1), summing to 1 within 1e-12.
class Weights {
 public:
  explicit Weights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.size() < 2) throw std::invalid_argument("Weights: need at least two entries");
    double s = 0.0;
    for (double v : w_) {
      if (!(v > 0.0) || !(v < 1.0))
        throw std::invalid_argument("Weights: each entry must lie in (0,1)");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("Weights: entries must sum to 1 within 1e-12");
  }

  const std::vector<double>& values() const { return w_; }
  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }

 private:
  std::vector<double> w_;
};

inline double total_mass(const DiscreteMeasure& m) {
  double s = 0.0;
  for (const Atom& a : m.atoms()) s += a.mass;
  return s;
}

inline double total_mass(const GridMeasure& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s;
}

// Pushforward under x -> t*x; masses are unchanged, the domain box scales.
inline DiscreteMeasure dilate(const DiscreteMeasure& m, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("dilate: scale factor t must be > 0");
  std::vector<double> lo = m.domain().lower(), hi = m.domain().upper();
  for (double& v : lo) v *= t;
  for (double& v : hi) v *= t;
  std::vector<Atom> atoms = m.atoms();
  for (Atom& a : atoms)
    for (double& c : a.position) c *= t;
  return DiscreteMeasure(Domain(std::move(lo), std::move(hi)), std::move(atoms));
}

inline GridMeasure dilate(const GridMeasure& m, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("dilate: scale factor t must be > 0");
  std::vector<double> lo = m.domain().lower(), hi = m.domain().upper();
  for (double& v : lo) v *= t;
  for (double& v : hi) v *= t;
  return GridMeasure(Domain(std::move(lo), std::move(hi)), m.shape(), m.values());
}

// Deposit every atom's mass on its nearest grid node.  Total mass is
// preserved exactly (each atom contributes to exactly one node).
inline GridMeasure rasterize(const DiscreteMeasure& m, const std::vector<std::size_t>& shape) {
  if (shape.size() != m.dim())
    throw std::invalid_argument("rasterize: shape rank must equal measure dimension");
  for (std::size_t s : shape)
    if (s < 2) throw std::invalid_argument("rasterize: shape entries must be >= 2");
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  std::vector<double> values(n, 0.0);
  const Domain& dom = m.domain();
  for (const Atom& a : m.atoms()) {
    if (!dom.contains(a.position, 1e-12 * (1.0 + dom.diameter())))
      throw std::invalid_argument("rasterize: atom position outside the domain");
    std::size_t flat = 0;
    for (std::size_t k = 0; k < m.dim(); ++k) {
      double rel = (a.position[k] - dom.lower()[k]) / (dom.upper()[k] - dom.lower()[k]);
      long idx = std::lround(rel * static_cast<double>(shape[k] - 1));
      idx = std::clamp(idx, 0L, static_cast<long>(shape[k] - 1));
      flat = flat * shape[k] + static_cast<std::size_t>(idx);
    }
    values[flat] += a.mass;
  }
  return GridMeasure(dom, shape, std::move(values));
}

}  // namespace hkb
