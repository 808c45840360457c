#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpk/convex.hpp"
#include "fpk/error.hpp"
#include "fpk/space.hpp"

namespace fpk {

/// max_ratio above 1 + this certifies an expansive pair was found.
inline constexpr double kNonexpansiveTolerance = 1e-9;
/// min_pairing below -this certifies a monotonicity violation.
inline constexpr double kMonotoneTolerance = 1e-10;
/// Deviation tail above this flags a discontinuity along the probe ray.
inline constexpr double kHemicontinuityTolerance = 1e-6;

/// A self-map of a Space, built from closed-form pieces (affine, plane
/// rotation) and combinators (scaled, averaged, composed), or from a raw
/// callable. Values are immutable and cheap to copy.
class OperatorSpec {
 public:
  using Fn = std::function<Element(const Element&)>;

  static OperatorSpec identity(const Space& sp) {
    return make(sp, "identity", [](const Element& x) { return x; }, 1.0);
  }

  static OperatorSpec constant(Element value) {
    const Space sp = value.space;
    return make(
        sp, "constant",
        [v = std::move(value)](const Element&) { return v; }, 0.0);
  }

  /// x -> matrix*x + shift. The Lipschitz constant is the largest singular
  /// value of the matrix in the space's (possibly weighted) norm.
  static OperatorSpec affine(const Space& sp, Eigen::MatrixXd matrix, Element shift) {
    const auto d = static_cast<Eigen::Index>(sp.dim());
    if (matrix.rows() != d || matrix.cols() != d)
      throw DimensionError("affine: matrix must be dim x dim");
    if (shift.space != sp) throw DimensionError("affine: shift in wrong space");
    Eigen::VectorXd sw(d);
    for (Eigen::Index i = 0; i < d; ++i)
      sw(i) = std::sqrt(sp.weight(static_cast<std::size_t>(i)));
    const Eigen::MatrixXd weighted =
        sw.asDiagonal() * matrix * sw.cwiseInverse().asDiagonal();
    const double smax = Eigen::JacobiSVD<Eigen::MatrixXd>(weighted).singularValues()(0);
    return make(
        sp, "affine",
        [B = std::move(matrix), s = std::move(shift)](const Element& x) {
          Element y = s;
          for (Eigen::Index r = 0; r < B.rows(); ++r) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < B.cols(); ++c)
              acc += B(r, c) * x[static_cast<std::size_t>(c)];
            y[static_cast<std::size_t>(r)] += acc;
          }
          return y;
        },
        smax);
  }

  /// Rotation by `angle` in the (i, j) coordinate plane. Requires equal
  /// inner-product weights on i and j so the map stays an isometry.
  static OperatorSpec rotation(const Space& sp, double angle, std::size_t i = 0,
                               std::size_t j = 1) {
    if (i >= sp.dim() || j >= sp.dim() || i == j)
      throw PreconditionError("rotation: plane indices must be distinct and in range");
    if (sp.weight(i) != sp.weight(j))
      throw PreconditionError("rotation: coordinate weights differ, not an isometry");
    const double c = std::cos(angle), s = std::sin(angle);
    return make(
        sp, "rotation(theta=" + std::to_string(angle) + ")",
        [i, j, c, s](const Element& x) {
          Element y = x;
          y[i] = c * x[i] - s * x[j];
          y[j] = s * x[i] + c * x[j];
          return y;
        },
        1.0);
  }

  static OperatorSpec scaled(OperatorSpec inner, double factor) {
    if (!std::isfinite(factor)) throw PreconditionError("scaled: factor must be finite");
    std::optional<double> lip;
    if (inner.claimed_lipschitz())
      lip = std::abs(factor) * *inner.claimed_lipschitz();
    const Space sp = inner.space();
    std::string name = "scaled(" + inner.describe() + ", " + std::to_string(factor) + ")";
    Fn fn = [op = std::move(inner), factor](const Element& x) { return factor * op(x); };
    return make(sp, std::move(name), std::move(fn), lip);
  }

  /// (1 - weight) * first + weight * second, weight in [0, 1].
  static OperatorSpec averaged(OperatorSpec first, OperatorSpec second, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0))
      throw PreconditionError("averaged: weight must lie in [0, 1]");
    if (first.space() != second.space())
      throw DimensionError("averaged: operands act on different spaces");
    std::optional<double> lip;
    if (first.claimed_lipschitz() && second.claimed_lipschitz())
      lip = (1.0 - weight) * *first.claimed_lipschitz() +
            weight * *second.claimed_lipschitz();
    const Space sp = first.space();
    std::string name = "averaged(" + first.describe() + ", " + second.describe() +
                       ", w=" + std::to_string(weight) + ")";
    Fn fn = [a = std::move(first), b = std::move(second), weight](const Element& x) {
      return lincomb(1.0 - weight, a(x), weight, b(x));
    };
    return make(sp, std::move(name), std::move(fn), lip);
  }

  /// Pipeline: stages[0] is applied first, then stages[1], ...
  static OperatorSpec composed(std::vector<OperatorSpec> stages) {
    if (stages.empty()) throw PreconditionError("composed: need at least one stage");
    for (std::size_t k = 1; k < stages.size(); ++k)
      if (stages[k].space() != stages[0].space())
        throw DimensionError("composed: stages act on different spaces");
    std::optional<double> lip = 1.0;
    std::string name = "composed(";
    for (std::size_t k = 0; k < stages.size(); ++k) {
      if (lip && stages[k].claimed_lipschitz())
        lip = *lip * *stages[k].claimed_lipschitz();
      else
        lip.reset();
      name += (k ? ", " : "") + stages[k].describe();
    }
    name += ")";
    const Space sp = stages[0].space();
    return make(
        sp, std::move(name),
        [st = std::move(stages)](const Element& x) {
          Element y = x;
          for (const auto& op : st) y = op(y);
          return y;
        },
        lip);
  }

  static OperatorSpec custom(const Space& sp, std::string name, Fn fn,
                             std::optional<double> claimed_lipschitz = {}) {
    if (claimed_lipschitz && !(*claimed_lipschitz >= 0.0))
      throw PreconditionError("custom: claimed_lipschitz must be >= 0");
    return make(sp, std::move(name), std::move(fn), claimed_lipschitz);
  }

  Element operator()(const Element& x) const {
    if (x.space != impl_->space)
      throw DimensionError("OperatorSpec: argument in wrong space");
    Element y = impl_->fn(x);
    if (y.space != impl_->space)
      throw DimensionError("OperatorSpec: evaluation left the space");
    return y;
  }

  const Space& space() const { return impl_->space; }
  const std::optional<double>& claimed_lipschitz() const { return impl_->lip; }
  const std::string& describe() const { return impl_->name; }

  /// Same map with a caller-supplied Lipschitz claim.
  OperatorSpec with_claimed_lipschitz(double lip) const {
    if (!(lip >= 0.0))
      throw PreconditionError("with_claimed_lipschitz: claim must be >= 0");
    OperatorSpec out = *this;
    out.impl_ = std::make_shared<const Impl>(Impl{impl_->space, impl_->name,
                                                  impl_->fn, lip});
    return out;
  }

 private:
  struct Impl {
    Space space;
    std::string name;
    Fn fn;
    std::optional<double> lip;
  };

  static OperatorSpec make(const Space& sp, std::string name, Fn fn,
                           std::optional<double> lip) {
    OperatorSpec op;
    op.impl_ = std::make_shared<const Impl>(
        Impl{sp, std::move(name), std::move(fn), lip});
    return op;
  }

  OperatorSpec() = default;
  std::shared_ptr<const Impl> impl_;
};

/// L(x) = x - A(x), evaluated so that L(x) + A(x) reassembles x from the
/// same floating-point pieces. A raw variant exists for probe maps that are
/// not residuals of any A (step functions and the like).
class ResidualOperator {
 public:
  explicit ResidualOperator(OperatorSpec base)
      : base_(std::move(base)), space_(base_->space()),
        name_("residual(" + base_->describe() + ")") {}

  static ResidualOperator custom(const Space& sp, std::string name,
                                 OperatorSpec::Fn fn) {
    ResidualOperator r;
    r.space_ = sp;
    r.name_ = std::move(name);
    r.fn_ = std::move(fn);
    return r;
  }

  Element operator()(const Element& x) const {
    if (base_) return x - (*base_)(x);
    if (x.space != space_)
      throw DimensionError("ResidualOperator: argument in wrong space");
    Element y = fn_(x);
    if (y.space != space_)
      throw DimensionError("ResidualOperator: evaluation left the space");
    return y;
  }

  const Space& space() const { return space_; }
  const std::string& describe() const { return name_; }

  /// The underlying A when this L = I - A; nullptr for raw maps.
  const OperatorSpec* base() const { return base_ ? &*base_ : nullptr; }

 private:
  ResidualOperator() = default;
  std::optional<OperatorSpec> base_;
  Space space_;
  std::string name_;
  OperatorSpec::Fn fn_;
};

struct NonexpansiveReport {
  double max_ratio;     // max ||Ax - Ay|| / ||x - y|| over sampled pairs
  Element witness_x, witness_y;
  std::size_t pairs_used;
  std::uint64_t seed;
  bool violated;        // max_ratio > 1 + kNonexpansiveTolerance
};

struct MonotoneReport {
  double min_pairing;   // min <L(x) - L(y), x - y> over sampled pairs
  Element witness_x, witness_y;
  std::size_t pairs_used;
  std::uint64_t seed;
  bool violated;        // min_pairing < -kMonotoneTolerance
};

struct HemicontinuityReport {
  std::vector<double> t_values;
  std::vector<double> deviations;  // ||L(P_M(x + t d)) - L(x)||
  bool continuous;                 // tail deviation <= kHemicontinuityTolerance
};

/// Sampling falsifier for ||Ax - Ay|| <= ||x - y||: a ratio above
/// 1 + 1e-9 disproves non-expansiveness; a clean report is evidence only.
inline NonexpansiveReport check_nonexpansive(const OperatorSpec& A,
                                             const ConvexSet& M,
                                             std::size_t n_pairs,
                                             std::uint64_t seed) {
  if (n_pairs < 1) throw PreconditionError("check_nonexpansive: n_pairs must be >= 1");
  if (M.space() != A.space())
    throw DimensionError("check_nonexpansive: set and operator spaces differ");
  const auto pts = M.sample_points(2 * n_pairs, seed);
  double best = -1.0;
  std::size_t used = 0, bi = 0;
  for (std::size_t t = 0; t < n_pairs; ++t) {
    const Element& x = pts[2 * t];
    const Element& y = pts[2 * t + 1];
    const double d = distance(x, y);
    if (d == 0.0) continue;  // coincident pair carries no information
    const double ratio = distance(A(x), A(y)) / d;
    ++used;
    if (ratio > best) {
      best = ratio;
      bi = t;
    }
  }
  if (used == 0)
    throw SamplingError("check_nonexpansive: all sampled pairs coincide");
  return NonexpansiveReport{best, pts[2 * bi], pts[2 * bi + 1], used, seed,
                            best > 1.0 + kNonexpansiveTolerance};
}

/// Sampling falsifier for <L(x) - L(y), x - y> >= 0 over M.
inline MonotoneReport check_monotone(const ResidualOperator& L,
                                     const ConvexSet& M, std::size_t n_pairs,
                                     std::uint64_t seed) {
  if (n_pairs < 1) throw PreconditionError("check_monotone: n_pairs must be >= 1");
  if (M.space() != L.space())
    throw DimensionError("check_monotone: set and operator spaces differ");
  const auto pts = M.sample_points(2 * n_pairs, seed);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t bi = 0;
  for (std::size_t t = 0; t < n_pairs; ++t) {
    const Element& x = pts[2 * t];
    const Element& y = pts[2 * t + 1];
    const double pairing = inner(L(x) - L(y), x - y);
    if (pairing < worst) {
      worst = pairing;
      bi = t;
    }
  }
  return MonotoneReport{worst, pts[2 * bi], pts[2 * bi + 1], n_pairs, seed,
                        worst < -kMonotoneTolerance};
}

/// Probes t -> L(P_M(x + t * direction)) along a decreasing t sequence and
/// reports the deviation from L(x). A tail above 1e-6 flags a discontinuity.
inline HemicontinuityReport check_hemicontinuous(const ResidualOperator& L,
                                                 const ConvexSet& M,
                                                 const Element& x,
                                                 const Element& direction,
                                                 const std::vector<double>& t_sequence) {
  if (t_sequence.empty())
    throw PreconditionError("check_hemicontinuous: empty t sequence");
  for (std::size_t j = 0; j < t_sequence.size(); ++j) {
    if (!(t_sequence[j] > 0.0))
      throw PreconditionError("check_hemicontinuous: t values must be positive");
    if (j > 0 && !(t_sequence[j] < t_sequence[j - 1]))
      throw PreconditionError("check_hemicontinuous: t values must decrease");
  }
  if (!M.contains(x, 1e-9))
    throw PreconditionError("check_hemicontinuous: base point not in the set");
  const Element Lx = L(x);
  HemicontinuityReport rep;
  rep.t_values = t_sequence;
  rep.deviations.reserve(t_sequence.size());
  for (const double t : t_sequence) {
    const Element probe = M.project(lincomb(1.0, x, t, direction));
    rep.deviations.push_back(distance(L(probe), Lx));
  }
  rep.continuous = rep.deviations.back() <= kHemicontinuityTolerance;
  return rep;
}

}  // namespace fpk
