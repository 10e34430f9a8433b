#pragma once

#include "kvdpc/error.hpp"
#include "kvdpc/linalg.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace kvdpc {

/// H-polytope {v : A v <= b}. Rows are scaled to unit norm on construction;
/// rows with a zero normal are dropped when b >= 0 and kept (as an
/// infeasibility marker) when b < 0.
class Polytope
{
public:
  Polytope() = default;
  Polytope(Mat A, Vec b);

  static Polytope box(const Vec & lo, const Vec & hi);
  /// {v : |v_i| <= bound_i}
  static Polytope symmetric_box(const Vec & bound);
  static Polytope full_space(Eigen::Index dim);

  Eigen::Index dim() const { return A_.cols(); }
  Eigen::Index rows() const { return A_.rows(); }
  const Mat & A() const { return A_; }
  const Vec & b() const { return b_; }

  /// max_i (a_i v - b_i); <= 0 inside.
  double max_violation(const Vec & v) const;
  bool contains(const Vec & v, double tol = 1e-9) const { return max_violation(v) <= tol; }

  Polytope intersect(const Polytope & other) const;
  /// {v : A (v + shift) <= b}, i.e. the set expressed relative to `shift`.
  Polytope translated(const Vec & shift) const;
  /// {v : A v <= factor * b}
  Polytope scaled(double factor) const;

  /// max over the set of dir . v; nullopt when unbounded. Throws on empty sets.
  std::optional<double> support(const Vec & dir) const;
  bool is_empty() const;
  /// Largest inscribed ball, radius capped at 1e6 for unbounded sets; radius < 0 means empty.
  std::pair<Vec, double> chebyshev_ball() const;
  bool subset_of(const Polytope & other, double tol = 1e-9) const;

  /// Vertex enumeration by intersecting every dim-tuple of facets; intended
  /// for the small dimensions used here (<= 3).
  std::vector<Vec> vertices(double tol = 1e-9) const;

  /// Rows sorted lexicographically by (a, b).
  Polytope sorted() const;

private:
  Mat A_;
  Vec b_;
};

Polytope polytope_pre(const Mat & A_cl, const Polytope & p);

/// Removes duplicate and redundant rows (LP certificate per row) and sorts.
Polytope polytope_reduce(const Polytope & p);

struct InvariantSetOptions
{
  int max_iters = 100;
  double tol = 1e-9;
};

struct InvariantSetResult
{
  Polytope set;
  int iterations = 0;
};

class InvariantSetError : public SolverError
{
public:
  InvariantSetError(const std::string & what, Polytope last) : SolverError(what), last_(std::move(last)) {}
  const Polytope & last_iterate() const { return last_; }

private:
  Polytope last_;
};

/// Maximal positively invariant subset of Z ∩ {v : K v ∈ dU} under v+ = A_cl v.
InvariantSetResult max_invariant_set(
  const Mat & A_cl, const Mat & K, const Polytope & Z, const Polytope & dU, const InvariantSetOptions & opts = {});

/// Euclidean distance from a point to a polytope (0 inside).
double distance_to(const Polytope & p, const Vec & v);
double hausdorff_distance(const Polytope & a, const Polytope & b);
double diameter(const Polytope & p);

/// `a1,...,ad,b` per row.
void write_halfspaces_csv(std::ostream & os, const Polytope & p);
/// `v1,...,vd` per vertex.
void write_vertices_csv(std::ostream & os, const Polytope & p);

}  // namespace kvdpc
