#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "polydiff/errors.hpp"

namespace polydiff {

using SparseMat = Eigen::SparseMatrix<double>;

/// Uniform tensor grid on the open interval (0,Lx) or rectangle (0,Lx)x(0,Ly).
/// Only interior nodes are stored; boundary nodes carry homogeneous Dirichlet
/// values and never appear in a DiscreteField. Spacing along an axis is
/// L/(count+1), so interior node i sits at (i+1)*h.
struct GridSpec {
  int dimension = 1;
  std::array<double, 2> length{1.0, 1.0};
  std::array<int, 2> count{0, 1};  // interior nodes per axis; count[1]==1 in 1D

  static GridSpec line(double len, int n);
  static GridSpec rectangle(double lx, double ly, int nx, int ny);

  double spacing(int axis) const { return length[axis] / (count[axis] + 1); }
  int total_nodes() const { return count[0] * count[1]; }
  double cell_volume() const;
  /// Coordinate of interior node `index` along `axis` (index from 0).
  double coord(int axis, int index) const { return spacing(axis) * (index + 1); }
  /// Linear index of an interior node; x runs fastest.
  int node_index(int ix, int iy) const { return ix + count[0] * iy; }

  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

/// Values at the interior nodes of one grid.
class DiscreteField {
 public:
  DiscreteField() = default;
  DiscreteField(GridSpec grid, Eigen::VectorXd values);
  static DiscreteField zero(const GridSpec& grid);
  static DiscreteField from_function(
      const GridSpec& grid, const std::function<double(double, double)>& f);

  const GridSpec& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  bool all_finite() const;
  double max_abs() const;

 private:
  GridSpec grid_;
  Eigen::VectorXd values_;
};

void require_same_grid(const DiscreteField& a, const DiscreteField& b,
                       const char* where);

/// Values on the closed grid (boundary nodes included). Used for boundary
/// lifts, which are nonzero on the boundary. 1D layout: index 0..n+1 at
/// coordinates i*h. 2D layout: ix + (nx+2)*iy.
class ClosedField {
 public:
  ClosedField() = default;
  static ClosedField zero(const GridSpec& grid);
  static ClosedField from_function(
      const GridSpec& grid, const std::function<double(double, double)>& f);
  static ClosedField from_values(const GridSpec& grid, Eigen::VectorXd values);

  const GridSpec& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  double at(int ix, int iy = 0) const;
  double& at(int ix, int iy = 0);
  /// Restriction to the interior nodes.
  DiscreteField interior() const;
  /// Second-order centered Laplacian at the interior nodes, using the stored
  /// boundary values in the stencil.
  DiscreteField laplacian_interior() const;
  double max_abs() const;
  int closed_count(int axis) const { return grid_.count[axis] + (grid_.dimension > 1 || axis == 0 ? 2 : 0); }

 private:
  GridSpec grid_;
  Eigen::VectorXd values_;
};

/// Assembled discrete calculus for one grid: the sparse Dirichlet Laplacian
/// (negative definite), its factorization for Poisson solves, and the full
/// eigendecomposition of -Laplacian used by the spectral norms. Immutable
/// after construction and safe to share across threads. Move-only.
class DiscreteOperators {
 public:
  static DiscreteOperators build(const GridSpec& grid);
  /// Like build(), but first tries to load the eigendata from `cache_path`
  /// (validated against the grid signature); on miss it computes and saves.
  static DiscreteOperators build_with_cache(const GridSpec& grid,
                                            const std::string& cache_path);

  DiscreteOperators(DiscreteOperators&&) noexcept = default;
  DiscreteOperators& operator=(DiscreteOperators&&) noexcept = default;
  DiscreteOperators(const DiscreteOperators&) = delete;
  DiscreteOperators& operator=(const DiscreteOperators&) = delete;

  const GridSpec& grid() const { return grid_; }
  /// The (negative definite) Laplacian matrix.
  const SparseMat& laplacian() const { return lap_; }
  DiscreteField apply_laplacian(const DiscreteField& f) const;
  /// Solves laplacian * x = b (homogeneous Dirichlet Poisson problem).
  DiscreteField solve_laplacian(const DiscreteField& b) const;

  /// Eigenvalues of -Laplacian, ascending (all positive).
  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  /// Matching eigenvectors, Euclidean-orthonormal columns with a fixed sign
  /// convention (largest-magnitude entry positive).
  const Eigen::MatrixXd& eigenvectors() const { return evecs_; }
  double lambda1() const { return evals_[0]; }
  /// Sharp discrete Poincare/Friedrichs constant: ||u|| <= K ||u||_{H1}.
  double friedrichs_constant() const { return 1.0 / std::sqrt(evals_[0]); }
  /// k-th eigenfield (k from 0), L2-normalized by default.
  DiscreteField eigenfield(int k, bool l2_normalized = true) const;
  /// Coefficients of f in the L2-orthonormalized eigenbasis.
  Eigen::VectorXd spectral_coefficients(const DiscreteField& f) const;

  bool save_eigen_cache(const std::string& path) const;

 private:
  DiscreteOperators() = default;

  GridSpec grid_;
  SparseMat lap_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMat>> neg_lap_solver_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
};

/// Cell-volume-weighted inner product and norms of the discrete spaces.
double inner_l2(const DiscreteField& a, const DiscreteField& b);
double norm_l2(const DiscreteField& f);
/// Discrete H1_0 seminorm (= norm under homogeneous Dirichlet data):
/// sqrt((f, -laplacian f)).
double norm_h1(const DiscreteField& f, const DiscreteOperators& ops);
/// Dual-space inner product (a,b)_{-1} = -(laplacian^{-1} a, b).
double inner_hm1(const DiscreteField& a, const DiscreteField& b,
                 const DiscreteOperators& ops);
/// Negative-order norm via the Poisson solve; equals the delta=1 spectral norm.
double norm_hm1(const DiscreteField& f, const DiscreteOperators& ops);
/// Spectral norm of order -delta, delta in (0,1]:
/// (sum_k lambda_k^{-delta} c_k^2)^{1/2} over L2-orthonormal eigenfields.
double norm_hmdelta(const DiscreteField& f, const DiscreteOperators& ops,
                    double delta);

struct FrechetPrenorm {
  double value = 0.0;
  double tail_bound = 0.0;  // 2^{-I}, the truncation error bound
};

/// Truncated Frechet-style pre-norm sum_{i=1..I} 2^{-i} a_i/(1+a_i) for a
/// nondecreasing sequence of per-interval sup norms a_i = sup over [0,i].
/// Raises on a decreasing or negative input sequence.
FrechetPrenorm frechet_prenorm(std::span<const double> interval_sups);

}  // namespace polydiff
