#include "polydiff/grid.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <fstream>
#include <vector>

#include "polydiff/binfmt.hpp"

namespace polydiff {

namespace {

constexpr char kEigenCacheMagic[4] = {'P', 'D', 'E', 'C'};
constexpr std::uint32_t kEigenCacheVersion = 1;

int closed_nodes(const GridSpec& g, int axis) {
  if (g.dimension == 1 && axis == 1) return 1;
  return g.count[axis] + 2;
}

}  // namespace

GridSpec GridSpec::line(double len, int n) {
  GridSpec g;
  g.dimension = 1;
  g.length = {len, 1.0};
  g.count = {n, 1};
  g.validate();
  return g;
}

GridSpec GridSpec::rectangle(double lx, double ly, int nx, int ny) {
  GridSpec g;
  g.dimension = 2;
  g.length = {lx, ly};
  g.count = {nx, ny};
  g.validate();
  return g;
}

double GridSpec::cell_volume() const {
  return dimension == 1 ? spacing(0) : spacing(0) * spacing(1);
}

void GridSpec::validate() const {
  if (dimension != 1 && dimension != 2)
    throw Error("grid: dimension must be 1 or 2");
  for (int a = 0; a < dimension; ++a) {
    if (!(length[a] > 0.0) || !std::isfinite(length[a]))
      throw Error("grid: domain lengths must be positive and finite");
    if (count[a] < 2)
      throw Error("grid: need at least 2 interior nodes per axis");
  }
  if (dimension == 1 && count[1] != 1)
    throw Error("grid: 1D grids carry count[1] == 1");
}

DiscreteField::DiscreteField(GridSpec grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.total_nodes())
    throw Error("field: value count does not match the grid");
}

DiscreteField DiscreteField::zero(const GridSpec& grid) {
  return DiscreteField(grid, Eigen::VectorXd::Zero(grid.total_nodes()));
}

DiscreteField DiscreteField::from_function(
    const GridSpec& grid, const std::function<double(double, double)>& f) {
  Eigen::VectorXd v(grid.total_nodes());
  for (int iy = 0; iy < grid.count[1]; ++iy) {
    const double y = grid.dimension == 2 ? grid.coord(1, iy) : 0.0;
    for (int ix = 0; ix < grid.count[0]; ++ix)
      v[grid.node_index(ix, iy)] = f(grid.coord(0, ix), y);
  }
  return DiscreteField(grid, std::move(v));
}

bool DiscreteField::all_finite() const { return values_.allFinite(); }

double DiscreteField::max_abs() const {
  return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
}

void require_same_grid(const DiscreteField& a, const DiscreteField& b,
                       const char* where) {
  if (!(a.grid() == b.grid()))
    throw Error(std::string(where) + ": fields live on different grids");
}

ClosedField ClosedField::zero(const GridSpec& grid) {
  grid.validate();
  ClosedField c;
  c.grid_ = grid;
  c.values_ = Eigen::VectorXd::Zero(closed_nodes(grid, 0) * closed_nodes(grid, 1));
  return c;
}

ClosedField ClosedField::from_function(
    const GridSpec& grid, const std::function<double(double, double)>& f) {
  ClosedField c = zero(grid);
  const int mx = closed_nodes(grid, 0), my = closed_nodes(grid, 1);
  for (int iy = 0; iy < my; ++iy) {
    const double y = grid.dimension == 2 ? grid.spacing(1) * iy : 0.0;
    for (int ix = 0; ix < mx; ++ix)
      c.values_[ix + mx * iy] = f(grid.spacing(0) * ix, y);
  }
  return c;
}

ClosedField ClosedField::from_values(const GridSpec& grid,
                                     Eigen::VectorXd values) {
  grid.validate();
  const int expected = closed_nodes(grid, 0) * closed_nodes(grid, 1);
  if (values.size() != expected)
    throw Error("closed field: expected " + std::to_string(expected) +
                " closed-grid values, got " + std::to_string(values.size()));
  if (!values.allFinite()) throw Error("closed field: non-finite values");
  ClosedField c;
  c.grid_ = grid;
  c.values_ = std::move(values);
  return c;
}

double ClosedField::at(int ix, int iy) const {
  return values_[ix + closed_nodes(grid_, 0) * iy];
}

double& ClosedField::at(int ix, int iy) {
  return values_[ix + closed_nodes(grid_, 0) * iy];
}

DiscreteField ClosedField::interior() const {
  Eigen::VectorXd v(grid_.total_nodes());
  const int mx = closed_nodes(grid_, 0);
  for (int iy = 0; iy < grid_.count[1]; ++iy) {
    const int cy = grid_.dimension == 2 ? iy + 1 : 0;
    for (int ix = 0; ix < grid_.count[0]; ++ix)
      v[grid_.node_index(ix, iy)] = values_[(ix + 1) + mx * cy];
  }
  return DiscreteField(grid_, std::move(v));
}

DiscreteField ClosedField::laplacian_interior() const {
  Eigen::VectorXd v(grid_.total_nodes());
  const int mx = closed_nodes(grid_, 0);
  const double ihx2 = 1.0 / (grid_.spacing(0) * grid_.spacing(0));
  if (grid_.dimension == 1) {
    for (int ix = 0; ix < grid_.count[0]; ++ix) {
      const int c = ix + 1;
      v[ix] = (values_[c - 1] - 2.0 * values_[c] + values_[c + 1]) * ihx2;
    }
  } else {
    const double ihy2 = 1.0 / (grid_.spacing(1) * grid_.spacing(1));
    for (int iy = 0; iy < grid_.count[1]; ++iy) {
      const int cy = iy + 1;
      for (int ix = 0; ix < grid_.count[0]; ++ix) {
        const int c = (ix + 1) + mx * cy;
        v[grid_.node_index(ix, iy)] =
            (values_[c - 1] - 2.0 * values_[c] + values_[c + 1]) * ihx2 +
            (values_[c - mx] - 2.0 * values_[c] + values_[c + mx]) * ihy2;
      }
    }
  }
  return DiscreteField(grid_, std::move(v));
}

double ClosedField::max_abs() const {
  return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
}

namespace {

SparseMat assemble_laplacian(const GridSpec& g) {
  const int n = g.total_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (g.dimension == 1 ? 3 : 5));
  const double ihx2 = 1.0 / (g.spacing(0) * g.spacing(0));
  if (g.dimension == 1) {
    for (int i = 0; i < n; ++i) {
      trip.emplace_back(i, i, -2.0 * ihx2);
      if (i > 0) trip.emplace_back(i, i - 1, ihx2);
      if (i < n - 1) trip.emplace_back(i, i + 1, ihx2);
    }
  } else {
    const double ihy2 = 1.0 / (g.spacing(1) * g.spacing(1));
    for (int iy = 0; iy < g.count[1]; ++iy) {
      for (int ix = 0; ix < g.count[0]; ++ix) {
        const int k = g.node_index(ix, iy);
        trip.emplace_back(k, k, -2.0 * ihx2 - 2.0 * ihy2);
        if (ix > 0) trip.emplace_back(k, g.node_index(ix - 1, iy), ihx2);
        if (ix < g.count[0] - 1) trip.emplace_back(k, g.node_index(ix + 1, iy), ihx2);
        if (iy > 0) trip.emplace_back(k, g.node_index(ix, iy - 1), ihy2);
        if (iy < g.count[1] - 1) trip.emplace_back(k, g.node_index(ix, iy + 1), ihy2);
      }
    }
  }
  SparseMat m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

// Fixed sign convention so eigenvectors are reproducible: the entry of
// largest magnitude (first such on ties) is made positive.
void canonicalize_columns(Eigen::MatrixXd& q) {
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      const double a = std::abs(q(r, c));
      if (a > amax) {
        amax = a;
        imax = r;
      }
    }
    if (q(imax, c) < 0.0) q.col(c) = -q.col(c);
  }
}

}  // namespace

DiscreteOperators DiscreteOperators::build(const GridSpec& grid) {
  grid.validate();
  DiscreteOperators ops;
  ops.grid_ = grid;
  ops.lap_ = assemble_laplacian(grid);
  SparseMat neg = -ops.lap_;
  ops.neg_lap_solver_ = std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
  ops.neg_lap_solver_->compute(neg);
  if (ops.neg_lap_solver_->info() != Eigen::Success)
    throw Error("operators: Laplacian factorization failed");

  const Eigen::MatrixXd neg_dense(neg);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg_dense);
  if (eig.info() != Eigen::Success)
    throw Error("operators: eigendecomposition failed");
  ops.evals_ = eig.eigenvalues();
  ops.evecs_ = eig.eigenvectors();
  canonicalize_columns(ops.evecs_);
  if (ops.evals_[0] <= 0.0)
    throw Error("operators: nonpositive leading eigenvalue (assembly bug?)");
  return ops;
}

DiscreteOperators DiscreteOperators::build_with_cache(
    const GridSpec& grid, const std::string& cache_path) {
  grid.validate();
  {
    std::ifstream is(cache_path, std::ios::binary);
    if (is) {
      try {
        if (!binfmt::check_magic(is, kEigenCacheMagic))
          throw Error("eigen cache: bad magic");
        if (binfmt::get_u32(is) != kEigenCacheVersion)
          throw Error("eigen cache: unsupported version");
        GridSpec cached;
        cached.dimension = static_cast<int>(binfmt::get_u32(is));
        cached.count[0] = static_cast<int>(binfmt::get_u32(is));
        cached.count[1] = static_cast<int>(binfmt::get_u32(is));
        cached.length[0] = binfmt::get_f64(is);
        cached.length[1] = binfmt::get_f64(is);
        const int n = static_cast<int>(binfmt::get_u32(is));
        if (cached == grid && n == grid.total_nodes()) {
          DiscreteOperators ops;
          ops.grid_ = grid;
          ops.lap_ = assemble_laplacian(grid);
          SparseMat neg = -ops.lap_;
          ops.neg_lap_solver_ =
              std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
          ops.neg_lap_solver_->compute(neg);
          if (ops.neg_lap_solver_->info() != Eigen::Success)
            throw Error("operators: Laplacian factorization failed");
          ops.evals_.resize(n);
          for (int i = 0; i < n; ++i) ops.evals_[i] = binfmt::get_f64(is);
          ops.evecs_.resize(n, n);
          for (int c = 0; c < n; ++c)
            for (int r = 0; r < n; ++r) ops.evecs_(r, c) = binfmt::get_f64(is);
          if (!is) throw Error("eigen cache: truncated file");
          return ops;
        }
      } catch (const Error&) {
        // fall through to recompute; a stale or foreign cache is not fatal
      }
    }
  }
  DiscreteOperators ops = build(grid);
  ops.save_eigen_cache(cache_path);
  return ops;
}

bool DiscreteOperators::save_eigen_cache(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) return false;
  binfmt::put_magic(os, kEigenCacheMagic);
  binfmt::put_u32(os, kEigenCacheVersion);
  binfmt::put_u32(os, static_cast<std::uint32_t>(grid_.dimension));
  binfmt::put_u32(os, static_cast<std::uint32_t>(grid_.count[0]));
  binfmt::put_u32(os, static_cast<std::uint32_t>(grid_.count[1]));
  binfmt::put_f64(os, grid_.length[0]);
  binfmt::put_f64(os, grid_.length[1]);
  const int n = grid_.total_nodes();
  binfmt::put_u32(os, static_cast<std::uint32_t>(n));
  for (int i = 0; i < n; ++i) binfmt::put_f64(os, evals_[i]);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) binfmt::put_f64(os, evecs_(r, c));
  return static_cast<bool>(os);
}

DiscreteField DiscreteOperators::apply_laplacian(const DiscreteField& f) const {
  if (!(f.grid() == grid_))
    throw Error("apply_laplacian: field grid does not match the operators");
  return DiscreteField(grid_, lap_ * f.values());
}

DiscreteField DiscreteOperators::solve_laplacian(const DiscreteField& b) const {
  if (!(b.grid() == grid_))
    throw Error("solve_laplacian: field grid does not match the operators");
  // laplacian * x = b  <=>  (-laplacian) * x = -b, and -laplacian is SPD.
  Eigen::VectorXd x = neg_lap_solver_->solve(-b.values());
  if (neg_lap_solver_->info() != Eigen::Success)
    throw Error("solve_laplacian: factorization solve failed");
  return DiscreteField(grid_, std::move(x));
}

DiscreteField DiscreteOperators::eigenfield(int k, bool l2_normalized) const {
  if (k < 0 || k >= grid_.total_nodes())
    throw Error("eigenfield: index out of range");
  Eigen::VectorXd v = evecs_.col(k);
  if (l2_normalized) v /= std::sqrt(grid_.cell_volume());
  return DiscreteField(grid_, std::move(v));
}

Eigen::VectorXd DiscreteOperators::spectral_coefficients(
    const DiscreteField& f) const {
  if (!(f.grid() == grid_))
    throw Error("spectral_coefficients: field grid does not match");
  // Coefficients against the L2-orthonormal basis e_k / sqrt(w):
  // c_k = (f, e_k/sqrt(w))_{L2} = sqrt(w) * (Q^T f)_k.
  return std::sqrt(grid_.cell_volume()) * (evecs_.transpose() * f.values());
}

double inner_l2(const DiscreteField& a, const DiscreteField& b) {
  require_same_grid(a, b, "inner_l2");
  return a.grid().cell_volume() * a.values().dot(b.values());
}

double norm_l2(const DiscreteField& f) {
  return std::sqrt(f.grid().cell_volume()) * f.values().norm();
}

double norm_h1(const DiscreteField& f, const DiscreteOperators& ops) {
  const DiscreteField lf = ops.apply_laplacian(f);
  const double q = -inner_l2(f, lf);
  // q > 0 test (not max) so the zero field yields +0, not -0.
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

double inner_hm1(const DiscreteField& a, const DiscreteField& b,
                 const DiscreteOperators& ops) {
  require_same_grid(a, b, "inner_hm1");
  // (a,b)_{-1} = (lap^{-1}a, lap^{-1}b)_{H1} = -(lap^{-1}a, b).
  return -inner_l2(ops.solve_laplacian(a), b);
}

double norm_hm1(const DiscreteField& f, const DiscreteOperators& ops) {
  const double q = inner_hm1(f, f, ops);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

double norm_hmdelta(const DiscreteField& f, const DiscreteOperators& ops,
                    double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw Error("norm_hmdelta: delta must lie in (0, 1]");
  const Eigen::VectorXd c = ops.spectral_coefficients(f);
  double s = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k)
    s += std::pow(ops.eigenvalues()[k], -delta) * c[k] * c[k];
  return std::sqrt(s);
}

FrechetPrenorm frechet_prenorm(std::span<const double> interval_sups) {
  FrechetPrenorm out;
  double prev = 0.0;
  double scale = 0.5;  // 2^{-i}
  for (std::size_t i = 0; i < interval_sups.size(); ++i) {
    const double a = interval_sups[i];
    if (!(a >= 0.0) || !std::isfinite(a))
      throw Error("frechet_prenorm: sup norms must be finite and nonnegative");
    if (a < prev)
      throw Error("frechet_prenorm: interval sups must be nondecreasing");
    out.value += scale * a / (1.0 + a);
    out.tail_bound = scale;
    scale *= 0.5;
    prev = a;
  }
  return out;
}

}  // namespace polydiff
