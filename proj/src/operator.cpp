#include "helidiff/operator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "helidiff/errors.hpp"

namespace helidiff {

OperatorField::OperatorField(int dim, UpperEval eval, UpperDeriv deriv, double fd_step)
    : dim_(dim),
      pairs_(static_cast<std::size_t>(dim) * (dim - 1) / 2),
      eval_(std::move(eval)),
      deriv_(std::move(deriv)),
      fd_step_(fd_step) {
  require(dim >= 2, "OperatorField: dimension must be at least 2");
  require(static_cast<bool>(eval_), "OperatorField: missing evaluator");
  require(fd_step > 0.0, "OperatorField: fd_step must be positive");
}

std::size_t OperatorField::pair_index(int i, int j) const {
  // Row i starts after sum_{r<i} (n - 1 - r) entries.
  const auto n = static_cast<std::size_t>(dim_);
  const auto ii = static_cast<std::size_t>(i);
  return ii * (2 * n - ii - 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

void OperatorField::eval_upper(std::span<const double> x, std::span<double> upper) const {
  require(static_cast<int>(x.size()) == dim_, "OperatorField: point dimension mismatch");
  eval_(x, upper);
}

void OperatorField::eval(std::span<const double> x, Matrix& out) const {
  require(static_cast<int>(x.size()) == dim_, "OperatorField: point dimension mismatch");
  std::array<double, 64> stack{};
  std::vector<double> heap;
  std::span<double> upper;
  if (pairs_ <= stack.size()) {
    upper = std::span<double>(stack.data(), pairs_);
  } else {
    heap.resize(pairs_);
    upper = heap;
  }
  eval_(x, upper);
  out.resize(dim_, dim_);
  std::size_t p = 0;
  for (int i = 0; i < dim_; ++i) {
    out(i, i) = 0.0;
    for (int j = i + 1; j < dim_; ++j, ++p) {
      out(i, j) = upper[p];
      out(j, i) = -upper[p];
    }
  }
}

Matrix OperatorField::eval(std::span<const double> x) const {
  Matrix m;
  eval(x, m);
  return m;
}

void OperatorField::deriv_upper(std::span<const double> x, std::span<double> dupper) const {
  require(static_cast<int>(x.size()) == dim_, "OperatorField: point dimension mismatch");
  require(dupper.size() == pairs_ * static_cast<std::size_t>(dim_), "OperatorField: derivative buffer size");
  if (deriv_) {
    deriv_(x, dupper);
    return;
  }
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> plus(pairs_), minus(pairs_);
  for (int m = 0; m < dim_; ++m) {
    const double x0 = xp[m];
    xp[m] = x0 + fd_step_;
    eval_(xp, plus);
    xp[m] = x0 - fd_step_;
    eval_(xp, minus);
    xp[m] = x0;
    for (std::size_t p = 0; p < pairs_; ++p) {
      dupper[m * pairs_ + p] = (plus[p] - minus[p]) / (2.0 * fd_step_);
    }
  }
}

std::vector<Matrix> OperatorField::deriv_all(std::span<const double> x) const {
  std::vector<double> d(pairs_ * static_cast<std::size_t>(dim_));
  deriv_upper(x, d);
  std::vector<Matrix> out(dim_, Matrix::Zero(dim_, dim_));
  for (int m = 0; m < dim_; ++m) {
    std::size_t p = 0;
    for (int i = 0; i < dim_; ++i) {
      for (int j = i + 1; j < dim_; ++j, ++p) {
        out[m](i, j) = d[m * pairs_ + p];
        out[m](j, i) = -d[m * pairs_ + p];
      }
    }
  }
  return out;
}

Matrix OperatorField::deriv(std::span<const double> x, int m) const {
  require(m >= 0 && m < dim_, "OperatorField: derivative index out of range");
  return deriv_all(x)[m];
}

Vector OperatorField::column_divergence(std::span<const double> x) const {
  const auto d = deriv_all(x);
  Vector a = Vector::Zero(dim_);
  for (int j = 0; j < dim_; ++j) {
    for (int i = 0; i < dim_; ++i) a[j] += d[i](i, j);
  }
  return a;
}

VectorField3::VectorField3(Eval eval, Jacobian jac, double fd_step)
    : eval_(std::move(eval)), jac_(std::move(jac)), fd_step_(fd_step) {
  require(static_cast<bool>(eval_), "VectorField3: missing evaluator");
  require(fd_step > 0.0, "VectorField3: fd_step must be positive");
}

Mat3 VectorField3::jacobian(const Vec3& x) const {
  if (jac_) return jac_(x);
  Mat3 m{};
  for (int j = 0; j < 3; ++j) {
    Vec3 xp = x, xm = x;
    xp[j] += fd_step_;
    xm[j] -= fd_step_;
    const Vec3 wp = eval_(xp), wm = eval_(xm);
    for (int i = 0; i < 3; ++i) m[i][j] = (wp[i] - wm[i]) / (2.0 * fd_step_);
  }
  return m;
}

Vec3 VectorField3::curl(const Vec3& x) const {
  const Mat3 d = jacobian(x);
  return {d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]};
}

OperatorField VectorField3::to_operator() const {
  // Upper pairs (x,y), (x,z), (y,z): J^{xy} = -w_z, J^{xz} = w_y, J^{yz} = -w_x.
  auto eval = [w = eval_](std::span<const double> x, std::span<double> upper) {
    const Vec3 v = w(Vec3{x[0], x[1], x[2]});
    upper[0] = -v[2];
    upper[1] = v[1];
    upper[2] = -v[0];
  };
  OperatorField::UpperDeriv deriv;
  if (jac_) {
    deriv = [jac = jac_](std::span<const double> x, std::span<double> d) {
      const Mat3 m = jac(Vec3{x[0], x[1], x[2]});
      for (int k = 0; k < 3; ++k) {
        d[3 * k + 0] = -m[2][k];
        d[3 * k + 1] = m[1][k];
        d[3 * k + 2] = -m[0][k];
      }
    };
  }
  return OperatorField(3, std::move(eval), std::move(deriv), fd_step_);
}

VectorField3 VectorField3::from_operator(const OperatorField& op) {
  require(op.dim() == 3, "VectorField3::from_operator: operator must be 3-dimensional");
  auto eval = [op](const Vec3& x) {
    std::array<double, 3> u{};
    op.eval_upper(as_span(x), u);
    return Vec3{-u[2], u[1], -u[0]};
  };
  Jacobian jac;
  if (op.has_analytic_deriv()) {
    jac = [op](const Vec3& x) {
      std::array<double, 9> d{};
      op.deriv_upper(as_span(x), d);
      Mat3 m{};
      for (int k = 0; k < 3; ++k) {
        m[0][k] = -d[3 * k + 2];
        m[1][k] = d[3 * k + 1];
        m[2][k] = -d[3 * k + 0];
      }
      return m;
    };
  }
  return VectorField3(std::move(eval), std::move(jac), op.fd_step());
}

Hamiltonian::Hamiltonian(int dim, Eval eval, Grad grad, double fd_step)
    : dim_(dim), eval_(std::move(eval)), grad_(std::move(grad)), fd_step_(fd_step) {
  require(dim >= 1, "Hamiltonian: dimension must be positive");
  require(static_cast<bool>(eval_), "Hamiltonian: missing evaluator");
}

void Hamiltonian::gradient(std::span<const double> x, std::span<double> out) const {
  require(static_cast<int>(x.size()) == dim_ && static_cast<int>(out.size()) == dim_,
          "Hamiltonian: dimension mismatch");
  if (grad_) {
    grad_(x, out);
    return;
  }
  std::array<double, 16> buf{};
  std::vector<double> heap;
  std::span<double> xp;
  if (x.size() <= buf.size()) {
    xp = std::span<double>(buf.data(), x.size());
  } else {
    heap.resize(x.size());
    xp = heap;
  }
  std::copy(x.begin(), x.end(), xp.begin());
  for (int m = 0; m < dim_; ++m) {
    const double x0 = xp[m];
    xp[m] = x0 + fd_step_;
    const double fp = eval_(xp);
    xp[m] = x0 - fd_step_;
    const double fm = eval_(xp);
    xp[m] = x0;
    out[m] = (fp - fm) / (2.0 * fd_step_);
  }
}

Vector Hamiltonian::gradient(std::span<const double> x) const {
  Vector g(dim_);
  gradient(x, std::span<double>(g.data(), dim_));
  return g;
}

CoordinateMap CoordinateMap::identity(int dim) {
  return CoordinateMap(dim, true, [dim](std::span<const double>, Matrix& r) { r = Matrix::Identity(dim, dim); });
}

CoordinateMap CoordinateMap::diagonal(std::vector<double> scales) {
  const int n = static_cast<int>(scales.size());
  require(n >= 1, "CoordinateMap::diagonal: empty scale list");
  for (double s : scales) {
    if (!(std::abs(s) > 1e-12)) throw ContractViolation("CoordinateMap::diagonal: singular scale");
  }
  return CoordinateMap(n, false, [scales = std::move(scales), n](std::span<const double>, Matrix& r) {
    r = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) r(i, i) = scales[i];
  });
}

CoordinateMap CoordinateMap::general(int dim, JacobianFn fn) {
  require(static_cast<bool>(fn), "CoordinateMap::general: missing Jacobian");
  return CoordinateMap(dim, false, std::move(fn));
}

void CoordinateMap::jacobian(std::span<const double> x, Matrix& out) const {
  fn_(x, out);
  require(out.rows() == dim_ && out.cols() == dim_, "CoordinateMap: Jacobian has wrong shape");
  if (!identity_ && !(std::abs(out.determinant()) > 1e-12)) {
    throw ContractViolation("CoordinateMap: Jacobian is not invertible at the evaluation point");
  }
}

Matrix CoordinateMap::jacobian(std::span<const double> x) const {
  Matrix r;
  jacobian(x, r);
  return r;
}

Vector operator_apply(const OperatorField& op, std::span<const double> x, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != op.dim()) {
    throw ContractViolation("operator_apply: covector has dimension " + std::to_string(theta.size()) +
                            ", operator has dimension " + std::to_string(op.dim()));
  }
  const Matrix j = op.eval(x);
  Vector v = Vector::Zero(op.dim());
  for (int i = 0; i < op.dim(); ++i) {
    for (int k = 0; k < op.dim(); ++k) v[i] += j(i, k) * theta[k];
  }
  return v;
}

Vec3 operator_apply(const VectorField3& w, const Vec3& x, const Vec3& theta) { return cross(w(x), theta); }

Vector fd_gradient(const ScalarField& f, std::span<const double> x, double step) {
  std::vector<double> xp(x.begin(), x.end());
  Vector g(static_cast<Eigen::Index>(x.size()));
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double x0 = xp[m];
    xp[m] = x0 + step;
    const double fp = f(xp);
    xp[m] = x0 - step;
    const double fm = f(xp);
    xp[m] = x0;
    g[static_cast<Eigen::Index>(m)] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace helidiff
