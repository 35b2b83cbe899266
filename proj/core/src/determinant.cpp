#include "sdeflow/determinant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdeflow {

namespace {

void require_square(const DenseMatrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << what << " must be square, got " << a.rows() << "x" << a.cols();
    throw PreconditionError(os.str());
  }
}

void require_same_size(const DenseMatrix& a, const DenseMatrix& b) {
  require_square(a, "A");
  require_square(b, "B");
  if (a.rows() != b.rows()) throw PreconditionError("A and B must have equal size");
}

double det_of(const DenseMatrix& m) { return m.rows() == 0 ? 1.0 : m.determinant(); }

// A with the listed rows and columns removed (each list sorted ascending).
DenseMatrix strike(const DenseMatrix& a, std::initializer_list<int> rows,
                   std::initializer_list<int> cols) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> keep_r, keep_c;
  for (int i = 0; i < n; ++i) {
    if (std::find(rows.begin(), rows.end(), i) == rows.end()) keep_r.push_back(i);
    if (std::find(cols.begin(), cols.end(), i) == cols.end()) keep_c.push_back(i);
  }
  DenseMatrix out(keep_r.size(), keep_c.size());
  for (std::size_t i = 0; i < keep_r.size(); ++i) {
    for (std::size_t j = 0; j < keep_c.size(); ++j) out(i, j) = a(keep_r[i], keep_c[j]);
  }
  return out;
}

int sign(int x) { return (x > 0) - (x < 0); }

double quadratic_form(const DenseMatrix& hess, const DenseMatrix& v) {
  // Hessian rows are indexed i*d + j (row-major), so flatten V row-major.
  const DenseMatrix vt = v.transpose();
  const Eigen::Map<const Eigen::VectorXd> flat(vt.data(), vt.size());
  return flat.dot(hess * flat);
}

}  // namespace

DenseMatrix cofactor_matrix(const DenseMatrix& a) {
  require_square(a, "A");
  const int n = static_cast<int>(a.rows());
  DenseMatrix cof(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double minor = det_of(strike(a, {i}, {j}));
      cof(i, j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor;
    }
  }
  return cof;
}

DenseMatrix det_gradient(const DenseMatrix& a) { return cofactor_matrix(a); }

DenseMatrix det_hessian_fd(const DenseMatrix& a) {
  require_square(a, "A");
  const int n = static_cast<int>(a.rows());
  const int m = n * n;
  const double h = 1e-4 * (1.0 + a.norm());
  DenseMatrix hess(m, m);
  DenseMatrix work = a;
  auto f = [&](int e1, double s1, int e2, double s2) {
    work = a;
    work(e1 / n, e1 % n) += s1 * h;
    work(e2 / n, e2 % n) += s2 * h;
    return det_of(work);
  };
  for (int e1 = 0; e1 < m; ++e1) {
    for (int e2 = e1; e2 < m; ++e2) {
      const double v =
          (f(e1, 1, e2, 1) - f(e1, 1, e2, -1) - f(e1, -1, e2, 1) + f(e1, -1, e2, -1)) /
          (4.0 * h * h);
      hess(e1, e2) = v;
      hess(e2, e1) = v;
    }
  }
  return hess;
}

DenseMatrix det_hessian_analytic(const DenseMatrix& a) {
  require_square(a, "A");
  const int n = static_cast<int>(a.rows());
  DenseMatrix hess = DenseMatrix::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          if (i == k || j == l) continue;
          const double minor = det_of(strike(a, {std::min(i, k), std::max(i, k)},
                                             {std::min(j, l), std::max(j, l)}));
          const double parity = ((i + j + k + l) % 2 == 0) ? 1.0 : -1.0;
          hess(i * n + j, k * n + l) = parity * sign(k - i) * sign(l - j) * minor;
        }
      }
    }
  }
  return hess;
}

double IdentitySides::deviation() const {
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
}

IdentitySides first_order_identity(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_size(a, b);
  const DenseMatrix grad = det_gradient(a);
  const DenseMatrix ba = b * a;
  return {grad.cwiseProduct(ba).sum(), det_of(a) * b.trace()};
}

IdentitySides second_order_identity(const DenseMatrix& a, const DenseMatrix& b,
                                    HessianMethod method) {
  require_same_size(a, b);
  const DenseMatrix hess = method == HessianMethod::kFiniteDifference ? det_hessian_fd(a)
                                                                       : det_hessian_analytic(a);
  const DenseMatrix ba = b * a;
  const double tr = b.trace();
  return {quadratic_form(hess, ba), (tr * tr - (b * b).trace()) * det_of(a)};
}

double liouville_consistency(const Mat& jac, double bv, double mart) {
  const double det = jac.determinant();
  if (!(det > 0.0)) {
    std::ostringstream os;
    os << "liouville consistency needs det(J) > 0, got " << det;
    throw DeterminantSignError(os.str());
  }
  const double expected = std::exp(bv + mart);
  return std::abs(det - expected) / expected;
}

DenseMatrix random_test_matrix(Engine& engine, int d) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  DenseMatrix m(d, d);
  do {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = unit(engine);
    }
  } while (std::abs(det_of(m)) < 1e-3);
  return m;
}

std::vector<IdentityCheck> run_identity_suite(std::uint64_t seed, int trials, int d_min,
                                              int d_max) {
  constexpr double kGradientTol = 1e-6;
  constexpr double kFirstTol = 1e-8;
  constexpr double kSecondTol = 1e-5;

  Engine engine = make_engine(seed, 0, StreamTag::kInitial);
  std::vector<IdentityCheck> rows;
  for (int d = d_min; d <= d_max; ++d) {
    IdentityCheck grad{"gradient", d, trials, 0.0, kGradientTol, false};
    IdentityCheck first{"first_order", d, trials, 0.0, kFirstTol, false};
    IdentityCheck second{"second_order", d, trials, 0.0, kSecondTol, false};
    for (int t = 0; t < trials; ++t) {
      const DenseMatrix a = random_test_matrix(engine, d);
      const DenseMatrix b = random_test_matrix(engine, d);

      // Central differences of det are exact up to rounding: det is affine
      // in each entry.
      const DenseMatrix analytic = det_gradient(a);
      const double h = 1e-5;
      double worst = 0.0;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          DenseMatrix ap = a, am = a;
          ap(i, j) += h;
          am(i, j) -= h;
          const double fd = (ap.determinant() - am.determinant()) / (2.0 * h);
          worst = std::max(worst, std::abs(fd - analytic(i, j)) /
                                      std::max(1.0, std::abs(analytic(i, j))));
        }
      }
      grad.max_deviation = std::max(grad.max_deviation, worst);
      first.max_deviation = std::max(first.max_deviation, first_order_identity(a, b).deviation());
      second.max_deviation =
          std::max(second.max_deviation, second_order_identity(a, b).deviation());
    }
    for (auto* row : {&grad, &first, &second}) {
      row->pass = row->max_deviation <= row->tolerance;
      rows.push_back(*row);
    }
  }
  return rows;
}

}  // namespace sdeflow
