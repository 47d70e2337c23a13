#include "fimopt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"

namespace fimopt {

namespace {

using Rows = std::vector<std::vector<double>>;

// Householder reduction to tridiagonal form. On exit v holds the orthogonal
// transform, d the diagonal and e the sub-diagonal (e[0] = 0).
void tridiagonalize(Rows& v, Vector& d, Vector& e) {
  const int n = static_cast<int>(v.size());
  for (int j = 0; j < n; ++j) d[j] = v[n - 1][j];

  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v[i - 1][j];
        v[i][j] = 0.0;
        v[j][i] = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;

      for (int j = 0; j < i; ++j) {
        f = d[j];
        v[j][i] = f;
        g = e[j] + v[j][j] * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v[k][j] * d[k];
          e[k] += v[k][j] * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v[k][j] -= (f * e[k] + g * d[k]);
        d[j] = v[i - 1][j];
        v[i][j] = 0.0;
      }
    }
    d[i] = h;
  }

  // Accumulate the transformations.
  for (int i = 0; i < n - 1; ++i) {
    v[n - 1][i] = v[i][i];
    v[i][i] = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (int k = 0; k <= i; ++k) d[k] = v[k][i + 1] / h;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int k = 0; k <= i; ++k) g += v[k][i + 1] * v[k][j];
        for (int k = 0; k <= i; ++k) v[k][j] -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v[k][i + 1] = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v[n - 1][j];
    v[n - 1][j] = 0.0;
  }
  v[n - 1][n - 1] = 1.0;
  e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e), rotating v alongside.
void tridiagonal_ql(Rows& v, Vector& d, Vector& e) {
  const int n = static_cast<int>(v.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  constexpr int kMaxIter = 100;

  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    int m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxIter) throw NumericError("sym_eig: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (int k = 0; k < n; ++k) {
            h = v[k][i + 1];
            v[k][i + 1] = s * v[k][i] + c * h;
            v[k][i] = c * v[k][i] - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

void normalize_sign(std::span<double> column) {
  double peak = 0.0;
  for (double x : column) peak = std::max(peak, std::abs(x));
  for (double x : column) {
    if (std::abs(x) > 1e-12 * peak) {
      if (x < 0) {
        for (double& y : column) y = -y;
      }
      return;
    }
  }
}

}  // namespace

SymEigen sym_eig(const Matrix& m, std::optional<std::size_t> k) {
  if (!m.is_square()) throw DimensionError("sym_eig: matrix not square");
  if (!all_finite(m)) throw NumericError("sym_eig: non-finite entries");
  const std::size_t n = m.rows();
  const std::size_t keep = k.value_or(n);
  if (keep > n) throw DimensionError("sym_eig: k exceeds matrix size");
  if (n == 0) return {};
  const double scale = std::max(1.0, max_abs(m));
  if (asymmetry(m) > 1e-8 * scale) {
    throw PreconditionError("sym_eig: input not symmetric within 1e-8");
  }

  const Matrix sym = symmetrized(m);
  Rows v(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) v[i][j] = sym(i, j);
  Vector d(n);
  Vector e(n);
  tridiagonalize(v, d, e);
  tridiagonal_ql(v, d, e);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });

  SymEigen out{Matrix(n, keep), Vector(keep)};
  for (std::size_t c = 0; c < keep; ++c) {
    const std::size_t src = order[c];
    out.values[c] = d[src];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, c) = v[i][src];
    normalize_sign(out.vectors.col(c));
  }
  return out;
}

QrResult householder_qr(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix r = a;
  Matrix q = Matrix::identity(m);
  const std::size_t steps = std::min(m > 0 ? m - 1 : 0, n);
  Vector v(m);

  for (std::size_t k = 0; k < steps; ++k) {
    double xnorm = 0.0;
    for (std::size_t i = k; i < m; ++i) xnorm += r(i, k) * r(i, k);
    xnorm = std::sqrt(xnorm);
    if (xnorm == 0.0) continue;

    const double alpha = r(k, k) >= 0 ? -xnorm : xnorm;
    for (std::size_t i = k; i < m; ++i) v[i] = r(i, k);
    v[k] -= alpha;
    double vnorm = 0.0;
    for (std::size_t i = k; i < m; ++i) vnorm += v[i] * v[i];
    vnorm = std::sqrt(vnorm);
    if (vnorm == 0.0) continue;
    for (std::size_t i = k; i < m; ++i) v[i] /= vnorm;

    // R ← H·R on rows k..m.
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i] * r(i, j);
      s *= 2.0;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i];
    }
    // Q ← Q·H on columns k..m.
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t c = k; c < m; ++c) s += q(i, c) * v[c];
      s *= 2.0;
      for (std::size_t c = k; c < m; ++c) q(i, c) -= s * v[c];
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = j + 1; i < m; ++i) r(i, j) = 0.0;
  return {std::move(q), std::move(r)};
}

Matrix orthonormal_basis(const Matrix& a) {
  if (a.cols() > a.rows()) throw DimensionError("orthonormal_basis: more columns than rows");
  return householder_qr(a).q.cols_range(0, a.cols());
}

double orthonormality_error(const Matrix& u) {
  Matrix gram = kernels::gram_cols(u);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) -= 1.0;
  return max_abs(gram);
}

Matrix qr_complement(const Matrix& u) {
  const std::size_t m = u.rows();
  const std::size_t r = u.cols();
  if (r >= m) {
    throw DimensionError("qr_complement: need r < m, got r=" + std::to_string(r) +
                         " m=" + std::to_string(m));
  }
  if (orthonormality_error(u) > 1e-8) {
    throw PreconditionError("qr_complement: input columns are not orthonormal");
  }
  Matrix q = householder_qr(u).q;
  return q.cols_range(r, m - r);
}

std::optional<Matrix> cholesky(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("cholesky: matrix not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) return std::nullopt;
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

NewtonSchulzResult newton_schulz(const Matrix& a, int steps) {
  if (!a.is_square()) throw DimensionError("newton_schulz: matrix not square");
  if (steps < 1) throw ConfigError("newton_schulz: steps must be >= 1");
  if (!all_finite(a)) throw NumericError("newton_schulz: non-finite entries");
  if (asymmetry(a) > 1e-8 * std::max(1.0, max_abs(a))) {
    throw NumericError("newton_schulz: input not symmetric");
  }
  const Matrix sym = symmetrized(a);
  if (!cholesky(sym)) throw NumericError("newton_schulz: input is not positive definite");

  const std::size_t n = sym.rows();
  const double norm = frobenius_norm(sym);
  Matrix y = sym * (1.0 / norm);
  Matrix z = Matrix::identity(n);

  NewtonSchulzResult out;
  {
    const SymEigen eig = sym_eig(y);
    double dist = 0.0;
    for (double lambda : eig.values) dist = std::max(dist, std::abs(1.0 - lambda));
    out.convergence_warning = dist >= 1.0;
  }

  const Matrix three = Matrix::identity(n) * 3.0;
  for (int t = 0; t < steps; ++t) {
    const Matrix step = (three - kernels::matmul(z, y)) * 0.5;
    y = kernels::matmul(y, step);
    z = kernels::matmul(step, z);
  }
  const double root = std::sqrt(norm);
  out.inv_sqrt = z * (1.0 / root);
  out.sqrt = y * root;
  return out;
}

SymEigen subspace_iteration(const Matrix& a, const Matrix& init, int steps) {
  if (!a.is_square()) throw DimensionError("subspace_iteration: matrix not square");
  if (init.rows() != a.rows() || init.cols() == 0 || init.cols() > a.rows()) {
    throw DimensionError("subspace_iteration: init must be m×r with 1 <= r <= m");
  }
  if (steps < 1) throw ConfigError("subspace_iteration: steps must be >= 1");

  Matrix u = init;
  for (int t = 0; t < steps; ++t) {
    u = orthonormal_basis(kernels::matmul(a, u));
  }
  const Matrix rayleigh = symmetrized(kernels::matmul_tn(u, kernels::matmul(a, u)));
  const SymEigen small = sym_eig(rayleigh);
  return {kernels::matmul(u, small.vectors), small.values};
}

Matrix sym_pow(const Matrix& a, double p) {
  const SymEigen eig = sym_eig(a);
  const std::size_t n = a.rows();
  const double top = eig.values.empty() ? 0.0 : std::max(eig.values.front(), 0.0);
  const double cutoff = kPinvRelTol * top;
  Vector scaled(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = eig.values[k];
    if (p < 0.0) {
      scaled[k] = lambda > cutoff && lambda > 0.0 ? std::pow(lambda, p) : 0.0;
    } else {
      scaled[k] = lambda > 0.0 ? std::pow(lambda, p) : 0.0;
    }
  }
  Matrix vs = eig.vectors;
  for (std::size_t k = 0; k < n; ++k)
    for (double& x : vs.col(k)) x *= scaled[k];
  return symmetrized(kernels::matmul_nt(vs, eig.vectors));
}

Matrix top_left_singular_vectors(const Matrix& g, std::size_t r) {
  if (r == 0 || r > g.rows()) throw DimensionError("top_left_singular_vectors: bad rank");
  return sym_eig(kernels::gram_rows(g), r).vectors;
}

}  // namespace fimopt
