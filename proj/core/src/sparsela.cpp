#include "amot/sparsela.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "amot/mesh.hpp"

namespace amot {

BlockCsrMatrix::BlockCsrMatrix(int block_rows, const std::vector<std::vector<int>>& cols)
    : block_rows_(block_rows) {
  row_ptr_.assign(block_rows + 1, 0);
  col_.reserve(cols.size() * 4);
  for (int i = 0; i < block_rows; ++i) {
    std::vector<int> c = cols[i];
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (int j : c) {
      if (j < 0 || j >= block_rows)
        throw std::invalid_argument("BlockCsrMatrix: column out of range");
      col_.push_back(j);
    }
    row_ptr_[i + 1] = static_cast<int>(col_.size());
  }
  val_.assign(col_.size() * 9, 0.0);
  diag_.assign(block_rows, -1);
  for (int i = 0; i < block_rows; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (col_[k] == i) diag_[i] = k;
}

BlockCsrMatrix BlockCsrMatrix::mesh_pattern(const Mesh& mesh) {
  const int nt = mesh.num_triangles();
  std::vector<std::vector<int>> cols(nt);
  for (int i = 0; i < nt; ++i) {
    cols[i].push_back(i);
    for (int k = 0; k < 3; ++k) {
      const int nb = mesh.neighbor(i, k);
      if (nb >= 0) cols[i].push_back(nb);
    }
  }
  return BlockCsrMatrix(nt, cols);
}

BlockCsrMatrix BlockCsrMatrix::diagonal_pattern(int block_rows) {
  std::vector<std::vector<int>> cols(block_rows);
  for (int i = 0; i < block_rows; ++i) cols[i].push_back(i);
  return BlockCsrMatrix(block_rows, cols);
}

double* BlockCsrMatrix::find_block(int i, int j) {
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    if (col_[k] == j) return &val_[9 * k];
  return nullptr;
}

const double* BlockCsrMatrix::find_block(int i, int j) const {
  return const_cast<BlockCsrMatrix*>(this)->find_block(i, j);
}

const Block3& BlockCsrMatrix::diagonal_block(int i) const {
  if (diag_[i] < 0) throw std::runtime_error("BlockCsrMatrix: missing diagonal block");
  return *reinterpret_cast<const Block3*>(&val_[9 * diag_[i]]);
}

void BlockCsrMatrix::add_block(int i, int j, const Block3& b) {
  double* dst = find_block(i, j);
  if (!dst) throw std::runtime_error("BlockCsrMatrix: block not in pattern");
  for (int k = 0; k < 9; ++k) dst[k] += b[k];
}

void BlockCsrMatrix::add_scaled(const BlockCsrMatrix& other, double s) {
  if (other.block_rows_ != block_rows_)
    throw std::invalid_argument("add_scaled: dimension mismatch");
  for (int i = 0; i < block_rows_; ++i) {
    for (int k = other.row_ptr_[i]; k < other.row_ptr_[i + 1]; ++k) {
      double* dst = find_block(i, other.col_[k]);
      if (!dst) throw std::runtime_error("add_scaled: pattern not a subset");
      const double* src = &other.val_[9 * k];
      for (int q = 0; q < 9; ++q) dst[q] += s * src[q];
    }
  }
}

void BlockCsrMatrix::scale(double s) {
  for (double& v : val_) v *= s;
}

void BlockCsrMatrix::compress() {
  std::vector<int> new_row_ptr(block_rows_ + 1, 0);
  std::vector<int> new_col;
  std::vector<double> new_val;
  new_col.reserve(col_.size());
  new_val.reserve(val_.size());
  for (int i = 0; i < block_rows_; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const double* b = &val_[9 * k];
      bool zero = true;
      for (int q = 0; q < 9 && zero; ++q) zero = (b[q] == 0.0);
      if (zero && col_[k] != i) continue;  // keep diagonal blocks
      new_col.push_back(col_[k]);
      new_val.insert(new_val.end(), b, b + 9);
    }
    new_row_ptr[i + 1] = static_cast<int>(new_col.size());
  }
  row_ptr_ = std::move(new_row_ptr);
  col_ = std::move(new_col);
  val_ = std::move(new_val);
  diag_.assign(block_rows_, -1);
  for (int i = 0; i < block_rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (col_[k] == i) diag_[i] = k;
}

void BlockCsrMatrix::matvec(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != rows() || static_cast<int>(y.size()) != rows())
    throw std::invalid_argument("matvec: dimension mismatch");
  for (int i = 0; i < block_rows_; ++i) {
    double y0 = 0.0, y1 = 0.0, y2 = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const double* b = &val_[9 * k];
      const double* xj = &x[3 * col_[k]];
      y0 += b[0] * xj[0] + b[1] * xj[1] + b[2] * xj[2];
      y1 += b[3] * xj[0] + b[4] * xj[1] + b[5] * xj[2];
      y2 += b[6] * xj[0] + b[7] * xj[1] + b[8] * xj[2];
    }
    y[3 * i] = y0;
    y[3 * i + 1] = y1;
    y[3 * i + 2] = y2;
  }
}

std::vector<double> BlockCsrMatrix::matvec(std::span<const double> x) const {
  std::vector<double> y(rows());
  matvec(x, y);
  return y;
}

double BlockCsrMatrix::residual_norm(std::span<const double> x, std::span<const double> b) const {
  std::vector<double> ax = matvec(x);
  double s = 0.0;
  for (int i = 0; i < rows(); ++i) {
    const double r = b[i] - ax[i];
    s += r * r;
  }
  return std::sqrt(s);
}

void solve3x3(const Block3& a, const std::array<double, 3>& b, std::array<double, 3>& x) {
  double m[3][4] = {{a[0], a[1], a[2], b[0]},
                    {a[3], a[4], a[5], b[1]},
                    {a[6], a[7], a[8], b[2]}};
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (m[piv][c] == 0.0) throw std::runtime_error("solve3x3: singular block");
    if (piv != c) std::swap(m[piv], m[c]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = m[r][c] / m[c][c];
      for (int q = c; q < 4; ++q) m[r][q] -= f * m[c][q];
    }
  }
  for (int c = 2; c >= 0; --c) {
    double s = m[c][3];
    for (int q = c + 1; q < 3; ++q) s -= m[c][q] * x[q];
    x[c] = s / m[c][c];
  }
}

namespace {

Block3 invert3x3(const Block3& a) {
  Block3 inv;
  std::array<double, 3> e{}, x{};
  for (int c = 0; c < 3; ++c) {
    e.fill(0.0);
    e[c] = 1.0;
    solve3x3(a, e, x);
    inv[c] = x[0];
    inv[3 + c] = x[1];
    inv[6 + c] = x[2];
  }
  return inv;
}

double dot_v(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_v(std::span<const double> a) { return std::sqrt(dot_v(a, a)); }

}  // namespace

BlockJacobiBicgstab::BlockJacobiBicgstab(const BlockCsrMatrix& A, SolverOptions opt)
    : A_(&A), opt_(opt) {
  diag_inv_.resize(A.block_rows());
  for (int i = 0; i < A.block_rows(); ++i) diag_inv_[i] = invert3x3(A.diagonal_block(i));
}

void BlockJacobiBicgstab::apply_precond(std::span<const double> r, std::span<double> z) const {
  for (size_t i = 0; i < diag_inv_.size(); ++i) {
    const double* b = diag_inv_[i].data();
    const double* ri = &r[3 * i];
    z[3 * i] = b[0] * ri[0] + b[1] * ri[1] + b[2] * ri[2];
    z[3 * i + 1] = b[3] * ri[0] + b[4] * ri[1] + b[5] * ri[2];
    z[3 * i + 2] = b[6] * ri[0] + b[7] * ri[1] + b[8] * ri[2];
  }
}

SolveStatus BlockJacobiBicgstab::solve(std::span<const double> b, std::vector<double>& x) const {
  const int n = A_->rows();
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve: dimension mismatch");
  x.assign(n, 0.0);

  const double bnorm = norm_v(b);
  if (bnorm == 0.0) return {true, 0, 0.0};
  for (double v : b)
    if (!std::isfinite(v)) return {false, 0, std::numeric_limits<double>::quiet_NaN()};

  // Left-preconditioned BiCGSTAB; convergence is confirmed against the true
  // unpreconditioned residual before reporting success.
  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), tmp(n), z(n);
  apply_precond(b, r);  // x0 = 0
  rhat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  const double r0norm = norm_v(r);
  double target = opt_.rel_tol * r0norm;

  SolveStatus st;
  for (int it = 1; it <= opt_.max_iter; ++it) {
    st.iterations = it;
    const double rho1 = dot_v(rhat, r);
    if (rho1 == 0.0 || !std::isfinite(rho1)) break;  // breakdown
    if (it == 1) {
      p = r;
    } else {
      const double beta = (rho1 / rho) * (alpha / omega);
      for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    A_->matvec(p, tmp);
    apply_precond(tmp, v);
    const double rhv = dot_v(rhat, v);
    if (rhv == 0.0 || !std::isfinite(rhv)) break;
    alpha = rho1 / rhv;
    for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (norm_v(s) <= 0.1 * target) {
      for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
      const double res = A_->residual_norm(x, b);
      st.rel_residual = res / bnorm;
      if (res <= opt_.rel_tol * bnorm) {
        st.converged = true;
        return st;
      }
      for (int i = 0; i < n; ++i) x[i] -= alpha * p[i];
    }
    A_->matvec(s, tmp);
    apply_precond(tmp, t);
    const double tt = dot_v(t, t);
    if (tt == 0.0 || !std::isfinite(tt)) break;
    omega = dot_v(t, s) / tt;
    if (omega == 0.0 || !std::isfinite(omega)) break;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i] + omega * s[i];
    for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    rho = rho1;
    if (norm_v(r) <= target) {
      const double res = A_->residual_norm(x, b);
      st.rel_residual = res / bnorm;
      if (res <= opt_.rel_tol * bnorm) {
        st.converged = true;
        return st;
      }
      // Preconditioned recurrence underestimated the true residual; tighten.
      target *= 0.25;
    }
  }
  st.rel_residual = A_->residual_norm(x, b) / bnorm;
  st.converged = st.rel_residual <= opt_.rel_tol;
  return st;
}

}  // namespace amot
