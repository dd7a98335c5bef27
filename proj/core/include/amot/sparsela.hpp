#pragma once

#include <array>
#include <span>
#include <vector>

namespace amot {

class Mesh;

/// Dense 3x3 block, row-major.
using Block3 = std::array<double, 9>;

/// Block compressed-sparse-row matrix with dense 3x3 blocks; one block row
/// per triangle. Immutable pattern, accumulate-into-blocks assembly.
class BlockCsrMatrix {
 public:
  /// Pattern from adjacency lists: cols[i] lists the block columns of row i
  /// (need not be sorted; duplicates are merged).
  BlockCsrMatrix(int block_rows, const std::vector<std::vector<int>>& cols);

  /// Diagonal block per element plus one off-diagonal block per interior edge
  /// neighbor.
  static BlockCsrMatrix mesh_pattern(const Mesh& mesh);
  static BlockCsrMatrix diagonal_pattern(int block_rows);

  int block_rows() const { return block_rows_; }
  int rows() const { return 3 * block_rows_; }
  int num_blocks() const { return static_cast<int>(col_.size()); }

  /// Accumulates into block (i,j); the block must exist in the pattern.
  void add_block(int i, int j, const Block3& b);
  /// Pointer to block (i,j), or nullptr if not in the pattern.
  double* find_block(int i, int j);
  const double* find_block(int i, int j) const;
  const Block3& diagonal_block(int i) const;

  /// this += s * other. other's pattern must be a subset of this pattern.
  void add_scaled(const BlockCsrMatrix& other, double s);
  void scale(double s);

  /// Drops blocks that are exactly zero.
  void compress();

  void matvec(std::span<const double> x, std::span<double> y) const;
  std::vector<double> matvec(std::span<const double> x) const;

  /// Residual b - A*x in the Euclidean norm.
  double residual_norm(std::span<const double> x, std::span<const double> b) const;

  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col() const { return col_; }
  std::span<const double> values() const { return val_; }

 private:
  int block_rows_ = 0;
  std::vector<int> row_ptr_;   // size block_rows+1
  std::vector<int> col_;       // block column per block
  std::vector<int> diag_;      // index of the diagonal block per row
  std::vector<double> val_;    // 9 doubles per block
};

struct SolveStatus {
  bool converged = false;
  int iterations = 0;
  double rel_residual = 0.0;  // true residual |b-Ax| / |b| at exit
};

struct SolverOptions {
  double rel_tol = 1e-10;
  int max_iter = 2000;
};

/// BiCGSTAB with a block-Jacobi preconditioner (inverted 3x3 diagonal
/// blocks). The preconditioner is built once at construction and reused by
/// every solve, so one stage matrix can serve several right-hand sides.
class BlockJacobiBicgstab {
 public:
  explicit BlockJacobiBicgstab(const BlockCsrMatrix& A, SolverOptions opt = {});

  /// Solves A x = b from a zero initial guess. x is resized as needed.
  SolveStatus solve(std::span<const double> b, std::vector<double>& x) const;

  const SolverOptions& options() const { return opt_; }

 private:
  void apply_precond(std::span<const double> r, std::span<double> z) const;

  const BlockCsrMatrix* A_;
  std::vector<Block3> diag_inv_;
  SolverOptions opt_;
};

/// In-place LU solve of a 3x3 system with partial pivoting.
void solve3x3(const Block3& a, const std::array<double, 3>& b, std::array<double, 3>& x);

}  // namespace amot
