#pragma once
#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace sflow {

using Cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// contiguous interval of chain sites
struct Region {
  int lo;
  int hi;

  Region(int lo_, int hi_);  // throws if hi < lo
  static Region ball(int n) { return Region(-n, n); }

  int size() const { return hi - lo + 1; }
  bool contains(int site) const { return lo <= site && site <= hi; }
  bool contains(const Region& r) const { return lo <= r.lo && r.hi <= hi; }
  bool intersects(const Region& r) const { return lo <= r.hi && r.lo <= hi; }
  std::optional<Region> intersect(const Region& r) const;
  Region join(const Region& r) const;
  Region shifted(int delta) const { return Region(lo + delta, hi + delta); }
  bool operator==(const Region&) const = default;
};

// dense operator on the 2^{|support|}-dimensional Hilbert space of a region;
// site (lo + b) maps to bit b of the basis index
class LocalOperator {
 public:
  LocalOperator(Region support, Matrix matrix);  // checks the dimension

  static LocalOperator identity(Region support);
  static LocalOperator zero(Region support);

  const Region& support() const { return support_; }
  const Matrix& matrix() const { return matrix_; }
  Matrix& matrix() { return matrix_; }
  long dim() const { return matrix_.rows(); }

  LocalOperator adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;

 private:
  Region support_;
  Matrix matrix_;
};

enum class Pauli { X, Y, Z };

Matrix pauli_matrix(Pauli p);

// tensor product of named single-site matrices on the minimal covering
// region, times coefficient; with no sites, the identity on anchor
LocalOperator pauli_string(const std::vector<std::pair<int, Pauli>>& sites, Cplx coefficient,
                           int anchor = 0);

LocalOperator embed(const LocalOperator& a, const Region& target);
LocalOperator translate(const LocalOperator& a, int shift);

// arithmetic auto-embeds into the joint support
LocalOperator operator+(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator-(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator*(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator*(Cplx scale, const LocalOperator& a);
LocalOperator commutator(const LocalOperator& a, const LocalOperator& b);

double operator_norm(const LocalOperator& a);
double spectral_norm(const Matrix& m);  // largest singular value

// id on [-n, n] tensored with the normalized partial trace of the rest.
// If the whole support lies outside, the scalar remainder is returned on the
// single retained site nearest the original support.
LocalOperator conditional_expectation(const LocalOperator& a, int n);

// ascending eigenvalues of a Hermitian matrix; eigenvectors in columns when
// requested
void hermitian_eig(const Matrix& h, Eigen::VectorXd& evals, Matrix* evecs);

}  // namespace sflow
