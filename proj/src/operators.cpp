#include "sflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Eigenvalues>

namespace sflow {

namespace {

constexpr int kMaxSites = 13;  // dense matrices, 2^13 is already 1 GB

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

Region::Region(int lo_, int hi_) : lo(lo_), hi(hi_) {
  if (hi < lo) throw std::invalid_argument("Region: hi < lo");
}

std::optional<Region> Region::intersect(const Region& r) const {
  int l = std::max(lo, r.lo), h = std::min(hi, r.hi);
  if (h < l) return std::nullopt;
  return Region(l, h);
}

Region Region::join(const Region& r) const {
  return Region(std::min(lo, r.lo), std::max(hi, r.hi));
}

LocalOperator::LocalOperator(Region support, Matrix matrix)
    : support_(support), matrix_(std::move(matrix)) {
  if (support_.size() > kMaxSites)
    throw std::invalid_argument("LocalOperator: region too large for a dense matrix");
  long want = 1L << support_.size();
  if (matrix_.rows() != want || matrix_.cols() != want)
    throw std::invalid_argument("LocalOperator: matrix dimension does not match the region");
}

LocalOperator LocalOperator::identity(Region support) {
  if (support.size() > kMaxSites)
    throw std::invalid_argument("LocalOperator: region too large for a dense matrix");
  long d = 1L << support.size();
  return LocalOperator(support, Matrix::Identity(d, d));
}

LocalOperator LocalOperator::zero(Region support) {
  if (support.size() > kMaxSites)
    throw std::invalid_argument("LocalOperator: region too large for a dense matrix");
  long d = 1L << support.size();
  return LocalOperator(support, Matrix::Zero(d, d));
}

LocalOperator LocalOperator::adjoint() const {
  return LocalOperator(support_, matrix_.adjoint());
}

bool LocalOperator::is_hermitian(double tol) const {
  double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix pauli_matrix(Pauli p) {
  Matrix m(2, 2);
  switch (p) {
    case Pauli::X:
      m << 0, 1, 1, 0;
      break;
    case Pauli::Y:
      m << 0, Cplx(0, -1), Cplx(0, 1), 0;
      break;
    case Pauli::Z:
      m << 1, 0, 0, -1;
      break;
  }
  return m;
}

LocalOperator pauli_string(const std::vector<std::pair<int, Pauli>>& sites, Cplx coefficient,
                           int anchor) {
  if (sites.empty()) {
    LocalOperator id = LocalOperator::identity(Region(anchor, anchor));
    return coefficient * id;
  }
  std::set<int> seen;
  int lo = sites[0].first, hi = sites[0].first;
  for (auto& [s, p] : sites) {
    if (!seen.insert(s).second) throw std::invalid_argument("pauli_string: duplicate site");
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  Region support(lo, hi);
  // site lo + b lives on bit b, so higher sites go on the left of the product
  Matrix m = Matrix::Identity(1, 1);
  for (int site = hi; site >= lo; --site) {
    Matrix factor = Matrix::Identity(2, 2);
    for (auto& [s, p] : sites)
      if (s == site) factor = pauli_matrix(p);
    m = kron(m, factor);
  }
  return LocalOperator(support, coefficient * m);
}

LocalOperator embed(const LocalOperator& a, const Region& target) {
  if (!target.contains(a.support()))
    throw std::invalid_argument("embed: target does not contain the support");
  if (a.support() == target) return a;
  if (target.size() > kMaxSites)
    throw std::invalid_argument("embed: target region too large for a dense matrix");
  int off = a.support().lo - target.lo;
  int na = a.support().size();
  long dim_a = a.dim();
  long dim_t = 1L << target.size();
  Matrix m = Matrix::Zero(dim_t, dim_t);
  const Matrix& am = a.matrix();
  for (long i = 0; i < dim_t; ++i) {
    long low = i & ((1L << off) - 1);
    long ia = (i >> off) & (dim_a - 1);
    long high = i >> (off + na);
    for (long ja = 0; ja < dim_a; ++ja) {
      Cplx v = am(ia, ja);
      if (v == Cplx(0.0, 0.0)) continue;
      m(i, low | (ja << off) | (high << (off + na))) = v;
    }
  }
  return LocalOperator(target, std::move(m));
}

LocalOperator translate(const LocalOperator& a, int shift) {
  return LocalOperator(a.support().shifted(shift), a.matrix());
}

LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) {
  Region r = a.support().join(b.support());
  return LocalOperator(r, embed(a, r).matrix() + embed(b, r).matrix());
}

LocalOperator operator-(const LocalOperator& a, const LocalOperator& b) {
  Region r = a.support().join(b.support());
  return LocalOperator(r, embed(a, r).matrix() - embed(b, r).matrix());
}

LocalOperator operator*(const LocalOperator& a, const LocalOperator& b) {
  Region r = a.support().join(b.support());
  return LocalOperator(r, embed(a, r).matrix() * embed(b, r).matrix());
}

LocalOperator operator*(Cplx scale, const LocalOperator& a) {
  return LocalOperator(a.support(), scale * a.matrix());
}

LocalOperator commutator(const LocalOperator& a, const LocalOperator& b) {
  if (!a.support().intersects(b.support()))
    return LocalOperator::zero(a.support().join(b.support()));
  Region r = a.support().join(b.support());
  Matrix am = embed(a, r).matrix();
  Matrix bm = embed(b, r).matrix();
  return LocalOperator(r, am * bm - bm * am);
}

double spectral_norm(const Matrix& m) {
  Matrix g = m.adjoint() * m;
  Eigen::VectorXd ev;
  hermitian_eig(g, ev, nullptr);
  return std::sqrt(std::max(0.0, ev(ev.size() - 1)));
}

double operator_norm(const LocalOperator& a) { return spectral_norm(a.matrix()); }

LocalOperator conditional_expectation(const LocalOperator& a, int n) {
  if (n < 0) throw std::invalid_argument("conditional_expectation: n must be >= 0");
  Region ball = Region::ball(n);
  const Region& s = a.support();
  if (ball.contains(s)) return a;

  auto kept = s.intersect(ball);
  if (!kept) {
    // support entirely outside: normalized trace times the identity on the
    // retained site nearest the support
    Cplx scalar = a.matrix().trace() / static_cast<double>(a.dim());
    int site = s.lo > n ? n : -n;
    LocalOperator id = LocalOperator::identity(Region(site, site));
    return scalar * id;
  }

  // bit positions (relative to s.lo) to keep and to trace out
  std::vector<int> kb, tb;
  for (int b = 0; b < s.size(); ++b)
    (ball.contains(s.lo + b) ? kb : tb).push_back(b);
  long dim_k = 1L << kb.size(), dim_t = 1L << tb.size();
  auto scatter = [](const std::vector<int>& bits, long idx) {
    long out = 0;
    for (size_t p = 0; p < bits.size(); ++p)
      if (idx & (1L << p)) out |= 1L << bits[p];
    return out;
  };
  std::vector<long> kmap(dim_k), tmap(dim_t);
  for (long i = 0; i < dim_k; ++i) kmap[i] = scatter(kb, i);
  for (long i = 0; i < dim_t; ++i) tmap[i] = scatter(tb, i);

  const Matrix& am = a.matrix();
  Matrix m = Matrix::Zero(dim_k, dim_k);
  for (long ik = 0; ik < dim_k; ++ik)
    for (long jk = 0; jk < dim_k; ++jk) {
      Cplx acc(0.0, 0.0);
      for (long t = 0; t < dim_t; ++t) acc += am(kmap[ik] | tmap[t], kmap[jk] | tmap[t]);
      m(ik, jk) = acc / static_cast<double>(dim_t);
    }
  return LocalOperator(*kept, std::move(m));
}

void hermitian_eig(const Matrix& h, Eigen::VectorXd& evals, Matrix* evecs) {
  if (h.rows() != h.cols() || h.rows() < 1)
    throw std::invalid_argument("hermitian_eig: matrix must be square and non-empty");
  lapack_int n = static_cast<lapack_int>(h.rows());
  Matrix a = h;
  evals.resize(n);
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, evecs ? 'V' : 'N', 'L', n, a.data(),
                                   n, evals.data());
  if (info != 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, evecs ? Eigen::ComputeEigenvectors
                                                      : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: no convergence");
    evals = es.eigenvalues();
    if (evecs) *evecs = es.eigenvectors();
    return;
  }
  if (evecs) *evecs = std::move(a);
}

}  // namespace sflow
