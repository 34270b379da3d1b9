// Dense scalar-templated aliases and the positive weight vector type.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <stdexcept>

namespace ewc {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;
using Index = Eigen::Index;

/// Strictly positive weight vector eta defining the scaled sup-norm
/// max_i |x_i| / eta_i.
class PositiveWeight {
 public:
  explicit PositiveWeight(Vector eta) : eta_(std::move(eta)) {
    if (eta_.size() == 0) throw std::invalid_argument("weight vector is empty");
    for (Index i = 0; i < eta_.size(); ++i) {
      if (!std::isfinite(eta_[i]) || eta_[i] <= 0.0)
        throw std::invalid_argument("weight vector must be strictly positive and finite");
    }
  }

  PositiveWeight(std::initializer_list<double> values)
      : PositiveWeight(Eigen::Map<const Vector>(values.begin(),
                                                static_cast<Index>(values.size()))) {}

  static PositiveWeight ones(Index n) { return PositiveWeight(Vector::Ones(n)); }

  const Vector& vec() const { return eta_; }
  Index size() const { return eta_.size(); }
  double operator[](Index i) const { return eta_[i]; }

 private:
  Vector eta_;
};

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
}

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + " must be square");
}

}  // namespace ewc
