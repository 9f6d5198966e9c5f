#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace fpp {

// Small fixed-capacity vectors and matrices; every supported model has d <= 3.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr int kMaxDim = 3;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed window, unsupported parameters, precondition failure.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A solver could not produce a certified answer (window too small, corridor
/// escaped the sampled region, ...).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double required_radius)
      : Error(what), required_radius_(required_radius) {}
  double required_radius() const { return required_radius_; }

 private:
  double required_radius_;
};

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// Strict lexicographic order on coordinates.
inline bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (b(i) < a(i)) return false;
  }
  return false;
}

inline bool bit_equal(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!(a(i) == b(i))) return false;
  return true;
}

}  // namespace fpp
