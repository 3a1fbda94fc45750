#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nrucoex {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

/// Floor used whenever a linear power has to be written out in dBm.
inline constexpr double kDbmFloor = -200.0;

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) { return db_to_lin(dbm); }

inline double mw_to_dbm(double mw) {
  if (!(mw > 0.0)) return kDbmFloor;
  return std::max(kDbmFloor, lin_to_db(mw));
}

inline double pos(double v) { return v > 0.0 ? v : 0.0; }
inline double neg(double v) { return v < 0.0 ? -v : 0.0; }

/// Thrown for malformed configuration text; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Thrown when a configuration value is out of its admissible range.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real (2n) embedding of a complex n-vector: [Re; Im].
inline RVec to_real(const CVec& z) {
  RVec r(2 * z.size());
  r.head(z.size()) = z.real();
  r.tail(z.size()) = z.imag();
  return r;
}

inline CVec to_complex(const RVec& r) {
  const Eigen::Index n = r.size() / 2;
  CVec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = cplx(r(i), r(n + i));
  return z;
}

/// Real 2n x 2n representation of a Hermitian matrix A so that
/// z^H A z == to_real(z)^T embed(A) to_real(z).
inline RMat embed_hermitian(const CMat& a) {
  const Eigen::Index n = a.rows();
  RMat r(2 * n, 2 * n);
  r.topLeftCorner(n, n) = a.real();
  r.topRightCorner(n, n) = -a.imag();
  r.bottomLeftCorner(n, n) = a.imag();
  r.bottomRightCorner(n, n) = a.real();
  return r;
}

}  // namespace nrucoex
