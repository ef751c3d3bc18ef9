#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace wgabs {

using cplx = std::complex<double>;

// Points are stored as (z, y): z runs along the guide axis, y across the unit-height strip.
using Vec2 = Eigen::Vector2d;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

inline constexpr const char* version = "0.3.0";

enum class ErrorKind { config = 1, mesh = 2, solver = 3, validation = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

inline double z_of(const Vec2& p) { return p[0]; }
inline double y_of(const Vec2& p) { return p[1]; }

} // namespace wgabs
