#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mtdc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr std::string_view kVersion = "0.1.0";

/// Malformed or inconsistent system description (schema, units, topology).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

/// Iterative solver failed to reach its tolerance within budget.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A slope constraint is already violated at zero deviation.
class InfeasibleExpansionError : public std::runtime_error {
public:
    explicit InfeasibleExpansionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Degenerate numerical data (singular mass matrix, defective mode, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mtdc
