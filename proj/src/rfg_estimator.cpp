#include "rfg/rfg_estimator.hpp"

#include <stdexcept>

namespace rfg {

double directional_derivative(const Objective& f, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& z, double h) {
  if (!(h >= 0.0)) throw std::invalid_argument("directional_derivative: h must be >= 0");
  if (x.size() != z.size()) throw std::invalid_argument("directional_derivative: dimension mismatch");
  if (h == 0.0) {
    if (!f.has_jvp()) {
      throw std::logic_error("directional_derivative: objective '" + f.name +
                             "' has no jvp hook, exact derivative (h = 0) unavailable");
    }
    return f.jvp(x, z).directional_derivative;
  }
  return (f.evaluate(x + h * z) - f.evaluate(x)) / h;
}

Eigen::VectorXd rfg(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                    double h) {
  return directional_derivative(f, x, z, h) * z;
}

}  // namespace rfg
