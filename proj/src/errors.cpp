#include "ptqm/errors.hpp"

#include <sstream>

namespace ptqm {

std::string format_point(const std::vector<double>& point) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (i) os << ", ";
        os << point[i];
    }
    os << ")";
    return os.str();
}

DomainError::DomainError(const std::string& node, const std::vector<double>& point,
                         const std::string& msg)
    : Error("domain error in " + node + " at " + format_point(point) + ": " + msg),
      node_(node),
      point_(point) {}

SingularJacobian::SingularJacobian(const std::vector<double>& point, double det,
                                   const std::string& msg)
    : Error("singular jacobian at " + format_point(point) + " (det = " +
            std::to_string(det) + "): " + msg),
      point_(point),
      det_(det) {}

ConvergenceError::ConvergenceError(int iterations, double residual,
                                   const std::string& msg)
    : Error("no convergence after " + std::to_string(iterations) +
            " iterations (residual " + std::to_string(residual) + "): " + msg),
      iterations_(iterations),
      residual_(residual) {}

} // namespace ptqm
