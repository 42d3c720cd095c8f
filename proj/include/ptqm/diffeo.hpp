#ifndef PTQM_DIFFEO_HPP
#define PTQM_DIFFEO_HPP

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ptqm/expr.hpp"

namespace ptqm {

/// Jacobian-derived quantities of the map at one point.
///
/// df(a,b)     = dX_{a+1}/dx_{b+1}
/// inv_df(b,a) = dx_{b+1}/dX_{a+1}
/// divergence[a] = sum_b d/dx_b [inv_df(b,a)]
struct JacobianData {
    std::vector<double> point;
    Eigen::MatrixXd df;
    double det_j = 0.0;
    Eigen::MatrixXd inv_df;
    Eigen::VectorXd divergence;
};

/// One issue found while sampling a map over a box.
struct Violation {
    enum class Kind {
        ForwardEval,   // f(x) could not be evaluated
        NotFinite,     // f(x) evaluated to a non-finite value
        Jacobian,      // det below threshold, or derivative undefined
        InverseEval,   // supplied inverse failed to evaluate
        RoundTrip,     // g(f(x)) deviates from x
    };
    Kind kind;
    std::vector<double> point;
    double value = 0.0;
    std::string message;
};

const char* violation_kind_name(Violation::Kind k);

/// Result of lattice sampling over a box. A pass is evidence that the map
/// behaves like a diffeomorphism with positive Jacobian on the box, not a
/// proof; the note says so.
struct ValidationReport {
    std::vector<std::array<double, 2>> box;
    int samples_per_axis = 0;
    long total_samples = 0;
    std::vector<Violation> violations;
    std::string note;

    bool passed() const { return violations.empty(); }
};

/// A point transformation X = f(x) on R^n, candidate global diffeomorphism
/// with positive Jacobian.
///
/// Symbolic first and second derivatives of every component are computed at
/// construction; for n <= 4 the symbolic determinant, its gradient and the
/// symbolic inverse Jacobian are precomputed as well. Instances are
/// immutable afterwards and safe to share across threads.
class DiffeoMap {
public:
    static constexpr double kDefaultJMin = 1e-8;

    DiffeoMap(std::vector<Expr> forward, std::optional<std::vector<Expr>> inverse,
              double j_min = kDefaultJMin);

    int dimension() const { return n_; }
    double j_min() const { return j_min_; }
    bool has_inverse() const { return inverse_.has_value(); }
    const Expr& forward_component(int alpha) const; // alpha 1-based
    const Expr& inverse_component(int beta) const;  // beta 1-based

    /// Evaluates X = f(x).
    std::vector<double> forward_at(const std::vector<double>& x) const;

    /// Evaluates x = g(X) from the supplied inverse expressions.
    std::vector<double> inverse_at(const std::vector<double>& X) const;

    /// Full Jacobian data at x. Throws SingularJacobian when the determinant
    /// is not above j_min or the derivative entries cannot be evaluated.
    JacobianData jacobian_at(const std::vector<double>& x) const;

    /// b_alpha = sum_b d/dx_b [inv_df(b,alpha)] via the matrix identity
    /// d(A^-1) = -A^-1 (dA) A^-1 with symbolic second derivatives.
    double divergence_direct(const std::vector<double>& x, int alpha) const;

    /// Same quantity through the determinant route
    /// b_alpha = -J^-1 sum_b inv_df(b,alpha) dJ/dx_b, with dJ/dx_b from the
    /// symbolically expanded determinant. Needs n <= 4.
    double divergence_via_lemma(const std::vector<double>& x, int alpha) const;

    /// Solves f(x) = X. When inverse expressions are present they are
    /// evaluated; otherwise damped Newton iteration from `seed`.
    std::vector<double> invert_point(const std::vector<double>& X,
                                     const std::vector<double>& seed) const;
    std::vector<double> invert_point(const std::vector<double>& X) const;

    /// Samples a lattice over the box and records every violation of
    /// positivity, finiteness and (when an inverse is present) the
    /// round-trip identity.
    ValidationReport validate_global(const std::vector<std::array<double, 2>>& box,
                                     int samples_per_axis) const;

    /// Symbolic inverse Jacobian: entry (b,a) is dx_{b+1}/dX_{a+1} as an
    /// expression in x. Needs n <= 4.
    const std::vector<std::vector<Expr>>& inverse_jacobian_symbolic() const;

    /// Symbolic divergence term sum_b d/dx_b [dx_b/dX_alpha]. Needs n <= 4.
    Expr divergence_symbolic(int alpha) const;

    /// Symbolic determinant of the Jacobian matrix. Needs n <= 4.
    const Expr& determinant_symbolic() const;

private:
    struct Core {
        Eigen::MatrixXd df;
        double det = 0.0;
        Eigen::MatrixXd inv;
    };
    Core core_at(const std::vector<double>& x) const;
    double divergence_from_core(const Core& core, const std::vector<double>& x,
                                int alpha) const;
    void require_symbolic(const char* what) const;

    int n_;
    double j_min_;
    std::vector<Expr> forward_;
    std::optional<std::vector<Expr>> inverse_;
    std::vector<std::vector<Expr>> df_sym_;                  // [alpha][beta]
    std::vector<std::vector<std::vector<Expr>>> d2f_sym_;    // [alpha][beta][gamma]
    bool symbolic_det_available_ = false;
    Expr det_sym_;
    std::vector<Expr> ddet_sym_;                             // d(det)/dx_beta
    std::vector<std::vector<Expr>> inv_sym_;                 // [beta][alpha]
};

/// Symbolic determinant of a square matrix of expressions by cofactor
/// expansion. Intended for small n; cost grows factorially.
Expr symbolic_determinant(const std::vector<std::vector<Expr>>& m);

} // namespace ptqm

#endif
