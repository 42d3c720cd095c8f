#include "ptqm/diffeo.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ptqm {

namespace {

constexpr int kMaxSymbolicDet = 4;
constexpr double kInverseConsistencyTol = 1e-10;
constexpr int kNewtonMaxIter = 100;

std::vector<std::vector<Expr>> minor_matrix(const std::vector<std::vector<Expr>>& m,
                                            std::size_t row, std::size_t col) {
    std::vector<std::vector<Expr>> out;
    for (std::size_t r = 0; r < m.size(); ++r) {
        if (r == row) continue;
        std::vector<Expr> line;
        for (std::size_t c = 0; c < m.size(); ++c) {
            if (c == col) continue;
            line.push_back(m[r][c]);
        }
        out.push_back(std::move(line));
    }
    return out;
}

} // namespace

Expr symbolic_determinant(const std::vector<std::vector<Expr>>& m) {
    const std::size_t n = m.size();
    if (n == 1) return m[0][0];
    Expr det = Expr::constant(0.0);
    for (std::size_t c = 0; c < n; ++c) {
        Expr term = m[0][c] * symbolic_determinant(minor_matrix(m, 0, c));
        det = (c % 2 == 0) ? det + term : det - term;
    }
    return det.simplify();
}

const char* violation_kind_name(Violation::Kind k) {
    switch (k) {
        case Violation::Kind::ForwardEval: return "forward_eval";
        case Violation::Kind::NotFinite: return "not_finite";
        case Violation::Kind::Jacobian: return "jacobian";
        case Violation::Kind::InverseEval: return "inverse_eval";
        case Violation::Kind::RoundTrip: return "round_trip";
    }
    return "?";
}

DiffeoMap::DiffeoMap(std::vector<Expr> forward, std::optional<std::vector<Expr>> inverse,
                     double j_min)
    : n_(static_cast<int>(forward.size())),
      j_min_(j_min),
      forward_(std::move(forward)),
      inverse_(std::move(inverse)) {
    if (n_ < 1) throw ArityError("map needs at least one forward component");
    if (j_min_ <= 0.0) throw ConfigError("j_min must be positive");
    for (const Expr& f : forward_) {
        if (f.max_variable() > n_)
            throw ArityError("forward component " + f.print() + " uses x" +
                             std::to_string(f.max_variable()) + " but dimension is " +
                             std::to_string(n_));
    }
    if (inverse_) {
        if (static_cast<int>(inverse_->size()) != n_)
            throw ArityError("inverse has " + std::to_string(inverse_->size()) +
                             " components, expected " + std::to_string(n_));
        for (const Expr& g : *inverse_) {
            if (g.max_variable() > n_)
                throw ArityError("inverse component " + g.print() + " uses x" +
                                 std::to_string(g.max_variable()) + " but dimension is " +
                                 std::to_string(n_));
        }
    }

    df_sym_.resize(n_);
    d2f_sym_.resize(n_);
    for (int a = 0; a < n_; ++a) {
        df_sym_[a].reserve(n_);
        for (int b = 1; b <= n_; ++b) df_sym_[a].push_back(forward_[a].derive(b));
        d2f_sym_[a].resize(n_);
        for (int b = 0; b < n_; ++b) {
            d2f_sym_[a][b].reserve(n_);
            for (int g = 1; g <= n_; ++g) d2f_sym_[a][b].push_back(df_sym_[a][b].derive(g));
        }
    }

    if (n_ <= kMaxSymbolicDet) {
        symbolic_det_available_ = true;
        det_sym_ = symbolic_determinant(df_sym_);
        ddet_sym_.reserve(n_);
        for (int b = 1; b <= n_; ++b) ddet_sym_.push_back(det_sym_.derive(b));
        // adjugate transpose over determinant: inv(b,a) = cofactor(a,b)/det
        inv_sym_.resize(n_);
        for (int b = 0; b < n_; ++b) {
            inv_sym_[b].reserve(n_);
            for (int a = 0; a < n_; ++a) {
                Expr cof = (n_ == 1) ? Expr::constant(1.0)
                                     : symbolic_determinant(minor_matrix(
                                           df_sym_, static_cast<std::size_t>(a),
                                           static_cast<std::size_t>(b)));
                if ((a + b) % 2 == 1) cof = (-cof).simplify();
                inv_sym_[b].push_back((cof / det_sym_).simplify());
            }
        }
    }
}

const Expr& DiffeoMap::forward_component(int alpha) const {
    if (alpha < 1 || alpha > n_) throw ArityError("component index out of range");
    return forward_[static_cast<std::size_t>(alpha - 1)];
}

const Expr& DiffeoMap::inverse_component(int beta) const {
    if (!inverse_) throw ConfigError("map has no symbolic inverse");
    if (beta < 1 || beta > n_) throw ArityError("component index out of range");
    return (*inverse_)[static_cast<std::size_t>(beta - 1)];
}

std::vector<double> DiffeoMap::forward_at(const std::vector<double>& x) const {
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (int a = 0; a < n_; ++a) out[static_cast<std::size_t>(a)] = forward_[static_cast<std::size_t>(a)].eval(x);
    return out;
}

std::vector<double> DiffeoMap::inverse_at(const std::vector<double>& X) const {
    if (!inverse_) throw ConfigError("map has no symbolic inverse");
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (int b = 0; b < n_; ++b) out[static_cast<std::size_t>(b)] = (*inverse_)[static_cast<std::size_t>(b)].eval(X);
    return out;
}

DiffeoMap::Core DiffeoMap::core_at(const std::vector<double>& x) const {
    Core core;
    core.df.resize(n_, n_);
    for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) {
            double v = 0.0;
            try {
                v = df_sym_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].eval(x);
            } catch (const DomainError& e) {
                // The derivative matrix is undefined here, so there is no
                // positive Jacobian to speak of.
                throw SingularJacobian(x, std::numeric_limits<double>::quiet_NaN(),
                                       std::string("jacobian entry undefined: ") + e.what());
            }
            if (!std::isfinite(v))
                throw SingularJacobian(x, std::numeric_limits<double>::quiet_NaN(),
                                       "jacobian entry not finite");
            core.df(a, b) = v;
        }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(core.df);
    core.det = lu.determinant();
    if (!(core.det > j_min_))
        throw SingularJacobian(x, core.det,
                               "determinant not above threshold " + std::to_string(j_min_));
    core.inv = lu.solve(Eigen::MatrixXd::Identity(n_, n_));
    double defect = (core.df * core.inv - Eigen::MatrixXd::Identity(n_, n_))
                        .cwiseAbs()
                        .maxCoeff();
    if (!(defect <= kInverseConsistencyTol))
        throw SingularJacobian(x, core.det,
                               "jacobian too ill-conditioned to invert (defect " +
                                   std::to_string(defect) + ")");
    return core;
}

double DiffeoMap::divergence_from_core(const Core& core, const std::vector<double>& x,
                                       int alpha) const {
    // b_alpha = sum_b d/dx_b [A^-1]_{b,alpha} = -sum_b [A^-1 (d_b A) A^-1]_{b,alpha}
    double b_alpha = 0.0;
    Eigen::MatrixXd dA(n_, n_);
    for (int b = 0; b < n_; ++b) {
        for (int l = 0; l < n_; ++l)
            for (int m = 0; m < n_; ++m)
                dA(l, m) = d2f_sym_[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)]
                                   [static_cast<std::size_t>(b)]
                                       .eval(x);
        Eigen::MatrixXd M = core.inv * dA * core.inv;
        b_alpha -= M(b, alpha - 1);
    }
    return b_alpha;
}

JacobianData DiffeoMap::jacobian_at(const std::vector<double>& x) const {
    Core core = core_at(x);
    JacobianData data;
    data.point = x;
    data.df = core.df;
    data.det_j = core.det;
    data.inv_df = core.inv;
    data.divergence.resize(n_);
    for (int a = 1; a <= n_; ++a) data.divergence(a - 1) = divergence_from_core(core, x, a);
    return data;
}

double DiffeoMap::divergence_direct(const std::vector<double>& x, int alpha) const {
    if (alpha < 1 || alpha > n_) throw ArityError("component index out of range");
    Core core = core_at(x);
    return divergence_from_core(core, x, alpha);
}

void DiffeoMap::require_symbolic(const char* what) const {
    if (!symbolic_det_available_)
        throw DimensionError(std::string(what) + " needs the expanded symbolic determinant, " +
                             "which is only built for dimension <= " +
                             std::to_string(kMaxSymbolicDet));
}

double DiffeoMap::divergence_via_lemma(const std::vector<double>& x, int alpha) const {
    if (alpha < 1 || alpha > n_) throw ArityError("component index out of range");
    require_symbolic("divergence_via_lemma");
    Core core = core_at(x);
    double sum = 0.0;
    for (int b = 0; b < n_; ++b)
        sum += core.inv(b, alpha - 1) * ddet_sym_[static_cast<std::size_t>(b)].eval(x);
    return -sum / core.det;
}

const std::vector<std::vector<Expr>>& DiffeoMap::inverse_jacobian_symbolic() const {
    require_symbolic("inverse_jacobian_symbolic");
    return inv_sym_;
}

Expr DiffeoMap::divergence_symbolic(int alpha) const {
    if (alpha < 1 || alpha > n_) throw ArityError("component index out of range");
    require_symbolic("divergence_symbolic");
    Expr sum = Expr::constant(0.0);
    for (int b = 1; b <= n_; ++b)
        sum = sum + inv_sym_[static_cast<std::size_t>(b - 1)][static_cast<std::size_t>(alpha - 1)].derive(b);
    return sum.simplify();
}

const Expr& DiffeoMap::determinant_symbolic() const {
    require_symbolic("determinant_symbolic");
    return det_sym_;
}

std::vector<double> DiffeoMap::invert_point(const std::vector<double>& X) const {
    return invert_point(X, std::vector<double>(static_cast<std::size_t>(n_), 0.0));
}

std::vector<double> DiffeoMap::invert_point(const std::vector<double>& X,
                                            const std::vector<double>& seed) const {
    if (static_cast<int>(X.size()) != n_)
        throw ArityError("point has wrong dimension for inversion");
    if (inverse_) return inverse_at(X);

    double x_scale = 0.0;
    for (double v : X) x_scale = std::max(x_scale, std::abs(v));
    const double target = 1e-12 * (1.0 + x_scale);

    std::vector<double> x = seed;
    auto residual_of = [&](const std::vector<double>& p) {
        std::vector<double> f = forward_at(p);
        double r = 0.0;
        for (int i = 0; i < n_; ++i) r = std::max(r, std::abs(f[static_cast<std::size_t>(i)] - X[static_cast<std::size_t>(i)]));
        return std::pair<double, std::vector<double>>(r, std::move(f));
    };

    auto [res, fx] = residual_of(x);
    for (int iter = 0; iter < kNewtonMaxIter; ++iter) {
        if (res <= target) return x;
        Core core = core_at(x);
        Eigen::VectorXd rhs(n_);
        for (int i = 0; i < n_; ++i) rhs(i) = X[static_cast<std::size_t>(i)] - fx[static_cast<std::size_t>(i)];
        Eigen::VectorXd step = core.inv * rhs;

        // halve the step until the residual actually decreases
        double damping = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            std::vector<double> trial = x;
            for (int i = 0; i < n_; ++i) trial[static_cast<std::size_t>(i)] += damping * step(i);
            try {
                auto [trial_res, trial_f] = residual_of(trial);
                if (trial_res < res) {
                    x = std::move(trial);
                    res = trial_res;
                    fx = std::move(trial_f);
                    accepted = true;
                    break;
                }
            } catch (const DomainError&) {
                // step left the map's domain; shrink further
            }
            damping *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError(iter + 1, res, "newton step stalled inverting " + format_point(X));
    }
    if (res <= target) return x;
    throw ConvergenceError(kNewtonMaxIter, res, "inverting " + format_point(X));
}

ValidationReport DiffeoMap::validate_global(const std::vector<std::array<double, 2>>& box,
                                            int samples_per_axis) const {
    if (static_cast<int>(box.size()) != n_)
        throw ConfigError("validation box has wrong dimension");
    if (samples_per_axis < 2) throw ConfigError("need at least 2 samples per axis");
    for (const auto& [lo, hi] : box) {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw ConfigError("validation box bounds must be finite with lo < hi");
    }

    ValidationReport report;
    report.box = box;
    report.samples_per_axis = samples_per_axis;
    report.note = "lattice sampling is evidence, not proof, of a global diffeomorphism";

    std::vector<int> idx(static_cast<std::size_t>(n_), 0);
    long total = 1;
    for (int i = 0; i < n_; ++i) total *= samples_per_axis;
    report.total_samples = total;

    std::vector<double> x(static_cast<std::size_t>(n_));
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        for (int i = n_ - 1; i >= 0; --i) {
            idx[static_cast<std::size_t>(i)] = static_cast<int>(rem % samples_per_axis);
            rem /= samples_per_axis;
        }
        for (int i = 0; i < n_; ++i) {
            const auto& [lo, hi] = box[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] =
                lo + (hi - lo) * idx[static_cast<std::size_t>(i)] / (samples_per_axis - 1);
        }

        bool forward_ok = false;
        std::vector<double> fx;
        try {
            fx = forward_at(x);
            forward_ok = true;
            for (double v : fx) {
                if (!std::isfinite(v)) {
                    report.violations.push_back({Violation::Kind::NotFinite, x, v,
                                                 "forward image not finite"});
                    forward_ok = false;
                    break;
                }
            }
        } catch (const DomainError& e) {
            report.violations.push_back({Violation::Kind::ForwardEval, x, 0.0, e.what()});
        }

        try {
            (void)core_at(x);
        } catch (const SingularJacobian& e) {
            report.violations.push_back({Violation::Kind::Jacobian, x, e.det(), e.what()});
        }

        if (forward_ok && inverse_) {
            try {
                std::vector<double> back = inverse_at(fx);
                double dev = 0.0;
                double scale = 0.0;
                for (int i = 0; i < n_; ++i) {
                    dev = std::max(dev, std::abs(back[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]));
                    scale = std::max(scale, std::abs(x[static_cast<std::size_t>(i)]));
                }
                if (!(dev <= 1e-9 * (1.0 + scale)))
                    report.violations.push_back({Violation::Kind::RoundTrip, x, dev,
                                                 "inverse round trip deviates by " +
                                                     std::to_string(dev)});
            } catch (const DomainError& e) {
                report.violations.push_back({Violation::Kind::InverseEval, x, 0.0, e.what()});
            }
        }
    }
    return report;
}

} // namespace ptqm
