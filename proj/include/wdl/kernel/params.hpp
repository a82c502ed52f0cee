#pragma once

#include <Eigen/Dense>

namespace wdl::kernel {

/// Problem constants of the widely degenerate operator and its regularization.
///
/// `p` is the growth exponent, `lambda` the radius of the degeneracy ball in
/// gradient space, `eps` the weight of the uniformly elliptic regularizing
/// term. `n` is the spatial dimension used by the pointwise functions; the
/// discrete experiments fix it to 2.
struct Params {
    int n = 2;
    double p = 2.0;
    double lambda = 0.0;
    double eps = 0.0;

    /// Validating constructor; throws InvalidArgument on n < 2, p <= 1,
    /// lambda < 0 or eps outside [0, 1].
    static Params make(int n, double p, double lambda, double eps);

    void validate() const;

    [[nodiscard]] Params with_eps(double e) const;

    /// Hoelder conjugate p' = p / (p - 1).
    [[nodiscard]] double conjugate() const { return p / (p - 1.0); }

    /// Lebesgue exponent of the datum in the sub-quadratic regime,
    /// np / (n(p-1) + 2 - p).
    [[nodiscard]] double subquadratic_exponent() const
    {
        return n * p / (n * (p - 1.0) + 2.0 - p);
    }

    [[nodiscard]] bool superquadratic() const { return p > 2.0; }
};

using VecN = Eigen::VectorXd;
using MatN = Eigen::MatrixXd;

} // namespace wdl::kernel
