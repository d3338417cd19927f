#include "spca/grassmann.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "spca/errors.hpp"

namespace spca {

namespace {
constexpr double kOrthoTol = 1e-8;
}

Eigen::MatrixXd qr_orthonormalize(const Eigen::MatrixXd& M) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), M.cols());
    Eigen::MatrixXd R = qr.matrixQR().topRows(M.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);
        if (std::abs(R(j, j)) < 1e-300 * std::max(1.0, M.norm()))
            throw NumericalError("cannot orthonormalize a rank-deficient basis");
    }
    return Q;
}

GrassmannPoint GrassmannPoint::from(Eigen::MatrixXd M) {
    if (M.rows() < M.cols() || M.cols() < 1)
        throw std::invalid_argument("subspace basis must be p x r with r <= p");
    GrassmannPoint g{std::move(M)};
    if (g.orthonormality_error() > kOrthoTol) g.L = qr_orthonormalize(g.L);
    return g;
}

double GrassmannPoint::orthonormality_error() const {
    return (L.transpose() * L - Eigen::MatrixXd::Identity(r(), r())).norm();
}

double chordal_distance(const Eigen::MatrixXd& L1, const Eigen::MatrixXd& L2) {
    return (L1 * L1.transpose() - L2 * L2.transpose()).norm() / std::sqrt(2.0);
}

Eigen::MatrixXd tangent_project(const Eigen::MatrixXd& L, const Eigen::MatrixXd& M) {
    if (L.rows() != M.rows() || L.cols() != M.cols())
        throw std::invalid_argument("tangent_project: dimension mismatch");
    return M - L * (L.transpose() * M);
}

GrassmannPoint geodesic_step(const GrassmannPoint& L, const Eigen::MatrixXd& C, double t) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::ArrayXd st = (s * t).array();
    Eigen::MatrixXd out = L.L * svd.matrixV() * st.cos().matrix().asDiagonal() *
                              svd.matrixV().transpose() +
                          svd.matrixU() * st.sin().matrix().asDiagonal() *
                              svd.matrixV().transpose();
    return GrassmannPoint::from(std::move(out));
}

namespace {

double inner(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return (A.array() * B.array()).sum();
}

struct GeodesicFactors {
    Eigen::MatrixXd U;
    Eigen::VectorXd S;
    Eigen::MatrixXd V;
};

GeodesicFactors compact_svd(const Eigen::MatrixXd& C) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Eigen::MatrixXd point_at(const Eigen::MatrixXd& L, const GeodesicFactors& f, double t) {
    const Eigen::ArrayXd st = (f.S * t).array();
    return L * f.V * st.cos().matrix().asDiagonal() * f.V.transpose() +
           f.U * st.sin().matrix().asDiagonal() * f.V.transpose();
}

} // namespace

McgdResult mcgd(const CostOracle& cost, const GrassmannPoint& L0, const McgdOptions& opts) {
    const Eigen::Index p = L0.p(), r = L0.r();
    Eigen::MatrixXd L = L0.L;
    if (L0.orthonormality_error() > kOrthoTol) L = qr_orthonormalize(L);

    double f = cost.eval(L);
    if (!std::isfinite(f)) throw NumericalError("mcgd: non-finite objective at iteration 0");
    Eigen::MatrixXd D = tangent_project(L, cost.euclidean_grad(L));
    if (!D.allFinite()) throw NumericalError("mcgd: non-finite gradient at iteration 0");
    double gn = D.norm();

    McgdResult res;
    res.trace.push_back(f);
    if (gn <= opts.grad_tol) {
        res.L = GrassmannPoint{L};
        res.converged = true;
        res.grad_norm = gn;
        return res;
    }

    Eigen::MatrixXd C = -D;
    const int reset_period = std::max<int>(1, static_cast<int>(r * (p - r)));
    double prev_step = 0.0;  // 0 means no accepted step yet
    bool converged = false;
    int k = 0;

    for (; k < opts.max_iters && !converged; ++k) {
        if (k > 0 && k % reset_period == 0) C = -D;

        double slope = inner(D, C);
        if (slope >= 0) {  // conjugate direction failed to descend
            C = -D;
            slope = -gn * gn;
        }

        GeodesicFactors fac = compact_svd(C);
        double smax = fac.S.size() ? fac.S(0) : 0.0;
        if (smax <= 0) throw NumericalError("mcgd: zero search direction at iteration " +
                                            std::to_string(k));

        // Armijo backtracking toward the printed algorithm's min_t along the
        // geodesic: a first-trial acceptance expands forward while the value
        // keeps improving, then a parabolic fit sharpens the minimizer. Every
        // candidate kept must still satisfy the sufficient-decrease condition.
        auto armijo = [&](const GeodesicFactors& gf, double sl, double t_init,
                          double& t_out) -> bool {
            auto value_at = [&](double t) { return cost.eval(point_at(L, gf, t)); };
            auto acceptable = [&](double t, double ft) {
                return ft <= f + opts.armijo_c * t * sl;
            };
            double t = t_init;
            for (int b = 0; b <= opts.max_backtracks; ++b) {
                const double ft = value_at(t);
                if (acceptable(t, ft)) {
                    double best_t = t, best_f = ft;
                    if (b == 0) {
                        for (int e = 0; e < 30; ++e) {
                            const double t2 = best_t * 2.0;
                            const double f2 = value_at(t2);
                            if (!(f2 < best_f) || !acceptable(t2, f2)) break;
                            best_t = t2;
                            best_f = f2;
                        }
                    }
                    for (int round = 0; round < 2; ++round) {
                        const double t1 = 0.5 * best_t, t3 = 2.0 * best_t;
                        const double f1 = value_at(t1), f3 = value_at(t3);
                        const double d21 = best_t - t1, d23 = best_t - t3;
                        const double num =
                            d21 * d21 * (best_f - f3) - d23 * d23 * (best_f - f1);
                        const double den = d21 * (best_f - f3) - d23 * (best_f - f1);
                        bool improved = false;
                        if (std::abs(den) > 1e-300) {
                            const double tv = best_t - 0.5 * num / den;
                            if (std::isfinite(tv) && tv > t1 && tv < t3) {
                                const double fv = value_at(tv);
                                if (fv < best_f && acceptable(tv, fv)) {
                                    best_t = tv;
                                    best_f = fv;
                                    improved = true;
                                }
                            }
                        }
                        if (!improved && f1 < best_f && acceptable(t1, f1)) {
                            best_t = t1;
                            best_f = f1;
                            improved = true;
                        }
                        if (!improved && f3 < best_f && acceptable(t3, f3)) {
                            best_t = t3;
                            best_f = f3;
                            improved = true;
                        }
                        if (!improved) break;
                    }
                    t_out = best_t;
                    return true;
                }
                t *= opts.backtrack;
            }
            return false;
        };

        double t = 0.0;
        double t_init = prev_step > 0 ? 2.0 * prev_step : 1.0 / smax;
        bool ok = armijo(fac, slope, t_init, t);
        if (!ok) {
            // fall back to steepest descent for this iteration
            C = -D;
            slope = -gn * gn;
            fac = compact_svd(C);
            smax = fac.S(0);
            ok = armijo(fac, slope, 1.0 / smax, t);
        }
        if (!ok) {
            // the smallest trial step cannot decrease the objective beyond
            // roundoff: stationary to machine precision
            const double t_min = (1.0 / smax) * std::pow(opts.backtrack, opts.max_backtracks);
            if (gn * gn * t_min <= 8.0 * std::numeric_limits<double>::epsilon() *
                                       std::max(1.0, std::abs(f))) {
                converged = true;
                break;
            }
            throw NumericalError("mcgd: line search failed at iteration " + std::to_string(k));
        }

        Eigen::MatrixXd L_new = point_at(L, fac, t);
        if ((L_new.transpose() * L_new - Eigen::MatrixXd::Identity(r, r)).norm() > kOrthoTol)
            L_new = qr_orthonormalize(L_new);

        const double f_new = cost.eval(L_new);
        if (!std::isfinite(f_new))
            throw NumericalError("mcgd: non-finite objective at iteration " + std::to_string(k + 1));
        Eigen::MatrixXd D_new = tangent_project(L_new, cost.euclidean_grad(L_new));
        if (!D_new.allFinite())
            throw NumericalError("mcgd: non-finite gradient at iteration " + std::to_string(k + 1));
        const double gn_new = D_new.norm();

        // parallel transport of the step direction and the old gradient
        const Eigen::ArrayXd st = (fac.S * t).array();
        const Eigen::MatrixXd sinSt = st.sin().matrix().asDiagonal();
        const Eigen::MatrixXd cosSt = st.cos().matrix().asDiagonal();
        const Eigen::MatrixXd tau_C =
            (-L * fac.V * sinSt + fac.U * cosSt) * fac.S.asDiagonal() * fac.V.transpose();
        const Eigen::MatrixXd tau_D =
            D - (L * fac.V * sinSt + fac.U * (Eigen::MatrixXd::Identity(r, r) - cosSt)) *
                    (fac.U.transpose() * D);

        const double denom = gn * gn;
        double d_k = 0.0;
        if (denom >= 1e-300) d_k = inner(D_new - tau_D, D_new) / denom;
        C = tangent_project(L_new, -D_new + d_k * tau_C);

        if (opts.observer)
            opts.observer(McgdIterate{k + 1, L_new, D_new, C, t, f_new});

        res.trace.push_back(f_new);
        if (gn_new <= opts.grad_tol ||
            std::abs(f - f_new) <= opts.rel_obj_tol * std::max(1.0, std::abs(f)))
            converged = true;

        L = std::move(L_new);
        D = std::move(D_new);
        f = f_new;
        gn = gn_new;
        prev_step = t;
    }

    res.L = GrassmannPoint{std::move(L)};
    res.converged = converged;
    res.iterations = k;
    res.grad_norm = gn;
    return res;
}

} // namespace spca
