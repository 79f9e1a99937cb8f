#include "dsm/fit.hpp"
#include "dsm/errors.hpp"

#include <cmath>
#include <sstream>

namespace dsm {

namespace {

// Largest step fraction keeping theta + t*p at least margin inside the box.
double box_limit(const ChartSpec& c, const Vec& theta, const Vec& p, double margin) {
    double t = 1.0;
    for (int i = 0; i < c.dim(); ++i) {
        if (p(i) > 0 && std::isfinite(c.hi(i))) t = std::min(t, (c.hi(i) - margin - theta(i)) / p(i));
        if (p(i) < 0 && std::isfinite(c.lo(i))) t = std::min(t, (c.lo(i) + margin - theta(i)) / p(i));
    }
    return std::max(t, 0.0);
}

bool positive_definite(const Mat& H) {
    Eigen::LLT<Mat> llt(0.5 * (H + H.transpose()));
    return llt.info() == Eigen::Success;
}

} // namespace

FitResult fit(const ModelDefinition& m, const DataSet& x, const Vec& theta0, const FitOptions& opts) {
    m.chart.require(theta0);
    Vec theta = theta0;
    auto value = [&](const Vec& t) { return evaluate_divergence(m, x, t); };
    double f = value(theta);
    Vec g = divergence_gradient(m, x, theta, opts.numeric, opts.diff);
    int it = 0;
    for (; it < opts.max_iter && g.cwiseAbs().maxCoeff() > opts.grad_tol; ++it) {
        const Mat H = divergence_hessian(m, x, theta, opts.numeric, opts.diff);
        Vec p;
        bool newton = false;
        if (positive_definite(H)) {
            p = Eigen::LDLT<Mat>(0.5 * (H + H.transpose())).solve(-g);
            newton = p.allFinite() && g.dot(p) < 0;
        }
        if (!newton) p = -g;
        double t = box_limit(m.chart, theta, p, opts.boundary_margin);
        if (!newton) t = std::min(t, 1.0 / std::max(1.0, p.norm()));
        const double slope = g.dot(p);
        const double slack = 1e-14 * (1.0 + std::abs(f));
        bool accepted = false;
        for (int k = 0; k < 80 && t > 0; ++k, t *= opts.shrink) {
            const Vec trial = theta + t * p;
            if (!m.chart.contains(trial)) continue;
            double ft;
            try {
                ft = value(trial);
            } catch (const NumericalFailure&) {
                continue;
            }
            if (ft <= f + opts.armijo_c * t * slope + slack) {
                theta = trial;
                f = ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (g.cwiseAbs().maxCoeff() <= 10 * opts.grad_tol) break;
            std::ostringstream os;
            os << "line search failed for model '" << m.name << "' with gradient norm " << g.cwiseAbs().maxCoeff();
            throw NoConvergence(NoConvergence::Reason::LineSearch, os.str());
        }
        g = divergence_gradient(m, x, theta, opts.numeric, opts.diff);
    }
    FitResult r;
    r.theta_star = {theta, m.chart.id};
    r.divergence_value = f;
    r.gradient_norm = g.cwiseAbs().maxCoeff();
    r.iterations = it;
    r.converged = r.gradient_norm <= opts.grad_tol;
    if (!r.converged) {
        std::ostringstream os;
        os << "fit of model '" << m.name << "' stopped after " << it << " iterations with gradient norm "
           << r.gradient_norm;
        throw NoConvergence(NoConvergence::Reason::MaxIterations, os.str());
    }
    if (!positive_definite(divergence_hessian(m, x, theta, opts.numeric, opts.diff)))
        throw NoConvergence(NoConvergence::Reason::SaddleOrMax,
                            "stationary point of model '" + m.name + "' is a saddle or maximum, not a minimum");
    return r;
}

Vec closed_form_fit(const ModelDefinition& m, const DataSet& x) {
    if (!m.closed_form_fit) throw Unsupported("model '" + m.name + "' has no closed-form fit");
    auto t = m.closed_form_fit(x);
    if (!t) throw Unsupported("model '" + m.name + "' has no closed-form fit for a " + kind_name(x.kind()) + " data set");
    return *t;
}

} // namespace dsm
