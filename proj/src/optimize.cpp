#include "retas/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace retas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Counted {
    const Objective& f;
    long calls{0};

    double operator()(std::span<const double> x) {
        ++calls;
        const double v = f(x);
        return std::isfinite(v) ? v : kInf;
    }
};

bool small_change(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * (std::fabs(b) + tol);
}

struct SimplexOutcome {
    std::vector<double> best;
    double value;
    int iterations;
    double spread;
    bool converged;
};

SimplexOutcome nelder_mead(Counted& f, const std::vector<double>& x0, const OptimizeOptions& opt) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> v(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t k = 0; k < n; ++k) v[k + 1][k] += opt.initial_step;
    for (std::size_t k = 0; k <= n; ++k) fv[k] = f(v[k]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    int it = 0;
    bool converged = false;
    for (;; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t lo = order.front(), hi = order.back(), next = order[n - 1];
        if (std::isfinite(fv[hi]) && small_change(fv[hi], fv[lo], opt.rel_tol)) {
            converged = true;
            break;
        }
        if (it >= opt.max_simplex_iterations) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k <= n; ++k)
            if (k != hi)
                for (std::size_t d = 0; d < n; ++d) centroid[d] += v[k][d] / static_cast<double>(n);

        for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + (centroid[d] - v[hi][d]);
        const double fr = f(xr);
        if (fr < fv[lo]) {
            for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + 2.0 * (centroid[d] - v[hi][d]);
            const double fe = f(xe);
            if (fe < fr) {
                v[hi] = xe;
                fv[hi] = fe;
            } else {
                v[hi] = xr;
                fv[hi] = fr;
            }
            continue;
        }
        if (fr < fv[next]) {
            v[hi] = xr;
            fv[hi] = fr;
            continue;
        }
        const bool outside = fr < fv[hi];
        for (std::size_t d = 0; d < n; ++d)
            xc[d] = outside ? centroid[d] + 0.5 * (xr[d] - centroid[d]) : centroid[d] + 0.5 * (v[hi][d] - centroid[d]);
        const double fc = f(xc);
        if (fc < (outside ? fr : fv[hi])) {
            v[hi] = xc;
            fv[hi] = fc;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == lo) continue;
            for (std::size_t d = 0; d < n; ++d) v[k][d] = v[lo][d] + 0.5 * (v[k][d] - v[lo][d]);
            fv[k] = f(v[k]);
        }
    }
    const auto lo = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    const double spread = *std::max_element(fv.begin(), fv.end()) - fv[lo];
    return {v[lo], fv[lo], it, spread, converged};
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

} // namespace

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double h) {
    std::vector<double> g(x.size());
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double step = h * (1.0 + std::fabs(x[k]));
        xp[k] = x[k] + step;
        const double fp = f(xp);
        xp[k] = x[k] - step;
        const double fm = f(xp);
        xp[k] = x[k];
        g[k] = (fp - fm) / (2.0 * step);
    }
    return g;
}

OptimizeResult minimize(const Objective& objective, std::vector<double> x0, const OptimizeOptions& opt) {
    Counted f{objective};
    OptimizeResult out;
    const std::size_t n = x0.size();
    if (n == 0) {
        out.x = x0;
        out.value = f(x0);
        out.converged = true;
        out.evaluations = f.calls;
        return out;
    }

    const SimplexOutcome nm = nelder_mead(f, x0, opt);
    out.simplex_iterations = nm.iterations;
    out.simplex_spread = nm.spread;

    // BFGS polish with backtracking line search.
    const Objective counted = [&f](std::span<const double> x) { return f(x); };
    std::vector<double> x = nm.best;
    double fx = nm.value;
    std::vector<double> g = fd_gradient(counted, x);
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) H[k][k] = 1.0;
    bool polished = false;
    int it = 0;
    std::vector<double> dir(n), xn(n), s(n), y(n), Hy(n);
    for (; it < opt.max_polish_iterations; ++it) {
        if (!std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); })) break;
        for (std::size_t r = 0; r < n; ++r) {
            dir[r] = 0.0;
            for (std::size_t c = 0; c < n; ++c) dir[r] -= H[r][c] * g[c];
        }
        double slope = dot(dir, g);
        if (!(slope < 0.0)) {
            // Not a descent direction: reset to steepest descent.
            for (std::size_t k = 0; k < n; ++k) {
                std::fill(H[k].begin(), H[k].end(), 0.0);
                H[k][k] = 1.0;
                dir[k] = -g[k];
            }
            slope = dot(dir, g);
            if (!(slope < 0.0)) {
                polished = true;
                break;
            }
        }
        double step = 1.0;
        double fn = kInf;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t k = 0; k < n; ++k) xn[k] = x[k] + step * dir[k];
            fn = f(xn);
            if (fn <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            polished = true;  // no further decrease resolvable at this precision
            break;
        }
        const bool tiny = small_change(fn, fx, opt.rel_tol);
        std::vector<double> gn = fd_gradient(counted, xn);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = xn[k] - x[k];
            y[k] = gn[k] - g[k];
        }
        x = xn;
        fx = fn;
        g = gn;
        if (tiny) {
            polished = true;
            ++it;
            break;
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            for (std::size_t r = 0; r < n; ++r) {
                Hy[r] = 0.0;
                for (std::size_t c = 0; c < n; ++c) Hy[r] += H[r][c] * y[c];
            }
            const double yHy = dot(y, Hy);
            const double rho = 1.0 / sy;
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c)
                    H[r][c] += (1.0 + yHy * rho) * rho * s[r] * s[c] - rho * (Hy[r] * s[c] + s[r] * Hy[c]);
        }
    }
    out.x = x;
    out.value = fx;
    out.polish_iterations = it;
    out.gradient_norm = inf_norm(g);
    out.converged = polished;
    out.evaluations = f.calls;
    return out;
}

} // namespace retas
