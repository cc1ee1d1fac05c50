#include "qcurv/numeric.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace qcurv {

namespace {

GaussRule compute_gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-like initial guess, then Newton on P_order(x) = 0.
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16 * (1.0 + std::abs(x))) {
                // one clean-up step
                p0 = 1.0;
                p1 = x;
                for (int k = 2; k <= order; ++k) {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = order * (x * p1 - p0) / (x * x - 1.0);
                x -= p1 / dp;
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[order - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[order - 1 - i] = w;
        rule.weights[i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

} // namespace

const GaussRule& gauss_legendre(int order) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
    return it->second;
}

std::vector<double> fd_weights(double x0, std::span<const double> stencil, int deriv) {
    // B. Fornberg, "Generation of finite difference formulas on arbitrarily
    // spaced grids", Math. Comp. 51 (1988).
    const int nd = static_cast<int>(stencil.size()) - 1;
    if (nd < deriv) throw std::invalid_argument("fd_weights: stencil too small for derivative");
    const int m = deriv;
    std::vector<double> c((nd + 1) * (m + 1), 0.0);
    auto C = [&](int i, int j) -> double& { return c[i * (m + 1) + j]; };
    double c1 = 1.0;
    double c4 = stencil[0] - x0;
    C(0, 0) = 1.0;
    for (int i = 1; i <= nd; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = stencil[i] - x0;
        for (int j = 0; j <= i - 1; ++j) {
            const double c3 = stencil[i] - stencil[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
                C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
            C(j, 0) = c4 * C(j, 0) / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(nd + 1);
    for (int i = 0; i <= nd; ++i) w[i] = C(i, m);
    return w;
}

MonotoneCubic::MonotoneCubic(std::span<const double> x, std::span<const double> y,
                             bool even_at_zero) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2)
        throw std::invalid_argument("MonotoneCubic: need >= 2 matching knots");
    x_.assign(x.begin(), x.end());
    y_.assign(y.begin(), y.end());
    d_.assign(n, 0.0);

    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (h[i] <= 0.0) throw std::invalid_argument("MonotoneCubic: knots not increasing");
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    // Fritsch-Carlson / PCHIP slopes: weighted harmonic mean where the secants
    // agree in sign, zero otherwise.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] > 0.0) {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0)
            d = 0.0;
        else if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0))
            d = 3.0 * d0;
        return d;
    };
    d_[0] = (n == 2) ? delta[0] : end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = (n == 2) ? delta[n - 2]
                         : end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    if (even_at_zero) {
        if (x_[0] != 0.0)
            throw std::invalid_argument("MonotoneCubic: even extension requires first knot 0");
        d_[0] = 0.0;
    }
}

double MonotoneCubic::operator()(double x) const {
    if (x_.empty()) throw std::logic_error("MonotoneCubic: empty interpolant");
    const std::size_t n = x_.size();
    if (x <= x_[0]) x = x_[0];
    if (x >= x_[n - 1]) x = x_[n - 1];
    // locate the interval by binary search
    std::size_t lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (x_[mid] <= x)
            lo = mid;
        else
            hi = mid;
    }
    if (x == x_[lo]) return y_[lo];
    if (x == x_[hi]) return y_[hi];
    const double h = x_[hi] - x_[lo];
    const double t = (x - x_[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[hi] + h11 * h * d_[hi];
}

} // namespace qcurv
