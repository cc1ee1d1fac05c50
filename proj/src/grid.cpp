#include "qcurv/grid.hpp"

#include "qcurv/simd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>

namespace qcurv {

namespace {

double pow_int(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

/// Upper incomplete gamma Γ(s, x), x > 0, via Lentz continued fraction for
/// x > s+1 and the lower series otherwise. Accuracy ~1e-14, ample for tail
/// estimates.
double upper_incomplete_gamma(double s, double x) {
    if (x <= 0.0) return std::tgamma(s);
    const double log_prefac = s * std::log(x) - x;
    if (x > s + 1.0) {
        // Γ(s,x) = e^{-x} x^s / (x + 1 - s - 1/(x+3-s - 2(2-s)/(x+5-s-...)))
        double b = x + 1.0 - s;
        double c = 1e308, d = 1.0 / b, h = d;
        for (int i = 1; i < 300; ++i) {
            const double an = -i * (i - s);
            b += 2.0;
            d = an * d + b;
            if (std::abs(d) < 1e-300) d = 1e-300;
            c = b + an / c;
            if (std::abs(c) < 1e-300) c = 1e-300;
            d = 1.0 / d;
            const double delta = d * c;
            h *= delta;
            if (std::abs(delta - 1.0) < 1e-16) break;
        }
        if (log_prefac < -700.0) return 0.0;
        return std::exp(log_prefac) * h;
    }
    // lower series: γ(s,x) = e^{-x} x^s Σ x^k / (s(s+1)...(s+k))
    double term = 1.0 / s, sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= x / (s + k);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    const double lower = std::exp(log_prefac) * sum;
    return std::tgamma(s) - lower;
}

/// ∫_R^∞ s^{n-1} tail(s) ds for the supported decay models.
double tail_line_integral(const TailModel& tm, int n, double R) {
    switch (tm.kind) {
        case TailModel::Kind::None:
            return 0.0;
        case TailModel::Kind::PowerLaw: {
            if (tm.rate <= n)
                throw std::invalid_argument("TailModel: power decay must exceed the dimension");
            return tm.coeff * std::pow(R, n - tm.rate) / (tm.rate - n);
        }
        case TailModel::Kind::GaussianExp: {
            if (tm.rate <= 0.0) throw std::invalid_argument("TailModel: gaussian rate must be > 0");
            const double s = 0.5 * n;
            return tm.coeff * 0.5 * std::pow(tm.rate, -s) *
                   upper_incomplete_gamma(s, tm.rate * R * R);
        }
        case TailModel::Kind::QuarticExp: {
            if (tm.rate <= 0.0) throw std::invalid_argument("TailModel: quartic rate must be > 0");
            const double s = 0.25 * n;
            return tm.coeff * 0.25 * std::pow(tm.rate, -s) *
                   upper_incomplete_gamma(s, tm.rate * R * R * R * R);
        }
    }
    return 0.0;
}

std::vector<CellRule> build_cell_rules(const std::vector<double>& nodes, int p) {
    const int M = static_cast<int>(nodes.size()) - 1;
    std::vector<CellRule> rules(M);

    const int q = std::max(5, (p + 6) / 2);  // exact for degree p+4 integrands
    const GaussRule& gl = gauss_legendre(q);

    // Cells 1..M-4 interpolate f on forward stencils {j .. j+4}; outward-looking
    // stencils keep every accumulated weight positive on graded nodes, which
    // centered stencils violate at the origin. The first and the last three
    // cells fall back to the linear basis (the first so the origin weight is a
    // plain positive moment, the last because clamped quartic stencils can turn
    // weights negative under strong grading; integrands there are tail-small).
    for (int j = 0; j < M; ++j) {
        CellRule& c = rules[j];
        if (j == 0 || j >= M - 3) {
            c.first = j;
            c.count = 2;
        } else {
            c.first = j;
            c.count = 5;
        }
        const double a = nodes[j], b = nodes[j + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double xs[5];
        for (int m = 0; m < c.count; ++m) xs[m] = nodes[c.first + m];
        for (int k = 0; k < q; ++k) {
            const double x = mid + half * gl.nodes[k];
            const double wq = half * gl.weights[k] * pow_int(x, p);
            for (int m = 0; m < c.count; ++m) {
                double ell = 1.0;
                for (int l = 0; l < c.count; ++l)
                    if (l != m) ell *= (x - xs[l]) / (xs[m] - xs[l]);
                c.beta[m] += wq * ell;
            }
        }
    }
    return rules;
}

std::vector<double> accumulate_weights(const std::vector<CellRule>& rules, std::size_t n_nodes) {
    std::vector<double> w(n_nodes, 0.0);
    for (const CellRule& c : rules)
        for (int m = 0; m < c.count; ++m) w[c.first + m] += c.beta[m];
    return w;
}

} // namespace

struct RadialGrid::Cache {
    std::mutex mtx;
    std::map<int, std::vector<double>> weights;
};

std::shared_ptr<const RadialGrid> RadialGrid::build(int n, double r_max, int cells,
                                                    double grading) {
    if (cells < 64) throw std::invalid_argument("RadialGrid: need at least 64 cells");
    if (r_max < 10.0) throw std::invalid_argument("RadialGrid: r_max must be >= 10");
    if (!(grading >= 1.0) || !std::isfinite(grading))
        throw std::invalid_argument(
            "RadialGrid: grading must be >= 1 (nodes cluster at the origin)");

    auto g = std::shared_ptr<RadialGrid>(new RadialGrid());
    g->consts_ = DimensionalConstants::make(n);
    g->r_max_ = r_max;
    g->grading_ = grading;
    g->cells_ = cells;
    g->nodes_.resize(cells + 1);
    for (int j = 0; j <= cells; ++j)
        g->nodes_[j] = r_max * std::pow(static_cast<double>(j) / cells, grading);
    g->nodes_[0] = 0.0;
    g->nodes_[cells] = r_max;
    for (int j = 0; j < cells; ++j)
        if (!(g->nodes_[j] < g->nodes_[j + 1]))
            throw std::invalid_argument("RadialGrid: non-monotone node parameterization");

    g->cache_ = std::make_shared<Cache>();
    const std::vector<double>& w = g->measure_weights(n - 1);
    g->vol_weights_.resize(w.size());
    for (std::size_t j = 0; j < w.size(); ++j)
        g->vol_weights_[j] = g->consts_.omega_nm1 * w[j];

    // construction self-check: the rule must reproduce the ball volume
    double sum = 0.0;
    for (double x : g->vol_weights_) sum += x;
    const double vol = g->ball_volume();
    if (std::abs(sum - vol) > 1e-12 * vol)
        throw std::runtime_error("RadialGrid: quadrature fails ball-volume check");
    return g;
}

const std::vector<double>& RadialGrid::measure_weights(int p) const {
    if (p < 0) throw std::invalid_argument("measure_weights: p must be >= 0");
    std::lock_guard<std::mutex> lock(cache_->mtx);
    auto it = cache_->weights.find(p);
    if (it == cache_->weights.end()) {
        auto w = accumulate_weights(build_cell_rules(nodes_, p), nodes_.size());
        if (p == consts_.n - 1) {
            // the grid's quadrature weights proper must be positive; auxiliary
            // measures (s^{n-3}, s^0) may carry small signed origin corrections
            for (double x : w)
                if (!(x > 0.0))
                    throw std::runtime_error("RadialGrid: nonpositive quadrature weight");
        }
        it = cache_->weights.emplace(p, std::move(w)).first;
    }
    return it->second;
}

std::vector<CellRule> RadialGrid::cell_rules(int p) const { return build_cell_rules(nodes_, p); }

double RadialGrid::ball_volume() const {
    return consts_.omega_nm1 * pow_int(r_max_, consts_.n) / consts_.n;
}

std::size_t RadialGrid::first_index_at_or_above(double r) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), r);
    return static_cast<std::size_t>(it - nodes_.begin());
}

RadialFunction::RadialFunction(std::shared_ptr<const RadialGrid> g, double fill)
    : grid(std::move(g)), values(grid->size(), fill) {}

RadialFunction RadialFunction::sample(std::shared_ptr<const RadialGrid> g,
                                      const std::function<double(double)>& f) {
    RadialFunction out(std::move(g));
    const auto& r = out.grid->nodes();
    for (std::size_t j = 0; j < r.size(); ++j) out.values[j] = f(r[j]);
    return out;
}

bool RadialFunction::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

MonotoneCubic RadialFunction::interpolant() const {
    return MonotoneCubic(grid->nodes(), values, /*even_at_zero=*/true);
}

double RadialFunction::eval(double r) const {
    const auto& nodes = grid->nodes();
    auto it = std::lower_bound(nodes.begin(), nodes.end(), r);
    if (it != nodes.end() && *it == r) return values[it - nodes.begin()];
    return interpolant()(r);
}

void RadialFunction::write_csv(std::ostream& os) const {
    os << "r,value\n";
    char buf[64];
    const auto& r = grid->nodes();
    for (std::size_t j = 0; j < values.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", r[j], values[j]);
        os << buf;
    }
}

IntegralResult integrate_radial(const RadialGrid& grid, std::span<const double> f,
                                const TailModel& tail) {
    if (f.size() != grid.size()) throw std::invalid_argument("integrate_radial: size mismatch");
    for (double v : f)
        if (std::isnan(v)) throw std::invalid_argument("integrate_radial: NaN in values");
    const auto& w = grid.volume_weights();
    IntegralResult out;
    out.tail = grid.constants().omega_nm1 *
               tail_line_integral(tail, grid.dimension(), grid.r_max());
    out.value = simd::dot(w.data(), f.data(), f.size()) + out.tail;
    return out;
}

IntegralResult integrate_radial(const RadialFunction& f, const TailModel& tail) {
    return integrate_radial(*f.grid, f.values, tail);
}

RadialFunction radial_laplacian(const RadialFunction& f) {
    const auto& r = f.grid->nodes();
    const std::size_t M = r.size();
    if (M < 5 || f.values.size() < 5)
        throw std::invalid_argument("radial_laplacian: need at least 5 nodes");
    if (f.values.size() != M)
        throw std::invalid_argument("radial_laplacian: value count does not match the grid");
    const int n = f.grid->dimension();
    RadialFunction out(f.grid);

    auto stencil_d1d2 = [&](std::span<const double> xs, std::span<const double> ys, double x0,
                            double& d1, double& d2) {
        const auto w1 = fd_weights(x0, xs, 1);
        const auto w2 = fd_weights(x0, xs, 2);
        d1 = d2 = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            d1 += w1[k] * ys[k];
            d2 += w2[k] * ys[k];
        }
    };

    for (std::size_t j = 0; j < M; ++j) {
        double xs[5], ys[5];
        if (j == 0) {
            // even extension: ghost nodes at -r2, -r1
            xs[0] = -r[2]; xs[1] = -r[1]; xs[2] = 0.0; xs[3] = r[1]; xs[4] = r[2];
            ys[0] = f[2];  ys[1] = f[1];  ys[2] = f[0]; ys[3] = f[1]; ys[4] = f[2];
            double d1, d2;
            stencil_d1d2(xs, ys, 0.0, d1, d2);
            out[0] = n * d2;
            continue;
        }
        if (j == 1) {
            xs[0] = -r[1]; xs[1] = 0.0; xs[2] = r[1]; xs[3] = r[2]; xs[4] = r[3];
            ys[0] = f[1];  ys[1] = f[0]; ys[2] = f[1]; ys[3] = f[2]; ys[4] = f[3];
        } else {
            const std::size_t lo = std::min(std::max<std::size_t>(j, 2) - 2, M - 5);
            for (int k = 0; k < 5; ++k) {
                xs[k] = r[lo + k];
                ys[k] = f[lo + k];
            }
        }
        double d1, d2;
        stencil_d1d2(xs, ys, r[j], d1, d2);
        out[j] = d2 + (n - 1) * d1 / r[j];
    }
    return out;
}

} // namespace qcurv
