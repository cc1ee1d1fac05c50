#include "qcurv/kernel.hpp"

#include "qcurv/simd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace qcurv {

namespace {

double pow_int(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

/// ∫_0^π sin^{n-2}θ dθ
double sin_power_integral(int n) {
    return std::sqrt(M_PI) * gamma_half_integer(n - 1) / gamma_half_integer(n);
}

/// Quadrature tables for the polar-angle integral, all normalization folded
/// into the weights. The single 64-point panel serves pairs away from the
/// diagonal; near it the integrand develops a log endpoint singularity at
/// θ = 0 and is integrated on a fixed dyadic panel ladder [0, π 2^-26], ...,
/// [π/2, π] (12-point Gauss each) against the cancellation-safe argument
/// (r-s)^2 + 4 r s sin^2(θ/2), whose sin^2(θ/2) values are precomputed.
struct ThetaTable {
    std::vector<double> cosv, w;          // single panel: Σ w log(A - B cos θ)
    std::vector<double> s2half, ladder_w; // ladder: Σ w log(dr2 + 2B sin^2(θ/2))
};

const ThetaTable& theta_table(int n) {
    static std::map<int, ThetaTable> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) {
        const double inv2d = 0.5 / sin_power_integral(n);
        ThetaTable t;
        {
            const GaussRule& gl = gauss_legendre(64);
            t.cosv.resize(64);
            t.w.resize(64);
            for (int k = 0; k < 64; ++k) {
                const double theta = 0.5 * M_PI * (gl.nodes[k] + 1.0);
                t.cosv[k] = std::cos(theta);
                t.w[k] = 0.5 * M_PI * gl.weights[k] * pow_int(std::sin(theta), n - 2) * inv2d;
            }
        }
        {
            const GaussRule& gl = gauss_legendre(12);
            double hi = M_PI;
            std::vector<double> breaks{M_PI};
            for (int k = 0; k < 26; ++k) breaks.push_back(hi *= 0.5);
            breaks.push_back(0.0);
            for (std::size_t p = breaks.size() - 1; p > 0; --p) {
                const double a = breaks[p], b = breaks[p - 1];
                const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
                for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                    const double theta = mid + half * gl.nodes[k];
                    const double sh = std::sin(0.5 * theta);
                    t.s2half.push_back(sh * sh);
                    t.ladder_w.push_back(half * gl.weights[k] *
                                         pow_int(std::sin(theta), n - 2) * inv2d);
                }
            }
        }
        it = cache.emplace(n, std::move(t)).first;
    }
    return it->second;
}

void check_rs(int n, double r, double s) {
    if (n < 3) throw std::domain_error("ring_kernel: n must be >= 3");
    if (r < 0.0 || s < 0.0) throw std::invalid_argument("ring_kernel: negative radius");
    if (r == 0.0 && s == 0.0)
        throw std::invalid_argument("ring_kernel: singular input r = s = 0");
}

} // namespace

double ring_kernel_closed3(double r, double s) {
    if (r <= 0.0 || s <= 0.0) throw std::invalid_argument("ring_kernel_closed3: need r, s > 0");
    const double sum = r + s;
    const double diff = r - s;
    const double t1 = sum * sum * std::log(sum);
    const double t2 = (diff == 0.0) ? 0.0 : diff * diff * std::log(std::abs(diff));
    return 0.5 - (t1 - t2) / (4.0 * r * s);
}

double ring_kernel_theta_quad(int n, double r, double s) {
    check_rs(n, r, s);
    if (r == 0.0) return -std::log(s);
    if (s == 0.0) return -std::log(r);

    const double dr2 = (r - s) * (r - s);
    const double B = 2.0 * r * s;
    const double qhat = dr2 / (2.0 * B);  // (r-s)^2 / (4 r s)
    const ThetaTable& t = theta_table(n);

    if (qhat >= 0.04) {
        const double A = r * r + s * s;
        return -simd::log_quad_sum(A, B, t.cosv.data(), t.w.data(), t.cosv.size());
    }
    // dr2 + 2B sin^2(θ/2) = dr2 - (-2B) u with u = sin^2(θ/2)
    return -simd::log_quad_sum(dr2, -2.0 * B, t.s2half.data(), t.ladder_w.data(),
                               t.s2half.size());
}

double ring_kernel(int n, double r, double s) {
    check_rs(n, r, s);
    if (r == 0.0) return -std::log(s);
    if (s == 0.0) return -std::log(r);
    const double mx = std::max(r, s), mn = std::min(r, s);
    const double u = mn / mx;
    if (u < 1e-4) {
        // far-field expansion: -log(max) - (n-2)/(2n) u^2 + O(u^4)
        return -std::log(mx) - (n - 2) / (2.0 * n) * u * u;
    }
    if (n == 3) return ring_kernel_closed3(r, s);
    return ring_kernel_theta_quad(n, r, s);
}

namespace {

void parallel_rows(std::size_t rows, const std::function<void(std::size_t)>& body) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw < 2 || rows < 64) {
        for (std::size_t i = 0; i < rows; ++i) body(i);
        return;
    }
    hw = std::min(hw, 8u);
    std::vector<std::thread> pool;
    pool.reserve(hw);
    for (unsigned t = 0; t < hw; ++t)
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < rows; i += hw) body(i);
        });
    for (auto& th : pool) th.join();
}

/// Lagrange basis value for stencil node m at abscissa x.
double lagrange(const double* xs, int count, int m, double x) {
    double ell = 1.0;
    for (int l = 0; l < count; ++l)
        if (l != m) ell *= (x - xs[l]) / (xs[m] - xs[l]);
    return ell;
}

} // namespace

KernelOperator KernelOperator::assemble(std::shared_ptr<const RadialGrid> grid) {
    const int n = grid->dimension();
    const auto& r = grid->nodes();
    const std::size_t N = r.size();
    const int M = grid->cell_count();
    const DimensionalConstants& C = grid->constants();
    const double scale = C.omega_nm1 / C.gamma_n;

    KernelOperator op;
    op.grid_ = grid;
    op.matrix_.assign(N * N, 0.0);

    // symmetric kernel values at node pairs; (0,0) stays a placeholder, the
    // origin cell of row 0 is rebuilt exactly below
    std::vector<double> kmat(N * N, 0.0);
    parallel_rows(N, [&](std::size_t i) {
        for (std::size_t j = i; j < N; ++j) {
            if (i == 0 && j == 0) continue;
            const double v = ring_kernel(n, r[i], r[j]);
            kmat[i * N + j] = v;
            kmat[j * N + i] = v;
        }
    });

    const std::vector<CellRule> cells = grid->cell_rules(n - 1);
    const std::vector<double>& w = grid->measure_weights(n - 1);
    const GaussRule& gl8 = gauss_legendre(8);

    parallel_rows(N, [&](std::size_t i) {
        double* row = op.matrix_.data() + i * N;
        const double* krow = kmat.data() + i * N;
        for (std::size_t j = 0; j < N; ++j) row[j] = scale * w[j] * krow[j];

        // local subdivision of the cells nearest the diagonal node r_i
        const int ci = static_cast<int>(i);
        for (int c = ci - 1; c <= ci + 1; ++c) {
            if (c < 0 || c >= M) continue;
            const CellRule& cell = cells[c];
            // remove this cell's product-rule contribution
            for (int m = 0; m < cell.count; ++m)
                row[cell.first + m] -= scale * cell.beta[m] * krow[cell.first + m];

            const double a = r[c], b = r[c + 1];
            double xs[5];
            for (int m = 0; m < cell.count; ++m) xs[m] = r[cell.first + m];

            if (i == 0 && c == 0) {
                // exact moments of -log s against the linear basis on [0, r_1]
                auto Iq = [&](int q) {
                    return pow_int(b, q + 1) * (std::log(b) / (q + 1) - 1.0 / ((q + 1) * (q + 1)));
                };
                const double In1 = Iq(n - 1), In = Iq(n);
                row[0] += scale * (-(In1 - In / b));
                row[1] += scale * (-(In / b));
                continue;
            }

            // 4 subpanels graded toward the kink endpoint when r_i touches the cell
            double breaks[5];
            const double h = b - a;
            if (ci == c) {
                const double f[5] = {0, 0.125, 0.25, 0.5, 1};
                for (int k = 0; k < 5; ++k) breaks[k] = a + f[k] * h;
            } else if (ci == c + 1) {
                const double f[5] = {0, 0.5, 0.75, 0.875, 1};
                for (int k = 0; k < 5; ++k) breaks[k] = a + f[k] * h;
            } else {
                for (int k = 0; k < 5; ++k) breaks[k] = a + 0.25 * k * h;
            }
            for (int pnl = 0; pnl < 4; ++pnl) {
                const double mid = 0.5 * (breaks[pnl] + breaks[pnl + 1]);
                const double half = 0.5 * (breaks[pnl + 1] - breaks[pnl]);
                for (std::size_t k = 0; k < gl8.nodes.size(); ++k) {
                    const double x = mid + half * gl8.nodes[k];
                    const double common =
                        half * gl8.weights[k] * ring_kernel(n, r[i], x) * pow_int(x, n - 1);
                    for (int m = 0; m < cell.count; ++m)
                        row[cell.first + m] += scale * common * lagrange(xs, cell.count, m, x);
                }
            }
        }
    });

    const std::vector<double>& wl = grid->measure_weights(n - 3);
    op.lap0_w_.resize(N);
    const double lscale = -(n - 2) * C.omega_nm1 / C.gamma_n;
    for (std::size_t j = 0; j < N; ++j) op.lap0_w_[j] = lscale * wl[j];
    return op;
}

void KernelOperator::apply(std::span<const double> density, std::span<double> out) const {
    const std::size_t N = grid_->size();
    if (density.size() != N || out.size() != N)
        throw std::invalid_argument("KernelOperator::apply: grid mismatch");
    for (double v : density)
        if (!std::isfinite(v)) throw std::invalid_argument("KernelOperator::apply: non-finite density");
    simd::matvec(matrix_.data(), density.data(), out.data(), N, N);
}

RadialFunction KernelOperator::apply(const RadialFunction& density) const {
    if (density.grid.get() != grid_.get())
        throw std::invalid_argument("KernelOperator::apply: density lives on a different grid");
    RadialFunction out(grid_);
    apply(density.values, out.values);
    return out;
}

double KernelOperator::lap0(std::span<const double> density) const {
    if (density.size() != grid_->size())
        throw std::invalid_argument("KernelOperator::lap0: grid mismatch");
    return simd::dot(lap0_w_.data(), density.data(), density.size());
}

void KernelOperator::perturb_entry(std::size_t i, std::size_t j, double delta) {
    matrix_.at(i * grid_->size() + j) += delta;
}

namespace {
constexpr char kCacheMagic[8] = {'Q', 'C', 'K', 'R', 'N', 'L', '0', '1'};
}

void KernelOperator::save(const std::filesystem::path& path) const {
    static_assert(std::endian::native == std::endian::little,
                  "kernel cache format is little-endian");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("kernel cache: cannot open " + path.string());
    const std::int32_t n = grid_->dimension();
    const std::int64_t cells = grid_->cell_count();
    const double rmax = grid_->r_max(), grading = grid_->grading();
    os.write(kCacheMagic, 8);
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&cells), sizeof cells);
    os.write(reinterpret_cast<const char*>(&rmax), sizeof rmax);
    os.write(reinterpret_cast<const char*>(&grading), sizeof grading);
    os.write(reinterpret_cast<const char*>(matrix_.data()),
             static_cast<std::streamsize>(matrix_.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(lap0_w_.data()),
             static_cast<std::streamsize>(lap0_w_.size() * sizeof(double)));
    if (!os) throw std::runtime_error("kernel cache: write failed for " + path.string());
}

std::optional<KernelOperator> KernelOperator::load(const std::filesystem::path& path,
                                                   std::shared_ptr<const RadialGrid> grid) {
    static_assert(std::endian::native == std::endian::little,
                  "kernel cache format is little-endian");
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    char magic[8];
    std::int32_t n = 0;
    std::int64_t cells = 0;
    double rmax = 0, grading = 0;
    is.read(magic, 8);
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    is.read(reinterpret_cast<char*>(&cells), sizeof cells);
    is.read(reinterpret_cast<char*>(&rmax), sizeof rmax);
    is.read(reinterpret_cast<char*>(&grading), sizeof grading);
    if (!is || std::memcmp(magic, kCacheMagic, 8) != 0) return std::nullopt;
    if (n != grid->dimension() || cells != grid->cell_count() || rmax != grid->r_max() ||
        grading != grid->grading())
        return std::nullopt;
    const std::size_t N = grid->size();
    KernelOperator op;
    op.grid_ = std::move(grid);
    op.matrix_.resize(N * N);
    op.lap0_w_.resize(N);
    is.read(reinterpret_cast<char*>(op.matrix_.data()),
            static_cast<std::streamsize>(N * N * sizeof(double)));
    is.read(reinterpret_cast<char*>(op.lap0_w_.data()),
            static_cast<std::streamsize>(N * sizeof(double)));
    if (!is) return std::nullopt;
    return op;
}

} // namespace qcurv
