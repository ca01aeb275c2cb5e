#include "maglorentz/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <fmt/format.h>
#include <gsl/gsl_integration.h>

namespace mlg
{
namespace
{
constexpr double pi = std::numbers::pi;
constexpr double singular_tolerance = 1e-13;
constexpr long max_table_size = 5'000'000;
constexpr int max_series_terms = 100'000;

struct GlTableDeleter
{
    void operator()(gsl_integration_glfixed_table* t) const
    {
        gsl_integration_glfixed_table_free(t);
    }
};

/*!
 * kappa_n for n = 0 .. n_max.
 *
 * In the deflection variable the weight is 1/2 sin(theta/2) on [0, pi],
 * which is smooth, so composite Gauss-Legendre converges spectrally. Panels
 * are sized for the highest harmonic; cos(n theta) is advanced by complex
 * rotation and resynchronized every 64 steps.
 */
std::vector<double> kappa_table(long n_max, int order)
{
    if (order < 32)
    {
        throw std::invalid_argument("quadrature order must be >= 32");
    }
    if (n_max > max_table_size)
    {
        throw std::invalid_argument(fmt::format(
            "memory series needs harmonics up to {}; increase mu T", n_max));
    }
    std::vector<double> kappa(static_cast<std::size_t>(n_max) + 1, 0.0);
    std::unique_ptr<gsl_integration_glfixed_table, GlTableDeleter> table(
        gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(order)));
    long panels = std::max<long>(1, (8 * n_max + order - 1) / order);
    double width = pi / static_cast<double>(panels);
    for (long p = 0; p < panels; ++p)
    {
        double a = p * width;
        for (int i = 0; i < order; ++i)
        {
            double x = 0, w = 0;
            gsl_integration_glfixed_point(a, a + width, static_cast<std::size_t>(i), &x,
                                          &w, table.get());
            w *= 0.5 * std::sin(0.5 * x);
            cdouble step = std::polar(1.0, x);
            cdouble z = 1;
            for (long n = 0; n <= n_max; ++n)
            {
                if (n % 64 == 0)
                {
                    z = std::polar(1.0, static_cast<double>(n) * x);
                }
                kappa[static_cast<std::size_t>(n)] += w * z.real();
                z *= step;
            }
        }
    }
    kappa[0] = 1;
    return kappa;
}

void check_modes(int M_modes)
{
    if (M_modes < 1)
    {
        throw std::invalid_argument("operators: M_modes must be >= 1");
    }
}

int resolve_cutoff(double mu, double T, int K_cut)
{
    int needed = memory_cutoff(mu, T);
    if (K_cut == 0)
    {
        return needed;
    }
    if (K_cut < needed)
    {
        throw std::invalid_argument(fmt::format(
            "K_cut = {} insufficient: exp(-2 mu K T) must be < {} (needs K_cut >= {})",
            K_cut, memory_tolerance, needed));
    }
    return K_cut;
}

double max_abs(std::span<double const> g)
{
    double m = 0;
    for (double x : g)
    {
        m = std::max(m, std::abs(x));
    }
    return m;
}

void require_zero_mean(std::span<double const> g, char const* who)
{
    double mean = 0;
    for (double x : g)
    {
        mean += x;
    }
    mean /= static_cast<double>(g.size());
    if (std::abs(mean) > 1e-12 * std::max(1.0, max_abs(g)))
    {
        throw std::invalid_argument(fmt::format("{}: g must have zero mean", who));
    }
}

std::size_t grid_modes(std::span<double const> g, char const* who)
{
    if (g.size() < 2 || g.size() % 2 != 0)
    {
        throw std::invalid_argument(fmt::format("{}: grid size must be even", who));
    }
    return g.size() / 2;
}
}  // namespace

//---------------------------------------------------------------------------//
double AngularOperator::at(int m) const
{
    auto a = static_cast<std::size_t>(std::abs(m));
    if (a >= multipliers.size())
    {
        throw std::out_of_range("AngularOperator: mode beyond truncation");
    }
    return multipliers[a];
}

double deflection_cosine_mean(int n, int quadrature_order)
{
    long a = std::abs(n);
    return kappa_table(a, quadrature_order)[static_cast<std::size_t>(a)];
}

int memory_cutoff(double mu, double T, double tol)
{
    if (!(mu > 0) || !(T > 0) || !(tol > 0 && tol < 1))
    {
        throw std::invalid_argument("memory_cutoff: need mu > 0, T > 0, 0 < tol < 1");
    }
    if (std::isinf(T))
    {
        return 0;
    }
    // exp(-2 mu K T) < tol  <=>  K > -ln(tol) / (2 mu T)
    double k = -std::log(tol) / (2 * mu * T);
    if (k > 1e9)
    {
        throw std::invalid_argument("memory_cutoff: mu T too small");
    }
    auto K = static_cast<int>(std::floor(k)) + 1;
    while (K > 1 && std::exp(-2 * mu * (K - 1) * T) < tol)
    {
        --K;
    }
    return K;
}

AngularOperator build_K(int M_modes, int quadrature_order)
{
    check_modes(M_modes);
    AngularOperator op;
    op.multipliers = kappa_table(M_modes, quadrature_order);
    op.quadrature_order = quadrature_order;
    op.T = std::numeric_limits<double>::infinity();
    return op;
}

AngularOperator build_L(double mu, int M_modes, int quadrature_order)
{
    if (!(mu > 0))
    {
        throw std::invalid_argument("build_L: mu must be positive");
    }
    auto op = build_K(M_modes, quadrature_order);
    for (auto& l : op.multipliers)
    {
        l = 2 * mu * (l - 1);
    }
    op.multipliers[0] = 0;
    op.mu = mu;
    return op;
}

std::vector<double> memory_term_multipliers(double mu, double T, int k, int M_modes,
                                            int quadrature_order)
{
    check_modes(M_modes);
    if (!(mu > 0) || !(T > 0) || k < 1)
    {
        throw std::invalid_argument("memory_term_multipliers: need mu > 0, T > 0, k >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(M_modes) + 1, 0.0);
    if (std::isinf(T))
    {
        return out;
    }
    auto kappa = kappa_table(static_cast<long>(M_modes) * (k + 1), quadrature_order);
    double w = 2 * mu * std::exp(-2 * mu * k * T);
    for (int m = 1; m <= M_modes; ++m)
    {
        out[m] = w * (kappa[static_cast<std::size_t>(m * (k + 1))]
                      - kappa[static_cast<std::size_t>(m * k)]);
    }
    return out;
}

AngularOperator
build_M(double mu, double T, int M_modes, int K_cut, int quadrature_order)
{
    check_modes(M_modes);
    if (!(mu > 0) || !(T > 0))
    {
        throw std::invalid_argument("build_M: need mu > 0 and T > 0");
    }
    AngularOperator op;
    op.mu = mu;
    op.T = T;
    op.quadrature_order = quadrature_order;
    op.K_cut = resolve_cutoff(mu, T, K_cut);
    op.multipliers.assign(static_cast<std::size_t>(M_modes) + 1, 0.0);
    if (op.K_cut == 0)
    {
        return op;
    }
    auto kappa
        = kappa_table(static_cast<long>(M_modes) * (op.K_cut + 1), quadrature_order);
    for (int m = 1; m <= M_modes; ++m)
    {
        // Smallest terms first
        double s = 0;
        for (int k = op.K_cut; k >= 1; --k)
        {
            s += std::exp(-2 * mu * k * T)
                 * (kappa[static_cast<std::size_t>(m) * (k + 1)]
                    - kappa[static_cast<std::size_t>(m) * k]);
        }
        op.multipliers[m] = 2 * mu * s;
    }
    return op;
}

AngularOperator
build_LG(double mu, double T, int M_modes, int K_cut, int quadrature_order)
{
    auto op = build_L(mu, M_modes, quadrature_order) + build_M(mu, T, M_modes, K_cut,
                                                               quadrature_order);
    return op;
}

AngularOperator operator+(AngularOperator const& a, AngularOperator const& b)
{
    if (a.multipliers.size() != b.multipliers.size())
    {
        throw std::invalid_argument("AngularOperator +: mode counts differ");
    }
    AngularOperator out = a;
    for (std::size_t m = 0; m < out.multipliers.size(); ++m)
    {
        out.multipliers[m] += b.multipliers[m];
    }
    out.mu = a.mu > 0 ? a.mu : b.mu;
    out.T = std::min(a.T, b.T);
    out.K_cut = std::max(a.K_cut, b.K_cut);
    return out;
}

double spectral_gap(AngularOperator const& op)
{
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t m = 1; m < op.multipliers.size(); ++m)
    {
        gap = std::min(gap, std::abs(op.multipliers[m]));
    }
    return gap;
}

//---------------------------------------------------------------------------//
std::vector<cdouble>
invert_LG_direct(AngularOperator const& op, std::span<cdouble const> g_hat)
{
    if (g_hat.empty() || g_hat.size() > op.multipliers.size())
    {
        throw std::invalid_argument("invert_LG_direct: coefficient count exceeds truncation");
    }
    double scale = 0;
    for (auto c : g_hat)
    {
        scale = std::max(scale, std::abs(c));
    }
    if (std::abs(g_hat[0]) > 1e-12 * std::max(1.0, scale))
    {
        throw std::invalid_argument("invert_LG_direct: g must have zero mean");
    }
    std::vector<cdouble> h(g_hat.size(), 0.0);
    for (std::size_t m = 1; m < g_hat.size(); ++m)
    {
        double l = op.multipliers[m];
        if (std::abs(l) < singular_tolerance)
        {
            throw NearSingularOperator(
                fmt::format("invert_LG_direct: |lambda_{}| = {:.3g} < 1e-13", m, std::abs(l)));
        }
        h[m] = g_hat[m] / l;
    }
    return h;
}

std::vector<double>
invert_LG_direct_grid(AngularOperator const& op, std::span<double const> g)
{
    grid_modes(g, "invert_LG_direct_grid");
    RealAngularTransform fft(g.size());
    auto c = fft.forward(g);
    return fft.inverse(invert_LG_direct(op, c));
}

double neumann_contraction_factor(double mu, double T)
{
    if (!(mu > 0) || !(T > 0))
    {
        throw std::invalid_argument("neumann_contraction_factor: need mu > 0, T > 0");
    }
    double q = std::exp(-2 * mu * T);
    return beta_bound + q / (1 - q) * (beta_bound + 1);
}

SeriesResult invert_LG_neumann(double mu, double T, std::span<double const> g, double tol,
                               int quadrature_order)
{
    auto modes = grid_modes(g, "invert_LG_neumann");
    require_zero_mean(g, "invert_LG_neumann");
    if (!(tol > 0))
    {
        throw std::invalid_argument("invert_LG_neumann: tol must be positive");
    }
    double factor = neumann_contraction_factor(mu, T);
    if (!(factor < 1))
    {
        throw SeriesDivergenceRisk(
            fmt::format("Neumann series not guaranteed to converge: contraction bound "
                        "{:.6g} >= 1 (mu={}, T={})",
                        factor, mu, T),
            factor);
    }
    auto M = static_cast<int>(modes);
    auto K = build_K(M, quadrature_order);
    auto Mem = build_M(mu, T, M, 0, quadrature_order);
    std::vector<double> lambda(modes + 1);
    for (std::size_t m = 1; m <= modes; ++m)
    {
        lambda[m] = K.multipliers[m] + Mem.multipliers[m] / (2 * mu);
    }
    lambda[0] = 0;

    RealAngularTransform fft(g.size());
    SeriesResult out;
    std::vector<double> term(g.begin(), g.end());
    std::vector<double> sum(g.size(), 0.0);
    while (true)
    {
        for (std::size_t j = 0; j < sum.size(); ++j)
        {
            sum[j] += term[j];
        }
        ++out.terms;
        out.last_term_norm = max_abs(term);
        if (out.last_term_norm < tol)
        {
            break;
        }
        if (out.terms >= max_series_terms)
        {
            throw SeriesDivergenceRisk("Neumann series did not reach tolerance", factor);
        }
        term = fft.apply_multipliers(term, lambda);
    }
    for (auto& x : sum)
    {
        x *= -1 / (2 * mu);
    }
    out.h = std::move(sum);
    return out;
}

SeriesResult invert_split_series(double mu, double T, std::span<double const> g, double tol,
                                 int quadrature_order)
{
    auto modes = grid_modes(g, "invert_split_series");
    require_zero_mean(g, "invert_split_series");
    if (!(tol > 0))
    {
        throw std::invalid_argument("invert_split_series: tol must be positive");
    }
    double factor = neumann_contraction_factor(mu, T);
    // ||M|| ||L^{-1}|| <= q/(1-q) (1+beta) / (1-beta)
    double q = std::exp(-2 * mu * T);
    double split = q / (1 - q) * (1 + beta_bound) / (1 - beta_bound);
    if (!(split < 1))
    {
        throw SeriesDivergenceRisk(
            fmt::format("split series not guaranteed to converge: ||M|| ||L^-1|| bound "
                        "{:.6g} >= 1 (mu={}, T={})",
                        split, mu, T),
            factor);
    }
    auto M = static_cast<int>(modes);
    auto L = build_L(mu, M, quadrature_order);
    auto Mem = build_M(mu, T, M, 0, quadrature_order);
    std::vector<double> l_inv(modes + 1, 0.0), neg_m(modes + 1, 0.0);
    for (std::size_t m = 1; m <= modes; ++m)
    {
        l_inv[m] = 1 / L.multipliers[m];
        neg_m[m] = -Mem.multipliers[m];
    }

    RealAngularTransform fft(g.size());
    SeriesResult out;
    std::vector<double> u(g.begin(), g.end());
    std::vector<double> sum(g.size(), 0.0);
    while (true)
    {
        auto term = fft.apply_multipliers(u, l_inv);
        for (std::size_t j = 0; j < sum.size(); ++j)
        {
            sum[j] += term[j];
        }
        ++out.terms;
        out.last_term_norm = max_abs(term);
        if (out.last_term_norm < tol)
        {
            break;
        }
        if (out.terms >= max_series_terms)
        {
            throw SeriesDivergenceRisk("split series did not reach tolerance", factor);
        }
        // M (-L)^{-1} u = -M (L^{-1} u)
        u = fft.apply_multipliers(term, neg_m);
    }
    out.h = std::move(sum);
    return out;
}

//---------------------------------------------------------------------------//
DiffusionCoefficient diffusion_coefficient(AngularOperator const& op_LG)
{
    if (op_LG.max_mode() < 1)
    {
        throw std::invalid_argument("diffusion_coefficient: needs the first harmonic");
    }
    double l1 = op_LG.at(1);
    if (!(std::abs(l1) >= singular_tolerance))
    {
        throw NearSingularOperator(
            fmt::format("diffusion_coefficient: |lambda_1| = {:.3g}", std::abs(l1)));
    }
    DiffusionCoefficient d;
    d.D_B = -1 / l1;

    // Index form (1/2pi) int v_i (-L^G)^{-1} v_j by the trapezoid rule,
    // exact for trigonometric polynomials of this degree.
    std::size_t n = 2 * static_cast<std::size_t>(std::min(op_LG.max_mode(), 4));
    std::vector<double> vx(n), vy(n);
    for (std::size_t j = 0; j < n; ++j)
    {
        vx[j] = std::cos(grid_angle(j, n));
        vy[j] = std::sin(grid_angle(j, n));
    }
    auto hx = invert_LG_direct_grid(op_LG, vx);
    auto hy = invert_LG_direct_grid(op_LG, vy);
    double s11 = 0, s22 = 0, s12 = 0;
    for (std::size_t j = 0; j < n; ++j)
    {
        s11 -= vx[j] * hx[j];
        s22 -= vy[j] * hy[j];
        s12 -= vx[j] * hy[j];
    }
    auto nd = static_cast<double>(n);
    d.D11 = s11 / nd;
    d.D22 = s22 / nd;
    d.D12 = s12 / nd;
    return d;
}

InvertibilityThreshold invertibility_threshold()
{
    InvertibilityThreshold t;
    t.T_star = 0.5 * std::log(2 / (1 - t.beta));
    t.B_star = 2 * pi / t.T_star;
    t.B_stated = 8 * pi / 3;
    t.B_gap = t.B_stated - t.B_star;
    return t;
}

std::vector<OperatorSweepRow> operator_sweep(double mu,
                                             std::span<double const> B_values,
                                             int M_modes,
                                             int quadrature_order)
{
    auto L = build_L(mu, M_modes, quadrature_order);
    double markov = -1 / L.at(1);
    constexpr std::size_t probe_size = 16;
    std::vector<double> probe(probe_size);
    for (std::size_t j = 0; j < probe_size; ++j)
    {
        probe[j] = std::cos(grid_angle(j, probe_size));
    }

    std::vector<OperatorSweepRow> rows;
    for (double B : B_values)
    {
        if (!(B >= 0))
        {
            throw std::invalid_argument("operator_sweep: |B| must be nonnegative");
        }
        OperatorSweepRow r;
        r.B = B;
        r.T = B > 0 ? 2 * pi / B : std::numeric_limits<double>::infinity();
        r.D_markovian_term = markov;
        try
        {
            auto op = build_LG(mu, r.T, M_modes, 0, quadrature_order);
            r.D_direct = diffusion_coefficient(op).D_B;
        }
        catch (NearSingularOperator const&)
        {
            r.D_direct = std::numeric_limits<double>::quiet_NaN();
        }
        r.D_memory_sum = r.D_direct - markov;
        try
        {
            // Split series on the first harmonic: -<v, h> recovers D_B
            auto s = invert_split_series(mu, r.T, probe, 1e-13, quadrature_order);
            double d = 0;
            for (std::size_t j = 0; j < probe_size; ++j)
            {
                d -= 2 * probe[j] * s.h[j];
            }
            d /= static_cast<double>(probe_size);
            r.series_converged = std::abs(d - r.D_direct) < 1e-8;
        }
        catch (SeriesDivergenceRisk const&)
        {
            r.series_converged = false;
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace mlg
