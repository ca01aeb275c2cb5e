#include "maglorentz/boltzmann_process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "maglorentz/geometry.hpp"
#include "maglorentz/rng.hpp"

using namespace mlg;

namespace
{
// Asymptotic Kolmogorov-Smirnov p-value for the uniform law on [0, 2pi)
double ks_uniform_pvalue(std::vector<double> x)
{
    std::sort(x.begin(), x.end());
    auto n = static_cast<double>(x.size());
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double f = x[i] / two_pi;
        d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0;
    for (int k = 1; k < 100; ++k)
    {
        p += 2 * ((k % 2) ? 1 : -1) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(p, 0.0, 1.0);
}

// Upper tail of the chi-square law via the regularized gamma series
double chi2_upper(double x, int dof)
{
    double a = 0.5 * dof, z = 0.5 * x;
    double term = 1 / a, sum = term;
    for (int k = 1; k < 1000; ++k)
    {
        term *= z / (a + k);
        sum += term;
    }
    double lower = std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
    return 1 - lower;
}
}  // namespace

TEST_CASE("path structure")
{
    auto path = sample_velocity_path(1, 1, 0.3, 50, 17);
    double last = 0;
    for (auto const& j : path.jumps)
    {
        CHECK(j.time > last);
        last = j.time;
        CHECK(j.time <= 50);
        if (j.kind == JumpKind::Scatter)
        {
            CHECK(j.rotation == deflection_from_impact(j.b_norm));
        }
    }
    CHECK(path.angle_at(0) == doctest::Approx(0.3));
    // Lab angle = co-rotating angle + drift
    double t = 7.25;
    double diff = path.angle_at(t, Frame::Lab) - path.angle_at(t, Frame::CoRotating);
    CHECK(std::abs(std::remainder(diff - two_pi * t, two_pi)) < 1e-12);

    // Replays never precede the first scattering
    for (std::uint64_t k = 0; k < 1000; ++k)
    {
        auto p = sample_velocity_path(1, 0.3, 0, 20, derive_key({3, k}), {false});
        if (!p.jumps.empty())
        {
            CHECK(p.jumps.front().kind == JumpKind::Scatter);
        }
        auto s = state_at(p, 20);
        CHECK(s.time_since_scatter >= 0);
        CHECK(s.time_since_scatter < (s.scattered_yet ? 0.3 : 20.0 + 1e-12));
    }
}

TEST_CASE("vanishing intensity circles")
{
    int circling = 0;
    for (std::uint64_t k = 0; k < 1000; ++k)
    {
        auto p = sample_velocity_path(1e-9, 1, 0, 10, derive_key({4, k}));
        circling += p.circling;
        CHECK(p.jumps.empty());
    }
    CHECK(circling == 1000);
    CHECK(circling_fraction_mc(0, 1, 100, 1).fraction == 1);
    CHECK(circling_fraction_mc(1, 1e-12, 1000, 1).fraction > 0.99);
}

TEST_CASE("first-period survival is exp(-2 mu T)")
{
    auto est = circling_fraction_mc(0.5, 1, 100000, 9);
    double p = std::exp(-1.0);
    CHECK(p == doctest::Approx(0.3679).epsilon(1e-4));
    double sigma = std::sqrt(p * (1 - p) / 1e5);
    CHECK(std::abs(est.fraction - p) < 3 * sigma);

    est = circling_fraction_mc(1, 1, 100000, 10);
    p = std::exp(-2.0);
    sigma = std::sqrt(p * (1 - p) / 1e5);
    CHECK(std::abs(est.fraction - p) < 3 * sigma);
}

TEST_CASE("replay counts are geometric")
{
    double mu = 0.7, T = 0.4;
    double q = std::exp(-2 * mu * T);
    int n = 100000;
    std::vector<double> counts(8, 0);
    int used = 0;
    for (int k = 0; k < n; ++k)
    {
        auto p = sample_velocity_path(mu, T, 0, 50, derive_key({5, std::uint64_t(k)}), {false});
        auto r = p.replays_after_first_scatter();
        counts[std::min<std::size_t>(r, 7)] += 1;
        ++used;
    }
    // Survival P(>= k) = q^k
    for (int k = 1; k <= 3; ++k)
    {
        double tail = 0;
        for (int j = k; j < 8; ++j)
        {
            tail += counts[j];
        }
        double p = std::pow(q, k);
        double sigma = std::sqrt(p * (1 - p) / used);
        CHECK(std::abs(tail / used - p) < 3 * sigma);
    }
    // Chi-square over {0, ..., 6, >= 7}
    double chi2 = 0;
    for (int j = 0; j < 8; ++j)
    {
        double pj = j < 7 ? (1 - q) * std::pow(q, j) : std::pow(q, 7);
        double e = pj * used;
        chi2 += (counts[j] - e) * (counts[j] - e) / e;
    }
    CHECK(chi2_upper(chi2, 7) > 0.001);
}

TEST_CASE("uniform angles stay uniform")
{
    double mu = 1, T = 1;
    std::vector<double> angles;
    for (std::uint64_t k = 0; k < 100000; ++k)
    {
        CounterRng rng(derive_key({6, k}));
        double v0 = two_pi * rng.uniform();
        auto p = sample_velocity_path(mu, T, v0, 5 / (2 * mu), derive_key({7, k}));
        angles.push_back(p.angle_at(5 / (2 * mu)));
    }
    CHECK(ks_uniform_pvalue(angles) > 0.01);
}

TEST_CASE("green-kubo without memory")
{
    auto gk = green_kubo_mc(1, 1e6, 100000, 10, 0.01, 21);
    CHECK(gk.vacf.front() == 1);
    CHECK(gk.vacf_se.front() == 0);
    CHECK(std::abs(gk.D - 0.375) < 3 * gk.D_se);
    CHECK(gk.D_se < 0.01);
    // Plain linear Boltzmann velocity jump process: C(t) = exp(-8 mu t / 3)
    for (std::size_t j = 0; j < gk.t.size(); j += 50)
    {
        double ref = std::exp(-8 * gk.t[j] / 3);
        CHECK(std::abs(gk.vacf[j] - ref) < 4 * gk.vacf_se[j] + 1e-12);
    }
}

TEST_CASE("green-kubo reduction is deterministic across workers")
{
    auto a = green_kubo_mc(1, 1, 10000, 4, 0.05, 3, 1);
    auto b = green_kubo_mc(1, 1, 10000, 4, 0.05, 3, 3);
    CHECK(a.D == b.D);
    CHECK(a.D_se == b.D_se);
    CHECK(a.D_lab == b.D_lab);
    CHECK(a.vacf == b.vacf);
    CHECK_THROWS(green_kubo_mc(1, 1, 10, 0, 0.1, 1));
}
