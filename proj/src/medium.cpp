#include "maglorentz/medium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "maglorentz/parallel.hpp"
#include "maglorentz/rng.hpp"
#include "maglorentz/stats.hpp"

namespace mlg
{
namespace
{
void fill_derived(ScalingParams& p)
{
    if (p.B > 0)
    {
        p.R = 1 / p.B;
        p.T_larmor = two_pi / p.B;
    }
    else
    {
        p.R = std::numeric_limits<double>::infinity();
        p.T_larmor = std::numeric_limits<double>::infinity();
    }
    p.area_fraction = p.mu_eff * p.eps * p.eps;
    p.inverse_free_path = p.mu_eff * p.eps;
    p.growth_condition = std::sqrt(p.eps) * std::pow(p.eta, 5);
}

std::uint64_t cell_key(std::uint64_t seed, CellIndex c)
{
    return derive_key({seed,
                       static_cast<std::uint64_t>(c.x),
                       static_cast<std::uint64_t>(c.y)});
}

std::vector<PlanarPoint>
generate_cell(std::uint64_t key, double mean, double size, CellIndex cell)
{
    std::vector<PlanarPoint> out;
    if (!(mean > 0))
    {
        return out;
    }
    CounterRng rng(key);
    std::poisson_distribution<std::uint64_t> count(mean);
    auto n = count(rng);
    out.reserve(n);
    double x0 = static_cast<double>(cell.x) * size;
    double y0 = static_cast<double>(cell.y) * size;
    for (std::uint64_t i = 0; i < n; ++i)
    {
        double u = rng.uniform();
        double v = rng.uniform();
        out.push_back({x0 + u * size, y0 + v * size});
    }
    return out;
}
}  // namespace

ScalingParams scaling_from(double eps, double mu, double eta, double B)
{
    if (!(eps > 0) || !(mu > 0) || !(eta >= 1) || !(B >= 0)
        || !std::isfinite(eps * mu * eta * B))
    {
        throw std::invalid_argument(fmt::format(
            "scaling_from: need eps > 0, mu > 0, eta >= 1, B >= 0 "
            "(got eps={}, mu={}, eta={}, B={})",
            eps, mu, eta, B));
    }
    ScalingParams p;
    p.eps = eps;
    p.mu = mu;
    p.eta = eta;
    p.B = B;
    p.mu_eff = eta * mu / eps;
    fill_derived(p);
    if (p.area_fraction > 0.1)
    {
        p.warnings.push_back(fmt::format(
            "medium not dilute: mu_eff*eps^2 = {:.4g} > 0.1", p.area_fraction));
    }
    if (p.inverse_free_path < 1)
    {
        p.warnings.push_back(fmt::format(
            "below Boltzmann-Grad scale: mu_eff*eps = {:.4g} < 1",
            p.inverse_free_path));
    }
    if (p.growth_condition > 1)
    {
        p.warnings.push_back(fmt::format(
            "eta grows too fast: eps^(1/2)*eta^5 = {:.4g} > 1",
            p.growth_condition));
    }
    return p;
}

ScalingParams empty_medium(double eps, double B)
{
    if (!(eps > 0) || !(B >= 0))
    {
        throw std::invalid_argument("empty_medium: need eps > 0 and B >= 0");
    }
    ScalingParams p;
    p.eps = eps;
    p.B = B;
    fill_derived(p);
    return p;
}

//---------------------------------------------------------------------------//
double ObstacleField::default_cell_size(ScalingParams const& p)
{
    double s = 10 * p.eps;
    if (p.B > 0)
    {
        s = std::max(s, 2 * (p.R + p.eps));
    }
    return s;
}

ObstacleField::ObstacleField(ScalingParams params,
                             std::uint64_t master_seed,
                             double cell_size)
    : params_(std::move(params)), seed_(master_seed), cell_size_(cell_size)
{
    if (cell_size_ == 0)
    {
        cell_size_ = default_cell_size(params_);
    }
    if (!(cell_size_ > 2 * params_.eps) || !std::isfinite(cell_size_))
    {
        throw std::invalid_argument("ObstacleField: cell size must exceed 2 eps");
    }
    if (params_.B > 0 && cell_size_ < 2 * (params_.R + params_.eps))
    {
        throw std::invalid_argument(
            "ObstacleField: cell size smaller than the orbit diameter");
    }
}

CellIndex ObstacleField::cell_of(PlanarPoint x) const
{
    return {static_cast<std::int64_t>(std::floor(x.x / cell_size_)),
            static_cast<std::int64_t>(std::floor(x.y / cell_size_))};
}

std::vector<PlanarPoint> ObstacleField::obstacles_in_cell(CellIndex cell) const
{
    return generate_cell(cell_key(seed_, cell),
                         params_.mu_eff * cell_size_ * cell_size_,
                         cell_size_,
                         cell);
}

PlanarPoint ObstacleField::obstacle_center(ObstacleId id) const
{
    auto cell = obstacles_in_cell(id.cell);
    if (id.index >= cell.size())
    {
        throw std::out_of_range("obstacle_center: no such obstacle");
    }
    return cell[id.index];
}

bool ObstacleField::is_admissible_start(PlanarPoint x) const
{
    double eps = params_.eps;
    double eps2 = eps * eps;
    auto lo = cell_of({x.x - eps, x.y - eps});
    auto hi = cell_of({x.x + eps, x.y + eps});
    for (auto cx = lo.x; cx <= hi.x; ++cx)
    {
        for (auto cy = lo.y; cy <= hi.y; ++cy)
        {
            for (auto c : obstacles_in_cell({cx, cy}))
            {
                auto d = x - c;
                if (dot(d, d) <= eps2)
                {
                    return false;
                }
            }
        }
    }
    return true;
}

//---------------------------------------------------------------------------//
double circling_probability(ScalingParams const& p)
{
    if (!(p.B > 0))
    {
        throw std::invalid_argument("circling_probability: needs B > 0");
    }
    return std::exp(-p.mu_eff * 4 * std::numbers::pi * p.R * p.eps);
}

AnnulusEstimate empty_annulus_probability_mc(ScalingParams const& params,
                                             PlanarPoint center,
                                             std::uint64_t n_samples,
                                             std::uint64_t seed,
                                             unsigned workers)
{
    if (!(params.B > 0))
    {
        throw std::invalid_argument(
            "empty_annulus_probability_mc: no orbit annulus at B = 0");
    }
    if (n_samples < 1)
    {
        throw std::invalid_argument("empty_annulus_probability_mc: n_samples < 1");
    }
    double r_in = params.R - params.eps;
    double r_out = params.R + params.eps;
    double r_in2 = r_in > 0 ? r_in * r_in : 0;
    double r_out2 = r_out * r_out;

    std::vector<unsigned char> empty(n_samples, 0);
    parallel_for(n_samples, workers, [&](std::size_t i) {
        ObstacleField field(params, derive_key({seed, i}));
        auto lo = field.cell_of({center.x - r_out, center.y - r_out});
        auto hi = field.cell_of({center.x + r_out, center.y + r_out});
        for (auto cx = lo.x; cx <= hi.x; ++cx)
        {
            for (auto cy = lo.y; cy <= hi.y; ++cy)
            {
                for (auto c : field.obstacles_in_cell({cx, cy}))
                {
                    auto d = c - center;
                    double r2 = dot(d, d);
                    if (r2 > r_in2 && r2 < r_out2)
                    {
                        return;
                    }
                }
            }
        }
        empty[i] = 1;
    });

    AnnulusEstimate out;
    out.n_samples = n_samples;
    double hits = 0;
    for (auto e : empty)
    {
        hits += e;
    }
    auto n = static_cast<double>(n_samples);
    out.estimate = hits / n;
    out.std_error = binomial_std_error(out.estimate, n);
    out.closed_form = circling_probability(params);
    return out;
}

}  // namespace mlg
