#include "maglorentz/boltzmann_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "maglorentz/geometry.hpp"
#include "maglorentz/parallel.hpp"
#include "maglorentz/rng.hpp"
#include "maglorentz/stats.hpp"

namespace mlg
{
namespace
{
constexpr double inf = std::numeric_limits<double>::infinity();

double exponential(CounterRng& rng, double rate)
{
    if (!(rate > 0))
    {
        return inf;
    }
    // 1 - u lies in (0, 1]
    return -std::log1p(-rng.uniform()) / rate;
}

constexpr std::size_t block_size = 4096;
}  // namespace

//---------------------------------------------------------------------------//
double GBPath::rotation_until(double t) const
{
    double r = 0;
    for (auto const& j : jumps)
    {
        if (j.time > t)
        {
            break;
        }
        r += j.rotation;
    }
    return r;
}

double GBPath::angle_at(double t, Frame frame) const
{
    double a = initial_angle + rotation_until(t);
    if (frame == Frame::Lab)
    {
        a += drift_rate * t;
    }
    return normalize_angle(a);
}

std::size_t GBPath::replays_after_first_scatter() const
{
    std::size_t i = 0;
    while (i < jumps.size() && jumps[i].kind != JumpKind::Scatter)
    {
        ++i;
    }
    std::size_t n = 0;
    for (++i; i < jumps.size() && jumps[i].kind == JumpKind::Replay; ++i)
    {
        ++n;
    }
    return n;
}

GBPath sample_velocity_path(double mu,
                            double T,
                            double v0_angle,
                            double t_max,
                            std::uint64_t key,
                            GBSampleOptions const& options)
{
    if (!(mu >= 0) || !(T > 0) || !(t_max >= 0))
    {
        throw std::invalid_argument(
            "sample_velocity_path: need mu >= 0, T > 0, t_max >= 0");
    }
    CounterRng rng(key);
    GBPath path;
    path.initial_angle = normalize_angle(v0_angle);
    path.drift_rate = std::isinf(T) ? 0.0 : two_pi / T;
    path.t_max = t_max;

    double rate = 2 * mu;
    double t = 0;
    bool scattered = false;
    double stored = 0, stored_b = 0;
    while (true)
    {
        double wait = exponential(rng, rate);
        if (!scattered && wait > T)
        {
            path.circling = true;
            if (options.absorb_circling)
            {
                return path;
            }
        }
        if (scattered)
        {
            // Replays at every full period inside the wait
            for (double k = 1; k * T < wait; ++k)
            {
                double tr = t + k * T;
                if (tr > t_max)
                {
                    return path;
                }
                path.jumps.push_back({tr, JumpKind::Replay, stored_b, stored});
            }
        }
        t += wait;
        if (t > t_max)
        {
            return path;
        }
        double b = 2 * rng.uniform() - 1;
        double theta = deflection_from_impact(b);
        path.jumps.push_back({t, JumpKind::Scatter, b, theta});
        stored = theta;
        stored_b = b;
        scattered = true;
    }
}

GBState state_at(GBPath const& path, double t)
{
    GBState s;
    s.velocity_angle = path.angle_at(t, Frame::Lab);
    double last_scatter = 0;
    for (auto const& j : path.jumps)
    {
        if (j.time > t)
        {
            break;
        }
        if (j.kind == JumpKind::Scatter)
        {
            s.scattered_yet = true;
            s.last_deflection = j.rotation;
            last_scatter = j.time;
        }
    }
    if (s.scattered_yet && std::isfinite(path.drift_rate) && path.drift_rate > 0)
    {
        double T = two_pi / path.drift_rate;
        s.time_since_scatter = std::fmod(t - last_scatter, T);
    }
    else
    {
        s.time_since_scatter = t - last_scatter;
    }
    return s;
}

//---------------------------------------------------------------------------//
GreenKuboResult green_kubo_mc(double mu,
                              double T,
                              std::uint64_t n_paths,
                              double t_cut,
                              double dt_quad,
                              std::uint64_t seed,
                              unsigned workers)
{
    if (!(t_cut > 0))
    {
        throw std::invalid_argument("green_kubo_mc: t_cut must be positive");
    }
    if (!(dt_quad > 0) || n_paths < 1 || !(mu > 0))
    {
        throw std::invalid_argument("green_kubo_mc: need dt_quad > 0, n_paths >= 1, mu > 0");
    }
    auto n_grid = static_cast<std::size_t>(std::ceil(t_cut / dt_quad - 1e-9)) + 1;
    std::vector<double> grid(n_grid), weight(n_grid), cos_drift(n_grid), sin_drift(n_grid);
    double drift = std::isinf(T) ? 0.0 : two_pi / T;
    for (std::size_t j = 0; j < n_grid; ++j)
    {
        grid[j] = std::min(t_cut, static_cast<double>(j) * dt_quad);
        cos_drift[j] = std::cos(drift * grid[j]);
        sin_drift[j] = std::sin(drift * grid[j]);
    }
    for (std::size_t j = 0; j + 1 < n_grid; ++j)
    {
        double h = grid[j + 1] - grid[j];
        weight[j] += 0.5 * h;
        weight[j + 1] += 0.5 * h;
    }

    struct Block
    {
        std::vector<double> sum, sum_sq;
        Moments integral, integral_lab;
        double circling = 0;
    };
    std::size_t n_blocks = (n_paths + block_size - 1) / block_size;
    std::vector<Block> blocks(n_blocks);
    GBSampleOptions open{false};

    parallel_for(n_blocks, workers, [&](std::size_t ib) {
        auto& blk = blocks[ib];
        blk.sum.assign(n_grid, 0);
        blk.sum_sq.assign(n_grid, 0);
        std::size_t end = std::min<std::size_t>(n_paths, (ib + 1) * block_size);
        for (std::size_t p = ib * block_size; p < end; ++p)
        {
            CounterRng start(derive_key({seed, p, 0}));
            double v0 = two_pi * start.uniform();
            auto path = sample_velocity_path(mu, T, v0, t_cut, derive_key({seed, p, 1}), open);
            bool absorbed = path.circling;
            blk.circling += absorbed;

            double rel = 0, c = 1, s = 0;
            double integral = 0, integral_lab = 0;
            std::size_t next = 0;
            for (std::size_t j = 0; j < n_grid; ++j)
            {
                bool moved = false;
                while (next < path.jumps.size() && path.jumps[next].time <= grid[j])
                {
                    rel += path.jumps[next++].rotation;
                    moved = true;
                }
                if (moved)
                {
                    c = std::cos(rel);
                    s = std::sin(rel);
                }
                blk.sum[j] += c;
                blk.sum_sq[j] += c * c;
                integral += weight[j] * c;
                // cos(rel + drift t); an absorbed path only drifts
                double lab = absorbed ? cos_drift[j] : c * cos_drift[j] - s * sin_drift[j];
                integral_lab += weight[j] * lab;
            }
            blk.integral.add(integral);
            blk.integral_lab.add(integral_lab);
        }
    });

    GreenKuboResult out;
    std::vector<Moments> parts, parts_lab;
    std::vector<double> circ;
    for (auto const& b : blocks)
    {
        parts.push_back(b.integral);
        parts_lab.push_back(b.integral_lab);
        circ.push_back(b.circling);
    }
    auto m = pairwise_merge(parts);
    auto ml = pairwise_merge(parts_lab);
    out.D = m.mean();
    out.D_se = m.std_error();
    out.D_lab = ml.mean();
    out.D_lab_se = ml.std_error();
    auto n = static_cast<double>(n_paths);
    out.circling_frac = pairwise_sum(circ) / n;
    out.circling_se = binomial_std_error(out.circling_frac, n);

    out.t = grid;
    out.vacf.resize(n_grid);
    out.vacf_se.resize(n_grid);
    std::vector<double> col(n_blocks), col_sq(n_blocks);
    for (std::size_t j = 0; j < n_grid; ++j)
    {
        for (std::size_t ib = 0; ib < n_blocks; ++ib)
        {
            col[ib] = blocks[ib].sum[j];
            col_sq[ib] = blocks[ib].sum_sq[j];
        }
        double mean = pairwise_sum(col) / n;
        double var = n > 1 ? std::max(0.0, (pairwise_sum(col_sq) - n * mean * mean) / (n - 1))
                           : 0.0;
        out.vacf[j] = mean;
        out.vacf_se[j] = std::sqrt(var / n);
    }
    return out;
}

FractionEstimate circling_fraction_mc(double mu, double T, std::uint64_t n_paths,
                                      std::uint64_t seed, unsigned workers)
{
    if (n_paths < 1)
    {
        throw std::invalid_argument("circling_fraction_mc: n_paths must be positive");
    }
    std::size_t n_blocks = (n_paths + block_size - 1) / block_size;
    std::vector<double> counts(n_blocks, 0);
    parallel_for(n_blocks, workers, [&](std::size_t ib) {
        std::size_t end = std::min<std::size_t>(n_paths, (ib + 1) * block_size);
        for (std::size_t p = ib * block_size; p < end; ++p)
        {
            // Only the first wait matters; t_max = T stops the sampler there
            auto path = sample_velocity_path(mu, T, 0, T, derive_key({seed, p, 1}));
            counts[ib] += path.circling;
        }
    });
    FractionEstimate out;
    auto n = static_cast<double>(n_paths);
    out.fraction = pairwise_sum(counts) / n;
    out.std_error = binomial_std_error(out.fraction, n);
    return out;
}

}  // namespace mlg
