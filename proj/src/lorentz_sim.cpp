#include "maglorentz/lorentz_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "maglorentz/parallel.hpp"
#include "maglorentz/rng.hpp"
#include "maglorentz/stats.hpp"

namespace mlg
{
namespace
{
constexpr double inf = std::numeric_limits<double>::infinity();

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    auto q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

struct IdHash
{
    std::size_t operator()(ObstacleId const& id) const
    {
        return mix64(static_cast<std::uint64_t>(id.cell.x) * 0x9e3779b97f4a7c15ULL
                     ^ mix64(static_cast<std::uint64_t>(id.cell.y))
                     ^ (static_cast<std::uint64_t>(id.index) << 1));
    }
};

// Closest approach of the flight on [0, length] to point c.
double min_distance(ParticleState const& s, double B, double length, PlanarPoint c)
{
    if (B == 0)
    {
        auto v = s.velocity();
        double along = std::clamp(dot(c - s.position, v), 0.0, length);
        return norm(s.position + along * v - c);
    }
    double R = 1 / B;
    auto q = larmor_center(s, B);
    auto cq = c - q;
    double theta0 = s.velocity_angle - std::numbers::pi / 2;
    double rel = normalize_angle(std::atan2(cq.y, cq.x) - theta0);
    if (rel <= B * length)
    {
        return std::abs(norm(cq) - R);
    }
    auto end = advance_free(s, B, length).position;
    return std::min(norm(s.position - c), norm(end - c));
}

struct Leaf
{
    double time;
    ParticleState state;  // just after reflection
    double normal_angle;
    double b;
};

// Follow the motion with a single obstacle present.
ParticleState replay_single(ParticleState state, double B, Disk const& disk, double duration)
{
    double t = 0;
    for (int guard = 0; guard < 100000; ++guard)
    {
        auto hit = first_arc_disk_hit(state, B, disk, duration - t, departure_guard);
        if (!hit)
        {
            return advance_free(state, B, duration - t);
        }
        auto at = advance_free(state, B, hit->time);
        at.velocity_angle = reflect(at.velocity_angle, hit->impact_vector);
        state = at;
        t += hit->time;
    }
    return state;
}
}  // namespace

char const* to_string(EventKind kind)
{
    switch (kind)
    {
        case EventKind::Fresh:
            return "fresh";
        case EventKind::SelfRecollision:
            return "self_recollision";
        case EventKind::Recollision:
            return "recollision";
    }
    return "?";
}

char const* to_string(TrajectoryStatus status)
{
    switch (status)
    {
        case TrajectoryStatus::Completed:
            return "completed";
        case TrajectoryStatus::CirclingForever:
            return "circling_forever";
        case TrajectoryStatus::TrappedDaisy:
            return "trapped_daisy";
    }
    return "?";
}

//---------------------------------------------------------------------------//
// OBSTACLE INDEX
//---------------------------------------------------------------------------//
std::size_t ObstacleIndex::KeyHash::operator()(Key const& k) const
{
    return mix64(static_cast<std::uint64_t>(k.x) ^ mix64(static_cast<std::uint64_t>(k.y)));
}

ObstacleIndex::ObstacleIndex(ObstacleField const& field)
    : field_(&field), eps_(field.params().eps)
{
    auto const& p = field.params();
    empty_ = !(p.mu_eff > 0);
    // About two obstacles per bucket, never much finer than the disks
    double target = empty_ ? field.cell_size()
                           : std::max(std::sqrt(2 / p.mu_eff), 4 * p.eps);
    per_cell_ = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(field.cell_size() / target)));
    bucket_ = field.cell_size() / static_cast<double>(per_cell_);
}

ObstacleIndex::ObstacleIndex(std::vector<PlanarPoint> const& centers,
                             double eps,
                             double bucket_size)
    : eps_(eps), bucket_(bucket_size), empty_(centers.empty())
{
    // One bucket per cell
    for (std::uint32_t i = 0; i < centers.size(); ++i)
    {
        Key k{bucket_coord(centers[i].x), bucket_coord(centers[i].y)};
        auto& c = cells_[k];
        c.entries.push_back({centers[i], ObstacleId{{0, 0}, i}});
        c.offsets = {0, static_cast<std::uint32_t>(c.entries.size())};
    }
}

std::int64_t ObstacleIndex::bucket_coord(double x) const
{
    return static_cast<std::int64_t>(std::floor(x / bucket_));
}

ObstacleIndex::Cell const& ObstacleIndex::cell(Key key)
{
    static Cell const none{{}, {0, 0}};
    if (cached_ && cached_key_ == key)
    {
        return *cached_;
    }
    auto it = cells_.find(key);
    if (it == cells_.end())
    {
        if (!field_)
        {
            return none;
        }
        it = cells_.emplace(key, Cell{}).first;
        build_cell(it->second, key, field_->obstacles_in_cell({key.x, key.y}));
    }
    cached_key_ = key;
    cached_ = &it->second;
    return it->second;
}

std::pair<ObstacleIndex::Entry const*, ObstacleIndex::Entry const*>
ObstacleIndex::bucket(Key key)
{
    Key ck = field_ ? Key{floor_div(key.x, per_cell_), floor_div(key.y, per_cell_)} : key;
    auto const& c = cell(ck);
    if (c.entries.empty())
    {
        return {nullptr, nullptr};
    }
    auto local = (key.x - ck.x * per_cell_) * per_cell_ + (key.y - ck.y * per_cell_);
    auto const* base = c.entries.data();
    return {base + c.offsets[local], base + c.offsets[local + 1]};
}

void ObstacleIndex::build_cell(Cell& c, Key key, std::vector<PlanarPoint> const& centers)
{
    double size = field_->cell_size();
    double x0 = static_cast<double>(key.x) * size;
    double y0 = static_cast<double>(key.y) * size;
    auto local = [&](double rel) {
        auto j = static_cast<std::int64_t>(std::floor(rel / bucket_));
        return std::clamp<std::int64_t>(j, 0, per_cell_ - 1);
    };
    // Bucket assignment is clamped to the owning cell so that a bucket
    // never needs obstacles from a neighboring cell.
    std::vector<std::uint32_t> slot(centers.size());
    auto n_buckets = static_cast<std::size_t>(per_cell_ * per_cell_);
    c.offsets.assign(n_buckets + 1, 0);
    for (std::size_t i = 0; i < centers.size(); ++i)
    {
        slot[i] = static_cast<std::uint32_t>(local(centers[i].x - x0) * per_cell_
                                             + local(centers[i].y - y0));
        ++c.offsets[slot[i] + 1];
    }
    for (std::size_t b = 0; b < n_buckets; ++b)
    {
        c.offsets[b + 1] += c.offsets[b];
    }
    c.entries.resize(centers.size());
    auto fill = c.offsets;
    CellIndex ci{key.x, key.y};
    for (std::uint32_t i = 0; i < centers.size(); ++i)
    {
        c.entries[fill[slot[i]]++] = {centers[i], ObstacleId{ci, i}};
    }
}

bool ObstacleIndex::is_admissible(PlanarPoint x)
{
    bool ok = true;
    double eps2 = eps_ * eps_;
    for_each_in_box({x.x - eps_, x.y - eps_}, {x.x + eps_, x.y + eps_}, [&](Entry const& e) {
        auto d = x - e.center;
        ok = ok && dot(d, d) > eps2;
    });
    return ok;
}

//---------------------------------------------------------------------------//
// TRAJECTORY
//---------------------------------------------------------------------------//
TrajectoryOutcome simulate_trajectory(ObstacleIndex& index,
                                      double B,
                                      ParticleState start,
                                      double t_max,
                                      std::span<const double> sample_times,
                                      SimulationOptions const& options)
{
    if (!(t_max > 0))
    {
        throw std::invalid_argument("simulate_trajectory: t_max must be positive");
    }
    double const eps = index.eps();
    double const period = B > 0 ? two_pi / B : inf;
    double const piece = index.bucket_size();
    // Query margin against bucket-boundary rounding
    double const margin = 1e-9 * (1 + piece);

    TrajectoryOutcome out;
    out.trapped_at = inf;
    start.velocity_angle = normalize_angle(start.velocity_angle);
    ParticleState state = start;
    double t = 0;
    std::size_t next_sample = 0;
    auto record_until = [&](double t_end, auto&& position_at) {
        while (next_sample < sample_times.size() && sample_times[next_sample] <= t_end
               && sample_times[next_sample] <= t_max)
        {
            double s = sample_times[next_sample++];
            out.displacement_samples.push_back({s, position_at(s)});
        }
    };

    std::unordered_set<ObstacleId, IdHash> visited;
    bool have_last = false;
    ObstacleId last{};
    std::vector<Leaf> run;
    std::vector<ObstacleIndex::Entry> nearby;

    while (true)
    {
        if (out.events.size() >= options.max_events)
        {
            throw EventCapExceeded(fmt::format(
                "simulate_trajectory: more than {} events before t = {}",
                options.max_events, t));
        }
        double horizon = B > 0 ? period : t_max - t;

        double best = inf;
        ObstacleIndex::Entry best_entry{};
        PlanarPoint best_normal{};
        nearby.clear();
        for (double s0 = 0; !index.empty_medium() && s0 < horizon && s0 < best;
             s0 += piece)
        {
            double s1 = std::min(s0 + piece, horizon);
            auto mid = advance_free(state, B, 0.5 * (s0 + s1)).position;
            double r = 0.5 * (s1 - s0) + 2 * eps + margin;
            index.for_each_in_box(
                {mid.x - r, mid.y - r}, {mid.x + r, mid.y + r}, [&](auto const& e) {
                    bool is_last = have_last && e.id == last;
                    auto hit = first_arc_disk_hit(state, B, {e.center, eps}, horizon,
                                                  is_last ? departure_guard : 0.0);
                    if (hit && hit->time < best)
                    {
                        best = hit->time;
                        best_entry = e;
                        best_normal = hit->impact_vector;
                    }
                    if (!is_last && visited.contains(e.id))
                    {
                        nearby.push_back(e);
                    }
                });
        }

        // Near misses of earlier obstacles along the part of this flight
        // that is actually flown
        double flown = std::min({best, t_max - t, period});
        if (!nearby.empty())
        {
            std::sort(nearby.begin(), nearby.end(), [](auto const& a, auto const& b) {
                return std::tie(a.id.cell.x, a.id.cell.y, a.id.index)
                       < std::tie(b.id.cell.x, b.id.cell.y, b.id.index);
            });
            auto same = [](auto const& a, auto const& b) { return a.id == b.id; };
            nearby.erase(std::unique(nearby.begin(), nearby.end(), same), nearby.end());
            for (auto const& e : nearby)
            {
                if (best < inf && e.id == best_entry.id)
                {
                    continue;
                }
                double d = min_distance(state, B, flown, e.center);
                if (d > eps && d <= 2 * eps)
                {
                    ++out.near_misses;
                }
            }
        }

        auto from = state;
        double t0 = t;
        auto free_position = [&](double s) { return advance_free(from, B, s - t0).position; };

        if (best == inf && B > 0)
        {
            // A full period without contact: the orbit repeats forever
            record_until(t_max, free_position);
            out.status = TrajectoryStatus::CirclingForever;
            out.trapped_at = t;
            out.final_state = advance_free(from, B, t_max - t0);
            break;
        }
        if (best == inf || t + best > t_max)
        {
            record_until(t_max, free_position);
            out.final_state = advance_free(from, B, t_max - t0);
            break;
        }

        double t_hit = t + best;
        record_until(t_hit, free_position);
        auto at = advance_free(from, B, best);
        auto sd = scatter_data(at.velocity_angle, best_normal, eps);

        CollisionEvent ev;
        ev.hit_time = t_hit;
        ev.exit_time = t_hit;
        ev.obstacle = best_entry.id;
        ev.impact_vector = best_normal;
        ev.impact_parameter = sd.impact_parameter;
        if (have_last && best_entry.id == last)
        {
            ev.kind = EventKind::SelfRecollision;
        }
        else if (visited.contains(best_entry.id))
        {
            ev.kind = EventKind::Recollision;
        }
        else
        {
            ev.kind = EventKind::Fresh;
        }
        out.events.push_back(ev);
        visited.insert(best_entry.id);
        have_last = true;
        last = best_entry.id;

        at.velocity_angle = reflect(at.velocity_angle, best_normal);
        state = at;
        t = t_hit;

        Leaf leaf{t, state, std::atan2(best_normal.y, best_normal.x), sd.impact_parameter};
        if (ev.kind != EventKind::SelfRecollision)
        {
            run.clear();
            run.push_back(leaf);
            continue;
        }
        // Compare with earlier leaves of this self-recollision run
        int match = -1;
        int n_run = static_cast<int>(run.size());
        for (int i = std::max(0, n_run - options.daisy_max_leaves); i < n_run; ++i)
        {
            double dn = std::remainder(leaf.normal_angle - run[i].normal_angle, two_pi);
            if (std::abs(dn) < options.daisy_tolerance
                && std::abs(leaf.b - run[i].b) < options.daisy_tolerance * eps)
            {
                match = i;
                break;
            }
        }
        run.push_back(leaf);
        if (match < 0)
        {
            continue;
        }
        Leaf const& first = run[match];
        double cycle = t - first.time;
        Disk disk{best_entry.center, eps};
        auto periodic_state = [&](double s) {
            double phase = std::fmod(s - first.time, cycle);
            return replay_single(first.state, B, disk, phase);
        };
        record_until(t_max, [&](double s) { return periodic_state(s).position; });
        out.status = TrajectoryStatus::TrappedDaisy;
        out.trapped_at = t;
        out.daisy_period = n_run - match;
        out.final_state = periodic_state(t_max);
        break;
    }
    out.elapsed = t_max;
    return out;
}

TrajectoryOutcome simulate_trajectory(ObstacleField const& field,
                                      ParticleState start,
                                      double t_max,
                                      std::span<const double> sample_times,
                                      SimulationOptions const& options)
{
    ObstacleIndex index(field);
    if (!index.is_admissible(start.position))
    {
        throw std::invalid_argument(
            "simulate_trajectory: start position overlaps an obstacle");
    }
    return simulate_trajectory(index, field.params().B, start, t_max, sample_times, options);
}

//---------------------------------------------------------------------------//
// CLASSIFICATION
//---------------------------------------------------------------------------//
std::vector<EventKind> classify_sequence(std::span<const ObstacleId> obstacles)
{
    std::vector<EventKind> kinds;
    std::unordered_set<ObstacleId, IdHash> seen;
    for (std::size_t i = 0; i < obstacles.size(); ++i)
    {
        if (i > 0 && obstacles[i] == obstacles[i - 1])
        {
            kinds.push_back(EventKind::SelfRecollision);
        }
        else if (seen.contains(obstacles[i]))
        {
            kinds.push_back(EventKind::Recollision);
        }
        else
        {
            kinds.push_back(EventKind::Fresh);
        }
        seen.insert(obstacles[i]);
    }
    return kinds;
}

EventCounts classify_events(std::span<const CollisionEvent> events)
{
    EventCounts c;
    std::uint64_t run = 0;
    for (std::size_t i = 0; i < events.size(); ++i)
    {
        switch (events[i].kind)
        {
            case EventKind::Fresh:
                ++c.fresh;
                break;
            case EventKind::SelfRecollision:
                ++c.self_recollisions;
                break;
            case EventKind::Recollision:
                ++c.recollisions;
                break;
        }
        if (i > 0 && events[i].kind == EventKind::SelfRecollision
            && events[i].obstacle == events[i - 1].obstacle)
        {
            ++run;
            c.daisy_leaf_max = std::max(c.daisy_leaf_max, run + 1);
        }
        else
        {
            run = 0;
        }
    }
    return c;
}

//---------------------------------------------------------------------------//
// ENSEMBLES
//---------------------------------------------------------------------------//
ParticleState random_admissible_start(ObstacleField const& field, std::uint64_t key)
{
    CounterRng rng(key);
    double size = field.cell_size();
    for (int attempt = 0; attempt < 1000000; ++attempt)
    {
        PlanarPoint x{size * rng.uniform(), size * rng.uniform()};
        if (field.is_admissible_start(x))
        {
            return {x, two_pi * rng.uniform()};
        }
    }
    throw std::runtime_error("random_admissible_start: no admissible point found");
}

MsdResult msd_estimate(ScalingParams const& params,
                       std::uint64_t n_replicas,
                       std::vector<double> const& time_grid,
                       std::uint64_t seed,
                       unsigned workers,
                       SimulationOptions const& options)
{
    if (n_replicas < 1)
    {
        throw std::invalid_argument("msd_estimate: need at least one replica");
    }
    if (time_grid.empty() || !std::is_sorted(time_grid.begin(), time_grid.end())
        || time_grid.front() < 0)
    {
        throw std::invalid_argument("msd_estimate: time grid must be nonnegative and increasing");
    }
    std::size_t nt = time_grid.size();
    double t_max = std::max(time_grid.back(), 1e-12);

    struct Replica
    {
        std::vector<double> sq;
        double trapped_at = inf;
        bool daisy = false;
        bool aborted = false;
    };
    std::vector<Replica> reps(n_replicas);
    parallel_for(n_replicas, workers, [&](std::size_t r) {
        ObstacleField field(params, derive_key({seed, r, 0}));
        auto start = random_admissible_start(field, derive_key({seed, r, 1}));
        auto& rep = reps[r];
        try
        {
            auto out = simulate_trajectory(field, start, t_max, time_grid, options);
            rep.sq.resize(nt);
            for (std::size_t j = 0; j < nt; ++j)
            {
                auto d = out.displacement_samples[j].position - start.position;
                rep.sq[j] = dot(d, d);
            }
            rep.trapped_at = out.status == TrajectoryStatus::Completed ? inf : out.trapped_at;
            rep.daisy = out.status == TrajectoryStatus::TrappedDaisy;
        }
        catch (EventCapExceeded const&)
        {
            rep.aborted = true;
        }
    });

    MsdResult result;
    result.n_replicas = n_replicas;
    constexpr std::size_t block = 4096;
    std::size_t n_blocks = (n_replicas + block - 1) / block;
    double daisies = 0, kept = 0;
    for (auto const& rep : reps)
    {
        result.n_aborted += rep.aborted;
        kept += !rep.aborted;
        daisies += rep.daisy;
    }
    result.trapped_daisy_frac = kept > 0 ? daisies / kept : 0;
    for (std::size_t j = 0; j < nt; ++j)
    {
        std::vector<Moments> parts(n_blocks);
        std::vector<double> circ(n_blocks, 0);
        for (std::size_t r = 0; r < n_replicas; ++r)
        {
            if (reps[r].aborted)
            {
                continue;
            }
            parts[r / block].add(reps[r].sq[j]);
            circ[r / block] += reps[r].trapped_at <= time_grid[j] && !reps[r].daisy;
        }
        auto m = pairwise_merge(parts);
        MsdRow row;
        row.t = time_grid[j];
        row.msd = m.mean();
        row.msd_se = m.std_error();
        row.circling_frac = m.count > 0 ? pairwise_sum(circ) / m.count : 0;
        result.rows.push_back(row);
    }
    return result;
}

EventRateStudy event_rate_study(std::vector<double> const& eps_list,
                                std::function<double(double)> const& eta_rule,
                                double mu,
                                double B,
                                double t,
                                std::uint64_t n_replicas,
                                std::uint64_t seed,
                                unsigned workers,
                                SimulationOptions const& options)
{
    if (eps_list.empty() || n_replicas < 1 || !(t > 0))
    {
        throw std::invalid_argument("event_rate_study: empty study");
    }
    for (std::size_t i = 0; i < eps_list.size(); ++i)
    {
        if (!(eps_list[i] > 0 && eps_list[i] < 1) || (i > 0 && !(eps_list[i] < eps_list[i - 1])))
        {
            throw std::invalid_argument(
                "event_rate_study: eps values must lie in (0, 1) and decrease");
        }
    }

    EventRateStudy study;
    for (std::size_t e = 0; e < eps_list.size(); ++e)
    {
        double eps = eps_list[e];
        double eta = eta_rule(eps);
        auto params = mu > 0 ? scaling_from(eps, mu, eta, B) : empty_medium(eps, B);

        struct Flags
        {
            unsigned char recoll = 0, interf = 0, daisy = 0, circ = 0, self = 0, aborted = 0;
        };
        std::vector<Flags> flags(n_replicas);
        parallel_for(n_replicas, workers, [&](std::size_t r) {
            ObstacleField field(params, derive_key({seed, e, r, 0}));
            auto start = random_admissible_start(field, derive_key({seed, e, r, 1}));
            auto& f = flags[r];
            try
            {
                auto out = simulate_trajectory(field, start, t, {}, options);
                auto counts = classify_events(out.events);
                f.recoll = counts.recollisions > 0;
                f.self = counts.self_recollisions > 0;
                f.interf = out.near_misses > 0;
                f.daisy = out.status == TrajectoryStatus::TrappedDaisy;
                f.circ = out.status == TrajectoryStatus::CirclingForever && out.events.empty();
            }
            catch (EventCapExceeded const&)
            {
                f.aborted = 1;
            }
        });

        EventRateRow row;
        row.eps = eps;
        row.eta = eta;
        row.n_replicas = n_replicas;
        double n = 0, recoll = 0, interf = 0, daisy = 0, circ = 0, self = 0;
        for (auto const& f : flags)
        {
            row.n_aborted += f.aborted;
            if (f.aborted)
            {
                continue;
            }
            n += 1;
            recoll += f.recoll;
            interf += f.interf;
            daisy += f.daisy;
            circ += f.circ;
            self += f.self;
        }
        auto frac = [&](double k) { return n > 0 ? k / n : 0.0; };
        row.p_recoll = frac(recoll);
        row.p_interf = frac(interf);
        row.p_daisy = frac(daisy);
        row.p_circ = frac(circ);
        row.p_self_recoll = frac(self);
        row.p_recoll_se = binomial_std_error(row.p_recoll, n);
        row.p_interf_se = binomial_std_error(row.p_interf, n);
        row.p_daisy_se = binomial_std_error(row.p_daisy, n);
        row.p_circ_se = binomial_std_error(row.p_circ, n);
        row.p_circ_closed_form = B > 0 ? circling_probability(params)
                                       : 0.0;
        study.rows.push_back(row);
    }

    std::vector<double> x, recoll, interf, daisy, circ;
    for (auto const& row : study.rows)
    {
        x.push_back(row.eps);
        recoll.push_back(row.p_recoll);
        interf.push_back(row.p_interf);
        daisy.push_back(row.p_daisy);
        circ.push_back(row.p_circ);
    }
    study.exponent_recoll = fit_power_law(x, recoll).exponent;
    study.exponent_interf = fit_power_law(x, interf).exponent;
    study.exponent_daisy = fit_power_law(x, daisy).exponent;
    study.exponent_circ = fit_power_law(x, circ).exponent;
    return study;
}

}  // namespace mlg
