#include "maglorentz/lorentz_sim.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "maglorentz/rng.hpp"

using namespace mlg;
using std::numbers::pi;

namespace
{
// Reference dynamics: every flight tests all obstacles in a fixed list.
std::vector<std::pair<double, std::uint32_t>>
brute_force_events(std::vector<PlanarPoint> const& centers,
                   double eps,
                   double B,
                   ParticleState s,
                   double t_max)
{
    std::vector<std::pair<double, std::uint32_t>> log;
    double t = 0;
    int last = -1;
    while (true)
    {
        double horizon = B > 0 ? two_pi / B : t_max - t;
        double best = 1e300;
        int who = -1;
        PlanarPoint n{};
        for (std::uint32_t i = 0; i < centers.size(); ++i)
        {
            auto hit = first_arc_disk_hit(s, B, {centers[i], eps}, horizon,
                                          static_cast<int>(i) == last ? departure_guard : 0.0);
            if (hit && hit->time < best)
            {
                best = hit->time;
                who = static_cast<int>(i);
                n = hit->impact_vector;
            }
        }
        if (who < 0 || t + best > t_max)
        {
            return log;
        }
        t += best;
        s = advance_free(s, B, best);
        s.velocity_angle = reflect(s.velocity_angle, n);
        last = who;
        log.emplace_back(t, static_cast<std::uint32_t>(who));
    }
}

// Rotation of the Larmor center about a single obstacle at the origin per
// self-recollision leaf, for a center offset Delta.
double leaf_rotation(double Delta, double R, double eps)
{
    double B = 1 / R;
    ParticleState s{{Delta + R, 0}, pi / 2};
    Disk d{{0, 0}, eps};
    double before = std::atan2(larmor_center(s, B).y, larmor_center(s, B).x);
    auto hit = first_arc_disk_hit(s, B, d, 10 * two_pi * R);
    REQUIRE(hit);
    s = advance_free(s, B, hit->time);
    s.velocity_angle = reflect(s.velocity_angle, hit->impact_vector);
    auto q = larmor_center(s, B);
    return normalize_angle(std::atan2(q.y, q.x) - before);
}
}  // namespace

TEST_CASE("obstacle-free motion")
{
    ParticleState start{{0.3, 0.1}, 0.7};
    std::vector<double> times{0, 0.5, 1, 5, 20};

    ObstacleField circling(empty_medium(0.01, 2), 1);
    auto out = simulate_trajectory(circling, start, 20, times);
    CHECK(out.status == TrajectoryStatus::CirclingForever);
    CHECK(out.events.empty());
    CHECK(out.trapped_at == 0);
    REQUIRE(out.displacement_samples.size() == times.size());
    for (auto const& s : out.displacement_samples)
    {
        CHECK(norm(s.position - start.position) <= 2 * 0.5 + 1e-12);
    }

    ObstacleField straight(empty_medium(0.01, 0), 1);
    out = simulate_trajectory(straight, start, 20, times);
    CHECK(out.status == TrajectoryStatus::Completed);
    for (auto const& s : out.displacement_samples)
    {
        CHECK(s.position.x == start.position.x + s.time * std::cos(0.7));
        CHECK(s.position.y == start.position.y + s.time * std::sin(0.7));
    }
}

TEST_CASE("head-on obstacle on a straight path")
{
    double eps = 0.05, d = 3;
    ObstacleIndex index({{d, 0}}, eps, 0.5);
    auto out = simulate_trajectory(index, 0, {{0, 0}, 0}, 10, {});
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].kind == EventKind::Fresh);
    CHECK(out.events[0].hit_time == doctest::Approx(d - eps));
    CHECK(out.events[0].impact_parameter == doctest::Approx(0).epsilon(1e-15));
    CHECK(std::cos(out.final_state.velocity_angle) == doctest::Approx(-1));
    CHECK(out.final_state.position.x == doctest::Approx(d - eps - (10 - (d - eps))));
}

TEST_CASE("classification by definition")
{
    CHECK(classify_events({}).fresh == 0);

    auto make = [](std::vector<std::uint32_t> ids) {
        std::vector<ObstacleId> obs;
        for (auto i : ids)
        {
            obs.push_back({{0, 0}, i});
        }
        auto kinds = classify_sequence(obs);
        std::vector<CollisionEvent> ev(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
        {
            ev[i].obstacle = obs[i];
            ev[i].kind = kinds[i];
        }
        return classify_events(ev);
    };
    auto c = make({1, 1, 1});
    CHECK(c.fresh == 1);
    CHECK(c.self_recollisions == 2);
    CHECK(c.recollisions == 0);
    CHECK(c.daisy_leaf_max == 3);

    c = make({1, 2, 1});
    CHECK(c.fresh == 2);
    CHECK(c.recollisions == 1);
    CHECK(c.self_recollisions == 0);
    CHECK(c.daisy_leaf_max == 0);
}

TEST_CASE("indexed simulation matches brute-force search")
{
    for (double B : {0.0, 1.0, 3.0})
    {
        auto params = scaling_from(0.02, 0.5, 1, B);  // mu_eff = 25
        for (std::uint64_t rep = 0; rep < 20; ++rep)
        {
            ObstacleField field(params, derive_key({31, rep}));
            // Gather every obstacle in a block of cells around the origin
            std::vector<PlanarPoint> all;
            std::vector<ObstacleId> ids;
            for (std::int64_t cx = -6; cx <= 6; ++cx)
            {
                for (std::int64_t cy = -6; cy <= 6; ++cy)
                {
                    auto cell = field.obstacles_in_cell({cx, cy});
                    for (std::uint32_t i = 0; i < cell.size(); ++i)
                    {
                        all.push_back(cell[i]);
                        ids.push_back({{cx, cy}, i});
                    }
                }
            }
            auto start = random_admissible_start(field, derive_key({32, rep}));
            // Short enough to stay inside the gathered block
            double t_max = B > 0 ? 10.0 : 4 * field.cell_size();
            auto out = simulate_trajectory(field, start, t_max, {});
            auto ref = brute_force_events(all, params.eps, B, start, t_max);
            REQUIRE(out.status != TrajectoryStatus::TrappedDaisy);
            REQUIRE(out.events.size() == ref.size());
            std::vector<ObstacleId> seq;
            for (std::size_t k = 0; k < ref.size(); ++k)
            {
                CHECK(out.events[k].hit_time == doctest::Approx(ref[k].first).epsilon(1e-12));
                CHECK(out.events[k].obstacle == ids[ref[k].second]);
                seq.push_back(out.events[k].obstacle);
            }
            auto kinds = classify_sequence(seq);
            for (std::size_t k = 0; k < kinds.size(); ++k)
            {
                CHECK(kinds[k] == out.events[k].kind);
            }
        }
    }
}

TEST_CASE("event invariants and determinism")
{
    for (double B : {0.0, 0.7})
    {
        auto params = scaling_from(0.01, 1, 1, B);
        for (std::uint64_t rep = 0; rep < 50; ++rep)
        {
            ObstacleField field(params, derive_key({5, rep}));
            auto start = random_admissible_start(field, derive_key({6, rep}));
            auto a = simulate_trajectory(field, start, 20, {});
            auto b = simulate_trajectory(field, start, 20, {});
            REQUIRE(a.events.size() == b.events.size());
            for (std::size_t k = 0; k < a.events.size(); ++k)
            {
                CHECK(a.events[k].hit_time == b.events[k].hit_time);
                CHECK(a.events[k].obstacle == b.events[k].obstacle);
                CHECK(std::abs(a.events[k].impact_parameter) <= params.eps * (1 + 1e-12));
                CHECK(a.events[k].exit_time >= a.events[k].hit_time);
                CHECK(norm(a.events[k].impact_vector) == doctest::Approx(1).epsilon(1e-12));
                if (k > 0)
                {
                    CHECK(a.events[k].hit_time > a.events[k - 1].exit_time);
                }
                if (B == 0)
                {
                    CHECK(a.events[k].kind != EventKind::SelfRecollision);
                }
            }
            CHECK(norm(a.final_state.velocity()) == doctest::Approx(1).epsilon(1e-12));
        }
    }
}

TEST_CASE("periodic daisy is detected and replayed")
{
    double R = 1, eps = 0.1;
    // Tune the center offset so that four leaves close the flower
    double target = pi / 2;
    double lo = R - eps + 1e-6, hi = R + eps - 1e-6;
    double f_lo = leaf_rotation(lo, R, eps) - target;
    double f_hi = leaf_rotation(hi, R, eps) - target;
    REQUIRE(f_lo * f_hi < 0);
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i)
    {
        double mid = 0.5 * (lo + hi);
        double f = leaf_rotation(mid, R, eps) - target;
        ((f < 0) == (f_lo < 0) ? lo : hi) = mid;
    }
    double Delta = 0.5 * (lo + hi);

    ObstacleIndex index({{0, 0}}, eps, 0.5);
    ParticleState start{{Delta + R, 0}, pi / 2};
    std::vector<double> times;
    for (int i = 0; i <= 100; ++i)
    {
        times.push_back(i * 1.0);
    }
    auto out = simulate_trajectory(index, 1 / R, start, 100, times);
    CHECK(out.status == TrajectoryStatus::TrappedDaisy);
    CHECK(out.daisy_period == 4);
    auto counts = classify_events(out.events);
    CHECK(counts.fresh == 1);
    CHECK(counts.self_recollisions == 4);

    // Samples after trapping agree with an untruncated single-obstacle run
    auto ref_state = start;
    double t = 0;
    std::size_t next = 0;
    while (next < times.size())
    {
        auto hit = first_arc_disk_hit(ref_state, 1 / R, {{0, 0}, eps}, 100,
                                      t > 0 ? departure_guard : 0.0);
        double t_next = hit ? t + hit->time : 1e300;
        while (next < times.size() && times[next] <= t_next)
        {
            auto p = advance_free(ref_state, 1 / R, times[next] - t).position;
            CHECK(norm(p - out.displacement_samples[next].position) < 1e-6);
            ++next;
        }
        if (!hit)
        {
            break;
        }
        ref_state = advance_free(ref_state, 1 / R, hit->time);
        ref_state.velocity_angle = reflect(ref_state.velocity_angle, hit->impact_vector);
        t = t_next;
    }
}

TEST_CASE("circling fraction of trajectories matches the void probability")
{
    // mu_eff = 100, 4 pi R eps mu_eff = 0.4 pi; the admissibility condition
    // shifts the probability by a factor exp(pi eps^2 mu_eff) = 1.0003
    auto params = scaling_from(1e-3, 0.1, 1, 1);
    std::uint64_t n = 100000;
    double circ = 0;
    for (std::uint64_t r = 0; r < n; ++r)
    {
        ObstacleField field(params, derive_key({900, r}));
        auto start = random_admissible_start(field, derive_key({901, r}));
        auto out = simulate_trajectory(field, start, 0.1, {});
        circ += out.status == TrajectoryStatus::CirclingForever && out.events.empty();
    }
    double p = circling_probability(params);
    double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
    CHECK(std::abs(circ / static_cast<double>(n) - p) < 3 * sigma);
}

TEST_CASE("msd ensembles")
{
    std::vector<double> grid{0, 0.5, 1, 2, 4};
    auto bounded = msd_estimate(empty_medium(0.01, 1.5), 20, grid, 3);
    for (auto const& row : bounded.rows)
    {
        CHECK(row.msd <= 4 / (1.5 * 1.5) + 1e-12);
        CHECK(row.circling_frac == 1);
    }
    auto ballistic = msd_estimate(empty_medium(0.01, 0), 20, grid, 3);
    for (auto const& row : ballistic.rows)
    {
        CHECK(row.msd == doctest::Approx(row.t * row.t).epsilon(1e-12));
    }

    auto params = scaling_from(0.01, 1, 1, 0.5);
    auto one = msd_estimate(params, 64, grid, 17, 1);
    auto many = msd_estimate(params, 64, grid, 17, 4);
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        CHECK(one.rows[j].msd == many.rows[j].msd);
        CHECK(one.rows[j].msd_se == many.rows[j].msd_se);
        CHECK(one.rows[j].circling_frac == many.rows[j].circling_frac);
    }
}

TEST_CASE("event-rate study corner cases")
{
    auto study = event_rate_study({0.02, 0.01}, [](double) { return 1.0; }, 0, 1, 3, 50, 1);
    for (auto const& row : study.rows)
    {
        CHECK(row.p_recoll == 0);
        CHECK(row.p_interf == 0);
        CHECK(row.p_daisy == 0);
        CHECK(row.p_circ == 1);
    }
    CHECK(std::isnan(study.exponent_recoll));
}
