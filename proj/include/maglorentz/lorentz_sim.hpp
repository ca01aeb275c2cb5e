//---------------------------------------------------------------------------//
//! \file maglorentz/lorentz_sim.hpp
//! Event-driven dynamics of a charged particle among Poisson hard disks.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "medium.hpp"

namespace mlg
{
//---------------------------------------------------------------------------//
enum class EventKind
{
    Fresh,
    SelfRecollision,
    Recollision
};

enum class TrajectoryStatus
{
    Completed,
    CirclingForever,
    TrappedDaisy
};

char const* to_string(EventKind kind);
char const* to_string(TrajectoryStatus status);

struct CollisionEvent
{
    double hit_time = 0;
    double exit_time = 0;  //!< equal to hit_time for hard disks
    ObstacleId obstacle;
    PlanarPoint impact_vector;
    double impact_parameter = 0;
    EventKind kind = EventKind::Fresh;
};

struct DisplacementSample
{
    double time = 0;
    PlanarPoint position;
};

struct TrajectoryOutcome
{
    ParticleState final_state;
    double elapsed = 0;
    TrajectoryStatus status = TrajectoryStatus::Completed;
    std::vector<CollisionEvent> events;
    std::vector<DisplacementSample> displacement_samples;

    //! Time at which circling or daisy trapping was established (else +inf)
    double trapped_at = 0;
    //! Number of leaves in the detected daisy cycle (0 if none)
    int daisy_period = 0;
    //! Flights that came within 2 eps of a previously hit obstacle
    std::uint64_t near_misses = 0;
};

struct SimulationOptions
{
    std::uint64_t max_events = 5'000'000;
    int daisy_max_leaves = 64;
    double daisy_tolerance = 1e-9;
};

//! Raised when a trajectory exceeds the configured event cap.
class EventCapExceeded : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//---------------------------------------------------------------------------//
/*!
 * Bucketed obstacle lookup for one trajectory.
 *
 * Cells of the lazy field are materialized on first touch and split into
 * square buckets. An explicit obstacle list can be indexed the same way,
 * with ids in cell (0, 0).
 */
class ObstacleIndex
{
  public:
    struct Entry
    {
        PlanarPoint center;
        ObstacleId id;
    };

    explicit ObstacleIndex(ObstacleField const& field);
    ObstacleIndex(std::vector<PlanarPoint> const& centers, double eps, double bucket_size);

    double eps() const { return eps_; }
    double bucket_size() const { return bucket_; }
    bool empty_medium() const { return empty_; }

    //! Visit every obstacle whose center may lie in the box [lo, hi].
    template<class F>
    void for_each_in_box(PlanarPoint lo, PlanarPoint hi, F&& visit)
    {
        if (empty_)
        {
            return;
        }
        auto x0 = bucket_coord(lo.x), x1 = bucket_coord(hi.x);
        auto y0 = bucket_coord(lo.y), y1 = bucket_coord(hi.y);
        for (auto gx = x0; gx <= x1; ++gx)
        {
            for (auto gy = y0; gy <= y1; ++gy)
            {
                auto [first, last] = bucket({gx, gy});
                for (auto const* e = first; e != last; ++e)
                {
                    visit(*e);
                }
            }
        }
    }

    //! True iff no indexed obstacle center lies within eps of x.
    bool is_admissible(PlanarPoint x);

  private:
    struct Key
    {
        std::int64_t x, y;
        friend bool operator==(Key const&, Key const&) = default;
    };
    struct KeyHash
    {
        std::size_t operator()(Key const& k) const;
    };
    // Entries of one cell sorted by bucket, with CSR offsets
    struct Cell
    {
        std::vector<Entry> entries;
        std::vector<std::uint32_t> offsets;
    };

    ObstacleField const* field_ = nullptr;
    double eps_ = 0;
    double bucket_ = 1;
    std::int64_t per_cell_ = 1;
    bool empty_ = false;
    std::unordered_map<Key, Cell, KeyHash> cells_;
    Key cached_key_{0, 0};
    Cell const* cached_ = nullptr;

    std::int64_t bucket_coord(double x) const;
    std::pair<Entry const*, Entry const*> bucket(Key key);
    Cell const& cell(Key key);
    void build_cell(Cell& cell, Key key, std::vector<PlanarPoint> const& centers);
};

//---------------------------------------------------------------------------//
/*!
 * Exact event-driven evolution up to t_max.
 *
 * Positions are recorded at the requested (increasing) sample times. For
 * B > 0 a flight that completes a full period without contact ends the run
 * as CirclingForever; a closed cycle of self-recollisions ends it as
 * TrappedDaisy. In both cases the remaining samples follow the periodic
 * motion exactly.
 */
TrajectoryOutcome simulate_trajectory(ObstacleIndex& index,
                                      double B,
                                      ParticleState start,
                                      double t_max,
                                      std::span<const double> sample_times,
                                      SimulationOptions const& options = {});

TrajectoryOutcome simulate_trajectory(ObstacleField const& field,
                                      ParticleState start,
                                      double t_max,
                                      std::span<const double> sample_times,
                                      SimulationOptions const& options = {});

//---------------------------------------------------------------------------//
struct EventCounts
{
    std::uint64_t fresh = 0;
    std::uint64_t self_recollisions = 0;
    std::uint64_t recollisions = 0;
    std::uint64_t daisy_leaf_max = 0;
};

EventCounts classify_events(std::span<const CollisionEvent> events);

//! Kind of each event recomputed from the obstacle sequence alone.
std::vector<EventKind> classify_sequence(std::span<const ObstacleId> obstacles);

//---------------------------------------------------------------------------//
//! Uniform admissible position in cell (0, 0) and uniform direction.
ParticleState random_admissible_start(ObstacleField const& field, std::uint64_t key);

struct MsdRow
{
    double t = 0;
    double msd = 0;
    double msd_se = 0;
    double circling_frac = 0;
};

struct MsdResult
{
    std::vector<MsdRow> rows;
    std::uint64_t n_replicas = 0;
    std::uint64_t n_aborted = 0;
    double trapped_daisy_frac = 0;
};

MsdResult msd_estimate(ScalingParams const& params,
                       std::uint64_t n_replicas,
                       std::vector<double> const& time_grid,
                       std::uint64_t seed,
                       unsigned workers = 1,
                       SimulationOptions const& options = {});

//---------------------------------------------------------------------------//
struct EventRateRow
{
    double eps = 0;
    double eta = 0;
    double p_recoll = 0, p_recoll_se = 0;
    double p_interf = 0, p_interf_se = 0;
    double p_daisy = 0, p_daisy_se = 0;
    double p_circ = 0, p_circ_se = 0;
    double p_circ_closed_form = 0;
    double p_self_recoll = 0;
    std::uint64_t n_replicas = 0;
    std::uint64_t n_aborted = 0;
};

struct EventRateStudy
{
    std::vector<EventRateRow> rows;
    double exponent_recoll = 0;
    double exponent_interf = 0;
    double exponent_daisy = 0;
    double exponent_circ = 0;
};

EventRateStudy event_rate_study(std::vector<double> const& eps_list,
                                std::function<double(double)> const& eta_rule,
                                double mu,
                                double B,
                                double t,
                                std::uint64_t n_replicas,
                                std::uint64_t seed,
                                unsigned workers = 1,
                                SimulationOptions const& options = {});

}  // namespace mlg
