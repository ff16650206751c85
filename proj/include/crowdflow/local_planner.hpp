#pragma once

#include "crowdflow/flow_planner.hpp"
#include "crowdflow/world.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace crowdflow {

struct Pose2 {
    Vec2 position = Vec2::Zero();
    double heading = 0.0;
};

/// Pose after travelling arc length s along a constant-curvature arc that
/// starts at the origin heading along +x.
Pose2 arc_pose(double curvature, double s);

/// Expresses a pose given in `origin`'s local frame in world coordinates.
Pose2 to_world(const Pose2& origin, const Pose2& local);

inline constexpr double kPrimitiveSpacing = 0.1;  // m

struct MotionPrimitive {
    int id = 0;
    double curvature = 0.0;  // 1/m
    double length = 0.0;     // m
    std::vector<Pose2> samples;  // local frame, s = 0, 0.1, ..., length
};

struct LibraryParams {
    int count = 21;
    double max_curvature = 1.0;
    double length = 2.5;
    double robot_radius = 0.4;
    double inflation = 0.1;
};

struct TrajectoryLibrary {
    std::vector<MotionPrimitive> primitives;  // ascending curvature
    double robot_radius = 0.4;
    double inflation = 0.1;

    const MotionPrimitive& straight() const { return primitives[primitives.size() / 2]; }
};

/// Curvatures evenly spaced over [-max, max], the middle one exactly zero.
/// Throws std::invalid_argument for an even count, count < 3, a
/// non-positive max curvature or length.
TrajectoryLibrary build_library(const LibraryParams& params = {});

struct Obstacle {
    Vec2 position = Vec2::Zero();
    double radius = 0.3;
    Vec2 velocity = Vec2::Zero();
};

struct LocalPlanOptions {
    /// Move obstacles at constant velocity over the traversal time of each
    /// sample instead of treating them as static discs.
    bool extrapolate_obstacles = false;
    double cruise_speed = 1.0;
    /// When set, a primitive that takes the robot disc outside this region
    /// is blocked as well.
    std::optional<Arena> bounds;
};

struct LocalPlan {
    std::optional<int> primitive;  // index into the library; empty means stop
    std::size_t samples = 0;       // leading samples checked and followed
    double extent = 0.0;           // arc length of those samples

    bool stopped() const { return !primitive.has_value(); }
};

inline constexpr std::size_t kAllSamples = static_cast<std::size_t>(-1);

/// Smallest surface clearance (center distance minus the robot radius, the
/// obstacle radius and the inflation) over the first `samples` samples and
/// all obstacles. Positive means the primitive is free.
double primitive_clearance(const TrajectoryLibrary& lib, const MotionPrimitive& primitive, const Pose2& robot,
                           std::span<const Obstacle> obstacles, const LocalPlanOptions& options = {},
                           std::size_t samples = kAllSamples);

/// True when the first `samples` samples keep the robot disc inside `bounds`.
bool primitive_in_bounds(const TrajectoryLibrary& lib, const MotionPrimitive& primitive, const Pose2& robot,
                         const Arena& bounds, std::size_t samples = kAllSamples);

bool primitive_blocked(const TrajectoryLibrary& lib, const MotionPrimitive& primitive, const Pose2& robot,
                       std::span<const Obstacle> obstacles, const LocalPlanOptions& options = {},
                       std::size_t samples = kAllSamples);

/// Among unblocked primitives, picks the one whose endpoint lands closest to
/// the waypoint; ties go to the smaller |curvature|, then the smaller id.
/// Stops only when every primitive is blocked. A waypoint closer than the
/// primitive length cuts each primitive at its sample nearest the waypoint,
/// and only that prefix is checked, scored and followed.
LocalPlan plan_local(const TrajectoryLibrary& lib, const Pose2& robot, std::span<const Obstacle> obstacles,
                     const Waypoint& waypoint, const LocalPlanOptions& options = {});

/// Velocity of magnitude `cruise_speed` along the selected primitive's
/// initial tangent, which is the robot heading; zero on stop.
Vec2 command_velocity(const LocalPlan& plan, const Pose2& robot, double cruise_speed);

/// Chord velocity that moves the robot from arc length `travelled` to
/// `travelled + cruise_speed * dt` along `primitive`, anchored at the pose
/// the primitive was planned from. Integrating it for dt lands exactly on
/// the arc, which lets a heading-follows-velocity robot turn.
/// Motion ends at `extent` when it is shorter than the primitive.
Vec2 tracking_velocity(const MotionPrimitive& primitive, const Pose2& origin, double travelled, double cruise_speed,
                       double dt, double extent = std::numeric_limits<double>::infinity());

/// CSV with header "id,curvature,x,y,heading", one row per sample.
void export_primitives_csv(std::ostream& os, const TrajectoryLibrary& lib);

}  // namespace crowdflow
