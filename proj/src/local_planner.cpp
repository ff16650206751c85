#include "crowdflow/local_planner.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace crowdflow {

Pose2 arc_pose(double curvature, double s)
{
    if (curvature == 0.0) return {Vec2(s, 0.0), 0.0};
    const double turn = curvature * s;
    return {Vec2(std::sin(turn) / curvature, (1.0 - std::cos(turn)) / curvature), turn};
}

Pose2 to_world(const Pose2& origin, const Pose2& local)
{
    const double c = std::cos(origin.heading);
    const double s = std::sin(origin.heading);
    const Vec2 p(c * local.position.x() - s * local.position.y(), s * local.position.x() + c * local.position.y());
    return {origin.position + p, wrap_angle(origin.heading + local.heading)};
}

TrajectoryLibrary build_library(const LibraryParams& params)
{
    if (params.count < 3 || params.count % 2 == 0)
        throw std::invalid_argument("build_library: primitive count must be odd and >= 3");
    if (!(params.max_curvature > 0.0)) throw std::invalid_argument("build_library: max curvature must be positive");
    if (!(params.length > 0.0)) throw std::invalid_argument("build_library: length must be positive");
    if (!(params.robot_radius > 0.0)) throw std::invalid_argument("build_library: robot radius must be positive");
    if (params.inflation < 0.0) throw std::invalid_argument("build_library: inflation must be >= 0");

    TrajectoryLibrary lib;
    lib.robot_radius = params.robot_radius;
    lib.inflation = params.inflation;

    const int half = (params.count - 1) / 2;
    // Whole sample steps, plus the exact endpoint when length is not a multiple.
    const auto steps = static_cast<int>(std::floor(params.length / kPrimitiveSpacing + 1e-9));
    for (int i = 0; i < params.count; ++i) {
        MotionPrimitive p;
        p.id = i;
        p.curvature = params.max_curvature * static_cast<double>(i - half) / static_cast<double>(half);
        p.length = params.length;
        for (int k = 0; k <= steps; ++k) p.samples.push_back(arc_pose(p.curvature, k * kPrimitiveSpacing));
        if (params.length - steps * kPrimitiveSpacing > 1e-9) p.samples.push_back(arc_pose(p.curvature, p.length));
        lib.primitives.push_back(std::move(p));
    }
    return lib;
}

namespace {

double sample_arc_length(const MotionPrimitive& p, std::size_t k)
{
    return std::min(static_cast<double>(k) * kPrimitiveSpacing, p.length);
}

}  // namespace

double primitive_clearance(const TrajectoryLibrary& lib, const MotionPrimitive& primitive, const Pose2& robot,
                           std::span<const Obstacle> obstacles, const LocalPlanOptions& options, std::size_t samples)
{
    double clearance = std::numeric_limits<double>::infinity();
    const std::size_t n = std::min(samples, primitive.samples.size());
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 p = to_world(robot, primitive.samples[k]).position;
        const double t = options.extrapolate_obstacles && options.cruise_speed > 0.0
                             ? sample_arc_length(primitive, k) / options.cruise_speed
                             : 0.0;
        for (const auto& o : obstacles) {
            const Vec2 q = o.position + o.velocity * t;
            clearance = std::min(clearance, (p - q).norm() - (lib.robot_radius + o.radius + lib.inflation));
        }
    }
    return clearance;
}

bool primitive_in_bounds(const TrajectoryLibrary& lib, const MotionPrimitive& primitive, const Pose2& robot,
                         const Arena& bounds, std::size_t samples)
{
    const Vec2 margin = Vec2::Constant(lib.robot_radius);
    const std::size_t n = std::min(samples, primitive.samples.size());
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 p = to_world(robot, primitive.samples[k]).position;
        if ((p.array() < (bounds.min + margin).array()).any() || (p.array() > (bounds.max - margin).array()).any())
            return false;
    }
    return true;
}

bool primitive_blocked(const TrajectoryLibrary& lib, const MotionPrimitive& primitive, const Pose2& robot,
                       std::span<const Obstacle> obstacles, const LocalPlanOptions& options, std::size_t samples)
{
    if (options.bounds && !primitive_in_bounds(lib, primitive, robot, *options.bounds, samples)) return true;
    return !(primitive_clearance(lib, primitive, robot, obstacles, options, samples) > 0.0);
}

LocalPlan plan_local(const TrajectoryLibrary& lib, const Pose2& robot, std::span<const Obstacle> obstacles,
                     const Waypoint& waypoint, const LocalPlanOptions& options)
{
    LocalPlan plan;
    double best_distance = std::numeric_limits<double>::infinity();
    const bool near = !lib.primitives.empty() &&
                      (waypoint.position - robot.position).norm() < lib.primitives.front().length;
    for (std::size_t i = 0; i < lib.primitives.size(); ++i) {
        const auto& p = lib.primitives[i];
        std::size_t n = p.samples.size();
        double d = (to_world(robot, p.samples.back()).position - waypoint.position).norm();
        if (near) {
            // Never cut at the start sample, which would park the robot.
            for (std::size_t k = 1; k < p.samples.size(); ++k) {
                const double dk = (to_world(robot, p.samples[k]).position - waypoint.position).norm();
                if (dk < d) {
                    d = dk;
                    n = k + 1;
                }
            }
        }
        if (primitive_blocked(lib, p, robot, obstacles, options, n)) continue;
        bool better = d < best_distance;
        if (!better && d == best_distance) {
            const auto& current = lib.primitives[static_cast<std::size_t>(*plan.primitive)];
            const double a = std::abs(p.curvature);
            const double b = std::abs(current.curvature);
            better = a < b || (a == b && p.id < current.id);
        }
        if (better) {
            best_distance = d;
            plan.primitive = static_cast<int>(i);
            plan.samples = n;
            plan.extent = sample_arc_length(p, n - 1);
        }
    }
    return plan;
}

Vec2 command_velocity(const LocalPlan& plan, const Pose2& robot, double cruise_speed)
{
    if (plan.stopped()) return Vec2::Zero();
    return cruise_speed * direction_of(robot.heading);
}

Vec2 tracking_velocity(const MotionPrimitive& primitive, const Pose2& origin, double travelled, double cruise_speed,
                       double dt, double extent)
{
    const double end = std::min(extent, primitive.length);
    const double from = std::min(travelled, end);
    const double to = std::min(travelled + cruise_speed * dt, end);
    const Vec2 a = to_world(origin, arc_pose(primitive.curvature, from)).position;
    const Vec2 b = to_world(origin, arc_pose(primitive.curvature, to)).position;
    return (b - a) / dt;
}

void export_primitives_csv(std::ostream& os, const TrajectoryLibrary& lib)
{
    os << "id,curvature,x,y,heading\n" << std::fixed << std::setprecision(6);
    for (const auto& p : lib.primitives)
        for (const auto& s : p.samples)
            os << p.id << ',' << p.curvature << ',' << s.position.x() << ',' << s.position.y() << ',' << s.heading
               << '\n';
}

}  // namespace crowdflow
