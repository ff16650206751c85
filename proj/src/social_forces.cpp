#include "crowdflow/social_forces.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

namespace crowdflow {

void ForceParams::validate() const
{
    const std::pair<const char*, double> fields[] = {
        {"tau", tau},
        {"repulsion_strength", repulsion_strength},
        {"repulsion_range", repulsion_range},
        {"gaze", gaze},
        {"attraction", attraction},
        {"group_repulsion", group_repulsion},
        {"attraction_threshold", attraction_threshold},
        {"group_repulsion_distance", group_repulsion_distance},
    };
    for (const auto& [name, value] : fields)
        if (!(value > 0.0) || !std::isfinite(value))
            throw std::invalid_argument(std::string("ForceParams.") + name + " must be positive and finite");
}

Vec2 driving_force(const AgentState& agent, const ForceParams& params)
{
    const Vec2 to_goal = agent.goal - agent.position;
    if (to_goal.norm() < kArrivalRadius) return Vec2::Zero();
    const Vec2 desired = agent.desired_speed * unit_or_zero(to_goal);
    return (desired - agent.velocity) / params.tau;
}

Vec2 repulsive_force(const AgentState& i, const AgentState& j, const ForceParams& params)
{
    const double cap = 10.0 * params.repulsion_strength;
    const Vec2 offset = i.position - j.position;
    const double d = offset.norm();
    if (d < 1e-9) return {cap, 0.0};
    const double magnitude =
        params.repulsion_strength * std::exp((i.radius + j.radius - d) / params.repulsion_range);
    return std::min(magnitude, cap) * (offset / d);
}

Vec2 group_force(const AgentState& agent, std::span<const AgentState> members, const ForceParams& params)
{
    if (members.empty()) return Vec2::Zero();

    Vec2 centroid = Vec2::Zero();
    for (const auto& m : members) centroid += m.position;
    centroid /= static_cast<double>(members.size());

    const Vec2 to_centroid = centroid - agent.position;
    const double dist = to_centroid.norm();

    // Rotation needed to bring the centroid back inside the +-90 deg field.
    Vec2 gaze = Vec2::Zero();
    if (dist > 1e-9) {
        const double bearing = wrap_angle(heading_of(to_centroid) - agent.heading);
        const double alpha = std::clamp(std::abs(bearing) - std::numbers::pi / 2, 0.0, std::numbers::pi / 2);
        gaze = -params.gaze * alpha * direction_of(agent.heading);
    }

    Vec2 attraction = Vec2::Zero();
    if (dist > params.attraction_threshold) attraction = params.attraction * (to_centroid / dist);

    Vec2 repulsion = Vec2::Zero();
    for (const auto& m : members) {
        const Vec2 away = agent.position - m.position;
        const double d = away.norm();
        if (d >= params.group_repulsion_distance) continue;
        repulsion += params.group_repulsion * (d < 1e-9 ? Vec2(1.0, 0.0) : Vec2(away / d));
    }
    return gaze + attraction + repulsion;
}

ForceSet total_force(const AgentState& agent, std::span<const AgentState> others,
                     std::span<const AgentState> group_members, const ForceParams& params)
{
    const auto in_group = [&](AgentId id) {
        return std::any_of(group_members.begin(), group_members.end(),
                           [id](const AgentState& m) { return m.id == id; });
    };

    ForceSet f;
    f.driving = driving_force(agent, params);
    for (const auto& other : others) {
        if (other.id == agent.id || in_group(other.id)) continue;
        f.repulsive += repulsive_force(agent, other, params);
    }
    f.group = group_force(agent, group_members, params);
    f.total = f.driving + f.repulsive + f.group;
    return f;
}

}  // namespace crowdflow
