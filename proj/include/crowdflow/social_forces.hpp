#pragma once

#include "crowdflow/world.hpp"

#include <span>

namespace crowdflow {

/// Constants of the extended social force model. Forces are accelerations
/// (unit mass).
struct ForceParams {
    double tau = 0.5;                       // s, relaxation time
    double repulsion_strength = 2.1;        // m/s^2
    double repulsion_range = 0.3;           // m
    double gaze = 4.0;                      // 1/s^2
    double attraction = 3.0;                // m/s^2
    double group_repulsion = 1.0;           // m/s^2
    double attraction_threshold = 1.5;      // m
    double group_repulsion_distance = 0.8;  // m

    /// Throws std::invalid_argument naming the first non-positive field.
    void validate() const;
};

struct ForceSet {
    Vec2 driving = Vec2::Zero();
    Vec2 repulsive = Vec2::Zero();
    Vec2 group = Vec2::Zero();
    Vec2 total = Vec2::Zero();
};

/// Distance below which an agent counts as arrived and stops driving.
inline constexpr double kArrivalRadius = 0.1;

/// Relaxation toward desired_speed along the goal direction.
Vec2 driving_force(const AgentState& agent, const ForceParams& params);

/// Circular exponential repulsion exerted by j on i, capped at
/// 10 * repulsion_strength. Coincident agents are pushed along +x.
Vec2 repulsive_force(const AgentState& i, const AgentState& j, const ForceParams& params);

/// Intra-group interaction: a gaze term that slows the agent when the group
/// centroid leaves its frontal field, attraction to the centroid beyond
/// attraction_threshold, and short-range repulsion from each member closer
/// than group_repulsion_distance. `members` excludes the agent itself.
Vec2 group_force(const AgentState& agent, std::span<const AgentState> members, const ForceParams& params);

/// Sum of the three terms. Pairwise repulsion runs over `others` that are
/// not in `group_members`; cohesion governs spacing inside the group.
ForceSet total_force(const AgentState& agent, std::span<const AgentState> others,
                     std::span<const AgentState> group_members, const ForceParams& params);

}  // namespace crowdflow
