#pragma once

#include "crowdflow/flow_planner.hpp"
#include "crowdflow/group_inference.hpp"
#include "crowdflow/local_planner.hpp"
#include "crowdflow/social_forces.hpp"
#include "crowdflow/world.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crowdflow {

enum class NavigationMode { with_social_model, without_social_model };

const char* to_string(NavigationMode mode);
/// Accepts "with", "without", "with_social_model" and "without_social_model".
std::optional<NavigationMode> parse_mode(std::string_view text);

/// Derives an independent seed for a named random stream.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

inline constexpr AgentId kRobotId = 0;

struct PedestrianGroupSpec {
    int members = 3;
    Arena spawn_region;
    Vec2 goal = Vec2::Zero();
    double desired_speed = 1.34;
};

struct RobotSpec {
    Vec2 start{1.0, 5.0};
    Vec2 goal{19.0, 5.0};
    double cruise_speed = 1.0;
    double radius = 0.4;
};

struct PlannerParams {
    int replan_every = 4;  // sim steps per planner tick
    double lookahead = 3.0;
    double sensing_range = 8.0;
    int smoothing_window = 5;  // planner ticks
    int feature_window = 8;    // planner ticks
    FlowSelectionParams selection;
    LinearClassifier classifier;
    LibraryParams library;
    bool extrapolate_obstacles = false;
    /// While following, drive at the flow's speed (capped at cruise speed)
    /// instead of overtaking it.
    bool match_group_speed = true;
    EncoderConfig encoder;
    int noise_dim = 8;
    std::optional<PlannerWeights> weights;
};

struct ScenarioConfig {
    Arena arena;
    std::vector<PedestrianGroupSpec> groups;
    RobotSpec robot;
    NavigationMode mode = NavigationMode::with_social_model;
    std::uint64_t seed = 0;
    double dt = 0.1;
    double max_duration = 120.0;
    double pedestrian_radius = 0.3;
    double v_max = 2.0;
    double goal_tolerance = 0.3;
    bool pedestrians_see_robot = true;
    ForceParams forces;
    PlannerParams planner;

    /// Every violated constraint, one message per offending key.
    std::vector<std::string> validate() const;
};

/// Positions of every agent at every recorded time.
struct Trajectories {
    std::vector<double> times;
    std::map<AgentId, std::vector<Vec2>> positions;
    std::map<AgentId, AgentKind> kinds;
    std::map<AgentId, double> radii;
};

struct CollisionEvent {
    AgentId pedestrian = 0;
    double start = 0.0;
    double end = 0.0;  // last overlapping timestamp
};

struct CollisionSummary {
    int count = 0;
    std::vector<CollisionEvent> events;
};

/// One record per social-planner tick.
struct PlannerTick {
    long step = 0;
    double time = 0.0;
    Pose2 robot_pose;
    Waypoint waypoint;
    std::vector<AgentId> followed_members;
    Vec2 followed_velocity = Vec2::Zero();
    std::vector<Obstacle> obstacles;
    LocalPlan plan;
    Vec2 command = Vec2::Zero();
    double pooled_norm = 0.0;
};

struct SimResult {
    NavigationMode mode = NavigationMode::with_social_model;
    std::uint64_t seed = 0;
    Trajectories trajectories;
    std::map<AgentId, int> scripted_groups;
    std::vector<PlannerTick> ticks;
    CollisionSummary collisions;
    double min_clearance = 0.0;  // m, surface distance robot-pedestrian
    double path_length = 0.0;
    double travel_time = 0.0;
    bool goal_reached = false;
    double disturbance = 0.0;
    long steps = 0;
};

/// Mutable per-run planner memory, owned by the caller of step().
struct PlannerState {
    TrajectoryLibrary library;
    HistoryEncoder encoder;
    std::optional<EmbeddingDecoder> decoder;
    std::map<AgentId, int> scripted_groups;
    std::map<AgentId, TrackHistory> tracks;  // sampled at planner ticks
    std::vector<GroupAssignment> assignments;
    std::map<AgentId, bool> arrived;
    std::optional<int> active_primitive;
    double active_extent = 0.0;
    double active_speed = 0.0;
    Pose2 plan_origin;
    double travelled = 0.0;
    long step = 0;
    std::vector<PlannerTick> ticks;
};

/// Places pedestrians (seeded "spawn" stream) and, when asked, the robot.
/// The spawn layout does not depend on whether the robot is included.
WorldState spawn_world(const ScenarioConfig& config, bool with_robot, std::map<AgentId, int>* scripted_groups = nullptr);

PlannerState make_planner_state(const ScenarioConfig& config, std::map<AgentId, int> scripted_groups);

/// Advances the world by one step: social forces for pedestrians, the
/// layered planner for the robot. Throws std::invalid_argument if dt differs
/// from config.dt and std::runtime_error naming the step and agent when a
/// state turns non-finite.
WorldState step(const WorldState& world, const ScenarioConfig& config, PlannerState& planner, double dt);

/// Runs until the robot reaches its goal or max_duration elapses, then
/// replays the same seed without the robot for the disturbance metric.
SimResult run_scenario(const ScenarioConfig& config);

/// Maximal intervals of robot-pedestrian overlap, counted per pedestrian.
CollisionSummary collision_count(const Trajectories& trajectories, AgentId robot = kRobotId);

/// Mean over pedestrians of the time-averaged displacement from the
/// baseline run, over the timestamps of `with_robot`. Throws
/// std::invalid_argument if the pedestrian sets or timestamps disagree.
double disturbance_metric(const Trajectories& with_robot, const Trajectories& baseline);

/// Smallest surface distance between the robot and any pedestrian.
double min_clearance(const Trajectories& trajectories, AgentId robot = kRobotId);

double path_length(const std::vector<Vec2>& path);

/// Minimum clearance of every followed primitive against the obstacle
/// snapshot it was planned with; positive means the safety layer held.
double audit_planner_safety(const SimResult& result, const TrajectoryLibrary& library,
                            const LocalPlanOptions& options = {});

}  // namespace crowdflow
