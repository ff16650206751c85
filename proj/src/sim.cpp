#include "crowdflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace crowdflow {

const char* to_string(NavigationMode mode)
{
    return mode == NavigationMode::with_social_model ? "with_social_model" : "without_social_model";
}

std::optional<NavigationMode> parse_mode(std::string_view text)
{
    if (text == "with" || text == "with_social_model") return NavigationMode::with_social_model;
    if (text == "without" || text == "without_social_model") return NavigationMode::without_social_model;
    return std::nullopt;
}

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name)
{
    // FNV-1a of the stream name, mixed into the seed with splitmix64.
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::string> ScenarioConfig::validate() const
{
    std::vector<std::string> errors;
    const auto positive = [&](const std::string& key, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) errors.push_back(key + ": must be positive");
    };
    if (!(arena.width() > 0.0) || !(arena.height() > 0.0)) errors.push_back("arena: must have positive extent");
    positive("dt", dt);
    positive("max_duration", max_duration);
    positive("pedestrian_radius", pedestrian_radius);
    positive("v_max", v_max);
    positive("goal_tolerance", goal_tolerance);
    positive("robot.cruise_speed", robot.cruise_speed);
    positive("robot.radius", robot.radius);
    if (!arena.contains(robot.start)) errors.push_back("robot.start: outside arena");
    if (!arena.contains(robot.goal)) errors.push_back("robot.goal: outside arena");
    if (robot.cruise_speed > v_max) errors.push_back("robot.cruise_speed: exceeds v_max");

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& spec = groups[g];
        const std::string key = "groups[" + std::to_string(g) + "]";
        if (spec.members < 1) errors.push_back(key + ".members: must be >= 1");
        if (!arena.contains(spec.spawn_region.min) || !arena.contains(spec.spawn_region.max) ||
            spec.spawn_region.width() < 0.0 || spec.spawn_region.height() < 0.0)
            errors.push_back(key + ".spawn: must be a rectangle inside the arena");
        if (!arena.contains(spec.goal)) errors.push_back(key + ".goal: outside arena");
        if (!(spec.desired_speed >= 0.0) || spec.desired_speed > v_max)
            errors.push_back(key + ".desired_speed: must lie in [0, v_max]");
    }

    const std::pair<const char*, double> force_fields[] = {
        {"forces.tau", forces.tau},
        {"forces.repulsion_strength", forces.repulsion_strength},
        {"forces.repulsion_range", forces.repulsion_range},
        {"forces.gaze", forces.gaze},
        {"forces.attraction", forces.attraction},
        {"forces.group_repulsion", forces.group_repulsion},
        {"forces.attraction_threshold", forces.attraction_threshold},
        {"forces.group_repulsion_distance", forces.group_repulsion_distance},
    };
    for (const auto& [key, value] : force_fields) positive(key, value);

    const auto& p = planner;
    if (p.replan_every < 1) errors.push_back("planner.replan_every: must be >= 1");
    positive("planner.lookahead", p.lookahead);
    positive("planner.sensing_range", p.sensing_range);
    if (p.smoothing_window < 1) errors.push_back("planner.smoothing_window: must be >= 1");
    if (p.feature_window < 1) errors.push_back("planner.feature_window: must be >= 1");
    if (p.selection.min_speed < 0.0) errors.push_back("planner.min_group_speed: must be >= 0");
    if (p.selection.distance_penalty < 0.0) errors.push_back("planner.distance_penalty: must be >= 0");
    if (p.library.count < 3 || p.library.count % 2 == 0)
        errors.push_back("planner.library.count: must be odd and >= 3");
    positive("planner.library.max_curvature", p.library.max_curvature);
    positive("planner.library.length", p.library.length);
    if (p.library.inflation < 0.0) errors.push_back("planner.library.inflation: must be >= 0");
    if (p.encoder.dimension < 1) errors.push_back("planner.encoder.dimension: must be >= 1");
    positive("planner.encoder.weight_scale", p.encoder.weight_scale);
    if (p.encoder.history_length < 1) errors.push_back("planner.encoder.history_length: must be >= 1");
    if (p.noise_dim < 0) errors.push_back("planner.noise_dim: must be >= 0");
    if (p.weights) {
        if (p.weights->dimension != p.encoder.dimension)
            errors.push_back("planner.weights: dimension differs from planner.encoder.dimension");
        if (p.weights->noise_dim != p.noise_dim)
            errors.push_back("planner.weights: noise dimension differs from planner.noise_dim");
    }
    return errors;
}

WorldState spawn_world(const ScenarioConfig& config, bool with_robot, std::map<AgentId, int>* scripted_groups)
{
    WorldState world;
    world.arena = config.arena;

    std::mt19937_64 rng(substream_seed(config.seed, "spawn"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double min_gap = 2.0 * config.pedestrian_radius + 0.2;
    const double robot_gap = config.pedestrian_radius + config.robot.radius + 0.5;

    std::vector<Vec2> placed;
    AgentId next_id = 1;
    for (std::size_t g = 0; g < config.groups.size(); ++g) {
        const auto& spec = config.groups[g];
        const Vec2 center = 0.5 * (spec.spawn_region.min + spec.spawn_region.max);
        for (int m = 0; m < spec.members; ++m) {
            Vec2 p = center;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                p = spec.spawn_region.min +
                    Vec2(unit(rng) * spec.spawn_region.width(), unit(rng) * spec.spawn_region.height());
                const bool clear_of_peds = std::all_of(placed.begin(), placed.end(),
                                                       [&](const Vec2& q) { return (p - q).norm() >= min_gap; });
                if (clear_of_peds && (p - config.robot.start).norm() >= robot_gap) break;
            }
            placed.push_back(p);

            AgentState a;
            a.id = next_id++;
            a.kind = AgentKind::pedestrian;
            a.position = p;
            a.radius = config.pedestrian_radius;
            a.desired_speed = spec.desired_speed;
            // Members keep their offset inside the formation all the way to the goal.
            a.goal = config.arena.clamp(spec.goal + (p - center));
            a.velocity = spec.desired_speed * unit_or_zero<double>(a.goal - p);
            a.heading = heading_of(Vec2(a.goal - p));
            world.agents.push_back(a);
            if (scripted_groups) (*scripted_groups)[a.id] = static_cast<int>(g);
        }
    }

    if (with_robot) {
        AgentState r;
        r.id = kRobotId;
        r.kind = AgentKind::robot;
        r.position = config.robot.start;
        r.radius = config.robot.radius;
        r.desired_speed = config.robot.cruise_speed;
        r.goal = config.robot.goal;
        r.heading = heading_of(Vec2(config.robot.goal - config.robot.start));
        world.agents.insert(world.agents.begin(), r);
    }
    return world;
}

PlannerState make_planner_state(const ScenarioConfig& config, std::map<AgentId, int> scripted_groups)
{
    const auto& p = config.planner;
    EncoderConfig enc = p.encoder;
    enc.seed = substream_seed(config.seed, "encoder");

    PlannerState state;
    state.library = build_library(
        LibraryParams{p.library.count, p.library.max_curvature, p.library.length, config.robot.radius, p.library.inflation});
    state.encoder = p.weights ? HistoryEncoder(p.weights->recurrent, p.weights->input) : HistoryEncoder(enc);
    state.scripted_groups = std::move(scripted_groups);
    if (p.weights && p.weights->decoder) state.decoder.emplace(*p.weights->decoder);
    return state;
}

namespace {

void check_finite(const AgentState& a, long step)
{
    if (!is_finite(a.position) || !is_finite(a.velocity) || !std::isfinite(a.heading)) {
        std::ostringstream msg;
        msg << "non-finite state at step " << step << " for agent " << a.id;
        throw std::runtime_error(msg.str());
    }
}

void record_tracks(const WorldState& world, PlannerState& ps, std::size_t keep)
{
    for (const auto& a : world.agents) {
        auto& h = ps.tracks[a.id];
        h.push_back({world.time, a.position, a.velocity});
        if (h.size() > keep) h.erase(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(h.size() - keep));
    }
}

// Samples of `h` whose timestamps also appear in `ref`, newest last, at most n.
std::vector<std::pair<const TrackSample*, const TrackSample*>> common_tail(const TrackHistory& h,
                                                                          const TrackHistory& ref, std::size_t n)
{
    std::vector<std::pair<const TrackSample*, const TrackSample*>> out;
    auto ia = h.rbegin();
    auto ib = ref.rbegin();
    while (ia != h.rend() && ib != ref.rend() && out.size() < n) {
        if (std::abs(ia->time - ib->time) <= 1e-9) {
            out.emplace_back(&*ia++, &*ib++);
        } else if (ia->time > ib->time) {
            ++ia;
        } else {
            ++ib;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

// Encodes the robot and its visible neighbors and pools them. Empty until
// the robot has at least one displacement.
std::optional<PooledEmbedding> robot_embedding(const WorldState& world, const ScenarioConfig& config,
                                               const PlannerState& ps, const std::vector<AgentId>& visible,
                                               const GroupAssignment& groups, const std::optional<int>& followed)
{
    const auto& robot_track = ps.tracks.at(kRobotId);
    if (robot_track.size() < 2) return std::nullopt;
    const auto n = static_cast<std::size_t>(config.planner.encoder.history_length);

    std::vector<Vec2> own;
    const std::size_t first = robot_track.size() > n + 1 ? robot_track.size() - n - 1 : 0;
    for (std::size_t k = first + 1; k < robot_track.size(); ++k)
        own.push_back(robot_track[k].position - robot_track[k - 1].position);

    std::map<AgentId, HiddenState> hidden;
    std::map<AgentId, double> headings;
    GroupAssignment labels;
    hidden[kRobotId] = ps.encoder.encode(own, kRobotId, world.time);
    headings[kRobotId] = world.find(kRobotId)->heading;
    // The robot shares the label of the flow it joins; otherwise it is alone.
    labels.labels[kRobotId] = followed ? *followed : -1;

    for (const AgentId id : visible) {
        const auto it = ps.tracks.find(id);
        if (it == ps.tracks.end()) continue;
        std::vector<Vec2> relative;
        for (const auto& [sample, ref] : common_tail(it->second, robot_track, n))
            relative.push_back(sample->position - ref->position);
        if (relative.empty() || !groups.contains(id)) continue;
        hidden[id] = ps.encoder.encode(relative, id, world.time);
        headings[id] = world.find(id)->heading;
        labels.labels[id] = groups.group_of(id);
    }

    const Eigen::VectorXd pooled = group_pool(kRobotId, hidden, headings, labels);
    const auto tick = static_cast<std::uint64_t>(ps.step / config.planner.replan_every);
    return concat_embedding(pooled, hidden.at(kRobotId), substream_seed(config.seed, "planner-noise") + tick,
                            config.planner.noise_dim);
}

void planner_tick(const WorldState& world, const ScenarioConfig& config, PlannerState& ps)
{
    const auto& p = config.planner;
    const AgentState& robot = *world.find(kRobotId);

    std::vector<AgentId> visible;
    std::vector<Obstacle> obstacles;
    for (const auto& a : world.agents) {
        if (a.kind != AgentKind::pedestrian) continue;
        if ((a.position - robot.position).norm() > p.sensing_range) continue;
        visible.push_back(a.id);
        obstacles.push_back({a.position, a.radius, a.velocity});
    }

    PlannerTick tick;
    tick.step = ps.step;
    tick.time = world.time;
    tick.robot_pose = {robot.position, robot.heading};

    if (config.mode == NavigationMode::with_social_model) {
        std::map<AgentId, TrackHistory> seen;
        for (const AgentId id : visible) seen.emplace(id, ps.tracks.at(id));
        const auto window = static_cast<std::size_t>(p.feature_window);
        ps.assignments.push_back(infer_groups(seen, p.classifier, window));
        if (ps.assignments.size() > static_cast<std::size_t>(p.smoothing_window)) ps.assignments.erase(ps.assignments.begin());
        const GroupAssignment groups = smooth_assignment(ps.assignments, p.smoothing_window);

        const auto flows = group_flows(groups, seen, window, p.selection.min_members);
        const auto followed = select_group(flows, robot, config.robot.goal, p.selection);
        const GroupFlow* flow = nullptr;
        for (const auto& f : flows)
            if (followed && f.group == *followed) flow = &f;

        tick.waypoint = compute_waypoint(robot, config.robot.goal, flow, p.lookahead, config.arena);
        if (flow) {
            tick.followed_members = flow->members;
            tick.followed_velocity = flow->mean_velocity;
        }
        if (const auto embedding = robot_embedding(world, config, ps, visible, groups, followed)) {
            tick.pooled_norm = embedding->pooled.norm();
            if (ps.decoder)
                tick.waypoint.position =
                    config.arena.clamp(tick.waypoint.position + ps.decoder->offset(embedding->concatenated));
        }
    } else {
        tick.waypoint = compute_waypoint(robot, config.robot.goal, nullptr, p.lookahead, config.arena);
    }

    double speed = config.robot.cruise_speed;
    const auto plan = [&] {
        speed = config.robot.cruise_speed;
        if (p.match_group_speed && tick.waypoint.mode == WaypointMode::follow)
            speed = std::clamp(tick.followed_velocity.norm(), std::min(p.selection.min_speed, speed), speed);
        const LocalPlanOptions options{p.extrapolate_obstacles, speed, config.arena};
        tick.plan = plan_local(ps.library, tick.robot_pose, obstacles, tick.waypoint, options);
        tick.command = Vec2::Zero();
        if (tick.plan.primitive) {
            const auto& prim = ps.library.primitives[static_cast<std::size_t>(*tick.plan.primitive)];
            tick.command = tracking_velocity(prim, tick.robot_pose, 0.0, speed, config.dt, tick.plan.extent);
        }
    };
    plan();
    // A robot still facing away from the flow cannot join it yet.
    if (tick.waypoint.mode == WaypointMode::follow && tick.command.dot(tick.followed_velocity) < 0.0) {
        tick.waypoint = compute_waypoint(robot, config.robot.goal, nullptr, p.lookahead, config.arena);
        tick.followed_members.clear();
        tick.followed_velocity = Vec2::Zero();
        plan();
    }
    tick.obstacles = std::move(obstacles);

    ps.active_primitive = tick.plan.primitive;
    ps.active_extent = tick.plan.extent;
    ps.active_speed = speed;
    ps.plan_origin = tick.robot_pose;
    ps.travelled = 0.0;
    ps.ticks.push_back(std::move(tick));
}

}  // namespace

WorldState step(const WorldState& world, const ScenarioConfig& config, PlannerState& ps, double dt)
{
    if (dt != config.dt) throw std::invalid_argument("step: dt must equal config.dt");

    const KinematicLimits limits{config.v_max};
    const bool tick = ps.step % config.planner.replan_every == 0;
    if (tick) {
        const auto keep = static_cast<std::size_t>(
            std::max(config.planner.feature_window, config.planner.encoder.history_length) + 1);
        record_tracks(world, ps, keep);
    }

    WorldState next = world;
    std::vector<AgentState> members;
    std::vector<AgentState> others;
    for (std::size_t i = 0; i < world.agents.size(); ++i) {
        const AgentState& a = world.agents[i];
        if (a.kind != AgentKind::pedestrian) continue;
        AgentState& out = next.agents[i];

        if ((a.goal - a.position).norm() <= config.goal_tolerance) ps.arrived[a.id] = true;
        const bool arrived = ps.arrived[a.id];

        members.clear();
        others.clear();
        const auto group = ps.scripted_groups.find(a.id);
        for (const auto& b : world.agents) {
            if (b.id == a.id) continue;
            if (b.kind == AgentKind::robot && !config.pedestrians_see_robot) continue;
            others.push_back(b);
            const auto gb = ps.scripted_groups.find(b.id);
            if (!arrived && b.kind == AgentKind::pedestrian && group != ps.scripted_groups.end() &&
                gb != ps.scripted_groups.end() && gb->second == group->second)
                members.push_back(b);
        }
        // Arrived pedestrians stand still but still give way when pushed.
        ForceSet f;
        if (arrived) {
            for (const auto& b : others) f.repulsive += repulsive_force(a, b, config.forces);
            f.driving = -a.velocity / config.forces.tau;
            f.total = f.driving + f.repulsive;
        } else {
            f = total_force(a, others, members, config.forces);
        }
        if (!is_finite(f.total)) {
            std::ostringstream msg;
            msg << "non-finite force at step " << ps.step << " for agent " << a.id;
            throw std::runtime_error(msg.str());
        }
        out = integrate(a, f.total, dt, world.arena, limits);
        check_finite(out, ps.step);
    }

    if (const AgentState* robot = world.find(kRobotId)) {
        AgentState& out = *next.find(kRobotId);
        if (ps.arrived[kRobotId]) {
            out.velocity = Vec2::Zero();
        } else {
            if (tick) planner_tick(world, config, ps);
            Vec2 command = Vec2::Zero();
            if (ps.active_primitive) {
                const auto& prim = ps.library.primitives[static_cast<std::size_t>(*ps.active_primitive)];
                command = tracking_velocity(prim, ps.plan_origin, ps.travelled, ps.active_speed, dt, ps.active_extent);
                ps.travelled += ps.active_speed * dt;
            }
            out = integrate(*robot, (command - robot->velocity) / dt, dt, world.arena, limits);
            check_finite(out, ps.step);
            if ((out.goal - out.position).norm() <= config.goal_tolerance) ps.arrived[kRobotId] = true;
        }
    }

    next.time = world.time + dt;
    ++ps.step;
    return next;
}

namespace {

void record(const WorldState& world, Trajectories& t)
{
    t.times.push_back(world.time);
    for (const auto& a : world.agents) {
        t.positions[a.id].push_back(a.position);
        t.kinds[a.id] = a.kind;
        t.radii[a.id] = a.radius;
    }
}

struct RawRun {
    Trajectories trajectories;
    std::vector<PlannerTick> ticks;
    std::map<AgentId, int> scripted_groups;
    long steps = 0;
    bool goal_reached = false;
    double travel_time = 0.0;
};

RawRun simulate(const ScenarioConfig& config, bool with_robot, std::optional<long> fixed_steps)
{
    RawRun run;
    WorldState world = spawn_world(config, with_robot, &run.scripted_groups);
    PlannerState ps = make_planner_state(config, run.scripted_groups);
    const auto max_steps = static_cast<long>(std::llround(config.max_duration / config.dt));

    record(world, run.trajectories);
    while (true) {
        if (fixed_steps) {
            if (run.steps >= *fixed_steps) break;
        } else if (run.steps >= max_steps || (with_robot && ps.arrived[kRobotId])) {
            break;
        }
        world = step(world, config, ps, config.dt);
        ++run.steps;
        record(world, run.trajectories);
    }
    run.goal_reached = with_robot && ps.arrived[kRobotId];
    run.travel_time = world.time;
    run.ticks = std::move(ps.ticks);
    return run;
}

}  // namespace

SimResult run_scenario(const ScenarioConfig& config)
{
    if (const auto errors = config.validate(); !errors.empty()) {
        std::string msg = "invalid scenario:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::invalid_argument(msg);
    }

    RawRun run = simulate(config, true, std::nullopt);
    const RawRun baseline = simulate(config, false, run.steps);

    SimResult r;
    r.mode = config.mode;
    r.seed = config.seed;
    r.steps = run.steps;
    r.goal_reached = run.goal_reached;
    r.travel_time = run.travel_time;
    r.collisions = collision_count(run.trajectories);
    r.min_clearance = min_clearance(run.trajectories);
    r.path_length = path_length(run.trajectories.positions.at(kRobotId));
    r.disturbance = disturbance_metric(run.trajectories, baseline.trajectories);
    r.trajectories = std::move(run.trajectories);
    r.ticks = std::move(run.ticks);
    r.scripted_groups = std::move(run.scripted_groups);
    return r;
}

CollisionSummary collision_count(const Trajectories& t, AgentId robot)
{
    CollisionSummary summary;
    const auto rp = t.positions.find(robot);
    if (rp == t.positions.end()) return summary;
    const double robot_radius = t.radii.at(robot);

    for (const auto& [id, path] : t.positions) {
        if (id == robot) continue;
        const double limit = robot_radius + t.radii.at(id);
        const std::size_t n = std::min({path.size(), rp->second.size(), t.times.size()});
        std::optional<CollisionEvent> open;
        for (std::size_t k = 0; k < n; ++k) {
            const bool overlap = (rp->second[k] - path[k]).norm() < limit;
            if (overlap) {
                if (!open) open = CollisionEvent{id, t.times[k], t.times[k]};
                open->end = t.times[k];
            } else if (open) {
                summary.events.push_back(*open);
                open.reset();
            }
        }
        if (open) summary.events.push_back(*open);
    }
    std::stable_sort(summary.events.begin(), summary.events.end(),
                     [](const CollisionEvent& a, const CollisionEvent& b) { return a.start < b.start; });
    summary.count = static_cast<int>(summary.events.size());
    return summary;
}

double disturbance_metric(const Trajectories& with_robot, const Trajectories& baseline)
{
    std::vector<AgentId> peds;
    std::vector<AgentId> base_peds;
    for (const auto& [id, kind] : with_robot.kinds)
        if (kind == AgentKind::pedestrian) peds.push_back(id);
    for (const auto& [id, kind] : baseline.kinds)
        if (kind == AgentKind::pedestrian) base_peds.push_back(id);
    if (peds != base_peds) throw std::invalid_argument("disturbance_metric: pedestrian sets differ between runs");
    if (baseline.times.size() < with_robot.times.size())
        throw std::invalid_argument("disturbance_metric: baseline run is shorter than the compared run");
    for (std::size_t k = 0; k < with_robot.times.size(); ++k)
        if (std::abs(with_robot.times[k] - baseline.times[k]) > 1e-9)
            throw std::invalid_argument("disturbance_metric: runs are sampled at different times");
    if (peds.empty() || with_robot.times.empty()) return 0.0;

    double total = 0.0;
    for (const AgentId id : peds) {
        const auto& a = with_robot.positions.at(id);
        const auto& b = baseline.positions.at(id);
        double sum = 0.0;
        for (std::size_t k = 0; k < with_robot.times.size(); ++k) sum += (a[k] - b[k]).norm();
        total += sum / static_cast<double>(with_robot.times.size());
    }
    return total / static_cast<double>(peds.size());
}

double min_clearance(const Trajectories& t, AgentId robot)
{
    double best = std::numeric_limits<double>::infinity();
    const auto rp = t.positions.find(robot);
    if (rp == t.positions.end()) return best;
    const double robot_radius = t.radii.at(robot);
    for (const auto& [id, path] : t.positions) {
        if (id == robot) continue;
        const std::size_t n = std::min(path.size(), rp->second.size());
        for (std::size_t k = 0; k < n; ++k)
            best = std::min(best, (rp->second[k] - path[k]).norm() - robot_radius - t.radii.at(id));
    }
    return best;
}

double path_length(const std::vector<Vec2>& path)
{
    double len = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) len += (path[k] - path[k - 1]).norm();
    return len;
}

double audit_planner_safety(const SimResult& result, const TrajectoryLibrary& library, const LocalPlanOptions& options)
{
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& tick : result.ticks) {
        if (tick.plan.stopped()) continue;
        const auto& prim = library.primitives.at(static_cast<std::size_t>(*tick.plan.primitive));
        worst = std::min(worst, primitive_clearance(library, prim, tick.robot_pose, tick.obstacles, options, tick.plan.samples));
    }
    return worst;
}

}  // namespace crowdflow
