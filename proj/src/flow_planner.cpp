#include "crowdflow/flow_planner.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <string>

namespace crowdflow {

Eigen::VectorXd group_pool(AgentId target, const std::map<AgentId, HiddenState>& hidden,
                           const std::map<AgentId, double>& headings, const GroupAssignment& assignment)
{
    const auto self = hidden.find(target);
    if (self == hidden.end()) throw std::invalid_argument("group_pool: no hidden state for target agent");
    const Eigen::Index dim = self->second.values.size();

    Eigen::MatrixXd rows(static_cast<Eigen::Index>(hidden.size()), dim);
    Eigen::VectorXd theta(rows.rows());
    std::vector<int> labels;
    labels.reserve(hidden.size());
    Eigen::Index target_row = 0;
    Eigen::Index r = 0;
    for (const auto& [id, h] : hidden) {
        if (h.values.size() != dim) throw std::invalid_argument("group_pool: hidden state dimension mismatch");
        const auto heading = headings.find(id);
        if (heading == headings.end())
            throw std::invalid_argument("group_pool: no heading for agent " + std::to_string(id));
        if (!assignment.contains(id))
            throw std::invalid_argument("group_pool: no group label for agent " + std::to_string(id));
        if (id == target) target_row = r;
        rows.row(r) = h.values.transpose();
        theta(r) = heading->second;
        labels.push_back(assignment.group_of(id));
        ++r;
    }
    return pool_hidden_states(rows, theta, labels, target_row);
}

PooledEmbedding concat_embedding(const Eigen::VectorXd& pooled, const HiddenState& own, std::uint64_t noise_seed,
                                 int noise_dim)
{
    if (noise_dim < 0) throw std::invalid_argument("concat_embedding: noise dimension must be >= 0");
    if (pooled.size() != own.values.size())
        throw std::invalid_argument("concat_embedding: pooled and own hidden state differ in dimension");

    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd noise(noise_dim);
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise(k) = normal(rng);

    PooledEmbedding e;
    e.pooled = pooled;
    e.noise_dim = noise_dim;
    e.concatenated.resize(pooled.size() + own.values.size() + noise_dim);
    e.concatenated << pooled, own.values, noise;
    return e;
}

HistoryEncoder::HistoryEncoder(const EncoderConfig& config)
{
    if (config.dimension < 1) throw std::invalid_argument("EncoderConfig.dimension must be >= 1");
    if (!(config.weight_scale > 0.0)) throw std::invalid_argument("EncoderConfig.weight_scale must be positive");
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uniform(-config.weight_scale, config.weight_scale);
    const Eigen::Index d = config.dimension;
    recurrent_.resize(d, d);
    input_.resize(d, 2);
    // Fill order is part of the determinism contract.
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) recurrent_(i, j) = uniform(rng);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) input_(i, j) = uniform(rng);
}

HistoryEncoder::HistoryEncoder(Eigen::MatrixXd recurrent, Eigen::MatrixXd input)
    : recurrent_(std::move(recurrent)), input_(std::move(input))
{
    if (recurrent_.rows() < 1 || recurrent_.rows() != recurrent_.cols())
        throw std::invalid_argument("HistoryEncoder: recurrent weights must be square and non-empty");
    if (input_.rows() != recurrent_.rows() || input_.cols() != 2)
        throw std::invalid_argument("HistoryEncoder: input weights must be D x 2");
}

Eigen::VectorXd HistoryEncoder::encode(std::span<const Vec2> displacements) const
{
    if (displacements.empty()) throw std::invalid_argument("HistoryEncoder::encode: empty displacement sequence");
    Eigen::VectorXd h = Eigen::VectorXd::Zero(recurrent_.rows());
    for (const Vec2& d : displacements) h = (recurrent_ * h + input_ * d).array().tanh().matrix();
    return h;
}

HiddenState HistoryEncoder::encode(std::span<const Vec2> displacements, AgentId agent, double time) const
{
    return {encode(displacements), agent, time};
}

EmbeddingDecoder::EmbeddingDecoder(Eigen::MatrixXd weights) : weights_(std::move(weights))
{
    if (weights_.rows() != 2 || weights_.cols() < 1)
        throw std::invalid_argument("EmbeddingDecoder: weights must have 2 rows");
}

Vec2 EmbeddingDecoder::offset(const Eigen::VectorXd& embedding) const
{
    if (embedding.size() != weights_.cols())
        throw std::invalid_argument("EmbeddingDecoder: embedding has " + std::to_string(embedding.size()) +
                                    " entries, decoder expects " + std::to_string(weights_.cols()));
    return weights_ * embedding;
}

namespace {

Eigen::MatrixXd take_row_major(const std::vector<double>& values, std::size_t& cursor, Eigen::Index rows,
                               Eigen::Index cols)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[cursor++];
    return m;
}

void put_row_major(std::ostream& os, const Eigen::MatrixXd& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
        os << '\n';
    }
}

}  // namespace

PlannerWeights load_planner_weights(std::istream& is)
{
    PlannerWeights w;
    if (!(is >> w.dimension >> w.noise_dim) || w.dimension < 1 || w.noise_dim < 0)
        throw std::runtime_error("planner weights: header must be \"D K\" with D >= 1, K >= 0");

    std::vector<double> values;
    std::string token;
    while (is >> token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size() || !std::isfinite(v))
            throw std::runtime_error("planner weights: not a finite real: " + token);
        values.push_back(v);
    }

    const auto d = static_cast<std::size_t>(w.dimension);
    const auto k = static_cast<std::size_t>(w.noise_dim);
    const std::size_t encoder_count = d * d + 2 * d;
    const std::size_t decoder_count = 2 * (2 * d + k);
    if (values.size() != encoder_count && values.size() != encoder_count + decoder_count)
        throw std::runtime_error("planner weights: expected " + std::to_string(encoder_count) + " or " +
                                 std::to_string(encoder_count + decoder_count) + " values, found " +
                                 std::to_string(values.size()));

    std::size_t cursor = 0;
    w.recurrent = take_row_major(values, cursor, w.dimension, w.dimension);
    w.input = take_row_major(values, cursor, w.dimension, 2);
    if (cursor < values.size()) w.decoder = take_row_major(values, cursor, 2, 2 * w.dimension + w.noise_dim);
    return w;
}

void save_planner_weights(std::ostream& os, const PlannerWeights& w)
{
    os << w.dimension << ' ' << w.noise_dim << '\n' << std::setprecision(17);
    put_row_major(os, w.recurrent);
    put_row_major(os, w.input);
    if (w.decoder) put_row_major(os, *w.decoder);
}

std::vector<GroupFlow> group_flows(const GroupAssignment& assignment, const std::map<AgentId, TrackHistory>& tracks,
                                   std::size_t window, std::size_t min_members)
{
    std::vector<GroupFlow> flows;
    for (std::size_t g = 0; g < assignment.groups.size(); ++g) {
        const auto& members = assignment.groups[g];
        if (members.size() < min_members) continue;

        GroupFlow flow;
        flow.group = static_cast<int>(g);
        flow.members = members;
        std::size_t counted = 0;
        for (const AgentId id : members) {
            const auto it = tracks.find(id);
            if (it == tracks.end() || it->second.empty()) continue;
            const auto& h = it->second;
            flow.centroid += h.back().position;
            const std::size_t n = std::min(window == 0 ? std::size_t{1} : window, h.size());
            Vec2 v = Vec2::Zero();
            for (std::size_t k = h.size() - n; k < h.size(); ++k) v += h[k].velocity;
            flow.mean_velocity += v / static_cast<double>(n);
            ++counted;
        }
        if (counted == 0) continue;
        flow.centroid /= static_cast<double>(counted);
        flow.mean_velocity /= static_cast<double>(counted);
        flows.push_back(std::move(flow));
    }
    return flows;
}

std::optional<int> select_group(std::span<const GroupFlow> flows, const AgentState& robot, const Vec2& goal,
                                const FlowSelectionParams& params)
{
    const Vec2 to_goal = goal - robot.position;
    if (to_goal.norm() == 0.0) return std::nullopt;
    const Vec2 goal_dir = to_goal.normalized();

    std::optional<int> best;
    double best_score = 0.0;
    for (const auto& flow : flows) {
        if (flow.members.size() < params.min_members) continue;
        const double speed = flow.mean_velocity.norm();
        if (speed < params.min_speed || speed == 0.0) continue;
        const double alignment = flow.mean_velocity.dot(goal_dir) / speed;
        if (alignment < 0.0) continue;
        const Vec2 offset = flow.centroid - robot.position;
        if (offset.dot(goal_dir) < 0.0) continue;

        const double score = alignment - params.distance_penalty * offset.norm();
        if (!best || score > best_score || (score == best_score && flow.group < *best)) {
            best = flow.group;
            best_score = score;
        }
    }
    return best;
}

Waypoint compute_waypoint(const AgentState& robot, const Vec2& goal, const GroupFlow* followed, double lookahead,
                          const Arena& arena)
{
    const Vec2 to_goal = goal - robot.position;
    const double distance = to_goal.norm();
    const Vec2 goal_dir = unit_or_zero(to_goal);

    Waypoint wp;
    if (followed) {
        wp.mode = WaypointMode::follow;
        wp.followed_group = followed->group;
    }

    if (distance <= lookahead) {
        wp.position = goal;
    } else if (followed) {
        Vec2 target = followed->centroid + unit_or_zero(followed->mean_velocity) * lookahead;
        const double progress = (target - robot.position).dot(goal_dir);
        if (progress < 0.0) target -= progress * goal_dir;
        wp.position = target;
    } else {
        wp.position = robot.position + goal_dir * lookahead;
    }
    wp.position = arena.clamp(wp.position);
    return wp;
}

}  // namespace crowdflow
