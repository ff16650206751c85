#pragma once

#include "crowdflow/group_inference.hpp"
#include "crowdflow/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace crowdflow {

// ---------------------------------------------------------------------------
// Group pooling
// ---------------------------------------------------------------------------

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Pools hidden states for the agent at row `target`.
///
/// Each row j of `hidden` is one agent's hidden vector. For every j other
/// than the target the row is weighted by
///
///     [label_j == label_target] * cos(heading_target - heading_j)
///
/// and the result is the element-wise maximum over those weighted rows. The
/// cosine is left unclamped. With no other rows the result is the zero
/// vector. Rows outside the target's group contribute an exact zero row.
template <typename DerivedHidden, typename DerivedHeadings>
VectorX<typename DerivedHidden::Scalar> pool_hidden_states(const Eigen::MatrixBase<DerivedHidden>& hidden,
                                                           const Eigen::MatrixBase<DerivedHeadings>& headings,
                                                           std::span<const int> labels, Eigen::Index target)
{
    using Scalar = typename DerivedHidden::Scalar;
    const Eigen::Index n = hidden.rows();
    if (headings.size() != n || static_cast<Eigen::Index>(labels.size()) != n)
        throw std::invalid_argument("pool_hidden_states: hidden, headings and labels must agree in length");
    if (target < 0 || target >= n) throw std::out_of_range("pool_hidden_states: target row out of range");

    VectorX<Scalar> pooled = VectorX<Scalar>::Zero(hidden.cols());
    bool first = true;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == target) continue;
        VectorX<Scalar> adjusted = VectorX<Scalar>::Zero(hidden.cols());
        if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(target)])
            adjusted = std::cos(headings(target) - headings(j)) * hidden.row(j).transpose();
        pooled = first ? adjusted : VectorX<Scalar>(pooled.cwiseMax(adjusted));
        first = false;
    }
    return pooled;
}

struct HiddenState {
    Eigen::VectorXd values;
    AgentId agent = 0;
    double time = 0.0;
};

/// Map-based front end to pool_hidden_states: the target is `target`, every
/// other key of `hidden` is a neighbor. Throws std::invalid_argument on a
/// missing heading, a missing group label or mismatched dimensions.
Eigen::VectorXd group_pool(AgentId target, const std::map<AgentId, HiddenState>& hidden,
                           const std::map<AgentId, double>& headings, const GroupAssignment& assignment);

struct PooledEmbedding {
    Eigen::VectorXd pooled;        // D
    Eigen::VectorXd concatenated;  // [pooled, own hidden, noise], 2D + K
    int noise_dim = 0;
};

/// Concatenates pooled and own hidden state with K standard-normal draws
/// from a generator seeded by `noise_seed`. K = 0 gives a noise-free vector.
PooledEmbedding concat_embedding(const Eigen::VectorXd& pooled, const HiddenState& own, std::uint64_t noise_seed,
                                 int noise_dim);

// ---------------------------------------------------------------------------
// Fixed-weight history encoder and optional decoder
// ---------------------------------------------------------------------------

struct EncoderConfig {
    int dimension = 32;
    std::uint64_t seed = 0;
    double weight_scale = 0.1;
    int history_length = 8;
};

/// Recurrent map h <- tanh(W_h h + W_x d_t) over a displacement sequence,
/// starting from h = 0. Weights are drawn once from uniform(-scale, scale)
/// unless given explicitly.
class HistoryEncoder {
public:
    explicit HistoryEncoder(const EncoderConfig& config = {});
    HistoryEncoder(Eigen::MatrixXd recurrent, Eigen::MatrixXd input);

    /// Throws std::invalid_argument on an empty sequence.
    Eigen::VectorXd encode(std::span<const Vec2> displacements) const;
    HiddenState encode(std::span<const Vec2> displacements, AgentId agent, double time) const;

    int dimension() const { return static_cast<int>(recurrent_.rows()); }
    const Eigen::MatrixXd& recurrent_weights() const { return recurrent_; }
    const Eigen::MatrixXd& input_weights() const { return input_; }

private:
    Eigen::MatrixXd recurrent_;  // D x D
    Eigen::MatrixXd input_;      // D x 2
};

/// Linear map from a concatenated embedding to a waypoint offset (m).
class EmbeddingDecoder {
public:
    explicit EmbeddingDecoder(Eigen::MatrixXd weights);

    Vec2 offset(const Eigen::VectorXd& embedding) const;
    const Eigen::MatrixXd& weights() const { return weights_; }

private:
    Eigen::MatrixXd weights_;  // 2 x (2D + K)
};

/// Externally trained weights. Text format: a header line "D K", then
/// whitespace-separated reals in row-major order: W_h (D x D), W_x (D x 2)
/// and optionally the decoder (2 x (2D + K)).
struct PlannerWeights {
    int dimension = 0;
    int noise_dim = 0;
    Eigen::MatrixXd recurrent;
    Eigen::MatrixXd input;
    std::optional<Eigen::MatrixXd> decoder;
};

PlannerWeights load_planner_weights(std::istream& is);
void save_planner_weights(std::ostream& os, const PlannerWeights& weights);

// ---------------------------------------------------------------------------
// Flow selection and waypoints
// ---------------------------------------------------------------------------

/// Motion summary of one inferred group.
struct GroupFlow {
    int group = 0;
    std::vector<AgentId> members;
    Vec2 centroid = Vec2::Zero();
    Vec2 mean_velocity = Vec2::Zero();
};

struct FlowSelectionParams {
    double min_speed = 0.3;          // m/s
    double distance_penalty = 0.05;  // per m
    std::size_t min_members = 2;
};

/// Builds one GroupFlow per group with at least `min_members` members.
/// Centroids use the latest sample; velocities average the last `window`
/// samples of each member track.
std::vector<GroupFlow> group_flows(const GroupAssignment& assignment, const std::map<AgentId, TrackHistory>& tracks,
                                   std::size_t window, std::size_t min_members = 1);

/// Picks the flow to join: moving at least min_speed, heading within 90 deg
/// of the robot-to-goal direction, centroid on the goal side of the robot.
/// Maximizes cos(angle to goal direction) - distance_penalty * distance,
/// ties to the smallest group id.
std::optional<int> select_group(std::span<const GroupFlow> flows, const AgentState& robot, const Vec2& goal,
                                const FlowSelectionParams& params = {});

enum class WaypointMode { direct, follow };

struct Waypoint {
    Vec2 position = Vec2::Zero();
    std::optional<int> followed_group;
    WaypointMode mode = WaypointMode::direct;
};

/// Direct mode heads `lookahead` meters along the straight line to the goal.
/// Follow mode targets `lookahead` meters ahead of the followed centroid
/// along its flow, with any backward component along the robot-to-goal
/// direction removed. In both modes a goal closer than `lookahead` is
/// targeted directly. The result is clamped to the arena.
Waypoint compute_waypoint(const AgentState& robot, const Vec2& goal, const GroupFlow* followed, double lookahead,
                          const Arena& arena);

}  // namespace crowdflow
