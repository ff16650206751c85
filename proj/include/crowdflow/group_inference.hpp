#pragma once

#include "crowdflow/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace crowdflow {

/// Coherent-motion indicators for a pair of tracks.
struct PairFeatures {
    double speed_difference = 0.0;    // m/s
    double heading_difference = 0.0;  // rad, [0, pi]
    double distance = 0.0;            // m

    Eigen::Vector3d as_vector() const { return {speed_difference, heading_difference, distance}; }
};

/// Linear decision function on scale-normalized features. The default
/// weights accept pairs with roughly |dv| <= 0.5 m/s, |dtheta| <= 45 deg
/// and d <= 2 m jointly.
struct LinearClassifier {
    Eigen::Vector3d weights{-1.0, -1.0, -1.0};
    double bias = 2.0;

    /// Normalization scales: 0.5 m/s, pi/4 rad, 2.0 m.
    static Eigen::Vector3d feature_scales();
    static Eigen::Vector3d normalize(const PairFeatures& f);
};

struct TrackSample {
    double time = 0.0;
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
};
using TrackHistory = std::vector<TrackSample>;

/// Builds a history from positions at a fixed period, differencing for
/// velocity (forward difference at the first sample).
TrackHistory history_from_positions(std::span<const Vec2> positions, double t0, double period);

/// Speeds and headings averaged over the last `window` common timestamps,
/// distance at the latest one. Throws std::invalid_argument when either
/// history has fewer than 2 samples or no timestamps are shared.
PairFeatures pair_features(const TrackHistory& a, const TrackHistory& b, std::size_t window = 8);

struct GroupDecision {
    bool same = false;
    double score = 0.0;
};

GroupDecision same_group(const PairFeatures& f, const LinearClassifier& c);

struct PairLink {
    AgentId a = 0;
    AgentId b = 0;
    bool linked = false;
};

/// Partition of agents into social groups; group ids are dense from 0,
/// assigned in ascending order of each group's smallest member id.
struct GroupAssignment {
    std::map<AgentId, int> labels;
    std::vector<std::vector<AgentId>> groups;

    int group_of(AgentId id) const;
    bool together(AgentId a, AgentId b) const;
    bool contains(AgentId id) const { return labels.count(id) != 0; }
};

/// Connected components of the linked-pair graph. Links naming agents not in
/// `agents` are ignored.
GroupAssignment cluster_groups(std::span<const AgentId> agents, std::span<const PairLink> links);

/// Majority vote over the last `window` assignments: a pair stays linked iff
/// it was together in more than half of those frames. The agent set is the
/// one of the most recent assignment. Throws std::invalid_argument for
/// window < 1.
GroupAssignment smooth_assignment(std::span<const GroupAssignment> history, int window);

/// Runs the classifier on every unordered pair and clusters the result.
GroupAssignment infer_groups(const std::map<AgentId, TrackHistory>& tracks, const LinearClassifier& c,
                             std::size_t window = 8);

struct LabeledPair {
    PairFeatures features;
    bool same = false;
};

struct TrainOptions {
    int epochs = 500;
    double l2 = 1e-4;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;
};

/// Stochastic subgradient descent on the L2-regularized hinge loss over
/// normalized features. Returns the iterate with the lowest objective seen
/// at an epoch boundary. Throws std::invalid_argument unless both classes
/// are present.
LinearClassifier train_classifier(std::span<const LabeledPair> data, const TrainOptions& options = {});

/// Regularized hinge objective used by train_classifier.
double hinge_objective(const LinearClassifier& c, std::span<const LabeledPair> data, double l2);

/// Text record "w1 w2 w3 bias".
void save_classifier(std::ostream& os, const LinearClassifier& c);
LinearClassifier load_classifier(std::istream& is);

}  // namespace crowdflow
