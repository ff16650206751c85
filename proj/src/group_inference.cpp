#include "crowdflow/group_inference.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace crowdflow {

namespace {

// Union-find with the smallest id as representative.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

struct WindowStats {
    double mean_speed = 0.0;
    double mean_heading = 0.0;
};

WindowStats window_stats(const std::vector<const TrackSample*>& samples)
{
    WindowStats s;
    Vec2 dir_sum = Vec2::Zero();
    for (const auto* p : samples) {
        s.mean_speed += p->velocity.norm();
        dir_sum += unit_or_zero(p->velocity);
    }
    s.mean_speed /= static_cast<double>(samples.size());
    s.mean_heading = heading_of(dir_sum);
    return s;
}

}  // namespace

Eigen::Vector3d LinearClassifier::feature_scales()
{
    return {0.5, std::numbers::pi / 4.0, 2.0};
}

Eigen::Vector3d LinearClassifier::normalize(const PairFeatures& f)
{
    return f.as_vector().cwiseQuotient(feature_scales());
}

TrackHistory history_from_positions(std::span<const Vec2> positions, double t0, double period)
{
    TrackHistory h;
    h.reserve(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) {
        Vec2 v = Vec2::Zero();
        if (k > 0)
            v = (positions[k] - positions[k - 1]) / period;
        else if (positions.size() > 1)
            v = (positions[1] - positions[0]) / period;
        h.push_back({t0 + static_cast<double>(k) * period, positions[k], v});
    }
    return h;
}

PairFeatures pair_features(const TrackHistory& a, const TrackHistory& b, std::size_t window)
{
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("pair_features: each history needs at least 2 samples");
    if (window == 0) throw std::invalid_argument("pair_features: window must be >= 1");

    constexpr double kTimeTolerance = 1e-9;
    std::vector<const TrackSample*> sa;
    std::vector<const TrackSample*> sb;
    // Walk both histories backwards collecting shared timestamps.
    auto ia = a.rbegin();
    auto ib = b.rbegin();
    while (ia != a.rend() && ib != b.rend() && sa.size() < window) {
        if (std::abs(ia->time - ib->time) <= kTimeTolerance) {
            sa.push_back(&*ia++);
            sb.push_back(&*ib++);
        } else if (ia->time > ib->time) {
            ++ia;
        } else {
            ++ib;
        }
    }
    if (sa.empty()) throw std::invalid_argument("pair_features: histories share no timestamps");

    const WindowStats wa = window_stats(sa);
    const WindowStats wb = window_stats(sb);
    PairFeatures f;
    f.speed_difference = std::abs(wa.mean_speed - wb.mean_speed);
    f.heading_difference = std::abs(wrap_angle(wa.mean_heading - wb.mean_heading));
    f.distance = (sa.front()->position - sb.front()->position).norm();
    return f;
}

GroupDecision same_group(const PairFeatures& f, const LinearClassifier& c)
{
    const double score = c.weights.dot(LinearClassifier::normalize(f)) + c.bias;
    return {score > 0.0, score};
}

int GroupAssignment::group_of(AgentId id) const
{
    const auto it = labels.find(id);
    if (it == labels.end()) throw std::out_of_range("GroupAssignment: unknown agent " + std::to_string(id));
    return it->second;
}

bool GroupAssignment::together(AgentId a, AgentId b) const
{
    const auto ia = labels.find(a);
    const auto ib = labels.find(b);
    return ia != labels.end() && ib != labels.end() && ia->second == ib->second;
}

GroupAssignment cluster_groups(std::span<const AgentId> agents, std::span<const PairLink> links)
{
    std::vector<AgentId> ids(agents.begin(), agents.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    const auto index_of = [&](AgentId id) -> std::ptrdiff_t {
        const auto it = std::lower_bound(ids.begin(), ids.end(), id);
        return (it != ids.end() && *it == id) ? it - ids.begin() : -1;
    };

    DisjointSets sets(ids.size());
    for (const auto& link : links) {
        if (!link.linked) continue;
        const auto ia = index_of(link.a);
        const auto ib = index_of(link.b);
        if (ia >= 0 && ib >= 0) sets.unite(static_cast<std::size_t>(ia), static_cast<std::size_t>(ib));
    }

    // Representatives are the smallest member index, and ids are sorted, so
    // visiting in order numbers groups by their smallest member id.
    GroupAssignment out;
    std::map<std::size_t, int> root_label;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const std::size_t root = sets.find(k);
        auto [it, inserted] = root_label.try_emplace(root, static_cast<int>(out.groups.size()));
        if (inserted) out.groups.emplace_back();
        out.groups[static_cast<std::size_t>(it->second)].push_back(ids[k]);
        out.labels[ids[k]] = it->second;
    }
    return out;
}

GroupAssignment smooth_assignment(std::span<const GroupAssignment> history, int window)
{
    if (window < 1) throw std::invalid_argument("smooth_assignment: window must be >= 1");
    if (history.empty()) return {};

    const std::size_t frames = std::min<std::size_t>(static_cast<std::size_t>(window), history.size());
    const auto recent = history.last(frames);
    const GroupAssignment& latest = recent.back();

    std::vector<AgentId> ids;
    for (const auto& [id, label] : latest.labels) ids.push_back(id);

    std::vector<PairLink> links;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            std::size_t votes = 0;
            for (const auto& frame : recent) votes += frame.together(ids[i], ids[j]) ? 1 : 0;
            if (2 * votes > frames) links.push_back({ids[i], ids[j], true});
        }
    }
    return cluster_groups(ids, links);
}

GroupAssignment infer_groups(const std::map<AgentId, TrackHistory>& tracks, const LinearClassifier& c,
                             std::size_t window)
{
    std::vector<AgentId> ids;
    for (const auto& [id, h] : tracks) ids.push_back(id);

    std::vector<PairLink> links;
    for (auto a = tracks.begin(); a != tracks.end(); ++a) {
        for (auto b = std::next(a); b != tracks.end(); ++b) {
            if (a->second.size() < 2 || b->second.size() < 2) continue;
            const PairFeatures f = pair_features(a->second, b->second, window);
            links.push_back({a->first, b->first, same_group(f, c).same});
        }
    }
    return cluster_groups(ids, links);
}

double hinge_objective(const LinearClassifier& c, std::span<const LabeledPair> data, double l2)
{
    double loss = 0.0;
    for (const auto& ex : data) {
        const double y = ex.same ? 1.0 : -1.0;
        const double s = c.weights.dot(LinearClassifier::normalize(ex.features)) + c.bias;
        loss += std::max(0.0, 1.0 - y * s);
    }
    return loss / static_cast<double>(data.size()) + 0.5 * l2 * c.weights.squaredNorm();
}

LinearClassifier train_classifier(std::span<const LabeledPair> data, const TrainOptions& options)
{
    const bool has_pos = std::any_of(data.begin(), data.end(), [](const auto& e) { return e.same; });
    const bool has_neg = std::any_of(data.begin(), data.end(), [](const auto& e) { return !e.same; });
    if (!has_pos || !has_neg) throw std::invalid_argument("train_classifier: need examples of both classes");
    if (options.epochs < 1) throw std::invalid_argument("train_classifier: epochs must be >= 1");

    std::vector<Eigen::Vector3d> x;
    std::vector<double> y;
    for (const auto& ex : data) {
        x.push_back(LinearClassifier::normalize(ex.features));
        y.push_back(ex.same ? 1.0 : -1.0);
    }

    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    LinearClassifier c;
    c.weights.setZero();
    c.bias = 0.0;
    LinearClassifier best = c;
    double best_objective = std::numeric_limits<double>::infinity();

    std::size_t t = 0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (const std::size_t k : order) {
            const double eta = options.learning_rate / std::sqrt(1.0 + static_cast<double>(t++));
            const double margin = y[k] * (c.weights.dot(x[k]) + c.bias);
            Eigen::Vector3d grad_w = options.l2 * c.weights;
            double grad_b = 0.0;
            if (margin < 1.0) {
                grad_w -= y[k] * x[k];
                grad_b = -y[k];
            }
            c.weights -= eta * grad_w;
            c.bias -= eta * grad_b;
        }
        const double objective = hinge_objective(c, data, options.l2);
        if (objective < best_objective) {
            best_objective = objective;
            best = c;
        }
    }
    return best;
}

void save_classifier(std::ostream& os, const LinearClassifier& c)
{
    os << std::setprecision(17) << c.weights.x() << ' ' << c.weights.y() << ' ' << c.weights.z() << ' ' << c.bias
       << '\n';
}

LinearClassifier load_classifier(std::istream& is)
{
    LinearClassifier c;
    double w[4];
    for (double& v : w)
        if (!(is >> v) || !std::isfinite(v))
            throw std::runtime_error("classifier record must hold 4 finite numbers: w1 w2 w3 bias");
    std::string extra;
    if (is >> extra) throw std::runtime_error("classifier record has trailing content: " + extra);
    c.weights = {w[0], w[1], w[2]};
    c.bias = w[3];
    return c;
}

}  // namespace crowdflow
