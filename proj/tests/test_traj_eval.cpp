#include "crowdflow/traj_eval.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace crowdflow;

namespace {

std::vector<Track> parse(const std::string& text)
{
    std::istringstream is(text);
    return load_dataset(is, "mem");
}

double brute_ade(const std::vector<Vec2>& a, const std::vector<Vec2>& b)
{
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double dx = a[t].x() - b[t].x();
        const double dy = a[t].y() - b[t].y();
        s += std::sqrt(dx * dx + dy * dy);
    }
    return s / static_cast<double>(a.size());
}

// Closed-form simple regression of each coordinate on t = 0..n-1.
std::vector<Vec2> normal_equations(const std::vector<Vec2>& obs, int t_pred)
{
    const double n = static_cast<double>(obs.size());
    double st = 0, stt = 0;
    Vec2 sp = Vec2::Zero(), stp = Vec2::Zero();
    for (std::size_t t = 0; t < obs.size(); ++t) {
        const double tt = static_cast<double>(t);
        st += tt;
        stt += tt * tt;
        sp += obs[t];
        stp += tt * obs[t];
    }
    const double det = n * stt - st * st;
    const Vec2 slope = (n * stp - st * sp) / det;
    const Vec2 icpt = (stt * sp - st * stp) / det;
    std::vector<Vec2> out;
    for (int k = 0; k < t_pred; ++k) out.push_back(icpt + slope * (n + k));
    return out;
}

std::string constant_velocity_file(int peds, int frames, int step = 10)
{
    std::ostringstream os;
    for (int f = 0; f < frames; ++f)
        for (int p = 0; p < peds; ++p)
            os << f * step << '\t' << p + 1 << '\t' << 0.5 * f + p << '\t' << 3.0 * p - 0.2 * f << '\n';
    return os.str();
}

}  // namespace

TEST_CASE("load_dataset parses rows and maps frames to a unit grid")
{
    const auto tracks = parse("# comment\n"
                              "\n"
                              "20 2 1.0 2.0\n"
                              "10 2 0.5 2.0\n"
                              "10.0 1 0 0\n"
                              "30 1 1.5 0\n");
    REQUIRE(tracks.size() == 2);
    CHECK(tracks[0].pedestrian == 1);
    CHECK(tracks[0].frames == std::vector<long>{0, 2});
    CHECK(tracks[0].positions[1] == Vec2(1.5, 0));
    CHECK(tracks[1].pedestrian == 2);
    CHECK(tracks[1].frames == std::vector<long>{0, 1});
    CHECK(tracks[1].positions[0] == Vec2(0.5, 2.0));
}

TEST_CASE("load_dataset errors name the line")
{
    const auto message = [](const std::string& text) {
        try {
            parse(text);
        } catch (const std::runtime_error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("1 1 0 0\n2 1 0\n").rfind("mem:2:", 0) == 0);
    CHECK(message("1 1 0 zero\n").rfind("mem:1:", 0) == 0);
    CHECK(message("1.5 1 0 0\n").rfind("mem:1:", 0) == 0);
    CHECK(message("1 1 0 0\n1 1 2 2\n").find("duplicate") != std::string::npos);
    CHECK_THROWS_AS(load_dataset(std::filesystem::path("/nonexistent/file.txt")), std::runtime_error);
    CHECK(parse("").empty());
}

TEST_CASE("ade and fde examples")
{
    const std::vector<Vec2> truth{Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)};
    const std::vector<Vec2> pred{Vec2(0, 1), Vec2(1, 1), Vec2(2, 4)};
    CHECK(ade(pred, truth) == doctest::Approx(2.0));
    CHECK(fde(pred, truth) == doctest::Approx(4.0));
    CHECK(ade(truth, truth) == 0.0);
    CHECK_THROWS_AS(ade(pred, std::vector<Vec2>{}), std::invalid_argument);
    CHECK_THROWS_AS(fde(std::vector<Vec2>{}, std::vector<Vec2>{}), std::invalid_argument);
}

TEST_CASE("ade and fde match a brute-force oracle and are rigid-motion invariant")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    for (int n = 0; n < 500; ++n) {
        std::vector<Vec2> a, b;
        for (int t = 0; t < 8; ++t) {
            a.emplace_back(u(rng), u(rng));
            b.emplace_back(u(rng), u(rng));
        }
        const double e = ade(a, b);
        const double f = fde(a, b);
        CHECK(std::abs(e - brute_ade(a, b)) <= 1e-12);
        CHECK(std::abs(f - std::hypot(a[7].x() - b[7].x(), a[7].y() - b[7].y())) <= 1e-12);
        CHECK(e >= 0.0);
        double worst = 0.0;
        for (int t = 0; t < 8; ++t) worst = std::max(worst, (a[t] - b[t]).norm());
        CHECK(e <= worst + 1e-12);
        CHECK(f <= worst + 1e-12);

        const Eigen::Rotation2Dd r(ang(rng));
        const Vec2 shift(u(rng), u(rng));
        for (auto& p : a) p = r * p + shift;
        for (auto& p : b) p = r * p + shift;
        CHECK(ade(a, b) == doctest::Approx(e).epsilon(1e-10));
        CHECK(fde(a, b) == doctest::Approx(f).epsilon(1e-10));
    }
}

TEST_CASE("ade in single precision")
{
    using Vec2f = Vec2T<float>;
    const std::vector<Vec2f> a{Vec2f(0, 0), Vec2f(3, 4)};
    const std::vector<Vec2f> b{Vec2f(0, 0), Vec2f(0, 0)};
    CHECK(ade<float>(std::span<const Vec2f>(a), std::span<const Vec2f>(b)) == doctest::Approx(2.5f));
}

TEST_CASE("linear_baseline examples")
{
    std::vector<Vec2> line;
    for (int t = 0; t < 8; ++t) line.emplace_back(1.0 + 0.5 * t, -2.0 + 0.25 * t);
    const auto pred = linear_baseline(line, 3);
    REQUIRE(pred.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(pred[k].x() == doctest::Approx(1.0 + 0.5 * (8 + k)).epsilon(1e-12));
        CHECK(pred[k].y() == doctest::Approx(-2.0 + 0.25 * (8 + k)).epsilon(1e-12));
    }

    const std::vector<Vec2> still(5, Vec2(3, 4));
    for (const auto& p : linear_baseline(still, 4)) CHECK((p - Vec2(3, 4)).norm() < 1e-12);

    CHECK(linear_baseline(still, 0).empty());
    CHECK_THROWS_AS(linear_baseline(std::vector<Vec2>{Vec2(0, 0)}, 2), std::invalid_argument);
    CHECK_THROWS_AS(linear_baseline(still, -1), std::invalid_argument);
}

TEST_CASE("linear_baseline matches the normal equations and commutes with rigid motion")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    for (int n = 0; n < 500; ++n) {
        std::vector<Vec2> obs;
        const int len = 2 + static_cast<int>(rng() % 10);
        for (int t = 0; t < len; ++t) obs.emplace_back(u(rng), u(rng));
        const auto fit = linear_baseline(obs, 8);
        const auto oracle = normal_equations(obs, 8);
        for (std::size_t k = 0; k < 8; ++k) CHECK((fit[k] - oracle[k]).norm() <= 1e-9);

        const Eigen::Rotation2Dd r(ang(rng));
        const Vec2 shift(u(rng), u(rng));
        auto moved = obs;
        for (auto& p : moved) p = r * p + shift;
        const auto fit_moved = linear_baseline(moved, 8);
        for (std::size_t k = 0; k < 8; ++k) CHECK((fit_moved[k] - (r * fit[k] + shift)).norm() <= 1e-9);
    }
}

TEST_CASE("evaluate on constant-velocity tracks")
{
    const auto tracks = parse(constant_velocity_file(3, 20));
    const EvalConfig cfg;
    const EvalReport r = evaluate(tracks, make_linear_predictor(), cfg, {}, "cv");
    // 20 frames, 16-frame windows: 5 start frames per pedestrian.
    CHECK(r.windows == 15);
    CHECK(r.ade < 1e-9);
    CHECK(r.fde < 1e-9);
    CHECK(r.dataset == "cv");
    CHECK(r.per_window.front().pedestrian == 1);
    CHECK(r.per_window.front().start_frame == 0);

    auto reversed = tracks;
    std::reverse(reversed.begin(), reversed.end());
    const EvalReport again = evaluate(reversed, make_linear_predictor(), cfg);
    CHECK(again.windows == r.windows);
    CHECK(again.ade == r.ade);

    std::ostringstream text;
    write_report(text, r);
    CHECK(text.str().find("windows: 15\n") != std::string::npos);
    CHECK(text.str().find("ade_m: 0.0000\n") != std::string::npos);
    std::ostringstream csv;
    write_window_csv(csv, r);
    const std::string rows = csv.str();
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 16);
}

TEST_CASE("evaluate errors")
{
    const auto short_tracks = parse(constant_velocity_file(2, 10));
    CHECK_THROWS_AS(evaluate(short_tracks, make_linear_predictor(), EvalConfig{}), std::runtime_error);
    CHECK_THROWS_AS(evaluate(short_tracks, make_linear_predictor(), EvalConfig{1, 8, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(short_tracks, make_linear_predictor(), EvalConfig{8, 0, 0.4}), std::invalid_argument);
}

TEST_CASE("windows need contiguous frames")
{
    // Pedestrian 1 skips frame 9, so no 16-frame window fits in 0..19.
    std::ostringstream os;
    for (int f = 0; f < 20; ++f) {
        if (f != 9) os << f << " 1 " << f * 0.4 << " 0\n";
        os << f << " 2 " << f * 0.4 << " 5\n";
    }
    const EvalReport r = evaluate(parse(os.str()), make_linear_predictor(), EvalConfig{});
    for (const auto& w : r.per_window) CHECK(w.pedestrian == 2);
    CHECK(r.windows == 5);
}

TEST_CASE("group percentage")
{
    // Two walkers abreast and one far away walking the other way.
    std::ostringstream os;
    for (int f = 0; f < 16; ++f) {
        os << f << " 1 " << 0.5 * f << " 0\n";
        os << f << " 2 " << 0.5 * f << " 0.8\n";
        os << f << " 3 " << 20 - 0.5 * f << " 30\n";
    }
    const EvalReport r = evaluate(parse(os.str()), make_linear_predictor(), EvalConfig{});
    CHECK(r.group_percentage == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("flow predictor output shape")
{
    std::ostringstream os;
    for (int f = 0; f < 16; ++f) {
        os << f << " 1 " << 0.5 * f << " 0\n";
        os << f << " 2 " << 0.5 * f << " 0.8\n";
        os << f << " 3 " << 0.5 * f + 0.4 << " 0.4\n";
        os << f << " 4 " << 0.5 * f << " 2\n";
    }
    const auto tracks = parse(os.str());
    const EvalReport r = evaluate(tracks, make_flow_predictor(), EvalConfig{});
    CHECK(r.windows == 4);
    for (const auto& w : r.per_window) {
        CHECK(std::isfinite(w.ade));
        CHECK(w.fde >= 0.0);
    }

    PredictionContext ctx;
    for (int t = 0; t < 8; ++t) ctx.observed.emplace_back(0.5 * t, 0.0);
    ctx.t_pred = 5;
    const auto pred = make_flow_predictor()(ctx);
    REQUIRE(pred.size() == 5);
    // Alone, the target keeps walking straight at its observed pace.
    for (int k = 0; k < 5; ++k) CHECK((pred[static_cast<std::size_t>(k)] - Vec2(0.5 * (8 + k), 0)).norm() < 1e-9);
}
