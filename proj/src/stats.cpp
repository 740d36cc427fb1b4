#include "mpqdpg/stats.hpp"

#include "mpqdpg/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace mpqdpg::harness {

Window Window::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw UsageError("window must look like FIRST:LAST");
    Window w;
    const auto parse_part = [&](std::string_view part, int& out) {
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
            throw UsageError("window bound '" + std::string(part) + "' is not an integer");
        }
    };
    parse_part(text.substr(0, colon), w.first);
    parse_part(text.substr(colon + 1), w.last);
    if (w.first < 1 || w.last < w.first) throw UsageError("window must satisfy 1 <= FIRST <= LAST");
    return w;
}

std::vector<double> average_trials(std::span<const std::vector<double>> trials) {
    if (trials.empty()) throw UsageError("no reward sequences supplied");
    const std::size_t n = trials.front().size();
    std::vector<double> mean(n, 0.0);
    for (const auto& trial : trials) {
        if (trial.size() != n) throw UsageError("reward sequences have different lengths");
        for (std::size_t i = 0; i < n; ++i) mean[i] += trial[i];
    }
    for (double& v : mean) v /= static_cast<double>(trials.size());
    return mean;
}

namespace {

std::span<const double> window_slice(std::span<const double> curve, Window window) {
    if (window.first < 1 || window.last < window.first) throw UsageError("invalid episode window");
    if (static_cast<std::size_t>(window.last) > curve.size()) {
        throw UsageError("window ends at episode " + std::to_string(window.last) + " but only " +
                         std::to_string(curve.size()) + " episodes are available");
    }
    return curve.subspan(static_cast<std::size_t>(window.first - 1),
                         static_cast<std::size_t>(window.last - window.first + 1));
}

}  // namespace

double window_mean(std::span<const double> curve, Window window) {
    const auto slice = window_slice(curve, window);
    return std::accumulate(slice.begin(), slice.end(), 0.0) / static_cast<double>(slice.size());
}

double improvement_rate(double r_av, double baseline_r_av) {
    if (baseline_r_av == 0.0) throw UsageError("baseline R_av must be non-zero");
    return 1.0 - r_av / baseline_r_av;
}

TrialStats compute_stats(std::span<const std::vector<double>> trials, Window window,
                         std::optional<double> baseline_r_av) {
    const std::vector<double> curve = average_trials(trials);
    const auto slice = window_slice(curve, window);

    TrialStats s;
    s.r_best = *std::max_element(curve.begin(), curve.end());
    s.r_av = std::accumulate(slice.begin(), slice.end(), 0.0) / static_cast<double>(slice.size());
    if (slice.size() > 1) {
        double ss = 0.0;
        for (double v : slice) ss += (v - s.r_av) * (v - s.r_av);
        s.std_dev = std::sqrt(ss / static_cast<double>(slice.size() - 1));
    }
    if (baseline_r_av) s.improvement = improvement_rate(s.r_av, *baseline_r_av);
    return s;
}

std::vector<double> read_training_rewards(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read training CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("episode,total_reward")) {
        throw FormatError(path.string() + ": row 1 is not a training CSV header");
    }
    std::vector<double> rewards;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos) throw FormatError(path.string() + ": malformed row " + std::to_string(row));
        const std::string_view field(line.data() + c1 + 1, (c2 == std::string::npos ? line.size() : c2) - c1 - 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw FormatError(path.string() + ": malformed total_reward at row " + std::to_string(row));
        }
        rewards.push_back(v);
    }
    return rewards;
}

}  // namespace mpqdpg::harness
