// Learning-curve summary statistics over independent trials.
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mpqdpg::harness {

/// 1-based inclusive episode range.
struct Window {
    int first = 500;
    int last = 1500;

    /// "first:last"; throws UsageError.
    static Window parse(std::string_view text);
};

struct TrialStats {
    double r_best = 0.0;   // max of the trial-averaged curve, all episodes
    double r_av = 0.0;     // mean over the window
    double std_dev = 0.0;  // sample standard deviation over the window
    std::optional<double> improvement;  // 1 - r_av / baseline_r_av
};

/// Pointwise mean; throws UsageError when empty or lengths differ.
std::vector<double> average_trials(std::span<const std::vector<double>> trials);

double window_mean(std::span<const double> curve, Window window);

double improvement_rate(double r_av, double baseline_r_av);

/// Throws UsageError when the window does not fit inside the curves.
TrialStats compute_stats(std::span<const std::vector<double>> trials, Window window,
                         std::optional<double> baseline_r_av = std::nullopt);

/// total_reward column of a training CSV, in episode order.
std::vector<double> read_training_rewards(const std::filesystem::path& path);

}  // namespace mpqdpg::harness
