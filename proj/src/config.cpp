#include "mpqdpg/config.hpp"

#include "mpqdpg/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

namespace mpqdpg::harness {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string quote(std::string_view key) { return "'" + std::string(key) + "'"; }

double parse_double(std::string_view key, std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw ConfigError("key " + quote(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
    text = trim(text);
    Int value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("key " + quote(key) + ": expected an integer, got '" + std::string(text) + "'");
    }
    return value;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
    std::vector<double> out;
    while (true) {
        const auto comma = text.find(',');
        out.push_back(parse_double(key, text.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("key " + quote(key) + ": expected true/false");
}

using Coefficient = double dynamics::ModelCoefficients::*;

constexpr std::array<std::pair<std::string_view, Coefficient>, 24> kCoefficients{{
    {"mass", &dynamics::ModelCoefficients::mass},     {"x_g", &dynamics::ModelCoefficients::x_g},
    {"I_zz", &dynamics::ModelCoefficients::I_zz},     {"X_u", &dynamics::ModelCoefficients::X_u},
    {"X_uu", &dynamics::ModelCoefficients::X_uu},     {"X_udot", &dynamics::ModelCoefficients::X_udot},
    {"Y_v", &dynamics::ModelCoefficients::Y_v},       {"Y_r", &dynamics::ModelCoefficients::Y_r},
    {"Y_vv", &dynamics::ModelCoefficients::Y_vv},     {"Y_rr", &dynamics::ModelCoefficients::Y_rr},
    {"Y_uv", &dynamics::ModelCoefficients::Y_uv},     {"Y_vdot", &dynamics::ModelCoefficients::Y_vdot},
    {"Y_rdot", &dynamics::ModelCoefficients::Y_rdot}, {"Y_ur", &dynamics::ModelCoefficients::Y_ur},
    {"Y_uud", &dynamics::ModelCoefficients::Y_uud},   {"N_v", &dynamics::ModelCoefficients::N_v},
    {"N_r", &dynamics::ModelCoefficients::N_r},       {"N_vv", &dynamics::ModelCoefficients::N_vv},
    {"N_rr", &dynamics::ModelCoefficients::N_rr},     {"N_uv", &dynamics::ModelCoefficients::N_uv},
    {"N_vdot", &dynamics::ModelCoefficients::N_vdot}, {"N_rdot", &dynamics::ModelCoefficients::N_rdot},
    {"N_ur", &dynamics::ModelCoefficients::N_ur},     {"N_uud", &dynamics::ModelCoefficients::N_uud},
}};

// Normalization key -> state dimensions it controls.
struct NormKey {
    std::string_view name;
    int first;
    int second;  // -1 when the key maps to one dimension
};

constexpr std::array<NormKey, 8> kNormKeys{{
    {"x", 0, -1}, {"y", 1, -1}, {"psi", 2, -1}, {"u", 3, -1},
    {"v", 4, -1}, {"r", 5, -1}, {"xd", 6, 8},  {"yd", 7, 9},
}};

std::string join(const std::vector<double>& values) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
    return os.str();
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
    if (name == "mpq-dpg" || name == "mpqdpg") return Algorithm::mpq_dpg;
    if (name == "ddpg") return Algorithm::ddpg;
    throw ConfigError("unknown algorithm '" + name + "' (expected mpq-dpg or ddpg)");
}

std::string to_string(Algorithm algo) { return algo == Algorithm::mpq_dpg ? "mpq-dpg" : "ddpg"; }

void RunConfig::set(std::string_view key, std::string_view raw) {
    const std::string_view value = trim(raw);
    auto& a = agent;
    auto& e = episode;

    if (key == "algorithm") algorithm = parse_algorithm(std::string(value));
    else if (key == "trajectory") trajectory = env::parse_trajectory(std::string(value));
    else if (key == "n_actors") a.n_actors = parse_int<int>(key, value);
    else if (key == "m_critics") a.m_critics = parse_int<int>(key, value);
    else if (key == "episodes") episodes = parse_int<int>(key, value);
    else if (key == "steps_per_episode") e.steps_per_episode = parse_int<int>(key, value);
    else if (key == "seed") seed = parse_int<std::uint64_t>(key, value);
    else if (key == "lr_actor") a.lr_actor = parse_double(key, value);
    else if (key == "lr_critic") a.lr_critic = parse_double(key, value);
    else if (key == "l2") a.l2 = parse_double(key, value);
    else if (key == "gamma") a.gamma = e.gamma = parse_double(key, value);
    else if (key == "buffer_capacity") a.buffer_capacity = parse_int<std::size_t>(key, value);
    else if (key == "minibatch") a.minibatch = parse_int<std::size_t>(key, value);
    else if (key == "ou_theta") a.ou_theta = parse_double(key, value);
    else if (key == "ou_sigma") a.ou_sigma = parse_double(key, value);
    else if (key == "ou_dt") a.ou_dt = parse_double(key, value);
    else if (key == "tau_soft") a.tau_soft = parse_double(key, value);
    else if (key == "Ts") e.Ts = parse_double(key, value);
    else if (key == "substeps") e.substeps = parse_int<int>(key, value);
    else if (key == "thrust_limit") a.scale.bound(0) = e.thrust_limit = parse_double(key, value);
    else if (key == "rudder_limit") a.scale.bound(1) = e.rudder_limit = parse_double(key, value);
    else if (key == "out_dir") out_dir = std::string(value);
    else if (key == "record_wall_time") record_wall_time = parse_bool(key, value);
    else if (key == "hidden") {
        a.hidden.clear();
        for (double w : parse_list(key, value)) {
            if (w != std::floor(w) || w <= 0) throw ConfigError("key 'hidden': widths must be positive integers");
            a.hidden.push_back(static_cast<int>(w));
        }
    } else if (key == "reward_h") {
        const auto h = parse_list(key, value);
        if (h.size() != 4) throw ConfigError("key 'reward_h': expected h11,h12,h21,h22");
        e.H << h[0], h[1], h[2], h[3];
    } else if (key.starts_with("norm.")) {
        const std::string_view name = key.substr(5);
        for (const NormKey& nk : kNormKeys) {
            if (nk.name != name) continue;
            const auto range = parse_list(key, value);
            if (range.size() != 2) throw ConfigError("key " + quote(key) + ": expected lo,hi");
            for (int dim : {nk.first, nk.second}) {
                if (dim < 0) continue;
                e.bounds.lo[static_cast<std::size_t>(dim)] = range[0];
                e.bounds.hi[static_cast<std::size_t>(dim)] = range[1];
            }
            return;
        }
        throw ConfigError("unknown configuration key " + quote(key));
    } else if (key.starts_with("model.")) {
        const std::string_view name = key.substr(6);
        for (const auto& [coeff, member] : kCoefficients) {
            if (coeff == name) {
                model.*member = parse_double(key, value);
                return;
            }
        }
        throw ConfigError("unknown configuration key " + quote(key));
    } else {
        throw ConfigError("unknown configuration key " + quote(key));
    }
}

void RunConfig::validate() const {
    if (episodes < 0) throw ConfigError("episodes must be non-negative");
    if (algorithm == Algorithm::mpq_dpg && agent.m_critics < 2) {
        throw ConfigError("mpq-dpg requires m_critics >= 2 (got " + std::to_string(agent.m_critics) + ")");
    }
    if (agent.gamma != episode.gamma) throw ConfigError("agent and episode discount factors differ");
    agent.validate();
    episode.validate();
    try {
        dynamics::VehicleModel check(model);
    } catch (const ModelError& err) {
        throw ConfigError(err.what());
    }
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "algorithm = " << to_string(algorithm) << "\n";
    os << "trajectory = " << env::to_string(trajectory) << "\n";
    os << "n_actors = " << agent.n_actors << "\n";
    os << "m_critics = " << agent.m_critics << "\n";
    os << "episodes = " << episodes << "\n";
    os << "steps_per_episode = " << episode.steps_per_episode << "\n";
    os << "seed = " << seed << "\n";
    os << "lr_actor = " << agent.lr_actor << "\n";
    os << "lr_critic = " << agent.lr_critic << "\n";
    os << "l2 = " << agent.l2 << "\n";
    os << "gamma = " << agent.gamma << "\n";
    os << "buffer_capacity = " << agent.buffer_capacity << "\n";
    os << "minibatch = " << agent.minibatch << "\n";
    std::vector<double> hidden(agent.hidden.begin(), agent.hidden.end());
    os << "hidden = " << join(hidden) << "\n";
    os << "ou_theta = " << agent.ou_theta << "\n";
    os << "ou_sigma = " << agent.ou_sigma << "\n";
    os << "ou_dt = " << agent.ou_dt << "\n";
    os << "tau_soft = " << agent.tau_soft << "\n";
    os << "Ts = " << episode.Ts << "\n";
    os << "substeps = " << episode.substeps << "\n";
    os << "thrust_limit = " << episode.thrust_limit << "\n";
    os << "rudder_limit = " << episode.rudder_limit << "\n";
    os << "reward_h = " << join({episode.H(0, 0), episode.H(0, 1), episode.H(1, 0), episode.H(1, 1)}) << "\n";
    for (const NormKey& nk : kNormKeys) {
        const auto d = static_cast<std::size_t>(nk.first);
        os << "norm." << nk.name << " = " << join({episode.bounds.lo[d], episode.bounds.hi[d]}) << "\n";
    }
    for (const auto& [name, member] : kCoefficients) os << "model." << name << " = " << model.*member << "\n";
    os << "out_dir = " << out_dir.string() << "\n";
    os << "record_wall_time = " << (record_wall_time ? "true" : "false") << "\n";
    return os.str();
}

void apply_config_text(RunConfig& config, std::string_view text, std::string_view source) {
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = std::string(source) + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        try {
            config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& err) {
            throw ConfigError(where + ": " + err.what());
        }
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig config;
    apply_config_text(config, buf.str(), path.string());
    return config;
}

}  // namespace mpqdpg::harness
