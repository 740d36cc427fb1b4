#include "mpqdpg/harness.hpp"

#include "mpqdpg/checkpoint.hpp"
#include "mpqdpg/errors.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mpqdpg::harness {

namespace fs = std::filesystem;

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), ptr);
}

namespace {

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

void check_stream(const std::ostream& out, const fs::path& path) {
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::unique_ptr<agent::Agent> make_agent(const RunConfig& config) {
    if (config.algorithm == Algorithm::ddpg) return std::make_unique<agent::DdpgAgent>(config.agent, config.seed);
    return std::make_unique<agent::EnsembleAgent>(config.agent, config.seed);
}

TrainResult train(const RunConfig& config, const agent::TraceSink& trace, const EpisodeCallback& on_episode) {
    config.validate();
    ensure_directory(config.out_dir);

    TrainResult result;
    result.csv_path = config.out_dir / "train.csv";
    result.checkpoint_path = config.out_dir / "checkpoint.bin";
    {
        const fs::path cfg_path = config.out_dir / "config.txt";
        auto cfg = open_output(cfg_path);
        cfg << config.to_text();
        check_stream(cfg, cfg_path);
    }

    auto learner = make_agent(config);
    learner->set_trace(trace);
    env::TrackingEnv environment(config.trajectory, config.episode, dynamics::VehicleModel(config.model));
    Rng env_rng = make_rng(config.seed, Stream::environment);

    auto csv = open_output(result.csv_path);
    csv << "episode,total_reward,steps,seconds\n" << std::flush;
    check_stream(csv, result.csv_path);

    for (int episode = 1; episode <= config.episodes; ++episode) {
        const auto started = std::chrono::steady_clock::now();
        learner->begin_episode();
        env::MdpState state = environment.reset(env_rng);
        double total = 0.0;

        while (!environment.done()) {
            const agent::ActionVec action = learner->act(state.normalized, true);
            if (trace) trace(agent::Phase::env_step);
            const env::StepResult step = environment.step({action(0), action(1)});

            if (trace) trace(agent::Phase::store);
            learner->observe({state.normalized, {step.applied.thrust, step.applied.rudder}, step.reward,
                              step.state.normalized});

            if (const auto info = learner->update(); info && !std::isfinite(info->critic_loss)) {
                throw NumericError("non-finite critic loss in episode " + std::to_string(episode) + ", step " +
                                   std::to_string(step.step_index));
            }
            total += step.reward;
            state = step.state;
        }
        if (!std::isfinite(total)) throw NumericError("non-finite return in episode " + std::to_string(episode));

        EpisodeRecord rec;
        rec.episode = episode;
        rec.total_reward = total;
        rec.steps = environment.step_index();
        if (config.record_wall_time) {
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        }
        std::ostringstream seconds;
        seconds.setf(std::ios::fixed);
        seconds.precision(3);
        seconds << rec.seconds;
        csv << rec.episode << ',' << format_double(rec.total_reward) << ',' << rec.steps << ',' << seconds.str()
            << '\n'
            << std::flush;
        check_stream(csv, result.csv_path);
        result.records.push_back(rec);
        if (on_episode) on_episode(rec);
    }

    const std::vector<nn::MlpNetwork> nets = learner->checkpoint_networks();
    nn::save_checkpoint(result.checkpoint_path, nets);
    return result;
}

// ---------------------------------------------------------------------------

dynamics::VehicleState evaluation_start(const RunConfig& config) {
    env::TrackingEnv environment(config.trajectory, config.episode, dynamics::VehicleModel(config.model));
    Rng rng = make_rng(config.seed, Stream::environment);
    environment.reset(rng);
    return environment.vehicle();
}

EvalResult rollout(std::span<const nn::MlpNetwork> actors, const RunConfig& config,
                   const dynamics::VehicleState& initial) {
    env::TrackingEnv environment(config.trajectory, config.episode, dynamics::VehicleModel(config.model));
    env::MdpState state = environment.reset(initial);
    const agent::ActionScale& scale = config.agent.scale;

    EvalResult out;
    double squared_error = 0.0;
    while (!environment.done()) {
        const int k = environment.step_index();
        const dynamics::VehicleState pose = environment.vehicle();
        const agent::ActionVec action = scale.saturate(scale.to_physical(agent::average_policy(actors, state.normalized)));
        const env::StepResult step = environment.step({action(0), action(1)});

        RolloutRow row;
        row.step = k;
        row.t = k * config.episode.Ts;
        row.x = pose.x;
        row.y = pose.y;
        row.x_d = state.raw(6);
        row.y_d = state.raw(7);
        row.err_norm = step.error.norm();
        row.thrust = step.applied.thrust;
        row.rudder = step.applied.rudder;
        row.reward = step.reward;
        out.rows.push_back(row);

        squared_error += step.error.squaredNorm();
        out.summary.total_reward += step.reward;
        state = step.state;
    }
    out.summary.steps = static_cast<int>(out.rows.size());
    if (!out.rows.empty()) out.summary.rms_error = std::sqrt(squared_error / static_cast<double>(out.rows.size()));
    return out;
}

std::vector<nn::MlpNetwork> select_actors(std::vector<nn::MlpNetwork> nets) {
    std::vector<nn::MlpNetwork> actors;
    for (auto& net : nets) {
        if (net.specs().back().activation != nn::Activation::tanh) continue;
        if (net.input_width() != env::kStateDim || net.output_width() != env::kActionDim || net.side_layer() >= 0) {
            throw FormatError("checkpoint actor shape (" + std::to_string(net.input_width()) + " -> " +
                              std::to_string(net.output_width()) +
                              ") does not match the 10-state / 2-action configuration");
        }
        actors.push_back(std::move(net));
    }
    if (actors.empty()) throw FormatError("checkpoint contains no actor networks");
    return actors;
}

EvalResult evaluate(const fs::path& checkpoint, const RunConfig& config, const fs::path& out_dir) {
    config.validate();
    const std::vector<nn::MlpNetwork> actors = select_actors(nn::load_checkpoint(checkpoint));
    EvalResult result = rollout(actors, config, evaluation_start(config));

    ensure_directory(out_dir);
    const fs::path csv_path = out_dir / "rollout.csv";
    auto csv = open_output(csv_path);
    write_rollout_csv(csv, result.rows);
    check_stream(csv, csv_path);

    const fs::path summary_path = out_dir / "summary.txt";
    auto summary = open_output(summary_path);
    summary << "checkpoint = " << checkpoint.string() << "\n"
            << "trajectory = " << env::to_string(config.trajectory) << "\n"
            << "actors = " << actors.size() << "\n"
            << "steps = " << result.summary.steps << "\n"
            << "total_reward = " << format_double(result.summary.total_reward) << "\n"
            << "rms_error = " << format_double(result.summary.rms_error) << "\n";
    check_stream(summary, summary_path);
    return result;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 10> kRolloutColumns{"step", "t",        "x",      "y",      "x_d",
                                                      "y_d",  "err_norm", "thrust", "rudder", "reward"};

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = line.find(',');
        out.push_back(line.substr(0, comma));
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return out;
}

double field_number(std::string_view text, int row) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw FormatError("malformed CSV at row " + std::to_string(row) + ": '" + std::string(text) +
                          "' is not a number");
    }
    return v;
}

}  // namespace

void write_rollout_csv(std::ostream& out, std::span<const RolloutRow> rows) {
    for (std::size_t i = 0; i < kRolloutColumns.size(); ++i) out << (i ? "," : "") << kRolloutColumns[i];
    out << '\n';
    for (const RolloutRow& r : rows) {
        out << r.step << ',' << format_double(r.t) << ',' << format_double(r.x) << ',' << format_double(r.y) << ','
            << format_double(r.x_d) << ',' << format_double(r.y_d) << ',' << format_double(r.err_norm) << ','
            << format_double(r.thrust) << ',' << format_double(r.rudder) << ',' << format_double(r.reward) << '\n';
    }
}

std::vector<RolloutRow> read_rollout_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("malformed CSV at row 1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.size() != kRolloutColumns.size()) {
        throw FormatError("malformed CSV at row 1: expected " + std::to_string(kRolloutColumns.size()) + " columns");
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] != kRolloutColumns[i]) {
            throw FormatError("malformed CSV at row 1: column " + std::to_string(i + 1) + " should be '" +
                              kRolloutColumns[i] + "'");
        }
    }

    std::vector<RolloutRow> rows;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != kRolloutColumns.size()) {
            throw FormatError("malformed CSV at row " + std::to_string(row_no) + ": expected " +
                              std::to_string(kRolloutColumns.size()) + " fields, got " + std::to_string(f.size()));
        }
        RolloutRow r;
        r.step = static_cast<int>(field_number(f[0], row_no));
        r.t = field_number(f[1], row_no);
        r.x = field_number(f[2], row_no);
        r.y = field_number(f[3], row_no);
        r.x_d = field_number(f[4], row_no);
        r.y_d = field_number(f[5], row_no);
        r.err_norm = field_number(f[6], row_no);
        r.thrust = field_number(f[7], row_no);
        r.rudder = field_number(f[8], row_no);
        r.reward = field_number(f[9], row_no);
        rows.push_back(r);
    }
    return rows;
}

std::vector<RolloutRow> read_rollout_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read rollout CSV: " + path.string());
    return read_rollout_csv(in);
}

// ---------------------------------------------------------------------------

std::vector<SimSample> simulate(const dynamics::ModelCoefficients& model, dynamics::ControlInput tau, double duration,
                                double Ts, const dynamics::VehicleState& initial) {
    if (!(Ts > 0.0)) throw ConfigError("simulation step must be positive");
    if (!(duration >= 0.0)) throw ConfigError("simulation duration must be non-negative");
    const dynamics::VehicleModel vehicle(model);
    const dynamics::ControlInput applied = dynamics::saturate(tau);
    const auto steps = static_cast<long>(std::llround(duration / Ts));

    std::vector<SimSample> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    dynamics::VehicleState s = initial;
    s.psi = dynamics::wrap_angle(s.psi);
    out.push_back({0.0, s});
    for (long k = 1; k <= steps; ++k) {
        s = vehicle.step(s, applied, Ts);
        out.push_back({static_cast<double>(k) * Ts, s});
    }
    return out;
}

void write_simulation_csv(std::ostream& out, std::span<const SimSample> samples) {
    out << "t,x,y,psi,u,v,r\n";
    for (const SimSample& s : samples) {
        out << format_double(s.t) << ',' << format_double(s.state.x) << ',' << format_double(s.state.y) << ','
            << format_double(s.state.psi) << ',' << format_double(s.state.u) << ',' << format_double(s.state.v) << ','
            << format_double(s.state.r) << '\n';
    }
}

}  // namespace mpqdpg::harness
