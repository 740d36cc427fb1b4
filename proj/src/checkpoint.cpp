#include "mpqdpg/checkpoint.hpp"

#include "mpqdpg/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

namespace mpqdpg::nn {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out.write(b.data(), b.size());
}

template <std::size_t N>
std::array<unsigned char, N> get_bytes(std::istream& in, const char* what) {
    std::array<char, N> raw{};
    if (!in.read(raw.data(), N)) throw FormatError(std::string("checkpoint truncated while reading ") + what);
    std::array<unsigned char, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<unsigned char>(raw[i]);
    return out;
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    const auto b = get_bytes<4>(in, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    const auto b = get_bytes<8>(in, "parameters");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

// Guards against absurd allocations from corrupted headers.
constexpr std::uint32_t kMaxCount = 1u << 20;

}  // namespace

void write_checkpoint(std::ostream& out, std::span<const MlpNetwork> nets) {
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    put_u32(out, static_cast<std::uint32_t>(nets.size()));
    for (const MlpNetwork& net : nets) {
        put_u32(out, static_cast<std::uint32_t>(net.layer_count()));
        for (const LayerSpec& s : net.specs()) {
            put_u32(out, static_cast<std::uint32_t>(s.in_width));
            put_u32(out, static_cast<std::uint32_t>(s.out_width));
            put_u32(out, static_cast<std::uint32_t>(s.activation));
        }
    }
    for (const MlpNetwork& net : nets) {
        for (const Layer& layer : net.layers()) {
            for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
                for (Eigen::Index c = 0; c < layer.W.cols(); ++c) put_f64(out, layer.W(r, c));
            }
            for (Eigen::Index r = 0; r < layer.b.size(); ++r) put_f64(out, layer.b(r));
        }
    }
}

std::vector<MlpNetwork> read_checkpoint(std::istream& in) {
    std::array<char, kCheckpointMagic.size()> magic{};
    if (!in.read(magic.data(), magic.size()) ||
        std::string_view(magic.data(), magic.size()) != kCheckpointMagic) {
        throw FormatError("not a checkpoint or unsupported version (expected magic MPQDPG01)");
    }
    const std::uint32_t count = get_u32(in, "network count");
    if (count > kMaxCount) throw FormatError("checkpoint network count is implausible");

    std::vector<std::vector<LayerSpec>> topologies(count);
    for (auto& specs : topologies) {
        const std::uint32_t layers = get_u32(in, "layer count");
        if (layers == 0 || layers > kMaxCount) throw FormatError("checkpoint layer count is implausible");
        for (std::uint32_t i = 0; i < layers; ++i) {
            LayerSpec s;
            const std::uint32_t in_w = get_u32(in, "layer shape");
            const std::uint32_t out_w = get_u32(in, "layer shape");
            const std::uint32_t act = get_u32(in, "activation");
            if (in_w == 0 || out_w == 0 || in_w > kMaxCount || out_w > kMaxCount) {
                throw FormatError("checkpoint layer width is implausible");
            }
            if (act > static_cast<std::uint32_t>(Activation::tanh)) {
                throw FormatError("checkpoint has unknown activation code " + std::to_string(act));
            }
            s.in_width = static_cast<int>(in_w);
            s.out_width = static_cast<int>(out_w);
            s.activation = static_cast<Activation>(act);
            specs.push_back(s);
        }
    }

    std::vector<MlpNetwork> nets;
    nets.reserve(count);
    for (auto& specs : topologies) {
        MlpNetwork net;
        try {
            net = MlpNetwork(std::move(specs));
        } catch (const ConfigError& e) {
            throw FormatError(std::string("checkpoint topology invalid: ") + e.what());
        }
        for (Layer& layer : net.layers()) {
            for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
                for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = get_f64(in);
            }
            for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b(r) = get_f64(in);
        }
        nets.push_back(std::move(net));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint payload");
    return nets;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const MlpNetwork> nets) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    write_checkpoint(out, nets);
    out.flush();
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

std::vector<MlpNetwork> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    return read_checkpoint(in);
}

}  // namespace mpqdpg::nn
