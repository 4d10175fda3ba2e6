#include "ambc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace ambc {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'A', 'M', 'B', 'C', 'C', 'K', 'P', 'T'};

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw CheckpointError("checkpoint: truncated integer field");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw CheckpointError("checkpoint: truncated integer field");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_doubles(std::ostream& os, std::span<const double> v) {
    for (double d : v) put_u64(os, std::bit_cast<std::uint64_t>(d));
}

void get_doubles(std::istream& is, std::span<double> v) {
    for (double& d : v) d = std::bit_cast<double>(get_u64(is));
}

template <typename T>
T field(const json& j, const std::string& path) {
    const json* node = &j;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key)) throw CheckpointError("checkpoint header: missing field '" + path + "'");
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        throw CheckpointError("checkpoint header: field '" + path + "' has the wrong type");
    }
}

}  // namespace

void save_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
    const auto& sc = ckpt.score.config();
    const auto& dc = ckpt.disc.config();
    json h;
    h["format"] = "ambc-score-checkpoint";
    h["score"] = {{"M", sc.M},           {"K", sc.K},
                  {"width", sc.width},   {"depth", sc.depth},
                  {"data_scale", sc.data_scale}, {"param_count", ckpt.score.param_count()}};
    h["disc"] = {{"input_dim", ckpt.disc.input_dim()},
                 {"width", dc.width},
                 {"depth", dc.depth},
                 {"param_count", ckpt.disc.param_count()}};
    h["schedule"] = {{"sigma_min", ckpt.schedule.sigma_min()},
                     {"sigma_max", ckpt.schedule.sigma_max()},
                     {"T", ckpt.schedule.T()}};
    const auto& t = ckpt.train;
    h["train"] = {{"lambda", t.lambda},       {"batch_size", t.batch_size},     {"epochs", t.epochs},
                  {"lr_score", t.lr_score},   {"lr_disc", t.lr_disc},           {"cosine_decay", t.cosine_decay},
                  {"dataset_size", t.dataset_size}, {"seed", t.seed}};
    h["blob"] = {{"dtype", "float64-le"}, {"count", ckpt.score.param_count() + ckpt.disc.param_count()}};

    const std::string header = h.dump();
    os.write(kMagic.data(), kMagic.size());
    put_u32(os, kCheckpointVersion);
    put_u64(os, header.size());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    put_doubles(os, ckpt.score.params());
    put_doubles(os, ckpt.disc.params());
    if (!os) throw CheckpointError("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("checkpoint: cannot open '" + path.string() + "' for writing");
    save_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw CheckpointError("checkpoint: bad magic");
    const std::uint32_t version = get_u32(is);
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint64_t len = get_u64(is);
    if (len > (1u << 24)) throw CheckpointError("checkpoint: implausible header length");
    std::string header(len, '\0');
    if (!is.read(header.data(), static_cast<std::streamsize>(len))) throw CheckpointError("checkpoint: truncated header");

    json h;
    try {
        h = json::parse(header);
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint header: invalid JSON: ") + e.what());
    }
    if (field<std::string>(h, "format") != "ambc-score-checkpoint") throw CheckpointError("checkpoint header: wrong format tag");
    if (field<std::string>(h, "blob.dtype") != "float64-le") throw CheckpointError("checkpoint header: unsupported blob.dtype");

    ScoreNetConfig sc;
    sc.M = field<std::size_t>(h, "score.M");
    sc.K = field<std::size_t>(h, "score.K");
    sc.width = field<std::size_t>(h, "score.width");
    sc.depth = field<std::size_t>(h, "score.depth");
    sc.data_scale = field<double>(h, "score.data_scale");
    DiscNetConfig dc;
    dc.width = field<std::size_t>(h, "disc.width");
    dc.depth = field<std::size_t>(h, "disc.depth");

    Checkpoint c{ScoreModel(sc), DiscModel(field<std::size_t>(h, "disc.input_dim"), dc), {}, {}};
    if (c.score.param_count() != field<std::size_t>(h, "score.param_count")) {
        throw CheckpointError("checkpoint header: score.param_count does not match the architecture");
    }
    if (c.disc.param_count() != field<std::size_t>(h, "disc.param_count")) {
        throw CheckpointError("checkpoint header: disc.param_count does not match the architecture");
    }
    if (field<std::size_t>(h, "blob.count") != c.score.param_count() + c.disc.param_count()) {
        throw CheckpointError("checkpoint header: blob.count inconsistent with parameter counts");
    }
    try {
        c.schedule = make_schedule(field<double>(h, "schedule.sigma_min"), field<double>(h, "schedule.sigma_max"),
                                   field<std::size_t>(h, "schedule.T"));
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint header: schedule: ") + e.what());
    }
    c.train.lambda = field<double>(h, "train.lambda");
    c.train.batch_size = field<std::size_t>(h, "train.batch_size");
    c.train.epochs = field<std::size_t>(h, "train.epochs");
    c.train.lr_score = field<double>(h, "train.lr_score");
    c.train.lr_disc = field<double>(h, "train.lr_disc");
    c.train.cosine_decay = field<bool>(h, "train.cosine_decay");
    c.train.dataset_size = field<std::size_t>(h, "train.dataset_size");
    c.train.seed = field<std::uint64_t>(h, "train.seed");

    try {
        get_doubles(is, c.score.params());
        get_doubles(is, c.disc.params());
    } catch (const CheckpointError&) {
        throw CheckpointError("checkpoint: truncated parameter blob");
    }
    if (!nn::all_finite(c.score.params()) || !nn::all_finite(c.disc.params())) {
        throw CheckpointError("checkpoint: parameter blob contains non-finite values");
    }
    return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint: cannot open '" + path.string() + "'");
    return load_checkpoint(is);
}

}  // namespace ambc
