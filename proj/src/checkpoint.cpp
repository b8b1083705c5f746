#include "bu/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <string_view>

#include <json.hpp>

#include "bu/error.hpp"
#include "bu/io.hpp"

namespace bu {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'B', 'U', 'L', 'N'};

class Writer {
public:
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
        need(n, what);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }
    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (in_.size() - pos_ < n) {
            throw FormatError(pos_, std::string("truncated while reading ") + what);
        }
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Classifier& model, const Provenance& provenance) {
    Writer w;
    w.bytes(kMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(model.layers().size()));
    for (const auto& layer : model.layers()) {
        w.u32(static_cast<std::uint32_t>(layer.inputs()));
        w.u32(static_cast<std::uint32_t>(layer.outputs()));
    }
    for (const auto& layer : model.layers()) {
        for (double v : layer.weights.values()) w.f64(v);
        for (double v : layer.bias.values()) w.f64(v);
    }
    const nlohmann::json meta = {
        {"method", provenance.method},
        {"seed", provenance.seed},
        {"config_digest", provenance.config_digest},
        {"wall_clock_seconds", provenance.wall_clock_seconds},
        {"per_epoch_loss", provenance.per_epoch_loss},
        {"num_classes", model.num_classes()},
        {"expanded", model.expanded()},
    };
    const std::string text = meta.dump();
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                          text.size()));
    return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.bytes(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
        throw FormatError(0, "bad magic, not a checkpoint");
    }
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw FormatError(version_at, "unsupported version " + std::to_string(version));
    }
    const std::size_t count_at = r.offset();
    const std::uint32_t count = r.u32("layer count");
    if (count == 0) throw FormatError(count_at, "checkpoint has no layers");
    if (static_cast<std::size_t>(count) * 8 > r.remaining()) {
        throw FormatError(count_at, "layer count " + std::to_string(count) + " exceeds file size");
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dims;
    for (std::uint32_t l = 0; l < count; ++l) {
        const std::size_t at = r.offset();
        const std::uint32_t in = r.u32("layer input width");
        const std::uint32_t out = r.u32("layer output width");
        if (in == 0 || out == 0) throw FormatError(at, "zero layer width");
        if (l > 0 && dims.back().second != in) throw FormatError(at, "layer widths do not chain");
        dims.emplace_back(in, out);
    }
    std::vector<DenseLayer> layers;
    for (const auto& [in, out] : dims) {
        const std::size_t n = static_cast<std::size_t>(in) * out;
        if ((n + out) * 8 > r.remaining()) {
            throw FormatError(r.offset(), "truncated while reading parameters");
        }
        std::vector<double> w(n);
        for (double& v : w) v = r.f64("weights");
        std::vector<double> b(out);
        for (double& v : b) v = r.f64("bias");
        layers.push_back({Tensor({out, in}, std::move(w)), Tensor::vector(std::move(b))});
    }

    const std::size_t length_at = r.offset();
    const std::uint32_t length = r.u32("provenance length");
    const auto blob = r.bytes(length, "provenance");
    if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes after provenance");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(std::string_view(reinterpret_cast<const char*>(blob.data()),
                                                      blob.size()));
        Provenance p;
        p.method = meta.at("method").get<std::string>();
        p.seed = meta.at("seed").get<std::uint64_t>();
        p.config_digest = meta.at("config_digest").get<std::string>();
        p.wall_clock_seconds = meta.at("wall_clock_seconds").get<double>();
        p.per_epoch_loss = meta.at("per_epoch_loss").get<std::vector<double>>();
        const auto k = meta.at("num_classes").get<std::size_t>();
        const bool expanded = meta.at("expanded").get<bool>();
        return {Classifier(std::move(layers), k, expanded), std::move(p)};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(length_at + 4, std::string("bad provenance JSON: ") + e.what());
    } catch (const InvalidInput& e) {
        throw FormatError(length_at + 4, std::string("inconsistent model: ") + e.what());
    }
}

void save_checkpoint(const Classifier& model, const Provenance& provenance,
                     const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(model, provenance));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file_bytes(path));
}

}  // namespace bu
