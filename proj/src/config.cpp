#include "bu/config.hpp"

#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "bu/error.hpp"
#include "bu/io.hpp"
#include "bu/rng.hpp"

namespace bu {
namespace {

std::string method_names() {
    std::string out;
    for (Method m : unlearning_methods()) out += (out.empty() ? "" : ", ") + std::string(to_string(m));
    return out;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Typed access to the key-value map. Every key read is recorded so leftovers
// can be reported as unknown.
class Fields {
public:
    explicit Fields(const KeyValues& kv) : kv_(kv) {}

    bool has(const std::string& key) {
        seen_.insert(key);
        return kv_.count(key) > 0;
    }

    std::string text(const std::string& key) {
        if (!has(key)) throw ConfigError("missing required config key '" + key + "'");
        return kv_.at(key);
    }
    std::string text(const std::string& key, const std::string& fallback) {
        return has(key) ? kv_.at(key) : fallback;
    }

    std::uint64_t u64(const std::string& key) { return parse_u64(key, text(key)); }
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
        return has(key) ? parse_u64(key, kv_.at(key)) : fallback;
    }
    double real(const std::string& key) { return parse_real(key, text(key)); }
    double real(const std::string& key, double fallback) {
        return has(key) ? parse_real(key, kv_.at(key)) : fallback;
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const std::string& v = kv_.at(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw ConfigError("config key '" + key + "' must be true or false, got '" + v + "'");
    }

    std::vector<std::size_t> sizes(const std::string& key) {
        std::vector<std::size_t> out;
        std::stringstream ss(text(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(parse_u64(key, item));
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : kv_) {
            if (!seen_.count(key)) throw ConfigError("unknown config key '" + key + "'");
        }
    }

private:
    static std::uint64_t parse_u64(const std::string& key, const std::string& v) {
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size()) {
            throw ConfigError("config key '" + key + "' must be a nonnegative integer, got '" + v +
                              "'");
        }
        return out;
    }
    static double parse_real(const std::string& key, const std::string& v) {
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size()) {
            throw ConfigError("config key '" + key + "' must be a number, got '" + v + "'");
        }
        return out;
    }

    const KeyValues& kv_;
    std::set<std::string> seen_;
};

// Desk-scale unlearning finetune: 10 epochs, batch 64, momentum 0.9.
OptimizerConfig unlearning_default() { return {3e-4, 0.9, 64, 10, 0}; }

OptimizerConfig read_optimizer(Fields& f, const std::string& section, OptimizerConfig fallback,
                               bool required) {
    OptimizerConfig c;
    if (required) {
        c.learning_rate = f.real(section + ".learning_rate");
        c.momentum = f.real(section + ".momentum");
        c.batch_size = f.u64(section + ".batch_size");
        c.epochs = f.u64(section + ".epochs");
    } else {
        c.learning_rate = f.real(section + ".learning_rate", fallback.learning_rate);
        c.momentum = f.real(section + ".momentum", fallback.momentum);
        c.batch_size = f.u64(section + ".batch_size", fallback.batch_size);
        c.epochs = f.u64(section + ".epochs", fallback.epochs);
    }
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError("config section '" + section + "': " + e.what());
    }
    return c;
}

void write_optimizer(std::ostringstream& out, const std::string& section,
                     const OptimizerConfig& c) {
    out << section << ".batch_size = " << c.batch_size << '\n';
    out << section << ".epochs = " << c.epochs << '\n';
    out << section << ".learning_rate = " << format_real(c.learning_rate) << '\n';
    out << section << ".momentum = " << format_real(c.momentum) << '\n';
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(line_no, "empty key");
        if (!kv.emplace(key, trim(line.substr(eq + 1))).second) {
            throw ParseError(line_no, "duplicate key '" + key + "'");
        }
    }
    return kv;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
    Fields f(kv);
    ExperimentConfig c;
    c.seed = f.u64("seed");

    const std::string source = f.text("data.source");
    if (source == "blobs") {
        c.data.source = DatasetSpec::Source::blobs;
    } else if (source == "csv") {
        c.data.source = DatasetSpec::Source::csv;
    } else {
        throw ConfigError("config key 'data.source' must be blobs or csv, got '" + source + "'");
    }
    c.data.num_classes = f.u64("data.classes");
    c.data.feature_dim = f.u64("data.feature_dim");
    c.data.per_class = f.u64("data.per_class", c.data.per_class);
    c.data.spread = f.real("data.spread", c.data.spread);
    c.data.csv_header = f.boolean("data.header", false);
    if (c.data.source == DatasetSpec::Source::csv) {
        c.data.csv_path = f.text("data.csv_path");
    } else {
        c.data.csv_path = f.text("data.csv_path", "");
    }

    c.hidden = f.sizes("model.hidden");
    c.train = read_optimizer(f, "train", {}, true);
    c.forget_class = f.u64("forget.class");

    const std::string methods = f.text("unlearn.methods", "all");
    if (methods == "all") {
        for (Method m : unlearning_methods()) {
            if (m != Method::retrain) c.methods.push_back(m);
        }
    } else {
        std::stringstream ss(methods);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            const auto m = parse_method(item);
            if (!m || *m == Method::original) {
                throw ConfigError("config key 'unlearn.methods': unknown method '" + item +
                                  "'; valid methods: " + method_names());
            }
            if (*m != Method::retrain) c.methods.push_back(*m);
        }
    }

    c.shrink.epsilon = f.real("shrink.epsilon", 0.5);
    c.shrink.refresh_labels_each_epoch = f.boolean("shrink.refresh_labels", false);
    c.shrink.finetune = read_optimizer(f, "shrink", unlearning_default(), false);
    c.expand = read_optimizer(f, "expand", unlearning_default(), false);
    c.random_labels = read_optimizer(f, "random_labels", unlearning_default(), false);
    c.negative_gradient = read_optimizer(f, "negative_gradient", unlearning_default(), false);
    OptimizerConfig finetune_default = unlearning_default();
    finetune_default.learning_rate *= 10.0;
    finetune_default.epochs = 5;
    c.finetune = read_optimizer(f, "finetune", finetune_default, false);

    const std::string feature = f.text("mia.feature", "entropy");
    if (feature != "entropy") {
        throw ConfigError("config key 'mia.feature' must be entropy, got '" + feature + "'");
    }
    c.raster_resolution = f.u64("eval.resolution", c.raster_resolution);
    c.raster_inflate = f.real("eval.inflate", c.raster_inflate);
    c.output_dir = f.text("output.dir");

    f.reject_unknown();
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path,
                                             const KeyValues& overrides) {
    KeyValues kv = parse_key_values(read_file_text(path));
    for (const auto& [k, v] : overrides) kv[k] = v;
    return from_key_values(kv);
}

std::vector<std::size_t> ExperimentConfig::widths() const {
    std::vector<std::size_t> w{data.feature_dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(data.num_classes);
    return w;
}

void ExperimentConfig::validate() const {
    if (data.num_classes < 2) throw ConfigError("config key 'data.classes' must be at least 2");
    if (data.feature_dim == 0) throw ConfigError("config key 'data.feature_dim' must be positive");
    if (data.source == DatasetSpec::Source::blobs) {
        if (data.per_class < 2) throw ConfigError("config key 'data.per_class' must be at least 2");
        if (!(data.spread > 0.0)) throw ConfigError("config key 'data.spread' must be positive");
    }
    for (std::size_t h : hidden) {
        if (h == 0) throw ConfigError("config key 'model.hidden' has a zero width");
    }
    if (forget_class >= data.num_classes) {
        throw ConfigError("config key 'forget.class' must be below data.classes");
    }
    if (!(shrink.epsilon > 0.0)) throw ConfigError("config key 'shrink.epsilon' must be positive");
    if (raster_resolution == 0) throw ConfigError("config key 'eval.resolution' must be positive");
    if (!(raster_inflate >= 0.0)) throw ConfigError("config key 'eval.inflate' must be >= 0");
    if (output_dir.empty()) throw ConfigError("config key 'output.dir' must not be empty");
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream out;
    out << "data.classes = " << data.num_classes << '\n';
    out << "data.csv_path = " << data.csv_path.string() << '\n';
    out << "data.feature_dim = " << data.feature_dim << '\n';
    out << "data.header = " << (data.csv_header ? "true" : "false") << '\n';
    out << "data.per_class = " << data.per_class << '\n';
    out << "data.source = " << (data.source == DatasetSpec::Source::blobs ? "blobs" : "csv") << '\n';
    out << "data.spread = " << format_real(data.spread) << '\n';
    out << "eval.inflate = " << format_real(raster_inflate) << '\n';
    out << "eval.resolution = " << raster_resolution << '\n';
    write_optimizer(out, "expand", expand);
    write_optimizer(out, "finetune", finetune);
    out << "forget.class = " << forget_class << '\n';
    out << "mia.feature = entropy\n";
    out << "model.hidden = ";
    for (std::size_t i = 0; i < hidden.size(); ++i) out << (i ? "," : "") << hidden[i];
    out << '\n';
    write_optimizer(out, "negative_gradient", negative_gradient);
    write_optimizer(out, "random_labels", random_labels);
    out << "seed = " << seed << '\n';
    write_optimizer(out, "shrink", shrink.finetune);
    out << "shrink.epsilon = " << format_real(shrink.epsilon) << '\n';
    out << "shrink.refresh_labels = " << (shrink.refresh_labels_each_epoch ? "true" : "false")
        << '\n';
    write_optimizer(out, "train", train);
    out << "unlearn.methods = ";
    for (std::size_t i = 0; i < methods.size(); ++i) out << (i ? "," : "") << to_string(methods[i]);
    out << '\n';
    return out.str();
}

std::string ExperimentConfig::digest() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_text())));
    return buf;
}

std::uint64_t stage_seed(const ExperimentConfig& cfg, const std::string& stage) {
    return Rng::derive(cfg.seed, stage);
}

OptimizerConfig method_optimizer(const ExperimentConfig& cfg, Method method) {
    OptimizerConfig c;
    switch (method) {
        case Method::original: c = cfg.train; break;
        case Method::retrain: c = cfg.train; break;
        case Method::finetune: c = cfg.finetune; break;
        case Method::negative_gradient: c = cfg.negative_gradient; break;
        case Method::random_labels: c = cfg.random_labels; break;
        case Method::boundary_shrink: c = cfg.shrink.finetune; break;
        case Method::boundary_expanding: c = cfg.expand; break;
    }
    c.seed = stage_seed(cfg, std::string(to_string(method)) + ".shuffle");
    return c;
}

}  // namespace bu
