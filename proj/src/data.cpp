#include "bu/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <string_view>

#include "bu/error.hpp"
#include "bu/rng.hpp"

namespace bu {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::size_t test_count_for(std::size_t n) {
    const std::size_t t = static_cast<std::size_t>(std::lround(static_cast<double>(n) * 0.2));
    return std::max<std::size_t>(1, t);
}

std::vector<std::vector<double>> blob_centers(std::size_t k, std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> centers(k, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < k; ++c) {
        if (dim == 2) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                                 static_cast<double>(k);
            centers[c] = {std::cos(angle), std::sin(angle)};
        } else if (dim == 1) {
            centers[c][0] = static_cast<double>(c);
        } else {
            double norm = 0.0;
            for (double& v : centers[c]) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (double& v : centers[c]) v /= norm;
        }
    }
    return centers;
}

void standardize(LabeledDataset& ds) {
    const Standardizer s = Standardizer::fit(ds.train);
    s.apply(ds.train);
    s.apply(ds.test);
}

}  // namespace

void LabeledDataset::validate() const {
    if (num_classes == 0 || feature_dim == 0) {
        throw InvalidInput("dataset needs positive class count and feature dimension");
    }
    for (const auto* part : {&train, &test}) {
        for (const auto& ex : *part) {
            if (ex.features.size() != feature_dim) {
                throw InvalidInput("example has " + std::to_string(ex.features.size()) +
                                   " features, expected " + std::to_string(feature_dim));
            }
            if (ex.label >= num_classes) {
                throw InvalidInput("label " + std::to_string(ex.label) + " out of range");
            }
            if (!ex.features.all_finite()) throw InvalidInput("non-finite feature value");
        }
    }
}

Standardizer Standardizer::fit(std::span<const Example> examples) {
    if (examples.empty()) throw InvalidInput("cannot standardize an empty split");
    const std::size_t dim = examples.front().features.size();
    Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    const double n = static_cast<double>(examples.size());
    for (const auto& ex : examples) {
        for (std::size_t j = 0; j < dim; ++j) s.mean[j] += ex.features[j];
    }
    for (double& m : s.mean) m /= n;
    for (const auto& ex : examples) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = ex.features[j] - s.mean[j];
            s.stddev[j] += d * d;
        }
    }
    for (double& v : s.stddev) {
        v = std::sqrt(v / n);
        if (!(v > 0.0)) v = 1.0;
    }
    return s;
}

void Standardizer::apply(std::vector<Example>& examples) const {
    for (auto& ex : examples) {
        if (ex.features.size() != mean.size()) throw InvalidInput("feature width mismatch");
        for (std::size_t j = 0; j < mean.size(); ++j) {
            ex.features[j] = (ex.features[j] - mean[j]) / stddev[j];
        }
    }
}

LabeledDataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t feature_dim,
                          double spread, std::uint64_t seed) {
    if (num_classes < 2) throw InvalidInput("make_blobs needs at least 2 classes");
    if (per_class < 2) throw InvalidInput("make_blobs needs at least 2 examples per class");
    if (feature_dim == 0) throw InvalidInput("feature_dim must be positive");
    if (!(spread > 0.0) || !std::isfinite(spread)) throw InvalidInput("spread must be positive");

    Rng rng(seed);
    const auto centers = blob_centers(num_classes, feature_dim, rng);
    const std::size_t n_test = test_count_for(per_class);
    const std::size_t n_train = per_class - n_test;

    LabeledDataset ds;
    ds.num_classes = num_classes;
    ds.feature_dim = feature_dim;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> x(feature_dim);
            for (std::size_t j = 0; j < feature_dim; ++j) x[j] = centers[c][j] + spread * rng.normal();
            Example ex{Tensor::vector(std::move(x)), c};
            (i < n_train ? ds.train : ds.test).push_back(std::move(ex));
        }
    }
    standardize(ds);
    return ds;
}

std::vector<Example> read_csv_rows(const std::filesystem::path& path, std::size_t num_classes,
                                   std::size_t feature_dim, bool header) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::vector<Example> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (header && line_no == 1) continue;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != feature_dim + 1) {
            throw ParseError(line_no, "expected " + std::to_string(feature_dim + 1) +
                                          " fields, found " + std::to_string(fields.size()));
        }
        std::vector<double> x(feature_dim);
        for (std::size_t j = 0; j < feature_dim; ++j) {
            const auto f = fields[j];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x[j]);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(x[j])) {
                throw ParseError(line_no, "field " + std::to_string(j + 1) + " is not a number: '" +
                                              std::string(f) + "'");
            }
        }
        const auto lf = fields.back();
        long long label = 0;
        const auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
        if (ec != std::errc() || ptr != lf.data() + lf.size() || label < 0) {
            throw ParseError(line_no, "label is not a class index: '" + std::string(lf) + "'");
        }
        if (static_cast<unsigned long long>(label) >= num_classes) {
            throw InvalidInput("line " + std::to_string(line_no) + ": label " +
                               std::to_string(label) + " >= class count " +
                               std::to_string(num_classes));
        }
        rows.push_back({Tensor::vector(std::move(x)), static_cast<std::size_t>(label)});
    }
    return rows;
}

LabeledDataset load_csv(const std::filesystem::path& path, std::size_t num_classes,
                        std::size_t feature_dim, const CsvOptions& options) {
    if (num_classes < 2 || feature_dim == 0) throw InvalidInput("invalid class count or width");
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());

    // The split key hashes the row text, so a row's side does not depend on file order.
    std::vector<std::string> texts;
    {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (options.header && line_no == 1) continue;
            if (trim(line).empty()) continue;
            texts.emplace_back(trim(line));
        }
    }
    auto rows = read_csv_rows(path, num_classes, feature_dim, options.header);

    LabeledDataset ds;
    ds.num_classes = num_classes;
    ds.feature_dim = feature_dim;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool to_test = Rng::derive(options.seed, texts[i]) % 5 == 0;
        (to_test ? ds.test : ds.train).push_back(std::move(rows[i]));
    }
    if (ds.train.empty()) throw InvalidInput(path.string() + " has no training rows");
    standardize(ds);
    return ds;
}

ForgetSplit forget_split(const LabeledDataset& dataset, std::size_t forget_class) {
    if (forget_class >= dataset.num_classes) {
        throw InvalidInput("forget class " + std::to_string(forget_class) + " out of range for " +
                           std::to_string(dataset.num_classes) + " classes");
    }
    ForgetSplit split;
    split.forget_class = forget_class;
    split.num_classes = dataset.num_classes;
    for (const auto& ex : dataset.train) {
        (ex.label == forget_class ? split.forget_train : split.remain_train).push_back(ex);
    }
    for (const auto& ex : dataset.test) {
        (ex.label == forget_class ? split.forget_test : split.remain_test).push_back(ex);
    }
    return split;
}

}  // namespace bu
