#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bu/data.hpp"
#include "bu/error.hpp"
#include "bu/eval.hpp"
#include "support.hpp"

using namespace bu;

namespace {

Classifier constant_model(std::size_t in, std::size_t k, std::size_t cls) {
    std::vector<double> b(k, 0.0);
    b[cls] = 1.0;
    return Classifier({{Tensor::zeros({k, in}), Tensor::vector(b)}}, k);
}

Classifier identity(std::size_t k) {
    std::vector<double> w(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) w[i * k + i] = 1.0;
    return Classifier({{Tensor({k, k}, w), Tensor::zeros({k})}}, k);
}

std::vector<Example> one_hot_set(std::size_t k, std::size_t per_class, double scale) {
    std::vector<Example> xs;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> x(k, 0.0);
            x[c] = scale;
            xs.push_back({Tensor::vector(x), c});
        }
    }
    return xs;
}

const test::DeskRun& desk() {
    static const test::DeskRun run = test::desk_run(
        1, {Method::retrain, Method::finetune, Method::random_labels, Method::boundary_shrink,
            Method::boundary_expanding});
    return run;
}

}  // namespace

TEST_CASE("accuracy of a constant model on a balanced set is chance") {
    CHECK(accuracy(constant_model(10, 10, 0), one_hot_set(10, 5, 1.0)) == doctest::Approx(0.1));
    CHECK(accuracy(identity(10), one_hot_set(10, 5, 1.0)) == 1.0);
    CHECK_THROWS_AS(accuracy(identity(3), std::vector<Example>{}), InvalidInput);
}

TEST_CASE("output entropy extremes") {
    for (double h : output_entropy(Classifier({{Tensor::zeros({4, 4}), Tensor::zeros({4})}}, 4),
                                   one_hot_set(4, 2, 1.0))) {
        CHECK(h == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    }
    for (double h : output_entropy(identity(4), one_hot_set(4, 2, 60.0))) CHECK(h < 1e-20);
    CHECK_THROWS_AS(output_entropy(identity(3), std::vector<Example>{}), InvalidInput);
    CHECK(prediction_entropy(Tensor::vector({0, 0})) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("median of odd and even lists") {
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK_THROWS_AS(median({}), InvalidInput);
}

TEST_CASE("entropy attack separable extreme gives full success") {
    const std::vector<double> members(50, 1e-6), non_members(50, std::log(10.0)), probe(20, 1e-6);
    const MiaResult r = entropy_threshold_attack(members, non_members, probe);
    CHECK(r.asr == 1.0);
    CHECK(r.attack_balanced_accuracy == 1.0);
    CHECK_FALSE(r.degenerate);
}

TEST_CASE("entropy attack gives zero success when probes exceed the threshold") {
    std::vector<double> members, non_members;
    for (int i = 0; i < 50; ++i) {
        members.push_back(0.01 * i);
        non_members.push_back(1.0 + 0.01 * i);
    }
    const std::vector<double> probe(10, 2.0);
    const MiaResult r = entropy_threshold_attack(members, non_members, probe);
    CHECK(r.asr == 0.0);
    CHECK(r.threshold < 1.0);
}

TEST_CASE("entropy attack flags the all-equal case") {
    const std::vector<double> same(10, 0.5);
    const MiaResult r = entropy_threshold_attack(same, same, std::vector<double>{0.5, 0.6});
    CHECK(r.degenerate);
    CHECK(r.threshold == 0.5);
    CHECK(r.asr == 0.5);
}

TEST_CASE("decision region areas partition the raster") {
    const Bounds b{-1, 1, -1, 1};
    const auto c = decision_region_area(constant_model(2, 3, 2), b, 32);
    CHECK(c == std::vector<double>{0.0, 0.0, 1.0});

    Rng rng(4);
    const auto areas = decision_region_area(test::random_model({2, 8, 5}, rng), b, 97);
    CHECK(std::accumulate(areas.begin(), areas.end(), 0.0) == 1.0);

    const DecisionRaster r = decision_raster(identity(2), b, 4);
    CHECK(r.cells.size() == 16);
    CHECK(r.cells[0] == 1);   // top-left: x < 0, y > 0
    CHECK(r.cells[15] == 0);  // bottom-right: x > 0, y < 0
}

TEST_CASE("decision raster requires a 2D model") {
    CHECK_THROWS_AS(decision_region_area(identity(3), Bounds{-1, 1, -1, 1}, 8), InvalidInput);
}

TEST_CASE("default bounds inflate the bounding box") {
    const std::vector<Example> xs{{Tensor::vector({0, 0}), 0}, {Tensor::vector({10, 5}), 0}};
    const Bounds b = default_bounds(xs);
    CHECK(b.x_min == doctest::Approx(-1.0));
    CHECK(b.x_max == doctest::Approx(11.0));
    CHECK(b.y_min == doctest::Approx(-0.5));
    CHECK(b.y_max == doctest::Approx(5.5));
}

TEST_CASE("on_boundary for a symmetric two-class model") {
    const Classifier m({{Tensor({2, 2}, {1, 0, -1, 0}), Tensor::zeros({2})}}, 2);
    CHECK(on_boundary(m, Tensor::vector({0.0, 0.7}), 0, 1));
    CHECK_FALSE(on_boundary(m, Tensor::vector({3.0, 0.0}), 0, 1));
    CHECK_THROWS_AS(on_boundary(m, Tensor::vector({0, 0}), 1, 1), InvalidInput);
    CHECK_THROWS_AS(on_boundary(m, Tensor::vector({0, 0}), 0, 2), InvalidInput);
}

TEST_CASE("compare_methods reports unit self-speedup and rejects mixed architectures") {
    const auto ds = make_blobs(3, 20, 2, 0.1, 1);
    const auto split = forget_split(ds, 0);
    const std::vector<std::size_t> w{2, 4, 3}, w2{2, 5, 3};
    UnlearnResult ref{Classifier::initialize(w, 1), Method::retrain, 2.0, {}};
    UnlearnResult fast{Classifier::initialize(w, 2), Method::boundary_shrink, 0.5, {}};
    const auto rows = compare_methods(std::vector<UnlearnResult>{fast}, ref, split);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == Method::retrain);
    CHECK(rows[0].speedup == 1.0);
    CHECK(rows[1].speedup == 4.0);
    UnlearnResult other{Classifier::initialize(w2, 2), Method::finetune, 0.5, {}};
    CHECK_THROWS_AS(compare_methods(std::vector<UnlearnResult>{other}, ref, split), InvalidInput);
}

TEST_CASE("evaluate fills every split") {
    const auto& run = desk();
    EvalOptions o;
    o.raster_bounds = default_bounds(run.dataset.train);
    o.raster_resolution = 64;
    const EvalReport r = evaluate(run.original.model, run.split, o);
    CHECK(r.entropy_of(SplitName::forget_train).size() == run.split.forget_train.size());
    CHECK(r.entropy_of(SplitName::remain_test).size() == run.split.remain_test.size());
    CHECK(r.region_area.size() == 10);
    CHECK(to_string(SplitName::forget_test) == "D_ft");
}

TEST_CASE("desk scale: boundary shrink raises forgetting entropy and shrinks the region") {
    const auto& run = desk();
    const auto& s = run.split;
    const double base = median(output_entropy(run.original.model, s.forget_train));
    CHECK(median(output_entropy(run.result(Method::boundary_shrink).model, s.forget_train)) > base);
    CHECK(median(output_entropy(run.result(Method::boundary_expanding).model, s.forget_train)) > base);

    const Bounds b = default_bounds(run.dataset.train);
    const std::size_t t = run.cfg.forget_class;
    const double before = decision_region_area(run.original.model, b, 256)[t];
    const double after = decision_region_area(run.result(Method::boundary_shrink).model, b, 256)[t];
    CHECK(after <= 0.5 * before);
}

TEST_CASE("desk scale: membership inference orderings") {
    const auto& run = desk();
    const double orig = mia_asr(run.original.model, run.split);
    const double ref = mia_asr(run.result(Method::retrain).model, run.split);
    const double shrink = mia_asr(run.result(Method::boundary_shrink).model, run.split);
    const double ft = mia_asr(run.result(Method::finetune).model, run.split);
    CHECK(orig > ref);
    CHECK(std::abs(shrink - ref) < std::abs(orig - ref));
    CHECK(ft > shrink);
}
