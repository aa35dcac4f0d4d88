#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "addaforge/datasets.hpp"
#include "doctest.h"

using namespace addaforge;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "addaforge_dataset_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("synthetic generator geometry and determinism") {
    SyntheticSpec spec;
    spec.classes = 4;
    spec.dim = 3;
    spec.per_class = 5;
    spec.source_radius = 1.0;
    spec.target_radius = 2.0;
    spec.rotation_deg = 0.0;
    spec.noise_sigma = 0.0;
    spec.seed = 9;

    auto [source, target] = gen_two_domain(spec);
    CHECK(source.size() == 20);
    CHECK(target.size() == 20);
    CHECK(source.domain == Domain::Source);
    CHECK(target.domain == Domain::Target);

    // noise-free class means for K = 4, R = 1: (1,0), (0,1), (-1,0), (0,-1)
    const double expected[4][2] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t row = c * 5;
        CHECK(source.features.at(row, 0) == doctest::Approx(expected[c][0]).epsilon(1e-12));
        CHECK(source.features.at(row, 1) == doctest::Approx(expected[c][1]).epsilon(1e-12));
        CHECK(source.features.at(row, 2) == 0.0);  // padded dims carry only noise
        CHECK(source.labels[row] == static_cast<int>(c));
        // target radius doubles the mean
        CHECK(target.features.at(row, 0) == doctest::Approx(2.0 * expected[c][0]).epsilon(1e-12));
    }

    auto [source2, target2] = gen_two_domain(spec);
    CHECK(source.features.values == source2.features.values);
    CHECK(target.features.values == target2.features.values);

    // with noise on, the seed matters and the draw is still reproducible
    spec.noise_sigma = 0.1;
    auto [noisy_a, noisy_ta] = gen_two_domain(spec);
    auto [noisy_b, noisy_tb] = gen_two_domain(spec);
    CHECK(noisy_a.features.values == noisy_b.features.values);
    spec.seed = 10;
    auto [noisy_c, noisy_tc] = gen_two_domain(spec);
    CHECK(noisy_a.features.values != noisy_c.features.values);
    (void)noisy_ta; (void)noisy_tb; (void)noisy_tc;
}

TEST_CASE("swapping radii swaps the domain geometry") {
    SyntheticSpec contraction;
    contraction.classes = 3;
    contraction.noise_sigma = 0.0;
    contraction.rotation_deg = 0.0;
    contraction.source_radius = 3.0;
    contraction.target_radius = 6.0;
    contraction.per_class = 2;
    SyntheticSpec expansion = contraction;
    std::swap(expansion.source_radius, expansion.target_radius);

    auto [c_source, c_target] = gen_two_domain(contraction);
    auto [e_source, e_target] = gen_two_domain(expansion);
    for (std::size_t i = 0; i < c_source.size(); ++i) {
        CHECK(c_source.features.at(i, 0) == doctest::Approx(e_target.features.at(i, 0)).epsilon(1e-12));
        CHECK(c_target.features.at(i, 0) == doctest::Approx(e_source.features.at(i, 0)).epsilon(1e-12));
    }
}

TEST_CASE("synthetic generator rejects bad specs") {
    SyntheticSpec spec;
    spec.classes = 1;
    CHECK_THROWS_AS(gen_two_domain(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.dim = 1;
    CHECK_THROWS_AS(gen_two_domain(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.source_radius = -1.0;
    CHECK_THROWS_AS(gen_two_domain(spec), std::invalid_argument);
}

TEST_CASE("idx round trip reproduces the exact byte scaling") {
    const auto dir = temp_dir();
    const std::string img_path = (dir / "img.idx3").string();
    const std::string lab_path = (dir / "lab.idx1").string();

    LabeledSet set;
    set.features = Tensor({2, 3, 3});
    for (std::size_t i = 0; i < set.features.size(); ++i) {
        set.features.values[i] = static_cast<double>((i * 15) % 256) / 255.0;
    }
    set.labels = {7, 2};
    write_idx(img_path, lab_path, set);

    const LabeledSet loaded = load_idx(img_path, lab_path, Domain::Target);
    CHECK(loaded.features.shape == std::vector<std::size_t>{2, 3, 3});
    CHECK(loaded.features.values == set.features.values);
    CHECK(loaded.labels == set.labels);
    CHECK(loaded.domain == Domain::Target);
    CHECK(loaded.features.values[1] == 15.0 / 255.0);
}

TEST_CASE("idx loader raises distinct errors") {
    const auto dir = temp_dir();
    const std::string img_path = (dir / "e_img.idx3").string();
    const std::string lab_path = (dir / "e_lab.idx1").string();
    LabeledSet set;
    set.features = Tensor({2, 2, 2}, 0.5);
    set.labels = {0, 1};
    write_idx(img_path, lab_path, set);

    // labels file offered as images: magic error
    CHECK_THROWS_WITH_AS(load_idx(lab_path, lab_path), doctest::Contains("bad image magic"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(load_idx(img_path, img_path), doctest::Contains("bad label magic"),
                         std::runtime_error);

    // truncated payload
    const std::string trunc = (dir / "trunc.idx3").string();
    {
        std::ifstream in(img_path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(trunc, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
    }
    CHECK_THROWS_WITH_AS(load_idx(trunc, lab_path), doctest::Contains("truncated image payload"),
                         std::runtime_error);

    // count mismatch
    LabeledSet bigger;
    bigger.features = Tensor({3, 2, 2}, 0.5);
    bigger.labels = {0, 1, 0};
    const std::string img3 = (dir / "three.idx3").string();
    const std::string lab3 = (dir / "three.idx1").string();
    write_idx(img3, lab3, bigger);
    CHECK_THROWS_WITH_AS(load_idx(img3, lab_path), doctest::Contains("count mismatch"), std::runtime_error);

    CHECK_THROWS_WITH_AS(load_idx((dir / "missing.idx3").string(), lab_path),
                         doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("bilinear resize") {
    Tensor identity({1, 28, 28});
    for (std::size_t i = 0; i < identity.size(); ++i) identity.values[i] = static_cast<double>(i % 97);
    const Tensor same = resize_bilinear(identity, 28, 28);
    CHECK(same.values == identity.values);

    Tensor constant({2, 4, 4}, 0.25);
    const Tensor grown = resize_bilinear(constant, 9, 7);
    for (double v : grown.values) CHECK(v == doctest::Approx(0.25));

    // 2x2 columns 0 -> 1 interpolate linearly across 4 columns
    Tensor tiny({1, 2, 2}, {0.0, 1.0, 0.0, 1.0});
    const Tensor wide = resize_bilinear(tiny, 2, 4);
    CHECK(wide.at(0, 0) == doctest::Approx(0.0));
    CHECK(wide.at(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(wide.at(0, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(wide.at(0, 3) == doctest::Approx(1.0));

    CHECK_THROWS_AS(resize_bilinear(tiny, 1, 4), std::invalid_argument);
}

TEST_CASE("subsample without replacement") {
    LabeledSet set;
    set.features = Tensor({10, 2});
    for (std::size_t i = 0; i < 10; ++i) {
        set.features.at(i, 0) = static_cast<double>(i);
        set.labels.push_back(static_cast<int>(i));
    }
    const LabeledSet all = subsample(set, 10, 3);
    std::vector<int> sorted = all.labels;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});  // permutation of the set
    CHECK(all.labels != std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

    const LabeledSet a = subsample(set, 4, 5);
    const LabeledSet b = subsample(set, 4, 5);
    CHECK(a.labels == b.labels);
    CHECK(a.features.values == b.features.values);
    // rows keep their features attached to their labels
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.features.at(i, 0) == doctest::Approx(static_cast<double>(a.labels[i])));
    }
    CHECK(subsample(set, 4, 6).labels != a.labels);
    CHECK_THROWS_AS(subsample(set, 11, 1), std::invalid_argument);
}

TEST_CASE("csv export writes one row per example") {
    const auto dir = temp_dir();
    LabeledSet set;
    set.features = Tensor({3, 2}, {1.5, -0.25, 0.0, 2.0, 3.0, 4.0});
    set.labels = {2, 0, 1};
    const std::string path = (dir / "set.csv").string();
    export_csv(set, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "label,f0,f1");
    std::getline(in, line);
    CHECK(line == "2,1.5,-0.25");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);
}
