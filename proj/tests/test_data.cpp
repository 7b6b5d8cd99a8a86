#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "support/synthetic_dataset.hpp"
#include "vistra/data.hpp"
#include "vistra/error.hpp"
#include "vistra/image_io.hpp"

using namespace vistra;
namespace fs = std::filesystem;

namespace {

// Minimal dataset fixture shared by the discovery/bundle tests: tiny solid
// color patches split across the expected directory layout.
struct Fixture {
    std::string root;
    testsupport::DatasetPaths paths;

    explicit Fixture(int classes = 3, int train_per_class = 4,
                     const std::string& val_dir = "val", bool external = false) {
        root = testsupport::unique_temp_dir("data");
        testsupport::DatasetSpec spec;
        spec.root = root;
        spec.classes = classes;
        spec.train_per_class = train_per_class;
        spec.val_per_class = 2;
        spec.test_per_class = 2;
        spec.external_test = external;
        spec.external_per_class = 2;
        spec.size = 8;
        spec.val_dir_name = val_dir;
        paths = testsupport::make_synthetic_dataset(spec);
    }
    ~Fixture() { testsupport::remove_tree(root); }
};

}  // namespace

TEST_CASE("discover_splits maps the directory layout onto splits") {
    Fixture fx(3, 4);
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);

    CHECK(layout.class_names == std::vector<std::string>{"blue", "green", "red"});
    CHECK(layout.train_dir == fx.paths.train_val + "/train");
    CHECK(layout.val_dir == fx.paths.train_val + "/val");
    CHECK(layout.test_dir == fx.paths.test);
    CHECK_FALSE(layout.external_test_dir.has_value());

    CHECK(layout.per_split_counts.at("train").at("red") == 4);
    CHECK(layout.per_split_counts.at("val").at("blue") == 2);
    CHECK(layout.per_split_counts.at("test").at("green") == 2);
    CHECK(layout.per_split_counts.count("external_test") == 0);
}

TEST_CASE("discover_splits accepts 'validation' as the val directory name") {
    Fixture fx(2, 3, "validation");
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    CHECK(layout.val_dir == fx.paths.train_val + "/validation");
    CHECK(layout.class_names == std::vector<std::string>{"blue", "red"});
}

TEST_CASE("discover_splits picks up an external test folder") {
    Fixture fx(2, 3, "val", /*external=*/true);
    const SplitLayout layout =
        discover_splits(fx.paths.train_val, fx.paths.test, fx.paths.external);
    REQUIRE(layout.external_test_dir.has_value());
    CHECK(layout.per_split_counts.at("external_test").at("red") == 2);
}

TEST_CASE("discover_splits rejects broken layouts") {
    Fixture fx(2, 3);

    SUBCASE("missing train directory") {
        const std::string empty = testsupport::unique_temp_dir("noval");
        CHECK_THROWS_AS(discover_splits(empty, fx.paths.test), DataError);
        testsupport::remove_tree(empty);
    }
    SUBCASE("missing val directory") {
        fs::remove_all(fs::path(fx.paths.train_val) / "val");
        CHECK_THROWS_AS(discover_splits(fx.paths.train_val, fx.paths.test), DataError);
    }
    SUBCASE("class missing from val is named in the error") {
        fs::remove_all(fs::path(fx.paths.train_val) / "val" / "red");
        CHECK_THROWS_WITH_AS(discover_splits(fx.paths.train_val, fx.paths.test),
                             doctest::Contains("red"), DataError);
    }
    SUBCASE("novel class in test is rejected") {
        fs::create_directories(fs::path(fx.paths.test) / "yellow");
        std::ofstream(fs::path(fx.paths.test) / "yellow" / "y.png") << "x";
        CHECK_THROWS_WITH_AS(discover_splits(fx.paths.train_val, fx.paths.test),
                             doctest::Contains("yellow"), DataError);
    }
    SUBCASE("test may cover only a subset of classes") {
        fs::remove_all(fs::path(fx.paths.test) / "red");
        const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
        CHECK(layout.per_split_counts.at("test").count("red") == 0);
        CHECK(layout.per_split_counts.at("test").at("blue") == 2);
    }
    SUBCASE("empty class folder is an error") {
        for (const auto& e : fs::directory_iterator(fs::path(fx.paths.train_val) / "train" / "red"))
            fs::remove(e.path());
        CHECK_THROWS_WITH_AS(discover_splits(fx.paths.train_val, fx.paths.test),
                             doctest::Contains("red"), DataError);
    }
    SUBCASE("fewer than two classes is an error") {
        fs::remove_all(fs::path(fx.paths.train_val) / "train" / "red");
        fs::remove_all(fs::path(fx.paths.train_val) / "val" / "red");
        fs::remove_all(fs::path(fx.paths.test) / "red");
        CHECK_THROWS_AS(discover_splits(fx.paths.train_val, fx.paths.test), DataError);
    }
}

TEST_CASE("infer_task switches between binary and multiclass by class count") {
    Fixture two(2, 3);
    const TaskSpec binary = infer_task(discover_splits(two.paths.train_val, two.paths.test));
    CHECK(binary.num_classes == 2);
    CHECK(binary.mode == "binary");
    CHECK(binary.output_units == 1);
    CHECK(binary.output_activation == "sigmoid");
    CHECK(binary.loss_name == "binary_crossentropy");
    CHECK(binary.class_index.at("blue") == 0);
    CHECK(binary.class_index.at("red") == 1);

    Fixture three(3, 3);
    const TaskSpec multi = infer_task(discover_splits(three.paths.train_val, three.paths.test));
    CHECK(multi.num_classes == 3);
    CHECK(multi.mode == "multiclass");
    CHECK(multi.output_units == 3);
    CHECK(multi.output_activation == "softmax");
    CHECK(multi.loss_name == "categorical_crossentropy");
    CHECK(multi.class_index.at("green") == 1);
}

TEST_CASE("task_from_class_index rebuilds a task and validates the mapping") {
    const TaskSpec t = task_from_class_index({{"cat", 0}, {"dog", 1}, {"fox", 2}});
    CHECK(t.num_classes == 3);
    CHECK(t.mode == "multiclass");
    CHECK(t.class_index.at("dog") == 1);

    // Ids must form a contiguous 0..K-1 bijection.
    CHECK_THROWS_AS(task_from_class_index({{"cat", 0}, {"dog", 2}}), DataError);
    CHECK_THROWS_AS(task_from_class_index({{"cat", 0}}), DataError);
}

TEST_CASE("class weights are balanced: sum over classes of n_c * w_c equals N") {
    const std::map<std::string, std::int64_t> counts = {{"a", 10}, {"b", 30}, {"c", 60}};
    const auto w = compute_class_weights(counts);
    const double n = 100.0, k = 3.0;
    CHECK(w.at("a") == doctest::Approx(n / (k * 10)));
    CHECK(w.at("b") == doctest::Approx(n / (k * 30)));
    CHECK(w.at("c") == doctest::Approx(n / (k * 60)));

    double recovered = 0.0;
    for (const auto& [name, count] : counts) recovered += static_cast<double>(count) * w.at(name);
    CHECK(recovered == doctest::Approx(n).epsilon(1e-12));

    // Balanced datasets collapse to uniform weight 1.
    const auto uniform = compute_class_weights({{"a", 5}, {"b", 5}});
    CHECK(uniform.at("a") == doctest::Approx(1.0));
    CHECK(uniform.at("b") == doctest::Approx(1.0));

    CHECK_THROWS_AS(compute_class_weights({{"a", 0}, {"b", 5}}), DataError);
}

TEST_CASE("augmentation plans resolve by mode") {
    const AugmentationPlan none = resolve_augmentation("none", {});
    CHECK(none.mode == "none");
    CHECK(none.identity());

    const AugmentationPlan basic = resolve_augmentation("basic", {});
    CHECK(basic.mode == "basic");
    REQUIRE(basic.steps.size() == 2);
    CHECK(basic.steps[0].name == "horizontal_flip");
    CHECK(basic.steps[1].name == "affine_jitter");
    CHECK_FALSE(basic.identity());

    const AugmentationHook hook{"mark", [](Image& img, std::mt19937&) { img.at(0, 0, 0) = 7; }};
    const AugmentationPlan custom = resolve_augmentation("custom", {hook});
    CHECK(custom.steps.size() == 1);
    CHECK(custom.steps[0].name == "mark");

    CHECK_THROWS_AS(resolve_augmentation("custom", {}), ConfigError);
    CHECK_THROWS_WITH_AS(resolve_augmentation("mixup", {}), doctest::Contains("mixup"),
                         ConfigError);

    const auto params = basic_augmentation_params();
    CHECK(params.horizontal_flip_prob == 0.5);
    CHECK(params.rotation_degrees == 15.0);
    CHECK(params.shift_fraction == 0.10);
    CHECK(params.zoom_fraction == 0.10);
}

TEST_CASE("bundle indexes files lexicographically and batches by ceiling division") {
    Fixture fx(2, 5);
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    const TaskSpec task = infer_task(layout);
    DatasetBundle bundle = build_bundle(layout, task, {8, 8}, nullptr,
                                        resolve_augmentation("none", {}), 4, 42);

    CHECK(bundle.split_names() == std::vector<std::string>{"train", "val", "test"});
    CHECK(bundle.has_split("train"));
    CHECK_FALSE(bundle.has_split("external_test"));
    CHECK_THROWS_AS(bundle.split_index("external_test"), DataError);

    const auto& train = bundle.split_index("train");
    REQUIRE(train.size() == 10);  // 2 classes x 5
    CHECK(std::is_sorted(train.begin(), train.end(),
                         [](const auto& a, const auto& b) { return a.path < b.path; }));
    // blue files sort before red ones, and labels follow the class index.
    CHECK(train.front().path.find("blue") != std::string::npos);
    CHECK(train.front().label == 0);
    CHECK(train.back().path.find("red") != std::string::npos);
    CHECK(train.back().label == 1);

    // 10 rows at batch size 4 -> 4 + 4 + 2.
    const auto batches = bundle.batch_positions("train");
    REQUIRE(batches.size() == 3);
    CHECK(batches[0] == std::vector<int>{0, 1, 2, 3});
    CHECK(batches[2].size() == 2);

    // Shuffled batches cover the same positions in a different order.
    std::mt19937 rng(7);
    const auto shuffled = bundle.batch_positions("train", &rng);
    std::vector<int> flat, flat_shuffled;
    for (const auto& b : batches) flat.insert(flat.end(), b.begin(), b.end());
    for (const auto& b : shuffled) flat_shuffled.insert(flat_shuffled.end(), b.begin(), b.end());
    CHECK(flat != flat_shuffled);
    std::sort(flat_shuffled.begin(), flat_shuffled.end());
    CHECK(flat == flat_shuffled);

    // The same shuffle seed reproduces the same order.
    std::mt19937 rng2(7);
    CHECK(bundle.batch_positions("train", &rng2) == shuffled);
}

TEST_CASE("load_batch decodes, resizes, preprocesses, and encodes labels") {
    Fixture fx(3, 3);
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    const TaskSpec task = infer_task(layout);

    bool preprocess_ran = false;
    PreprocessFn preprocess = [&](Tensor& batch) {
        preprocess_ran = true;
        for (auto& v : batch.data) v /= 255.0f;
    };
    DatasetBundle bundle = build_bundle(layout, task, {16, 16}, preprocess,
                                        resolve_augmentation("none", {}), 4, 1);

    const Batch batch = bundle.load_batch("train", {0, 1, 2, 3}, false);
    CHECK(preprocess_ran);
    CHECK(batch.images.shape == std::vector<int>{4, 16, 16, 3});  // resized from 8x8
    CHECK(batch.labels.shape == std::vector<int>{4, 3});          // one-hot for 3 classes

    // Values passed through the preprocess hook land in [0,1].
    for (auto v : batch.images.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    // Rows 0..2 are 'blue' (label 0) in the lexicographic index: the blue
    // channel dominates and the one-hot rows point at class 0.
    for (int r = 0; r < 3; ++r) {
        CHECK(batch.labels[batch.labels.idx2(r, 0)] == 1.0f);
        const Tensor& im = batch.images;
        double red = 0, blue = 0;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                red += im[im.idx4(r, y, x, 0)];
                blue += im[im.idx4(r, y, x, 2)];
            }
        CHECK(blue > red);
    }

    CHECK_THROWS_AS(bundle.load_batch("train", {999}, false), DataError);
}

TEST_CASE("binary tasks encode labels as a flat 0/1 vector") {
    Fixture fx(2, 3);
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    const TaskSpec task = infer_task(layout);
    DatasetBundle bundle = build_bundle(layout, task, {8, 8}, nullptr,
                                        resolve_augmentation("none", {}), 4, 1);

    const Tensor flat = bundle.encode_labels({0, 1, 1, 0});
    CHECK(flat.shape == std::vector<int>{4});
    CHECK(flat.data == std::vector<float>{0, 1, 1, 0});

    const Batch batch = bundle.load_batch("val", {0, 1, 2, 3}, false);
    CHECK(batch.labels.shape == std::vector<int>{4});
}

TEST_CASE("one-hot encoding rejects out-of-range ids") {
    Fixture fx(3, 3);
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    const TaskSpec task = infer_task(layout);
    DatasetBundle bundle = build_bundle(layout, task, {8, 8}, nullptr,
                                        resolve_augmentation("none", {}), 4, 1);

    const Tensor onehot = bundle.encode_labels({2, 0});
    CHECK(onehot.shape == std::vector<int>{2, 3});
    CHECK(onehot.data == std::vector<float>{0, 0, 1, 1, 0, 0});
    CHECK_THROWS_AS(bundle.encode_labels({3}), DataError);
    CHECK_THROWS_AS(bundle.encode_labels({-1}), DataError);
}

TEST_CASE("augmented loads are deterministic given the rng state") {
    Fixture fx(2, 4);
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    const TaskSpec task = infer_task(layout);
    DatasetBundle bundle = build_bundle(layout, task, {8, 8}, nullptr,
                                        resolve_augmentation("basic", {}), 4, 9);

    std::mt19937 a(33), b(33), c(44);
    const Batch ba = bundle.load_batch("train", {0, 1, 2, 3}, true, &a);
    const Batch bb = bundle.load_batch("train", {0, 1, 2, 3}, true, &b);
    const Batch bc = bundle.load_batch("train", {0, 1, 2, 3}, true, &c);
    CHECK(ba.images.data == bb.images.data);
    CHECK(ba.images.data != bc.images.data);

    // And augmentation actually changes pixels relative to a plain load.
    const Batch plain = bundle.load_batch("train", {0, 1, 2, 3}, false);
    CHECK(ba.images.data != plain.images.data);
}

TEST_CASE("custom augmentation hooks run in registration order") {
    Fixture fx(2, 3);
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    const TaskSpec task = infer_task(layout);

    std::vector<std::string> ran;
    const std::vector<AugmentationHook> hooks = {
        {"first", [&](Image& img, std::mt19937&) { ran.push_back("first"); img.at(0, 0, 0) = 1; }},
        {"second", [&](Image& img, std::mt19937&) { ran.push_back("second"); img.at(0, 0, 1) = 2; }},
    };
    DatasetBundle bundle = build_bundle(layout, task, {8, 8}, nullptr,
                                        resolve_augmentation("custom", hooks), 2, 1);
    std::mt19937 rng(1);
    bundle.load_batch("train", {0, 1}, true, &rng);
    CHECK(ran == std::vector<std::string>{"first", "second", "first", "second"});
}

TEST_CASE("image extension filter is case-insensitive") {
    CHECK(has_image_extension("a.png"));
    CHECK(has_image_extension("b.JPG"));
    CHECK(has_image_extension("c.jpeg"));
    CHECK(has_image_extension("d.BMP"));
    CHECK_FALSE(has_image_extension("notes.txt"));
    CHECK_FALSE(has_image_extension("archive.png.zip"));
    CHECK_FALSE(has_image_extension("noextension"));
}

TEST_CASE("non-image files in class folders are ignored by discovery") {
    Fixture fx(2, 3);
    std::ofstream(fs::path(fx.paths.train_val) / "train" / "red" / "README.txt") << "notes";
    const SplitLayout layout = discover_splits(fx.paths.train_val, fx.paths.test);
    CHECK(layout.per_split_counts.at("train").at("red") == 3);
}
