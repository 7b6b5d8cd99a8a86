#include "support/synthetic_dataset.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "vistra/data.hpp"
#include "vistra/image_io.hpp"

namespace fs = std::filesystem;

namespace testsupport {

namespace {

// Dominant-channel color patches with mild per-pixel noise: linearly
// separable by channel means, so a tiny head learns them in a few epochs.
vistra::Image make_patch(int size, int dominant_channel, std::mt19937& rng) {
    std::uniform_real_distribution<float> base(170.0f, 230.0f);
    std::uniform_real_distribution<float> low(20.0f, 60.0f);
    std::normal_distribution<float> noise(0.0f, 12.0f);
    const float hi = base(rng);
    const float lo1 = low(rng), lo2 = low(rng);
    vistra::Image img;
    img.height = size;
    img.width = size;
    img.rgb.resize(static_cast<std::size_t>(size) * size * 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) {
                const float value = c == dominant_channel ? hi
                                    : c == (dominant_channel + 1) % 3 ? lo1
                                                                      : lo2;
                img.at(y, x, c) = std::clamp(value + noise(rng), 0.0f, 255.0f);
            }
    return img;
}

void write_class_folder(const fs::path& dir, const std::string& class_name, int channel,
                        int count, int size, std::mt19937& rng) {
    fs::create_directories(dir / class_name);
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%s_%03d.png", class_name.c_str(), i);
        const vistra::Image img = make_patch(size, channel, rng);
        if (!vistra::write_png((dir / class_name / name).string(), img))
            throw std::runtime_error("failed writing synthetic image " + std::string(name));
    }
}

}  // namespace

DatasetPaths make_synthetic_dataset(const DatasetSpec& spec) {
    if (spec.classes != 2 && spec.classes != 3)
        throw std::invalid_argument("synthetic dataset supports 2 or 3 classes");

    // channel order keeps class names sorted: blue(2), green(1), red(0)
    std::vector<std::pair<std::string, int>> classes = {{"blue", 2}, {"red", 0}};
    if (spec.classes == 3) classes = {{"blue", 2}, {"green", 1}, {"red", 0}};

    std::mt19937 rng(static_cast<std::uint32_t>(spec.seed));
    const fs::path root(spec.root);

    DatasetPaths paths;
    paths.train_val = (root / "train_val_data").string();
    paths.test = (root / "test_data").string();
    for (const auto& [name, channel] : classes) paths.class_names.push_back(name);

    for (const auto& [name, channel] : classes) {
        write_class_folder(root / "train_val_data" / "train", name, channel,
                           spec.train_per_class, spec.size, rng);
        write_class_folder(root / "train_val_data" / spec.val_dir_name, name, channel,
                           spec.val_per_class, spec.size, rng);
        write_class_folder(root / "test_data", name, channel, spec.test_per_class, spec.size,
                           rng);
        if (spec.external_test)
            write_class_folder(root / "external_test_data", name, channel,
                               spec.external_per_class, spec.size, rng);
    }
    if (spec.external_test) paths.external = (root / "external_test_data").string();
    return paths;
}

std::string unique_temp_dir(const std::string& tag) {
    static std::atomic<std::uint64_t> counter{0};
    std::random_device rd;
    const auto dir = fs::temp_directory_path() /
                     ("vistra_" + tag + "_" + std::to_string(rd()) + "_" +
                      std::to_string(++counter));
    fs::create_directories(dir);
    return dir.string();
}

void remove_tree(const std::string& path) {
    std::error_code ec;
    fs::remove_all(path, ec);
}

}  // namespace testsupport
