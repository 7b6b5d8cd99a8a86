#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vistra/config.hpp"
#include "vistra/data.hpp"
#include "vistra/model.hpp"
#include "vistra/nn/network.hpp"

namespace vistra {

struct EpochRecord {
    int epoch = 0;      // contiguous from 0 within each phase
    std::string phase;  // "warm" | "main"
    MetricRecord metrics;  // "loss", each metric, and the "val_"-prefixed pair
    double seconds = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> records;

    bool empty() const { return records.empty(); }
    void append(const TrainingHistory& other) {
        records.insert(records.end(), other.records.begin(), other.records.end());
    }
    // Base metric names present in the records ("loss" first).
    std::vector<std::string> metric_names() const;
};

// Early-stopping patience from a fraction of total epochs. Fraction 0
// disables (returns `epochs`, which consecutive non-improvements can never
// reach); otherwise round half away from zero with a floor of 1.
int compute_patience(double fraction, int epochs);

// Tracks the best value of one monitored metric and keeps the weight
// snapshot that produced it (always in memory; also on disk as
// weights_best_<metric>_<epoch>.wts when file saving is on). Direction
// derives from the name: anything containing "loss" is minimized, the rest
// maximized. Improvement is strict.
class CheckpointStore {
public:
    CheckpointStore(std::string dir, std::string monitor, bool save_files);

    const std::string& monitor() const { return monitor_; }
    const std::string& direction() const { return direction_; }
    const std::string& dir() const { return dir_; }

    bool has_best() const { return best_epoch_ >= 0; }
    double best_value() const;
    int best_epoch() const { return best_epoch_; }
    const nn::WeightMap& best_weights() const;
    const std::string& best_file() const { return best_file_; }  // empty if not saved

    // True (and snapshots the weights) when `value` strictly improves.
    bool offer(int epoch, double value, nn::Network& net);
    void restore_best(nn::Network& net) const;

private:
    std::string dir_;
    std::string monitor_;
    std::string direction_;
    bool save_files_;
    double best_value_ = 0.0;
    int best_epoch_ = -1;
    nn::WeightMap best_weights_;
    std::string best_file_;
};

// Test seam: replaces the validation-split evaluation for an epoch. Returns
// unprefixed base-name records ("loss", "accuracy", ...).
using ValEvaluator = std::function<MetricRecord(BuiltModel& model, int epoch)>;

// Head-only warmup: the whole backbone is frozen for these epochs (the
// configured trainability mask is restored afterwards) and a fresh optimizer
// is used, so main training starts without stale state. No checkpointing or
// early stopping happens here.
TrainingHistory warm_pretrain(BuiltModel& model, DatasetBundle& data,
                              const ExperimentConfig& config, int epochs, std::uint64_t seed,
                              const std::vector<CallbackHook>& callbacks = {},
                              const ValEvaluator& val_override = {});

// Main training loop: seeded shuffling, optional class weighting, L2
// penalties, per-epoch callbacks in registration order, checkpointing on
// strict improvement of the monitored metric, and fractional early stopping.
TrainingHistory train(BuiltModel& model, DatasetBundle& data, const ExperimentConfig& config,
                      const std::vector<CallbackHook>& callbacks, CheckpointStore& store,
                      std::uint64_t seed, const ValEvaluator& val_override = {});

}  // namespace vistra
