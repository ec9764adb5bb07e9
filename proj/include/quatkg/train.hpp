#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "quatkg/data.hpp"
#include "quatkg/model.hpp"

namespace quatkg {

struct TrainConfig {
    double lr = 0.1;
    int negatives = 5; // s corrupted triples per positive
    std::size_t dim = 128;
    double lambda = 0.05;
    int batches_per_epoch = 100;
    int max_epochs = 400;
    int eval_every = 100; // validation Hits@10 monitor cadence, in epochs
    std::uint64_t seed = 7;
    bool filter_negatives = false; // rejection-resample corruptions found in train
    bool dense_l2 = false;         // regularize every row, not just touched ones
    bool identity_rot_init = false;
    double init_scale = 0.0; // <= 0 means 1/sqrt(4n)
    int checkpoint_float_width = 64;

    void validate() const;
};

struct LabeledTriple {
    Triple triple;
    int label = 1; // +1 for train triples, -1 for corruptions
};

std::vector<Triple> sample_negatives(const Triple& triple, int s, std::mt19937_64& rng,
                                     std::size_t num_entities, const Dataset* filter_against = nullptr);

struct RowKey {
    enum class Table : std::uint8_t { Entity, Rel, Rot1, Rot2 };
    Table table = Table::Entity;
    std::int32_t row = 0;

    auto operator<=>(const RowKey&) const = default;
};

/// Gradient rows touched by a batch. Ordered map so updates apply in a
/// deterministic order.
struct SparseGrad {
    std::map<RowKey, QGrad> rows;

    void add(RowKey key, const QGrad& g);
};

std::pair<double, SparseGrad> loss_and_grad(const ParamStore& params, ScoreVariant variant,
                                            std::span<const LabeledTriple> batch, double lambda,
                                            bool dense_l2 = false);

void adagrad_step(ParamStore& params, const SparseGrad& grads, double lr);

inline constexpr double kAdagradEps = 1e-10;

struct LogEntry {
    int epoch = 0;
    double mean_loss = 0.0;
    double valid_hits10 = 0.0;
    double valid_mrr = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    ParamStore best;
    std::vector<LogEntry> log;
    double best_hits10 = -1.0;
    int best_epoch = -1;
};

/// Epoch loop: shuffle, 100-batch partition, negative sampling, Adagrad, and
/// periodic filtered Hits@10 monitoring on the validation split (train split
/// when no validation triples exist). Returns the best-monitored checkpoint.
/// `log_stream`, when given, receives one JSON object per line (header first).
TrainResult train(const Dataset& ds, const TrainConfig& config, ScoreVariant variant,
                  std::ostream* log_stream = nullptr);

} // namespace quatkg
