#include "quatkg/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "quatkg/eval.hpp"

namespace quatkg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double softplus(double x) {
    // log(1 + exp(x)) without overflow.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sumsq(const QVec& q) {
    double acc = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) {
        acc += q.r[d] * q.r[d] + q.i[d] * q.i[d] + q.j[d] * q.j[d] + q.k[d] * q.k[d];
    }
    return acc;
}

const QVec& param_row(const ParamStore& p, RowKey key) {
    switch (key.table) {
        case RowKey::Table::Entity: return p.entity.rows[static_cast<std::size_t>(key.row)];
        case RowKey::Table::Rel: return p.rel.rows[static_cast<std::size_t>(key.row)];
        case RowKey::Table::Rot1: return p.rot1.rows[static_cast<std::size_t>(key.row)];
        case RowKey::Table::Rot2: return p.rot2.rows[static_cast<std::size_t>(key.row)];
    }
    throw ShapeError("bad row key");
}

QVec& mutable_row(ParamStore& p, RowKey key, bool accumulator) {
    switch (key.table) {
        case RowKey::Table::Entity:
            return (accumulator ? p.acc_entity : p.entity).rows[static_cast<std::size_t>(key.row)];
        case RowKey::Table::Rel:
            return (accumulator ? p.acc_rel : p.rel).rows[static_cast<std::size_t>(key.row)];
        case RowKey::Table::Rot1:
            return (accumulator ? p.acc_rot1 : p.rot1).rows[static_cast<std::size_t>(key.row)];
        case RowKey::Table::Rot2:
            return (accumulator ? p.acc_rot2 : p.rot2).rows[static_cast<std::size_t>(key.row)];
    }
    throw ShapeError("bad row key");
}

} // namespace

void TrainConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (negatives < 1) throw ConfigError("negatives per positive must be >= 1");
    if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
    if (lambda < 0.0) throw ConfigError("regularization rate must be non-negative");
    if (batches_per_epoch < 1) throw ConfigError("batches per epoch must be >= 1");
    if (max_epochs < 0) throw ConfigError("max epochs must be >= 0");
    if (eval_every < 1) throw ConfigError("eval cadence must be >= 1");
    if (checkpoint_float_width != 32 && checkpoint_float_width != 64) {
        throw ConfigError("checkpoint float width must be 32 or 64");
    }
}

std::vector<Triple> sample_negatives(const Triple& triple, int s, std::mt19937_64& rng,
                                     std::size_t num_entities, const Dataset* filter_against) {
    if (num_entities < 2) throw ConfigError("cannot corrupt triples with fewer than 2 entities");
    std::uniform_int_distribution<std::int32_t> pick_entity(
        0, static_cast<std::int32_t>(num_entities) - 1);
    std::uniform_int_distribution<int> pick_side(0, 1);

    std::vector<Triple> out;
    out.reserve(static_cast<std::size_t>(s));
    for (int n = 0; n < s; ++n) {
        Triple neg = triple;
        for (int attempt = 0; attempt < 100; ++attempt) {
            neg = triple;
            const bool corrupt_head = pick_side(rng) == 0;
            std::int32_t& slot = corrupt_head ? neg.h : neg.t;
            const std::int32_t original = slot;
            do {
                slot = pick_entity(rng);
            } while (slot == original);
            if (!filter_against || !filter_against->known(neg)) break;
        }
        out.push_back(neg);
    }
    return out;
}

void SparseGrad::add(RowKey key, const QGrad& g) {
    auto it = rows.find(key);
    if (it == rows.end()) {
        rows.emplace(key, g);
    } else {
        axpy(it->second, g);
    }
}

std::pair<double, SparseGrad> loss_and_grad(const ParamStore& params, ScoreVariant variant,
                                            std::span<const LabeledTriple> batch, double lambda,
                                            bool dense_l2) {
    double loss = 0.0;
    SparseGrad grads;
    for (const LabeledTriple& lt : batch) {
        const double f = score(params, variant, lt.triple);
        if (!std::isfinite(f)) {
            throw NumericError("non-finite score for triple (" + std::to_string(lt.triple.h) + "," +
                               std::to_string(lt.triple.r) + "," + std::to_string(lt.triple.t) + ")");
        }
        const double l = static_cast<double>(lt.label);
        loss += softplus(-l * f);
        const double upstream = -l / (1.0 + std::exp(l * f)); // d softplus(-l f) / d f

        const ScoreGrad sg = score_backward(params, variant, lt.triple, upstream);
        grads.add({RowKey::Table::Entity, lt.triple.h}, sg.head);
        grads.add({RowKey::Table::Entity, lt.triple.t}, sg.tail);
        grads.add({RowKey::Table::Rel, lt.triple.r}, sg.rel);
        if (sg.has_rot1) grads.add({RowKey::Table::Rot1, lt.triple.r}, sg.rot1);
        if (sg.has_rot2) grads.add({RowKey::Table::Rot2, lt.triple.r}, sg.rot2);
    }

    if (lambda > 0.0) {
        if (dense_l2) {
            const auto add_table = [&](RowKey::Table table, const QTable& rows) {
                for (std::size_t row = 0; row < rows.rows.size(); ++row) {
                    grads.add({table, static_cast<std::int32_t>(row)}, QGrad(rows.dim));
                }
            };
            add_table(RowKey::Table::Entity, params.entity);
            add_table(RowKey::Table::Rel, params.rel);
            if (variant == ScoreVariant::QuatRE || variant == ScoreVariant::OnlyRot1) {
                add_table(RowKey::Table::Rot1, params.rot1);
            }
            if (variant == ScoreVariant::QuatRE || variant == ScoreVariant::OnlyRot2) {
                add_table(RowKey::Table::Rot2, params.rot2);
            }
        }
        for (auto& [key, g] : grads.rows) {
            const QVec& row = param_row(params, key);
            loss += lambda * sumsq(row);
            axpy(g, row, 2.0 * lambda);
        }
    }
    return {loss, grads};
}

void adagrad_step(ParamStore& params, const SparseGrad& grads, double lr) {
    for (const auto& [key, g] : grads.rows) {
        QVec& theta = mutable_row(params, key, false);
        QVec& acc = mutable_row(params, key, true);
        if (!theta.same_shape(g)) throw ShapeError("adagrad_step: gradient shape mismatch");
        const std::size_t n = theta.size();
        const auto update = [&](std::vector<double>& tv, std::vector<double>& av,
                                const std::vector<double>& gv) {
            for (std::size_t d = 0; d < n; ++d) {
                av[d] += gv[d] * gv[d];
                tv[d] -= lr * gv[d] / (std::sqrt(av[d]) + kAdagradEps);
            }
        };
        update(theta.r, acc.r, g.r);
        update(theta.i, acc.i, g.i);
        update(theta.j, acc.j, g.j);
        update(theta.k, acc.k, g.k);
    }
}

TrainResult train(const Dataset& ds, const TrainConfig& config, ScoreVariant variant,
                  std::ostream* log_stream) {
    config.validate();
    if (ds.train.empty()) throw ConfigError("train split is empty");

    if (log_stream) {
        nlohmann::json header = {{"type", "header"},
                                 {"variant", variant_name(variant)},
                                 {"lr", config.lr},
                                 {"negatives", config.negatives},
                                 {"dim", config.dim},
                                 {"lambda", config.lambda},
                                 {"batches_per_epoch", config.batches_per_epoch},
                                 {"max_epochs", config.max_epochs},
                                 {"eval_every", config.eval_every},
                                 {"seed", config.seed},
                                 {"entities", ds.num_entities()},
                                 {"relations", ds.num_relations()}};
        (*log_stream) << header.dump() << '\n';
    }

    InitOptions init_opts;
    init_opts.scale = config.init_scale;
    init_opts.identity_rot = config.identity_rot_init;
    ParamStore params =
        init_params(ds.num_entities(), ds.num_relations(), config.dim, config.seed, init_opts);

    TrainResult result;
    result.best = params;

    std::mt19937_64 shuffle_rng(splitmix64(config.seed ^ 0x73687566ULL)); // "shuf"
    std::mt19937_64 sample_rng(splitmix64(config.seed ^ 0x6e656773ULL));  // "negs"

    std::vector<Triple> order = ds.train;
    const std::size_t batch_size =
        (order.size() + static_cast<std::size_t>(config.batches_per_epoch) - 1) /
        static_cast<std::size_t>(config.batches_per_epoch);
    const Dataset* neg_filter = config.filter_negatives ? &ds : nullptr;
    const std::string monitor_split = ds.valid.empty() ? "train" : "valid";

    const auto start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t epoch_terms = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
            const std::size_t end = std::min(order.size(), begin + batch_size);
            std::vector<LabeledTriple> batch;
            batch.reserve((end - begin) * (1 + static_cast<std::size_t>(config.negatives)));
            for (std::size_t idx = begin; idx < end; ++idx) {
                batch.push_back({order[idx], +1});
                for (const Triple& neg : sample_negatives(order[idx], config.negatives, sample_rng,
                                                          ds.num_entities(), neg_filter)) {
                    batch.push_back({neg, -1});
                }
            }
            auto [loss, grads] = loss_and_grad(params, variant, batch, config.lambda, config.dense_l2);
            adagrad_step(params, grads, config.lr);
            epoch_loss += loss;
            epoch_terms += batch.size();
        }

        if (epoch % config.eval_every == 0 || epoch == config.max_epochs) {
            const EvalReport report = evaluate(params, variant, ds, monitor_split);
            LogEntry entry;
            entry.epoch = epoch;
            entry.mean_loss = epoch_loss / static_cast<double>(epoch_terms);
            entry.valid_hits10 = report.combined.hits10;
            entry.valid_mrr = report.combined.mrr;
            entry.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            result.log.push_back(entry);
            if (log_stream) {
                nlohmann::json line = {{"epoch", entry.epoch},
                                       {"mean_loss", entry.mean_loss},
                                       {"valid_hits10", entry.valid_hits10},
                                       {"valid_mrr", entry.valid_mrr},
                                       {"wall_seconds", entry.wall_seconds}};
                (*log_stream) << line.dump() << '\n';
            }
            if (entry.valid_hits10 > result.best_hits10) {
                result.best_hits10 = entry.valid_hits10;
                result.best_epoch = entry.epoch;
                result.best = params;
            }
        }
    }
    return result;
}

} // namespace quatkg
