#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "quatkg/data.hpp"
#include "quatkg/quat.hpp"

namespace quatkg {

enum class ScoreVariant { QuatRE, QuatE, OnlyRot1, OnlyRot2 };

ScoreVariant parse_variant(const std::string& name);
const char* variant_name(ScoreVariant v);

struct QTable {
    std::size_t dim = 0;
    std::vector<QVec> rows;

    QTable() = default;
    QTable(std::size_t count, std::size_t n) : dim(n), rows(count, QVec(n)) {}

    std::size_t scalar_count() const { return rows.size() * 4 * dim; }
};

/// Entity embeddings v_h/v_t, relation embeddings v_r, and the two
/// relation-aware rotation tables, plus Adagrad accumulators of the same shape.
struct ParamStore {
    std::size_t dim = 0;
    QTable entity, rel, rot1, rot2;
    QTable acc_entity, acc_rel, acc_rot1, acc_rot2;

    std::size_t num_entities() const { return entity.rows.size(); }
    std::size_t num_relations() const { return rel.rows.size(); }
};

struct InitOptions {
    double scale = 0.0;       // <= 0 means the default 1/sqrt(4n)
    bool identity_rot = false; // start rot1/rot2 at the identity quaternion
};

ParamStore init_params(std::size_t num_entities, std::size_t num_relations, std::size_t dim,
                       std::uint64_t seed, const InitOptions& opts = {});

/// Trainable scalars read by the given variant.
std::size_t parameter_count(const ParamStore& params, ScoreVariant variant);

enum class Side { Head, Tail };

double score(const ParamStore& params, ScoreVariant variant, const Triple& triple);

/// Scores of (e, r, t) for all entities e (Side::Head) or (h, r, e) for all e
/// (Side::Tail). Bit-identical to per-entity `score` calls; the fixed side's
/// rotation is hoisted out of the loop.
std::vector<double> score_batch(const ParamStore& params, ScoreVariant variant, Side candidate_side,
                                const Triple& fixed);

/// Sparse gradient of one score: touches at most the five rows the variant reads.
struct ScoreGrad {
    QGrad head, tail, rel, rot1, rot2;
    bool has_rot1 = false;
    bool has_rot2 = false;
};

ScoreGrad score_backward(const ParamStore& params, ScoreVariant variant, const Triple& triple,
                         double upstream);

void save_checkpoint(const ParamStore& params, const std::filesystem::path& file, int float_width = 64);
ParamStore load_checkpoint(const std::filesystem::path& file);

struct ExportOptions {
    bool relations = false; // also export v_r, v_r1, v_r2 blocks
};

/// Text export for external embedding tools: one line per row, label then 4n
/// floats (r plane, then i, j, k).
void export_embeddings_text(const ParamStore& params, const Dataset& ds,
                            const std::filesystem::path& file, const ExportOptions& opts = {});

} // namespace quatkg
