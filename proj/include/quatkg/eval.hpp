#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "quatkg/data.hpp"
#include "quatkg/model.hpp"

namespace quatkg {

/// How equal-scoring competitors count against the test triple.
/// Average is the default: a constant scorer earns MRR ~ 2/|E|, not 1.
enum class TieBreak { Average, Optimistic, Pessimistic, Random };

TieBreak parse_tiebreak(const std::string& name);
const char* tiebreak_name(TieBreak tb);

struct EvalOptions {
    TieBreak tie = TieBreak::Average;
    bool filtered = true;
    bool bruteforce = false; // per-candidate rescoring instead of the hoisted batch path
    int threads = 1;
};

std::int64_t rank(const ParamStore& params, ScoreVariant variant, const Triple& triple, Side side,
                  const Dataset& ds, const EvalOptions& opts = {});

/// Oracle path: scores every candidate with a separate single-triple call.
std::int64_t rank_bruteforce(const ParamStore& params, ScoreVariant variant, const Triple& triple,
                             Side side, const Dataset& ds, const EvalOptions& opts = {});

struct MetricBlock {
    std::size_t count = 0;
    double mr = 0.0;
    double mrr = 0.0;
    double hits1 = 0.0; // fractions in [0,1]; tables print them in %
    double hits3 = 0.0;
    double hits10 = 0.0;
};

MetricBlock metrics_from_ranks(const std::vector<std::int64_t>& ranks);

struct RankRecord {
    Triple triple;
    std::int64_t head_rank = 0;
    std::int64_t tail_rank = 0;
};

struct RelationRow {
    std::int32_t relation = 0;
    std::size_t count = 0; // ranks aggregated (both sides)
    double mrr = 0.0;
};

struct EvalReport {
    std::string split;
    MetricBlock combined, head, tail;
    std::vector<RankRecord> records;
    std::vector<RelationRow> per_relation;
};

EvalReport evaluate(const ParamStore& params, ScoreVariant variant, const Dataset& ds,
                    const std::string& split, const EvalOptions& opts = {});

struct CategoryCell {
    bool present = false;
    MetricBlock head, tail;
};

struct CategoryReport {
    std::array<CategoryCell, 4> cells; // indexed by RelationCategory
    CategoryCell undefined;            // relations absent from train
};

CategoryReport category_report(const EvalReport& report, const std::vector<RelationStats>& stats);

std::string report_table(const EvalReport& report);
std::string report_table(const CategoryReport& report);
std::string report_json(const EvalReport& report, const CategoryReport* categories = nullptr,
                        const std::vector<RelationStats>* stats = nullptr);

} // namespace quatkg
