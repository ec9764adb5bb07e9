#include "quatkg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace quatkg {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

// Deterministic per-(triple, side) stream for the Random tie convention; both
// the fast and brute-force paths must agree on it.
std::uint64_t tie_stream(const Triple& t, Side side) {
    std::uint64_t x = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.h)) << 40) ^
                      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.r)) << 20) ^
                      static_cast<std::uint32_t>(t.t);
    return mix64(x ^ (side == Side::Head ? 0x68ULL << 56 : 0x74ULL << 56));
}

std::int64_t rank_from_scores(const std::vector<double>& scores, const Triple& triple, Side side,
                              const Dataset& ds, const EvalOptions& opts) {
    const std::int32_t target = side == Side::Head ? triple.h : triple.t;
    const double target_score = scores[static_cast<std::size_t>(target)];

    std::int64_t greater = 0, equal = 0;
    const auto num_entities = static_cast<std::int32_t>(ds.num_entities());
    for (std::int32_t e = 0; e < num_entities; ++e) {
        if (e == target) continue;
        if (opts.filtered) {
            const Triple cand = side == Side::Head ? Triple{e, triple.r, triple.t}
                                                   : Triple{triple.h, triple.r, e};
            if (ds.known(cand)) continue;
        }
        const double s = scores[static_cast<std::size_t>(e)];
        if (s > target_score) ++greater;
        else if (s == target_score) ++equal;
    }

    switch (opts.tie) {
        case TieBreak::Optimistic: return 1 + greater;
        case TieBreak::Pessimistic: return 1 + greater + equal;
        case TieBreak::Average: return 1 + greater + equal / 2;
        case TieBreak::Random:
            return 1 + greater +
                   static_cast<std::int64_t>(tie_stream(triple, side) %
                                             static_cast<std::uint64_t>(equal + 1));
    }
    return 1 + greater;
}

} // namespace

TieBreak parse_tiebreak(const std::string& name) {
    if (name == "average") return TieBreak::Average;
    if (name == "optimistic") return TieBreak::Optimistic;
    if (name == "pessimistic") return TieBreak::Pessimistic;
    if (name == "random") return TieBreak::Random;
    throw ConfigError("unknown tie convention: " + name);
}

const char* tiebreak_name(TieBreak tb) {
    switch (tb) {
        case TieBreak::Average: return "average";
        case TieBreak::Optimistic: return "optimistic";
        case TieBreak::Pessimistic: return "pessimistic";
        case TieBreak::Random: return "random";
    }
    return "?";
}

std::int64_t rank(const ParamStore& params, ScoreVariant variant, const Triple& triple, Side side,
                  const Dataset& ds, const EvalOptions& opts) {
    if (opts.bruteforce) return rank_bruteforce(params, variant, triple, side, ds, opts);
    const std::vector<double> scores = score_batch(params, variant, side, triple);
    return rank_from_scores(scores, triple, side, ds, opts);
}

std::int64_t rank_bruteforce(const ParamStore& params, ScoreVariant variant, const Triple& triple,
                             Side side, const Dataset& ds, const EvalOptions& opts) {
    const auto num_entities = static_cast<std::int32_t>(ds.num_entities());
    std::vector<double> scores(static_cast<std::size_t>(num_entities));
    for (std::int32_t e = 0; e < num_entities; ++e) {
        const Triple cand = side == Side::Head ? Triple{e, triple.r, triple.t}
                                               : Triple{triple.h, triple.r, e};
        scores[static_cast<std::size_t>(e)] = score(params, variant, cand);
    }
    return rank_from_scores(scores, triple, side, ds, opts);
}

MetricBlock metrics_from_ranks(const std::vector<std::int64_t>& ranks) {
    MetricBlock m;
    m.count = ranks.size();
    if (ranks.empty()) return m;
    for (std::int64_t r : ranks) {
        m.mr += static_cast<double>(r);
        m.mrr += 1.0 / static_cast<double>(r);
        if (r <= 1) m.hits1 += 1.0;
        if (r <= 3) m.hits3 += 1.0;
        if (r <= 10) m.hits10 += 1.0;
    }
    const auto n = static_cast<double>(ranks.size());
    m.mr /= n;
    m.mrr /= n;
    m.hits1 /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    return m;
}

EvalReport evaluate(const ParamStore& params, ScoreVariant variant, const Dataset& ds,
                    const std::string& split, const EvalOptions& opts) {
    const std::vector<Triple>& triples = ds.split(split);

    EvalReport report;
    report.split = split;
    report.records.resize(triples.size());

    const int threads = std::max(1, opts.threads);
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const Triple& t = triples[idx];
            report.records[idx].triple = t;
            report.records[idx].head_rank = rank(params, variant, t, Side::Head, ds, opts);
            report.records[idx].tail_rank = rank(params, variant, t, Side::Tail, ds, opts);
        }
    };
    if (threads == 1 || triples.size() < 2) {
        worker(0, triples.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (triples.size() + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            const std::size_t begin = std::min(triples.size(), static_cast<std::size_t>(w) * chunk);
            const std::size_t end = std::min(triples.size(), begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    std::vector<std::int64_t> head_ranks, tail_ranks, all_ranks;
    head_ranks.reserve(triples.size());
    tail_ranks.reserve(triples.size());
    all_ranks.reserve(2 * triples.size());
    for (const RankRecord& rec : report.records) {
        head_ranks.push_back(rec.head_rank);
        tail_ranks.push_back(rec.tail_rank);
        all_ranks.push_back(rec.head_rank);
        all_ranks.push_back(rec.tail_rank);
    }
    report.head = metrics_from_ranks(head_ranks);
    report.tail = metrics_from_ranks(tail_ranks);
    report.combined = metrics_from_ranks(all_ranks);

    // Per-relation MRR, both prediction sides pooled.
    std::vector<double> rr_sum(ds.num_relations(), 0.0);
    std::vector<std::size_t> rr_count(ds.num_relations(), 0);
    for (const RankRecord& rec : report.records) {
        const auto r = static_cast<std::size_t>(rec.triple.r);
        rr_sum[r] += 1.0 / static_cast<double>(rec.head_rank) +
                     1.0 / static_cast<double>(rec.tail_rank);
        rr_count[r] += 2;
    }
    for (std::size_t r = 0; r < ds.num_relations(); ++r) {
        if (rr_count[r] == 0) continue;
        report.per_relation.push_back(
            {static_cast<std::int32_t>(r), rr_count[r], rr_sum[r] / static_cast<double>(rr_count[r])});
    }
    return report;
}

CategoryReport category_report(const EvalReport& report, const std::vector<RelationStats>& stats) {
    CategoryReport out;
    std::array<std::vector<std::int64_t>, 4> head_ranks, tail_ranks;
    std::vector<std::int64_t> undef_head, undef_tail;

    for (const RankRecord& rec : report.records) {
        const auto r = static_cast<std::size_t>(rec.triple.r);
        if (r >= stats.size() || !stats[r].defined) {
            undef_head.push_back(rec.head_rank);
            undef_tail.push_back(rec.tail_rank);
            continue;
        }
        const auto c = static_cast<std::size_t>(stats[r].category);
        head_ranks[c].push_back(rec.head_rank);
        tail_ranks[c].push_back(rec.tail_rank);
    }
    for (std::size_t c = 0; c < 4; ++c) {
        out.cells[c].present = !head_ranks[c].empty();
        out.cells[c].head = metrics_from_ranks(head_ranks[c]);
        out.cells[c].tail = metrics_from_ranks(tail_ranks[c]);
    }
    out.undefined.present = !undef_head.empty();
    out.undefined.head = metrics_from_ranks(undef_head);
    out.undefined.tail = metrics_from_ranks(undef_tail);
    return out;
}

namespace {

void table_row(std::ostream& os, const std::string& name, const MetricBlock& m) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %9.1f %7.3f %6.1f %6.1f %6.1f\n", name.c_str(), m.mr,
                  m.mrr, 100.0 * m.hits10, 100.0 * m.hits3, 100.0 * m.hits1);
    os << buf;
}

nlohmann::json json_block(const MetricBlock& m) {
    return {{"count", m.count}, {"mr", m.mr},          {"mrr", m.mrr},
            {"hits1", m.hits1}, {"hits3", m.hits3},    {"hits10", m.hits10}};
}

} // namespace

std::string report_table(const EvalReport& report) {
    std::ostringstream os;
    os << "split: " << report.split << "  (" << report.records.size() << " triples)\n";
    os << "                  MR     MRR   H@10    H@3    H@1\n";
    table_row(os, "combined", report.combined);
    table_row(os, "head", report.head);
    table_row(os, "tail", report.tail);
    if (!report.per_relation.empty()) {
        os << "per-relation MRR:\n";
        for (const RelationRow& row : report.per_relation) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "  relation %-6d %7.3f  (%zu ranks)\n", row.relation,
                          row.mrr, row.count);
            os << buf;
        }
    }
    return os.str();
}

std::string report_table(const CategoryReport& report) {
    std::ostringstream os;
    os << "category   side       MRR   H@10\n";
    for (std::size_t c = 0; c < 4; ++c) {
        const auto name = category_name(static_cast<RelationCategory>(c));
        if (!report.cells[c].present) {
            os << name << "        (absent)\n";
            continue;
        }
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-10s head   %7.3f %6.1f\n", name,
                      report.cells[c].head.mrr, 100.0 * report.cells[c].head.hits10);
        os << buf;
        std::snprintf(buf, sizeof(buf), "%-10s tail   %7.3f %6.1f\n", name,
                      report.cells[c].tail.mrr, 100.0 * report.cells[c].tail.hits10);
        os << buf;
    }
    if (report.undefined.present) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-10s head   %7.3f %6.1f\n", "undefined",
                      report.undefined.head.mrr, 100.0 * report.undefined.head.hits10);
        os << buf;
        std::snprintf(buf, sizeof(buf), "%-10s tail   %7.3f %6.1f\n", "undefined",
                      report.undefined.tail.mrr, 100.0 * report.undefined.tail.hits10);
        os << buf;
    }
    return os.str();
}

std::string report_json(const EvalReport& report, const CategoryReport* categories,
                        const std::vector<RelationStats>* stats) {
    nlohmann::json j;
    j["split"] = report.split;
    j["num_triples"] = report.records.size();
    j["combined"] = json_block(report.combined);
    j["head"] = json_block(report.head);
    j["tail"] = json_block(report.tail);

    nlohmann::json rel = nlohmann::json::array();
    for (const RelationRow& row : report.per_relation) {
        rel.push_back({{"relation", row.relation}, {"mrr", row.mrr}, {"ranks", row.count}});
    }
    j["per_relation"] = rel;

    if (categories) {
        nlohmann::json cats;
        for (std::size_t c = 0; c < 4; ++c) {
            const auto name = category_name(static_cast<RelationCategory>(c));
            if (!categories->cells[c].present) {
                cats[name] = nullptr;
                continue;
            }
            cats[name] = {{"head", json_block(categories->cells[c].head)},
                          {"tail", json_block(categories->cells[c].tail)}};
        }
        if (categories->undefined.present) {
            cats["undefined"] = {{"head", json_block(categories->undefined.head)},
                                 {"tail", json_block(categories->undefined.tail)}};
        }
        j["per_category"] = cats;
    }
    if (stats) {
        nlohmann::json st = nlohmann::json::array();
        for (const RelationStats& s : *stats) {
            nlohmann::json row = {{"relation", s.relation}, {"train_triples", s.train_triples}};
            if (s.defined) {
                row["eta_h"] = s.eta_h;
                row["eta_t"] = s.eta_t;
                row["category"] = category_name(s.category);
            } else {
                row["category"] = nullptr;
            }
            st.push_back(row);
        }
        j["relation_stats"] = st;
    }
    return j.dump(2);
}

} // namespace quatkg
