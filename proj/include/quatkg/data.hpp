#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "quatkg/errors.hpp"

namespace quatkg {

struct Triple {
    std::int32_t h = 0;
    std::int32_t r = 0;
    std::int32_t t = 0;

    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& x) const {
        std::uint64_t v = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x.h)) << 42) ^
                          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x.r)) << 21) ^
                          static_cast<std::uint32_t>(x.t);
        v ^= v >> 33;
        v *= 0xff51afd7ed558ccdULL;
        v ^= v >> 33;
        return static_cast<std::size_t>(v);
    }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

/// Train/valid/test triples, label dictionaries, and the known-triple index
/// used for filtered ranking. Immutable after load.
struct Dataset {
    std::vector<std::string> entity_labels;
    std::vector<std::string> relation_labels;
    std::unordered_map<std::string, std::int32_t> entity_ids;
    std::unordered_map<std::string, std::int32_t> relation_ids;

    std::vector<Triple> train, valid, test;
    TripleSet filter; // train + valid + test

    std::size_t duplicates_dropped = 0;
    std::size_t unseen_in_train = 0; // entities/relations first seen outside train

    std::size_t num_entities() const { return entity_labels.size(); }
    std::size_t num_relations() const { return relation_labels.size(); }
    bool known(const Triple& t) const { return filter.count(t) != 0; }

    const std::vector<Triple>& split(const std::string& name) const;
};

Dataset load_dataset(const std::filesystem::path& dir);

enum class RelationCategory { OneToOne, OneToMany, ManyToOne, ManyToMany };

const char* category_name(RelationCategory c);

struct RelationStats {
    std::int32_t relation = 0;
    bool defined = false; // false when the relation never appears in train
    double eta_h = 0.0;   // train triples per distinct tail
    double eta_t = 0.0;   // train triples per distinct head
    RelationCategory category = RelationCategory::OneToOne;
    std::size_t train_triples = 0;
};

/// Per-relation head/tail multiplicities over the train split, categorized
/// against the 1.5 threshold.
std::vector<RelationStats> relation_cardinality(const Dataset& ds);

void export_dictionaries(const Dataset& ds, const std::filesystem::path& dir);

/// Reads an `id<TAB>label` file back into a label list (ids must be dense).
std::vector<std::string> read_dictionary(const std::filesystem::path& file);

} // namespace quatkg
