#include "quatkg/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace quatkg {

namespace {

std::int32_t intern(std::unordered_map<std::string, std::int32_t>& ids,
                    std::vector<std::string>& labels, const std::string& label) {
    auto it = ids.find(label);
    if (it != ids.end()) return it->second;
    const auto id = static_cast<std::int32_t>(labels.size());
    ids.emplace(label, id);
    labels.push_back(label);
    return id;
}

void load_split(Dataset& ds, const std::filesystem::path& file, bool is_train,
                std::vector<Triple>& out) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open triple file: " + file.string());

    TripleSet seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto tab1 = line.find('\t');
        const auto tab2 = (tab1 == std::string::npos) ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw ParseError(file.string() + ":" + std::to_string(lineno) +
                             ": expected three TAB-separated fields");
        }
        const std::string h = line.substr(0, tab1);
        const std::string r = line.substr(tab1 + 1, tab2 - tab1 - 1);
        const std::string t = line.substr(tab2 + 1);
        if (h.empty() || r.empty() || t.empty()) {
            throw ParseError(file.string() + ":" + std::to_string(lineno) + ": empty field");
        }

        if (!is_train) {
            if (!ds.entity_ids.count(h)) ++ds.unseen_in_train;
            if (!ds.relation_ids.count(r)) ++ds.unseen_in_train;
            if (!ds.entity_ids.count(t)) ++ds.unseen_in_train;
        }
        Triple triple;
        triple.h = intern(ds.entity_ids, ds.entity_labels, h);
        triple.r = intern(ds.relation_ids, ds.relation_labels, r);
        triple.t = intern(ds.entity_ids, ds.entity_labels, t);

        if (!seen.insert(triple).second) {
            ++ds.duplicates_dropped;
            continue;
        }
        out.push_back(triple);
    }
}

} // namespace

const std::vector<Triple>& Dataset::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "valid") return valid;
    if (name == "test") return test;
    throw ConfigError("unknown split: " + name);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    load_split(ds, dir / "train.txt", true, ds.train);
    load_split(ds, dir / "valid.txt", false, ds.valid);
    load_split(ds, dir / "test.txt", false, ds.test);

    ds.filter.reserve(ds.train.size() + ds.valid.size() + ds.test.size());
    for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
        for (const Triple& t : *split) ds.filter.insert(t);
    }
    return ds;
}

const char* category_name(RelationCategory c) {
    switch (c) {
        case RelationCategory::OneToOne: return "1-1";
        case RelationCategory::OneToMany: return "1-M";
        case RelationCategory::ManyToOne: return "M-1";
        case RelationCategory::ManyToMany: return "M-M";
    }
    return "?";
}

std::vector<RelationStats> relation_cardinality(const Dataset& ds) {
    const std::size_t nr = ds.num_relations();
    std::vector<std::size_t> count(nr, 0);
    std::vector<std::unordered_set<std::int32_t>> heads(nr), tails(nr);
    for (const Triple& t : ds.train) {
        ++count[t.r];
        heads[t.r].insert(t.h);
        tails[t.r].insert(t.t);
    }

    std::vector<RelationStats> stats(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        stats[r].relation = static_cast<std::int32_t>(r);
        stats[r].train_triples = count[r];
        if (count[r] == 0) continue; // category undefined
        stats[r].defined = true;
        stats[r].eta_h = static_cast<double>(count[r]) / static_cast<double>(tails[r].size());
        stats[r].eta_t = static_cast<double>(count[r]) / static_cast<double>(heads[r].size());
        const bool many_h = stats[r].eta_h >= 1.5;
        const bool many_t = stats[r].eta_t >= 1.5;
        stats[r].category = many_h ? (many_t ? RelationCategory::ManyToMany : RelationCategory::ManyToOne)
                                   : (many_t ? RelationCategory::OneToMany : RelationCategory::OneToOne);
    }
    return stats;
}

void export_dictionaries(const Dataset& ds, const std::filesystem::path& dir) {
    const auto write = [&](const std::filesystem::path& file, const std::vector<std::string>& labels) {
        std::ofstream out(file);
        if (!out) throw IoError("cannot write dictionary: " + file.string());
        for (std::size_t id = 0; id < labels.size(); ++id) {
            out << id << '\t' << labels[id] << '\n';
        }
    };
    write(dir / "entities.tsv", ds.entity_labels);
    write(dir / "relations.tsv", ds.relation_labels);
}

std::vector<std::string> read_dictionary(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open dictionary: " + file.string());
    std::map<std::size_t, std::string> by_id;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(file.string() + ":" + std::to_string(lineno) + ": expected id<TAB>label");
        }
        by_id.emplace(std::stoull(line.substr(0, tab)), line.substr(tab + 1));
    }
    std::vector<std::string> labels;
    labels.reserve(by_id.size());
    for (const auto& [id, label] : by_id) {
        if (id != labels.size()) {
            throw ParseError(file.string() + ": ids are not dense at id " + std::to_string(id));
        }
        labels.push_back(label);
    }
    return labels;
}

} // namespace quatkg
