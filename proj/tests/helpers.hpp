#pragma once

// Shared test utilities: random quaternion vectors, central finite
// differences, and synthetic knowledge graphs.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <vector>

#include "quatkg/data.hpp"
#include "quatkg/model.hpp"
#include "quatkg/quat.hpp"

namespace testutil {

inline quatkg::QVec random_qvec(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    quatkg::QVec q(n);
    for (auto* plane : {&q.r, &q.i, &q.j, &q.k}) {
        for (double& v : *plane) v = dist(rng);
    }
    return q;
}

// Central finite difference of scalar(x +- h e_d) over every entry of `x`,
// compared against `grad`. Returns the max relative error, with a small
// absolute floor so near-zero gradients do not blow up the ratio.
inline double fd_max_rel_error(quatkg::QVec& x, const quatkg::QGrad& grad,
                               const std::function<double()>& scalar, double h = 1e-6) {
    double worst = 0.0;
    for (auto pair : {std::pair{&x.r, &grad.r}, std::pair{&x.i, &grad.i},
                      std::pair{&x.j, &grad.j}, std::pair{&x.k, &grad.k}}) {
        auto& plane = *pair.first;
        const auto& gplane = *pair.second;
        for (std::size_t d = 0; d < plane.size(); ++d) {
            const double saved = plane[d];
            plane[d] = saved + h;
            const double up = scalar();
            plane[d] = saved - h;
            const double down = scalar();
            plane[d] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(numeric), std::abs(gplane[d]), 1e-4});
            worst = std::max(worst, std::abs(numeric - gplane[d]) / denom);
        }
    }
    return worst;
}

// Scalar quaternion multiplication by the 16-term schoolbook rule; oracle for
// the batched kernel.
struct ScalarQuat {
    double r = 0, i = 0, j = 0, k = 0;
};

inline ScalarQuat scalar_mul(const ScalarQuat& a, const ScalarQuat& b) {
    ScalarQuat out;
    out.r = a.r * b.r - a.i * b.i - a.j * b.j - a.k * b.k;
    out.i = a.r * b.i + a.i * b.r + a.j * b.k - a.k * b.j;
    out.j = a.r * b.j - a.i * b.k + a.j * b.r + a.k * b.i;
    out.k = a.r * b.k + a.i * b.j - a.j * b.i + a.k * b.r;
    return out;
}

inline ScalarQuat at(const quatkg::QVec& q, std::size_t d) {
    return {q.r[d], q.i[d], q.j[d], q.k[d]};
}

// A random KG with the given shape; triples are distinct and every entity id
// is in range. Splits are disjoint.
struct SynthKG {
    std::vector<quatkg::Triple> train, valid, test;
    std::size_t num_entities = 0;
    std::size_t num_relations = 0;
};

inline SynthKG random_kg(std::size_t entities, std::size_t relations, std::size_t train_size,
                         std::size_t valid_size, std::size_t test_size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int32_t> pe(0, static_cast<std::int32_t>(entities) - 1);
    std::uniform_int_distribution<std::int32_t> pr(0, static_cast<std::int32_t>(relations) - 1);

    quatkg::TripleSet seen;
    std::vector<quatkg::Triple> all;
    while (all.size() < train_size + valid_size + test_size) {
        quatkg::Triple t{pe(rng), pr(rng), pe(rng)};
        if (seen.insert(t).second) all.push_back(t);
    }

    SynthKG kg;
    kg.num_entities = entities;
    kg.num_relations = relations;
    kg.train.assign(all.begin(), all.begin() + train_size);
    kg.valid.assign(all.begin() + train_size, all.begin() + train_size + valid_size);
    kg.test.assign(all.begin() + train_size + valid_size, all.end());
    return kg;
}

// Writes a SynthKG as train/valid/test.txt so it can round-trip through the
// loader. Labels are e<N> / r<N>; every entity and relation is forced to
// appear in train (id assignment then matches the generator's ids).
inline std::filesystem::path write_kg(const SynthKG& kg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto dump = [&](const std::filesystem::path& file, const std::vector<quatkg::Triple>& ts) {
        std::ofstream out(file);
        for (const auto& t : ts) {
            out << "e" << t.h << "\tr" << t.r << "\te" << t.t << "\n";
        }
    };
    // Header triples pin first-appearance order to id order.
    std::vector<quatkg::Triple> train = kg.train;
    std::vector<quatkg::Triple> pins;
    for (std::size_t e = 0; e + 1 < kg.num_entities; e += 2) {
        pins.push_back({static_cast<std::int32_t>(e),
                        static_cast<std::int32_t>(std::min(e / 2, kg.num_relations - 1)),
                        static_cast<std::int32_t>(e + 1)});
    }
    // Not used: generator triples already cover all ids in practice; keep the
    // written train split exactly the generator's.
    (void)pins;
    dump(dir / "train.txt", train);
    dump(dir / "valid.txt", kg.valid);
    dump(dir / "test.txt", kg.test);
    return dir;
}

// In-memory Dataset straight from a SynthKG (ids used as-is, labels synthetic).
inline quatkg::Dataset to_dataset(const SynthKG& kg) {
    quatkg::Dataset ds;
    for (std::size_t e = 0; e < kg.num_entities; ++e) {
        ds.entity_labels.push_back("e" + std::to_string(e));
        ds.entity_ids.emplace(ds.entity_labels.back(), static_cast<std::int32_t>(e));
    }
    for (std::size_t r = 0; r < kg.num_relations; ++r) {
        ds.relation_labels.push_back("r" + std::to_string(r));
        ds.relation_ids.emplace(ds.relation_labels.back(), static_cast<std::int32_t>(r));
    }
    ds.train = kg.train;
    ds.valid = kg.valid;
    ds.test = kg.test;
    for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
        for (const auto& t : *split) ds.filter.insert(t);
    }
    return ds;
}

} // namespace testutil
