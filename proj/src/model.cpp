#include "quatkg/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace quatkg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void fill_uniform(QTable& table, std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (QVec& row : table.rows) {
        for (double& v : row.r) v = dist(rng);
        for (double& v : row.i) v = dist(rng);
        for (double& v : row.j) v = dist(rng);
        for (double& v : row.k) v = dist(rng);
    }
}

void fill_identity(QTable& table) {
    for (QVec& row : table.rows) {
        std::fill(row.r.begin(), row.r.end(), 1.0);
        std::fill(row.i.begin(), row.i.end(), 0.0);
        std::fill(row.j.begin(), row.j.end(), 0.0);
        std::fill(row.k.begin(), row.k.end(), 0.0);
    }
}

const QVec& entity_row(const ParamStore& p, std::int32_t id) {
    if (id < 0 || static_cast<std::size_t>(id) >= p.entity.rows.size()) {
        throw std::out_of_range("entity id out of range: " + std::to_string(id));
    }
    return p.entity.rows[static_cast<std::size_t>(id)];
}

const QVec& relation_row(const QTable& table, std::int32_t id) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows.size()) {
        throw std::out_of_range("relation id out of range: " + std::to_string(id));
    }
    return table.rows[static_cast<std::size_t>(id)];
}

bool uses_rot1(ScoreVariant v) { return v == ScoreVariant::QuatRE || v == ScoreVariant::OnlyRot1; }
bool uses_rot2(ScoreVariant v) { return v == ScoreVariant::QuatRE || v == ScoreVariant::OnlyRot2; }

} // namespace

ScoreVariant parse_variant(const std::string& name) {
    if (name == "quatre") return ScoreVariant::QuatRE;
    if (name == "quate") return ScoreVariant::QuatE;
    if (name == "rot1") return ScoreVariant::OnlyRot1;
    if (name == "rot2") return ScoreVariant::OnlyRot2;
    throw ConfigError("unknown variant: " + name + " (expected quatre|quate|rot1|rot2)");
}

const char* variant_name(ScoreVariant v) {
    switch (v) {
        case ScoreVariant::QuatRE: return "quatre";
        case ScoreVariant::QuatE: return "quate";
        case ScoreVariant::OnlyRot1: return "rot1";
        case ScoreVariant::OnlyRot2: return "rot2";
    }
    return "?";
}

ParamStore init_params(std::size_t num_entities, std::size_t num_relations, std::size_t dim,
                       std::uint64_t seed, const InitOptions& opts) {
    if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
    ParamStore p;
    p.dim = dim;
    p.entity = QTable(num_entities, dim);
    p.rel = QTable(num_relations, dim);
    p.rot1 = QTable(num_relations, dim);
    p.rot2 = QTable(num_relations, dim);
    p.acc_entity = QTable(num_entities, dim);
    p.acc_rel = QTable(num_relations, dim);
    p.acc_rot1 = QTable(num_relations, dim);
    p.acc_rot2 = QTable(num_relations, dim);

    const double scale = opts.scale > 0.0 ? opts.scale : 1.0 / std::sqrt(4.0 * static_cast<double>(dim));
    std::mt19937_64 rng(splitmix64(seed ^ 0x696e6974ULL)); // "init" stream
    fill_uniform(p.entity, rng, scale);
    fill_uniform(p.rel, rng, scale);
    if (opts.identity_rot) {
        fill_identity(p.rot1);
        fill_identity(p.rot2);
    } else {
        fill_uniform(p.rot1, rng, scale);
        fill_uniform(p.rot2, rng, scale);
    }
    return p;
}

std::size_t parameter_count(const ParamStore& params, ScoreVariant variant) {
    std::size_t count = params.entity.scalar_count() + params.rel.scalar_count();
    if (uses_rot1(variant)) count += params.rot1.scalar_count();
    if (uses_rot2(variant)) count += params.rot2.scalar_count();
    return count;
}

double score(const ParamStore& params, ScoreVariant variant, const Triple& triple) {
    const QVec& vh = entity_row(params, triple.h);
    const QVec& vt = entity_row(params, triple.t);
    const QVec nr = normalize(relation_row(params.rel, triple.r));

    QVec left = uses_rot1(variant)
                    ? hamilton(hamilton(vh, normalize(relation_row(params.rot1, triple.r))), nr)
                    : hamilton(vh, nr);
    if (uses_rot2(variant)) {
        return qinner(left, hamilton(vt, normalize(relation_row(params.rot2, triple.r))));
    }
    return qinner(left, vt);
}

std::vector<double> score_batch(const ParamStore& params, ScoreVariant variant, Side candidate_side,
                                const Triple& fixed) {
    const std::size_t num_entities = params.num_entities();
    std::vector<double> out(num_entities);

    const QVec nr = normalize(relation_row(params.rel, fixed.r));
    QVec n1, n2;
    if (uses_rot1(variant)) n1 = normalize(relation_row(params.rot1, fixed.r));
    if (uses_rot2(variant)) n2 = normalize(relation_row(params.rot2, fixed.r));

    if (candidate_side == Side::Tail) {
        // Left factor is fixed; each candidate costs one product (or none).
        const QVec& vh = entity_row(params, fixed.h);
        const QVec left = uses_rot1(variant) ? hamilton(hamilton(vh, n1), nr) : hamilton(vh, nr);
        for (std::size_t e = 0; e < num_entities; ++e) {
            const QVec& vt = params.entity.rows[e];
            out[e] = uses_rot2(variant) ? qinner(left, hamilton(vt, n2)) : qinner(left, vt);
        }
    } else {
        const QVec& vt = entity_row(params, fixed.t);
        const QVec right = uses_rot2(variant) ? hamilton(vt, n2) : vt;
        for (std::size_t e = 0; e < num_entities; ++e) {
            const QVec& vh = params.entity.rows[e];
            const QVec left = uses_rot1(variant) ? hamilton(hamilton(vh, n1), nr) : hamilton(vh, nr);
            out[e] = qinner(left, right);
        }
    }
    return out;
}

ScoreGrad score_backward(const ParamStore& params, ScoreVariant variant, const Triple& triple,
                         double upstream) {
    const QVec& vh = entity_row(params, triple.h);
    const QVec& vt = entity_row(params, triple.t);
    const QVec& vr = relation_row(params.rel, triple.r);
    const QVec nr = normalize(vr);

    ScoreGrad g;
    g.has_rot1 = uses_rot1(variant);
    g.has_rot2 = uses_rot2(variant);

    // Forward intermediates.
    QVec n1, n2, rotated_h, left, right;
    if (g.has_rot1) {
        n1 = normalize(relation_row(params.rot1, triple.r));
        rotated_h = hamilton(vh, n1);
        left = hamilton(rotated_h, nr);
    } else {
        left = hamilton(vh, nr);
    }
    if (g.has_rot2) {
        n2 = normalize(relation_row(params.rot2, triple.r));
        right = hamilton(vt, n2);
    } else {
        right = vt;
    }

    auto [g_left, g_right] = qinner_backward(left, right, upstream);

    if (g.has_rot2) {
        auto [gt, gn2] = hamilton_backward(vt, n2, g_right);
        g.tail = std::move(gt);
        g.rot2 = normalize_backward(relation_row(params.rot2, triple.r), gn2);
    } else {
        g.tail = std::move(g_right);
        g.rot2 = QGrad(params.dim);
    }

    if (g.has_rot1) {
        auto [g_rotated_h, gnr] = hamilton_backward(rotated_h, nr, g_left);
        auto [gh, gn1] = hamilton_backward(vh, n1, g_rotated_h);
        g.head = std::move(gh);
        g.rel = normalize_backward(vr, gnr);
        g.rot1 = normalize_backward(relation_row(params.rot1, triple.r), gn1);
    } else {
        auto [gh, gnr] = hamilton_backward(vh, nr, g_left);
        g.head = std::move(gh);
        g.rel = normalize_backward(vr, gnr);
        g.rot1 = QGrad(params.dim);
    }
    return g;
}

namespace {

void write_table(std::ofstream& out, const QTable& table, int width) {
    for (const QVec& row : table.rows) {
        for (const auto* plane : {&row.r, &row.i, &row.j, &row.k}) {
            if (width == 64) {
                out.write(reinterpret_cast<const char*>(plane->data()),
                          static_cast<std::streamsize>(plane->size() * sizeof(double)));
            } else {
                for (double v : *plane) {
                    const float f = static_cast<float>(v);
                    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
                }
            }
        }
    }
}

void read_table(std::ifstream& in, QTable& table, int width) {
    for (QVec& row : table.rows) {
        for (auto* plane : {&row.r, &row.i, &row.j, &row.k}) {
            if (width == 64) {
                in.read(reinterpret_cast<char*>(plane->data()),
                        static_cast<std::streamsize>(plane->size() * sizeof(double)));
            } else {
                for (double& v : *plane) {
                    float f = 0.0f;
                    in.read(reinterpret_cast<char*>(&f), sizeof(float));
                    v = static_cast<double>(f);
                }
            }
        }
    }
}

} // namespace

void save_checkpoint(const ParamStore& params, const std::filesystem::path& file, int float_width) {
    if (float_width != 32 && float_width != 64) {
        throw ConfigError("checkpoint float width must be 32 or 64");
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + file.string());
    out << "QUATRE\t1\t" << params.num_entities() << '\t' << params.num_relations() << '\t'
        << params.dim << '\t' << float_width << '\n';
    write_table(out, params.entity, float_width);
    write_table(out, params.rel, float_width);
    write_table(out, params.rot1, float_width);
    write_table(out, params.rot2, float_width);
    if (!out) throw IoError("write failed: " + file.string());
}

ParamStore load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + file.string());
    std::string header;
    if (!std::getline(in, header)) throw ParseError("checkpoint has no header: " + file.string());

    std::istringstream hs(header);
    std::string magic;
    int version = 0, width = 0;
    std::size_t num_entities = 0, num_relations = 0, dim = 0;
    hs >> magic >> version >> num_entities >> num_relations >> dim >> width;
    if (!hs || magic != "QUATRE" || version != 1 || (width != 32 && width != 64) || dim < 1) {
        throw ParseError("bad checkpoint header: " + header);
    }

    ParamStore p;
    p.dim = dim;
    p.entity = QTable(num_entities, dim);
    p.rel = QTable(num_relations, dim);
    p.rot1 = QTable(num_relations, dim);
    p.rot2 = QTable(num_relations, dim);
    p.acc_entity = QTable(num_entities, dim);
    p.acc_rel = QTable(num_relations, dim);
    p.acc_rot1 = QTable(num_relations, dim);
    p.acc_rot2 = QTable(num_relations, dim);
    read_table(in, p.entity, width);
    read_table(in, p.rel, width);
    read_table(in, p.rot1, width);
    read_table(in, p.rot2, width);
    if (!in) throw ParseError("checkpoint truncated: " + file.string());
    return p;
}

namespace {

void write_rows(std::ofstream& out, const QTable& table, const std::vector<std::string>& labels) {
    char buf[32];
    for (std::size_t row = 0; row < table.rows.size(); ++row) {
        out << (row < labels.size() ? labels[row] : std::to_string(row));
        const QVec& q = table.rows[row];
        for (const auto* plane : {&q.r, &q.i, &q.j, &q.k}) {
            for (double v : *plane) {
                std::snprintf(buf, sizeof(buf), " %.17g", v);
                out << buf;
            }
        }
        out << '\n';
    }
}

} // namespace

void export_embeddings_text(const ParamStore& params, const Dataset& ds,
                            const std::filesystem::path& file, const ExportOptions& opts) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write embedding export: " + file.string());
    write_rows(out, params.entity, ds.entity_labels);
    if (opts.relations) {
        out << "# relations v_r\n";
        write_rows(out, params.rel, ds.relation_labels);
        out << "# relations v_r1\n";
        write_rows(out, params.rot1, ds.relation_labels);
        out << "# relations v_r2\n";
        write_rows(out, params.rot2, ds.relation_labels);
    }
    if (!out) throw IoError("write failed: " + file.string());
}

} // namespace quatkg
