#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quatkg/data.hpp"
#include "quatkg/eval.hpp"
#include "quatkg/model.hpp"
#include "quatkg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace quatkg;

namespace {

// Exit codes: 0 ok, 2 usage/config, 3 I/O, 4 numeric.
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

int env_threads() {
    if (const char* v = std::getenv("QUATKG_THREADS")) {
        const int n = std::atoi(v);
        if (n >= 1) return n;
    }
    return 1;
}

json config_json(const TrainConfig& c) {
    return {{"lr", c.lr},
            {"negatives", c.negatives},
            {"dim", c.dim},
            {"lambda", c.lambda},
            {"batches_per_epoch", c.batches_per_epoch},
            {"max_epochs", c.max_epochs},
            {"eval_every", c.eval_every},
            {"seed", c.seed},
            {"filter_negatives", c.filter_negatives},
            {"dense_l2", c.dense_l2},
            {"init_rot", c.identity_rot_init ? "identity" : "uniform"},
            {"float_width", c.checkpoint_float_width}};
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write: " + file.string());
    out << text;
}

struct TrainRun {
    TrainConfig config;
    std::string variant_flag = "quatre";
    std::string data_dir;
    std::string out_dir = ".";
    std::string tag; // subdirectory / file prefix for grid cells
};

json run_training(const TrainRun& run) {
    const ScoreVariant variant = parse_variant(run.variant_flag);
    const Dataset ds = load_dataset(run.data_dir);

    fs::path out_dir = run.out_dir;
    if (!run.tag.empty()) out_dir /= run.tag;
    fs::create_directories(out_dir);

    const fs::path log_path = out_dir / "train_log.jsonl";
    std::ofstream log_stream(log_path);
    if (!log_stream) throw IoError("cannot write: " + log_path.string());

    const TrainResult result = train(ds, run.config, variant, &log_stream);

    const fs::path ckpt_path = out_dir / "model.ckpt";
    save_checkpoint(result.best, ckpt_path, run.config.checkpoint_float_width);

    json manifest = {{"dataset", fs::absolute(run.data_dir).string()},
                     {"variant", variant_name(variant)},
                     {"seed", run.config.seed},
                     {"config", config_json(run.config)},
                     {"checkpoint", fs::absolute(ckpt_path).string()},
                     {"log", fs::absolute(log_path).string()},
                     {"parameter_count", parameter_count(result.best, variant)},
                     {"best_epoch", result.best_epoch},
                     {"best_valid_hits10", result.best_hits10}};
    if (!result.log.empty()) {
        manifest["final_mean_loss"] = result.log.back().mean_loss;
        manifest["final_valid_mrr"] = result.log.back().valid_mrr;
    }
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"QuatRE quaternion knowledge-graph embeddings"};
    app.require_subcommand(1);

    TrainRun run;
    auto* cmd_train = app.add_subcommand("train", "train a model and write checkpoint + log");
    cmd_train->add_option("--data", run.data_dir, "dataset directory (train/valid/test.txt)")
        ->required();
    cmd_train->add_option("--variant", run.variant_flag, "quatre|quate|rot1|rot2");
    cmd_train->add_option("--dim", run.config.dim, "embedding dimension n");
    cmd_train->add_option("--lr", run.config.lr, "Adagrad learning rate");
    cmd_train->add_option("--neg", run.config.negatives, "negatives per positive");
    cmd_train->add_option("--lambda", run.config.lambda, "L2 regularization rate");
    cmd_train->add_option("--batches", run.config.batches_per_epoch, "batches per epoch");
    cmd_train->add_option("--epochs", run.config.max_epochs, "max epochs");
    cmd_train->add_option("--eval-every", run.config.eval_every, "validation monitor cadence");
    cmd_train->add_option("--seed", run.config.seed, "master RNG seed");
    cmd_train->add_flag("--filter-negatives", run.config.filter_negatives,
                        "resample corruptions that hit known triples");
    cmd_train->add_flag("--dense-l2", run.config.dense_l2, "regularize all rows every step");
    std::string init_rot = "uniform";
    cmd_train->add_option("--init-rot", init_rot, "uniform|identity rotation init");
    cmd_train->add_option("--float-width", run.config.checkpoint_float_width,
                          "checkpoint storage width (32|64)");
    cmd_train->add_option("--out", run.out_dir, "output directory");

    std::string eval_ckpt, eval_data, eval_split = "test", eval_variant = "quatre",
                eval_tie = "average", eval_out = ".";
    bool eval_bruteforce = false;
    auto* cmd_eval = app.add_subcommand("eval", "filtered link-prediction evaluation");
    cmd_eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    cmd_eval->add_option("--data", eval_data, "dataset directory")->required();
    cmd_eval->add_option("--split", eval_split, "train|valid|test");
    cmd_eval->add_option("--variant", eval_variant, "quatre|quate|rot1|rot2");
    cmd_eval->add_option("--tie", eval_tie, "average|optimistic|pessimistic|random");
    cmd_eval->add_flag("--bruteforce", eval_bruteforce, "per-candidate rescoring oracle path");
    cmd_eval->add_option("--out", eval_out, "output directory");

    std::string an_data, an_out = ".";
    std::string an_ckpt, an_variant = "quatre", an_split = "test";
    auto* cmd_analyze = app.add_subcommand("analyze", "relation cardinality and category report");
    cmd_analyze->add_option("--data", an_data, "dataset directory")->required();
    cmd_analyze->add_option("--checkpoint", an_ckpt,
                            "optional checkpoint for per-category metrics");
    cmd_analyze->add_option("--variant", an_variant, "quatre|quate|rot1|rot2");
    cmd_analyze->add_option("--split", an_split, "split for per-category metrics");
    cmd_analyze->add_option("--out", an_out, "output directory");

    std::string ex_ckpt, ex_data, ex_out = "embeddings.txt";
    bool ex_relations = false;
    auto* cmd_export = app.add_subcommand("export", "text embedding export for external tools");
    cmd_export->add_option("--checkpoint", ex_ckpt, "model checkpoint")->required();
    cmd_export->add_option("--data", ex_data, "dataset directory (for labels)")->required();
    cmd_export->add_option("--out", ex_out, "output file");
    cmd_export->add_flag("--relations", ex_relations, "also export v_r, v_r1, v_r2 blocks");

    TrainRun grid;
    std::vector<double> grid_lr = {0.02, 0.05, 0.1};
    std::vector<int> grid_neg = {1, 5, 10};
    std::vector<std::size_t> grid_dim = {128, 256, 384};
    std::vector<double> grid_lambda = {0.05, 0.1, 0.2, 0.5};
    auto* cmd_grid = app.add_subcommand("grid", "grid search over lr/neg/dim/lambda");
    cmd_grid->add_option("--data", grid.data_dir, "dataset directory")->required();
    cmd_grid->add_option("--variant", grid.variant_flag, "quatre|quate|rot1|rot2");
    cmd_grid->add_option("--lr", grid_lr, "learning rates to try");
    cmd_grid->add_option("--neg", grid_neg, "negative counts to try");
    cmd_grid->add_option("--dim", grid_dim, "dimensions to try");
    cmd_grid->add_option("--lambda", grid_lambda, "regularization rates to try");
    cmd_grid->add_option("--epochs", grid.config.max_epochs, "max epochs per cell");
    cmd_grid->add_option("--eval-every", grid.config.eval_every, "monitor cadence");
    cmd_grid->add_option("--batches", grid.config.batches_per_epoch, "batches per epoch");
    cmd_grid->add_option("--seed", grid.config.seed, "master RNG seed");
    cmd_grid->add_option("--out", grid.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_train) {
            if (init_rot == "identity") run.config.identity_rot_init = true;
            else if (init_rot != "uniform") throw ConfigError("--init-rot must be uniform|identity");
            const json manifest = run_training(run);
            std::cout << manifest.dump(2) << '\n';
        } else if (*cmd_eval) {
            const ScoreVariant variant = parse_variant(eval_variant);
            const Dataset ds = load_dataset(eval_data);
            const ParamStore params = load_checkpoint(eval_ckpt);
            if (params.num_entities() != ds.num_entities() ||
                params.num_relations() != ds.num_relations()) {
                throw ConfigError("checkpoint shape (" + std::to_string(params.num_entities()) +
                                  " entities, " + std::to_string(params.num_relations()) +
                                  " relations) does not match dataset (" +
                                  std::to_string(ds.num_entities()) + ", " +
                                  std::to_string(ds.num_relations()) + ")");
            }
            EvalOptions opts;
            opts.tie = parse_tiebreak(eval_tie);
            opts.bruteforce = eval_bruteforce;
            opts.threads = env_threads();
            const EvalReport report = evaluate(params, variant, ds, eval_split, opts);
            const auto stats = relation_cardinality(ds);
            const CategoryReport cats = category_report(report, stats);

            fs::create_directories(eval_out);
            const std::string table = report_table(report) + report_table(cats);
            write_text(fs::path(eval_out) / ("eval_" + eval_split + ".txt"), table);
            write_text(fs::path(eval_out) / ("eval_" + eval_split + ".json"),
                       report_json(report, &cats, &stats) + "\n");
            std::cout << table;
        } else if (*cmd_analyze) {
            const Dataset ds = load_dataset(an_data);
            const auto stats = relation_cardinality(ds);

            json j;
            std::string table = "relation  triples  eta_h  eta_t  category\n";
            json rows = json::array();
            for (const RelationStats& s : stats) {
                char buf[256];
                if (s.defined) {
                    std::snprintf(buf, sizeof(buf), "%-8d %8zu %6.2f %6.2f  %s  %s\n", s.relation,
                                  s.train_triples, s.eta_h, s.eta_t, category_name(s.category),
                                  ds.relation_labels[static_cast<std::size_t>(s.relation)].c_str());
                    rows.push_back({{"relation", s.relation},
                                    {"label", ds.relation_labels[static_cast<std::size_t>(s.relation)]},
                                    {"train_triples", s.train_triples},
                                    {"eta_h", s.eta_h},
                                    {"eta_t", s.eta_t},
                                    {"category", category_name(s.category)}});
                } else {
                    std::snprintf(buf, sizeof(buf), "%-8d %8zu      -      -  undefined  %s\n",
                                  s.relation, s.train_triples,
                                  ds.relation_labels[static_cast<std::size_t>(s.relation)].c_str());
                    rows.push_back({{"relation", s.relation},
                                    {"label", ds.relation_labels[static_cast<std::size_t>(s.relation)]},
                                    {"train_triples", s.train_triples},
                                    {"category", nullptr}});
                }
                table += buf;
            }
            j["relations"] = rows;

            if (!an_ckpt.empty()) {
                const ScoreVariant variant = parse_variant(an_variant);
                const ParamStore params = load_checkpoint(an_ckpt);
                EvalOptions opts;
                opts.threads = env_threads();
                const EvalReport report = evaluate(params, variant, ds, an_split, opts);
                const CategoryReport cats = category_report(report, stats);
                table += report_table(report) + report_table(cats);
                j["eval"] = json::parse(report_json(report, &cats, &stats));
            }

            fs::create_directories(an_out);
            write_text(fs::path(an_out) / "analysis.txt", table);
            write_text(fs::path(an_out) / "analysis.json", j.dump(2) + "\n");
            std::cout << table;
        } else if (*cmd_export) {
            const Dataset ds = load_dataset(ex_data);
            const ParamStore params = load_checkpoint(ex_ckpt);
            ExportOptions opts;
            opts.relations = ex_relations;
            export_embeddings_text(params, ds, ex_out, opts);
        } else if (*cmd_grid) {
            json cells = json::array();
            double best_hits10 = -1.0;
            std::string best_tag;
            int cell = 0;
            for (std::size_t dim : grid_dim) {
                for (double lr : grid_lr) {
                    for (int neg : grid_neg) {
                        for (double lambda : grid_lambda) {
                            TrainRun r = grid;
                            r.config.dim = dim;
                            r.config.lr = lr;
                            r.config.negatives = neg;
                            r.config.lambda = lambda;
                            r.tag = "cell_" + std::to_string(cell++);
                            const json manifest = run_training(r);
                            cells.push_back(manifest);
                            const double h10 = manifest["best_valid_hits10"].get<double>();
                            std::cout << r.tag << ": dim=" << dim << " lr=" << lr << " neg=" << neg
                                      << " lambda=" << lambda << " valid_hits10=" << h10 << '\n';
                            if (h10 > best_hits10) {
                                best_hits10 = h10;
                                best_tag = r.tag;
                            }
                        }
                    }
                }
            }
            json summary = {{"cells", cells}, {"best_cell", best_tag}, {"best_valid_hits10", best_hits10}};
            fs::create_directories(grid.out_dir);
            write_text(fs::path(grid.out_dir) / "grid_summary.json", summary.dump(2) + "\n");
            std::cout << "best: " << best_tag << " (valid Hits@10 " << best_hits10 << ")\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
