#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "quatkg/data.hpp"
#include "helpers.hpp"

using namespace quatkg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("quatkg_data_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& file, const std::string& content) {
    std::ofstream out(file);
    out << content;
}

} // namespace

TEST_CASE("load_dataset small counts") {
    const auto dir = temp_dir("small");
    write_file(dir / "train.txt", "a\tr1\tb\nb\tr1\ta\na\tr1\ta\n");
    write_file(dir / "valid.txt", "");
    write_file(dir / "test.txt", "");
    const Dataset ds = load_dataset(dir);
    CHECK(ds.num_entities() == 2);
    CHECK(ds.num_relations() == 1);
    CHECK(ds.train.size() == 3);
    CHECK(ds.filter.size() == 3);
}

TEST_CASE("load_dataset drops duplicates with a warning count") {
    const auto dir = temp_dir("dup");
    write_file(dir / "train.txt", "a\tr1\tb\na\tr1\tb\n");
    write_file(dir / "valid.txt", "");
    write_file(dir / "test.txt", "");
    const Dataset ds = load_dataset(dir);
    CHECK(ds.train.size() == 1);
    CHECK(ds.duplicates_dropped == 1);
}

TEST_CASE("load_dataset id assignment is first-appearance over train, valid, test") {
    const auto dir = temp_dir("order");
    write_file(dir / "train.txt", "x\trel\ty\n");
    write_file(dir / "valid.txt", "y\trel\tz\n");
    write_file(dir / "test.txt", "w\trel2\tx\n");
    const Dataset ds = load_dataset(dir);
    CHECK(ds.entity_ids.at("x") == 0);
    CHECK(ds.entity_ids.at("y") == 1);
    CHECK(ds.entity_ids.at("z") == 2);
    CHECK(ds.entity_ids.at("w") == 3);
    CHECK(ds.relation_ids.at("rel") == 0);
    CHECK(ds.relation_ids.at("rel2") == 1);
    CHECK(ds.unseen_in_train == 3); // z, w, rel2
}

TEST_CASE("load_dataset errors") {
    const auto dir = temp_dir("err");
    write_file(dir / "train.txt", "a\tr\tb\n");
    write_file(dir / "valid.txt", "");
    CHECK_THROWS_AS(load_dataset(dir), IoError); // test.txt missing

    write_file(dir / "test.txt", "only_two\tfields\n");
    CHECK_THROWS_AS(load_dataset(dir), ParseError);
    try {
        load_dataset(dir);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":1") != std::string::npos);
    }
}

TEST_CASE("filter contains every split triple") {
    const auto kg = testutil::random_kg(20, 3, 50, 10, 10, 99);
    const auto dir = testutil::write_kg(kg, temp_dir("filter"));
    const Dataset ds = load_dataset(dir);
    for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
        for (const Triple& t : *split) CHECK(ds.known(t));
    }
    CHECK(ds.filter.size() <= ds.train.size() + ds.valid.size() + ds.test.size());
}

TEST_CASE("dictionary round-trip preserves id assignment") {
    const auto kg = testutil::random_kg(15, 2, 30, 5, 5, 7);
    const auto dir = testutil::write_kg(kg, temp_dir("dict"));
    const Dataset ds = load_dataset(dir);
    export_dictionaries(ds, dir);
    const auto entities = read_dictionary(dir / "entities.tsv");
    const auto relations = read_dictionary(dir / "relations.tsv");
    CHECK(entities == ds.entity_labels);
    CHECK(relations == ds.relation_labels);
}

TEST_CASE("relation_cardinality hand counts") {
    Dataset ds;
    ds.entity_labels = {"a", "b", "x", "y"};
    ds.relation_labels = {"m1", "single", "mm"};
    ds.train = {
        {0, 0, 2}, {1, 0, 2},                         // M-1: eta_h=2, eta_t=1
        {0, 1, 3},                                    // 1-1: single triple
        {0, 2, 2}, {0, 2, 3}, {1, 2, 2}, {1, 2, 3},   // M-M: eta_h=2, eta_t=2
    };
    const auto stats = relation_cardinality(ds);
    REQUIRE(stats.size() == 3);

    CHECK(stats[0].eta_h == 2.0);
    CHECK(stats[0].eta_t == 1.0);
    CHECK(stats[0].category == RelationCategory::ManyToOne);

    CHECK(stats[1].eta_h == 1.0);
    CHECK(stats[1].eta_t == 1.0);
    CHECK(stats[1].category == RelationCategory::OneToOne);

    CHECK(stats[2].eta_h == 2.0);
    CHECK(stats[2].eta_t == 2.0);
    CHECK(stats[2].category == RelationCategory::ManyToMany);
}

TEST_CASE("relation absent from train is undefined") {
    Dataset ds;
    ds.entity_labels = {"a", "b"};
    ds.relation_labels = {"seen", "unseen"};
    ds.train = {{0, 0, 1}};
    ds.test = {{0, 1, 1}};
    const auto stats = relation_cardinality(ds);
    CHECK(stats[0].defined);
    CHECK_FALSE(stats[1].defined);
}

TEST_CASE("every train relation lands in exactly one category") {
    const auto kg = testutil::random_kg(30, 6, 120, 0, 0, 123);
    const Dataset ds = testutil::to_dataset(kg);
    for (const auto& s : relation_cardinality(ds)) {
        if (!s.defined) continue;
        const int c = static_cast<int>(s.category);
        CHECK(c >= 0);
        CHECK(c < 4);
    }
}
