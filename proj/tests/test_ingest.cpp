#include "refcat/ingest.h"
#include "refcat/synth.h"

#include <doctest.h>
#include <json.hpp>

using namespace refcat;

TEST_SUITE("ingest") {

TEST_CASE("release parsing normalizes identifiers") {
    auto r = parse_release(R"({"ident":"w1","title":"A","ext_ids":{"doi":"10.1234/X"}})");
    REQUIRE(r.has_value());
    CHECK(r->ident == "w1");
    CHECK(r->ext_ids.at("doi") == "10.1234/x");
}

TEST_CASE("out-of-range year dropped") {
    auto r = parse_release(R"({"ident":"w2","title":"B","year":1200})");
    REQUIRE(r.has_value());
    CHECK_FALSE(r->year.has_value());

    auto future = parse_release(R"({"ident":"w3","title":"C","year":3000})");
    REQUIRE(future.has_value());
    CHECK_FALSE(future->year.has_value());

    auto fine = parse_release(R"({"ident":"w4","title":"D","year":1999})");
    REQUIRE(fine.has_value());
    CHECK(fine->year == 1999);
}

TEST_CASE("rejects") {
    CHECK_FALSE(parse_release("{not json").has_value());
    CHECK_FALSE(parse_release(R"({"title":"no ident"})").has_value());
    CHECK_FALSE(parse_release("[1,2,3]").has_value());
    CHECK_FALSE(parse_raw_reference(R"({"source_ident":"w1","biblio":{}})").has_value());
    CHECK_FALSE(parse_raw_reference(R"({"biblio":{"title":"x"}})").has_value());
}

TEST_CASE("reference field aliases") {
    auto r = parse_raw_reference(
        R"({"source_ident":"w1","index":0,"biblio":{"doi":"10.2345/Y"}})");
    REQUIRE(r.has_value());
    CHECK(r->ref_index == 0);
    CHECK(r->biblio.doi == "10.2345/y");

    auto aliased = parse_raw_reference(
        R"({"release_ident":"w2","source":"grobid","biblio":{"raw":"Smith 1999. Title."}})");
    REQUIRE(aliased.has_value());
    CHECK(aliased->source_ident == "w2");
    CHECK(aliased->provenance == "grobid");
    CHECK(aliased->biblio.unstructured == "Smith 1999. Title.");

    // fatcat-style contribs on the release side
    auto rel = parse_release(
        R"({"ident":"w5","title":"T","contribs":[{"raw_name":"Jane Doe"}],"release_year":2001})");
    REQUIRE(rel.has_value());
    CHECK(rel->authors == std::vector<std::string>{"Jane Doe"});
    CHECK(rel->year == 2001);
}

TEST_CASE("missing ref_index assigned by order of appearance per source") {
    std::vector<std::string> lines;
    for (int i = 0; i < 10; ++i)
        lines.push_back(R"({"source_ident":"w1","biblio":{"title":"ref number )" +
                        std::to_string(i) + R"("}})");
    lines.push_back(R"({"source_ident":"w2","biblio":{"title":"other source"}})");
    VectorLineSource in(lines);
    VectorLineSink out;
    auto stats = ingest_references(in, out);
    CHECK(stats.accepted == 11);
    CHECK(stats.rejected == 0);
    for (int i = 0; i < 10; ++i) {
        auto r = raw_reference_from_json_line(out.lines[static_cast<size_t>(i)]);
        CHECK(r.ref_index == i);
        CHECK(r.source_ident == "w1");
    }
    CHECK(raw_reference_from_json_line(out.lines[10]).ref_index == 0);
}

TEST_CASE("accepted plus rejected equals total, against a line-validity oracle") {
    // 100 synthetic lines, 3 malformed. The oracle is a plain JSON validity
    // check per line, independent of the record parser.
    synth::Rng rng(501);
    std::vector<std::string> lines;
    for (int i = 0; i < 100; ++i) {
        if (i == 17 || i == 42 || i == 93)
            lines.push_back("{broken json line " + std::to_string(i));
        else
            lines.push_back(R"({"ident":"w)" + std::to_string(i) + R"(","title":"t )" +
                            std::to_string(rng.u64(1000)) + R"("})");
    }
    uint64_t oracle_invalid = 0;
    for (const auto& l : lines)
        if (!nlohmann::json::accept(l)) ++oracle_invalid;
    CHECK(oracle_invalid == 3);

    VectorLineSource in(lines);
    VectorLineSink out;
    auto stats = ingest_releases(in, out);
    CHECK(stats.accepted == 97);
    CHECK(stats.rejected == oracle_invalid);
    CHECK(stats.total() == 100);
    CHECK(out.lines.size() == 97);
}

TEST_CASE("serialization round-trips") {
    synth::Rng rng(502);
    auto corpus = synth::make_corpus({.releases = 50, .refs = 120, .seed = 99});
    for (const auto& rel : corpus.releases) {
        auto parsed = parse_release(to_json_line(rel));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == rel);
    }
    for (const auto& ref : corpus.refs) {
        auto parsed = parse_raw_reference(to_json_line(ref));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == ref);
    }
}

TEST_CASE("wikipedia rows") {
    auto row = parse_wikipedia_row(
        R"({"article_title":"Graph theory","cited":{"doi":"10.1000/GT","title":"On Graphs"}})");
    REQUIRE(row.has_value());
    CHECK(row->article_title == "Graph theory");
    CHECK(row->cited.doi == "10.1000/gt");
    CHECK_FALSE(parse_wikipedia_row(R"({"cited":{"title":"x"}})").has_value());

    auto round = wikipedia_row_from_json_line(to_json_line(*row));
    CHECK(round == *row);
}

} // TEST_SUITE
