#include "refcat/hash.h"
#include "refcat/io.h"
#include "refcat/synth.h"
#include "refcat/tsv.h"

#include <doctest.h>

#include <filesystem>

using namespace refcat;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "refcat-tsvio-test";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE("tsv_io") {

TEST_CASE("escape round-trips arbitrary bytes") {
    synth::Rng rng(601);
    for (int i = 0; i < 5000; ++i) {
        std::string raw;
        int len = rng.irange(0, 50);
        for (int c = 0; c < len; ++c) raw += static_cast<char>(rng.u64(256));
        std::string escaped = tsv::escape(raw);
        CHECK(escaped.find('\t') == std::string::npos);
        CHECK(escaped.find('\n') == std::string::npos);
        CHECK(tsv::unescape(escaped) == raw);
    }
}

TEST_CASE("key and field splitting") {
    CHECK(tsv::key_of("key\trest\tmore") == "key");
    CHECK(tsv::key_of("nokey") == "nokey");
    CHECK(tsv::rest_of("key\trest\tmore") == "rest\tmore");
    auto fields = tsv::split_fields("a\tb\tc");
    REQUIRE(fields.size() == 3);
    CHECK(fields[0] == "a");
    CHECK(fields[2] == "c");
}

TEST_CASE("plain and gzip line files round-trip") {
    auto dir = temp_dir();
    synth::Rng rng(602);
    std::vector<std::string> lines;
    for (int i = 0; i < 2000; ++i) {
        std::string l;
        int len = rng.irange(0, 120);
        for (int c = 0; c < len; ++c) {
            char ch = static_cast<char>(rng.u64(256));
            if (ch == '\n') ch = ' '; // line streams are newline-delimited
            l += ch;
        }
        lines.push_back(l);
    }
    for (const char* name : {"roundtrip.txt", "roundtrip.txt.gz"}) {
        auto path = dir / name;
        auto sink = open_line_sink(path);
        for (const auto& l : lines) sink->write(l);
        sink->close();
        auto source = open_line_source(path);
        std::string line;
        size_t i = 0;
        while (source->next(line)) {
            REQUIRE(i < lines.size());
            std::string expected = lines[i];
            if (!expected.empty() && expected.back() == '\r') expected.pop_back();
            CHECK(line == expected);
            ++i;
        }
        CHECK(i == lines.size());
    }
}

TEST_CASE("atomic writer leaves no partial file") {
    auto dir = temp_dir();
    auto target = dir / "atomic.txt";
    std::filesystem::remove(target);
    {
        AtomicFileWriter writer(target);
        writer.sink().write("half");
        writer.abort();
    }
    CHECK_FALSE(std::filesystem::exists(target));
    {
        AtomicFileWriter writer(target);
        writer.sink().write("whole");
        writer.commit();
    }
    CHECK(std::filesystem::exists(target));
}

TEST_CASE("sha256 known value") {
    // Echoes the FIPS 180 test vector for "abc".
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

} // TEST_SUITE
